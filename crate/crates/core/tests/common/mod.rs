#![allow(dead_code)]

use std::path::PathBuf;

use fracnd::model::{CMatrix, RMatrix};
use fracnd::HybridRoesserModel;
use num_complex::Complex64;
use proptest::prelude::*;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

pub fn load(name: &str) -> HybridRoesserModel {
    let text = std::fs::read_to_string(data(name)).unwrap();
    fracnd::format::parse_model(&text).unwrap()
}

pub fn example1() -> HybridRoesserModel {
    load("example1.json")
}

pub fn example2() -> HybridRoesserModel {
    load("example2.json")
}

pub fn scalar(nu: f64, r: usize, a: f64) -> HybridRoesserModel {
    HybridRoesserModel::new(nu, vec![1], r, RMatrix::from_element(1, 1, a)).unwrap()
}

/// Laplace expansion along the first row.
pub fn cofactor_det(m: &CMatrix) -> Complex64 {
    let n = m.nrows();
    if n == 1 {
        return m[(0, 0)];
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for col in 0..n {
        let minor = m.clone().remove_row(0).remove_column(col);
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        acc += m[(0, col)] * cofactor_det(&minor) * sign;
    }
    acc
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Random model with k dimensions of size 1..=max_block and entries in [-s, s].
pub fn arb_model(
    max_k: usize,
    max_block: usize,
    s: f64,
) -> impl Strategy<Value = HybridRoesserModel> {
    (1..=max_k)
        .prop_flat_map(move |k| (prop::collection::vec(1..=max_block, k), 0..=k, 0.1f64..=1.0))
        .prop_flat_map(move |(dims, r, nu)| {
            let n: usize = dims.iter().sum();
            prop::collection::vec(-s..=s, n * n).prop_map(move |a| {
                HybridRoesserModel::new(nu, dims.clone(), r, RMatrix::from_row_slice(n, n, &a))
                    .unwrap()
            })
        })
}

/// Random two-dimensional model (one continuous, one discrete block).
pub fn arb_1p1(max_block: usize, s: f64) -> impl Strategy<Value = HybridRoesserModel> {
    (1..=max_block, 1..=max_block, 0.1f64..=1.0).prop_flat_map(move |(n1, n2, nu)| {
        let n = n1 + n2;
        prop::collection::vec(-s..=s, n * n).prop_map(move |a| {
            HybridRoesserModel::new(nu, vec![n1, n2], 1, RMatrix::from_row_slice(n, n, &a)).unwrap()
        })
    })
}
