//! Hybrid continuous-discrete fractional-order Roesser model.
//!
//! The state is split into `k` local sub-vectors of sizes `dims[0..k]`. The
//! first `r` blocks evolve through a Caputo derivative of order `nu` in their
//! own continuous variable; the remaining blocks advance by unit shifts in a
//! discrete index. Everything the stability machinery needs from the model is
//! the state matrix `A` and the partition; `B`, `C`, `D` only feed
//! [`HybridRoesserModel::transfer_eval`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{mismatch, out_of_range, Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Reciprocal condition number below which `H(rho) - A` counts as singular.
pub const SINGULAR_RCOND: f64 = 1e-12;

/// One frequency variable per dimension of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoint(pub Vec<Complex64>);

impl ComplexPoint {
    pub fn new(rho: Vec<Complex64>) -> Self {
        Self(rho)
    }

    pub fn from_real(rho: &[f64]) -> Self {
        Self(rho.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridRoesserModel {
    nu: f64,
    dims: Vec<usize>,
    r: usize,
    a: RMatrix,
    b: Option<RMatrix>,
    c: Option<RMatrix>,
    d: Option<RMatrix>,
}

impl HybridRoesserModel {
    /// Builds a model without input/output matrices.
    pub fn new(nu: f64, dims: Vec<usize>, r: usize, a: RMatrix) -> Result<Self> {
        Self::with_io(nu, dims, r, a, None, None, None)
    }

    pub fn with_io(
        nu: f64,
        dims: Vec<usize>,
        r: usize,
        a: RMatrix,
        b: Option<RMatrix>,
        c: Option<RMatrix>,
        d: Option<RMatrix>,
    ) -> Result<Self> {
        let m = Self {
            nu,
            dims,
            r,
            a,
            b,
            c,
            d,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks every structural invariant. Each failure names the offending field.
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(out_of_range(
                "nu",
                format!("need 0 < nu <= 1, got {}", self.nu),
            ));
        }
        if self.dims.is_empty() {
            return Err(mismatch("dims", "at least one dimension is required"));
        }
        if let Some(pos) = self.dims.iter().position(|&d| d == 0) {
            return Err(mismatch("dims", format!("dims[{pos}] must be positive")));
        }
        if self.r > self.dims.len() {
            return Err(out_of_range(
                "r",
                format!("need 0 <= r <= k = {}, got {}", self.dims.len(), self.r),
            ));
        }
        let n = self.n();
        if self.a.nrows() != n || self.a.ncols() != n {
            return Err(mismatch(
                "A",
                format!(
                    "expected {n}x{n} from dims, got {}x{}",
                    self.a.nrows(),
                    self.a.ncols()
                ),
            ));
        }
        if self.a.iter().any(|v| !v.is_finite()) {
            return Err(out_of_range("A", "entries must be finite"));
        }
        let p = self.b.as_ref().map(|b| b.ncols());
        let l = self.c.as_ref().map(|c| c.nrows());
        if let Some(b) = &self.b {
            if b.nrows() != n {
                return Err(mismatch(
                    "B",
                    format!("expected {n} rows, got {}", b.nrows()),
                ));
            }
        }
        if let Some(c) = &self.c {
            if c.ncols() != n {
                return Err(mismatch(
                    "C",
                    format!("expected {n} columns, got {}", c.ncols()),
                ));
            }
        }
        if let Some(d) = &self.d {
            if let Some(l) = l {
                if d.nrows() != l {
                    return Err(mismatch(
                        "D",
                        format!("expected {l} rows, got {}", d.nrows()),
                    ));
                }
            }
            if let Some(p) = p {
                if d.ncols() != p {
                    return Err(mismatch(
                        "D",
                        format!("expected {p} columns, got {}", d.ncols()),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of dimensions `k`.
    pub fn k(&self) -> usize {
        self.dims.len()
    }

    /// Number of continuous (fractional) dimensions.
    pub fn r(&self) -> usize {
        self.r
    }

    /// Total state size `n`.
    pub fn n(&self) -> usize {
        self.dims.iter().sum()
    }

    /// State size of the continuous part.
    pub fn n_continuous(&self) -> usize {
        self.dims[..self.r].iter().sum()
    }

    /// Row/column offset of block `i`.
    pub fn offset(&self, i: usize) -> usize {
        self.dims[..i].iter().sum()
    }

    pub fn a(&self) -> &RMatrix {
        &self.a
    }

    pub fn b(&self) -> Option<&RMatrix> {
        self.b.as_ref()
    }

    pub fn c(&self) -> Option<&RMatrix> {
        self.c.as_ref()
    }

    pub fn d(&self) -> Option<&RMatrix> {
        self.d.as_ref()
    }

    pub fn a_c(&self) -> RMatrix {
        let nc = self.n_continuous();
        self.a.view((0, 0), (nc, nc)).into_owned()
    }

    pub fn a_cd(&self) -> RMatrix {
        let nc = self.n_continuous();
        self.a.view((0, nc), (nc, self.n() - nc)).into_owned()
    }

    pub fn a_dc(&self) -> RMatrix {
        let nc = self.n_continuous();
        self.a.view((nc, 0), (self.n() - nc, nc)).into_owned()
    }

    pub fn a_d(&self) -> RMatrix {
        let nc = self.n_continuous();
        let nd = self.n() - nc;
        self.a.view((nc, nc), (nd, nd)).into_owned()
    }

    /// Same partition and order with `A` replaced by its transpose.
    pub fn transposed(&self) -> Self {
        Self {
            a: self.a.transpose(),
            ..self.clone()
        }
    }

    /// Spectral norm of `A`; used to scale feasibility margins.
    pub fn a_norm(&self) -> f64 {
        self.a.clone().singular_values().max()
    }

    /// Maximum absolute row sum of `A`.
    pub fn a_norm_inf(&self) -> f64 {
        self.a
            .row_iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Non-fatal remarks about the model.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.nu == 1.0 {
            out.push("nu = 1: integer-order continuous dimensions".to_string());
        }
        if self.r == self.k() && self.a.determinant().abs() < 1e-12 * (1.0 + self.a_norm()) {
            out.push("det(A) = 0 for a purely continuous model".to_string());
        }
        out
    }

    fn check_point(&self, p: &ComplexPoint) -> Result<()> {
        if p.len() != self.k() {
            return Err(mismatch(
                "rho",
                format!("expected {} coordinates, got {}", self.k(), p.len()),
            ));
        }
        Ok(())
    }

    /// `H(rho) = diag(rho_1 I_{n_1}, ..., rho_k I_{n_k})`.
    pub fn h_of_rho(&self, p: &ComplexPoint) -> Result<CMatrix> {
        self.check_point(p)?;
        let diag: Vec<Complex64> = self
            .dims
            .iter()
            .zip(p.coords())
            .flat_map(|(&ni, &rho)| std::iter::repeat_n(rho, ni))
            .collect();
        Ok(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
    }

    fn h_minus_a(&self, p: &ComplexPoint) -> Result<CMatrix> {
        let mut m = self.h_of_rho(p)?;
        m -= self.a.map(|v| Complex64::new(v, 0.0));
        Ok(m)
    }

    /// Characteristic function `det(H(rho) - A)` via partially pivoted LU.
    pub fn delta(&self, p: &ComplexPoint) -> Result<Complex64> {
        Ok(self.h_minus_a(p)?.lu().determinant())
    }

    /// `C (H(rho) - A)^{-1} B + D`, solved rather than inverted.
    pub fn transfer_eval(&self, p: &ComplexPoint) -> Result<CMatrix> {
        let to_c = |m: &RMatrix| m.map(|v| Complex64::new(v, 0.0));
        let b = self.b.as_ref().ok_or(Error::MissingMatrix("B"))?;
        let c = self.c.as_ref().ok_or(Error::MissingMatrix("C"))?;
        let d = self.d.as_ref().ok_or(Error::MissingMatrix("D"))?;
        if c.nrows() != d.nrows() || b.ncols() != d.ncols() {
            return Err(mismatch("D", "shape inconsistent with B and C"));
        }
        let m = self.h_minus_a(p)?;
        let sv = m.clone().singular_values();
        let smax = sv.max();
        let rcond = if smax > 0.0 { sv.min() / smax } else { 0.0 };
        if rcond < SINGULAR_RCOND {
            return Err(Error::SingularAtPoint { rcond });
        }
        let x = m
            .lu()
            .solve(&to_c(b))
            .ok_or(Error::SingularAtPoint { rcond })?;
        Ok(to_c(c) * x + to_c(d))
    }
}
