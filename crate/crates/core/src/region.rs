//! Point-clustering descriptors for the stability region.
//!
//! Each dimension `i` owns a pair of 2x2 Hermitian matrices `(P_i, Q_i)`; the
//! set `D_i` collects the points `s` with `F_{P_i}(s) >= 0` and
//! `F_{Q_i}(s) >= 0`, where `F_X(s) = [s 1]^* X [s 1]`. The region is the
//! Cartesian product of the `D_i`. Continuous dimensions describe the sector
//! `|arg s| <= pi nu / 2`, discrete dimensions the closed exterior of the
//! unit disc.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, out_of_range, Error, Result};
use crate::model::{ComplexPoint, HybridRoesserModel};

pub type Herm2 = Matrix2<Complex64>;

const HERMITIAN_TOL: f64 = 1e-14;
const RESIDUE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimensionKind {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorPair {
    pub p: Herm2,
    pub q: Herm2,
    pub kind: DimensionKind,
    /// Fractional order; only meaningful for continuous pairs.
    pub nu: f64,
}

impl DescriptorPair {
    pub fn f_p(&self, s: Complex64) -> f64 {
        quadratic_form(&self.p, s)
    }

    pub fn f_q(&self, s: Complex64) -> f64 {
        quadratic_form(&self.q, s)
    }

    /// Membership in the closed set `D_i` with absolute slack `tol`.
    pub fn contains(&self, s: Complex64, tol: f64) -> bool {
        self.f_p(s) >= -tol && self.f_q(s) >= -tol
    }
}

/// Sector descriptor for a continuous dimension of order `nu`.
pub fn continuous_pq(nu: f64) -> Result<DescriptorPair> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(out_of_range("nu", format!("need 0 < nu <= 1, got {nu}")));
    }
    let half = std::f64::consts::FRAC_PI_2 * nu;
    let (sin, cos) = half.sin_cos();
    let zero = Complex64::new(0.0, 0.0);
    let p12 = Complex64::new(sin, -cos);
    let q12 = Complex64::new(sin, cos);
    Ok(DescriptorPair {
        p: Herm2::new(zero, p12, p12.conj(), zero),
        q: Herm2::new(zero, q12, q12.conj(), zero),
        kind: DimensionKind::Continuous,
        nu,
    })
}

/// Unit-disc exterior descriptor for a discrete dimension.
pub fn discrete_pq() -> DescriptorPair {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    DescriptorPair {
        p: Herm2::new(one, zero, zero, -one),
        q: Herm2::zeros(),
        kind: DimensionKind::Discrete,
        nu: 1.0,
    }
}

fn is_hermitian(x: &Herm2) -> bool {
    let scale = x.iter().map(|v| v.norm()).fold(1.0, f64::max);
    (0..2).all(|i| (0..2).all(|j| (x[(i, j)] - x[(j, i)].conj()).norm() <= HERMITIAN_TOL * scale))
}

fn quadratic_form_complex(x: &Herm2, s: Complex64) -> Complex64 {
    let sc = s.conj();
    let one = Complex64::new(1.0, 0.0);
    sc * (x[(0, 0)] * s + x[(0, 1)]) + one * (x[(1, 0)] * s + x[(1, 1)])
}

fn quadratic_form(x: &Herm2, s: Complex64) -> f64 {
    quadratic_form_complex(x, s).re
}

/// `F_X(s) = [s 1]^* X [s 1]` for a 2x2 Hermitian `X`.
pub fn f_quadratic(x: &Herm2, s: Complex64) -> Result<f64> {
    if !is_hermitian(x) {
        return Err(Error::NotHermitian("X"));
    }
    let v = quadratic_form_complex(x, s);
    let scale = x.iter().map(|e| e.norm()).fold(1.0, f64::max) * (1.0 + s.norm_sqr());
    if v.im.abs() > RESIDUE_TOL * scale {
        return Err(Error::NotHermitian("X"));
    }
    Ok(v.re)
}

/// Default membership slack for a coordinate: grows with `|s|^2` like the forms do.
pub fn default_tol(s: Complex64) -> f64 {
    1e-10 * (1.0 + s.norm_sqr())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionDescriptor {
    pub pairs: Vec<DescriptorPair>,
}

impl RegionDescriptor {
    /// First `r` pairs continuous at the model's order, the rest discrete.
    pub fn for_model(m: &HybridRoesserModel) -> Self {
        let cont = continuous_pq(m.nu()).expect("validated model has nu in range");
        let pairs = (0..m.k())
            .map(|i| {
                if i < m.r() {
                    cont.clone()
                } else {
                    discrete_pq()
                }
            })
            .collect();
        Self { pairs }
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    /// Number of leading continuous pairs.
    pub fn r(&self) -> usize {
        self.pairs
            .iter()
            .take_while(|p| p.kind == DimensionKind::Continuous)
            .count()
    }

    fn check_len(&self, p: &ComplexPoint) -> Result<()> {
        if p.len() != self.k() {
            return Err(mismatch(
                "rho",
                format!("expected {} coordinates, got {}", self.k(), p.len()),
            ));
        }
        Ok(())
    }

    /// Membership with one absolute slack shared by every coordinate.
    pub fn in_region(&self, p: &ComplexPoint, tol: f64) -> Result<bool> {
        self.check_len(p)?;
        Ok(self
            .pairs
            .iter()
            .zip(p.coords())
            .all(|(pair, &s)| pair.contains(s, tol)))
    }

    /// Membership with the per-coordinate default slack [`default_tol`].
    pub fn contains(&self, p: &ComplexPoint) -> Result<bool> {
        self.check_len(p)?;
        Ok(self
            .pairs
            .iter()
            .zip(p.coords())
            .all(|(pair, &s)| pair.contains(s, default_tol(s))))
    }
}

pub fn region_for_model(m: &HybridRoesserModel) -> RegionDescriptor {
    RegionDescriptor::for_model(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RMatrix;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn continuous_pairs() {
        let d = continuous_pq(1.0).unwrap();
        let swap = Herm2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        assert!((d.p - swap).iter().all(|v| v.norm() < 1e-15));
        assert!((d.q - swap).iter().all(|v| v.norm() < 1e-15));

        let d = continuous_pq(0.5).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(d.p[(0, 1)].re, h, epsilon = 1e-15);
        assert_relative_eq!(d.p[(0, 1)].im, -h, epsilon = 1e-15);
        assert_eq!(d.p[(0, 0)], c(0.0, 0.0));
        assert_eq!(d.p[(1, 1)], c(0.0, 0.0));

        let d = continuous_pq(0.9).unwrap();
        let th = 0.45 * std::f64::consts::PI;
        assert_eq!(d.p[(0, 1)], c(th.sin(), -th.cos()));
        assert_eq!(d.q[(0, 1)], c(th.sin(), th.cos()));
        assert_eq!(d.p[(1, 0)], d.p[(0, 1)].conj());

        assert!(continuous_pq(0.0).is_err());
        assert!(continuous_pq(1.2).is_err());
    }

    #[test]
    fn discrete_pair() {
        let d = discrete_pq();
        assert_eq!(
            d.p,
            Herm2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
        );
        assert_eq!(d.q, Herm2::zeros());
        for s in [c(2.0, 0.0), c(0.3, -0.4), c(-1.5, 2.5)] {
            assert_relative_eq!(d.f_p(s), s.norm_sqr() - 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn f_quadratic_examples() {
        let d = discrete_pq();
        assert_eq!(f_quadratic(&d.p, c(2.0, 0.0)).unwrap(), 3.0);
        let p = continuous_pq(1.0).unwrap().p;
        assert_relative_eq!(f_quadratic(&p, c(0.7, -3.0)).unwrap(), 1.4, epsilon = 1e-14);
        assert_eq!(f_quadratic(&Herm2::zeros(), c(5.0, 1.0)).unwrap(), 0.0);
        let bad = Herm2::new(c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0));
        assert_eq!(
            f_quadratic(&bad, c(1.0, 0.0)),
            Err(Error::NotHermitian("X"))
        );
    }

    #[test]
    fn region_layout() {
        let a = RMatrix::zeros(4, 4);
        let m = HybridRoesserModel::new(0.5, vec![2, 2], 1, a).unwrap();
        let d = region_for_model(&m);
        assert_eq!(d.pairs[0], continuous_pq(0.5).unwrap());
        assert_eq!(d.pairs[1], discrete_pq());
        assert_eq!(d.r(), 1);

        let m = HybridRoesserModel::new(0.5, vec![1, 1], 0, RMatrix::zeros(2, 2)).unwrap();
        assert!(region_for_model(&m)
            .pairs
            .iter()
            .all(|p| p.kind == DimensionKind::Discrete));
        let m = HybridRoesserModel::new(0.5, vec![1, 1], 2, RMatrix::zeros(2, 2)).unwrap();
        assert!(region_for_model(&m)
            .pairs
            .iter()
            .all(|p| p.kind == DimensionKind::Continuous));
    }

    #[test]
    fn membership_examples() {
        let m = HybridRoesserModel::new(0.5, vec![2, 2], 1, RMatrix::zeros(4, 4)).unwrap();
        let d = region_for_model(&m);
        assert!(d.contains(&ComplexPoint::from_real(&[1.0, 1.0])).unwrap());
        assert!(!d
            .contains(&ComplexPoint::new(vec![c(0.0, 1.0), c(2.0, 0.0)]))
            .unwrap());
        assert!(!d.contains(&ComplexPoint::from_real(&[1.0, 0.5])).unwrap());
        // the origin sits in the continuous sector
        assert!(d
            .in_region(&ComplexPoint::from_real(&[0.0, 1.0]), 0.0)
            .unwrap());
        assert!(d.contains(&ComplexPoint::from_real(&[1.0])).is_err());
    }
}
