//! LMI stability certificates.
//!
//! A certificate consists of Hermitian blocks `U_i` (one per dimension), `V_i`
//! (one per continuous dimension) and a multiplier. With `G` assembled from
//! the region descriptors, three sufficient conditions are supported:
//!
//! ```text
//! theorem2:    G + [I  -A]^* J [I  -A]        < 0
//! corollary1:  G + [I; -A]  J [I; -A]^*       < 0
//! corollary2:  G + Sym([I; -A] R [I  I])      < 0
//! ```
//!
//! together with `U_i > 0` and `V_i > 0`. Discrete dimensions have `Q_i = 0`,
//! so they carry no `V_i`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{mismatch, Error, Result};
use crate::model::{CMatrix, HybridRoesserModel, RMatrix};
use crate::region::RegionDescriptor;
use crate::sdpcore::{
    self, LmiConstraint, LmiFeasibilityProblem, SdpError, Sense, Solution, SolverOptions,
    VariableBlock,
};

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateForm {
    Theorem2,
    Corollary1,
    Corollary2,
}

impl CertificateForm {
    pub const ALL: [CertificateForm; 3] = [
        CertificateForm::Theorem2,
        CertificateForm::Corollary1,
        CertificateForm::Corollary2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CertificateForm::Theorem2 => "theorem2",
            CertificateForm::Corollary1 => "corollary1",
            CertificateForm::Corollary2 => "corollary2",
        }
    }

    fn uses_r(self) -> bool {
        self == CertificateForm::Corollary2
    }
}

impl fmt::Display for CertificateForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CertificateForm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| {
                format!("unknown form `{s}` (expected theorem2, corollary1 or corollary2)")
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Multiplier {
    /// Hermitian `n x n`, used by theorem2 and corollary1.
    J(CMatrix),
    /// General complex `n x n`, used by corollary2.
    R(CMatrix),
}

impl Multiplier {
    pub fn matrix(&self) -> &CMatrix {
        match self {
            Multiplier::J(m) | Multiplier::R(m) => m,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    pub form: CertificateForm,
    pub u: Vec<CMatrix>,
    pub v: Vec<CMatrix>,
    pub multiplier: Multiplier,
}

impl StabilityCertificate {
    /// Multiplies every block by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let s = |m: &CMatrix| m * Complex64::new(c, 0.0);
        Self {
            form: self.form,
            u: self.u.iter().map(s).collect(),
            v: self.v.iter().map(s).collect(),
            multiplier: match &self.multiplier {
                Multiplier::J(j) => Multiplier::J(s(j)),
                Multiplier::R(r) => Multiplier::R(s(r)),
            },
        }
    }

    /// Checks block counts and sizes against the model.
    pub fn check_shape(&self, m: &HybridRoesserModel) -> Result<()> {
        if self.u.len() != m.k() {
            return Err(mismatch(
                "U",
                format!("expected {} blocks, got {}", m.k(), self.u.len()),
            ));
        }
        if self.v.len() != m.r() {
            return Err(mismatch(
                "V",
                format!("expected {} blocks, got {}", m.r(), self.v.len()),
            ));
        }
        for (i, u) in self.u.iter().enumerate() {
            let ni = m.dims()[i];
            if u.shape() != (ni, ni) {
                return Err(mismatch("U", format!("U{} must be {ni}x{ni}", i + 1)));
            }
        }
        for (i, v) in self.v.iter().enumerate() {
            let ni = m.dims()[i];
            if v.shape() != (ni, ni) {
                return Err(mismatch("V", format!("V{} must be {ni}x{ni}", i + 1)));
            }
        }
        let n = m.n();
        let consistent = matches!(
            (&self.multiplier, self.form.uses_r()),
            (Multiplier::J(_), false) | (Multiplier::R(_), true)
        );
        if !consistent {
            return Err(mismatch(
                "form",
                format!("{} needs the other multiplier kind", self.form),
            ));
        }
        if self.multiplier.matrix().shape() != (n, n) {
            return Err(mismatch("multiplier", format!("must be {n}x{n}")));
        }
        Ok(())
    }
}

fn cplx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn to_complex(a: &RMatrix) -> CMatrix {
    a.map(cplx)
}

pub fn is_hermitian(h: &CMatrix, tol: f64) -> bool {
    if !h.is_square() {
        return false;
    }
    let n = h.nrows();
    (0..n).all(|i| (i..n).all(|j| (h[(i, j)] - h[(j, i)].conj()).norm() <= tol))
}

fn hermitian_scale(h: &CMatrix) -> f64 {
    h.iter().fold(1.0_f64, |m, v| m.max(v.norm()))
}

/// `G` from the region descriptors and the `U`, `V` blocks.
pub fn assemble_g(d: &RegionDescriptor, u: &[CMatrix], v: &[CMatrix]) -> Result<CMatrix> {
    if u.len() != d.k() {
        return Err(mismatch(
            "U",
            format!("expected {} blocks, got {}", d.k(), u.len()),
        ));
    }
    if v.len() != d.r() {
        return Err(mismatch(
            "V",
            format!("expected {} blocks, got {}", d.r(), v.len()),
        ));
    }
    let n: usize = u.iter().map(|b| b.nrows()).sum();
    let mut g = CMatrix::zeros(2 * n, 2 * n);
    let mut off = 0;
    for (i, (pair, ui)) in d.pairs.iter().zip(u).enumerate() {
        let ni = ui.nrows();
        if !ui.is_square() {
            return Err(mismatch("U", format!("U{} is not square", i + 1)));
        }
        let vi = v.get(i);
        if let Some(vi) = vi {
            if vi.shape() != (ni, ni) {
                return Err(mismatch("V", format!("V{} must be {ni}x{ni}", i + 1)));
            }
        }
        let block = |r: usize, c: usize| -> CMatrix {
            let mut b = ui * pair.p[(r, c)];
            if let Some(vi) = vi {
                b += vi * pair.q[(r, c)];
            }
            b
        };
        g.view_mut((off, off), (ni, ni)).copy_from(&block(0, 0));
        g.view_mut((off, n + off), (ni, ni)).copy_from(&block(0, 1));
        g.view_mut((n + off, off), (ni, ni)).copy_from(&block(1, 0));
        g.view_mut((n + off, n + off), (ni, ni))
            .copy_from(&block(1, 1));
        off += ni;
    }
    Ok(g)
}

fn check_g(m: &HybridRoesserModel, g: &CMatrix) -> Result<()> {
    let n2 = 2 * m.n();
    if g.shape() != (n2, n2) {
        return Err(mismatch("G", format!("must be {n2}x{n2}")));
    }
    Ok(())
}

fn check_square(name: &'static str, x: &CMatrix, n: usize) -> Result<()> {
    if x.shape() != (n, n) {
        return Err(mismatch(name, format!("must be {n}x{n}")));
    }
    Ok(())
}

/// `[I; -A]` as a complex `2n x n` matrix.
fn stacked(a: &RMatrix) -> CMatrix {
    let n = a.nrows();
    let mut s = CMatrix::zeros(2 * n, n);
    s.view_mut((0, 0), (n, n)).fill_with_identity();
    s.view_mut((n, 0), (n, n)).copy_from(&to_complex(&(-a)));
    s
}

/// `G + [I -A]^* J [I -A]`.
pub fn z_theorem2(m: &HybridRoesserModel, g: &CMatrix, j: &CMatrix) -> Result<CMatrix> {
    check_g(m, g)?;
    check_square("J", j, m.n())?;
    let row = stacked(&m.a().transpose()).transpose();
    Ok(g + row.adjoint() * j * row)
}

/// `G + [I; -A] J [I; -A]^*`.
pub fn z_corollary1(m: &HybridRoesserModel, g: &CMatrix, j: &CMatrix) -> Result<CMatrix> {
    check_g(m, g)?;
    check_square("J", j, m.n())?;
    let col = stacked(m.a());
    Ok(g + &col * j * col.adjoint())
}

/// `G + S + S^*` with `S = [I; -A] R [I I]`.
pub fn z_corollary2(m: &HybridRoesserModel, g: &CMatrix, r: &CMatrix) -> Result<CMatrix> {
    check_g(m, g)?;
    let n = m.n();
    check_square("R", r, n)?;
    let mut ii = CMatrix::zeros(n, 2 * n);
    ii.view_mut((0, 0), (n, n)).fill_with_identity();
    ii.view_mut((0, n), (n, n)).fill_with_identity();
    let s = stacked(m.a()) * r * ii;
    Ok(g + &s + s.adjoint())
}

/// `Z` for whichever form the certificate carries.
pub fn assemble_z(m: &HybridRoesserModel, cert: &StabilityCertificate) -> Result<CMatrix> {
    let d = RegionDescriptor::for_model(m);
    let g = assemble_g(&d, &cert.u, &cert.v)?;
    match (cert.form, &cert.multiplier) {
        (CertificateForm::Theorem2, Multiplier::J(j)) => z_theorem2(m, &g, j),
        (CertificateForm::Corollary1, Multiplier::J(j)) => z_corollary1(m, &g, j),
        (CertificateForm::Corollary2, Multiplier::R(r)) => z_corollary2(m, &g, r),
        _ => Err(mismatch("form", "multiplier kind does not match the form")),
    }
}

/// `[I -I] G [I -I]^* = G11 - G12 - G12^* + G22`.
pub fn difference_collapse(g: &CMatrix) -> CMatrix {
    let n = g.nrows() / 2;
    let g11 = g.view((0, 0), (n, n));
    let g12 = g.view((0, n), (n, n));
    let g21 = g.view((n, 0), (n, n));
    let g22 = g.view((n, n), (n, n));
    g11 - g12 - g21 + g22
}

/// Real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]`.
pub fn realify(h: &CMatrix) -> Result<RMatrix> {
    if !h.is_square() || !is_hermitian(h, HERMITIAN_TOL * hermitian_scale(h)) {
        return Err(Error::NotHermitian("H"));
    }
    Ok(realify_unchecked(h))
}

fn realify_unchecked(h: &CMatrix) -> RMatrix {
    let m = h.nrows();
    let mut out = RMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let v = h[(i, j)];
            out[(i, j)] = v.re;
            out[(m + i, m + j)] = v.re;
            out[(i, m + j)] = -v.im;
            out[(m + i, j)] = v.im;
        }
    }
    out
}

fn hermitian_eig_bounds(h: &CMatrix) -> Result<(f64, f64)> {
    let real = realify(h)?;
    sdpcore::eig_bounds(&real).map_err(|_| Error::NotHermitian("H"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Required: `lambda_max(Z) < -eps_z`.
    pub eps_z: f64,
    /// Required: every `U_i`, `V_i` eigenvalue `> eps_p`.
    pub eps_p: f64,
}

impl Tolerances {
    pub fn strict(margin: f64) -> Self {
        Self {
            eps_z: margin,
            eps_p: margin,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            eps_z: self.eps_z * c,
            eps_p: self.eps_p * c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub form: CertificateForm,
    pub accepted: bool,
    pub lambda_max_z: f64,
    pub min_eig_u: f64,
    /// `None` when the model has no continuous dimensions.
    pub min_eig_v: Option<f64>,
    pub tolerances: Tolerances,
}

/// Default feasibility margin `1e-6 (1 + |A|_2)`.
pub fn default_margin(m: &HybridRoesserModel) -> f64 {
    1e-6 * (1.0 + m.a_norm())
}

/// Re-derives every eigenvalue bound of the certificate from scratch.
pub fn verify_certificate(
    m: &HybridRoesserModel,
    cert: &StabilityCertificate,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    cert.check_shape(m)?;
    for (i, u) in cert.u.iter().enumerate() {
        if !is_hermitian(u, HERMITIAN_TOL * hermitian_scale(u)) {
            return Err(mismatch("U", format!("U{} is not Hermitian", i + 1)));
        }
    }
    for (i, v) in cert.v.iter().enumerate() {
        if !is_hermitian(v, HERMITIAN_TOL * hermitian_scale(v)) {
            return Err(mismatch("V", format!("V{} is not Hermitian", i + 1)));
        }
    }
    if let Multiplier::J(j) = &cert.multiplier {
        if !is_hermitian(j, HERMITIAN_TOL * hermitian_scale(j)) {
            return Err(mismatch("J", "J is not Hermitian"));
        }
    }
    let min_of = |blocks: &[CMatrix]| -> Result<Option<f64>> {
        blocks.iter().try_fold(None, |acc: Option<f64>, b| {
            let (lo, _) = hermitian_eig_bounds(b)?;
            Ok(Some(acc.map_or(lo, |a| a.min(lo))))
        })
    };
    let min_eig_u = min_of(&cert.u)?.unwrap_or(f64::INFINITY);
    let min_eig_v = min_of(&cert.v)?;
    let z = assemble_z(m, cert)?;
    let (_, lambda_max_z) = hermitian_eig_bounds(&z)?;
    let accepted = lambda_max_z < -tol.eps_z
        && min_eig_u > tol.eps_p
        && min_eig_v.is_none_or(|v| v > tol.eps_p);
    Ok(VerificationReport {
        form: cert.form,
        accepted,
        lambda_max_z,
        min_eig_u,
        min_eig_v,
        tolerances: *tol,
    })
}

/// Coordinates for an `n x n` Hermitian block: `n` diagonal reals followed by
/// `(re, im)` pairs for the strict upper triangle, row by row.
fn hermitian_from(x: &[f64], n: usize) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        h[(i, i)] = cplx(x[k]);
        k += 1;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let v = Complex64::new(x[k], x[k + 1]);
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
            k += 2;
        }
    }
    h
}

/// Coordinates for a general complex `n x n` block: `(re, im)` per entry, row-major.
fn general_from(x: &[f64], n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        Complex64::new(x[k], x[k + 1])
    })
}

/// Decision-variable layout of a synthesis problem.
#[derive(Debug, Clone)]
pub struct VariableLayout {
    pub form: CertificateForm,
    pub u: Vec<VariableBlock>,
    pub v: Vec<VariableBlock>,
    pub multiplier: VariableBlock,
    dims: Vec<usize>,
    n: usize,
}

impl VariableLayout {
    pub fn new(m: &HybridRoesserModel, form: CertificateForm) -> Self {
        let mut offset = 0;
        let mut next = |name: String, len: usize| {
            let b = VariableBlock { name, offset, len };
            offset += len;
            b
        };
        let dims = m.dims().to_vec();
        let u = dims
            .iter()
            .enumerate()
            .map(|(i, &ni)| next(format!("U{}", i + 1), ni * ni))
            .collect();
        let v = dims[..m.r()]
            .iter()
            .enumerate()
            .map(|(i, &ni)| next(format!("V{}", i + 1), ni * ni))
            .collect();
        let n = m.n();
        let multiplier = if form.uses_r() {
            next("R".into(), 2 * n * n)
        } else {
            next("J".into(), n * n)
        };
        Self {
            form,
            u,
            v,
            multiplier,
            dims,
            n,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.multiplier.offset + self.multiplier.len
    }

    pub fn blocks(&self) -> Vec<VariableBlock> {
        let mut out = self.u.clone();
        out.extend(self.v.iter().cloned());
        out.push(self.multiplier.clone());
        out
    }

    pub fn certificate(&self, x: &[f64]) -> StabilityCertificate {
        let slice = |b: &VariableBlock| &x[b.offset..b.offset + b.len];
        let u = self
            .u
            .iter()
            .zip(&self.dims)
            .map(|(b, &ni)| hermitian_from(slice(b), ni))
            .collect();
        let v = self
            .v
            .iter()
            .zip(&self.dims)
            .map(|(b, &ni)| hermitian_from(slice(b), ni))
            .collect();
        let mult = slice(&self.multiplier);
        let multiplier = if self.form.uses_r() {
            Multiplier::R(general_from(mult, self.n))
        } else {
            Multiplier::J(hermitian_from(mult, self.n))
        };
        StabilityCertificate {
            form: self.form,
            u,
            v,
            multiplier,
        }
    }
}

/// Realified feasibility problem for one certificate form.
///
/// Every constraint is linear and homogeneous in the decision variables, so
/// each coefficient matrix is obtained by assembling the certificate for a
/// unit coordinate vector.
pub fn build_problem(
    m: &HybridRoesserModel,
    form: CertificateForm,
    margin: f64,
) -> Result<(LmiFeasibilityProblem, VariableLayout)> {
    let layout = VariableLayout::new(m, form);
    let nv = layout.num_vars();
    let mut e = vec![0.0; nv];
    let mut constraints = Vec::new();

    let block_constraint = |name: String, block: &VariableBlock, ni: usize| {
        let terms = (0..block.len)
            .map(|k| {
                let mut unit = vec![0.0; block.len];
                unit[k] = 1.0;
                (
                    block.offset + k,
                    realify_unchecked(&hermitian_from(&unit, ni)),
                )
            })
            .collect();
        LmiConstraint {
            name,
            constant: RMatrix::zeros(2 * ni, 2 * ni),
            terms,
            sense: Sense::PositiveDefinite,
            margin,
        }
    };
    for (i, b) in layout.u.iter().enumerate() {
        constraints.push(block_constraint(b.name.clone(), b, m.dims()[i]));
    }
    for (i, b) in layout.v.iter().enumerate() {
        constraints.push(block_constraint(b.name.clone(), b, m.dims()[i]));
    }

    let zsize = 4 * m.n();
    let mut terms = Vec::new();
    for j in 0..nv {
        e[j] = 1.0;
        let z = assemble_z(m, &layout.certificate(&e))?;
        e[j] = 0.0;
        let f = realify(&z)?;
        if f.iter().any(|v| *v != 0.0) {
            terms.push((j, f));
        }
    }
    constraints.push(LmiConstraint {
        name: "Z".into(),
        constant: DMatrix::zeros(zsize, zsize),
        terms,
        sense: Sense::NegativeDefinite,
        margin,
    });

    let problem = LmiFeasibilityProblem {
        num_vars: nv,
        constraints,
        variable_metadata: layout.blocks(),
    };
    Ok((problem, layout))
}

#[derive(Debug, Clone, Default)]
pub struct SynthesisOptions {
    /// Margin for every strict inequality; `None` selects [`default_margin`].
    pub margin: Option<f64>,
    pub solver: SolverOptions,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("no certificate found (best slack {best_slack:e})")]
    Infeasible { best_slack: f64 },

    #[error("solver failure: {0}")]
    Solver(#[from] SdpError),

    #[error(transparent)]
    Model(#[from] Error),

    #[error("solver answer failed independent verification (lambda_max(Z) = {lambda_max_z:e})")]
    VerificationFailed { lambda_max_z: f64 },
}

/// Searches for a certificate of the requested form.
///
/// A returned certificate has already passed [`verify_certificate`] with
/// `eps_z = eps_p = margin`.
pub fn synthesize_certificate(
    m: &HybridRoesserModel,
    form: CertificateForm,
    opts: &SynthesisOptions,
) -> std::result::Result<StabilityCertificate, SynthesisError> {
    m.validate()?;
    let margin = opts.margin.unwrap_or_else(|| default_margin(m));
    let (problem, layout) = build_problem(m, form, margin)?;
    match sdpcore::solve_feasibility(&problem, &opts.solver)? {
        Solution::Feasible { x, .. } => {
            let cert = layout.certificate(&x);
            let report = verify_certificate(m, &cert, &Tolerances::strict(margin))?;
            if report.accepted {
                Ok(cert)
            } else {
                Err(SynthesisError::VerificationFailed {
                    lambda_max_z: report.lambda_max_z,
                })
            }
        }
        Solution::Infeasible { best_slack, .. } => Err(SynthesisError::Infeasible { best_slack }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::region_for_model;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar_model(a: f64) -> HybridRoesserModel {
        HybridRoesserModel::new(0.5, vec![1], 0, RMatrix::from_element(1, 1, a)).unwrap()
    }

    fn one(v: f64) -> CMatrix {
        CMatrix::from_element(1, 1, c(v, 0.0))
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        a.shape() == b.shape() && (a - b).iter().all(|v| v.norm() <= tol)
    }

    #[test]
    fn g_scalar_cases() {
        let m = scalar_model(0.0);
        let g = assemble_g(&region_for_model(&m), &[one(1.0)], &[]).unwrap();
        assert!(close(
            &g,
            &CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
            0.0
        ));

        let m =
            HybridRoesserModel::new(1.0, vec![1], 1, RMatrix::from_element(1, 1, -1.0)).unwrap();
        let g = assemble_g(&region_for_model(&m), &[one(1.0)], &[one(1.0)]).unwrap();
        let want =
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)]);
        assert!(close(&g, &want, 1e-15));
    }

    #[test]
    fn g_example1_layout() {
        let m = HybridRoesserModel::new(0.5, vec![2, 2], 1, RMatrix::zeros(4, 4)).unwrap();
        let eye = CMatrix::identity(2, 2);
        let g = assemble_g(
            &region_for_model(&m),
            &[eye.clone(), eye.clone()],
            std::slice::from_ref(&eye),
        )
        .unwrap();
        assert_eq!(g.shape(), (8, 8));
        assert!(is_hermitian(&g, 1e-15));
        // continuous diagonal blocks vanish
        assert!(g.view((0, 0), (2, 2)).iter().all(|v| v.norm() == 0.0));
        assert!(g.view((4, 4), (2, 2)).iter().all(|v| v.norm() == 0.0));
        // discrete blocks are +I / -I
        assert_eq!(g[(2, 2)], c(1.0, 0.0));
        assert_eq!(g[(6, 6)], c(-1.0, 0.0));
        let h = std::f64::consts::SQRT_2;
        assert!((g[(0, 4)] - c(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn g_rejects_bad_blocks() {
        let m = HybridRoesserModel::new(0.5, vec![2, 2], 1, RMatrix::zeros(4, 4)).unwrap();
        let d = region_for_model(&m);
        let eye = CMatrix::identity(2, 2);
        assert!(assemble_g(&d, std::slice::from_ref(&eye), std::slice::from_ref(&eye)).is_err());
        assert!(assemble_g(&d, &[eye.clone(), eye.clone()], &[]).is_err());
        assert!(assemble_g(&d, &[eye.clone(), eye.clone()], &[CMatrix::identity(3, 3)]).is_err());
    }

    #[test]
    fn z_scalar_expansions() {
        let m = scalar_model(2.0);
        let g = assemble_g(&region_for_model(&m), &[one(1.0)], &[]).unwrap();
        assert!(close(
            &z_theorem2(&m, &g, &CMatrix::zeros(1, 1)).unwrap(),
            &g,
            0.0
        ));
        let j0 = 0.7;
        let z = z_theorem2(&m, &g, &one(j0)).unwrap();
        let want = CMatrix::from_row_slice(
            2,
            2,
            &[
                c(1.0 + j0, 0.0),
                c(-2.0 * j0, 0.0),
                c(-2.0 * j0, 0.0),
                c(-1.0 + 4.0 * j0, 0.0),
            ],
        );
        assert!(close(&z, &want, 1e-14));

        let m = scalar_model(0.5);
        let g = assemble_g(&region_for_model(&m), &[one(1.0)], &[]).unwrap();
        let z = z_corollary1(&m, &g, &one(-2.0)).unwrap();
        let want = CMatrix::from_row_slice(
            2,
            2,
            &[c(-1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.5, 0.0)],
        );
        assert!(close(&z, &want, 1e-14));
        assert!(close(
            &z_corollary2(&m, &g, &CMatrix::zeros(1, 1)).unwrap(),
            &g,
            0.0
        ));
        assert!(z_corollary1(&m, &g, &CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn realify_examples() {
        let h =
            CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)]);
        let r = realify(&h).unwrap();
        let re = h.map(|v| v.re);
        assert_eq!(r.view((0, 0), (2, 2)), re);
        assert_eq!(r.view((2, 2), (2, 2)), re);
        assert!(r.view((0, 2), (2, 2)).iter().all(|v| *v == 0.0));

        let h =
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let r = realify(&h).unwrap();
        let mut eig: Vec<f64> = nalgebra::SymmetricEigen::new(r)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(f64::total_cmp);
        for (got, want) in eig.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }

        let r = realify(&one(4.5)).unwrap();
        assert_eq!(r, RMatrix::from_diagonal(&nalgebra::dvector![4.5, 4.5]));

        let bad =
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(realify(&bad), Err(Error::NotHermitian("H")));
    }

    #[test]
    fn scalar_hand_certificate() {
        let m = scalar_model(0.5);
        let cert = StabilityCertificate {
            form: CertificateForm::Corollary1,
            u: vec![one(1.0)],
            v: vec![],
            multiplier: Multiplier::J(one(-2.0)),
        };
        let rep = verify_certificate(&m, &cert, &Tolerances::strict(1e-6)).unwrap();
        assert!(rep.accepted);
        let exact = (-2.5 + 4.25_f64.sqrt()) / 2.0;
        assert!((rep.lambda_max_z - exact).abs() < 1e-12);
        assert_eq!(rep.min_eig_v, None);
    }

    #[test]
    fn indefinite_u_is_rejected() {
        let m = HybridRoesserModel::new(0.5, vec![2, 2], 1, RMatrix::zeros(4, 4)).unwrap();
        let cert = StabilityCertificate {
            form: CertificateForm::Theorem2,
            u: vec![-CMatrix::identity(2, 2), CMatrix::identity(2, 2)],
            v: vec![CMatrix::identity(2, 2)],
            multiplier: Multiplier::J(-CMatrix::identity(4, 4)),
        };
        let rep = verify_certificate(&m, &cert, &Tolerances::strict(1e-6)).unwrap();
        assert!(!rep.accepted);
        assert!(rep.min_eig_u < 0.0);
    }

    #[test]
    fn shape_errors() {
        let m = scalar_model(0.5);
        let cert = StabilityCertificate {
            form: CertificateForm::Corollary2,
            u: vec![one(1.0)],
            v: vec![],
            multiplier: Multiplier::J(one(-2.0)),
        };
        assert!(verify_certificate(&m, &cert, &Tolerances::strict(1e-6)).is_err());
        let cert = StabilityCertificate {
            form: CertificateForm::Corollary1,
            u: vec![one(1.0), one(1.0)],
            v: vec![],
            multiplier: Multiplier::J(one(-2.0)),
        };
        assert!(verify_certificate(&m, &cert, &Tolerances::strict(1e-6)).is_err());
    }

    #[test]
    fn layout_round_trip() {
        let m = HybridRoesserModel::new(0.5, vec![2, 2], 1, RMatrix::zeros(4, 4)).unwrap();
        let layout = VariableLayout::new(&m, CertificateForm::Corollary2);
        assert_eq!(layout.num_vars(), 4 + 4 + 4 + 32);
        let x: Vec<f64> = (0..layout.num_vars())
            .map(|i| i as f64 * 0.1 - 1.0)
            .collect();
        let cert = layout.certificate(&x);
        assert!(cert.u.iter().chain(&cert.v).all(|b| is_hermitian(b, 0.0)));
        assert!(cert.check_shape(&m).is_ok());
    }

    #[test]
    fn scalar_synthesis() {
        for form in [CertificateForm::Theorem2, CertificateForm::Corollary1] {
            let cert =
                synthesize_certificate(&scalar_model(0.5), form, &SynthesisOptions::default())
                    .unwrap_or_else(|e| panic!("{form}: {e}"));
            assert_eq!(cert.form, form);
        }
        for form in CertificateForm::ALL {
            match synthesize_certificate(&scalar_model(2.0), form, &SynthesisOptions::default()) {
                Err(SynthesisError::Infeasible { best_slack }) => assert!(best_slack >= 0.0),
                other => panic!("{form}: expected infeasible, got {other:?}"),
            }
        }
    }

    #[test]
    fn symmetric_form_needs_continuous_blocks() {
        // [v; -v] on a discrete block annihilates Z, so no strict certificate exists.
        match synthesize_certificate(
            &scalar_model(0.5),
            CertificateForm::Corollary2,
            &SynthesisOptions::default(),
        ) {
            Err(SynthesisError::Infeasible { best_slack }) => assert!(best_slack >= 0.0),
            other => panic!("expected infeasible, got {other:?}"),
        }
        let m =
            HybridRoesserModel::new(0.5, vec![1], 1, RMatrix::from_element(1, 1, -1.0)).unwrap();
        let cert = synthesize_certificate(
            &m,
            CertificateForm::Corollary2,
            &SynthesisOptions::default(),
        )
        .unwrap();
        assert_eq!(cert.form, CertificateForm::Corollary2);
    }
}
