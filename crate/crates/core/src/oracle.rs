//! Independent corroboration of LMI verdicts.
//!
//! Two routes that share nothing with the certificate machinery:
//!
//! * a determinant scan that samples the stability region and looks for
//!   zeros of `det(H(rho) - A)` (a zero falsifies stability, a positive
//!   minimum is only supporting evidence);
//! * a time-domain simulation of (1+1)-D models, integrating the fractional
//!   block with an implicit Grünwald–Letnikov scheme and shifting the discrete
//!   block explicitly.

use std::collections::HashMap;
use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{mismatch, out_of_range, Error, Result};
use crate::model::{ComplexPoint, HybridRoesserModel};
use crate::region::{DimensionKind, RegionDescriptor};

/// Smallest modulus used when sampling continuous sectors.
const MIN_MODULUS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub samples_per_dim: usize,
    /// Outer modulus bound for the sampled (unbounded) region.
    pub radius_cap: f64,
    /// Fraction of per-dimension samples placed on the region boundary.
    pub boundary_fraction: f64,
    pub seed: u64,
    /// Upper bound on the number of emitted points.
    pub max_points: usize,
}

impl ScanConfig {
    /// `2 (1 + |A|_inf)`: beyond this modulus `H(rho) - A` is diagonally dominant.
    pub fn default_radius_cap(m: &HybridRoesserModel) -> f64 {
        2.0 * (1.0 + m.a_norm_inf())
    }

    /// Spreads a total point budget evenly over the model's dimensions.
    pub fn with_budget(m: &HybridRoesserModel, total: usize, seed: u64) -> Self {
        let k = m.k() as f64;
        let per_dim = (total as f64).powf(1.0 / k).ceil() as usize;
        Self {
            samples_per_dim: per_dim.max(2),
            radius_cap: Self::default_radius_cap(m),
            boundary_fraction: 0.25,
            seed,
            max_points: total.max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_dim < 2 {
            return Err(out_of_range("samples_per_dim", "need at least 2"));
        }
        if !(self.radius_cap > 1.0 && self.radius_cap.is_finite()) {
            return Err(out_of_range(
                "radius_cap",
                format!("need > 1, got {}", self.radius_cap),
            ));
        }
        if !(0.0..=1.0).contains(&self.boundary_fraction) {
            return Err(out_of_range(
                "boundary_fraction",
                format!("need 0..=1, got {}", self.boundary_fraction),
            ));
        }
        if self.max_points == 0 {
            return Err(out_of_range("max_points", "need at least 1"));
        }
        Ok(())
    }
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![hi],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

fn dimension_samples(
    kind: DimensionKind,
    nu: f64,
    cfg: &ScanConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Complex64> {
    let s = cfg.samples_per_dim;
    let nb = ((cfg.boundary_fraction * s as f64).round() as usize).min(s);
    let ni = s - nb;
    let mut out = Vec::with_capacity(s);
    match kind {
        DimensionKind::Continuous => {
            let half = std::f64::consts::FRAC_PI_2 * nu;
            let moduli = log_spaced(MIN_MODULUS, cfg.radius_cap, nb.div_ceil(2));
            for i in 0..nb {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                out.push(Complex64::from_polar(moduli[i / 2], sign * half));
            }
            let (lo, hi) = (MIN_MODULUS.ln(), cfg.radius_cap.ln());
            for _ in 0..ni {
                let r = rng.random_range(lo..=hi).exp();
                let phi = rng.random_range(-half..=half);
                out.push(Complex64::from_polar(r, phi));
            }
        }
        DimensionKind::Discrete => {
            for i in 0..nb {
                let phi = std::f64::consts::TAU * i as f64 / nb as f64;
                out.push(if i == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, phi)
                });
            }
            let hi = cfg.radius_cap.ln();
            for _ in 0..ni {
                let r = rng.random_range(0.0..=hi).exp();
                let phi = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                out.push(Complex64::from_polar(r, phi));
            }
        }
    }
    out
}

/// Finite sample of the region: boundary rays / unit circles plus interior
/// points, combined across dimensions and capped at `max_points`.
///
/// When the full Cartesian product exceeds the budget, the diagonal tuples
/// `(i, i, ..., i)` are kept (so every per-dimension sample appears at least
/// once) and the rest are drawn at random.
pub fn sample_region(d: &RegionDescriptor, cfg: &ScanConfig) -> Result<Vec<ComplexPoint>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let per_dim: Vec<Vec<Complex64>> = d
        .pairs
        .iter()
        .map(|p| dimension_samples(p.kind, p.nu, cfg, &mut rng))
        .collect();
    let k = per_dim.len();
    let s = cfg.samples_per_dim;
    let full = (s as f64).powi(k as i32);

    let tuples: Vec<Vec<usize>> = if full <= cfg.max_points as f64 {
        let total = s.pow(k as u32);
        (0..total)
            .map(|mut idx| {
                let mut t = vec![0; k];
                for slot in t.iter_mut().rev() {
                    *slot = idx % s;
                    idx /= s;
                }
                t
            })
            .collect()
    } else {
        let mut t: Vec<Vec<usize>> = (0..s.min(cfg.max_points)).map(|i| vec![i; k]).collect();
        while t.len() < cfg.max_points {
            t.push((0..k).map(|_| rng.random_range(0..s)).collect());
        }
        t
    };

    let mut points = Vec::with_capacity(tuples.len());
    for t in tuples {
        let p = ComplexPoint::new(t.iter().zip(&per_dim).map(|(&i, v)| v[i]).collect());
        if d.contains(&p)? {
            points.push(p);
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub min_abs_delta: f64,
    pub argmin: ComplexPoint,
    pub samples: usize,
    /// `|Delta|` below which a sample counts as a root.
    pub threshold: f64,
}

impl ScanResult {
    /// A root inside the region falsifies stability.
    pub fn falsified(&self) -> bool {
        self.min_abs_delta < self.threshold
    }
}

/// `1e-9 (1 + |A|_2^n)`.
pub fn falsification_threshold(m: &HybridRoesserModel) -> f64 {
    1e-9 * (1.0 + m.a_norm().powi(m.n() as i32))
}

fn scan_reduce(acc: (f64, usize), next: (f64, usize)) -> (f64, usize) {
    // NaN never wins; ties go to the lower index so the reduction order is irrelevant.
    match next.0.partial_cmp(&acc.0) {
        Some(std::cmp::Ordering::Less) => next,
        Some(std::cmp::Ordering::Equal) if next.1 < acc.1 => next,
        _ if acc.0.is_nan() => next,
        _ => acc,
    }
}

fn scan_finish(m: &HybridRoesserModel, points: &[ComplexPoint], best: (f64, usize)) -> ScanResult {
    ScanResult {
        min_abs_delta: best.0,
        argmin: points[best.1].clone(),
        samples: points.len(),
        threshold: falsification_threshold(m),
    }
}

fn check_scan_input(m: &HybridRoesserModel, points: &[ComplexPoint]) -> Result<()> {
    m.validate()?;
    if points.is_empty() {
        return Err(mismatch("points", "at least one sample is required"));
    }
    if let Some(bad) = points.iter().find(|p| p.len() != m.k()) {
        return Err(mismatch(
            "points",
            format!("point with {} coordinates", bad.len()),
        ));
    }
    Ok(())
}

/// Minimum of `|det(H(rho) - A)|` over the samples, evaluated one by one.
pub fn det_scan_sequential(m: &HybridRoesserModel, points: &[ComplexPoint]) -> Result<ScanResult> {
    check_scan_input(m, points)?;
    let mut best = (f64::INFINITY, 0);
    for (i, p) in points.iter().enumerate() {
        best = scan_reduce(best, (m.delta(p)?.norm(), i));
    }
    Ok(scan_finish(m, points, best))
}

/// Same as [`det_scan_sequential`], spread over the current rayon pool.
#[cfg(feature = "parallel")]
pub fn det_scan_parallel(m: &HybridRoesserModel, points: &[ComplexPoint]) -> Result<ScanResult> {
    use rayon::prelude::*;
    check_scan_input(m, points)?;
    let best = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| m.delta(p).map(|d| (d.norm(), i)))
        .try_reduce(|| (f64::INFINITY, 0), |a, b| Ok(scan_reduce(a, b)))?;
    Ok(scan_finish(m, points, best))
}

pub fn det_scan(m: &HybridRoesserModel, points: &[ComplexPoint]) -> Result<ScanResult> {
    #[cfg(feature = "parallel")]
    {
        det_scan_parallel(m, points)
    }
    #[cfg(not(feature = "parallel"))]
    {
        det_scan_sequential(m, points)
    }
}

/// Grünwald–Letnikov weights `w_0 = 1`, `w_i = w_{i-1} (1 - (nu + 1) / i)`.
pub fn gl_weights(nu: f64, count: usize) -> Result<Vec<f64>> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(out_of_range("nu", format!("need 0 < nu <= 1, got {nu}")));
    }
    if count == 0 {
        return Err(out_of_range("count", "need at least one weight"));
    }
    let mut w = Vec::with_capacity(count);
    w.push(1.0);
    for i in 1..count {
        let prev = w[i - 1];
        w.push(prev * (1.0 - (nu + 1.0) / i as f64));
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationGrid {
    /// Continuous step.
    pub h: f64,
    pub steps_t: usize,
    pub steps_j: usize,
    /// `x^1(0, j)` for `j = 0..steps_j`.
    pub x1_boundary: Vec<DVector<f64>>,
    /// `x^2(t_m, 0)` for `m = 0..steps_t`.
    pub x2_boundary: Vec<DVector<f64>>,
}

impl SimulationGrid {
    /// `x^1(0, j) = x1` on every line and `x^2(t_m, 0) = x2` at `m = 0`, zero afterwards.
    pub fn uniform(
        h: f64,
        steps_t: usize,
        steps_j: usize,
        x1: DVector<f64>,
        x2: DVector<f64>,
    ) -> Self {
        let zero = DVector::zeros(x2.len());
        let mut x2_boundary = vec![zero; steps_t];
        if let Some(first) = x2_boundary.first_mut() {
            *first = x2;
        }
        Self {
            h,
            steps_t,
            steps_j,
            x1_boundary: vec![x1; steps_j],
            x2_boundary,
        }
    }

    fn validate(&self, n1: usize, n2: usize) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(out_of_range("h", format!("need h > 0, got {}", self.h)));
        }
        if self.steps_t == 0 || self.steps_j == 0 {
            return Err(out_of_range("steps", "need at least one step in t and j"));
        }
        if self.x1_boundary.len() != self.steps_j {
            return Err(mismatch(
                "x1_boundary",
                format!("expected {} entries", self.steps_j),
            ));
        }
        if self.x2_boundary.len() != self.steps_t {
            return Err(mismatch(
                "x2_boundary",
                format!("expected {} entries", self.steps_t),
            ));
        }
        if self.x1_boundary.iter().any(|v| v.len() != n1) {
            return Err(mismatch(
                "x1_boundary",
                format!("entries must have length {n1}"),
            ));
        }
        if self.x2_boundary.iter().any(|v| v.len() != n2) {
            return Err(mismatch(
                "x2_boundary",
                format!("entries must have length {n2}"),
            ));
        }
        Ok(())
    }
}

/// Full state on the `(t_m, j)` grid, `t_m = m h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub steps_t: usize,
    pub steps_j: usize,
    /// State size; the first `n_continuous` components are `x^1`.
    pub n: usize,
    pub n_continuous: usize,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn zeros(h: f64, steps_t: usize, steps_j: usize, n: usize, n_continuous: usize) -> Self {
        Self {
            h,
            steps_t,
            steps_j,
            n,
            n_continuous,
            data: vec![0.0; steps_t * steps_j * n],
        }
    }

    fn index(&self, m: usize, j: usize) -> usize {
        (m * self.steps_j + j) * self.n
    }

    pub fn state(&self, m: usize, j: usize) -> &[f64] {
        let i = self.index(m, j);
        &self.data[i..i + self.n]
    }

    pub fn state_mut(&mut self, m: usize, j: usize) -> &mut [f64] {
        let i = self.index(m, j);
        &mut self.data[i..i + self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute component over the time rows `rows`.
    pub fn max_abs(&self, rows: std::ops::Range<usize>) -> f64 {
        let start = rows.start * self.steps_j * self.n;
        let end = rows.end * self.steps_j * self.n;
        self.data[start..end]
            .iter()
            .fold(0.0, |a, v| a.max(v.abs()))
    }

    /// CSV with columns `t, j, x1..xn`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "t,j")?;
        for c in 0..self.n {
            write!(w, ",x{}", c + 1)?;
        }
        writeln!(w)?;
        for m in 0..self.steps_t {
            let t = m as f64 * self.h;
            for j in 0..self.steps_j {
                write!(w, "{t},{j}")?;
                for v in self.state(m, j) {
                    write!(w, ",{v}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

/// Below this block size the history convolution is summed directly.
const DIRECT_BLOCK: usize = 64;

/// Online evaluation of `H_m = sum_{q<m} w_{m-q} y_q` for a causal march.
///
/// Divide and conquer over `[0, P)`: once the left half of a block is final,
/// its effect on the right half is added with one FFT convolution, so the
/// whole march costs `O(N log^2 N)` instead of `O(N^2)`.
/// Forward plan, inverse plan and transformed kernel for one block length.
type KernelPlan = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>, Vec<Complex64>);

struct HistoryMarch<'a> {
    weights: &'a [f64],
    dim: usize,
    steps: usize,
    /// `steps x dim`, row-major.
    y: Vec<f64>,
    hist: Vec<f64>,
    planner: FftPlanner<f64>,
    kernels: HashMap<usize, KernelPlan>,
}

impl<'a> HistoryMarch<'a> {
    fn new(weights: &'a [f64], dim: usize, steps: usize) -> Self {
        Self {
            weights,
            dim,
            steps,
            y: vec![0.0; steps * dim],
            hist: vec![0.0; steps * dim],
            planner: FftPlanner::new(),
            kernels: HashMap::new(),
        }
    }

    fn run<F>(&mut self, step: &mut F) -> Result<()>
    where
        F: FnMut(usize, &[f64], &mut [f64]) -> Result<()>,
    {
        let size = self.steps.next_power_of_two();
        self.solve(0, size, step)
    }

    fn solve<F>(&mut self, lo: usize, hi: usize, step: &mut F) -> Result<()>
    where
        F: FnMut(usize, &[f64], &mut [f64]) -> Result<()>,
    {
        if lo >= self.steps {
            return Ok(());
        }
        if hi - lo <= DIRECT_BLOCK {
            let d = self.dim;
            for m in lo..hi.min(self.steps) {
                for q in lo..m {
                    let w = self.weights[m - q];
                    for c in 0..d {
                        self.hist[m * d + c] += w * self.y[q * d + c];
                    }
                }
                step(
                    m,
                    &self.hist[m * d..(m + 1) * d],
                    &mut self.y[m * d..(m + 1) * d],
                )?;
            }
            return Ok(());
        }
        let mid = lo + (hi - lo) / 2;
        self.solve(lo, mid, step)?;
        if mid < self.steps {
            self.spill(lo, mid, hi);
        }
        self.solve(mid, hi, step)
    }

    /// Adds the contribution of `y[lo..mid)` to `hist[mid..hi)`.
    fn spill(&mut self, lo: usize, mid: usize, hi: usize) {
        let half = mid - lo;
        let len = 2 * half;
        let weights = self.weights;
        let (fwd, inv, kernel) = self.kernels.entry(len).or_insert_with(|| {
            let fwd = self.planner.plan_fft_forward(len);
            let inv = self.planner.plan_fft_inverse(len);
            let mut k: Vec<Complex64> = (0..len)
                .map(|i| Complex64::new(weights.get(i).copied().unwrap_or(0.0), 0.0))
                .collect();
            fwd.process(&mut k);
            (fwd, inv, k)
        });
        let d = self.dim;
        let scale = 1.0 / len as f64;
        let end = hi.min(self.steps);
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        // two real components per complex transform; the kernel is real
        for c in (0..d).step_by(2) {
            let pair = c + 1 < d;
            for (i, slot) in buf.iter_mut().enumerate() {
                *slot = if i < half {
                    let q = lo + i;
                    let im = if pair { self.y[q * d + c + 1] } else { 0.0 };
                    Complex64::new(self.y[q * d + c], im)
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
            fwd.process(&mut buf);
            for (b, k) in buf.iter_mut().zip(kernel.iter()) {
                *b *= k;
            }
            inv.process(&mut buf);
            for m in mid..end {
                let v = buf[m - lo] * scale;
                self.hist[m * d + c] += v.re;
                if pair {
                    self.hist[m * d + c + 1] += v.im;
                }
            }
        }
    }
}

/// Marches a (1+1)-D model: implicit GL in `t` for `x^1`, explicit shift in `j` for `x^2`.
///
/// The Caputo derivative is approximated by GL weights applied to
/// `x^1(t) - x^1(0)`, and every step solves `(h^{-nu} I - A_c) x_m = rhs`.
/// Inputs are zero.
pub fn simulate_1p1(m: &HybridRoesserModel, g: &SimulationGrid) -> Result<Trajectory> {
    m.validate()?;
    if m.k() != 2 || m.r() != 1 {
        return Err(Error::Unsupported(format!(
            "simulation needs k = 2, r = 1 (got k = {}, r = {})",
            m.k(),
            m.r()
        )));
    }
    let n1 = m.n_continuous();
    let n2 = m.n() - n1;
    g.validate(n1, n2)?;
    let (ac, acd, adc, ad) = (m.a_c(), m.a_cd(), m.a_dc(), m.a_d());
    let hnu = g.h.powf(-m.nu());
    let step_matrix = nalgebra::DMatrix::identity(n1, n1) * hnu - &ac;
    let lu = step_matrix.lu();
    if !lu.is_invertible() {
        return Err(Error::SingularStep { step: 1 });
    }
    let weights = gl_weights(m.nu(), g.steps_t.max(2))?;

    let mut traj = Trajectory::zeros(g.h, g.steps_t, g.steps_j, m.n(), n1);
    let mut x2_line: Vec<DVector<f64>> = g.x2_boundary.clone();

    for j in 0..g.steps_j {
        let x0 = &g.x1_boundary[j];
        let drift = &ac * x0;
        let forcing: Vec<DVector<f64>> = x2_line.iter().map(|x2| &acd * x2).collect();
        let mut march = HistoryMarch::new(&weights, n1, g.steps_t);
        march.run(&mut |step, hist, y_out| {
            if step == 0 {
                y_out.iter_mut().for_each(|v| *v = 0.0);
                return Ok(());
            }
            let mut rhs = &drift + &forcing[step];
            for (r, h) in rhs.iter_mut().zip(hist) {
                *r -= hnu * h;
            }
            match lu.solve(&rhs) {
                Some(y) => {
                    y_out.copy_from_slice(y.as_slice());
                    Ok(())
                }
                None => Err(Error::SingularStep { step }),
            }
        })?;

        for (step, x2) in x2_line.iter().enumerate() {
            let y = &march.y[step * n1..(step + 1) * n1];
            let state = traj.state_mut(step, j);
            for c in 0..n1 {
                state[c] = x0[c] + y[c];
            }
            state[n1..].copy_from_slice(x2.as_slice());
        }
        if j + 1 < g.steps_j {
            for (step, x2) in x2_line.iter_mut().enumerate() {
                let x1 = DVector::from_column_slice(&traj.state(step, j)[..n1]);
                *x2 = &adc * x1 + &ad * &*x2;
            }
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    pub decays: bool,
    pub m_head: f64,
    pub m_tail: f64,
}

/// Compares the peak magnitude over the last `tail_fraction` of the time
/// grid with the peak over the first `tail_fraction`.
pub fn decay_check(traj: &Trajectory, tail_fraction: f64, ratio: f64) -> Result<DecayReport> {
    if traj.steps_t < 2 || traj.steps_j == 0 || traj.n == 0 {
        return Err(out_of_range("trajectory", "need at least two time rows"));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 0.5) {
        return Err(out_of_range(
            "tail_fraction",
            format!("need 0 < f <= 0.5, got {tail_fraction}"),
        ));
    }
    if ratio.is_nan() || ratio < 0.0 {
        return Err(out_of_range("ratio", "must be nonnegative"));
    }
    let rows = ((tail_fraction * traj.steps_t as f64).ceil() as usize).clamp(1, traj.steps_t / 2);
    let m_head = traj.max_abs(0..rows);
    let m_tail = traj.max_abs(traj.steps_t - rows..traj.steps_t);
    Ok(DecayReport {
        decays: m_tail <= ratio * m_head,
        m_head,
        m_tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RMatrix;
    use crate::region::region_for_model;

    #[test]
    fn weights_examples() {
        assert_eq!(gl_weights(1.0, 4).unwrap(), vec![1.0, -1.0, 0.0, 0.0]);
        let w = gl_weights(0.5, 4).unwrap();
        for (a, b) in w.iter().zip([1.0, -0.5, -0.125, -0.0625]) {
            assert!((a - b).abs() < 1e-15);
        }
        for nu in [0.1, 0.37, 0.9] {
            assert!((gl_weights(nu, 2).unwrap()[1] + nu).abs() < 1e-15);
        }
        assert!(gl_weights(0.0, 3).is_err());
        assert!(gl_weights(0.5, 0).is_err());
    }

    #[test]
    fn discrete_boundary_samples_on_unit_circle() {
        let m = HybridRoesserModel::new(0.5, vec![1], 0, RMatrix::from_element(1, 1, 0.3)).unwrap();
        let cfg = ScanConfig {
            samples_per_dim: 8,
            radius_cap: 4.0,
            boundary_fraction: 1.0,
            seed: 1,
            max_points: 100,
        };
        let pts = sample_region(&region_for_model(&m), &cfg).unwrap();
        assert_eq!(pts.len(), 8);
        assert!(pts.iter().all(|p| (p.0[0].norm() - 1.0).abs() <= 1e-10));
    }

    #[test]
    fn continuous_boundary_samples_on_rays() {
        let m =
            HybridRoesserModel::new(0.5, vec![1], 1, RMatrix::from_element(1, 1, -1.0)).unwrap();
        let cfg = ScanConfig {
            samples_per_dim: 16,
            radius_cap: 4.0,
            boundary_fraction: 1.0,
            seed: 1,
            max_points: 100,
        };
        let pts = sample_region(&region_for_model(&m), &cfg).unwrap();
        assert_eq!(pts.len(), 16);
        let q = std::f64::consts::FRAC_PI_4;
        assert!(pts
            .iter()
            .all(|p| (p.0[0].arg() - q).abs() <= 1e-10 || (p.0[0].arg() + q).abs() <= 1e-10));
    }

    #[test]
    fn config_validation() {
        let m = HybridRoesserModel::new(0.5, vec![1], 0, RMatrix::zeros(1, 1)).unwrap();
        let mut cfg = ScanConfig::with_budget(&m, 10, 0);
        assert_eq!(cfg.radius_cap, 2.0);
        cfg.samples_per_dim = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = ScanConfig::with_budget(&m, 10, 0);
        cfg.radius_cap = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ScanConfig::with_budget(&m, 10, 0);
        cfg.boundary_fraction = 1.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scan_finds_unit_root() {
        let m = HybridRoesserModel::new(0.5, vec![1], 0, RMatrix::from_element(1, 1, 1.0)).unwrap();
        let cfg = ScanConfig::with_budget(&m, 64, 3);
        let pts = sample_region(&region_for_model(&m), &cfg).unwrap();
        let res = det_scan(&m, &pts).unwrap();
        assert!(res.falsified());
        assert_eq!(res.min_abs_delta, 0.0);
        assert_eq!(res.argmin.0[0], Complex64::new(1.0, 0.0));
        assert!(det_scan(&m, &[]).is_err());
    }

    #[test]
    fn zero_model_scan_matches_closed_form() {
        let m = HybridRoesserModel::new(0.5, vec![2, 1], 1, RMatrix::zeros(3, 3)).unwrap();
        let pts =
            sample_region(&region_for_model(&m), &ScanConfig::with_budget(&m, 400, 9)).unwrap();
        let res = det_scan(&m, &pts).unwrap();
        let want = pts
            .iter()
            .map(|p| p.0[0].norm().powi(2) * p.0[1].norm())
            .fold(f64::INFINITY, f64::min);
        assert!((res.min_abs_delta - want).abs() <= 1e-15 * (1.0 + want));
    }

    #[test]
    fn decay_check_examples() {
        let traj = Trajectory::zeros(0.1, 10, 2, 2, 1);
        let rep = decay_check(&traj, 0.1, 0.01).unwrap();
        assert!(rep.decays);
        assert_eq!(rep.m_tail, 0.0);

        let mut traj = Trajectory::zeros(0.1, 10, 2, 2, 1);
        for m in 0..10 {
            for j in 0..2 {
                traj.state_mut(m, j).fill(1.0);
            }
        }
        assert!(!decay_check(&traj, 0.1, 0.01).unwrap().decays);
        assert!(decay_check(&Trajectory::zeros(0.1, 1, 1, 1, 1), 0.1, 0.01).is_err());
    }

    #[test]
    fn simulation_rejects_other_shapes() {
        let m =
            HybridRoesserModel::new(0.5, vec![1], 1, RMatrix::from_element(1, 1, -1.0)).unwrap();
        let g =
            SimulationGrid::uniform(0.1, 4, 2, DVector::from_element(1, 1.0), DVector::zeros(0));
        assert!(matches!(simulate_1p1(&m, &g), Err(Error::Unsupported(_))));

        let m = HybridRoesserModel::new(0.5, vec![1, 1], 1, RMatrix::zeros(2, 2)).unwrap();
        let mut g = SimulationGrid::uniform(
            0.1,
            4,
            2,
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 1.0),
        );
        g.x2_boundary.pop();
        assert!(matches!(
            simulate_1p1(&m, &g),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        #[rustfmt::skip]
        let a = RMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.3, -0.2]);
        let m = HybridRoesserModel::new(0.7, vec![1, 1], 1, a).unwrap();
        let g = SimulationGrid::uniform(0.05, 300, 5, DVector::zeros(1), DVector::zeros(1));
        let traj = simulate_1p1(&m, &g).unwrap();
        assert!(traj.values().iter().all(|v| *v == 0.0));
    }
}
