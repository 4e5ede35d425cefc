//! Finite-window discretization of the jump Dirichlet form, spectral gaps, local Poincaré
//! checks and the `g_n` counterexample family.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ErgoError, Result};
use crate::generator::TestFunction;
use crate::par::par_map;
use crate::quad::{geometric_points, integrate, QuadOpts};
use crate::special_functions::{normalizing_constant, StableIndex};
use crate::weights_rates::{WeightKind, WeightSpec};

/// Largest number of nodes [`assemble`] accepts.
pub const NODE_CAP: usize = 8001;
/// Frozen constant of the local super Poincaré check, calibrated with `a = 1`.
pub const DEFAULT_C6: f64 = 0.5;
const DENSE_LIMIT: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Full,
    Truncated,
}

/// Quadratic form `E_h(f, f) = ½ Σ_{i≠j} (f_i - f_j)^2 w_{|i-j|}` on the nodes `-R + i h` with
/// masses `m_i = h / a(x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteForm {
    pub window_radius: f64,
    pub grid_spacing: f64,
    pub kernel: KernelKind,
    pub alpha: StableIndex,
    pub nodes: Vec<f64>,
    /// `offset_weights[k]` couples nodes `k` apart; entry `0` is unused.
    pub offset_weights: Vec<f64>,
    pub mass_weights: Vec<f64>,
}

/// Weight coupling nodes `k` apart.
fn offset_weight(c: f64, alpha: f64, h: f64, k: usize, kernel: KernelKind) -> f64 {
    let d = k as f64 * h;
    match kernel {
        KernelKind::Full if k == 1 => c * (1.5 * h).powf(2.0 - alpha) / ((2.0 - alpha) * h),
        KernelKind::Full => c * h * h * d.powf(-1.0 - alpha),
        KernelKind::Truncated if d > 1.0 + 1e-12 * h => c * h * h * d.powf(-1.0 - alpha),
        KernelKind::Truncated => 0.0,
    }
}

/// Assembles the form for the weight `w` on `[-R, R]`.
pub fn assemble(w: &WeightSpec, radius: f64, h: f64, kernel: KernelKind) -> Result<DiscreteForm> {
    assemble_with(w.alpha, radius, h, kernel, |x| w.a(x))
}

/// As [`assemble`] with an arbitrary positive weight function.
pub fn assemble_with<A: Fn(f64) -> f64>(
    idx: StableIndex,
    radius: f64,
    h: f64,
    kernel: KernelKind,
    a: A,
) -> Result<DiscreteForm> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(ErgoError::precondition(format!("grid spacing must lie in (0, 1], got {h}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(ErgoError::precondition(format!("window radius must be positive, got {radius}")));
    }
    let steps = (2.0 * radius / h).round();
    if (steps * h - 2.0 * radius).abs() > 1e-9 * radius {
        return Err(ErgoError::precondition("2R must be a multiple of h"));
    }
    let n = steps as usize + 1;
    if n > NODE_CAP {
        return Err(ErgoError::Resource(format!("{n} nodes exceed the cap of {NODE_CAP}")));
    }
    let alpha = idx.alpha();
    let c = normalizing_constant(idx);
    let nodes: Vec<f64> = (0..n).map(|i| -radius + i as f64 * h).collect();
    let mut offset_weights = vec![0.0; n];
    for (k, wk) in offset_weights.iter_mut().enumerate().skip(1) {
        *wk = offset_weight(c, alpha, h, k, kernel);
    }
    let mass_weights: Vec<f64> = nodes.iter().map(|&x| h / a(x)).collect();
    if mass_weights.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
        return Err(ErgoError::domain("weight must be finite and positive on the window"));
    }
    Ok(DiscreteForm { window_radius: radius, grid_spacing: h, kernel, alpha: idx, nodes, offset_weights, mass_weights })
}

impl DiscreteForm {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E_h(f, f)`.
    pub fn energy(&self, f: &[f64]) -> f64 {
        let n = self.len();
        let mut e = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let d = f[i] - f[j];
                e += self.offset_weights[j - i] * d * d;
            }
        }
        e
    }

    /// Dense matrix `L` with `f^T L f = E_h(f, f)`.
    pub fn energy_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut l = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let w = self.offset_weights[i.abs_diff(j)];
                    l[(i, j)] = -w;
                    diag += w;
                }
            }
            l[(i, i)] = diag;
        }
        l
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_weights.iter().sum()
    }

    /// `(sup, inf)` of `1/a` over the nodes.
    pub fn mass_bounds(&self) -> (f64, f64) {
        let h = self.grid_spacing;
        let mx = self.mass_weights.iter().cloned().fold(0.0, f64::max) / h;
        let mn = self.mass_weights.iter().cloned().fold(f64::INFINITY, f64::min) / h;
        (mx, mn)
    }

    /// `Σ m_i (f_i - f̄)^2` with the `μ_h`-mean `f̄`.
    pub fn variance(&self, f: &[f64]) -> f64 {
        let m = self.total_mass();
        let mean = self.mass_weights.iter().zip(f).map(|(w, v)| w * v).sum::<f64>() / m;
        self.mass_weights.iter().zip(f).map(|(w, v)| w * (v - mean).powi(2)).sum()
    }

    /// Symmetry, null constants and nonnegative weights.
    pub fn check_invariants(&self) -> Result<()> {
        if self.offset_weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(ErgoError::Solver("negative or non-finite kernel weight".into()));
        }
        let ones = vec![1.0; self.len()];
        if self.energy(&ones) != 0.0 {
            return Err(ErgoError::Solver("constants carry energy".into()));
        }
        Ok(())
    }
}

/// Smallest nonzero generalized eigenvalue of `(L, diag(m))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEstimate {
    pub lambda1: f64,
    pub eigvec: Vec<f64>,
    pub window_radius: f64,
    pub grid_spacing: f64,
    pub residual: f64,
    pub mean_defect: f64,
}

/// `A = M^{-1/2} L M^{-1/2}` shifted by `c u u^T` along the null vector `u = M^{1/2} 1 / |.|`.
fn shifted_operator(form: &DiscreteForm) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
    let n = form.len();
    let l = form.energy_matrix();
    let d = DVector::from_iterator(n, form.mass_weights.iter().map(|m| 1.0 / m.sqrt()));
    let mut a = l;
    for j in 0..n {
        for i in 0..n {
            a[(i, j)] *= d[i] * d[j];
        }
    }
    let mut u = DVector::from_iterator(n, form.mass_weights.iter().map(|m| m.sqrt()));
    u /= u.norm();
    let shift = (0..n).map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let b = &a + &u * u.transpose() * shift;
    (b, d, u)
}

/// Lanczos with full reorthogonalization for the largest eigenpair of `op`.
fn lanczos_top<F: Fn(&DVector<f64>) -> DVector<f64>>(op: F, start: DVector<f64>, max_iter: usize) -> Result<(f64, DVector<f64>)> {
    let n = start.len();
    let mut basis: Vec<DVector<f64>> = vec![start.normalize()];
    let mut alphas = vec![];
    let mut betas: Vec<f64> = vec![];
    let mut best = (0.0, DVector::zeros(n));
    let mut prev = f64::NAN;
    for k in 0..max_iter.min(n) {
        let mut w = op(&basis[k]);
        let a = basis[k].dot(&w);
        alphas.push(a);
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let b = w.norm();
        let m = alphas.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (j, theta) = eig.eigenvalues.iter().enumerate().fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let s = eig.eigenvectors.column(j);
        let resid = (b * s[m - 1]).abs();
        let mut y = DVector::zeros(n);
        for (i, q) in basis.iter().enumerate() {
            y.axpy(s[i], q, 1.0);
        }
        best = (theta, y);
        if resid <= 1e-12 * theta.abs() || (k > 5 && (theta - prev).abs() <= 1e-14 * theta.abs() && resid <= 1e-9 * theta.abs()) || b <= 1e-300 {
            return Ok(best);
        }
        prev = theta;
        betas.push(b);
        basis.push(w / b);
    }
    if n <= max_iter {
        return Ok(best);
    }
    Err(ErgoError::Solver(format!("Lanczos did not converge in {max_iter} steps")))
}

/// Spectral gap of the form: dense solve for small windows, shift-invert Lanczos otherwise.
pub fn spectral_gap(form: &DiscreteForm) -> Result<GapEstimate> {
    let n = form.len();
    if n < 2 {
        return Err(ErgoError::precondition("window needs at least two nodes"));
    }
    if form.kernel == KernelKind::Truncated && form.window_radius <= 0.5 {
        return Err(ErgoError::precondition("truncated kernel needs a window wider than one"));
    }
    form.check_invariants()?;
    let (b, d, u) = shifted_operator(form);
    let (lambda, y) = if n <= DENSE_LIMIT {
        let eig = SymmetricEigen::new(b.clone());
        let (j, v) = eig.eigenvalues.iter().enumerate().fold((0, f64::MAX), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        (v, eig.eigenvectors.column(j).into_owned())
    } else {
        let chol = Cholesky::new(b.clone()).ok_or_else(|| ErgoError::Solver("shifted operator is not positive definite".into()))?;
        let start = DVector::from_iterator(n, (0..n).map(|i| {
            let t = i as f64 / (n - 1) as f64;
            (2.0 * t - 1.0) + 0.1 * (7.0 * t).cos()
        }));
        let start = &start - &u * u.dot(&start);
        let (theta, y) = lanczos_top(|v| chol.solve(v), start, 300)?;
        (1.0 / theta, y)
    };
    let resid_vec = &b * &y - &y * lambda;
    let residual = resid_vec.norm() / y.norm();
    if !(residual <= 1e-6 * lambda.abs().max(1e-300) + 1e-10) {
        return Err(ErgoError::Solver(format!("eigen residual {residual:e} for lambda {lambda:e}")));
    }
    let mut v: Vec<f64> = y.iter().zip(d.iter()).map(|(a, b)| a * b).collect();
    let norm = v.iter().zip(&form.mass_weights).map(|(x, m)| m * x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mean_defect = v.iter().zip(&form.mass_weights).map(|(x, m)| m * x).sum::<f64>();
    Ok(GapEstimate {
        lambda1: lambda.max(0.0),
        eigvec: v,
        window_radius: form.window_radius,
        grid_spacing: form.grid_spacing,
        residual,
        mean_defect,
    })
}

/// All generalized eigenvalues, by a dense solve.
pub fn dense_spectrum(form: &DiscreteForm) -> Vec<f64> {
    let (b, _, _) = shifted_operator(form);
    let n = form.len();
    let l = form.energy_matrix();
    let mut a = l;
    for j in 0..n {
        for i in 0..n {
            a[(i, j)] /= (form.mass_weights[i] * form.mass_weights[j]).sqrt();
        }
    }
    drop(b);
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `λ_1` on windows of growing radius at fixed spacing.
pub fn gap_trend(w: &WeightSpec, radii: &[f64], h: f64, kernel: KernelKind) -> Result<Vec<GapEstimate>> {
    radii.iter().map(|&r| spectral_gap(&assemble(w, r, h, kernel)?)).collect()
}

/// Random discrete test function: Gaussian bumps, smooth ramps, an interval indicator and noise.
pub fn random_function(nodes: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let lo = nodes[0];
    let hi = *nodes.last().unwrap();
    let span = hi - lo;
    let mut f = vec![0.0; nodes.len()];
    let bumps = rng.random_range(1..=4);
    for _ in 0..bumps {
        let c = rng.random_range(-1.0..1.0);
        let mu = rng.random_range(lo..=hi);
        let s = span * rng.random_range(0.02..0.5);
        f.iter_mut().zip(nodes).for_each(|(v, &x)| *v += c * (-(x - mu).powi(2) / (2.0 * s * s)).exp());
    }
    let ramps = rng.random_range(0..=2);
    for _ in 0..ramps {
        let c = rng.random_range(-1.0..1.0);
        let t = rng.random_range(lo..=hi);
        let width = span * rng.random_range(0.01..0.5);
        f.iter_mut().zip(nodes).for_each(|(v, &x)| *v += c * ((x - t) / width).tanh());
    }
    if rng.random_bool(0.3) {
        let a = rng.random_range(lo..=hi);
        let b = rng.random_range(a..=hi);
        let c = rng.random_range(-1.0..1.0);
        f.iter_mut().zip(nodes).for_each(|(v, &x)| {
            if x >= a && x <= b {
                *v += c
            }
        });
    }
    if rng.random_bool(0.25) {
        let amp = rng.random_range(0.0..0.5);
        f.iter_mut().for_each(|v| *v += amp * rng.random_range(-1.0..1.0));
    }
    f
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalPoincareRecord {
    pub max_ratio: f64,
    pub paper_constant: f64,
    pub trials_used: usize,
    pub violations: usize,
    pub pass: bool,
}

/// Variance over the window against `2^α K^2 r^α E_h / (C k)`, on random functions.
pub fn local_poincare_check(form: &DiscreteForm, trials: usize, seed: u64) -> Result<LocalPoincareRecord> {
    if form.kernel != KernelKind::Full {
        return Err(ErgoError::precondition("local Poincaré check needs the full kernel"));
    }
    let alpha = form.alpha.alpha();
    let r = form.window_radius;
    let (big_k, small_k) = form.mass_bounds();
    let constant = 2f64.powf(alpha) * big_k * big_k * r.powf(alpha) / (normalizing_constant(form.alpha) * small_k);
    let idx: Vec<u64> = (0..trials as u64).collect();
    let ratios = par_map(&idx, |&t| {
        let f = random_function(&form.nodes, &mut trial_rng(seed, t));
        let e = form.energy(&f);
        if e <= 1e-300 {
            None
        } else {
            Some(form.variance(&f) / e)
        }
    });
    let used: Vec<f64> = ratios.into_iter().flatten().collect();
    let max_ratio = used.iter().cloned().fold(0.0, f64::max);
    let violations = used.iter().filter(|&&q| q > constant).count();
    Ok(LocalPoincareRecord { max_ratio, paper_constant: constant, trials_used: used.len(), violations, pass: violations == 0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperPoincareRecord {
    pub s: f64,
    pub worst_slack: f64,
    pub violations: usize,
    pub pass: bool,
}

/// `β`-term multiplier `C_6 K / k^2 (1 + (C s)^{-1/α} K^{1/α})`.
fn super_term(form: &DiscreteForm, s: f64, c6: f64) -> f64 {
    let alpha = form.alpha.alpha();
    let c = normalizing_constant(form.alpha);
    let (big_k, small_k) = form.mass_bounds();
    c6 * big_k / (small_k * small_k) * (1.0 + (c * s).powf(-1.0 / alpha) * big_k.powf(1.0 / alpha))
}

fn super_parts(form: &DiscreteForm, f: &[f64]) -> (f64, f64, f64) {
    let l2: f64 = form.mass_weights.iter().zip(f).map(|(m, v)| m * v * v).sum();
    let l1: f64 = form.mass_weights.iter().zip(f).map(|(m, v)| m * v.abs()).sum();
    (l2, form.energy(f), l1 * l1)
}

/// Local super Poincaré inequality on random functions plus `f = 1`, for each `s`.
pub fn local_super_poincare_check(
    form: &DiscreteForm,
    s_values: &[f64],
    trials: usize,
    seed: u64,
    c6: f64,
) -> Result<Vec<SuperPoincareRecord>> {
    if form.kernel != KernelKind::Full {
        return Err(ErgoError::precondition("local super Poincaré check needs the full kernel"));
    }
    let idx: Vec<u64> = (0..trials as u64).collect();
    let mut parts = par_map(&idx, |&t| super_parts(form, &random_function(&form.nodes, &mut trial_rng(seed, t))));
    parts.push(super_parts(form, &vec![1.0; form.len()]));
    Ok(s_values
        .iter()
        .map(|&s| {
            let b = super_term(form, s, c6);
            let slacks: Vec<f64> = parts.iter().map(|(l2, e, l1sq)| (s * e + b * l1sq - l2) / l2.max(1e-300)).collect();
            let worst = slacks.iter().cloned().fold(f64::INFINITY, f64::min);
            let violations = slacks.iter().filter(|&&x| x < 0.0).count();
            SuperPoincareRecord { s, worst_slack: worst, violations, pass: violations == 0 }
        })
        .collect())
}

/// Smallest `C_6` making the local super Poincaré inequality hold for `a = 1` on the given
/// windows, random functions and `s` values.
pub fn calibrate_c6(idx: StableIndex, radii: &[f64], h: f64, s_values: &[f64], trials: usize, seed: u64) -> Result<f64> {
    let mut c6: f64 = 0.0;
    for &r in radii {
        let form = assemble_with(idx, r, h, KernelKind::Full, |_| 1.0)?;
        let t: Vec<u64> = (0..trials as u64).collect();
        let mut parts = par_map(&t, |&k| super_parts(&form, &random_function(&form.nodes, &mut trial_rng(seed, k))));
        parts.push(super_parts(&form, &vec![1.0; form.len()]));
        for &s in s_values {
            let unit = super_term(&form, s, 1.0);
            for (l2, e, l1sq) in &parts {
                c6 = c6.max((l2 - s * e) / (unit * l1sq.max(1e-300)));
            }
        }
    }
    Ok(c6)
}

/// One member of the `g_n` family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GnRecord {
    pub n: f64,
    pub energy: f64,
    pub mu_gn2: f64,
    pub mu_gn_sq: f64,
    pub variance: f64,
    pub rayleigh: f64,
}

/// `∫_0^∞ (g(x+z) - g(x))^2 z^{-1-α} dz` for `g = g_n`.
fn gn_inner(g: &TestFunction, n: f64, x: f64, alpha: f64, opts: QuadOpts) -> Result<f64> {
    let end = 2.0 * n - x;
    if end <= 0.0 {
        return Ok(0.0);
    }
    let gx = g.value(x);
    let f = |z: f64| (g.value(x + z) - gx).powi(2) * z.powf(-1.0 - alpha);
    let mut pts: Vec<f64> = [-2.0 * n, -n, n].iter().map(|p| p - x).filter(|&z| z > 0.0).collect();
    pts.push(end);
    let mut total = 0.0;
    let first = pts[0];
    if x.abs() >= n && x.abs() <= 2.0 * n {
        // Taylor expansion near z = 0, where the difference quotient cancels.
        let d = crate::generator::smoothstep((x.abs() - n) / n);
        let (g1, g2) = (x.signum() * d[1] / n, d[2] / (n * n));
        let delta = (1e-3 * n).min(first);
        total += g1 * g1 * delta.powf(2.0 - alpha) / (2.0 - alpha)
            + g1 * g2 * delta.powf(3.0 - alpha) / (3.0 - alpha)
            + g2 * g2 * delta.powf(4.0 - alpha) / (4.0 * (4.0 - alpha));
        if first > delta {
            total += integrate(f, &geometric_points(delta, first, 4.0), opts)?.value;
        }
    }
    for w in pts.windows(2) {
        total += integrate(f, &[w[0], w[1]], opts)?.value;
    }
    total += (1.0 - gx).powi(2) * end.powf(-alpha) / alpha;
    Ok(total)
}

/// `E(g_n, g_n)` by nested quadrature over `|x| <= window` with an asymptotic far tail.
pub fn gn_energy(idx: StableIndex, n: f64, window: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(ErgoError::domain(format!("n must be positive, got {n}")));
    }
    if window < 4.0 * n {
        return Err(ErgoError::precondition(format!("window {window} is smaller than 4n = {}", 4.0 * n)));
    }
    let alpha = idx.alpha();
    let g = TestFunction::Ramp { n };
    let inner_opts = QuadOpts { abs_tol: 1e-11 * n.powf(-alpha), rel_tol: 1e-9, max_intervals: 20_000 };
    let outer_opts = QuadOpts { abs_tol: 1e-9 * n.powf(1.0 - alpha), rel_tol: 1e-8, max_intervals: 20_000 };
    let inner = |x: f64| gn_inner(&g, n, x, alpha, inner_opts).unwrap_or(f64::NAN);
    let mut pts: Vec<f64> = geometric_points(1e-3 * n, window - 2.0 * n, 1.5).iter().rev().map(|t| -2.0 * n - t).collect();
    pts.extend([-2.0 * n, -1.5 * n, -n, 0.0, n, 1.5 * n, 2.0 * n]);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let body = integrate(inner, &pts, outer_opts)?;
    let x0 = pts[0];
    let tail = inner(x0) * x0.abs() / alpha;
    let v = normalizing_constant(idx) * (body.value + tail);
    if !v.is_finite() {
        return Err(ErgoError::Solver("g_n energy quadrature failed".into()));
    }
    Ok(v)
}

fn gn_moments(w: &WeightSpec, n: f64) -> Result<(f64, f64)> {
    let g = TestFunction::Ramp { n };
    let opts = QuadOpts { abs_tol: 1e-16, rel_tol: 1e-12, max_intervals: 20_000 };
    let outer = w.mass_outside(2.0 * n)?;
    let mid1 = 2.0 * integrate(|x| g.value(x) / w.a(x), &[n, 1.5 * n, 2.0 * n], opts)?.value;
    let mid2 = 2.0 * integrate(|x| g.value(x).powi(2) / w.a(x), &[n, 1.5 * n, 2.0 * n], opts)?.value;
    Ok((outer + mid2, outer + mid1))
}

/// `E(g_n, g_n)`, `μ(g_n^2)`, `μ(g_n)^2` and their Rayleigh quotient for each `n`.
pub fn gn_suite(w: &WeightSpec, n_values: &[f64], window: Option<f64>) -> Result<Vec<GnRecord>> {
    if n_values.is_empty() || n_values.windows(2).any(|p| p[1] <= p[0]) {
        return Err(ErgoError::precondition("n values must be increasing"));
    }
    let window = window.unwrap_or(8.0 * n_values.last().unwrap());
    let rows = par_map(n_values, |&n| -> Result<GnRecord> {
        let energy = gn_energy(w.alpha, n, window)?;
        let (m2, m1) = gn_moments(w, n)?;
        let variance = m2 - m1 * m1;
        Ok(GnRecord { n, energy, mu_gn2: m2, mu_gn_sq: m1 * m1, variance, rayleigh: energy / variance })
    });
    rows.into_iter().collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharpnessFamily {
    SuperBeta,
    WeakAlpha,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpnessReport {
    pub family: SharpnessFamily,
    /// `"rate_lower_bound"` when the sequence should stay positive, `"failure"` when the
    /// required constant should grow without bound.
    pub mode: &'static str,
    pub n_values: Vec<f64>,
    pub r_n: Vec<f64>,
    pub required: Vec<f64>,
    pub sequence: Vec<f64>,
    pub min_sequence: f64,
    pub log_slope: f64,
    pub bounded_away_from_zero: bool,
}

/// Lower-bound sequences obtained by substituting `g_n` into the super or weak Poincaré
/// inequality.
pub fn sharpness_report(w: &WeightSpec, family: SharpnessFamily, n_values: &[f64]) -> Result<SharpnessReport> {
    let alpha = w.alpha();
    enum Regime {
        WeakPower(f64),
        WeakLog(f64),
        SuperLog(f64),
        SuperFail,
    }
    let regime = match (&w.kind, family) {
        (WeightKind::Power { gamma }, SharpnessFamily::WeakAlpha) if *gamma < alpha => Regime::WeakPower(*gamma),
        (WeightKind::PowerLog { gamma }, SharpnessFamily::WeakAlpha) if *gamma < 0.0 => Regime::WeakLog(*gamma),
        (WeightKind::PowerLog { gamma }, SharpnessFamily::SuperBeta) if *gamma > 0.0 => Regime::SuperLog(*gamma),
        (WeightKind::PowerLog { .. }, SharpnessFamily::SuperBeta) => Regime::SuperFail,
        (WeightKind::Power { gamma }, SharpnessFamily::SuperBeta) if *gamma <= alpha => Regime::SuperFail,
        _ => {
            return Err(ErgoError::precondition(format!(
                "weight {:?} is outside the regime of the {family:?} sharpness family",
                w.kind
            )))
        }
    };
    if alpha <= 1.0 {
        return Err(ErgoError::precondition("sharpness families need alpha in (1, 2)"));
    }
    let rows = gn_suite(w, n_values, None)?;
    let mut r_n = vec![];
    let mut required = vec![];
    let mut sequence = vec![];
    let fixed_r = 0.5 * rows.iter().map(|g| g.mu_gn2 / g.energy).fold(f64::INFINITY, f64::min);
    for g in &rows {
        let sup = g.mu_gn_sq.sqrt().max(1.0 - g.mu_gn_sq.sqrt());
        match regime {
            Regime::WeakPower(gamma) => {
                let r = g.variance / 4.0;
                let req = (g.variance - r * sup * sup) / g.energy;
                r_n.push(r);
                required.push(req);
                sequence.push(r.powf((alpha - gamma) / (gamma - 1.0)) * req);
            }
            Regime::WeakLog(gamma) => {
                let r = g.variance / 4.0;
                let req = (g.variance - r * sup * sup) / g.energy;
                r_n.push(r);
                required.push(req);
                sequence.push((1.0 / r).ln_1p().powf(gamma) * req);
            }
            Regime::SuperLog(gamma) => {
                let r = g.mu_gn2 / (2.0 * g.energy);
                let req = (g.mu_gn2 - r * g.energy) / g.mu_gn_sq;
                r_n.push(r);
                required.push(req);
                sequence.push(r.powf(1.0 / gamma) * req.ln());
            }
            Regime::SuperFail => {
                let req = (g.mu_gn2 - fixed_r * g.energy) / g.mu_gn_sq;
                r_n.push(fixed_r);
                required.push(req);
                sequence.push(req);
            }
        }
    }
    let min_sequence = sequence.iter().cloned().fold(f64::INFINITY, f64::min);
    let positive = sequence.iter().all(|s| *s > 0.0);
    let log_slope = if positive { loglog_slope(n_values, &sequence) } else { f64::NAN };
    let mode = if matches!(regime, Regime::SuperFail) { "failure" } else { "rate_lower_bound" };
    let bounded_away_from_zero = positive && (mode == "failure" || log_slope > -0.1);
    Ok(SharpnessReport { family, mode, n_values: n_values.to_vec(), r_n, required, sequence, min_sequence, log_slope, bounded_away_from_zero })
}
