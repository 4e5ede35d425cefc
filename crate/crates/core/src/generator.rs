//! Pointwise evaluation of the fractional Laplacian, its truncation at unit jump size, the
//! time-changed and SDE generators, drift certificates and the integration-by-parts check.
//!
//! All integrals use the symmetrized form
//! `C ∫_0^∞ (u(x+z) + u(x-z) - 2u(x)) z^{-1-α} dz`, a Taylor expansion on `[0, δ]`,
//! adaptive Gauss-Kronrod panels on `[δ, Z]` and closed-form tails beyond `Z`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ErgoError, Result};
use crate::par::par_map;
use crate::quad::{composite_gl_nodes, geometric_points, integrate, with_breaks, Estimate, QuadOpts};
use crate::special_functions::{
    cot_pi_half_alpha, drift_series_e, drift_series_e_reflected, normalizing_constant, StableIndex,
};
use crate::weights_rates::{compute_rate_profile, WeightKind, WeightSpec};

/// A user-supplied test function with a bound on `|u|` and its non-smooth points.
#[derive(Clone)]
pub struct CustomFn {
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub sup_abs: f64,
    pub kinks: Vec<f64>,
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFn").field("sup_abs", &self.sup_abs).field("kinks", &self.kinks).finish()
    }
}

/// Functions the operators act on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    /// `1 + |x|^theta`.
    LyapunovPow { theta: f64 },
    /// `2 - (1 + phi(x))^{-theta}` with the spline [`phi_spline`].
    LyapunovNeg { theta: f64 },
    Cosine { xi: f64 },
    /// `1 - g_n`, supported in `[-2n, 2n]`.
    Bump { n: f64 },
    /// `g_n`: zero on `[-n, n]`, one outside `[-2n, 2n]`, quintic in between.
    Ramp { n: f64 },
    Constant { c: f64 },
    Sum { terms: Vec<(f64, TestFunction)> },
    #[serde(skip)]
    Custom(CustomFn),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Smoothness {
    Cusp,
    C2,
}

const SPLINE: [f64; 3] = [1.875, -1.25, 0.375];

/// Even `C^2` spline equal to `|x|` for `|x| >= 1` and below `|x|` inside.
pub fn phi_spline(x: f64) -> f64 {
    let ax = x.abs();
    if ax >= 1.0 {
        return ax;
    }
    let x2 = x * x;
    x2 * (SPLINE[0] + x2 * (SPLINE[1] + x2 * SPLINE[2]))
}

/// Derivatives `phi', phi'', phi''', phi''''` of [`phi_spline`].
fn phi_derivs(x: f64) -> [f64; 4] {
    if x.abs() >= 1.0 {
        return [x.signum(), 0.0, 0.0, 0.0];
    }
    let [b, c, d] = SPLINE;
    let x2 = x * x;
    [
        x * (2.0 * b + x2 * (4.0 * c + 6.0 * d * x2)),
        2.0 * b + x2 * (12.0 * c + 30.0 * d * x2),
        x * (24.0 * c + 120.0 * d * x2),
        24.0 * c + 360.0 * d * x2,
    ]
}

pub(crate) fn smoothstep(t: f64) -> [f64; 5] {
    if t <= 0.0 {
        return [0.0; 5];
    }
    if t >= 1.0 {
        return [1.0, 0.0, 0.0, 0.0, 0.0];
    }
    let t2 = t * t;
    [
        t2 * t * (10.0 + t * (-15.0 + 6.0 * t)),
        30.0 * t2 * (1.0 - t) * (1.0 - t),
        60.0 * t * (1.0 + t * (-3.0 + 2.0 * t)),
        60.0 + t * (-360.0 + 360.0 * t),
        -360.0 + 720.0 * t,
    ]
}

/// `sum_k binom(p, k) c^k Z^{p-k-α} / (α + k - p)`, the tail of `∫_Z^∞ (z + c)^p z^{-1-α} dz`.
fn binom_tail(p: f64, c: f64, z: f64, alpha: f64) -> f64 {
    let mut coef = 1.0;
    let mut pow = z.powf(p - alpha);
    let mut sum = 0.0;
    for k in 0..400 {
        let kf = k as f64;
        let term = coef * pow / (alpha + kf - p);
        sum += term;
        if k > 2 && term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        coef *= (p - kf) / (kf + 1.0);
        pow *= c / z;
        if coef == 0.0 {
            break;
        }
    }
    sum
}

impl TestFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            TestFunction::LyapunovPow { theta } if !(*theta > 0.0 && *theta < 1.0) => {
                Err(ErgoError::domain(format!("lyapunov_pow needs theta in (0, 1), got {theta}")))
            }
            TestFunction::LyapunovNeg { theta } if !(*theta > 0.0 && theta.is_finite()) => {
                Err(ErgoError::domain(format!("lyapunov_neg needs theta > 0, got {theta}")))
            }
            TestFunction::Bump { n } | TestFunction::Ramp { n } if !(*n > 0.0 && n.is_finite()) => {
                Err(ErgoError::domain(format!("g_n needs n > 0, got {n}")))
            }
            TestFunction::Cosine { xi } if !(xi.is_finite() && *xi != 0.0) => {
                Err(ErgoError::domain(format!("cosine needs a finite nonzero frequency, got {xi}")))
            }
            TestFunction::Sum { terms } => terms.iter().try_for_each(|(_, f)| f.validate()),
            _ => Ok(()),
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        match self {
            TestFunction::LyapunovPow { theta } => 1.0 + y.abs().powf(*theta),
            TestFunction::LyapunovNeg { theta } => 2.0 - (1.0 + phi_spline(y)).powf(-theta),
            TestFunction::Cosine { xi } => (xi * y).cos(),
            TestFunction::Ramp { n } => smoothstep((y.abs() - n) / n)[0],
            TestFunction::Bump { n } => 1.0 - smoothstep((y.abs() - n) / n)[0],
            TestFunction::Constant { c } => *c,
            TestFunction::Sum { terms } => terms.iter().map(|(c, f)| c * f.value(y)).sum(),
            TestFunction::Custom(c) => (c.f)(y),
        }
    }

    /// `(u'', u'''')` at `x`, away from kinks.
    fn d2_d4(&self, x: f64) -> (f64, f64) {
        match self {
            TestFunction::LyapunovPow { theta: t } => {
                let ax = x.abs();
                let c2 = t * (t - 1.0);
                (c2 * ax.powf(t - 2.0), c2 * (t - 2.0) * (t - 3.0) * ax.powf(t - 4.0))
            }
            TestFunction::LyapunovNeg { theta: t } => {
                let p = phi_spline(x);
                let [p1, p2, p3, p4] = phi_derivs(x);
                let w = 1.0 + p;
                let g1 = t * w.powf(-t - 1.0);
                let g2 = -t * (t + 1.0) * w.powf(-t - 2.0);
                let g3 = t * (t + 1.0) * (t + 2.0) * w.powf(-t - 3.0);
                let g4 = -t * (t + 1.0) * (t + 2.0) * (t + 3.0) * w.powf(-t - 4.0);
                let d2 = g2 * p1 * p1 + g1 * p2;
                let d4 = g4 * p1.powi(4) + 6.0 * g3 * p1 * p1 * p2 + 3.0 * g2 * p2 * p2 + 4.0 * g2 * p1 * p3 + g1 * p4;
                (d2, d4)
            }
            TestFunction::Cosine { xi } => {
                let c = (xi * x).cos();
                (-xi * xi * c, xi.powi(4) * c)
            }
            TestFunction::Ramp { n } | TestFunction::Bump { n } => {
                let s = smoothstep((x.abs() - n) / n);
                let sign = if matches!(self, TestFunction::Bump { .. }) { -1.0 } else { 1.0 };
                (sign * s[2] / (n * n), sign * s[4] / n.powi(4))
            }
            TestFunction::Constant { .. } => (0.0, 0.0),
            TestFunction::Sum { terms } => terms.iter().fold((0.0, 0.0), |(a, b), (c, f)| {
                let (d2, d4) = f.d2_d4(x);
                (a + c * d2, b + c * d4)
            }),
            TestFunction::Custom(c) => {
                let f = &c.f;
                let h = 1e-4 * (1.0 + x.abs());
                let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
                let h = 1e-2 * (1.0 + x.abs());
                let d4 = (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / h.powi(4);
                (d2, d4)
            }
        }
    }

    fn kinks(&self) -> Vec<(f64, Smoothness)> {
        match self {
            TestFunction::LyapunovPow { .. } => vec![(0.0, Smoothness::Cusp)],
            TestFunction::LyapunovNeg { .. } => vec![(-1.0, Smoothness::C2), (1.0, Smoothness::C2)],
            TestFunction::Ramp { n } | TestFunction::Bump { n } => {
                [-2.0 * n, -n, *n, 2.0 * n].iter().map(|&k| (k, Smoothness::C2)).collect()
            }
            TestFunction::Sum { terms } => terms.iter().flat_map(|(_, f)| f.kinks()).collect(),
            TestFunction::Custom(c) => c.kinks.iter().map(|&k| (k, Smoothness::Cusp)).collect(),
            _ => vec![],
        }
    }

    /// Growth exponent at infinity (`0` for bounded functions).
    pub fn growth(&self) -> f64 {
        match self {
            TestFunction::LyapunovPow { theta } => *theta,
            TestFunction::Sum { terms } => terms.iter().map(|(_, f)| f.growth()).fold(0.0, f64::max),
            _ => 0.0,
        }
    }

    /// Smallest `δ` with membership in `H_δ` for every larger `δ <= 1` (`0` when bounded).
    pub fn holder_class_delta(&self) -> Option<f64> {
        match self {
            TestFunction::Custom(c) if !c.sup_abs.is_finite() => None,
            _ => Some(self.growth()),
        }
    }

    /// Compact support, when there is one.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            TestFunction::Bump { n } => Some((-2.0 * n, 2.0 * n)),
            TestFunction::Sum { terms } => terms.iter().try_fold((0.0f64, 0.0f64), |(lo, hi), (_, f)| {
                f.support().map(|(a, b)| (lo.min(a), hi.max(b)))
            }),
            _ => None,
        }
    }

    /// `u(x + z) + u(x - z) - 2 u(x)` for `z > 0`, cancellation-free where it matters.
    fn sym_diff(&self, x: f64, z: f64) -> f64 {
        match self {
            TestFunction::LyapunovPow { theta } => {
                let ax = x.abs();
                if z < 0.5 * ax {
                    let s = z / ax;
                    ax.powf(*theta) * ((theta * s.ln_1p()).exp_m1() + (theta * (-s).ln_1p()).exp_m1())
                } else {
                    (x + z).abs().powf(*theta) + (x - z).abs().powf(*theta) - 2.0 * ax.powf(*theta)
                }
            }
            TestFunction::LyapunovNeg { theta } => {
                let ax = x.abs();
                if ax >= 1.0 && z <= ax - 1.0 {
                    let w = 1.0 + ax;
                    let s = z / w;
                    -w.powf(-theta) * ((-theta * s.ln_1p()).exp_m1() + (-theta * (-s).ln_1p()).exp_m1())
                } else {
                    self.value(x + z) + self.value(x - z) - 2.0 * self.value(x)
                }
            }
            TestFunction::Cosine { xi } => {
                let s = (0.5 * xi * z).sin();
                -4.0 * (xi * x).cos() * s * s
            }
            TestFunction::Sum { terms } => terms.iter().map(|(c, f)| c * f.sym_diff(x, z)).sum(),
            _ => self.value(x + z) + self.value(x - z) - 2.0 * self.value(x),
        }
    }

    /// Longest quadrature panel that keeps oscillations resolved.
    fn max_panel(&self) -> f64 {
        match self {
            TestFunction::Cosine { xi } => PI / xi.abs(),
            TestFunction::Sum { terms } => terms.iter().map(|(_, f)| f.max_panel()).fold(f64::INFINITY, f64::min),
            _ => f64::INFINITY,
        }
    }

    /// Smallest `Z` from which [`Self::one_sided_tail`] is valid at `x`.
    fn far_start(&self, x: f64) -> f64 {
        match self {
            TestFunction::LyapunovPow { .. } | TestFunction::LyapunovNeg { .. } => 4.0 * (2.0 + x.abs()),
            TestFunction::Bump { n } | TestFunction::Ramp { n } => 2.0 * n + x.abs() + 1.0,
            TestFunction::Sum { terms } => terms.iter().map(|(_, f)| f.far_start(x)).fold(0.0, f64::max),
            _ => 0.0,
        }
    }

    /// `∫_Z^∞ (u(x + σ z) - u(x)) z^{-1-α} dz` with an error bound.
    fn one_sided_tail(&self, x: f64, z: f64, alpha: f64, sigma: f64) -> (f64, f64) {
        let ux = self.value(x);
        let flat = z.powf(-alpha) / alpha;
        match self {
            TestFunction::LyapunovPow { theta } => ((1.0 - ux) * flat + binom_tail(*theta, sigma * x, z, alpha), 0.0),
            TestFunction::LyapunovNeg { theta } => {
                ((2.0 - ux) * flat - binom_tail(-theta, 1.0 + sigma * x, z, alpha), 0.0)
            }
            TestFunction::Cosine { xi } => {
                let osc = z.powf(-1.0 - alpha) / xi.abs();
                (-ux * flat - (xi * (x + sigma * z)).sin() * osc * sigma * xi.signum(), osc)
            }
            TestFunction::Ramp { .. } => ((1.0 - ux) * flat, 0.0),
            TestFunction::Bump { .. } => (-ux * flat, 0.0),
            TestFunction::Constant { .. } => (0.0, 0.0),
            TestFunction::Sum { terms } => terms.iter().fold((0.0, 0.0), |(v, e), (c, f)| {
                let (tv, te) = f.one_sided_tail(x, z, alpha, sigma);
                (v + c * tv, e + c.abs() * te)
            }),
            TestFunction::Custom(c) => (0.0, 2.0 * c.sup_abs * flat),
        }
    }
}

/// Quadrature settings of the operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenOpts {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub delta: f64,
    pub z_max: f64,
}

impl Default for GenOpts {
    fn default() -> Self {
        GenOpts { abs_tol: 1e-8, rel_tol: 1e-10, delta: 1e-3, z_max: 1e4 }
    }
}

impl GenOpts {
    fn quad(&self) -> QuadOpts {
        QuadOpts { abs_tol: self.abs_tol, rel_tol: self.rel_tol, max_intervals: 400_000 }
    }

    fn cutoff(&self, f: &TestFunction, x: f64) -> f64 {
        self.z_max.max(100.0 * (1.0 + x.abs())).max(f.far_start(x))
    }
}

fn check_growth(f: &TestFunction, alpha: f64) -> Result<()> {
    f.validate()?;
    if f.growth() >= alpha {
        return Err(ErgoError::domain(format!(
            "test function grows like |x|^{} which is not integrable against |z|^(-1-{alpha})",
            f.growth()
        )));
    }
    Ok(())
}

/// `∫_0^δ (u(x+z) + u(x-z) - 2u(x)) z^{-1-α} dz` by Taylor expansion; returns `(value, error, δ)`.
fn taylor_part(f: &TestFunction, x: f64, alpha: f64, opts: &GenOpts) -> Result<(f64, f64, f64)> {
    let scale = x.abs().max(1.0);
    let mut delta = opts.delta;
    let mut on_c2 = false;
    for (k, s) in f.kinks() {
        let d = (x - k).abs();
        if d <= 1e-12 * scale {
            if s == Smoothness::Cusp {
                return Err(ErgoError::domain(format!("test function is not twice differentiable at x = {x}")));
            }
            on_c2 = true;
        } else {
            delta = delta.min(0.5 * d);
        }
    }
    if on_c2 {
        delta = delta.min(1e-5);
    }
    let (d2, d4) = f.d2_d4(x);
    let d4 = if on_c2 { 0.0 } else { d4 };
    let v2 = d2 * delta.powf(2.0 - alpha) / (2.0 - alpha);
    let v4 = d4 * delta.powf(4.0 - alpha) / (12.0 * (4.0 - alpha));
    let err = if on_c2 { d2.abs().max(1.0) * delta.powf(3.0 - alpha) } else { v4.abs() * delta * delta + 1e-16 * v2.abs() };
    Ok((v2 + v4, err, delta))
}

fn refine(pts: Vec<f64>, max_len: f64) -> Vec<f64> {
    if !max_len.is_finite() {
        return pts;
    }
    let mut out = vec![pts[0]];
    for w in pts.windows(2) {
        let n = ((w[1] - w[0]) / max_len).ceil().clamp(1.0, 1e5) as usize;
        let h = (w[1] - w[0]) / n as f64;
        out.extend((1..n).map(|k| w[0] + k as f64 * h));
        out.push(w[1]);
    }
    out
}

/// `∫_lo^hi (u(x+z) + u(x-z) - 2u(x)) z^{-1-α} dz`.
fn sym_range(f: &TestFunction, x: f64, alpha: f64, lo: f64, hi: f64, opts: &GenOpts) -> Result<Estimate> {
    if hi <= lo {
        return Ok(Estimate::default());
    }
    let kinks: Vec<f64> = f.kinks().iter().map(|(k, _)| (k - x).abs()).collect();
    let pts = refine(with_breaks(geometric_points(lo, hi, 2.0), &kinks), f.max_panel());
    integrate(|z| f.sym_diff(x, z) * z.powf(-1.0 - alpha), &pts, opts.quad())
}

/// `∫_lo^∞ (u(x+z) + u(x-z) - 2u(x)) z^{-1-α} dz`.
fn sym_from(f: &TestFunction, x: f64, alpha: f64, lo: f64, opts: &GenOpts) -> Result<Estimate> {
    let z = opts.cutoff(f, x).max(lo);
    let body = sym_range(f, x, alpha, lo, z, opts)?;
    let (tp, ep) = f.one_sided_tail(x, z, alpha, 1.0);
    let (tm, em) = f.one_sided_tail(x, z, alpha, -1.0);
    Ok(Estimate { value: body.value + tp + tm, error: body.error + ep + em, evals: body.evals })
}

/// `∫_lo^∞ (u(x + σz) - u(x)) z^{-1-α} dz`.
fn one_sided_from(f: &TestFunction, x: f64, sigma: f64, alpha: f64, lo: f64, opts: &GenOpts) -> Result<Estimate> {
    let z = opts.cutoff(f, x).max(lo);
    let kinks: Vec<f64> = f.kinks().iter().map(|(k, _)| sigma * (k - x)).collect();
    let ux = f.value(x);
    let pts = refine(with_breaks(geometric_points(lo, z, 2.0), &kinks), f.max_panel());
    let body = integrate(|s| (f.value(x + sigma * s) - ux) * s.powf(-1.0 - alpha), &pts, opts.quad())?;
    let (t, e) = f.one_sided_tail(x, z, alpha, sigma);
    Ok(Estimate { value: body.value + t, error: body.error + e, evals: body.evals })
}

fn scaled(c: f64, e: Estimate) -> Estimate {
    Estimate { value: c * e.value, error: c * e.error, evals: e.evals }
}

/// `Δ^{α/2} u(x)`.
pub fn frac_laplacian(f: &TestFunction, x: f64, idx: StableIndex) -> Result<Estimate> {
    frac_laplacian_with(f, x, idx, &GenOpts::default())
}

pub fn frac_laplacian_with(f: &TestFunction, x: f64, idx: StableIndex, opts: &GenOpts) -> Result<Estimate> {
    let alpha = idx.alpha();
    check_growth(f, alpha)?;
    let (tv, te, delta) = taylor_part(f, x, alpha, opts)?;
    let rest = sym_from(f, x, alpha, delta, opts)?;
    let c = normalizing_constant(idx);
    Ok(scaled(c, Estimate { value: tv + rest.value, error: te + rest.error, evals: rest.evals }))
}

/// `Δ^{α/2}_{>1} u(x)`: jumps of size at most one removed.
pub fn frac_laplacian_truncated(f: &TestFunction, x: f64, idx: StableIndex) -> Result<Estimate> {
    frac_laplacian_truncated_with(f, x, idx, &GenOpts::default())
}

pub fn frac_laplacian_truncated_with(f: &TestFunction, x: f64, idx: StableIndex, opts: &GenOpts) -> Result<Estimate> {
    let alpha = idx.alpha();
    check_growth(f, alpha)?;
    Ok(scaled(normalizing_constant(idx), sym_from(f, x, alpha, 1.0, opts)?))
}

/// The part of `Δ^{α/2} u(x)` from jumps of size at most one.
pub fn small_jump_part(f: &TestFunction, x: f64, idx: StableIndex, opts: &GenOpts) -> Result<Estimate> {
    let alpha = idx.alpha();
    check_growth(f, alpha)?;
    let (tv, te, delta) = taylor_part(f, x, alpha, opts)?;
    let mid = sym_range(f, x, alpha, delta, 1.0, opts)?;
    Ok(scaled(normalizing_constant(idx), Estimate { value: tv + mid.value, error: te + mid.error, evals: mid.evals }))
}

/// Coefficient multiplying `Δ^{α/2}`: `σ(x)^α` for SDE weights, `a(x)` otherwise.
pub fn generator_coefficient(w: &WeightSpec, x: f64) -> f64 {
    match w.sigma(x) {
        Some(s) => s.powf(w.alpha()),
        None => w.a(x),
    }
}

/// `a(x) Δ^{α/2} u(x)` (or with the truncated operator); `σ(x)^α Δ^{α/2}` for SDE weights.
pub fn timechanged_generator(f: &TestFunction, x: f64, w: &WeightSpec, truncated: bool) -> Result<Estimate> {
    timechanged_generator_with(f, x, w, truncated, &GenOpts::default())
}

pub fn timechanged_generator_with(
    f: &TestFunction,
    x: f64,
    w: &WeightSpec,
    truncated: bool,
    opts: &GenOpts,
) -> Result<Estimate> {
    let base = if truncated {
        frac_laplacian_truncated_with(f, x, w.alpha, opts)?
    } else {
        frac_laplacian_with(f, x, w.alpha, opts)?
    };
    Ok(scaled(generator_coefficient(w, x), base))
}

/// Coefficient `θπ C_{1,α} cot(απ/2) / (2α)` of the outside term of the power-weight drift bound.
pub fn lemma32_outside_coefficient(idx: StableIndex, theta: f64) -> Result<f64> {
    let a = idx.alpha();
    Ok(theta * normalizing_constant(idx) * cot_pi_half_alpha(idx)? / (2.0 * a))
}

/// One grid point of a drift certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginPoint {
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// Observed versus predicted large-`|x|` constant of a drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticCheck {
    pub x: f64,
    pub observed: f64,
    pub predicted: f64,
}

/// Finite-grid certificate of `LV <= -c_1 V + c_2 1_{B(0, r_0)}`-type drift bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftCertificate {
    pub scope: &'static str,
    pub r0: f64,
    pub negative_rate_constant: f64,
    pub inside_bound: f64,
    pub margin_grid: Vec<MarginPoint>,
    pub verified: bool,
    pub outside_points: usize,
    pub worst_slack: f64,
    pub asymptotic: Option<AsymptoticCheck>,
}

const GRID_SCOPE: &str = "finite grid";
const R0_DOUBLINGS: i32 = 20;

/// `0` and `±10^{k/per_decade}` for `|x|` in `[0.1, 10^6]`.
pub fn default_drift_grid(per_decade: usize) -> Vec<f64> {
    let n = per_decade.max(1) as i32;
    let mut g = vec![0.0];
    for k in -n..=6 * n {
        let v = 10f64.powf(k as f64 / n as f64);
        g.push(v);
        g.push(-v);
    }
    g.sort_by(f64::total_cmp);
    g
}

fn sup_a(w: &WeightSpec, r0: f64) -> Result<f64> {
    Ok(1.0 / compute_rate_profile(w, &[r0])?.small_k[0])
}

/// Drift bound for `V = 1 + |x|^θ` and the truncated generator `a Δ^{α/2}_{>1}`.
pub fn verify_drift_lemma32(w: &WeightSpec, theta: f64, grid: &[f64]) -> Result<DriftCertificate> {
    let idx = w.alpha;
    let alpha = idx.alpha();
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(ErgoError::precondition(format!("drift lemma needs alpha in (1, 2), got {alpha}")));
    }
    let e = drift_series_e(idx, theta)?;
    if e.value >= 0.0 {
        return Err(ErgoError::precondition(format!("E(alpha, theta) = {} is not negative", e.value)));
    }
    if grid.is_empty() {
        return Err(ErgoError::precondition("empty drift grid"));
    }
    let v = TestFunction::LyapunovPow { theta };
    let c = normalizing_constant(idx);
    let k_out = lemma32_outside_coefficient(idx, theta)?;
    let trunc = par_map(grid, |&x| {
        let opts = GenOpts { abs_tol: 1e-10 * c * (1.0 + x.abs()).powf(theta - alpha), rel_tol: 1e-9, ..GenOpts::default() };
        frac_laplacian_truncated_with(&v, x, idx, &opts).map(|e| e.value)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let lhs: Vec<f64> = grid.iter().zip(&trunc).map(|(&x, t)| w.a(x) * t).collect();
    let outside_rhs: Vec<f64> =
        grid.iter().map(|&x| k_out * w.a(x) / (1.0 + x.abs()).powf(alpha) * v.value(x)).collect();
    let mut cert = None;
    for j in 0..=R0_DOUBLINGS {
        let r0 = 2f64.powi(j);
        let inside = 2.0 * c * sup_a(w, r0)? / (alpha - theta);
        let margin: Vec<MarginPoint> = grid
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let rhs = if x.abs() < r0 { inside } else { outside_rhs[i] };
                MarginPoint { x, lhs: lhs[i], rhs, slack: rhs - lhs[i] }
            })
            .collect();
        let worst = margin.iter().map(|m| m.slack).fold(f64::INFINITY, f64::min);
        let verified = worst >= 0.0;
        let done = verified || j == R0_DOUBLINGS;
        if done {
            cert = Some(DriftCertificate {
                scope: GRID_SCOPE,
                r0,
                negative_rate_constant: k_out,
                inside_bound: inside,
                outside_points: grid.iter().filter(|x| x.abs() >= r0).count(),
                margin_grid: margin,
                verified,
                worst_slack: worst,
                asymptotic: None,
            });
            break;
        }
    }
    let mut cert = cert.unwrap();
    let (imax, xmax) = grid.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map(|(i, x)| (i, *x)).unwrap();
    if xmax != 0.0 {
        cert.asymptotic = Some(AsymptoticCheck {
            x: xmax,
            observed: xmax.abs().powf(alpha - theta) * trunc[imax],
            predicted: theta * c / alpha * e.value,
        });
    }
    Ok(cert)
}

/// Drift bound `LV <= -c_1 V + c_2 1_{B(0, r_0)}` for `L = σ^α Δ^{α/2}` and the bounded
/// `V = 2 - (1 + φ)^{-θ}`, with `σ` of growth `γ > 1`.
pub fn verify_drift_thm17(w: &WeightSpec, theta: f64, grid: &[f64]) -> Result<DriftCertificate> {
    let idx = w.alpha;
    let alpha = idx.alpha();
    let gamma = match &w.kind {
        WeightKind::SdeSigma { gamma, .. } => *gamma,
        _ => return Err(ErgoError::precondition("SDE drift needs an sde_sigma weight")),
    };
    if !(gamma > 1.0) {
        return Err(ErgoError::precondition(format!("sigma must grow like |x|^gamma with gamma > 1, got {gamma}")));
    }
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(ErgoError::precondition(format!("SDE drift needs alpha in (1, 2), got {alpha}")));
    }
    if !(theta > 0.0 && theta < alpha * (gamma - 1.0) && theta < 1.0) {
        return Err(ErgoError::precondition(format!("theta must lie in (0, min(1, alpha (gamma - 1))), got {theta}")));
    }
    let e = drift_series_e_reflected(idx, theta)?;
    if e.value >= 0.0 {
        return Err(ErgoError::precondition(format!("E(alpha, -theta) = {} is not negative", e.value)));
    }
    if grid.is_empty() {
        return Err(ErgoError::precondition("empty drift grid"));
    }
    let v = TestFunction::LyapunovNeg { theta };
    let c = normalizing_constant(idx);
    let full = par_map(grid, |&x| {
        let opts = GenOpts { abs_tol: 1e-10 * c * (1.0 + x.abs()).powf(-theta - alpha), rel_tol: 1e-9, ..GenOpts::default() };
        frac_laplacian_with(&v, x, idx, &opts).map(|e| e.value)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let lhs: Vec<f64> = grid.iter().zip(&full).map(|(&x, d)| generator_coefficient(w, x) * d).collect();
    let vv: Vec<f64> = grid.iter().map(|&x| v.value(x)).collect();
    let mut cert = certificate_from_rates(grid, &lhs, &vv, |_| 1.0);
    let (imax, xmax) = grid.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map(|(i, x)| (i, *x)).unwrap();
    cert.asymptotic = Some(AsymptoticCheck {
        x: xmax,
        observed: (1.0 + xmax.abs()).powf(alpha + theta) * full[imax],
        predicted: theta * c / alpha * e.value,
    });
    Ok(cert)
}

/// Searches `r_0` so that `lhs <= -c_1 V g + c_2` inside and `lhs < 0` outside, where `g` is a
/// per-point factor.
fn certificate_from_rates<G: Fn(f64) -> f64>(grid: &[f64], lhs: &[f64], v: &[f64], g: G) -> DriftCertificate {
    let mut last = None;
    for j in 0..=R0_DOUBLINGS {
        let r0 = 2f64.powi(j);
        let out: Vec<usize> = (0..grid.len()).filter(|&i| grid[i].abs() >= r0).collect();
        let c1 = out.iter().map(|&i| -lhs[i] / (v[i] * g(grid[i]))).fold(f64::INFINITY, f64::min);
        let ok_out = !out.is_empty() && c1 > 0.0;
        let c1 = if ok_out { c1 } else { 0.0 };
        let c2 = (0..grid.len())
            .filter(|&i| grid[i].abs() < r0)
            .map(|i| lhs[i] + c1 * v[i] * g(grid[i]))
            .fold(0.0f64, f64::max);
        let c2 = c2 * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        let margin: Vec<MarginPoint> = grid
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let rhs = -c1 * v[i] * g(x) + if x.abs() < r0 { c2 } else { 0.0 };
                MarginPoint { x, lhs: lhs[i], rhs, slack: rhs - lhs[i] }
            })
            .collect();
        let worst = margin.iter().map(|m| m.slack).fold(f64::INFINITY, f64::min);
        let verified = ok_out && worst >= 0.0;
        let cert = DriftCertificate {
            scope: GRID_SCOPE,
            r0,
            negative_rate_constant: -c1,
            inside_bound: c2,
            margin_grid: margin,
            verified,
            outside_points: out.len(),
            worst_slack: worst,
            asymptotic: None,
        };
        if verified {
            return cert;
        }
        last = Some(cert);
    }
    last.unwrap()
}

/// Brownian drift `½ a V'' <= -c_3 a V / (1 + |x|)^2 + c_4 1_{B(0, r_0)}` for `V = φ_B^θ`,
/// with `φ_B` a positive `C^2` spline equal to `|x|` outside `(-1, 1)`.
pub fn verify_drift_brownian(w: &WeightSpec, theta: f64, grid: &[f64]) -> Result<DriftCertificate> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(ErgoError::domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    if grid.is_empty() {
        return Err(ErgoError::precondition("empty drift grid"));
    }
    let phi = |x: f64| -> (f64, f64, f64) {
        if x.abs() >= 1.0 {
            (x.abs(), x.signum(), 0.0)
        } else {
            let x2 = x * x;
            ((3.0 + 6.0 * x2 - x2 * x2) / 8.0, (12.0 * x - 4.0 * x * x2) / 8.0, (12.0 - 12.0 * x2) / 8.0)
        }
    };
    let vpp = |x: f64| {
        let (p, p1, p2) = phi(x);
        theta * p.powf(theta - 1.0) * p2 + theta * (theta - 1.0) * p.powf(theta - 2.0) * p1 * p1
    };
    let lhs: Vec<f64> = grid.iter().map(|&x| 0.5 * w.a(x) * vpp(x)).collect();
    let v: Vec<f64> = grid.iter().map(|&x| phi(x).0.powf(theta)).collect();
    Ok(certificate_from_rates(grid, &lhs, &v, |x| w.a(x) / (1.0 + x.abs()).powi(2)))
}

/// Both sides of `-∫ f L φ dμ = ½ ∬_{|x-y|>1} (f(x)-f(y))(φ(x)-φ(y)) ρ(x-y) dx dy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IbpCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_gap: f64,
}

/// Integration-by-parts identity for compactly supported `f` and `φ` in `H_δ`, `δ < α`.
/// The weight cancels against `μ`, so only its stability index enters.
pub fn check_integration_by_parts(f: &TestFunction, phi: &TestFunction, w: &WeightSpec) -> Result<IbpCheck> {
    check_integration_by_parts_panels(f, phi, w.alpha, 8)
}

/// As [`check_integration_by_parts`] with `panels` Gauss-Legendre panels per outer interval.
pub fn check_integration_by_parts_panels(
    f: &TestFunction,
    phi: &TestFunction,
    idx: StableIndex,
    panels: usize,
) -> Result<IbpCheck> {
    let alpha = idx.alpha();
    let (s0, s1) = f.support().ok_or_else(|| ErgoError::precondition("f must have compact support"))?;
    check_growth(f, alpha)?;
    check_growth(phi, alpha)?;
    match phi.holder_class_delta() {
        Some(d) if d < alpha && d <= 1.0 => {}
        _ => return Err(ErgoError::precondition("phi must lie in H_delta with delta < alpha")),
    }
    let c = normalizing_constant(idx);
    let mut outer = vec![s0, s1, 0.0, s0 + 1.0, s1 - 1.0];
    for (k, _) in f.kinks().into_iter().chain(phi.kinks()) {
        outer.extend([k, k - 1.0, k + 1.0]);
    }
    outer.retain(|&p| p >= s0 && p <= s1);
    outer.sort_by(f64::total_cmp);
    outer.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let nodes = composite_gl_nodes(&outer, panels.max(1));
    let opts = GenOpts { abs_tol: 1e-13, rel_tol: 1e-12, ..GenOpts::default() };
    let inner_breaks: Vec<f64> = f.kinks().into_iter().chain(phi.kinks()).map(|(k, _)| k).chain([0.0]).collect();
    let per_node = par_map(&nodes, |&(x, wx)| -> Result<(f64, f64)> {
        let fx = f.value(x);
        let lhs = -wx * fx * c * sym_from(phi, x, alpha, 1.0, &opts)?.value;
        let px = phi.value(x);
        let kern = |y: f64| (fx - f.value(y)) * (px - phi.value(y)) * c * (x - y).abs().powf(-1.0 - alpha);
        let mut a_part = 0.0;
        for (lo, hi) in [(s0, x - 1.0), (x + 1.0, s1)] {
            if hi > lo {
                let mut pts = vec![lo, hi];
                pts.extend(inner_breaks.iter().copied().filter(|&b| b > lo && b < hi));
                pts.sort_by(f64::total_cmp);
                a_part += integrate(kern, &pts, opts.quad())?.value;
            }
        }
        let up = one_sided_from(phi, x, 1.0, alpha, (s1 - x).max(1.0), &opts)?.value;
        let down = one_sided_from(phi, x, -1.0, alpha, (x - s0).max(1.0), &opts)?.value;
        let b_part = -fx * c * (up + down);
        Ok((lhs, wx * (0.5 * a_part + b_part)))
    });
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for r in per_node {
        let (l, r) = r?;
        lhs += l;
        rhs += r;
    }
    Ok(IbpCheck { lhs, rhs, abs_gap: (lhs - rhs).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::cot_limit;
    use proptest::prelude::*;

    fn idx(a: f64) -> StableIndex {
        StableIndex::new(a).unwrap()
    }

    /// Direct quadrature of the defining integral with a first-order compensator, no
    /// symmetrization; `[-h, h]` is replaced by its second-order Taylor term.
    fn brute(f: &TestFunction, x: f64, a: f64, zmax: f64) -> f64 {
        let c = normalizing_constant(idx(a));
        let u = |y: f64| f.value(y);
        let e = 1e-4;
        let du = (u(x + e) - u(x - e)) / (2.0 * e);
        let d2u = (u(x + e) - 2.0 * u(x) + u(x - e)) / (e * e);
        let h = 1e-3;
        let g = |z: f64| (u(x + z) - u(x) - du * z * if z.abs() <= 1.0 { 1.0 } else { 0.0 }) * z.abs().powf(-1.0 - a);
        let o = QuadOpts { abs_tol: 1e-11, rel_tol: 1e-12, max_intervals: 400_000 };
        let pos = geometric_points(h, zmax, 1.5);
        let neg: Vec<f64> = pos.iter().rev().map(|p| -p).collect();
        let ip = integrate(g, &pos, o).unwrap().value;
        let ineg = integrate(g, &neg, o).unwrap().value;
        c * (ip + ineg + d2u * h.powf(2.0 - a) / (2.0 - a))
    }

    #[test]
    fn constant_is_annihilated() {
        let f = TestFunction::Constant { c: 3.0 };
        assert!(frac_laplacian(&f, 0.3, idx(1.5)).unwrap().value.abs() < 1e-14);
        assert!(frac_laplacian_truncated(&f, 7.0, idx(1.2)).unwrap().value.abs() < 1e-14);
    }

    #[test]
    fn cosine_symbol() {
        let v = frac_laplacian(&TestFunction::Cosine { xi: 2.0 }, 0.0, idx(1.5)).unwrap().value;
        assert!((v + 2f64.powf(1.5)).abs() < 1e-7, "{v}");
        let v = frac_laplacian(&TestFunction::Cosine { xi: 1.0 }, 0.7, idx(1.2)).unwrap().value;
        assert!((v + 0.7f64.cos()).abs() < 1e-7, "{v}");
        for &a in &[1.2, 1.5, 1.8] {
            for &xi in &[0.5, 1.0, 2.0] {
                for &x in &[-2.0, -0.3, 0.0, 0.9, 3.7] {
                    let v = frac_laplacian(&TestFunction::Cosine { xi }, x, idx(a)).unwrap().value;
                    let want = -f64::powf(xi, a) * (xi * x).cos();
                    assert!((v - want).abs() < 1e-6, "a={a} xi={xi} x={x}: {v} vs {want}");
                }
            }
        }
    }

    #[test]
    fn cosine_brute_force_cross_check() {
        let f = TestFunction::Cosine { xi: 1.0 };
        let b = brute(&f, 0.7, 1.2, 2e4);
        assert!((b + 0.7f64.cos()).abs() < 1e-4, "{b}");
    }

    #[test]
    fn bump_and_lyapunov_against_brute_force() {
        for (f, x, a) in [
            (TestFunction::Bump { n: 2.0 }, 1.3, 1.5),
            (TestFunction::Ramp { n: 1.0 }, 1.7, 1.8),
            (TestFunction::LyapunovNeg { theta: 0.3 }, 0.4, 1.3),
            (TestFunction::LyapunovNeg { theta: 0.3 }, 2.5, 1.6),
        ] {
            let v = frac_laplacian(&f, x, idx(a)).unwrap().value;
            let b = brute(&f, x, a, 1e6);
            assert!((v - b).abs() < 1e-5 * (1.0 + b.abs()), "{f:?} x={x}: {v} vs {b}");
        }
    }

    #[test]
    fn truncated_lyapunov_bound() {
        let c = normalizing_constant(idx(1.5));
        for &x in &[0.0, 0.5, 3.0, 100.0, 1e5] {
            let v = frac_laplacian_truncated(&TestFunction::LyapunovPow { theta: 0.3 }, x, idx(1.5)).unwrap().value;
            assert!(v.abs() <= 2.0 * c / (1.5 - 0.3));
        }
    }

    #[test]
    fn truncated_limsup_constant() {
        let (a, t) = (1.5, 0.1);
        let c = normalizing_constant(idx(a));
        let x = 1e3;
        let v = frac_laplacian_truncated(&TestFunction::LyapunovPow { theta: t }, x, idx(a)).unwrap().value;
        let e = drift_series_e(idx(a), t).unwrap().value;
        let want = t * c / a * e;
        let got = x.powf(a - t) * v;
        assert!(((got - want) / want).abs() < 0.15, "{got} vs {want}");
        let far = 1e7;
        let v = frac_laplacian_truncated(&TestFunction::LyapunovPow { theta: t }, far, idx(a)).unwrap().value;
        assert!(((far.powf(a - t) * v - want) / want).abs() < ((got - want) / want).abs());
    }

    #[test]
    fn split_recombines() {
        for (f, x) in [
            (TestFunction::Cosine { xi: 1.3 }, 0.4),
            (TestFunction::Bump { n: 1.5 }, 2.2),
            (TestFunction::LyapunovPow { theta: 0.4 }, 3.0),
        ] {
            let o = GenOpts::default();
            let full = frac_laplacian(&f, x, idx(1.5)).unwrap().value;
            let s = small_jump_part(&f, x, idx(1.5), &o).unwrap().value;
            let t = frac_laplacian_truncated(&f, x, idx(1.5)).unwrap().value;
            assert!((full - s - t).abs() < 1e-8, "{f:?}");
        }
    }

    #[test]
    fn sde_generator_example() {
        let w = WeightSpec::sde_sigma(1.0, 1.0, idx(1.5)).unwrap();
        let v = timechanged_generator(&TestFunction::Cosine { xi: 1.0 }, 0.0, &w, false).unwrap().value;
        assert!((v + 1.0).abs() < 1e-7);
        let p = WeightSpec::power(2.0, idx(1.5)).unwrap();
        let f = TestFunction::Cosine { xi: 1.0 };
        let g = timechanged_generator(&f, 0.5, &p, false).unwrap().value;
        assert!((g - p.a(0.5) * frac_laplacian(&f, 0.5, idx(1.5)).unwrap().value).abs() < 1e-12);
    }

    #[test]
    fn singular_and_growth_errors() {
        assert!(frac_laplacian(&TestFunction::LyapunovPow { theta: 0.5 }, 0.0, idx(1.5)).is_err());
        assert!(frac_laplacian_truncated(&TestFunction::LyapunovPow { theta: 0.5 }, 0.0, idx(1.5)).is_ok());
        assert!(frac_laplacian_truncated(&TestFunction::LyapunovPow { theta: 0.9 }, 1.0, idx(0.8)).is_err());
    }

    #[test]
    fn spline_properties() {
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            assert!(phi_spline(x) <= x + 1e-15 && phi_spline(x) >= 0.0);
        }
        let [d1, d2, _, _] = phi_derivs(1.0 - 1e-12);
        assert!((d1 - 1.0).abs() < 1e-9 && d2.abs() < 1e-9);
        assert!((phi_spline(1.0 - 1e-12) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn drift_sign() {
        for &a in &[1.1, 1.5, 1.9] {
            assert!(lemma32_outside_coefficient(idx(a), 0.1).unwrap() < 0.0);
        }
        let c = lemma32_outside_coefficient(idx(1.0), 0.1).unwrap();
        assert!(c.abs() < 1e-12);
        assert!(cot_limit(idx(1.0)).trig.abs() < 1e-12);
    }

    #[test]
    fn lemma32_certificate() {
        let grid = default_drift_grid(2);
        let w = WeightSpec::power(1.5, idx(1.5)).unwrap();
        let cert = verify_drift_lemma32(&w, 0.05, &grid).unwrap();
        assert!(cert.verified, "{:?}", (cert.r0, cert.worst_slack));
        assert!(cert.margin_grid.iter().all(|m| m.slack >= 0.0));
        assert!(cert.r0 <= 4096.0 && cert.margin_grid.iter().any(|m| m.x.abs() >= cert.r0));
        let c = lemma32_outside_coefficient(idx(1.5), 0.05).unwrap();
        let e = drift_series_e(idx(1.5), 0.05).unwrap().value;
        assert!((c - 0.05 * normalizing_constant(idx(1.5)) * PI * (0.75 * PI).cos() / (0.75 * PI).sin() / 3.0).abs() < 1e-12);
        assert!(e < 0.0);
        let w2 = WeightSpec::power(2.0, idx(1.5)).unwrap();
        assert!(verify_drift_lemma32(&w2, 0.05, &grid).unwrap().verified);
        // E(1.5, 0.7) > 0
        assert!(matches!(verify_drift_lemma32(&w, 0.7, &grid), Err(ErgoError::Precondition(_))));
    }

    #[test]
    fn thm17_certificate() {
        let grid = default_drift_grid(2);
        let w = WeightSpec::sde_sigma(1.0, 1.5, idx(1.2)).unwrap();
        let cert = verify_drift_thm17(&w, 0.05, &grid).unwrap();
        assert!(cert.verified && cert.negative_rate_constant < 0.0);
        assert!(cert.margin_grid.iter().all(|m| m.lhs.is_finite() && m.rhs.is_finite()));
        let lin = WeightSpec::sde_sigma(1.0, 1.0, idx(1.5)).unwrap();
        assert!(matches!(verify_drift_thm17(&lin, 0.05, &grid), Err(ErgoError::Precondition(_))));
        let a = cert.asymptotic.unwrap();
        assert!(((a.observed - a.predicted) / a.predicted).abs() < 0.1, "{a:?}");
    }

    #[test]
    fn brownian_certificate() {
        let w = WeightSpec::power(3.0, idx(1.5)).unwrap();
        let cert = verify_drift_brownian(&w, 0.5, &default_drift_grid(2)).unwrap();
        assert!(cert.verified);
    }

    #[test]
    fn integration_by_parts() {
        let f = TestFunction::Bump { n: 2.0 };
        let phi = TestFunction::LyapunovPow { theta: 0.3 };
        let w = WeightSpec::power(2.0, idx(1.5)).unwrap();
        let r = check_integration_by_parts(&f, &phi, &w).unwrap();
        assert!(r.abs_gap <= 1e-4 * r.lhs.abs().max(1.0), "{r:?}");
        let z = check_integration_by_parts(&f, &TestFunction::Constant { c: 2.0 }, &w).unwrap();
        assert!(z.lhs.abs() < 1e-12 && z.rhs.abs() < 1e-12);
        let e = check_integration_by_parts(&f, &f, &w).unwrap();
        assert!(e.rhs >= 0.0 && e.abs_gap < 1e-6);
    }

    #[test]
    fn integration_by_parts_refinement() {
        let f = TestFunction::Bump { n: 2.0 };
        let phi = TestFunction::LyapunovPow { theta: 0.3 };
        let gaps: Vec<f64> = [1, 2, 4]
            .iter()
            .map(|&p| check_integration_by_parts_panels(&f, &phi, idx(1.5), p).unwrap().abs_gap)
            .collect();
        assert!(gaps[1] <= 0.5 * gaps[0] && gaps[2] <= 0.5 * gaps[1], "{gaps:?}");
    }

    #[test]
    fn description_parses() {
        let f: TestFunction = serde_json::from_str(r#"{"kind":"cosine","xi":2.0}"#).unwrap();
        assert!(matches!(f, TestFunction::Cosine { .. }));
        assert!(serde_json::from_str::<TestFunction>(r#"{"kind":"cosine","xi":2.0,"z":1}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn linearity(c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, x in -4.0f64..4.0, xi in 0.3f64..2.0) {
            let f = TestFunction::Cosine { xi };
            let g = TestFunction::Bump { n: 1.5 };
            let s = TestFunction::Sum { terms: vec![(c1, f.clone()), (c2, g.clone())] };
            let a = idx(1.4);
            let lhs = frac_laplacian(&s, x, a);
            prop_assume!(lhs.is_ok());
            let rhs = c1 * frac_laplacian(&f, x, a).unwrap().value + c2 * frac_laplacian(&g, x, a).unwrap().value;
            let l = lhs.unwrap().value;
            prop_assert!((l - rhs).abs() < 1e-7, "{} vs {}", l, rhs);
        }
    }
}
