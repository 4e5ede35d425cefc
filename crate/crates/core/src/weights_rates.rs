//! Weight functions `a(x)` and the radius-indexed rate functionals built from them.
//!
//! Every weight here is even in `x`. Closed forms are evaluated in the coordinate
//! `L = ln(1 + |x|)`, which keeps inverse profiles finite far beyond `f64` radii.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{ErgoError, Result};
use crate::quad::{integrate, QuadOpts};
use crate::special_functions::StableIndex;

/// Exponent in the Poincaré criterion used when `alpha = 1` unless configured.
pub const DEFAULT_PSI_BETA: f64 = 1.5;

const FLAT_SLOPE: f64 = 0.02;
const FIT_RESIDUAL: f64 = 0.05;

/// Interpolation rule for a tabulated weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interp {
    Linear,
    #[default]
    LogLog,
}

/// Samples of an even weight on `[0, x_max]`, extended beyond the table by a power-law tail fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CustomTable {
    pub x: Vec<f64>,
    pub a: Vec<f64>,
    pub interp: Interp,
    tail: TailFit,
}

/// Least-squares fit `ln a = c + p ln(1 + x)` on the outer fifth of a table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub exponent: f64,
    pub intercept: f64,
    pub residual: f64,
}

impl CustomTable {
    pub fn new(x: Vec<f64>, a: Vec<f64>, interp: Interp) -> Result<Self> {
        if x.len() != a.len() || x.len() < 5 {
            return Err(ErgoError::domain("custom table needs at least 5 (x, a) pairs of equal length"));
        }
        if x[0] != 0.0 {
            return Err(ErgoError::domain("custom table must start at x = 0"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || !x.iter().all(|v| v.is_finite()) {
            return Err(ErgoError::domain("custom table abscissae must be finite and increasing"));
        }
        if !a.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(ErgoError::domain("custom table values must be finite and positive"));
        }
        let start = x.len() - (x.len() / 5).max(3);
        let (lx, la): (Vec<f64>, Vec<f64>) = (start..x.len()).map(|i| (x[i].ln_1p(), a[i].ln())).unzip();
        let tail = fit_line(&lx, &la);
        Ok(CustomTable { x, a, interp, tail })
    }

    pub fn tail(&self) -> TailFit {
        self.tail
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    fn eval(&self, x: f64) -> f64 {
        let x = x.abs();
        let n = self.x.len();
        if x >= self.x[n - 1] {
            return self.a[n - 1] * ((1.0 + x) / (1.0 + self.x[n - 1])).powf(self.tail.exponent);
        }
        let j = self.x.partition_point(|&v| v <= x) - 1;
        let (x0, x1, a0, a1) = (self.x[j], self.x[j + 1], self.a[j], self.a[j + 1]);
        match self.interp {
            Interp::Linear => a0 + (a1 - a0) * (x - x0) / (x1 - x0),
            Interp::LogLog => {
                let (l0, l1) = (x0.ln_1p(), x1.ln_1p());
                let s = (x.ln_1p() - l0) / (l1 - l0);
                (a0.ln() + s * (a1.ln() - a0.ln())).exp()
            }
        }
    }
}

fn fit_line(x: &[f64], y: &[f64]) -> TailFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let p = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c = my - p * mx;
    let residual = (x.iter().zip(y).map(|(u, v)| (v - c - p * u).powi(2)).sum::<f64>() / n).sqrt();
    TailFit { exponent: p, intercept: c, residual }
}

/// Shape of a weight `a(x) = normalizer * shape(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    /// `(1 + |x|)^gamma`, `gamma > 1`.
    Power { gamma: f64 },
    /// `(1 + |x|)^alpha log^gamma(e + |x|)`.
    PowerLog { gamma: f64 },
    /// Weight `sigma(x)^alpha` of the SDE `dZ = sigma(Z-) dX` with `sigma = scale (1 + |x|)^gamma`.
    SdeSigma { scale: f64, gamma: f64 },
    Custom(CustomTable),
}

/// A weight `a` with `mu(dx) = a(x)^{-1} dx` a probability measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub normalizer: f64,
    pub alpha: StableIndex,
}

/// Serializable description from which a [`WeightSpec`] is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightDescription {
    Power { gamma: f64, alpha: StableIndex },
    PowerLog { gamma: f64, alpha: StableIndex },
    SdeSigma { scale: f64, gamma: f64, alpha: StableIndex },
    Custom {
        x: Vec<f64>,
        a: Vec<f64>,
        #[serde(default)]
        interp: Interp,
        alpha: StableIndex,
    },
}

impl WeightDescription {
    pub fn build(&self) -> Result<WeightSpec> {
        match self {
            WeightDescription::Power { gamma, alpha } => WeightSpec::power(*gamma, *alpha),
            WeightDescription::PowerLog { gamma, alpha } => WeightSpec::power_log(*gamma, *alpha),
            WeightDescription::SdeSigma { scale, gamma, alpha } => WeightSpec::sde_sigma(*scale, *gamma, *alpha),
            WeightDescription::Custom { x, a, interp, alpha } => {
                WeightSpec::custom(CustomTable::new(x.clone(), a.clone(), *interp)?, *alpha)
            }
        }
    }
}

/// `ln(e + x)` as a function of `L = ln(1 + x)`.
fn ln_e_plus(l: f64) -> f64 {
    l + ((E - 1.0) * (-l).exp()).ln_1p()
}

/// `ln(1 + x)` for `x = exp(u) - e`, `u >= 1`.
fn ln1p_from_ln_e_plus(u: f64) -> f64 {
    u + ((1.0 - E) * (-u).exp()).ln_1p()
}

impl WeightSpec {
    pub fn power(gamma: f64, alpha: StableIndex) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(ErgoError::domain(format!("power weight needs gamma > 1, got {gamma}")));
        }
        Ok(WeightSpec { kind: WeightKind::Power { gamma }, normalizer: 2.0 / (gamma - 1.0), alpha })
    }

    pub fn power_log(gamma: f64, alpha: StableIndex) -> Result<Self> {
        let a = alpha.alpha();
        if a < 1.0 {
            return Err(ErgoError::domain(format!("power_log weight needs alpha >= 1, got {a}")));
        }
        if a == 1.0 && gamma <= 1.0 {
            return Err(ErgoError::domain("power_log weight with alpha = 1 needs gamma > 1"));
        }
        if !gamma.is_finite() {
            return Err(ErgoError::domain("power_log gamma must be finite"));
        }
        let mut w = WeightSpec { kind: WeightKind::PowerLog { gamma }, normalizer: 1.0, alpha };
        w.normalizer = w.mass_outside_ln1p(0.0)?;
        Ok(w)
    }

    pub fn sde_sigma(scale: f64, gamma: f64, alpha: StableIndex) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(ErgoError::domain(format!("sigma scale must be positive, got {scale}")));
        }
        if !(alpha.alpha() * gamma > 1.0) {
            return Err(ErgoError::domain(format!(
                "sigma^-alpha is not integrable: alpha * gamma = {} <= 1",
                alpha.alpha() * gamma
            )));
        }
        let g = alpha.alpha() * gamma;
        Ok(WeightSpec { kind: WeightKind::SdeSigma { scale, gamma }, normalizer: 2.0 / (g - 1.0), alpha })
    }

    pub fn custom(table: CustomTable, alpha: StableIndex) -> Result<Self> {
        let t = table.tail();
        if t.residual > FIT_RESIDUAL {
            return Err(ErgoError::Inconclusive(format!("custom tail fit residual {} too large", t.residual)));
        }
        if t.exponent <= 1.0 {
            return Err(ErgoError::domain(format!("custom weight tail exponent {} <= 1 is not integrable", t.exponent)));
        }
        let mut w = WeightSpec { kind: WeightKind::Custom(table), normalizer: 1.0, alpha };
        w.normalizer = w.mass_outside_ln1p(0.0)?;
        Ok(w)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.alpha()
    }

    /// Power-law exponent of the weight when it is a pure power.
    pub fn power_exponent(&self) -> Option<f64> {
        match &self.kind {
            WeightKind::Power { gamma } => Some(*gamma),
            WeightKind::SdeSigma { gamma, .. } => Some(self.alpha() * gamma),
            _ => None,
        }
    }

    /// `ln a` at `|x| = exp(l) - 1`.
    pub fn ln_a_ln1p(&self, l: f64) -> f64 {
        let c = self.normalizer.ln();
        match &self.kind {
            WeightKind::Power { gamma } => c + gamma * l,
            WeightKind::SdeSigma { gamma, .. } => c + self.alpha() * gamma * l,
            WeightKind::PowerLog { gamma } => c + self.alpha() * l + gamma * ln_e_plus(l).ln(),
            WeightKind::Custom(t) => c + t.eval(l.exp_m1()).ln(),
        }
    }

    pub fn a(&self, x: f64) -> f64 {
        let x = x.abs();
        match &self.kind {
            WeightKind::Power { gamma } => self.normalizer * (1.0 + x).powf(*gamma),
            WeightKind::SdeSigma { gamma, .. } => self.normalizer * (1.0 + x).powf(self.alpha() * gamma),
            WeightKind::PowerLog { gamma } => {
                self.normalizer * (1.0 + x).powf(self.alpha()) * (E + x).ln().powf(*gamma)
            }
            WeightKind::Custom(t) => self.normalizer * t.eval(x),
        }
    }

    /// Diffusion coefficient of the SDE; `None` for pure time-change weights.
    pub fn sigma(&self, x: f64) -> Option<f64> {
        match &self.kind {
            WeightKind::SdeSigma { scale, gamma } => Some(scale * (1.0 + x.abs()).powf(*gamma)),
            _ => None,
        }
    }

    /// `mu(|x| > exp(l) - 1)`.
    pub fn mass_outside_ln1p(&self, l: f64) -> Result<f64> {
        let l = l.max(0.0);
        match &self.kind {
            WeightKind::Power { .. } | WeightKind::SdeSigma { .. } => {
                let g = self.power_exponent().unwrap();
                Ok(((1.0 - g) * l).exp())
            }
            WeightKind::PowerLog { gamma } => {
                let a = self.alpha();
                let f = |u: f64| (-(a - 1.0) * u).exp() * ln_e_plus(u).powf(-gamma);
                let span = if a > 1.0 { 60.0 / (a - 1.0) } else { 1e6 };
                let mut pts = vec![l];
                let mut step = 0.5;
                while *pts.last().unwrap() < l + span {
                    let nx = pts.last().unwrap() + step;
                    pts.push(nx.min(l + span));
                    step *= 1.5;
                }
                let end = l + span;
                let opts = QuadOpts { abs_tol: 1e-300, rel_tol: 1e-12, max_intervals: 100_000 };
                let body = integrate(f, &pts, opts)?.value;
                let tail = if a > 1.0 {
                    f(end) / (a - 1.0)
                } else {
                    end * f(end) / (gamma - 1.0)
                };
                Ok(2.0 * (body + tail) / self.normalizer)
            }
            WeightKind::Custom(t) => {
                let s = l.exp_m1();
                let xm = t.x_max();
                let tf = t.tail();
                let a_end = t.eval(xm);
                let tail_from = |x0: f64| a_end.recip() * (1.0 + xm).powf(tf.exponent) * (1.0 + x0).powf(1.0 - tf.exponent)
                    / (tf.exponent - 1.0);
                let inner = if s < xm {
                    let mut pts = vec![s];
                    pts.extend(t.x.iter().copied().filter(|&v| v > s));
                    integrate(|x| 1.0 / t.eval(x), &pts, QuadOpts::tight(1e-14))?.value + tail_from(xm)
                } else {
                    tail_from(s)
                };
                Ok(2.0 * inner / self.normalizer)
            }
        }
    }

    pub fn mass_outside(&self, s: f64) -> Result<f64> {
        self.mass_outside_ln1p(s.max(0.0).ln_1p())
    }

    pub fn mass_ball(&self, s: f64) -> Result<f64> {
        Ok(1.0 - self.mass_outside(s)?)
    }

    /// Whether `|x| -> a(x)` is nondecreasing, which makes `K` and `k` attained at `0` and `r`.
    fn monotone_closed(&self) -> bool {
        match &self.kind {
            WeightKind::Power { .. } | WeightKind::SdeSigma { .. } => true,
            WeightKind::PowerLog { gamma } => *gamma >= -self.alpha(),
            WeightKind::Custom(_) => false,
        }
    }

    /// Long-range behaviour of `a(x) / (1 + |x|)^expo`.
    pub fn ratio_trend(&self, expo: f64) -> Result<Trend> {
        let s = match &self.kind {
            WeightKind::Power { .. } | WeightKind::SdeSigma { .. } => {
                let d = self.power_exponent().unwrap() - expo;
                return Ok(if d.abs() < 1e-12 { Trend::Flat } else if d > 0.0 { Trend::Growing } else { Trend::Decaying });
            }
            WeightKind::PowerLog { gamma } => {
                let d = self.alpha() - expo;
                if d.abs() > 1e-12 {
                    d
                } else {
                    return Ok(if *gamma > 0.0 {
                        Trend::Growing
                    } else if *gamma < 0.0 {
                        Trend::Decaying
                    } else {
                        Trend::Flat
                    });
                }
            }
            WeightKind::Custom(t) => {
                let tf = t.tail();
                if tf.residual > FIT_RESIDUAL {
                    return Err(ErgoError::Inconclusive(format!("tail fit residual {}", tf.residual)));
                }
                let d = tf.exponent - expo;
                if d.abs() <= FLAT_SLOPE {
                    return Ok(Trend::Flat);
                }
                d
            }
        };
        Ok(if s > 0.0 { Trend::Growing } else { Trend::Decaying })
    }
}

/// Limit behaviour of a tail ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Growing,
    Flat,
    Decaying,
}

/// Closed-form parameters attached to a profile when one exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedForm {
    pub kind: &'static str,
    pub gamma: f64,
    pub normalizer: f64,
    pub alpha: f64,
}

/// Rate functionals evaluated on a grid of radii.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateProfile {
    pub radii: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi0: Vec<f64>,
    pub big_k: Vec<f64>,
    pub small_k: Vec<f64>,
    pub k0: Vec<f64>,
    pub psi_beta: Option<(f64, Vec<f64>)>,
    pub closed_form: Option<ClosedForm>,
}

impl RateProfile {
    /// Checks the monotonicity invariants and `k <= K`.
    pub fn check_invariants(&self) -> Result<()> {
        let tol = |a: f64, b: f64| 1e-12 * a.abs().max(b.abs());
        let up = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0] - tol(w[0], w[1]));
        let down = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0] + tol(w[0], w[1]));
        let checks = [
            ("phi nondecreasing", up(&self.phi)),
            ("phi0 nonincreasing", down(&self.phi0)),
            ("K nondecreasing", up(&self.big_k)),
            ("k nonincreasing", down(&self.small_k)),
            ("K0 nondecreasing", up(&self.k0)),
            ("k <= K", self.small_k.iter().zip(&self.big_k).all(|(k, kk)| *k <= *kk + tol(*k, *kk))),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(ErgoError::Solver(format!("profile invariant violated: {name}")));
            }
        }
        Ok(())
    }
}

fn k0_from(alpha: f64, big_k: f64, small_k: f64) -> f64 {
    if alpha == 1.0 {
        (big_k / small_k).powi(2)
    } else {
        big_k.powf(1.0 + 1.0 / alpha) / (small_k * small_k)
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ErgoError::precondition("radii must be nonnegative, finite and increasing"));
    }
    Ok(())
}

/// `Phi, Phi_0, K, k, K_0` (and `Psi_beta` when `alpha = 1`) at each radius.
pub fn compute_rate_profile(w: &WeightSpec, radii: &[f64]) -> Result<RateProfile> {
    compute_rate_profile_with_exponent(w, radii, w.alpha())
}

/// As [`compute_rate_profile`], with `(1 + |x|)^expo` in place of `(1 + |x|)^alpha`.
/// `expo = 2` gives the Brownian functionals.
pub fn compute_rate_profile_with_exponent(w: &WeightSpec, radii: &[f64], expo: f64) -> Result<RateProfile> {
    check_radii(radii)?;
    let profile = if w.monotone_closed() {
        closed_profile(w, radii, expo)?
    } else {
        sampled_profile(w, radii, expo)?
    };
    profile.check_invariants()?;
    Ok(profile)
}

fn closed_profile(w: &WeightSpec, radii: &[f64], expo: f64) -> Result<RateProfile> {
    let alpha = w.alpha();
    let k0_expo = if expo == 2.0 { 2.0 } else { alpha };
    let ratio = |r: f64| {
        let l = r.ln_1p();
        (w.ln_a_ln1p(l) - expo * l).exp()
    };
    let trend = w.ratio_trend(expo)?;
    let f0 = ratio(0.0);
    let mut p = RateProfile {
        radii: radii.to_vec(),
        phi: vec![],
        phi0: vec![],
        big_k: vec![],
        small_k: vec![],
        k0: vec![],
        psi_beta: None,
        closed_form: None,
    };
    for &r in radii {
        let (phi, phi0) = match trend {
            Trend::Growing => (ratio(r), f0),
            Trend::Flat => (f0, f0),
            Trend::Decaying => (0.0, ratio(r)),
        };
        let big_k = 1.0 / w.a(0.0);
        let small_k = 1.0 / w.a(r);
        p.phi.push(phi);
        p.phi0.push(phi0);
        p.big_k.push(big_k);
        p.small_k.push(small_k);
        p.k0.push(k0_from(k0_expo, big_k, small_k));
    }
    if alpha == 1.0 {
        let b = DEFAULT_PSI_BETA;
        let psi = match w.ratio_trend(b)? {
            Trend::Growing => radii.iter().map(|&r| (w.ln_a_ln1p(r.ln_1p()) - b * r.ln_1p()).exp()).collect(),
            Trend::Flat => vec![(w.ln_a_ln1p(0.0)).exp(); radii.len()],
            Trend::Decaying => vec![0.0; radii.len()],
        };
        p.psi_beta = Some((b, psi));
    }
    p.closed_form = match &w.kind {
        WeightKind::Power { gamma } => Some(ClosedForm { kind: "power", gamma: *gamma, normalizer: w.normalizer, alpha }),
        WeightKind::PowerLog { gamma } => {
            Some(ClosedForm { kind: "power_log", gamma: *gamma, normalizer: w.normalizer, alpha })
        }
        WeightKind::SdeSigma { .. } => Some(ClosedForm {
            kind: "sde_sigma",
            gamma: w.power_exponent().unwrap(),
            normalizer: w.normalizer,
            alpha,
        }),
        WeightKind::Custom(_) => None,
    };
    Ok(p)
}

/// Golden-section minimum of `f` on `[a, b]`.
fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a) <= 1e-13 * (1.0 + a.abs()) {
            break;
        }
    }
    fc.min(fd).min(f(a)).min(f(b))
}

/// Cell-wise minima of `f` on a grid, refined by golden section near discrete local minima.
fn cell_minima<F: Fn(f64) -> f64>(f: &F, grid: &[f64], vals: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut cells: Vec<f64> = (0..n - 1).map(|i| vals[i].min(vals[i + 1])).collect();
    for j in 1..n - 1 {
        if vals[j] <= vals[j - 1] && vals[j] <= vals[j + 1] {
            cells[j - 1] = cells[j - 1].min(golden_min(f, grid[j - 1], grid[j]));
            cells[j] = cells[j].min(golden_min(f, grid[j], grid[j + 1]));
        }
    }
    cells
}

/// Profile by sampling `a` on a grid containing every radius, with refinement near extrema.
pub fn sampled_profile(w: &WeightSpec, radii: &[f64], expo: f64) -> Result<RateProfile> {
    check_radii(radii)?;
    let alpha = w.alpha();
    let k0_expo = if expo == 2.0 { 2.0 } else { alpha };
    let r_last = *radii.last().unwrap();
    let x_end = match &w.kind {
        WeightKind::Custom(t) => {
            if r_last > t.x_max() {
                return Err(ErgoError::precondition(format!(
                    "custom table covers |x| <= {} but radius {} was requested",
                    t.x_max(),
                    r_last
                )));
            }
            t.x_max()
        }
        _ => (100.0 * r_last).max(1e3),
    };
    let mut grid: Vec<f64> = (0..=256).map(|i| i as f64 / 256.0).collect();
    let mut x = 1.0;
    while x < x_end {
        x *= 1.01;
        grid.push(x.min(x_end));
    }
    if let WeightKind::Custom(t) = &w.kind {
        grid.extend(t.x.iter().copied());
    }
    grid.extend(radii.iter().copied());
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let ratio = |x: f64| w.a(x) / (1.0 + x.abs()).powf(expo);
    let inv_a = |x: f64| 1.0 / w.a(x);
    let neg_inv_a = |x: f64| -1.0 / w.a(x);
    let fr: Vec<f64> = grid.iter().map(|&x| ratio(x)).collect();
    let fi: Vec<f64> = grid.iter().map(|&x| inv_a(x)).collect();
    let fni: Vec<f64> = fi.iter().map(|v| -v).collect();
    let cr = cell_minima(&ratio, &grid, &fr);
    let cmin = cell_minima(&inv_a, &grid, &fi);
    let cmax = cell_minima(&neg_inv_a, &grid, &fni);
    let n = grid.len();
    let mut pre_r = vec![fr[0]; n];
    let mut pre_min = vec![fi[0]; n];
    let mut pre_max = vec![fi[0]; n];
    for i in 1..n {
        pre_r[i] = pre_r[i - 1].min(cr[i - 1]);
        pre_min[i] = pre_min[i - 1].min(cmin[i - 1]);
        pre_max[i] = pre_max[i - 1].max(-cmax[i - 1]);
    }
    let tail_limit = match w.ratio_trend(expo)? {
        Trend::Decaying => 0.0,
        _ => f64::INFINITY,
    };
    let mut suf_r = vec![fr[n - 1].min(tail_limit); n];
    for i in (0..n - 1).rev() {
        suf_r[i] = suf_r[i + 1].min(cr[i]);
    }
    let mut p = RateProfile {
        radii: radii.to_vec(),
        phi: vec![],
        phi0: vec![],
        big_k: vec![],
        small_k: vec![],
        k0: vec![],
        psi_beta: None,
        closed_form: None,
    };
    for &r in radii {
        let i = grid.partition_point(|&g| g < r);
        p.phi.push(suf_r[i]);
        p.phi0.push(pre_r[i]);
        p.big_k.push(pre_max[i]);
        p.small_k.push(pre_min[i]);
        p.k0.push(k0_from(k0_expo, pre_max[i], pre_min[i]));
    }
    if alpha == 1.0 {
        let b = DEFAULT_PSI_BETA;
        let q = sampled_profile(w, radii, b)?;
        p.psi_beta = Some((b, q.phi));
    }
    Ok(p)
}

/// Ergodicity class implied by the weight criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErgodicityClass {
    Poincare,
    SuperPoincare,
    WeakPoincareOnly,
    NoneOfCriteria,
}

/// Strongest class certified by the weight criteria (`alpha = 1` uses [`DEFAULT_PSI_BETA`]).
pub fn classify_ergodicity(w: &WeightSpec) -> Result<ErgodicityClass> {
    classify_ergodicity_with(w, DEFAULT_PSI_BETA)
}

pub fn classify_ergodicity_with(w: &WeightSpec, psi_beta: f64) -> Result<ErgodicityClass> {
    let alpha = w.alpha();
    if alpha == 1.0 {
        if !(psi_beta > 1.0) {
            return Err(ErgoError::domain(format!("psi exponent must exceed 1, got {psi_beta}")));
        }
        return Ok(match w.ratio_trend(psi_beta)? {
            Trend::Growing | Trend::Flat => ErgodicityClass::SuperPoincare,
            Trend::Decaying => ErgodicityClass::NoneOfCriteria,
        });
    }
    if alpha < 1.0 {
        return Ok(ErgodicityClass::NoneOfCriteria);
    }
    Ok(match w.ratio_trend(alpha)? {
        Trend::Growing => ErgodicityClass::SuperPoincare,
        Trend::Flat => ErgodicityClass::Poincare,
        Trend::Decaying => ErgodicityClass::WeakPoincareOnly,
    })
}

/// Constants and parameters of the rate functions `beta(r)`, `alpha(r)` and `xi(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoincareRateFunctions {
    pub c1: f64,
    pub c2: f64,
    pub c4: f64,
    /// `beta` in `Psi_beta` (used only when `alpha = 1`).
    pub psi_beta: f64,
    /// `delta` in `Psi_{beta, delta}` (used only when `alpha = 1`).
    pub delta: f64,
}

impl Default for PoincareRateFunctions {
    fn default() -> Self {
        PoincareRateFunctions { c1: 1.0, c2: 1.0, c4: 1.0, psi_beta: DEFAULT_PSI_BETA, delta: 1.25 }
    }
}

/// Generalized inverse `inf{r : a(r) / (1 + r)^expo >= y}` as `ln(1 + r)`, for increasing ratios.
fn ratio_inverse_ln1p(w: &WeightSpec, expo: f64, y: f64) -> Result<f64> {
    let ln_f = |l: f64| w.ln_a_ln1p(l) - expo * l;
    let ly = y.ln();
    if ly <= ln_f(0.0) {
        return Ok(0.0);
    }
    match &w.kind {
        WeightKind::Power { .. } | WeightKind::SdeSigma { .. } => {
            let g = w.power_exponent().unwrap();
            Ok((ly - w.normalizer.ln()) / (g - expo))
        }
        WeightKind::PowerLog { gamma } if (w.alpha() - expo).abs() < 1e-12 => {
            let u = ((ly - w.normalizer.ln()) / gamma).exp();
            Ok(ln1p_from_ln_e_plus(u.max(1.0)))
        }
        _ => {
            let mut hi = 1.0;
            while ln_f(hi) < ly {
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(ErgoError::Solver("profile inverse bracket overflow".into()));
                }
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if ln_f(mid) >= ly {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(hi)
        }
    }
}

/// `ln K_0(R)` at `ln(1 + R) = l` for weights nondecreasing in `|x|`.
fn ln_k0_ln1p(w: &WeightSpec, l: f64) -> f64 {
    let la0 = w.ln_a_ln1p(0.0);
    let la = w.ln_a_ln1p(l);
    if w.alpha() == 1.0 {
        2.0 * (la - la0)
    } else {
        -(1.0 + 1.0 / w.alpha()) * la0 + 2.0 * la
    }
}

fn logaddexp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln beta(r)` of the super Poincaré inequality.
pub fn ln_beta_rate(w: &WeightSpec, p: &PoincareRateFunctions, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(ErgoError::domain(format!("r must be positive, got {r}")));
    }
    let class = classify_ergodicity_with(w, p.psi_beta)?;
    if class != ErgodicityClass::SuperPoincare {
        return Err(ErgoError::precondition(format!("super Poincare criterion fails: class {class:?}")));
    }
    if !w.monotone_closed() {
        return Err(ErgoError::precondition("beta_rate requires a weight nondecreasing in |x|"));
    }
    let alpha = w.alpha();
    let (expo, r_pow) = if alpha == 1.0 {
        if !(p.delta > 1.0 && p.delta < p.psi_beta) {
            return Err(ErgoError::domain("delta must lie in (1, psi_beta)"));
        }
        (p.delta, 1.0)
    } else {
        (alpha, 1.0 / alpha)
    };
    let phi0 = w.ln_a_ln1p(0.0).exp();
    let r_freeze = p.c2 / phi0;
    let r = r.min(r_freeze);
    let y = p.c2 / r;
    let l = ratio_inverse_ln1p(w, expo, y)?;
    let inner = -r_pow * r.ln() + ln_k0_ln1p(w, l);
    Ok(p.c1.ln() + logaddexp(0.0, inner))
}

pub fn beta_rate(w: &WeightSpec, p: &PoincareRateFunctions, r: f64) -> Result<f64> {
    Ok(ln_beta_rate(w, p, r)?.exp())
}

/// Smallest `ln(1 + s)` with `mu(B(0, s)) >= 1 / (1 + r)`.
pub fn mass_radius_ln1p(w: &WeightSpec, r: f64) -> Result<f64> {
    let target = r / (1.0 + r);
    if let Some(g) = w.power_exponent() {
        return Ok(((1.0 + r) / r).ln() / (g - 1.0));
    }
    if w.mass_outside_ln1p(0.0)? <= target {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while w.mass_outside_ln1p(hi)? > target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(ErgoError::Solver("mu-mass target unreachable".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if w.mass_outside_ln1p(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(hi)
}

/// `ln Phi_0(s)` at `ln(1 + s) = l`.
fn ln_phi0_ln1p(w: &WeightSpec, l: f64) -> Result<f64> {
    let alpha = w.alpha();
    if w.monotone_closed() {
        return Ok(match w.ratio_trend(alpha)? {
            Trend::Decaying => w.ln_a_ln1p(l) - alpha * l,
            _ => w.ln_a_ln1p(0.0),
        });
    }
    let s = l.exp_m1();
    let p = sampled_profile(w, &[s], alpha)?;
    Ok(p.phi0[0].ln())
}

/// `ln alpha(r)` of the weak Poincaré inequality.
pub fn ln_weak_rate_alpha(w: &WeightSpec, p: &PoincareRateFunctions, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(ErgoError::domain(format!("r must be positive, got {r}")));
    }
    let class = classify_ergodicity_with(w, p.psi_beta)?;
    if class == ErgodicityClass::NoneOfCriteria {
        return Err(ErgoError::precondition("weak Poincare criterion does not apply"));
    }
    let l = mass_radius_ln1p(w, r)?;
    Ok(p.c4.ln() - ln_phi0_ln1p(w, l)?)
}

pub fn weak_rate_alpha(w: &WeightSpec, p: &PoincareRateFunctions, r: f64) -> Result<f64> {
    Ok(ln_weak_rate_alpha(w, p, r)?.exp())
}

/// `xi(t) = 2 inf{r > 0 : -alpha(r) log r <= 2t}` for a nonincreasing `alpha(r)`.
pub fn xi_of_t<F: Fn(f64) -> f64>(alpha_of_r: F, t: f64) -> f64 {
    let h = |lr: f64| -alpha_of_r(lr.exp()) * lr;
    let target = 2.0 * t;
    let (mut lo, mut hi) = (-700.0, 0.0);
    if h(lo) <= target {
        return 2.0 * lo.exp();
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    2.0 * hi.exp()
}

/// `xi(t)` for the weak rate of `w`.
pub fn xi_for_weight(w: &WeightSpec, p: &PoincareRateFunctions, t: f64) -> Result<f64> {
    weak_rate_alpha(w, p, 0.5)?;
    Ok(xi_of_t(|r| weak_rate_alpha(w, p, r).unwrap_or(f64::INFINITY), t))
}

/// Brownian criterion evaluated at the supplied radii.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BmCriterion {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub limsup_estimate: f64,
    pub satisfied: bool,
    pub super_satisfied: bool,
}

/// Tail criterion `|x| mu(|s| >= |x|)` for the time-changed Brownian motion.
pub fn bm_poincare_criterion(w: &WeightSpec, radii: &[f64]) -> Result<BmCriterion> {
    check_radii(radii)?;
    if radii.len() < 2 || radii[0] <= 0.0 {
        return Err(ErgoError::precondition("need at least two positive radii"));
    }
    let values = radii.iter().map(|&x| Ok(x * w.mass_outside(x)?)).collect::<Result<Vec<f64>>>()?;
    let n = radii.len();
    let (x1, x2, q1, q2) = (radii[n - 2], radii[n - 1], values[n - 2], values[n - 1]);
    let slope = match w.power_exponent() {
        Some(g) => 2.0 - g,
        None => {
            if let WeightKind::Custom(t) = &w.kind {
                if t.tail().residual > FIT_RESIDUAL {
                    return Err(ErgoError::Inconclusive("custom tail not extrapolatable".into()));
                }
            }
            (q2.ln() - q1.ln()) / (x2.ln() - x1.ln())
        }
    };
    let exact = w.power_exponent().is_some();
    let limsup = if (exact && slope > 1e-12) || (!exact && slope > FLAT_SLOPE) {
        f64::INFINITY
    } else if (exact && slope < -1e-12) || (!exact && slope < -FLAT_SLOPE) {
        0.0
    } else {
        (x2 * q2 - x1 * q1) / (x2 - x1)
    };
    Ok(BmCriterion {
        radii: radii.to_vec(),
        values,
        limsup_estimate: limsup,
        satisfied: limsup.is_finite(),
        super_satisfied: limsup == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn idx(a: f64) -> StableIndex {
        StableIndex::new(a).unwrap()
    }

    fn brute_mass(w: &WeightSpec, r: f64) -> f64 {
        let pts = crate::quad::geometric_points(1e-3, r, 1.5);
        let mut pts = pts;
        pts.insert(0, 0.0);
        2.0 * integrate(|x| 1.0 / w.a(x), &pts, QuadOpts::tight(1e-12)).unwrap().value
    }

    #[test]
    fn normalization_at_large_radius() {
        let ws = [
            WeightSpec::power(2.0, idx(1.5)).unwrap(),
            WeightSpec::power(3.0, idx(1.5)).unwrap(),
            WeightSpec::power_log(1.0, idx(1.5)).unwrap(),
            WeightSpec::power_log(-1.0, idx(1.8)).unwrap(),
            WeightSpec::sde_sigma(1.0, 1.0, idx(1.5)).unwrap(),
        ];
        for w in &ws {
            let m = brute_mass(w, 1e6);
            let tail = w.mass_outside(1e6).unwrap();
            assert!((m + tail - 1.0).abs() < 1e-8, "{:?}: {m} + {tail}", w.kind);
        }
        assert!((brute_mass(&ws[1], 1e6) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn power_profile_values() {
        let w = WeightSpec::power(2.0, idx(1.5)).unwrap();
        let p = compute_rate_profile(&w, &[0.0, 1.0, 10.0]).unwrap();
        assert!((p.phi[1] - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(p.big_k[0], p.small_k[0]);
        assert!((p.big_k[0] - 1.0 / w.a(0.0)).abs() < 1e-15);
        // K0 = C^{1-1/alpha} (1+r)^{2 gamma}
        let c: f64 = 2.0;
        assert!((p.k0[2] / (c.powf(1.0 - 1.0 / 1.5) * 11f64.powi(4)) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn power_log_phi_at_zero() {
        let w = WeightSpec::power_log(1.0, idx(1.5)).unwrap();
        let p = compute_rate_profile(&w, &[0.0, 5.0]).unwrap();
        // brute-force minimum of a(x)/(1+|x|)^alpha over |x| <= 1e4
        let mut best = f64::INFINITY;
        for i in 0..=200_000 {
            let x = 1e4 * (i as f64 / 200_000.0).powi(3);
            best = best.min(w.a(x) / (1.0 + x).powf(1.5));
        }
        assert!((p.phi[0] - best).abs() < 1e-12 * best);
        assert!((p.phi[0] - w.normalizer).abs() < 1e-12 * w.normalizer);
    }

    #[test]
    fn sampled_matches_closed_form() {
        let radii = [0.0, 0.5, 1.0, 3.0, 10.0, 100.0, 1e4];
        for w in [
            WeightSpec::power(2.0, idx(1.5)).unwrap(),
            WeightSpec::power(1.3, idx(1.5)).unwrap(),
            WeightSpec::power(1.5, idx(1.5)).unwrap(),
            WeightSpec::power_log(-1.0, idx(1.5)).unwrap(),
            WeightSpec::power_log(0.5, idx(1.2)).unwrap(),
        ] {
            let c = compute_rate_profile(&w, &radii).unwrap();
            let s = sampled_profile(&w, &radii, w.alpha()).unwrap();
            let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
            for i in 0..radii.len() {
                for (x, y) in [(c.phi[i], s.phi[i]), (c.phi0[i], s.phi0[i]), (c.big_k[i], s.big_k[i]),
                    (c.small_k[i], s.small_k[i]), (c.k0[i], s.k0[i])] {
                    assert!(rel(x, y) < 1e-8, "{:?} r={} {x} vs {y}", w.kind, radii[i]);
                }
            }
        }
    }

    #[test]
    fn custom_table_and_refinement() {
        // a bump in the middle of a power weight: interior minimum of the ratio
        let xs: Vec<f64> = (0..=400).map(|i| i as f64 * 0.25).collect();
        let a: Vec<f64> = xs.iter().map(|&x| (1.0 + x).powi(2) * (1.0 + 0.5 * (-(x - 3.0f64).powi(2)).exp())).collect();
        let t = CustomTable::new(xs, a, Interp::LogLog).unwrap();
        let w = WeightSpec::custom(t, idx(1.5)).unwrap();
        assert!((brute_mass(&w, 100.0) + w.mass_outside(100.0).unwrap() - 1.0).abs() < 1e-9);
        let p = compute_rate_profile(&w, &[0.0, 2.0, 5.0, 50.0]).unwrap();
        assert_eq!(classify_ergodicity(&w).unwrap(), ErgodicityClass::SuperPoincare);
        assert!(p.big_k[3] >= p.small_k[3]);
        assert!(compute_rate_profile(&w, &[200.0]).is_err());
    }

    #[test]
    fn phase_table() {
        use ErgodicityClass::*;
        for &a in &[1.2, 1.5, 1.8] {
            for &(g, want) in &[(a + 0.5, SuperPoincare), (3.0, SuperPoincare), (a, Poincare), (a - 0.1, WeakPoincareOnly)] {
                if g > 1.0 {
                    assert_eq!(classify_ergodicity(&WeightSpec::power(g, idx(a)).unwrap()).unwrap(), want, "{a} {g}");
                }
            }
            for &(g, want) in &[(-1.0, WeakPoincareOnly), (0.0, Poincare), (0.5, SuperPoincare), (2.0, SuperPoincare)] {
                assert_eq!(classify_ergodicity(&WeightSpec::power_log(g, idx(a)).unwrap()).unwrap(), want);
            }
        }
    }

    #[test]
    fn beta_rate_power_exponent() {
        let (a, g) = (1.5, 2.5);
        let w = WeightSpec::power(g, idx(a)).unwrap();
        let p = PoincareRateFunctions::default();
        let want = 1.0 / a + 2.0 * g / (g - a);
        let (r1, r2) = (1e-8, 1e-10);
        let s = (ln_beta_rate(&w, &p, r2).unwrap() - ln_beta_rate(&w, &p, r1).unwrap()) / (r1.ln() - r2.ln());
        assert!((s - want).abs() < 1e-3, "{s} vs {want}");
        let big = beta_rate(&w, &p, 1e12).unwrap();
        assert_eq!(big, beta_rate(&w, &p, 1e15).unwrap());
        assert!(big.is_finite());
    }

    #[test]
    fn beta_rate_power_log_shape() {
        let g = 0.5;
        let w = WeightSpec::power_log(g, idx(1.5)).unwrap();
        let p = PoincareRateFunctions::default();
        // log beta(r) r^{1/gamma} stays bounded between positive constants as r -> 0
        let v: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&r: &f64| ln_beta_rate(&w, &p, r).unwrap() * r.powf(1.0 / g)).collect();
        for x in &v {
            assert!(*x > 0.1 && *x < 100.0, "{v:?}");
        }
    }

    #[test]
    fn alpha_one_super_rate() {
        let (g, d) = (3.0, 1.25);
        let w = WeightSpec::power(g, idx(1.0)).unwrap();
        let p = PoincareRateFunctions::default();
        let want = 1.0 + 2.0 * g / (g - d);
        let (r1, r2) = (1e-8, 1e-10);
        let s = (ln_beta_rate(&w, &p, r2).unwrap() - ln_beta_rate(&w, &p, r1).unwrap()) / (r1.ln() - r2.ln());
        assert!((s - want).abs() < 1e-3, "{s} vs {want}");
        assert!(compute_rate_profile(&w, &[0.0, 1.0]).unwrap().psi_beta.is_some());
    }

    #[test]
    fn weak_rate_power_exponent() {
        let (a, g) = (1.5, 1.3);
        let w = WeightSpec::power(g, idx(a)).unwrap();
        let p = PoincareRateFunctions::default();
        let want = (a - g) / (g - 1.0);
        let (r1, r2) = (1e-6, 1e-8);
        let s = (ln_weak_rate_alpha(&w, &p, r2).unwrap() - ln_weak_rate_alpha(&w, &p, r1).unwrap()) / (r1.ln() - r2.ln());
        assert!((s - want).abs() < 1e-4, "{s} vs {want}");
        // direct quadrature + bisection oracle
        let r = 0.3;
        let mut lo = 0.0;
        let mut hi = 1e4;
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if brute_mass(&w, m) >= 1.0 / (1.0 + r) {
                hi = m;
            } else {
                lo = m;
            }
        }
        let oracle = 1.0 / (w.normalizer * (1.0 + hi).powf(g - a));
        assert!((weak_rate_alpha(&w, &p, r).unwrap() / oracle - 1.0).abs() < 1e-7);
    }

    #[test]
    fn weak_rate_power_log() {
        let w = WeightSpec::power_log(-1.0, idx(1.5)).unwrap();
        let p = PoincareRateFunctions::default();
        // alpha(r) log^{gamma}(1 + 1/r) bounded between positive constants
        for &r in &[1e-3, 1e-6, 1e-9, 1e-12] {
            let v = weak_rate_alpha(&w, &p, r).unwrap() / (1.0 + 1.0 / r as f64).ln();
            assert!(v > 0.05 && v < 20.0, "{r}: {v}");
        }
    }

    #[test]
    fn xi_constant_rate() {
        for &t in &[0.1, 1.0, 5.0] {
            let x = xi_of_t(|_| 2.0, t);
            assert!((x - 2.0 * (-t).exp()).abs() < 1e-12);
        }
        assert!(xi_of_t(|_| 2.0, 1e-12) <= 2.0);
    }

    #[test]
    fn xi_power_decay() {
        let (a, g) = (1.5, 1.3);
        let w = WeightSpec::power(g, idx(a)).unwrap();
        let p = PoincareRateFunctions::default();
        let (t1, t2) = (1e4, 1e6);
        let s = (xi_for_weight(&w, &p, t2).unwrap().ln() - xi_for_weight(&w, &p, t1).unwrap().ln()) / (t2 / t1).ln();
        let want = -(g - 1.0) / (a - g);
        assert!((s - want).abs() < 0.25, "{s} vs {want}");
    }

    #[test]
    fn brownian_criterion_verdicts() {
        let radii = [1e4, 1e5, 1e6];
        let c2 = bm_poincare_criterion(&WeightSpec::power(2.0, idx(1.5)).unwrap(), &radii).unwrap();
        assert!(c2.satisfied && !c2.super_satisfied);
        assert!((c2.limsup_estimate - 1.0).abs() < 1e-6);
        let c3 = bm_poincare_criterion(&WeightSpec::power(3.0, idx(1.5)).unwrap(), &radii).unwrap();
        assert!(c3.satisfied && c3.super_satisfied);
        let c15 = bm_poincare_criterion(&WeightSpec::power(1.5, idx(1.5)).unwrap(), &radii).unwrap();
        assert!(!c15.satisfied);
        // compact perturbation does not change the verdict
        let xs: Vec<f64> = (0..=2000).map(|i| i as f64 * 10.0).collect();
        let a: Vec<f64> = xs.iter().map(|&x| (1.0 + x).powi(2) * if x < 5.0 { 3.0 } else { 1.0 }).collect();
        let w = WeightSpec::custom(CustomTable::new(xs, a, Interp::LogLog).unwrap(), idx(1.5)).unwrap();
        let c = bm_poincare_criterion(&w, &[5e3, 1e4, 2e4]).unwrap();
        assert!(c.satisfied && !c.super_satisfied, "{c:?}");
    }

    #[test]
    fn description_round_trip() {
        let d: WeightDescription = serde_json::from_str(r#"{"kind":"power","gamma":2.0,"alpha":1.5}"#).unwrap();
        assert_eq!(d.build().unwrap(), WeightSpec::power(2.0, idx(1.5)).unwrap());
        assert!(serde_json::from_str::<WeightDescription>(r#"{"kind":"power","gamma":2.0,"alpha":1.5,"x":1}"#).is_err());
        assert!(WeightSpec::power(0.9, idx(1.5)).is_err());
    }

    proptest! {
        #[test]
        fn profiles_monotone(g in 1.05f64..4.0, a in 1.05f64..1.95, lg in -2.0f64..3.0) {
            let radii: Vec<f64> = (0..30).map(|i| 0.1 * 1.6f64.powi(i)).collect();
            let w = WeightSpec::power(g, idx(a)).unwrap();
            prop_assert!(compute_rate_profile(&w, &radii).is_ok());
            let w = WeightSpec::power_log(lg, idx(a)).unwrap();
            prop_assert!(compute_rate_profile(&w, &radii).is_ok());
        }

        #[test]
        fn rates_nonincreasing(g in 1.1f64..3.0, a in 1.1f64..1.9, r in 1e-6f64..10.0) {
            let w = WeightSpec::power(g, idx(a)).unwrap();
            let p = PoincareRateFunctions::default();
            let r2 = r * 1.7;
            prop_assert!(weak_rate_alpha(&w, &p, r2).unwrap() <= weak_rate_alpha(&w, &p, r).unwrap() * (1.0 + 1e-12));
            if g > a {
                prop_assert!(beta_rate(&w, &p, r2).unwrap() <= beta_rate(&w, &p, r).unwrap() * (1.0 + 1e-12));
            }
        }
    }
}
