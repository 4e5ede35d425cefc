//! Empirical distances to equilibrium from path ensembles, and decay-law fits.
//!
//! `P_t f(x)` is estimated by nested Monte Carlo: start points are drawn from the invariant law
//! by stratified inverse-CDF sampling and each start point gets its own batch of paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{ErgoError, Result};
use crate::generator::TestFunction;
use crate::par::par_map;
use crate::quad::composite_gl_nodes;
use crate::simulate::{path_rng, simulate_time_changed, solve_sde, Driver, SimConfig};
use crate::weights_rates::{WeightKind, WeightSpec};

const TABLE_STEP: f64 = 0.05;
const X_DRAW_STREAM: u64 = u64::MAX - 1;

/// The process whose decay is measured. Its invariant law has density `1 / a` for the weight.
#[derive(Debug, Clone)]
pub enum Process {
    TimeChanged { w: WeightSpec, driver: Driver },
    Sde { sigma: WeightSpec },
}

impl Process {
    pub fn law(&self) -> &WeightSpec {
        match self {
            Process::TimeChanged { w, .. } => w,
            Process::Sde { sigma } => sigma,
        }
    }

    pub fn driver(&self) -> Driver {
        match self {
            Process::TimeChanged { driver, .. } => *driver,
            Process::Sde { sigma } => Driver::Stable { alpha: sigma.alpha },
        }
    }

    /// States of one path started at `x0`, read on `t_grid`.
    pub fn sample(&self, cfg: &McConfig, x0: f64, path_index: u64, t_grid: &[f64]) -> Result<Vec<f64>> {
        let horizon = t_grid.last().copied().unwrap_or(0.0).max(cfg.dt);
        let sc = SimConfig {
            x0,
            locality: cfg.locality,
            ..SimConfig::new(self.driver(), cfg.dt, horizon, 1, cfg.master_seed)
        };
        match self {
            Process::TimeChanged { w, .. } => simulate_time_changed(&|x| w.a(x), &sc, path_index, t_grid),
            Process::Sde { sigma } => {
                let p = solve_sde(sigma, &sc, path_index)?;
                let last = p.states.len() - 1;
                Ok(t_grid
                    .iter()
                    .map(|&t| p.states[((t / cfg.dt + 1e-9).floor() as usize).min(last)])
                    .collect())
            }
        }
    }
}

fn default_outer() -> usize {
    256
}
fn default_tail_levels() -> usize {
    20
}
fn default_strata() -> usize {
    64
}
fn default_dt() -> f64 {
    0.05
}
fn default_locality() -> Option<f64> {
    Some(0.25)
}
fn default_bootstrap() -> usize {
    200
}
fn default_bins() -> usize {
    200
}
fn default_hist_radius() -> f64 {
    50.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    /// Total number of paths (split over start points for the nested estimators).
    pub n_paths: usize,
    pub master_seed: u64,
    #[serde(default = "default_outer")]
    pub outer_points: usize,
    /// Equal-mass bulk strata.
    #[serde(default = "default_strata")]
    pub strata: usize,
    /// Halvings of the two outermost strata.
    #[serde(default = "default_tail_levels")]
    pub tail_levels: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_locality")]
    pub locality: Option<f64>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    /// Fails the estimate when a 95% half-width exceeds this fraction of the value.
    #[serde(default)]
    pub ci_fraction: Option<f64>,
    #[serde(default = "default_bins")]
    pub hist_bins: usize,
    #[serde(default = "default_hist_radius")]
    pub hist_radius: f64,
}

impl McConfig {
    pub fn new(n_paths: usize, master_seed: u64) -> Self {
        McConfig {
            n_paths,
            master_seed,
            outer_points: default_outer(),
            strata: default_strata(),
            tail_levels: default_tail_levels(),
            dt: default_dt(),
            locality: default_locality(),
            bootstrap: default_bootstrap(),
            ci_fraction: None,
            hist_bins: default_bins(),
            hist_radius: default_hist_radius(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: &str| Err(ErgoError::Config { path: path.into(), message: message.into() });
        if self.n_paths == 0 {
            return bad("n_paths", "must be at least 1");
        }
        if self.strata < 3 || self.tail_levels > 60 {
            return bad("strata", "needs at least 3 strata and at most 60 tail levels");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", "must be positive");
        }
        if self.hist_bins == 0 || !(self.hist_radius > 0.0 && self.hist_radius.is_finite()) {
            return bad("hist_bins", "histogram needs bins and a positive radius");
        }
        if let Some(c) = self.ci_fraction {
            if !(c > 0.0) {
                return bad("ci_fraction", "must be positive");
            }
        }
        Ok(())
    }
}

/// The symmetric law with density `1 / a`, with its distribution function and quantiles.
#[derive(Debug, Clone)]
pub struct InvariantLaw {
    tail_exponent: Option<f64>,
    ln_mass: Vec<f64>,
}

impl InvariantLaw {
    pub fn new(w: &WeightSpec) -> Result<Self> {
        if let Some(g) = w.power_exponent() {
            return Ok(InvariantLaw { tail_exponent: Some(g), ln_mass: vec![] });
        }
        let mut ln_mass = vec![];
        let mut l = 0.0;
        loop {
            let m = w.mass_outside_ln1p(l)?.min(1.0);
            if !(m > 0.0) {
                break;
            }
            ln_mass.push(m.ln());
            if m < 1e-15 || ln_mass.len() > 40_000 {
                break;
            }
            l += TABLE_STEP;
        }
        if ln_mass.len() < 3 {
            return Err(ErgoError::Solver("invariant law has no usable tail table".into()));
        }
        Ok(InvariantLaw { tail_exponent: None, ln_mass })
    }

    /// `ln mu(|x| > exp(l) - 1)`.
    fn ln_mass_at(&self, l: f64) -> f64 {
        if let Some(g) = self.tail_exponent {
            return (1.0 - g) * l;
        }
        let n = self.ln_mass.len();
        let pos = l / TABLE_STEP;
        let k = (pos.floor() as usize).min(n - 2);
        let frac = pos - k as f64;
        self.ln_mass[k] + frac * (self.ln_mass[k + 1] - self.ln_mass[k])
    }

    /// `l = ln(1 + s)` with `mu(|x| > s) = m`.
    fn ln1p_radius(&self, m: f64) -> f64 {
        let lm = m.ln();
        if let Some(g) = self.tail_exponent {
            return lm / (1.0 - g);
        }
        if lm >= self.ln_mass[0] {
            return 0.0;
        }
        let k = self.ln_mass.partition_point(|&v| v > lm).min(self.ln_mass.len() - 1).max(1);
        let (a, b) = (self.ln_mass[k - 1], self.ln_mass[k]);
        (k - 1) as f64 * TABLE_STEP + TABLE_STEP * (a - lm) / (a - b)
    }

    pub fn mass_outside(&self, s: f64) -> f64 {
        self.ln_mass_at(s.abs().ln_1p()).exp().min(1.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let half = 0.5 * self.mass_outside(x);
        if x >= 0.0 {
            1.0 - half
        } else {
            half
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(1e-300, 1.0 - 1e-16);
        if u < 0.5 {
            -self.ln1p_radius(2.0 * u).exp_m1()
        } else {
            self.ln1p_radius(2.0 * (1.0 - u)).exp_m1()
        }
    }

    /// `mu(f)` for bounded `f`, integrating over quantiles.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let nodes = composite_gl_nodes(&[0.0, 0.5, 1.0], 2000);
        nodes.iter().map(|(u, wt)| wt * f(self.quantile(*u))).sum()
    }
}

/// Bounded functions whose relaxation is measured.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Observable {
    Constant { c: f64 },
    /// `1_{[0, ∞)} - 1/2`.
    HalfLine,
    Indicator { lo: f64, hi: f64 },
    /// `level + amplitude * tanh(x / scale)`.
    Tanh { level: f64, amplitude: f64, scale: f64 },
    Smooth { f: TestFunction },
}

impl Observable {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Observable::Constant { c } => *c,
            Observable::HalfLine => {
                if x >= 0.0 {
                    0.5
                } else {
                    -0.5
                }
            }
            Observable::Indicator { lo, hi } => f64::from(x >= *lo && x <= *hi),
            Observable::Tanh { level, amplitude, scale } => level + amplitude * (x / scale).tanh(),
            Observable::Smooth { f } => f.value(x),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Observable::Smooth { f } if f.growth() > 0.0 => Err(ErgoError::domain("observable must be bounded")),
            Observable::Smooth { f } => f.validate(),
            Observable::Tanh { scale, .. } if !(*scale > 0.0) => Err(ErgoError::domain("tanh scale must be positive")),
            Observable::Indicator { lo, hi } if !(lo <= hi) => Err(ErgoError::domain("indicator needs lo <= hi")),
            _ => Ok(()),
        }
    }

    /// Infimum and supremum, when known in closed form.
    pub fn range(&self) -> Option<(f64, f64)> {
        match self {
            Observable::Constant { c } => Some((*c, *c)),
            Observable::HalfLine => Some((-0.5, 0.5)),
            Observable::Indicator { .. } => Some((0.0, 1.0)),
            Observable::Tanh { level, amplitude, .. } => Some((level - amplitude.abs(), level + amplitude.abs())),
            Observable::Smooth { .. } => None,
        }
    }

    pub fn mean(&self, law: &InvariantLaw) -> f64 {
        match self {
            Observable::Constant { c } => *c,
            Observable::HalfLine => 0.0,
            Observable::Indicator { lo, hi } => law.cdf(*hi) - law.cdf(*lo),
            Observable::Tanh { level, .. } => *level,
            Observable::Smooth { f } => law.expectation(|x| f.value(x)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    L2Mu,
    TvHistogram,
    Entropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub metric: Metric,
    pub ensemble_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl DecayCurve {
    pub fn check_invariants(&self) -> Result<()> {
        if self.values.len() != self.t_grid.len() || self.std_errors.len() != self.t_grid.len() {
            return Err(ErgoError::Solver("curve arrays have inconsistent lengths".into()));
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ErgoError::Solver("t_grid is not increasing".into()));
        }
        if self.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(ErgoError::Solver("curve values must be finite and nonnegative".into()));
        }
        Ok(())
    }

    /// The same curve with values squared, errors propagated to first order.
    pub fn squared(&self) -> DecayCurve {
        DecayCurve {
            values: self.values.iter().map(|v| v * v).collect(),
            std_errors: self.values.iter().zip(&self.std_errors).map(|(v, s)| 2.0 * v * s + s * s).collect(),
            ..self.clone()
        }
    }

    /// Grid indices `k` after `t_from` where the curve rises from `k - 1` to `k` by more than
    /// `k_se` standard errors of the difference.
    pub fn monotone_violations(&self, t_from: f64, k_se: f64) -> Vec<usize> {
        (1..self.t_grid.len())
            .filter(|&k| self.t_grid[k - 1] >= t_from)
            .filter(|&k| {
                let tol = k_se * self.std_errors[k - 1].hypot(self.std_errors[k]);
                self.values[k] - self.values[k - 1] > tol
            })
            .collect()
    }

    fn check_budget(&self, ci_fraction: Option<f64>) -> Result<()> {
        if let Some(c) = ci_fraction {
            for (v, s) in self.values.iter().zip(&self.std_errors) {
                if 1.96 * s > c * v {
                    return Err(ErgoError::Inconclusive(format!(
                        "confidence half-width {} exceeds {c} of the value {v}",
                        1.96 * s
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_grid(t_grid: &[f64], allow_zero: bool) -> Result<()> {
    if t_grid.is_empty() {
        return Err(ErgoError::precondition("t_grid is empty"));
    }
    let ok_first = if allow_zero { t_grid[0] >= 0.0 } else { t_grid[0] > 0.0 };
    if !ok_first || t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(ErgoError::precondition("t_grid must be increasing, finite and positive"));
    }
    Ok(())
}

/// Start points drawn by stratified inverse-CDF sampling. The bulk is cut into `strata`
/// equal-mass slices and the two outermost slices are halved `tail_levels` times towards the tails.
#[derive(Debug, Clone)]
struct Starts {
    xs: Vec<f64>,
    weights: Vec<f64>,
    per: usize,
}

fn stratum_bounds(cfg: &McConfig) -> Vec<f64> {
    let s = cfg.strata as f64;
    let mut lower: Vec<f64> = (0..=cfg.tail_levels).rev().map(|j| 0.5f64.powi(j as i32) / s).collect();
    lower.insert(0, 0.0);
    let mut b = lower.clone();
    b.extend((2..cfg.strata - 1).map(|k| k as f64 / s));
    b.extend(lower.iter().rev().map(|u| 1.0 - u));
    b
}

impl Starts {
    fn new(law: &InvariantLaw, cfg: &McConfig) -> Self {
        let b = stratum_bounds(cfg);
        let n = b.len() - 1;
        let per = (cfg.outer_points / n).max(2);
        let mut rng = path_rng(cfg.master_seed, X_DRAW_STREAM);
        let mut xs = Vec::with_capacity(per * n);
        for w in b.windows(2) {
            for j in 0..per {
                let u = w[0] + (w[1] - w[0]) * (j as f64 + rng.random::<f64>()) / per as f64;
                xs.push(law.quantile(u));
            }
        }
        Starts { xs, weights: b.windows(2).map(|w| w[1] - w[0]).collect(), per }
    }

    fn weighted_mean(&self, terms: &[f64]) -> f64 {
        terms.chunks(self.per).zip(&self.weights).map(|(c, w)| w * c.iter().sum::<f64>() / self.per as f64).sum()
    }

    /// Stratified mean of per-point terms and its standard error.
    fn mean(&self, terms: &[f64]) -> (f64, f64) {
        let p = self.per as f64;
        let var: f64 = terms
            .chunks(self.per)
            .zip(&self.weights)
            .map(|(c, w)| {
                let m = c.iter().sum::<f64>() / p;
                w * w * c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (p - 1.0) / p
            })
            .sum();
        (self.weighted_mean(terms), var.sqrt())
    }
}

/// Per start point and grid time, the inner mean and sample variance of `f(Y_t)`.
fn inner_moments(
    process: &Process,
    f: &Observable,
    cfg: &McConfig,
    xs: &[f64],
    inner: usize,
    t_grid: &[f64],
) -> Result<Vec<Vec<(f64, f64)>>> {
    let idx: Vec<usize> = (0..xs.len()).collect();
    par_map(&idx, |&i| -> Result<Vec<(f64, f64)>> {
        let mut s1 = vec![0.0; t_grid.len()];
        let mut s2 = vec![0.0; t_grid.len()];
        for j in 0..inner {
            let ys = process.sample(cfg, xs[i], (i * inner + j) as u64, t_grid)?;
            for (k, y) in ys.iter().enumerate() {
                let v = f.value(*y);
                s1[k] += v;
                s2[k] += v * v;
            }
        }
        let n = inner as f64;
        Ok(s1
            .iter()
            .zip(&s2)
            .map(|(a, b)| {
                let m = a / n;
                let var = if inner > 1 { ((b - n * m * m) / (n - 1.0)).max(0.0) } else { 0.0 };
                (m, var)
            })
            .collect())
    })
    .into_iter()
    .collect()
}

/// `‖P_t f - mu(f)‖_{L²(mu)}` on `t_grid`.
pub fn l2_decay(process: &Process, f: &Observable, cfg: &McConfig, t_grid: &[f64]) -> Result<DecayCurve> {
    cfg.validate()?;
    f.validate()?;
    check_grid(t_grid, false)?;
    let law = InvariantLaw::new(process.law())?;
    let mu_f = f.mean(&law);
    let starts = Starts::new(&law, cfg);
    let xs = &starts.xs;
    let inner = cfg.n_paths / xs.len();
    if inner < 2 {
        return Err(ErgoError::precondition(format!(
            "n_paths = {} gives fewer than two paths per start point",
            cfg.n_paths
        )));
    }
    let moments = inner_moments(process, f, cfg, xs, inner, t_grid)?;
    let mut values = vec![];
    let mut std_errors = vec![];
    for k in 0..t_grid.len() {
        let terms: Vec<f64> = moments
            .iter()
            .map(|m| {
                let (mean, var) = m[k];
                (mean - mu_f).powi(2) - var / inner as f64
            })
            .collect();
        let (sq, se_sq) = starts.mean(&terms);
        let v = sq.max(0.0).sqrt();
        values.push(v);
        std_errors.push(se_sq / (2.0 * v.max(se_sq.sqrt())));
    }
    let curve = DecayCurve {
        t_grid: t_grid.to_vec(),
        values,
        std_errors,
        metric: Metric::L2Mu,
        ensemble_size: xs.len() * inner,
        seed: cfg.master_seed,
        warnings: vec![],
    };
    curve.check_budget(cfg.ci_fraction)?;
    Ok(curve)
}

/// `Ent_mu(P_t f)` on `t_grid` for a positive observable.
pub fn entropy_decay(process: &Process, f: &Observable, cfg: &McConfig, t_grid: &[f64]) -> Result<DecayCurve> {
    cfg.validate()?;
    f.validate()?;
    check_grid(t_grid, false)?;
    match f.range() {
        Some((lo, hi)) if lo > 0.0 && hi.is_finite() => {}
        _ => return Err(ErgoError::precondition("entropy needs an observable bounded away from 0 and infinity")),
    }
    let mut warnings = vec![];
    match process.law().kind {
        WeightKind::PowerLog { gamma } if gamma < 1.0 => {
            warnings.push(format!("log weight exponent {gamma} is below the log-Sobolev threshold 1"))
        }
        WeightKind::PowerLog { .. } => {}
        _ => warnings.push("entropy decay is only predicted for log-kind weights".into()),
    }
    let law = InvariantLaw::new(process.law())?;
    let starts = Starts::new(&law, cfg);
    let xs = &starts.xs;
    let inner = (cfg.n_paths / xs.len()).max(1);
    let moments = inner_moments(process, f, cfg, xs, inner, t_grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed ^ 0x5eed);
    let mut clamped = 0usize;
    let mut values = vec![];
    let mut std_errors = vec![];
    // `g ln g` of a noisy mean is biased upward by about `var / (2 g n)`; that term is removed.
    let ent = |g: &[f64], glg: &[f64]| (starts.weighted_mean(glg) - {
        let m = starts.weighted_mean(g);
        m * m.ln()
    })
    .max(0.0);
    for k in 0..t_grid.len() {
        let mut g = Vec::with_capacity(xs.len());
        let mut glg = Vec::with_capacity(xs.len());
        for m in &moments {
            let (mean, var) = m[k];
            let v = if mean <= 0.0 {
                clamped += 1;
                1e-300
            } else {
                mean
            };
            g.push(v);
            glg.push(v * v.ln() - var / (2.0 * v * inner as f64));
        }
        let e = ent(&g, &glg);
        let boot: Vec<f64> = (0..cfg.bootstrap)
            .map(|_| {
                let pick: Vec<usize> = (0..g.len())
                    .map(|i| (i / starts.per) * starts.per + rng.random_range(0..starts.per))
                    .collect();
                let gb: Vec<f64> = pick.iter().map(|&i| g[i]).collect();
                let lb: Vec<f64> = pick.iter().map(|&i| glg[i]).collect();
                ent(&gb, &lb)
            })
            .collect();
        values.push(e);
        std_errors.push(sd(&boot));
    }
    if clamped > 0 {
        warnings.push(format!("{clamped} nonpositive estimates clamped"));
    }
    let curve = DecayCurve {
        t_grid: t_grid.to_vec(),
        values,
        std_errors,
        metric: Metric::Entropy,
        ensemble_size: xs.len() * inner,
        seed: cfg.master_seed,
        warnings,
    };
    curve.check_budget(cfg.ci_fraction)?;
    Ok(curve)
}

fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

/// Bin masses of the invariant law on the histogram grid, with the outside mass last.
fn law_bins(law: &InvariantLaw, cfg: &McConfig) -> Vec<f64> {
    let (nb, r) = (cfg.hist_bins, cfg.hist_radius);
    let edges: Vec<f64> = (0..=nb).map(|i| -r + 2.0 * r * i as f64 / nb as f64).collect();
    let mut p: Vec<f64> = edges.windows(2).map(|e| law.cdf(e[1]) - law.cdf(e[0])).collect();
    p.push(law.mass_outside(r));
    p
}

fn tv(counts: &[u64], n: u64, target: &[f64]) -> f64 {
    0.5 * counts.iter().zip(target).map(|(c, p)| (*c as f64 / n as f64 - p).abs()).sum::<f64>()
}

/// `max_{x0} ‖P_t(x0, ·) - mu‖_TV` on `t_grid`, with `cfg.n_paths` paths per start point.
pub fn tv_decay(process: &Process, cfg: &McConfig, x0_set: &[f64], t_grid: &[f64]) -> Result<DecayCurve> {
    cfg.validate()?;
    check_grid(t_grid, true)?;
    if x0_set.is_empty() {
        return Err(ErgoError::precondition("x0_set is empty"));
    }
    let law = InvariantLaw::new(process.law())?;
    let target = law_bins(&law, cfg);
    let mut warnings = vec![];
    let outside = *target.last().unwrap();
    if outside > 0.05 {
        warnings.push(format!("invariant mass {outside:.3} lies outside the histogram window"));
    }
    let (nb, r) = (cfg.hist_bins, cfg.hist_radius);
    let n = cfg.n_paths;
    let bin_of = |y: f64| {
        if y.abs() > r || !y.is_finite() {
            nb
        } else {
            (((y + r) / (2.0 * r) * nb as f64) as usize).min(nb - 1)
        }
    };
    let mut per_x0: Vec<Vec<Vec<u64>>> = vec![];
    for (xi, &x0) in x0_set.iter().enumerate() {
        let idx: Vec<u64> = (0..n as u64).collect();
        let paths: Vec<Result<Vec<f64>>> =
            par_map(&idx, |&j| process.sample(cfg, x0, xi as u64 * n as u64 + j, t_grid));
        let mut counts = vec![vec![0u64; nb + 1]; t_grid.len()];
        for p in paths {
            for (k, y) in p?.iter().enumerate() {
                counts[k][bin_of(*y)] += 1;
            }
        }
        per_x0.push(counts);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed ^ 0x7e57);
    let mut values = vec![];
    let mut std_errors = vec![];
    let mut max_out: f64 = 0.0;
    for k in 0..t_grid.len() {
        let v = per_x0.iter().map(|c| tv(&c[k], n as u64, &target)).fold(0.0, f64::max);
        for c in &per_x0 {
            max_out = max_out.max(c[k][nb] as f64 / n as f64);
        }
        let boot: Vec<f64> = (0..cfg.bootstrap)
            .map(|_| {
                per_x0
                    .iter()
                    .map(|c| {
                        let re = resample_counts(&c[k], n as u64, &mut rng);
                        tv(&re, n as u64, &target)
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        values.push(v);
        std_errors.push(sd(&boot));
    }
    if max_out > 0.05 {
        warnings.push(format!("up to {max_out:.3} of the paths end outside the histogram window"));
    }
    let curve = DecayCurve {
        t_grid: t_grid.to_vec(),
        values,
        std_errors,
        metric: Metric::TvHistogram,
        ensemble_size: n * x0_set.len(),
        seed: cfg.master_seed,
        warnings,
    };
    curve.check_budget(cfg.ci_fraction)?;
    Ok(curve)
}

/// Multinomial resample of bin counts by sequential binomials.
fn resample_counts<R: Rng>(counts: &[u64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut left = n;
    let mut mass_left = n as f64;
    counts
        .iter()
        .map(|&c| {
            if left == 0 || c == 0 {
                mass_left -= c as f64;
                return 0;
            }
            let p = (c as f64 / mass_left).min(1.0);
            mass_left -= c as f64;
            let draw = Binomial::new(left, p).map(|b| b.sample(rng)).unwrap_or(left);
            left -= draw;
            draw
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    Exponential,
    Polynomial,
    StretchedExponential,
}

/// One candidate law fitted to `ln value`.
///
/// `parameter` is the rate `λ` of `e^{-λt}`, the exponent `p` of `t^{-p}`, or the exponent `q` of
/// `exp(-b t^q)` (with `b` in `rate`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawFit {
    pub law: Law,
    pub log_amplitude: f64,
    pub parameter: f64,
    pub parameter_se: f64,
    pub rate: f64,
    pub r_squared: f64,
    /// Bayesian information criterion of the fit in log space.
    pub bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub law: Law,
    pub fits: Vec<LawFit>,
    pub burn_in: f64,
    pub t_first: f64,
    pub t_last: f64,
    pub n_points: usize,
}

impl DecayFit {
    pub fn fit(&self, law: Law) -> &LawFit {
        self.fits.iter().find(|f| f.law == law).expect("all laws are fitted")
    }

    pub fn exponential_beats_polynomial(&self) -> bool {
        self.fit(Law::Exponential).bic < self.fit(Law::Polynomial).bic
    }
}

/// Least squares of `y` on `[1, x]`, returning intercept, slope and residual sum of squares.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let rss = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    (icpt, slope, rss)
}

/// `(ln c, parameter, rate, rss, fitted)` of one law.
fn fit_law(law: Law, t: &[f64], y: &[f64]) -> (f64, f64, f64, f64, Vec<f64>) {
    match law {
        Law::Exponential => {
            let (c, s, rss) = linear_fit(t, y);
            (c, -s, -s, rss, t.iter().map(|v| c + s * v).collect())
        }
        Law::Polynomial => {
            let lt: Vec<f64> = t.iter().map(|v| v.ln()).collect();
            let (c, s, rss) = linear_fit(&lt, y);
            (c, -s, -s, rss, lt.iter().map(|v| c + s * v).collect())
        }
        Law::StretchedExponential => {
            let eval = |q: f64| {
                let x: Vec<f64> = t.iter().map(|v| v.powf(q)).collect();
                let (c, s, rss) = linear_fit(&x, y);
                (c, s, rss, x)
            };
            let mut best = (f64::INFINITY, 0.05);
            let mut q = 0.05;
            while q <= 3.0 + 1e-12 {
                let r = eval(q).2;
                if r < best.0 {
                    best = (r, q);
                }
                q += 0.01;
            }
            let (mut lo, mut hi) = ((best.1 - 0.01).max(0.01), best.1 + 0.01);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..60 {
                let a = hi - g * (hi - lo);
                let b = lo + g * (hi - lo);
                if eval(a).2 < eval(b).2 {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            let q = 0.5 * (lo + hi);
            let (c, s, rss, x) = eval(q);
            (c, q, -s, rss, x.iter().map(|v| c + s * v).collect())
        }
    }
}

/// Fits the three decay laws to the curve after `burn_in`, keeping the leading run of points that
/// sit above twice their standard error.
pub fn fit_decay(curve: &DecayCurve, burn_in: Option<f64>, seed: u64, bootstrap: usize) -> Result<DecayFit> {
    curve.check_invariants()?;
    let burn = match burn_in {
        Some(b) => b,
        None => {
            let v0 = curve.values[0];
            let k = curve
                .values
                .iter()
                .position(|v| *v < 0.9 * v0)
                .ok_or_else(|| ErgoError::Inconclusive("curve never drops below 0.9 of its initial value".into()))?;
            curve.t_grid[k]
        }
    };
    let start = curve.t_grid.partition_point(|t| *t < burn);
    if curve.t_grid.len() - start < 6 {
        return Err(ErgoError::precondition("fewer than 6 points after burn-in"));
    }
    let mut t = vec![];
    let mut y = vec![];
    for k in start..curve.t_grid.len() {
        let (v, s) = (curve.values[k], curve.std_errors[k]);
        if !(v > 0.0 && v > 2.0 * s) {
            break;
        }
        t.push(curve.t_grid[k]);
        y.push(v.ln());
    }
    if t.len() < 6 {
        return Err(ErgoError::Inconclusive(format!(
            "degenerate curve: only {} points after burn-in sit above the noise floor",
            t.len()
        )));
    }
    let n = t.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let tss: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let mut fits = vec![];
    for (li, law) in [Law::Exponential, Law::Polynomial, Law::StretchedExponential].into_iter().enumerate() {
        let k = if law == Law::StretchedExponential { 3.0 } else { 2.0 };
        let (c, p, rate, rss, fitted) = fit_law(law, &t, &y);
        let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(li as u64);
        let boot: Vec<f64> = (0..bootstrap)
            .map(|_| {
                let yb: Vec<f64> = fitted.iter().map(|f| f + resid[rng.random_range(0..resid.len())]).collect();
                fit_law(law, &t, &yb).1
            })
            .collect();
        fits.push(LawFit {
            law,
            log_amplitude: c,
            parameter: p,
            parameter_se: sd(&boot),
            rate,
            r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
            bic: n * (rss.max(1e-300) / n).ln() + k * n.ln(),
        });
    }
    let law = fits.iter().min_by(|a, b| a.bic.total_cmp(&b.bic)).unwrap().law;
    Ok(DecayFit { law, fits, burn_in: burn, t_first: t[0], t_last: *t.last().unwrap(), n_points: t.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub n_samples: usize,
    pub observed: Vec<u64>,
}

/// Chi-square test of one long path's thinned occupation against equal-mass bins of the
/// invariant law.
pub fn occupation_chi2(
    process: &Process,
    cfg: &McConfig,
    x0: f64,
    horizon: f64,
    bins: usize,
    thin: f64,
) -> Result<OccupationTest> {
    cfg.validate()?;
    if bins < 2 || !(thin > 0.0) || !(horizon > thin) {
        return Err(ErgoError::precondition("need at least two bins and 0 < thin < horizon"));
    }
    let law = InvariantLaw::new(process.law())?;
    let edges: Vec<f64> = (1..bins).map(|k| law.quantile(k as f64 / bins as f64)).collect();
    let m = (horizon / thin).floor() as usize;
    let grid: Vec<f64> = (1..=m).map(|k| k as f64 * thin).collect();
    let ys = process.sample(cfg, x0, 0, &grid)?;
    let mut observed = vec![0u64; bins];
    for y in &ys {
        observed[edges.partition_point(|e| e < y)] += 1;
    }
    let expected = m as f64 / bins as f64;
    let statistic: f64 = observed.iter().map(|o| (*o as f64 - expected).powi(2) / expected).sum();
    let dof = bins - 1;
    let p_value = ChiSquared::new(dof as f64)
        .map(|d| 1.0 - d.cdf(statistic))
        .map_err(|e| ErgoError::Solver(e.to_string()))?;
    Ok(OccupationTest { statistic, dof, p_value, n_samples: m, observed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::StableIndex;
    use proptest::prelude::*;

    fn idx(a: f64) -> StableIndex {
        StableIndex::new(a).unwrap()
    }

    fn synthetic(f: impl Fn(f64) -> f64, noise: f64, seed: u64) -> DecayCurve {
        let t: Vec<f64> = (1..=40).map(|k| 0.1 * 1.12f64.powi(k)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = t
            .iter()
            .map(|x| f(*x) * (1.0 + noise * Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng)))
            .collect();
        DecayCurve {
            std_errors: vec![0.0; t.len()],
            t_grid: t,
            values: v,
            metric: Metric::L2Mu,
            ensemble_size: 0,
            seed,
            warnings: vec![],
        }
    }

    fn truncate(c: DecayCurve, t_max: f64) -> DecayCurve {
        let k = c.t_grid.partition_point(|t| *t <= t_max);
        DecayCurve {
            t_grid: c.t_grid[..k].to_vec(),
            values: c.values[..k].to_vec(),
            std_errors: c.std_errors[..k].to_vec(),
            ..c
        }
    }

    #[test]
    fn synthetic_exponential() {
        let c = truncate(synthetic(|t| (-2.0 * t).exp(), 0.01, 1), 8.0);
        let f = fit_decay(&c, Some(0.0), 3, 200).unwrap();
        assert_eq!(f.law, Law::Exponential);
        assert!((f.fit(Law::Exponential).parameter - 2.0).abs() < 0.1);
    }

    #[test]
    fn synthetic_polynomial() {
        let c = synthetic(|t| t.powf(-1.5), 0.01, 2);
        let f = fit_decay(&c, Some(0.0), 3, 200).unwrap();
        assert_eq!(f.law, Law::Polynomial);
        assert!((f.fit(Law::Polynomial).parameter - 1.5).abs() < 0.1);
    }

    #[test]
    fn synthetic_stretched() {
        let c = synthetic(|t| (-t.sqrt()).exp(), 0.01, 3);
        let f = fit_decay(&c, Some(0.0), 3, 200).unwrap();
        assert_eq!(f.law, Law::StretchedExponential);
        let q = f.fit(Law::StretchedExponential);
        assert!((q.parameter - 0.5).abs() < 0.1, "{q:?}");
        assert_eq!(f.fits.len(), 3);
    }

    #[test]
    fn fit_preconditions() {
        let c = truncate(synthetic(|t| (-t).exp(), 0.0, 4), 0.18);
        assert!(matches!(fit_decay(&c, Some(0.0), 1, 10), Err(ErgoError::Precondition(_))));
        let mut flat = synthetic(|_| 1e-3, 0.0, 5);
        flat.std_errors = vec![1e-3; flat.t_grid.len()];
        flat.values[0] = 1.0;
        assert!(matches!(fit_decay(&flat, None, 1, 10), Err(ErgoError::Inconclusive(_))));
    }

    #[test]
    fn invariant_law_power_and_table() {
        let w = WeightSpec::power(2.0, idx(1.5)).unwrap();
        let law = InvariantLaw::new(&w).unwrap();
        assert!((law.cdf(1.0) - 0.75).abs() < 1e-14);
        assert!((law.quantile(0.75) - 1.0).abs() < 1e-12);
        let wl = WeightSpec::power_log(1.5, idx(1.5)).unwrap();
        let tl = InvariantLaw::new(&wl).unwrap();
        for s in [0.3, 2.0, 40.0] {
            let exact = wl.mass_outside(s).unwrap();
            assert!((tl.mass_outside(s) / exact - 1.0).abs() < 1e-3, "{s}");
        }
        for u in [0.01, 0.3, 0.5, 0.9] {
            assert!((tl.cdf(tl.quantile(u)) - u).abs() < 1e-6);
        }
        let m = law.expectation(|x| f64::from(x.abs() <= 1.0));
        assert!((m - 0.5).abs() < 1e-3);
    }

    #[test]
    fn constant_observable_has_null_curves() {
        let w = WeightSpec::power(2.0, idx(1.5)).unwrap();
        let p = Process::TimeChanged { w, driver: Driver::Stable { alpha: idx(1.5) } };
        let cfg = McConfig { outer_points: 64, strata: 8, tail_levels: 2, ..McConfig::new(256, 1) };
        let c = l2_decay(&p, &Observable::Constant { c: 2.0 }, &cfg, &[0.5, 1.0]).unwrap();
        assert!(c.values.iter().all(|v| *v == 0.0));
        let e = entropy_decay(&p, &Observable::Constant { c: 2.0 }, &cfg, &[0.5, 1.0]).unwrap();
        assert!(e.values.iter().all(|v| v.abs() < 1e-12));
        assert!(!e.warnings.is_empty());
        assert!(entropy_decay(&p, &Observable::HalfLine, &cfg, &[1.0]).is_err());
    }

    #[test]
    fn tv_starts_at_one() {
        let w = WeightSpec::power(2.0, idx(1.5)).unwrap();
        let p = Process::TimeChanged { w, driver: Driver::Stable { alpha: idx(1.5) } };
        let cfg = McConfig::new(500, 2);
        let c = tv_decay(&p, &cfg, &[30.1], &[0.0, 2.0]).unwrap();
        assert!(c.values[0] > 0.99, "{}", c.values[0]);
        assert!(c.values[1] < c.values[0]);
        assert!(c.monotone_violations(0.0, 2.0).is_empty());
        let near = tv_decay(&p, &cfg, &[0.1], &[0.0]).unwrap();
        let law = InvariantLaw::new(p.law()).unwrap();
        assert!((near.values[0] - (1.0 - (law.cdf(0.5) - 0.5))).abs() < 1e-12);
    }

    #[test]
    fn stratified_sample_follows_law() {
        let w = WeightSpec::power(1.3, idx(1.5)).unwrap();
        let law = InvariantLaw::new(&w).unwrap();
        let cfg = McConfig { outer_points: 2000, ..McConfig::new(1, 3) };
        let b = stratum_bounds(&cfg);
        assert_eq!(b.len() - 1, 62 + 2 * 21);
        assert!(b.windows(2).all(|w| w[1] > w[0]) && b[0] == 0.0 && b[b.len() - 1] == 1.0);
        let st = Starts::new(&law, &cfg);
        assert!((st.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let ind: Vec<f64> = st.xs.iter().map(|x| f64::from(x.abs() <= 1.0)).collect();
        let (m, se) = st.mean(&ind);
        assert!((m - w.mass_ball(1.0).unwrap()).abs() < 4.0 * se + 1e-3, "{m} {se}");
    }

    #[test]
    fn resample_preserves_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = vec![5, 0, 10, 85];
        let r = resample_counts(&c, 100, &mut rng);
        assert_eq!(r.iter().sum::<u64>(), 100);
        assert_eq!(r[1], 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn quantile_inverts_cdf(u in 1e-6f64..0.999999, gamma in 1.1f64..4.0) {
            let law = InvariantLaw::new(&WeightSpec::power(gamma, idx(1.5)).unwrap()).unwrap();
            prop_assert!((law.cdf(law.quantile(u)) - u).abs() < 1e-9);
        }

        #[test]
        fn exponential_fit_recovers_rate(rate in 0.2f64..5.0) {
            let c = truncate(synthetic(|t| (-rate * t).exp(), 0.0, 7), 10.0 / rate);
            let f = fit_decay(&c, Some(0.0), 1, 20).unwrap();
            prop_assert!((f.fit(Law::Exponential).parameter / rate - 1.0).abs() < 1e-9);
        }
    }
}
