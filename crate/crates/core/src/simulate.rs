//! Path generation for the stable driver, its truncation at unit jump size, the time change
//! `Y_t = X_{τ_t}`, the stable-driven SDE and the time-changed Brownian motion.
//!
//! Every path draws from its own ChaCha stream selected by `(master_seed, path_index)`, so
//! ensembles are reproducible for any worker count.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ErgoError, Result};
use crate::par::par_map;
use crate::special_functions::{normalizing_constant, StableIndex};
use crate::weights_rates::{WeightKind, WeightSpec};

/// Magnitude beyond which an SDE path is flagged and stopped.
pub const OVERFLOW_GUARD: f64 = 1e30;
const MAX_EXTENSIONS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Driver {
    Stable { alpha: StableIndex },
    Brownian,
}

impl Driver {
    /// Self-similarity index: `α` for the stable driver, `2` for Brownian motion.
    pub fn index(&self) -> f64 {
        match self {
            Driver::Stable { alpha } => alpha.alpha(),
            Driver::Brownian => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    ExactStableEuler,
    TruncatedCompoundPoisson,
}

fn default_locality() -> Option<f64> {
    Some(0.25)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub driver: Driver,
    /// Step in the time of the observed process.
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub x0: f64,
    /// Caps the driver's increment scale at `locality * (1 + |x|)` on time-changed paths.
    #[serde(default = "default_locality")]
    pub locality: Option<f64>,
}

impl SimConfig {
    pub fn new(driver: Driver, dt: f64, horizon: f64, n_paths: usize, master_seed: u64) -> Self {
        SimConfig {
            driver,
            dt,
            horizon,
            n_paths,
            master_seed,
            scheme: Scheme::ExactStableEuler,
            x0: 0.0,
            locality: default_locality(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ErgoError::Config { path: "dt".into(), message: format!("must be positive, got {}", self.dt) });
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(ErgoError::Config { path: "horizon".into(), message: "must be finite and at least dt".into() });
        }
        if self.n_paths == 0 {
            return Err(ErgoError::Config { path: "n_paths".into(), message: "must be at least 1".into() });
        }
        if let Some(e) = self.locality {
            if !(e > 0.0 && e.is_finite()) {
                return Err(ErgoError::Config { path: "locality".into(), message: "must be positive".into() });
            }
        }
        if !self.x0.is_finite() {
            return Err(ErgoError::Config { path: "x0".into(), message: "must be finite".into() });
        }
        Ok(())
    }

    fn stable_index(&self) -> Result<StableIndex> {
        match self.driver {
            Driver::Stable { alpha } => Ok(alpha),
            Driver::Brownian => Err(ErgoError::precondition("this scheme needs a stable driver")),
        }
    }
}

/// Independent stream for one path.
pub fn path_rng(master_seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_index);
    rng
}

/// Standard symmetric stable variate with characteristic function `exp(-|ξ|^α)`.
pub fn sample_stable_unit<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    let a = alpha * v;
    a.sin() / v.cos().powf(1.0 / alpha) * ((v - a).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Increment `X_dt` of the stable driver.
pub fn sample_stable_increment<R: Rng + ?Sized>(idx: StableIndex, dt: f64, rng: &mut R) -> f64 {
    let a = idx.alpha();
    dt.powf(1.0 / a) * sample_stable_unit(a, rng)
}

fn sample_driver<R: Rng + ?Sized>(driver: Driver, ds: f64, rng: &mut R) -> f64 {
    match driver {
        Driver::Stable { alpha } => sample_stable_increment(alpha, ds, rng),
        Driver::Brownian => {
            let z: f64 = StandardNormal.sample(rng);
            ds.sqrt() * z
        }
    }
}

/// A simulated trajectory with the additive functional `A` alongside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpPath {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub clock: Vec<f64>,
    pub jumps: Option<Vec<(f64, f64)>>,
    pub flagged: bool,
}

impl JumpPath {
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.times.len();
        if n == 0 || self.states.len() != n || self.clock.len() != n {
            return Err(ErgoError::Solver("path arrays have inconsistent lengths".into()));
        }
        if self.times[0] != 0.0 || self.clock[0] != 0.0 {
            return Err(ErgoError::Solver("path must start at time and clock zero".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ErgoError::Solver("times are not strictly increasing".into()));
        }
        if self.clock.windows(2).any(|w| w[1] < w[0]) {
            return Err(ErgoError::Solver("clock decreases".into()));
        }
        Ok(())
    }
}

/// Compound-Poisson process with Lévy measure `C |z|^{-1-α} 1_{|z|>1} dz` on `[0, horizon]`.
/// The clock uses `a` when given and `a = 1` otherwise; it is exact because the path is piecewise
/// constant.
pub fn sample_truncated_path(
    idx: StableIndex,
    cfg: &SimConfig,
    a: Option<&dyn Fn(f64) -> f64>,
    path_index: u64,
) -> Result<JumpPath> {
    cfg.validate()?;
    let alpha = idx.alpha();
    let rate = 2.0 * normalizing_constant(idx) / alpha;
    let mut rng = path_rng(cfg.master_seed, path_index);
    let speed = |x: f64| a.map_or(1.0, |f| 1.0 / f(x));
    let mut times = vec![0.0];
    let mut states = vec![cfg.x0];
    let mut clock = vec![0.0];
    let mut jumps = vec![];
    let mut t = 0.0;
    let mut x = cfg.x0;
    loop {
        let gap: f64 = Exp1.sample(&mut rng);
        let next = t + gap / rate;
        let end = next.min(cfg.horizon);
        let c = clock.last().unwrap() + (end - t) * speed(x);
        if next >= cfg.horizon {
            if end > t {
                times.push(end);
                states.push(x);
                clock.push(c);
            }
            break;
        }
        let u: f64 = 1.0 - rng.random::<f64>();
        let size = u.powf(-1.0 / alpha) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        x += size;
        t = next;
        jumps.push((t, size));
        times.push(t);
        states.push(x);
        clock.push(c);
    }
    Ok(JumpPath { times, states, clock, jumps: Some(jumps), flagged: false })
}

/// Driver path run until its clock `A` passes `clock_target`, with steps `ds = a(x) dt` capped by
/// the locality bound. The clock is accumulated by the trapezoid rule.
pub fn sample_clocked_path<A: Fn(f64) -> f64>(
    a: &A,
    cfg: &SimConfig,
    path_index: u64,
    clock_target: f64,
) -> Result<JumpPath> {
    cfg.validate()?;
    let index = cfg.driver.index();
    let mut rng = path_rng(cfg.master_seed, path_index);
    let base = ((clock_target / cfg.dt).ceil() as usize).max(1) * 64 + 1024;
    let mut budget = base;
    let mut x = cfg.x0;
    let mut inv_a = 1.0 / a(x);
    let cap_n = (clock_target / cfg.dt).ceil() as usize + 1;
    let mut times = Vec::with_capacity(cap_n);
    let mut states = Vec::with_capacity(cap_n);
    let mut clock = Vec::with_capacity(cap_n);
    times.push(0.0);
    states.push(x);
    clock.push(0.0);
    let mut t = 0.0;
    let mut c = 0.0;
    let mut extensions = 0;
    while c < clock_target {
        if times.len() > budget {
            if extensions == MAX_EXTENSIONS {
                return Err(ErgoError::Resource(format!(
                    "clock reached {c} of {clock_target} within {budget} steps"
                )));
            }
            extensions += 1;
            budget *= 2;
        }
        if !(inv_a > 0.0 && inv_a.is_finite()) {
            return Err(ErgoError::domain(format!("weight is not finite and positive at {x}")));
        }
        let mut ds = cfg.dt / inv_a;
        if let Some(eps) = cfg.locality {
            ds = ds.min((eps * (1.0 + x.abs())).powf(index));
        }
        let nx = x + sample_driver(cfg.driver, ds, &mut rng);
        let n_inv = 1.0 / a(nx);
        t += ds;
        c += 0.5 * ds * (inv_a + n_inv);
        x = nx;
        inv_a = n_inv;
        times.push(t);
        states.push(x);
        clock.push(c);
    }
    Ok(JumpPath { times, states, clock, jumps: None, flagged: false })
}

/// `Y_t = X_{τ_t}` read at the first clock crossing of each `t`.
pub fn time_change(path: &JumpPath, t_grid: &[f64]) -> Result<Vec<f64>> {
    let last = *path.clock.last().unwrap();
    t_grid
        .iter()
        .map(|&t| {
            if t > last {
                return Err(ErgoError::Resource(format!("clock ends at {last}, before t = {t}")));
            }
            let k = path.clock.partition_point(|&c| c < t);
            Ok(path.states[k])
        })
        .collect()
}

/// Index `k` with `A(τ_t) = clock[k]`, exposed for inverse-property checks.
pub fn crossing_index(path: &JumpPath, t: f64) -> usize {
    path.clock.partition_point(|&c| c < t)
}

/// Time-changed states of path `path_index` on `t_grid`.
pub fn simulate_time_changed<A: Fn(f64) -> f64>(
    a: &A,
    cfg: &SimConfig,
    path_index: u64,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    let target = t_grid.iter().cloned().fold(0.0, f64::max);
    let path = sample_clocked_path(a, cfg, path_index, target)?;
    time_change(&path, t_grid)
}

/// Time-changed Brownian motion for the weight `w`.
pub fn brownian_time_change(w: &WeightSpec, cfg: &SimConfig, path_index: u64, t_grid: &[f64]) -> Result<Vec<f64>> {
    if cfg.driver != Driver::Brownian {
        return Err(ErgoError::precondition("brownian_time_change needs the brownian driver"));
    }
    simulate_time_changed(&|x| w.a(x), cfg, path_index, t_grid)
}

/// Euler scheme `Z_{k+1} = Z_k + σ(Z_k) ΔX_k` on `[0, horizon]`.
pub fn solve_sde_with<S: Fn(f64) -> f64>(sigma: S, cfg: &SimConfig, path_index: u64) -> Result<JumpPath> {
    cfg.validate()?;
    let idx = cfg.stable_index()?;
    let mut rng = path_rng(cfg.master_seed, path_index);
    let steps = (cfg.horizon / cfg.dt).round().max(1.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(cfg.x0);
    let mut z = cfg.x0;
    let mut flagged = false;
    for k in 1..=steps {
        z += sigma(z) * sample_stable_increment(idx, cfg.dt, &mut rng);
        times.push(k as f64 * cfg.dt);
        states.push(z);
        if !(z.abs() <= OVERFLOW_GUARD) {
            flagged = true;
            break;
        }
    }
    let clock = times.clone();
    Ok(JumpPath { times, states, clock, jumps: None, flagged })
}

/// SDE driven by the stable process with the coefficient of an `sde_sigma` weight.
pub fn solve_sde(sigma: &WeightSpec, cfg: &SimConfig, path_index: u64) -> Result<JumpPath> {
    match sigma.kind {
        WeightKind::SdeSigma { .. } => {}
        _ => return Err(ErgoError::precondition("solve_sde needs an sde_sigma weight")),
    }
    match cfg.driver {
        Driver::Stable { alpha } if alpha == sigma.alpha => {}
        _ => return Err(ErgoError::precondition("driver index must match the weight's alpha")),
    }
    solve_sde_with(|z| sigma.sigma(z).unwrap(), cfg, path_index)
}

/// Runs `f` for every path index of the ensemble in parallel, ordered by index.
pub fn ensemble<T: Send, F: Fn(u64) -> T + Sync + Send>(n_paths: usize, f: F) -> Vec<T> {
    let idx: Vec<u64> = (0..n_paths as u64).collect();
    par_map(&idx, |&i| f(i))
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Critical value of the two-sample KS statistic at level 1%.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Distribution function of the unit symmetric stable law by Fourier inversion.
pub fn stable_cdf(alpha: f64, x: f64) -> Result<f64> {
    use crate::quad::{integrate, QuadOpts};
    if x == 0.0 {
        return Ok(0.5);
    }
    let cut = 40f64.powf(1.0 / alpha);
    let period = PI / x.abs();
    let mut pts = vec![0.0];
    let mut p = period.min(0.25);
    while p < cut {
        pts.push(p);
        p += period.min(0.25);
    }
    pts.push(cut);
    let v = integrate(
        |u: f64| if u == 0.0 { x } else { (x * u).sin() / u * (-u.powf(alpha)).exp() },
        &pts,
        QuadOpts { abs_tol: 1e-12, rel_tol: 1e-12, max_intervals: 100_000 },
    )?;
    Ok(0.5 + v.value / PI)
}

/// `sup_x |F_n(x) - F(x)|` over a grid, for the unit stable law.
pub fn ks_against_stable(alpha: f64, sample: &[f64], grid: &[f64]) -> Result<f64> {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for &x in grid {
        let emp = s.partition_point(|&v| v <= x) as f64 / n;
        let emp_left = s.partition_point(|&v| v < x) as f64 / n;
        let f = stable_cdf(alpha, x)?;
        d = d.max((emp - f).abs()).max((emp_left - f).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn idx(a: f64) -> StableIndex {
        StableIndex::new(a).unwrap()
    }

    fn stable_cfg(a: f64, dt: f64, t: f64, n: usize, seed: u64) -> SimConfig {
        SimConfig::new(Driver::Stable { alpha: idx(a) }, dt, t, n, seed)
    }

    #[test]
    fn characteristic_function() {
        let mut rng = path_rng(1, 0);
        let n = 1_000_000;
        let s: Vec<f64> = (0..n).map(|_| sample_stable_increment(idx(1.5), 1.0, &mut rng)).collect();
        let c: Vec<f64> = s.iter().map(|x| x.cos()).collect();
        let m = c.iter().sum::<f64>() / n as f64;
        let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt() / (n as f64).sqrt();
        assert!((m - (-1f64).exp()).abs() < 3.0 * sd, "{m} sd {sd}");
    }

    #[test]
    fn symmetry_and_self_similarity() {
        let mut rng = path_rng(2, 0);
        let n = 100_000;
        let s: Vec<f64> = (0..n).map(|_| sample_stable_increment(idx(1.2), 1.0, &mut rng)).collect();
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        assert!(ks_two_sample(&s, &neg) < ks_critical_1pct(n, n));
        let dt: f64 = 0.01;
        let mut rng = path_rng(2, 1);
        let scaled: Vec<f64> = (0..n).map(|_| dt.powf(-1.0 / 1.2) * sample_stable_increment(idx(1.2), dt, &mut rng)).collect();
        assert!(ks_two_sample(&s, &scaled) < ks_critical_1pct(n, n));
    }

    #[test]
    fn fourier_cdf_oracle() {
        for x in [-3.0f64, -0.5, 0.7, 2.0, 10.0] {
            let want = 0.5 + x.atan() / PI;
            assert!((stable_cdf(1.0, x).unwrap() - want).abs() < 1e-7, "{x}");
        }
    }

    #[test]
    fn sampler_matches_fourier_cdf() {
        let grid: Vec<f64> = (-200..=200).map(|k| k as f64 * 0.05).collect();
        for (k, a) in [1.2, 1.5, 1.8].into_iter().enumerate() {
            let mut rng = path_rng(3, k as u64);
            let n = 100_000;
            let s: Vec<f64> = (0..n).map(|_| sample_stable_unit(a, &mut rng)).collect();
            let d = ks_against_stable(a, &s, &grid).unwrap();
            assert!(d < 1.628 / (n as f64).sqrt(), "alpha {a}: {d}");
        }
    }

    #[test]
    fn truncated_jump_counts() {
        let a = 1.5;
        let cfg = SimConfig { scheme: Scheme::TruncatedCompoundPoisson, ..stable_cfg(a, 0.1, 5.0, 10_000, 9) };
        let lam = 2.0 * normalizing_constant(idx(a)) / a;
        let paths = ensemble(cfg.n_paths, |i| sample_truncated_path(idx(a), &cfg, None, i).unwrap());
        let counts: Vec<f64> = paths.iter().map(|p| p.jumps.as_ref().unwrap().len() as f64).collect();
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        let sd = (lam * 5.0 / counts.len() as f64).sqrt();
        assert!((mean - lam * 5.0).abs() < 3.0 * sd, "{mean} vs {}", lam * 5.0);
        let sizes: Vec<f64> = paths.iter().flat_map(|p| p.jumps.as_ref().unwrap().iter().map(|j| j.1.abs())).collect();
        assert!(sizes.iter().all(|s| *s > 1.0));
        let us = [2.0, 4.0, 8.0, 16.0];
        let tail: Vec<f64> = us.iter().map(|u| sizes.iter().filter(|s| **s > *u).count() as f64 / sizes.len() as f64).collect();
        let slope = crate::dirichlet_discrete::loglog_slope(&us, &tail);
        assert!((slope + a).abs() < 0.1 * a, "{slope}");
        for p in &paths[..10] {
            p.check_invariants().unwrap();
            assert_eq!(p.clock, p.times);
        }
    }

    #[test]
    fn unit_weight_time_change_is_identity() {
        let cfg = SimConfig { locality: None, ..stable_cfg(1.5, 0.01, 2.0, 1, 4) };
        let path = sample_clocked_path(&|_| 1.0, &cfg, 0, 2.0).unwrap();
        assert_eq!(path.clock, path.times);
        let grid: Vec<f64> = path.times[1..100].to_vec();
        let y = time_change(&path, &grid).unwrap();
        assert_eq!(&y[..], &path.states[1..100]);
    }

    #[test]
    fn inverse_property() {
        let w = WeightSpec::power(2.0, idx(1.5)).unwrap();
        let cfg = stable_cfg(1.5, 0.05, 50.0, 1, 5);
        let path = sample_clocked_path(&|x| w.a(x), &cfg, 0, 50.0).unwrap();
        path.check_invariants().unwrap();
        for k in 1..500 {
            let t = k as f64 * 0.1;
            let j = crossing_index(&path, t);
            assert!(path.clock[j] >= t && path.clock[j - 1] < t);
        }
        assert!(time_change(&path, &[1e9]).is_err());
    }

    #[test]
    fn birkhoff_average() {
        let w = WeightSpec::power(2.0, idx(1.5)).unwrap();
        let t_end = 1e4;
        let cfg = stable_cfg(1.5, 0.05, t_end, 1, 6);
        let grid: Vec<f64> = (1..=(t_end / 0.05) as usize).map(|k| k as f64 * 0.05).collect();
        let y = simulate_time_changed(&|x| w.a(x), &cfg, 0, &grid).unwrap();
        let ind: Vec<f64> = y.iter().map(|v| if v.abs() <= 1.0 { 1.0 } else { 0.0 }).collect();
        let batches = 50;
        let bl = ind.len() / batches;
        let means: Vec<f64> = ind.chunks(bl).take(batches).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
        let m = means.iter().sum::<f64>() / batches as f64;
        let se = (means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (batches as f64 - 1.0) / batches as f64).sqrt();
        let want = w.mass_ball(1.0).unwrap();
        assert!((m - want).abs() < 4.0 * se + 0.01, "{m} vs {want} (se {se})");
    }

    #[test]
    fn sde_unit_sigma_is_driver() {
        let cfg = stable_cfg(1.5, 0.01, 1.0, 1, 7);
        let z = solve_sde_with(|_| 1.0, &cfg, 0).unwrap();
        let mut rng = path_rng(7, 0);
        let mut x = 0.0;
        for k in 1..z.states.len() {
            x += sample_stable_increment(idx(1.5), 0.01, &mut rng);
            assert_eq!(z.states[k], x);
        }
        let w = WeightSpec::power(2.0, idx(1.5)).unwrap();
        assert!(solve_sde(&w, &cfg, 0).is_err());
    }

    #[test]
    fn brownian_unit_weight_variance() {
        let cfg = SimConfig::new(Driver::Brownian, 0.01, 1.0, 4000, 8);
        let w = |_x: f64| 1.0;
        let ends = ensemble(cfg.n_paths, |i| simulate_time_changed(&w, &SimConfig { locality: None, ..cfg }, i, &[1.0]).unwrap()[0]);
        let var = ends.iter().map(|v| v * v).sum::<f64>() / ends.len() as f64;
        let se = (2.0f64 / ends.len() as f64).sqrt();
        assert!((var - 1.0).abs() < 4.0 * se, "{var}");
    }

    #[test]
    fn determinism_across_threads() {
        let w = WeightSpec::power(2.0, idx(1.5)).unwrap();
        let cfg = stable_cfg(1.5, 0.05, 5.0, 16, 10);
        let run = || ensemble(cfg.n_paths, |i| simulate_time_changed(&|x| w.a(x), &cfg, i, &[1.0, 5.0]).unwrap());
        let a = run();
        let b = crate::par::with_threads(1, run);
        let c = crate::par::with_threads(3, run);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn config_validation() {
        assert!(stable_cfg(1.5, 0.0, 1.0, 1, 0).validate().is_err());
        assert!(stable_cfg(1.5, 2.0, 1.0, 1, 0).validate().is_err());
        assert!(stable_cfg(1.5, 0.1, 1.0, 0, 0).validate().is_err());
        let c: SimConfig = serde_json::from_str(r#"{"driver":{"kind":"stable","alpha":1.5},"dt":0.1,"horizon":1,"n_paths":2,"master_seed":3}"#).unwrap();
        assert_eq!(c.locality, Some(0.25));
        assert!(serde_json::from_str::<SimConfig>(r#"{"driver":{"kind":"brownian"},"dt":0.1,"horizon":1,"n_paths":2,"master_seed":3,"bogus":1}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn clock_monotone(seed in 0u64..10_000, gamma in 1.2f64..3.0) {
            let w = WeightSpec::power(gamma, idx(1.5)).unwrap();
            let cfg = stable_cfg(1.5, 0.05, 5.0, 1, seed);
            let p = sample_clocked_path(&|x| w.a(x), &cfg, 0, 5.0).unwrap();
            prop_assert!(p.check_invariants().is_ok());
            prop_assert!(*p.clock.last().unwrap() >= 5.0);
        }
    }
}
