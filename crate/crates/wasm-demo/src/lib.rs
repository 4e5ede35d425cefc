//! Browser bindings: rate profiles and ergodicity class of a weight, the drift series against its
//! cotangent limit, and the time-changed generator along a grid.
//!
//! Every export takes plain numbers or JSON text and returns JSON text. Errors come back as
//! `{"error": "..."}` so the page never has to catch exceptions.

use serde_json::{json, Value};
use stable_ergo::generator::{timechanged_generator, TestFunction};
use stable_ergo::special_functions::{cot_pi_half_alpha, drift_series_e, normalizing_constant};
use stable_ergo::weights_rates::{classify_ergodicity, compute_rate_profile, WeightDescription};
use stable_ergo::{Result, StableIndex};
use wasm_bindgen::prelude::*;

fn respond(r: Result<Value>) -> String {
    r.unwrap_or_else(|e| json!({"error": e.to_string()})).to_string()
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| stable_ergo::ErgoError::Config { path: what.into(), message: e.to_string() })
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn rate_profile_impl(weight: &str, r_max: f64, n: usize) -> Result<Value> {
    let w = parse::<WeightDescription>(weight, "weight")?.build()?;
    let radii = log_grid(0.1, r_max.max(1.0), n);
    let p = compute_rate_profile(&w, &radii)?;
    Ok(json!({
        "radii": p.radii,
        "phi": p.phi,
        "K": p.big_k,
        "k": p.small_k,
        "class": classify_ergodicity(&w)?,
    }))
}

/// Rate functions `Φ`, `K`, `k` on a log grid up to `r_max`, plus the certified class.
#[wasm_bindgen]
pub fn rate_profile(weight_json: &str, r_max: f64, n: usize) -> String {
    respond(rate_profile_impl(weight_json, r_max, n))
}

fn drift_series_impl(alpha: f64, theta: f64) -> Result<Value> {
    let idx = StableIndex::new(alpha)?;
    let e = drift_series_e(idx, theta)?;
    Ok(json!({
        "e": e.value,
        "tail_bound": e.tail_bound,
        "pi_cot": cot_pi_half_alpha(idx).ok(),
        "normalizing_constant": normalizing_constant(idx),
    }))
}

/// `E(α, θ)` next to `π cot(πα/2)`.
#[wasm_bindgen]
pub fn drift_series(alpha: f64, theta: f64) -> String {
    respond(drift_series_impl(alpha, theta))
}

fn generator_curve_impl(weight: &str, f: &str, x_max: f64, n: usize, truncated: bool) -> Result<Value> {
    let w = parse::<WeightDescription>(weight, "weight")?.build()?;
    let f: TestFunction = parse(f, "f")?;
    f.validate()?;
    let n = n.clamp(2, 400);
    let xs: Vec<f64> = (0..n).map(|i| -x_max + 2.0 * x_max * i as f64 / (n - 1) as f64).collect();
    let mut values = Vec::with_capacity(n);
    for &x in &xs {
        values.push(timechanged_generator(&f, x, &w, truncated)?.value);
    }
    let u: Vec<f64> = xs.iter().map(|&x| f.value(x)).collect();
    Ok(json!({"x": xs, "u": u, "lu": values}))
}

/// `a(x) Δ^{α/2} u(x)` on `n` points of `[-x_max, x_max]`.
#[wasm_bindgen]
pub fn generator_curve(weight_json: &str, f_json: &str, x_max: f64, n: usize, truncated: bool) -> String {
    respond(generator_curve_impl(weight_json, f_json, x_max, n, truncated))
}
