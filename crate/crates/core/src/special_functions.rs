//! Normalizing constant, Gauss hypergeometric series, the drift series `E(alpha, theta)`
//! and the cotangent limit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ErgoError, Result};

/// Stability index of a one-dimensional symmetric stable process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct StableIndex {
    alpha: f64,
}

impl StableIndex {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(ErgoError::domain(format!("alpha must lie in (0, 2), got {alpha}")));
        }
        Ok(StableIndex { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        1
    }
}

impl TryFrom<f64> for StableIndex {
    type Error = ErgoError;
    fn try_from(a: f64) -> Result<Self> {
        StableIndex::new(a)
    }
}

impl From<StableIndex> for f64 {
    fn from(s: StableIndex) -> f64 {
        s.alpha
    }
}

/// A truncated series together with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    pub tail_bound: f64,
}

const SERIES_TOL: f64 = 1e-14;
const SERIES_CAP: usize = 50_000_000;
const DRIFT_TOL: f64 = 1e-13;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function (Lanczos, g = 7, n = 9, with reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS[0];
        for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// `C_{1,alpha} = alpha 2^{alpha-1} Gamma((1+alpha)/2) / (sqrt(pi) Gamma(1-alpha/2))`.
pub fn normalizing_constant(idx: StableIndex) -> f64 {
    let a = idx.alpha();
    a * 2f64.powf(a - 1.0) * gamma(0.5 * (1.0 + a)) / (PI.sqrt() * gamma(1.0 - 0.5 * a))
}

/// Partial sum of `2F1(a, b; c; z)` for `|z| <= 1`.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<SeriesResult> {
    if c <= 0.0 && c == c.round() {
        return Err(ErgoError::domain(format!("c = {c} is a nonpositive integer")));
    }
    if !(z.abs() <= 1.0) {
        return Err(ErgoError::domain(format!("|z| must be at most 1, got {z}")));
    }
    let excess = c - a - b;
    if z.abs() == 1.0 && excess <= 0.0 {
        return Err(ErgoError::Divergence(format!("|z| = 1 with c - a - b = {excess} <= 0")));
    }
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut small = 0;
    let mut n = 0usize;
    let mut ratio = 0.0;
    while small < 3 {
        if n >= SERIES_CAP {
            return Err(ErgoError::NonConvergence { terms: n });
        }
        let nf = n as f64;
        let next = term * (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        ratio = if term != 0.0 { (next / term).abs() } else { 0.0 };
        term = next;
        sum += term;
        n += 1;
        if term.abs() < SERIES_TOL * sum.abs() {
            small += 1;
        } else {
            small = 0;
        }
    }
    let tail_bound = if term == 0.0 {
        0.0
    } else if z.abs() == 1.0 {
        term.abs() * n as f64 / excess
    } else {
        term.abs() * ratio / (1.0 - ratio).max(f64::EPSILON)
    };
    Ok(SeriesResult { value: sum, terms_used: n + 1, tail_bound })
}

/// `E(alpha, theta)` in the resummed even-index form; `theta` may be negative.
fn drift_series_signed(alpha: f64, theta: f64) -> Result<SeriesResult> {
    let mut coef = 1.0;
    let mut sum = 0.0;
    let mut small = 0;
    let mut i = 0usize;
    let mut last = 0.0;
    while small < 3 {
        i += 1;
        if i >= SERIES_CAP {
            return Err(ErgoError::NonConvergence { terms: i });
        }
        let two_i = 2.0 * i as f64;
        coef *= (theta - two_i + 1.0) / two_i;
        if i > 1 {
            coef *= (theta - two_i + 2.0) / (two_i - 1.0);
        }
        last = coef * (1.0 / (two_i - alpha) + 1.0 / (two_i + alpha - theta));
        sum += last;
        let scale = (2.0 / (alpha - theta) + 2.0 * alpha * sum).abs().max(2.0 / (alpha - theta).abs());
        if (2.0 * alpha * last).abs() < DRIFT_TOL * scale {
            small += 1;
        } else {
            small = 0;
        }
    }
    let p = 2.0 + theta;
    let n = i as f64;
    let tail = last * (n / (p - 1.0) - 0.5);
    let value = 2.0 / (alpha - theta) + 2.0 * alpha * (sum + tail);
    let tail_bound = (2.0 * alpha * last).abs() * n / (p - 1.0);
    Ok(SeriesResult { value, terms_used: i, tail_bound })
}

/// The drift series `E(alpha, theta)` for `theta` in `(0, 1)`.
pub fn drift_series_e(idx: StableIndex, theta: f64) -> Result<SeriesResult> {
    let alpha = idx.alpha();
    if !(theta > 0.0 && theta < 1.0) {
        return Err(ErgoError::domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    if alpha <= 1.0 && theta >= alpha {
        return Err(ErgoError::domain(format!("theta = {theta} >= alpha = {alpha}")));
    }
    drift_series_signed(alpha, theta)
}

/// `E(alpha, -theta)`, the series entering the bounded Lyapunov function drift.
pub fn drift_series_e_reflected(idx: StableIndex, theta: f64) -> Result<SeriesResult> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(ErgoError::domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    drift_series_signed(idx.alpha(), -theta)
}

/// `pi cot(pi alpha / 2)` by trigonometry and by its partial-fraction series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CotLimit {
    pub trig: f64,
    pub series: SeriesResult,
}

const COT_TERMS: usize = 1_000_000;

pub fn cot_limit(idx: StableIndex) -> CotLimit {
    let a = idx.alpha();
    let trig = if a == 1.0 { 0.0 } else { PI / (0.5 * PI * a).tan() };
    let n = COT_TERMS;
    let mut s = 0.0;
    for i in (1..=n).rev() {
        let fi = i as f64;
        s += 4.0 * a / (4.0 * fi * fi - a * a);
    }
    let nf = n as f64;
    let tail = a * (1.0 / nf - 0.5 / (nf * nf) + 1.0 / (6.0 * nf * nf * nf))
        + a * a * a / (12.0 * nf * nf * nf);
    let value = 2.0 / a - s - tail;
    let tail_bound = a.powi(3) / (4.0 - a * a) / (nf * nf * nf) + a / nf.powi(4) + 1e-12;
    CotLimit { trig, series: SeriesResult { value, terms_used: n, tail_bound } }
}

/// `pi cot(pi alpha / 2)`, cross-checked against the partial-fraction series.
pub fn cot_pi_half_alpha(idx: StableIndex) -> Result<f64> {
    let c = cot_limit(idx);
    let gap = (c.trig - c.series.value).abs();
    if gap > 1e-8 {
        return Err(ErgoError::Tolerance { value: c.trig, error: gap });
    }
    Ok(c.trig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_endpoint, QuadOpts};

    fn idx(a: f64) -> StableIndex {
        StableIndex::new(a).unwrap()
    }

    #[test]
    fn stable_index_domain() {
        assert!(StableIndex::new(2.0).is_err());
        assert!(StableIndex::new(0.0).is_err());
        assert!(StableIndex::new(f64::NAN).is_err());
        assert_eq!(idx(1.3).dim(), 1);
    }

    #[test]
    fn gamma_known_values() {
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(0.0005) / 1_999.423_278_636_35 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalizing_constant_values() {
        assert!((normalizing_constant(idx(1.0)) - 1.0 / PI).abs() < 1e-15);
        // mpmath, 30 digits
        let frozen = [
            (0.5, 0.199_471_140_200_716_34),
            (1.2, 0.333_549_429_912_248_1),
            (1.5, 0.299_206_710_301_074_5),
            (1.8, 0.164_904_938_818_302_72),
        ];
        for (a, c) in frozen {
            let v = normalizing_constant(idx(a));
            assert!((v / c - 1.0).abs() < 1e-12, "alpha {a}: {v} vs {c}");
        }
        let r = normalizing_constant(idx(1.999)) / 0.001;
        assert!((0.99..=1.01).contains(&r));
    }

    #[test]
    fn hypergeometric_cases() {
        let r = gauss_2f1(-0.3, 1.2, 2.2, 0.0).unwrap();
        assert_eq!(r.value, 1.0);
        let r = gauss_2f1(1.0, 1.0, 2.0, 0.5).unwrap();
        assert!((r.value - 2.0 * 2f64.ln()).abs() < 1e-13);
        assert!(r.tail_bound < 1e-13);
        assert!(matches!(gauss_2f1(1.0, 1.0, 2.0, 1.0), Err(ErgoError::Divergence(_))));
        assert!(gauss_2f1(1.0, 1.0, -2.0, 0.5).is_err());
    }

    #[test]
    fn hypergeometric_unit_circle() {
        let (t, a) = (0.1, 1.5);
        let m = gauss_2f1(-t, a - t, 1.0 + a - t, -1.0).unwrap();
        let p = gauss_2f1(-t, a - t, 1.0 + a - t, 1.0).unwrap();
        // mpmath
        assert!((m.value - 1.045_601_007_119_626_1).abs() < 1e-12);
        assert!((p.value - 0.888_966_266_809_877).abs() <= p.tail_bound + 1e-12);
        // displayed even-index resummation
        let mut coef = 1.0;
        let mut even = 2.0;
        let mut last = 0.0;
        let n = 4_000_000usize;
        for i in 1..=n {
            let k = 2.0 * i as f64;
            coef *= (t - k + 2.0) * (t - k + 1.0) / ((k - 1.0) * k);
            last = 2.0 * coef * (a - t) / (k + a - t);
            even += last;
        }
        let even_tail = last.abs() * n as f64 / (1.0 + t);
        assert!((m.value + p.value - even).abs() < p.tail_bound + even_tail);
    }

    /// Independent evaluation of the pre-resummation formula: binomial sum by quadrature of
    /// its generating function, `2F1(.;1)` by Gauss's summation theorem, `2F1(.;-1)` by Euler's integral.
    fn e_two_2f1(alpha: f64, theta: f64) -> f64 {
        let g = |x: f64, y: f64| {
            if x < 1e-3 {
                let c2 = theta * (theta - 1.0) / 2.0;
                let c4 = c2 * (theta - 2.0) * (theta - 3.0) / 12.0;
                let c6 = c4 * (theta - 4.0) * (theta - 5.0) / 30.0;
                let x2 = x * x;
                return (c2 + x2 * (c4 + x2 * c6)) * x.powf(1.0 - alpha);
            }
            let up = (theta * x.ln_1p()).exp_m1();
            let dn = (theta * y.ln()).exp_m1();
            0.5 * (up + dn) * x.powf(-alpha - 1.0)
        };
        let opts = QuadOpts { abs_tol: 1e-12, rel_tol: 1e-14, max_intervals: 200_000 };
        let left = integrate_endpoint(|x| g(x, 1.0 - x), 0.0, 0.5, 1.0 / (2.0 - alpha), opts).unwrap().value;
        let right = integrate_endpoint(|y| g(1.0 - y, y), 0.0, 0.5, 2.0 / theta.abs(), opts).unwrap().value;
        let binom = 2.0 * (left + right);
        let f_plus = gamma(1.0 + alpha - theta) * gamma(1.0 + theta) / gamma(1.0 + alpha);
        let b = alpha - theta;
        let euler = |t: f64| b * t.powf(b - 1.0) * (1.0 + t).powf(theta);
        let f_minus = integrate_endpoint(euler, 0.0, 1.0, 1.0 / b.min(1.0), opts).unwrap().value;
        alpha / theta * binom - 2.0 / theta + alpha * (f_minus + f_plus) / (theta * (alpha - theta))
    }

    #[test]
    fn resummation_matches_two_2f1_form() {
        for &alpha in &[1.1, 1.3, 1.5, 1.7, 1.9] {
            for &theta in &[0.05, 0.1, 0.3, 0.6, 0.9] {
                let e = drift_series_e(idx(alpha), theta).unwrap().value;
                let o = e_two_2f1(alpha, theta);
                assert!((e - o).abs() < 1e-9, "alpha {alpha} theta {theta}: {e} vs {o}");
            }
            for &theta in &[0.05, 0.3] {
                let e = drift_series_e_reflected(idx(alpha), theta).unwrap().value;
                let o = e_two_2f1(alpha, -theta);
                assert!((e - o).abs() < 1e-9, "alpha {alpha} theta -{theta}: {e} vs {o}");
            }
        }
    }

    #[test]
    fn drift_series_frozen_values() {
        // mpmath evaluation of the pre-resummation formula, 30 digits
        let frozen = [
            (1.5, 0.3, -1.229_845_929_324_559),
            (1.5, 0.1, -2.477_106_191_534_311),
            (1.5, 0.05, -2.804_292_620_627_439),
            (1.2, 0.05, -0.762_075_971_840_960_3),
            (1.8, 0.05, -9.013_438_980_835_56),
            (1.9, 0.2, -15.267_756_053_323_25),
        ];
        for (a, t, v) in frozen {
            let e = drift_series_e(idx(a), t).unwrap();
            assert!((e.value - v).abs() < 1e-10, "alpha {a} theta {t}: {}", e.value);
            assert!(e.tail_bound >= 0.0 && e.terms_used >= 1);
        }
        for (a, t, v) in [(1.2, 0.05, -1.285_833_633_971_17), (1.5, 0.3, -5.553_333_564_254_5)] {
            let e = drift_series_e_reflected(idx(a), t).unwrap();
            assert!((e.value - v).abs() < 1e-10, "alpha {a} theta -{t}: {}", e.value);
        }
    }

    #[test]
    fn drift_series_limit_and_sign() {
        for &a in &[1.1, 1.3, 1.5, 1.7, 1.9] {
            assert!(drift_series_e(idx(a), 1e-3).unwrap().value < 0.0);
        }
        let e = drift_series_e(idx(1.5), 1e-4).unwrap().value;
        assert!((e + PI).abs() < 1e-3);
        let e = drift_series_e(idx(1.2), 1e-4).unwrap().value;
        assert!((e - -1.020_765_330_691_925_7).abs() < 1e-3);
        assert!(drift_series_e(idx(0.8), 0.9).is_err());
        assert!(drift_series_e(idx(1.5), 1.0).is_err());
    }

    #[test]
    fn cotangent_identity() {
        assert_eq!(cot_pi_half_alpha(idx(1.0)).unwrap(), 0.0);
        assert!((cot_pi_half_alpha(idx(1.5)).unwrap() + PI).abs() < 1e-12);
        for &a in &[0.3, 0.7, 1.2, 1.5, 1.8] {
            let c = cot_limit(idx(a));
            assert!((c.trig - c.series.value).abs() <= c.series.tail_bound, "alpha {a}");
            assert!((c.trig - c.series.value).abs() < 1e-8);
        }
        assert!(cot_pi_half_alpha(idx(0.5)).unwrap() > 0.0);
        assert!(cot_pi_half_alpha(idx(1.7)).unwrap() < 0.0);
    }
}
