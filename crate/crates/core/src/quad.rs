//! Adaptive Gauss-Kronrod quadrature and fixed composite rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{ErgoError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOpts {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts { abs_tol: 1e-8, rel_tol: 1e-10, max_intervals: 200_000 }
    }
}

impl QuadOpts {
    pub fn tight(abs_tol: f64) -> Self {
        QuadOpts { abs_tol, rel_tol: 1e-12, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate { value: self.value + o.value, error: self.error + o.error, evals: self.evals + o.evals }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).abs())
}

/// Globally adaptive GK15 over consecutive intervals of `points`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], opts: QuadOpts) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0usize;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (v, e) = gk15(&f, a, b);
        evals += 15;
        total += v;
        err += e;
        heap.push(Panel { a, b, value: v, error: e });
    }
    let mut frozen_err = 0.0;
    let mut frozen_val = 0.0;
    while err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            return Err(ErgoError::Tolerance { value: total, error: err });
        }
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b || (p.b - p.a) < 1e-14 * m.abs().max(1e-300) {
            frozen_err += p.error;
            frozen_val += p.value;
            err -= p.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        evals += 30;
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Panel { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, error: e2 });
    }
    let value: f64 = heap.iter().map(|p| p.value).sum::<f64>() + frozen_val;
    let error: f64 = heap.iter().map(|p| p.error).sum::<f64>() + frozen_err;
    if !value.is_finite() {
        return Err(ErgoError::Tolerance { value, error });
    }
    Ok(Estimate { value, error, evals })
}

/// Integral over `[a, b]` of a function with an algebraic endpoint singularity at `a`,
/// using the substitution `x = a + (b - a) t^m`.
pub fn integrate_endpoint<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: f64, opts: QuadOpts) -> Result<Estimate> {
    let len = b - a;
    let g = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let tm1 = t.powf(m - 1.0);
        f(a + len * tm1 * t) * len * m * tm1
    };
    integrate(g, &[0.0, 1.0], opts)
}

/// Geometric breakpoints `a, a q, a q^2, ...` up to `b` (requires `a > 0`).
pub fn geometric_points(a: f64, b: f64, ratio: f64) -> Vec<f64> {
    let mut pts = vec![a];
    let mut x = a;
    while x * ratio < b {
        x *= ratio;
        pts.push(x);
    }
    pts.push(b);
    pts
}

/// Merge extra breakpoints inside `(lo, hi)` into a sorted list.
pub fn with_breaks(mut pts: Vec<f64>, extra: &[f64]) -> Vec<f64> {
    let lo = pts[0];
    let hi = *pts.last().unwrap();
    for &e in extra {
        if e > lo && e < hi {
            pts.push(e);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs().max(1.0));
    pts
}

/// Composite 5-point Gauss-Legendre with `panels` equal panels per interval.
pub fn composite_gl<F: Fn(f64) -> f64>(f: F, points: &[f64], panels: usize) -> f64 {
    let mut s = 0.0;
    for w in points.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        for p in 0..panels {
            let c = w[0] + (p as f64 + 0.5) * h;
            for k in 0..5 {
                s += GL5_W[k] * f(c + 0.5 * h * GL5_X[k]) * 0.5 * h;
            }
        }
    }
    s
}

/// Nodes and weights of [`composite_gl`].
pub fn composite_gl_nodes(points: &[f64], panels: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(points.len() * panels * 5);
    for w in points.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        for p in 0..panels {
            let c = w[0] + (p as f64 + 0.5) * h;
            for k in 0..5 {
                out.push((c + 0.5 * h * GL5_X[k], GL5_W[k] * 0.5 * h));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_trig() {
        let e = integrate(|x| x.sin(), &[0.0, std::f64::consts::PI], QuadOpts::default()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-13);
        let e = integrate(|x| x.exp(), &[0.0, 0.5, 1.0], QuadOpts::default()).unwrap();
        assert!((e.value - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        let e = integrate_endpoint(|x| x.powf(-0.8), 0.0, 1.0, 5.0, QuadOpts::tight(1e-12)).unwrap();
        assert!((e.value - 5.0).abs() < 1e-10, "{}", e.value);
    }

    #[test]
    fn adaptive_kink() {
        let e = integrate(|x: f64| x.abs().sqrt(), &[-1.0, 2.0], QuadOpts::tight(1e-12)).unwrap();
        let exact = 2.0 / 3.0 * (1.0 + 2f64.powf(1.5));
        assert!((e.value - exact).abs() < 1e-9);
    }

    #[test]
    fn composite_rule_converges() {
        let a = composite_gl(|x| (3.0 * x).cos(), &[0.0, 2.0], 4);
        assert!((a - (6f64).sin() / 3.0).abs() < 1e-10);
        let b: f64 = composite_gl_nodes(&[0.0, 2.0], 4).iter().map(|(x, w)| w * (3.0 * x).cos()).sum();
        assert!((a - b).abs() < 1e-15);
    }
}
