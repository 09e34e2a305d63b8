//! Globally adaptive 7/15-point Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

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

/// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (k, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Panel { a, b, value, error: error.max(50.0 * f64::EPSILON * value.abs()) }
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the panels
/// delimited by `points` (which must be strictly increasing).
///
/// Bisects the panel with the largest error estimate until the summed error
/// is below `max(abs_tol, rel_tol * |value|)`. The final sum runs over panels
/// in positional order, so the result is bit-reproducible.
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], abs_tol: f64, rel_tol: f64) -> Estimate {
    assert!(points.len() >= 2, "need at least one panel");
    let mut panels: Vec<Panel> = points.windows(2).map(|w| gk15(&f, w[0], w[1])).collect();
    let mut heap: BinaryHeap<Worst> = panels.iter().enumerate().map(|(i, p)| Worst(p.error, i)).collect();
    let mut value: f64 = panels.iter().map(|p| p.value).sum();
    let mut error: f64 = panels.iter().map(|p| p.error).sum();
    while error > abs_tol.max(rel_tol * value.abs()) && panels.len() < MAX_INTERVALS {
        let Some(Worst(_, worst)) = heap.pop() else { break };
        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // cannot bisect further in floating point
            break;
        }
        let (left, right) = (gk15(&f, p.a, mid), gk15(&f, mid, p.b));
        value += left.value + right.value - p.value;
        error += left.error + right.error - p.error;
        panels[worst] = left;
        panels.push(right);
        heap.push(Worst(left.error, worst));
        heap.push(Worst(right.error, panels.len() - 1));
    }
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    Estimate {
        value: pairwise_sum(panels.iter().map(|p| p.value)),
        error: pairwise_sum(panels.iter().map(|p| p.error)),
        intervals: panels.len(),
    }
}

/// Heap entry ordered by error, ties broken by panel index.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Worst(f64, usize);

impl Eq for Worst {}

impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

/// Pairwise summation with a fixed reduction tree.
pub fn pairwise_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    fn rec(v: &[f64]) -> f64 {
        match v.len() {
            0 => 0.0,
            1 => v[0],
            n => rec(&v[..n / 2]) + rec(&v[n / 2..]),
        }
    }
    rec(&v)
}
