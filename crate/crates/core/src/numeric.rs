//! Small numeric kernels shared by the quadrature code.

/// Neumaier-compensated accumulator.
///
/// Sums produced by this type do not depend on cancellation luck, which keeps
/// cell sums reproducible when the caller shards and re-joins them.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if !t.is_finite() {
            self.sum = t;
            return;
        }
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        if self.sum.is_finite() {
            self.sum + self.comp
        } else {
            self.sum
        }
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Five-point Gauss-Legendre nodes and weights on [-1, 1].
const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Nodes of the five-point Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss5_nodes(a: f64, b: f64) -> [f64; 5] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL5_NODES.map(|t| mid + half * t)
}

/// Weights of the five-point rule on `[a, b]`, matching [`gauss5_nodes`].
pub fn gauss5_weights(a: f64, b: f64) -> [f64; 5] {
    let half = 0.5 * (b - a);
    GL5_WEIGHTS.map(|w| w * half)
}

/// Bisection root of a function with a sign change on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
