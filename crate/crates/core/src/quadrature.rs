//! Gauss-Legendre rules on intervals and trapezoid weights for time grids.

use std::f64::consts::PI;

/// Nodes and weights of an `n`-point Gauss-Legendre rule mapped to `[0, len]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize, len: f64) -> Self {
        assert!(n >= 1, "gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        let half = 0.5 * len;
        for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
            *x = half * (*x + 1.0);
            *w *= half;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Legendre polynomial P_n and its derivative at `x` via the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Number of Gauss points that integrates `cos(k pi x / L)` over `[0, L]` to
/// round-off for every integer `k <= max_wavenumber`.
///
/// The rule has to clear the Airy transition of the Bessel coefficients,
/// which sits at `omega + O(omega^{1/3})` with `omega = k pi / 2`.
pub fn points_for_wavenumber(max_wavenumber: usize) -> usize {
    let omega = max_wavenumber as f64 * PI / 2.0;
    let margin = 14.0 * (omega / 2.0).cbrt().max(1.0);
    ((omega + margin + 4.0) / 2.0).ceil() as usize
}

/// Composite trapezoid weights for a strictly increasing sample grid.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = times[i] - times[i - 1];
        w[i - 1] += 0.5 * h;
        w[i] += 0.5 * h;
    }
    w
}
