//! One-dimensional orthonormal sine/cosine families on `[0, L]` and the
//! closed-form integrals between them.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Sin,
    Cos,
}

impl Parity {
    pub fn flip(self) -> Self {
        match self {
            Parity::Sin => Parity::Cos,
            Parity::Cos => Parity::Sin,
        }
    }
}

/// L2-normalisation of the `k`-th function of the given parity on `[0, len]`.
pub fn norm_const(parity: Parity, k: usize, len: f64) -> f64 {
    match (parity, k) {
        (Parity::Sin, 0) => 0.0,
        (Parity::Cos, 0) => (1.0 / len).sqrt(),
        _ => (2.0 / len).sqrt(),
    }
}

/// Value and first two derivatives of the normalised mode at `x`.
pub fn eval(parity: Parity, k: usize, len: f64, x: f64) -> [f64; 3] {
    let c = norm_const(parity, k, len);
    let w = k as f64 * PI / len;
    let (s, co) = (w * x).sin_cos();
    match parity {
        Parity::Sin => [c * s, c * w * co, -c * w * w * s],
        Parity::Cos => [c * co, -c * w * s, -c * w * w * co],
    }
}

/// Derivative of a mode expressed in the opposite family:
/// `phi'_k = factor * psi_k` with `psi` of the flipped parity.
pub fn derivative_factor(parity: Parity, k: usize, len: f64) -> f64 {
    let w = k as f64 * PI / len;
    match (parity, k) {
        (_, 0) => 0.0,
        (Parity::Sin, _) => w,
        (Parity::Cos, _) => -w,
    }
}

/// `<phi^a_j, phi^b_k>` over `[0, len]`, exact.
pub fn inner(pa: Parity, j: usize, pb: Parity, k: usize, len: f64) -> f64 {
    match (pa, pb) {
        (Parity::Sin, Parity::Sin) | (Parity::Cos, Parity::Cos) => {
            if j == k && norm_const(pa, j, len) != 0.0 {
                1.0
            } else {
                0.0
            }
        }
        (Parity::Sin, Parity::Cos) => sin_cos_integral(j, k, len),
        (Parity::Cos, Parity::Sin) => sin_cos_integral(k, j, len),
    }
}

/// `<phi_s_j, phi_c_k>` for sine index `j` and cosine index `k`.
fn sin_cos_integral(j: usize, k: usize, len: f64) -> f64 {
    if j == 0 || (j + k).is_multiple_of(2) {
        return 0.0;
    }
    let (jf, kf) = (j as f64, k as f64);
    let raw = len / PI * 2.0 * jf / (jf * jf - kf * kf);
    raw * norm_const(Parity::Sin, j, len) * norm_const(Parity::Cos, k, len)
}

/// `<phi^a_j, d/dx phi^b_k>` over `[0, len]`, exact.
pub fn inner_deriv(pa: Parity, j: usize, pb: Parity, k: usize, len: f64) -> f64 {
    let f = derivative_factor(pb, k, len);
    if f == 0.0 {
        return 0.0;
    }
    f * inner(pa, j, pb.flip(), k, len)
}

/// A signed trigonometric term `coef * sin(n pi x / L)` or `coef * cos(n pi x / L)`.
#[derive(Debug, Clone, Copy)]
struct Wave {
    parity: Parity,
    n: i64,
    coef: f64,
}

fn mul(a: Wave, b: Wave) -> [Wave; 2] {
    let h = 0.5 * a.coef * b.coef;
    let (d, s) = (a.n - b.n, a.n + b.n);
    use Parity::*;
    match (a.parity, b.parity) {
        (Sin, Sin) => [Wave { parity: Cos, n: d, coef: h }, Wave { parity: Cos, n: s, coef: -h }],
        (Cos, Cos) => [Wave { parity: Cos, n: d, coef: h }, Wave { parity: Cos, n: s, coef: h }],
        (Sin, Cos) => [Wave { parity: Sin, n: s, coef: h }, Wave { parity: Sin, n: d, coef: h }],
        (Cos, Sin) => [Wave { parity: Sin, n: s, coef: h }, Wave { parity: Sin, n: d, coef: -h }],
    }
}

fn integrate_wave(w: Wave, len: f64) -> f64 {
    match w.parity {
        Parity::Cos => {
            if w.n == 0 {
                w.coef * len
            } else {
                0.0
            }
        }
        Parity::Sin => {
            if w.n % 2 == 0 {
                0.0
            } else {
                w.coef * 2.0 * len / (w.n as f64 * PI)
            }
        }
    }
}

/// A normalised mode, optionally differentiated once.
#[derive(Debug, Clone, Copy)]
pub struct Factor {
    pub parity: Parity,
    pub k: usize,
    pub derivative: bool,
}

impl Factor {
    pub fn plain(parity: Parity, k: usize) -> Self {
        Self { parity, k, derivative: false }
    }

    pub fn deriv(parity: Parity, k: usize) -> Self {
        Self { parity, k, derivative: true }
    }

    fn wave(self, len: f64) -> Wave {
        let c = norm_const(self.parity, self.k, len);
        if self.derivative {
            Wave { parity: self.parity.flip(), n: self.k as i64, coef: c * derivative_factor(self.parity, self.k, len) }
        } else {
            Wave { parity: self.parity, n: self.k as i64, coef: c }
        }
    }
}

/// Exact integral over `[0, len]` of a product of three factors.
pub fn triple(a: Factor, b: Factor, c: Factor, len: f64) -> f64 {
    let (wa, wb, wc) = (a.wave(len), b.wave(len), c.wave(len));
    if wa.coef == 0.0 || wb.coef == 0.0 || wc.coef == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for ab in mul(wa, wb) {
        for abc in mul(ab, wc) {
            total += integrate_wave(abc, len);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussRule;

    fn quad_inner(pa: Parity, j: usize, pb: Parity, k: usize, len: f64, deriv: bool) -> f64 {
        let rule = GaussRule::new(120, len);
        rule.integrate(|x| {
            let a = eval(pa, j, len, x)[0];
            let b = eval(pb, k, len, x)[usize::from(deriv)];
            a * b
        })
    }

    #[test]
    fn closed_form_inner_products_match_quadrature() {
        let len = 2.3;
        for pa in [Parity::Sin, Parity::Cos] {
            for pb in [Parity::Sin, Parity::Cos] {
                for j in 0..7 {
                    for k in 0..7 {
                        let q = quad_inner(pa, j, pb, k, len, false);
                        let c = inner(pa, j, pb, k, len);
                        assert!((q - c).abs() < 1e-12, "{pa:?}{j} {pb:?}{k}: {q} vs {c}");
                        let qd = quad_inner(pa, j, pb, k, len, true);
                        let cd = inner_deriv(pa, j, pb, k, len);
                        assert!((qd - cd).abs() < 1e-11, "d {pa:?}{j} {pb:?}{k}: {qd} vs {cd}");
                    }
                }
            }
        }
    }

    #[test]
    fn derivative_coupling_is_antisymmetric_when_one_side_vanishes() {
        // sine functions vanish at both ends, so boundary terms drop out
        let len = std::f64::consts::PI;
        for j in 0..9 {
            for k in 0..9 {
                for pb in [Parity::Sin, Parity::Cos] {
                    let a = inner_deriv(Parity::Sin, j, pb, k, len);
                    let b = inner_deriv(pb, k, Parity::Sin, j, len);
                    assert!((a + b).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn triple_products_match_quadrature() {
        let len = 1.7;
        let rule = GaussRule::new(80, len);
        let fs = [Parity::Sin, Parity::Cos];
        for &pa in &fs {
            for &pb in &fs {
                for &pc in &fs {
                    for (j, k, l) in [(1, 2, 3), (0, 1, 1), (2, 2, 4), (3, 0, 2), (1, 1, 0)] {
                        for da in [false, true] {
                            let a = Factor { parity: pa, k: j, derivative: da };
                            let b = Factor::plain(pb, k);
                            let c = Factor::plain(pc, l);
                            let q = rule.integrate(|x| {
                                eval(pa, j, len, x)[usize::from(da)] * eval(pb, k, len, x)[0] * eval(pc, l, len, x)[0]
                            });
                            let t = triple(a, b, c, len);
                            assert!((q - t).abs() < 1e-12, "{q} vs {t}");
                        }
                    }
                }
            }
        }
    }
}
