//! Closed-form separable fields: sums of `envelope(t) * c * prod_a f_a(x_a)`.
//!
//! They describe harmonic lifts and manufactured solutions. Values and
//! derivatives are exact, and projection onto a tensor eigenbasis reduces to
//! one-dimensional quadratures.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::grid::QuadGrid;
use crate::operators::GridState;
use crate::quadrature::{points_for_wavenumber, GaussRule};
use crate::space::{Space, StateU};
use crate::trig;

/// One-dimensional factor with closed-form first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// `sin(w x)`
    Sin(f64),
    /// `cos(w x)`
    Cos(f64),
    /// `sinh(kappa (x - anchor))`
    Sinh { kappa: f64, anchor: f64 },
    /// `cosh(kappa (x - anchor))`
    Cosh { kappa: f64, anchor: f64 },
    /// `a x^2 + b x + c`
    Poly2 { a: f64, b: f64, c: f64 },
    /// `sin(w x) / (b - cos(w x))`, `b > 1`
    SinRatio { w: f64, b: f64 },
    /// `1 / (b - cos(w x))`, `b > 1`
    CosRatio { w: f64, b: f64 },
}

impl Profile {
    pub fn constant(c: f64) -> Self {
        Profile::Poly2 { a: 0.0, b: 0.0, c }
    }

    /// Value, first and second derivative at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        match *self {
            Profile::Sin(w) => {
                let (s, c) = (w * x).sin_cos();
                [s, w * c, -w * w * s]
            }
            Profile::Cos(w) => {
                let (s, c) = (w * x).sin_cos();
                [c, -w * s, -w * w * c]
            }
            Profile::Sinh { kappa, anchor } => {
                let y = kappa * (x - anchor);
                [y.sinh(), kappa * y.cosh(), kappa * kappa * y.sinh()]
            }
            Profile::Cosh { kappa, anchor } => {
                let y = kappa * (x - anchor);
                [y.cosh(), kappa * y.sinh(), kappa * kappa * y.cosh()]
            }
            Profile::Poly2 { a, b, c } => [a * x * x + b * x + c, 2.0 * a * x + b, 2.0 * a],
            Profile::SinRatio { w, b } => {
                let (s, c) = (w * x).sin_cos();
                let q = b - c;
                [s / q, w * (b * c - 1.0) / (q * q), -w * w * s * (b * b + b * c - 2.0) / (q * q * q)]
            }
            Profile::CosRatio { w, b } => {
                let (s, c) = (w * x).sin_cos();
                let q = b - c;
                [1.0 / q, -w * s / (q * q), w * w * (2.0 * s * s - c * q) / (q * q * q)]
            }
        }
    }
}

/// `coef * prod_a factors[a](x_a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separable {
    pub coef: f64,
    pub factors: Vec<Profile>,
}

impl Separable {
    pub fn new(coef: f64, factors: Vec<Profile>) -> Self {
        Self { coef, factors }
    }

    fn factor_values(&self, x: &[f64]) -> Vec<[f64; 3]> {
        self.factors.iter().zip(x).map(|(f, &xi)| f.eval(xi)).collect()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.coef * self.factor_values(x).iter().map(|v| v[0]).product::<f64>()
    }

    /// Value, gradient and Laplacian at `x`.
    pub fn jet(&self, x: &[f64]) -> (f64, Vec<f64>, f64) {
        let fv = self.factor_values(x);
        let dim = fv.len();
        let prod_except = |skip: usize, order: usize| -> f64 {
            (0..dim).map(|a| if a == skip { fv[a][order] } else { fv[a][0] }).product()
        };
        let value = self.coef * fv.iter().map(|v| v[0]).product::<f64>();
        let grad = (0..dim).map(|a| self.coef * prod_except(a, 1)).collect();
        let lap = self.coef * (0..dim).map(|a| prod_except(a, 2)).sum::<f64>();
        (value, grad, lap)
    }

    /// Projection onto every mode of `basis` by one-dimensional quadrature.
    pub fn project(&self, basis: &Basis) -> Vec<f64> {
        let dom = basis.domain();
        let tables: Vec<Vec<f64>> = (0..dom.dim())
            .map(|a| {
                let len = dom.extent(a);
                let m = basis.cutoff()[a];
                let rule = GaussRule::new(points_for_wavenumber(4 * m) + 96, len);
                let par = basis.parities()[a];
                let vals: Vec<f64> = rule.nodes.iter().map(|&x| self.factors[a].eval(x)[0]).collect();
                (0..=m)
                    .map(|k| {
                        rule.nodes
                            .iter()
                            .zip(&rule.weights)
                            .zip(&vals)
                            .map(|((&x, &w), &v)| w * v * trig::eval(par, k, len, x)[0])
                            .sum()
                    })
                    .collect()
            })
            .collect();
        basis
            .modes()
            .iter()
            .map(|md| self.coef * md.k.iter().enumerate().map(|(a, &k)| tables[a][k]).product::<f64>())
            .collect()
    }
}

/// Scalar time factor with a closed-form derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Envelope {
    Const,
    /// `exp(rate t)`
    Exp {
        rate: f64,
    },
    /// `sin(omega t + phase)`
    Sine {
        omega: f64,
        phase: f64,
    },
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Envelope::Const => 1.0,
            Envelope::Exp { rate } => (rate * t).exp(),
            Envelope::Sine { omega, phase } => (omega * t + phase).sin(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Envelope::Const => 0.0,
            Envelope::Exp { rate } => rate * (rate * t).exp(),
            Envelope::Sine { omega, phase } => omega * (omega * t + phase).cos(),
        }
    }
}

/// `envelope(t) * shape(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub envelope: Envelope,
    pub shape: Separable,
}

/// Closed-form state: a sum of terms per component `p, v_1, .., v_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticState {
    pub dim: usize,
    pub components: Vec<Vec<Term>>,
}

impl AnalyticState {
    pub fn zero(dim: usize) -> Self {
        Self { dim, components: vec![Vec::new(); dim + 1] }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.iter().all(|t| t.shape.coef == 0.0))
    }

    pub fn push(&mut self, component: usize, envelope: Envelope, shape: Separable) {
        self.components[component].push(Term { envelope, shape });
    }

    pub fn extend(&mut self, other: &AnalyticState) {
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            a.extend(b.iter().cloned());
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in out.components.iter_mut().flatten() {
            t.shape.coef *= s;
        }
        out
    }

    /// Same shapes with every envelope replaced.
    pub fn with_envelope(&self, envelope: Envelope) -> Self {
        let mut out = self.clone();
        for t in out.components.iter_mut().flatten() {
            t.envelope = envelope;
        }
        out
    }

    pub fn value(&self, component: usize, t: f64, x: &[f64]) -> f64 {
        self.components[component].iter().map(|term| term.envelope.value(t) * term.shape.value(x)).sum()
    }

    pub fn time_derivative(&self, component: usize, t: f64, x: &[f64]) -> f64 {
        self.components[component].iter().map(|term| term.envelope.derivative(t) * term.shape.value(x)).sum()
    }

    /// Value, gradient and Laplacian of one component.
    pub fn jet(&self, component: usize, t: f64, x: &[f64]) -> (f64, Vec<f64>, f64) {
        let mut v = 0.0;
        let mut g = vec![0.0; self.dim];
        let mut l = 0.0;
        for term in &self.components[component] {
            let e = term.envelope.value(t);
            let (tv, tg, tl) = term.shape.jet(x);
            v += e * tv;
            for (a, b) in g.iter_mut().zip(&tg) {
                *a += e * b;
            }
            l += e * tl;
        }
        (v, g, l)
    }

    /// Mode projections of every term, for fast evaluation at any time.
    pub fn projected(&self, space: &Arc<Space>) -> Result<ProjectedAnalytic> {
        self.check_dim(space.dim())?;
        let terms = self
            .components
            .iter()
            .enumerate()
            .map(|(c, terms)| terms.iter().map(|t| (t.envelope, t.shape.project(space.basis(c)))).collect())
            .collect();
        Ok(ProjectedAnalytic { space: space.clone(), terms })
    }

    /// Grid samples of every term, for fast evaluation at any time.
    pub fn sampled(&self, grid: &QuadGrid) -> Result<SampledAnalytic> {
        self.check_dim(grid.domain().dim())?;
        let points = grid.points();
        let dim = self.dim;
        let mut terms = Vec::new();
        for (c, comp) in self.components.iter().enumerate() {
            for t in comp {
                let mut gs = GridState::zeros(dim + 1, dim, points.len());
                for (i, x) in points.iter().enumerate() {
                    let (v, g, _) = t.shape.jet(x);
                    gs.values[c][i] = v;
                    for a in 0..dim {
                        gs.grads[c][a][i] = g[a];
                    }
                }
                terms.push((t.envelope, gs));
            }
        }
        Ok(SampledAnalytic { components: dim + 1, dim, points: points.len(), terms })
    }

    /// Terms grouped by envelope; each group carries shapes with a constant
    /// envelope.
    pub fn groups(&self) -> Vec<(Envelope, AnalyticState)> {
        let mut out: Vec<(Envelope, AnalyticState)> = Vec::new();
        for (c, comp) in self.components.iter().enumerate() {
            for t in comp {
                let pos = match out.iter().position(|(e, _)| *e == t.envelope) {
                    Some(p) => p,
                    None => {
                        out.push((t.envelope, AnalyticState::zero(self.dim)));
                        out.len() - 1
                    }
                };
                out[pos].1.push(c, Envelope::Const, t.shape.clone());
            }
        }
        out
    }

    /// Per-envelope projections of the skew image `(div v, grad p)`.
    pub fn skew_image(&self, space: &Arc<Space>) -> Result<Vec<(Envelope, StateU)>> {
        self.check_dim(space.dim())?;
        let grid = projection_grid(space)?;
        let points = grid.points();
        let dim = self.dim;
        let mut out = Vec::new();
        for (env, group) in self.groups() {
            let mut samples = vec![vec![0.0; points.len()]; dim + 1];
            for (i, x) in points.iter().enumerate() {
                let (_, gp, _) = group.jet(0, 0.0, x);
                for j in 0..dim {
                    samples[1 + j][i] = gp[j];
                    let (_, gv, _) = group.jet(1 + j, 0.0, x);
                    samples[0][i] += gv[j];
                }
            }
            out.push((env, project_samples(space, &grid, &samples)?));
        }
        Ok(out)
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim != dim || self.components.len() != dim + 1 {
            return Err(Error::SizeMismatch(format!(
                "analytic field of dimension {} used in dimension {dim}",
                self.dim
            )));
        }
        Ok(())
    }
}

/// Gauss grid that resolves products of retained modes with smooth
/// closed-form fields.
pub fn projection_grid(space: &Space) -> Result<QuadGrid> {
    let pts: Vec<usize> = space.cutoff().iter().map(|&m| points_for_wavenumber(4 * m) + 32).collect();
    QuadGrid::new(space.domain(), space.cutoff(), &pts)
}

/// Quadrature projection of per-component grid samples onto the space.
pub fn project_samples(space: &Arc<Space>, grid: &QuadGrid, samples: &[Vec<f64>]) -> Result<StateU> {
    let mut out = StateU::zeros(space);
    for c in 0..space.components() {
        let coef = grid.analyze(space.basis(c), &samples[c])?;
        out.component_mut(c).copy_from_slice(&coef);
    }
    Ok(out)
}

/// Mode coefficients of each term of an [`AnalyticState`].
#[derive(Debug, Clone)]
pub struct ProjectedAnalytic {
    space: Arc<Space>,
    terms: Vec<Vec<(Envelope, Vec<f64>)>>,
}

impl ProjectedAnalytic {
    fn combine(&self, weight: impl Fn(&Envelope) -> f64) -> StateU {
        let mut out = StateU::zeros(&self.space);
        for (c, terms) in self.terms.iter().enumerate() {
            let dst = out.component_mut(c);
            for (env, coef) in terms {
                let w = weight(env);
                for (d, s) in dst.iter_mut().zip(coef) {
                    *d += w * s;
                }
            }
        }
        out
    }

    /// Projection at time `t`.
    pub fn at(&self, t: f64) -> StateU {
        self.combine(|e| e.value(t))
    }

    /// Projection of the time derivative at `t`.
    pub fn derivative_at(&self, t: f64) -> StateU {
        self.combine(|e| e.derivative(t))
    }
}

/// Grid values and gradients of each term of an [`AnalyticState`].
#[derive(Debug, Clone)]
pub struct SampledAnalytic {
    components: usize,
    dim: usize,
    points: usize,
    terms: Vec<(Envelope, GridState)>,
}

impl SampledAnalytic {
    pub fn at(&self, t: f64) -> GridState {
        let mut gs = GridState::zeros(self.components, self.dim, self.points);
        for (env, term) in &self.terms {
            gs.axpy(env.value(t), term);
        }
        gs
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_basis, BasisKind, BoxDomain};
    use std::f64::consts::PI;

    #[test]
    fn profile_derivatives_match_finite_differences() {
        let profiles = [
            Profile::Sin(1.3),
            Profile::Cos(2.0),
            Profile::Sinh { kappa: 1.7, anchor: 0.4 },
            Profile::Cosh { kappa: 0.9, anchor: 2.0 },
            Profile::Poly2 { a: 0.3, b: -1.0, c: 2.0 },
            Profile::SinRatio { w: 1.0, b: 3.0 },
            Profile::CosRatio { w: 2.0, b: 4.0 },
        ];
        let h = 1e-4;
        for p in profiles {
            for &x in &[0.1, 0.77, 2.3] {
                let [_, d1, d2] = p.eval(x);
                let (fp, f0, fm) = (p.eval(x + h)[0], p.eval(x)[0], p.eval(x - h)[0]);
                assert!((d1 - (fp - fm) / (2.0 * h)).abs() < 1e-6, "{p:?}");
                assert!((d2 - (fp - 2.0 * f0 + fm) / (h * h)).abs() < 1e-5, "{p:?}");
            }
        }
    }

    #[test]
    fn projection_of_a_mode_is_a_unit_vector() {
        let d = BoxDomain::new(vec![PI, 2.0]).unwrap();
        let b = build_basis(&d, BasisKind::DirichletScalar, &[4, 4]).unwrap();
        let norm = trig::norm_const(trig::Parity::Sin, 2, PI) * trig::norm_const(trig::Parity::Sin, 3, 2.0);
        let s = Separable::new(norm, vec![Profile::Sin(2.0), Profile::Sin(3.0 * PI / 2.0)]);
        let c = s.project(&b);
        let pos = b.position(&[2, 3]).unwrap();
        for (i, x) in c.iter().enumerate() {
            let expect = if i == pos { 1.0 } else { 0.0 };
            assert!((x - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn envelopes_differentiate() {
        for e in [Envelope::Const, Envelope::Exp { rate: -1.5 }, Envelope::Sine { omega: 3.0, phase: 0.2 }] {
            let h = 1e-6;
            let fd = (e.value(0.4 + h) - e.value(0.4 - h)) / (2.0 * h);
            assert!((fd - e.derivative(0.4)).abs() < 1e-8);
        }
    }
}
