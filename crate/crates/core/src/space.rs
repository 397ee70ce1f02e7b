//! State spaces for the pressure-velocity pair under one boundary-condition
//! family, and the fields and trajectories that live in them.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{build_basis, Basis, BasisKind, BoxDomain};
use crate::error::{Error, Result};
use crate::quadrature::trapezoid_weights;

/// Boundary-condition family for `(p, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BcFamily {
    /// Dirichlet pressure, Dirichlet velocity.
    DirDir,
    /// Neumann pressure, free-slip (Hodge) velocity.
    NeuHodge,
    /// Neumann pressure, Dirichlet velocity.
    NeuDir,
    /// Dirichlet pressure, free-slip (Hodge) velocity.
    DirHodge,
}

impl BcFamily {
    pub const ALL: [BcFamily; 4] = [BcFamily::DirDir, BcFamily::NeuHodge, BcFamily::NeuDir, BcFamily::DirHodge];

    pub fn name(&self) -> &'static str {
        match self {
            BcFamily::DirDir => "DirDir",
            BcFamily::NeuHodge => "NeuHodge",
            BcFamily::NeuDir => "NeuDir",
            BcFamily::DirHodge => "DirHodge",
        }
    }

    pub fn pressure_kind(&self) -> BasisKind {
        match self {
            BcFamily::DirDir | BcFamily::DirHodge => BasisKind::DirichletScalar,
            BcFamily::NeuHodge | BcFamily::NeuDir => BasisKind::NeumannScalar,
        }
    }

    pub fn velocity_kind(&self, axis: usize) -> BasisKind {
        match self {
            BcFamily::DirDir | BcFamily::NeuDir => BasisKind::DirichletVectorComponent,
            BcFamily::NeuHodge | BcFamily::DirHodge => BasisKind::FreeSlipVectorComponent(axis),
        }
    }

    pub fn is_hodge(&self) -> bool {
        matches!(self, BcFamily::NeuHodge | BcFamily::DirHodge)
    }

    pub fn pressure_is_dirichlet(&self) -> bool {
        matches!(self, BcFamily::DirDir | BcFamily::DirHodge)
    }

    pub fn sigma_range(&self) -> &'static str {
        match self {
            BcFamily::DirDir => "[1/2, 1]",
            BcFamily::NeuDir => "(1/2, 1]",
            BcFamily::NeuHodge | BcFamily::DirHodge => "{1}",
        }
    }

    pub fn admits_sigma(&self, sigma: f64) -> bool {
        const EPS: f64 = 1e-12;
        match self {
            BcFamily::DirDir => (0.5 - EPS..=1.0 + EPS).contains(&sigma),
            BcFamily::NeuDir => sigma > 0.5 + EPS && sigma <= 1.0 + EPS,
            BcFamily::NeuHodge | BcFamily::DirHodge => (sigma - 1.0).abs() <= EPS,
        }
    }
}

impl fmt::Display for BcFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BcFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirdir" | "2a" => Ok(BcFamily::DirDir),
            "neuhodge" | "2b" => Ok(BcFamily::NeuHodge),
            "neudir" | "2c" => Ok(BcFamily::NeuDir),
            "dirhodge" | "2d" => Ok(BcFamily::DirHodge),
            _ => Err(Error::Parameter(format!("unknown boundary family '{s}'"))),
        }
    }
}

/// Discrete state space: bases for `p, v_1, .., v_d` plus the diffusion
/// coefficients that scale their eigenvalues.
#[derive(Debug)]
pub struct Space {
    domain: BoxDomain,
    family: BcFamily,
    cutoff: Vec<usize>,
    zeta: f64,
    mu: f64,
    sigma: f64,
    bases: Vec<Arc<Basis>>,
    offsets: Vec<usize>,
    scaled: Vec<f64>,
}

impl Space {
    pub fn new(
        domain: &BoxDomain,
        family: BcFamily,
        cutoff: &[usize],
        zeta: f64,
        mu: f64,
        sigma: f64,
    ) -> Result<Arc<Self>> {
        for (name, c) in [("zeta", zeta), ("mu", mu)] {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {c}")));
            }
        }
        if !family.admits_sigma(sigma) {
            return Err(Error::SigmaRange { sigma, family: family.name().to_string(), range: family.sigma_range() });
        }
        let dim = domain.dim();
        if family.is_hodge() && dim != 3 {
            return Err(Error::KindNeedsDim3 { kind: family.to_string(), dim });
        }
        let mut bases = vec![Arc::new(build_basis(domain, family.pressure_kind(), cutoff)?)];
        for a in 0..dim {
            bases.push(Arc::new(build_basis(domain, family.velocity_kind(a), cutoff)?));
        }
        let mut offsets = vec![0];
        let mut scaled = Vec::new();
        for (c, b) in bases.iter().enumerate() {
            offsets.push(offsets[c] + b.len());
            let coef = if c == 0 { zeta } else { mu };
            scaled.extend(b.eigenvalues().map(|l| coef * l));
        }
        Ok(Arc::new(Self {
            domain: domain.clone(),
            family,
            cutoff: cutoff.to_vec(),
            zeta,
            mu,
            sigma,
            bases,
            offsets,
            scaled,
        }))
    }

    /// Same bases and coefficients, different `sigma`.
    pub fn with_sigma(&self, sigma: f64) -> Result<Arc<Self>> {
        Self::new(&self.domain, self.family, &self.cutoff, self.zeta, self.mu, sigma)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn family(&self) -> BcFamily {
        self.family
    }

    pub fn cutoff(&self) -> &[usize] {
        &self.cutoff
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of components, `1 + d`.
    pub fn components(&self) -> usize {
        self.bases.len()
    }

    pub fn basis(&self, component: usize) -> &Arc<Basis> {
        &self.bases[component]
    }

    pub fn bases(&self) -> &[Arc<Basis>] {
        &self.bases
    }

    pub fn range(&self, component: usize) -> std::ops::Range<usize> {
        self.offsets[component]..self.offsets[component + 1]
    }

    /// Total number of degrees of freedom.
    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Diffusion coefficient of a component (`zeta` for p, `mu` for v).
    pub fn coefficient(&self, component: usize) -> f64 {
        if component == 0 {
            self.zeta
        } else {
            self.mu
        }
    }

    /// Per-dof eigenvalues of `A`: `zeta * lambda` on p, `mu * lambda` on v.
    pub fn scaled_eigenvalues(&self) -> &[f64] {
        &self.scaled
    }

    /// Smallest eigenvalue of `A`.
    pub fn lambda_min(&self) -> f64 {
        self.scaled.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest eigenvalue of `A`.
    pub fn lambda_max(&self) -> f64 {
        self.scaled.iter().copied().fold(0.0, f64::max)
    }

    pub fn same_as(&self, other: &Space) -> bool {
        std::ptr::eq(self, other)
            || (self.domain == other.domain
                && self.family == other.family
                && self.cutoff == other.cutoff
                && self.zeta == other.zeta
                && self.mu == other.mu)
    }
}

/// Coefficients of one scalar component in its eigenbasis.
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub basis: Arc<Basis>,
    pub coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(basis: Arc<Basis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::SizeMismatch(format!(
                "{} coefficients for a basis of {} modes",
                coeffs.len(),
                basis.len()
            )));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.basis.eval(&self.coeffs, x)
    }
}

/// A state `u = (p, v)` stored as one flat coefficient vector.
#[derive(Debug, Clone)]
pub struct StateU {
    space: Arc<Space>,
    data: Vec<f64>,
}

impl StateU {
    pub fn zeros(space: &Arc<Space>) -> Self {
        Self { space: space.clone(), data: vec![0.0; space.len()] }
    }

    pub fn from_vec(space: &Arc<Space>, data: Vec<f64>) -> Result<Self> {
        if data.len() != space.len() {
            return Err(Error::SizeMismatch(format!("state has {} entries, space has {}", data.len(), space.len())));
        }
        Ok(Self { space: space.clone(), data })
    }

    /// State whose only nonzero entry is `value` on mode `k` of `component`.
    pub fn unit(space: &Arc<Space>, component: usize, k: &[usize], value: f64) -> Result<Self> {
        let pos = space
            .basis(component)
            .position(k)
            .ok_or_else(|| Error::Parameter(format!("mode {k:?} not in component {component}")))?;
        let mut u = Self::zeros(space);
        u.data[space.range(component).start + pos] = value;
        Ok(u)
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.data[self.space.range(c)]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let r = self.space.range(c);
        &mut self.data[r]
    }

    pub fn field(&self, c: usize) -> SpectralField {
        SpectralField { basis: self.space.basis(c).clone(), coeffs: self.component(c).to_vec() }
    }

    pub fn p(&self) -> SpectralField {
        self.field(0)
    }

    pub fn v(&self, axis: usize) -> SpectralField {
        self.field(axis + 1)
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &StateU) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn scaled(&self, a: f64) -> StateU {
        StateU { space: self.space.clone(), data: self.data.iter().map(|x| a * x).collect() }
    }

    /// Euclidean inner product of coefficients (the `L2` pairing).
    pub fn dot(&self, other: &StateU) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// `L2` norm.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn zip_with(&self, other: &StateU, f: impl Fn(f64, f64) -> f64) -> StateU {
        debug_assert!(self.space.same_as(&other.space));
        StateU { space: self.space.clone(), data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect() }
    }
}

impl Add for &StateU {
    type Output = StateU;
    fn add(self, rhs: &StateU) -> StateU {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &StateU {
    type Output = StateU;
    fn sub(self, rhs: &StateU) -> StateU {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &StateU {
    type Output = StateU;
    fn neg(self) -> StateU {
        self.scaled(-1.0)
    }
}

impl Mul<&StateU> for f64 {
    type Output = StateU;
    fn mul(self, rhs: &StateU) -> StateU {
        rhs.scaled(self)
    }
}

/// States sampled on a time grid, optionally with their time derivatives.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateU>,
    derivs: Option<Vec<StateU>>,
    weights: Vec<f64>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<StateU>, derivs: Option<Vec<StateU>>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::Trajectory(format!("{} times for {} states", times.len(), states.len())));
        }
        if times[0] != 0.0 {
            return Err(Error::Trajectory(format!("first time is {}, expected 0", times[0])));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Trajectory("times must be strictly increasing".into()));
        }
        if let Some(d) = &derivs {
            if d.len() != states.len() {
                return Err(Error::Trajectory("derivative count differs from state count".into()));
            }
        }
        let weights = trapezoid_weights(&times);
        Ok(Self { times, states, derivs, weights })
    }

    /// Uniform grid `t_n = n T / steps`.
    pub fn uniform_times(horizon: f64, steps: usize) -> Vec<f64> {
        let mut t: Vec<f64> = (0..=steps).map(|n| horizon * n as f64 / steps as f64).collect();
        t[steps] = horizon;
        t
    }

    /// Samples `f(t)` on a grid.
    pub fn sample(times: &[f64], mut f: impl FnMut(f64) -> StateU) -> Result<Self> {
        let states = times.iter().map(|&t| f(t)).collect();
        Self::new(times.to_vec(), states, None)
    }

    /// The zero trajectory on `times`.
    pub fn zeros(space: &Arc<Space>, times: &[f64]) -> Result<Self> {
        let z = StateU::zeros(space);
        Self::new(times.to_vec(), vec![z.clone(); times.len()], Some(vec![z; times.len()]))
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateU] {
        &self.states
    }

    pub fn derivatives(&self) -> Option<&[StateU]> {
        self.derivs.as_deref()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn space(&self) -> &Arc<Space> {
        self.states[0].space()
    }

    pub fn initial(&self) -> &StateU {
        &self.states[0]
    }

    pub fn last(&self) -> &StateU {
        &self.states[self.states.len() - 1]
    }

    /// Time derivatives: stored ones if present, otherwise second-order
    /// finite differences on the sample grid.
    pub fn time_derivatives(&self) -> Result<Vec<StateU>> {
        if let Some(d) = &self.derivs {
            return Ok(d.clone());
        }
        self.finite_difference_derivatives()
    }

    /// Second-order finite-difference derivatives (one-sided at the ends).
    pub fn finite_difference_derivatives(&self) -> Result<Vec<StateU>> {
        let n = self.len();
        if n < 3 {
            return Err(Error::Trajectory(format!("need at least 3 samples to difference, have {n}")));
        }
        let t = &self.times;
        let u = &self.states;
        let three = |i: usize, j: usize, k: usize, at: usize| {
            // derivative at t[at] of the quadratic through samples i, j, k
            let (a, b, c) = (t[i], t[j], t[k]);
            let x = t[at];
            let wi = ((x - b) + (x - c)) / ((a - b) * (a - c));
            let wj = ((x - a) + (x - c)) / ((b - a) * (b - c));
            let wk = ((x - a) + (x - b)) / ((c - a) * (c - b));
            let mut d = u[i].scaled(wi);
            d.axpy(wj, &u[j]);
            d.axpy(wk, &u[k]);
            d
        };
        let mut out = Vec::with_capacity(n);
        out.push(three(0, 1, 2, 0));
        for i in 1..n - 1 {
            out.push(three(i - 1, i, i + 1, i));
        }
        out.push(three(n - 3, n - 2, n - 1, n - 1));
        Ok(out)
    }

    /// Linear interpolation in time (clamped to the horizon).
    pub fn interpolate(&self, t: f64) -> StateU {
        let n = self.len();
        if n == 1 || t <= self.times[0] {
            return self.states[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.states[n - 1].clone();
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        if self.times[i] == t {
            return self.states[i].clone();
        }
        let th = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        let mut s = self.states[i].scaled(1.0 - th);
        s.axpy(th, &self.states[i + 1]);
        s
    }

    /// Pointwise sum with an aligned trajectory.
    pub fn add(&self, other: &Trajectory) -> Result<Trajectory> {
        self.check_aligned(other)?;
        let states = self.states.iter().zip(&other.states).map(|(a, b)| a + b).collect();
        let derivs = match (&self.derivs, &other.derivs) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x + y).collect()),
            _ => None,
        };
        Trajectory::new(self.times.clone(), states, derivs)
    }

    /// `self + a * other`, with derivatives combined when both exist.
    pub fn axpy(&self, a: f64, other: &Trajectory) -> Result<Trajectory> {
        self.check_aligned(other)?;
        let comb = |x: &StateU, y: &StateU| {
            let mut s = x.clone();
            s.axpy(a, y);
            s
        };
        let states = self.states.iter().zip(&other.states).map(|(x, y)| comb(x, y)).collect();
        let derivs = match (&self.derivs, &other.derivs) {
            (Some(p), Some(q)) => Some(p.iter().zip(q).map(|(x, y)| comb(x, y)).collect()),
            _ => None,
        };
        Trajectory::new(self.times.clone(), states, derivs)
    }

    pub fn scaled(&self, a: f64) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            states: self.states.iter().map(|s| s.scaled(a)).collect(),
            derivs: self.derivs.as_ref().map(|d| d.iter().map(|s| s.scaled(a)).collect()),
            weights: self.weights.clone(),
        }
    }

    pub fn without_derivatives(&self) -> Trajectory {
        Trajectory { derivs: None, ..self.clone() }
    }

    pub fn check_aligned(&self, other: &Trajectory) -> Result<()> {
        let aligned = self.times.len() == other.times.len()
            && self.times.iter().zip(&other.times).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        if aligned {
            Ok(())
        } else {
            Err(Error::Trajectory("time grids are not aligned".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(family: BcFamily, dim: usize, sigma: f64) -> Result<Arc<Space>> {
        let d = BoxDomain::pi_box(dim)?;
        Space::new(&d, family, &vec![3; dim], 0.5, 2.0, sigma)
    }

    #[test]
    fn sigma_ranges_are_enforced() {
        assert!(space(BcFamily::DirDir, 2, 0.5).is_ok());
        assert!(space(BcFamily::NeuDir, 2, 0.5).is_err());
        assert!(space(BcFamily::NeuDir, 2, 0.75).is_ok());
        assert!(space(BcFamily::NeuHodge, 3, 0.75).is_err());
        assert!(space(BcFamily::DirHodge, 3, 1.0).is_ok());
        assert!(matches!(space(BcFamily::NeuHodge, 2, 1.0), Err(Error::KindNeedsDim3 { .. })));
    }

    #[test]
    fn layout_and_scaling() {
        let s = space(BcFamily::NeuDir, 2, 1.0).unwrap();
        assert_eq!(s.components(), 3);
        assert_eq!(s.range(0).len(), 15);
        assert_eq!(s.range(1).len(), 9);
        assert_eq!(s.len(), 33);
        assert_eq!(s.scaled_eigenvalues()[0], 0.5);
        assert_eq!(s.scaled_eigenvalues()[15], 4.0);
        assert_eq!(s.lambda_min(), 0.5);
    }

    #[test]
    fn family_names_round_trip() {
        for f in BcFamily::ALL {
            assert_eq!(f.name().parse::<BcFamily>().unwrap(), f);
        }
        assert!("robin".parse::<BcFamily>().is_err());
    }

    #[test]
    fn finite_differences_are_exact_for_quadratics() {
        let s = space(BcFamily::DirDir, 2, 1.0).unwrap();
        let e = StateU::unit(&s, 0, &[1, 1], 1.0).unwrap();
        let times = vec![0.0, 0.1, 0.25, 0.3, 0.6];
        let tr = Trajectory::sample(&times, |t| e.scaled(t * t - 2.0 * t)).unwrap();
        let d = tr.time_derivatives().unwrap();
        for (t, di) in times.iter().zip(&d) {
            assert!((di.data()[0] - (2.0 * t - 2.0)).abs() < 1e-12);
        }
        let mid = tr.interpolate(0.2);
        let expect = -0.19 / 3.0 + 2.0 / 3.0 * -0.4375;
        assert!((mid.data()[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn trajectory_validation() {
        let s = space(BcFamily::DirDir, 2, 1.0).unwrap();
        let z = StateU::zeros(&s);
        assert!(Trajectory::new(vec![0.1, 0.2], vec![z.clone(), z.clone()], None).is_err());
        assert!(Trajectory::new(vec![0.0, 0.0], vec![z.clone(), z.clone()], None).is_err());
        let tr = Trajectory::new(vec![0.0, 0.5, 1.0], vec![z.clone(); 3], None).unwrap();
        assert_eq!(tr.weights(), &[0.25, 0.5, 0.25]);
    }
}
