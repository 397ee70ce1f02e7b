//! Independent oracles and drivers: a dense Galerkin system assembled from
//! quadrature and exact triple integrals and integrated with an adaptive
//! Dormand-Prince scheme, manufactured solutions, and convergence tables.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::analytic::{project_samples, projection_grid, AnalyticState, Envelope, Profile, Separable};
use crate::basis::{Basis, BoxDomain};
use crate::error::{Error, Result};
use crate::evolution::Forcing;
use crate::grid::QuadGrid;
use crate::lifting::{harmonic_extension, BoundaryData, FaceMode, Lift};
use crate::newton::NonlinearProblem;
use crate::operators::{NonlinearCoefficients, OperatorSet};
use crate::quadrature::GaussRule;
use crate::space::{BcFamily, Space, StateU, Trajectory};
use crate::tensor::Mat;
use crate::trig::{self, Factor, Parity};

/// Settings of the oracle drivers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleConfig {
    /// Quadrature points per retained mode and axis.
    pub resolution_multiplier: usize,
    /// Local error tolerance of the reference integrator.
    pub tolerance: f64,
    pub seed: u64,
    pub cutoffs: Vec<usize>,
    pub sigmas: Vec<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            resolution_multiplier: 8,
            tolerance: 1e-12,
            seed: 0,
            cutoffs: vec![4, 8, 16],
            sigmas: vec![0.5, 0.75, 1.0],
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution_multiplier < 4 {
            return Err(Error::Parameter("resolution multiplier must be at least 4".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Parameter("oracle tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Fully assembled Galerkin system `c' = -L c - B(c, c) + f`.
#[derive(Debug, Clone)]
pub struct DenseSystem {
    space: Arc<Space>,
    /// Diffusion block `<grad phi_i, grad phi_j>` scaled per component.
    pub diffusion: Mat,
    /// Skew coupling between pressure and velocity.
    pub skew: Mat,
    /// Nonzero entries `(out, u, z, value)` of `<B[phi_u, phi_z], phi_out>`.
    pub bilinear: Vec<(usize, usize, usize, f64)>,
}

struct ModeRef {
    component: usize,
    k: Vec<usize>,
    parities: Vec<Parity>,
}

fn mode_list(space: &Space) -> Vec<ModeRef> {
    let mut out = Vec::with_capacity(space.len());
    for c in 0..space.components() {
        let b = space.basis(c);
        for m in b.modes() {
            out.push(ModeRef { component: c, k: m.k.clone(), parities: b.parities().to_vec() });
        }
    }
    out
}

/// Assemble the dense system by Gauss quadrature of the one-dimensional
/// functions (linear part) and exact triple integrals (quadratic part).
pub fn assemble_dense(space: &Arc<Space>, coeffs: NonlinearCoefficients, resolution_multiplier: usize) -> DenseSystem {
    let n = space.len();
    let dim = space.dim();
    let modes = mode_list(space);
    let rules: Vec<GaussRule> = (0..dim)
        .map(|a| GaussRule::new(resolution_multiplier * (space.cutoff()[a] + 1) + 16, space.domain().extent(a)))
        .collect();
    // int phi_a^(da) phi_b^(db) along one axis
    let quad = |a: usize, pa: Parity, ka: usize, da: usize, pb: Parity, kb: usize, db: usize| -> f64 {
        let len = space.domain().extent(a);
        rules[a].integrate(|x| trig::eval(pa, ka, len, x)[da] * trig::eval(pb, kb, len, x)[db])
    };
    let mut diffusion = Mat::zeros(n, n);
    let mut skew = Mat::zeros(n, n);
    for (i, mi) in modes.iter().enumerate() {
        for (j, mj) in modes.iter().enumerate() {
            if mi.component == mj.component {
                // <grad phi_i, grad phi_j> times the diffusion coefficient
                let mut stiff = 0.0;
                for ax in 0..dim {
                    stiff += (0..dim)
                        .map(|a| {
                            let d = usize::from(a == ax);
                            quad(a, mi.parities[a], mi.k[a], d, mj.parities[a], mj.k[a], d)
                        })
                        .product::<f64>();
                }
                diffusion.data[i * n + j] = space.coefficient(mi.component) * stiff;
            }
            // skew part: p row couples to d_j v_j, v_j row couples to d_j p
            let deriv_axis = match (mi.component, mj.component) {
                (0, c) if c > 0 => Some(c - 1),
                (c, 0) if c > 0 => Some(c - 1),
                _ => None,
            };
            if let Some(ax) = deriv_axis {
                skew.data[i * n + j] = (0..dim)
                    .map(|a| quad(a, mi.parities[a], mi.k[a], 0, mj.parities[a], mj.k[a], usize::from(a == ax)))
                    .product::<f64>();
            }
        }
    }

    // (out component, u component, derivative axis, z component, coefficient)
    let mut terms = Vec::new();
    for j in 0..dim {
        terms.push((0, 1 + j, j, 0, coeffs.alpha));
        terms.push((0, 0, j, 1 + j, coeffs.beta));
    }
    for c in 0..dim {
        terms.push((1 + c, 0, c, 0, coeffs.gamma));
        for j in 0..dim {
            terms.push((1 + c, 1 + c, j, 1 + j, coeffs.delta));
        }
    }
    let mut bilinear = Vec::new();
    let ranges: Vec<_> = (0..space.components()).map(|c| space.range(c)).collect();
    for &(oc, uc, ax, zc, coef) in &terms {
        if coef == 0.0 {
            continue;
        }
        for i in ranges[oc].clone() {
            for ju in ranges[uc].clone() {
                for kz in ranges[zc].clone() {
                    let (mo, mu, mz) = (&modes[i], &modes[ju], &modes[kz]);
                    let v: f64 = (0..dim)
                        .map(|a| {
                            let len = space.domain().extent(a);
                            let fu = Factor { parity: mu.parities[a], k: mu.k[a], derivative: a == ax };
                            trig::triple(
                                Factor::plain(mo.parities[a], mo.k[a]),
                                fu,
                                Factor::plain(mz.parities[a], mz.k[a]),
                                len,
                            )
                        })
                        .product();
                    if v.abs() > 1e-300 {
                        bilinear.push((i, ju, kz, coef * v));
                    }
                }
            }
        }
    }
    DenseSystem { space: space.clone(), diffusion, skew, bilinear }
}

/// Largest deviations of the quadrature Gram matrix from the identity and of
/// the quadrature stiffness matrix `<grad phi_k, grad phi_j>` from
/// `diag(lambda_k)` for one basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenCheck {
    pub gram_error: f64,
    pub stiffness_error: f64,
    pub modes: usize,
}

pub fn eigen_structure_check(basis: &Basis, resolution_multiplier: usize) -> EigenCheck {
    let domain = basis.domain();
    let dim = domain.dim();
    let parities = basis.parities();
    let cut = basis.cutoff();
    // per-axis tables of <f_k, f_l> and <f_k', f_l'>
    let mut gram = Vec::with_capacity(dim);
    let mut stiff = Vec::with_capacity(dim);
    for a in 0..dim {
        let len = domain.extent(a);
        let rule = GaussRule::new(resolution_multiplier * (cut[a] + 1) + 16, len);
        let m = cut[a] + 1;
        let table = |d: usize| {
            Mat::from_fn(m, m, |k, l| {
                rule.integrate(|x| trig::eval(parities[a], k, len, x)[d] * trig::eval(parities[a], l, len, x)[d])
            })
        };
        gram.push(table(0));
        stiff.push(table(1));
    }
    let modes = basis.modes();
    let mut gram_error: f64 = 0.0;
    let mut stiffness_error: f64 = 0.0;
    for (i, mi) in modes.iter().enumerate() {
        for (j, mj) in modes.iter().enumerate() {
            let mut g = [1.0; 3];
            for a in 0..dim {
                g[a] = gram[a].get(mi.k[a], mj.k[a]);
            }
            let gij: f64 = g[..dim].iter().product();
            let sij: f64 = (0..dim)
                .map(|ax| {
                    (0..dim).map(|a| if a == ax { stiff[a].get(mi.k[a], mj.k[a]) } else { g[a] }).product::<f64>()
                })
                .sum();
            let (ge, se) = if i == j { (1.0, mi.eigenvalue) } else { (0.0, 0.0) };
            gram_error = gram_error.max((gij - ge).abs());
            stiffness_error = stiffness_error.max((sij - se).abs() / (1.0 + se));
        }
    }
    EigenCheck { gram_error, stiffness_error, modes: modes.len() }
}

impl DenseSystem {
    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    /// `B(u, z)` from the dense tensor.
    pub fn apply_bilinear(&self, u: &[f64], z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for &(i, j, k, v) in &self.bilinear {
            out[i] += v * u[j] * z[k];
        }
        out
    }

    /// `-L c - B(c, c) + f` (quadratic part only when `nonlinear`).
    pub fn rhs(&self, c: &[f64], f: &[f64], nonlinear: bool) -> Vec<f64> {
        let n = c.len();
        let mut out: Vec<f64> = f.to_vec();
        for i in 0..n {
            let d = &self.diffusion.data[i * n..(i + 1) * n];
            let s = &self.skew.data[i * n..(i + 1) * n];
            out[i] -= d.iter().zip(s).zip(c).map(|((a, b), x)| (a + b) * x).sum::<f64>();
        }
        if nonlinear {
            for &(i, j, k, v) in &self.bilinear {
                out[i] -= v * c[j] * c[k];
            }
        }
        out
    }
}

// Dormand-Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Adaptive Dormand-Prince integration of `y' = rhs(t, y)`, reporting the
/// state at every requested time.
pub fn dormand_prince(
    mut rhs: impl FnMut(f64, &[f64]) -> Vec<f64>,
    y0: &[f64],
    times: &[f64],
    tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = y0.len();
    let mut out = vec![y0.to_vec()];
    let mut y = y0.to_vec();
    let mut t = times[0];
    let mut h = (times.get(1).copied().unwrap_or(t) - t).max(1e-6);
    for &target in &times[1..] {
        let mut guard = 0usize;
        while t < target {
            guard += 1;
            if guard > 10_000_000 {
                return Err(Error::Parameter("reference integrator failed to reach the output time".into()));
            }
            let step = h.min(target - t);
            let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
            for s in 0..7 {
                let mut ys = y.clone();
                for (p, kp) in k.iter().enumerate() {
                    let a = A[s][p];
                    if a != 0.0 {
                        for (yi, ki) in ys.iter_mut().zip(kp) {
                            *yi += step * a * ki;
                        }
                    }
                }
                k.push(rhs(t + C[s] * step, &ys));
            }
            let mut y5 = y.clone();
            let mut err: f64 = 0.0;
            for i in 0..n {
                let mut d5 = 0.0;
                let mut d4 = 0.0;
                for s in 0..7 {
                    d5 += B5[s] * k[s][i];
                    d4 += B4[s] * k[s][i];
                }
                y5[i] += step * d5;
                let scale = tol * (1.0 + y[i].abs().max(y5[i].abs()));
                err = err.max((step * (d5 - d4)).abs() / scale);
            }
            if !err.is_finite() {
                return Err(Error::BlowUp { time: t, magnitude: f64::INFINITY });
            }
            if err <= 1.0 {
                t = if step == target - t { target } else { t + step };
                y = y5;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = step * factor;
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Reference trajectory of the dense system on the time grid `times`,
/// with derivatives taken from the right-hand side.
pub fn dense_galerkin_oracle(
    sys: &DenseSystem,
    ops: &OperatorSet,
    initial: &StateU,
    forcing: &Forcing,
    times: &[f64],
    nonlinear: bool,
    tol: f64,
) -> Result<Trajectory> {
    let space = sys.space();
    let max_cut = space.cutoff().iter().copied().max().unwrap_or(0);
    if max_cut > 6 {
        return Err(Error::Cutoff(format!("dense oracle is limited to small cutoffs, got {max_cut}")));
    }
    let states = dormand_prince(|t, y| sys.rhs(y, forcing.at(ops, t).data(), nonlinear), initial.data(), times, tol)?;
    let mut us = Vec::with_capacity(states.len());
    let mut ds = Vec::with_capacity(states.len());
    for (t, y) in times.iter().zip(states) {
        let d = sys.rhs(&y, forcing.at(ops, *t).data(), nonlinear);
        us.push(StateU::from_vec(space, y)?);
        ds.push(StateU::from_vec(space, d)?);
    }
    Trajectory::new(times.to_vec(), us, Some(ds))
}

/// Spatial profile of a manufactured solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MmsShape {
    /// A single low eigenmode per component (exactly representable).
    Modal,
    /// Smooth non-polynomial profiles with infinitely many active modes;
    /// `b > 1` controls the geometric decay of their coefficients.
    Analytic { b: f64 },
}

/// Closed-form solution `u(t, x) = exp(rate t) (U(x) + H(x))` where `U`
/// satisfies homogeneous boundary conditions and `H` is the harmonic lift
/// of the boundary data.
#[derive(Debug, Clone)]
pub struct ManufacturedSolution {
    pub family: BcFamily,
    pub domain: BoxDomain,
    pub rate: f64,
    /// `U` with a constant envelope.
    pub interior: AnalyticState,
    pub boundary: BoundaryData,
    pub lift: Lift,
}

fn interior_profile(parity: Parity, shape: MmsShape, k: usize, len: f64) -> Profile {
    let w = std::f64::consts::PI / len;
    match (shape, parity) {
        (MmsShape::Modal, Parity::Sin) => Profile::Sin(k as f64 * w),
        (MmsShape::Modal, Parity::Cos) => Profile::Cos(k as f64 * w),
        (MmsShape::Analytic { b }, Parity::Sin) => Profile::SinRatio { w, b },
        (MmsShape::Analytic { b }, Parity::Cos) => Profile::CosRatio { w, b },
    }
}

/// Boundary data exercised by the nonhomogeneous manufactured solutions:
/// one pressure face mode per family (plus a constant-flux mode for
/// Neumann pressure) and one velocity face mode where velocity data are
/// supported.
pub fn sample_boundary_data(family: BcFamily, dim: usize, amplitude: f64, envelope: Envelope) -> BoundaryData {
    let tangential = |axis: usize| (0..dim).map(|i| usize::from(i != axis)).collect::<Vec<_>>();
    let mut modes =
        vec![FaceMode { component: 0, axis: dim - 1, side: 0, k: tangential(dim - 1), amplitude, envelope }];
    if !family.pressure_is_dirichlet() {
        modes.push(FaceMode { component: 0, axis: 0, side: 1, k: vec![0; dim], amplitude: 0.5 * amplitude, envelope });
    }
    if !family.is_hodge() {
        modes.push(FaceMode {
            component: 1,
            axis: 0,
            side: 1,
            k: tangential(0),
            amplitude: -0.7 * amplitude,
            envelope,
        });
    }
    BoundaryData { modes }
}

/// Build a manufactured solution for a family on a box. With
/// `boundary_amplitude = 0` the boundary data vanish.
pub fn manufactured_solution(
    family: BcFamily,
    domain: &BoxDomain,
    shape: MmsShape,
    amplitude: f64,
    boundary_amplitude: f64,
    rate: f64,
) -> Result<ManufacturedSolution> {
    let dim = domain.dim();
    if let MmsShape::Analytic { b } = shape {
        if !(b > 1.0) {
            return Err(Error::Parameter(format!("analytic profile parameter must exceed 1, got {b}")));
        }
    }
    if family.is_hodge() && dim != 3 {
        return Err(Error::KindNeedsDim3 { kind: family.velocity_kind(0).to_string(), dim });
    }
    let mut interior = AnalyticState::zero(dim);
    for c in 0..=dim {
        let kind = if c == 0 { family.pressure_kind() } else { family.velocity_kind(c - 1) };
        let parities = kind.parities(dim);
        let factors: Vec<Profile> =
            (0..dim).map(|a| interior_profile(parities[a], shape, 1 + (c + a) % 2, domain.extent(a))).collect();
        let coef = amplitude / (1.0 + c as f64);
        interior.push(c, Envelope::Const, Separable::new(coef, factors));
        if let (MmsShape::Analytic { b }, Parity::Cos) = (shape, parities[0]) {
            if parities.iter().all(|&p| p == Parity::Cos) {
                // remove the mean so the field lies in the Neumann space
                let mean = (b * b - 1.0).sqrt().recip().powi(dim as i32);
                interior.push(c, Envelope::Const, Separable::new(-coef * mean, vec![Profile::constant(1.0); dim]));
            }
        }
    }
    let boundary = if boundary_amplitude == 0.0 {
        BoundaryData::default()
    } else {
        sample_boundary_data(family, dim, boundary_amplitude, Envelope::Exp { rate })
    };
    let lift = harmonic_extension(&boundary, family, domain)?;
    Ok(ManufacturedSolution { family, domain: domain.clone(), rate, interior, boundary, lift })
}

impl ManufacturedSolution {
    /// Spatial profile `V = U + H`.
    pub fn profile(&self) -> AnalyticState {
        let mut v = self.interior.clone();
        v.extend(&self.lift.field.with_envelope(Envelope::Const));
        v
    }

    /// Full solution with its time envelope.
    pub fn exact(&self) -> AnalyticState {
        self.profile().with_envelope(Envelope::Exp { rate: self.rate })
    }

    /// Forcing that makes [`Self::exact`] a solution, projected onto the
    /// space: a linear part growing like `exp(rate t)` and a quadratic part
    /// growing like `exp(2 rate t)`.
    pub fn forcing(&self, ops: &OperatorSet) -> Result<Forcing> {
        let space = ops.space();
        let dim = space.dim();
        let grid = projection_grid(space)?;
        let v = self.profile();
        let coeffs = ops.coefficients();
        let pts = grid.points();
        let mut lin = vec![vec![0.0; pts.len()]; dim + 1];
        let mut quad = vec![vec![0.0; pts.len()]; dim + 1];
        for (i, x) in pts.iter().enumerate() {
            let jets: Vec<(f64, Vec<f64>, f64)> = (0..=dim).map(|c| v.jet(c, 0.0, x)).collect();
            let div: f64 = (0..dim).map(|j| jets[1 + j].1[j]).sum();
            lin[0][i] = self.rate * jets[0].0 - space.coefficient(0) * jets[0].2 + div;
            let w_grad_p: f64 = (0..dim).map(|j| jets[1 + j].0 * jets[0].1[j]).sum();
            quad[0][i] = coeffs.alpha * jets[0].0 * div + coeffs.beta * w_grad_p;
            for c in 0..dim {
                let jc = &jets[1 + c];
                lin[1 + c][i] = self.rate * jc.0 - space.coefficient(1 + c) * jc.2 + jets[0].1[c];
                let conv: f64 = (0..dim).map(|j| jets[1 + j].0 * jc.1[j]).sum();
                quad[1 + c][i] = coeffs.gamma * jets[0].0 * jets[0].1[c] + coeffs.delta * conv;
            }
        }
        Ok(Forcing::Modal(vec![
            (Envelope::Exp { rate: self.rate }, project_samples(space, &grid, &lin)?),
            (Envelope::Exp { rate: 2.0 * self.rate }, project_samples(space, &grid, &quad)?),
        ]))
    }

    /// Projection of `U` onto the space (the initial value of `w = u - h`).
    pub fn initial_minus_lift(&self, space: &Arc<Space>) -> Result<StateU> {
        Ok(self.interior.projected(space)?.at(0.0))
    }

    /// Nonlinear problem for `w = u - h` with the manufactured forcing.
    pub fn problem<'a>(&self, ops: &'a OperatorSet, horizon: f64, dt: f64) -> Result<NonlinearProblem<'a>> {
        let space = ops.space();
        let f = self.forcing(ops)?;
        let w0 = self.initial_minus_lift(space)?;
        if self.lift.is_zero() {
            Ok(NonlinearProblem::homogeneous(ops, f, w0, horizon, dt))
        } else {
            NonlinearProblem::direct(ops, f, w0, &self.lift, horizon, dt)
        }
    }

    /// Exact `w(t) = exp(rate t) P U` on a time grid, with derivatives.
    pub fn projected_trajectory(&self, space: &Arc<Space>, times: &[f64]) -> Result<Trajectory> {
        let pu = self.initial_minus_lift(space)?;
        let states = times.iter().map(|&t| pu.scaled((self.rate * t).exp())).collect();
        let derivs = times.iter().map(|&t| pu.scaled(self.rate * (self.rate * t).exp())).collect();
        Trajectory::new(times.to_vec(), states, Some(derivs))
    }

    /// `L2` error of a spectral state against `exp(rate t) U` at time `t`,
    /// measured on a fine Gauss grid independent of the cutoff.
    pub fn l2_error(&self, state: &StateU, t: f64, points_per_axis: usize) -> Result<f64> {
        let space = state.space();
        let dim = space.dim();
        let grid = QuadGrid::new(space.domain(), space.cutoff(), &vec![points_per_axis; dim])?;
        let pts = grid.points();
        let scale = (self.rate * t).exp();
        let mut total = 0.0;
        for c in 0..=dim {
            let num = grid.synthesize(space.basis(c), state.component(c), None)?;
            let diff: Vec<f64> =
                pts.iter().zip(&num).map(|(x, n)| (n - scale * self.interior.value(c, 0.0, x)).powi(2)).collect();
            total += grid.integrate(&diff);
        }
        Ok(total.sqrt())
    }
}

/// Errors against a refinement parameter with observed rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    /// Name of the refined parameter (`dt` or `cutoff`).
    pub parameter: String,
    pub levels: Vec<f64>,
    pub errors: Vec<f64>,
    /// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` between consecutive levels.
    pub pairwise_rates: Vec<f64>,
    /// Error reduction factors `e_i / e_{i+1}`.
    pub reductions: Vec<f64>,
    /// Least-squares slope of `log e` against `log h`.
    pub fitted_rate: f64,
    /// Errors decrease strictly along the refinement.
    pub monotone: bool,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Build a rate table from refinement levels and measured errors. Levels
/// are ordered from coarse to fine; for time steps the rate is positive
/// when errors decrease with `h`.
pub fn rate_table(parameter: &str, levels: &[f64], errors: &[f64]) -> Result<RateTable> {
    if levels.len() != errors.len() || levels.len() < 3 {
        return Err(Error::Parameter("a convergence study needs at least three levels with one error each".into()));
    }
    if errors.iter().any(|e| !(e.is_finite() && *e > 0.0)) || levels.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Parameter(format!("levels and errors must be positive, got {levels:?} / {errors:?}")));
    }
    let pairwise_rates =
        levels.windows(2).zip(errors.windows(2)).map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln()).collect();
    let reductions = errors.windows(2).map(|e| e[0] / e[1]).collect();
    Ok(RateTable {
        parameter: parameter.to_string(),
        levels: levels.to_vec(),
        errors: errors.to_vec(),
        pairwise_rates,
        reductions,
        fitted_rate: log_log_slope(levels, errors),
        monotone: errors.windows(2).all(|e| e[1] < e[0]),
    })
}

/// Run `solve` at each level and tabulate the errors.
pub fn convergence_study(
    parameter: &str,
    levels: &[f64],
    mut solve: impl FnMut(f64) -> Result<f64>,
) -> Result<RateTable> {
    let errors = levels.iter().map(|&l| solve(l)).collect::<Result<Vec<_>>>()?;
    rate_table(parameter, levels, &errors)
}

/// CSV rendering: `level,error,pairwise_rate,reduction`.
pub fn rate_table_csv(table: &RateTable) -> String {
    let mut s = format!("{},error,pairwise_rate,reduction\n", table.parameter);
    for (i, (l, e)) in table.levels.iter().zip(&table.errors).enumerate() {
        let (r, q) = if i == 0 {
            (String::new(), String::new())
        } else {
            (format!("{:.6e}", table.pairwise_rates[i - 1]), format!("{:.6e}", table.reductions[i - 1]))
        };
        let _ = writeln!(s, "{l:.6e},{e:.6e},{r},{q}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pi_box(dim: usize) -> BoxDomain {
        BoxDomain::pi_box(dim).unwrap()
    }
    use crate::evolution::{integrate, LinearProblem};
    use crate::newton::{newton_solve, NewtonSettings};
    use crate::operators::Dealiasing;
    use crate::sampling::{random_state, rng};

    fn ops(family: BcFamily, dim: usize, m: usize) -> OperatorSet {
        let space = Space::new(&pi_box(dim), family, &vec![m; dim], 0.7, 0.4, 1.0).unwrap();
        OperatorSet::new(&space, NonlinearCoefficients::default(), Dealiasing::ThreeHalves).unwrap()
    }

    #[test]
    fn dense_operators_agree_with_production_ones() {
        for (family, dim) in
            [(BcFamily::DirDir, 2), (BcFamily::NeuDir, 2), (BcFamily::DirHodge, 3), (BcFamily::NeuHodge, 3)]
        {
            let o = ops(family, dim, 3);
            let sys = assemble_dense(o.space(), o.coefficients(), 6);
            let mut r = rng(11);
            let u = random_state(o.space(), &mut r);
            let z = random_state(o.space(), &mut r);
            let dense = sys.apply_bilinear(u.data(), z.data());
            let prod = o.apply_bilinear(&u, &z).unwrap();
            let err = dense.iter().zip(prod.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{family}: bilinear mismatch {err}");
            let lin = sys.rhs(u.data(), &vec![0.0; u.data().len()], false);
            let expect = &o.apply_diffusion(&u) + &o.apply_skew(&u);
            let err = lin.iter().zip(expect.data()).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{family}: linear mismatch {err}");
        }
    }

    #[test]
    fn eigen_structure_holds_for_every_family() {
        for family in BcFamily::ALL {
            let o = ops(family, 3, 5);
            for c in 0..4 {
                let e = eigen_structure_check(o.space().basis(c), 4);
                assert!(e.gram_error < 1e-12 && e.stiffness_error < 1e-12, "{family} {c}: {e:?}");
            }
        }
    }

    #[test]
    fn oracle_without_coupling_reproduces_diagonal_decay() {
        let o = ops(BcFamily::DirDir, 2, 3);
        let mut sys = assemble_dense(o.space(), o.coefficients(), 6);
        sys.skew = Mat::zeros(o.space().len(), o.space().len());
        let g = StateU::unit(o.space(), 0, &[2, 1], 1.0).unwrap();
        let times = [0.0, 0.25, 0.5];
        let traj = dense_galerkin_oracle(&sys, &o, &g, &Forcing::Zero, &times, false, 1e-12).unwrap();
        let idx = o.space().basis(0).position(&[2, 1]).unwrap();
        for (t, u) in times.iter().zip(traj.states()) {
            let exact = (-0.7 * 5.0 * t).exp();
            assert!((u.data()[idx] - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn dormand_prince_matches_exponential() {
        let times = [0.0, 0.5, 1.0, 2.0];
        let out = dormand_prince(|_, y| vec![-y[0], y[0] - 2.0 * y[1]], &[1.0, 0.0], &times, 1e-12).unwrap();
        for (t, y) in times.iter().zip(&out) {
            let a = (-t).exp();
            // y1' = y0 - 2 y1, y1(0) = 0  =>  y1 = e^-t - e^-2t
            let b = (-t).exp() - (-2.0 * t).exp();
            assert!((y[0] - a).abs() < 1e-10 && (y[1] - b).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_evolution_matches_dense_oracle_at_second_order() {
        let o = ops(BcFamily::DirDir, 2, 3);
        let sys = assemble_dense(o.space(), o.coefficients(), 6);
        let mut r = rng(5);
        let g = random_state(o.space(), &mut r);
        let f = Forcing::Modal(vec![(Envelope::Sine { omega: 2.0, phase: 0.3 }, random_state(o.space(), &mut r))]);
        let mut errs = Vec::new();
        for dt in [0.02, 0.01, 0.005] {
            let prob = LinearProblem::new(&o, g.clone(), f.clone(), 0.5, dt);
            let traj = integrate(&prob).unwrap();
            let oracle = dense_galerkin_oracle(&sys, &o, &g, &f, traj.times(), false, 1e-12).unwrap();
            errs.push((traj.last() - oracle.last()).norm());
        }
        let t = rate_table("dt", &[0.02, 0.01, 0.005], &errs).unwrap();
        assert!(t.monotone && (t.fitted_rate - 2.0).abs() < 0.3, "{t:?}");
    }

    #[test]
    fn analytic_interior_profiles_satisfy_boundary_conditions() {
        for family in BcFamily::ALL {
            let dim = if family.is_hodge() { 3 } else { 2 };
            let sol =
                manufactured_solution(family, &pi_box(dim), MmsShape::Analytic { b: 2.0 }, 0.3, 0.0, -1.0).unwrap();
            let o = ops(family, dim, 4);
            // the projection captures the profile up to geometric tails
            let w0 = sol.initial_minus_lift(o.space()).unwrap();
            let err = sol.l2_error(&w0, 0.0, 24).unwrap();
            assert!(err < 0.05, "{family}: {err}");
        }
    }

    #[test]
    fn modal_solution_is_reproduced_to_time_discretisation_error() {
        let o = ops(BcFamily::DirDir, 2, 3);
        let sol = manufactured_solution(BcFamily::DirDir, o.space().domain(), MmsShape::Modal, 0.2, 0.0, -1.0).unwrap();
        let prob = sol.problem(&o, 0.5, 0.01).unwrap();
        let settings = NewtonSettings { certify: false, ..NewtonSettings::default() };
        let (w, cert) = newton_solve(&prob, &settings).unwrap();
        assert!(cert.converged);
        let err = sol.l2_error(w.last(), 0.5, 16).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn rate_table_recovers_power_laws() {
        let levels = [0.1, 0.05, 0.025];
        let errors: Vec<f64> = levels.iter().map(|h: &f64| 3.0 * h.powi(2)).collect();
        let t = rate_table("dt", &levels, &errors).unwrap();
        assert!((t.fitted_rate - 2.0).abs() < 1e-12);
        assert!(t.pairwise_rates.iter().all(|r| (r - 2.0).abs() < 1e-12));
        assert!(t.monotone);
        assert!(rate_table("dt", &[0.1, 0.05], &[1.0, 0.2]).is_err());
        let csv = rate_table_csv(&t);
        assert_eq!(csv.lines().count(), 4);
    }
}
