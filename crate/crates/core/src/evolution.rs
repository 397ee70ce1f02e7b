//! Time integration of the linearised Galerkin system
//! `c' + A c + S c + B[c, w] + B[w, c] = f`, with energy monitoring and the
//! a-priori constant probe.
//!
//! Diffusion is diagonal and treated by Crank-Nicolson; the skew coupling and
//! the frozen quadratic terms are extrapolated explicitly (Adams-Bashforth 2).
//! The first step uses an implicit-explicit Heun predictor-corrector so the
//! scheme is second order from the start.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{Envelope, ProjectedAnalytic, SampledAnalytic};
use crate::error::{Error, Result};
use crate::fractional::{apply_power, embedding_constant, frac_norm_sq, w_norm, x_norm, y_norm};
use crate::operators::{GridState, OperatorSet};
use crate::sampling::random_low_mode_state;
use crate::space::{StateU, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Crank-Nicolson / Adams-Bashforth 2, second order.
    Cnab2,
    /// Backward / forward Euler, first order.
    ImexEuler,
}

/// Switches for the individual operator parts (diagnostics).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Toggles {
    pub diffusion: bool,
    pub skew: bool,
    pub bilinear: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Self { diffusion: true, skew: true, bilinear: true }
    }
}

/// Time-dependent forcing in the eigenbasis.
#[derive(Debug, Clone)]
pub enum Forcing {
    Zero,
    /// Sampled states, linearly interpolated between samples.
    Sampled(Trajectory),
    /// `sum_k envelope_k(t) * state_k`.
    Modal(Vec<(Envelope, StateU)>),
    /// `sum_k a_k(t) b_k(t) * state_k`.
    Pairs(Vec<(Envelope, Envelope, StateU)>),
    /// `scale * P u(t)` or `scale * P du/dt(t)` for a closed-form field.
    Projected {
        field: Arc<ProjectedAnalytic>,
        derivative: bool,
        scale: f64,
    },
    Sum(Vec<Forcing>),
}

impl Forcing {
    pub fn at(&self, ops: &OperatorSet, t: f64) -> StateU {
        match self {
            Forcing::Zero => StateU::zeros(ops.space()),
            Forcing::Sampled(tr) => tr.interpolate(t),
            Forcing::Modal(terms) => {
                let mut out = StateU::zeros(ops.space());
                for (e, s) in terms {
                    out.axpy(e.value(t), s);
                }
                out
            }
            Forcing::Pairs(terms) => {
                let mut out = StateU::zeros(ops.space());
                for (a, b, s) in terms {
                    out.axpy(a.value(t) * b.value(t), s);
                }
                out
            }
            Forcing::Projected { field, derivative, scale } => {
                let u = if *derivative { field.derivative_at(t) } else { field.at(t) };
                u.scaled(*scale)
            }
            Forcing::Sum(parts) => {
                let mut out = StateU::zeros(ops.space());
                for p in parts {
                    out.axpy(1.0, &p.at(ops, t));
                }
                out
            }
        }
    }

    /// Samples on a time grid.
    pub fn sample(&self, ops: &OperatorSet, times: &[f64]) -> Result<Trajectory> {
        Trajectory::sample(times, |t| self.at(ops, t))
    }

    pub fn scaled(&self, a: f64) -> Forcing {
        match self {
            Forcing::Zero => Forcing::Zero,
            Forcing::Sampled(tr) => Forcing::Sampled(tr.scaled(a)),
            Forcing::Modal(terms) => Forcing::Modal(terms.iter().map(|(e, s)| (*e, s.scaled(a))).collect()),
            Forcing::Pairs(terms) => Forcing::Pairs(terms.iter().map(|(e, f, s)| (*e, *f, s.scaled(a))).collect()),
            Forcing::Projected { field, derivative, scale } => {
                Forcing::Projected { field: field.clone(), derivative: *derivative, scale: a * scale }
            }
            Forcing::Sum(parts) => Forcing::Sum(parts.iter().map(|p| p.scaled(a)).collect()),
        }
    }
}

/// Field `w` that the quadratic term is linearised around: a spectral
/// trajectory plus an optional closed-form background.
#[derive(Debug, Clone, Default)]
pub struct FrozenField {
    pub spectral: Option<Trajectory>,
    pub background: Option<Arc<SampledAnalytic>>,
}

impl FrozenField {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn spectral(traj: Trajectory) -> Self {
        Self { spectral: Some(traj), background: None }
    }

    pub fn is_none(&self) -> bool {
        self.spectral.is_none() && self.background.as_ref().is_none_or(|b| b.is_empty())
    }

    /// Grid values and gradients at time `t`.
    pub fn at(&self, ops: &OperatorSet, t: f64) -> Result<Option<GridState>> {
        let mut out: Option<GridState> = None;
        if let Some(tr) = &self.spectral {
            out = Some(ops.to_grid(&tr.interpolate(t), true)?);
        }
        if let Some(bg) = &self.background {
            if !bg.is_empty() {
                let b = bg.at(t);
                match &mut out {
                    Some(g) => g.axpy(1.0, &b),
                    None => out = Some(b),
                }
            }
        }
        Ok(out)
    }
}

/// Linear Cauchy problem on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct LinearProblem<'a> {
    pub ops: &'a OperatorSet,
    pub frozen: FrozenField,
    pub forcing: Forcing,
    pub initial: StateU,
    pub horizon: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub toggles: Toggles,
    /// Admissible `||u*||_X` for the spectral part of the frozen field.
    pub radius: Option<f64>,
    /// Step-size guard `dt * (||S|| + ||N||) <= cfl`; `None` disables it.
    pub cfl: Option<f64>,
}

impl<'a> LinearProblem<'a> {
    pub fn new(ops: &'a OperatorSet, initial: StateU, forcing: Forcing, horizon: f64, dt: f64) -> Self {
        Self {
            ops,
            frozen: FrozenField::none(),
            forcing,
            initial,
            horizon,
            dt,
            scheme: Scheme::Cnab2,
            toggles: Toggles::default(),
            radius: None,
            cfl: Some(0.5),
        }
    }

    pub fn with_frozen(mut self, frozen: FrozenField) -> Self {
        self.frozen = frozen;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_toggles(mut self, toggles: Toggles) -> Self {
        self.toggles = toggles;
        self
    }

    /// The uniform time grid the solver uses.
    pub fn times(&self) -> Result<Vec<f64>> {
        step_grid(self.horizon, self.dt)
    }
}

/// Uniform grid with the largest step `<= dt` that divides the horizon.
pub fn step_grid(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Parameter(format!("horizon must be positive, got {horizon}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    let steps = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok(Trajectory::uniform_times(horizon, steps))
}

struct Stepper<'p, 'a> {
    prob: &'p LinearProblem<'a>,
    skew_norm: f64,
}

impl Stepper<'_, '_> {
    /// Explicit part `-S c - B[c, w] - B[w, c]` and the guard check.
    fn explicit(&self, c: &StateU, t: f64) -> Result<StateU> {
        let p = self.prob;
        let mut e = StateU::zeros(p.ops.space());
        if p.toggles.skew {
            e.axpy(-1.0, &p.ops.apply_skew(c));
        }
        let mut n_est = 0.0;
        if p.toggles.bilinear && !p.ops.coefficients().is_zero() {
            if let Some(w) = p.frozen.at(p.ops, t)? {
                n_est = p.ops.frozen_norm_estimate(&w);
                e.axpy(-1.0, &p.ops.apply_frozen(c, &w)?);
            }
        }
        if let Some(cfl) = p.cfl {
            let rate = if p.toggles.skew { self.skew_norm } else { 0.0 } + n_est;
            if p.dt_eff() * rate > cfl {
                return Err(Error::StepSize { dt: p.dt_eff(), limit: cfl / rate });
            }
        }
        Ok(e)
    }
}

impl LinearProblem<'_> {
    fn dt_eff(&self) -> f64 {
        let steps = ((self.horizon / self.dt) - 1e-9).ceil().max(1.0);
        self.horizon / steps
    }

    fn lambda(&self) -> Vec<f64> {
        if self.toggles.diffusion {
            self.ops.space().scaled_eigenvalues().to_vec()
        } else {
            vec![0.0; self.ops.space().len()]
        }
    }
}

/// `(I + theta h L)^{-1} [(I - (1 - theta) h L) c + h rhs]` for diagonal `L`.
fn implicit_update(lam: &[f64], c: &StateU, rhs: &StateU, h: f64, theta: f64) -> StateU {
    let data = lam
        .iter()
        .zip(c.data())
        .zip(rhs.data())
        .map(|((&l, &x), &r)| ((1.0 - (1.0 - theta) * h * l) * x + h * r) / (1.0 + theta * h * l))
        .collect();
    StateU::from_vec(c.space(), data).expect("same space")
}

fn time_derivative(lam: &[f64], c: &StateU, explicit: &StateU, f: &StateU) -> StateU {
    let data = lam
        .iter()
        .zip(c.data())
        .zip(explicit.data().iter().zip(f.data()))
        .map(|((&l, &x), (&e, &g))| -l * x + e + g)
        .collect();
    StateU::from_vec(c.space(), data).expect("same space")
}

const BLOW_UP: f64 = 1e12;

/// Integrate the linear problem; returns the trajectory with stored
/// derivatives and its energy report.
pub fn solve_linear(prob: &LinearProblem) -> Result<(Trajectory, EnergyReport)> {
    let traj = integrate(prob)?;
    let forcing = prob.forcing.sample(prob.ops, traj.times())?;
    let report = energy_check(prob.ops, &traj, &forcing, &prob.initial)?;
    Ok((traj, report))
}

/// Integrate the linear problem without the energy bookkeeping.
pub fn integrate(prob: &LinearProblem) -> Result<Trajectory> {
    let space = prob.ops.space();
    if !prob.initial.space().same_as(space) {
        return Err(Error::SizeMismatch("initial state lives in a different space".into()));
    }
    if let (Some(r), Some(tr)) = (prob.radius, &prob.frozen.spectral) {
        let norm = x_norm(tr)?;
        if norm > r {
            return Err(Error::RadiusViolation { norm, radius: r });
        }
    }
    let times = prob.times()?;
    let h = prob.dt_eff();
    let lam = prob.lambda();
    let skew_norm = if prob.cfl.is_some() && prob.toggles.skew { prob.ops.skew_norm(40) } else { 0.0 };
    let st = Stepper { prob, skew_norm };

    let n = times.len();
    let mut states = Vec::with_capacity(n);
    let mut derivs = Vec::with_capacity(n);
    let mut c = prob.initial.clone();
    let mut f_cur = prob.forcing.at(prob.ops, times[0]);
    let mut e_cur = st.explicit(&c, times[0])?;
    let mut e_prev: Option<StateU> = None;
    for i in 0..n - 1 {
        let t_next = times[i + 1];
        let f_next = prob.forcing.at(prob.ops, t_next);
        states.push(c.clone());
        derivs.push(time_derivative(&lam, &c, &e_cur, &f_cur));
        let next = match (prob.scheme, &e_prev) {
            (Scheme::ImexEuler, _) => {
                let mut rhs = e_cur.clone();
                rhs.axpy(1.0, &f_next);
                implicit_update(&lam, &c, &rhs, h, 1.0)
            }
            (Scheme::Cnab2, None) => {
                let mut favg = f_cur.scaled(0.5);
                favg.axpy(0.5, &f_next);
                let mut rhs = e_cur.clone();
                rhs.axpy(1.0, &favg);
                let pred = implicit_update(&lam, &c, &rhs, h, 0.5);
                let e_pred = st.explicit(&pred, t_next)?;
                let mut rhs = e_cur.scaled(0.5);
                rhs.axpy(0.5, &e_pred);
                rhs.axpy(1.0, &favg);
                implicit_update(&lam, &c, &rhs, h, 0.5)
            }
            (Scheme::Cnab2, Some(ep)) => {
                let mut rhs = e_cur.scaled(1.5);
                rhs.axpy(-0.5, ep);
                rhs.axpy(0.5, &f_cur);
                rhs.axpy(0.5, &f_next);
                implicit_update(&lam, &c, &rhs, h, 0.5)
            }
        };
        let mag = next.max_abs();
        if !(mag <= BLOW_UP) {
            return Err(Error::BlowUp { time: t_next, magnitude: mag });
        }
        c = next;
        e_prev = Some(std::mem::replace(&mut e_cur, st.explicit(&c, t_next)?));
        f_cur = f_next;
    }
    derivs.push(time_derivative(&lam, &c, &e_cur, &f_cur));
    states.push(c);
    Trajectory::new(times, states, Some(derivs))
}

/// Energy functionals of a trajectory and the data norms they are bounded by.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    /// `max_{s<=t} ||u||^2 + int_0^t ||A^{1/2} u||^2`
    pub energy: Vec<f64>,
    /// The same functional applied to `A^{sigma/2} u`.
    pub energy_sigma: Vec<f64>,
    pub forcing_norm: f64,
    pub initial_norm: f64,
    /// Constant weighting `energy` in the bound.
    pub c_a: f64,
    /// `(C_A E[u](T) + E[A^{sigma/2} u](T) / 4) / (||f||_Y^2 + ||g||_W^2)`
    pub ratio: f64,
    pub monotone: bool,
    pub finite: bool,
}

impl EnergyReport {
    pub fn final_energy(&self) -> f64 {
        *self.energy.last().unwrap_or(&0.0)
    }

    pub fn final_energy_sigma(&self) -> f64 {
        *self.energy_sigma.last().unwrap_or(&0.0)
    }
}

/// Running-max-plus-integral functional of `||A^s u||^2`.
pub fn energy_functional(traj: &Trajectory, s: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(traj.len());
    let mut running_max: f64 = 0.0;
    let mut integral = 0.0;
    let mut prev_rate: Option<(f64, f64)> = None;
    for (t, u) in traj.times().iter().zip(traj.states()) {
        running_max = running_max.max(frac_norm_sq(u, s));
        let rate = frac_norm_sq(u, s + 0.5);
        if let Some((t0, r0)) = prev_rate {
            integral += 0.5 * (t - t0) * (r0 + rate);
        }
        prev_rate = Some((*t, rate));
        out.push(running_max + integral);
    }
    out
}

/// Energy report for a trajectory with forcing samples `forcing` and initial
/// data `g`.
pub fn energy_check(ops: &OperatorSet, traj: &Trajectory, forcing: &Trajectory, g: &StateU) -> Result<EnergyReport> {
    traj.check_aligned(forcing)?;
    let space = ops.space();
    let sigma = space.sigma();
    let energy = energy_functional(traj, 0.0);
    let energy_sigma = energy_functional(traj, 0.5 * sigma);
    let forcing_norm = y_norm(forcing);
    let initial_norm = w_norm(g);
    let c_emb = embedding_constant(space, 0.5, 0.0);
    let c_skew = ops.skew_bound(60);
    let c_a = c_emb * c_emb * c_skew * c_skew;
    let data = forcing_norm.powi(2) + initial_norm.powi(2);
    let top = c_a * energy.last().copied().unwrap_or(0.0) + 0.25 * energy_sigma.last().copied().unwrap_or(0.0);
    let ratio = if data > 0.0 { top / data } else { 0.0 };
    let monotone = energy.windows(2).all(|w| w[1] >= w[0]) && energy_sigma.windows(2).all(|w| w[1] >= w[0]);
    let finite = energy.iter().chain(&energy_sigma).all(|x| x.is_finite()) && ratio.is_finite();
    Ok(EnergyReport {
        times: traj.times().to_vec(),
        energy,
        energy_sigma,
        forcing_norm,
        initial_norm,
        c_a,
        ratio,
        monotone,
        finite,
    })
}

/// Result of the a-priori constant probe.
#[derive(Debug, Clone, PartialEq)]
pub struct AprioriProbe {
    /// Largest `||u||_X / (||f||_Y + ||g||_W)` over the samples.
    pub c_g: f64,
    pub ratios: Vec<f64>,
}

/// Solve the linear problem around `frozen` for random low-mode data and record
/// `||u||_X / (||f||_Y + ||g||_W)`.
pub fn apriori_probe(
    ops: &OperatorSet,
    frozen: &FrozenField,
    horizon: f64,
    dt: f64,
    samples: usize,
    max_k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<AprioriProbe> {
    let space = ops.space();
    let mut ratios = Vec::with_capacity(samples);
    for _ in 0..samples {
        let g = random_low_mode_state(space, rng, max_k);
        let f = random_low_mode_state(space, rng, max_k);
        let forcing = Forcing::Modal(vec![(Envelope::Const, f)]);
        let prob = LinearProblem::new(ops, g.clone(), forcing.clone(), horizon, dt).with_frozen(frozen.clone());
        let traj = integrate(&prob)?;
        let fs = forcing.sample(ops, traj.times())?;
        let den = y_norm(&fs) + w_norm(&g);
        ratios.push(if den > 0.0 { x_norm(&traj)? / den } else { 0.0 });
    }
    let c_g = ratios.iter().copied().fold(0.0, f64::max);
    Ok(AprioriProbe { c_g, ratios })
}

/// Sup over linear solutions of `max_t ||A^{sigma/2} u(t)|| / ||u||_X`, the
/// empirical constant of the embedding of the solution space into
/// continuous-in-time `W`-valued functions.
pub fn continuity_constant_probe(
    ops: &OperatorSet,
    frozen: &FrozenField,
    horizon: f64,
    dt: f64,
    samples: usize,
    max_k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let space = ops.space();
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let g = random_low_mode_state(space, rng, max_k);
        let f = random_low_mode_state(space, rng, max_k);
        let prob = LinearProblem::new(ops, g, Forcing::Modal(vec![(Envelope::Const, f)]), horizon, dt)
            .with_frozen(frozen.clone());
        let traj = integrate(&prob)?;
        let xn = x_norm(&traj)?;
        let sup = traj.states().iter().map(|u| frac_norm_sq(u, 0.5 * space.sigma()).sqrt()).fold(0.0, f64::max);
        if xn > 0.0 {
            best = best.max(sup / xn);
        }
    }
    Ok(best)
}

/// `A^s` applied along a trajectory (derivatives included).
pub fn power_trajectory(traj: &Trajectory, s: f64) -> Result<Trajectory> {
    let states = traj.states().iter().map(|u| apply_power(u, s)).collect();
    let derivs = traj.derivatives().map(|d| d.iter().map(|u| apply_power(u, s)).collect());
    Trajectory::new(traj.times().to_vec(), states, derivs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BoxDomain;
    use crate::operators::{Dealiasing, NonlinearCoefficients};
    use crate::sampling::{random_low_mode_state, rng};
    use crate::space::{BcFamily, Space};

    fn ops(zeta: f64, m: usize) -> OperatorSet {
        let d = BoxDomain::pi_box(2).unwrap();
        let sp = Space::new(&d, BcFamily::DirDir, &[m, m], zeta, 0.8, 1.0).unwrap();
        OperatorSet::new(&sp, NonlinearCoefficients::default(), Dealiasing::ThreeHalves).unwrap()
    }

    #[test]
    fn scalar_decay() {
        let o = ops(0.5, 4);
        let g = StateU::unit(o.space(), 0, &[1, 1], 1.0).unwrap();
        let toggles = Toggles { skew: false, ..Toggles::default() };
        let prob = LinearProblem::new(&o, g, Forcing::Zero, 1.0, 1e-3).with_toggles(toggles);
        let (tr, rep) = solve_linear(&prob).unwrap();
        assert!((tr.last().data()[0] - (-1f64).exp()).abs() < 1e-5);
        assert!(rep.monotone && rep.finite);
    }

    #[test]
    fn skew_dynamics_conserve_energy() {
        let o = ops(1.0, 3);
        let g = random_low_mode_state(o.space(), &mut rng(1), 2);
        let toggles = Toggles { diffusion: false, ..Toggles::default() };
        let n0 = g.norm();
        let mut drift = Vec::new();
        for dt in [1e-2, 5e-3] {
            let prob = LinearProblem::new(&o, g.clone(), Forcing::Zero, 1.0, dt).with_toggles(toggles);
            let tr = integrate(&prob).unwrap();
            drift.push((tr.last().norm() - n0).abs() / n0);
        }
        assert!(drift[0] < 1e-3, "{drift:?}");
        assert!(drift[1] < drift[0] / 3.0, "{drift:?}");
    }

    fn self_convergence(scheme: Scheme) -> f64 {
        let o = ops(0.7, 6);
        let mut r = rng(11);
        let g = random_low_mode_state(o.space(), &mut r, 2).scaled(0.1);
        let f = random_low_mode_state(o.space(), &mut r, 2).scaled(0.1);
        let w = random_low_mode_state(o.space(), &mut r, 2).scaled(0.05);
        let forcing = Forcing::Modal(vec![(Envelope::Sine { omega: 3.0, phase: 0.3 }, f)]);
        let frozen_times = Trajectory::uniform_times(0.5, 1);
        let frozen = Trajectory::sample(&frozen_times, |t| w.scaled(1.0 + t)).unwrap();
        let run = |dt: f64| {
            let prob = LinearProblem::new(&o, g.clone(), forcing.clone(), 0.5, dt)
                .with_frozen(FrozenField::spectral(frozen.clone()))
                .with_scheme(scheme);
            integrate(&prob).unwrap().last().clone()
        };
        let reference = run(1e-4);
        let e1 = (&run(1e-2) - &reference).norm();
        let e2 = (&run(5e-3) - &reference).norm();
        (e1 / e2).log2()
    }

    #[test]
    fn second_order_in_time() {
        let rate = self_convergence(Scheme::Cnab2);
        assert!((rate - 2.0).abs() < 0.2, "{rate}");
    }

    #[test]
    fn euler_is_first_order() {
        let rate = self_convergence(Scheme::ImexEuler);
        assert!((rate - 1.0).abs() < 0.2, "{rate}");
    }

    #[test]
    fn linearity_in_the_data() {
        let o = ops(0.7, 4);
        let mut r = rng(3);
        let (g1, g2) = (random_low_mode_state(o.space(), &mut r, 2), random_low_mode_state(o.space(), &mut r, 2));
        let (f1, f2) = (random_low_mode_state(o.space(), &mut r, 2), random_low_mode_state(o.space(), &mut r, 2));
        let solve = |g: StateU, f: StateU| {
            let prob = LinearProblem::new(&o, g, Forcing::Modal(vec![(Envelope::Const, f)]), 0.3, 1e-2);
            integrate(&prob).unwrap().last().clone()
        };
        let combo = solve(&g1.scaled(2.0) + &g2.scaled(-3.0), &f1.scaled(2.0) + &f2.scaled(-3.0));
        let mut sep = solve(g1, f1).scaled(2.0);
        sep.axpy(-3.0, &solve(g2, f2));
        assert!((&combo - &sep).max_abs() < 1e-10);
    }

    #[test]
    fn single_mode_energy() {
        let o = ops(0.5, 3);
        let g = StateU::unit(o.space(), 0, &[1, 1], 1.0).unwrap();
        let toggles = Toggles { skew: false, ..Toggles::default() };
        let prob = LinearProblem::new(&o, g.clone(), Forcing::Zero, 5.0, 1e-3).with_toggles(toggles);
        let (_, rep) = solve_linear(&prob).unwrap();
        let expect = 1.0 + (1.0 - (-10f64).exp()) / 2.0;
        assert!((rep.final_energy() - expect).abs() < 1e-5);

        let zero = LinearProblem::new(&o, StateU::zeros(o.space()), Forcing::Zero, 1.0, 1e-2);
        let (_, rep0) = solve_linear(&zero).unwrap();
        assert_eq!(rep0.final_energy(), 0.0);
        assert_eq!(rep0.final_energy_sigma(), 0.0);
    }

    #[test]
    fn energies_scale_quadratically() {
        let o = ops(0.7, 4);
        let mut r = rng(8);
        let g = random_low_mode_state(o.space(), &mut r, 2);
        let f = random_low_mode_state(o.space(), &mut r, 2);
        let run = |s: f64| {
            let prob =
                LinearProblem::new(&o, g.scaled(s), Forcing::Modal(vec![(Envelope::Const, f.scaled(s))]), 0.5, 1e-2);
            solve_linear(&prob).unwrap().1
        };
        let (a, b) = (run(1.0), run(2.0));
        assert!((b.final_energy() / a.final_energy() - 4.0).abs() < 1e-10);
        assert!((b.final_energy_sigma() / a.final_energy_sigma() - 4.0).abs() < 1e-10);
        assert!((b.ratio - a.ratio).abs() < 1e-10 * a.ratio);
    }

    #[test]
    fn apriori_probe_is_deterministic_and_bounds_the_diagonal_case() {
        let o = ops(0.5, 4);
        let a = apriori_probe(&o, &FrozenField::none(), 0.5, 1e-2, 4, 2, &mut rng(5)).unwrap();
        let b = apriori_probe(&o, &FrozenField::none(), 0.5, 1e-2, 4, 2, &mut rng(5)).unwrap();
        assert_eq!(a, b);
        assert!(a.c_g.is_finite() && a.c_g > 0.0);
    }

    #[test]
    fn step_guard_rejects_large_steps() {
        let o = ops(0.5, 8);
        let g = random_low_mode_state(o.space(), &mut rng(2), 2);
        let prob = LinearProblem::new(&o, g, Forcing::Zero, 1.0, 0.5);
        assert!(matches!(integrate(&prob), Err(Error::StepSize { .. })));
    }
}
