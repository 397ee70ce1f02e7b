//! Newton-Kantorovich iteration for the nonlinear problem and its
//! certificate.
//!
//! The unknown `w` solves
//! `w' + A w + S w + B[w, w] + B[w, b] + B[b, w] = F`, `w(0) = w0`
//! for a known background `b` (zero for homogeneous boundary data, the
//! harmonic lift or the full linear lifted solution otherwise). Each Newton
//! step is one linear solve around the current iterate plus background.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticState;
use crate::error::{Error, Result};
use crate::evolution::{
    apriori_probe, continuity_constant_probe, integrate, step_grid, Forcing, FrozenField, LinearProblem, Scheme,
};
use crate::fractional::{w_norm, x_norm, x_norm_parts_with, y_norm};
use crate::lifting::{lift_forcing, solve_uz, Lift};
use crate::operators::{bilinear_constant_probe, GridState, OperatorSet};
use crate::sampling::rng;
use crate::space::{StateU, Trajectory};

/// How the time derivative enters the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    /// Derivatives stored by the stepper.
    Stored,
    /// Second-order finite differences of the states.
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSettings {
    pub tol: f64,
    pub k_max: usize,
    /// Linear solves per constant probe.
    pub probe_samples: usize,
    /// Highest per-axis wavenumber of probe data.
    pub probe_max_k: usize,
    pub seed: u64,
    /// Advisory data-smallness radius; `None` uses the measured one.
    pub smallness_radius: Option<f64>,
    /// Measure the certificate constants; when false they are reported as
    /// NaN and only the iteration history is filled in.
    pub certify: bool,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tol: 1e-9, k_max: 20, probe_samples: 6, probe_max_k: 2, seed: 0, smallness_radius: None, certify: true }
    }
}

/// Nonlinear problem for `w` around a background `b`.
#[derive(Debug, Clone)]
pub struct NonlinearProblem<'a> {
    pub ops: &'a OperatorSet,
    pub forcing: Forcing,
    pub initial: StateU,
    pub background: FrozenField,
    pub horizon: f64,
    pub dt: f64,
    pub scheme: Scheme,
}

impl<'a> NonlinearProblem<'a> {
    /// Homogeneous boundary data: no background.
    pub fn homogeneous(ops: &'a OperatorSet, forcing: Forcing, initial: StateU, horizon: f64, dt: f64) -> Self {
        Self { ops, forcing, initial, background: FrozenField::none(), horizon, dt, scheme: Scheme::Cnab2 }
    }

    /// Nonhomogeneous data solved directly for `w = u - h` around the lift:
    /// `F = f - P dh/dt - P(div h_v, grad h_p) - P B[h, h]`, `w0 = g - h(0)`.
    pub fn direct(
        ops: &'a OperatorSet,
        forcing: Forcing,
        initial_minus_lift: StateU,
        lift: &Lift,
        horizon: f64,
        dt: f64,
    ) -> Result<Self> {
        let times = step_grid(horizon, dt)?;
        let sampled = Arc::new(lift.field.sampled(ops.grid())?);
        let hh = Forcing::Sampled(Trajectory::sample(&times, |t| {
            let h = sampled.at(t);
            ops.bilinear_sum(&[(&h, &h)]).expect("grid states match")
        })?);
        let f = Forcing::Sum(vec![forcing, lift_forcing(lift, ops)?, hh.scaled(-1.0)]);
        Ok(Self {
            ops,
            forcing: f,
            initial: initial_minus_lift,
            background: FrozenField { spectral: None, background: Some(sampled) },
            horizon,
            dt,
            scheme: Scheme::Cnab2,
        })
    }

    /// Nonhomogeneous data split into the linear lifted solution
    /// `u~ = u_Z + h` and the correction `u0`: background `u~`,
    /// `F = f - P B[u~, u~]`, `u0(0) = 0`. Returns the problem and `u_Z`.
    pub fn split(
        ops: &'a OperatorSet,
        forcing: Forcing,
        initial_minus_lift: StateU,
        lift: &Lift,
        horizon: f64,
        dt: f64,
    ) -> Result<(Self, Trajectory)> {
        let uz = solve_uz(lift, &initial_minus_lift, ops, horizon, dt)?;
        let sampled = Arc::new(lift.field.sampled(ops.grid())?);
        let background = FrozenField { spectral: Some(uz.clone()), background: Some(sampled) };
        let mut uu = Vec::with_capacity(uz.len());
        for &t in uz.times() {
            let b = background.at(ops, t)?.expect("background present");
            uu.push(ops.bilinear_sum(&[(&b, &b)])?.scaled(-1.0));
        }
        let f = Forcing::Sum(vec![forcing, Forcing::Sampled(Trajectory::new(uz.times().to_vec(), uu, None)?)]);
        let initial = StateU::zeros(ops.space());
        Ok((Self { ops, forcing: f, initial, background, horizon, dt, scheme: Scheme::Cnab2 }, uz))
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        step_grid(self.horizon, self.dt)
    }

    fn background_at(&self, t: f64) -> Result<Option<GridState>> {
        self.background.at(self.ops, t)
    }

    /// Frozen field `w + b` for the linearisation around `w`.
    fn linearisation(&self, w: &Trajectory) -> Result<FrozenField> {
        let spectral = match &self.background.spectral {
            Some(bs) => w.add(bs)?,
            None => w.clone(),
        };
        Ok(FrozenField { spectral: Some(spectral), background: self.background.background.clone() })
    }
}

/// Residual of a trajectory: samples and norms.
#[derive(Debug, Clone)]
pub struct Residual {
    pub samples: Trajectory,
    /// `||R||_Y`
    pub forcing_part: f64,
    /// `||w(0) - w0||_W`
    pub initial_part: f64,
}

impl Residual {
    /// Product norm `||R||_Y + ||w(0) - w0||_W`.
    pub fn norm(&self) -> f64 {
        self.forcing_part + self.initial_part
    }
}

/// `R = w' + A w + S w + B[w, w] + B[w, b] + B[b, w] - F` on the time grid.
pub fn residual(w: &Trajectory, prob: &NonlinearProblem, mode: DerivativeMode) -> Result<Residual> {
    let ops = prob.ops;
    let derivs = match mode {
        DerivativeMode::Stored => w.time_derivatives()?,
        DerivativeMode::FiniteDifference => w.finite_difference_derivatives()?,
    };
    let nonlinear = !ops.coefficients().is_zero();
    let mut samples = Vec::with_capacity(w.len());
    for ((&t, u), du) in w.times().iter().zip(w.states()).zip(&derivs) {
        let mut r = du.clone();
        r.axpy(1.0, &ops.apply_diffusion(u));
        r.axpy(1.0, &ops.apply_skew(u));
        if nonlinear {
            let ug = ops.to_grid(u, true)?;
            let quadratic = match prob.background_at(t)? {
                Some(bg) => {
                    let mut total = ug.clone();
                    total.axpy(1.0, &bg);
                    ops.bilinear_sum(&[(&ug, &total), (&bg, &ug)])?
                }
                None => ops.bilinear_sum(&[(&ug, &ug)])?,
            };
            r.axpy(1.0, &quadratic);
        }
        r.axpy(-1.0, &prob.forcing.at(ops, t));
        samples.push(r);
    }
    let samples = Trajectory::new(w.times().to_vec(), samples, None)?;
    let forcing_part = y_norm(&samples);
    let initial_part = w_norm(&(w.initial() - &prob.initial));
    Ok(Residual { samples, forcing_part, initial_part })
}

/// Kantorovich radii `r = (1 -+ sqrt(1 - 2 beta K eta)) / (beta K)`, or
/// `None` when the discriminant is negative.
pub fn kantorovich_radii(beta: f64, k: f64, eta: f64) -> Option<(f64, f64)> {
    let bk = beta * k;
    let disc = 1.0 - 2.0 * bk * eta;
    if !(disc >= 0.0) || bk <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some(((1.0 - s) / bk, (1.0 + s) / bk))
}

/// Least-squares slope and `R^2` of `log r_{k+1}` against `log r_k` over
/// consecutive residuals above `floor`.
pub fn quadratic_fit(residuals: &[f64], floor: f64) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> =
        residuals.windows(2).filter(|w| w[0] > floor && w[1] > floor).map(|w| (w[0].ln(), w[1].ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some((slope, r2))
}

/// Measured Newton-Kantorovich certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NkCertificate {
    /// Empirical bound on the inverse linearisation (a-priori constant).
    pub beta: f64,
    /// Empirical bilinear constant.
    pub c_b: f64,
    /// Empirical continuity constant of `X` into `C([0,T]; W)`.
    pub c_t: f64,
    /// Lipschitz constant `2 C_B C_T`.
    pub k: f64,
    /// `X`-norm of the first Newton step.
    pub eta: f64,
    pub condition: f64,
    pub r_minus: Option<f64>,
    pub r_plus: Option<f64>,
    pub residuals: Vec<f64>,
    pub step_norms: Vec<f64>,
    /// `X`-distance of each iterate from the starting point.
    pub distances: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub max_distance: f64,
    pub contained: bool,
    /// Fitted order and `R^2` of the residual decay.
    pub fit: Option<(f64, f64)>,
    /// Residual of the final iterate with finite-difference derivatives,
    /// a measure of the time-discretisation error.
    pub discretisation_residual: f64,
    /// `||F||_Y + ||w0||_W`
    pub data_norm: f64,
    /// Advisory smallness radius `1 / (2 beta^2 K)` (or the configured one).
    pub smallness_radius: f64,
    pub data_small: bool,
    pub tol: f64,
}

impl NkCertificate {
    pub fn pass(&self) -> bool {
        self.condition <= 0.5 && self.converged
    }
}

/// Run Newton's method from `w = 0` and assemble the certificate.
pub fn newton_solve(prob: &NonlinearProblem, settings: &NewtonSettings) -> Result<(Trajectory, NkCertificate)> {
    let ops = prob.ops;
    let space = ops.space();
    let times = prob.times()?;
    let mut w = Trajectory::zeros(space, &times)?;
    let mut residuals = Vec::new();
    let mut step_norms = Vec::new();
    let mut distances = vec![0.0];
    let mut converged = false;
    let mut growth = 0;
    let mut first = None;
    for k in 0..=settings.k_max {
        let res = residual(&w, prob, DerivativeMode::Stored)?;
        let r = res.norm();
        if let Some(&prev) = residuals.last() {
            growth = if r > prev { growth + 1 } else { 0 };
        }
        residuals.push(r);
        if first.is_none() {
            first = Some(r);
        }
        if growth >= 3 || !r.is_finite() {
            return Err(Error::Divergence(residuals));
        }
        if r <= settings.tol {
            converged = true;
            break;
        }
        if k == settings.k_max {
            break;
        }
        let rhs = Forcing::Sampled(res.samples.scaled(-1.0));
        let delta0 = &prob.initial - w.initial();
        let lin = LinearProblem::new(ops, delta0, rhs, prob.horizon, prob.dt)
            .with_frozen(prob.linearisation(&w)?)
            .with_scheme(prob.scheme);
        // once the iterates have moved, a tripped step guard means they
        // have outgrown the resolution: treat it as divergence
        let delta = match integrate(&lin) {
            Err(Error::StepSize { .. }) if k > 0 => return Err(Error::Divergence(residuals)),
            other => other?,
        };
        step_norms.push(x_norm(&delta)?);
        w = w.axpy(1.0, &delta)?;
        distances.push(x_norm(&w)?);
    }

    let sigma = space.sigma();
    let mut r = rng(settings.seed);
    let zero_frozen = prob.background.clone();
    let (beta, c_b, c_t) = if settings.certify {
        (
            apriori_probe(
                ops,
                &zero_frozen,
                prob.horizon,
                prob.dt,
                settings.probe_samples,
                settings.probe_max_k,
                &mut r,
            )?
            .c_g,
            bilinear_constant_probe(ops, sigma, 4 * settings.probe_samples, settings.probe_max_k, &mut r)?,
            continuity_constant_probe(
                ops,
                &zero_frozen,
                prob.horizon,
                prob.dt,
                settings.probe_samples,
                settings.probe_max_k,
                &mut r,
            )?,
        )
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    let k_lip = 2.0 * c_b * c_t;
    let eta = step_norms.first().copied().unwrap_or(0.0);
    let condition = beta * k_lip * eta;
    let radii = kantorovich_radii(beta, k_lip, eta);
    let max_distance = distances.iter().copied().fold(0.0, f64::max);
    let contained = radii.is_some_and(|(rm, _)| max_distance <= rm * (1.0 + 1e-6));
    let floor = 1e-13 * first.unwrap_or(1.0).max(1e-300);
    let fit = quadratic_fit(&residuals, floor.max(1e-14));
    let fd = residual(&w, prob, DerivativeMode::FiniteDifference)?.norm();
    let data_norm = residual(&Trajectory::zeros(space, &times)?, prob, DerivativeMode::Stored)?.norm();
    let smallness_radius = settings.smallness_radius.unwrap_or(if beta > 0.0 && k_lip > 0.0 {
        1.0 / (2.0 * beta * beta * k_lip)
    } else {
        f64::INFINITY
    });
    let cert = NkCertificate {
        beta,
        c_b,
        c_t,
        k: k_lip,
        eta,
        condition,
        r_minus: radii.map(|r| r.0),
        r_plus: radii.map(|r| r.1),
        iterations: step_norms.len(),
        residuals,
        step_norms,
        distances,
        converged,
        max_distance,
        contained,
        fit,
        discretisation_residual: fd,
        data_norm,
        smallness_radius,
        data_small: data_norm < smallness_radius,
        tol: settings.tol,
    };
    Ok((w, cert))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:e}"))
}

/// Plain-text certificate, one `key = value` per line.
pub fn certificate_report(cert: &NkCertificate) -> String {
    let mut s = String::new();
    let verdict = if cert.pass() { "PASS" } else { "FAIL" };
    let _ = writeln!(s, "# Newton-Kantorovich certificate");
    let _ = writeln!(s, "# constants are empirical (measured by probing), not proven bounds");
    let _ = writeln!(s, "verdict = {verdict}");
    let _ = writeln!(s, "condition = {:e}", cert.condition);
    let _ = writeln!(s, "condition_ok = {}", cert.condition <= 0.5);
    let _ = writeln!(s, "beta = {:e}", cert.beta);
    let _ = writeln!(s, "c_b = {:e}", cert.c_b);
    let _ = writeln!(s, "c_t = {:e}", cert.c_t);
    let _ = writeln!(s, "k = {:e}", cert.k);
    let _ = writeln!(s, "eta = {:e}", cert.eta);
    let _ = writeln!(s, "r_minus = {}", opt(cert.r_minus));
    let _ = writeln!(s, "r_plus = {}", opt(cert.r_plus));
    let _ = writeln!(s, "uniqueness = within the r_plus ball around the starting point only");
    let _ = writeln!(s, "converged = {}", cert.converged);
    let _ = writeln!(s, "iterations = {}", cert.iterations);
    let _ = writeln!(s, "tol = {:e}", cert.tol);
    let _ = writeln!(s, "max_distance = {:e}", cert.max_distance);
    let _ = writeln!(s, "contained = {}", cert.contained);
    match cert.fit {
        Some((slope, r2)) => {
            let _ = writeln!(s, "fit_order = {slope:e}");
            let _ = writeln!(s, "fit_r2 = {r2:e}");
        }
        None => {
            let _ = writeln!(s, "fit_order = undefined");
            let _ = writeln!(s, "fit_r2 = undefined");
        }
    }
    let _ = writeln!(s, "discretisation_residual = {:e}", cert.discretisation_residual);
    let _ = writeln!(s, "data_norm = {:e}", cert.data_norm);
    let _ = writeln!(s, "smallness_radius = {:e}", cert.smallness_radius);
    let _ = writeln!(s, "data_small = {}", cert.data_small);
    let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", ");
    let _ = writeln!(s, "residuals = [{}]", list(&cert.residuals));
    let _ = writeln!(s, "step_norms = [{}]", list(&cert.step_norms));
    let _ = writeln!(s, "distances = [{}]", list(&cert.distances));
    s
}

/// Sum of two aligned trajectories and the full residual of the sum with
/// respect to a problem posed around the lift alone.
pub fn compose_nonhomogeneous(
    u0: &Trajectory,
    u_tilde: &Trajectory,
    direct: &NonlinearProblem,
) -> Result<(Trajectory, Residual)> {
    let sum = u0.add(u_tilde)?;
    let res = residual(&sum, direct, DerivativeMode::Stored)?;
    Ok((sum, res))
}

/// `X`-norm of the difference of two aligned trajectories, using their
/// stored derivatives.
pub fn x_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let d = a.axpy(-1.0, b)?;
    let derivs = d.time_derivatives()?;
    Ok(x_norm_parts_with(&d, &derivs, a.space().sigma())?.total())
}

/// Zero analytic state of the right dimension (convenience for callers
/// without closed-form initial data).
pub fn no_field(dim: usize) -> AnalyticState {
    AnalyticState::zero(dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::Envelope;
    use crate::basis::BoxDomain;
    use crate::operators::{Dealiasing, NonlinearCoefficients};
    use crate::sampling::random_low_mode_state;
    use crate::space::{BcFamily, Space};

    fn ops(coeffs: NonlinearCoefficients) -> OperatorSet {
        let d = BoxDomain::pi_box(2).unwrap();
        let sp = Space::new(&d, BcFamily::DirDir, &[4, 4], 0.5, 0.5, 1.0).unwrap();
        OperatorSet::new(&sp, coeffs, Dealiasing::ThreeHalves).unwrap()
    }

    fn settings() -> NewtonSettings {
        NewtonSettings { probe_samples: 2, ..NewtonSettings::default() }
    }

    #[test]
    fn radii_formula() {
        let (rm, rp) = kantorovich_radii(2.0, 0.5, 0.5).unwrap();
        assert!((rm - 1.0).abs() < 1e-15 && (rp - 1.0).abs() < 1e-15);
        assert!(kantorovich_radii(2.0, 0.5, 0.6).is_none());
        let (rm, rp) = kantorovich_radii(1.0, 1.0, 0.4).unwrap();
        assert!((rm - (1.0 - 0.2f64.sqrt())).abs() < 1e-15);
        assert!((rp - (1.0 + 0.2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn quadratic_fit_recovers_order() {
        let r = [1e-1, 1e-2, 1e-4, 1e-8];
        let (slope, r2) = quadratic_fit(&r, 1e-14).unwrap();
        assert!((slope - 2.0).abs() < 0.3 && r2 > 0.95);
        assert!(quadratic_fit(&[1e-3], 1e-14).is_none());
    }

    #[test]
    fn zero_data_has_zero_residual_except_initial() {
        let o = ops(NonlinearCoefficients::default());
        let g = random_low_mode_state(o.space(), &mut rng(1), 2);
        let prob = NonlinearProblem::homogeneous(&o, Forcing::Zero, g.clone(), 0.1, 1e-2);
        let z = Trajectory::zeros(o.space(), &prob.times().unwrap()).unwrap();
        let res = residual(&z, &prob, DerivativeMode::Stored).unwrap();
        assert_eq!(res.forcing_part, 0.0);
        assert!((res.initial_part - w_norm(&g)).abs() < 1e-15);
    }

    #[test]
    fn linear_problem_converges_in_one_step() {
        let o = ops(NonlinearCoefficients::zero());
        let mut r = rng(2);
        let g = random_low_mode_state(o.space(), &mut r, 2);
        let f = random_low_mode_state(o.space(), &mut r, 2);
        let prob = NonlinearProblem::homogeneous(&o, Forcing::Modal(vec![(Envelope::Const, f)]), g, 0.2, 1e-2);
        let (_, cert) = newton_solve(&prob, &settings()).unwrap();
        assert!(cert.converged);
        assert_eq!(cert.iterations, 1);
    }

    #[test]
    fn small_data_converges_quadratically() {
        let o = ops(NonlinearCoefficients::default());
        let mut r = rng(3);
        let g = random_low_mode_state(o.space(), &mut r, 2).scaled(0.05);
        let f = random_low_mode_state(o.space(), &mut r, 2).scaled(0.05);
        let prob = NonlinearProblem::homogeneous(&o, Forcing::Modal(vec![(Envelope::Const, f)]), g, 0.5, 1e-2);
        let (sol, cert) = newton_solve(&prob, &settings()).unwrap();
        assert!(cert.converged, "{:?}", cert.residuals);
        assert!(cert.iterations <= 8);
        let res = residual(&sol, &prob, DerivativeMode::Stored).unwrap();
        assert!(res.norm() <= 1e-9);
        let report = certificate_report(&cert);
        assert!(report.contains("verdict = "));
        assert_eq!(report, certificate_report(&newton_solve(&prob, &settings()).unwrap().1));
    }
}
