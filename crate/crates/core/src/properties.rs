//! Property suite: each check runs a measurement, compares it with its
//! tolerance and reports the measured values.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::analytic::Envelope;
use crate::basis::BoxDomain;
use crate::error::Result;
use crate::evolution::{integrate, solve_linear, Forcing, LinearProblem, Scheme};
use crate::fractional::{w_norm, x_norm, y_norm};
use crate::lifting::{harmonic_extension, lift_diagnostics, BoundaryData, Lift};
use crate::newton::{
    compose_nonhomogeneous, newton_solve, residual, x_distance, DerivativeMode, NewtonSettings, NkCertificate,
    NonlinearProblem,
};
use crate::operators::{bilinear_constant_probe, Dealiasing, NonlinearCoefficients, OperatorSet};
use crate::sampling::{random_low_mode_state, random_state, rng};
use crate::space::{BcFamily, Space, StateU};
use crate::verify::{
    assemble_dense, convergence_study, dense_galerkin_oracle, eigen_structure_check, manufactured_solution, MmsShape,
    RateTable,
};

/// Outcome of one property check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub name: String,
    pub pass: bool,
    /// Measured quantities, in a fixed order.
    pub values: Vec<(String, f64)>,
    pub detail: String,
}

impl Outcome {
    fn new(name: &str, pass: bool, values: Vec<(&str, f64)>, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            pass,
            values: values.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            detail: detail.into(),
        }
    }

    /// `name PASS key=value ...` on one line.
    pub fn line(&self) -> String {
        let mut s = format!("{} {}", self.name, if self.pass { "PASS" } else { "FAIL" });
        for (k, v) in &self.values {
            let _ = write!(s, " {k}={v:e}");
        }
        if !self.detail.is_empty() {
            let _ = write!(s, " ({})", self.detail);
        }
        s
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

fn variation(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    if max > 0.0 {
        (max - min) / max
    } else {
        0.0
    }
}

/// Gram matrix equals the identity and the quadrature stiffness matrix is
/// `diag(lambda)` for every basis of every listed `(family, dim)` pair.
pub fn eigen_structure(
    cases: &[(BcFamily, usize)],
    cutoffs: &[usize],
    resolution_multiplier: usize,
) -> Result<Outcome> {
    let (mut gram, mut stiff) = (0.0f64, 0.0f64);
    let mut bases = 0;
    for &(family, dim) in cases {
        let domain = BoxDomain::pi_box(dim)?;
        for &m in cutoffs {
            let space = Space::new(&domain, family, &vec![m; dim], 1.0, 1.0, 1.0)?;
            for c in 0..space.components() {
                let e = eigen_structure_check(space.basis(c), resolution_multiplier);
                gram = gram.max(e.gram_error);
                stiff = stiff.max(e.stiffness_error);
                bases += 1;
            }
        }
    }
    Ok(Outcome::new(
        "eigen_structure",
        gram <= 1e-8 && stiff <= 1e-8,
        vec![("gram_error", gram), ("stiffness_error", stiff), ("bases", bases as f64)],
        "",
    ))
}

/// `S + S^T = 0` for the assembled skew blocks and `<A u, u> = 0` on random
/// states.
pub fn skew_symmetry(ops: &OperatorSet, samples: usize, seed: u64) -> Outcome {
    let s = ops.assemble_skew();
    let n = s.rows;
    let mut sym: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            sym = sym.max((s.get(i, j) + s.get(j, i)).abs());
        }
    }
    let mut r = rng(seed);
    let mut energy: f64 = 0.0;
    for _ in 0..samples {
        let u = random_state(ops.space(), &mut r);
        energy = energy.max(ops.apply_skew(&u).dot(&u).abs() / u.dot(&u));
    }
    Outcome::new(
        &format!("skew_symmetry[{}]", ops.space().family()),
        sym <= 1e-12 && energy <= 1e-10,
        vec![("sym_max", sym), ("energy_ratio", energy)],
        "",
    )
}

/// Pseudospectral `B[u, z]` against the exactly assembled dense tensor.
pub fn bilinear_oracle(ops: &OperatorSet, samples: usize, resolution_multiplier: usize, seed: u64) -> Outcome {
    let sys = assemble_dense(ops.space(), ops.coefficients(), resolution_multiplier);
    let mut r = rng(seed);
    let mut err: f64 = 0.0;
    for _ in 0..samples {
        let u = random_state(ops.space(), &mut r);
        let z = random_state(ops.space(), &mut r);
        let dense = sys.apply_bilinear(u.data(), z.data());
        match ops.apply_bilinear(&u, &z) {
            Ok(p) => {
                for (a, b) in dense.iter().zip(p.data()) {
                    err = err.max((a - b).abs());
                }
            }
            Err(_) => err = f64::INFINITY,
        }
    }
    Outcome::new(&format!("bilinear_oracle[{}]", ops.space().family()), err <= 1e-10, vec![("max_error", err)], "")
}

/// Empirical bilinear constant for each sigma across cutoffs; passes when
/// it is finite and varies by less than 10% across cutoffs.
#[allow(clippy::too_many_arguments)]
pub fn bilinear_constant_stability(
    domain: &BoxDomain,
    family: BcFamily,
    cutoffs: &[usize],
    sigmas: &[f64],
    samples: usize,
    max_k: usize,
    seed: u64,
    coeffs: NonlinearCoefficients,
) -> Result<Outcome> {
    let dim = domain.dim();
    let mut values = Vec::new();
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for &sigma in sigmas.iter().filter(|&&s| family.admits_sigma(s)) {
        let mut cs = Vec::new();
        for &m in cutoffs {
            let space = Space::new(domain, family, &vec![m; dim], 1.0, 1.0, sigma)?;
            let ops = OperatorSet::new(&space, coeffs, Dealiasing::ThreeHalves)?;
            cs.push(bilinear_constant_probe(&ops, sigma, samples, max_k, &mut rng(seed))?);
        }
        let v = variation(&cs);
        pass &= cs.iter().all(|c| c.is_finite()) && v < 0.10;
        worst = worst.max(v);
        values.push((format!("c_b[sigma={sigma}]"), cs.iter().copied().fold(0.0, f64::max)));
        values.push((format!("variation[sigma={sigma}]"), v));
    }
    let mut out = Outcome::new("bilinear_constant", pass, vec![], format!("worst variation {worst:.4}"));
    out.values = values;
    Ok(out)
}

/// Random linear runs over several cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearSweep {
    pub family: BcFamily,
    pub domain: BoxDomain,
    pub cutoffs: Vec<usize>,
    pub runs: usize,
    pub horizon: f64,
    pub dt: f64,
    pub zeta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub max_k: usize,
    pub seed: u64,
}

impl LinearSweep {
    fn data(&self, space: &Arc<Space>, run: usize) -> (StateU, Forcing) {
        let mut r = rng(self.seed.wrapping_add(run as u64));
        let g = random_low_mode_state(space, &mut r, self.max_k);
        let f = random_low_mode_state(space, &mut r, self.max_k);
        let omega = 1.0 + run as f64 % 5.0;
        (g, Forcing::Modal(vec![(Envelope::Const, f.scaled(0.5)), (Envelope::Sine { omega, phase: 0.3 }, f)]))
    }
}

/// Energy-bound ratio and a-priori ratio over a linear sweep, plus the
/// quadratic homogeneity of the energies under data scaling.
pub fn energy_and_apriori(sweep: &LinearSweep) -> Result<(Outcome, Outcome)> {
    let dim = sweep.domain.dim();
    let mut ratios = Vec::new();
    let mut energy_max = Vec::new();
    let mut apriori_max = Vec::new();
    let mut finite = true;
    let mut homogeneity: f64 = 0.0;
    for &m in &sweep.cutoffs {
        let space = Space::new(&sweep.domain, sweep.family, &vec![m; dim], sweep.zeta, sweep.mu, sweep.sigma)?;
        let ops = OperatorSet::new(&space, NonlinearCoefficients::zero(), Dealiasing::ThreeHalves)?;
        let mut best: f64 = 0.0;
        let mut best_energy: f64 = 0.0;
        for run in 0..sweep.runs {
            let (g, f) = sweep.data(&space, run);
            let prob = LinearProblem::new(&ops, g.clone(), f.clone(), sweep.horizon, sweep.dt);
            let (traj, report) = solve_linear(&prob)?;
            finite &= report.finite;
            ratios.push(report.ratio);
            best_energy = best_energy.max(report.ratio);
            let fs = f.sample(&ops, traj.times())?;
            let a = x_norm(&traj)? / (y_norm(&fs) + w_norm(&g));
            finite &= a.is_finite();
            best = best.max(a);
            if run == 0 {
                let s = 3.0;
                let scaled = LinearProblem::new(&ops, g.scaled(s), f.scaled(s), sweep.horizon, sweep.dt);
                let (_, rs) = solve_linear(&scaled)?;
                let e = (rs.final_energy() / (s * s * report.final_energy()) - 1.0).abs();
                let es = (rs.final_energy_sigma() / (s * s * report.final_energy_sigma()) - 1.0).abs();
                homogeneity = homogeneity.max(e).max(es);
            }
        }
        apriori_max.push(best);
        energy_max.push(best_energy);
    }
    // the bound is the supremum over data; it must not drift with the cutoff
    let energy_var = variation(&energy_max);
    let energy = Outcome::new(
        "energy_bound",
        finite && energy_var < 0.25,
        vec![
            ("max_ratio", energy_max.iter().copied().fold(0.0, f64::max)),
            ("cutoff_variation", energy_var),
            ("spread_over_data", variation(&ratios)),
            ("runs", ratios.len() as f64),
        ],
        "",
    );
    let apriori_var = variation(&apriori_max);
    let apriori = Outcome::new(
        "apriori_bound",
        finite && apriori_var < 0.25 && homogeneity <= 1e-10,
        vec![
            ("max_ratio", apriori_max.iter().copied().fold(0.0, f64::max)),
            ("cutoff_variation", apriori_var),
            ("homogeneity_error", homogeneity),
        ],
        "",
    );
    Ok((energy, apriori))
}

/// Newton-Kantorovich run on random small data.
#[allow(clippy::too_many_arguments)]
pub fn newton_kantorovich(
    ops: &OperatorSet,
    scale: f64,
    horizon: f64,
    dt: f64,
    seed: u64,
    max_k: usize,
    settings: &NewtonSettings,
) -> Result<(Outcome, NkCertificate)> {
    let space = ops.space();
    let mut r = rng(seed);
    let g = random_low_mode_state(space, &mut r, max_k).scaled(scale);
    let f = random_low_mode_state(space, &mut r, max_k).scaled(scale);
    let prob = NonlinearProblem::homogeneous(ops, Forcing::Modal(vec![(Envelope::Const, f)]), g, horizon, dt);
    let (_, cert) = newton_solve(&prob, settings)?;
    let (slope, r2) = cert.fit.unwrap_or((f64::NAN, f64::NAN));
    let last = cert.residuals.last().copied().unwrap_or(f64::NAN);
    let pass = cert.condition <= 0.25
        && (slope - 2.0).abs() <= 0.3
        && r2 >= 0.95
        && last < 1e-9
        && cert.iterations <= 8
        && cert.contained;
    let out = Outcome::new(
        "newton_kantorovich",
        pass,
        vec![
            ("condition", cert.condition),
            ("fit_order", slope),
            ("fit_r2", r2),
            ("final_residual", last),
            ("iterations", cert.iterations as f64),
            ("max_distance", cert.max_distance),
            ("r_minus", cert.r_minus.unwrap_or(f64::NAN)),
        ],
        "",
    );
    Ok((out, cert))
}

/// Production solver against the dense oracle, linear and nonlinear, on
/// random small data.
pub fn oracle_equivalence(
    ops: &OperatorSet,
    horizon: f64,
    dt: f64,
    tolerance: f64,
    resolution_multiplier: usize,
    amplitude: f64,
    seed: u64,
) -> Result<Outcome> {
    let space = ops.space();
    let sys = assemble_dense(space, ops.coefficients(), resolution_multiplier);
    let mut r = rng(seed);
    let g = random_low_mode_state(space, &mut r, 2).scaled(amplitude);
    let f = Forcing::Modal(vec![(
        Envelope::Sine { omega: 3.0, phase: 0.2 },
        random_low_mode_state(space, &mut r, 2).scaled(amplitude),
    )]);
    let lin = integrate(&LinearProblem::new(ops, g.clone(), f.clone(), horizon, dt))?;
    let lin_ref = dense_galerkin_oracle(&sys, ops, &g, &f, lin.times(), false, tolerance)?;
    let d_lin = x_distance(&lin, &lin_ref)?;
    let prob = NonlinearProblem::homogeneous(ops, f.clone(), g.clone(), horizon, dt);
    let settings = NewtonSettings { certify: false, tol: 1e-12, ..NewtonSettings::default() };
    let (w, _) = newton_solve(&prob, &settings)?;
    let nl_ref = dense_galerkin_oracle(&sys, ops, &g, &f, w.times(), true, tolerance)?;
    let d_nl = x_distance(&w, &nl_ref)?;
    Ok(Outcome::new(
        &format!("oracle_equivalence[{}]", space.family()),
        d_lin <= 1e-6 && d_nl <= 1e-6,
        vec![("linear_x_distance", d_lin), ("nonlinear_x_distance", d_nl)],
        "",
    ))
}

/// Observed time order of a scheme on a linear problem against the dense
/// oracle (cutoff must be tiny).
pub fn time_order(
    ops: &OperatorSet,
    scheme: Scheme,
    dts: &[f64],
    horizon: f64,
    seed: u64,
    expected: f64,
) -> Result<(Outcome, RateTable)> {
    let space = ops.space();
    let sys = assemble_dense(space, ops.coefficients(), 6);
    let mut r = rng(seed);
    let g = random_low_mode_state(space, &mut r, 2);
    let f = Forcing::Modal(vec![(Envelope::Sine { omega: 2.0, phase: 0.1 }, random_low_mode_state(space, &mut r, 2))]);
    let table = convergence_study("dt", dts, |dt| {
        let traj = integrate(&LinearProblem::new(ops, g.clone(), f.clone(), horizon, dt).with_scheme(scheme))?;
        let reference = dense_galerkin_oracle(&sys, ops, &g, &f, traj.times(), false, 1e-12)?;
        Ok((traj.last() - reference.last()).norm())
    })?;
    let name = match scheme {
        Scheme::Cnab2 => "time_order[cnab2]",
        Scheme::ImexEuler => "time_order[imex_euler]",
    };
    let out = Outcome::new(
        name,
        table.monotone && (table.fitted_rate - expected).abs() <= 0.2,
        vec![("fitted_rate", table.fitted_rate), ("expected", expected)],
        "",
    );
    Ok((out, table))
}

/// Manufactured-solution study for one family: time order with a modal
/// profile and spectral decay in the cutoff with an analytic profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmsStudy {
    pub family: BcFamily,
    pub domain: BoxDomain,
    pub zeta: f64,
    pub mu: f64,
    pub coefficients: NonlinearCoefficients,
    pub amplitude: f64,
    pub boundary_amplitude: f64,
    pub rate: f64,
    pub dt_levels: Vec<f64>,
    pub dt_cutoff: usize,
    pub dt_horizon: f64,
    pub cutoff_levels: Vec<usize>,
    pub cutoff_dt: f64,
    pub cutoff_horizon: f64,
    /// Profile parameter of the analytic shape.
    pub b: f64,
}

impl MmsStudy {
    /// Study settings used by the default property suite.
    pub fn standard(family: BcFamily, boundary_amplitude: f64) -> Result<Self> {
        let dim = if family.is_hodge() { 3 } else { 2 };
        Ok(Self {
            family,
            domain: BoxDomain::pi_box(dim)?,
            zeta: 0.5,
            mu: 0.5,
            coefficients: NonlinearCoefficients::default(),
            amplitude: 0.2,
            boundary_amplitude: if family.is_hodge() { 0.0 } else { boundary_amplitude },
            rate: -1.0,
            dt_levels: vec![0.02, 0.01, 0.005],
            dt_cutoff: if dim == 3 { 3 } else { 4 },
            dt_horizon: 0.5,
            cutoff_levels: vec![2, 3, 4],
            cutoff_dt: 1e-3,
            cutoff_horizon: 0.2,
            b: 6.0,
        })
    }

    fn solve(&self, shape: MmsShape, m: usize, dt: f64, horizon: f64, worst: &mut f64) -> Result<f64> {
        let dim = self.domain.dim();
        let space = Space::new(&self.domain, self.family, &vec![m; dim], self.zeta, self.mu, 1.0)?;
        let ops = OperatorSet::new(&space, self.coefficients, Dealiasing::ThreeHalves)?;
        let sol = manufactured_solution(
            self.family,
            &self.domain,
            shape,
            self.amplitude,
            self.boundary_amplitude,
            self.rate,
        )?;
        let prob = sol.problem(&ops, horizon, dt)?;
        let (w, cert) = newton_solve(&prob, &NewtonSettings { certify: false, ..NewtonSettings::default() })?;
        *worst = worst.max(cert.residuals.last().copied().unwrap_or(f64::INFINITY));
        sol.l2_error(w.last(), horizon, 40)
    }

    pub fn run(&self) -> Result<(Outcome, RateTable, RateTable)> {
        let mut worst: f64 = 0.0;
        let dt_table = convergence_study("dt", &self.dt_levels, |dt| {
            self.solve(MmsShape::Modal, self.dt_cutoff, dt, self.dt_horizon, &mut worst)
        })?;
        let levels: Vec<f64> = self.cutoff_levels.iter().map(|&m| m as f64).collect();
        let cut_table = convergence_study("cutoff", &levels, |m| {
            self.solve(MmsShape::Analytic { b: self.b }, m as usize, self.cutoff_dt, self.cutoff_horizon, &mut worst)
        })?;
        let min_reduction = cut_table.reductions.iter().copied().fold(f64::INFINITY, f64::min);
        let pass = worst <= 1e-8
            && dt_table.monotone
            && (dt_table.fitted_rate - 2.0).abs() <= 0.2
            && cut_table.monotone
            && min_reduction >= 10.0;
        let out = Outcome::new(
            &format!("manufactured[{}]", self.family),
            pass,
            vec![
                ("max_residual", worst),
                ("dt_rate", dt_table.fitted_rate),
                ("cutoff_min_reduction", min_reduction),
                ("finest_error", cut_table.errors.last().copied().unwrap_or(f64::NAN)),
            ],
            if self.boundary_amplitude != 0.0 { "nonhomogeneous" } else { "homogeneous" },
        );
        Ok((out, dt_table, cut_table))
    }
}

/// Harmonicity and trace fidelity of the lift at several times.
pub fn lifting_fidelity(
    data: &BoundaryData,
    family: BcFamily,
    domain: &BoxDomain,
    times: &[f64],
) -> Result<(Outcome, Lift)> {
    let lift = harmonic_extension(data, family, domain)?;
    let (mut harm, mut trace, mut mag) = (0.0f64, 0.0f64, 0.0f64);
    for &t in times {
        let d = lift_diagnostics(&lift, data, family, domain, t, 12);
        harm = harm.max(d.harmonicity);
        trace = trace.max(d.trace);
        mag = mag.max(d.magnitude);
    }
    let out = Outcome::new(
        &format!("lifting[{family}]"),
        harm <= 1e-8 && trace <= 1e-8,
        vec![("harmonicity", harm), ("trace", trace), ("magnitude", mag)],
        "",
    );
    Ok((out, lift))
}

/// Residual of `u0 + u~` (split solve) with respect to the direct
/// formulation: with stored derivatives it vanishes to the Newton tolerance,
/// with finite-difference derivatives it decays at the scheme's order.
pub fn composed_residual(
    ops: &OperatorSet,
    lift: &Lift,
    initial_minus_lift: &StateU,
    dts: &[f64],
    horizon: f64,
) -> Result<(Outcome, RateTable)> {
    let mut stored: f64 = 0.0;
    let settings = NewtonSettings { certify: false, ..NewtonSettings::default() };
    let table = convergence_study("dt", dts, |dt| {
        let (split, uz) = NonlinearProblem::split(ops, Forcing::Zero, initial_minus_lift.clone(), lift, horizon, dt)?;
        let direct = NonlinearProblem::direct(ops, Forcing::Zero, initial_minus_lift.clone(), lift, horizon, dt)?;
        let (u0, _) = newton_solve(&split, &settings)?;
        let (sum, res) = compose_nonhomogeneous(&u0, &uz, &direct)?;
        stored = stored.max(res.norm());
        Ok(residual(&sum, &direct, DerivativeMode::FiniteDifference)?.norm())
    })?;
    let out = Outcome::new(
        "composed_residual",
        stored <= 1e-8 && table.monotone && (table.fitted_rate - 2.0).abs() <= 0.3,
        vec![("stored_residual", stored), ("fd_rate", table.fitted_rate)],
        "",
    );
    Ok((out, table))
}

/// Certificates of the split nonhomogeneous solve across sigma values.
#[allow(clippy::too_many_arguments)]
pub fn sigma_sweep(
    space: &Arc<Space>,
    coeffs: NonlinearCoefficients,
    lift: &Lift,
    initial_minus_lift: &StateU,
    sigmas: &[f64],
    horizon: f64,
    dt: f64,
    settings: &NewtonSettings,
) -> Result<(Outcome, Vec<(f64, NkCertificate)>)> {
    let mut certs = Vec::new();
    let mut values = Vec::new();
    for &sigma in sigmas {
        let sp = space.with_sigma(sigma)?;
        let ops = OperatorSet::new(&sp, coeffs, Dealiasing::ThreeHalves)?;
        let w0 = StateU::from_vec(&sp, initial_minus_lift.data().to_vec())?;
        let (split, _) = NonlinearProblem::split(&ops, Forcing::Zero, w0, lift, horizon, dt)?;
        let (_, cert) = newton_solve(&split, settings)?;
        values.push((format!("condition[sigma={sigma}]"), cert.condition));
        certs.push((sigma, cert));
    }
    let pass = certs.iter().all(|(_, c)| c.pass());
    let mut out = Outcome::new("sigma_sweep", pass, vec![], "");
    out.values = values;
    Ok((out, certs))
}

/// Plain-text report of a list of outcomes.
pub fn report(outcomes: &[Outcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        s.push_str(&o.line());
        s.push('\n');
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.name.as_str()).collect();
    if failed.is_empty() {
        s.push_str("summary PASS\n");
    } else {
        let _ = writeln!(s, "summary FAIL {}", failed.join(" "));
    }
    s
}
