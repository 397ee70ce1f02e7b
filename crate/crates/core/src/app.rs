//! Subcommand drivers behind the `nlac` binary. Every driver reads a
//! validated configuration, writes its artifacts into an output directory
//! and returns a status that maps onto the process exit code.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use crate::analytic::{AnalyticState, Envelope};
use crate::config::{modal_data, ConvergenceAxis, Formulation, LoadedConfig, SweepParameter};
use crate::error::{Error, Result};
use crate::evolution::{energy_functional, Forcing};
use crate::fractional::{frac_norm_sq, w_exponent, x_space_exponent, y_exponent};
use crate::lifting::{check_compatibility, harmonic_extension, lift_diagnostics, Lift};
use crate::newton::{certificate_report, newton_solve, NewtonSettings, NkCertificate, NonlinearProblem};
use crate::operators::OperatorSet;
use crate::output::{heat_map, line_plot, num, write_csv};
use crate::properties::{self, LinearSweep, MmsStudy, Outcome};
use crate::sampling::rng;
use crate::space::{Space, StateU, Trajectory};
use crate::verify::{manufactured_solution, rate_table, rate_table_csv, ManufacturedSolution, RateTable};

/// Final status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    CertificateFail,
    PropertyFail,
    Divergence,
    ConfigError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::ConfigError => 2,
            Status::CertificateFail => 3,
            Status::PropertyFail => 4,
            Status::Divergence => 5,
        }
    }

    /// Status for an error that aborted a command.
    pub fn from_error(e: &Error) -> Self {
        match e {
            Error::Divergence(_) | Error::BlowUp { .. } => Status::Divergence,
            _ => Status::ConfigError,
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct CommandReport {
    pub status: Status,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn write(path: &Path, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(path, contents)?;
    files.push(path.to_path_buf());
    Ok(())
}

fn csv(path: &Path, header: &[&str], rows: &[Vec<String>], files: &mut Vec<PathBuf>) -> Result<()> {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    write_csv(path, &header, rows)?;
    files.push(path.to_path_buf());
    Ok(())
}

/// Column label of a coefficient, e.g. `p[1 2]` or `v2[0 1 1]`.
pub fn mode_label(component: usize, k: &[usize]) -> String {
    let name = if component == 0 { "p".to_string() } else { format!("v{component}") };
    let idx: Vec<String> = k.iter().map(|x| x.to_string()).collect();
    format!("{name}[{}]", idx.join(" "))
}

/// Everything needed to pose the nonlinear problem of a run.
struct RunData {
    forcing: Forcing,
    lift: Lift,
    initial_minus_lift: StateU,
    manufactured: Option<ManufacturedSolution>,
    compatibility: Option<f64>,
}

fn run_data(cfg: &LoadedConfig, ops: &OperatorSet) -> Result<RunData> {
    let c = &cfg.config;
    let space = ops.space();
    let family = cfg.family();
    let domain = cfg.domain()?;
    let mut r = rng(c.seed);
    if let Some(m) = &c.manufactured {
        let sol = manufactured_solution(family, &domain, m.shape, m.amplitude, m.boundary_amplitude, m.rate)?;
        return Ok(RunData {
            forcing: sol.forcing(ops)?,
            lift: sol.lift.clone(),
            initial_minus_lift: sol.initial_minus_lift(space)?,
            manufactured: Some(sol),
            compatibility: None,
        });
    }
    let forcing = Forcing::Modal(modal_data(space, &c.forcing.modes, c.forcing.random.as_ref(), &mut r)?);
    let lift = harmonic_extension(&cfg.boundary(), family, &domain)?;
    let mut g = StateU::zeros(space);
    for (env, u) in modal_data(space, &c.initial.modes, c.initial.random.as_ref(), &mut r)? {
        g.axpy(env.value(0.0), &u);
    }
    let mut compatibility = None;
    let initial_minus_lift = if c.initial.add_lift || lift.is_zero() {
        g
    } else {
        // spectral initial data have zero Dirichlet traces, so they are
        // compatible only when the lift's traces vanish at t = 0
        let mismatch = check_compatibility(
            &AnalyticState::zero(space.dim()),
            &lift,
            family,
            &domain,
            space.sigma(),
            c.numerics.compatibility_tol,
        )?;
        compatibility = Some(mismatch);
        &g - &lift.field.projected(space)?.at(0.0)
    };
    Ok(RunData { forcing, lift, initial_minus_lift, manufactured: None, compatibility })
}

fn settings(cfg: &LoadedConfig) -> NewtonSettings {
    let n = &cfg.config.numerics;
    NewtonSettings {
        tol: n.newton_tol,
        k_max: n.newton_max_iter,
        probe_samples: n.probe_samples,
        probe_max_k: n.probe_max_k,
        seed: cfg.config.seed,
        smallness_radius: n.smallness_radius,
        certify: true,
    }
}

/// Solve the configured nonlinear problem. Returns the interior unknown
/// `w = u - h` (including the lifted linear part for the split
/// formulation) and the certificate.
fn solve(cfg: &LoadedConfig, ops: &OperatorSet, data: &RunData, certify: bool) -> Result<(Trajectory, NkCertificate)> {
    let p = &cfg.config.problem;
    let (horizon, dt) = (p.horizon, p.dt);
    let s = NewtonSettings { certify, ..settings(cfg) };
    let radius = cfg.config.numerics.radius;
    let check_radius = |b: &Trajectory| -> Result<()> {
        if let Some(r) = radius {
            let n = crate::fractional::x_norm(b)?;
            if n > r {
                return Err(Error::RadiusViolation { norm: n, radius: r });
            }
        }
        Ok(())
    };
    if data.lift.is_zero() {
        let mut prob =
            NonlinearProblem::homogeneous(ops, data.forcing.clone(), data.initial_minus_lift.clone(), horizon, dt);
        prob.scheme = cfg.scheme();
        return newton_solve(&prob, &s);
    }
    let lift_proj = data.lift.field.projected(ops.space())?;
    let times = crate::evolution::step_grid(horizon, dt)?;
    let lift_traj = Trajectory::new(
        times.clone(),
        times.iter().map(|&t| lift_proj.at(t)).collect(),
        Some(times.iter().map(|&t| lift_proj.derivative_at(t)).collect()),
    )?;
    match p.formulation {
        Formulation::Direct => {
            check_radius(&lift_traj)?;
            let mut prob = NonlinearProblem::direct(
                ops,
                data.forcing.clone(),
                data.initial_minus_lift.clone(),
                &data.lift,
                horizon,
                dt,
            )?;
            prob.scheme = cfg.scheme();
            newton_solve(&prob, &s)
        }
        Formulation::Split => {
            let (mut prob, uz) = NonlinearProblem::split(
                ops,
                data.forcing.clone(),
                data.initial_minus_lift.clone(),
                &data.lift,
                horizon,
                dt,
            )?;
            check_radius(&uz.add(&lift_traj)?)?;
            prob.scheme = cfg.scheme();
            let (u0, cert) = newton_solve(&prob, &s)?;
            Ok((u0.add(&uz)?, cert))
        }
    }
}

fn trajectory_rows(w: &Trajectory, lift: &Lift, stride: usize) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let space = w.space();
    let sigma = space.sigma();
    let mut header = vec!["time".to_string()];
    for c in 0..space.components() {
        for m in space.basis(c).modes() {
            header.push(mode_label(c, &m.k));
        }
    }
    for h in ["h_norm", "w_norm", "energy", "energy_sigma"] {
        header.push(h.to_string());
    }
    let energy = energy_functional(w, 0.0);
    let energy_sigma = energy_functional(w, 0.5 * sigma);
    let lift_proj = if lift.is_zero() { None } else { Some(lift.field.projected(space)?) };
    let mut rows = Vec::new();
    for (i, (t, u)) in w.times().iter().zip(w.states()).enumerate() {
        if i % stride != 0 && i + 1 != w.len() {
            continue;
        }
        let mut row = vec![num(*t)];
        row.extend(u.data().iter().map(|&x| num(x)));
        let h_norm = lift_proj.as_ref().map_or(0.0, |p| p.at(*t).norm());
        row.push(num(h_norm));
        row.push(num(u.norm()));
        row.push(num(energy[i]));
        row.push(num(energy_sigma[i]));
        rows.push(row);
    }
    Ok((header, rows))
}

fn newton_rows(cert: &NkCertificate) -> Vec<Vec<String>> {
    (0..cert.residuals.len())
        .map(|i| {
            let opt = |v: &[f64], j: usize| v.get(j).map_or(String::new(), |&x| num(x));
            vec![i.to_string(), num(cert.residuals[i]), opt(&cert.step_norms, i), opt(&cert.distances, i)]
        })
        .collect()
}

/// Pressure of `w + h` at the final time on a slice through the middle of
/// the remaining axes.
fn pressure_slice(w: &Trajectory, lift: &Lift, n: usize) -> Result<Vec<f64>> {
    let space = w.space();
    let ext = space.domain().extents().to_vec();
    let t = w.horizon();
    let p = w.last().p();
    let mut x: Vec<f64> = ext.iter().map(|e| 0.5 * e).collect();
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            x[0] = ext[0] * i as f64 / (n - 1) as f64;
            x[1] = ext[1] * (n - 1 - j) as f64 / (n - 1) as f64;
            out.push(p.eval(&x)? + lift.field.value(0, t, &x));
        }
    }
    Ok(out)
}

fn plot_series(w: &Trajectory, lift: &Lift) -> Result<(String, String)> {
    let space = w.space();
    let lift_proj = if lift.is_zero() { None } else { Some(lift.field.projected(space)?) };
    let times = w.times();
    let wn: Vec<(f64, f64)> = times.iter().zip(w.states()).map(|(t, u)| (*t, u.norm())).collect();
    let hn: Vec<(f64, f64)> = times.iter().map(|&t| (t, lift_proj.as_ref().map_or(0.0, |p| p.at(t).norm()))).collect();
    let norms = line_plot("coefficient norms", "t", &[("|w|".into(), wn), ("|Ph|".into(), hn)], false);
    let e0 = energy_functional(w, 0.0);
    let es = energy_functional(w, 0.5 * space.sigma());
    let energy = line_plot(
        "energy functionals",
        "t",
        &[
            ("E[w]".into(), times.iter().copied().zip(e0).collect()),
            ("E[A^(sigma/2) w]".into(), times.iter().copied().zip(es).collect()),
        ],
        false,
    );
    Ok((norms, energy))
}

/// Solve the configured problem and write trajectory, certificate, Newton
/// history and plots.
pub fn cmd_simulate(cfg: &LoadedConfig, out: &Path) -> Result<CommandReport> {
    simulate_with_certificate(cfg, out).map(|(r, _)| r)
}

fn simulate_with_certificate(cfg: &LoadedConfig, out: &Path) -> Result<(CommandReport, NkCertificate)> {
    fs::create_dir_all(out)?;
    let ops = cfg.operators()?;
    let data = run_data(cfg, &ops)?;
    let (w, cert) = solve(cfg, &ops, &data, true)?;
    let mut files = Vec::new();

    let (header, rows) = trajectory_rows(&w, &data.lift, cfg.config.output.stride)?;
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv(&out.join("trajectory.csv"), &header, &rows, &mut files)?;
    csv(&out.join("newton.csv"), &["iteration", "residual", "step_norm", "distance"], &newton_rows(&cert), &mut files)?;

    let space = ops.space();
    let mut text = String::new();
    text.push_str(&format!("family = {}\n", space.family().name()));
    text.push_str(&format!("dim = {}\n", space.dim()));
    text.push_str(&format!("cutoff = {:?}\n", space.cutoff()));
    text.push_str(&format!("sigma = {}\n", space.sigma()));
    text.push_str(&format!("seed = {}\n", cfg.config.seed));
    text.push_str(&format!("lift = {}\n", if data.lift.is_zero() { "zero" } else { "nonzero" }));
    if let Some(m) = data.compatibility {
        text.push_str(&format!("compatibility_mismatch = {}\n", num(m)));
    }
    let parts = crate::fractional::x_norm_parts(&w)?;
    text.push_str(&format!("x_norm_spatial = {}\n", num(parts.spatial)));
    text.push_str(&format!("x_norm_temporal = {}\n", num(parts.temporal)));
    text.push_str(&format!(
        "exponents = x:{} y:{} w:{}\n",
        x_space_exponent(space.sigma()) + 0.0,
        y_exponent(space.sigma()) + 0.0,
        w_exponent(space.sigma()) + 0.0
    ));
    text.push_str(&format!("initial_w_sigma_norm_sq = {}\n", num(frac_norm_sq(w.initial(), 0.5 * space.sigma()))));
    if let Some(sol) = &data.manufactured {
        let err = sol.l2_error(w.last(), w.horizon(), 40)?;
        text.push_str(&format!("manufactured_l2_error = {}\n", num(err)));
    }
    for warning in &cfg.warnings {
        text.push_str(&format!("warning = {warning}\n"));
    }
    text.push('\n');
    text.push_str(&certificate_report(&cert));
    write(&out.join("certificate.txt"), &text, &mut files)?;

    if cfg.config.output.plots {
        let (norms, energy) = plot_series(&w, &data.lift)?;
        write(&out.join("norms.svg"), &norms, &mut files)?;
        write(&out.join("energy.svg"), &energy, &mut files)?;
        let res: Vec<(f64, f64)> = cert.residuals.iter().enumerate().map(|(i, r)| (i as f64, *r)).collect();
        write(
            &out.join("residuals.svg"),
            &line_plot("Newton residuals", "iteration", &[("residual".into(), res)], true),
            &mut files,
        )?;
        let n = 41;
        let slice = pressure_slice(&w, &data.lift, n)?;
        write(&out.join("pressure.svg"), &heat_map("pressure at final time", n, n, &slice), &mut files)?;
    }

    let status = if cert.pass() { Status::Pass } else { Status::CertificateFail };
    let summary = format!(
        "simulate {}: iterations {} residual {} condition {}",
        if cert.pass() { "PASS" } else { "FAIL" },
        cert.iterations,
        num(cert.residuals.last().copied().unwrap_or(f64::NAN)),
        num(cert.condition)
    );
    Ok((CommandReport { status, files, summary }, cert))
}

/// Largest step at most `dt` that divides `horizon` and respects the
/// explicit stability guard of `ops` with some margin.
fn safe_dt(ops: &OperatorSet, dt: f64, horizon: f64) -> f64 {
    let limit = 0.4 / ops.skew_norm(40).max(1e-12);
    let target = dt.min(limit);
    horizon / (horizon / target).ceil()
}

/// Boundary data used by the lifting checks: the configured data, or a
/// sample set when none are configured.
fn verification_boundary(cfg: &LoadedConfig) -> crate::lifting::BoundaryData {
    let data = cfg.boundary();
    if data.is_zero() {
        crate::verify::sample_boundary_data(
            cfg.family(),
            cfg.config.domain.dim,
            0.05,
            Envelope::Sine { omega: 2.0, phase: 0.3 },
        )
    } else {
        data
    }
}

/// Run the property suite for the configured family and dimension.
pub fn verify_outcomes(cfg: &LoadedConfig) -> Result<Vec<Outcome>> {
    let c = &cfg.config;
    let v = &c.verify;
    let family = cfg.family();
    let domain = cfg.domain()?;
    let dim = domain.dim();
    let coeffs = c.coefficients.resolve();
    let p = &c.problem;
    let seed = c.seed;
    let mut outcomes = Vec::new();

    outcomes.push(properties::eigen_structure(&[(family, dim)], &v.cutoffs, v.resolution_multiplier)?);

    let ops = cfg.operators()?;
    outcomes.push(properties::skew_symmetry(&ops, v.samples, seed));

    let small = Space::new(&domain, family, &vec![v.oracle_cutoff; dim], p.zeta, p.mu, p.sigma)?;
    let small_ops = OperatorSet::new(&small, coeffs, cfg.dealiasing())?;
    outcomes.push(properties::bilinear_oracle(&small_ops, v.samples, v.resolution_multiplier, seed));

    outcomes.push(properties::bilinear_constant_stability(
        &domain, family, &v.cutoffs, &v.sigmas, v.samples, 2, seed, coeffs,
    )?);

    let finest = Space::new(&domain, family, &vec![*v.cutoffs.iter().max().unwrap_or(&4); dim], p.zeta, p.mu, p.sigma)?;
    let sweep_dt = safe_dt(&OperatorSet::new(&finest, coeffs, cfg.dealiasing())?, p.dt, p.horizon);
    let sweep = LinearSweep {
        family,
        domain: domain.clone(),
        cutoffs: v.cutoffs.clone(),
        runs: v.samples,
        horizon: p.horizon,
        dt: sweep_dt,
        zeta: p.zeta,
        mu: p.mu,
        sigma: p.sigma,
        max_k: 2,
        seed,
    };
    let (energy, apriori) = properties::energy_and_apriori(&sweep)?;
    outcomes.push(energy);
    outcomes.push(apriori);

    let nk_dt = safe_dt(&ops, p.dt, p.horizon);
    let (nk, _) = properties::newton_kantorovich(&ops, 0.1, p.horizon, nk_dt, seed, 2, &settings(cfg))?;
    outcomes.push(nk);

    let (oracle_h, oracle_dt) = (v.oracle_horizon, v.oracle_dt);
    let oracle_ops = small_ops.clone();
    outcomes.push(properties::oracle_equivalence(
        &oracle_ops,
        oracle_h,
        oracle_dt,
        v.oracle_tolerance,
        v.resolution_multiplier,
        0.1,
        seed,
    )?);

    let (order, _) = properties::time_order(&small_ops, cfg.scheme(), &[0.02, 0.01, 0.005], 0.5, seed, 2.0)?;
    outcomes.push(order);

    let (mms, _, _) = MmsStudy::standard(family, 0.05)?.run()?;
    outcomes.push(mms);

    let data = verification_boundary(cfg);
    let (lifting, lift) = properties::lifting_fidelity(&data, family, &domain, &[0.0, 0.5 * p.horizon, p.horizon])?;
    outcomes.push(lifting);

    let mid = Space::new(&domain, family, &vec![4; dim], p.zeta, p.mu, p.sigma)?;
    let mid_ops = OperatorSet::new(&mid, coeffs, cfg.dealiasing())?;
    let w0 = StateU::unit(&mid, 0, &vec![1; dim], 0.05)?;
    let (composed, _) = properties::composed_residual(&mid_ops, &lift, &w0, &[0.02, 0.01, 0.005], 0.5)?;
    outcomes.push(composed);

    let sigmas: Vec<f64> = v.sigmas.iter().copied().filter(|&s| family.admits_sigma(s)).collect();
    let (sweep, _) = properties::sigma_sweep(&mid, coeffs, &lift, &w0, &sigmas, 0.5, 0.005, &settings(cfg))?;
    outcomes.push(sweep);
    Ok(outcomes)
}

pub fn cmd_verify(cfg: &LoadedConfig, out: &Path) -> Result<CommandReport> {
    fs::create_dir_all(out)?;
    let outcomes = verify_outcomes(cfg)?;
    let mut files = Vec::new();
    let text = properties::report(&outcomes);
    write(&out.join("verify_report.txt"), &text, &mut files)?;
    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .flat_map(|o| {
            o.values.iter().map(move |(k, v)| {
                vec![o.name.clone(), if o.pass { "PASS" } else { "FAIL" }.to_string(), k.clone(), num(*v)]
            })
        })
        .collect();
    csv(&out.join("verify.csv"), &["property", "status", "quantity", "value"], &rows, &mut files)?;
    let pass = outcomes.iter().all(|o| o.pass);
    let status = if pass { Status::Pass } else { Status::PropertyFail };
    let summary = text.lines().last().unwrap_or("").to_string();
    Ok(CommandReport { status, files, summary })
}

/// Copy of the configuration with one value changed.
fn variant(cfg: &LoadedConfig, edit: impl FnOnce(&mut crate::config::RunConfig)) -> Result<LoadedConfig> {
    let mut c = cfg.config.clone();
    edit(&mut c);
    LoadedConfig::from_config(c)
}

/// Embed a state into a finer space with the same family and domain.
fn embed(u: &StateU, fine: &Arc<Space>) -> Result<StateU> {
    let mut out = StateU::zeros(fine);
    for c in 0..fine.components() {
        let coarse = u.space().basis(c);
        let range = fine.range(c);
        for (i, m) in coarse.modes().iter().enumerate() {
            let j = fine
                .basis(c)
                .position(&m.k)
                .ok_or_else(|| Error::SizeMismatch(format!("mode {:?} missing from the finer space", m.k)))?;
            out.data_mut()[range.start + j] = u.component(c)[i];
        }
    }
    Ok(out)
}

/// Refinement study along the configured axis. Errors are measured against
/// the manufactured solution when one is configured, else against the
/// finest level.
pub fn convergence_table(cfg: &LoadedConfig) -> Result<RateTable> {
    let conv = cfg
        .config
        .convergence
        .as_ref()
        .ok_or_else(|| Error::Config("the convergence command needs a [convergence] section".into()))?;
    let (name, levels) = match conv.axis {
        ConvergenceAxis::Dt => ("dt", conv.levels.clone()),
        ConvergenceAxis::Cutoff => ("cutoff", conv.levels.clone()),
    };
    let level_cfg = |level: f64| {
        variant(cfg, |c| match conv.axis {
            ConvergenceAxis::Dt => c.problem.dt = level,
            ConvergenceAxis::Cutoff => c.problem.cutoff = crate::config::CutoffSpec::Uniform(level.round() as usize),
        })
    };
    let mut finals = Vec::new();
    let mut errors = Vec::new();
    for &level in &levels {
        let lc = level_cfg(level)?;
        let ops = lc.operators()?;
        let data = run_data(&lc, &ops)?;
        let (w, _) = solve(&lc, &ops, &data, false)?;
        if let Some(sol) = &data.manufactured {
            errors.push(sol.l2_error(w.last(), w.horizon(), 40)?);
        }
        finals.push(w.last().clone());
    }
    if cfg.config.manufactured.is_some() {
        return rate_table(name, &levels, &errors);
    }
    let reference = finals.last().expect("validated levels");
    let fine = reference.space().clone();
    let mut errors = Vec::new();
    for u in &finals[..finals.len() - 1] {
        errors.push((&embed(u, &fine)? - reference).norm());
    }
    rate_table(name, &levels[..levels.len() - 1], &errors)
}

pub fn cmd_convergence(cfg: &LoadedConfig, out: &Path) -> Result<CommandReport> {
    fs::create_dir_all(out)?;
    let table = convergence_table(cfg)?;
    let mut files = Vec::new();
    write(&out.join("convergence.csv"), &rate_table_csv(&table), &mut files)?;
    if cfg.config.output.plots {
        let pts: Vec<(f64, f64)> = table.levels.iter().copied().zip(table.errors.iter().copied()).collect();
        write(
            &out.join("convergence.svg"),
            &line_plot("refinement study", &table.parameter, &[("error".into(), pts)], true),
            &mut files,
        )?;
    }
    let status = if table.monotone { Status::Pass } else { Status::PropertyFail };
    let summary = format!(
        "convergence {}: {} fitted rate {:.3} reductions {:?}",
        if table.monotone { "PASS" } else { "FAIL" },
        table.parameter,
        table.fitted_rate,
        table.reductions.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
    );
    Ok(CommandReport { status, files, summary })
}

/// Build the lift of the configured boundary data and report its fidelity.
pub fn cmd_lift(cfg: &LoadedConfig, out: &Path) -> Result<CommandReport> {
    fs::create_dir_all(out)?;
    let family = cfg.family();
    let domain = cfg.domain()?;
    let data = cfg.boundary();
    let lift = harmonic_extension(&data, family, &domain)?;
    let horizon = cfg.config.problem.horizon;
    let space = cfg.space()?;
    let proj = if lift.is_zero() { None } else { Some(lift.field.projected(&space)?) };
    let mut files = Vec::new();
    let mut rows = Vec::new();
    let mut pass = true;
    for t in [0.0, 0.5 * horizon, horizon] {
        let d = lift_diagnostics(&lift, &data, family, &domain, t, 12);
        pass &= d.harmonicity <= 1e-8 && d.trace <= 1e-8;
        let pn = proj.as_ref().map_or(0.0, |p| p.at(t).norm());
        rows.push(vec![num(t), num(d.harmonicity), num(d.trace), num(d.magnitude), num(pn), d.samples.to_string()]);
    }
    csv(
        &out.join("lift.csv"),
        &["time", "harmonicity", "trace", "magnitude", "projected_norm", "samples"],
        &rows,
        &mut files,
    )?;
    let mut text = String::new();
    text.push_str(&format!("family = {}\n", family.name()));
    text.push_str(&format!("face_modes = {}\n", data.modes.len()));
    text.push_str(&format!("zero_data = {}\n", data.is_zero()));
    text.push_str(&format!("flux_shift = {}\n", num(lift.flux_shift)));
    text.push_str(&format!("terms = {}\n", lift.field.components.iter().map(Vec::len).sum::<usize>()));
    text.push_str(&format!("status = {}\n", if pass { "PASS" } else { "FAIL" }));
    write(&out.join("lift_report.txt"), &text, &mut files)?;
    let status = if pass { Status::Pass } else { Status::PropertyFail };
    Ok(CommandReport { status, files, summary: format!("lift {}", if pass { "PASS" } else { "FAIL" }) })
}

fn apply_sweep_value(c: &mut crate::config::RunConfig, parameter: SweepParameter, value: f64) {
    match parameter {
        SweepParameter::Sigma => c.problem.sigma = value,
        SweepParameter::Dt => c.problem.dt = value,
        SweepParameter::Cutoff => c.problem.cutoff = crate::config::CutoffSpec::Uniform(value.round() as usize),
        SweepParameter::Seed => c.seed = value.round() as u64,
        SweepParameter::Scale => {
            for m in c.forcing.modes.iter_mut().chain(c.initial.modes.iter_mut()) {
                m.amplitude *= value;
            }
            for r in c.forcing.random.iter_mut().chain(c.initial.random.iter_mut()) {
                r.amplitude *= value;
            }
            for m in &mut c.boundary.modes {
                m.amplitude *= value;
            }
            if let Some(m) = &mut c.manufactured {
                m.amplitude *= value;
                m.boundary_amplitude *= value;
            }
        }
    }
}

fn parameter_name(p: SweepParameter) -> &'static str {
    match p {
        SweepParameter::Sigma => "sigma",
        SweepParameter::Scale => "scale",
        SweepParameter::Dt => "dt",
        SweepParameter::Cutoff => "cutoff",
        SweepParameter::Seed => "seed",
    }
}

struct SweepResult {
    status: Status,
    row: Vec<String>,
}

fn sweep_one(cfg: &LoadedConfig, parameter: SweepParameter, value: f64, dir: &Path) -> SweepResult {
    let base = vec![dir.file_name().map_or(String::new(), |n| n.to_string_lossy().into_owned()), num(value)];
    let run =
        variant(cfg, |c| apply_sweep_value(c, parameter, value)).and_then(|vc| simulate_with_certificate(&vc, dir));
    match run {
        Ok((report, cert)) => {
            let mut row = base;
            row.extend([
                if report.status == Status::Pass { "PASS" } else { "FAIL" }.to_string(),
                cert.iterations.to_string(),
                num(cert.residuals.last().copied().unwrap_or(f64::NAN)),
                num(cert.condition),
                num(cert.eta),
                String::new(),
            ]);
            SweepResult { status: report.status, row }
        }
        Err(e) => {
            let mut row = base;
            row.extend([
                "ERROR".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.to_string(),
            ]);
            SweepResult { status: Status::from_error(&e), row }
        }
    }
}

/// Run `simulate` for every sweep value, each into its own subdirectory,
/// on up to `threads` worker threads.
pub fn cmd_sweep(cfg: &LoadedConfig, out: &Path, threads: usize) -> Result<CommandReport> {
    let sweep =
        cfg.config.sweep.as_ref().ok_or_else(|| Error::Config("the sweep command needs a [sweep] section".into()))?;
    fs::create_dir_all(out)?;
    let name = parameter_name(sweep.parameter);
    let values = &sweep.values;
    let results: Mutex<Vec<Option<SweepResult>>> = Mutex::new((0..values.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, values.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= values.len() {
                    break;
                }
                let dir = out.join(format!("{name}_{i}"));
                let r = sweep_one(cfg, sweep.parameter, values[i], &dir);
                results.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    let results: Vec<SweepResult> =
        results.into_inner().expect("no worker panicked").into_iter().map(|r| r.expect("every value ran")).collect();
    let mut files = Vec::new();
    let rows: Vec<Vec<String>> = results.iter().map(|r| r.row.clone()).collect();
    csv(
        &out.join("sweep.csv"),
        &["run", name, "status", "iterations", "final_residual", "condition", "eta", "error"],
        &rows,
        &mut files,
    )?;
    let status = results.iter().map(|r| r.status).max().unwrap_or(Status::Pass);
    let passed = results.iter().filter(|r| r.status == Status::Pass).count();
    Ok(CommandReport { status, files, summary: format!("sweep {name}: {passed}/{} runs passed", results.len()) })
}

/// Byte-for-byte comparison of the regular files in two directories.
pub fn directories_identical(a: &Path, b: &Path) -> Result<bool> {
    let list = |d: &Path| -> Result<Vec<PathBuf>> {
        let mut v: Vec<PathBuf> =
            fs::read_dir(d)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_file()).collect();
        v.sort();
        Ok(v)
    };
    let (la, lb) = (list(a)?, list(b)?);
    if la.len() != lb.len() {
        return Ok(false);
    }
    for (x, y) in la.iter().zip(&lb) {
        if x.file_name() != y.file_name() || fs::read(x)? != fs::read(y)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A subcommand of the `nlac` binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Verify,
    Convergence,
    Lift,
    Sweep,
}

/// Load a configuration, apply command-line overrides and run a command.
/// Errors are folded into the report with the matching status.
pub fn run(command: Command, config: &Path, out: Option<&Path>, seed: Option<u64>, threads: usize) -> CommandReport {
    let fail =
        |e: Error| CommandReport { status: Status::from_error(&e), files: Vec::new(), summary: format!("error: {e}") };
    let cfg = match LoadedConfig::from_path(config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let cfg = match seed {
        Some(s) => match variant(&cfg, |c| c.seed = s) {
            Ok(c) => c,
            Err(e) => return fail(e),
        },
        None => cfg,
    };
    let out = out.map_or_else(|| PathBuf::from(&cfg.config.output.dir), Path::to_path_buf);
    let result = match command {
        Command::Simulate => cmd_simulate(&cfg, &out),
        Command::Verify => cmd_verify(&cfg, &out),
        Command::Convergence => cmd_convergence(&cfg, &out),
        Command::Lift => cmd_lift(&cfg, &out),
        Command::Sweep => cmd_sweep(&cfg, &out, threads),
    };
    match result {
        Ok(mut r) => {
            for w in &cfg.warnings {
                r.summary = format!("warning: {w}\n{}", r.summary);
            }
            r
        }
        Err(e) => fail(e),
    }
}
