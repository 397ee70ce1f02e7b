//! TOML run configuration shared by every subcommand.
//!
//! Parsing errors carry the line and column reported by the TOML reader;
//! semantic errors are located by searching the source for the offending
//! key inside its section.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analytic::Envelope;
use crate::basis::BoxDomain;
use crate::error::{Error, Result};
use crate::evolution::Scheme;
use crate::lifting::{BoundaryData, FaceMode};
use crate::operators::{Dealiasing, NonlinearCoefficients, OperatorSet};
use crate::space::{BcFamily, Space, StateU};
use crate::verify::MmsShape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub domain: DomainSection,
    pub problem: ProblemSection,
    #[serde(default)]
    pub coefficients: CoefficientSection,
    #[serde(default)]
    pub forcing: DataSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub boundary: BoundarySection,
    #[serde(default)]
    pub manufactured: Option<ManufacturedSection>,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub convergence: Option<ConvergenceSection>,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub dim: usize,
    /// Edge lengths; every edge defaults to pi.
    #[serde(default)]
    pub extents: Option<Vec<f64>>,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self { dim: 2, extents: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CutoffSpec {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

impl CutoffSpec {
    pub fn resolve(&self, dim: usize) -> Vec<usize> {
        match self {
            CutoffSpec::Uniform(m) => vec![*m; dim],
            CutoffSpec::PerAxis(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DealiasingSpec {
    #[default]
    ThreeHalves,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeSpec {
    #[default]
    Cnab2,
    ImexEuler,
}

/// How nonhomogeneous boundary data enter the Newton solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Solve for `u - h` directly around the lift.
    #[default]
    Direct,
    /// Solve the linear lifted problem first, then the correction.
    Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub family: String,
    pub sigma: f64,
    pub cutoff: CutoffSpec,
    #[serde(default = "half")]
    pub zeta: f64,
    #[serde(default = "half")]
    pub mu: f64,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default)]
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub dealiasing: DealiasingSpec,
    #[serde(default)]
    pub formulation: Formulation,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSection {
    /// Sets `alpha = lambda`, `beta = gamma = delta = 1` (default 2).
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
}

impl CoefficientSection {
    pub fn resolve(&self) -> NonlinearCoefficients {
        let base = NonlinearCoefficients::from_lambda(self.lambda.unwrap_or(2.0));
        NonlinearCoefficients {
            alpha: self.alpha.unwrap_or(base.alpha),
            beta: self.beta.unwrap_or(base.beta),
            gamma: self.gamma.unwrap_or(base.gamma),
            delta: self.delta.unwrap_or(base.delta),
        }
    }
}

/// One spectral mode of forcing or initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    /// 0 for p, `1 + j` for `v_j`.
    pub component: usize,
    pub k: Vec<usize>,
    pub amplitude: f64,
    #[serde(default = "const_envelope")]
    pub envelope: Envelope,
}

fn const_envelope() -> Envelope {
    Envelope::Const
}

/// Seeded random low-mode data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomData {
    pub amplitude: f64,
    #[serde(default = "two")]
    pub max_k: usize,
    #[serde(default = "const_envelope")]
    pub envelope: Envelope,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default)]
    pub modes: Vec<ModeEntry>,
    #[serde(default)]
    pub random: Option<RandomData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub modes: Vec<ModeEntry>,
    #[serde(default)]
    pub random: Option<RandomData>,
    /// The listed modes describe `g - h(0)`, so `g` automatically matches
    /// the boundary data. When false they describe `g` itself and
    /// compatibility with the lift is checked.
    #[serde(default = "yes")]
    pub add_lift: bool,
}

fn yes() -> bool {
    true
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { modes: Vec::new(), random: None, add_lift: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    #[serde(default)]
    pub modes: Vec<FaceMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedSection {
    #[serde(default = "analytic_shape")]
    pub shape: MmsShape,
    #[serde(default = "point_two")]
    pub amplitude: f64,
    #[serde(default)]
    pub boundary_amplitude: f64,
    #[serde(default = "minus_one")]
    pub rate: f64,
}

fn analytic_shape() -> MmsShape {
    MmsShape::Analytic { b: 3.0 }
}

fn point_two() -> f64 {
    0.2
}

fn minus_one() -> f64 {
    -1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default = "newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default = "probe_samples")]
    pub probe_samples: usize,
    #[serde(default = "two")]
    pub probe_max_k: usize,
    #[serde(default)]
    pub smallness_radius: Option<f64>,
    /// Admissible X-radius of the linearisation point.
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default = "compatibility_tol")]
    pub compatibility_tol: f64,
}

fn newton_tol() -> f64 {
    1e-9
}

fn newton_max_iter() -> usize {
    20
}

fn probe_samples() -> usize {
    6
}

fn compatibility_tol() -> f64 {
    1e-8
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            newton_tol: newton_tol(),
            newton_max_iter: newton_max_iter(),
            probe_samples: probe_samples(),
            probe_max_k: 2,
            smallness_radius: None,
            radius: None,
            compatibility_tol: compatibility_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceAxis {
    Dt,
    Cutoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub axis: ConvergenceAxis,
    /// Time steps or uniform cutoffs, coarse to fine.
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "samples")]
    pub samples: usize,
    #[serde(default = "verify_cutoffs")]
    pub cutoffs: Vec<usize>,
    #[serde(default = "verify_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default = "resolution")]
    pub resolution_multiplier: usize,
    #[serde(default = "oracle_tol")]
    pub oracle_tolerance: f64,
    #[serde(default = "oracle_cutoff")]
    pub oracle_cutoff: usize,
    #[serde(default = "oracle_horizon")]
    pub oracle_horizon: f64,
    #[serde(default = "oracle_dt")]
    pub oracle_dt: f64,
}

fn samples() -> usize {
    20
}

fn verify_cutoffs() -> Vec<usize> {
    vec![4, 8, 16]
}

fn verify_sigmas() -> Vec<f64> {
    vec![0.5, 0.75, 1.0]
}

fn resolution() -> usize {
    8
}

fn oracle_tol() -> f64 {
    1e-12
}

fn oracle_cutoff() -> usize {
    3
}

fn oracle_horizon() -> f64 {
    0.1
}

fn oracle_dt() -> f64 {
    1e-3
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            samples: samples(),
            cutoffs: verify_cutoffs(),
            sigmas: verify_sigmas(),
            resolution_multiplier: resolution(),
            oracle_tolerance: oracle_tol(),
            oracle_cutoff: oracle_cutoff(),
            oracle_horizon: oracle_horizon(),
            oracle_dt: oracle_dt(),
        }
    }
}

/// Fan-out of one parameter over several values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Sigma,
    /// Multiplies forcing, initial and boundary amplitudes.
    Scale,
    Dt,
    Cutoff,
    Seed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "out_dir")]
    pub dir: String,
    #[serde(default = "yes")]
    pub plots: bool,
    /// Write every n-th time sample to the trajectory CSV.
    #[serde(default = "one")]
    pub stride: usize,
}

fn out_dir() -> String {
    "out".into()
}

fn one() -> usize {
    1
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: out_dir(), plots: true, stride: 1 }
    }
}

/// A parsed configuration with its source text (for error locations) and
/// non-fatal warnings.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub source: String,
    pub warnings: Vec<String>,
}

/// 1-based line of `key` inside `[section]` (or at the top level when
/// `section` is empty).
pub fn locate(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in source.lines().enumerate() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('[') {
            current = rest.trim_start_matches('[').trim_end_matches(']').trim().to_string();
            if key.is_empty() && current == section {
                return Some(i + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn at(source: &str, section: &str, key: &str, msg: String) -> Error {
    let name = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
    match locate(source, section, key).or_else(|| locate(source, section, "")) {
        Some(line) => Error::Config(format!("line {line}: {name}: {msg}")),
        None => Error::Config(format!("{name}: {msg}")),
    }
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let source =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&source)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(source: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(source).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        let mut loaded = Self { config, source: source.to_string(), warnings: Vec::new() };
        loaded.validate()?;
        Ok(loaded)
    }

    /// Wrap an in-memory configuration (re-serialised so that error
    /// locations still refer to a document).
    pub fn from_config(config: RunConfig) -> Result<Self> {
        let source = toml::to_string(&config).map_err(|e| Error::Config(e.to_string()))?;
        let mut loaded = Self { config, source, warnings: Vec::new() };
        loaded.validate()?;
        Ok(loaded)
    }

    fn err(&self, section: &str, key: &str, msg: impl Into<String>) -> Error {
        at(&self.source, section, key, msg.into())
    }

    fn validate(&mut self) -> Result<()> {
        let c = &self.config;
        let dim = c.domain.dim;
        if !(1..=3).contains(&dim) {
            return Err(self.err("domain", "dim", format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if let Some(ext) = &c.domain.extents {
            if ext.len() != dim || ext.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                return Err(self.err("domain", "extents", format!("need {dim} positive edge lengths, got {ext:?}")));
            }
        }
        let p = &c.problem;
        let family: BcFamily =
            p.family.parse().map_err(|_| self.err("problem", "family", format!("unknown family '{}'", p.family)))?;
        if !family.admits_sigma(p.sigma) {
            return Err(self.err(
                "problem",
                "sigma",
                format!(
                    "sigma = {} is outside the admissible range {} for family {family}",
                    p.sigma,
                    family.sigma_range()
                ),
            ));
        }
        if family.is_hodge() && dim != 3 {
            return Err(self.err("problem", "family", format!("family {family} needs a three-dimensional domain")));
        }
        let cut = p.cutoff.resolve(dim);
        if cut.len() != dim || cut.contains(&0) {
            return Err(self.err("problem", "cutoff", format!("need {dim} positive cutoffs, got {cut:?}")));
        }
        for (key, v) in [("zeta", p.zeta), ("mu", p.mu), ("dt", p.dt), ("horizon", p.horizon)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(self.err("problem", key, format!("must be positive, got {v}")));
            }
        }
        if p.dt > p.horizon {
            return Err(self.err("problem", "dt", "time step exceeds the horizon"));
        }
        let coeffs = c.coefficients.resolve();
        for (key, v) in
            [("alpha", coeffs.alpha), ("beta", coeffs.beta), ("gamma", coeffs.gamma), ("delta", coeffs.delta)]
        {
            if !v.is_finite() {
                return Err(self.err("coefficients", key, format!("must be finite, got {v}")));
            }
        }
        let mut warnings = Vec::new();
        if coeffs.alpha == 1.0 {
            let line = locate(&self.source, "coefficients", "lambda")
                .or_else(|| locate(&self.source, "coefficients", "alpha"))
                .map_or(String::new(), |l| format!("line {l}: "));
            warnings.push(format!(
                "{line}alpha = lambda = 1 is the degenerate parameter value excluded by the model; results are reported but the setting is outside its hypotheses"
            ));
        }
        let space = self.space().map_err(|e| self.err("problem", "cutoff", e.to_string()))?;
        for (section, modes) in [("forcing", &c.forcing.modes), ("initial", &c.initial.modes)] {
            for m in modes {
                if m.component > dim || m.k.len() != dim || space.basis(m.component).position(&m.k).is_none() {
                    return Err(self.err(
                        section,
                        "modes",
                        format!("mode k = {:?} of component {} is not a retained basis mode", m.k, m.component),
                    ));
                }
            }
        }
        for m in &c.boundary.modes {
            if m.component > dim || m.axis >= dim || m.side > 1 || m.k.len() != dim {
                return Err(self.err("boundary", "modes", format!("malformed face mode {m:?}")));
            }
        }
        crate::lifting::harmonic_extension(&self.boundary(), family, &self.domain()?)
            .map_err(|e| self.err("boundary", "modes", e.to_string()))?;
        if let Some(mms) = &c.manufactured {
            if let MmsShape::Analytic { b } = mms.shape {
                if !(b > 1.0) {
                    return Err(self.err(
                        "manufactured",
                        "shape",
                        format!("analytic profile parameter must exceed 1, got {b}"),
                    ));
                }
            }
            if family.is_hodge() && mms.boundary_amplitude != 0.0 {
                warnings.push("boundary_amplitude only affects pressure data for Hodge families".into());
            }
        }
        let n = &c.numerics;
        if !(n.newton_tol > 0.0) || n.newton_max_iter == 0 || n.probe_samples == 0 {
            return Err(self.err(
                "numerics",
                "newton_tol",
                "tolerance, iteration cap and probe samples must be positive",
            ));
        }
        if let Some(conv) = &c.convergence {
            if conv.levels.len() < 3 {
                return Err(self.err("convergence", "levels", "a convergence study needs at least three levels"));
            }
            if conv.axis == ConvergenceAxis::Cutoff && conv.levels.iter().any(|l| l.fract() != 0.0 || *l < 1.0) {
                return Err(self.err("convergence", "levels", "cutoff levels must be positive integers"));
            }
            if conv.levels.iter().any(|l| !(*l > 0.0)) {
                return Err(self.err("convergence", "levels", "levels must be positive"));
            }
        }
        let v = &c.verify;
        if v.resolution_multiplier < 4 {
            return Err(self.err("verify", "resolution_multiplier", "must be at least 4"));
        }
        if !(v.oracle_tolerance > 0.0) || !(v.oracle_dt > 0.0) || !(v.oracle_horizon > 0.0) {
            return Err(self.err("verify", "oracle_tolerance", "oracle tolerance, step and horizon must be positive"));
        }
        if v.cutoffs.is_empty() || v.sigmas.is_empty() || v.samples == 0 {
            return Err(self.err("verify", "cutoffs", "cutoff list, sigma list and sample count must be non-empty"));
        }
        if let Some(sw) = &c.sweep {
            if sw.values.is_empty() {
                return Err(self.err("sweep", "values", "sweep needs at least one value"));
            }
        }
        if c.output.stride == 0 {
            return Err(self.err("output", "stride", "must be at least 1"));
        }
        self.warnings = warnings;
        Ok(())
    }

    pub fn family(&self) -> BcFamily {
        self.config.problem.family.parse().expect("validated family")
    }

    pub fn domain(&self) -> Result<BoxDomain> {
        let dim = self.config.domain.dim;
        match &self.config.domain.extents {
            Some(e) => BoxDomain::new(e.clone()),
            None => BoxDomain::pi_box(dim),
        }
    }

    pub fn cutoff(&self) -> Vec<usize> {
        self.config.problem.cutoff.resolve(self.config.domain.dim)
    }

    pub fn space(&self) -> Result<Arc<Space>> {
        let p = &self.config.problem;
        Space::new(&self.domain()?, self.family(), &self.cutoff(), p.zeta, p.mu, p.sigma)
    }

    pub fn dealiasing(&self) -> Dealiasing {
        match self.config.problem.dealiasing {
            DealiasingSpec::ThreeHalves => Dealiasing::ThreeHalves,
            DealiasingSpec::Off => Dealiasing::Off,
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self.config.problem.scheme {
            SchemeSpec::Cnab2 => Scheme::Cnab2,
            SchemeSpec::ImexEuler => Scheme::ImexEuler,
        }
    }

    pub fn operators(&self) -> Result<OperatorSet> {
        OperatorSet::new(&self.space()?, self.config.coefficients.resolve(), self.dealiasing())
    }

    pub fn boundary(&self) -> BoundaryData {
        BoundaryData { modes: self.config.boundary.modes.clone() }
    }
}

/// Listed modes grouped by envelope, plus seeded random data.
pub fn modal_data(
    space: &Arc<Space>,
    modes: &[ModeEntry],
    random: Option<&RandomData>,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Vec<(Envelope, StateU)>> {
    let mut groups: Vec<(Envelope, StateU)> = Vec::new();
    let mut add = |env: Envelope, u: StateU| match groups.iter_mut().find(|(e, _)| *e == env) {
        Some((_, acc)) => acc.axpy(1.0, &u),
        None => groups.push((env, u)),
    };
    for m in modes {
        add(m.envelope, StateU::unit(space, m.component, &m.k, m.amplitude)?);
    }
    if let Some(r) = random {
        add(r.envelope, crate::sampling::random_low_mode_state(space, rng, r.max_k).scaled(r.amplitude));
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seed = 4

[domain]
dim = 2

[problem]
family = "dirdir"
sigma = 1.0
cutoff = 6
dt = 0.01
horizon = 0.5

[forcing]
modes = [{ component = 0, k = [1, 1], amplitude = 0.1 }]

[initial]
random = { amplitude = 0.05 }
"#;

    #[test]
    fn minimal_config_loads_with_defaults() {
        let c = LoadedConfig::from_str(BASE).unwrap();
        assert_eq!(c.family(), BcFamily::DirDir);
        assert_eq!(c.cutoff(), vec![6, 6]);
        assert_eq!(c.config.problem.zeta, 0.5);
        assert_eq!(c.config.coefficients.resolve(), NonlinearCoefficients::from_lambda(2.0));
        assert!(c.config.initial.add_lift);
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn sigma_outside_range_is_rejected_with_its_line() {
        let src = BASE.replace("sigma = 1.0", "sigma = 0.3");
        let err = LoadedConfig::from_str(&src).unwrap_err().to_string();
        assert!(err.contains("line 9") && err.contains("[1/2, 1]"), "{err}");
    }

    #[test]
    fn syntax_errors_report_positions() {
        let src = BASE.replace("dt = 0.01", "dt = ");
        let err = LoadedConfig::from_str(&src).unwrap_err().to_string();
        assert!(err.contains("line 11"), "{err}");
    }

    #[test]
    fn unknown_keys_and_bad_modes_are_rejected() {
        let src = BASE.replace("horizon = 0.5", "horizon = 0.5\nhorizn = 1");
        assert!(LoadedConfig::from_str(&src).is_err());
        let src = BASE.replace("k = [1, 1]", "k = [0, 1]");
        let err = LoadedConfig::from_str(&src).unwrap_err().to_string();
        assert!(err.contains("line 15"), "{err}");
    }

    #[test]
    fn alpha_equal_one_warns() {
        let src = format!("{BASE}\n[coefficients]\nlambda = 1.0\n");
        let c = LoadedConfig::from_str(&src).unwrap();
        assert_eq!(c.warnings.len(), 1);
        assert!(c.warnings[0].starts_with("line 21"), "{:?}", c.warnings);
    }

    #[test]
    fn hodge_needs_three_dimensions() {
        let src = BASE.replace("\"dirdir\"", "\"neuhodge\"");
        let err = LoadedConfig::from_str(&src).unwrap_err().to_string();
        assert!(err.contains("three-dimensional"), "{err}");
    }

    #[test]
    fn modal_data_groups_by_envelope() {
        let c = LoadedConfig::from_str(BASE).unwrap();
        let space = c.space().unwrap();
        let modes = vec![
            ModeEntry { component: 0, k: vec![1, 1], amplitude: 1.0, envelope: Envelope::Const },
            ModeEntry { component: 1, k: vec![2, 1], amplitude: 2.0, envelope: Envelope::Const },
            ModeEntry { component: 0, k: vec![1, 2], amplitude: 3.0, envelope: Envelope::Exp { rate: -1.0 } },
        ];
        let g = modal_data(&space, &modes, None, &mut crate::sampling::rng(0)).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].1.norm(), 5.0f64.sqrt());
    }
}
