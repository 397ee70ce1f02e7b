//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

use std::time::Instant;

use nlacoustics::analytic::Envelope;
use nlacoustics::app::{cmd_simulate, directories_identical};
use nlacoustics::basis::BoxDomain;
use nlacoustics::config::LoadedConfig;
use nlacoustics::evolution::Scheme;
use nlacoustics::lifting::Lift;
use nlacoustics::newton::NewtonSettings;
use nlacoustics::operators::{Dealiasing, NonlinearCoefficients, OperatorSet};
use nlacoustics::properties::{self, LinearSweep, MmsStudy, Outcome};
use nlacoustics::space::{BcFamily, Space, StateU};
use nlacoustics::verify::sample_boundary_data;

struct Criterion {
    number: usize,
    title: &'static str,
    outcomes: Vec<Outcome>,
    seconds: f64,
}

impl Criterion {
    fn pass(&self) -> bool {
        !self.outcomes.is_empty() && self.outcomes.iter().all(|o| o.pass)
    }
}

fn dim_for(family: BcFamily) -> usize {
    if family.is_hodge() {
        3
    } else {
        2
    }
}

fn ops(family: BcFamily, dim: usize, m: usize, sigma: f64) -> OperatorSet {
    let domain = BoxDomain::pi_box(dim).unwrap();
    let space = Space::new(&domain, family, &vec![m; dim], 0.5, 0.5, sigma).unwrap();
    OperatorSet::new(&space, NonlinearCoefficients::default(), Dealiasing::ThreeHalves).unwrap()
}

fn runtime(name: &str, seconds: f64, limit: f64) -> Outcome {
    Outcome {
        name: name.into(),
        pass: seconds < limit,
        values: vec![("seconds".into(), seconds), ("limit".into(), limit)],
        detail: String::new(),
    }
}

fn c1() -> Vec<Outcome> {
    let cases = [
        (BcFamily::DirDir, 2),
        (BcFamily::NeuDir, 2),
        (BcFamily::DirDir, 3),
        (BcFamily::NeuDir, 3),
        (BcFamily::NeuHodge, 3),
        (BcFamily::DirHodge, 3),
    ];
    let t = Instant::now();
    let out = properties::eigen_structure(&cases, &[2, 4, 8, 12, 16], 4).unwrap();
    vec![out, runtime("eigen_runtime", t.elapsed().as_secs_f64(), 60.0)]
}

fn c2() -> Vec<Outcome> {
    BcFamily::ALL
        .iter()
        .map(|&f| {
            let m = if f.is_hodge() { 6 } else { 8 };
            properties::skew_symmetry(&ops(f, dim_for(f), m, 1.0), 100, 21)
        })
        .collect()
}

fn c3() -> Vec<Outcome> {
    let domain = BoxDomain::pi_box(2).unwrap();
    vec![properties::bilinear_constant_stability(
        &domain,
        BcFamily::DirDir,
        &[4, 8, 16],
        &[0.5, 0.75, 1.0],
        200,
        2,
        7,
        NonlinearCoefficients::default(),
    )
    .unwrap()]
}

fn c45() -> (Outcome, Outcome) {
    let sweep = LinearSweep {
        family: BcFamily::DirDir,
        domain: BoxDomain::pi_box(2).unwrap(),
        cutoffs: vec![4, 8, 16],
        runs: 100,
        horizon: 0.5,
        dt: 0.005,
        zeta: 0.5,
        mu: 0.5,
        sigma: 1.0,
        max_k: 2,
        seed: 11,
    };
    properties::energy_and_apriori(&sweep).unwrap()
}

fn c6() -> Vec<Outcome> {
    let t = Instant::now();
    let o = ops(BcFamily::DirDir, 2, 8, 1.0);
    let settings = NewtonSettings { seed: 3, ..NewtonSettings::default() };
    let (out, _) = properties::newton_kantorovich(&o, 0.2, 1.0, 1e-3, 3, 2, &settings).unwrap();
    vec![out, runtime("newton_runtime", t.elapsed().as_secs_f64(), 300.0)]
}

fn c7() -> Vec<Outcome> {
    let mut outs: Vec<Outcome> = BcFamily::ALL
        .iter()
        .map(|&f| {
            let m = if f.is_hodge() { 2 } else { 4 };
            properties::oracle_equivalence(&ops(f, dim_for(f), m, 1.0), 0.1, 1e-4, 1e-12, 6, 0.1, 3).unwrap()
        })
        .collect();
    // negative control: a first-order scheme must not pass the order check
    let small = ops(BcFamily::DirDir, 2, 3, 1.0);
    let (cn, _) = properties::time_order(&small, Scheme::Cnab2, &[0.02, 0.01, 0.005], 0.5, 5, 2.0).unwrap();
    let (eu, _) = properties::time_order(&small, Scheme::ImexEuler, &[0.02, 0.01, 0.005], 0.5, 5, 2.0).unwrap();
    outs.push(cn);
    outs.push(Outcome {
        name: "negative_control[imex_euler]".into(),
        pass: !eu.pass,
        values: eu.values,
        detail: "must miss order 2".into(),
    });
    outs
}

fn c8(family: BcFamily) -> Outcome {
    let (mut out, _, cut) = MmsStudy::standard(family, 0.05).unwrap().run().unwrap();
    // exponential decay: constant reduction per unit cutoff step, hence a
    // growing algebraic rate between consecutive levels
    let growing = cut.pairwise_rates.windows(2).all(|r| r[1].abs() > r[0].abs());
    out.values.push(("growing_rate".into(), f64::from(u8::from(growing))));
    out.pass &= growing;
    out
}

/// Fourth-order finite-difference Laplacian of every lift component at
/// interior points, independent of the closed form used elsewhere.
fn fd_harmonicity(lift: &Lift, dim: usize, t: f64) -> f64 {
    let h = 0.02;
    let n = 7;
    let mut worst: f64 = 0.0;
    let total = n_pow(n, dim);
    for flat in 0..total {
        let mut rem = flat;
        let mut x = vec![0.0; dim];
        for xa in x.iter_mut() {
            *xa = std::f64::consts::PI * (1 + rem % n) as f64 / (n + 1) as f64;
            rem /= n;
        }
        for c in 0..=dim {
            let f = |y: &[f64]| lift.field.value(c, t, y);
            let mut lap = 0.0;
            for a in 0..dim {
                let at = |s: f64| {
                    let mut y = x.clone();
                    y[a] += s * h;
                    f(&y)
                };
                lap += (-at(2.0) + 16.0 * at(1.0) - 30.0 * at(0.0) + 16.0 * at(-1.0) - at(-2.0)) / (12.0 * h * h);
            }
            worst = worst.max(lap.abs());
        }
    }
    worst
}

fn n_pow(n: usize, d: usize) -> usize {
    n.pow(d as u32)
}

fn c9() -> Vec<Outcome> {
    let mut outs = Vec::new();
    let envelope = Envelope::Sine { omega: 2.0, phase: 0.3 };
    let mut dirdir_lift = None;
    for family in BcFamily::ALL {
        let dim = dim_for(family);
        let domain = BoxDomain::pi_box(dim).unwrap();
        let data = sample_boundary_data(family, dim, 0.05, envelope);
        let (out, lift) = properties::lifting_fidelity(&data, family, &domain, &[0.0, 0.25, 0.5]).unwrap();
        let fd = [0.0, 0.25, 0.5].iter().map(|&t| fd_harmonicity(&lift, dim, t)).fold(0.0, f64::max);
        outs.push(out);
        outs.push(Outcome {
            name: format!("fd_harmonicity[{family}]"),
            pass: fd <= 1e-8,
            values: vec![("max_fd_laplacian".into(), fd)],
            detail: String::new(),
        });
        if family == BcFamily::DirDir {
            dirdir_lift = Some(lift);
        }
    }
    let lift = dirdir_lift.unwrap();
    let o = ops(BcFamily::DirDir, 2, 6, 1.0);
    let w0 = StateU::unit(o.space(), 0, &[1, 1], 0.05).unwrap();
    let (composed, _) = properties::composed_residual(&o, &lift, &w0, &[0.02, 0.01, 0.005], 0.5).unwrap();
    outs.push(composed);
    let (sweep, _) = properties::sigma_sweep(
        o.space(),
        NonlinearCoefficients::default(),
        &lift,
        &w0,
        &[0.5, 0.75, 1.0],
        0.5,
        0.005,
        &NewtonSettings::default(),
    )
    .unwrap();
    outs.push(sweep);
    outs
}

const DETERMINISM_CONFIG: &str = r#"
seed = 19

[domain]
dim = 2

[problem]
family = "neudir"
sigma = 0.75
cutoff = 6
dt = 0.005
horizon = 0.5

[forcing]
random = { amplitude = 0.05, max_k = 2, envelope = { type = "sine", omega = 3.0, phase = 0.1 } }

[initial]
random = { amplitude = 0.05, max_k = 2 }

[boundary]
modes = [{ component = 0, axis = 1, side = 0, k = [1, 0], amplitude = 0.05, envelope = { type = "sine", omega = 1.0, phase = 0.0 } }]
"#;

fn c10() -> Vec<Outcome> {
    let dir = tempfile::tempdir().unwrap();
    let cfg = LoadedConfig::from_str(DETERMINISM_CONFIG).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ra = cmd_simulate(&cfg, &a).unwrap();
    let rb = cmd_simulate(&cfg, &b).unwrap();
    let same = directories_identical(&a, &b).unwrap();
    vec![Outcome {
        name: "determinism".into(),
        pass: same && !ra.files.is_empty() && ra.files.len() == rb.files.len(),
        values: vec![("files".into(), ra.files.len() as f64)],
        detail: if same { "identical bytes".into() } else { "outputs differ".into() },
    }]
}

fn timed(number: usize, title: &'static str, f: impl FnOnce() -> Vec<Outcome>) -> Criterion {
    let t = Instant::now();
    let outcomes = f();
    Criterion { number, title, outcomes, seconds: t.elapsed().as_secs_f64() }
}

fn main() {
    // criteria run one after another so that the runtime limits measure
    // each check alone
    let t = Instant::now();
    let (energy, apriori) = c45();
    let secs = t.elapsed().as_secs_f64();
    let mut criteria = vec![
        timed(1, "eigen-structure", c1),
        timed(2, "skew-symmetry", c2),
        timed(3, "bilinear estimate", c3),
        Criterion { number: 4, title: "energy bound", outcomes: vec![energy], seconds: secs },
        Criterion { number: 5, title: "a priori estimate", outcomes: vec![apriori], seconds: secs },
        timed(6, "newton-kantorovich", c6),
        timed(7, "oracle equivalence", c7),
        timed(8, "manufactured solutions", || BcFamily::ALL.iter().map(|&f| c8(f)).collect()),
        timed(9, "lifting", c9),
        timed(10, "determinism", c10),
    ];
    criteria.sort_by_key(|c| c.number);
    let mut failed = Vec::new();
    for c in &criteria {
        for o in &c.outcomes {
            println!("    {}", o.line());
        }
        let verdict = if c.pass() { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {} ({:.1} s)", c.number, c.title, c.seconds);
        if !c.pass() {
            failed.push(c.number);
        }
    }
    if failed.is_empty() {
        println!("acceptance PASS");
    } else {
        println!("acceptance FAIL {failed:?}");
        std::process::exit(1);
    }
}
