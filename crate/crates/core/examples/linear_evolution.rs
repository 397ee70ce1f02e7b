//! Linear IMEX evolution with forcing: energy functionals, the energy-bound
//! ratio and the solution norm.

use nlacoustics::analytic::Envelope;
use nlacoustics::basis::BoxDomain;
use nlacoustics::evolution::{energy_check, integrate, Forcing, LinearProblem, Scheme};
use nlacoustics::fractional::{w_norm, x_norm, y_norm};
use nlacoustics::operators::{Dealiasing, NonlinearCoefficients, OperatorSet};
use nlacoustics::sampling::{random_low_mode_state, rng};
use nlacoustics::space::{BcFamily, Space};

fn main() -> nlacoustics::Result<()> {
    let domain = BoxDomain::pi_box(2)?;
    let space = Space::new(&domain, BcFamily::NeuDir, &[10, 10], 0.5, 0.5, 1.0)?;
    let ops = OperatorSet::new(&space, NonlinearCoefficients::default(), Dealiasing::ThreeHalves)?;
    let mut r = rng(3);
    let g = random_low_mode_state(&space, &mut r, 3);
    let f = random_low_mode_state(&space, &mut r, 3);
    let forcing = Forcing::Modal(vec![(Envelope::Sine { omega: 4.0, phase: 0.0 }, f)]);

    for scheme in [Scheme::Cnab2, Scheme::ImexEuler] {
        let prob = LinearProblem::new(&ops, g.clone(), forcing.clone(), 1.0, 0.005).with_scheme(scheme);
        let traj = integrate(&prob)?;
        let fs = forcing.sample(&ops, traj.times())?;
        let report = energy_check(&ops, &traj, &fs, &g)?;
        println!(
            "{scheme:?}: |u(T)| = {:.5e}, E[u](T) = {:.5e}, bound ratio = {:.4}, ||u||_X / data = {:.4}",
            traj.last().norm(),
            report.final_energy(),
            report.ratio,
            x_norm(&traj)? / (y_norm(&fs) + w_norm(&g))
        );
    }
    Ok(())
}
