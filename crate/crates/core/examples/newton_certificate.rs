//! Newton's method on a small-data nonlinear run with the certificate
//! constants measured along the way.

use nlacoustics::analytic::Envelope;
use nlacoustics::basis::BoxDomain;
use nlacoustics::evolution::Forcing;
use nlacoustics::newton::{certificate_report, newton_solve, NewtonSettings, NonlinearProblem};
use nlacoustics::operators::{Dealiasing, NonlinearCoefficients, OperatorSet};
use nlacoustics::sampling::{random_low_mode_state, rng};
use nlacoustics::space::{BcFamily, Space};

fn main() -> nlacoustics::Result<()> {
    let domain = BoxDomain::pi_box(2)?;
    let space = Space::new(&domain, BcFamily::DirDir, &[8, 8], 0.5, 0.5, 1.0)?;
    let ops = OperatorSet::new(&space, NonlinearCoefficients::from_lambda(2.0), Dealiasing::ThreeHalves)?;
    let mut r = rng(3);
    let g = random_low_mode_state(&space, &mut r, 2).scaled(0.2);
    let f = random_low_mode_state(&space, &mut r, 2).scaled(0.2);
    let prob = NonlinearProblem::homogeneous(&ops, Forcing::Modal(vec![(Envelope::Const, f)]), g, 1.0, 1e-3);
    let (w, cert) = newton_solve(&prob, &NewtonSettings::default())?;
    print!("{}", certificate_report(&cert));
    println!("|w(T)| = {:.6e}", w.last().norm());
    Ok(())
}
