//! Production solver against the dense Galerkin oracle (exact quadrature
//! of every operator, adaptive Dormand-Prince in time), plus the observed
//! order of both IMEX schemes.

use nlacoustics::basis::BoxDomain;
use nlacoustics::evolution::Scheme;
use nlacoustics::operators::{Dealiasing, NonlinearCoefficients, OperatorSet};
use nlacoustics::properties::{oracle_equivalence, time_order};
use nlacoustics::space::{BcFamily, Space};

fn main() -> nlacoustics::Result<()> {
    let domain = BoxDomain::pi_box(2)?;
    for family in [BcFamily::DirDir, BcFamily::NeuDir] {
        let space = Space::new(&domain, family, &[4, 4], 0.5, 0.5, 1.0)?;
        let ops = OperatorSet::new(&space, NonlinearCoefficients::default(), Dealiasing::ThreeHalves)?;
        println!("{}", oracle_equivalence(&ops, 0.1, 1e-4, 1e-12, 6, 0.1, 3)?.line());
    }
    let space = Space::new(&domain, BcFamily::DirDir, &[3, 3], 0.5, 0.5, 1.0)?;
    let ops = OperatorSet::new(&space, NonlinearCoefficients::default(), Dealiasing::ThreeHalves)?;
    for scheme in [Scheme::Cnab2, Scheme::ImexEuler] {
        let (outcome, table) = time_order(&ops, scheme, &[0.02, 0.01, 0.005], 0.5, 5, 2.0)?;
        println!("{} errors {:?}", outcome.line(), table.errors);
    }
    Ok(())
}
