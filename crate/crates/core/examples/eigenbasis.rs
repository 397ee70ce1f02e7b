//! Build every basis kind on a box, check orthonormality and the diagonal
//! stiffness matrix, and evaluate a few modes.

use nlacoustics::basis::{build_basis, BasisKind, BoxDomain};
use nlacoustics::verify::eigen_structure_check;

fn main() -> nlacoustics::Result<()> {
    let domain = BoxDomain::new(vec![std::f64::consts::PI, 2.0, 1.5])?;
    let kinds = [
        BasisKind::DirichletScalar,
        BasisKind::NeumannScalar,
        BasisKind::DirichletVectorComponent,
        BasisKind::FreeSlipVectorComponent(0),
        BasisKind::FreeSlipVectorComponent(2),
    ];
    println!("{:<28} {:>6} {:>12} {:>12}", "kind", "modes", "gram", "stiffness");
    for kind in kinds {
        let basis = build_basis(&domain, kind, &[6, 6, 6])?;
        let check = eigen_structure_check(&basis, 4);
        println!(
            "{:<28} {:>6} {:>12.2e} {:>12.2e}",
            format!("{kind:?}"),
            basis.len(),
            check.gram_error,
            check.stiffness_error
        );
    }

    let basis = build_basis(&domain, BasisKind::NeumannScalar, &[3, 3, 3])?;
    let x = [0.4, 1.1, 0.7];
    for (i, m) in basis.modes().iter().take(5).enumerate() {
        println!("mode {:?}: lambda = {:.4}, phi(x) = {:+.6}", m.k, m.eigenvalue, basis.eval_mode(i, &x)?);
    }
    Ok(())
}
