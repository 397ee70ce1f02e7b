//! Spectral powers of the diffusion operator: fractional norms, the sharp
//! embedding constant against a random probe, and the solution-norm
//! exponents for several sigma.

use nlacoustics::basis::BoxDomain;
use nlacoustics::fractional::{
    apply_power, embedding_constant, embedding_constant_probe, frac_norm, w_exponent, x_space_exponent, y_exponent,
};
use nlacoustics::sampling::{random_smooth_state, rng};
use nlacoustics::space::{BcFamily, Space};

fn main() -> nlacoustics::Result<()> {
    let domain = BoxDomain::pi_box(2)?;
    let space = Space::new(&domain, BcFamily::NeuDir, &[12, 12], 0.5, 0.5, 0.75)?;
    let u = random_smooth_state(&space, &mut rng(1), 1.5);
    for s in [-0.5, -0.25, 0.0, 0.25, 0.5, 1.0] {
        println!("||A^{s:+.2} u|| = {:.6e}", frac_norm(&u, s));
    }
    // A^a A^b = A^(a+b)
    let composed = apply_power(&apply_power(&u, 0.3), 0.2);
    let direct = apply_power(&u, 0.5);
    println!("semigroup defect {:.2e}", (&composed - &direct).norm());

    let exact = embedding_constant(&space, 0.5, 0.0);
    let probed = embedding_constant_probe(&space, 0.5, 0.0, 200, &mut rng(2))?;
    println!("embedding ||u||_0 <= C ||u||_1/2: sharp C = {exact:.4}, probed {probed:.4}");

    for sigma in [0.5, 0.75, 1.0] {
        println!(
            "sigma = {sigma:.2}: X exponent {:.3}, Y exponent {:+.3}, W exponent {:.3}",
            x_space_exponent(sigma),
            y_exponent(sigma) + 0.0,
            w_exponent(sigma)
        );
    }
    Ok(())
}
