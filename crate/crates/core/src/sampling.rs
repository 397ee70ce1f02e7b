//! Seeded random fields used by probes, sweeps and tests.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::space::{Space, StateU};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform `[-1, 1]` coefficients on every mode.
pub fn random_state(space: &Arc<Space>, rng: &mut ChaCha8Rng) -> StateU {
    let data = (0..space.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    StateU::from_vec(space, data).expect("length matches space")
}

/// Uniform `[-1, 1]` coefficients on modes with every `k_i <= max_k`, zero
/// elsewhere. Draws depend only on the low-mode multi-indices, so the same
/// seed gives the same physical field at every cutoff `>= max_k`.
pub fn random_low_mode_state(space: &Arc<Space>, rng: &mut ChaCha8Rng, max_k: usize) -> StateU {
    let mut u = StateU::zeros(space);
    let dim = space.dim();
    let side = max_k + 1;
    let total = side.pow(dim as u32);
    for c in 0..space.components() {
        let basis = space.basis(c).clone();
        let range = space.range(c);
        let mut k = vec![0usize; dim];
        for flat in 0..total {
            let mut rem = flat;
            for a in (0..dim).rev() {
                k[a] = rem % side;
                rem /= side;
            }
            let draw: f64 = rng.gen_range(-1.0..=1.0);
            let fits = k.iter().zip(basis.cutoff()).all(|(&ki, &m)| ki <= m);
            if fits {
                if let Some(pos) = basis.position(&k) {
                    u.data_mut()[range.start + pos] = draw;
                }
            }
        }
    }
    u
}

/// Coefficients `xi_k (1 + lambda_k)^{-decay}` with uniform `xi_k`, a field
/// whose smoothness is set by `decay`.
pub fn random_smooth_state(space: &Arc<Space>, rng: &mut ChaCha8Rng, decay: f64) -> StateU {
    let data = space.scaled_eigenvalues().iter().map(|&l| rng.gen_range(-1.0..=1.0) * (1.0 + l).powf(-decay)).collect();
    StateU::from_vec(space, data).expect("length matches space")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BoxDomain;
    use crate::space::BcFamily;

    #[test]
    fn low_mode_draws_are_cutoff_independent() {
        let d = BoxDomain::pi_box(2).unwrap();
        let s4 = Space::new(&d, BcFamily::NeuDir, &[4, 4], 1.0, 1.0, 1.0).unwrap();
        let s8 = Space::new(&d, BcFamily::NeuDir, &[8, 8], 1.0, 1.0, 1.0).unwrap();
        let a = random_low_mode_state(&s4, &mut rng(3), 2);
        let b = random_low_mode_state(&s8, &mut rng(3), 2);
        let x = [0.3, 1.9];
        for c in 0..3 {
            let va = a.field(c).eval(&x).unwrap();
            let vb = b.field(c).eval(&x).unwrap();
            assert!((va - vb).abs() < 1e-14);
        }
        assert!(a.norm() > 0.0);
    }
}
