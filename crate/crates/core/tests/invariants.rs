use std::sync::Arc;

use proptest::prelude::*;

use nlacoustics::basis::BoxDomain;
use nlacoustics::fractional::{apply_power, frac_norm};
use nlacoustics::operators::{Dealiasing, NonlinearCoefficients, OperatorSet};
use nlacoustics::space::{BcFamily, Space, StateU};

fn ops(family: BcFamily, extents: Vec<f64>, m: usize) -> OperatorSet {
    let domain = BoxDomain::new(extents).unwrap();
    let dim = domain.dim();
    let space = Space::new(&domain, family, &vec![m; dim], 0.7, 0.3, 1.0).unwrap();
    OperatorSet::new(&space, NonlinearCoefficients::default(), Dealiasing::ThreeHalves).unwrap()
}

fn state(space: &Arc<Space>, seed: &[f64]) -> StateU {
    let data = (0..space.len()).map(|i| seed[i % seed.len()] * (1.0 + i as f64).recip()).collect();
    StateU::from_vec(space, data).unwrap()
}

fn family() -> impl Strategy<Value = BcFamily> {
    prop_oneof![Just(BcFamily::DirDir), Just(BcFamily::NeuDir)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn skew_coupling_is_energy_neutral(
        f in family(),
        lx in 0.5f64..4.0,
        ly in 0.5f64..4.0,
        seed in prop::collection::vec(-1.0f64..1.0, 7),
    ) {
        let o = ops(f, vec![lx, ly], 5);
        let u = state(o.space(), &seed);
        let su = o.apply_skew(&u);
        prop_assert!(su.dot(&u).abs() <= 1e-10 * u.dot(&u).max(1e-300));
    }

    #[test]
    fn diffusion_is_positive(
        f in family(),
        lx in 0.5f64..4.0,
        seed in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let o = ops(f, vec![lx, 2.0], 4);
        let u = state(o.space(), &seed);
        let au = o.apply_diffusion(&u);
        prop_assert!(au.dot(&u) >= o.space().lambda_min() * u.dot(&u) * (1.0 - 1e-12));
    }

    #[test]
    fn spectral_powers_compose(
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
        seed in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let o = ops(BcFamily::NeuDir, vec![1.3, 2.1], 4);
        let u = state(o.space(), &seed);
        let lhs = apply_power(&apply_power(&u, a), b);
        let rhs = apply_power(&u, a + b);
        prop_assert!((&lhs - &rhs).norm() <= 1e-10 * rhs.norm().max(1.0));
        prop_assert!((frac_norm(&u, a) - apply_power(&u, a).norm()).abs() <= 1e-10 * frac_norm(&u, a).max(1.0));
    }

    #[test]
    fn bilinear_term_is_bilinear(
        s in -2.0f64..2.0,
        seed1 in prop::collection::vec(-1.0f64..1.0, 4),
        seed2 in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let o = ops(BcFamily::DirDir, vec![std::f64::consts::PI, 2.0], 4);
        let u = state(o.space(), &seed1);
        let z = state(o.space(), &seed2);
        let lhs = o.apply_bilinear(&u.scaled(s), &(&z + &u)).unwrap();
        let mut rhs = o.apply_bilinear(&u, &z).unwrap();
        rhs.axpy(1.0, &o.apply_bilinear(&u, &u).unwrap());
        let rhs = rhs.scaled(s);
        prop_assert!((&lhs - &rhs).norm() <= 1e-10 * rhs.norm().max(1.0));
    }
}
