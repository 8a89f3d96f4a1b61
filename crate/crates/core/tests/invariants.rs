use proptest::prelude::*;
use skewdiag::ensembles::{sample_matrix, EnsembleSpec, Regime};
use skewdiag::hankel_volume::{build_affine_system, hankel_volume, VolumeMethod};
use skewdiag::partitions::{enumerate_pair_partitions, PairPartition};
use skewdiag::rational::to_f64;
use skewdiag::spectra::{eigenvalues, empirical_moment, trace_power};

fn partition() -> impl Strategy<Value = PairPartition> {
    (1usize..=4).prop_flat_map(|m| {
        let all = enumerate_pair_partitions(2 * m).unwrap();
        let len = all.len();
        (0..len).prop_map(move |i| all[i].clone())
    })
}

fn regime() -> impl Strategy<Value = Regime> {
    prop_oneof![
        (0.0..0.95f64).prop_map(|rho| Regime::WeakC1 { rho }),
        (0.0..=1.0f64).prop_map(|c| Regime::ConstantC2 { c }),
        Just(Regime::Hankel),
        Just(Regime::Iid),
    ]
}

proptest! {
    #[test]
    fn reflection_preserves_height_and_volume(p in partition()) {
        let r = p.reflect();
        prop_assert_eq!(r.reflect(), p.clone());
        prop_assert_eq!(r.height(), p.height());
        let a = hankel_volume(&p, VolumeMethod::Exact).unwrap().exact.unwrap();
        let b = hankel_volume(&r, VolumeMethod::Exact).unwrap().exact.unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn volumes_lie_in_unit_interval(p in partition()) {
        let v = to_f64(&hankel_volume(&p, VolumeMethod::Exact).unwrap().exact.unwrap());
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert_eq!(v == 1.0, !p.is_crossing());
    }

    #[test]
    fn solved_variables_stay_in_cube_at_random_points(p in partition(), u in prop::collection::vec(0.0..1.0f64, 5)) {
        let s = build_affine_system(&p);
        let x = s.evaluate(&u[..s.dimension()]);
        prop_assert_eq!(x.len(), p.k() + 1);
        for (&var, &val) in s.free_vars().iter().zip(&u) {
            prop_assert_eq!(x[var], val);
        }
    }

    #[test]
    fn moments_match_traces(regime in regime(), n in 2usize..24, seed in any::<u64>()) {
        let m = sample_matrix(&EnsembleSpec::new(n, regime).unwrap(), seed).unwrap();
        let s = eigenvalues(&m).unwrap();
        for k in 1..=4u32 {
            let via_trace = trace_power(&m, k) / n as f64;
            let via_eigen = empirical_moment(&s, k).unwrap();
            prop_assert!((via_trace - via_eigen).abs() <= 1e-9 * (1.0 + via_trace.abs()));
        }
    }
}
