//! Property tests for the structural invariants that should hold for any
//! parameter choice, not just the reference configuration.

use kljn_core::noise::{johnson_scaling, NoiseFamily};
use kljn_core::{
    parse_trace_csv, simulate_state, LoopState, ResistorPair, Rng64, TraceMeta, WireTrace,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Johnson scaling makes the squared-magnitude ratio exactly R_L/R_H
    /// for every family, independent of the absolute magnitude.
    #[test]
    fn johnson_ratio_is_exact(
        r_low in 1.0f64..1e6,
        ratio in 1.001f64..1e3,
        mag in 1e-6f64..1e6,
        family_sel in 0usize..3,
        alpha in 0.2f64..2.0,
    ) {
        let pair = ResistorPair::new(r_low, r_low * ratio).unwrap();
        let family = match family_sel {
            0 => NoiseFamily::Gaussian,
            1 => NoiseFamily::SymmetricStable { alpha },
            _ => NoiseFamily::Uniform,
        };
        let a = johnson_scaling(&pair, family, mag).unwrap();
        let got = (a.low().magnitude() / a.high().magnitude()).powi(2);
        let want = pair.r_low() / pair.r_high();
        prop_assert!((got - want).abs() <= 1e-12 * want);
    }

    /// Mirroring is an involution and swaps nothing but the current sign.
    #[test]
    fn mirror_is_an_involution(seed in any::<u64>(), n in 4usize..64) {
        let pair = ResistorPair::new(1_000.0, 10_000.0).unwrap();
        let a = johnson_scaling(&pair, NoiseFamily::Gaussian, 1.0).unwrap();
        let t = simulate_state(LoopState::LH, &pair, &a, n, &mut Rng64::new(seed)).unwrap();
        let back = t.mirror().mirror();
        prop_assert_eq!(t.v(), back.v());
        prop_assert_eq!(t.i(), back.i());
        let m = t.mirror();
        prop_assert_eq!(t.v(), m.v());
        for (a, b) in t.i().iter().zip(m.i()) {
            prop_assert_eq!(-a, *b);
        }
    }

    /// CSV serialization round-trips bit-exactly for arbitrary finite values.
    #[test]
    fn csv_round_trip_is_bit_exact(
        vals in prop::collection::vec((-1e12f64..1e12, -1e12f64..1e12), 1..32),
    ) {
        let (v, i): (Vec<f64>, Vec<f64>) = vals.into_iter().unzip();
        let n = v.len();
        let meta = TraceMeta {
            pair: ResistorPair::new(1.0, 2.0).unwrap(),
            seed: 7,
            sample_count: n,
        };
        let t = WireTrace::from_samples(v, i, meta).unwrap();
        let parsed = parse_trace_csv(&t.to_csv_string()).unwrap();
        prop_assert_eq!(t.v(), parsed.0.as_slice());
        prop_assert_eq!(t.i(), parsed.1.as_slice());
    }
}
