use proptest::prelude::*;
use qplab_core::coords::{fg_to_xy, xy_to_fg};
use qplab_core::model::check_state;
use qplab_core::symmetry::apply_fg;
use qplab_core::{GeneratorId, SampleOptions, Scalar, Snapshot, TruncSeries};

fn sample(n: usize, seed: u64) -> Option<Snapshot> {
    Snapshot::sample(n, seed, &SampleOptions::default()).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forward_then_backward_is_identity(n in 1usize..=3, seed in any::<u64>()) {
        let Some(s) = sample(n, seed) else { return Ok(()) };
        let Ok(next) = s.forward() else { return Ok(()) };
        prop_assert_eq!(next.params.t(), &(s.params.t() * s.params.q()));
        prop_assert_eq!(next.backward().unwrap(), s);
    }

    #[test]
    fn dictionary_is_a_bijection(n in 1usize..=4, seed in any::<u64>()) {
        let Some(s) = sample(n, seed) else { return Ok(()) };
        let frame = fg_to_xy(&s.state, &s.params).unwrap();
        prop_assert!(check_state(&frame, &s.params).passed);
        prop_assert_eq!(xy_to_fg(&frame, &s.params).unwrap(), s.state);
    }

    #[test]
    fn reflections_are_involutions(n in 1usize..=3, k in 0usize..8, seed in any::<u64>()) {
        let k = k % (2 * n + 2);
        let Some(s) = sample(n, seed) else { return Ok(()) };
        let g = GeneratorId::Reflection(k);
        let Ok((st, p)) = apply_fg(g, &s.state, &s.params) else { return Ok(()) };
        let (back, bp) = apply_fg(g, &st, &p).unwrap();
        prop_assert_eq!(back, s.state);
        prop_assert_eq!(bp, s.params);
    }

    #[test]
    fn snapshot_json_round_trip(n in 1usize..=3, seed in any::<u64>()) {
        let Some(s) = sample(n, seed) else { return Ok(()) };
        let json = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(serde_json::from_str::<Snapshot>(&json).unwrap(), s);
    }

    #[test]
    fn series_reciprocal(c in prop::collection::vec((-20i64..20, 1i64..20), 1..8)) {
        let coeffs: Vec<Scalar> = c.iter().map(|&(p, q)| Scalar::ratio(p, q).unwrap()).collect();
        let order = coeffs.len() - 1;
        let s = TruncSeries::from_coeffs(coeffs, order);
        match s.recip() {
            Ok(r) => prop_assert_eq!(s.mul(&r).unwrap(), TruncSeries::one(order)),
            Err(_) => prop_assert!(s.coeff(0).is_zero()),
        }
    }
}
