use plisskit_core::pliss::{analyze, density_bound, pliss_oracle, pliss_times, PlissParams};
use proptest::prelude::*;

/// Sequences with every entry `>= alpha1` and mean `<= alpha2`.
fn constrained() -> impl Strategy<Value = (Vec<f64>, PlissParams)> {
    (
        -3.0f64..0.0,
        0.05f64..2.0,
        0.05f64..2.0,
        prop::collection::vec(0.0f64..1.0, 1..=200),
    )
        .prop_map(|(alpha1, gap12, gap23, raw)| {
            let alpha2 = alpha1 + gap12;
            let alpha3 = alpha2 + gap23;
            // spread in [alpha1, alpha1 + 3 gap12], then pull the mean down
            let mut seq: Vec<f64> = raw.iter().map(|u| alpha1 + 3.0 * gap12 * u).collect();
            let mean = seq.iter().sum::<f64>() / seq.len() as f64;
            if mean > alpha2 {
                let scale = (alpha2 - alpha1) / (mean - alpha1);
                for a in &mut seq {
                    *a = alpha1 + (*a - alpha1) * scale;
                }
            }
            (seq, PlissParams::new(alpha1, alpha2, alpha3).unwrap())
        })
        .prop_filter("precondition", |(seq, p)| {
            seq.iter().all(|&a| a >= p.alpha1)
                && seq.iter().sum::<f64>() / seq.len() as f64 <= p.alpha2
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn scan_matches_oracle(
        seq in prop::collection::vec(-3.0f64..3.0, 1..=200),
        alpha3 in -3.0f64..3.0,
    ) {
        prop_assert_eq!(pliss_times(&seq, alpha3).unwrap(), pliss_oracle(&seq, alpha3).unwrap());
    }

    #[test]
    fn integer_sequences_with_ties(
        seq in prop::collection::vec(-2i32..=2, 1..=60),
        alpha3 in -2i32..=2,
    ) {
        let seq: Vec<f64> = seq.into_iter().map(f64::from).collect();
        let alpha3 = f64::from(alpha3);
        prop_assert_eq!(pliss_times(&seq, alpha3).unwrap(), pliss_oracle(&seq, alpha3).unwrap());
    }

    #[test]
    fn density_meets_bound((seq, params) in constrained()) {
        let result = analyze(&seq, &params).unwrap();
        let bound = density_bound(&params).unwrap();
        prop_assert_eq!(result.bound, bound);
        prop_assert!(
            result.density >= bound - 1.0 / seq.len() as f64,
            "density {} bound {}", result.density, bound
        );
    }
}

#[test]
fn worked_example() {
    assert_eq!(
        pliss_times(&[-1.0, -1.0, 1.0, -1.0], 0.0).unwrap(),
        [0, 1, 3]
    );
    assert_eq!(
        pliss_oracle(&[-1.0, -1.0, 1.0, -1.0], 0.0).unwrap(),
        [0, 1, 3]
    );
}
