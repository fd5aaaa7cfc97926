use proptest::prelude::*;

use relulab_core::embedding::{
    build_optimal_params, check_compatibility, lambda_relu, max_b_block_output, sample_essential_params,
    verify_realization, EssentialSampleConfig, InputDistSpec, SupportMode, TrueModel,
};
use relulab_core::{seeded_rng, Activation, Architecture, Parameters};

/// True widths, model widths, and a seed; the model is compatible by construction.
fn compatible_pair() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, u64)> {
    (prop::collection::vec(1usize..=4, 3..=4), 0usize..=2, any::<u64>()).prop_flat_map(|(wt, extra, seed)| {
        let nt = wt.len();
        let n = nt + extra;
        let floors: Vec<usize> = (2..n)
            .map(|k| if k < nt { wt[k - 1] } else { wt[nt - 2] })
            .collect();
        let hidden: Vec<BoxedStrategy<usize>> = floors.iter().map(|&f| (f..=f + 2).boxed()).collect();
        (Just(wt), hidden, Just(seed)).prop_map(|(wt, hidden, seed)| {
            let mut wm = vec![wt[0]];
            wm.extend(hidden);
            wm.push(*wt.last().unwrap());
            (wt, wm, seed)
        })
    })
}

fn true_model(widths: &[usize], input: InputDistSpec, seed: u64) -> TrueModel {
    use rand::Rng;
    let arch = Architecture::new(widths.to_vec(), Activation::Relu).unwrap();
    let mut rng = seeded_rng(seed);
    let p = (0..arch.num_params()).map(|_| rng.random_range(-1.5..1.5)).collect();
    let params = Parameters::from_flat(&arch, p).unwrap();
    TrueModel::new(arch, params, input).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimal_parameters_realize_the_truth((wt, wm, seed) in compatible_pair()) {
        let t = true_model(&wt, InputDistSpec::gaussian(wt[0]), seed);
        let am = Architecture::relu(&wm).unwrap();
        prop_assert!(check_compatibility(t.arch(), &am).satisfied);
        let mut rng = seeded_rng(seed ^ 1);
        let p = build_optimal_params(&t, &am, &mut rng).unwrap();
        prop_assert!(verify_realization(&t, &am, &p, 200, &mut rng).unwrap() <= 1e-9);
        prop_assert_eq!(max_b_block_output(&t, &am, &p, 2, 100, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn essential_samples_silence_b_units((wt, wm, seed) in compatible_pair()) {
        let am = Architecture::relu(&wm).unwrap();
        let t = true_model(&wt, InputDistSpec::uniform_box(-1.0, 1.0, wt[0]).unwrap(), seed);
        let cfg = EssentialSampleConfig::new(400, SupportMode::Bounded);
        let mut rng = seeded_rng(seed ^ 2);
        let s = sample_essential_params(&t, &am, &cfg, &mut rng).unwrap();
        prop_assert_eq!(max_b_block_output(&t, &am, &s.params, 2, 100, &mut rng).unwrap(), 0.0);
        let lam = lambda_relu(t.arch(), &am, SupportMode::Bounded).unwrap();
        prop_assert_eq!(s.counts.convergent as u64, lam.twice);
    }

    #[test]
    fn lambda_at_equal_architectures_is_half_the_parameter_count((wt, _wm, _seed) in compatible_pair()) {
        let a = Architecture::relu(&wt).unwrap();
        for mode in [SupportMode::General, SupportMode::Nonnegative, SupportMode::Bounded] {
            prop_assert_eq!(lambda_relu(&a, &a, mode).unwrap().twice as usize, a.num_params());
        }
    }
}
