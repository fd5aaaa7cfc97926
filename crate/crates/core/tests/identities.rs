use relulab_core::bayes::{
    empirical_entropy, entropy_true, estimate_free_energy_ti, estimate_gen_error, generate_dataset,
    generate_dataset_with_noise, kl_divergence_mc, log_likelihood, product_relu_model, quadrature_free_energy,
    quadrature_posterior, restricted_free_energy, GridSpec, McmcSettings, ModelSpace, ParamBox, Prior,
    TemperatureLadder,
};
use relulab_core::embedding::{build_optimal_params, InputDistSpec, TrueModel};
use relulab_core::{seeded_rng, Architecture, Parameters};

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn noiseless_data_reproduces_the_network() {
    let (_, truth) = product_relu_model(1.5, -0.5);
    let data = generate_dataset_with_noise(&truth, 50, 0.0, &mut seeded_rng(1)).unwrap();
    for (x, y) in data.iter() {
        assert_eq!(y[0], 1.5 * (-0.5 * x[0]).max(0.0));
    }
    let s = empirical_entropy(&truth, &data).unwrap();
    assert!((s - 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
}

#[test]
fn noise_has_zero_mean() {
    let (_, truth) = product_relu_model(1.0, 1.0);
    let data = generate_dataset(&truth, 100_000, &mut seeded_rng(2)).unwrap();
    let m: f64 = data.iter().map(|(x, y)| y[0] - x[0].max(0.0)).sum::<f64>() / 100_000.0;
    assert!(m.abs() < 0.02);
}

#[test]
fn empirical_entropy_averages_to_entropy() {
    let (_, truth) = product_relu_model(1.0, 1.0);
    let mut rng = seeded_rng(3);
    let v: Vec<f64> = (0..100)
        .map(|_| empirical_entropy(&truth, &generate_dataset(&truth, 20, &mut rng).unwrap()).unwrap())
        .collect();
    let (m, se) = mean_se(&v);
    assert!((m - entropy_true(&truth)).abs() < 3.0 * se, "{m} +- {se}");
}

#[test]
fn entropy_matches_monte_carlo() {
    let (_, truth) = product_relu_model(1.0, 1.0);
    let data = generate_dataset(&truth, 1_000_000, &mut seeded_rng(4)).unwrap();
    let per: Vec<f64> = data
        .iter()
        .map(|(x, y)| {
            let r = y[0] - x[0].max(0.0);
            0.5 * (2.0 * std::f64::consts::PI).ln() + 0.5 * r * r
        })
        .collect();
    let (m, se) = mean_se(&per);
    assert!((m - entropy_true(&truth)).abs() < 3.0 * se);
}

#[test]
fn likelihood_is_additive() {
    let (model, truth) = product_relu_model(1.0, 1.0);
    let a = generate_dataset(&truth, 7, &mut seeded_rng(5)).unwrap();
    let b = generate_dataset(&truth, 4, &mut seeded_rng(6)).unwrap();
    let p = model.params(&[0.3, -1.2]);
    let arch = model.arch();
    let whole = log_likelihood(arch, &p, &a.concat(&b).unwrap()).unwrap();
    let parts = log_likelihood(arch, &p, &a).unwrap() + log_likelihood(arch, &p, &b).unwrap();
    assert!((whole - parts).abs() < 1e-10);
}

#[test]
fn kl_vanishes_at_optimum_and_matches_shift() {
    let at = Architecture::relu(&[1, 2, 1]).unwrap();
    let p = Parameters::from_flat(&at, vec![1.0, -1.0, 0.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
    let t = TrueModel::new(at, p, InputDistSpec::uniform_box(-1.0, 1.0, 1).unwrap()).unwrap();
    let am = Architecture::relu(&[1, 3, 3, 1]).unwrap();
    let mut rng = seeded_rng(7);
    let opt = build_optimal_params(&t, &am, &mut rng).unwrap();
    assert!(kl_divergence_mc(&t, &am, &opt, 1000, &mut rng).unwrap() <= 1e-12);

    let lin = Architecture::linear(&[1, 1]).unwrap();
    let base = Parameters::from_flat(&lin, vec![0.7, 0.1]).unwrap();
    let t = TrueModel::new(lin.clone(), base, InputDistSpec::gaussian(1)).unwrap();
    let shifted = Parameters::from_flat(&lin, vec![0.7, 2.1]).unwrap();
    let k = kl_divergence_mc(&t, &lin, &shifted, 100, &mut rng).unwrap();
    assert!((k - 2.0).abs() < 1e-12);
}

#[test]
fn increment_identity_in_expectation() {
    // E[G_n] = E[F_{n+1}] - E[F_n] - S on the grid posterior
    let (model, truth) = product_relu_model(1.0, 1.0);
    let prior = Prior::default();
    let grid = GridSpec { points_per_axis: 80 };
    let s = entropy_true(&truth);
    let mut rng = seeded_rng(8);
    let mut diffs = Vec::new();
    let mut gens = Vec::new();
    for _ in 0..60 {
        let all = generate_dataset(&truth, 11, &mut rng).unwrap();
        let d = all.prefix(10);
        let f10 = quadrature_free_energy(&model, &d, &prior, &grid).unwrap().value;
        let f11 = quadrature_free_energy(&model, &all, &prior, &grid).unwrap().value;
        let post = quadrature_posterior(&model, &d, &prior, &grid).unwrap();
        let g = estimate_gen_error(&model, &post, &truth, 50, &mut rng).unwrap().value;
        gens.push(g);
        diffs.push(g - (f11 - f10 - s));
    }
    let (m, se) = mean_se(&diffs);
    assert!(m.abs() < 3.0 * se, "{m} +- {se}");
    let (gm, gse) = mean_se(&gens);
    assert!(gm >= -3.0 * gse);
}

#[test]
fn prior_mass_bound_dominates_free_energy_on_average() {
    let (model, truth) = product_relu_model(1.0, 1.0);
    let prior = Prior::default();
    let n = 20;
    let bx = ParamBox::cube(2, prior.half_width).unwrap();
    let g = restricted_free_energy(&truth, &model, &prior, n, &|_| true, &bx, 20_000, 2_000, &mut seeded_rng(9))
        .unwrap()
        .value;
    let bound = n as f64 * entropy_true(&truth) + g;
    let mut rng = seeded_rng(10);
    let fs: Vec<f64> = (0..50)
        .map(|_| {
            let d = generate_dataset(&truth, n as usize, &mut rng).unwrap();
            quadrature_free_energy(&model, &d, &prior, &GridSpec { points_per_axis: 100 }).unwrap().value
        })
        .collect();
    let (m, se) = mean_se(&fs);
    assert!(m <= bound + 3.0 * se, "{m} +- {se} vs {bound}");
}

#[test]
fn ti_agrees_with_quadrature_on_small_models() {
    let settings = McmcSettings {
        burn_in: 300,
        steps: 1500,
        ..McmcSettings::default()
    };
    let ladder = TemperatureLadder::default_schedule(settings);
    let prior = Prior::default();
    let (two, truth) = product_relu_model(1.0, 1.0);
    let lin = Architecture::linear(&[1, 1]).unwrap();
    let line = TrueModel::new(
        lin.clone(),
        Parameters::from_flat(&lin, vec![0.8, -0.3]).unwrap(),
        InputDistSpec::gaussian(1),
    )
    .unwrap();
    let three_arch = Architecture::linear(&[1, 1, 1]).unwrap();
    let three = ModelSpace::pinned(
        &three_arch,
        Parameters::zeros(&three_arch),
        vec![
            three_arch.weight_index(2, 0, 0),
            three_arch.weight_index(3, 0, 0),
            three_arch.bias_index(3, 0),
        ],
    )
    .unwrap();
    let cases: Vec<(ModelSpace, TrueModel)> = vec![
        (two.clone(), truth.clone()),
        (ModelSpace::full(&lin), line),
        (three, truth),
    ];
    for (i, (model, t)) in cases.iter().enumerate() {
        for n in [10, 50] {
            let d = generate_dataset(t, n, &mut seeded_rng(100 + i as u64)).unwrap();
            let grid = GridSpec {
                points_per_axis: if model.dim() == 3 { 100 } else { 200 },
            };
            let q = quadrature_free_energy(model, &d, &prior, &grid).unwrap().value;
            let ti = estimate_free_energy_ti(model, &d, &prior, &ladder, &mut seeded_rng(200 + i as u64))
                .unwrap()
                .value;
            assert!((ti - q).abs() <= 0.3, "case {i} n {n}: {ti} vs {q}");
        }
    }
}
