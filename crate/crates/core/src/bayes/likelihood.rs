use std::f64::consts::PI;

use rand::Rng;

use super::dataset::Dataset;
use super::model::ModelSpace;
use crate::embedding::TrueModel;
use crate::error::{LabError, Result};
use crate::network::{Architecture, Evaluator, Parameters};

/// `log p(y | f)` for the unit-covariance Gaussian observation model.
#[inline]
pub fn log_density(y: &[f64], f: &[f64]) -> f64 {
    let sq: f64 = y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum();
    -0.5 * y.len() as f64 * (2.0 * PI).ln() - 0.5 * sq
}

fn check_data(arch: &Architecture, dataset: &Dataset) -> Result<()> {
    if dataset.input_dim() != arch.input_dim() {
        return Err(LabError::Dimension {
            layer: 1,
            expected: arch.input_dim(),
            actual: dataset.input_dim(),
        });
    }
    if dataset.output_dim() != arch.output_dim() {
        return Err(LabError::Dimension {
            layer: arch.depth(),
            expected: arch.output_dim(),
            actual: dataset.output_dim(),
        });
    }
    Ok(())
}

/// `sum_i log p(Y_i | w, b, X_i)`.
pub fn log_likelihood(arch: &Architecture, params: &Parameters, dataset: &Dataset) -> Result<f64> {
    params.check(arch)?;
    check_data(arch, dataset)?;
    let mut ev = Evaluator::new(arch);
    Ok(sum_log_density(arch, params.as_flat(), dataset, &mut ev))
}

fn sum_log_density(arch: &Architecture, theta: &[f64], dataset: &Dataset, ev: &mut Evaluator) -> f64 {
    let d = dataset.output_dim() as f64;
    let mut sq = 0.0;
    for (x, y) in dataset.iter() {
        let f = ev.eval(arch, theta, x);
        sq += y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    -0.5 * dataset.len() as f64 * d * (2.0 * PI).ln() - 0.5 * sq
}

/// Conditional differential entropy `S` of the unit-covariance Gaussian noise.
pub fn entropy_true(true_model: &TrueModel) -> f64 {
    0.5 * true_model.arch().output_dim() as f64 * (1.0 + (2.0 * PI).ln())
}

/// `S_n = -(1/n) sum_i log q(Y_i | X_i)`.
pub fn empirical_entropy(true_model: &TrueModel, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(LabError::InvalidArgument("empty dataset".into()));
    }
    Ok(-log_likelihood(true_model.arch(), true_model.params(), dataset)? / dataset.len() as f64)
}

/// Monte-Carlo estimate of `K(w, b) = (1/2) E_x ||f(w, b, x) - f*(x)||^2`.
pub fn kl_divergence_mc<R: Rng + ?Sized>(
    true_model: &TrueModel,
    arch_model: &Architecture,
    params: &Parameters,
    num_inputs: usize,
    rng: &mut R,
) -> Result<f64> {
    if num_inputs == 0 {
        return Err(LabError::InvalidArgument("num_inputs must be at least 1".into()));
    }
    params.check(arch_model)?;
    let inputs: Vec<Vec<f64>> = (0..num_inputs)
        .map(|_| true_model.input_dist().sample(rng))
        .collect();
    let targets = true_outputs(true_model, &inputs);
    Ok(kl_on_inputs(arch_model, params.as_flat(), &inputs, &targets, &mut Evaluator::new(arch_model)))
}

pub(crate) fn true_outputs(true_model: &TrueModel, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut ev = Evaluator::new(true_model.arch());
    inputs
        .iter()
        .map(|x| ev.eval(true_model.arch(), true_model.params().as_flat(), x).to_vec())
        .collect()
}

/// `K` on a fixed set of inputs with precomputed true outputs.
pub(crate) fn kl_on_inputs(
    arch: &Architecture,
    theta: &[f64],
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    ev: &mut Evaluator,
) -> f64 {
    let total: f64 = inputs
        .iter()
        .zip(targets)
        .map(|(x, t)| {
            let f = ev.eval(arch, theta, x);
            f.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        })
        .sum();
    0.5 * total / inputs.len() as f64
}

/// Log-likelihood over the free coordinates of a [`ModelSpace`], reusing buffers.
#[derive(Debug, Clone)]
pub struct LikelihoodEvaluator<'a> {
    model: &'a ModelSpace,
    dataset: &'a Dataset,
    full: Vec<f64>,
    ev: Evaluator,
}

impl<'a> LikelihoodEvaluator<'a> {
    pub fn new(model: &'a ModelSpace, dataset: &'a Dataset) -> Result<Self> {
        check_data(model.arch(), dataset)?;
        Ok(LikelihoodEvaluator {
            model,
            dataset,
            full: model.base().as_flat().to_vec(),
            ev: Evaluator::new(model.arch()),
        })
    }

    pub fn log_likelihood(&mut self, free: &[f64]) -> f64 {
        self.model.fill(free, &mut self.full);
        sum_log_density(self.model.arch(), &self.full, self.dataset, &mut self.ev)
    }

    /// `log p(y | x, theta)` for a single pair.
    pub fn log_density_at(&mut self, free: &[f64], x: &[f64], y: &[f64]) -> f64 {
        self.model.fill(free, &mut self.full);
        let f = self.ev.eval(self.model.arch(), &self.full, x);
        log_density(y, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::dataset::{generate_dataset, generate_dataset_with_noise};
    use crate::embedding::InputDistSpec;
    use crate::seeded_rng;

    fn line(b: f64) -> TrueModel {
        let arch = Architecture::linear(&[1, 1]).unwrap();
        TrueModel::new(
            arch.clone(),
            Parameters::from_flat(&arch, vec![0.5, b]).unwrap(),
            InputDistSpec::gaussian(1),
        )
        .unwrap()
    }

    #[test]
    fn zero_residual_and_unit_residual() {
        let t = line(0.0);
        let d = Dataset::from_pairs(&[(vec![2.0], vec![1.0])]).unwrap();
        let ll = log_likelihood(t.arch(), t.params(), &d).unwrap();
        assert!((ll + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        let d = Dataset::from_pairs(&[(vec![2.0], vec![3.0])]).unwrap();
        let ll = log_likelihood(t.arch(), t.params(), &d).unwrap();
        assert!((ll - (-0.5 * (2.0 * PI).ln() - 2.0)).abs() < 1e-15);
    }

    #[test]
    fn additive_over_concatenation() {
        let t = line(0.3);
        let mut rng = seeded_rng(4);
        let a = generate_dataset(&t, 7, &mut rng).unwrap();
        let b = generate_dataset(&t, 5, &mut rng).unwrap();
        let p = Parameters::from_flat(t.arch(), vec![0.1, -0.2]).unwrap();
        let whole = log_likelihood(t.arch(), &p, &a.concat(&b).unwrap()).unwrap();
        let parts = log_likelihood(t.arch(), &p, &a).unwrap() + log_likelihood(t.arch(), &p, &b).unwrap();
        assert!((whole - parts).abs() < 1e-10);
    }

    #[test]
    fn entropy_values() {
        assert!((entropy_true(&line(0.0)) - 1.418_938_533_204_672_7).abs() < 1e-12);
        let arch = Architecture::linear(&[1, 2]).unwrap();
        let t2 = TrueModel::new(arch.clone(), Parameters::zeros(&arch), InputDistSpec::gaussian(1)).unwrap();
        assert_eq!(entropy_true(&t2), 2.0 * entropy_true(&line(0.0)));
    }

    #[test]
    fn noiseless_data_and_empirical_entropy() {
        let t = line(1.0);
        let mut rng = seeded_rng(9);
        let d = generate_dataset_with_noise(&t, 20, 0.0, &mut rng).unwrap();
        for (x, y) in d.iter() {
            assert_eq!(y[0], 0.5 * x[0] + 1.0);
        }
        let s = empirical_entropy(&t, &d).unwrap();
        assert!((s - 0.5 * (2.0 * PI).ln()).abs() < 1e-12);
        let one = d.prefix(1);
        let direct = -log_density(one.output(0), &[0.5 * one.input(0)[0] + 1.0]);
        assert!((empirical_entropy(&t, &one).unwrap() - direct).abs() < 1e-15);
        assert!(generate_dataset(&t, 0, &mut rng).is_err());
    }

    #[test]
    fn kl_of_constant_shift() {
        let t = line(0.0);
        let shifted = Parameters::from_flat(t.arch(), vec![0.5, 2.0]).unwrap();
        let k = kl_divergence_mc(&t, t.arch(), &shifted, 100, &mut seeded_rng(1)).unwrap();
        assert!((k - 2.0).abs() < 1e-12);
        let k0 = kl_divergence_mc(&t, t.arch(), t.params(), 100, &mut seeded_rng(1)).unwrap();
        assert_eq!(k0, 0.0);
        assert!(kl_divergence_mc(&t, t.arch(), t.params(), 0, &mut seeded_rng(1)).is_err());
    }
}
