//! Thermodynamic integration: `F_n = -integral_0^1 E_beta[log L] d beta`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use super::dataset::Dataset;
use super::ladder::{ExchangeMode, TemperatureLadder};
use super::likelihood::LikelihoodEvaluator;
use super::mcmc::{initial_scales, run_chain, Chain, ChainResult};
use super::model::{ModelSpace, Prior};
use super::stats::batch_means;
use crate::error::Result;
use crate::LabRng;

/// Rungs whose post-burn-in acceptance rate falls below this are flagged.
pub const MIN_ACCEPTANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMethod {
    ThermoIntegration,
    QuadratureOracle,
}

impl std::fmt::Display for EstimatorMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimatorMethod::ThermoIntegration => "thermo_integration",
            EstimatorMethod::QuadratureOracle => "quadrature_oracle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RungDiagnostic {
    pub rung: usize,
    pub beta: f64,
    pub mean_log_lik: f64,
    pub std_error: f64,
    pub acceptance_rate: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeEnergyEstimate {
    /// Nats.
    pub value: f64,
    pub std_error: f64,
    pub method: EstimatorMethod,
    /// One entry per rung for thermodynamic integration, empty for quadrature.
    pub diagnostics: Vec<RungDiagnostic>,
    /// Rungs with acceptance below [`MIN_ACCEPTANCE`].
    pub flagged_rungs: Vec<usize>,
    /// `|F(m) - F(m/2)|` for the quadrature oracle.
    pub grid_refinement_delta: Option<f64>,
}

impl FreeEnergyEstimate {
    pub fn is_flagged(&self) -> bool {
        !self.flagged_rungs.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn finish(ladder: &TemperatureLadder, rungs: Vec<(f64, f64, f64, f64)>) -> FreeEnergyEstimate {
    let weights = ladder.trapezoid_weights();
    let mut value = 0.0;
    let mut var = 0.0;
    let mut diagnostics = Vec::with_capacity(rungs.len());
    let mut flagged_rungs = Vec::new();
    for (j, ((mean, se, acc, ess), w)) in rungs.into_iter().zip(&weights).enumerate() {
        value -= w * mean;
        var += w * w * se * se;
        if acc < MIN_ACCEPTANCE {
            flagged_rungs.push(j);
        }
        diagnostics.push(RungDiagnostic {
            rung: j,
            beta: ladder.betas[j],
            mean_log_lik: mean,
            std_error: se,
            acceptance_rate: acc,
            ess,
        });
    }
    FreeEnergyEstimate {
        value,
        std_error: var.sqrt(),
        method: EstimatorMethod::ThermoIntegration,
        diagnostics,
        flagged_rungs,
        grid_refinement_delta: None,
    }
}

fn summarize(r: &ChainResult, batches: usize) -> (f64, f64, f64, f64) {
    let s = batch_means(&r.log_likelihoods, batches);
    (s.mean, s.std_error, r.acceptance_rate, s.ess)
}

/// Thermodynamic-integration estimate of `F_n = -log Z_n`.
///
/// Each rung gets its own generator seeded from `rng`. In the default annealed mode rung `j`
/// starts from the final state and tuned scales of rung `j - 1`; in independent mode every rung
/// starts from a prior draw and rungs run in parallel.
pub fn estimate_free_energy_ti<R: Rng + ?Sized>(
    model: &ModelSpace,
    dataset: &Dataset,
    prior: &Prior,
    ladder: &TemperatureLadder,
    rng: &mut R,
) -> Result<FreeEnergyEstimate> {
    ladder.validate()?;
    let seeds: Vec<u64> = ladder.betas.iter().map(|_| rng.random()).collect();
    if model.dim() == 0 {
        let ll = LikelihoodEvaluator::new(model, dataset)?.log_likelihood(&[]);
        let n = ladder.settings.steps / ladder.settings.thin;
        let rungs = ladder.betas.iter().map(|_| (ll, 0.0, 1.0, n as f64)).collect();
        return Ok(finish(ladder, rungs));
    }
    let s = &ladder.settings;
    let rungs = match ladder.exchange {
        ExchangeMode::Annealed => {
            let mut init = None;
            let mut out = Vec::with_capacity(seeds.len());
            for (&beta, &seed) in ladder.betas.iter().zip(&seeds) {
                let mut r = LabRng::seed_from_u64(seed);
                let res = run_chain(model, dataset, prior, beta, s, init.take(), &mut r)?;
                out.push(summarize(&res, s.batches));
                init = Some((res.final_state, res.scales));
            }
            out
        }
        ExchangeMode::Independent => ladder
            .betas
            .par_iter()
            .zip(&seeds)
            .map(|(&beta, &seed)| {
                let mut r = LabRng::seed_from_u64(seed);
                run_chain(model, dataset, prior, beta, s, None, &mut r).map(|res| summarize(&res, s.batches))
            })
            .collect::<Result<Vec<_>>>()?,
        ExchangeMode::ReplicaExchange { every } => replica_exchange(model, dataset, prior, ladder, every, &seeds)?,
    };
    Ok(finish(ladder, rungs))
}

/// All rungs advance in lockstep; every `every` sweeps adjacent pairs propose a state swap,
/// accepted with probability `min(1, exp((beta_j - beta_i)(L_i - L_j)))`.
fn replica_exchange(
    model: &ModelSpace,
    dataset: &Dataset,
    prior: &Prior,
    ladder: &TemperatureLadder,
    every: usize,
    seeds: &[u64],
) -> Result<Vec<(f64, f64, f64, f64)>> {
    let s = &ladder.settings;
    let mut swap_rng = LabRng::seed_from_u64(seeds[0] ^ 0x9e37_79b9_7f4a_7c15);
    let mut rngs: Vec<LabRng> = seeds.iter().map(|&sd| LabRng::seed_from_u64(sd)).collect();
    let mut chains = Vec::with_capacity(seeds.len());
    for (&beta, r) in ladder.betas.iter().zip(rngs.iter_mut()) {
        let theta = prior.sample(model.dim(), r);
        let scales = initial_scales(prior, model.dim(), s);
        chains.push(Chain::new(model, dataset, *prior, beta, theta, scales)?);
    }
    let mut lls: Vec<Vec<f64>> = vec![Vec::with_capacity(s.steps / s.thin); chains.len()];
    for sweep in 0..s.burn_in + s.steps {
        let counting = sweep >= s.burn_in;
        for (c, r) in chains.iter_mut().zip(rngs.iter_mut()) {
            c.sweep(r, counting);
            if !counting && (sweep + 1) % s.adapt_interval == 0 {
                c.adapt();
            }
        }
        if (sweep + 1) % every == 0 {
            for i in 0..chains.len() - 1 {
                let (li, lj) = (chains[i].log_lik(), chains[i + 1].log_lik());
                let log_a = (chains[i + 1].beta - chains[i].beta) * (li - lj);
                if swap_rng.random::<f64>().ln() < log_a {
                    let ti = std::mem::take(&mut chains[i].theta);
                    let tj = std::mem::take(&mut chains[i + 1].theta);
                    chains[i].set_state(tj, lj);
                    chains[i + 1].set_state(ti, li);
                }
            }
        }
        if counting && (sweep - s.burn_in + 1).is_multiple_of(s.thin) {
            for (c, out) in chains.iter_mut().zip(lls.iter_mut()) {
                out.push(c.log_lik());
            }
        }
    }
    Ok(chains
        .iter()
        .zip(&lls)
        .map(|(c, v)| {
            let b = batch_means(v, s.batches);
            (b.mean, b.std_error, c.acceptance_rate(), b.ess)
        })
        .collect())
}

/// Rung diagnostics as CSV: `rung,beta,mean_log_lik,acceptance_rate,ess`.
pub fn write_rung_csv<W: Write>(mut w: W, estimate: &FreeEnergyEstimate) -> Result<()> {
    writeln!(w, "rung,beta,mean_log_lik,acceptance_rate,ess")?;
    for d in &estimate.diagnostics {
        writeln!(
            w,
            "{},{},{},{},{}",
            d.rung, d.beta, d.mean_log_lik, d.acceptance_rate, d.ess
        )
        ?;
    }
    Ok(())
}

/// Chain samples as CSV: `index,log_lik,theta_0,...`.
pub fn write_samples_csv<W: Write>(mut w: W, chain: &ChainResult) -> Result<()> {
    let dim = chain.final_state.len();
    let header: Vec<String> = ["index".to_string(), "log_lik".to_string()]
        .into_iter()
        .chain((0..dim).map(|i| format!("theta_{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (i, (s, ll)) in chain.samples.iter().zip(&chain.log_likelihoods).enumerate() {
        let vals: Vec<String> = s.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{i},{ll},{}", vals.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::conjugate::{scalar_mean_free_energy, scalar_mean_model};
    use crate::bayes::dataset::generate_dataset;
    use crate::bayes::likelihood::empirical_entropy;
    use crate::bayes::mcmc::{mcmc_chain, McmcSettings};
    use crate::bayes::quadrature::{product_relu_model, quadrature_free_energy, GridSpec};
    use crate::seeded_rng;

    fn ladder() -> TemperatureLadder {
        TemperatureLadder::default_schedule(McmcSettings {
            burn_in: 200,
            steps: 1000,
            ..McmcSettings::default()
        })
    }

    #[test]
    fn zero_parameter_model_is_exact() {
        let (_, truth) = product_relu_model(1.0, 1.0);
        let model = ModelSpace::pinned(truth.arch(), truth.params().clone(), vec![]).unwrap();
        let data = generate_dataset(&truth, 30, &mut seeded_rng(1)).unwrap();
        let est = estimate_free_energy_ti(&model, &data, &Prior::default(), &ladder(), &mut seeded_rng(2)).unwrap();
        let ns = 30.0 * empirical_entropy(&truth, &data).unwrap();
        assert!((est.value - ns).abs() < 1e-6);
        assert_eq!(est.diagnostics.len(), 33);
    }

    #[test]
    fn matches_conjugate_at_n_50() {
        let (model, truth) = scalar_mean_model(0.3);
        let data = generate_dataset(&truth, 50, &mut seeded_rng(10)).unwrap();
        let prior = Prior::default();
        let est = estimate_free_energy_ti(&model, &data, &prior, &ladder(), &mut seeded_rng(11)).unwrap();
        let ys: Vec<f64> = data.iter().map(|(_, y)| y[0]).collect();
        let exact = scalar_mean_free_energy(&ys, prior.half_width);
        assert!((est.value - exact).abs() < 0.2, "{} vs {exact}", est.value);
        assert!(!est.is_flagged());
        assert!(est.std_error > 0.0);
    }

    #[test]
    fn matches_quadrature_on_product_relu() {
        let (model, truth) = product_relu_model(1.0, 1.0);
        let data = generate_dataset(&truth, 20, &mut seeded_rng(20)).unwrap();
        let prior = Prior::default();
        let q = quadrature_free_energy(&model, &data, &prior, &GridSpec::default()).unwrap();
        for mode in [
            ExchangeMode::Annealed,
            ExchangeMode::Independent,
            ExchangeMode::ReplicaExchange { every: 10 },
        ] {
            let l = ladder().with_exchange(mode);
            let est = estimate_free_energy_ti(&model, &data, &prior, &l, &mut seeded_rng(21)).unwrap();
            assert!((est.value - q.value).abs() < 0.3, "{mode:?}: {} vs {}", est.value, q.value);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let (model, truth) = product_relu_model(1.0, 1.0);
        let data = generate_dataset(&truth, 10, &mut seeded_rng(0)).unwrap();
        let l = TemperatureLadder::power(8, 5.0, McmcSettings { burn_in: 50, steps: 200, ..McmcSettings::default() }).unwrap();
        let a = estimate_free_energy_ti(&model, &data, &Prior::default(), &l, &mut seeded_rng(7)).unwrap();
        let b = estimate_free_energy_ti(&model, &data, &Prior::default(), &l, &mut seeded_rng(7)).unwrap();
        assert_eq!(a, b);
        let par = l.clone().with_exchange(ExchangeMode::Independent);
        let c = estimate_free_energy_ti(&model, &data, &Prior::default(), &par, &mut seeded_rng(7)).unwrap();
        let d = estimate_free_energy_ti(&model, &data, &Prior::default(), &par, &mut seeded_rng(7)).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn csv_exports() {
        let (model, truth) = product_relu_model(1.0, 1.0);
        let data = generate_dataset(&truth, 5, &mut seeded_rng(0)).unwrap();
        let l = TemperatureLadder::power(3, 5.0, McmcSettings { burn_in: 10, steps: 20, batches: 4, ..McmcSettings::default() }).unwrap();
        let est = estimate_free_energy_ti(&model, &data, &Prior::default(), &l, &mut seeded_rng(1)).unwrap();
        let mut buf = Vec::new();
        write_rung_csv(&mut buf, &est).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("rung,beta,mean_log_lik,acceptance_rate,ess\n"));
        let chain = mcmc_chain(&model, &data, &Prior::default(), 1.0, &l.settings, &mut seeded_rng(2)).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &chain).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("index,log_lik,theta_0,theta_1"));
        assert_eq!(text.lines().count(), 21);
        let json: serde_json::Value = serde_json::from_str(&est.to_json().unwrap()).unwrap();
        assert_eq!(json["method"], "thermo_integration");
        assert_eq!(json["diagnostics"].as_array().unwrap().len(), 4);
    }
}
