//! The perturbation-based SQI: the worst metric value the task reaches on
//! admissible perturbations of its own input, judged against its own output
//! on the clean input. Ground truth never enters this computation.

use serde::{Deserialize, Serialize};

use crate::cmaes::{decode, minimize, CmaConfig};
use crate::error::{Error, Result};
use crate::perturbation::{apply_perturbation, sample_noise, PerturbationParams};
use crate::rng::mix_seed;
use crate::signal::{useful_component, Signal, SnrConfig};
use crate::tasks::TaskBinding;

const NOISE_STREAM: u64 = 0x6e6f_6973_6500_0001;
const SEARCH_STREAM: u64 = 0x636d_6165_7300_0002;

/// pSQI settings. The noise draw and the CMA-ES stream of a window are both
/// derived from `master_seed` and the window index; `cma.seed` is not used
/// here.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PsqiConfig {
    pub snr: SnrConfig,
    pub cma: CmaConfig,
    pub master_seed: u64,
}

impl PsqiConfig {
    pub fn with_snr(mut self, gamma_db: f64, beta_db: f64) -> Self {
        self.snr.gamma_db = gamma_db;
        self.snr.beta_db = beta_db;
        self
    }

    pub fn noise_seed(&self, window: u64) -> u64 {
        mix_seed(self.master_seed, window, NOISE_STREAM)
    }

    pub fn search_seed(&self, window: u64) -> u64 {
        mix_seed(self.master_seed, window, SEARCH_STREAM)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEvaluation {
    pub u: Vec<f64>,
    pub theta: PerturbationParams,
    pub metric: f64,
    /// The task errored on this candidate; `metric` is then 0.
    pub failed: bool,
    pub generation: usize,
}

#[derive(Debug, Clone)]
pub struct PsqiResult<Y> {
    pub score: f64,
    /// Band of the worst candidate; `None` for degenerate signals.
    pub worst_theta: Option<PerturbationParams>,
    pub clean_output: Y,
    /// Task output on the worst candidate, `None` if it failed or the signal
    /// was degenerate.
    pub worst_output: Option<Y>,
    pub evaluations: Vec<CandidateEvaluation>,
    /// The useful component has zero energy, so no perturbation is admissible.
    pub degenerate: bool,
    pub noise_seed: u64,
    pub task_calls: usize,
}

impl<Y> PsqiResult<Y> {
    pub fn failures(&self) -> usize {
        self.evaluations.iter().filter(|e| e.failed).count()
    }
}

/// Scores window `window` of a dataset. The index only feeds seed
/// derivation.
pub fn psqi_score<Y: Clone>(
    x: &Signal,
    binding: &TaskBinding<Y>,
    cfg: &PsqiConfig,
    window: u64,
) -> Result<PsqiResult<Y>> {
    cfg.snr.validate()?;
    cfg.cma.validate()?;
    let fs = x.fs();
    let x_filt = useful_component(x)?;
    let clean_output = binding.run(x)?;
    let self_metric = binding.metric(&clean_output, &clean_output, fs);
    let noise_seed = cfg.noise_seed(window);

    if x_filt.energy() == 0.0 {
        return Ok(PsqiResult {
            score: self_metric,
            worst_theta: None,
            clean_output,
            worst_output: None,
            evaluations: Vec::new(),
            degenerate: true,
            noise_seed,
            task_calls: 1,
        });
    }

    let z = sample_noise(noise_seed, x.len())?;
    let search = CmaConfig {
        seed: cfg.search_seed(window),
        ..cfg.cma
    };

    let mut evaluations = Vec::with_capacity(search.budget());
    let mut worst: Option<(f64, Option<Y>)> = None;
    let mut hard_error: Option<Error> = None;
    let mut generation = 0usize;
    let mut in_generation = 0usize;

    let objective = |u: &[f64]| -> f64 {
        let theta = decode(u, fs);
        let perturbed = match apply_perturbation(x, &x_filt, &z, theta, &cfg.snr) {
            Ok(p) => p,
            Err(e) => {
                hard_error.get_or_insert(e);
                return f64::NAN;
            }
        };
        let (metric, output, failed) = match binding.run(&perturbed) {
            Ok(y) => (binding.metric(&y, &clean_output, fs), Some(y), false),
            Err(_) => (0.0, None, true),
        };
        if worst.as_ref().is_none_or(|(m, _)| metric < *m) {
            worst = Some((metric, output));
        }
        evaluations.push(CandidateEvaluation {
            u: u.to_vec(),
            theta,
            metric,
            failed,
            generation,
        });
        in_generation += 1;
        if in_generation == search.population {
            in_generation = 0;
            generation += 1;
        }
        metric
    };
    minimize(objective, &[0.0, 0.0], &search)?;
    if let Some(e) = hard_error {
        return Err(e);
    }

    // Earliest candidate wins ties, matching the optimizer's own rule.
    let best = evaluations
        .iter()
        .fold(None, |acc: Option<&CandidateEvaluation>, e| match acc {
            Some(b) if b.metric <= e.metric => Some(b),
            _ => Some(e),
        })
        .expect("budget is at least two evaluations");
    let task_calls = evaluations.len() + 1;
    Ok(PsqiResult {
        score: best.metric,
        worst_theta: Some(best.theta),
        clean_output,
        worst_output: worst.and_then(|(_, y)| y),
        evaluations,
        degenerate: false,
        noise_seed,
        task_calls,
    })
}

/// The perturbed signal of the worst candidate of a previous run.
pub fn worst_case_signal<Y>(
    x: &Signal,
    result: &PsqiResult<Y>,
    cfg: &PsqiConfig,
) -> Result<Signal> {
    let Some(theta) = result.worst_theta else {
        return Ok(x.clone());
    };
    let x_filt = useful_component(x)?;
    let z = sample_noise(result.noise_seed, x.len())?;
    apply_perturbation(x, &x_filt, &z, theta, &cfg.snr)
}
