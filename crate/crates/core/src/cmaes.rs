//! Covariance matrix adaptation evolution strategy, and the bounded
//! encoding of noise bands used as its search space.
//!
//! The update is the textbook (mu/mu_w, lambda)-CMA-ES with positive
//! recombination weights, cumulative step-size adaptation and rank-one plus
//! rank-mu covariance updates. Default learning rates depend only on the
//! dimension and the population size.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturbation::{PerturbationParams, MIN_BANDWIDTH_HZ, MIN_FREQ_HZ};
use crate::rng::GaussianStream;

/// Upper end of the admissible noise band as a fraction of `fs`.
pub const MAX_FREQ_FRACTION: f64 = 0.45;
/// Slope multiplier of the logistic in [`decode`]; with it a step of `sigma`
/// in `u` near the origin moves about `sigma` of the normalized range.
pub const SQUASH_GAIN: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmaConfig {
    pub population: usize,
    pub max_iterations: usize,
    pub initial_sigma: f64,
    pub seed: u64,
}

impl Default for CmaConfig {
    fn default() -> Self {
        Self {
            population: 5,
            max_iterations: 2,
            initial_sigma: 0.3,
            seed: 0,
        }
    }
}

impl CmaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Config(format!(
                "population must be >= 2, got {}",
                self.population
            )));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if !(self.initial_sigma > 0.0 && self.initial_sigma <= 1.0) {
            return Err(Error::Config(format!(
                "initial_sigma must lie in (0, 1], got {}",
                self.initial_sigma
            )));
        }
        Ok(())
    }

    pub fn budget(&self) -> usize {
        self.population * self.max_iterations
    }
}

/// One objective call.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub u: Vec<f64>,
    /// Objective value after the non-finite penalty.
    pub value: f64,
    pub generation: usize,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub best_u: Vec<f64>,
    pub best_value: f64,
    /// Every evaluated candidate, in evaluation order.
    pub history: Vec<Evaluation>,
    /// Eigenvalues of the covariance matrix after each generation's update.
    pub covariance_eigenvalues: Vec<Vec<f64>>,
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Maps an unconstrained point to an admissible noise band at sampling rate
/// `fs`.
///
/// Each coordinate is squashed onto the log-frequency range
/// `[MIN_FREQ_HZ, 0.45 fs]`, the two frequencies are sorted, and a band
/// narrower than [`MIN_BANDWIDTH_HZ`] is widened symmetrically and clamped
/// back into the range.
pub fn decode(u: &[f64], fs: f64) -> PerturbationParams {
    let (lo_log, hi_log) = (MIN_FREQ_HZ.ln(), (MAX_FREQ_FRACTION * fs).ln());
    let to_freq = |v: f64| (lo_log + logistic(SQUASH_GAIN * v) * (hi_log - lo_log)).exp();
    let f_min = MIN_FREQ_HZ;
    let f_max = MAX_FREQ_FRACTION * fs;
    let (a, b) = (to_freq(u[0]), to_freq(u[1]));
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    if hi - lo < MIN_BANDWIDTH_HZ {
        let mid = 0.5 * (lo + hi);
        lo = mid - 0.5 * MIN_BANDWIDTH_HZ;
        hi = mid + 0.5 * MIN_BANDWIDTH_HZ;
        if lo < f_min {
            lo = f_min;
            hi = f_min + MIN_BANDWIDTH_HZ;
        } else if hi > f_max {
            hi = f_max;
            lo = f_max - MIN_BANDWIDTH_HZ;
        }
    }
    PerturbationParams::new(lo, hi)
}

/// Minimizes `objective` starting from `initial_mean`, evaluating candidates
/// one at a time.
pub fn minimize<F>(mut objective: F, initial_mean: &[f64], cfg: &CmaConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    minimize_batch(
        |batch: &[Vec<f64>]| batch.iter().map(|u| objective(u)).collect(),
        initial_mean,
        cfg,
    )
}

/// Like [`minimize`], but hands each generation to `objective` as a batch.
/// The returned values must be in candidate order.
pub fn minimize_batch<F>(mut objective: F, initial_mean: &[f64], cfg: &CmaConfig) -> Result<Minimum>
where
    F: FnMut(&[Vec<f64>]) -> Vec<f64>,
{
    cfg.validate()?;
    let n = initial_mean.len();
    if n == 0 {
        return Err(Error::Config("empty search space".into()));
    }
    let nf = n as f64;
    let lambda = cfg.population;
    let mu = lambda / 2;

    let raw: Vec<f64> = (1..=mu)
        .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
    let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
    let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut rng = GaussianStream::new(cfg.seed);
    let mut mean = DVector::from_column_slice(initial_mean);
    let mut sigma = cfg.initial_sigma;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut p_sigma = DVector::<f64>::zeros(n);
    let mut p_c = DVector::<f64>::zeros(n);

    let mut history = Vec::with_capacity(cfg.budget());
    let mut eigen_trace = Vec::with_capacity(cfg.max_iterations);
    let mut best: Option<(Vec<f64>, f64)> = None;

    for generation in 0..cfg.max_iterations {
        let eig = SymmetricEigen::new(cov.clone());
        let basis = eig.eigenvectors;
        let scales = eig.eigenvalues.map(|v| v.max(0.0).sqrt());

        let steps: Vec<DVector<f64>> = (0..lambda)
            .map(|_| {
                let z = DVector::from_vec(rng.normals(n));
                &basis * z.component_mul(&scales)
            })
            .collect();
        let candidates: Vec<Vec<f64>> = steps
            .iter()
            .map(|y| (&mean + y * sigma).as_slice().to_vec())
            .collect();

        let mut values = objective(&candidates);
        if values.len() != lambda {
            return Err(Error::Config(format!(
                "objective returned {} values for {lambda} candidates",
                values.len()
            )));
        }
        penalize_non_finite(&mut values);

        for (u, &value) in candidates.iter().zip(&values) {
            if best.as_ref().is_none_or(|(_, b)| value < *b) {
                best = Some((u.clone(), value));
            }
            history.push(Evaluation {
                u: u.clone(),
                value,
                generation,
            });
        }

        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

        let mut y_w = DVector::<f64>::zeros(n);
        for (w, &idx) in weights.iter().zip(&order) {
            y_w += &steps[idx] * *w;
        }
        mean += &y_w * sigma;

        let inv_sqrt = &basis
            * DMatrix::from_diagonal(&scales.map(|s| if s > 0.0 { 1.0 / s } else { 0.0 }))
            * basis.transpose();
        p_sigma = &p_sigma * (1.0 - c_sigma)
            + (&inv_sqrt * &y_w) * (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt();
        let norm_ps = p_sigma.norm();
        let decay = 1.0 - (1.0 - c_sigma).powi(2 * (generation as i32 + 1));
        let h_sigma = if norm_ps / decay.sqrt() < (1.4 + 2.0 / (nf + 1.0)) * chi_n {
            1.0
        } else {
            0.0
        };
        p_c = &p_c * (1.0 - c_c) + &y_w * (h_sigma * (c_c * (2.0 - c_c) * mu_eff).sqrt());

        let mut rank_mu = DMatrix::<f64>::zeros(n, n);
        for (w, &idx) in weights.iter().zip(&order) {
            rank_mu += &steps[idx] * steps[idx].transpose() * *w;
        }
        let rank_one = &p_c * p_c.transpose();
        let correction = (1.0 - h_sigma) * c_c * (2.0 - c_c);
        cov = &cov * (1.0 - c_1 - c_mu) + (rank_one + &cov * correction) * c_1 + rank_mu * c_mu;
        cov = (&cov + cov.transpose()) * 0.5;

        sigma *= ((c_sigma / d_sigma) * (norm_ps / chi_n - 1.0)).exp();

        let mut ev: Vec<f64> = SymmetricEigen::new(cov.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        eigen_trace.push(ev);
    }

    let (best_u, best_value) = best.expect("at least one generation");
    Ok(Minimum {
        best_u,
        best_value,
        history,
        covariance_eigenvalues: eigen_trace,
    })
}

/// Non-finite values become one more than the worst finite value of the
/// generation (or `f64::MAX` when none is finite).
fn penalize_non_finite(values: &mut [f64]) {
    let worst = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    let penalty = worst.map_or(f64::MAX, |w| w + 1.0);
    for v in values.iter_mut() {
        if !v.is_finite() {
            *v = penalty;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn decode_center_is_geometric_midpoint() {
        let fs = 250.0;
        let mid = (MIN_FREQ_HZ * MAX_FREQ_FRACTION * fs).sqrt();
        let t = decode(&[0.0, 0.0], fs);
        assert_relative_eq!(t.f_low, mid - 0.25, max_relative = 1e-12);
        assert_relative_eq!(t.f_high, mid + 0.25, max_relative = 1e-12);
    }

    #[test]
    fn decode_saturates_and_sorts() {
        let fs = 250.0;
        let a = decode(&[-20.0, 20.0], fs);
        assert!((a.f_low / MIN_FREQ_HZ - 1.0).abs() < 1e-3);
        assert!((a.f_high / (MAX_FREQ_FRACTION * fs) - 1.0).abs() < 1e-3);
        assert_eq!(decode(&[20.0, -20.0], fs), a);
    }

    #[test]
    fn decode_clamps_narrow_bands_at_the_edges() {
        let t = decode(&[-30.0, -30.0], 250.0);
        assert_eq!(t.f_low, MIN_FREQ_HZ);
        assert_relative_eq!(t.f_high, MIN_FREQ_HZ + MIN_BANDWIDTH_HZ);
        let t = decode(&[30.0, 30.0], 250.0);
        assert_relative_eq!(t.f_high, 112.5);
        assert!(t.validate(250.0).is_ok());
    }

    #[test]
    fn constant_objective() {
        let cfg = CmaConfig {
            population: 4,
            max_iterations: 3,
            ..Default::default()
        };
        let m = minimize(|_| 2.5, &[0.0, 0.0], &cfg).unwrap();
        assert_eq!(m.best_value, 2.5);
        assert_eq!(m.history.len(), 12);
        // ties go to the earliest candidate
        assert_eq!(m.best_u, m.history[0].u);
    }

    #[test]
    fn non_finite_values_are_penalized() {
        let mut calls = 0;
        let cfg = CmaConfig {
            population: 4,
            max_iterations: 2,
            ..Default::default()
        };
        let m = minimize(
            |u| {
                calls += 1;
                if calls % 2 == 0 {
                    f64::NAN
                } else {
                    u[0]
                }
            },
            &[0.0, 0.0],
            &cfg,
        )
        .unwrap();
        assert!(m.history.iter().all(|e| e.value.is_finite()));
        for g in 0..2 {
            let gen: Vec<_> = m.history.iter().filter(|e| e.generation == g).collect();
            let worst_finite = gen[0].u[0].max(gen[2].u[0]);
            assert_eq!(gen[1].value, worst_finite + 1.0);
        }
    }

    #[test]
    fn rejects_tiny_population() {
        let cfg = CmaConfig {
            population: 1,
            ..Default::default()
        };
        assert!(minimize(|_| 0.0, &[0.0], &cfg).is_err());
    }
}
