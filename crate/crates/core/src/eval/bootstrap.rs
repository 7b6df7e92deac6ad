use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::indexed_rng;

use super::{balanced_accuracy, predict, EvalError};

const MAX_REDRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub seed: u64,
    /// Central coverage of the interval, e.g. 0.95.
    pub level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            n_resamples: 1000,
            seed: 0,
            level: 0.95,
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn resample(preds: &[bool], golds: &[bool], seed: u64, index: usize) -> Result<f64, EvalError> {
    let n = golds.len();
    let mut rng = indexed_rng(seed, "bootstrap", index as u64);
    let mut p = vec![false; n];
    let mut g = vec![false; n];
    for _ in 0..MAX_REDRAWS {
        let mut pos = 0;
        for k in 0..n {
            let j = rng.random_range(0..n);
            p[k] = preds[j];
            g[k] = golds[j];
            pos += golds[j] as usize;
        }
        if pos > 0 && pos < n {
            return balanced_accuracy(&p, &g);
        }
    }
    Err(EvalError::TooSmall)
}

/// Half-width of the percentile-bootstrap interval for balanced accuracy
/// of the fixed predictor `score >= threshold`.
///
/// Resample `i` draws from a generator keyed on `(seed, i)`, so the result
/// does not depend on the number of worker threads. Resamples that contain
/// only one class are redrawn.
pub fn bootstrap_ci(scores: &[f64], golds: &[bool], threshold: f64, cfg: &BootstrapConfig) -> Result<f64, EvalError> {
    if cfg.n_resamples < 100 {
        return Err(EvalError::InvalidBootstrap(format!(
            "need at least 100 resamples, got {}",
            cfg.n_resamples
        )));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(EvalError::InvalidBootstrap(format!("level must lie in (0, 1), got {}", cfg.level)));
    }
    if scores.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            preds: scores.len(),
            golds: golds.len(),
        });
    }
    let pos = golds.iter().filter(|&&g| g).count();
    if pos == 0 || pos == golds.len() {
        return Err(EvalError::TooSmall);
    }
    let preds = predict(scores, threshold);
    let mut stats = (0..cfg.n_resamples)
        .into_par_iter()
        .map(|i| resample(&preds, golds, cfg.seed, i))
        .collect::<Result<Vec<f64>, _>>()?;
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - cfg.level) / 2.0;
    Ok((quantile(&stats, 1.0 - tail) - quantile(&stats, tail)) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64) -> BootstrapConfig {
        BootstrapConfig {
            n_resamples: 200,
            seed,
            level: 0.95,
        }
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile(&v, 0.0), 0.0);
        assert_eq!(quantile(&v, 1.0), 3.0);
        assert!((quantile(&v, 0.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn two_record_case_is_degenerate() {
        let hw = bootstrap_ci(&[0.1, 0.9], &[false, true], 0.5, &cfg(1)).unwrap();
        assert_eq!(hw, 0.0);
    }

    #[test]
    fn deterministic_under_seed() {
        let scores: Vec<f64> = (0..60).map(|i| (i * 37 % 60) as f64 / 60.0).collect();
        let golds: Vec<bool> = (0..60).map(|i| i % 3 == 0).collect();
        let a = bootstrap_ci(&scores, &golds, 0.5, &cfg(4)).unwrap();
        let b = bootstrap_ci(&scores, &golds, 0.5, &cfg(4)).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
    }

    #[test]
    fn rejects_bad_settings() {
        let few = BootstrapConfig {
            n_resamples: 10,
            ..cfg(0)
        };
        assert!(matches!(bootstrap_ci(&[0.1, 0.9], &[false, true], 0.5, &few), Err(EvalError::InvalidBootstrap(_))));
        assert_eq!(bootstrap_ci(&[0.1, 0.9], &[true, true], 0.5, &cfg(0)), Err(EvalError::TooSmall));
    }
}
