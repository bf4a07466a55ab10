//! Picks an isotropic jumping scale from a grid of pilot chains.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ram_core::diagnostics::{autocorrelation, nearest_mode, summed_abs_acf};
use ram_core::GaussianProposal;

use crate::config::ExperimentConfig;
use crate::experiments::{chain_rng, run_chain, setup, ChainPlan, PILOT_STREAM};
use crate::RunnerError;

/// Offset of the tuning pilots' streams above [`PILOT_STREAM`].
const TUNE_STREAM_OFFSET: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneCandidate {
    pub sigma: f64,
    pub modes_visited: usize,
    /// Summed |ACF| over lags `1..=max_lag`, added over coordinates; `None`
    /// when a coordinate never moved.
    pub acf_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub chosen: f64,
    /// False when no pilot visited every mode and the choice fell back to
    /// the one that visited most.
    pub visited_all_modes: bool,
    pub total_modes: usize,
    pub candidates: Vec<TuneCandidate>,
}

fn score(c: &TuneCandidate) -> f64 {
    c.acf_score.unwrap_or(f64::INFINITY)
}

/// Chooses among scored candidates: lowest ACF score among those that
/// visited every mode, otherwise most modes visited then lowest score.
pub fn choose(candidates: &[TuneCandidate], total_modes: usize) -> (usize, bool) {
    let all: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].modes_visited == total_modes)
        .collect();
    if !all.is_empty() {
        let best = all
            .into_iter()
            .min_by(|&a, &b| score(&candidates[a]).total_cmp(&score(&candidates[b])))
            .unwrap();
        return (best, true);
    }
    let best = (0..candidates.len())
        .min_by(|&a, &b| {
            let (ca, cb) = (&candidates[a], &candidates[b]);
            cb.modes_visited
                .cmp(&ca.modes_visited)
                .then(score(ca).total_cmp(&score(cb)))
        })
        .expect("non-empty grid");
    (best, false)
}

pub fn tune_sigma(cfg: &ExperimentConfig) -> Result<TuneReport, RunnerError> {
    let tune = cfg
        .tune
        .as_ref()
        .ok_or_else(|| RunnerError::Config("missing [tune] section".into()))?;
    let setup = setup(cfg)?;
    let modes = setup
        .context
        .modes
        .clone()
        .ok_or_else(|| RunnerError::Config("tuning needs a target with known modes".into()))?;
    let d = setup.dim();
    let candidates = tune
        .grid
        .par_iter()
        .enumerate()
        .map(|(i, &sigma)| {
            let plan = ChainPlan {
                kernel: cfg.kernels[0].clone(),
                proposal: Some(GaussianProposal::isotropic(d, sigma)?),
                length: tune.length,
                burn_in: tune.burn_in,
                adapt_after_burn_in: false,
            };
            let mut rng = chain_rng(cfg.seed, PILOT_STREAM + TUNE_STREAM_OFFSET + i as u64);
            let rec = run_chain(&setup, &plan, &mut rng)?;
            let kept = rec.kept_values();
            let mut hit = vec![false; modes.len()];
            kept.chunks(d)
                .for_each(|r| hit[nearest_mode(r, &modes)] = true);
            let acf_score = (0..d)
                .map(|k| {
                    let series: Vec<f64> = kept.iter().skip(k).step_by(d).copied().collect();
                    autocorrelation(&series, tune.max_lag)
                        .ok()
                        .map(|a| summed_abs_acf(&a))
                })
                .sum::<Option<f64>>();
            Ok(TuneCandidate {
                sigma,
                modes_visited: hit.iter().filter(|h| **h).count(),
                acf_score,
            })
        })
        .collect::<Result<Vec<_>, RunnerError>>()?;
    let (best, visited_all_modes) = choose(&candidates, modes.len());
    Ok(TuneReport {
        chosen: candidates[best].sigma,
        visited_all_modes,
        total_modes: modes.len(),
        candidates,
    })
}
