//! Chain and run summaries, computed only from [`ChainRecord`]s so that a
//! run directory can be re-summarized from its sample files.

use serde::{Deserialize, Serialize};

use ram_core::diagnostics::{
    count_clusters_2d, frequency_error_rate, modes_discovered, mse, nearest_mode, summarize,
    ChainSummary, ClusterParams, EvalRates, KeptDraws,
};
use ram_core::{EvalCounter, Phase};

use crate::record::ChainRecord;
use crate::RunnerError;

/// Grid and thresholds for counting posterior clusters of a 2-d block.
pub const CLUSTERS: ClusterParams = ClusterParams {
    bins: 40,
    saddle_ratio: 0.5,
    min_cluster_share: 0.02,
};

/// What is known about the target for scoring chains.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TargetContext {
    pub modes: Option<Vec<Vec<f64>>>,
    /// Indices into `modes` that the sampler was not told about.
    pub unknown_modes: Option<Vec<usize>>,
    /// Exact nearest-mode proportions, for the frequency error rate.
    pub mode_proportions: Option<Vec<f64>>,
    /// `(E x1, E x2, E x1², E x2²)`.
    pub truth: Option<[f64; 4]>,
    /// Count clusters of each 2-d block's kept draws.
    pub cluster_blocks: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub kernel: String,
    pub kernel_index: usize,
    pub replicate: usize,
    pub stream: u64,
}

/// Per-block numbers over the whole chain, burn-in included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub name: String,
    pub acceptance_rate: f64,
    /// Kernel evaluations per iteration.
    pub evals: EvalRates,
    /// Evaluations per iteration spent re-reading stale caches.
    pub refresh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub meta: ChainMeta,
    pub length: usize,
    pub burn_in: usize,
    /// Kept iterations only.
    pub summary: ChainSummary,
    pub blocks: Vec<BlockReport>,
    /// Kernel evaluations per iteration, summed over blocks.
    pub evals_per_iteration: f64,
    /// The same including cache refreshes.
    pub raw_evals_per_iteration: f64,
    pub total_kernel_evals: u64,
    pub modes_visited: Option<usize>,
    pub modes_discovered: Option<usize>,
    pub frequency_error: Option<f64>,
    pub clusters: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelAggregate {
    pub kernel: String,
    pub kernel_index: usize,
    pub chains: usize,
    pub length: usize,
    pub burn_in: usize,
    pub acceptance_rate: f64,
    pub block_acceptance: Vec<f64>,
    pub evals_per_iteration: f64,
    pub block_evals: Vec<EvalRates>,
    /// Mean and sample SD over chains of `(E x1, E x2, E x1², E x2²)`.
    pub moments_mean: Vec<f64>,
    pub moments_sd: Vec<f64>,
    pub moments_mse: Option<Vec<f64>>,
    pub frequency_error: Option<f64>,
    pub modes_discovered: Option<f64>,
    /// Mean total evaluations relative to the reference kernel's.
    pub budget_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub rng: String,
    pub seed: u64,
    pub chains: Vec<ChainReport>,
    pub kernels: Vec<KernelAggregate>,
}

fn block_reports(rec: &ChainRecord) -> Vec<BlockReport> {
    let n = rec.len();
    (0..rec.block_names.len())
        .map(|k| {
            let mut counter = EvalCounter::new();
            let (mut acc, mut refresh) = (0u64, 0u64);
            for i in 0..n {
                let b = rec.block_row(i)[k];
                acc += u64::from(b.accepted);
                refresh += b.refresh;
                for (p, e) in Phase::ALL.into_iter().zip(b.evals) {
                    counter.add(p, e);
                }
            }
            BlockReport {
                name: rec.block_names[k].clone(),
                acceptance_rate: acc as f64 / n.max(1) as f64,
                evals: EvalRates::from_counter(&counter, n),
                refresh: refresh as f64 / n.max(1) as f64,
            }
        })
        .collect()
}

pub fn chain_report(
    meta: ChainMeta,
    rec: &ChainRecord,
    ctx: &TargetContext,
    max_lag: usize,
) -> Result<ChainReport, RunnerError> {
    let n = rec.len();
    let kept_rows = rec.burn_in..n;
    let nb = rec.block_names.len();
    let mut kept_counter = EvalCounter::new();
    let accepted: Vec<bool> = kept_rows
        .clone()
        .map(|i| {
            let row = rec.block_row(i);
            for b in row {
                for (p, e) in Phase::ALL.into_iter().zip(b.evals) {
                    kept_counter.add(p, e);
                }
            }
            // with several blocks the rate is replaced by the per-block mean
            row.iter().any(|b| b.accepted)
        })
        .collect();
    let values = rec.kept_values();
    let draws = KeptDraws {
        dim: rec.dim,
        values,
        accepted: &accepted,
        evals: &kept_counter,
    };
    let mut summary = summarize(draws, ctx.modes.as_deref(), max_lag)?;
    let blocks = block_reports(rec);
    if nb > 1 {
        summary.acceptance_rate = kept_rows
            .clone()
            .map(|i| rec.block_row(i).iter().filter(|b| b.accepted).count())
            .sum::<usize>() as f64
            / (nb * kept_rows.len()) as f64;
    }

    let total_kernel_evals = rec.kernel_evals();
    let modes_visited = ctx.modes.as_ref().map(|m| {
        let mut hit = vec![false; m.len()];
        values
            .chunks(rec.dim)
            .for_each(|r| hit[nearest_mode(r, m)] = true);
        hit.iter().filter(|h| **h).count()
    });
    let modes_discovered = match (&ctx.modes, &ctx.unknown_modes) {
        (Some(m), Some(u)) => Some(modes_discovered(values, rec.dim, u, m)),
        _ => None,
    };
    let frequency_error = match (&summary.mode_frequencies, &ctx.mode_proportions) {
        (Some(f), Some(p)) => Some(frequency_error_rate(std::slice::from_ref(f), p)),
        _ => None,
    };
    let clusters = ctx.cluster_blocks.then(|| {
        (0..rec.dim / 2)
            .map(|k| {
                let pts: Vec<[f64; 2]> = values
                    .chunks(rec.dim)
                    .map(|r| [r[2 * k], r[2 * k + 1]])
                    .collect();
                count_clusters_2d(&pts, CLUSTERS)
            })
            .collect()
    });
    Ok(ChainReport {
        meta,
        length: n,
        burn_in: rec.burn_in,
        summary,
        blocks,
        evals_per_iteration: total_kernel_evals as f64 / n as f64,
        raw_evals_per_iteration: (total_kernel_evals + rec.refresh_evals()) as f64 / n as f64,
        total_kernel_evals,
        modes_visited,
        modes_discovered,
        frequency_error,
        clusters,
    })
}

fn mean(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count();
    v.sum::<f64>() / n as f64
}

fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v.iter().copied());
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn first_moments(s: &ChainSummary) -> Vec<f64> {
    let mut m: Vec<f64> = s.mean.iter().take(2).copied().collect();
    m.extend(s.second_moment.iter().take(2));
    m
}

/// Aggregates chains by kernel index. `reference` is the kernel index whose
/// mean total evaluations define the budget ratio.
pub fn run_summary(
    seed: u64,
    chains: Vec<ChainReport>,
    ctx: &TargetContext,
    reference: Option<usize>,
) -> RunSummary {
    let mut indices: Vec<usize> = chains.iter().map(|c| c.meta.kernel_index).collect();
    indices.sort_unstable();
    indices.dedup();
    let mean_total = |k: usize| {
        mean(
            chains
                .iter()
                .filter(|c| c.meta.kernel_index == k)
                .map(|c| c.total_kernel_evals as f64),
        )
    };
    let reference_total = reference.map(mean_total);
    let kernels = indices
        .into_iter()
        .map(|k| {
            let group: Vec<&ChainReport> =
                chains.iter().filter(|c| c.meta.kernel_index == k).collect();
            let nb = group[0].blocks.len();
            let moments: Vec<Vec<f64>> = group.iter().map(|c| first_moments(&c.summary)).collect();
            let n_mom = moments[0].len();
            let column = |j: usize| moments.iter().map(|m| m[j]).collect::<Vec<f64>>();
            let moments_mse = ctx
                .truth
                .filter(|_| group.len() >= 2 && n_mom == 4)
                .map(|t| {
                    (0..4)
                        .map(|j| mse(&column(j), t[j]).expect("at least two chains"))
                        .collect()
                });
            let freqs: Option<Vec<Vec<f64>>> = group
                .iter()
                .map(|c| c.summary.mode_frequencies.clone())
                .collect();
            let frequency_error = match (freqs, &ctx.mode_proportions) {
                (Some(f), Some(p)) => Some(frequency_error_rate(&f, p)),
                _ => None,
            };
            let discovered: Option<Vec<f64>> = group
                .iter()
                .map(|c| c.modes_discovered.map(|d| d as f64))
                .collect();
            let block_evals = (0..nb)
                .map(|b| {
                    let pick = |f: fn(&EvalRates) -> f64| {
                        mean(group.iter().map(|c| f(&c.blocks[b].evals)))
                    };
                    EvalRates {
                        downhill: pick(|e| e.downhill),
                        uphill: pick(|e| e.uphill),
                        aux_downhill: pick(|e| e.aux_downhill),
                        other: pick(|e| e.other),
                        total: pick(|e| e.total),
                    }
                })
                .collect();
            KernelAggregate {
                kernel: group[0].meta.kernel.clone(),
                kernel_index: k,
                chains: group.len(),
                length: group[0].length,
                burn_in: group[0].burn_in,
                acceptance_rate: mean(group.iter().map(|c| c.summary.acceptance_rate)),
                block_acceptance: (0..nb)
                    .map(|b| mean(group.iter().map(|c| c.blocks[b].acceptance_rate)))
                    .collect(),
                evals_per_iteration: mean(group.iter().map(|c| c.evals_per_iteration)),
                block_evals,
                moments_mean: (0..n_mom).map(|j| mean(column(j).into_iter())).collect(),
                moments_sd: (0..n_mom).map(|j| sample_sd(&column(j))).collect(),
                moments_mse,
                frequency_error,
                modes_discovered: discovered.map(|d| mean(d.into_iter())),
                budget_ratio: reference_total.map(|r| mean_total(k) / r),
            }
        })
        .collect();
    RunSummary {
        rng: "ChaCha8Rng::seed_from_u64(seed), stream per chain".to_string(),
        seed,
        chains,
        kernels,
    }
}
