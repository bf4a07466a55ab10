//! Post-processing of kept draws: moments, nearest-mode occupancy, ACF,
//! MSE ratios and expected evaluation counts.
//!
//! Draws are passed row-major as a flat slice with an explicit dimension.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::targets::{EvalCounter, Phase};

/// Evaluations per kept iteration, split by phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalRates {
    pub downhill: f64,
    pub uphill: f64,
    pub aux_downhill: f64,
    pub other: f64,
    pub total: f64,
}

impl EvalRates {
    pub fn from_counter(counter: &EvalCounter, iterations: usize) -> Self {
        if iterations == 0 {
            return Self::default();
        }
        let n = iterations as f64;
        let per = |p: Phase| counter.phase(p) as f64 / n;
        Self {
            downhill: per(Phase::Downhill),
            uphill: per(Phase::Uphill),
            aux_downhill: per(Phase::AuxDownhill),
            other: per(Phase::Other),
            total: counter.total() as f64 / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainSummary {
    pub n_kept: usize,
    pub acceptance_rate: f64,
    /// `E[x_k]` per coordinate.
    pub mean: Vec<f64>,
    /// `E[x_k²]` per coordinate.
    pub second_moment: Vec<f64>,
    pub evals: EvalRates,
    /// ACF of the first coordinate at lags `0..=max_lag`; `None` when the
    /// chain is too short or never moved.
    pub acf: Option<Vec<f64>>,
    /// Nearest-mode occupancy, when modes were supplied.
    pub mode_frequencies: Option<Vec<f64>>,
}

/// Everything [`summarize`] needs about one chain's kept iterations.
#[derive(Debug, Clone, Copy)]
pub struct KeptDraws<'a> {
    pub dim: usize,
    /// Row-major, `dim` values per kept iteration.
    pub values: &'a [f64],
    pub accepted: &'a [bool],
    /// Evaluations spent on each kept iteration.
    pub evals: &'a EvalCounter,
}

pub fn summarize(
    draws: KeptDraws<'_>,
    modes: Option<&[Vec<f64>]>,
    max_lag: usize,
) -> Result<ChainSummary> {
    let KeptDraws {
        dim,
        values,
        accepted,
        evals,
    } = draws;
    if dim == 0 || values.len() % dim != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: values.len(),
        });
    }
    let n = values.len() / dim;
    if accepted.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: accepted.len(),
        });
    }
    if n == 0 {
        return Err(Error::TooFewDraws { needed: 1, got: 0 });
    }
    let mut mean = vec![0.0; dim];
    let mut second = vec![0.0; dim];
    for row in values.chunks(dim) {
        for k in 0..dim {
            mean[k] += row[k];
            second[k] += row[k] * row[k];
        }
    }
    mean.iter_mut()
        .chain(second.iter_mut())
        .for_each(|v| *v /= n as f64);
    let first: Vec<f64> = values.iter().step_by(dim).copied().collect();
    let acf = autocorrelation(&first, max_lag).ok();
    Ok(ChainSummary {
        n_kept: n,
        acceptance_rate: accepted.iter().filter(|&&a| a).count() as f64 / n as f64,
        mean,
        second_moment: second,
        evals: EvalRates::from_counter(evals, n),
        acf,
        mode_frequencies: modes.map(|m| nearest_mode_frequencies(values, dim, m)),
    })
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest mode; ties go to the lowest index.
pub fn nearest_mode(x: &[f64], modes: &[Vec<f64>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (j, m) in modes.iter().enumerate() {
        let d = squared_distance(x, m);
        if d < best.1 {
            best = (j, d);
        }
    }
    best.0
}

/// Share of draws whose nearest mode is each `modes[j]`. All zeros when
/// there are no draws.
pub fn nearest_mode_frequencies(values: &[f64], dim: usize, modes: &[Vec<f64>]) -> Vec<f64> {
    assert!(!modes.is_empty(), "at least one mode is required");
    let mut counts = vec![0usize; modes.len()];
    for row in values.chunks(dim) {
        counts[nearest_mode(row, modes)] += 1;
    }
    let n = values.len() / dim;
    if n == 0 {
        return vec![0.0; modes.len()];
    }
    counts.into_iter().map(|c| c as f64 / n as f64).collect()
}

/// `Σ_i Σ_j |F_ij − p_j| / (C·M)` over `C` chains and `M` modes.
pub fn frequency_error_rate(freqs: &[Vec<f64>], target: &[f64]) -> f64 {
    let m = target.len();
    let total: f64 = freqs
        .iter()
        .map(|row| {
            assert_eq!(row.len(), m, "frequency row has the wrong number of modes");
            row.iter()
                .zip(target)
                .map(|(f, p)| libm::fabs(f - p))
                .sum::<f64>()
        })
        .sum();
    total / (freqs.len() * m) as f64
}

/// How many of `unknown` (indices into `modes`) are the nearest mode of at
/// least one draw.
pub fn modes_discovered(
    values: &[f64],
    dim: usize,
    unknown: &[usize],
    modes: &[Vec<f64>],
) -> usize {
    let mut hit = vec![false; modes.len()];
    for row in values.chunks(dim) {
        hit[nearest_mode(row, modes)] = true;
    }
    unknown.iter().filter(|&&j| hit[j]).count()
}

/// Biased sample ACF at lags `0..=max_lag`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n <= max_lag {
        return Err(Error::TooFewDraws {
            needed: max_lag + 1,
            got: n,
        });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if c0 <= 0.0 || !c0.is_finite() {
        return Err(Error::ZeroVariance);
    }
    Ok((0..=max_lag)
        .map(|k| {
            centered[..n - k]
                .iter()
                .zip(&centered[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / c0
        })
        .collect())
}

/// `Σ_{k≥1} |acf(k)|`, the score used to rank tuning candidates.
pub fn summed_abs_acf(acf: &[f64]) -> f64 {
    acf.iter().skip(1).map(|v| libm::fabs(*v)).sum()
}

/// Mean squared error of replicate estimates about `truth`.
pub fn mse(estimates: &[f64], truth: f64) -> Result<f64> {
    if estimates.len() < 2 {
        return Err(Error::TooFewDraws {
            needed: 2,
            got: estimates.len(),
        });
    }
    Ok(estimates
        .iter()
        .map(|e| (e - truth) * (e - truth))
        .sum::<f64>()
        / estimates.len() as f64)
}

/// MSE of each method divided by that of `methods[reference]`.
pub fn mse_ratio(methods: &[&[f64]], reference: usize, truth: f64) -> Result<Vec<f64>> {
    let base = mse(methods[reference], truth)?;
    if base == 0.0 {
        return Err(Error::ZeroReferenceMse);
    }
    methods.iter().map(|m| Ok(mse(m, truth)? / base)).collect()
}

/// `sd² + (mean − truth)²`, for reconstructing MSE from a printed mean and
/// standard deviation.
pub fn mse_from_summary(mean: f64, sd: f64, truth: f64) -> f64 {
    sd * sd + (mean - truth) * (mean - truth)
}

/// Sampler layouts with a closed-form expected cost per iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// Metropolis with caching, one chain per block.
    Metropolis { blocks: usize },
    /// Equi-energy chains started one after another, highest temperature
    /// first; every chain keeps running until the last one finishes. All
    /// but the first chain replace a Metropolis move by a jump costing
    /// `jump_evals` with probability `jump_prob`.
    StagedEquiEnergy {
        levels: usize,
        jump_prob: f64,
        jump_evals: f64,
    },
    /// One Metropolis move per rung, then with probability `swap_prob` a
    /// batch of `swaps` swap proposals costing two evaluations each.
    ParallelTempering {
        rungs: usize,
        swap_prob: f64,
        swaps: usize,
    },
    /// `2J` evaluations per block for a ladder with `J` heated rungs.
    TemperedTransitions { heated_rungs: usize, blocks: usize },
}

/// Expected target evaluations per kept iteration.
pub fn expected_evals_per_iteration(schedule: Schedule) -> f64 {
    match schedule {
        Schedule::Metropolis { blocks } => blocks as f64,
        Schedule::StagedEquiEnergy {
            levels,
            jump_prob,
            jump_evals,
        } => {
            // chain k (1 = hottest) runs for levels − k + 1 stages
            let chain_stages = (1..=levels).map(|k| levels - k + 1);
            let moves: usize = chain_stages.clone().sum();
            let jumping: usize = chain_stages.skip(1).sum();
            moves as f64 + jump_prob * (jump_evals - 1.0) * jumping as f64
        }
        Schedule::ParallelTempering {
            rungs,
            swap_prob,
            swaps,
        } => rungs as f64 + swap_prob * swaps as f64 * 2.0,
        Schedule::TemperedTransitions {
            heated_rungs,
            blocks,
        } => (2 * heated_rungs * blocks) as f64,
    }
}

/// Measured evaluations per iteration.
pub fn measured_evals_per_iteration(counter: &EvalCounter, iterations: usize) -> f64 {
    EvalRates::from_counter(counter, iterations).total
}

/// Settings for [`cluster_centres_2d`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterParams {
    /// Grid resolution per axis over the points' bounding box.
    pub bins: usize,
    /// Two peaks stay apart only if the lowest density on the best path
    /// between them falls below this fraction of the lower peak.
    pub saddle_ratio: f64,
    /// Clusters holding less than this share of the points are dropped.
    pub min_cluster_share: f64,
}

/// Number of separated clusters among 2-d points; see [`cluster_centres_2d`].
pub fn count_clusters_2d(points: &[[f64; 2]], params: ClusterParams) -> usize {
    cluster_centres_2d(points, params).len()
}

/// Peaks of the binned, 3×3 box-smoothed point density that are separated
/// by a real valley.
///
/// Cells are flooded from the densest down (8-neighbour watershed). Where
/// two basins meet, the one with the lower peak is absorbed unless the
/// meeting level is below `saddle_ratio` times that peak. A uniform ring
/// is therefore one cluster however bumpy its histogram. Each surviving
/// basin's mass is the points in its cells.
pub fn cluster_centres_2d(points: &[[f64; 2]], params: ClusterParams) -> Vec<[f64; 2]> {
    let bins = params.bins;
    if points.is_empty() || bins == 0 {
        return Vec::new();
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let width = [
        (hi[0] - lo[0]).max(1e-12) / bins as f64,
        (hi[1] - lo[1]).max(1e-12) / bins as f64,
    ];
    let cell = |v: f64, k: usize| (((v - lo[k]) / width[k]) as usize).min(bins - 1);
    let mut counts = vec![0.0; bins * bins];
    for p in points {
        counts[cell(p[0], 0) * bins + cell(p[1], 1)] += 1.0;
    }
    let neighbours = |c: usize| {
        let (i, j) = ((c / bins) as i64, (c % bins) as i64);
        let mut out = Vec::with_capacity(9);
        for a in i - 1..=i + 1 {
            for b in j - 1..=j + 1 {
                if a >= 0 && b >= 0 && (a as usize) < bins && (b as usize) < bins {
                    out.push(a as usize * bins + b as usize);
                }
            }
        }
        out
    };
    let smooth: Vec<f64> = (0..bins * bins)
        .map(|c| neighbours(c).iter().map(|&d| counts[d]).sum::<f64>() / 9.0)
        .collect();

    let mut order: Vec<usize> = (0..bins * bins).filter(|&c| smooth[c] > 0.0).collect();
    order.sort_by(|&a, &b| smooth[b].total_cmp(&smooth[a]).then(a.cmp(&b)));

    const NONE: usize = usize::MAX;
    let mut parent = vec![NONE; bins * bins];
    let mut mass = vec![0.0; bins * bins];
    fn root(parent: &mut [usize], mut c: usize) -> usize {
        while parent[c] != c {
            parent[c] = parent[parent[c]];
            c = parent[c];
        }
        c
    }
    for &c in &order {
        let level = smooth[c];
        let mut roots: Vec<usize> = Vec::new();
        for d in neighbours(c) {
            if d != c && parent[d] != NONE {
                let r = root(&mut parent, d);
                if !roots.contains(&r) {
                    roots.push(r);
                }
            }
        }
        // roots are their own peak cells; the highest one takes the new cell
        roots.sort_by(|&a, &b| smooth[b].total_cmp(&smooth[a]).then(a.cmp(&b)));
        let Some(&top) = roots.first() else {
            parent[c] = c;
            mass[c] = counts[c];
            continue;
        };
        parent[c] = top;
        mass[top] += counts[c];
        for &r in &roots[1..] {
            if level >= params.saddle_ratio * smooth[r] {
                parent[r] = top;
                mass[top] += mass[r];
            }
        }
    }

    let n = points.len() as f64;
    (0..bins * bins)
        .filter(|&c| parent[c] == c && mass[c] >= params.min_cluster_share * n)
        .map(|c| {
            [
                lo[0] + ((c / bins) as f64 + 0.5) * width[0],
                lo[1] + ((c % bins) as f64 + 0.5) * width[1],
            ]
        })
        .collect()
}
