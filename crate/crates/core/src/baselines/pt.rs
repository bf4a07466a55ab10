use alloc::vec::Vec;

use super::TemperatureLadder;
use crate::proposal::Proposal;
use crate::rng::KernelRng;
use crate::targets::{
    acceptance_from_log, eval_logpi, log_ratio_eps, EvalCounter, LogTarget, Phase,
};
use crate::Result;

/// When swaps between adjacent rungs are proposed at the end of an iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwapSchedule {
    /// One swap between a uniformly chosen adjacent pair, every iteration.
    SingleAdjacent,
    /// With probability `prob`, `count` swaps between uniformly chosen
    /// adjacent pairs; otherwise none.
    Batch { count: usize, prob: f64 },
}

/// States of all rungs with their (untempered) cached log-densities and a
/// private counter per rung.
#[derive(Debug, Clone, PartialEq)]
pub struct PtEnsemble {
    pub states: Vec<Vec<f64>>,
    pub log_densities: Vec<f64>,
    pub counters: Vec<EvalCounter>,
}

impl PtEnsemble {
    /// All rungs start at `x0`; one evaluation per rung.
    pub fn new<T: LogTarget + ?Sized>(target: &T, x0: &[f64], n_rungs: usize) -> Result<Self> {
        let mut counters = alloc::vec![EvalCounter::new(); n_rungs];
        let mut log_densities = Vec::with_capacity(n_rungs);
        for c in counters.iter_mut() {
            log_densities.push(eval_logpi(target, x0, c, Phase::Other)?);
        }
        Ok(Self {
            states: alloc::vec![x0.to_vec(); n_rungs],
            log_densities,
            counters,
        })
    }

    /// Cached `log π(x_j) / T_j`.
    pub fn tempered_log_density<P>(&self, ladder: &TemperatureLadder<P>, j: usize) -> f64 {
        self.log_densities[j] / ladder.temps[j]
    }

    pub fn total_evals(&self) -> u64 {
        self.counters.iter().map(|c| c.total()).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PtStepReport {
    pub rung_accepted: Vec<bool>,
    pub swaps_proposed: u32,
    pub swaps_accepted: u32,
}

/// Log acceptance of exchanging the states of rungs `j` and `j + 1`.
pub fn swap_log_acceptance(log_lower: f64, log_upper: f64, t_lower: f64, t_upper: f64) -> f64 {
    let d = log_ratio_eps(log_upper, log_lower);
    if d == 0.0 {
        return 0.0;
    }
    (d * (1.0 / t_lower - 1.0 / t_upper)).min(0.0)
}

/// One parallel-tempering iteration: a Metropolis update on every rung
/// against `π^{1/T_j}`, then the swap moves of `schedule`. Each proposed swap
/// re-evaluates the two states involved.
pub fn pt_step<T, P, R>(
    ensemble: &mut PtEnsemble,
    ladder: &TemperatureLadder<P>,
    target: &T,
    schedule: SwapSchedule,
    rng: &mut R,
) -> Result<PtStepReport>
where
    T: LogTarget + ?Sized,
    P: Proposal,
    R: KernelRng + ?Sized,
{
    let n = ladder.n_rungs();
    let mut report = PtStepReport {
        rung_accepted: Vec::with_capacity(n),
        ..Default::default()
    };
    let dim = ensemble.states[0].len();
    let mut y = alloc::vec![0.0; dim];
    for j in 0..n {
        ladder.proposals[j].propose(&ensemble.states[j], &mut y, rng);
        let ly = eval_logpi(target, &y, &mut ensemble.counters[j], Phase::Other)?;
        let a = log_ratio_eps(ly, ensemble.log_densities[j]) / ladder.temps[j];
        let moved = rng.uniform() < acceptance_from_log(a);
        if moved {
            ensemble.states[j].copy_from_slice(&y);
            ensemble.log_densities[j] = ly;
        }
        report.rung_accepted.push(moved);
    }
    if n < 2 {
        return Ok(report);
    }
    let n_swaps = match schedule {
        SwapSchedule::SingleAdjacent => 1,
        SwapSchedule::Batch { count, prob } => {
            if rng.uniform() < prob {
                count
            } else {
                0
            }
        }
    };
    for _ in 0..n_swaps {
        let j = rng.index(n - 1);
        let lo = eval_logpi(
            target,
            &ensemble.states[j],
            &mut ensemble.counters[j],
            Phase::Other,
        )?;
        let hi = eval_logpi(
            target,
            &ensemble.states[j + 1],
            &mut ensemble.counters[j + 1],
            Phase::Other,
        )?;
        report.swaps_proposed += 1;
        let a = swap_log_acceptance(lo, hi, ladder.temps[j], ladder.temps[j + 1]);
        if rng.uniform() < acceptance_from_log(a) {
            ensemble.states.swap(j, j + 1);
            ensemble.log_densities[j] = hi;
            ensemble.log_densities[j + 1] = lo;
            report.swaps_accepted += 1;
        }
    }
    Ok(report)
}
