//! Builds targets from a config, runs chains and applies the budget rule.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ram_core::baselines::{pt_step, PtEnsemble, SwapSchedule, TemperatureLadder};
use ram_core::diagnostics::{expected_evals_per_iteration, Schedule};
use ram_core::gibbs::{BlockKernel, BlockSpec, GibbsSampler};
use ram_core::targets::{GaussianMixture, SensorNetwork, SensorTruth};
use ram_core::{
    eval_logpi, metropolis_step, EvalCounter, GaussianProposal, KernelRng, LogTarget, Phase,
};

use crate::config::{BudgetRule, ExperimentConfig, KernelConfig, SwapConfig, TargetConfig};
use crate::modes;
use crate::record::{BlockIteration, ChainRecord};
use crate::report::{chain_report, run_summary, ChainMeta, RunSummary, TargetContext};
use crate::RunnerError;

/// Streams at and above this value are reserved for pilot chains.
pub const PILOT_STREAM: u64 = 0xFFFF_u64 << 32;
/// Iterations used to time a kernel under the wall-clock budget rule.
pub const TIMING_ITERATIONS: usize = 200;

pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn stream_id(kernel_index: usize, replicate: usize) -> u64 {
    ((kernel_index as u64) << 32) | replicate as u64
}

#[derive(Debug, Clone)]
pub enum BuiltTarget {
    Mixture(GaussianMixture),
    Sensor(Box<SensorNetwork>),
}

impl LogTarget for BuiltTarget {
    fn dim(&self) -> usize {
        match self {
            BuiltTarget::Mixture(m) => m.dim(),
            BuiltTarget::Sensor(s) => s.dim(),
        }
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        match self {
            BuiltTarget::Mixture(m) => m.log_density(x),
            BuiltTarget::Sensor(s) => s.log_density(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    /// Uniform on `[0, 1]^d`, drawn from the chain's own stream.
    UnitCube,
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct Setup {
    pub target: BuiltTarget,
    pub context: TargetContext,
    /// Gibbs blocks as (name, coordinates); a single block for plain chains.
    pub partition: Vec<(String, Vec<usize>)>,
    pub start: Start,
}

impl Setup {
    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    fn block_dim(&self) -> usize {
        self.partition[0].1.len()
    }
}

pub fn setup(cfg: &ExperimentConfig) -> Result<Setup, RunnerError> {
    Ok(match &cfg.target {
        TargetConfig::TwentyModes { case, modes_file } => {
            let locations = modes::load(modes_file.as_deref())?;
            let mix = modes::mixture(&locations, *case)?;
            let context = TargetContext {
                modes: Some(mix.modes()),
                mode_proportions: Some(mix.component_masses()),
                truth: Some(modes::exact_moments(&mix)),
                ..Default::default()
            };
            Setup {
                target: BuiltTarget::Mixture(mix),
                context,
                partition: vec![("x".into(), vec![0, 1])],
                start: Start::UnitCube,
            }
        }
        TargetConfig::Cube { dim } => {
            let mix = GaussianMixture::cube_modes(*dim)?;
            let context = TargetContext {
                modes: Some(mix.modes()),
                unknown_modes: Some((2..8).collect()),
                mode_proportions: Some(vec![0.125; 8]),
                ..Default::default()
            };
            let start = Start::Fixed(mix.mean(0).to_vec());
            Setup {
                target: BuiltTarget::Mixture(mix),
                context,
                partition: vec![("x".into(), (0..*dim).collect())],
                start,
            }
        }
        TargetConfig::Sensor { data_seed } => {
            let net = SensorNetwork::simulate(
                &SensorTruth::default(),
                &mut ChaCha8Rng::seed_from_u64(*data_seed),
            );
            let partition = (0..4)
                .map(|k| (format!("x{}", k + 1), vec![2 * k, 2 * k + 1]))
                .collect();
            let context = TargetContext {
                cluster_blocks: true,
                ..Default::default()
            };
            Setup {
                target: BuiltTarget::Sensor(Box::new(net)),
                context,
                partition,
                start: Start::UnitCube,
            }
        }
    })
}

/// Runs the two Metropolis pilots from the known modes and pools them.
pub fn pilot_covariance(
    setup: &Setup,
    seed: u64,
    replicate: usize,
    length: usize,
) -> Result<GaussianProposal, RunnerError> {
    let modes = setup
        .context
        .modes
        .as_ref()
        .ok_or_else(|| RunnerError::Config("pilots need known modes".into()))?;
    let d = setup.dim();
    let preset = GaussianProposal::metropolis_preset(d)?;
    let mut pooled = Vec::with_capacity(2 * length * d);
    for (which, mode) in modes.iter().take(2).enumerate() {
        let mut rng = chain_rng(seed, PILOT_STREAM + 2 * replicate as u64 + which as u64);
        let mut counter = EvalCounter::new();
        let mut x = mode.clone();
        let mut lx = eval_logpi(&setup.target, &x, &mut counter, Phase::Other)?;
        for _ in 0..length {
            metropolis_step(
                &mut x,
                &mut lx,
                &preset,
                &setup.target,
                &mut rng,
                &mut counter,
            )?;
            pooled.extend_from_slice(&x);
        }
    }
    Ok(GaussianProposal::adapt_from_sample(pooled.chunks(d))?)
}

/// The jumping rule shared by all kernels of one replicate.
pub fn base_proposal(
    cfg: &ExperimentConfig,
    setup: &Setup,
    replicate: usize,
) -> Result<Option<GaussianProposal>, RunnerError> {
    let d = setup.block_dim();
    if let Some(a) = cfg.adaptation {
        return pilot_covariance(setup, cfg.seed, replicate, a.pre_chain_length).map(Some);
    }
    Ok(match (&cfg.proposal.sigma, &cfg.proposal.covariance) {
        (Some(s), _) => Some(GaussianProposal::isotropic(d, *s)?),
        (None, Some(c)) => Some(GaussianProposal::new(c.clone(), d)?),
        (None, None) => None,
    })
}

#[derive(Debug, Clone)]
pub struct ChainPlan {
    pub kernel: KernelConfig,
    pub proposal: Option<GaussianProposal>,
    pub length: usize,
    pub burn_in: usize,
    /// Reset the jumping rule once from the burn-in draws.
    pub adapt_after_burn_in: bool,
}

fn isotropic_ladder(
    temps: &[f64],
    sigmas: &[f64],
    d: usize,
) -> Result<TemperatureLadder<GaussianProposal>, RunnerError> {
    let mut proposals = vec![GaussianProposal::isotropic(d, sigmas[0])?];
    for s in sigmas {
        proposals.push(GaussianProposal::isotropic(d, *s)?);
    }
    Ok(TemperatureLadder::new(temps.to_vec(), proposals)?)
}

fn need(p: &Option<GaussianProposal>) -> Result<&GaussianProposal, RunnerError> {
    p.as_ref()
        .ok_or_else(|| RunnerError::Config("kernel needs a jumping rule".into()))
}

fn gibbs_sampler(
    setup: &Setup,
    kernel: &KernelConfig,
    p: &Option<GaussianProposal>,
) -> Result<GibbsSampler<GaussianProposal>, RunnerError> {
    let blocks = setup
        .partition
        .iter()
        .map(|(name, idx)| {
            let kernel = match kernel {
                KernelConfig::Ram { max_tries } => BlockKernel::Ram {
                    proposal: need(p)?.clone(),
                    max_tries: *max_tries,
                },
                KernelConfig::Metropolis => BlockKernel::Metropolis(need(p)?.clone()),
                KernelConfig::TemperedTransitions { temps, sigmas } => {
                    BlockKernel::Tempered(isotropic_ladder(temps, sigmas, idx.len())?)
                }
                KernelConfig::ParallelTempering { .. } => unreachable!("handled separately"),
            };
            Ok(BlockSpec {
                name: name.clone(),
                indices: idx.clone(),
                kernel,
            })
        })
        .collect::<Result<Vec<_>, RunnerError>>()?;
    Ok(GibbsSampler::new(setup.dim(), blocks)?)
}

fn adapted(rec: &ChainRecord) -> Result<Option<GaussianProposal>, RunnerError> {
    let burn = &rec.values[..rec.burn_in * rec.dim];
    Ok(Some(GaussianProposal::adapt_from_sample(
        burn.chunks(rec.dim),
    )?))
}

pub fn run_chain<R: KernelRng>(
    setup: &Setup,
    plan: &ChainPlan,
    rng: &mut R,
) -> Result<ChainRecord, RunnerError> {
    let d = setup.dim();
    let x0 = match &setup.start {
        Start::UnitCube => (0..d).map(|_| rng.uniform()).collect(),
        Start::Fixed(v) => v.clone(),
    };
    let names = setup.partition.iter().map(|(n, _)| n.clone()).collect();
    let mut rec = ChainRecord::new(d, names, plan.burn_in);
    let mut proposal = plan.proposal.clone();
    let adapt_at = plan.adapt_after_burn_in.then_some(plan.burn_in);

    if let KernelConfig::ParallelTempering { temps, swaps } = &plan.kernel {
        let schedule = match *swaps {
            SwapConfig::SingleAdjacent => SwapSchedule::SingleAdjacent,
            SwapConfig::Batch { count, prob } => SwapSchedule::Batch { count, prob },
        };
        let ladder_for = |p: &Option<GaussianProposal>| -> Result<_, RunnerError> {
            Ok(TemperatureLadder::new(
                temps.clone(),
                vec![need(p)?.clone(); temps.len()],
            )?)
        };
        let mut ladder = ladder_for(&proposal)?;
        let mut ens = PtEnsemble::new(&setup.target, &x0, temps.len())?;
        let mut spent = ens.total_evals();
        for i in 0..plan.length {
            if adapt_at == Some(i) {
                proposal = adapted(&rec)?;
                ladder = ladder_for(&proposal)?;
            }
            let r = pt_step(&mut ens, &ladder, &setup.target, schedule, rng)?;
            let now = ens.total_evals();
            let it = BlockIteration {
                accepted: r.rung_accepted[0],
                evals: [0, 0, 0, now - spent],
                refresh: 0,
            };
            spent = now;
            rec.push(&ens.states[0], &[it]);
        }
        return Ok(rec);
    }

    let mut sampler = gibbs_sampler(setup, &plan.kernel, &proposal)?;
    let mut state = sampler.init(&setup.target, x0)?;
    let mut prev = state.stats.clone();
    let mut its = vec![BlockIteration::default(); setup.partition.len()];
    for i in 0..plan.length {
        if adapt_at == Some(i) {
            proposal = adapted(&rec)?;
            sampler = gibbs_sampler(setup, &plan.kernel, &proposal)?;
        }
        sampler.sweep(&mut state, &setup.target, rng)?;
        for ((it, now), before) in its.iter_mut().zip(&state.stats).zip(&prev) {
            let mut evals = [0; 4];
            for (e, p) in evals.iter_mut().zip(Phase::ALL) {
                *e = now.kernel_evals.phase(p) - before.kernel_evals.phase(p);
            }
            *it = BlockIteration {
                accepted: now.accepted > before.accepted,
                evals,
                refresh: now.refresh_evals - before.refresh_evals,
            };
        }
        prev.clone_from(&state.stats);
        rec.push(&state.x, &its);
    }
    Ok(rec)
}

/// Closed-form evaluations per iteration; `None` for RAM, whose cost is
/// measured.
pub fn nominal_cost(kernel: &KernelConfig, blocks: usize) -> Option<f64> {
    let schedule = match kernel {
        KernelConfig::Ram { .. } => return None,
        KernelConfig::Metropolis => Schedule::Metropolis { blocks },
        KernelConfig::ParallelTempering { temps, swaps } => {
            let (swap_prob, swaps) = match *swaps {
                SwapConfig::SingleAdjacent => (1.0, 1),
                SwapConfig::Batch { count, prob } => (prob, count),
            };
            Schedule::ParallelTempering {
                rungs: temps.len(),
                swap_prob,
                swaps,
            }
        }
        KernelConfig::TemperedTransitions { temps, .. } => Schedule::TemperedTransitions {
            heated_rungs: temps.len() - 1,
            blocks,
        },
    };
    Some(expected_evals_per_iteration(schedule))
}

/// Every chain of a run together with its summary.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub setup: Setup,
    pub chains: Vec<(ChainMeta, ChainRecord)>,
    pub summary: RunSummary,
}

struct Timed {
    meta: ChainMeta,
    record: ChainRecord,
    seconds: f64,
}

fn run_job(
    cfg: &ExperimentConfig,
    setup: &Setup,
    proposals: &[Option<GaussianProposal>],
    k: usize,
    r: usize,
    length: usize,
    burn_in: usize,
) -> Result<Timed, RunnerError> {
    let kernel = cfg.kernels[k].clone();
    let meta = ChainMeta {
        kernel: kernel.label().to_string(),
        kernel_index: k,
        replicate: r,
        stream: stream_id(k, r),
    };
    let plan = ChainPlan {
        kernel,
        proposal: proposals[r].clone(),
        length,
        burn_in,
        adapt_after_burn_in: cfg.adaptation.is_some(),
    };
    let mut rng = chain_rng(cfg.seed, meta.stream);
    let t0 = Instant::now();
    let record = run_chain(setup, &plan, &mut rng)?;
    Ok(Timed {
        meta,
        record,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Length and burn-in of kernel `k` once the reference kernel has run.
fn matched_length(
    cfg: &ExperimentConfig,
    setup: &Setup,
    proposals: &[Option<GaussianProposal>],
    k: usize,
    reference: &[Timed],
) -> Result<(usize, usize), RunnerError> {
    let n_ref = reference
        .iter()
        .map(|t| t.record.kernel_evals() as f64 / t.record.len() as f64)
        .sum::<f64>()
        / reference.len() as f64;
    let length = match cfg.budget {
        BudgetRule::None => cfg.length,
        BudgetRule::ByEvals => match nominal_cost(&cfg.kernels[k], setup.partition.len()) {
            Some(c) => (cfg.length as f64 * n_ref / c).round() as usize,
            None => cfg.length,
        },
        BudgetRule::ByWalltime => {
            let t_ref = reference.iter().map(|t| t.seconds).sum::<f64>() / reference.len() as f64;
            let probe_burn = TIMING_ITERATIONS / 2;
            let probe = run_job(cfg, setup, proposals, k, 0, TIMING_ITERATIONS, probe_burn)?;
            ((t_ref / probe.seconds) * TIMING_ITERATIONS as f64).round() as usize
        }
    };
    let burn_in = if cfg.scale_burn_in {
        (cfg.burn_in as f64 * length as f64 / cfg.length as f64).round() as usize
    } else {
        cfg.burn_in
    };
    if burn_in >= length {
        return Err(RunnerError::Config(format!(
            "matched length {length} leaves no draws after burn-in {burn_in}"
        )));
    }
    Ok((length, burn_in))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, RunnerError> {
    cfg.validate()?;
    let setup = setup(cfg)?;
    let proposals: Vec<Option<GaussianProposal>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| base_proposal(cfg, &setup, r))
        .collect::<Result<_, _>>()?;
    let reference = reference_kernel(cfg);

    let jobs = |ks: Vec<usize>, lengths: Vec<(usize, usize)>| -> Result<Vec<Timed>, RunnerError> {
        let list: Vec<(usize, usize, (usize, usize))> = ks
            .iter()
            .zip(&lengths)
            .flat_map(|(&k, &l)| (0..cfg.replicates).map(move |r| (k, r, l)))
            .collect();
        list.into_par_iter()
            .map(|(k, r, (len, burn))| run_job(cfg, &setup, &proposals, k, r, len, burn))
            .collect()
    };

    let mut done = Vec::new();
    let rest: Vec<usize> = (0..cfg.kernels.len())
        .filter(|k| Some(*k) != reference)
        .collect();
    if let Some(k) = reference {
        done = jobs(vec![k], vec![(cfg.length, cfg.burn_in)])?;
        let lengths = rest
            .iter()
            .map(|&j| matched_length(cfg, &setup, &proposals, j, &done))
            .collect::<Result<Vec<_>, _>>()?;
        done.extend(jobs(rest, lengths)?);
    } else {
        let n = rest.len();
        done.extend(jobs(rest, vec![(cfg.length, cfg.burn_in); n])?);
    }
    done.sort_by_key(|t| (t.meta.kernel_index, t.meta.replicate));
    let chains: Vec<(ChainMeta, ChainRecord)> =
        done.into_iter().map(|t| (t.meta, t.record)).collect();
    let summary = summarize_chains(cfg, &setup, &chains, reference)?;
    Ok(ExperimentOutput {
        setup,
        chains,
        summary,
    })
}

pub fn summarize_chains(
    cfg: &ExperimentConfig,
    setup: &Setup,
    chains: &[(ChainMeta, ChainRecord)],
    reference: Option<usize>,
) -> Result<RunSummary, RunnerError> {
    let reports = chains
        .par_iter()
        .map(|(m, r)| chain_report(m.clone(), r, &setup.context, cfg.max_lag))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(run_summary(cfg.seed, reports, &setup.context, reference))
}

/// The kernel index that sets the budget, if any.
pub fn reference_kernel(cfg: &ExperimentConfig) -> Option<usize> {
    if cfg.budget == BudgetRule::None {
        return None;
    }
    cfg.kernels
        .iter()
        .position(|k| matches!(k, KernelConfig::Ram { .. }))
}
