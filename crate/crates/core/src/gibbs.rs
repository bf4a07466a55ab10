//! Systematic-scan Gibbs sampling with a RAM, Metropolis or
//! tempered-transitions kernel per block.
//!
//! A RAM block keeps its own auxiliary variable across sweeps; only the block's
//! `x` is shared with the other blocks. A block's cached conditional densities
//! are stale once any other block has moved, and are re-evaluated (and
//! counted) at the start of its next update.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::baselines::{tempered_transition_step, TemperatureLadder};
use crate::kernels::{metropolis_step, ram_step, RamState};
use crate::proposal::Proposal;
use crate::rng::KernelRng;
use crate::targets::{eval_logpi, EvalCounter, LogTarget, Phase};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum BlockKernel<P> {
    Metropolis(P),
    Ram { proposal: P, max_tries: u64 },
    Tempered(TemperatureLadder<P>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec<P> {
    pub name: String,
    pub indices: Vec<usize>,
    pub kernel: BlockKernel<P>,
}

/// The joint log-density seen as a function of one block, the other
/// coordinates frozen.
#[derive(Debug, Clone)]
pub struct Conditional<'a, T: ?Sized> {
    joint: &'a T,
    indices: &'a [usize],
    frozen: &'a [f64],
}

pub fn conditional_logdensity<'a, T: LogTarget + ?Sized>(
    joint: &'a T,
    indices: &'a [usize],
    frozen: &'a [f64],
) -> Conditional<'a, T> {
    Conditional {
        joint,
        indices,
        frozen,
    }
}

impl<T: LogTarget + ?Sized> LogTarget for Conditional<'_, T> {
    fn dim(&self) -> usize {
        self.indices.len()
    }

    fn log_density(&self, block: &[f64]) -> f64 {
        let mut full = self.frozen.to_vec();
        for (&i, v) in self.indices.iter().zip(block) {
            full[i] = *v;
        }
        self.joint.log_density(&full)
    }
}

/// Per-block bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockStats {
    pub updates: u64,
    /// Updates that changed the block; an accepted tempered transition
    /// that returns to its start does not count.
    pub accepted: u64,
    /// Evaluations made by the kernel itself (proposals only).
    pub kernel_evals: EvalCounter,
    /// Evaluations spent refreshing stale cached densities.
    pub refresh_evals: u64,
}

impl BlockStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.updates == 0 {
            0.0
        } else {
            self.accepted as f64 / self.updates as f64
        }
    }

    pub fn total_evals(&self) -> u64 {
        self.kernel_evals.total() + self.refresh_evals
    }
}

#[derive(Debug, Clone, PartialEq)]
struct BlockState {
    z: Option<Vec<f64>>,
    logpi_x: f64,
    logpi_z: f64,
    stale: bool,
}

/// Full state vector plus per-block auxiliaries and caches.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    pub x: Vec<f64>,
    blocks: Vec<BlockState>,
    pub stats: Vec<BlockStats>,
}

impl GibbsState {
    pub fn auxiliary(&self, block: usize) -> Option<&[f64]> {
        self.blocks[block].z.as_deref()
    }
}

/// A fixed block partition and its kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsSampler<P> {
    dim: usize,
    blocks: Vec<BlockSpec<P>>,
}

impl<P: Proposal> GibbsSampler<P> {
    /// Checks that the blocks' index sets partition `0..dim` and that each
    /// kernel's dimension matches its block.
    pub fn new(dim: usize, blocks: Vec<BlockSpec<P>>) -> Result<Self> {
        let mut seen = vec![false; dim];
        for b in &blocks {
            if b.indices.is_empty() {
                return Err(Error::InvalidPartition(format!(
                    "block {} is empty",
                    b.name
                )));
            }
            for &i in &b.indices {
                if i >= dim {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} out of range in block {}",
                        b.name
                    )));
                }
                if core::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidPartition(format!("index {i} appears twice")));
                }
            }
            let kdim = match &b.kernel {
                BlockKernel::Metropolis(p) | BlockKernel::Ram { proposal: p, .. } => p.dim(),
                BlockKernel::Tempered(l) => l.proposal(0).dim(),
            };
            if kdim != b.indices.len() {
                return Err(Error::DimensionMismatch {
                    expected: b.indices.len(),
                    got: kdim,
                });
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("index {i} is not covered")));
        }
        Ok(Self { dim, blocks })
    }

    pub fn blocks(&self) -> &[BlockSpec<P>] {
        &self.blocks
    }

    /// Initial state at `x0`; RAM auxiliaries start at their block of `x0`.
    /// Each block's cache costs one evaluation, recorded as a refresh.
    pub fn init<T: LogTarget + ?Sized>(&self, joint: &T, x0: Vec<f64>) -> Result<GibbsState> {
        if x0.len() != self.dim || joint.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x0.len(),
            });
        }
        let mut stats = vec![BlockStats::default(); self.blocks.len()];
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (b, st) in self.blocks.iter().zip(stats.iter_mut()) {
            let xb: Vec<f64> = b.indices.iter().map(|&i| x0[i]).collect();
            let cond = conditional_logdensity(joint, &b.indices, &x0);
            let lp = cond.log_density(&xb);
            st.refresh_evals += 1;
            let z = matches!(b.kernel, BlockKernel::Ram { .. }).then(|| xb.clone());
            blocks.push(BlockState {
                z,
                logpi_x: lp,
                logpi_z: lp,
                stale: false,
            });
        }
        Ok(GibbsState {
            x: x0,
            blocks,
            stats,
        })
    }

    /// One systematic scan over the blocks in order.
    pub fn sweep<T, R>(&self, state: &mut GibbsState, joint: &T, rng: &mut R) -> Result<()>
    where
        T: LogTarget + ?Sized,
        R: KernelRng + ?Sized,
    {
        for k in 0..self.blocks.len() {
            if self.update_block(k, state, joint, rng)? {
                for (m, b) in state.blocks.iter_mut().enumerate() {
                    if m != k {
                        b.stale = true;
                    }
                }
            }
        }
        Ok(())
    }

    fn update_block<T, R>(
        &self,
        k: usize,
        state: &mut GibbsState,
        joint: &T,
        rng: &mut R,
    ) -> Result<bool>
    where
        T: LogTarget + ?Sized,
        R: KernelRng + ?Sized,
    {
        let spec = &self.blocks[k];
        let frozen = state.x.clone();
        let cond = conditional_logdensity(joint, &spec.indices, &frozen);
        let mut xb: Vec<f64> = spec.indices.iter().map(|&i| frozen[i]).collect();
        let bs = &mut state.blocks[k];
        let st = &mut state.stats[k];

        if bs.stale {
            let mut refresh = EvalCounter::new();
            bs.logpi_x = eval_logpi(&cond, &xb, &mut refresh, Phase::Other)?;
            if let Some(z) = &bs.z {
                bs.logpi_z = eval_logpi(&cond, z, &mut refresh, Phase::Other)?;
            }
            st.refresh_evals += refresh.total();
            bs.stale = false;
        }

        let moved = match &spec.kernel {
            BlockKernel::Metropolis(p) => metropolis_step(
                &mut xb,
                &mut bs.logpi_x,
                p,
                &cond,
                rng,
                &mut st.kernel_evals,
            )?,
            BlockKernel::Ram {
                proposal,
                max_tries,
            } => {
                let z = bs.z.take().expect("RAM block carries an auxiliary");
                let mut rs = RamState::from_parts(xb, z, bs.logpi_x, bs.logpi_z);
                let r = ram_step(
                    &mut rs,
                    proposal,
                    &cond,
                    rng,
                    &mut st.kernel_evals,
                    *max_tries,
                )?;
                bs.logpi_x = rs.logpi_x;
                bs.logpi_z = rs.logpi_z;
                bs.z = Some(rs.z);
                xb = rs.x;
                r.accepted
            }
            BlockKernel::Tempered(ladder) => {
                tempered_transition_step(
                    &mut xb,
                    &mut bs.logpi_x,
                    &cond,
                    ladder,
                    rng,
                    &mut st.kernel_evals,
                )?
                .moved
            }
        };
        st.updates += 1;
        if moved {
            st.accepted += 1;
            for (&i, v) in spec.indices.iter().zip(&xb) {
                state.x[i] = *v;
            }
        }
        Ok(moved)
    }
}
