//! Tempering baselines: parallel tempering and tempered transitions.

mod pt;
mod tt;

use alloc::string::ToString;
use alloc::vec::Vec;

pub use pt::{pt_step, PtEnsemble, PtStepReport, SwapSchedule};
pub use tt::{tempered_transition_step, TtStepReport};

use crate::proposal::Proposal;
use crate::{Error, Result};

/// Temperatures `1 = T_0 < T_1 < … < T_J` with one proposal per rung.
///
/// Parallel tempering uses every rung's proposal. Tempered transitions move
/// only on rungs `1..=J`, so the rung-0 proposal is ignored there.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureLadder<P> {
    temps: Vec<f64>,
    proposals: Vec<P>,
}

impl<P: Proposal> TemperatureLadder<P> {
    pub fn new(temps: Vec<f64>, proposals: Vec<P>) -> Result<Self> {
        if temps.first() != Some(&1.0) {
            return Err(Error::InvalidParameter(
                "ladder must start at temperature 1".to_string(),
            ));
        }
        if temps.windows(2).any(|w| !(w[1].is_finite() && w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "temperatures must be strictly increasing".to_string(),
            ));
        }
        if proposals.len() != temps.len() {
            return Err(Error::InvalidParameter(
                "need one proposal per rung".to_string(),
            ));
        }
        let dim = proposals[0].dim();
        if let Some(p) = proposals.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
        Ok(Self { temps, proposals })
    }

    /// Temperatures `2^k` for `k = 0..n_rungs`, all rungs sharing `proposal`.
    pub fn powers_of_two(n_rungs: usize, proposal: P) -> Result<Self>
    where
        P: Clone,
    {
        let temps = (0..n_rungs).map(|k| libm::pow(2.0, k as f64)).collect();
        Self::new(temps, alloc::vec![proposal; n_rungs])
    }

    pub fn n_rungs(&self) -> usize {
        self.temps.len()
    }

    /// Number of rungs above the base, `J`.
    pub fn top(&self) -> usize {
        self.temps.len() - 1
    }

    pub fn temperature(&self, j: usize) -> f64 {
        self.temps[j]
    }

    pub fn temps(&self) -> &[f64] {
        &self.temps
    }

    pub fn proposal(&self, j: usize) -> &P {
        &self.proposals[j]
    }
}
