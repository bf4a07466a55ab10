use alloc::vec::Vec;

use super::LogTarget;

/// A distribution on the states `0..n`, embedded in `R^1`: the state is
/// `x[0]` rounded to the nearest integer. Used to drive the continuous kernels
/// on problems the exact oracle can enumerate.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTarget {
    log_weights: Vec<f64>,
}

impl DiscreteTarget {
    /// From unnormalized, non-negative weights. Zero weights are allowed.
    pub fn from_weights(weights: &[f64]) -> Self {
        Self {
            log_weights: weights.iter().map(|w| libm::log(*w)).collect(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.log_weights.len()
    }

    pub fn state_of(x: &[f64]) -> usize {
        libm::round(x[0]) as usize
    }
}

impl LogTarget for DiscreteTarget {
    fn dim(&self) -> usize {
        1
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let v = libm::round(x[0]);
        if v < 0.0 || v >= self.log_weights.len() as f64 {
            return f64::NEG_INFINITY;
        }
        self.log_weights[v as usize]
    }
}
