//! Target densities and evaluation accounting.
//!
//! All density work is in log space. A density of zero is `f64::NEG_INFINITY`;
//! no target ever returns NaN.

mod discrete;
mod mixture;
mod sensor;

use core::fmt;

pub use discrete::DiscreteTarget;
pub use mixture::{GaussianMixture, MixtureMoments};
pub use sensor::{SensorNetwork, SensorTruth, DETECT_SCALE, OBS_SD, PRIOR_SD};

use crate::{Error, Result};

/// An unnormalized log-density on `R^dim`.
pub trait LogTarget {
    fn dim(&self) -> usize;

    /// `log π(x)`. Must be deterministic and never NaN.
    fn log_density(&self, x: &[f64]) -> f64;
}

impl<T: LogTarget + ?Sized> LogTarget for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
}

/// The part of a kernel step an evaluation is charged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Downhill,
    Uphill,
    AuxDownhill,
    Other,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::Downhill,
        Phase::Uphill,
        Phase::AuxDownhill,
        Phase::Other,
    ];

    fn slot(self) -> usize {
        match self {
            Phase::Downhill => 0,
            Phase::Uphill => 1,
            Phase::AuxDownhill => 2,
            Phase::Other => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Downhill => "downhill",
            Phase::Uphill => "uphill",
            Phase::AuxDownhill => "aux_downhill",
            Phase::Other => "other",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Exact count of target evaluations, broken down by [`Phase`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounter {
    per_phase: [u64; 4],
}

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, phase: Phase) {
        self.per_phase[phase.slot()] += 1;
    }

    /// Charges `n` evaluations to `phase` at once.
    pub fn add(&mut self, phase: Phase, n: u64) {
        self.per_phase[phase.slot()] += n;
    }

    pub fn total(&self) -> u64 {
        self.per_phase.iter().sum()
    }

    pub fn phase(&self, phase: Phase) -> u64 {
        self.per_phase[phase.slot()]
    }

    pub fn merge(&mut self, other: &EvalCounter) {
        for (a, b) in self.per_phase.iter_mut().zip(other.per_phase) {
            *a += b;
        }
    }
}

/// Evaluates `log π(x)` and charges one evaluation to `phase`.
pub fn eval_logpi<T: LogTarget + ?Sized>(
    target: &T,
    x: &[f64],
    counter: &mut EvalCounter,
    phase: Phase,
) -> Result<f64> {
    if x.len() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: x.len(),
        });
    }
    let v = target.log_density(x);
    debug_assert!(!v.is_nan(), "target returned NaN");
    counter.record(phase);
    Ok(v)
}

/// `log[(π(a) + ε) / (π(b) + ε)]` for vanishing ε, given `log π(a)` and
/// `log π(b)`.
///
/// Both finite: the plain difference. Both zero densities: 0 (ratio one).
/// Exactly one zero density: `-∞` or `+∞`.
pub fn log_ratio_eps(log_a: f64, log_b: f64) -> f64 {
    match (log_a == f64::NEG_INFINITY, log_b == f64::NEG_INFINITY) {
        (false, false) => log_a - log_b,
        (true, true) => 0.0,
        (true, false) => f64::NEG_INFINITY,
        (false, true) => f64::INFINITY,
    }
}

/// `min{1, exp(log_ratio)}`.
pub fn acceptance_from_log(log_ratio: f64) -> f64 {
    if log_ratio >= 0.0 {
        1.0
    } else {
        libm::exp(log_ratio)
    }
}

/// A target raised to the power `1 / temperature`.
#[derive(Debug, Clone, Copy)]
pub struct Tempered<T> {
    pub inner: T,
    pub temperature: f64,
}

impl<T: LogTarget> LogTarget for Tempered<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.inner.log_density(x) / self.temperature
    }
}

/// `log Σ exp(v_i)`; `-∞` for an empty or all-`-∞` input.
pub fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = values.map(|v| libm::exp(v - max)).sum();
    max + libm::log(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct StdNormal2;

    impl LogTarget for StdNormal2 {
        fn dim(&self) -> usize {
            2
        }
        fn log_density(&self, x: &[f64]) -> f64 {
            -0.5 * (x[0] * x[0] + x[1] * x[1])
        }
    }

    #[test]
    fn standard_normal_at_origin_is_zero() {
        let mut c = EvalCounter::new();
        assert_eq!(
            eval_logpi(&StdNormal2, &[0.0, 0.0], &mut c, Phase::Other).unwrap(),
            0.0
        );
    }

    #[test]
    fn counter_increments_once_per_call() {
        let mut c = EvalCounter::new();
        eval_logpi(&StdNormal2, &[1.0, 2.0], &mut c, Phase::Uphill).unwrap();
        assert_eq!(c.total(), 1);
        assert_eq!(c.phase(Phase::Uphill), 1);
        eval_logpi(&StdNormal2, &[1.0, 2.0], &mut c, Phase::Downhill).unwrap();
        assert_eq!(c.total(), 2);
        let sum: u64 = Phase::ALL.iter().map(|&p| c.phase(p)).sum();
        assert_eq!(sum, c.total());
    }

    #[test]
    fn dimension_mismatch_is_an_error_and_not_counted() {
        let mut c = EvalCounter::new();
        let err = eval_logpi(&StdNormal2, &[1.0], &mut c, Phase::Other).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                got: 1
            }
        );
        assert_eq!(c.total(), 0);
    }

    #[test]
    fn eps_rule_cases() {
        let ninf = f64::NEG_INFINITY;
        assert_eq!(log_ratio_eps(-1.0, -3.0), 2.0);
        assert_eq!(log_ratio_eps(ninf, ninf), 0.0);
        assert_eq!(log_ratio_eps(ninf, -3.0), ninf);
        assert_eq!(log_ratio_eps(-3.0, ninf), f64::INFINITY);
        assert_eq!(acceptance_from_log(ninf), 0.0);
        assert_eq!(acceptance_from_log(f64::INFINITY), 1.0);
    }

    #[test]
    fn log_sum_exp_handles_underflow() {
        let v = [-1000.0, -1000.0];
        let r = log_sum_exp(v.iter().copied());
        assert!((r - (-1000.0 + core::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(
            log_sum_exp([f64::NEG_INFINITY].iter().copied()),
            f64::NEG_INFINITY
        );
    }
}
