//! Repelling-attracting Metropolis (RAM) sampling.
//!
//! RAM is a Metropolis-Hastings kernel whose proposal is built from a forced
//! downhill move followed by a forced uphill move in target density. An
//! auxiliary variable `z`, drawn by one more forced downhill move, makes the
//! acceptance probability cheap to evaluate while leaving the `x`-marginal
//! of the chain invariant.
//!
//! This crate is `no_std` (it needs `alloc`) and holds everything that is pure
//! computation:
//!
//! * [`targets`]: the log-density contract, evaluation counting and the
//!   Gaussian-mixture and sensor-network targets.
//! * [`proposal`]: symmetric jumping rules.
//! * [`kernels`]: the RAM step and the Metropolis baseline.
//! * [`baselines`]: parallel tempering and tempered transitions.
//! * [`gibbs`]: systematic-scan block composition of the kernels above.
//! * [`oracle`]: exact transition matrices on small discrete spaces.
//! * [`diagnostics`]: the summary statistics reported for each experiment.
//!
//! IO, configuration and the command line live in the `ram-runner` crate.
#![no_std]

extern crate alloc;

pub mod baselines;
pub mod diagnostics;
pub mod error;
pub mod gibbs;
pub mod kernels;
pub mod linalg;
pub mod oracle;
pub mod proposal;
pub mod rng;
pub mod targets;

pub use error::{Error, Result};
pub use kernels::{metropolis_step, ram_step, KernelStepReport, RamState};
pub use proposal::{GaussianProposal, Proposal};
pub use rng::KernelRng;
pub use targets::{eval_logpi, EvalCounter, LogTarget, Phase};
