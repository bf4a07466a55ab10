//! Experiment configuration, read from TOML.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::RunnerError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetConfig,
    pub kernels: Vec<KernelConfig>,
    #[serde(default)]
    pub proposal: ProposalConfig,
    /// Iterations per chain, burn-in included. For Gibbs targets one
    /// iteration is one full sweep.
    pub length: usize,
    pub burn_in: usize,
    #[serde(default = "one")]
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub budget: BudgetRule,
    /// Whether matched-budget chains also scale their burn-in.
    #[serde(default = "yes")]
    pub scale_burn_in: bool,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    #[serde(default)]
    pub adaptation: Option<AdaptationConfig>,
    #[serde(default)]
    pub tune: Option<TuneConfig>,
    #[serde(default)]
    pub rng: RngAlgorithm,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_max_lag() -> usize {
    50
}

fn default_max_tries() -> u64 {
    ram_core::kernels::DEFAULT_MAX_TRIES
}

fn default_pre_chain() -> usize {
    5000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    /// The twenty bivariate modes, case `a` (equal) or `b` (unequal).
    TwentyModes {
        case: MixtureCase,
        #[serde(default)]
        modes_file: Option<PathBuf>,
    },
    /// Eight unit-variance modes on a cube, with the first two known.
    Cube { dim: usize },
    /// Sensor localization with data simulated from the true locations.
    Sensor { data_seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixtureCase {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Ram {
        #[serde(default = "default_max_tries")]
        max_tries: u64,
    },
    Metropolis,
    ParallelTempering {
        temps: Vec<f64>,
        #[serde(default)]
        swaps: SwapConfig,
    },
    /// `temps[0]` must be 1; `sigmas[j − 1]` is the isotropic jumping scale
    /// at heated rung `j`.
    TemperedTransitions {
        temps: Vec<f64>,
        sigmas: Vec<f64>,
    },
}

impl KernelConfig {
    pub fn label(&self) -> &'static str {
        match self {
            KernelConfig::Ram { .. } => "ram",
            KernelConfig::Metropolis => "metropolis",
            KernelConfig::ParallelTempering { .. } => "pt",
            KernelConfig::TemperedTransitions { .. } => "tt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SwapConfig {
    #[default]
    SingleAdjacent,
    Batch {
        count: usize,
        prob: f64,
    },
}

/// Jumping rule: an isotropic scale or a full row-major covariance. Left
/// empty when `adaptation` supplies it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ProposalConfig {
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub covariance: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BudgetRule {
    #[default]
    None,
    ByEvals,
    ByWalltime,
}

/// Two Metropolis pilot chains from the known modes set the covariance,
/// which is then reset once from each main chain's burn-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptationConfig {
    #[serde(default = "default_pre_chain")]
    pub pre_chain_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    pub grid: Vec<f64>,
    pub length: usize,
    pub burn_in: usize,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RngAlgorithm {
    /// ChaCha with 8 rounds, seeded by `seed_from_u64(seed)`, one stream per
    /// chain.
    #[default]
    ChaCha8,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunnerError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        let bad = |m: &str| Err(RunnerError::Config(m.to_string()));
        if self.burn_in >= self.length {
            return bad("burn_in must be smaller than length");
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.kernels.is_empty() {
            return bad("at least one kernel is required");
        }
        if self.budget != BudgetRule::None
            && !self
                .kernels
                .iter()
                .any(|k| matches!(k, KernelConfig::Ram { .. }))
        {
            return bad("a matched budget needs a ram kernel as the reference");
        }
        let needs_proposal = self
            .kernels
            .iter()
            .any(|k| !matches!(k, KernelConfig::TemperedTransitions { .. }));
        let given = usize::from(self.proposal.sigma.is_some())
            + usize::from(self.proposal.covariance.is_some());
        if given > 1 {
            return bad("give either proposal.sigma or proposal.covariance, not both");
        }
        if needs_proposal && given == 0 && self.adaptation.is_none() {
            return bad("no jumping rule: set proposal.sigma, proposal.covariance or adaptation");
        }
        if self.adaptation.is_some() && !matches!(self.target, TargetConfig::Cube { .. }) {
            return bad("adaptation needs known modes and is only defined for the cube target");
        }
        if let TargetConfig::Cube { dim } = self.target {
            if dim < 3 {
                return bad("cube target needs dim >= 3");
            }
        }
        for k in &self.kernels {
            match k {
                KernelConfig::ParallelTempering { temps, swaps } => {
                    if matches!(self.target, TargetConfig::Sensor { .. }) {
                        return bad("parallel tempering is not available inside the Gibbs sampler");
                    }
                    if temps.first() != Some(&1.0) {
                        return bad("temperature ladders start at 1");
                    }
                    if let SwapConfig::Batch { prob, .. } = swaps {
                        if !(0.0..=1.0).contains(prob) {
                            return bad("swap probability must lie in [0, 1]");
                        }
                    }
                }
                KernelConfig::TemperedTransitions { temps, sigmas } => {
                    if temps.first() != Some(&1.0) {
                        return bad("temperature ladders start at 1");
                    }
                    if sigmas.len() + 1 != temps.len() {
                        return bad("tempered transitions need one sigma per heated rung");
                    }
                }
                _ => {}
            }
        }
        if let Some(t) = &self.tune {
            if t.grid.is_empty() || t.burn_in >= t.length {
                return bad("tune needs a non-empty grid and burn_in < length");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
        length = 1000
        burn_in = 200
        seed = 9
        kernels = [{ name = "ram" }, { name = "parallel_tempering", temps = [1, 2, 4], swaps = { kind = "batch", count = 4, prob = 0.1 } }]
        budget = "by_evals"

        [target]
        name = "twenty_modes"
        case = "a"

        [proposal]
        sigma = 4.0
    "#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml(EXAMPLE).unwrap();
        assert_eq!(cfg.replicates, 1);
        assert_eq!(cfg.rng, RngAlgorithm::ChaCha8);
        assert!(
            matches!(cfg.kernels[0], KernelConfig::Ram { max_tries } if max_tries == 1_000_000)
        );
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_bad_burn_in_and_missing_rule() {
        let long = EXAMPLE.replace("burn_in = 200", "burn_in = 1000");
        assert!(ExperimentConfig::from_toml(&long).is_err());
        let no_rule = EXAMPLE.replace("sigma = 4.0", "");
        assert!(ExperimentConfig::from_toml(&no_rule).is_err());
        let no_ref = EXAMPLE.replace(r#"{ name = "ram" }, "#, "");
        assert!(ExperimentConfig::from_toml(&no_ref).is_err());
    }
}
