//! Run directories: config echo, one samples file per chain, summary.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::experiments::{reference_kernel, setup, stream_id, summarize_chains, ExperimentOutput};
use crate::record::ChainRecord;
use crate::report::{ChainMeta, RunSummary};
use crate::RunnerError;

pub const CONFIG_FILE: &str = "config.toml";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SAMPLES_DIR: &str = "samples";

pub fn sample_file_name(meta: &ChainMeta) -> String {
    format!(
        "{:02}-{}-{:03}.csv",
        meta.kernel_index, meta.kernel, meta.replicate
    )
}

pub fn summary_json(summary: &RunSummary) -> Result<String, RunnerError> {
    Ok(serde_json::to_string_pretty(summary)? + "\n")
}

pub fn write_run(
    dir: &Path,
    cfg: &ExperimentConfig,
    out: &ExperimentOutput,
) -> Result<(), RunnerError> {
    fs::create_dir_all(dir.join(SAMPLES_DIR))?;
    fs::write(dir.join(CONFIG_FILE), cfg.to_toml())?;
    for (meta, rec) in &out.chains {
        let f = fs::File::create(dir.join(SAMPLES_DIR).join(sample_file_name(meta)))?;
        rec.write_csv(BufWriter::new(f))?;
    }
    fs::write(dir.join(SUMMARY_FILE), summary_json(&out.summary)?)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recheck {
    pub chains: usize,
    pub matches: bool,
}

/// Re-reads a run directory and recomputes its summary from the samples
/// files alone.
pub fn recheck_run(dir: &Path) -> Result<Recheck, RunnerError> {
    let cfg = ExperimentConfig::from_toml(&fs::read_to_string(dir.join(CONFIG_FILE))?)?;
    let setup = setup(&cfg)?;
    let mut chains = Vec::new();
    for (k, kernel) in cfg.kernels.iter().enumerate() {
        for r in 0..cfg.replicates {
            let meta = ChainMeta {
                kernel: kernel.label().to_string(),
                kernel_index: k,
                replicate: r,
                stream: stream_id(k, r),
            };
            let f = fs::File::open(dir.join(SAMPLES_DIR).join(sample_file_name(&meta)))?;
            let rec = ChainRecord::read_csv(std::io::BufReader::new(f))?;
            chains.push((meta, rec));
        }
    }
    let summary = summarize_chains(&cfg, &setup, &chains, reference_kernel(&cfg))?;
    let stored = fs::read_to_string(dir.join(SUMMARY_FILE))?;
    Ok(Recheck {
        chains: chains.len(),
        matches: summary_json(&summary)? == stored,
    })
}
