//! Per-iteration chain output and its CSV form.
//!
//! Every iteration is kept, burn-in included, so that all summary numbers can
//! be recomputed from the file alone. Columns are `iter`, `burn_in`, then per
//! block `<b>_accepted`, `<b>_down`, `<b>_up`, `<b>_aux`, `<b>_other`,
//! `<b>_refresh`, then `x1..xd`.

use std::io::{Read, Write};

use ram_core::{EvalCounter, Phase};

use crate::RunnerError;

/// What one block spent and did in one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlockIteration {
    pub accepted: bool,
    /// Kernel evaluations by phase, in [`Phase::ALL`] order.
    pub evals: [u64; 4],
    /// Evaluations spent re-reading stale cached densities.
    pub refresh: u64,
}

impl BlockIteration {
    pub fn from_counter(accepted: bool, c: &EvalCounter, refresh: u64) -> Self {
        let mut evals = [0; 4];
        for (e, p) in evals.iter_mut().zip(Phase::ALL) {
            *e = c.phase(p);
        }
        Self {
            accepted,
            evals,
            refresh,
        }
    }

    pub fn kernel_evals(&self) -> u64 {
        self.evals.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainRecord {
    pub dim: usize,
    pub block_names: Vec<String>,
    pub burn_in: usize,
    /// Row-major, `dim` values per iteration.
    pub values: Vec<f64>,
    /// Row-major, one entry per block per iteration.
    pub blocks: Vec<BlockIteration>,
}

impl ChainRecord {
    pub fn new(dim: usize, block_names: Vec<String>, burn_in: usize) -> Self {
        Self {
            dim,
            block_names,
            burn_in,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn push(&mut self, x: &[f64], blocks: &[BlockIteration]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(blocks.len(), self.block_names.len());
        self.values.extend_from_slice(x);
        self.blocks.extend_from_slice(blocks);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn block_row(&self, i: usize) -> &[BlockIteration] {
        let b = self.block_names.len();
        &self.blocks[i * b..(i + 1) * b]
    }

    pub fn kept_values(&self) -> &[f64] {
        &self.values[self.burn_in.min(self.len()) * self.dim..]
    }

    /// Total kernel evaluations over all iterations.
    pub fn kernel_evals(&self) -> u64 {
        self.blocks.iter().map(BlockIteration::kernel_evals).sum()
    }

    pub fn refresh_evals(&self) -> u64 {
        self.blocks.iter().map(|b| b.refresh).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), RunnerError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iter".to_string(), "burn_in".to_string()];
        for b in &self.block_names {
            for col in ["accepted", "down", "up", "aux", "other", "refresh"] {
                header.push(format!("{b}_{col}"));
            }
        }
        header.extend((1..=self.dim).map(|k| format!("x{k}")));
        w.write_record(&header)?;
        let mut fields: Vec<String> = Vec::with_capacity(header.len());
        for i in 0..self.len() {
            fields.clear();
            fields.push(i.to_string());
            fields.push(u8::from(i < self.burn_in).to_string());
            for b in self.block_row(i) {
                fields.push(u8::from(b.accepted).to_string());
                fields.extend(b.evals.iter().map(u64::to_string));
                fields.push(b.refresh.to_string());
            }
            // shortest round-trip formatting, so re-reading is exact
            fields.extend(self.row(i).iter().map(f64::to_string));
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, RunnerError> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let bad = |m: String| RunnerError::SamplesFile(m);
        let n_cols = header.len();
        let dim = header
            .iter()
            .filter(|h| h.starts_with('x') && h[1..].parse::<usize>().is_ok())
            .count();
        if n_cols < 2 + dim || (n_cols - 2 - dim) % 6 != 0 {
            return Err(bad(format!("unexpected header with {n_cols} columns")));
        }
        let block_names: Vec<String> = (0..(n_cols - 2 - dim) / 6)
            .map(|k| {
                let h = &header[2 + 6 * k];
                h.strip_suffix("_accepted")
                    .map(str::to_string)
                    .ok_or_else(|| bad(format!("bad column {h}")))
            })
            .collect::<Result<_, _>>()?;
        let mut rec = ChainRecord::new(dim, block_names, 0);
        let mut burn_in = 0;
        let mut blocks = Vec::with_capacity(rec.block_names.len());
        let mut x = Vec::with_capacity(dim);
        for (i, row) in r.records().enumerate() {
            let row = row?;
            let int = |j: usize| {
                row[j]
                    .parse::<u64>()
                    .map_err(|e| bad(format!("row {i} column {j}: {e}")))
            };
            if int(0)? != i as u64 {
                return Err(bad(format!("row {i} is out of order")));
            }
            if int(1)? == 1 {
                if burn_in != i {
                    return Err(bad("burn-in rows must come first".to_string()));
                }
                burn_in += 1;
            }
            blocks.clear();
            for k in 0..rec.block_names.len() {
                let c = 2 + 6 * k;
                blocks.push(BlockIteration {
                    accepted: int(c)? == 1,
                    evals: [int(c + 1)?, int(c + 2)?, int(c + 3)?, int(c + 4)?],
                    refresh: int(c + 5)?,
                });
            }
            x.clear();
            for j in n_cols - dim..n_cols {
                x.push(
                    row[j]
                        .parse::<f64>()
                        .map_err(|e| bad(format!("row {i} column {j}: {e}")))?,
                );
            }
            rec.push(&x, &blocks);
        }
        rec.burn_in = burn_in;
        Ok(rec)
    }
}
