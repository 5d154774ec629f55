//! Replicated parameter sweeps.
//!
//! Every run's seed is a pure function of `(master_seed, cell, replicate)`,
//! so a run reproduces on its own, in any order and on any number of workers.

use std::io::Write;

use rayon::prelude::*;

use crate::config::SimConfig;
use crate::engine::run_to_completion;
use crate::error::{EvacError, Result};
use crate::metrics::RunRecord;
use crate::plan::ExperimentPlan;

/// Header of the results CSV.
pub const CSV_HEADER: [&str; 10] = [
    "name",
    "pattern",
    "number_persons",
    "pct_bne",
    "replicate",
    "seed",
    "evac_ticks",
    "evac_seconds",
    "mean_uec",
    "stalled",
];

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for replicate `replicate` of grid cell `cell`.
pub fn derive_seed(master_seed: u64, cell: usize, replicate: usize) -> u64 {
    let h = splitmix64(master_seed);
    let h = splitmix64(h ^ (cell as u64).wrapping_mul(0xd6e8_feb8_6659_fd93));
    splitmix64(h ^ (replicate as u64).wrapping_mul(0xa076_1d64_78bd_642f))
}

/// One entry of an expanded plan.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub index: usize,
    pub cell: usize,
    pub replicate: usize,
    pub config: SimConfig,
}

/// Cross product of the sweeps times the replications, in output order.
pub fn expand(plan: &ExperimentPlan) -> Result<Vec<RunSpec>> {
    plan.validate()?;
    let cells = plan.cell_count();
    let mut runs = Vec::with_capacity(plan.run_count());
    for cell in 0..cells {
        let mut config = plan.base.clone();
        // mixed-radix decode, last sweep fastest
        let mut rem = cell;
        for sweep in plan.sweeps.iter().rev() {
            let k = sweep.values.len();
            config.set(sweep.param, &sweep.values[rem % k])?;
            rem /= k;
        }
        for replicate in 0..plan.replications {
            let mut config = config.clone();
            config.seed = derive_seed(plan.master_seed, cell, replicate);
            runs.push(RunSpec {
                index: runs.len(),
                cell,
                replicate,
                config,
            });
        }
    }
    Ok(runs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub name: String,
    pub replicate: usize,
    pub record: RunRecord,
}

impl ResultRow {
    pub fn fields(&self) -> [String; 10] {
        let r = &self.record;
        [
            self.name.clone(),
            r.config.moving_pattern.to_string(),
            r.config.number_persons.to_string(),
            r.config.pct_bne.to_string(),
            self.replicate.to_string(),
            r.seed.to_string(),
            r.evac_ticks.to_string(),
            r.evac_seconds.to_string(),
            r.mean_uec.to_string(),
            r.stalled.to_string(),
        ]
    }
}

/// Runs every expanded run on at most `parallelism` worker threads. Results
/// come back in expansion order. `progress` is called once per finished run
/// with the number finished so far.
pub fn execute<P>(plan: &ExperimentPlan, parallelism: usize, progress: P) -> Result<Vec<ResultRow>>
where
    P: Fn(usize, usize) + Sync,
{
    let runs = expand(plan)?;
    let total = runs.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let one = |spec: &RunSpec| -> Result<ResultRow> {
        let record = run_to_completion(&spec.config)?;
        let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        progress(n, total);
        Ok(ResultRow {
            name: plan.name.clone(),
            replicate: spec.replicate,
            record,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| EvacError::Io(format!("cannot start worker pool: {e}")))?;
    pool.install(|| runs.par_iter().map(one).collect())
}

/// Writes rows as CSV with a header and LF line endings.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| EvacError::Results(e.to_string()))
}
