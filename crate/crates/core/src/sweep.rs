//! Batch-size sweeps: the same run repeated over a range of batch sizes.

use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{HardwareConfig, WorkloadConfig};
use crate::engine::{run_simulation, EnergyTable, SimReport};
use crate::error::SimError;
use crate::trace::IndexTrace;

/// `batch=<start>:<end>:<step>`, end inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchSweep {
    pub start: u64,
    pub end: u64,
    pub step: u64,
}

impl BatchSweep {
    pub fn values(&self) -> impl Iterator<Item = u64> {
        (self.start..=self.end).step_by(self.step as usize)
    }
}

impl FromStr for BatchSweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let range = s
            .strip_prefix("batch=")
            .ok_or_else(|| format!("sweep must look like batch=START:END:STEP, got `{s}`"))?;
        let parts: Vec<&str> = range.split(':').collect();
        let [start, end, step] = parts.as_slice() else {
            return Err(format!("sweep range needs START:END:STEP, got `{range}`"));
        };
        let num = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| format!("`{v}` is not a non-negative integer"))
        };
        let sweep = BatchSweep {
            start: num(start)?,
            end: num(end)?,
            step: num(step)?,
        };
        if sweep.start == 0 || sweep.step == 0 || sweep.end < sweep.start {
            return Err(format!(
                "sweep needs 0 < START <= END and STEP > 0, got `{range}`"
            ));
        }
        Ok(sweep)
    }
}

pub const SWEEP_CSV_HEADER: [&str; 8] = [
    "batch_size",
    "total_cycles",
    "wall_time_seconds",
    "hits",
    "misses",
    "offchip_accesses",
    "ratio",
    "energy_pj",
];

/// Runs every sweep point on at most `jobs` threads. Results come back in
/// sweep order.
pub fn run_batch_sweep(
    hw: &HardwareConfig,
    wl: &WorkloadConfig,
    trace: &IndexTrace,
    energy: Option<&EnergyTable>,
    sweep: BatchSweep,
    jobs: usize,
) -> Result<Vec<(u64, SimReport)>, SimError> {
    let points: Vec<u64> = sweep.values().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SimError::Invariant(format!("thread pool: {e}")))?;
    pool.install(|| {
        points
            .par_iter()
            .map(|&batch_size| {
                let point = WorkloadConfig {
                    batch_size,
                    ..wl.clone()
                };
                run_simulation(hw, &point, trace, energy).map(|r| (batch_size, r))
            })
            .collect()
    })
}

pub fn write_sweep_csv<W: std::io::Write>(
    rows: &[(u64, SimReport)],
    out: W,
) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(SWEEP_CSV_HEADER)?;
    for (batch_size, r) in rows {
        let a = &r.aggregate;
        writer.write_record([
            batch_size.to_string(),
            a.total_cycles.to_string(),
            r.wall_time_seconds.to_string(),
            a.onchip_hits.to_string(),
            a.onchip_misses.to_string(),
            a.offchip_accesses.to_string(),
            a.onchip_access_ratio
                .map(|v| v.to_string())
                .unwrap_or_default(),
            r.energy_pj.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
