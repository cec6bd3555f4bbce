//! Simulation driver: walks batches and layers, times matmuls analytically,
//! replays embedding requests through the on-chip policy, and assembles the
//! report.

use std::fmt::Write as _;
use std::hash::Hasher;
use std::io;

use fnv::FnvHasher;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{EmbeddingLayer, HardwareConfig, Layer, PolicyKind, WorkloadConfig};
use crate::error::{ConfigError, SimError};
use crate::matrix_model::{combine, matmul_layer_timing};
use crate::offchip_mem::{PipelinedStream, StreamTiming};
use crate::onchip_mem::{classify, AccessCounts, HotVectorProfile, PinSet, PolicyState};
use crate::trace::{
    expand_trace_from, requests_per_vector, required_indices, translate_lookups, FullTrace,
    IndexTrace, Lookup, TablePlacement,
};
use crate::vector_model::{embedding_compute_cycles, embedding_vector_ops};

/// Energy per counted event, in picojoules.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyTable {
    #[serde(default)]
    pub pj_per_onchip_access: f64,
    #[serde(default)]
    pub pj_per_offchip_access: f64,
    #[serde(default)]
    pub pj_per_mac: f64,
    #[serde(default)]
    pub pj_per_vector_op: f64,
}

impl EnergyTable {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (key, value) in [
            ("pj_per_onchip_access", self.pj_per_onchip_access),
            ("pj_per_offchip_access", self.pj_per_offchip_access),
            ("pj_per_mac", self.pj_per_mac),
            ("pj_per_vector_op", self.pj_per_vector_op),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ConfigError::invalid(
                    key,
                    "must be a non-negative finite number",
                ));
            }
        }
        Ok(())
    }
}

pub fn parse_energy_table(text: &str) -> Result<EnergyTable, ConfigError> {
    let table: EnergyTable = toml::from_str(text).map_err(ConfigError::parse)?;
    table.validate()?;
    Ok(table)
}

/// Event counts that energy is charged against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub onchip_accesses: u64,
    pub offchip_accesses: u64,
    pub macs: u64,
    pub vector_ops: u64,
}

pub fn estimate_energy(counts: &OpCounts, table: &EnergyTable) -> f64 {
    counts.onchip_accesses as f64 * table.pj_per_onchip_access
        + counts.offchip_accesses as f64 * table.pj_per_offchip_access
        + counts.macs as f64 * table.pj_per_mac
        + counts.vector_ops as f64 * table.pj_per_vector_op
}

/// `hits / (hits + misses)`, absent when there were no accesses.
pub fn access_ratio(hits: u64, misses: u64) -> Option<f64> {
    let total = hits + misses;
    (total > 0).then(|| hits as f64 / total as f64)
}

/// Cycle and event totals for a batch or the whole run.
///
/// `compute_cycles`, `onchip_cycles` and `offchip_cycles` follow the critical
/// core of each embedding layer. Matmul operand transfers count towards
/// `offchip_cycles` and `matmul_offchip_requests` but not `offchip_accesses`,
/// which only covers the embedding request stream.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub compute_cycles: f64,
    pub onchip_cycles: f64,
    pub offchip_cycles: f64,
    pub total_cycles: f64,
    pub embedding_requests: u64,
    pub onchip_hits: u64,
    pub onchip_misses: u64,
    pub offchip_accesses: u64,
    pub onchip_accesses: u64,
    pub onchip_access_ratio: Option<f64>,
    pub macs: u64,
    pub vector_ops: u64,
    pub matmul_bytes: u64,
    pub matmul_offchip_requests: u64,
}

impl Totals {
    fn accumulate(&mut self, other: &Totals) {
        self.compute_cycles += other.compute_cycles;
        self.onchip_cycles += other.onchip_cycles;
        self.offchip_cycles += other.offchip_cycles;
        self.total_cycles += other.total_cycles;
        self.embedding_requests += other.embedding_requests;
        self.onchip_hits += other.onchip_hits;
        self.onchip_misses += other.onchip_misses;
        self.offchip_accesses += other.offchip_accesses;
        self.onchip_accesses += other.onchip_accesses;
        self.macs += other.macs;
        self.vector_ops += other.vector_ops;
        self.matmul_bytes += other.matmul_bytes;
        self.matmul_offchip_requests += other.matmul_offchip_requests;
    }

    fn finish(&mut self) {
        self.onchip_access_ratio = access_ratio(self.onchip_hits, self.onchip_misses);
    }

    pub fn op_counts(&self) -> OpCounts {
        OpCounts {
            onchip_accesses: self.onchip_accesses,
            offchip_accesses: self.offchip_accesses + self.matmul_offchip_requests,
            macs: self.macs,
            vector_ops: self.vector_ops,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub batch_id: u64,
    #[serde(flatten)]
    pub totals: Totals,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config_fingerprint: String,
    pub policy: PolicyKind,
    pub batch_size: u64,
    pub num_batches: u64,
    pub num_cores: u32,
    /// Vectors pinned by profiling, for PINNING runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinned_vectors: Option<u64>,
    pub wall_time_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_pj: Option<f64>,
    pub aggregate: Totals,
    pub per_batch: Vec<BatchReport>,
}

pub const CSV_HEADER: [&str; 9] = [
    "batch",
    "compute_cycles",
    "onchip_cycles",
    "offchip_cycles",
    "total_cycles",
    "hits",
    "misses",
    "offchip_accesses",
    "ratio",
];

impl SimReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(CSV_HEADER)?;
        for b in &self.per_batch {
            let t = &b.totals;
            writer.write_record([
                b.batch_id.to_string(),
                t.compute_cycles.to_string(),
                t.onchip_cycles.to_string(),
                t.offchip_cycles.to_string(),
                t.total_cycles.to_string(),
                t.onchip_hits.to_string(),
                t.onchip_misses.to_string(),
                t.offchip_accesses.to_string(),
                t.onchip_access_ratio
                    .map(|r| r.to_string())
                    .unwrap_or_default(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let a = &self.aggregate;
        let mut s = String::new();
        let _ = writeln!(s, "policy            {}", self.policy);
        let _ = writeln!(
            s,
            "batches           {} x {}",
            self.num_batches, self.batch_size
        );
        let _ = writeln!(s, "total cycles      {:.1}", a.total_cycles);
        let _ = writeln!(s, "wall time         {:.6e} s", self.wall_time_seconds);
        let _ = writeln!(s, "embedding reqs    {}", a.embedding_requests);
        let _ = writeln!(s, "on-chip hits      {}", a.onchip_hits);
        let _ = writeln!(s, "off-chip accesses {}", a.offchip_accesses);
        match a.onchip_access_ratio {
            Some(r) => {
                let _ = writeln!(s, "on-chip ratio     {r:.4}");
            }
            None => {
                let _ = writeln!(s, "on-chip ratio     n/a");
            }
        }
        if let Some(e) = self.energy_pj {
            let _ = writeln!(s, "energy            {e:.3e} pJ");
        }
        s
    }
}

struct EmbeddingPlan {
    index: usize,
    layer: EmbeddingLayer,
    placement: TablePlacement,
    full: FullTrace,
}

/// Per-core result of one embedding layer in one batch.
#[derive(Default)]
struct CoreTime {
    compute: f64,
    onchip: f64,
    offchip: f64,
    total: f64,
}

/// Fingerprint over every input that influences the report.
pub fn fingerprint(
    hw: &HardwareConfig,
    wl: &WorkloadConfig,
    trace: &IndexTrace,
    energy: Option<&EnergyTable>,
) -> String {
    let mut h = FnvHasher::default();
    h.write(hw.to_toml().as_bytes());
    h.write(wl.to_toml().as_bytes());
    h.write(&trace.rows.to_le_bytes());
    h.write(&trace.seed.unwrap_or(0).to_le_bytes());
    h.write(&(trace.indices.len() as u64).to_le_bytes());
    for i in &trace.indices {
        h.write(&i.to_le_bytes());
    }
    if let Some(e) = energy {
        h.write(
            toml::to_string(e)
                .expect("energy table serializes")
                .as_bytes(),
        );
    }
    format!("{:016x}", h.finish())
}

/// Runs the full simulation with the default pipelined memory timing.
pub fn run_simulation(
    hw: &HardwareConfig,
    wl: &WorkloadConfig,
    trace: &IndexTrace,
    energy: Option<&EnergyTable>,
) -> Result<SimReport, SimError> {
    run_simulation_with(hw, wl, trace, energy, &PipelinedStream)
}

pub fn run_simulation_with(
    hw: &HardwareConfig,
    wl: &WorkloadConfig,
    trace: &IndexTrace,
    energy: Option<&EnergyTable>,
    timing: &dyn StreamTiming,
) -> Result<SimReport, SimError> {
    hw.validate()?;
    wl.validate()?;
    if let Some(e) = energy {
        e.validate()?;
    }
    let seed = trace.seed.unwrap_or(0);
    let granularity = hw.local_mem.granularity_bytes;

    // Each embedding layer consumes the next slice of the source trace.
    let mut plans = Vec::new();
    let mut placement = TablePlacement::default();
    let mut consumed = 0usize;
    for (index, layer) in wl.layers.iter().enumerate() {
        let Layer::Embedding(layer) = layer else {
            continue;
        };
        let context = || format!("layer {index}");
        let full = expand_trace_from(trace, consumed, layer, wl.batch_size, wl.num_batches, seed)
            .map_err(|source| SimError::Trace {
            context: context(),
            source,
        })?;
        consumed += required_indices(layer, wl.batch_size, wl.num_batches) as usize;
        let next = placement
            .after(layer, hw.dtype_bytes)
            .map_err(|source| SimError::Trace {
                context: context(),
                source,
            })?;
        plans.push(EmbeddingPlan {
            index,
            layer: *layer,
            placement,
            full,
        });
        placement = next;
    }

    let pins_for = |kind: PolicyKind, capacity: u64| -> Option<(PinSet, u64)> {
        (kind == PolicyKind::Pinning).then(|| {
            let mut profile = HotVectorProfile::default();
            for p in &plans {
                profile.record(
                    p.full.lookups(),
                    p.placement.first_table,
                    p.layer.vector_bytes(hw.dtype_bytes),
                );
            }
            let pins = profile.select(capacity).pins;
            let n = pins.len() as u64;
            (pins, n)
        })
    };
    let local_pins = pins_for(hw.onchip_policy.kind, hw.local_mem.capacity_bytes);
    let pinned_vectors = local_pins.as_ref().map(|(_, n)| *n);
    let policy_err = |source| SimError::Policy {
        context: "on-chip policy".into(),
        source,
    };
    let mut core_states = (0..hw.num_cores)
        .map(|_| {
            PolicyState::new(
                &hw.onchip_policy,
                &hw.local_mem,
                local_pins.as_ref().map(|p| p.0.clone()),
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(policy_err)?;
    let mut global_state = match (&hw.global_mem, &hw.global_policy) {
        (Some(level), Some(policy)) => {
            let pins = pins_for(policy.kind, level.capacity_bytes).map(|p| p.0);
            Some(
                PolicyState::new(policy, level, pins).map_err(|source| SimError::Policy {
                    context: "global policy".into(),
                    source,
                })?,
            )
        }
        _ => None,
    };

    let mut per_batch = Vec::with_capacity(wl.num_batches as usize);
    let mut aggregate = Totals::default();
    for batch in 0..wl.num_batches {
        if batch > 0 && wl.reset_state_per_batch {
            core_states.iter_mut().for_each(PolicyState::reset);
            if let Some(g) = global_state.as_mut() {
                g.reset();
            }
        }
        let mut totals = Totals::default();
        let mut plan_iter = plans.iter();
        for layer in &wl.layers {
            match layer {
                Layer::Matmul(mm) => {
                    let t = matmul_layer_timing(mm, hw, wl.batch_size);
                    totals.compute_cycles += t.compute_cycles as f64;
                    totals.offchip_cycles += t.transfer_cycles;
                    totals.total_cycles += t.total_cycles;
                    totals.macs += t.macs;
                    totals.matmul_bytes += t.bytes_moved;
                    totals.matmul_offchip_requests +=
                        t.bytes_moved.div_ceil(hw.offchip.granularity_bytes);
                }
                Layer::Embedding(_) => {
                    let plan = plan_iter.next().expect("one plan per embedding layer");
                    simulate_embedding_batch(
                        hw,
                        plan,
                        batch,
                        &mut core_states,
                        global_state.as_mut(),
                        timing,
                        granularity,
                        &mut totals,
                    )?;
                }
            }
        }
        totals.finish();
        aggregate.accumulate(&totals);
        per_batch.push(BatchReport {
            batch_id: batch,
            totals,
        });
    }
    aggregate.finish();

    let wall_time_seconds = aggregate.total_cycles / (hw.clock_ghz * 1e9);
    let energy_pj = energy.map(|table| estimate_energy(&aggregate.op_counts(), table));
    Ok(SimReport {
        config_fingerprint: fingerprint(hw, wl, trace, energy),
        policy: hw.onchip_policy.kind,
        batch_size: wl.batch_size,
        num_batches: wl.num_batches,
        num_cores: hw.num_cores,
        pinned_vectors,
        wall_time_seconds,
        energy_pj,
        aggregate,
        per_batch,
    })
}

#[allow(clippy::too_many_arguments)]
fn simulate_embedding_batch(
    hw: &HardwareConfig,
    plan: &EmbeddingPlan,
    batch: u64,
    core_states: &mut [PolicyState],
    mut global_state: Option<&mut PolicyState>,
    timing: &dyn StreamTiming,
    granularity: u64,
    totals: &mut Totals,
) -> Result<(), SimError> {
    let cores = core_states.len();
    let layer = &plan.layer;
    let mut per_core: Vec<Vec<Lookup>> = vec![Vec::new(); cores];
    for lookup in plan.full.batch(batch) {
        per_core[lookup.sample as usize % cores].push(lookup);
    }
    let per_vector = requests_per_vector(layer, hw.dtype_bytes, granularity);

    let classified = core_states
        .par_iter_mut()
        .zip(per_core.par_iter())
        .map(|(state, lookups)| {
            let accesses = translate_lookups(
                lookups.iter().copied(),
                layer,
                hw.dtype_bytes,
                granularity,
                plan.placement,
            )?;
            let expected = lookups.len() as u64 * per_vector;
            Ok((expected, classify(&accesses, state)))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|source| SimError::Trace {
            context: format!("batch {batch}, layer {}", plan.index),
            source,
        })?;

    let mut critical: Option<CoreTime> = None;
    for (core, (expected, local)) in classified.into_iter().enumerate() {
        if local.counts.total() != expected || local.offchip_sequence.len() as u64 != local.misses()
        {
            return Err(SimError::Invariant(format!(
                "batch {batch}, layer {}, core {core}: {} hits + {} misses for {expected} requests",
                plan.index,
                local.hits(),
                local.misses()
            )));
        }
        let samples = (per_core[core].len() as u64)
            / (u64::from(layer.num_tables) * layer.lookups_per_sample);
        let ops = embedding_vector_ops(layer, samples);
        let compute = embedding_compute_cycles(layer, samples, hw.vector_lanes) as f64;
        let mut onchip =
            timing.stream_cycles(local.counts.onchip_accesses, granularity, &hw.local_mem);

        let mut counts = AccessCounts {
            hits: local.hits(),
            ..AccessCounts::default()
        };
        counts.onchip_accesses = local.counts.onchip_accesses;
        let offchip_accesses = match (global_state.as_deref_mut(), &hw.global_mem) {
            (Some(global), Some(level)) => {
                let shared = classify(&local.offchip_sequence, global);
                onchip += timing.stream_cycles(shared.counts.onchip_accesses, granularity, level);
                counts.hits += shared.hits();
                counts.onchip_accesses += shared.counts.onchip_accesses;
                shared.misses()
            }
            _ => local.misses(),
        };
        counts.misses = offchip_accesses;
        let offchip = timing.stream_cycles(offchip_accesses, granularity, &hw.offchip);
        let total = combine(hw.overlap_compute_memory, compute, onchip + offchip);

        totals.embedding_requests += expected;
        totals.onchip_hits += counts.hits;
        totals.onchip_misses += counts.misses;
        totals.offchip_accesses += offchip_accesses;
        totals.onchip_accesses += counts.onchip_accesses;
        totals.vector_ops += ops.total();

        if critical.as_ref().is_none_or(|c| total > c.total) {
            critical = Some(CoreTime {
                compute,
                onchip,
                offchip,
                total,
            });
        }
    }
    let critical = critical.unwrap_or_default();
    totals.compute_cycles += critical.compute;
    totals.onchip_cycles += critical.onchip;
    totals.offchip_cycles += critical.offchip;
    totals.total_cycles += critical.total;
    Ok(())
}
