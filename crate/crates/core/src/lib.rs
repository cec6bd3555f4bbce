//! Trace-driven NPU performance model.
//!
//! Matmul layers are timed analytically (systolic-array folds plus operand
//! transfer). Embedding layers are expanded from an index trace into byte
//! addresses and replayed through the on-chip management policy, and the
//! resulting on-chip and off-chip request streams are timed per core.

pub mod config;
pub mod engine;
pub mod error;
pub mod matrix_model;
pub mod offchip_mem;
pub mod onchip_mem;
pub mod sweep;
pub mod trace;
pub mod vector_model;

#[cfg(test)]
mod test_support;

pub use config::{
    parse_hardware_config, parse_workload_config, EmbeddingLayer, HardwareConfig, Layer,
    MatmulLayer, MemLevelConfig, PolicyConfig, PolicyKind, Reduce, WorkloadConfig,
};
pub use engine::{parse_energy_table, run_simulation, EnergyTable, SimReport};
pub use error::{ConfigError, PolicyError, SimError, TraceError};
pub use trace::{gen_zipfian_trace, load_trace, IndexTrace};
