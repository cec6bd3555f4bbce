use crate::config::{HardwareConfig, MemLevelConfig, PolicyConfig};

/// Small single-core machine with a 64 KiB 8-way LRU local memory.
pub(crate) fn hardware() -> HardwareConfig {
    HardwareConfig {
        clock_ghz: 1.0,
        num_cores: 1,
        sa_rows: 128,
        sa_cols: 128,
        vector_lanes: 64,
        dtype_bytes: 4,
        overlap_compute_memory: true,
        local_mem: MemLevelConfig {
            capacity_bytes: 64 << 10,
            latency_cycles: 2,
            bandwidth_bytes_per_cycle: 256.0,
            granularity_bytes: 64,
        },
        global_mem: None,
        global_policy: None,
        offchip: MemLevelConfig {
            capacity_bytes: 1 << 34,
            latency_cycles: 300,
            bandwidth_bytes_per_cycle: 32.0,
            granularity_bytes: 64,
        },
        onchip_policy: PolicyConfig::lru(8, 64),
    }
}
