//! Stream timing for a memory level: latency once, bandwidth per byte.

use crate::config::MemLevelConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OffchipTiming {
    pub cycles: f64,
    pub accesses: u64,
    pub bytes: u64,
}

/// Timing model for a stream of equally sized requests to one memory level.
pub trait StreamTiming: Send + Sync {
    fn stream_cycles(&self, accesses: u64, granularity: u64, level: &MemLevelConfig) -> f64;
}

/// Fully pipelined stream. An empty stream costs nothing.
#[derive(Clone, Copy, Debug, Default)]
pub struct PipelinedStream;

impl StreamTiming for PipelinedStream {
    fn stream_cycles(&self, accesses: u64, granularity: u64, level: &MemLevelConfig) -> f64 {
        stream_time(
            accesses,
            granularity,
            level.bandwidth_bytes_per_cycle,
            level.latency_cycles as f64,
        )
    }
}

fn stream_time(accesses: u64, granularity: u64, bandwidth: f64, latency: f64) -> f64 {
    if accesses == 0 {
        return 0.0;
    }
    (accesses * granularity) as f64 / bandwidth + latency
}

pub fn offchip_time(accesses: u64, granularity: u64, bandwidth: f64, latency: f64) -> f64 {
    stream_time(accesses, granularity, bandwidth, latency)
}

pub fn onchip_time(accesses: u64, granularity: u64, bandwidth: f64, latency: f64) -> f64 {
    stream_time(accesses, granularity, bandwidth, latency)
}

pub fn offchip_timing(
    model: &dyn StreamTiming,
    accesses: u64,
    granularity: u64,
    level: &MemLevelConfig,
) -> OffchipTiming {
    OffchipTiming {
        cycles: model.stream_cycles(accesses, granularity, level),
        accesses,
        bytes: accesses * granularity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn offchip_examples() {
        assert_eq!(offchip_time(100, 64, 32.0, 200.0), 400.0);
        assert_eq!(offchip_time(0, 64, 32.0, 200.0), 0.0);
        assert_eq!(offchip_time(1_843_200, 64, 256.0, 500.0), 461_300.0);
    }

    #[test]
    fn onchip_examples() {
        assert_eq!(onchip_time(10, 64, 640.0, 5.0), 6.0);
        assert_eq!(onchip_time(0, 64, 640.0, 5.0), 0.0);
        let slow = onchip_time(1000, 64, 64.0, 0.0);
        assert_eq!(onchip_time(1000, 64, 128.0, 0.0) * 2.0, slow);
    }

    #[test]
    fn timing_bytes_match_accesses() {
        let level = MemLevelConfig {
            capacity_bytes: 1 << 30,
            latency_cycles: 10,
            bandwidth_bytes_per_cycle: 32.0,
            granularity_bytes: 64,
        };
        let t = offchip_timing(&PipelinedStream, 7, 64, &level);
        assert_eq!(t.bytes, 7 * 64);
        assert_eq!(t.cycles, 7.0 * 64.0 / 32.0 + 10.0);
    }

    proptest! {
        #[test]
        fn monotone(n in 0u64..1_000_000, g in 1u64..512, b in 0.5f64..1e4, l in 0.0f64..1e3) {
            let t = offchip_time(n, g, b, l);
            prop_assert!(offchip_time(n + 1, g, b, l) >= t);
            prop_assert!(offchip_time(n, g + 1, b, l) >= t);
            prop_assert!(offchip_time(n, g, b * 2.0, l) <= t);
        }
    }
}
