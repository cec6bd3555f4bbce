//! Analytical matmul timing: a weight-stationary fold model for the systolic
//! array plus `D / B + L` for operand transfer.

use crate::config::{HardwareConfig, MatmulLayer};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatmulTiming {
    pub compute_cycles: u64,
    pub transfer_cycles: f64,
    pub total_cycles: f64,
    pub bytes_moved: u64,
    pub macs: u64,
}

/// Weight-stationary compute cycles on an `rows x cols` array.
///
/// Each fold maps a `rows x cols` weight tile onto the array: `rows` cycles
/// to preload it, then `M` input rows stream through with `rows + cols - 2`
/// cycles of skew.
pub fn matmul_compute_cycles(m: u64, n: u64, k: u64, rows: u64, cols: u64) -> u64 {
    let folds = k.div_ceil(rows) * n.div_ceil(cols);
    folds * (2 * rows + cols + m - 2)
}

/// Time to move `bytes` at `bandwidth` bytes/cycle after `latency` cycles.
pub fn tile_transfer_cycles(bytes: f64, bandwidth: f64, latency: f64) -> f64 {
    bytes / bandwidth + latency
}

pub fn matmul_layer_timing(
    layer: &MatmulLayer,
    hw: &HardwareConfig,
    batch_size: u64,
) -> MatmulTiming {
    let m = batch_size * layer.m;
    let (n, k) = (layer.n, layer.k);
    let bytes_moved = (m * k + n * k + m * n) * hw.dtype_bytes;
    let compute_cycles = matmul_compute_cycles(m, n, k, hw.sa_rows, hw.sa_cols);
    let transfer_cycles = tile_transfer_cycles(
        bytes_moved as f64,
        hw.offchip.bandwidth_bytes_per_cycle,
        hw.offchip.latency_cycles as f64,
    );
    let total_cycles = combine(
        hw.overlap_compute_memory,
        compute_cycles as f64,
        transfer_cycles,
    );
    MatmulTiming {
        compute_cycles,
        transfer_cycles,
        total_cycles,
        bytes_moved,
        macs: m * n * k,
    }
}

/// Overlapped compute and memory take the longer of the two; otherwise they add.
pub fn combine(overlap: bool, compute: f64, memory: f64) -> f64 {
    if overlap {
        compute.max(memory)
    } else {
        compute + memory
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::hardware;
    use proptest::prelude::*;

    #[test]
    fn fold_formula_examples() {
        assert_eq!(matmul_compute_cycles(1, 1, 1, 1, 1), 2);
        assert_eq!(matmul_compute_cycles(4, 4, 4, 4, 4), 14);
        assert_eq!(matmul_compute_cycles(256, 128, 128, 256, 256), 1022);
    }

    #[test]
    fn transfer_examples() {
        assert_eq!(tile_transfer_cycles(4096.0, 64.0, 100.0), 164.0);
        assert_eq!(tile_transfer_cycles(0.0, 64.0, 100.0), 100.0);
        assert_eq!(tile_transfer_cycles(512e6, 256.0, 500.0), 2_000_500.0);
    }

    #[test]
    fn combine_rules() {
        assert_eq!(combine(true, 1000.0, 400.0), 1000.0);
        assert_eq!(combine(false, 1000.0, 400.0), 1400.0);
    }

    #[test]
    fn unit_layer_moves_twelve_bytes() {
        let hw = hardware();
        let t = matmul_layer_timing(&MatmulLayer { m: 1, n: 1, k: 1 }, &hw, 1);
        assert_eq!(t.bytes_moved, 12);
        assert_eq!(t.macs, 1);
    }

    #[test]
    fn batch_folds_into_m() {
        let hw = hardware();
        let layer = MatmulLayer {
            m: 1,
            n: 128,
            k: 128,
        };
        let t = matmul_layer_timing(&layer, &hw, 256);
        assert_eq!(
            t.compute_cycles,
            matmul_compute_cycles(256, 128, 128, hw.sa_rows, hw.sa_cols)
        );
        assert_eq!(t.bytes_moved, (256 * 128 + 128 * 128 + 256 * 128) * 4);
    }

    proptest! {
        #[test]
        fn compute_monotone_in_dims(
            m in 1u64..300, n in 1u64..300, k in 1u64..300,
            r in 1u64..64, c in 1u64..64, dim in 0usize..3,
        ) {
            let base = matmul_compute_cycles(m, n, k, r, c);
            let grown = match dim {
                0 => matmul_compute_cycles(m + 1, n, k, r, c),
                1 => matmul_compute_cycles(m, n + 1, k, r, c),
                _ => matmul_compute_cycles(m, n, k + 1, r, c),
            };
            prop_assert!(grown >= base);
        }

        #[test]
        fn two_equal_folds_double(m in 1u64..500, n in 1u64..200, k in 1u64..200, c in 1u64..64) {
            prop_assert_eq!(
                matmul_compute_cycles(m, n, 2 * k, k, c),
                2 * matmul_compute_cycles(m, n, k, k, c)
            );
        }

        #[test]
        fn total_non_increasing_in_bandwidth(b in 1.0f64..1e4, scale in 1.0f64..8.0, batch in 1u64..64) {
            let mut hw = hardware();
            let layer = MatmulLayer { m: 3, n: 300, k: 200 };
            hw.offchip.bandwidth_bytes_per_cycle = b;
            let slow = matmul_layer_timing(&layer, &hw, batch);
            hw.offchip.bandwidth_bytes_per_cycle = b * scale;
            let fast = matmul_layer_timing(&layer, &hw, batch);
            prop_assert!(fast.transfer_cycles <= slow.transfer_cycles);
            prop_assert!(fast.total_cycles <= slow.total_cycles);
            prop_assert!(slow.total_cycles >= slow.compute_cycles as f64);
            prop_assert!(slow.total_cycles >= slow.transfer_cycles);
        }
    }
}
