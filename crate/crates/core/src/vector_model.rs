//! Vector-unit cycles for embedding reductions.

use crate::config::{EmbeddingLayer, Reduce};

/// Vector-wide operations issued for an embedding layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VectorOpCount {
    pub elementwise_ops: u64,
    pub writebacks: u64,
}

impl VectorOpCount {
    pub fn total(&self) -> u64 {
        self.elementwise_ops + self.writebacks
    }
}

/// Ops for `samples` samples: per (sample, table) `L - 1` add/max ops, one
/// more for the MEAN scale, and one writeback of the reduced vector.
pub fn embedding_vector_ops(layer: &EmbeddingLayer, samples: u64) -> VectorOpCount {
    let bags = samples * u64::from(layer.num_tables);
    let per_bag = layer.lookups_per_sample - 1 + u64::from(layer.reduce == Reduce::Mean);
    VectorOpCount {
        elementwise_ops: bags * per_bag,
        writebacks: bags,
    }
}

/// Each vector op covers `ceil(dim / lanes)` cycles.
pub fn embedding_compute_cycles(layer: &EmbeddingLayer, samples: u64, lanes: u64) -> u64 {
    embedding_vector_ops(layer, samples).total() * layer.dim.div_ceil(lanes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(tables: u32, dim: u64, lookups: u64, reduce: Reduce) -> EmbeddingLayer {
        EmbeddingLayer {
            num_tables: tables,
            rows_per_table: 1000,
            dim,
            lookups_per_sample: lookups,
            reduce,
        }
    }

    #[test]
    fn two_lookups_sum() {
        assert_eq!(
            embedding_compute_cycles(&layer(1, 128, 2, Reduce::Sum), 1, 64),
            4
        );
    }

    #[test]
    fn dlrm_scale() {
        assert_eq!(
            embedding_compute_cycles(&layer(60, 128, 120, Reduce::Sum), 32, 128),
            230_400
        );
    }

    #[test]
    fn single_lookup_is_writeback_only() {
        let l = layer(1, 300, 1, Reduce::Sum);
        assert_eq!(
            embedding_vector_ops(&l, 1),
            VectorOpCount {
                elementwise_ops: 0,
                writebacks: 1
            }
        );
        assert_eq!(embedding_compute_cycles(&l, 1, 128), 3);
    }

    #[test]
    fn mean_adds_one_op_max_matches_sum() {
        let sum = embedding_compute_cycles(&layer(3, 128, 5, Reduce::Sum), 4, 32);
        let max = embedding_compute_cycles(&layer(3, 128, 5, Reduce::Max), 4, 32);
        let mean = embedding_compute_cycles(&layer(3, 128, 5, Reduce::Mean), 4, 32);
        assert_eq!(sum, max);
        assert_eq!(mean, sum + 4 * 3 * 4);
    }

    #[test]
    fn linear_in_batch_and_tables_and_halves_with_dim() {
        let base = embedding_compute_cycles(&layer(2, 256, 7, Reduce::Sum), 3, 64);
        assert_eq!(
            embedding_compute_cycles(&layer(2, 256, 7, Reduce::Sum), 6, 64),
            2 * base
        );
        assert_eq!(
            embedding_compute_cycles(&layer(4, 256, 7, Reduce::Sum), 3, 64),
            2 * base
        );
        assert_eq!(
            embedding_compute_cycles(&layer(2, 128, 7, Reduce::Sum), 3, 64) * 2,
            base
        );
    }
}
