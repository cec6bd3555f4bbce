//! Embedding-vector index traces: synthesis, file I/O, expansion to a full
//! per-table trace, and translation to byte-address requests.
//!
//! Text format: an optional header line `rows=<N>`, then one decimal index
//! per line. Binary format: magic `EONT`, row count as `u64` LE, index count
//! as `u64` LE, then each index as `u32` LE.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::config::EmbeddingLayer;
use crate::error::TraceError;

pub const BINARY_MAGIC: &[u8; 4] = b"EONT";
const BINARY_HEADER_LEN: usize = 4 + 8 + 8;

/// A sequence of vector indices into a single table of `rows` rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexTrace {
    pub indices: Vec<u32>,
    pub rows: u64,
    pub seed: Option<u64>,
}

impl IndexTrace {
    pub fn new(indices: Vec<u32>, rows: u64) -> Result<Self, TraceError> {
        if let Some((pos, &bad)) = indices
            .iter()
            .enumerate()
            .find(|(_, &i)| u64::from(i) >= rows)
        {
            return Err(TraceError::OutOfRange {
                line: pos + 1,
                index: bad.into(),
                rows,
            });
        }
        Ok(Self {
            indices,
            rows,
            seed: None,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut buf = String::with_capacity(self.indices.len() * 8 + 16);
        buf.push_str(&format!("rows={}\n", self.rows));
        for i in &self.indices {
            buf.push_str(&i.to_string());
            buf.push('\n');
        }
        out.write_all(buf.as_bytes())
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut buf = Vec::with_capacity(BINARY_HEADER_LEN + self.indices.len() * 4);
        buf.extend_from_slice(BINARY_MAGIC);
        buf.extend_from_slice(&self.rows.to_le_bytes());
        buf.extend_from_slice(&(self.indices.len() as u64).to_le_bytes());
        for i in &self.indices {
            buf.extend_from_slice(&i.to_le_bytes());
        }
        out.write_all(&buf)
    }

    /// Parses either file format. `rows` is required for headerless text
    /// traces and must agree with the header when one is present.
    pub fn from_bytes(bytes: &[u8], rows: Option<u64>) -> Result<Self, TraceError> {
        if bytes.starts_with(BINARY_MAGIC) {
            Self::from_binary(bytes, rows)
        } else {
            let text = std::str::from_utf8(bytes).map_err(|e| TraceError::Parse {
                line: 0,
                reason: format!("not UTF-8: {e}"),
            })?;
            Self::from_text(text, rows)
        }
    }

    fn from_text(text: &str, rows: Option<u64>) -> Result<Self, TraceError> {
        let mut declared = rows;
        let mut indices = Vec::new();
        let mut seen_data = false;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let entry = raw.trim();
            if entry.is_empty() {
                continue;
            }
            if let Some(value) = entry.strip_prefix("rows=") {
                if seen_data {
                    return Err(TraceError::Parse {
                        line,
                        reason: "header after indices".into(),
                    });
                }
                let header: u64 = value.trim().parse().map_err(|_| TraceError::Parse {
                    line,
                    reason: format!("bad row count `{value}`"),
                })?;
                if header == 0 {
                    return Err(TraceError::Parse {
                        line,
                        reason: "row count must be positive".into(),
                    });
                }
                if let Some(expected) = rows {
                    if expected != header {
                        return Err(TraceError::RowsMismatch {
                            trace: header,
                            layer: expected,
                        });
                    }
                }
                declared = Some(header);
                continue;
            }
            seen_data = true;
            let index: u32 = entry.parse().map_err(|_| TraceError::Parse {
                line,
                reason: format!("`{entry}` is not a non-negative 32-bit index"),
            })?;
            if let Some(rows) = declared {
                if u64::from(index) >= rows {
                    return Err(TraceError::OutOfRange {
                        line,
                        index: index.into(),
                        rows,
                    });
                }
            }
            indices.push(index);
        }
        let rows =
            declared.unwrap_or_else(|| indices.iter().max().map_or(1, |&m| u64::from(m) + 1));
        Ok(Self {
            indices,
            rows,
            seed: None,
        })
    }

    fn from_binary(bytes: &[u8], rows: Option<u64>) -> Result<Self, TraceError> {
        if bytes.len() < BINARY_HEADER_LEN {
            return Err(TraceError::Binary("truncated header".into()));
        }
        let header_rows = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
        let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let body = &bytes[BINARY_HEADER_LEN..];
        if header_rows == 0 {
            return Err(TraceError::Binary("row count must be positive".into()));
        }
        if let Some(expected) = rows {
            if expected != header_rows {
                return Err(TraceError::RowsMismatch {
                    trace: header_rows,
                    layer: expected,
                });
            }
        }
        if body.len() as u64 != count.saturating_mul(4) {
            return Err(TraceError::Binary(format!(
                "header declares {count} indices but body holds {} bytes",
                body.len()
            )));
        }
        let mut indices = Vec::with_capacity(count as usize);
        for (n, chunk) in body.chunks_exact(4).enumerate() {
            let index = u32::from_le_bytes(chunk.try_into().unwrap());
            if u64::from(index) >= header_rows {
                // Binary traces report the 1-based record number as the line.
                return Err(TraceError::OutOfRange {
                    line: n + 1,
                    index: index.into(),
                    rows: header_rows,
                });
            }
            indices.push(index);
        }
        Ok(Self {
            indices,
            rows: header_rows,
            seed: None,
        })
    }
}

/// Loads a trace file in either format, preserving file order.
pub fn load_trace(path: impl AsRef<Path>, rows: Option<u64>) -> Result<IndexTrace, TraceError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| TraceError::Io {
        path: path.to_owned(),
        source,
    })?;
    IndexTrace::from_bytes(&bytes, rows)
}

/// Draws `count` i.i.d. Zipf(`s`) ranks over `1..=rows`; rank `r` becomes index `r - 1`.
pub fn gen_zipfian_trace(
    rows: u64,
    count: u64,
    s: f64,
    seed: u64,
) -> Result<IndexTrace, TraceError> {
    if count == 0 {
        return Err(TraceError::Empty);
    }
    if rows == 0 || rows > u64::from(u32::MAX) + 1 {
        return Err(TraceError::Zipf(format!(
            "rows must be in 1..=2^32, got {rows}"
        )));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(TraceError::Zipf(format!(
            "exponent must be finite and non-negative, got {s}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices: Vec<u32> = if s == 0.0 {
        (0..count).map(|_| rng.gen_range(0..rows) as u32).collect()
    } else {
        let zipf = Zipf::new(rows, s).map_err(|e| TraceError::Zipf(e.to_string()))?;
        (0..count)
            .map(|_| (zipf.sample(&mut rng) as u64 - 1) as u32)
            .collect()
    };
    Ok(IndexTrace {
        indices,
        rows,
        seed: Some(seed),
    })
}

/// Per-table affine bijection `i -> (a * i + b) mod rows`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TableRemap {
    pub multiplier: u64,
    pub offset: u64,
    pub rows: u64,
}

impl TableRemap {
    pub fn for_table(seed: u64, table: u32, rows: u64) -> Self {
        if table == 0 {
            return Self {
                multiplier: 1,
                offset: 0,
                rows,
            };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(table));
        let (h_mul, h_off): (u64, u64) = (rng.gen(), rng.gen());
        let mut multiplier = (h_mul % rows) | 1;
        while gcd(multiplier, rows) != 1 {
            multiplier += 2;
        }
        Self {
            multiplier,
            offset: h_off % rows,
            rows,
        }
    }

    pub fn apply(&self, index: u32) -> u32 {
        let mapped = (u128::from(self.multiplier) * u128::from(index) + u128::from(self.offset))
            % u128::from(self.rows);
        mapped as u32
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// One embedding lookup in the expanded trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Lookup {
    pub batch: u32,
    pub sample: u32,
    pub table: u32,
    pub index: u32,
}

/// Lookups for every (batch, sample, table) in that nesting order, with
/// exactly `lookups_per_sample` lookups per group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullTrace {
    pub num_batches: u64,
    pub batch_size: u64,
    pub num_tables: u32,
    pub lookups_per_sample: u64,
    indices: Vec<u32>,
}

impl FullTrace {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn per_sample(&self) -> usize {
        self.num_tables as usize * self.lookups_per_sample as usize
    }

    fn per_batch(&self) -> usize {
        self.per_sample() * self.batch_size as usize
    }

    fn lookups_in(&self, start: usize, end: usize) -> impl Iterator<Item = Lookup> + '_ {
        let per_sample = self.per_sample();
        let per_batch = self.per_batch();
        let lookups = self.lookups_per_sample as usize;
        self.indices[start..end]
            .iter()
            .enumerate()
            .map(move |(n, &index)| {
                let pos = start + n;
                Lookup {
                    batch: (pos / per_batch) as u32,
                    sample: ((pos % per_batch) / per_sample) as u32,
                    table: ((pos % per_sample) / lookups) as u32,
                    index,
                }
            })
    }

    pub fn lookups(&self) -> impl Iterator<Item = Lookup> + '_ {
        self.lookups_in(0, self.indices.len())
    }

    pub fn batch(&self, batch: u64) -> impl Iterator<Item = Lookup> + '_ {
        let per_batch = self.per_batch();
        let start = (batch as usize * per_batch).min(self.indices.len());
        let end = (start + per_batch).min(self.indices.len());
        self.lookups_in(start, end)
    }

    /// Indices looked up in `table`, in trace order.
    pub fn table_indices(&self, table: u32) -> impl Iterator<Item = u32> + '_ {
        self.lookups()
            .filter(move |l| l.table == table)
            .map(|l| l.index)
    }
}

/// Number of source indices `expand_trace` consumes.
pub fn required_indices(layer: &EmbeddingLayer, batch_size: u64, num_batches: u64) -> u64 {
    batch_size
        .saturating_mul(num_batches)
        .saturating_mul(layer.lookups_per_sample)
}

/// Expands a single-table index trace to all tables of `layer`, starting at
/// `src.indices[skip]`. Table `t` sees the source indices through its own
/// [`TableRemap`], so every table has the source's frequency histogram.
pub fn expand_trace_from(
    src: &IndexTrace,
    skip: usize,
    layer: &EmbeddingLayer,
    batch_size: u64,
    num_batches: u64,
    seed: u64,
) -> Result<FullTrace, TraceError> {
    if src.rows != layer.rows_per_table {
        return Err(TraceError::RowsMismatch {
            trace: src.rows,
            layer: layer.rows_per_table,
        });
    }
    let required = required_indices(layer, batch_size, num_batches);
    let available = src.indices.len().saturating_sub(skip) as u64;
    if available < required {
        return Err(TraceError::Length {
            required,
            available,
        });
    }
    let remaps: Vec<TableRemap> = (0..layer.num_tables)
        .map(|t| TableRemap::for_table(seed, t, layer.rows_per_table))
        .collect();
    let lookups = layer.lookups_per_sample as usize;
    let source = &src.indices[skip..skip + required as usize];
    let mut indices = Vec::with_capacity(required as usize * remaps.len());
    for group in source.chunks_exact(lookups) {
        for remap in &remaps {
            indices.extend(group.iter().map(|&i| remap.apply(i)));
        }
    }
    Ok(FullTrace {
        num_batches,
        batch_size,
        num_tables: layer.num_tables,
        lookups_per_sample: layer.lookups_per_sample,
        indices,
    })
}

pub fn expand_trace(
    src: &IndexTrace,
    layer: &EmbeddingLayer,
    batch_size: u64,
    num_batches: u64,
) -> Result<FullTrace, TraceError> {
    expand_trace_from(
        src,
        0,
        layer,
        batch_size,
        num_batches,
        src.seed.unwrap_or(0),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Read,
    Write,
}

/// Identifies the vector a request belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VectorId {
    pub table: u32,
    pub index: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemoryAccess {
    pub address: u64,
    pub size: u32,
    pub kind: AccessKind,
    pub batch: u32,
    pub vector: VectorId,
}

impl MemoryAccess {
    /// A bare read, for replaying address-only traces.
    pub fn read(address: u64, size: u32) -> Self {
        Self {
            address,
            size,
            kind: AccessKind::Read,
            batch: 0,
            vector: VectorId { table: 0, index: 0 },
        }
    }
}

/// Where a layer's tables live. Layers after the first are laid out after
/// the preceding layers' tables, with globally unique table ids.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TablePlacement {
    pub base_address: u64,
    pub first_table: u32,
}

impl TablePlacement {
    /// Placement of the layer following `layer` placed at `self`.
    pub fn after(&self, layer: &EmbeddingLayer, dtype_bytes: u64) -> Result<Self, TraceError> {
        Ok(Self {
            base_address: self
                .base_address
                .checked_add(layer_span_bytes(layer, dtype_bytes)?)
                .ok_or(TraceError::AddressOverflow)?,
            first_table: self
                .first_table
                .checked_add(layer.num_tables)
                .ok_or(TraceError::AddressOverflow)?,
        })
    }
}

fn layer_span_bytes(layer: &EmbeddingLayer, dtype_bytes: u64) -> Result<u64, TraceError> {
    u64::from(layer.num_tables)
        .checked_mul(layer.rows_per_table)
        .and_then(|v| v.checked_mul(layer.vector_bytes(dtype_bytes)))
        .ok_or(TraceError::AddressOverflow)
}

/// Requests per vector lookup: `ceil(vector_bytes / granularity)`.
pub fn requests_per_vector(layer: &EmbeddingLayer, dtype_bytes: u64, granularity: u64) -> u64 {
    layer.vector_bytes(dtype_bytes).div_ceil(granularity)
}

/// Converts lookups to granularity-sized read requests, tables packed back
/// to back starting at `placement.base_address`.
pub fn translate_lookups(
    lookups: impl IntoIterator<Item = Lookup>,
    layer: &EmbeddingLayer,
    dtype_bytes: u64,
    granularity: u64,
    placement: TablePlacement,
) -> Result<Vec<MemoryAccess>, TraceError> {
    let span = layer_span_bytes(layer, dtype_bytes)?;
    placement
        .base_address
        .checked_add(span)
        .ok_or(TraceError::AddressOverflow)?;
    let size = u32::try_from(granularity).map_err(|_| TraceError::AddressOverflow)?;
    let vector_bytes = layer.vector_bytes(dtype_bytes);
    let table_bytes = layer.rows_per_table * vector_bytes;
    let per_vector = requests_per_vector(layer, dtype_bytes, granularity);
    let lookups = lookups.into_iter();
    let mut out = Vec::with_capacity(lookups.size_hint().0 * per_vector as usize);
    for l in lookups {
        let start = placement.base_address
            + u64::from(l.table) * table_bytes
            + u64::from(l.index) * vector_bytes;
        let aligned = start - start % granularity;
        let vector = VectorId {
            table: placement.first_table + l.table,
            index: l.index,
        };
        out.extend((0..per_vector).map(|k| MemoryAccess {
            address: aligned + k * granularity,
            size,
            kind: AccessKind::Read,
            batch: l.batch,
            vector,
        }));
    }
    Ok(out)
}

pub fn translate_addresses(
    full: &FullTrace,
    layer: &EmbeddingLayer,
    dtype_bytes: u64,
    granularity: u64,
) -> Result<Vec<MemoryAccess>, TraceError> {
    translate_lookups(
        full.lookups(),
        layer,
        dtype_bytes,
        granularity,
        TablePlacement::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Reduce;
    use std::collections::HashMap;

    fn layer(tables: u32, rows: u64, dim: u64, lookups: u64) -> EmbeddingLayer {
        EmbeddingLayer {
            num_tables: tables,
            rows_per_table: rows,
            dim,
            lookups_per_sample: lookups,
            reduce: Reduce::Sum,
        }
    }

    fn sorted_counts(indices: impl Iterator<Item = u32>) -> Vec<u64> {
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for i in indices {
            *counts.entry(i).or_default() += 1;
        }
        let mut v: Vec<u64> = counts.into_values().collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn zipf_is_deterministic() {
        let a = gen_zipfian_trace(1000, 10_000, 1.2, 7).unwrap();
        let b = gen_zipfian_trace(1000, 10_000, 1.2, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.indices.iter().all(|&i| i < 1000));
        assert_ne!(
            a.indices,
            gen_zipfian_trace(1000, 10_000, 1.2, 8).unwrap().indices
        );
    }

    #[test]
    fn zipf_rejects_empty() {
        assert!(matches!(
            gen_zipfian_trace(10, 0, 1.0, 1),
            Err(TraceError::Empty)
        ));
    }

    #[test]
    fn zipf_head_frequency_matches_harmonic_normalizer() {
        // P(index 0) = 1 / H, H = sum_{r=1..100} r^-1.2
        let h: f64 = (1..=100).map(|r| (r as f64).powf(-1.2)).sum();
        let expected = 1.0 / h;
        let trace = gen_zipfian_trace(100, 100_000, 1.2, 1).unwrap();
        let zeros = trace.indices.iter().filter(|&&i| i == 0).count() as f64 / 100_000.0;
        assert!(
            (zeros - expected).abs() <= 0.05 * expected,
            "{zeros} vs {expected}"
        );
    }

    #[test]
    fn zipf_s0_uniform_over_four_rows() {
        let trace = gen_zipfian_trace(4, 100_000, 0.0, 3).unwrap();
        let mut counts = [0f64; 4];
        for &i in &trace.indices {
            counts[i as usize] += 1.0;
        }
        let expected = 25_000.0;
        let chi2: f64 = counts
            .iter()
            .map(|c| (c - expected).powi(2) / expected)
            .sum();
        // chi-squared, 3 dof, p = 0.001
        assert!(chi2 < 16.266, "chi2 = {chi2}");
    }

    #[test]
    fn text_trace_with_declared_rows() {
        let t = IndexTrace::from_bytes(b"0\n3\n0\n", Some(4)).unwrap();
        assert_eq!(t.indices, vec![0, 3, 0]);
        assert_eq!(t.rows, 4);
    }

    #[test]
    fn negative_index_is_parse_error() {
        let err = IndexTrace::from_bytes(b"rows=4\n-1\n", None).unwrap_err();
        assert!(matches!(err, TraceError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn out_of_range_reports_line() {
        let err = IndexTrace::from_bytes(b"rows=4\n1\n\n4\n", None).unwrap_err();
        assert!(
            matches!(
                err,
                TraceError::OutOfRange {
                    line: 4,
                    index: 4,
                    rows: 4
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn empty_file_loads_then_expansion_fails() {
        let t = IndexTrace::from_bytes(b"", Some(4)).unwrap();
        assert!(t.is_empty());
        let err = expand_trace(&t, &layer(1, 4, 1, 1), 1, 1).unwrap_err();
        assert!(matches!(
            err,
            TraceError::Length {
                required: 1,
                available: 0
            }
        ));
    }

    #[test]
    fn binary_round_trip_and_layout() {
        let t = IndexTrace::new(vec![5, 0, 2], 6).unwrap();
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"EONT");
        assert_eq!(u64::from_le_bytes(buf[4..12].try_into().unwrap()), 6);
        assert_eq!(u64::from_le_bytes(buf[12..20].try_into().unwrap()), 3);
        assert_eq!(&buf[20..24], &5u32.to_le_bytes());
        assert_eq!(buf.len(), 32);
        assert_eq!(IndexTrace::from_bytes(&buf, None).unwrap(), t);
    }

    #[test]
    fn truncated_binary_rejected() {
        let t = IndexTrace::new(vec![1, 2], 6).unwrap();
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        buf.pop();
        assert!(matches!(
            IndexTrace::from_bytes(&buf, None),
            Err(TraceError::Binary(_))
        ));
    }

    #[test]
    fn identity_expansion() {
        let src = IndexTrace::new(vec![0, 0, 1], 2).unwrap();
        let full = expand_trace(&src, &layer(1, 2, 1, 3), 1, 1).unwrap();
        let lookups: Vec<Lookup> = full.lookups().collect();
        assert_eq!(lookups.len(), 3);
        assert!(lookups
            .iter()
            .all(|l| l.batch == 0 && l.sample == 0 && l.table == 0));
        assert_eq!(
            lookups.iter().map(|l| l.index).collect::<Vec<_>>(),
            vec![0, 0, 1]
        );
    }

    #[test]
    fn second_table_keeps_frequency_multiset() {
        let src = IndexTrace::new(vec![0, 0, 1], 2).unwrap();
        let full = expand_trace(&src, &layer(2, 2, 1, 3), 1, 1).unwrap();
        assert_eq!(sorted_counts(full.table_indices(1)), vec![1, 2]);
    }

    #[test]
    fn short_source_is_length_error() {
        let src = IndexTrace::new(vec![0; 7], 2).unwrap();
        let err = expand_trace(&src, &layer(1, 2, 1, 2), 2, 2).unwrap_err();
        assert!(matches!(
            err,
            TraceError::Length {
                required: 8,
                available: 7
            }
        ));
    }

    #[test]
    fn expansion_order_is_batch_sample_table_lookup() {
        let src = IndexTrace::new((0..8).collect(), 8).unwrap();
        let full = expand_trace(&src, &layer(2, 8, 1, 2), 2, 2).unwrap();
        let lookups: Vec<Lookup> = full.lookups().collect();
        assert_eq!(lookups.len(), 16);
        assert_eq!(
            (lookups[0].batch, lookups[0].sample, lookups[0].table),
            (0, 0, 0)
        );
        assert_eq!(
            (lookups[2].batch, lookups[2].sample, lookups[2].table),
            (0, 0, 1)
        );
        assert_eq!(
            (lookups[4].batch, lookups[4].sample, lookups[4].table),
            (0, 1, 0)
        );
        assert_eq!(
            (lookups[8].batch, lookups[8].sample, lookups[8].table),
            (1, 0, 0)
        );
        assert_eq!(lookups[8].index, 4);
        assert_eq!(full.batch(1).count(), 8);
        assert_eq!(full.batch(1).next().unwrap(), lookups[8]);
    }

    #[test]
    fn remap_is_bijective_for_awkward_row_counts() {
        for rows in [1u64, 2, 6, 9, 30, 97, 1024] {
            for t in 0..5 {
                let remap = TableRemap::for_table(11, t, rows);
                let mut seen = vec![false; rows as usize];
                for i in 0..rows as u32 {
                    seen[remap.apply(i) as usize] = true;
                }
                assert!(seen.iter().all(|&s| s), "rows={rows} t={t}");
            }
        }
        assert_eq!(
            TableRemap::for_table(99, 0, 10),
            TableRemap {
                multiplier: 1,
                offset: 0,
                rows: 10
            }
        );
    }

    #[test]
    fn translate_vector_three_of_table_zero() {
        let l = layer(1, 10, 128, 1);
        let src = IndexTrace::new(vec![3], 10).unwrap();
        let full = expand_trace(&src, &l, 1, 1).unwrap();
        let accesses = translate_addresses(&full, &l, 4, 64).unwrap();
        let addrs: Vec<u64> = accesses.iter().map(|a| a.address).collect();
        assert_eq!(addrs, (0..8).map(|k| 1536 + 64 * k).collect::<Vec<_>>());
        assert!(accesses
            .iter()
            .all(|a| a.size == 64 && a.kind == AccessKind::Read));
    }

    #[test]
    fn translate_second_table_base() {
        let l = layer(2, 1_000_000, 128, 1);
        let lookup = Lookup {
            batch: 0,
            sample: 0,
            table: 1,
            index: 0,
        };
        let accesses = translate_lookups([lookup], &l, 4, 64, TablePlacement::default()).unwrap();
        assert_eq!(accesses[0].address, 512_000_000);
    }

    #[test]
    fn sub_granularity_vector_is_one_request() {
        let l = layer(1, 100, 1, 1);
        let lookup = Lookup {
            batch: 0,
            sample: 0,
            table: 0,
            index: 17,
        };
        let accesses = translate_lookups([lookup], &l, 4, 64, TablePlacement::default()).unwrap();
        assert_eq!(accesses.len(), 1);
        assert_eq!(accesses[0].address, 64);
    }

    #[test]
    fn address_overflow_detected() {
        let l = layer(u32::MAX, u32::MAX as u64 + 1, 1 << 20, 1);
        let lookup = Lookup {
            batch: 0,
            sample: 0,
            table: 0,
            index: 0,
        };
        let err = translate_lookups([lookup], &l, 4, 64, TablePlacement::default()).unwrap_err();
        assert!(matches!(err, TraceError::AddressOverflow));
    }
}
