//! On-chip memory management: decides which requests hit local memory and
//! which go off-chip, under SPM, LRU, SRRIP or a static pin set.

use std::collections::{BTreeMap, HashMap, HashSet};

use fnv::FnvBuildHasher;

use crate::config::{CacheGeometry, EmbeddingLayer, MemLevelConfig, PolicyConfig, PolicyKind};
use crate::error::PolicyError;
use crate::trace::{FullTrace, Lookup, MemoryAccess, VectorId};

pub type PinSet = HashSet<VectorId, FnvBuildHasher>;

const INVALID: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Replacement {
    Lru,
    Srrip { max_rrpv: u64 },
}

/// Set-associative cache holding line addresses. Ways are filled in
/// ascending order and victims are chosen deterministically.
#[derive(Clone, Debug)]
pub struct SetAssocCache {
    replacement: Replacement,
    geometry: CacheGeometry,
    /// Line number per way, `INVALID` when empty.
    lines: Vec<u64>,
    /// LRU: last-use stamp. SRRIP: re-reference prediction value.
    meta: Vec<u64>,
    clock: u64,
}

impl SetAssocCache {
    pub fn new(policy: &PolicyConfig, level: &MemLevelConfig) -> Result<Self, PolicyError> {
        let geometry = policy.cache_geometry(level)?;
        let replacement = match policy.kind {
            PolicyKind::Lru => Replacement::Lru,
            PolicyKind::Srrip => Replacement::Srrip {
                max_rrpv: (1u64 << policy.rrpv_bits) - 1,
            },
            kind => return Err(PolicyError::Unsupported(kind)),
        };
        let slots = (geometry.num_sets * geometry.ways) as usize;
        Ok(Self {
            replacement,
            geometry,
            lines: vec![INVALID; slots],
            meta: vec![0; slots],
            clock: 0,
        })
    }

    pub fn geometry(&self) -> CacheGeometry {
        self.geometry
    }

    fn set_range(&self, set: u64) -> std::ops::Range<usize> {
        let ways = self.geometry.ways as usize;
        let start = set as usize * ways;
        start..start + ways
    }

    /// Returns true on a hit. Misses allocate the line.
    pub fn access(&mut self, address: u64) -> bool {
        let line = address / self.geometry.line_bytes;
        let range = self.set_range(line % self.geometry.num_sets);
        let lines = &mut self.lines[range.clone()];
        let meta = &mut self.meta[range];
        self.clock += 1;
        if let Some(way) = lines.iter().position(|&l| l == line) {
            meta[way] = match self.replacement {
                Replacement::Lru => self.clock,
                Replacement::Srrip { .. } => 0,
            };
            return true;
        }
        let victim = match lines.iter().position(|&l| l == INVALID) {
            Some(empty) => empty,
            None => match self.replacement {
                Replacement::Lru => {
                    // Stamps are unique, so the minimum is unambiguous.
                    (0..meta.len()).min_by_key(|&w| meta[w]).unwrap()
                }
                Replacement::Srrip { max_rrpv } => {
                    // Aging until some way reaches max_rrpv is one bulk add.
                    let oldest = *meta.iter().max().unwrap();
                    let bump = max_rrpv - oldest;
                    if bump > 0 {
                        meta.iter_mut().for_each(|m| *m += bump);
                    }
                    meta.iter().position(|&m| m == max_rrpv).unwrap()
                }
            },
        };
        lines[victim] = line;
        meta[victim] = match self.replacement {
            Replacement::Lru => self.clock,
            Replacement::Srrip { max_rrpv } => max_rrpv - 1,
        };
        false
    }

    /// Lines held by `set`, in way order.
    pub fn set_lines(&self, set: u64) -> Vec<u64> {
        self.lines[self.set_range(set)]
            .iter()
            .copied()
            .filter(|&l| l != INVALID)
            .collect()
    }

    /// LRU recency rank per occupied way of `set` (0 = most recent).
    pub fn recency_ranks(&self, set: u64) -> Vec<usize> {
        let range = self.set_range(set);
        let stamps: Vec<u64> = range
            .clone()
            .filter(|&i| self.lines[i] != INVALID)
            .map(|i| self.meta[i])
            .collect();
        stamps
            .iter()
            .map(|s| stamps.iter().filter(|o| *o > s).count())
            .collect()
    }

    /// SRRIP values per occupied way of `set`.
    pub fn rrpvs(&self, set: u64) -> Vec<u64> {
        self.set_range(set)
            .filter(|&i| self.lines[i] != INVALID)
            .map(|i| self.meta[i])
            .collect()
    }

    pub fn clear(&mut self) {
        self.lines.fill(INVALID);
        self.meta.fill(0);
        self.clock = 0;
    }
}

/// Management state for one memory instance.
#[derive(Clone, Debug)]
pub enum PolicyState {
    Spm,
    Cache(SetAssocCache),
    Pinned(PinSet),
}

impl PolicyState {
    /// `pins` is only consulted for PINNING; a missing set pins nothing.
    pub fn new(
        policy: &PolicyConfig,
        level: &MemLevelConfig,
        pins: Option<PinSet>,
    ) -> Result<Self, PolicyError> {
        Ok(match policy.kind {
            PolicyKind::Spm => PolicyState::Spm,
            PolicyKind::Lru | PolicyKind::Srrip => {
                PolicyState::Cache(SetAssocCache::new(policy, level)?)
            }
            PolicyKind::Pinning => PolicyState::Pinned(pins.unwrap_or_default()),
        })
    }

    pub fn access(&mut self, access: &MemoryAccess) -> bool {
        match self {
            PolicyState::Spm => false,
            PolicyState::Cache(cache) => cache.access(access.address),
            PolicyState::Pinned(pins) => pins.contains(&access.vector),
        }
    }

    /// On-chip reads/writes charged for one request. Every request is read by
    /// the compute units from on-chip memory; misses also pay a fill write,
    /// except under pinning where misses bypass the buffer.
    fn onchip_cost(&self, hit: bool) -> u64 {
        match (self, hit) {
            (_, true) => 1,
            (PolicyState::Pinned(_), false) => 1,
            (_, false) => 2,
        }
    }

    /// Empties caches. Pin sets are static and survive.
    pub fn reset(&mut self) {
        if let PolicyState::Cache(cache) = self {
            cache.clear();
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AccessCounts {
    pub hits: u64,
    pub misses: u64,
    pub onchip_accesses: u64,
}

impl AccessCounts {
    pub fn total(&self) -> u64 {
        self.hits + self.misses
    }

    pub fn add(&mut self, other: &AccessCounts) {
        self.hits += other.hits;
        self.misses += other.misses;
        self.onchip_accesses += other.onchip_accesses;
    }
}

/// Outcome of classifying a request stream.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassifiedAccesses {
    pub counts: AccessCounts,
    /// Requests that go off-chip, in order.
    pub offchip_sequence: Vec<MemoryAccess>,
    pub per_batch: BTreeMap<u32, AccessCounts>,
}

impl ClassifiedAccesses {
    pub fn hits(&self) -> u64 {
        self.counts.hits
    }

    pub fn misses(&self) -> u64 {
        self.counts.misses
    }
}

/// Replays `accesses` through `state`, which is left updated.
pub fn classify(accesses: &[MemoryAccess], state: &mut PolicyState) -> ClassifiedAccesses {
    let mut out = ClassifiedAccesses::default();
    for access in accesses {
        let hit = state.access(access);
        let cost = state.onchip_cost(hit);
        let batch = out.per_batch.entry(access.batch).or_default();
        for counts in [&mut out.counts, batch] {
            if hit {
                counts.hits += 1;
            } else {
                counts.misses += 1;
            }
            counts.onchip_accesses += cost;
        }
        if !hit {
            out.offchip_sequence.push(*access);
        }
    }
    out
}

/// One-shot classification from a cold state.
pub fn simulate_onchip(
    accesses: &[MemoryAccess],
    policy: &PolicyConfig,
    local_mem: &MemLevelConfig,
    pins: Option<PinSet>,
) -> Result<ClassifiedAccesses, PolicyError> {
    let mut state = PolicyState::new(policy, local_mem, pins)?;
    Ok(classify(accesses, &mut state))
}

/// Per-request hit flags from a cold state.
pub fn hit_sequence(
    accesses: &[MemoryAccess],
    policy: &PolicyConfig,
    local_mem: &MemLevelConfig,
    pins: Option<PinSet>,
) -> Result<Vec<bool>, PolicyError> {
    let mut state = PolicyState::new(policy, local_mem, pins)?;
    Ok(accesses.iter().map(|a| state.access(a)).collect())
}

/// Vector access frequencies gathered over one or more embedding layers.
#[derive(Clone, Debug, Default)]
pub struct HotVectorProfile {
    counts: HashMap<VectorId, u64, FnvBuildHasher>,
    vector_bytes: HashMap<u32, u64, FnvBuildHasher>,
}

/// Result of profiling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PinSelection {
    pub pins: PinSet,
    /// Set when the capacity holds no vector at all.
    pub capacity_too_small: bool,
}

impl HotVectorProfile {
    /// Counts `lookups`, whose tables are numbered from `first_table`.
    pub fn record(
        &mut self,
        lookups: impl IntoIterator<Item = Lookup>,
        first_table: u32,
        vector_bytes: u64,
    ) {
        for l in lookups {
            let table = first_table + l.table;
            self.vector_bytes.insert(table, vector_bytes);
            *self
                .counts
                .entry(VectorId {
                    table,
                    index: l.index,
                })
                .or_default() += 1;
        }
    }

    /// Greedily pins vectors by descending count, ties by ascending
    /// (table, index), while they fit in `capacity_bytes`.
    pub fn select(&self, capacity_bytes: u64) -> PinSelection {
        let mut ranked: Vec<(VectorId, u64)> = self.counts.iter().map(|(&v, &c)| (v, c)).collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut remaining = capacity_bytes;
        let mut pins = PinSet::default();
        let smallest = self
            .vector_bytes
            .values()
            .copied()
            .min()
            .unwrap_or(u64::MAX);
        for (vector, _) in ranked {
            if remaining < smallest {
                break;
            }
            let size = self.vector_bytes[&vector.table];
            if size <= remaining {
                remaining -= size;
                pins.insert(vector);
            }
        }
        let capacity_too_small = capacity_bytes < smallest;
        PinSelection {
            pins,
            capacity_too_small,
        }
    }
}

/// Pins the `floor(capacity / vector_bytes)` most frequently looked-up vectors.
pub fn profile_hot_vectors(
    full: &FullTrace,
    layer: &EmbeddingLayer,
    capacity_bytes: u64,
    dtype_bytes: u64,
) -> PinSelection {
    let mut profile = HotVectorProfile::default();
    profile.record(full.lookups(), 0, layer.vector_bytes(dtype_bytes));
    profile.select(capacity_bytes)
}

/// Straightforward replay used to cross-check [`SetAssocCache`]: explicit
/// recency lists for LRU and a literal age-and-rescan loop for SRRIP.
pub mod reference {
    use super::*;

    pub fn ref_cache_outcomes(
        accesses: &[MemoryAccess],
        policy: &PolicyConfig,
        level: &MemLevelConfig,
    ) -> Result<Vec<bool>, PolicyError> {
        if !policy.kind.is_cache() {
            return Err(PolicyError::Unsupported(policy.kind));
        }
        let line_bytes = policy.line_size_bytes.unwrap_or(level.granularity_bytes);
        let ways = policy.associativity.unwrap_or(1) as usize;
        let num_sets = level.capacity_bytes / (line_bytes * ways as u64);
        if num_sets == 0 {
            return Err(
                crate::error::ConfigError::invalid("policy.associativity", "zero sets").into(),
            );
        }
        let max_rrpv = (1u32 << policy.rrpv_bits) - 1;
        let mut outcomes = Vec::with_capacity(accesses.len());
        match policy.kind {
            PolicyKind::Lru => {
                // Front of each list is most recently used.
                let mut sets: Vec<Vec<u64>> = vec![Vec::new(); num_sets as usize];
                for a in accesses {
                    let line = a.address / line_bytes;
                    let set = &mut sets[(line % num_sets) as usize];
                    match set.iter().position(|&l| l == line) {
                        Some(pos) => {
                            set.remove(pos);
                            set.insert(0, line);
                            outcomes.push(true);
                        }
                        None => {
                            if set.len() == ways {
                                set.pop();
                            }
                            set.insert(0, line);
                            outcomes.push(false);
                        }
                    }
                }
            }
            PolicyKind::Srrip => {
                let mut sets: Vec<Vec<Option<(u64, u32)>>> =
                    vec![vec![None; ways]; num_sets as usize];
                for a in accesses {
                    let line = a.address / line_bytes;
                    let set = &mut sets[(line % num_sets) as usize];
                    if let Some(way) = set
                        .iter()
                        .position(|w| matches!(w, Some((l, _)) if *l == line))
                    {
                        set[way] = Some((line, 0));
                        outcomes.push(true);
                        continue;
                    }
                    outcomes.push(false);
                    if let Some(empty) = set.iter().position(Option::is_none) {
                        set[empty] = Some((line, max_rrpv - 1));
                        continue;
                    }
                    loop {
                        if let Some(way) = set.iter().position(|w| w.unwrap().1 == max_rrpv) {
                            set[way] = Some((line, max_rrpv - 1));
                            break;
                        }
                        for (_, rrpv) in set.iter_mut().flatten() {
                            *rrpv += 1;
                        }
                    }
                }
            }
            PolicyKind::Spm | PolicyKind::Pinning => unreachable!(),
        }
        Ok(outcomes)
    }

    /// `(hits, misses)` of the reference replay.
    pub fn ref_cache_sim(
        accesses: &[MemoryAccess],
        policy: &PolicyConfig,
        level: &MemLevelConfig,
    ) -> Result<(u64, u64), PolicyError> {
        let outcomes = ref_cache_outcomes(accesses, policy, level)?;
        let hits = outcomes.iter().filter(|&&h| h).count() as u64;
        Ok((hits, outcomes.len() as u64 - hits))
    }
}

pub use reference::{ref_cache_outcomes, ref_cache_sim};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Reduce;
    use crate::trace::{expand_trace, IndexTrace};
    use proptest::prelude::*;

    const LINE: u64 = 64;

    fn level(capacity: u64) -> MemLevelConfig {
        MemLevelConfig {
            capacity_bytes: capacity,
            latency_cycles: 1,
            bandwidth_bytes_per_cycle: 64.0,
            granularity_bytes: LINE,
        }
    }

    fn lines(seq: &[u64]) -> Vec<MemoryAccess> {
        seq.iter()
            .map(|&l| MemoryAccess::read(l * LINE, LINE as u32))
            .collect()
    }

    fn vectors(seq: &[u32]) -> Vec<MemoryAccess> {
        seq.iter()
            .map(|&v| MemoryAccess {
                vector: VectorId { table: 0, index: v },
                ..MemoryAccess::read(u64::from(v) * LINE, LINE as u32)
            })
            .collect()
    }

    fn flags(hits: &[bool]) -> String {
        hits.iter().map(|&h| if h { 'H' } else { 'M' }).collect()
    }

    // A=0, B=1, C=2 all land in the single set.
    #[test]
    fn lru_hand_replay() {
        let policy = PolicyConfig::lru(2, LINE);
        let trace = lines(&[0, 1, 0, 2, 1]);
        let seq = hit_sequence(&trace, &policy, &level(2 * LINE), None).unwrap();
        assert_eq!(flags(&seq), "MMHMM");
        assert_eq!(
            ref_cache_sim(&trace, &policy, &level(2 * LINE)).unwrap(),
            (1, 4)
        );
        let mut cache = SetAssocCache::new(&policy, &level(2 * LINE)).unwrap();
        for a in &trace {
            cache.access(a.address);
        }
        // B evicted A, so {C, B} remain.
        let mut held = cache.set_lines(0);
        held.sort();
        assert_eq!(held, vec![1, 2]);
    }

    #[test]
    fn srrip_hand_replay() {
        let policy = PolicyConfig::srrip(2, LINE, 2);
        let trace = lines(&[0, 1, 0, 2, 0]);
        let mut cache = SetAssocCache::new(&policy, &level(2 * LINE)).unwrap();
        let seq: Vec<bool> = trace
            .iter()
            .take(4)
            .map(|a| cache.access(a.address))
            .collect();
        assert_eq!(flags(&seq), "MMHM");
        // C replaced B in way 1 after aging A to 1.
        assert_eq!(cache.set_lines(0), vec![0, 2]);
        assert_eq!(cache.rrpvs(0), vec![1, 2]);
        assert!(cache.access(0));
        assert_eq!(
            ref_cache_sim(&trace, &policy, &level(2 * LINE)).unwrap(),
            (2, 3)
        );
    }

    #[test]
    fn pinning_counts() {
        let pins: PinSet = [VectorId { table: 0, index: 0 }].into_iter().collect();
        let trace = vectors(&[0, 0, 0, 1, 1, 2]);
        let out =
            simulate_onchip(&trace, &PolicyConfig::pinning(), &level(4096), Some(pins)).unwrap();
        assert_eq!((out.hits(), out.misses()), (3, 3));
        assert_eq!(out.offchip_sequence.len(), 3);
        assert_eq!(out.counts.onchip_accesses, 6);
    }

    #[test]
    fn spm_never_hits_and_charges_two_onchip_accesses() {
        let trace = lines(&[0, 0, 0, 5]);
        let out = simulate_onchip(&trace, &PolicyConfig::spm(), &level(4096), None).unwrap();
        assert_eq!(out.hits(), 0);
        assert_eq!(out.offchip_sequence.len(), 4);
        assert_eq!(out.counts.onchip_accesses, 8);
    }

    #[test]
    fn cache_onchip_accounting() {
        let out = simulate_onchip(
            &lines(&[0, 0, 1]),
            &PolicyConfig::lru(2, LINE),
            &level(2 * LINE),
            None,
        )
        .unwrap();
        // hit: 1, miss: read + fill
        assert_eq!(out.counts.onchip_accesses, 1 + 2 * 2);
    }

    #[test]
    fn per_batch_breakdown() {
        let mut trace = lines(&[0, 1, 0, 1]);
        trace[2].batch = 1;
        trace[3].batch = 1;
        let out =
            simulate_onchip(&trace, &PolicyConfig::lru(2, LINE), &level(2 * LINE), None).unwrap();
        assert_eq!(
            out.per_batch[&0],
            AccessCounts {
                hits: 0,
                misses: 2,
                onchip_accesses: 4
            }
        );
        assert_eq!(
            out.per_batch[&1],
            AccessCounts {
                hits: 2,
                misses: 0,
                onchip_accesses: 2
            }
        );
    }

    #[test]
    fn reference_edge_cases() {
        let policy = PolicyConfig::lru(4, LINE);
        assert_eq!(
            ref_cache_sim(&[], &policy, &level(4 * LINE)).unwrap(),
            (0, 0)
        );
        assert!(matches!(
            ref_cache_sim(&[], &PolicyConfig::spm(), &level(4 * LINE)),
            Err(PolicyError::Unsupported(PolicyKind::Spm))
        ));
    }

    #[test]
    fn fully_associative_sees_only_compulsory_misses() {
        let trace = lines(&[3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8, 9, 7, 9, 3]);
        let distinct = trace
            .iter()
            .map(|a| a.address)
            .collect::<HashSet<_>>()
            .len() as u64;
        let policy = PolicyConfig::lru(16, LINE);
        let (_, misses) = ref_cache_sim(&trace, &policy, &level(16 * LINE)).unwrap();
        assert_eq!(misses, distinct);
        let out = simulate_onchip(&trace, &policy, &level(16 * LINE), None).unwrap();
        assert_eq!(out.misses(), distinct);
    }

    #[test]
    fn non_cache_kind_rejected_by_cache() {
        assert!(SetAssocCache::new(&PolicyConfig::spm(), &level(4096)).is_err());
    }

    fn emb(tables: u32, rows: u64, dim: u64, lookups: u64) -> EmbeddingLayer {
        EmbeddingLayer {
            num_tables: tables,
            rows_per_table: rows,
            dim,
            lookups_per_sample: lookups,
            reduce: Reduce::Sum,
        }
    }

    #[test]
    fn profiling_picks_unique_max() {
        let layer = emb(1, 3, 1, 6);
        let full = expand_trace(
            &IndexTrace::new(vec![0, 1, 0, 2, 1, 0], 3).unwrap(),
            &layer,
            1,
            1,
        )
        .unwrap();
        let sel = profile_hot_vectors(&full, &layer, 4, 4);
        assert_eq!(
            sel.pins,
            [VectorId { table: 0, index: 0 }].into_iter().collect()
        );
        assert!(!sel.capacity_too_small);
    }

    #[test]
    fn profiling_ties_break_low_ids() {
        let layer = emb(1, 4, 1, 4);
        let full =
            expand_trace(&IndexTrace::new(vec![3, 2, 1, 0], 4).unwrap(), &layer, 1, 1).unwrap();
        let sel = profile_hot_vectors(&full, &layer, 8, 4);
        let mut pins: Vec<VectorId> = sel.pins.into_iter().collect();
        pins.sort();
        assert_eq!(
            pins,
            vec![
                VectorId { table: 0, index: 0 },
                VectorId { table: 0, index: 1 }
            ]
        );
    }

    #[test]
    fn profiling_zero_capacity_warns() {
        let layer = emb(1, 4, 128, 1);
        let full = expand_trace(&IndexTrace::new(vec![1], 4).unwrap(), &layer, 1, 1).unwrap();
        let sel = profile_hot_vectors(&full, &layer, 100, 4);
        assert!(sel.pins.is_empty());
        assert!(sel.capacity_too_small);
    }

    #[test]
    fn profiling_capacity_in_vectors() {
        // 8 MiB of 512-byte vectors.
        let layer = emb(1, 20_000, 128, 20_000);
        let full = expand_trace(
            &IndexTrace::new((0..20_000).collect(), 20_000).unwrap(),
            &layer,
            1,
            1,
        )
        .unwrap();
        assert_eq!(
            profile_hot_vectors(&full, &layer, 8 << 20, 4).pins.len(),
            16_384
        );
    }

    fn trace_strategy() -> impl Strategy<Value = Vec<u64>> {
        prop::collection::vec(0u64..64, 0..400)
    }

    proptest! {
        #[test]
        fn cache_matches_reference(
            seq in trace_strategy(),
            sets_log in 0u32..3,
            ways in 1u64..6,
            srrip in any::<bool>(),
            bits in 1u32..4,
        ) {
            let lvl = level((1 << sets_log) * ways * LINE);
            let policy = if srrip { PolicyConfig::srrip(ways, LINE, bits) } else { PolicyConfig::lru(ways, LINE) };
            let trace = lines(&seq);
            let fast = hit_sequence(&trace, &policy, &lvl, None).unwrap();
            let slow = ref_cache_outcomes(&trace, &policy, &lvl).unwrap();
            prop_assert_eq!(fast, slow);
        }

        #[test]
        fn set_invariants_hold(seq in trace_strategy(), ways in 1u64..6, srrip in any::<bool>()) {
            let lvl = level(2 * ways * LINE);
            let policy = if srrip { PolicyConfig::srrip(ways, LINE, 2) } else { PolicyConfig::lru(ways, LINE) };
            let mut cache = SetAssocCache::new(&policy, &lvl).unwrap();
            for a in lines(&seq) {
                cache.access(a.address);
                for set in 0..2 {
                    let held = cache.set_lines(set);
                    prop_assert!(held.len() as u64 <= ways);
                    if srrip {
                        prop_assert!(cache.rrpvs(set).iter().all(|&r| r <= 3));
                    } else {
                        let mut ranks = cache.recency_ranks(set);
                        ranks.sort();
                        prop_assert_eq!(ranks, (0..held.len()).collect::<Vec<_>>());
                    }
                }
            }
        }

        #[test]
        fn conservation_every_policy(seq in trace_strategy(), kind in 0usize..4) {
            let lvl = level(8 * LINE);
            let policy = match kind {
                0 => PolicyConfig::spm(),
                1 => PolicyConfig::lru(4, LINE),
                2 => PolicyConfig::srrip(2, LINE, 2),
                _ => PolicyConfig::pinning(),
            };
            let pins: PinSet = [VectorId { table: 0, index: 0 }].into_iter().collect();
            let trace = lines(&seq);
            let out = simulate_onchip(&trace, &policy, &lvl, Some(pins)).unwrap();
            prop_assert_eq!(out.hits() + out.misses(), trace.len() as u64);
            prop_assert_eq!(out.offchip_sequence.len() as u64, out.misses());
            if kind == 0 {
                prop_assert_eq!(out.hits(), 0);
            }
        }

        #[test]
        fn lru_growing_associativity_never_loses_hits(seq in trace_strategy(), ways in 1u64..12) {
            let trace = lines(&seq);
            let small = ref_cache_sim(&trace, &PolicyConfig::lru(ways, LINE), &level(ways * LINE)).unwrap();
            let large = simulate_onchip(&trace, &PolicyConfig::lru(ways + 1, LINE), &level((ways + 1) * LINE), None).unwrap();
            prop_assert!(large.hits() >= small.0);
        }
    }
}
