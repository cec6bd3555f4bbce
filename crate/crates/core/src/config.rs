//! Hardware and workload descriptions, parsed from TOML documents.
//!
//! Every rejection names the key path that caused it. The only silent
//! defaults are `rrpv_bits = 2`, `overlap_compute_memory = true` and
//! `reset_state_per_batch = false`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// One level of the memory hierarchy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemLevelConfig {
    pub capacity_bytes: u64,
    pub latency_cycles: u64,
    pub bandwidth_bytes_per_cycle: f64,
    /// Request size, a power of two.
    pub granularity_bytes: u64,
}

impl MemLevelConfig {
    fn validate(&self, path: &str) -> Result<(), ConfigError> {
        let key = |field: &str| format!("{path}.{field}");
        if self.capacity_bytes == 0 {
            return Err(ConfigError::invalid(
                key("capacity_bytes"),
                "must be positive",
            ));
        }
        if !(self.bandwidth_bytes_per_cycle.is_finite() && self.bandwidth_bytes_per_cycle > 0.0) {
            return Err(ConfigError::invalid(
                key("bandwidth_bytes_per_cycle"),
                "must be a positive finite number",
            ));
        }
        if self.granularity_bytes == 0 || !self.granularity_bytes.is_power_of_two() {
            return Err(ConfigError::invalid(
                key("granularity_bytes"),
                format!(
                    "must be a positive power of two, got {}",
                    self.granularity_bytes
                ),
            ));
        }
        if self.granularity_bytes > self.capacity_bytes {
            return Err(ConfigError::invalid(
                key("granularity_bytes"),
                "must not exceed capacity_bytes",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PolicyKind {
    /// Scratchpad staging buffer; every vector comes from off-chip.
    Spm,
    Lru,
    Srrip,
    /// Static pin set of the hottest vectors, chosen by profiling.
    Pinning,
}

impl PolicyKind {
    pub fn is_cache(self) -> bool {
        matches!(self, PolicyKind::Lru | PolicyKind::Srrip)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Spm => "SPM",
            PolicyKind::Lru => "LRU",
            PolicyKind::Srrip => "SRRIP",
            PolicyKind::Pinning => "PINNING",
        })
    }
}

fn default_rrpv_bits() -> u32 {
    2
}

fn is_default_rrpv_bits(bits: &u32) -> bool {
    *bits == default_rrpv_bits()
}

/// On-chip management policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub associativity: Option<u64>,
    #[serde(
        default = "default_rrpv_bits",
        skip_serializing_if = "is_default_rrpv_bits"
    )]
    pub rrpv_bits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_size_bytes: Option<u64>,
}

impl PolicyConfig {
    pub fn spm() -> Self {
        Self {
            kind: PolicyKind::Spm,
            associativity: None,
            rrpv_bits: 2,
            line_size_bytes: None,
        }
    }

    pub fn pinning() -> Self {
        Self {
            kind: PolicyKind::Pinning,
            ..Self::spm()
        }
    }

    pub fn lru(associativity: u64, line_size_bytes: u64) -> Self {
        Self {
            kind: PolicyKind::Lru,
            associativity: Some(associativity),
            rrpv_bits: 2,
            line_size_bytes: Some(line_size_bytes),
        }
    }

    pub fn srrip(associativity: u64, line_size_bytes: u64, rrpv_bits: u32) -> Self {
        Self {
            kind: PolicyKind::Srrip,
            associativity: Some(associativity),
            rrpv_bits,
            line_size_bytes: Some(line_size_bytes),
        }
    }

    /// Geometry of a cache policy backed by `level`. Fails for non-cache kinds.
    pub fn cache_geometry(&self, level: &MemLevelConfig) -> Result<CacheGeometry, ConfigError> {
        self.cache_geometry_at("policy", level)
    }

    fn cache_geometry_at(
        &self,
        path: &str,
        level: &MemLevelConfig,
    ) -> Result<CacheGeometry, ConfigError> {
        if !self.kind.is_cache() {
            return Err(ConfigError::invalid(
                format!("{path}.kind"),
                format!("{} is not a cache policy", self.kind),
            ));
        }
        let assoc = self.associativity.ok_or_else(|| {
            ConfigError::invalid(format!("{path}.associativity"), "required for LRU/SRRIP")
        })?;
        let line = self.line_size_bytes.ok_or_else(|| {
            ConfigError::invalid(format!("{path}.line_size_bytes"), "required for LRU/SRRIP")
        })?;
        if assoc == 0 {
            return Err(ConfigError::invalid(
                format!("{path}.associativity"),
                "must be positive",
            ));
        }
        if line == 0 || !line.is_power_of_two() {
            return Err(ConfigError::invalid(
                format!("{path}.line_size_bytes"),
                format!("must be a positive power of two, got {line}"),
            ));
        }
        if self.kind == PolicyKind::Srrip && !(1..=16).contains(&self.rrpv_bits) {
            return Err(ConfigError::invalid(
                format!("{path}.rrpv_bits"),
                "must be in 1..=16",
            ));
        }
        if !level.capacity_bytes.is_multiple_of(line) {
            return Err(ConfigError::invalid(
                format!("{path}.line_size_bytes"),
                "must divide the memory capacity",
            ));
        }
        let lines = level.capacity_bytes / line;
        if !lines.is_multiple_of(assoc) {
            return Err(ConfigError::invalid(
                format!("{path}.associativity"),
                format!("capacity holds {lines} lines, not a multiple of associativity {assoc}"),
            ));
        }
        let num_sets = lines / assoc;
        if num_sets == 0 {
            return Err(ConfigError::invalid(
                format!("{path}.associativity"),
                "cache would have zero sets",
            ));
        }
        Ok(CacheGeometry {
            num_sets,
            ways: assoc,
            line_bytes: line,
        })
    }

    fn validate(&self, path: &str, level: &MemLevelConfig) -> Result<(), ConfigError> {
        if !self.kind.is_cache() {
            return Ok(());
        }
        let geometry = self.cache_geometry_at(path, level)?;
        if geometry.line_bytes != level.granularity_bytes {
            return Err(ConfigError::invalid(
                format!("{path}.line_size_bytes"),
                format!(
                    "must equal the memory granularity ({} bytes)",
                    level.granularity_bytes
                ),
            ));
        }
        Ok(())
    }
}

/// Resolved set-associative layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CacheGeometry {
    pub num_sets: u64,
    pub ways: u64,
    pub line_bytes: u64,
}

fn default_true() -> bool {
    true
}

/// Full machine description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareConfig {
    pub clock_ghz: f64,
    pub num_cores: u32,
    pub sa_rows: u64,
    pub sa_cols: u64,
    pub vector_lanes: u64,
    pub dtype_bytes: u64,
    #[serde(default = "default_true")]
    pub overlap_compute_memory: bool,
    pub local_mem: MemLevelConfig,
    /// Shared buffer between the per-core memories and off-chip memory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_mem: Option<MemLevelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_policy: Option<PolicyConfig>,
    pub offchip: MemLevelConfig,
    pub onchip_policy: PolicyConfig,
}

impl HardwareConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.clock_ghz.is_finite() && self.clock_ghz > 0.0) {
            return Err(ConfigError::invalid(
                "clock_ghz",
                "must be a positive finite number",
            ));
        }
        for (key, value) in [
            ("num_cores", u64::from(self.num_cores)),
            ("sa_rows", self.sa_rows),
            ("sa_cols", self.sa_cols),
            ("vector_lanes", self.vector_lanes),
            ("dtype_bytes", self.dtype_bytes),
        ] {
            if value == 0 {
                return Err(ConfigError::invalid(key, "must be positive"));
            }
        }
        self.local_mem.validate("local_mem")?;
        if !self
            .local_mem
            .capacity_bytes
            .is_multiple_of(self.local_mem.granularity_bytes)
        {
            return Err(ConfigError::invalid(
                "local_mem.granularity_bytes",
                "must divide local_mem.capacity_bytes",
            ));
        }
        self.offchip.validate("offchip")?;
        if !self
            .offchip
            .capacity_bytes
            .is_multiple_of(self.offchip.granularity_bytes)
        {
            return Err(ConfigError::invalid(
                "offchip.granularity_bytes",
                "must divide offchip.capacity_bytes",
            ));
        }
        self.onchip_policy
            .validate("onchip_policy", &self.local_mem)?;
        match (&self.global_mem, &self.global_policy) {
            (None, None) => {}
            (None, Some(_)) => {
                return Err(ConfigError::invalid(
                    "global_policy",
                    "set without global_mem",
                ));
            }
            (Some(_), None) => {
                return Err(ConfigError::invalid(
                    "global_policy",
                    "required when global_mem is set",
                ));
            }
            (Some(level), Some(policy)) => {
                level.validate("global_mem")?;
                if level.granularity_bytes != self.local_mem.granularity_bytes {
                    return Err(ConfigError::invalid(
                        "global_mem.granularity_bytes",
                        "must equal local_mem.granularity_bytes",
                    ));
                }
                policy.validate("global_policy", level)?;
            }
        }
        Ok(())
    }

    /// Local-memory cache layout, when the on-chip policy is a cache.
    pub fn local_cache_geometry(&self) -> Option<CacheGeometry> {
        self.onchip_policy.cache_geometry(&self.local_mem).ok()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("hardware config serializes")
    }
}

impl FromStr for HardwareConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        parse_hardware_config(text)
    }
}

pub fn parse_hardware_config(text: &str) -> Result<HardwareConfig, ConfigError> {
    let hw: HardwareConfig = toml::from_str(text).map_err(ConfigError::parse)?;
    hw.validate()?;
    Ok(hw)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Reduce {
    Sum,
    Mean,
    Max,
}

impl FromStr for Reduce {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(Reduce::Sum),
            "mean" => Ok(Reduce::Mean),
            "max" => Ok(Reduce::Max),
            other => Err(format!(
                "unknown reduce `{other}` (expected sum, mean or max)"
            )),
        }
    }
}

impl fmt::Display for Reduce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reduce::Sum => "sum",
            Reduce::Mean => "mean",
            Reduce::Max => "max",
        })
    }
}

/// `M×K` input times the transpose of an `N×K` weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MatmulLayer {
    pub m: u64,
    pub n: u64,
    pub k: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EmbeddingLayer {
    pub num_tables: u32,
    pub rows_per_table: u64,
    pub dim: u64,
    pub lookups_per_sample: u64,
    pub reduce: Reduce,
}

impl EmbeddingLayer {
    pub fn vector_bytes(&self, dtype_bytes: u64) -> u64 {
        self.dim * dtype_bytes
    }
}

/// One layer of the workload, written as a single line:
///
/// ```text
/// M=256 N=128 K=128
/// matmul M=256 N=128 K=128
/// embedding tables=60 rows=1000000 dim=128 lookups=120 reduce=sum
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layer {
    Matmul(MatmulLayer),
    Embedding(EmbeddingLayer),
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layer::Matmul(l) => write!(f, "matmul M={} N={} K={}", l.m, l.n, l.k),
            Layer::Embedding(l) => write!(
                f,
                "embedding tables={} rows={} dim={} lookups={} reduce={}",
                l.num_tables, l.rows_per_table, l.dim, l.lookups_per_sample, l.reduce
            ),
        }
    }
}

impl FromStr for Layer {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let mut words = line.split_whitespace().peekable();
        let kind = match words.peek() {
            None => return Err("empty layer line".into()),
            Some(w) if w.contains('=') => "matmul",
            Some(_) => words.next().unwrap(),
        };
        let mut fields = Vec::new();
        for word in words {
            let (key, value) = word
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{word}`"))?;
            if fields.iter().any(|(k, _)| *k == key) {
                return Err(format!("duplicate field `{key}`"));
            }
            fields.push((key, value));
        }
        let mut take = |name: &str| -> Result<&str, String> {
            let pos = fields
                .iter()
                .position(|(k, _)| k.eq_ignore_ascii_case(name))
                .ok_or_else(|| format!("missing field `{name}`"))?;
            Ok(fields.remove(pos).1)
        };
        let positive = |name: &str, raw: &str| -> Result<u64, String> {
            match raw.parse::<u64>() {
                Ok(0) => Err(format!("`{name}` must be positive")),
                Ok(v) => Ok(v),
                Err(_) => Err(format!("`{name}` is not a positive integer: `{raw}`")),
            }
        };
        let layer = match kind.to_ascii_lowercase().as_str() {
            "matmul" => Layer::Matmul(MatmulLayer {
                m: positive("M", take("M")?)?,
                n: positive("N", take("N")?)?,
                k: positive("K", take("K")?)?,
            }),
            "embedding" => {
                let tables = positive("tables", take("tables")?)?;
                let num_tables =
                    u32::try_from(tables).map_err(|_| format!("`tables` too large: {tables}"))?;
                let rows_per_table = positive("rows", take("rows")?)?;
                if rows_per_table > u64::from(u32::MAX) + 1 {
                    return Err(format!("`rows` exceeds 2^32: {rows_per_table}"));
                }
                let dim = positive("dim", take("dim")?)?;
                let lookups_per_sample = positive("lookups", take("lookups")?)?;
                let reduce = match take("reduce") {
                    Ok(raw) => raw.parse()?,
                    Err(_) => Reduce::Sum,
                };
                Layer::Embedding(EmbeddingLayer {
                    num_tables,
                    rows_per_table,
                    dim,
                    lookups_per_sample,
                    reduce,
                })
            }
            other => return Err(format!("unknown layer kind `{other}`")),
        };
        if let Some((key, _)) = fields.first() {
            return Err(format!("unknown field `{key}`"));
        }
        Ok(layer)
    }
}

impl Serialize for Layer {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Layer {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let line = String::deserialize(deserializer)?;
        line.parse().map_err(serde::de::Error::custom)
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    pub batch_size: u64,
    pub num_batches: u64,
    /// Clear on-chip state at every batch boundary instead of carrying it over.
    #[serde(default, skip_serializing_if = "is_false")]
    pub reset_state_per_batch: bool,
    pub layers: Vec<Layer>,
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.batch_size == 0 {
            return Err(ConfigError::invalid("batch_size", "must be positive"));
        }
        if self.num_batches == 0 {
            return Err(ConfigError::invalid("num_batches", "must be positive"));
        }
        if self.layers.is_empty() {
            return Err(ConfigError::invalid(
                "layers",
                "at least one layer is required",
            ));
        }
        Ok(())
    }

    pub fn embedding_layers(&self) -> impl Iterator<Item = &EmbeddingLayer> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Embedding(e) => Some(e),
            Layer::Matmul(_) => None,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("workload config serializes")
    }
}

impl FromStr for WorkloadConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        parse_workload_config(text)
    }
}

pub fn parse_workload_config(text: &str) -> Result<WorkloadConfig, ConfigError> {
    let wl: WorkloadConfig = toml::from_str(text).map_err(ConfigError::parse)?;
    wl.validate()?;
    Ok(wl)
}
