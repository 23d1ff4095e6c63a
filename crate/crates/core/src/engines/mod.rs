//! Executors for a stage DAG: chained MapReduce jobs with file-system
//! intermediates, or a single pipelined graph with in-memory edges. Both
//! produce identical rows; they differ in where intermediate data goes and
//! in what the cost model charges for it.

mod cost;
mod exec;
pub mod ops;
pub mod splits;

pub use cost::{Medium, Phase, StageReport};
pub use exec::{execute, ExecutionReport, QueryResult};
pub use splits::{plan_splits, InputFile, SplitPolicy, TaskSplit, DEFAULT_TARGET_SPLIT_BYTES};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Mr,
    Dag,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Mr => "mr",
            EngineKind::Dag => "tez",
        }
    }

    pub fn parse(value: &str) -> Option<Self> {
        match value.to_ascii_lowercase().as_str() {
            "mr" | "mapreduce" => Some(EngineKind::Mr),
            "tez" | "dag" => Some(EngineKind::Dag),
            _ => None,
        }
    }
}

const MIB: f64 = 1024.0 * 1024.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub engine: EngineKind,
    pub slots: usize,
    pub job_startup_ms: f64,
    pub container_startup_ms: f64,
    /// Bytes per simulated millisecond for file-system reads and writes.
    pub dfs_throughput: f64,
    /// Bytes per simulated millisecond across in-memory edges.
    pub edge_throughput: f64,
    pub cpu_rows_per_ms: f64,
    pub split_policy: SplitPolicy,
    pub target_split_bytes: u64,
    /// Each stored row and byte stands for this many in the cost model;
    /// startup charges are not scaled.
    pub data_scale: f64,
    pub stripe_skipping: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            engine: EngineKind::Dag,
            slots: 8,
            job_startup_ms: 1000.0,
            container_startup_ms: 200.0,
            dfs_throughput: 100.0 * MIB / 1000.0,
            edge_throughput: 1024.0 * MIB / 1000.0,
            cpu_rows_per_ms: 1000.0,
            split_policy: SplitPolicy::Combine,
            target_split_bytes: DEFAULT_TARGET_SPLIT_BYTES,
            data_scale: 64.0,
            stripe_skipping: true,
        }
    }
}

fn positive(key: &str, value: &str) -> Result<f64> {
    match value.trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(Error::InvalidOption {
            key: key.to_string(),
            value: value.to_string(),
            message: "expected a positive number".into(),
        }),
    }
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::InvalidOption {
            key: key.to_string(),
            value: value.to_string(),
            message: "expected true or false".into(),
        }),
    }
}

impl EngineConfig {
    /// Applies one SET option. Returns false if the key is not an engine
    /// option, leaving the configuration unchanged.
    pub fn apply_option(&mut self, key: &str, value: &str) -> Result<bool> {
        let value = value.trim();
        match key.to_ascii_lowercase().as_str() {
            "hive.execution.engine" => {
                self.engine = EngineKind::parse(value).ok_or_else(|| Error::InvalidOption {
                    key: key.to_string(),
                    value: value.to_string(),
                    message: "expected mr or tez".into(),
                })?;
            }
            "hive.input.format" => {
                let short = value.rsplit('.').next().unwrap_or(value).to_ascii_lowercase();
                self.split_policy = match short.as_str() {
                    "combinehiveinputformat" | "combine" => SplitPolicy::Combine,
                    "hiveinputformat" | "plain" | "perfile" => SplitPolicy::PerFile,
                    _ => {
                        return Err(Error::InvalidOption {
                            key: key.to_string(),
                            value: value.to_string(),
                            message: "unknown input format".into(),
                        })
                    }
                };
            }
            "minihive.cost.slots" => {
                let v = positive(key, value)?;
                if v.fract() != 0.0 {
                    return Err(Error::InvalidOption { key: key.into(), value: value.into(), message: "expected an integer".into() });
                }
                self.slots = v as usize;
            }
            "minihive.cost.job_startup_ms" => self.job_startup_ms = positive(key, value)?,
            "minihive.cost.container_startup_ms" => self.container_startup_ms = positive(key, value)?,
            "minihive.cost.dfs_throughput" => self.dfs_throughput = positive(key, value)?,
            "minihive.cost.edge_throughput" => self.edge_throughput = positive(key, value)?,
            "minihive.cost.cpu_rows_per_ms" => self.cpu_rows_per_ms = positive(key, value)?,
            "minihive.cost.data_scale" => self.data_scale = positive(key, value)?,
            "minihive.cost.target_split_bytes" | "mapreduce.input.fileinputformat.split.maxsize" => {
                self.target_split_bytes = positive(key, value)?.ceil() as u64;
            }
            "minihive.orc.stripe_skipping" | "hive.optimize.index.filter" => self.stripe_skipping = boolean(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }}
