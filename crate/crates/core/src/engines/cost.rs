//! Per-stage accounting and the simulated clock.

use super::{EngineConfig, EngineKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Medium {
    Dfs,
    /// Task-local spill files of a MapReduce shuffle.
    LocalDisk,
    Memory,
}

impl Medium {
    pub fn name(self) -> &'static str {
        match self {
            Medium::Dfs => "DFS",
            Medium::LocalDisk => "LOCAL",
            Medium::Memory => "MEMORY",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Map,
    Reduce,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub label: String,
    pub job: Option<usize>,
    pub phase: Phase,
    pub tasks: usize,
    pub input: Medium,
    pub output: Medium,
    pub bytes_in: u64,
    pub bytes_out: u64,
    pub rows_in: u64,
    pub rows_out: u64,
    pub job_startup_ms: f64,
    pub startup_ms: f64,
    pub work_ms: f64,
    pub stage_ms: f64,
}

fn rate(config: &EngineConfig, medium: Medium) -> f64 {
    match medium {
        Medium::Dfs | Medium::LocalDisk => config.dfs_throughput,
        Medium::Memory => config.edge_throughput,
    }
}

/// Total I/O and CPU time of a stage spread over all slots.
pub fn work_ms(config: &EngineConfig, s: &StageReport) -> f64 {
    let serial = s.bytes_in as f64 / rate(config, s.input)
        + s.bytes_out as f64 / rate(config, s.output)
        + (s.rows_in + s.rows_out) as f64 / config.cpu_rows_per_ms;
    config.data_scale * serial / config.slots as f64
}

/// Container launch charge for a stage. MapReduce launches a container per
/// task, one wave of `slots` at a time; the graph engine launches its
/// containers once, with the first stage, and reuses them.
pub fn startup_ms(config: &EngineConfig, s: &StageReport, first_stage: bool) -> f64 {
    match config.engine {
        EngineKind::Mr => s.tasks.div_ceil(config.slots) as f64 * config.container_startup_ms,
        EngineKind::Dag if first_stage => config.container_startup_ms,
        EngineKind::Dag => 0.0,
    }
}

pub fn stage_ms(s: &StageReport) -> f64 {
    s.job_startup_ms + s.startup_ms + s.work_ms
}

/// Fills in the timing fields of every stage and returns the total.
pub fn charge(config: &EngineConfig, stages: &mut [StageReport]) -> f64 {
    let mut last_job = None;
    let mut total = 0.0;
    for (i, s) in stages.iter_mut().enumerate() {
        s.job_startup_ms = match (config.engine, s.job) {
            (EngineKind::Mr, Some(j)) if last_job != Some(j) => config.job_startup_ms,
            _ => 0.0,
        };
        last_job = s.job;
        s.startup_ms = startup_ms(config, s, i == 0);
        s.work_ms = work_ms(config, s);
        s.stage_ms = stage_ms(s);
        total += s.stage_ms;
    }
    total
}
