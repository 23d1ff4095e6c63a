//! The stage runner shared by both engines.

use std::collections::HashSet;

use rayon::prelude::*;

use super::cost::{charge, Medium, Phase, StageReport};
use super::ops::{self, Groups};
use super::splits::{is_data_file, plan_splits, InputFile, TaskSplit};
use super::{EngineConfig, EngineKind};
use crate::dfs::Dfs;
use crate::error::Result;
use crate::planner::{to_mr_chain, EdgeKind, MapInput, Stage, StageDag, VertexKind};
use crate::storage::{rowcodec, scan_split, ScanOptions, ScanOutput};
use crate::types::{DataType, Datum, Row};

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionReport {
    pub engine: EngineKind,
    pub result_rows: u64,
    pub simulated_ms: f64,
    pub stages: Vec<StageReport>,
    /// MapReduce jobs launched; zero for the graph engine.
    pub jobs: usize,
    pub vertices: usize,
    /// Containers launched with a startup charge.
    pub containers_started: usize,
    /// Ledger deltas over the whole execution.
    pub dfs_bytes_read: u64,
    pub dfs_bytes_written: u64,
    pub stripes_total: u64,
    pub stripes_skipped: u64,
    pub pruned_bytes: u64,
}

impl ExecutionReport {
    /// The simulated total recomputed from the per-stage breakdown.
    pub fn recompute_ms(&self, config: &EngineConfig) -> f64 {
        let mut stages = self.stages.clone();
        charge(config, &mut stages)
    }

    /// Bytes that crossed stage boundaries through the file system.
    pub fn dfs_edge_bytes(&self) -> u64 {
        self.stages.iter().filter(|s| s.output == Medium::Dfs).map(|s| s.bytes_out).sum()
    }

    pub fn dfs_input_bytes(&self) -> u64 {
        self.stages.iter().filter(|s| s.input == Medium::Dfs).map(|s| s.bytes_in).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub columns: Vec<(String, DataType)>,
    pub rows: Vec<Row>,
    /// Row counts of the final tasks, in output order; writers produce one
    /// file per entry.
    pub writer_tasks: Vec<usize>,
    pub report: ExecutionReport,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct TaskStats {
    bytes_in: u64,
    bytes_out: u64,
    rows_in: u64,
    rows_out: u64,
}

fn encoded(rows: &[Row]) -> u64 {
    rows.iter().map(|r| rowcodec::encoded_len(r)).sum()
}

struct StageRun {
    tasks: Vec<TaskStats>,
    task_rows: Vec<Vec<Row>>,
    /// Set when tasks produced partial groups that the stage merged.
    merged: Option<Vec<Row>>,
    merge_key: Vec<usize>,
    limit: Option<u64>,
    scan: ScanOutput,
}

impl StageRun {
    /// The stage output in its defined order: task order for scans, key
    /// order across reducers for keyed stages. Independent of task counts.
    fn into_output(self) -> Vec<Row> {
        let mut rows = match self.merged {
            Some(rows) => rows,
            None => {
                let many = self.task_rows.len() > 1;
                let mut rows: Vec<Row> = self.task_rows.into_iter().flatten().collect();
                if many && !self.merge_key.is_empty() {
                    let keys: Vec<(usize, bool)> = self.merge_key.iter().map(|&k| (k, false)).collect();
                    ops::stable_sort(&mut rows, &keys);
                }
                rows
            }
        };
        if let Some(n) = self.limit {
            rows.truncate(n as usize);
        }
        rows
    }
}

fn vertex_label(dag: &StageDag, v: usize) -> String {
    format!("v{v} {}", dag.vertices[v].kind.name())
}

fn run_source(dag: &StageDag, stage: &Stage, dfs: &Dfs, config: &EngineConfig) -> Result<StageRun> {
    let VertexKind::Scan(scan) = &dag.vertices[stage.head()].kind else {
        unreachable!("source stages start with a scan")
    };
    let mut files = Vec::new();
    for input in &scan.inputs {
        if !dfs.exists(&input.dir) {
            continue;
        }
        for (path, size) in dfs.files_under(&input.dir)? {
            if is_data_file(&path) {
                files.push(InputFile { path, size, partition: input.key.clone() });
            }
        }
    }
    let mut splits = plan_splits(&files, config.split_policy, config.target_split_bytes, true);
    if splits.is_empty() {
        splits.push(TaskSplit::default());
    }
    let options = ScanOptions {
        projection: scan.projection.clone(),
        predicates: scan.predicates.clone(),
        stripe_skipping: config.stripe_skipping,
    };
    let rest = &stage.vertices[1..];
    let partition_wise = rest.iter().find_map(|&v| match &dag.vertices[v].kind {
        VertexKind::Aggregate { group_keys, aggs, .. } => Some((v, group_keys, aggs)),
        _ => None,
    });
    let limit = rest.iter().find_map(|&v| match dag.vertices[v].kind {
        VertexKind::Limit { n } => Some(n),
        _ => None,
    });
    let outputs: Vec<(ScanOutput, Vec<Row>, Option<Groups>)> = splits
        .par_iter()
        .map(|split| {
            let mut out = ScanOutput::default();
            for (chunk, key) in &split.chunks {
                out.absorb(scan_split(dfs, &scan.table, key.as_ref(), chunk, &options)?);
            }
            let rows = std::mem::take(&mut out.rows);
            match partition_wise {
                Some((v, keys, aggs)) => {
                    let mut groups = Groups::new();
                    ops::aggregate_into(&mut groups, &rows, keys, aggs, &vertex_label(dag, v))?;
                    Ok((out, ops::finish_groups(&groups), Some(groups)))
                }
                None => {
                    let mut rows = rows;
                    if let Some(n) = limit {
                        rows.truncate(n as usize);
                    }
                    Ok((out, rows, None))
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut run = StageRun {
        tasks: Vec::new(),
        task_rows: Vec::new(),
        merged: None,
        merge_key: Vec::new(),
        limit,
        scan: ScanOutput::default(),
    };
    let mut merged = partition_wise.map(|_| Groups::new());
    for (out, rows, partial) in outputs {
        run.tasks.push(TaskStats {
            bytes_in: out.bytes_read,
            bytes_out: encoded(&rows),
            rows_in: out.rows_scanned,
            rows_out: rows.len() as u64,
        });
        run.scan.absorb(out);
        run.task_rows.push(rows);
        if let (Some(m), Some(p)) = (merged.as_mut(), partial) {
            ops::merge_groups(m, p, &vertex_label(dag, partition_wise.unwrap().0))?;
        }
    }
    run.merged = merged.map(|m| ops::finish_groups(&m));
    Ok(run)
}

fn run_reduce(dag: &StageDag, stage: &Stage, inputs: Vec<Vec<Row>>, config: &EngineConfig) -> Result<StageRun> {
    let head = stage.head();
    let shuffles: Vec<(&Vec<usize>, bool)> = stage
        .shuffle_inputs
        .iter()
        .map(|&e| match &dag.edges[e].kind {
            EdgeKind::Shuffle { keys, single_reducer } => (keys, *single_reducer),
            EdgeKind::Pipeline => unreachable!("reduce stages start at a shuffle"),
        })
        .collect();
    let keyed: Vec<Vec<(Vec<Datum>, Row)>> = inputs
        .into_iter()
        .zip(&shuffles)
        .map(|(rows, (keys, _))| rows.into_iter().map(|r| (ops::key_of(&r, keys), r)).collect())
        .collect();
    let single = shuffles.iter().any(|(_, s)| *s);
    let reducers = if single {
        1
    } else {
        let distinct: HashSet<&Vec<Datum>> = keyed.iter().flatten().map(|(k, _)| k).collect();
        distinct.len().clamp(1, config.slots)
    };
    let mut buckets: Vec<Vec<Vec<Row>>> = vec![vec![Vec::new(); keyed.len()]; reducers];
    for (i, rows) in keyed.into_iter().enumerate() {
        for (k, r) in rows {
            let p = if reducers == 1 { 0 } else { ops::partition_of(&k, reducers) };
            buckets[p][i].push(r);
        }
    }
    let limit = stage.vertices[1..].iter().find_map(|&v| match dag.vertices[v].kind {
        VertexKind::Limit { n } => Some(n),
        _ => None,
    });
    let label = vertex_label(dag, head);
    let kind = &dag.vertices[head].kind;
    let outputs: Vec<(TaskStats, Vec<Row>)> = buckets
        .into_par_iter()
        .map(|mut bucket| {
            let rows_in: u64 = bucket.iter().map(|b| b.len() as u64).sum();
            let bytes_in: u64 = bucket.iter().map(|b| encoded(b)).sum();
            let mut rows = match kind {
                VertexKind::Join { left_keys, right_keys } => {
                    let right = bucket.pop().unwrap();
                    let left = bucket.pop().unwrap();
                    ops::hash_join(left, right, left_keys, right_keys)
                }
                VertexKind::Aggregate { group_keys, aggs, .. } => {
                    let mut groups = Groups::new();
                    ops::aggregate_into(&mut groups, &bucket[0], group_keys, aggs, &label)?;
                    ops::ensure_global_row(&mut groups, group_keys, aggs);
                    ops::finish_groups(&groups)
                }
                VertexKind::Sort { keys } => {
                    let mut rows = bucket.pop().unwrap();
                    ops::stable_sort(&mut rows, keys);
                    rows
                }
                VertexKind::Scan(_) | VertexKind::Limit { .. } => unreachable!("not a shuffle consumer"),
            };
            if let Some(n) = limit {
                rows.truncate(n as usize);
            }
            let stats = TaskStats { bytes_in, bytes_out: encoded(&rows), rows_in, rows_out: rows.len() as u64 };
            Ok((stats, rows))
        })
        .collect::<Result<_>>()?;
    let merge_key = match kind {
        VertexKind::Join { left_keys, .. } => left_keys.clone(),
        VertexKind::Aggregate { group_keys, .. } => (0..group_keys.len()).collect(),
        _ => Vec::new(),
    };
    let (tasks, task_rows) = outputs.into_iter().unzip();
    Ok(StageRun { tasks, task_rows, merged: None, merge_key, limit, scan: ScanOutput::default() })
}

fn sum_stats(tasks: &[TaskStats]) -> TaskStats {
    tasks.iter().fold(TaskStats::default(), |a, t| TaskStats {
        bytes_in: a.bytes_in + t.bytes_in,
        bytes_out: a.bytes_out + t.bytes_out,
        rows_in: a.rows_in + t.rows_in,
        rows_out: a.rows_out + t.rows_out,
    })
}

fn report_stage(label: String, job: Option<usize>, phase: Phase, tasks: &[TaskStats], input: Medium, output: Medium) -> StageReport {
    let t = sum_stats(tasks);
    StageReport {
        label,
        job,
        phase,
        tasks: tasks.len().max(1),
        input,
        output,
        bytes_in: t.bytes_in,
        bytes_out: t.bytes_out,
        rows_in: t.rows_in,
        rows_out: t.rows_out,
        job_startup_ms: 0.0,
        startup_ms: 0.0,
        work_ms: 0.0,
        stage_ms: 0.0,
    }
}

/// Writes one row file per task under `dir`; returns the paths in task order.
fn write_task_files(dfs: &Dfs, dir: &str, task_rows: &[Vec<Row>]) -> Result<Vec<InputFile>> {
    let mut files = Vec::new();
    for (i, rows) in task_rows.iter().enumerate() {
        let path = format!("{dir}/{i:06}_0");
        let size = dfs.write_file(&path, &rowcodec::encode_rows(rows))?;
        files.push(InputFile { path, size, partition: None });
    }
    Ok(files)
}

/// Map tasks of a later job reading an earlier job's output back from the
/// file system; returns their stats and the rows in file order.
fn read_back(dfs: &Dfs, files: &[InputFile], config: &EngineConfig) -> Result<(Vec<TaskStats>, Vec<Vec<Row>>)> {
    let mut splits = plan_splits(files, config.split_policy, config.target_split_bytes, false);
    if splits.is_empty() {
        splits.push(TaskSplit::default());
    }
    let mut stats = Vec::new();
    let mut per_file = Vec::new();
    for split in &splits {
        let mut t = TaskStats::default();
        for (chunk, _) in &split.chunks {
            let bytes = dfs.read_file(&chunk.path)?;
            let rows = rowcodec::decode_rows(&bytes)?;
            t.bytes_in += bytes.len() as u64;
            t.rows_in += rows.len() as u64;
            t.rows_out += rows.len() as u64;
            t.bytes_out += bytes.len() as u64;
            per_file.push(rows);
        }
        stats.push(t);
    }
    Ok((stats, per_file))
}

/// Runs a compiled query. `scratch` is a file-system directory for MapReduce
/// intermediates; it is removed afterwards.
pub fn execute(dag: &StageDag, dfs: &Dfs, config: &EngineConfig, scratch: &str) -> Result<QueryResult> {
    let before = dfs.ledger().snapshot();
    let chain = to_mr_chain(dag, scratch);
    let stages = &chain.stages;
    let sink_stage = stages.len() - 1;
    let job_of_stage = |s: usize| chain.jobs.iter().position(|j| j.reduce_stage == Some(s));

    let mut outputs: Vec<Option<Vec<Row>>> = vec![None; stages.len()];
    let mut runs_stats: Vec<Vec<TaskStats>> = vec![Vec::new(); stages.len()];
    let mut read_backs: Vec<Vec<TaskStats>> = vec![Vec::new(); stages.len()];
    let mut writer_tasks = Vec::new();
    let mut scan_total = ScanOutput::default();

    let result = (|| -> Result<Vec<Row>> {
        for stage in stages {
            let run = if stage.is_source() {
                run_source(dag, stage, dfs, config)?
            } else {
                let mut inputs = Vec::new();
                for &e in &stage.shuffle_inputs {
                    let from = stages.iter().position(|s| s.tail() == dag.edges[e].from).unwrap();
                    inputs.push(outputs[from].take().expect("producer ran first"));
                }
                run_reduce(dag, stage, inputs, config)?
            };
            runs_stats[stage.id] = run.tasks.clone();
            scan_total.bytes_read += run.scan.bytes_read;
            scan_total.rows_scanned += run.scan.rows_scanned;
            scan_total.stripes_total += run.scan.stripes_total;
            scan_total.stripes_skipped += run.scan.stripes_skipped;
            if stage.id == sink_stage {
                writer_tasks = run.task_rows.iter().map(Vec::len).collect();
            }
            let is_job_output = config.engine == EngineKind::Mr
                && (job_of_stage(stage.id).is_some() || (stage.id == sink_stage && stage.is_source()));
            if is_job_output {
                let job = job_of_stage(stage.id).unwrap_or(0);
                let files = write_task_files(dfs, &chain.jobs[job].output_path, &run.task_rows)?;
                if stage.id != sink_stage {
                    let (stats, per_file) = read_back(dfs, &files, config)?;
                    read_backs[stage.id] = stats;
                    let reread = StageRun { task_rows: per_file, ..run };
                    outputs[stage.id] = Some(reread.into_output());
                    continue;
                }
            }
            outputs[stage.id] = Some(run.into_output());
        }
        Ok(outputs[sink_stage].take().unwrap())
    })();
    if config.engine == EngineKind::Mr {
        dfs.remove(scratch)?;
    }
    let sink_rows = result?;

    let mut reports = Vec::new();
    match config.engine {
        EngineKind::Dag => {
            for s in stages {
                let names: Vec<&str> = s.vertices.iter().map(|&v| dag.vertices[v].kind.name()).collect();
                let (phase, input) = if s.is_source() { (Phase::Map, Medium::Dfs) } else { (Phase::Reduce, Medium::Memory) };
                reports.push(report_stage(
                    format!("s{} {}", s.id, names.join("+")),
                    None,
                    phase,
                    &runs_stats[s.id],
                    input,
                    Medium::Memory,
                ));
            }
        }
        EngineKind::Mr => {
            for job in &chain.jobs {
                let mut map_tasks = Vec::new();
                for input in &job.map_inputs {
                    match input {
                        MapInput::Source { stage } => map_tasks.extend(runs_stats[*stage].iter().copied()),
                        MapInput::Intermediate { stage, .. } => map_tasks.extend(read_backs[*stage].iter().copied()),
                    }
                }
                let map_out = if job.reduce_stage.is_some() { Medium::LocalDisk } else { Medium::Dfs };
                reports.push(report_stage(format!("job-{} map", job.id), Some(job.id), Phase::Map, &map_tasks, Medium::Dfs, map_out));
                if let Some(r) = job.reduce_stage {
                    reports.push(report_stage(
                        format!("job-{} reduce", job.id),
                        Some(job.id),
                        Phase::Reduce,
                        &runs_stats[r],
                        Medium::LocalDisk,
                        Medium::Dfs,
                    ));
                }
            }
        }
    }
    let simulated_ms = charge(config, &mut reports);
    let containers_started = match config.engine {
        EngineKind::Mr => reports.iter().map(|s| s.tasks).sum(),
        EngineKind::Dag => reports.iter().map(|s| s.tasks).max().unwrap_or(1).min(config.slots),
    };
    let after = dfs.ledger().snapshot();

    let layout_types = dag.output_types();
    let rows: Vec<Row> = sink_rows
        .into_iter()
        .map(|r| dag.output.iter().map(|(_, p)| r[*p].clone()).collect())
        .collect();
    let mut remaining = rows.len();
    for w in writer_tasks.iter_mut() {
        *w = (*w).min(remaining);
        remaining -= *w;
    }
    let report = ExecutionReport {
        engine: config.engine,
        result_rows: rows.len() as u64,
        simulated_ms,
        jobs: if config.engine == EngineKind::Mr { chain.jobs.len() } else { 0 },
        vertices: dag.vertices.len(),
        containers_started,
        dfs_bytes_read: after.bytes_read - before.bytes_read,
        dfs_bytes_written: after.bytes_written - before.bytes_written,
        stripes_total: scan_total.stripes_total,
        stripes_skipped: scan_total.stripes_skipped,
        pruned_bytes: dag
            .vertices
            .iter()
            .map(|v| match &v.kind {
                VertexKind::Scan(s) => s.pruned_bytes,
                _ => 0,
            })
            .sum(),
        stages: reports,
    };
    Ok(QueryResult {
        columns: dag.output.iter().map(|(n, _)| n.clone()).zip(layout_types).collect(),
        rows,
        writer_tasks,
        report,
    })
}
