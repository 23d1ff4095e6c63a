//! Line-oriented text form of a plan.

use std::fmt::Write;

use super::{to_mr_chain, EdgeKind, MapInput, StageDag, VertexKind};
use crate::hql::AggregateFunc;

fn agg_label(func: AggregateFunc, arg: Option<&str>) -> String {
    format!("{}({})", func.keyword(), arg.unwrap_or("*"))
}

pub fn explain(dag: &StageDag) -> String {
    let mut out = String::new();
    let col = |v: usize, p: usize| dag.vertices[v].layout[p].name.clone();
    out.push_str("VERTICES\n");
    for v in &dag.vertices {
        let detail = match &v.kind {
            VertexKind::Scan(s) => {
                let cols: Vec<String> = v.layout.iter().map(|c| c.name.clone()).collect();
                let preds: Vec<String> = s
                    .predicates
                    .iter()
                    .map(|p| {
                        let name = &s.table.full_schema()[p.column].name;
                        format!("{name} {} {}", p.op.symbol(), p.value.to_text())
                    })
                    .collect();
                let mut d = format!("{} AS {} columns=[{}]", s.table.qualified_name(), s.binding, cols.join(", "));
                if !preds.is_empty() {
                    let _ = write!(d, " filter=[{}]", preds.join(" AND "));
                }
                if s.table.is_partitioned() {
                    let _ = write!(d, " partitions={}/{}", s.inputs.len(), s.registered_partitions);
                }
                d
            }
            VertexKind::Join { left_keys, right_keys } => {
                let (l, r) = (v.inputs[0], v.inputs[1]);
                let conds: Vec<String> = left_keys
                    .iter()
                    .zip(right_keys)
                    .map(|(a, b)| format!("{} = {}", col(l, *a), col(r, *b)))
                    .collect();
                format!("on=[{}]", conds.join(" AND "))
            }
            VertexKind::Aggregate { group_keys, aggs, partition_wise } => {
                let input = v.inputs[0];
                let keys: Vec<String> = group_keys.iter().map(|k| col(input, *k)).collect();
                let fns: Vec<String> = aggs
                    .iter()
                    .map(|a| agg_label(a.func, a.input.map(|p| col(input, p)).as_deref()))
                    .collect();
                let mut d = format!("keys=[{}] aggs=[{}]", keys.join(", "), fns.join(", "));
                if *partition_wise {
                    d.push_str(" partition-wise");
                }
                d
            }
            VertexKind::Sort { keys } => {
                let ks: Vec<String> = keys
                    .iter()
                    .map(|(p, desc)| format!("{} {}", col(v.id, *p), if *desc { "DESC" } else { "ASC" }))
                    .collect();
                format!("keys=[{}]", ks.join(", "))
            }
            VertexKind::Limit { n } => format!("n={n}"),
        };
        let _ = writeln!(out, "  v{} {} {}", v.id, v.kind.name(), detail);
    }
    out.push_str("EDGES\n");
    for e in &dag.edges {
        let kind = match &e.kind {
            EdgeKind::Pipeline => "PIPELINE".to_string(),
            EdgeKind::Shuffle { single_reducer: true, .. } => "SHUFFLE single".to_string(),
            EdgeKind::Shuffle { keys, .. } => {
                let ks: Vec<String> = keys.iter().map(|k| col(e.from, *k)).collect();
                format!("SHUFFLE [{}]", ks.join(", "))
            }
        };
        let _ = writeln!(out, "  v{} -> v{} {}", e.from, e.to, kind);
    }
    let names: Vec<&str> = dag.output.iter().map(|(n, _)| n.as_str()).collect();
    let _ = writeln!(out, "OUTPUT [{}]", names.join(", "));
    let chain = to_mr_chain(dag, "/tmp");
    out.push_str("STAGES\n");
    for s in &chain.stages {
        let vs: Vec<String> = s.vertices.iter().map(|v| format!("v{v}")).collect();
        let _ = writeln!(out, "  s{} [{}]", s.id, vs.join(" "));
    }
    let _ = writeln!(out, "MR JOBS {}", chain.len());
    for j in &chain.jobs {
        let inputs: Vec<String> = j
            .map_inputs
            .iter()
            .map(|m| match m {
                MapInput::Source { stage } => format!("s{stage}"),
                MapInput::Intermediate { job, .. } => format!("job-{job}"),
            })
            .collect();
        let reduce = j.reduce_stage.map(|s| format!("s{s}")).unwrap_or_else(|| "none".into());
        let _ = writeln!(out, "  job-{} map=[{}] reduce={}", j.id, inputs.join(", "), reduce);
    }
    out
}
