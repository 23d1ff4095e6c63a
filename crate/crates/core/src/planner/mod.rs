//! Compilation of a `Select` into a stage DAG, partition pruning, and the
//! derived MapReduce job chain.

mod explain;
mod mr;

pub use explain::explain;
pub use mr::{to_mr_chain, MapInput, MrJob, MrJobChain};

use std::collections::BTreeSet;

use crate::dfs::Dfs;
use crate::error::{Error, Result};
use crate::hql::{AggregateFunc, ColumnRef, Expr, Literal, Select, SelectItem};
use crate::metastore::{Metastore, PartitionKey, TableDef, TableEntry};
use crate::storage::{partition_values, ColumnPredicate};
use crate::types::{DataType, Datum};

pub type VertexId = usize;

/// One directory of input data: a partition, or the table root.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDir {
    pub key: Option<PartitionKey>,
    pub dir: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanVertex {
    pub table: TableDef,
    pub binding: String,
    pub inputs: Vec<InputDir>,
    /// Indices into the table's full schema, in emitted order.
    pub projection: Vec<usize>,
    pub predicates: Vec<ColumnPredicate>,
    pub pruned_bytes: u64,
    pub registered_partitions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggSpec {
    pub func: AggregateFunc,
    /// Input position; `None` for COUNT(*).
    pub input: Option<usize>,
    pub input_type: Option<DataType>,
}

impl AggSpec {
    pub fn output_type(&self) -> DataType {
        match (self.func, self.input_type) {
            (AggregateFunc::CountStar | AggregateFunc::Count, _) => DataType::Int,
            (AggregateFunc::Avg, _) => DataType::Double,
            (AggregateFunc::Sum, Some(DataType::Int)) => DataType::Int,
            (AggregateFunc::Sum, _) => DataType::Double,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VertexKind {
    Scan(Box<ScanVertex>),
    /// Inner equi-join; output is the left row followed by the right row.
    Join { left_keys: Vec<usize>, right_keys: Vec<usize> },
    /// Output is the group keys followed by the aggregates.
    Aggregate { group_keys: Vec<usize>, aggs: Vec<AggSpec>, partition_wise: bool },
    Sort { keys: Vec<(usize, bool)> },
    Limit { n: u64 },
}

impl VertexKind {
    pub fn name(&self) -> &'static str {
        match self {
            VertexKind::Scan(_) => "SCAN",
            VertexKind::Join { .. } => "JOIN",
            VertexKind::Aggregate { .. } => "AGGREGATE",
            VertexKind::Sort { .. } => "SORT",
            VertexKind::Limit { .. } => "LIMIT",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutColumn {
    pub name: String,
    pub dtype: DataType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: VertexId,
    pub kind: VertexKind,
    /// Upstream vertices; a join lists its left input first.
    pub inputs: Vec<VertexId>,
    pub layout: Vec<LayoutColumn>,
    pub estimated_input_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeKind {
    /// Repartition by key columns of the producing vertex. A single-reducer
    /// shuffle sends everything to one task (total order, global aggregate).
    Shuffle { keys: Vec<usize>, single_reducer: bool },
    Pipeline,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: VertexId,
    pub to: VertexId,
    pub kind: EdgeKind,
}

/// A maximal chain of vertices joined by pipeline edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub id: usize,
    pub vertices: Vec<VertexId>,
    /// Indices into `StageDag::edges` of the shuffles feeding this stage.
    pub shuffle_inputs: Vec<usize>,
    pub output_edge: Option<usize>,
}

impl Stage {
    pub fn head(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn tail(&self) -> VertexId {
        *self.vertices.last().unwrap()
    }

    pub fn is_source(&self) -> bool {
        self.shuffle_inputs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageDag {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    /// Result columns: name and position in the sink's layout.
    pub output: Vec<(String, usize)>,
}

impl StageDag {
    pub fn sink(&self) -> VertexId {
        self.vertices
            .iter()
            .find(|v| !self.edges.iter().any(|e| e.from == v.id))
            .map(|v| v.id)
            .expect("a DAG always has a sink")
    }

    pub fn output_types(&self) -> Vec<DataType> {
        let layout = &self.vertices[self.sink()].layout;
        self.output.iter().map(|(_, p)| layout[*p].dtype).collect()
    }

    pub fn output_edge(&self, v: VertexId) -> Option<usize> {
        self.edges.iter().position(|e| e.from == v)
    }

    pub fn input_edges(&self, v: VertexId) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.edges.len()).filter(|&i| self.edges[i].to == v).collect();
        let order = |i: &usize| self.vertices[v].inputs.iter().position(|x| *x == self.edges[*i].from);
        idx.sort_by_key(order);
        idx
    }

    pub fn count(&self, name: &str) -> usize {
        self.vertices.iter().filter(|v| v.kind.name() == name).count()
    }

    pub fn shuffle_count(&self) -> usize {
        self.edges.iter().filter(|e| matches!(e.kind, EdgeKind::Shuffle { .. })).count()
    }

    /// Stages in topological order.
    pub fn stages(&self) -> Vec<Stage> {
        let mut stages: Vec<Stage> = Vec::new();
        for v in &self.vertices {
            let inputs = self.input_edges(v.id);
            let pipelined = inputs.len() == 1 && self.edges[inputs[0]].kind == EdgeKind::Pipeline;
            if pipelined {
                continue;
            }
            let mut chain = vec![v.id];
            let mut cur = v.id;
            while let Some(e) = self.output_edge(cur) {
                if self.edges[e].kind != EdgeKind::Pipeline {
                    break;
                }
                cur = self.edges[e].to;
                chain.push(cur);
            }
            stages.push(Stage {
                id: 0,
                vertices: chain,
                shuffle_inputs: inputs,
                output_edge: self.output_edge(cur),
            });
        }
        // Vertices are created in dependency order, so ordering stages by the
        // largest vertex id they contain is topological.
        stages.sort_by_key(|s| s.tail());
        for (i, s) in stages.iter_mut().enumerate() {
            s.id = i;
        }
        stages
    }

    /// Checks the structural invariants: acyclic (inputs precede their
    /// consumer), a single sink, and every vertex has at most one consumer.
    pub fn validate(&self) -> Result<()> {
        for e in &self.edges {
            if e.from >= e.to {
                return Err(Error::execution(format!("v{}", e.to), "edge against vertex order"));
            }
        }
        for v in &self.vertices {
            if self.edges.iter().filter(|e| e.from == v.id).count() > 1 {
                return Err(Error::execution(format!("v{}", v.id), "more than one consumer"));
            }
        }
        let sinks = self.vertices.iter().filter(|v| !self.edges.iter().any(|e| e.from == v.id)).count();
        if sinks != 1 {
            return Err(Error::execution("dag", format!("{sinks} sinks")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneResult {
    pub selected: Vec<PartitionKey>,
    pub pruned_bytes: u64,
}

fn dir_bytes(dfs: &Dfs, dir: &str) -> Result<u64> {
    if !dfs.exists(dir) {
        return Ok(0);
    }
    Ok(dfs.files_under(dir)?.iter().map(|(_, s)| s).sum())
}

/// Keeps the registered partitions whose directory values can satisfy every
/// predicate on a partition column. Predicates on data columns are ignored.
pub fn prune_partitions(entry: &TableEntry, predicates: &[ColumnPredicate], dfs: &Dfs) -> Result<PruneResult> {
    let table = &entry.def;
    let data_cols = table.columns.len();
    let mut selected = Vec::new();
    let mut pruned_bytes = 0;
    for key in entry.partitions() {
        let values = partition_values(table, Some(key));
        let keep = predicates
            .iter()
            .filter(|p| p.column >= data_cols)
            .all(|p| p.matches(&values[p.column - data_cols]));
        if keep {
            selected.push(key.clone());
        } else {
            pruned_bytes += dir_bytes(dfs, &table.partition_dir(key))?;
        }
    }
    Ok(PruneResult { selected, pruned_bytes })
}

struct Source {
    binding: String,
    entry: TableEntry,
    /// Referenced full-schema columns, excluding WHERE-only ones.
    used: BTreeSet<usize>,
    predicates: Vec<ColumnPredicate>,
}

struct Resolver {
    sources: Vec<Source>,
}

impl Resolver {
    fn resolve(&self, c: &ColumnRef) -> Result<(usize, usize)> {
        let mut found = None;
        for (i, s) in self.sources.iter().enumerate() {
            if let Some(q) = &c.qualifier {
                if q != &s.binding {
                    continue;
                }
            }
            if let Some(col) = s.entry.def.column_index(&c.name) {
                if found.is_some() {
                    return Err(Error::Resolution(format!("column {} is ambiguous", c.name)));
                }
                found = Some((i, col));
            }
        }
        if let Some(q) = &c.qualifier {
            if !self.sources.iter().any(|s| &s.binding == q) {
                return Err(Error::Resolution(format!("unknown table or alias {q}")));
            }
        }
        found.ok_or_else(|| {
            Error::Resolution(match &c.qualifier {
                Some(q) => format!("unknown column {q}.{}", c.name),
                None => format!("unknown column {}", c.name),
            })
        })
    }

    fn dtype(&self, (s, c): (usize, usize)) -> DataType {
        self.sources[s].entry.def.full_schema()[c].dtype
    }

    fn display(&self, (s, c): (usize, usize)) -> String {
        format!("{}.{}", self.sources[s].binding, self.sources[s].entry.def.full_schema()[c].name)
    }
}

fn literal_datum(lit: &Literal) -> Datum {
    match lit {
        Literal::Int(v) => Datum::Int(*v),
        Literal::Double(v) => Datum::Double(*v),
        Literal::Str(s) => Datum::Str(s.clone()),
    }
}

fn check_comparable(column: &str, dtype: DataType, value: &Datum) -> Result<()> {
    let ok = match value.data_type() {
        Some(t) => t.is_numeric() == dtype.is_numeric(),
        None => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Type(format!("cannot compare {dtype} column {column} with {}", value.to_text())))
    }
}

fn same_column(a: &ColumnRef, b: &ColumnRef) -> bool {
    a.name == b.name && (a.qualifier == b.qualifier || a.qualifier.is_none() || b.qualifier.is_none())
}

struct Builder {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

impl Builder {
    fn add(&mut self, kind: VertexKind, inputs: Vec<(VertexId, EdgeKind)>, layout: Vec<LayoutColumn>) -> VertexId {
        let id = self.vertices.len();
        let estimated_input_bytes = match &kind {
            VertexKind::Scan(s) => s.inputs.iter().map(|i| i.bytes).sum(),
            _ => inputs.iter().map(|(v, _)| self.vertices[*v].estimated_input_bytes).sum(),
        };
        for (from, kind) in &inputs {
            self.edges.push(Edge { from: *from, to: id, kind: kind.clone() });
        }
        self.vertices.push(Vertex {
            id,
            kind,
            inputs: inputs.into_iter().map(|(v, _)| v).collect(),
            layout,
            estimated_input_bytes,
        });
        id
    }
}

/// Compiles a query against the catalog. `database` resolves unqualified
/// table names.
pub fn plan(select: &Select, catalog: &Metastore, dfs: &Dfs, database: &str) -> Result<StageDag> {
    let mut refs = vec![&select.from];
    refs.extend(select.joins.iter().map(|j| &j.table));
    let mut sources = Vec::new();
    for r in refs {
        let db = r.name.database.as_deref().unwrap_or(database);
        let entry = catalog.table(db, &r.name.name)?.clone();
        let binding = r.binding().to_string();
        if sources.iter().any(|s: &Source| s.binding == binding) {
            return Err(Error::Resolution(format!("duplicate table alias {binding}")));
        }
        sources.push(Source { binding, entry, used: BTreeSet::new(), predicates: Vec::new() });
    }
    let mut rs = Resolver { sources };

    let aggregating = select.has_aggregates() || !select.group_by.is_empty();

    // WHERE terms are single-column comparisons, so every one is pushed into
    // the scan of its table.
    for cmp in &select.selection {
        let (s, c) = rs.resolve(&cmp.column)?;
        let value = literal_datum(&cmp.value);
        check_comparable(&rs.display((s, c)), rs.dtype((s, c)), &value)?;
        rs.sources[s].predicates.push(ColumnPredicate { column: c, op: cmp.op, value });
    }

    // Everything else that names a column must be emitted by a scan.
    let mut used: Vec<(usize, usize)> = Vec::new();
    for item in &select.projections {
        match item {
            SelectItem::Wildcard => {
                for (s, src) in rs.sources.iter().enumerate() {
                    used.extend((0..src.entry.def.full_schema().len()).map(|c| (s, c)));
                }
            }
            SelectItem::Expr { expr: Expr::Column(c), .. } => used.push(rs.resolve(c)?),
            SelectItem::Expr { expr: Expr::Aggregate { arg: Some(c), .. }, .. } => used.push(rs.resolve(c)?),
            SelectItem::Expr { .. } => {}
        }
    }
    for j in &select.joins {
        for (l, r) in &j.on {
            used.push(rs.resolve(l)?);
            used.push(rs.resolve(r)?);
        }
    }
    for g in &select.group_by {
        used.push(rs.resolve(g)?);
    }
    let aliases: Vec<(&str, usize)> = select
        .projections
        .iter()
        .enumerate()
        .filter_map(|(i, p)| match p {
            SelectItem::Expr { alias: Some(a), .. } => Some((a.as_str(), i)),
            _ => None,
        })
        .collect();
    for o in &select.order_by {
        match &o.expr {
            Expr::Column(c) if c.qualifier.is_none() && aliases.iter().any(|(a, _)| *a == c.name) => {}
            Expr::Column(c) => used.push(rs.resolve(c)?),
            Expr::Aggregate { arg: Some(c), .. } => used.push(rs.resolve(c)?),
            Expr::Aggregate { .. } => {}
        }
    }
    for (s, c) in used {
        rs.sources[s].used.insert(c);
    }

    let mut b = Builder { vertices: Vec::new(), edges: Vec::new() };
    // Position of each (source, column) in the current row layout.
    let mut positions: Vec<((usize, usize), usize)> = Vec::new();
    let mut scans = Vec::new();
    for (si, src) in rs.sources.iter().enumerate() {
        let def = &src.entry.def;
        let (inputs, pruned_bytes) = if def.is_partitioned() {
            let pr = prune_partitions(&src.entry, &src.predicates, dfs)?;
            let inputs = pr
                .selected
                .iter()
                .map(|k| {
                    let dir = def.partition_dir(k);
                    Ok(InputDir { key: Some(k.clone()), bytes: dir_bytes(dfs, &dir)?, dir })
                })
                .collect::<Result<Vec<_>>>()?;
            (inputs, pr.pruned_bytes)
        } else {
            (vec![InputDir { key: None, dir: def.location.clone(), bytes: dir_bytes(dfs, &def.location)? }], 0)
        };
        let projection: Vec<usize> = src.used.iter().copied().collect();
        let schema = def.full_schema();
        let layout = projection
            .iter()
            .map(|&c| LayoutColumn { name: format!("{}.{}", src.binding, schema[c].name), dtype: schema[c].dtype })
            .collect();
        let scan = ScanVertex {
            table: def.clone(),
            binding: src.binding.clone(),
            inputs,
            projection,
            predicates: src.predicates.clone(),
            pruned_bytes,
            registered_partitions: src.entry.partitions().count(),
        };
        scans.push((si, b.add(VertexKind::Scan(Box::new(scan)), vec![], layout)));
    }

    let first = scans[0].1;
    for (k, &c) in rs.sources[0].used.iter().enumerate() {
        positions.push(((0, c), k));
    }
    let mut current = first;
    for (ji, join) in select.joins.iter().enumerate() {
        let right_src = ji + 1;
        let right = scans[right_src].1;
        let right_pos = |c: usize| rs.sources[right_src].used.iter().position(|x| *x == c).unwrap();
        let mut left_keys = Vec::new();
        let mut right_keys = Vec::new();
        for (l, r) in &join.on {
            let (a, b2) = (rs.resolve(l)?, rs.resolve(r)?);
            let (lk, rk) = if a.0 == right_src && b2.0 < right_src {
                (b2, a)
            } else if b2.0 == right_src && a.0 < right_src {
                (a, b2)
            } else {
                return Err(Error::Resolution(format!(
                    "join condition {} = {} must relate {} to an earlier table",
                    rs.display(a),
                    rs.display(b2),
                    rs.sources[right_src].binding
                )));
            };
            let (lt, rt) = (rs.dtype(lk), rs.dtype(rk));
            if lt != rt {
                return Err(Error::Type(format!(
                    "join key {} is {lt} but {} is {rt}",
                    rs.display(lk),
                    rs.display(rk)
                )));
            }
            left_keys.push(positions.iter().find(|(k, _)| *k == lk).unwrap().1);
            right_keys.push(right_pos(rk.1));
        }
        let offset = b.vertices[current].layout.len();
        for (k, &c) in rs.sources[right_src].used.iter().enumerate() {
            positions.push(((right_src, c), offset + k));
        }
        let mut layout = b.vertices[current].layout.clone();
        layout.extend(b.vertices[right].layout.clone());
        current = b.add(
            VertexKind::Join { left_keys: left_keys.clone(), right_keys: right_keys.clone() },
            vec![
                (current, EdgeKind::Shuffle { keys: left_keys, single_reducer: false }),
                (right, EdgeKind::Shuffle { keys: right_keys, single_reducer: false }),
            ],
            layout,
        );
    }
    let pos_of = |rs: &Resolver, c: &ColumnRef| -> Result<usize> {
        let key = rs.resolve(c)?;
        Ok(positions.iter().find(|(k, _)| *k == key).unwrap().1)
    };

    let output_name = |i: usize, item: &SelectItem| match item {
        SelectItem::Expr { alias: Some(a), .. } => a.clone(),
        SelectItem::Expr { expr: Expr::Column(c), .. } => c.name.clone(),
        _ => format!("_c{i}"),
    };

    let mut output: Vec<(String, usize)> = Vec::new();
    let mut sort_keys: Vec<(usize, bool)> = Vec::new();
    if aggregating {
        let input_layout = b.vertices[current].layout.clone();
        let group_keys: Vec<usize> = select.group_by.iter().map(|g| pos_of(&rs, g)).collect::<Result<_>>()?;
        let mut aggs: Vec<(Expr, AggSpec)> = Vec::new();
        let mut agg_index = |e: &Expr, rs: &Resolver| -> Result<usize> {
            if let Some(i) = aggs.iter().position(|(x, _)| x == e) {
                return Ok(i);
            }
            let Expr::Aggregate { func, arg } = e else { unreachable!() };
            let input = arg.as_ref().map(|c| pos_of(rs, c)).transpose()?;
            let input_type = input.map(|p| input_layout[p].dtype);
            if matches!(func, AggregateFunc::Sum | AggregateFunc::Avg) && input_type == Some(DataType::String) {
                return Err(Error::Type(format!("{} over string column {}", func.keyword(), input_layout[input.unwrap()].name)));
            }
            aggs.push((e.clone(), AggSpec { func: *func, input, input_type }));
            Ok(aggs.len() - 1)
        };
        let nkeys = group_keys.len();
        let mut item_pos = Vec::new();
        for item in &select.projections {
            let p = match item {
                SelectItem::Expr { expr: Expr::Column(c), .. } => {
                    let at = select.group_by.iter().position(|g| same_column(g, c)).unwrap();
                    at
                }
                SelectItem::Expr { expr, .. } => nkeys + agg_index(expr, &rs)?,
                SelectItem::Wildcard => unreachable!("rejected by the parser"),
            };
            item_pos.push(p);
        }
        for o in &select.order_by {
            let p = match &o.expr {
                Expr::Column(c) if c.qualifier.is_none() && aliases.iter().any(|(a, _)| *a == c.name) => {
                    let i = aliases.iter().find(|(a, _)| *a == c.name).unwrap().1;
                    item_pos[i]
                }
                Expr::Column(c) => select
                    .group_by
                    .iter()
                    .position(|g| same_column(g, c))
                    .ok_or_else(|| Error::Resolution(format!("ORDER BY column {} is not grouped", c.name)))?,
                e => nkeys + agg_index(e, &rs)?,
            };
            sort_keys.push((p, o.descending));
        }
        let mut layout: Vec<LayoutColumn> = group_keys.iter().map(|&k| input_layout[k].clone()).collect();
        for (e, spec) in &aggs {
            layout.push(LayoutColumn { name: crate::hql::render_expr(e), dtype: spec.output_type() });
        }
        let partition_wise = select.joins.is_empty() && !group_keys.is_empty() && {
            let def = &rs.sources[0].entry.def;
            select.group_by.iter().all(|g| rs.resolve(g).map(|(_, c)| c >= def.columns.len()).unwrap_or(false))
        };
        let edge = if partition_wise {
            EdgeKind::Pipeline
        } else {
            EdgeKind::Shuffle { keys: group_keys.clone(), single_reducer: group_keys.is_empty() }
        };
        current = b.add(
            VertexKind::Aggregate { group_keys, aggs: aggs.into_iter().map(|(_, s)| s).collect(), partition_wise },
            vec![(current, edge)],
            layout,
        );
        for (i, item) in select.projections.iter().enumerate() {
            output.push((output_name(i, item), item_pos[i]));
        }
    } else {
        for (i, item) in select.projections.iter().enumerate() {
            match item {
                SelectItem::Wildcard => {
                    for (s, src) in rs.sources.iter().enumerate() {
                        for (c, col) in src.entry.def.full_schema().iter().enumerate() {
                            let p = positions.iter().find(|(k, _)| *k == (s, c)).unwrap().1;
                            output.push((col.name.clone(), p));
                        }
                    }
                }
                SelectItem::Expr { expr: Expr::Column(c), .. } => output.push((output_name(i, item), pos_of(&rs, c)?)),
                SelectItem::Expr { .. } => unreachable!("aggregates make the query aggregating"),
            }
        }
        for o in &select.order_by {
            let p = match &o.expr {
                Expr::Column(c) if c.qualifier.is_none() && aliases.iter().any(|(a, _)| *a == c.name) => {
                    let i = aliases.iter().find(|(a, _)| *a == c.name).unwrap().1;
                    let SelectItem::Expr { expr: Expr::Column(src), .. } = &select.projections[i] else { unreachable!() };
                    pos_of(&rs, src)?
                }
                Expr::Column(c) => pos_of(&rs, c)?,
                Expr::Aggregate { .. } => unreachable!("rejected by the parser"),
            };
            sort_keys.push((p, o.descending));
        }
    }

    if !sort_keys.is_empty() {
        let layout = b.vertices[current].layout.clone();
        let keys: Vec<usize> = sort_keys.iter().map(|k| k.0).collect();
        current = b.add(
            VertexKind::Sort { keys: sort_keys },
            vec![(current, EdgeKind::Shuffle { keys, single_reducer: true })],
            layout,
        );
    }
    if let Some(n) = select.limit {
        let layout = b.vertices[current].layout.clone();
        b.add(VertexKind::Limit { n }, vec![(current, EdgeKind::Pipeline)], layout);
    }
    let dag = StageDag { vertices: b.vertices, edges: b.edges, output };
    dag.validate()?;
    Ok(dag)
}
