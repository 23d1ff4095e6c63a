//! Test-side oracle: random tables held in plain vectors, random queries
//! described structurally, and a nested-loop evaluator that shares no code
//! with the engine beyond the value type.

#![allow(dead_code)]

use std::cmp::Ordering;

use minihive::hql::PartitionSpec;
use minihive::hql::QualifiedName;
use minihive::session::Session;
use minihive::{DataType, Datum, Row};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct TestTable {
    pub name: &'static str,
    pub columns: Vec<(&'static str, DataType)>,
    pub rows: Vec<Row>,
}

impl TestTable {
    pub fn col(&self, name: &str) -> usize {
        self.columns.iter().position(|c| c.0 == name).unwrap()
    }
}

fn maybe_null(rng: &mut ChaCha8Rng, p: f64, d: impl FnOnce(&mut ChaCha8Rng) -> Datum) -> Datum {
    let v = d(rng);
    if rng.gen_bool(p) {
        Datum::Null
    } else {
        v
    }
}

const WORDS: [&str; 6] = ["ash", "birch", "cedar", "elm", "fir", "oak"];

/// Three related tables: `t1 (k, g, v, n)`, `t2 (k, h, w)`, `t3 (h, z, m)`.
/// Strings are never NULL so they survive every storage format.
pub fn tables(seed: u64, scale: usize) -> Vec<TestTable> {
    use DataType::*;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t1 = (0..30 * scale)
        .map(|_| {
            vec![
                maybe_null(&mut rng, 0.05, |r| Datum::Int(r.gen_range(0..25))),
                Datum::from(WORDS[rng.gen_range(0..4)]),
                Datum::Double(rng.gen_range(0..100_000) as f64 / 100.0),
                maybe_null(&mut rng, 0.2, |r| Datum::Int(r.gen_range(-50..50))),
            ]
        })
        .collect();
    let t2 = (0..12 * scale)
        .map(|_| {
            vec![
                maybe_null(&mut rng, 0.05, |r| Datum::Int(r.gen_range(0..30))),
                Datum::from(WORDS[rng.gen_range(0..6)]),
                Datum::Int(rng.gen_range(1..1000)),
            ]
        })
        .collect();
    let t3 = (0..8)
        .map(|i| {
            vec![
                Datum::from(WORDS[i % 6]),
                maybe_null(&mut rng, 0.1, |r| Datum::Double(r.gen_range(1..10_000) as f64 / 8.0)),
                Datum::Int(rng.gen_range(0..3)),
            ]
        })
        .collect();
    vec![
        TestTable { name: "t1", columns: vec![("k", Int), ("g", String), ("v", Double), ("n", Int)], rows: t1 },
        TestTable { name: "t2", columns: vec![("k", Int), ("h", String), ("w", Int)], rows: t2 },
        TestTable { name: "t3", columns: vec![("h", String), ("z", Double), ("m", Int)], rows: t3 },
    ]
}

/// Installs each table in text and ORC form (`t1`, `t1_orc`) and `t1` also
/// partitioned by `g` (`t1p`, `t1p_orc`), written as `writers` files.
pub fn install(session: &mut Session, tables: &[TestTable], writers: usize) {
    for t in tables {
        let cols: Vec<String> = t.columns.iter().map(|(n, ty)| format!("{n} {}", ty.keyword())).collect();
        for (suffix, stored) in [("", "TEXTFILE"), ("_orc", "ORC")] {
            session
                .sql(&format!("CREATE TABLE {}{suffix} ({}) STORED AS {stored}", t.name, cols.join(", ")))
                .unwrap();
            let tasks = split(t.rows.len(), writers);
            session
                .insert_rows_by_task(&QualifiedName::new(None, &format!("{}{suffix}", t.name)), &[], false, t.rows.clone(), &tasks)
                .unwrap();
        }
    }
    let t1 = &tables[0];
    for (suffix, stored) in [("", "TEXTFILE"), ("_orc", "ORC")] {
        session
            .sql(&format!("CREATE TABLE t1p{suffix} (k INT, v DOUBLE, n INT) PARTITIONED BY (g STRING) STORED AS {stored}"))
            .unwrap();
        let rows: Vec<Row> = t1.rows.iter().map(|r| vec![r[0].clone(), r[2].clone(), r[3].clone(), r[1].clone()]).collect();
        let tasks = split(rows.len(), writers);
        session
            .insert_rows_by_task(
                &QualifiedName::new(None, &format!("t1p{suffix}")),
                &[PartitionSpec::Dynamic { column: "g".into() }],
                false,
                rows,
                &tasks,
            )
            .unwrap();
    }
}

fn split(n: usize, parts: usize) -> Vec<usize> {
    let parts = parts.max(1);
    (0..parts).map(|t| n * (t + 1) / parts - n * t / parts).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Agg {
    CountStar,
    Count,
    Sum,
    Avg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Op {
    fn sql(self) -> &'static str {
        match self {
            Op::Eq => "=",
            Op::Ne => "<>",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
        }
    }

    fn holds(self, o: Ordering) -> bool {
        match self {
            Op::Eq => o.is_eq(),
            Op::Ne => o.is_ne(),
            Op::Lt => o.is_lt(),
            Op::Le => o.is_le(),
            Op::Gt => o.is_gt(),
            Op::Ge => o.is_ge(),
        }
    }
}

/// Column reference: table position in FROM/JOIN order, column name.
pub type Col = (usize, &'static str);

#[derive(Debug, Clone)]
pub enum Output {
    Column(Col),
    Aggregate(Agg, Option<Col>),
}

#[derive(Debug, Clone)]
pub struct Query {
    /// Table name in the oracle (`t1`, `t2`, `t3`) and whether the
    /// partitioned twin of `t1` is read.
    pub tables: Vec<&'static str>,
    pub partitioned: bool,
    pub orc: bool,
    /// Join `i` connects table `i + 1` to an earlier table.
    pub joins: Vec<Vec<(Col, Col)>>,
    pub filters: Vec<(Col, Op, Datum)>,
    pub group_by: Vec<Col>,
    pub outputs: Vec<Output>,
    /// Output positions, descending flag.
    pub order_by: Vec<(usize, bool)>,
    pub limit: Option<u64>,
}

fn literal(d: &Datum) -> String {
    match d {
        Datum::Str(s) => format!("'{s}'"),
        Datum::Double(v) => format!("{v:?}"),
        other => other.to_text(),
    }
}

const ALIASES: [&str; 3] = ["a", "b", "c"];

impl Query {
    pub fn is_aggregate(&self) -> bool {
        self.outputs.iter().any(|o| matches!(o, Output::Aggregate(..)))
    }

    pub fn sql(&self) -> String {
        let c = |col: &Col| format!("{}.{}", ALIASES[col.0], col.1);
        let outs: Vec<String> = self
            .outputs
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let e = match o {
                    Output::Column(col) => c(col),
                    Output::Aggregate(Agg::CountStar, _) => "count(*)".into(),
                    Output::Aggregate(f, Some(col)) => {
                        let name = match f {
                            Agg::Count => "count",
                            Agg::Sum => "sum",
                            _ => "avg",
                        };
                        format!("{name}({})", c(col))
                    }
                    Output::Aggregate(_, None) => unreachable!(),
                };
                format!("{e} AS o{i}")
            })
            .collect();
        let table = |i: usize| {
            let base = if i == 0 && self.partitioned { "t1p" } else { self.tables[i] };
            format!("{base}{} {}", if self.orc { "_orc" } else { "" }, ALIASES[i])
        };
        let mut s = format!("SELECT {} FROM {}", outs.join(", "), table(0));
        for (i, on) in self.joins.iter().enumerate() {
            let conds: Vec<String> = on.iter().map(|(l, r)| format!("{} = {}", c(l), c(r))).collect();
            s.push_str(&format!(" JOIN {} ON ({})", table(i + 1), conds.join(" AND ")));
        }
        if !self.filters.is_empty() {
            let f: Vec<String> = self.filters.iter().map(|(col, op, v)| format!("{} {} {}", c(col), op.sql(), literal(v))).collect();
            s.push_str(&format!(" WHERE {}", f.join(" AND ")));
        }
        if !self.group_by.is_empty() {
            let g: Vec<String> = self.group_by.iter().map(c).collect();
            s.push_str(&format!(" GROUP BY {}", g.join(", ")));
        }
        if !self.order_by.is_empty() {
            let o: Vec<String> =
                self.order_by.iter().map(|(i, d)| format!("o{i}{}", if *d { " DESC" } else { "" })).collect();
            s.push_str(&format!(" ORDER BY {}", o.join(", ")));
        }
        if let Some(n) = self.limit {
            s.push_str(&format!(" LIMIT {n}"));
        }
        s
    }
}

/// NULL lowest; numbers numerically; strings by bytes.
pub fn cmp(a: &Datum, b: &Datum) -> Ordering {
    match (a, b) {
        (Datum::Null, Datum::Null) => Ordering::Equal,
        (Datum::Null, _) => Ordering::Less,
        (_, Datum::Null) => Ordering::Greater,
        (Datum::Int(x), Datum::Int(y)) => x.cmp(y),
        (Datum::Double(x), Datum::Double(y)) => x.total_cmp(y),
        (Datum::Int(x), Datum::Double(y)) => (*x as f64).total_cmp(y),
        (Datum::Double(x), Datum::Int(y)) => x.total_cmp(&(*y as f64)),
        (Datum::Str(x), Datum::Str(y)) => x.as_bytes().cmp(y.as_bytes()),
        _ => panic!("incomparable {a:?} {b:?}"),
    }
}

fn num(d: &Datum) -> Option<f64> {
    match d {
        Datum::Int(v) => Some(*v as f64),
        Datum::Double(v) => Some(*v),
        _ => None,
    }
}

/// Evaluates by brute force: cross product, then join and WHERE filters,
/// then grouping by linear search, then a stable sort and LIMIT.
pub fn evaluate(q: &Query, data: &[TestTable]) -> Vec<Row> {
    let tabs: Vec<&TestTable> = q.tables.iter().map(|n| data.iter().find(|t| t.name == *n).unwrap()).collect();
    let mut combos: Vec<Vec<&Row>> = tabs[0].rows.iter().map(|r| vec![r]).collect();
    for (i, on) in q.joins.iter().enumerate() {
        let mut next = Vec::new();
        for combo in &combos {
            for r in &tabs[i + 1].rows {
                let mut cand = combo.clone();
                cand.push(r);
                let ok = on.iter().all(|(l, rr)| {
                    let a = &cand[l.0][tabs[l.0].col(l.1)];
                    let b = &cand[rr.0][tabs[rr.0].col(rr.1)];
                    !a.is_null() && !b.is_null() && cmp(a, b).is_eq()
                });
                if ok {
                    next.push(cand);
                }
            }
        }
        combos = next;
    }
    let get = |combo: &Vec<&Row>, c: &Col| combo[c.0][tabs[c.0].col(c.1)].clone();
    combos.retain(|combo| {
        q.filters.iter().all(|(c, op, v)| {
            let d = get(combo, c);
            !d.is_null() && op.holds(cmp(&d, v))
        })
    });

    let mut rows: Vec<Row> = Vec::new();
    if q.is_aggregate() {
        let mut groups: Vec<(Row, Vec<&Vec<&Row>>)> = Vec::new();
        for combo in &combos {
            let key: Row = q.group_by.iter().map(|c| get(combo, c)).collect();
            match groups.iter_mut().find(|(k, _)| k.iter().zip(&key).all(|(a, b)| cmp(a, b).is_eq())) {
                Some(g) => g.1.push(combo),
                None => groups.push((key, vec![combo])),
            }
        }
        if groups.is_empty() && q.group_by.is_empty() {
            groups.push((Vec::new(), Vec::new()));
        }
        for (key, members) in &groups {
            let row = q
                .outputs
                .iter()
                .map(|o| match o {
                    Output::Column(c) => key[q.group_by.iter().position(|g| g == c).unwrap()].clone(),
                    Output::Aggregate(Agg::CountStar, _) => Datum::Int(members.len() as i64),
                    Output::Aggregate(f, Some(c)) => {
                        let vals: Vec<Datum> = members.iter().map(|m| get(m, c)).filter(|d| !d.is_null()).collect();
                        let is_int = tabs[c.0].columns[tabs[c.0].col(c.1)].1 == DataType::Int;
                        match f {
                            Agg::Count => Datum::Int(vals.len() as i64),
                            _ if vals.is_empty() => Datum::Null,
                            Agg::Sum if is_int => Datum::Int(vals.iter().map(|d| num(d).unwrap() as i64).sum()),
                            Agg::Sum => Datum::Double(vals.iter().map(|d| num(d).unwrap()).sum()),
                            _ => Datum::Double(vals.iter().map(|d| num(d).unwrap()).sum::<f64>() / vals.len() as f64),
                        }
                    }
                    Output::Aggregate(_, None) => unreachable!(),
                })
                .collect();
            rows.push(row);
        }
    } else {
        for combo in &combos {
            rows.push(
                q.outputs
                    .iter()
                    .map(|o| match o {
                        Output::Column(c) => get(combo, c),
                        Output::Aggregate(..) => unreachable!(),
                    })
                    .collect(),
            );
        }
    }
    rows.sort_by(|a, b| order(q, a, b));
    if let Some(n) = q.limit {
        rows.truncate(n as usize);
    }
    rows
}

pub fn order(q: &Query, a: &Row, b: &Row) -> Ordering {
    for (i, desc) in &q.order_by {
        let o = cmp(&a[*i], &b[*i]);
        let o = if *desc { o.reverse() } else { o };
        if o.is_ne() {
            return o;
        }
    }
    Ordering::Equal
}

pub fn close(a: &Datum, b: &Datum) -> bool {
    match (a, b) {
        (Datum::Double(x), Datum::Double(y)) => x == y || (x - y).abs() <= 1e-9 * x.abs().max(y.abs()),
        _ => a == b && std::mem::discriminant(a) == std::mem::discriminant(b),
    }
}

fn rows_close(a: &Row, b: &Row) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| close(x, y))
}

/// Sort key that ignores doubles, so near-equal doubles cannot reorder
/// rows that are otherwise identical.
fn loose_key(r: &Row) -> Vec<Datum> {
    r.iter().map(|d| if matches!(d, Datum::Double(_)) { Datum::Null } else { d.clone() }).collect()
}

fn multiset_close(got: &[Row], want: &[Row]) -> bool {
    let sort = |rows: &[Row]| {
        let mut v = rows.to_vec();
        v.sort_by(|a, b| {
            let (ka, kb) = (loose_key(a), loose_key(b));
            ka.iter().zip(&kb).map(|(x, y)| cmp(x, y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal).then_with(|| {
                a.iter().zip(b).map(|(x, y)| cmp(x, y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
            })
        });
        v
    };
    let (g, w) = (sort(got), sort(want));
    g.len() == w.len() && g.iter().zip(&w).all(|(a, b)| rows_close(a, b))
}

/// Checks engine output against the oracle: same multiset, ordered by the
/// ORDER BY keys when present. With LIMIT and an ORDER BY covering every
/// output the result is fully determined; otherwise only the row count and
/// containment in the unlimited result are fixed.
pub fn check(q: &Query, got: &[Row], data: &[TestTable]) -> Result<(), String> {
    let want = evaluate(q, data);
    if !q.order_by.is_empty() {
        for w in got.windows(2) {
            let o = order(q, &w[0], &w[1]);
            if o.is_gt() {
                return Err(format!("rows out of order: {:?} before {:?}", w[0], w[1]));
            }
        }
    }
    let total_order = q.order_by.len() == q.outputs.len();
    if q.limit.is_some() && !total_order {
        let mut unlimited = q.clone();
        unlimited.limit = None;
        let all = evaluate(&unlimited, data);
        if got.len() != want.len() {
            return Err(format!("expected {} rows, got {}", want.len(), got.len()));
        }
        let mut pool = all.clone();
        for r in got {
            match pool.iter().position(|p| rows_close(p, r)) {
                Some(i) => {
                    pool.remove(i);
                }
                None => return Err(format!("row {r:?} is not in the unlimited result")),
            }
        }
        return Ok(());
    }
    if multiset_close(got, &want) {
        Ok(())
    } else {
        Err(format!("engine {} rows {:?}\noracle {} rows {:?}", got.len(), &got[..got.len().min(5)], want.len(), &want[..want.len().min(5)]))
    }
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> T {
    xs[rng.gen_range(0..xs.len())]
}

/// A random query over the `tables()` schema: 0-2 joins, 0-2 filters,
/// optional grouping, ordering and limit.
pub fn random_query(seed: u64) -> Query {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ntables = pick(&mut rng, &[1, 1, 2, 2, 3]);
    let tables = ["t1", "t2", "t3"][..ntables].to_vec();
    let mut joins = Vec::new();
    if ntables >= 2 {
        joins.push(vec![((0, "k"), (1, "k"))]);
    }
    if ntables == 3 {
        let left = if rng.gen_bool(0.5) { (1, "h") } else { (0, "g") };
        joins.push(vec![(left, (2, "h"))]);
    }
    let mut cols: Vec<(Col, DataType)> = vec![((0, "k"), DataType::Int), ((0, "g"), DataType::String), ((0, "v"), DataType::Double), ((0, "n"), DataType::Int)];
    if ntables >= 2 {
        cols.extend([((1, "k"), DataType::Int), ((1, "h"), DataType::String), ((1, "w"), DataType::Int)]);
    }
    if ntables == 3 {
        cols.extend([((2, "h"), DataType::String), ((2, "z"), DataType::Double), ((2, "m"), DataType::Int)]);
    }
    let mut filters = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let (c, t) = pick(&mut rng, &cols);
        let op = pick(&mut rng, &[Op::Eq, Op::Ne, Op::Lt, Op::Le, Op::Gt, Op::Ge]);
        let v = match t {
            DataType::Int => Datum::Int(rng.gen_range(-10..30)),
            DataType::Double => Datum::Double(rng.gen_range(0..1000) as f64 + 0.5),
            DataType::String => Datum::from(pick(&mut rng, &WORDS)),
        };
        filters.push((c, op, v));
    }
    let groupable: Vec<Col> = cols.iter().filter(|(_, t)| *t != DataType::Double).map(|(c, _)| *c).collect();
    let numeric: Vec<Col> = cols.iter().filter(|(_, t)| *t != DataType::String).map(|(c, _)| *c).collect();
    let (group_by, outputs) = if rng.gen_bool(0.5) {
        let mut keys: Vec<Col> = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            let k = pick(&mut rng, &groupable);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        let mut outs: Vec<Output> = keys.iter().map(|k| Output::Column(*k)).collect();
        for _ in 0..rng.gen_range(1..=3) {
            outs.push(match rng.gen_range(0..4) {
                0 => Output::Aggregate(Agg::CountStar, None),
                1 => Output::Aggregate(Agg::Count, Some(pick(&mut rng, &cols).0)),
                2 => Output::Aggregate(Agg::Sum, Some(pick(&mut rng, &numeric))),
                _ => Output::Aggregate(Agg::Avg, Some(pick(&mut rng, &numeric))),
            });
        }
        (keys, outs)
    } else {
        let outs = (0..rng.gen_range(1..=4)).map(|_| Output::Column(pick(&mut rng, &cols).0)).collect();
        (Vec::new(), outs)
    };
    let n = outputs.len();
    let limit = rng.gen_bool(0.3).then(|| rng.gen_range(0..15));
    let order_by = if rng.gen_bool(0.5) || limit.is_some() && rng.gen_bool(0.7) {
        let desc = rng.gen_bool(0.5);
        if limit.is_some() {
            (0..n).map(|i| (i, desc)).collect()
        } else {
            vec![(rng.gen_range(0..n), desc)]
        }
    } else {
        Vec::new()
    };
    let partitioned = ntables == 1 && rng.gen_bool(0.3);
    Query { tables, partitioned, orc: rng.gen_bool(0.5), joins, filters, group_by, outputs, order_by, limit }
}

pub fn cmp_rows(a: &Row, b: &Row) -> Ordering {
    a.iter().zip(b).map(|(x, y)| cmp(x, y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}
