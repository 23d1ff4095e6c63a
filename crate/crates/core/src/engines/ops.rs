//! Row operators shared by both engines.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hql::AggregateFunc;
use crate::planner::AggSpec;
use crate::storage::rowcodec;
use crate::types::{fnv1a64, DataType, Datum, Row};

pub fn key_of(row: &[Datum], keys: &[usize]) -> Vec<Datum> {
    keys.iter().map(|&k| row[k].clone()).collect()
}

/// Reducer index for a key under the FNV hash partitioner.
pub fn partition_of(key: &[Datum], reducers: usize) -> usize {
    let mut bytes = Vec::new();
    rowcodec::encode_row(&mut bytes, key);
    (fnv1a64(&bytes) % reducers as u64) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub enum Acc {
    Count(i64),
    SumInt(Option<i64>),
    SumDouble(Option<f64>),
    AvgInt { sum: i128, n: i64 },
    AvgDouble { sum: f64, n: i64 },
}

impl Acc {
    pub fn new(spec: &AggSpec) -> Self {
        match (spec.func, spec.input_type) {
            (AggregateFunc::CountStar | AggregateFunc::Count, _) => Acc::Count(0),
            (AggregateFunc::Sum, Some(DataType::Int)) => Acc::SumInt(None),
            (AggregateFunc::Sum, _) => Acc::SumDouble(None),
            (AggregateFunc::Avg, Some(DataType::Int)) => Acc::AvgInt { sum: 0, n: 0 },
            (AggregateFunc::Avg, _) => Acc::AvgDouble { sum: 0.0, n: 0 },
        }
    }

    pub fn update(&mut self, spec: &AggSpec, row: &[Datum], vertex: &str) -> Result<()> {
        let value = match spec.input {
            None => {
                if let Acc::Count(c) = self {
                    *c += 1;
                }
                return Ok(());
            }
            Some(i) => &row[i],
        };
        match (self, value) {
            (_, Datum::Null) => {}
            (Acc::Count(c), _) => *c += 1,
            (Acc::SumInt(s), Datum::Int(v)) => {
                let next = s.unwrap_or(0).checked_add(*v).ok_or_else(|| overflow(vertex))?;
                *s = Some(next);
            }
            (Acc::SumDouble(s), v) => *s = Some(s.unwrap_or(0.0) + as_double(v)),
            (Acc::AvgInt { sum, n }, Datum::Int(v)) => {
                *sum += *v as i128;
                *n += 1;
            }
            (Acc::AvgDouble { sum, n }, v) => {
                *sum += as_double(v);
                *n += 1;
            }
            (acc, v) => {
                return Err(Error::execution(vertex, format!("cannot aggregate {v:?} into {acc:?}")));
            }
        }
        Ok(())
    }

    /// Folds a partial state computed over later input into this one.
    pub fn merge(&mut self, other: &Acc, vertex: &str) -> Result<()> {
        match (self, other) {
            (Acc::Count(a), Acc::Count(b)) => *a += b,
            (Acc::SumInt(a), Acc::SumInt(b)) => {
                *a = match (*a, *b) {
                    (Some(x), Some(y)) => Some(x.checked_add(y).ok_or_else(|| overflow(vertex))?),
                    (x, None) => x,
                    (None, y) => y,
                }
            }
            (Acc::SumDouble(a), Acc::SumDouble(b)) => {
                *a = match (*a, *b) {
                    (Some(x), Some(y)) => Some(x + y),
                    (x, None) => x,
                    (None, y) => y,
                }
            }
            (Acc::AvgInt { sum, n }, Acc::AvgInt { sum: s2, n: n2 }) => {
                *sum += s2;
                *n += n2;
            }
            (Acc::AvgDouble { sum, n }, Acc::AvgDouble { sum: s2, n: n2 }) => {
                *sum += s2;
                *n += n2;
            }
            (a, b) => return Err(Error::execution(vertex, format!("mismatched partial states {a:?} and {b:?}"))),
        }
        Ok(())
    }

    pub fn finish(&self) -> Datum {
        match self {
            Acc::Count(c) => Datum::Int(*c),
            Acc::SumInt(s) => s.map_or(Datum::Null, Datum::Int),
            Acc::SumDouble(s) => s.map_or(Datum::Null, Datum::Double),
            Acc::AvgInt { n: 0, .. } | Acc::AvgDouble { n: 0, .. } => Datum::Null,
            Acc::AvgInt { sum, n } => Datum::Double(*sum as f64 / *n as f64),
            Acc::AvgDouble { sum, n } => Datum::Double(sum / *n as f64),
        }
    }
}

fn as_double(d: &Datum) -> f64 {
    d.as_f64().unwrap_or(f64::NAN)
}

fn overflow(vertex: &str) -> Error {
    Error::execution(vertex, "integer overflow in SUM")
}

pub type Groups = BTreeMap<Vec<Datum>, Vec<Acc>>;

pub fn aggregate_into(
    groups: &mut Groups,
    rows: &[Row],
    keys: &[usize],
    aggs: &[AggSpec],
    vertex: &str,
) -> Result<()> {
    for row in rows {
        let accs = groups
            .entry(key_of(row, keys))
            .or_insert_with(|| aggs.iter().map(Acc::new).collect());
        for (acc, spec) in accs.iter_mut().zip(aggs) {
            acc.update(spec, row, vertex)?;
        }
    }
    Ok(())
}

/// Folds `partial` into `groups`; partial states must arrive in input order.
pub fn merge_groups(groups: &mut Groups, partial: Groups, vertex: &str) -> Result<()> {
    for (key, accs) in partial {
        match groups.get_mut(&key) {
            Some(existing) => {
                for (a, b) in existing.iter_mut().zip(&accs) {
                    a.merge(b, vertex)?;
                }
            }
            None => {
                groups.insert(key, accs);
            }
        }
    }
    Ok(())
}

/// Group rows in key order: the keys followed by the finished aggregates.
pub fn finish_groups(groups: &Groups) -> Vec<Row> {
    groups
        .iter()
        .map(|(k, accs)| k.iter().cloned().chain(accs.iter().map(Acc::finish)).collect())
        .collect()
}

/// A global aggregate over no rows still produces one row.
pub fn ensure_global_row(groups: &mut Groups, keys: &[usize], aggs: &[AggSpec]) {
    if keys.is_empty() && groups.is_empty() {
        groups.insert(Vec::new(), aggs.iter().map(Acc::new).collect());
    }
}

/// Inner equi-join in key order; within a key, left-major in input order.
/// Rows with a NULL in any key column never match.
pub fn hash_join(left: Vec<Row>, right: Vec<Row>, left_keys: &[usize], right_keys: &[usize]) -> Vec<Row> {
    let mut sides: BTreeMap<Vec<Datum>, (Vec<Row>, Vec<Row>)> = BTreeMap::new();
    for row in left {
        let k = key_of(&row, left_keys);
        if !k.iter().any(Datum::is_null) {
            sides.entry(k).or_default().0.push(row);
        }
    }
    for row in right {
        let k = key_of(&row, right_keys);
        if let Some(entry) = sides.get_mut(&k) {
            entry.1.push(row);
        }
    }
    let mut out = Vec::new();
    for (_, (ls, rs)) in sides {
        for l in &ls {
            for r in &rs {
                out.push(l.iter().chain(r).cloned().collect());
            }
        }
    }
    out
}

/// NULLs order first ascending and last descending.
pub fn compare_by(a: &[Datum], b: &[Datum], keys: &[(usize, bool)]) -> Ordering {
    for &(k, desc) in keys {
        let o = a[k].cmp(&b[k]);
        let o = if desc { o.reverse() } else { o };
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

pub fn stable_sort(rows: &mut [Row], keys: &[(usize, bool)]) {
    rows.sort_by(|a, b| compare_by(a, b, keys));
}
