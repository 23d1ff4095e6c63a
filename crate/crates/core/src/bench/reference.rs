//! Brute-force evaluation of a SELECT over fully materialized tables, used
//! as the correctness gate of the bench harness. Hash joins in left-major
//! order, filter after join, grouping by sorted map.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::hql::{AggregateFunc, ColumnRef, Expr, Literal, Select, SelectItem};
use crate::metastore::TableDef;
use crate::types::{DataType, Datum, Row};

/// A table's full-schema rows (data columns then partition columns).
pub struct TableData {
    pub def: TableDef,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub rows: Vec<Row>,
    /// The ordered result before LIMIT.
    pub unlimited: Vec<Row>,
}

struct Scope<'a> {
    /// (binding, table, offset of its first column in the joined row)
    tables: Vec<(String, &'a TableDef, usize)>,
}

impl Scope<'_> {
    fn find(&self, c: &ColumnRef) -> Result<usize> {
        let hits: Vec<usize> = self
            .tables
            .iter()
            .filter(|(b, _, _)| c.qualifier.as_ref().is_none_or(|q| q == b))
            .filter_map(|(_, def, off)| {
                def.full_schema().iter().position(|col| col.name == c.name).map(|i| off + i)
            })
            .collect();
        match hits.as_slice() {
            [one] => Ok(*one),
            [] => Err(Error::Resolution(format!("unknown column {}", c.name))),
            _ => Err(Error::Resolution(format!("column {} is ambiguous", c.name))),
        }
    }

    fn dtype(&self, at: usize) -> DataType {
        for (_, def, off) in &self.tables {
            let schema = def.full_schema();
            if at < off + schema.len() {
                return schema[at - off].dtype;
            }
        }
        unreachable!()
    }
}

fn literal(l: &Literal) -> Datum {
    match l {
        Literal::Int(v) => Datum::Int(*v),
        Literal::Double(v) => Datum::Double(*v),
        Literal::Str(s) => Datum::Str(s.clone()),
    }
}

fn aggregate(func: AggregateFunc, values: &[&Datum], dtype: Option<DataType>) -> Result<Datum> {
    let present: Vec<&Datum> = values.iter().copied().filter(|d| !d.is_null()).collect();
    Ok(match func {
        AggregateFunc::CountStar => Datum::Int(values.len() as i64),
        AggregateFunc::Count => Datum::Int(present.len() as i64),
        _ if present.is_empty() => Datum::Null,
        AggregateFunc::Sum if dtype == Some(DataType::Int) => {
            let mut s: i64 = 0;
            for d in &present {
                let Datum::Int(v) = d else { unreachable!() };
                s = s.checked_add(*v).ok_or_else(|| Error::execution("reference", "integer overflow in SUM"))?;
            }
            Datum::Int(s)
        }
        AggregateFunc::Sum => Datum::Double(present.iter().map(|d| d.as_f64().unwrap()).sum()),
        AggregateFunc::Avg if dtype == Some(DataType::Int) => {
            let s: i128 = present.iter().map(|d| if let Datum::Int(v) = d { *v as i128 } else { 0 }).sum();
            Datum::Double(s as f64 / present.len() as f64)
        }
        AggregateFunc::Avg => {
            Datum::Double(present.iter().map(|d| d.as_f64().unwrap()).sum::<f64>() / present.len() as f64)
        }
    })
}

/// Evaluates `select`, looking tables up by their FROM/JOIN position.
pub fn evaluate(select: &Select, tables: &[&TableData]) -> Result<Evaluated> {
    let refs: Vec<_> = std::iter::once(&select.from).chain(select.joins.iter().map(|j| &j.table)).collect();
    if refs.len() != tables.len() {
        return Err(Error::execution("reference", "one table per FROM/JOIN entry expected"));
    }
    let mut scope = Scope { tables: Vec::new() };
    let mut width = 0;
    for (r, t) in refs.iter().zip(tables) {
        scope.tables.push((r.binding().to_string(), &t.def, width));
        width += t.def.full_schema().len();
    }

    let mut rows: Vec<Row> = tables[0].rows.clone();
    for (ji, join) in select.joins.iter().enumerate() {
        let keys: Vec<(usize, usize)> = join
            .on
            .iter()
            .map(|(a, b)| {
                let (a, b) = (scope.find(a)?, scope.find(b)?);
                let right_off = scope.tables[ji + 1].2;
                Ok(if a >= right_off { (b, a - right_off) } else { (a, b - right_off) })
            })
            .collect::<Result<_>>()?;
        let mut right: HashMap<Vec<&Datum>, Vec<&Row>> = HashMap::new();
        for r in &tables[ji + 1].rows {
            if keys.iter().all(|&(_, rk)| !r[rk].is_null()) {
                right.entry(keys.iter().map(|&(_, rk)| &r[rk]).collect()).or_default().push(r);
            }
        }
        let mut joined = Vec::new();
        for l in &rows {
            let key: Vec<&Datum> = keys.iter().map(|&(lk, _)| &l[lk]).collect();
            for r in right.get(&key).into_iter().flatten() {
                let mut row = l.clone();
                row.extend(r.iter().cloned());
                joined.push(row);
            }
        }
        rows = joined;
    }
    let filters: Vec<(usize, _, Datum)> = select
        .selection
        .iter()
        .map(|c| Ok((scope.find(&c.column)?, c.op, literal(&c.value))))
        .collect::<Result<_>>()?;
    rows.retain(|row| filters.iter().all(|(i, op, v)| row[*i].sql_cmp(v).is_some_and(|o| op.holds(o))));

    let alias_of = |c: &ColumnRef| -> Option<usize> {
        if c.qualifier.is_some() {
            return None;
        }
        select.projections.iter().position(|p| matches!(p, SelectItem::Expr { alias: Some(a), .. } if *a == c.name))
    };

    // Each output row paired with its sort key.
    let mut keyed: Vec<(Row, Row)> = Vec::new();
    if select.has_aggregates() || !select.group_by.is_empty() {
        let group_cols: Vec<usize> = select.group_by.iter().map(|g| scope.find(g)).collect::<Result<_>>()?;
        let mut groups: BTreeMap<Vec<Datum>, Vec<&Row>> = BTreeMap::new();
        for row in &rows {
            groups.entry(group_cols.iter().map(|&i| row[i].clone()).collect()).or_default().push(row);
        }
        if group_cols.is_empty() && groups.is_empty() {
            groups.insert(Vec::new(), Vec::new());
        }
        let eval = |e: &Expr, key: &[Datum], members: &[&Row]| -> Result<Datum> {
            match e {
                Expr::Column(c) => {
                    let at = scope.find(c)?;
                    let g = group_cols.iter().position(|&i| i == at).ok_or_else(|| {
                        Error::Resolution(format!("column {} is not grouped", c.name))
                    })?;
                    Ok(key[g].clone())
                }
                Expr::Aggregate { func, arg } => {
                    let (values, dtype): (Vec<&Datum>, _) = match arg {
                        Some(c) => {
                            let at = scope.find(c)?;
                            (members.iter().map(|r| &r[at]).collect(), Some(scope.dtype(at)))
                        }
                        None => (members.iter().map(|_| &Datum::Null).collect(), None),
                    };
                    aggregate(*func, &values, dtype)
                }
            }
        };
        for (key, members) in &groups {
            let mut out = Vec::new();
            for p in &select.projections {
                let SelectItem::Expr { expr, .. } = p else { return Err(Error::execution("reference", "* with GROUP BY")) };
                out.push(eval(expr, key, members)?);
            }
            let mut sort = Vec::new();
            for o in &select.order_by {
                sort.push(match &o.expr {
                    Expr::Column(c) if alias_of(c).is_some() => out[alias_of(c).unwrap()].clone(),
                    e => eval(e, key, members)?,
                });
            }
            keyed.push((out, sort));
        }
    } else {
        for row in &rows {
            let mut out = Vec::new();
            for p in &select.projections {
                match p {
                    SelectItem::Wildcard => out.extend(row.iter().cloned()),
                    SelectItem::Expr { expr: Expr::Column(c), .. } => out.push(row[scope.find(c)?].clone()),
                    SelectItem::Expr { .. } => unreachable!(),
                }
            }
            let mut sort = Vec::new();
            for o in &select.order_by {
                let Expr::Column(c) = &o.expr else { return Err(Error::execution("reference", "aggregate in ORDER BY")) };
                let src = match alias_of(c) {
                    Some(i) => match &select.projections[i] {
                        SelectItem::Expr { expr: Expr::Column(src), .. } => src,
                        _ => unreachable!(),
                    },
                    None => c,
                };
                sort.push(row[scope.find(src)?].clone());
            }
            keyed.push((out, sort));
        }
    }
    keyed.sort_by(|a, b| {
        for (i, o) in select.order_by.iter().enumerate() {
            let ord = a.1[i].cmp(&b.1[i]);
            let ord = if o.descending { ord.reverse() } else { ord };
            if ord.is_ne() {
                return ord;
            }
        }
        std::cmp::Ordering::Equal
    });
    let unlimited: Vec<Row> = keyed.into_iter().map(|(r, _)| r).collect();
    let n = select.limit.map_or(unlimited.len(), |l| (l as usize).min(unlimited.len()));
    Ok(Evaluated { rows: unlimited[..n].to_vec(), unlimited })
}

fn cell(d: &Datum) -> String {
    match d {
        Datum::Null => "\\N".into(),
        Datum::Double(v) => format!("{v:.9e}"),
        other => other.to_text(),
    }
}

/// Order-insensitive FNV checksum of a result; doubles count to ten
/// significant digits.
pub fn checksum(rows: &[Row]) -> u64 {
    let mut lines: Vec<String> =
        rows.iter().map(|r| r.iter().map(cell).collect::<Vec<_>>().join("\u{1f}")).collect();
    lines.sort();
    crate::types::fnv1a64(lines.join("\n").as_bytes())
}

/// Whether `rows` is a sub-multiset of `of` under checksum rendering.
pub fn is_sub_multiset(rows: &[Row], of: &[Row]) -> bool {
    let mut pool: BTreeMap<String, usize> = BTreeMap::new();
    for r in of {
        *pool.entry(r.iter().map(cell).collect::<Vec<_>>().join("\u{1f}")).or_default() += 1;
    }
    rows.iter().all(|r| {
        let k = r.iter().map(cell).collect::<Vec<_>>().join("\u{1f}");
        match pool.get_mut(&k) {
            Some(n) if *n > 0 => {
                *n -= 1;
                true
            }
            _ => false,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hql::{parse_statement, Statement};
    use crate::metastore::{ColumnDef, TableSpec, DEFAULT_WAREHOUSE_ROOT};

    fn table(name: &str, cols: &[(&str, DataType)], rows: Vec<Row>) -> TableData {
        let cols = cols.iter().map(|(n, t)| ColumnDef::new(n, *t)).collect();
        TableData { def: TableDef::from_spec(TableSpec::new("default", name, cols), DEFAULT_WAREHOUSE_ROOT).unwrap(), rows }
    }

    fn select(sql: &str) -> Select {
        let Statement::Select(s) = parse_statement(sql).unwrap() else { panic!() };
        s
    }

    #[test]
    fn join_group_order() {
        let a = table(
            "a",
            &[("k", DataType::Int), ("v", DataType::Int)],
            vec![vec![1.into(), 10.into()], vec![2.into(), 20.into()], vec![Datum::Null, 5.into()], vec![1.into(), 30.into()]],
        );
        let b = table("b", &[("k", DataType::Int), ("n", DataType::String)], vec![vec![1.into(), "x".into()], vec![Datum::Null, "z".into()]]);
        let s = select("select b.n, sum(a.v) as s, count(*) from a join b on (a.k = b.k) group by b.n order by s desc");
        let e = evaluate(&s, &[&a, &b]).unwrap();
        assert_eq!(e.rows, vec![vec!["x".into(), 40.into(), 2.into()]]);
        let g = evaluate(&select("select count(*), sum(v), avg(v) from a where v > 100"), &[&a]).unwrap();
        assert_eq!(g.rows, vec![vec![0.into(), Datum::Null, Datum::Null]]);
        let l = evaluate(&select("select v from a order by v limit 2"), &[&a]).unwrap();
        assert_eq!(l.rows, vec![vec![5.into()], vec![10.into()]]);
        assert_eq!(l.unlimited.len(), 4);
    }

    #[test]
    fn checksum_ignores_order_only() {
        let r1 = vec![vec![Datum::Int(1)], vec![Datum::Double(0.1 + 0.2)]];
        let r2 = vec![vec![Datum::Double(0.3)], vec![Datum::Int(1)]];
        assert_eq!(checksum(&r1), checksum(&r2));
        assert_ne!(checksum(&r1), checksum(&r1[..1]));
        assert!(is_sub_multiset(&r1[..1], &r2));
        assert!(!is_sub_multiset(&[vec![Datum::Int(1)], vec![Datum::Int(1)]], &r2));
    }
}
