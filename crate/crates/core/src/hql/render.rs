use std::fmt::Write;

use super::ast::*;
use super::parser::RESERVED;
use crate::types::format_double;

const KEYWORDS: &[&str] = &[
    "create", "load", "insert", "describe", "show", "set", "data", "local", "int", "double",
    "string", "count", "sum", "avg", "distinct", "all", "is", "in", "like", "between", "rlike",
    "fields", "terminated", "delimited", "format", "extended", "formatted", "partitions",
];

/// Renders an identifier, backquoting it when it is not a plain lowercase
/// word or could be read as a keyword.
pub fn ident(name: &str) -> String {
    let simple = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_lowercase() || c == '_')
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
    if simple && !RESERVED.contains(&name) && !KEYWORDS.contains(&name) {
        name.to_string()
    } else {
        format!("`{}`", name.replace('`', "``"))
    }
}

pub fn string_literal(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

pub fn literal(lit: &Literal) -> String {
    match lit {
        Literal::Int(v) => v.to_string(),
        Literal::Double(v) => format_double(*v),
        Literal::Str(s) => string_literal(s),
    }
}

pub fn qualified(name: &QualifiedName) -> String {
    match &name.database {
        Some(db) => format!("{}.{}", ident(db), ident(&name.name)),
        None => ident(&name.name),
    }
}

pub fn column(c: &ColumnRef) -> String {
    match &c.qualifier {
        Some(q) => format!("{}.{}", ident(q), ident(&c.name)),
        None => ident(&c.name),
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Column(c) => column(c),
        Expr::Aggregate { func: AggregateFunc::CountStar, .. } => "COUNT(*)".to_string(),
        Expr::Aggregate { func, arg } => {
            let arg = arg.as_ref().map(column).unwrap_or_else(|| "*".into());
            format!("{}({arg})", func.keyword())
        }
    }
}

fn column_specs(cols: &[ColumnSpec]) -> String {
    cols.iter()
        .map(|c| format!("{} {}", ident(&c.name), c.dtype.keyword()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn partition_clause(specs: &[PartitionSpec]) -> String {
    if specs.is_empty() {
        return String::new();
    }
    let items: Vec<String> = specs
        .iter()
        .map(|s| match s {
            PartitionSpec::Static { column, value } => format!("{}={}", ident(column), literal(value)),
            PartitionSpec::Dynamic { column } => ident(column),
            PartitionSpec::Typed { column, dtype } => format!("{} {}", ident(column), dtype.keyword()),
        })
        .collect();
    format!(" PARTITION ({})", items.join(", "))
}

fn table_ref(t: &TableRef) -> String {
    match &t.alias {
        Some(a) => format!("{} {}", qualified(&t.name), ident(a)),
        None => qualified(&t.name),
    }
}

pub fn select(s: &Select) -> String {
    let mut out = String::from("SELECT ");
    let items: Vec<String> = s
        .projections
        .iter()
        .map(|p| match p {
            SelectItem::Wildcard => "*".to_string(),
            SelectItem::Expr { expr: e, alias: Some(a) } => format!("{} AS {}", expr(e), ident(a)),
            SelectItem::Expr { expr: e, alias: None } => expr(e),
        })
        .collect();
    out.push_str(&items.join(", "));
    let _ = write!(out, " FROM {}", table_ref(&s.from));
    for j in &s.joins {
        let on: Vec<String> = j
            .on
            .iter()
            .map(|(l, r)| format!("{} = {}", column(l), column(r)))
            .collect();
        let _ = write!(out, " JOIN {} ON ({})", table_ref(&j.table), on.join(" AND "));
    }
    if !s.selection.is_empty() {
        let preds: Vec<String> = s
            .selection
            .iter()
            .map(|c| format!("{} {} {}", column(&c.column), c.op.symbol(), literal(&c.value)))
            .collect();
        let _ = write!(out, " WHERE {}", preds.join(" AND "));
    }
    if !s.group_by.is_empty() {
        let keys: Vec<String> = s.group_by.iter().map(column).collect();
        let _ = write!(out, " GROUP BY {}", keys.join(", "));
    }
    if !s.order_by.is_empty() {
        let keys: Vec<String> = s
            .order_by
            .iter()
            .map(|o| {
                if o.descending {
                    format!("{} DESC", expr(&o.expr))
                } else {
                    expr(&o.expr)
                }
            })
            .collect();
        let _ = write!(out, " ORDER BY {}", keys.join(", "));
    }
    if let Some(n) = s.limit {
        let _ = write!(out, " LIMIT {n}");
    }
    out
}

/// Canonical text of a statement, terminated by `;`. Parsing the output
/// yields an equal statement.
pub fn render(stmt: &Statement) -> String {
    let mut text = render_body(stmt);
    text.push(';');
    text
}

fn render_body(stmt: &Statement) -> String {
    match stmt {
        Statement::CreateTable(c) => {
            let mut out = format!("CREATE TABLE {} ({})", qualified(&c.name), column_specs(&c.columns));
            if !c.partition_columns.is_empty() {
                let _ = write!(out, " PARTITIONED BY ({})", column_specs(&c.partition_columns));
            }
            if let Some(d) = c.field_delimiter {
                let d = if d == '\t' { "'\\t'".to_string() } else { string_literal(&d.to_string()) };
                let _ = write!(out, " ROW FORMAT DELIMITED FIELDS TERMINATED BY {d}");
            }
            let _ = write!(out, " STORED AS {}", c.format.keyword());
            if !c.properties.is_empty() {
                let props: Vec<String> = c
                    .properties
                    .iter()
                    .map(|(k, v)| format!("{}={}", string_literal(k), string_literal(v)))
                    .collect();
                let _ = write!(out, " TBLPROPERTIES ({})", props.join(", "));
            }
            out
        }
        Statement::LoadData(l) => format!(
            "LOAD DATA {}INPATH {} {}INTO TABLE {}{}",
            if l.local { "LOCAL " } else { "" },
            string_literal(&l.source),
            if l.overwrite { "OVERWRITE " } else { "" },
            qualified(&l.table),
            partition_clause(&l.partition)
        ),
        Statement::InsertSelect(i) => format!(
            "INSERT {} TABLE {}{} {}",
            if i.overwrite { "OVERWRITE" } else { "INTO" },
            qualified(&i.table),
            partition_clause(&i.partition),
            select(&i.select)
        ),
        Statement::Select(s) => select(s),
        Statement::Describe(n) => format!("DESCRIBE {}", qualified(n)),
        Statement::ShowPartitions(n) => format!("SHOW PARTITIONS {}", qualified(n)),
        Statement::SetOption { key, value } => format!("SET {key}={value}"),
    }
}

impl std::fmt::Display for Statement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render_body(self))
    }
}
