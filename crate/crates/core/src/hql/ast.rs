use std::collections::BTreeMap;

use crate::metastore::StorageFormat;
use crate::types::DataType;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QualifiedName {
    pub database: Option<String>,
    pub name: String,
}

impl QualifiedName {
    pub fn new(database: Option<&str>, name: &str) -> Self {
        Self {
            database: database.map(|d| d.to_ascii_lowercase()),
            name: name.to_ascii_lowercase(),
        }
    }

    pub fn bare(name: &str) -> Self {
        Self::new(None, name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Double(f64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSpec {
    pub name: String,
    pub dtype: DataType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreateTable {
    pub name: QualifiedName,
    pub columns: Vec<ColumnSpec>,
    pub partition_columns: Vec<ColumnSpec>,
    /// `None` when no ROW FORMAT clause was given.
    pub field_delimiter: Option<char>,
    pub format: StorageFormat,
    pub properties: BTreeMap<String, String>,
}

/// One entry of a `PARTITION (...)` clause.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionSpec {
    /// `col='value'`
    Static { column: String, value: Literal },
    /// `col`: value taken from the trailing select column.
    Dynamic { column: String },
    /// `col TYPE`: accepted by the grammar, rejected at execution time.
    Typed { column: String, dtype: DataType },
}

impl PartitionSpec {
    pub fn column(&self) -> &str {
        match self {
            PartitionSpec::Static { column, .. }
            | PartitionSpec::Dynamic { column }
            | PartitionSpec::Typed { column, .. } => column,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadData {
    pub local: bool,
    pub source: String,
    pub overwrite: bool,
    pub table: QualifiedName,
    pub partition: Vec<PartitionSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsertSelect {
    pub overwrite: bool,
    pub table: QualifiedName,
    pub partition: Vec<PartitionSpec>,
    pub select: Select,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnRef {
    pub qualifier: Option<String>,
    pub name: String,
}

impl ColumnRef {
    pub fn new(qualifier: Option<&str>, name: &str) -> Self {
        Self {
            qualifier: qualifier.map(|q| q.to_ascii_lowercase()),
            name: name.to_ascii_lowercase(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregateFunc {
    CountStar,
    Count,
    Sum,
    Avg,
}

impl AggregateFunc {
    pub fn keyword(self) -> &'static str {
        match self {
            AggregateFunc::CountStar | AggregateFunc::Count => "COUNT",
            AggregateFunc::Sum => "SUM",
            AggregateFunc::Avg => "AVG",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Column(ColumnRef),
    /// `arg` is `None` only for `COUNT(*)`.
    Aggregate { func: AggregateFunc, arg: Option<ColumnRef> },
}

impl Expr {
    pub fn is_aggregate(&self) -> bool {
        matches!(self, Expr::Aggregate { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Wildcard,
    Expr { expr: Expr, alias: Option<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRef {
    pub name: QualifiedName,
    pub alias: Option<String>,
}

impl TableRef {
    /// The name columns are qualified with: the alias, else the table name.
    pub fn binding(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.name.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Join {
    pub table: TableRef,
    /// Conjunction of column equalities.
    pub on: Vec<(ColumnRef, ColumnRef)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::NotEq => "<>",
            CompareOp::Lt => "<",
            CompareOp::LtEq => "<=",
            CompareOp::Gt => ">",
            CompareOp::GtEq => ">=",
        }
    }

    /// The operator with its operands swapped: `a < b` ⇔ `b > a`.
    pub fn flipped(self) -> Self {
        match self {
            CompareOp::Lt => CompareOp::Gt,
            CompareOp::LtEq => CompareOp::GtEq,
            CompareOp::Gt => CompareOp::Lt,
            CompareOp::GtEq => CompareOp::LtEq,
            other => other,
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CompareOp::Eq => ord == Equal,
            CompareOp::NotEq => ord != Equal,
            CompareOp::Lt => ord == Less,
            CompareOp::LtEq => ord != Greater,
            CompareOp::Gt => ord == Greater,
            CompareOp::GtEq => ord != Less,
        }
    }
}

/// `column op literal`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub column: ColumnRef,
    pub op: CompareOp,
    pub value: Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderItem {
    pub expr: Expr,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Select {
    pub projections: Vec<SelectItem>,
    pub from: TableRef,
    pub joins: Vec<Join>,
    /// Conjunction; empty when there is no WHERE clause.
    pub selection: Vec<Comparison>,
    pub group_by: Vec<ColumnRef>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
}

impl Select {
    pub fn has_aggregates(&self) -> bool {
        self.projections
            .iter()
            .any(|p| matches!(p, SelectItem::Expr { expr, .. } if expr.is_aggregate()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    CreateTable(CreateTable),
    LoadData(LoadData),
    InsertSelect(InsertSelect),
    Select(Select),
    Describe(QualifiedName),
    ShowPartitions(QualifiedName),
    SetOption { key: String, value: String },
}

impl Statement {
    pub fn kind(&self) -> &'static str {
        match self {
            Statement::CreateTable(_) => "CREATE TABLE",
            Statement::LoadData(_) => "LOAD DATA",
            Statement::InsertSelect(_) => "INSERT",
            Statement::Select(_) => "SELECT",
            Statement::Describe(_) => "DESCRIBE",
            Statement::ShowPartitions(_) => "SHOW PARTITIONS",
            Statement::SetOption { .. } => "SET",
        }
    }
}
