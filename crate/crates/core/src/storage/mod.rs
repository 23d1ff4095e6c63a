//! Table file formats: delimited text, the ORC-like columnar container, and
//! the binary row codec used for intermediate data.

mod columnar;
mod encoding;
pub mod rowcodec;
mod text;

pub use columnar::{encode_columnar, read_columnar_meta, ColumnStats, ColumnarMeta, StripeMeta};
pub use encoding::Encoding;
pub use text::{decode_text_cell, encode_text};

use crate::dfs::Dfs;
use crate::error::Result;
use crate::hql::CompareOp;
use crate::metastore::{PartitionKey, StorageFormat, TableDef, DEFAULT_PARTITION_NAME};
use crate::types::{DataType, Datum, Row};

pub const DEFAULT_STRIPE_ROWS: usize = 4096;

/// `column op value`, with `column` indexing the table's full schema (data
/// columns followed by partition columns).
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnPredicate {
    pub column: usize,
    pub op: CompareOp,
    pub value: Datum,
}

impl ColumnPredicate {
    /// SQL truth: a comparison involving NULL is not satisfied.
    pub fn matches(&self, datum: &Datum) -> bool {
        datum.sql_cmp(&self.value).is_some_and(|o| self.op.holds(o))
    }
}

pub fn row_matches(row: &[Datum], predicates: &[ColumnPredicate]) -> bool {
    predicates.iter().all(|p| p.matches(&row[p.column]))
}

/// A byte range of one file assigned to a map task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileSplit {
    pub path: String,
    pub offset: u64,
    pub length: u64,
    pub file_size: u64,
}

impl FileSplit {
    pub fn whole(path: &str, file_size: u64) -> Self {
        Self {
            path: path.to_string(),
            offset: 0,
            length: file_size,
            file_size,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    /// Indices into the full schema, in output order.
    pub projection: Vec<usize>,
    pub predicates: Vec<ColumnPredicate>,
    pub stripe_skipping: bool,
}

impl ScanOptions {
    pub fn all_columns(table: &TableDef) -> Self {
        Self {
            projection: (0..table.columns.len() + table.partition_columns.len()).collect(),
            predicates: Vec::new(),
            stripe_skipping: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanOutput {
    pub rows: Vec<Row>,
    pub bytes_read: u64,
    /// Rows decoded before the predicate was applied.
    pub rows_scanned: u64,
    pub stripes_total: u64,
    pub stripes_skipped: u64,
}

impl ScanOutput {
    pub fn absorb(&mut self, other: ScanOutput) {
        self.rows.extend(other.rows);
        self.bytes_read += other.bytes_read;
        self.rows_scanned += other.rows_scanned;
        self.stripes_total += other.stripes_total;
        self.stripes_skipped += other.stripes_skipped;
    }
}

/// Partition column values as typed datums, in partition-column order.
pub fn partition_values(table: &TableDef, key: Option<&PartitionKey>) -> Vec<Datum> {
    table
        .partition_columns
        .iter()
        .map(|c| match key.and_then(|k| k.value(&c.name)) {
            Some(v) if v != DEFAULT_PARTITION_NAME => decode_text_cell(v, c.dtype),
            _ => Datum::Null,
        })
        .collect()
}

/// Scans one split of a table file, returning projected rows that satisfy
/// every predicate.
pub fn scan_split(
    dfs: &Dfs,
    table: &TableDef,
    partition: Option<&PartitionKey>,
    split: &FileSplit,
    options: &ScanOptions,
) -> Result<ScanOutput> {
    let part_values = partition_values(table, partition);
    match table.format {
        StorageFormat::Textfile => text::scan_text_split(dfs, table, &part_values, split, options),
        StorageFormat::Orclike => columnar::scan_columnar_split(dfs, table, &part_values, split, options),
    }
}

/// Scans every file of a table or of one of its partitions.
pub fn scan_table(
    dfs: &Dfs,
    table: &TableDef,
    partition: Option<&PartitionKey>,
    options: &ScanOptions,
) -> Result<ScanOutput> {
    let dir = match partition {
        Some(k) => table.partition_dir(k),
        None => table.location.clone(),
    };
    let mut out = ScanOutput::default();
    let part_dirs: Vec<(Option<PartitionKey>, String)> = if partition.is_none() && table.is_partitioned() {
        let mut dirs = Vec::new();
        for (path, _) in dfs.files_under(&dir)? {
            let rel = &path[dir.len() + 1..];
            if let Some(pos) = rel.rfind('/') {
                let key = PartitionKey::parse_dir_name(&rel[..pos])?;
                dirs.push((Some(key), path));
            }
        }
        dirs
    } else {
        dfs.files_under(&dir)?
            .into_iter()
            .map(|(p, _)| (partition.cloned(), p))
            .collect()
    };
    for (key, path) in part_dirs {
        let size = dfs.file_size(&path)?;
        out.absorb(scan_split(dfs, table, key.as_ref(), &FileSplit::whole(&path, size), options)?);
    }
    Ok(out)
}

/// Serializes rows of the table's data columns in the table's format.
pub fn encode_rows(table: &TableDef, rows: &[Row], stripe_rows: usize) -> Result<Vec<u8>> {
    match table.format {
        StorageFormat::Textfile => encode_text(rows, table.field_delimiter, &table.data_types()),
        StorageFormat::Orclike => Ok(encode_columnar(rows, &table.columns, stripe_rows)),
    }
}

/// Writes rows to a new file; returns the file size.
pub fn write_rows(dfs: &Dfs, path: &str, table: &TableDef, rows: &[Row], stripe_rows: usize) -> Result<u64> {
    let bytes = encode_rows(table, rows, stripe_rows)?;
    dfs.write_file(path, &bytes)
}

pub(crate) fn check_row_types(row: &[Datum], types: &[DataType]) -> Result<()> {
    if row.len() != types.len() {
        return Err(crate::Error::Write(format!(
            "row has {} values, table has {} columns",
            row.len(),
            types.len()
        )));
    }
    for (d, t) in row.iter().zip(types) {
        if let Some(dt) = d.data_type() {
            if dt != *t {
                return Err(crate::Error::Write(format!("{dt} value in {t} column")));
            }
        }
    }
    Ok(())
}
