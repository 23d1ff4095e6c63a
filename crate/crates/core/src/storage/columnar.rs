//! The ORC-like container.
//!
//! ```text
//! "MHV1" | header_len u32 | header | stripe blocks ... | row_count u64 | "MHV1"
//! ```
//!
//! The header holds the schema fingerprint, column types and the stripe
//! directory with per-column block locations, encodings and statistics. All
//! integers are little-endian.

use std::cmp::Ordering;

use super::encoding::{self, Encoding, Reader};
use super::text::needed_columns;
use super::{row_matches, ColumnPredicate, FileSplit, ScanOptions, ScanOutput};
use crate::dfs::Dfs;
use crate::error::{Error, Result};
use crate::hql::CompareOp;
use crate::metastore::{ColumnDef, TableDef};
use crate::types::{fnv1a64, DataType, Datum, Row};

pub const MAGIC: &[u8; 4] = b"MHV1";
const VERSION: u16 = 1;
const FOOTER_LEN: u64 = 12;
const PREAMBLE_LEN: u64 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub encoding: Encoding,
    pub block_offset: u64,
    pub block_length: u64,
    pub null_count: u64,
    /// `None` when every value in the stripe is NULL.
    pub min_max: Option<(Datum, Datum)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripeMeta {
    pub offset: u64,
    pub length: u64,
    pub row_count: u64,
    pub columns: Vec<ColumnStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnarMeta {
    pub fingerprint: u64,
    pub types: Vec<DataType>,
    pub stripes: Vec<StripeMeta>,
    pub row_count: u64,
    pub header_len: u64,
}

pub fn schema_fingerprint(columns: &[ColumnDef]) -> u64 {
    let mut text = String::new();
    for c in columns {
        text.push_str(&c.name);
        text.push(':');
        text.push_str(c.dtype.keyword());
        text.push(';');
    }
    fnv1a64(text.as_bytes())
}

fn dtype_tag(t: DataType) -> u8 {
    match t {
        DataType::Int => 0,
        DataType::Double => 1,
        DataType::String => 2,
    }
}

fn dtype_from_tag(tag: u8) -> Result<DataType> {
    match tag {
        0 => Ok(DataType::Int),
        1 => Ok(DataType::Double),
        2 => Ok(DataType::String),
        t => Err(Error::Format(format!("unknown column type tag {t}"))),
    }
}

fn put_stat(out: &mut Vec<u8>, d: &Datum) {
    match d {
        Datum::Int(v) => out.extend_from_slice(&v.to_le_bytes()),
        Datum::Double(v) => out.extend_from_slice(&v.to_bits().to_le_bytes()),
        Datum::Str(s) => {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        Datum::Null => unreachable!(),
    }
}

fn min_max(values: &[Datum]) -> Option<(Datum, Datum)> {
    let mut it = values.iter().filter(|v| !v.is_null());
    let first = it.next()?;
    let (mut lo, mut hi) = (first, first);
    for v in it {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    Some((lo.clone(), hi.clone()))
}

fn encode_header(fingerprint: u64, types: &[DataType], stripes: &[StripeMeta]) -> Vec<u8> {
    let mut h = Vec::new();
    h.extend_from_slice(&VERSION.to_le_bytes());
    h.extend_from_slice(&fingerprint.to_le_bytes());
    h.extend_from_slice(&(types.len() as u32).to_le_bytes());
    for t in types {
        h.push(dtype_tag(*t));
    }
    h.extend_from_slice(&(stripes.len() as u32).to_le_bytes());
    for s in stripes {
        h.extend_from_slice(&s.offset.to_le_bytes());
        h.extend_from_slice(&s.length.to_le_bytes());
        h.extend_from_slice(&s.row_count.to_le_bytes());
        for c in &s.columns {
            h.push(c.encoding.tag());
            h.extend_from_slice(&c.block_offset.to_le_bytes());
            h.extend_from_slice(&c.block_length.to_le_bytes());
            h.extend_from_slice(&c.null_count.to_le_bytes());
            match &c.min_max {
                Some((lo, hi)) => {
                    h.push(1);
                    put_stat(&mut h, lo);
                    put_stat(&mut h, hi);
                }
                None => h.push(0),
            }
        }
    }
    h
}

/// Encodes rows into a columnar file with `ceil(n / stripe_rows)` stripes.
pub fn encode_columnar(rows: &[Row], columns: &[ColumnDef], stripe_rows: usize) -> Vec<u8> {
    let stripe_rows = stripe_rows.max(1);
    let types: Vec<DataType> = columns.iter().map(|c| c.dtype).collect();
    let mut data = Vec::new();
    let mut stripes = Vec::new();
    for chunk in rows.chunks(stripe_rows) {
        let stripe_start = data.len() as u64;
        let mut cols = Vec::with_capacity(types.len());
        for c in 0..types.len() {
            let values: Vec<Datum> = chunk.iter().map(|r| r[c].clone()).collect();
            let (enc, bytes) = encoding::choose(&values);
            let block_offset = data.len() as u64;
            data.push(enc.tag());
            data.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
            data.extend_from_slice(&bytes);
            cols.push(ColumnStats {
                encoding: enc,
                block_offset,
                block_length: data.len() as u64 - block_offset,
                null_count: values.iter().filter(|v| v.is_null()).count() as u64,
                min_max: min_max(&values),
            });
        }
        stripes.push(StripeMeta {
            offset: stripe_start,
            length: data.len() as u64 - stripe_start,
            row_count: chunk.len() as u64,
            columns: cols,
        });
    }
    let fingerprint = schema_fingerprint(columns);
    // Offsets are fixed-width, so the header length does not depend on them.
    let header_len = encode_header(fingerprint, &types, &stripes).len() as u64;
    let base = PREAMBLE_LEN + header_len;
    for s in &mut stripes {
        s.offset += base;
        for c in &mut s.columns {
            c.block_offset += base;
        }
    }
    let header = encode_header(fingerprint, &types, &stripes);
    let mut out = Vec::with_capacity(base as usize + data.len() + FOOTER_LEN as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&data);
    out.extend_from_slice(&(rows.len() as u64).to_le_bytes());
    out.extend_from_slice(MAGIC);
    out
}

fn decode_header(bytes: &[u8], header_len: u64) -> Result<(u64, Vec<DataType>, Vec<StripeMeta>)> {
    let mut r = Reader::new(bytes);
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported columnar version {version}")));
    }
    let fingerprint = r.u64()?;
    let ncols = r.u32()? as usize;
    let mut types = Vec::with_capacity(ncols);
    for _ in 0..ncols {
        types.push(dtype_from_tag(r.u8()?)?);
    }
    let nstripes = r.u32()? as usize;
    let mut stripes = Vec::with_capacity(nstripes);
    for _ in 0..nstripes {
        let offset = r.u64()?;
        let length = r.u64()?;
        let row_count = r.u64()?;
        let mut columns = Vec::with_capacity(ncols);
        for t in &types {
            let encoding = Encoding::from_tag(r.u8()?)?;
            let block_offset = r.u64()?;
            let block_length = r.u64()?;
            let null_count = r.u64()?;
            let min_max = match r.u8()? {
                0 => None,
                1 => Some((r.value(*t)?, r.value(*t)?)),
                f => return Err(Error::Format(format!("bad stats flag {f}"))),
            };
            columns.push(ColumnStats {
                encoding,
                block_offset,
                block_length,
                null_count,
                min_max,
            });
        }
        stripes.push(StripeMeta {
            offset,
            length,
            row_count,
            columns,
        });
    }
    if !r.is_done() {
        return Err(Error::Format(format!("header length {header_len} does not match its contents")));
    }
    let mut last = 0;
    for s in &stripes {
        if s.offset < last.max(PREAMBLE_LEN + header_len) {
            return Err(Error::Format("stripe offsets are not increasing".into()));
        }
        last = s.offset + 1;
    }
    Ok((fingerprint, types, stripes))
}

/// Reads the header and footer of a columnar file. Returns the metadata and
/// the number of bytes read.
pub fn read_columnar_meta(dfs: &Dfs, path: &str) -> Result<(ColumnarMeta, u64)> {
    let size = dfs.file_size(path)?;
    let bad = |m: &str| Error::Format(format!("{path}: {m}"));
    if size < PREAMBLE_LEN + FOOTER_LEN {
        return Err(bad("file too short for a columnar container"));
    }
    let pre = dfs.read_range(path, 0, PREAMBLE_LEN)?;
    if &pre[..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    let header_len = u32::from_le_bytes(pre[4..8].try_into().unwrap()) as u64;
    if PREAMBLE_LEN + header_len + FOOTER_LEN > size {
        return Err(bad("header extends past end of file"));
    }
    let header = dfs.read_range(path, PREAMBLE_LEN, header_len)?;
    let (fingerprint, types, stripes) = decode_header(&header, header_len).map_err(|e| bad(&e.to_string()))?;
    let footer = dfs.read_range(path, size - FOOTER_LEN, FOOTER_LEN)?;
    if &footer[8..] != MAGIC {
        return Err(bad("bad footer magic"));
    }
    let row_count = u64::from_le_bytes(footer[..8].try_into().unwrap());
    if stripes.iter().map(|s| s.row_count).sum::<u64>() != row_count {
        return Err(bad("stripe row counts do not sum to the footer row count"));
    }
    let meta = ColumnarMeta {
        fingerprint,
        types,
        stripes,
        row_count,
        header_len,
    };
    Ok((meta, PREAMBLE_LEN + header_len + FOOTER_LEN))
}

/// True when the stripe statistics prove no row satisfies `pred`.
fn stripe_excludes(stats: &ColumnStats, row_count: u64, pred: &ColumnPredicate) -> bool {
    if stats.null_count == row_count {
        return true;
    }
    let Some((lo, hi)) = &stats.min_max else {
        return true;
    };
    let v = &pred.value;
    let (Some(lo_cmp), Some(hi_cmp)) = (lo.sql_cmp(v), hi.sql_cmp(v)) else {
        return false;
    };
    match pred.op {
        CompareOp::Eq => lo_cmp == Ordering::Greater || hi_cmp == Ordering::Less,
        CompareOp::NotEq => lo_cmp == Ordering::Equal && hi_cmp == Ordering::Equal,
        CompareOp::Lt => lo_cmp != Ordering::Less,
        CompareOp::LtEq => lo_cmp == Ordering::Greater,
        CompareOp::Gt => hi_cmp != Ordering::Greater,
        CompareOp::GtEq => hi_cmp == Ordering::Less,
    }
}

/// A split owns the stripes whose first byte lies inside it.
pub(super) fn scan_columnar_split(
    dfs: &Dfs,
    table: &TableDef,
    part_values: &[Datum],
    split: &FileSplit,
    options: &ScanOptions,
) -> Result<ScanOutput> {
    let mut out = ScanOutput::default();
    if split.length == 0 {
        return Ok(out);
    }
    let (meta, meta_bytes) = read_columnar_meta(dfs, &split.path)?;
    out.bytes_read += meta_bytes;
    if meta.fingerprint != schema_fingerprint(&table.columns) {
        return Err(Error::Format(format!(
            "{}: schema fingerprint does not match table {}",
            split.path,
            table.qualified_name()
        )));
    }
    let data_cols = table.columns.len();
    let needed = needed_columns(options, data_cols + part_values.len());
    let end = split.offset + split.length;
    for stripe in meta.stripes.iter().filter(|s| s.offset >= split.offset && s.offset < end) {
        out.stripes_total += 1;
        if options.stripe_skipping
            && options
                .predicates
                .iter()
                .any(|p| p.column < data_cols && stripe_excludes(&stripe.columns[p.column], stripe.row_count, p))
        {
            out.stripes_skipped += 1;
            continue;
        }
        let n = stripe.row_count as usize;
        let mut decoded: Vec<Option<Vec<Datum>>> = vec![None; data_cols];
        for (c, stats) in stripe.columns.iter().enumerate() {
            if !needed[c] {
                continue;
            }
            let block = dfs.read_range(&split.path, stats.block_offset, stats.block_length)?;
            out.bytes_read += stats.block_length;
            let mut r = Reader::new(&block);
            let tag = r.u8()?;
            let len = r.u32()? as usize;
            if Encoding::from_tag(tag)? != stats.encoding || len + 5 != block.len() {
                return Err(Error::Format(format!("{}: column block header mismatch", split.path)));
            }
            decoded[c] = Some(encoding::decode(&block[5..], stats.encoding, meta.types[c], n)?);
        }
        for i in 0..n {
            let mut full: Row = Vec::with_capacity(data_cols + part_values.len());
            for col in &decoded {
                full.push(col.as_ref().map(|v| v[i].clone()).unwrap_or(Datum::Null));
            }
            full.extend(part_values.iter().cloned());
            out.rows_scanned += 1;
            if row_matches(&full, &options.predicates) {
                out.rows.push(options.projection.iter().map(|&c| full[c].clone()).collect());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols() -> Vec<ColumnDef> {
        vec![ColumnDef::new("k", DataType::Int), ColumnDef::new("s", DataType::String)]
    }

    #[test]
    fn stripes_follow_ceiling_arithmetic() {
        let rows: Vec<Row> = (0..10_000).map(|i| vec![Datum::Int(i), Datum::from("x")]).collect();
        let bytes = encode_columnar(&rows, &cols(), 4096);
        let dfs = Dfs::in_memory();
        dfs.write_file("/f", &bytes).unwrap();
        let (meta, _) = read_columnar_meta(&dfs, "/f").unwrap();
        let counts: Vec<u64> = meta.stripes.iter().map(|s| s.row_count).collect();
        assert_eq!(counts, vec![4096, 4096, 1808]);
        assert_eq!(meta.row_count, 10_000);
        assert_eq!(&bytes[..4], MAGIC);
        assert_eq!(&bytes[bytes.len() - 4..], MAGIC);
    }

    #[test]
    fn stats_ignore_nulls() {
        let rows = vec![
            vec![Datum::Null, Datum::from("b")],
            vec![Datum::Int(5), Datum::Null],
            vec![Datum::Int(-2), Datum::from("a")],
        ];
        let dfs = Dfs::in_memory();
        dfs.write_file("/f", &encode_columnar(&rows, &cols(), 10)).unwrap();
        let (meta, _) = read_columnar_meta(&dfs, "/f").unwrap();
        let k = &meta.stripes[0].columns[0];
        assert_eq!(k.null_count, 1);
        assert_eq!(k.min_max, Some((Datum::Int(-2), Datum::Int(5))));
        assert_eq!(meta.stripes[0].columns[1].min_max, Some((Datum::from("a"), Datum::from("b"))));
    }

    #[test]
    fn exclusion_rules() {
        let stats = ColumnStats {
            encoding: Encoding::Plain,
            block_offset: 0,
            block_length: 0,
            null_count: 0,
            min_max: Some((Datum::Int(10), Datum::Int(20))),
        };
        let p = |op, v: i64| ColumnPredicate { column: 0, op, value: Datum::Int(v) };
        assert!(stripe_excludes(&stats, 5, &p(CompareOp::Eq, 21)));
        assert!(!stripe_excludes(&stats, 5, &p(CompareOp::Eq, 20)));
        assert!(stripe_excludes(&stats, 5, &p(CompareOp::Lt, 10)));
        assert!(!stripe_excludes(&stats, 5, &p(CompareOp::LtEq, 10)));
        assert!(stripe_excludes(&stats, 5, &p(CompareOp::Gt, 20)));
        assert!(!stripe_excludes(&stats, 5, &p(CompareOp::GtEq, 20)));
        assert!(!stripe_excludes(&stats, 5, &p(CompareOp::NotEq, 10)));
    }

    #[test]
    fn empty_file_has_no_stripes() {
        let dfs = Dfs::in_memory();
        dfs.write_file("/f", &encode_columnar(&[], &cols(), 10)).unwrap();
        let (meta, _) = read_columnar_meta(&dfs, "/f").unwrap();
        assert!(meta.stripes.is_empty());
        assert_eq!(meta.row_count, 0);
    }
}
