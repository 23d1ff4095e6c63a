use super::{check_row_types, row_matches, FileSplit, ScanOptions, ScanOutput};
use crate::dfs::Dfs;
use crate::error::{Error, Result};
use crate::metastore::TableDef;
use crate::types::{format_double, DataType, Datum, Row};

/// Chunk size used when a split has to read past its end to finish a line.
const READ_AHEAD: u64 = 4096;

fn is_int_token(s: &str) -> bool {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn is_double_token(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    let digits_ok = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if int_part.len() + frac_part.len() == 0 || !digits_ok(int_part) || !digits_ok(frac_part) {
        return false;
    }
    match exponent {
        None => true,
        Some(e) => is_int_token(e),
    }
}

/// Schema-on-read conversion of one raw text cell. Never fails: malformed
/// numerics become NULL and strings are taken verbatim.
pub fn decode_text_cell(raw: &str, dtype: DataType) -> Datum {
    match dtype {
        DataType::String => Datum::Str(raw.to_string()),
        DataType::Int => {
            let t = raw.trim_matches(' ');
            if !is_int_token(t) {
                return Datum::Null;
            }
            t.parse::<i64>().map(Datum::Int).unwrap_or(Datum::Null)
        }
        DataType::Double => {
            let t = raw.trim_matches(' ');
            if !is_double_token(t) {
                return Datum::Null;
            }
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Datum::Double(v),
                _ => Datum::Null,
            }
        }
    }
}

/// Renders rows as delimited text, one line per row. NULL becomes an empty
/// token; a STRING holding the delimiter or a line break cannot be written.
pub fn encode_text(rows: &[Row], delimiter: char, types: &[DataType]) -> Result<Vec<u8>> {
    let mut out = String::new();
    for row in rows {
        check_row_types(row, types)?;
        for (i, d) in row.iter().enumerate() {
            if i > 0 {
                out.push(delimiter);
            }
            match d {
                Datum::Null => {}
                Datum::Int(v) => out.push_str(&v.to_string()),
                Datum::Double(v) => out.push_str(&format_double(*v)),
                Datum::Str(s) => {
                    if s.contains(delimiter) || s.contains(['\n', '\r']) {
                        return Err(Error::Write(format!(
                            "value {s:?} contains the field delimiter or a line break"
                        )));
                    }
                    out.push_str(s);
                }
            }
        }
        out.push('\n');
    }
    Ok(out.into_bytes())
}

/// Reads `[from, to)` and keeps reading ahead until a newline at or after
/// `to` (or end of file) is included.
fn read_lines_region(dfs: &Dfs, split: &FileSplit, from: u64, to: u64, bytes_read: &mut u64) -> Result<Vec<u8>> {
    let mut buf = dfs.read_range(&split.path, from, to - from)?;
    *bytes_read += to - from;
    let mut pos = to;
    let ends_line = |b: &[u8]| b.last() == Some(&b'\n');
    while !ends_line(&buf) && pos < split.file_size {
        let n = READ_AHEAD.min(split.file_size - pos);
        buf.extend(dfs.read_range(&split.path, pos, n)?);
        *bytes_read += n;
        pos += n;
    }
    Ok(buf)
}

/// Byte offset just past the first `lines` lines of the file.
fn header_end(dfs: &Dfs, split: &FileSplit, lines: usize, bytes_read: &mut u64) -> Result<u64> {
    let mut pos = 0;
    let mut seen = 0;
    while seen < lines && pos < split.file_size {
        let n = READ_AHEAD.min(split.file_size - pos);
        let chunk = dfs.read_range(&split.path, pos, n)?;
        *bytes_read += n;
        for (i, b) in chunk.iter().enumerate() {
            if *b == b'\n' {
                seen += 1;
                if seen == lines {
                    return Ok(pos + i as u64 + 1);
                }
            }
        }
        pos += n;
    }
    Ok(split.file_size)
}

/// A split owns the lines that start inside `[offset, offset + length)`.
pub(super) fn scan_text_split(
    dfs: &Dfs,
    table: &TableDef,
    part_values: &[Datum],
    split: &FileSplit,
    options: &ScanOptions,
) -> Result<ScanOutput> {
    let mut out = ScanOutput::default();
    let end = split.offset + split.length;
    if split.length == 0 || split.offset >= split.file_size {
        return Ok(out);
    }
    let skip = table.skip_header_lines();
    let mut first_line_start = split.offset;
    let buf = if split.offset == 0 {
        read_lines_region(dfs, split, 0, end, &mut out.bytes_read)?
    } else {
        let mut buf = read_lines_region(dfs, split, split.offset - 1, end, &mut out.bytes_read)?;
        let cut = match buf.iter().position(|b| *b == b'\n') {
            Some(i) => i + 1,
            None => buf.len(),
        };
        first_line_start = split.offset - 1 + cut as u64;
        buf.drain(..cut);
        buf
    };
    let mut body_start = first_line_start;
    if skip > 0 {
        let h = if split.offset == 0 {
            let mut seen = 0;
            let mut at = 0u64;
            for (i, b) in buf.iter().enumerate() {
                if seen == skip {
                    break;
                }
                if *b == b'\n' {
                    seen += 1;
                    at = i as u64 + 1;
                }
            }
            if seen < skip {
                buf.len() as u64
            } else {
                at
            }
        } else if first_line_start < end {
            header_end(dfs, split, skip, &mut out.bytes_read)?
        } else {
            0
        };
        body_start = body_start.max(h);
    }

    let delimiter = table.field_delimiter;
    let data_cols = table.columns.len();
    let types = table.data_types();
    let needed = needed_columns(options, table.columns.len() + table.partition_columns.len());

    let mut pos = first_line_start;
    let mut rest: &[u8] = &buf;
    while !rest.is_empty() && pos < end {
        let (line, consumed) = match rest.iter().position(|b| *b == b'\n') {
            Some(i) => (&rest[..i], i + 1),
            None => (rest, rest.len()),
        };
        let line_start = pos;
        pos += consumed as u64;
        rest = &rest[consumed..];
        if line_start < body_start {
            continue;
        }
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        let text = String::from_utf8_lossy(line);
        let mut full: Row = vec![Datum::Null; data_cols + part_values.len()];
        for (i, cell) in text.split(delimiter).enumerate().take(data_cols) {
            if needed[i] {
                full[i] = decode_text_cell(cell, types[i]);
            }
        }
        for (j, v) in part_values.iter().enumerate() {
            full[data_cols + j] = v.clone();
        }
        out.rows_scanned += 1;
        if row_matches(&full, &options.predicates) {
            out.rows.push(options.projection.iter().map(|&c| full[c].clone()).collect());
        }
    }
    Ok(out)
}

pub(super) fn needed_columns(options: &ScanOptions, width: usize) -> Vec<bool> {
    let mut needed = vec![false; width];
    for &c in &options.projection {
        needed[c] = true;
    }
    for p in &options.predicates {
        needed[p.column] = true;
    }
    needed
}
