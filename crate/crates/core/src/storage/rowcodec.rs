//! Headerless binary encoding of row batches for intermediate data. Each row
//! is a u32 cell count followed by tagged cells.

use super::encoding::Reader;
use crate::error::{Error, Result};
use crate::types::{DataType, Datum, Row};

const TAG_NULL: u8 = 0;
const TAG_INT: u8 = 1;
const TAG_DOUBLE: u8 = 2;
const TAG_STR: u8 = 3;

pub fn encode_row(out: &mut Vec<u8>, row: &[Datum]) {
    out.extend_from_slice(&(row.len() as u32).to_le_bytes());
    for d in row {
        match d {
            Datum::Null => out.push(TAG_NULL),
            Datum::Int(v) => {
                out.push(TAG_INT);
                out.extend_from_slice(&v.to_le_bytes());
            }
            Datum::Double(v) => {
                out.push(TAG_DOUBLE);
                out.extend_from_slice(&v.to_bits().to_le_bytes());
            }
            Datum::Str(s) => {
                out.push(TAG_STR);
                out.extend_from_slice(&(s.len() as u32).to_le_bytes());
                out.extend_from_slice(s.as_bytes());
            }
        }
    }
}

pub fn encode_rows(rows: &[Row]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in rows {
        encode_row(&mut out, r);
    }
    out
}

/// Encoded size of one row, without materializing it.
pub fn encoded_len(row: &[Datum]) -> u64 {
    4 + row
        .iter()
        .map(|d| match d {
            Datum::Null => 1,
            Datum::Int(_) | Datum::Double(_) => 9,
            Datum::Str(s) => 5 + s.len() as u64,
        })
        .sum::<u64>()
}

pub fn decode_rows(bytes: &[u8]) -> Result<Vec<Row>> {
    let mut r = Reader::new(bytes);
    let mut rows = Vec::new();
    while !r.is_done() {
        let n = r.u32()? as usize;
        let mut row = Vec::with_capacity(n);
        for _ in 0..n {
            row.push(match r.u8()? {
                TAG_NULL => Datum::Null,
                TAG_INT => r.value(DataType::Int)?,
                TAG_DOUBLE => r.value(DataType::Double)?,
                TAG_STR => r.value(DataType::String)?,
                t => return Err(Error::Format(format!("bad row codec tag {t}"))),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}
