//! Lightweight column encodings for the columnar container.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::types::{DataType, Datum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Encoding {
    Plain,
    Rle,
    Dict,
}

impl Encoding {
    pub fn tag(self) -> u8 {
        match self {
            Encoding::Plain => 0,
            Encoding::Rle => 1,
            Encoding::Dict => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Encoding::Plain),
            1 => Ok(Encoding::Rle),
            2 => Ok(Encoding::Dict),
            t => Err(Error::Format(format!("unknown encoding tag {t}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Encoding::Plain => "PLAIN",
            Encoding::Rle => "RLE",
            Encoding::Dict => "DICT",
        }
    }
}

/// Distinct-value ratio below which dictionary encoding is allowed.
pub const DICT_THRESHOLD: f64 = 0.5;

fn put_value(out: &mut Vec<u8>, d: &Datum) {
    match d {
        Datum::Int(v) => out.extend_from_slice(&v.to_le_bytes()),
        Datum::Double(v) => out.extend_from_slice(&v.to_bits().to_le_bytes()),
        Datum::Str(s) => {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        Datum::Null => unreachable!("NULLs are encoded out of band"),
    }
}

pub(super) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("truncated columnar data".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn value(&mut self, dtype: DataType) -> Result<Datum> {
        Ok(match dtype {
            DataType::Int => Datum::Int(self.u64()? as i64),
            DataType::Double => Datum::Double(f64::from_bits(self.u64()?)),
            DataType::String => {
                let n = self.u32()? as usize;
                let bytes = self.take(n)?;
                Datum::Str(
                    String::from_utf8(bytes.to_vec())
                        .map_err(|_| Error::Format("invalid UTF-8 in string value".into()))?,
                )
            }
        })
    }

    pub fn is_done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

/// Null bitmap (bit set = NULL) followed by the non-NULL values.
fn encode_plain(values: &[Datum]) -> Vec<u8> {
    let mut out = vec![0u8; values.len().div_ceil(8)];
    for (i, v) in values.iter().enumerate() {
        if v.is_null() {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    for v in values.iter().filter(|v| !v.is_null()) {
        put_value(&mut out, v);
    }
    out
}

/// Runs of identical values: (run length u32, null flag u8, value).
fn encode_rle(values: &[Datum]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let mut j = i + 1;
        while j < values.len() && values[j] == values[i] {
            j += 1;
        }
        out.extend_from_slice(&((j - i) as u32).to_le_bytes());
        if values[i].is_null() {
            out.push(1);
        } else {
            out.push(0);
            put_value(&mut out, &values[i]);
        }
        i = j;
    }
    out
}

fn index_width(entries: usize) -> u8 {
    if entries < u8::MAX as usize {
        1
    } else if entries < u16::MAX as usize {
        2
    } else {
        4
    }
}

/// Dictionary in first-appearance order, then one index per row where 0 is
/// NULL and `k` refers to entry `k - 1`.
fn encode_dict(values: &[Datum]) -> Vec<u8> {
    let mut dict: Vec<&Datum> = Vec::new();
    let mut ids: HashMap<&Datum, u32> = HashMap::new();
    let mut indices = Vec::with_capacity(values.len());
    for v in values {
        if v.is_null() {
            indices.push(0);
            continue;
        }
        let id = *ids.entry(v).or_insert_with(|| {
            dict.push(v);
            dict.len() as u32
        });
        indices.push(id);
    }
    let mut out = Vec::new();
    out.extend_from_slice(&(dict.len() as u32).to_le_bytes());
    for d in &dict {
        put_value(&mut out, d);
    }
    let width = index_width(dict.len());
    out.push(width);
    for idx in indices {
        match width {
            1 => out.push(idx as u8),
            2 => out.extend_from_slice(&(idx as u16).to_le_bytes()),
            _ => out.extend_from_slice(&idx.to_le_bytes()),
        }
    }
    out
}

pub fn encode(values: &[Datum], encoding: Encoding) -> Vec<u8> {
    match encoding {
        Encoding::Plain => encode_plain(values),
        Encoding::Rle => encode_rle(values),
        Encoding::Dict => encode_dict(values),
    }
}

fn distinct_ratio(values: &[Datum]) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    let distinct: std::collections::HashSet<&Datum> = values.iter().filter(|v| !v.is_null()).collect();
    distinct.len() as f64 / values.len() as f64
}

/// Picks the smallest eligible encoding. RLE is eligible when it beats
/// PLAIN, DICT when the distinct ratio is under the threshold; equal sizes
/// prefer RLE, then DICT, then PLAIN.
pub fn choose(values: &[Datum]) -> (Encoding, Vec<u8>) {
    let mut best = (Encoding::Plain, encode(values, Encoding::Plain));
    if distinct_ratio(values) < DICT_THRESHOLD {
        let dict = encode_dict(values);
        if dict.len() <= best.1.len() {
            best = (Encoding::Dict, dict);
        }
    }
    let rle = encode_rle(values);
    if rle.len() < encode_plain_len(values) && rle.len() <= best.1.len() {
        best = (Encoding::Rle, rle);
    }
    best
}

fn encode_plain_len(values: &[Datum]) -> usize {
    values.len().div_ceil(8)
        + values
            .iter()
            .map(|v| match v {
                Datum::Null => 0,
                Datum::Int(_) | Datum::Double(_) => 8,
                Datum::Str(s) => 4 + s.len(),
            })
            .sum::<usize>()
}

pub fn decode(bytes: &[u8], encoding: Encoding, dtype: DataType, rows: usize) -> Result<Vec<Datum>> {
    let mut r = Reader::new(bytes);
    let mut out = Vec::with_capacity(rows);
    match encoding {
        Encoding::Plain => {
            let bitmap = r.take(rows.div_ceil(8))?;
            for i in 0..rows {
                if bitmap[i / 8] & (1 << (i % 8)) != 0 {
                    out.push(Datum::Null);
                } else {
                    out.push(r.value(dtype)?);
                }
            }
        }
        Encoding::Rle => {
            while out.len() < rows {
                let run = r.u32()? as usize;
                if run == 0 || out.len() + run > rows {
                    return Err(Error::Format("bad RLE run length".into()));
                }
                let v = if r.u8()? == 1 { Datum::Null } else { r.value(dtype)? };
                out.extend(std::iter::repeat_n(v, run));
            }
        }
        Encoding::Dict => {
            let n = r.u32()? as usize;
            let mut dict = Vec::with_capacity(n);
            for _ in 0..n {
                dict.push(r.value(dtype)?);
            }
            let width = r.u8()?;
            for _ in 0..rows {
                let idx = match width {
                    1 => r.u8()? as usize,
                    2 => r.u16()? as usize,
                    4 => r.u32()? as usize,
                    w => return Err(Error::Format(format!("bad dictionary index width {w}"))),
                };
                if idx == 0 {
                    out.push(Datum::Null);
                } else {
                    out.push(
                        dict.get(idx - 1)
                            .cloned()
                            .ok_or_else(|| Error::Format("dictionary index out of range".into()))?,
                    );
                }
            }
        }
    }
    if !r.is_done() {
        return Err(Error::Format("trailing bytes in column block".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn datum(dtype: DataType) -> BoxedStrategy<Datum> {
        let value = match dtype {
            DataType::Int => (-3i64..3).prop_map(Datum::Int).boxed(),
            DataType::Double => prop_oneof![Just(0.5), Just(-0.0), Just(1e300), any::<f64>()]
                .prop_map(Datum::Double)
                .boxed(),
            DataType::String => "[a-c]{0,3}".prop_map(Datum::Str).boxed(),
        };
        prop_oneof![1 => Just(Datum::Null), 4 => value].boxed()
    }

    fn column() -> impl Strategy<Value = (DataType, Vec<Datum>)> {
        prop_oneof![Just(DataType::Int), Just(DataType::Double), Just(DataType::String)]
            .prop_flat_map(|t| (Just(t), proptest::collection::vec(datum(t), 0..300)))
    }

    proptest! {
        #[test]
        fn every_encoding_roundtrips((dtype, values) in column()) {
            for enc in [Encoding::Plain, Encoding::Rle, Encoding::Dict] {
                let bytes = encode(&values, enc);
                let back = decode(&bytes, enc, dtype, values.len()).unwrap();
                prop_assert_eq!(&back, &values);
            }
        }

        #[test]
        fn chosen_encoding_is_never_larger_than_plain((_, values) in column()) {
            let (enc, bytes) = choose(&values);
            prop_assert!(bytes.len() <= encode(&values, Encoding::Plain).len());
            if enc == Encoding::Dict {
                prop_assert!(distinct_ratio(&values) < DICT_THRESHOLD);
            }
        }
    }

    #[test]
    fn single_value_column_compresses() {
        let values = vec![Datum::from("D"); 1000];
        let (enc, bytes) = choose(&values);
        assert!(matches!(enc, Encoding::Rle | Encoding::Dict));
        assert!(bytes.len() < encode(&values, Encoding::Plain).len());
        assert_eq!(enc, Encoding::Rle);
    }

    #[test]
    fn unique_values_stay_plain() {
        let values: Vec<Datum> = (0..100).map(Datum::Int).collect();
        assert_eq!(choose(&values).0, Encoding::Plain);
    }

    #[test]
    fn interleaved_low_cardinality_uses_dict() {
        let values: Vec<Datum> = (0..1000).map(|i| Datum::from(["D", "F", "S"][i % 3])).collect();
        assert_eq!(choose(&values).0, Encoding::Dict);
    }
}
