use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::ColumnDef;
use crate::error::{Error, Result};

/// Directory value used for rows whose partition column is NULL.
pub const DEFAULT_PARTITION_NAME: &str = "__HIVE_DEFAULT_PARTITION__";

/// One value per partition column, in partition-column order. Values are
/// kept unescaped; escaping happens only when forming directory names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartitionKey {
    pub values: Vec<(String, String)>,
}

fn is_safe(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-')
}

pub fn escape_partition_value(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for &b in value.as_bytes() {
        if is_safe(b) {
            out.push(b as char);
        } else {
            let _ = write!(out, "%{b:02X}");
        }
    }
    out
}

pub fn unescape_partition_value(escaped: &str) -> Result<String> {
    let bytes = escaped.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = escaped
                .get(i + 1..i + 3)
                .ok_or_else(|| Error::Format(format!("truncated escape in {escaped:?}")))?;
            let v = u8::from_str_radix(hex, 16)
                .map_err(|_| Error::Format(format!("bad escape %{hex} in {escaped:?}")))?;
            out.push(v);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| Error::Format(format!("escaped value {escaped:?} is not UTF-8")))
}

impl PartitionKey {
    pub fn new(values: Vec<(String, String)>) -> Self {
        Self {
            values: values
                .into_iter()
                .map(|(c, v)| (c.to_ascii_lowercase(), v))
                .collect(),
        }
    }

    pub fn single(column: &str, value: &str) -> Self {
        Self::new(vec![(column.to_string(), value.to_string())])
    }

    /// `col=value[/col2=value2…]`, values escaped.
    pub fn dir_name(&self) -> String {
        self.values
            .iter()
            .map(|(c, v)| format!("{c}={}", escape_partition_value(v)))
            .collect::<Vec<_>>()
            .join("/")
    }

    /// Inverse of [`dir_name`](Self::dir_name).
    pub fn parse_dir_name(rel: &str) -> Result<Self> {
        let mut values = Vec::new();
        for seg in rel.split('/').filter(|s| !s.is_empty()) {
            let (col, val) = seg
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("partition directory {seg:?} lacks '='")))?;
            values.push((col.to_ascii_lowercase(), unescape_partition_value(val)?));
        }
        Ok(Self { values })
    }

    pub fn value(&self, column: &str) -> Option<&str> {
        self.values
            .iter()
            .find(|(c, _)| c == column)
            .map(|(_, v)| v.as_str())
    }

    pub fn check_against(&self, partition_columns: &[ColumnDef]) -> Result<()> {
        if self.values.len() != partition_columns.len()
            || self
                .values
                .iter()
                .zip(partition_columns)
                .any(|((c, _), def)| *c != def.name)
        {
            let expected: Vec<&str> = partition_columns.iter().map(|c| c.name.as_str()).collect();
            return Err(Error::Schema(format!(
                "partition key {} does not match partition columns ({})",
                self.dir_name(),
                expected.join(", ")
            )));
        }
        Ok(())
    }
}
