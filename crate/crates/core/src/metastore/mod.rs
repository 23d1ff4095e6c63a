//! The catalog: databases, table definitions and registered partitions.
//!
//! Metadata lives apart from the data. The catalog is persisted as a single
//! JSON document on the host file system while table contents live under
//! `<warehouse_root>/<db>.db/<table>/` on the simulated DFS.

mod partition;
mod persist;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dfs::Dfs;
use crate::error::{Error, Result};
use crate::types::DataType;

pub use partition::{escape_partition_value, unescape_partition_value, PartitionKey, DEFAULT_PARTITION_NAME};

pub const DEFAULT_DATABASE: &str = "default";
pub const DEFAULT_WAREHOUSE_ROOT: &str = "/apps/hive/warehouse";
pub const SKIP_HEADER_PROPERTY: &str = "skip.header.line.count";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    pub dtype: DataType,
}

impl ColumnDef {
    pub fn new(name: impl AsRef<str>, dtype: DataType) -> Self {
        Self {
            name: name.as_ref().to_ascii_lowercase(),
            dtype,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageFormat {
    Textfile,
    Orclike,
}

impl StorageFormat {
    pub fn keyword(self) -> &'static str {
        match self {
            StorageFormat::Textfile => "TEXTFILE",
            StorageFormat::Orclike => "ORC",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDef {
    pub database: String,
    pub name: String,
    pub columns: Vec<ColumnDef>,
    pub partition_columns: Vec<ColumnDef>,
    pub format: StorageFormat,
    pub field_delimiter: char,
    pub properties: BTreeMap<String, String>,
    pub location: String,
}

/// Builder-style constructor input for [`TableDef`]; the location is derived
/// from the warehouse root.
#[derive(Debug, Clone)]
pub struct TableSpec {
    pub database: String,
    pub name: String,
    pub columns: Vec<ColumnDef>,
    pub partition_columns: Vec<ColumnDef>,
    pub format: StorageFormat,
    pub field_delimiter: char,
    pub properties: BTreeMap<String, String>,
}

impl TableSpec {
    pub fn new(database: &str, name: &str, columns: Vec<ColumnDef>) -> Self {
        Self {
            database: database.to_ascii_lowercase(),
            name: name.to_ascii_lowercase(),
            columns,
            partition_columns: Vec::new(),
            format: StorageFormat::Textfile,
            field_delimiter: ',',
            properties: BTreeMap::new(),
        }
    }

    pub fn partitioned_by(mut self, cols: Vec<ColumnDef>) -> Self {
        self.partition_columns = cols;
        self
    }

    pub fn format(mut self, format: StorageFormat) -> Self {
        self.format = format;
        self
    }

    pub fn delimiter(mut self, c: char) -> Self {
        self.field_delimiter = c;
        self
    }

    pub fn property(mut self, key: &str, value: &str) -> Self {
        self.properties.insert(key.to_string(), value.to_string());
        self
    }
}

pub fn table_location(warehouse_root: &str, database: &str, table: &str) -> String {
    format!(
        "{}/{}.db/{}",
        warehouse_root.trim_end_matches('/'),
        database.to_ascii_lowercase(),
        table.to_ascii_lowercase()
    )
}

impl TableDef {
    pub fn from_spec(spec: TableSpec, warehouse_root: &str) -> Result<Self> {
        let def = TableDef {
            location: table_location(warehouse_root, &spec.database, &spec.name),
            database: spec.database.to_ascii_lowercase(),
            name: spec.name.to_ascii_lowercase(),
            columns: spec
                .columns
                .into_iter()
                .map(|c| ColumnDef::new(c.name, c.dtype))
                .collect(),
            partition_columns: spec
                .partition_columns
                .into_iter()
                .map(|c| ColumnDef::new(c.name, c.dtype))
                .collect(),
            format: spec.format,
            field_delimiter: spec.field_delimiter,
            properties: spec.properties,
        };
        def.validate()?;
        Ok(def)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.database.is_empty() {
            return Err(Error::Schema("table and database names must be non-empty".into()));
        }
        if self.columns.is_empty() {
            return Err(Error::Schema(format!("table {} has no columns", self.qualified_name())));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.to_ascii_lowercase()) {
                return Err(Error::Schema(format!("duplicate column {}", c.name)));
            }
        }
        for c in &self.partition_columns {
            if !seen.insert(c.name.to_ascii_lowercase()) {
                return Err(Error::Schema(format!(
                    "partition column {} repeats a table column",
                    c.name
                )));
            }
        }
        if matches!(self.field_delimiter, '\n' | '\r') {
            return Err(Error::Schema("field delimiter cannot be a line terminator".into()));
        }
        if let Some(v) = self.properties.get(SKIP_HEADER_PROPERTY) {
            v.trim().parse::<u64>().map_err(|_| {
                Error::Schema(format!("{SKIP_HEADER_PROPERTY} must be a non-negative integer, got {v:?}"))
            })?;
        }
        Ok(())
    }

    pub fn qualified_name(&self) -> String {
        format!("{}.{}", self.database, self.name)
    }

    pub fn skip_header_lines(&self) -> usize {
        self.properties
            .get(SKIP_HEADER_PROPERTY)
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(0)
    }

    pub fn is_partitioned(&self) -> bool {
        !self.partition_columns.is_empty()
    }

    /// Data columns followed by partition columns: the row shape queries see.
    pub fn full_schema(&self) -> Vec<ColumnDef> {
        self.columns
            .iter()
            .chain(&self.partition_columns)
            .cloned()
            .collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        let name = name.to_ascii_lowercase();
        self.columns
            .iter()
            .chain(&self.partition_columns)
            .position(|c| c.name == name)
    }

    pub fn data_types(&self) -> Vec<DataType> {
        self.columns.iter().map(|c| c.dtype).collect()
    }

    pub fn partition_dir(&self, key: &PartitionKey) -> String {
        format!("{}/{}", self.location, key.dir_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableEntry {
    pub def: TableDef,
    /// Keyed by directory name so iteration is lexicographic.
    partitions: BTreeMap<String, PartitionKey>,
}

impl TableEntry {
    pub fn partitions(&self) -> impl Iterator<Item = &PartitionKey> {
        self.partitions.values()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metastore {
    warehouse_root: String,
    databases: BTreeMap<String, BTreeMap<String, TableEntry>>,
}

impl Default for Metastore {
    fn default() -> Self {
        Self::new(DEFAULT_WAREHOUSE_ROOT)
    }
}

impl Metastore {
    pub fn new(warehouse_root: &str) -> Self {
        Self {
            warehouse_root: warehouse_root.trim_end_matches('/').to_string(),
            databases: BTreeMap::new(),
        }
    }

    pub fn warehouse_root(&self) -> &str {
        &self.warehouse_root
    }

    pub fn create_table(&mut self, spec: TableSpec, dfs: &Dfs) -> Result<&TableDef> {
        let def = TableDef::from_spec(spec, &self.warehouse_root)?;
        self.insert_table(def, dfs)
    }

    pub fn insert_table(&mut self, def: TableDef, dfs: &Dfs) -> Result<&TableDef> {
        def.validate()?;
        let tables = self.databases.entry(def.database.clone()).or_default();
        if tables.contains_key(&def.name) {
            return Err(Error::AlreadyExists(format!("table {}", def.qualified_name())));
        }
        dfs.mkdirs(&def.location)?;
        let name = def.name.clone();
        tables.insert(
            name.clone(),
            TableEntry {
                def,
                partitions: BTreeMap::new(),
            },
        );
        Ok(&tables[&name].def)
    }

    pub fn table(&self, database: &str, name: &str) -> Result<&TableEntry> {
        let db = database.to_ascii_lowercase();
        let name = name.to_ascii_lowercase();
        self.databases
            .get(&db)
            .and_then(|t| t.get(&name))
            .ok_or_else(|| Error::NotFound(format!("table {db}.{name}")))
    }

    fn table_mut(&mut self, database: &str, name: &str) -> Result<&mut TableEntry> {
        let db = database.to_ascii_lowercase();
        let name = name.to_ascii_lowercase();
        self.databases
            .get_mut(&db)
            .and_then(|t| t.get_mut(&name))
            .ok_or_else(|| Error::NotFound(format!("table {db}.{name}")))
    }

    pub fn tables(&self) -> impl Iterator<Item = &TableEntry> {
        self.databases.values().flat_map(|t| t.values())
    }

    /// Columns in declaration order, then partition columns.
    pub fn describe(&self, database: &str, name: &str) -> Result<Vec<(String, DataType)>> {
        let entry = self.table(database, name)?;
        Ok(entry
            .def
            .full_schema()
            .into_iter()
            .map(|c| (c.name, c.dtype))
            .collect())
    }

    /// Registers a partition; registering the same key again is a no-op.
    pub fn register_partition(&mut self, database: &str, name: &str, key: PartitionKey) -> Result<()> {
        let entry = self.table_mut(database, name)?;
        let def = &entry.def;
        if !def.is_partitioned() {
            return Err(Error::Unsupported(format!(
                "table {} is not partitioned",
                def.qualified_name()
            )));
        }
        key.check_against(&def.partition_columns)?;
        entry.partitions.insert(key.dir_name(), key);
        Ok(())
    }

    pub fn show_partitions(&self, database: &str, name: &str) -> Result<Vec<PartitionKey>> {
        let entry = self.table(database, name)?;
        if !entry.def.is_partitioned() {
            return Err(Error::Unsupported(format!(
                "SHOW PARTITIONS on non-partitioned table {}",
                entry.def.qualified_name()
            )));
        }
        Ok(entry.partitions.values().cloned().collect())
    }

    pub fn clear_partitions(&mut self, database: &str, name: &str) -> Result<()> {
        self.table_mut(database, name)?.partitions.clear();
        Ok(())
    }
}
