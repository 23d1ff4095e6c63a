use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{table_location, ColumnDef, Metastore, PartitionKey, StorageFormat, TableDef, TableEntry};
use crate::error::{Error, Result};

const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRecord {
    columns: Vec<ColumnDef>,
    partition_columns: Vec<ColumnDef>,
    format: StorageFormat,
    delimiter: String,
    properties: BTreeMap<String, String>,
    location: String,
    partitions: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct DatabaseRecord {
    tables: BTreeMap<String, Value>,
}

impl Metastore {
    pub fn to_json(&self) -> String {
        let mut databases = serde_json::Map::new();
        for (db, tables) in &self.databases {
            let mut tmap = serde_json::Map::new();
            for (name, entry) in tables {
                let def = &entry.def;
                let rec = TableRecord {
                    columns: def.columns.clone(),
                    partition_columns: def.partition_columns.clone(),
                    format: def.format,
                    delimiter: def.field_delimiter.to_string(),
                    properties: def.properties.clone(),
                    location: def.location.clone(),
                    partitions: entry.partitions.keys().cloned().collect(),
                };
                tmap.insert(name.clone(), serde_json::to_value(rec).expect("serializable"));
            }
            databases.insert(db.clone(), serde_json::json!({ "tables": tmap }));
        }
        let doc = serde_json::json!({
            "format_version": FORMAT_VERSION,
            "warehouse_root": self.warehouse_root,
            "databases": databases,
        });
        serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("catalog document at line {} column {}: {e}", e.line(), e.column())))?;
        let obj = doc
            .as_object()
            .ok_or_else(|| Error::Parse("catalog document is not an object".into()))?;
        match obj.get("format_version").and_then(Value::as_u64) {
            Some(FORMAT_VERSION) => {}
            other => {
                return Err(Error::Parse(format!("record format_version: unsupported value {other:?}")))
            }
        }
        let root = obj
            .get("warehouse_root")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("record warehouse_root: missing or not a string".into()))?;
        let mut ms = Metastore::new(root);
        let dbs = obj
            .get("databases")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Parse("record databases: missing or not an object".into()))?;
        for (db, dbval) in dbs {
            let dbrec: DatabaseRecord = serde_json::from_value(dbval.clone())
                .map_err(|e| Error::Parse(format!("record databases.{db}: {e}")))?;
            let tables = ms.databases.entry(db.clone()).or_default();
            for (name, tval) in dbrec.tables {
                let record = format!("databases.{db}.tables.{name}");
                let rec: TableRecord = serde_json::from_value(tval)
                    .map_err(|e| Error::Parse(format!("record {record}: {e}")))?;
                let mut chars = rec.delimiter.chars();
                let delimiter = match (chars.next(), chars.next()) {
                    (Some(c), None) => c,
                    _ => {
                        return Err(Error::Parse(format!(
                            "record {record}: delimiter must be a single character"
                        )))
                    }
                };
                let def = TableDef {
                    database: db.clone(),
                    name: name.clone(),
                    columns: rec.columns,
                    partition_columns: rec.partition_columns,
                    format: rec.format,
                    field_delimiter: delimiter,
                    properties: rec.properties,
                    location: rec.location,
                };
                def.validate()
                    .map_err(|e| Error::Parse(format!("record {record}: {e}")))?;
                if def.location != table_location(root, db, &name) {
                    return Err(Error::Parse(format!(
                        "record {record}: location {} is not under the warehouse root",
                        def.location
                    )));
                }
                let mut partitions = BTreeMap::new();
                for dir in rec.partitions {
                    let key = PartitionKey::parse_dir_name(&dir)
                        .and_then(|k| k.check_against(&def.partition_columns).map(|_| k))
                        .map_err(|e| Error::Parse(format!("record {record}: partition {dir}: {e}")))?;
                    partitions.insert(key.dir_name(), key);
                }
                tables.insert(name.clone(), TableEntry { def, partitions });
            }
        }
        Ok(ms)
    }

    /// Writes the catalog atomically (temp file, then rename).
    pub fn persist(&self, path: &Path) -> Result<()> {
        let display = path.display().to_string();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(&display, e))?;
        }
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, self.to_json()).map_err(|e| Error::io(&display, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(&display, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }
}
