//! A warehouse session: catalog, file system and options, executing parsed
//! statements one at a time.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::dfs::{file_name, Dfs};
use crate::engines::{execute, EngineConfig, ExecutionReport, QueryResult};
use crate::error::{Error, Result};
use crate::hql::{self, CreateTable, InsertSelect, Literal, LoadData, PartitionSpec, QualifiedName, Select, Statement};
use crate::metastore::{ColumnDef, Metastore, PartitionKey, TableDef, TableSpec, DEFAULT_DATABASE};
use crate::metastore::{DEFAULT_PARTITION_NAME, DEFAULT_WAREHOUSE_ROOT};
use crate::planner::{self, StageDag};
use crate::storage::{self, decode_text_cell, rowcodec, DEFAULT_STRIPE_ROWS};
use crate::types::{DataType, Datum, Row};

pub const CATALOG_FILE: &str = "metastore.json";
pub const DFS_DIR: &str = "dfs";
const SCRATCH_ROOT: &str = "/tmp/minihive";

/// What a statement produced. Statements without a result set have no
/// columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StatementOutput {
    pub kind: &'static str,
    pub columns: Vec<(String, DataType)>,
    pub rows: Vec<Row>,
    pub report: Option<ExecutionReport>,
    /// Rows written by INSERT.
    pub rows_written: u64,
}

impl StatementOutput {
    fn ok(kind: &'static str) -> Self {
        Self { kind, columns: Vec::new(), rows: Vec::new(), report: None, rows_written: 0 }
    }

    fn listing(kind: &'static str, columns: Vec<(String, DataType)>, rows: Vec<Row>) -> Self {
        Self { kind, columns, rows, report: None, rows_written: 0 }
    }

    pub fn has_result_set(&self) -> bool {
        !self.columns.is_empty()
    }

    pub fn simulated_ms(&self) -> f64 {
        self.report.as_ref().map_or(0.0, |r| r.simulated_ms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOptions {
    pub engine: EngineConfig,
    /// Merge INSERT output into files of about the target split size
    /// instead of one file per writer task.
    pub merge_mapfiles: bool,
    pub stripe_rows: usize,
    /// Every SET seen, for display.
    pub raw: BTreeMap<String, String>,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            engine: EngineConfig::default(),
            merge_mapfiles: true,
            stripe_rows: DEFAULT_STRIPE_ROWS,
            raw: BTreeMap::new(),
        }
    }
}

impl SessionOptions {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let lower = key.to_ascii_lowercase();
        let invalid = |message: &str| Error::InvalidOption {
            key: key.to_string(),
            value: value.to_string(),
            message: message.to_string(),
        };
        if !self.engine.apply_option(&lower, value)? {
            match lower.as_str() {
                "hive.merge.mapfiles" => {
                    self.merge_mapfiles = match value.trim().to_ascii_lowercase().as_str() {
                        "true" => true,
                        "false" => false,
                        _ => return Err(invalid("expected true or false")),
                    }
                }
                "minihive.orc.stripe_rows" => {
                    self.stripe_rows = value
                        .trim()
                        .parse::<usize>()
                        .ok()
                        .filter(|v| *v > 0)
                        .ok_or_else(|| invalid("expected a positive integer"))?;
                }
                k if k.starts_with("minihive.") => return Err(invalid("unknown option")),
                _ => {}
            }
        }
        self.raw.insert(lower, value.trim().to_string());
        Ok(())
    }
}

pub struct Session {
    dfs: Dfs,
    catalog: Metastore,
    database: String,
    pub options: SessionOptions,
    catalog_path: Option<PathBuf>,
    queries: u64,
}

impl Session {
    /// A session over an in-memory file system and catalog.
    pub fn in_memory() -> Self {
        Self {
            dfs: Dfs::in_memory(),
            catalog: Metastore::new(DEFAULT_WAREHOUSE_ROOT),
            database: DEFAULT_DATABASE.to_string(),
            options: SessionOptions::default(),
            catalog_path: None,
            queries: 0,
        }
    }

    /// Opens (or initializes) a warehouse directory on the host: the file
    /// system lives under `dfs/` and the catalog in `metastore.json`.
    pub fn open(warehouse: &Path) -> Result<Self> {
        let dfs = Dfs::on_disk(warehouse.join(DFS_DIR))?;
        let catalog_path = warehouse.join(CATALOG_FILE);
        let catalog = if catalog_path.exists() {
            Metastore::load(&catalog_path)?
        } else {
            Metastore::new(DEFAULT_WAREHOUSE_ROOT)
        };
        Ok(Self {
            dfs,
            catalog,
            database: DEFAULT_DATABASE.to_string(),
            options: SessionOptions::default(),
            catalog_path: Some(catalog_path),
            queries: 0,
        })
    }

    pub fn dfs(&self) -> &Dfs {
        &self.dfs
    }

    pub fn catalog(&self) -> &Metastore {
        &self.catalog
    }

    pub fn database(&self) -> &str {
        &self.database
    }

    fn persist(&self) -> Result<()> {
        match &self.catalog_path {
            Some(p) => self.catalog.persist(p),
            None => Ok(()),
        }
    }

    fn resolve(&self, name: &QualifiedName) -> (String, String) {
        (name.database.clone().unwrap_or_else(|| self.database.clone()), name.name.clone())
    }

    pub fn table(&self, name: &QualifiedName) -> Result<&TableDef> {
        let (db, t) = self.resolve(name);
        Ok(&self.catalog.table(&db, &t)?.def)
    }

    /// Parses and executes every statement, stopping at the first error.
    pub fn run_script(&mut self, text: &str) -> Result<Vec<StatementOutput>> {
        hql::parse(text)?.iter().map(|s| self.execute(s)).collect()
    }

    pub fn sql(&mut self, text: &str) -> Result<StatementOutput> {
        let stmts = hql::parse(text)?;
        let mut last = None;
        for s in &stmts {
            last = Some(self.execute(s)?);
        }
        last.ok_or_else(|| Error::Parse("empty statement".into()))
    }

    pub fn execute(&mut self, stmt: &Statement) -> Result<StatementOutput> {
        match stmt {
            Statement::CreateTable(c) => self.create_table(c),
            Statement::LoadData(l) => self.load_data(l),
            Statement::InsertSelect(i) => self.insert_select(i),
            Statement::Select(s) => self.select(s),
            Statement::Describe(name) => {
                let (db, t) = self.resolve(name);
                let rows = self
                    .catalog
                    .describe(&db, &t)?
                    .into_iter()
                    .map(|(n, ty)| vec![Datum::Str(n), Datum::Str(ty.keyword().to_ascii_lowercase())])
                    .collect();
                let cols = vec![("col_name".into(), DataType::String), ("data_type".into(), DataType::String)];
                Ok(StatementOutput::listing("DESCRIBE", cols, rows))
            }
            Statement::ShowPartitions(name) => {
                let (db, t) = self.resolve(name);
                let rows = self
                    .catalog
                    .show_partitions(&db, &t)?
                    .into_iter()
                    .map(|k| vec![Datum::Str(k.dir_name())])
                    .collect();
                Ok(StatementOutput::listing("SHOW PARTITIONS", vec![("partition".into(), DataType::String)], rows))
            }
            Statement::SetOption { key, value } => {
                self.options.set(key, value)?;
                Ok(StatementOutput::ok("SET"))
            }
        }
    }

    fn create_table(&mut self, c: &CreateTable) -> Result<StatementOutput> {
        let (db, name) = self.resolve(&c.name);
        let cols = |v: &[hql::ColumnSpec]| v.iter().map(|c| ColumnDef::new(&c.name, c.dtype)).collect::<Vec<_>>();
        let mut spec = TableSpec::new(&db, &name, cols(&c.columns)).partitioned_by(cols(&c.partition_columns)).format(c.format);
        if let Some(d) = c.field_delimiter {
            spec = spec.delimiter(d);
        }
        for (k, v) in &c.properties {
            spec = spec.property(k, v);
        }
        self.catalog.create_table(spec, &self.dfs)?;
        self.persist()?;
        Ok(StatementOutput::ok("CREATE TABLE"))
    }

    /// Directory for a fully static partition clause, registering the key.
    fn static_partition(&mut self, def: &TableDef, specs: &[PartitionSpec]) -> Result<Option<PartitionKey>> {
        if !def.is_partitioned() {
            if specs.is_empty() {
                return Ok(None);
            }
            return Err(Error::Schema(format!("table {} is not partitioned", def.qualified_name())));
        }
        let mut values = Vec::new();
        for col in &def.partition_columns {
            let spec = specs
                .iter()
                .find(|s| s.column().eq_ignore_ascii_case(&col.name))
                .ok_or_else(|| Error::Schema(format!("partition column {} needs a value", col.name)))?;
            match spec {
                PartitionSpec::Static { value, .. } => values.push((col.name.clone(), literal_text(value))),
                PartitionSpec::Typed { column, dtype } => {
                    return Err(Error::Unsupported(format!(
                        "PARTITION ({column} {}) names a type; give a value as PARTITION ({column}='...')",
                        dtype.keyword()
                    )))
                }
                PartitionSpec::Dynamic { column } => {
                    return Err(Error::Unsupported(format!("LOAD DATA needs a static value for partition column {column}")))
                }
            }
        }
        check_partition_specs(def, specs)?;
        Ok(Some(PartitionKey::new(values)))
    }

    fn load_data(&mut self, l: &LoadData) -> Result<StatementOutput> {
        let def = self.table(&l.table)?.clone();
        let key = self.static_partition(&def, &l.partition)?;
        let dest = match &key {
            Some(k) => def.partition_dir(k),
            None => def.location.clone(),
        };
        // (file name, contents or DFS path to move)
        let mut sources: Vec<(String, Source)> = Vec::new();
        if l.local {
            let host = Path::new(&l.source);
            let meta = std::fs::metadata(host).map_err(|e| Error::io(&l.source, e))?;
            let mut paths = Vec::new();
            if meta.is_dir() {
                for entry in std::fs::read_dir(host).map_err(|e| Error::io(&l.source, e))? {
                    let entry = entry.map_err(|e| Error::io(&l.source, e))?;
                    if entry.path().is_file() {
                        paths.push(entry.path());
                    }
                }
                paths.sort();
            } else {
                paths.push(host.to_path_buf());
            }
            for p in paths {
                let bytes = std::fs::read(&p).map_err(|e| Error::io(p.display().to_string(), e))?;
                let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "data".into());
                sources.push((name, Source::Bytes(bytes)));
            }
        } else {
            for (path, _) in self.dfs.files_under(&l.source)? {
                sources.push((file_name(&path).to_string(), Source::Move(path)));
            }
        }
        if l.overwrite {
            self.dfs.remove(&dest)?;
        }
        self.dfs.mkdirs(&dest)?;
        for (name, src) in sources {
            let target = self.free_name(&dest, &name);
            match src {
                Source::Bytes(b) => {
                    self.dfs.write_file(&target, &b)?;
                }
                Source::Move(from) => self.dfs.rename(&from, &target)?,
            }
        }
        if let Some(k) = key {
            self.catalog.register_partition(&def.database, &def.name, k)?;
        }
        self.persist()?;
        Ok(StatementOutput::ok("LOAD DATA"))
    }

    /// `name`, or `name_copy_N` with the smallest free N.
    fn free_name(&self, dir: &str, name: &str) -> String {
        let first = format!("{dir}/{name}");
        if !self.dfs.exists(&first) {
            return first;
        }
        (1..)
            .map(|n| format!("{dir}/{name}_copy_{n}"))
            .find(|p| !self.dfs.exists(p))
            .unwrap()
    }

    pub fn plan(&self, select: &Select) -> Result<StageDag> {
        planner::plan(select, &self.catalog, &self.dfs, &self.database)
    }

    /// Plans and runs a query with the session's engine settings.
    pub fn query(&mut self, select: &Select) -> Result<QueryResult> {
        let dag = self.plan(select)?;
        self.queries += 1;
        let scratch = format!("{SCRATCH_ROOT}/query-{}", self.queries);
        execute(&dag, &self.dfs, &self.options.engine, &scratch)
    }

    fn select(&mut self, s: &Select) -> Result<StatementOutput> {
        let r = self.query(s)?;
        Ok(StatementOutput { kind: "SELECT", columns: r.columns, rows: r.rows, report: Some(r.report), rows_written: 0 })
    }

    fn insert_select(&mut self, ins: &InsertSelect) -> Result<StatementOutput> {
        let def = self.table(&ins.table)?.clone();
        check_partition_specs(&def, &ins.partition)?;
        let r = self.query(&ins.select)?;
        let written = self.write_rows(&def, &ins.partition, ins.overwrite, r.rows, &r.writer_tasks)?;
        Ok(StatementOutput { kind: "INSERT", columns: Vec::new(), rows: Vec::new(), report: Some(r.report), rows_written: written })
    }

    /// Inserts rows laid out as data columns followed by the dynamic
    /// partition columns, routing each to its partition directory. Rows are
    /// coerced to the column types.
    pub fn insert_rows(&mut self, table: &QualifiedName, partition: &[PartitionSpec], overwrite: bool, rows: Vec<Row>) -> Result<u64> {
        let def = self.table(table)?.clone();
        check_partition_specs(&def, partition)?;
        let n = rows.len();
        self.write_rows(&def, partition, overwrite, rows, &[n])
    }

    /// Like [`Session::insert_rows`], as if `writer_tasks[i]` consecutive
    /// rows came from writer task `i`. With `hive.merge.mapfiles=false`
    /// every task leaves its own file per partition.
    pub fn insert_rows_by_task(
        &mut self,
        table: &QualifiedName,
        partition: &[PartitionSpec],
        overwrite: bool,
        rows: Vec<Row>,
        writer_tasks: &[usize],
    ) -> Result<u64> {
        let def = self.table(table)?.clone();
        check_partition_specs(&def, partition)?;
        if writer_tasks.iter().sum::<usize>() != rows.len() {
            return Err(Error::Schema("writer task sizes do not cover the rows".into()));
        }
        self.write_rows(&def, partition, overwrite, rows, writer_tasks)
    }

    fn write_rows(
        &mut self,
        def: &TableDef,
        specs: &[PartitionSpec],
        overwrite: bool,
        rows: Vec<Row>,
        writer_tasks: &[usize],
    ) -> Result<u64> {
        let dynamic: Vec<&ColumnDef> = def
            .partition_columns
            .iter()
            .filter(|c| specs.iter().any(|s| matches!(s, PartitionSpec::Dynamic { column } if column.eq_ignore_ascii_case(&c.name))))
            .collect();
        let width = def.columns.len() + dynamic.len();
        let types = def.data_types();
        // Rows grouped by target partition, each tagged with its writer task.
        let mut targets: BTreeMap<Option<PartitionKey>, Vec<(usize, Row)>> = BTreeMap::new();
        let mut task_of_row = writer_tasks.iter().enumerate().flat_map(|(t, n)| std::iter::repeat_n(t, *n));
        let total = rows.len() as u64;
        for row in rows {
            if row.len() != width {
                return Err(Error::Schema(format!(
                    "{} expects {} columns but the query produced {}",
                    def.qualified_name(),
                    width,
                    row.len()
                )));
            }
            let task = task_of_row.next().unwrap_or(0);
            let mut data: Row = row[..def.columns.len()].iter().zip(&types).map(|(d, t)| coerce(d, *t)).collect();
            let key = if def.is_partitioned() {
                let mut values = Vec::new();
                let mut dyn_values = row[def.columns.len()..].iter();
                for col in &def.partition_columns {
                    let spec = specs.iter().find(|s| s.column().eq_ignore_ascii_case(&col.name)).unwrap();
                    let v = match spec {
                        PartitionSpec::Static { value, .. } => literal_text(value),
                        _ => match coerce(dyn_values.next().unwrap(), col.dtype) {
                            Datum::Null => DEFAULT_PARTITION_NAME.to_string(),
                            Datum::Str(s) if s.is_empty() => DEFAULT_PARTITION_NAME.to_string(),
                            d => d.to_text(),
                        },
                    };
                    values.push((col.name.clone(), v));
                }
                Some(PartitionKey::new(values))
            } else {
                None
            };
            data.truncate(def.columns.len());
            targets.entry(key).or_default().push((task, data));
        }
        if def.is_partitioned() && overwrite {
            // Only a fully static clause names its partition even when the
            // query returns nothing.
            if dynamic.is_empty() {
                if let Some(k) = self.static_partition(def, specs)? {
                    targets.entry(Some(k)).or_default();
                }
            }
        } else if !def.is_partitioned() {
            targets.entry(None).or_default();
        }
        let target = self.options.engine.target_split_bytes;
        for (key, tagged) in targets {
            let dir = match &key {
                Some(k) => def.partition_dir(k),
                None => def.location.clone(),
            };
            if overwrite {
                self.dfs.remove(&dir)?;
            }
            self.dfs.mkdirs(&dir)?;
            let files: Vec<(usize, Vec<Row>)> = if self.options.merge_mapfiles {
                merge_chunks(tagged.into_iter().map(|(_, r)| r).collect(), target)
            } else {
                let mut by_task: BTreeMap<usize, Vec<Row>> = BTreeMap::new();
                for (t, r) in tagged {
                    by_task.entry(t).or_default().push(r);
                }
                by_task.into_iter().collect()
            };
            for (task, rows) in files {
                let path = self.free_name(&dir, &format!("{task:06}_0"));
                storage::write_rows(&self.dfs, &path, def, &rows, self.options.stripe_rows)?;
            }
            if let Some(k) = key {
                self.catalog.register_partition(&def.database, &def.name, k)?;
            }
        }
        self.persist()?;
        Ok(total)
    }
}

enum Source {
    Bytes(Vec<u8>),
    Move(String),
}

fn literal_text(lit: &Literal) -> String {
    match lit {
        Literal::Int(v) => v.to_string(),
        Literal::Double(v) => crate::types::format_double(*v),
        Literal::Str(s) => s.clone(),
    }
}

/// Every partition column named exactly once, static entries before
/// dynamic ones, and no typed entries.
fn check_partition_specs(def: &TableDef, specs: &[PartitionSpec]) -> Result<()> {
    if !def.is_partitioned() {
        if specs.is_empty() {
            return Ok(());
        }
        return Err(Error::Schema(format!("table {} is not partitioned", def.qualified_name())));
    }
    if specs.len() != def.partition_columns.len() {
        return Err(Error::Schema(format!(
            "table {} is partitioned by {}; the PARTITION clause must name each column once",
            def.qualified_name(),
            def.partition_columns.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", ")
        )));
    }
    let mut seen_dynamic = false;
    for (spec, col) in specs.iter().zip(&def.partition_columns) {
        if !spec.column().eq_ignore_ascii_case(&col.name) {
            return Err(Error::Schema(format!("expected partition column {}, found {}", col.name, spec.column())));
        }
        match spec {
            PartitionSpec::Typed { column, .. } => {
                return Err(Error::Unsupported(format!("PARTITION ({column} <type>) is not a value")));
            }
            PartitionSpec::Dynamic { .. } => seen_dynamic = true,
            PartitionSpec::Static { column, .. } if seen_dynamic => {
                return Err(Error::Schema(format!("static partition {column} follows a dynamic one")));
            }
            PartitionSpec::Static { .. } => {}
        }
    }
    Ok(())
}

/// Implicit conversion on INSERT: numeric widening and narrowing, text
/// parsed as on read, anything rendered as text into STRING.
pub fn coerce(d: &Datum, to: DataType) -> Datum {
    match (d, to) {
        (Datum::Null, _) => Datum::Null,
        (Datum::Int(_), DataType::Int) | (Datum::Double(_), DataType::Double) | (Datum::Str(_), DataType::String) => d.clone(),
        (Datum::Int(v), DataType::Double) => Datum::Double(*v as f64),
        (Datum::Double(v), DataType::Int) => {
            if v.is_finite() && *v >= i64::MIN as f64 && *v < i64::MAX as f64 {
                Datum::Int(v.trunc() as i64)
            } else {
                Datum::Null
            }
        }
        (Datum::Str(s), t) => decode_text_cell(s, t),
        (d, DataType::String) => Datum::Str(d.to_text()),
    }
}

/// Packs rows into files of about `target` encoded bytes.
fn merge_chunks(rows: Vec<Row>, target: u64) -> Vec<(usize, Vec<Row>)> {
    let mut out: Vec<(usize, Vec<Row>)> = Vec::new();
    let mut size = 0;
    for r in rows {
        let len = rowcodec::encoded_len(&r);
        if out.is_empty() || (size + len > target && !out.last().unwrap().1.is_empty()) {
            out.push((out.len(), Vec::new()));
            size = 0;
        }
        size += len;
        out.last_mut().unwrap().1.push(r);
    }
    if out.is_empty() {
        out.push((0, Vec::new()));
    }
    out
}

