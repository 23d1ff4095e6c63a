//! Synthetic datasets and the scenario harness comparing engines, formats
//! and partitioning on simulated time and bytes.

pub mod gen;
pub mod reference;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::engines::EngineKind;
use crate::error::{Error, Result};
use crate::hql::{self, QualifiedName, Select, Statement};
use crate::session::Session;
use crate::storage::{scan_table, ScanOptions};
use reference::{checksum, evaluate, is_sub_multiset, TableData};

pub const DEFAULT_SUITE: &str = include_str!("../../suites/default.suite");

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub seed: u64,
    pub houses_rows: usize,
    pub small_rows: usize,
    pub small_files: usize,
    pub occup_rows: usize,
    pub jobs_rows: usize,
    pub customers_rows: usize,
    pub purchases_rows: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            houses_rows: 200_000,
            small_rows: 20_000,
            small_files: 200,
            occup_rows: 50_000,
            jobs_rows: 1000,
            customers_rows: 2000,
            purchases_rows: 20_000,
        }
    }
}

impl BenchConfig {
    /// Same shapes at a fraction of the rows, for quick runs.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |n: usize| ((n as f64 * factor).round() as usize).max(1);
        Self {
            seed: self.seed,
            houses_rows: s(self.houses_rows),
            small_rows: s(self.small_rows).max(self.small_files),
            small_files: self.small_files,
            occup_rows: s(self.occup_rows),
            jobs_rows: s(self.jobs_rows),
            customers_rows: s(self.customers_rows),
            purchases_rows: s(self.purchases_rows),
        }
    }
}

const HOUSES_COLUMNS: &str = "id STRING, price INT, dateoftransfer STRING, oldnew STRING, duration STRING, \
     city STRING, district STRING, county STRING, ppd STRING";
const CSV: &str = "ROW FORMAT DELIMITED FIELDS TERMINATED BY ','";

fn ddl() -> String {
    let mut s = String::new();
    for (name, stored) in [("houses", "TEXTFILE"), ("houses_orc", "ORC"), ("houses_small", "TEXTFILE")] {
        writeln!(s, "CREATE TABLE {name} ({HOUSES_COLUMNS}, propertytype STRING) {CSV} STORED AS {stored};").unwrap();
    }
    for (name, stored) in [("houses_part", "TEXTFILE"), ("houses_part_orc", "ORC")] {
        writeln!(s, "CREATE TABLE {name} ({HOUSES_COLUMNS}) PARTITIONED BY (propertytype STRING) {CSV} STORED AS {stored};")
            .unwrap();
    }
    s.push_str(&format!(
        "CREATE TABLE occup (sid INT, occ_code STRING, area STRING, area_type INT, naics STRING, i_group STRING, \
         own_code INT, tot_emp INT, emp_prse DOUBLE, h_mean DOUBLE, a_mean INT, h_median DOUBLE, a_median INT, \
         year INT, annual STRING) {CSV};
CREATE TABLE occupdata (sid INT, series STRING, year INT, period STRING, value DOUBLE) {CSV};
CREATE TABLE jobs (occ_code STRING, occ_name STRING, occ_group STRING, soc_level INT, description STRING) {CSV};
CREATE TABLE customers (id INT, name STRING, surname STRING, city STRING) {CSV};
CREATE TABLE purchases (fid INT, product STRING, qty INT, pdate STRING) {CSV};
CREATE TABLE customer_purchases (id INT, name STRING, surname STRING, city STRING, product STRING, qty INT, pdate STRING) {CSV};
"
    ));
    s
}

/// Creates and fills every table the default suite reads.
pub fn create_datasets(session: &mut Session, cfg: &BenchConfig) -> Result<()> {
    session.run_script(&ddl())?;
    let t = QualifiedName::bare;
    let houses = gen::houses(cfg.houses_rows, cfg.seed);
    for name in ["houses", "houses_orc", "houses_part", "houses_part_orc"] {
        gen::generate(session, &houses, &t(name), 1)?;
    }
    let merge = session.options.merge_mapfiles;
    session.options.merge_mapfiles = false;
    let small = gen::houses(cfg.small_rows, cfg.seed ^ 0x5);
    let written = gen::generate(session, &small, &t("houses_small"), cfg.small_files);
    session.options.merge_mapfiles = merge;
    written?;
    gen::generate(session, &gen::occup(cfg.occup_rows, cfg.jobs_rows, cfg.seed + 1), &t("occup"), 1)?;
    gen::generate(session, &gen::occupdata(cfg.occup_rows, cfg.seed + 2), &t("occupdata"), 1)?;
    gen::generate(session, &gen::jobs(cfg.jobs_rows, cfg.seed + 3), &t("jobs"), 1)?;
    let customers = gen::customers(cfg.customers_rows, cfg.seed + 4);
    let purchases = gen::purchases(cfg.purchases_rows, cfg.customers_rows, cfg.seed + 5);
    gen::generate(session, &customers, &t("customers"), 1)?;
    gen::generate(session, &purchases, &t("purchases"), 1)?;
    let joined = gen::denormalize(&gen::generate_rows(&customers)?, &gen::generate_rows(&purchases)?);
    session.insert_rows(&t("customer_purchases"), &[], false, joined)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Text,
    Orc,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Text => "text",
            Format::Orc => "orc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "textfile" => Some(Format::Text),
            "orc" | "orclike" => Some(Format::Orc),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub line: usize,
    /// Query text as written; scenarios sharing it must agree on results.
    pub query: String,
    pub select: Select,
    pub engine: EngineKind,
    pub format: Format,
    pub options: Vec<(String, String)>,
}

impl Scenario {
    /// The query with every table replaced by its twin in this format.
    pub fn resolved_select(&self) -> Select {
        let mut s = self.select.clone();
        if self.format == Format::Orc {
            s.from.name.name.push_str("_orc");
            for j in &mut s.joins {
                j.table.name.name.push_str("_orc");
            }
        }
        s
    }
}

/// Parses `query ; engine ; format ; options` lines. Blank lines and lines
/// starting with `#` are skipped; options are whitespace-separated
/// `key=value` pairs.
pub fn parse_suite(text: &str) -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: &str| Error::Parse(format!("suite line {}: {m}", i + 1));
        let fields: Vec<&str> = line.split(';').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(bad("expected query ; engine ; format ; options"));
        }
        let select = match hql::parse_statement(fields[0])? {
            Statement::Select(s) => s,
            _ => return Err(bad("the query must be a SELECT")),
        };
        let engine = EngineKind::parse(fields[1]).ok_or_else(|| bad("engine must be mr or tez"))?;
        let format = Format::parse(fields[2]).ok_or_else(|| bad("format must be text or orc"))?;
        let options = fields[3]
            .split_whitespace()
            .map(|kv| {
                kv.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| bad("options are key=value"))
            })
            .collect::<Result<_>>()?;
        out.push(Scenario { line: i + 1, query: fields[0].to_string(), select, engine, format, options });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub partitioned: bool,
    pub simulated_ms: f64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub rows: u64,
    pub jobs: usize,
    pub stages: usize,
    pub stripes_skipped: u64,
    pub checksum: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub results: Vec<ScenarioResult>,
}

/// Runs every scenario in order against the session's tables, then checks
/// each query's results against the reference evaluator and across
/// scenarios. Any disagreement fails the whole run.
pub fn run_suite(session: &mut Session, scenarios: &[Scenario]) -> Result<BenchReport> {
    let base = session.options.clone();
    let mut results = Vec::new();
    let mut outputs = Vec::new();
    for sc in scenarios {
        session.options = base.clone();
        session.options.engine.engine = sc.engine;
        let run = (|| {
            for (k, v) in &sc.options {
                session.options.set(k, v)?;
            }
            let select = sc.resolved_select();
            let partitioned = std::iter::once(&select.from)
                .chain(select.joins.iter().map(|j| &j.table))
                .map(|t| session.table(&t.name).map(|d| d.is_partitioned()))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .any(|p| p);
            let r = session.query(&select)?;
            Ok::<_, Error>((partitioned, r))
        })();
        session.options = base.clone();
        let (partitioned, r) = run?;
        results.push(ScenarioResult {
            scenario: sc.clone(),
            partitioned,
            simulated_ms: r.report.simulated_ms,
            bytes_read: r.report.dfs_bytes_read,
            bytes_written: r.report.dfs_bytes_written,
            rows: r.rows.len() as u64,
            jobs: r.report.jobs,
            stages: r.report.stages.len(),
            stripes_skipped: r.report.stripes_skipped,
            checksum: checksum(&r.rows),
        });
        outputs.push(r.rows);
    }
    check(session, &results, &outputs)?;
    Ok(BenchReport { results })
}

fn check(session: &Session, results: &[ScenarioResult], outputs: &[Vec<crate::types::Row>]) -> Result<()> {
    let mut tables: BTreeMap<QualifiedName, TableData> = BTreeMap::new();
    let mut by_query: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in results.iter().enumerate() {
        by_query.entry(&r.scenario.query).or_default().push(i);
    }
    for (query, idx) in by_query {
        let first = &results[idx[0]];
        if idx.iter().any(|&i| results[i].checksum != first.checksum) {
            return Err(Error::ChecksumMismatch(format!("{query} (scenarios disagree)")));
        }
        let select = &first.scenario.select;
        let refs: Vec<QualifiedName> =
            std::iter::once(&select.from).chain(select.joins.iter().map(|j| &j.table)).map(|t| t.name.clone()).collect();
        for name in &refs {
            if !tables.contains_key(name) {
                let def = session.table(name)?.clone();
                let rows = scan_table(session.dfs(), &def, None, &ScanOptions::all_columns(&def))?.rows;
                tables.insert(name.clone(), TableData { def, rows });
            }
        }
        let inputs: Vec<&TableData> = refs.iter().map(|n| &tables[n]).collect();
        let expected = evaluate(select, &inputs)?;
        let got = &outputs[idx[0]];
        let agrees = if select.limit.is_some() {
            got.len() == expected.rows.len() && is_sub_multiset(got, &expected.unlimited)
        } else {
            checksum(got) == checksum(&expected.rows)
        };
        if !agrees {
            return Err(Error::ChecksumMismatch(format!("{query} (differs from the reference result)")));
        }
    }
    Ok(())
}

const COLUMNS: [&str; 13] = [
    "id", "engine", "format", "partitioned", "simulated_ms", "bytes_read", "bytes_written", "rows", "jobs", "stages",
    "stripes_skipped", "checksum", "query",
];

impl BenchReport {
    fn cells(&self) -> Vec<Vec<String>> {
        self.results
            .iter()
            .enumerate()
            .map(|(i, r)| {
                vec![
                    (i + 1).to_string(),
                    r.scenario.engine.name().to_string(),
                    r.scenario.format.name().to_string(),
                    r.partitioned.to_string(),
                    format!("{:.3}", r.simulated_ms),
                    r.bytes_read.to_string(),
                    r.bytes_written.to_string(),
                    r.rows.to_string(),
                    r.jobs.to_string(),
                    r.stages.to_string(),
                    r.stripes_skipped.to_string(),
                    format!("{:016x}", r.checksum),
                    r.scenario.query.clone(),
                ]
            })
            .collect()
    }

    /// Human-readable table; numbers right-aligned, the query last.
    pub fn to_table(&self) -> String {
        let rows = self.cells();
        let mut widths: Vec<usize> = COLUMNS.iter().map(|c| c.len()).collect();
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let last = COLUMNS.len() - 1;
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, c) in cells.iter().enumerate() {
                if i == last {
                    s.push_str(c);
                } else if (1..4).contains(&i) {
                    write!(s, "{c:<w$}  ", w = widths[i]).unwrap();
                } else {
                    write!(s, "{c:>w$}  ", w = widths[i]).unwrap();
                }
            }
            s.push('\n');
            s
        };
        let mut out = line(&COLUMNS.map(String::from));
        for r in &rows {
            out.push_str(&line(r));
        }
        out
    }

    /// One comma-separated record per scenario after a header line.
    pub fn to_csv(&self) -> String {
        let mut out = COLUMNS.join(",");
        out.push('\n');
        for r in self.cells() {
            let mut r = r;
            let q = r.pop().unwrap();
            out.push_str(&r.join(","));
            writeln!(out, ",\"{}\"", q.replace('"', "\"\"")).unwrap();
        }
        out
    }

    pub fn for_query<'a>(&'a self, query: &'a str) -> impl Iterator<Item = &'a ScenarioResult> + 'a {
        self.results.iter().filter(move |r| r.scenario.query == query)
    }
}

/// Generates the datasets in a fresh in-memory warehouse and runs `suite`.
pub fn run_generated(cfg: &BenchConfig, suite: &str) -> Result<BenchReport> {
    let scenarios = parse_suite(suite)?;
    let mut session = Session::in_memory();
    create_datasets(&mut session, cfg)?;
    run_suite(&mut session, &scenarios)
}
