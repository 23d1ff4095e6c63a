//! Interactive shell and script runner: HiveQL statements plus `dfs`
//! passthrough and `explain`, printed the way the hive shell prints them.

use std::io::Write;
use std::time::Instant;

use crate::dfs::join;
use crate::error::{Error, Result};
use crate::hql::{self, Statement};
use crate::planner;
use crate::session::{Session, StatementOutput};
use crate::types::{Datum, Row};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputMode {
    /// Columns padded to a common width, NULL spelled out.
    #[default]
    Aligned,
    /// Tab-separated, NULL as an empty field.
    Delimited,
}

impl OutputMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aligned" => Some(OutputMode::Aligned),
            "delimited" | "tsv" => Some(OutputMode::Delimited),
            _ => None,
        }
    }
}

/// Splits script text into commands at `;` outside quotes, dropping `--`
/// comments and empty commands.
pub fn split_commands(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match quote {
            Some(q) => {
                cur.push(c);
                if c == '\\' {
                    if let Some(n) = chars.next() {
                        cur.push(n);
                    }
                } else if c == q {
                    quote = None;
                }
            }
            None => match c {
                '\'' | '"' | '`' => {
                    quote = Some(c);
                    cur.push(c);
                }
                '-' if chars.peek() == Some(&'-') => {
                    for n in chars.by_ref() {
                        if n == '\n' {
                            cur.push('\n');
                            break;
                        }
                    }
                }
                ';' => {
                    if !cur.trim().is_empty() {
                        out.push(cur.trim().to_string());
                    }
                    cur.clear();
                }
                _ => cur.push(c),
            },
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// Whether `text` ends a command: a `;` outside quotes after the last
/// non-blank text.
pub fn is_complete(text: &str) -> bool {
    let mut quote: Option<char> = None;
    let mut last = None;
    let mut escaped = false;
    for c in text.chars() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            last = Some(c);
            continue;
        }
        if matches!(c, '\'' | '"' | '`') {
            quote = Some(c);
        }
        if !c.is_whitespace() {
            last = Some(c);
        }
    }
    quote.is_none() && last == Some(';')
}

fn cell(d: &Datum, mode: OutputMode) -> String {
    match (d, mode) {
        (Datum::Null, OutputMode::Aligned) => "NULL".into(),
        (d, _) => d.to_text(),
    }
}

pub fn format_rows(rows: &[Row], mode: OutputMode) -> String {
    let cells: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|d| cell(d, mode)).collect()).collect();
    let mut out = String::new();
    match mode {
        OutputMode::Delimited => {
            for r in &cells {
                out.push_str(&r.join("\t"));
                out.push('\n');
            }
        }
        OutputMode::Aligned => {
            let mut widths: Vec<usize> = Vec::new();
            for r in &cells {
                for (i, c) in r.iter().enumerate() {
                    if i >= widths.len() {
                        widths.push(0);
                    }
                    widths[i] = widths[i].max(c.chars().count());
                }
            }
            for r in &cells {
                let mut line = String::new();
                for (i, c) in r.iter().enumerate() {
                    if i + 1 == r.len() {
                        line.push_str(c);
                    } else {
                        line.push_str(c);
                        line.extend(std::iter::repeat_n(' ', widths[i] - c.chars().count() + 2));
                    }
                }
                out.push_str(line.trim_end());
                out.push('\n');
            }
        }
    }
    out
}

pub struct Shell {
    pub session: Session,
    pub mode: OutputMode,
    /// Report host wall-clock time in the trailer, simulated time after it.
    pub wall_clock: bool,
}

impl Shell {
    pub fn new(session: Session) -> Self {
        Self { session, mode: OutputMode::Aligned, wall_clock: false }
    }

    /// Runs one command (without its `;`), writing its output.
    pub fn run_command(&mut self, command: &str, out: &mut dyn Write) -> Result<()> {
        let start = Instant::now();
        let words: Vec<&str> = command.split_whitespace().collect();
        let io = |e: std::io::Error| Error::io("<stdout>", e);
        match words.as_slice() {
            ["hdfs", "dfs", rest @ ..] | ["dfs", rest @ ..] => {
                let text = self.dfs_command(rest)?;
                out.write_all(text.as_bytes()).map_err(io)?;
                Ok(())
            }
            [first, ..] if first.eq_ignore_ascii_case("explain") => {
                let query = command.trim_start()[first.len()..].trim();
                let Statement::Select(s) = hql::parse_statement(query)? else {
                    return Err(Error::Unsupported("EXPLAIN needs a SELECT".into()));
                };
                let text = planner::explain(&self.session.plan(&s)?);
                write!(out, "OK\n{text}").map_err(io)?;
                self.trailer(out, start, 0.0, None).map_err(io)
            }
            _ => {
                let stmt = hql::parse_statement(command)?;
                let result = self.session.execute(&stmt)?;
                self.print(&result, start, out).map_err(io)
            }
        }
    }

    fn print(&self, r: &StatementOutput, start: Instant, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "OK")?;
        if r.has_result_set() {
            out.write_all(format_rows(&r.rows, self.mode).as_bytes())?;
            self.trailer(out, start, r.simulated_ms(), Some(r.rows.len()))
        } else {
            self.trailer(out, start, r.simulated_ms(), None)
        }
    }

    fn trailer(&self, out: &mut dyn Write, start: Instant, simulated_ms: f64, fetched: Option<usize>) -> std::io::Result<()> {
        let seconds = if self.wall_clock { start.elapsed().as_secs_f64() } else { simulated_ms / 1000.0 };
        write!(out, "Time taken: {seconds:.3} seconds")?;
        if let Some(n) = fetched {
            write!(out, ", Fetched: {n} row(s)")?;
        }
        if self.wall_clock {
            write!(out, " (simulated {:.3} seconds)", simulated_ms / 1000.0)?;
        }
        writeln!(out)
    }

    /// `-du`, `-ls` and `-cat path [| head -n N]`.
    fn dfs_command(&self, args: &[&str]) -> Result<String> {
        let usage = || Error::Unsupported("dfs supports -du <path>, -ls <path> and -cat <path> [| head -n N]".into());
        let dfs = self.session.dfs();
        let mut out = String::new();
        match args {
            ["-du", path] | ["-du", "-s", path] => {
                let p = crate::dfs::normalize(path)?;
                if args.len() == 3 || dfs.is_file(&p) {
                    let total = dfs.du(&p)?.total();
                    out.push_str(&format!("{total} {p}\n"));
                } else {
                    for e in dfs.du(&p)?.entries {
                        out.push_str(&format!("{} {}\n", e.size, join(&p, &e.name)));
                    }
                }
            }
            ["-ls", path] => {
                let p = crate::dfs::normalize(path)?;
                let listing = dfs.list(&p)?;
                if !dfs.is_file(&p) {
                    out.push_str(&format!("Found {} items\n", listing.entries.len()));
                }
                for e in listing.entries {
                    let kind = if e.is_directory { 'd' } else { '-' };
                    let full = if dfs.is_file(&p) { p.clone() } else { join(&p, &e.name) };
                    out.push_str(&format!("{kind} {:>12} {full}\n", e.size));
                }
            }
            ["-cat", path, rest @ ..] => {
                let limit = match rest {
                    [] => None,
                    ["|", "head", "-n", n] | ["|", "head", "-n", n, ..] => {
                        Some(n.parse::<usize>().map_err(|_| usage())?)
                    }
                    ["|", "head"] => Some(10),
                    _ => return Err(usage()),
                };
                let p = crate::dfs::normalize(path)?;
                let files: Vec<String> = if dfs.is_dir(&p) {
                    dfs.files_under(&p)?.into_iter().map(|(f, _)| f).collect()
                } else {
                    vec![p]
                };
                let mut text = String::new();
                for f in files {
                    text.push_str(&String::from_utf8_lossy(&dfs.read_file(&f)?));
                }
                for (i, line) in text.lines().enumerate() {
                    if limit.is_some_and(|n| i >= n) {
                        break;
                    }
                    out.push_str(line);
                    out.push('\n');
                }
            }
            _ => return Err(usage()),
        }
        Ok(out)
    }

    /// Runs every command of a script. Errors go to `err` as `FAILED: ...`;
    /// the first one stops the script unless `keep_going`. Returns the
    /// number of failed commands.
    pub fn run_script(&mut self, text: &str, keep_going: bool, out: &mut dyn Write, err: &mut dyn Write) -> usize {
        let mut failures = 0;
        for cmd in split_commands(text) {
            if let Err(e) = self.run_command(&cmd, out) {
                let _ = writeln!(err, "FAILED: {e}");
                failures += 1;
                if !keep_going {
                    break;
                }
            }
        }
        failures
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitting_respects_quotes_and_comments() {
        let cmds = split_commands("select 'a;b' from t; -- note; here\nset x=1;\n\n ;dfs -ls /");
        assert_eq!(cmds, vec!["select 'a;b' from t", "set x=1", "dfs -ls /"]);
        assert!(split_commands("  \n-- only a comment\n").is_empty());
    }

    #[test]
    fn completeness() {
        assert!(is_complete("select 1 from t;"));
        assert!(is_complete("select 1\n from t;  "));
        assert!(!is_complete("select ';"));
        assert!(!is_complete("select 1 from t"));
    }

    #[test]
    fn aligned_and_delimited() {
        let rows = vec![vec![Datum::Null, Datum::from("\"Prof\""), Datum::Double(139750.0)], vec![Datum::Int(12), Datum::from("x"), Datum::Null]];
        assert_eq!(format_rows(&rows, OutputMode::Aligned), "NULL  \"Prof\"  139750.0\n12    x       NULL\n");
        assert_eq!(format_rows(&rows, OutputMode::Delimited), "\t\"Prof\"\t139750.0\n12\tx\t\n");
    }

    #[test]
    fn shell_runs_dfs_and_explain() {
        let mut sh = Shell::new(Session::in_memory());
        let mut out = Vec::new();
        let mut err = Vec::new();
        let script = "create table t (a int, b string) partitioned by (p string);
            insert into table t partition (p) select a, b, p from t;
            explain select b, count(*) from t group by b;
            dfs -du /apps/hive/warehouse/default.db;
            dfs -cat /missing | head -n 2;
            describe t;";
        let failures = sh.run_script(script, true, &mut out, &mut err);
        let out = String::from_utf8(out).unwrap();
        let err = String::from_utf8(err).unwrap();
        assert_eq!(failures, 1, "{err}");
        assert!(err.starts_with("FAILED: not found"), "{err}");
        assert!(out.contains("MR JOBS 1"), "{out}");
        assert!(out.contains("0 /apps/hive/warehouse/default.db/t\n"), "{out}");
        assert!(out.ends_with("Time taken: 0.000 seconds, Fetched: 3 row(s)\n"), "{out}");
    }
}
