use std::io::{BufRead, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use minihive::bench::{self, BenchConfig};
use minihive::cli::{is_complete, OutputMode, Shell};
use minihive::session::Session;

#[derive(Parser)]
#[command(name = "minihive", version, about = "Warehouse shell over a simulated distributed file system")]
struct Cli {
    /// Warehouse directory holding the file system and the catalog.
    #[arg(long, global = true, default_value = "warehouse")]
    warehouse: PathBuf,
    /// Option applied before anything runs, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(flatten)]
    shell: ShellArgs,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct ShellArgs {
    /// Script file to run instead of the interactive shell.
    #[arg(short = 'f', long)]
    script: Option<PathBuf>,
    /// Commands to run instead of the interactive shell.
    #[arg(short = 'e', long, conflicts_with = "script")]
    execute: Option<String>,
    /// aligned or delimited.
    #[arg(long, default_value = "aligned", value_parser = parse_mode)]
    output: OutputMode,
    /// Continue a script after a failed command.
    #[arg(long)]
    keep_going: bool,
    /// Report host wall-clock time, with simulated time alongside.
    #[arg(long)]
    wall_clock: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Create and fill the benchmark tables in the warehouse.
    Generate(DataArgs),
    /// Generate the benchmark tables in memory and run a suite.
    Bench {
        #[command(flatten)]
        data: DataArgs,
        /// Suite file; the built-in suite when omitted.
        #[arg(long)]
        suite: Option<PathBuf>,
        /// Also write the comma-separated records here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long, default_value_t = BenchConfig::default().seed)]
    seed: u64,
    /// Multiplier on the default row counts.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

fn parse_mode(s: &str) -> Result<OutputMode, String> {
    OutputMode::parse(s).ok_or_else(|| format!("unknown output mode {s}; expected aligned or delimited"))
}

fn apply_sets(session: &mut Session, sets: &[String]) -> Result<(), String> {
    for kv in sets {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("--set expects key=value, got {kv}"))?;
        session.options.set(k.trim(), v.trim()).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn config(data: &DataArgs) -> Result<BenchConfig, String> {
    if !(data.scale > 0.0 && data.scale.is_finite()) {
        return Err("--scale must be positive".into());
    }
    Ok(BenchConfig { seed: data.seed, ..BenchConfig::default() }.scaled(data.scale))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("{message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match &cli.command {
        Some(Command::Bench { data, suite, csv }) => {
            let cfg = config(data)?;
            let text = match suite {
                Some(p) => std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?,
                None => bench::DEFAULT_SUITE.to_string(),
            };
            let scenarios = bench::parse_suite(&text).map_err(|e| e.to_string())?;
            let mut session = Session::in_memory();
            apply_sets(&mut session, &cli.set)?;
            let report = bench::create_datasets(&mut session, &cfg).and_then(|_| bench::run_suite(&mut session, &scenarios));
            match report {
                Ok(r) => {
                    print!("{}", r.to_table());
                    if let Some(p) = csv {
                        std::fs::write(p, r.to_csv()).map_err(|e| format!("cannot write {}: {e}", p.display()))?;
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("FAILED: {e}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Some(Command::Generate(data)) => {
            let cfg = config(data)?;
            let mut session = Session::open(&cli.warehouse).map_err(|e| e.to_string())?;
            apply_sets(&mut session, &cli.set)?;
            match bench::create_datasets(&mut session, &cfg) {
                Ok(()) => {
                    println!("OK");
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("FAILED: {e}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        None => {
            let script = match (&cli.shell.script, &cli.shell.execute) {
                (Some(p), _) => {
                    Some(std::fs::read_to_string(p).map_err(|e| format!("cannot read script {}: {e}", p.display()))?)
                }
                (None, Some(text)) => Some(text.clone()),
                (None, None) => None,
            };
            let mut session = Session::open(&cli.warehouse).map_err(|e| e.to_string())?;
            apply_sets(&mut session, &cli.set)?;
            let mut shell = Shell::new(session);
            shell.mode = cli.shell.output;
            shell.wall_clock = cli.shell.wall_clock;
            let stdout = std::io::stdout();
            let stderr = std::io::stderr();
            match script {
                Some(text) => {
                    let failures = shell.run_script(&text, cli.shell.keep_going, &mut stdout.lock(), &mut stderr.lock());
                    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
                }
                None => {
                    repl(&mut shell);
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
    }
}

/// Reads commands from stdin until EOF or `quit;`, reporting errors
/// without stopping.
fn repl(shell: &mut Shell) {
    let stdin = std::io::stdin();
    let interactive = stdin.is_terminal();
    let mut buffer = String::new();
    let prompt = |continuation: bool| {
        if interactive {
            print!("{}", if continuation { "    > " } else { "hive> " });
            let _ = std::io::stdout().flush();
        }
    };
    prompt(false);
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        buffer.push_str(&line);
        buffer.push('\n');
        if !is_complete(&buffer) {
            prompt(!buffer.trim().is_empty());
            continue;
        }
        let text = std::mem::take(&mut buffer);
        let trimmed = text.trim().trim_end_matches(';').trim().to_ascii_lowercase();
        if trimmed == "quit" || trimmed == "exit" {
            return;
        }
        shell.run_script(&text, true, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
        prompt(false);
    }
    if !buffer.trim().is_empty() {
        shell.run_script(&buffer, true, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    }
}
