use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dini_core::scenario::{bundled, run, RunOptions, Scenario, BUNDLED, FAMILIES};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "dini", version, about = "Run boundary-regularity scenarios and summarize their reports")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file (or a bundled scenario by name).
    Run {
        file: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        grid_override: Option<usize>,
    },
    /// Validate a scenario file and print its canonical hash.
    Check { file: String },
    /// List coefficient families and bundled scenarios.
    Families,
    /// Summarize every report.json under a directory.
    Report { dir: PathBuf },
}

fn load(file: &str) -> Result<Scenario> {
    let path = Path::new(file);
    if !path.exists() {
        if let Some(s) = bundled(file) {
            return Ok(s);
        }
        bail!("no scenario file or bundled scenario named {file}");
    }
    Ok(Scenario::load(path)?)
}

fn find_reports(dir: &Path, depth: usize, out: &mut Vec<PathBuf>) -> Result<()> {
    let own = dir.join("report.json");
    if own.is_file() {
        out.push(own);
    }
    if depth == 0 {
        return Ok(());
    }
    let mut children: Vec<PathBuf> = std::fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    children.sort();
    for c in children {
        find_reports(&c, depth - 1, out)?;
    }
    Ok(())
}

fn summarize(report: &Value) -> Vec<String> {
    let name = report["scenario"].as_str().unwrap_or("?");
    let verdict = if report["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
    let mut lines = vec![format!("{name}: {verdict}")];
    for c in report["checks"].as_array().into_iter().flatten() {
        let mark = if c["pass"].as_bool() == Some(true) { "pass" } else { "FAIL" };
        lines.push(format!("  [{mark}] {}: {}", c["check"].as_str().unwrap_or("?"), c["detail"].as_str().unwrap_or("")));
    }
    lines
}

fn execute(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Run { file, out, seed, grid_override } => {
            let scenario = load(&file)?;
            let outcome = run(&scenario, &RunOptions { out: Some(out.clone()), seed, grid_override })?;
            let report = serde_json::to_value(&outcome.report)?;
            for line in summarize(&report) {
                println!("{line}");
            }
            println!("artifacts: {}", out.join(&scenario.name).display());
            Ok(ExitCode::from(outcome.exit_code() as u8))
        }
        Command::Check { file } => {
            let s = load(&file)?;
            println!("{}: schema {} ok, {} stages, {} checks, hash {}", s.name, s.schema_version, s.pipeline.len(), s.checks.len(), s.hash());
            Ok(ExitCode::SUCCESS)
        }
        Command::Families => {
            println!("coefficient families (amplitude at most lambda/2):");
            for (name, what) in FAMILIES {
                println!("  {name:<14} {what}");
            }
            println!("bundled scenarios:");
            for (name, _) in BUNDLED {
                println!("  {name}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { dir } => {
            let mut paths = Vec::new();
            find_reports(&dir, 2, &mut paths)?;
            if paths.is_empty() {
                bail!("no report.json under {}", dir.display());
            }
            let mut text = String::new();
            let mut all = true;
            for p in &paths {
                let v: Value = serde_json::from_str(&std::fs::read_to_string(p)?).with_context(|| format!("reading {}", p.display()))?;
                all &= v["pass"].as_bool() == Some(true);
                for line in summarize(&v) {
                    text.push_str(&line);
                    text.push('\n');
                }
            }
            print!("{text}");
            std::fs::write(dir.join("summary.txt"), &text)?;
            Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
