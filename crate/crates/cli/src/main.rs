use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use silab::consistency::{check, ModelId};
use silab::enumerate::{EnumOptions, DEFAULT_MAX_EVENTS};
use silab::litmus::{format_outcome, parse_litmus, Litmus};
use silab::report::{compare, run_litmus, CompareReport, RunReport, Side};
use silab::suite::{run_suite, Suite, SuiteReport};
use silab::ExecutionGraph;

/// Model checker for SI, RSI and release/acquire with MRSW locks.
#[derive(Debug, Parser)]
#[command(name = "silab", version)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Refuse programs whose skeleton has more events than this.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_EVENTS)]
    max_events: usize,

    /// Worker threads for enumeration (defaults to the number of cores).
    #[arg(long, global = true, env = "SILAB_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate the outcomes of a litmus file and check its expectations.
    Run {
        file: PathBuf,
        /// Model to run; by default every model named in the file's
        /// expectations.
        #[arg(long)]
        model: Option<ModelId>,
    },
    /// Compare the outcome sets of two models or implementations.
    Compare {
        file: PathBuf,
        /// A model (si, si-hb, rsi, ra, ra-rsync) or an implementation
        /// (eager-si, lazy-rsi, cand-a, ...), optionally `@ra-rsync`.
        #[arg(long)]
        left: Side,
        #[arg(long)]
        right: Side,
    },
    /// Run one of the bundled suites.
    Corpus {
        #[arg(long)]
        suite: Suite,
        /// Maximum failed iterations of each spin loop in lock expansions.
        #[arg(long, default_value_t = 1)]
        spin_bound: usize,
    },
    /// Check a JSON execution graph against one or all models.
    Check {
        graph: PathBuf,
        #[arg(long)]
        model: Option<ModelId>,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Unmet,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} workers: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Unmet) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let opts = EnumOptions { max_events: cli.max_events };
    let ok = match &cli.command {
        Command::Run { file, model } => {
            let l = load_litmus(file)?;
            let report = run_litmus(&l, *model, &opts).context("enumeration failed")?;
            emit(cli.json, &report, print_run)?;
            report.passed()
        }
        Command::Compare { file, left, right } => {
            let l = load_litmus(file)?;
            let report = compare(&l.program, *left, *right, &opts).context("enumeration failed")?;
            emit(cli.json, &report, print_compare)?;
            report.equal
        }
        Command::Corpus { suite, spin_bound } => {
            let report = run_suite(*suite, &opts, *spin_bound).context("suite failed to run")?;
            emit(cli.json, &report, print_suite)?;
            report.all_passed()
        }
        Command::Check { graph, model } => {
            let text = read(graph)?;
            let g = ExecutionGraph::from_json(&text).with_context(|| format!("{}: malformed graph", graph.display()))?;
            check_graph(cli.json, &g, *model)?;
            true
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Failure::Unmet)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_litmus(path: &Path) -> Result<Litmus> {
    let text = read(path)?;
    parse_litmus(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn emit<T: serde::Serialize>(json: bool, report: &T, text: fn(&T)) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(report)?);
    } else {
        text(report);
    }
    Ok(())
}

fn print_run(r: &RunReport) {
    println!("{} ({:.1} ms)", r.program, r.wall_time_ms);
    for set in &r.results {
        println!("{}: {} outcomes from {} graphs", set.model, set.outcomes.len(), set.graph_count);
        for o in &set.outcomes {
            println!("  {}", format_outcome(o));
        }
    }
    for e in &r.expectations {
        println!("{e}");
    }
}

fn print_compare(r: &CompareReport) {
    println!("{}: {} vs {} ({:.1} ms)", r.program, r.left, r.right, r.wall_time_ms);
    for (side, only) in [(&r.left, &r.left_only), (&r.right, &r.right_only)] {
        for o in only {
            println!("  only under {side}: {}", format_outcome(o));
        }
    }
    println!("{}", if r.equal { "equal" } else { "different" });
}

fn print_suite(r: &SuiteReport) {
    let width = r.rows.iter().map(|row| row.test.len()).max().unwrap_or(0);
    for row in &r.rows {
        let mark = if row.passed { "PASS" } else { "FAIL" };
        println!("{mark}  {:width$}  {}  [{}]", row.test, row.check, row.detail);
    }
    println!("{}: {}/{} passed ({:.1} ms)", r.suite, r.passed, r.passed + r.failed, r.wall_time_ms);
}

#[derive(serde::Serialize)]
struct CheckLine {
    model: ModelId,
    verdict: Option<silab::Verdict>,
    not_applicable: Option<String>,
}

fn check_graph(json: bool, g: &ExecutionGraph, model: Option<ModelId>) -> Result<()> {
    let models = match model {
        Some(m) => vec![m],
        None => ModelId::ALL.to_vec(),
    };
    let mut lines = Vec::new();
    for m in models {
        match check(m, g) {
            Ok(v) => lines.push(CheckLine { model: m, verdict: Some(v), not_applicable: None }),
            Err(e) if model.is_none() => lines.push(CheckLine { model: m, verdict: None, not_applicable: Some(e.to_string()) }),
            Err(e) => bail!(e),
        }
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&lines)?);
        return Ok(());
    }
    for l in lines {
        let name = l.model.name().to_uppercase();
        match (l.verdict, l.not_applicable) {
            (Some(v), _) => println!("{name}: {v}"),
            (None, Some(why)) => println!("{name}: not applicable ({why})"),
            (None, None) => unreachable!(),
        }
    }
    Ok(())
}
