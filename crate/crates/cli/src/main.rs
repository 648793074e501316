//! `isomeric`: run verification suites, print Cartan tables, and trace
//! weights under P_i/Q_i.
//!
//! Exit codes: 0 all cases pass, 1 a mathematical check failed, 2 bad
//! configuration or usage, 3 internal error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isomeric_core::runner::{self, RunConfig, RunError, Suite};

#[derive(Parser)]
#[command(name = "isomeric", version, about = "Exact verification of quiver Hecke–Clifford relations and weight bookkeeping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and emit a JSON report.
    Verify {
        /// cartan | series | kkt | sergeev | qhc | bubbles | all
        #[arg(long)]
        suite: Option<String>,
        /// Characteristic: 0 or an odd prime ≤ 101.
        #[arg(long)]
        p: Option<u64>,
        /// Comma-separated colours, e.g. `0,hbar,1,2` or `0,-1/2,3`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        window: Option<Vec<String>>,
        /// Truncation order applied to every suite.
        #[arg(long)]
        order: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        /// JSON run configuration; flags given alongside override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report path. Without it the report goes to stdout and the
        /// summary to stderr.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record per-case wall time (makes reports non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Print colours, b values, symmetrizers, parities and the Cartan matrix.
    ShowCartan {
        #[arg(long)]
        p: u64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "")]
        window: Vec<String>,
        /// Emit JSON instead of a text table.
        #[arg(long)]
        json: bool,
    },
    /// Apply a sequence of P_i / Q_i to a central character.
    WeightsAct {
        /// `m=<colour:mult,...>;n=<...>;kappa=<int>`, or `1` for O = 1.
        #[arg(long = "char")]
        character: String,
        /// Comma-separated functor symbols, e.g. `P_0,Q_1`.
        #[arg(long, value_delimiter = ',')]
        ops: Vec<String>,
        #[arg(long, default_value_t = 5)]
        p: u64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        window: Option<Vec<String>>,
    },
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("{e}");
    match e {
        RunError::Config(_) => ExitCode::from(2),
        RunError::Internal(_) => ExitCode::from(3),
    }
}

#[allow(clippy::too_many_arguments)]
fn verify(
    suite: Option<String>,
    p: Option<u64>,
    window: Option<Vec<String>>,
    order: Option<u32>,
    seed: Option<u64>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    timings: bool,
) -> Result<ExitCode, RunError> {
    let mut cfg = match &config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => {
            let suite = suite.as_deref().ok_or_else(|| RunError::Config("--suite is required without --config".into()))?;
            let p = p.ok_or_else(|| RunError::Config("--p is required without --config".into()))?;
            RunConfig::new(suite.parse()?, p)
        }
    };
    if config.is_some() {
        if let Some(s) = &suite {
            cfg.suite = s.parse::<Suite>()?;
        }
        if let Some(p) = p {
            cfg.p = p;
        }
    }
    if let Some(w) = window {
        cfg.window = Some(w.into_iter().filter(|s| !s.trim().is_empty()).collect());
    }
    if let Some(n) = order {
        cfg = cfg.with_order(n);
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = runner::run(&cfg, timings)?;
    let json = report.to_json();
    let mut summary = String::new();
    for c in report.cases.iter().filter(|c| !c.passed()) {
        summary.push_str(&format!("FAIL {}: {}\n", c.id, c.note.as_deref().unwrap_or("")));
    }
    summary.push_str(&format!(
        "suite {}: {} passed, {} failed",
        report.suite, report.summary.pass, report.summary.fail
    ));
    match out {
        Some(path) => {
            std::fs::write(&path, json + "\n").map_err(|e| RunError::Internal(format!("{}: {e}", path.display())))?;
            println!("{summary}");
        }
        None => {
            println!("{json}");
            eprintln!("{summary}");
        }
    }
    Ok(ExitCode::from(if report.all_passed() { 0 } else { 1 }))
}

fn show_cartan(p: u64, window: Vec<String>, json: bool) -> Result<ExitCode, RunError> {
    let window: Vec<String> = window.into_iter().filter(|s| !s.trim().is_empty()).collect();
    let table = runner::show_cartan(p, &window)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&table).map_err(|e| RunError::Internal(e.to_string()))?);
        return Ok(ExitCode::SUCCESS);
    }
    println!("field: {}", table.field);
    println!("{:<10} {:<10} {:<24} {:<4} {:<6} {}", "colour", "component", "b", "d", "parity", "type");
    for r in &table.colours {
        println!("{:<10} {:<10} {:<24} {:<4} {:<6} {}", r.colour, r.component, r.b, r.d, r.parity, r.dynkin);
    }
    if !table.matrix.is_empty() {
        println!("cartan matrix:");
        for row in &table.matrix {
            println!("  {}", row.iter().map(|c| format!("{c:>3}")).collect::<String>());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn weights_act(character: String, ops: Vec<String>, p: u64, window: Option<Vec<String>>) -> Result<ExitCode, RunError> {
    let ctx = runner::bubble_context(p, window.as_deref())?;
    let start = runner::parse_character(&ctx, &character)?;
    let ops: Vec<String> = ops.into_iter().filter(|s| !s.trim().is_empty()).collect();
    let trace = runner::weights_act(&ctx, &start, &ops)?;
    println!("{}", serde_json::to_string_pretty(&trace).map_err(|e| RunError::Internal(e.to_string()))?);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(move || match cli.command {
        Command::Verify { suite, p, window, order, seed, config, out, timings } => {
            verify(suite, p, window, order, seed, config, out, timings)
        }
        Command::ShowCartan { p, window, json } => show_cartan(p, window, json),
        Command::WeightsAct { character, ops, p, window } => weights_act(character, ops, p, window),
    });
    match outcome {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => fail(e),
        Err(_) => ExitCode::from(3),
    }
}
