//! `smoothing-lab`: command-line front end of the smoothing-estimate
//! laboratory.
//!
//! # Subcommands
//!
//! `classify`, `propagate`, `estimate`, `compare`, `decompose`,
//! `canonical`, `timedep` each run one experiment; `report` merges the
//! artifacts of many. Global flags: `--config PATH` (JSON experiment
//! description), `--seed INT`, `--out DIR`, `--grid n,L,N`,
//! `--threads INT` (speed only, never results).
//!
//! # Symbol mini-language
//!
//! Expressions over `xi1`, `xi2`, `xi3` and the radius `rho`, with `+ - *
//! / ^` and parentheses; integer exponents only. Examples:
//!
//! * `"xi1^3 + xi2^3 - xi1"` — exact polynomial calculus;
//! * `"(rho^2-1)^2"` or `"radial(rho^3 - rho)"` — radial profile with
//!   symbolic derivative;
//! * `"catalog:normal_form_3"`, `"catalog:ring_quartic"` — named entries.
//!
//! # Config schema (version 1)
//!
//! ```json
//! {
//!   "schema": 1,
//!   "seed": 7,
//!   "grid": {"lens": [32.0, 32.0], "points": [64, 64]},
//!   "task": {"kind": "estimate", "symbol": "xi1^2 + xi2^2",
//!            "weight": "bracket:1", "smoother": "invariant",
//!            "time_samples": 64, "members": 16,
//!            "study": {"kind": "single"}}
//! }
//! ```
//!
//! `task.kind` selects the variant; see [`config::TaskConfig`] for every
//! field. The canonical JSON serialization of the effective config is
//! SHA-256-hashed into the artifact address, so identical experiments
//! share a directory and reruns must reproduce identical result bytes.
//!
//! # Exit codes
//!
//! `0` success; `2` config or parse error (parse errors carry a byte
//! position); `3` work budget exceeded; `4` missing or corrupt artifacts;
//! `1` numerical failure inside a run.
//!
//! # Artifact layout
//!
//! `<out>/<confighash16>/manifest.json` + `results.csv` + `details.json`;
//! `report DIR` writes `DIR/merged.csv` and `DIR/summary.json`.

pub mod args;
pub mod artifacts;
pub mod config;
pub mod exec;
pub mod rows;
pub mod symbols;

use clap::Parser;

use crate::config::{CliResult, TaskConfig};

/// Print to stdout, swallowing broken pipes: a downstream `head` closing
/// the stream is not a failure of the run.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(text.as_bytes());
}

/// Parse argv, run, and map errors to the exit-code contract.
pub fn run() -> i32 {
    let cli = args::Cli::parse();
    if let Some(threads) = cli.threads {
        // Worker count must never change results, only wall time; a pool
        // that already exists (tests, embedding) is fine as it is.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &args::Cli) -> CliResult<()> {
    if let args::Command::Report { dir } = &cli.command {
        let (csv, summary) = artifacts::merge_reports(dir)?;
        let target = cli.out.as_deref().unwrap_or(dir);
        std::fs::create_dir_all(target)?;
        std::fs::write(target.join("merged.csv"), &csv)?;
        let mut summary_text = serde_json::to_string_pretty(&summary)
            .map_err(|e| config::CliError::Runtime(format!("summary serialization: {e}")))?;
        summary_text.push('\n');
        std::fs::write(target.join("summary.json"), summary_text)?;
        emit(&format!(
            "merged {} rows from {} runs into {}\n",
            summary["total_rows"],
            summary["runs"].as_array().map_or(0, Vec::len),
            target.join("merged.csv").display()
        ));
        return Ok(());
    }
    let cfg = cli.effective_config()?;
    let out = exec::execute(&cfg)?;
    if let Some(root) = &cli.out {
        let dir = artifacts::write_run(root, &cfg, &out.rows, &out.details)?;
        emit(&format!("{}\n", dir.display()));
        return Ok(());
    }
    match &cfg.task {
        // The detail documents of these two are their primary product.
        TaskConfig::Classify { .. } | TaskConfig::Decompose { .. } => {
            let text = serde_json::to_string_pretty(&out.details)
                .map_err(|e| config::CliError::Runtime(format!("details serialization: {e}")))?;
            emit(&text);
            emit("\n");
        }
        _ => emit(&rows::render_csv(&out.rows)),
    }
    Ok(())
}
