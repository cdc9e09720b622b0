//! `moreau-slab`: simulate, fit, validate and empirical-Bayes runs.
//!
//! Exit status is 0 on success, 2 when the validation suite fails and 1 on
//! configuration or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use moreau_slab::harness::config::{parse_kv, split_pair};
use moreau_slab::harness::run::{execute, Report};
use moreau_slab::harness::{Mode, RunConfig};

/// Overrides `out_dir` from the config file (but not `--out` or an
/// `out_dir=` argument).
const OUT_DIR_ENV: &str = "MOREAU_SLAB_OUT_DIR";

#[derive(Parser)]
#[command(name = "moreau-slab", version, about = "Spike-and-slab regression with Moreau-Yosida posterior approximations")]
struct Cli {
    #[command(subcommand)]
    mode: ModeArg,
}

#[derive(clap::Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// `key=value` overrides applied after the config file.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum ModeArg {
    /// Replicated runs on synthetic AR(1)-design data.
    Simulate(Common),
    /// Fit CSV data (`x_path`, `z_path`, `sigma2`).
    Fit(Common),
    /// Run the oracle validation suite.
    Validate(Common),
    /// Estimate the noise variance by cross-validated lasso, then fit.
    Eb(Common),
}

fn load(cli: Cli) -> Result<RunConfig, moreau_slab::Error> {
    let (mode, common) = match cli.mode {
        ModeArg::Simulate(c) => (Mode::Simulate, c),
        ModeArg::Fit(c) => (Mode::Fit, c),
        ModeArg::Validate(c) => (Mode::Validate, c),
        ModeArg::Eb(c) => (Mode::Eb, c),
    };
    let mut pairs = match &common.config {
        Some(p) => parse_kv(&std::fs::read_to_string(p).map_err(|e| {
            moreau_slab::Error::Config(format!("cannot read {}: {e}", p.display()))
        })?)?,
        None => Vec::new(),
    };
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        pairs.push(("out_dir".into(), dir));
    }
    for o in &common.overrides {
        pairs.push(split_pair(o)?);
    }
    if let Some(out) = &common.out {
        pairs.push(("out_dir".into(), out.display().to_string()));
    }
    RunConfig::from_pairs(mode, pairs)
}

fn summarize(report: &Report) -> String {
    match report {
        Report::Simulate(r) => format!(
            "{} replication(s): relative error {:.4} ± {:.4}, F-score {:.4} ± {:.4}",
            r.reps.len(),
            r.rel_err.mean,
            r.rel_err.se,
            r.f_score.mean,
            r.f_score.se
        ),
        Report::Fit(r) => format!("selected {} of {} coordinates", r.selected.len(), r.d),
        Report::Eb(r) => match (&r.dataset, &r.known, &r.estimated) {
            (Some(fit), _, _) => format!("sigma2_hat {:.4}, selected {}", fit.eb.sigma2_hat, fit.fit.selected.len()),
            (None, Some(k), Some(e)) => format!(
                "relative error % known {:.2} / estimated {:.2}; F-score % known {:.2} / estimated {:.2}",
                k.rel_err_pct, e.rel_err_pct, k.f_score_pct, e.f_score_pct
            ),
            _ => String::new(),
        },
        Report::Validate(r) => r.checks.iter().map(|c| c.line()).collect::<Vec<_>>().join("\n"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match load(cli) {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(1);
        }
    };
    match execute(&cfg) {
        Ok((report, path)) => {
            println!("{}", summarize(&report));
            println!("wrote {}", path.display());
            if report.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(1)
        }
    }
}
