use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hdpg_core::runner::{parse_seed_list, run_all, write_csv, write_csv_to, RunConfig, RunRecord};
use hdpg_core::preset_run_table;

/// Randomized-network hybrid discontinuous Petrov-Galerkin solvers for
/// Darcy, Stokes, Brinkman and coupled Stokes-Darcy benchmarks.
#[derive(Parser)]
#[command(name = "hdpg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs one configuration over its seed list.
    Solve {
        /// Flat `key = value` file; `#` starts a comment.
        #[arg(long)]
        config: PathBuf,
        /// Seeds as `0,1,2` or `0..10`.
        #[arg(long)]
        seed_list: Option<String>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Writes the first seed's system as `row col value` triplets.
        #[arg(long)]
        dump_system: Option<PathBuf>,
        /// Gauss points per direction used in assembly.
        #[arg(long)]
        quad_order: Option<usize>,
        /// Extra `key=value` overrides applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Replays the parameter rows of a published table.
    Reproduce {
        /// One of 1, 2, 3, 5, 6, ex3, ex4, ex5.
        #[arg(long)]
        table: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replaces the default ten seeds of every row.
        #[arg(long)]
        seed_list: Option<String>,
        /// Runs only the first N rows.
        #[arg(long)]
        limit: Option<usize>,
    },
}

fn emit(records: &[RunRecord], out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => write_csv(records, path).with_context(|| format!("writing {}", path.display()))?,
        None => write_csv_to(records, std::io::stdout().lock())?,
    }
    Ok(())
}

fn progress(total: usize) -> impl FnMut(usize, &RunRecord) {
    move |i, rec| {
        let errs: Vec<String> = rec
            .mean
            .errors()
            .iter()
            .filter_map(|(name, v)| v.map(|v| format!("{name}={v:.3e}")))
            .collect();
        eprintln!(
            "[{}/{total}] {} k0={} dof={} {} ({:.0} ms/seed)",
            i + 1,
            rec.config.scheme.name(),
            rec.config.k0,
            rec.mean.dof,
            errs.join(" "),
            rec.mean.runtime_ms
        );
    }
}

fn main_inner() -> Result<()> {
    match Cli::parse().command {
        Command::Solve { config, seed_list, out, dump_system, quad_order, overrides } => {
            let mut cfg =
                RunConfig::from_file(&config).with_context(|| format!("reading config {}", config.display()))?;
            for kv in &overrides {
                let (k, v) = kv.split_once('=').with_context(|| format!("override `{kv}` is not key=value"))?;
                cfg.set(k.trim(), v.trim())?;
            }
            if let Some(s) = seed_list {
                cfg.seeds = parse_seed_list(&s)?;
            }
            if let Some(p) = dump_system {
                cfg.dump_system = Some(p);
            }
            if let Some(q) = quad_order {
                cfg.quad_order = Some(q);
            }
            cfg.validate()?;
            let out = out.or_else(|| cfg.out.clone());
            let records = run_all(std::slice::from_ref(&cfg), progress(1))?;
            emit(&records, out.as_ref())
        }
        Command::Reproduce { table, out, seed_list, limit } => {
            let mut rows = preset_run_table(&table)?;
            if let Some(s) = seed_list {
                let seeds = parse_seed_list(&s)?;
                rows.iter_mut().for_each(|r| r.seeds = seeds.clone());
            }
            if let Some(n) = limit {
                rows.truncate(n);
            }
            let records = run_all(&rows, progress(rows.len()))?;
            emit(&records, out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
