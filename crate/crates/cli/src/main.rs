use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use mpe_core::datagen::generate;
use mpe_core::harness::{
    emit_report, emit_sweep, json_bytes, parse_p_grid, run_grid_with, sweep_copy_fraction_with, ReportFormat,
    RunOptions, WORKERS_ENV,
};
use mpe_core::measure::kappa_max_argmin;
use mpe_core::{DiscreteDistribution, RunManifest, SyntheticSpec};

#[derive(Parser)]
#[command(name = "mpe", version, about = "Mixture proportion estimation experiments")]
struct Cli {
    /// Worker threads for trial execution.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a manifest and write trials.csv, aggregate.json and timings.csv.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory; overrides the manifest's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the copy fraction and write curve data.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        /// `start:stop:step` or a comma-separated list, within [0, 0.5].
        #[arg(long, default_value = "0:0.25:0.025")]
        p_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact maximum proportion of H in F for two discrete distributions.
    Oracle {
        #[arg(long)]
        dist_f: PathBuf,
        #[arg(long)]
        dist_h: PathBuf,
    },
    /// Generate a synthetic dataset as CSV plus a JSON manifest next to it.
    Datagen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn output_dir(manifest: &RunManifest, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| manifest.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("mpe-out"))
}

fn options(workers: Option<usize>) -> Result<RunOptions> {
    if workers == Some(0) {
        bail!("{WORKERS_ENV} must be >= 1");
    }
    Ok(RunOptions { workers })
}

/// Returns the number of failed trials.
fn execute(cli: Cli) -> Result<usize> {
    match cli.command {
        Command::Run { manifest, out } => {
            let m = RunManifest::load(&manifest).with_context(|| format!("loading {}", manifest.display()))?;
            let report = run_grid_with(&m, &options(cli.workers)?)?;
            let dir = output_dir(&m, out);
            emit_report(&report, &dir, &ReportFormat::ALL)?;
            for c in &report.estimators {
                let p = c
                    .wilcoxon
                    .as_ref()
                    .map_or("n/a".to_string(), |w| format!("{:.3e}", w.p_value));
                println!(
                    "{:<4} pairs={:<4} plain_mae={:.4} regrouped_mae={:.4} p={p}",
                    c.estimator, c.pairs, c.plain.mean_abs_error, c.regrouped.mean_abs_error
                );
            }
            println!("wrote {} ({} failures)", dir.display(), report.failure_count());
            Ok(report.failure_count())
        }
        Command::Sweep { manifest, p_grid, out } => {
            let m = RunManifest::load(&manifest).with_context(|| format!("loading {}", manifest.display()))?;
            let grid = parse_p_grid(&p_grid)?;
            let report = sweep_copy_fraction_with(&m, &grid, &options(cli.workers)?)?;
            let dir = output_dir(&m, out);
            emit_sweep(&report, &dir)?;
            for pt in &report.points {
                println!(
                    "{:<4} p={:.3} dkappa={:+.4} derr={:+.4}",
                    pt.estimator, pt.p, pt.mean_kappa_diff, pt.mean_abs_error_diff
                );
            }
            println!("wrote {} ({} failures)", dir.display(), report.failures.len());
            Ok(report.failures.len())
        }
        Command::Oracle { dist_f, dist_h } => {
            let f: DiscreteDistribution = read_json(&dist_f)?;
            let h: DiscreteDistribution = read_json(&dist_h)?;
            let (kappa, argmin) = kappa_max_argmin(&f, &h)?;
            println!("{}", serde_json::json!({ "kappa_max": kappa, "argmin": argmin }));
            Ok(0)
        }
        Command::Datagen { spec, out } => {
            let spec: SyntheticSpec = read_json(&spec)?;
            let ds = generate(&spec)?;
            let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            ds.write_csv(std::io::BufWriter::new(file))?;
            let manifest_path = out.with_extension("json");
            fs::write(&manifest_path, json_bytes(&ds.manifest())?)
                .with_context(|| format!("writing {}", manifest_path.display()))?;
            println!("wrote {} rows to {}", ds.len(), out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
