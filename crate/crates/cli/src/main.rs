use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use scanbench_cli::exit;
use scanbench_cli::{cmd_preprocess, cmd_report, cmd_run, cmd_validate, LoadedConfig, ReportOptions};
use scanbench_core::metrics::Correlation;

#[derive(Parser)]
#[command(name = "scanbench", version, about = "Visual search scanpath simulation and benchmarking")]
struct Cli {
    /// Worker threads for trial-level parallelism.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equalize a dataset and write it with its reject log.
    Preprocess {
        /// Dataset directory containing dataset.json and trials.json.
        root: PathBuf,
        /// Output directory.
        out: PathBuf,
    },
    /// Run a searcher (or ingest external scanpaths) over a dataset.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the searcher seed and the subset seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Evaluate a random subset of this many trials.
        #[arg(long)]
        subset: Option<usize>,
    },
    /// Score human and model scanpaths.
    Report {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = CorrelationArg::Pearson)]
        correlation: CorrelationArg,
        /// Merge short or collinear saccades before Multi-Match.
        #[arg(long)]
        simplify: bool,
        /// Scanpaths need more than this many fixations to enter Multi-Match.
        #[arg(long, default_value_t = 2)]
        mm_min_fixations: usize,
        /// Model scanpath files.
        models: Vec<PathBuf>,
    },
    /// Check dataset directories, FGRID files and scanpath files.
    Validate {
        /// Required FGRID dimensions as ROWSxCOLS.
        #[arg(long, value_parser = parse_dims)]
        dims: Option<(usize, usize)>,
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrelationArg {
    Pearson,
    Spearman,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once('x').ok_or("expected ROWSxCOLS")?;
    Ok((
        r.parse().map_err(|e| format!("rows: {e}"))?,
        c.parse().map_err(|e| format!("cols: {e}"))?,
    ))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::FATAL as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Preprocess { root, out } => {
            let s = cmd_preprocess(&root, &out)?;
            println!(
                "trials kept {}, dropped {}; scanpaths kept {}, dropped {}",
                s.trials_kept, s.trials_dropped, s.scanpaths_kept, s.scanpaths_dropped
            );
            Ok(exit::SUCCESS)
        }
        Command::Run { config, seed, subset } => {
            let mut loaded = LoadedConfig::load(&config)?;
            loaded.config = loaded.config.with_overrides(seed, subset);
            let s = cmd_run(&loaded, cli.jobs)?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            for k in &s.skipped {
                eprintln!("skipped {}: {}", k.trial_id, k.reason);
            }
            println!("scanpaths written {}, trials skipped {}", s.written, s.skipped.len());
            Ok(if s.is_partial() { exit::PARTIAL } else { exit::SUCCESS })
        }
        Command::Report {
            dataset,
            out,
            correlation,
            simplify,
            mm_min_fixations,
            models,
        } => {
            let opts = ReportOptions {
                correlation: match correlation {
                    CorrelationArg::Pearson => Correlation::Pearson,
                    CorrelationArg::Spearman => Correlation::Spearman,
                },
                simplify,
                mm_min_fixations_exclusive: mm_min_fixations,
                jobs: cli.jobs,
            };
            let r = cmd_report(&dataset, &models, &out, &opts)?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            println!("Humans: AUC {:.4}", r.humans.auc);
            for m in &r.models {
                let corr = m.correlation.map(|c| format!("{c:.4}")).unwrap_or_else(|| "n/a".into());
                let avg = m.hm_mm.map(|s| format!("{:.4}", s.avg)).unwrap_or_else(|| "n/a".into());
                println!("{}: AUC {:.4}, AvgMM {avg}, Corr {corr}", m.label, m.auc);
            }
            Ok(exit::SUCCESS)
        }
        Command::Validate { dims, paths } => {
            let mut all_ok = true;
            for p in &paths {
                let v = cmd_validate(p, dims);
                println!("{} {}", if v.ok { "ok" } else { "INVALID" }, v.message);
                all_ok &= v.ok;
            }
            Ok(if all_ok { exit::SUCCESS } else { exit::FATAL })
        }
    }
}
