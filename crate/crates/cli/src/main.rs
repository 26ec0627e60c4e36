use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gfl_core::config::KeyValues;
use gfl_core::synth::{generate_synthetic, SynthSpec};
use gfl_core::timing::{loglog_slope, timing_benchmark, to_csv};
use gfl_core::train::{dump_barcodes, run_cv_on, Prepared};
use gfl_core::tu::{load_tu_dir, write_tu_dir};
use gfl_core::TrainConfig;

#[derive(Parser)]
#[command(name = "gfl", version, about = "Graph filtration learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validated training from a key=value config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Run single-threaded.
        #[arg(long)]
        deterministic: bool,
        /// Write the final barcodes of every test graph here.
        #[arg(long)]
        dump_barcodes: Option<PathBuf>,
        /// Metrics JSON; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time sublevel and superlevel persistence per graph.
    Bench {
        /// TU-format dataset directory.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic dataset in TU format.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        /// Output directory; its name becomes the dataset name.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train {
            config,
            seed,
            deterministic,
            dump_barcodes: dump_dir,
            out,
        } => {
            let mut cfg = TrainConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.deterministic |= deterministic;
            let data = Prepared::new(cfg.load_dataset()?, cfg.features)?;
            let metrics = run_cv_on(&cfg, &data, |fold, test| {
                eprintln!(
                    "fold {}: accuracy {:.4}, final loss {:.4}, {:.1}s",
                    fold.fold,
                    fold.accuracy,
                    fold.loss_curve.last().copied().unwrap_or(f64::NAN),
                    fold.seconds
                );
                match &dump_dir {
                    Some(dir) => dump_barcodes(&fold.params, &data, test, dir),
                    None => Ok(()),
                }
            })?;
            eprintln!(
                "{}: {:.2} ± {:.2} over {} folds",
                metrics.dataset,
                100.0 * metrics.mean_accuracy,
                100.0 * metrics.std_accuracy,
                metrics.fold_accuracies.len()
            );
            let json = metrics.to_json();
            match out {
                Some(p) => {
                    fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?
                }
                None => println!("{json}"),
            }
        }
        Command::Bench {
            dataset,
            repeats,
            out,
        } => {
            let d = load_tu_dir(&dataset)?;
            let rows = timing_benchmark(&d, repeats);
            fs::write(&out, to_csv(&rows)).with_context(|| format!("writing {}", out.display()))?;
            match loglog_slope(&rows) {
                Some(s) => eprintln!("{} graphs, log-log slope {s:.3}", rows.len()),
                None => eprintln!("{} graphs, too few sizes for a slope", rows.len()),
            }
        }
        Command::Synth { spec, out } => {
            let text =
                fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let spec = SynthSpec::from_kv(&KeyValues::parse(&text)?)?;
            let d = generate_synthetic(&spec)?;
            let Some(name) = out.file_name().and_then(|n| n.to_str()) else {
                bail!("output directory {} has no usable name", out.display());
            };
            write_tu_dir(&d, &out, name)?;
            eprintln!("wrote {} graphs to {}", d.len(), out.display());
        }
    }
    Ok(())
}
