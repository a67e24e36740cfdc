use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ssge_cli::{config::TrainConfig, run_bench, run_train, CliError};
use ssge_core::alloc_track::TrackingAllocator;
use ssge_dataio::{load_checkpoint, load_dataset, load_embeddings, render_report, save_embeddings, write_report};

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

/// Self-supervised graph embedding pipeline.
#[derive(Parser)]
#[command(name = "ssge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an encoder and write checkpoint, embeddings, per-epoch
    /// diagnostics CSV, and the evaluation report.
    Train {
        /// Config file (`key = value` lines; see configs/).
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Encode a dataset with a trained checkpoint.
    Embed {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Embeddings output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate stored embeddings: linear probe, k-means, NMI/ARI.
    Eval {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Number of evaluation seeds aggregated into mean and deviation.
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        /// Master seed for probe and k-means streams.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Writes the report here in addition to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Writes an angle-histogram CSV of the first two channels.
        #[arg(long)]
        angles_out: Option<PathBuf>,
        /// Bins of the angle histogram.
        #[arg(long, default_value_t = 64)]
        angle_bins: usize,
    },
    /// Time loss+gradient on synthetic inputs over an (n, d) grid.
    Bench {
        /// Row counts, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Embedding dimensions, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { config, seed, out } => {
            let mut cfg = TrainConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let ds = load_dataset(&cfg.dataset)?;
            let outcome = run_train(&cfg, &ds, &out)?;
            println!(
                "trained {} epochs on {} (n={}, d={})",
                cfg.epochs,
                ds.name,
                outcome.embeddings.rows(),
                outcome.embeddings.cols()
            );
            println!(
                "final loss {:.6} (align {:.6}, uniform {:.6})",
                outcome.final_loss.total, outcome.final_loss.align, outcome.final_loss.uniform
            );
            println!(
                "accuracy {:.4} +- {:.4} | nmi {:.4} +- {:.4} | ari {:.4} +- {:.4}",
                outcome.report.accuracy_mean,
                outcome.report.accuracy_std,
                outcome.report.nmi_mean,
                outcome.report.nmi_std,
                outcome.report.ari_mean,
                outcome.report.ari_std
            );
            println!("artifacts in {}", outcome.out_dir.display());
            Ok(())
        }
        Command::Embed { checkpoint, dataset, out } => {
            let model = load_checkpoint(&checkpoint)?;
            let ds = load_dataset(&dataset)?;
            let z = ssge_cli::train::encode_original(&model, &ds)?;
            save_embeddings(&z, &out)?;
            println!("wrote {} ({} x {})", out.display(), z.rows(), z.cols());
            Ok(())
        }
        Command::Eval { embeddings, dataset, seeds, seed, out, angles_out, angle_bins } => {
            let z = load_embeddings(&embeddings)?;
            let ds = load_dataset(&dataset)?;
            let (mut report, _) = ssge_cli::train::evaluate_embeddings(&z, &ds, seeds, seed)?;
            report.diagnostics = ssge_cli::train::embedding_diagnostics(&z, seed)?;
            report.config.insert("dataset".into(), ds.name.clone());
            report.config.insert("embeddings".into(), embeddings.display().to_string());
            report.config.insert("eval_seeds".into(), seeds.to_string());
            report.config.insert("seed".into(), seed.to_string());
            print!("{}", render_report(&report)?);
            if let Some(path) = out {
                write_report(&report, path)?;
            }
            if let Some(path) = angles_out {
                ssge_cli::train::write_angle_histogram(&z, angle_bins, path)?;
            }
            Ok(())
        }
        Command::Bench { n, d, seed } => {
            let rows = run_bench(&n, &d, seed)?;
            println!("{:>8} {:>6} {:>14} {:>12} {:>14}", "n", "d", "loss+grad (s)", "eig (s)", "peak bytes");
            for r in &rows {
                println!(
                    "{:>8} {:>6} {:>14.6} {:>12.6} {:>14}",
                    r.n, r.d, r.loss_grad_secs, r.eig_secs, r.peak_bytes
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // One machine-readable error line on stderr.
            let msg = serde_error_line(&e.to_string());
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}

fn serde_error_line(message: &str) -> String {
    // Minimal JSON string escape; error text is ASCII in practice.
    let escaped: String = message
        .chars()
        .flat_map(|c| match c {
            '"' => "\\\"".chars().collect::<Vec<_>>(),
            '\\' => "\\\\".chars().collect(),
            '\n' => "\\n".chars().collect(),
            c => vec![c],
        })
        .collect();
    format!("{{\"error\": \"{escaped}\"}}")
}
