//! `adhdp-lab`: train the four agent variants on the attitude simulation,
//! derive the loss-landscape analysis, render figures, and compare runs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure,
//! 4 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adhdp_landscape::config::{ExperimentConfig, PRESET_NAMES};
use adhdp_landscape::error::CoreError;
use adhdp_landscape::pipeline::{
    analyze_run, compare_runs, exit_code, plot_run, train_to_dir, AnalyzeOptions, PlotOptions,
};

#[derive(Parser)]
#[command(name = "adhdp-lab", version, about = "Actor-critic attitude control with loss-landscape diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one variant and persist the run directory
    Train {
        /// Configuration file (flat key = value format)
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Shipped preset: variant1..variant4, optionally with `_desk`
        #[arg(long)]
        preset: Option<String>,
        /// Run directory to create
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute the four visualization indices from a run directory
    Analyze {
        run_dir: PathBuf,
        /// Grid nodes per landscape axis (defaults to the run's config)
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Render the index figures and final-episode state plots as SVG
    Plot {
        run_dir: PathBuf,
        /// Color heatmaps on a logarithmic loss scale
        #[arg(long)]
        log_scale: bool,
        /// Number of contour iso-lines
        #[arg(long, default_value_t = 10)]
        contours: usize,
        /// Figure size as WxH (the viewBox stays 960x720)
        #[arg(long, default_value = "960x720")]
        size: String,
    },
    /// Tabulate final TD level, PC1 variance, survival, and saturation
    Compare {
        run_dirs: Vec<PathBuf>,
        /// Also write the table as CSV to this path
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_size(s: &str) -> Result<(u32, u32), CoreError> {
    let err = || CoreError::Config {
        key: "size".into(),
        detail: format!("`{s}` is not WxH (for example 960x720)"),
    };
    let (w, h) = s.split_once('x').ok_or_else(err)?;
    Ok((w.parse().map_err(|_| err())?, h.parse().map_err(|_| err())?))
}

fn load_config(
    config: &Option<PathBuf>,
    preset: &Option<String>,
    seed: Option<u64>,
) -> Result<ExperimentConfig, CoreError> {
    let mut cfg = match (config, preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
            ExperimentConfig::from_text(&text)?
        }
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        _ => {
            return Err(CoreError::Config {
                key: "config".into(),
                detail: format!(
                    "pass exactly one of --config or --preset (presets: {})",
                    PRESET_NAMES.join(", ")
                ),
            })
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CoreError> {
    match cli.command {
        Command::Train {
            config,
            preset,
            out,
            seed,
        } => {
            let cfg = load_config(&config, &preset, seed)?;
            let report = train_to_dir(&cfg, &out)?;
            for episode in &report.record.episodes {
                println!("{}", adhdp_landscape::pipeline::episode_line(episode));
            }
            println!("run saved to {}", out.display());
            if let Some(failure) = report.failure {
                eprintln!("training aborted: {failure} (partial run persisted)");
                return Err(failure);
            }
            Ok(())
        }
        Command::Analyze {
            run_dir,
            resolution,
        } => {
            let report = analyze_run(&run_dir, &AnalyzeOptions { resolution })?;
            println!(
                "critic plane ratios {:.4} / {:.4}, reference loss {:.6}",
                report.critic_plane_ratios[0],
                report.critic_plane_ratios[1],
                report.critic_reference_loss
            );
            println!(
                "actor plane ratios {:.4} / {:.4}, reference loss {:.6}",
                report.actor_plane_ratios[0],
                report.actor_plane_ratios[1],
                report.actor_reference_loss
            );
            println!(
                "actor PC1 ratio {:.4}, state PC1 ratio {:.4}",
                report.actor_pc1_ratio, report.state_pc1_ratio
            );
            println!("analysis written to {}", run_dir.join("analysis").display());
            Ok(())
        }
        Command::Plot {
            run_dir,
            log_scale,
            contours,
            size,
        } => {
            let opts = PlotOptions {
                log_scale,
                contours,
                size: parse_size(&size)?,
            };
            let files = plot_run(&run_dir, &opts)?;
            for f in &files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Compare { run_dirs, out } => {
            if run_dirs.is_empty() {
                return Err(CoreError::invalid("compare needs at least one run directory"));
            }
            let table = compare_runs(&run_dirs)?;
            print!("{}", table.to_text());
            if let Some(path) = out {
                std::fs::write(&path, table.to_csv()).map_err(|e| CoreError::io(&path, e))?;
                println!("table written to {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
