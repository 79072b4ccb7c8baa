//! End-to-end orchestration: train a run into a directory, derive the
//! analysis CSVs, render the figures, and compare runs.
//!
//! `analysis/` inside a run directory holds:
//!
//! ```text
//! landscape_critic.csv    alpha,beta,loss,finite
//! landscape_actor.csv     alpha,beta,loss,finite
//! trajectory_critic.csv   alpha,beta        (snapshot overlay)
//! trajectory_actor.csv    alpha,beta
//! td_by_episode.csv       episode,mean_abs_td
//! time_td_actorpc1.csv    time,td,actor_pc1
//! statepc1_td.csv         state_pc1,td
//! pca_meta.txt            key = value
//! ```
//!
//! PCA bases persist as `pca_<name>.bin` in the run directory root, and
//! `plot` renders seven SVGs into `figures/`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::{CoreError, Result};
use crate::landscape::{self, GridSpec, LandscapeGrid};
use crate::pca;
use crate::recorder::{self, EpisodeSummary, NetId, RunRecord, RunRecorder};
use crate::svg::{self, FigureKind, FigureSpec};
use crate::agent;

pub const INDEX_CSVS: [&str; 4] = [
    "landscape_critic.csv",
    "landscape_actor.csv",
    "time_td_actorpc1.csv",
    "statepc1_td.csv",
];

pub const FIGURES: [&str; 7] = [
    "landscape_critic.svg",
    "landscape_actor.svg",
    "time_td_actorpc1.svg",
    "statepc1_td.svg",
    "quaternions.svg",
    "omega.svg",
    "torque.svg",
];

/// Result of `train_to_dir`: the persisted record plus the numeric failure
/// when the run aborted early (partial artifacts are still saved).
pub struct TrainReport {
    pub record: RunRecord,
    pub failure: Option<CoreError>,
}

/// Trains under `cfg` and persists the run (partial on numeric failure).
pub fn train_to_dir(cfg: &ExperimentConfig, out_dir: &Path) -> Result<TrainReport> {
    cfg.validate()?;
    let mut recorder = RunRecorder::new(cfg.clone());
    let failure = agent::train(cfg, &mut recorder).err();
    if let Some(err) = &failure {
        if !matches!(err, CoreError::NumericOverflow { .. }) {
            return Err(recorder_err(err));
        }
    }
    let record = recorder.into_record();
    recorder::save_run(&record, out_dir)?;
    Ok(TrainReport { record, failure })
}

fn recorder_err(err: &CoreError) -> CoreError {
    CoreError::invalid(format!("training failed: {err}"))
}

/// Ratios and reference losses echoed into `pca_meta.txt`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisReport {
    pub critic_plane_ratios: [f64; 2],
    pub critic_reference_loss: f64,
    pub actor_plane_ratios: [f64; 2],
    pub actor_reference_loss: f64,
    pub actor_pc1_ratio: f64,
    pub state_pc1_ratio: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AnalyzeOptions {
    /// Overrides `analysis.resolution` from the run's config.
    pub resolution: Option<usize>,
}

fn grid_csv(grid: &LandscapeGrid) -> String {
    let mut out = String::with_capacity(grid.values.len() * grid.values.len() * 24);
    out.push_str("alpha,beta,loss,finite\n");
    for (i, &a) in grid.alpha_axis.iter().enumerate() {
        for (j, &b) in grid.beta_axis.iter().enumerate() {
            let _ = writeln!(
                out,
                "{a},{b},{},{}",
                grid.values[i][j],
                grid.finite[i][j] as u8
            );
        }
    }
    out
}

fn trajectory_csv(grid: &LandscapeGrid) -> String {
    let mut out = String::from("alpha,beta\n");
    for (a, b) in &grid.trajectory {
        let _ = writeln!(out, "{a},{b}");
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text.as_bytes()).map_err(|e| CoreError::io(path, e))
}

/// Computes all four indices from a persisted run and writes the analysis
/// files. Pure given the run directory contents and options.
pub fn analyze_run(run_dir: &Path, opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    let run = recorder::load_run(run_dir)?;
    let analysis_dir = run_dir.join("analysis");
    std::fs::create_dir_all(&analysis_dir).map_err(|e| CoreError::io(&analysis_dir, e))?;

    let spec = GridSpec {
        resolution: opts.resolution.unwrap_or(run.config.analysis.resolution),
        range_scale: run.config.analysis.range_scale,
    };

    let critic_grid = landscape::build_landscape(&run, NetId::Critic, &spec)?;
    write(&analysis_dir.join("landscape_critic.csv"), &grid_csv(&critic_grid))?;
    write(
        &analysis_dir.join("trajectory_critic.csv"),
        &trajectory_csv(&critic_grid),
    )?;

    let actor_grid = landscape::build_landscape(&run, NetId::Actor, &spec)?;
    write(&analysis_dir.join("landscape_actor.csv"), &grid_csv(&actor_grid))?;
    write(
        &analysis_dir.join("trajectory_actor.csv"),
        &trajectory_csv(&actor_grid),
    )?;

    let mut td_csv = String::from("episode,mean_abs_td\n");
    for (ep, mean) in landscape::td_by_episode(&run) {
        let _ = writeln!(td_csv, "{ep},{mean}");
    }
    write(&analysis_dir.join("td_by_episode.csv"), &td_csv)?;

    let weight_series = landscape::actor_weight_td_time(&run)?;
    let mut wt_csv = String::from("time,td,actor_pc1\n");
    for (time, td, pc1) in &weight_series.points {
        let _ = writeln!(wt_csv, "{time},{td},{pc1}");
    }
    write(&analysis_dir.join("time_td_actorpc1.csv"), &wt_csv)?;

    let state_series = landscape::state_td_map(&run)?;
    let mut st_csv = String::from("state_pc1,td\n");
    for (pc1, td) in &state_series.points {
        let _ = writeln!(st_csv, "{pc1},{td}");
    }
    write(&analysis_dir.join("statepc1_td.csv"), &st_csv)?;

    // persist the weight-plane bases (recomputed deterministically from
    // the same snapshots the grids used)
    for (net, name) in [(NetId::Critic, "pca_critic.bin"), (NetId::Actor, "pca_actor.bin")] {
        let samples: Vec<Vec<f64>> = run
            .snapshots_of(net)
            .iter()
            .map(|s| s.weights.clone())
            .collect();
        let basis = pca::fit_pca(&samples, 2)?;
        pca::save_basis(&run_dir.join(name), &basis)?;
    }
    let actor_weights: Vec<Vec<f64>> =
        run.actor_samples.iter().map(|s| s.weights.clone()).collect();
    if let Ok(basis) = pca::fit_pca(&actor_weights, 1) {
        pca::save_basis(&run_dir.join("pca_actor_samples.bin"), &basis)?;
    }
    let states: Vec<Vec<f64>> = run.steps.iter().map(|s| s.state.to_vec()).collect();
    if let Ok(basis) = pca::fit_pca(&states, 1) {
        pca::save_basis(&run_dir.join("pca_state.bin"), &basis)?;
    }

    let report = AnalysisReport {
        critic_plane_ratios: critic_grid.plane_ratios,
        critic_reference_loss: critic_grid.reference_loss,
        actor_plane_ratios: actor_grid.plane_ratios,
        actor_reference_loss: actor_grid.reference_loss,
        actor_pc1_ratio: weight_series.pc1_ratio,
        state_pc1_ratio: state_series.pc1_ratio,
    };
    let mut meta = String::new();
    let _ = writeln!(meta, "critic_plane_ratio_1 = {}", report.critic_plane_ratios[0]);
    let _ = writeln!(meta, "critic_plane_ratio_2 = {}", report.critic_plane_ratios[1]);
    let _ = writeln!(meta, "critic_reference_loss = {}", report.critic_reference_loss);
    let _ = writeln!(meta, "actor_plane_ratio_1 = {}", report.actor_plane_ratios[0]);
    let _ = writeln!(meta, "actor_plane_ratio_2 = {}", report.actor_plane_ratios[1]);
    let _ = writeln!(meta, "actor_reference_loss = {}", report.actor_reference_loss);
    let _ = writeln!(meta, "actor_pc1_ratio = {}", report.actor_pc1_ratio);
    let _ = writeln!(meta, "state_pc1_ratio = {}", report.state_pc1_ratio);
    write(&analysis_dir.join("pca_meta.txt"), &meta)?;

    Ok(report)
}

fn require_analysis(run_dir: &Path) -> Result<PathBuf> {
    let analysis_dir = run_dir.join("analysis");
    for name in INDEX_CSVS.iter().chain(["pca_meta.txt"].iter()) {
        let path = analysis_dir.join(name);
        if !path.exists() {
            return Err(CoreError::invalid(format!(
                "{} is missing from {}; run `analyze` on this run directory first",
                name,
                run_dir.display()
            )));
        }
    }
    Ok(analysis_dir)
}

#[derive(Clone, Copy, Debug)]
pub struct PlotOptions {
    pub log_scale: bool,
    pub contours: usize,
    pub size: (u32, u32),
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            log_scale: false,
            contours: 10,
            size: (960, 720),
        }
    }
}

/// Renders the four index figures plus the final-episode state plots.
pub fn plot_run(run_dir: &Path, opts: &PlotOptions) -> Result<Vec<PathBuf>> {
    let analysis_dir = require_analysis(run_dir)?;
    let figures_dir = run_dir.join("figures");
    std::fs::create_dir_all(&figures_dir).map_err(|e| CoreError::io(&figures_dir, e))?;
    let mut written = Vec::new();

    for (csv, svg_name, title) in [
        ("landscape_critic.csv", "landscape_critic.svg", "Critic match loss"),
        ("landscape_actor.csv", "landscape_actor.svg", "Actor loss"),
    ] {
        let overlay = analysis_dir.join(csv.replace("landscape", "trajectory"));
        let mut spec = FigureSpec::new(
            FigureKind::Heatmap,
            analysis_dir.join(csv),
            figures_dir.join(svg_name),
        );
        spec.title = title.into();
        spec.x_label = "alpha (PC1)".into();
        spec.y_label = "beta (PC2)".into();
        spec.log_scale = opts.log_scale;
        spec.contours = opts.contours;
        spec.size = opts.size;
        spec.overlay = Some(overlay);
        svg::render(&spec)?;
        written.push(spec.output.clone());
    }

    // time/TD/actor-PC1 trajectory under the fixed isometric view
    {
        let path = analysis_dir.join("time_td_actorpc1.csv");
        let (_, columns) = svg::read_columns_csv(&path)?;
        if columns.len() != 3 {
            return Err(CoreError::corrupt(&path, "expected 3 columns"));
        }
        let triples: Vec<(f64, f64, f64)> = (0..columns[0].len())
            .map(|i| (columns[0][i], columns[2][i], columns[1][i]))
            .collect();
        let mut spec = FigureSpec::new(FigureKind::Trajectory3d, &path, figures_dir.join("time_td_actorpc1.svg"));
        spec.title = "Actor weight drift vs TD".into();
        spec.x_label = "time [s]".into();
        spec.y_label = "actor PC1".into();
        spec.z_label = "TD".into();
        spec.size = opts.size;
        let rendered = svg::traj3d_svg(&triples, &spec)?;
        std::fs::write(&spec.output, rendered.as_bytes())
            .map_err(|e| CoreError::io(&spec.output, e))?;
        written.push(spec.output.clone());
    }

    {
        let mut spec = FigureSpec::new(
            FigureKind::Scatter,
            analysis_dir.join("statepc1_td.csv"),
            figures_dir.join("statepc1_td.svg"),
        );
        spec.title = "TD over the state space".into();
        spec.x_label = "state PC1".into();
        spec.y_label = "TD".into();
        spec.size = opts.size;
        svg::render(&spec)?;
        written.push(spec.output.clone());
    }

    // final-episode state trajectories from steps.csv
    let run = recorder::load_run(run_dir)?;
    let last_episode = run
        .steps
        .last()
        .map(|s| s.episode)
        .ok_or_else(|| CoreError::invalid("run has no step logs to plot"))?;
    let steps: Vec<&recorder::StepLog> = run
        .steps
        .iter()
        .filter(|s| s.episode == last_episode)
        .collect();
    let time: Vec<f64> = steps.iter().map(|s| s.time).collect();
    type Series = Vec<(String, Vec<f64>)>;
    let state_plots: [(&str, &str, Series); 3] = [
        (
            "quaternions.svg",
            "Quaternions (final episode)",
            (0..4)
                .map(|k| {
                    (
                        format!("q{k}"),
                        steps.iter().map(|s| s.state[k]).collect::<Vec<f64>>(),
                    )
                })
                .collect(),
        ),
        (
            "omega.svg",
            "Angular velocity (final episode)",
            (0..3)
                .map(|k| {
                    (
                        format!("w{}", k + 1),
                        steps.iter().map(|s| s.state[4 + k]).collect::<Vec<f64>>(),
                    )
                })
                .collect(),
        ),
        (
            "torque.svg",
            "Control torque (final episode)",
            (0..3)
                .map(|k| {
                    (
                        format!("u{}", k + 1),
                        steps.iter().map(|s| s.action[k]).collect::<Vec<f64>>(),
                    )
                })
                .collect(),
        ),
    ];
    for (name, title, series) in state_plots {
        let mut spec = FigureSpec::new(FigureKind::Line, run_dir.join("steps.csv"), figures_dir.join(name));
        spec.title = title.into();
        spec.x_label = "time [s]".into();
        spec.y_label = match name {
            "quaternions.svg" => "quaternion component".into(),
            "omega.svg" => "rad/s".into(),
            _ => "N·m".into(),
        };
        spec.size = opts.size;
        let rendered = svg::line_svg(&time, &series, &spec)?;
        std::fs::write(&spec.output, rendered.as_bytes())
            .map_err(|e| CoreError::io(&spec.output, e))?;
        written.push(spec.output.clone());
    }

    Ok(written)
}

/// One row of the cross-run comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub run: String,
    pub final_mean_abs_td: f64,
    pub actor_pc1_ratio: f64,
    pub final_steps: u64,
    /// Fraction of steps with any torque component at >= 99% of the cap.
    pub saturation_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
}

impl CompareTable {
    pub fn to_text(&self) -> String {
        let mut name_w = "run".len();
        for r in &self.rows {
            name_w = name_w.max(r.run.len());
        }
        let mut out = format!(
            "{:<name_w$}  {:>16}  {:>15}  {:>11}  {:>10}\n",
            "run", "final_mean_abs_td", "actor_pc1_ratio", "final_steps", "saturation"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<name_w$}  {:>16.6}  {:>15.6}  {:>11}  {:>10.4}",
                r.run, r.final_mean_abs_td, r.actor_pc1_ratio, r.final_steps, r.saturation_fraction
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("run,final_mean_abs_td,actor_pc1_ratio,final_steps,saturation_fraction\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.run, r.final_mean_abs_td, r.actor_pc1_ratio, r.final_steps, r.saturation_fraction
            );
        }
        out
    }
}

fn read_meta_value(path: &Path, key: &str) -> Result<f64> {
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    for line in text.lines() {
        if let Some((k, v)) = line.split_once('=') {
            if k.trim() == key {
                return v.trim().parse().map_err(|_| {
                    CoreError::corrupt(path, format!("`{}` is not a number", v.trim()))
                });
            }
        }
    }
    Err(CoreError::corrupt(path, format!("missing key `{key}`")))
}

/// Summarizes analyzed runs side by side.
pub fn compare_runs(dirs: &[PathBuf]) -> Result<CompareTable> {
    let mut rows = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let analysis_dir = require_analysis(dir)?;
        let run = recorder::load_run(dir)?;
        let last = run
            .episodes
            .last()
            .ok_or_else(|| CoreError::invalid(format!("{} has no episodes", dir.display())))?;
        let u_max = run.config.environment.u_max;
        let threshold = 0.99 * u_max;
        let saturated = run
            .steps
            .iter()
            .filter(|s| s.action.iter().any(|u| u.abs() >= threshold))
            .count();
        let saturation_fraction = if run.steps.is_empty() {
            0.0
        } else {
            saturated as f64 / run.steps.len() as f64
        };
        rows.push(CompareRow {
            run: dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| dir.display().to_string()),
            final_mean_abs_td: last.mean_abs_td,
            actor_pc1_ratio: read_meta_value(&analysis_dir.join("pca_meta.txt"), "actor_pc1_ratio")?,
            final_steps: last.steps,
            saturation_fraction,
        });
    }
    Ok(CompareTable { rows })
}

/// Summary line printed by the CLI after each training episode.
pub fn episode_line(e: &EpisodeSummary) -> String {
    format!(
        "episode {:>4}  steps {:>6}  mean |TD| {:>12.6}  {}",
        e.episode,
        e.steps,
        e.mean_abs_td,
        e.cause.name()
    )
}

/// Maps library errors onto the CLI exit codes.
pub fn exit_code(err: &CoreError) -> i32 {
    match err {
        CoreError::Config { .. } | CoreError::InvalidArgument(_) => 2,
        CoreError::NumericOverflow { .. } | CoreError::ZeroVariance(_) => 3,
        CoreError::Io { .. } | CoreError::Corrupt { .. } => 4,
    }
}
