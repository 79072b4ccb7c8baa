//! Training instrumentation and the run-directory persistence format.
//!
//! A run directory contains:
//!
//! ```text
//! config                      echoed experiment configuration (key = value)
//! steps.csv                   per-step log
//! episodes.csv                per-episode summaries
//! probes.csv                  recorded (state, action, TD target) tuples
//! weights/<net>_<episode>.bin flat weight vector, little-endian float64
//! actor_samples.bin           periodic actor samples (header + records)
//! ```
//!
//! `actor_samples.bin` layout: `count: u64`, `dim: u64`, then per sample
//! `step: u64`, `td: f64`, and `dim` float64 weights, all little-endian.
//! CSV floats use the shortest round-trip decimal form, so every persisted
//! value reloads bit-exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::error::{CoreError, Result};
use crate::{ActionVec, StateVec};

pub const STEPS_HEADER: &str =
    "step,episode,time,q0,q1,q2,q3,w1,w2,w3,u1,u2,u3,cost,td,terminal";
pub const EPISODES_HEADER: &str = "episode,steps,mean_abs_td,terminal_cause";
pub const PROBES_HEADER: &str = "q0,q1,q2,q3,w1,w2,w3,u1,u2,u3,y";

/// One environment step as the agent saw it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepLog {
    pub step: u64,
    pub episode: u32,
    /// Seconds since the start of the episode.
    pub time: f64,
    pub state: StateVec,
    pub action: ActionVec,
    /// Scaled cost used in training.
    pub cost: f64,
    /// Critic residual before the update.
    pub td: f64,
    pub terminal: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NetId {
    Actor,
    Critic,
}

impl NetId {
    pub fn name(&self) -> &'static str {
        match self {
            NetId::Actor => "actor",
            NetId::Critic => "critic",
        }
    }
}

/// End-of-episode flat weight vector for one network.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSnapshot {
    pub episode: u32,
    pub net: NetId,
    pub weights: Vec<f64>,
}

/// A (state, action, TD target) triple frozen as computed during training.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeTuple {
    pub state: StateVec,
    pub action: ActionVec,
    pub td_target: f64,
}

/// Periodic actor weight sample with the TD residual at that step.
#[derive(Clone, Debug, PartialEq)]
pub struct ActorSample {
    pub step: u64,
    pub td: f64,
    pub weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminalCause {
    Completed,
    AttitudeLimit,
    RateLimit,
    NumericAbort,
}

impl TerminalCause {
    pub fn name(&self) -> &'static str {
        match self {
            TerminalCause::Completed => "completed",
            TerminalCause::AttitudeLimit => "attitude_limit",
            TerminalCause::RateLimit => "rate_limit",
            TerminalCause::NumericAbort => "numeric_abort",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        match s {
            "completed" => Some(TerminalCause::Completed),
            "attitude_limit" => Some(TerminalCause::AttitudeLimit),
            "rate_limit" => Some(TerminalCause::RateLimit),
            "numeric_abort" => Some(TerminalCause::NumericAbort),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeSummary {
    pub episode: u32,
    pub steps: u64,
    pub mean_abs_td: f64,
    pub cause: TerminalCause,
}

/// Everything one training run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub steps: Vec<StepLog>,
    pub episodes: Vec<EpisodeSummary>,
    pub snapshots: Vec<WeightSnapshot>,
    pub probes: Vec<ProbeTuple>,
    pub actor_samples: Vec<ActorSample>,
}

impl RunRecord {
    pub fn snapshots_of(&self, net: NetId) -> Vec<&WeightSnapshot> {
        self.snapshots.iter().filter(|s| s.net == net).collect()
    }
}

/// Single-writer accumulator used by the training loop.
pub struct RunRecorder {
    record: RunRecord,
    episode_start: usize,
    next_episode: u32,
    last_step: Option<u64>,
}

impl RunRecorder {
    pub fn new(config: ExperimentConfig) -> Self {
        RunRecorder {
            record: RunRecord {
                config,
                steps: Vec::new(),
                episodes: Vec::new(),
                snapshots: Vec::new(),
                probes: Vec::new(),
                actor_samples: Vec::new(),
            },
            episode_start: 0,
            next_episode: 0,
            last_step: None,
        }
    }

    pub fn record_step(&mut self, log: StepLog) -> Result<()> {
        if let Some(last) = self.last_step {
            if log.step <= last {
                return Err(CoreError::invalid(format!(
                    "step {} recorded after step {last}",
                    log.step
                )));
            }
        }
        self.last_step = Some(log.step);
        self.record.steps.push(log);
        Ok(())
    }

    pub fn record_probe(&mut self, probe: ProbeTuple) {
        self.record.probes.push(probe);
    }

    pub fn record_actor_sample(&mut self, sample: ActorSample) {
        self.record.actor_samples.push(sample);
    }

    pub fn snapshot_weights(&mut self, snapshot: WeightSnapshot) {
        self.record.snapshots.push(snapshot);
    }

    pub fn probe_count(&self) -> usize {
        self.record.probes.len()
    }

    /// Closes the current episode: computes its summary from the logged
    /// steps and stamps the terminal cause.
    pub fn end_episode(&mut self, cause: TerminalCause) {
        let slice = &self.record.steps[self.episode_start..];
        let steps = slice.len() as u64;
        let mean_abs_td = if slice.is_empty() {
            0.0
        } else {
            slice.iter().map(|s| s.td.abs()).sum::<f64>() / steps as f64
        };
        self.record.episodes.push(EpisodeSummary {
            episode: self.next_episode,
            steps,
            mean_abs_td,
            cause,
        });
        self.episode_start = self.record.steps.len();
        self.next_episode += 1;
    }

    pub fn current_episode(&self) -> u32 {
        self.next_episode
    }

    pub fn into_record(self) -> RunRecord {
        self.record
    }
}

/// Seeded uniform subset without replacement, in stable (original) order.
pub fn subsample_probes(record: &RunRecord, n: usize, seed: u64) -> Result<Vec<ProbeTuple>> {
    let total = record.probes.len();
    if n > total {
        return Err(CoreError::invalid(format!(
            "cannot subsample {n} probes from {total}"
        )));
    }
    let mut indices: Vec<usize> = (0..total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n {
        let j = i + rng.gen_range(0..total - i);
        indices.swap(i, j);
    }
    let mut chosen = indices[..n].to_vec();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| record.probes[i]).collect())
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CoreError::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))
}

fn weights_to_bytes(weights: &[f64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(weights.len() * 8);
    for w in weights {
        bytes.extend_from_slice(&w.to_le_bytes());
    }
    bytes
}

fn bytes_to_weights(path: &Path, bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(CoreError::corrupt(path, "length not a multiple of 8"));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Persist a run under `dir`, creating it if needed.
pub fn save_run(record: &RunRecord, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CoreError::io(dir, e))?;
    write_file(&dir.join("config"), record.config.to_text().as_bytes())?;

    let mut steps = String::with_capacity(record.steps.len() * 96 + 64);
    steps.push_str(STEPS_HEADER);
    steps.push('\n');
    for s in &record.steps {
        let _ = writeln!(
            steps,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.step,
            s.episode,
            s.time,
            s.state[0],
            s.state[1],
            s.state[2],
            s.state[3],
            s.state[4],
            s.state[5],
            s.state[6],
            s.action[0],
            s.action[1],
            s.action[2],
            s.cost,
            s.td,
            s.terminal as u8
        );
    }
    write_file(&dir.join("steps.csv"), steps.as_bytes())?;

    let mut episodes = String::new();
    episodes.push_str(EPISODES_HEADER);
    episodes.push('\n');
    for e in &record.episodes {
        let _ = writeln!(
            episodes,
            "{},{},{},{}",
            e.episode,
            e.steps,
            e.mean_abs_td,
            e.cause.name()
        );
    }
    write_file(&dir.join("episodes.csv"), episodes.as_bytes())?;

    let mut probes = String::new();
    probes.push_str(PROBES_HEADER);
    probes.push('\n');
    for p in &record.probes {
        let s = &p.state;
        let a = &p.action;
        let _ = writeln!(
            probes,
            "{},{},{},{},{},{},{},{},{},{},{}",
            s[0], s[1], s[2], s[3], s[4], s[5], s[6], a[0], a[1], a[2], p.td_target
        );
    }
    write_file(&dir.join("probes.csv"), probes.as_bytes())?;

    let weights_dir = dir.join("weights");
    std::fs::create_dir_all(&weights_dir).map_err(|e| CoreError::io(&weights_dir, e))?;
    for snap in &record.snapshots {
        let path = weights_dir.join(format!("{}_{}.bin", snap.net.name(), snap.episode));
        write_file(&path, &weights_to_bytes(&snap.weights))?;
    }

    let dim = record
        .actor_samples
        .first()
        .map(|s| s.weights.len())
        .unwrap_or(0);
    let mut samples = Vec::with_capacity(16 + record.actor_samples.len() * (16 + dim * 8));
    samples.extend_from_slice(&(record.actor_samples.len() as u64).to_le_bytes());
    samples.extend_from_slice(&(dim as u64).to_le_bytes());
    for s in &record.actor_samples {
        samples.extend_from_slice(&s.step.to_le_bytes());
        samples.extend_from_slice(&s.td.to_le_bytes());
        samples.extend_from_slice(&weights_to_bytes(&s.weights));
    }
    write_file(&dir.join("actor_samples.bin"), &samples)?;
    Ok(())
}

fn parse_csv<T>(
    path: &Path,
    header: &str,
    mut parse_row: impl FnMut(&[&str]) -> Option<T>,
) -> Result<Vec<T>> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == header => {}
        _ => return Err(CoreError::corrupt(path, format!("expected header `{header}`"))),
    }
    let ncols = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != ncols {
            return Err(CoreError::corrupt(
                path,
                format!("row {}: expected {ncols} fields, found {}", i + 2, fields.len()),
            ));
        }
        match parse_row(&fields) {
            Some(row) => rows.push(row),
            None => {
                return Err(CoreError::corrupt(path, format!("row {}: unparsable value", i + 2)))
            }
        }
    }
    Ok(rows)
}

/// Exact inverse of [`save_run`].
pub fn load_run(dir: &Path) -> Result<RunRecord> {
    let config = ExperimentConfig::from_text(&read_text(&dir.join("config"))?)?;

    let steps = parse_csv(&dir.join("steps.csv"), STEPS_HEADER, |f| {
        let g = |i: usize| f[i].parse::<f64>().ok();
        Some(StepLog {
            step: f[0].parse().ok()?,
            episode: f[1].parse().ok()?,
            time: g(2)?,
            state: [g(3)?, g(4)?, g(5)?, g(6)?, g(7)?, g(8)?, g(9)?],
            action: [g(10)?, g(11)?, g(12)?],
            cost: g(13)?,
            td: g(14)?,
            terminal: match f[15] {
                "0" => false,
                "1" => true,
                _ => return None,
            },
        })
    })?;

    let episodes = parse_csv(&dir.join("episodes.csv"), EPISODES_HEADER, |f| {
        Some(EpisodeSummary {
            episode: f[0].parse().ok()?,
            steps: f[1].parse().ok()?,
            mean_abs_td: f[2].parse().ok()?,
            cause: TerminalCause::from_name(f[3])?,
        })
    })?;

    let probes = parse_csv(&dir.join("probes.csv"), PROBES_HEADER, |f| {
        let g = |i: usize| f[i].parse::<f64>().ok();
        Some(ProbeTuple {
            state: [g(0)?, g(1)?, g(2)?, g(3)?, g(4)?, g(5)?, g(6)?],
            action: [g(7)?, g(8)?, g(9)?],
            td_target: g(10)?,
        })
    })?;

    let weights_dir = dir.join("weights");
    let mut snapshots = Vec::new();
    let entries = std::fs::read_dir(&weights_dir).map_err(|e| CoreError::io(&weights_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| CoreError::io(&weights_dir, e))?;
        let path = entry.path();
        let name = entry.file_name();
        let name = name.to_string_lossy();
        let stem = match name.strip_suffix(".bin") {
            Some(s) => s,
            None => return Err(CoreError::corrupt(&path, "unexpected file in weights/")),
        };
        let (net, episode) = match stem.split_once('_') {
            Some(("actor", e)) => (NetId::Actor, e),
            Some(("critic", e)) => (NetId::Critic, e),
            _ => return Err(CoreError::corrupt(&path, "unexpected file in weights/")),
        };
        let episode: u32 = episode
            .parse()
            .map_err(|_| CoreError::corrupt(&path, "bad episode index in filename"))?;
        let bytes = std::fs::read(&path).map_err(|e| CoreError::io(&path, e))?;
        snapshots.push(WeightSnapshot {
            episode,
            net,
            weights: bytes_to_weights(&path, &bytes)?,
        });
    }
    snapshots.sort_by_key(|s| (s.episode, s.net != NetId::Critic));

    let samples_path = dir.join("actor_samples.bin");
    let bytes = std::fs::read(&samples_path).map_err(|e| CoreError::io(&samples_path, e))?;
    if bytes.len() < 16 {
        return Err(CoreError::corrupt(&samples_path, "truncated header"));
    }
    let count = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    let dim = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let rec_len = 16 + dim * 8;
    if bytes.len() != 16 + count * rec_len {
        return Err(CoreError::corrupt(
            &samples_path,
            format!("expected {} bytes, found {}", 16 + count * rec_len, bytes.len()),
        ));
    }
    let mut actor_samples = Vec::with_capacity(count);
    for i in 0..count {
        let off = 16 + i * rec_len;
        let step = u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let td = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
        let weights = bytes_to_weights(&samples_path, &bytes[off + 16..off + rec_len])?;
        actor_samples.push(ActorSample { step, td, weights });
    }

    Ok(RunRecord {
        config,
        steps,
        episodes,
        snapshots,
        probes,
        actor_samples,
    })
}

/// Path of one snapshot file inside a run directory.
pub fn snapshot_path(dir: &Path, net: NetId, episode: u32) -> PathBuf {
    dir.join("weights").join(format!("{}_{episode}.bin", net.name()))
}
