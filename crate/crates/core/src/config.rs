//! Experiment configuration: a flat, typed key-value text format with
//! block prefixes (`environment.`, `agent.`, `recorder.`, `analysis.`),
//! plus the four shipped variant presets and their desk-scale twins.
//!
//! Unknown keys are rejected with a nearest-key suggestion; all keys are
//! required. `to_text` emits a canonical serialization that parses back to
//! an identical configuration, which is what run directories echo.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::agent::VariantConfig;
use crate::dynamics::{CostWeights, InertiaMatrix, Quaternion, TerminationRule};
use crate::error::{CoreError, Result};

pub const FORMAT_VERSION: u64 = 1;

pub const PRESET_NAMES: [&str; 8] = [
    "variant1",
    "variant2",
    "variant3",
    "variant4",
    "variant1_desk",
    "variant2_desk",
    "variant3_desk",
    "variant4_desk",
];

/// Plant, cost, and termination settings.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentConfig {
    /// Row-major 3x3 inertia matrix, kg·m².
    pub inertia: [[f64; 3]; 3],
    pub dt: f64,
    pub steps_per_episode: u64,
    pub episodes: u32,
    /// Torque cap, N·m.
    pub u_max: f64,
    pub initial_axis: [f64; 3],
    pub initial_angle_deg: f64,
    pub k_att: f64,
    pub k_rate: f64,
    pub k_torque: f64,
    pub attitude_error_limit: f64,
    pub omega_norm_limit: f64,
    pub termination_penalty: f64,
}

impl EnvironmentConfig {
    pub fn inertia_matrix(&self) -> Result<InertiaMatrix<f64>> {
        InertiaMatrix::new(self.inertia)
    }

    pub fn initial_attitude(&self) -> Result<Quaternion<f64>> {
        Quaternion::from_axis_angle(
            &self.initial_axis,
            self.initial_angle_deg.to_radians(),
        )
    }

    pub fn cost_weights(&self) -> Result<CostWeights<f64>> {
        CostWeights::new(self.k_att, self.k_rate, self.k_torque)
    }

    pub fn termination_rule(&self) -> Result<TerminationRule<f64>> {
        TerminationRule::new(
            self.attitude_error_limit,
            self.omega_norm_limit,
            self.termination_penalty,
        )
    }
}

/// Instrumentation sampling settings.
#[derive(Clone, Debug, PartialEq)]
pub struct RecorderConfig {
    /// Actor weight sample period, environment steps.
    pub actor_sample_period: u64,
    /// Probe tuple period, environment steps.
    pub probe_period: u64,
    /// Hard cap on collected probe tuples.
    pub probe_cap: usize,
}

/// Landscape and series extraction settings.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    /// Grid nodes per axis (odd counts put a node at the plane origin).
    pub resolution: usize,
    pub range_scale: f64,
    /// Probe tuples used by the critic match loss.
    pub probe_count: usize,
    /// Probe states used by the actor surface loss.
    pub actor_probe_count: usize,
    /// Step-log stride of the state/TD map.
    pub state_sample_period: usize,
}

/// One fully validated experiment: environment, agent variant, recorder,
/// analysis, and the master seed.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub environment: EnvironmentConfig,
    pub agent: VariantConfig,
    pub hidden_layers: Vec<usize>,
    pub recorder: RecorderConfig,
    pub analysis: AnalysisConfig,
}

fn common_environment() -> EnvironmentConfig {
    EnvironmentConfig {
        inertia: [[1.0, 0.02, 0.02], [0.02, 0.8, 0.03], [0.02, 0.03, 0.9]],
        dt: 0.01,
        steps_per_episode: 5000,
        episodes: 100,
        u_max: 0.5,
        initial_axis: [1.0, -0.5, 0.2],
        initial_angle_deg: 20.0,
        k_att: 20.0,
        k_rate: 2.0,
        k_torque: 0.1,
        attitude_error_limit: 2.8,
        omega_norm_limit: 8.0,
        termination_penalty: 300.0,
    }
}

fn variant_agent(n: u32) -> VariantConfig {
    let mut v = VariantConfig {
        use_target_network: false,
        tau_target: 0.005,
        cost_scale: 1.0,
        use_huber: false,
        kappa_huber: 1.0,
        use_tps: false,
        sigma_tps: 0.05,
        gamma: 0.95,
        actor_lr: 1e-4,
        critic_lr: 1e-3,
        actor_update_period: 1,
        actor_freeze_steps: 0,
        noise_init: 0.02,
        noise_final: 0.005,
        noise_decay_steps: 50_000,
        l2_actor: 0.0,
        clip_norm: 1.0,
        u_max: 0.5,
    };
    if n >= 2 {
        v.use_target_network = true;
        v.noise_init = 0.05;
        v.noise_final = 0.02;
        v.actor_update_period = 10;
        v.actor_freeze_steps = 10_000;
        v.l2_actor = 0.1;
    }
    if n >= 3 {
        v.cost_scale = 10.0;
        v.use_huber = true;
        v.use_tps = n == 3;
    }
    v
}

impl ExperimentConfig {
    /// Shipped configurations: `variant1..variant4` at full scale and
    /// `variantN_desk` twins at 20 episodes x 1000 steps.
    pub fn preset(name: &str) -> Result<Self> {
        let (base, desk) = match name.strip_suffix("_desk") {
            Some(base) => (base, true),
            None => (name, false),
        };
        let n = match base {
            "variant1" => 1,
            "variant2" => 2,
            "variant3" => 3,
            "variant4" => 4,
            _ => {
                return Err(CoreError::Config {
                    key: "preset".into(),
                    detail: format!(
                        "unknown preset `{name}`; valid presets: {}",
                        PRESET_NAMES.join(", ")
                    ),
                })
            }
        };
        let mut environment = common_environment();
        if desk {
            environment.episodes = 20;
            environment.steps_per_episode = 1000;
        }
        let cfg = ExperimentConfig {
            seed: 42,
            environment,
            agent: variant_agent(n),
            hidden_layers: vec![64, 64],
            recorder: RecorderConfig {
                actor_sample_period: 100,
                probe_period: 10,
                probe_cap: 50_000,
            },
            analysis: AnalysisConfig {
                resolution: 41,
                range_scale: 1.2,
                probe_count: 2048,
                actor_probe_count: 512,
                state_sample_period: 10,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text serialization; `from_text` is its exact inverse.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let e = &self.environment;
        let a = &self.agent;
        let _ = writeln!(s, "format_version = {FORMAT_VERSION}");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "environment.dt = {}", e.dt);
        let _ = writeln!(s, "environment.steps_per_episode = {}", e.steps_per_episode);
        let _ = writeln!(s, "environment.episodes = {}", e.episodes);
        let flat: Vec<String> = e
            .inertia
            .iter()
            .flatten()
            .map(|v| v.to_string())
            .collect();
        let _ = writeln!(s, "environment.inertia = {}", flat.join(" "));
        let _ = writeln!(s, "environment.u_max = {}", e.u_max);
        let _ = writeln!(
            s,
            "environment.initial_axis = {} {} {}",
            e.initial_axis[0], e.initial_axis[1], e.initial_axis[2]
        );
        let _ = writeln!(s, "environment.initial_angle_deg = {}", e.initial_angle_deg);
        let _ = writeln!(s, "environment.k_att = {}", e.k_att);
        let _ = writeln!(s, "environment.k_rate = {}", e.k_rate);
        let _ = writeln!(s, "environment.k_torque = {}", e.k_torque);
        let _ = writeln!(
            s,
            "environment.attitude_error_limit = {}",
            e.attitude_error_limit
        );
        let _ = writeln!(s, "environment.omega_norm_limit = {}", e.omega_norm_limit);
        let _ = writeln!(
            s,
            "environment.termination_penalty = {}",
            e.termination_penalty
        );
        let _ = writeln!(s, "agent.use_target_network = {}", a.use_target_network);
        let _ = writeln!(s, "agent.tau_target = {}", a.tau_target);
        let _ = writeln!(s, "agent.cost_scale = {}", a.cost_scale);
        let _ = writeln!(s, "agent.use_huber = {}", a.use_huber);
        let _ = writeln!(s, "agent.kappa_huber = {}", a.kappa_huber);
        let _ = writeln!(s, "agent.use_tps = {}", a.use_tps);
        let _ = writeln!(s, "agent.sigma_tps = {}", a.sigma_tps);
        let _ = writeln!(s, "agent.gamma = {}", a.gamma);
        let _ = writeln!(s, "agent.actor_lr = {}", a.actor_lr);
        let _ = writeln!(s, "agent.critic_lr = {}", a.critic_lr);
        let _ = writeln!(s, "agent.actor_update_period = {}", a.actor_update_period);
        let _ = writeln!(s, "agent.actor_freeze_steps = {}", a.actor_freeze_steps);
        let _ = writeln!(s, "agent.noise_init = {}", a.noise_init);
        let _ = writeln!(s, "agent.noise_final = {}", a.noise_final);
        let _ = writeln!(s, "agent.noise_decay_steps = {}", a.noise_decay_steps);
        let _ = writeln!(s, "agent.l2_actor = {}", a.l2_actor);
        let _ = writeln!(s, "agent.clip_norm = {}", a.clip_norm);
        let hidden: Vec<String> = self.hidden_layers.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "agent.hidden_layers = {}", hidden.join(" "));
        let r = &self.recorder;
        let _ = writeln!(s, "recorder.actor_sample_period = {}", r.actor_sample_period);
        let _ = writeln!(s, "recorder.probe_period = {}", r.probe_period);
        let _ = writeln!(s, "recorder.probe_cap = {}", r.probe_cap);
        let n = &self.analysis;
        let _ = writeln!(s, "analysis.resolution = {}", n.resolution);
        let _ = writeln!(s, "analysis.range_scale = {}", n.range_scale);
        let _ = writeln!(s, "analysis.probe_count = {}", n.probe_count);
        let _ = writeln!(s, "analysis.actor_probe_count = {}", n.actor_probe_count);
        let _ = writeln!(
            s,
            "analysis.state_sample_period = {}",
            n.state_sample_period
        );
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut map = Parser::parse_lines(text)?;
        let format_version = map.take_u64("format_version")?;
        if format_version != FORMAT_VERSION {
            return Err(CoreError::Config {
                key: "format_version".into(),
                detail: format!("unsupported version {format_version} (expected {FORMAT_VERSION})"),
            });
        }
        let seed = map.take_u64("seed")?;
        let inertia_flat = map.take_f64_list("environment.inertia", 9)?;
        let mut inertia = [[0.0; 3]; 3];
        for (i, v) in inertia_flat.into_iter().enumerate() {
            inertia[i / 3][i % 3] = v;
        }
        let axis = map.take_f64_list("environment.initial_axis", 3)?;
        let environment = EnvironmentConfig {
            inertia,
            dt: map.take_f64("environment.dt")?,
            steps_per_episode: map.take_u64("environment.steps_per_episode")?,
            episodes: map.take_u64("environment.episodes")? as u32,
            u_max: map.take_f64("environment.u_max")?,
            initial_axis: [axis[0], axis[1], axis[2]],
            initial_angle_deg: map.take_f64("environment.initial_angle_deg")?,
            k_att: map.take_f64("environment.k_att")?,
            k_rate: map.take_f64("environment.k_rate")?,
            k_torque: map.take_f64("environment.k_torque")?,
            attitude_error_limit: map.take_f64("environment.attitude_error_limit")?,
            omega_norm_limit: map.take_f64("environment.omega_norm_limit")?,
            termination_penalty: map.take_f64("environment.termination_penalty")?,
        };
        let agent = VariantConfig {
            use_target_network: map.take_bool("agent.use_target_network")?,
            tau_target: map.take_f64("agent.tau_target")?,
            cost_scale: map.take_f64("agent.cost_scale")?,
            use_huber: map.take_bool("agent.use_huber")?,
            kappa_huber: map.take_f64("agent.kappa_huber")?,
            use_tps: map.take_bool("agent.use_tps")?,
            sigma_tps: map.take_f64("agent.sigma_tps")?,
            gamma: map.take_f64("agent.gamma")?,
            actor_lr: map.take_f64("agent.actor_lr")?,
            critic_lr: map.take_f64("agent.critic_lr")?,
            actor_update_period: map.take_u64("agent.actor_update_period")?,
            actor_freeze_steps: map.take_u64("agent.actor_freeze_steps")?,
            noise_init: map.take_f64("agent.noise_init")?,
            noise_final: map.take_f64("agent.noise_final")?,
            noise_decay_steps: map.take_u64("agent.noise_decay_steps")?,
            l2_actor: map.take_f64("agent.l2_actor")?,
            clip_norm: map.take_f64("agent.clip_norm")?,
            u_max: environment.u_max,
        };
        let hidden_layers = map.take_usize_list("agent.hidden_layers")?;
        let recorder = RecorderConfig {
            actor_sample_period: map.take_u64("recorder.actor_sample_period")?,
            probe_period: map.take_u64("recorder.probe_period")?,
            probe_cap: map.take_u64("recorder.probe_cap")? as usize,
        };
        let analysis = AnalysisConfig {
            resolution: map.take_u64("analysis.resolution")? as usize,
            range_scale: map.take_f64("analysis.range_scale")?,
            probe_count: map.take_u64("analysis.probe_count")? as usize,
            actor_probe_count: map.take_u64("analysis.actor_probe_count")? as usize,
            state_sample_period: map.take_u64("analysis.state_sample_period")? as usize,
        };
        map.finish()?;
        let cfg = ExperimentConfig {
            seed,
            environment,
            agent,
            hidden_layers,
            recorder,
            analysis,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.environment;
        let a = &self.agent;
        let check = |ok: bool, key: &str, detail: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(CoreError::Config {
                    key: key.into(),
                    detail: detail.into(),
                })
            }
        };
        check(e.dt > 0.0, "environment.dt", "must be > 0")?;
        check(
            e.steps_per_episode >= 1,
            "environment.steps_per_episode",
            "must be >= 1",
        )?;
        check(e.episodes >= 1, "environment.episodes", "must be >= 1")?;
        check(e.u_max > 0.0, "environment.u_max", "must be > 0")?;
        e.inertia_matrix().map_err(|err| CoreError::Config {
            key: "environment.inertia".into(),
            detail: err.to_string(),
        })?;
        e.initial_attitude().map_err(|err| CoreError::Config {
            key: "environment.initial_axis".into(),
            detail: err.to_string(),
        })?;
        check(
            e.k_att >= 0.0 && e.k_rate >= 0.0 && e.k_torque >= 0.0,
            "environment.k_att",
            "cost weights must be >= 0",
        )?;
        check(
            e.attitude_error_limit > 0.0,
            "environment.attitude_error_limit",
            "must be > 0",
        )?;
        check(
            e.omega_norm_limit > 0.0,
            "environment.omega_norm_limit",
            "must be > 0",
        )?;
        check(
            (0.0..1.0).contains(&a.gamma),
            "agent.gamma",
            "must be in [0, 1)",
        )?;
        check(
            a.tau_target > 0.0 && a.tau_target <= 1.0,
            "agent.tau_target",
            "must be in (0, 1]",
        )?;
        check(a.cost_scale > 0.0, "agent.cost_scale", "must be > 0")?;
        check(a.kappa_huber > 0.0, "agent.kappa_huber", "must be > 0")?;
        check(a.sigma_tps >= 0.0, "agent.sigma_tps", "must be >= 0")?;
        check(
            a.actor_lr >= 0.0 && a.critic_lr >= 0.0,
            "agent.actor_lr",
            "learning rates must be >= 0",
        )?;
        check(
            a.actor_update_period >= 1,
            "agent.actor_update_period",
            "must be >= 1",
        )?;
        check(
            a.noise_init >= 0.0 && a.noise_final >= 0.0,
            "agent.noise_init",
            "noise levels must be >= 0",
        )?;
        check(
            a.noise_decay_steps >= 1,
            "agent.noise_decay_steps",
            "must be >= 1",
        )?;
        check(a.l2_actor >= 0.0, "agent.l2_actor", "must be >= 0")?;
        check(a.clip_norm > 0.0, "agent.clip_norm", "must be > 0")?;
        check(
            a.u_max == e.u_max,
            "agent",
            "agent torque cap must equal environment.u_max",
        )?;
        check(
            self.hidden_layers.iter().all(|&h| h >= 1),
            "agent.hidden_layers",
            "hidden widths must be >= 1",
        )?;
        let r = &self.recorder;
        check(
            r.actor_sample_period >= 1,
            "recorder.actor_sample_period",
            "must be >= 1",
        )?;
        check(r.probe_period >= 1, "recorder.probe_period", "must be >= 1")?;
        check(r.probe_cap >= 1, "recorder.probe_cap", "must be >= 1")?;
        let n = &self.analysis;
        check(n.resolution >= 2, "analysis.resolution", "must be >= 2")?;
        check(
            n.range_scale >= 1.0,
            "analysis.range_scale",
            "must be >= 1 so grids cover the snapshot trajectory",
        )?;
        check(n.probe_count >= 1, "analysis.probe_count", "must be >= 1")?;
        check(
            n.actor_probe_count >= 1,
            "analysis.actor_probe_count",
            "must be >= 1",
        )?;
        check(
            n.state_sample_period >= 1,
            "analysis.state_sample_period",
            "must be >= 1",
        )?;
        Ok(())
    }
}

const KNOWN_KEYS: [&str; 41] = [
    "format_version",
    "seed",
    "environment.dt",
    "environment.steps_per_episode",
    "environment.episodes",
    "environment.inertia",
    "environment.u_max",
    "environment.initial_axis",
    "environment.initial_angle_deg",
    "environment.k_att",
    "environment.k_rate",
    "environment.k_torque",
    "environment.attitude_error_limit",
    "environment.omega_norm_limit",
    "environment.termination_penalty",
    "agent.use_target_network",
    "agent.tau_target",
    "agent.cost_scale",
    "agent.use_huber",
    "agent.kappa_huber",
    "agent.use_tps",
    "agent.sigma_tps",
    "agent.gamma",
    "agent.actor_lr",
    "agent.critic_lr",
    "agent.actor_update_period",
    "agent.actor_freeze_steps",
    "agent.noise_init",
    "agent.noise_final",
    "agent.noise_decay_steps",
    "agent.l2_actor",
    "agent.clip_norm",
    "agent.hidden_layers",
    "recorder.actor_sample_period",
    "recorder.probe_period",
    "recorder.probe_cap",
    "analysis.resolution",
    "analysis.range_scale",
    "analysis.probe_count",
    "analysis.actor_probe_count",
    "analysis.state_sample_period",
];

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let cost = if ca == cb { 0 } else { 1 };
            cur[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn nearest_key(key: &str) -> &'static str {
    KNOWN_KEYS
        .iter()
        .min_by_key(|k| levenshtein(key, k))
        .unwrap()
}

struct Parser {
    entries: BTreeMap<String, String>,
}

impl Parser {
    fn parse_lines(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CoreError::Config {
                key: format!("line {}", lineno + 1),
                detail: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CoreError::Config {
                    key: key.clone(),
                    detail: format!("unknown key (did you mean `{}`?)", nearest_key(&key)),
                });
            }
            if entries.insert(key.clone(), value).is_some() {
                return Err(CoreError::Config {
                    key,
                    detail: "duplicate key".into(),
                });
            }
        }
        Ok(Parser { entries })
    }

    fn take(&mut self, key: &str) -> Result<String> {
        self.entries.remove(key).ok_or_else(|| CoreError::Config {
            key: key.into(),
            detail: "missing key".into(),
        })
    }

    fn take_f64(&mut self, key: &str) -> Result<f64> {
        let v = self.take(key)?;
        v.parse().map_err(|_| CoreError::Config {
            key: key.into(),
            detail: format!("`{v}` is not a number"),
        })
    }

    fn take_u64(&mut self, key: &str) -> Result<u64> {
        let v = self.take(key)?;
        v.parse().map_err(|_| CoreError::Config {
            key: key.into(),
            detail: format!("`{v}` is not a nonnegative integer"),
        })
    }

    fn take_bool(&mut self, key: &str) -> Result<bool> {
        let v = self.take(key)?;
        match v.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(CoreError::Config {
                key: key.into(),
                detail: format!("`{v}` is not `true` or `false`"),
            }),
        }
    }

    fn take_f64_list(&mut self, key: &str, n: usize) -> Result<Vec<f64>> {
        let v = self.take(key)?;
        let parts: Result<Vec<f64>> = v
            .split_whitespace()
            .map(|p| {
                p.parse().map_err(|_| CoreError::Config {
                    key: key.into(),
                    detail: format!("`{p}` is not a number"),
                })
            })
            .collect();
        let parts = parts?;
        if parts.len() != n {
            return Err(CoreError::Config {
                key: key.into(),
                detail: format!("expected {n} values, found {}", parts.len()),
            });
        }
        Ok(parts)
    }

    fn take_usize_list(&mut self, key: &str) -> Result<Vec<usize>> {
        let v = self.take(key)?;
        v.split_whitespace()
            .map(|p| {
                p.parse().map_err(|_| CoreError::Config {
                    key: key.into(),
                    detail: format!("`{p}` is not a nonnegative integer"),
                })
            })
            .collect()
    }

    fn finish(self) -> Result<()> {
        debug_assert!(self.entries.is_empty(), "every known key was consumed");
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_variant_table() {
        // (target network, cost scaling, huber, tps) per variant row
        let table = [
            ("variant1", false, false, false, false),
            ("variant2", true, false, false, false),
            ("variant3", true, true, true, true),
            ("variant4", true, true, true, false),
        ];
        for (name, target, scaling, huber, tps) in table {
            let cfg = ExperimentConfig::preset(name).unwrap();
            assert_eq!(cfg.agent.use_target_network, target, "{name}");
            assert_eq!(cfg.agent.cost_scale > 1.0, scaling, "{name}");
            assert_eq!(cfg.agent.use_huber, huber, "{name}");
            assert_eq!(cfg.agent.use_tps, tps, "{name}");
        }
    }

    #[test]
    fn preset_common_values() {
        let cfg = ExperimentConfig::preset("variant1").unwrap();
        assert_eq!(cfg.environment.dt, 0.01);
        assert_eq!(cfg.environment.steps_per_episode, 5000);
        assert_eq!(cfg.environment.episodes, 100);
        assert_eq!(cfg.environment.u_max, 0.5);
        assert_eq!(cfg.agent.gamma, 0.95);
        assert_eq!(cfg.agent.actor_lr, 1e-4);
        assert_eq!(cfg.agent.critic_lr, 1e-3);
        assert_eq!(cfg.agent.clip_norm, 1.0);
        assert_eq!(cfg.hidden_layers, vec![64, 64]);
        assert_eq!(cfg.environment.inertia[0], [1.0, 0.02, 0.02]);
        assert_eq!(cfg.environment.inertia[1], [0.02, 0.8, 0.03]);
        assert_eq!(cfg.environment.inertia[2], [0.02, 0.03, 0.9]);
        // variant 1 keeps the common-setup noise schedule
        assert_eq!(cfg.agent.noise_init, 0.02);
        assert_eq!(cfg.agent.noise_final, 0.005);
        assert_eq!(cfg.agent.noise_decay_steps, 50_000);
    }

    #[test]
    fn variant_specific_values() {
        let v2 = ExperimentConfig::preset("variant2").unwrap();
        assert_eq!(v2.agent.tau_target, 0.005);
        assert_eq!(v2.agent.actor_freeze_steps, 10_000);
        assert_eq!(v2.agent.actor_update_period, 10);
        assert_eq!(v2.agent.l2_actor, 0.1);
        assert_eq!(v2.agent.noise_init, 0.05);
        assert_eq!(v2.agent.noise_final, 0.02);

        let v3 = ExperimentConfig::preset("variant3").unwrap();
        assert_eq!(v3.agent.cost_scale, 10.0);
        assert_eq!(v3.agent.sigma_tps, 0.05);

        let desk = ExperimentConfig::preset("variant3_desk").unwrap();
        assert_eq!(desk.environment.episodes, 20);
        assert_eq!(desk.environment.steps_per_episode, 1000);
        // everything else matches the full-scale preset
        assert_eq!(desk.agent, v3.agent);
        assert_eq!(desk.analysis, v3.analysis);
    }

    #[test]
    fn text_roundtrip() {
        for name in PRESET_NAMES {
            let cfg = ExperimentConfig::preset(name).unwrap();
            let text = cfg.to_text();
            let parsed = ExperimentConfig::from_text(&text).unwrap();
            assert_eq!(parsed, cfg);
            assert_eq!(parsed.to_text(), text);
        }
    }

    #[test]
    fn unknown_key_suggests_nearest() {
        let mut text = ExperimentConfig::preset("variant1").unwrap().to_text();
        text = text.replace("agent.gamma =", "agent.gama =");
        let err = ExperimentConfig::from_text(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("agent.gama"), "{msg}");
        assert!(msg.contains("agent.gamma"), "{msg}");
    }

    #[test]
    fn missing_key_named() {
        let cfg = ExperimentConfig::preset("variant1").unwrap();
        let text: String = cfg
            .to_text()
            .lines()
            .filter(|l| !l.starts_with("agent.tau_target"))
            .map(|l| format!("{l}\n"))
            .collect();
        let err = ExperimentConfig::from_text(&text).unwrap_err();
        assert!(err.to_string().contains("agent.tau_target"));
    }

    #[test]
    fn out_of_range_value_rejected() {
        let mut cfg = ExperimentConfig::preset("variant1").unwrap();
        cfg.agent.gamma = 1.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("agent.gamma"));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = ExperimentConfig::preset("variant2_desk").unwrap();
        let text = format!("# header comment\n\n{}\n# trailing\n", cfg.to_text());
        assert_eq!(ExperimentConfig::from_text(&text).unwrap(), cfg);
    }
}
