//! Online actor-critic agent for the attitude plant.
//!
//! The critic approximates the discounted cost-to-go J(x, u) from the
//! 10-dim (state, action) input; the actor maps the 7-dim state to a
//! torque through a tanh head scaled by the torque cap. Updates are
//! per-transition, no replay. The variant flags switch the four shipped
//! configurations: target critic with Polyak averaging, numeric cost
//! scaling, Huber critic loss, and target-policy smoothing.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::ExperimentConfig;
use crate::dynamics::{self, BodyState, Termination};
use crate::error::{CoreError, Result};
use crate::nn::{self, Activation, MlpLayout};
use crate::recorder::{
    ActorSample, ProbeTuple, RunRecorder, StepLog, TerminalCause, WeightSnapshot,
};
use crate::{ActionVec, Mlp, StateVec};

pub const STATE_DIM: usize = 7;
pub const ACTION_DIM: usize = 3;

/// Switches and scalars for one agent variant.
#[derive(Clone, Debug, PartialEq)]
pub struct VariantConfig {
    pub use_target_network: bool,
    pub tau_target: f64,
    /// Costs are divided by this factor before training.
    pub cost_scale: f64,
    pub use_huber: bool,
    pub kappa_huber: f64,
    pub use_tps: bool,
    /// TPS noise level as a fraction of `u_max`.
    pub sigma_tps: f64,
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub actor_update_period: u64,
    pub actor_freeze_steps: u64,
    /// Exploration noise, absolute torque units.
    pub noise_init: f64,
    pub noise_final: f64,
    pub noise_decay_steps: u64,
    pub l2_actor: f64,
    pub clip_norm: f64,
    /// Torque cap, N·m.
    pub u_max: f64,
}

/// One environment transition as consumed by the updates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub state: StateVec,
    pub action: ActionVec,
    pub scaled_cost: f64,
    pub next_state: StateVec,
    pub terminal: bool,
}

/// Actor, critic, and (when enabled) the slow target critic.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentNets {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_critic: Option<Mlp>,
}

impl AgentNets {
    pub fn actor_layout(hidden: &[usize]) -> Result<MlpLayout> {
        MlpLayout::new(STATE_DIM, hidden.to_vec(), ACTION_DIM, Activation::Tanh)
    }

    pub fn critic_layout(hidden: &[usize]) -> Result<MlpLayout> {
        MlpLayout::new(
            STATE_DIM + ACTION_DIM,
            hidden.to_vec(),
            1,
            Activation::Identity,
        )
    }

    /// Fresh seeded networks; the target critic starts as a copy of the
    /// online critic and is allocated only when the variant uses it.
    pub fn new(cfg: &VariantConfig, hidden: &[usize], actor_seed: u64, critic_seed: u64) -> Result<Self> {
        let actor = Mlp::init(Self::actor_layout(hidden)?, actor_seed);
        let critic = Mlp::init(Self::critic_layout(hidden)?, critic_seed);
        let target_critic = cfg.use_target_network.then(|| critic.clone());
        Ok(AgentNets {
            actor,
            critic,
            target_critic,
        })
    }
}

/// Exploration noise level at `step`: linear from `noise_init` to
/// `noise_final` over `noise_decay_steps`, then held.
pub fn noise_sigma(cfg: &VariantConfig, step: u64) -> f64 {
    if step >= cfg.noise_decay_steps {
        cfg.noise_final
    } else {
        let t = step as f64 / cfg.noise_decay_steps as f64;
        cfg.noise_init + (cfg.noise_final - cfg.noise_init) * t
    }
}

fn clip(v: f64, bound: f64) -> f64 {
    v.clamp(-bound, bound)
}

/// Deterministic policy output `u_max · actor(state)` (the actor's output
/// activation is tanh, so this is already within the cap).
pub fn policy_action(actor: &Mlp, state: &StateVec, u_max: f64) -> ActionVec {
    let (out, _) = nn::forward(actor, state).expect("actor layout matches state dim");
    [u_max * out[0], u_max * out[1], u_max * out[2]]
}

/// Behavior action: policy output plus decaying Gaussian exploration
/// noise, clipped to the torque cap.
pub fn select_action(
    actor: &Mlp,
    state: &StateVec,
    step: u64,
    cfg: &VariantConfig,
    rng: &mut ChaCha8Rng,
) -> ActionVec {
    let mut u = policy_action(actor, state, cfg.u_max);
    let sigma = noise_sigma(cfg, step);
    for ui in u.iter_mut() {
        let n: f64 = rng.sample(StandardNormal);
        *ui = clip(*ui + sigma * n, cfg.u_max);
    }
    u
}

/// `c' = c / cost_scale`.
pub fn scale_cost(cost: f64, cfg: &VariantConfig) -> f64 {
    cost / cfg.cost_scale
}

fn critic_value(critic: &Mlp, state: &StateVec, action: &ActionVec) -> f64 {
    let mut input = [0.0; STATE_DIM + ACTION_DIM];
    input[..STATE_DIM].copy_from_slice(state);
    input[STATE_DIM..].copy_from_slice(action);
    let (out, _) = nn::forward(critic, &input).expect("critic layout matches input dim");
    out[0]
}

/// Regression target for the critic.
///
/// Non-terminal: `c' + γ Ĵ(x', ũ')` where `ũ'` is the policy's next action,
/// smoothed and clipped when TPS is on, evaluated on the target critic when
/// one exists. Terminal: `c' + penalty / cost_scale`.
pub fn td_target(
    tr: &Transition,
    nets: &AgentNets,
    cfg: &VariantConfig,
    penalty: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    if tr.terminal {
        return tr.scaled_cost + penalty / cfg.cost_scale;
    }
    let mut next_u = policy_action(&nets.actor, &tr.next_state, cfg.u_max);
    if cfg.use_tps {
        let sigma = cfg.sigma_tps * cfg.u_max;
        for ui in next_u.iter_mut() {
            let n: f64 = rng.sample(StandardNormal);
            *ui = clip(*ui + sigma * n, cfg.u_max);
        }
    }
    let bootstrap_critic = nets.target_critic.as_ref().unwrap_or(&nets.critic);
    tr.scaled_cost + cfg.gamma * critic_value(bootstrap_critic, &tr.next_state, &next_u)
}

/// Temporal-difference residual `(r + γ J_t) − J_prev`.
pub fn td_error(r: f64, j_t: f64, j_prev: f64, gamma: f64) -> f64 {
    (r + gamma * j_t) - j_prev
}

/// One critic gradient step against the fixed target `y`; returns the
/// pre-update residual `e = Ĵ(x, u) − y`, which is also the logged TD value.
pub fn critic_update(
    nets: &mut AgentNets,
    tr: &Transition,
    y: f64,
    cfg: &VariantConfig,
) -> Result<f64> {
    let mut input = [0.0; STATE_DIM + ACTION_DIM];
    input[..STATE_DIM].copy_from_slice(&tr.state);
    input[STATE_DIM..].copy_from_slice(&tr.action);
    let (out, cache) = nn::forward(&nets.critic, &input)?;
    let e = out[0] - y;
    let (loss, slope) = if cfg.use_huber {
        nn::huber(e, cfg.kappa_huber)
    } else {
        nn::mse(e)
    };
    if !loss.is_finite() {
        return Err(CoreError::overflow(
            "critic update",
            format!("loss became non-finite (prediction {}, target {y})", out[0]),
        ));
    }
    let (grad, _) = nn::backward(&nets.critic, &cache, &[slope])?;
    nets.critic = nn::sgd_step(&nets.critic, &grad, cfg.critic_lr, cfg.clip_norm, 0.0);
    Ok(e)
}

/// Delayed deterministic policy-gradient step through the frozen critic:
/// descends `Ĵ(x, π(x))` in the actor weights. A no-op while `step` is in
/// the freeze window or off the update period.
pub fn actor_update(nets: &mut AgentNets, state: &StateVec, step: u64, cfg: &VariantConfig) -> Result<()> {
    if step < cfg.actor_freeze_steps || step % cfg.actor_update_period != 0 {
        return Ok(());
    }
    let (head, actor_cache) = nn::forward(&nets.actor, state)?;
    let mut input = [0.0; STATE_DIM + ACTION_DIM];
    input[..STATE_DIM].copy_from_slice(state);
    for (i, h) in head.iter().enumerate() {
        input[STATE_DIM + i] = cfg.u_max * h;
    }
    let (_, critic_cache) = nn::forward(&nets.critic, &input)?;
    let (_, input_grad) = nn::backward(&nets.critic, &critic_cache, &[1.0])?;
    // dJ/du through the action slice, times du/d(head) = u_max
    let head_grad: Vec<f64> = input_grad[STATE_DIM..].iter().map(|g| g * cfg.u_max).collect();
    let (grad, _) = nn::backward(&nets.actor, &actor_cache, &head_grad)?;
    nets.actor = nn::sgd_step(&nets.actor, &grad, cfg.actor_lr, cfg.clip_norm, cfg.l2_actor);
    Ok(())
}

/// Polyak blend `w̄ ← (1 − τ) w̄ + τ w`.
pub fn polyak(target: &Mlp, online: &Mlp, tau: f64) -> Result<Mlp> {
    if target.layout != online.layout {
        return Err(CoreError::invalid("polyak requires congruent layouts"));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(CoreError::invalid("tau must be in (0, 1]"));
    }
    let weights = target
        .weights
        .iter()
        .zip(&online.weights)
        .map(|(&t, &o)| (1.0 - tau) * t + tau * o)
        .collect();
    Mlp::from_flat(target.layout.clone(), weights)
}

/// Full training run, routing all instrumentation through `recorder`.
/// Deterministic for a fixed configuration. On numeric failure the partial
/// run stays recorded and the error is returned.
pub fn train(cfg: &ExperimentConfig, recorder: &mut RunRecorder) -> Result<()> {
    let env = &cfg.environment;
    let inertia = env.inertia_matrix()?;
    let initial_attitude = env.initial_attitude()?;
    let weights = env.cost_weights()?;
    let rule = env.termination_rule()?;
    let vc = &cfg.agent;

    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.seed);
    let actor_seed = rng.gen::<u64>();
    let critic_seed = rng.gen::<u64>();
    let mut nets = AgentNets::new(vc, &cfg.hidden_layers, actor_seed, critic_seed)?;

    let mut global_step: u64 = 0;
    for episode in 0..env.episodes {
        let mut state = BodyState::new(initial_attitude, [0.0; 3]);
        let mut cause = TerminalCause::Completed;
        for step_in_ep in 0..env.steps_per_episode {
            let x = state.to_vec();
            let u = select_action(&nets.actor, &x, global_step, vc, &mut rng);
            let cost = dynamics::step_cost(&state, &u, &weights);
            let scaled = scale_cost(cost, vc);

            let next = match dynamics::step(&state, &u, &inertia, env.dt) {
                Ok(next) => next,
                Err(err) => {
                    recorder.end_episode(TerminalCause::NumericAbort);
                    snapshot(recorder, episode, &nets);
                    return Err(err);
                }
            };
            let termination = dynamics::check_termination(&next, &rule);
            let tr = Transition {
                state: x,
                action: u,
                scaled_cost: scaled,
                next_state: next.to_vec(),
                terminal: termination.is_terminal(),
            };

            let y = td_target(&tr, &nets, vc, rule.penalty, &mut rng);
            let e = match critic_update(&mut nets, &tr, y, vc) {
                Ok(e) => e,
                Err(err) => {
                    recorder.end_episode(TerminalCause::NumericAbort);
                    snapshot(recorder, episode, &nets);
                    return Err(err);
                }
            };
            if let Some(target) = nets.target_critic.take() {
                nets.target_critic = Some(polyak(&target, &nets.critic, vc.tau_target)?);
            }
            actor_update(&mut nets, &x, global_step, vc)?;

            recorder.record_step(StepLog {
                step: global_step,
                episode,
                time: step_in_ep as f64 * env.dt,
                state: x,
                action: u,
                cost: scaled,
                td: e,
                terminal: tr.terminal,
            })?;
            if global_step % cfg.recorder.probe_period == 0
                && recorder.probe_count() < cfg.recorder.probe_cap
            {
                recorder.record_probe(ProbeTuple {
                    state: x,
                    action: u,
                    td_target: y,
                });
            }
            if global_step % cfg.recorder.actor_sample_period == 0 {
                recorder.record_actor_sample(ActorSample {
                    step: global_step,
                    td: e,
                    weights: nets.actor.weights.clone(),
                });
            }

            global_step += 1;
            state = next;
            match termination {
                Termination::Running => {}
                Termination::AttitudeExceeded => {
                    cause = TerminalCause::AttitudeLimit;
                    break;
                }
                Termination::RateExceeded => {
                    cause = TerminalCause::RateLimit;
                    break;
                }
            }
        }
        snapshot(recorder, episode, &nets);
        recorder.end_episode(cause);
    }
    Ok(())
}

fn snapshot(recorder: &mut RunRecorder, episode: u32, nets: &AgentNets) {
    recorder.snapshot_weights(WeightSnapshot {
        episode,
        net: crate::recorder::NetId::Critic,
        weights: nets.critic.weights.clone(),
    });
    recorder.snapshot_weights(WeightSnapshot {
        episode,
        net: crate::recorder::NetId::Actor,
        weights: nets.actor.weights.clone(),
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::MlpParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn base_config() -> VariantConfig {
        ExperimentConfig::preset("variant1").unwrap().agent
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_actor_zero_noise_gives_zero_action() {
        let mut cfg = base_config();
        cfg.noise_init = 0.0;
        cfg.noise_final = 0.0;
        let actor = Mlp::zeros(AgentNets::actor_layout(&[8]).unwrap());
        let u = select_action(&actor, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0, &cfg, &mut rng(1));
        assert_eq!(u, [0.0; 3]);
    }

    #[test]
    fn noise_schedule_endpoints() {
        let cfg = base_config();
        assert_eq!(noise_sigma(&cfg, 0), 0.02);
        assert_eq!(noise_sigma(&cfg, 50_000), 0.005);
        assert_eq!(noise_sigma(&cfg, 120_000), 0.005);
        // monotone non-increasing on the way down
        let mut prev = f64::INFINITY;
        for step in (0..=60_000).step_by(500) {
            let s = noise_sigma(&cfg, step);
            assert!(s <= prev + 1e-15);
            prev = s;
        }
        assert_relative_eq!(noise_sigma(&cfg, 25_000), 0.0125, epsilon = 1e-15);
    }

    #[test]
    fn actions_respect_torque_cap() {
        let cfg = base_config();
        let actor = Mlp::init(AgentNets::actor_layout(&[16]).unwrap(), 3);
        let mut r = rng(5);
        for step in [0u64, 10, 1_000, 200_000] {
            let u = select_action(&actor, &[0.2, -0.4, 0.8, 0.1, 2.0, -1.0, 0.5], step, &cfg, &mut r);
            assert!(u.iter().all(|v| v.abs() <= 0.5));
        }
    }

    #[test]
    fn cost_scaling_examples() {
        let mut cfg = base_config();
        assert_eq!(scale_cost(3.25, &cfg), 3.25);
        cfg.cost_scale = 10.0;
        assert_eq!(scale_cost(5.0, &cfg), 0.5);
    }

    #[test]
    fn scaled_argmin_matches_unscaled_on_toy_problem() {
        // three candidate actions, fixed critic: the argmin of the TD
        // target must not move when costs and critic are scaled by 10
        let critic = Mlp::init(AgentNets::critic_layout(&[8]).unwrap(), 21);
        let state = [0.9, 0.1, 0.0, 0.0, 0.3, -0.2, 0.1];
        let candidates = [[0.1, 0.0, -0.4], [-0.3, 0.2, 0.0], [0.5, -0.5, 0.5]];
        let cost = 4.0;
        let gamma = 0.95;

        let argmin = |alpha: f64| -> usize {
            // scaling the last (linear) layer scales the critic output
            let mut scaled = critic.clone();
            let off = scaled.weights.len() - (scaled.layout.hidden_dims.last().unwrap() + 1);
            for w in scaled.weights[off..].iter_mut() {
                *w /= alpha;
            }
            let mut best = 0;
            let mut best_y = f64::INFINITY;
            for (i, u) in candidates.iter().enumerate() {
                let y = cost / alpha + gamma * critic_value(&scaled, &state, u);
                if y < best_y {
                    best_y = y;
                    best = i;
                }
            }
            best
        };
        assert_eq!(argmin(1.0), argmin(10.0));
    }

    #[test]
    fn td_target_gamma_zero_is_cost() {
        let mut cfg = base_config();
        cfg.gamma = 0.0;
        let nets = AgentNets::new(&cfg, &[8], 1, 2).unwrap();
        let tr = Transition {
            state: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            action: [0.1; 3],
            scaled_cost: 2.5,
            next_state: [0.9, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0],
            terminal: false,
        };
        assert_eq!(td_target(&tr, &nets, &cfg, 300.0, &mut rng(0)), 2.5);
    }

    #[test]
    fn td_target_terminal_penalty_scaled() {
        let mut cfg = base_config();
        cfg.cost_scale = 10.0;
        let nets = AgentNets::new(&cfg, &[8], 1, 2).unwrap();
        let tr = Transition {
            state: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            action: [0.0; 3],
            scaled_cost: 0.5, // raw cost 5 under scale 10
            next_state: [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            terminal: true,
        };
        assert_eq!(td_target(&tr, &nets, &cfg, 300.0, &mut rng(0)), 30.5);
    }

    #[test]
    fn td_target_reads_online_critic_without_target_net() {
        let cfg = base_config();
        assert!(!cfg.use_target_network);
        let mut nets = AgentNets::new(&cfg, &[8], 3, 4).unwrap();
        assert!(nets.target_critic.is_none());
        let tr = Transition {
            state: [0.8, 0.2, 0.0, 0.0, 0.3, 0.0, 0.0],
            action: [0.2, -0.2, 0.0],
            scaled_cost: 1.0,
            next_state: [0.7, 0.3, 0.0, 0.0, 0.4, 0.0, 0.0],
            terminal: false,
        };
        let before = td_target(&tr, &nets, &cfg, 300.0, &mut rng(0));
        // perturbing the online critic must move the bootstrap
        nets.critic.weights[0] += 0.5;
        let after = td_target(&tr, &nets, &cfg, 300.0, &mut rng(0));
        assert_ne!(before, after);
    }

    #[test]
    fn probes_are_recorded_transitions() {
        let mut cfg = ExperimentConfig::preset("variant1_desk").unwrap();
        cfg.environment.episodes = 2;
        cfg.environment.steps_per_episode = 40;
        cfg.recorder.probe_period = 7;
        let mut rec = RunRecorder::new(cfg.clone());
        train(&cfg, &mut rec).unwrap();
        let record = rec.into_record();
        assert!(!record.probes.is_empty());
        for (i, probe) in record.probes.iter().enumerate() {
            let log = &record.steps[i * cfg.recorder.probe_period as usize];
            assert_eq!(probe.state, log.state);
            assert_eq!(probe.action, log.action);
            assert!(probe.td_target.is_finite());
        }
    }

    #[test]
    fn td_target_deterministic_without_tps() {
        let cfg = base_config();
        assert!(!cfg.use_tps);
        let nets = AgentNets::new(&cfg, &[8], 3, 4).unwrap();
        let tr = Transition {
            state: [0.8, 0.2, 0.0, 0.0, 0.3, 0.0, 0.0],
            action: [0.2, -0.2, 0.0],
            scaled_cost: 1.0,
            next_state: [0.7, 0.3, 0.0, 0.0, 0.4, 0.0, 0.0],
            terminal: false,
        };
        let a = td_target(&tr, &nets, &cfg, 300.0, &mut rng(1));
        let b = td_target(&tr, &nets, &cfg, 300.0, &mut rng(999));
        assert_eq!(a, b);
    }

    #[test]
    fn td_error_examples() {
        assert_eq!(td_error(0.0, 0.0, 0.0, 0.95), 0.0);
        assert_eq!(td_error(1.5, 7.0, 0.25, 0.0), 1.25);
        assert_relative_eq!(td_error(1.0, 2.0, 0.5, 0.95), 2.4, epsilon = 1e-15);
    }

    #[test]
    fn critic_update_no_op_when_exact() {
        let cfg = base_config();
        let mut nets = AgentNets::new(&cfg, &[8], 5, 6).unwrap();
        let tr = Transition {
            state: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            action: [0.0; 3],
            scaled_cost: 0.0,
            next_state: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            terminal: false,
        };
        let before = nets.critic.clone();
        let y = critic_value(&nets.critic, &tr.state, &tr.action);
        let e = critic_update(&mut nets, &tr, y, &cfg).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(nets.critic, before);
    }

    #[test]
    fn critic_update_reduces_residual() {
        let cfg = base_config();
        let mut nets = AgentNets::new(&cfg, &[16], 8, 9).unwrap();
        let tr = Transition {
            state: [0.9, 0.3, -0.1, 0.0, 0.5, -0.5, 0.2],
            action: [0.3, -0.3, 0.1],
            scaled_cost: 1.0,
            next_state: [0.9, 0.3, -0.1, 0.0, 0.5, -0.5, 0.2],
            terminal: false,
        };
        let y = 2.0;
        let before = critic_value(&nets.critic, &tr.state, &tr.action) - y;
        let logged = critic_update(&mut nets, &tr, y, &cfg).unwrap();
        assert_eq!(logged, before);
        let after = critic_value(&nets.critic, &tr.state, &tr.action) - y;
        assert!(after.abs() < before.abs());
    }

    #[test]
    fn huber_gradient_saturates_for_large_residuals() {
        let mut cfg = base_config();
        cfg.use_huber = true;
        cfg.kappa_huber = 1.0;
        let nets0 = AgentNets::new(&cfg, &[8], 5, 6).unwrap();
        let tr = Transition {
            state: [0.8, 0.0, 0.0, 0.0, 0.1, 0.0, 0.0],
            action: [0.1, 0.1, 0.1],
            scaled_cost: 0.0,
            next_state: [0.8, 0.0, 0.0, 0.0, 0.1, 0.0, 0.0],
            terminal: false,
        };
        let prediction = critic_value(&nets0.critic, &tr.state, &tr.action);
        // two targets, both far beyond kappa on the same side
        let mut a = nets0.clone();
        critic_update(&mut a, &tr, prediction + 5.0, &cfg).unwrap();
        let mut b = nets0.clone();
        critic_update(&mut b, &tr, prediction + 50.0, &cfg).unwrap();
        assert_eq!(a.critic.weights, b.critic.weights);
    }

    #[test]
    fn actor_frozen_inside_window() {
        let mut cfg = base_config();
        cfg.actor_freeze_steps = 100;
        cfg.actor_update_period = 1;
        let mut nets = AgentNets::new(&cfg, &[8], 2, 3).unwrap();
        let before = nets.actor.clone();
        actor_update(&mut nets, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 99, &cfg).unwrap();
        assert_eq!(nets.actor, before);
        actor_update(&mut nets, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 100, &cfg).unwrap();
        assert_ne!(nets.actor, before);
    }

    #[test]
    fn actor_update_skips_off_period_steps() {
        let mut cfg = base_config();
        cfg.actor_update_period = 10;
        let mut nets = AgentNets::new(&cfg, &[8], 2, 3).unwrap();
        let before = nets.actor.clone();
        actor_update(&mut nets, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 11, &cfg).unwrap();
        assert_eq!(nets.actor, before);
    }

    #[test]
    fn constant_critic_leaves_actor_unchanged() {
        let mut cfg = base_config();
        cfg.l2_actor = 0.0;
        let mut nets = AgentNets::new(&cfg, &[8], 2, 3).unwrap();
        nets.critic = Mlp::zeros(AgentNets::critic_layout(&[8]).unwrap());
        let before = nets.actor.clone();
        actor_update(&mut nets, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0, &cfg).unwrap();
        assert_eq!(nets.actor, before);
    }

    #[test]
    fn actor_step_matches_hand_chain_rule_and_shrinks_policy() {
        // Hand-built critic with its minimum at u = 0: per action component
        // J_i(u) = tanh(u_i - 1) - tanh(u_i + 1), a negated bump that grows
        // with |u_i| inside the cap. One gradient step must therefore move
        // pi(x) toward zero, and the step itself must equal the chain rule
        // written out by hand.
        let mut cfg = base_config();
        cfg.l2_actor = 0.0;
        cfg.actor_lr = 0.05;
        cfg.clip_norm = f64::INFINITY;

        let critic_layout = MlpLayout::new(10, vec![6], 1, Activation::Identity).unwrap();
        let mut cw = vec![0.0; critic_layout.flat_len()];
        // hidden unit 2i   = tanh(u_i + 1), hidden unit 2i+1 = tanh(u_i - 1)
        for i in 0..3 {
            cw[(2 * i) * 10 + 7 + i] = 1.0;
            cw[(2 * i + 1) * 10 + 7 + i] = 1.0;
        }
        let hidden_bias_off = 10 * 6;
        for i in 0..3 {
            cw[hidden_bias_off + 2 * i] = 1.0;
            cw[hidden_bias_off + 2 * i + 1] = -1.0;
        }
        // output row: -h(u+1) + h(u-1)
        let out_off = hidden_bias_off + 6;
        for i in 0..3 {
            cw[out_off + 2 * i] = -1.0;
            cw[out_off + 2 * i + 1] = 1.0;
        }
        let critic = MlpParams::from_flat(critic_layout, cw).unwrap();

        // linear actor (no hidden layer), tanh head
        let actor_layout = MlpLayout::new(7, vec![], 3, Activation::Tanh).unwrap();
        let mut aw = vec![0.0; actor_layout.flat_len()];
        for (i, w) in aw.iter_mut().enumerate().take(21) {
            *w = 0.02 * (i as f64 - 10.0);
        }
        aw[21] = 0.3; // biases give a nonzero operating point
        aw[22] = -0.2;
        aw[23] = 0.1;
        let actor = MlpParams::from_flat(actor_layout.clone(), aw.clone()).unwrap();

        let state = [0.9, 0.1, -0.2, 0.0, 0.4, -0.3, 0.2];
        let before = policy_action(&actor, &state, cfg.u_max);

        let mut nets = AgentNets {
            actor: actor.clone(),
            critic: critic.clone(),
            target_critic: None,
        };
        actor_update(&mut nets, &state, 0, &cfg).unwrap();

        // hand chain rule: head_i = tanh(z_i), u_i = u_max * head_i,
        // dJ/du_i = sech^2(u_i - 1) - sech^2(u_i + 1)
        let sech2 = |x: f64| 1.0 - x.tanh() * x.tanh();
        let mut expected = aw.clone();
        for i in 0..3 {
            let z: f64 = state
                .iter()
                .enumerate()
                .map(|(k, x)| aw[i * 7 + k] * x)
                .sum::<f64>()
                + aw[21 + i];
            let head = z.tanh();
            let u = cfg.u_max * head;
            let dj_du = sech2(u - 1.0) - sech2(u + 1.0);
            let dhead = dj_du * cfg.u_max * (1.0 - head * head);
            for k in 0..7 {
                expected[i * 7 + k] -= cfg.actor_lr * dhead * state[k];
            }
            expected[21 + i] -= cfg.actor_lr * dhead;
        }
        for (got, want) in nets.actor.weights.iter().zip(&expected) {
            assert_relative_eq!(got, want, epsilon = 1e-12);
        }

        let after = policy_action(&nets.actor, &state, cfg.u_max);
        for (b, a) in before.iter().zip(&after) {
            assert!(a.abs() < b.abs(), "policy moved away from zero: {b} -> {a}");
        }
    }

    #[test]
    fn polyak_examples() {
        let layout = AgentNets::critic_layout(&[4]).unwrap();
        let online = Mlp::init(layout.clone(), 7);
        let target = Mlp::zeros(layout.clone());

        let copied = polyak(&target, &online, 1.0).unwrap();
        assert_eq!(copied.weights, online.weights);

        let ones = Mlp::from_flat(layout.clone(), vec![1.0; layout.flat_len()]).unwrap();
        let blended = polyak(&target, &ones, 0.005).unwrap();
        assert!(blended.weights.iter().all(|&w| w == 0.005));

        let barely = polyak(&target, &ones, 1e-12).unwrap();
        assert!(barely.weights.iter().all(|&w| w.abs() < 1e-11));

        assert!(polyak(&target, &online, 0.0).is_err());
        let other = Mlp::zeros(AgentNets::critic_layout(&[5]).unwrap());
        assert!(polyak(&other, &online, 0.5).is_err());
    }

    #[test]
    fn target_net_follows_online_with_tau_one() {
        let mut cfg = base_config();
        cfg.use_target_network = true;
        cfg.tau_target = 1.0;
        let mut nets = AgentNets::new(&cfg, &[8], 4, 5).unwrap();
        let tr = Transition {
            state: [0.9, 0.0, 0.0, 0.0, 0.2, 0.0, 0.0],
            action: [0.1, 0.0, 0.0],
            scaled_cost: 1.0,
            next_state: [0.9, 0.0, 0.0, 0.0, 0.2, 0.0, 0.0],
            terminal: false,
        };
        critic_update(&mut nets, &tr, 3.0, &cfg).unwrap();
        let target = polyak(nets.target_critic.as_ref().unwrap(), &nets.critic, 1.0).unwrap();
        assert_eq!(target.weights, nets.critic.weights);
    }

    #[test]
    fn variant1_allocates_no_target_net() {
        let cfg = base_config();
        let nets = AgentNets::new(&cfg, &[8], 0, 1).unwrap();
        assert!(nets.target_critic.is_none());
        assert!(!cfg.use_huber);
    }

    #[test]
    fn train_is_deterministic() {
        let mut cfg = ExperimentConfig::preset("variant3_desk").unwrap();
        cfg.environment.episodes = 2;
        cfg.environment.steps_per_episode = 25;
        let mut rec_a = RunRecorder::new(cfg.clone());
        train(&cfg, &mut rec_a).unwrap();
        let mut rec_b = RunRecorder::new(cfg.clone());
        train(&cfg, &mut rec_b).unwrap();
        assert_eq!(rec_a.into_record(), rec_b.into_record());
    }

    #[test]
    fn zero_learning_rates_freeze_weights() {
        let mut cfg = ExperimentConfig::preset("variant1_desk").unwrap();
        cfg.environment.episodes = 2;
        cfg.environment.steps_per_episode = 10;
        cfg.agent.actor_lr = 0.0;
        cfg.agent.critic_lr = 0.0;
        cfg.agent.l2_actor = 0.0;
        let mut rec = RunRecorder::new(cfg.clone());
        train(&cfg, &mut rec).unwrap();
        let record = rec.into_record();
        let critics = record.snapshots_of(crate::recorder::NetId::Critic);
        let actors = record.snapshots_of(crate::recorder::NetId::Actor);
        assert_eq!(critics.len(), 2);
        assert_eq!(actors.len(), 2);
        assert_eq!(critics[0].weights, critics[1].weights);
        assert_eq!(actors[0].weights, actors[1].weights);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn selected_actions_always_capped(seed in 0u64..500, step in 0u64..100_000) {
            let mut cfg = base_config();
            cfg.noise_init = 0.3; // exaggerated noise to stress the clip
            cfg.noise_final = 0.1;
            let actor = Mlp::init(AgentNets::actor_layout(&[8]).unwrap(), seed);
            let mut r = rng(seed);
            let u = select_action(&actor, &[0.5, -0.5, 0.5, -0.5, 1.0, -1.0, 1.0], step, &cfg, &mut r);
            prop_assert!(u.iter().all(|v| v.abs() <= cfg.u_max));
        }

        #[test]
        fn noise_schedule_monotone(a in 0u64..200_000, b in 0u64..200_000) {
            let cfg = base_config();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(noise_sigma(&cfg, lo) >= noise_sigma(&cfg, hi));
        }
    }
}
