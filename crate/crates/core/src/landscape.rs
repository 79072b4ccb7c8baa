//! The four visualization indices computed from a persisted run.
//!
//! Two loss surfaces are evaluated over PCA planes of the recorded weight
//! snapshots (the critic match loss against the recorded TD targets, and
//! the actor loss under the frozen final critic) plus two TD series: the
//! (time, TD, actor-PC1) trajectory and the (state-PC1, TD) map.
//!
//! Grid nodes are independent pure evaluations; they are computed in
//! parallel with results identical to sequential evaluation.

use rayon::prelude::*;

use crate::agent::AgentNets;
use crate::error::{CoreError, Result};
use crate::nn::{self, MlpLayout, MlpScratch};
use crate::pca::{self, PcaBasis};
use crate::recorder::{subsample_probes, NetId, ProbeTuple, RunRecord};
use crate::{Mlp, StateVec};

/// Loss surface over the `(α, β)` plane, with the projected snapshot
/// trajectory for overlay.
#[derive(Clone, Debug, PartialEq)]
pub struct LandscapeGrid {
    pub alpha_axis: Vec<f64>,
    pub beta_axis: Vec<f64>,
    /// `values[i][j]` is the loss at `(alpha_axis[i], beta_axis[j])`.
    pub values: Vec<Vec<f64>>,
    /// False where the evaluation produced a non-finite loss.
    pub finite: Vec<Vec<bool>>,
    pub reference_loss: f64,
    /// Snapshot coordinates relative to the reference point, so the final
    /// snapshot sits at the origin.
    pub trajectory: Vec<(f64, f64)>,
    /// Explained-variance ratios of the two plane directions.
    pub plane_ratios: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub resolution: usize,
    pub range_scale: f64,
}

/// Mean squared mismatch between the critic under `weights` and the
/// recorded TD targets. Always squared error, independent of the loss the
/// variant trained with.
pub fn critic_match_loss(
    layout: &MlpLayout,
    weights: &[f64],
    probes: &[ProbeTuple],
) -> Result<f64> {
    if probes.is_empty() {
        return Err(CoreError::invalid("critic match loss needs probes"));
    }
    let mut scratch = MlpScratch::new();
    let mut input = [0.0f64; 10];
    let mut sum = 0.0;
    for p in probes {
        input[..7].copy_from_slice(&p.state);
        input[7..].copy_from_slice(&p.action);
        let out = nn::forward_value(layout, weights, &input, &mut scratch)?;
        let d = out[0] - p.td_target;
        sum += d * d;
    }
    Ok(sum / probes.len() as f64)
}

/// Mean frozen-critic cost of the policy under `actor_weights` over the
/// probe states, evaluating the full tanh action head.
pub fn actor_surface_loss(
    actor_layout: &MlpLayout,
    actor_weights: &[f64],
    frozen_critic: &Mlp,
    probe_states: &[StateVec],
    u_max: f64,
) -> Result<f64> {
    if probe_states.is_empty() {
        return Err(CoreError::invalid("actor surface loss needs probe states"));
    }
    let mut actor_scratch = MlpScratch::new();
    let mut critic_scratch = MlpScratch::new();
    let mut input = [0.0f64; 10];
    let mut sum = 0.0;
    for x in probe_states {
        let head = nn::forward_value(actor_layout, actor_weights, x, &mut actor_scratch)?;
        input[..7].copy_from_slice(x);
        for (slot, h) in input[7..].iter_mut().zip(head) {
            *slot = u_max * h;
        }
        let j = nn::forward_value(
            &frozen_critic.layout,
            &frozen_critic.weights,
            &input,
            &mut critic_scratch,
        )?;
        sum += j[0];
    }
    Ok(sum / probe_states.len() as f64)
}

/// Evaluate `loss(reference + α δ + β η)` over the grid. Parallel over
/// rows; bit-identical to sequential evaluation.
pub fn eval_grid<F>(
    reference: &[f64],
    delta: &[f64],
    eta: &[f64],
    alpha_axis: &[f64],
    beta_axis: &[f64],
    loss: F,
) -> (Vec<Vec<f64>>, Vec<Vec<bool>>)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let rows: Vec<(Vec<f64>, Vec<bool>)> = alpha_axis
        .par_iter()
        .map(|&a| {
            let mut values = Vec::with_capacity(beta_axis.len());
            let mut finite = Vec::with_capacity(beta_axis.len());
            let mut w = vec![0.0f64; reference.len()];
            for &b in beta_axis {
                for (slot, ((&r, &d), &e)) in
                    w.iter_mut().zip(reference.iter().zip(delta).zip(eta))
                {
                    *slot = r + a * d + b * e;
                }
                let v = loss(&w);
                finite.push(v.is_finite());
                values.push(v);
            }
            (values, finite)
        })
        .collect();
    rows.into_iter().unzip()
}

/// Symmetric axis of `resolution` nodes over `[-half, half]`; odd counts
/// place a node exactly at zero.
fn symmetric_axis(half: f64, resolution: usize) -> Vec<f64> {
    let c = (resolution - 1) as f64;
    (0..resolution)
        .map(|i| half * ((2.0 * i as f64 - c) / c))
        .collect()
}

fn plane_of(run: &RunRecord, net: NetId) -> Result<(Vec<Vec<f64>>, PcaBasis<f64>)> {
    let snaps = run.snapshots_of(net);
    if snaps.len() < 3 {
        return Err(CoreError::invalid(format!(
            "{} landscape needs at least 3 weight snapshots, found {}",
            net.name(),
            snaps.len()
        )));
    }
    let samples: Vec<Vec<f64>> = snaps.iter().map(|s| s.weights.clone()).collect();
    let basis = pca::fit_pca(&samples, 2).map_err(|e| match e {
        CoreError::ZeroVariance(msg) => CoreError::ZeroVariance(format!(
            "{msg}; the {} weight trajectory is degenerate; train for more episodes",
            net.name()
        )),
        other => other,
    })?;
    Ok((samples, basis))
}

fn offset_coords(samples: &[Vec<f64>], reference: &[f64], basis: &PcaBasis<f64>) -> Vec<(f64, f64)> {
    samples
        .iter()
        .map(|w| {
            let a = inner_offset(w, reference, &basis.components[0]);
            let b = inner_offset(w, reference, &basis.components[1]);
            (a, b)
        })
        .collect()
}

fn inner_offset(w: &[f64], reference: &[f64], dir: &[f64]) -> f64 {
    w.iter()
        .zip(reference.iter().zip(dir))
        .map(|(&wi, (&ri, &di))| (wi - ri) * di)
        .sum()
}

/// Build one loss surface from a run: 2-component PCA over that net's
/// snapshots, plane anchored at the final snapshot, symmetric axis ranges
/// covering the projected trajectory scaled by `range_scale`.
pub fn build_landscape(run: &RunRecord, net: NetId, spec: &GridSpec) -> Result<LandscapeGrid> {
    let (samples, basis) = plane_of(run, net)?;
    let reference = samples.last().unwrap().clone();
    let trajectory = offset_coords(&samples, &reference, &basis);

    let half_a = spec.range_scale
        * trajectory
            .iter()
            .map(|c| c.0.abs())
            .fold(0.0f64, f64::max);
    let half_b = spec.range_scale
        * trajectory
            .iter()
            .map(|c| c.1.abs())
            .fold(0.0f64, f64::max);
    if half_a == 0.0 || half_b == 0.0 {
        return Err(CoreError::ZeroVariance(format!(
            "projected {} trajectory collapsed to a point",
            net.name()
        )));
    }
    let alpha_axis = symmetric_axis(half_a, spec.resolution);
    let beta_axis = symmetric_axis(half_b, spec.resolution);

    let analysis = &run.config.analysis;
    let hidden = &run.config.hidden_layers;
    let (values, finite, reference_loss) = match net {
        NetId::Critic => {
            let layout = AgentNets::critic_layout(hidden)?;
            let n = analysis.probe_count.min(run.probes.len());
            let probes = subsample_probes(run, n, run.config.seed)?;
            let loss =
                |w: &[f64]| critic_match_loss(&layout, w, &probes).unwrap_or(f64::NAN);
            let (values, finite) =
                eval_grid(&reference, &basis.components[0], &basis.components[1], &alpha_axis, &beta_axis, loss);
            let reference_loss = critic_match_loss(&layout, &reference, &probes)?;
            (values, finite, reference_loss)
        }
        NetId::Actor => {
            let layout = AgentNets::actor_layout(hidden)?;
            let critic_layout = AgentNets::critic_layout(hidden)?;
            let final_critic = run
                .snapshots_of(NetId::Critic)
                .last()
                .map(|s| s.weights.clone())
                .ok_or_else(|| CoreError::invalid("actor landscape needs a final critic snapshot"))?;
            let frozen_critic = Mlp::from_flat(critic_layout, final_critic)?;
            let n = analysis.actor_probe_count.min(run.probes.len());
            let probes = subsample_probes(run, n, run.config.seed)?;
            let states: Vec<StateVec> = probes.iter().map(|p| p.state).collect();
            let u_max = run.config.environment.u_max;
            let loss = |w: &[f64]| {
                actor_surface_loss(&layout, w, &frozen_critic, &states, u_max).unwrap_or(f64::NAN)
            };
            let (values, finite) =
                eval_grid(&reference, &basis.components[0], &basis.components[1], &alpha_axis, &beta_axis, loss);
            let reference_loss =
                actor_surface_loss(&layout, &reference, &frozen_critic, &states, u_max)?;
            (values, finite, reference_loss)
        }
    };

    Ok(LandscapeGrid {
        alpha_axis,
        beta_axis,
        values,
        finite,
        reference_loss,
        trajectory,
        plane_ratios: [
            basis.explained_variance_ratio[0],
            basis.explained_variance_ratio[1],
        ],
    })
}

/// Per-episode mean of `|td|` from the step logs, in episode order.
pub fn td_by_episode(run: &RunRecord) -> Vec<(u32, f64)> {
    let mut out: Vec<(u32, f64, u64)> = Vec::new();
    for s in &run.steps {
        match out.last_mut() {
            Some((ep, sum, count)) if *ep == s.episode => {
                *sum += s.td.abs();
                *count += 1;
            }
            _ => out.push((s.episode, s.td.abs(), 1)),
        }
    }
    out.into_iter()
        .map(|(ep, sum, count)| (ep, sum / count as f64))
        .collect()
}

/// (time, td, actor-PC1) triples from the periodic actor samples, plus the
/// explained-variance ratio of PC1.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTdSeries {
    /// `(seconds of training, td residual, PC1 coordinate)`.
    pub points: Vec<(f64, f64, f64)>,
    pub pc1_ratio: f64,
}

/// (state-PC1, td) pairs sampled from the step logs, plus the
/// explained-variance ratio of PC1.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTdSeries {
    pub points: Vec<(f64, f64)>,
    pub pc1_ratio: f64,
}

/// PC1 coordinates of `samples` with the degenerate case folded in: a
/// constant trajectory projects to the origin with ratio 1.
fn pc1_coords(samples: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    if samples.len() < 2 {
        return Ok((vec![0.0; samples.len()], 1.0));
    }
    match pca::fit_pca(samples, 1) {
        Ok(basis) => {
            let coords = samples
                .iter()
                .map(|s| pca::project(&basis, s).map(|c| c[0]))
                .collect::<Result<Vec<f64>>>()?;
            Ok((coords, basis.explained_variance_ratio[0]))
        }
        Err(CoreError::ZeroVariance(_)) => Ok((vec![0.0; samples.len()], 1.0)),
        Err(e) => Err(e),
    }
}

pub fn actor_weight_td_time(run: &RunRecord) -> Result<WeightTdSeries> {
    if run.actor_samples.is_empty() {
        return Err(CoreError::invalid("run has no actor weight samples"));
    }
    let weights: Vec<Vec<f64>> = run.actor_samples.iter().map(|s| s.weights.clone()).collect();
    let (coords, pc1_ratio) = pc1_coords(&weights)?;
    let dt = run.config.environment.dt;
    let points = run
        .actor_samples
        .iter()
        .zip(coords)
        .map(|(s, c)| (s.step as f64 * dt, s.td, c))
        .collect();
    Ok(WeightTdSeries { points, pc1_ratio })
}

pub fn state_td_map(run: &RunRecord) -> Result<StateTdSeries> {
    if run.steps.is_empty() {
        return Err(CoreError::invalid("run has no step logs"));
    }
    let states: Vec<Vec<f64>> = run.steps.iter().map(|s| s.state.to_vec()).collect();
    let (coords, pc1_ratio) = pc1_coords(&states)?;
    let period = run.config.analysis.state_sample_period;
    let points = run
        .steps
        .iter()
        .zip(&coords)
        .step_by(period)
        .map(|(s, &c)| (c, s.td))
        .collect();
    Ok(StateTdSeries { points, pc1_ratio })
}
