//! Online actor-critic attitude control with loss-landscape diagnostics.
//!
//! The crate trains four variants of an online actor-critic agent (plain,
//! target-network, stabilized, stabilized + target-policy smoothing) on a
//! quaternion rigid-body attitude simulation, records everything the
//! diagnostics need, and turns the records into four visualization indices:
//! a critic match-loss surface and an actor loss surface over PCA planes of
//! the weight trajectories, a time/TD/actor-weight trajectory, and a
//! state/TD map.
//!
//! The numeric kernels are generic over the scalar type (see [`real::Real`]);
//! the aliases below fix `f64`, which is what the training loop and the
//! persistence format use.

pub mod agent;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod landscape;
pub mod nn;
pub mod pca;
pub mod pipeline;
pub mod real;
pub mod recorder;
pub mod svg;

pub use error::CoreError;
pub use real::Real;

/// 3-vector of `f64` (torques, angular velocities, axes).
pub type Vec3 = [f64; 3];
/// Flat 7-dim state `[q0, q1, q2, q3, w1, w2, w3]`.
pub type StateVec = [f64; 7];
/// 3-dim action (body torque, N·m).
pub type ActionVec = [f64; 3];

pub type Quat = dynamics::Quaternion<f64>;
pub type BodyState = dynamics::BodyState<f64>;
pub type Inertia = dynamics::InertiaMatrix<f64>;
pub type CostWeights = dynamics::CostWeights<f64>;
pub type TerminationRule = dynamics::TerminationRule<f64>;

pub type Mlp = nn::MlpParams<f64>;
pub type Grad = nn::ParamGrad<f64>;
pub type Basis = pca::PcaBasis<f64>;
