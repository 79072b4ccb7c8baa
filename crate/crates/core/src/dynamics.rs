//! Rigid-spacecraft attitude simulation.
//!
//! State is a scalar-first unit quaternion plus the body-frame angular
//! velocity. Kinematics follow `q_dot = 1/2 q ⊗ [0, ω]`, dynamics follow
//! Euler's equation `ω_dot = J⁻¹ (M − ω × J ω)` with a fixed (but
//! agent-hidden) inertia matrix. Integration is classical RK4 on the 7-dim
//! state with post-step quaternion renormalization.

use crate::error::{CoreError, Result};
use crate::real::Real;

pub fn dot3<R: Real>(a: &[R; 3], b: &[R; 3]) -> R {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3<R: Real>(a: &[R; 3], b: &[R; 3]) -> [R; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3<R: Real>(a: &[R; 3]) -> R {
    dot3(a, a).sqrt()
}

/// Scalar-first unit quaternion, `q0` is the scalar part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion<R> {
    pub q0: R,
    pub q1: R,
    pub q2: R,
    pub q3: R,
}

impl<R: Real> Quaternion<R> {
    pub fn new(q0: R, q1: R, q2: R, q3: R) -> Self {
        Quaternion { q0, q1, q2, q3 }
    }

    pub fn identity() -> Self {
        Quaternion::new(R::one(), R::zero(), R::zero(), R::zero())
    }

    /// Unit quaternion for a rotation of `angle` radians about `axis`.
    /// The axis is normalized internally; a zero axis is rejected.
    pub fn from_axis_angle(axis: &[R; 3], angle: R) -> Result<Self> {
        let n = norm3(axis);
        if n == R::zero() || !n.is_finite() {
            return Err(CoreError::invalid("rotation axis must be non-zero"));
        }
        let half = angle / R::real(2.0);
        let s = half.sin() / n;
        Ok(Quaternion::new(
            half.cos(),
            axis[0] * s,
            axis[1] * s,
            axis[2] * s,
        ))
    }

    /// Hamilton product `self ⊗ rhs`, scalar-first convention.
    pub fn multiply(&self, rhs: &Self) -> Self {
        let (a0, a1, a2, a3) = (self.q0, self.q1, self.q2, self.q3);
        let (b0, b1, b2, b3) = (rhs.q0, rhs.q1, rhs.q2, rhs.q3);
        Quaternion::new(
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        )
    }

    pub fn conjugate(&self) -> Self {
        Quaternion::new(self.q0, -self.q1, -self.q2, -self.q3)
    }

    pub fn norm(&self) -> R {
        (self.q0 * self.q0 + self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Quaternion::new(self.q0 / n, self.q1 / n, self.q2 / n, self.q3 / n)
    }

    /// Principal rotation angle `2 acos(|q0|)`, the attitude error w.r.t.
    /// the identity attitude.
    pub fn attitude_error(&self) -> R {
        let c = self.q0.abs().min(R::one());
        R::real(2.0) * c.acos()
    }

    /// Direction cosine matrix mapping body-frame vectors into the
    /// inertial frame (consistent with `q_dot = 1/2 q ⊗ [0, ω_body]`).
    pub fn rotation_matrix(&self) -> [[R; 3]; 3] {
        let (q0, q1, q2, q3) = (self.q0, self.q1, self.q2, self.q3);
        let two = R::real(2.0);
        [
            [
                R::one() - two * (q2 * q2 + q3 * q3),
                two * (q1 * q2 - q0 * q3),
                two * (q1 * q3 + q0 * q2),
            ],
            [
                two * (q1 * q2 + q0 * q3),
                R::one() - two * (q1 * q1 + q3 * q3),
                two * (q2 * q3 - q0 * q1),
            ],
            [
                two * (q1 * q3 - q0 * q2),
                two * (q2 * q3 + q0 * q1),
                R::one() - two * (q1 * q1 + q2 * q2),
            ],
        ]
    }
}

/// Simulated plant state: attitude quaternion and body angular velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyState<R> {
    pub attitude: Quaternion<R>,
    /// rad/s, body frame.
    pub omega: [R; 3],
}

impl<R: Real> BodyState<R> {
    pub fn new(attitude: Quaternion<R>, omega: [R; 3]) -> Self {
        BodyState { attitude, omega }
    }

    /// Flat `[q0, q1, q2, q3, w1, w2, w3]` view, the agent's observation.
    pub fn to_vec(&self) -> [R; 7] {
        [
            self.attitude.q0,
            self.attitude.q1,
            self.attitude.q2,
            self.attitude.q3,
            self.omega[0],
            self.omega[1],
            self.omega[2],
        ]
    }
}

/// Symmetric positive-definite inertia matrix, kg·m². The inverse is
/// precomputed at construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertiaMatrix<R> {
    m: [[R; 3]; 3],
    inv: [[R; 3]; 3],
}

impl<R: Real> InertiaMatrix<R> {
    /// Validates symmetry (within 1e-12) and positive definiteness
    /// (leading principal minors), then precomputes the inverse.
    pub fn new(m: [[R; 3]; 3]) -> Result<Self> {
        let tol = R::real(1e-12);
        for i in 0..3 {
            for j in (i + 1)..3 {
                if (m[i][j] - m[j][i]).abs() > tol {
                    return Err(CoreError::invalid(format!(
                        "inertia matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let d1 = m[0][0];
        let d2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let d3 = det3(&m);
        if !(d1 > R::zero() && d2 > R::zero() && d3 > R::zero()) {
            return Err(CoreError::invalid(
                "inertia matrix must be positive definite",
            ));
        }
        let inv = invert3(&m, d3);
        Ok(InertiaMatrix { m, inv })
    }

    pub fn matrix(&self) -> &[[R; 3]; 3] {
        &self.m
    }

    /// `J v`.
    pub fn mul_vec(&self, v: &[R; 3]) -> [R; 3] {
        mat_vec(&self.m, v)
    }

    /// `J⁻¹ v`.
    pub fn solve(&self, v: &[R; 3]) -> [R; 3] {
        mat_vec(&self.inv, v)
    }
}

fn mat_vec<R: Real>(m: &[[R; 3]; 3], v: &[R; 3]) -> [R; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn det3<R: Real>(m: &[[R; 3]; 3]) -> R {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn invert3<R: Real>(m: &[[R; 3]; 3], det: R) -> [[R; 3]; 3] {
    let c = |a: R, b: R, cc: R, d: R| (a * d - b * cc) / det;
    [
        [
            c(m[1][1], m[1][2], m[2][1], m[2][2]),
            c(m[0][2], m[0][1], m[2][2], m[2][1]),
            c(m[0][1], m[0][2], m[1][1], m[1][2]),
        ],
        [
            c(m[1][2], m[1][0], m[2][2], m[2][0]),
            c(m[0][0], m[0][2], m[2][0], m[2][2]),
            c(m[0][2], m[0][0], m[1][2], m[1][0]),
        ],
        [
            c(m[1][0], m[1][1], m[2][0], m[2][1]),
            c(m[0][1], m[0][0], m[2][1], m[2][0]),
            c(m[0][0], m[0][1], m[1][0], m[1][1]),
        ],
    ]
}

/// Per-step cost coefficients, all nonnegative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostWeights<R> {
    pub k_att: R,
    pub k_rate: R,
    pub k_torque: R,
}

impl<R: Real> CostWeights<R> {
    pub fn new(k_att: R, k_rate: R, k_torque: R) -> Result<Self> {
        if k_att < R::zero() || k_rate < R::zero() || k_torque < R::zero() {
            return Err(CoreError::invalid("cost weights must be nonnegative"));
        }
        Ok(CostWeights {
            k_att,
            k_rate,
            k_torque,
        })
    }
}

impl<R: Real> Default for CostWeights<R> {
    fn default() -> Self {
        CostWeights {
            k_att: R::real(20.0),
            k_rate: R::real(2.0),
            k_torque: R::real(0.1),
        }
    }
}

/// Episode failure limits and the associated penalty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TerminationRule<R> {
    /// rad, principal rotation angle limit.
    pub attitude_error_limit: R,
    /// rad/s.
    pub omega_norm_limit: R,
    pub penalty: R,
}

impl<R: Real> TerminationRule<R> {
    pub fn new(attitude_error_limit: R, omega_norm_limit: R, penalty: R) -> Result<Self> {
        if attitude_error_limit <= R::zero() || omega_norm_limit <= R::zero() {
            return Err(CoreError::invalid("termination limits must be positive"));
        }
        Ok(TerminationRule {
            attitude_error_limit,
            omega_norm_limit,
            penalty,
        })
    }
}

impl<R: Real> Default for TerminationRule<R> {
    fn default() -> Self {
        TerminationRule {
            attitude_error_limit: R::real(2.8),
            omega_norm_limit: R::real(8.0),
            penalty: R::real(300.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Running,
    AttitudeExceeded,
    RateExceeded,
}

impl Termination {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, Termination::Running)
    }
}

/// Time derivatives of the state: `q_dot = 1/2 q ⊗ [0, ω]` and
/// `ω_dot = J⁻¹ (M − ω × J ω)`.
pub fn derivatives<R: Real>(
    state: &BodyState<R>,
    torque: &[R; 3],
    inertia: &InertiaMatrix<R>,
) -> ([R; 4], [R; 3]) {
    let q = &state.attitude;
    let w = Quaternion::new(R::zero(), state.omega[0], state.omega[1], state.omega[2]);
    let qd = q.multiply(&w);
    let half = R::real(0.5);
    let quat_rate = [half * qd.q0, half * qd.q1, half * qd.q2, half * qd.q3];

    let j_omega = inertia.mul_vec(&state.omega);
    let gyro = cross3(&state.omega, &j_omega);
    let rhs = [torque[0] - gyro[0], torque[1] - gyro[1], torque[2] - gyro[2]];
    (quat_rate, inertia.solve(&rhs))
}

fn deriv7<R: Real>(y: &[R; 7], torque: &[R; 3], inertia: &InertiaMatrix<R>) -> [R; 7] {
    let state = BodyState::new(
        Quaternion::new(y[0], y[1], y[2], y[3]),
        [y[4], y[5], y[6]],
    );
    let (qd, wd) = derivatives(&state, torque, inertia);
    [qd[0], qd[1], qd[2], qd[3], wd[0], wd[1], wd[2]]
}

const STATE_LABELS: [&str; 7] = ["q0", "q1", "q2", "q3", "w1", "w2", "w3"];

/// One classical RK4 step of length `dt` with the torque held constant,
/// followed by quaternion renormalization.
pub fn step<R: Real>(
    state: &BodyState<R>,
    torque: &[R; 3],
    inertia: &InertiaMatrix<R>,
    dt: R,
) -> Result<BodyState<R>> {
    if dt <= R::zero() {
        return Err(CoreError::invalid("dt must be positive"));
    }
    let y0 = state.to_vec();
    let half = dt / R::real(2.0);
    let k1 = deriv7(&y0, torque, inertia);
    let k2 = deriv7(&axpy(&y0, half, &k1), torque, inertia);
    let k3 = deriv7(&axpy(&y0, half, &k2), torque, inertia);
    let k4 = deriv7(&axpy(&y0, dt, &k3), torque, inertia);

    let sixth = dt / R::real(6.0);
    let two = R::real(2.0);
    let mut y = [R::zero(); 7];
    for i in 0..7 {
        y[i] = y0[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        if !y[i].is_finite() {
            return Err(CoreError::overflow(
                "dynamics step",
                format!("state component {} became non-finite", STATE_LABELS[i]),
            ));
        }
    }
    let attitude = Quaternion::new(y[0], y[1], y[2], y[3]).normalized();
    Ok(BodyState::new(attitude, [y[4], y[5], y[6]]))
}

fn axpy<R: Real>(y: &[R; 7], a: R, k: &[R; 7]) -> [R; 7] {
    let mut out = [R::zero(); 7];
    for i in 0..7 {
        out[i] = y[i] + a * k[i];
    }
    out
}

/// Instantaneous cost `k_att (1 − q0²) + k_rate ‖ω‖² + k_torque ‖M‖²`.
pub fn step_cost<R: Real>(state: &BodyState<R>, torque: &[R; 3], weights: &CostWeights<R>) -> R {
    let q0 = state.attitude.q0;
    weights.k_att * (R::one() - q0 * q0)
        + weights.k_rate * dot3(&state.omega, &state.omega)
        + weights.k_torque * dot3(torque, torque)
}

/// Failure test: attitude error `2 acos(|q0|)` beyond the limit, or the
/// angular velocity norm beyond its limit.
pub fn check_termination<R: Real>(state: &BodyState<R>, rule: &TerminationRule<R>) -> Termination {
    if state.attitude.attitude_error() > rule.attitude_error_limit {
        Termination::AttitudeExceeded
    } else if norm3(&state.omega) > rule.omega_norm_limit {
        Termination::RateExceeded
    } else {
        Termination::Running
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Inertia used throughout the simulations.
    pub fn test_inertia() -> InertiaMatrix<f64> {
        InertiaMatrix::new([
            [1.0, 0.02, 0.02],
            [0.02, 0.8, 0.03],
            [0.02, 0.03, 0.9],
        ])
        .unwrap()
    }

    #[test]
    fn axis_angle_identity() {
        let q = Quaternion::from_axis_angle(&[0.0, 0.0, 1.0], 0.0).unwrap();
        assert_eq!((q.q0, q.q1, q.q2, q.q3), (1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn axis_angle_half_turn_x() {
        let q = Quaternion::from_axis_angle(&[1.0, 0.0, 0.0], PI).unwrap();
        assert_relative_eq!(q.q0, 0.0, epsilon = 1e-15);
        assert_relative_eq!(q.q1, 1.0, epsilon = 1e-15);
        assert_eq!((q.q2, q.q3), (0.0, 0.0));
    }

    #[test]
    fn axis_angle_initial_attitude() {
        // Independent half-angle evaluation for a 20 degree rotation
        // about [1, -0.5, 0.2].
        let axis = [1.0, -0.5, 0.2];
        let angle = 20.0 * PI / 180.0;
        let q = Quaternion::from_axis_angle(&axis, angle).unwrap();

        let half = angle / 2.0;
        let n = (1.0f64 + 0.25 + 0.04).sqrt();
        assert_relative_eq!(q.q0, half.cos(), epsilon = 1e-15);
        assert_relative_eq!(q.q0, 0.984_807_753_012_208, epsilon = 1e-12);
        assert_relative_eq!(q.q1, half.sin() * 1.0 / n, epsilon = 1e-15);
        assert_relative_eq!(q.q2, half.sin() * -0.5 / n, epsilon = 1e-15);
        assert_relative_eq!(q.q3, half.sin() * 0.2 / n, epsilon = 1e-15);
        assert_relative_eq!(q.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn axis_angle_zero_axis_rejected() {
        assert!(Quaternion::<f64>::from_axis_angle(&[0.0, 0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn multiply_identity_element() {
        let q = Quaternion::from_axis_angle(&[0.3, -1.0, 0.5], 0.7).unwrap();
        let i = Quaternion::identity();
        assert_eq!(i.multiply(&q), q);
    }

    #[test]
    fn multiply_conjugate_gives_identity() {
        let q = Quaternion::from_axis_angle(&[0.3, -1.0, 0.5], 0.7).unwrap();
        let p = q.multiply(&q.conjugate());
        assert_relative_eq!(p.q0, 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.q1, 0.0, epsilon = 1e-15);
        assert_relative_eq!(p.q2, 0.0, epsilon = 1e-15);
        assert_relative_eq!(p.q3, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn multiply_composes_rotations() {
        // Two 90 degree z-rotations make a 180 degree z-rotation; the
        // oracle composes the corresponding rotation matrices.
        let q90 = Quaternion::from_axis_angle(&[0.0, 0.0, 1.0], PI / 2.0).unwrap();
        let q = q90.multiply(&q90);
        assert_relative_eq!(q.q0, 0.0, epsilon = 1e-15);
        assert_relative_eq!(q.q3, 1.0, epsilon = 1e-15);

        let r90 = q90.rotation_matrix();
        let rq = q.rotation_matrix();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += r90[i][k] * r90[k][j];
                }
                assert_relative_eq!(rq[i][j], acc, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn derivatives_equilibrium() {
        let state = BodyState::new(
            Quaternion::from_axis_angle(&[1.0, 2.0, -1.0], 0.4).unwrap(),
            [0.0; 3],
        );
        let (qd, wd) = derivatives(&state, &[0.0; 3], &test_inertia());
        assert_eq!(qd, [0.0; 4]);
        assert_eq!(wd, [0.0; 3]);
    }

    #[test]
    fn derivatives_principal_axis_spin() {
        let inertia =
            InertiaMatrix::new([[1.0, 0.0, 0.0], [0.0, 0.8, 0.0], [0.0, 0.0, 0.9]]).unwrap();
        let state = BodyState::new(Quaternion::identity(), [0.0, 0.7, 0.0]);
        let (_, wd) = derivatives(&state, &[0.0; 3], &inertia);
        assert_eq!(wd, [0.0; 3]);
    }

    /// Gaussian elimination with partial pivoting, used as the oracle for
    /// the inertia solve.
    fn solve3_oracle(a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
        let mut m = a;
        for col in 0..3 {
            let piv = (col..3)
                .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
                .unwrap();
            m.swap(col, piv);
            b.swap(col, piv);
            for row in (col + 1)..3 {
                let f = m[row][col] / m[col][col];
                for k in col..3 {
                    m[row][k] -= f * m[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = [0.0; 3];
        for row in (0..3).rev() {
            let mut acc = b[row];
            for k in (row + 1)..3 {
                acc -= m[row][k] * x[k];
            }
            x[row] = acc / m[row][row];
        }
        x
    }

    #[test]
    fn derivatives_matches_linear_solve_oracle() {
        let inertia = test_inertia();
        let omega = [0.1, 0.2, -0.1];
        let torque = [0.05, 0.0, 0.0];
        let state = BodyState::new(Quaternion::identity(), omega);
        let (_, wd) = derivatives(&state, &torque, &inertia);

        let j_omega = inertia.mul_vec(&omega);
        let gyro = cross3(&omega, &j_omega);
        let rhs = [
            torque[0] - gyro[0],
            torque[1] - gyro[1],
            torque[2] - gyro[2],
        ];
        let expected = solve3_oracle(*inertia.matrix(), rhs);
        for i in 0..3 {
            assert_relative_eq!(wd[i], expected[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn step_fixed_point_at_equilibrium() {
        let state = BodyState::new(Quaternion::identity(), [0.0; 3]);
        let next = step(&state, &[0.0; 3], &test_inertia(), 0.01).unwrap();
        assert_eq!(next, state);
    }

    #[test]
    fn step_torque_free_principal_spin_holds_rate() {
        let inertia =
            InertiaMatrix::new([[1.0, 0.0, 0.0], [0.0, 0.8, 0.0], [0.0, 0.0, 0.9]]).unwrap();
        let mut state: BodyState<f64> = BodyState::new(Quaternion::identity(), [0.0, 0.0, 0.6]);
        for _ in 0..1000 {
            state = step(&state, &[0.0; 3], &inertia, 0.01).unwrap();
        }
        assert_relative_eq!(state.omega[2], 0.6, epsilon = 1e-9);
        assert!(state.omega[0].abs() < 1e-9 && state.omega[1].abs() < 1e-9);
    }

    #[test]
    fn step_rejects_nonpositive_dt() {
        let state = BodyState::new(Quaternion::identity(), [0.0; 3]);
        assert!(step(&state, &[0.0; 3], &test_inertia(), 0.0).is_err());
    }

    #[test]
    fn torque_free_conservation() {
        // Inertial angular momentum R(q) J ω and kinetic energy must both
        // hold over a long tumbling propagation.
        let inertia = test_inertia();
        let q = Quaternion::from_axis_angle(&[1.0, -0.5, 0.2], 20.0 * PI / 180.0).unwrap();
        let mut state = BodyState::new(q, [0.3, -0.2, 0.4]);

        let momentum = |s: &BodyState<f64>| {
            let r = s.attitude.rotation_matrix();
            let l = inertia.mul_vec(&s.omega);
            mat_vec(&r, &l)
        };
        let energy = |s: &BodyState<f64>| 0.5 * dot3(&s.omega, &inertia.mul_vec(&s.omega));

        let l0 = momentum(&state);
        let e0 = energy(&state);
        for _ in 0..5000 {
            state = step(&state, &[0.0; 3], &inertia, 0.01).unwrap();
            assert!((state.attitude.norm() - 1.0).abs() <= 1e-9);
        }
        let l1 = momentum(&state);
        let e1 = energy(&state);
        let dl = [l1[0] - l0[0], l1[1] - l0[1], l1[2] - l0[2]];
        assert!(norm3(&dl) / norm3(&l0) < 1e-6);
        assert!((e1 - e0).abs() / e0 < 1e-6);
    }

    #[test]
    fn cost_examples() {
        let w = CostWeights::default();
        let goal = BodyState::new(Quaternion::identity(), [0.0; 3]);
        assert_eq!(step_cost(&goal, &[0.0; 3], &w), 0.0);

        let flipped = BodyState::new(Quaternion::new(0.0, 1.0, 0.0, 0.0), [0.0; 3]);
        assert_eq!(step_cost(&flipped, &[0.0; 3], &w), 20.0);

        let spinning = BodyState::new(Quaternion::identity(), [1.0, 0.0, 0.0]);
        assert_relative_eq!(
            step_cost(&spinning, &[0.5, 0.0, 0.0], &w),
            2.025,
            epsilon = 1e-15
        );
    }

    #[test]
    fn termination_examples() {
        let rule = TerminationRule::default();
        let ok = BodyState::new(Quaternion::identity(), [0.0; 3]);
        assert_eq!(check_termination(&ok, &rule), Termination::Running);

        let fast = BodyState::new(Quaternion::identity(), [8.1, 0.0, 0.0]);
        assert_eq!(check_termination(&fast, &rule), Termination::RateExceeded);

        // Attitude error 2 acos(q0) = 2.82 rad, just beyond the 2.8 limit.
        let q0 = 1.41f64.cos();
        let s = (1.0 - q0 * q0).sqrt();
        let tilted = BodyState::new(Quaternion::new(q0, s, 0.0, 0.0), [0.0; 3]);
        assert_relative_eq!(tilted.attitude.attitude_error(), 2.82, epsilon = 1e-12);
        assert_eq!(
            check_termination(&tilted, &rule),
            Termination::AttitudeExceeded
        );
    }

    #[test]
    fn inertia_rejects_asymmetric_and_indefinite() {
        assert!(
            InertiaMatrix::new([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_err()
        );
        assert!(
            InertiaMatrix::new([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_err()
        );
    }

    proptest! {
        #[test]
        fn quaternion_norm_preserved_by_steps(
            ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0,
            angle in 0.0f64..3.0,
            w1 in -2.0f64..2.0, w2 in -2.0f64..2.0, w3 in -2.0f64..2.0,
            m1 in -0.5f64..0.5, m2 in -0.5f64..0.5, m3 in -0.5f64..0.5,
        ) {
            let inertia = test_inertia();
            let q = Quaternion::from_axis_angle(&[ax, ay, az], angle).unwrap();
            let mut state = BodyState::new(q, [w1, w2, w3]);
            for _ in 0..20 {
                state = step(&state, &[m1, m2, m3], &inertia, 0.01).unwrap();
                prop_assert!((state.attitude.norm() - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn cost_nonnegative(
            q0 in -1.0f64..1.0,
            w1 in -5.0f64..5.0, w2 in -5.0f64..5.0, w3 in -5.0f64..5.0,
            m1 in -0.5f64..0.5, m2 in -0.5f64..0.5, m3 in -0.5f64..0.5,
        ) {
            let s = (1.0 - q0 * q0).max(0.0).sqrt();
            let state = BodyState::new(Quaternion::new(q0, s, 0.0, 0.0), [w1, w2, w3]);
            prop_assert!(step_cost(&state, &[m1, m2, m3], &CostWeights::default()) >= 0.0);
        }

        #[test]
        fn omega_rate_linear_in_torque(
            w1 in -1.0f64..1.0, w2 in -1.0f64..1.0, w3 in -1.0f64..1.0,
            m1 in -0.5f64..0.5, m2 in -0.5f64..0.5, m3 in -0.5f64..0.5,
            n1 in -0.5f64..0.5, n2 in -0.5f64..0.5, n3 in -0.5f64..0.5,
        ) {
            let inertia = test_inertia();
            let state = BodyState::new(Quaternion::identity(), [w1, w2, w3]);
            let (_, d0) = derivatives(&state, &[0.0; 3], &inertia);
            let (_, da) = derivatives(&state, &[m1, m2, m3], &inertia);
            let (_, db) = derivatives(&state, &[n1, n2, n3], &inertia);
            let (_, dab) = derivatives(&state, &[m1 + n1, m2 + n2, m3 + n3], &inertia);
            for i in 0..3 {
                // superposition: f(a+b) - f(0) = (f(a) - f(0)) + (f(b) - f(0))
                let lhs = dab[i] - d0[i];
                let rhs = (da[i] - d0[i]) + (db[i] - d0[i]);
                prop_assert!((lhs - rhs).abs() <= 1e-12);
            }
        }
    }
}
