//! Minimal multilayer perceptron over explicit flat weight vectors.
//!
//! Weights are stored layer-major: for each layer the weight matrix comes
//! first in row-major order (one row per output unit), followed by that
//! layer's bias vector. Backpropagation is analytic and exact for the
//! fixed affine/tanh graph; there is no autodiff.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
}

impl Activation {
    fn apply<R: Real>(&self, z: R) -> R {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the post-activation value.
    fn derivative_from_output<R: Real>(&self, a: R) -> R {
        match self {
            Activation::Identity => R::one(),
            Activation::Tanh => R::one() - a * a,
        }
    }
}

/// Network shape: layer widths plus the two activation choices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MlpLayout {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl MlpLayout {
    pub fn new(
        input_dim: usize,
        hidden_dims: Vec<usize>,
        output_dim: usize,
        output_activation: Activation,
    ) -> Result<Self> {
        if input_dim < 1 || output_dim < 1 || hidden_dims.iter().any(|&d| d < 1) {
            return Err(CoreError::invalid("all layer dims must be >= 1"));
        }
        Ok(MlpLayout {
            input_dim,
            hidden_dims,
            output_dim,
            hidden_activation: Activation::Tanh,
            output_activation,
        })
    }

    /// `(fan_in, fan_out)` of every affine layer in order.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 1);
        let mut prev = self.input_dim;
        for &h in &self.hidden_dims {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, self.output_dim));
        dims
    }

    pub fn num_layers(&self) -> usize {
        self.hidden_dims.len() + 1
    }

    /// Total flat parameter count: Σ (fan_in + 1) · fan_out.
    pub fn flat_len(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|&(i, o)| (i + 1) * o)
            .sum()
    }

    pub fn max_width(&self) -> usize {
        self.hidden_dims
            .iter()
            .copied()
            .chain([self.input_dim, self.output_dim])
            .max()
            .unwrap()
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }
}

/// An MLP's parameters as one flat vector plus its layout.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams<R> {
    pub layout: MlpLayout,
    pub weights: Vec<R>,
}

/// Flat gradient vector congruent with [`MlpParams::weights`].
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrad<R> {
    pub flat: Vec<R>,
}

impl<R: Real> MlpParams<R> {
    /// Seeded initialization: weights uniform in `[-1/√fan_in, +1/√fan_in]`,
    /// biases zero. Draws are consumed in flat weight order, so the result
    /// is identical for a given `(layout, seed)`.
    pub fn init(layout: MlpLayout, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = vec![R::zero(); layout.flat_len()];
        let mut off = 0;
        for (fan_in, fan_out) in layout.layer_dims() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for w in weights.iter_mut().skip(off).take(fan_in * fan_out) {
                *w = R::real(rng.gen_range(-bound..bound));
            }
            off += (fan_in + 1) * fan_out; // biases stay zero
        }
        MlpParams { layout, weights }
    }

    pub fn zeros(layout: MlpLayout) -> Self {
        let weights = vec![R::zero(); layout.flat_len()];
        MlpParams { layout, weights }
    }

    pub fn from_flat(layout: MlpLayout, weights: Vec<R>) -> Result<Self> {
        if weights.len() != layout.flat_len() {
            return Err(CoreError::invalid(format!(
                "flat vector length {} does not match layout ({} expected)",
                weights.len(),
                layout.flat_len()
            )));
        }
        Ok(MlpParams { layout, weights })
    }

    /// Per-layer `(weight-matrix rows, biases)` view of the flat vector.
    pub fn to_layers(&self) -> Vec<(Vec<Vec<R>>, Vec<R>)> {
        let mut layers = Vec::new();
        let mut off = 0;
        for (fan_in, fan_out) in self.layout.layer_dims() {
            let rows = (0..fan_out)
                .map(|j| self.weights[off + j * fan_in..off + (j + 1) * fan_in].to_vec())
                .collect();
            let biases = self.weights[off + fan_in * fan_out..off + (fan_in + 1) * fan_out].to_vec();
            layers.push((rows, biases));
            off += (fan_in + 1) * fan_out;
        }
        layers
    }

    /// Inverse of [`to_layers`]: rebuilds the flat vector.
    pub fn from_layers(layout: MlpLayout, layers: &[(Vec<Vec<R>>, Vec<R>)]) -> Result<Self> {
        let dims = layout.layer_dims();
        if layers.len() != dims.len() {
            return Err(CoreError::invalid("layer count mismatch"));
        }
        let mut weights = Vec::with_capacity(layout.flat_len());
        for ((rows, biases), &(fan_in, fan_out)) in layers.iter().zip(&dims) {
            if rows.len() != fan_out || biases.len() != fan_out {
                return Err(CoreError::invalid("layer output dim mismatch"));
            }
            for row in rows {
                if row.len() != fan_in {
                    return Err(CoreError::invalid("layer input dim mismatch"));
                }
                weights.extend_from_slice(row);
            }
            weights.extend_from_slice(biases);
        }
        MlpParams::from_flat(layout, weights)
    }
}

/// One affine layer: `out[j] = b[j] + Σ_k W[j,k] in[k]`. The accumulation
/// order is fixed so every forward path produces identical bits.
fn affine<R: Real>(weights: &[R], off: usize, fan_in: usize, fan_out: usize, input: &[R], out: &mut [R]) {
    let bias_off = off + fan_in * fan_out;
    for j in 0..fan_out {
        let row = &weights[off + j * fan_in..off + (j + 1) * fan_in];
        let mut acc = weights[bias_off + j];
        for (w, x) in row.iter().zip(input.iter()) {
            acc += *w * *x;
        }
        out[j] = acc;
    }
}

/// Activation record from a forward pass, consumed by [`backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache<R> {
    /// Input to each layer (`inputs[0]` is the network input).
    inputs: Vec<Vec<R>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<R>>,
    /// Post-activation of each layer (`post.last()` is the output).
    post: Vec<Vec<R>>,
}

/// Full forward pass returning the output and the activation cache.
pub fn forward<R: Real>(params: &MlpParams<R>, input: &[R]) -> Result<(Vec<R>, ForwardCache<R>)> {
    let layout = &params.layout;
    if input.len() != layout.input_dim {
        return Err(CoreError::invalid(format!(
            "input length {} does not match layout input dim {}",
            input.len(),
            layout.input_dim
        )));
    }
    let mut cache = ForwardCache {
        inputs: Vec::with_capacity(layout.num_layers()),
        pre: Vec::with_capacity(layout.num_layers()),
        post: Vec::with_capacity(layout.num_layers()),
    };
    let mut x = input.to_vec();
    let mut off = 0;
    for (l, (fan_in, fan_out)) in layout.layer_dims().into_iter().enumerate() {
        let mut pre = vec![R::zero(); fan_out];
        affine(&params.weights, off, fan_in, fan_out, &x, &mut pre);
        let act = layout.activation_of(l);
        let post: Vec<R> = pre.iter().map(|&z| act.apply(z)).collect();
        cache.inputs.push(x);
        cache.pre.push(pre);
        x = post.clone();
        cache.post.push(post);
        off += (fan_in + 1) * fan_out;
    }
    Ok((x, cache))
}

/// Reusable buffers for cache-free evaluation.
#[derive(Clone, Debug, Default)]
pub struct MlpScratch<R> {
    a: Vec<R>,
    b: Vec<R>,
}

impl<R: Real> MlpScratch<R> {
    pub fn new() -> Self {
        MlpScratch {
            a: Vec::new(),
            b: Vec::new(),
        }
    }
}

/// Allocation-free forward pass over a raw flat weight vector. Produces
/// bit-identical outputs to [`forward`] for the same layout and weights.
pub fn forward_value<'s, R: Real>(
    layout: &MlpLayout,
    weights: &[R],
    input: &[R],
    scratch: &'s mut MlpScratch<R>,
) -> Result<&'s [R]> {
    if input.len() != layout.input_dim {
        return Err(CoreError::invalid(format!(
            "input length {} does not match layout input dim {}",
            input.len(),
            layout.input_dim
        )));
    }
    if weights.len() != layout.flat_len() {
        return Err(CoreError::invalid(format!(
            "flat vector length {} does not match layout ({} expected)",
            weights.len(),
            layout.flat_len()
        )));
    }
    let width = layout.max_width();
    scratch.a.resize(width, R::zero());
    scratch.b.resize(width, R::zero());
    scratch.a[..input.len()].copy_from_slice(input);

    let mut off = 0;
    let mut out_len = input.len();
    for (l, (fan_in, fan_out)) in layout.layer_dims().into_iter().enumerate() {
        {
            let (src, dst) = (&scratch.a[..fan_in], &mut scratch.b[..fan_out]);
            affine(weights, off, fan_in, fan_out, src, dst);
            let act = layout.activation_of(l);
            for z in dst.iter_mut() {
                *z = act.apply(*z);
            }
        }
        std::mem::swap(&mut scratch.a, &mut scratch.b);
        out_len = fan_out;
        off += (fan_in + 1) * fan_out;
    }
    Ok(&scratch.a[..out_len])
}

/// Exact analytic gradients of `output_gradᵀ · output` with respect to all
/// parameters and the network input.
pub fn backward<R: Real>(
    params: &MlpParams<R>,
    cache: &ForwardCache<R>,
    output_grad: &[R],
) -> Result<(ParamGrad<R>, Vec<R>)> {
    let layout = &params.layout;
    let dims = layout.layer_dims();
    if cache.inputs.len() != dims.len()
        || cache.inputs[0].len() != layout.input_dim
        || cache
            .post
            .iter()
            .zip(&dims)
            .any(|(p, &(_, o))| p.len() != o)
    {
        return Err(CoreError::invalid("cache does not match network layout"));
    }
    if output_grad.len() != layout.output_dim {
        return Err(CoreError::invalid(format!(
            "output grad length {} does not match output dim {}",
            output_grad.len(),
            layout.output_dim
        )));
    }

    let mut grad = vec![R::zero(); layout.flat_len()];
    let layer_offsets: Vec<usize> = {
        let mut offs = Vec::with_capacity(dims.len());
        let mut off = 0;
        for &(i, o) in &dims {
            offs.push(off);
            off += (i + 1) * o;
        }
        offs
    };

    // delta for the last layer
    let last = dims.len() - 1;
    let mut delta: Vec<R> = output_grad
        .iter()
        .zip(&cache.post[last])
        .map(|(&g, &a)| g * layout.activation_of(last).derivative_from_output(a))
        .collect();

    for l in (0..dims.len()).rev() {
        let (fan_in, fan_out) = dims[l];
        let off = layer_offsets[l];
        let input = &cache.inputs[l];
        // dW[j,k] = delta[j] * input[k]; db[j] = delta[j]
        for j in 0..fan_out {
            let d = delta[j];
            let row = &mut grad[off + j * fan_in..off + (j + 1) * fan_in];
            for (g, x) in row.iter_mut().zip(input.iter()) {
                *g = d * *x;
            }
            grad[off + fan_in * fan_out + j] = d;
        }
        // propagate: prev[k] = Σ_j W[j,k] delta[j]
        let mut prev = vec![R::zero(); fan_in];
        for j in 0..fan_out {
            let d = delta[j];
            let row = &params.weights[off + j * fan_in..off + (j + 1) * fan_in];
            for (p, w) in prev.iter_mut().zip(row.iter()) {
                *p += *w * d;
            }
        }
        if l > 0 {
            let act = layout.activation_of(l - 1);
            for (p, a) in prev.iter_mut().zip(cache.post[l - 1].iter()) {
                *p *= act.derivative_from_output(*a);
            }
        }
        delta = prev;
    }

    Ok((ParamGrad { flat: grad }, delta))
}

/// One gradient-descent step: the gradient is rescaled to a global L2 norm
/// of at most `clip_norm`, then `w ← w − lr (g + l2 w)`.
pub fn sgd_step<R: Real>(
    params: &MlpParams<R>,
    grad: &ParamGrad<R>,
    lr: R,
    clip_norm: R,
    l2: R,
) -> MlpParams<R> {
    debug_assert_eq!(grad.flat.len(), params.weights.len());
    let norm = grad
        .flat
        .iter()
        .map(|&g| g * g)
        .sum::<R>()
        .sqrt();
    let scale = if norm > clip_norm {
        clip_norm / norm
    } else {
        R::one()
    };
    let weights = params
        .weights
        .iter()
        .zip(&grad.flat)
        .map(|(&w, &g)| w - lr * (g * scale + l2 * w))
        .collect();
    MlpParams {
        layout: params.layout.clone(),
        weights,
    }
}

/// Huber loss value and slope at residual `e`:
/// `e²/2` for `|e| ≤ κ`, `κ|e| − κ²/2` beyond.
pub fn huber<R: Real>(e: R, kappa: R) -> (R, R) {
    if e.abs() <= kappa {
        (e * e / R::real(2.0), e)
    } else {
        (
            kappa * e.abs() - kappa * kappa / R::real(2.0),
            kappa * e.signum(),
        )
    }
}

/// Squared-error loss value `e²/2` and slope `e`.
pub fn mse<R: Real>(e: R) -> (R, R) {
    (e * e / R::real(2.0), e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn layout(i: usize, h: &[usize], o: usize, out_act: Activation) -> MlpLayout {
        MlpLayout::new(i, h.to_vec(), o, out_act).unwrap()
    }

    fn random_params(lay: MlpLayout, seed: u64) -> MlpParams<f64> {
        MlpParams::init(lay, seed)
    }

    #[test]
    fn init_is_deterministic() {
        let a = random_params(layout(7, &[64, 64], 3, Activation::Tanh), 9);
        let b = random_params(layout(7, &[64, 64], 3, Activation::Tanh), 9);
        assert_eq!(a.weights, b.weights);
        let c = random_params(layout(7, &[64, 64], 3, Activation::Tanh), 10);
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn flat_len_counting() {
        // independent count: per layer (in + 1) * out
        let lay = layout(7, &[64, 64], 3, Activation::Tanh);
        let expected = (7 + 1) * 64 + (64 + 1) * 64 + (64 + 1) * 3;
        assert_eq!(expected, 4867);
        assert_eq!(lay.flat_len(), expected);
        assert_eq!(random_params(lay, 1).weights.len(), 4867);
    }

    #[test]
    fn init_biases_zero() {
        let p = random_params(layout(3, &[5], 2, Activation::Identity), 4);
        for (_, biases) in p.to_layers() {
            assert!(biases.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn forward_zero_weights() {
        let p = MlpParams::<f64>::zeros(layout(4, &[6], 2, Activation::Identity));
        let (out, _) = forward(&p, &[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn forward_identity_single_layer() {
        let lay = layout(3, &[], 3, Activation::Identity);
        let mut w = vec![0.0; lay.flat_len()];
        for i in 0..3 {
            w[i * 3 + i] = 1.0;
        }
        let p = MlpParams::from_flat(lay, w).unwrap();
        let (out, _) = forward(&p, &[0.3, -0.7, 2.0]).unwrap();
        assert_eq!(out, vec![0.3, -0.7, 2.0]);
    }

    /// Straight-line reimplementation of the forward pass on the layer
    /// view, used as an oracle.
    fn forward_oracle(p: &MlpParams<f64>, input: &[f64]) -> Vec<f64> {
        let layers = p.to_layers();
        let n = layers.len();
        let mut x = input.to_vec();
        for (l, (rows, biases)) in layers.iter().enumerate() {
            let mut next = Vec::with_capacity(rows.len());
            for (row, &b) in rows.iter().zip(biases) {
                let z: f64 = b + row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>();
                next.push(if l + 1 == n {
                    match p.layout.output_activation {
                        Activation::Identity => z,
                        Activation::Tanh => z.tanh(),
                    }
                } else {
                    z.tanh()
                });
            }
            x = next;
        }
        x
    }

    #[test]
    fn forward_matches_oracle() {
        let p = random_params(layout(5, &[8, 6], 4, Activation::Tanh), 77);
        let input = [0.4, -0.3, 0.9, -1.2, 0.1];
        let (out, _) = forward(&p, &input).unwrap();
        let expected = forward_oracle(&p, &input);
        for (a, b) in out.iter().zip(&expected) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn forward_value_bit_equals_forward() {
        let p = random_params(layout(7, &[16, 16], 3, Activation::Tanh), 5);
        let input = [0.1, -0.4, 0.2, 0.9, -1.0, 0.3, 0.0];
        let (out, _) = forward(&p, &input).unwrap();
        let mut scratch = MlpScratch::new();
        let fast = forward_value(&p.layout, &p.weights, &input, &mut scratch).unwrap();
        assert_eq!(out.as_slice(), fast);
    }

    #[test]
    fn forward_rejects_dim_mismatch() {
        let p = random_params(layout(3, &[4], 1, Activation::Identity), 0);
        assert!(forward(&p, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn backward_zero_output_grad() {
        let p = random_params(layout(3, &[5], 2, Activation::Tanh), 3);
        let (_, cache) = forward(&p, &[0.5, -0.5, 1.0]).unwrap();
        let (grad, input_grad) = backward(&p, &cache, &[0.0, 0.0]).unwrap();
        assert!(grad.flat.iter().all(|&g| g == 0.0));
        assert!(input_grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn tanh_derivative_at_zero_preactivation() {
        // single tanh unit with zero weights: pre-activation 0, so the
        // local slope through the layer is exactly 1
        let lay = layout(1, &[], 1, Activation::Tanh);
        let p = MlpParams::<f64>::zeros(lay);
        let (_, cache) = forward(&p, &[0.7]).unwrap();
        let (grad, _) = backward(&p, &cache, &[1.0]).unwrap();
        // d out / d w = tanh'(0) * input = 1 * 0.7
        assert_eq!(grad.flat[0], 0.7);
        // d out / d b = tanh'(0) = 1
        assert_eq!(grad.flat[1], 1.0);
    }

    /// Scalar loss `g · f(x)` with fixed coefficients, for finite-difference
    /// checking of all parameter and input gradients.
    fn fd_check(p: &MlpParams<f64>, input: &[f64], coeffs: &[f64]) -> f64 {
        let h = 1e-5;
        let loss = |params: &MlpParams<f64>, inp: &[f64]| -> f64 {
            let (out, _) = forward(params, inp).unwrap();
            out.iter().zip(coeffs).map(|(o, c)| o * c).sum()
        };
        let (_, cache) = forward(p, input).unwrap();
        let (grad, input_grad) = backward(p, &cache, coeffs).unwrap();

        let mut max_rel: f64 = 0.0;
        for i in 0..p.weights.len() {
            let mut plus = p.clone();
            plus.weights[i] += h;
            let mut minus = p.clone();
            minus.weights[i] -= h;
            let num = (loss(&plus, input) - loss(&minus, input)) / (2.0 * h);
            let a = grad.flat[i];
            max_rel = max_rel.max((a - num).abs() / a.abs().max(num.abs()).max(1e-4));
        }
        for i in 0..input.len() {
            let mut plus = input.to_vec();
            plus[i] += h;
            let mut minus = input.to_vec();
            minus[i] -= h;
            let num = (loss(p, &plus) - loss(p, &minus)) / (2.0 * h);
            let a = input_grad[i];
            max_rel = max_rel.max((a - num).abs() / a.abs().max(num.abs()).max(1e-4));
        }
        max_rel
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..4u64 {
            let p = random_params(layout(4, &[8], 2, Activation::Tanh), seed);
            let input: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let coeffs: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(fd_check(&p, &input, &coeffs) < 1e-5);
        }
    }

    #[test]
    fn sgd_no_op_on_zero_grad() {
        let p = random_params(layout(3, &[4], 2, Activation::Tanh), 8);
        let grad = ParamGrad {
            flat: vec![0.0; p.weights.len()],
        };
        let next = sgd_step(&p, &grad, 0.1, 1.0, 0.0);
        assert_eq!(next.weights, p.weights);
    }

    #[test]
    fn sgd_clips_to_unit_norm() {
        let lay = layout(2, &[], 2, Activation::Identity);
        let p = MlpParams::<f64>::zeros(lay.clone());
        // gradient of norm 5
        let mut flat = vec![0.0; lay.flat_len()];
        flat[0] = 3.0;
        flat[1] = 4.0;
        let next = sgd_step(&p, &ParamGrad { flat }, 1.0, 1.0, 0.0);
        // effective gradient has norm exactly 1
        let applied: f64 = next.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert_relative_eq!(applied, 1.0, epsilon = 1e-15);
        assert_relative_eq!(next.weights[0], -3.0 / 5.0, epsilon = 1e-15);
        assert_relative_eq!(next.weights[1], -4.0 / 5.0, epsilon = 1e-15);
    }

    #[test]
    fn sgd_l2_decay_hand_value() {
        let lay = layout(1, &[], 1, Activation::Identity);
        let p = MlpParams::from_flat(lay.clone(), vec![1.0, 0.0]).unwrap();
        let grad = ParamGrad {
            flat: vec![0.0; 2],
        };
        let next = sgd_step(&p, &grad, 0.01, 1.0, 0.1);
        assert_relative_eq!(next.weights[0], 0.999, epsilon = 1e-15);
    }

    #[test]
    fn sgd_infinite_clip_is_plain_descent() {
        let p = random_params(layout(3, &[4], 2, Activation::Tanh), 2);
        let flat: Vec<f64> = (0..p.weights.len()).map(|i| (i as f64) * 0.5).collect();
        let grad = ParamGrad { flat: flat.clone() };
        let next = sgd_step(&p, &grad, 0.1, f64::INFINITY, 0.0);
        for ((n, w), g) in next.weights.iter().zip(&p.weights).zip(&flat) {
            assert_eq!(*n, w - 0.1 * g);
        }
    }

    #[test]
    fn huber_examples() {
        assert_eq!(huber(0.0, 1.0), (0.0, 0.0));

        // both branch formulas agree at |e| = kappa
        for kappa in [0.5, 1.0, 2.5] {
            let quadratic = kappa * kappa / 2.0;
            let linear = kappa * kappa - kappa * kappa / 2.0;
            assert_eq!(quadratic, linear);
            let (v, s) = huber(kappa, kappa);
            assert_eq!(v, quadratic);
            assert_eq!(s, kappa);
        }

        let (v, s) = huber(2.0, 1.0);
        assert_relative_eq!(v, 1.5, epsilon = 1e-15);
        assert_eq!(s, 1.0);
        let (v, s) = huber(-2.0, 1.0);
        assert_relative_eq!(v, 1.5, epsilon = 1e-15);
        assert_eq!(s, -1.0);
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(0.0), (0.0, 0.0));
        assert_eq!(mse(2.0), (2.0, 2.0));
        // slope vs central finite difference at e = 0.7
        let h = 1e-6;
        let num = (mse(0.7 + h).0 - mse(0.7 - h).0) / (2.0 * h);
        assert_relative_eq!(mse(0.7).1, num, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn flatten_roundtrip(seed in 0u64..1000, hidden in 1usize..8, inp in 1usize..6, out in 1usize..4) {
            let lay = layout(inp, &[hidden], out, Activation::Tanh);
            let p = random_params(lay.clone(), seed);
            let rebuilt = MlpParams::from_layers(lay, &p.to_layers()).unwrap();
            prop_assert_eq!(rebuilt.weights, p.weights);
        }

        #[test]
        fn huber_continuous_at_kappa(kappa in 0.01f64..10.0, eps in 1e-9f64..1e-6) {
            let (inside, _) = huber(kappa - eps, kappa);
            let (outside, _) = huber(kappa + eps, kappa);
            prop_assert!((outside - inside).abs() < 3.0 * eps * kappa.max(1.0));
            // slope saturates past kappa
            let (_, s) = huber(kappa * 5.0, kappa);
            prop_assert_eq!(s, kappa);
        }
    }
}
