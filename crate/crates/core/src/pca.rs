//! Principal component analysis over recorded weight and state trajectories.
//!
//! Components come from deflated power iteration on the sample covariance
//! (materialized only for low-dimensional data). A deterministic sign
//! convention (the largest-magnitude entry of each component is positive)
//! keeps bases reproducible across runs.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::real::Real;

const POWER_MAX_ITERS: usize = 10_000;
/// Fixed stream for the power-iteration start vectors.
const POWER_SEED: u64 = 0x9e3779b97f4a7c15;
/// Above this dimension the covariance is applied matrix-free.
const DENSE_DIM_LIMIT: usize = 64;

/// Mean vector plus ordered orthonormal principal directions with their
/// explained-variance ratios.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaBasis<R> {
    pub mean: Vec<R>,
    pub components: Vec<Vec<R>>,
    pub explained_variance_ratio: Vec<R>,
}

impl<R: Real> PcaBasis<R> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }
}

enum CovOp<R> {
    /// Explicit `dim × dim` covariance (row-major).
    Dense { dim: usize, mat: Vec<R> },
    /// `C v = Σ d_i (d_i · v) / (n − 1)` over the centered samples.
    Deviations { rows: Vec<Vec<R>>, scale: R },
}

impl<R: Real> CovOp<R> {
    fn apply(&self, v: &[R], out: &mut [R]) {
        match self {
            CovOp::Dense { dim, mat } => {
                for j in 0..*dim {
                    let row = &mat[j * dim..(j + 1) * dim];
                    out[j] = row.iter().zip(v).map(|(&m, &x)| m * x).sum();
                }
            }
            CovOp::Deviations { rows, scale } => {
                for o in out.iter_mut() {
                    *o = R::zero();
                }
                for d in rows {
                    let c: R = d.iter().zip(v).map(|(&a, &b)| a * b).sum();
                    for (o, &a) in out.iter_mut().zip(d) {
                        *o += a * c;
                    }
                }
                for o in out.iter_mut() {
                    *o *= *scale;
                }
            }
        }
    }
}

/// Fit the top-`k` principal components of `samples`.
///
/// Requires at least two samples, `k ≤ dim` and `k ≤ samples − 1`. Fails
/// with a zero-variance error when the data carry no variance (all samples
/// identical, or fewer distinct directions than requested components).
pub fn fit_pca<R: Real>(samples: &[Vec<R>], k: usize) -> Result<PcaBasis<R>> {
    let n = samples.len();
    if n < 2 {
        return Err(CoreError::invalid("PCA needs at least 2 samples"));
    }
    let dim = samples[0].len();
    if dim == 0 || samples.iter().any(|s| s.len() != dim) {
        return Err(CoreError::invalid("PCA samples must share a nonzero dim"));
    }
    if k < 1 || k > dim || k > n - 1 {
        return Err(CoreError::invalid(format!(
            "component count {k} out of range (dim {dim}, samples {n})"
        )));
    }

    let nf = R::real(n as f64);
    let mut mean = vec![R::zero(); dim];
    for s in samples {
        for (m, &x) in mean.iter_mut().zip(s) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= nf;
    }

    let rows: Vec<Vec<R>> = samples
        .iter()
        .map(|s| s.iter().zip(&mean).map(|(&x, &m)| x - m).collect())
        .collect();
    let scale = R::one() / R::real((n - 1) as f64);
    let total_variance: R = rows
        .iter()
        .map(|d| d.iter().map(|&x| x * x).sum::<R>())
        .sum::<R>()
        * scale;

    let mean_sq: R = mean.iter().map(|&m| m * m).sum();
    let floor = R::real(4.0 * n as f64) * R::epsilon() * R::epsilon() * mean_sq.max(R::one());
    if total_variance <= floor {
        return Err(CoreError::ZeroVariance(
            "all samples are identical".into(),
        ));
    }

    let op = if dim <= DENSE_DIM_LIMIT {
        let mut mat = vec![R::zero(); dim * dim];
        for d in &rows {
            for j in 0..dim {
                let dj = d[j] * scale;
                let row = &mut mat[j * dim..(j + 1) * dim];
                for (m, &x) in row.iter_mut().zip(d) {
                    *m += dj * x;
                }
            }
        }
        CovOp::Dense { dim, mat }
    } else {
        CovOp::Deviations { rows, scale }
    };

    let tol = R::real(1e-12).max(R::epsilon() * R::real(4.0));
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut components: Vec<Vec<R>> = Vec::with_capacity(k);
    let mut eigenvalues: Vec<R> = Vec::with_capacity(k);

    for c in 0..k {
        let mut v: Vec<R> = (0..dim)
            .map(|_| R::real(rng.gen_range(-1.0..1.0)))
            .collect();
        orthogonalize(&mut v, &components);
        normalize(&mut v)?;

        let mut buf = vec![R::zero(); dim];
        for _ in 0..POWER_MAX_ITERS {
            op.apply(&v, &mut buf);
            // deflate previously extracted directions
            for (comp, &lambda) in components.iter().zip(&eigenvalues) {
                let p: R = comp.iter().zip(&buf).map(|(&a, &b)| a * b).sum();
                for (b, &a) in buf.iter_mut().zip(comp) {
                    *b -= lambda * p * a;
                }
            }
            orthogonalize(&mut buf, &components);
            normalize(&mut buf).map_err(|_| {
                CoreError::ZeroVariance(format!(
                    "no variance left for component {c} (data rank < {k})"
                ))
            })?;
            let delta = buf
                .iter()
                .zip(&v)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<R>()
                .sqrt();
            v.copy_from_slice(&buf);
            if delta <= tol {
                break;
            }
        }

        // Rayleigh quotient on the deflated operator
        op.apply(&v, &mut buf);
        for (comp, &lambda) in components.iter().zip(&eigenvalues) {
            let p: R = comp.iter().zip(&buf).map(|(&a, &b)| a * b).sum();
            for (b, &a) in buf.iter_mut().zip(comp) {
                *b -= lambda * p * a;
            }
        }
        let lambda: R = v.iter().zip(&buf).map(|(&a, &b)| a * b).sum();
        // NaN also fails this test and is reported as missing variance
        if lambda.is_nan() || lambda <= total_variance * R::real(1e-14) {
            return Err(CoreError::ZeroVariance(format!(
                "no variance left for component {c} (data rank < {k})"
            )));
        }
        fix_sign(&mut v);
        components.push(v);
        eigenvalues.push(lambda);
    }

    let explained_variance_ratio = eigenvalues
        .iter()
        .map(|&l| l / total_variance)
        .collect();
    Ok(PcaBasis {
        mean,
        components,
        explained_variance_ratio,
    })
}

fn orthogonalize<R: Real>(v: &mut [R], basis: &[Vec<R>]) {
    for comp in basis {
        let p: R = comp.iter().zip(v.iter()).map(|(&a, &b)| a * b).sum();
        for (x, &a) in v.iter_mut().zip(comp) {
            *x -= p * a;
        }
    }
}

fn normalize<R: Real>(v: &mut [R]) -> Result<R> {
    let norm = v.iter().map(|&x| x * x).sum::<R>().sqrt();
    if norm == R::zero() || !norm.is_finite() {
        return Err(CoreError::ZeroVariance("cannot normalize zero vector".into()));
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    Ok(norm)
}

/// Sign convention: the first largest-magnitude entry is made positive.
fn fix_sign<R: Real>(v: &mut [R]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < R::zero() {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Coordinates of `v` in the basis: `⟨v − mean, component_i⟩`.
pub fn project<R: Real>(basis: &PcaBasis<R>, v: &[R]) -> Result<Vec<R>> {
    if v.len() != basis.dim() {
        return Err(CoreError::invalid(format!(
            "vector dim {} does not match basis dim {}",
            v.len(),
            basis.dim()
        )));
    }
    Ok(basis
        .components
        .iter()
        .map(|c| {
            c.iter()
                .zip(v.iter().zip(&basis.mean))
                .map(|(&ci, (&vi, &mi))| ci * (vi - mi))
                .sum()
        })
        .collect())
}

/// Point on the plane through `reference` spanned by the first two
/// components: `reference + α δ + β η`.
pub fn reconstruct<R: Real>(
    basis: &PcaBasis<R>,
    alpha: R,
    beta: R,
    reference: &[R],
) -> Result<Vec<R>> {
    if basis.num_components() < 2 {
        return Err(CoreError::invalid(
            "plane reconstruction needs at least 2 components",
        ));
    }
    if reference.len() != basis.dim() {
        return Err(CoreError::invalid(format!(
            "reference dim {} does not match basis dim {}",
            reference.len(),
            basis.dim()
        )));
    }
    let delta = &basis.components[0];
    let eta = &basis.components[1];
    Ok(reference
        .iter()
        .zip(delta.iter().zip(eta))
        .map(|(&r, (&d, &e))| r + alpha * d + beta * e)
        .collect())
}

const BASIS_MAGIC: &[u8; 8] = b"PCAB0001";

/// Persist an `f64` basis: magic, dim, k, then mean / components / ratios
/// as little-endian float64.
pub fn save_basis(path: &Path, basis: &PcaBasis<f64>) -> Result<()> {
    let mut bytes = Vec::with_capacity(
        16 + 8 * (basis.dim() * (1 + basis.num_components()) + basis.num_components()),
    );
    bytes.extend_from_slice(BASIS_MAGIC);
    bytes.extend_from_slice(&(basis.dim() as u64).to_le_bytes());
    bytes.extend_from_slice(&(basis.num_components() as u64).to_le_bytes());
    for &m in &basis.mean {
        bytes.extend_from_slice(&m.to_le_bytes());
    }
    for c in &basis.components {
        for &x in c {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    for &r in &basis.explained_variance_ratio {
        bytes.extend_from_slice(&r.to_le_bytes());
    }
    let mut f = std::fs::File::create(path).map_err(|e| CoreError::io(path, e))?;
    f.write_all(&bytes).map_err(|e| CoreError::io(path, e))
}

pub fn load_basis(path: &Path) -> Result<PcaBasis<f64>> {
    let bytes = std::fs::read(path).map_err(|e| CoreError::io(path, e))?;
    if bytes.len() < 24 || &bytes[..8] != BASIS_MAGIC {
        return Err(CoreError::corrupt(path, "bad basis header"));
    }
    let dim = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let k = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let expected = 24 + 8 * (dim * (1 + k) + k);
    if bytes.len() != expected {
        return Err(CoreError::corrupt(
            path,
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let mut floats = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mean: Vec<f64> = floats.by_ref().take(dim).collect();
    let components: Vec<Vec<f64>> = (0..k)
        .map(|_| floats.by_ref().take(dim).collect())
        .collect();
    let explained_variance_ratio: Vec<f64> = floats.collect();
    Ok(PcaBasis {
        mean,
        components,
        explained_variance_ratio,
    })
}
