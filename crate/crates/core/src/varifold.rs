//! Gaussian oriented-varifold kernel: inner products, squared distances and
//! Gram matrices between discrete varifolds.
//!
//! For atoms `(c_i, t_i, w_i)` and `(d_j, s_j, v_j)` the inner product is
//!
//! ```text
//! <a, b> = Σ_i Σ_j w_i v_j exp(-|c_i - d_j|² / σ_x²) exp(-|t_i - s_j|² / σ_t²)
//! ```
//!
//! and the squared distance follows by polarization,
//! `|a - b|² = <a, a> + <b, b> - 2 <a, b>`.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{DiscreteVarifold, PolygonalCurve};

/// Relative tolerance below which a negative squared distance is clamped to
/// zero. The scale is `|a|² + |b|²`.
pub const NEGATIVE_CLAMP_TOL: f64 = 1e-9;

/// Rows of the first operand handled by one parallel work unit.
const ROW_BLOCK: usize = 64;

/// Bandwidths of the separable Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    sigma_x: f64,
    sigma_t: f64,
}

impl KernelParams {
    pub fn new(sigma_x: f64, sigma_t: f64) -> Result<Self> {
        for (name, v) in [("sigma_x", sigma_x), ("sigma_t", sigma_t)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { sigma_x, sigma_t })
    }

    /// `σ_x = σ`, `σ_t = ratio · σ`.
    pub fn coupled(sigma: f64, ratio: f64) -> Result<Self> {
        Self::new(sigma, ratio * sigma)
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    pub fn sigma_t(&self) -> f64 {
        self.sigma_t
    }

    /// Kernel value for one pair of (position, tangent) points.
    pub fn eval(&self, x: &[f64], tx: &[f64], y: &[f64], ty: &[f64]) -> f64 {
        let dx: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        let dt: f64 = tx.iter().zip(ty).map(|(a, b)| (a - b) * (a - b)).sum();
        (-(dx / (self.sigma_x * self.sigma_x) + dt / (self.sigma_t * self.sigma_t))).exp()
    }
}

fn check_dims(a: &DiscreteVarifold, b: &DiscreteVarifold) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Total order on atom lists, used to fix the summation order so that
/// `inner(a, b) == inner(b, a)` bit for bit.
fn canonical_cmp(a: &DiscreteVarifold, b: &DiscreteVarifold) -> Ordering {
    let lex = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    };
    a.len()
        .cmp(&b.len())
        .then_with(|| lex(a.centers_flat(), b.centers_flat()))
        .then_with(|| lex(a.tangents_flat(), b.tangents_flat()))
        .then_with(|| lex(a.weights_slice(), b.weights_slice()))
}

/// Kernel sum over rows `rows` of `a` against all of `b`, in index order.
fn block_sum(
    a: &DiscreteVarifold,
    b: &DiscreteVarifold,
    k: &KernelParams,
    rows: std::ops::Range<usize>,
) -> f64 {
    let d = a.dim();
    let ix = 1.0 / (k.sigma_x * k.sigma_x);
    let it = 1.0 / (k.sigma_t * k.sigma_t);
    let (bc, bt, bw) = (b.centers_flat(), b.tangents_flat(), b.weights_slice());
    let mut total = 0.0;
    for i in rows {
        let ci = a.center(i);
        let ti = a.tangent(i);
        let mut row = 0.0;
        for j in 0..bw.len() {
            let cj = &bc[j * d..(j + 1) * d];
            let tj = &bt[j * d..(j + 1) * d];
            let mut dx = 0.0;
            let mut dt = 0.0;
            for m in 0..d {
                let u = ci[m] - cj[m];
                let v = ti[m] - tj[m];
                dx += u * u;
                dt += v * v;
            }
            row += bw[j] * (-(dx * ix + dt * it)).exp();
        }
        total += a.weight(i) * row;
    }
    total
}

/// Kernel inner product `<μ_a, μ_b>` using the given evaluation strategy.
pub fn inner_with(
    a: &DiscreteVarifold,
    b: &DiscreteVarifold,
    k: &KernelParams,
    exec: Exec,
) -> Result<f64> {
    check_dims(a, b)?;
    let (a, b) = if canonical_cmp(a, b) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    };
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    Ok(match exec {
        Exec::Sequential => block_sum(a, b, k, 0..a.len()),
        Exec::Parallel => {
            let blocks: Vec<f64> = (0..a.len().div_ceil(ROW_BLOCK))
                .into_par_iter()
                .map(|blk| {
                    let lo = blk * ROW_BLOCK;
                    block_sum(a, b, k, lo..(lo + ROW_BLOCK).min(a.len()))
                })
                .collect();
            blocks.into_iter().sum()
        }
    })
}

/// Sequential reference inner product.
pub fn inner(a: &DiscreteVarifold, b: &DiscreteVarifold, k: &KernelParams) -> Result<f64> {
    inner_with(a, b, k, Exec::Sequential)
}

pub fn norm_sq(a: &DiscreteVarifold, k: &KernelParams) -> f64 {
    inner(a, a, k).expect("same dimension")
}

/// Combines cached norms and a cross term into a squared distance, clamping
/// small negative round-off to zero.
pub fn distance_sq_from_parts(norm_a: f64, norm_b: f64, cross: f64) -> Result<f64> {
    let d = norm_a + norm_b - 2.0 * cross;
    if d >= 0.0 {
        return Ok(d);
    }
    let scale = norm_a + norm_b;
    if -d <= NEGATIVE_CLAMP_TOL * scale {
        Ok(0.0)
    } else {
        Err(Error::NegativeDistance { value: d, scale })
    }
}

pub fn distance_sq_with(
    a: &DiscreteVarifold,
    b: &DiscreteVarifold,
    k: &KernelParams,
    exec: Exec,
) -> Result<f64> {
    check_dims(a, b)?;
    let na = inner_with(a, a, k, exec)?;
    let nb = inner_with(b, b, k, exec)?;
    let cross = inner_with(a, b, k, exec)?;
    distance_sq_from_parts(na, nb, cross)
}

/// Squared varifold distance `|μ_a - μ_b|²`.
pub fn distance_sq(a: &DiscreteVarifold, b: &DiscreteVarifold, k: &KernelParams) -> Result<f64> {
    distance_sq_with(a, b, k, Exec::Sequential)
}

/// Pairwise inner products. Entries are independent; in parallel mode they
/// are distributed over the rayon pool, each still summed sequentially, so
/// the result does not depend on the thread count.
pub fn gram(curves: &[DiscreteVarifold], k: &KernelParams, exec: Exec) -> Result<Vec<Vec<f64>>> {
    let n = curves.len();
    if let Some(first) = curves.first() {
        for c in curves {
            check_dims(first, c)?;
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let eval = |&(i, j): &(usize, usize)| inner(&curves[i], &curves[j], k);
    let values: Vec<f64> = match exec {
        Exec::Sequential => pairs.iter().map(eval).collect::<Result<_>>()?,
        Exec::Parallel => pairs.par_iter().map(eval).collect::<Result<_>>()?,
    };
    let mut g = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        g[i][j] = v;
        g[j][i] = v;
    }
    Ok(g)
}

/// Smooth displacement `φ(x) = x + ε sin(π ⟨ω, x⟩) u`.
///
/// `‖φ - id‖_∞ = ε` and `‖dφ - I‖ = ε π ‖ω‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation {
    pub amplitude: f64,
    pub frequency: Vec<f64>,
    pub direction: Vec<f64>,
}

impl Deformation {
    /// Frequency `ω e_1` and displacement along the unit vector `u`.
    pub fn sinusoidal(amplitude: f64, omega: f64, direction: &[f64]) -> Result<Self> {
        let n = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(n > 0.0) {
            return Err(Error::InvalidArgument("zero displacement direction".into()));
        }
        let mut frequency = vec![0.0; direction.len()];
        frequency[0] = omega;
        Ok(Self {
            amplitude,
            frequency,
            direction: direction.iter().map(|x| x / n).collect(),
        })
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        Self {
            amplitude,
            ..self.clone()
        }
    }

    pub fn apply_point(&self, x: &[f64]) -> Vec<f64> {
        let phase: f64 = x.iter().zip(&self.frequency).map(|(a, b)| a * b).sum();
        let s = self.amplitude * (std::f64::consts::PI * phase).sin();
        x.iter().zip(&self.direction).map(|(a, u)| a + s * u).collect()
    }

    /// Applies the displacement to every vertex.
    pub fn apply(&self, c: &PolygonalCurve) -> Result<PolygonalCurve> {
        if c.dim() != self.direction.len() || c.dim() != self.frequency.len() {
            return Err(Error::DimensionMismatch {
                expected: c.dim(),
                found: self.direction.len(),
            });
        }
        let mut flat = Vec::with_capacity(c.as_flat().len());
        for p in c.points() {
            flat.extend(self.apply_point(p));
        }
        PolygonalCurve::new(c.dim(), flat)
    }
}

/// Returns `(d²(X, φ·Y), d²(X, Y))`.
pub fn robustness_probe(
    x: &PolygonalCurve,
    y: &PolygonalCurve,
    phi: &Deformation,
    k: &KernelParams,
) -> Result<(f64, f64)> {
    let vx = x.to_varifold();
    let vy = y.to_varifold();
    let moved = phi.apply(y)?.to_varifold();
    Ok((distance_sq(&vx, &moved, k)?, distance_sq(&vx, &vy, k)?))
}
