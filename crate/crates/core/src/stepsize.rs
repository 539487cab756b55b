//! Spectral scalars built from a one-step memory `(s, y)`.
//!
//! Every scalar here is an approximation of a Hessian eigenvalue; the step
//! length used by the gradient iteration is its reciprocal.
//!
//! Ordering for any valid memory, with `m ∈ (0, 1]`:
//!
//! ```text
//! alpha_left <= bb1 <= vbb(m) <= bb2 <= alpha_right
//! ```
//!
//! and `alpha_left * alpha_right == bb1 * bb2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::dot;

/// Inner products of the last step `s = x_k − x_{k−1}` and gradient change
/// `y = g_k − g_{k−1}`, plus the angle statistics derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMemory {
    ss: f64,
    sy: f64,
    yy: f64,
    cos_theta: f64,
    sin_theta: f64,
    /// `cos²θ / (1 − cos²θ)`; `+∞` when `sinθ = 0`.
    n_ratio: f64,
}

impl StepMemory {
    pub fn from_products(ss: f64, sy: f64, yy: f64) -> Result<Self> {
        if !(ss.is_finite() && sy.is_finite() && yy.is_finite()) {
            return Err(Error::DegenerateMemory("non-finite inner product"));
        }
        if ss <= 0.0 {
            return Err(Error::DegenerateMemory("zero step s"));
        }
        if yy <= 0.0 {
            return Err(Error::DegenerateMemory("zero gradient change y"));
        }
        if sy <= 0.0 {
            return Err(Error::Curvature(sy));
        }
        let cos2 = ((sy / ss) * (sy / yy)).clamp(0.0, 1.0);
        let sin2 = 1.0 - cos2;
        let n_ratio = if sin2 == 0.0 {
            f64::INFINITY
        } else {
            cos2 / sin2
        };
        Ok(Self {
            ss,
            sy,
            yy,
            cos_theta: cos2.sqrt(),
            sin_theta: sin2.sqrt(),
            n_ratio,
        })
    }

    pub fn ss(&self) -> f64 {
        self.ss
    }

    pub fn sy(&self) -> f64 {
        self.sy
    }

    pub fn yy(&self) -> f64 {
        self.yy
    }

    pub fn cos_theta(&self) -> f64 {
        self.cos_theta
    }

    pub fn sin_theta(&self) -> f64 {
        self.sin_theta
    }

    pub fn n_ratio(&self) -> f64 {
        self.n_ratio
    }
}

/// Forms `s = x_cur − x_prev`, `y = g_cur − g_prev` and their inner products.
pub fn build_memory(
    x_prev: &[f64],
    x_cur: &[f64],
    g_prev: &[f64],
    g_cur: &[f64],
) -> Result<StepMemory> {
    let n = x_cur.len();
    for v in [x_prev, g_prev, g_cur] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    let s: Vec<f64> = x_cur.iter().zip(x_prev).map(|(a, b)| a - b).collect();
    let y: Vec<f64> = g_cur.iter().zip(g_prev).map(|(a, b)| a - b).collect();
    StepMemory::from_products(dot(&s, &s), dot(&s, &y), dot(&y, &y))
}

/// `(sᵀy/sᵀs, yᵀy/sᵀy)`.
pub fn bb_scalars(mem: &StepMemory) -> (f64, f64) {
    (mem.sy / mem.ss, mem.yy / mem.sy)
}

/// Positive root of
/// `φ(α) = m sᵀs α² − (2m − 1) sᵀy α + (m − 1) yᵀy`.
///
/// `m = 1` gives BB1; `m = 0` (where `φ` degenerates to a line) gives BB2.
/// The result is kept inside `[bb1, bb2]`.
pub fn vbb_scalar(mem: &StepMemory, m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::Domain(format!(
            "VBB parameter m = {m} outside [0, 1]"
        )));
    }
    let (bb1, bb2) = bb_scalars(mem);
    if m == 0.0 {
        return Ok(bb2);
    }
    if m == 1.0 {
        return Ok(bb1);
    }
    let b = (2.0 * m - 1.0) * mem.sy;
    let disc = (b * b - 4.0 * m * (m - 1.0) * mem.ss * mem.yy).max(0.0);
    let root = disc.sqrt();
    // Pick the cancellation-free branch of the quadratic formula.
    let alpha = if b >= 0.0 {
        (b + root) / (2.0 * m * mem.ss)
    } else {
        2.0 * (m - 1.0) * mem.yy / (b - root)
    };
    // bb1 can exceed bb2 by an ulp when s and y are nearly parallel
    Ok(alpha.clamp(bb1.min(bb2), bb1.max(bb2)))
}

/// Values of `m` outside `[0, 1]` at which the discriminant of `φ` vanishes:
/// `m₁ = (1 + √(1+n))/2 > 1`, `m₂ = (1 − √(1+n))/2 < 0` with
/// `n = cos²θ/(1 − cos²θ)`.
pub fn extreme_m(mem: &StepMemory) -> Result<(f64, f64)> {
    if mem.sin_theta == 0.0 || !mem.n_ratio.is_finite() {
        return Err(Error::DegenerateAngle(
            "s and y are parallel; extreme m values are unbounded",
        ));
    }
    let r = (1.0 + mem.n_ratio).sqrt();
    Ok(((1.0 + r) / 2.0, (1.0 - r) / 2.0))
}

/// The double roots of `φ` at the extreme `m` values:
/// `alpha_left = sᵀy / (sᵀs (1 + sinθ))`,
/// `alpha_right = sᵀy / (sᵀs (1 − sinθ))`.
///
/// `alpha_right` is evaluated as `bb2 (1 + sinθ)`, which is the same number
/// without the `1 − sinθ` cancellation.
pub fn left_right_scalars(mem: &StepMemory) -> Result<(f64, f64)> {
    let (bb1, bb2) = bb_scalars(mem);
    let sin = mem.sin_theta;
    if sin >= 1.0 {
        return Err(Error::DegenerateAngle("s and y are orthogonal"));
    }
    if sin == 0.0 {
        return Ok((bb1, bb1));
    }
    let p = 1.0 + sin;
    Ok((bb1 / p, bb2 * p))
}

/// Exact evaluation of `φ(α)` for the given `m`.
pub fn phi_residual(mem: &StepMemory, m: f64, alpha: f64) -> f64 {
    m * mem.ss * alpha * alpha - (2.0 * m - 1.0) * mem.sy * alpha + (m - 1.0) * mem.yy
}

/// Truncated scalars `max(prev_bb1, alpha_left)` and
/// `min(prev_bb2, alpha_right)`, where the previous values come from the
/// iteration before the one that produced `mem`.
pub fn ml_mr_scalars(mem: &StepMemory, prev_bb1: f64, prev_bb2: f64) -> Result<(f64, f64)> {
    if !(prev_bb1 > 0.0 && prev_bb1.is_finite()) || !(prev_bb2 > 0.0 && prev_bb2.is_finite()) {
        return Err(Error::Domain(format!(
            "previous BB values must be positive, got ({prev_bb1}, {prev_bb2})"
        )));
    }
    let (left, right) = left_right_scalars(mem)?;
    Ok((prev_bb1.max(left), prev_bb2.min(right)))
}

/// LEFT/RIGHT scalars with a constant factor `p` in place of `1 + sinθ`,
/// written through the squared gradient-component ratio `eps` of a 2-D
/// problem `diag(λ, 1)`:
///
/// ```text
/// left  = (λ ε + 1) / (p (ε + 1))
/// right = p (λ² ε + 1) / (λ ε + 1)
/// ```
///
/// `eps = +∞` (second component zero) yields the limits `λ/p` and `p λ`.
pub fn const_p_scalars(lambda: f64, eps: f64, p: f64) -> (f64, f64) {
    if eps.is_infinite() {
        return (lambda / p, p * lambda);
    }
    let left = (lambda * eps + 1.0) / (p * (eps + 1.0));
    let right = p * (lambda * lambda * eps + 1.0) / (lambda * eps + 1.0);
    (left, right)
}

/// Every scalar for one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepScalars {
    pub bb1: f64,
    pub bb2: f64,
    pub vbb: f64,
    pub alpha_left: f64,
    pub alpha_right: f64,
    pub alpha_ml: f64,
    pub alpha_mr: f64,
}

impl StepScalars {
    pub fn compute(mem: &StepMemory, m: f64, prev_bb1: f64, prev_bb2: f64) -> Result<Self> {
        let (bb1, bb2) = bb_scalars(mem);
        let (alpha_left, alpha_right) = left_right_scalars(mem)?;
        let (alpha_ml, alpha_mr) = ml_mr_scalars(mem, prev_bb1, prev_bb2)?;
        Ok(Self {
            bb1,
            bb2,
            vbb: vbb_scalar(mem, m)?,
            alpha_left,
            alpha_right,
            alpha_ml,
            alpha_mr,
        })
    }
}
