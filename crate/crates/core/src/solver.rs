//! Gradient iteration `x_{k+1} = x_k − g_k / α_k` with a pluggable rule for
//! the spectral scalar `α_k`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{dot, norm, QuadraticProblem};
use crate::stepsize::{
    bb_scalars, const_p_scalars, left_right_scalars, ml_mr_scalars, vbb_scalar, StepMemory,
};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAXIT: usize = 10_000;

/// Rule that turns the one-step memory into `α_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StepPolicy {
    Bb1,
    Bb2,
    Vbb {
        m: f64,
    },
    Left,
    Right,
    #[serde(rename = "ML")]
    ModifiedLeft,
    #[serde(rename = "MR")]
    ModifiedRight,
    /// LEFT with `1 + sinθ_k` frozen to `p`. Two-dimensional problems only.
    ConstPLeft {
        p: f64,
    },
    /// RIGHT with `1 + sinθ_k` frozen to `p`. Two-dimensional problems only.
    ConstPRight {
        p: f64,
    },
}

impl StepPolicy {
    /// Checks parameter domains. Constant-`p` policies accept the closed
    /// interval `[1, 2]`: `p = 1` reproduces BB1/BB2 and `p = 2` is the
    /// divergence boundary that sweeps are expected to probe.
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepPolicy::Vbb { m } if !(0.0..=1.0).contains(&m) => {
                Err(Error::Domain(format!("VBB needs m in [0, 1], got {m}")))
            }
            StepPolicy::ConstPLeft { p } | StepPolicy::ConstPRight { p }
                if !(1.0..=2.0).contains(&p) =>
            {
                Err(Error::Domain(format!(
                    "constant-p policy needs p in [1, 2], got {p}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn is_const_p(&self) -> bool {
        matches!(
            self,
            StepPolicy::ConstPLeft { .. } | StepPolicy::ConstPRight { .. }
        )
    }

    /// Builds a policy from a method name and its optional parameters.
    pub fn from_parts(name: &str, m: Option<f64>, p: Option<f64>) -> Result<Self> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| Error::Usage(format!("method {name} requires --{flag}")))
        };
        let policy = match name.to_ascii_uppercase().replace('-', "_").as_str() {
            "BB1" => StepPolicy::Bb1,
            "BB2" => StepPolicy::Bb2,
            "VBB" => StepPolicy::Vbb { m: need(m, "m")? },
            "LEFT" => StepPolicy::Left,
            "RIGHT" => StepPolicy::Right,
            "ML" => StepPolicy::ModifiedLeft,
            "MR" => StepPolicy::ModifiedRight,
            "CONST_P_LEFT" => StepPolicy::ConstPLeft { p: need(p, "p")? },
            "CONST_P_RIGHT" => StepPolicy::ConstPRight { p: need(p, "p")? },
            other => return Err(Error::Usage(format!("unknown method {other:?}"))),
        };
        policy.validate()?;
        Ok(policy)
    }
}

impl FromStr for StepPolicy {
    type Err = Error;

    /// Accepts `BB1`, `VBB:0.5`, `CONST_P_LEFT:1.5`, ...
    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, v)) => {
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Usage(format!("bad policy parameter in {s:?}")))?;
                (n.trim(), Some(v))
            }
            None => (s.trim(), None),
        };
        StepPolicy::from_parts(name, param, param)
    }
}

impl fmt::Display for StepPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepPolicy::Bb1 => write!(f, "BB1"),
            StepPolicy::Bb2 => write!(f, "BB2"),
            StepPolicy::Vbb { m } => write!(f, "VBB:{m}"),
            StepPolicy::Left => write!(f, "LEFT"),
            StepPolicy::Right => write!(f, "RIGHT"),
            StepPolicy::ModifiedLeft => write!(f, "ML"),
            StepPolicy::ModifiedRight => write!(f, "MR"),
            StepPolicy::ConstPLeft { p } => write!(f, "CONST_P_LEFT:{p}"),
            StepPolicy::ConstPRight { p } => write!(f, "CONST_P_RIGHT:{p}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    NumericalBreakdown,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// State at iterate `k`. The final record of a trace has no `alpha`: no
/// step was taken from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub f: f64,
    pub gnorm: f64,
    pub alpha: Option<f64>,
    /// `1 − RQ(g_k)/α_k`, the factor applied to `g_k` along its own
    /// Rayleigh direction.
    pub contraction: Option<f64>,
    /// `1 − λ_n/α_k`: the decay factor of the smallest-eigenvalue gradient
    /// component (ξ_k for LEFT, η_k for RIGHT).
    pub low_mode_factor: Option<f64>,
    /// Running BB scalars of the memory `(s_{k−1}, y_{k−1})`; absent at `k = 1`.
    pub bb1: Option<f64>,
    pub bb2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub method: String,
    pub status: SolveStatus,
    /// Number of steps taken.
    pub iterations: usize,
    pub records: Vec<TraceRecord>,
}

impl SolveTrace {
    pub fn initial_gnorm(&self) -> f64 {
        self.records[0].gnorm
    }

    pub fn final_gnorm(&self) -> f64 {
        self.records[self.records.len() - 1].gnorm
    }

    /// Scalars actually used, in iteration order.
    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().filter_map(|r| r.alpha)
    }
}

/// Rayleigh quotient `g₁ᵀAg₁ / g₁ᵀg₁`, the scalar used for the first step.
pub fn initial_scalar(problem: &QuadraticProblem, g1: &[f64]) -> Result<f64> {
    problem
        .rayleigh_quotient(g1)?
        .ok_or(Error::AlreadyConverged)
}

/// Runs the gradient iteration from `x1` until `‖g_k‖ ≤ tol ‖g_1‖` or
/// `maxit` steps have been taken.
///
/// A non-positive curvature pair or a non-finite value ends the run with
/// [`SolveStatus::NumericalBreakdown`] and keeps the partial trace.
pub fn solve(
    problem: &QuadraticProblem,
    policy: StepPolicy,
    x1: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<SolveTrace> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain(format!("tol must lie in (0, 1), got {tol}")));
    }
    if maxit < 1 {
        return Err(Error::Domain("maxit must be at least 1".into()));
    }
    policy.validate()?;
    if policy.is_const_p() && (problem.dimension() != 2 || !problem.is_diagonal()) {
        return Err(Error::UnsupportedPolicy(format!(
            "{policy} is defined for diagonal 2-D problems only (n = {})",
            problem.dimension()
        )));
    }

    let lambda_min = problem.lambda_min();
    let mut x = x1.to_vec();
    let mut g = problem.gradient(&x)?;
    let gnorm1 = norm(&g);
    let mut records = Vec::new();
    let finish = |records: Vec<TraceRecord>, status, k: usize| SolveTrace {
        method: policy.to_string(),
        status,
        iterations: k - 1,
        records,
    };

    // Seed for the k = 2 truncation, where no previous BB values exist yet.
    let mut prev_bb = match problem.rayleigh_quotient(&g)? {
        Some(rq) => (rq, rq),
        None => (1.0, 1.0),
    };
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut k = 1;

    loop {
        let f = problem.objective(&x)?;
        let gnorm = norm(&g);
        let mut record = TraceRecord {
            k,
            f,
            gnorm,
            alpha: None,
            contraction: None,
            low_mode_factor: None,
            bb1: None,
            bb2: None,
        };
        if !(f.is_finite() && gnorm.is_finite()) {
            records.push(record);
            return Ok(finish(records, SolveStatus::NumericalBreakdown, k));
        }
        if gnorm <= tol * gnorm1 {
            records.push(record);
            return Ok(finish(records, SolveStatus::Converged, k));
        }
        if k > maxit {
            records.push(record);
            return Ok(finish(records, SolveStatus::MaxIterations, k));
        }

        let alpha = match &prev {
            None => initial_scalar(problem, &g)?,
            Some((x_prev, g_prev)) => {
                // y = A s, the same vector as g_k − g_{k−1} without the cancellation
                let s: Vec<f64> = x.iter().zip(x_prev).map(|(a, b)| a - b).collect();
                let y = problem.apply_hessian(&s)?;
                let mem = match StepMemory::from_products(dot(&s, &s), dot(&s, &y), dot(&y, &y)) {
                    Ok(mem) => mem,
                    Err(Error::Curvature(_) | Error::DegenerateMemory(_)) => {
                        records.push(record);
                        return Ok(finish(records, SolveStatus::NumericalBreakdown, k));
                    }
                    Err(e) => return Err(e),
                };
                let (bb1, bb2) = bb_scalars(&mem);
                record.bb1 = Some(bb1);
                record.bb2 = Some(bb2);
                let chosen = match policy {
                    StepPolicy::Bb1 => Ok(bb1),
                    StepPolicy::Bb2 => Ok(bb2),
                    StepPolicy::Vbb { m } => vbb_scalar(&mem, m),
                    StepPolicy::Left => left_right_scalars(&mem).map(|(l, _)| l),
                    StepPolicy::Right => left_right_scalars(&mem).map(|(_, r)| r),
                    StepPolicy::ModifiedLeft => {
                        ml_mr_scalars(&mem, prev_bb.0, prev_bb.1).map(|(l, _)| l)
                    }
                    StepPolicy::ModifiedRight => {
                        ml_mr_scalars(&mem, prev_bb.0, prev_bb.1).map(|(_, r)| r)
                    }
                    StepPolicy::ConstPLeft { p } => Ok(const_p_alpha(problem, g_prev, p).0),
                    StepPolicy::ConstPRight { p } => Ok(const_p_alpha(problem, g_prev, p).1),
                };
                prev_bb = (bb1, bb2);
                match chosen {
                    Ok(a) => a,
                    Err(Error::DegenerateAngle(_)) => {
                        records.push(record);
                        return Ok(finish(records, SolveStatus::NumericalBreakdown, k));
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        if !(alpha.is_finite() && alpha > 0.0) {
            records.push(record);
            return Ok(finish(records, SolveStatus::NumericalBreakdown, k));
        }

        let rq = problem
            .rayleigh_quotient(&g)?
            .expect("nonzero gradient past the convergence test");
        record.alpha = Some(alpha);
        record.contraction = Some(1.0 - rq / alpha);
        record.low_mode_factor = Some(1.0 - lambda_min / alpha);
        records.push(record);

        let x_next: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - gi / alpha).collect();
        let g_next = problem.gradient(&x_next)?;
        prev = Some((
            std::mem::replace(&mut x, x_next),
            std::mem::replace(&mut g, g_next),
        ));
        k += 1;
    }
}

/// Constant-`p` LEFT/RIGHT scalars from the previous gradient of a diagonal
/// 2-D problem, through its squared component ratio
/// `ε = (g^{(1)}/g^{(2)})²`. Scaled so that `diag(λ_1, λ_2)` is handled as
/// `λ_2 · diag(λ_1/λ_2, 1)`.
fn const_p_alpha(problem: &QuadraticProblem, g_prev: &[f64], p: f64) -> (f64, f64) {
    let (hi, lo) = (problem.spectrum()[0], problem.spectrum()[1]);
    let eps = if g_prev[1] == 0.0 {
        f64::INFINITY
    } else {
        (g_prev[0] / g_prev[1]).powi(2)
    };
    let (l, r) = const_p_scalars(hi / lo, eps, p);
    (lo * l, lo * r)
}
