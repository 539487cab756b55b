//! Two-dimensional dynamics of constant-`p` LEFT and RIGHT iterations.
//!
//! On `A = diag(λ, 1)` the squared gradient-component ratio `ε_k` obeys the
//! second-order recurrence
//!
//! ```text
//! ε_{k+2} = factor(ε_k)² · ε_{k+1}
//! ```
//!
//! where `factor` is the linear-fractional map `u` (LEFT) or `v` (RIGHT).
//! Equilibria satisfy `factor(ε*) = −1` (plus the trivial `ε* = 0`), and the
//! linearization at `(ε*, ε*)` has characteristic polynomial `μ² − μ + c`
//! with `c = q` for LEFT and `c = 2γ` for RIGHT.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SINGULAR_TOL: f64 = 1e-14;
const FD_REL_STEP: f64 = 1e-6;
const BOUNDARY_TOL: f64 = 1e-12;
pub const DIVERGENCE_CAP: f64 = 1e12;
pub const SETTLE_WINDOW: usize = 50;
pub const SETTLE_TOL: f64 = 1e-6;
/// Relative distance at which a settled simulation is attributed to `ε*`.
pub const MATCH_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RecurrenceKind {
    Left,
    Right,
}

impl fmt::Display for RecurrenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecurrenceKind::Left => write!(f, "LEFT"),
            RecurrenceKind::Right => write!(f, "RIGHT"),
        }
    }
}

impl FromStr for RecurrenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LEFT" | "L" => Ok(RecurrenceKind::Left),
            "RIGHT" | "R" => Ok(RecurrenceKind::Right),
            _ => Err(Error::Usage(format!("unknown recurrence kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceConfig {
    pub lambda: f64,
    pub p: f64,
    pub kind: RecurrenceKind,
}

impl RecurrenceConfig {
    /// `lambda > 1`, `p ∈ [1, 2)`. `p = 1` is the plain BB limit and is kept
    /// for oracle checks.
    pub fn new(lambda: f64, p: f64, kind: RecurrenceKind) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 1.0) {
            return Err(Error::Domain(format!("lambda must exceed 1, got {lambda}")));
        }
        if !(1.0..2.0).contains(&p) {
            return Err(Error::Domain(format!("p must lie in [1, 2), got {p}")));
        }
        Ok(Self { lambda, p, kind })
    }

    pub fn left(lambda: f64, p: f64) -> Result<Self> {
        Self::new(lambda, p, RecurrenceKind::Left)
    }

    pub fn right(lambda: f64, p: f64) -> Result<Self> {
        Self::new(lambda, p, RecurrenceKind::Right)
    }

    pub fn is_bb_limit(&self) -> bool {
        self.p == 1.0
    }

    /// Coefficients of `factor(ε) = (a ε + b) / (c ε + d)`.
    fn mobius(&self) -> Mobius {
        let (l, p) = (self.lambda, self.p);
        match self.kind {
            // u(ε) = (1 − λ[p(ε+1) − ε]) / (ε(λ − p) − (p − 1))
            RecurrenceKind::Left => Mobius {
                a: -l * (p - 1.0),
                b: 1.0 - l * p,
                c: l - p,
                d: -(p - 1.0),
            },
            // v(ε) = (λ²ε(p − 1) + p − λ) / (λε(pλ − 1) + p − 1)
            RecurrenceKind::Right => Mobius {
                a: l * l * (p - 1.0),
                b: p - l,
                c: l * (p * l - 1.0),
                d: p - 1.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Mobius {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Mobius {
    fn denominator(&self, eps: f64) -> f64 {
        self.c * eps + self.d
    }

    fn is_singular(&self, eps: f64) -> bool {
        let scale = (self.c * eps).abs() + self.d.abs();
        self.denominator(eps).abs() <= SINGULAR_TOL * scale.max(1.0)
    }

    fn eval(&self, eps: f64) -> Result<f64> {
        if self.is_singular(eps) {
            return Err(Error::SingularMap(eps));
        }
        Ok((self.a * eps + self.b) / self.denominator(eps))
    }

    fn derivative(&self, eps: f64) -> Result<f64> {
        if self.is_singular(eps) {
            return Err(Error::SingularMap(eps));
        }
        Ok((self.a * self.d - self.b * self.c) / self.denominator(eps).powi(2))
    }
}

/// `u(ε)` for LEFT, `v(ε)` for RIGHT.
pub fn map_factor(cfg: &RecurrenceConfig, eps: f64) -> Result<f64> {
    cfg.mobius().eval(eps)
}

/// Analytic derivative of [`map_factor`].
pub fn map_factor_derivative(cfg: &RecurrenceConfig, eps: f64) -> Result<f64> {
    cfg.mobius().derivative(eps)
}

/// `ε_{k+2} = factor(ε_k)² · ε_{k+1}`.
pub fn iterate_map(cfg: &RecurrenceConfig, eps_k: f64, eps_k1: f64) -> Result<f64> {
    let u = map_factor(cfg, eps_k)?;
    Ok(u * u * eps_k1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub epsilon: f64,
    pub exists: bool,
    /// Parameters sit exactly on the existence threshold.
    pub boundary: bool,
}

/// Closed form of the positive equilibrium, whether or not it is admissible.
///
/// LEFT: `(p(λ+1) − 2) / (λ(2 − p) − p)`;
/// RIGHT: `(λ + 1 − 2p) / (λ(λ(2p − 1) − 1))`.
pub fn positive_fixed_point_formula(cfg: &RecurrenceConfig) -> f64 {
    let (l, p) = (cfg.lambda, cfg.p);
    match cfg.kind {
        RecurrenceKind::Left => (p * (l + 1.0) - 2.0) / (l * (2.0 - p) - p),
        RecurrenceKind::Right => (l + 1.0 - 2.0 * p) / (l * (l * (2.0 * p - 1.0) - 1.0)),
    }
}

/// Existence threshold on `λ` for the positive equilibrium.
pub fn existence_threshold(cfg: &RecurrenceConfig) -> f64 {
    match cfg.kind {
        RecurrenceKind::Left => cfg.p / (2.0 - cfg.p),
        RecurrenceKind::Right => 2.0 * cfg.p - 1.0,
    }
}

/// `[0, positive]`. The zero equilibrium always exists; the positive one
/// only for `λ` strictly above [`existence_threshold`].
pub fn fixed_points(cfg: &RecurrenceConfig) -> Vec<FixedPoint> {
    let threshold = existence_threshold(cfg);
    let boundary = (cfg.lambda - threshold).abs() <= BOUNDARY_TOL * threshold;
    let exists = !boundary && cfg.lambda > threshold;
    vec![
        FixedPoint {
            epsilon: 0.0,
            exists: true,
            boundary: false,
        },
        FixedPoint {
            epsilon: positive_fixed_point_formula(cfg),
            exists,
            boundary,
        },
    ]
}

/// Closed-form stability constant: `q` for LEFT, `γ` for RIGHT.
///
/// ```text
/// q = 2 [p(λ+1) − 2][λ(2−p) − p] / (p (λ−1)²)
/// γ = (λ + 1 − 2p)(λ(2p−1) − 1) / (p (λ−1)²)
/// ```
pub fn criterion_value(cfg: &RecurrenceConfig) -> f64 {
    let (l, p) = (cfg.lambda, cfg.p);
    let denom = p * (l - 1.0).powi(2);
    match cfg.kind {
        RecurrenceKind::Left => 2.0 * (p * (l + 1.0) - 2.0) * (l * (2.0 - p) - p) / denom,
        RecurrenceKind::Right => (l + 1.0 - 2.0 * p) * (l * (2.0 * p - 1.0) - 1.0) / denom,
    }
}

/// Constant term `c` of `μ² − μ + c`: `q` (LEFT) or `2γ` (RIGHT).
pub fn characteristic_constant(cfg: &RecurrenceConfig) -> f64 {
    match cfg.kind {
        RecurrenceKind::Left => criterion_value(cfg),
        RecurrenceKind::Right => 2.0 * criterion_value(cfg),
    }
}

/// Roots of `μ² − μ + c`.
pub fn characteristic_roots(c: f64) -> [Complex64; 2] {
    let disc = 1.0 - 4.0 * c;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [
            Complex64::new((1.0 - r) / 2.0, 0.0),
            Complex64::new((1.0 + r) / 2.0, 0.0),
        ]
    } else {
        let i = (-disc).sqrt() / 2.0;
        [Complex64::new(0.5, -i), Complex64::new(0.5, i)]
    }
}

/// The same constant by a second route: central differences of the map
/// factor at the positive equilibrium. LEFT returns `−ε* g'(ε*)` with
/// `g = u²`; RIGHT returns `ε v'(ε)`.
pub fn criterion_by_differences(cfg: &RecurrenceConfig) -> Result<f64> {
    let fp = fixed_points(cfg)[1];
    if !fp.exists {
        return Err(Error::OracleFailure("no positive equilibrium".into()));
    }
    let e = fp.epsilon;
    let h = FD_REL_STEP * e;
    match cfg.kind {
        RecurrenceKind::Left => {
            let g = |x: f64| map_factor(cfg, x).map(|u| u * u);
            let dg = (g(e + h)? - g(e - h)?) / (2.0 * h);
            Ok(-e * dg)
        }
        RecurrenceKind::Right => {
            let dv = (map_factor(cfg, e + h)? - map_factor(cfg, e - h)?) / (2.0 * h);
            Ok(e * dv)
        }
    }
}

pub type Matrix2 = [[f64; 2]; 2];

/// Jacobian of `(a, b) ↦ (b, factor(a)² b)`:
/// `[[0, 1], [b · 2 f(a) f'(a), f(a)²]]`.
pub fn analytic_jacobian(cfg: &RecurrenceConfig, point: (f64, f64)) -> Result<Matrix2> {
    let (a, b) = point;
    let f = map_factor(cfg, a)?;
    let df = map_factor_derivative(cfg, a)?;
    Ok([[0.0, 1.0], [b * 2.0 * f * df, f * f]])
}

fn fd_step(x: f64) -> f64 {
    if x == 0.0 {
        FD_REL_STEP
    } else {
        FD_REL_STEP * x.abs()
    }
}

/// Central-difference Jacobian of `(a, b) ↦ (b, factor(a)² b)`, used as an
/// oracle for [`analytic_jacobian`].
///
/// Steps are relative to each coordinate (`h = 1e-6 |x|`, or `1e-6` at
/// zero); the map varies on the scale of `ε` itself, which can be far below
/// one for RIGHT equilibria.
pub fn numerical_jacobian(cfg: &RecurrenceConfig, point: (f64, f64)) -> Result<Matrix2> {
    let (a, b) = point;
    let (ha, hb) = (fd_step(a), fd_step(b));
    let m = cfg.mobius();
    let side = m.denominator(a).signum();
    for x in [a - ha, a, a + ha] {
        if m.is_singular(x) || m.denominator(x).signum() != side {
            return Err(Error::OracleFailure(format!(
                "pole of the map inside the stencil around eps = {a:e}"
            )));
        }
    }
    let map = |x: f64, y: f64| -> Result<[f64; 2]> { Ok([y, iterate_map(cfg, x, y)?]) };
    let (pa, ma) = (map(a + ha, b)?, map(a - ha, b)?);
    let (pb, mb) = (map(a, b + hb)?, map(a, b - hb)?);
    let mut jac = [[0.0; 2]; 2];
    for row in 0..2 {
        jac[row][0] = (pa[row] - ma[row]) / (2.0 * ha);
        jac[row][1] = (pb[row] - mb[row]) / (2.0 * hb);
    }
    Ok(jac)
}

pub fn eigenvalues_2x2(m: &Matrix2) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [
            Complex64::new((tr - r) / 2.0, 0.0),
            Complex64::new((tr + r) / 2.0, 0.0),
        ]
    } else {
        let i = (-disc).sqrt() / 2.0;
        [Complex64::new(tr / 2.0, -i), Complex64::new(tr / 2.0, i)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilityLabel {
    Stable,
    Unstable,
    Boundary,
    NotApplicable,
}

impl fmt::Display for StabilityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

fn label_for_radius(rho: f64) -> StabilityLabel {
    if (rho - 1.0).abs() <= BOUNDARY_TOL {
        StabilityLabel::Boundary
    } else if rho < 1.0 {
        StabilityLabel::Stable
    } else {
        StabilityLabel::Unstable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointAssessment {
    pub epsilon: f64,
    pub exists: bool,
    pub eigenvalues: Option<[Complex64; 2]>,
    pub spectral_radius: Option<f64>,
    pub label: StabilityLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub config: RecurrenceConfig,
    /// `q` or `γ`; present when the positive equilibrium exists.
    pub criterion_value: Option<f64>,
    pub zero: FixedPointAssessment,
    pub positive: FixedPointAssessment,
}

/// Linearized stability of both equilibria.
///
/// The zero equilibrium has Jacobian `[[0, 1], [0, factor(0)²]]`, so its
/// eigenvalues are `0` and `factor(0)²`. The positive one has
/// characteristic polynomial `μ² − μ + c`.
pub fn classify_stability(cfg: &RecurrenceConfig) -> FixedPointReport {
    let fps = fixed_points(cfg);
    let m = cfg.mobius();
    // factor(0) = b/d; infinite in the p = 1 limit
    let f0 = m.b / m.d;
    let g0 = f0 * f0;
    let zero = FixedPointAssessment {
        epsilon: 0.0,
        exists: true,
        eigenvalues: Some([Complex64::new(0.0, 0.0), Complex64::new(g0, 0.0)]),
        spectral_radius: Some(g0.abs()),
        label: label_for_radius(g0.abs()),
    };

    let pos = fps[1];
    let (criterion, positive) = if pos.exists {
        let roots = characteristic_roots(characteristic_constant(cfg));
        let rho = roots[0].norm().max(roots[1].norm());
        (
            Some(criterion_value(cfg)),
            FixedPointAssessment {
                epsilon: pos.epsilon,
                exists: true,
                eigenvalues: Some(roots),
                spectral_radius: Some(rho),
                label: label_for_radius(rho),
            },
        )
    } else {
        (
            None,
            FixedPointAssessment {
                epsilon: pos.epsilon,
                exists: false,
                eigenvalues: None,
                spectral_radius: None,
                label: if pos.boundary {
                    StabilityLabel::Boundary
                } else {
                    StabilityLabel::NotApplicable
                },
            },
        )
    };
    FixedPointReport {
        config: *cfg,
        criterion_value: criterion,
        zero,
        positive,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "label", rename_all = "PascalCase")]
pub enum EmpiricalLabel {
    ConvergedTo { value: f64 },
    Oscillating,
    Diverging { pole: bool },
}

impl EmpiricalLabel {
    /// Settled within [`MATCH_TOL`] (relative) of `target`.
    pub fn converged_to(&self, target: f64) -> bool {
        match *self {
            EmpiricalLabel::ConvergedTo { value } => {
                (value - target).abs() <= MATCH_TOL * target.abs()
            }
            _ => false,
        }
    }
}

impl fmt::Display for EmpiricalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmpiricalLabel::ConvergedTo { value } => write!(f, "ConvergedTo({value})"),
            EmpiricalLabel::Oscillating => write!(f, "Oscillating"),
            EmpiricalLabel::Diverging { pole: true } => write!(f, "Diverging(pole)"),
            EmpiricalLabel::Diverging { pole: false } => write!(f, "Diverging"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub sequence: Vec<f64>,
    pub label: EmpiricalLabel,
}

/// Iterates the recurrence `steps` times from `(eps0, eps1)`.
///
/// The run is `ConvergedTo` when the last [`SETTLE_WINDOW`] terms all lie
/// within [`SETTLE_TOL`] (relative) of the final term, `Diverging` when a
/// term exceeds [`DIVERGENCE_CAP`] or the map hits its pole, and
/// `Oscillating` otherwise.
pub fn simulate(cfg: &RecurrenceConfig, eps0: f64, eps1: f64, steps: usize) -> Result<Simulation> {
    if !(eps0 > 0.0 && eps1 > 0.0 && eps0.is_finite() && eps1.is_finite()) {
        return Err(Error::Domain(format!(
            "starting values must be positive, got ({eps0}, {eps1})"
        )));
    }
    if steps < 2 {
        return Err(Error::Domain(format!("need at least 2 steps, got {steps}")));
    }
    let mut sequence = Vec::with_capacity(steps + 2);
    sequence.extend([eps0, eps1]);
    for _ in 0..steps {
        let n = sequence.len();
        let next = match iterate_map(cfg, sequence[n - 2], sequence[n - 1]) {
            Ok(v) => v,
            Err(Error::SingularMap(_)) => {
                return Ok(Simulation {
                    sequence,
                    label: EmpiricalLabel::Diverging { pole: true },
                })
            }
            Err(e) => return Err(e),
        };
        sequence.push(next);
        if !next.is_finite() || next > DIVERGENCE_CAP {
            return Ok(Simulation {
                sequence,
                label: EmpiricalLabel::Diverging { pole: false },
            });
        }
    }
    let last = sequence[sequence.len() - 1];
    let tail = &sequence[sequence.len().saturating_sub(SETTLE_WINDOW)..];
    let settled = tail
        .iter()
        .all(|&x| (x - last).abs() <= SETTLE_TOL * last.abs());
    let label = if settled {
        EmpiricalLabel::ConvergedTo { value: last }
    } else {
        EmpiricalLabel::Oscillating
    };
    Ok(Simulation { sequence, label })
}

/// One row of a stability grid export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCell {
    pub lambda: f64,
    pub p: f64,
    pub kind: RecurrenceKind,
    pub eps_star: Option<f64>,
    pub criterion: Option<f64>,
    pub mu_abs: Option<f64>,
    pub label: StabilityLabel,
    pub empirical_label: EmpiricalLabel,
    /// Whether the simulation corroborates the label; `None` when there is
    /// no positive equilibrium to test or the label is `Boundary`.
    pub agreement: Option<bool>,
}

/// Classifies the positive equilibrium and checks the verdict by simulating
/// from the perturbed start `(1.1 ε*, 0.9 ε*)`. Cells without a positive
/// equilibrium are simulated from `(1, 1)` for reference.
pub fn analyze_cell(cfg: &RecurrenceConfig, steps: usize) -> Result<StabilityCell> {
    let report = classify_stability(cfg);
    let pos = report.positive;
    let (start, target) = if pos.exists {
        ((1.1 * pos.epsilon, 0.9 * pos.epsilon), Some(pos.epsilon))
    } else {
        ((1.0, 1.0), None)
    };
    let sim = simulate(cfg, start.0, start.1, steps)?;
    let agreement = target.and_then(|t| match pos.label {
        StabilityLabel::Stable => Some(sim.label.converged_to(t)),
        StabilityLabel::Unstable => Some(!sim.label.converged_to(t)),
        _ => None,
    });
    Ok(StabilityCell {
        lambda: cfg.lambda,
        p: cfg.p,
        kind: cfg.kind,
        eps_star: target,
        criterion: report.criterion_value,
        mu_abs: pos.spectral_radius,
        label: pos.label,
        empirical_label: sim.label,
        agreement,
    })
}

/// Cells ordered by kind, then `λ`, then `p`, in the order given.
pub fn stability_grid(
    kinds: &[RecurrenceKind],
    lambdas: &[f64],
    ps: &[f64],
    steps: usize,
) -> Result<Vec<StabilityCell>> {
    let mut cells = Vec::with_capacity(kinds.len() * lambdas.len() * ps.len());
    for &kind in kinds {
        for &lambda in lambdas {
            for &p in ps {
                cells.push(analyze_cell(
                    &RecurrenceConfig::new(lambda, p, kind)?,
                    steps,
                )?);
            }
        }
    }
    Ok(cells)
}
