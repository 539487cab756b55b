//! Strictly convex quadratic instances `f(x) = ½ (x − x*)ᵀ A (x − x*)`.
//!
//! The Hessian is stored by its spectrum (diagonal backing). A dense SPD
//! Hessian may be attached for rotated problems; gradients then go through a
//! dense matrix-vector product.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    /// Eigenvalues, sorted nonincreasing.
    spectrum: Vec<f64>,
    hessian: Option<DMatrix<f64>>,
    x_star: Vec<f64>,
}

/// On-disk problem description. Only the diagonal backing is serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    pub spectrum: Vec<f64>,
    pub x_star: Vec<f64>,
}

impl QuadraticProblem {
    /// Diagonal problem with `A = diag(spectrum)`. The spectrum may be given
    /// in any order; coordinates are relabelled so that it is nonincreasing,
    /// and `x_star` is permuted with it.
    pub fn new(spectrum: Vec<f64>, x_star: Vec<f64>) -> Result<Self> {
        Self::check_inputs(&spectrum, &x_star)?;
        let mut order: Vec<usize> = (0..spectrum.len()).collect();
        order.sort_by(|&a, &b| spectrum[b].total_cmp(&spectrum[a]));
        Ok(Self {
            spectrum: order.iter().map(|&i| spectrum[i]).collect(),
            hessian: None,
            x_star: order.iter().map(|&i| x_star[i]).collect(),
        })
    }

    fn check_inputs(spectrum: &[f64], x_star: &[f64]) -> Result<()> {
        if spectrum.is_empty() {
            return Err(Error::InvalidDimension("spectrum is empty".into()));
        }
        if spectrum.len() != x_star.len() {
            return Err(Error::DimensionMismatch {
                expected: spectrum.len(),
                got: x_star.len(),
            });
        }
        if let Some(bad) = spectrum.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidSpectrum(format!(
                "eigenvalue {bad} is not strictly positive"
            )));
        }
        if x_star.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpectrum(
                "minimizer has non-finite entries".into(),
            ));
        }
        Ok(())
    }

    /// Problem backed by a dense symmetric positive definite Hessian. The
    /// spectrum is recovered with a symmetric eigendecomposition.
    pub fn from_dense(hessian: DMatrix<f64>, x_star: Vec<f64>) -> Result<Self> {
        let n = hessian.nrows();
        if n == 0 || hessian.ncols() != n {
            return Err(Error::InvalidHessian(format!(
                "expected a square matrix, got {}x{}",
                hessian.nrows(),
                hessian.ncols()
            )));
        }
        if x_star.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x_star.len(),
            });
        }
        let scale = hessian.amax();
        for i in 0..n {
            for j in (i + 1)..n {
                if (hessian[(i, j)] - hessian[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidHessian(format!(
                        "not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let eigen = SymmetricEigen::new(hessian.clone());
        let mut spectrum: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
        Self::check_inputs(&spectrum, &x_star)?;
        spectrum.sort_by(|a, b| b.total_cmp(a));
        Ok(Self {
            spectrum,
            hessian: Some(hessian),
            x_star,
        })
    }

    /// `A = Q diag(spectrum) Qᵀ` for an orthogonal `Q`. The orthogonality of
    /// `q` is the caller's responsibility.
    pub fn rotated(spectrum: &[f64], q: &DMatrix<f64>, x_star: Vec<f64>) -> Result<Self> {
        let n = spectrum.len();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: q.nrows(),
            });
        }
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(spectrum));
        let mut a = q * d * q.transpose();
        // symmetrize away rounding from the triple product
        let at = a.transpose();
        a = (a + at) * 0.5;
        Self::from_dense(a, x_star)
    }

    pub fn dimension(&self) -> usize {
        self.spectrum.len()
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn x_star(&self) -> &[f64] {
        &self.x_star
    }

    pub fn is_diagonal(&self) -> bool {
        self.hessian.is_none()
    }

    pub fn dense_hessian(&self) -> Option<&DMatrix<f64>> {
        self.hessian.as_ref()
    }

    /// Largest eigenvalue `λ_1`.
    pub fn lambda_max(&self) -> f64 {
        self.spectrum[0]
    }

    /// Smallest eigenvalue `λ_n`.
    pub fn lambda_min(&self) -> f64 {
        self.spectrum[self.spectrum.len() - 1]
    }

    pub fn condition_number(&self) -> f64 {
        self.lambda_max() / self.lambda_min()
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `A v`.
    pub fn apply_hessian(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        Ok(match &self.hessian {
            None => self.spectrum.iter().zip(v).map(|(l, vi)| l * vi).collect(),
            Some(a) => (a * DVector::from_column_slice(v))
                .iter()
                .copied()
                .collect(),
        })
    }

    /// `g = A (x − x*)`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let d: Vec<f64> = x.iter().zip(&self.x_star).map(|(a, b)| a - b).collect();
        self.apply_hessian(&d)
    }

    /// `½ (x − x*)ᵀ A (x − x*)`.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        let d: Vec<f64> = x.iter().zip(&self.x_star).map(|(a, b)| a - b).collect();
        let ad = self.apply_hessian(&d)?;
        Ok(0.5 * dot(&d, &ad))
    }

    /// `vᵀAv / vᵀv`; `None` for the zero vector.
    pub fn rayleigh_quotient(&self, v: &[f64]) -> Result<Option<f64>> {
        let vv = dot(v, v);
        if vv == 0.0 {
            self.check_len(v)?;
            return Ok(None);
        }
        let av = self.apply_hessian(v)?;
        Ok(Some(dot(v, &av) / vv))
    }

    pub fn to_file(&self) -> Result<ProblemFile> {
        if !self.is_diagonal() {
            return Err(Error::Usage(
                "only diagonal problems can be written to a problem file".into(),
            ));
        }
        Ok(ProblemFile {
            n: self.dimension(),
            spectrum: self.spectrum.clone(),
            x_star: self.x_star.clone(),
        })
    }

    pub fn from_file(file: ProblemFile) -> Result<Self> {
        if file.n != file.spectrum.len() {
            return Err(Error::DimensionMismatch {
                expected: file.n,
                got: file.spectrum.len(),
            });
        }
        Self::new(file.spectrum, file.x_star)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: ProblemFile = serde_json::from_str(&text)?;
        Self::from_file(file)
    }
}

/// Log-spaced benchmark spectrum `λ_i = 10^{ncond (n − i)/(n − 1)}`,
/// `i = 1..n`, with minimizer `x* = 1`. Gives `λ_1 = 10^ncond`, `λ_n = 1`.
pub fn make_log_spectrum_problem(n: usize, ncond: f64) -> Result<QuadraticProblem> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "log-spectrum generator needs n >= 2, got {n}"
        )));
    }
    if !(ncond.is_finite() && ncond >= 0.0) {
        return Err(Error::Domain(format!(
            "ncond must be a nonnegative real, got {ncond}"
        )));
    }
    let spectrum = (1..=n)
        .map(|i| 10f64.powf(ncond / (n - 1) as f64 * (n - i) as f64))
        .collect();
    QuadraticProblem::new(spectrum, vec![1.0; n])
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
