//! Linear quantile regression by exact minimisation of the pinball loss.
//!
//! The estimator minimises `Σ ρ_τ(y_i − x_i'β)` with
//! `ρ_τ(u) = (τ − 1{u < 0}) u`. The problem is the linear program
//!
//! ```text
//! min  τ 1'u⁺ + (1 − τ) 1'u⁻   s.t.  Xβ + u⁺ − u⁻ = y,  u⁺, u⁻ ≥ 0
//! ```
//!
//! solved by a Barrodale–Roberts style simplex that walks between basic
//! solutions (β interpolating `p` observations). See [`simplex`] for the
//! pivoting rules and [`certificate`] for the independent optimality check.

pub mod certificate;
pub mod self_check;
mod simplex;

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::timeseries::DesignMatrix;

pub use certificate::{check_optimality, OptimalityCertificate, OPTIMALITY_TOLERANCE};

/// Relative tolerance on the pivoted-QR diagonal below which a design
/// column is declared linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// A quantile level strictly between 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct QuantileLevel(f64);

impl QuantileLevel {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau < 1.0 {
            Ok(QuantileLevel(tau))
        } else {
            Err(Error::InvalidTau(tau))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for QuantileLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for QuantileLevel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for QuantileLevel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        QuantileLevel::new(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Check loss `(τ − 1{u < 0}) u`.
#[inline]
pub fn pinball(u: f64, tau: QuantileLevel) -> f64 {
    let t = tau.0;
    if u < 0.0 {
        (t - 1.0) * u
    } else {
        t * u
    }
}

pub fn total_loss(residuals: &[f64], tau: QuantileLevel) -> f64 {
    residuals.iter().map(|&r| pinball(r, tau)).sum()
}

/// Result of a quantile regression fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QrFit {
    pub tau: QuantileLevel,
    pub columns: Vec<String>,
    pub beta: Vec<f64>,
    pub residuals: Vec<f64>,
    pub objective: f64,
    pub n: usize,
    pub p: usize,
    /// Observations interpolated by the basic solution (zero residual).
    pub basic_indices: Vec<usize>,
    pub iterations: usize,
}

impl QrFit {
    /// Fitted quantile at covariate row `x`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.beta.iter().zip(x).map(|(b, v)| b * v).sum()
    }
}

/// Fits the `tau` conditional quantile of the design's response.
pub fn fit(design: &DesignMatrix, tau: QuantileLevel) -> Result<QrFit> {
    fit_matrix(design.x(), design.y(), tau, design.columns())
}

/// Fit on a raw matrix; `names` label columns in error messages and output.
pub fn fit_matrix(
    x: &DMatrix<f64>,
    y: &[f64],
    tau: QuantileLevel,
    names: &[String],
) -> Result<QrFit> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: n,
        });
    }
    if p == 0 || n <= p {
        return Err(Error::InsufficientData { n, p });
    }
    let dependent = dependent_columns(x);
    if !dependent.is_empty() {
        return Err(Error::SingularDesign {
            columns: dependent
                .into_iter()
                .map(|j| names.get(j).cloned().unwrap_or_else(|| format!("x{j}")))
                .collect(),
        });
    }

    let rows: Vec<f64> = (0..n)
        .flat_map(|i| (0..p).map(move |j| x[(i, j)]))
        .collect();
    let sol = simplex::solve(&rows, n, p, y, tau.value())?;

    let mut residuals: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..p).map(|j| rows[i * p + j] * sol.beta[j]).sum::<f64>())
        .collect();
    for &i in &sol.basis {
        residuals[i] = 0.0;
    }
    let mut basic_indices = sol.basis.clone();
    basic_indices.sort_unstable();

    let fit = QrFit {
        tau,
        columns: if names.len() == p {
            names.to_vec()
        } else {
            (0..p).map(|j| format!("x{j}")).collect()
        },
        beta: sol.beta,
        objective: total_loss(&residuals, tau),
        residuals,
        n,
        p,
        basic_indices,
        iterations: sol.iterations,
    };
    if self_check::enabled() {
        self_check::record(x, y, &fit);
    }
    Ok(fit)
}

/// Columns that are linearly dependent on earlier-pivoted ones, judged by a
/// column-pivoted QR of the unit-norm-scaled matrix.
pub fn dependent_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let p = x.ncols();
    let mut scaled = x.clone();
    let mut zero = Vec::new();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            zero.push(j);
        } else {
            col /= norm;
        }
    }
    if !zero.is_empty() {
        return zero;
    }
    let qr = scaled.col_piv_qr();
    let r = qr.r();
    let mut order = DMatrix::<f64>::from_fn(1, p, |_, j| j as f64);
    qr.p().permute_columns(&mut order);
    let k = r.nrows().min(p);
    let lead = r[(0, 0)].abs();
    let mut out: Vec<usize> = (0..p)
        .filter(|&pos| pos >= k || r[(pos, pos)].abs() <= RANK_TOLERANCE * lead)
        .map(|pos| order[(0, pos)] as usize)
        .collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests;
