//! Powell kernel sandwich covariance and Wald inference for quantile
//! regression coefficients.
//!
//! The covariance is `(τ(1−τ)/n) H⁻¹ J H⁻¹` with `J = X'X / n` and
//! `H = (1/(n h)) Σ K(r_i / h) x_i x_i'`, where `r_i` are the fit residuals
//! and `h` is a bandwidth on the residual scale.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::qr::{QrFit, QuantileLevel};

/// Printed under every coefficient table.
pub const CAUTION_FOOTNOTE: &str = "Standard errors use the asymptotic normal approximation with a kernel \
     density estimate; with short quarterly samples the tests are indicative only.";

pub const DEFAULT_ALPHA: f64 = 0.05;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Uniform,
    Gaussian,
}

impl Kernel {
    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Uniform => {
                if u.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
            Kernel::Gaussian => (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt(),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Uniform => "uniform",
            Kernel::Gaussian => "gaussian",
        })
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Kernel::Uniform),
            "gaussian" => Ok(Kernel::Gaussian),
            _ => Err(Error::Config(format!(
                "unknown kernel {s:?} (expected uniform or gaussian)"
            ))),
        }
    }
}

/// How the residual-scale bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BandwidthRule {
    /// Hall–Sheather rule in quantile units, mapped to residuals.
    #[default]
    HallSheather,
    /// A fixed bandwidth in the units of the residuals.
    Fixed(f64),
}

impl fmt::Display for BandwidthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthRule::HallSheather => f.write_str("hall-sheather"),
            BandwidthRule::Fixed(h) => write!(f, "{h}"),
        }
    }
}

impl FromStr for BandwidthRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "hall-sheather" {
            return Ok(BandwidthRule::HallSheather);
        }
        match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(BandwidthRule::Fixed(h)),
            _ => Err(Error::Config(format!(
                "bandwidth must be \"hall-sheather\" or a positive number, got {s:?}"
            ))),
        }
    }
}

impl Serialize for BandwidthRule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BandwidthRule::HallSheather => s.serialize_str("hall-sheather"),
            BandwidthRule::Fixed(h) => s.serialize_f64(*h),
        }
    }
}

impl<'de> Deserialize<'de> for BandwidthRule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(h) => BandwidthRule::from_str(&h.to_string()),
            Raw::Str(s) => BandwidthRule::from_str(&s),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Hall–Sheather bandwidth in quantile units, clipped so that `τ ± h`
/// stays inside (0, 1).
///
/// Fails when the clipped window would hold less than one expected
/// observation (`2 n h < 1`).
pub fn hall_sheather_bandwidth(n: usize, tau: QuantileLevel, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if n == 0 {
        return Err(Error::Bandwidth("no observations".into()));
    }
    let norm = std_normal();
    let t = tau.value();
    let z = norm.inverse_cdf(1.0 - alpha / 2.0);
    let q = norm.inverse_cdf(t);
    let dens = norm.pdf(q);
    let h = z.powf(2.0 / 3.0)
        * (1.5 * dens * dens / (2.0 * q * q + 1.0)).powf(1.0 / 3.0)
        * (n as f64).powf(-1.0 / 3.0);
    let room = 0.99 * t.min(1.0 - t);
    let h = h.min(room);
    if 2.0 * n as f64 * h < 1.0 {
        return Err(Error::Bandwidth(format!(
            "tau = {t} is too extreme for n = {n}: the density window holds no observations; \
             use a larger sample or a less extreme quantile"
        )));
    }
    Ok(h)
}

/// Maps a quantile-scale bandwidth to the residual scale:
/// `(Φ⁻¹(τ + h) − Φ⁻¹(τ − h)) · min(sd, IQR / 1.34)` of the residuals.
pub fn residual_bandwidth(residuals: &[f64], tau: QuantileLevel, h: f64) -> Result<f64> {
    let n = residuals.len();
    if n < 2 {
        return Err(Error::Bandwidth("need at least two residuals".into()));
    }
    let t = tau.value();
    if !(h > 0.0 && t - h > 0.0 && t + h < 1.0) {
        return Err(Error::Bandwidth(format!(
            "quantile window tau ± h = {t} ± {h} leaves (0, 1)"
        )));
    }
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let sd = (residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = type7_quantile(&sorted, 0.75) - type7_quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let norm = std_normal();
    let hr = (norm.inverse_cdf(t + h) - norm.inverse_cdf(t - h)) * spread;
    if hr > 0.0 && hr.is_finite() {
        Ok(hr)
    } else {
        Err(Error::Bandwidth(
            "residuals have zero spread; set a fixed bandwidth".into(),
        ))
    }
}

/// Linear-interpolation sample quantile of sorted data.
fn type7_quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Residual-scale bandwidth for `fit` under `rule`.
pub fn select_bandwidth(rule: BandwidthRule, fit: &QrFit, alpha: f64) -> Result<f64> {
    match rule {
        BandwidthRule::Fixed(h) => Ok(h),
        BandwidthRule::HallSheather => {
            let h = hall_sheather_bandwidth(fit.n, fit.tau, alpha)?;
            residual_bandwidth(&fit.residuals, fit.tau, h)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub matrix: DMatrix<f64>,
    /// Residual-scale bandwidth.
    pub bandwidth: f64,
    pub kernel: Kernel,
    pub tau: QuantileLevel,
}

impl CovarianceEstimate {
    pub fn std_errors(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|v| v.sqrt()).collect()
    }
}

/// Powell sandwich covariance of the coefficients of `fit`.
pub fn powell_covariance(
    x: &DMatrix<f64>,
    fit: &QrFit,
    h: f64,
    kernel: Kernel,
) -> Result<CovarianceEstimate> {
    let (n, p) = x.shape();
    if fit.residuals.len() != n || fit.beta.len() != p {
        return Err(Error::LengthMismatch {
            left: fit.residuals.len(),
            right: n,
        });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Bandwidth(format!("bandwidth must be positive, got {h}")));
    }

    let nf = n as f64;
    let mut j = x.transpose() * x;
    j /= nf;
    let mut hess = DMatrix::<f64>::zeros(p, p);
    for (i, r) in fit.residuals.iter().enumerate() {
        let w = kernel.eval(r / h);
        if w == 0.0 {
            continue;
        }
        let xi = x.row(i);
        hess += w * xi.transpose() * xi;
    }
    hess /= nf * h;

    let eig = hess.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if !(max > 0.0) || min <= 1e-12 * max {
        return Err(Error::SingularHessian { bandwidth: h });
    }
    let hinv = hess
        .cholesky()
        .ok_or(Error::SingularHessian { bandwidth: h })?
        .inverse();

    let t = fit.tau.value();
    let mut cov = &hinv * j * &hinv * (t * (1.0 - t) / nf);
    cov = (&cov + cov.transpose()) * 0.5;
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::Covariance("non-finite covariance entries".into()));
    }
    Ok(CovarianceEstimate {
        matrix: cov,
        bandwidth: h,
        kernel,
        tau: fit.tau,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRow {
    pub column: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub p_value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientTable {
    pub tau: QuantileLevel,
    pub alpha: f64,
    pub bandwidth: f64,
    pub kernel: Kernel,
    pub rows: Vec<CoefficientRow>,
}

impl CoefficientTable {
    pub fn row(&self, column: &str) -> Option<&CoefficientRow> {
        self.rows.iter().find(|r| r.column == column)
    }
}

/// Two-sided normal p-value of a z statistic.
pub fn normal_p_value(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Wald statistics and `1 − alpha` confidence intervals.
pub fn coefficient_table(fit: &QrFit, cov: &CovarianceEstimate, alpha: f64) -> Result<CoefficientTable> {
    let p = fit.beta.len();
    if cov.matrix.shape() != (p, p) {
        return Err(Error::LengthMismatch {
            left: cov.matrix.nrows(),
            right: p,
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let crit = std_normal().inverse_cdf(1.0 - alpha / 2.0);
    let rows = (0..p)
        .map(|k| {
            let var = cov.matrix[(k, k)];
            if !(var > 0.0) {
                return Err(Error::Covariance(format!(
                    "non-positive variance {var} for {}",
                    fit.columns[k]
                )));
            }
            let se = var.sqrt();
            let b = fit.beta[k];
            let z = b / se;
            Ok(CoefficientRow {
                column: fit.columns[k].clone(),
                estimate: b,
                std_error: se,
                z,
                p_value: normal_p_value(z),
                ci_lo: b - crit * se,
                ci_hi: b + crit * se,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoefficientTable {
        tau: fit.tau,
        alpha,
        bandwidth: cov.bandwidth,
        kernel: cov.kernel,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qr::fit_matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn lvl(t: f64) -> QuantileLevel {
        QuantileLevel::new(t).unwrap()
    }

    fn normal_draws(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
        let norm = std_normal();
        (0..n)
            .map(|_| norm.inverse_cdf(rng.random_range(1e-12..1.0 - 1e-12)))
            .collect()
    }

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("x{j}")).collect()
    }

    #[test]
    fn hall_sheather_closed_form() {
        let h = hall_sheather_bandwidth(100, lvl(0.5), 0.05).unwrap();
        assert!((h - 0.20931604694700323).abs() < 1e-12, "{h}");
        let h = hall_sheather_bandwidth(500, lvl(0.9), 0.05).unwrap();
        assert!((h - 0.0435925911785106).abs() < 1e-12, "{h}");
    }

    #[test]
    fn hall_sheather_decreases_in_n() {
        let mut prev = f64::INFINITY;
        for n in [20, 50, 100, 1000, 10_000] {
            let h = hall_sheather_bandwidth(n, lvl(0.3), 0.05).unwrap();
            assert!(h < prev);
            prev = h;
        }
    }

    #[test]
    fn hall_sheather_extreme_tail() {
        assert!(matches!(
            hall_sheather_bandwidth(20, lvl(0.01), 0.05),
            Err(Error::Bandwidth(_))
        ));
        let h = hall_sheather_bandwidth(90, lvl(0.01), 0.05).unwrap();
        assert!(h < 0.01 && h > 0.0);
    }

    #[test]
    fn coefficient_arithmetic() {
        let fit = QrFit {
            tau: lvl(0.5),
            columns: vec!["a".into(), "b".into()],
            beta: vec![0.4, 0.0],
            residuals: vec![],
            objective: 1.0,
            n: 10,
            p: 2,
            basic_indices: vec![],
            iterations: 0,
        };
        let cov = CovarianceEstimate {
            matrix: DMatrix::from_diagonal_element(2, 2, 0.04),
            bandwidth: 1.0,
            kernel: Kernel::Uniform,
            tau: lvl(0.5),
        };
        let t = coefficient_table(&fit, &cov, 0.05).unwrap();
        let a = &t.rows[0];
        assert!((a.std_error - 0.2).abs() < 1e-15);
        assert!((a.z - 2.0).abs() < 1e-15);
        assert!((a.ci_lo - 0.008).abs() < 1e-3 && (a.ci_hi - 0.792).abs() < 1e-3);
        assert!((a.p_value - 0.04550026389635842).abs() < 1e-10);
        let b = &t.rows[1];
        assert_eq!((b.z, b.p_value), (0.0, 1.0));
        assert_eq!(b.ci_lo, -b.ci_hi);

        let mut bad = cov.clone();
        bad.matrix[(1, 1)] = 0.0;
        assert!(matches!(coefficient_table(&fit, &bad, 0.05), Err(Error::Covariance(_))));
    }

    #[test]
    fn median_variance_matches_asymptotics() {
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let n = 2000;
        let y = normal_draws(&mut rng, n);
        let x = DMatrix::from_element(n, 1, 1.0);
        let fit = fit_matrix(&x, &y, lvl(0.5), &names(1)).unwrap();
        let truth = (0.25 / n as f64) / std_normal().pdf(0.0).powi(2);
        for kernel in [Kernel::Uniform, Kernel::Gaussian] {
            let h = select_bandwidth(BandwidthRule::HallSheather, &fit, 0.05).unwrap();
            let cov = powell_covariance(&x, &fit, h, kernel).unwrap();
            let v = cov.matrix[(0, 0)];
            assert!((v / truth - 1.0).abs() < 0.25, "{kernel}: {v} vs {truth}");
        }
    }

    fn location_design(rng: &mut ChaCha20Rng, n: usize) -> (DMatrix<f64>, Vec<f64>) {
        let e = normal_draws(rng, n);
        let x = DMatrix::from_fn(n, 2, |_, j| if j == 0 { 1.0 } else { rng.random::<f64>() * 2.0 });
        let y = (0..n).map(|i| 1.0 + 2.0 * x[(i, 1)] + e[i]).collect();
        (x, y)
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (x, y) = location_design(&mut rng, 300);
        for tau in [0.1, 0.5, 0.9] {
            let fit = fit_matrix(&x, &y, lvl(tau), &names(2)).unwrap();
            let h = select_bandwidth(BandwidthRule::HallSheather, &fit, 0.05).unwrap();
            for kernel in [Kernel::Uniform, Kernel::Gaussian] {
                let c = powell_covariance(&x, &fit, h, kernel).unwrap().matrix;
                assert!((&c - c.transpose()).abs().max() < 1e-12);
                assert!(c.symmetric_eigen().eigenvalues.min() >= -1e-10);
            }
        }
    }

    #[test]
    fn slope_column_scaling_halves_its_se() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let (x, y) = location_design(&mut rng, 400);
        let fit = fit_matrix(&x, &y, lvl(0.5), &names(2)).unwrap();
        let h = select_bandwidth(BandwidthRule::HallSheather, &fit, 0.05).unwrap();
        let se = powell_covariance(&x, &fit, h, Kernel::Uniform).unwrap().std_errors();

        let mut x2 = x.clone();
        x2.column_mut(1).scale_mut(2.0);
        let fit2 = fit_matrix(&x2, &y, lvl(0.5), &names(2)).unwrap();
        let se2 = powell_covariance(&x2, &fit2, h, Kernel::Uniform).unwrap().std_errors();
        assert!((se2[1] - se[1] / 2.0).abs() < 1e-10 * se[1]);
        assert!((se2[0] - se[0]).abs() < 1e-10 * se[0]);
    }

    #[test]
    fn row_order_does_not_matter() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let (x, y) = location_design(&mut rng, 200);
        let fit = fit_matrix(&x, &y, lvl(0.3), &names(2)).unwrap();
        let se = powell_covariance(&x, &fit, 0.4, Kernel::Gaussian).unwrap().std_errors();

        let perm: Vec<usize> = (0..200).rev().collect();
        let xp = x.select_rows(&perm);
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let fitp = fit_matrix(&xp, &yp, lvl(0.3), &names(2)).unwrap();
        let sep = powell_covariance(&xp, &fitp, 0.4, Kernel::Gaussian).unwrap().std_errors();
        for (a, b) in se.iter().zip(&sep) {
            assert!((a - b).abs() < 1e-10 * a);
        }
    }

    #[test]
    fn wide_uniform_bandwidth_inflates_errors() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let (x, y) = location_design(&mut rng, 200);
        let fit = fit_matrix(&x, &y, lvl(0.5), &names(2)).unwrap();
        let span = fit.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let mut prev = 0.0;
        for mult in [1.0, 10.0, 100.0] {
            let se = powell_covariance(&x, &fit, span * 1.01 * mult, Kernel::Uniform)
                .unwrap()
                .std_errors()[1];
            assert!(se > prev);
            prev = se;
        }
    }

    #[test]
    fn empty_kernel_window_is_singular() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let (x, y) = location_design(&mut rng, 100);
        let mut fit = fit_matrix(&x, &y, lvl(0.5), &names(2)).unwrap();
        fit.residuals = vec![5.0; 100];
        assert!(matches!(
            powell_covariance(&x, &fit, 1.0, Kernel::Uniform),
            Err(Error::SingularHessian { .. })
        ));
    }

    #[test]
    fn parse_rules() {
        assert_eq!("hall-sheather".parse::<BandwidthRule>().unwrap(), BandwidthRule::HallSheather);
        assert_eq!("0.5".parse::<BandwidthRule>().unwrap(), BandwidthRule::Fixed(0.5));
        assert!("-1".parse::<BandwidthRule>().is_err());
        assert_eq!("gaussian".parse::<Kernel>().unwrap(), Kernel::Gaussian);
        assert!("epanechnikov".parse::<Kernel>().is_err());
    }
}
