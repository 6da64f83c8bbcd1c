//! Hodrick–Prescott trend extraction.
//!
//! The trend solves `(I + λ D'D) τ = y`, where `D` is the `(T-2) × T`
//! second-difference operator. The computation goes through the gap, via a
//! pentadiagonal system factored with a banded Cholesky decomposition in
//! `O(T)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::timeseries::QuarterlySeries;

/// Smoothing parameter conventionally used for quarterly data.
pub const DEFAULT_LAMBDA: f64 = 1600.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HpResult {
    pub trend: QuarterlySeries,
    pub gap: QuarterlySeries,
    pub lambda: f64,
}

/// Solves a symmetric positive definite pentadiagonal system given its
/// main, first and second super-diagonals.
fn banded_cholesky_solve(a0: &[f64], a1: &[f64], a2: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let t = a0.len();
    // L has diagonal l0, first sub-diagonal l1 (L[i+1][i]) and second
    // sub-diagonal l2 (L[i+2][i]).
    let mut l0 = vec![0.0; t];
    let mut l1 = vec![0.0; t.saturating_sub(1)];
    let mut l2 = vec![0.0; t.saturating_sub(2)];
    for i in 0..t {
        let mut diag = a0[i];
        if i >= 1 {
            diag -= l1[i - 1] * l1[i - 1];
        }
        if i >= 2 {
            diag -= l2[i - 2] * l2[i - 2];
        }
        if !(diag > 0.0) {
            return Err(Error::Numerical("HP system lost positive definiteness".into()));
        }
        l0[i] = diag.sqrt();
        if i + 1 < t {
            let mut v = a1[i];
            if i >= 1 {
                v -= l2[i - 1] * l1[i - 1];
            }
            l1[i] = v / l0[i];
        }
        if i + 2 < t {
            l2[i] = a2[i] / l0[i];
        }
    }

    let mut z = vec![0.0; t];
    for i in 0..t {
        let mut v = rhs[i];
        if i >= 1 {
            v -= l1[i - 1] * z[i - 1];
        }
        if i >= 2 {
            v -= l2[i - 2] * z[i - 2];
        }
        z[i] = v / l0[i];
    }
    let mut x = vec![0.0; t];
    for i in (0..t).rev() {
        let mut v = z[i];
        if i + 1 < t {
            v -= l1[i] * x[i + 1];
        }
        if i + 2 < t {
            v -= l2[i] * x[i + 2];
        }
        x[i] = v / l0[i];
    }
    Ok(x)
}

/// HP cycle (gap) of `y` with smoothing `lambda`.
///
/// With `w = λ D τ` the normal equations become `(I/λ + D D') w = D y` and
/// the gap is `D' w`. Constants and linear trends have `D y = 0` and so get
/// an exactly zero gap, and the system stays well conditioned for large λ.
pub fn hp_cycle(y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let t = y.len();
    if t < 4 {
        return Err(Error::SeriesTooShort(t));
    }
    if !(lambda > 0.0) || !lambda.is_finite() || !(1.0 / lambda).is_finite() {
        return Err(Error::InvalidLambda(lambda));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("HP input contains non-finite values".into()));
    }

    let m = t - 2;
    let dy: Vec<f64> = (0..m).map(|k| y[k] - 2.0 * y[k + 1] + y[k + 2]).collect();
    let a0 = vec![6.0 + 1.0 / lambda; m];
    let a1 = vec![-4.0; m - 1];
    let a2 = vec![1.0; m.saturating_sub(2)];
    let w = banded_cholesky_solve(&a0, &a1, &a2, &dy)?;

    let mut gap = vec![0.0; t];
    for (k, wk) in w.iter().enumerate() {
        gap[k] += wk;
        gap[k + 1] -= 2.0 * wk;
        gap[k + 2] += wk;
    }
    Ok(gap)
}

/// HP trend of `y`, the solution of `(I + λ D'D) τ = y`.
pub fn hp_trend(y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let gap = hp_cycle(y, lambda)?;
    Ok(y.iter().zip(&gap).map(|(a, g)| a - g).collect())
}

/// Trend and gap of an already log-transformed GDP series.
pub fn hp_gap(log_gdp: &QuarterlySeries, lambda: f64) -> Result<HpResult> {
    let gap = hp_cycle(log_gdp.values(), lambda)?;
    let trend = log_gdp
        .values()
        .iter()
        .zip(&gap)
        .map(|(y, g)| y - g)
        .collect();
    Ok(HpResult {
        trend: QuarterlySeries::new(log_gdp.start(), trend)?,
        gap: QuarterlySeries::new(log_gdp.start(), gap)?,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::Period;
    use nalgebra::{DMatrix, DVector};

    /// Dense `(I + λ D'D)` built from an explicit D, solved by LU.
    fn dense_oracle(y: &[f64], lambda: f64) -> Vec<f64> {
        let t = y.len();
        let mut d = DMatrix::<f64>::zeros(t - 2, t);
        for k in 0..t - 2 {
            d[(k, k)] = 1.0;
            d[(k, k + 1)] = -2.0;
            d[(k, k + 2)] = 1.0;
        }
        let a = DMatrix::<f64>::identity(t, t) + d.transpose() * &d * lambda;
        let sol = a.lu().solve(&DVector::from_column_slice(y)).unwrap();
        sol.iter().copied().collect()
    }

    fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        a.iter()
            .zip(b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
            / scale
    }

    #[test]
    fn six_point_fixture_matches_dense_solve() {
        let y = [1.0, 3.0, 2.0, 4.0, 3.0, 5.0];
        let fast = hp_trend(&y, 1600.0).unwrap();
        let dense = dense_oracle(&y, 1600.0);
        assert!(max_rel_diff(&fast, &dense) < 1e-10);

        let s = QuarterlySeries::new(Period::new(2000, 1).unwrap(), y.to_vec()).unwrap();
        let r = hp_gap(&s, 1600.0).unwrap();
        for i in 0..6 {
            assert!((r.gap.values()[i] - (y[i] - dense[i])).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_and_linear_are_fixed_points() {
        for lambda in [1.0, 1600.0, 1e6] {
            let c = vec![4.2; 12];
            let tr = hp_trend(&c, lambda).unwrap();
            assert!(tr.iter().all(|v| (v - 4.2).abs() < 1e-10));
            let l: Vec<f64> = (0..12).map(|i| 0.5 + 0.25 * i as f64).collect();
            let tr = hp_trend(&l, lambda).unwrap();
            assert!(tr.iter().zip(&l).all(|(a, b)| (a - b).abs() < 1e-9));
        }
    }

    #[test]
    fn constant_log_gdp_has_zero_gap() {
        let s = QuarterlySeries::new(Period::new(2000, 1).unwrap(), vec![10.0; 8]).unwrap();
        let r = hp_gap(&s, DEFAULT_LAMBDA).unwrap();
        assert!(r.gap.values().iter().all(|g| g.abs() < 1e-12));
        assert_eq!(r.trend.start(), s.start());
        assert_eq!(r.gap.len(), s.len());
    }

    #[test]
    fn huge_lambda_tends_to_linear_fit_residuals() {
        let t = 40;
        let y: Vec<f64> = (0..t)
            .map(|i| 2.0 + 0.03 * i as f64 + 0.1 * ((i * 7919 % 13) as f64 / 13.0 - 0.5))
            .collect();
        let gap: Vec<f64> = y
            .iter()
            .zip(hp_trend(&y, 1e12).unwrap())
            .map(|(a, b)| a - b)
            .collect();
        // least-squares line residuals
        let n = t as f64;
        let xm = (n - 1.0) / 2.0;
        let ym = y.iter().sum::<f64>() / n;
        let sxy: f64 = y.iter().enumerate().map(|(i, v)| (i as f64 - xm) * (v - ym)).sum();
        let sxx: f64 = (0..t).map(|i| (i as f64 - xm).powi(2)).sum();
        let slope = sxy / sxx;
        for (i, g) in gap.iter().enumerate() {
            let resid = y[i] - (ym + slope * (i as f64 - xm));
            assert!((g - resid).abs() < 1e-6, "{i}: {g} vs {resid}");
        }
    }

    #[test]
    fn gap_orthogonal_to_constant_and_ramp() {
        let y: Vec<f64> = (0..50).map(|i| ((i * 37 % 11) as f64).sin() + 0.1 * i as f64).collect();
        let tr = hp_trend(&y, 1600.0).unwrap();
        let gap: Vec<f64> = y.iter().zip(&tr).map(|(a, b)| a - b).collect();
        let s0: f64 = gap.iter().sum();
        let s1: f64 = gap.iter().enumerate().map(|(i, g)| i as f64 * g).sum();
        assert!(s0.abs() < 1e-8 && s1.abs() < 1e-8, "{s0} {s1}");
    }

    #[test]
    fn banded_matches_dense_across_lengths() {
        for t in [4usize, 10, 50, 500] {
            let y: Vec<f64> = (0..t).map(|i| ((i as f64) * 0.37).sin() * 3.0 + i as f64 * 0.01).collect();
            assert!(max_rel_diff(&hp_trend(&y, 1600.0).unwrap(), &dense_oracle(&y, 1600.0)) < 1e-10);
        }
    }

    #[test]
    fn input_validation() {
        assert!(matches!(hp_trend(&[1.0, 2.0, 3.0], 1.0), Err(Error::SeriesTooShort(3))));
        assert!(matches!(hp_trend(&[1.0; 5], 0.0), Err(Error::InvalidLambda(_))));
        assert!(matches!(hp_trend(&[1.0; 5], -3.0), Err(Error::InvalidLambda(_))));
        assert!(hp_trend(&[1.0, f64::NAN, 1.0, 1.0], 1.0).is_err());
    }
}
