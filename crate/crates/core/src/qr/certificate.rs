//! Subgradient optimality check for a quantile regression fit.
//!
//! `β` minimises the pinball loss iff there are multipliers `v_i` with
//! `v_i = τ` where the residual is positive, `v_i = τ − 1` where it is
//! negative, `v_i ∈ [τ − 1, τ]` where it is zero, and `X'v = 0`.
//!
//! Only the zero-residual multipliers are free, so the check is a small
//! box-constrained feasibility problem `A v_Z = c`, `A = X_Z'`. It is solved
//! here from scratch by a bounded-variable phase-one simplex, without
//! reusing any state from the solver that produced the fit.

use nalgebra::DMatrix;
use serde::Serialize;

use super::QrFit;

/// Violations at or below this level count as optimal.
pub const OPTIMALITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityCertificate {
    pub optimal: bool,
    /// Largest violation of `X'v = 0`, per equation scaled by the column's
    /// largest absolute entry, or of the box constraints.
    pub violation: f64,
    /// One multiplier per observation.
    pub multipliers: Vec<f64>,
    pub zero_residual_rows: Vec<usize>,
}

/// Verifies the subgradient condition for `fit` on `(x, y)`.
pub fn check_optimality(x: &DMatrix<f64>, y: &[f64], fit: &QrFit) -> OptimalityCertificate {
    let (n, p) = x.shape();
    let tau = fit.tau.value();
    let lo = tau - 1.0;
    let hi = tau;

    let fitted: Vec<f64> = (0..n)
        .map(|i| (0..p).map(|j| x[(i, j)] * fit.beta[j]).sum())
        .collect();
    let scale = y
        .iter()
        .chain(&fitted)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let zero_tol = 1e-9 * scale;

    let mut v = vec![0.0; n];
    let mut zero_rows = Vec::new();
    for i in 0..n {
        let r = y[i] - fitted[i];
        if r.abs() <= zero_tol {
            zero_rows.push(i);
        } else {
            v[i] = if r > 0.0 { hi } else { lo };
        }
    }

    // c = −Σ_{i∉Z} v_i x_i
    let mut c = vec![0.0; p];
    for i in 0..n {
        for (j, cj) in c.iter_mut().enumerate() {
            *cj -= v[i] * x[(i, j)];
        }
    }
    let a = DMatrix::from_fn(p, zero_rows.len(), |j, k| x[(zero_rows[k], j)]);
    let vz = box_feasible_point(&a, &c, lo, hi);
    for (k, &i) in zero_rows.iter().enumerate() {
        v[i] = vz[k];
    }

    let col_scale: Vec<f64> = (0..p)
        .map(|j| {
            x.column(j)
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(f64::MIN_POSITIVE)
        })
        .collect();
    let mut violation = 0.0f64;
    for j in 0..p {
        let s: f64 = (0..n).map(|i| v[i] * x[(i, j)]).sum();
        violation = violation.max(s.abs() / col_scale[j]);
    }
    for &vi in &v {
        violation = violation.max(lo - vi).max(vi - hi);
    }

    OptimalityCertificate {
        optimal: violation <= OPTIMALITY_TOLERANCE,
        violation,
        multipliers: v,
        zero_residual_rows: zero_rows,
    }
}

/// Returns `v ∈ [lo, hi]^m` minimising `‖A v − c‖₁`; when the box meets the
/// affine set the result satisfies `A v = c` up to rounding.
fn box_feasible_point(a: &DMatrix<f64>, c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let (p, m) = a.shape();
    if m == 0 {
        return Vec::new();
    }
    // Variables 0..m are v (bounded), m..m+p are artificials (≥ 0).
    let nv = m + p;
    let mut value = vec![lo; nv];
    let mut at_upper = vec![false; nv];
    let resid: Vec<f64> = (0..p)
        .map(|r| c[r] - (0..m).map(|k| a[(r, k)] * lo).sum::<f64>())
        .collect();
    let sign: Vec<f64> = resid.iter().map(|r| if *r >= 0.0 { 1.0 } else { -1.0 }).collect();

    // Tableau B⁻¹[A | S] with B = S initially, so B⁻¹ = S.
    let mut tab = DMatrix::<f64>::zeros(p, nv);
    for r in 0..p {
        for k in 0..m {
            tab[(r, k)] = sign[r] * a[(r, k)];
        }
        tab[(r, m + r)] = 1.0;
    }
    let mut basic: Vec<usize> = (m..nv).collect();
    for r in 0..p {
        value[m + r] = resid[r].abs();
    }
    let cost = |j: usize| if j >= m { 1.0 } else { 0.0 };
    let upper = |j: usize| if j >= m { f64::INFINITY } else { hi };
    let lower = |j: usize| if j >= m { 0.0 } else { lo };
    let tol = 1e-12;

    for _ in 0..10_000 {
        let mut is_basic = vec![false; nv];
        for &b in &basic {
            is_basic[b] = true;
        }
        // Bland: smallest index with an improving reduced cost.
        let mut entering = None;
        for j in 0..nv {
            if is_basic[j] {
                continue;
            }
            let d = cost(j) - (0..p).map(|r| cost(basic[r]) * tab[(r, j)]).sum::<f64>();
            if !at_upper[j] && d < -tol {
                entering = Some((j, 1.0));
                break;
            }
            if at_upper[j] && d > tol {
                entering = Some((j, -1.0));
                break;
            }
        }
        let Some((j, dir)) = entering else {
            break;
        };

        // Ratio test; ties go to the smallest variable index.
        let mut step = upper(j) - lower(j);
        let mut leave: Option<(usize, bool)> = None;
        let mut leave_var = j;
        for r in 0..p {
            let rate = -dir * tab[(r, j)];
            let b = basic[r];
            let limit = if rate < -tol {
                (value[b] - lower(b)).max(0.0) / -rate
            } else if rate > tol && upper(b).is_finite() {
                (upper(b) - value[b]).max(0.0) / rate
            } else {
                continue;
            };
            if limit < step || (limit == step && b < leave_var) {
                step = limit;
                leave = Some((r, rate > 0.0));
                leave_var = b;
            }
        }
        if !step.is_finite() {
            break;
        }

        for r in 0..p {
            value[basic[r]] -= dir * step * tab[(r, j)];
        }
        value[j] += dir * step;

        match leave {
            None => at_upper[j] = !at_upper[j],
            Some((r, hits_upper)) => {
                let out = basic[r];
                value[out] = if hits_upper { upper(out) } else { lower(out) };
                at_upper[out] = hits_upper;
                at_upper[j] = false;
                let piv = tab[(r, j)];
                for k in 0..nv {
                    tab[(r, k)] /= piv;
                }
                for rr in 0..p {
                    if rr != r {
                        let f = tab[(rr, j)];
                        if f != 0.0 {
                            for k in 0..nv {
                                tab[(rr, k)] -= f * tab[(r, k)];
                            }
                        }
                    }
                }
                basic[r] = j;
            }
        }
    }
    value[..m].iter().map(|v| v.clamp(lo, hi)).collect()
}
