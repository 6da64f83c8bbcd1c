//! Basis-exchange simplex for the pinball-loss linear program.
//!
//! State is a set `h` of `p` observations with `X_h` nonsingular, so that
//! `β = X_h⁻¹ y_h`, plus for every other row the side (`u⁺` or `u⁻`) whose
//! slack is basic. A zero residual outside `h` is a degenerate basic slack
//! and keeps whatever side it was last assigned.
//!
//! Dual values are `d_i = τ` on the positive side and `τ − 1` on the
//! negative side, and `X_h' d_h = −Σ_{i∉h} d_i x_i` on the basis. The
//! reduced costs of releasing basis row `j` upward or downward are
//! `τ − d_j` and `1 − τ + d_j`; the vertex is optimal when every `d_j`
//! lies in `[τ − 1, τ]`, and `d` is then a subgradient certificate.
//!
//! A nondegenerate iteration follows the most negative reduced cost and
//! performs an exact line search along the edge, passing through residual
//! sign changes while the directional derivative stays negative (the
//! Barrodale–Roberts long step). After a step that fails to lower the
//! objective the next pivot uses Bland's smallest-index rule with a plain
//! ratio test, which rules out cycling on degenerate vertices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Reduced costs above `-REDUCED_COST_TOL` count as nonnegative.
const REDUCED_COST_TOL: f64 = 1e-10;

pub(crate) struct Solution {
    pub beta: Vec<f64>,
    pub basis: Vec<usize>,
    pub iterations: usize,
}

struct Breakpoint {
    t: f64,
    row: usize,
    rate: f64,
    var: usize,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn solve(x: &[f64], n: usize, p: usize, y: &[f64], tau: f64) -> Result<Solution> {
    let row = |i: usize| &x[i * p..(i + 1) * p];

    let mut basis = initial_basis(x, n, p, y)?;
    let mut in_basis = vec![false; n];
    for &i in &basis {
        in_basis[i] = true;
    }

    let y_scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut positive = vec![true; n];
    let mut resid = vec![0.0; n];
    let mut beta = vec![0.0; p];
    let mut bland = false;
    let mut last_objective = f64::INFINITY;
    let max_iter = 50 * (n + p) + 1000;

    for iteration in 0..max_iter {
        let xh = DMatrix::from_fn(p, p, |k, j| x[basis[k] * p + j]);
        let binv = xh
            .try_inverse()
            .ok_or_else(|| Error::Numerical("simplex basis matrix became singular".into()))?;
        let yh = DVector::from_fn(p, |k, _| y[basis[k]]);
        let b = &binv * yh;
        beta.copy_from_slice(b.as_slice());

        let fit_scale = y_scale.max(1e-300);
        let zero_tol = 1e-12 * fit_scale;
        let mut objective = 0.0;
        for i in 0..n {
            if in_basis[i] {
                resid[i] = 0.0;
                continue;
            }
            let r = y[i] - dot(row(i), &beta);
            resid[i] = r;
            if r > zero_tol {
                positive[i] = true;
            } else if r < -zero_tol {
                positive[i] = false;
            }
            objective += if r < 0.0 { (tau - 1.0) * r } else { tau * r };
        }
        if iteration > 0 {
            bland = !(objective < last_objective - 1e-13 * last_objective.abs().max(1e-300));
        }
        last_objective = objective;

        // g = Σ_{i∉h} d_i x_i, d_h = −X_h^{-T} g
        let mut g = vec![0.0; p];
        for i in 0..n {
            if in_basis[i] {
                continue;
            }
            let d = if positive[i] { tau } else { tau - 1.0 };
            for (gj, xj) in g.iter_mut().zip(row(i)) {
                *gj += d * xj;
            }
        }
        let dh: Vec<f64> = (0..p)
            .map(|k| -(0..p).map(|j| binv[(j, k)] * g[j]).sum::<f64>())
            .collect();

        // Entering candidate: (position in basis, direction sign, reduced cost).
        let mut entering: Option<(usize, f64, f64)> = None;
        if bland {
            let mut best_var = usize::MAX;
            for (k, &d) in dh.iter().enumerate() {
                let j = basis[k];
                for (s, rc, var) in [(1.0, tau - d, 2 * j), (-1.0, 1.0 - tau + d, 2 * j + 1)] {
                    if rc < -REDUCED_COST_TOL && var < best_var {
                        best_var = var;
                        entering = Some((k, s, rc));
                    }
                }
            }
        } else {
            for (k, &d) in dh.iter().enumerate() {
                for (s, rc) in [(1.0, tau - d), (-1.0, 1.0 - tau + d)] {
                    if rc < -REDUCED_COST_TOL && entering.is_none_or(|e| rc < e.2) {
                        entering = Some((k, s, rc));
                    }
                }
            }
        }
        let Some((k, s, rc)) = entering else {
            return Ok(Solution {
                beta,
                basis,
                iterations: iteration,
            });
        };

        // Residual of row i moves at rate a_i = s · x_i' X_h⁻¹ e_k.
        let e: Vec<f64> = (0..p).map(|j| binv[(j, k)]).collect();
        let mut breaks = Vec::new();
        for i in 0..n {
            if in_basis[i] {
                continue;
            }
            let rate = s * dot(row(i), &e);
            let t = if positive[i] && rate < 0.0 {
                resid[i].max(0.0) / -rate
            } else if !positive[i] && rate > 0.0 {
                (-resid[i]).max(0.0) / rate
            } else {
                continue;
            };
            breaks.push(Breakpoint {
                t,
                row: i,
                rate,
                var: 2 * i + usize::from(!positive[i]),
            });
        }
        if breaks.is_empty() {
            return Err(Error::Unbounded);
        }

        let leaving_row = if bland {
            breaks
                .iter()
                .min_by(|a, b| a.t.total_cmp(&b.t).then(a.var.cmp(&b.var)))
                .map(|b| b.row)
                .expect("nonempty")
        } else {
            breaks.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.var.cmp(&b.var)));
            let mut slope = rc;
            let mut stop = None;
            for (idx, bp) in breaks.iter().enumerate() {
                slope += bp.rate.abs();
                if slope >= 0.0 {
                    stop = Some(idx);
                    break;
                }
            }
            let Some(stop) = stop else {
                return Err(Error::Unbounded);
            };
            for bp in &breaks[..stop] {
                positive[bp.row] = !positive[bp.row];
            }
            breaks[stop].row
        };

        let leaving_basis_row = basis[k];
        in_basis[leaving_basis_row] = false;
        positive[leaving_basis_row] = s > 0.0;
        basis[k] = leaving_row;
        in_basis[leaving_row] = true;
    }
    Err(Error::NoConvergence(max_iter))
}

/// Picks `p` linearly independent rows, preferring those closest to the
/// least-squares fit so that the walk starts near the optimum.
fn initial_basis(x: &[f64], n: usize, p: usize, y: &[f64]) -> Result<Vec<usize>> {
    let xm = DMatrix::from_row_slice(n, p, x);
    let xtx = xm.transpose() * &xm;
    let xty = xm.transpose() * DVector::from_column_slice(y);
    let ols = xtx
        .cholesky()
        .map(|c| c.solve(&xty))
        .unwrap_or_else(|| DVector::zeros(p));

    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|i| {
            let r = y[i] - dot(&x[i * p..(i + 1) * p], ols.as_slice());
            (r.abs(), i)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // Greedy Gram–Schmidt on candidate rows.
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut basis = Vec::with_capacity(p);
    for &(_, i) in &order {
        let xi = &x[i * p..(i + 1) * p];
        let norm = dot(xi, xi).sqrt();
        if norm == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = xi.iter().map(|a| a / norm).collect();
        for _ in 0..2 {
            for q in &ortho {
                let c = dot(&v, q);
                for (vj, qj) in v.iter_mut().zip(q) {
                    *vj -= c * qj;
                }
            }
        }
        let rn = dot(&v, &v).sqrt();
        if rn > 1e-8 {
            for vj in &mut v {
                *vj /= rn;
            }
            ortho.push(v);
            basis.push(i);
            if basis.len() == p {
                return Ok(basis);
            }
        }
    }
    Err(Error::SingularDesign {
        columns: vec!["<rows do not span the column space>".into()],
    })
}
