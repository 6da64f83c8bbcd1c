//! Pearson, Spearman and Kendall tau-b dependence, plus lag tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{ColumnRef, Frame};

/// Minimum number of aligned rows for a lag-table entry.
pub const MIN_ROWS: usize = 3;

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < MIN_ROWS {
        return Err(Error::SmallSample {
            n: x.len(),
            required: MIN_ROWS,
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Twice the 1-based mid-ranks; always integers.
fn doubled_midranks(x: &[f64]) -> Vec<i64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        // positions i..=j share ranks i+1..=j+1
        let r = (i + j + 2) as i64;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Mid-ranks (1-based, ties share the average rank).
pub fn midranks(x: &[f64]) -> Vec<f64> {
    doubled_midranks(x).into_iter().map(|r| r as f64 / 2.0).collect()
}

/// Pearson correlation of the mid-ranks. The moments of the doubled ranks
/// are accumulated in integers, so the only rounding is the final division.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < MIN_ROWS {
        return Err(Error::SmallSample {
            n: x.len(),
            required: MIN_ROWS,
        });
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::UndefinedCorrelation("NaN input"));
    }
    let rx = doubled_midranks(x);
    let ry = doubled_midranks(y);
    let n = x.len() as i128;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (&a, &b) in rx.iter().zip(&ry) {
        let (a, b) = (a as i128, b as i128);
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let cxy = n * sxy - sx * sy;
    let cxx = n * sxx - sx * sx;
    let cyy = n * syy - sy * sy;
    if cxx == 0 || cyy == 0 {
        return Err(Error::UndefinedCorrelation("constant input"));
    }
    Ok((cxy as f64 / ((cxx as f64) * (cyy as f64)).sqrt()).clamp(-1.0, 1.0))
}

/// Pair counts entering Kendall's tau-b.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub n_pairs: i64,
    /// concordant minus discordant
    pub score: i64,
    pub ties_x: i64,
    pub ties_y: i64,
}

impl PairCounts {
    pub fn tau_b(&self) -> Result<f64> {
        let dx = (self.n_pairs - self.ties_x) as f64;
        let dy = (self.n_pairs - self.ties_y) as f64;
        if dx == 0.0 || dy == 0.0 {
            return Err(Error::UndefinedCorrelation("all values tied"));
        }
        Ok(self.score as f64 / (dx * dy).sqrt())
    }
}

/// Kendall pair counts in `O(n log n)` (Knight's merge-sort algorithm).
pub fn kendall_counts(x: &[f64], y: &[f64]) -> Result<PairCounts> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    let n_pairs = (n as i64) * (n as i64 - 1) / 2;

    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let tied_runs = |eq: &dyn Fn(usize, usize) -> bool| -> i64 {
        let mut total = 0i64;
        let mut run = 1i64;
        for i in 1..n {
            if eq(i - 1, i) {
                run += 1;
            } else {
                total += run * (run - 1) / 2;
                run = 1;
            }
        }
        total + run * (run - 1) / 2
    };
    let ties_x = if n == 0 { 0 } else { tied_runs(&|a, b| pairs[a].0 == pairs[b].0) };
    let ties_xy = if n == 0 {
        0
    } else {
        tied_runs(&|a, b| pairs[a].0 == pairs[b].0 && pairs[a].1 == pairs[b].1)
    };

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = merge_count(&mut ys);
    let ties_y = if n == 0 { 0 } else { tied_runs(&|a, b| ys[a] == ys[b]) };

    let score = n_pairs - ties_x - ties_y + ties_xy - 2 * swaps;
    Ok(PairCounts {
        n_pairs,
        score,
        ties_x,
        ties_y,
    })
}

/// Sorts `v` ascending and returns the number of strict inversions.
fn merge_count(v: &mut [f64]) -> i64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mut buf = v.to_vec();
    let mut swaps = 0i64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j, mut k) = (lo, mid, lo);
            while i < mid && j < hi {
                if v[j] < v[i] {
                    buf[k] = v[j];
                    swaps += (mid - i) as i64;
                    j += 1;
                } else {
                    buf[k] = v[i];
                    i += 1;
                }
                k += 1;
            }
            buf[k..k + (mid - i)].copy_from_slice(&v[i..mid]);
            k += mid - i;
            buf[k..k + (hi - j)].copy_from_slice(&v[j..hi]);
            lo = hi;
        }
        v.copy_from_slice(&buf);
        width *= 2;
    }
    swaps
}

/// Kendall's tau-b.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::SmallSample {
            n: x.len(),
            required: 2,
        });
    }
    kendall_counts(x, y)?.tau_b()
}

/// Row filter applied to the response after lag alignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubsampleRule {
    /// response < 0
    Deflation,
    /// response > threshold
    AboveThreshold { threshold: f64 },
}

impl SubsampleRule {
    pub fn keeps(&self, response: f64) -> bool {
        match *self {
            SubsampleRule::Deflation => response < 0.0,
            SubsampleRule::AboveThreshold { threshold } => response > threshold,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SubsampleRule::Deflation => "deflation".into(),
            SubsampleRule::AboveThreshold { threshold } => format!("above_{threshold}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagMeasures {
    pub lag: usize,
    pub n: usize,
    pub pearson: f64,
    pub spearman: f64,
    pub kendall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceTable {
    pub response: String,
    pub covariate: String,
    pub rule: Option<SubsampleRule>,
    pub rows: Vec<LagMeasures>,
}

/// Dependence of `response` on `covariate` lagged `0..=max_lag` quarters.
pub fn lag_table(
    frame: &Frame,
    response: &str,
    covariate: &str,
    max_lag: usize,
    rule: Option<SubsampleRule>,
) -> Result<DependenceTable> {
    lag_table_from(frame, response, covariate, 0, max_lag, rule)
}

/// As [`lag_table`] but starting at `min_lag` (autocorrelation tables skip 0).
pub fn lag_table_from(
    frame: &Frame,
    response: &str,
    covariate: &str,
    min_lag: usize,
    max_lag: usize,
    rule: Option<SubsampleRule>,
) -> Result<DependenceTable> {
    let rows = (min_lag..=max_lag)
        .into_par_iter()
        .map(|lag| {
            let d = frame.assemble(response, &[ColumnRef::new(covariate, lag)], false)?;
            let (mut ys, mut xs) = (Vec::new(), Vec::new());
            for (i, &yv) in d.y().iter().enumerate() {
                if rule.is_none_or(|r| r.keeps(yv)) {
                    ys.push(yv);
                    xs.push(d.x()[(i, 0)]);
                }
            }
            if ys.len() < MIN_ROWS {
                return Err(Error::SmallSample {
                    n: ys.len(),
                    required: MIN_ROWS,
                });
            }
            Ok(LagMeasures {
                lag,
                n: ys.len(),
                pearson: pearson(&xs, &ys)?,
                spearman: spearman(&xs, &ys)?,
                kendall: kendall(&xs, &ys)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DependenceTable {
        response: response.to_string(),
        covariate: covariate.to_string(),
        rule,
        rows,
    })
}
