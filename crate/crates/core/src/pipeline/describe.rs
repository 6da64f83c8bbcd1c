//! Descriptive statistics per series, optionally split at a period.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::timeseries::{Frame, Period};

/// Empirical quantile `inf { x : F_n(x) ≥ p }` of sorted data.
pub fn inf_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let k = ((n as f64 * p) - 1e-9).ceil().max(1.0) as usize;
    sorted[k.min(n) - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescribeRow {
    pub series: String,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

impl DescribeRow {
    pub fn from_values(series: &str, values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries(series.to_string()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(DescribeRow {
            series: series.to_string(),
            n: sorted.len(),
            min: sorted[0],
            q1: inf_quantile(&sorted, 0.25),
            median: inf_quantile(&sorted, 0.5),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            q3: inf_quantile(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescribeTables {
    pub full: Vec<DescribeRow>,
    pub split: Option<Period>,
    /// Periods before `split`.
    pub pre: Option<Vec<DescribeRow>>,
    /// Periods from `split` on.
    pub post: Option<Vec<DescribeRow>>,
}

/// Six-number summaries of every series in `frame`.
pub fn describe(frame: &Frame, split: Option<Period>) -> Result<DescribeTables> {
    if frame.is_empty() {
        return Err(Error::EmptySeries("frame has no series".into()));
    }
    let full = frame
        .iter()
        .map(|(name, s)| DescribeRow::from_values(name, s.values()))
        .collect::<Result<Vec<_>>>()?;
    let (pre, post) = match split {
        None => (None, None),
        Some(at) => {
            let mut pre = Vec::new();
            let mut post = Vec::new();
            for (name, s) in frame.iter() {
                let (a, b): (Vec<(Period, f64)>, Vec<(Period, f64)>) =
                    s.periods().zip(s.values().iter().copied()).partition(|(p, _)| *p < at);
                let side = |part: Vec<(Period, f64)>, label: &str| {
                    let v: Vec<f64> = part.into_iter().map(|(_, v)| v).collect();
                    if v.is_empty() {
                        Err(Error::EmptySeries(format!(
                            "{name} has no observations {label} {at}"
                        )))
                    } else {
                        DescribeRow::from_values(name, &v)
                    }
                };
                pre.push(side(a, "before")?);
                post.push(side(b, "from")?);
            }
            (Some(pre), Some(post))
        }
    };
    Ok(DescribeTables {
        full,
        split,
        pre,
        post,
    })
}
