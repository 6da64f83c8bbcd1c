use serde::{Deserialize, Serialize};

use super::Period;
use crate::error::{Error, Result};

/// Contiguous quarterly observations anchored at `start`.
///
/// Index `t` holds the value for `start.advance(t)`. There are no gaps and
/// every value is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterlySeries {
    start: Period,
    values: Vec<f64>,
}

impl QuarterlySeries {
    pub fn new(start: Period, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries(format!("no values starting at {start}")));
        }
        if let Some(t) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                name: String::new(),
                period: start.advance(t as i64),
            });
        }
        Ok(QuarterlySeries { start, values })
    }

    pub fn start(&self) -> Period {
        self.start
    }

    /// Last period covered (inclusive).
    pub fn end(&self) -> Period {
        self.start.advance(self.values.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, period: Period) -> Option<f64> {
        let t = self.start.quarters_until(period);
        if t < 0 {
            return None;
        }
        self.values.get(t as usize).copied()
    }

    pub fn periods(&self) -> impl Iterator<Item = Period> + '_ {
        (0..self.values.len()).map(move |t| self.start.advance(t as i64))
    }

    /// Quarter-over-quarter log growth: `ln(s[t+1]) - ln(s[t])`.
    pub fn log_growth(&self) -> Result<Self> {
        self.check_positive()?;
        if self.values.len() < 2 {
            return Err(Error::EmptySeries("log growth of a single observation".into()));
        }
        let values = self
            .values
            .windows(2)
            .map(|w| w[1].ln() - w[0].ln())
            .collect();
        QuarterlySeries::new(self.start.succ(), values)
    }

    pub fn ln(&self) -> Result<Self> {
        self.check_positive()?;
        QuarterlySeries::new(self.start, self.values.iter().map(|v| v.ln()).collect())
    }

    /// Series whose value at period `p` is this series' value at `p - k`.
    pub fn lag(&self, k: usize) -> Result<Self> {
        if k >= self.values.len() {
            return Err(Error::EmptySeries(format!(
                "lag {k} of a series with {} observations",
                self.values.len()
            )));
        }
        QuarterlySeries::new(
            self.start.advance(k as i64),
            self.values[..self.values.len() - k].to_vec(),
        )
    }

    /// Series whose value at period `p` is this series' value at `p + k`.
    pub fn lead(&self, k: usize) -> Result<Self> {
        if k >= self.values.len() {
            return Err(Error::EmptySeries(format!(
                "lead {k} of a series with {} observations",
                self.values.len()
            )));
        }
        QuarterlySeries::new(self.start, self.values[k..].to_vec())
    }

    /// Trailing sum over `window` quarters ending at each period.
    pub fn rolling_sum(&self, window: usize) -> Result<Self> {
        if window == 0 || window > self.values.len() {
            return Err(Error::EmptySeries(format!(
                "rolling window {window} over {} observations",
                self.values.len()
            )));
        }
        let values = self.values.windows(window).map(|w| w.iter().sum()).collect();
        QuarterlySeries::new(self.start.advance(window as i64 - 1), values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        QuarterlySeries::new(self.start, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Elementwise combination over the common span.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let lo = self.start.max(other.start);
        let hi = self.end().min(other.end());
        if lo > hi {
            return Err(Error::EmptyIntersection);
        }
        let n = lo.quarters_until(hi) as usize + 1;
        let a = self.start.quarters_until(lo) as usize;
        let b = other.start.quarters_until(lo) as usize;
        let values = (0..n)
            .map(|t| f(self.values[a + t], other.values[b + t]))
            .collect();
        QuarterlySeries::new(lo, values)
    }

    /// Values restricted to `[from, to]`, which must lie inside the span.
    pub fn window(&self, from: Period, to: Period) -> Option<&[f64]> {
        let a = self.start.quarters_until(from);
        let b = self.start.quarters_until(to);
        if a < 0 || b < a || b as usize >= self.values.len() {
            return None;
        }
        Some(&self.values[a as usize..=b as usize])
    }

    fn check_positive(&self) -> Result<()> {
        match self.values.iter().position(|&v| v <= 0.0) {
            Some(t) => Err(Error::NonPositive {
                name: String::new(),
                period: self.start.advance(t as i64),
                value: self.values[t],
            }),
            None => Ok(()),
        }
    }
}
