use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Period, QuarterlySeries};
use crate::error::{Error, Result};

/// A named collection of quarterly series, kept in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Frame {
    series: IndexMap<String, QuarterlySeries>,
}

impl Frame {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, series: QuarterlySeries) -> Result<()> {
        let name = name.into();
        if self.series.contains_key(&name) {
            return Err(Error::DuplicateName(name));
        }
        self.series.insert(name, series);
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, series: QuarterlySeries) -> Result<Self> {
        self.insert(name, series)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Result<&QuarterlySeries> {
        self.series
            .get(name)
            .ok_or_else(|| Error::UnknownSeries(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.series.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &QuarterlySeries)> {
        self.series.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// Earliest start and latest end over all series.
    pub fn span(&self) -> Option<(Period, Period)> {
        let start = self.series.values().map(|s| s.start()).min()?;
        let end = self.series.values().map(|s| s.end()).max()?;
        Some((start, end))
    }

    /// Periods where every referenced (series, lag) pair has a value.
    pub fn common_span(&self, refs: &[ColumnRef]) -> Result<(Period, Period)> {
        let mut lo: Option<Period> = None;
        let mut hi: Option<Period> = None;
        for r in refs {
            let s = self.get(&r.name)?;
            let a = s.start().advance(r.lag as i64);
            let b = s.end().advance(r.lag as i64);
            lo = Some(lo.map_or(a, |p| p.max(a)));
            hi = Some(hi.map_or(b, |p| p.min(b)));
        }
        match (lo, hi) {
            (Some(lo), Some(hi)) if lo <= hi => Ok((lo, hi)),
            _ => Err(Error::EmptyIntersection),
        }
    }

    /// Builds a design matrix of `response` against lagged columns, keeping
    /// only periods where every requested value exists.
    pub fn assemble(
        &self,
        response: &str,
        columns: &[ColumnRef],
        intercept: bool,
    ) -> Result<DesignMatrix> {
        let mut refs = Vec::with_capacity(columns.len() + 1);
        refs.push(ColumnRef::new(response, 0));
        refs.extend_from_slice(columns);
        let (lo, hi) = self.common_span(&refs)?;
        let n = lo.quarters_until(hi) as usize + 1;

        let y = self
            .get(response)?
            .window(lo, hi)
            .expect("window inside common span")
            .to_vec();

        let offset = usize::from(intercept);
        let p = columns.len() + offset;
        let mut x = DMatrix::<f64>::zeros(n, p);
        if intercept {
            x.column_mut(0).fill(1.0);
        }
        for (j, c) in columns.iter().enumerate() {
            let s = self.get(&c.name)?;
            let from = lo.advance(-(c.lag as i64));
            let to = hi.advance(-(c.lag as i64));
            let vals = s.window(from, to).expect("window inside common span");
            x.column_mut(j + offset).copy_from_slice(vals);
        }

        let mut names = Vec::with_capacity(p);
        if intercept {
            names.push(INTERCEPT.to_string());
        }
        names.extend(columns.iter().map(ColumnRef::label));

        DesignMatrix::new(
            response.to_string(),
            y,
            x,
            names,
            intercept,
            (0..n).map(|t| lo.advance(t as i64)).collect(),
        )
    }
}

pub const INTERCEPT: &str = "intercept";

/// A series name paired with a lag in quarters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnRef {
    pub name: String,
    pub lag: usize,
}

impl ColumnRef {
    pub fn new(name: impl Into<String>, lag: usize) -> Self {
        ColumnRef {
            name: name.into(),
            lag,
        }
    }

    /// Column label used in reports: `gap` for lag 0, `gap_l3` for lag 3.
    pub fn label(&self) -> String {
        if self.lag == 0 {
            self.name.clone()
        } else {
            format!("{}_l{}", self.name, self.lag)
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name, self.lag)
    }
}

impl FromStr for ColumnRef {
    type Err = Error;

    /// Accepts `name` (lag 0) or `name:lag`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.rsplit_once(':') {
            Some((name, lag)) => {
                let lag = lag
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad lag in column reference {s:?}")))?;
                if name.trim().is_empty() {
                    return Err(Error::Config(format!("empty name in column reference {s:?}")));
                }
                Ok(ColumnRef::new(name.trim(), lag))
            }
            None if !s.is_empty() => Ok(ColumnRef::new(s, 0)),
            None => Err(Error::Config("empty column reference".into())),
        }
    }
}

impl Serialize for ColumnRef {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ColumnRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Response vector and regressor matrix with row-period bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    response: String,
    y: Vec<f64>,
    x: DMatrix<f64>,
    columns: Vec<String>,
    intercept: bool,
    periods: Vec<Period>,
}

impl DesignMatrix {
    pub fn new(
        response: String,
        y: Vec<f64>,
        x: DMatrix<f64>,
        columns: Vec<String>,
        intercept: bool,
        periods: Vec<Period>,
    ) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::LengthMismatch {
                left: y.len(),
                right: x.nrows(),
            });
        }
        if columns.len() != x.ncols() {
            return Err(Error::LengthMismatch {
                left: columns.len(),
                right: x.ncols(),
            });
        }
        if periods.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: periods.len(),
                right: y.len(),
            });
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(Error::DuplicateName(c.clone()));
            }
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                name: response,
                period: periods.first().copied().unwrap_or(Period::from_ordinal(0)),
            });
        }
        if intercept && (x.ncols() == 0 || x.column(0).iter().any(|&v| v != 1.0)) {
            return Err(Error::Config("intercept column must be the constant 1".into()));
        }
        Ok(DesignMatrix {
            response,
            y,
            x,
            columns,
            intercept,
            periods,
        })
    }

    /// A design over synthetic row indices, for data without calendar time.
    pub fn from_rows(y: Vec<f64>, x: DMatrix<f64>, intercept: bool) -> Result<Self> {
        let columns = (0..x.ncols())
            .map(|j| {
                if intercept && j == 0 {
                    INTERCEPT.to_string()
                } else {
                    format!("x{j}")
                }
            })
            .collect();
        let start = Period::from_ordinal(0);
        let periods = (0..y.len()).map(|t| start.advance(t as i64)).collect();
        DesignMatrix::new("y".into(), y, x, columns, intercept, periods)
    }

    pub fn response(&self) -> &str {
        &self.response
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn nrows(&self) -> usize {
        self.y.len()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.x.column(j).iter().copied().collect())
    }

    /// Keeps the intercept (if any) plus the listed non-intercept columns,
    /// indexed from 0 over the non-intercept columns.
    pub fn select(&self, covariates: &[usize]) -> Result<DesignMatrix> {
        let offset = usize::from(self.intercept);
        let mut keep: Vec<usize> = (0..offset).collect();
        for &c in covariates {
            let j = c + offset;
            if j >= self.x.ncols() {
                return Err(Error::Config(format!("covariate index {c} out of range")));
            }
            keep.push(j);
        }
        let x = self.x.select_columns(&keep);
        let columns = keep.iter().map(|&j| self.columns[j].clone()).collect();
        DesignMatrix::new(
            self.response.clone(),
            self.y.clone(),
            x,
            columns,
            self.intercept,
            self.periods.clone(),
        )
    }

    /// Design with the same regressors but a different response.
    pub fn with_response(&self, y: Vec<f64>) -> Result<DesignMatrix> {
        DesignMatrix::new(
            self.response.clone(),
            y,
            self.x.clone(),
            self.columns.clone(),
            self.intercept,
            self.periods.clone(),
        )
    }

    /// Column means over the rows.
    pub fn column_means(&self) -> Vec<f64> {
        let n = self.nrows() as f64;
        self.x.column_iter().map(|c| c.sum() / n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(y: i32, q: u8) -> Period {
        Period::new(y, q).unwrap()
    }

    fn seq(start: Period, len: usize, offset: f64) -> QuarterlySeries {
        QuarterlySeries::new(start, (0..len).map(|i| i as f64 + offset).collect()).unwrap()
    }

    #[test]
    fn max_lag_trims_rows() {
        let f = Frame::new()
            .with("y", seq(q(2000, 1), 10, 0.0))
            .unwrap()
            .with("x", seq(q(2000, 1), 10, 100.0))
            .unwrap();
        let d = f
            .assemble("y", &[ColumnRef::new("x", 0), ColumnRef::new("x", 2)], true)
            .unwrap();
        assert_eq!(d.nrows(), 8);
        assert_eq!(d.periods()[0], q(2000, 3));
        assert_eq!(d.columns(), &["intercept", "x", "x_l2"]);
        assert_eq!(d.x()[(0, 1)], 102.0);
        assert_eq!(d.x()[(0, 2)], 100.0);
    }

    #[test]
    fn response_span_limits_rows() {
        let f = Frame::new()
            .with("y", seq(q(2001, 1), 4, 0.0))
            .unwrap()
            .with("x", seq(q(2000, 1), 20, 0.0))
            .unwrap();
        let d = f.assemble("y", &[ColumnRef::new("x", 1)], false).unwrap();
        assert_eq!(d.nrows(), 4);
        assert_eq!(d.y(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn paper_pool_leaves_ninety_rows() {
        let start = q(2000, 2);
        let mut f = Frame::new();
        for name in ["inflation", "gap", "expectations", "imported"] {
            f.insert(name, seq(start, 94, 0.0)).unwrap();
        }
        let mut cols: Vec<ColumnRef> = (0..=4).map(|k| ColumnRef::new("gap", k)).collect();
        cols.push(ColumnRef::new("expectations", 0));
        cols.extend((0..=3).map(|k| ColumnRef::new("imported", k)));
        cols.push(ColumnRef::new("inflation", 1));
        assert_eq!(f.assemble("inflation", &cols, true).unwrap().nrows(), 90);
    }

    #[test]
    fn lag_zero_round_trip() {
        let f = Frame::new()
            .with("y", seq(q(2000, 1), 12, 0.5))
            .unwrap()
            .with("x", seq(q(2000, 3), 7, -2.0))
            .unwrap();
        let d = f
            .assemble("y", &[ColumnRef::new("x", 0), ColumnRef::new("x", 1)], true)
            .unwrap();
        let x = f.get("x").unwrap();
        let y = f.get("y").unwrap();
        for (i, p) in d.periods().iter().enumerate() {
            assert_eq!(d.x()[(i, 1)], x.get(*p).unwrap());
            assert_eq!(d.y()[i], y.get(*p).unwrap());
        }
    }

    #[test]
    fn assemble_errors() {
        let f = Frame::new()
            .with("y", seq(q(2000, 1), 3, 0.0))
            .unwrap()
            .with("x", seq(q(2010, 1), 3, 0.0))
            .unwrap();
        assert!(matches!(
            f.assemble("y", &[ColumnRef::new("z", 0)], true),
            Err(Error::UnknownSeries(_))
        ));
        assert!(matches!(
            f.assemble("y", &[ColumnRef::new("x", 0)], true),
            Err(Error::EmptyIntersection)
        ));
        let mut g = f.clone();
        assert!(g.insert("x", seq(q(2000, 1), 2, 0.0)).is_err());
    }

    #[test]
    fn column_ref_parsing() {
        assert_eq!("gap:3".parse::<ColumnRef>().unwrap(), ColumnRef::new("gap", 3));
        assert_eq!("gap".parse::<ColumnRef>().unwrap(), ColumnRef::new("gap", 0));
        assert!("gap:x".parse::<ColumnRef>().is_err());
        assert_eq!(ColumnRef::new("gap", 3).label(), "gap_l3");
    }
}
