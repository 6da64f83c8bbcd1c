//! Best-subset covariate selection by quantile AIC.
//!
//! Every nonempty subset of the candidate pool is fitted on the same rows
//! (aligned to the deepest lag in the whole pool) and scored with
//! `AIC = 2k + 2n ln(objective / n)`, the asymmetric-Laplace
//! quasi-likelihood form. The intercept is always included.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qr::{self, QrFit, QuantileLevel};
use crate::timeseries::{ColumnRef, DesignMatrix, Frame};

/// Largest pool accepted for exhaustive enumeration.
pub const MAX_POOL: usize = 20;

/// Candidate covariates, kept sorted by `(name, lag)` so that results do not
/// depend on the order in which they were listed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidatePool {
    candidates: Vec<ColumnRef>,
    max_size: Option<usize>,
}

impl CandidatePool {
    pub fn new(candidates: Vec<ColumnRef>) -> Result<Self> {
        let mut candidates = candidates;
        candidates.sort();
        if candidates.is_empty() {
            return Err(Error::Config("candidate pool is empty".into()));
        }
        if let Some(w) = candidates.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("candidate {} listed twice", w[0])));
        }
        if candidates.len() > MAX_POOL {
            return Err(Error::Config(format!(
                "candidate pool has {} entries; exhaustive search supports at most {MAX_POOL}",
                candidates.len()
            )));
        }
        Ok(CandidatePool {
            candidates,
            max_size: None,
        })
    }

    /// Limits subsets to at most `k` covariates.
    pub fn with_max_size(mut self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("maximum subset size must be at least 1".into()));
        }
        self.max_size = Some(k);
        Ok(self)
    }

    /// Parses entries of the form `name:lag`.
    pub fn parse<S: AsRef<str>>(specs: &[S]) -> Result<Self> {
        let refs = specs
            .iter()
            .map(|s| s.as_ref().parse::<ColumnRef>())
            .collect::<Result<Vec<_>>>()?;
        CandidatePool::new(refs)
    }

    /// Named presets: `paper` (the eight-candidate pool) and `extended`
    /// (gap lags 0 to 4, imported inflation lags 0 to 3).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => CandidatePool::parse(&[
                "gap:0",
                "gap:3",
                "gap:4",
                "expectations:0",
                "imported:0",
                "imported:1",
                "imported:3",
                "inflation:1",
            ]),
            "extended" => {
                let mut refs: Vec<ColumnRef> = (0..=4).map(|l| ColumnRef::new("gap", l)).collect();
                refs.extend((0..=3).map(|l| ColumnRef::new("imported", l)));
                refs.push(ColumnRef::new("expectations", 0));
                refs.push(ColumnRef::new("inflation", 1));
                CandidatePool::new(refs)
            }
            _ => Err(Error::Config(format!(
                "unknown pool preset {name:?} (expected paper or extended)"
            ))),
        }
    }

    pub fn candidates(&self) -> &[ColumnRef] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.max_size.unwrap_or(self.candidates.len()).min(self.candidates.len())
    }
}

/// Quasi-likelihood AIC `2k + 2n ln(objective / n)`.
pub fn qr_aic(fit: &QrFit) -> Result<f64> {
    if !(fit.objective > 0.0) {
        return Err(Error::PerfectFit);
    }
    let n = fit.n as f64;
    Ok(2.0 * fit.p as f64 + 2.0 * n * (fit.objective / n).ln())
}

/// One line of the optional audit log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetRecord {
    /// Bit `j` set when candidate `j` (in pool order) is included.
    pub mask: u32,
    pub columns: Vec<String>,
    pub k: usize,
    pub n: usize,
    pub objective: Option<f64>,
    pub aic: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub tau: QuantileLevel,
    pub subset: Vec<ColumnRef>,
    pub fit: QrFit,
    pub aic: f64,
    /// The chosen columns on the common row set.
    pub design: DesignMatrix,
    pub evaluated: usize,
    pub failed: usize,
    pub audit: Option<Vec<SubsetRecord>>,
}

struct Scored {
    aic: f64,
    k: usize,
    labels: Vec<String>,
    mask: u32,
    fit: QrFit,
}

fn better(a: &Scored, b: &Scored) -> Ordering {
    a.aic
        .total_cmp(&b.aic)
        .then(a.k.cmp(&b.k))
        .then_with(|| a.labels.cmp(&b.labels))
}

/// Selects the minimum-AIC subset of `pool` for the `tau` quantile of
/// `response`.
pub fn best_subset(
    frame: &Frame,
    response: &str,
    pool: &CandidatePool,
    tau: QuantileLevel,
    keep_audit: bool,
) -> Result<SelectionResult> {
    let design = frame.assemble(response, pool.candidates(), true)?;
    best_subset_design(&design, pool, tau, keep_audit)
}

/// As [`best_subset`] on a design whose non-intercept columns are the pool
/// candidates in pool order.
pub fn best_subset_design(
    design: &DesignMatrix,
    pool: &CandidatePool,
    tau: QuantileLevel,
    keep_audit: bool,
) -> Result<SelectionResult> {
    let m = pool.len();
    let offset = usize::from(design.has_intercept());
    if design.ncols() != m + offset {
        return Err(Error::LengthMismatch {
            left: design.ncols() - offset,
            right: m,
        });
    }
    let max_size = pool.max_size();
    let n = design.nrows();
    if n <= max_size + 1 {
        return Err(Error::InsufficientData {
            n,
            p: max_size + 1,
        });
    }

    let masks: Vec<u32> = (1u32..(1u32 << m))
        .filter(|mask| mask.count_ones() as usize <= max_size)
        .collect();

    let evaluate = |mask: u32| -> (SubsetRecord, Option<Scored>) {
        let idx: Vec<usize> = (0..m).filter(|j| mask >> j & 1 == 1).collect();
        let labels: Vec<String> = idx.iter().map(|&j| pool.candidates[j].label()).collect();
        let outcome = design
            .select(&idx)
            .and_then(|d| qr::fit(&d, tau))
            .and_then(|f| qr_aic(&f).map(|a| (f, a)));
        let mut record = SubsetRecord {
            mask,
            columns: labels.clone(),
            k: idx.len() + offset,
            n,
            objective: None,
            aic: None,
            error: None,
        };
        match outcome {
            Ok((fit, aic)) => {
                debug_assert_eq!(fit.n, n);
                record.objective = Some(fit.objective);
                record.aic = Some(aic);
                let scored = Scored {
                    aic,
                    k: record.k,
                    labels,
                    mask,
                    fit,
                };
                (record, Some(scored))
            }
            Err(e) => {
                record.error = Some(e.to_string());
                (record, None)
            }
        }
    };

    let pick = |a: Option<Scored>, b: Option<Scored>| match (a, b) {
        (Some(a), Some(b)) => Some(if better(&b, &a) == Ordering::Less { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    };

    let (best, audit, failed) = if keep_audit {
        let results: Vec<(SubsetRecord, Option<Scored>)> =
            masks.par_iter().map(|&mask| evaluate(mask)).collect();
        let failed = results.iter().filter(|r| r.1.is_none()).count();
        let mut records = Vec::with_capacity(results.len());
        let mut best = None;
        for (rec, scored) in results {
            records.push(rec);
            best = pick(best, scored);
        }
        (best, Some(records), failed)
    } else {
        let (best, failed) = masks
            .par_iter()
            .map(|&mask| {
                let (_, scored) = evaluate(mask);
                let failed = usize::from(scored.is_none());
                (scored, failed)
            })
            .reduce(|| (None, 0), |(a, fa), (b, fb)| (pick(a, b), fa + fb));
        (best, None, failed)
    };

    let best = best.ok_or_else(|| {
        Error::Selection(format!(
            "all {} candidate subsets failed to fit at tau = {tau}",
            masks.len()
        ))
    })?;
    let idx: Vec<usize> = (0..m).filter(|j| best.mask >> j & 1 == 1).collect();
    Ok(SelectionResult {
        tau,
        subset: idx.iter().map(|&j| pool.candidates[j].clone()).collect(),
        design: design.select(&idx)?,
        fit: best.fit,
        aic: best.aic,
        evaluated: masks.len(),
        failed,
        audit,
    })
}
