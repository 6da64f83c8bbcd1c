use std::path::Path;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{hex, Role, SeriesSpec, StudyConfig};
use super::describe::{describe, DescribeTables};
use super::report::write_report_atomic;
use crate::dependence::{lag_table_from, DependenceTable, SubsampleRule};
use crate::dgp::GENERATOR;
use crate::error::{Error, Result};
use crate::hp::{hp_gap, HpResult};
use crate::inference::{
    coefficient_table, powell_covariance, select_bandwidth, CoefficientTable, CAUTION_FOOTNOTE,
};
use crate::qr::{check_optimality, QuantileLevel};
use crate::selection::{best_subset_design, CandidatePool, SubsetRecord};
use crate::timeseries::{io, DesignMatrix, Frame, Period, INTERCEPT};

/// Input after ingestion and the role transforms.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub raw: Frame,
    pub frame: Frame,
    pub hp: Vec<(String, HpResult)>,
    pub input_sha256: String,
}

/// Turns raw input columns into analysis series according to their roles.
pub fn derive_series(
    raw: &Frame,
    series: &IndexMap<String, SeriesSpec>,
    hp_lambda: f64,
) -> Result<(Frame, Vec<(String, HpResult)>)> {
    if series.is_empty() {
        return Ok((raw.clone(), Vec::new()));
    }
    let mut out = Frame::new();
    let mut hp = Vec::new();
    for (name, spec) in series {
        let src = raw.get(&spec.column)?;
        let derived = match spec.role {
            Role::Rate | Role::Expectations => src.clone(),
            Role::PriceLevel | Role::ImportedIndex => src.log_growth().map_err(|e| rename(e, &spec.column))?,
            Role::GdpLevel => {
                let r = hp_gap(&src.ln().map_err(|e| rename(e, &spec.column))?, hp_lambda)?;
                let gap = r.gap.clone();
                hp.push((name.clone(), r));
                gap
            }
        };
        out.insert(name.clone(), derived)?;
    }
    Ok((out, hp))
}

fn rename(e: Error, column: &str) -> Error {
    match e {
        Error::NonPositive { period, value, .. } => Error::NonPositive {
            name: column.to_string(),
            period,
            value,
        },
        other => other,
    }
}

pub fn prepare(cfg: &StudyConfig) -> Result<Prepared> {
    let bytes = std::fs::read(&cfg.input).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", cfg.input.display()),
        ))
    })?;
    let raw = io::read_frame(bytes.as_slice(), cfg.strict)?;
    let (frame, hp) = derive_series(&raw, &cfg.series, cfg.hp_lambda)
        .map_err(|e| e.at_stage("transform", None))?;
    Ok(Prepared {
        raw,
        frame,
        hp,
        input_sha256: hex(&Sha256::digest(&bytes)),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantileEntry {
    pub tau: f64,
    pub subset: Vec<String>,
    pub aic: f64,
    pub n: usize,
    pub k: usize,
    pub objective: f64,
    pub bandwidth: f64,
    pub subsets_evaluated: usize,
    pub subsets_failed: usize,
    pub certificate_violation: f64,
    pub table: CoefficientTable,
    #[serde(skip)]
    pub audit: Option<Vec<SubsetRecord>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DependenceEntry {
    pub sample: String,
    pub table: DependenceTable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedSample {
    pub sample: String,
    pub covariate: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingRow {
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub pred_lo: f64,
    pub pred_hi: f64,
    pub crossed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub input_file: String,
    pub input_sha256: String,
    pub seed: u64,
    pub generator: &'static str,
    pub response: String,
    pub kernel: String,
    pub bandwidth_rule: String,
    pub alpha: f64,
    pub hp_lambda: f64,
    pub pool: Vec<String>,
    pub max_subset: usize,
    pub quantiles: usize,
    pub rows_used: usize,
    pub first_period: Period,
    pub last_period: Period,
    pub crossings: usize,
    pub dependence_skipped: Vec<SkippedSample>,
    pub footnote: &'static str,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub metadata: Metadata,
    pub series: Frame,
    pub describe: DescribeTables,
    pub dependence: Vec<DependenceEntry>,
    pub hp: Vec<(String, HpResult)>,
    pub quantiles: Vec<QuantileEntry>,
    pub crossing: Vec<CrossingRow>,
    /// Labels of every pool candidate, plus the intercept first.
    pub covariates: Vec<String>,
}

impl StudyReport {
    pub fn entry(&self, tau: f64) -> Option<&QuantileEntry> {
        self.quantiles.iter().find(|q| q.tau == tau)
    }
}

/// Runs the whole study and writes it to `cfg.output`, replacing any
/// previous run there. Nothing is written if a stage fails.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let prepared = prepare(cfg).map_err(|e| match e {
        e @ Error::Stage { .. } => e,
        e => e.at_stage("ingest", None),
    })?;
    let report = compute_study(cfg, &prepared)?;
    write_report_atomic(&report, cfg, &cfg.output).map_err(|e| e.at_stage("report", None))?;
    Ok(report)
}

/// All study computations, without touching the file system.
pub fn compute_study(cfg: &StudyConfig, prepared: &Prepared) -> Result<StudyReport> {
    cfg.validate()?;
    let frame = &prepared.frame;
    let taus = cfg.quantiles()?;
    let pool = cfg.candidate_pool()?;
    let response = cfg.response.as_str();
    if !frame.contains(response) {
        return Err(Error::Config(format!("response series {response:?} not found")));
    }
    let missing: Vec<String> = pool
        .candidates()
        .iter()
        .filter(|c| !frame.contains(&c.name))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Config(format!(
            "pool refers to series absent from the data: {}",
            missing.join(", ")
        )));
    }

    let described = describe(frame, cfg.split).map_err(|e| e.at_stage("describe", None))?;
    let (dependence, skipped) = dependence_tables(frame, response, cfg)?;

    let design = frame
        .assemble(response, pool.candidates(), true)
        .map_err(|e| e.at_stage("selection", None))?;
    let quantiles = taus
        .par_iter()
        .map(|&tau| quantile_entry(&design, &pool, tau, cfg))
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let crossing = crossing_rows(&design, &quantiles);
    let covariates: Vec<String> = std::iter::once(INTERCEPT.to_string())
        .chain(pool.candidates().iter().map(|c| c.label()))
        .collect();

    let metadata = Metadata {
        tool: "qtail",
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: cfg.fingerprint(),
        input_file: cfg
            .input
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        input_sha256: prepared.input_sha256.clone(),
        seed: cfg.seed,
        generator: GENERATOR,
        response: response.to_string(),
        kernel: cfg.kernel.to_string(),
        bandwidth_rule: cfg.bandwidth.to_string(),
        alpha: cfg.alpha,
        hp_lambda: cfg.hp_lambda,
        pool: pool.candidates().iter().map(|c| c.to_string()).collect(),
        max_subset: pool.max_size(),
        quantiles: quantiles.len(),
        rows_used: design.nrows(),
        first_period: design.periods()[0],
        last_period: *design.periods().last().expect("nonempty design"),
        crossings: crossing.iter().filter(|c| c.crossed).count(),
        dependence_skipped: skipped,
        footnote: CAUTION_FOOTNOTE,
    };

    Ok(StudyReport {
        metadata,
        series: frame.clone(),
        describe: described,
        dependence,
        hp: prepared.hp.clone(),
        quantiles,
        crossing,
        covariates,
    })
}

fn quantile_entry(
    design: &DesignMatrix,
    pool: &CandidatePool,
    tau: QuantileLevel,
    cfg: &StudyConfig,
) -> Result<QuantileEntry> {
    let t = Some(tau.value());
    let sel = best_subset_design(design, pool, tau, cfg.audit).map_err(|e| e.at_stage("selection", t))?;
    let cert = check_optimality(sel.design.x(), sel.design.y(), &sel.fit);
    let infer = || -> Result<(f64, CoefficientTable)> {
        let h = select_bandwidth(cfg.bandwidth, &sel.fit, cfg.alpha)?;
        let cov = powell_covariance(sel.design.x(), &sel.fit, h, cfg.kernel)?;
        Ok((h, coefficient_table(&sel.fit, &cov, cfg.alpha)?))
    };
    let (bandwidth, table) = infer().map_err(|e| e.at_stage("inference", t))?;
    Ok(QuantileEntry {
        tau: tau.value(),
        subset: sel.subset.iter().map(|c| c.label()).collect(),
        aic: sel.aic,
        n: sel.fit.n,
        k: sel.fit.p,
        objective: sel.fit.objective,
        bandwidth,
        subsets_evaluated: sel.evaluated,
        subsets_failed: sel.failed,
        certificate_violation: cert.violation,
        table,
        audit: sel.audit,
    })
}

/// Lag tables of the response against every other series, and its own
/// autocorrelations, on the full, deflation and above-threshold samples.
/// Subsamples too small (or too flat) to correlate are skipped and listed.
fn dependence_tables(
    frame: &Frame,
    response: &str,
    cfg: &StudyConfig,
) -> Result<(Vec<DependenceEntry>, Vec<SkippedSample>)> {
    let samples: [(&str, Option<SubsampleRule>); 3] = [
        ("full", None),
        ("deflation", Some(SubsampleRule::Deflation)),
        (
            "above_threshold",
            Some(SubsampleRule::AboveThreshold {
                threshold: cfg.threshold,
            }),
        ),
    ];
    let mut covariates: Vec<&str> = frame.names().filter(|n| *n != response).collect();
    covariates.push(response);

    let mut tables = Vec::new();
    let mut skipped = Vec::new();
    for (label, rule) in samples {
        for &cov in &covariates {
            let min_lag = usize::from(cov == response);
            if min_lag > cfg.max_lag {
                continue;
            }
            match lag_table_from(frame, response, cov, min_lag, cfg.max_lag, rule) {
                Ok(table) => tables.push(DependenceEntry {
                    sample: label.to_string(),
                    table,
                }),
                Err(e @ (Error::SmallSample { .. } | Error::UndefinedCorrelation(_) | Error::EmptyIntersection)) => {
                    skipped.push(SkippedSample {
                        sample: label.to_string(),
                        covariate: cov.to_string(),
                        reason: e.to_string(),
                    })
                }
                Err(e) => return Err(e.at_stage("dependence", None)),
            }
        }
    }
    Ok((tables, skipped))
}

/// Adjacent-quantile comparison of predictions at the mean covariate row.
fn crossing_rows(design: &DesignMatrix, entries: &[QuantileEntry]) -> Vec<CrossingRow> {
    let means: IndexMap<&str, f64> = design
        .columns()
        .iter()
        .map(String::as_str)
        .zip(design.column_means())
        .collect();
    let predict = |e: &QuantileEntry| -> f64 {
        e.table
            .rows
            .iter()
            .map(|r| r.estimate * means.get(r.column.as_str()).copied().unwrap_or(0.0))
            .sum()
    };
    entries
        .windows(2)
        .map(|w| {
            let (lo, hi) = (predict(&w[0]), predict(&w[1]));
            CrossingRow {
                tau_lo: w[0].tau,
                tau_hi: w[1].tau,
                pred_lo: lo,
                pred_hi: hi,
                crossed: hi < lo,
            }
        })
        .collect()
}

/// Loads `path` as a study config and applies it.
pub fn run_study_file(path: &Path) -> Result<StudyReport> {
    run_study(&StudyConfig::load(path)?)
}
