//! Report files. Every table is CSV with a header row; numbers use Rust's
//! shortest round-trip formatting so reruns are byte-identical.
//!
//! ```text
//! coefficients.csv          tau,covariate,estimate,std_error,z,p_value,ci_lo,ci_hi
//! selection.csv             tau,n,k,aic,objective,subset,bandwidth,...
//! bands/<covariate>.csv     tau,estimate,ci_lo,ci_hi
//! dependence/<sample>/<covariate>.csv   lag,pearson,spearman,kendall
//! dependence.json           the same tables with sample sizes
//! describe.csv              series,n,min,q1,median,mean,q3,max (+ _pre/_post)
//! hp_<series>.csv           period,log_level,trend,gap
//! series.csv                the analysis series in the input layout
//! crossing.csv              tau_lo,tau_hi,pred_lo,pred_hi,crossed
//! metadata.json             run provenance
//! audit/tau_<tau>.csv       per-subset AIC log, when enabled
//! ```

use std::fs;
use std::path::Path;

use super::config::StudyConfig;
use super::describe::DescribeRow;
use super::study::StudyReport;
use crate::error::{Error, Result};
use crate::inference::CAUTION_FOOTNOTE;
use crate::timeseries::io::write_frame_path;

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(header).map_err(csv_io)?;
    for row in rows {
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn describe_rows(rows: &[DescribeRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.series.clone(),
                r.n.to_string(),
                num(r.min),
                num(r.q1),
                num(r.median),
                num(r.mean),
                num(r.q3),
                num(r.max),
            ]
        })
        .collect()
}

const DESCRIBE_HEADER: [&str; 8] = ["series", "n", "min", "q1", "median", "mean", "q3", "max"];

/// Figure data: one CI band file per covariate and one file per dependence
/// table.
pub fn emit_plot_data(report: &StudyReport, dir: &Path) -> Result<()> {
    let bands = dir.join("bands");
    fs::create_dir_all(&bands)?;
    for cov in &report.covariates {
        let rows = report.quantiles.iter().filter_map(|q| {
            q.table.row(cov).map(|r| {
                vec![num(q.tau), num(r.estimate), num(r.ci_lo), num(r.ci_hi)]
            })
        });
        write_csv(
            &bands.join(format!("{cov}.csv")),
            &["tau", "estimate", "ci_lo", "ci_hi"],
            rows,
        )?;
    }

    for entry in &report.dependence {
        let sub = dir.join("dependence").join(&entry.sample);
        fs::create_dir_all(&sub)?;
        let rows = entry.table.rows.iter().map(|m| {
            vec![m.lag.to_string(), num(m.pearson), num(m.spearman), num(m.kendall)]
        });
        write_csv(
            &sub.join(format!("{}.csv", entry.table.covariate)),
            &["lag", "pearson", "spearman", "kendall"],
            rows,
        )?;
    }
    Ok(())
}

/// Writes every report file into `dir`, which must exist.
pub fn write_report(report: &StudyReport, cfg: &StudyConfig, dir: &Path) -> Result<()> {
    let coef_rows = report.quantiles.iter().flat_map(|q| {
        q.table.rows.iter().map(move |r| {
            vec![
                num(q.tau),
                r.column.clone(),
                num(r.estimate),
                num(r.std_error),
                num(r.z),
                num(r.p_value),
                num(r.ci_lo),
                num(r.ci_hi),
            ]
        })
    });
    write_csv(
        &dir.join("coefficients.csv"),
        &["tau", "covariate", "estimate", "std_error", "z", "p_value", "ci_lo", "ci_hi"],
        coef_rows,
    )?;

    let sel_rows = report.quantiles.iter().map(|q| {
        vec![
            num(q.tau),
            q.n.to_string(),
            q.k.to_string(),
            num(q.aic),
            num(q.objective),
            q.subset.join(" "),
            num(q.bandwidth),
            q.subsets_evaluated.to_string(),
            q.subsets_failed.to_string(),
            num(q.certificate_violation),
        ]
    });
    write_csv(
        &dir.join("selection.csv"),
        &[
            "tau",
            "n",
            "k",
            "aic",
            "objective",
            "subset",
            "bandwidth",
            "subsets_evaluated",
            "subsets_failed",
            "certificate_violation",
        ],
        sel_rows,
    )?;

    emit_plot_data(report, dir)?;
    let dep = serde_json::json!({
        "tables": report.dependence,
        "skipped": report.metadata.dependence_skipped,
    });
    fs::write(dir.join("dependence.json"), serde_json::to_string_pretty(&dep)? + "\n")?;

    let d = &report.describe;
    write_csv(&dir.join("describe.csv"), &DESCRIBE_HEADER, describe_rows(&d.full))?;
    if let (Some(pre), Some(post)) = (&d.pre, &d.post) {
        write_csv(&dir.join("describe_pre.csv"), &DESCRIBE_HEADER, describe_rows(pre))?;
        write_csv(&dir.join("describe_post.csv"), &DESCRIBE_HEADER, describe_rows(post))?;
    }

    for (name, hp) in &report.hp {
        let log_level: Vec<f64> = hp
            .trend
            .values()
            .iter()
            .zip(hp.gap.values())
            .map(|(t, g)| t + g)
            .collect();
        let rows = hp.trend.periods().enumerate().map(|(i, p)| {
            vec![
                p.to_string(),
                num(log_level[i]),
                num(hp.trend.values()[i]),
                num(hp.gap.values()[i]),
            ]
        });
        write_csv(
            &dir.join(format!("hp_{name}.csv")),
            &["period", "log_level", "trend", "gap"],
            rows,
        )?;
    }

    write_frame_path(&report.series, &dir.join("series.csv"))?;

    let cross_rows = report.crossing.iter().map(|c| {
        vec![
            num(c.tau_lo),
            num(c.tau_hi),
            num(c.pred_lo),
            num(c.pred_hi),
            c.crossed.to_string(),
        ]
    });
    write_csv(
        &dir.join("crossing.csv"),
        &["tau_lo", "tau_hi", "pred_lo", "pred_hi", "crossed"],
        cross_rows,
    )?;

    if cfg.audit {
        let audit_dir = dir.join("audit");
        fs::create_dir_all(&audit_dir)?;
        for q in &report.quantiles {
            let Some(records) = &q.audit else { continue };
            let rows = records.iter().map(|r| {
                vec![
                    r.mask.to_string(),
                    r.k.to_string(),
                    r.n.to_string(),
                    r.columns.join(" "),
                    r.objective.map(num).unwrap_or_default(),
                    r.aic.map(num).unwrap_or_default(),
                    r.error.clone().unwrap_or_default(),
                ]
            });
            write_csv(
                &audit_dir.join(format!("tau_{}.csv", num(q.tau))),
                &["mask", "k", "n", "columns", "objective", "aic", "error"],
                rows,
            )?;
        }
    }

    fs::write(
        dir.join("metadata.json"),
        serde_json::to_string_pretty(&report.metadata)? + "\n",
    )?;
    fs::write(dir.join("footnote.txt"), format!("{CAUTION_FOOTNOTE}\n"))?;
    Ok(())
}

/// Writes into a staging directory next to `output` and moves it into
/// place only when every file has been written.
pub fn write_report_atomic(report: &StudyReport, cfg: &StudyConfig, output: &Path) -> Result<()> {
    let parent = match output.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => Path::new(".").to_path_buf(),
    };
    fs::create_dir_all(&parent)?;
    if output.exists() {
        let replaceable = output.is_dir()
            && (output.join("metadata.json").is_file() || fs::read_dir(output)?.next().is_none());
        if !replaceable {
            return Err(Error::Config(format!(
                "output {} exists and is not a previous study directory",
                output.display()
            )));
        }
    }
    let staging = tempfile::Builder::new()
        .prefix(".qtail-staging-")
        .tempdir_in(&parent)?;
    write_report(report, cfg, staging.path())?;
    if output.exists() {
        fs::remove_dir_all(output)?;
    }
    fs::rename(staging.path(), output)?;
    Ok(())
}
