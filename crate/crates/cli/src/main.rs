use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qtail::dependence::{lag_table_from, SubsampleRule};
use qtail::dgp::{
    simulate_location_scale, simulate_nkpc, simulate_study_fixture, LocationScaleParams, NkpcParams,
    NoiseDist,
};
use qtail::hp::hp_gap;
use qtail::inference::{coefficient_table, powell_covariance, select_bandwidth, CoefficientTable, CAUTION_FOOTNOTE};
use qtail::pipeline::{describe, prepare, run_study, DescribeRow, PoolSpec, StudyConfig};
use qtail::qr::{self, check_optimality};
use qtail::selection::best_subset;
use qtail::timeseries::io::{read_frame_path, write_frame, write_frame_path};
use qtail::{ColumnRef, Error, Period, QuantileLevel, Result};

#[derive(Parser)]
#[command(name = "qtail", version, about = "Tail-quantile regression study of quarterly inflation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an input CSV and list its series.
    IngestCheck(IngestArgs),
    /// Six-number summaries of the analysis series.
    Describe(DescribeArgs),
    /// Pearson, Spearman and Kendall correlations by lag.
    Corr(CorrArgs),
    /// Hodrick–Prescott trend and gap of one column.
    Hpfilter(HpArgs),
    /// Fit one quantile regression with a fixed set of covariates.
    Fit(FitArgs),
    /// Best-subset selection by AIC at one quantile.
    Select(SelectArgs),
    /// Run the full study and write the report directory.
    Study(StudyArgs),
    /// Write a simulated data set as CSV.
    Simulate(SimulateArgs),
}

/// Where the data come from: a config file, an input file, or both.
#[derive(Args, Clone)]
struct DataArgs {
    /// Study configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV; overrides the config.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Reject blank cells anywhere in the input.
    #[arg(long)]
    strict: bool,
    /// HP smoothing parameter for GDP-level series.
    #[arg(long)]
    hp_lambda: Option<f64>,
}

impl DataArgs {
    fn config(&self) -> Result<StudyConfig> {
        let mut cfg = match &self.config {
            Some(p) => StudyConfig::load(p)?,
            None => StudyConfig::default(),
        };
        if let Some(i) = &self.input {
            cfg.input = i.clone();
        }
        if self.strict {
            cfg.strict = true;
        }
        if let Some(l) = self.hp_lambda {
            cfg.hp_lambda = l;
        }
        if cfg.input.as_os_str().is_empty() {
            return Err(Error::Config("give --input or a config with `input`".into()));
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct DescribeArgs {
    #[command(flatten)]
    data: DataArgs,
    /// First period of the second sub-table, or `none`.
    #[arg(long)]
    split: Option<String>,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sample {
    Full,
    Deflation,
    AboveThreshold,
}

#[derive(Args)]
struct CorrArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    response: Option<String>,
    #[arg(long)]
    covariate: String,
    #[arg(long, default_value_t = 4)]
    max_lag: usize,
    #[arg(long, value_enum, default_value = "full")]
    sample: Sample,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct HpArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    column: String,
    #[arg(long, default_value_t = qtail::hp::DEFAULT_LAMBDA)]
    lambda: f64,
    /// The column is already in logarithms.
    #[arg(long)]
    logged: bool,
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Clone)]
struct InferenceArgs {
    #[arg(long)]
    alpha: Option<f64>,
    /// uniform or gaussian
    #[arg(long)]
    kernel: Option<String>,
    /// hall-sheather or a fixed residual-scale bandwidth
    #[arg(long)]
    bandwidth: Option<String>,
}

impl InferenceArgs {
    fn apply(&self, cfg: &mut StudyConfig) -> Result<()> {
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(k) = &self.kernel {
            cfg.kernel = k.parse()?;
        }
        if let Some(b) = &self.bandwidth {
            cfg.bandwidth = b.parse()?;
        }
        Ok(())
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    inference: InferenceArgs,
    #[arg(long)]
    response: Option<String>,
    /// Comma-separated `name:lag` covariates.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,
    #[arg(long)]
    tau: f64,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    inference: InferenceArgs,
    #[arg(long)]
    response: Option<String>,
    /// Preset name or comma-separated `name:lag` list.
    #[arg(long)]
    pool: Option<String>,
    #[arg(long)]
    tau: f64,
    /// Print the AIC of every subset.
    #[arg(long)]
    audit: bool,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    inference: InferenceArgs,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    response: Option<String>,
    #[arg(long)]
    pool: Option<String>,
    #[arg(long)]
    max_subset: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    max_lag: Option<usize>,
    /// Comma-separated lower-tail quantiles.
    #[arg(long, value_delimiter = ',')]
    lower_grid: Option<Vec<f64>>,
    /// Comma-separated upper-tail quantiles.
    #[arg(long, value_delimiter = ',')]
    upper_grid: Option<Vec<f64>>,
    #[arg(long)]
    audit: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimKind {
    /// Price, GDP, expectations and import-price levels for `study`.
    Study,
    /// Inflation, gap and expectations from the forward-looking curve.
    Nkpc,
    /// y = 1 + 2 x1 + (0.5 + 0.1 x1) e with uniform noise.
    LocationScale,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "study")]
    kind: SimKind,
    #[arg(long, default_value_t = 120)]
    periods: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_split(s: &str) -> Result<Option<Period>> {
    if s.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        Ok(Some(s.parse()?))
    }
}

fn parse_pool(s: &str) -> PoolSpec {
    if s.contains(':') || s.contains(',') {
        PoolSpec::List(s.split(',').map(|x| x.trim().to_string()).collect())
    } else {
        PoolSpec::Preset(s.to_string())
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn csv_out() -> csv::Writer<io::Stdout> {
    csv::Writer::from_writer(io::stdout())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(io::Error::other(e.to_string()))
}

fn print_table(table: &CoefficientTable) -> Result<()> {
    let mut w = csv_out();
    w.write_record(["tau", "covariate", "estimate", "std_error", "z", "p_value", "ci_lo", "ci_hi"])
        .map_err(csv_err)?;
    for r in &table.rows {
        w.write_record([
            num(table.tau.value()),
            r.column.clone(),
            num(r.estimate),
            num(r.std_error),
            num(r.z),
            num(r.p_value),
            num(r.ci_lo),
            num(r.ci_hi),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    eprintln!("note: {CAUTION_FOOTNOTE}");
    Ok(())
}

fn ingest_check(a: IngestArgs) -> Result<()> {
    let frame = read_frame_path(&a.input, a.strict)?;
    let mut out = io::stdout().lock();
    writeln!(out, "series,start,end,n")?;
    for (name, s) in frame.iter() {
        writeln!(out, "{name},{},{},{}", s.start(), s.end(), s.len())?;
    }
    Ok(())
}

fn describe_cmd(a: DescribeArgs) -> Result<()> {
    let cfg = a.data.config()?;
    let split = match &a.split {
        Some(s) => parse_split(s)?,
        None => cfg.split,
    };
    let prepared = prepare(&cfg)?;
    let tables = describe(&prepared.frame, split)?;
    let mut rows: Vec<(&str, &DescribeRow)> = tables.full.iter().map(|r| ("full", r)).collect();
    if let (Some(pre), Some(post)) = (&tables.pre, &tables.post) {
        rows.extend(pre.iter().map(|r| ("pre", r)));
        rows.extend(post.iter().map(|r| ("post", r)));
    }
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["sample", "series", "n", "min", "q1", "median", "mean", "q3", "max"])
        .map_err(csv_err)?;
    for (sample, r) in rows {
        w.write_record([
            sample.to_string(),
            r.series.clone(),
            r.n.to_string(),
            num(r.min),
            num(r.q1),
            num(r.median),
            num(r.mean),
            num(r.q3),
            num(r.max),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn corr_cmd(a: CorrArgs) -> Result<()> {
    let cfg = a.data.config()?;
    let response = a.response.clone().unwrap_or(cfg.response.clone());
    let prepared = prepare(&cfg)?;
    let rule = match a.sample {
        Sample::Full => None,
        Sample::Deflation => Some(SubsampleRule::Deflation),
        Sample::AboveThreshold => Some(SubsampleRule::AboveThreshold {
            threshold: a.threshold.unwrap_or(cfg.threshold),
        }),
    };
    let min_lag = usize::from(a.covariate == response);
    let table = lag_table_from(&prepared.frame, &response, &a.covariate, min_lag, a.max_lag, rule)?;
    let mut w = csv_out();
    w.write_record(["lag", "n", "pearson", "spearman", "kendall"])
        .map_err(csv_err)?;
    for m in &table.rows {
        w.write_record([
            m.lag.to_string(),
            m.n.to_string(),
            num(m.pearson),
            num(m.spearman),
            num(m.kendall),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn hp_cmd(a: HpArgs) -> Result<()> {
    let frame = read_frame_path(&a.input, a.strict)?;
    let s = frame.get(&a.column)?;
    let logged = if a.logged { s.clone() } else { s.ln()? };
    let r = hp_gap(&logged, a.lambda)?;
    let mut w = csv_out();
    w.write_record(["period", "log_level", "trend", "gap"])
        .map_err(csv_err)?;
    for (i, p) in r.trend.periods().enumerate() {
        w.write_record([
            p.to_string(),
            num(logged.values()[i]),
            num(r.trend.values()[i]),
            num(r.gap.values()[i]),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn fit_cmd(a: FitArgs) -> Result<()> {
    let mut cfg = a.data.config()?;
    a.inference.apply(&mut cfg)?;
    let response = a.response.clone().unwrap_or(cfg.response.clone());
    let tau = QuantileLevel::new(a.tau)?;
    let cols = a
        .columns
        .iter()
        .map(|c| c.parse::<ColumnRef>())
        .collect::<Result<Vec<_>>>()?;
    let prepared = prepare(&cfg)?;
    let design = prepared.frame.assemble(&response, &cols, true)?;
    let fit = qr::fit(&design, tau)?;
    let cert = check_optimality(design.x(), design.y(), &fit);
    let h = select_bandwidth(cfg.bandwidth, &fit, cfg.alpha)?;
    let cov = powell_covariance(design.x(), &fit, h, cfg.kernel)?;
    let table = coefficient_table(&fit, &cov, cfg.alpha)?;
    eprintln!(
        "n = {}, objective = {}, bandwidth = {h}, optimality violation = {:e}",
        fit.n, fit.objective, cert.violation
    );
    print_table(&table)
}

fn select_cmd(a: SelectArgs) -> Result<()> {
    let mut cfg = a.data.config()?;
    a.inference.apply(&mut cfg)?;
    if let Some(p) = &a.pool {
        cfg.pool = parse_pool(p);
    }
    let response = a.response.clone().unwrap_or(cfg.response.clone());
    let tau = QuantileLevel::new(a.tau)?;
    let pool = cfg.candidate_pool()?;
    let prepared = prepare(&cfg)?;
    let sel = best_subset(&prepared.frame, &response, &pool, tau, a.audit)?;
    let h = select_bandwidth(cfg.bandwidth, &sel.fit, cfg.alpha)?;
    let cov = powell_covariance(sel.design.x(), &sel.fit, h, cfg.kernel)?;
    let table = coefficient_table(&sel.fit, &cov, cfg.alpha)?;
    let labels: Vec<String> = sel.subset.iter().map(|c| c.label()).collect();
    eprintln!(
        "selected [{}] with AIC {} on n = {} ({} subsets, {} failed)",
        labels.join(", "),
        sel.aic,
        sel.fit.n,
        sel.evaluated,
        sel.failed
    );
    if let Some(audit) = &sel.audit {
        for r in audit {
            eprintln!(
                "  [{}] aic = {}",
                r.columns.join(", "),
                r.aic.map(num).unwrap_or_else(|| r.error.clone().unwrap_or_default())
            );
        }
    }
    print_table(&table)
}

fn study_cmd(a: StudyArgs) -> Result<()> {
    let mut cfg = a.data.config()?;
    a.inference.apply(&mut cfg)?;
    if let Some(o) = a.output {
        cfg.output = o;
    }
    if let Some(r) = a.response {
        cfg.response = r;
    }
    if let Some(p) = &a.pool {
        cfg.pool = parse_pool(p);
    }
    if a.max_subset.is_some() {
        cfg.max_subset = a.max_subset;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(s) = &a.split {
        cfg.split = parse_split(s)?;
    }
    if let Some(t) = a.threshold {
        cfg.threshold = t;
    }
    if let Some(l) = a.max_lag {
        cfg.max_lag = l;
    }
    if let Some(g) = a.lower_grid {
        cfg.lower_grid = g;
    }
    if let Some(g) = a.upper_grid {
        cfg.upper_grid = g;
    }
    if a.audit {
        cfg.audit = true;
    }
    let report = run_study(&cfg)?;
    eprintln!(
        "wrote {} quantiles ({} rows, {} crossings) to {}",
        report.quantiles.len(),
        report.metadata.rows_used,
        report.metadata.crossings,
        cfg.output.display()
    );
    Ok(())
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let frame = match a.kind {
        SimKind::Study => simulate_study_fixture(a.periods, a.seed)?,
        SimKind::Nkpc => simulate_nkpc(&NkpcParams {
            periods: a.periods,
            seed: a.seed,
            ..NkpcParams::default()
        })?,
        SimKind::LocationScale => {
            simulate_location_scale(&LocationScaleParams::new(
                vec![1.0, 2.0],
                vec![0.5, 0.1],
                NoiseDist::Uniform { lo: -1.0, hi: 1.0 },
                a.periods,
                a.seed,
            ))?
            .frame
        }
    };
    match &a.output {
        Some(p) => write_frame_path(&frame, p),
        None => write_frame(&frame, io::stdout().lock()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::IngestCheck(a) => ingest_check(a),
        Command::Describe(a) => describe_cmd(a),
        Command::Corr(a) => corr_cmd(a),
        Command::Hpfilter(a) => hp_cmd(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Select(a) => select_cmd(a),
        Command::Study(a) => study_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}
