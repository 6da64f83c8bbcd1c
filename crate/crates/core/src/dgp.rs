//! Synthetic data generators with known conditional quantiles.
//!
//! All generators draw from a seeded ChaCha20 stream, so a given parameter
//! set always reproduces the same frame bit for bit.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::selection::CandidatePool;
use crate::timeseries::{ColumnRef, DesignMatrix, Frame, Period, QuarterlySeries};

/// Name of the random generator, recorded in run metadata.
pub const GENERATOR: &str = "ChaCha20";

/// Forward-solution truncation for the NKPC expectations.
pub const NKPC_HORIZON: usize = 50;

/// Divergence threshold for the adaptive-expectations recursion.
pub const EXPLOSION_LIMIT: f64 = 10.0;

fn default_start() -> Period {
    Period::new(1960, 1).expect("valid period")
}

/// Uniform draw on the open interval (0, 1).
fn open_unit(rng: &mut ChaCha20Rng) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

fn std_normal_draw(rng: &mut ChaCha20Rng) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("valid parameters")
        .inverse_cdf(open_unit(rng))
}

/// Calvo slope `θ⁻¹ (1 − θ)(1 − βθ)`.
pub fn nkpc_slope(theta: f64, beta: f64) -> f64 {
    (1.0 - theta) * (1.0 - beta * theta) / theta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NkpcParams {
    /// Calvo probability of keeping last period's price.
    pub theta: f64,
    pub beta_discount: f64,
    /// AR(1) coefficient of the output gap.
    pub gap_persistence: f64,
    /// Standard deviation of the gap innovation.
    pub shock_scale: f64,
    /// Noise in the reported expectations, which also keeps expectations
    /// from being an exact multiple of the gap.
    pub expectations_noise: f64,
    pub measurement_noise: f64,
    pub periods: usize,
    pub seed: u64,
    pub start: Period,
}

impl Default for NkpcParams {
    fn default() -> Self {
        NkpcParams {
            theta: 0.75,
            beta_discount: 0.99,
            gap_persistence: 0.8,
            shock_scale: 0.01,
            expectations_noise: 0.002,
            measurement_noise: 0.001,
            periods: 200,
            seed: 1,
            start: default_start(),
        }
    }
}

impl NkpcParams {
    pub fn slope(&self) -> f64 {
        nkpc_slope(self.theta, self.beta_discount)
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Config(format!("theta must lie in (0, 1), got {}", self.theta)));
        }
        if !(self.beta_discount > 0.0 && self.beta_discount <= 1.0) {
            return Err(Error::Config(format!(
                "beta_discount must lie in (0, 1], got {}",
                self.beta_discount
            )));
        }
        if !(self.gap_persistence.abs() < 1.0) {
            return Err(Error::Config(format!(
                "gap persistence {} is not stationary (need |rho| < 1)",
                self.gap_persistence
            )));
        }
        for (name, v) in [
            ("shock_scale", self.shock_scale),
            ("expectations_noise", self.expectations_noise),
            ("measurement_noise", self.measurement_noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.periods < 2 {
            return Err(Error::Config("need at least 2 periods".into()));
        }
        Ok(())
    }
}

/// Simulates `inflation`, `gap` and `expectations` from the forward-looking
/// Phillips curve `π_t = β E_t π_{t+1} + λ y_t` with an AR(1) gap.
pub fn simulate_nkpc(params: &NkpcParams) -> Result<Frame> {
    params.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let (beta, rho) = (params.beta_discount, params.gap_persistence);
    let lambda = params.slope();

    // E_t π_{t+1} = λ Σ_{k=0}^{H-1} β^k ρ^{k+1} y_t under E_t y_{t+k} = ρ^k y_t.
    let expect_factor: f64 = lambda
        * (0..NKPC_HORIZON)
            .map(|k| (beta * rho).powi(k as i32) * rho)
            .sum::<f64>();

    let t = params.periods;
    let (mut gap, mut expect, mut infl) = (vec![0.0; t], vec![0.0; t], vec![0.0; t]);
    let mut y_prev = 0.0;
    for i in 0..t {
        let y = rho * y_prev + params.shock_scale * std_normal_draw(&mut rng);
        let e = expect_factor * y + params.expectations_noise * std_normal_draw(&mut rng);
        let pi = beta * e + lambda * y + params.measurement_noise * std_normal_draw(&mut rng);
        gap[i] = y;
        expect[i] = e;
        infl[i] = pi;
        y_prev = y;
    }
    Frame::new()
        .with("inflation", QuarterlySeries::new(params.start, infl)?)?
        .with("gap", QuarterlySeries::new(params.start, gap)?)?
        .with("expectations", QuarterlySeries::new(params.start, expect)?)
}

/// Phillips curve with adaptive expectations:
/// `π_t = β · mean(π_{t−1..t−4}) + λ gap_t + γ z_t + σ ε_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcExpParams {
    pub beta: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// Inflation in the four quarters before the first simulated one,
    /// oldest first.
    pub history: [f64; 4],
    pub gap: Vec<f64>,
    pub z: Vec<f64>,
    pub noise_scale: f64,
    pub seed: u64,
    pub start: Period,
}

/// Simulates `inflation`, `expectations`, `gap` and `z`.
pub fn simulate_pc_exp(params: &PcExpParams) -> Result<Frame> {
    if !(params.beta.abs() <= 1.0) {
        return Err(Error::Config(format!(
            "|beta| = {} exceeds 1; the adaptive recursion is explosive",
            params.beta.abs()
        )));
    }
    if params.gap.len() != params.z.len() {
        return Err(Error::LengthMismatch {
            left: params.gap.len(),
            right: params.z.len(),
        });
    }
    if params.gap.is_empty() {
        return Err(Error::EmptySeries("gap".into()));
    }
    if !(params.noise_scale >= 0.0) {
        return Err(Error::Config("noise_scale must be non-negative".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let mut window = params.history.to_vec();
    let t = params.gap.len();
    let (mut infl, mut expect) = (Vec::with_capacity(t), Vec::with_capacity(t));
    for i in 0..t {
        let e = window[window.len() - 4..].iter().sum::<f64>() / 4.0;
        let shock = if params.noise_scale > 0.0 {
            params.noise_scale * std_normal_draw(&mut rng)
        } else {
            0.0
        };
        let pi = params.beta * e + params.lambda * params.gap[i] + params.gamma * params.z[i] + shock;
        if !(pi.abs() <= EXPLOSION_LIMIT) {
            return Err(Error::Explosive {
                step: i,
                limit: EXPLOSION_LIMIT,
            });
        }
        infl.push(pi);
        expect.push(e);
        window.push(pi);
    }
    Frame::new()
        .with("inflation", QuarterlySeries::new(params.start, infl)?)?
        .with("expectations", QuarterlySeries::new(params.start, expect)?)?
        .with("gap", QuarterlySeries::new(params.start, params.gap.clone())?)?
        .with("z", QuarterlySeries::new(params.start, params.z.clone())?)
}

/// Noise law with a closed-form quantile function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseDist {
    Normal { sd: f64 },
    Uniform { lo: f64, hi: f64 },
    Laplace { scale: f64 },
}

impl NoiseDist {
    pub fn quantile(&self, tau: f64) -> f64 {
        match *self {
            NoiseDist::Normal { sd } => {
                sd * Normal::new(0.0, 1.0).expect("valid parameters").inverse_cdf(tau)
            }
            NoiseDist::Uniform { lo, hi } => lo + (hi - lo) * tau,
            NoiseDist::Laplace { scale } => {
                if tau < 0.5 {
                    scale * (2.0 * tau).ln()
                } else {
                    -scale * (2.0 * (1.0 - tau)).ln()
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            NoiseDist::Normal { sd } => sd > 0.0 && sd.is_finite(),
            NoiseDist::Uniform { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
            NoiseDist::Laplace { scale } => scale > 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid noise distribution {self:?}")))
        }
    }
}

/// `Y = x'b + (x'g) ε` with `x = (1, x_1, ..)` and covariates drawn
/// uniformly on `covariate_range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationScaleParams {
    pub b: Vec<f64>,
    pub g: Vec<f64>,
    pub noise: NoiseDist,
    pub periods: usize,
    pub seed: u64,
    #[serde(default = "unit_range")]
    pub covariate_range: (f64, f64),
}

fn unit_range() -> (f64, f64) {
    (0.0, 2.0)
}

impl LocationScaleParams {
    pub fn new(b: Vec<f64>, g: Vec<f64>, noise: NoiseDist, periods: usize, seed: u64) -> Self {
        LocationScaleParams {
            b,
            g,
            noise,
            periods,
            seed,
            covariate_range: unit_range(),
        }
    }
}

/// Closed-form conditional quantiles of a location-scale process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrueQuantile {
    pub b: Vec<f64>,
    pub g: Vec<f64>,
    pub noise: NoiseDist,
}

impl TrueQuantile {
    /// Quantile-regression coefficients `b + g Q_ε(τ)`.
    pub fn coefficients(&self, tau: f64) -> Vec<f64> {
        let q = self.noise.quantile(tau);
        self.b.iter().zip(&self.g).map(|(b, g)| b + g * q).collect()
    }

    /// `Q_τ(Y | x)` for a full regressor row including the leading 1.
    pub fn eval(&self, x: &[f64], tau: f64) -> f64 {
        self.coefficients(tau).iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone)]
pub struct LocationScaleSample {
    /// Columns `y`, `x1`, `x2`, ...
    pub frame: Frame,
    pub design: DesignMatrix,
    pub truth: TrueQuantile,
}

pub fn simulate_location_scale(params: &LocationScaleParams) -> Result<LocationScaleSample> {
    let p = params.b.len();
    if p == 0 || params.g.len() != p {
        return Err(Error::Config(format!(
            "b and g must have the same nonzero length, got {} and {}",
            p,
            params.g.len()
        )));
    }
    params.noise.validate()?;
    let (lo, hi) = params.covariate_range;
    if !(lo < hi) {
        return Err(Error::Config("empty covariate range".into()));
    }
    if params.periods <= p {
        return Err(Error::Config(format!(
            "need more than {p} observations, got {}",
            params.periods
        )));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let n = params.periods;
    let mut x = DMatrix::<f64>::zeros(n, p);
    let mut y = vec![0.0; n];
    for i in 0..n {
        x[(i, 0)] = 1.0;
        for j in 1..p {
            x[(i, j)] = lo + (hi - lo) * open_unit(&mut rng);
        }
        let row = x.row(i);
        let loc: f64 = (0..p).map(|j| row[j] * params.b[j]).sum();
        let scale: f64 = (0..p).map(|j| row[j] * params.g[j]).sum();
        if !(scale > 0.0) {
            return Err(Error::Config(format!(
                "scale x'g = {scale} is not positive at row {i}"
            )));
        }
        let eps = params.noise.quantile(open_unit(&mut rng));
        y[i] = loc + scale * eps;
    }

    let start = default_start();
    let mut frame = Frame::new().with("y", QuarterlySeries::new(start, y.clone())?)?;
    for j in 1..p {
        frame.insert(
            format!("x{j}"),
            QuarterlySeries::new(start, x.column(j).iter().copied().collect())?,
        )?;
    }
    let cols: Vec<ColumnRef> = (1..p).map(|j| ColumnRef::new(format!("x{j}"), 0)).collect();
    let design = frame.assemble("y", &cols, true)?;
    Ok(LocationScaleSample {
        frame,
        design,
        truth: TrueQuantile {
            b: params.b.clone(),
            g: params.g.clone(),
            noise: params.noise,
        },
    })
}

/// Raw quarterly levels for exercising the full study: `cpi` and
/// `import_price` indices, real `gdp`, and `expectations` as a rate.
///
/// Domestic inflation follows the NKPC around a 1% quarterly mean, GDP is a
/// 0.8% growth trend times the exponentiated gap, and imported inflation
/// loads on domestic inflation plus its own noise.
pub fn simulate_study_fixture(periods: usize, seed: u64) -> Result<Frame> {
    let start = Period::new(1991, 1).expect("valid period");
    let nk = simulate_nkpc(&NkpcParams {
        periods: periods + 1,
        seed,
        start,
        ..NkpcParams::default()
    })?;
    let pi = nk.get("inflation")?.values();
    let gap = nk.get("gap")?.values();
    let expect = nk.get("expectations")?.values();
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed_f1c7);

    let mean = 0.01;
    let n = periods + 1;
    let (mut cpi, mut imp, mut gdp, mut exp_rate) =
        (vec![100.0; n], vec![100.0; n], vec![0.0; n], vec![0.0; n]);
    for t in 0..n {
        let pi_imp = mean + 0.6 * pi[t] + 0.01 * std_normal_draw(&mut rng);
        if t > 0 {
            cpi[t] = cpi[t - 1] * (mean + pi[t]).exp();
            imp[t] = imp[t - 1] * pi_imp.exp();
        }
        gdp[t] = (10.0 + 0.008 * t as f64 + gap[t]).exp();
        exp_rate[t] = mean + expect[t];
    }
    Frame::new()
        .with("cpi", QuarterlySeries::new(start, cpi)?)?
        .with("gdp", QuarterlySeries::new(start, gdp)?)?
        .with("expectations", QuarterlySeries::new(start, exp_rate)?)?
        .with("import_price", QuarterlySeries::new(start, imp)?)
}

/// One right-hand-side term of the quantile Phillips-curve template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemplateRole {
    pub role: &'static str,
    pub column: ColumnRef,
    pub optional: bool,
}

/// Regressor set of the quantile Phillips curve for four-quarter-ahead
/// inflation: lagged average inflation, long-run expectations, the output
/// gap, imported minus domestic inflation and an optional credit spread.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Template {
    pub response: &'static str,
    pub roles: Vec<TemplateRole>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppliedTemplate {
    pub pool: CandidatePool,
    /// Optional roles skipped because the frame lacks their column.
    pub omitted: Vec<&'static str>,
}

pub fn lopez_template() -> Template {
    let role = |role, name: &str, lag, optional| TemplateRole {
        role,
        column: ColumnRef::new(name, lag),
        optional,
    };
    Template {
        response: "inflation_fwd4",
        roles: vec![
            role("lagged_inflation", "inflation_avg4", 1, false),
            role("expectations", "expectations", 0, false),
            role("gap", "gap", 0, false),
            role("relative_import_inflation", "import_gap", 0, false),
            role("credit_spread", "credit_spread", 0, true),
        ],
    }
}

impl Template {
    /// Pool of the roles whose columns exist in `frame`.
    pub fn apply(&self, frame: &Frame) -> Result<AppliedTemplate> {
        let mut refs = Vec::new();
        let mut omitted = Vec::new();
        for r in &self.roles {
            if frame.contains(&r.column.name) {
                refs.push(r.column.clone());
            } else if r.optional {
                omitted.push(r.role);
            } else {
                return Err(Error::UnknownSeries(r.column.name.clone()));
            }
        }
        Ok(AppliedTemplate {
            pool: CandidatePool::new(refs)?,
            omitted,
        })
    }
}

/// Adds the template's derived columns to a frame holding quarterly
/// `inflation` and `imported` inflation: `inflation_fwd4` (sum over the
/// next four quarters), `inflation_avg4` (mean of the current and three
/// previous quarters) and `import_gap` (imported minus domestic).
pub fn add_template_columns(frame: &mut Frame) -> Result<()> {
    let infl = frame.get("inflation")?.clone();
    let imported = frame.get("imported")?.clone();
    let sum4 = infl.rolling_sum(4)?;
    frame.insert("inflation_fwd4", sum4.lead(4)?)?;
    frame.insert("inflation_avg4", sum4.map(|v| v / 4.0)?)?;
    frame.insert("import_gap", imported.zip_with(&infl, |a, b| a - b)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qr::{fit, QuantileLevel};
    use crate::selection::best_subset;

    #[test]
    fn calvo_slope_values() {
        let l = nkpc_slope(0.75, 0.99);
        assert!((l - 0.085_833_333_333_333_33).abs() < 1e-12, "{l}");
        for theta in [0.1, 0.33, 0.5, 0.9] {
            for beta in [0.9, 0.95, 1.0] {
                let direct = (1.0 / theta) * (1.0 - theta) * (1.0 - beta * theta);
                assert!((nkpc_slope(theta, beta) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nkpc_without_impulse_is_flat() {
        let p = NkpcParams {
            shock_scale: 0.0,
            expectations_noise: 0.0,
            measurement_noise: 0.0,
            ..NkpcParams::default()
        };
        let f = simulate_nkpc(&p).unwrap();
        assert!(f.get("inflation").unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn nkpc_rejects_nonstationary_gap() {
        let p = NkpcParams {
            gap_persistence: 1.0,
            ..NkpcParams::default()
        };
        assert!(matches!(simulate_nkpc(&p), Err(Error::Config(_))));
    }

    #[test]
    fn nkpc_least_squares_recovers_structure() {
        let p = NkpcParams {
            periods: 5000,
            seed: 11,
            ..NkpcParams::default()
        };
        let f = simulate_nkpc(&p).unwrap();
        let d = f
            .assemble("inflation", &[ColumnRef::new("expectations", 0), ColumnRef::new("gap", 0)], false)
            .unwrap();
        let x = d.x();
        let coef = (x.transpose() * x)
            .cholesky()
            .unwrap()
            .solve(&(x.transpose() * nalgebra::DVector::from_column_slice(d.y())));
        assert!((coef[0] - p.beta_discount).abs() < 0.02, "{}", coef[0]);
        assert!((coef[1] - p.slope()).abs() < 0.01, "{}", coef[1]);
    }

    #[test]
    fn nkpc_is_deterministic() {
        let p = NkpcParams::default();
        assert_eq!(simulate_nkpc(&p).unwrap(), simulate_nkpc(&p).unwrap());
        let q = NkpcParams { seed: 2, ..p.clone() };
        assert_ne!(simulate_nkpc(&p).unwrap(), simulate_nkpc(&q).unwrap());
    }

    fn pc(beta: f64, lambda: f64, gamma: f64, t: usize) -> PcExpParams {
        PcExpParams {
            beta,
            lambda,
            gamma,
            history: [0.0; 4],
            gap: vec![0.0; t],
            z: vec![0.0; t],
            noise_scale: 0.0,
            seed: 0,
            start: default_start(),
        }
    }

    #[test]
    fn adaptive_constant_history_is_fixed_point() {
        let mut p = pc(1.0, 0.0, 0.0, 30);
        p.history = [0.02; 4];
        let f = simulate_pc_exp(&p).unwrap();
        assert!(f.get("inflation").unwrap().values().iter().all(|v| (v - 0.02).abs() < 1e-15));
    }

    #[test]
    fn adaptive_impulse_response() {
        let b = 0.8;
        let mut p = pc(b, 0.0, 1.0, 20);
        p.z[10] = 1.0;
        let f = simulate_pc_exp(&p).unwrap();
        let pi = f.get("inflation").unwrap().values();
        assert!(pi[..10].iter().all(|v| *v == 0.0));
        let q = b / 4.0;
        let p10 = 1.0;
        let p11 = q * p10;
        let p12 = q * (p11 + p10);
        let p13 = q * (p12 + p11 + p10);
        let p14 = q * (p13 + p12 + p11 + p10);
        let p15 = q * (p14 + p13 + p12 + p11);
        let p16 = q * (p15 + p14 + p13 + p12);
        let p17 = q * (p16 + p15 + p14 + p13);
        let hand = [p10, p11, p12, p13, p14, p15, p16, p17];
        for (k, h) in hand.iter().enumerate() {
            assert!((pi[10 + k] - h).abs() < 1e-15, "step {k}");
        }
    }

    #[test]
    fn adaptive_without_expectations_channel() {
        let mut p = pc(0.0, 0.3, -0.5, 12);
        p.history = [0.5; 4];
        p.gap = (0..12).map(|i| i as f64 * 0.01).collect();
        p.z = (0..12).map(|i| (i % 3) as f64).collect();
        let f = simulate_pc_exp(&p).unwrap();
        let pi = f.get("inflation").unwrap().values();
        for i in 0..12 {
            assert_eq!(pi[i], 0.3 * p.gap[i] + -0.5 * p.z[i]);
        }
    }

    #[test]
    fn adaptive_divergence_is_reported() {
        let mut p = pc(1.0, 0.0, 1.0, 200);
        p.z = vec![1.0; 200];
        assert!(matches!(simulate_pc_exp(&p), Err(Error::Explosive { .. })));
        assert!(matches!(simulate_pc_exp(&pc(1.2, 0.0, 0.0, 5)), Err(Error::Config(_))));
    }

    #[test]
    fn noise_quantiles() {
        let u = NoiseDist::Uniform { lo: -1.0, hi: 1.0 };
        assert!((u.quantile(0.9) - 0.8).abs() < 1e-15);
        assert_eq!(NoiseDist::Normal { sd: 1.0 }.quantile(0.5), 0.0);
        let l = NoiseDist::Laplace { scale: 2.0 };
        assert!((l.quantile(0.25) - 2.0 * 0.5f64.ln()).abs() < 1e-15);
        assert!((l.quantile(0.75) + l.quantile(0.25)).abs() < 1e-15);
    }

    #[test]
    fn location_scale_truth() {
        let t = TrueQuantile {
            b: vec![1.0, 2.0],
            g: vec![0.5, 0.1],
            noise: NoiseDist::Uniform { lo: -1.0, hi: 1.0 },
        };
        let c = t.coefficients(0.9);
        assert!((c[0] - 1.4).abs() < 1e-12 && (c[1] - 2.08).abs() < 1e-12);

        let normal = TrueQuantile {
            noise: NoiseDist::Normal { sd: 1.0 },
            ..t.clone()
        };
        assert_eq!(normal.coefficients(0.5), vec![1.0, 2.0]);

        let homo = TrueQuantile {
            g: vec![0.7, 0.0],
            ..normal.clone()
        };
        for tau in [0.1, 0.5, 0.9] {
            assert_eq!(homo.coefficients(tau)[1], 2.0);
        }
        for x in [0.0, 0.5, 2.0] {
            let mut prev = f64::NEG_INFINITY;
            for k in 1..20 {
                let q = t.eval(&[1.0, x], k as f64 / 20.0);
                assert!(q >= prev);
                prev = q;
            }
        }
    }

    #[test]
    fn location_scale_sample_and_fit() {
        let p = LocationScaleParams::new(
            vec![1.0, 2.0],
            vec![0.5, 0.1],
            NoiseDist::Uniform { lo: -1.0, hi: 1.0 },
            2000,
            42,
        );
        let s = simulate_location_scale(&p).unwrap();
        assert_eq!(s.design.nrows(), 2000);
        assert_eq!(s.design.columns(), ["intercept", "x1"]);
        let f = fit(&s.design, QuantileLevel::new(0.9).unwrap()).unwrap();
        let truth = s.truth.coefficients(0.9);
        assert!((f.beta[0] - truth[0]).abs() < 0.1 && (f.beta[1] - truth[1]).abs() < 0.1);
        let again = simulate_location_scale(&p).unwrap();
        assert_eq!(again.frame, s.frame);
    }

    #[test]
    fn location_scale_rejects_nonpositive_scale() {
        let p = LocationScaleParams::new(
            vec![1.0, 2.0],
            vec![0.5, -1.0],
            NoiseDist::Normal { sd: 1.0 },
            100,
            1,
        );
        assert!(matches!(simulate_location_scale(&p), Err(Error::Config(_))));
    }

    fn template_frame(with_spread: bool) -> Frame {
        let mut f = simulate_nkpc(&NkpcParams {
            periods: 120,
            ..NkpcParams::default()
        })
        .unwrap();
        let start = f.get("inflation").unwrap().start();
        let imported: Vec<f64> = (0..120).map(|i| 0.01 * ((i as f64) * 0.7).sin()).collect();
        f.insert("imported", QuarterlySeries::new(start, imported).unwrap()).unwrap();
        if with_spread {
            let cs: Vec<f64> = (0..120).map(|i| 0.02 + 0.001 * (i % 7) as f64).collect();
            f.insert("credit_spread", QuarterlySeries::new(start, cs).unwrap()).unwrap();
        }
        add_template_columns(&mut f).unwrap();
        f
    }

    #[test]
    fn template_roles() {
        let t = lopez_template();
        assert_eq!(t.roles.len(), 5);
        let full = t.apply(&template_frame(true)).unwrap();
        assert_eq!(full.pool.len(), 5);
        assert!(full.omitted.is_empty());
        let partial = t.apply(&template_frame(false)).unwrap();
        assert_eq!(partial.pool.len(), 4);
        assert_eq!(partial.omitted, vec!["credit_spread"]);
        assert!(matches!(t.apply(&Frame::new()), Err(Error::UnknownSeries(_))));
    }

    #[test]
    fn template_selection_runs() {
        let f = template_frame(true);
        let t = lopez_template();
        let applied = t.apply(&f).unwrap();
        let r = best_subset(&f, t.response, &applied.pool, QuantileLevel::new(0.5).unwrap(), false).unwrap();
        assert_eq!(r.evaluated, 31);
        assert!(!r.subset.is_empty());
    }
}
