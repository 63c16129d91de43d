//! Least-squares calibration of the Lévy-OU modulated model to VIX option
//! quotes, and implied-volatility smiles.

pub mod optimizer;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelSpec};
use crate::lognormal::{
    black_implied_vol, price_vix_options_mc, ForwardVarianceCurve, DiscretizationGrid, McConfig, Payoff, Scheme,
};
use crate::marketdata::{Conventions, ModelConfig, QuoteSlice};
use crate::modulated::{
    approximate_prices_fourier, price_vix_options_mc_modulated, AffineModulator, ModulatedModel,
};
pub use optimizer::{minimize_box, OptimizerOutcome, OptimizerSettings};

/// Names of the calibrated parameters, in vector order.
pub const PARAM_NAMES: [&str; 5] = ["lambda", "Lambda", "a", "gamma0", "xi0"];
/// The lower bound of `a` is kept this factor above `2G(T + Θ)`.
pub const A_MARGIN: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// Each maturity separately, flat curve level `xi0` fitted with the rest.
    PerSlice,
    /// Each maturity separately against a given forward variance curve.
    PerSliceFixedCurve,
    /// All maturities at once against a given curve.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PricingEngine {
    Fourier,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    /// Squared differences divided by the squared Black vega of each quote.
    Vega,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub a: f64,
    pub gamma0: f64,
    pub xi0: f64,
}

impl ModelParams {
    pub fn to_array(&self) -> [f64; 5] {
        [self.lambda, self.big_lambda, self.a, self.gamma0, self.xi0]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        ModelParams {
            lambda: v[0],
            big_lambda: v[1],
            a: v[2],
            gamma0: v[3],
            xi0: v[4],
        }
    }

    pub fn modulator(&self) -> Result<AffineModulator> {
        AffineModulator::levy_ou(self.lambda, self.big_lambda, self.a, self.gamma0)
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        PARAM_NAMES.iter().map(|s| s.to_string()).zip(self.to_array()).collect()
    }
}

fn param_index(name: &str) -> Result<usize> {
    PARAM_NAMES
        .iter()
        .position(|p| *p == name)
        .ok_or_else(|| Error::invalid(format!("unknown parameter {name:?}; expected one of {PARAM_NAMES:?}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProblem {
    pub slices: Vec<QuoteSlice>,
    pub mode: CalibrationMode,
    pub free_params: Vec<String>,
    /// Box constraints by parameter name.
    pub bounds: BTreeMap<String, [f64; 2]>,
    pub start: ModelParams,
    pub kernel: KernelSpec,
    /// Required by the fixed-curve modes.
    pub curve: Option<ForwardVarianceCurve>,
    pub conventions: Conventions,
    pub engine: PricingEngine,
    /// Monte Carlo engine settings (paths, seed, scheme) and grid size.
    pub mc: McConfig,
    pub mc_n: usize,
    /// Number of Latin-hypercube starts in addition to `start`.
    pub starts: usize,
    pub seed: u64,
    pub weighting: Weighting,
    /// Constant multiplying the objective.
    pub objective_scale: f64,
    pub optimizer: OptimizerSettings,
}

impl CalibrationProblem {
    /// Defaults: H = 0.1 kernel as given, Fourier engine, 5 extra starts and
    /// every admissible parameter free.
    pub fn new(slices: Vec<QuoteSlice>, mode: CalibrationMode, kernel: KernelSpec, start: ModelParams) -> Self {
        let free_params = match mode {
            CalibrationMode::PerSlice => PARAM_NAMES.to_vec(),
            _ => PARAM_NAMES[..4].to_vec(),
        }
        .into_iter()
        .map(String::from)
        .collect();
        let bounds = [
            ("lambda", [0.0, 5.0]),
            ("Lambda", [0.0, 10.0]),
            ("a", [0.0, 50.0]),
            ("gamma0", [0.0, 2.0]),
            ("xi0", [1e-4, 0.5]),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        CalibrationProblem {
            slices,
            mode,
            free_params,
            bounds,
            start,
            kernel,
            curve: None,
            conventions: Conventions::default(),
            engine: PricingEngine::Fourier,
            mc: McConfig {
                paths: 20_000,
                ..McConfig::default()
            },
            mc_n: 90,
            starts: 5,
            seed: 0,
            weighting: Weighting::Uniform,
            objective_scale: 1.0,
            optimizer: OptimizerSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.conventions.validate()?;
        self.kernel.build()?;
        if self.slices.is_empty() {
            return Err(Error::invalid("no quotes to calibrate"));
        }
        for s in &self.slices {
            if s.quotes.len() < 3 {
                return Err(Error::invalid(format!(
                    "maturity {}d has {} quotes; at least 3 are needed",
                    s.maturity_days,
                    s.quotes.len()
                )));
            }
        }
        let mut seen = [false; 5];
        for p in &self.free_params {
            let i = param_index(p)?;
            if seen[i] {
                return Err(Error::invalid(format!("parameter {p} listed twice")));
            }
            seen[i] = true;
        }
        let fixed_curve = self.mode != CalibrationMode::PerSlice;
        if fixed_curve && seen[4] {
            return Err(Error::invalid("xi0 cannot be free when the curve is fixed"));
        }
        if fixed_curve {
            match &self.curve {
                Some(c) => c.validate()?,
                None => return Err(Error::invalid("fixed-curve modes need a forward variance curve")),
            }
        }
        for (name, b) in &self.bounds {
            param_index(name)?;
            if !(b[0] <= b[1] && b[0].is_finite() && b[1].is_finite()) {
                return Err(Error::invalid(format!("bounds for {name} are not an interval: {b:?}")));
            }
        }
        let pos = [self.bounds_of("Lambda")?[0], self.bounds_of("lambda")?[0], self.bounds_of("gamma0")?[0]];
        if pos.iter().any(|v| *v < 0.0) || self.bounds_of("xi0")?[0] <= 0.0 || self.bounds_of("a")?[1] <= 0.0 {
            return Err(Error::invalid("bounds must keep λ, Λ, γ ≥ 0 and a, xi0 > 0"));
        }
        if !(self.objective_scale > 0.0) {
            return Err(Error::invalid("objective_scale must be positive"));
        }
        if self.engine == PricingEngine::Mc {
            self.mc.validate()?;
        }
        Ok(())
    }

    fn bounds_of(&self, name: &str) -> Result<[f64; 2]> {
        self.bounds
            .get(name)
            .copied()
            .ok_or_else(|| Error::invalid(format!("missing bounds for {name}")))
    }

    fn maturity(&self, s: &QuoteSlice) -> f64 {
        self.conventions.year_fraction(s.maturity_days as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaturityError {
    pub maturity_days: u32,
    pub quotes: usize,
    /// Root mean square of model minus quoted prices.
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartDiagnostic {
    pub start: BTreeMap<String, f64>,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub iterations: usize,
    pub stop_reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub maturities_days: Vec<u32>,
    pub params: BTreeMap<String, f64>,
    pub per_maturity_rmse: Vec<MaturityError>,
    pub objective: f64,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    /// Index of the winning start (0 is the configured start).
    pub best_start: usize,
    pub starts: Vec<StartDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub mode: CalibrationMode,
    pub engine: PricingEngine,
    pub fits: Vec<FitRecord>,
}

impl CalibrationResult {
    /// Plain-text table: one row per maturity with parameters and error.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:>8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>12}\n",
            "T (days)", "lambda", "Lambda", "a", "gamma0", "xi0", "Error"
        );
        for fit in &self.fits {
            for m in &fit.per_maturity_rmse {
                // parameters a mode does not fit (xi0 with a fixed curve) show as "-"
                let p = |k: &str, digits: usize| match fit.params.get(k) {
                    Some(v) => format!("{v:.digits$}"),
                    None => "-".to_string(),
                };
                s.push_str(&format!(
                    "{:>8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>12.3e}\n",
                    m.maturity_days,
                    p("lambda", 4),
                    p("Lambda", 4),
                    p("a", 4),
                    p("gamma0", 4),
                    p("xi0", 5),
                    m.rmse
                ));
            }
        }
        s
    }
}

/// Model prices of calls on one slice.
fn slice_prices(
    problem: &CalibrationProblem,
    kernel: &std::sync::Arc<dyn Kernel>,
    params: &ModelParams,
    curve: &ForwardVarianceCurve,
    slice: &QuoteSlice,
) -> Result<Vec<f64>> {
    let maturity = problem.maturity(slice);
    let theta = problem.conventions.theta();
    let model = ModulatedModel::for_window(kernel.clone(), params.modulator()?, curve.clone(), 0.0, maturity, theta)?;
    let payoffs: Vec<Payoff> = slice.quotes.iter().map(|q| Payoff::Call { strike: q.strike }).collect();
    match problem.engine {
        PricingEngine::Fourier => approximate_prices_fourier(&model, 0.0, maturity, theta, &payoffs),
        PricingEngine::Mc => {
            let kappa = problem.mc.scheme.default_kappa();
            let grid = DiscretizationGrid::new(maturity, theta, problem.mc_n, kappa)?;
            Ok(price_vix_options_mc_modulated(&model, &grid, 0.0, &problem.mc, &payoffs)?
                .into_iter()
                .map(|p| p.estimate)
                .collect())
        }
    }
}

/// Free parameters live on the unit cube. Parameters with a positive lower
/// bound (`a`, `xi0`) are mapped logarithmically, the others linearly.
struct Fit<'a> {
    problem: &'a CalibrationProblem,
    kernel: std::sync::Arc<dyn Kernel>,
    slices: Vec<&'a QuoteSlice>,
    weights: Vec<Vec<f64>>,
    free: Vec<usize>,
    lo: [f64; 5],
    hi: [f64; 5],
}

impl Fit<'_> {
    fn params(&self, x: &[f64]) -> ModelParams {
        let mut v = self.problem.start.to_array();
        for (k, &i) in self.free.iter().enumerate() {
            v[i] = if self.lo[i] > 0.0 {
                self.lo[i] * (self.hi[i] / self.lo[i]).powf(x[k])
            } else {
                self.lo[i] + x[k] * (self.hi[i] - self.lo[i])
            };
        }
        ModelParams::from_array(v)
    }

    fn unit(&self, p: &ModelParams) -> Vec<f64> {
        let v = p.to_array();
        self.free
            .iter()
            .map(|&i| {
                let (lo, hi) = (self.lo[i], self.hi[i]);
                let u = if hi <= lo {
                    0.0
                } else if lo > 0.0 {
                    (v[i] / lo).ln() / (hi / lo).ln()
                } else {
                    (v[i] - lo) / (hi - lo)
                };
                u.clamp(0.0, 1.0)
            })
            .collect()
    }

    fn curve(&self, p: &ModelParams) -> Result<ForwardVarianceCurve> {
        match &self.problem.curve {
            Some(c) if self.problem.mode != CalibrationMode::PerSlice => Ok(c.clone()),
            _ => ForwardVarianceCurve::flat(p.xi0),
        }
    }

    fn prices(&self, p: &ModelParams) -> Result<Vec<Vec<f64>>> {
        let curve = self.curve(p)?;
        self.slices
            .par_iter()
            .map(|s| slice_prices(self.problem, &self.kernel, p, &curve, s))
            .collect()
    }

    /// Weighted sum of squares; infeasible points evaluate to +∞.
    fn objective(&self, x: &[f64]) -> f64 {
        let p = self.params(x);
        match self.prices(&p) {
            Ok(model) => self.sum_squares(&model),
            Err(_) => f64::INFINITY,
        }
    }

    fn sum_squares(&self, model: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for ((s, m), w) in self.slices.iter().zip(model).zip(&self.weights) {
            for ((q, v), wi) in s.quotes.iter().zip(m).zip(w) {
                total += wi * (v - q.mid_price).powi(2);
            }
        }
        self.problem.objective_scale * total
    }

    /// Objective value with all model prices at zero: the scale of the data.
    fn reference(&self) -> f64 {
        let zeros: Vec<Vec<f64>> = self.slices.iter().map(|s| vec![0.0; s.quotes.len()]).collect();
        self.sum_squares(&zeros)
    }
}

fn latin_hypercube(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = vec![vec![0.0; dim]; count];
    for j in 0..dim {
        let mut perm: Vec<usize> = (0..count).collect();
        perm.shuffle(&mut rng);
        for (i, p) in perm.into_iter().enumerate() {
            pts[i][j] = (p as f64 + rng.random::<f64>()) / count as f64;
        }
    }
    pts
}

/// Weights `1/vega²` at the starting parameters. Quotes without an implied
/// volatility use the model's own implied volatility at that strike, so the
/// weights stay defined when quoted prices disagree with the start forward.
fn vega_weights(problem: &CalibrationProblem, fit: &Fit<'_>) -> Result<Vec<Vec<f64>>> {
    let p = problem.start;
    let curve = fit.curve(&p)?;
    let mut out = Vec::new();
    for s in &fit.slices {
        let maturity = problem.maturity(s);
        let theta = problem.conventions.theta();
        let model = ModulatedModel::for_window(fit.kernel.clone(), p.modulator()?, curve.clone(), 0.0, maturity, theta)?;
        let mut payoffs = vec![Payoff::Future];
        payoffs.extend(s.quotes.iter().map(|q| Payoff::Call { strike: q.strike }));
        let prices = approximate_prices_fourier(&model, 0.0, maturity, theta, &payoffs)?;
        let fwd = prices[0];
        let mut w = Vec::new();
        for (q, model_price) in s.quotes.iter().zip(&prices[1..]) {
            let vol = match q.implied_vol {
                Some(v) => v,
                None => black_implied_vol(*model_price, fwd, q.strike, maturity)?,
            };
            let sd = vol * maturity.sqrt();
            let d1 = ((fwd / q.strike).ln() + 0.5 * sd * sd) / sd;
            let vega = fwd * crate::special::norm_pdf(d1) * maturity.sqrt();
            w.push(1.0 / vega.max(1e-8).powi(2));
        }
        out.push(w);
    }
    Ok(out)
}

fn fit_slices(problem: &CalibrationProblem, slices: Vec<&QuoteSlice>) -> Result<FitRecord> {
    let kernel = problem.kernel.build()?;
    let theta = problem.conventions.theta();
    let longest = slices.iter().map(|s| problem.maturity(s)).fold(0.0, f64::max);
    let a_floor = A_MARGIN * 2.0 * kernel.cumulative_energy(longest + theta)?;
    let mut lo = [0.0; 5];
    let mut hi = [0.0; 5];
    for (i, name) in PARAM_NAMES.iter().enumerate() {
        let b = problem.bounds_of(name)?;
        lo[i] = b[0];
        hi[i] = b[1];
    }
    lo[2] = lo[2].max(a_floor);
    if hi[2] <= lo[2] {
        return Err(Error::invalid(format!(
            "upper bound of a ({}) is below the feasibility floor {:.6}",
            hi[2], lo[2]
        )));
    }
    let free: Vec<usize> = problem.free_params.iter().map(|p| param_index(p)).collect::<Result<_>>()?;
    let mut fit = Fit {
        problem,
        kernel,
        slices,
        weights: Vec::new(),
        free,
        lo,
        hi,
    };
    fit.weights = match problem.weighting {
        Weighting::Uniform => fit.slices.iter().map(|s| vec![1.0; s.quotes.len()]).collect(),
        Weighting::Vega => vega_weights(problem, &fit)?,
    };
    let f_ref = fit.reference();
    let mut starts = vec![fit.unit(&problem.start)];
    let seed = problem.seed ^ fit.slices.iter().fold(0u64, |h, s| h.rotate_left(7) ^ s.maturity_days as u64);
    starts.extend(latin_hypercube(fit.free.len(), problem.starts, seed));
    let runs: Vec<OptimizerOutcome> = starts
        .par_iter()
        .map(|x0| minimize_box(|x| fit.objective(x), x0, f_ref, &problem.optimizer))
        .collect();
    let diagnostics: Vec<StartDiagnostic> = starts
        .iter()
        .zip(&runs)
        .map(|(x0, r)| StartDiagnostic {
            start: fit.params(x0).to_map(),
            initial_objective: r.trace[0],
            final_objective: r.objective,
            iterations: r.iterations,
            stop_reason: r.stop_reason.clone(),
        })
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.objective.is_finite())
        .min_by(|a, b| a.1.objective.total_cmp(&b.1.objective).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i);
    let Some(best) = best else {
        let detail: Vec<String> = diagnostics
            .iter()
            .map(|d| format!("{:?}: {}", d.start, d.stop_reason))
            .collect();
        return Err(Error::Calibration(format!("every start is infeasible: {}", detail.join("; "))));
    };
    let run = &runs[best];
    let params = fit.params(&run.x);
    let model = fit.prices(&params)?;
    let per_maturity_rmse = fit
        .slices
        .iter()
        .zip(&model)
        .map(|(s, m)| {
            let mse = s.quotes.iter().zip(m).map(|(q, v)| (v - q.mid_price).powi(2)).sum::<f64>() / s.quotes.len() as f64;
            MaturityError {
                maturity_days: s.maturity_days,
                quotes: s.quotes.len(),
                rmse: mse.sqrt(),
            }
        })
        .collect();
    let mut map = params.to_map();
    if problem.mode != CalibrationMode::PerSlice {
        map.remove("xi0");
    }
    Ok(FitRecord {
        maturities_days: fit.slices.iter().map(|s| s.maturity_days).collect(),
        params: map,
        per_maturity_rmse,
        objective: run.objective,
        iterations: run.iterations,
        objective_trace: run.trace.clone(),
        best_start: best,
        starts: diagnostics,
    })
}

/// Fits the model in the problem's mode. Deterministic for fixed inputs.
pub fn calibrate(problem: &CalibrationProblem) -> Result<CalibrationResult> {
    problem.validate()?;
    let fits = match problem.mode {
        CalibrationMode::Joint => vec![fit_slices(problem, problem.slices.iter().collect())?],
        _ => problem
            .slices
            .iter()
            .map(|s| fit_slices(problem, vec![s]))
            .collect::<Result<_>>()?,
    };
    Ok(CalibrationResult {
        mode: problem.mode,
        engine: problem.engine,
        fits,
    })
}

/// Call prices of the model in `params` on each slice (for synthetic quotes
/// and reports).
pub fn model_call_prices(
    kernel: &KernelSpec,
    params: &ModelParams,
    curve: Option<&ForwardVarianceCurve>,
    conventions: &Conventions,
    maturity_days: u32,
    strikes: &[f64],
) -> Result<Vec<f64>> {
    let k = kernel.build()?;
    let curve = match curve {
        Some(c) => c.clone(),
        None => ForwardVarianceCurve::flat(params.xi0)?,
    };
    let maturity = conventions.year_fraction(maturity_days as f64);
    let theta = conventions.theta();
    let model = ModulatedModel::for_window(k, params.modulator()?, curve, 0.0, maturity, theta)?;
    let payoffs: Vec<Payoff> = strikes.iter().map(|&s| Payoff::Call { strike: s }).collect();
    approximate_prices_fourier(&model, 0.0, maturity, theta, &payoffs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmileRow {
    pub strike: f64,
    pub price: f64,
    pub implied_vol: Option<f64>,
    /// Why no implied volatility was produced.
    pub flag: Option<String>,
}

/// Implied volatilities with the model VIX future as the lognormal forward.
/// Prices outside the no-arbitrage band are flagged, not fatal.
pub fn smile_from_prices(forward: f64, maturity: f64, strikes: &[f64], prices: &[f64]) -> Vec<SmileRow> {
    strikes
        .iter()
        .zip(prices)
        .map(|(&k, &p)| match black_implied_vol(p, forward, k, maturity) {
            Ok(v) => SmileRow {
                strike: k,
                price: p,
                implied_vol: Some(v),
                flag: None,
            },
            Err(e) => SmileRow {
                strike: k,
                price: p,
                implied_vol: None,
                flag: Some(e.to_string()),
            },
        })
        .collect()
}

/// How smile prices are produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "snake_case")]
pub enum SmileEngine {
    /// Log-average approximation (closed form without a modulator, Fourier
    /// inversion with one).
    Fourier,
    /// Monte Carlo on a grid of `n` steps.
    Mc { config: McConfig, n: usize, kappa: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Smile {
    pub maturity: f64,
    pub forward: f64,
    pub rows: Vec<SmileRow>,
}

/// Model smile at `maturity` (years) seen from time 0.
pub fn implied_smile(config: &ModelConfig, maturity: f64, strikes: &[f64], engine: &SmileEngine) -> Result<Smile> {
    config.validate()?;
    if strikes.iter().any(|k| !(*k > 0.0)) {
        return Err(Error::invalid("strikes must be positive"));
    }
    let theta = config.conventions.theta();
    let kernel = config.kernel.build()?;
    let mut payoffs = vec![Payoff::Future];
    payoffs.extend(strikes.iter().map(|&k| Payoff::Call { strike: k }));
    let prices: Vec<f64> = match (&config.modulator, engine) {
        (None, SmileEngine::Fourier) => payoffs
            .iter()
            .map(|p| crate::lognormal::control_variate_price(kernel.as_ref(), &config.curve, 0.0, maturity, theta, *p))
            .collect::<Result<_>>()?,
        (None, SmileEngine::Mc { config: mc, n, kappa }) => {
            let grid = DiscretizationGrid::new(maturity, theta, *n, *kappa)?;
            price_vix_options_mc(kernel.as_ref(), &config.curve, &grid, 0.0, mc, &payoffs)?
                .into_iter()
                .map(|p| p.estimate)
                .collect()
        }
        (Some(m), engine) => {
            let model = ModulatedModel::for_window(kernel, *m, config.curve.clone(), 0.0, maturity, theta)?;
            match engine {
                SmileEngine::Fourier => approximate_prices_fourier(&model, 0.0, maturity, theta, &payoffs)?,
                SmileEngine::Mc { config: mc, n, kappa } => {
                    let grid = DiscretizationGrid::new(maturity, theta, *n, *kappa)?;
                    price_vix_options_mc_modulated(&model, &grid, 0.0, mc, &payoffs)?
                        .into_iter()
                        .map(|p| p.estimate)
                        .collect()
                }
            }
        }
    };
    let forward = prices[0];
    Ok(Smile {
        maturity,
        forward,
        rows: smile_from_prices(forward, maturity, strikes, &prices[1..]),
    })
}

impl Default for SmileEngine {
    fn default() -> Self {
        SmileEngine::Mc {
            config: McConfig::default(),
            n: 90,
            kappa: Scheme::Trapezoid.default_kappa(),
        }
    }
}
