//! `vixvol`: pricing, convergence studies, smiles, calibration and hedging
//! from the command line. Results go to stdout, or to files under `--out`
//! together with a run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use vixvol::calibration::{
    calibrate, implied_smile, CalibrationMode, CalibrationProblem, ModelParams, PricingEngine, SmileEngine,
    Weighting,
};
use vixvol::hedging::{cir_two_swap_hedge, toy_discrete_hedge, CirHedgeSpec, RebalanceClock, SwapWindow};
use vixvol::kernels::Kernel;
use vixvol::lognormal::{
    control_variate_price, convergence_study, price_vix_options_mc, ConvergenceSpec, DiscretizationGrid,
    McConfig, Payoff, Scheme, ToyModel,
};
use vixvol::marketdata::{load_model_config, load_quotes, persist_bytes, persist_result, ModelConfig, QuoteSlice};
use vixvol::modulated::{approximate_prices_fourier, price_vix_options_mc_modulated, ModulatedModel, ModulatorKind};
use vixvol::{Error, ErrorKind, Result};

#[derive(Parser, Debug)]
#[command(name = "vixvol", version, about = "VIX option pricing, hedging and calibration")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Directory for result files and the run manifest (stdout only when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 50_000)]
    paths: usize,
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Price one VIX payoff by Monte Carlo or Fourier inversion.
    Price(PriceArgs),
    /// Error against a fine reference as the grid is refined.
    Convergence(ConvergenceArgs),
    /// Implied-volatility smile of the model.
    Smile(SmileArgs),
    /// Fit the modulated model to option quotes.
    Calibrate(CalibrateArgs),
    /// Hedge ratios and hedge simulations.
    #[command(subcommand)]
    Hedge(HedgeCommand),
    /// Synthetic call quotes generated by the model (Fourier prices).
    Synth(SynthArgs),
}

#[derive(Args, Debug, Serialize)]
struct ModelArgs {
    /// Model configuration JSON (kernel, optional modulator, curve).
    #[arg(long)]
    model: PathBuf,
    /// Option maturity in years.
    #[arg(long, default_value_t = 1.0)]
    maturity: f64,
    /// VIX window length in years (default: the config's convention).
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct GridArgs {
    #[arg(long, default_value_t = 90)]
    n: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::Trapezoid)]
    scheme: SchemeArg,
    /// Grid exponent (default 2 for trapezoid, 1 for rectangle).
    #[arg(long)]
    kappa: Option<f64>,
    /// Disable the log-average control variate.
    #[arg(long)]
    no_control_variate: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum SchemeArg {
    Rectangle,
    Trapezoid,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Rectangle => Scheme::Rectangle,
            SchemeArg::Trapezoid => Scheme::Trapezoid,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
enum EngineArg {
    Mc,
    Fourier,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum PayoffArg {
    Call,
    Put,
    Future,
    VarianceSwap,
    Digital,
}

#[derive(Args, Debug, Serialize)]
struct PriceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    strike: f64,
    #[arg(long, value_enum, default_value_t = PayoffArg::Call)]
    payoff: PayoffArg,
    #[arg(long, value_enum, default_value_t = EngineArg::Mc)]
    engine: EngineArg,
}

#[derive(Args, Debug, Serialize)]
struct ConvergenceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    strike: f64,
    /// Comma-separated grid sizes.
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40,80")]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    reference_n: usize,
    /// Only errors above this many standard errors enter the slope fit.
    #[arg(long, default_value_t = 0.0)]
    min_error_se: f64,
}

#[derive(Args, Debug, Serialize)]
struct SmileArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Comma-separated strikes; default: 7 strikes over K/F in [0.8, 1.2].
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    strikes: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = EngineArg::Mc)]
    engine: EngineArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    PerSlice,
    PerSliceFixedCurve,
    Joint,
}

#[derive(Args, Debug, Serialize)]
struct CalibrateArgs {
    /// Quote CSV: maturity_days, strike, mid_price[, bid, ask, implied_vol].
    #[arg(long)]
    quotes: PathBuf,
    /// Kernel, conventions and curve; the modulator (if any) is the start.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::PerSlice)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = EngineArg::Fourier)]
    engine: EngineArg,
    /// Latin-hypercube starts besides the configured one.
    #[arg(long, default_value_t = 5)]
    starts: usize,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    /// Weight squared errors by 1/vega².
    #[arg(long)]
    vega_weights: bool,
    /// Grid size for the Monte Carlo engine.
    #[arg(long, default_value_t = 90)]
    n: usize,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum HedgeCommand {
    /// Closed-form hedge of a call on the variance swap, with an optional
    /// discrete-rebalancing simulation.
    Toy(ToyArgs),
    /// Two-variance-swap hedge of a VIX payoff under a CIR modulator.
    Cir(CirArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum ClockArg {
    Calendar,
    Variance,
}

#[derive(Args, Debug, Serialize)]
struct ToyArgs {
    #[arg(long)]
    model: PathBuf,
    /// Observation date of the forward variance.
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    #[arg(long, allow_negative_numbers = true)]
    strike: Option<f64>,
    /// Also simulate the hedge with this many rebalances.
    #[arg(long)]
    rebalances: Option<usize>,
    #[arg(long, value_enum, default_value_t = ClockArg::Variance)]
    clock: ClockArg,
}

#[derive(Args, Debug, Serialize)]
struct CirArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    strike: f64,
    /// Start of the second swap window (the first is the option's window).
    #[arg(long, default_value_t = 0.25)]
    second_swap: f64,
    #[arg(long, default_value_t = 20)]
    n: usize,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "7,35,63,98,126")]
    maturities: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "0.10,0.11,0.12,0.13,0.14,0.16,0.18")]
    strikes: Vec<f64>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a Command,
    common: &'a Common,
    /// Input path and SHA-256 of its contents.
    inputs: Vec<(String, String)>,
    /// SHA-256 over the command, flags and input file contents.
    config_digest: String,
    seed: u64,
    versions: Versions,
    wall_time_seconds: f64,
    timestamp_unix: u64,
}

#[derive(Serialize)]
struct Versions {
    vixvol: &'static str,
    cli: &'static str,
}

/// Files read by the command, hashed into the manifest digest.
struct Run {
    inputs: Vec<(PathBuf, Vec<u8>)>,
    outputs: Vec<(String, Vec<u8>)>,
    stdout: String,
}

impl Run {
    fn new() -> Self {
        Run {
            inputs: Vec::new(),
            outputs: Vec::new(),
            stdout: String::new(),
        }
    }

    fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        self.inputs.push((path.to_path_buf(), bytes.clone()));
        Ok(bytes)
    }

    fn model(&mut self, path: &Path) -> Result<ModelConfig> {
        self.read(path)?;
        // a config the core rejects is bad input, whatever the core calls it
        load_model_config(path).map_err(|e| match e.kind() {
            ErrorKind::Io => e,
            _ => invalid(format!("{}: {e}", path.display())),
        })
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.outputs.push((name.to_string(), s.into_bytes()));
        Ok(())
    }

    fn text(&mut self, name: &str, body: String) {
        self.outputs.push((name.to_string(), body.into_bytes()));
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Validation => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Io => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if cli.common.paths < 2 {
        return Err(invalid("--paths must be at least 2"));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.common.workers {
        if w == 0 {
            return Err(invalid("--workers must be positive"));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    let started = Instant::now();
    let mut run = Run::new();
    pool.install(|| dispatch(cli, &mut run))?;
    let elapsed = started.elapsed().as_secs_f64();
    finish(cli, run, elapsed)
}

fn dispatch(cli: &Cli, run: &mut Run) -> Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Price(a) => cmd_price(c, a, run),
        Command::Convergence(a) => cmd_convergence(c, a, run),
        Command::Smile(a) => cmd_smile(c, a, run),
        Command::Calibrate(a) => cmd_calibrate(c, a, run),
        Command::Hedge(HedgeCommand::Toy(a)) => cmd_hedge_toy(c, a, run),
        Command::Hedge(HedgeCommand::Cir(a)) => cmd_hedge_cir(c, a, run),
        Command::Synth(a) => cmd_synth(a, run),
    }
}

fn digest(cli: &Cli, run: &Run) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&cli.command)?);
    let mut common = cli.common.clone();
    // neither the output location nor the worker count changes results
    common.out = None;
    common.workers = None;
    h.update(serde_json::to_vec(&common)?);
    for (path, bytes) in &run.inputs {
        h.update(path.display().to_string().as_bytes());
        h.update(bytes);
    }
    Ok(hex(&h.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn finish(cli: &Cli, run: Run, elapsed: f64) -> Result<()> {
    print!("{}", run.stdout);
    let Some(dir) = &cli.common.out else {
        return Ok(());
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    for (name, bytes) in &run.outputs {
        persist_bytes(bytes, &dir.join(name))?;
    }
    let manifest = Manifest {
        command: &cli.command,
        common: &cli.common,
        inputs: run
            .inputs
            .iter()
            .map(|(p, b)| (p.display().to_string(), hex(&Sha256::digest(b))))
            .collect(),
        config_digest: digest(cli, &run)?,
        seed: cli.common.seed,
        versions: Versions {
            vixvol: vixvol::VERSION,
            cli: env!("CARGO_PKG_VERSION"),
        },
        wall_time_seconds: elapsed,
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    persist_result(&manifest, &dir.join("manifest.json"))
}

fn theta_of(m: &ModelArgs, cfg: &ModelConfig) -> Result<f64> {
    let theta = m.theta.unwrap_or_else(|| cfg.conventions.theta());
    if !(theta > 0.0 && m.maturity >= 0.0) {
        return Err(invalid(format!(
            "need maturity >= 0 and theta > 0 (got {} and {theta})",
            m.maturity
        )));
    }
    Ok(theta)
}

fn mc_config(c: &Common, g: &GridArgs) -> McConfig {
    McConfig {
        paths: c.paths,
        seed: c.seed,
        use_control_variate: !g.no_control_variate,
        scheme: g.scheme.into(),
    }
}

fn kappa_of(g: &GridArgs) -> f64 {
    g.kappa.unwrap_or_else(|| Scheme::from(g.scheme).default_kappa())
}

fn payoff_of(p: PayoffArg, strike: f64) -> Result<Payoff> {
    if !(strike >= 0.0 && strike.is_finite()) {
        return Err(invalid(format!("strike must be a finite number >= 0, got {strike}")));
    }
    let payoff = match p {
        PayoffArg::Call => Payoff::Call { strike },
        PayoffArg::Put => Payoff::Put { strike },
        PayoffArg::Future => Payoff::Future,
        PayoffArg::VarianceSwap => Payoff::VarianceSwap,
        PayoffArg::Digital => Payoff::Digital { strike },
    };
    payoff.validate()?;
    Ok(payoff)
}

#[derive(Serialize)]
struct PriceOut {
    payoff: Payoff,
    engine: EngineArg,
    estimate: f64,
    std_error: f64,
    n: usize,
    scheme: SchemeArg,
    kappa: f64,
    paths: usize,
    seed: u64,
    control_variate: bool,
}

/// Prices `payoffs` with the engine chosen for `cfg`.
fn model_prices(
    cfg: &ModelConfig,
    maturity: f64,
    theta: f64,
    engine: EngineArg,
    grid: Option<(&DiscretizationGrid, &McConfig)>,
    payoffs: &[Payoff],
) -> Result<Vec<(f64, f64)>> {
    let kernel = cfg.kernel.build()?;
    match (engine, &cfg.modulator) {
        (EngineArg::Fourier, None) => payoffs
            .iter()
            .map(|p| Ok((control_variate_price(kernel.as_ref(), &cfg.curve, 0.0, maturity, theta, *p)?, 0.0)))
            .collect(),
        (EngineArg::Fourier, Some(m)) => {
            let model = ModulatedModel::for_window(kernel, *m, cfg.curve.clone(), 0.0, maturity, theta)?;
            Ok(approximate_prices_fourier(&model, 0.0, maturity, theta, payoffs)?
                .into_iter()
                .map(|p| (p, 0.0))
                .collect())
        }
        (EngineArg::Mc, modulator) => {
            let (grid, config) = grid.expect("Monte Carlo needs a grid");
            let prices = match modulator {
                None => price_vix_options_mc(kernel.as_ref(), &cfg.curve, grid, 0.0, config, payoffs)?,
                Some(m) => {
                    let model = ModulatedModel::for_window(kernel, *m, cfg.curve.clone(), 0.0, maturity, theta)?;
                    price_vix_options_mc_modulated(&model, grid, 0.0, config, payoffs)?
                }
            };
            Ok(prices.into_iter().map(|p| (p.estimate, p.std_error)).collect())
        }
    }
}

fn cmd_price(c: &Common, a: &PriceArgs, run: &mut Run) -> Result<()> {
    let payoff = payoff_of(a.payoff, a.strike)?;
    let cfg = run.model(&a.model.model)?;
    let theta = theta_of(&a.model, &cfg)?;
    let kappa = kappa_of(&a.grid);
    let grid = DiscretizationGrid::new(a.model.maturity, theta, a.grid.n, kappa)?;
    let config = mc_config(c, &a.grid);
    let (estimate, std_error) =
        model_prices(&cfg, a.model.maturity, theta, a.engine, Some((&grid, &config)), &[payoff])?[0];
    let out = PriceOut {
        payoff,
        engine: a.engine,
        estimate,
        std_error,
        n: a.grid.n,
        scheme: a.grid.scheme,
        kappa,
        paths: c.paths,
        seed: c.seed,
        control_variate: config.use_control_variate,
    };
    run.stdout = serde_json::to_string_pretty(&out)? + "\n";
    run.json("price.json", &out)
}

fn cmd_convergence(c: &Common, a: &ConvergenceArgs, run: &mut Run) -> Result<()> {
    let payoff = payoff_of(PayoffArg::Call, a.strike)?;
    let cfg = run.model(&a.model.model)?;
    if cfg.modulator.is_some() {
        return Err(invalid("convergence studies use the unmodulated model; drop the modulator"));
    }
    let theta = theta_of(&a.model, &cfg)?;
    let spec = ConvergenceSpec {
        t: 0.0,
        maturity: a.model.maturity,
        theta,
        payoff,
        scheme: a.grid.scheme.into(),
        kappa: kappa_of(&a.grid),
        n_list: a.n_list.clone(),
        reference_scheme: Scheme::Trapezoid,
        reference_kappa: Scheme::Trapezoid.default_kappa(),
        reference_n: a.reference_n,
        min_error_in_se: a.min_error_se,
    };
    let kernel = cfg.kernel.build()?;
    let report = convergence_study(kernel.as_ref(), &cfg.curve, &spec, &mc_config(c, &a.grid))?;
    let mut csv = String::from("n,price,std_error,abs_error_vs_reference,error_ci_low,error_ci_high\n");
    for r in &report.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.n, r.price, r.std_error, r.abs_error, r.error_ci_low, r.error_ci_high
        );
    }
    run.stdout = csv.clone();
    match report.slope {
        Some(s) => {
            let _ = writeln!(run.stdout, "# slope {s:.4} from {} points", report.slope_points);
        }
        None => {
            let _ = writeln!(run.stdout, "# {}", report.note.clone().unwrap_or_default());
        }
    }
    run.text("convergence.csv", csv);
    run.json("convergence.json", &report)
}

fn cmd_smile(c: &Common, a: &SmileArgs, run: &mut Run) -> Result<()> {
    if let Some(s) = &a.strikes {
        if s.is_empty() || s.iter().any(|k| !(*k > 0.0)) {
            return Err(invalid("strikes must be positive"));
        }
    }
    let cfg = run.model(&a.model.model)?;
    let theta = theta_of(&a.model, &cfg)?;
    if !(a.model.maturity > 0.0) {
        return Err(invalid("smiles need a positive maturity"));
    }
    let mut cfg = cfg;
    cfg.conventions.theta_days = theta * cfg.conventions.day_count;
    let engine = match a.engine {
        EngineArg::Fourier => SmileEngine::Fourier,
        EngineArg::Mc => SmileEngine::Mc {
            config: mc_config(c, &a.grid),
            n: a.grid.n,
            kappa: kappa_of(&a.grid),
        },
    };
    let strikes = match &a.strikes {
        Some(s) => s.clone(),
        None => {
            let fwd = implied_smile(&cfg, a.model.maturity, &[1.0], &engine)?.forward;
            (0..7).map(|i| fwd * (0.8 + 0.4 * i as f64 / 6.0)).collect()
        }
    };
    let smile = implied_smile(&cfg, a.model.maturity, &strikes, &engine)?;
    let mut csv = String::from("strike,moneyness,price,implied_vol,flag\n");
    for r in &smile.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.strike,
            r.strike / smile.forward,
            r.price,
            r.implied_vol.map(|v| v.to_string()).unwrap_or_default(),
            r.flag.clone().unwrap_or_default().replace(',', ";")
        );
    }
    run.stdout = format!("# forward {}\n{csv}", smile.forward);
    run.text("smile.csv", csv);
    run.json("smile.json", &smile)
}

/// Starting point: the config's Lévy-OU modulator and the curve level.
fn start_params(cfg: &ModelConfig, slices: &[QuoteSlice]) -> Result<ModelParams> {
    let (lambda, big_lambda, a, gamma0) = match cfg.modulator {
        Some(m) => match m.kind {
            ModulatorKind::LevyOu { lambda, big_lambda, a } => (lambda, big_lambda, a, m.gamma0),
            ModulatorKind::Cir { .. } => return Err(invalid("calibration fits the Lévy-OU modulator")),
        },
        None => (0.1, 1.0, 5.0, 0.1),
    };
    let last = slices.iter().map(|s| s.maturity_days).max().unwrap_or(0) as f64;
    let horizon = cfg.conventions.year_fraction(last) + cfg.conventions.theta();
    let xi0 = cfg.curve.integral(0.0, horizon) / horizon;
    Ok(ModelParams { lambda, big_lambda, a, gamma0, xi0 })
}

fn cmd_calibrate(c: &Common, a: &CalibrateArgs, run: &mut Run) -> Result<()> {
    let cfg = run.model(&a.model)?;
    run.read(&a.quotes)?;
    let slices = load_quotes(&a.quotes, &cfg.conventions)?;
    let mode = match a.mode {
        ModeArg::PerSlice => CalibrationMode::PerSlice,
        ModeArg::PerSliceFixedCurve => CalibrationMode::PerSliceFixedCurve,
        ModeArg::Joint => CalibrationMode::Joint,
    };
    let start = start_params(&cfg, &slices)?;
    let mut problem = CalibrationProblem::new(slices, mode, cfg.kernel.clone(), start);
    problem.conventions = cfg.conventions;
    if mode != CalibrationMode::PerSlice {
        problem.curve = Some(cfg.curve.clone());
    }
    problem.engine = match a.engine {
        EngineArg::Fourier => PricingEngine::Fourier,
        EngineArg::Mc => PricingEngine::Mc,
    };
    problem.mc = McConfig {
        paths: c.paths,
        seed: c.seed,
        ..McConfig::default()
    };
    problem.mc_n = a.n;
    problem.starts = a.starts;
    problem.seed = c.seed;
    problem.optimizer.max_iterations = a.max_iterations;
    if a.vega_weights {
        problem.weighting = Weighting::Vega;
    }
    problem.validate()?;
    let result = calibrate(&problem)?;
    let table = result.table();
    run.stdout = table.clone();
    run.text("calibration.txt", table);
    run.json("calibration.json", &result)
}

#[derive(Serialize)]
struct ToyOut {
    xi: f64,
    strike: f64,
    t0: f64,
    remaining_variance: f64,
    price: f64,
    d1: f64,
    hedge_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulation: Option<vixvol::hedging::HedgeSimulation>,
}

fn cmd_hedge_toy(c: &Common, a: &ToyArgs, run: &mut Run) -> Result<()> {
    if !(a.t0 > 0.0) {
        return Err(invalid("--t0 must be positive"));
    }
    if let Some(k) = a.strike {
        if !(k > 0.0) {
            return Err(invalid(format!("strike must be positive, got {k}")));
        }
    }
    if a.rebalances == Some(0) {
        return Err(invalid("--rebalances must be positive"));
    }
    let cfg = run.model(&a.model)?;
    if cfg.modulator.is_some() {
        return Err(invalid("the toy hedge uses the unmodulated model; drop the modulator"));
    }
    let kernel: Arc<dyn Kernel> = cfg.kernel.build()?;
    let t0 = a.t0;
    let g_total = kernel.cumulative_energy(t0)?;
    let k2 = kernel.clone();
    // c(t) = G(T0) − G(T0 − t): variance accrued by ξ_·(T0) up to t
    let c_fn: vixvol::lognormal::toy::VarianceFn =
        Arc::new(move |t: f64| g_total - k2.cumulative_energy((t0 - t).max(0.0)).unwrap_or(f64::NAN));
    let xi = cfg.curve.value(t0);
    let toy = ToyModel::new(xi, c_fn, t0)?;
    let strike = a.strike.unwrap_or(xi);
    let q = toy.call(strike, 0.0, t0)?;
    let ratio = toy.hedge_ratio(strike, 0.0, t0)?;
    let simulation = match a.rebalances {
        Some(n) => {
            let clock = match a.clock {
                ClockArg::Calendar => RebalanceClock::Calendar,
                ClockArg::Variance => RebalanceClock::Variance,
            };
            Some(toy_discrete_hedge(&toy, strike, 0.0, t0, n, clock, c.paths, c.seed)?)
        }
        None => None,
    };
    let out = ToyOut {
        xi,
        strike,
        t0,
        remaining_variance: g_total,
        price: q.price,
        d1: q.d1,
        hedge_ratio: ratio,
        simulation,
    };
    run.stdout = serde_json::to_string_pretty(&out)? + "\n";
    run.json("hedge_toy.json", &out)
}

fn cmd_hedge_cir(c: &Common, a: &CirArgs, run: &mut Run) -> Result<()> {
    let payoff = payoff_of(PayoffArg::Call, a.strike)?;
    let cfg = run.model(&a.model.model)?;
    let theta = theta_of(&a.model, &cfg)?;
    let modulator = match cfg.modulator {
        Some(m) if matches!(m.kind, ModulatorKind::Cir { .. }) => m,
        _ => return Err(invalid("the two-swap hedge needs a CIR modulator in the model config")),
    };
    let maturity = a.model.maturity;
    let horizon = (maturity + theta).max(a.second_swap + theta);
    let model = ModulatedModel::new(cfg.kernel.build()?, modulator, cfg.curve.clone(), horizon)?;
    let mut spec = CirHedgeSpec::new(
        0.0,
        maturity,
        theta,
        payoff,
        [
            SwapWindow { start: maturity, length: theta },
            SwapWindow { start: a.second_swap, length: theta },
        ],
    );
    spec.n = a.n;
    let config = McConfig {
        paths: c.paths,
        seed: c.seed,
        use_control_variate: false,
        scheme: Scheme::Trapezoid,
    };
    let report = cir_two_swap_hedge(&model, &spec, &config)?;
    run.stdout = serde_json::to_string_pretty(&report)? + "\n";
    run.json("hedge_cir.json", &report)
}

fn cmd_synth(a: &SynthArgs, run: &mut Run) -> Result<()> {
    if a.strikes.iter().any(|k| !(*k > 0.0)) || a.strikes.len() < 3 {
        return Err(invalid("need at least 3 positive strikes"));
    }
    if a.maturities.iter().any(|d| *d == 0) {
        return Err(invalid("maturities must be positive day counts"));
    }
    let cfg = run.model(&a.model)?;
    if cfg.modulator.is_none() {
        return Err(invalid("synthetic quotes are generated from a modulated model"));
    }
    let theta = cfg.conventions.theta();
    let payoffs: Vec<Payoff> = a.strikes.iter().map(|&k| Payoff::Call { strike: k }).collect();
    let mut csv = String::from("maturity_days,strike,mid_price\n");
    for &d in &a.maturities {
        let maturity = cfg.conventions.year_fraction(d as f64);
        let prices = model_prices(&cfg, maturity, theta, EngineArg::Fourier, None, &payoffs)?;
        for (k, (p, _)) in a.strikes.iter().zip(prices) {
            let s = cfg.conventions.strike_scale;
            let _ = writeln!(csv, "{d},{},{}", k * s, p * s);
        }
    }
    run.stdout = csv.clone();
    run.text("quotes.csv", csv);
    Ok(())
}
