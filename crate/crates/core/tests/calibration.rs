use vixvol::calibration::*;
use vixvol::kernels::KernelSpec;
use vixvol::lognormal::{ForwardVarianceCurve, McConfig, Scheme};
use vixvol::marketdata::{Conventions, ModelConfig, QuoteSlice, VixOptionQuote};
use vixvol::modulated::AffineModulator;
use vixvol::ErrorKind;

const STRIKES: [f64; 7] = [0.10, 0.11, 0.12, 0.13, 0.14, 0.16, 0.18];

fn kernel() -> KernelSpec {
    KernelSpec::PowerLaw { alpha: Some(0.4), nu: None, hurst: 0.1 }
}

fn truth() -> ModelParams {
    ModelParams { lambda: 0.08, big_lambda: 0.71, a: 6.18, gamma0: 0.05, xi0: 0.013 }
}

fn perturbed() -> ModelParams {
    ModelParams { lambda: 0.2, big_lambda: 1.2, a: 4.0, gamma0: 0.1, xi0: 0.018 }
}

fn slice(params: &ModelParams, days: u32) -> QuoteSlice {
    let prices = model_call_prices(&kernel(), params, None, &Conventions::default(), days, &STRIKES).unwrap();
    QuoteSlice {
        maturity_days: days,
        quotes: STRIKES
            .iter()
            .zip(prices)
            .map(|(&strike, mid_price)| VixOptionQuote {
                maturity_days: days,
                strike,
                mid_price,
                bid: None,
                ask: None,
                implied_vol: None,
            })
            .collect(),
    }
}

#[test]
fn quotes_at_the_start_stop_immediately() {
    let mut problem = CalibrationProblem::new(vec![slice(&truth(), 7)], CalibrationMode::PerSlice, kernel(), truth());
    problem.starts = 0;
    let result = calibrate(&problem).unwrap();
    let fit = &result.fits[0];
    assert_eq!(fit.iterations, 0);
    assert!(fit.per_maturity_rmse[0].rmse < 1e-12);
}

#[test]
fn round_trip_from_a_perturbed_start() {
    let mut problem = CalibrationProblem::new(vec![slice(&truth(), 7)], CalibrationMode::PerSlice, kernel(), perturbed());
    problem.starts = 1;
    let result = calibrate(&problem).unwrap();
    let fit = &result.fits[0];
    assert!(fit.per_maturity_rmse[0].rmse < 5e-4, "{}", result.table());
    // the winner is no worse than any start point
    for s in &fit.starts {
        assert!(fit.objective <= s.initial_objective);
    }
    assert!(fit.objective_trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn scaled_objective_gives_identical_iterates() {
    let mut problem = CalibrationProblem::new(vec![slice(&truth(), 7)], CalibrationMode::PerSlice, kernel(), perturbed());
    problem.starts = 0;
    problem.optimizer.max_iterations = 6;
    let base = calibrate(&problem).unwrap();
    problem.objective_scale = 4.0;
    let scaled = calibrate(&problem).unwrap();
    let (a, b) = (&base.fits[0], &scaled.fits[0]);
    assert_eq!(a.params, b.params);
    assert_eq!(a.iterations, b.iterations);
    for (x, y) in a.objective_trace.iter().zip(&b.objective_trace) {
        assert_eq!(4.0 * x, *y);
    }
}

#[test]
fn calibration_is_deterministic_across_worker_counts() {
    let mut problem = CalibrationProblem::new(vec![slice(&truth(), 7)], CalibrationMode::PerSlice, kernel(), perturbed());
    problem.starts = 2;
    problem.optimizer.max_iterations = 4;
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| calibrate(&problem).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(
        serde_json::to_string(&one).unwrap(),
        serde_json::to_string(&run(2)).unwrap()
    );
}

#[test]
fn joint_errors_stay_close_to_slice_errors() {
    let days = [7, 21, 35];
    let slices: Vec<QuoteSlice> = days.iter().map(|&d| slice(&truth(), d)).collect();
    let curve = ForwardVarianceCurve::flat(0.013).unwrap();
    let mut start = perturbed();
    start.xi0 = 0.013;
    let run = |mode| {
        let mut p = CalibrationProblem::new(slices.clone(), mode, kernel(), start);
        p.curve = Some(curve.clone());
        p.starts = 0;
        calibrate(&p).unwrap()
    };
    let per_slice = run(CalibrationMode::PerSliceFixedCurve);
    let joint = run(CalibrationMode::Joint);
    assert_eq!(joint.fits.len(), 1);
    assert_eq!(joint.fits[0].per_maturity_rmse.len(), 3);
    for (j, fit) in joint.fits[0].per_maturity_rmse.iter().zip(&per_slice.fits) {
        let s = fit.per_maturity_rmse[0].rmse;
        // both fits are near exact on synthetic data, so a floor keeps the
        // comparison meaningful
        assert!(j.rmse <= 2.0 * s + 1e-4, "joint {} vs slice {}", j.rmse, s);
    }
    assert!(!joint.fits[0].params.contains_key("xi0"));
}

#[test]
fn vega_weighting_fits_too() {
    let mut problem = CalibrationProblem::new(vec![slice(&truth(), 7)], CalibrationMode::PerSlice, kernel(), perturbed());
    problem.starts = 0;
    problem.weighting = Weighting::Vega;
    let result = calibrate(&problem).unwrap();
    assert!(result.fits[0].per_maturity_rmse[0].rmse < 1e-3, "{}", result.table());
}

#[test]
fn validation_rejects_bad_problems() {
    let short = QuoteSlice { maturity_days: 7, quotes: slice(&truth(), 7).quotes[..2].to_vec() };
    let p = CalibrationProblem::new(vec![short], CalibrationMode::PerSlice, kernel(), truth());
    assert_eq!(calibrate(&p).unwrap_err().kind(), ErrorKind::Validation);

    let p = CalibrationProblem::new(vec![slice(&truth(), 7)], CalibrationMode::Joint, kernel(), truth());
    assert_eq!(calibrate(&p).unwrap_err().kind(), ErrorKind::Validation);

    let mut p = CalibrationProblem::new(vec![slice(&truth(), 7)], CalibrationMode::PerSlice, kernel(), truth());
    p.free_params.push("sigma".into());
    assert_eq!(calibrate(&p).unwrap_err().kind(), ErrorKind::Validation);

    let mut p = CalibrationProblem::new(vec![slice(&truth(), 7)], CalibrationMode::PerSlice, kernel(), truth());
    p.bounds.insert("a".into(), [0.0, 1e-3]);
    assert_eq!(calibrate(&p).unwrap_err().kind(), ErrorKind::Validation);
}

fn levy_config() -> ModelConfig {
    ModelConfig {
        kernel: kernel(),
        modulator: Some(AffineModulator::levy_ou(0.08, 0.71, 6.18, 0.05).unwrap()),
        curve: ForwardVarianceCurve::flat(0.013).unwrap(),
        conventions: Conventions::default(),
    }
}

#[test]
fn modulated_smile_slopes_upward() {
    let t = 30.0 / 365.0;
    let fwd = implied_smile(&levy_config(), t, &[0.1], &SmileEngine::Fourier).unwrap().forward;
    let strikes: Vec<f64> = (0..9).map(|i| fwd * (0.8 + 0.05 * i as f64)).collect();
    let smile = implied_smile(&levy_config(), t, &strikes, &SmileEngine::Fourier).unwrap();
    let vols: Vec<f64> = smile.rows.iter().map(|r| r.implied_vol.unwrap()).collect();
    assert!(vols[8] > vols[0], "{vols:?}");
    assert!(vols[3..].windows(2).all(|w| w[1] > w[0]), "{vols:?}");
}

#[test]
fn smile_at_the_forward_round_trips() {
    let cfg = levy_config();
    let t = 30.0 / 365.0;
    let fwd = implied_smile(&cfg, t, &[0.1], &SmileEngine::Fourier).unwrap().forward;
    let smile = implied_smile(&cfg, t, &[fwd], &SmileEngine::Fourier).unwrap();
    let row = &smile.rows[0];
    let vol = row.implied_vol.unwrap();
    let back = vixvol::lognormal::black_call(fwd, fwd, vol * t.sqrt());
    assert!((back - row.price).abs() < 1e-8);
}

#[test]
fn rough_bergomi_smile_is_nearly_flat() {
    let cfg = ModelConfig { modulator: None, ..levy_config() };
    let engine = SmileEngine::Mc {
        config: McConfig { paths: 20_000, seed: 1, use_control_variate: true, scheme: Scheme::Trapezoid },
        n: 40,
        kappa: 2.0,
    };
    let fwd = implied_smile(&cfg, 0.1, &[0.1], &engine).unwrap().forward;
    let strikes: Vec<f64> = (0..7).map(|i| fwd * (0.8 + 0.4 * i as f64 / 6.0)).collect();
    let smile = implied_smile(&cfg, 0.1, &strikes, &engine).unwrap();
    let vols: Vec<f64> = smile.rows.iter().map(|r| r.implied_vol.unwrap()).collect();
    let spread = vols.iter().cloned().fold(f64::MIN, f64::max) - vols.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 0.02, "{vols:?}");
}

#[test]
fn unreachable_prices_are_flagged() {
    let rows = smile_from_prices(0.12, 0.1, &[0.1, 0.14], &[0.5, 0.001]);
    assert!(rows[0].implied_vol.is_none() && rows[0].flag.is_some());
    assert!(rows[1].implied_vol.is_some());
}
