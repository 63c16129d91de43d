use std::sync::Arc;

use vixvol::hedging::*;
use vixvol::kernels::{Kernel, PowerLawKernel};
use vixvol::lognormal::*;
use vixvol::modulated::{AffineModulator, ModulatedModel};
use vixvol::ErrorKind;

fn setup() -> (PowerLawKernel, ForwardVarianceCurve, DiscretizationGrid) {
    (
        PowerLawKernel::new(0.2, 0.1).unwrap(),
        ForwardVarianceCurve::flat(0.04).unwrap(),
        DiscretizationGrid::new(1.0, 0.1, 20, 2.0).unwrap(),
    )
}

fn cfg(paths: usize, seed: u64) -> McConfig {
    McConfig { paths, seed, use_control_variate: false, scheme: Scheme::Trapezoid }
}

#[test]
fn linear_payoff_delta_is_one_over_theta() {
    let (k, curve, grid) = setup();
    let d = frechet_delta_mc(&k, &curve, &grid, 0.0, &cfg(20_000, 1), Payoff::VarianceSwap, 1.05).unwrap();
    assert!((d.estimate - 10.0).abs() <= 3.0 * d.std_error, "{d:?}");
}

#[test]
fn pathwise_delta_matches_a_curve_bump() {
    let (k, curve, grid) = setup();
    let pay = Payoff::Call { strike: 0.0 };
    let config = cfg(20_000, 2);
    let pw = frechet_delta_window_mc(&k, &curve, &grid, 0.0, &config, pay, 1.04, 1.06).unwrap();
    let fd = bump_delta_fd(&k, &curve, &grid, 0.0, &config, pay, 1.04, 1.06, 1e-3).unwrap();
    let se = (pw.std_error.powi(2) + fd.std_error.powi(2)).sqrt();
    assert!((pw.estimate - fd.estimate).abs() <= 3.0 * se, "{pw:?} {fd:?}");
}

#[test]
fn deep_out_of_the_money_delta_vanishes() {
    let (k, curve, grid) = setup();
    let d = frechet_delta_mc(&k, &curve, &grid, 0.0, &cfg(20_000, 3), Payoff::Call { strike: 5.0 }, 1.05).unwrap();
    assert!(d.estimate.abs() <= 3.0 * d.std_error + 1e-15, "{d:?}");
}

#[test]
fn toy_hedge_mean_pnl_is_zero_and_shrinks_with_rebalancing() {
    let toy = ToyModel::rough(0.04, 0.2, 0.1, 1.0).unwrap();
    let a = toy_discrete_hedge(&toy, 0.04, 0.0, 1.0, 10, RebalanceClock::Variance, 20_000, 4).unwrap();
    let b = toy_discrete_hedge(&toy, 0.04, 0.0, 1.0, 40, RebalanceClock::Variance, 20_000, 4).unwrap();
    assert!(a.mean_pnl.abs() <= 3.0 * (a.pnl_variance / 20_000.0).sqrt());
    assert!(b.pnl_variance < a.pnl_variance);
    assert!(toy_discrete_hedge(&toy, 0.04, 0.0, 1.0, 0, RebalanceClock::Calendar, 10, 4).is_err());
}

fn cir_model(delta: f64) -> ModulatedModel {
    let kernel: Arc<dyn Kernel> = Arc::new(PowerLawKernel::new(0.4, 0.1).unwrap());
    let m = AffineModulator::cir(2.0, 0.1, delta, 0.1).unwrap();
    ModulatedModel::new(kernel, m, ForwardVarianceCurve::flat(0.04).unwrap(), 0.5).unwrap()
}

fn spec(second_start: f64) -> CirHedgeSpec {
    let m = 30.0 / 365.0;
    CirHedgeSpec::new(
        0.0,
        m,
        m,
        Payoff::Call { strike: 0.2 },
        [SwapWindow { start: m, length: m }, SwapWindow { start: second_start, length: m }],
    )
}

#[test]
fn two_swap_hedge_leaves_no_residual() {
    let r = cir_two_swap_hedge(&cir_model(0.5), &spec(0.25), &cfg(5_000, 5)).unwrap();
    assert_eq!(r.weights.len(), 2);
    assert!(r.residual_estimate.abs() <= 3.0 * r.residual_std_error, "{r:?}");
    assert!(r.residual_risk >= 0.0);
    assert_eq!(r.ratios().len(), 2);
}

#[test]
fn no_vol_of_vol_reduces_to_one_swap() {
    let r = cir_two_swap_hedge(&cir_model(0.0), &spec(0.25), &cfg(2_000, 6)).unwrap();
    assert!(r.weights.len() == 1 || r.weights[1] == 0.0, "{r:?}");
}

#[test]
fn identical_windows_are_singular() {
    let m = 30.0 / 365.0;
    let err = cir_two_swap_hedge(&cir_model(0.5), &spec(m), &cfg(2_000, 7)).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Numerical, "{err}");
}

#[test]
fn jump_modulator_is_rejected() {
    let kernel: Arc<dyn Kernel> = Arc::new(PowerLawKernel::new(0.4, 0.1).unwrap());
    let m = AffineModulator::levy_ou(0.08, 0.71, 6.18, 0.05).unwrap();
    let model = ModulatedModel::new(kernel, m, ForwardVarianceCurve::flat(0.04).unwrap(), 0.5).unwrap();
    assert_eq!(cir_two_swap_hedge(&model, &spec(0.25), &cfg(100, 8)).unwrap_err().kind(), ErrorKind::Validation);
}
