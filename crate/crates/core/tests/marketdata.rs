use proptest::prelude::*;
use vixvol::calibration::{CalibrationMode, CalibrationResult, FitRecord, MaturityError, PricingEngine};
use vixvol::lognormal::McPrice;
use vixvol::marketdata::*;
use vixvol::ErrorKind;

#[test]
fn results_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let price = McPrice { estimate: 0.0123456789012345, std_error: 1.5e-5, control_variate_offset: -2.5e-7 };
    let p = dir.path().join("price.json");
    persist_result(&price, &p).unwrap();
    assert_eq!(load_result::<McPrice>(&p).unwrap(), price);

    let result = CalibrationResult {
        mode: CalibrationMode::PerSlice,
        engine: PricingEngine::Fourier,
        fits: vec![FitRecord {
            maturities_days: vec![7],
            params: [("a".to_string(), 6.18), ("lambda".to_string(), 0.08)].into_iter().collect(),
            per_maturity_rmse: vec![MaturityError { maturity_days: 7, quotes: 7, rmse: 1.0 / 3.0 }],
            objective: 1e-12,
            iterations: 12,
            objective_trace: vec![1.0, 0.1, 1e-12],
            best_start: 0,
            starts: vec![],
        }],
    };
    let p = dir.path().join("calibration.json");
    persist_result(&result, &p).unwrap();
    persist_result(&result, &p).unwrap();
    assert_eq!(load_result::<CalibrationResult>(&p).unwrap(), result);
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_quotes(std::path::Path::new("/nonexistent/quotes.csv"), &Conventions::default()).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Io);
}

#[test]
fn unknown_columns_and_bad_numbers_are_rejected() {
    let csv = "maturity_days,strike,mid_price\n7,0.12,abc\n";
    let err = parse_quotes(csv.as_bytes(), &Conventions::default()).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Validation);
    assert!(err.to_string().contains("line 2"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn csv_round_trip(rows in prop::collection::btree_map((1u32..200, 1u32..400), 0.0001f64..1.0, 1..20)) {
        let text: String = std::iter::once("maturity_days,strike,mid_price\n".to_string())
            .chain(rows.iter().map(|((d, k), p)| format!("{d},{},{p}\n", *k as f64 / 1000.0)))
            .collect();
        let slices = parse_quotes(text.as_bytes(), &Conventions::default()).unwrap();
        let count: usize = slices.iter().map(|s| s.quotes.len()).sum();
        prop_assert_eq!(count, rows.len());
        prop_assert!(slices.windows(2).all(|w| w[0].maturity_days < w[1].maturity_days));
        let again = parse_quotes(quotes_to_csv(&slices).as_bytes(), &Conventions::default()).unwrap();
        prop_assert_eq!(again, slices);
    }
}
