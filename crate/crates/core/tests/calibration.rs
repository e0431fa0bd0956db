use relaxsim::calibration::*;
use relaxsim::cf_models::ModelKind;
use relaxsim::CfParams;

fn small() -> SyntheticScenario {
    SyntheticScenario { followers: 5, duration: 40.0, ..SyntheticScenario::default() }
}

fn ga(seed: u64) -> GaConfig {
    GaConfig { seed, ..GaConfig::default() }
}

#[test]
fn each_model_with_relaxation_fits_its_own_data() {
    let truths = [
        (ModelKind::Idm, vec![33.3, 1.1, 2.0, 1.5, 2.0]),
        (ModelKind::Ovm, vec![16.8, 0.086, 1.09, 0.913, 1.545]),
        (ModelKind::Newell, vec![4.0, 1.0, 30.0]),
    ];
    for (kind, values) in truths {
        let truth = ReplayModel { cf: CfParams::from_values(kind, &values).unwrap(), relax: RelaxParams::OneParam { c: 8.7 } };
        let ds = make_synthetic_dataset(&small(), &truth, 21).unwrap();
        let results = calibrate_dataset(&ds, None, &CalibrationProblem::new(kind, RelaxMode::OneParam), &ga(4)).unwrap();
        let m = median(&results.iter().map(|r| r.mse).collect::<Vec<_>>());
        assert!(m < 0.01, "{kind}: median MSE {m}");
        assert!(results.iter().all(|r| r.near_lc_mse.map_or(true, |x| x >= 0.0)));
    }
}

#[test]
fn relaxation_is_inert_without_leader_changes() {
    let truth = ReplayModel { cf: CfParams::default_idm(), relax: RelaxParams::None };
    let ds = make_synthetic_dataset(&small(), &truth, 8).unwrap();
    let steady: Vec<usize> = ds.vehicles.values().filter(|v| v.id % 100 == 0 && v.leader_changes().is_empty()).map(|v| v.id).collect();
    assert!(!steady.is_empty());
    let cf = CfParams::from_values(ModelKind::Idm, &[30.0, 1.4, 3.0, 1.0, 1.8]).unwrap();
    for id in steady {
        let base = evaluate_vehicle(&ds, id, &ReplayModel { cf, relax: RelaxParams::None }).unwrap();
        for relax in [RelaxParams::OneParam { c: 5.0 }, RelaxParams::TwoParam { c_s: 3.0, c_v: 20.0 }] {
            let r = evaluate_vehicle(&ds, id, &ReplayModel { cf, relax }).unwrap();
            assert!((r.mse - base.mse).abs() <= 1e-12);
        }
    }
}

#[test]
fn relaxation_never_hurts_when_it_can_switch_off() {
    // generator without relaxation; c near its lower bound reproduces it almost exactly
    let truth = ReplayModel { cf: CfParams::default_idm(), relax: RelaxParams::None };
    let ds = make_synthetic_dataset(&small(), &truth, 13).unwrap();
    let ids = [200, 500];
    let none = calibrate_dataset(&ds, Some(&ids), &CalibrationProblem::new(ModelKind::Idm, RelaxMode::None), &ga(2)).unwrap();
    let one = calibrate_dataset(&ds, Some(&ids), &CalibrationProblem::new(ModelKind::Idm, RelaxMode::OneParam), &ga(2)).unwrap();
    for (a, b) in one.iter().zip(&none) {
        assert!(a.mse <= b.mse.max(0.01), "{} vs {}", a.mse, b.mse);
    }
}

#[test]
fn different_seeds_agree_on_fit_quality() {
    let truth = ReplayModel { cf: CfParams::default_idm(), relax: RelaxParams::OneParam { c: 8.7 } };
    let ds = make_synthetic_dataset(&small(), &truth, 5).unwrap();
    let p = CalibrationProblem::new(ModelKind::Idm, RelaxMode::OneParam);
    let a = calibrate_vehicle(&ds, 200, &p, &ga(1)).unwrap();
    let b = calibrate_vehicle(&ds, 200, &p, &ga(99)).unwrap();
    // both fits are essentially exact, so compare on an absolute floor
    assert!(a.mse < 0.01 && b.mse < 0.01, "{} {}", a.mse, b.mse);
    assert!((a.mse - b.mse).abs() <= 0.05 * a.mse.max(b.mse) + 0.005);
}

#[test]
fn calibration_is_deterministic_per_seed() {
    let truth = ReplayModel { cf: CfParams::default_idm(), relax: RelaxParams::OneParam { c: 8.7 } };
    let ds = make_synthetic_dataset(&small(), &truth, 5).unwrap();
    let p = CalibrationProblem::new(ModelKind::Idm, RelaxMode::OneParam);
    let cfg = GaConfig { generations: 10, seed: 3, ..GaConfig::default() };
    assert_eq!(calibrate_dataset(&ds, None, &p, &cfg).unwrap(), calibrate_dataset(&ds, None, &p, &cfg).unwrap());
}

#[test]
fn results_csv_round_trips_through_a_reader() {
    let truth = ReplayModel { cf: CfParams::default_idm(), relax: RelaxParams::OneParam { c: 8.7 } };
    let ds = make_synthetic_dataset(&small(), &truth, 5).unwrap();
    let results: Vec<VehicleResult> = ds.calibratable().iter().map(|&id| evaluate_vehicle(&ds, id, &truth).unwrap()).collect();
    let mut buf = Vec::new();
    write_results(&results, &mut buf).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), RESULTS_HEADER.to_vec());
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(&rows[0][3].split(';').count(), &6);
    assert_eq!(rows[0][4].parse::<f64>().unwrap(), 0.0);

    // dataset CSV round trip
    let mut buf = Vec::new();
    ds.write_csv(&mut buf).unwrap();
    let back = TrajectoryDataset::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.calibratable(), ds.calibratable());
    for id in ds.calibratable() {
        let r = evaluate_vehicle(&back, id, &truth).unwrap();
        assert!(r.mse < 1e-12);
    }
}
