use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use relaxsim::analysis::newell_relaxed_speed_profile;
use relaxsim::cf_models::{LinearNewell, LinearSecondOrder};
use relaxsim::lane_changing::Side;
use relaxsim::simulation::{run, Schedule, SimConfig, World};
use relaxsim::{CfParams, RelaxationConfig};

fn quiet_config() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.lc.d7 = 0.0;
    cfg
}

#[test]
fn free_vehicle_cruises_at_max_speed() {
    let mut w = World::new(quiet_config()).unwrap();
    let id = w.insert_vehicle(0, 100.0, 35.0, None).unwrap();
    for _ in 0..100 {
        w.step().unwrap();
    }
    let v = w.vehicle(id).unwrap();
    assert_abs_diff_eq!(v.pos, 100.0 + 35.0 * 10.0, epsilon = 1e-9);
    assert_abs_diff_eq!(v.speed, 35.0, epsilon = 1e-12);
    assert_abs_diff_eq!(v.accel, 0.0, epsilon = 1e-12);
}

#[test]
fn equilibrium_platoon_stays_put() {
    let cfg = quiet_config();
    let v = 25.0;
    let gap = cfg.cf.equilibrium_headway(v).unwrap();
    let mut w = World::new(cfg.clone()).unwrap();
    let mut pos = 1500.0;
    let mut ids = Vec::new();
    for _ in 0..6 {
        ids.push(w.insert_vehicle(1, pos, v, None).unwrap());
        pos -= gap + cfg.vehicle_length;
    }
    // constant-speed head vehicle
    let head_params = CfParams::LinearSecondOrder(LinearSecondOrder { beta1: 0.0, beta2: 0.0, beta3: 0.0, beta4: 0.0 });
    w.insert_vehicle(1, 1500.0 + gap + cfg.vehicle_length, v, Some(head_params)).unwrap();
    for _ in 0..200 {
        w.step().unwrap();
        for &id in &ids {
            assert!(w.vehicle(id).unwrap().accel.abs() < 1e-9);
        }
    }
}

/// A linear Newell vehicle cut in front of at equilibrium relaxes exactly as the closed form.
#[test]
fn linear_newell_merge_matches_closed_form() {
    let (beta1, beta2, v, gamma, c) = (2.0 / 3.0, 2.0, 20.0, 17.0, 15.0);
    let dt = 0.001;
    let mut cfg = quiet_config();
    cfg.dt = dt;
    cfg.cf = CfParams::LinearNewell(LinearNewell { beta1, beta2 });
    cfg.relaxation = Some(RelaxationConfig::new(c));
    let s_eq = cfg.cf.equilibrium_headway(v).unwrap();
    let mut w = World::new(cfg.clone()).unwrap();

    let follower = w.insert_vehicle(1, 100.0, v, None).unwrap();
    let constant = CfParams::LinearSecondOrder(LinearSecondOrder { beta1: 0.0, beta2: 0.0, beta3: 0.0, beta4: 0.0 });
    w.insert_vehicle(0, 100.0 + s_eq - gamma + cfg.vehicle_length, v, Some(constant)).unwrap();
    assert!(w.force_lane_change(follower, Side::Left).unwrap());

    let mut worst: f64 = 0.0;
    for k in 1..=30_000 {
        w.step().unwrap();
        let t = k as f64 * dt;
        let expected = newell_relaxed_speed_profile(t, gamma, c, beta1, v).unwrap();
        worst = worst.max((w.vehicle(follower).unwrap().speed - expected).abs());
    }
    assert!(worst < 0.05, "max speed error {worst}");
}

fn demand_config(seed: u64, mainline: f64, ramp: f64) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.seed = seed;
    cfg.horizon = 600.0;
    cfg.mainline_inflow = Schedule::ramp_up(0.0, 120.0, mainline);
    cfg.onramp_inflow = Schedule::constant(ramp);
    cfg.relaxation = Some(RelaxationConfig::new(5.0));
    cfg.record.trajectories = true;
    cfg
}

#[test]
fn same_seed_same_log() {
    let a = run(demand_config(7, 1800.0, 400.0)).unwrap();
    let b = run(demand_config(7, 1800.0, 400.0)).unwrap();
    assert_eq!(a.trajectories, b.trajectories);
    assert_eq!(a.detectors, b.detectors);
    assert_eq!(a.events, b.events);
    assert!(a.lane_changes > 0);
}

#[test]
fn zero_inflow_gives_empty_logs() {
    let mut cfg = SimConfig::default();
    cfg.horizon = 60.0;
    cfg.record.trajectories = true;
    let log = run(cfg).unwrap();
    assert!(log.trajectories.is_empty());
    assert!(log.detectors.is_empty());
    assert!(log.events.is_empty());

    let mut buf = Vec::new();
    log.write_trajectories(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "t,veh_id,lane,pos,speed,accel\n");
}

/// Conservation, bounded displacement and lane order, checked after every step.
fn check_invariants(seed: u64, mainline: f64, ramp: f64, c: Option<f64>) -> Result<(), TestCaseError> {
    let mut cfg = demand_config(seed, mainline, ramp);
    cfg.relaxation = c.map(RelaxationConfig::new);
    cfg.record.trajectories = false;
    let vmax = cfg.cf.max_speed().unwrap();
    let (dt, len) = (cfg.dt, cfg.vehicle_length);
    let mut w = World::new(cfg).unwrap();
    let mut last: Vec<Option<f64>> = Vec::new();
    for _ in 0..3000 {
        w.step().unwrap();
        prop_assert_eq!(w.entered() - w.exited(), w.on_road() as u64);
        for v in w.vehicles() {
            if let Some(Some(prev)) = last.get(v.id) {
                let moved = v.pos - prev;
                prop_assert!(moved >= -1e-9 && moved <= vmax * dt + 0.5 * 3.1 * dt * dt + 1e-9, "moved {}", moved);
            }
        }
        for lane in 0..3 {
            let ids = w.lane(lane);
            for pair in ids.windows(2) {
                let (a, b) = (w.vehicle(pair[0]).unwrap(), w.vehicle(pair[1]).unwrap());
                prop_assert!(a.pos - len >= b.pos - 1e-9 || w.log().collisions > 0);
            }
        }
        last.clear();
        for v in w.vehicles() {
            if last.len() <= v.id {
                last.resize(v.id + 1, None);
            }
            last[v.id] = Some(v.pos);
        }
    }
    prop_assert_eq!(w.log().collisions, 0);
    Ok(())
}

#[test]
fn engine_invariants_hold() {
    let mut runner = TestRunner::new_with_rng(
        Config { cases: 6, ..Config::default() },
        TestRng::from_seed(RngAlgorithm::ChaCha, &[11; 32]),
    );
    let strategy = (0u64..1000, 600.0f64..2400.0, 0.0f64..800.0, prop::option::of(0.5f64..15.0));
    runner.run(&strategy, |(seed, mainline, ramp, c)| check_invariants(seed, mainline, ramp, c)).unwrap();
}
