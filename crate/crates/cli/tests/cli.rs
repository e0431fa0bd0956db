use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn relaxsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaxsim"))
        .args(args)
        .current_dir(dir)
        .env_remove("RELAXSIM_OUT")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const SHORT: &str = "[simulation]\nhorizon = 240\nrecord_stride = 5\n[inflow]\nmainline = [[0, 1500]]\nonramp = [[0, 300]]\n";

#[test]
fn zero_inflow_writes_headers_and_a_manifest() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "zero.cfg", "[simulation]\nhorizon = 30\n");
    let o = relaxsim(tmp.path(), &["simulate", "--config", "zero.cfg", "--out", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = tmp.path().join("run");
    assert_eq!(fs::read_to_string(run.join("trajectories.csv")).unwrap(), "t,veh_id,lane,pos,speed,accel\n");
    assert_eq!(fs::read_to_string(run.join("detectors.csv")).unwrap(), "detector_id,t,veh_id,lane,speed\n");
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config_path"], "zero.cfg");
    assert!(manifest["outputs"].as_array().unwrap().iter().any(|x| x == "trajectories.csv"));
    assert!(!run.join(".manifest.json.tmp").exists());
}

#[test]
fn same_seed_is_byte_identical_and_manifest_reruns() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "short.cfg", SHORT);
    for out in ["a", "b"] {
        let o = relaxsim(tmp.path(), &["simulate", "--config", "short.cfg", "--seed", "7", "--out", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |d: &str, f: &str| fs::read(tmp.path().join(d).join(f)).unwrap();
    for f in ["trajectories.csv", "detectors.csv", "events.csv"] {
        assert_eq!(read("a", f), read("b", f), "{f}");
    }
    assert!(read("a", "trajectories.csv").len() > 1000);

    // rerun from the effective config recorded next to the outputs
    let o = relaxsim(tmp.path(), &["simulate", "--config", "a/config.cfg", "--out", "c"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read("a", "trajectories.csv"), read("c", "trajectories.csv"));
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "zero.cfg", "[simulation]\nhorizon = 5\n");
    let o = Command::new(env!("CARGO_BIN_EXE_relaxsim"))
        .args(["simulate", "--config", "zero.cfg"])
        .current_dir(tmp.path())
        .env("RELAXSIM_OUT", tmp.path().join("root"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp.path().join("root/simulate/manifest.json").exists());
}

#[test]
fn config_errors_name_the_line() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "typo.cfg", "[simulation]\ndt = 0.1\n[network]\nlenght = 3\n");
    let o = relaxsim(tmp.path(), &["simulate", "--config", "typo.cfg"]);
    assert!(!o.status.success());
    let e = stderr(&o);
    assert!(e.contains("line 4") && e.contains("lenght"), "{e}");
}

#[test]
fn usage_errors() {
    let tmp = TempDir::new().unwrap();
    let cases: [&[&str]; 5] = [
        &["capacity", "--ramp", "400", "--relax", ""],
        &["capacity", "--ramp", "400"],
        &["calibrate", "--dataset", "x.csv", "--model", "krauss"],
        &["analyze", "table1"],
        &["simulate", "--jobs", "0"],
    ];
    for args in cases {
        let o = relaxsim(tmp.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn capacity_table_includes_positive_only_rows() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "quick.cfg",
        "[measurement]\nwarmup = 300\ncapacity_horizon = 1200\nresolution = 200\ndischarge_duration = 600\ndischarge_delay = 60\n",
    );
    let o = relaxsim(
        tmp.path(),
        &["capacity", "--config", "quick.cfg", "--ramp", "800", "--relax", "0,10*", "--seeds", "1", "--jobs", "2", "--out", "cap"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rd = csv::Reader::from_path(tmp.path().join("cap/capacity.csv")).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!((&rows[0][0], &rows[1][0]), ("0", "10*"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for r in &rows {
        let (cap, dis, drop) = (r[col("capacity")].parse::<f64>().unwrap(), r[col("discharge")].parse::<f64>().unwrap(), r[col("drop_pct")].parse::<f64>().unwrap());
        assert!((drop - 100.0 * (cap - dis) / cap).abs() < 1e-3);
    }
    assert!(tmp.path().join("cap/capacity_runs.csv").exists());
}

#[test]
fn calibrate_round_trip_and_schema_errors() {
    let tmp = TempDir::new().unwrap();
    let o = relaxsim(tmp.path(), &["synthesize", "--followers", "3", "--seed", "4", "--out", "syn"]);
    assert!(o.status.success(), "{}", stderr(&o));
    write(tmp.path(), "fast.cfg", "[calibration]\ngenerations = 5\npopulation = 12\npolish_iters = 20\n");
    let o = relaxsim(
        tmp.path(),
        &["calibrate", "--config", "fast.cfg", "--dataset", "syn/dataset.csv", "--model", "idm", "--relax-mode", "1p", "--out", "cal"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let results = fs::read_to_string(tmp.path().join("cal/results.csv")).unwrap();
    assert!(results.starts_with("veh_id,model,relax,params,mse,"));
    assert_eq!(results.lines().count(), 4);
    assert!(fs::read_to_string(tmp.path().join("cal/metrics.txt")).unwrap().contains("near_lc"));

    write(tmp.path(), "bad.csv", "veh_id,t,pos,lane,leader_id,length,merge\n1,0,0,1,,4,0\n");
    let o = relaxsim(tmp.path(), &["calibrate", "--dataset", "bad.csv", "--model", "idm", "--out", "bad"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`speed`"), "{}", stderr(&o));

    write(tmp.path(), "ngsim.csv", "Vehicle_ID,Frame_ID\n1,1\n");
    let o = relaxsim(tmp.path(), &["calibrate", "--dataset", "ngsim.csv", "--format", "ngsim", "--model", "ovm", "--out", "bad"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("missing column"), "{}", stderr(&o));
}

#[test]
fn analyze_artifacts() {
    let tmp = TempDir::new().unwrap();
    let o = relaxsim(tmp.path(), &["analyze", "fig5", "--out", "f5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut series = std::collections::BTreeSet::new();
    let mut rd = csv::Reader::from_path(tmp.path().join("f5/fig5.csv")).unwrap();
    for r in rd.records() {
        let r = r.unwrap();
        series.insert((r[0].to_string(), r[1].to_string()));
    }
    assert_eq!(series.len(), 4);

    let o = relaxsim(tmp.path(), &["analyze", "tte_table", "--out", "tte"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(tmp.path().join("tte/tte_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 7);
    assert!(table.starts_with("relax,tte,dt,delta\n"));

    write(tmp.path(), "fd.cfg", SHORT);
    let o = relaxsim(tmp.path(), &["analyze", "fd", "--config", "fd.cfg", "--relax", "8.7", "--out", "fd"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let points = fs::read_to_string(tmp.path().join("fd/fd_points.csv")).unwrap();
    assert!(points.starts_with("x_start,t_start,density_veh_km,flow_veh_hr,detector\n"));
    // 30 cells of 100 m over two 120 s intervals
    assert_eq!(points.lines().count(), 1 + 30 * 2);
    assert!(fs::read_to_string(tmp.path().join("fd/equilibrium.csv")).unwrap().lines().count() > 100);
    assert!(tmp.path().join("fd/discharge.csv").exists());
}
