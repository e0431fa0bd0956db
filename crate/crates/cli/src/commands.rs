use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use relaxsim::analysis::{
    equilibrium_fd_curve, fig5_profiles, fit_delta_for_tte, tte_dt_table, LinearModel, TteOptions, TteScenario,
};
use relaxsim::calibration::{
    calibrate_dataset, make_synthetic_dataset, metrics_report, read_ngsim, write_results, CalibrationProblem,
    NgsimOptions, RelaxParams, ReplayModel, SyntheticScenario, TrajectoryDataset,
};
use relaxsim::config::RunConfig;
use relaxsim::measurement::{capacity_reports, discharge_rate, CapacityReport};
use relaxsim::simulation::{Schedule, World};
use relaxsim::{CfParams, RelaxationConfig};

use crate::manifest::RunManifest;
use crate::{Artifact, Cli, Command, DatasetFormat};

pub const OUT_ENV: &str = "RELAXSIM_OUT";

/// One relaxation setting of a capacity sweep: `0`, `7`, or `10*` (positive amounts only).
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxSpec {
    pub label: String,
    pub c: f64,
    pub positive_only: bool,
}

impl RelaxSpec {
    pub fn config(&self) -> Option<RelaxationConfig> {
        match (self.c > 0.0, self.positive_only) {
            (false, _) => None,
            (true, false) => Some(RelaxationConfig::new(self.c)),
            (true, true) => Some(RelaxationConfig::positive_only(self.c)),
        }
    }
}

pub fn parse_relax(s: &str) -> Result<RelaxSpec, String> {
    let s = s.trim();
    let (num, positive_only) = match s.strip_suffix('*') {
        Some(n) => (n, true),
        None => (s, false),
    };
    let c: f64 = num.parse().map_err(|_| format!("`{s}` is not a relaxation time (e.g. 0, 7 or 10*)"))?;
    if !(c >= 0.0 && c.is_finite()) || (positive_only && c == 0.0) {
        return Err(format!("`{s}` must be a positive time, or 0 without `*`"));
    }
    Ok(RelaxSpec { label: s.to_string(), c, positive_only })
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Simulate => "simulate",
        Command::Capacity { .. } => "capacity",
        Command::Calibrate { .. } => "calibrate",
        Command::Synthesize { .. } => "synthesize",
        Command::Analyze { .. } => "analyze",
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    match &cli.out {
        Some(p) => p.clone(),
        None => {
            let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("relaxsim-out"));
            root.join(command_name(&cli.command))
        }
    }
}

fn create(dir: &Path, name: &str, outputs: &mut Vec<String>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    outputs.push(name.to_string());
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

pub fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let dir = out_dir(cli);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut outputs = Vec::new();

    match &cli.command {
        Command::Simulate => {
            if let Some(seed) = cli.seed {
                cfg.simulation.seed = seed;
            }
            simulate(&cfg, &dir, &mut outputs)?
        }
        Command::Capacity { ramp, relax, seeds } => {
            let seeds = match (seeds.is_empty(), cli.seed) {
                (false, _) => seeds.clone(),
                (true, Some(s)) => vec![s],
                (true, None) => cfg.measurement.seeds.clone(),
            };
            capacity(&cfg, ramp, relax, &seeds, &dir, &mut outputs)?
        }
        Command::Calibrate { dataset, model, relax_mode, format, vehicles, ramp_lanes } => {
            if let Some(seed) = cli.seed {
                cfg.calibration.seed = seed;
            }
            let ds = match format {
                DatasetFormat::Native => TrajectoryDataset::read_csv(open(dataset)?),
                DatasetFormat::Ngsim => {
                    read_ngsim(open(dataset)?, &NgsimOptions { ramp_lanes: ramp_lanes.clone(), ..NgsimOptions::default() })
                }
            }
            .with_context(|| format!("reading {}", dataset.display()))?;
            let problem = CalibrationProblem::new(*model, *relax_mode);
            problem.validate()?;
            let ids = (!vehicles.is_empty()).then_some(vehicles.as_slice());
            let results = calibrate_dataset(&ds, ids, &problem, &cfg.ga_config())?;
            write_results(&results, create(&dir, "results.csv", &mut outputs)?)?;
            let report = metrics_report(&results);
            writeln!(create(&dir, "metrics.txt", &mut outputs)?, "{report}")?;
            println!("{report}");
        }
        Command::Synthesize { followers, c } => {
            let truth = ReplayModel { cf: CfParams::default_idm(), relax: RelaxParams::OneParam { c: *c } };
            let scenario = SyntheticScenario { followers: *followers, ..SyntheticScenario::default() };
            let ds = make_synthetic_dataset(&scenario, &truth, cli.seed.unwrap_or(0))?;
            ds.write_csv(create(&dir, "dataset.csv", &mut outputs)?)?;
        }
        Command::Analyze { which, relax, target_tte } => analyze(&cfg, *which, relax, *target_tte, &dir, &mut outputs)?,
    }

    let effective = "config.cfg";
    fs::write(dir.join(effective), cfg.to_toml())?;
    outputs.push(effective.to_string());
    RunManifest {
        command: command_name(&cli.command).to_string(),
        args: std::env::args().collect(),
        config_path: cli.config.clone(),
        effective_config: effective.to_string(),
        seed: cli.seed,
        out_dir: dir.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_s: started.elapsed().as_secs_f64(),
        outputs,
    }
    .write(&dir)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn simulate(cfg: &RunConfig, dir: &Path, outputs: &mut Vec<String>) -> Result<()> {
    let log = World::new(cfg.sim_config()?)?.run()?;
    log.write_trajectories(create(dir, "trajectories.csv", outputs)?)?;
    log.write_detectors(create(dir, "detectors.csv", outputs)?)?;
    log.write_events(create(dir, "events.csv", outputs)?)?;
    println!("lane changes {}, collisions {}", log.lane_changes, log.collisions);
    Ok(())
}

fn capacity(
    cfg: &RunConfig,
    ramps: &[f64],
    relax: &[RelaxSpec],
    seeds: &[u64],
    dir: &Path,
    outputs: &mut Vec<String>,
) -> Result<()> {
    if ramps.iter().any(|r| !(*r >= 0.0)) {
        bail!("on-ramp inflows must be nonnegative");
    }
    let base = cfg.sim_config()?;
    let opts = cfg.experiment_options();
    let cases: Vec<(f64, &RelaxSpec)> = ramps.iter().flat_map(|&q| relax.iter().map(move |r| (q, r))).collect();
    let runs: Vec<Vec<CapacityReport>> = cases
        .par_iter()
        .map(|&(q, spec)| {
            let sim = relaxsim::simulation::SimConfig { relaxation: spec.config(), ..base.clone() };
            capacity_reports(&sim, &spec.label, q, seeds, &opts)
        })
        .collect::<relaxsim::Result<_>>()?;

    let lanes = base.network.mainline_lanes;
    let mut table = csv_writer(create(dir, "capacity.csv", outputs)?, CapacityReport::csv_header(lanes))?;
    let mut header = vec!["seed".to_string()];
    header.extend(CapacityReport::csv_header(lanes));
    let mut per_seed = csv_writer(create(dir, "capacity_runs.csv", outputs)?, header)?;
    for reports in &runs {
        let mean = CapacityReport::mean_of(reports)?;
        table.write_record(mean.csv_record())?;
        println!(
            "ramp {:>5} relax {:>4}: capacity {:.0}, discharge {:.0}, drop {:.1}%, period {:.2} min",
            mean.onramp, mean.label, mean.capacity, mean.discharge, mean.drop_pct, mean.period
        );
        for (seed, r) in seeds.iter().zip(reports) {
            let mut row = vec![seed.to_string()];
            row.extend(r.csv_record());
            per_seed.write_record(row)?;
        }
    }
    table.flush()?;
    per_seed.flush()?;
    Ok(())
}

fn csv_writer<W: Write>(w: W, header: Vec<String>) -> Result<csv::Writer<W>> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

fn analyze(cfg: &RunConfig, which: Artifact, relax: &[f64], target_tte: f64, dir: &Path, outputs: &mut Vec<String>) -> Result<()> {
    match which {
        Artifact::Fig5 => {
            let mut out = csv_writer(create(dir, "fig5.csv", outputs)?, ["model", "relaxed", "t", "speed", "accel"].map(String::from).to_vec())?;
            for (name, model) in [("linear_newell", LinearModel::LinearNewell), ("linear_second_order", LinearModel::LinearSecondOrder)] {
                for relaxed in [false, true] {
                    let s = fig5_profiles::<f64>(model, relaxed, 0.01, 60.0)?;
                    for i in 0..s.len() {
                        out.serialize((name, u8::from(relaxed), s.t[i], s.speed[i], s.accel[i]))?;
                    }
                }
            }
            out.flush()?;
        }
        Artifact::TteTable => {
            let times = if relax.is_empty() { vec![0.0, 2.0, 4.0, 7.0, 10.0, 15.0] } else { relax.to_vec() };
            let p = cfg.cf_params()?;
            let scenario = TteScenario::uncongested_merge();
            let opts = TteOptions::default();
            let dt = cfg.simulation.dt;
            let delta = fit_delta_for_tte(&p, None, scenario, target_tte, dt, opts)?;
            let base = cfg.relaxation_config()?.unwrap_or_else(|| RelaxationConfig::new(1.0));
            let rows = tte_dt_table(&p, &base, scenario, &times, delta, dt, opts)?;
            let mut out = csv_writer(create(dir, "tte_table.csv", outputs)?, ["relax", "tte", "dt", "delta"].map(String::from).to_vec())?;
            for (c, r) in rows {
                out.serialize((c, r.tte, r.dt, r.delta))?;
                println!("relax {c:>5}: TTE/DT {:.1}/{:.1} s", r.tte, r.dt);
            }
            out.flush()?;
        }
        Artifact::Fd => fd(cfg, relax.first().copied(), dir, outputs)?,
    }
    Ok(())
}

/// Two-hour run: mainline ramps to 2196 veh/hr/lane over 24 min, on-ramp 0 to 800 veh/hr
/// between 34 and 58 min. Used when the config leaves both inflows empty.
pub fn fd_schedules() -> (Schedule, Schedule) {
    let main = Schedule::ramp_up(0.0, 24.0 * 60.0, 2196.0);
    let ramp = Schedule::new(vec![(34.0 * 60.0, 0.0), (58.0 * 60.0, 800.0)]).expect("valid schedule");
    (main, ramp)
}

fn fd(cfg: &RunConfig, relax: Option<f64>, dir: &Path, outputs: &mut Vec<String>) -> Result<()> {
    let mut sim = cfg.sim_config()?;
    if sim.mainline_inflow.points().is_empty() && sim.onramp_inflow.points().is_empty() {
        (sim.mainline_inflow, sim.onramp_inflow) = fd_schedules();
        sim.horizon = sim.horizon.max(7200.0);
    }
    if let Some(c) = relax {
        sim.relaxation = (c > 0.0).then(|| RelaxationConfig::new(c));
    }
    sim.record.trajectories = false;
    sim.edie = Some(cfg.edie_spec());
    let network = sim.network.clone();
    let (horizon, length, cf) = (sim.horizon, sim.vehicle_length, sim.cf);
    let log = World::new(sim)?.run()?;

    let grid = log.edie.as_ref().context("Edie grid missing from the log")?;
    let dx = cfg.measurement.edie_dx;
    let mut out = csv_writer(
        create(dir, "fd_points.csv", outputs)?,
        ["x_start", "t_start", "density_veh_km", "flow_veh_hr", "detector"].map(String::from).to_vec(),
    )?;
    for p in grid.points() {
        let det = network.detectors.iter().position(|&d| d >= p.x0 && d < p.x0 + dx);
        out.write_record([
            p.x0.to_string(),
            p.t0.to_string(),
            format!("{:.6}", p.k * 1000.0),
            format!("{:.6}", p.q * 3600.0),
            det.map_or(String::new(), |d| d.to_string()),
        ])?;
    }
    out.flush()?;

    let window = cfg.measurement.edie_dt;
    let downstream = log.detector(cfg.measurement.downstream_detector);
    let flow = discharge_rate(&downstream, 0.0, window, horizon, horizon, network.mainline_lanes)?;
    let mut out = csv_writer(create(dir, "discharge.csv", outputs)?, ["t_start", "flow_veh_hr"].map(String::from).to_vec())?;
    for (i, q) in flow.series.iter().enumerate() {
        out.serialize((i as f64 * window, q))?;
    }
    out.flush()?;

    let mut out = csv_writer(
        create(dir, "equilibrium.csv", outputs)?,
        ["speed", "density_veh_km", "flow_veh_hr"].map(String::from).to_vec(),
    )?;
    for row in equilibrium_fd_curve(&cf, length, 200, 40.0) {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}
