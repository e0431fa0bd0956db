//! Trajectory calibration: replay each follower behind its recorded leaders and fit the
//! car-following (and relaxation) parameters to the recorded positions.

mod dataset;
mod ga;
mod replay;
mod synthetic;

use std::fmt;
use std::io::Write;

pub use dataset::{read_ngsim, NgsimOptions, TrajectoryDataset, VehicleTrajectory, DATASET_HEADER, NGSIM_COLUMNS};
pub use ga::{ga_minimize, validate_bounds, GaConfig, GaResult};
pub use replay::{
    finite_difference, mse_position, realistic_acceleration, replay_simulate, RelaxMode, RelaxParams, Replay,
    ReplayModel,
};
pub use synthetic::{make_synthetic_dataset, SyntheticScenario};

use rayon::prelude::*;

use crate::cf_models::ModelKind;
use crate::error::{Error, Result};

/// Seconds after a leader change that count as "near" it.
pub const NEAR_LC_WINDOW: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationProblem {
    pub model: ModelKind,
    pub relax: RelaxMode,
    /// One `(low, high)` pair per model parameter, then per relaxation parameter.
    pub bounds: Vec<(f64, f64)>,
}

impl CalibrationProblem {
    pub fn new(model: ModelKind, relax: RelaxMode) -> Self {
        let mut bounds = default_model_bounds(model);
        bounds.extend(default_relax_bounds(relax));
        Self { model, relax, bounds }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.model.param_count() + self.relax.param_count();
        if self.bounds.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} with relaxation {} needs {n} bounds, got {}",
                self.model,
                self.relax,
                self.bounds.len()
            )));
        }
        if self.relax == RelaxMode::Ska && self.model != ModelKind::Idm {
            return Err(Error::InvalidArgument("the SKA benchmark needs the IDM".into()));
        }
        validate_bounds(&self.bounds)
    }
}

pub fn default_model_bounds(model: ModelKind) -> Vec<(f64, f64)> {
    match model {
        ModelKind::Idm => vec![(20.0, 40.0), (0.2, 3.0), (0.5, 10.0), (0.3, 5.0), (0.5, 6.0)],
        ModelKind::Ovm => vec![(10.0, 40.0), (0.01, 0.5), (0.1, 5.0), (0.1, 5.0), (0.01, 5.0)],
        ModelKind::Newell => vec![(1.0, 15.0), (0.3, 3.0), (20.0, 40.0)],
        ModelKind::LinearNewell => vec![(0.05, 3.0), (0.5, 20.0)],
        ModelKind::LinearSecondOrder => vec![(-2.0, 2.0); 4],
    }
}

pub fn default_relax_bounds(mode: RelaxMode) -> Vec<(f64, f64)> {
    match mode {
        RelaxMode::None => vec![],
        RelaxMode::OneParam => vec![(0.1, 60.0)],
        RelaxMode::TwoParam => vec![(0.1, 60.0), (0.1, 60.0)],
        RelaxMode::Ska => vec![(0.1, 3.0), (0.1, 60.0)],
    }
}

/// Calibration outcome for one vehicle.
#[derive(Clone, Debug, PartialEq)]
pub struct VehicleResult {
    pub id: usize,
    pub model: ReplayModel,
    pub mse: f64,
    /// MSE over the frames within [`NEAR_LC_WINDOW`] after each leader change.
    pub near_lc_mse: Option<f64>,
    pub lane_changes: usize,
    pub merge: bool,
    pub realistic_acc: bool,
    pub clamped: bool,
}

/// Independent rng stream for one vehicle.
fn vehicle_seed(master: u64, id: usize) -> u64 {
    let mut z = master ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn near_lc_mse(ds: &TrajectoryDataset, v: &VehicleTrajectory, sim: &[f64]) -> Option<f64> {
    let window = (NEAR_LC_WINDOW / ds.dt).round() as usize;
    let mut near = vec![false; v.len()];
    for k in v.leader_changes() {
        for flag in near.iter_mut().take((k + 1 + window).min(v.len())).skip(k + 1) {
            *flag = true;
        }
    }
    let (sum, n) = near
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .fold((0.0, 0usize), |(s, n), (k, _)| (s + (sim[k] - v.pos[k]).powi(2), n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Scores a fixed model on one vehicle.
pub fn evaluate_vehicle(ds: &TrajectoryDataset, id: usize, model: &ReplayModel) -> Result<VehicleResult> {
    let v = ds.vehicle(id).ok_or_else(|| Error::Dataset(format!("no vehicle {id}")))?;
    let r = replay_simulate(ds, id, model)?;
    Ok(VehicleResult {
        id,
        model: *model,
        mse: mse_position(&r.pos, &v.pos)?,
        near_lc_mse: near_lc_mse(ds, v, &r.pos),
        lane_changes: v.leader_changes().len(),
        merge: v.merge,
        realistic_acc: realistic_acceleration(&r.accel, &v.speed, ds.dt),
        clamped: r.clamped,
    })
}

/// Fits one vehicle with the GA; the vehicle's rng stream is derived from `ga.seed`.
pub fn calibrate_vehicle(ds: &TrajectoryDataset, id: usize, problem: &CalibrationProblem, ga: &GaConfig) -> Result<VehicleResult> {
    problem.validate()?;
    let v = ds.vehicle(id).ok_or_else(|| Error::Dataset(format!("no vehicle {id}")))?;
    if !ds.has_leader_coverage(id) {
        return Err(Error::Dataset(format!("vehicle {id}: a referenced leader is not recorded")));
    }
    let objective = |x: &[f64]| {
        let model = ReplayModel::from_values(problem.model, problem.relax, x).ok()?;
        let r = replay_simulate(ds, id, &model).ok()?;
        mse_position(&r.pos, &v.pos).ok()
    };
    let cfg = GaConfig { seed: vehicle_seed(ga.seed, id), ..*ga };
    let best = ga_minimize(objective, &problem.bounds, &cfg)?;
    let model = ReplayModel::from_values(problem.model, problem.relax, &best.best)?;
    evaluate_vehicle(ds, id, &model)
}

/// Calibrates every vehicle in `ids` (or every calibratable vehicle when `None`), in id order.
pub fn calibrate_dataset(
    ds: &TrajectoryDataset,
    ids: Option<&[usize]>,
    problem: &CalibrationProblem,
    ga: &GaConfig,
) -> Result<Vec<VehicleResult>> {
    let ids: Vec<usize> = match ids {
        Some(ids) => ids.to_vec(),
        None => ds.calibratable(),
    };
    ids.par_iter().map(|&id| calibrate_vehicle(ds, id, problem, ga)).collect()
}

pub const RESULTS_HEADER: [&str; 10] =
    ["veh_id", "model", "relax", "params", "mse", "near_lc_mse", "lane_changes", "merge", "realistic_acc", "clamped"];

/// Results CSV; `params` is a `;`-separated list in model order, then relaxation.
pub fn write_results<W: Write>(results: &[VehicleResult], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RESULTS_HEADER)?;
    for r in results {
        let params: Vec<String> = r.model.values().iter().map(|x| format!("{x:.6}")).collect();
        let relax = match r.model.relax {
            RelaxParams::None => RelaxMode::None,
            RelaxParams::OneParam { .. } => RelaxMode::OneParam,
            RelaxParams::TwoParam { .. } => RelaxMode::TwoParam,
            RelaxParams::Ska { .. } => RelaxMode::Ska,
        };
        out.write_record([
            r.id.to_string(),
            r.model.cf.kind().to_string(),
            relax.to_string(),
            params.join(";"),
            format!("{:.6e}", r.mse),
            r.near_lc_mse.map_or(String::new(), |x| format!("{x:.6e}")),
            r.lane_changes.to_string(),
            u8::from(r.merge).to_string(),
            u8::from(r.realistic_acc).to_string(),
            u8::from(r.clamped).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (0 for a single vehicle).
    pub stdev: f64,
}

impl GroupStats {
    /// `None` for an empty group.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let (mean, stdev) = crate::measurement::mean_stdev(values);
        Some(Self { n: values.len(), mean, median: median(values), stdev })
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Position MSE summaries by vehicle group, m².
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub all: Option<GroupStats>,
    /// Near-LC MSE of vehicles with at least one leader change.
    pub near_lc: Option<GroupStats>,
    /// Vehicles with three or more leader changes.
    pub many_lc: Option<GroupStats>,
    pub merges: Option<GroupStats>,
    pub no_lc: Option<GroupStats>,
    /// Fraction of vehicles whose simulated accelerations stay within bounds.
    pub realistic_acc: f64,
}

pub fn metrics_report(results: &[VehicleResult]) -> MetricsReport {
    let pick = |f: &dyn Fn(&VehicleResult) -> Option<f64>| GroupStats::of(&results.iter().filter_map(f).collect::<Vec<_>>());
    let realistic = results.iter().filter(|r| r.realistic_acc).count();
    MetricsReport {
        all: pick(&|r| Some(r.mse)),
        near_lc: pick(&|r| if r.lane_changes > 0 { r.near_lc_mse } else { None }),
        many_lc: pick(&|r| (r.lane_changes >= 3).then_some(r.mse)),
        merges: pick(&|r| r.merge.then_some(r.mse)),
        no_lc: pick(&|r| (r.lane_changes == 0).then_some(r.mse)),
        realistic_acc: if results.is_empty() { f64::NAN } else { realistic as f64 / results.len() as f64 },
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "group      n      mean       median     stdev")?;
        let rows = [("all", self.all), ("near_lc", self.near_lc), ("many_lc", self.many_lc), ("merges", self.merges), ("no_lc", self.no_lc)];
        for (name, g) in rows {
            match g {
                Some(g) => writeln!(f, "{name:<10} {:<6} {:<10.4} {:<10.4} {:.4}", g.n, g.mean, g.median, g.stdev)?,
                None => writeln!(f, "{name:<10} -")?,
            }
        }
        write!(f, "realistic_acc {:.3}", self.realistic_acc)
    }
}
