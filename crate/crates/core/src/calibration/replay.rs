use std::fmt;
use std::str::FromStr;

use super::dataset::{TrajectoryDataset, VehicleTrajectory};
use crate::cf_models::{ska_relaxed_time_headway, CfInput, ModelKind};
use crate::error::{Error, Result};
use crate::integrate::{advance, MIN_GAP};
use crate::relaxation::{apply_relaxation, register_leader_change, EgoState, LeaderState, PriorLeader};
use crate::{CfParams, RelaxationConfig, RelaxationState};

/// How lane changes are treated during replay.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelaxMode {
    None,
    /// One relaxation time for headway and speed.
    OneParam,
    /// Separate headway and speed relaxation times.
    TwoParam,
    /// IDM time headway drops to `min(c2, T0)` and relaxes back with time constant `tau`.
    Ska,
}

impl RelaxMode {
    pub fn name(self) -> &'static str {
        match self {
            RelaxMode::None => "none",
            RelaxMode::OneParam => "1p",
            RelaxMode::TwoParam => "2p",
            RelaxMode::Ska => "ska",
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            RelaxMode::None => 0,
            RelaxMode::OneParam => 1,
            RelaxMode::TwoParam | RelaxMode::Ska => 2,
        }
    }
}

impl fmt::Display for RelaxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelaxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "0" => Ok(RelaxMode::None),
            "1p" | "one" => Ok(RelaxMode::OneParam),
            "2p" | "two" => Ok(RelaxMode::TwoParam),
            "ska" => Ok(RelaxMode::Ska),
            other => Err(Error::InvalidArgument(format!("unknown relaxation mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RelaxParams {
    None,
    OneParam { c: f64 },
    TwoParam { c_s: f64, c_v: f64 },
    Ska { t0: f64, tau: f64 },
}

/// Car-following parameters plus the lane-change treatment, as calibrated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplayModel {
    pub cf: CfParams,
    pub relax: RelaxParams,
}

impl ReplayModel {
    /// Splits a flat parameter vector: model parameters first, then relaxation parameters.
    pub fn from_values(kind: ModelKind, mode: RelaxMode, values: &[f64]) -> Result<Self> {
        let n = kind.param_count();
        if values.len() != n + mode.param_count() {
            return Err(Error::InvalidArgument(format!(
                "{kind} with relaxation {mode} takes {} values, got {}",
                n + mode.param_count(),
                values.len()
            )));
        }
        let cf = CfParams::from_values(kind, &values[..n])?;
        let r = &values[n..];
        let relax = match mode {
            RelaxMode::None => RelaxParams::None,
            RelaxMode::OneParam => RelaxParams::OneParam { c: r[0] },
            RelaxMode::TwoParam => RelaxParams::TwoParam { c_s: r[0], c_v: r[1] },
            RelaxMode::Ska => {
                if kind != ModelKind::Idm {
                    return Err(Error::InvalidArgument("the SKA benchmark needs the IDM".into()));
                }
                RelaxParams::Ska { t0: r[0], tau: r[1] }
            }
        };
        if r.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParams { model: "relaxation", reason: "parameters must be positive".into() });
        }
        Ok(Self { cf, relax })
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v = self.cf.values();
        match self.relax {
            RelaxParams::None => {}
            RelaxParams::OneParam { c } => v.push(c),
            RelaxParams::TwoParam { c_s, c_v } => v.extend([c_s, c_v]),
            RelaxParams::Ska { t0, tau } => v.extend([t0, tau]),
        }
        v
    }

    fn relaxation_config(&self) -> Option<RelaxationConfig> {
        match self.relax {
            RelaxParams::OneParam { c } => Some(RelaxationConfig::new(c)),
            RelaxParams::TwoParam { c_s, c_v } => Some(RelaxationConfig::two_parameter(c_s, c_v)),
            RelaxParams::None | RelaxParams::Ska { .. } => None,
        }
    }
}

/// Simulated trajectory on the recorded frames.
#[derive(Clone, Debug, PartialEq)]
pub struct Replay {
    pub pos: Vec<f64>,
    pub speed: Vec<f64>,
    pub accel: Vec<f64>,
    /// The vehicle ran into its recorded leader and was held behind it at least once.
    pub clamped: bool,
}

fn leader_state(ds: &TrajectoryDataset, id: usize, t: f64) -> Option<LeaderState<f64>> {
    let l = ds.vehicle(id)?;
    let k = ds.frame_at(l, t)?;
    Some(LeaderState { pos: l.pos[k], speed: l.speed[k], length: l.length })
}

/// Old leader at `t`, extrapolated one frame when it has just left the record.
fn old_leader_state(ds: &TrajectoryDataset, id: usize, t: f64) -> Option<LeaderState<f64>> {
    leader_state(ds, id, t).or_else(|| {
        leader_state(ds, id, t - ds.dt).map(|l| LeaderState { pos: l.pos + l.speed * ds.dt, ..l })
    })
}

fn missing_leader(v: &VehicleTrajectory, leader: usize, t: f64) -> Error {
    Error::Dataset(format!("vehicle {}: leader {leader} not recorded at t = {t}", v.id))
}

/// Replays vehicle `id` behind its recorded leaders from its recorded initial state.
///
/// Leader switches create relaxation events with `t_lc` at the last frame with the old
/// leader; switches from no leader use the merge rule.
pub fn replay_simulate(ds: &TrajectoryDataset, id: usize, model: &ReplayModel) -> Result<Replay> {
    let v = ds.vehicle(id).ok_or_else(|| Error::Dataset(format!("no vehicle {id}")))?;
    let n = v.len();
    if n == 0 {
        return Err(Error::Dataset(format!("vehicle {id} has no frames")));
    }
    let dt = ds.dt;
    let relax_cfg = model.relaxation_config();
    let jam = model.cf.jam_spacing();
    let mut cf = model.cf;
    let ska = match (model.relax, &model.cf) {
        (RelaxParams::Ska { t0, tau }, CfParams::Idm(p)) => Some((t0, tau, p.time_headway)),
        _ => None,
    };
    let mut ska_headway: Option<f64> = None;
    let mut state = RelaxationState::new();
    let mut out = Replay { pos: vec![v.pos[0]], speed: vec![v.speed[0]], accel: Vec::with_capacity(n), clamped: false };
    let (mut x, mut s) = (v.pos[0], v.speed[0]);

    for k in 0..n - 1 {
        let t = ds.time(v, k);
        let leader = match v.leader[k] {
            Some(l) => Some(leader_state(ds, l, t).ok_or_else(|| missing_leader(v, l, t))?),
            None => None,
        };
        if k > 0 && v.leader[k] != v.leader[k - 1] {
            if let Some(new) = leader {
                if let Some(cfg) = &relax_cfg {
                    let prior = v.leader[k - 1]
                        .and_then(|o| old_leader_state(ds, o, t))
                        .map_or(PriorLeader::Merge, PriorLeader::Vehicle);
                    register_leader_change(&mut state, &EgoState { pos: x, speed: s }, prior, &new, t - dt, cfg, &cf)?;
                }
                if let Some((t0, _, c2)) = ska {
                    ska_headway = Some(c2.min(t0));
                }
            }
        }
        if let (Some(th), Some((_, tau, c2)), CfParams::Idm(p)) = (ska_headway, ska, &mut cf) {
            p.time_headway = th;
            ska_headway = Some(ska_relaxed_time_headway(th, c2, tau, dt));
        }
        let response = match leader {
            None => cf.free_response(s),
            Some(l) => {
                let mut input = CfInput::new((l.pos - l.length - x).max(MIN_GAP), s, l.speed);
                if let Some(cfg) = &relax_cfg {
                    state.prune(t);
                    input = apply_relaxation(input, &state, t, cfg, jam);
                    input.headway = input.headway.max(MIN_GAP);
                }
                cf.response(input)?
            }
        };
        let step = advance(x, s, response, 0.0, dt);
        x = step.pos;
        s = step.speed;
        if let Some(l) = v.leader[k + 1].and_then(|l| leader_state(ds, l, t + dt)) {
            if v.leader[k + 1] == v.leader[k] && x > l.pos - l.length {
                x = l.pos - l.length;
                s = s.min(l.speed);
                out.clamped = true;
            }
        }
        out.accel.push(step.accel);
        out.pos.push(x);
        out.speed.push(s);
    }
    out.accel.push(out.accel.last().copied().unwrap_or(0.0));
    Ok(out)
}

/// Mean squared position error, m².
pub fn mse_position(simulated: &[f64], recorded: &[f64]) -> Result<f64> {
    if simulated.len() != recorded.len() {
        return Err(Error::LengthMismatch { left: simulated.len(), right: recorded.len() });
    }
    if simulated.is_empty() {
        return Err(Error::InsufficientData("empty trajectory".into()));
    }
    let sum: f64 = simulated.iter().zip(recorded).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(sum / simulated.len() as f64)
}

/// Central differences inside, one-sided at the ends.
pub fn finite_difference(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|k| match k {
                0 => (x[1] - x[0]) / dt,
                k if k == n - 1 => (x[n - 1] - x[n - 2]) / dt,
                k => (x[k + 1] - x[k - 1]) / (2.0 * dt),
            })
            .collect(),
    }
}

/// Whether every simulated acceleration lies inside
/// `[min(-6, 1.1 min obs), max(4, 1.1 max obs)]`, with observed accelerations taken from the
/// recorded speeds.
pub fn realistic_acceleration(simulated_accel: &[f64], recorded_speed: &[f64], dt: f64) -> bool {
    let obs = finite_difference(recorded_speed, dt);
    let lo_obs = obs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_obs = obs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = (-6.0f64).min(1.1 * lo_obs);
    let hi = 4.0f64.max(1.1 * hi_obs);
    simulated_accel.iter().all(|&a| a >= lo && a <= hi)
}
