//! Closed-form relaxation results for the linear Newell model, plus numerical time to
//! equilibrium (TTE) and deceleration time (DT) estimates for arbitrary models.
//!
//! The closed forms double as oracles for the engine: a relaxed linear Newell follower
//! behind a constant-speed leader has a known speed profile.

use std::io::Write;

use crate::cf_models::{CfInput, CfParams, LinearNewell, LinearSecondOrder};
use crate::error::{Error, Result};
use crate::integrate::advance;
use crate::relaxation::{
    apply_relaxation, register_leader_change, EgoState, LeaderState, PriorLeader, RelaxationConfig, RelaxationState,
};
use crate::scalar::Scalar;

/// Speed of an unrelaxed linear Newell follower after its headway drops by `gamma_s` at
/// `t = 0` behind a leader at constant speed `v`.
pub fn newell_baseline_speed_profile<T: Scalar>(t: T, gamma_s: T, beta1: T, v: T) -> T {
    if t < T::zero() {
        return v;
    }
    v - gamma_s * beta1 * (-beta1 * t).exp()
}

/// Speed of a relaxed linear Newell follower (relaxation time `c`) in the same situation.
///
/// For `t >= c` the profile is `v - α1 exp(-β1 t)` with `α1 = (γ_s/c)(exp(β1 c) - 1)`, the
/// value that makes it continuous at `t = c`.
pub fn newell_relaxed_speed_profile<T: Scalar>(t: T, gamma_s: T, c: T, beta1: T, v: T) -> Result<T> {
    if !(c > T::zero()) {
        return Err(Error::InvalidArgument(format!("relaxation time must be positive, got {c}")));
    }
    if t < T::zero() {
        return Ok(v);
    }
    let k = gamma_s / c;
    if t < c {
        Ok(-(gamma_s - c * v) / c + k * (-beta1 * t).exp())
    } else {
        let alpha1 = k * ((beta1 * c).exp() - T::one());
        Ok(v - alpha1 * (-beta1 * t).exp())
    }
}

/// Time to come within `delta` of equilibrium speed for the linear Newell model.
/// Zero when the initial deviation is already inside the tolerance.
pub fn tte_closed_form<T: Scalar>(gamma_s: T, beta1: T, c: T, delta: T, relaxed: bool) -> T {
    let arg = if relaxed { gamma_s / (delta * c) } else { beta1 * gamma_s / delta };
    if !(arg > T::one()) {
        return T::zero();
    }
    let tail = arg.ln() / beta1;
    if relaxed {
        c + tail
    } else {
        tail
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TteDtReport<T> {
    /// s
    pub tte: T,
    /// s
    pub dt: T,
    /// Equilibrium speed tolerance used, m/s.
    pub delta: T,
}

/// Follower state right after it starts following a constant-speed leader.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TteScenario<T> {
    pub init_headway: T,
    pub init_speed: T,
    pub leader_speed: T,
}

impl<T: Scalar> TteScenario<T> {
    /// Merge in uncongested conditions: 15 m headway, 29 m/s for both vehicles.
    pub fn uncongested_merge() -> Self {
        Self { init_headway: T::lit(15.0), init_speed: T::lit(29.0), leader_speed: T::lit(29.0) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TteOptions<T> {
    /// Accelerations below `-decel_tolerance` count as decelerating, m/s².
    pub decel_tolerance: T,
    /// s
    pub horizon: T,
}

impl<T: Scalar> Default for TteOptions<T> {
    fn default() -> Self {
        Self { decel_tolerance: T::lit(1e-3), horizon: T::lit(600.0) }
    }
}

/// One sampled follower trajectory: speed held over each step and the step's acceleration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProfileSeries<T> {
    pub t: Vec<T>,
    pub speed: Vec<T>,
    pub accel: Vec<T>,
}

impl<T: Scalar> ProfileSeries<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// CSV with header `t,speed,accel`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "speed", "accel"])?;
        for i in 0..self.len() {
            out.write_record([
                self.t[i].to_f64_lossy().to_string(),
                self.speed[i].to_f64_lossy().to_string(),
                self.accel[i].to_f64_lossy().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Simulates a single follower behind a leader holding `leader_speed`.
///
/// The relaxation event (if any) is created with `t_lc = -dt`: the follower's last step with
/// its previous leader is the one before `t = 0`, so the first step here sees `r = 1 - dt/c`.
fn follow_constant_leader<T: Scalar>(
    p: &CfParams<T>,
    relax: Option<&RelaxationConfig<T>>,
    scenario: TteScenario<T>,
    prior: PriorLeader<T>,
    dt: T,
    horizon: T,
) -> Result<ProfileSeries<T>> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    let leader_len = T::zero();
    let mut ego_pos = T::zero();
    let mut ego_speed = scenario.init_speed;
    let mut leader_pos = scenario.init_headway + leader_len;
    let mut state = RelaxationState::new();
    if let Some(cfg) = relax {
        let new_leader = LeaderState { pos: leader_pos, speed: scenario.leader_speed, length: leader_len };
        let ego = EgoState { pos: ego_pos, speed: ego_speed };
        register_leader_change(&mut state, &ego, prior, &new_leader, -dt, cfg, p)?;
    }
    let jam = p.jam_spacing();
    let steps = (horizon / dt).ceil().to_usize().unwrap_or(0);
    let mut series = ProfileSeries { t: Vec::with_capacity(steps), speed: Vec::with_capacity(steps), accel: Vec::with_capacity(steps) };
    for k in 0..steps {
        let t = T::from_usize(k).unwrap() * dt;
        let raw = CfInput::new(leader_pos - leader_len - ego_pos, ego_speed, scenario.leader_speed);
        let input = match relax {
            Some(cfg) => apply_relaxation(raw, &state, t, cfg, jam),
            None => raw,
        };
        let response = p.response(input)?;
        let out = advance(ego_pos, ego_speed, response, T::zero(), dt);
        let held = if p.is_first_order() { out.speed } else { ego_speed };
        series.t.push(t);
        series.speed.push(held);
        series.accel.push(out.accel);
        ego_pos = out.pos;
        ego_speed = out.speed;
        leader_pos += scenario.leader_speed * dt;
    }
    Ok(series)
}

/// TTE and DT for a follower starting in `scenario` with a fresh merge relaxation event
/// (none when `relax` is `None`).
///
/// TTE is the time after which the speed stays within `delta` of the leader speed for the
/// rest of the horizon; DT is the total time with acceleration below `-decel_tolerance`.
pub fn estimate_tte_dt<T: Scalar>(
    p: &CfParams<T>,
    relax: Option<&RelaxationConfig<T>>,
    scenario: TteScenario<T>,
    delta: T,
    dt: T,
    opts: TteOptions<T>,
) -> Result<TteDtReport<T>> {
    let series = follow_constant_leader(p, relax, scenario, PriorLeader::Merge, dt, opts.horizon)?;
    report_from_series(&series, scenario.leader_speed, delta, dt, opts)
}

fn report_from_series<T: Scalar>(
    series: &ProfileSeries<T>,
    v_eq: T,
    delta: T,
    dt: T,
    opts: TteOptions<T>,
) -> Result<TteDtReport<T>> {
    let last_out = series.speed.iter().rposition(|&v| (v - v_eq).abs() >= delta);
    let n = series.len();
    let tte = match last_out {
        None => T::zero(),
        Some(i) if i + 1 >= n => return Err(Error::NoConvergence { horizon: opts.horizon.to_f64_lossy() }),
        Some(i) => T::from_usize(i + 1).unwrap() * dt,
    };
    let decel_steps = series.accel.iter().filter(|&&a| a < -opts.decel_tolerance).count();
    Ok(TteDtReport { tte, dt: T::from_usize(decel_steps).unwrap() * dt, delta })
}

/// The `delta` for which the estimated TTE equals `target_tte` (bisection; TTE is
/// non-increasing in `delta`).
pub fn fit_delta_for_tte<T: Scalar>(
    p: &CfParams<T>,
    relax: Option<&RelaxationConfig<T>>,
    scenario: TteScenario<T>,
    target_tte: T,
    dt: T,
    opts: TteOptions<T>,
) -> Result<T> {
    let series = follow_constant_leader(p, relax, scenario, PriorLeader::Merge, dt, opts.horizon)?;
    let max_dev = series.speed.iter().map(|&v| (v - scenario.leader_speed).abs()).fold(T::zero(), T::max);
    let tte_at = |d: T| report_from_series(&series, scenario.leader_speed, d, dt, opts).map(|r| r.tte);
    let mut lo = T::lit(1e-6);
    let mut hi = max_dev + T::one();
    if tte_at(lo)? < target_tte {
        return Err(Error::InvalidArgument(format!("target TTE {target_tte} unreachable")));
    }
    for _ in 0..100 {
        let mid = (lo + hi) / T::lit(2.0);
        if tte_at(mid)? > target_tte {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// TTE/DT for each relaxation time; `0` means no relaxation.
pub fn tte_dt_table<T: Scalar>(
    p: &CfParams<T>,
    base: &RelaxationConfig<T>,
    scenario: TteScenario<T>,
    relax_times: &[T],
    delta: T,
    dt: T,
    opts: TteOptions<T>,
) -> Result<Vec<(T, TteDtReport<T>)>> {
    relax_times
        .iter()
        .map(|&c| {
            let cfg = RelaxationConfig { c, ..*base };
            let relax = if c > T::zero() { Some(&cfg) } else { None };
            estimate_tte_dt(p, relax, scenario, delta, dt, opts).map(|r| (c, r))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearModel {
    LinearNewell,
    LinearSecondOrder,
}

/// Parameters of the lane-change example for the linear models: leader speed 20 m/s,
/// follower at equilibrium before a leader change that cuts its headway by 17 m, `c = 15`.
pub struct LinearExample<T> {
    pub params: CfParams<T>,
    pub speed: T,
    pub gamma_s: T,
    pub c: T,
}

impl<T: Scalar> LinearExample<T> {
    pub fn new(model: LinearModel) -> Self {
        let params = match model {
            LinearModel::LinearNewell => CfParams::LinearNewell(LinearNewell { beta1: T::lit(2.0 / 3.0), beta2: T::lit(2.0) }),
            LinearModel::LinearSecondOrder => CfParams::LinearSecondOrder(LinearSecondOrder {
                beta1: T::lit(0.06),
                beta2: T::lit(-0.55),
                beta3: T::lit(0.45),
                beta4: T::lit(0.14),
            }),
        };
        Self { params, speed: T::lit(20.0), gamma_s: T::lit(17.0), c: T::lit(15.0) }
    }
}

/// Speed/acceleration series of the linear-model lane-change example.
pub fn fig5_profiles<T: Scalar>(model: LinearModel, relaxed: bool, dt: T, duration: T) -> Result<ProfileSeries<T>> {
    let ex = LinearExample::<T>::new(model);
    let s_old = ex.params.equilibrium_headway(ex.speed)?;
    let scenario = TteScenario { init_headway: s_old - ex.gamma_s, init_speed: ex.speed, leader_speed: ex.speed };
    let old = LeaderState { pos: s_old, speed: ex.speed, length: T::zero() };
    let cfg = RelaxationConfig::new(ex.c);
    let relax = if relaxed { Some(&cfg) } else { None };
    follow_constant_leader(&ex.params, relax, scenario, PriorLeader::Vehicle(old), dt, duration)
}

/// Equilibrium flow at speed `v`, veh/s; `length` is the vehicle length (headways are gaps).
pub fn equilibrium_flow<T: Scalar>(p: &CfParams<T>, v: T, length: T) -> Result<T> {
    Ok(v / (p.equilibrium_headway(v)? + length))
}

/// Speed of maximal equilibrium flow (golden-section search below the model's maximum speed).
pub fn max_flow_speed<T: Scalar>(p: &CfParams<T>, length: T) -> Result<T> {
    let vmax = p
        .max_speed()
        .ok_or_else(|| Error::InvalidArgument("model has no maximum speed, so the flow maximum is unbounded".into()))?;
    let flow = |v: T| equilibrium_flow(p, v, length).unwrap_or(T::zero());
    let r = T::lit(0.618_033_988_749_895);
    let (mut a, mut b) = (T::zero(), vmax * T::lit(1.0 - 1e-9));
    let (mut x1, mut x2) = (b - r * (b - a), a + r * (b - a));
    let (mut f1, mut f2) = (flow(x1), flow(x2));
    for _ in 0..200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = flow(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = flow(x1);
        }
    }
    Ok(T::lit(0.5) * (a + b))
}

/// `(speed, density veh/km, flow veh/hr)` on the equilibrium curve at `n` speeds below the
/// maximum (or up to `v_cap` for models without one).
pub fn equilibrium_fd_curve(p: &CfParams<f64>, length: f64, n: usize, v_cap: f64) -> Vec<(f64, f64, f64)> {
    let top = p.max_speed().unwrap_or(v_cap).min(v_cap);
    (0..n)
        .filter_map(|i| {
            let v = top * i as f64 / n as f64;
            let s = p.equilibrium_headway(v).ok()?;
            Some((v, 1000.0 / (s + length), 3600.0 * v / (s + length)))
        })
        .collect()
}
