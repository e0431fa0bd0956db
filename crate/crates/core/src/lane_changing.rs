//! Gap acceptance, MOBIL-style discretionary incentive, mandatory merging and the
//! tactical/cooperation adjustments.
//!
//! Every acceleration evaluated here goes through [`CfEnv::accel`], which applies the
//! evaluated vehicle's current relaxation state to the hypothetical vehicle order.

use rand::Rng;

use crate::cf_models::{CfInput, CfParams};
use crate::error::{Error, Result};
use crate::relaxation::{apply_relaxation, RelaxationConfig, RelaxationState};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LcParams<T> {
    /// Safety threshold at maximum speed, m/s².
    pub d1: T,
    /// Safety threshold at standstill, m/s².
    pub d2: T,
    /// Incentive threshold, m/s².
    pub d3: T,
    /// Politeness.
    pub d4: T,
    /// Left bias, m/s².
    pub d5: T,
    /// Right bias, m/s².
    pub d6: T,
    /// Per-step probability of evaluating a discretionary change.
    pub d7: T,
    /// Steps of continuous evaluation once activated.
    pub d8: u32,
    /// Cooldown steps after a completed discretionary change.
    pub d9: u32,
    /// Probability that a discretionary cooperation request is accepted.
    pub a1: T,
    /// Tactical acceleration, m/s².
    pub a2: T,
    /// Tactical/cooperative deceleration, m/s².
    pub a3: T,
}

impl<T: Scalar> Default for LcParams<T> {
    fn default() -> Self {
        Self {
            d1: T::lit(-8.0),
            d2: T::lit(-20.0),
            d3: T::lit(0.6),
            d4: T::lit(0.1),
            d5: T::zero(),
            d6: T::lit(0.2),
            d7: T::lit(0.1),
            d8: 20,
            d9: 20,
            a1: T::lit(0.2),
            a2: T::lit(2.0),
            a3: T::lit(-2.0),
        }
    }
}

impl<T: Scalar> LcParams<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: T| x >= T::zero() && x <= T::one();
        let bad = |reason: &str| Err(Error::InvalidParams { model: "lane changing", reason: reason.into() });
        if !unit(self.d7) || !unit(self.a1) {
            return bad("d7 and a1 must lie in [0, 1]");
        }
        if !(self.a2 > T::zero() && self.a3 < T::zero()) {
            return bad("need a2 > 0 > a3");
        }
        let all = [self.d1, self.d2, self.d3, self.d4, self.d5, self.d6];
        if all.iter().any(|x| !x.is_finite()) {
            return bad("non-finite threshold");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LcMode {
    #[default]
    Idle,
    Activated {
        steps_left: u32,
    },
    Mandatory,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LcState<T> {
    pub mode: LcMode,
    pub cooldown: u32,
    /// Vehicle currently asked to open a gap for this one.
    pub cooperating_with: Option<usize>,
    /// Tactical adjustment added to this vehicle's acceleration, m/s².
    pub tactical: T,
}

impl<T: Scalar> LcState<T> {
    pub fn new() -> Self {
        Self { mode: LcMode::Idle, cooldown: 0, cooperating_with: None, tactical: T::zero() }
    }

    pub fn mandatory() -> Self {
        Self { mode: LcMode::Mandatory, ..Self::new() }
    }

    pub fn clear_tactical(&mut self) {
        self.cooperating_with = None;
        self.tactical = T::zero();
    }

    /// Resets after a completed change; discretionary vehicles start their cooldown.
    pub fn on_change(&mut self, p: &LcParams<T>, discretionary: bool) {
        self.clear_tactical();
        self.mode = LcMode::Idle;
        self.cooldown = if discretionary { p.d9 } else { 0 };
    }
}

/// What the lane-changing model needs to know about one vehicle.
#[derive(Clone, Copy, Debug)]
pub struct VehicleView<'a, T> {
    pub id: usize,
    /// Front bumper, m.
    pub pos: T,
    pub speed: T,
    pub length: T,
    pub params: &'a CfParams<T>,
    pub relax: &'a RelaxationState<T>,
}

/// Shared context for car-following evaluations inside the lane-changing model.
#[derive(Clone, Copy, Debug)]
pub struct CfEnv<'a, T> {
    pub t: T,
    pub dt: T,
    pub relax: Option<&'a RelaxationConfig<T>>,
}

impl<T: Scalar> CfEnv<'_, T> {
    /// `h(follower, leader)`: the follower's acceleration with `leader` in front, or the free
    /// boundary when there is none. Overlapping vehicles give `-inf`.
    pub fn accel(&self, follower: &VehicleView<'_, T>, leader: Option<&VehicleView<'_, T>>) -> T {
        let Some(l) = leader else {
            return follower.params.free_response(follower.speed).as_acceleration(follower.speed, self.dt);
        };
        let gap = l.pos - l.length - follower.pos;
        if !(gap > T::zero()) {
            return T::neg_infinity();
        }
        let mut input = CfInput::new(gap, follower.speed, l.speed);
        if let Some(cfg) = self.relax {
            input = apply_relaxation(input, follower.relax, self.t, cfg, follower.params.jam_spacing());
        }
        match follower.params.response(input) {
            Ok(r) => r.as_acceleration(follower.speed, self.dt),
            Err(_) => T::neg_infinity(),
        }
    }
}

/// `d1 v/v_max + d2 (1 - v/v_max)`, with `v/v_max` clamped to `[0, 1]`. Models without a
/// maximum speed use the `d1` end.
pub fn safety_threshold<T: Scalar>(v: T, v_max: Option<T>, p: &LcParams<T>) -> T {
    let frac = match v_max {
        Some(m) if m > T::zero() => (v / m).max(T::zero()).min(T::one()),
        _ => T::one(),
    };
    p.d1 * frac + p.d2 * (T::one() - frac)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SafetyCheck<T> {
    pub ego_accel: T,
    pub ego_threshold: T,
    /// `None` when there is no side follower.
    pub follower_accel: Option<T>,
    pub follower_threshold: T,
}

impl<T: Scalar> SafetyCheck<T> {
    pub fn ego_safe(&self) -> bool {
        self.ego_accel > self.ego_threshold
    }

    pub fn follower_safe(&self) -> bool {
        self.follower_accel.map_or(true, |a| a > self.follower_threshold)
    }

    pub fn safe(&self) -> bool {
        self.ego_safe() && self.follower_safe()
    }
}

/// Safety of moving `ego` between `side_leader` and `side_follower`.
pub fn check_safety<T: Scalar>(
    ego: &VehicleView<'_, T>,
    side_leader: Option<&VehicleView<'_, T>>,
    side_follower: Option<&VehicleView<'_, T>>,
    env: &CfEnv<'_, T>,
    p: &LcParams<T>,
) -> SafetyCheck<T> {
    let ego_accel = env.accel(ego, side_leader);
    let ego_threshold = safety_threshold(ego.speed, ego.params.max_speed(), p);
    let (follower_accel, follower_threshold) = match side_follower {
        Some(f) => (Some(env.accel(f, Some(ego))), safety_threshold(f.speed, f.params.max_speed(), p)),
        None => (None, p.d1),
    };
    SafetyCheck { ego_accel, ego_threshold, follower_accel, follower_threshold }
}

/// The ego vehicle's neighbours in its own lane and on the side being evaluated.
#[derive(Clone, Copy, Debug)]
pub struct Neighborhood<'a, T> {
    pub ego: VehicleView<'a, T>,
    pub leader: Option<VehicleView<'a, T>>,
    pub follower: Option<VehicleView<'a, T>>,
    pub side_leader: Option<VehicleView<'a, T>>,
    pub side_follower: Option<VehicleView<'a, T>>,
}

/// Left-hand side of the incentive inequality (including the side bias).
pub fn mobil_gain<T: Scalar>(n: &Neighborhood<'_, T>, side: Side, env: &CfEnv<'_, T>, p: &LcParams<T>) -> T {
    let ego_gain = env.accel(&n.ego, n.side_leader.as_ref()) - env.accel(&n.ego, n.leader.as_ref());
    let old_follower = n
        .follower
        .map_or(T::zero(), |f| env.accel(&f, n.leader.as_ref()) - env.accel(&f, Some(&n.ego)));
    let new_follower = n
        .side_follower
        .map_or(T::zero(), |f| env.accel(&f, Some(&n.ego)) - env.accel(&f, n.side_leader.as_ref()));
    let bias = match side {
        Side::Left => p.d5,
        Side::Right => p.d6,
    };
    ego_gain + p.d4 * (old_follower + new_follower) + bias
}

pub fn mobil_incentive<T: Scalar>(n: &Neighborhood<'_, T>, side: Side, env: &CfEnv<'_, T>, p: &LcParams<T>) -> bool {
    mobil_gain(n, side, env, p) > p.d3
}

/// Result of evaluating one side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SideEval<T> {
    pub incentive: bool,
    pub safety: SafetyCheck<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LcDecision<T> {
    Stay,
    Change(Side),
    /// Wants `side` but it is unsafe; tactical/cooperation applies.
    Tactical { side: Side, safety: SafetyCheck<T> },
}

/// One step of the discretionary model.
///
/// `eval` is called for each side that exists (left first); it returns `None` when there is
/// no lane on that side. At most one change is returned.
pub fn discretionary_step<T, R, F>(state: &mut LcState<T>, rng: &mut R, p: &LcParams<T>, mut eval: F) -> LcDecision<T>
where
    T: Scalar,
    R: Rng + ?Sized,
    F: FnMut(Side) -> Option<SideEval<T>>,
{
    if state.cooldown > 0 {
        state.cooldown -= 1;
        return LcDecision::Stay;
    }
    match state.mode {
        LcMode::Activated { steps_left } => {
            state.mode = if steps_left > 1 { LcMode::Activated { steps_left: steps_left - 1 } } else { LcMode::Idle };
        }
        LcMode::Idle => {
            if rng.gen::<f64>() >= p.d7.to_f64_lossy() {
                return LcDecision::Stay;
            }
        }
        LcMode::Mandatory => return LcDecision::Stay,
    }
    let mut wanted = None;
    for side in Side::BOTH {
        let Some(ev) = eval(side) else { continue };
        if !ev.incentive {
            continue;
        }
        if ev.safety.safe() {
            return LcDecision::Change(side);
        }
        if wanted.is_none() {
            wanted = Some((side, ev.safety));
        }
    }
    match wanted {
        Some((side, safety)) => {
            if state.mode == LcMode::Idle && p.d8 > 0 {
                state.mode = LcMode::Activated { steps_left: p.d8 };
            }
            LcDecision::Tactical { side, safety }
        }
        None => LcDecision::Stay,
    }
}

/// Mandatory merge toward `side`: change as soon as it is safe.
pub fn mandatory_step<T: Scalar>(side: Side, safety: SafetyCheck<T>) -> LcDecision<T> {
    if safety.safe() {
        LcDecision::Change(side)
    } else {
        LcDecision::Tactical { side, safety }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TacticalPlan<T> {
    pub ego_adjust: T,
    /// Cooperating vehicle id and the adjustment added to its acceleration.
    pub coop: Option<(usize, T)>,
}

/// Tactical and cooperative adjustments for an ego that wants a lane but failed safety.
///
/// The cooperating vehicle is the side follower, else its follower, provided its gap to the
/// ego exceeds its own jam spacing. An ongoing cooperation (`existing`) is kept without
/// re-sampling; a new discretionary request is accepted with probability `a1`.
pub fn tactical_cooperation<T, R>(
    ego: &VehicleView<'_, T>,
    side_follower: Option<&VehicleView<'_, T>>,
    side_follower_follower: Option<&VehicleView<'_, T>>,
    safety: &SafetyCheck<T>,
    mandatory: bool,
    existing: Option<usize>,
    rng: &mut R,
    p: &LcParams<T>,
) -> TacticalPlan<T>
where
    T: Scalar,
    R: Rng + ?Sized,
{
    if safety.follower_safe() {
        let ego_adjust = if safety.ego_safe() { T::zero() } else { p.a3 };
        return TacticalPlan { ego_adjust, coop: None };
    }
    let eligible = |v: &&VehicleView<'_, T>| ego.pos - ego.length - v.pos > v.params.jam_spacing();
    let candidate = side_follower.filter(eligible).or_else(|| side_follower_follower.filter(eligible));
    let coop = candidate.and_then(|c| {
        let accepted = mandatory || existing == Some(c.id) || rng.gen::<f64>() < p.a1.to_f64_lossy();
        accepted.then_some((c.id, p.a3))
    });
    TacticalPlan { ego_adjust: p.a2, coop }
}
