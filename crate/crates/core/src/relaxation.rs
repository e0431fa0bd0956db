//! Lane-changing relaxation.
//!
//! When a vehicle's leader changes, the jump in headway and leader speed is recorded as a
//! pair of relaxation amounts `(γ_s, γ_v)`. For the next `c` seconds the car-following model
//! sees `headway + r(t) γ_s` and `leader_speed + r(t) γ_v`, with `r` decaying linearly from
//! 1 to 0. Model parameters are never touched, so any [`CfParams`] works unchanged.
//!
//! Several events can be active at once (a vehicle changing lanes twice in quick
//! succession); their contributions add.

use crate::cf_models::{CfInput, CfParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which relaxed input a factor applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Headway,
    Speed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxationEvent<T> {
    /// Last time the vehicle followed its old leader, s.
    pub t_lc: T,
    /// Headway relaxation duration, s.
    pub c_s: T,
    /// Speed relaxation duration, s.
    pub c_v: T,
    pub gamma_s: T,
    pub gamma_v: T,
}

impl<T: Scalar> RelaxationEvent<T> {
    /// Time after which the event contributes nothing.
    pub fn expires_at(&self) -> T {
        self.t_lc + self.c_s.max(self.c_v)
    }
}

/// `1 - (t - t_lc)/c` inside `(t_lc, t_lc + c)`, zero elsewhere.
pub fn relaxation_factor<T: Scalar>(t: T, ev: &RelaxationEvent<T>, which: Channel) -> T {
    let c = match which {
        Channel::Headway => ev.c_s,
        Channel::Speed => ev.c_v,
    };
    if t > ev.t_lc && t < ev.t_lc + c {
        T::one() - (t - ev.t_lc) / c
    } else {
        T::zero()
    }
}

/// Active relaxation events of one vehicle.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RelaxationState<T> {
    events: Vec<RelaxationEvent<T>>,
}

impl<T: Scalar> RelaxationState<T> {
    pub fn new() -> Self {
        Self { events: Vec::new() }
    }

    pub fn push(&mut self, ev: RelaxationEvent<T>) {
        self.events.push(ev);
    }

    pub fn events(&self) -> &[RelaxationEvent<T>] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn clear(&mut self) {
        self.events.clear();
    }

    /// Drops events that are zero for every time after `t`.
    pub fn prune(&mut self, t: T) {
        self.events.retain(|ev| ev.expires_at() > t);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RelaxationMode<T> {
    /// Relax both positive and negative amounts.
    BothSigns,
    /// Only amounts that are positive (the gap shrank / leader got slower) are relaxed.
    PositiveOnly,
    /// Separate durations for the headway and speed amounts.
    TwoParameter { c_s: T, c_v: T },
}

/// Attenuation of `r(t)` while closing in on a leader.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Safeguard<T> {
    /// s
    pub alpha: T,
    /// s
    pub beta: T,
    /// m
    pub eps: T,
}

impl<T: Scalar> Default for Safeguard<T> {
    fn default() -> Self {
        Self { alpha: T::lit(0.6), beta: T::lit(1.5), eps: T::lit(1e-6) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxationConfig<T> {
    /// Relaxation time, s.
    pub c: T,
    pub mode: RelaxationMode<T>,
    pub safeguard: Option<Safeguard<T>>,
}

impl<T: Scalar> RelaxationConfig<T> {
    pub fn new(c: T) -> Self {
        Self { c, mode: RelaxationMode::BothSigns, safeguard: Some(Safeguard::default()) }
    }

    pub fn positive_only(c: T) -> Self {
        Self { mode: RelaxationMode::PositiveOnly, ..Self::new(c) }
    }

    pub fn two_parameter(c_s: T, c_v: T) -> Self {
        Self { c: c_s, mode: RelaxationMode::TwoParameter { c_s, c_v }, safeguard: Some(Safeguard::default()) }
    }

    pub fn without_safeguard(mut self) -> Self {
        self.safeguard = None;
        self
    }

    /// `(c_s, c_v)` for new events.
    pub fn durations(&self) -> (T, T) {
        match self.mode {
            RelaxationMode::TwoParameter { c_s, c_v } => (c_s, c_v),
            _ => (self.c, self.c),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (c_s, c_v) = self.durations();
        if !(c_s > T::zero() && c_v > T::zero()) {
            return Err(Error::InvalidParams { model: "relaxation", reason: "durations must be positive".into() });
        }
        if let Some(sg) = self.safeguard {
            if !(sg.alpha >= T::zero() && sg.beta > T::zero() && sg.eps > T::zero()) {
                return Err(Error::InvalidParams {
                    model: "relaxation",
                    reason: "safeguard needs alpha >= 0, beta > 0, eps > 0".into(),
                });
            }
        }
        Ok(())
    }
}

/// A leader as seen at a leader change: front-bumper position, speed, length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeaderState<T> {
    pub pos: T,
    pub speed: T,
    pub length: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EgoState<T> {
    pub pos: T,
    pub speed: T,
}

fn headway<T: Scalar>(ego_pos: T, leader: &LeaderState<T>) -> T {
    leader.pos - leader.length - ego_pos
}

/// Relaxation amounts when switching from `old` to `new` leader.
pub fn gammas_on_leader_change<T: Scalar>(old: &LeaderState<T>, new: &LeaderState<T>, ego: &EgoState<T>) -> (T, T) {
    let gamma_s = headway(ego.pos, old) - headway(ego.pos, new);
    let gamma_v = old.speed - new.speed;
    (gamma_s, gamma_v)
}

/// Relaxation amounts for a vehicle that had no old leader (merging from a lane end):
/// the old headway is replaced by the equilibrium headway at the ego's speed.
pub fn gammas_on_merge<T: Scalar>(
    ego_speed: T,
    new_leader: &LeaderState<T>,
    ego_pos: T,
    p: &CfParams<T>,
) -> Result<(T, T)> {
    let mut v = ego_speed.max(T::zero());
    if let Some(vmax) = p.max_speed() {
        let cap = T::lit(0.99) * vmax;
        if v >= vmax {
            v = cap;
        }
    }
    let s_eql = p.equilibrium_headway(v)?;
    Ok((s_eql - headway(ego_pos, new_leader), ego_speed - new_leader.speed))
}

/// Scales `r` down while the ego closes in on a leader it is already near.
/// Only applies when `ego_speed > leader_speed`.
pub fn safeguard_factor<T: Scalar>(
    r: T,
    ego_speed: T,
    headway: T,
    leader_speed: T,
    jam_spacing: T,
    sg: &Safeguard<T>,
) -> T {
    let closing = ego_speed - leader_speed;
    if closing <= T::zero() {
        return r;
    }
    let z = (headway - jam_spacing - sg.alpha * ego_speed).max(sg.eps) / closing;
    if z > T::zero() && z < sg.beta {
        r * (z / sg.beta)
    } else {
        r
    }
}

/// Relaxed model input at time `t`.
///
/// The safeguard is evaluated against the raw input; both channels of an event share the
/// same safeguard multiplier.
pub fn apply_relaxation<T: Scalar>(
    input: CfInput<T>,
    state: &RelaxationState<T>,
    t: T,
    cfg: &RelaxationConfig<T>,
    jam_spacing: T,
) -> CfInput<T> {
    let positive_only = matches!(cfg.mode, RelaxationMode::PositiveOnly);
    let mut ds = T::zero();
    let mut dv = T::zero();
    for ev in state.events() {
        let r_s = relaxation_factor(t, ev, Channel::Headway);
        let r_v = relaxation_factor(t, ev, Channel::Speed);
        if r_s == T::zero() && r_v == T::zero() {
            continue;
        }
        let m = match &cfg.safeguard {
            Some(sg) => safeguard_factor(T::one(), input.speed, input.headway, input.leader_speed, jam_spacing, sg),
            None => T::one(),
        };
        if !positive_only || ev.gamma_s > T::zero() {
            ds += r_s * m * ev.gamma_s;
        }
        if !positive_only || ev.gamma_v > T::zero() {
            dv += r_v * m * ev.gamma_v;
        }
    }
    CfInput { headway: input.headway + ds, speed: input.speed, leader_speed: input.leader_speed + dv }
}

/// What the vehicle followed before the change.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PriorLeader<T> {
    Vehicle(LeaderState<T>),
    /// No old leader; amounts use the equilibrium headway at the ego's speed.
    Merge,
    /// No old leader and no merge context. Always an engine bug.
    Unknown,
}

/// Creates the relaxation event for a leader change and appends it to `state`.
pub fn register_leader_change<T: Scalar>(
    state: &mut RelaxationState<T>,
    ego: &EgoState<T>,
    prior: PriorLeader<T>,
    new_leader: &LeaderState<T>,
    t_lc: T,
    cfg: &RelaxationConfig<T>,
    params: &CfParams<T>,
) -> Result<RelaxationEvent<T>> {
    let (gamma_s, gamma_v) = match prior {
        PriorLeader::Vehicle(old) => gammas_on_leader_change(&old, new_leader, ego),
        PriorLeader::Merge => gammas_on_merge(ego.speed, new_leader, ego.pos, params)?,
        PriorLeader::Unknown => return Err(Error::MissingLeaderContext),
    };
    let (c_s, c_v) = cfg.durations();
    let ev = RelaxationEvent { t_lc, c_s, c_v, gamma_s, gamma_v };
    state.push(ev);
    Ok(ev)
}
