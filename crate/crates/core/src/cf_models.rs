//! Car-following models.
//!
//! Every model is a pure function of a [`CfInput`] (headway, own speed, leader speed) and
//! its parameter block. Second-order models return an acceleration, first-order models
//! (Newell and its linear form) return a speed command; see [`CfResponse`]. Relaxation works
//! by rewriting the `CfInput` before it reaches these functions, so nothing here knows about
//! lane changes.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{bisect, Scalar};

/// Upper bracket for equilibrium root finding, metres.
pub const EQUILIBRIUM_SEARCH_MAX: f64 = 1.0e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Idm,
    Ovm,
    Newell,
    LinearNewell,
    LinearSecondOrder,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Idm => "idm",
            ModelKind::Ovm => "ovm",
            ModelKind::Newell => "newell",
            ModelKind::LinearNewell => "linear_newell",
            ModelKind::LinearSecondOrder => "linear_second_order",
        }
    }

    /// Number of entries in the ordered parameter list.
    pub fn param_count(self) -> usize {
        match self {
            ModelKind::Idm | ModelKind::Ovm => 5,
            ModelKind::Newell => 3,
            ModelKind::LinearNewell => 2,
            ModelKind::LinearSecondOrder => 4,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "idm" => Ok(ModelKind::Idm),
            "ovm" => Ok(ModelKind::Ovm),
            "newell" => Ok(ModelKind::Newell),
            "linear_newell" | "linearnewell" => Ok(ModelKind::LinearNewell),
            "linear_second_order" | "linearsecondorder" => Ok(ModelKind::LinearSecondOrder),
            other => Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        }
    }
}

/// Inputs to a car-following model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CfInput<T> {
    /// Front bumper to leader rear bumper, m.
    pub headway: T,
    pub speed: T,
    pub leader_speed: T,
}

impl<T: Scalar> CfInput<T> {
    pub fn new(headway: T, speed: T, leader_speed: T) -> Self {
        Self { headway, speed, leader_speed }
    }

    fn check_finite(&self) -> Result<()> {
        if !self.headway.is_finite() {
            return Err(Error::NonFinite { what: "headway" });
        }
        if !self.speed.is_finite() {
            return Err(Error::NonFinite { what: "speed" });
        }
        if !self.leader_speed.is_finite() {
            return Err(Error::NonFinite { what: "leader speed" });
        }
        Ok(())
    }
}

/// What a model produces for one input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CfResponse<T> {
    /// Second-order models, m/s².
    Acceleration(T),
    /// First-order models: speed to hold over the next step, m/s.
    Speed(T),
}

impl<T: Scalar> CfResponse<T> {
    /// Acceleration-equivalent of the response for a vehicle at `speed` over a step `dt`.
    pub fn as_acceleration(self, speed: T, dt: T) -> T {
        match self {
            CfResponse::Acceleration(a) => a,
            CfResponse::Speed(v) => (v.max(T::zero()) - speed) / dt,
        }
    }
}

/// Intelligent driver model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Idm<T> {
    /// c1, m/s
    pub max_speed: T,
    /// c2, s
    pub time_headway: T,
    /// c3, m
    pub jam_spacing: T,
    /// c4, m/s²
    pub max_accel: T,
    /// c5, m/s²
    pub comfort_decel: T,
}

/// Optimal velocity model, `a = c4 (V(s) - v)` with
/// `V(s) = c1 [tanh(c2 s - c3 - c5) - tanh(-c3)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ovm<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
    pub c4: T,
    pub c5: T,
}

/// Newell's simplified model, `x(t + τ) = min(x + v_f τ, x_lead - l_lead - δ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Newell<T> {
    /// δ, m
    pub space_shift: T,
    /// τ, s
    pub time_shift: T,
    /// v_f, m/s
    pub free_speed: T,
}

/// `v = β1 (s - β2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearNewell<T> {
    pub beta1: T,
    pub beta2: T,
}

/// `a = β1 s + β2 v + β3 v_lead + β4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSecondOrder<T> {
    pub beta1: T,
    pub beta2: T,
    pub beta3: T,
    pub beta4: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CfParams<T> {
    Idm(Idm<T>),
    Ovm(Ovm<T>),
    Newell(Newell<T>),
    LinearNewell(LinearNewell<T>),
    LinearSecondOrder(LinearSecondOrder<T>),
}

pub fn idm_accel<T: Scalar>(input: CfInput<T>, p: &Idm<T>) -> Result<T> {
    input.check_finite()?;
    let CfInput { headway: s, speed: v, leader_speed: vl } = input;
    let two = T::lit(2.0);
    let s_star =
        p.jam_spacing + p.time_headway * v + v * (v - vl) / (two * (p.max_accel * p.comfort_decel).sqrt());
    Ok(p.max_accel * (T::one() - (v / p.max_speed).powi(4) - (s_star / s).powi(2)))
}

impl<T: Scalar> Ovm<T> {
    pub fn optimal_velocity(&self, s: T) -> T {
        self.c1 * ((self.c2 * s - self.c3 - self.c5).tanh() - (-self.c3).tanh())
    }

    pub fn max_speed(&self) -> T {
        self.c1 * (T::one() - (-self.c3).tanh())
    }
}

pub fn ovm_accel<T: Scalar>(input: CfInput<T>, p: &Ovm<T>) -> Result<T> {
    input.check_finite()?;
    Ok(p.c4 * (p.optimal_velocity(input.headway) - input.speed))
}

/// Position a Newell follower targets one time shift ahead.
pub fn newell_target_position<T: Scalar>(x: T, x_lead: T, l_lead: T, p: &Newell<T>) -> Result<T> {
    if !(x_lead - l_lead > x) {
        return Err(Error::Collision { gap: (x_lead - l_lead - x).to_f64_lossy() });
    }
    Ok((x + p.free_speed * p.time_shift).min(x_lead - l_lead - p.space_shift))
}

/// Speed command of the Newell model: the constant speed reaching the target in one τ.
pub fn newell_speed<T: Scalar>(input: CfInput<T>, p: &Newell<T>) -> Result<T> {
    input.check_finite()?;
    let target = newell_target_position(T::zero(), input.headway, T::zero(), p)?;
    Ok(target / p.time_shift)
}

pub fn linear_newell_rate<T: Scalar>(input: CfInput<T>, p: &LinearNewell<T>) -> T {
    p.beta1 * (input.headway - p.beta2)
}

pub fn linear_second_order_accel<T: Scalar>(input: CfInput<T>, p: &LinearSecondOrder<T>) -> T {
    p.beta1 * input.headway + p.beta2 * input.speed + p.beta3 * input.leader_speed + p.beta4
}

/// One Euler step of the SKA benchmark's relaxed time headway toward `c2`.
pub fn ska_relaxed_time_headway<T: Scalar>(t_star: T, c2: T, tau: T, dt: T) -> T {
    t_star + (c2 - t_star) * dt / tau
}

fn positive<T: Scalar>(model: &'static str, name: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams { model, reason: format!("{name} must be positive, got {v}") })
    }
}

impl<T: Scalar> CfParams<T> {
    /// IDM with the highway defaults `[35, 1.3, 2, 1.1, 1.5]`.
    pub fn default_idm() -> Self {
        CfParams::Idm(Idm {
            max_speed: T::lit(35.0),
            time_headway: T::lit(1.3),
            jam_spacing: T::lit(2.0),
            max_accel: T::lit(1.1),
            comfort_decel: T::lit(1.5),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            CfParams::Idm(_) => ModelKind::Idm,
            CfParams::Ovm(_) => ModelKind::Ovm,
            CfParams::Newell(_) => ModelKind::Newell,
            CfParams::LinearNewell(_) => ModelKind::LinearNewell,
            CfParams::LinearSecondOrder(_) => ModelKind::LinearSecondOrder,
        }
    }

    /// Builds a parameter block from its ordered value list and validates it.
    pub fn from_values(kind: ModelKind, values: &[T]) -> Result<Self> {
        if values.len() != kind.param_count() {
            return Err(Error::InvalidParams {
                model: kind.name(),
                reason: format!("expected {} values, got {}", kind.param_count(), values.len()),
            });
        }
        let v = values;
        let p = match kind {
            ModelKind::Idm => CfParams::Idm(Idm {
                max_speed: v[0],
                time_headway: v[1],
                jam_spacing: v[2],
                max_accel: v[3],
                comfort_decel: v[4],
            }),
            ModelKind::Ovm => CfParams::Ovm(Ovm { c1: v[0], c2: v[1], c3: v[2], c4: v[3], c5: v[4] }),
            ModelKind::Newell => {
                CfParams::Newell(Newell { space_shift: v[0], time_shift: v[1], free_speed: v[2] })
            }
            ModelKind::LinearNewell => CfParams::LinearNewell(LinearNewell { beta1: v[0], beta2: v[1] }),
            ModelKind::LinearSecondOrder => CfParams::LinearSecondOrder(LinearSecondOrder {
                beta1: v[0],
                beta2: v[1],
                beta3: v[2],
                beta4: v[3],
            }),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn values(&self) -> Vec<T> {
        match *self {
            CfParams::Idm(p) => vec![p.max_speed, p.time_headway, p.jam_spacing, p.max_accel, p.comfort_decel],
            CfParams::Ovm(p) => vec![p.c1, p.c2, p.c3, p.c4, p.c5],
            CfParams::Newell(p) => vec![p.space_shift, p.time_shift, p.free_speed],
            CfParams::LinearNewell(p) => vec![p.beta1, p.beta2],
            CfParams::LinearSecondOrder(p) => vec![p.beta1, p.beta2, p.beta3, p.beta4],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let name = self.kind().name();
        match self {
            CfParams::Idm(p) => {
                positive(name, "max_speed", p.max_speed)?;
                positive(name, "time_headway", p.time_headway)?;
                positive(name, "jam_spacing", p.jam_spacing)?;
                positive(name, "max_accel", p.max_accel)?;
                positive(name, "comfort_decel", p.comfort_decel)
            }
            CfParams::Ovm(p) => {
                positive(name, "c1", p.c1)?;
                positive(name, "c2", p.c2)?;
                positive(name, "c4", p.c4)?;
                positive(name, "c5", p.c5)?;
                if p.c3.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParams { model: name, reason: "c3 must be finite".into() })
                }
            }
            CfParams::Newell(p) => {
                positive(name, "space_shift", p.space_shift)?;
                positive(name, "time_shift", p.time_shift)?;
                positive(name, "free_speed", p.free_speed)
            }
            CfParams::LinearNewell(p) => {
                positive(name, "beta1", p.beta1)?;
                positive(name, "beta2", p.beta2)
            }
            CfParams::LinearSecondOrder(p) => {
                if p.values_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParams { model: name, reason: "coefficients must be finite".into() })
                }
            }
        }
    }

    /// True for models whose output is a speed rather than an acceleration.
    pub fn is_first_order(&self) -> bool {
        matches!(self, CfParams::Newell(_) | CfParams::LinearNewell(_))
    }

    pub fn response(&self, input: CfInput<T>) -> Result<CfResponse<T>> {
        match self {
            CfParams::Idm(p) => idm_accel(input, p).map(CfResponse::Acceleration),
            CfParams::Ovm(p) => ovm_accel(input, p).map(CfResponse::Acceleration),
            CfParams::Newell(p) => newell_speed(input, p).map(CfResponse::Speed),
            CfParams::LinearNewell(p) => {
                input.check_finite()?;
                Ok(CfResponse::Speed(linear_newell_rate(input, p)))
            }
            CfParams::LinearSecondOrder(p) => {
                input.check_finite()?;
                Ok(CfResponse::Acceleration(linear_second_order_accel(input, p)))
            }
        }
    }

    /// Response with no leader: the limit of the model as the leader moves to infinity at
    /// maximum speed. Linear models have no maximum speed and hold their current speed.
    pub fn free_response(&self, speed: T) -> CfResponse<T> {
        match self {
            CfParams::Idm(p) => CfResponse::Acceleration(p.max_accel * (T::one() - (speed / p.max_speed).powi(4))),
            CfParams::Ovm(p) => CfResponse::Acceleration(p.c4 * (p.max_speed() - speed)),
            CfParams::Newell(p) => CfResponse::Speed(p.free_speed),
            CfParams::LinearNewell(_) => CfResponse::Speed(speed),
            CfParams::LinearSecondOrder(_) => CfResponse::Acceleration(T::zero()),
        }
    }

    /// Headway at which the equilibrium speed is zero.
    pub fn jam_spacing(&self) -> T {
        match self {
            CfParams::Idm(p) => p.jam_spacing,
            CfParams::Ovm(p) => p.c5 / p.c2,
            CfParams::Newell(p) => p.space_shift,
            CfParams::LinearNewell(p) => p.beta2,
            CfParams::LinearSecondOrder(p) => -p.beta4 / p.beta1,
        }
    }

    /// Maximum speed, if the model has one.
    pub fn max_speed(&self) -> Option<T> {
        match self {
            CfParams::Idm(p) => Some(p.max_speed),
            CfParams::Ovm(p) => Some(p.max_speed()),
            CfParams::Newell(p) => Some(p.free_speed),
            CfParams::LinearNewell(_) | CfParams::LinearSecondOrder(_) => None,
        }
    }

    /// Equilibrium headway for speed `v` (closed forms).
    pub fn equilibrium_headway(&self, v: T) -> Result<T> {
        if !v.is_finite() {
            return Err(Error::NonFinite { what: "speed" });
        }
        let v = v.max(T::zero());
        let no_eql = |max: T| Error::NoEquilibrium { speed: v.to_f64_lossy(), max_speed: max.to_f64_lossy() };
        match self {
            CfParams::Idm(p) => {
                if v >= p.max_speed {
                    return Err(no_eql(p.max_speed));
                }
                let denom = (T::one() - (v / p.max_speed).powi(4)).sqrt();
                Ok((p.jam_spacing + p.time_headway * v) / denom)
            }
            CfParams::Ovm(p) => {
                let arg = v / p.c1 - p.c3.tanh();
                if arg >= T::one() {
                    return Err(no_eql(p.max_speed()));
                }
                Ok((arg.atanh() + p.c3 + p.c5) / p.c2)
            }
            CfParams::Newell(p) => {
                if v > p.free_speed {
                    return Err(no_eql(p.free_speed));
                }
                Ok(p.space_shift + v * p.time_shift)
            }
            CfParams::LinearNewell(p) => Ok(p.beta2 + v / p.beta1),
            CfParams::LinearSecondOrder(p) => {
                Ok(-((p.beta2 + p.beta3) * v + p.beta4) / p.beta1)
            }
        }
    }

    /// Equilibrium speed for headway `s`; zero at or below jam spacing.
    pub fn equilibrium_speed(&self, s: T) -> T {
        if !(s > self.jam_spacing()) {
            return T::zero();
        }
        match self {
            CfParams::Idm(p) => {
                let f = |v: T| {
                    idm_accel(CfInput::new(s, v, v), p).unwrap_or_else(|_| T::nan())
                };
                bisect(T::zero(), p.max_speed, T::zero(), f)
            }
            CfParams::Ovm(p) => p.optimal_velocity(s).max(T::zero()).min(p.max_speed()),
            CfParams::Newell(p) => ((s - p.space_shift) / p.time_shift).min(p.free_speed),
            CfParams::LinearNewell(p) => p.beta1 * (s - p.beta2),
            CfParams::LinearSecondOrder(p) => {
                let k = p.beta2 + p.beta3;
                if k >= T::zero() {
                    // no stable equilibrium branch
                    T::zero()
                } else {
                    (-(p.beta1 * s + p.beta4) / k).max(T::zero())
                }
            }
        }
    }

    /// Equilibrium headway by bisection on the steady-state residual over
    /// `[jam spacing, 1e6 m]`, to `|residual| < 1e-10`. Independent of the closed forms.
    pub fn equilibrium_headway_bisect(&self, v: T) -> Result<T> {
        if let Some(vmax) = self.max_speed() {
            if v >= vmax {
                return Err(Error::NoEquilibrium { speed: v.to_f64_lossy(), max_speed: vmax.to_f64_lossy() });
            }
        }
        let residual = |s: T| -> T {
            match self.response(CfInput::new(s, v, v)) {
                Ok(CfResponse::Acceleration(a)) => a,
                Ok(CfResponse::Speed(cmd)) => cmd - v,
                Err(_) => -T::one(),
            }
        };
        let lo = self.jam_spacing().max(T::lit(1e-9));
        let hi = T::lit(EQUILIBRIUM_SEARCH_MAX);
        Ok(bisect(lo, hi, T::lit(1e-10), residual))
    }
}

impl<T: Scalar> LinearSecondOrder<T> {
    fn values_finite(&self) -> bool {
        self.beta1.is_finite() && self.beta2.is_finite() && self.beta3.is_finite() && self.beta4.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn idm() -> CfParams<f64> {
        CfParams::default_idm()
    }

    fn idm_p() -> Idm<f64> {
        match idm() {
            CfParams::Idm(p) => p,
            _ => unreachable!(),
        }
    }

    #[test]
    fn idm_examples() {
        let p = idm_p();
        let a = idm_accel(CfInput::new(54.6, 29.0, 29.0), &p).unwrap();
        assert!(a.abs() < 0.01, "{a}");
        let a = idm_accel(CfInput::new(1e12, 0.0, 0.0), &p).unwrap();
        assert_abs_diff_eq!(a, 1.1, epsilon = 1e-9);
        // s* = 2 + 1.3*15 = 21.5; 1.1 * (1 - (15/35)^4 - (21.5/20)^2)
        let a = idm_accel(CfInput::new(20.0, 15.0, 15.0), &p).unwrap();
        assert_abs_diff_eq!(a, -0.208_297_037_692_628, epsilon = 1e-9);
    }

    #[test]
    fn idm_rejects_nan() {
        let err = idm_accel(CfInput::new(f64::NAN, 1.0, 1.0), &idm_p()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn ovm_examples() {
        let p: Ovm<f64> = Ovm { c1: 16.8, c2: 0.086, c3: 1.09, c4: 1.5, c5: 5.0 };
        for s in [3.0, 10.0, 40.0, 120.0] {
            let v = p.optimal_velocity(s);
            assert_abs_diff_eq!(ovm_accel(CfInput::new(s, v, 0.0), &p).unwrap(), 0.0, epsilon = 1e-12);
        }
        let jam = p.c5 / p.c2;
        assert_abs_diff_eq!(ovm_accel(CfInput::new(jam, 0.0, 0.0), &p).unwrap(), 0.0, epsilon = 1e-12);
        let far = ovm_accel(CfInput::new(1e9, 0.0, 0.0), &p).unwrap();
        assert_abs_diff_eq!(far, p.c4 * p.c1 * (1.0 - (-p.c3).tanh()), epsilon = 1e-9);
    }

    #[test]
    fn newell_examples() {
        let p = Newell { space_shift: 2.0, time_shift: 1.0, free_speed: 10.0 };
        assert_abs_diff_eq!(newell_target_position(0.0, 500.0, 5.0, &p).unwrap(), 10.0);
        assert_abs_diff_eq!(newell_target_position(0.0, 10.0, 5.0, &p).unwrap(), 3.0);
        // both branches equal: x_lead - l - δ = v_f τ
        assert_abs_diff_eq!(newell_target_position(0.0, 17.0, 5.0, &p).unwrap(), 10.0);
        assert!(matches!(newell_target_position(0.0, 5.0, 5.0, &p), Err(Error::Collision { .. })));
    }

    #[test]
    fn linear_examples() {
        let ln = LinearNewell { beta1: 2.0 / 3.0, beta2: 2.0 };
        assert_eq!(linear_newell_rate(CfInput::new(2.0, 0.0, 0.0), &ln), 0.0);
        assert_abs_diff_eq!(linear_newell_rate(CfInput::new(32.0, 0.0, 0.0), &ln), 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(linear_newell_rate(CfInput::new(49.0, 0.0, 0.0), &ln), 31.333_333_333_333, epsilon = 1e-9);

        let l2 = LinearSecondOrder { beta1: 0.06, beta2: -0.55, beta3: 0.45, beta4: 0.14 };
        let p = CfParams::LinearSecondOrder(l2);
        let s_eq = p.equilibrium_headway(20.0).unwrap();
        assert_abs_diff_eq!(linear_second_order_accel(CfInput::new(s_eq, 20.0, 20.0), &l2), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            linear_second_order_accel(CfInput::new(s_eq + 17.0, 20.0, 20.0), &l2),
            1.02,
            epsilon = 1e-12
        );
        let zero = LinearSecondOrder { beta1: 0.0, beta2: 0.0, beta3: 0.0, beta4: 0.0 };
        assert_eq!(linear_second_order_accel(CfInput::new(3.0, 4.0, 5.0), &zero), 0.0);
    }

    #[test]
    fn equilibrium_examples() {
        let s = idm().equilibrium_headway(29.0).unwrap();
        assert_abs_diff_eq!(s, 54.600_400_044, epsilon = 1e-6);
        let ln = CfParams::LinearNewell(LinearNewell { beta1: 2.0 / 3.0, beta2: 2.0 });
        assert_abs_diff_eq!(ln.equilibrium_headway(20.0).unwrap(), 32.0, epsilon = 1e-12);
        assert_eq!(idm().equilibrium_headway(0.0).unwrap(), 2.0);
        assert_eq!(ln.equilibrium_headway(0.0).unwrap(), 2.0);
        let ovm = CfParams::Ovm(Ovm { c1: 16.8, c2: 0.086, c3: 1.09, c4: 1.5, c5: 5.0 });
        assert_abs_diff_eq!(ovm.equilibrium_headway(0.0).unwrap(), 5.0 / 0.086, epsilon = 1e-9);
        assert!(matches!(idm().equilibrium_headway(35.0), Err(Error::NoEquilibrium { .. })));
    }

    #[test]
    fn equilibrium_speed_examples() {
        let p = idm();
        assert_abs_diff_eq!(p.equilibrium_speed(54.600_400_044), 29.0, epsilon = 1e-8);
        assert_eq!(p.equilibrium_speed(2.0), 0.0);
        assert_eq!(p.equilibrium_speed(1.0), 0.0);
        let v = p.equilibrium_speed(1e6);
        assert!((35.0 - v) / 35.0 < 1e-3, "{v}");
    }

    #[test]
    fn bisection_matches_closed_forms() {
        let models = [
            idm(),
            CfParams::Ovm(Ovm { c1: 16.8, c2: 0.086, c3: 1.09, c4: 1.5, c5: 5.0 }),
            CfParams::Newell(Newell { space_shift: 5.0, time_shift: 1.2, free_speed: 30.0 }),
            CfParams::LinearNewell(LinearNewell { beta1: 2.0 / 3.0, beta2: 2.0 }),
        ];
        for p in models {
            for v in [0.5, 5.0, 12.0, 20.0, 25.0] {
                let closed = p.equilibrium_headway(v).unwrap();
                let root = p.equilibrium_headway_bisect(v).unwrap();
                assert!((closed - root).abs() < 1e-6 * closed.max(1.0), "{:?} v={v}: {closed} vs {root}", p.kind());
            }
        }
    }

    #[test]
    fn ska_examples() {
        assert_eq!(ska_relaxed_time_headway(1.3, 1.3, 10.0, 0.1), 1.3);
        assert_abs_diff_eq!(ska_relaxed_time_headway(0.5, 1.3, 10.0, 0.1), 0.508, epsilon = 1e-12);
        let mut t = 0.5;
        for _ in 0..2000 {
            let next = ska_relaxed_time_headway(t, 1.3, 10.0, 0.1);
            assert!(next >= t && next <= 1.3);
            t = next;
        }
        assert!((1.3 - t) < 1e-6);
    }

    #[test]
    fn values_roundtrip_and_validation() {
        let p = idm();
        assert_eq!(CfParams::from_values(ModelKind::Idm, &p.values()).unwrap(), p);
        assert!(CfParams::from_values(ModelKind::Idm, &[35.0, 1.3, -2.0, 1.1, 1.5]).is_err());
        assert!(CfParams::from_values(ModelKind::Newell, &[1.0, 2.0]).is_err());
        assert_eq!("IDM".parse::<ModelKind>().unwrap(), ModelKind::Idm);
        assert!("lstm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let p = CfParams::<f32>::default_idm();
        let s = p.equilibrium_headway(29.0).unwrap();
        assert!((s - 54.6).abs() < 1e-2);
        assert!((p.equilibrium_speed(s) - 29.0).abs() < 1e-2);
    }

    fn random_model() -> impl Strategy<Value = CfParams<f64>> {
        prop_oneof![
            (25.0..40.0, 0.5..2.5, 1.0..6.0, 0.5..3.0, 0.8..4.0).prop_map(|(a, b, c, d, e)| {
                CfParams::from_values(ModelKind::Idm, &[a, b, c, d, e]).unwrap()
            }),
            (8.0..20.0, 0.05..0.2, 0.5..1.5, 0.5..2.0, 2.0..10.0).prop_map(|(a, b, c, d, e)| {
                CfParams::from_values(ModelKind::Ovm, &[a, b, c, d, e]).unwrap()
            }),
            (1.0..8.0, 0.5..2.0, 20.0..40.0).prop_map(|(a, b, c)| {
                CfParams::from_values(ModelKind::Newell, &[a, b, c]).unwrap()
            }),
            (0.2..2.0, 1.0..8.0).prop_map(|(a, b)| CfParams::from_values(ModelKind::LinearNewell, &[a, b]).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 100, rng_seed: proptest::test_runner::RngSeed::Fixed(7), ..ProptestConfig::default() })]

        #[test]
        fn equilibrium_round_trip(p in random_model(), frac in 0.01f64..0.95) {
            let vmax = p.max_speed().unwrap_or(40.0);
            let v = frac * vmax;
            let s = p.equilibrium_headway(v).unwrap();
            let back = p.equilibrium_speed(s);
            prop_assert!((back - v).abs() <= 1e-6 * v, "{:?}: v={} back={}", p.kind(), v, back);
        }

        // The interaction term makes s* decrease with v when the leader is much faster
        // (v_lead > 2v + 2 c2 sqrt(c4 c5)) and s* itself can go negative; monotonicity holds elsewhere.
        #[test]
        fn idm_decreasing_in_own_speed(s in 1.0f64..200.0, vl_frac in 0.0f64..1.0, v in 0.0f64..34.0) {
            let p = idm_p();
            let vl_max = (2.0 * v + 2.0 * p.time_headway * (p.max_accel * p.comfort_decel).sqrt()).min(35.0);
            let vl = vl_frac * vl_max;
            let s_star = p.jam_spacing + p.time_headway * v + v * (v - vl) / (2.0 * (p.max_accel * p.comfort_decel).sqrt());
            prop_assume!(s_star >= 0.0);
            let h = 1e-4;
            let a0 = idm_accel(CfInput::new(s, v, vl), &p).unwrap();
            let a1 = idm_accel(CfInput::new(s, v + h, vl), &p).unwrap();
            prop_assert!(a1 < a0);
        }

        #[test]
        fn ovm_sign_matches_velocity_gap(s in 0.0f64..300.0, v in 0.0f64..35.0) {
            let p: Ovm<f64> = Ovm { c1: 16.8, c2: 0.086, c3: 1.09, c4: 1.5, c5: 5.0 };
            let a = ovm_accel(CfInput::new(s, v, 0.0), &p).unwrap();
            let gap = p.optimal_velocity(s) - v;
            prop_assert_eq!(a.signum(), gap.signum());
        }

        #[test]
        fn newell_never_past_leader(x in -100.0f64..100.0, gap in 0.01f64..200.0, l in 2.0f64..8.0) {
            let p = Newell { space_shift: 3.0, time_shift: 1.0, free_speed: 30.0 };
            let x_lead = x + gap + l;
            let target = newell_target_position(x, x_lead, l, &p).unwrap();
            prop_assert!(target <= x_lead - l - p.space_shift + 1e-12);
        }

        #[test]
        fn linear_models_superpose(
            a in proptest::array::uniform3(-50.0f64..50.0),
            b in proptest::array::uniform3(-50.0f64..50.0),
            k in -3.0f64..3.0,
        ) {
            let l2 = LinearSecondOrder { beta1: 0.06, beta2: -0.55, beta3: 0.45, beta4: 0.14 };
            let f = |x: [f64; 3]| linear_second_order_accel(CfInput::new(x[0], x[1], x[2]), &l2) - l2.beta4;
            let sum = [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]];
            prop_assert!((f(sum) - (f(a) + k * f(b))).abs() < 1e-12);

            let ln = LinearNewell { beta1: 2.0 / 3.0, beta2: 2.0 };
            let g = |s: f64| linear_newell_rate(CfInput::new(s, 0.0, 0.0), &ln) + ln.beta1 * ln.beta2;
            prop_assert!((g(a[0] + k * b[0]) - (g(a[0]) + k * g(b[0]))).abs() < 1e-12);
        }
    }
}
