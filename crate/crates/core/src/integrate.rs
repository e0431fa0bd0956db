//! Fixed-step vehicle update shared by the engine, trajectory replay and the analysis tools.

use crate::cf_models::CfResponse;
use crate::scalar::Scalar;

/// Smallest headway handed to a car-following model, m.
pub const MIN_GAP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome<T> {
    pub pos: T,
    pub speed: T,
    /// Effective acceleration over the step.
    pub accel: T,
}

/// Advances one vehicle by `dt`.
///
/// Accelerations integrate ballistically (`x += v dt + a dt²/2`, `v += a dt`) with the vehicle
/// stopping instead of reversing. Speed commands from first-order models are held for the
/// whole step; `extra_accel` (tactical/cooperative adjustments) is added to either form.
pub fn advance<T: Scalar>(pos: T, speed: T, response: CfResponse<T>, extra_accel: T, dt: T) -> StepOutcome<T> {
    let half = T::lit(0.5);
    match response {
        CfResponse::Acceleration(a) => {
            let a = a + extra_accel;
            let next = speed + a * dt;
            if next < T::zero() {
                // stops within the step
                let travel = if a < T::zero() { -speed * speed / (a + a) } else { T::zero() };
                StepOutcome { pos: pos + travel, speed: T::zero(), accel: -speed / dt }
            } else {
                StepOutcome { pos: pos + speed * dt + half * a * dt * dt, speed: next, accel: a }
            }
        }
        CfResponse::Speed(cmd) => {
            let v = (cmd + extra_accel * dt).max(T::zero());
            StepOutcome { pos: pos + v * dt, speed: v, accel: (v - speed) / dt }
        }
    }
}
