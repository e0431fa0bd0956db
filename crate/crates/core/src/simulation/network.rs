use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mainline lanes `0..mainline_lanes` (0 is the leftmost), plus a single on-ramp lane with
/// index `mainline_lanes` running alongside the right lane from `onramp_start` to `merge_end`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoadNetwork {
    /// m
    pub length: f64,
    pub mainline_lanes: usize,
    /// m
    pub onramp_start: f64,
    /// m
    pub merge_start: f64,
    /// m
    pub merge_end: f64,
    /// Detector positions on the mainline, m.
    pub detectors: Vec<f64>,
}

impl Default for RoadNetwork {
    fn default() -> Self {
        Self {
            length: 3000.0,
            mainline_lanes: 2,
            onramp_start: 1500.0,
            merge_start: 1800.0,
            merge_end: 2100.0,
            detectors: vec![1400.0, 1950.0, 2800.0],
        }
    }
}

impl RoadNetwork {
    pub fn ramp_lane(&self) -> usize {
        self.mainline_lanes
    }

    pub fn right_lane(&self) -> usize {
        self.mainline_lanes - 1
    }

    pub fn lane_count(&self) -> usize {
        self.mainline_lanes + 1
    }

    pub fn is_ramp(&self, lane: usize) -> bool {
        lane == self.ramp_lane()
    }

    pub fn lane_start(&self, lane: usize) -> f64 {
        if self.is_ramp(lane) {
            self.onramp_start
        } else {
            0.0
        }
    }

    pub fn in_merge_section(&self, pos: f64) -> bool {
        pos >= self.merge_start && pos <= self.merge_end
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("network: {m}")));
        if self.mainline_lanes == 0 {
            return bad("need at least one mainline lane");
        }
        if !(self.length > 0.0) {
            return bad("length must be positive");
        }
        if !(self.merge_end > self.merge_start) {
            return bad("merge_end must exceed merge_start");
        }
        if !(self.onramp_start >= 0.0 && self.onramp_start <= self.merge_start && self.merge_end <= self.length) {
            return bad("need 0 <= onramp_start <= merge_start < merge_end <= length");
        }
        if self.detectors.iter().any(|&d| !(d >= 0.0 && d <= self.length)) {
            return bad("detectors must lie on the road");
        }
        Ok(())
    }
}

/// Piecewise-linear flow in veh/hr over time in s, constant beyond the end points.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule {
    points: Vec<(f64, f64)>,
}

impl Schedule {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.iter().any(|&(t, q)| !t.is_finite() || !(q >= 0.0)) {
            return Err(Error::Config("inflow schedule needs finite times and nonnegative flows".into()));
        }
        Ok(Self { points })
    }

    pub fn constant(q: f64) -> Self {
        Self { points: vec![(0.0, q)] }
    }

    /// Linear increase from 0 at `t0` to `q` at `t1`, then constant.
    pub fn ramp_up(t0: f64, t1: f64, q: f64) -> Self {
        Self { points: vec![(t0, 0.0), (t1, q)] }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.points.clone()).map(|_| ())
    }

    /// veh/hr at time `t`.
    pub fn rate(&self, t: f64) -> f64 {
        let p = &self.points;
        match p.len() {
            0 => 0.0,
            _ if t <= p[0].0 => p[0].1,
            _ => {
                let i = p.partition_point(|&(ti, _)| ti <= t);
                if i == p.len() {
                    return p[i - 1].1;
                }
                let (t0, q0) = p[i - 1];
                let (t1, q1) = p[i];
                q0 + (q1 - q0) * (t - t0) / (t1 - t0)
            }
        }
    }
}
