//! Run configuration: a TOML file with one section per module. Every key is optional and
//! falls back to the shipped defaults; unknown keys are rejected. Errors carry the line of
//! the offending key.

use serde::{Deserialize, Serialize};

use crate::calibration::GaConfig;
use crate::cf_models::ModelKind;
use crate::error::{Error, Result};
use crate::lane_changing::LcParams;
use crate::measurement::{BreakdownCriteria, EdieGridSpec, ExperimentOptions, WaveCriteria};
use crate::relaxation::Safeguard;
use crate::simulation::{Boundary, RecordOptions, RoadNetwork, Schedule, SimConfig};
use crate::{CfParams, RelaxationConfig};

/// The shipped defaults, identical to `RunConfig::default()`.
pub const DEFAULTS_CFG: &str = include_str!("../defaults.cfg");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub vehicle_length: f64,
    pub record_trajectories: bool,
    pub record_stride: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            dt: d.dt,
            horizon: d.horizon,
            seed: d.seed,
            vehicle_length: d.vehicle_length,
            record_trajectories: true,
            record_stride: 10,
        }
    }
}

/// Inflow schedules as `[[t, veh/hr], ...]`; the mainline rate is per lane.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InflowSection {
    pub mainline: Schedule,
    pub onramp: Schedule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundarySection {
    pub b1: f64,
    pub b2: f64,
}

impl Default for BoundarySection {
    fn default() -> Self {
        let b = Boundary::default();
        Self { b1: b.b1, b2: b.b2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CarFollowingSection {
    pub model: String,
    /// In the model's parameter order.
    pub params: Vec<f64>,
}

impl Default for CarFollowingSection {
    fn default() -> Self {
        Self { model: ModelKind::Idm.to_string(), params: CfParams::default_idm().values() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxationSection {
    pub enabled: bool,
    /// s
    pub c: f64,
    /// `both`, `positive` or `two`.
    pub mode: String,
    /// Speed relaxation time for `two`, s.
    pub c_v: f64,
    pub safeguard: bool,
    pub safeguard_alpha: f64,
    pub safeguard_beta: f64,
    pub safeguard_eps: f64,
}

impl Default for RelaxationSection {
    fn default() -> Self {
        let g = Safeguard::<f64>::default();
        Self {
            enabled: true,
            c: 8.7,
            mode: "both".into(),
            c_v: 8.7,
            safeguard: true,
            safeguard_alpha: g.alpha,
            safeguard_beta: g.beta,
            safeguard_eps: g.eps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaneChangingSection {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub d5: f64,
    pub d6: f64,
    pub d7: f64,
    pub d8: u32,
    pub d9: u32,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl Default for LaneChangingSection {
    fn default() -> Self {
        let p = LcParams::<f64>::default();
        Self { d1: p.d1, d2: p.d2, d3: p.d3, d4: p.d4, d5: p.d5, d6: p.d6, d7: p.d7, d8: p.d8, d9: p.d9, a1: p.a1, a2: p.a2, a3: p.a3 }
    }
}

/// Capacity/discharge experiments and Edie aggregation. Speed thresholds left unset are
/// derived from `boundary.b2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementSection {
    pub warmup: f64,
    pub capacity_horizon: f64,
    pub resolution: f64,
    pub max_mainline: f64,
    pub discharge_delay: f64,
    pub discharge_window: f64,
    pub discharge_duration: f64,
    pub overload_margin: f64,
    pub upstream_detector: usize,
    pub downstream_detector: usize,
    /// Negative disables the extra wave detector.
    pub wave_position: f64,
    pub breakdown_threshold: Option<f64>,
    pub breakdown_sustain: f64,
    pub breakdown_window: f64,
    pub breakdown_per_lane: bool,
    pub wave_threshold: Option<f64>,
    pub wave_swing: f64,
    pub wave_window: f64,
    pub wave_step: f64,
    pub seeds: Vec<u64>,
    pub edie_dx: f64,
    pub edie_dt: f64,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        let o = ExperimentOptions::default();
        Self {
            warmup: o.warmup,
            capacity_horizon: o.capacity_horizon,
            resolution: o.resolution,
            max_mainline: o.max_mainline,
            discharge_delay: o.discharge_delay,
            discharge_window: o.discharge_window,
            discharge_duration: o.discharge_duration,
            overload_margin: o.overload_margin,
            upstream_detector: o.upstream_detector,
            downstream_detector: o.downstream_detector,
            wave_position: o.wave_position.unwrap_or(-1.0),
            breakdown_threshold: None,
            breakdown_sustain: o.breakdown.sustain,
            breakdown_window: o.breakdown.window,
            breakdown_per_lane: o.breakdown.per_lane,
            wave_threshold: None,
            wave_swing: o.waves.swing,
            wave_window: o.waves.window,
            wave_step: o.waves.step,
            seeds: vec![1, 2, 3],
            edie_dx: 100.0,
            edie_dt: 120.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub mutation_sigma: f64,
    pub elites: usize,
    pub blend_alpha: f64,
    pub polish_iters: u64,
    pub seed: u64,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        let g = GaConfig::default();
        Self {
            population: g.population,
            generations: g.generations,
            tournament: g.tournament,
            crossover_prob: g.crossover_prob,
            mutation_prob: g.mutation_prob,
            mutation_sigma: g.mutation_sigma,
            elites: g.elites,
            blend_alpha: g.blend_alpha,
            polish_iters: g.polish_iters,
            seed: g.seed,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub simulation: SimulationSection,
    pub network: RoadNetwork,
    pub inflow: InflowSection,
    pub boundary: BoundarySection,
    pub car_following: CarFollowingSection,
    pub relaxation: RelaxationSection,
    pub lane_changing: LaneChangingSection,
    pub measurement: MeasurementSection,
    pub calibration: CalibrationSection,
}

/// 1-based line of byte offset `at`.
fn line_of(src: &str, at: usize) -> usize {
    src[..at.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line where `section.key` is set, if it is.
fn find_key(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
        } else if current == section && line.split('=').next().map(str::trim) == Some(key) {
            return Some(i + 1);
        }
    }
    None
}

fn invalid(src: &str, section: &str, key: &str, msg: impl std::fmt::Display) -> Error {
    match find_key(src, section, key) {
        Some(line) => Error::Config(format!("line {line}: {section}.{key}: {msg}")),
        None => Error::Config(format!("{section}.{key}: {msg}")),
    }
}

impl RunConfig {
    /// Parses and validates; error messages start with `line N:` when the position is known.
    pub fn parse(src: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(src).map_err(|e| {
            let msg = e.message().trim().to_string();
            match e.span() {
                Some(span) => Error::Config(format!("line {}: {msg}", line_of(src, span.start))),
                None => Error::Config(msg),
            }
        })?;
        cfg.check(src)?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)?;
        Self::parse(&src).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn check(&self, src: &str) -> Result<()> {
        let s = &self.simulation;
        if !(s.dt > 0.0) {
            return Err(invalid(src, "simulation", "dt", "must be positive"));
        }
        if !(s.horizon >= 0.0) {
            return Err(invalid(src, "simulation", "horizon", "must be nonnegative"));
        }
        if s.record_stride == 0 {
            return Err(invalid(src, "simulation", "record_stride", "must be at least 1"));
        }
        self.network.validate().map_err(|e| invalid(src, "network", "length", e))?;
        for (key, sched) in [("mainline", &self.inflow.mainline), ("onramp", &self.inflow.onramp)] {
            sched.validate().map_err(|e| invalid(src, "inflow", key, e))?;
        }
        let kind: ModelKind = self.car_following.model.parse().map_err(|e| invalid(src, "car_following", "model", e))?;
        CfParams::from_values(kind, &self.car_following.params).map_err(|e| invalid(src, "car_following", "params", e))?;
        self.relaxation_config().map_err(|e| invalid(src, "relaxation", "mode", e))?;
        if let Some(r) = self.relaxation_config()? {
            r.validate().map_err(|e| invalid(src, "relaxation", "c", e))?;
        }
        self.lc_params().validate().map_err(|e| invalid(src, "lane_changing", "d1", e))?;
        let m = &self.measurement;
        let n = self.network.detectors.len();
        if m.upstream_detector >= n {
            return Err(invalid(src, "measurement", "upstream_detector", format!("only {n} detectors")));
        }
        if m.downstream_detector >= n {
            return Err(invalid(src, "measurement", "downstream_detector", format!("only {n} detectors")));
        }
        if m.seeds.is_empty() {
            return Err(invalid(src, "measurement", "seeds", "needs at least one seed"));
        }
        if !(m.edie_dx > 0.0 && m.edie_dt > 0.0) {
            return Err(invalid(src, "measurement", "edie_dx", "edie_dx and edie_dt must be positive"));
        }
        self.ga_config().validate().map_err(|e| invalid(src, "calibration", "population", e))?;
        Ok(())
    }

    pub fn cf_params(&self) -> Result<CfParams> {
        let kind: ModelKind = self.car_following.model.parse()?;
        CfParams::from_values(kind, &self.car_following.params)
    }

    /// `None` when relaxation is disabled.
    pub fn relaxation_config(&self) -> Result<Option<RelaxationConfig>> {
        let r = &self.relaxation;
        if !r.enabled {
            return Ok(None);
        }
        let mut cfg = match r.mode.as_str() {
            "both" => RelaxationConfig::new(r.c),
            "positive" => RelaxationConfig::positive_only(r.c),
            "two" => RelaxationConfig::two_parameter(r.c, r.c_v),
            other => return Err(Error::Config(format!("unknown relaxation mode `{other}` (expected both, positive or two)"))),
        };
        cfg.safeguard = r.safeguard.then_some(Safeguard { alpha: r.safeguard_alpha, beta: r.safeguard_beta, eps: r.safeguard_eps });
        Ok(Some(cfg))
    }

    pub fn lc_params(&self) -> LcParams<f64> {
        let l = &self.lane_changing;
        LcParams { d1: l.d1, d2: l.d2, d3: l.d3, d4: l.d4, d5: l.d5, d6: l.d6, d7: l.d7, d8: l.d8, d9: l.d9, a1: l.a1, a2: l.a2, a3: l.a3 }
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let s = &self.simulation;
        let cfg = SimConfig {
            dt: s.dt,
            horizon: s.horizon,
            seed: s.seed,
            vehicle_length: s.vehicle_length,
            network: self.network.clone(),
            mainline_inflow: self.inflow.mainline.clone(),
            onramp_inflow: self.inflow.onramp.clone(),
            boundary: Boundary { b1: self.boundary.b1, b2: self.boundary.b2 },
            cf: self.cf_params()?,
            relaxation: self.relaxation_config()?,
            lc: self.lc_params(),
            record: RecordOptions { trajectories: s.record_trajectories, stride: s.record_stride },
            edie: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn edie_spec(&self) -> EdieGridSpec {
        EdieGridSpec::new(0.0, self.network.length, self.measurement.edie_dx, self.measurement.edie_dt)
    }

    pub fn experiment_options(&self) -> ExperimentOptions {
        let m = &self.measurement;
        let b2 = self.boundary.b2;
        let mut breakdown = BreakdownCriteria::from_b2(b2);
        breakdown.threshold = m.breakdown_threshold.unwrap_or(breakdown.threshold);
        breakdown.sustain = m.breakdown_sustain;
        breakdown.window = m.breakdown_window;
        breakdown.per_lane = m.breakdown_per_lane;
        let mut waves = WaveCriteria::from_b2(b2);
        waves.threshold = m.wave_threshold.unwrap_or(waves.threshold);
        waves.swing = m.wave_swing;
        waves.window = m.wave_window;
        waves.step = m.wave_step;
        ExperimentOptions {
            warmup: m.warmup,
            capacity_horizon: m.capacity_horizon,
            resolution: m.resolution,
            max_mainline: m.max_mainline,
            discharge_delay: m.discharge_delay,
            discharge_window: m.discharge_window,
            discharge_duration: m.discharge_duration,
            overload_margin: m.overload_margin,
            upstream_detector: m.upstream_detector,
            downstream_detector: m.downstream_detector,
            wave_position: (m.wave_position >= 0.0).then_some(m.wave_position),
            breakdown,
            waves,
        }
    }

    pub fn ga_config(&self) -> GaConfig {
        let c = &self.calibration;
        GaConfig {
            population: c.population,
            generations: c.generations,
            tournament: c.tournament,
            crossover_prob: c.crossover_prob,
            mutation_prob: c.mutation_prob,
            mutation_sigma: c.mutation_sigma,
            elites: c.elites,
            blend_alpha: c.blend_alpha,
            polish_iters: c.polish_iters,
            seed: c.seed,
        }
    }
}
