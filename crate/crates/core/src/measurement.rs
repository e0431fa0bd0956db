//! Macroscopic observables: Edie flow/density, breakdown detection, discharge rate, wave
//! period and the capacity search.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::simulation::{run, DetectorRow, Schedule, SimConfig, TrajectoryRow};

/// Space-time rectangle `[x0, x1) × [t0, t1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdieRegion {
    pub x0: f64,
    pub x1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl EdieRegion {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.t1 - self.t0)
    }

    /// Distance travelled and time spent inside the region by a straight segment from
    /// `(ta, xa)` to `(tb, xb)`.
    pub fn clip(&self, ta: f64, xa: f64, tb: f64, xb: f64) -> (f64, f64) {
        if !(tb > ta) {
            return (0.0, 0.0);
        }
        let (mut lo, mut hi) = ((self.t0 - ta) / (tb - ta), (self.t1 - ta) / (tb - ta));
        lo = lo.max(0.0);
        hi = hi.min(1.0);
        let dx = xb - xa;
        if dx == 0.0 {
            if !(xa >= self.x0 && xa < self.x1) {
                return (0.0, 0.0);
            }
        } else {
            let (u0, u1) = ((self.x0 - xa) / dx, (self.x1 - xa) / dx);
            lo = lo.max(u0.min(u1));
            hi = hi.min(u0.max(u1));
        }
        if hi <= lo {
            return (0.0, 0.0);
        }
        ((hi - lo) * dx.abs(), (hi - lo) * (tb - ta))
    }
}

/// Edie's generalized flow (veh/s) and density (veh/m) over `region`, treating motion between
/// consecutive samples of a vehicle as linear.
pub fn edie_flow_density(trajectories: &[TrajectoryRow], region: &EdieRegion) -> (f64, f64) {
    if !(region.area() > 0.0) {
        return (0.0, 0.0);
    }
    let mut dist = 0.0;
    let mut time = 0.0;
    for_each_segment(trajectories, |ta, xa, tb, xb| {
        let (d, t) = region.clip(ta, xa, tb, xb);
        dist += d;
        time += t;
    });
    (dist / region.area(), time / region.area())
}

fn for_each_segment(trajectories: &[TrajectoryRow], mut f: impl FnMut(f64, f64, f64, f64)) {
    let mut rows: Vec<&TrajectoryRow> = trajectories.iter().collect();
    rows.sort_by(|a, b| a.id.cmp(&b.id).then(a.t.total_cmp(&b.t)));
    for w in rows.windows(2) {
        if w[0].id == w[1].id {
            f(w[0].t, w[0].pos, w[1].t, w[1].pos);
        }
    }
}

/// Bins for [`EdieGrid`]: `x_start..x_end` in steps of `dx` metres, time in steps of `dt` s.
#[derive(Clone, Debug, PartialEq)]
pub struct EdieGridSpec {
    pub x_start: f64,
    pub x_end: f64,
    pub dx: f64,
    pub dt: f64,
}

impl EdieGridSpec {
    pub fn new(x_start: f64, x_end: f64, dx: f64, dt: f64) -> Self {
        Self { x_start, x_end, dx, dt }
    }
}

/// Online accumulator of Edie distance/time totals on a regular space-time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct EdieGrid {
    spec: EdieGridSpec,
    nx: usize,
    /// `[t_bin][x_bin] -> (distance, time)`
    cells: Vec<Vec<(f64, f64)>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdPoint {
    pub x0: f64,
    pub t0: f64,
    /// veh/s
    pub q: f64,
    /// veh/m
    pub k: f64,
}

impl EdieGrid {
    pub fn new(spec: EdieGridSpec) -> Result<Self> {
        if !(spec.dx > 0.0 && spec.dt > 0.0 && spec.x_end > spec.x_start) {
            return Err(Error::InvalidArgument("Edie grid needs positive bins and x_end > x_start".into()));
        }
        let nx = ((spec.x_end - spec.x_start) / spec.dx).ceil() as usize;
        Ok(Self { spec, nx, cells: Vec::new() })
    }

    pub fn add_segment(&mut self, ta: f64, xa: f64, tb: f64, xb: f64) {
        let s = &self.spec;
        if !(tb > ta) {
            return;
        }
        let (xl, xh) = (xa.min(xb), xa.max(xb));
        if xh < s.x_start || xl >= s.x_end || tb <= 0.0 && ta < 0.0 {
            return;
        }
        let ix0 = (((xl - s.x_start) / s.dx).floor().max(0.0)) as usize;
        let ix1 = ((((xh - s.x_start) / s.dx).floor()) as usize).min(self.nx - 1);
        let it0 = (ta.max(0.0) / s.dt).floor() as usize;
        // a segment ending exactly on a bin edge does not reach into the next bin
        let it1 = (((tb / s.dt).ceil() as usize).saturating_sub(1)).max(it0);
        if self.cells.len() <= it1 {
            self.cells.resize(it1 + 1, vec![(0.0, 0.0); self.nx]);
        }
        for it in it0..=it1 {
            for ix in ix0..=ix1 {
                let x0 = s.x_start + ix as f64 * s.dx;
                let region = EdieRegion { x0, x1: (x0 + s.dx).min(s.x_end), t0: it as f64 * s.dt, t1: (it + 1) as f64 * s.dt };
                let (d, t) = region.clip(ta, xa, tb, xb);
                let c = &mut self.cells[it][ix];
                c.0 += d;
                c.1 += t;
            }
        }
    }

    pub fn points(&self) -> Vec<FdPoint> {
        let s = &self.spec;
        let mut out = Vec::with_capacity(self.cells.len() * self.nx);
        for (it, row) in self.cells.iter().enumerate() {
            for (ix, &(d, t)) in row.iter().enumerate() {
                let x0 = s.x_start + ix as f64 * s.dx;
                let area = ((x0 + s.dx).min(s.x_end) - x0) * s.dt;
                out.push(FdPoint { x0, t0: it as f64 * s.dt, q: d / area, k: t / area });
            }
        }
        out
    }
}

/// FD points on a regular grid from a trajectory log.
pub fn fd_points(trajectories: &[TrajectoryRow], spec: EdieGridSpec) -> Result<Vec<FdPoint>> {
    let mut grid = EdieGrid::new(spec)?;
    for_each_segment(trajectories, |ta, xa, tb, xb| grid.add_segment(ta, xa, tb, xb));
    Ok(grid.points())
}

/// CSV with header `x_start,t_start,density_veh_km,flow_veh_hr`.
pub fn write_fd_points<W: Write>(points: &[FdPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x_start", "t_start", "density_veh_km", "flow_veh_hr"])?;
    for p in points {
        out.serialize((p.x0, p.t0, p.k * 1000.0, p.q * 3600.0))?;
    }
    out.flush()?;
    Ok(())
}

/// Mean detector speed over a trailing window, sampled on a regular grid. Windows with no
/// crossings yield `None`.
pub fn rolling_mean_speed(rows: &[DetectorRow], window: f64, step: f64, t_end: f64) -> Vec<(f64, Option<f64>)> {
    let mut sorted: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.speed)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let (mut lo, mut hi, mut sum) = (0usize, 0usize, 0.0);
    let mut k = 1usize;
    loop {
        let t = k as f64 * step;
        if t > t_end + 1e-9 {
            break;
        }
        while hi < sorted.len() && sorted[hi].0 <= t {
            sum += sorted[hi].1;
            hi += 1;
        }
        while lo < hi && sorted[lo].0 <= t - window {
            sum -= sorted[lo].1;
            lo += 1;
        }
        let n = hi - lo;
        out.push((t, (n > 0).then(|| sum / n as f64)));
        k += 1;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BreakdownCriteria {
    /// m/s
    pub threshold: f64,
    /// s
    pub sustain: f64,
    /// Rolling-mean window, s.
    pub window: f64,
    /// Sampling step of the rolling mean, s.
    pub step: f64,
    /// Test each lane separately and report the earliest breakdown; otherwise pool lanes.
    pub per_lane: bool,
}

impl BreakdownCriteria {
    pub fn from_b2(b2: f64) -> Self {
        Self { threshold: 0.6 * b2, sustain: 240.0, window: 120.0, step: 1.0, per_lane: true }
    }
}

impl Default for BreakdownCriteria {
    fn default() -> Self {
        Self::from_b2(18.85)
    }
}

/// Start of the first low-speed episode lasting at least `sustain`. Samples without
/// crossings neither start nor end an episode.
pub fn detect_breakdown(rows: &[DetectorRow], c: &BreakdownCriteria, t_end: f64) -> Option<f64> {
    if !c.per_lane {
        return first_low_episode(rows, c, t_end);
    }
    let mut lanes: Vec<usize> = rows.iter().map(|r| r.lane).collect();
    lanes.sort_unstable();
    lanes.dedup();
    lanes
        .into_iter()
        .filter_map(|l| {
            let lane_rows: Vec<_> = rows.iter().filter(|r| r.lane == l).copied().collect();
            first_low_episode(&lane_rows, c, t_end)
        })
        .min_by(f64::total_cmp)
}

fn first_low_episode(rows: &[DetectorRow], c: &BreakdownCriteria, t_end: f64) -> Option<f64> {
    let mut start: Option<f64> = None;
    for (t, m) in rolling_mean_speed(rows, c.window, c.step, t_end) {
        if t < c.window {
            continue;
        }
        match m {
            Some(v) if v < c.threshold => {
                let s = *start.get_or_insert(t);
                if t - s >= c.sustain {
                    return Some(s);
                }
            }
            Some(_) => start = None,
            None => {
                if let Some(s) = start {
                    if t - s >= c.sustain {
                        return Some(s);
                    }
                }
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveCriteria {
    /// Only troughs below this speed count as waves, m/s.
    pub threshold: f64,
    /// Minimum rise and fall separating successive troughs, m/s.
    pub swing: f64,
    /// s
    pub window: f64,
    /// s
    pub step: f64,
}

impl WaveCriteria {
    pub fn from_b2(b2: f64) -> Self {
        Self { threshold: 0.6 * b2, swing: 2.0, window: 10.0, step: 5.0 }
    }
}

impl Default for WaveCriteria {
    fn default() -> Self {
        Self::from_b2(18.85)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveReport {
    /// Trough times, s.
    pub arrivals: Vec<f64>,
    /// min
    pub period_mean: f64,
    /// min
    pub period_stdev: f64,
}

/// Wave arrivals within `[t0, t1]`: troughs of the rolling mean speed below `threshold`,
/// where successive troughs are separated by a rise and a fall of at least `swing`.
pub fn wave_period(rows: &[DetectorRow], c: &WaveCriteria, t0: f64, t1: f64) -> Result<WaveReport> {
    enum Phase {
        Rising { peak: f64 },
        Falling { trough: (f64, f64) },
    }
    let mut arrivals: Vec<f64> = Vec::new();
    let mut phase: Option<Phase> = None;
    for (t, m) in rolling_mean_speed(rows, c.window, c.step, t1) {
        let Some(v) = m else { continue };
        phase = Some(match phase {
            None => Phase::Rising { peak: v },
            Some(Phase::Rising { peak }) if v < peak - c.swing => Phase::Falling { trough: (t, v) },
            Some(Phase::Rising { peak }) => Phase::Rising { peak: peak.max(v) },
            Some(Phase::Falling { trough }) if v < trough.1 => Phase::Falling { trough: (t, v) },
            Some(Phase::Falling { trough }) if v > trough.1 + c.swing => {
                if trough.0 >= t0 && trough.1 < c.threshold {
                    arrivals.push(trough.0);
                }
                Phase::Rising { peak: v }
            }
            Some(falling) => falling,
        });
    }
    if arrivals.len() < 2 {
        return Err(Error::InsufficientData(format!("{} wave arrivals, need at least 2", arrivals.len())));
    }
    let gaps: Vec<f64> = arrivals.windows(2).map(|w| (w[1] - w[0]) / 60.0).collect();
    let (period_mean, period_stdev) = mean_stdev(&gaps);
    Ok(WaveReport { arrivals, period_mean, period_stdev })
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_stdev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DischargeReport {
    /// veh/hr per window
    pub series: Vec<f64>,
    pub mean: f64,
    pub stdev: f64,
    /// Mean veh/hr per lane, indexed by lane.
    pub per_lane: Vec<f64>,
}

/// Flow counted in consecutive windows of `window` s starting at `start`, for up to
/// `duration` s or until `t_end`.
pub fn discharge_rate(
    rows: &[DetectorRow],
    start: f64,
    window: f64,
    duration: f64,
    t_end: f64,
    lanes: usize,
) -> Result<DischargeReport> {
    if !(window > 0.0) {
        return Err(Error::InvalidArgument("window must be positive".into()));
    }
    let available = ((t_end.min(start + duration) - start) / window + 1e-9).floor();
    if !(available >= 1.0) {
        return Err(Error::InsufficientData("no complete discharge window after breakdown".into()));
    }
    let n = available as usize;
    let mut counts = vec![0usize; n];
    let mut lane_counts = vec![0usize; lanes];
    for r in rows {
        let u = (r.t - start) / window;
        if u >= 0.0 && (u as usize) < n {
            counts[u as usize] += 1;
            if r.lane < lanes {
                lane_counts[r.lane] += 1;
            }
        }
    }
    let scale = 3600.0 / window;
    let series: Vec<f64> = counts.iter().map(|&c| c as f64 * scale).collect();
    let (mean, stdev) = mean_stdev(&series);
    let span = n as f64 * window;
    let per_lane = lane_counts.iter().map(|&c| c as f64 * 3600.0 / span).collect();
    Ok(DischargeReport { series, mean, stdev, per_lane })
}

/// Settings shared by the capacity and discharge experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentOptions {
    /// Mainline inflow ramps up linearly over this time, s.
    pub warmup: f64,
    /// Time simulated after the ramp-up when testing for breakdown, s.
    pub capacity_horizon: f64,
    /// Bisection resolution, veh/hr.
    pub resolution: f64,
    /// Upper end of the bisection bracket (total mainline inflow), veh/hr.
    pub max_mainline: f64,
    /// Discharge counting starts this long after breakdown, s.
    pub discharge_delay: f64,
    /// s
    pub discharge_window: f64,
    /// s
    pub discharge_duration: f64,
    /// Mainline demand above capacity during the discharge run, veh/hr. Doubled (up to
    /// twice) if the run does not break down.
    pub overload_margin: f64,
    /// Index of the upstream detector.
    pub upstream_detector: usize,
    /// Index of the downstream detector.
    pub downstream_detector: usize,
    /// Extra detector for timing waves, m. Falls back to the upstream detector.
    pub wave_position: Option<f64>,
    pub breakdown: BreakdownCriteria,
    pub waves: WaveCriteria,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            warmup: 600.0,
            capacity_horizon: 3600.0,
            resolution: 4.0,
            max_mainline: 4800.0,
            discharge_delay: 120.0,
            discharge_window: 120.0,
            discharge_duration: 2700.0,
            overload_margin: 200.0,
            upstream_detector: 0,
            downstream_detector: 2,
            wave_position: Some(400.0),
            breakdown: BreakdownCriteria::default(),
            waves: WaveCriteria::default(),
        }
    }
}

fn with_inflows(base: &SimConfig, mainline_total: f64, onramp: f64, warmup: f64, horizon: f64) -> SimConfig {
    let lanes = base.network.mainline_lanes as f64;
    let mut cfg = base.clone();
    cfg.mainline_inflow = Schedule::ramp_up(0.0, warmup, mainline_total / lanes);
    cfg.onramp_inflow = Schedule::constant(onramp);
    cfg.horizon = horizon;
    cfg.record.trajectories = false;
    cfg.edie = None;
    cfg
}

/// Outcome of one constant-demand run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DemandTrial {
    pub breakdown_at: Option<f64>,
    /// Flow past the downstream detector after warmup, veh/hr.
    pub throughput: f64,
}

/// Runs constant demand and checks for breakdown at the upstream detector.
pub fn demand_trial(base: &SimConfig, mainline_total: f64, onramp: f64, opts: &ExperimentOptions) -> Result<DemandTrial> {
    let horizon = opts.warmup + opts.capacity_horizon;
    let log = run(with_inflows(base, mainline_total, onramp, opts.warmup, horizon))?;
    let breakdown_at = detect_breakdown(&log.detector(opts.upstream_detector), &opts.breakdown, horizon);
    let t0 = opts.warmup;
    let t1 = breakdown_at.unwrap_or(horizon);
    let n = log.detector(opts.downstream_detector).iter().filter(|r| r.t >= t0 && r.t < t1).count();
    let throughput = if t1 > t0 { n as f64 * 3600.0 / (t1 - t0) } else { f64::NAN };
    Ok(DemandTrial { breakdown_at, throughput })
}

/// Whether a run with constant demand breaks down at the upstream detector.
pub fn breaks_down(base: &SimConfig, mainline_total: f64, onramp: f64, opts: &ExperimentOptions) -> Result<bool> {
    Ok(demand_trial(base, mainline_total, onramp, opts)?.breakdown_at.is_some())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapacityEstimate {
    /// Largest total mainline demand without breakdown, veh/hr.
    pub mainline: f64,
    /// veh/hr
    pub onramp: f64,
    /// Flow measured downstream at that demand, veh/hr.
    pub throughput: f64,
}

impl CapacityEstimate {
    /// Mainline plus on-ramp demand, veh/hr.
    pub fn total(&self) -> f64 {
        self.mainline + self.onramp
    }
}

/// Bisection over total mainline demand on the predicate "no breakdown within the horizon".
pub fn capacity_search(base: &SimConfig, onramp: f64, opts: &ExperimentOptions) -> Result<CapacityEstimate> {
    let first = demand_trial(base, 0.0, onramp, opts)?;
    if first.breakdown_at.is_some() {
        return Err(Error::DegenerateConfig);
    }
    let (mut lo, mut hi) = ((0.0, first), opts.max_mainline);
    let top = demand_trial(base, hi, onramp, opts)?;
    if top.breakdown_at.is_none() {
        return Ok(CapacityEstimate { mainline: hi, onramp, throughput: top.throughput });
    }
    while hi - lo.0 > opts.resolution {
        let mid = 0.5 * (lo.0 + hi);
        let mid = (mid / opts.resolution).round() * opts.resolution;
        let mid = if mid <= lo.0 || mid >= hi { 0.5 * (lo.0 + hi) } else { mid };
        let trial = demand_trial(base, mid, onramp, opts)?;
        if trial.breakdown_at.is_some() {
            hi = mid;
        } else {
            lo = (mid, trial);
        }
    }
    Ok(CapacityEstimate { mainline: lo.0, onramp, throughput: lo.1.throughput })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DischargeExperiment {
    /// s
    pub breakdown_at: f64,
    pub discharge: DischargeReport,
    pub waves: Option<WaveReport>,
}

/// Overloaded run: detects breakdown, then measures discharge downstream and the wave
/// period upstream over the same post-breakdown span.
pub fn discharge_experiment(base: &SimConfig, capacity: &CapacityEstimate, opts: &ExperimentOptions) -> Result<DischargeExperiment> {
    let lanes = base.network.mainline_lanes;
    let max_wait = opts.warmup + opts.capacity_horizon;
    let horizon = max_wait + opts.discharge_delay + opts.discharge_duration;
    let mut base = base.clone();
    let wave_detector = match opts.wave_position {
        Some(x) => {
            base.network.detectors.push(x);
            base.network.detectors.len() - 1
        }
        None => opts.upstream_detector,
    };
    for k in 0..3 {
        let demand = capacity.mainline + opts.overload_margin * f64::from(1 << k);
        let log = run(with_inflows(&base, demand, capacity.onramp, opts.warmup, horizon))?;
        let up = log.detector(opts.upstream_detector);
        let Some(breakdown_at) = detect_breakdown(&up, &opts.breakdown, max_wait) else { continue };
        let start = breakdown_at + opts.discharge_delay;
        let end = start + opts.discharge_duration;
        let down = log.detector(opts.downstream_detector);
        let discharge = discharge_rate(&down, start, opts.discharge_window, opts.discharge_duration, horizon, lanes)?;
        let waves = wave_period(&log.detector(wave_detector), &opts.waves, start, end).ok();
        return Ok(DischargeExperiment { breakdown_at, discharge, waves });
    }
    Err(Error::InsufficientData("no breakdown under overload".into()))
}

/// One row of a capacity/discharge table.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacityReport {
    pub label: String,
    /// veh/hr
    pub onramp: f64,
    /// Mainline plus on-ramp inflow at capacity, veh/hr.
    pub capacity: f64,
    /// Flow measured downstream at capacity demand, veh/hr.
    pub throughput: f64,
    /// veh/hr
    pub discharge: f64,
    /// veh/hr, by lane (left first).
    pub discharge_per_lane: Vec<f64>,
    pub drop_pct: f64,
    pub drop_stdev: f64,
    /// min; NaN when fewer than two waves were seen.
    pub period: f64,
    pub period_stdev: f64,
}

impl CapacityReport {
    pub fn new(label: impl Into<String>, capacity: &CapacityEstimate, exp: &DischargeExperiment) -> Self {
        let cap = capacity.total();
        let (period, period_stdev) = exp.waves.as_ref().map_or((f64::NAN, f64::NAN), |w| (w.period_mean, w.period_stdev));
        Self {
            label: label.into(),
            onramp: capacity.onramp,
            capacity: cap,
            throughput: capacity.throughput,
            discharge: exp.discharge.mean,
            discharge_per_lane: exp.discharge.per_lane.clone(),
            drop_pct: drop_pct(cap, exp.discharge.mean),
            drop_stdev: 100.0 * exp.discharge.stdev / cap,
            period,
            period_stdev,
        }
    }

    /// Mean over seeds. `drop_pct` is recomputed from the mean capacity and discharge;
    /// the stdev columns hold the spread of the per-seed drop and period.
    pub fn mean_of(reports: &[CapacityReport]) -> Result<Self> {
        let first = reports.first().ok_or_else(|| Error::InsufficientData("no reports to average".into()))?;
        let avg = |f: fn(&CapacityReport) -> f64| mean_stdev(&reports.iter().map(f).collect::<Vec<_>>()).0;
        let lanes = first.discharge_per_lane.len();
        let per_lane = (0..lanes).map(|l| reports.iter().map(|r| r.discharge_per_lane[l]).sum::<f64>() / reports.len() as f64).collect();
        let (capacity, discharge) = (avg(|r| r.capacity), avg(|r| r.discharge));
        let drops: Vec<f64> = reports.iter().map(|r| r.drop_pct).collect();
        let periods: Vec<f64> = reports.iter().map(|r| r.period).filter(|p| p.is_finite()).collect();
        let (period, period_stdev) = if periods.is_empty() { (f64::NAN, f64::NAN) } else { mean_stdev(&periods) };
        Ok(Self {
            label: first.label.clone(),
            onramp: first.onramp,
            capacity,
            throughput: avg(|r| r.throughput),
            discharge,
            discharge_per_lane: per_lane,
            drop_pct: drop_pct(capacity, discharge),
            drop_stdev: mean_stdev(&drops).1,
            period,
            period_stdev,
        })
    }

    pub fn csv_header(lanes: usize) -> Vec<String> {
        let mut h = vec!["relax".to_string(), "onramp".into(), "capacity".into(), "throughput".into(), "discharge".into()];
        h.extend((0..lanes).map(|l| format!("discharge_lane{l}")));
        h.extend(["drop_pct", "drop_stdev", "period_min", "period_stdev"].map(String::from));
        h
    }

    pub fn csv_record(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.3}");
        let mut r = vec![self.label.clone(), f(self.onramp), f(self.capacity), f(self.throughput), f(self.discharge)];
        r.extend(self.discharge_per_lane.iter().map(|&x| f(x)));
        r.extend([f(self.drop_pct), f(self.drop_stdev), f(self.period), f(self.period_stdev)]);
        r
    }
}

pub fn drop_pct(capacity: f64, discharge: f64) -> f64 {
    100.0 * (capacity - discharge) / capacity
}

/// Capacity search followed by the discharge experiment, for each seed in parallel.
pub fn capacity_reports(
    base: &SimConfig,
    label: &str,
    onramp: f64,
    seeds: &[u64],
    opts: &ExperimentOptions,
) -> Result<Vec<CapacityReport>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = SimConfig { seed, ..base.clone() };
            let cap = capacity_search(&cfg, onramp, opts)?;
            let exp = discharge_experiment(&cfg, &cap, opts)?;
            Ok(CapacityReport::new(label, &cap, &exp))
        })
        .collect()
}
