//! Fixed-step engine for a multi-lane mainline with one on-ramp.
//!
//! Each step computes every acceleration from the frozen state, integrates, removes exiting
//! vehicles, evaluates lane changes on the moved state, applies them one at a time (with the
//! relaxation events they trigger), and finally handles the upstream inflows.

mod logs;
mod network;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use logs::{DetectorRow, SimEvent, SimLog, TrajectoryRow};
pub use network::{RoadNetwork, Schedule};

use crate::cf_models::{CfInput, CfResponse};
use crate::CfParams;
use crate::error::{Error, Result};
use crate::integrate::{advance, MIN_GAP};
use crate::lane_changing::{
    check_safety, discretionary_step, mandatory_step, mobil_incentive, tactical_cooperation, CfEnv, LcDecision, LcMode,
    LcParams, LcState, Neighborhood, Side, SideEval, VehicleView,
};
use crate::measurement::{EdieGrid, EdieGridSpec};
use crate::relaxation::{apply_relaxation, register_leader_change, EgoState, LeaderState, PriorLeader};
use crate::{RelaxationConfig, RelaxationState};

const MAX_STORED_COLLISIONS: usize = 1000;

/// Upstream boundary parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Boundary {
    /// Headway factor applied to fast insertions.
    pub b1: f64,
    /// Speed above which `b1` applies, m/s.
    pub b2: f64,
}

impl Default for Boundary {
    fn default() -> Self {
        Self { b1: 0.8, b2: 18.85 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RecordOptions {
    pub trajectories: bool,
    /// Record every n-th step (1 = every step).
    pub stride: usize,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    /// s
    pub dt: f64,
    /// s
    pub horizon: f64,
    pub seed: u64,
    /// m
    pub vehicle_length: f64,
    pub network: RoadNetwork,
    /// Per mainline lane, veh/hr.
    pub mainline_inflow: Schedule,
    /// veh/hr
    pub onramp_inflow: Schedule,
    pub boundary: Boundary,
    pub cf: CfParams,
    /// `None` disables relaxation.
    pub relaxation: Option<RelaxationConfig>,
    pub lc: LcParams<f64>,
    pub record: RecordOptions,
    pub edie: Option<EdieGridSpec>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            horizon: 3600.0,
            seed: 0,
            vehicle_length: 3.0,
            network: RoadNetwork::default(),
            mainline_inflow: Schedule::default(),
            onramp_inflow: Schedule::default(),
            boundary: Boundary::default(),
            cf: CfParams::default_idm(),
            relaxation: None,
            lc: LcParams::default(),
            record: RecordOptions { trajectories: false, stride: 1 },
            edie: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.horizon >= 0.0) {
            return Err(Error::Config("dt must be positive and horizon nonnegative".into()));
        }
        if !(self.vehicle_length > 0.0) {
            return Err(Error::Config("vehicle_length must be positive".into()));
        }
        if self.record.stride == 0 {
            return Err(Error::Config("trajectory stride must be at least 1".into()));
        }
        self.network.validate()?;
        self.mainline_inflow.validate()?;
        self.onramp_inflow.validate()?;
        self.cf.validate()?;
        self.lc.validate()?;
        if let Some(r) = &self.relaxation {
            r.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Vehicle {
    pub id: usize,
    pub lane: usize,
    /// Front bumper, m.
    pub pos: f64,
    pub speed: f64,
    pub accel: f64,
    pub length: f64,
    pub params: CfParams,
    pub relax: RelaxationState,
    pub lc: LcState<f64>,
    /// Cooperative adjustment requested by a merging vehicle, m/s².
    pub coop_adjust: f64,
    pub entry_time: f64,
}

impl Vehicle {
    fn view(&self) -> VehicleView<'_, f64> {
        VehicleView { id: self.id, pos: self.pos, speed: self.speed, length: self.length, params: &self.params, relax: &self.relax }
    }

    fn leader_state(&self) -> LeaderState<f64> {
        LeaderState { pos: self.pos, speed: self.speed, length: self.length }
    }
}

/// One lane change waiting to be applied.
#[derive(Clone, Copy, Debug)]
struct PendingChange {
    id: usize,
    side: Side,
    discretionary: bool,
}

pub struct World {
    cfg: SimConfig,
    t: f64,
    steps: u64,
    rng: ChaCha8Rng,
    vehicles: Vec<Option<Vehicle>>,
    /// Vehicle ids per lane, front (largest position) first.
    lanes: Vec<Vec<usize>>,
    buffers: Vec<f64>,
    entered: u64,
    exited: u64,
    log: SimLog,
}

impl World {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let lanes = vec![Vec::new(); cfg.network.lane_count()];
        let buffers = vec![0.0; cfg.network.lane_count()];
        let mut log = SimLog::default();
        log.edie = cfg.edie.clone().map(EdieGrid::new).transpose()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            t: 0.0,
            steps: 0,
            vehicles: Vec::new(),
            lanes,
            buffers,
            entered: 0,
            exited: 0,
            log,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn log(&self) -> &SimLog {
        &self.log
    }

    pub fn into_log(self) -> SimLog {
        self.log
    }

    pub fn entered(&self) -> u64 {
        self.entered
    }

    pub fn exited(&self) -> u64 {
        self.exited
    }

    pub fn on_road(&self) -> usize {
        self.lanes.iter().map(Vec::len).sum()
    }

    pub fn vehicle(&self, id: usize) -> Option<&Vehicle> {
        self.vehicles.get(id).and_then(Option::as_ref)
    }

    pub fn vehicle_mut(&mut self, id: usize) -> Option<&mut Vehicle> {
        self.vehicles.get_mut(id).and_then(Option::as_mut)
    }

    /// Ids in `lane`, front first.
    pub fn lane(&self, lane: usize) -> &[usize] {
        &self.lanes[lane]
    }

    pub fn vehicles(&self) -> impl Iterator<Item = &Vehicle> {
        self.lanes.iter().flatten().map(|&id| self.veh(id))
    }

    fn veh(&self, id: usize) -> &Vehicle {
        self.vehicles[id].as_ref().expect("lane lists only hold live vehicles")
    }

    fn veh_mut(&mut self, id: usize) -> &mut Vehicle {
        self.vehicles[id].as_mut().expect("lane lists only hold live vehicles")
    }

    /// Places a vehicle directly; `params` defaults to the configured model.
    pub fn insert_vehicle(&mut self, lane: usize, pos: f64, speed: f64, params: Option<CfParams>) -> Result<usize> {
        if lane >= self.lanes.len() {
            return Err(Error::InvalidArgument(format!("no lane {lane}")));
        }
        if !(pos.is_finite() && speed >= 0.0) {
            return Err(Error::InvalidArgument("vehicle needs finite position and nonnegative speed".into()));
        }
        let id = self.vehicles.len();
        self.vehicles.push(Some(Vehicle {
            id,
            lane,
            pos,
            speed,
            accel: 0.0,
            length: self.cfg.vehicle_length,
            params: params.unwrap_or_else(|| self.cfg.cf.clone()),
            relax: RelaxationState::new(),
            lc: LcState::new(),
            coop_adjust: 0.0,
            entry_time: self.t,
        }));
        let lane_ids = &self.lanes[lane];
        let at = lane_ids.partition_point(|&o| self.vehicles[o].as_ref().map_or(false, |v| v.pos > pos));
        self.lanes[lane].insert(at, id);
        self.entered += 1;
        Ok(id)
    }

    fn wall(&self) -> LeaderState<f64> {
        LeaderState { pos: self.cfg.network.merge_end, speed: 0.0, length: 0.0 }
    }

    /// Leader of the vehicle at index `k` of `lane` (the ramp's front vehicle sees the wall).
    fn leader_at(&self, lane: usize, k: usize) -> Option<LeaderState<f64>> {
        if k > 0 {
            Some(self.veh(self.lanes[lane][k - 1]).leader_state())
        } else if self.cfg.network.is_ramp(lane) {
            Some(self.wall())
        } else {
            None
        }
    }

    fn index_in_lane(&self, id: usize) -> usize {
        let v = self.veh(id);
        self.lanes[v.lane].iter().position(|&o| o == id).expect("vehicle is in its lane")
    }

    /// Index at which a vehicle at `pos` would be inserted in `lane`: leader at `k - 1`,
    /// follower at `k`.
    fn slot(&self, lane: usize, pos: f64) -> usize {
        self.lanes[lane].partition_point(|&o| self.veh(o).pos > pos)
    }

    pub fn run(mut self) -> Result<SimLog> {
        let n = (self.cfg.horizon / self.cfg.dt).round() as u64;
        self.record_trajectories();
        for _ in 0..n {
            self.step()?;
        }
        Ok(self.log)
    }

    pub fn step(&mut self) -> Result<()> {
        let dt = self.cfg.dt;
        let responses = self.compute_responses()?;
        self.integrate(&responses);
        self.t = (self.steps + 1) as f64 * dt;
        self.steps += 1;
        self.check_gaps();
        self.remove_exits();
        let changes = self.decide_lane_changes();
        for ch in changes {
            self.apply_change(ch, true)?;
        }
        let t = self.t;
        for id in self.lanes.iter().flatten().copied().collect::<Vec<_>>() {
            self.veh_mut(id).relax.prune(t);
        }
        self.process_inflows()?;
        if self.steps % self.cfg.record.stride as u64 == 0 {
            self.record_trajectories();
        }
        Ok(())
    }

    fn compute_responses(&self) -> Result<Vec<(usize, CfResponse<f64>)>> {
        let mut out = Vec::with_capacity(self.on_road());
        let relax = self.cfg.relaxation.as_ref();
        for lane in 0..self.lanes.len() {
            for (k, &id) in self.lanes[lane].iter().enumerate() {
                let v = self.veh(id);
                let response = match self.leader_at(lane, k) {
                    None => v.params.free_response(v.speed),
                    Some(l) => {
                        let gap = (l.pos - l.length - v.pos).max(MIN_GAP);
                        let mut input = CfInput::new(gap, v.speed, l.speed);
                        if let Some(cfg) = relax {
                            input = apply_relaxation(input, &v.relax, self.t, cfg, v.params.jam_spacing());
                            input.headway = input.headway.max(MIN_GAP);
                        }
                        v.params.response(input)?
                    }
                };
                out.push((id, response));
            }
        }
        Ok(out)
    }

    fn integrate(&mut self, responses: &[(usize, CfResponse<f64>)]) {
        let dt = self.cfg.dt;
        let t0 = self.t;
        let mainline = self.cfg.network.mainline_lanes;
        for &(id, response) in responses {
            let v = self.vehicles[id].as_mut().expect("live vehicle");
            let extra = v.lc.tactical + v.coop_adjust;
            let prev = v.pos;
            let out = advance(v.pos, v.speed, response, extra, dt);
            v.pos = out.pos;
            v.speed = out.speed;
            v.accel = out.accel;
            if v.lane >= mainline {
                continue;
            }
            let (lane, speed) = (v.lane, v.speed);
            for (d, &x) in self.cfg.network.detectors.iter().enumerate() {
                if prev < x && out.pos >= x {
                    let t = t0 + dt * (x - prev) / (out.pos - prev);
                    self.log.detectors.push(DetectorRow { detector: d, t, id, lane, speed });
                }
            }
            if let Some(grid) = self.log.edie.as_mut() {
                grid.add_segment(t0, prev, t0 + dt, out.pos);
            }
        }
        // a collision can reorder a lane
        for lane in 0..self.lanes.len() {
            let vehicles = &self.vehicles;
            self.lanes[lane].sort_by(|&a, &b| {
                let pa = vehicles[a].as_ref().map_or(0.0, |v| v.pos);
                let pb = vehicles[b].as_ref().map_or(0.0, |v| v.pos);
                pb.total_cmp(&pa)
            });
        }
    }

    fn check_gaps(&mut self) {
        for lane in 0..self.lanes.len() {
            for k in 0..self.lanes[lane].len() {
                let Some(l) = self.leader_at(lane, k) else { continue };
                let id = self.lanes[lane][k];
                let gap = l.pos - l.length - self.veh(id).pos;
                if gap < 0.0 {
                    self.log.collisions += 1;
                    if self.log.collisions <= MAX_STORED_COLLISIONS {
                        self.log.events.push(SimEvent::Collision { t: self.t, id, gap });
                    }
                }
            }
        }
    }

    fn remove_exits(&mut self) {
        let length = self.cfg.network.length;
        for lane in 0..self.cfg.network.mainline_lanes {
            while let Some(&front) = self.lanes[lane].first() {
                if self.veh(front).pos <= length {
                    break;
                }
                self.lanes[lane].remove(0);
                self.vehicles[front] = None;
                self.exited += 1;
            }
        }
    }

    fn env(&self) -> CfEnv<'_, f64> {
        CfEnv { t: self.t, dt: self.cfg.dt, relax: self.cfg.relaxation.as_ref() }
    }

    fn side_lane(&self, lane: usize, side: Side) -> Option<usize> {
        let net = &self.cfg.network;
        match side {
            Side::Left if lane > 0 => Some(lane - 1),
            Side::Right if lane < net.right_lane() => Some(lane + 1),
            _ => None,
        }
    }

    /// Side leader, side follower and the side follower's follower of a vehicle at `pos`.
    fn side_neighbors(&self, lane: usize, pos: f64) -> (Option<usize>, Option<usize>, Option<usize>) {
        let ids = &self.lanes[lane];
        let k = self.slot(lane, pos);
        (k.checked_sub(1).map(|i| ids[i]), ids.get(k).copied(), ids.get(k + 1).copied())
    }

    fn decide_lane_changes(&mut self) -> Vec<PendingChange> {
        let net = self.cfg.network.clone();
        let p = self.cfg.lc;
        let ramp = net.ramp_lane();
        let mut changes = Vec::new();
        let mut coop: Vec<(usize, f64)> = Vec::new();
        let order: Vec<(usize, usize)> =
            self.lanes.iter().flat_map(|ids| ids.iter().copied().enumerate()).collect();
        for (k, id) in order {
            let lane = self.veh(id).lane;
            let env = self.env();
            let ego = self.veh(id);
            let mut state = ego.lc;
            let mut tactical = None;
            if lane == ramp {
                if !net.in_merge_section(ego.pos) {
                    state = LcState::new();
                } else {
                    state.mode = LcMode::Mandatory;
                    let target = net.right_lane();
                    let (sl, sf, sff) = self.side_neighbors(target, ego.pos);
                    let slv = sl.map(|i| self.veh(i).view());
                    let sfv = sf.map(|i| self.veh(i).view());
                    let safety = check_safety(&ego.view(), slv.as_ref(), sfv.as_ref(), &env, &p);
                    match mandatory_step(Side::Left, safety) {
                        LcDecision::Change(side) => changes.push(PendingChange { id, side, discretionary: false }),
                        LcDecision::Tactical { safety, .. } => {
                            let sffv = sff.map(|i| self.veh(i).view());
                            let plan = tactical_cooperation(
                                &ego.view(),
                                sfv.as_ref(),
                                sffv.as_ref(),
                                &safety,
                                true,
                                state.cooperating_with,
                                &mut self.rng.clone(),
                                &p,
                            );
                            tactical = Some(plan);
                        }
                        LcDecision::Stay => {}
                    }
                }
            } else {
                let leader = k.checked_sub(1).map(|i| self.veh(self.lanes[lane][i]).view());
                let follower = self.lanes[lane].get(k + 1).map(|&i| self.veh(i).view());
                let ego_view = ego.view();
                let mut side_info = Vec::with_capacity(2);
                let eval = |side: Side| -> Option<SideEval<f64>> {
                    let target = self.side_lane(lane, side)?;
                    let (sl, sf, sff) = self.side_neighbors(target, ego_view.pos);
                    let n = Neighborhood {
                        ego: ego_view,
                        leader,
                        follower,
                        side_leader: sl.map(|i| self.veh(i).view()),
                        side_follower: sf.map(|i| self.veh(i).view()),
                    };
                    let incentive = mobil_incentive(&n, side, &env, &p);
                    let safety = check_safety(&ego_view, n.side_leader.as_ref(), n.side_follower.as_ref(), &env, &p);
                    side_info.push((side, sf, sff));
                    Some(SideEval { incentive, safety })
                };
                let mut rng = self.rng.clone();
                let decision = discretionary_step(&mut state, &mut rng, &p, eval);
                match decision {
                    LcDecision::Change(side) => changes.push(PendingChange { id, side, discretionary: true }),
                    LcDecision::Tactical { side, safety } => {
                        let (_, sf, sff) = side_info.iter().copied().find(|s| s.0 == side).expect("evaluated side");
                        let sfv = sf.map(|i| self.veh(i).view());
                        let sffv = sff.map(|i| self.veh(i).view());
                        let plan = tactical_cooperation(
                            &ego_view,
                            sfv.as_ref(),
                            sffv.as_ref(),
                            &safety,
                            false,
                            state.cooperating_with,
                            &mut rng,
                            &p,
                        );
                        tactical = Some(plan);
                    }
                    LcDecision::Stay => {}
                }
                self.rng = rng;
            }
            match tactical {
                Some(plan) => {
                    state.tactical = plan.ego_adjust;
                    state.cooperating_with = plan.coop.map(|c| c.0);
                    if let Some(c) = plan.coop {
                        coop.push(c);
                    }
                }
                None => state.clear_tactical(),
            }
            self.veh_mut(id).lc = state;
        }
        for id in self.lanes.iter().flatten().copied().collect::<Vec<_>>() {
            self.veh_mut(id).coop_adjust = 0.0;
        }
        for (id, a) in coop {
            if let Some(v) = self.vehicle_mut(id) {
                v.coop_adjust = a;
            }
        }
        changes
    }

    /// Moves a vehicle one lane to `side`, bypassing the lane-changing model.
    pub fn force_lane_change(&mut self, id: usize, side: Side) -> Result<bool> {
        if self.vehicle(id).is_none() {
            return Err(Error::InvalidArgument(format!("no vehicle {id}")));
        }
        self.apply_change(PendingChange { id, side, discretionary: false }, false)
    }

    fn target_lane(&self, lane: usize, side: Side) -> Option<usize> {
        let net = &self.cfg.network;
        if net.is_ramp(lane) {
            return (side == Side::Left).then(|| net.right_lane());
        }
        self.side_lane(lane, side)
    }

    /// Applies a change on the current state. With `revalidate`, the change is dropped unless
    /// it is still safe. Returns whether the vehicle moved.
    fn apply_change(&mut self, ch: PendingChange, revalidate: bool) -> Result<bool> {
        let ego_id = ch.id;
        let lane = self.veh(ego_id).lane;
        let Some(target) = self.target_lane(lane, ch.side) else { return Ok(false) };
        let from_ramp = self.cfg.network.is_ramp(lane);
        let k = self.index_in_lane(ego_id);
        let ego_pos = self.veh(ego_id).pos;
        let (new_leader, new_follower, _) = self.side_neighbors(target, ego_pos);
        if revalidate {
            let env = self.env();
            let ego = self.veh(ego_id).view();
            let sl = new_leader.map(|i| self.veh(i).view());
            let sf = new_follower.map(|i| self.veh(i).view());
            if !check_safety(&ego, sl.as_ref(), sf.as_ref(), &env, &self.cfg.lc).safe() {
                return Ok(false);
            }
        }
        let old_leader = k.checked_sub(1).map(|i| self.lanes[lane][i]);
        let old_follower = self.lanes[lane].get(k + 1).copied();
        let ego_leader_state = old_leader.map(|i| self.veh(i).leader_state());
        let ego_state = self.veh(ego_id).leader_state();

        self.lanes[lane].remove(k);
        let at = self.slot(target, ego_pos);
        self.lanes[target].insert(at, ego_id);
        let lc = self.cfg.lc;
        {
            let ego = self.veh_mut(ego_id);
            ego.lane = target;
            let coop = ego.lc.cooperating_with;
            ego.lc.on_change(&lc, ch.discretionary);
            if let Some(c) = coop {
                if let Some(v) = self.vehicle_mut(c) {
                    v.coop_adjust = 0.0;
                }
            }
        }
        self.log.lane_changes += 1;
        self.log.events.push(SimEvent::LaneChange { t: self.t, id: ego_id, from: lane, to: target });

        if let Some(cfg) = self.cfg.relaxation.clone() {
            let t_lc = self.t - self.cfg.dt;
            let new_leader_state = new_leader.map(|i| self.veh(i).leader_state());
            if let Some(nl) = new_leader_state {
                let prior = match ego_leader_state {
                    Some(ol) if !from_ramp => PriorLeader::Vehicle(ol),
                    _ => PriorLeader::Merge,
                };
                self.register(ego_id, prior, nl, t_lc, &cfg)?;
            }
            if let (Some(f), Some(ol)) = (old_follower, ego_leader_state) {
                self.register(f, PriorLeader::Vehicle(ego_state), ol, t_lc, &cfg)?;
            }
            if let Some(f) = new_follower {
                let prior = new_leader_state.map_or(PriorLeader::Merge, PriorLeader::Vehicle);
                self.register(f, prior, ego_state, t_lc, &cfg)?;
            }
        }
        Ok(true)
    }

    fn register(
        &mut self,
        id: usize,
        prior: PriorLeader<f64>,
        new_leader: LeaderState<f64>,
        t_lc: f64,
        cfg: &RelaxationConfig,
    ) -> Result<()> {
        let v = self.vehicles[id].as_mut().expect("live vehicle");
        let ego = EgoState { pos: v.pos, speed: v.speed };
        register_leader_change(&mut v.relax, &ego, prior, &new_leader, t_lc, cfg, &v.params)?;
        Ok(())
    }

    /// Demanded vehicles not yet inserted, by lane.
    pub fn backlog(&self) -> &[f64] {
        &self.buffers
    }

    fn process_inflows(&mut self) -> Result<()> {
        let dt = self.cfg.dt;
        for lane in 0..self.lanes.len() {
            let schedule = if self.cfg.network.is_ramp(lane) { &self.cfg.onramp_inflow } else { &self.cfg.mainline_inflow };
            self.buffers[lane] += schedule.rate(self.t) / 3600.0 * dt;
            if self.buffers[lane] >= 1.0 {
                if let Some(speed) = self.admission_speed(lane)? {
                    let start = self.cfg.network.lane_start(lane);
                    self.insert_vehicle(lane, start, speed, None)?;
                    self.buffers[lane] -= 1.0;
                }
            }
        }
        Ok(())
    }

    /// Insertion speed for a new vehicle at the start of `lane`, or `None` if the headway to
    /// the last vehicle is too short.
    fn admission_speed(&self, lane: usize) -> Result<Option<f64>> {
        let p = &self.cfg.cf;
        let vmax = p.max_speed();
        let Some(&last) = self.lanes[lane].last() else {
            return Ok(Some(vmax.unwrap_or(0.0)));
        };
        let l = self.veh(last);
        let s = l.pos - l.length - self.cfg.network.lane_start(lane);
        if !(s > 0.0) {
            return Ok(None);
        }
        let s_eql = |v: f64| {
            let v = match vmax {
                Some(m) => v.min(0.999 * m),
                None => v,
            };
            p.equilibrium_headway(v)
        };
        // v0 = max(v_lead, v_eql(s)); if v_eql(s) wins then s = s_eql(v0) and the test passes
        if s > s_eql(l.speed)? {
            return Ok(Some(p.equilibrium_speed(s)));
        }
        let v0 = l.speed;
        let b = if v0 > self.cfg.boundary.b2 { self.cfg.boundary.b1 } else { 1.0 };
        Ok((s >= b * s_eql(v0)?).then_some(v0))
    }

    fn record_trajectories(&mut self) {
        if !self.cfg.record.trajectories {
            return;
        }
        let t = self.t;
        let rows: Vec<_> = self
            .vehicles()
            .map(|v| TrajectoryRow { t, id: v.id, lane: v.lane, pos: v.pos, speed: v.speed, accel: v.accel })
            .collect();
        self.log.trajectories.extend(rows);
    }
}

/// Runs `cfg` from an empty road to its horizon.
pub fn run(cfg: SimConfig) -> Result<SimLog> {
    World::new(cfg)?.run()
}
