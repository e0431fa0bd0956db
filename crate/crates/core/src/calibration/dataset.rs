use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Deserialize;

use crate::error::{Error, Result};

/// Recorded trajectory of one vehicle on a uniform time grid starting at `t0`.
#[derive(Clone, Debug, PartialEq)]
pub struct VehicleTrajectory {
    pub id: usize,
    /// s
    pub t0: f64,
    /// Front bumper, m.
    pub pos: Vec<f64>,
    /// m/s
    pub speed: Vec<f64>,
    pub lane: Vec<i64>,
    pub leader: Vec<Option<usize>>,
    /// m
    pub length: f64,
    /// Entered from an on-ramp.
    pub merge: bool,
}

impl VehicleTrajectory {
    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    /// Frames at which the vehicle last follows its old leader, one per leader change.
    pub fn leader_changes(&self) -> Vec<usize> {
        self.leader.windows(2).enumerate().filter(|(_, w)| w[0] != w[1] && w[1].is_some()).map(|(k, _)| k).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryDataset {
    /// s
    pub dt: f64,
    pub vehicles: BTreeMap<usize, VehicleTrajectory>,
}

/// One CSV row; `leader_id` is empty when there is no leader.
#[derive(Debug, Deserialize)]
struct Row {
    veh_id: usize,
    t: f64,
    pos: f64,
    speed: f64,
    lane: i64,
    leader_id: Option<usize>,
    length: f64,
    merge: u8,
}

/// Header of the dataset CSV.
pub const DATASET_HEADER: [&str; 8] = ["veh_id", "t", "pos", "speed", "lane", "leader_id", "length", "merge"];

/// Relative tolerance on the frame spacing.
const DT_TOL: f64 = 1e-6;

impl TrajectoryDataset {
    pub fn vehicle(&self, id: usize) -> Option<&VehicleTrajectory> {
        self.vehicles.get(&id)
    }

    /// Time of frame `k` of vehicle `v`.
    pub fn time(&self, v: &VehicleTrajectory, k: usize) -> f64 {
        v.t0 + k as f64 * self.dt
    }

    /// Frame of `v` at time `t`, if recorded.
    pub fn frame_at(&self, v: &VehicleTrajectory, t: f64) -> Option<usize> {
        let k = ((t - v.t0) / self.dt).round();
        (k >= 0.0 && (k as usize) < v.len() && (v.t0 + k * self.dt - t).abs() < 1e-6 * self.dt.max(1.0))
            .then_some(k as usize)
    }

    /// Whether every leader referenced by `id` is recorded at the frames it is referenced.
    pub fn has_leader_coverage(&self, id: usize) -> bool {
        let Some(v) = self.vehicle(id) else { return false };
        v.leader.iter().enumerate().all(|(k, l)| match l {
            None => true,
            Some(l) => self.vehicle(*l).is_some_and(|lv| self.frame_at(lv, self.time(v, k)).is_some()),
        })
    }

    /// Vehicles that follow a recorded leader at some point and have full leader coverage.
    pub fn calibratable(&self) -> Vec<usize> {
        self.vehicles
            .values()
            .filter(|v| v.leader.iter().any(Option::is_some) && self.has_leader_coverage(v.id))
            .map(|v| v.id)
            .collect()
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(r);
        let headers = reader.headers()?.clone();
        for col in DATASET_HEADER {
            if !headers.iter().any(|h| h == col) {
                return Err(Error::Dataset(format!("missing column `{col}`")));
            }
        }
        let mut rows: Vec<Row> = Vec::new();
        for row in reader.deserialize() {
            rows.push(row?);
        }
        Self::from_rows(rows)
    }

    fn from_rows(mut rows: Vec<Row>) -> Result<Self> {
        rows.sort_by(|a, b| a.veh_id.cmp(&b.veh_id).then(a.t.total_cmp(&b.t)));
        let mut vehicles: BTreeMap<usize, VehicleTrajectory> = BTreeMap::new();
        let mut dt: Option<f64> = None;
        let mut last_t: BTreeMap<usize, f64> = BTreeMap::new();
        for r in rows {
            if !(r.t.is_finite() && r.pos.is_finite() && r.speed.is_finite() && r.length > 0.0) {
                return Err(Error::Dataset(format!("vehicle {} at t = {}: non-finite or invalid values", r.veh_id, r.t)));
            }
            if let Some(&prev) = last_t.get(&r.veh_id) {
                let step = r.t - prev;
                match dt {
                    None => dt = Some(step),
                    Some(d) if (step - d).abs() > DT_TOL * d.max(1.0) => {
                        return Err(Error::Dataset(format!(
                            "vehicle {} has frame spacing {step} s, expected {d} s",
                            r.veh_id
                        )))
                    }
                    _ => {}
                }
            }
            last_t.insert(r.veh_id, r.t);
            let v = vehicles.entry(r.veh_id).or_insert_with(|| VehicleTrajectory {
                id: r.veh_id,
                t0: r.t,
                pos: Vec::new(),
                speed: Vec::new(),
                lane: Vec::new(),
                leader: Vec::new(),
                length: r.length,
                merge: r.merge != 0,
            });
            v.pos.push(r.pos);
            v.speed.push(r.speed);
            v.lane.push(r.lane);
            v.leader.push(r.leader_id);
        }
        let dt = dt.ok_or_else(|| Error::Dataset("need at least one vehicle with two frames".into()))?;
        if !(dt > 0.0) {
            return Err(Error::Dataset("duplicate frame times".into()));
        }
        Ok(Self { dt, vehicles })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(DATASET_HEADER)?;
        for v in self.vehicles.values() {
            for k in 0..v.len() {
                out.write_record([
                    v.id.to_string(),
                    format!("{}", self.time(v, k)),
                    format!("{}", v.pos[k]),
                    format!("{}", v.speed[k]),
                    v.lane[k].to_string(),
                    v.leader[k].map_or(String::new(), |l| l.to_string()),
                    format!("{}", v.length),
                    u8::from(v.merge).to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Column mapping of the NGSim trajectory files (US feet, 0.1 s frames).
#[derive(Clone, Debug)]
pub struct NgsimOptions {
    /// Lanes that count as on-ramps; vehicles first seen there are flagged as merges.
    pub ramp_lanes: Vec<i64>,
    /// Seconds per frame.
    pub frame_dt: f64,
}

impl Default for NgsimOptions {
    fn default() -> Self {
        Self { ramp_lanes: vec![7], frame_dt: 0.1 }
    }
}

const FT: f64 = 0.3048;

#[derive(Debug, Deserialize)]
struct NgsimRow {
    #[serde(rename = "Vehicle_ID")]
    vehicle_id: usize,
    #[serde(rename = "Frame_ID")]
    frame_id: u64,
    #[serde(rename = "Local_Y")]
    local_y: f64,
    #[serde(rename = "v_Vel")]
    v_vel: f64,
    #[serde(rename = "v_Length")]
    v_length: f64,
    #[serde(rename = "Lane_ID")]
    lane_id: i64,
    #[serde(rename = "Preceding")]
    preceding: usize,
}

/// Columns read from an NGSim file; others are ignored.
pub const NGSIM_COLUMNS: [&str; 7] = ["Vehicle_ID", "Frame_ID", "Local_Y", "v_Vel", "v_Length", "Lane_ID", "Preceding"];

/// Reads an NGSim CSV: feet become metres, `Preceding = 0` means no leader.
pub fn read_ngsim<R: Read>(r: R, opts: &NgsimOptions) -> Result<TrajectoryDataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = reader.headers()?.clone();
    for col in NGSIM_COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Dataset(format!("missing column `{col}`")));
        }
    }
    let mut rows: Vec<Row> = Vec::new();
    let mut first_lane: BTreeMap<usize, (u64, i64)> = BTreeMap::new();
    for row in reader.deserialize() {
        let n: NgsimRow = row?;
        let e = first_lane.entry(n.vehicle_id).or_insert((n.frame_id, n.lane_id));
        if n.frame_id < e.0 {
            *e = (n.frame_id, n.lane_id);
        }
        rows.push(Row {
            veh_id: n.vehicle_id,
            t: n.frame_id as f64 * opts.frame_dt,
            pos: n.local_y * FT,
            speed: n.v_vel * FT,
            lane: n.lane_id,
            leader_id: (n.preceding != 0).then_some(n.preceding),
            length: n.v_length * FT,
            merge: 0,
        });
    }
    for r in &mut rows {
        r.merge = u8::from(opts.ramp_lanes.contains(&first_lane[&r.veh_id].1));
    }
    TrajectoryDataset::from_rows(rows)
}
