use std::io::Write;

use crate::error::Result;
use crate::measurement::EdieGrid;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub id: usize,
    pub lane: usize,
    pub pos: f64,
    pub speed: f64,
    pub accel: f64,
}

/// One detector crossing; `t` is interpolated within the step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorRow {
    pub detector: usize,
    pub t: f64,
    pub id: usize,
    pub lane: usize,
    pub speed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SimEvent {
    LaneChange { t: f64, id: usize, from: usize, to: usize },
    Collision { t: f64, id: usize, gap: f64 },
}

#[derive(Clone, Debug, Default)]
pub struct SimLog {
    pub trajectories: Vec<TrajectoryRow>,
    pub detectors: Vec<DetectorRow>,
    pub events: Vec<SimEvent>,
    pub lane_changes: usize,
    pub collisions: usize,
    pub edie: Option<EdieGrid>,
}

impl SimLog {
    /// Crossings of one detector, in time order.
    pub fn detector(&self, detector: usize) -> Vec<DetectorRow> {
        let mut rows: Vec<_> = self.detectors.iter().filter(|r| r.detector == detector).copied().collect();
        rows.sort_by(|a, b| a.t.total_cmp(&b.t));
        rows
    }

    /// CSV with header `t,veh_id,lane,pos,speed,accel`.
    pub fn write_trajectories<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "veh_id", "lane", "pos", "speed", "accel"])?;
        for r in &self.trajectories {
            out.serialize((r.t, r.id, r.lane, r.pos, r.speed, r.accel))?;
        }
        out.flush()?;
        Ok(())
    }

    /// CSV with header `detector_id,t,veh_id,lane,speed`.
    pub fn write_detectors<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["detector_id", "t", "veh_id", "lane", "speed"])?;
        for r in &self.detectors {
            out.serialize((r.detector, r.t, r.id, r.lane, r.speed))?;
        }
        out.flush()?;
        Ok(())
    }

    /// CSV with header `t,kind,veh_id,from_lane,to_lane,gap`.
    pub fn write_events<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "kind", "veh_id", "from_lane", "to_lane", "gap"])?;
        for e in &self.events {
            match *e {
                SimEvent::LaneChange { t, id, from, to } => {
                    out.write_record([t.to_string(), "lane_change".into(), id.to_string(), from.to_string(), to.to_string(), String::new()])?
                }
                SimEvent::Collision { t, id, gap } => {
                    out.write_record([t.to_string(), "collision".into(), id.to_string(), String::new(), String::new(), gap.to_string()])?
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}
