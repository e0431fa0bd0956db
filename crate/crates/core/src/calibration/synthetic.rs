//! Noise-free trajectory sets generated by a known model, for checking calibration.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::{TrajectoryDataset, VehicleTrajectory};
use super::replay::{replay_simulate, ReplayModel};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticScenario {
    /// Number of followers; leaders are added on top.
    pub followers: usize,
    /// s
    pub duration: f64,
    /// s
    pub dt: f64,
    /// m
    pub vehicle_length: f64,
}

impl Default for SyntheticScenario {
    fn default() -> Self {
        Self { followers: 20, duration: 60.0, dt: 0.1, vehicle_length: 4.5 }
    }
}

/// What happens to the leader of follower `i`; cycles through the patterns.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Pattern {
    Steady,
    CutIn,
    CutOut,
    Merge,
    Weave,
}

impl Pattern {
    fn of(i: usize) -> Self {
        [Pattern::Steady, Pattern::CutIn, Pattern::CutOut, Pattern::Merge, Pattern::Weave][i % 5]
    }
}

/// Smoothly oscillating speed profile.
struct Profile {
    base: f64,
    amp: f64,
    period: f64,
    phase: f64,
}

impl Profile {
    fn random(rng: &mut ChaCha8Rng, base: f64) -> Self {
        Self { base, amp: rng.gen_range(0.5..2.5), period: rng.gen_range(20.0..50.0), phase: rng.gen_range(0.0..TAU) }
    }

    fn speed(&self, t: f64) -> f64 {
        (self.base + self.amp * (TAU * t / self.period + self.phase).sin()).max(0.0)
    }

    /// Positions and speeds on the grid with `pos(t_ref) = x_ref` (trapezoidal integration).
    fn trajectory(&self, n: usize, dt: f64, k_ref: usize, x_ref: f64) -> (Vec<f64>, Vec<f64>) {
        let speed: Vec<f64> = (0..n).map(|k| self.speed(k as f64 * dt)).collect();
        let mut pos = vec![0.0; n];
        for k in 1..n {
            pos[k] = pos[k - 1] + 0.5 * (speed[k - 1] + speed[k]) * dt;
        }
        let shift = x_ref - pos[k_ref];
        pos.iter_mut().for_each(|x| *x += shift);
        (pos, speed)
    }
}

fn scripted(id: usize, n: usize, dt: f64, length: f64, profile: &Profile, k_ref: usize, x_ref: f64) -> VehicleTrajectory {
    let (pos, speed) = profile.trajectory(n, dt, k_ref, x_ref);
    VehicleTrajectory { id, t0: 0.0, pos, speed, lane: vec![1; n], leader: vec![None; n], length, merge: false }
}

/// Followers driven by `truth` behind scripted leaders, with cut-ins, cut-outs, merges and
/// repeated switches. Follower `i` has id `100 * (i + 1)`; its leaders use the ids above it.
/// Every leader switch happens at a whole frame, and the recorded `leader_id` changes on the
/// frame after the last one with the old leader.
pub fn make_synthetic_dataset(scenario: &SyntheticScenario, truth: &ReplayModel, seed: u64) -> Result<TrajectoryDataset> {
    if !(scenario.dt > 0.0 && scenario.duration > 20.0 * scenario.dt) {
        return Err(Error::InvalidArgument("synthetic scenario needs dt > 0 and a duration of at least 20 frames".into()));
    }
    let n = (scenario.duration / scenario.dt).round() as usize + 1;
    let (dt, len) = (scenario.dt, scenario.vehicle_length);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vehicles = BTreeMap::new();

    for i in 0..scenario.followers {
        let fid = 100 * (i + 1);
        let pattern = Pattern::of(i);
        let v0 = rng.gen_range(15.0..25.0);
        let x0 = 0.0;
        let first_leader = Profile::random(&mut rng, v0);
        let s0 = truth.cf.equilibrium_headway(first_leader.speed(0.0))?;

        let mut follower = VehicleTrajectory {
            id: fid,
            t0: 0.0,
            pos: vec![x0; n],
            speed: vec![first_leader.speed(0.0); n],
            lane: vec![1; n],
            leader: vec![Some(fid + 1); n],
            length: len,
            merge: pattern == Pattern::Merge,
        };
        let mut ds = TrajectoryDataset { dt, vehicles: BTreeMap::new() };
        let mut next_id = fid + 1;
        if pattern == Pattern::Merge {
            // free until the merge; the first leader is never followed
            follower.leader = vec![None; n];
            follower.lane = vec![2; n];
        } else {
            let lead = scripted(next_id, n, dt, len, &first_leader, 0, x0 + len + s0);
            ds.vehicles.insert(next_id, lead);
        }
        next_id += 1;

        // (frame of the switch, change of gap in m: positive closes the gap)
        let switches: Vec<(usize, f64)> = match pattern {
            Pattern::Steady => vec![],
            Pattern::CutIn => vec![(frac(n, rng.gen_range(0.25..0.5)), rng.gen_range(6.0..14.0))],
            Pattern::CutOut => vec![(frac(n, rng.gen_range(0.25..0.5)), -rng.gen_range(10.0..25.0))],
            Pattern::Merge => vec![(frac(n, rng.gen_range(0.1..0.3)), rng.gen_range(4.0..10.0))],
            Pattern::Weave => vec![
                (frac(n, 0.2), rng.gen_range(5.0..10.0)),
                (frac(n, 0.45), -rng.gen_range(8.0..16.0)),
                (frac(n, 0.7), rng.gen_range(5.0..10.0)),
            ],
        };

        for (k, closing) in switches {
            ds.vehicles.insert(fid, follower.clone());
            let sim = replay_simulate(&ds, fid, truth)?;
            // state at the first frame with the new leader
            let (xf, vf) = (sim.pos[k + 1], sim.speed[k + 1]);
            let gap_before = match follower.leader[k] {
                Some(l) => {
                    let lv = &ds.vehicles[&l];
                    lv.pos[k + 1] - lv.length - xf
                }
                None => truth.cf.equilibrium_headway(vf)?,
            };
            let gap = (gap_before - closing).max(truth.cf.jam_spacing() + 2.0);
            let base = vf + rng.gen_range(-1.0..1.0);
            let profile = Profile::random(&mut rng, base);
            let time_shifted = Profile { phase: profile.phase - TAU * (k + 1) as f64 * dt / profile.period, ..profile };
            let lead = scripted(next_id, n, dt, len, &time_shifted, k + 1, xf + len + gap);
            ds.vehicles.insert(next_id, lead);
            for l in follower.leader.iter_mut().skip(k + 1) {
                *l = Some(next_id);
            }
            if pattern == Pattern::Merge {
                for lane in follower.lane.iter_mut().skip(k + 1) {
                    *lane = 1;
                }
            }
            next_id += 1;
        }

        ds.vehicles.insert(fid, follower.clone());
        let sim = replay_simulate(&ds, fid, truth)?;
        follower.pos = sim.pos;
        follower.speed = sim.speed;
        ds.vehicles.insert(fid, follower);
        vehicles.append(&mut ds.vehicles);
    }
    Ok(TrajectoryDataset { dt, vehicles })
}

fn frac(n: usize, f: f64) -> usize {
    ((n as f64 * f) as usize).clamp(1, n - 2)
}
