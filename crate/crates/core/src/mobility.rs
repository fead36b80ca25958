//! Random Waypoint mobility.
//!
//! Each user walks in a straight line toward a waypoint drawn uniformly over
//! the region, at a speed drawn uniformly from `[speed_min, speed_max]`.
//! On arrival it pauses for `pause_s`, then draws a new waypoint and speed.
//! Positions are integrated with a fixed sub-step and recorded at slot
//! boundaries; slot 1 holds the initial drop.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scenario::{MobilityParams, Region, ScenarioConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub id: usize,
    pub position: [f64; 2],
    pub waypoint: [f64; 2],
    /// m/s
    pub speed: f64,
    /// s
    pub pause_remaining: f64,
    /// Set on arrival; the next move phase draws a fresh waypoint and speed.
    pub arrived: bool,
}

fn uniform_point<R: Rng + ?Sized>(region: &Region, rng: &mut R) -> [f64; 2] {
    [
        rng.gen_range(region.x_min..=region.x_max),
        rng.gen_range(region.y_min..=region.y_max),
    ]
}

fn draw_speed<R: Rng + ?Sized>(m: &MobilityParams, rng: &mut R) -> f64 {
    rng.gen_range(m.speed_min..=m.speed_max)
}

/// Drops `num_users` users uniformly over the initial subregion. Random draws
/// per user, in order: position x, position y, waypoint x, waypoint y, speed.
pub fn init_users<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<Vec<UserState>> {
    let sub = &config.mobility.initial_subregion;
    if !config.region.contains_region(sub) {
        return Err(Error::validation(
            "MobilityParams.initial_subregion",
            "must lie inside the region",
        ));
    }
    Ok((0..config.num_users)
        .map(|id| {
            let position = uniform_point(sub, rng);
            let waypoint = uniform_point(&config.region, rng);
            let speed = draw_speed(&config.mobility, rng);
            UserState {
                id,
                position,
                waypoint,
                speed,
                pause_remaining: 0.0,
                arrived: false,
            }
        })
        .collect())
}

/// Advances one user by `dt` seconds.
pub fn step<R: Rng + ?Sized>(
    user: &UserState,
    dt: f64,
    region: &Region,
    mobility: &MobilityParams,
    rng: &mut R,
) -> UserState {
    debug_assert!(dt > 0.0);
    let mut next = user.clone();
    if next.pause_remaining > 0.0 {
        next.pause_remaining = (next.pause_remaining - dt).max(0.0);
        return next;
    }
    if next.arrived {
        next.waypoint = uniform_point(region, rng);
        next.speed = draw_speed(mobility, rng);
        next.arrived = false;
    }

    let dx = next.waypoint[0] - next.position[0];
    let dy = next.waypoint[1] - next.position[1];
    let remaining = dx.hypot(dy);
    let travel = next.speed * dt;
    if travel >= remaining {
        next.position = next.waypoint;
        next.pause_remaining = mobility.pause_s;
        next.arrived = true;
    } else if travel > 0.0 {
        let f = travel / remaining;
        next.position = region.clamp([next.position[0] + dx * f, next.position[1] + dy * f]);
    }
    next
}

/// User positions at every slot boundary, indexed `[slot][user]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityTrace {
    pub positions: Vec<Vec<[f64; 2]>>,
}

impl MobilityTrace {
    pub fn num_slots(&self) -> usize {
        self.positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    pub fn slot(&self, t: usize) -> &[[f64; 2]] {
        &self.positions[t]
    }

    /// Writes `slot,user_id,x,y` rows; slots are numbered from 1.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot", "user_id", "x", "y"])?;
        for (t, users) in self.positions.iter().enumerate() {
            for (i, p) in users.iter().enumerate() {
                w.write_record(&[
                    (t + 1).to_string(),
                    i.to_string(),
                    p[0].to_string(),
                    p[1].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `slot,user_id,x,y` table. Every slot must list the same
    /// users `0..n` exactly once.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            slot: usize,
            user_id: usize,
            x: f64,
            y: f64,
        }
        let mut rdr = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for rec in rdr.deserialize() {
            let row: Row = rec.map_err(|e| Error::Format(format!("trace table: {e}")))?;
            rows.push(row);
        }
        let slots = rows.iter().map(|r| r.slot).max().unwrap_or(0);
        let users = rows.iter().map(|r| r.user_id + 1).max().unwrap_or(0);
        if rows.is_empty() || rows.iter().any(|r| r.slot == 0) {
            return Err(Error::Format(
                "trace table needs rows with slots numbered from 1".into(),
            ));
        }
        let mut cells = vec![vec![None; users]; slots];
        for r in rows {
            let cell = &mut cells[r.slot - 1][r.user_id];
            if cell.is_some() {
                return Err(Error::Format(format!(
                    "duplicate entry for slot {} user {}",
                    r.slot, r.user_id
                )));
            }
            *cell = Some([r.x, r.y]);
        }
        let positions = cells
            .into_iter()
            .enumerate()
            .map(|(t, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(i, p)| {
                        p.ok_or_else(|| Error::Format(format!("missing slot {} user {i}", t + 1)))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MobilityTrace { positions })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f))
    }

    /// Checks the trace fits the scenario's region and slot count.
    pub fn check_against(&self, config: &ScenarioConfig) -> Result<()> {
        if self.num_slots() < config.mobility.num_slots {
            return Err(Error::Format(format!(
                "trace has {} slots, scenario needs {}",
                self.num_slots(),
                config.mobility.num_slots
            )));
        }
        if self.num_users() == 0 {
            return Err(Error::Format("trace has no users".into()));
        }
        if let Some(p) = self
            .positions
            .iter()
            .flatten()
            .find(|p| !config.region.contains(**p))
        {
            return Err(Error::Format(format!(
                "trace position ({}, {}) outside the region",
                p[0], p[1]
            )));
        }
        Ok(())
    }
}

/// Simulates all users for `num_slots` slots.
///
/// Each slot is split into `ceil(slot_duration / substep)` equal sub-steps;
/// users are stepped in id order within each sub-step.
pub fn generate_trace<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<MobilityTrace> {
    let m = &config.mobility;
    let mut users = init_users(config, rng)?;
    let steps = (m.slot_duration_s / m.substep_s).ceil().max(1.0) as usize;
    let dt = m.slot_duration_s / steps as f64;

    let mut positions = Vec::with_capacity(m.num_slots);
    positions.push(users.iter().map(|u| u.position).collect::<Vec<_>>());
    for _ in 1..m.num_slots {
        for _ in 0..steps {
            for u in users.iter_mut() {
                *u = step(u, dt, &config.region, m, rng);
            }
        }
        positions.push(users.iter().map(|u| u.position).collect());
    }
    Ok(MobilityTrace { positions })
}
