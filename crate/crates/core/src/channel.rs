//! Air-to-ground and IRS channel models.
//!
//! The UAV-user link uses a blockage-averaged pathloss: the LoS and NLoS
//! log-distance pathlosses (in dB) are weighted by the probability that no
//! human body blocks the path. The IRS-user hop is always NLoS. Under ideal
//! phase alignment the `N` elements serving a user add coherently, so the
//! reflected power scales as `N²` times the per-element gain.
//!
//! Gains are deterministic functions of geometry; there is no small-scale
//! fading.

use serde::{Deserialize, Serialize};

use crate::scenario::{db_to_linear, BlockageParams, ChannelParams, LosModel, ScenarioConfig};
use crate::{Error, Result};

/// UAV position `(x, y, z)` and IRS vehicle position `(x, y)` for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub uav: [f64; 3],
    pub irs: [f64; 2],
}

pub fn distance_3d(uav: [f64; 3], user: [f64; 2]) -> f64 {
    let dx = uav[0] - user[0];
    let dy = uav[1] - user[1];
    (dx * dx + dy * dy + uav[2] * uav[2]).sqrt()
}

/// Distance between the UAV's ground projection and the user.
pub fn ground_distance(uav: [f64; 3], user: [f64; 2]) -> f64 {
    (uav[0] - user[0]).hypot(uav[1] - user[1])
}

fn log_distance(a: f64, b: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("pathloss needs d > 0, got {d}")));
    }
    Ok(a + 10.0 * b * d.log10())
}

/// LoS pathloss in dB.
pub fn pathloss_los(d: f64, p: &ChannelParams) -> Result<f64> {
    log_distance(p.a_los, p.b_los, d)
}

/// NLoS pathloss in dB.
pub fn pathloss_nlos(d: f64, p: &ChannelParams) -> Result<f64> {
    log_distance(p.a_nlos, p.b_nlos, d)
}

/// Probability that no human body blocks a UAV-user path with ground
/// distance `q` and UAV altitude `z`.
pub fn blockage_prob(q: f64, z: f64, b: &BlockageParams) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!(
            "UAV altitude must be positive, got {z}"
        )));
    }
    if !(q >= 0.0) {
        return Err(Error::Domain(format!(
            "ground distance must be >= 0, got {q}"
        )));
    }
    let p = (-b.density * b.diameter * q * b.height / z).exp();
    Ok(p.clamp(f64::MIN_POSITIVE, 1.0))
}

/// Elevation-angle sigmoid LoS probability.
pub fn sigmoid_los_prob(q: f64, z: f64, a: f64, b: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!(
            "UAV altitude must be positive, got {z}"
        )));
    }
    let theta = z.atan2(q).to_degrees();
    Ok((1.0 / (1.0 + a * (-b * (theta - a)).exp())).clamp(f64::MIN_POSITIVE, 1.0))
}

pub fn los_prob(
    uav: [f64; 3],
    user: [f64; 2],
    p: &ChannelParams,
    b: &BlockageParams,
) -> Result<f64> {
    let q = ground_distance(uav, user);
    match p.los_model {
        LosModel::HumanBlockage => blockage_prob(q, uav[2], b),
        LosModel::ElevationSigmoid => sigmoid_los_prob(q, uav[2], p.los_sigmoid_a, p.los_sigmoid_b),
    }
}

/// Blockage-averaged UAV-user pathloss in dB.
pub fn uav_link_pathloss(
    uav: [f64; 3],
    user: [f64; 2],
    p: &ChannelParams,
    b: &BlockageParams,
) -> Result<f64> {
    let d = distance_3d(uav, user);
    let p_los = los_prob(uav, user, p, b)?;
    let p_nlos = 1.0 - p_los;
    Ok(p_los * pathloss_los(d, p)? + p_nlos * pathloss_nlos(d, p)?)
}

/// Reflected-path power gain for one user: `N²` coherent elements times the
/// per-element NLoS gain, optionally times the UAV-to-IRS LoS leg, scaled
/// by the reflection coefficient.
pub fn irs_combined_gain(
    irs_vehicle: [f64; 2],
    irs_height: f64,
    uav: [f64; 3],
    user: [f64; 2],
    p: &ChannelParams,
) -> Result<f64> {
    let irs = [irs_vehicle[0], irs_vehicle[1], irs_height];
    let d_user = distance_3d(irs, user);
    let element = db_to_linear(-pathloss_nlos(d_user, p)?);
    let n = f64::from(p.irs_elements_per_user);
    let mut gain = n * n * element;
    if p.irs_uav_leg {
        let d_leg =
            ((uav[0] - irs[0]).powi(2) + (uav[1] - irs[1]).powi(2) + (uav[2] - irs[2]).powi(2))
                .sqrt();
        gain *= db_to_linear(-pathloss_los(d_leg, p)?);
    }
    Ok(gain * p.irs_reflection_coeff)
}

/// Per-user linear gains for one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkGains {
    /// UAV direct link `|h_i|²`.
    pub uav: Vec<f64>,
    /// Coherent IRS reflected link.
    pub irs: Vec<f64>,
}

impl LinkGains {
    pub fn len(&self) -> usize {
        self.uav.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uav.is_empty()
    }

    /// Direct plus reflected gain, used to rank users.
    pub fn effective(&self) -> Vec<f64> {
        self.uav.iter().zip(&self.irs).map(|(a, b)| a + b).collect()
    }

    pub fn without_irs(mut self) -> Self {
        self.irs.iter_mut().for_each(|g| *g = 0.0);
        self
    }
}

pub fn compute_link_gains(
    placement: &Placement,
    users: &[[f64; 2]],
    config: &ScenarioConfig,
) -> Result<LinkGains> {
    let c = &config.channel;
    let mut uav = Vec::with_capacity(users.len());
    let mut irs = Vec::with_capacity(users.len());
    for &u in users {
        uav.push(db_to_linear(-uav_link_pathloss(
            placement.uav,
            u,
            c,
            &config.blockage,
        )?));
        irs.push(irs_combined_gain(
            placement.irs,
            config.ga.irs_height,
            placement.uav,
            u,
            c,
        )?);
    }
    Ok(LinkGains { uav, irs })
}

/// One row of the channel debug dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDiagnostics {
    pub user: usize,
    pub d: f64,
    pub q: f64,
    pub p_los: f64,
    pub pathloss_db: f64,
    pub uav_gain: f64,
    pub irs_gain: f64,
}

pub fn diagnose_links(
    placement: &Placement,
    users: &[[f64; 2]],
    config: &ScenarioConfig,
) -> Result<Vec<LinkDiagnostics>> {
    let c = &config.channel;
    users
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let pathloss_db = uav_link_pathloss(placement.uav, u, c, &config.blockage)?;
            Ok(LinkDiagnostics {
                user: i,
                d: distance_3d(placement.uav, u),
                q: ground_distance(placement.uav, u),
                p_los: los_prob(placement.uav, u, c, &config.blockage)?,
                pathloss_db,
                uav_gain: db_to_linear(-pathloss_db),
                irs_gain: irs_combined_gain(
                    placement.irs,
                    config.ga.irs_height,
                    placement.uav,
                    u,
                    c,
                )?,
            })
        })
        .collect()
}
