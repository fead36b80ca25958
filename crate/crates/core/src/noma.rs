//! Two-user NOMA: pairing, fractional transmit power allocation (FTPA),
//! SINR after perfect SIC, and the orthogonal (OMA) baseline.
//!
//! Users are ranked by effective gain (direct plus reflected). The k-th
//! weakest user shares a sub-band with the k-th strongest. Within a pair
//! the weak user decodes its own signal treating the strong user's as
//! interference; the strong user cancels the weak user's signal first.
//! Each user is served by its own bank of IRS elements, so the reflected
//! power adds to that user's numerator only.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{compute_link_gains, LinkGains, Placement};
use crate::scenario::{linear_to_db, ScenarioConfig};
use crate::{Error, Result};

/// The systems compared by the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "M-IRS-NOMA")]
    MobileIrsNoma,
    #[serde(rename = "S-IRS-NOMA")]
    StaticIrsNoma,
    #[serde(rename = "No-IRS-NOMA")]
    NoIrsNoma,
    #[serde(rename = "M-IRS-OMA")]
    MobileIrsOma,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::MobileIrsNoma,
        Scheme::StaticIrsNoma,
        Scheme::NoIrsNoma,
        Scheme::MobileIrsOma,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::MobileIrsNoma => "M-IRS-NOMA",
            Scheme::StaticIrsNoma => "S-IRS-NOMA",
            Scheme::NoIrsNoma => "No-IRS-NOMA",
            Scheme::MobileIrsOma => "M-IRS-OMA",
        }
    }

    pub fn index(self) -> u64 {
        match self {
            Scheme::MobileIrsNoma => 0,
            Scheme::StaticIrsNoma => 1,
            Scheme::NoIrsNoma => 2,
            Scheme::MobileIrsOma => 3,
        }
    }

    pub fn uses_irs(self) -> bool {
        self != Scheme::NoIrsNoma
    }

    pub fn access(self) -> Access {
        match self {
            Scheme::MobileIrsOma => Access::Oma,
            _ => Access::Noma,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Scheme::ALL
            .into_iter()
            .find(|k| k.label().to_ascii_lowercase() == key)
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Access {
    Noma,
    Oma,
}

/// One sub-band. `strong` is `None` for the leftover user of an odd
/// population, which gets the whole sub-band power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NomaPair {
    pub weak: usize,
    pub strong: Option<usize>,
    pub alpha_weak: f64,
    pub alpha_strong: f64,
}

/// Pairs the k-th weakest user with the k-th strongest. Ties in gain are
/// broken by user index (lower index ranks weaker). With an odd count the
/// median user is left as a singleton, listed last.
pub fn pair_users(gains: &[f64]) -> Result<Vec<(usize, Option<usize>)>> {
    if gains.is_empty() {
        return Err(Error::Domain("cannot pair an empty user set".into()));
    }
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[a].total_cmp(&gains[b]).then(a.cmp(&b)));
    let n = order.len();
    let mut pairs: Vec<(usize, Option<usize>)> = (0..n / 2)
        .map(|k| (order[k], Some(order[n - 1 - k])))
        .collect();
    if n % 2 == 1 {
        pairs.push((order[n / 2], None));
    }
    Ok(pairs)
}

/// FTPA split of one sub-band's power between the weak and strong user.
///
/// The fraction of user `i` is proportional to `(g_i / σ²)^(-decay)`, so the
/// weaker channel gets the larger share. `positive_exponent` flips the sign
/// (stronger channel gets more) for comparison runs.
pub fn ftpa_allocate(
    gain_weak: f64,
    gain_strong: f64,
    noise_power: f64,
    decay: f64,
    positive_exponent: bool,
) -> Result<(f64, f64)> {
    if !(gain_weak > 0.0 && gain_strong > 0.0 && noise_power > 0.0) {
        return Err(Error::Domain(format!(
            "FTPA needs positive gains and noise, got {gain_weak}, {gain_strong}, {noise_power}"
        )));
    }
    if !(0.0..=1.0).contains(&decay) {
        return Err(Error::Domain(format!(
            "FTPA decay must lie in [0, 1], got {decay}"
        )));
    }
    let exponent = if positive_exponent { decay } else { -decay };
    // Ratio of the strong user's weight to the weak user's; σ² cancels but is
    // kept so the normalized gains are what get exponentiated.
    let r = ((gain_strong / noise_power) / (gain_weak / noise_power)).powf(exponent);
    if r.is_infinite() {
        return Ok((0.0, 1.0));
    }
    Ok((1.0 / (1.0 + r), r / (1.0 + r)))
}

/// Weak-user SINR: own direct power plus reflected power over the strong
/// user's superposed power and noise.
pub fn weak_sinr(
    alpha_weak: f64,
    g_weak: f64,
    irs_weak: f64,
    alpha_strong: f64,
    g_strong: f64,
    rho: f64,
) -> f64 {
    (alpha_weak * g_weak + irs_weak) / (alpha_strong * g_strong + 1.0 / rho)
}

/// Strong-user SINR after the weak user's signal is cancelled.
pub fn strong_sinr(alpha_strong: f64, g_strong: f64, irs_strong: f64, rho: f64) -> f64 {
    (alpha_strong * g_strong + irs_strong) * rho
}

pub fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Weak,
    Strong,
    Single,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserOutcome {
    pub user: usize,
    pub pair_id: usize,
    pub role: Role,
    /// Share of the sub-band power (1 for OMA and singletons).
    pub alpha: f64,
    pub sinr: f64,
    /// bits/s/Hz
    pub rate: f64,
    pub feasible: bool,
}

/// Outcome of one slot for one scheme. `users` is indexed by user id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotResult {
    pub users: Vec<UserOutcome>,
    /// NOMA power splits; empty for OMA.
    pub pairs: Vec<NomaPair>,
    pub sum_rate: f64,
}

impl SlotResult {
    pub fn feasible_count(&self) -> usize {
        self.users.iter().filter(|u| u.feasible).count()
    }

    /// Writes `slot,scheme,user,pair_id,alpha,sinr_db,rate` rows (no header).
    pub fn write_rows<W: std::io::Write>(
        &self,
        w: &mut csv::Writer<W>,
        slot: usize,
        scheme: Scheme,
    ) -> csv::Result<()> {
        for u in &self.users {
            w.write_record(&[
                slot.to_string(),
                scheme.label().to_string(),
                u.user.to_string(),
                u.pair_id.to_string(),
                u.alpha.to_string(),
                linear_to_db(u.sinr).to_string(),
                u.rate.to_string(),
            ])?;
        }
        Ok(())
    }

    pub const CSV_HEADER: [&'static str; 7] = [
        "slot", "scheme", "user", "pair_id", "alpha", "sinr_db", "rate",
    ];
}

fn finish(mut users: Vec<UserOutcome>, pairs: Vec<NomaPair>) -> SlotResult {
    users.sort_by_key(|u| u.user);
    let sum_rate = users.iter().map(|u| u.rate).sum();
    SlotResult {
        users,
        pairs,
        sum_rate,
    }
}

/// NOMA slot evaluation from precomputed gains.
pub fn noma_from_gains(gains: &LinkGains, config: &ScenarioConfig) -> Result<SlotResult> {
    let d = config.derived();
    let p = &config.power;
    let eff = gains.effective();
    let mut users = Vec::with_capacity(eff.len());
    let mut pairs = Vec::new();
    for (pair_id, (w, s)) in pair_users(&eff)?.into_iter().enumerate() {
        match s {
            Some(s) => {
                let (aw, a_s) = ftpa_allocate(
                    eff[w].max(f64::MIN_POSITIVE),
                    eff[s].max(f64::MIN_POSITIVE),
                    d.noise_power_mw,
                    p.ftpa_decay,
                    p.ftpa_positive_exponent,
                )?;
                let gw = weak_sinr(aw, gains.uav[w], gains.irs[w], a_s, gains.uav[s], d.rho);
                let gs = strong_sinr(a_s, gains.uav[s], gains.irs[s], d.rho);
                for (user, role, alpha, sinr) in
                    [(w, Role::Weak, aw, gw), (s, Role::Strong, a_s, gs)]
                {
                    users.push(UserOutcome {
                        user,
                        pair_id,
                        role,
                        alpha,
                        sinr,
                        rate: rate(sinr),
                        feasible: sinr >= d.gamma_th,
                    });
                }
                pairs.push(NomaPair {
                    weak: w,
                    strong: Some(s),
                    alpha_weak: aw,
                    alpha_strong: a_s,
                });
            }
            None => {
                let sinr = strong_sinr(1.0, gains.uav[w], gains.irs[w], d.rho);
                users.push(UserOutcome {
                    user: w,
                    pair_id,
                    role: Role::Single,
                    alpha: 1.0,
                    sinr,
                    rate: rate(sinr),
                    feasible: sinr >= d.gamma_th,
                });
                pairs.push(NomaPair {
                    weak: w,
                    strong: None,
                    alpha_weak: 1.0,
                    alpha_strong: 0.0,
                });
            }
        }
    }
    Ok(finish(users, pairs))
}

/// OMA slot evaluation from precomputed gains: the two users of a pair each
/// get half of the sub-band at full power; a singleton gets all of it.
pub fn oma_from_gains(gains: &LinkGains, config: &ScenarioConfig) -> Result<SlotResult> {
    let d = config.derived();
    let eff = gains.effective();
    let mut users = Vec::with_capacity(eff.len());
    for (pair_id, (w, s)) in pair_users(&eff)?.into_iter().enumerate() {
        let share = if s.is_some() { 0.5 } else { 1.0 };
        for (user, role) in [(Some(w), Role::Weak), (s, Role::Strong)] {
            let Some(user) = user else { continue };
            let sinr = eff[user] * d.rho;
            users.push(UserOutcome {
                user,
                pair_id,
                role: if s.is_some() { role } else { Role::Single },
                alpha: 1.0,
                sinr,
                rate: share * rate(sinr),
                feasible: sinr >= d.gamma_th,
            });
        }
    }
    Ok(finish(users, Vec::new()))
}

/// Slot sum rate under NOMA. `use_irs = false` zeroes the reflected link,
/// which is the no-IRS system; the IRS position in `placement` then has no
/// effect.
pub fn slot_sum_rate(
    placement: &Placement,
    users: &[[f64; 2]],
    config: &ScenarioConfig,
    use_irs: bool,
) -> Result<SlotResult> {
    let gains = compute_link_gains(placement, users, config)?;
    let gains = if use_irs { gains } else { gains.without_irs() };
    noma_from_gains(&gains, config)
}

pub fn oma_slot_sum_rate(
    placement: &Placement,
    users: &[[f64; 2]],
    config: &ScenarioConfig,
) -> Result<SlotResult> {
    oma_from_gains(&compute_link_gains(placement, users, config)?, config)
}

/// Evaluates a placement under the access method and IRS usage of `scheme`.
pub fn evaluate_scheme(
    scheme: Scheme,
    placement: &Placement,
    users: &[[f64; 2]],
    config: &ScenarioConfig,
) -> Result<SlotResult> {
    match scheme.access() {
        Access::Noma => slot_sum_rate(placement, users, config, scheme.uses_irs()),
        Access::Oma => oma_slot_sum_rate(placement, users, config),
    }
}
