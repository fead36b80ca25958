//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Every export takes plain numbers or strings and returns JSON text, so the
//! page needs no generated TypeScript types.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use uav_irs::channel::{blockage_prob, pathloss_los, pathloss_nlos, uav_link_pathloss};
use uav_irs::experiment::{ga_stream, trace_for_seed};
use uav_irs::noma::{ftpa_allocate, Scheme};
use uav_irs::optimizer::optimize_trajectory;
use uav_irs::scenario::{stream_rng, ScenarioConfig};

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// LoS and NLoS pathloss, blockage probability and averaged pathloss for a
/// UAV at `altitude`, sampled at `samples` ground distances in
/// `[0, max_ground]`.
pub fn channel_curves_json(
    altitude: f64,
    max_ground: f64,
    samples: usize,
) -> Result<Value, String> {
    if !(altitude > 0.0 && max_ground > 0.0 && samples >= 2) {
        return Err("altitude and range must be positive, samples at least 2".into());
    }
    let c = ScenarioConfig::default();
    let mut rows = Vec::with_capacity(samples);
    for i in 0..samples {
        let q = max_ground * i as f64 / (samples - 1) as f64;
        let d = (q * q + altitude * altitude).sqrt();
        let e = |e: uav_irs::Error| e.to_string();
        rows.push(json!({
            "q": q,
            "d": d,
            "los_db": pathloss_los(d, &c.channel).map_err(e)?,
            "nlos_db": pathloss_nlos(d, &c.channel).map_err(e)?,
            "p_los": blockage_prob(q, altitude, &c.blockage).map_err(e)?,
            "avg_db": uav_link_pathloss([0.0, 0.0, altitude], [q, 0.0], &c.channel, &c.blockage).map_err(e)?,
        }));
    }
    Ok(Value::Array(rows))
}

/// FTPA power fractions `{alpha_weak, alpha_strong}` for channel gains given
/// in dB and the decay factor.
pub fn ftpa_split_json(
    gain_weak_db: f64,
    gain_strong_db: f64,
    decay: f64,
) -> Result<Value, String> {
    let c = ScenarioConfig::default();
    let noise = c.derived().noise_power_mw;
    let gw = 10f64.powf(gain_weak_db / 10.0);
    let gs = 10f64.powf(gain_strong_db / 10.0);
    let (aw, as_) = ftpa_allocate(gw, gs, noise, decay, false).map_err(|e| e.to_string())?;
    Ok(json!({ "alpha_weak": aw, "alpha_strong": as_ }))
}

/// Drops `num_users` users with `seed` and runs the GA for one slot under
/// each scheme. Returns the user positions and per-scheme placements and rates.
pub fn place_slot_json(seed: u64, num_users: usize, generations: usize) -> Result<Value, String> {
    let mut c = ScenarioConfig::default();
    c.seed = seed;
    c.num_users = num_users;
    c.mobility.num_slots = 1;
    c.ga.max_iterations = generations;
    c.validate().map_err(|e| e.to_string())?;
    let trace = trace_for_seed(&c, seed).map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for scheme in Scheme::ALL {
        let run = optimize_trajectory(&trace, &c, scheme, &mut stream_rng(seed, ga_stream(scheme)))
            .map_err(|e| e.to_string())?;
        let p = run.placements[0];
        let r = &run.results[0];
        runs.push(json!({
            "scheme": scheme.label(),
            "uav": p.uav,
            "irs": if scheme.uses_irs() { json!(p.irs) } else { Value::Null },
            "sum_rate": r.sum_rate,
            "feasible": r.feasible_count(),
            "rates": r.users.iter().map(|u| (u.user, u.rate)).collect::<Vec<_>>(),
        }));
    }
    Ok(json!({
        "region": [c.region.x_min, c.region.y_min, c.region.x_max, c.region.y_max],
        "users": trace.slot(0),
        "runs": runs,
    }))
}

#[wasm_bindgen]
pub fn channel_curves(altitude: f64, max_ground: f64, samples: usize) -> Result<String, JsValue> {
    channel_curves_json(altitude, max_ground, samples)
        .map(|v| v.to_string())
        .map_err(js_err)
}

#[wasm_bindgen]
pub fn ftpa_split(gain_weak_db: f64, gain_strong_db: f64, decay: f64) -> Result<String, JsValue> {
    ftpa_split_json(gain_weak_db, gain_strong_db, decay)
        .map(|v| v.to_string())
        .map_err(js_err)
}

#[wasm_bindgen]
pub fn place_slot(seed: u32, num_users: usize, generations: usize) -> Result<String, JsValue> {
    place_slot_json(seed as u64, num_users, generations)
        .map(|v| v.to_string())
        .map_err(js_err)
}
