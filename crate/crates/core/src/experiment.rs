//! Multi-seed comparison of the M-IRS, static-IRS and no-IRS systems (and
//! the OMA baseline), with CSV and JSON output.
//!
//! Each seed gets one mobility trace shared by all schemes. Every scheme
//! then draws its GA randomness from its own stream of that seed; M-IRS and
//! S-IRS share a stream, so the static IRS is frozen exactly where the
//! mobile system put it in slot 1.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::Placement;
use crate::mobility::{generate_trace, MobilityTrace};
use crate::noma::{Scheme, SlotResult};
use crate::optimizer::{optimize_trajectory, GaRunRecord, TrajectoryRun};
use crate::scenario::{stream_rng, ScenarioConfig, SeedStream};
use crate::{Error, Result};

/// `100 (a - b) / b`.
pub fn improvement_pct(rate: f64, baseline: f64) -> f64 {
    100.0 * (rate - baseline) / baseline
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeRates {
    pub scheme: Scheme,
    /// Seed-averaged sum rate per slot, bits/s/Hz.
    pub per_slot: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub scheme: Scheme,
    pub baseline: Scheme,
    pub per_slot_pct: Vec<f64>,
    /// Mean of `per_slot_pct`.
    pub mean_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRates {
    pub seed: u64,
    pub scheme: Scheme,
    pub per_slot: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFractions {
    pub pair: usize,
    pub weak_user: usize,
    pub strong_user: Option<usize>,
    pub alpha_weak: f64,
    pub alpha_strong: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotFractions {
    pub slot: usize,
    pub pairs: Vec<PairFractions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeDetail {
    pub scheme: Scheme,
    pub placements: Vec<Placement>,
    pub slot_results: Vec<SlotResult>,
    pub convergence: Vec<GaRunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibleSlot {
    pub seed: u64,
    pub scheme: Scheme,
    pub slot: usize,
}

/// Seed-averaged comparison plus a detailed view of the first seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ScenarioConfig,
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
    pub num_slots: usize,
    pub rates: Vec<SchemeRates>,
    pub improvements: Vec<Improvement>,
    pub per_seed: Vec<SeedRates>,
    /// Seed whose trajectories, fractions and convergence are reported.
    pub detail_seed: Option<u64>,
    /// Power fractions of the first NOMA scheme on the detail seed.
    pub power_fractions: Vec<SlotFractions>,
    pub details: Vec<SchemeDetail>,
    /// Slots in which no user reached the SINR threshold.
    pub infeasible: Vec<InfeasibleSlot>,
}

impl ExperimentReport {
    pub fn rates_of(&self, scheme: Scheme) -> Option<&[f64]> {
        self.rates
            .iter()
            .find(|r| r.scheme == scheme)
            .map(|r| r.per_slot.as_slice())
    }

    pub fn improvement(&self, scheme: Scheme, baseline: Scheme) -> Option<&Improvement> {
        self.improvements
            .iter()
            .find(|i| i.scheme == scheme && i.baseline == baseline)
    }

    /// A report with no content, whose CSVs carry headers only.
    pub fn empty(config: ScenarioConfig) -> Self {
        ExperimentReport {
            config,
            seeds: Vec::new(),
            schemes: Vec::new(),
            num_slots: 0,
            rates: Vec::new(),
            improvements: Vec::new(),
            per_seed: Vec::new(),
            detail_seed: None,
            power_fractions: Vec::new(),
            details: Vec::new(),
            infeasible: Vec::new(),
        }
    }
}

/// Parses a comma-separated scheme list such as `M-IRS-NOMA,No-IRS-NOMA`.
pub fn parse_schemes(list: &str) -> Result<Vec<Scheme>> {
    let mut out: Vec<Scheme> = Vec::new();
    for part in list.split(',').filter(|s| !s.trim().is_empty()) {
        let s: Scheme = part.parse()?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    Ok(out)
}

/// GA stream used for `scheme` in every run.
pub fn ga_stream(scheme: Scheme) -> SeedStream {
    match scheme {
        // Shared so that S-IRS freezes the vehicle at the M-IRS slot-1 optimum.
        Scheme::MobileIrsNoma | Scheme::StaticIrsNoma => SeedStream::Ga(0),
        other => SeedStream::Ga(other.index()),
    }
}

/// Trace for one seed: the supplied one, or Random Waypoint from the
/// seed's mobility stream.
pub fn trace_for_seed(config: &ScenarioConfig, seed: u64) -> Result<MobilityTrace> {
    let cfg = config.with_seed(seed);
    generate_trace(&cfg, &mut stream_rng(seed, SeedStream::Mobility))
}

fn run_seed(
    config: &ScenarioConfig,
    schemes: &[Scheme],
    seed: u64,
    trace: Option<&MobilityTrace>,
) -> Result<Vec<TrajectoryRun>> {
    let cfg = config.with_seed(seed);
    let generated;
    let trace = match trace {
        Some(t) => t,
        None => {
            generated = trace_for_seed(config, seed)?;
            &generated
        }
    };
    schemes
        .iter()
        .map(|&s| optimize_trajectory(trace, &cfg, s, &mut stream_rng(seed, ga_stream(s))))
        .collect()
}

/// Runs every scheme on every seed and aggregates the outcome.
///
/// `trace`, when given, replaces the generated mobility for all seeds.
pub fn run_experiment(
    config: &ScenarioConfig,
    schemes: &[Scheme],
    seeds: &[u64],
    trace: Option<&MobilityTrace>,
) -> Result<ExperimentReport> {
    if schemes.is_empty() {
        return Err(Error::Domain("no schemes selected".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Domain("no seeds selected".into()));
    }
    config.validate()?;
    if let Some(t) = trace {
        t.check_against(config)?;
    }

    #[cfg(feature = "parallel")]
    let runs: Vec<Vec<TrajectoryRun>> = {
        use rayon::prelude::*;
        seeds
            .par_iter()
            .map(|&seed| run_seed(config, schemes, seed, trace))
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<Vec<TrajectoryRun>> = seeds
        .iter()
        .map(|&seed| run_seed(config, schemes, seed, trace))
        .collect::<Result<_>>()?;

    let num_slots = config.mobility.num_slots;
    let mut per_seed = Vec::new();
    let mut infeasible = Vec::new();
    for (&seed, seed_runs) in seeds.iter().zip(&runs) {
        for run in seed_runs {
            per_seed.push(SeedRates {
                seed,
                scheme: run.scheme,
                per_slot: run.results.iter().map(|r| r.sum_rate).collect(),
            });
            for (t, r) in run.results.iter().enumerate() {
                if r.feasible_count() == 0 {
                    infeasible.push(InfeasibleSlot {
                        seed,
                        scheme: run.scheme,
                        slot: t + 1,
                    });
                }
            }
        }
    }

    let rates: Vec<SchemeRates> = schemes
        .iter()
        .map(|&scheme| {
            let per_slot = (0..num_slots)
                .map(|t| {
                    let total: f64 = per_seed
                        .iter()
                        .filter(|r| r.scheme == scheme)
                        .map(|r| r.per_slot[t])
                        .sum();
                    total / seeds.len() as f64
                })
                .collect();
            SchemeRates { scheme, per_slot }
        })
        .collect();

    let mut improvements = Vec::new();
    for (scheme, baseline) in [
        (Scheme::MobileIrsNoma, Scheme::StaticIrsNoma),
        (Scheme::MobileIrsNoma, Scheme::NoIrsNoma),
        (Scheme::MobileIrsNoma, Scheme::MobileIrsOma),
        (Scheme::StaticIrsNoma, Scheme::NoIrsNoma),
    ] {
        let find = |s: Scheme| rates.iter().find(|r| r.scheme == s);
        if let (Some(a), Some(b)) = (find(scheme), find(baseline)) {
            let per_slot_pct: Vec<f64> = a
                .per_slot
                .iter()
                .zip(&b.per_slot)
                .map(|(&x, &y)| improvement_pct(x, y))
                .collect();
            let mean_pct = per_slot_pct.iter().sum::<f64>() / per_slot_pct.len() as f64;
            improvements.push(Improvement {
                scheme,
                baseline,
                per_slot_pct,
                mean_pct,
            });
        }
    }

    let detail_runs = &runs[0];
    let details: Vec<SchemeDetail> = detail_runs
        .iter()
        .map(|r| SchemeDetail {
            scheme: r.scheme,
            placements: r.placements.clone(),
            slot_results: r.results.clone(),
            convergence: r.records.clone(),
        })
        .collect();
    let fraction_source = [
        Scheme::MobileIrsNoma,
        Scheme::StaticIrsNoma,
        Scheme::NoIrsNoma,
    ]
    .into_iter()
    .find_map(|s| detail_runs.iter().find(|r| r.scheme == s));
    let power_fractions = fraction_source
        .map(|run| {
            run.results
                .iter()
                .enumerate()
                .map(|(t, r)| SlotFractions {
                    slot: t + 1,
                    pairs: r
                        .pairs
                        .iter()
                        .enumerate()
                        .map(|(k, p)| PairFractions {
                            pair: k,
                            weak_user: p.weak,
                            strong_user: p.strong,
                            alpha_weak: p.alpha_weak,
                            alpha_strong: p.alpha_strong,
                        })
                        .collect(),
                })
                .collect()
        })
        .unwrap_or_default();

    Ok(ExperimentReport {
        config: config.clone(),
        seeds: seeds.to_vec(),
        schemes: schemes.to_vec(),
        num_slots,
        rates,
        improvements,
        per_seed,
        detail_seed: Some(seeds[0]),
        power_fractions,
        details,
        infeasible,
    })
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub const RATES_HEADER: [&str; 3] = ["slot", "scenario", "sum_rate"];
pub const FRACTIONS_HEADER: [&str; 4] = ["slot", "pair", "alpha_weak", "alpha_strong"];
pub const TRAJECTORY_HEADER: [&str; 5] = ["slot", "entity", "x", "y", "z"];
pub const CONVERGENCE_HEADER: [&str; 5] = [
    "scenario",
    "slot",
    "generation",
    "best_fitness",
    "mean_fitness",
];
pub const USERS_HEADER: [&str; 7] = [
    "slot", "scenario", "user", "pair_id", "alpha", "sinr_db", "rate",
];

/// Writes `results.json`, `rates.csv`, `fractions.csv`, `trajectory.csv`,
/// `convergence.csv` and `users.csv` into `out_dir`, creating it if needed.
/// Slots are numbered from 1.
pub fn emit_outputs(report: &ExperimentReport, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let json_path = out_dir.join("results.json");
    let mut json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Format(format!("results.json: {e}")))?;
    json.push('\n');
    fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;

    let mut rows = Vec::new();
    for t in 0..report.num_slots {
        for r in &report.rates {
            rows.push(vec![
                (t + 1).to_string(),
                r.scheme.to_string(),
                r.per_slot[t].to_string(),
            ]);
        }
    }
    write_csv(&out_dir.join("rates.csv"), &RATES_HEADER, rows)?;

    let rows = report
        .power_fractions
        .iter()
        .flat_map(|s| {
            s.pairs.iter().map(move |p| {
                vec![
                    s.slot.to_string(),
                    p.pair.to_string(),
                    p.alpha_weak.to_string(),
                    p.alpha_strong.to_string(),
                ]
            })
        })
        .collect();
    write_csv(&out_dir.join("fractions.csv"), &FRACTIONS_HEADER, rows)?;

    let irs_height = report.config.ga.irs_height;
    let mut rows = Vec::new();
    for d in &report.details {
        for (t, p) in d.placements.iter().enumerate() {
            rows.push(vec![
                (t + 1).to_string(),
                format!("{}/uav", d.scheme),
                p.uav[0].to_string(),
                p.uav[1].to_string(),
                p.uav[2].to_string(),
            ]);
            if d.scheme.uses_irs() {
                rows.push(vec![
                    (t + 1).to_string(),
                    format!("{}/irs", d.scheme),
                    p.irs[0].to_string(),
                    p.irs[1].to_string(),
                    irs_height.to_string(),
                ]);
            }
        }
    }
    write_csv(&out_dir.join("trajectory.csv"), &TRAJECTORY_HEADER, rows)?;

    let mut rows = Vec::new();
    for d in &report.details {
        for (t, rec) in d.convergence.iter().enumerate() {
            for g in &rec.generations {
                rows.push(vec![
                    d.scheme.to_string(),
                    (t + 1).to_string(),
                    g.generation.to_string(),
                    g.best_fitness.to_string(),
                    g.mean_fitness.to_string(),
                ]);
            }
        }
    }
    write_csv(&out_dir.join("convergence.csv"), &CONVERGENCE_HEADER, rows)?;

    let users_path = out_dir.join("users.csv");
    let csv_err = |source| Error::Csv {
        path: users_path.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(&users_path).map_err(csv_err)?;
    w.write_record(USERS_HEADER).map_err(csv_err)?;
    for d in &report.details {
        for (t, r) in d.slot_results.iter().enumerate() {
            r.write_rows(&mut w, t + 1, d.scheme).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(&users_path, e))?;
    Ok(())
}
