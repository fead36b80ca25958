//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails. Run with
//! `cargo test -p uav-irs --release --test acceptance -- --nocapture`.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;

use uav_irs::channel::{
    blockage_prob, irs_combined_gain, pathloss_los, pathloss_nlos, uav_link_pathloss, Placement,
};
use uav_irs::experiment::{emit_outputs, run_experiment, trace_for_seed, ExperimentReport};
use uav_irs::mobility::{init_users, step};
use uav_irs::noma::{ftpa_allocate, Scheme};
use uav_irs::optimizer::{optimize_slot, SlotProblem};
use uav_irs::scenario::{stream_rng, ScenarioConfig, SeedStream};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn default_report() -> (ExperimentReport, Duration) {
    let config = ScenarioConfig::default();
    let seeds: Vec<u64> = (1..=20).collect();
    let start = Instant::now();
    let report = run_experiment(&config, &Scheme::ALL, &seeds, None).unwrap();
    (report, start.elapsed())
}

fn scenario_ordering(report: &ExperimentReport, elapsed: Duration) -> Outcome {
    let m = report.rates_of(Scheme::MobileIrsNoma).unwrap();
    let s = report.rates_of(Scheme::StaticIrsNoma).unwrap();
    let n = report.rates_of(Scheme::NoIrsNoma).unwrap();
    let ordered = (0..m.len()).all(|t| m[t] >= s[t] && s[t] >= n[t]);
    let ms = report
        .improvement(Scheme::MobileIrsNoma, Scheme::StaticIrsNoma)
        .unwrap()
        .mean_pct;
    let mn = report
        .improvement(Scheme::MobileIrsNoma, Scheme::NoIrsNoma)
        .unwrap()
        .mean_pct;
    let fast = elapsed <= Duration::from_secs(300);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.3}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        ordered && (5.0..=25.0).contains(&ms) && (10.0..=40.0).contains(&mn) && fast,
        format!(
            "M [{}] S [{}] No [{}]; M vs S {ms:.1}%, M vs No {mn:.1}%; {:.1} s",
            fmt(m),
            fmt(s),
            fmt(n),
            elapsed.as_secs_f64()
        ),
    )
}

fn noma_beats_oma(report: &ExperimentReport) -> Outcome {
    let m = report.rates_of(Scheme::MobileIrsNoma).unwrap();
    let o = report.rates_of(Scheme::MobileIrsOma).unwrap();
    let wins = m.iter().zip(o).filter(|(a, b)| a >= b).count();
    outcome(
        wins >= 4,
        format!("NOMA >= OMA in {wins} of {} slots", m.len()),
    )
}

/// Best fitness over every point of the 4-level grid, enumerated directly
/// from the bounds rather than through the genome codec.
fn grid_optimum(problem: &SlotProblem<'_>, c: &ScenarioConfig) -> f64 {
    let (r, g) = (&c.region, &c.ga);
    let lo = [r.x_min, r.y_min, g.uav_alt_min, r.x_min, r.y_min];
    let hi = [r.x_max, r.y_max, g.uav_alt_max, r.x_max, r.y_max];
    let level = |i: usize, k: usize| lo[i] + (hi[i] - lo[i]) * k as f64 / 3.0;
    let mut best = f64::NEG_INFINITY;
    for idx in 0..1024usize {
        let k: Vec<usize> = (0..5).map(|i| (idx >> (2 * i)) & 3).collect();
        let p = Placement {
            uav: [level(0, k[0]), level(1, k[1]), level(2, k[2])],
            irs: [level(3, k[3]), level(4, k[4])],
        };
        if let Ok(e) = problem.evaluate(&p) {
            best = best.max(e.fitness);
        }
    }
    best
}

fn ga_matches_grid_search() -> Outcome {
    let mut c = ScenarioConfig::default();
    c.ga.bits_per_coordinate = 2;
    let start = Instant::now();
    let mut hits = 0;
    for seed in 1..=100u64 {
        let trace = trace_for_seed(&c, seed).unwrap();
        let problem = SlotProblem::new(trace.slot(0), &c);
        let oracle = grid_optimum(&problem, &c);
        let (_, rec) = optimize_slot(&problem, &mut stream_rng(seed, SeedStream::Ga(0))).unwrap();
        if (rec.best_fitness - oracle).abs() <= 1e-9 * oracle.abs().max(1.0) {
            hits += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        hits >= 95 && elapsed <= Duration::from_secs(30),
        format!(
            "{hits}/100 runs hit the 1024-point optimum (population {}, {} generations); {:.1} s",
            c.ga.population_size,
            c.ga.max_iterations,
            elapsed.as_secs_f64()
        ),
    )
}

fn ftpa_properties() -> Outcome {
    let noise = ScenarioConfig::default().derived().noise_power_mw;
    let mut rng = stream_rng(4, SeedStream::Custom(0));
    let mut worst_sum: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..10_000 {
        let a = 10f64.powf(rng.gen_range(-18.0..-4.0));
        let b = 10f64.powf(rng.gen_range(-18.0..-4.0));
        let (gw, gs) = if a <= b { (a, b) } else { (b, a) };
        for beta in [0.0, 0.28, 0.5, 1.0] {
            let (aw, as_) = ftpa_allocate(gw, gs, noise, beta, false).unwrap();
            worst_sum = worst_sum.max((aw + as_ - 1.0).abs());
            let exact_even = beta != 0.0 || (aw == 0.5 && as_ == 0.5);
            if (aw + as_ - 1.0).abs() > 1e-12 || aw < as_ || !exact_even {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0,
        format!("40000 allocations, {failures} violations, worst |sum - 1| = {worst_sum:.1e}"),
    )
}

fn channel_analytics() -> Outcome {
    let c = ScenarioConfig::default();
    let los = pathloss_los(100.0, &c.channel).unwrap();
    let nlos = pathloss_nlos(100.0, &c.channel).unwrap();
    let exact = (los - 101.4).abs() < 1e-9 && (nlos - 130.4).abs() < 1e-9;
    let at_zero = blockage_prob(0.0, 100.0, &c.blockage).unwrap();
    let sweep: Vec<f64> = (0..1000)
        .map(|i| blockage_prob(i as f64 * 0.5, 100.0, &c.blockage).unwrap())
        .collect();
    let decreasing = sweep.windows(2).all(|w| w[1] < w[0]);
    let mut rng = stream_rng(5, SeedStream::Custom(0));
    let mut outside = 0;
    for _ in 0..10_000 {
        let uav: [f64; 3] = [
            rng.gen_range(0.0..500.0),
            rng.gen_range(0.0..500.0),
            rng.gen_range(100.0..300.0),
        ];
        let user: [f64; 2] = [rng.gen_range(0.0..500.0), rng.gen_range(0.0..500.0)];
        let d = ((uav[0] - user[0]).powi(2) + (uav[1] - user[1]).powi(2) + uav[2].powi(2)).sqrt();
        let avg = uav_link_pathloss(uav, user, &c.channel, &c.blockage).unwrap();
        let (l, n) = (
            pathloss_los(d, &c.channel).unwrap(),
            pathloss_nlos(d, &c.channel).unwrap(),
        );
        if !(l - 1e-9 <= avg && avg <= n + 1e-9) {
            outside += 1;
        }
    }
    outcome(
        exact && at_zero == 1.0 && decreasing && outside == 0,
        format!(
            "L_LoS(100) = {los:.6} dB, L_NLoS(100) = {nlos:.6} dB, P_L(0) = {at_zero}, \
             sweep strictly decreasing: {decreasing}, {outside}/10000 averages outside endpoints"
        ),
    )
}

fn irs_square_law() -> Outcome {
    let c = ScenarioConfig::default();
    let gain = |n: u32| {
        let mut p = c.channel.clone();
        p.irs_elements_per_user = n;
        irs_combined_gain(
            [120.0, 80.0],
            c.ga.irs_height,
            [200.0, 150.0, 150.0],
            [140.0, 60.0],
            &p,
        )
        .unwrap()
    };
    let base = gain(1);
    let ratios: Vec<f64> = [2, 4, 8, 16].iter().map(|&n| gain(n) / base).collect();
    let exact = ratios
        .iter()
        .zip([4.0, 16.0, 64.0, 256.0])
        .all(|(r, e)| *r == e);
    outcome(exact, format!("ratios for N = 2, 4, 8, 16: {ratios:?}"))
}

fn mobility_properties() -> Outcome {
    let mut c = ScenarioConfig::default();
    c.mobility.speed_min = 0.5;
    c.mobility.speed_max = 1.5;
    c.mobility.pause_s = 7.5;
    c.mobility.initial_subregion = c.region;
    let dt = 1.0;
    let pause_steps = (c.mobility.pause_s / dt).ceil() as usize;
    let mut rng = stream_rng(7, SeedStream::Mobility);
    let mut users = init_users(&c, &mut rng).unwrap();
    let (mut escaped, mut too_fast, mut bad_pauses, mut pauses) = (0, 0, 0, 0);
    // Steps left in the current pause per user, counted from arrival.
    let mut still: Vec<Option<usize>> = vec![None; users.len()];
    for _ in 0..10_000 {
        for (u, s) in users.iter_mut().zip(still.iter_mut()) {
            let next = step(u, dt, &c.region, &c.mobility, &mut rng);
            let moved = (next.position[0] - u.position[0]).hypot(next.position[1] - u.position[1]);
            if !c.region.contains(next.position) {
                escaped += 1;
            }
            if moved > c.mobility.speed_max * dt + 1e-9 {
                too_fast += 1;
            }
            match s {
                Some(0) => {
                    if moved == 0.0 {
                        bad_pauses += 1;
                    }
                    *s = None;
                }
                Some(k) => {
                    if moved != 0.0 {
                        bad_pauses += 1;
                    }
                    *k -= 1;
                }
                None => {}
            }
            if next.arrived && !u.arrived {
                pauses += 1;
                *s = Some(pause_steps);
            }
            *u = next;
        }
    }

    let mut frozen = ScenarioConfig::default();
    frozen.mobility.speed_min = 0.0;
    frozen.mobility.speed_max = 0.0;
    let mut rng = stream_rng(7, SeedStream::Mobility);
    let start = init_users(&frozen, &mut rng).unwrap();
    let mut us = start.clone();
    for _ in 0..10_000 {
        us = us
            .iter()
            .map(|u| step(u, dt, &frozen.region, &frozen.mobility, &mut rng))
            .collect();
    }
    let constant = us.iter().zip(&start).all(|(a, b)| a.position == b.position);

    outcome(
        escaped == 0 && too_fast == 0 && bad_pauses == 0 && pauses > 0 && constant,
        format!(
            "10 users x 10000 steps: {escaped} outside, {too_fast} over speed, \
             {bad_pauses}/{pauses} pauses off {pause_steps} steps; zero speed constant: {constant}"
        ),
    )
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism(first: &ExperimentReport) -> Outcome {
    let (second, _) = default_report();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit_outputs(first, a.path()).unwrap();
    emit_outputs(&second, b.path()).unwrap();
    let (fa, fb) = (read_all(a.path()), read_all(b.path()));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    outcome(
        fa == fb && fa.len() == 6,
        format!("{} files compared: {}", fa.len(), names.join(", ")),
    )
}

#[test]
fn acceptance() {
    // Runtime limits are stated for a single core.
    std::env::set_var("RAYON_NUM_THREADS", "1");

    let (report, elapsed) = default_report();
    let results = [
        ("1 scenario ordering", scenario_ordering(&report, elapsed)),
        ("2 NOMA vs OMA", noma_beats_oma(&report)),
        ("3 GA vs exhaustive search", ga_matches_grid_search()),
        ("4 FTPA properties", ftpa_properties()),
        ("5 channel analytics", channel_analytics()),
        ("6 IRS coherent gain", irs_square_law()),
        ("7 mobility properties", mobility_properties()),
        ("8 determinism", determinism(&report)),
    ];
    for (name, o) in &results {
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed: Vec<&str> = results
        .iter()
        .filter(|(_, o)| !o.pass)
        .map(|(n, _)| *n)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
