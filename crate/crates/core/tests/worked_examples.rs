//! Hand-evaluated reference values. Expected numbers were computed once with
//! an independent scalar script and frozen here.

use uav_irs::channel::{blockage_prob, pathloss_los, pathloss_nlos, uav_link_pathloss, LinkGains};
use uav_irs::experiment::run_experiment;
use uav_irs::noma::{
    ftpa_allocate, oma_from_gains, pair_users, rate, strong_sinr, weak_sinr, Scheme,
};
use uav_irs::scenario::ScenarioConfig;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn transmit_snr_and_threshold() {
    let d = ScenarioConfig::default().derived();
    assert!(close(d.rho, 398107170553.49695, 1e-12));
    assert!(close(d.gamma_th, 100.0, 1e-12));
}

#[test]
fn pathloss_decade_slope_and_blockage_value() {
    let c = ScenarioConfig::default();
    let slope =
        pathloss_los(1000.0, &c.channel).unwrap() - pathloss_los(100.0, &c.channel).unwrap();
    assert!(close(slope, 20.0, 1e-12));
    assert!(close(
        blockage_prob(100.0, 100.0, &c.blockage).unwrap(),
        0.9932230676836347,
        1e-12
    ));
    for d in [1.0, 2.5, 10.0, 100.0, 1e4] {
        assert!(pathloss_nlos(d, &c.channel).unwrap() >= pathloss_los(d, &c.channel).unwrap());
    }
}

#[test]
fn averaged_pathloss_composition() {
    let c = ScenarioConfig::default();
    let l = uav_link_pathloss([0.0, 0.0, 100.0], [100.0, 0.0], &c.channel, &c.blockage).unwrap();
    assert!(close(l, 104.61621526938114, 1e-12));
}

#[test]
fn pairing_and_ftpa_examples() {
    assert_eq!(
        pair_users(&[1.0, 2.0, 3.0, 4.0]).unwrap(),
        vec![(0, Some(3)), (1, Some(2))]
    );
    let (aw, as_) = ftpa_allocate(1.0, 4.0, 1.0, 1.0, false).unwrap();
    assert!(close(aw, 0.8, 1e-12) && close(as_, 0.2, 1e-12));
    let (aw, _) = ftpa_allocate(1.0, 4.0, 1.0, 0.28, false).unwrap();
    assert!(close(aw, 0.5958402614349186, 1e-12));
}

#[test]
fn sinr_and_rate_examples() {
    let s = strong_sinr(0.2, 1.0, 0.0, 100.0);
    assert!(close(s, 20.0, 1e-12));
    assert!(close(rate(s), 4.392317422778761, 1e-12));
    let w = weak_sinr(0.8, 0.01, 0.0, 0.2, 0.04, 1000.0);
    assert!(close(w, 0.888888888888889, 1e-12));
    assert!(close(rate(w), 0.9175378398080271, 1e-12));
}

#[test]
fn oma_pair_member_gets_half_the_band() {
    let c = ScenarioConfig::default();
    let g = 20.0 / c.derived().rho;
    let gains = LinkGains {
        uav: vec![g, g],
        irs: vec![0.0, 0.0],
    };
    let r = oma_from_gains(&gains, &c).unwrap();
    for u in &r.users {
        assert!(close(u.rate, 2.1961587113893803, 1e-12));
    }
}

#[test]
fn mobile_irs_never_below_no_irs_per_seed() {
    let c = ScenarioConfig::default();
    let seeds: Vec<u64> = (1..=20).collect();
    let report = run_experiment(
        &c,
        &[Scheme::MobileIrsNoma, Scheme::NoIrsNoma],
        &seeds,
        None,
    )
    .unwrap();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    for seed in seeds {
        let of = |scheme| {
            let r = report
                .per_seed
                .iter()
                .find(|r| r.seed == seed && r.scheme == scheme)
                .unwrap();
            mean(&r.per_slot)
        };
        let (m, n) = (of(Scheme::MobileIrsNoma), of(Scheme::NoIrsNoma));
        assert!(m >= n, "seed {seed}: {m} < {n}");
    }
}
