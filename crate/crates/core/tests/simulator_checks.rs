//! Simulator-level cross-checks against the per-slot closed forms:
//! coverage slot fractions, the infrastructure-only capacity and the
//! monotone dependence on the VoI fraction.

mod support;

use support::*;
use vanet_capacity::analytic::{helper_fetch_rate, v2i_voi_rate};
use vanet_capacity::simulator::{run_experiment, BufferScope, SimConfig};

fn sim_config(p: f64, cooperative: bool, trials: u32, duration_s: f64) -> SimConfig {
    SimConfig {
        params: desk_params(p),
        slot_s: 0.1,
        duration_s,
        trials,
        seed: 60_601,
        cooperative,
        buffer_scope: BufferScope::CycleLocal,
    }
}

#[test]
fn slot_fractions_match_coverage_probabilities() {
    // q1: P(some VoI covered) = 1 - e^{-p rho 2 r_I};
    // q2: P(no VoI, some helper) = e^{-p rho 2 r_I} - e^{-rho 2 r_I}.
    // Slots decorrelate over ~40 s, so tolerances come from the spread
    // across independent trials.
    let cfg = sim_config(0.1, true, 64, 600.0);
    let summary = run_experiment(&cfg).unwrap();
    let q1: Vec<f64> = summary
        .trials
        .iter()
        .map(|t| t.voi_slot_count as f64 / t.slot_cycle_samples as f64)
        .collect();
    let q2: Vec<f64> = summary
        .trials
        .iter()
        .map(|t| t.helper_slot_count as f64 / t.slot_cycle_samples as f64)
        .collect();
    let total_samples: u64 = summary.trials.iter().map(|t| t.slot_cycle_samples).sum();
    assert!(total_samples >= 100_000);

    let w_i = cfg.params.v2i_rate_bps;
    let (q1_mean, q1_se) = mean_and_se(&q1);
    let v2i_expect = v2i_voi_rate(&cfg.params).unwrap();
    assert!(
        ((q1_mean * w_i - v2i_expect) / v2i_expect).abs() < 0.02,
        "VoI-covered slot rate {} vs analytic {v2i_expect}",
        q1_mean * w_i
    );
    assert!((q1_mean * w_i - v2i_expect).abs() < 4.0 * q1_se.max(1e-4) * w_i);

    let (q2_mean, q2_se) = mean_and_se(&q2);
    let fetch_expect = helper_fetch_rate(&cfg.params).unwrap();
    assert!(
        ((q2_mean * w_i - fetch_expect) / fetch_expect).abs() < 0.02,
        "helper-fetch slot rate {} vs analytic {fetch_expect}",
        q2_mean * w_i
    );
    assert!((q2_mean * w_i - fetch_expect).abs() < 4.0 * q2_se.max(1e-4) * w_i);
}

#[test]
fn infrastructure_only_capacity_matches_direct_rate() {
    // Without cooperation the road capacity is (L/d) w_I (1 - e^{-p
    // rho 2 r_I}), within the Monte-Carlo error of the trial mean.
    for p in [0.1, 1.0] {
        let cfg = sim_config(p, false, 96, 900.0);
        let summary = run_experiment(&cfg).unwrap();
        let expect = 10.0 * v2i_voi_rate(&cfg.params).unwrap();
        let rel = (summary.mean_capacity_bps - expect).abs() / expect;
        assert!(
            rel < 0.025,
            "p={p}: V2I-only capacity {} vs {expect} ({rel:.4} rel)",
            summary.mean_capacity_bps
        );
        assert!(
            (summary.mean_capacity_bps - expect).abs()
                < 4.0 * summary.se_capacity_bps.max(expect * 1e-3)
        );
    }
}

#[test]
fn capacity_is_monotone_in_voi_fraction_up_to_saturation() {
    // Fixed seed set; coarse grid up to the saturated regime.
    let grid = [0.01, 0.04, 0.12, 0.33];
    let mut last = 0.0f64;
    for &p in &grid {
        let cfg = sim_config(p, true, 24, 400.0);
        let summary = run_experiment(&cfg).unwrap();
        assert!(
            summary.mean_capacity_bps > last,
            "capacity should grow with p until saturation: {} after {last}",
            summary.mean_capacity_bps
        );
        last = summary.mean_capacity_bps;
    }
    // Beyond saturation the ceiling holds flat within noise.
    let saturated = run_experiment(&sim_config(0.8, true, 24, 400.0)).unwrap();
    assert!((saturated.mean_capacity_bps - last).abs() / last < 0.02);
}
