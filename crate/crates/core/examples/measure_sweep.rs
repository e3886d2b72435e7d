//! Scratch measurement of sim-vs-analytic deviations and trial-mean
//! standard errors at criterion scale. Not part of the deliverable
//! surface; used to size test tolerances.

use vanet_capacity::analytic::total_capacity;
use vanet_capacity::simulator::{run_experiment, BufferScope, SimConfig};
use vanet_capacity::NetworkParams;

fn main() {
    use vanet_capacity::analytic::{
        expected_pair_count, helper_fetch_rate, v2i_voi_rate, v2v_unconstrained_rate,
    };
    let grid = [0.07, 0.1, 0.12, 0.2, 0.33];
    for d in [2_000.0] {
        println!("d = {d}  (1000 trials, decomposed)");
        for &p in &grid {
            let params = NetworkParams {
                road_length_m: 20_000.0,
                infra_spacing_m: d,
                infra_radio_m: 400.0,
                vehicle_radio_m: 200.0,
                sensing_range_m: 400.0,
                density_east_per_m: 0.004,
                density_west_per_m: 0.006,
                voi_fraction: p,
                speed_east_mps: 20.0,
                speed_west_mps: 25.0,
                v2i_rate_bps: 20e6,
                v2v_rate_bps: 2e6,
            };
            let cfg = SimConfig {
                params,
                slot_s: 0.1,
                duration_s: 600.0,
                trials: 1_000,
                seed: 31_337,
                cooperative: true,
                buffer_scope: BufferScope::CycleLocal,
            };
            let analytic = total_capacity(&params).unwrap();
            let cycles = 10.0;
            let v2i_a = cycles * v2i_voi_rate(&params).unwrap();
            let fetch_a = cycles * helper_fetch_rate(&params).unwrap();
            let v2v_a = cycles * v2v_unconstrained_rate(&params).unwrap();
            let pairs_a = expected_pair_count(&params).unwrap();
            let summary = run_experiment(&cfg).unwrap();
            let dev = (summary.mean_capacity_bps - analytic) / analytic;
            println!(
                "  p={p:5.3}: dev={:+6.3}% se={:5.3}% | v2i sim {:.4e} vs {:.4e} ({:+.2}%) | v2v sim {:.4e} vs min({:.4e},{:.4e}) | pairs sim {:.4} vs {:.4} ({:+.2}%)",
                dev * 100.0,
                summary.se_capacity_bps / analytic * 100.0,
                summary.v2i_mean_bps,
                v2i_a,
                (summary.v2i_mean_bps - v2i_a) / v2i_a * 100.0,
                summary.v2v_mean_bps,
                fetch_a,
                v2v_a,
                summary.mean_pairs,
                pairs_a,
                (summary.mean_pairs - pairs_a) / pairs_a * 100.0,
            );
        }
    }
}
