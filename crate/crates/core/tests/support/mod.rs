//! Shared test oracles: quadrature, Kolmogorov-Smirnov statistics and
//! a random feasible-schedule sampler. These stay independent of the
//! implementation paths they check.

#![allow(dead_code)]

use rand::Rng;
use vanet_capacity::{CycleGeometry, NetworkParams, Role, Snapshot};

pub fn desk_params(p: f64) -> NetworkParams {
    NetworkParams {
        road_length_m: 20_000.0,
        infra_spacing_m: 2_000.0,
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
    }
}

/// Desk params on a single-cycle ring of the given spacing.
pub fn one_cycle_params(p: f64, sensing_range_m: f64, spacing_m: f64) -> NetworkParams {
    let mut params = desk_params(p);
    params.sensing_range_m = sensing_range_m;
    params.infra_spacing_m = spacing_m;
    params.road_length_m = spacing_m;
    params
}

pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 48)
}

/// One-sample KS statistic of `samples` against a CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d
            .max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// KS critical value at significance 0.01 (asymptotic).
pub fn ks_critical_one_sample_001(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

pub fn ks_critical_two_sample_001(n: usize, m: usize) -> f64 {
    1.6276 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// A randomly generated feasible pair schedule (transmitter positions
/// ascending, spacing at least the sensing range, distinct in-area
/// receivers within radio range). Used as a lower-bound/dominance
/// check against the greedy selector and the exhaustive oracle.
pub struct SampledSchedule {
    pub tx_positions: Vec<f64>,
    pub rx_indices: Vec<usize>,
}

pub fn sample_feasible_schedule<R: Rng>(
    snapshot: &Snapshot,
    cycle: &CycleGeometry,
    rng: &mut R,
) -> SampledSchedule {
    let params = snapshot.params();
    let span = cycle.v2v_span();
    let mut helpers = Vec::new();
    let mut vois = Vec::new();
    for (i, v) in snapshot.indexed_in(span) {
        match v.role {
            Role::Helper => helpers.push(v.position_m),
            Role::Voi => vois.push((i, v.position_m)),
        }
    }
    let mut used = vec![false; vois.len()];
    let mut schedule = SampledSchedule {
        tx_positions: Vec::new(),
        rx_indices: Vec::new(),
    };
    let mut last_tx = f64::NEG_INFINITY;
    for &h in &helpers {
        if h - last_tx < params.sensing_range_m || rng.gen_bool(0.5) {
            continue;
        }
        let reachable: Vec<usize> = (0..vois.len())
            .filter(|&j| !used[j] && (vois[j].1 - h).abs() <= params.vehicle_radio_m)
            .collect();
        if reachable.is_empty() {
            continue;
        }
        let j = reachable[rng.gen_range(0..reachable.len())];
        used[j] = true;
        schedule.tx_positions.push(h);
        schedule.rx_indices.push(vois[j].0);
        last_tx = h;
    }
    schedule
}
