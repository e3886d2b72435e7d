//! Simultaneous helper-to-VoI pair selection in one uncovered area.
//!
//! The production selector walks helpers left to right, greedily taking
//! the first helper with a reachable unused VoI and spacing at least
//! the sensing range from the previous transmitter; each transmitter
//! takes the leftmost eligible VoI. [`max_pairs_oracle`] computes the
//! exact optimum by exhaustive search over transmitter subsets so tests
//! can verify that greedy pair counts are maximal.
//!
//! Receivers must lie inside the uncovered area: vehicles inside a
//! coverage area are served by the infrastructure under the prioritized
//! scheme, so they never act as V2V receivers here. Every receiver used
//! earlier in the schedule stays excluded, which upholds the
//! distinct-receiver rule even when the sensing range is shorter than
//! one full radio coverage.

use crate::error::{Error, Result};
use crate::highway::{CycleGeometry, NetworkParams, Role, Snapshot};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// One scheduled transmission: a helper and the VoI it serves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelperVoiPair {
    /// Index of the transmitter in [`Snapshot::vehicles`].
    pub transmitter_index: usize,
    /// Index of the receiver in [`Snapshot::vehicles`].
    pub receiver_index: usize,
    pub tx_position_m: f64,
    pub rx_position_m: f64,
}

/// The pairs active simultaneously in one uncovered area, ordered by
/// transmitter position.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSchedule {
    pub pairs: Vec<HelperVoiPair>,
    pub cycle: CycleGeometry,
}

impl PairSchedule {
    /// Checks every schedule invariant against its snapshot: roles,
    /// reachability, transmitter spacing, in-area positions and
    /// receiver distinctness.
    pub fn validate(&self, snapshot: &Snapshot) -> Result<()> {
        let params = snapshot.params();
        let span = self.cycle.v2v_span();
        let mut seen = std::collections::HashSet::new();
        for (i, pair) in self.pairs.iter().enumerate() {
            let tx = &snapshot.vehicles()[pair.transmitter_index];
            let rx = &snapshot.vehicles()[pair.receiver_index];
            if tx.role != Role::Helper || rx.role != Role::Voi {
                return Err(Error::Domain(format!("pair {i} has wrong roles")));
            }
            if (pair.tx_position_m - pair.rx_position_m).abs() > params.vehicle_radio_m {
                return Err(Error::Domain(format!("pair {i} exceeds radio range")));
            }
            if !span.contains(pair.tx_position_m) || !span.contains(pair.rx_position_m) {
                return Err(Error::Domain(format!("pair {i} outside the uncovered area")));
            }
            if !seen.insert(pair.receiver_index) || seen.contains(&pair.transmitter_index) {
                return Err(Error::Domain(format!("pair {i} reuses a vehicle")));
            }
            if i > 0 {
                let gap = pair.tx_position_m - self.pairs[i - 1].tx_position_m;
                if gap < params.sensing_range_m {
                    return Err(Error::Domain(format!(
                        "transmitters {i} and {} are {gap} m apart, inside the sensing range",
                        i - 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// In-area helpers and VoIs as `(snapshot index, position)` lists.
fn area_participants(
    snapshot: &Snapshot,
    cycle: &CycleGeometry,
) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
    let span = cycle.v2v_span();
    let mut helpers = Vec::new();
    let mut vois = Vec::new();
    for (i, v) in snapshot.indexed_in(span) {
        match v.role {
            Role::Helper => helpers.push((i, v.position_m)),
            Role::Voi => vois.push((i, v.position_m)),
        }
    }
    (helpers, vois)
}

/// Greedy left-to-right selection of simultaneously active pairs.
pub fn select_pairs_opt(snapshot: &Snapshot, cycle: &CycleGeometry) -> PairSchedule {
    let params = snapshot.params();
    let r0 = params.vehicle_radio_m;
    let rc = params.sensing_range_m;
    let (helpers, vois) = area_participants(snapshot, cycle);

    let mut used = vec![false; vois.len()];
    let mut pairs = Vec::new();
    let mut last_tx: Option<f64> = None;
    for &(h_index, h_pos) in &helpers {
        if let Some(prev) = last_tx {
            if h_pos - prev < rc {
                continue;
            }
        }
        let start = vois.partition_point(|&(_, x)| x < h_pos - r0);
        let found = vois[start..]
            .iter()
            .zip(&used[start..])
            .take_while(|(&(_, x), _)| x <= h_pos + r0)
            .position(|(_, &u)| !u)
            .map(|offset| start + offset);
        if let Some(j) = found {
            used[j] = true;
            pairs.push(HelperVoiPair {
                transmitter_index: h_index,
                receiver_index: vois[j].0,
                tx_position_m: h_pos,
                rx_position_m: vois[j].1,
            });
            last_tx = Some(h_pos);
        }
    }
    let schedule = PairSchedule {
        pairs,
        cycle: *cycle,
    };
    debug_assert!(schedule.validate(snapshot).is_ok());
    schedule
}

/// Helper-count limit for the exhaustive oracle.
pub const MAX_ORACLE_HELPERS: usize = 25;

/// Exact maximum number of simultaneously schedulable pairs, by
/// depth-first search over transmitter subsets with left-to-right
/// pruning. Receivers are assigned leftmost-first, which is optimal
/// here because reachability windows shift right with the transmitter.
pub fn max_pairs_oracle(snapshot: &Snapshot, cycle: &CycleGeometry) -> Result<usize> {
    let params = snapshot.params();
    let (helpers, vois) = area_participants(snapshot, cycle);
    if helpers.len() > MAX_ORACLE_HELPERS {
        return Err(Error::InstanceTooLarge {
            helpers: helpers.len(),
            limit: MAX_ORACLE_HELPERS,
        });
    }
    let helper_pos: Vec<f64> = helpers.iter().map(|&(_, x)| x).collect();
    let voi_pos: Vec<f64> = vois.iter().map(|&(_, x)| x).collect();

    // max_chain[i]: most transmitters selectable from helpers[i..] under
    // the spacing constraint alone; an optimistic bound for pruning.
    let n = helper_pos.len();
    let mut max_chain = vec![0usize; n + 1];
    for i in (0..n).rev() {
        let next = helper_pos.partition_point(|&x| x < helper_pos[i] + params.sensing_range_m);
        max_chain[i] = max_chain[i + 1].max(1 + max_chain[next]);
    }

    struct Search<'a> {
        helper_pos: &'a [f64],
        voi_pos: &'a [f64],
        max_chain: &'a [usize],
        r0: f64,
        rc: f64,
        best: usize,
    }

    impl Search<'_> {
        fn run(&mut self, i: usize, min_pos: f64, used: &mut [bool], unused: usize, count: usize) {
            self.best = self.best.max(count);
            if i == self.helper_pos.len() {
                return;
            }
            let first_eligible = self
                .helper_pos
                .partition_point(|&x| x < min_pos)
                .max(i);
            if count + self.max_chain[first_eligible].min(unused) <= self.best {
                return;
            }
            // Take helpers[i] when eligible, pairing the leftmost
            // unused VoI in range.
            if self.helper_pos[i] >= min_pos {
                let h = self.helper_pos[i];
                let start = self.voi_pos.partition_point(|&x| x < h - self.r0);
                let mut j = start;
                while j < self.voi_pos.len() && self.voi_pos[j] <= h + self.r0 {
                    if !used[j] {
                        break;
                    }
                    j += 1;
                }
                if j < self.voi_pos.len() && self.voi_pos[j] <= h + self.r0 {
                    used[j] = true;
                    self.run(i + 1, h + self.rc, used, unused - 1, count + 1);
                    used[j] = false;
                }
            }
            // Skip helpers[i].
            self.run(i + 1, min_pos, used, unused, count);
        }
    }

    let mut search = Search {
        helper_pos: &helper_pos,
        voi_pos: &voi_pos,
        max_chain: &max_chain,
        r0: params.vehicle_radio_m,
        rc: params.sensing_range_m,
        best: 0,
    };
    let mut used = vec![false; voi_pos.len()];
    let unused = voi_pos.len();
    search.run(0, f64::NEG_INFINITY, &mut used, unused, 0);
    Ok(search.best)
}

/// Empirical transmitter statistics over independently sampled
/// snapshots, used as the Monte-Carlo oracle for the gap and pair-count
/// formulas. Snapshots are drawn on a single-cycle ring of length `d`
/// (the per-cycle statistics do not depend on the rest of the road).
#[derive(Debug, Clone, PartialEq)]
pub struct PairStats {
    pub snapshots: u64,
    /// Mean and standard error of the per-snapshot pair count.
    pub mean_pairs: f64,
    pub se_pairs: f64,
    /// Mean distance between consecutive transmitters.
    pub mean_gap_m: Option<f64>,
    /// Mean distance from the area origin to the first transmitter.
    pub mean_first_gap_m: Option<f64>,
    pub gap_samples: u64,
    pub first_samples: u64,
    /// Tally of the 1-based helper index of each next transmitter past
    /// the sensing exclusion (index m recorded at `[m-1]`).
    pub renewal_index_counts: Vec<u64>,
    /// Tally of the helper index of the first transmitter.
    pub delay_index_counts: Vec<u64>,
}

impl PairStats {
    pub fn renewal_index_pmf(&self) -> Vec<f64> {
        normalize(&self.renewal_index_counts)
    }

    pub fn delay_index_pmf(&self) -> Vec<f64> {
        normalize(&self.delay_index_counts)
    }
}

fn normalize(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Vec::new();
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

#[derive(Default, Clone)]
struct StatsAccum {
    snapshots: u64,
    pair_sum: u64,
    pair_sq_sum: u64,
    gap_sum: f64,
    gap_n: u64,
    first_sum: f64,
    first_n: u64,
    renewal_counts: Vec<u64>,
    delay_counts: Vec<u64>,
}

impl StatsAccum {
    fn merge(mut self, other: StatsAccum) -> StatsAccum {
        self.snapshots += other.snapshots;
        self.pair_sum += other.pair_sum;
        self.pair_sq_sum += other.pair_sq_sum;
        self.gap_sum += other.gap_sum;
        self.gap_n += other.gap_n;
        self.first_sum += other.first_sum;
        self.first_n += other.first_n;
        merge_counts(&mut self.renewal_counts, &other.renewal_counts);
        merge_counts(&mut self.delay_counts, &other.delay_counts);
        self
    }
}

fn merge_counts(into: &mut Vec<u64>, from: &[u64]) {
    if into.len() < from.len() {
        into.resize(from.len(), 0);
    }
    for (a, b) in into.iter_mut().zip(from) {
        *a += b;
    }
}

fn bump(counts: &mut Vec<u64>, index_1based: usize) {
    if counts.len() < index_1based {
        counts.resize(index_1based, 0);
    }
    counts[index_1based - 1] += 1;
}

pub fn empirical_pair_stats(
    params: &NetworkParams,
    snapshots: u64,
    seed: u64,
) -> Result<PairStats> {
    params.validate()?;
    if snapshots < 1 {
        return Err(Error::Domain("need at least one snapshot".to_string()));
    }
    // Pair statistics are per cycle; a one-cycle ring is the cheapest
    // stationary realization.
    let mut one_cycle = *params;
    one_cycle.road_length_m = params.infra_spacing_m;
    one_cycle.validate()?;

    // Fixed-size blocks with one RNG stream each, merged in block
    // order, keep the float accumulators bit-reproducible regardless
    // of thread scheduling.
    const BLOCK: u64 = 512;
    let blocks = snapshots.div_ceil(BLOCK);
    let accum = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut acc = StatsAccum::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block + 1);
            for _ in 0..BLOCK.min(snapshots - block * BLOCK) {
                let snap = Snapshot::sample_with(&one_cycle, &mut rng)
                    .expect("validated params always sample");
                let cycle = snap.cycle(0);
                let schedule = select_pairs_opt(&snap, &cycle);
                let helper_pos: Vec<f64> = snap
                    .indexed_in(cycle.v2v_span())
                    .filter(|(_, v)| v.role == Role::Helper)
                    .map(|(_, v)| v.position_m)
                    .collect();

                let pairs = schedule.pairs.len() as u64;
                acc.snapshots += 1;
                acc.pair_sum += pairs;
                acc.pair_sq_sum += pairs * pairs;
                if let Some(first) = schedule.pairs.first() {
                    acc.first_sum += first.tx_position_m - cycle.v2v_origin_m();
                    acc.first_n += 1;
                    // Index of the first transmitter among area helpers.
                    let idx = helper_pos.partition_point(|&x| x <= first.tx_position_m);
                    bump(&mut acc.delay_counts, idx.max(1));
                }
                for w in schedule.pairs.windows(2) {
                    let (prev, cur) = (w[0].tx_position_m, w[1].tx_position_m);
                    acc.gap_sum += cur - prev;
                    acc.gap_n += 1;
                    // Helpers inspected past the exclusion point,
                    // counting the chosen transmitter itself.
                    let rc = one_cycle.sensing_range_m;
                    let lo = helper_pos.partition_point(|&x| x < prev + rc);
                    let hi = helper_pos.partition_point(|&x| x <= cur);
                    bump(&mut acc.renewal_counts, (hi - lo).max(1));
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(StatsAccum::default(), StatsAccum::merge);

    let n = accum.snapshots as f64;
    let mean = accum.pair_sum as f64 / n;
    let variance =
        ((accum.pair_sq_sum as f64 / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
    Ok(PairStats {
        snapshots: accum.snapshots,
        mean_pairs: mean,
        se_pairs: (variance / n).sqrt(),
        mean_gap_m: (accum.gap_n > 0).then(|| accum.gap_sum / accum.gap_n as f64),
        mean_first_gap_m: (accum.first_n > 0).then(|| accum.first_sum / accum.first_n as f64),
        gap_samples: accum.gap_n,
        first_samples: accum.first_n,
        renewal_index_counts: accum.renewal_counts,
        delay_index_counts: accum.delay_counts,
    })
}
