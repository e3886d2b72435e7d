//! Slot-stepped Monte-Carlo simulation of the cooperative strategy:
//! prioritized infrastructure service, helper prefetching into a
//! per-cycle buffer, V2V delivery through the greedy pair schedule, and
//! per-direction capacity accounting.
//!
//! Each trial owns its RNG stream and mutable state; trials run
//! independently and in parallel. A trial is bit-reproducible from
//! `(seed, trial_index)`.

use crate::error::{Error, Result};
use crate::highway::{Direction, NetworkParams, Role, Snapshot};
use crate::scheduler::select_pairs_opt;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::Write;

/// Where helper-prefetched data is pooled before V2V delivery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BufferScope {
    /// Helpers deliver within the cycle whose infrastructure point
    /// fetched the data. Default; matches the per-cycle capacity
    /// decomposition.
    #[default]
    CycleLocal,
    /// A single road-wide pool, for sensitivity analysis of the
    /// cycle-local modeling choice.
    Global,
}

/// Full simulation configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub params: NetworkParams,
    /// Slot length in seconds; vehicles are treated as stationary
    /// within a slot.
    pub slot_s: f64,
    /// Measured (post-warm-up) simulated time per trial.
    pub duration_s: f64,
    pub trials: u32,
    pub seed: u64,
    /// `false` runs the infrastructure-only baseline: no helper
    /// prefetching and no V2V delivery.
    pub cooperative: bool,
    pub buffer_scope: BufferScope,
}

impl SimConfig {
    /// Upper bound on per-slot movement relative to the vehicle radio
    /// range, keeping slots quasi-static.
    pub const MAX_SLOT_TRAVEL_FRACTION: f64 = 0.1;

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.slot_s.is_finite() && self.slot_s > 0.0) {
            return Err(Error::InvalidParameter {
                name: "slot_s",
                reason: format!("must be finite and > 0, got {}", self.slot_s),
            });
        }
        let travel =
            self.params.speed_east_mps.max(self.params.speed_west_mps) * self.slot_s;
        let limit = self.params.vehicle_radio_m * Self::MAX_SLOT_TRAVEL_FRACTION;
        if travel > limit {
            return Err(Error::InvalidParameter {
                name: "slot_s",
                reason: format!(
                    "vehicles travel {travel} m per slot; the quasi-static bound is {limit} m"
                ),
            });
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::InvalidParameter {
                name: "duration_s",
                reason: format!("must be finite and > 0, got {}", self.duration_s),
            });
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter {
                name: "trials",
                reason: "must be at least 1".to_string(),
            });
        }
        Ok(())
    }

    /// Warm-up discarded from accounting so the cycle buffers reach
    /// steady state. Cycle traversal alone (d/v) is not enough: near
    /// the fetch/delivery crossover the buffer backlog equilibrates on
    /// the scale of several area traversals, so the warm-up takes the
    /// larger of three cycle traversals and 300 s.
    pub fn warmup_s(&self) -> f64 {
        let d = self.params.infra_spacing_m;
        let traversal = (d / self.params.speed_east_mps).max(d / self.params.speed_west_mps);
        (3.0 * traversal).max(300.0)
    }
}

/// Bits delivered to VoIs, split by travel direction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DirectionTotals {
    pub east_bits: f64,
    pub west_bits: f64,
}

impl DirectionTotals {
    pub fn total_bits(&self) -> f64 {
        self.east_bits + self.west_bits
    }

    fn add(&mut self, direction: Direction, bits: f64) {
        match direction {
            Direction::East => self.east_bits += bits,
            Direction::West => self.west_bits += bits,
        }
    }
}

/// Accumulated outcome of one trial. Delivered totals cover the
/// accounted window only; `fetched_bits_full` and
/// `v2v_delivered_bits_full` cover the whole trial including warm-up
/// for the buffer-conservation audit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    pub v2i: DirectionTotals,
    pub v2v: DirectionTotals,
    /// Accounted helper prefetch volume.
    pub fetched_bits: f64,
    /// Whole-trial prefetch volume (audit).
    pub fetched_bits_full: f64,
    /// Whole-trial V2V delivery volume (audit).
    pub v2v_delivered_bits_full: f64,
    /// Accounted time span.
    pub accounted_s: f64,
    /// (slot, cycle) samples with at least one VoI in coverage.
    pub voi_slot_count: u64,
    /// (slot, cycle) samples where a helper prefetched instead.
    pub helper_slot_count: u64,
    /// Accounted (slot, cycle) samples.
    pub slot_cycle_samples: u64,
    /// Scheduled pairs summed over accounted (slot, cycle) samples.
    pub pair_count_sum: u64,
}

impl TrialStats {
    pub fn delivered_bits(&self) -> f64 {
        self.v2i.total_bits() + self.v2v.total_bits()
    }

    pub fn empirical_capacity_bps(&self) -> f64 {
        self.delivered_bits() / self.accounted_s
    }

    pub fn empirical_pair_mean(&self) -> f64 {
        self.pair_count_sum as f64 / self.slot_cycle_samples as f64
    }

    pub fn east_bits(&self) -> f64 {
        self.v2i.east_bits + self.v2v.east_bits
    }

    pub fn west_bits(&self) -> f64 {
        self.v2i.west_bits + self.v2v.west_bits
    }
}

/// Runs one trial. Deterministic given `(config.seed, trial_index)`.
pub fn run_trial(config: &SimConfig, trial_index: u32) -> Result<TrialStats> {
    run_trial_with_log(config, trial_index, None)
}

/// As [`run_trial`], optionally writing one structured-text record per
/// slot (`key=value` pairs) to `slot_log` for small diagnostic runs.
pub fn run_trial_with_log(
    config: &SimConfig,
    trial_index: u32,
    mut slot_log: Option<&mut dyn Write>,
) -> Result<TrialStats> {
    config.validate()?;
    let params = &config.params;
    let dt = config.slot_s;
    let w_i = params.v2i_rate_bps;
    let w_v = params.v2v_rate_bps;
    let n_cycles = params.cycle_count();

    let warm_slots = (config.warmup_s() / dt).ceil() as u64;
    let accounted_slots = (config.duration_s / dt).round().max(1.0) as u64;
    let total_slots = warm_slots + accounted_slots;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::from(trial_index) + 1);
    let mut snapshot = Snapshot::sample_with(params, &mut rng)?;

    let mut buffers = vec![
        0.0f64;
        match config.buffer_scope {
            BufferScope::CycleLocal => n_cycles,
            BufferScope::Global => 1,
        }
    ];
    let buffer_of = |cycle: usize| match config.buffer_scope {
        BufferScope::CycleLocal => cycle,
        BufferScope::Global => 0,
    };

    let mut stats = TrialStats {
        v2i: DirectionTotals::default(),
        v2v: DirectionTotals::default(),
        fetched_bits: 0.0,
        fetched_bits_full: 0.0,
        v2v_delivered_bits_full: 0.0,
        accounted_s: accounted_slots as f64 * dt,
        voi_slot_count: 0,
        helper_slot_count: 0,
        slot_cycle_samples: 0,
        pair_count_sum: 0,
    };

    for slot in 0..total_slots {
        let accounted = slot >= warm_slots;
        let mut slot_v2i = 0.0f64;
        let mut slot_v2v = 0.0f64;
        let mut slot_pairs = 0u64;

        for cycle_index in 0..n_cycles {
            let cycle = snapshot.cycle(cycle_index);

            // Prioritized infrastructure service: a covered VoI wins the
            // slot; otherwise a covered helper prefetches (cooperative
            // mode only).
            if let Some(voi) = snapshot.first_in(cycle.v2i_span(), Role::Voi) {
                let direction = snapshot.vehicles()[voi].direction;
                slot_v2i += w_i * dt;
                if accounted {
                    stats.v2i.add(direction, w_i * dt);
                    stats.voi_slot_count += 1;
                }
            } else if config.cooperative
                && snapshot.first_in(cycle.v2i_span(), Role::Helper).is_some()
            {
                buffers[buffer_of(cycle_index)] += w_i * dt;
                stats.fetched_bits_full += w_i * dt;
                if accounted {
                    stats.fetched_bits += w_i * dt;
                    stats.helper_slot_count += 1;
                }
            }
            if accounted {
                stats.slot_cycle_samples += 1;
            }

            if config.cooperative {
                let schedule = select_pairs_opt(&snapshot, &cycle);
                slot_pairs += schedule.pairs.len() as u64;
                if accounted {
                    stats.pair_count_sum += schedule.pairs.len() as u64;
                }
                let buffer = &mut buffers[buffer_of(cycle_index)];
                for pair in &schedule.pairs {
                    // V2V delivery never exceeds what helpers fetched.
                    let grant = (w_v * dt).min(*buffer);
                    if grant <= 0.0 {
                        break;
                    }
                    *buffer -= grant;
                    stats.v2v_delivered_bits_full += grant;
                    slot_v2v += grant;
                    if accounted {
                        let direction = snapshot.vehicles()[pair.receiver_index].direction;
                        stats.v2v.add(direction, grant);
                    }
                }
            }
        }

        if let Some(log) = slot_log.as_deref_mut() {
            writeln!(
                log,
                "slot={slot} time_s={:.3} accounted={} v2i_bits={slot_v2i} \
                 v2v_bits={slot_v2v} pairs={slot_pairs} buffer_bits={:.1}",
                snapshot.time_s(),
                u8::from(accounted),
                buffers.iter().sum::<f64>(),
            )
            .map_err(|e| Error::Domain(format!("slot log write failed: {e}")))?;
        }

        snapshot = snapshot.advanced(dt)?;
    }

    debug_assert!(
        stats.v2v_delivered_bits_full <= stats.fetched_bits_full + 1e-6,
        "V2V delivery exceeded the fetched volume"
    );
    Ok(stats)
}

/// Mean and standard error of the per-trial capacities, plus the
/// per-mechanism and per-direction means.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub mean_capacity_bps: f64,
    pub se_capacity_bps: f64,
    pub east_mean_bps: f64,
    pub west_mean_bps: f64,
    pub v2i_mean_bps: f64,
    pub v2v_mean_bps: f64,
    pub mean_pairs: f64,
    pub se_pairs: f64,
    pub trials: Vec<TrialStats>,
}

/// Runs all trials (in parallel) and aggregates. Requires at least two
/// trials so the standard error is defined.
pub fn run_experiment(config: &SimConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    if config.trials < 2 {
        return Err(Error::InvalidParameter {
            name: "trials",
            reason: "an experiment needs at least 2 trials".to_string(),
        });
    }
    let trials: Vec<TrialStats> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect::<Result<_>>()?;

    let (capacity_mean, capacity_se) =
        mean_se(trials.iter().map(TrialStats::empirical_capacity_bps));
    let (pair_mean, pair_se) = mean_se(trials.iter().map(TrialStats::empirical_pair_mean));
    let n = trials.len() as f64;
    let east = trials
        .iter()
        .map(|t| t.east_bits() / t.accounted_s)
        .sum::<f64>()
        / n;
    let west = trials
        .iter()
        .map(|t| t.west_bits() / t.accounted_s)
        .sum::<f64>()
        / n;
    let v2i = trials
        .iter()
        .map(|t| t.v2i.total_bits() / t.accounted_s)
        .sum::<f64>()
        / n;
    let v2v = trials
        .iter()
        .map(|t| t.v2v.total_bits() / t.accounted_s)
        .sum::<f64>()
        / n;
    Ok(ExperimentSummary {
        mean_capacity_bps: capacity_mean,
        se_capacity_bps: capacity_se,
        east_mean_bps: east,
        west_mean_bps: west,
        v2i_mean_bps: v2i,
        v2v_mean_bps: v2v,
        mean_pairs: pair_mean,
        se_pairs: pair_se,
        trials,
    })
}

fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let values: Vec<f64> = values.collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
