//! Closed-form capacity results: per-cycle rates, transmitter-gap
//! distributions, pair-count expectations and the total/directional
//! capacity of the highway segment.
//!
//! Everything here is a pure function of [`NetworkParams`]. Quantities
//! that vanish smoothly as `p -> 0` are evaluated through `exp_m1` so
//! the sweep outputs keep relative accuracy near zero.

use crate::error::{Error, Result};
use crate::highway::NetworkParams;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

/// 1 - e^{-x} without cancellation for small x.
#[inline]
fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// Constants shared by the gap distributions and the capacity formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// Probability that one helper-to-helper increment carries no VoI:
    /// `1 - p + p e^{-rho 2 r0}`.
    pub c1: f64,
    /// `(1-p) p rho (1 - e^{-rho 2 r0})`, per meter.
    pub c2: f64,
    /// Per-cycle capacity ceiling: the infrastructure's delivery rate
    /// to any vehicle, `w_I (1 - e^{-rho 2 r_I})`.
    pub eta_max_cycle_bps: f64,
}

impl DerivedConstants {
    pub fn from_params(params: &NetworkParams) -> Result<Self> {
        params.validate()?;
        let rho = params.total_density();
        let p = params.voi_fraction;
        let window = one_minus_exp_neg(rho * 2.0 * params.vehicle_radio_m);
        Ok(Self {
            c1: 1.0 - p * window,
            c2: (1.0 - p) * p * rho * window,
            eta_max_cycle_bps: params.v2i_rate_bps
                * one_minus_exp_neg(rho * 2.0 * params.infra_radio_m),
        })
    }
}

/// Which side of the per-cycle capacity `min` binds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bottleneck {
    /// Helper prefetching from infrastructure limits V2V delivery; the
    /// cycle runs at its ceiling.
    FetchLimited,
    /// Helper-to-VoI delivery in the uncovered area limits V2V.
    DeliveryLimited,
    /// The cycle capacity equals the ceiling `eta_max` (p = 1, or the
    /// two sides of the min tie within tolerance).
    Saturated,
}

impl Bottleneck {
    pub fn as_str(&self) -> &'static str {
        match self {
            Bottleneck::FetchLimited => "fetch-limited",
            Bottleneck::DeliveryLimited => "delivery-limited",
            Bottleneck::Saturated => "saturated",
        }
    }
}

impl std::str::FromStr for Bottleneck {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fetch-limited" => Ok(Bottleneck::FetchLimited),
            "delivery-limited" => Ok(Bottleneck::DeliveryLimited),
            "saturated" => Ok(Bottleneck::Saturated),
            other => Err(format!("unknown bottleneck label `{other}`")),
        }
    }
}

/// Relative tolerance for declaring the cycle capacity saturated.
pub const SATURATION_REL_TOL: f64 = 1e-9;

/// All analytic outputs for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityBreakdown {
    pub v2i_voi_rate_bps: f64,
    pub helper_fetch_rate_bps: f64,
    /// V2V delivery rate ignoring how much data helpers hold; 0 at p=1
    /// where no helpers exist.
    pub v2v_unconstrained_rate_bps: f64,
    /// min(helper_fetch_rate, v2v_unconstrained_rate).
    pub v2v_effective_rate_bps: f64,
    pub cycle_capacity_bps: f64,
    pub total_capacity_bps: f64,
    /// Cycle-capacity share of eastbound VoIs; east + west sums to
    /// cycle_capacity_bps exactly.
    pub east_share_bps: f64,
    pub west_share_bps: f64,
    pub bottleneck: Bottleneck,
}

/// Rate at which VoIs in one cycle receive data directly from the
/// infrastructure: `w_I (1 - e^{-p rho 2 r_I})`.
pub fn v2i_voi_rate(params: &NetworkParams) -> Result<f64> {
    params.validate()?;
    let exponent =
        params.voi_fraction * params.total_density() * 2.0 * params.infra_radio_m;
    Ok(params.v2i_rate_bps * one_minus_exp_neg(exponent))
}

/// Rate at which helpers in one cycle prefetch from the infrastructure:
/// `w_I (e^{-p rho 2 r_I} - e^{-rho 2 r_I})`, evaluated as
/// `w_I e^{-p rho 2 r_I} (1 - e^{-(1-p) rho 2 r_I})` so the sum with
/// [`v2i_voi_rate`] telescopes to `eta_max` at machine precision.
pub fn helper_fetch_rate(params: &NetworkParams) -> Result<f64> {
    params.validate()?;
    let coverage = params.total_density() * 2.0 * params.infra_radio_m;
    let p = params.voi_fraction;
    Ok(params.v2i_rate_bps
        * (-p * coverage).exp()
        * one_minus_exp_neg((1.0 - p) * coverage))
}

fn require_helpers(params: &NetworkParams) -> Result<()> {
    if params.voi_fraction >= 1.0 {
        return Err(Error::Domain(
            "no helpers exist at voi_fraction = 1; the helper-gap quantities are undefined"
                .to_string(),
        ));
    }
    Ok(())
}

/// Expected distance between consecutive scheduled transmitters,
/// `R_c + (p - p e^{-rho 2 r0} + e^{-p rho 2 r0}) / c2`.
pub fn expected_transmitter_gap(params: &NetworkParams) -> Result<f64> {
    params.validate()?;
    require_helpers(params)?;
    let k = DerivedConstants::from_params(params)?;
    let rho = params.total_density();
    let p = params.voi_fraction;
    let numerator = p * one_minus_exp_neg(rho * 2.0 * params.vehicle_radio_m)
        + (-p * rho * 2.0 * params.vehicle_radio_m).exp();
    Ok(params.sensing_range_m + numerator / k.c2)
}

/// Expected number of simultaneously active helper-VoI pairs in one
/// uncovered area, `(d - 2 r_I) / E[gap]` in closed form.
pub fn expected_pair_count(params: &NetworkParams) -> Result<f64> {
    params.validate()?;
    require_helpers(params)?;
    let k = DerivedConstants::from_params(params)?;
    let rho = params.total_density();
    let p = params.voi_fraction;
    let tail = p * one_minus_exp_neg(rho * 2.0 * params.vehicle_radio_m)
        + (-p * rho * 2.0 * params.vehicle_radio_m).exp();
    Ok(k.c2 * params.v2v_area_m() / (k.c2 * params.sensing_range_m + tail))
}

/// V2V delivery rate ignoring the helper-buffer constraint:
/// `w_V * expected_pair_count`.
pub fn v2v_unconstrained_rate(params: &NetworkParams) -> Result<f64> {
    Ok(params.v2v_rate_bps * expected_pair_count(params)?)
}

/// Per-cycle capacity with its full decomposition.
pub fn cycle_capacity(params: &NetworkParams) -> Result<CapacityBreakdown> {
    params.validate()?;
    let k = DerivedConstants::from_params(params)?;
    let v2i = v2i_voi_rate(params)?;
    let fetch = helper_fetch_rate(params)?;
    let p_one = params.voi_fraction >= 1.0;
    let unconstrained = if p_one {
        0.0
    } else {
        v2v_unconstrained_rate(params)?
    };
    let effective = fetch.min(unconstrained);
    let cycle = v2i + effective;
    let bottleneck = if p_one {
        Bottleneck::Saturated
    } else if fetch < unconstrained {
        Bottleneck::FetchLimited
    } else if cycle >= k.eta_max_cycle_bps * (1.0 - SATURATION_REL_TOL) {
        Bottleneck::Saturated
    } else {
        Bottleneck::DeliveryLimited
    };
    let (east, west) = directional_split(params, cycle)?;
    Ok(CapacityBreakdown {
        v2i_voi_rate_bps: v2i,
        helper_fetch_rate_bps: fetch,
        v2v_unconstrained_rate_bps: unconstrained,
        v2v_effective_rate_bps: effective,
        cycle_capacity_bps: cycle,
        total_capacity_bps: cycle * cycles_on_road(params),
        east_share_bps: east,
        west_share_bps: west,
        bottleneck,
    })
}

fn cycles_on_road(params: &NetworkParams) -> f64 {
    params.cycle_count() as f64
}

/// Capacity of the whole highway segment, `(L/d) * cycle capacity`.
pub fn total_capacity(params: &NetworkParams) -> Result<f64> {
    Ok(cycle_capacity(params)?.total_capacity_bps)
}

/// Splits a capacity between eastbound and westbound VoIs in proportion
/// to the directional densities. The two shares sum to `capacity_bps`
/// exactly; the ratio holds to rounding.
pub fn directional_split(params: &NetworkParams, capacity_bps: f64) -> Result<(f64, f64)> {
    if capacity_bps < 0.0 {
        return Err(Error::Domain(format!(
            "capacity must be nonnegative, got {capacity_bps}"
        )));
    }
    let rho = params.density_east_per_m + params.density_west_per_m;
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Domain(
            "directional split undefined for zero total density".to_string(),
        ));
    }
    let east = capacity_bps * (params.density_east_per_m / rho);
    Ok((east, capacity_bps - east))
}

/// pmf of the 1-based index, among helpers past the sensing-exclusion
/// point, of the next scheduled transmitter.
pub fn pmf_renewal_index(m: u64, params: &NetworkParams) -> Result<f64> {
    params.validate()?;
    if m < 1 {
        return Err(Error::Domain("index pmf is defined for m >= 1".to_string()));
    }
    let rho = params.total_density();
    let p = params.voi_fraction;
    let a = p * rho * 2.0 * params.vehicle_radio_m;
    if m == 1 {
        return Ok(one_minus_exp_neg(a));
    }
    let c1 = 1.0 - p * one_minus_exp_neg(rho * 2.0 * params.vehicle_radio_m);
    Ok((-a).exp() * (1.0 - c1) * c1.powf((m - 2) as f64))
}

/// pmf of the 1-based index, among helpers right of the uncovered
/// area's origin, of the first scheduled transmitter.
pub fn pmf_delay_index(m: u64, params: &NetworkParams) -> Result<f64> {
    params.validate()?;
    if m < 1 {
        return Err(Error::Domain("index pmf is defined for m >= 1".to_string()));
    }
    let rho = params.total_density();
    let p = params.voi_fraction;
    let r0 = params.vehicle_radio_m;
    let a = p * rho * r0;
    let b = 1.0 - p * one_minus_exp_neg(rho * r0);
    if m == 1 {
        return Ok(1.0 - b * (-a).exp());
    }
    let c1 = 1.0 - p * one_minus_exp_neg(rho * 2.0 * r0);
    Ok((-a).exp() * (1.0 - c1) * c1.powf((m - 2) as f64) * b)
}

/// Which transmitter gap a [`GapDistribution`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    /// Origin of the uncovered area to the first transmitter (the
    /// delay interval of the delayed renewal process).
    Delay,
    /// Between consecutive transmitters (the recurring renewal
    /// interval); support starts at the sensing range.
    Renewal,
}

/// Largest series cutoff accepted before the mixture is declared
/// intractable (reached only for voi_fraction within ~1e-6 of 0).
const MAX_SERIES_CUTOFF: u64 = 4_000_000;

/// Default bound on the pmf mass excluded by series truncation.
pub const DEFAULT_TAIL_BOUND: f64 = 1e-9;

/// Erlang-mixture density of a transmitter gap, truncated where the
/// geometric pmf tail drops below `tail_bound`.
#[derive(Debug, Clone, Copy)]
pub struct GapDistribution {
    kind: GapKind,
    params: NetworkParams,
    /// Erlang rate (helper density).
    rate_per_m: f64,
    /// Support offset: sensing range for renewal gaps, 0 for the delay.
    offset_m: f64,
    /// Mixture weight of m = 1.
    first_weight: f64,
    /// Coefficient of the geometric branch: weight(m) = coeff * c1^{m-2}.
    geometric_coeff: f64,
    c1: f64,
    series_cutoff: u64,
    tail_bound: f64,
}

impl GapDistribution {
    pub fn new(kind: GapKind, params: &NetworkParams) -> Result<Self> {
        Self::with_tail_bound(kind, params, DEFAULT_TAIL_BOUND)
    }

    pub fn with_tail_bound(
        kind: GapKind,
        params: &NetworkParams,
        tail_bound: f64,
    ) -> Result<Self> {
        params.validate()?;
        require_helpers(params)?;
        if !(tail_bound > 0.0 && tail_bound < 1.0) {
            return Err(Error::Domain(format!(
                "tail bound must lie in (0, 1), got {tail_bound}"
            )));
        }
        let rho = params.total_density();
        let p = params.voi_fraction;
        let r0 = params.vehicle_radio_m;
        let c1 = 1.0 - p * one_minus_exp_neg(rho * 2.0 * r0);
        let (first_weight, geometric_coeff, offset_m) = match kind {
            GapKind::Renewal => {
                let a = p * rho * 2.0 * r0;
                (
                    one_minus_exp_neg(a),
                    (-a).exp() * (1.0 - c1),
                    params.sensing_range_m,
                )
            }
            GapKind::Delay => {
                let a = p * rho * r0;
                let b = 1.0 - p * one_minus_exp_neg(rho * r0);
                (1.0 - b * (-a).exp(), (-a).exp() * (1.0 - c1) * b, 0.0)
            }
        };
        // Mass beyond cutoff M is geometric_coeff * c1^{M-1} / (1 - c1).
        let tail_at = |m: f64| geometric_coeff / (1.0 - c1) * c1.powf(m - 1.0);
        let series_cutoff = if tail_at(1.0) <= tail_bound {
            1
        } else {
            let m = 1.0 + (tail_bound * (1.0 - c1) / geometric_coeff).ln() / c1.ln();
            m.ceil() as u64
        };
        if series_cutoff > MAX_SERIES_CUTOFF {
            return Err(Error::Domain(format!(
                "series cutoff {series_cutoff} exceeds the supported maximum \
                 {MAX_SERIES_CUTOFF}; voi_fraction is too close to 0"
            )));
        }
        Ok(Self {
            kind,
            params: *params,
            rate_per_m: (1.0 - p) * rho,
            offset_m,
            first_weight,
            geometric_coeff,
            c1,
            series_cutoff,
            tail_bound,
        })
    }

    pub fn kind(&self) -> GapKind {
        self.kind
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    /// Number of mixture terms retained.
    pub fn series_cutoff(&self) -> u64 {
        self.series_cutoff
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Mixture weight of index `m` (the matching index pmf).
    pub fn weight(&self, m: u64) -> f64 {
        match m {
            0 => 0.0,
            1 => self.first_weight,
            _ => self.geometric_coeff * self.c1.powf((m - 2) as f64),
        }
    }

    /// Probability density at `x` meters. Renewal gaps have density 0
    /// below the sensing range.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::Domain(format!(
                "gap density requires x >= 0, got {x}"
            )));
        }
        let y = x - self.offset_m;
        if y < 0.0 {
            return Ok(0.0);
        }
        let alpha = self.rate_per_m;
        if y == 0.0 {
            // Only the single-stage term has mass at the support edge.
            return Ok(alpha * self.first_weight);
        }
        // Sum over m of Erlang(y; m, alpha) * weight(m), iterating the
        // Erlang term in log space: e(m+1)/e(m) = alpha*y/m.
        let log_ay = (alpha * y).ln();
        let mut log_erlang = alpha.ln() - alpha * y;
        let mut weight = self.first_weight;
        let mut sum = 0.0;
        let past_peak = alpha * y * self.c1 + 1.0;
        for m in 1..=self.series_cutoff {
            let term = log_erlang.exp() * weight;
            sum += term;
            if m as f64 > past_peak && term < sum * 1e-18 && m >= 2 {
                break;
            }
            log_erlang += log_ay - (m as f64).ln();
            weight = if m == 1 {
                self.geometric_coeff
            } else {
                weight * self.c1
            };
        }
        Ok(sum)
    }

    /// Draws one gap: sample the mixture index, then the Erlang stage
    /// sum.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = if rng.gen::<f64>() < self.first_weight {
            1
        } else {
            // Conditional on m >= 2 the index is 2 + Geometric(1 - c1).
            2 + (rng.gen::<f64>().ln() / self.c1.ln()).floor() as u64
        };
        let gamma = Gamma::new(m as f64, 1.0 / self.rate_per_m)
            .expect("positive shape and scale");
        self.offset_m + gamma.sample(rng)
    }
}

/// MGF of the helper-gap increment clamped to one radio coverage,
/// `min(Exp((1-p) rho), 2 r0)`; evaluated through `exp_m1` so the
/// removable singularity at `t = (1-p) rho` keeps full precision.
pub fn truncated_gap_mgf(t: f64, params: &NetworkParams) -> Result<f64> {
    params.validate()?;
    require_helpers(params)?;
    let beta = (1.0 - params.voi_fraction) * params.total_density();
    let span = 2.0 * params.vehicle_radio_m;
    let u = t - beta;
    let z = span * u;
    // M(t) = beta * (e^z - 1)/u + e^z, with (e^z - 1)/u -> span as u -> 0.
    let ratio = if u == 0.0 { span } else { z.exp_m1() / u };
    Ok(beta * ratio + z.exp())
}

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Estimates the exact expected pair count (the renewal sum) by
/// sampling the delay gap and then renewal gaps until the uncovered
/// area is exceeded. Deterministic given `seed`; sampling is batched
/// across threads with one RNG stream per batch.
pub fn pair_count_renewal_mc(
    params: &NetworkParams,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if samples < 1 {
        return Err(Error::Domain("need at least one sample".to_string()));
    }
    let delay = GapDistribution::new(GapKind::Delay, params)?;
    let renewal = GapDistribution::new(GapKind::Renewal, params)?;
    let area = params.v2v_area_m();
    const BATCH: u64 = 8_192;
    let batches = samples.div_ceil(BATCH);
    // Batches are merged in order so the result is bit-reproducible.
    let (sum, sum_sq) = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(batch + 1);
            let count = BATCH.min(samples - batch * BATCH);
            let mut s = 0.0f64;
            let mut s2 = 0.0f64;
            for _ in 0..count {
                let mut position = delay.sample(&mut rng);
                let mut pairs = 0u64;
                while position <= area {
                    pairs += 1;
                    position += renewal.sample(&mut rng);
                }
                s += pairs as f64;
                s2 += (pairs * pairs) as f64;
            }
            (s, s2)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = sum / n;
    let variance = ((sum_sq / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        std_error: (variance / n).sqrt(),
        samples,
    })
}
