//! Road geometry, vehicle population and Poisson traffic sampling.
//!
//! The road is modeled as a ring of length `L` so the spatial vehicle
//! field stays exactly stationary for arbitrarily long runs: advancing
//! every vehicle is a rigid rotation of two independent Poisson
//! processes, which leaves their law unchanged. `L` must be an integer
//! multiple of the infrastructure spacing `d` so the ring tiles into
//! whole cycles.

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// Travel direction on the bi-directional highway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    East,
    West,
}

/// Whether a vehicle has an active download request (VoI) or assists
/// delivery (helper).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Voi,
    Helper,
}

/// Full scenario parameterization. Units are meters, seconds,
/// vehicles/meter and bits/second throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    /// Road (ring) length L.
    pub road_length_m: f64,
    /// Inter-infrastructure distance d.
    pub infra_spacing_m: f64,
    /// Infrastructure radio range r_I.
    pub infra_radio_m: f64,
    /// Vehicle radio range r_0.
    pub vehicle_radio_m: f64,
    /// CSMA sensing range R_c: minimum spacing between simultaneous
    /// vehicle transmitters.
    pub sensing_range_m: f64,
    /// Eastbound vehicle density rho_1.
    pub density_east_per_m: f64,
    /// Westbound vehicle density rho_2.
    pub density_west_per_m: f64,
    /// Fraction p of vehicles with a download request.
    pub voi_fraction: f64,
    /// Eastbound speed v_1.
    pub speed_east_mps: f64,
    /// Westbound speed v_2.
    pub speed_west_mps: f64,
    /// Infrastructure-to-vehicle data rate w_I.
    pub v2i_rate_bps: f64,
    /// Vehicle-to-vehicle data rate w_V.
    pub v2v_rate_bps: f64,
}

/// Relative slack accepted when checking that L is a whole number of
/// cycles.
const CYCLE_MULTIPLE_TOL: f64 = 1e-9;

impl NetworkParams {
    /// Validates every invariant; returns the first violation.
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 11] = [
            ("road_length_m", self.road_length_m),
            ("infra_spacing_m", self.infra_spacing_m),
            ("infra_radio_m", self.infra_radio_m),
            ("vehicle_radio_m", self.vehicle_radio_m),
            ("sensing_range_m", self.sensing_range_m),
            ("density_east_per_m", self.density_east_per_m),
            ("density_west_per_m", self.density_west_per_m),
            ("speed_east_mps", self.speed_east_mps),
            ("speed_west_mps", self.speed_west_mps),
            ("v2i_rate_bps", self.v2i_rate_bps),
            ("v2v_rate_bps", self.v2v_rate_bps),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {value}"),
                });
            }
        }
        let p = self.voi_fraction;
        if !(p.is_finite() && p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "voi_fraction",
                reason: format!("must satisfy 0 < p <= 1, got {p}"),
            });
        }
        if self.infra_spacing_m <= 2.0 * self.infra_radio_m {
            return Err(Error::InvalidParameter {
                name: "infra_spacing_m",
                reason: format!(
                    "must exceed 2 * infra_radio_m = {} so an uncovered area exists",
                    2.0 * self.infra_radio_m
                ),
            });
        }
        let ratio = self.road_length_m / self.infra_spacing_m;
        if (ratio - ratio.round()).abs() > CYCLE_MULTIPLE_TOL * ratio.max(1.0) || ratio < 0.5 {
            return Err(Error::InvalidParameter {
                name: "road_length_m",
                reason: format!(
                    "must be an integer multiple of infra_spacing_m, got ratio {ratio}"
                ),
            });
        }
        Ok(())
    }

    /// Pooled vehicle density rho = rho_1 + rho_2.
    pub fn total_density(&self) -> f64 {
        self.density_east_per_m + self.density_west_per_m
    }

    /// Number of complete cycles on the ring.
    pub fn cycle_count(&self) -> usize {
        (self.road_length_m / self.infra_spacing_m).round() as usize
    }

    /// Length of the area between two consecutive coverage regions,
    /// d - 2 r_I.
    pub fn v2v_area_m(&self) -> f64 {
        self.infra_spacing_m - 2.0 * self.infra_radio_m
    }

    /// Parses `key = value` lines into a builder. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn builder_from_key_values(text: &str) -> Result<ParamsBuilder> {
        let mut builder = ParamsBuilder::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Config {
                line: i + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|e| Error::Config {
                line: i + 1,
                reason: format!("bad numeric value for `{key}`: {e}"),
            })?;
            builder.set(key, value).map_err(|reason| Error::Config {
                line: i + 1,
                reason,
            })?;
        }
        Ok(builder)
    }
}

/// Accumulates parameter fields from a config file and CLI overrides;
/// `build` requires every field to be present.
#[derive(Debug, Default, Clone)]
pub struct ParamsBuilder {
    fields: [(Option<f64>,); FIELD_NAMES.len()],
}

pub const FIELD_NAMES: [&str; 12] = [
    "road_length_m",
    "infra_spacing_m",
    "infra_radio_m",
    "vehicle_radio_m",
    "sensing_range_m",
    "density_east_per_m",
    "density_west_per_m",
    "voi_fraction",
    "speed_east_mps",
    "speed_west_mps",
    "v2i_rate_bps",
    "v2v_rate_bps",
];

impl ParamsBuilder {
    /// Sets a field by its config-file name. Returns a description of
    /// the problem when the key is unknown.
    pub fn set(&mut self, key: &str, value: f64) -> std::result::Result<(), String> {
        match FIELD_NAMES.iter().position(|n| *n == key) {
            Some(i) => {
                self.fields[i].0 = Some(value);
                Ok(())
            }
            None => Err(format!("unknown parameter `{key}`")),
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        FIELD_NAMES
            .iter()
            .position(|n| *n == key)
            .and_then(|i| self.fields[i].0)
    }

    /// Starts from an existing parameter set (used by presets).
    pub fn from_params(params: &NetworkParams) -> Self {
        let mut b = Self::default();
        for (i, name) in FIELD_NAMES.iter().enumerate() {
            b.fields[i].0 = Some(params_field(params, name));
        }
        b
    }

    /// Builds and validates; missing fields are reported by name.
    pub fn build(&self) -> Result<NetworkParams> {
        for (i, name) in FIELD_NAMES.iter().enumerate() {
            if self.fields[i].0.is_none() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "missing (set it in the config file or pass the matching flag)"
                        .to_string(),
                });
            }
        }
        let get = |k: &str| self.get(k).unwrap();
        let params = NetworkParams {
            road_length_m: get("road_length_m"),
            infra_spacing_m: get("infra_spacing_m"),
            infra_radio_m: get("infra_radio_m"),
            vehicle_radio_m: get("vehicle_radio_m"),
            sensing_range_m: get("sensing_range_m"),
            density_east_per_m: get("density_east_per_m"),
            density_west_per_m: get("density_west_per_m"),
            voi_fraction: get("voi_fraction"),
            speed_east_mps: get("speed_east_mps"),
            speed_west_mps: get("speed_west_mps"),
            v2i_rate_bps: get("v2i_rate_bps"),
            v2v_rate_bps: get("v2v_rate_bps"),
        };
        params.validate()?;
        Ok(params)
    }
}

fn params_field(p: &NetworkParams, name: &str) -> f64 {
    match name {
        "road_length_m" => p.road_length_m,
        "infra_spacing_m" => p.infra_spacing_m,
        "infra_radio_m" => p.infra_radio_m,
        "vehicle_radio_m" => p.vehicle_radio_m,
        "sensing_range_m" => p.sensing_range_m,
        "density_east_per_m" => p.density_east_per_m,
        "density_west_per_m" => p.density_west_per_m,
        "voi_fraction" => p.voi_fraction,
        "speed_east_mps" => p.speed_east_mps,
        "speed_west_mps" => p.speed_west_mps,
        "v2i_rate_bps" => p.v2i_rate_bps,
        "v2v_rate_bps" => p.v2v_rate_bps,
        _ => unreachable!("unknown field {name}"),
    }
}

/// One vehicle on the ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    /// Coordinate in [0, road_length_m).
    pub position_m: f64,
    pub direction: Direction,
    pub role: Role,
}

/// A half-open position interval `[start, end)` on the ring. When
/// `end < start` the interval wraps through 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    start_m: f64,
    end_m: f64,
}

impl Span {
    /// Builds a span, checking both endpoints lie on the road. `end`
    /// may equal `road_length` (exclusive bound); `start == end` is
    /// rejected as malformed rather than treated as empty.
    pub fn new(start_m: f64, end_m: f64, road_m: f64) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && (0.0..=road_m).contains(&x);
        if !ok(start_m) || !ok(end_m) || start_m == end_m || start_m == road_m {
            return Err(Error::InvalidInterval {
                start_m,
                end_m,
                road_m,
            });
        }
        Ok(Self {
            start_m,
            end_m: if end_m == road_m { road_m } else { end_m },
        })
    }

    pub fn start_m(&self) -> f64 {
        self.start_m
    }

    pub fn end_m(&self) -> f64 {
        self.end_m
    }

    pub fn wraps(&self) -> bool {
        self.end_m < self.start_m
    }

    pub fn length_m(&self, road_m: f64) -> f64 {
        if self.wraps() {
            road_m - self.start_m + self.end_m
        } else {
            self.end_m - self.start_m
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        if self.wraps() {
            x >= self.start_m || x < self.end_m
        } else {
            x >= self.start_m && x < self.end_m
        }
    }
}

/// Geometry of one cycle: the coverage interval of its infrastructure
/// point plus the adjacent uncovered interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleGeometry {
    pub cycle_index: usize,
    /// Center of the infrastructure point.
    pub infra_position_m: f64,
    v2i: Span,
    v2v: Span,
}

impl CycleGeometry {
    pub fn new(params: &NetworkParams, cycle_index: usize) -> Self {
        debug_assert!(cycle_index < params.cycle_count());
        let d = params.infra_spacing_m;
        let r_i = params.infra_radio_m;
        let lo = cycle_index as f64 * d;
        let road = params.road_length_m;
        CycleGeometry {
            cycle_index,
            infra_position_m: lo + r_i,
            v2i: Span::new(lo, lo + 2.0 * r_i, road).expect("valid params imply valid v2i span"),
            v2v: Span::new(lo + 2.0 * r_i, lo + d, road)
                .expect("valid params imply valid v2v span"),
        }
    }

    /// Infrastructure coverage interval `[infra - r_I, infra + r_I)`.
    pub fn v2i_span(&self) -> Span {
        self.v2i
    }

    /// Uncovered interval between this coverage area and the next.
    pub fn v2v_span(&self) -> Span {
        self.v2v
    }

    /// Left boundary of the uncovered area; transmitter positions are
    /// measured rightward from this point.
    pub fn v2v_origin_m(&self) -> f64 {
        self.v2v.start_m()
    }
}

/// An ordered set of vehicles on the ring at one instant. Immutable
/// after construction; vehicles are sorted ascending by position with
/// ties kept in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    params: NetworkParams,
    vehicles: Vec<Vehicle>,
    time_s: f64,
}

impl Snapshot {
    /// Builds a snapshot from an arbitrary vehicle list (stable-sorted
    /// by position). Positions must already lie in [0, L).
    pub fn new(params: NetworkParams, mut vehicles: Vec<Vehicle>, time_s: f64) -> Result<Self> {
        params.validate()?;
        for v in &vehicles {
            if !(v.position_m >= 0.0 && v.position_m < params.road_length_m) {
                return Err(Error::InvalidParameter {
                    name: "position_m",
                    reason: format!(
                        "vehicle position {} outside [0, {})",
                        v.position_m, params.road_length_m
                    ),
                });
            }
        }
        sort_by_position(&mut vehicles);
        Ok(Self {
            params,
            vehicles,
            time_s,
        })
    }

    /// Samples a stationary snapshot: directional counts are Poisson
    /// with mean `rho_i * L`, positions i.i.d. uniform, and each
    /// vehicle is independently a VoI with probability `p`.
    pub fn sample(params: &NetworkParams, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::sample_with(params, &mut rng)
    }

    /// As [`Snapshot::sample`], drawing from a caller-owned RNG.
    pub fn sample_with<R: Rng + ?Sized>(params: &NetworkParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let l = params.road_length_m;
        let p = params.voi_fraction;
        let mut vehicles = Vec::new();
        for (direction, density) in [
            (Direction::East, params.density_east_per_m),
            (Direction::West, params.density_west_per_m),
        ] {
            let poisson = Poisson::new(density * l).map_err(|e| Error::InvalidParameter {
                name: "density",
                reason: format!("{e:?}"),
            })?;
            let count = poisson.sample(rng) as u64;
            for _ in 0..count {
                let role = if p >= 1.0 || rng.gen::<f64>() < p {
                    Role::Voi
                } else {
                    Role::Helper
                };
                vehicles.push(Vehicle {
                    position_m: rng.gen::<f64>() * l,
                    direction,
                    role,
                });
            }
        }
        sort_by_position(&mut vehicles);
        Ok(Self {
            params: *params,
            vehicles,
            time_s: 0.0,
        })
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn time_s(&self) -> f64 {
        self.time_s
    }

    pub fn cycle(&self, index: usize) -> CycleGeometry {
        CycleGeometry::new(&self.params, index)
    }

    pub fn cycles(&self) -> impl Iterator<Item = CycleGeometry> + '_ {
        (0..self.params.cycle_count()).map(|i| CycleGeometry::new(&self.params, i))
    }

    /// Moves every vehicle by `dt` seconds at its directional speed,
    /// wrapping around the ring, and returns the re-sorted snapshot.
    pub fn advanced(&self, dt_s: f64) -> Result<Snapshot> {
        if !(dt_s.is_finite() && dt_s > 0.0) {
            return Err(Error::Domain(format!(
                "advance requires dt > 0, got {dt_s}"
            )));
        }
        let l = self.params.road_length_m;
        let east = self.params.speed_east_mps * dt_s;
        let west = self.params.speed_west_mps * dt_s;
        let mut vehicles = self.vehicles.clone();
        for v in &mut vehicles {
            let shift = match v.direction {
                Direction::East => east,
                Direction::West => -west,
            };
            v.position_m = (v.position_m + shift).rem_euclid(l);
            // rem_euclid can return exactly l when the shifted value is
            // a tiny negative number.
            if v.position_m >= l {
                v.position_m = 0.0;
            }
        }
        sort_by_position(&mut vehicles);
        Ok(Snapshot {
            params: self.params,
            vehicles,
            time_s: self.time_s + dt_s,
        })
    }

    /// Vehicles whose position lies in `span`, optionally filtered by
    /// role and direction, in position order.
    pub fn vehicles_in(
        &self,
        span: Span,
        role: Option<Role>,
        direction: Option<Direction>,
    ) -> Vec<Vehicle> {
        self.indexed_in(span)
            .filter(|(_, v)| role.map_or(true, |r| v.role == r))
            .filter(|(_, v)| direction.map_or(true, |d| v.direction == d))
            .map(|(_, v)| *v)
            .collect()
    }

    /// Position-ordered `(index, vehicle)` pairs inside `span`. Indices
    /// refer to [`Snapshot::vehicles`]; order is ascending position
    /// even when the span wraps.
    pub fn indexed_in(&self, span: Span) -> impl Iterator<Item = (usize, &Vehicle)> {
        let (a, b) = if span.wraps() {
            // Wrapped spans decompose into [0, end) and [start, L).
            (
                self.position_range(0.0, span.end_m()),
                self.position_range(span.start_m(), self.params.road_length_m),
            )
        } else {
            (self.position_range(span.start_m(), span.end_m()), 0..0)
        };
        a.chain(b).map(|i| (i, &self.vehicles[i]))
    }

    /// Index of the leftmost vehicle with `role` inside `span`, if any.
    pub fn first_in(&self, span: Span, role: Role) -> Option<usize> {
        self.indexed_in(span).find(|(_, v)| v.role == role).map(|(i, _)| i)
    }

    /// Binary-searched index range of vehicles with position in [lo, hi).
    fn position_range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.vehicles.partition_point(|v| v.position_m < lo);
        let end = self.vehicles.partition_point(|v| v.position_m < hi);
        start..end
    }
}

fn sort_by_position(vehicles: &mut [Vehicle]) {
    // Stable sort keeps insertion order for coincident positions.
    vehicles.sort_by(|a, b| {
        a.position_m
            .partial_cmp(&b.position_m)
            .expect("vehicle positions are finite")
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn desk_params() -> NetworkParams {
        NetworkParams {
            road_length_m: 20_000.0,
            infra_spacing_m: 2_000.0,
            infra_radio_m: 400.0,
            vehicle_radio_m: 200.0,
            sensing_range_m: 400.0,
            density_east_per_m: 0.004,
            density_west_per_m: 0.006,
            voi_fraction: 0.3,
            speed_east_mps: 20.0,
            speed_west_mps: 25.0,
            v2i_rate_bps: 20e6,
            v2v_rate_bps: 2e6,
        }
    }

    #[test]
    fn validation_rejects_each_broken_invariant() {
        let ok = desk_params();
        ok.validate().unwrap();

        let mut p = ok;
        p.voi_fraction = 0.0;
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParameter { name: "voi_fraction", .. })
        ));
        p.voi_fraction = 1.2;
        assert!(p.validate().is_err());

        let mut p = ok;
        p.infra_spacing_m = 800.0; // == 2 * r_I, no uncovered area
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParameter { name: "infra_spacing_m", .. })
        ));

        let mut p = ok;
        p.road_length_m = 20_100.0; // not a multiple of d
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParameter { name: "road_length_m", .. })
        ));

        let mut p = ok;
        p.density_east_per_m = -0.1;
        assert!(p.validate().is_err());
        p.density_east_per_m = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_sorted() {
        let params = desk_params();
        let a = Snapshot::sample(&params, 7).unwrap();
        let b = Snapshot::sample(&params, 7).unwrap();
        assert_eq!(a, b);
        assert!(a
            .vehicles()
            .windows(2)
            .all(|w| w[0].position_m <= w[1].position_m));
        assert!(a
            .vehicles()
            .iter()
            .all(|v| (0.0..params.road_length_m).contains(&v.position_m)));
    }

    #[test]
    fn degenerate_thinning_p_one_yields_only_vois() {
        let mut params = desk_params();
        params.voi_fraction = 1.0;
        let snap = Snapshot::sample(&params, 3).unwrap();
        assert!(!snap.vehicles().is_empty());
        assert!(snap.vehicles().iter().all(|v| v.role == Role::Voi));
    }

    #[test]
    fn poisson_mean_count_matches_density() {
        // rho * L = 200; averaging 10^4 snapshots keeps the sample mean
        // within 3 sigma = 3 * sqrt(200 / 1e4) of the target.
        let params = desk_params();
        let n = 10_000u64;
        let total: usize = (0..n)
            .map(|s| Snapshot::sample(&params, s).unwrap().vehicles().len())
            .sum();
        let mean = total as f64 / n as f64;
        let sigma = (200.0f64 / n as f64).sqrt();
        assert!(
            (mean - 200.0).abs() < 3.0 * sigma,
            "mean vehicle count {mean} outside 200 +- {}",
            3.0 * sigma
        );
    }

    #[test]
    fn advance_moves_and_wraps() {
        let params = desk_params();
        let vehicles = vec![
            Vehicle {
                position_m: 0.0,
                direction: Direction::East,
                role: Role::Voi,
            },
            Vehicle {
                position_m: params.road_length_m - 5.0,
                direction: Direction::East,
                role: Role::Helper,
            },
            Vehicle {
                position_m: 10.0,
                direction: Direction::West,
                role: Role::Voi,
            },
        ];
        let snap = Snapshot::new(params, vehicles, 0.0).unwrap();
        let next = snap.advanced(1.0).unwrap();
        let positions: Vec<f64> = next.vehicles().iter().map(|v| v.position_m).collect();
        // east +20 (wraps 19995 -> 15), west -25 (wraps 10 -> 19985)
        assert_eq!(next.vehicles().len(), 3);
        assert!(positions.contains(&20.0));
        assert!(positions.contains(&15.0));
        assert!(positions.iter().any(|&x| (x - 19_985.0).abs() < 1e-9));
        assert_eq!(next.time_s(), 1.0);
        let roles: Vec<Role> = next.vehicles().iter().map(|v| v.role).collect();
        assert!(roles.contains(&Role::Helper));
    }

    #[test]
    fn advance_rejects_nonpositive_dt() {
        let snap = Snapshot::sample(&desk_params(), 1).unwrap();
        assert!(snap.advanced(0.0).is_err());
        assert!(snap.advanced(-1.0).is_err());
    }

    #[test]
    fn span_validation() {
        assert!(Span::new(-1.0, 5.0, 10.0).is_err());
        assert!(Span::new(3.0, 3.0, 10.0).is_err());
        assert!(Span::new(0.0, 11.0, 10.0).is_err());
        let wrapped = Span::new(8.0, 2.0, 10.0).unwrap();
        assert!(wrapped.wraps());
        assert!(wrapped.contains(9.0));
        assert!(wrapped.contains(1.0));
        assert!(!wrapped.contains(5.0));
        assert!((wrapped.length_m(10.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn whole_road_query_returns_everything() {
        let params = desk_params();
        let snap = Snapshot::sample(&params, 11).unwrap();
        let span = Span::new(0.0, params.road_length_m, params.road_length_m).unwrap();
        assert_eq!(snap.vehicles_in(span, None, None).len(), snap.vehicles().len());

        let empty = Snapshot::new(params, Vec::new(), 0.0).unwrap();
        assert!(empty.vehicles_in(span, None, None).is_empty());
    }

    #[test]
    fn interval_query_matches_linear_scan() {
        let params = desk_params();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..1_000 {
            let snap = Snapshot::sample(&params, trial).unwrap();
            let a = rng.gen::<f64>() * params.road_length_m;
            let b = rng.gen::<f64>() * params.road_length_m;
            if a == b {
                continue;
            }
            let span = Span::new(a, b, params.road_length_m).unwrap();
            let role = match trial % 3 {
                0 => None,
                1 => Some(Role::Voi),
                _ => Some(Role::Helper),
            };
            let dir = match trial % 2 {
                0 => None,
                _ => Some(Direction::West),
            };
            let got = snap.vehicles_in(span, role, dir);
            let want: Vec<Vehicle> = snap
                .vehicles()
                .iter()
                .filter(|v| span.contains(v.position_m))
                .filter(|v| role.map_or(true, |r| v.role == r))
                .filter(|v| dir.map_or(true, |d| v.direction == d))
                .copied()
                .collect();
            assert_eq!(got, want, "mismatch on trial {trial}");
        }
    }

    #[test]
    fn cycle_geometry_tiles_the_ring() {
        let params = desk_params();
        let snap = Snapshot::sample(&params, 5).unwrap();
        let cycles: Vec<CycleGeometry> = snap.cycles().collect();
        assert_eq!(cycles.len(), 10);
        for c in &cycles {
            assert!(
                (c.v2i_span().length_m(params.road_length_m) - 2.0 * params.infra_radio_m).abs()
                    < 1e-9
            );
            assert!(
                (c.v2v_span().length_m(params.road_length_m) - params.v2v_area_m()).abs() < 1e-9
            );
            assert_eq!(c.v2i_span().end_m(), c.v2v_span().start_m());
        }
        assert_eq!(cycles[9].v2v_span().end_m(), params.road_length_m);
    }

    #[test]
    fn config_text_round_trip() {
        let text = "\
# scenario
road_length_m = 20000
infra_spacing_m = 2000
infra_radio_m = 400
vehicle_radio_m = 200
sensing_range_m = 400
density_east_per_m = 0.004
density_west_per_m = 0.006
voi_fraction = 0.3
speed_east_mps = 20
speed_west_mps = 25
v2i_rate_bps = 20e6
v2v_rate_bps = 2e6
";
        let params = NetworkParams::builder_from_key_values(text)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(params, desk_params());

        assert!(NetworkParams::builder_from_key_values("bogus = 1").is_err());
        assert!(NetworkParams::builder_from_key_values("road_length_m : 1").is_err());
        let partial = NetworkParams::builder_from_key_values("road_length_m = 100").unwrap();
        assert!(matches!(
            partial.build(),
            Err(Error::InvalidParameter { .. })
        ));
    }
}
