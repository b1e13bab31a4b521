//! Geodesic distances, the product Epanechnikov kernel, and neighbor
//! selection used by every local fit.

use crate::error::{Error, Result};
use crate::profile::ProfileSet;
use serde::{Deserialize, Serialize};

/// Mean Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Length of the year in days; day-of-year arithmetic is circular modulo
/// this, so December and January neighborhoods behave.
pub const YEAR_DAYS: f64 = 365.25;

/// A point on the sphere. Longitude is stored in [-180, 180).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lon: f64,
    lat: f64,
}

impl GeoPoint {
    pub fn new(lon: f64, lat: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !lat.is_finite() {
            return Err(Error::Domain {
                value: lat,
                lo: -90.0,
                hi: 90.0,
            });
        }
        if !lon.is_finite() {
            return Err(Error::InvalidArgument(format!("longitude {lon}")));
        }
        Ok(Self {
            lon: wrap_longitude(lon),
            lat,
        })
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }
}

/// Wrap a longitude into [-180, 180).
pub fn wrap_longitude(lon: f64) -> f64 {
    let mut x = (lon + 180.0) % 360.0;
    if x < 0.0 {
        x += 360.0;
    }
    x - 180.0
}

/// Haversine great-circle distance in km.
pub fn great_circle_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let s = (0.5 * dlat).sin().powi(2) + lat1.cos() * lat2.cos() * (0.5 * dlon).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * s.sqrt().min(1.0).asin()
}

/// Signed local displacement (zonal km, meridional km) from `center` to
/// `point`, using the midpoint-latitude flattening.
pub fn displacement_km(center: GeoPoint, point: GeoPoint) -> (f64, f64) {
    let dlon = wrap_longitude(point.lon - center.lon);
    let mid_lat = 0.5 * (center.lat + point.lat);
    let east = EARTH_RADIUS_KM * dlon.to_radians() * mid_lat.to_radians().cos();
    let north = EARTH_RADIUS_KM * (point.lat - center.lat).to_radians();
    (east, north)
}

/// Signed circular day-of-year difference in (-YEAR_DAYS/2, YEAR_DAYS/2].
pub fn day_difference(day: f64, day0: f64) -> f64 {
    let mut d = (day - day0) % YEAR_DAYS;
    if d > YEAR_DAYS / 2.0 {
        d -= YEAR_DAYS;
    } else if d <= -YEAR_DAYS / 2.0 {
        d += YEAR_DAYS;
    }
    d
}

/// Circular (unsigned) day-of-year distance.
pub fn circular_day_distance(day: f64, day0: f64) -> f64 {
    day_difference(day, day0).abs()
}

/// Bandwidths of the product Epanechnikov kernel.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KernelConfig {
    /// spatial bandwidth, km
    pub h_space: f64,
    /// temporal bandwidth, days
    pub h_day: f64,
}

impl KernelConfig {
    pub fn new(h_space: f64, h_day: f64) -> Result<Self> {
        if h_space <= 0.0 || h_day <= 0.0 {
            return Err(Error::InvalidArgument(
                "kernel bandwidths must be positive".into(),
            ));
        }
        Ok(Self { h_space, h_day })
    }
}

fn epanechnikov(u: f64) -> f64 {
    if u.abs() < 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Product Epanechnikov weight for (spatial km, day) distances.
pub fn kernel_weight(d_space_km: f64, d_days: f64, cfg: KernelConfig) -> f64 {
    epanechnikov(d_space_km / cfg.h_space) * epanechnikov(d_days / cfg.h_day)
}

/// How neighbors are chosen for a local fit.
#[derive(Debug, Clone, Copy)]
pub enum NeighborRule {
    /// Kernel weights with the at-least-10-profiles-per-year rule: the
    /// spatial bandwidth grows by 1.25x until every modeled year has >= 10
    /// kernel-positive profiles, capped at 5000 km.
    Kernel(KernelConfig),
    /// Every profile within a hard radius (weight 1).
    Radius(f64),
}

pub const MIN_PROFILES_PER_YEAR: usize = 10;
pub const BANDWIDTH_GROWTH: f64 = 1.25;
pub const BANDWIDTH_CAP_KM: f64 = 5000.0;

/// Indices into the profile set with their selection weights.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    /// spatial bandwidth actually used (after growth), km; the hard radius
    /// in radius mode
    pub h_space_used: f64,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Select the profiles participating in a local fit around `(center, day0)`.
///
/// In kernel mode, `years` lists the modeled years the 10-profile rule must
/// hold for; pass an empty slice to skip the rule.
pub fn select_neighbors(
    profiles: &ProfileSet,
    center: GeoPoint,
    day0: f64,
    rule: NeighborRule,
    years: &[i32],
) -> Result<Neighborhood> {
    if profiles.is_empty() {
        return Err(Error::InsufficientData("empty profile set".into()));
    }
    let dists: Vec<(f64, f64)> = profiles
        .iter()
        .map(|p| {
            (
                great_circle_km(center, p.location),
                circular_day_distance(p.day, day0),
            )
        })
        .collect();

    match rule {
        NeighborRule::Radius(radius) => {
            let mut indices = Vec::new();
            let mut weights = Vec::new();
            for (i, (ds, _)) in dists.iter().enumerate() {
                if *ds <= radius {
                    indices.push(i);
                    weights.push(1.0);
                }
            }
            if indices.is_empty() {
                return Err(Error::InsufficientData(format!(
                    "no profiles within {radius} km of ({:.2}, {:.2})",
                    center.lon, center.lat
                )));
            }
            Ok(Neighborhood {
                indices,
                weights,
                h_space_used: radius,
            })
        }
        NeighborRule::Kernel(cfg) => {
            let mut h_space = cfg.h_space;
            loop {
                let grown = KernelConfig {
                    h_space,
                    h_day: cfg.h_day,
                };
                let mut indices = Vec::new();
                let mut weights = Vec::new();
                let mut per_year = std::collections::HashMap::new();
                for (i, (ds, dd)) in dists.iter().enumerate() {
                    let w = kernel_weight(*ds, *dd, grown);
                    if w > 0.0 {
                        indices.push(i);
                        weights.push(w);
                        *per_year.entry(profiles[i].year).or_insert(0usize) += 1;
                    }
                }
                let rule_met = years
                    .iter()
                    .all(|y| per_year.get(y).copied().unwrap_or(0) >= MIN_PROFILES_PER_YEAR);
                if rule_met && !indices.is_empty() {
                    return Ok(Neighborhood {
                        indices,
                        weights,
                        h_space_used: h_space,
                    });
                }
                if h_space >= BANDWIDTH_CAP_KM {
                    if indices.is_empty() {
                        return Err(Error::InsufficientData(format!(
                            "no kernel-positive profiles near ({:.2}, {:.2}) even at {BANDWIDTH_CAP_KM} km",
                            center.lon, center.lat
                        )));
                    }
                    // cap reached with some data: return what there is
                    return Ok(Neighborhood {
                        indices,
                        weights,
                        h_space_used: h_space,
                    });
                }
                h_space = (h_space * BANDWIDTH_GROWTH).min(BANDWIDTH_CAP_KM);
            }
        }
    }
}
