//! Profile data structures: the raw input records and the residual profiles
//! produced after subtracting a fitted mean.

use crate::basis::{PRESSURE_MAX, PRESSURE_MIN};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use serde::{Deserialize, Serialize};

/// Which variable of a measurement is being modeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variable {
    Temperature,
    Salinity,
}

impl std::fmt::Display for Variable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variable::Temperature => write!(f, "temperature"),
            Variable::Salinity => write!(f, "salinity"),
        }
    }
}

/// Quality-control mode of a profile. Salinity modeling uses delayed-mode
/// profiles only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QcMode {
    Realtime,
    Delayed,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Measurement {
    pub pressure: f64,
    pub temperature: f64,
    /// missing on profiles whose salinity has not passed quality control
    pub salinity: Option<f64>,
}

/// One instrument ascent: location, day-of-year, year, QC mode, and the
/// (pressure, temperature, salinity) measurements ordered by pressure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub id: String,
    pub location: GeoPoint,
    pub day: f64,
    pub year: i32,
    pub mode: QcMode,
    pub measurements: Vec<Measurement>,
}

impl ProfileRecord {
    /// Check the record invariants: at least one measurement, pressures
    /// strictly increasing and inside [0, 2000], day in [0, 365.25).
    pub fn validate(&self) -> Result<()> {
        if self.measurements.is_empty() {
            return Err(Error::Validation {
                profile: self.id.clone(),
                reason: "no measurements".into(),
            });
        }
        if !(0.0..crate::geo::YEAR_DAYS).contains(&self.day) {
            return Err(Error::Validation {
                profile: self.id.clone(),
                reason: format!("day {} outside [0, 365.25)", self.day),
            });
        }
        let ps: Vec<f64> = self.measurements.iter().map(|m| m.pressure).collect();
        if ps
            .iter()
            .any(|p| !(PRESSURE_MIN..=PRESSURE_MAX).contains(p))
        {
            return Err(Error::Validation {
                profile: self.id.clone(),
                reason: "pressure outside [0, 2000]".into(),
            });
        }
        if ps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation {
                profile: self.id.clone(),
                reason: "pressures not strictly increasing".into(),
            });
        }
        Ok(())
    }

    pub fn pressures(&self) -> Vec<f64> {
        self.measurements.iter().map(|m| m.pressure).collect()
    }

    /// Values for one variable; `None` if any salinity value is missing.
    pub fn values(&self, variable: Variable) -> Option<Vec<f64>> {
        match variable {
            Variable::Temperature => {
                Some(self.measurements.iter().map(|m| m.temperature).collect())
            }
            Variable::Salinity => self
                .measurements
                .iter()
                .map(|m| m.salinity)
                .collect::<Option<Vec<f64>>>(),
        }
    }
}

/// A validated collection of profiles.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ProfileSet {
    profiles: Vec<ProfileRecord>,
}

impl ProfileSet {
    pub fn new(profiles: Vec<ProfileRecord>) -> Result<Self> {
        for p in &profiles {
            p.validate()?;
        }
        Ok(Self { profiles })
    }

    /// Wrap records without re-validating (for internally constructed data).
    pub fn from_validated(profiles: Vec<ProfileRecord>) -> Self {
        Self { profiles }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ProfileRecord> {
        self.profiles.iter()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn records(&self) -> &[ProfileRecord] {
        &self.profiles
    }
}

impl std::ops::Index<usize> for ProfileSet {
    type Output = ProfileRecord;
    fn index(&self, i: usize) -> &ProfileRecord {
        &self.profiles[i]
    }
}

/// One profile's residuals for a single variable, after subtracting the
/// fitted mean at the nearest grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualProfile {
    pub id: String,
    pub location: GeoPoint,
    pub day: f64,
    pub year: i32,
    pub mode: QcMode,
    pub pressures: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl ResidualProfile {
    pub fn len(&self) -> usize {
        self.pressures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pressures.is_empty()
    }
}

/// Residual profiles for one variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualProfileSet {
    pub variable: Variable,
    pub profiles: Vec<ResidualProfile>,
}

impl ResidualProfileSet {
    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ResidualProfile> {
        self.profiles.iter()
    }
}
