use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::Error;

/// Closed-form steady vector fields used to populate datasets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AnalyticField {
    Constant(Vec3),
    /// Rigid rotation about the z axis: `(-y, x, 0)`.
    Circular,
    /// Hyperbolic point at the origin: `(x, -y, 0)`.
    Saddle,
    /// `(y, 0, 0)`.
    Shear,
}

impl AnalyticField {
    pub const ZERO: AnalyticField = AnalyticField::Constant(Vec3::ZERO);

    pub fn sample(&self, p: Vec3) -> Vec3 {
        match *self {
            AnalyticField::Constant(c) => c,
            AnalyticField::Circular => Vec3::new(-p.y, p.x, 0.0),
            AnalyticField::Saddle => Vec3::new(p.x, -p.y, 0.0),
            AnalyticField::Shear => Vec3::new(p.y, 0.0, 0.0),
        }
    }
}

/// Samples the named field at `p`.
pub fn sample_analytic_field(field: &str, p: Vec3) -> Result<Vec3, Error> {
    Ok(field.parse::<AnalyticField>()?.sample(p))
}

impl FromStr for AnalyticField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "circular" => return Ok(AnalyticField::Circular),
            "saddle" => return Ok(AnalyticField::Saddle),
            "shear" => return Ok(AnalyticField::Shear),
            "zero" => return Ok(AnalyticField::ZERO),
            _ => {}
        }
        let args = t
            .strip_prefix("constant(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::UnknownField(s.to_string()))?;
        let parts: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| Error::UnknownField(s.to_string()))?;
        match parts.as_slice() {
            &[x, y, z] if x.is_finite() && y.is_finite() && z.is_finite() => {
                Ok(AnalyticField::Constant(Vec3::new(x, y, z)))
            }
            _ => Err(Error::UnknownField(s.to_string())),
        }
    }
}

impl fmt::Display for AnalyticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticField::Constant(c) => write!(f, "constant({},{},{})", c.x, c.y, c.z),
            AnalyticField::Circular => f.write_str("circular"),
            AnalyticField::Saddle => f.write_str("saddle"),
            AnalyticField::Shear => f.write_str("shear"),
        }
    }
}

impl TryFrom<String> for AnalyticField {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<AnalyticField> for String {
    fn from(f: AnalyticField) -> String {
        f.to_string()
    }
}
