use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    CrashBox,
    Bottle,
}

impl Family {
    pub fn param_names(self) -> [&'static str; 4] {
        match self {
            Family::CrashBox => ["height", "width", "length", "thickness"],
            Family::Bottle => ["rib_thickness", "top_radius", "rib_pitch", "rib_spacing"],
        }
    }

    /// Default design ranges in model units, in `param_names` order.
    pub fn default_ranges(self) -> [[f64; 2]; 4] {
        match self {
            Family::CrashBox => [[0.6, 1.2], [0.6, 1.2], [1.5, 3.0], [0.02, 0.12]],
            Family::Bottle => [[0.01, 0.05], [0.15, 0.35], [0.08, 0.16], [0.02, 0.06]],
        }
    }
}

/// The four hidden design parameters of one geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub family: Family,
    pub values: [f64; 4],
}

impl ParamVector {
    pub fn crash_box(height: f64, width: f64, length: f64, thickness: f64) -> Self {
        Self {
            family: Family::CrashBox,
            values: [height, width, length, thickness],
        }
    }

    pub fn bottle(rib_thickness: f64, top_radius: f64, rib_pitch: f64, rib_spacing: f64) -> Self {
        Self {
            family: Family::Bottle,
            values: [rib_thickness, top_radius, rib_pitch, rib_spacing],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "{} must be strictly positive, got {}",
                self.family.param_names()[i],
                self.values[i]
            )));
        }
        let [a, b, c, d] = self.values;
        match self.family {
            Family::CrashBox => {
                if 2.0 * d >= a.min(b) {
                    return Err(Error::InvalidParams(format!(
                        "wall thickness {d} self-intersects a {a} x {b} section"
                    )));
                }
            }
            Family::Bottle => {
                if d >= c {
                    return Err(Error::InvalidParams(format!(
                        "rib spacing {d} must be below rib pitch {c}"
                    )));
                }
                if a >= b {
                    return Err(Error::InvalidParams(format!(
                        "rib thickness {a} must be below top radius {b}"
                    )));
                }
            }
        }
        Ok(())
    }
}
