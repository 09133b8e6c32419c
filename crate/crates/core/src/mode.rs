//! Polarized optical modes: the index space of the creation operators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Linear polarization basis. `H < V` in the derived ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn orthogonal(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }

    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => f.write_str("H"),
            Polarization::V => f.write_str("V"),
        }
    }
}

impl FromStr for Polarization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "H" => Ok(Polarization::H),
            "V" => Ok(Polarization::V),
            other => Err(format!("unknown polarization {other:?} (expected \"H\" or \"V\")")),
        }
    }
}

/// A spatial path label paired with a polarization.
///
/// Ordering is lexicographic on the spatial label, then `H < V`, which makes
/// occupation keys canonical.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolarizedMode {
    pub spatial: String,
    pub pol: Polarization,
}

impl PolarizedMode {
    pub fn new(spatial: impl Into<String>, pol: Polarization) -> Self {
        PolarizedMode {
            spatial: spatial.into(),
            pol,
        }
    }

    pub fn h(spatial: impl Into<String>) -> Self {
        Self::new(spatial, Polarization::H)
    }

    pub fn v(spatial: impl Into<String>) -> Self {
        Self::new(spatial, Polarization::V)
    }
}

impl fmt::Display for PolarizedMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.spatial, self.pol)
    }
}
