use std::fmt;
use std::str::FromStr;

/// Reduced Planck constant in J s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Boltzmann constant in J/K.
pub const K_B_SI: f64 = 1.380_649e-23;
/// Atomic mass constant in kg.
pub const ATOMIC_MASS_SI: f64 = 1.660_539_066_60e-27;

/// Physical-constant convention for all dimensional inputs.
///
/// `Natural` sets hbar = k_B = 1; together with unit mass and trap frequency
/// this is the usual trap-unit system (energies in hbar omega, lengths in the
/// oscillator length).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Units {
    #[default]
    Natural,
    Si,
}

impl Units {
    pub fn hbar(self) -> f64 {
        match self {
            Units::Natural => 1.0,
            Units::Si => HBAR_SI,
        }
    }

    pub fn k_b(self) -> f64 {
        match self {
            Units::Natural => 1.0,
            Units::Si => K_B_SI,
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Natural => "natural",
            Units::Si => "si",
        })
    }
}

impl FromStr for Units {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "natural" => Ok(Units::Natural),
            "si" => Ok(Units::Si),
            other => Err(format!("unknown unit system `{other}` (expected natural or si)")),
        }
    }
}
