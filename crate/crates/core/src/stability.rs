//! Mechanical stability of the homogeneous two-component mixture and its
//! local-density extension to the trap.
//!
//! With `lambda_i` the thermal wavelengths and `z_i` the ideal fugacities of
//! the densities `rho_i`, the interacting chemical potentials are
//!
//! ```text
//! beta mu_1 = beta mu_1^0 + 4 a1 rho1 lambda1^2 + a12 (lambda1^2 + lambda2^2) rho2
//! ```
//!
//! (and symmetrically for component 2). The mixture is stable when the matrix
//! `d mu_i / d rho_j` is positive semidefinite; its scaled determinant is
//!
//! ```text
//! Z = (4 a1 lambda1^2 + lambda1^3 / f_{1/2}(z1)) (4 a2 lambda2^2 + lambda2^3 / f_{1/2}(z2))
//!     - a12^2 (lambda1^2 + lambda2^2)^2.
//! ```
//!
//! `Z` is returned in the length^6 of the working unit system, so that
//! `Z rho1 rho2 -> 1` in the classical limit.

use rayon::prelude::*;
use thiserror::Error;

use crate::fermi_functions::{fermi_dirac_ln, inverse_fermi_dirac_ln, thermal_wavelength, FdOrder, FermiError};
use crate::numerics::{find_root, NumericsError, SolverConfig};
use crate::trapped_gas::TrapParams;
use crate::units::Units;

/// Points of the logarithmic temperature scan used to bracket window edges.
pub const WINDOW_SCAN_POINTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("invalid mixture parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Fermi(#[from] FermiError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Homogeneous mixture at one temperature. Lengths, masses and temperature
/// follow `units`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureParams {
    /// Intra-component coupling of component 1 (length).
    pub a1: f64,
    /// Intra-component coupling of component 2 (length).
    pub a2: f64,
    /// Inter-component coupling (length).
    pub a12: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub temperature: f64,
    pub mass: f64,
    pub units: Units,
}

impl MixtureParams {
    pub fn validate(&self) -> Result<(), StabilityError> {
        for (name, v) in [("rho1", self.rho1), ("rho2", self.rho2), ("temperature", self.temperature), ("mass", self.mass)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(StabilityError::InvalidParams(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("a1", self.a1), ("a2", self.a2), ("a12", self.a12)] {
            if !v.is_finite() {
                return Err(StabilityError::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn at_temperature(&self, temperature: f64) -> Self {
        Self { temperature, ..*self }
    }

    pub fn beta(&self) -> f64 {
        1.0 / (self.units.k_b() * self.temperature)
    }

    /// Thermal wavelengths of the two components. Both components share
    /// mass and temperature, so the two values coincide.
    pub fn wavelengths(&self) -> Result<(f64, f64), StabilityError> {
        let l = thermal_wavelength(self.mass, self.temperature, self.units)?;
        Ok((l, l))
    }

    /// `ln z_i` of the ideal gas at densities `rho_i`.
    pub fn ln_fugacities(&self) -> Result<(f64, f64), StabilityError> {
        self.validate()?;
        let (l1, l2) = self.wavelengths()?;
        Ok((
            inverse_fermi_dirac_ln(FdOrder::ThreeHalves, self.rho1 * l1.powi(3))?,
            inverse_fermi_dirac_ln(FdOrder::ThreeHalves, self.rho2 * l2.powi(3))?,
        ))
    }
}

/// Interacting chemical potentials `(mu1, mu2)` in energy units.
pub fn chemical_potentials(p: &MixtureParams) -> Result<(f64, f64), StabilityError> {
    let (ln_z1, ln_z2) = p.ln_fugacities()?;
    let (l1, l2) = p.wavelengths()?;
    let cross = p.a12 * (l1 * l1 + l2 * l2);
    let beta_mu1 = ln_z1 + 4.0 * p.a1 * p.rho1 * l1 * l1 + cross * p.rho2;
    let beta_mu2 = ln_z2 + 4.0 * p.a2 * p.rho2 * l2 * l2 + cross * p.rho1;
    let kt = 1.0 / p.beta();
    Ok((beta_mu1 * kt, beta_mu2 * kt))
}

/// `beta d mu_i / d rho_j` with the ideal fugacities optionally shifted by
/// `-beta * shift` (the local-density substitution).
fn scaled_matrix(p: &MixtureParams, shift: f64) -> Result<[[f64; 2]; 2], StabilityError> {
    let (ln_z1, ln_z2) = p.ln_fugacities()?;
    let (l1, l2) = p.wavelengths()?;
    let beta_shift = p.beta() * shift;
    let d1 = 4.0 * p.a1 * l1 * l1 + l1.powi(3) / fermi_dirac_ln(FdOrder::Half, ln_z1 - beta_shift);
    let d2 = 4.0 * p.a2 * l2 * l2 + l2.powi(3) / fermi_dirac_ln(FdOrder::Half, ln_z2 - beta_shift);
    let off = p.a12 * (l1 * l1 + l2 * l2);
    Ok([[d1, off], [off, d2]])
}

/// The matrix `d mu_i / d rho_j` (energy x volume).
pub fn stability_matrix(p: &MixtureParams) -> Result<[[f64; 2]; 2], StabilityError> {
    let kt = 1.0 / p.beta();
    let m = scaled_matrix(p, 0.0)?;
    Ok([[m[0][0] * kt, m[0][1] * kt], [m[1][0] * kt, m[1][1] * kt]])
}

fn determinant(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// The determinant criterion `Z(T, a12)`.
pub fn z_function(p: &MixtureParams) -> Result<f64, StabilityError> {
    Ok(determinant(&scaled_matrix(p, 0.0)?))
}

/// `Z` at radius `r` of the trap: both fugacities are multiplied by
/// `exp(-beta m w^2 r^2 / 2)`; `p` holds the central densities.
pub fn local_z_function(r: f64, trap: &TrapParams, p: &MixtureParams) -> Result<f64, StabilityError> {
    Ok(local_stability_report(r, trap, p)?.z_value)
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn symmetric_eigenvalues(m: &[[f64; 2]; 2]) -> [f64; 2] {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let radius = half_diff.hypot(m[0][1]);
    [mean - radius, mean + radius]
}

/// All stability conditions at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub temperature: f64,
    pub z_value: f64,
    /// `4 a1 lambda1^2 + lambda1^3 / f_{1/2}(z1) >= 0`
    pub diag1_ok: bool,
    /// `4 a2 lambda2^2 + lambda2^3 / f_{1/2}(z2) >= 0`
    pub diag2_ok: bool,
    /// All three conditions hold.
    pub stable: bool,
    /// Eigenvalues of `d mu_i / d rho_j`, ascending.
    pub eigenvalues: [f64; 2],
}

impl StabilityReport {
    fn from_scaled(temperature: f64, kt: f64, m: [[f64; 2]; 2]) -> Self {
        let z_value = determinant(&m);
        let diag1_ok = m[0][0] >= 0.0;
        let diag2_ok = m[1][1] >= 0.0;
        let ev = symmetric_eigenvalues(&m);
        Self {
            temperature,
            z_value,
            diag1_ok,
            diag2_ok,
            stable: diag1_ok && diag2_ok && z_value >= 0.0,
            eigenvalues: [ev[0] * kt, ev[1] * kt],
        }
    }

    /// Positive semidefiniteness judged from the eigenvalues alone.
    pub fn eigen_stable(&self) -> bool {
        self.eigenvalues[0] >= 0.0
    }
}

pub fn stability_report(p: &MixtureParams) -> Result<StabilityReport, StabilityError> {
    Ok(StabilityReport::from_scaled(p.temperature, 1.0 / p.beta(), scaled_matrix(p, 0.0)?))
}

pub fn local_stability_report(r: f64, trap: &TrapParams, p: &MixtureParams) -> Result<StabilityReport, StabilityError> {
    if !(r >= 0.0) {
        return Err(StabilityError::InvalidParams(format!("radius must be non-negative, got {r}")));
    }
    let m = scaled_matrix(p, trap.potential(r))?;
    Ok(StabilityReport::from_scaled(p.temperature, 1.0 / p.beta(), m))
}

/// `n` logarithmically spaced temperatures on `[t_lo, t_hi]`.
pub fn log_temperatures(t_lo: f64, t_hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![t_lo];
    }
    let (a, b) = (t_lo.ln(), t_hi.ln());
    (0..n)
        .map(|i| match i {
            0 => t_lo,
            _ if i == n - 1 => t_hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// Stability reports along a temperature list, at radius `r` of `trap` when
/// given and for the homogeneous gas otherwise.
pub fn scan(
    p: &MixtureParams,
    temperatures: &[f64],
    local: Option<(f64, &TrapParams)>,
) -> Result<Vec<StabilityReport>, StabilityError> {
    temperatures
        .par_iter()
        .map(|&t| {
            let q = p.at_temperature(t);
            match local {
                Some((r, trap)) => local_stability_report(r, trap, &q),
                None => stability_report(&q),
            }
        })
        .collect()
}

/// Temperature interval on which `Z < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstabilityWindow {
    pub t_c1: f64,
    pub t_c2: f64,
    /// `Z < 0` already at the lower scan limit; `t_c1` is that limit.
    pub lower_clipped: bool,
    /// `Z < 0` still at the upper scan limit; `t_c2` is that limit.
    pub upper_clipped: bool,
}

impl InstabilityWindow {
    /// Strict containment of `self` inside `outer`.
    pub fn strictly_inside(&self, outer: &InstabilityWindow) -> bool {
        self.t_c1 > outer.t_c1 && self.t_c2 < outer.t_c2
    }
}

/// Locates `[T_c1, T_c2]` on `[t_lo, t_hi]`: a 256-point logarithmic scan
/// brackets the sign changes of `Z`, which Brent's method then refines. With
/// several disjoint negative regions the hull from the first to the last edge
/// is returned.
pub fn instability_window(p: &MixtureParams, t_lo: f64, t_hi: f64) -> Result<Option<InstabilityWindow>, StabilityError> {
    window_impl(p, t_lo, t_hi, None)
}

/// [`instability_window`] for the local criterion at radius `r`.
pub fn local_instability_window(
    r: f64,
    trap: &TrapParams,
    p: &MixtureParams,
    t_lo: f64,
    t_hi: f64,
) -> Result<Option<InstabilityWindow>, StabilityError> {
    window_impl(p, t_lo, t_hi, Some((r, trap)))
}

fn window_impl(
    p: &MixtureParams,
    t_lo: f64,
    t_hi: f64,
    local: Option<(f64, &TrapParams)>,
) -> Result<Option<InstabilityWindow>, StabilityError> {
    if !(t_lo > 0.0 && t_lo < t_hi && t_hi.is_finite()) {
        return Err(StabilityError::InvalidParams(format!("need 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]")));
    }
    let temps = log_temperatures(t_lo, t_hi, WINDOW_SCAN_POINTS);
    let reports = scan(p, &temps, local)?;
    let negative: Vec<usize> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| r.z_value < 0.0)
        .map(|(i, _)| i)
        .collect();
    let (Some(&first), Some(&last)) = (negative.first(), negative.last()) else {
        return Ok(None);
    };
    let z_at = |t: f64| -> f64 {
        let q = p.at_temperature(t);
        let report = match local {
            Some((r, trap)) => local_stability_report(r, trap, &q),
            None => stability_report(&q),
        };
        report.map(|r| r.z_value).unwrap_or(f64::NAN)
    };
    let cfg = SolverConfig {
        abs_tol: f64::MIN_POSITIVE,
        rel_tol: 1e-13,
        max_iter: 200,
        damping: 1.0,
    };
    let (t_c1, lower_clipped) = if first == 0 {
        (temps[0], true)
    } else {
        (find_root(z_at, temps[first - 1], temps[first], &cfg)?, false)
    };
    let (t_c2, upper_clipped) = if last == temps.len() - 1 {
        (temps[last], true)
    } else {
        (find_root(z_at, temps[last], temps[last + 1], &cfg)?, false)
    };
    Ok(Some(InstabilityWindow {
        t_c1,
        t_c2,
        lower_clipped,
        upper_clipped,
    }))
}
