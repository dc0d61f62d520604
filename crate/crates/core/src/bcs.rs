//! BCS-type pairing in the discrete spectrum of the isotropic oscillator.
//!
//! The pairing sum runs over oscillator shells `n = 0..=n_max` with energies
//! `hbar w (n + 3/2) - mu` and degeneracies `(n + 1)(n + 2) / 2`. The
//! interaction matrix element is a single constant; `coupling` is its
//! magnitude and always counts as attractive.
//!
//! Two routes to the transition temperature are provided: the gap equation at
//! vanishing gap, and the closed critical-temperature relation with the
//! discrete-level correction terms
//!
//! ```text
//! 1 = v0 N(0) ln(1.13 x) + v0 B k_B T [ s(x) - 1/2 - ln(1 + e^x) + ln 2 ],
//! x = hbar w / k_B T,  s(x) = e^x / (1 + e^x),  B = 3 / (2 (hbar w)^2).
//! ```

use rayon::prelude::*;
use thiserror::Error;

use crate::numerics::{find_root, find_root_expanding, NumericsError, SolverConfig};
use crate::units::Units;

/// Temperature range probed for the closed relation, in units of `hbar w / k_B`.
pub const CLOSED_FORM_PROBE: (f64, f64) = (1e-6, 1e3);
/// Scan points for bracketing the closed relation.
pub const CLOSED_FORM_SCAN_POINTS: usize = 2048;
/// Prefactor of the weak-coupling logarithm.
pub const BCS_PREFACTOR: f64 = 1.13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BcsError {
    #[error("invalid pairing model: {0}")]
    InvalidModel(String),
    #[error("quasiparticle amplitudes undefined at eps = delta = 0")]
    DegeneratePoint,
    #[error("no transition in the probed temperature range")]
    NoTransition,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Parameters of the discrete pairing problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingModel {
    /// Magnitude `g` of the constant pairing matrix element (energy). It is
    /// the `v0` of the closed relation.
    pub coupling: f64,
    /// Density of states at the Fermi surface (1/energy); `coupling * n0` is
    /// the weak-coupling constant `v0 N(0)`.
    pub n0: f64,
    /// Level spacing `hbar w` (energy).
    pub hbar_omega: f64,
    /// Fermi level `mu` (energy).
    pub mu: f64,
    /// Highest oscillator shell in the pairing sum.
    pub n_max: usize,
    pub units: Units,
}

impl PairingModel {
    pub fn validate(&self) -> Result<(), BcsError> {
        if !(self.hbar_omega > 0.0 && self.hbar_omega.is_finite()) {
            return Err(BcsError::InvalidModel(format!("hbar_omega must be positive, got {}", self.hbar_omega)));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(BcsError::InvalidModel(format!(
                "coupling is the magnitude of the attraction and must be >= 0, got {}",
                self.coupling
            )));
        }
        if !(self.n0 >= 0.0 && self.n0.is_finite()) {
            return Err(BcsError::InvalidModel(format!("n0 must be >= 0, got {}", self.n0)));
        }
        if !self.mu.is_finite() {
            return Err(BcsError::InvalidModel(format!("mu must be finite, got {}", self.mu)));
        }
        Ok(())
    }

    /// `v0 N(0)`.
    pub fn v0_n0(&self) -> f64 {
        self.coupling * self.n0
    }

    /// `B = 3 / (2 (hbar w)^2)`.
    pub fn b(&self) -> f64 {
        1.5 / (self.hbar_omega * self.hbar_omega)
    }

    fn k_b(&self) -> f64 {
        self.units.k_b()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    /// Single-particle energy measured from `mu`.
    pub energy: f64,
    pub degeneracy: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub levels: Vec<Level>,
}

impl Spectrum {
    pub fn total_states(&self) -> u64 {
        self.levels.iter().map(|l| l.degeneracy).sum()
    }
}

pub fn shell_degeneracy(n: usize) -> u64 {
    let n = n as u64;
    (n + 1) * (n + 2) / 2
}

/// Oscillator shells `0..=n_max` measured from the Fermi level.
pub fn build_spectrum(model: &PairingModel) -> Spectrum {
    Spectrum {
        levels: (0..=model.n_max)
            .map(|n| Level {
                energy: model.hbar_omega * (n as f64 + 1.5) - model.mu,
                degeneracy: shell_degeneracy(n),
            })
            .collect(),
    }
}

/// Bogoliubov amplitudes and quasiparticle energy of one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bogoliubov {
    pub u2: f64,
    pub v2: f64,
    pub energy: f64,
}

/// `E = sqrt(eps^2 + delta^2)`, `v^2 = (1 - eps/E) / 2`, `u^2 = 1 - v^2`.
pub fn bogoliubov_amplitudes(eps: f64, delta: f64) -> Result<Bogoliubov, BcsError> {
    if !(delta >= 0.0) || !eps.is_finite() || !delta.is_finite() {
        return Err(BcsError::InvalidModel(format!("need finite eps and delta >= 0, got ({eps}, {delta})")));
    }
    if eps == 0.0 && delta == 0.0 {
        return Err(BcsError::DegeneratePoint);
    }
    let energy = eps.hypot(delta);
    // Form the smaller amplitude directly; the larger one is its complement.
    let small = 0.5 * (1.0 - eps.abs() / energy);
    let (u2, v2) = if eps >= 0.0 { (1.0 - small, small) } else { (small, 1.0 - small) };
    Ok(Bogoliubov { u2, v2, energy })
}

/// `tanh(E / 2 k_B T) / E`, continued to `1 / (2 k_B T)` at `E = 0`.
fn pair_susceptibility(energy: f64, kt: f64) -> f64 {
    if energy == 0.0 {
        0.5 / kt
    } else {
        (0.5 * energy / kt).tanh() / energy
    }
}

fn residual_on(spectrum: &Spectrum, coupling: f64, delta: f64, kt: f64) -> f64 {
    let sum: f64 = spectrum
        .levels
        .iter()
        .map(|l| l.degeneracy as f64 * pair_susceptibility(l.energy.hypot(delta), kt))
        .sum();
    coupling * sum - 1.0
}

/// `g sum_m d_m tanh(E_m / 2 k_B T) / E_m - 1` with `E_m = sqrt(eps_m^2 + delta^2)`.
pub fn gap_residual(delta: f64, temperature: f64, model: &PairingModel) -> Result<f64, BcsError> {
    model.validate()?;
    check_temperature(temperature)?;
    if !(delta >= 0.0) {
        return Err(BcsError::InvalidModel(format!("delta must be >= 0, got {delta}")));
    }
    Ok(residual_on(&build_spectrum(model), model.coupling, delta, model.k_b() * temperature))
}

fn check_temperature(t: f64) -> Result<(), BcsError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(BcsError::InvalidModel(format!("temperature must be positive, got {t}")))
    }
}

fn gap_cfg() -> SolverConfig {
    SolverConfig {
        abs_tol: 1e-15,
        rel_tol: 1e-14,
        max_iter: 300,
        damping: 1.0,
    }
}

/// Gap `delta(T)`; zero when the residual at vanishing gap is not positive.
pub fn solve_gap(temperature: f64, model: &PairingModel) -> Result<f64, BcsError> {
    model.validate()?;
    check_temperature(temperature)?;
    let spectrum = build_spectrum(model);
    let kt = model.k_b() * temperature;
    if residual_on(&spectrum, model.coupling, 0.0, kt) <= 0.0 {
        return Ok(0.0);
    }
    // tanh <= 1 bounds the sum by g * (total states) / delta.
    let upper = model.coupling * spectrum.total_states() as f64 * (1.0 + 1e-9);
    let delta = find_root(|d| residual_on(&spectrum, model.coupling, d, kt), 0.0, upper, &gap_cfg())?;
    Ok(delta)
}

/// Gap along a list of temperatures.
pub fn gap_scan(temperatures: &[f64], model: &PairingModel) -> Result<Vec<f64>, BcsError> {
    temperatures.par_iter().map(|&t| solve_gap(t, model)).collect()
}

/// Temperature at which the gap equation at `delta = 0` is satisfied.
pub fn critical_temperature_from_gap(model: &PairingModel) -> Result<f64, BcsError> {
    model.validate()?;
    let spectrum = build_spectrum(model);
    let k_b = model.k_b();
    let residual = |ln_t: f64| residual_on(&spectrum, model.coupling, 0.0, k_b * ln_t.exp());
    // The residual decreases with T; it must be positive as T -> 0.
    let frozen: f64 = spectrum
        .levels
        .iter()
        .map(|l| if l.energy == 0.0 { f64::INFINITY } else { l.degeneracy as f64 / l.energy.abs() })
        .sum();
    if model.coupling == 0.0 || model.coupling * frozen <= 1.0 {
        return Err(BcsError::NoTransition);
    }
    // Above g (total states) / (2 k_B) the residual is negative.
    let t_hi = model.coupling * spectrum.total_states() as f64 / (2.0 * k_b);
    let ln_t = find_root_expanding(residual, t_hi.ln() - 1.0, t_hi.ln(), &gap_cfg())?;
    Ok(ln_t.exp())
}

/// Which terms of the closed critical-temperature relation to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedFormTerms {
    Full,
    /// Only the weak-coupling logarithm.
    FirstTermOnly,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Right-hand side minus one of the closed relation at temperature `t`.
pub fn closed_form_residual(temperature: f64, model: &PairingModel, terms: ClosedFormTerms) -> f64 {
    let kt = model.k_b() * temperature;
    let x = model.hbar_omega / kt;
    let log_term = model.v0_n0() * (BCS_PREFACTOR * x).ln();
    let correction = match terms {
        ClosedFormTerms::FirstTermOnly => 0.0,
        ClosedFormTerms::Full => {
            let bracket = logistic(x) - 0.5 - softplus(x) + std::f64::consts::LN_2;
            model.coupling * model.b() * kt * bracket
        }
    };
    log_term + correction - 1.0
}

/// Result of the closed critical-temperature relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalTemperature {
    pub temperature: f64,
    /// `hbar w / k_B T_c`; the semiclassical picture needs this to be small.
    pub hbar_omega_over_kt: f64,
    pub residual: f64,
}

/// Solves the closed relation for the highest temperature at which its
/// right-hand side reaches one, on `[1e-6, 1e3] hbar w / k_B`.
pub fn critical_temperature_discrete(model: &PairingModel, terms: ClosedFormTerms) -> Result<CriticalTemperature, BcsError> {
    model.validate()?;
    let unit = model.hbar_omega / model.k_b();
    let (lo, hi) = (CLOSED_FORM_PROBE.0.ln(), CLOSED_FORM_PROBE.1.ln());
    let f = |ln_t: f64| closed_form_residual(ln_t.exp() * unit, model, terms);
    let n = CLOSED_FORM_SCAN_POINTS;
    let grid: Vec<f64> = (0..n).map(|i| hi - (hi - lo) * i as f64 / (n - 1) as f64).collect();
    // Walk down from the hot end: the first sign change is the transition.
    let bracket = grid.windows(2).find(|w| {
        let (a, b) = (f(w[0]), f(w[1]));
        a < 0.0 && b >= 0.0
    });
    let Some(w) = bracket else {
        return Err(BcsError::NoTransition);
    };
    let cfg = SolverConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-15,
        max_iter: 300,
        damping: 1.0,
    };
    let ln_t = find_root(f, w[1], w[0], &cfg)?;
    let temperature = ln_t.exp() * unit;
    Ok(CriticalTemperature {
        temperature,
        hbar_omega_over_kt: model.hbar_omega / (model.k_b() * temperature),
        residual: closed_form_residual(temperature, model, terms),
    })
}

/// `k_B T_c = 1.13 hbar w exp(-1 / v0 N(0))`, the root of the logarithm alone.
pub fn first_term_critical_temperature(model: &PairingModel) -> Result<f64, BcsError> {
    model.validate()?;
    if model.v0_n0() <= 0.0 {
        return Err(BcsError::NoTransition);
    }
    Ok(BCS_PREFACTOR * model.hbar_omega * (-1.0 / model.v0_n0()).exp() / model.k_b())
}

/// `k_B T_c = hbar w exp(-1 / v0 N(0))`, the semiclassical limit without the
/// 1.13 prefactor.
pub fn semiclassical_critical_temperature(model: &PairingModel) -> Result<f64, BcsError> {
    model.validate()?;
    if model.v0_n0() <= 0.0 {
        return Err(BcsError::NoTransition);
    }
    Ok(model.hbar_omega * (-1.0 / model.v0_n0()).exp() / model.k_b())
}
