//! Semiclassical (local-density) thermodynamics of the trapped two-component
//! gas: ideal profiles, chemical potentials, the self-consistent Hartree
//! profiles and their first-order expansion in the contact coupling.
//!
//! Each component sees the trap plus the mean field of the other component,
//!
//! ```text
//! n_i(r) = lambda^-3 f_{3/2}(z_i(r)),   z_i = exp(beta (mu_i - v0 n_j(r) - m w^2 r^2 / 2)),
//! ```
//!
//! and `mu_i` is fixed by `4 pi int r^2 n_i dr = N_i`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::fermi_functions::{fermi_dirac_ln, inverse_fermi_dirac_ln, thermal_wavelength, FdOrder, FermiError};
use crate::numerics::{
    find_root_expanding, integrate, simpson_uniform, try_fixed_point, NumericsError, SolverConfig,
};
use crate::units::Units;

/// Number of radial grid points used when none is specified.
pub const DEFAULT_GRID_POINTS: usize = 512;
/// `beta V(r_max)` beyond the larger of `beta mu` and 0; `e^-30` is below
/// 1e-12 of any peak density.
pub const EDGE_MARGIN: f64 = 30.0;
/// Above this value of `beta |v0| n_peak` the first-order picture is no
/// longer a controlled approximation.
pub const WEAK_COUPLING_LIMIT: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GasError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Fermi(#[from] FermiError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("self-consistent profiles did not converge (residual {residual:e})")]
    NotConverged {
        residual: f64,
        last: Box<SelfConsistentSolution>,
    },
    #[error("self-consistent iteration diverged (residual {residual:e})")]
    Diverged { residual: f64 },
}

fn positive(name: &str, value: f64) -> Result<f64, GasError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(GasError::InvalidInput(format!("{name} must be positive and finite, got {value}")))
    }
}

/// Isotropic harmonic trap `V(r) = m w^2 r^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapParams {
    pub mass: f64,
    pub omega: f64,
    pub units: Units,
}

impl TrapParams {
    pub fn new(mass: f64, omega: f64, units: Units) -> Result<Self, GasError> {
        positive("mass", mass)?;
        positive("omega", omega)?;
        Ok(Self { mass, omega, units })
    }

    /// hbar = m = k_B = omega = 1.
    pub fn natural() -> Self {
        Self {
            mass: 1.0,
            omega: 1.0,
            units: Units::Natural,
        }
    }

    pub fn potential(&self, r: f64) -> f64 {
        0.5 * self.mass * self.omega * self.omega * r * r
    }

    pub fn hbar_omega(&self) -> f64 {
        self.units.hbar() * self.omega
    }

    /// Radius at which the potential equals `energy` (0 for `energy <= 0`).
    pub fn radius_at(&self, energy: f64) -> f64 {
        (2.0 * energy.max(0.0) / (self.mass * self.omega * self.omega)).sqrt()
    }

    fn validate(&self) -> Result<(), GasError> {
        positive("mass", self.mass)?;
        positive("omega", self.omega)?;
        Ok(())
    }
}

/// Temperature, particle numbers and the common chemical potential of the
/// equal-population configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasState {
    pub temperature: f64,
    pub n1: f64,
    pub n2: f64,
    pub mu: f64,
    /// `1 / (k_B T)`.
    pub beta: f64,
}

impl GasState {
    pub fn new(temperature: f64, n1: f64, n2: f64, mu: f64, units: Units) -> Result<Self, GasError> {
        positive("temperature", temperature)?;
        positive("N1", n1)?;
        positive("N2", n2)?;
        if !mu.is_finite() {
            return Err(GasError::InvalidInput(format!("mu must be finite, got {mu}")));
        }
        Ok(Self {
            temperature,
            n1,
            n2,
            mu,
            beta: 1.0 / (units.k_b() * temperature),
        })
    }

    /// State whose `mu` is the ideal-gas chemical potential for `n1` particles.
    pub fn ideal(temperature: f64, n1: f64, n2: f64, trap: &TrapParams) -> Result<Self, GasError> {
        let mu = solve_mu_ideal(n1, temperature, trap)?;
        Self::new(temperature, n1, n2, mu, trap.units)
    }
}

/// Densities of both components on a uniform radial grid, with the local
/// fugacities that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub grid: Vec<f64>,
    pub n1: Vec<f64>,
    pub n2: Vec<f64>,
    pub fugacity1: Vec<f64>,
    pub fugacity2: Vec<f64>,
    pub r_max: f64,
}

impl RadialProfile {
    fn step(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// `4 pi int r^2 n dr` on the grid.
    pub fn particle_number(&self, density: &[f64]) -> f64 {
        shell_integral(&self.grid, density, self.step())
    }

    pub fn particle_numbers(&self) -> (f64, f64) {
        (self.particle_number(&self.n1), self.particle_number(&self.n2))
    }
}

fn shell_integral(grid: &[f64], density: &[f64], step: f64) -> f64 {
    let weighted: Vec<f64> = grid.iter().zip(density).map(|(r, n)| r * r * n).collect();
    4.0 * PI * simpson_uniform(&weighted, step)
}

/// Uniform grid of `points` radii on `[0, r_max]`.
pub fn radial_grid(r_max: f64, points: usize) -> Result<Vec<f64>, GasError> {
    positive("r_max", r_max)?;
    if points < 3 {
        return Err(GasError::InvalidInput(format!("grid needs at least 3 points, got {points}")));
    }
    let step = r_max / (points - 1) as f64;
    Ok((0..points).map(|i| i as f64 * step).collect())
}

/// Truncation radius where the local fugacity has fallen by `e^-EDGE_MARGIN`
/// below `max(1, e^(beta (mu + shift)))`. `shift` accounts for an attractive
/// mean field raising the effective chemical potential.
pub fn default_r_max(mu: f64, temperature: f64, shift: f64, trap: &TrapParams) -> f64 {
    let kt = trap.units.k_b() * temperature;
    trap.radius_at((mu + shift.max(0.0)).max(0.0) + EDGE_MARGIN * kt)
}

fn check_grid(grid: &[f64]) -> Result<f64, GasError> {
    if grid.len() < 3 || grid[0] != 0.0 {
        return Err(GasError::InvalidInput("grid must start at r = 0 and hold at least 3 points".into()));
    }
    let step = grid[1] - grid[0];
    if !(step > 0.0) {
        return Err(GasError::InvalidInput("grid must be strictly increasing".into()));
    }
    for (i, r) in grid.iter().enumerate() {
        if (r - i as f64 * step).abs() > 1e-9 * step * i.max(1) as f64 {
            return Err(GasError::InvalidInput("grid must be uniformly spaced".into()));
        }
    }
    Ok(step)
}

/// Ideal local-density profile `lambda^-3 f_{3/2}(exp(beta (mu - V(r))))`.
pub fn ideal_density(r: f64, mu: f64, temperature: f64, trap: &TrapParams) -> Result<f64, GasError> {
    trap.validate()?;
    if !(r >= 0.0) {
        return Err(GasError::InvalidInput(format!("radius must be non-negative, got {r}")));
    }
    let lambda = thermal_wavelength(trap.mass, temperature, trap.units)?;
    let beta = 1.0 / (trap.units.k_b() * temperature);
    Ok(fermi_dirac_ln(FdOrder::ThreeHalves, beta * (mu - trap.potential(r))) / lambda.powi(3))
}

/// Particle number of one component from the closed trap average
/// `N = (k_B T / hbar w)^3 f_3(e^(beta mu))`.
pub fn ideal_particle_number(mu: f64, temperature: f64, trap: &TrapParams) -> Result<f64, GasError> {
    trap.validate()?;
    positive("temperature", temperature)?;
    let kt = trap.units.k_b() * temperature;
    Ok((kt / trap.hbar_omega()).powi(3) * fermi_dirac_ln(FdOrder::Three, mu / kt))
}

/// Particle number of one component by adaptive radial quadrature of
/// [`ideal_density`]. Independent of [`ideal_particle_number`].
pub fn ideal_particle_number_radial(
    mu: f64,
    temperature: f64,
    trap: &TrapParams,
    cfg: &SolverConfig,
) -> Result<f64, GasError> {
    trap.validate()?;
    let lambda = thermal_wavelength(trap.mass, temperature, trap.units)?;
    let kt = trap.units.k_b() * temperature;
    let beta = 1.0 / kt;
    let shell = |r: f64| 4.0 * PI * r * r * fermi_dirac_ln(FdOrder::ThreeHalves, beta * (mu - trap.potential(r)));
    // Break at the classical turning point and at the thermal tail.
    let mut cuts = vec![0.0];
    if mu > 0.0 {
        cuts.push(trap.radius_at(mu));
    }
    cuts.push(trap.radius_at(mu.max(0.0) + 5.0 * kt));
    cuts.push(default_r_max(mu, temperature, 0.0, trap));
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate(shell, w[0], w[1], cfg)?;
    }
    Ok(total / lambda.powi(3))
}

/// Chemical potential of `n` ideal fermions in the trap, from the closed
/// `f_3` normalisation.
pub fn solve_mu_ideal(n: f64, temperature: f64, trap: &TrapParams) -> Result<f64, GasError> {
    positive("N", n)?;
    positive("temperature", temperature)?;
    trap.validate()?;
    let kt = trap.units.k_b() * temperature;
    let scaled = n * (trap.hbar_omega() / kt).powi(3);
    Ok(kt * inverse_fermi_dirac_ln(FdOrder::Three, scaled)?)
}

/// Ideal profiles of both components on `grid`.
pub fn ideal_profile(state: &GasState, trap: &TrapParams, grid: &[f64]) -> Result<RadialProfile, GasError> {
    check_grid(grid)?;
    let mu1 = solve_mu_ideal(state.n1, state.temperature, trap)?;
    let mu2 = solve_mu_ideal(state.n2, state.temperature, trap)?;
    let lambda3 = thermal_wavelength(trap.mass, state.temperature, trap.units)?.powi(3);
    let component = |mu: f64| -> (Vec<f64>, Vec<f64>) {
        grid.iter()
            .map(|&r| {
                let ln_z = state.beta * (mu - trap.potential(r));
                (fermi_dirac_ln(FdOrder::ThreeHalves, ln_z) / lambda3, ln_z.exp())
            })
            .unzip()
    };
    let (n1, fugacity1) = component(mu1);
    let (n2, fugacity2) = component(mu2);
    Ok(RadialProfile {
        r_max: *grid.last().expect("checked grid"),
        grid: grid.to_vec(),
        n1,
        n2,
        fugacity1,
        fugacity2,
    })
}

/// Converged Hartree profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfConsistentSolution {
    pub profile: RadialProfile,
    /// Chemical potentials of the two components; equal when `N1 = N2`.
    pub mu: [f64; 2],
    pub residual: f64,
    pub iterations: usize,
    /// `beta |v0| max(n)`, the dimensionless mean-field strength.
    pub coupling_strength: f64,
}

impl SelfConsistentSolution {
    pub fn is_weak_coupling(&self) -> bool {
        self.coupling_strength <= WEAK_COUPLING_LIMIT
    }
}

/// One component's density for a given mean field, with its chemical
/// potential re-solved so that the grid integral equals `target`.
struct ComponentSolver<'a> {
    grid: &'a [f64],
    step: f64,
    potential: Vec<f64>,
    beta: f64,
    lambda3: f64,
    v0: f64,
}

impl ComponentSolver<'_> {
    fn ln_fugacity(&self, beta_mu: f64, other: &[f64]) -> Vec<f64> {
        self.potential
            .iter()
            .zip(other)
            .map(|(v, n)| beta_mu - self.beta * (v + self.v0 * n))
            .collect()
    }

    fn density(&self, beta_mu: f64, other: &[f64]) -> Vec<f64> {
        self.ln_fugacity(beta_mu, other)
            .into_iter()
            .map(|ln_z| fermi_dirac_ln(FdOrder::ThreeHalves, ln_z) / self.lambda3)
            .collect()
    }

    fn solve_beta_mu(&self, target: f64, guess: f64, other: &[f64]) -> Result<f64, GasError> {
        let cfg = SolverConfig::tight();
        let log_target = target.ln();
        let root = find_root_expanding(
            |beta_mu| shell_integral(self.grid, &self.density(beta_mu, other), self.step).ln() - log_target,
            guess - 0.5,
            guess + 0.5,
            &cfg,
        )?;
        Ok(root)
    }
}

/// Self-consistent Hartree profiles at fixed particle numbers.
///
/// Starts from the ideal profiles, then iterates the damped map
/// `(n1, n2) -> (n1[n2], n2[n1])`, re-solving each chemical potential after
/// every sweep. On [`GasError::NotConverged`] the last iterate is returned
/// inside the error.
pub fn self_consistent_profiles(
    state: &GasState,
    v0: f64,
    trap: &TrapParams,
    grid: &[f64],
    cfg: &SolverConfig,
) -> Result<SelfConsistentSolution, GasError> {
    cfg.validate()?;
    if !v0.is_finite() {
        return Err(GasError::InvalidInput(format!("v0 must be finite, got {v0}")));
    }
    let step = check_grid(grid)?;
    let ideal = ideal_profile(state, trap, grid)?;
    let points = grid.len();
    let solver = ComponentSolver {
        grid,
        step,
        potential: grid.iter().map(|&r| trap.potential(r)).collect(),
        beta: state.beta,
        lambda3: thermal_wavelength(trap.mass, state.temperature, trap.units)?.powi(3),
        v0,
    };
    let targets = [state.n1, state.n2];
    let mut beta_mu = [
        state.beta * solve_mu_ideal(state.n1, state.temperature, trap)?,
        state.beta * solve_mu_ideal(state.n2, state.temperature, trap)?,
    ];

    let sweep = |x: &[f64], beta_mu: &mut [f64; 2]| -> Result<Vec<f64>, GasError> {
        let (n1, n2) = x.split_at(points);
        beta_mu[0] = solver.solve_beta_mu(targets[0], beta_mu[0], n2)?;
        beta_mu[1] = solver.solve_beta_mu(targets[1], beta_mu[1], n1)?;
        let mut next = solver.density(beta_mu[0], n2);
        next.extend(solver.density(beta_mu[1], n1));
        if next.iter().any(|v| !v.is_finite()) {
            return Err(GasError::Diverged { residual: f64::INFINITY });
        }
        Ok(next)
    };

    let init: Vec<f64> = ideal.n1.iter().chain(&ideal.n2).copied().collect();
    let finish = |x: &[f64], beta_mu: [f64; 2], residual: f64, iterations: usize| {
        let (n1, n2) = x.split_at(points);
        let fugacity1 = solver.ln_fugacity(beta_mu[0], n2).into_iter().map(f64::exp).collect();
        let fugacity2 = solver.ln_fugacity(beta_mu[1], n1).into_iter().map(f64::exp).collect();
        let peak = x.iter().fold(0.0_f64, |m, v| m.max(*v));
        SelfConsistentSolution {
            profile: RadialProfile {
                grid: grid.to_vec(),
                n1: n1.to_vec(),
                n2: n2.to_vec(),
                fugacity1,
                fugacity2,
                r_max: grid[points - 1],
            },
            mu: [beta_mu[0] / state.beta, beta_mu[1] / state.beta],
            residual,
            iterations,
            coupling_strength: state.beta * v0.abs() * peak,
        }
    };

    match try_fixed_point(|x| sweep(x, &mut beta_mu), &init, cfg) {
        Ok(fp) => {
            // One more sweep so densities and chemical potentials belong to
            // the same iterate.
            let x = sweep(&fp.x, &mut beta_mu)?;
            Ok(finish(&x, beta_mu, fp.residual, fp.iterations))
        }
        Err(GasError::Numerics(NumericsError::MaxIterExceeded { residual, last, .. })) => {
            Err(GasError::NotConverged {
                residual,
                last: Box::new(finish(&last, beta_mu, residual, cfg.max_iter)),
            })
        }
        Err(GasError::Numerics(NumericsError::Diverged { residual, .. })) => Err(GasError::Diverged { residual }),
        Err(GasError::Numerics(NumericsError::NoBracket { .. })) => Err(GasError::Diverged { residual: f64::NAN }),
        Err(e) => Err(e),
    }
}

/// Which form of the first-order density correction to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PerturbativeForm {
    /// `-beta v0 n_b^0 f_{1/2}(z0)`, the derivative of the self-consistent
    /// density with respect to `v0` at fixed chemical potential.
    #[default]
    ChainRule,
    /// `-beta v0 n_b^0 z0^2 f_{1/2}(z0)`, the correction as it is commonly
    /// printed; kept for comparison only.
    Printed,
}

/// Density to first order in `v0` at the fixed chemical potential `state.mu`.
pub fn perturbative_density(
    r: f64,
    state: &GasState,
    v0: f64,
    trap: &TrapParams,
    form: PerturbativeForm,
) -> Result<f64, GasError> {
    let lambda3 = thermal_wavelength(trap.mass, state.temperature, trap.units)?.powi(3);
    if !(r >= 0.0) {
        return Err(GasError::InvalidInput(format!("radius must be non-negative, got {r}")));
    }
    let ln_z = state.beta * (state.mu - trap.potential(r));
    let f32 = fermi_dirac_ln(FdOrder::ThreeHalves, ln_z);
    let f12 = fermi_dirac_ln(FdOrder::Half, ln_z);
    let other = f32 / lambda3;
    let slope = match form {
        PerturbativeForm::ChainRule => f12,
        PerturbativeForm::Printed => (2.0 * ln_z).exp() * f12,
    };
    Ok((f32 - state.beta * v0 * other * slope) / lambda3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn natural_state(beta_hw: f64, n: f64) -> (TrapParams, GasState) {
        let trap = TrapParams::natural();
        let state = GasState::ideal(1.0 / beta_hw, n, n, &trap).unwrap();
        (trap, state)
    }

    #[test]
    fn density_vanishes_far_out() {
        let trap = TrapParams::natural();
        assert_eq!(ideal_density(1e4, 3.0, 1.0, &trap).unwrap(), 0.0);
    }

    #[test]
    fn density_at_unit_fugacity_centre() {
        let trap = TrapParams::natural();
        let t = 2.0 * PI; // lambda = 1
        let n = ideal_density(0.0, 0.0, t, &trap).unwrap();
        assert!((n - 0.765_147_024_625_408).abs() < 1e-13);
    }

    #[test]
    fn classical_profile_is_gaussian() {
        let trap = TrapParams::natural();
        let (t, mu) = (10.0, -150.0);
        let n0 = ideal_density(0.0, mu, t, &trap).unwrap();
        for r in [0.5, 1.0, 3.0, 6.0] {
            let ratio = ideal_density(r, mu, t, &trap).unwrap() / n0;
            let gauss = (-trap.potential(r) / t).exp();
            assert!((ratio / gauss - 1.0).abs() < 1e-6, "r = {r}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let trap = TrapParams::natural();
        assert!(ideal_density(-1.0, 0.0, 1.0, &trap).is_err());
        assert!(ideal_density(0.0, 0.0, 0.0, &trap).is_err());
        assert!(TrapParams::new(0.0, 1.0, Units::Natural).is_err());
        assert!(solve_mu_ideal(0.0, 1.0, &trap).is_err());
        assert!(GasState::new(1.0, -2.0, 1.0, 0.0, Units::Natural).is_err());
        assert!(radial_grid(1.0, 2).is_err());
        let state = GasState::new(1.0, 10.0, 10.0, 0.0, Units::Natural).unwrap();
        let skewed = [0.0, 0.1, 0.3, 0.4];
        assert!(self_consistent_profiles(&state, 0.0, &trap, &skewed, &SolverConfig::default()).is_err());
    }

    #[test]
    fn classical_chemical_potential() {
        let trap = TrapParams::natural();
        let t = 100.0; // beta hbar w = 0.01
        let mu = solve_mu_ideal(10.0, t, &trap).unwrap();
        let classical = t * (10.0_f64 * 0.01_f64.powi(3)).ln();
        // f_3(z) = z - z^2/8 + ...: relative shift in z is about z/8 = 1.25e-6.
        assert!((mu - classical).abs() / t < 2e-6);
    }

    #[test]
    fn unit_fugacity_particle_number() {
        let trap = TrapParams::natural();
        let t: f64 = 20.0;
        let n = t.powi(3) * 0.75 * 1.202_056_903_159_594_3;
        let mu = solve_mu_ideal(n, t, &trap).unwrap();
        assert!(mu.abs() / t < 1e-10);
    }

    #[test]
    fn zero_coupling_reproduces_ideal_profile() {
        let (trap, state) = natural_state(0.05, 2000.0);
        let grid = radial_grid(default_r_max(state.mu, state.temperature, 0.0, &trap), 256).unwrap();
        let sc = self_consistent_profiles(&state, 0.0, &trap, &grid, &SolverConfig::default()).unwrap();
        let ideal = ideal_profile(&state, &trap, &grid).unwrap();
        for (a, b) in sc.profile.n1.iter().zip(&ideal.n1) {
            assert!((a - b).abs() <= 1e-8 * ideal.n1[0]);
        }
        assert_eq!(sc.profile.n1, sc.profile.n2);
    }

    #[test]
    fn unequal_populations_have_distinct_profiles() {
        let trap = TrapParams::natural();
        let state = GasState::new(10.0, 500.0, 200.0, 0.0, Units::Natural).unwrap();
        let mu = solve_mu_ideal(500.0, 10.0, &trap).unwrap();
        let grid = radial_grid(default_r_max(mu, 10.0, 0.0, &trap), 256).unwrap();
        let sc = self_consistent_profiles(&state, 0.5, &trap, &grid, &SolverConfig::default()).unwrap();
        let (a, b) = sc.profile.particle_numbers();
        assert!((a / 500.0 - 1.0).abs() < 1e-10);
        assert!((b / 200.0 - 1.0).abs() < 1e-10);
        assert!(sc.mu[0] > sc.mu[1]);
    }

    #[test]
    fn iteration_limit_returns_last_iterate() {
        let (trap, state) = natural_state(0.05, 2000.0);
        let grid = radial_grid(default_r_max(state.mu, state.temperature, 0.0, &trap), 128).unwrap();
        let cfg = SolverConfig { max_iter: 1, ..SolverConfig::default() };
        match self_consistent_profiles(&state, 2.0, &trap, &grid, &cfg) {
            Err(GasError::NotConverged { residual, last }) => {
                assert!(residual > 0.0);
                assert_eq!(last.profile.n1.len(), 128);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn perturbative_form_signs() {
        let (trap, state) = natural_state(0.05, 2000.0);
        for r in [0.0, 2.0, 5.0] {
            let ideal = ideal_density(r, state.mu, state.temperature, &trap).unwrap();
            let zero = perturbative_density(r, &state, 0.0, &trap, PerturbativeForm::ChainRule).unwrap();
            assert_eq!(zero, ideal);
            let attractive = perturbative_density(r, &state, -0.5, &trap, PerturbativeForm::ChainRule).unwrap();
            let repulsive = perturbative_density(r, &state, 0.5, &trap, PerturbativeForm::ChainRule).unwrap();
            assert!(attractive > ideal && repulsive < ideal);
            let printed = perturbative_density(r, &state, 0.5, &trap, PerturbativeForm::Printed).unwrap();
            assert!(printed < ideal);
        }
    }
}
