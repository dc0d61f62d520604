//! Run configurations and CSV emission for the `fermikit` binary.
//!
//! A configuration is a flat list of `key = value` lines; `#` starts a comment.
//! Every output file opens with the resolved configuration echoed as
//! `# key = value` lines, so [`RunConfig::from_echo`] recovers the run from
//! its own output. Results that are not per-row data go to trailing
//! `# result ...` lines.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::bcs::{
    critical_temperature_discrete, critical_temperature_from_gap, first_term_critical_temperature, gap_scan,
    semiclassical_critical_temperature, BcsError, ClosedFormTerms, PairingModel,
};
use crate::numerics::SolverConfig;
use crate::stability::{
    instability_window, local_instability_window, log_temperatures, scan, InstabilityWindow, MixtureParams,
    StabilityError,
};
use crate::trapped_gas::{
    default_r_max, ideal_profile, perturbative_density, radial_grid, self_consistent_profiles, GasError, GasState,
    PerturbativeForm, TrapParams, DEFAULT_GRID_POINTS,
};
use crate::units::Units;

/// Environment variable capping the worker threads (0 or unset = automatic).
pub const THREADS_ENV: &str = "FERMIKIT_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl From<GasError> for CliError {
    fn from(e: GasError) -> Self {
        match e {
            GasError::InvalidInput(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<StabilityError> for CliError {
    fn from(e: StabilityError) -> Self {
        match e {
            StabilityError::InvalidParams(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<BcsError> for CliError {
    fn from(e: BcsError) -> Self {
        match e {
            BcsError::InvalidModel(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Density,
    Stability,
    Bcs,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Density => "density",
            Command::Stability => "stability",
            Command::Bcs => "bcs",
        })
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "density" => Ok(Command::Density),
            "stability" => Ok(Command::Stability),
            "bcs" => Ok(Command::Bcs),
            other => Err(config_err(format!("unknown command `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityConfig {
    pub temperature: f64,
    pub n1: f64,
    pub n2: f64,
    pub v0: f64,
    pub mass: f64,
    pub omega: f64,
    pub grid_points: usize,
    /// Truncation radius; 0 picks one from the chemical potential.
    pub r_max: f64,
    pub perturbative_form: PerturbativeForm,
    pub solver: SolverConfig,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            temperature: 50.0,
            n1: 1e4,
            n2: 1e4,
            v0: -0.5,
            mass: 1.0,
            omega: 1.0,
            grid_points: DEFAULT_GRID_POINTS,
            r_max: 0.0,
            perturbative_form: PerturbativeForm::ChainRule,
            solver: SolverConfig {
                abs_tol: 1e-13,
                rel_tol: 1e-12,
                max_iter: 500,
                damping: 0.5,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityConfig {
    pub a1: f64,
    pub a2: f64,
    pub a12: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub mass: f64,
    /// Trap frequency for the local scans.
    pub omega: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    /// Radii for the local criterion; one extra file per radius.
    pub radii: Vec<f64>,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            a1: -0.5,
            a2: -0.5,
            a12: 0.5,
            rho1: 1.0,
            rho2: 1.0,
            mass: 1.0,
            omega: 1.0,
            t_min: 0.1,
            t_max: 100.0,
            t_points: 256,
            radii: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcsConfig {
    pub coupling: f64,
    pub n0: f64,
    pub hbar_omega: f64,
    pub mu: f64,
    pub n_max: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
}

impl Default for BcsConfig {
    fn default() -> Self {
        Self {
            coupling: 0.02,
            n0: 10.0,
            hbar_omega: 1.0,
            mu: 10.0,
            n_max: 20,
            t_min: 0.05,
            t_max: 5.0,
            t_points: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Analysis {
    Density(DensityConfig),
    Stability(StabilityConfig),
    Bcs(BcsConfig),
}

/// Everything that determines the content of one output file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub analysis: Analysis,
    pub units: Units,
    /// Emit the `# run:` metadata line.
    pub metadata: bool,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| config_err(format!("cannot parse `{value}` for key `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(config_err(format!("cannot parse `{value}` for key `{key}` as a boolean"))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn form_name(form: PerturbativeForm) -> &'static str {
    match form {
        PerturbativeForm::ChainRule => "chain_rule",
        PerturbativeForm::Printed => "printed",
    }
}

fn unknown(command: Command, key: &str) -> CliError {
    config_err(format!("unknown key `{key}` for command `{command}`"))
}

impl Command {
    pub fn default_analysis(self) -> Analysis {
        match self {
            Command::Density => Analysis::Density(DensityConfig::default()),
            Command::Stability => Analysis::Stability(StabilityConfig::default()),
            Command::Bcs => Analysis::Bcs(BcsConfig::default()),
        }
    }
}

impl Analysis {
    pub fn command(&self) -> Command {
        match self {
            Analysis::Density(_) => Command::Density,
            Analysis::Stability(_) => Command::Stability,
            Analysis::Bcs(_) => Command::Bcs,
        }
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        let command = self.command();
        match self {
            Analysis::Density(c) => match key {
                "temperature" => c.temperature = parse_value(key, v)?,
                "n1" => c.n1 = parse_value(key, v)?,
                "n2" => c.n2 = parse_value(key, v)?,
                "v0" => c.v0 = parse_value(key, v)?,
                "mass" => c.mass = parse_value(key, v)?,
                "omega" => c.omega = parse_value(key, v)?,
                "grid_points" => c.grid_points = parse_value(key, v)?,
                "r_max" => c.r_max = parse_value(key, v)?,
                "perturbative_form" => {
                    c.perturbative_form = match v.trim() {
                        "chain_rule" => PerturbativeForm::ChainRule,
                        "printed" => PerturbativeForm::Printed,
                        other => return Err(config_err(format!("unknown perturbative_form `{other}`"))),
                    }
                }
                "abs_tol" => c.solver.abs_tol = parse_value(key, v)?,
                "rel_tol" => c.solver.rel_tol = parse_value(key, v)?,
                "max_iter" => c.solver.max_iter = parse_value(key, v)?,
                "damping" => c.solver.damping = parse_value(key, v)?,
                _ => return Err(unknown(command, key)),
            },
            Analysis::Stability(c) => match key {
                "a1" => c.a1 = parse_value(key, v)?,
                "a2" => c.a2 = parse_value(key, v)?,
                "a12" => c.a12 = parse_value(key, v)?,
                "rho1" => c.rho1 = parse_value(key, v)?,
                "rho2" => c.rho2 = parse_value(key, v)?,
                "mass" => c.mass = parse_value(key, v)?,
                "omega" => c.omega = parse_value(key, v)?,
                "t_min" => c.t_min = parse_value(key, v)?,
                "t_max" => c.t_max = parse_value(key, v)?,
                "t_points" => c.t_points = parse_value(key, v)?,
                "radii" => c.radii = parse_list(key, v)?,
                _ => return Err(unknown(command, key)),
            },
            Analysis::Bcs(c) => match key {
                "coupling" => c.coupling = parse_value(key, v)?,
                "n0" => c.n0 = parse_value(key, v)?,
                "hbar_omega" => c.hbar_omega = parse_value(key, v)?,
                "mu" => c.mu = parse_value(key, v)?,
                "n_max" => c.n_max = parse_value(key, v)?,
                "t_min" => c.t_min = parse_value(key, v)?,
                "t_max" => c.t_max = parse_value(key, v)?,
                "t_points" => c.t_points = parse_value(key, v)?,
                _ => return Err(unknown(command, key)),
            },
        }
        Ok(())
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        match self {
            Analysis::Density(c) => vec![
                ("temperature", c.temperature.to_string()),
                ("n1", c.n1.to_string()),
                ("n2", c.n2.to_string()),
                ("v0", c.v0.to_string()),
                ("mass", c.mass.to_string()),
                ("omega", c.omega.to_string()),
                ("grid_points", c.grid_points.to_string()),
                ("r_max", c.r_max.to_string()),
                ("perturbative_form", form_name(c.perturbative_form).to_string()),
                ("abs_tol", c.solver.abs_tol.to_string()),
                ("rel_tol", c.solver.rel_tol.to_string()),
                ("max_iter", c.solver.max_iter.to_string()),
                ("damping", c.solver.damping.to_string()),
            ],
            Analysis::Stability(c) => vec![
                ("a1", c.a1.to_string()),
                ("a2", c.a2.to_string()),
                ("a12", c.a12.to_string()),
                ("rho1", c.rho1.to_string()),
                ("rho2", c.rho2.to_string()),
                ("mass", c.mass.to_string()),
                ("omega", c.omega.to_string()),
                ("t_min", c.t_min.to_string()),
                ("t_max", c.t_max.to_string()),
                ("t_points", c.t_points.to_string()),
                ("radii", c.radii.iter().map(f64::to_string).collect::<Vec<_>>().join(",")),
            ],
            Analysis::Bcs(c) => vec![
                ("coupling", c.coupling.to_string()),
                ("n0", c.n0.to_string()),
                ("hbar_omega", c.hbar_omega.to_string()),
                ("mu", c.mu.to_string()),
                ("n_max", c.n_max.to_string()),
                ("t_min", c.t_min.to_string()),
                ("t_max", c.t_max.to_string()),
                ("t_points", c.t_points.to_string()),
            ],
        }
    }
}

fn split_pair(line: &str) -> Result<(&str, &str), CliError> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| config_err(format!("expected `key = value`, got `{line}`")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(config_err(format!("empty key in `{line}`")));
    }
    Ok((k, v.trim()))
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        Self {
            analysis: command.default_analysis(),
            units: Units::Natural,
            metadata: true,
        }
    }

    pub fn command(&self) -> Command {
        self.analysis.command()
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "command" => {
                let c: Command = value.trim().parse()?;
                if c != self.command() {
                    return Err(config_err(format!("config is for `{c}` but the command is `{}`", self.command())));
                }
                Ok(())
            }
            "units" => {
                self.units = value.parse().map_err(CliError::Config)?;
                Ok(())
            }
            "metadata" => {
                self.metadata = parse_bool(key, value)?;
                Ok(())
            }
            _ => self.analysis.set(key, value),
        }
    }

    /// Applies an override of the form `key=value`.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (k, v) = split_pair(assignment)?;
        self.set(k, v)
    }

    /// Parses a configuration file body on top of the defaults for `command`.
    pub fn parse(command: Command, text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::defaults(command);
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = split_pair(line)?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(command: Command, path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(command, &text)
    }

    /// Recovers the configuration echoed at the top of an output file.
    pub fn from_echo(output: &str) -> Result<Self, CliError> {
        let mut pairs = Vec::new();
        for line in output.lines() {
            let Some(body) = line.strip_prefix("# ") else { break };
            if body.starts_with("run:") {
                continue;
            }
            pairs.push(split_pair(body)?);
        }
        let command = match pairs.first() {
            Some(("command", c)) => c.parse::<Command>()?,
            _ => return Err(config_err("echo does not start with `command`")),
        };
        let mut cfg = Self::defaults(command);
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// The `# key = value` block that opens every output file.
    pub fn echo(&self) -> String {
        let mut out = format!("# command = {}\n# units = {}\n# metadata = {}\n", self.command(), self.units, self.metadata);
        for (k, v) in self.analysis.entries() {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out
    }

    fn header(&self) -> String {
        let mut out = self.echo();
        if self.metadata {
            out.push_str(&format!(
                "# run: {} {}, threads {}\n",
                env!("CARGO_PKG_NAME"),
                env!("CARGO_PKG_VERSION"),
                rayon::current_num_threads()
            ));
        }
        out
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_row(out: &mut String, values: &[String]) {
    out.push_str(&values.join(","));
    out.push('\n');
}

/// Sizes the global worker pool from [`THREADS_ENV`]. Call once, before any
/// computation.
pub fn configure_threads() -> Result<(), CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => parse_value::<usize>(THREADS_ENV, &v)?,
        Err(_) => 0,
    };
    if threads > 0 {
        // A second initialisation only fails if a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(())
}

fn trap(mass: f64, omega: f64, units: Units) -> Result<TrapParams, CliError> {
    Ok(TrapParams::new(mass, omega, units)?)
}

/// CSV body of a density run.
pub fn render_density(cfg: &RunConfig) -> Result<String, CliError> {
    let Analysis::Density(c) = &cfg.analysis else {
        return Err(config_err("render_density needs a density configuration"));
    };
    c.solver.validate().map_err(|e| config_err(e.to_string()))?;
    let trap = trap(c.mass, c.omega, cfg.units)?;
    let ideal_state = GasState::ideal(c.temperature, c.n1, c.n2, &trap)?;
    let r_max = if c.r_max > 0.0 {
        c.r_max
    } else if c.r_max == 0.0 {
        // Leave room for an attractive mean field of up to ten thermal units.
        let shift = if c.v0 < 0.0 { 10.0 * cfg.units.k_b() * c.temperature } else { 0.0 };
        default_r_max(ideal_state.mu, c.temperature, shift, &trap)
    } else {
        return Err(config_err(format!("r_max must be >= 0, got {}", c.r_max)));
    };
    let grid = radial_grid(r_max, c.grid_points)?;
    let ideal = ideal_profile(&ideal_state, &trap, &grid)?;
    let sc = self_consistent_profiles(&ideal_state, c.v0, &trap, &grid, &c.solver)?;
    let sc_state = GasState::new(c.temperature, c.n1, c.n2, sc.mu[0], cfg.units)?;

    let mut out = cfg.header();
    out.push_str("r,n_ideal,n_self_consistent,n_perturbative,local_fugacity_1,local_fugacity_2\n");
    for (i, &r) in grid.iter().enumerate() {
        let pert = perturbative_density(r, &sc_state, c.v0, &trap, c.perturbative_form)?;
        push_row(
            &mut out,
            &[
                num(r),
                num(ideal.n1[i]),
                num(sc.profile.n1[i]),
                num(pert),
                num(sc.profile.fugacity1[i]),
                num(sc.profile.fugacity2[i]),
            ],
        );
    }
    let (n1, n2) = sc.profile.particle_numbers();
    out.push_str(&format!("# result mu_ideal = {}\n", num(ideal_state.mu)));
    out.push_str(&format!("# result mu_self_consistent = {},{}\n", num(sc.mu[0]), num(sc.mu[1])));
    out.push_str(&format!("# result particle_numbers = {},{}\n", num(n1), num(n2)));
    out.push_str(&format!("# result central_density_ideal = {}\n", num(ideal.n1[0])));
    out.push_str(&format!("# result central_density_self_consistent = {}\n", num(sc.profile.n1[0])));
    out.push_str(&format!("# result iterations = {}\n", sc.iterations));
    out.push_str(&format!("# result residual = {}\n", num(sc.residual)));
    out.push_str(&format!("# result coupling_strength = {}\n", num(sc.coupling_strength)));
    out.push_str(&format!("# result weak_coupling = {}\n", sc.is_weak_coupling()));
    Ok(out)
}

/// Stability outputs: the homogeneous scan and one scan per radius.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityOutput {
    pub homogeneous: String,
    pub local: Vec<String>,
}

fn window_footer(out: &mut String, window: Option<InstabilityWindow>) {
    match window {
        Some(w) => {
            out.push_str(&format!("# result T_c1 = {}\n", num(w.t_c1)));
            out.push_str(&format!("# result T_c2 = {}\n", num(w.t_c2)));
            out.push_str(&format!("# result clipped = {},{}\n", w.lower_clipped, w.upper_clipped));
        }
        None => {
            out.push_str("# result T_c1 = none\n");
            out.push_str("# result T_c2 = none\n");
        }
    }
}

pub fn render_stability(cfg: &RunConfig) -> Result<StabilityOutput, CliError> {
    let Analysis::Stability(c) = &cfg.analysis else {
        return Err(config_err("render_stability needs a stability configuration"));
    };
    if !(c.t_min > 0.0 && c.t_min < c.t_max && c.t_max.is_finite()) {
        return Err(config_err(format!("need 0 < t_min < t_max, got [{}, {}]", c.t_min, c.t_max)));
    }
    if c.t_points < 2 {
        return Err(config_err("t_points must be at least 2"));
    }
    if let Some(r) = c.radii.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(config_err(format!("radii must be non-negative, got {r}")));
    }
    let p = MixtureParams {
        a1: c.a1,
        a2: c.a2,
        a12: c.a12,
        rho1: c.rho1,
        rho2: c.rho2,
        temperature: c.t_min,
        mass: c.mass,
        units: cfg.units,
    };
    p.validate()?;
    let trap = trap(c.mass, c.omega, cfg.units)?;
    let temps = log_temperatures(c.t_min, c.t_max, c.t_points);

    let render = |local: Option<(f64, &TrapParams)>| -> Result<String, CliError> {
        let reports = scan(&p, &temps, local)?;
        let window = match local {
            Some((r, trap)) => local_instability_window(r, trap, &p, c.t_min, c.t_max)?,
            None => instability_window(&p, c.t_min, c.t_max)?,
        };
        let mut out = cfg.header();
        if let Some((r, _)) = local {
            out.push_str(&format!("# radius = {r}\n"));
        }
        out.push_str("T,Z,diag1,diag2,stable\n");
        for rep in &reports {
            push_row(
                &mut out,
                &[
                    num(rep.temperature),
                    num(rep.z_value),
                    rep.diag1_ok.to_string(),
                    rep.diag2_ok.to_string(),
                    rep.stable.to_string(),
                ],
            );
        }
        window_footer(&mut out, window);
        Ok(out)
    };

    Ok(StabilityOutput {
        homogeneous: render(None)?,
        local: c.radii.iter().map(|&r| render(Some((r, &trap)))).collect::<Result<_, _>>()?,
    })
}

fn temperature_footer(out: &mut String, name: &str, value: Result<f64, BcsError>) -> Result<(), CliError> {
    match value {
        Ok(t) => out.push_str(&format!("# result {name} = {}\n", num(t))),
        Err(BcsError::NoTransition) => out.push_str(&format!("# result {name} = none\n")),
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

pub fn render_bcs(cfg: &RunConfig) -> Result<String, CliError> {
    let Analysis::Bcs(c) = &cfg.analysis else {
        return Err(config_err("render_bcs needs a bcs configuration"));
    };
    if !(c.t_min > 0.0 && c.t_min <= c.t_max && c.t_max.is_finite()) {
        return Err(config_err(format!("need 0 < t_min <= t_max, got [{}, {}]", c.t_min, c.t_max)));
    }
    if c.t_points < 1 {
        return Err(config_err("t_points must be at least 1"));
    }
    let model = PairingModel {
        coupling: c.coupling,
        n0: c.n0,
        hbar_omega: c.hbar_omega,
        mu: c.mu,
        n_max: c.n_max,
        units: cfg.units,
    };
    model.validate()?;
    let temps: Vec<f64> = match c.t_points {
        1 => vec![c.t_min],
        n => (0..n)
            .map(|i| match i {
                _ if i == n - 1 => c.t_max,
                _ => c.t_min + (c.t_max - c.t_min) * i as f64 / (n - 1) as f64,
            })
            .collect(),
    };
    let gaps = gap_scan(&temps, &model)?;

    let mut out = cfg.header();
    out.push_str("T,delta\n");
    for (t, d) in temps.iter().zip(&gaps) {
        push_row(&mut out, &[num(*t), num(*d)]);
    }
    temperature_footer(&mut out, "T_c_gap", critical_temperature_from_gap(&model))?;
    let closed = critical_temperature_discrete(&model, ClosedFormTerms::Full);
    temperature_footer(&mut out, "T_c_closed_form", closed.clone().map(|c| c.temperature))?;
    temperature_footer(&mut out, "T_c_first_term", first_term_critical_temperature(&model))?;
    temperature_footer(&mut out, "T_c_semiclassical", semiclassical_critical_temperature(&model))?;
    match closed {
        Ok(tc) => {
            out.push_str(&format!("# result hbar_omega_over_kT_c = {}\n", num(tc.hbar_omega_over_kt)));
            out.push_str(&format!("# result closed_form_residual = {}\n", num(tc.residual)));
        }
        Err(_) => out.push_str("# result hbar_omega_over_kT_c = none\n"),
    }
    Ok(out)
}

/// `<stem>_r<idx>.<ext>` next to `out`.
pub fn radius_path(out: &Path, idx: usize) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_r{idx}.{}", ext.to_string_lossy()),
        None => format!("{stem}_r{idx}"),
    };
    out.with_file_name(name)
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| config_err(format!("cannot write {}: {e}", path.display())))
}

pub fn run_density(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    write(out, &render_density(cfg)?)
}

pub fn run_stability(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let files = render_stability(cfg)?;
    write(out, &files.homogeneous)?;
    for (i, body) in files.local.iter().enumerate() {
        write(&radius_path(out, i), body)?;
    }
    Ok(())
}

pub fn run_bcs(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    write(out, &render_bcs(cfg)?)
}

/// Dispatches on the configured command.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    match cfg.command() {
        Command::Density => run_density(cfg, out),
        Command::Stability => run_stability(cfg, out),
        Command::Bcs => run_bcs(cfg, out),
    }
}
