//! Complete Fermi-Dirac integrals
//!
//! ```text
//! f_n(z) = -Li_n(-z) = 1/Gamma(n) * int_0^inf t^(n-1) / (exp(t)/z + 1) dt
//! ```
//!
//! for the orders that appear in the density, stability and trap-count
//! formulas. Three evaluation regimes are used, selected on `ln z`:
//!
//! * `z <= 0.9`: alternating power series;
//! * `0.9 < z < e^30`: adaptive quadrature of the integral;
//! * `z >= e^30`: Sommerfeld expansion plus the exact reflection term for
//!   integer orders.
//!
//! Most callers work with `ln z` directly ([`fermi_dirac_ln`]) because deep in
//! the degenerate regime `z` itself overflows.

use std::f64::consts::PI;

use thiserror::Error;

use crate::numerics::{find_root_expanding, integrate, NumericsError, SolverConfig};
use crate::units::Units;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FermiError {
    #[error("unsupported Fermi-Dirac order {0}")]
    UnsupportedOrder(f64),
    #[error("fugacity must be non-negative and finite, got {0}")]
    NegativeFugacity(f64),
    #[error("argument must be non-negative and finite, got {0}")]
    NegativeArgument(f64),
    #[error("{name} must be positive and finite, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },
    #[error("inversion did not converge: {0}")]
    NonConvergence(#[from] NumericsError),
}

/// Orders of the Fermi-Dirac integral supported by this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FdOrder {
    Half,
    One,
    ThreeHalves,
    Two,
    FiveHalves,
    Three,
}

impl FdOrder {
    pub const ALL: [FdOrder; 6] = [
        FdOrder::Half,
        FdOrder::One,
        FdOrder::ThreeHalves,
        FdOrder::Two,
        FdOrder::FiveHalves,
        FdOrder::Three,
    ];

    pub fn from_value(n: f64) -> Result<Self, FermiError> {
        Self::ALL
            .into_iter()
            .find(|o| o.value() == n)
            .ok_or(FermiError::UnsupportedOrder(n))
    }

    fn twice(self) -> i32 {
        match self {
            FdOrder::Half => 1,
            FdOrder::One => 2,
            FdOrder::ThreeHalves => 3,
            FdOrder::Two => 4,
            FdOrder::FiveHalves => 5,
            FdOrder::Three => 6,
        }
    }

    pub fn value(self) -> f64 {
        f64::from(self.twice()) / 2.0
    }

    /// The order `n - 1`, i.e. the integral produced by `z d/dz`.
    pub fn lowered(self) -> Option<FdOrder> {
        match self {
            FdOrder::Half => None,
            FdOrder::One => None,
            FdOrder::ThreeHalves => Some(FdOrder::Half),
            FdOrder::Two => Some(FdOrder::One),
            FdOrder::FiveHalves => Some(FdOrder::ThreeHalves),
            FdOrder::Three => Some(FdOrder::Two),
        }
    }

    fn is_integer(self) -> bool {
        self.twice() % 2 == 0
    }
}

/// `ln z` below which the power series is used.
pub const SERIES_LIMIT_LN_Z: f64 = -0.105_360_515_657_826_3; // ln 0.9
/// `ln z` at and above which the Sommerfeld expansion is used.
pub const SOMMERFELD_LIMIT_LN_Z: f64 = 30.0;

/// `f_n(z)` for a fugacity `z >= 0`.
pub fn fermi_dirac(order: FdOrder, z: f64) -> Result<f64, FermiError> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(FermiError::NegativeFugacity(z));
    }
    Ok(fermi_dirac_ln(order, z.ln()))
}

/// `f_n(e^ln_z)`; `ln_z = -inf` gives 0.
pub fn fermi_dirac_ln(order: FdOrder, ln_z: f64) -> f64 {
    if ln_z == f64::NEG_INFINITY {
        0.0
    } else if ln_z <= SERIES_LIMIT_LN_Z {
        regimes::series(order, ln_z)
    } else if ln_z < SOMMERFELD_LIMIT_LN_Z {
        regimes::quadrature(order, ln_z)
    } else {
        regimes::sommerfeld(order, ln_z)
    }
}

/// The individual evaluation regimes, exposed so their agreement in the
/// overlap bands can be checked.
pub mod regimes {
    use super::*;

    /// `sum_k (-1)^(k+1) z^k / k^n`, valid for `z < 1`.
    pub fn series(order: FdOrder, ln_z: f64) -> f64 {
        let z = ln_z.exp();
        if z == 0.0 {
            return 0.0;
        }
        debug_assert!(z < 1.0, "power series needs z < 1");
        let n = order.value();
        let mut sum = 0.0;
        let mut zk = 1.0;
        for k in 1..=1_000_000u32 {
            zk *= z;
            let term = zk / f64::from(k).powf(n);
            if k % 2 == 1 {
                sum += term;
            } else {
                sum -= term;
            }
            if term <= 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    }

    /// Direct quadrature after the substitution `t = s^2`, which removes the
    /// `t^(-1/2)` endpoint singularity of the lowest order.
    pub fn quadrature(order: FdOrder, ln_z: f64) -> f64 {
        let power = order.twice() - 1;
        let integrand = |s: f64| {
            let x = s * s - ln_z;
            let occupation = if x > 0.0 {
                let e = (-x).exp();
                e / (1.0 + e)
            } else {
                1.0 / (1.0 + x.exp())
            };
            s.powi(power) * occupation
        };
        let cfg = SolverConfig {
            abs_tol: 1e-300,
            rel_tol: 1e-14,
            max_iter: 2000,
            damping: 1.0,
        };
        let edge = ln_z.max(0.0);
        let mut cuts = vec![0.0, (ln_z - 40.0).max(0.0), edge, edge + 40.0, edge + 90.0];
        cuts.dedup();
        let total: f64 = cuts
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].sqrt(), w[1].sqrt());
                match integrate(integrand, a, b, &cfg) {
                    Ok(v) => v,
                    Err(NumericsError::ToleranceNotMet { estimate, .. }) => estimate,
                    Err(e) => panic!("Fermi-Dirac quadrature on [{a}, {b}] failed: {e}"),
                }
            })
            .sum();
        2.0 * total * recip_gamma_half(order.twice())
    }

    /// Sommerfeld expansion `sum_k 2 eta(2k) ln_z^(n-2k) / Gamma(n+1-2k)`,
    /// truncated at its smallest term, plus `-cos(pi n) f_n(1/z)`, which makes
    /// the result exact for integer orders.
    pub fn sommerfeld(order: FdOrder, ln_z: f64) -> f64 {
        debug_assert!(ln_z > 0.0);
        let n = order.value();
        let twice = order.twice();
        let mut sum = 0.0;
        let mut previous = f64::INFINITY;
        for (k, eta) in DIRICHLET_ETA_EVEN.iter().enumerate() {
            let k = k as i32;
            let coefficient = recip_gamma_half(twice + 2 - 4 * k);
            let term = 2.0 * eta * ln_z.powf(n - 2.0 * f64::from(k)) * coefficient;
            if term.abs() > previous {
                break;
            }
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            if term != 0.0 {
                previous = term.abs();
            }
        }
        if order.is_integer() {
            let sign = if (twice / 2) % 2 == 0 { -1.0 } else { 1.0 };
            sum += sign * series(order, -ln_z);
        }
        sum
    }
}

// Dirichlet eta at even arguments, eta(2k) = (1 - 2^(1-2k)) zeta(2k), k = 0..10.
const DIRICHLET_ETA_EVEN: [f64; 11] = [
    0.5,
    0.822_467_033_424_113_22,
    0.947_032_829_497_245_92,
    0.985_551_091_297_435_1,
    0.996_233_001_852_647_9,
    0.999_039_507_598_271_57,
    0.999_757_685_143_858_19,
    0.999_939_170_345_979_72,
    0.999_984_764_214_906_11,
    0.999_996_187_869_610_11,
    0.999_999_046_611_581_52,
];

/// `1/Gamma(m/2)` for integer `m`, exact recursion from Gamma(1) and
/// Gamma(1/2). Zero at the poles `m/2 = 0, -1, -2, ...`.
fn recip_gamma_half(m: i32) -> f64 {
    if m <= 0 && m % 2 == 0 {
        return 0.0;
    }
    // Start from Gamma(1) or Gamma(1/2) and walk to m/2.
    let (mut x2, mut gamma) = if m % 2 == 0 { (2, 1.0) } else { (1, PI.sqrt()) };
    while x2 < m {
        gamma *= f64::from(x2) / 2.0;
        x2 += 2;
    }
    while x2 > m {
        x2 -= 2;
        gamma /= f64::from(x2) / 2.0;
    }
    1.0 / gamma
}

/// `Gamma(n + 1)` for a supported order.
pub(crate) fn gamma_of_order_plus_one(order: FdOrder) -> f64 {
    1.0 / recip_gamma_half(order.twice() + 2)
}

/// Solves `f_n(z) = y` for `ln z`. Returns `-inf` for `y = 0`.
pub fn inverse_fermi_dirac_ln(order: FdOrder, y: f64) -> Result<f64, FermiError> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(FermiError::NegativeArgument(y));
    }
    if y == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let target = y.ln();
    // f_n(z) < z puts the root above ln y; the degenerate limit
    // f_n ~ (ln z)^n / Gamma(n+1) gives a starting upper end.
    let lo = target;
    let degenerate = (gamma_of_order_plus_one(order) * y).powf(1.0 / order.value());
    let hi = lo.max(degenerate) + 1.0;
    let cfg = SolverConfig::tight();
    let root = find_root_expanding(|ln_z| fermi_dirac_ln(order, ln_z).ln() - target, lo, hi, &cfg)?;
    Ok(root)
}

/// Fugacity `z` with `f_{3/2}(z) = y`.
pub fn inverse_fd_32(y: f64) -> Result<f64, FermiError> {
    Ok(inverse_fermi_dirac_ln(FdOrder::ThreeHalves, y)?.exp())
}

/// Thermal de Broglie wavelength `h / sqrt(2 pi m k_B T)`.
pub fn thermal_wavelength(mass: f64, temperature: f64, units: Units) -> Result<f64, FermiError> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(FermiError::NonPositiveInput {
            name: "mass",
            value: mass,
        });
    }
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(FermiError::NonPositiveInput {
            name: "temperature",
            value: temperature,
        });
    }
    let hbar = units.hbar();
    Ok((2.0 * PI * hbar * hbar / (mass * units.k_b() * temperature)).sqrt())
}
