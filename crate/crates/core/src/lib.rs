//! Equilibrium properties of a harmonically trapped two-component Fermi gas:
//! semiclassical density profiles with mean-field interactions, the
//! finite-temperature mechanical-stability criterion of the mixture, and the
//! BCS-type transition temperature including discrete trap-level corrections.

pub mod numerics;
pub mod fermi_functions;
pub mod units;
pub mod trapped_gas;
pub mod stability;
pub mod bcs;
pub mod cli;
