//! Modeling and parameter estimation for hybrid double-quantum-dot / high-impedance
//! cavity microwave photon detectors.
//!
//! All stored rates and frequencies are ordinary frequencies in Hz (the "/2π" values).
//! Conversions to angular units happen only where a physical event rate is needed:
//! intracavity photon number ([`stark::photon_number`]) and the master-equation
//! oracle ([`oracle`]).

pub mod constants;
pub mod efficiency;
mod error;
pub mod fit;
pub mod hybrid;
pub mod oracle;
pub mod rabi;
pub mod reflectance;
pub mod stark;

pub use error::{Error, Result};
pub use hybrid::{Branch, HybridParams, LeadRates, MixingWeights, OperatingPoint};
pub use reflectance::{ComplexSpectrum, SusceptibilityModel};

/// Crate version, recorded in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
