//! Physical constants (exact SI values).

/// Planck constant h [J·s].
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Elementary charge e [C].
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
