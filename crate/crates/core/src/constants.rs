//! Physical constants shared across the simulation modules.

/// Standard air density used for zone thermal capacitance and as the
/// reference density of crack flow coefficients, kg/m³.
pub const AIR_DENSITY: f64 = 1.2;

/// Specific heat of air at constant pressure, J/(kg·K).
pub const AIR_CP: f64 = 1006.0;

/// Specific gas constant of dry air, J/(kg·K).
pub const R_DRY_AIR: f64 = 287.055;

/// Standard atmospheric pressure, Pa.
pub const ATM_PRESSURE: f64 = 101_325.0;

/// Gravitational acceleration, m/s².
pub const GRAVITY: f64 = 9.81;

/// Zero Celsius in Kelvin.
pub const KELVIN_OFFSET: f64 = 273.15;

/// Dry-air density from the ideal gas law at atmospheric pressure, kg/m³.
pub fn air_density_at(temp_c: f64) -> f64 {
    ATM_PRESSURE / (R_DRY_AIR * (temp_c + KELVIN_OFFSET))
}
