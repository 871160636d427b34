//! Physical constants and the thermal environment.

use serde::{Deserialize, Serialize};

/// Boltzmann constant (J/K), CODATA 2018 exact value.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Elementary charge (C), CODATA 2018 exact value.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Default bath temperature (K).
pub const ROOM_TEMPERATURE: f64 = 300.0;

/// Thermal environment of a gate: temperature plus the derived inverse
/// temperature and thermal voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Boltzmann constant (J/K).
    pub boltzmann: f64,
    /// Elementary charge (C).
    pub charge: f64,
    /// Bath temperature (K).
    pub temperature: f64,
}

impl PhysicalConstants {
    pub fn at_temperature(temperature: f64) -> Self {
        Self {
            boltzmann: BOLTZMANN,
            charge: ELEMENTARY_CHARGE,
            temperature,
        }
    }

    /// kT (J).
    #[inline]
    pub fn kt(&self) -> f64 {
        self.boltzmann * self.temperature
    }

    /// beta = 1/kT (1/J). Exact reciprocal of `kt` by construction.
    #[inline]
    pub fn beta(&self) -> f64 {
        1.0 / self.kt()
    }

    /// Thermal voltage kT/q (V), ~25.85 mV at 300 K.
    #[inline]
    pub fn thermal_voltage(&self) -> f64 {
        self.kt() / self.charge
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::at_temperature(ROOM_TEMPERATURE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_is_reciprocal_to_rounding() {
        let c = PhysicalConstants::default();
        assert!((c.beta() * c.boltzmann * c.temperature - 1.0).abs() < 3e-16);
    }

    #[test]
    fn thermal_voltage_at_room_temperature() {
        let vt = PhysicalConstants::default().thermal_voltage();
        assert!(vt > 0.0258 && vt < 0.0259, "V_T = {vt}");
    }
}
