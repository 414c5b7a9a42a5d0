//! Physical constants and the reduced unit system used by the hot loops.
//!
//! Frequencies are measured in units of the TO phonon frequency ω₀,
//! wavenumbers in units of ω₀/c, lengths in c/ω₀ and times in 1/ω₀.
//! Keeping every quantity near unity avoids carrying 10²⁸-sized
//! intermediates through the kernel.

use serde::{Deserialize, Serialize};

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Bohr radius [m].
pub const BOHR_RADIUS: f64 = 5.29e-11;

/// Wavenumber beyond which the dipole approximation breaks down, 2π/a₀ [rad/m].
pub const DIPOLE_LIMIT_Q: f64 = 2.0 * std::f64::consts::PI / BOHR_RADIUS;

/// Conversion between SI and reduced units, anchored at ω₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedUnits {
    /// Reference angular frequency ω₀ [rad/s].
    pub omega_0: f64,
}

impl ReducedUnits {
    pub fn new(omega_0: f64) -> Self {
        Self { omega_0 }
    }

    #[inline]
    pub fn frequency(&self, omega: f64) -> f64 {
        omega / self.omega_0
    }

    #[inline]
    pub fn frequency_si(&self, reduced: f64) -> f64 {
        reduced * self.omega_0
    }

    /// Wavenumber scale ω₀/c [rad/m].
    #[inline]
    pub fn q_scale(&self) -> f64 {
        self.omega_0 / SPEED_OF_LIGHT
    }

    #[inline]
    pub fn wavenumber(&self, q: f64) -> f64 {
        q / self.q_scale()
    }

    #[inline]
    pub fn wavenumber_si(&self, reduced: f64) -> f64 {
        reduced * self.q_scale()
    }

    #[inline]
    pub fn length(&self, len: f64) -> f64 {
        len * self.q_scale()
    }

    #[inline]
    pub fn time(&self, t: f64) -> f64 {
        t * self.omega_0
    }

    #[inline]
    pub fn velocity(&self, v: f64) -> f64 {
        v / SPEED_OF_LIGHT
    }
}
