//! Constitutive response of a time-modulated polar dielectric.
//!
//! The static response is a single Lorentz oscillator whose resonance is
//! red-shifted by a hydrodynamic-like pressure term, ω₀²(q) = ω₀² − β²q².
//! Setting β = 0 recovers the local model. A weak modulation of the TO
//! frequency, ω₀ → ω₀(1 + δω f(t)), produces the two-frequency
//! susceptibility Δχ(ω, ω′, q).
//!
//! Fourier convention: F(ω) = ∫ f(t) e^{iωt} dt, inverse carries 1/2π.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{ReducedUnits, DIPOLE_LIMIT_Q};

/// Complex dimensionless response (permittivity or susceptibility).
pub type ComplexResponse = Complex64;

/// Largest modulation depth accepted as perturbative.
pub const MAX_MODULATION_DEPTH: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("invalid material parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("negative frequency {0} rad/s; evaluate at |ω| and conjugate")]
    NegativeFrequency(f64),
    #[error("negative wavenumber {0} rad/m")]
    NegativeWavenumber(f64),
    #[error("response is singular at ω = {omega} rad/s, q = {q} rad/m (lossless resonance)")]
    Singular { omega: f64, q: f64 },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> MaterialError {
    MaterialError::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

/// Static parameters of the polar dielectric, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzMaterial {
    /// High-frequency permittivity ε∞.
    pub eps_inf: f64,
    /// Plasma frequency (oscillator strength) ω_p [rad/s].
    pub omega_p: f64,
    /// TO phonon frequency ω₀ [rad/s].
    pub omega_0: f64,
    /// Damping rate γ [rad/s].
    pub gamma: f64,
    /// Nonlocality velocity β [m/s]; zero selects the local model.
    pub beta: f64,
}

impl LorentzMaterial {
    /// SiC, β = 0.
    pub const SIC_LOCAL: LorentzMaterial = LorentzMaterial {
        eps_inf: 6.7,
        omega_p: 1.049e14,
        omega_0: 1.49e14,
        gamma: 8.97e11,
        beta: 0.0,
    };

    /// SiC with β = 1.539×10⁶ m/s.
    pub const SIC_NONLOCAL: LorentzMaterial = LorentzMaterial {
        beta: SIC_BETA,
        ..Self::SIC_LOCAL
    };

    pub fn new(
        eps_inf: f64,
        omega_p: f64,
        omega_0: f64,
        gamma: f64,
        beta: f64,
    ) -> Result<Self, MaterialError> {
        let m = Self {
            eps_inf,
            omega_p,
            omega_0,
            gamma,
            beta,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        // ω_p = 0 is allowed: it switches the oscillator off entirely.
        if !(self.omega_p >= 0.0 && self.omega_p.is_finite()) {
            return Err(invalid("omega_p", "must be finite and >= 0"));
        }
        if !(self.omega_0 > 0.0 && self.omega_0.is_finite()) {
            return Err(invalid("omega_0", "must be finite and > 0"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", "must be finite and >= 0"));
        }
        if !(self.eps_inf >= 1.0 && self.eps_inf.is_finite()) {
            return Err(invalid("eps_inf", "must be finite and >= 1"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn is_local(&self) -> bool {
        self.beta == 0.0
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }

    pub fn units(&self) -> ReducedUnits {
        ReducedUnits::new(self.omega_0)
    }

    pub fn reduced(&self) -> ReducedMaterial {
        let u = self.units();
        ReducedMaterial {
            eps_inf: self.eps_inf,
            strength: (self.omega_p / self.omega_0).powi(2),
            damping: self.gamma / self.omega_0,
            nonlocality: u.velocity(self.beta),
        }
    }

    /// ω₀²(q) = ω₀² − β²q² [rad²/s²]. Negative values are allowed.
    pub fn resonance_freq_sq(&self, q: f64) -> f64 {
        self.omega_0 * self.omega_0 - self.beta * self.beta * q * q
    }

    /// Background permittivity ε∞(1 + ω_p²/(ω₀²(q) − ω² − iγω)).
    pub fn permittivity_bg(&self, omega: f64, q: f64) -> Result<ComplexResponse, MaterialError> {
        if omega < 0.0 {
            return Err(MaterialError::NegativeFrequency(omega));
        }
        if q < 0.0 {
            return Err(MaterialError::NegativeWavenumber(q));
        }
        warn_beyond_dipole_limit(q);
        let u = self.units();
        let eps = self
            .reduced()
            .permittivity(u.frequency(omega), u.wavenumber(q));
        if eps.is_finite() {
            Ok(eps)
        } else {
            Err(MaterialError::Singular { omega, q })
        }
    }

    /// Two-frequency susceptibility Δχ(ω, ω′, q) in seconds.
    ///
    /// Frequencies may be negative; the formula is evaluated by direct
    /// substitution. The result carries the ε∞ prefactor of the background.
    pub fn delta_chi(
        &self,
        pulse: &ModulationPulse,
        omega: f64,
        omega_prime: f64,
        q: f64,
    ) -> Result<ComplexResponse, MaterialError> {
        if q < 0.0 {
            return Err(MaterialError::NegativeWavenumber(q));
        }
        warn_beyond_dipole_limit(q);
        let u = self.units();
        let rp = pulse.reduced(&u);
        let chi = self.reduced().delta_chi(
            &rp,
            u.frequency(omega),
            u.frequency(omega_prime),
            u.wavenumber(q),
        );
        if chi.is_finite() {
            // reduced Δχ is in units of 1/ω₀
            Ok(chi / self.omega_0)
        } else {
            Err(MaterialError::Singular { omega, q })
        }
    }
}

/// β from the SiC parameter set [m/s].
pub const SIC_BETA: f64 = 1.539e6;

fn warn_beyond_dipole_limit(q: f64) {
    if q > DIPOLE_LIMIT_Q {
        log::warn!(
            "q = {q:.3e} rad/m exceeds 2π/a₀ = {DIPOLE_LIMIT_Q:.3e} rad/m; dipole approximation is not valid"
        );
    }
}

/// Material in reduced units: ω in ω₀, q in ω₀/c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedMaterial {
    pub eps_inf: f64,
    /// (ω_p/ω₀)²
    pub strength: f64,
    /// γ/ω₀
    pub damping: f64,
    /// β/c
    pub nonlocality: f64,
}

impl ReducedMaterial {
    #[inline]
    pub fn resonance_sq(&self, q: f64) -> f64 {
        let bq = self.nonlocality * q;
        1.0 - bq * bq
    }

    /// ω₀²(q) − ω² − iγω
    #[inline]
    pub fn denominator(&self, w: f64, q: f64) -> Complex64 {
        Complex64::new(self.resonance_sq(q) - w * w, -self.damping * w)
    }

    #[inline]
    pub fn permittivity(&self, w: f64, q: f64) -> Complex64 {
        self.eps_inf * (1.0 + self.strength / self.denominator(w, q))
    }

    /// Δχ in units of 1/ω₀.
    #[inline]
    pub fn delta_chi(&self, pulse: &ReducedPulse, w: f64, w_prime: f64, q: f64) -> Complex64 {
        let num = -self.eps_inf * self.strength * pulse.depth * pulse.spectrum(w_prime - w);
        num / (self.denominator(w_prime, q) * self.denominator(w, q))
    }

    /// |Δχ(ω, −ω′, q)|², the combination consumed by the pair-generation kernel.
    #[inline]
    pub fn delta_chi_pair_sq(&self, pulse: &ReducedPulse, w: f64, w_prime: f64, q: f64) -> f64 {
        self.delta_chi(pulse, w, -w_prime, q).norm_sqr()
    }

    /// Lossless surface-mode frequency squared from the closed form,
    /// ω² = ω₀²(q) + ε∞ω_p²/(1 + ε∞).
    #[inline]
    pub fn surface_mode_sq(&self, q: f64) -> f64 {
        self.resonance_sq(q) + self.eps_inf * self.strength / (1.0 + self.eps_inf)
    }
}

/// Gaussian-windowed carrier f(t) = cos(Ωt) exp(−t²/2T²) with depth δω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationPulse {
    /// Dimensionless modulation depth δω.
    pub delta_omega: f64,
    /// Carrier frequency Ω [rad/s].
    #[serde(rename = "Omega")]
    pub carrier: f64,
    /// Gaussian width T [s].
    #[serde(rename = "T")]
    pub width: f64,
}

impl ModulationPulse {
    pub fn new(delta_omega: f64, carrier: f64, width: f64) -> Result<Self, MaterialError> {
        let p = Self {
            delta_omega,
            carrier,
            width,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        if !self.delta_omega.is_finite() || self.delta_omega.abs() > MAX_MODULATION_DEPTH {
            return Err(invalid(
                "delta_omega",
                format!("|δω| must be <= {MAX_MODULATION_DEPTH} (perturbative regime)"),
            ));
        }
        if !(self.carrier > 0.0 && self.carrier.is_finite()) {
            return Err(invalid("Omega", "must be finite and > 0"));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(invalid("T", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn with_depth(self, delta_omega: f64) -> Self {
        Self {
            delta_omega,
            ..self
        }
    }

    /// f(t) = cos(Ωt) exp(−t²/2T²).
    pub fn pulse_time(&self, t: f64) -> f64 {
        (self.carrier * t).cos() * (-t * t / (2.0 * self.width * self.width)).exp()
    }

    /// F(ω) = ∫ f(t) e^{iωt} dt, real and even in ω [s].
    pub fn pulse_spectrum(&self, omega: f64) -> f64 {
        gaussian_pair(self.width, self.carrier, omega)
    }

    pub fn reduced(&self, units: &ReducedUnits) -> ReducedPulse {
        ReducedPulse {
            depth: self.delta_omega,
            carrier: units.frequency(self.carrier),
            width: units.time(self.width),
        }
    }
}

#[inline]
fn gaussian_pair(width: f64, carrier: f64, omega: f64) -> f64 {
    let a = width * (omega - carrier);
    let b = width * (omega + carrier);
    width * (PI / 2.0).sqrt() * ((-0.5 * a * a).exp() + (-0.5 * b * b).exp())
}

/// Pulse in reduced units: Ω in ω₀, T in 1/ω₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedPulse {
    pub depth: f64,
    pub carrier: f64,
    pub width: f64,
}

impl ReducedPulse {
    #[inline]
    pub fn spectrum(&self, w: f64) -> f64 {
        gaussian_pair(self.width, self.carrier, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIC: LorentzMaterial = LorentzMaterial::SIC_LOCAL;
    const SIC_NL: LorentzMaterial = LorentzMaterial::SIC_NONLOCAL;

    fn pulse() -> ModulationPulse {
        ModulationPulse::new(0.01, 2.2 * SIC.omega_0, 80e-15).unwrap()
    }

    #[test]
    fn resonance_freq_sq_cases() {
        assert_eq!(SIC.resonance_freq_sq(0.0), 1.49e14 * 1.49e14);
        assert!((SIC.resonance_freq_sq(0.0) - 2.2201e28).abs() < 1e14);
        assert_eq!(SIC.resonance_freq_sq(3.0e8), SIC.resonance_freq_sq(0.0));
        let q0 = SIC_NL.omega_0 / SIC_NL.beta;
        assert!(SIC_NL.resonance_freq_sq(q0).abs() < 1e-12 * SIC.omega_0.powi(2));
        assert!(SIC_NL.resonance_freq_sq(2.0 * q0) < 0.0);
    }

    #[test]
    fn static_permittivity() {
        // 6.7 (1 + (1.049/1.49)²) evaluated by hand
        let expected = 6.7 * (1.0 + (1.049f64 / 1.49).powi(2));
        let eps = SIC.permittivity_bg(0.0, 0.0).unwrap();
        assert!((eps.re - expected).abs() < 1e-12);
        assert!((eps.re - 10.021).abs() < 1e-3);
        assert_eq!(eps.im, 0.0);
    }

    #[test]
    fn zero_strength_is_background() {
        let m = LorentzMaterial::new(3.0, 0.0, 1e14, 1e12, 0.0).unwrap();
        for w in [0.0, 5e13, 1e14, 3e14] {
            assert_eq!(m.permittivity_bg(w, 1e7).unwrap(), Complex64::new(3.0, 0.0));
        }
    }

    #[test]
    fn nonlocal_large_q_is_transparent() {
        let q = 100.0 * SIC_NL.omega_0 / SIC_NL.beta;
        let eps = SIC_NL.permittivity_bg(SIC_NL.omega_0, q).unwrap();
        let asym = SIC_NL.eps_inf * (1.0 - (SIC_NL.omega_p / (SIC_NL.beta * q)).powi(2));
        assert!((eps.re - asym).abs() / asym < 1e-6);
        assert!((eps - SIC_NL.eps_inf).norm() / SIC_NL.eps_inf < 1e-4);

        let q30 = 30.0 * SIC_NL.omega_0 / SIC_NL.beta;
        for w in [0.5, 1.0, 1.2, 1.5] {
            let eps = SIC_NL.permittivity_bg(w * SIC.omega_0, q30).unwrap();
            assert!((eps - SIC_NL.eps_inf).norm() / SIC_NL.eps_inf < 1e-3);
        }
    }

    #[test]
    fn transparency_is_monotone_beyond_crossover() {
        let q0 = SIC_NL.omega_0 / SIC_NL.beta;
        let w = 1.1 * SIC.omega_0;
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let q = q0 * (1.0 + 0.25 * k as f64);
            let dev = (SIC_NL.permittivity_bg(w, q).unwrap() - SIC_NL.eps_inf).norm();
            assert!(dev < prev, "not monotone at q = {q}");
            prev = dev;
        }
    }

    #[test]
    fn rejects_negative_frequency() {
        assert!(matches!(
            SIC.permittivity_bg(-1.0, 0.0),
            Err(MaterialError::NegativeFrequency(_))
        ));
    }

    #[test]
    fn lossless_pole_is_an_error() {
        let m = SIC.with_beta(0.0);
        let m = LorentzMaterial { gamma: 0.0, ..m };
        assert!(matches!(
            m.permittivity_bg(m.omega_0, 0.0),
            Err(MaterialError::Singular { .. })
        ));
    }

    #[test]
    fn validation() {
        assert!(LorentzMaterial::new(0.5, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(LorentzMaterial::new(1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(LorentzMaterial::new(1.0, 1.0, 1.0, -1.0, 0.0).is_err());
        assert!(LorentzMaterial::new(1.0, 1.0, 1.0, 0.0, -1.0).is_err());
        assert!(ModulationPulse::new(0.5, 1.0, 1.0).is_err());
        assert!(ModulationPulse::new(0.01, 0.0, 1.0).is_err());
        assert!(ModulationPulse::new(0.01, 1.0, 0.0).is_err());
    }

    #[test]
    fn delta_chi_vanishes_without_modulation() {
        let p = pulse().with_depth(0.0);
        let chi = SIC_NL
            .delta_chi(&p, 1.2 * SIC.omega_0, -SIC.omega_0, 1e7)
            .unwrap();
        assert_eq!(chi.norm(), 0.0);
    }

    #[test]
    fn delta_chi_is_linear_in_depth() {
        let p1 = pulse();
        let p2 = p1.with_depth(2.0 * p1.delta_omega);
        for (w, wp, q) in [(1.2, -1.0, 1e6), (0.9, -1.3, 5e7), (1.1, 0.7, 2e8)] {
            let a = SIC_NL
                .delta_chi(&p1, w * SIC.omega_0, wp * SIC.omega_0, q)
                .unwrap();
            let b = SIC_NL
                .delta_chi(&p2, w * SIC.omega_0, wp * SIC.omega_0, q)
                .unwrap();
            assert_eq!(b.norm(), 2.0 * a.norm());
        }
    }

    #[test]
    fn delta_chi_magnitude_invariant_under_sign_flip() {
        let p = pulse();
        for (w, wp) in [(1.2, -1.0), (0.9, 1.3), (1.05, -1.17)] {
            let a = SIC_NL
                .delta_chi(&p, w * SIC.omega_0, wp * SIC.omega_0, 3e7)
                .unwrap();
            let b = SIC_NL
                .delta_chi(&p, -w * SIC.omega_0, -wp * SIC.omega_0, 3e7)
                .unwrap();
            assert!((a.norm() - b.norm()).abs() <= 1e-14 * a.norm());
        }
    }

    #[test]
    fn delta_chi_off_resonance_is_gaussian_suppressed() {
        let p = pulse();
        let w0 = SIC.omega_0;
        // peak: ω + ω′ = Ω
        let peak = SIC.delta_chi(&p, 1.1 * w0, -1.1 * w0, 0.0).unwrap().norm();
        // |ω + ω′ − Ω|·T ≈ 8: same denominators, spectrum down by e^{-32}
        let shift = 8.0 / p.width;
        let w = 1.1 * w0 + shift / 2.0;
        let off = SIC.delta_chi(&p, w, -w, 0.0).unwrap().norm();
        let den_ratio = {
            let r = SIC.reduced();
            let d0 = r.denominator(1.1, 0.0).norm_sqr();
            let d1 = r.denominator(w / w0, 0.0).norm_sqr();
            d0 / d1
        };
        let expected = (-32.0f64).exp() * den_ratio;
        assert!(off / peak < 1e-8);
        assert!(((off / peak) - expected).abs() / expected < 1e-6);
    }

    #[test]
    fn pulse_time_values() {
        let p = pulse();
        assert_eq!(p.pulse_time(0.0), 1.0);
        assert!(p.pulse_time(50.0 * p.width).abs() < 1e-300);
        assert!(p.pulse_time(-50.0 * p.width).abs() < 1e-300);
        let t = PI / p.carrier;
        let expected = -(-PI * PI / (2.0 * (p.carrier * p.width).powi(2))).exp();
        assert!((p.pulse_time(t) - expected).abs() < 1e-14);
    }

    #[test]
    fn pulse_spectrum_peak_and_symmetry() {
        let p = pulse();
        let (t, om) = (p.width, p.carrier);
        let peak = p.pulse_spectrum(om);
        let expected = t * (PI / 2.0).sqrt() * (1.0 + (-2.0 * t * t * om * om).exp());
        assert!((peak - expected).abs() / expected < 1e-14);
        assert!((peak - t * (PI / 2.0).sqrt()).abs() / peak < 1e-12);
        assert_eq!(p.pulse_spectrum(-om), peak);
        let off = p.pulse_spectrum(om + 6.0 / t);
        assert!((off / peak - (-18.0f64).exp()).abs() / (-18.0f64).exp() < 1e-9);
    }
}
