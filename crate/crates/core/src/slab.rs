//! Quasistatic p-polarized response of a free-standing slab.
//!
//! In the near field (q ≫ ω/c) the slab reflection reduces to the
//! electrostatic image-charge form
//!
//! ```text
//! R_p = r (1 − e^{−2q d_s}) / (1 − r² e^{−2q d_s}),   r = (ε − 1)/(ε + 1)
//! ```
//!
//! with vacuum on both sides. Nonlocality enters only through ε(ω, q).

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::material::{ComplexResponse, LorentzMaterial, MaterialError, ReducedMaterial};

#[derive(Debug, Error)]
pub enum SlabError {
    #[error("reflection pole: ε = −1 exactly")]
    Pole,
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Slab of total thickness `d_s` whose top `d` is modulated [m].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabGeometry {
    pub d_s: f64,
    pub d: f64,
}

impl SlabGeometry {
    /// 100 nm slab with a 10 nm modulated layer.
    pub const SIC_DEFAULT: SlabGeometry = SlabGeometry {
        d_s: 100e-9,
        d: 10e-9,
    };

    pub fn new(d_s: f64, d: f64) -> Result<Self, SlabError> {
        let g = Self { d_s, d };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), SlabError> {
        if !(self.d > 0.0 && self.d <= self.d_s && self.d_s.is_finite()) {
            return Err(SlabError::InvalidGeometry(format!(
                "need 0 < d <= d_s, got d = {}, d_s = {}",
                self.d, self.d_s
            )));
        }
        Ok(())
    }
}

/// Single vacuum/medium interface coefficient (ε − 1)/(ε + 1).
pub fn interface_r(eps: ComplexResponse) -> Result<Complex64, SlabError> {
    if eps == Complex64::new(-1.0, 0.0) {
        return Err(SlabError::Pole);
    }
    if eps.is_infinite() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok((eps - 1.0) / (eps + 1.0))
}

/// Slab coefficient from the interface coefficient and e^{−2q d_s}.
#[inline]
pub(crate) fn slab_from_interface(r: Complex64, decay: f64) -> Complex64 {
    r * (1.0 - decay) / (1.0 - r * r * decay)
}

/// R_p(ω, q) for the slab [SI arguments].
pub fn reflection_slab(
    mat: &LorentzMaterial,
    geom: &SlabGeometry,
    omega: f64,
    q: f64,
) -> Result<Complex64, SlabError> {
    let eps = mat.permittivity_bg(omega, q)?;
    let r = interface_r(eps)?;
    Ok(slab_from_interface(r, (-2.0 * q * geom.d_s).exp()))
}

/// Slab optics in reduced units (ω in ω₀, q in ω₀/c, lengths in c/ω₀).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedSlab {
    pub material: ReducedMaterial,
    pub thickness: f64,
}

impl ReducedSlab {
    pub fn new(mat: &LorentzMaterial, geom: &SlabGeometry) -> Self {
        Self {
            material: mat.reduced(),
            thickness: mat.units().length(geom.d_s),
        }
    }

    #[inline]
    pub fn reflection(&self, w: f64, q: f64) -> Complex64 {
        let eps = self.material.permittivity(w, q);
        let r = (eps - 1.0) / (eps + 1.0);
        slab_from_interface(r, (-2.0 * q * self.thickness).exp())
    }
}

/// Lossless surface-mode frequency from ε_bg(ω, q) = −1 [rad/s].
///
/// Solved by bisection on ω² with γ = 0. Returns `None` once the mode no
/// longer exists (large q in the nonlocal model).
pub fn surface_mode_freq(mat: &LorentzMaterial, q: f64) -> Option<f64> {
    let u = mat.units();
    let m = ReducedMaterial {
        damping: 0.0,
        ..mat.reduced()
    };
    let qr = u.wavenumber(q);
    let r0 = m.resonance_sq(qr);
    let g = |s: f64| m.eps_inf * (1.0 + m.strength / (r0 - s)) + 1.0;

    let mut lo = r0.max(0.0);
    if r0 <= 0.0 && !(g(0.0) < 0.0) {
        return None;
    }
    if m.strength == 0.0 {
        return None;
    }
    let mut hi = lo + 1.0;
    while g(hi) <= 0.0 {
        hi = lo + 2.0 * (hi - lo);
        if !hi.is_finite() {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(u.frequency_si((0.5 * (lo + hi)).sqrt()))
}

/// Closed-form lossless surface-mode frequency
/// √(ω₀² − β²q² + ε∞ω_p²/(1 + ε∞)) [rad/s].
pub fn surface_mode_closed_form(mat: &LorentzMaterial, q: f64) -> Option<f64> {
    let s = mat.resonance_freq_sq(q) + mat.eps_inf * mat.omega_p.powi(2) / (1.0 + mat.eps_inf);
    (s > 0.0).then(|| s.sqrt())
}

/// |R_p| sampled on an (ω, q) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionMap {
    /// [rad/s]
    pub omega_grid: Vec<f64>,
    /// [rad/m]
    pub q_grid: Vec<f64>,
    /// `values[i][j]` is |R_p(omega_grid[i], q_grid[j])|.
    pub values: Vec<Vec<f64>>,
}

pub(crate) fn check_grid(name: &str, grid: &[f64]) -> Result<(), SlabError> {
    if grid.is_empty() {
        return Err(SlabError::InvalidGrid(format!("{name} is empty")));
    }
    if grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(SlabError::InvalidGrid(format!("{name} must be positive")));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SlabError::InvalidGrid(format!(
            "{name} must be strictly increasing"
        )));
    }
    Ok(())
}

pub fn dispersion_map(
    mat: &LorentzMaterial,
    geom: &SlabGeometry,
    omega_grid: &[f64],
    q_grid: &[f64],
) -> Result<DispersionMap, SlabError> {
    check_grid("omega_grid", omega_grid)?;
    check_grid("q_grid", q_grid)?;
    mat.validate()?;
    geom.validate()?;
    let u = mat.units();
    let slab = ReducedSlab::new(mat, geom);
    let values = omega_grid
        .par_iter()
        .map(|&w| {
            let w = u.frequency(w);
            q_grid
                .iter()
                .map(|&q| slab.reflection(w, u.wavenumber(q)).norm())
                .collect()
        })
        .collect();
    Ok(DispersionMap {
        omega_grid: omega_grid.to_vec(),
        q_grid: q_grid.to_vec(),
        values,
    })
}

impl DispersionMap {
    /// Frequency of the brightest entry in each q column [rad/s].
    pub fn ridge(&self) -> Vec<f64> {
        (0..self.q_grid.len())
            .map(|j| {
                let i = (0..self.omega_grid.len())
                    .max_by(|&a, &b| self.values[a][j].total_cmp(&self.values[b][j]))
                    .unwrap_or(0);
                self.omega_grid[i]
            })
            .collect()
    }

    /// Matrix CSV: header of qc/ω₀, first column ω/ω₀, body |R_p|.
    pub fn write_csv<W: Write>(&self, out: W, omega_0: f64) -> Result<(), SlabError> {
        let q_unit = omega_0 / crate::units::SPEED_OF_LIGHT;
        write_matrix_csv(
            out,
            "omega_over_omega0",
            &self
                .omega_grid
                .iter()
                .map(|w| w / omega_0)
                .collect::<Vec<_>>(),
            &self.q_grid.iter().map(|q| q / q_unit).collect::<Vec<_>>(),
            &self.values,
        )
    }
}

/// Shared matrix layout for density maps.
pub(crate) fn write_matrix_csv<W: Write>(
    out: W,
    corner: &str,
    rows: &[f64],
    cols: &[f64],
    values: &[Vec<f64>],
) -> Result<(), SlabError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![corner.to_string()];
    header.extend(cols.iter().map(|c| format!("{c:.10e}")));
    w.write_record(&header)?;
    for (x, row) in rows.iter().zip(values) {
        let mut rec = vec![format!("{x:.10e}")];
        rec.extend(row.iter().map(|v| format!("{v:.10e}")));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIC: LorentzMaterial = LorentzMaterial::SIC_LOCAL;
    const SIC_NL: LorentzMaterial = LorentzMaterial::SIC_NONLOCAL;
    const GEOM: SlabGeometry = SlabGeometry::SIC_DEFAULT;

    fn q_unit() -> f64 {
        SIC.omega_0 / crate::units::SPEED_OF_LIGHT
    }

    #[test]
    fn interface_limits() {
        assert_eq!(
            interface_r(Complex64::new(1.0, 0.0)).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        let big = interface_r(Complex64::new(1e12, 0.0)).unwrap();
        assert!((big.re - 1.0).abs() < 1e-11);
        assert_eq!(
            interface_r(Complex64::new(f64::INFINITY, 0.0)).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        let r = interface_r(Complex64::new(10.021, 0.0)).unwrap();
        assert!((r.re - 9.021 / 11.021).abs() < 1e-15);
        assert!((r.re - 0.8185).abs() < 1e-4);
        assert!(matches!(
            interface_r(Complex64::new(-1.0, 0.0)),
            Err(SlabError::Pole)
        ));
    }

    #[test]
    fn thick_slab_is_half_space() {
        for w in [0.9, 1.1, 1.19, 1.3] {
            let omega = w * SIC.omega_0;
            // q d_s = 40
            let q = 40.0 / GEOM.d_s;
            let rp = reflection_slab(&SIC, &GEOM, omega, q).unwrap();
            let r = interface_r(SIC.permittivity_bg(omega, q).unwrap()).unwrap();
            assert!((rp - r).norm() / r.norm() < 1e-12);
        }
    }

    #[test]
    fn small_q_vanishes() {
        let rp = reflection_slab(&SIC, &GEOM, 1.1 * SIC.omega_0, 1e-3).unwrap();
        assert!(rp.norm() < 1e-8);
    }

    #[test]
    fn resonant_maximum_near_asymptote() {
        // 1-D scan at fixed large q: |R_p| peaks where ε = −1
        let q = 50.0 / GEOM.d_s;
        let (mut best_w, mut best) = (0.0, 0.0);
        for k in 0..=20_000 {
            let w = 1.0 + 0.4 * k as f64 / 20_000.0;
            let v = reflection_slab(&SIC, &GEOM, w * SIC.omega_0, q)
                .unwrap()
                .norm();
            if v > best {
                best = v;
                best_w = w;
            }
        }
        assert!((best_w - 1.1964).abs() < 2e-3, "argmax at {best_w}");
    }

    /// Independent bisection on ε(ω) + 1 written directly in SI units.
    fn bisect_asymptote() -> f64 {
        let f = |w: f64| {
            SIC.eps_inf * (1.0 + SIC.omega_p.powi(2) / (SIC.omega_0.powi(2) - w * w)) + 1.0
        };
        let (mut lo, mut hi) = (SIC.omega_0 * (1.0 + 1e-12), 2.0 * SIC.omega_0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        lo / SIC.omega_0
    }

    #[test]
    fn local_asymptote() {
        let oracle = bisect_asymptote();
        assert!((oracle - 1.1964).abs() < 1e-4);
        let w0 = surface_mode_freq(&SIC, 0.0).unwrap() / SIC.omega_0;
        assert!((w0 - oracle).abs() < 1e-12);
        for k in [1.0, 100.0, 1e4, 1e6] {
            let w = surface_mode_freq(&SIC, k * q_unit()).unwrap() / SIC.omega_0;
            assert_eq!(w, w0);
        }
    }

    #[test]
    fn nonlocal_matches_closed_form() {
        let s = SIC_NL.eps_inf * SIC_NL.omega_p.powi(2) / (1.0 + SIC_NL.eps_inf)
            + 0.1 * SIC_NL.omega_0.powi(2);
        let q = s.sqrt() / SIC_NL.beta;
        let numeric = surface_mode_freq(&SIC_NL, q).unwrap();
        let closed = surface_mode_closed_form(&SIC_NL, q).unwrap();
        assert!((numeric - closed).abs() / closed < 1e-9);
        assert!((closed / SIC.omega_0 - 0.9f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nonlocal_mode_disappears() {
        let q = 2.0 * SIC_NL.omega_0 / SIC_NL.beta;
        assert!(surface_mode_freq(&SIC_NL, q).is_none());
        assert!(surface_mode_closed_form(&SIC_NL, q).is_none());
    }

    #[test]
    fn nonlocal_mode_bends_down() {
        let q0 = SIC_NL.omega_0 / (10.0 * SIC_NL.beta);
        let mut prev = f64::INFINITY;
        for k in 0..100 {
            let q = q0 * (1.0 + 0.1 * k as f64);
            let Some(w) = surface_mode_freq(&SIC_NL, q) else {
                break;
            };
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    fn dispersion_map_ridges() {
        let omegas: Vec<f64> = (0..=800)
            .map(|k| (0.8 + 0.6 * k as f64 / 800.0) * SIC.omega_0)
            .collect();
        let qs: Vec<f64> = [100.0, 300.0, 630.0].iter().map(|k| k * q_unit()).collect();
        let local = dispersion_map(&SIC, &GEOM, &omegas, &qs).unwrap();
        for w in local.ridge() {
            assert!((w / SIC.omega_0 - 1.1964).abs() < 2e-3);
        }
        // below the point where the nonlocal mode vanishes (≈ 1.2 ω₀/β)
        let qs: Vec<f64> = [40.0, 80.0, 120.0, 160.0]
            .iter()
            .map(|k| k * q_unit())
            .collect();
        let nl = dispersion_map(&SIC_NL, &GEOM, &omegas, &qs).unwrap();
        let ridge = nl.ridge();
        assert!(ridge.windows(2).all(|w| w[0] > w[1]), "{ridge:?}");
    }

    #[test]
    fn empty_oscillator_map_is_zero() {
        let vac = LorentzMaterial::new(1.0, 0.0, SIC.omega_0, SIC.gamma, 0.0).unwrap();
        let map = dispersion_map(&vac, &GEOM, &[1e14, 2e14], &[1e6, 1e8]).unwrap();
        assert!(map.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn grid_validation() {
        assert!(dispersion_map(&SIC, &GEOM, &[2.0, 1.0], &[1.0]).is_err());
        assert!(dispersion_map(&SIC, &GEOM, &[1.0], &[]).is_err());
        assert!(dispersion_map(&SIC, &GEOM, &[-1.0], &[1.0]).is_err());
        assert!(SlabGeometry::new(10e-9, 20e-9).is_err());
        assert!(SlabGeometry::new(10e-9, 0.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let map =
            dispersion_map(&SIC, &GEOM, &[SIC.omega_0, 1.2 * SIC.omega_0], &[q_unit()]).unwrap();
        let mut buf = Vec::new();
        map.write_csv(&mut buf, SIC.omega_0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("omega_over_omega0,1.0000000000e0"));
        assert!(lines[2].starts_with("1.2000000000e0,"));
    }
}
