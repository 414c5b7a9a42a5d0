//! Pair-generation spectra and three-quantum decay rates.
//!
//! The spectral pair-generation probability per unit area is the double
//! integral
//!
//! ```text
//! (1/A) dP/dω = ∫₀^∞ dω′ ∫₀^∞ dq  |Δχ(ω, −ω′, q)|² / (16π³)
//!                 · q (1 − e^{−2qd})² · Im R_p(ω′, q) · Im R_p(ω, q)
//! ```
//!
//! and the decay rate of an emitter at ω_a into the same three-quantum
//! channel is γ₀ times the identical integral at ω = ω_a. Everything below
//! runs in reduced units (see [`crate::units`]); SI values are restored at
//! the boundary.
//!
//! In the nonlocal model Δχ is evaluated at the integration wavenumber, so
//! its decay at large q is what makes the q-integral finite.

use std::cell::Cell;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::material::{LorentzMaterial, MaterialError, ModulationPulse, ReducedPulse};
use crate::quadrature::{
    self, CutoffPolicy, IntegralResult, QuadratureError, QuadratureSpec, ScanRow,
};
use crate::slab::{check_grid, ReducedSlab, SlabError, SlabGeometry};
use crate::units::{ReducedUnits, SPEED_OF_LIGHT};

#[derive(Debug, Error)]
pub enum EmissionError {
    #[error("model tag `{tag:?}` inconsistent with beta = {beta} m/s")]
    ModelMismatch { tag: ModelTag, beta: f64 },
    #[error("frequency must be > 0, got {0} rad/s")]
    NonPositiveFrequency(f64),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Slab(#[from] SlabError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Local,
    Nonlocal,
}

impl ModelTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelTag::Local => "local",
            ModelTag::Nonlocal => "nonlocal",
        }
    }
}

/// Inputs of one emission calculation. Cutoffs and windows in the
/// quadrature spec are in rad/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionConfig {
    pub material: LorentzMaterial,
    pub pulse: ModulationPulse,
    pub geometry: SlabGeometry,
    pub quadrature: QuadratureSpec,
    pub model: ModelTag,
}

impl EmissionConfig {
    pub fn validate(&self) -> Result<(), EmissionError> {
        self.material.validate()?;
        self.pulse.validate()?;
        self.geometry.validate()?;
        self.quadrature.validate()?;
        let local = self.material.is_local();
        if local != (self.model == ModelTag::Local) {
            return Err(EmissionError::ModelMismatch {
                tag: self.model,
                beta: self.material.beta,
            });
        }
        Ok(())
    }

    pub fn with_cutoff(self, q_c: f64) -> Self {
        Self {
            quadrature: self
                .quadrature
                .with_policy(CutoffPolicy::HardCutoff { q_c }),
            ..self
        }
    }

    pub fn with_depth(self, delta_omega: f64) -> Self {
        Self {
            pulse: self.pulse.with_depth(delta_omega),
            ..self
        }
    }

    pub fn units(&self) -> ReducedUnits {
        self.material.units()
    }
}

/// Default window start for the adaptive q-integral: five inverse
/// modulated-layer thicknesses [rad/m].
pub fn default_first_window(geom: &SlabGeometry) -> f64 {
    5.0 / geom.d
}

/// Pair-generation kernel in reduced units.
#[derive(Debug, Clone, Copy)]
pub struct PairKernel {
    slab: ReducedSlab,
    layer: f64,
    pulse: ReducedPulse,
    units: ReducedUnits,
}

const INV_16_PI3: f64 = 1.0 / (16.0 * PI * PI * PI);

impl PairKernel {
    pub fn new(cfg: &EmissionConfig) -> Self {
        let units = cfg.units();
        Self {
            slab: ReducedSlab::new(&cfg.material, &cfg.geometry),
            layer: units.length(cfg.geometry.d),
            pulse: cfg.pulse.reduced(&units),
            units,
        }
    }

    pub fn units(&self) -> ReducedUnits {
        self.units
    }

    /// (ε∞ ω_p² δω f(ω + ω′))² / 16π³, the part of |Δχ(ω, −ω′)|²/16π³
    /// that does not depend on q.
    #[inline]
    fn spectral_weight(&self, w: f64, wp: f64) -> f64 {
        let m = &self.slab.material;
        let amp = m.eps_inf * m.strength * self.pulse.depth * self.pulse.spectrum(w + wp);
        amp * amp * INV_16_PI3
    }

    /// q(1 − e^{−2qd})² Im R_p(ω′,q) Im R_p(ω,q) / (|D(ω′,q)|² |D(ω,q)|²).
    #[inline]
    fn q_density(&self, w: f64, wp: f64, q: f64) -> f64 {
        let m = &self.slab.material;
        let dw = m.denominator(w, q);
        let dwp = m.denominator(wp, q);
        let decay = (-2.0 * q * self.slab.thickness).exp();
        let im = |d: num_complex::Complex64| {
            let eps = m.eps_inf * (1.0 + m.strength / d);
            let r = (eps - 1.0) / (eps + 1.0);
            crate::slab::slab_from_interface(r, decay).im
        };
        let layer = 1.0 - (-2.0 * q * self.layer).exp();
        q * layer * layer * im(dw) * im(dwp) / (dw.norm_sqr() * dwp.norm_sqr())
    }

    /// Integrand of the double integral at reduced (ω, ω′, q).
    #[inline]
    pub fn integrand(&self, w: f64, wp: f64, q: f64) -> f64 {
        self.spectral_weight(w, wp) * self.q_density(w, wp, q)
    }

    /// Reduced surface-mode asymptote frequency for q → 0.
    pub fn asymptote(&self) -> f64 {
        self.slab.material.surface_mode_sq(0.0).sqrt()
    }

    /// Wavenumbers where the q-integrand has sharp structure.
    fn q_breakpoints(&self, w: f64, wp: f64) -> Vec<f64> {
        let m = &self.slab.material;
        let mut pts = vec![
            1.0 / self.slab.thickness,
            0.5 / self.layer,
            1.0,
            10.0,
            100.0,
            1000.0,
        ];
        for x in [w, wp] {
            // thin-slab poles, r² e^{−2q d_s} = 1 with the local lossless ε
            let d = 1.0 - x * x;
            if d != 0.0 {
                let eps = m.eps_inf * (1.0 + m.strength / d);
                let r = (eps - 1.0) / (eps + 1.0);
                if r.abs() > 1.0 {
                    pts.push(r.abs().ln() / self.slab.thickness);
                }
            }
            if m.nonlocality > 0.0 {
                let b = m.nonlocality;
                // bulk resonance ω₀(q) = ω and surface resonance ε(ω, q) = −1
                for s in [1.0 - x * x, m.surface_mode_sq(0.0) - x * x] {
                    if s > 0.0 {
                        let q = s.sqrt() / b;
                        pts.extend([q, 0.9 * q, 1.1 * q]);
                    }
                }
            }
        }
        pts
    }

    fn omega_prime_breakpoints(&self, w: f64) -> Vec<f64> {
        let centre = self.pulse.carrier - w;
        let sigma = 1.0 / self.pulse.width;
        let mut pts = vec![1.0, self.asymptote()];
        for k in [-4.0, -2.0, 0.0, 2.0, 4.0] {
            pts.push(centre + k * sigma);
        }
        pts
    }

    /// Upper limit of the ω′ integral: Ω + ω + 10/T plus a guard window of
    /// another 10/T. Beyond it the pulse spectrum is below e^{−50}.
    fn omega_prime_limit(&self, w: f64) -> f64 {
        self.pulse.carrier + w + 20.0 / self.pulse.width
    }
}

/// Quadrature spec with cutoffs and windows converted to reduced wavenumbers.
fn reduced_spec(spec: &QuadratureSpec, units: &ReducedUnits) -> QuadratureSpec {
    let cutoff_policy = match spec.cutoff_policy {
        CutoffPolicy::HardCutoff { q_c } => CutoffPolicy::HardCutoff {
            q_c: units.wavenumber(q_c),
        },
        CutoffPolicy::AdaptiveConverged {
            first_window,
            window_factor,
            rel_change,
        } => CutoffPolicy::AdaptiveConverged {
            first_window: units.wavenumber(first_window),
            window_factor,
            rel_change,
        },
    };
    QuadratureSpec {
        cutoff_policy,
        ..*spec
    }
}

/// Inner integrals are run this much tighter than the outer one.
const INNER_TOL_FACTOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateDiagnostics {
    /// Outer and every inner integral met their tolerance and tail criteria.
    pub converged: bool,
    /// Some inner q-integral was flagged divergent.
    pub diverged: bool,
    /// Error bound on the reduced value (outer estimate plus worst inner
    /// relative error times the value).
    pub error_estimate: f64,
    pub kernel_evaluations: usize,
    /// Largest q where an inner integral was truncated [rad/m].
    pub effective_q_max: f64,
}

/// Spectral pair-generation rate at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralRate {
    /// [rad/s]
    pub omega: f64,
    /// Dimensionless double integral (ω in ω₀, q in ω₀/c, Δχ in 1/ω₀).
    pub reduced: f64,
    /// (1/A) dP/dω [s/m²].
    pub per_area: f64,
    /// (1/AT) dP/dω [1/m²].
    pub normalized: f64,
    pub diagnostics: RateDiagnostics,
}

fn check_frequency(omega: f64) -> Result<(), EmissionError> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(EmissionError::NonPositiveFrequency(omega))
    }
}

/// Integrand of the pair-generation double integral at SI arguments, in
/// reduced units (per reduced ω′ and reduced q).
pub fn pair_integrand(
    cfg: &EmissionConfig,
    omega: f64,
    omega_prime: f64,
    q: f64,
) -> Result<f64, EmissionError> {
    cfg.validate()?;
    check_frequency(omega)?;
    check_frequency(omega_prime)?;
    let k = PairKernel::new(cfg);
    let u = k.units();
    Ok(k.integrand(
        u.frequency(omega),
        u.frequency(omega_prime),
        u.wavenumber(q),
    ))
}

/// The inner q-integral at fixed (ω, ω′), without the q-independent
/// spectral weight.
fn q_integral_reduced(
    k: &PairKernel,
    spec: &QuadratureSpec,
    w: f64,
    wp: f64,
) -> Result<IntegralResult, QuadratureError> {
    let breaks = k.q_breakpoints(w, wp);
    quadrature::integrate_semi_infinite_with_breakpoints(
        |q| k.q_density(w, wp, q),
        0.0,
        &breaks,
        spec,
    )
}

/// q-integral of the full kernel at fixed (ω, ω′) under the configured
/// cutoff policy. `value` is reduced; `effective_upper_limit` is in rad/m.
pub fn q_integral(
    cfg: &EmissionConfig,
    omega: f64,
    omega_prime: f64,
) -> Result<IntegralResult, EmissionError> {
    cfg.validate()?;
    check_frequency(omega)?;
    check_frequency(omega_prime)?;
    let k = PairKernel::new(cfg);
    let u = k.units();
    let (w, wp) = (u.frequency(omega), u.frequency(omega_prime));
    let spec = reduced_spec(&cfg.quadrature, &u);
    let mut r = q_integral_reduced(&k, &spec, w, wp)?;
    let weight = k.spectral_weight(w, wp);
    r.value *= weight;
    r.error_estimate *= weight;
    r.effective_upper_limit = u.wavenumber_si(r.effective_upper_limit);
    Ok(r)
}

/// Same q-integral truncated at each cutoff in `cutoffs` [rad/m].
pub fn q_convergence_scan(
    cfg: &EmissionConfig,
    omega: f64,
    omega_prime: f64,
    cutoffs: &[f64],
) -> Result<Vec<ScanRow>, EmissionError> {
    cfg.validate()?;
    check_frequency(omega)?;
    check_frequency(omega_prime)?;
    let k = PairKernel::new(cfg);
    let u = k.units();
    let (w, wp) = (u.frequency(omega), u.frequency(omega_prime));
    let weight = k.spectral_weight(w, wp);
    let reduced: Vec<f64> = cutoffs.iter().map(|&c| u.wavenumber(c)).collect();
    let rows = quadrature::convergence_scan(
        |q| weight * k.q_density(w, wp, q),
        &reduced,
        &k.q_breakpoints(w, wp),
        &cfg.quadrature,
    )?;
    Ok(rows
        .into_iter()
        .map(|r| ScanRow {
            cutoff: u.wavenumber_si(r.cutoff),
            ..r
        })
        .collect())
}

/// Reduced double integral at reduced frequency `w`.
fn double_integral(
    k: &PairKernel,
    spec: &QuadratureSpec,
    w: f64,
) -> Result<(f64, RateDiagnostics), QuadratureError> {
    let inner_spec = spec.with_rel_tol(spec.rel_tol * INNER_TOL_FACTOR);
    let worst_rel = Cell::new(0.0f64);
    let all_converged = Cell::new(true);
    let diverged = Cell::new(false);
    let q_max = Cell::new(0.0f64);
    let evaluations = Cell::new(0usize);
    let failure: Cell<Option<QuadratureError>> = Cell::new(None);

    let outer = |wp: f64| {
        let weight = k.spectral_weight(w, wp);
        if weight == 0.0 || wp <= 0.0 {
            return 0.0;
        }
        match q_integral_reduced(k, &inner_spec, w, wp) {
            Ok(r) => {
                if r.value != 0.0 {
                    worst_rel.set(worst_rel.get().max(r.error_estimate / r.value.abs()));
                }
                all_converged.set(all_converged.get() && r.converged);
                diverged.set(diverged.get() || r.diverged);
                q_max.set(q_max.get().max(r.effective_upper_limit));
                evaluations.set(evaluations.get() + r.evaluations);
                weight * r.value
            }
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };
    let upper = k.omega_prime_limit(w);
    let outer_spec = QuadratureSpec {
        max_subdivisions: spec.max_subdivisions,
        ..*spec
    };
    let r = quadrature::integrate_finite_with_breakpoints(
        outer,
        0.0,
        upper,
        &k.omega_prime_breakpoints(w),
        &outer_spec,
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let diag = RateDiagnostics {
        converged: r.converged && all_converged.get() && !diverged.get(),
        diverged: diverged.get(),
        error_estimate: r.error_estimate + worst_rel.get() * r.value.abs(),
        kernel_evaluations: evaluations.get() + r.evaluations,
        effective_q_max: k.units().wavenumber_si(q_max.get()),
    };
    Ok((r.value, diag))
}

/// (1/A) dP/dω at `omega` [rad/s] with diagnostics.
///
/// With the local model and an adaptive cutoff policy the inner integrals
/// diverge; the result is then flagged (`diverged`, not `converged`) and the
/// value is the integral truncated where divergence was detected.
pub fn pair_emission_spectral_rate(
    cfg: &EmissionConfig,
    omega: f64,
) -> Result<SpectralRate, EmissionError> {
    cfg.validate()?;
    check_frequency(omega)?;
    let k = PairKernel::new(cfg);
    let u = k.units();
    let spec = reduced_spec(&cfg.quadrature, &u);
    let (reduced, diagnostics) = double_integral(&k, &spec, u.frequency(omega))?;
    let scale = cfg.material.omega_0 / (SPEED_OF_LIGHT * SPEED_OF_LIGHT);
    let per_area = reduced * scale;
    Ok(SpectralRate {
        omega,
        reduced,
        per_area,
        normalized: per_area / cfg.pulse.width,
        diagnostics,
    })
}

/// Tabulated (1/AT) dP/dω over a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// [rad/s]
    pub omega_grid: Vec<f64>,
    /// (1/AT) dP/dω [1/m²]
    pub rate: Vec<f64>,
    /// Same units as `rate`.
    pub error_estimates: Vec<f64>,
    pub converged_flags: Vec<bool>,
    /// [rad/m]
    pub effective_q_max: Vec<f64>,
    pub config: EmissionConfig,
}

pub fn emission_spectrum(
    cfg: &EmissionConfig,
    omega_grid: &[f64],
) -> Result<SpectrumResult, EmissionError> {
    cfg.validate()?;
    check_grid("omega_grid", omega_grid)?;
    let points: Vec<SpectralRate> = omega_grid
        .par_iter()
        .map(|&w| pair_emission_spectral_rate(cfg, w))
        .collect::<Result<_, _>>()?;
    let to_rate = |p: &SpectralRate| {
        if p.reduced == 0.0 {
            0.0
        } else {
            p.normalized / p.reduced
        }
    };
    Ok(SpectrumResult {
        omega_grid: omega_grid.to_vec(),
        rate: points.iter().map(|p| p.normalized).collect(),
        error_estimates: points
            .iter()
            .map(|p| p.diagnostics.error_estimate * to_rate(p))
            .collect(),
        converged_flags: points.iter().map(|p| p.diagnostics.converged).collect(),
        effective_q_max: points
            .iter()
            .map(|p| p.diagnostics.effective_q_max)
            .collect(),
        config: *cfg,
    })
}

impl SpectrumResult {
    /// Indices of strict interior local maxima of `rate`.
    pub fn local_maxima(&self) -> Vec<usize> {
        local_maxima(&self.rate)
    }

    pub fn argmax(&self) -> usize {
        (0..self.rate.len())
            .max_by(|&a, &b| self.rate[a].total_cmp(&self.rate[b]))
            .unwrap_or(0)
    }

    /// Largest rate among grid points within `rel_window` of `omega`.
    pub fn peak_near(&self, omega: f64, rel_window: f64) -> Option<(usize, f64)> {
        self.local_maxima()
            .into_iter()
            .filter(|&i| (self.omega_grid[i] - omega).abs() <= rel_window * omega)
            .map(|i| (i, self.rate[i]))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Full width at half maximum of the peak at index `i`, by linear
    /// interpolation of the half-maximum crossings [rad/s].
    pub fn fwhm(&self, i: usize) -> Option<f64> {
        fwhm(&self.omega_grid, &self.rate, i)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let omega_0 = self.config.material.omega_0;
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "omega_over_omega0",
            "rate",
            "error_estimate",
            "converged",
            "effective_q_max",
        ])?;
        for i in 0..self.omega_grid.len() {
            w.write_record(&[
                format!("{:.10e}", self.omega_grid[i] / omega_0),
                format!("{:.10e}", self.rate[i]),
                format!("{:.4e}", self.error_estimates[i]),
                self.converged_flags[i].to_string(),
                format!("{:.6e}", self.effective_q_max[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1])
        .collect()
}

pub fn fwhm(x: &[f64], y: &[f64], i: usize) -> Option<f64> {
    let half = 0.5 * y[i];
    let mut l = i;
    while l > 0 && y[l] > half {
        l -= 1;
    }
    let mut r = i;
    while r + 1 < y.len() && y[r] > half {
        r += 1;
    }
    if y[l] > half || y[r] > half {
        return None;
    }
    let cross = |a: usize, b: usize| x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);
    Some(cross(r - 1, r) - cross(l, l + 1))
}

/// Three-quantum decay-rate enhancement γ/γ₀ at emitter frequency `omega_a`.
///
/// This is the reduced double integral of [`pair_emission_spectral_rate`]
/// evaluated at ω = ω_a, dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFactor {
    pub omega_a: f64,
    pub value: f64,
    pub diagnostics: RateDiagnostics,
}

pub fn decay_rate_factor(cfg: &EmissionConfig, omega_a: f64) -> Result<DecayFactor, EmissionError> {
    cfg.validate()?;
    check_frequency(omega_a)?;
    let k = PairKernel::new(cfg);
    let u = k.units();
    let spec = reduced_spec(&cfg.quadrature, &u);
    let (value, diagnostics) = double_integral(&k, &spec, u.frequency(omega_a))?;
    Ok(DecayFactor {
        omega_a,
        value,
        diagnostics,
    })
}

/// Wavenumber-resolved integrand at fixed ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrandMap {
    /// [rad/s]
    pub omega_fixed: f64,
    /// [rad/s]
    pub omega_prime_grid: Vec<f64>,
    /// [rad/m]
    pub q_grid: Vec<f64>,
    /// `values[i][j]` at (omega_prime_grid[i], q_grid[j]), reduced units.
    pub values: Vec<Vec<f64>>,
}

pub fn integrand_map(
    cfg: &EmissionConfig,
    omega_fixed: f64,
    omega_prime_grid: &[f64],
    q_grid: &[f64],
) -> Result<IntegrandMap, EmissionError> {
    cfg.validate()?;
    check_frequency(omega_fixed)?;
    check_grid("omega_prime_grid", omega_prime_grid)?;
    check_grid("q_grid", q_grid)?;
    let k = PairKernel::new(cfg);
    let u = k.units();
    let w = u.frequency(omega_fixed);
    let values = omega_prime_grid
        .par_iter()
        .map(|&wp| {
            let wp = u.frequency(wp);
            q_grid
                .iter()
                .map(|&q| k.integrand(w, wp, u.wavenumber(q)))
                .collect()
        })
        .collect();
    Ok(IntegrandMap {
        omega_fixed,
        omega_prime_grid: omega_prime_grid.to_vec(),
        q_grid: q_grid.to_vec(),
        values,
    })
}

impl IntegrandMap {
    /// (row, column) of the largest entry.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut v = f64::NEG_INFINITY;
        for (i, row) in self.values.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if x > v {
                    v = x;
                    best = (i, j);
                }
            }
        }
        best
    }

    /// Matrix CSV: header of qc/ω₀, first column ω′/ω₀.
    pub fn write_csv<W: std::io::Write>(&self, out: W, omega_0: f64) -> Result<(), SlabError> {
        let u = ReducedUnits::new(omega_0);
        crate::slab::write_matrix_csv(
            out,
            "omega_prime_over_omega0",
            &self
                .omega_prime_grid
                .iter()
                .map(|&w| u.frequency(w))
                .collect::<Vec<_>>(),
            &self
                .q_grid
                .iter()
                .map(|&q| u.wavenumber(q))
                .collect::<Vec<_>>(),
            &self.values,
        )
    }
}

/// One row of a cutoff study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffRow {
    /// [rad/m]
    pub q_c: f64,
    pub rate: SpectralRate,
}

/// Spectral rate at `omega` for each hard cutoff in `cutoffs` [rad/m].
pub fn cutoff_study(
    cfg: &EmissionConfig,
    omega: f64,
    cutoffs: &[f64],
) -> Result<Vec<CutoffRow>, EmissionError> {
    if cutoffs.is_empty() || cutoffs[0] <= 0.0 || cutoffs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(QuadratureError::UnorderedCutoffs.into());
    }
    cutoffs
        .par_iter()
        .map(|&q_c| {
            Ok(CutoffRow {
                q_c,
                rate: pair_emission_spectral_rate(&cfg.with_cutoff(q_c), omega)?,
            })
        })
        .collect()
}

pub fn write_cutoff_csv<W: std::io::Write>(
    rows: &[CutoffRow],
    omega_0: f64,
    out: W,
) -> Result<(), csv::Error> {
    let u = ReducedUnits::new(omega_0);
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "q_c_over_omega0",
        "q_c",
        "rate",
        "error_estimate",
        "converged",
    ])?;
    for r in rows {
        let scale = if r.rate.reduced == 0.0 {
            0.0
        } else {
            r.rate.normalized / r.rate.reduced
        };
        w.write_record(&[
            format!("{:.6e}", u.wavenumber(r.q_c)),
            format!("{:.6e}", r.q_c),
            format!("{:.10e}", r.rate.normalized),
            format!("{:.4e}", r.rate.diagnostics.error_estimate * scale),
            r.rate.diagnostics.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Frequency grid on [0.8, 1.4] ω₀ that is uniform in the background and
/// log-clustered around the phonon resonance and the surface asymptote.
pub fn default_frequency_grid(mat: &LorentzMaterial, n: usize) -> Vec<f64> {
    let (lo, hi) = (0.8, 1.4);
    let asym = mat.reduced().surface_mode_sq(0.0).sqrt();
    let uniform = n / 2;
    let per_side = (n - uniform) / 4;
    let mut pts: Vec<f64> = (0..uniform.max(2))
        .map(|i| lo + (hi - lo) * i as f64 / (uniform.max(2) - 1) as f64)
        .collect();
    for centre in [1.0, asym] {
        for k in 0..per_side {
            let t = if per_side > 1 {
                k as f64 / (per_side - 1) as f64
            } else {
                0.0
            };
            // offsets from 1e-4 to 5e-2, geometric
            let off = 1e-4 * (500f64).powf(t);
            pts.push(centre - off);
            pts.push(centre + off);
        }
    }
    pts.retain(|&x| x >= lo && x <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    pts.into_iter().map(|x| x * mat.omega_0).collect()
}
