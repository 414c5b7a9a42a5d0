//! Scenario configuration files.
//!
//! Configs are strict JSON: unknown keys are rejected. Every frequency or
//! wavenumber may be given in SI (`Omega`, `q_c`, ...) or relative to the
//! material's ω₀ with an `_over_omega0` suffix (`Omega_over_omega0`,
//! `q_c_over_omega0` meaning q_c·c/ω₀). Giving both forms of one key is an
//! error. After parsing everything is held in SI; serializing writes the
//! SI form, so a serialized config parses back to the identical value.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emission::{default_first_window, ModelTag};
use crate::material::{LorentzMaterial, ModulationPulse, SIC_BETA};
use crate::quadrature::{CutoffPolicy, QuadratureSpec};
use crate::slab::SlabGeometry;
use crate::units::ReducedUnits;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("unknown preset `{0}` (available: {list})", list = PRESET_NAMES.join(", "))]
    UnknownPreset(String),
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Dispersion,
    IntegrandMap,
    Emission,
    Decay,
    CutoffStudy,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Dispersion => "dispersion",
            ScenarioKind::IntegrandMap => "integrand-map",
            ScenarioKind::Emission => "emission",
            ScenarioKind::Decay => "decay",
            ScenarioKind::CutoffStudy => "cutoff-study",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSelection {
    Local,
    Nonlocal,
    Both,
}

impl ModelSelection {
    pub fn models(&self) -> Vec<ModelTag> {
        match self {
            ModelSelection::Local => vec![ModelTag::Local],
            ModelSelection::Nonlocal => vec![ModelTag::Nonlocal],
            ModelSelection::Both => vec![ModelTag::Local, ModelTag::Nonlocal],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Sample grid in SI units (rad/s or rad/m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub spacing: Spacing,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + (self.max - self.min) * t,
                    Spacing::Log => self.min * (self.max / self.min).powf(t),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QPanel {
    pub name: String,
    pub q: Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionSettings {
    pub omega: Grid,
    pub panels: Vec<QPanel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrandMapSettings {
    pub omega_fixed: f64,
    pub omega_prime: Grid,
    pub q: Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmissionSettings {
    /// Explicit grid; `None` selects the clustered default grid.
    pub omega: Option<Grid>,
    pub n_points: usize,
    /// Carrier sweep [rad/s]; empty means the pulse carrier alone.
    pub carriers: Vec<f64>,
    /// Additional hard cutoffs for the local model [rad/m].
    pub extra_local_cutoffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecaySettings {
    pub omega_a: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffStudySettings {
    pub omega: f64,
    pub cutoffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub local_cutoff: CutoffPolicy,
    pub nonlocal_cutoff: CutoffPolicy,
}

impl QuadratureSettings {
    pub fn spec_for(&self, model: ModelTag) -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_subdivisions: self.max_subdivisions,
            cutoff_policy: match model {
                ModelTag::Local => self.local_cutoff,
                ModelTag::Nonlocal => self.nonlocal_cutoff,
            },
        }
    }
}

/// Fully resolved scenario, SI units throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub model: ModelSelection,
    pub output_dir: PathBuf,
    /// `beta` is the nonlocal velocity; the local model runs with β = 0.
    pub material: LorentzMaterial,
    pub pulse: ModulationPulse,
    pub geometry: SlabGeometry,
    pub quadrature: QuadratureSettings,
    pub dispersion: DispersionSettings,
    pub integrand_map: IntegrandMapSettings,
    pub emission: EmissionSettings,
    pub decay: DecaySettings,
    pub cutoff_study: CutoffStudySettings,
}

impl ScenarioConfig {
    pub fn material_for(&self, model: ModelTag) -> LorentzMaterial {
        match model {
            ModelTag::Local => self.material.with_beta(0.0),
            ModelTag::Nonlocal => self.material,
        }
    }

    pub fn units(&self) -> ReducedUnits {
        self.material.units()
    }

    /// Serialize in the strict file format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("config serializes")
    }

    pub fn to_raw(&self) -> RawConfig {
        let grid = |g: &Grid| RawGrid {
            min: Some(g.min),
            max: Some(g.max),
            n: g.n,
            spacing: g.spacing,
            ..Default::default()
        };
        let cutoff = |p: &CutoffPolicy| match *p {
            CutoffPolicy::HardCutoff { q_c } => RawCutoff {
                kind: CutoffKind::HardCutoff,
                q_c: Some(q_c),
                ..Default::default()
            },
            CutoffPolicy::AdaptiveConverged {
                first_window,
                window_factor,
                rel_change,
            } => RawCutoff {
                kind: CutoffKind::AdaptiveConverged,
                first_window: Some(first_window),
                window_factor: Some(window_factor),
                rel_change: Some(rel_change),
                ..Default::default()
            },
        };
        RawConfig {
            scenario: self.scenario,
            model: Some(self.model),
            output_dir: Some(self.output_dir.clone()),
            material: Some(RawMaterial {
                eps_inf: Some(self.material.eps_inf),
                omega_p: Some(self.material.omega_p),
                omega_0: Some(self.material.omega_0),
                gamma: Some(self.material.gamma),
                beta: Some(self.material.beta),
                ..Default::default()
            }),
            pulse: Some(RawPulse {
                delta_omega: Some(self.pulse.delta_omega),
                omega_carrier: Some(self.pulse.carrier),
                width: Some(self.pulse.width),
                ..Default::default()
            }),
            geometry: Some(RawGeometry {
                d_s: Some(self.geometry.d_s),
                d: Some(self.geometry.d),
            }),
            quadrature: Some(RawQuadrature {
                rel_tol: Some(self.quadrature.rel_tol),
                abs_tol: Some(self.quadrature.abs_tol),
                max_subdivisions: Some(self.quadrature.max_subdivisions),
                local_cutoff: Some(cutoff(&self.quadrature.local_cutoff)),
                nonlocal_cutoff: Some(cutoff(&self.quadrature.nonlocal_cutoff)),
            }),
            dispersion: Some(RawDispersion {
                omega: Some(grid(&self.dispersion.omega)),
                panels: Some(
                    self.dispersion
                        .panels
                        .iter()
                        .map(|p| RawPanel {
                            name: p.name.clone(),
                            q: grid(&p.q),
                        })
                        .collect(),
                ),
            }),
            integrand_map: Some(RawIntegrandMap {
                omega_fixed: Some(self.integrand_map.omega_fixed),
                omega_fixed_over_omega0: None,
                omega_prime: Some(grid(&self.integrand_map.omega_prime)),
                q: Some(grid(&self.integrand_map.q)),
            }),
            emission: Some(RawEmission {
                omega: self.emission.omega.as_ref().map(grid),
                n_points: Some(self.emission.n_points),
                carriers: Some(self.emission.carriers.clone()),
                carriers_over_omega0: None,
                extra_local_cutoffs: Some(self.emission.extra_local_cutoffs.clone()),
                extra_local_cutoffs_over_omega0: None,
            }),
            decay: Some(RawDecay {
                omega_a: Some(self.decay.omega_a.clone()),
                omega_a_over_omega0: None,
            }),
            cutoff_study: Some(RawCutoffStudy {
                omega: Some(self.cutoff_study.omega),
                omega_over_omega0: None,
                cutoffs: Some(self.cutoff_study.cutoffs.clone()),
                cutoffs_over_omega0: None,
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSelection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<RawMaterial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<RawPulse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<RawGeometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<RawQuadrature>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<RawDispersion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrand_map: Option<RawIntegrandMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission: Option<RawEmission>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<RawDecay>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_study: Option<RawCutoffStudy>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMaterial {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_inf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_p_over_omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_over_omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPulse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_omega: Option<f64>,
    #[serde(rename = "Omega", default, skip_serializing_if = "Option::is_none")]
    pub omega_carrier: Option<f64>,
    #[serde(
        rename = "Omega_over_omega0",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub omega_carrier_over_omega0: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGeometry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    #[default]
    HardCutoff,
    AdaptiveConverged,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCutoff {
    pub kind: CutoffKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_c_over_omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_window_over_omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_change: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawQuadrature {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_subdivisions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_cutoff: Option<RawCutoff>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlocal_cutoff: Option<RawCutoff>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_over_omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_over_omega0: Option<f64>,
    pub n: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPanel {
    pub name: String,
    pub q: RawGrid,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDispersion {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<RawGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panels: Option<Vec<RawPanel>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawIntegrandMap {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_fixed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_fixed_over_omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_prime: Option<RawGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<RawGrid>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEmission {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<RawGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carriers: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carriers_over_omega0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra_local_cutoffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra_local_cutoffs_over_omega0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDecay {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_a_over_omega0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCutoffStudy {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_over_omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoffs_over_omega0: Option<Vec<f64>>,
}

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

/// Picks the SI or the ω₀-relative form of one key.
fn either(
    key: &str,
    si: Option<f64>,
    reduced: Option<f64>,
    scale: f64,
) -> Result<Option<f64>, ConfigError> {
    match (si, reduced) {
        (Some(_), Some(_)) => Err(invalid(
            key,
            format!("give either `{key}` or `{key}_over_omega0`, not both"),
        )),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(v)) => Ok(Some(v * scale)),
        (None, None) => Ok(None),
    }
}

fn either_list(
    key: &str,
    si: Option<Vec<f64>>,
    reduced: Option<Vec<f64>>,
    scale: f64,
) -> Result<Option<Vec<f64>>, ConfigError> {
    match (si, reduced) {
        (Some(_), Some(_)) => Err(invalid(
            key,
            format!("give either `{key}` or `{key}_over_omega0`, not both"),
        )),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(v)) => Ok(Some(v.into_iter().map(|x| x * scale).collect())),
        (None, None) => Ok(None),
    }
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be finite and > 0, got {v}")))
    }
}

fn increasing(key: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.iter().any(|&x| !(x > 0.0 && x.is_finite())) || v.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid(key, "must be positive and strictly increasing"));
    }
    Ok(())
}

fn grid(key: &str, raw: &RawGrid, scale: f64) -> Result<Grid, ConfigError> {
    let min = either(&format!("{key}.min"), raw.min, raw.min_over_omega0, scale)?
        .ok_or_else(|| invalid(format!("{key}.min"), "required"))?;
    let max = either(&format!("{key}.max"), raw.max, raw.max_over_omega0, scale)?
        .ok_or_else(|| invalid(format!("{key}.max"), "required"))?;
    positive(&format!("{key}.min"), min)?;
    if raw.n == 0 {
        return Err(invalid(format!("{key}.n"), "must be >= 1"));
    }
    if !(max > min) && raw.n > 1 {
        return Err(invalid(format!("{key}.max"), "must exceed min"));
    }
    Ok(Grid {
        min,
        max,
        n: raw.n,
        spacing: raw.spacing,
    })
}

fn cutoff(
    key: &str,
    raw: &RawCutoff,
    q_scale: f64,
    geometry: &SlabGeometry,
) -> Result<CutoffPolicy, ConfigError> {
    match raw.kind {
        CutoffKind::HardCutoff => {
            if raw.first_window.is_some()
                || raw.first_window_over_omega0.is_some()
                || raw.window_factor.is_some()
                || raw.rel_change.is_some()
            {
                return Err(invalid(
                    key,
                    "window settings only apply to adaptive_converged",
                ));
            }
            let q_c = either(&format!("{key}.q_c"), raw.q_c, raw.q_c_over_omega0, q_scale)?
                .ok_or_else(|| invalid(format!("{key}.q_c"), "required for hard_cutoff"))?;
            Ok(CutoffPolicy::HardCutoff {
                q_c: positive(&format!("{key}.q_c"), q_c)?,
            })
        }
        CutoffKind::AdaptiveConverged => {
            if raw.q_c.is_some() || raw.q_c_over_omega0.is_some() {
                return Err(invalid(key, "q_c only applies to hard_cutoff"));
            }
            let first_window = either(
                &format!("{key}.first_window"),
                raw.first_window,
                raw.first_window_over_omega0,
                q_scale,
            )?
            .unwrap_or_else(|| default_first_window(geometry));
            let window_factor = raw.window_factor.unwrap_or(2.0);
            if !(window_factor > 1.0 && window_factor.is_finite()) {
                return Err(invalid(format!("{key}.window_factor"), "must be > 1"));
            }
            Ok(CutoffPolicy::AdaptiveConverged {
                first_window: positive(&format!("{key}.first_window"), first_window)?,
                window_factor,
                rel_change: positive(&format!("{key}.rel_change"), raw.rel_change.unwrap_or(1e-4))?,
            })
        }
    }
}

/// Default hard cutoff for the local model, q_c = 630 ω₀/c.
pub const REFERENCE_CUTOFF_OVER_OMEGA0: f64 = 630.0;

impl RawConfig {
    pub fn resolve(self) -> Result<ScenarioConfig, ConfigError> {
        let m = self
            .material
            .ok_or_else(|| invalid("material", "block required"))?;
        let omega_p_given = m.omega_p.is_some() || m.omega_p_over_omega0.is_some();
        if !omega_p_given {
            return Err(invalid("material.omega_p", "omega_p required"));
        }
        let omega_0 = m
            .omega_0
            .ok_or_else(|| invalid("material.omega_0", "omega_0 required"))?;
        let omega_0 = positive("material.omega_0", omega_0)?;
        let omega_p = either(
            "material.omega_p",
            m.omega_p,
            m.omega_p_over_omega0,
            omega_0,
        )?
        .unwrap_or_default();
        let gamma = either("material.gamma", m.gamma, m.gamma_over_omega0, omega_0)?
            .ok_or_else(|| invalid("material.gamma", "gamma required"))?;
        let eps_inf = m
            .eps_inf
            .ok_or_else(|| invalid("material.eps_inf", "eps_inf required"))?;
        let material =
            LorentzMaterial::new(eps_inf, omega_p, omega_0, gamma, m.beta.unwrap_or(SIC_BETA))
                .map_err(|e| invalid("material", e.to_string()))?;
        let units = material.units();
        let q_scale = units.q_scale();

        let p = self.pulse.unwrap_or_default();
        let carrier = either(
            "pulse.Omega",
            p.omega_carrier,
            p.omega_carrier_over_omega0,
            omega_0,
        )?
        .unwrap_or(2.2 * omega_0);
        let pulse = ModulationPulse::new(
            p.delta_omega.unwrap_or(0.01),
            carrier,
            p.width.unwrap_or(80e-15),
        )
        .map_err(|e| invalid("pulse", e.to_string()))?;

        let g = self.geometry.unwrap_or_default();
        let geometry = SlabGeometry::new(
            g.d_s.unwrap_or(SlabGeometry::SIC_DEFAULT.d_s),
            g.d.unwrap_or(SlabGeometry::SIC_DEFAULT.d),
        )
        .map_err(|e| invalid("geometry", e.to_string()))?;

        let q = self.quadrature.unwrap_or_default();
        let local_cutoff = match &q.local_cutoff {
            Some(raw) => cutoff("quadrature.local_cutoff", raw, q_scale, &geometry)?,
            None => CutoffPolicy::HardCutoff {
                q_c: REFERENCE_CUTOFF_OVER_OMEGA0 * q_scale,
            },
        };
        let nonlocal_cutoff = match &q.nonlocal_cutoff {
            Some(raw) => cutoff("quadrature.nonlocal_cutoff", raw, q_scale, &geometry)?,
            None => CutoffPolicy::AdaptiveConverged {
                first_window: default_first_window(&geometry),
                window_factor: 2.0,
                rel_change: 1e-4,
            },
        };
        let quadrature = QuadratureSettings {
            rel_tol: positive("quadrature.rel_tol", q.rel_tol.unwrap_or(1e-4))?,
            abs_tol: q.abs_tol.unwrap_or(0.0),
            max_subdivisions: q.max_subdivisions.unwrap_or(400),
            local_cutoff,
            nonlocal_cutoff,
        };
        if !(quadrature.abs_tol >= 0.0) {
            return Err(invalid("quadrature.abs_tol", "must be >= 0"));
        }
        if quadrature.max_subdivisions == 0 {
            return Err(invalid("quadrature.max_subdivisions", "must be >= 1"));
        }

        let d = self.dispersion.unwrap_or_default();
        let dispersion = DispersionSettings {
            omega: match &d.omega {
                Some(g) => grid("dispersion.omega", g, omega_0)?,
                None => Grid {
                    min: 0.8 * omega_0,
                    max: 1.4 * omega_0,
                    n: 300,
                    spacing: Spacing::Linear,
                },
            },
            panels: match d.panels {
                Some(panels) => panels
                    .iter()
                    .map(|p| {
                        Ok(QPanel {
                            name: p.name.clone(),
                            q: grid(&format!("dispersion.panels.{}", p.name), &p.q, q_scale)?,
                        })
                    })
                    .collect::<Result<_, ConfigError>>()?,
                None => default_panels(q_scale),
            },
        };
        if dispersion.panels.is_empty() {
            return Err(invalid("dispersion.panels", "at least one panel required"));
        }

        let im = self.integrand_map.unwrap_or_default();
        let integrand_map = IntegrandMapSettings {
            omega_fixed: positive(
                "integrand_map.omega_fixed",
                either(
                    "integrand_map.omega_fixed",
                    im.omega_fixed,
                    im.omega_fixed_over_omega0,
                    omega_0,
                )?
                .unwrap_or(1.2 * omega_0),
            )?,
            omega_prime: match &im.omega_prime {
                Some(g) => grid("integrand_map.omega_prime", g, omega_0)?,
                None => Grid {
                    min: 0.7 * omega_0,
                    max: 1.5 * omega_0,
                    n: 200,
                    spacing: Spacing::Linear,
                },
            },
            q: match &im.q {
                Some(g) => grid("integrand_map.q", g, q_scale)?,
                None => Grid {
                    min: 1.0 * q_scale,
                    max: 1000.0 * q_scale,
                    n: 200,
                    spacing: Spacing::Linear,
                },
            },
        };

        let e = self.emission.unwrap_or_default();
        let carriers = either_list(
            "emission.carriers",
            e.carriers,
            e.carriers_over_omega0,
            omega_0,
        )?
        .unwrap_or_default();
        if !carriers.is_empty() {
            increasing("emission.carriers", &carriers)?;
        }
        let extra_local_cutoffs = either_list(
            "emission.extra_local_cutoffs",
            e.extra_local_cutoffs,
            e.extra_local_cutoffs_over_omega0,
            q_scale,
        )?
        .unwrap_or_default();
        if !extra_local_cutoffs.is_empty() {
            increasing("emission.extra_local_cutoffs", &extra_local_cutoffs)?;
        }
        let emission = EmissionSettings {
            omega: e
                .omega
                .as_ref()
                .map(|g| grid("emission.omega", g, omega_0))
                .transpose()?,
            n_points: e.n_points.unwrap_or(400),
            carriers,
            extra_local_cutoffs,
        };
        if emission.n_points < 3 {
            return Err(invalid("emission.n_points", "must be >= 3"));
        }

        let dc = self.decay.unwrap_or_default();
        let decay = DecaySettings {
            omega_a: either_list("decay.omega_a", dc.omega_a, dc.omega_a_over_omega0, omega_0)?
                .unwrap_or_else(|| vec![omega_0, 1.1 * omega_0, 1.2 * omega_0]),
        };
        increasing("decay.omega_a", &decay.omega_a)?;

        let cs = self.cutoff_study.unwrap_or_default();
        let cutoff_study = CutoffStudySettings {
            omega: positive(
                "cutoff_study.omega",
                either(
                    "cutoff_study.omega",
                    cs.omega,
                    cs.omega_over_omega0,
                    omega_0,
                )?
                .unwrap_or(1.2 * omega_0),
            )?,
            cutoffs: either_list(
                "cutoff_study.cutoffs",
                cs.cutoffs,
                cs.cutoffs_over_omega0,
                q_scale,
            )?
            .unwrap_or_else(|| {
                (0..6)
                    .map(|k| REFERENCE_CUTOFF_OVER_OMEGA0 * q_scale * 2f64.powi(k))
                    .collect()
            }),
        };
        increasing("cutoff_study.cutoffs", &cutoff_study.cutoffs)?;

        Ok(ScenarioConfig {
            scenario: self.scenario,
            model: self.model.unwrap_or(ModelSelection::Both),
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            material,
            pulse,
            geometry,
            quadrature,
            dispersion,
            integrand_map,
            emission,
            decay,
            cutoff_study,
        })
    }
}

fn default_panels(q_scale: f64) -> Vec<QPanel> {
    vec![
        QPanel {
            name: "small-q".into(),
            q: Grid {
                min: 0.5 * q_scale,
                max: 100.0 * q_scale,
                n: 300,
                spacing: Spacing::Linear,
            },
        },
        QPanel {
            name: "large-q".into(),
            q: Grid {
                min: 10.0 * q_scale,
                max: 3.0e5 * q_scale,
                n: 300,
                spacing: Spacing::Log,
            },
        },
    ]
}

/// Sidecar written next to every output file. It embeds the full config so
/// the run can be repeated from the sidecar alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelTag>,
    pub summary: String,
    pub units: std::collections::BTreeMap<String, String>,
    pub config: RawConfig,
}

/// Parse a config (or an output sidecar) from JSON text.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let raw: RawConfig = if value.get("config").is_some() && value.get("file").is_some() {
        serde_json::from_value::<Sidecar>(value)?.config
    } else {
        serde_json::from_value(value)?
    };
    raw.resolve()
}

pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

pub const PRESET_NAMES: [&str; 5] = [
    "sic-fig2",
    "sic-fig3",
    "sic-fig4a",
    "sic-fig4b",
    "sic-fig4c",
];

pub fn preset_json(name: &str) -> Result<&'static str, ConfigError> {
    Ok(match name {
        "sic-fig2" => include_str!("../../presets/sic-fig2.json"),
        "sic-fig3" => include_str!("../../presets/sic-fig3.json"),
        "sic-fig4a" => include_str!("../../presets/sic-fig4a.json"),
        "sic-fig4b" => include_str!("../../presets/sic-fig4b.json"),
        "sic-fig4c" => include_str!("../../presets/sic-fig4c.json"),
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    })
}

pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_config_str(preset_json(name)?)
}
