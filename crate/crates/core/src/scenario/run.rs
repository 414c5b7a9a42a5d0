//! Scenario execution and output files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::config::{ConfigError, ScenarioConfig, ScenarioKind, Sidecar};
use crate::emission::{
    self, decay_rate_factor, emission_spectrum, integrand_map, DecayFactor, EmissionConfig,
    EmissionError, ModelTag, SpectrumResult,
};
use crate::quadrature::CutoffPolicy;
use crate::slab::{dispersion_map, DispersionMap, SlabError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numeric failure: {0}")]
    Numeric(#[from] EmissionError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<SlabError> for ScenarioError {
    fn from(e: SlabError) -> Self {
        ScenarioError::Numeric(e.into())
    }
}

impl ScenarioError {
    /// Process exit status: 1 config, 2 numeric, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_) => 1,
            ScenarioError::Numeric(_) => 2,
            ScenarioError::Io { .. } => 3,
        }
    }
}

/// One file written by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub model: Option<ModelTag>,
    pub summary: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub outputs: Vec<OutputRecord>,
}

impl RunReport {
    /// True when every output converged.
    pub fn all_converged(&self) -> bool {
        self.outputs
            .iter()
            .all(|o| !o.summary.contains("converged=false"))
    }
}

struct Writer<'a> {
    cfg: &'a ScenarioConfig,
    dir: PathBuf,
    report: RunReport,
}

impl<'a> Writer<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self, ScenarioError> {
        let dir = cfg.output_dir.clone();
        fs::create_dir_all(&dir).map_err(|source| ScenarioError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self {
            cfg,
            dir,
            report: RunReport::default(),
        })
    }

    fn emit(
        &mut self,
        name: &str,
        model: Option<ModelTag>,
        body: Vec<u8>,
        units: &[(&str, &str)],
        summary: String,
    ) -> Result<(), ScenarioError> {
        let path = self.dir.join(name);
        write(&path, &body)?;
        let sidecar = Sidecar {
            file: name.to_string(),
            model,
            summary: summary.clone(),
            units: units
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect::<BTreeMap<_, _>>(),
            config: self.cfg.to_raw(),
        };
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        write(&self.dir.join(format!("{name}.json")), json.as_bytes())?;
        log::info!("wrote {}", path.display());
        self.report.outputs.push(OutputRecord {
            path,
            model,
            summary: format!("{name}: {summary}"),
        });
        Ok(())
    }
}

fn write(path: &Path, body: &[u8]) -> Result<(), ScenarioError> {
    fs::write(path, body).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_buffer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory csv flush")
}

fn converged_str(all: bool) -> &'static str {
    if all {
        "converged=true"
    } else {
        "converged=false"
    }
}

/// Emission inputs for one model and carrier.
pub fn emission_config(cfg: &ScenarioConfig, model: ModelTag, carrier: f64) -> EmissionConfig {
    EmissionConfig {
        material: cfg.material_for(model),
        pulse: crate::material::ModulationPulse {
            carrier,
            ..cfg.pulse
        },
        geometry: cfg.geometry,
        quadrature: cfg.quadrature.spec_for(model),
        model,
    }
}

/// Frequency grid used by the emission scenario [rad/s].
pub fn emission_grid(cfg: &ScenarioConfig) -> Vec<f64> {
    match &cfg.emission.omega {
        Some(g) => g.points(),
        None => emission::default_frequency_grid(&cfg.material, cfg.emission.n_points),
    }
}

/// Run a scenario, writing its CSVs and sidecars to `cfg.output_dir`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport, ScenarioError> {
    let mut out = Writer::new(cfg)?;
    match cfg.scenario {
        ScenarioKind::Dispersion => run_dispersion(&mut out)?,
        ScenarioKind::IntegrandMap => run_integrand_map(&mut out)?,
        ScenarioKind::Emission => run_emission(&mut out)?,
        ScenarioKind::Decay => run_decay(&mut out)?,
        ScenarioKind::CutoffStudy => run_cutoff_study(&mut out)?,
    }
    Ok(out.report)
}

const MATRIX_UNITS: [(&str, &str); 2] = [("rows", "omega/omega_0"), ("columns", "q c/omega_0")];

fn run_dispersion(out: &mut Writer) -> Result<(), ScenarioError> {
    let cfg = out.cfg;
    let omega = cfg.dispersion.omega.points();
    let omega_0 = cfg.material.omega_0;
    for panel in &cfg.dispersion.panels {
        let q = panel.q.points();
        let mut maps: Vec<(ModelTag, DispersionMap)> = Vec::new();
        for model in cfg.model.models() {
            let map = dispersion_map(&cfg.material_for(model), &cfg.geometry, &omega, &q)?;
            let mut body = Vec::new();
            map.write_csv(&mut body, omega_0)?;
            let (i, j) = argmax(&map.values);
            let summary = format!(
                "max |R_p| = {:.4e} at omega/omega_0 = {:.4}, qc/omega_0 = {:.4e}",
                map.values[i][j],
                omega[i] / omega_0,
                q[j] / cfg.units().q_scale()
            );
            out.emit(
                &format!("dispersion_{}_{}.csv", model.as_str(), panel.name),
                Some(model),
                body,
                &[MATRIX_UNITS[0], MATRIX_UNITS[1], ("values", "|R_p|")],
                summary,
            )?;
            maps.push((model, map));
        }
        if maps.len() == 2 {
            let (local, nonlocal) = (maps[0].1.ridge(), maps[1].1.ridge());
            let mut w = csv_buffer();
            let _ = w.write_record([
                "q_over_omega0",
                "ridge_local_over_omega0",
                "ridge_nonlocal_over_omega0",
            ]);
            let mut max_shift: f64 = 0.0;
            for (j, &qj) in q.iter().enumerate() {
                max_shift = max_shift.max((local[j] - nonlocal[j]).abs() / omega_0);
                let _ = w.write_record(&[
                    format!("{:.10e}", qj / cfg.units().q_scale()),
                    format!("{:.10e}", local[j] / omega_0),
                    format!("{:.10e}", nonlocal[j] / omega_0),
                ]);
            }
            out.emit(
                &format!("dispersion_comparison_{}.csv", panel.name),
                None,
                finish(w),
                &[
                    ("q", "q c/omega_0"),
                    ("ridge", "omega/omega_0 of max |R_p| per column"),
                ],
                format!("largest local/nonlocal ridge separation {max_shift:.4} omega_0"),
            )?;
        }
    }
    Ok(())
}

fn argmax(values: &[Vec<f64>]) -> (usize, usize) {
    let mut best = (0, 0);
    let mut v = f64::NEG_INFINITY;
    for (i, row) in values.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if x > v {
                v = x;
                best = (i, j);
            }
        }
    }
    best
}

fn run_integrand_map(out: &mut Writer) -> Result<(), ScenarioError> {
    let cfg = out.cfg;
    let s = &cfg.integrand_map;
    let (wp, q) = (s.omega_prime.points(), s.q.points());
    let omega_0 = cfg.material.omega_0;
    let mut marginals = Vec::new();
    for model in cfg.model.models() {
        let ecfg = emission_config(cfg, model, cfg.pulse.carrier);
        let map = integrand_map(&ecfg, s.omega_fixed, &wp, &q)?;
        let mut body = Vec::new();
        map.write_csv(&mut body, omega_0)?;
        let (i, j) = map.argmax();
        let summary = format!(
            "max integrand {:.4e} at omega'/omega_0 = {:.4}, qc/omega_0 = {:.4e}",
            map.values[i][j],
            wp[i] / omega_0,
            q[j] / cfg.units().q_scale()
        );
        out.emit(
            &format!("integrand_map_{}.csv", model.as_str()),
            Some(model),
            body,
            &[
                ("rows", "omega'/omega_0"),
                ("columns", "q c/omega_0"),
                ("values", "reduced integrand"),
            ],
            summary,
        )?;
        marginals.push(
            map.values
                .iter()
                .map(|r| r.iter().sum::<f64>())
                .collect::<Vec<_>>(),
        );
    }
    if marginals.len() == 2 {
        let mut w = csv_buffer();
        let _ = w.write_record([
            "omega_prime_over_omega0",
            "row_sum_local",
            "row_sum_nonlocal",
        ]);
        for (i, &x) in wp.iter().enumerate() {
            let _ = w.write_record(&[
                format!("{:.10e}", x / omega_0),
                format!("{:.10e}", marginals[0][i]),
                format!("{:.10e}", marginals[1][i]),
            ]);
        }
        let ratio = marginals[1].iter().sum::<f64>() / marginals[0].iter().sum::<f64>();
        out.emit(
            "integrand_map_comparison.csv",
            None,
            finish(w),
            &[("row_sum", "sum over the q grid of the reduced integrand")],
            format!("nonlocal/local total over map = {ratio:.4e}"),
        )?;
    }
    Ok(())
}

fn spectrum_summary(s: &SpectrumResult) -> String {
    let i = s.argmax();
    let omega_0 = s.config.material.omega_0;
    let peaks: Vec<String> = s
        .local_maxima()
        .iter()
        .map(|&k| format!("{:.4}", s.omega_grid[k] / omega_0))
        .collect();
    format!(
        "peak at omega/omega_0 = {:.4}, max rate = {:.4e} 1/m^2, local maxima [{}], {}",
        s.omega_grid[i] / omega_0,
        s.rate[i],
        peaks.join(", "),
        converged_str(s.converged_flags.iter().all(|&c| c))
    )
}

const SPECTRUM_UNITS: [(&str, &str); 4] = [
    ("omega_over_omega0", "omega/omega_0"),
    ("rate", "(1/AT) dP/domega [1/m^2]"),
    ("error_estimate", "same as rate"),
    ("effective_q_max", "rad/m"),
];

fn run_emission(out: &mut Writer) -> Result<(), ScenarioError> {
    let cfg = out.cfg;
    let grid = emission_grid(cfg);
    let omega_0 = cfg.material.omega_0;
    let carriers = if cfg.emission.carriers.is_empty() {
        vec![cfg.pulse.carrier]
    } else {
        cfg.emission.carriers.clone()
    };
    for &carrier in &carriers {
        let tag = format!("Omega{:.2}", carrier / omega_0);
        let mut spectra: Vec<(ModelTag, SpectrumResult)> = Vec::new();
        for model in cfg.model.models() {
            let ecfg = emission_config(cfg, model, carrier);
            let s = emission_spectrum(&ecfg, &grid)?;
            let mut body = Vec::new();
            s.write_csv(&mut body).map_err(SlabError::from)?;
            out.emit(
                &format!("emission_{}_{tag}.csv", model.as_str()),
                Some(model),
                body,
                &SPECTRUM_UNITS,
                spectrum_summary(&s),
            )?;
            if model == ModelTag::Local {
                for &q_c in &cfg.emission.extra_local_cutoffs {
                    let s = emission_spectrum(&ecfg.with_cutoff(q_c), &grid)?;
                    let mut body = Vec::new();
                    s.write_csv(&mut body).map_err(SlabError::from)?;
                    out.emit(
                        &format!(
                            "emission_local_qc{:.0}_{tag}.csv",
                            q_c / cfg.units().q_scale()
                        ),
                        Some(model),
                        body,
                        &SPECTRUM_UNITS,
                        spectrum_summary(&s),
                    )?;
                }
            }
            spectra.push((model, s));
        }
        if spectra.len() == 2 {
            let (l, n) = (&spectra[0].1, &spectra[1].1);
            let mut w = csv_buffer();
            let _ = w.write_record([
                "omega_over_omega0",
                "rate_local",
                "rate_nonlocal",
                "nonlocal_over_local",
            ]);
            for ((&x, &rl), &rn) in grid.iter().zip(&l.rate).zip(&n.rate) {
                let ratio = if rl == 0.0 { 0.0 } else { rn / rl };
                let _ = w.write_record(&[
                    format!("{:.10e}", x / omega_0),
                    format!("{rl:.10e}"),
                    format!("{rn:.10e}"),
                    format!("{ratio:.6e}"),
                ]);
            }
            out.emit(
                &format!("emission_comparison_{tag}.csv"),
                None,
                finish(w),
                &[("rate_*", "(1/AT) dP/domega [1/m^2]")],
                format!(
                    "peaks local {:.4} / nonlocal {:.4} omega_0",
                    l.omega_grid[l.argmax()] / omega_0,
                    n.omega_grid[n.argmax()] / omega_0
                ),
            )?;
        }
    }
    Ok(())
}

fn run_decay(out: &mut Writer) -> Result<(), ScenarioError> {
    let cfg = out.cfg;
    let omega_0 = cfg.material.omega_0;
    let mut tables: Vec<Vec<DecayFactor>> = Vec::new();
    for model in cfg.model.models() {
        let ecfg = emission_config(cfg, model, cfg.pulse.carrier);
        let rows: Vec<DecayFactor> = cfg
            .decay
            .omega_a
            .iter()
            .map(|&w| decay_rate_factor(&ecfg, w))
            .collect::<Result<_, _>>()?;
        let mut w = csv_buffer();
        let _ = w.write_record([
            "omega_a_over_omega0",
            "gamma_over_gamma0",
            "error_estimate",
            "converged",
            "effective_q_max",
        ]);
        for r in &rows {
            let _ = w.write_record(&[
                format!("{:.10e}", r.omega_a / omega_0),
                format!("{:.10e}", r.value),
                format!("{:.4e}", r.diagnostics.error_estimate),
                r.diagnostics.converged.to_string(),
                format!("{:.6e}", r.diagnostics.effective_q_max),
            ]);
        }
        let best = rows
            .iter()
            .max_by(|a, b| a.value.total_cmp(&b.value))
            .expect("non-empty omega_a list");
        let summary = format!(
            "largest gamma/gamma0 = {:.4e} at omega_a/omega_0 = {:.4}, {}",
            best.value,
            best.omega_a / omega_0,
            converged_str(rows.iter().all(|r| r.diagnostics.converged))
        );
        out.emit(
            &format!("decay_{}.csv", model.as_str()),
            Some(model),
            finish(w),
            &[
                ("omega_a_over_omega0", "omega_a/omega_0"),
                ("gamma_over_gamma0", "dimensionless"),
                ("effective_q_max", "rad/m"),
            ],
            summary,
        )?;
        tables.push(rows);
    }
    if tables.len() == 2 {
        let mut w = csv_buffer();
        let _ = w.write_record(["omega_a_over_omega0", "local", "nonlocal"]);
        for (l, n) in tables[0].iter().zip(&tables[1]) {
            let _ = w.write_record(&[
                format!("{:.10e}", l.omega_a / omega_0),
                format!("{:.10e}", l.value),
                format!("{:.10e}", n.value),
            ]);
        }
        out.emit(
            "decay_comparison.csv",
            None,
            finish(w),
            &[("local, nonlocal", "gamma/gamma0")],
            format!("{} emitter frequencies", tables[0].len()),
        )?;
    }
    Ok(())
}

fn run_cutoff_study(out: &mut Writer) -> Result<(), ScenarioError> {
    let cfg = out.cfg;
    let omega_0 = cfg.material.omega_0;
    let s = &cfg.cutoff_study;
    let mut tables = Vec::new();
    for model in cfg.model.models() {
        let ecfg = emission_config(cfg, model, cfg.pulse.carrier);
        let rows = emission::cutoff_study(&ecfg, s.omega, &s.cutoffs)?;
        let mut body = Vec::new();
        emission::write_cutoff_csv(&rows, omega_0, &mut body).map_err(SlabError::from)?;
        let growth = rows
            .last()
            .zip(rows.get(rows.len().wrapping_sub(2)))
            .map(|(a, b)| a.rate.reduced / b.rate.reduced)
            .unwrap_or(f64::NAN);
        let summary = format!(
            "omega/omega_0 = {:.4}, final rate {:.4e} 1/m^2, last-step growth {:.3}, {}",
            s.omega / omega_0,
            rows.last().map_or(f64::NAN, |r| r.rate.normalized),
            growth,
            converged_str(rows.iter().all(|r| r.rate.diagnostics.converged))
        );
        out.emit(
            &format!("cutoff_study_{}.csv", model.as_str()),
            Some(model),
            body,
            &[
                ("q_c_over_omega0", "q_c c/omega_0"),
                ("q_c", "rad/m"),
                ("rate", "(1/AT) dP/domega [1/m^2]"),
            ],
            summary,
        )?;
        tables.push(rows);
    }
    if tables.len() == 2 {
        let mut w = csv_buffer();
        let _ = w.write_record(["q_c", "rate_local", "rate_nonlocal"]);
        for (l, n) in tables[0].iter().zip(&tables[1]) {
            let _ = w.write_record(&[
                format!("{:.6e}", l.q_c),
                format!("{:.10e}", l.rate.normalized),
                format!("{:.10e}", n.rate.normalized),
            ]);
        }
        out.emit(
            "cutoff_comparison.csv",
            None,
            finish(w),
            &[("q_c", "rad/m"), ("rate_*", "(1/AT) dP/domega [1/m^2]")],
            format!("{} cutoffs", tables[0].len()),
        )?;
    }
    Ok(())
}

/// Replace both models' cutoff policies with a hard cutoff at `q_c` [rad/m].
pub fn apply_hard_cutoff(cfg: &mut ScenarioConfig, q_c: f64) {
    cfg.quadrature.local_cutoff = CutoffPolicy::HardCutoff { q_c };
    cfg.quadrature.nonlocal_cutoff = CutoffPolicy::HardCutoff { q_c };
}
