//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any failed.

use std::process::ExitCode;

use dce_core::emission::{
    decay_rate_factor, emission_spectrum, pair_emission_spectral_rate, q_integral, EmissionConfig,
    ModelTag, SpectrumResult,
};
use dce_core::material::{LorentzMaterial, ModulationPulse};
use dce_core::quadrature::{CutoffPolicy, QuadratureSpec};
use dce_core::scenario::{emission_config, emission_grid, preset, ScenarioConfig};
use dce_core::slab::{reflection_slab, surface_mode_closed_form, surface_mode_freq, SlabGeometry};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

const REL_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sic(model: ModelTag) -> LorentzMaterial {
    match model {
        ModelTag::Local => LorentzMaterial::SIC_LOCAL,
        ModelTag::Nonlocal => LorentzMaterial::SIC_NONLOCAL,
    }
}

fn q_unit() -> f64 {
    LorentzMaterial::SIC_LOCAL.units().q_scale()
}

fn w0() -> f64 {
    LorentzMaterial::SIC_LOCAL.omega_0
}

fn kernel_config(model: ModelTag, policy: CutoffPolicy) -> EmissionConfig {
    EmissionConfig {
        material: sic(model),
        pulse: ModulationPulse::new(0.01, 2.2 * w0(), 80e-15).unwrap(),
        geometry: SlabGeometry::SIC_DEFAULT,
        quadrature: QuadratureSpec::default()
            .with_rel_tol(REL_TOL)
            .with_policy(policy),
        model,
    }
}

fn adaptive() -> CutoffPolicy {
    CutoffPolicy::AdaptiveConverged {
        first_window: dce_core::emission::default_first_window(&SlabGeometry::SIC_DEFAULT),
        window_factor: 2.0,
        rel_change: 1e-4,
    }
}

fn static_permittivity() -> Outcome {
    let eps = LorentzMaterial::SIC_LOCAL
        .permittivity_bg(0.0, 0.0)
        .unwrap();
    outcome(
        (eps.re - 10.021).abs() <= 1e-3 && eps.im == 0.0,
        format!("eps_bg(0,0) = {:.6}", eps.re),
    )
}

fn local_asymptote() -> Outcome {
    let m = LorentzMaterial::SIC_LOCAL;
    let freqs: Vec<f64> = (0..=40)
        .map(|k| 100.0 * 100f64.powf(k as f64 / 40.0) * q_unit())
        .map(|q| surface_mode_freq(&m, q).unwrap() / m.omega_0)
        .collect();
    let lo = freqs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = freqs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pass = freqs.iter().all(|f| (f - 1.1964).abs() <= 1e-3) && hi / lo - 1.0 < 1e-3;
    outcome(pass, format!("omega_sp/omega_0 in [{lo:.6}, {hi:.6}]"))
}

fn nonlocal_bend() -> Outcome {
    let m = LorentzMaterial::SIC_NONLOCAL;
    let qs: Vec<f64> = (0..60)
        .map(|k| (20.0 + 3.5 * k as f64) * q_unit())
        .collect();
    let mut worst: f64 = 0.0;
    let mut prev = f64::INFINITY;
    let mut decreasing = true;
    for &q in &qs {
        let (Some(f), Some(c)) = (surface_mode_freq(&m, q), surface_mode_closed_form(&m, q)) else {
            return outcome(
                false,
                format!("no mode at qc/omega_0 = {:.1}", q / q_unit()),
            );
        };
        worst = worst.max((f - c).abs() / c);
        decreasing &= f < prev;
        prev = f;
    }
    outcome(
        decreasing && worst < 1e-9,
        format!(
            "strictly decreasing = {decreasing}, max rel. deviation from closed form {worst:.2e}"
        ),
    )
}

fn local_divergence() -> Outcome {
    let (w, wp) = (1.2 * w0(), w0());
    let cuts = [1e4, 2e4, 4e4, 8e4];
    let values: Vec<f64> = cuts
        .iter()
        .map(|c| {
            let cfg = kernel_config(
                ModelTag::Local,
                CutoffPolicy::HardCutoff { q_c: c * q_unit() },
            );
            q_integral(&cfg, w, wp).unwrap().value
        })
        .collect();
    let ratios: Vec<f64> = values.windows(2).map(|v| v[1] / v[0]).collect();
    let ratio_ok = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    let cfg = kernel_config(ModelTag::Local, adaptive());
    let flagged = (0..=8).all(|k| {
        let w = (0.9 + 0.05 * k as f64) * w0();
        let r = q_integral(&cfg, w, wp).unwrap();
        r.diverged && !r.converged
    });
    outcome(
        ratio_ok && flagged,
        format!(
            "doubling ratios {:?}, adaptive divergence flagged on [0.9, 1.3] omega_0: {flagged}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn nonlocal_convergence() -> Outcome {
    let m = sic(ModelTag::Nonlocal);
    let limit = 50.0 * m.omega_0 / m.beta;
    let cfg = kernel_config(ModelTag::Nonlocal, adaptive());
    let mut worst_change: f64 = 0.0;
    let mut worst_limit: f64 = 0.0;
    let mut all_converged = true;
    for k in 0..=8 {
        let w = (0.9 + 0.05 * k as f64) * w0();
        let r = q_integral(&cfg, w, w0()).unwrap();
        all_converged &= r.converged && !r.diverged;
        worst_limit = worst_limit.max(r.effective_upper_limit);
        let doubled = cfg.with_cutoff(2.0 * r.effective_upper_limit);
        let d = q_integral(&doubled, w, w0()).unwrap();
        worst_change = worst_change.max((d.value - r.value).abs() / r.value.abs());
    }
    outcome(
        all_converged && worst_limit <= limit && worst_change < 1e-3,
        format!(
            "converged = {all_converged}, effective limit {:.2} omega_0/beta, doubling change {worst_change:.2e}",
            worst_limit / (m.omega_0 / m.beta)
        ),
    )
}

struct Spectra {
    omega_sp: f64,
    /// (carrier / omega_0, local, nonlocal)
    by_carrier: Vec<(f64, SpectrumResult, SpectrumResult)>,
    local_wide_cutoff: SpectrumResult,
}

fn spectra() -> Spectra {
    let mut cfg: ScenarioConfig = preset("sic-fig4b").unwrap();
    cfg.quadrature.rel_tol = REL_TOL;
    let grid = emission_grid(&cfg);
    let run = |model, carrier: f64| {
        emission_spectrum(&emission_config(&cfg, model, carrier * w0()), &grid).unwrap()
    };
    let by_carrier = [2.01, 2.2, 2.4]
        .into_iter()
        .map(|c| (c, run(ModelTag::Local, c), run(ModelTag::Nonlocal, c)))
        .collect();
    let wide =
        emission_config(&cfg, ModelTag::Local, 2.2 * w0()).with_cutoff(20.0 * 630.0 * q_unit());
    Spectra {
        omega_sp: surface_mode_closed_form(&cfg.material.with_beta(0.0), 0.0).unwrap() / w0(),
        by_carrier,
        local_wide_cutoff: emission_spectrum(&wide, &grid).unwrap(),
    }
}

/// Largest local maximum within `window` (relative) of `target` ω/ω₀.
fn peak(s: &SpectrumResult, target: f64, window: f64) -> Option<(usize, f64)> {
    s.peak_near(target * w0(), window)
}

fn peak_structure(sp: &Spectra) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (carrier, local, nonlocal) in &sp.by_carrier {
        for (name, s) in [("local", local), ("nonlocal", nonlocal)] {
            let maxima: Vec<String> = s
                .local_maxima()
                .iter()
                .map(|&i| format!("{:.4}", s.omega_grid[i] / w0()))
                .collect();
            let low = peak(s, 1.0, 0.05);
            let high = peak(s, sp.omega_sp, 0.05);
            let ok = if (*carrier - 2.2).abs() < 1e-9 {
                peak(s, 1.0, 0.02).is_some() && peak(s, sp.omega_sp, 0.02).is_some()
            } else {
                match (low, high) {
                    (Some(l), Some(h)) if *carrier < 2.2 => l.1 > h.1,
                    (Some(l), Some(h)) => h.1 > l.1,
                    (Some(_), None) => *carrier < 2.2,
                    (None, Some(_)) => *carrier > 2.2,
                    (None, None) => false,
                }
            };
            pass &= ok;
            notes.push(format!(
                "Omega={carrier} {name}: maxima [{}] {}",
                maxima.join(", "),
                if ok { "ok" } else { "MISS" }
            ));
        }
    }
    outcome(pass, notes.join("; "))
}

fn cutoff_sensitivity(sp: &Spectra) -> Outcome {
    let reference = &sp.by_carrier[1].1;
    let i = reference.argmax();
    let ratio = sp.local_wide_cutoff.rate[i] / reference.rate[i];
    outcome(
        ratio > 10.0,
        format!(
            "rate(20 q_c)/rate(q_c) = {ratio:.1} at omega/omega_0 = {:.4}",
            reference.omega_grid[i] / w0()
        ),
    )
}

fn broadening(sp: &Spectra) -> Outcome {
    let (_, local, nonlocal) = &sp.by_carrier[1];
    let width = |s: &SpectrumResult| peak(s, sp.omega_sp, 0.05).and_then(|(i, _)| s.fwhm(i));
    match (width(local), width(nonlocal)) {
        (Some(l), Some(n)) => outcome(
            n >= 1.5 * l,
            format!(
                "FWHM local {:.4e}, nonlocal {:.4e} omega_0, ratio {:.2}",
                l / w0(),
                n / w0(),
                n / l
            ),
        ),
        (l, n) => outcome(
            false,
            format!("FWHM undefined: local {l:?}, nonlocal {n:?}"),
        ),
    }
}

fn depth_scaling() -> Outcome {
    let mut worst: f64 = 0.0;
    for (model, policy) in [
        (
            ModelTag::Local,
            CutoffPolicy::HardCutoff {
                q_c: 630.0 * q_unit(),
            },
        ),
        (ModelTag::Nonlocal, adaptive()),
    ] {
        let cfg = kernel_config(model, policy);
        let a = pair_emission_spectral_rate(&cfg.with_depth(1e-3), 1.2 * w0()).unwrap();
        let b = pair_emission_spectral_rate(&cfg.with_depth(2e-3), 1.2 * w0()).unwrap();
        worst = worst.max((b.per_area / (4.0 * a.per_area) - 1.0).abs());
    }
    outcome(worst < 1e-6, format!("max |ratio/4 - 1| = {worst:.2e}"))
}

fn decay_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (model, policy) in [
        (
            ModelTag::Local,
            CutoffPolicy::HardCutoff {
                q_c: 630.0 * q_unit(),
            },
        ),
        (ModelTag::Nonlocal, adaptive()),
    ] {
        let cfg = kernel_config(model, policy);
        for w in [1.0, 1.1, 1.2] {
            let d = decay_rate_factor(&cfg, w * w0()).unwrap();
            let r = pair_emission_spectral_rate(&cfg, w * w0()).unwrap();
            worst = worst.max((d.value - r.reduced).abs() / r.reduced.abs());
        }
    }
    outcome(worst < 1e-12, format!("max rel. difference {worst:.2e}"))
}

fn pulse_fft() -> Outcome {
    let pulse = ModulationPulse::new(0.01, 2.2 * w0(), 80e-15).unwrap();
    let n = 1 << 15;
    let dt = 0.05 / w0();
    let t0 = -(n as f64) * dt / 2.0;
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|k| Complex::new(pulse.pulse_time(t0 + k as f64 * dt), 0.0))
        .collect();
    // inverse transform carries the e^{+iωt} sign
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let d_omega = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let centre = (pulse.carrier / d_omega).round() as usize;
    let mut worst: f64 = 0.0;
    for (k, &b) in buf.iter().enumerate().skip(centre - 50).take(100) {
        let omega = k as f64 * d_omega;
        let numeric = (b * Complex::from_polar(dt, omega * t0)).re;
        let exact = pulse.pulse_spectrum(omega);
        worst = worst.max((numeric - exact).abs() / exact.abs());
    }
    outcome(
        worst < 1e-6,
        format!("max rel. error over 100 frequencies {worst:.2e}"),
    )
}

fn passivity() -> Outcome {
    let g = SlabGeometry::SIC_DEFAULT;
    let mut worst = f64::INFINITY;
    for model in [ModelTag::Local, ModelTag::Nonlocal] {
        let m = sic(model);
        for i in 0..200 {
            let w = 1e-2 * 1e4f64.powf(i as f64 / 199.0) * w0();
            for j in 0..200 {
                let q = 1e-2 * 1e8f64.powf(j as f64 / 199.0) * q_unit();
                worst = worst.min(reflection_slab(&m, &g, w, q).unwrap().im);
            }
        }
    }
    outcome(worst >= -1e-12, format!("min Im R_p = {worst:.3e}"))
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "static permittivity", static_permittivity()),
        (2, "local flat asymptote", local_asymptote()),
        (3, "nonlocal downward bend", nonlocal_bend()),
        (4, "local divergence", local_divergence()),
        (5, "nonlocal convergence", nonlocal_convergence()),
    ];
    let sp = spectra();
    results.push((6, "spectrum peak structure", peak_structure(&sp)));
    results.push((7, "local cutoff sensitivity", cutoff_sensitivity(&sp)));
    results.push((8, "nonlocal broadening", broadening(&sp)));
    results.push((9, "depth-squared scaling", depth_scaling()));
    results.push((10, "decay/emission kernel identity", decay_identity()));
    results.push((11, "pulse spectrum vs FFT", pulse_fft()));
    results.push((12, "passivity sweep", passivity()));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (id, name, o) in &results {
        println!(
            "criterion {id:>2} {} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
