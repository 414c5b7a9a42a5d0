use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dce_core::scenario::{
    apply_hard_cutoff, parse_config, preset, run_scenario, ConfigError, ModelSelection,
    ScenarioConfig, ScenarioError, ScenarioKind,
};

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Model {
    Local,
    Nonlocal,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Preset {
    #[value(name = "sic-fig2")]
    Fig2,
    #[value(name = "sic-fig3")]
    Fig3,
    #[value(name = "sic-fig4a")]
    Fig4a,
    #[value(name = "sic-fig4b")]
    Fig4b,
    #[value(name = "sic-fig4c")]
    Fig4c,
}

impl Preset {
    fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "sic-fig2",
            Preset::Fig3 => "sic-fig3",
            Preset::Fig4a => "sic-fig4a",
            Preset::Fig4b => "sic-fig4b",
            Preset::Fig4c => "sic-fig4c",
        }
    }
}

#[derive(clap::Args, Debug, Clone)]
struct Options {
    /// JSON scenario config (an output sidecar also works)
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled SiC scenario
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long, value_enum)]
    model: Option<Model>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative tolerance of the integrals
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Hard wavenumber cutoff in rad/m, applied to every model run
    #[arg(long)]
    q_cutoff: Option<f64>,
}

#[derive(Parser, Debug)]
#[command(
    name = "dce",
    version,
    about = "Pair emission from a modulated SiC slab"
)]
struct Args {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// |R_p| maps over (omega, q)
    Dispersion(Options),
    /// Pair-generation integrand over (omega', q) at fixed omega
    IntegrandMap(Options),
    /// Emission spectra (1/AT) dP/domega
    Emission(Options),
    /// Three-quantum decay-rate factors
    Decay(Options),
    /// Spectral rate versus hard q cutoff
    CutoffStudy(Options),
}

fn load(kind: ScenarioKind, opts: &Options) -> Result<ScenarioConfig, ScenarioError> {
    let mut cfg = match (&opts.config, opts.preset) {
        (Some(path), _) => parse_config(path)?,
        (None, Some(p)) => preset(p.name())?,
        (None, None) => preset(match kind {
            ScenarioKind::Dispersion => "sic-fig2",
            ScenarioKind::IntegrandMap => "sic-fig3",
            _ => "sic-fig4b",
        })?,
    };
    cfg.scenario = kind;
    if let Some(m) = opts.model {
        cfg.model = match m {
            Model::Local => ModelSelection::Local,
            Model::Nonlocal => ModelSelection::Nonlocal,
            Model::Both => ModelSelection::Both,
        };
    }
    if let Some(dir) = &opts.out {
        cfg.output_dir = dir.clone();
    }
    if let Some(tol) = opts.rel_tol {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(invalid(
                "--rel-tol",
                format!("must be in (0, 1), got {tol}"),
            ));
        }
        cfg.quadrature.rel_tol = tol;
    }
    if let Some(q_c) = opts.q_cutoff {
        if !(q_c > 0.0 && q_c.is_finite()) {
            return Err(invalid("--q-cutoff", format!("must be > 0, got {q_c}")));
        }
        apply_hard_cutoff(&mut cfg, q_c);
    }
    Ok(cfg)
}

fn invalid(key: &str, reason: String) -> ScenarioError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason,
    }
    .into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits 2 on bad usage, but 2 means numeric failure here
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let (kind, opts) = match &args.command {
        Sub::Dispersion(o) => (ScenarioKind::Dispersion, o),
        Sub::IntegrandMap(o) => (ScenarioKind::IntegrandMap, o),
        Sub::Emission(o) => (ScenarioKind::Emission, o),
        Sub::Decay(o) => (ScenarioKind::Decay, o),
        Sub::CutoffStudy(o) => (ScenarioKind::CutoffStudy, o),
    };
    let result = load(kind, opts).and_then(|cfg| run_scenario(&cfg));
    match result {
        Ok(report) => {
            for o in &report.outputs {
                println!("{}", o.summary);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
