//! Pair emission from a time-modulated polar-dielectric slab.
//!
//! Material response, quasistatic slab reflection, adaptive quadrature and
//! the pair-generation and decay-rate integrals, plus the scenario layer
//! that turns JSON configs into CSV tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod emission;
pub mod material;
pub mod quadrature;
pub mod scenario;
pub mod slab;
pub mod units;

pub use emission::{
    decay_rate_factor, emission_spectrum, pair_emission_spectral_rate, EmissionConfig,
    EmissionError, ModelTag, SpectrumResult,
};
pub use material::{LorentzMaterial, MaterialError, ModulationPulse};
pub use quadrature::{CutoffPolicy, IntegralResult, QuadratureSpec};
pub use scenario::{parse_config, preset, run_scenario, ScenarioConfig, ScenarioError};
pub use slab::{reflection_slab, surface_mode_freq, SlabError, SlabGeometry};
pub use units::ReducedUnits;
