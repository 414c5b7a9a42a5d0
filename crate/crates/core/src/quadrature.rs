//! Adaptive Gauss–Kronrod integration on finite and semi-infinite ranges.
//!
//! Finite ranges use globally adaptive bisection with the G10/K21 pair and
//! the QUADPACK error rescaling. Semi-infinite ranges are handled by a
//! [`CutoffPolicy`]: either a hard truncation or a sequence of geometrically
//! growing windows that stops once the tail is negligible, and reports
//! divergence when window contributions keep growing.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("cutoffs must be positive and strictly increasing")]
    UnorderedCutoffs,
}

/// How a semi-infinite integral is truncated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutoffPolicy {
    /// Integrate up to a fixed upper limit.
    HardCutoff { q_c: f64 },
    /// Integrate over windows `[a, a + first_window]`, then `[w, w·window_factor]`,
    /// until two consecutive windows each add less than `rel_change` of the total.
    AdaptiveConverged {
        first_window: f64,
        window_factor: f64,
        rel_change: f64,
    },
}

/// Consecutive growing windows that flag a divergent tail.
pub const DIVERGENCE_STREAK: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Panel budget for finite integrals; window budget for semi-infinite ones.
    pub max_subdivisions: usize,
    pub cutoff_policy: CutoffPolicy,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-4,
            abs_tol: 0.0,
            max_subdivisions: 500,
            cutoff_policy: CutoffPolicy::AdaptiveConverged {
                first_window: 1.0,
                window_factor: 2.0,
                rel_change: 1e-4,
            },
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self }
    }

    pub fn with_policy(self, cutoff_policy: CutoffPolicy) -> Self {
        Self {
            cutoff_policy,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.rel_tol > 0.0) {
            return Err(QuadratureError::InvalidSpec("rel_tol must be > 0".into()));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(QuadratureError::InvalidSpec("abs_tol must be >= 0".into()));
        }
        if self.max_subdivisions < 1 {
            return Err(QuadratureError::InvalidSpec(
                "max_subdivisions must be >= 1".into(),
            ));
        }
        match self.cutoff_policy {
            CutoffPolicy::HardCutoff { q_c } if !(q_c > 0.0 && q_c.is_finite()) => Err(
                QuadratureError::InvalidSpec("q_c must be finite and > 0".into()),
            ),
            CutoffPolicy::AdaptiveConverged {
                first_window,
                window_factor,
                rel_change,
            } => {
                if !(first_window > 0.0 && first_window.is_finite()) {
                    Err(QuadratureError::InvalidSpec(
                        "first_window must be finite and > 0".into(),
                    ))
                } else if !(window_factor > 1.0 && window_factor.is_finite()) {
                    Err(QuadratureError::InvalidSpec(
                        "window_factor must be > 1".into(),
                    ))
                } else if !(rel_change > 0.0) {
                    Err(QuadratureError::InvalidSpec(
                        "rel_change must be > 0".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Set when the windowed tail was found to grow without bound.
    pub diverged: bool,
    /// Upper limit where the integral was truncated.
    pub effective_upper_limit: f64,
}

impl IntegralResult {
    fn zero(at: f64) -> Self {
        Self {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
            diverged: false,
            effective_upper_limit: at,
        }
    }
}

// 21-point Kronrod abscissae; odd indices are the 10-point Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_482_210_298,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

const KRONROD_POINTS: usize = 21;

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl Panel {
    fn width(&self) -> f64 {
        self.b - self.a
    }
}

// Max-heap on error; ties broken by position so the refinement order is
// fully determined by the panel set.
impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        scaled = res_asc * (200.0 * scaled / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut res_g = 0.0;
    let mut res_k = f_center * WGK[10];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let value = res_k * half;
    let error = rescale_error((res_k - res_g) * half, res_abs * scale, res_asc * scale);
    Panel { a, b, value, error }
}

/// Integrate `f` over `[a, b]`.
pub fn integrate_finite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadratureError> {
    integrate_finite_with_breakpoints(f, a, b, &[], spec)
}

/// Integrate `f` over `[a, b]` with initial panel boundaries at `breakpoints`.
///
/// Breakpoints outside the open interval are ignored. Each initial panel
/// counts against `max_subdivisions`.
pub fn integrate_finite_with_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadratureError> {
    spec.validate()?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    Ok(adapt(
        &f,
        a,
        b,
        breakpoints,
        spec.rel_tol,
        spec.abs_tol,
        spec.max_subdivisions,
    ))
}

fn seed_points(a: f64, b: f64, breakpoints: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x.is_finite() && x > a && x < b)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut out = Vec::with_capacity(pts.len() + 2);
    out.push(a);
    for x in pts {
        // drop points that would create degenerate panels
        if x - out[out.len() - 1] > 1e-12 * (b - a) && b - x > 1e-12 * (b - a) {
            out.push(x);
        }
    }
    out.push(b);
    out
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> IntegralResult {
    let pts = seed_points(a, b, breakpoints);
    let mut heap = BinaryHeap::with_capacity(max_panels.max(pts.len()) + 1);
    let mut value = 0.0;
    let mut error = 0.0;
    for w in pts.windows(2) {
        let p = gauss_kronrod(f, w[0], w[1]);
        value += p.value;
        error += p.error;
        heap.push(p);
    }
    let mut evaluations = KRONROD_POINTS * heap.len();
    let mut converged = false;
    // panels too narrow to split further are parked here
    let mut frozen: Vec<Panel> = Vec::new();
    loop {
        if error <= abs_tol.max(rel_tol * value.abs()) {
            converged = true;
            break;
        }
        if heap.len() + frozen.len() >= max_panels {
            break;
        }
        let Some(worst) = heap.pop() else {
            break;
        };
        let mid = 0.5 * (worst.a + worst.b);
        if worst.width() <= 4.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE)
            || mid <= worst.a
            || mid >= worst.b
        {
            frozen.push(worst);
            continue;
        }
        let left = gauss_kronrod(f, worst.a, mid);
        let right = gauss_kronrod(f, mid, worst.b);
        evaluations += 2 * KRONROD_POINTS;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(frozen);
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let error_estimate: f64 = panels.iter().map(|p| p.error).sum();
    IntegralResult {
        value,
        error_estimate,
        evaluations,
        converged,
        diverged: false,
        effective_upper_limit: b,
    }
}

/// Integrate `f` over `[a, ∞)` under the spec's cutoff policy.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadratureError> {
    integrate_semi_infinite_with_breakpoints(f, a, &[], spec)
}

pub fn integrate_semi_infinite_with_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadratureError> {
    spec.validate()?;
    if !(a >= 0.0) || !a.is_finite() {
        return Err(QuadratureError::InvalidInterval {
            a,
            b: f64::INFINITY,
        });
    }
    match spec.cutoff_policy {
        CutoffPolicy::HardCutoff { q_c } => {
            if q_c <= a {
                return Ok(IntegralResult::zero(q_c));
            }
            Ok(adapt(
                &f,
                a,
                q_c,
                breakpoints,
                spec.rel_tol,
                spec.abs_tol,
                spec.max_subdivisions,
            ))
        }
        CutoffPolicy::AdaptiveConverged {
            first_window,
            window_factor,
            rel_change,
        } => Ok(windowed(
            &f,
            a,
            breakpoints,
            spec,
            first_window,
            window_factor,
            rel_change,
        )),
    }
}

fn windowed<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
    first_window: f64,
    window_factor: f64,
    rel_change: f64,
) -> IntegralResult {
    let mut lo = a;
    let mut hi = a + first_window;
    let mut total = 0.0f64;
    let mut error = 0.0;
    let mut evaluations = 0;
    let mut windows_ok = true;
    let mut quiet = 0usize;
    let mut growing = 0usize;
    let mut prev: Option<f64> = None;
    let mut tail_converged = false;
    let mut diverged = false;
    for _ in 0..spec.max_subdivisions {
        // late windows only need to be accurate relative to the running total
        let abs_tol = spec.abs_tol.max(0.5 * spec.rel_tol * total.abs());
        let r = adapt(
            f,
            lo,
            hi,
            breakpoints,
            spec.rel_tol,
            abs_tol,
            spec.max_subdivisions,
        );
        total += r.value;
        error += r.error_estimate;
        evaluations += r.evaluations;
        windows_ok &= r.converged;
        let c = r.value.abs();
        if c <= rel_change * total.abs() {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= 2 {
            tail_converged = true;
            break;
        }
        if let Some(p) = prev {
            if c >= p && c > 0.0 {
                growing += 1;
            } else {
                growing = 0;
            }
        }
        if growing >= DIVERGENCE_STREAK {
            diverged = true;
            break;
        }
        prev = Some(c);
        lo = hi;
        hi *= window_factor;
    }
    IntegralResult {
        value: total,
        error_estimate: error,
        evaluations,
        converged: tail_converged && windows_ok,
        diverged,
        effective_upper_limit: hi,
    }
}

/// One row of a cutoff convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub cutoff: f64,
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

/// Integral of `f` over `[0, q_c]` for each of the increasing `cutoffs`.
///
/// Segments between successive cutoffs are integrated once and accumulated.
pub fn convergence_scan<F: Fn(f64) -> f64>(
    f: F,
    cutoffs: &[f64],
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<ScanRow>, QuadratureError> {
    spec.validate()?;
    if cutoffs.is_empty() || cutoffs[0] <= 0.0 || cutoffs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(QuadratureError::UnorderedCutoffs);
    }
    let mut rows = Vec::with_capacity(cutoffs.len());
    let mut lo = 0.0;
    let mut value = 0.0;
    let mut error = 0.0;
    let mut converged = true;
    for &c in cutoffs {
        let r = adapt(
            &f,
            lo,
            c,
            breakpoints,
            spec.rel_tol,
            spec.abs_tol,
            spec.max_subdivisions,
        );
        value += r.value;
        error += r.error_estimate;
        converged &= r.converged;
        rows.push(ScanRow {
            cutoff: c,
            value,
            error_estimate: error,
            converged,
        });
        lo = c;
    }
    Ok(rows)
}
