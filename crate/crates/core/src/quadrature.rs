//! Globally adaptive Gauss–Kronrod quadrature for smooth, Gaussian-damped,
//! possibly oscillatory integrands on `[0, ∞)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

/// Absolute error floor below which a result is always accepted.
pub const ABS_FLOOR: f64 = 1e-14;

/// Default cap on the number of live subintervals.
pub const DEFAULT_MAX_INTERVALS: usize = 20_000;

/// Largest number of initial panels an oscillatory integral may ask for.
pub const MAX_PANELS: usize = 1_000_000;

// Kronrod 21-point abscissae; odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_292_536_155,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One evaluation of an integrand, kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrandSample {
    pub k: f64,
    pub value: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not converge after {intervals} subintervals: value {value:e}, error estimate {err:e}")]
    NoConvergence {
        value: f64,
        err: f64,
        intervals: usize,
    },
    #[error("integrand is not finite at k = {}: {}", .0.k, .0.value)]
    NonFinite(IntegrandSample),
    #[error("invalid integration range [{a}, {b}]")]
    BadRange { a: f64, b: f64 },
    #[error("integrand oscillates too fast: {panels:e} panels needed, limit {MAX_PANELS}")]
    TooOscillatory { panels: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl QuadratureOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadratureOptions {
            rel_tol,
            abs_tol: ABS_FLOOR,
            max_intervals: DEFAULT_MAX_INTERVALS,
        }
    }
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self::with_rel_tol(1e-10)
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    /// Roundoff floor of this segment's estimate.
    noise: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    // Largest error first; ties broken by position so the order is total.
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn eval<F: Fn(f64) -> f64>(f: &F, k: f64) -> Result<f64, QuadratureError> {
    let value = f(k);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(QuadratureError::NonFinite(IntegrandSample { k, value }))
    }
}

/// 21-point Gauss–Kronrod rule on `[a, b]`.
fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment, QuadratureError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = eval(f, center)?;
    let mut res_g = 0.0;
    let mut res_k = WGK[10] * fc;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let value = res_k * half;
    let err = rescale_error((res_k - res_g) * half, res_abs * scale, res_asc * scale);
    let noise = 50.0 * f64::EPSILON * res_abs * scale;
    Ok(Segment {
        a,
        b,
        value,
        err,
        noise,
    })
}

/// Adaptive integration over `[a, b]`, starting from `panels` equal pieces.
///
/// Subdivision always bisects the piece with the largest error estimate, so
/// the sequence of refinements is a deterministic function of the inputs.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    opts: QuadratureOptions,
) -> Result<Estimate, QuadratureError> {
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(QuadratureError::BadRange { a, b });
    }
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            err: 0.0,
            evals: 0,
        });
    }
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut heap = BinaryHeap::with_capacity(2 * panels);
    let mut evals = 0;
    for i in 0..panels {
        let lo = a + width * i as f64;
        let hi = if i + 1 == panels { b } else { lo + width };
        heap.push(gauss_kronrod(&f, lo, hi)?);
        evals += 21;
    }
    let max_intervals = opts.max_intervals.max(panels);
    let mut value: f64 = heap.iter().map(|s| s.value).sum();
    let mut err: f64 = heap.iter().map(|s| s.err).sum();
    let mut noise: f64 = heap.iter().map(|s| s.noise).sum();
    // Cancellation can push the target below what the sum of |f| allows;
    // once every piece sits at its roundoff floor there is nothing to gain.
    let target = |value: f64, noise: f64| {
        (opts.rel_tol * value.abs())
            .max(opts.abs_tol)
            .max(2.0 * noise)
    };
    loop {
        if err <= target(value, noise) {
            // Running sums drift; confirm with a fresh summation.
            value = heap.iter().map(|s| s.value).sum();
            err = heap.iter().map(|s| s.err).sum();
            noise = heap.iter().map(|s| s.noise).sum();
            if err <= target(value, noise) {
                return Ok(Estimate { value, err, evals });
            }
        }
        if heap.len() >= max_intervals {
            return Err(QuadratureError::NoConvergence {
                value,
                err,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Cannot bisect further in floating point.
            return Err(QuadratureError::NoConvergence {
                value,
                err,
                intervals: heap.len() + 1,
            });
        }
        let left = gauss_kronrod(&f, worst.a, mid)?;
        let right = gauss_kronrod(&f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        noise += left.noise + right.noise - worst.noise;
        heap.push(left);
        heap.push(right);
        evals += 42;
    }
}

/// Integrate over `[0, ∞)` through the map `k = t / (1 - t)`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    rel_tol: f64,
) -> Result<Estimate, QuadratureError> {
    let mapped = |t: f64| {
        let one_minus = 1.0 - t;
        let k = t / one_minus;
        let v = f(k);
        // Gaussian decay beats the Jacobian; exactly zero tails are harmless.
        if v == 0.0 {
            0.0
        } else {
            v / (one_minus * one_minus)
        }
    };
    integrate(
        mapped,
        0.0,
        1.0,
        16,
        QuadratureOptions::with_rel_tol(rel_tol),
    )
}

/// Upper cutoff `k_max` with `exp(-s² k_max²) < 1e-18` for damping `exp(-s² k²)`.
pub fn gaussian_cutoff(damping_width: f64) -> f64 {
    const LOG_CUTOFF: f64 = 41.5; // -ln(1e-18) ≈ 41.45
    LOG_CUTOFF.sqrt() / damping_width
}

/// Integrate an integrand damped by `exp(-s² k²)` with oscillation frequency
/// at most `frequency` over `[0, ∞)`.
///
/// The range is truncated at [`gaussian_cutoff`] and split into panels no
/// wider than `π / (4 · frequency)`.
pub fn integrate_gaussian_damped<F: Fn(f64) -> f64>(
    f: F,
    damping_width: f64,
    frequency: f64,
    rel_tol: f64,
) -> Result<Estimate, QuadratureError> {
    let k_max = gaussian_cutoff(damping_width);
    let mut panels = 8usize;
    if frequency > 0.0 {
        let width = std::f64::consts::PI / (4.0 * frequency);
        let needed = (k_max / width).ceil();
        if !(needed <= MAX_PANELS as f64) {
            return Err(QuadratureError::TooOscillatory { panels: needed });
        }
        panels = panels.max(needed as usize);
    }
    let opts = QuadratureOptions {
        max_intervals: DEFAULT_MAX_INTERVALS.max(4 * panels),
        ..QuadratureOptions::with_rel_tol(rel_tol)
    };
    integrate(f, 0.0, k_max, panels, opts)
}
