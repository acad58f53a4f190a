//! Vacuum correlators of the smeared field for Gaussian detectors in 3+1
//! dimensions: the decay factors `f_D`, the commutator terms `Θ_{D,E}` and
//! the anticommutator terms `ω_{D,E}`.
//!
//! Every quantity is available two ways: a closed form, and a radial
//! quadrature left after doing the angular integral
//! `∫dΩ e^{ik·d} = 4π sin(kd)/(kd)` analytically. [`correlators_for`]
//! evaluates both and refuses to return values on which they disagree.

use crate::quadrature::{self, QuadratureError};
use crate::scenario::{DetectorSpec, Label, ScenarioConfig};
use crate::special::{dawson, dawson_derivative};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Maximum allowed |closed form − quadrature| on any correlator.
pub const CROSS_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelatorError {
    #[error("{quantity}: {source}")]
    Quadrature {
        quantity: String,
        #[source]
        source: QuadratureError,
    },
    #[error("{quantity}: closed form {closed:e} and quadrature {quadrature:e} differ by more than {tol:e}")]
    CrossCheck {
        quantity: String,
        closed: f64,
        quadrature: f64,
        tol: f64,
    },
}

/// Unordered detector pair, always stored earlier-switching detector first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pair {
    AB,
    AC,
    BC,
}

impl Pair {
    pub const ALL: [Pair; 3] = [Pair::AB, Pair::AC, Pair::BC];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn labels(self) -> (Label, Label) {
        match self {
            Pair::AB => (Label::A, Label::B),
            Pair::AC => (Label::A, Label::C),
            Pair::BC => (Label::B, Label::C),
        }
    }

    /// The pair containing `d` and `e`, or `None` if they coincide.
    pub fn of(d: Label, e: Label) -> Option<Pair> {
        match (d.min(e), d.max(e)) {
            (Label::A, Label::B) => Some(Pair::AB),
            (Label::A, Label::C) => Some(Pair::AC),
            (Label::B, Label::C) => Some(Pair::BC),
            _ => None,
        }
    }

    /// The detector not in the pair.
    pub fn complement(self) -> Label {
        match self {
            Pair::AB => Label::C,
            Pair::AC => Label::B,
            Pair::BC => Label::A,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pair::AB => "AB",
            Pair::AC => "AC",
            Pair::BC => "BC",
        }
    }
}

/// Fourier transform of the Gaussian smearing `exp(-x²/(2σ²))` with the
/// `(2π)^{-3/2}` convention.
pub fn fourier_smearing(k: f64, sigma: f64) -> f64 {
    sigma.powi(3) * (-0.5 * sigma * sigma * k * k).exp()
}

/// `ln f_D = -π λ² η² σ⁴ / 8` for the peak-normalized profile.
pub fn log_f(detector: &DetectorSpec) -> f64 {
    let lambda = detector.effective_coupling();
    let sigma2 = detector.smearing_width * detector.smearing_width;
    -PI * lambda * lambda * sigma2 * sigma2 / 8.0
}

pub fn compute_f(detector: &DetectorSpec) -> f64 {
    log_f(detector).exp()
}

/// `ln f_D` from radial quadrature of `|β_D(k)|²`.
pub fn log_f_quadrature(
    detector: &DetectorSpec,
    rel_tol: f64,
) -> Result<quadrature::Estimate, QuadratureError> {
    let lambda = detector.effective_coupling();
    let sigma = detector.smearing_width;
    // |β|² = λ² F̃(k)² / (8k); the shell measure is 4πk².
    let integrand = |k: f64| {
        let ft = fourier_smearing(k, sigma);
        4.0 * PI * k * lambda * lambda * ft * ft / 8.0
    };
    let est = quadrature::integrate_gaussian_damped(integrand, sigma, 0.0, rel_tol)?;
    Ok(quadrature::Estimate {
        value: -0.5 * est.value,
        err: 0.5 * est.err,
        evals: est.evals,
    })
}

/// Separation and switching data for an ordered pair of detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairGeometry {
    pub distance: f64,
    /// `T_E - T_D`.
    pub delay: f64,
    pub couplings: (f64, f64),
    pub widths: (f64, f64),
}

impl PairGeometry {
    pub fn new(d: &DetectorSpec, e: &DetectorSpec) -> Self {
        PairGeometry {
            distance: d.distance_to(e),
            delay: e.switch_time - d.switch_time,
            couplings: (d.effective_coupling(), e.effective_coupling()),
            widths: (d.smearing_width, e.smearing_width),
        }
    }

    /// `λ_D λ_E σ_D³ σ_E³`.
    fn prefactor(&self) -> f64 {
        self.couplings.0 * self.couplings.1 * (self.widths.0 * self.widths.1).powi(3)
    }

    /// Width `s` of the combined damping `exp(-s² k²)`.
    fn damping_width(&self) -> f64 {
        (0.5 * (self.widths.0 * self.widths.0 + self.widths.1 * self.widths.1)).sqrt()
    }

    fn frequency(&self) -> f64 {
        self.distance + self.delay.abs()
    }

    /// Closed form of `Θ_{D,E}`.
    pub fn theta(&self) -> f64 {
        let s = self.damping_width();
        let tau = self.delay.abs();
        let d = self.distance;
        if tau == 0.0 {
            return 0.0;
        }
        // e^{-(τ-d)²/4s²} - e^{-(τ+d)²/4s²}, divided by d, without cancellation.
        let gauss = (-(tau - d) * (tau - d) / (4.0 * s * s)).exp();
        let ratio = if d == 0.0 {
            tau / (s * s)
        } else {
            -(-tau * d / (s * s)).exp_m1() / d
        };
        -self.delay.signum() * PI.powf(1.5) * self.prefactor() / (4.0 * s) * gauss * ratio
    }

    /// Closed form of `ω_{D,E}`.
    pub fn omega(&self) -> f64 {
        let s = self.damping_width();
        // Even in the delay.
        let x = self.delay.abs() / (2.0 * s);
        let eps = self.distance / (2.0 * s);
        // [D(x+ε) - D(x-ε)] / (2ε)
        let slope = if eps < 1e-3 {
            let d1 = dawson_derivative(x);
            let d2 = -2.0 * dawson(x) - 2.0 * x * d1;
            let d3 = -4.0 * d1 - 2.0 * x * d2;
            d1 + eps * eps * d3 / 6.0
        } else {
            (dawson(x + eps) - dawson(x - eps)) / (2.0 * eps)
        };
        -PI * self.prefactor() * slope / (4.0 * s * s)
    }

    /// `Θ_{D,E}` by radial quadrature.
    pub fn theta_quadrature(&self, rel_tol: f64) -> Result<quadrature::Estimate, QuadratureError> {
        let (lambda_d, lambda_e) = self.couplings;
        let (sigma_d, sigma_e) = self.widths;
        let (dt, d) = (self.delay, self.distance);
        // Θ = -2 ∫d³k Im(β_D* β_E), with Im(β_D* β_E) = λλ' F̃F̃'/(8k) sin(kΔT - k·d).
        let integrand = |k: f64| {
            let shell = 4.0 * PI * k * k;
            let beta_product =
                lambda_d * lambda_e * fourier_smearing(k, sigma_d) * fourier_smearing(k, sigma_e)
                    / (8.0 * k);
            -2.0 * shell * beta_product * (k * dt).sin() * sinc(k * d)
        };
        quadrature::integrate_gaussian_damped(
            guard_origin(integrand),
            self.damping_width(),
            self.frequency(),
            rel_tol,
        )
    }

    /// `ω_{D,E}` by radial quadrature.
    pub fn omega_quadrature(&self, rel_tol: f64) -> Result<quadrature::Estimate, QuadratureError> {
        let (lambda_d, lambda_e) = self.couplings;
        let (sigma_d, sigma_e) = self.widths;
        let (dt, d) = (self.delay, self.distance);
        // ω = -∫d³k Re(β_D* β_E).
        let integrand = |k: f64| {
            let shell = 4.0 * PI * k * k;
            let beta_product =
                lambda_d * lambda_e * fourier_smearing(k, sigma_d) * fourier_smearing(k, sigma_e)
                    / (8.0 * k);
            -shell * beta_product * (k * dt).cos() * sinc(k * d)
        };
        quadrature::integrate_gaussian_damped(
            guard_origin(integrand),
            self.damping_width(),
            self.frequency(),
            rel_tol,
        )
    }
}

/// The integrands vanish linearly at k = 0; avoid evaluating 0/0 there.
fn guard_origin(f: impl Fn(f64) -> f64) -> impl Fn(f64) -> f64 {
    move |k| if k == 0.0 { 0.0 } else { f(k) }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

pub fn compute_theta(d: &DetectorSpec, e: &DetectorSpec) -> f64 {
    PairGeometry::new(d, e).theta()
}

pub fn compute_omega(d: &DetectorSpec, e: &DetectorSpec) -> f64 {
    PairGeometry::new(d, e).omega()
}

/// The nine scalars that determine the detectors' final state, in the
/// canonical (switching-order) labelling of a [`ScenarioConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorSet {
    /// `ln f_D`; kept in log form since `f_D` underflows for strong coupling.
    pub log_f: [f64; 3],
    /// `Θ_{D,E}` for `D` switching no later than `E`, indexed by [`Pair`].
    pub theta: [f64; 3],
    pub omega: [f64; 3],
    /// Worst quadrature error estimate (zero when no quadrature was run).
    pub err: f64,
    /// Largest |closed form − quadrature| seen (zero when not cross-checked).
    pub discrepancy: f64,
}

impl CorrelatorSet {
    /// No interaction: `f = 1`, `Θ = ω = 0`.
    pub fn trivial() -> Self {
        CorrelatorSet {
            log_f: [0.0; 3],
            theta: [0.0; 3],
            omega: [0.0; 3],
            err: 0.0,
            discrepancy: 0.0,
        }
    }

    pub fn f(&self, d: Label) -> f64 {
        self.log_f[d.index()].exp()
    }

    /// `Θ_{D,E}`; antisymmetric in its arguments.
    pub fn theta_between(&self, d: Label, e: Label) -> f64 {
        match Pair::of(d, e) {
            Some(p) if d < e => self.theta[p.index()],
            Some(p) => -self.theta[p.index()],
            None => 0.0,
        }
    }

    /// `ω_{D,E}`; symmetric, with `ω_{D,D} = 2 ln f_D`.
    pub fn omega_between(&self, d: Label, e: Label) -> f64 {
        match Pair::of(d, e) {
            Some(p) => self.omega[p.index()],
            None => 2.0 * self.log_f[d.index()],
        }
    }

    pub fn theta_of(&self, p: Pair) -> f64 {
        self.theta[p.index()]
    }

    pub fn omega_of(&self, p: Pair) -> f64 {
        self.omega[p.index()]
    }
}

/// How [`correlators_with`] evaluates the correlators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelatorMethod {
    ClosedForm,
    Quadrature,
    /// Closed forms, each confirmed by quadrature within [`CROSS_CHECK_TOL`].
    #[default]
    CrossChecked,
}

pub fn correlators_for(scenario: &ScenarioConfig) -> Result<CorrelatorSet, CorrelatorError> {
    correlators_with(scenario, CorrelatorMethod::CrossChecked)
}

pub fn correlators_with(
    scenario: &ScenarioConfig,
    method: CorrelatorMethod,
) -> Result<CorrelatorSet, CorrelatorError> {
    let tol = scenario.tolerances.quadrature;
    let mut out = CorrelatorSet::trivial();

    let mut settle = |quantity: String,
                      closed: f64,
                      quad: &dyn Fn() -> Result<quadrature::Estimate, QuadratureError>|
     -> Result<f64, CorrelatorError> {
        if method == CorrelatorMethod::ClosedForm {
            return Ok(closed);
        }
        let est = quad().map_err(|source| CorrelatorError::Quadrature {
            quantity: quantity.clone(),
            source,
        })?;
        out.err = out.err.max(est.err);
        if method == CorrelatorMethod::Quadrature {
            return Ok(est.value);
        }
        let gap = (closed - est.value).abs();
        if !(gap <= CROSS_CHECK_TOL) {
            return Err(CorrelatorError::CrossCheck {
                quantity,
                closed,
                quadrature: est.value,
                tol: CROSS_CHECK_TOL,
            });
        }
        out.discrepancy = out.discrepancy.max(gap);
        Ok(closed)
    };

    let mut log_f_values = [0.0; 3];
    for label in Label::ALL {
        let det = scenario.detector(label);
        log_f_values[label.index()] = settle(format!("ln f_{label}"), log_f(det), &|| {
            log_f_quadrature(det, tol)
        })?;
    }
    let mut theta = [0.0; 3];
    let mut omega = [0.0; 3];
    for pair in Pair::ALL {
        let (d, e) = pair.labels();
        let geom = PairGeometry::new(scenario.detector(d), scenario.detector(e));
        theta[pair.index()] = settle(format!("theta_{}", pair.as_str()), geom.theta(), &|| {
            geom.theta_quadrature(tol)
        })?;
        omega[pair.index()] = settle(format!("omega_{}", pair.as_str()), geom.omega(), &|| {
            geom.omega_quadrature(tol)
        })?;
    }
    out.log_f = log_f_values;
    out.theta = theta;
    out.omega = omega;
    Ok(out)
}
