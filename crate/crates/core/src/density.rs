//! The final three-detector state.
//!
//! [`assemble_rho_sum`] evaluates the full 2¹²-term expansion of
//! `Tr_φ[U ρ₀ U†]`: six outer signs pick the ket and bra basis states and
//! their gap phases, six inner signs run over the exponentials
//! `e^{±Y_D}` coming from `cosh`/`sinh` of the smeared fields. Three matrix
//! elements also have closed forms ([`element_closed_form`]) used as an
//! independent check on the sum.

use crate::correlators::{CorrelatorSet, Pair};
use crate::linalg::{self, CMatrix, LinalgError};
use crate::scenario::ScenarioConfig;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;
pub const PARITY_TOL: f64 = 1e-12;

/// Occupation bits `(A, B, C)` of each basis vector, in the fixed order
/// |000⟩, |001⟩, |010⟩, |100⟩, |011⟩, |101⟩, |110⟩, |111⟩.
pub const BASIS: [[u8; 3]; 8] = [
    [0, 0, 0],
    [0, 0, 1],
    [0, 1, 0],
    [1, 0, 0],
    [0, 1, 1],
    [1, 0, 1],
    [1, 1, 0],
    [1, 1, 1],
];

/// Position of each basis vector in binary order (A most significant).
/// This permutation is its own inverse.
pub const TO_BINARY: [usize; 8] = [0, 1, 2, 4, 3, 5, 6, 7];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("state invariant {invariant} violated: {observed:e} exceeds tolerance {tol:e}")]
    Invariant {
        invariant: &'static str,
        observed: f64,
        tol: f64,
    },
    #[error("no closed form implemented for element r{0}{1}")]
    UnsupportedElement(usize, usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Gap phases `Ω_D T_D` of the three detectors in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GapPhases(pub [f64; 3]);

impl GapPhases {
    pub fn of(scenario: &ScenarioConfig) -> Self {
        GapPhases(scenario.detectors.map(|d| d.gap * d.switch_time))
    }
}

/// Hermitian 8×8 density matrix in the [`BASIS`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix8 {
    entries: CMatrix,
}

/// Measured deviations from the state invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDiagnostics {
    pub hermitian_defect: f64,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
    pub parity_defect: f64,
}

impl StateDiagnostics {
    /// First violated invariant, if any.
    pub fn violation(&self) -> Option<DensityError> {
        let checks = [
            ("hermiticity", self.hermitian_defect, HERMITIAN_TOL),
            ("unit trace", self.trace_defect, TRACE_TOL),
            ("positivity", -self.min_eigenvalue, PSD_TOL),
            ("parity zero pattern", self.parity_defect, PARITY_TOL),
        ];
        checks
            .into_iter()
            .find(|&(_, observed, tol)| !(observed <= tol))
            .map(|(invariant, observed, tol)| DensityError::Invariant {
                invariant,
                observed,
                tol,
            })
    }
}

fn parity(i: usize) -> u8 {
    BASIS[i].iter().sum::<u8>() % 2
}

impl DensityMatrix8 {
    /// Wrap an 8×8 matrix given in [`BASIS`] order.
    pub fn from_basis_order(entries: CMatrix) -> Self {
        assert_eq!(entries.dim(), 8, "density matrix must be 8x8");
        DensityMatrix8 { entries }
    }

    /// Wrap an 8×8 matrix given in binary order (A most significant).
    pub fn from_binary_order(m: &CMatrix) -> Self {
        assert_eq!(m.dim(), 8, "density matrix must be 8x8");
        Self::from_basis_order(m.permute_basis(&TO_BINARY))
    }

    /// `|000⟩⟨000|`.
    pub fn ground() -> Self {
        let mut m = CMatrix::zeros(8);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        Self::from_basis_order(m)
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// Element `r_{ij}` with 1-based indices into [`BASIS`].
    pub fn r(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i - 1, j - 1)]
    }

    pub fn to_binary_order(&self) -> CMatrix {
        self.entries.permute_basis(&TO_BINARY)
    }

    pub fn diagnostics(&self) -> Result<StateDiagnostics, LinalgError> {
        let m = &self.entries;
        let mut parity_defect: f64 = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                if parity(i) != parity(j) {
                    parity_defect = parity_defect.max(m[(i, j)].norm());
                }
            }
        }
        let eig = linalg::eigh(m, linalg::HERMITIAN_TOL)?;
        Ok(StateDiagnostics {
            hermitian_defect: m.hermitian_defect(),
            trace_defect: (m.trace() - Complex64::new(1.0, 0.0)).norm(),
            min_eigenvalue: eig.values[0],
            parity_defect,
        })
    }

    pub fn validate(&self) -> Result<StateDiagnostics, DensityError> {
        let diag = self.diagnostics()?;
        match diag.violation() {
            Some(err) => Err(err),
            None => Ok(diag),
        }
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>, LinalgError> {
        linalg::eigvals_hermitian(&self.entries)
    }

    /// Reduced two-detector state on `keep`, in binary order of the pair.
    pub fn partial_trace(&self, keep: Pair) -> CMatrix {
        let full = self.to_binary_order();
        linalg::trace_out(&full, keep.complement().index()).expect("8x8 has three qubits")
    }
}

/// Reduced state of the two detectors in `keep`.
pub fn partial_trace(rho: &DensityMatrix8, keep: Pair) -> CMatrix {
    rho.partial_trace(keep)
}

/// ±1 raised to the power `(1 ± e)/2` for sign `e`.
fn sign_pow(base: i8, exponent_sign: i8) -> f64 {
    if exponent_sign == 1 && base == -1 {
        -1.0
    } else {
        1.0
    }
}

const SIGNS: [i8; 2] = [1, -1];

/// The 64 inner vacuum expectations `⟨e^{aY_A} e^{bY_B} e^{cY_C} e^{jY_C} e^{kY_B} e^{ℓY_A}⟩`,
/// indexed by `[a, b, c, j, k, ℓ]` with bit 1 meaning −1.
fn inner_expectations(corr: &CorrelatorSet) -> [Complex64; 64] {
    let [lf_a, lf_b, lf_c] = corr.log_f;
    let (w_ab, w_ac, w_bc) = (
        corr.omega_of(Pair::AB),
        corr.omega_of(Pair::AC),
        corr.omega_of(Pair::BC),
    );
    let (t_ab, t_ac, t_bc) = (
        corr.theta_of(Pair::AB),
        corr.theta_of(Pair::AC),
        corr.theta_of(Pair::BC),
    );
    let mut out = [Complex64::new(0.0, 0.0); 64];
    for (idx, slot) in out.iter_mut().enumerate() {
        let s = |bit: usize| -> f64 {
            if idx >> (5 - bit) & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        };
        let (a, b, c, j, k, l) = (s(0), s(1), s(2), s(3), s(4), s(5));
        let (ua, ub, uc) = (a + l, b + k, c + j);
        // Products of f and exp(ω) combined in log space.
        let re = ua * ua * lf_a
            + ub * ub * lf_b
            + uc * uc * lf_c
            + ua * ub * w_ab
            + ua * uc * w_ac
            + ub * uc * w_bc;
        let im = 0.5 * ((a - l) * ub * t_ab + (a - l) * uc * t_ac + (b - k) * uc * t_bc);
        *slot = Complex64::from_polar(re.exp(), im);
    }
    out
}

/// Evaluate the 4096-term sum without checking the result.
pub fn rho_sum(corr: &CorrelatorSet, phases: GapPhases) -> DensityMatrix8 {
    let inner = inner_expectations(corr);
    let [ph_a, ph_b, ph_c] = phases.0;
    let mut m = CMatrix::zeros(8);
    for &z in &SIGNS {
        for &y in &SIGNS {
            for &x in &SIGNS {
                let ket = index_of([(1 - z) / 2, (1 - y) / 2, (1 - x) / 2]);
                for &s in &SIGNS {
                    for &r in &SIGNS {
                        for &q in &SIGNS {
                            let bra = index_of([(1 - s) / 2, (1 - r) / 2, (1 - q) / 2]);
                            let phase = 0.5
                                * (f64::from(1 - z) * ph_a
                                    + f64::from(1 - y) * ph_b
                                    + f64::from(1 - x) * ph_c
                                    - f64::from(1 - s) * ph_a
                                    - f64::from(1 - r) * ph_b
                                    - f64::from(1 - q) * ph_c);
                            let mut acc = Complex64::new(0.0, 0.0);
                            for (idx, g) in inner.iter().enumerate() {
                                let e = |bit: usize| -> i8 {
                                    if idx >> (5 - bit) & 1 == 0 {
                                        1
                                    } else {
                                        -1
                                    }
                                };
                                let (a, b, c, j, k, l) = (e(0), e(1), e(2), e(3), e(4), e(5));
                                let sign = sign_pow(s, a)
                                    * sign_pow(r, b)
                                    * sign_pow(q, c)
                                    * sign_pow(x, -j)
                                    * sign_pow(y, -k)
                                    * sign_pow(z, -l);
                                acc += g * sign;
                            }
                            m[(ket, bra)] = acc * Complex64::from_polar(1.0 / 64.0, phase);
                        }
                    }
                }
            }
        }
    }
    DensityMatrix8::from_basis_order(m)
}

fn index_of(bits: [i8; 3]) -> usize {
    let bits = bits.map(|b| b as u8);
    BASIS
        .iter()
        .position(|&v| v == bits)
        .expect("all bit patterns are in the basis")
}

/// Assemble `ρ_ABC` from the full sum and enforce the state invariants.
pub fn assemble_rho_sum(
    scenario: &ScenarioConfig,
    corr: &CorrelatorSet,
) -> Result<DensityMatrix8, DensityError> {
    let rho = rho_sum(corr, GapPhases::of(scenario));
    rho.validate()?;
    Ok(rho)
}

/// `f_{D₁}⁴ ⋯ × cosh/sinh` products in log space: returns
/// `exp(log_pre) · ¼ Σ_{s₁s₂s₃=+1} w(s) e^{s₁x₁+s₂x₂+s₃x₃}` with `w(s) = 1` or `s₃`.
fn triple_hyperbolic(log_pre: f64, x: [f64; 3], weight_by_last: bool) -> f64 {
    let mut sum = 0.0;
    for s in [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ] {
        let w = if weight_by_last { s[2] } else { 1.0 };
        sum += w * (log_pre + s[0] * x[0] + s[1] * x[1] + s[2] * x[2]).exp();
    }
    0.25 * sum
}

/// `(e^{log_pre + x} ± e^{log_pre − x}) / 2`, i.e. `e^{log_pre}·cosh x` or `·sinh x`.
fn hyp(log_pre: f64, x: f64, sinh: bool) -> f64 {
    let (p, m) = ((log_pre + x).exp(), (log_pre - x).exp());
    0.5 * if sinh { p - m } else { p + m }
}

/// Closed-form value of `r_{ij}` (1-based) for the supported elements
/// `r11`, `r22`, `r15` and the conjugate `r51`.
pub fn element_closed_form(
    which: (usize, usize),
    corr: &CorrelatorSet,
    phases: GapPhases,
) -> Result<Complex64, DensityError> {
    let [lf_a, lf_b, lf_c] = corr.log_f.map(|l| 4.0 * l);
    let w = |p: Pair| 4.0 * corr.omega_of(p);
    let th = |p: Pair| 2.0 * corr.theta_of(p);
    let (w_ab, w_ac, w_bc) = (w(Pair::AB), w(Pair::AC), w(Pair::BC));
    let (t_ab, t_ac, t_bc) = (th(Pair::AB), th(Pair::AC), th(Pair::BC));

    // r11 and r22 share their first half and differ in the sign of the C terms.
    let diagonal = |c_sign: f64| {
        let a_part = 1.0 + lf_a.exp() + lf_b.exp() * t_ab.cos() + hyp(lf_a + lf_b, w_ab, false);
        let c_part = lf_c.exp() * t_ac.cos() * t_bc.cos()
            + t_bc.cos() * hyp(lf_a + lf_c, w_ac, false)
            + t_ab.cos() * t_ac.cos() * hyp(lf_b + lf_c, w_bc, false)
            - t_ab.sin() * t_ac.sin() * hyp(lf_b + lf_c, w_bc, true)
            + triple_hyperbolic(lf_a + lf_b + lf_c, [w_ac, w_bc, w_ab], false);
        Complex64::new((a_part + c_sign * c_part) / 8.0, 0.0)
    };

    match which {
        (1, 1) => Ok(diagonal(1.0)),
        (2, 2) => Ok(diagonal(-1.0)),
        (1, 5) | (5, 1) => {
            let [_, ph_b, ph_c] = phases.0;
            let imaginary =
                lf_c.exp() * t_ac.cos() * t_bc.sin() + t_bc.sin() * hyp(lf_a + lf_c, w_ac, false);
            let real = t_ab.cos() * t_ac.cos() * hyp(lf_b + lf_c, w_bc, true)
                - t_ab.sin() * t_ac.sin() * hyp(lf_b + lf_c, w_bc, false)
                + triple_hyperbolic(lf_a + lf_b + lf_c, [w_ab, w_ac, w_bc], true);
            let r15 =
                Complex64::from_polar(1.0 / 8.0, -(ph_b + ph_c)) * Complex64::new(real, imaginary);
            Ok(if which == (1, 5) { r15 } else { r15.conj() })
        }
        (i, j) => Err(DensityError::UnsupportedElement(i, j)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_permutation_is_an_involution() {
        for i in 0..8 {
            assert_eq!(TO_BINARY[TO_BINARY[i]], i);
            let [a, b, c] = BASIS[i];
            assert_eq!(TO_BINARY[i], 4 * a as usize + 2 * b as usize + c as usize);
        }
    }

    #[test]
    fn no_interaction_leaves_ground_state() {
        let rho = rho_sum(&CorrelatorSet::trivial(), GapPhases([0.3, -1.0, 2.0]));
        assert!(
            rho.entries()
                .max_abs_diff(DensityMatrix8::ground().entries())
                < 1e-15
        );
        assert!(rho.validate().is_ok());
    }

    #[test]
    fn closed_forms_without_interaction() {
        let c = CorrelatorSet::trivial();
        let p = GapPhases::default();
        assert_eq!(
            element_closed_form((1, 1), &c, p).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        assert_eq!(
            element_closed_form((2, 2), &c, p).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        assert!(matches!(
            element_closed_form((3, 4), &c, p),
            Err(DensityError::UnsupportedElement(3, 4))
        ));
    }

    #[test]
    fn closed_forms_match_sum_at_a_generic_point() {
        let corr = CorrelatorSet {
            log_f: [-0.2, -0.05, -0.13],
            theta: [0.21, -0.17, 0.08],
            omega: [-0.11, 0.27, -0.29],
            err: 0.0,
            discrepancy: 0.0,
        };
        let phases = GapPhases([0.4, 1.1, -0.7]);
        let rho = rho_sum(&corr, phases);
        for (i, j) in [(1, 1), (2, 2), (1, 5), (5, 1)] {
            let closed = element_closed_form((i, j), &corr, phases).unwrap();
            assert!(
                (closed - rho.r(i, j)).norm() < 1e-14,
                "r{i}{j}: {closed} vs {}",
                rho.r(i, j)
            );
        }
    }

    #[test]
    fn diagnostics_flag_each_invariant() {
        let mut m = DensityMatrix8::ground().entries().clone();
        m[(0, 1)] = Complex64::new(1e-6, 0.0);
        m[(1, 0)] = Complex64::new(1e-6, 0.0);
        let err = DensityMatrix8::from_basis_order(m).validate().unwrap_err();
        assert!(matches!(
            err,
            DensityError::Invariant {
                invariant: "parity zero pattern",
                ..
            }
        ));

        let m = DensityMatrix8::ground().entries().scale(1.1);
        let err = DensityMatrix8::from_basis_order(m).validate().unwrap_err();
        assert!(matches!(
            err,
            DensityError::Invariant {
                invariant: "unit trace",
                ..
            }
        ));

        let mut m = CMatrix::from_real_diagonal(&[0.6, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, -0.1]);
        m[(0, 4)] = Complex64::new(0.0, 0.0);
        let err = DensityMatrix8::from_basis_order(m).validate().unwrap_err();
        assert!(matches!(
            err,
            DensityError::Invariant {
                invariant: "positivity",
                ..
            }
        ));
    }

    #[test]
    fn partial_trace_of_ground_state() {
        let rho = DensityMatrix8::ground();
        let ab = rho.partial_trace(Pair::AB);
        assert_eq!(ab[(0, 0)], Complex64::new(1.0, 0.0));
        assert!((ab.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
