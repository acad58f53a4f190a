//! Negativities and the π-tangle of the three-detector state.

use crate::correlators::Pair;
use crate::density::DensityMatrix8;
use crate::linalg::{self, CMatrix, LinalgError};
use crate::scenario::Label;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Negativities in `[-NEGATIVITY_SLACK, 0)` are roundoff and read as zero.
pub const NEGATIVITY_SLACK: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntanglementError {
    #[error(
        "negativity {cut} = {value:e} is below -{NEGATIVITY_SLACK:e}; the state is not positive"
    )]
    NegativeNegativity { cut: String, value: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `‖M^{T_q}‖₁ − 1`; for a unit-trace state this is twice the weight of the
/// negative part of the partially transposed spectrum.
pub fn raw_negativity(m: &CMatrix, qubit: usize) -> Result<f64, LinalgError> {
    raw_negativity_tol(m, qubit, linalg::HERMITIAN_TOL)
}

fn raw_negativity_tol(m: &CMatrix, qubit: usize, hermitian_tol: f64) -> Result<f64, LinalgError> {
    let pt = linalg::partial_transpose(m, qubit)?;
    let values = linalg::eigh(&pt, hermitian_tol)?.values;
    Ok(values.iter().map(|v| v.abs()).sum::<f64>() - 1.0)
}

fn clamp(cut: String, value: f64) -> Result<f64, EntanglementError> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -NEGATIVITY_SLACK {
        Ok(0.0)
    } else {
        Err(EntanglementError::NegativeNegativity { cut, value })
    }
}

/// `N_{D(EF)}`: negativity of `D` against the other two detectors.
pub fn negativity_one_vs_rest(rho: &DensityMatrix8, d: Label) -> Result<f64, EntanglementError> {
    one_vs_rest_tol(rho, d, linalg::HERMITIAN_TOL)
}

fn one_vs_rest_tol(rho: &DensityMatrix8, d: Label, tol: f64) -> Result<f64, EntanglementError> {
    let value = raw_negativity_tol(&rho.to_binary_order(), d.index(), tol)?;
    clamp(format!("{d}(rest)"), value)
}

/// `N_{D(E)}` of the reduced state of `d` and `e`.
pub fn negativity_pairwise(
    rho: &DensityMatrix8,
    d: Label,
    e: Label,
) -> Result<f64, EntanglementError> {
    pairwise_tol(rho, d, e, linalg::HERMITIAN_TOL)
}

fn pairwise_tol(
    rho: &DensityMatrix8,
    d: Label,
    e: Label,
    tol: f64,
) -> Result<f64, EntanglementError> {
    let pair = Pair::of(d, e).expect("pairwise negativity needs two distinct detectors");
    let reduced = rho.partial_trace(pair);
    let value = raw_negativity_tol(&reduced, 0, tol)?;
    clamp(format!("{d}({e})"), value)
}

/// Entanglement measures of a three-detector state, indexed by label
/// (`one_vs_rest`, `pi_components`) and by [`Pair`] (`pairwise`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub one_vs_rest: [f64; 3],
    pub pairwise: [f64; 3],
    /// `π_D = N²_{D(EF)} − N²_{D(E)} − N²_{D(F)}`, unclamped.
    pub pi_components: [f64; 3],
    /// Mean of the components, clamped at zero.
    pub pi_tangle: f64,
    /// Mean of the components before clamping.
    pub pi_raw: f64,
}

impl EntanglementReport {
    pub fn zero() -> Self {
        EntanglementReport {
            one_vs_rest: [0.0; 3],
            pairwise: [0.0; 3],
            pi_components: [0.0; 3],
            pi_tangle: 0.0,
            pi_raw: 0.0,
        }
    }

    pub fn from_negativities(one_vs_rest: [f64; 3], pairwise: [f64; 3]) -> Self {
        let pi_components = Label::ALL.map(|d| {
            let mut pi = one_vs_rest[d.index()].powi(2);
            for e in Label::ALL {
                if e != d {
                    pi -= pairwise[Pair::of(d, e).unwrap().index()].powi(2);
                }
            }
            pi
        });
        let pi_raw = pi_components.iter().sum::<f64>() / 3.0;
        EntanglementReport {
            one_vs_rest,
            pairwise,
            pi_components,
            pi_tangle: pi_raw.max(0.0),
            pi_raw,
        }
    }

    pub fn one_vs_rest_of(&self, d: Label) -> f64 {
        self.one_vs_rest[d.index()]
    }

    pub fn pairwise_of(&self, d: Label, e: Label) -> f64 {
        self.pairwise[Pair::of(d, e).expect("distinct labels").index()]
    }

    /// Re-index a report computed in slot order; `perm[slot]` is the label
    /// that slot should carry.
    pub fn relabel(&self, perm: [Label; 3]) -> Self {
        let mut out = *self;
        for slot in Label::ALL {
            out.one_vs_rest[perm[slot.index()].index()] = self.one_vs_rest[slot.index()];
            out.pi_components[perm[slot.index()].index()] = self.pi_components[slot.index()];
        }
        for p in Pair::ALL {
            let (d, e) = p.labels();
            let q = Pair::of(perm[d.index()], perm[e.index()]).unwrap();
            out.pairwise[q.index()] = self.pairwise[p.index()];
        }
        out
    }

    /// Largest absolute difference across every measure.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let a = self.flat();
        let b = other.flat();
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn flat(&self) -> [f64; 11] {
        let mut out = [0.0; 11];
        out[..3].copy_from_slice(&self.one_vs_rest);
        out[3..6].copy_from_slice(&self.pairwise);
        out[6..9].copy_from_slice(&self.pi_components);
        out[9] = self.pi_tangle;
        out[10] = self.pi_raw;
        out
    }

    pub fn to_json_schema(&self) -> ReportJson {
        ReportJson {
            negativity: NegativityJson {
                a_bc: self.one_vs_rest[0],
                b_ac: self.one_vs_rest[1],
                c_ab: self.one_vs_rest[2],
                a_b: self.pairwise[Pair::AB.index()],
                a_c: self.pairwise[Pair::AC.index()],
                b_c: self.pairwise[Pair::BC.index()],
            },
            pi: PiJson {
                a: self.pi_components[0],
                b: self.pi_components[1],
                c: self.pi_components[2],
                total: self.pi_tangle,
                raw: self.pi_raw,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativityJson {
    #[serde(rename = "A_BC")]
    pub a_bc: f64,
    #[serde(rename = "B_AC")]
    pub b_ac: f64,
    #[serde(rename = "C_AB")]
    pub c_ab: f64,
    #[serde(rename = "A_B")]
    pub a_b: f64,
    #[serde(rename = "A_C")]
    pub a_c: f64,
    #[serde(rename = "B_C")]
    pub b_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiJson {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub total: f64,
    pub raw: f64,
}

/// `{negativity: {A_BC, B_AC, C_AB, A_B, A_C, B_C}, pi: {A, B, C, total, raw}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub negativity: NegativityJson,
    pub pi: PiJson,
}

/// All negativities and the π-tangle, indexed by the matrix's own qubit order.
pub fn pi_tangle(rho: &DensityMatrix8) -> Result<EntanglementReport, EntanglementError> {
    pi_tangle_with_tol(rho, linalg::HERMITIAN_TOL)
}

/// [`pi_tangle`] with an explicit Hermiticity tolerance for the partial transposes.
pub fn pi_tangle_with_tol(
    rho: &DensityMatrix8,
    hermitian_tol: f64,
) -> Result<EntanglementReport, EntanglementError> {
    let mut one_vs_rest = [0.0; 3];
    for d in Label::ALL {
        one_vs_rest[d.index()] = one_vs_rest_tol(rho, d, hermitian_tol)?;
    }
    let mut pairwise = [0.0; 3];
    for p in Pair::ALL {
        let (d, e) = p.labels();
        pairwise[p.index()] = pairwise_tol(rho, d, e, hermitian_tol)?;
    }
    Ok(EntanglementReport::from_negativities(one_vs_rest, pairwise))
}
