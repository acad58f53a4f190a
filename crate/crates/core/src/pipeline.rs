//! Scenario → correlators → state → entanglement report.

use crate::correlators::{self, CorrelatorError, CorrelatorMethod, CorrelatorSet};
use crate::density::{self, DensityError, DensityMatrix8};
use crate::entanglement::{self, EntanglementError, EntanglementReport};
use crate::scenario::ScenarioConfig;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Correlator(#[from] CorrelatorError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Entanglement(#[from] EntanglementError),
}

impl PipelineError {
    /// Quadrature and cross-check failures, as opposed to broken invariants.
    pub fn is_numerical(&self) -> bool {
        matches!(self, PipelineError::Correlator(_))
    }
}

/// Everything computed for one scenario.
///
/// `rho` and `correlators` are in switching (slot) order; `report` uses the
/// caller's labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub scenario: ScenarioConfig,
    pub correlators: CorrelatorSet,
    pub rho: DensityMatrix8,
    pub report: EntanglementReport,
}

pub fn evaluate(scenario: &ScenarioConfig) -> Result<Evaluation, PipelineError> {
    evaluate_with(scenario, CorrelatorMethod::default())
}

pub fn evaluate_with(
    scenario: &ScenarioConfig,
    method: CorrelatorMethod,
) -> Result<Evaluation, PipelineError> {
    let correlators = correlators::correlators_with(scenario, method)?;
    let rho = density::assemble_rho_sum(scenario, &correlators)?;
    let report = entanglement::pi_tangle_with_tol(&rho, scenario.tolerances.eigen)?
        .relabel(scenario.permutation());
    Ok(Evaluation {
        scenario: *scenario,
        correlators,
        rho,
        report,
    })
}
