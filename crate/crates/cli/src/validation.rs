//! Seeded self-checks of the library's invariants on randomized scenarios.

use harvest_core::correlators::{self, CorrelatorMethod, CorrelatorSet, Pair, PairGeometry};
use harvest_core::density::{self, DensityMatrix8, GapPhases};
use harvest_core::entanglement::{self, EntanglementReport};
use harvest_core::linalg;
use harvest_core::scenario::{DetectorSpec, Label, ScenarioConfig, SmearingNorm, Tolerances};
use harvest_core::sweep::{build_configuration, Configuration, Params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const DEFAULT_SCENARIOS: usize = 256;

/// Scenario whose state is strongly entangled; always included so that a
/// sign error in Θ cannot hide behind fully decohered random states.
pub fn anchor_scenario() -> ScenarioConfig {
    let p = Params {
        lambda: 10.0,
        normalization: SmearingNorm::Unit,
        ..Params::default()
    };
    build_configuration(Configuration::Triangle, &p).expect("anchor parameters are valid")
}

/// Random triangle, line or free placement with λ ∈ [0,12], L,T ∈ [0,3] and
/// σ ∈ [0.5,2] drawn per detector; either smearing normalization.
pub fn random_scenario(rng: &mut impl Rng) -> ScenarioConfig {
    let l = rng.random_range(0.0..3.0);
    let t = rng.random_range(0.0..3.0);
    let kind = rng.random_range(0..3);
    let normalization = if rng.random_bool(0.5) {
        SmearingNorm::Peak
    } else {
        SmearingNorm::Unit
    };
    let (positions, times) = match kind {
        0 => {
            let h = 0.5 * 3f64.sqrt() * l;
            (
                [[0.0; 3], [l, 0.0, 0.0], [0.5 * l, h, 0.0]],
                [0.0, t, 2.0 * t],
            )
        }
        1 => {
            let c = rng.random_range(0.0..=l);
            ([[0.0; 3], [l, 0.0, 0.0], [c, 0.0, 0.0]], [0.0, t, 2.0 * t])
        }
        _ => {
            let mut point = || [0; 3].map(|_| rng.random_range(0.0..3.0));
            let positions = [point(), point(), point()];
            (positions, [0; 3].map(|_| rng.random_range(0.0..3.0)))
        }
    };
    let detectors = Label::ALL.map(|label| {
        let i = label.index();
        DetectorSpec {
            gap: rng.random_range(0.0..3.0),
            smearing_width: rng.random_range(0.5..2.0),
            normalization,
            ..DetectorSpec::new(label, positions[i], times[i], rng.random_range(0.0..12.0))
        }
    });
    ScenarioConfig::new(detectors, Tolerances::default()).expect("random parameters are valid")
}

/// Arbitrary correlator values: Θ, ω ∈ [−0.3, 0.3], f ∈ (0, 1].
pub fn random_correlators(rng: &mut impl Rng) -> (CorrelatorSet, GapPhases) {
    let mut c = CorrelatorSet::trivial();
    for i in 0..3 {
        let f: f64 = rng.random_range(f64::MIN_POSITIVE..=1.0);
        c.log_f[i] = f.ln();
        c.theta[i] = rng.random_range(-0.3..0.3);
        c.omega[i] = rng.random_range(-0.3..0.3);
    }
    let phases = GapPhases([0; 3].map(|_| rng.random_range(-10.0..10.0)));
    (c, phases)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst value seen; compared against `tolerance`.
    pub observed: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub detail: String,
}

impl Check {
    fn at_most(name: &'static str, observed: f64, tolerance: f64, samples: usize) -> Check {
        Check {
            name,
            passed: observed <= tolerance,
            observed,
            tolerance,
            samples,
            detail: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    pub seed: u64,
    pub scenarios: usize,
    /// Test hook: negate Θ_AB before assembling each state.
    pub flip_theta: bool,
}

impl ValidationOptions {
    pub fn new(seed: u64) -> Self {
        ValidationOptions {
            seed,
            scenarios: DEFAULT_SCENARIOS,
            flip_theta: false,
        }
    }
}

struct Analysis {
    rho: DensityMatrix8,
    report: Result<EntanglementReport, String>,
}

fn analyze(s: &ScenarioConfig, flip_theta: bool) -> Result<Analysis, String> {
    let mut corr = correlators::correlators_for(s).map_err(|e| e.to_string())?;
    if flip_theta {
        corr.theta[Pair::AB.index()] = -corr.theta[Pair::AB.index()];
    }
    let rho = density::rho_sum(&corr, GapPhases::of(s));
    let report = entanglement::pi_tangle(&rho)
        .map(|r| r.relabel(s.permutation()))
        .map_err(|e| e.to_string());
    Ok(Analysis { rho, report })
}

/// Sorted spectra of ρ, of its three partial transposes and of its three
/// two-detector reductions.
fn spectra(rho: &DensityMatrix8) -> Vec<Vec<f64>> {
    let full = rho.to_binary_order();
    let mut out = vec![linalg::eigvals_hermitian(&full).unwrap_or_default()];
    for q in 0..3 {
        let pt = linalg::partial_transpose(&full, q).expect("three qubits");
        out.push(linalg::eigvals_hermitian(&pt).unwrap_or_default());
    }
    for p in Pair::ALL {
        out.push(linalg::eigvals_hermitian(&rho.partial_trace(p)).unwrap_or_default());
    }
    out
}

fn spectra_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        if x.len() != y.len() {
            return f64::INFINITY;
        }
        for (u, v) in x.iter().zip(y) {
            worst = worst.max((u - v).abs());
        }
    }
    worst
}

fn report_diff(
    a: &Result<EntanglementReport, String>,
    b: &Result<EntanglementReport, String>,
) -> f64 {
    match (a, b) {
        (Ok(x), Ok(y)) => x.max_abs_diff(y),
        _ => f64::INFINITY,
    }
}

fn with_detectors(s: &ScenarioConfig, f: impl Fn(DetectorSpec) -> DetectorSpec) -> ScenarioConfig {
    s.map_detectors(f)
        .expect("transformed scenario stays valid")
}

pub fn run_validation_suite(seed: u64) -> ValidationReport {
    run_validation_suite_with(ValidationOptions::new(seed))
}

pub fn run_validation_suite_with(opts: ValidationOptions) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut scenarios = vec![anchor_scenario()];
    scenarios.extend((0..opts.scenarios).map(|_| random_scenario(&mut rng)));
    let n = scenarios.len();

    let mut failures = Vec::new();
    let (mut herm, mut trace, mut neg_eig, mut parity) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut pairwise, mut pi_positive) = (0.0f64, 0usize);
    let (mut omega_inv, mut spectra_inv, mut translation, mut permutation) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut report_errors = 0usize;

    for s in &scenarios {
        let base = match analyze(s, opts.flip_theta) {
            Ok(a) => a,
            Err(e) => {
                failures.push(e);
                continue;
            }
        };
        match base.rho.diagnostics() {
            Ok(d) => {
                herm = herm.max(d.hermitian_defect);
                trace = trace.max(d.trace_defect);
                neg_eig = neg_eig.max(-d.min_eigenvalue);
                parity = parity.max(d.parity_defect);
            }
            Err(e) => failures.push(e.to_string()),
        }
        match &base.report {
            Ok(r) => {
                pairwise = pairwise.max(r.pairwise.iter().copied().fold(0.0, f64::max));
                if r.pi_tangle > 1e-6 {
                    pi_positive += 1;
                }
            }
            Err(_) => report_errors += 1,
        }

        let gaps = with_detectors(s, |d| DetectorSpec {
            gap: d.gap + 1.7 * d.label.index() as f64 - 0.9,
            ..d
        });
        if let Ok(other) = analyze(&gaps, opts.flip_theta) {
            omega_inv = omega_inv.max(report_diff(&base.report, &other.report));
            spectra_inv = spectra_inv.max(spectra_diff(&spectra(&base.rho), &spectra(&other.rho)));
        }

        let shifted = with_detectors(s, |d| DetectorSpec {
            position: [
                d.position[0] + 3.1,
                d.position[1] - 1.2,
                d.position[2] + 0.7,
            ],
            switch_time: d.switch_time + 2.3,
            ..d
        });
        if let Ok(other) = analyze(&shifted, opts.flip_theta) {
            translation = translation.max(report_diff(&base.report, &other.report));
        }

        // Relabel A→B→C→A and expect the report to move with the labels.
        let cycle = [Label::B, Label::C, Label::A];
        let relabelled = with_detectors(s, |d| DetectorSpec {
            label: cycle[d.label.index()],
            ..d
        });
        if let Ok(other) = analyze(&relabelled, opts.flip_theta) {
            let expected = base.report.clone().map(|r| r.relabel(cycle));
            permutation = permutation.max(report_diff(&expected, &other.report));
        }
    }

    let mut sum_closed: f64 = 0.0;
    let draws = opts.scenarios.max(16);
    for _ in 0..draws {
        let (mut corr, phases) = random_correlators(&mut rng);
        if opts.flip_theta {
            corr.theta[Pair::AB.index()] = -corr.theta[Pair::AB.index()];
        }
        let rho = density::rho_sum(&corr, phases);
        if opts.flip_theta {
            corr.theta[Pair::AB.index()] = -corr.theta[Pair::AB.index()];
        }
        for (i, j) in [(1, 1), (2, 2), (1, 5)] {
            let closed =
                density::element_closed_form((i, j), &corr, phases).expect("supported element");
            sum_closed = sum_closed.max((closed - rho.r(i, j)).norm());
        }
    }

    let mut cross: f64 = 0.0;
    let mut equal_time: f64 = 0.0;
    for s in scenarios.iter().take(64) {
        match correlators::correlators_with(s, CorrelatorMethod::CrossChecked) {
            Ok(c) => cross = cross.max(c.discrepancy),
            Err(e) => failures.push(e.to_string()),
        }
        let simultaneous = with_detectors(s, |d| DetectorSpec {
            switch_time: 0.0,
            ..d
        });
        for p in Pair::ALL {
            let (d, e) = p.labels();
            let g = PairGeometry::new(simultaneous.detector(d), simultaneous.detector(e));
            equal_time = equal_time.max(g.theta().abs());
            if let Ok(q) = g.theta_quadrature(s.tolerances.quadrature) {
                equal_time = equal_time.max(q.value.abs());
            }
        }
    }

    let mut checks = vec![
        Check::at_most("hermiticity", herm, density::HERMITIAN_TOL, n),
        Check::at_most("unit_trace", trace, density::TRACE_TOL, n),
        Check::at_most("positivity", neg_eig, density::PSD_TOL, n),
        Check::at_most("parity_pattern", parity, density::PARITY_TOL, n),
        Check::at_most("no_go_pairwise", pairwise, 1e-10, n),
        Check::at_most("sum_vs_closed_form", sum_closed, 1e-10, draws),
        Check::at_most(
            "correlator_cross_check",
            cross,
            correlators::CROSS_CHECK_TOL,
            64.min(n),
        ),
        Check::at_most(
            "equal_time_theta",
            equal_time,
            Tolerances::default().quadrature,
            64.min(n),
        ),
        Check::at_most("omega_invariance", omega_inv, 1e-10, n),
        Check::at_most("omega_invariance_spectra", spectra_inv, 1e-10, n),
        Check::at_most("translation_invariance", translation, 1e-10, n),
        Check::at_most("permutation_equivariance", permutation, 1e-10, n),
        Check::at_most(
            "pipeline_errors",
            (failures.len() + report_errors) as f64,
            0.0,
            n,
        ),
    ];
    if let Some(first) = failures.first() {
        checks.last_mut().unwrap().detail = first.clone();
    }
    checks[4].detail = format!("{pi_positive} of {n} scenarios have pi > 1e-6");
    ValidationReport {
        seed: opts.seed,
        checks,
    }
}
