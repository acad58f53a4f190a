//! Parameter grids over the triangle and line configurations, and a 1D
//! search for the coupling that maximizes the π-tangle.

use crate::correlators::CorrelatorSet;
use crate::entanglement::EntanglementReport;
use crate::pipeline::{self, PipelineError};
use crate::scenario::{
    DetectorSpec, Label, ScenarioConfig, ScenarioError, SmearingNorm, Tolerances,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

/// π below this is reported as exactly zero.
pub const PI_ZERO_THRESHOLD: f64 = 1e-12;

/// Golden-section stopping width in λ.
pub const LAMBDA_TOL: f64 = 1e-3;

/// Points in the coarse scan that precedes the golden-section search.
pub const PRESCAN_POINTS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("parameter {name} = {value} must be non-negative")]
    NegativeLength { name: &'static str, value: f64 },
    #[error("axis {axis}: {reason}")]
    BadAxis { axis: String, reason: String },
    #[error("axis {axis} has no meaning for the {configuration} configuration")]
    AxisNotApplicable {
        axis: Axis,
        configuration: Configuration,
    },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("sweep needs at least one configuration")]
    NoConfiguration,
    #[error("bracket [{lo}, {hi}] is not a valid coupling range")]
    BadBracket { lo: f64, hi: f64 },
    #[error("pi-tangle is zero on the whole bracket [{lo}, {hi}]")]
    NoEntanglement { lo: f64, hi: f64 },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Configuration {
    /// Equilateral triangle of side `L`, switching at `0, T, 2T`.
    Triangle,
    /// A at the origin, B at `L_AB`, C at `L_AC` on the same axis.
    Line,
}

impl Configuration {
    pub fn as_str(self) -> &'static str {
        match self {
            Configuration::Triangle => "triangle",
            Configuration::Line => "line",
        }
    }
}

impl std::fmt::Display for Configuration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Configuration {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "triangle" => Ok(Configuration::Triangle),
            "line" => Ok(Configuration::Line),
            other => Err(format!(
                "unknown configuration {other:?} (expected triangle or line)"
            )),
        }
    }
}

/// Sweepable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    L,
    T,
    Lambda,
    TC,
    /// `T_B = T_C` together, with `T_A` from the template.
    TBC,
    LAC,
    LAB,
    Sigma,
    Omega,
}

impl Axis {
    pub const ALL: [Axis; 9] = [
        Axis::L,
        Axis::T,
        Axis::Lambda,
        Axis::TC,
        Axis::TBC,
        Axis::LAC,
        Axis::LAB,
        Axis::Sigma,
        Axis::Omega,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::L => "L",
            Axis::T => "T",
            Axis::Lambda => "lambda",
            Axis::TC => "T_C",
            Axis::TBC => "T_BC",
            Axis::LAC => "L_AC",
            Axis::LAB => "L_AB",
            Axis::Sigma => "sigma",
            Axis::Omega => "Omega",
        }
    }

    pub fn applies_to(self, configuration: Configuration) -> bool {
        match self {
            Axis::L => configuration == Configuration::Triangle,
            Axis::LAC | Axis::LAB | Axis::TC | Axis::TBC => configuration == Configuration::Line,
            Axis::T | Axis::Lambda | Axis::Sigma | Axis::Omega => true,
        }
    }

    fn set(self, p: &mut Params, v: f64) {
        match self {
            Axis::L => p.l = v,
            Axis::T => p.t = v,
            Axis::Lambda => p.lambda = v,
            Axis::TC => p.t_c = Some(v),
            Axis::TBC => {
                p.t_b = Some(v);
                p.t_c = Some(v);
            }
            Axis::LAC => p.l_ac = Some(v),
            Axis::LAB => p.l_ab = v,
            Axis::Sigma => p.sigma = v,
            Axis::Omega => p.omega = v,
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axis::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Axis::ALL.iter().map(|a| a.as_str()).collect();
                format!("unknown axis {s:?} (expected one of {})", names.join(", "))
            })
    }
}

/// Every parameter the two configurations read. Switch times left as
/// `None` follow the staggered pattern `0, T, 2T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub l: f64,
    pub t: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub omega: f64,
    pub l_ab: f64,
    /// Defaults to the midpoint `L_AB / 2`.
    pub l_ac: Option<f64>,
    pub t_a: Option<f64>,
    pub t_b: Option<f64>,
    pub t_c: Option<f64>,
    pub normalization: SmearingNorm,
    pub tolerances: Tolerances,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            l: 0.4,
            t: 0.25,
            lambda: 1.0,
            sigma: 1.0,
            omega: 1.0,
            l_ab: 0.4,
            l_ac: None,
            t_a: None,
            t_b: None,
            t_c: None,
            normalization: SmearingNorm::Peak,
            tolerances: Tolerances::default(),
        }
    }
}

impl Params {
    fn times(&self) -> [f64; 3] {
        [
            self.t_a.unwrap_or(0.0),
            self.t_b.unwrap_or(self.t),
            self.t_c.unwrap_or(2.0 * self.t),
        ]
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64, SweepError> {
    if value < 0.0 {
        Err(SweepError::NegativeLength { name, value })
    } else {
        Ok(value)
    }
}

/// Concrete detectors for one configuration.
pub fn build_configuration(kind: Configuration, p: &Params) -> Result<ScenarioConfig, SweepError> {
    let positions = match kind {
        Configuration::Triangle => {
            let l = non_negative("L", p.l)?;
            [
                [0.0, 0.0, 0.0],
                [l, 0.0, 0.0],
                [0.5 * l, 0.5 * 3f64.sqrt() * l, 0.0],
            ]
        }
        Configuration::Line => {
            let l_ab = non_negative("L_AB", p.l_ab)?;
            let l_ac = non_negative("L_AC", p.l_ac.unwrap_or(0.5 * l_ab))?;
            [[0.0, 0.0, 0.0], [l_ab, 0.0, 0.0], [l_ac, 0.0, 0.0]]
        }
    };
    let times = p.times();
    let detectors = Label::ALL.map(|label| {
        let i = label.index();
        DetectorSpec {
            gap: p.omega,
            smearing_width: p.sigma,
            normalization: p.normalization,
            ..DetectorSpec::new(label, positions[i], times[i], p.lambda)
        }
    });
    Ok(ScenarioConfig::new(detectors, p.tolerances)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn new(axis: Axis, min: f64, max: f64, count: usize) -> Self {
        AxisRange {
            axis,
            min,
            max,
            count,
        }
    }

    fn validate(&self) -> Result<(), SweepError> {
        let bad = |reason: &str| SweepError::BadAxis {
            axis: self.axis.to_string(),
            reason: reason.to_string(),
        };
        if self.count < 2 {
            return Err(bad("count must be at least 2"));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(bad("range must be finite"));
        }
        if self.min > self.max {
            return Err(bad("min must not exceed max"));
        }
        Ok(())
    }

    /// Evenly spaced values, endpoints included exactly.
    pub fn values(&self) -> Vec<f64> {
        let n = self.count - 1;
        (0..=n)
            .map(|i| {
                if i == n {
                    self.max
                } else {
                    self.min + (self.max - self.min) * i as f64 / n as f64
                }
            })
            .collect()
    }
}

/// Measures to include in the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outputs {
    pub pi: bool,
    pub negativities: bool,
    pub correlators: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            pi: true,
            negativities: true,
            correlators: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub configurations: Vec<Configuration>,
    pub template: Params,
    pub axis1: AxisRange,
    pub axis2: Option<AxisRange>,
    pub outputs: Outputs,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.configurations.is_empty() {
            return Err(SweepError::NoConfiguration);
        }
        for range in std::iter::once(&self.axis1).chain(&self.axis2) {
            range.validate()?;
            for &configuration in &self.configurations {
                if !range.axis.applies_to(configuration) {
                    return Err(SweepError::AxisNotApplicable {
                        axis: range.axis,
                        configuration,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn axes(&self) -> Vec<AxisRange> {
        std::iter::once(self.axis1).chain(self.axis2).collect()
    }

    /// Parameter sets in row-major order (axis 2 varies fastest).
    pub fn grid(&self) -> Vec<(Vec<f64>, Params)> {
        let v1 = self.axis1.values();
        let v2 = self.axis2.map(|a| a.values());
        let mut out = Vec::new();
        for &x in &v1 {
            let mut p = self.template;
            self.axis1.axis.set(&mut p, x);
            match (&self.axis2, &v2) {
                (Some(a2), Some(v2)) => {
                    for &y in v2 {
                        let mut q = p;
                        a2.axis.set(&mut q, y);
                        out.push((vec![x, y], q));
                    }
                }
                _ => out.push((vec![x], p)),
            }
        }
        out
    }
}

/// Outcome of the full pipeline at one grid point for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub configuration: Configuration,
    /// Caller-labelled measures; `None` when the point failed.
    pub report: Option<EntanglementReport>,
    /// Canonical-order correlators.
    pub correlators: Option<CorrelatorSet>,
    pub quadrature_err: f64,
    pub error: Option<String>,
}

impl PointResult {
    /// π with the zero threshold applied.
    pub fn pi(&self) -> f64 {
        match &self.report {
            Some(r) if r.pi_tangle >= PI_ZERO_THRESHOLD => r.pi_tangle,
            Some(_) => 0.0,
            None => f64::NAN,
        }
    }

    pub fn pi_is_zero(&self) -> bool {
        self.report.is_some_and(|r| r.pi_tangle < PI_ZERO_THRESHOLD)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axes: Vec<f64>,
    pub results: Vec<PointResult>,
    pub wall_time_s: f64,
}

pub fn evaluate_point(configuration: Configuration, p: &Params) -> PointResult {
    let outcome = build_configuration(configuration, p).and_then(|s| Ok(pipeline::evaluate(&s)?));
    match outcome {
        Ok(e) => PointResult {
            configuration,
            report: Some(e.report),
            correlators: Some(e.correlators),
            quadrature_err: e.correlators.err,
            error: None,
        },
        Err(err) => PointResult {
            configuration,
            report: None,
            correlators: None,
            quadrature_err: f64::NAN,
            error: Some(err.to_string()),
        },
    }
}

/// Evaluate every grid point in parallel; rows come back in grid order and
/// failures are recorded per row.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    let grid = spec.grid();
    Ok(grid
        .par_iter()
        .map(|(axes, p)| {
            let start = Instant::now();
            let results = spec
                .configurations
                .iter()
                .map(|&c| evaluate_point(c, p))
                .collect();
            SweepRow {
                axes: axes.clone(),
                results,
                wall_time_s: start.elapsed().as_secs_f64(),
            }
        })
        .collect())
}

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Flag(Option<bool>),
    Text(Option<String>),
}

impl Cell {
    /// Seventeen significant digits, enough to round-trip any `f64`.
    fn to_csv(&self) -> String {
        match self {
            Cell::Number(v) if v.is_nan() => "NaN".to_string(),
            Cell::Number(v) => format!("{v:.16e}"),
            Cell::Flag(Some(b)) => u8::from(*b).to_string(),
            Cell::Flag(None) | Cell::Text(None) => String::new(),
            Cell::Text(Some(t)) => t.clone(),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        use serde_json::Value;
        match self {
            Cell::Number(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Flag(b) => b.map_or(Value::Null, Value::Bool),
            Cell::Text(t) => t.clone().map_or(Value::Null, Value::String),
        }
    }
}

const NEGATIVITY_COLUMNS: [&str; 6] = ["N_A_BC", "N_B_AC", "N_C_AB", "N_A_B", "N_A_C", "N_B_C"];
const CORRELATOR_COLUMNS: [&str; 9] = [
    "log_f_A", "log_f_B", "log_f_C", "theta_AB", "theta_AC", "theta_BC", "omega_AB", "omega_AC",
    "omega_BC",
];

/// Column names and cells shared by the CSV and JSON writers. Measure
/// columns get a `_triangle`/`_line` suffix when the spec has several
/// configurations. Wall times are included only on request, so the default
/// output is reproducible byte for byte.
pub fn table(
    spec: &SweepSpec,
    rows: &[SweepRow],
    with_timing: bool,
) -> (Vec<String>, Vec<Vec<Cell>>) {
    let suffix = |c: Configuration| {
        if spec.configurations.len() > 1 {
            format!("_{c}")
        } else {
            String::new()
        }
    };
    let mut header: Vec<String> = spec.axes().iter().map(|a| a.axis.to_string()).collect();
    for &c in &spec.configurations {
        let s = suffix(c);
        if spec.outputs.pi {
            header.push(format!("pi{s}"));
            header.push(format!("pi_is_zero{s}"));
        }
        if spec.outputs.negativities {
            header.extend(NEGATIVITY_COLUMNS.iter().map(|n| format!("{n}{s}")));
        }
        if spec.outputs.correlators {
            header.extend(CORRELATOR_COLUMNS.iter().map(|n| format!("{n}{s}")));
        }
        header.push(format!("quadrature_err{s}"));
        header.push(format!("error{s}"));
    }
    if with_timing {
        header.push("wall_time_s".into());
    }

    let mut cells = Vec::with_capacity(rows.len());
    for row in rows {
        let mut fields: Vec<Cell> = row.axes.iter().map(|&v| Cell::Number(v)).collect();
        for r in &row.results {
            if spec.outputs.pi {
                fields.push(Cell::Number(r.pi()));
                fields.push(Cell::Flag(r.report.map(|_| r.pi_is_zero())));
            }
            if spec.outputs.negativities {
                let neg = r
                    .report
                    .map(|rep| {
                        let j = rep.to_json_schema().negativity;
                        [j.a_bc, j.b_ac, j.c_ab, j.a_b, j.a_c, j.b_c]
                    })
                    .unwrap_or([f64::NAN; 6]);
                fields.extend(neg.map(Cell::Number));
            }
            if spec.outputs.correlators {
                let c = r
                    .correlators
                    .map(|c| {
                        let mut all = [0.0; 9];
                        all[..3].copy_from_slice(&c.log_f);
                        all[3..6].copy_from_slice(&c.theta);
                        all[6..].copy_from_slice(&c.omega);
                        all
                    })
                    .unwrap_or([f64::NAN; 9]);
                fields.extend(c.map(Cell::Number));
            }
            fields.push(Cell::Number(r.quadrature_err));
            fields.push(Cell::Text(r.error.clone()));
        }
        if with_timing {
            fields.push(Cell::Number(row.wall_time_s));
        }
        cells.push(fields);
    }
    (header, cells)
}

pub fn write_csv(spec: &SweepSpec, rows: &[SweepRow], with_timing: bool) -> String {
    let (header, cells) = table(spec, rows, with_timing);
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(&header).expect("writing to memory");
    for row in cells {
        out.write_record(row.iter().map(Cell::to_csv))
            .expect("writing to memory");
    }
    String::from_utf8(out.into_inner().expect("writing to memory")).expect("fields are UTF-8")
}

/// The CSV columns as an array of objects; NaN and missing values become null.
pub fn write_json(spec: &SweepSpec, rows: &[SweepRow], with_timing: bool) -> String {
    let (header, cells) = table(spec, rows, with_timing);
    let records: Vec<serde_json::Map<String, serde_json::Value>> = cells
        .iter()
        .map(|row| {
            header
                .iter()
                .cloned()
                .zip(row.iter().map(Cell::to_json))
                .collect()
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("plain values serialize")
}

/// Named parameter sets for the standard figure sweeps. All use the
/// unit-integral smearing profile.
pub const PRESETS: [&str; 5] = ["fig2", "fig3", "fig4", "fig5", "fig5-reversed"];

pub fn preset(name: &str) -> Result<SweepSpec, SweepError> {
    let base = Params {
        normalization: SmearingNorm::Unit,
        ..Params::default()
    };
    let spec = match name {
        "fig2" => SweepSpec {
            configurations: vec![Configuration::Triangle],
            template: Params {
                lambda: 10.0,
                ..base
            },
            axis1: AxisRange::new(Axis::L, 0.1, 3.0, 101),
            axis2: Some(AxisRange::new(Axis::T, 0.0, 2.5, 101)),
            outputs: Outputs::default(),
        },
        "fig3" => SweepSpec {
            configurations: vec![Configuration::Triangle],
            template: Params {
                lambda: 10.0,
                t: 0.25,
                ..base
            },
            axis1: AxisRange::new(Axis::L, 0.0, 3.0, 201),
            axis2: None,
            outputs: Outputs::default(),
        },
        "fig4" => SweepSpec {
            configurations: vec![Configuration::Triangle, Configuration::Line],
            template: Params {
                l: 0.4,
                l_ab: 0.4,
                t: 0.25,
                ..base
            },
            axis1: AxisRange::new(Axis::Lambda, 0.1, 30.0, 201),
            axis2: None,
            outputs: Outputs {
                pi: true,
                negativities: false,
                correlators: false,
            },
        },
        "fig5" | "fig5-reversed" => {
            let (axis, t_b) = if name == "fig5" {
                (Axis::TC, Some(0.0))
            } else {
                (Axis::TBC, None)
            };
            SweepSpec {
                configurations: vec![Configuration::Line],
                template: Params {
                    lambda: 2.5,
                    l_ab: 2.8,
                    t_a: Some(0.0),
                    t_b,
                    ..base
                },
                axis1: AxisRange::new(axis, 0.0, 3.0, 101),
                axis2: Some(AxisRange::new(Axis::LAC, 0.0, 2.8, 101)),
                outputs: Outputs::default(),
            }
        }
        other => return Err(SweepError::UnknownPreset(other.to_string())),
    };
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub lambda: f64,
    pub pi: f64,
    /// False when the coarse scan or the refinement contradicted a single
    /// maximum; the incumbent best point is returned in that case.
    pub unimodal: bool,
    pub evaluations: usize,
}

/// π at coupling `lambda` with everything else from `template`.
pub fn pi_at(
    configuration: Configuration,
    template: &Params,
    lambda: f64,
) -> Result<f64, SweepError> {
    let p = Params {
        lambda,
        ..*template
    };
    let e = pipeline::evaluate(&build_configuration(configuration, &p)?)?;
    Ok(e.report.pi_tangle)
}

/// Maximize π over λ in `bracket` by a coarse scan followed by golden-section refinement.
pub fn optimize_lambda(
    configuration: Configuration,
    template: &Params,
    bracket: (f64, f64),
) -> Result<Optimum, SweepError> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
        return Err(SweepError::BadBracket { lo, hi });
    }
    let scan = AxisRange::new(Axis::Lambda, lo, hi, PRESCAN_POINTS).values();
    let values = scan
        .par_iter()
        .map(|&l| pi_at(configuration, template, l))
        .collect::<Result<Vec<_>, _>>()?;
    let mut evaluations = scan.len();

    let (best, &best_pi) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("scan is non-empty");
    if best_pi < PI_ZERO_THRESHOLD {
        return Err(SweepError::NoEntanglement { lo, hi });
    }
    let rising = values[..=best].windows(2).all(|w| w[1] >= w[0]);
    let falling = values[best..].windows(2).all(|w| w[1] <= w[0]);
    let mut unimodal = rising && falling;

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (
        scan[best.saturating_sub(1)],
        scan[(best + 1).min(scan.len() - 1)],
    );
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = pi_at(configuration, template, x1)?;
    let mut f2 = pi_at(configuration, template, x2)?;
    evaluations += 2;
    while b - a > LAMBDA_TOL {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = pi_at(configuration, template, x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = pi_at(configuration, template, x1)?;
        }
        evaluations += 1;
    }
    let (lambda, pi) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if pi < best_pi {
        unimodal = false;
        return Ok(Optimum {
            lambda: scan[best],
            pi: best_pi,
            unimodal,
            evaluations,
        });
    }
    Ok(Optimum {
        lambda,
        pi,
        unimodal,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_geometry() {
        let s = build_configuration(Configuration::Triangle, &Params::default()).unwrap();
        let [a, b, c] = s.detectors;
        for (d, e) in [(a, b), (a, c), (b, c)] {
            assert!((d.distance_to(&e) - 0.4).abs() < 1e-15);
        }
        assert_eq!(
            [a.switch_time, b.switch_time, c.switch_time],
            [0.0, 0.25, 0.5]
        );
    }

    #[test]
    fn line_geometry() {
        let p = Params {
            l_ab: 2.8,
            l_ac: Some(1.4),
            t_a: Some(0.0),
            t_b: Some(0.0),
            t_c: Some(0.7),
            ..Params::default()
        };
        let s = build_configuration(Configuration::Line, &p).unwrap();
        let (a, b, c) = (s.detectors[0], s.detectors[1], s.detectors[2]);
        assert_eq!(c.label, Label::C);
        assert!((a.distance_to(&c) - 1.4).abs() < 1e-15);
        assert!((b.distance_to(&c) - 1.4).abs() < 1e-15);
        // C may sit beyond B; only negative lengths are rejected.
        let outside = Params {
            l_ac: Some(4.0),
            ..p
        };
        assert!(build_configuration(Configuration::Line, &outside).is_ok());
        let negative = Params {
            l_ac: Some(-0.1),
            ..p
        };
        assert!(matches!(
            build_configuration(Configuration::Line, &negative),
            Err(SweepError::NegativeLength { name: "L_AC", .. })
        ));
    }

    #[test]
    fn degenerate_triangle() {
        let p = Params {
            l: 0.0,
            t: 0.0,
            ..Params::default()
        };
        let s = build_configuration(Configuration::Triangle, &p).unwrap();
        assert_eq!(s.detectors[0].distance_to(&s.detectors[2]), 0.0);
        assert!(pipeline::evaluate(&s).is_ok());
    }

    #[test]
    fn axis_values_hit_endpoints() {
        let v = AxisRange::new(Axis::L, 0.1, 3.0, 101).values();
        assert_eq!(v.len(), 101);
        assert_eq!(v[0], 0.1);
        assert_eq!(v[100], 3.0);
        assert_eq!(
            AxisRange::new(Axis::T, 0.5, 0.5, 2).values(),
            vec![0.5, 0.5]
        );
    }

    #[test]
    fn spec_validation() {
        let mut spec = preset("fig3").unwrap();
        assert!(spec.validate().is_ok());
        spec.axis1 = AxisRange::new(Axis::LAC, 0.0, 1.0, 5);
        assert!(matches!(
            spec.validate(),
            Err(SweepError::AxisNotApplicable { .. })
        ));
        spec.axis1 = AxisRange::new(Axis::L, 0.0, 1.0, 1);
        assert!(matches!(spec.validate(), Err(SweepError::BadAxis { .. })));
        spec.axis1 = AxisRange::new(Axis::L, 1.0, 0.0, 3);
        assert!(matches!(spec.validate(), Err(SweepError::BadAxis { .. })));
        assert!(matches!(preset("fig9"), Err(SweepError::UnknownPreset(_))));
        for name in PRESETS {
            assert!(preset(name).unwrap().validate().is_ok(), "{name}");
        }
        assert_eq!("T_BC".parse::<Axis>(), Ok(Axis::TBC));
        assert!("x".parse::<Axis>().is_err());
    }

    #[test]
    fn grid_is_row_major() {
        let spec = SweepSpec {
            configurations: vec![Configuration::Triangle],
            template: Params::default(),
            axis1: AxisRange::new(Axis::L, 0.0, 1.0, 2),
            axis2: Some(AxisRange::new(Axis::T, 0.0, 2.0, 3)),
            outputs: Outputs::default(),
        };
        let axes: Vec<Vec<f64>> = spec.grid().into_iter().map(|(a, _)| a).collect();
        assert_eq!(
            axes,
            vec![
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, 2.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
                vec![1.0, 2.0]
            ]
        );
    }

    #[test]
    fn row_errors_do_not_abort() {
        let spec = SweepSpec {
            configurations: vec![Configuration::Line],
            template: Params {
                l_ac: Some(0.2),
                ..Params::default()
            },
            axis1: AxisRange::new(Axis::LAB, 0.0, 1.0, 3),
            axis2: None,
            outputs: Outputs::default(),
        };
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.results[0].error.is_none()));
        let spec = SweepSpec {
            axis1: AxisRange::new(Axis::LAC, -1.0, 1.0, 3),
            ..spec
        };
        let rows = run_sweep(&spec).unwrap();
        assert!(rows[0].results[0]
            .error
            .as_deref()
            .unwrap()
            .contains("L_AC"));
        assert!(rows[1].results[0].report.is_some());
        let csv = write_csv(&spec, &rows, false);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().contains("NaN"));
    }

    #[test]
    fn zero_coupling_has_zero_pi() {
        assert_eq!(
            pi_at(Configuration::Triangle, &Params::default(), 0.0).unwrap(),
            0.0
        );
        let err = optimize_lambda(
            Configuration::Triangle,
            &Params {
                l: 30.0,
                ..Params::default()
            },
            (0.0, 0.5),
        );
        assert!(matches!(err, Err(SweepError::NoEntanglement { .. })));
        assert!(matches!(
            optimize_lambda(Configuration::Triangle, &Params::default(), (1.0, 1.0)),
            Err(SweepError::BadBracket { .. })
        ));
    }
}
