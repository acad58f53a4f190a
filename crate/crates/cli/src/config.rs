//! Flat `key = value` configuration files with dotted keys.
//!
//! ```text
//! # lengths and times in units of the switching strength η
//! detector.A.position = "0 0 0"
//! detector.A.time = 0
//! detector.A.coupling = 10
//! detector.A.gap = 1
//! detector.A.sigma = 1
//! detector.A.normalization = unit
//! tolerance.quadrature = 1e-10
//! tolerance.eigen = 1e-12
//!
//! template.configuration = "triangle,line"
//! template.lambda = 10
//! template.L = 0.4
//! axis1 = "lambda 0.1 30 201"
//! axis2 = "T 0 2.5 101"
//! outputs = "pi,negativities"
//! bracket = "5 30"
//! ```
//!
//! `smearing.normalization` sets the default profile for every detector and
//! for the template.

use harvest_core::scenario::{
    DetectorSpec, Label, ScenarioConfig, ScenarioError, SmearingNorm, Tolerances,
};
use harvest_core::sweep::{Axis, AxisRange, Configuration, Outputs, Params};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: {key}: {message}")]
    BadValue {
        line: usize,
        key: String,
        message: String,
    },
    #[error("line {line}: {key} given twice")]
    Duplicate { line: usize, key: String },
    #[error("missing {0}")]
    Missing(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct DetectorFields {
    position: Option<[f64; 3]>,
    time: Option<f64>,
    gap: Option<f64>,
    coupling: Option<f64>,
    sigma: Option<f64>,
    normalization: Option<SmearingNorm>,
}

/// Everything a config file can set. Each subcommand takes the parts it needs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    detectors: BTreeMap<Label, DetectorFields>,
    pub tolerances: Tolerances,
    pub normalization: Option<SmearingNorm>,
    template: BTreeMap<String, f64>,
    pub configurations: Vec<Configuration>,
    template_normalization: Option<SmearingNorm>,
    pub axis1: Option<AxisRange>,
    pub axis2: Option<AxisRange>,
    pub outputs: Option<Outputs>,
    pub bracket: Option<(f64, f64)>,
}

const TEMPLATE_KEYS: [&str; 10] = [
    "L", "T", "lambda", "sigma", "Omega", "L_AB", "L_AC", "T_A", "T_B", "T_C",
];

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("{s:?} is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split_whitespace().map(number).collect()
}

pub fn parse_axis(s: &str) -> Result<AxisRange, String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    let [name, min, max, count] = parts[..] else {
        return Err(format!("{s:?} should be `NAME MIN MAX COUNT`"));
    };
    let count: usize = count
        .parse()
        .map_err(|_| format!("count {count:?} is not a positive integer"))?;
    Ok(AxisRange::new(
        name.parse::<Axis>()?,
        number(min)?,
        number(max)?,
        count,
    ))
}

pub fn parse_outputs(s: &str) -> Result<Outputs, String> {
    let mut out = Outputs {
        pi: false,
        negativities: false,
        correlators: false,
    };
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        match item {
            "pi" => out.pi = true,
            "negativities" => out.negativities = true,
            "correlators" => out.correlators = true,
            other => {
                return Err(format!(
                    "unknown output {other:?} (expected pi, negativities, correlators)"
                ))
            }
        }
    }
    Ok(out)
}

pub fn parse_bracket(s: &str) -> Result<(f64, f64), String> {
    match numbers(&s.replace(':', " "))?[..] {
        [lo, hi] => Ok((lo, hi)),
        _ => Err(format!("{s:?} should be two numbers `LO HI`")),
    }
}

pub fn parse_configurations(s: &str) -> Result<Vec<Configuration>, String> {
    s.split(',').map(|c| c.trim().parse()).collect()
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    v.strip_prefix('"')
        .and_then(|x| x.strip_suffix('"'))
        .unwrap_or(v)
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), unquote(value));
            if seen.insert(key.to_string(), line).is_some() {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
            let bad = |message: String| ConfigError::BadValue {
                line,
                key: key.to_string(),
                message,
            };
            let unknown = || ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            };
            let parts: Vec<&str> = key.split('.').collect();
            match parts[..] {
                ["detector", label, field] => {
                    let label: Label = label.parse().map_err(|_| unknown())?;
                    let d = cfg.detectors.entry(label).or_default();
                    match field {
                        "position" => match numbers(value).map_err(bad)?[..] {
                            [x, y, z] => d.position = Some([x, y, z]),
                            _ => return Err(bad("expected three coordinates".into())),
                        },
                        "time" => d.time = Some(number(value).map_err(bad)?),
                        "gap" => d.gap = Some(number(value).map_err(bad)?),
                        "coupling" => d.coupling = Some(number(value).map_err(bad)?),
                        "sigma" => d.sigma = Some(number(value).map_err(bad)?),
                        "normalization" => d.normalization = Some(value.parse().map_err(bad)?),
                        _ => return Err(unknown()),
                    }
                }
                ["tolerance", "quadrature"] => {
                    cfg.tolerances.quadrature = number(value).map_err(bad)?
                }
                ["tolerance", "eigen"] => cfg.tolerances.eigen = number(value).map_err(bad)?,
                ["smearing", "normalization"] => {
                    cfg.normalization = Some(value.parse().map_err(bad)?)
                }
                ["template", "configuration"] => {
                    cfg.configurations = parse_configurations(value).map_err(bad)?
                }
                ["template", "normalization"] => {
                    cfg.template_normalization = Some(value.parse().map_err(bad)?)
                }
                ["template", name] if TEMPLATE_KEYS.contains(&name) => {
                    cfg.template
                        .insert(name.to_string(), number(value).map_err(bad)?);
                }
                ["axis1"] => cfg.axis1 = Some(parse_axis(value).map_err(bad)?),
                ["axis2"] => cfg.axis2 = Some(parse_axis(value).map_err(bad)?),
                ["outputs"] => cfg.outputs = Some(parse_outputs(value).map_err(bad)?),
                ["bracket"] => cfg.bracket = Some(parse_bracket(value).map_err(bad)?),
                _ => return Err(unknown()),
            }
        }
        Ok(cfg)
    }

    pub fn has_detectors(&self) -> bool {
        !self.detectors.is_empty()
    }

    /// The three detectors, validated and sorted into switching order.
    pub fn scenario(&self) -> Result<ScenarioConfig, ConfigError> {
        let mut raw = Vec::new();
        for label in Label::ALL {
            let d = self
                .detectors
                .get(&label)
                .ok_or_else(|| ConfigError::Missing(format!("detector.{label}")))?;
            let position = d
                .position
                .ok_or_else(|| ConfigError::Missing(format!("detector.{label}.position")))?;
            let coupling = d
                .coupling
                .ok_or_else(|| ConfigError::Missing(format!("detector.{label}.coupling")))?;
            let base = DetectorSpec::new(label, position, d.time.unwrap_or(0.0), coupling);
            raw.push(DetectorSpec {
                gap: d.gap.unwrap_or(base.gap),
                smearing_width: d.sigma.unwrap_or(base.smearing_width),
                normalization: d.normalization.or(self.normalization).unwrap_or_default(),
                ..base
            });
        }
        let raw: [DetectorSpec; 3] = raw.try_into().expect("three labels");
        Ok(ScenarioConfig::new(raw, self.tolerances)?)
    }

    /// Sweep template: defaults overridden by `template.*` keys.
    pub fn template(&self) -> Params {
        let get = |k: &str| self.template.get(k).copied();
        let d = Params::default();
        Params {
            l: get("L").unwrap_or(d.l),
            t: get("T").unwrap_or(d.t),
            lambda: get("lambda").unwrap_or(d.lambda),
            sigma: get("sigma").unwrap_or(d.sigma),
            omega: get("Omega").unwrap_or(d.omega),
            l_ab: get("L_AB").unwrap_or(d.l_ab),
            l_ac: get("L_AC"),
            t_a: get("T_A"),
            t_b: get("T_B"),
            t_c: get("T_C"),
            normalization: self
                .template_normalization
                .or(self.normalization)
                .unwrap_or_default(),
            tolerances: self.tolerances,
        }
    }
}

/// A commented config for a concrete scenario, readable by [`Config::parse`].
pub fn render_scenario(s: &ScenarioConfig) -> String {
    let mut out = String::from(
        "# harvest scenario; positions, times and widths in units of eta, gaps in 1/eta\n",
    );
    let mut detectors = s.detectors;
    detectors.sort_by_key(|d| d.label);
    for d in detectors {
        let l = d.label;
        let [x, y, z] = d.position;
        out += &format!("detector.{l}.position = \"{x:?} {y:?} {z:?}\"\n");
        out += &format!("detector.{l}.time = {:?}\n", d.switch_time);
        out += &format!("detector.{l}.gap = {:?}\n", d.gap);
        out += &format!("detector.{l}.coupling = {:?}\n", d.coupling);
        out += &format!("detector.{l}.sigma = {:?}\n", d.smearing_width);
        out += &format!(
            "detector.{l}.normalization = {}\n",
            d.normalization.as_str()
        );
    }
    out += &format!("tolerance.quadrature = {:?}\n", s.tolerances.quadrature);
    out += &format!("tolerance.eigen = {:?}\n", s.tolerances.eigen);
    out
}
