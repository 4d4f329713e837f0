//! JSON-configured experiment runners.
//!
//! A config is parsed in three passes: its shape is checked against the
//! defaults of the named experiment (every unknown or mistyped path is
//! reported), it is merged over those defaults, and the merged values are
//! range-checked. The merged document is echoed next to the artifacts so a
//! run can be repeated exactly.

mod chua;
mod fhn;
mod hh;
mod kapitza;
mod lorenz;
mod observer;
mod probe;

pub use chua::{run_chua, ChuaConfig, ChuaReport};
pub use fhn::{run_fhn, FhnConfig, FhnReport};
pub use hh::{run_hh, HhConfig, HhReport};
pub use kapitza::{run_kapitza, KapitzaConfig, KapitzaReport};
pub use lorenz::{run_lorenz, LorenzConfig, LorenzReport};
pub use observer::{run_observer_experiment, ObserverConfig, ObserverReport};
pub use probe::{run_probe, ProbeConfig, ProbeReport, ProbeTarget};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Kapitza(KapitzaConfig),
    Fhn(FhnConfig),
    Hh(HhConfig),
    Chua(ChuaConfig),
    Lorenz(LorenzConfig),
    Observer(ObserverConfig),
    Probe(ProbeConfig),
}

pub const EXPERIMENTS: [&str; 7] = ["kapitza", "fhn", "hh", "chua", "lorenz", "observer", "probe"];

impl ExperimentConfig {
    pub fn default_for(name: &str) -> Option<Self> {
        Some(match name {
            "kapitza" => Self::Kapitza(KapitzaConfig::default()),
            "fhn" => Self::Fhn(FhnConfig::default()),
            "hh" => Self::Hh(HhConfig::default()),
            "chua" => Self::Chua(ChuaConfig::default()),
            "lorenz" => Self::Lorenz(LorenzConfig::default()),
            "observer" => Self::Observer(ObserverConfig::default()),
            "probe" => Self::Probe(ProbeConfig::default()),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Kapitza(_) => "kapitza",
            Self::Fhn(_) => "fhn",
            Self::Hh(_) => "hh",
            Self::Chua(_) => "chua",
            Self::Lorenz(_) => "lorenz",
            Self::Observer(_) => "observer",
            Self::Probe(_) => "probe",
        }
    }

    /// Range checks on the merged values, as `path: message` lines.
    pub fn validate(&self) -> Vec<String> {
        match self {
            Self::Kapitza(c) => c.validate(),
            Self::Fhn(c) => c.validate(),
            Self::Hh(c) => c.validate(),
            Self::Chua(c) => c.validate(),
            Self::Lorenz(c) => c.validate(),
            Self::Observer(c) => c.validate(),
            Self::Probe(c) => c.validate(),
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("configs are serializable")
    }

    pub fn run(&self) -> Result<Outcome> {
        match self {
            Self::Kapitza(c) => run_kapitza(c).map(Outcome::from_parts),
            Self::Fhn(c) => run_fhn(c).map(Outcome::from_parts),
            Self::Hh(c) => run_hh(c).map(Outcome::from_parts),
            Self::Chua(c) => run_chua(c).map(Outcome::from_parts),
            Self::Lorenz(c) => run_lorenz(c).map(Outcome::from_parts),
            Self::Observer(c) => run_observer_experiment(c).map(Outcome::from_parts),
            Self::Probe(c) => run_probe(c).map(Outcome::from_parts),
        }
    }
}

/// Report plus named CSV files.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    fn from_parts<R: Serialize>((report, files): (R, Vec<(String, String)>)) -> Self {
        Self { report: serde_json::to_value(report).expect("reports are serializable"), files }
    }
}

/// Parses, shape-checks, merges over defaults and range-checks a config.
pub fn parse_config(text: &str) -> std::result::Result<ExperimentConfig, Vec<String>> {
    let user: Value = serde_json::from_str(text).map_err(|e| vec![format!("$: invalid JSON: {e}")])?;
    let obj = match &user {
        Value::Object(o) => o,
        _ => return Err(vec!["$: config must be a JSON object".into()]),
    };
    let name = match obj.get("experiment") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(vec![format!("experiment: must be a string, one of {}", EXPERIMENTS.join(", "))]),
        None => return Err(vec![format!("experiment: required, one of {}", EXPERIMENTS.join(", "))]),
    };
    let Some(default) = ExperimentConfig::default_for(&name) else {
        return Err(vec![format!("experiment: unknown value {name:?}, expected one of {}", EXPERIMENTS.join(", "))]);
    };
    let base = default.to_json();
    let mut errors = Vec::new();
    check_shape(&user, &base, "", &mut errors);
    // Range checks still run after shape errors when the merged value deserializes.
    match serde_json::from_value::<ExperimentConfig>(merge(base, user)) {
        Ok(cfg) => {
            errors.extend(cfg.validate());
            if errors.is_empty() {
                Ok(cfg)
            } else {
                Err(errors)
            }
        }
        Err(e) if errors.is_empty() => Err(vec![format!("$: {e}")]),
        Err(_) => Err(errors),
    }
}

const TAGS: [&str; 4] = ["kind", "model", "method", "target"];

fn tag_of(v: &Map<String, Value>) -> Option<(&'static str, &Value)> {
    TAGS.iter().find_map(|t| v.get(*t).map(|x| (*t, x)))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn check_shape(user: &Value, base: &Value, path: &str, errors: &mut Vec<String>) {
    match (user, base) {
        (Value::Object(u), Value::Object(b)) => {
            if let (Some((t, ut)), Some((_, bt))) = (tag_of(u), tag_of(b)) {
                if ut != bt {
                    // A different variant: its fields are checked when deserializing.
                    let _ = t;
                    return;
                }
            }
            for (k, uv) in u {
                match b.get(k) {
                    Some(bv) => check_shape(uv, bv, &join(path, k), errors),
                    None => errors.push(format!("{}: unknown field", join(path, k))),
                }
            }
        }
        (Value::Array(u), Value::Array(b)) => {
            if let Some(b0) = b.first() {
                for (i, uv) in u.iter().enumerate() {
                    check_shape(uv, b0, &format!("{path}[{i}]"), errors);
                }
            }
        }
        (_, Value::Null) | (Value::Null, _) => {}
        (u, b) => {
            if kind(u) != kind(b) {
                errors.push(format!("{}: expected {}, got {}", if path.is_empty() { "$" } else { path }, kind(b), kind(u)));
            }
        }
    }
}

fn merge(base: Value, user: Value) -> Value {
    match (base, user) {
        (Value::Object(mut b), Value::Object(u)) => {
            if let (Some((_, bt)), Some((_, ut))) = (tag_of(&b), tag_of(&u)) {
                if bt != ut {
                    return Value::Object(u);
                }
            }
            for (k, uv) in u {
                let merged = match b.remove(&k) {
                    Some(bv) => merge(bv, uv),
                    None => uv,
                };
                b.insert(k, merged);
            }
            Value::Object(b)
        }
        (_, u) => u,
    }
}

/// Collects `path: message` lines for range checks.
#[derive(Default)]
pub(crate) struct Checks(pub Vec<String>);

impl Checks {
    pub fn positive(&mut self, path: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.0.push(format!("{path}: must be positive and finite, got {v}"));
        }
    }

    pub fn nonneg(&mut self, path: &str, v: f64) {
        if !(v >= 0.0 && v.is_finite()) {
            self.0.push(format!("{path}: must be nonnegative and finite, got {v}"));
        }
    }

    pub fn finite(&mut self, path: &str, v: f64) {
        if !v.is_finite() {
            self.0.push(format!("{path}: must be finite, got {v}"));
        }
    }

    pub fn that(&mut self, ok: bool, path: &str, msg: impl Into<String>) {
        if !ok {
            self.0.push(format!("{path}: {}", msg.into()));
        }
    }

    pub fn model(&mut self, path: &str, params: &crate::models::ModelParams) {
        for e in params.errors() {
            self.0.push(format!("{path}: {e}"));
        }
    }

    pub fn signal(&mut self, path: &str, s: &crate::signal::InputSignal) {
        if let Err(e) = s.validate() {
            self.0.push(format!("{path}: {e}"));
        }
    }

    pub fn policy(&mut self, path: &str, p: &crate::integrate::StepPolicy) {
        if let Err(e) = p.validate() {
            self.0.push(format!("{path}: {e}"));
        }
    }
}

/// Writes a CSV table with a header, one row per sample index.
pub(crate) fn csv_table(header: &[&str], rows: usize, stride: usize, cell: impl Fn(usize, usize) -> f64) -> String {
    use std::fmt::Write;
    let mut out = header.join(",");
    out.push('\n');
    let stride = stride.max(1);
    let mut i = 0;
    while i < rows {
        for j in 0..header.len() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", cell(i, j));
        }
        out.push('\n');
        if i + 1 < rows && i + stride >= rows {
            i = rows - 1;
        } else {
            i += stride;
        }
    }
    out
}

/// Last time in `times` at which `|e| >= band`, or the first time when it never happens.
pub(crate) fn settle_time(times: &[f64], errors: &[f64], band: f64) -> f64 {
    match errors.iter().rposition(|e| !(e.abs() < band)) {
        Some(i) => times[i],
        None => times.first().copied().unwrap_or(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_names_the_missing_field() {
        let err = parse_config("{}").unwrap_err();
        assert!(err[0].starts_with("experiment:"));
    }

    #[test]
    fn lists_every_offending_path() {
        let err = parse_config(r#"{"experiment": "kapitza", "omega": "fast", "bogus": 1}"#).unwrap_err();
        assert_eq!(err.len(), 2, "{err:?}");
        assert!(err.iter().any(|e| e.starts_with("omega:")));
        assert!(err.iter().any(|e| e.starts_with("bogus:")));
    }

    #[test]
    fn defaults_round_trip() {
        for name in EXPERIMENTS {
            let cfg = ExperimentConfig::default_for(name).unwrap();
            let text = serde_json::to_string(&cfg).unwrap();
            assert_eq!(parse_config(&text).unwrap(), cfg, "{name}");
            assert!(cfg.validate().is_empty(), "{name}: {:?}", cfg.validate());
        }
    }

    #[test]
    fn range_errors_are_reported() {
        let err = parse_config(r#"{"experiment": "kapitza", "omega": -1}"#).unwrap_err();
        assert!(err.iter().any(|e| e.starts_with("omega:")), "{err:?}");
    }
}
