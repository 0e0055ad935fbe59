//! Feature schemas and the line-oriented schema file format.
//!
//! One declaration per line, `#` starts a comment:
//!
//! ```text
//! <name> binary [missing]
//! <name> categorical <v1> <v2> ... [missing]
//! <name> continuous [<min> <max>] [missing]
//! <name> class <v1> <v2> ...     # single multiclass/binary target column
//! <name> label                   # one binary target column (repeatable)
//! ```
//!
//! A two-valued `class` declares a binary task with a single output whose
//! positive class is the first listed value. Several `label` lines declare a
//! multi-label task. A continuous feature without an explicit range takes its
//! range from the training data. The literal token `missing` (always last)
//! marks a feature that may be absent in the data.

use crate::error::{NlnError, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureKind {
    Binary,
    Categorical { values: Vec<String> },
    Continuous { min: Option<f64>, max: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
    pub allows_missing: bool,
}

/// Target description: either one categorical class column (one-hot targets,
/// a single output for the two-class case) or a list of binary label columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TargetSpec {
    Class { name: String, values: Vec<String> },
    Labels { names: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<Feature>,
    pub target: TargetSpec,
}

/// A single observed feature value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    /// Probability of presence; binary data uses 0 or 1.
    Binary(f64),
    /// Index into the declared value list.
    Categorical(u32),
    Continuous(f64),
    Missing,
}

impl FeatureSchema {
    pub fn new(features: Vec<Feature>, target: TargetSpec) -> Result<Self> {
        let schema = Self { features, target };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(NlnError::Schema("schema declares no features".into()));
        }
        let mut names: Vec<&str> = self.features.iter().map(|f| f.name.as_str()).collect();
        match &self.target {
            TargetSpec::Class { name, values } => {
                names.push(name);
                if values.len() < 2 {
                    return Err(NlnError::Schema(format!(
                        "class {name} needs at least two values"
                    )));
                }
            }
            TargetSpec::Labels { names: labels } => {
                if labels.is_empty() {
                    return Err(NlnError::Schema("no target columns declared".into()));
                }
                names.extend(labels.iter().map(|s| s.as_str()));
            }
        }
        let mut sorted = names.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(NlnError::Schema("duplicate column name".into()));
        }
        for f in &self.features {
            match &f.kind {
                FeatureKind::Categorical { values } => {
                    if values.is_empty() {
                        return Err(NlnError::Schema(format!("{}: empty value list", f.name)));
                    }
                    let mut v = values.clone();
                    v.sort_unstable();
                    if v.windows(2).any(|w| w[0] == w[1]) {
                        return Err(NlnError::Schema(format!("{}: duplicate value", f.name)));
                    }
                }
                FeatureKind::Continuous {
                    min: Some(lo),
                    max: Some(hi),
                } if lo >= hi => {
                    return Err(NlnError::Schema(format!(
                        "{}: degenerate range [{lo}, {hi}]",
                        f.name
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Number of output nodes: 1 for a two-class task, one per class or label
    /// otherwise.
    pub fn n_targets(&self) -> usize {
        match &self.target {
            TargetSpec::Class { values, .. } => {
                if values.len() == 2 {
                    1
                } else {
                    values.len()
                }
            }
            TargetSpec::Labels { names } => names.len(),
        }
    }

    pub fn target_names(&self) -> Vec<String> {
        match &self.target {
            TargetSpec::Class { values, .. } => {
                if values.len() == 2 {
                    vec![values[0].clone()]
                } else {
                    values.clone()
                }
            }
            TargetSpec::Labels { names } => names.clone(),
        }
    }

    pub fn is_multiclass(&self) -> bool {
        matches!(&self.target, TargetSpec::Class { values, .. } if values.len() > 2)
    }

    pub fn feature(&self, name: &str) -> Option<(usize, &Feature)> {
        self.features
            .iter()
            .enumerate()
            .find(|(_, f)| f.name == name)
    }

    /// Binary features that may be missing behave as two-valued categoricals;
    /// this returns the kind a model should build encoders for.
    pub fn effective_kind(&self, idx: usize) -> FeatureKind {
        let f = &self.features[idx];
        match &f.kind {
            FeatureKind::Binary if f.allows_missing => FeatureKind::Categorical {
                values: vec!["0".into(), "1".into()],
            },
            k => k.clone(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut features = Vec::new();
        let mut class: Option<(String, Vec<String>)> = None;
        let mut labels: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tok = line.split_whitespace();
            let name = tok.next().unwrap().to_string();
            let kind = tok.next().ok_or_else(|| {
                NlnError::Schema(format!("line {}: missing kind for {name}", lineno + 1))
            })?;
            let mut rest: Vec<&str> = tok.collect();
            let allows_missing = rest.last() == Some(&"missing");
            if allows_missing {
                rest.pop();
            }
            match kind {
                "binary" => {
                    if !rest.is_empty() {
                        return Err(NlnError::Schema(format!(
                            "line {}: unexpected tokens after binary",
                            lineno + 1
                        )));
                    }
                    features.push(Feature {
                        name,
                        kind: FeatureKind::Binary,
                        allows_missing,
                    });
                }
                "categorical" => {
                    if rest.is_empty() {
                        return Err(NlnError::Schema(format!(
                            "line {}: categorical {name} lists no values",
                            lineno + 1
                        )));
                    }
                    features.push(Feature {
                        name,
                        kind: FeatureKind::Categorical {
                            values: rest.iter().map(|s| s.to_string()),
                        },
                        allows_missing,
                    });
                }
                "continuous" => {
                    let (min, max) = match rest.len() {
                        0 => (None, None),
                        2 => {
                            let lo = parse_float(rest[0], lineno)?;
                            let hi = parse_float(rest[1], lineno)?;
                            (Some(lo), Some(hi))
                        }
                        _ => {
                            return Err(NlnError::Schema(format!(
                                "line {}: continuous takes zero or two range bounds",
                                lineno + 1
                            )))
                        }
                    };
                    features.push(Feature {
                        name,
                        kind: FeatureKind::Continuous { min, max },
                        allows_missing,
                    });
                }
                "class" => {
                    if class.is_some() {
                        return Err(NlnError::Schema("more than one class column".into()));
                    }
                    class = Some((name, rest.iter().map(|s| s.to_string()).collect()));
                }
                "label" => {
                    if !rest.is_empty() {
                        return Err(NlnError::Schema(format!(
                            "line {}: label takes no arguments",
                            lineno + 1
                        )));
                    }
                    labels.push(name);
                }
                other => {
                    return Err(NlnError::Schema(format!(
                        "line {}: unknown kind {other}",
                        lineno + 1
                    )))
                }
            }
        }
        let target = match (class, labels.is_empty()) {
            (Some((name, values)), true) => TargetSpec::Class { name, values },
            (None, false) => TargetSpec::Labels { names: labels },
            (Some(_), false) => {
                return Err(NlnError::Schema(
                    "schema mixes a class column with label columns".into(),
                ))
            }
            (None, true) => return Err(NlnError::Schema("no target declared".into())),
        };
        Self::new(features, target)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for f in &self.features {
            let _ = write!(out, "{} ", f.name);
            match &f.kind {
                FeatureKind::Binary => out.push_str("binary"),
                FeatureKind::Categorical { values } => {
                    let _ = write!(out, "categorical {}", values.join(" "));
                }
                FeatureKind::Continuous { min, max } => {
                    out.push_str("continuous");
                    if let (Some(lo), Some(hi)) = (min, max) {
                        let _ = write!(out, " {lo} {hi}");
                    }
                }
            }
            if f.allows_missing {
                out.push_str(" missing");
            }
            out.push('\n');
        }
        match &self.target {
            TargetSpec::Class { name, values } => {
                let _ = writeln!(out, "{name} class {}", values.join(" "));
            }
            TargetSpec::Labels { names } => {
                for n in names {
                    let _ = writeln!(out, "{n} label");
                }
            }
        }
        out
    }
}

fn parse_float(s: &str, lineno: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| NlnError::Schema(format!("line {}: bad number {s}", lineno + 1)))
}

/// Parses a raw cell into a typed value, honoring the missing token.
pub fn parse_value(feature: &Feature, raw: &str, missing_token: &str) -> Result<Value> {
    if raw == missing_token {
        return if feature.allows_missing {
            Ok(Value::Missing)
        } else {
            Err(NlnError::Data(format!(
                "{}: missing value where schema forbids it",
                feature.name
            )))
        };
    }
    match &feature.kind {
        FeatureKind::Binary => match raw {
            "0" | "false" => Ok(Value::Binary(0.0)),
            "1" | "true" => Ok(Value::Binary(1.0)),
            other => {
                let p: f64 = other.parse().map_err(|_| {
                    NlnError::Data(format!("{}: bad binary value {other}", feature.name))
                })?;
                if (0.0..=1.0).contains(&p) {
                    Ok(Value::Binary(p))
                } else {
                    Err(NlnError::Data(format!(
                        "{}: binary value {p} outside [0, 1]",
                        feature.name
                    )))
                }
            }
        },
        FeatureKind::Categorical { values } => values
            .iter()
            .position(|v| v == raw)
            .map(|i| Value::Categorical(i as u32))
            .ok_or_else(|| {
                NlnError::Schema(format!("{}: undeclared value {raw}", feature.name))
            }),
        FeatureKind::Continuous { .. } => raw
            .parse::<f64>()
            .map(Value::Continuous)
            .map_err(|_| NlnError::Data(format!("{}: bad number {raw}", feature.name))),
    }
}
