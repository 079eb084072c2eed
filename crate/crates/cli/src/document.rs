//! Design documents: a TOML description of a trial.
//!
//! ```toml
//! epsilon = 0.05
//! treatments = ["a", "b"]
//!
//! [outcome]
//! low = 0.0
//! high = 1.0
//! binary = true
//!
//! [partial_validity]
//! kappa = 0.05
//!
//! [[groups]]
//! label = "all"
//! probability = 1.0
//! sizes = [100, 100]
//! ```
//!
//! `epsilon`, `treatments`, `binary` and `[partial_validity]` are optional.
//! Serializing a parsed document always writes every field, and parsing that
//! canonical text gives the same document back.

use std::ops::Range;
use std::path::Path;

use epsopt_core::bounds::PartialValidity;
use epsopt_core::model::default_labels;
use epsopt_core::{CovariateGroup, OutcomeModel, TrialDesign};
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct DesignDocument {
    pub outcome: OutcomeModel,
    pub design: TrialDesign,
    pub partial_validity: Option<PartialValidity>,
    pub epsilon: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    epsilon: Option<Spanned<f64>>,
    treatments: Option<Spanned<Vec<String>>>,
    outcome: Spanned<RawOutcome>,
    partial_validity: Option<Spanned<RawPartialValidity>>,
    groups: Spanned<Vec<Spanned<RawGroup>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutcome {
    low: f64,
    high: f64,
    #[serde(default)]
    binary: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPartialValidity {
    kappa: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroup {
    label: String,
    probability: f64,
    sizes: Vec<u64>,
}

#[derive(Serialize)]
struct CanonicalDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    treatments: Vec<String>,
    outcome: RawOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    partial_validity: Option<RawPartialValidity>,
    groups: Vec<RawGroup>,
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

struct Located<'a> {
    name: &'a str,
    text: &'a str,
}

impl Located<'_> {
    fn error(&self, span: Range<usize>, message: impl std::fmt::Display) -> CliError {
        let (line, col) = line_col(self.text, span.start);
        CliError::Input(format!("{}:{line}:{col}: {message}", self.name))
    }
}

impl DesignDocument {
    pub fn new(outcome: OutcomeModel, design: TrialDesign) -> Self {
        Self { outcome, design, partial_validity: None, epsilon: None }
    }

    /// Parses document text; `name` prefixes diagnostics.
    pub fn parse(text: &str, name: &str) -> CliResult<Self> {
        let at = Located { name, text };
        let raw: RawDocument = toml::from_str(text).map_err(|e| match e.span() {
            Some(span) => at.error(span, e.message().trim_end()),
            None => CliError::Input(format!("{name}: {}", e.message().trim_end())),
        })?;

        let outcome_span = raw.outcome.span();
        let o = raw.outcome.into_inner();
        let outcome =
            OutcomeModel::with_binary(o.low, o.high, o.binary).map_err(|e| at.error(outcome_span, e))?;

        let groups_span = raw.groups.span();
        let raw_groups = raw.groups.into_inner();
        let Some(first) = raw_groups.first() else {
            return Err(at.error(groups_span, "at least one [[groups]] entry is required"));
        };
        let arms = first.get_ref().sizes.len();
        let treatments = match raw.treatments {
            Some(t) => {
                let span = t.span();
                let t = t.into_inner();
                if t.len() != arms {
                    return Err(at.error(span, format!("{} treatment labels but groups list {arms} sizes", t.len())));
                }
                t
            }
            None => default_labels(arms),
        };
        let mut groups = Vec::with_capacity(raw_groups.len());
        let mut sizes = Vec::with_capacity(raw_groups.len());
        for g in raw_groups {
            let span = g.span();
            let g = g.into_inner();
            if g.sizes.len() != arms {
                return Err(at.error(span, format!("group '{}' lists {} sizes, expected {arms}", g.label, g.sizes.len())));
            }
            if !(g.probability > 0.0 && g.probability <= 1.0) {
                return Err(at.error(span, format!("group '{}' has probability {} outside (0, 1]", g.label, g.probability)));
            }
            groups.push(CovariateGroup::new(g.label, g.probability));
            sizes.push(g.sizes);
        }
        let design = TrialDesign::new(treatments, groups, sizes).map_err(|e| at.error(groups_span, e))?;

        let partial_validity = match raw.partial_validity {
            Some(pv) => {
                let span = pv.span();
                Some(PartialValidity::new(pv.into_inner().kappa).map_err(|e| at.error(span, e))?)
            }
            None => None,
        };
        let epsilon = match raw.epsilon {
            Some(e) if e.get_ref().is_nan() || *e.get_ref() <= 0.0 => {
                return Err(at.error(e.span(), format!("epsilon must be positive, got {}", e.get_ref())));
            }
            Some(e) => Some(e.into_inner()),
            None => None,
        };
        Ok(Self { outcome, design, partial_validity, epsilon })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Canonical TOML text.
    pub fn to_toml(&self) -> String {
        let doc = CanonicalDocument {
            epsilon: self.epsilon,
            treatments: self.design.treatments().to_vec(),
            outcome: RawOutcome {
                low: self.outcome.low(),
                high: self.outcome.high(),
                binary: self.outcome.is_binary(),
            },
            partial_validity: self.partial_validity.map(|pv| RawPartialValidity { kappa: pv.kappa() }),
            groups: self
                .design
                .groups()
                .iter()
                .zip(self.design.sizes())
                .map(|(g, s)| RawGroup { label: g.label.clone(), probability: g.probability, sizes: s.clone() })
                .collect(),
        };
        toml::to_string(&doc).expect("design documents always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
epsilon = 0.05
treatments = ["control", "drug"]

[outcome]
low = 0.0
high = 1.0

[[groups]]
label = "young"
probability = 0.8
sizes = [72, 72]

[[groups]]
label = "old"
probability = 0.2
sizes = [28, 28]
"#;

    #[test]
    fn parses_sample() {
        let doc = DesignDocument::parse(SAMPLE, "sample").unwrap();
        assert_eq!(doc.epsilon, Some(0.05));
        assert_eq!(doc.design.num_groups(), 2);
        assert_eq!(doc.design.treatments(), ["control", "drug"]);
        assert_eq!(doc.design.size(1, 1), 28);
        assert!(doc.partial_validity.is_none());
    }

    #[test]
    fn canonical_round_trip() {
        let doc = DesignDocument::parse(SAMPLE, "sample").unwrap();
        let text = doc.to_toml();
        let again = DesignDocument::parse(&text, "canonical").unwrap();
        assert_eq!(again, doc);
        assert_eq!(again.to_toml(), text);
    }

    #[test]
    fn syntax_errors_carry_location() {
        let text = "[outcome]\nlow = 0.0\nhigh = \n";
        let err = DesignDocument::parse(text, "bad.toml").unwrap_err().to_string();
        assert!(err.starts_with("bad.toml:3:"), "{err}");
    }

    #[test]
    fn semantic_errors_point_at_group() {
        let text = SAMPLE.replace("probability = 0.2", "probability = 0.3");
        let err = DesignDocument::parse(&text, "d").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("sum to"), "{err}");

        let text = SAMPLE.replace("sizes = [28, 28]", "sizes = [28]");
        let err = DesignDocument::parse(&text, "d").unwrap_err().to_string();
        assert!(err.starts_with("d:14:"), "{err}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = SAMPLE.replace("epsilon = 0.05", "epsilon = 0.05\nseed = 3");
        let err = DesignDocument::parse(&text, "d").unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
        assert!(err.starts_with("d:3:"), "{err}");
    }
}
