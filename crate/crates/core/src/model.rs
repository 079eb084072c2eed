//! Domain types and the welfare / regret algebra.
//!
//! Every per-stratum quantity is stored group-major: `x[g][t]` is the value
//! for treatment `t` within covariate group `g`. A trial without covariates
//! is a design with exactly one group of probability 1.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, structure, Result};

/// Tolerance for probability vectors that must sum to one.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Bounded outcome range `[low, high]`, optionally flagged as binary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeModel {
    low: f64,
    high: f64,
    binary: bool,
}

impl OutcomeModel {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite()) || low >= high {
            return Err(domain(format!("outcome range requires low < high, got [{low}, {high}]")));
        }
        Ok(Self { low, high, binary: false })
    }

    /// Binary outcomes on `{0, 1}`.
    pub fn binary() -> Self {
        Self { low: 0.0, high: 1.0, binary: true }
    }

    pub fn with_binary(low: f64, high: f64, binary: bool) -> Result<Self> {
        if binary && (low != 0.0 || high != 1.0) {
            return Err(domain("binary outcomes must use the range [0, 1]"));
        }
        let mut m = Self::new(low, high)?;
        m.binary = binary;
        Ok(m)
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn is_binary(&self) -> bool {
        self.binary
    }

    /// Width of the outcome range, `high - low`.
    pub fn range(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.low && x <= self.high
    }
}

impl Default for OutcomeModel {
    fn default() -> Self {
        Self::binary()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateGroup {
    pub label: String,
    pub probability: f64,
}

impl CovariateGroup {
    pub fn new(label: impl Into<String>, probability: f64) -> Self {
        Self { label: label.into(), probability }
    }
}

/// Stratum sample sizes `n[g][t]` for a set of treatments and covariate groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDesign {
    treatments: Vec<String>,
    groups: Vec<CovariateGroup>,
    sizes: Vec<Vec<u64>>,
}

impl TrialDesign {
    pub fn new(
        treatments: Vec<String>,
        groups: Vec<CovariateGroup>,
        sizes: Vec<Vec<u64>>,
    ) -> Result<Self> {
        if treatments.len() < 2 {
            return Err(structure("a design needs at least two treatments"));
        }
        if groups.is_empty() {
            return Err(structure("a design needs at least one covariate group"));
        }
        for g in &groups {
            if !(g.probability > 0.0 && g.probability <= 1.0) {
                return Err(structure(format!(
                    "group '{}' has probability {} outside (0, 1]",
                    g.label, g.probability
                )));
            }
        }
        let total: f64 = groups.iter().map(|g| g.probability).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(structure(format!("group probabilities sum to {total}, not 1")));
        }
        if sizes.len() != groups.len() {
            return Err(structure(format!(
                "{} size rows for {} groups",
                sizes.len(),
                groups.len()
            )));
        }
        for (g, row) in sizes.iter().enumerate() {
            if row.len() != treatments.len() {
                return Err(structure(format!(
                    "group '{}' lists {} sizes for {} treatments",
                    groups[g].label,
                    row.len(),
                    treatments.len()
                )));
            }
            if row.contains(&0) {
                return Err(structure(format!(
                    "group '{}' has an empty treatment arm",
                    groups[g].label
                )));
            }
        }
        Ok(Self { treatments, groups, sizes })
    }

    /// A covariate-free design with the given per-treatment sizes.
    pub fn single_group(sizes: Vec<u64>) -> Result<Self> {
        let treatments = default_labels(sizes.len());
        Self::new(treatments, vec![CovariateGroup::new("all", 1.0)], vec![sizes])
    }

    /// A covariate-free design with `n` subjects in each of `num_treatments` arms.
    pub fn balanced(num_treatments: usize, n: u64) -> Result<Self> {
        Self::single_group(vec![n; num_treatments])
    }

    /// Treatment-balanced design with `per_arm[g]` subjects per arm in group `g`.
    pub fn balanced_groups(
        num_treatments: usize,
        groups: Vec<CovariateGroup>,
        per_arm: &[u64],
    ) -> Result<Self> {
        let sizes = per_arm.iter().map(|&n| vec![n; num_treatments]).collect();
        Self::new(default_labels(num_treatments), groups, sizes)
    }

    pub fn treatments(&self) -> &[String] {
        &self.treatments
    }

    pub fn groups(&self) -> &[CovariateGroup] {
        &self.groups
    }

    pub fn num_treatments(&self) -> usize {
        self.treatments.len()
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn is_single_group(&self) -> bool {
        self.groups.len() == 1
    }

    pub fn sizes(&self) -> &[Vec<u64>] {
        &self.sizes
    }

    pub fn group_sizes(&self, group: usize) -> &[u64] {
        &self.sizes[group]
    }

    pub fn size(&self, treatment: usize, group: usize) -> u64 {
        self.sizes[group][treatment]
    }

    /// `N_g`, the number of subjects in group `g` across all arms.
    pub fn group_total(&self, group: usize) -> u64 {
        self.sizes[group].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.sizes.iter().flatten().sum()
    }

    /// Arm shares `n[g][t] / N_g` within group `g`.
    pub fn shares(&self, group: usize) -> Vec<f64> {
        let total = self.group_total(group) as f64;
        self.sizes[group].iter().map(|&n| n as f64 / total).collect()
    }

    /// Index of the first treatment with the smallest arm in group `g`.
    pub fn smallest_arm(&self, group: usize) -> usize {
        let row = &self.sizes[group];
        let mut best = 0;
        for (t, &n) in row.iter().enumerate() {
            if n < row[best] {
                best = t;
            }
        }
        best
    }

    /// Per-arm size when group `g` is balanced across treatments.
    pub fn balanced_size(&self, group: usize) -> Option<u64> {
        let row = &self.sizes[group];
        row.iter().all(|&n| n == row[0]).then_some(row[0])
    }
}

/// Treatment labels `a`, `b`, `c`, ... used when a design does not name its arms.
pub fn default_labels(k: usize) -> Vec<String> {
    (0..k)
        .map(|i| {
            if i < 26 {
                ((b'a' + i as u8) as char).to_string()
            } else {
                format!("t{i}")
            }
        })
        .collect()
}

/// Mean outcomes `mu[g][t]`: one point of the state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    means: Vec<Vec<f64>>,
}

impl State {
    pub fn new(means: Vec<Vec<f64>>) -> Self {
        Self { means }
    }

    pub fn single_group(means: Vec<f64>) -> Self {
        Self { means: vec![means] }
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn mean(&self, treatment: usize, group: usize) -> f64 {
        self.means[group][treatment]
    }

    /// Checks completeness against `design` and that every mean lies in range.
    pub fn validate(&self, design: &TrialDesign, outcome: &OutcomeModel) -> Result<()> {
        check_shape(&self.means, design, "state")?;
        for row in &self.means {
            for &mu in row {
                if !outcome.contains(mu) {
                    return Err(domain(format!(
                        "mean {mu} outside outcome range [{}, {}]",
                        outcome.low(),
                        outcome.high()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Expected assigned fraction `E[delta(t, g)]` for each stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentProfile {
    probs: Vec<Vec<f64>>,
}

impl AssignmentProfile {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        for row in &probs {
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(domain("assignment fractions must lie in [0, 1]"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_SUM_TOL {
                return Err(structure(format!("assignment fractions sum to {sum}, not 1")));
            }
        }
        Ok(Self { probs })
    }

    pub fn single_group(probs: Vec<f64>) -> Result<Self> {
        Self::new(vec![probs])
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn prob(&self, treatment: usize, group: usize) -> f64 {
        self.probs[group][treatment]
    }
}

fn check_shape(rows: &[Vec<f64>], design: &TrialDesign, what: &str) -> Result<()> {
    if rows.len() != design.num_groups()
        || rows.iter().any(|r| r.len() != design.num_treatments())
    {
        return Err(structure(format!(
            "{what} does not cover every (treatment, group) stratum of the design"
        )));
    }
    Ok(())
}

/// Which bound or computation produced a [`RegretReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Prop1,
    Prop2,
    Prop2Balanced,
    ExactBinary,
    MonteCarlo,
    CovariateProp1,
    CovariateProp2,
    PartialValidityProp1,
    PartialValidityProp2,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Prop1 => "prop1",
            Method::Prop2 => "prop2",
            Method::Prop2Balanced => "prop2_balanced",
            Method::ExactBinary => "exact_binary",
            Method::MonteCarlo => "monte_carlo",
            Method::CovariateProp1 => "covariate_prop1",
            Method::CovariateProp2 => "covariate_prop2",
            Method::PartialValidityProp1 => "partial_validity_prop1",
            Method::PartialValidityProp2 => "partial_validity_prop2",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Maximum regret of a rule (or an upper bound on it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub value: f64,
    /// State attaining the maximum; absent for analytic bounds.
    pub argmax_state: Option<State>,
    pub method: Method,
}

impl RegretReport {
    pub fn bound(value: f64, method: Method) -> Self {
        Self { value, argmax_state: None, method }
    }
}

/// Expected welfare `sum_g P(g) sum_t E[delta(t, g)] mu[g][t]`.
pub fn expected_welfare(
    design: &TrialDesign,
    state: &State,
    assignment: &AssignmentProfile,
    outcome: &OutcomeModel,
) -> Result<f64> {
    state.validate(design, outcome)?;
    check_shape(&assignment.probs, design, "assignment profile")?;
    let w = design
        .groups()
        .iter()
        .zip(state.means.iter().zip(&assignment.probs))
        .map(|(g, (mu, p))| g.probability * mu.iter().zip(p).map(|(m, q)| m * q).sum::<f64>())
        .sum();
    Ok(w)
}

/// Best achievable welfare: each group receives its best treatment.
pub fn best_welfare(state: &State, groups: &[CovariateGroup]) -> Result<f64> {
    if state.means.len() != groups.len() || state.means.iter().any(|r| r.is_empty()) {
        return Err(structure("state does not match the covariate groups"));
    }
    Ok(groups
        .iter()
        .zip(&state.means)
        .map(|(g, mu)| g.probability * mu.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum())
}

pub fn regret(
    design: &TrialDesign,
    state: &State,
    assignment: &AssignmentProfile,
    outcome: &OutcomeModel,
) -> Result<f64> {
    let w = expected_welfare(design, state, assignment, outcome)?;
    let best = best_welfare(state, design.groups())?;
    // Rounding can leave a tiny negative residue when the rule is optimal.
    Ok((best - w).max(0.0))
}

/// Regret of a test rule that picks the inferior treatment with probability
/// `error_prob`, in a two-treatment state without covariates.
pub fn regret_from_error_prob(state: &State, error_prob: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&error_prob) {
        return Err(domain(format!("error probability {error_prob} outside [0, 1]")));
    }
    match state.means() {
        [row] if row.len() == 2 => Ok((row[0] - row[1]).abs() * error_prob),
        _ => Err(structure("error-probability regret needs two treatments and one group")),
    }
}
