//! Analytic upper bounds on the maximum regret of empirical-success rules and
//! their inversion into sufficient balanced sample sizes.
//!
//! Two large-deviation bounds are provided. The Hoeffding-type bound sums a
//! pairwise term against the smallest arm; the exponential-moment bound
//! minimizes a log-sum-exp expression over a free parameter `d > 0`. The
//! covariate versions aggregate per-group bounds with weights `P(x = g)`,
//! and the partial-validity versions add the worst case `kappa * range` for
//! the share of the population outside the sampling frame.

use serde::{Deserialize, Serialize};

use crate::error::{domain, structure, Error, Result};
use crate::golden::minimize_positive;
use crate::model::{Method, OutcomeModel, RegretReport, TrialDesign};

/// `e^{-1/2} / 2`
pub fn hoeffding_constant() -> f64 {
    0.5 * (-0.5f64).exp()
}

const D_LO: f64 = 1e-6;
const D_HI: f64 = 50.0;
const D_SCAN: usize = 400;
const D_REL_TOL: f64 = 1e-10;
const BOUNDARY_SLACK: f64 = 1e-12;

/// Which analytic bound to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundChoice {
    Prop1,
    Prop2,
    Prop2Balanced,
    /// The smaller of `Prop1` and `Prop2`; both are valid upper bounds.
    BestOfBoth,
}

/// Share `kappa` of the target population that lies outside the sampling frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialValidity {
    kappa: f64,
}

impl PartialValidity {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&kappa) {
            return Err(domain(format!("kappa must lie in [0, 1), got {kappa}")));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// `sum_{t != t*} sqrt(1/n_t + 1/n_{t*})` for one group.
fn pairwise_root_sum(sizes: &[u64], smallest: usize) -> f64 {
    let inv_min = 1.0 / sizes[smallest] as f64;
    sizes
        .iter()
        .enumerate()
        .filter(|&(t, _)| t != smallest)
        .map(|(_, &n)| (1.0 / n as f64 + inv_min).sqrt())
        .sum()
}

/// `ln(1 + sum_i exp(d^2 c_i / 8)) / d`, evaluated with log-sum-exp.
pub fn exponential_moment_objective(d: f64, coefficients: &[f64]) -> f64 {
    let d2 = d * d / 8.0;
    let top = coefficients.iter().fold(0.0f64, |m, &c| m.max(d2 * c));
    let sum: f64 = (-top).exp() + coefficients.iter().map(|&c| (d2 * c - top).exp()).sum::<f64>();
    (top + sum.ln()) / d
}

/// Coefficients `1/p_t + 1/p_{t*}` of the exponential-moment objective.
pub fn exponential_moment_coefficients(design: &TrialDesign, group: usize) -> Vec<f64> {
    let shares = design.shares(group);
    let smallest = design.smallest_arm(group);
    let inv_min = 1.0 / shares[smallest];
    shares
        .iter()
        .enumerate()
        .filter(|&(t, _)| t != smallest)
        .map(|(_, &p)| 1.0 / p + inv_min)
        .collect()
}

/// `min_{d > 0}` of [`exponential_moment_objective`], with the minimizing `d`.
pub fn minimize_exponential_moment(coefficients: &[f64]) -> Result<(f64, f64)> {
    let m = minimize_positive(
        |d| exponential_moment_objective(d, coefficients),
        D_LO,
        D_HI,
        D_SCAN,
        D_REL_TOL,
    )
    .ok_or_else(|| Error::Internal("exponential-moment objective has no interior minimum".into()))?;
    Ok((m.value, m.x))
}

fn group_prop1(design: &TrialDesign, group: usize) -> f64 {
    pairwise_root_sum(design.group_sizes(group), design.smallest_arm(group))
}

fn group_prop2(design: &TrialDesign, group: usize) -> Result<f64> {
    let (min, _) = minimize_exponential_moment(&exponential_moment_coefficients(design, group))?;
    Ok(min / (design.group_total(group) as f64).sqrt())
}

fn require_single_group(design: &TrialDesign, alternative: &str) -> Result<()> {
    if design.is_single_group() {
        Ok(())
    } else {
        Err(structure(format!("design has covariate groups; use {alternative}")))
    }
}

/// Hoeffding-type bound for a covariate-free design.
pub fn prop1_bound(design: &TrialDesign, outcome: &OutcomeModel) -> Result<RegretReport> {
    require_single_group(design, "covariate_prop1_bound")?;
    let value = hoeffding_constant() * outcome.range() * group_prop1(design, 0);
    Ok(RegretReport::bound(value, Method::Prop1))
}

/// Exponential-moment bound for a covariate-free design.
pub fn prop2_bound(design: &TrialDesign, outcome: &OutcomeModel) -> Result<RegretReport> {
    require_single_group(design, "covariate_prop2_bound")?;
    let value = outcome.range() * group_prop2(design, 0)?;
    Ok(RegretReport::bound(value, Method::Prop2))
}

/// Closed-form relaxation of the exponential-moment bound for a balanced
/// design: `range * sqrt(ln |T| / n)`.
pub fn prop2_balanced_bound(n: u64, num_treatments: usize, outcome: &OutcomeModel) -> Result<RegretReport> {
    if n == 0 {
        return Err(domain("per-arm sample size must be positive"));
    }
    if num_treatments < 2 {
        return Err(domain("need at least two treatments"));
    }
    let value = outcome.range() * ((num_treatments as f64).ln() / n as f64).sqrt();
    Ok(RegretReport::bound(value, Method::Prop2Balanced))
}

pub fn covariate_prop1_bound(design: &TrialDesign, outcome: &OutcomeModel) -> Result<RegretReport> {
    let weighted: f64 = design
        .groups()
        .iter()
        .enumerate()
        .map(|(g, grp)| grp.probability * group_prop1(design, g))
        .sum();
    let value = hoeffding_constant() * outcome.range() * weighted;
    Ok(RegretReport::bound(value, Method::CovariateProp1))
}

pub fn covariate_prop2_bound(design: &TrialDesign, outcome: &OutcomeModel) -> Result<RegretReport> {
    let mut weighted = 0.0;
    for (g, grp) in design.groups().iter().enumerate() {
        weighted += grp.probability * group_prop2(design, g)?;
    }
    Ok(RegretReport::bound(outcome.range() * weighted, Method::CovariateProp2))
}

fn balanced_groups_prop2(design: &TrialDesign, outcome: &OutcomeModel) -> Result<RegretReport> {
    let mut weighted = 0.0;
    for (g, grp) in design.groups().iter().enumerate() {
        let n = design
            .balanced_size(g)
            .ok_or_else(|| structure("the closed-form bound needs a treatment-balanced design"))?;
        weighted += grp.probability / (n as f64).sqrt();
    }
    let k = design.num_treatments() as f64;
    let value = outcome.range() * k.ln().sqrt() * weighted;
    Ok(RegretReport::bound(value, Method::Prop2Balanced))
}

/// Bound for any design under `choice`. Single-group designs use the plain
/// bounds; multi-group designs use the covariate aggregates.
pub fn bound(design: &TrialDesign, outcome: &OutcomeModel, choice: BoundChoice) -> Result<RegretReport> {
    let single = design.is_single_group();
    match choice {
        BoundChoice::Prop1 if single => prop1_bound(design, outcome),
        BoundChoice::Prop1 => covariate_prop1_bound(design, outcome),
        BoundChoice::Prop2 if single => prop2_bound(design, outcome),
        BoundChoice::Prop2 => covariate_prop2_bound(design, outcome),
        BoundChoice::Prop2Balanced => balanced_groups_prop2(design, outcome),
        BoundChoice::BestOfBoth => {
            let a = bound(design, outcome, BoundChoice::Prop1)?;
            let b = bound(design, outcome, BoundChoice::Prop2)?;
            Ok(if b.value < a.value { b } else { a })
        }
    }
}

/// Bound on the maximum regret when only a `1 - kappa` share of the target
/// population is sampled.
pub fn partial_validity_bound(
    design: &TrialDesign,
    outcome: &OutcomeModel,
    pv: PartialValidity,
    choice: BoundChoice,
) -> Result<RegretReport> {
    require_single_group(design, "a covariate-free design")?;
    let base = bound(design, outcome, choice)?;
    let method = match base.method {
        Method::Prop1 => Method::PartialValidityProp1,
        _ => Method::PartialValidityProp2,
    };
    let k = pv.kappa();
    let value = (1.0 - k) * base.value + k * outcome.range();
    Ok(RegretReport::bound(value, method))
}

/// Target regret for the sampled subpopulation that delivers overall
/// `epsilon`-optimality, or `None` when `kappa * range >= epsilon` makes the
/// target unreachable at any sample size.
pub fn adjusted_epsilon(epsilon: f64, pv: PartialValidity, outcome: &OutcomeModel) -> Result<Option<f64>> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let unsampled = pv.kappa() * outcome.range();
    if unsampled >= epsilon {
        return Ok(None);
    }
    Ok(Some((epsilon - unsampled) / (1.0 - pv.kappa())))
}

/// Bound for a balanced covariate-free design with `n` per arm.
fn balanced_bound(n: u64, k: usize, outcome: &OutcomeModel, choice: BoundChoice) -> Result<f64> {
    match choice {
        BoundChoice::Prop2Balanced => Ok(prop2_balanced_bound(n, k, outcome)?.value),
        _ => Ok(bound(&TrialDesign::balanced(k, n)?, outcome, choice)?.value),
    }
}

/// Smallest per-arm size `n` of a balanced design whose bound is at most
/// `epsilon`.
pub fn sufficient_n_balanced(
    epsilon: f64,
    num_treatments: usize,
    outcome: &OutcomeModel,
    choice: BoundChoice,
) -> Result<u64> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if num_treatments < 2 {
        return Err(domain("need at least two treatments"));
    }
    if choice == BoundChoice::BestOfBoth {
        let a = sufficient_n_balanced(epsilon, num_treatments, outcome, BoundChoice::Prop1)?;
        let b = sufficient_n_balanced(epsilon, num_treatments, outcome, BoundChoice::Prop2)?;
        return Ok(a.min(b));
    }
    // Every balanced bound has the form C * range / sqrt(n).
    let at_one = balanced_bound(1, num_treatments, outcome, choice)?;
    if at_one <= epsilon {
        return Ok(1);
    }
    let threshold = (at_one / epsilon).powi(2);
    if !threshold.is_finite() || threshold > u64::MAX as f64 / 2.0 {
        return Err(domain(format!("epsilon {epsilon} requires an unrepresentable sample size")));
    }
    let bound_at = |n: u64| balanced_bound(n, num_treatments, outcome, choice);
    let mut n = (threshold.ceil() as u64).max(1);
    while bound_at(n)? > epsilon + BOUNDARY_SLACK {
        n += 1;
    }
    while n > 1 && bound_at(n - 1)? <= epsilon + BOUNDARY_SLACK {
        n -= 1;
    }
    Ok(n)
}
