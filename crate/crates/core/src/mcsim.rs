//! Monte Carlo estimation of the regret of empirical-success rules.
//!
//! Each replication draws a full trial, applies the empirical-success rule
//! within every covariate group and records the realized welfare under the
//! true stratum means. Random numbers come from ChaCha8 keyed by the plan
//! seed: the replication index selects the stream and each stratum reads
//! from its own fixed block of that stream, so results do not depend on
//! evaluation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, structure, Result};
use crate::model::{best_welfare, AssignmentProfile, OutcomeModel, TrialDesign};

/// Words of the ChaCha stream reserved for each stratum.
const STRATUM_BLOCK: u128 = 1 << 40;
const CHUNK: usize = 4096;

/// Law of the outcome within one (treatment, group) stratum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeDistribution {
    /// Outcomes in `{0, 1}`.
    Bernoulli { mean: f64 },
    /// `low + (high - low) * Beta(a, b)`.
    ScaledBeta { a: f64, b: f64, low: f64, high: f64 },
    PointMass { value: f64 },
    /// `values.0` with probability `low_prob`, otherwise `values.1`.
    TwoPoint { low_prob: f64, values: (f64, f64) },
}

impl OutcomeDistribution {
    pub fn mean(&self) -> f64 {
        match *self {
            OutcomeDistribution::Bernoulli { mean } => mean,
            OutcomeDistribution::ScaledBeta { a, b, low, high } => low + (high - low) * a / (a + b),
            OutcomeDistribution::PointMass { value } => value,
            OutcomeDistribution::TwoPoint { low_prob, values } => {
                low_prob * values.0 + (1.0 - low_prob) * values.1
            }
        }
    }

    /// Checks the parameters and that the support lies inside `outcome`.
    pub fn validate(&self, outcome: &OutcomeModel) -> Result<()> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        let (ok, support) = match *self {
            OutcomeDistribution::Bernoulli { mean } => (unit(mean), vec![0.0, 1.0]),
            OutcomeDistribution::ScaledBeta { a, b, low, high } => {
                (a > 0.0 && b > 0.0 && low < high, vec![low, high])
            }
            OutcomeDistribution::PointMass { value } => (value.is_finite(), vec![value]),
            OutcomeDistribution::TwoPoint { low_prob, values } => {
                (unit(low_prob) && values.0 <= values.1, vec![values.0, values.1])
            }
        };
        if !ok {
            return Err(domain(format!("invalid outcome distribution {self:?}")));
        }
        if support.iter().any(|&v| !outcome.contains(v)) {
            return Err(domain(format!(
                "{self:?} has support outside [{}, {}]",
                outcome.low(),
                outcome.high()
            )));
        }
        Ok(())
    }

    /// Mean of `n` independent draws. Discrete laws go through success
    /// counts so that equal empirical frequencies give bitwise equal means.
    fn sample_mean<R: Rng>(&self, n: u64, rng: &mut R) -> f64 {
        let count = |p: f64, rng: &mut R| (0..n).filter(|_| rng.random::<f64>() < p).count() as f64;
        match *self {
            OutcomeDistribution::Bernoulli { mean } => count(mean, rng) / n as f64,
            OutcomeDistribution::ScaledBeta { a, b, low, high } => {
                let beta = Beta::new(a, b).expect("validated shape parameters");
                let total: f64 = (0..n).map(|_| beta.sample(rng)).sum();
                (low + (high - low) * total / n as f64).clamp(low, high)
            }
            OutcomeDistribution::PointMass { value } => value,
            OutcomeDistribution::TwoPoint { low_prob, values } => {
                let share = count(low_prob, rng) / n as f64;
                values.1 + (values.0 - values.1) * share
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    design: TrialDesign,
    outcome: OutcomeModel,
    /// `state[g][t]`, matching the design layout.
    state: Vec<Vec<OutcomeDistribution>>,
    replications: u64,
    seed: u64,
}

impl SimulationPlan {
    pub fn new(
        design: TrialDesign,
        outcome: OutcomeModel,
        state: Vec<Vec<OutcomeDistribution>>,
        replications: u64,
        seed: u64,
    ) -> Result<Self> {
        if replications == 0 {
            return Err(domain("at least one replication is required"));
        }
        if state.len() != design.num_groups()
            || state.iter().any(|row| row.len() != design.num_treatments())
        {
            return Err(structure("every stratum of the design needs an outcome distribution"));
        }
        for d in state.iter().flatten() {
            d.validate(&outcome)?;
        }
        Ok(Self { design, outcome, state, replications, seed })
    }

    pub fn design(&self) -> &TrialDesign {
        &self.design
    }

    pub fn outcome(&self) -> &OutcomeModel {
        &self.outcome
    }

    pub fn replications(&self) -> u64 {
        self.replications
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// True stratum means `mu[g][t]`.
    pub fn means(&self) -> Vec<Vec<f64>> {
        self.state.iter().map(|row| row.iter().map(|d| d.mean()).collect()).collect()
    }
}

/// Sample means `m[g][t]` of one simulated trial.
pub fn run_trial(plan: &SimulationPlan, replication: u64) -> Vec<Vec<f64>> {
    let mut base = ChaCha8Rng::seed_from_u64(plan.seed);
    base.set_stream(replication);
    let treatments = plan.design.num_treatments();
    plan.state
        .iter()
        .enumerate()
        .map(|(g, row)| {
            row.iter()
                .enumerate()
                .map(|(t, dist)| {
                    let mut rng = base.clone();
                    rng.set_word_pos((g * treatments + t) as u128 * STRATUM_BLOCK);
                    dist.sample_mean(plan.design.size(t, g), &mut rng)
                })
                .collect()
        })
        .collect()
}

/// Empirical-success assignment: within each group the population is split
/// evenly over the treatments with the highest sample mean.
pub fn es_assign(sample_means: &[Vec<f64>]) -> AssignmentProfile {
    let probs = sample_means
        .iter()
        .map(|row| {
            let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ties = row.iter().filter(|&&m| m == top).count() as f64;
            row.iter().map(|&m| if m == top { 1.0 / ties } else { 0.0 }).collect()
        })
        .collect();
    AssignmentProfile::new(probs).expect("tie shares sum to one")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretEstimate {
    pub regret: f64,
    pub std_error: f64,
    pub mean_welfare: f64,
    pub best_welfare: f64,
    pub replications: u64,
}

fn realized_welfare(plan: &SimulationPlan, means: &[Vec<f64>], replication: u64) -> f64 {
    let assignment = es_assign(&run_trial(plan, replication));
    plan.design
        .groups()
        .iter()
        .enumerate()
        .map(|(g, grp)| {
            let row = &means[g];
            grp.probability * row.iter().enumerate().map(|(t, mu)| assignment.prob(t, g) * mu).sum::<f64>()
        })
        .sum()
}

/// Regret of the empirical-success rule, averaged over replications.
pub fn estimate_regret(plan: &SimulationPlan) -> Result<RegretEstimate> {
    let means = plan.means();
    let best = best_welfare(&crate::model::State::new(means.clone()), plan.design.groups())?;
    let reps = plan.replications;
    let chunks = reps.div_ceil(CHUNK as u64);
    // Fixed chunking, combined in chunk order: identical sums for any thread count.
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK as u64;
            let hi = (lo + CHUNK as u64).min(reps);
            let mut sum = 0.0;
            let mut sq = 0.0;
            for r in lo..hi {
                let w = best - realized_welfare(plan, &means, r);
                sum += w;
                sq += w * w;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = partials.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let r = reps as f64;
    let mean = sum / r;
    let var = if reps > 1 { ((sq - r * mean * mean) / (r - 1.0)).max(0.0) } else { 0.0 };
    Ok(RegretEstimate {
        regret: mean,
        std_error: (var / r).sqrt(),
        mean_welfare: best - mean,
        best_welfare: best,
        replications: reps,
    })
}
