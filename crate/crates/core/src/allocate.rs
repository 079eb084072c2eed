//! Allocation of a total sample budget across covariate groups.
//!
//! With treatment-balanced groups the aggregated regret bounds are a
//! constant times `sum_g P(g) n_g^{-1/2}`, where `n_g` is the per-arm size
//! in group `g`. Minimizing this under `sum_g n_g = N / |T|` gives sizes
//! proportional to `P(g)^{2/3}` in the continuous relaxation.

use serde::{Deserialize, Serialize};

use crate::error::{domain, structure, Result};
use crate::model::{CovariateGroup, PROB_SUM_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationProblem {
    groups: Vec<CovariateGroup>,
    total_budget: u64,
    num_treatments: usize,
}

impl AllocationProblem {
    pub fn new(groups: Vec<CovariateGroup>, total_budget: u64, num_treatments: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(structure("allocation needs at least one covariate group"));
        }
        if num_treatments < 2 {
            return Err(domain("need at least two treatments"));
        }
        if groups.iter().any(|g| !(g.probability > 0.0 && g.probability <= 1.0)) {
            return Err(structure("group probabilities must lie in (0, 1]"));
        }
        let total: f64 = groups.iter().map(|g| g.probability).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(structure(format!("group probabilities sum to {total}, not 1")));
        }
        let needed = (num_treatments * groups.len()) as u64;
        if total_budget < needed {
            return Err(structure(format!(
                "budget {total_budget} cannot give one subject to each of {needed} strata"
            )));
        }
        Ok(Self { groups, total_budget, num_treatments })
    }

    pub fn groups(&self) -> &[CovariateGroup] {
        &self.groups
    }

    pub fn total_budget(&self) -> u64 {
        self.total_budget
    }

    pub fn num_treatments(&self) -> usize {
        self.num_treatments
    }

    /// `floor(N / |T|)`, the subjects available to each treatment arm.
    pub fn per_treatment_budget(&self) -> u64 {
        self.total_budget / self.num_treatments as u64
    }

    /// Units of `N` lost to the integer division by `|T|`.
    pub fn dropped_units(&self) -> u64 {
        self.total_budget % self.num_treatments as u64
    }
}

/// `sum_g P(g) n_g^{-1/2}`.
pub fn allocation_objective(groups: &[CovariateGroup], sizes: &[f64]) -> Result<f64> {
    if groups.len() != sizes.len() {
        return Err(structure("one size per group is required"));
    }
    if sizes.iter().any(|&n| n.is_nan() || n < 1.0) {
        return Err(domain("group sizes must be at least 1"));
    }
    Ok(groups.iter().zip(sizes).map(|(g, &n)| g.probability / n.sqrt()).sum())
}

/// Continuous optimum: `n_g` proportional to `P(g)^{2/3}`, summing to `N / |T|`.
pub fn continuous_allocation(problem: &AllocationProblem) -> Vec<f64> {
    let weights: Vec<f64> = problem.groups.iter().map(|g| g.probability.powf(2.0 / 3.0)).collect();
    let total: f64 = weights.iter().sum();
    let budget = problem.total_budget as f64 / problem.num_treatments as f64;
    weights.iter().map(|w| budget * w / total).collect()
}

fn term(p: f64, n: u64) -> f64 {
    p / (n as f64).sqrt()
}

/// Integer per-arm sizes summing to `floor(N / |T|)`, each at least 1.
///
/// Starts from the floored continuous optimum, moves units one at a time to
/// the group with the largest objective decrease, then applies one-unit
/// transfers between groups until none improves the objective.
pub fn integer_allocation(problem: &AllocationProblem) -> Result<Vec<u64>> {
    let budget = problem.per_treatment_budget();
    let probs: Vec<f64> = problem.groups.iter().map(|g| g.probability).collect();
    let groups = probs.len();
    if budget < groups as u64 {
        return Err(structure("budget too small for one subject per group"));
    }
    let mut sizes: Vec<u64> =
        continuous_allocation(problem).iter().map(|&n| (n.floor() as u64).max(1)).collect();

    // Raising small groups to 1 can overshoot; take back the cheapest units.
    while sizes.iter().sum::<u64>() > budget {
        let g = (0..groups)
            .filter(|&g| sizes[g] > 1)
            .min_by(|&x, &y| {
                let lx = term(probs[x], sizes[x] - 1) - term(probs[x], sizes[x]);
                let ly = term(probs[y], sizes[y] - 1) - term(probs[y], sizes[y]);
                lx.total_cmp(&ly).then(x.cmp(&y))
            })
            .expect("budget >= groups leaves a reducible group");
        sizes[g] -= 1;
    }
    while sizes.iter().sum::<u64>() < budget {
        let g = (0..groups)
            .max_by(|&x, &y| {
                let gx = term(probs[x], sizes[x]) - term(probs[x], sizes[x] + 1);
                let gy = term(probs[y], sizes[y]) - term(probs[y], sizes[y] + 1);
                gx.total_cmp(&gy).then(y.cmp(&x))
            })
            .expect("at least one group");
        sizes[g] += 1;
    }

    let mut improved = true;
    while improved {
        improved = false;
        for to in 0..groups {
            for from in 0..groups {
                if to == from || sizes[from] <= 1 {
                    continue;
                }
                let before = term(probs[to], sizes[to]) + term(probs[from], sizes[from]);
                let after = term(probs[to], sizes[to] + 1) + term(probs[from], sizes[from] - 1);
                if after < before - 1e-15 * before {
                    sizes[to] += 1;
                    sizes[from] -= 1;
                    improved = true;
                }
            }
        }
    }
    Ok(sizes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn groups(probs: &[f64]) -> Vec<CovariateGroup> {
        probs.iter().enumerate().map(|(i, &p)| CovariateGroup::new(format!("g{i}"), p)).collect()
    }

    fn objective(probs: &[f64], sizes: &[u64]) -> f64 {
        let s: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
        allocation_objective(&groups(probs), &s).unwrap()
    }

    #[test]
    fn continuous_examples() {
        let p = AllocationProblem::new(groups(&[0.5, 0.5]), 200, 2).unwrap();
        assert_eq!(continuous_allocation(&p), vec![50.0, 50.0]);
        let p = AllocationProblem::new(groups(&[0.8, 0.2]), 200, 2).unwrap();
        let n = continuous_allocation(&p);
        let r = 4f64.powf(2.0 / 3.0);
        assert_abs_diff_eq!(n[0] / n[1], r, epsilon = 1e-12);
        assert_abs_diff_eq!(n[1], 100.0 / (1.0 + r), epsilon = 1e-12);
        assert_abs_diff_eq!(n[0], 71.59, epsilon = 5e-3);
        assert_abs_diff_eq!(n[1], 28.41, epsilon = 5e-3);
        let p = AllocationProblem::new(groups(&[1.0]), 91, 3).unwrap();
        assert_eq!(continuous_allocation(&p), vec![91.0 / 3.0]);
    }

    #[test]
    fn integer_examples() {
        let p = AllocationProblem::new(groups(&[0.5, 0.5]), 20, 2).unwrap();
        assert_eq!(integer_allocation(&p).unwrap(), vec![5, 5]);
        let p = AllocationProblem::new(groups(&[0.8, 0.2]), 200, 2).unwrap();
        assert_eq!(integer_allocation(&p).unwrap(), vec![72, 28]);
        // Exhaustive check over every split of 100.
        let best = (1..100u64)
            .min_by(|&a, &b| objective(&[0.8, 0.2], &[a, 100 - a]).total_cmp(&objective(&[0.8, 0.2], &[b, 100 - b])))
            .unwrap();
        assert_eq!(best, 72);
        assert!(objective(&[0.8, 0.2], &[72, 28]) <= objective(&[0.8, 0.2], &[50, 50]));
    }

    #[test]
    fn budget_semantics() {
        let p = AllocationProblem::new(groups(&[0.7, 0.3]), 21, 2).unwrap();
        assert_eq!(p.per_treatment_budget(), 10);
        assert_eq!(p.dropped_units(), 1);
        assert_eq!(integer_allocation(&p).unwrap().iter().sum::<u64>(), 10);
        assert!(AllocationProblem::new(groups(&[0.7, 0.3]), 3, 2).is_err());
        assert!(AllocationProblem::new(groups(&[0.7, 0.2]), 30, 2).is_err());
        // Tiny groups still get one subject.
        let p = AllocationProblem::new(groups(&[0.997, 0.001, 0.001, 0.001]), 8, 2).unwrap();
        assert_eq!(integer_allocation(&p).unwrap(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn objective_examples() {
        assert_eq!(allocation_objective(&groups(&[1.0]), &[4.0]).unwrap(), 0.5);
        assert_eq!(allocation_objective(&groups(&[0.5, 0.5]), &[4.0, 4.0]).unwrap(), 0.5);
        let v = allocation_objective(&groups(&[0.8, 0.2]), &[72.0, 28.0]).unwrap();
        assert_abs_diff_eq!(v, 0.8 / 72f64.sqrt() + 0.2 / 28f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.132077, epsilon = 1e-6);
        assert!(allocation_objective(&groups(&[0.8, 0.2]), &[0.5, 28.0]).is_err());
    }

    #[test]
    fn locally_optimal_exhaustive() {
        let cases: [&[f64]; 4] = [&[0.6, 0.4], &[0.5, 0.3, 0.2], &[0.1, 0.2, 0.3, 0.4], &[0.85, 0.05, 0.05, 0.05]];
        for probs in cases {
            for budget in probs.len() as u64..=200 {
                let p = AllocationProblem::new(groups(probs), budget * 2, 2).unwrap();
                let sizes = integer_allocation(&p).unwrap();
                assert_eq!(sizes.iter().sum::<u64>(), budget);
                let base = objective(probs, &sizes);
                for i in 0..sizes.len() {
                    for j in 0..sizes.len() {
                        if i != j && sizes[j] > 1 {
                            let mut moved = sizes.clone();
                            moved[i] += 1;
                            moved[j] -= 1;
                            assert!(base <= objective(probs, &moved) + 1e-15, "{probs:?} {budget} {sizes:?}");
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn continuous_ratio_and_ordering(
            raw in prop::collection::vec(0.01f64..1.0, 1..6),
            budget in 10u64..5000,
            k in 2usize..5,
        ) {
            let total: f64 = raw.iter().sum();
            let mut probs: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let head: f64 = probs[1..].iter().sum();
            probs[0] = 1.0 - head;
            let budget = budget.max((k * probs.len()) as u64);
            let p = AllocationProblem::new(groups(&probs), budget, k).unwrap();
            let n = continuous_allocation(&p);
            prop_assert!((n.iter().sum::<f64>() - budget as f64 / k as f64).abs() < 1e-9 * budget as f64);
            for i in 0..n.len() {
                for j in 0..n.len() {
                    let want = (probs[i] / probs[j]).powf(2.0 / 3.0);
                    prop_assert!((n[i] / n[j] - want).abs() <= 1e-10 * want);
                    if probs[i] > probs[j] {
                        prop_assert!(n[i] >= n[j]);
                        prop_assert!(n[i] / n[j] <= probs[i] / probs[j]);
                    }
                }
            }
            let ints = integer_allocation(&p).unwrap();
            prop_assert_eq!(ints.iter().sum::<u64>(), p.per_treatment_budget());
            for i in 0..ints.len() {
                for j in 0..ints.len() {
                    if probs[i] > probs[j] {
                        prop_assert!(ints[i] >= ints[j]);
                    }
                }
            }
            let floors: Vec<u64> = n.iter().map(|&x| (x.floor() as u64).max(1)).collect();
            if floors.iter().sum::<u64>() <= p.per_treatment_budget() {
                prop_assert!(objective(&probs, &ints) <= objective(&probs, &floors) + 1e-15);
            }
        }
    }
}
