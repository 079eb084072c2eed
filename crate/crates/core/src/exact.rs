//! Exact finite-sample regret for binary outcomes, two treatments and a
//! balanced design with `n` subjects per arm.
//!
//! Treatment `a` is the status quo and `b` the innovation. A rule is fully
//! described by a decision table: for success counts `(x_a, x_b)` it sends a
//! share `D(x_a, x_b)` of the population to `b`. Both supported rules have
//! tables that are monotone in `x_b`, so for each `x_a` the table is captured
//! by the first count `full_from[x_a]` at which everyone gets `b` and an
//! optional single tie count at which the population is split in half. With
//! that representation one state evaluation costs O(n) through binomial
//! tail sums.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binomial::Binomial;
use crate::error::{domain, Error, Result};
use crate::golden::golden_section;
use crate::model::{Method, RegretReport, State};
use crate::normal::upper_quantile;

/// Variance estimate used by the one-sided two-sample z-test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZTestVariant {
    /// `p(1-p)(2/n)` with `p` the pooled success rate.
    #[default]
    Pooled,
    /// `(p_a(1-p_a) + p_b(1-p_b))/n`.
    Unpooled,
}

impl ZTestVariant {
    pub fn label(self) -> &'static str {
        match self {
            ZTestVariant::Pooled => "pooled",
            ZTestVariant::Unpooled => "unpooled",
        }
    }
}

/// Treatment rule for the binary two-arm problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BinaryTwoArmRule {
    /// Choose the arm with more successes; split the population evenly on ties.
    EmpiricalSuccess,
    /// Choose `b` only when a one-sided z-test rejects `mu_b <= mu_a` at level `alpha`.
    ZTest { alpha: f64, variant: ZTestVariant },
}

impl BinaryTwoArmRule {
    pub fn empirical_success() -> Self {
        BinaryTwoArmRule::EmpiricalSuccess
    }

    pub fn ztest(alpha: f64) -> Result<Self> {
        Self::ztest_with(alpha, ZTestVariant::Pooled)
    }

    pub fn ztest_with(alpha: f64, variant: ZTestVariant) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(domain(format!("test level alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(BinaryTwoArmRule::ZTest { alpha, variant })
    }
}

/// Two-sample z statistic for `mu_b > mu_a` from success counts out of `n` each.
///
/// With zero estimated variance the statistic is 0 when the sample means
/// agree and infinite in the direction of the difference otherwise (only
/// reachable with the unpooled variance, e.g. `x_a = 0, x_b = n`).
pub fn z_statistic(x_a: usize, x_b: usize, n: usize, variant: ZTestVariant) -> f64 {
    let nf = n as f64;
    let (ma, mb) = (x_a as f64 / nf, x_b as f64 / nf);
    let var = match variant {
        ZTestVariant::Pooled => {
            let p = (x_a + x_b) as f64 / (2.0 * nf);
            p * (1.0 - p) * 2.0 / nf
        }
        ZTestVariant::Unpooled => (ma * (1.0 - ma) + mb * (1.0 - mb)) / nf,
    };
    let diff = mb - ma;
    if var > 0.0 {
        diff / var.sqrt()
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Share of the population assigned to treatment `b` for every outcome pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTable {
    n: usize,
    full_from: Vec<usize>,
    half_at: Vec<Option<usize>>,
}

impl DecisionTable {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `D(x_a, x_b)`: 0, 1/2 or 1.
    pub fn share_b(&self, x_a: usize, x_b: usize) -> f64 {
        if x_b >= self.full_from[x_a] {
            1.0
        } else if self.half_at[x_a] == Some(x_b) {
            0.5
        } else {
            0.0
        }
    }

    /// Smallest `x_b` assigning everyone to `b` given `x_a` (`n + 1` if none).
    pub fn threshold(&self, x_a: usize) -> usize {
        self.full_from[x_a]
    }

    /// Dense `(n+1) x (n+1)` matrix indexed `[x_a][x_b]`.
    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        (0..=self.n).map(|a| (0..=self.n).map(|b| self.share_b(a, b)).collect()).collect()
    }
}

/// Decision table without the monotonicity check: each z-test row is located
/// by bisection on `x_b`, which is exact whenever the statistic increases in
/// `x_b` (true for both variants).
fn threshold_table(rule: BinaryTwoArmRule, n: usize) -> Result<DecisionTable> {
    if n == 0 {
        return Err(domain("per-arm sample size must be positive"));
    }
    match rule {
        BinaryTwoArmRule::EmpiricalSuccess => Ok(DecisionTable {
            n,
            full_from: (0..=n).map(|a| a + 1).collect(),
            half_at: (0..=n).map(Some).collect(),
        }),
        BinaryTwoArmRule::ZTest { alpha, variant } => {
            let critical = upper_quantile(alpha)?;
            let full_from = (0..=n)
                .map(|a| {
                    // A rejection needs a strictly positive difference.
                    let (mut lo, mut hi) = (a + 1, n + 1);
                    while lo < hi {
                        let mid = lo + (hi - lo) / 2;
                        if z_statistic(a, mid, n, variant) > critical {
                            hi = mid;
                        } else {
                            lo = mid + 1;
                        }
                    }
                    lo
                })
                .collect();
            Ok(DecisionTable { n, full_from, half_at: vec![None; n + 1] })
        }
    }
}

/// Builds the decision table of `rule` for `n` subjects per arm.
///
/// For the z-test every row is checked to reject exactly on an upper
/// interval of `x_b`, which the threshold representation relies on.
pub fn decision_boundary(rule: BinaryTwoArmRule, n: usize) -> Result<DecisionTable> {
    let table = threshold_table(rule, n)?;
    if let BinaryTwoArmRule::ZTest { alpha, variant } = rule {
        let critical = upper_quantile(alpha)?;
        for a in 0..=n {
            for b in 0..=n {
                let rejects = b > a && z_statistic(a, b, n, variant) > critical;
                if rejects != (b >= table.full_from[a]) {
                    return Err(Error::Internal(format!(
                        "z-test rejection region not monotone at n={n}, x_a={a}, x_b={b}"
                    )));
                }
            }
        }
    }
    Ok(table)
}

/// Evaluates a fixed decision table at arbitrary states.
#[derive(Debug, Clone)]
pub struct ExactEvaluator {
    table: DecisionTable,
}

impl ExactEvaluator {
    pub fn new(rule: BinaryTwoArmRule, n: usize) -> Result<Self> {
        Ok(Self { table: decision_boundary(rule, n)? })
    }

    pub fn from_table(table: DecisionTable) -> Self {
        Self { table }
    }

    pub fn table(&self) -> &DecisionTable {
        &self.table
    }

    /// `(P(choose a), P(choose b))` in expectation over outcomes.
    fn choice_probs(&self, mu_a: f64, mu_b: f64) -> (f64, f64) {
        let n = self.table.n;
        let xa = Binomial::new(n, mu_a);
        let xb = Binomial::new(n, mu_b);
        let (mut to_a, mut to_b) = (0.0, 0.0);
        for (a, pa) in xa.iter() {
            let from = self.table.full_from[a];
            let half = self.table.half_at[a].map_or(0.0, |k| 0.5 * xb.pmf(k));
            to_b += pa * (xb.upper_tail(from) + half);
            to_a += pa * (xb.lower_tail_strict(from) - half);
        }
        (to_a, to_b)
    }

    /// Expected share of the population assigned to `b`.
    pub fn expected_assignment(&self, mu_a: f64, mu_b: f64) -> f64 {
        self.choice_probs(mu_a, mu_b).1.clamp(0.0, 1.0)
    }

    /// Regret `|mu_a - mu_b| * P(inferior choice)`, ties counted at half weight.
    pub fn regret(&self, mu_a: f64, mu_b: f64) -> f64 {
        if mu_a == mu_b {
            return 0.0;
        }
        let (to_a, to_b) = self.choice_probs(mu_a, mu_b);
        let wrong = if mu_b > mu_a { to_a } else { to_b };
        (mu_a - mu_b).abs() * wrong.clamp(0.0, 1.0)
    }
}

fn check_means(mu_a: f64, mu_b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&mu_a) || !(0.0..=1.0).contains(&mu_b) {
        return Err(domain(format!("success rates must lie in [0, 1], got ({mu_a}, {mu_b})")));
    }
    Ok(())
}

pub fn expected_assignment(rule: BinaryTwoArmRule, n: usize, mu_a: f64, mu_b: f64) -> Result<f64> {
    check_means(mu_a, mu_b)?;
    Ok(ExactEvaluator::new(rule, n)?.expected_assignment(mu_a, mu_b))
}

pub fn exact_regret(rule: BinaryTwoArmRule, n: usize, mu_a: f64, mu_b: f64) -> Result<f64> {
    check_means(mu_a, mu_b)?;
    Ok(ExactEvaluator::new(rule, n)?.regret(mu_a, mu_b))
}

/// Tuning of the maximum-regret search over the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Grid points along each coordinate.
    pub grid: usize,
    /// Grid maxima refined locally.
    pub starts: usize,
    /// Coordinate tolerance of the local refinement.
    pub tol: f64,
    /// Upper limit on coordinate-ascent sweeps per start.
    pub max_sweeps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { grid: 201, starts: 20, tol: 1e-7, max_sweeps: 40 }
    }
}

/// Search coordinates: `mu_a = c - g/2`, `mu_b = c + g/2`.
fn to_means(c: f64, g: f64) -> (f64, f64) {
    ((c - 0.5 * g).clamp(0.0, 1.0), (c + 0.5 * g).clamp(0.0, 1.0))
}

fn max_gap(c: f64) -> f64 {
    2.0 * c.min(1.0 - c)
}

/// Candidate gaps `g`: a uniform grid over `[-1, 1]` plus a fine grid within
/// eight standard errors of zero, where the regret ridge of large designs lives.
fn gap_grid(n: usize, points: usize) -> Vec<f64> {
    let half = (points / 2).max(1);
    let mut gaps: Vec<f64> = (-(half as i64)..=half as i64).map(|j| j as f64 / half as f64).collect();
    let scale = 1.0 / (n as f64).sqrt();
    for j in 1..=128 {
        let g = scale * j as f64 / 16.0;
        if g < 1.0 {
            gaps.push(g);
            gaps.push(-g);
        }
    }
    gaps.sort_by(f64::total_cmp);
    gaps.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    gaps
}

fn neighbour_spacing(sorted: &[f64], i: usize) -> f64 {
    let left = if i > 0 { sorted[i] - sorted[i - 1] } else { 0.0 };
    let right = if i + 1 < sorted.len() { sorted[i + 1] - sorted[i] } else { 0.0 };
    left.max(right)
}

/// Maximum of the exact regret over all states in `[0, 1]^2`.
///
/// A grid over centre and gap coordinates is followed by coordinate-wise
/// golden-section ascent from the best grid points.
pub fn max_regret(rule: BinaryTwoArmRule, n: usize) -> Result<RegretReport> {
    max_regret_with(rule, n, SearchConfig::default())
}

pub fn max_regret_with(rule: BinaryTwoArmRule, n: usize, config: SearchConfig) -> Result<RegretReport> {
    let eval = ExactEvaluator::new(rule, n)?;
    Ok(max_regret_of(&eval, config))
}

pub fn max_regret_of(eval: &ExactEvaluator, config: SearchConfig) -> RegretReport {
    let n = eval.table().n();
    let centres: Vec<f64> = (0..config.grid).map(|i| i as f64 / (config.grid - 1) as f64).collect();
    let gaps = gap_grid(n, config.grid);

    // (value, centre index, gap index), in fixed row-major order.
    let rows: Vec<Vec<(f64, usize, usize)>> = centres
        .par_iter()
        .enumerate()
        .map(|(ci, &c)| {
            let limit = max_gap(c);
            gaps.iter()
                .enumerate()
                .filter(|(_, g)| g.abs() <= limit + 1e-15 && **g != 0.0)
                .map(|(gi, &g)| {
                    let (a, b) = to_means(c, g);
                    (eval.regret(a, b), ci, gi)
                })
                .collect()
        })
        .collect();
    let mut cells: Vec<(f64, usize, usize)> = rows.into_iter().flatten().collect();
    cells.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    cells.truncate(config.starts.max(1));

    let centre_step = 1.0 / (config.grid - 1) as f64;
    let refined: Vec<(f64, f64, f64)> = cells
        .par_iter()
        .map(|&(v, ci, gi)| {
            refine(eval, centres[ci], gaps[gi], v, centre_step, neighbour_spacing(&gaps, gi), config)
        })
        .collect();

    let mut best = (0.0, 0.5, 0.0);
    for r in refined {
        if r.0 > best.0 {
            best = r;
        }
    }
    let (a, b) = to_means(best.1, best.2);
    RegretReport {
        value: best.0,
        argmax_state: Some(State::single_group(vec![a, b])),
        method: Method::ExactBinary,
    }
}

/// Coordinate-wise golden-section ascent from a grid point. Line searches
/// run along the centre and gap directions and along each raw axis, so the
/// search can also slide along the edges of the unit square.
fn refine(
    eval: &ExactEvaluator,
    c: f64,
    g: f64,
    mut value: f64,
    c_half: f64,
    g_half: f64,
    config: SearchConfig,
) -> (f64, f64, f64) {
    let (mut a, mut b) = to_means(c, g);
    let directions = [((0.5, 0.5), c_half), ((-0.5, 0.5), g_half), ((1.0, 0.0), g_half), ((0.0, 1.0), g_half)];
    let golden_tol = 0.1 * config.tol;
    for _ in 0..config.max_sweeps {
        let (a0, b0) = (a, b);
        for &((da, db), half) in &directions {
            let (lo, hi) = line_limits(a, b, da, db, half);
            if hi <= lo {
                continue;
            }
            let point = |t: f64| ((a + t * da).clamp(0.0, 1.0), (b + t * db).clamp(0.0, 1.0));
            let m = golden_section(
                |t| {
                    let (x, y) = point(t);
                    -eval.regret(x, y)
                },
                lo,
                hi,
                golden_tol,
                false,
                200,
            );
            if -m.value > value {
                value = -m.value;
                (a, b) = point(m.x);
            }
        }
        if (a - a0).abs() < config.tol && (b - b0).abs() < config.tol {
            break;
        }
    }
    (value, 0.5 * (a + b), b - a)
}

/// Range of `t` in `[-half, half]` keeping `(a, b) + t (da, db)` in the unit square.
fn line_limits(a: f64, b: f64, da: f64, db: f64, half: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (-half, half);
    for (x, d) in [(a, da), (b, db)] {
        if d > 0.0 {
            lo = lo.max(-x / d);
            hi = hi.min((1.0 - x) / d);
        } else if d < 0.0 {
            lo = lo.max((1.0 - x) / d);
            hi = hi.min(-x / d);
        }
    }
    (lo, hi)
}

/// Outcome of [`min_sample_size`].
#[derive(Debug, Clone, PartialEq)]
pub enum MinSampleSize {
    Found {
        n: u64,
        max_regret: RegretReport,
        /// Sizes in `n+1..=n+10` whose maximum regret exceeds epsilon again.
        non_monotone: Vec<u64>,
    },
    NotFound {
        n_max: u64,
        regret_at_max: RegretReport,
    },
}

const MONOTONE_CHECK: u64 = 10;
const WITNESSES: usize = 16;

/// Cheap rejection of sample sizes: a state whose regret already exceeds
/// epsilon proves the maximum does too. Worst-case states from earlier full
/// searches serve as witnesses because the maximizer moves slowly with `n`.
struct Screen {
    rule: BinaryTwoArmRule,
    epsilon: f64,
    witnesses: Vec<(f64, f64)>,
}

impl Screen {
    /// `Ok(None)` when a witness rules `n` out, otherwise the full search.
    fn check(&mut self, n: u64) -> Result<Option<RegretReport>> {
        let eval = ExactEvaluator::from_table(threshold_table(self.rule, n as usize)?);
        if let Some(i) = self.witnesses.iter().position(|&(a, b)| eval.regret(a, b) > self.epsilon) {
            let w = self.witnesses.remove(i);
            self.witnesses.insert(0, w);
            return Ok(None);
        }
        let report = max_regret(self.rule, n as usize)?;
        if report.value > self.epsilon {
            if let Some(state) = &report.argmax_state {
                let m = &state.means()[0];
                self.witnesses.insert(0, (m[0], m[1]));
                self.witnesses.truncate(WITNESSES);
            }
        }
        Ok(Some(report))
    }

    fn exceeds(&mut self, n: u64) -> Result<bool> {
        Ok(self.check(n)?.is_none_or(|r| r.value > self.epsilon))
    }
}

/// Smallest per-arm size whose maximum regret is at most `epsilon`.
///
/// Maximum regret is not monotone in `n` for test rules, so sizes are tried
/// in increasing order. Most are rejected through [`Screen`]; the full search
/// runs only for sizes no witness rules out. The ten sizes after the answer
/// are re-checked and any that fail are reported in `non_monotone`.
pub fn min_sample_size(rule: BinaryTwoArmRule, epsilon: f64, n_max: u64) -> Result<MinSampleSize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if n_max == 0 {
        return Err(domain("n_max must be positive"));
    }
    let mut screen = Screen { rule, epsilon, witnesses: Vec::new() };
    for n in 1..=n_max {
        if let Some(report) = screen.check(n)? {
            if report.value <= epsilon {
                let mut non_monotone = Vec::new();
                for m in n + 1..=n + MONOTONE_CHECK {
                    if screen.exceeds(m)? {
                        non_monotone.push(m);
                    }
                }
                return Ok(MinSampleSize::Found { n, max_regret: report, non_monotone });
            }
        }
    }
    Ok(MinSampleSize::NotFound { n_max, regret_at_max: max_regret(rule, n_max as usize)? })
}

/// Type I error, type II error and effect size for power-based sizing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSpec {
    alpha: f64,
    beta: f64,
    delta: f64,
}

impl PowerSpec {
    pub fn new(alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("delta", delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(domain(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(Self { alpha, beta, delta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Per-arm size giving a one-sided two-proportion z-test level `alpha` and
/// power `1 - beta` at the state `(mu_a, mu_b)` (normal approximation).
pub fn power_sample_size_general(mu_a: f64, mu_b: f64, alpha: f64, beta: f64) -> Result<u64> {
    if !(mu_a > 0.0 && mu_a < 1.0 && mu_b > 0.0 && mu_b < 1.0) {
        return Err(domain(format!("success rates must lie in (0, 1), got ({mu_a}, {mu_b})")));
    }
    if mu_a == mu_b {
        return Err(domain("power sizing needs distinct success rates"));
    }
    let z_alpha = upper_quantile(alpha)?;
    let z_beta = upper_quantile(beta)?;
    let mid = 0.5 * (mu_a + mu_b);
    let spread = (mu_a * (1.0 - mu_a) + mu_b * (1.0 - mu_b)).sqrt();
    let root = z_alpha * (2.0 * mid * (1.0 - mid)).sqrt() + z_beta * spread;
    Ok((root * root / (mu_b - mu_a).powi(2)).ceil() as u64)
}

/// Power-based size at the least favourable state with effect `delta`,
/// `mu_a = (1 - delta)/2`.
pub fn power_sample_size(spec: PowerSpec) -> Result<u64> {
    let z_alpha = upper_quantile(spec.alpha)?;
    let z_beta = upper_quantile(spec.beta)?;
    let d = spec.delta;
    let root = z_alpha + z_beta * (1.0 - d * d).sqrt();
    Ok((root * root / (2.0 * d * d)).ceil() as u64)
}
