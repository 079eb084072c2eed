//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Reference values are the published table entries. Tolerances: table 1 to
//! four decimals (|x - ref| <= 5e-5), table 3 maximum regret within 5e-4,
//! integer sample sizes exact, Monte Carlo checks at four standard errors.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use epsopt_core::bounds::{self, BoundChoice, PartialValidity};
use epsopt_core::exact::{self, BinaryTwoArmRule, MinSampleSize, PowerSpec, ZTestVariant};
use epsopt_core::mcsim::{self, OutcomeDistribution, SimulationPlan};
use epsopt_core::{CovariateGroup, OutcomeModel, TrialDesign};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPSILONS: [f64; 5] = [0.01, 0.03, 0.05, 0.10, 0.15];

const TABLE1: [[f64; 6]; 3] = [
    [0.4289, 0.8578, 1.2866, 1.7155, 2.1444, 2.5733],
    [0.6539, 0.9279, 1.0892, 1.1999, 1.2827, 1.3481],
    [0.8326, 1.0481, 1.1774, 1.2686, 1.3386, 1.3950],
];
const TABLE1_TOL: f64 = 5e-5;

const TABLE2_ES: [u64; 5] = [145, 17, 6, 2, 1];
const TABLE2_Z05: [u64; 5] = [3488, 382, 138, 33, 16];
const TABLE2_Z01: [u64; 5] = [7963, 879, 310, 79, 35];
const TABLE2_PROP1: [u64; 5] = [1840, 205, 74, 19, 9];
const ZTEST_RELATIVE_TOL: f64 = 0.02;

const TABLE3_N: [[u64; 5]; 2] = [[30912, 3434, 1236, 309, 137], [42818, 4756, 1711, 427, 189]];
const TABLE3_REGRET: [[f64; 5]; 2] =
    [[0.0034, 0.0102, 0.0167, 0.0338, 0.0501], [0.0029, 0.0086, 0.0144, 0.0291, 0.0417]];
const TABLE3_BETAS: [f64; 2] = [0.20, 0.10];
const TABLE3_TOL: f64 = 5e-4;

const SEARCH_LIMIT: u64 = 20_000;
const SE_MULTIPLE: f64 = 4.0;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict { ok, detail: detail.into() }
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_epsopt"))
        .args(args)
        .output()
        .map_err(|e| format!("cannot run epsopt: {e}"))?;
    if !out.status.success() {
        return Err(format!("epsopt {} exited with {}", args.join(" "), out.status));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn min_n(rule: BinaryTwoArmRule, eps: f64) -> Option<u64> {
    match exact::min_sample_size(rule, eps, SEARCH_LIMIT).expect("valid search") {
        MinSampleSize::Found { n, .. } => Some(n),
        MinSampleSize::NotFound { .. } => None,
    }
}

fn table1_constants() -> Verdict {
    let csv = match run_cli(&["tables", "1"]) {
        Ok(s) => s,
        Err(e) => return verdict(false, e),
    };
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    let mut matched = 0;
    let mut misses = Vec::new();
    for (r, expected) in TABLE1.iter().enumerate() {
        for (c, &want) in expected.iter().enumerate() {
            let got = rows.get(r).and_then(|row| row.get(c)).copied().unwrap_or(f64::NAN);
            if (got - want).abs() <= TABLE1_TOL {
                matched += 1;
            } else {
                misses.push(format!("row {r} T={}: {got} vs {want}", c + 2));
            }
        }
    }
    verdict(misses.is_empty(), format!("{matched}/18 constants within {TABLE1_TOL} {}", misses.join("; ")))
}

fn integer_column(label: &str, got: &[Option<u64>], want: &[u64]) -> Verdict {
    let shown: Vec<String> = got.iter().map(|g| g.map_or("none".into(), |n| n.to_string())).collect();
    let ok = got.iter().zip(want).all(|(g, w)| *g == Some(*w));
    verdict(ok, format!("{label} = [{}], expected {want:?}", shown.join(", ")))
}

fn table2_es() -> Verdict {
    let got: Vec<_> = EPSILONS.iter().map(|&e| min_n(BinaryTwoArmRule::empirical_success(), e)).collect();
    integer_column("es", &got, &TABLE2_ES)
}

fn table2_prop1() -> Verdict {
    let outcome = OutcomeModel::binary();
    let got: Vec<_> = EPSILONS
        .iter()
        .map(|&e| bounds::sufficient_n_balanced(e, 2, &outcome, BoundChoice::Prop1).ok())
        .collect();
    integer_column("prop1", &got, &TABLE2_PROP1)
}

fn table2_ztest() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    let mut exact_cells = 0;
    for (alpha, expected) in [(0.05, TABLE2_Z05), (0.01, TABLE2_Z01)] {
        for (&eps, &want) in EPSILONS.iter().zip(&expected) {
            let pooled = min_n(BinaryTwoArmRule::ztest_with(alpha, ZTestVariant::Pooled).unwrap(), eps);
            if pooled == Some(want) {
                exact_cells += 1;
                continue;
            }
            let unpooled = min_n(BinaryTwoArmRule::ztest_with(alpha, ZTestVariant::Unpooled).unwrap(), eps);
            if unpooled == Some(want) {
                exact_cells += 1;
                notes.push(format!("alpha {alpha} eps {eps}: unpooled {want}, pooled {pooled:?}"));
                continue;
            }
            let deviation = [pooled, unpooled]
                .iter()
                .flatten()
                .map(|&n| (n as f64 - want as f64).abs() / want as f64)
                .fold(f64::INFINITY, f64::min);
            ok &= deviation <= ZTEST_RELATIVE_TOL;
            notes.push(format!(
                "alpha {alpha} eps {eps}: expected {want}, pooled {pooled:?}, unpooled {unpooled:?}, deviation {:.2}%",
                100.0 * deviation
            ));
        }
    }
    verdict(ok, format!("{exact_cells}/10 exact; {}", if notes.is_empty() { "all pooled".into() } else { notes.join("; ") }))
}

fn table3_power() -> Verdict {
    let mut got = Vec::new();
    for beta in TABLE3_BETAS {
        for delta in EPSILONS {
            got.push(PowerSpec::new(0.05, beta, delta).and_then(exact::power_sample_size).ok());
        }
    }
    let want: Vec<u64> = TABLE3_N.iter().flatten().copied().collect();
    integer_column("n_power", &got, &want)
}

fn table3_regret() -> Verdict {
    let rule = BinaryTwoArmRule::ztest_with(0.05, ZTestVariant::Pooled).unwrap();
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    for (row, ns) in TABLE3_N.iter().enumerate() {
        for (col, &n) in ns.iter().enumerate() {
            let value = exact::max_regret(rule, n as usize).expect("valid size").value;
            worst = worst.max((value - TABLE3_REGRET[row][col]).abs());
            values.push(format!("{value:.4}"));
        }
    }
    verdict(worst <= TABLE3_TOL, format!("pooled max regret [{}], largest error {worst:.2e}", values.join(", ")))
}

fn seven_arm_example() -> Verdict {
    let out = match run_cli(&["size", "--epsilon", "0.15", "--treatments", "7", "--bound", "prop2"]) {
        Ok(s) => s,
        Err(e) => return verdict(false, e),
    };
    let n = out
        .lines()
        .find_map(|l| l.strip_prefix("prop2 "))
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|v| v.parse::<u64>().ok());
    verdict(n == Some(81), format!("size reports {n:?} per arm, expected 81"))
}

/// All ordered compositions of `total` into `parts` positive integers.
fn compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (1..=total - (parts as u64 - 1))
        .flat_map(|first| {
            compositions(total - first, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

fn balanced_is_best() -> Verdict {
    let outcome = OutcomeModel::binary();
    let mut designs = 0;
    let mut failures = Vec::new();
    for k in 2..=4usize {
        for n in 2..=6u64 {
            let balanced = TrialDesign::balanced(k, n).unwrap();
            let b1 = bounds::prop1_bound(&balanced, &outcome).unwrap().value;
            let b2 = bounds::prop2_bound(&balanced, &outcome).unwrap().value;
            for sizes in compositions(k as u64 * n, k) {
                designs += 1;
                let d = TrialDesign::single_group(sizes.clone()).unwrap();
                let p1 = bounds::prop1_bound(&d, &outcome).unwrap().value;
                let p2 = bounds::prop2_bound(&d, &outcome).unwrap().value;
                if p1 < b1 - 1e-12 || p2 < b2 - 1e-10 {
                    failures.push(format!("{sizes:?}"));
                }
            }
        }
    }
    verdict(failures.is_empty(), format!("{designs} designs, {} beat the balanced design {}", failures.len(), failures.join(" ")))
}

/// ES regret by summing over every outcome sequence of both arms.
fn brute_force_regret(n: usize, mu_a: f64, mu_b: f64) -> f64 {
    let mut share_b = 0.0;
    for bits in 0u32..1 << (2 * n) {
        let mut prob = 1.0;
        let (mut sa, mut sb) = (0, 0);
        for j in 0..2 * n {
            let success = bits >> j & 1 == 1;
            let mu = if j < n { mu_a } else { mu_b };
            prob *= if success { mu } else { 1.0 - mu };
            if success {
                if j < n {
                    sa += 1;
                } else {
                    sb += 1;
                }
            }
        }
        share_b += prob
            * match sb.cmp(&sa) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Less => 0.0,
            };
    }
    mu_a.max(mu_b) - (mu_a * (1.0 - share_b) + mu_b * share_b)
}

fn brute_force_oracle() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for n in 1..=4 {
        let eval = exact::ExactEvaluator::new(BinaryTwoArmRule::empirical_success(), n).unwrap();
        for i in 0..=20 {
            for j in 0..=20 {
                let (a, b) = (i as f64 / 20.0, j as f64 / 20.0);
                worst = worst.max((eval.regret(a, b) - brute_force_regret(n, a, b)).abs());
                checked += 1;
            }
        }
    }
    verdict(worst <= 1e-12, format!("{checked} states, largest difference {worst:.1e}"))
}

fn monte_carlo_bounds() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let outcome = OutcomeModel::binary();
    let mut violations = Vec::new();
    let mut closest = f64::INFINITY;
    for case in 0..200u64 {
        let k = rng.random_range(2..=4usize);
        let g = rng.random_range(1..=2usize);
        let groups = if g == 1 {
            vec![CovariateGroup::new("all", 1.0)]
        } else {
            let p = rng.random_range(0.1..0.9);
            vec![CovariateGroup::new("g1", p), CovariateGroup::new("g2", 1.0 - p)]
        };
        let sizes: Vec<Vec<u64>> = (0..g).map(|_| (0..k).map(|_| rng.random_range(1..=50)).collect()).collect();
        let state: Vec<Vec<OutcomeDistribution>> = (0..g)
            .map(|_| (0..k).map(|_| OutcomeDistribution::Bernoulli { mean: rng.random_range(0.0..=1.0) }).collect())
            .collect();
        let design = TrialDesign::new(epsopt_core::model::default_labels(k), groups, sizes).unwrap();
        let bound = bounds::bound(&design, &outcome, BoundChoice::BestOfBoth).unwrap().value;
        let plan = SimulationPlan::new(design, outcome, state, 100_000, case).unwrap();
        let est = mcsim::estimate_regret(&plan).unwrap();
        let slack = bound + SE_MULTIPLE * est.std_error - est.regret;
        closest = closest.min(slack);
        if slack < 0.0 {
            violations.push(format!("case {case}: {} > {bound}", est.regret));
        }
    }
    verdict(
        violations.is_empty(),
        format!("200 cases, {} violations, smallest slack {closest:.4} {}", violations.len(), violations.join("; ")),
    )
}

fn partial_validity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7_000_001);
    let mut failures = Vec::new();
    for case in 0..1000 {
        let low = rng.random_range(-5.0..5.0);
        let outcome = OutcomeModel::new(low, low + rng.random_range(0.1..10.0)).unwrap();
        let range = outcome.range();
        let k = rng.random_range(2..=5usize);
        let design = TrialDesign::single_group((0..k).map(|_| rng.random_range(1..=100)).collect()).unwrap();
        let eps = rng.random_range(0.001..1.0) * range;
        let kappa = rng.random_range(0.0..0.99);
        let choice = if rng.random_bool(0.5) { BoundChoice::Prop1 } else { BoundChoice::Prop2 };

        let zero = PartialValidity::new(0.0).unwrap();
        if bounds::adjusted_epsilon(eps, zero, &outcome).unwrap() != Some(eps) {
            failures.push(format!("case {case}: kappa 0 changes epsilon"));
        }
        let base = bounds::bound(&design, &outcome, choice).unwrap().value;
        let pv0 = bounds::partial_validity_bound(&design, &outcome, zero, choice).unwrap().value;
        if (pv0 - base).abs() > 1e-12 * base.max(1.0) {
            failures.push(format!("case {case}: kappa 0 bound {pv0} vs {base}"));
        }

        let pv = PartialValidity::new(kappa).unwrap();
        let adjusted = bounds::adjusted_epsilon(eps, pv, &outcome).unwrap();
        if adjusted.is_none() != (kappa * range >= eps) {
            failures.push(format!("case {case}: feasibility disagrees with kappa * range >= epsilon"));
        }
        if let Some(target) = adjusted {
            // A design meeting the adjusted target meets epsilon overall.
            let pvb = (1.0 - kappa) * target + kappa * range;
            if (pvb - eps).abs() > 1e-9 * range {
                failures.push(format!("case {case}: adjusted target maps back to {pvb}, not {eps}"));
            }
        }
        let bound = bounds::partial_validity_bound(&design, &outcome, pv, choice).unwrap().value;
        if (bound - ((1.0 - kappa) * base + kappa * range)).abs() > 1e-12 * range {
            failures.push(format!("case {case}: partial-validity bound {bound}"));
        }
    }
    verdict(failures.is_empty(), format!("1000 cases, {} failures {}", failures.len(), failures.join("; ")))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    check: fn() -> Verdict,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "table 1 constants", limit: Duration::from_secs(1), check: table1_constants },
        Criterion { id: 2, name: "table 2 ES column", limit: Duration::from_secs(120), check: table2_es },
        Criterion { id: 3, name: "table 2 prop1 column", limit: Duration::from_secs(1), check: table2_prop1 },
        Criterion { id: 4, name: "table 2 z-test columns", limit: Duration::from_secs(900), check: table2_ztest },
        Criterion { id: 5, name: "table 3 power sizes", limit: Duration::from_secs(1), check: table3_power },
        Criterion { id: 6, name: "table 3 max regret", limit: Duration::from_secs(600), check: table3_regret },
        Criterion { id: 7, name: "seven-arm example", limit: Duration::from_secs(1), check: seven_arm_example },
        Criterion { id: 8, name: "balanced designs minimize bounds", limit: Duration::from_secs(60), check: balanced_is_best },
        Criterion { id: 9, name: "brute-force ES oracle", limit: Duration::MAX, check: brute_force_oracle },
        Criterion { id: 10, name: "Monte Carlo bound validation", limit: Duration::from_secs(300), check: monte_carlo_bounds },
        Criterion { id: 11, name: "partial validity properties", limit: Duration::MAX, check: partial_validity },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let v = (c.check)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let ok = v.ok && in_time;
        if !ok {
            failed += 1;
        }
        let timing = if in_time {
            format!("{:.2}s", elapsed.as_secs_f64())
        } else {
            format!("{:.2}s, over the {}s limit", elapsed.as_secs_f64(), c.limit.as_secs())
        };
        println!("{} {:>2} {}: {} ({timing})", if ok { "PASS" } else { "FAIL" }, c.id, c.name, v.detail.trim_end());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
