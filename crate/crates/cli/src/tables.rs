//! The three reference tables, rendered as CSV with full-precision numbers.

use std::fmt::Write as _;

use epsopt_core::bounds::{self, BoundChoice};
use epsopt_core::exact::{self, BinaryTwoArmRule, MinSampleSize, PowerSpec, ZTestVariant};
use epsopt_core::{OutcomeModel, TrialDesign};

use crate::error::{CliError, CliResult};

pub const TREATMENT_COUNTS: [usize; 6] = [2, 3, 4, 5, 6, 7];
/// Regret targets (rows of table 2) and effect sizes (rows of table 3).
pub const TARGETS: [f64; 5] = [0.01, 0.03, 0.05, 0.10, 0.15];
pub const ZTEST_ALPHAS: [f64; 2] = [0.05, 0.01];
pub const POWER_ALPHA: f64 = 0.05;
pub const POWER_BETAS: [f64; 2] = [0.20, 0.10];
/// Upper limit for the exact sample-size searches.
pub const SEARCH_LIMIT: u64 = 20_000;

/// Coefficients of `range / sqrt(n)` for the balanced bounds, one row per bound.
pub fn table1_rows() -> CliResult<Vec<(&'static str, Vec<f64>)>> {
    let outcome = OutcomeModel::default();
    let mut rows = Vec::new();
    for (label, choice) in [
        ("prop1", BoundChoice::Prop1),
        ("prop2", BoundChoice::Prop2),
        ("prop2_balanced", BoundChoice::Prop2Balanced),
    ] {
        let values = TREATMENT_COUNTS
            .iter()
            .map(|&k| Ok(bounds::bound(&TrialDesign::balanced(k, 1)?, &outcome, choice)?.value))
            .collect::<epsopt_core::Result<Vec<_>>>()?;
        rows.push((label, values));
    }
    Ok(rows)
}

fn min_n(rule: BinaryTwoArmRule, epsilon: f64) -> CliResult<u64> {
    match exact::min_sample_size(rule, epsilon, SEARCH_LIMIT)? {
        MinSampleSize::Found { n, .. } => Ok(n),
        MinSampleSize::NotFound { n_max, regret_at_max } => Err(CliError::Exhausted(format!(
            "no n up to {n_max} reaches epsilon {epsilon}; max regret at {n_max} is {}",
            regret_at_max.value
        ))),
    }
}

/// `[epsilon, es, ztest at each alpha, prop1 bound]` per row.
pub fn table2_rows(variant: ZTestVariant) -> CliResult<Vec<(f64, Vec<u64>)>> {
    let outcome = OutcomeModel::binary();
    TARGETS
        .iter()
        .map(|&eps| {
            let mut cells = vec![min_n(BinaryTwoArmRule::empirical_success(), eps)?];
            for alpha in ZTEST_ALPHAS {
                cells.push(min_n(BinaryTwoArmRule::ztest_with(alpha, variant)?, eps)?);
            }
            cells.push(bounds::sufficient_n_balanced(eps, 2, &outcome, BoundChoice::Prop1)?);
            Ok((eps, cells))
        })
        .collect()
}

/// `(delta, [(n_power, max regret of the z-test at n_power)])`.
pub type PowerRow = (f64, Vec<(u64, f64)>);

pub fn table3_rows(variant: ZTestVariant) -> CliResult<Vec<PowerRow>> {
    let rule = BinaryTwoArmRule::ztest_with(POWER_ALPHA, variant)?;
    TARGETS
        .iter()
        .map(|&delta| {
            let cells = POWER_BETAS
                .iter()
                .map(|&beta| {
                    let n = exact::power_sample_size(PowerSpec::new(POWER_ALPHA, beta, delta)?)?;
                    Ok((n, exact::max_regret(rule, n as usize)?.value))
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok((delta, cells))
        })
        .collect()
}

pub fn render(which: u8, variant: ZTestVariant) -> CliResult<String> {
    let mut csv = String::new();
    match which {
        1 => {
            csv.push_str("bound");
            for k in TREATMENT_COUNTS {
                write!(csv, ",T={k}").unwrap();
            }
            csv.push('\n');
            for (label, values) in table1_rows()? {
                csv.push_str(label);
                for v in values {
                    write!(csv, ",{v}").unwrap();
                }
                csv.push('\n');
            }
        }
        2 => {
            let v = variant.label();
            writeln!(csv, "epsilon,es,ztest_alpha_0.05_{v},ztest_alpha_0.01_{v},prop1_bound").unwrap();
            for (eps, cells) in table2_rows(variant)? {
                write!(csv, "{eps:.2}").unwrap();
                for c in cells {
                    write!(csv, ",{c}").unwrap();
                }
                csv.push('\n');
            }
        }
        3 => {
            let v = variant.label();
            csv.push_str("delta");
            for beta in POWER_BETAS {
                write!(csv, ",n_power_beta_{beta:.2},max_regret_beta_{beta:.2}_ztest_{v}").unwrap();
            }
            csv.push('\n');
            for (delta, cells) in table3_rows(variant)? {
                write!(csv, "{delta:.2}").unwrap();
                for (n, regret) in cells {
                    write!(csv, ",{n},{regret}").unwrap();
                }
                csv.push('\n');
            }
        }
        other => return Err(CliError::Input(format!("no table {other}; choose 1, 2 or 3"))),
    }
    Ok(csv)
}
