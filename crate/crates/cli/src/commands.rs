use std::io::Write;

use epsopt_core::allocate::{self, AllocationProblem};
use epsopt_core::bounds::{self, BoundChoice, PartialValidity};
use epsopt_core::exact::{self, BinaryTwoArmRule, MinSampleSize, PowerSpec, ZTestVariant};
use epsopt_core::mcsim::{self, OutcomeDistribution, SimulationPlan};
use epsopt_core::{CovariateGroup, Method, OutcomeModel, RegretReport, TrialDesign};

use crate::args::{
    AllocateArgs, BoundArgs, Cli, Command, DesignSource, DistFlag, ExactArgs, RangeArg, RuleFlag, SimulateArgs,
    SizeArgs, TablesArgs,
};
use crate::document::DesignDocument;
use crate::error::{CliError, CliResult};
use crate::format::sig6;
use crate::tables;

/// Standard streams for one invocation: the report and warning lines.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub warn: &'a mut dyn Write,
}

const SE_MULTIPLE: f64 = 4.0;

pub fn run(cli: Cli, io: &mut Io<'_>) -> CliResult<()> {
    match cli.command {
        Command::Bound(a) => bound(a, io),
        Command::Size(a) => size(a, io),
        Command::Exact(a) => exact(a, io),
        Command::Tables(a) => tables(a, io),
        Command::Allocate(a) => allocate(a, io),
        Command::Simulate(a) => simulate(a, io),
    }
}

fn line(io: &mut Io<'_>, label: &str, value: impl std::fmt::Display) -> CliResult<()> {
    writeln!(io.out, "{label:<24}{value}")?;
    Ok(())
}

fn range_outcome(range: &RangeArg) -> CliResult<Option<OutcomeModel>> {
    match range.range.as_deref() {
        None => Ok(None),
        Some(&[lo, hi]) => Ok(Some(OutcomeModel::new(lo, hi)?)),
        Some(_) => Err(CliError::Input("--range takes two values".into())),
    }
}

fn load_design(source: &DesignSource, range: &RangeArg, io: &mut Io<'_>) -> CliResult<DesignDocument> {
    let outcome = range_outcome(range)?;
    match (&source.document, source.treatments, source.n) {
        (Some(path), _, _) => {
            let mut doc = DesignDocument::load(path)?;
            if let Some(o) = outcome {
                writeln!(io.warn, "warning: --range overrides the outcome range in {}", path.display())?;
                doc.outcome = o;
            }
            Ok(doc)
        }
        (None, Some(k), Some(n)) => {
            Ok(DesignDocument::new(outcome.unwrap_or_default(), TrialDesign::balanced(k, n)?))
        }
        _ => Err(CliError::Input("give a design document, or both --treatments and --n".into())),
    }
}

fn override_value<T: Copy>(
    doc_value: Option<T>,
    flag: Option<T>,
    name: &str,
    io: &mut Io<'_>,
) -> CliResult<Option<T>> {
    if flag.is_some() && doc_value.is_some() {
        writeln!(io.warn, "warning: --{name} overrides the document's {name}")?;
    }
    Ok(flag.or(doc_value))
}

fn describe(doc: &DesignDocument, io: &mut Io<'_>) -> CliResult<()> {
    let d = &doc.design;
    let groups = d.num_groups();
    line(
        io,
        "design",
        format!(
            "{} treatments, {groups} group{}, {} subjects",
            d.num_treatments(),
            if groups == 1 { "" } else { "s" },
            d.total()
        ),
    )?;
    line(io, "outcome range", format!("[{}, {}]", doc.outcome.low(), doc.outcome.high()))
}

fn report(io: &mut Io<'_>, r: &RegretReport) -> CliResult<()> {
    line(io, r.method.label(), sig6(r.value))
}

fn bound(args: BoundArgs, io: &mut Io<'_>) -> CliResult<()> {
    let mut doc = load_design(&args.source, &args.range, io)?;
    let kappa_flag = args.kappa.map(PartialValidity::new).transpose()?;
    doc.partial_validity = override_value(doc.partial_validity, kappa_flag, "kappa", io)?;
    doc.epsilon = override_value(doc.epsilon, args.epsilon, "epsilon", io)?;
    describe(&doc, io)?;

    let (design, outcome) = (&doc.design, &doc.outcome);
    let mut reports = Vec::new();
    if design.is_single_group() {
        reports.push(bounds::prop1_bound(design, outcome)?);
        reports.push(bounds::prop2_bound(design, outcome)?);
        if let Some(n) = design.balanced_size(0) {
            reports.push(bounds::prop2_balanced_bound(n, design.num_treatments(), outcome)?);
        }
    } else {
        reports.push(bounds::covariate_prop1_bound(design, outcome)?);
        reports.push(bounds::covariate_prop2_bound(design, outcome)?);
    }
    for r in &reports {
        report(io, r)?;
    }

    let mut best = bounds::bound(design, outcome, BoundChoice::BestOfBoth)?;
    if let Some(pv) = doc.partial_validity {
        line(io, "kappa", pv.kappa())?;
        if design.is_single_group() {
            let p1 = bounds::partial_validity_bound(design, outcome, pv, BoundChoice::Prop1)?;
            let p2 = bounds::partial_validity_bound(design, outcome, pv, BoundChoice::Prop2)?;
            report(io, &p1)?;
            report(io, &p2)?;
            best = if p2.value < p1.value { p2 } else { p1 };
        } else {
            writeln!(io.warn, "warning: partial-validity bounds need a design without covariate groups")?;
        }
    }
    if let Some(eps) = doc.epsilon {
        let verdict = if best.value <= eps { "epsilon-optimal" } else { "not shown epsilon-optimal" };
        line(io, "epsilon", format!("{} ({verdict} by {})", sig6(eps), best.method))?;
    }
    Ok(())
}

fn size(args: SizeArgs, io: &mut Io<'_>) -> CliResult<()> {
    let outcome = range_outcome(&args.range)?.unwrap_or_default();
    line(io, "epsilon", sig6(args.epsilon))?;
    line(io, "treatments", args.treatments)?;
    line(io, "outcome range", format!("[{}, {}]", outcome.low(), outcome.high()))?;
    let mut epsilon = args.epsilon;
    if let Some(kappa) = args.kappa {
        let pv = PartialValidity::new(kappa)?;
        line(io, "kappa", kappa)?;
        match bounds::adjusted_epsilon(args.epsilon, pv, &outcome)? {
            Some(e) => {
                line(io, "adjusted epsilon", sig6(e))?;
                epsilon = e;
            }
            None => {
                return Err(CliError::Infeasible(format!(
                    "infeasible: kappa * (u_high - u_low) = {} is not below epsilon = {}; \
                     the unsampled share alone can produce that much regret",
                    sig6(kappa * outcome.range()),
                    sig6(args.epsilon)
                )));
            }
        }
    }
    let choice = BoundChoice::from(args.bound);
    let per_bound = |c: BoundChoice| bounds::sufficient_n_balanced(epsilon, args.treatments, &outcome, c);
    let show = |io: &mut Io<'_>, label: &str, n: u64| {
        line(io, label, format!("{n} per arm, {} total", n * args.treatments as u64))
    };
    if choice == BoundChoice::BestOfBoth {
        let a = per_bound(BoundChoice::Prop1)?;
        let b = per_bound(BoundChoice::Prop2)?;
        show(io, Method::Prop1.label(), a)?;
        show(io, Method::Prop2.label(), b)?;
        show(io, "best", a.min(b))?;
    } else {
        let label = match choice {
            BoundChoice::Prop1 => Method::Prop1,
            BoundChoice::Prop2 => Method::Prop2,
            _ => Method::Prop2Balanced,
        }
        .label();
        show(io, label, per_bound(choice)?)?;
    }
    Ok(())
}

fn rule_of(args: &ExactArgs) -> CliResult<BinaryTwoArmRule> {
    Ok(match args.rule {
        RuleFlag::Es => BinaryTwoArmRule::empirical_success(),
        RuleFlag::Ztest => BinaryTwoArmRule::ztest_with(args.alpha, args.ztest_variant.into())?,
    })
}

fn describe_rule(rule: BinaryTwoArmRule) -> String {
    match rule {
        BinaryTwoArmRule::EmpiricalSuccess => "empirical success".into(),
        BinaryTwoArmRule::ZTest { alpha, variant } => format!("one-sided z-test, alpha {alpha}, {}", variant.label()),
    }
}

fn regret_lines(io: &mut Io<'_>, r: &RegretReport) -> CliResult<()> {
    line(io, "max regret", sig6(r.value))?;
    if let Some(state) = &r.argmax_state {
        let m = &state.means()[0];
        line(io, "argmax state", format!("mu_a {} mu_b {}", sig6(m[0]), sig6(m[1])))?;
    }
    Ok(())
}

fn exact(args: ExactArgs, io: &mut Io<'_>) -> CliResult<()> {
    let rule = rule_of(&args)?;
    line(io, "rule", describe_rule(rule))?;
    if let Some(delta) = args.delta {
        if args.rule != RuleFlag::Ztest {
            return Err(CliError::Input("power sizing applies to --rule ztest".into()));
        }
        let n = exact::power_sample_size(PowerSpec::new(args.alpha, args.beta, delta)?)?;
        line(io, "power design", format!("delta {delta}, beta {}", args.beta))?;
        line(io, "n per arm", n)?;
        return regret_lines(io, &exact::max_regret(rule, n as usize)?);
    }
    match (args.n, args.epsilon) {
        (Some(n), _) => {
            if n == 0 {
                return Err(CliError::Input("--n must be positive".into()));
            }
            line(io, "n per arm", n)?;
            regret_lines(io, &exact::max_regret(rule, n as usize)?)
        }
        (None, Some(eps)) => {
            line(io, "epsilon", sig6(eps))?;
            match exact::min_sample_size(rule, eps, args.n_max)? {
                MinSampleSize::Found { n, max_regret, non_monotone } => {
                    line(io, "min n per arm", n)?;
                    regret_lines(io, &max_regret)?;
                    if !non_monotone.is_empty() {
                        let list: Vec<String> = non_monotone.iter().map(u64::to_string).collect();
                        line(io, "fails again at n", list.join(", "))?;
                    }
                    Ok(())
                }
                MinSampleSize::NotFound { n_max, regret_at_max } => {
                    line(io, "searched up to", n_max)?;
                    regret_lines(io, &regret_at_max)?;
                    Err(CliError::Exhausted(format!(
                        "no n up to {n_max} reaches epsilon {}; best found max regret {}",
                        sig6(eps),
                        sig6(regret_at_max.value)
                    )))
                }
            }
        }
        (None, None) => Err(CliError::Input("give one of --n, --epsilon or --delta".into())),
    }
}

fn tables(args: TablesArgs, io: &mut Io<'_>) -> CliResult<()> {
    let csv = tables::render(args.which, ZTestVariant::from(args.ztest_variant))?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &csv)
                .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
            writeln!(io.out, "wrote table {} to {}", args.which, path.display())?;
        }
        None => io.out.write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn allocate(args: AllocateArgs, io: &mut Io<'_>) -> CliResult<()> {
    let groups: Vec<CovariateGroup> =
        args.probs.iter().enumerate().map(|(i, &p)| CovariateGroup::new(format!("g{}", i + 1), p)).collect();
    let needed = (groups.len() * args.treatments) as u64;
    if args.budget < needed {
        return Err(CliError::Infeasible(format!(
            "infeasible: budget {} cannot give one subject to each of {needed} strata",
            args.budget
        )));
    }
    let problem = AllocationProblem::new(groups, args.budget, args.treatments)?;
    let continuous = allocate::continuous_allocation(&problem);
    let integer = allocate::integer_allocation(&problem)?;
    line(io, "budget", format!("{} subjects, {} treatments", args.budget, args.treatments))?;
    line(io, "per treatment", format!("{} ({} dropped)", problem.per_treatment_budget(), problem.dropped_units()))?;
    writeln!(io.out, "{:<8}{:<16}{:<16}integer", "group", "probability", "continuous")?;
    for (i, g) in problem.groups().iter().enumerate() {
        writeln!(io.out, "{:<8}{:<16}{:<16}{}", g.label, sig6(g.probability), sig6(continuous[i]), integer[i])?;
    }
    let as_real: Vec<f64> = integer.iter().map(|&n| n as f64).collect();
    let objective = |sizes: &[f64]| allocate::allocation_objective(problem.groups(), sizes);
    line(
        io,
        "objective",
        format!("continuous {} integer {}", sig6(objective(&continuous)?), sig6(objective(&as_real)?)),
    )?;
    let first = &problem.groups()[0];
    for (i, g) in problem.groups().iter().enumerate().skip(1) {
        line(
            io,
            &format!("ratio {}/{}", first.label, g.label),
            format!(
                "continuous {} integer {} (P ratio)^(2/3) {}",
                sig6(continuous[0] / continuous[i]),
                sig6(as_real[0] / as_real[i]),
                sig6((first.probability / g.probability).powf(2.0 / 3.0))
            ),
        )?;
    }
    Ok(())
}

fn parse_means(text: &str) -> CliResult<Vec<Vec<f64>>> {
    text.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|e| CliError::Input(format!("bad mean '{}': {e}", v.trim())))
                })
                .collect()
        })
        .collect()
}

fn distribution(kind: DistFlag, mean: f64, outcome: &OutcomeModel) -> CliResult<OutcomeDistribution> {
    let (lo, hi) = (outcome.low(), outcome.high());
    if !outcome.contains(mean) {
        return Err(CliError::Input(format!("mean {mean} lies outside [{lo}, {hi}]")));
    }
    let share = (mean - lo) / (hi - lo);
    Ok(match kind {
        DistFlag::Bernoulli => OutcomeDistribution::Bernoulli { mean },
        DistFlag::Point => OutcomeDistribution::PointMass { value: mean },
        DistFlag::TwoPoint => OutcomeDistribution::TwoPoint { low_prob: 1.0 - share, values: (lo, hi) },
        DistFlag::Beta => OutcomeDistribution::ScaledBeta { a: 2.0 * share, b: 2.0 * (1.0 - share), low: lo, high: hi },
    })
}

fn simulate(args: SimulateArgs, io: &mut Io<'_>) -> CliResult<()> {
    let doc = load_design(&args.source, &args.range, io)?;
    if doc.partial_validity.is_some() {
        writeln!(io.warn, "warning: the simulation ignores partial validity")?;
    }
    let means = parse_means(&args.means)?;
    let state = means
        .iter()
        .map(|row| row.iter().map(|&m| distribution(args.dist, m, &doc.outcome)).collect())
        .collect::<CliResult<Vec<Vec<_>>>>()?;
    let plan = SimulationPlan::new(doc.design.clone(), doc.outcome, state, args.reps, args.seed)?;
    let est = mcsim::estimate_regret(&plan)?;
    let bound = bounds::bound(&doc.design, &doc.outcome, BoundChoice::BestOfBoth)?;

    describe(&doc, io)?;
    line(io, "distribution", format!("{:?}", args.dist).to_lowercase())?;
    line(io, "replications", args.reps)?;
    line(io, "seed", args.seed)?;
    line(io, "regret estimate", format!("{} ± {}", sig6(est.regret), sig6(est.std_error)))?;
    line(io, &format!("bound ({})", bound.method), sig6(bound.value))?;
    let verdict = if est.regret > bound.value + SE_MULTIPLE * est.std_error { "violated" } else { "ok" };
    line(io, "verdict", verdict)
}
