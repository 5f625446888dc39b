//! Self-check suites. Each suite reports named checks with a JSON witness.

use std::path::PathBuf;

use clap::Args;
use gridcast_core::chain::chain_hit_probabilities;
use gridcast_core::combinatorics::{asymptotic_ratio, check_f3_bounds, f3_by_recurrence};
use gridcast_core::covariance::{finite_layer_covariance, q_polynomial_explicit_check, FiniteLayers};
use gridcast_core::estimator::{
    closed_form_critical_d1, combination_moments, optimal_linear, supercritical_certificate,
};
use gridcast_core::phase::phase_verdict;
use gridcast_core::poisson::poisson_tail_checks;
use gridcast_core::scalar::{format_rational, rat, rational_to_f64};
use gridcast_core::sim::{compare_moments, SimOptions};
use gridcast_core::{BigRational, Caps, ModelSpec};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::simulate::{parallel_moments, plan};
use crate::cache::Cache;
use crate::config::{caps_json, parse_caps, WindowSpec};
use crate::error::CliError;
use crate::table::Meta;

/// Canonical suite names with their accepted aliases.
pub const SUITES: [(&str, &[&str]); 9] = [
    ("closed-form-d1", &["thm-2.5"]),
    ("q-identity", &[]),
    ("abelian-recurrence", &["recurrence-f3", "f3"]),
    ("abelian-bounds", &["lemma-8.1"]),
    ("chain-variance-bound", &["prop-5.1"]),
    ("supercritical", &[]),
    ("poisson-tails", &["poisson"]),
    ("phase", &[]),
    ("mc-oracle", &[]),
];

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Suites to run (comma-separated, aliases accepted); `all` runs every
    /// suite.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub suite: Vec<String>,
    /// Largest layer for layer-indexed suites (defaults per suite).
    #[arg(long = "t-max")]
    pub t_max: Option<u64>,
    /// Largest index for the abelian square suites (defaults per suite).
    #[arg(long = "m-max")]
    pub m_max: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 200_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub caps: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub check: String,
    pub passed: bool,
    pub witness: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub meta: Meta,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

pub fn resolve_suite(name: &str) -> Option<&'static str> {
    SUITES.iter().find(|(canon, aliases)| *canon == name || aliases.contains(&name)).map(|(c, _)| *c)
}

fn check(name: impl Into<String>, passed: bool, witness: Value) -> Check {
    Check { check: name.into(), passed, witness }
}

struct Ctx<'a> {
    args: &'a VerifyArgs,
    caps: Caps,
    cache: Cache,
}

pub fn run(args: &VerifyArgs, cache: Cache) -> Result<VerifyReport, CliError> {
    let mut names: Vec<&'static str> = Vec::new();
    for s in &args.suite {
        if s == "all" {
            names.extend(SUITES.iter().map(|(c, _)| *c));
            continue;
        }
        let canon = resolve_suite(s).ok_or_else(|| {
            let known: Vec<_> = SUITES.iter().map(|(c, _)| *c).collect();
            CliError::Usage(format!("unknown suite {s:?}; known suites: {}", known.join(", ")))
        })?;
        names.push(canon);
    }
    names.dedup();
    let caps = match &args.caps {
        Some(c) => parse_caps(c)?,
        None => Caps::default(),
    };
    let config = json!({
        "suites": names,
        "t_max": args.t_max,
        "m_max": args.m_max,
        "trials": args.trials,
        "samples": args.samples,
        "seed": args.seed,
        "caps": caps_json(&caps),
    });
    let ctx = Ctx { args, caps, cache };
    let mut suites = Vec::new();
    for name in names {
        let checks = match name {
            "closed-form-d1" => closed_form(&ctx)?,
            "q-identity" => q_identity(&ctx)?,
            "abelian-recurrence" => abelian_recurrence(&ctx)?,
            "abelian-bounds" => abelian_bounds(&ctx)?,
            "chain-variance-bound" => chain_variance(&ctx)?,
            "supercritical" => supercritical(&ctx)?,
            "poisson-tails" => poisson(&ctx),
            "phase" => phase(),
            "mc-oracle" => mc_oracle(&ctx)?,
            _ => unreachable!("suite names are resolved above"),
        };
        suites.push(SuiteReport { suite: name, passed: checks.iter().all(|c| c.passed), checks });
    }
    Ok(VerifyReport { meta: Meta::new("verify", config), passed: suites.iter().all(|s| s.passed), suites })
}

fn closed_form(ctx: &Ctx) -> Result<Vec<Check>, CliError> {
    let t_max = ctx.args.t_max.unwrap_or(50);
    let m = ModelSpec::finite_critical(1);
    let mut ratio_failures = Vec::new();
    let mut coefficient_failures = Vec::new();
    for lc in FiniteLayers::<BigRational>::new(&m, ctx.caps)?.take(t_max as usize + 1) {
        let lc = lc?;
        let res = optimal_linear(&lc)?;
        let (expected, binomials) = closed_form_critical_d1(lc.t);
        if res.ratio_sq != expected {
            ratio_failures.push(lc.t);
        }
        let c: Vec<&BigRational> = res.coefficients.iter().map(|(_, c)| c).collect();
        let proportional = c.len() == binomials.len()
            && c.iter().zip(&binomials).all(|(ci, b)| {
                *ci * BigRational::from_integer(binomials[0].clone()) == c[0] * BigRational::from_integer(b.clone())
            });
        if !proportional {
            coefficient_failures.push(lc.t);
        }
    }
    Ok(vec![
        check(
            "ratio-equals-closed-form",
            ratio_failures.is_empty(),
            json!({"t_max": t_max, "failures": ratio_failures}),
        ),
        check(
            "coefficients-are-binomial",
            coefficient_failures.is_empty(),
            json!({"t_max": t_max, "failures": coefficient_failures}),
        ),
    ])
}

fn q_identity(ctx: &Ctx) -> Result<Vec<Check>, CliError> {
    let t_max = ctx.args.t_max.unwrap_or(15);
    let mut closed = Vec::new();
    let mut rows = Vec::new();
    let mut a_t = Vec::new();
    for t in 1..=t_max {
        let w = q_polynomial_explicit_check(t, &ctx.caps)?;
        if !w.closed_form_holds {
            closed.push(json!({"t": t, "mismatched_terms": w.mismatched_terms}));
        }
        if !w.row_sum_identity_holds {
            rows.push(t);
        }
        a_t.push(format_rational(&w.a_t));
    }
    Ok(vec![
        check("closed-form-equals-dp", closed.is_empty(), json!({"t_max": t_max, "failures": closed})),
        check("row-sums-equal-a_t", rows.is_empty(), json!({"t_max": t_max, "failures": rows, "a_t": a_t})),
    ])
}

fn abelian_recurrence(ctx: &Ctx) -> Result<Vec<Check>, CliError> {
    let m_max = ctx.args.m_max.unwrap_or(500);
    let direct = ctx.cache.abelian_squares(m_max, 3)?;
    let rec = f3_by_recurrence(m_max)?;
    let mismatches: Vec<usize> = (0..=m_max).filter(|&m| direct[m] != rec[m]).collect();
    Ok(vec![check(
        "recurrence-equals-direct-sum",
        mismatches.is_empty(),
        json!({"m_max": m_max, "mismatches": mismatches, "digits_at_m_max": rec[m_max].to_string().len()}),
    )])
}

fn abelian_bounds(ctx: &Ctx) -> Result<Vec<Check>, CliError> {
    let m_max = ctx.args.m_max.unwrap_or(2000);
    let f3 = ctx.cache.abelian_squares(m_max, 3)?;
    let r = check_f3_bounds(&f3);
    let mut checks = vec![check(
        "two-sided-bound-and-monotone",
        r.passed(),
        json!({
            "m_max": r.m_max,
            "lower_failures": r.lower_failures,
            "upper_failures": r.upper_failures,
            "upper_undecided": r.upper_undecided,
            "monotone_failures": r.monotone_failures,
            "lower_ratio_range": [r.lower_ratio_range.0, r.lower_ratio_range.1],
            "upper_ratio_range": [r.upper_ratio_range.0, r.upper_ratio_range.1],
        }),
    )];
    for parts in [2usize, 3, 4] {
        let table = if parts == 3 { f3.clone() } else { ctx.cache.abelian_squares(m_max, parts)? };
        let ratio = asymptotic_ratio(&table[m_max], m_max, parts);
        checks.push(check(
            format!("asymptotic-ratio-{parts}"),
            (ratio - 1.0).abs() <= 0.05,
            json!({"m": m_max, "ratio": ratio}),
        ));
    }
    Ok(checks)
}

/// Random start weights on the critical orthant; the exact variance of the
/// matching estimator must dominate the chain bound.
fn chain_variance(ctx: &Ctx) -> Result<Vec<Check>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.args.seed);
    let mut violations = Vec::new();
    let mut min_slack = f64::INFINITY;
    for trial in 0..ctx.args.trials {
        let d = rng.gen_range(1..=2usize);
        let t = rng.gen_range(1..=10u64);
        let m = ModelSpec::finite_critical(d);
        let lc = finite_layer_covariance::<BigRational>(&m, t, &ctx.caps)?;
        let raw: Vec<i64> = loop {
            let raw: Vec<i64> = (0..lc.n()).map(|_| if rng.gen_bool(0.5) { rng.gen_range(0..10) } else { 0 }).collect();
            if raw.iter().any(|&x| x > 0) {
                break raw;
            }
        };
        let total: i64 = raw.iter().sum();
        let c: Vec<BigRational> = raw.iter().map(|&x| rat(x, total)).collect();
        let (_, var) = combination_moments(&lc, &c);
        let bound = chain_hit_probabilities(&m, t, &c, &ctx.caps)?.variance_lower_bound();
        if var < bound {
            violations.push(json!({"trial": trial, "d": d, "t": t}));
        }
        if !bound.is_zero() {
            min_slack = min_slack.min(rational_to_f64(&(&var / &bound)));
        }
    }
    Ok(vec![check(
        "variance-dominates-chain-bound",
        violations.is_empty(),
        json!({"trials": ctx.args.trials, "violations": violations, "min_var_over_bound": min_slack}),
    )])
}

fn supercritical(ctx: &Ctx) -> Result<Vec<Check>, CliError> {
    let horizon = ctx.args.t_max.unwrap_or(40);
    let mut checks = Vec::new();
    for alphas in [vec![rat(1, 1), rat(3, 5)], vec![rat(1, 1), rat(1, 2), rat(2, 5)]] {
        let m = ModelSpec::finite(alphas)?;
        let cert = supercritical_certificate(&m, horizon, &ctx.caps)?;
        let ok = cert.covariance_constant() && cert.variance_nondecreasing() && cert.ratio_floor() > 0.0;
        checks.push(check(
            format!("certificate-d{}", m.d()),
            ok,
            json!({
                "horizon": horizon,
                "kappa": cert.kappa.iter().map(format_rational).collect::<Vec<_>>(),
                "covariance_constant": cert.covariance_constant(),
                "variance_nondecreasing": cert.variance_nondecreasing(),
                "variance_tail": cert.variance_tail(),
                "ratio_floor": cert.ratio_floor(),
            }),
        ));
    }
    Ok(checks)
}

fn poisson(ctx: &Ctx) -> Vec<Check> {
    let t_max = ctx.args.t_max.unwrap_or(200);
    let checks = poisson_tail_checks(t_max);
    let upper: Vec<u64> = checks.iter().filter(|c| !c.upper_tail_ok).map(|c| c.t).collect();
    let lower: Vec<u64> = checks.iter().filter(|c| !c.lower_tail_ok).map(|c| c.t).collect();
    let min_upper = checks.iter().map(|c| c.upper_tail).fold(f64::INFINITY, f64::min);
    let min_lower = checks.iter().map(|c| c.lower_tail).fold(f64::INFINITY, f64::min);
    vec![
        check(
            "upper-tail-at-least-half",
            upper.is_empty(),
            json!({"t_max": t_max, "failures": upper, "min": min_upper}),
        ),
        check(
            "lower-tail-at-least-e^-9",
            lower.is_empty(),
            json!({"t_max": t_max, "failures": lower, "min": min_lower}),
        ),
    ]
}

fn phase() -> Vec<Check> {
    let hs = |d: usize, p: i64, q: i64| ModelSpec::half_space(d, rat(p, q)).expect("valid weight");
    let fin = |a: &[(i64, i64)]| ModelSpec::finite(a.iter().map(|&(p, q)| rat(p, q)).collect()).expect("valid weights");
    let expected = [
        (hs(1, 3, 10), "impossible-local"),
        (hs(1, 1, 2), "critical-impossible-local"),
        (hs(1, 7, 10), "single-vertex-possible"),
        (hs(2, 1, 3), "critical-impossible-local"),
        (hs(3, 1, 4), "single-vertex-possible"),
        (fin(&[(1, 1), (1, 2), (1, 3)]), "reconstruction-impossible"),
        (fin(&[(1, 2), (1, 4), (1, 6)]), "reconstruction-impossible"),
        (fin(&[(1, 1), (1, 2), (2, 5)]), "convex-reconstruction-possible"),
        (fin(&[(1, 1), (3, 5)]), "convex-reconstruction-possible"),
    ];
    let mut checks: Vec<Check> = expected
        .iter()
        .map(|(m, want)| {
            let v = phase_verdict(m);
            check(
                m.label(),
                v.summary() == *want,
                json!({"verdict": v.summary(), "expected": want, "citation": v.citation()}),
            )
        })
        .collect();
    let inconsistent: Vec<String> = expected
        .iter()
        .map(|(m, _)| phase_verdict(m))
        .filter(|v| !v.is_consistent())
        .map(|v| v.model.label())
        .collect();
    checks.push(check("verdicts-respect-implications", inconsistent.is_empty(), json!({"inconsistent": inconsistent})));
    checks
}

fn mc_oracle(ctx: &Ctx) -> Result<Vec<Check>, CliError> {
    let configs: Vec<(ModelSpec, u64, Option<WindowSpec>)> = vec![
        (ModelSpec::finite_critical(1), 4, None),
        (ModelSpec::finite(vec![rat(1, 1), rat(1, 2), rat(2, 5)])?, 3, None),
        (ModelSpec::half_space_critical(1), 2, Some(WindowSpec { width: 3, base: None })),
        (ModelSpec::half_space(2, rat(3, 10))?, 3, Some(WindowSpec { width: 2, base: None })),
    ];
    let mut checks = Vec::new();
    for (i, (m, t, w)) in configs.iter().enumerate() {
        let p = plan(m, *t, w.as_ref(), &ctx.caps, SimOptions::default())?;
        let (mean, cov) = p.exact_moments(&ctx.caps)?;
        let emp = parallel_moments(&p, ctx.args.seed.wrapping_add(i as u64), ctx.args.samples);
        let cmp = compare_moments(&emp, &mean, &cov);
        checks.push(check(
            format!("{} t={}", m.label(), t),
            cmp.beyond_4se == 0,
            json!({
                "samples": ctx.args.samples,
                "moments": cmp.moments_checked,
                "within_2se": cmp.within_2se,
                "beyond_4se": cmp.beyond_4se,
                "max_abs_z": cmp.max_abs_z,
            }),
        ));
    }
    Ok(checks)
}
