//! Per-class expansion and bound audit, from a population or from
//! precomputed measurements.

use serde::{Deserialize, Serialize};

use crate::bounds::{
    coverage_bound, coverage_bound_weak, fu_baseline_bound, plc_bound_with_joint, plc_simplified_bound,
    wei_applicability, wei_plc_bound_with_joint, BoundReport, PlcGate, TheoremId,
};
use crate::error::{Error, Result};
use crate::expansion::{
    default_epsilon, empirical_family_expansion, generalization_margin, mistake_family, pair_expansion,
    vc_of_mistake_family, EstimateMode, Expansion, OracleSample, SetPair, TraceEntry,
};
use crate::graph::ExampleGraph;
use crate::pointset::PointSet;
use crate::population::{
    gold_error, partition, weak_disagreement, ClassExclusion, ClassPartition, LabelAssignment, Population,
};
use crate::robustness::robust_set;

/// Precomputed per-class inputs, e.g. numbers reported by an external
/// measurement pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measurements {
    pub classes: Vec<ClassMeasurement>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassMeasurement {
    pub class: usize,
    pub alpha: f64,
    pub err_weak: f64,
    #[serde(default)]
    pub c_bad_good: Option<f64>,
    #[serde(default)]
    pub c_good_t: Option<f64>,
    #[serde(default)]
    pub c_bad_t: Option<f64>,
    #[serde(default)]
    pub c_good_bad: Option<f64>,
    #[serde(default)]
    pub nonrobust_s: Option<f64>,
    #[serde(default)]
    pub nonrobust_t: Option<f64>,
    #[serde(default)]
    pub err_true_s: Option<f64>,
    #[serde(default)]
    pub err_true_t: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionSummary {
    /// Measured coefficient; absent when no set in the family qualifies.
    pub c: Option<f64>,
    pub mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_size: Option<usize>,
    /// Index of the prediction file whose set attains the minimum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_classifier: Option<usize>,
}

impl ExpansionSummary {
    fn given(c: f64) -> Self {
        ExpansionSummary {
            c: Some(c),
            mode: "given",
            lo: None,
            hi: None,
            witness_size: None,
            witness_classifier: None,
        }
    }

    pub fn from_expansion(e: &Expansion) -> Self {
        match e {
            Expansion::NoQualifyingSet => ExpansionSummary {
                c: None,
                mode: "no-qualifying-set",
                lo: None,
                hi: None,
                witness_size: None,
                witness_classifier: None,
            },
            Expansion::Measured(m) => {
                let (lo, hi) = match m.mode {
                    EstimateMode::RobustBracket { lo, hi } => (Some(lo), Some(hi)),
                    _ => (None, None),
                };
                ExpansionSummary {
                    c: Some(m.c),
                    mode: m.mode.label(),
                    lo,
                    hi,
                    witness_size: Some(m.witness.len()),
                    witness_classifier: m.witness_member,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ExpansionTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bad_good: Option<ExpansionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub good_t: Option<ExpansionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bad_t: Option<ExpansionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub good_bad: Option<ExpansionSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalSummary {
    pub pair: SetPair,
    pub n_a: usize,
    pub n_b: usize,
    pub epsilon: f64,
    pub expansion: ExpansionSummary,
    pub trace: Vec<TraceEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassAudit {
    pub class: usize,
    pub alpha: f64,
    /// Worst case of err(f, ỹ | S_i) over the supplied classifiers.
    pub err_weak: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub err_true_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub err_true_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonrobust_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonrobust_t: Option<f64>,
    pub expansions: ExpansionTable,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical: Option<EmpiricalSummary>,
    pub bounds: Vec<BoundReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcludedClass {
    pub class: usize,
    #[serde(flatten)]
    pub reason: ClassExclusion,
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalSummary {
    pub coverage: f64,
    pub alpha: f64,
    pub bounds: Vec<BoundReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Robustness {
    /// Nonrobust masses taken as zero in every bound.
    AssumedZero,
    /// Nonrobust masses measured and used.
    Measured,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub source: &'static str,
    pub eta: f64,
    pub q: f64,
    pub robustness: Robustness,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classifiers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global: Option<GlobalSummary>,
    pub classes: Vec<ClassAudit>,
    pub excluded: Vec<ExcludedClass>,
    pub any_applicable: bool,
}

#[derive(Debug, Clone)]
pub struct AuditSettings {
    pub eta: f64,
    pub q: f64,
    pub delta_param: f64,
    pub strict_robustness: bool,
    pub class_filter: Option<usize>,
}

/// Oracle data and estimator settings for the empirical column.
#[derive(Debug, Clone)]
pub struct EmpiricalSettings {
    pub pair: SetPair,
    pub sample_a: Vec<String>,
    pub sample_b: Vec<String>,
    pub oracle_pairs: Vec<(String, String)>,
    pub epsilon: Option<f64>,
    pub delta: f64,
    pub vc: Option<u32>,
    pub q_bar: Option<f64>,
}

/// Scalars a class's bounds are evaluated on.
struct BoundInputsForClass {
    alpha: f64,
    err_weak: f64,
    nonrobust_s: f64,
    nonrobust_t: f64,
    joint_s: Option<f64>,
    c_bad_good: Option<Option<f64>>,
    c_good_t: Option<Option<f64>>,
    c_bad_t: Option<Option<f64>>,
    c_good_bad: Option<Option<f64>>,
    assumed_zero: bool,
}

/// Resolves a measured coefficient: `None` means no set qualified, which
/// makes the expansion condition hold for every c, so 1 is used.
fn coefficient(
    c: Option<Option<f64>>,
    theorem: TheoremId,
    what: &str,
) -> std::result::Result<(f64, Option<String>), Box<BoundReport>> {
    match c {
        None => Err(Box::new(BoundReport::unavailable(
            theorem,
            format!("{what} expansion not measured"),
        ))),
        Some(None) => Ok((1.0, Some(format!("{what}: no qualifying set, c = 1")))),
        Some(Some(c)) if c > 0.0 => Ok((c, None)),
        Some(Some(c)) => Err(Box::new(BoundReport::unavailable(
            theorem,
            format!("{what} expansion is {c}; the bound needs c > 0"),
        ))),
    }
}

fn finish(mut r: BoundReport, notes: &[Option<String>], inputs: &BoundInputsForClass, eta: f64) -> BoundReport {
    r.notes.extend(notes.iter().flatten().cloned());
    if inputs.assumed_zero {
        r = r.assume_zero_robustness();
    }
    r.with_eta(eta)
}

fn class_bounds(b: &BoundInputsForClass, s: &AuditSettings) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    let q = s.q;
    let bad_good = |t| coefficient(b.c_bad_good, t, "(S_bad, S_good)");
    let good_t = |t| coefficient(b.c_good_t, t, "(S_good, T)");

    out.push(match bad_good(TheoremId::PlcMain) {
        Ok((c, note)) => {
            let r = plc_bound_with_joint(c, q, b.alpha, b.err_weak, b.nonrobust_s, b.joint_s, PlcGate::Main)?;
            finish(r, &[note], b, s.eta)
        }
        Err(r) => *r,
    });
    out.push(match bad_good(TheoremId::PlcSimplified) {
        Ok((c, note)) => {
            let r = plc_simplified_bound(c, b.alpha, b.err_weak, b.nonrobust_s, s.delta_param)?;
            finish(r, &[note], b, s.eta)
        }
        Err(r) => *r,
    });
    let c2 = coefficient(b.c_bad_t, TheoremId::CoverageMain, "(S_bad, T)");
    out.push(match (good_t(TheoremId::CoverageMain), c2) {
        (Ok((c1, n1)), Ok((c2, n2))) => {
            let r = coverage_bound(c1, c2, q, b.alpha, b.err_weak, b.nonrobust_t)?;
            finish(r, &[n1, n2], b, s.eta)
        }
        (Err(r), _) | (_, Err(r)) => *r,
    });
    out.push(match good_t(TheoremId::CoverageWeak) {
        Ok((c1, n1)) => {
            let r = coverage_bound_weak(c1, q, b.alpha, b.err_weak, b.nonrobust_t)?;
            finish(r, &[n1], b, s.eta)
        }
        Err(r) => *r,
    });
    out.push(match coefficient(b.c_good_bad, TheoremId::WeiPlc, "(S_good, S_bad)") {
        Ok((c, note)) => {
            let r = wei_plc_bound_with_joint(c, q, b.alpha, b.err_weak, b.nonrobust_s, b.joint_s)?;
            finish(r, &[note], b, s.eta)
        }
        Err(r) => *r,
    });
    Ok(out)
}

fn keep(filter: Option<usize>, class: usize) -> bool {
    filter.is_none_or(|c| c == class)
}

fn assemble(
    source: &'static str,
    s: &AuditSettings,
    robustness: Robustness,
    classifiers: Option<usize>,
    global: Option<GlobalSummary>,
    classes: Vec<ClassAudit>,
    excluded: Vec<ExcludedClass>,
) -> Result<AuditReport> {
    if classes.is_empty() {
        return Err(Error::Unsupported("no class has 0 < alpha_i < 1/2".into()));
    }
    let any_applicable = classes.iter().any(|c| c.bounds.iter().any(|b| b.applicable));
    Ok(AuditReport {
        source,
        eta: s.eta,
        q: s.q,
        robustness,
        classifiers,
        global,
        classes,
        excluded,
        any_applicable,
    })
}

/// Audit from precomputed measurements. Strict robustness requires every
/// class to carry both nonrobust masses.
pub fn audit_measurements(m: &Measurements, s: &AuditSettings) -> Result<AuditReport> {
    let mut classes = Vec::new();
    let mut excluded = Vec::new();
    for cm in m.classes.iter().filter(|c| keep(s.class_filter, c.class)) {
        if !(cm.alpha > 0.0 && cm.alpha < 0.5) {
            excluded.push(ExcludedClass {
                class: cm.class,
                reason: ClassExclusion::AlphaOutOfRange { alpha: cm.alpha },
            });
            continue;
        }
        let measured = cm.nonrobust_s.is_some() && cm.nonrobust_t.is_some();
        if s.strict_robustness && !measured {
            return Err(Error::Unsupported(format!(
                "strict robustness: class {} has no nonrobust masses to use",
                cm.class
            )));
        }
        let use_robust = s.strict_robustness;
        let inputs = BoundInputsForClass {
            alpha: cm.alpha,
            err_weak: cm.err_weak,
            nonrobust_s: if use_robust { cm.nonrobust_s.unwrap_or(0.0) } else { 0.0 },
            nonrobust_t: if use_robust { cm.nonrobust_t.unwrap_or(0.0) } else { 0.0 },
            joint_s: None,
            c_bad_good: cm.c_bad_good.map(Some),
            c_good_t: cm.c_good_t.map(Some),
            c_bad_t: cm.c_bad_t.map(Some),
            c_good_bad: cm.c_good_bad.map(Some),
            assumed_zero: !use_robust,
        };
        let bounds = class_bounds(&inputs, s)?;
        classes.push(ClassAudit {
            class: cm.class,
            alpha: cm.alpha,
            err_weak: cm.err_weak,
            err_true_s: cm.err_true_s,
            err_true_t: cm.err_true_t,
            nonrobust_s: cm.nonrobust_s,
            nonrobust_t: cm.nonrobust_t,
            expansions: ExpansionTable {
                bad_good: cm.c_bad_good.map(ExpansionSummary::given),
                good_t: cm.c_good_t.map(ExpansionSummary::given),
                bad_t: cm.c_bad_t.map(ExpansionSummary::given),
                good_bad: cm.c_good_bad.map(ExpansionSummary::given),
            },
            empirical: None,
            bounds,
        });
    }
    let robustness = if s.strict_robustness {
        Robustness::Measured
    } else {
        Robustness::AssumedZero
    };
    assemble("measurements", s, robustness, None, None, classes, excluded)
}

fn max_over<F: Fn(&LabelAssignment) -> Result<f64>>(fs: &[LabelAssignment], f: F) -> Result<f64> {
    fs.iter().try_fold(0.0f64, |acc, h| Ok(acc.max(f(h)?)))
}

/// Audit of a population with edges and one or more classifiers. Worst
/// cases are taken over the classifiers and expansions are measured on the
/// family their sets form.
pub fn audit_population(
    pop: &Population,
    g: &ExampleGraph,
    classifiers: &[LabelAssignment],
    s: &AuditSettings,
    empirical: Option<&EmpiricalSettings>,
) -> Result<AuditReport> {
    if classifiers.is_empty() {
        return Err(Error::Unsupported("audit needs at least one prediction file".into()));
    }
    let part = partition(pop);
    let robust: Vec<PointSet> = classifiers.iter().map(|f| robust_set(g, pop, f, s.eta)).collect();
    let mut classes = Vec::new();
    let mut excluded = Vec::new();
    for cls in part.classes.iter().filter(|c| keep(s.class_filter, c.class)) {
        let alpha = match cls.eligibility() {
            Ok(a) => a,
            Err(reason) => {
                excluded.push(ExcludedClass {
                    class: cls.class,
                    reason,
                });
                continue;
            }
        };
        let s_i = &cls.covered;
        let t_i = &cls.uncovered;
        let has_t = pop.mass(t_i) > 0.0;
        let err_weak = max_over(classifiers, |f| weak_disagreement(pop, f, s_i))?;
        let err_true_s = max_over(classifiers, |f| gold_error(pop, f, s_i))?;
        let err_true_t = if has_t {
            Some(max_over(classifiers, |f| gold_error(pop, f, t_i))?)
        } else {
            None
        };
        let frac_outside = |set: &PointSet| -> Result<f64> {
            robust.iter().try_fold(0.0f64, |acc, r| {
                Ok(acc.max(pop.conditional_prob(&set.difference(r), set)?))
            })
        };
        let nonrobust_s = frac_outside(s_i)?;
        let nonrobust_t = if has_t { frac_outside(t_i)? } else { 0.0 };
        let joint_s = classifiers
            .iter()
            .zip(&robust)
            .try_fold(0.0f64, |acc, (f, r)| -> Result<f64> {
                let bad = PointSet::from_predicate(pop.len(), |x| {
                    s_i.contains(x) && (!r.contains(x) || pop.weak(x).class() != Some(f.get(x)))
                });
                Ok(acc.max(pop.conditional_prob(&bad, s_i)?))
            })?;

        let measure = |pair| pair_expansion(pop, g, cls, classifiers, pair, s.q, s.eta);
        let bad_good = measure(SetPair::BadGood)?;
        let good_t = measure(SetPair::GoodT)?;
        let bad_t = measure(SetPair::BadT)?;
        let good_bad = measure(SetPair::GoodBad)?;

        let strict = s.strict_robustness;
        let inputs = BoundInputsForClass {
            alpha,
            err_weak,
            nonrobust_s: if strict { nonrobust_s } else { 0.0 },
            nonrobust_t: if strict { nonrobust_t } else { 0.0 },
            joint_s: strict.then_some(joint_s),
            c_bad_good: bad_good.as_ref().map(Expansion::c),
            c_good_t: good_t.as_ref().map(Expansion::c),
            c_bad_t: bad_t.as_ref().map(Expansion::c),
            c_good_bad: good_bad.as_ref().map(Expansion::c),
            assumed_zero: !strict,
        };
        let bounds = class_bounds(&inputs, s)?;
        let empirical = match empirical {
            Some(e) => Some(empirical_for_class(pop, cls, classifiers, g, s, e)?),
            None => None,
        };
        classes.push(ClassAudit {
            class: cls.class,
            alpha,
            err_weak,
            err_true_s: Some(err_true_s),
            err_true_t,
            nonrobust_s: Some(nonrobust_s),
            nonrobust_t: has_t.then_some(nonrobust_t),
            expansions: ExpansionTable {
                bad_good: bad_good.as_ref().map(ExpansionSummary::from_expansion),
                good_t: good_t.as_ref().map(ExpansionSummary::from_expansion),
                bad_t: bad_t.as_ref().map(ExpansionSummary::from_expansion),
                good_bad: good_bad.as_ref().map(ExpansionSummary::from_expansion),
            },
            empirical,
            bounds,
        });
    }
    let coverage = pop.mass(&part.covered);
    let global = if coverage > 0.0 {
        let bad: f64 = part.classes.iter().map(|c| pop.mass(&c.bad)).sum();
        let alpha = bad / coverage;
        Some(GlobalSummary {
            coverage,
            alpha,
            bounds: vec![fu_baseline_bound(coverage, alpha)?, wei_applicability(coverage)?],
        })
    } else {
        None
    };
    let robustness = if s.strict_robustness {
        Robustness::Measured
    } else {
        Robustness::AssumedZero
    };
    assemble("population", s, robustness, Some(classifiers.len()), global, classes, excluded)
}

fn empirical_for_class(
    pop: &Population,
    cls: &ClassPartition,
    classifiers: &[LabelAssignment],
    g: &ExampleGraph,
    s: &AuditSettings,
    e: &EmpiricalSettings,
) -> Result<EmpiricalSummary> {
    let (a, b, kind) = e.pair.sets(cls);
    let in_set = |set: &PointSet, ids: &[String]| -> Result<Vec<String>> {
        let mut out = Vec::new();
        for id in ids {
            if set.contains(pop.index_of(id)?) {
                out.push(id.clone());
            }
        }
        Ok(out)
    };
    let sample_a = in_set(a, &e.sample_a)?;
    let sample_b = in_set(b, &e.sample_b)?;
    let oracle = OracleSample::from_ids(pop, &sample_a, &sample_b, &e.oracle_pairs)?;
    oracle.validate_against(g, pop)?;
    let epsilon = match e.epsilon {
        Some(eps) => eps,
        None => default_epsilon(e.delta, oracle.n_b())?,
    };
    let fam = mistake_family(pop, b, classifiers, g, s.eta, kind);
    let res = empirical_family_expansion(&oracle, &fam, s.q, epsilon)?;
    let margin = match (e.vc, e.q_bar) {
        (Some(vc), Some(q_bar)) => {
            let d = vc_of_mistake_family(vc, pop.num_classes())?;
            Some(generalization_margin(d, oracle.n_a(), oracle.n_b(), q_bar, e.delta)?)
        }
        _ => None,
    };
    Ok(EmpiricalSummary {
        pair: e.pair,
        n_a: oracle.n_a(),
        n_b: oracle.n_b(),
        epsilon,
        expansion: ExpansionSummary::from_expansion(&res.estimate),
        trace: res.trace,
        margin,
    })
}
