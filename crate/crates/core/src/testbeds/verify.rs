//! Brute-force soundness checks.
//!
//! For every hypothesis f and every class i with 0 < α_i < 1/2, the harness
//! measures the exact expansion of f's own (non-)mistake sets on the pairs a
//! theorem needs, evaluates the theorem's gate on exact population masses,
//! and compares the bound with f's true error on the target set.
//!
//! Measured coefficients are capped at 1; a family with no qualifying set
//! expands at every coefficient, so it is assigned 1. Expansion is a strict
//! inequality, so the measured minimum ratio is a supremum that is never
//! attained; the harness evaluates bounds just below it.

use serde::Serialize;

use crate::bounds::{
    coverage_bound, coverage_bound_weak, plc_bound_with_joint, wei_plc_bound_with_joint, BoundReport, PlcGate,
    TheoremId,
};
use crate::error::{Error, Result};
use crate::expansion::{classifier_set, exact_expansion, FamilyKind, SetFamily};
use crate::graph::ExampleGraph;
use crate::pointset::PointSet;
use crate::population::{partition, ClassPartition, LabelAssignment, Population};
use crate::robustness::robust_set;

/// Slack allowed before a true error counts as exceeding its bound.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Gap between the measured coefficient and the one the bounds receive.
pub const STRICT_EXPANSION_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub eta: f64,
    pub q: f64,
    /// Amount subtracted from every bound before comparison; nonzero values
    /// are a self-test that should produce violations.
    pub mutate: f64,
    pub gate: PlcGate,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            eta: 0.0,
            q: 0.0,
            mutate: 0.0,
            gate: PlcGate::Main,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub hypothesis: usize,
    pub class: usize,
    pub true_error: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub theorem: TheoremId,
    /// (hypothesis, class) pairs evaluated.
    pub instances: usize,
    pub applicable: usize,
    /// Applicable instances whose bound is 1 and so says nothing.
    pub vacuous: usize,
    pub violations: Vec<Violation>,
    /// Largest and smallest bound − true error over applicable instances.
    pub max_slack: Option<f64>,
    pub min_slack: Option<f64>,
}

impl VerificationReport {
    pub fn new(theorem: TheoremId) -> Self {
        VerificationReport {
            theorem,
            instances: 0,
            applicable: 0,
            vacuous: 0,
            violations: Vec::new(),
            max_slack: None,
            min_slack: None,
        }
    }

    /// Folds another report for the same theorem into this one.
    pub fn merge(&mut self, other: VerificationReport) {
        self.instances += other.instances;
        self.applicable += other.applicable;
        self.vacuous += other.vacuous;
        self.violations.extend(other.violations);
        self.max_slack = max_opt(self.max_slack, other.max_slack, f64::max);
        self.min_slack = max_opt(self.min_slack, other.min_slack, f64::min);
    }

    fn record(&mut self, hypothesis: usize, class: usize, report: &BoundReport, true_error: f64, mutate: f64) {
        self.instances += 1;
        let Some(value) = report.value else { return };
        self.applicable += 1;
        if value >= 1.0 {
            self.vacuous += 1;
        }
        let bound = value - mutate;
        let slack = bound - true_error;
        self.max_slack = max_opt(self.max_slack, Some(slack), f64::max);
        self.min_slack = max_opt(self.min_slack, Some(slack), f64::min);
        if true_error > bound + VIOLATION_TOL {
            self.violations.push(Violation {
                hypothesis,
                class,
                true_error,
                bound,
            });
        }
    }
}

fn max_opt(a: Option<f64>, b: Option<f64>, pick: fn(f64, f64) -> f64) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(pick(x, y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Capped expansion of the singleton family {u} on (a, b).
fn measured_c(
    g: &ExampleGraph,
    pop: &Population,
    u: PointSet,
    a: &PointSet,
    b: &PointSet,
    q: f64,
    eta: f64,
) -> Result<f64> {
    let fam = SetFamily::explicit("hypothesis", b.clone(), vec![u])?;
    let c = exact_expansion(g, pop, &fam, a, b, q, eta)?.usable_c();
    Ok((c - STRICT_EXPANSION_GAP).max(0.0))
}

struct ClassMasses {
    err_weak: f64,
    nonrobust_s: f64,
    joint_s: f64,
    true_s: f64,
}

fn covered_masses(pop: &Population, f: &LabelAssignment, robust: &PointSet, cls: &ClassPartition) -> ClassMasses {
    let ps = pop.mass(&cls.covered);
    let (mut err, mut nonrobust, mut joint, mut truth) = (0.0, 0.0, 0.0, 0.0);
    for x in cls.covered.iter() {
        let m = pop.mass_of(x);
        let wrong_weak = pop.weak(x).class() != Some(f.get(x));
        let fragile = !robust.contains(x);
        if wrong_weak {
            err += m;
        }
        if fragile {
            nonrobust += m;
        }
        if wrong_weak || fragile {
            joint += m;
        }
        if f.get(x) != cls.class {
            truth += m;
        }
    }
    ClassMasses {
        err_weak: err / ps,
        nonrobust_s: nonrobust / ps,
        joint_s: joint / ps,
        true_s: truth / ps,
    }
}

fn check_input(pop: &Population, hypotheses: &[LabelAssignment], cfg: &VerifyConfig) -> Result<()> {
    if !(0.0..1.0).contains(&cfg.eta) {
        return Err(Error::Parameter {
            name: "eta",
            value: cfg.eta,
            range: "[0, 1)",
        });
    }
    if !(0.0..=1.0).contains(&cfg.q) {
        return Err(Error::Parameter {
            name: "q",
            value: cfg.q,
            range: "[0, 1]",
        });
    }
    if let Some(h) = hypotheses.iter().find(|h| h.len() != pop.len()) {
        return Err(Error::AssignmentSize {
            expected: pop.len(),
            got: h.len(),
        });
    }
    Ok(())
}

/// Runs one theorem over every (hypothesis, eligible class) pair.
pub fn verify_theorem(
    pop: &Population,
    g: &ExampleGraph,
    hypotheses: &[LabelAssignment],
    theorem: TheoremId,
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    if !TheoremId::VERIFIABLE.contains(&theorem) {
        return Err(Error::Unsupported(format!("{theorem} has no brute-force check")));
    }
    check_input(pop, hypotheses, cfg)?;
    let part = partition(pop);
    let eligible: Vec<(&ClassPartition, f64)> = part
        .classes
        .iter()
        .filter_map(|c| c.eligibility().ok().map(|a| (c, a)))
        .collect();
    let mut report = VerificationReport::new(theorem);
    let (q, eta) = (cfg.q, cfg.eta);
    for (h, f) in hypotheses.iter().enumerate() {
        let robust = robust_set(g, pop, f, eta);
        for &(cls, alpha) in &eligible {
            let masses = covered_masses(pop, f, &robust, cls);
            let t = &cls.uncovered;
            let bound = match theorem {
                TheoremId::PlcMain => {
                    let u = classifier_set(pop, &cls.good, f, Some(&robust), FamilyKind::NonMistakes);
                    let c = measured_c(g, pop, u, &cls.bad, &cls.good, q, eta)?;
                    if c <= 0.0 {
                        report.instances += 1;
                        continue;
                    }
                    let r = plc_bound_with_joint(
                        c,
                        q,
                        alpha,
                        masses.err_weak,
                        masses.nonrobust_s,
                        Some(masses.joint_s),
                        cfg.gate,
                    )?;
                    (r, masses.true_s)
                }
                TheoremId::WeiPlc => {
                    let u = classifier_set(pop, &cls.bad, f, Some(&robust), FamilyKind::Mistakes);
                    let c = measured_c(g, pop, u, &cls.good, &cls.bad, q, eta)?;
                    let r = wei_plc_bound_with_joint(
                        c,
                        q,
                        alpha,
                        masses.err_weak,
                        masses.nonrobust_s,
                        Some(masses.joint_s),
                    )?;
                    (r, masses.true_s)
                }
                TheoremId::CoverageMain | TheoremId::CoverageWeak => {
                    if pop.mass(t) <= 0.0 {
                        continue;
                    }
                    let true_t = pop.conditional_prob(&f_wrong(pop, f, t, cls.class), t)?;
                    let nonrobust_t = pop.conditional_prob(&t.difference(&robust), t)?;
                    let u1 = classifier_set(pop, t, f, Some(&robust), FamilyKind::Mistakes);
                    let c1 = measured_c(g, pop, u1, &cls.good, t, q, eta)?;
                    if theorem == TheoremId::CoverageWeak {
                        if c1 <= 0.0 {
                            report.instances += 1;
                            continue;
                        }
                        let r = coverage_bound_weak(c1, q, alpha, masses.err_weak, nonrobust_t)?;
                        (r, true_t)
                    } else {
                        let u2 = classifier_set(pop, t, f, Some(&robust), FamilyKind::NonMistakes);
                        let c2 = measured_c(g, pop, u2, &cls.bad, t, q, eta)?;
                        if c1 <= 0.0 || c2 <= 0.0 {
                            report.instances += 1;
                            continue;
                        }
                        let r = coverage_bound(c1, c2, q, alpha, masses.err_weak, nonrobust_t)?;
                        (r, true_t)
                    }
                }
                _ => unreachable!("filtered above"),
            };
            report.record(h, cls.class, &bound.0, bound.1, cfg.mutate);
        }
    }
    Ok(report)
}

fn f_wrong(pop: &Population, f: &LabelAssignment, within: &PointSet, class: usize) -> PointSet {
    PointSet::from_predicate(pop.len(), |x| within.contains(x) && f.get(x) != class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testbeds::{
        cotraining_population, enumerate_hypotheses, planted_population, random_cotraining_spec,
        HypothesisClassSpec, PlantedConfig,
    };

    #[test]
    fn cotraining_plc_has_no_violations() {
        let spec = random_cotraining_spec(1, 4, 3).unwrap();
        let inst = cotraining_population(&spec).unwrap();
        let hs = enumerate_hypotheses(
            &HypothesisClassSpec::View2Measurable {
                view2_of: inst.view2_of(),
                view2_size: spec.view2_size(),
            },
            &inst.population,
        )
        .unwrap();
        for theorem in TheoremId::VERIFIABLE {
            let r = verify_theorem(&inst.population, &inst.graph, &hs, theorem, &VerifyConfig::default()).unwrap();
            assert!(r.violations.is_empty(), "{theorem}: {:?}", r.violations);
            assert!(r.instances > 0);
        }
    }

    #[test]
    fn planted_instances_and_mutation() {
        let mut clean = VerificationReport::new(TheoremId::CoverageWeak);
        let mut mutated = VerificationReport::new(TheoremId::CoverageWeak);
        for seed in 0..20 {
            let inst = planted_population(&PlantedConfig::new(8, 0.25, 0.5, 0.5, seed)).unwrap();
            let hs = enumerate_hypotheses(&HypothesisClassSpec::AllDichotomies, &inst.population).unwrap();
            let cfg = VerifyConfig::default();
            clean.merge(verify_theorem(&inst.population, &inst.graph, &hs, TheoremId::CoverageWeak, &cfg).unwrap());
            let cfg = VerifyConfig {
                mutate: 0.05,
                ..cfg
            };
            mutated.merge(verify_theorem(&inst.population, &inst.graph, &hs, TheoremId::CoverageWeak, &cfg).unwrap());
        }
        assert!(clean.applicable > 0);
        assert!(clean.violations.is_empty(), "{:?}", &clean.violations[..1]);
        assert!(!mutated.violations.is_empty());
    }

    #[test]
    fn rejects_unverifiable_theorem() {
        let inst = planted_population(&PlantedConfig::new(6, 0.25, 0.5, 0.5, 0)).unwrap();
        let hs = vec![LabelAssignment::gold(&inst.population)];
        assert!(verify_theorem(
            &inst.population,
            &inst.graph,
            &hs,
            TheoremId::FuBaseline,
            &VerifyConfig::default()
        )
        .is_err());
    }
}
