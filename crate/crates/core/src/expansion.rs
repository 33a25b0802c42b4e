//! Expansion of set families between two sets.
//!
//! A family M of subsets of B satisfies (c, q)-expansion on (A, B) when every
//! U ∈ M with P(U | B) > q has P(N(U) | A) ≥ c P(U | B). This module measures
//! the largest such c exactly on a finite population, estimates it from
//! samples through a neighborhood oracle, and bounds the estimation error.

use std::collections::HashMap;
use std::io::BufRead;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::graph::ExampleGraph;
use crate::pointset::PointSet;
use crate::population::{ClassPartition, LabelAssignment, Population};
use crate::rng::substream;
use crate::robustness::robust_set;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// M_η(B, F): robust points of B that f gets wrong.
    Mistakes,
    /// M'_η(B, F): robust points of B that f gets right.
    NonMistakes,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Explicit,
    Classifiers {
        count: usize,
        eta: f64,
        kind: FamilyKind,
    },
}

#[derive(Debug, Clone)]
pub struct SetFamily {
    pub name: String,
    pub base: PointSet,
    pub members: Vec<PointSet>,
    pub provenance: Provenance,
}

impl SetFamily {
    pub fn explicit(name: impl Into<String>, base: PointSet, members: Vec<PointSet>) -> Result<Self> {
        if let Some(bad) = members.iter().position(|m| !m.is_subset(&base)) {
            return Err(Error::Unsupported(format!(
                "family member {bad} is not a subset of the base set"
            )));
        }
        Ok(SetFamily {
            name: name.into(),
            base,
            members,
            provenance: Provenance::Explicit,
        })
    }

    /// Drops repeated members, keeping first occurrences.
    pub fn dedup(&mut self) {
        let mut seen = std::collections::HashSet::new();
        self.members.retain(|m| seen.insert(m.clone()));
    }
}

/// U(B, f) restricted to `robust` when given, for the requested kind.
pub fn classifier_set(
    pop: &Population,
    base: &PointSet,
    f: &LabelAssignment,
    robust: Option<&PointSet>,
    kind: FamilyKind,
) -> PointSet {
    let want_mistake = kind == FamilyKind::Mistakes;
    let mut out = PointSet::from_predicate(pop.len(), |x| {
        base.contains(x) && (f.get(x) != pop.gold(x)) == want_mistake
    });
    if let Some(r) = robust {
        out = out.intersection(r);
    }
    out
}

/// M_η(B, F) or M'_η(B, F): one member per classifier, in classifier order.
pub fn mistake_family(
    pop: &Population,
    base: &PointSet,
    classifiers: &[LabelAssignment],
    g: &ExampleGraph,
    eta: f64,
    kind: FamilyKind,
) -> SetFamily {
    let members = classifiers
        .iter()
        .map(|f| {
            let r = robust_set(g, pop, f, eta);
            classifier_set(pop, base, f, Some(&r), kind)
        })
        .collect();
    SetFamily {
        name: match kind {
            FamilyKind::Mistakes => "mistakes".into(),
            FamilyKind::NonMistakes => "non-mistakes".into(),
        },
        base: base.clone(),
        members,
        provenance: Provenance::Classifiers {
            count: classifiers.len(),
            eta,
            kind,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum EstimateMode {
    Exact,
    RobustBracket { lo: f64, hi: f64 },
    Empirical,
}

impl EstimateMode {
    pub fn label(&self) -> &'static str {
        match self {
            EstimateMode::Exact => "exact",
            EstimateMode::RobustBracket { .. } => "robust-bracket",
            EstimateMode::Empirical => "empirical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionEstimate {
    pub c: f64,
    pub q_threshold: f64,
    pub witness: PointSet,
    /// Index of the witness within the family, when it came from one.
    pub witness_member: Option<usize>,
    pub mode: EstimateMode,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expansion {
    Measured(ExpansionEstimate),
    /// Every member had P(U | B) ≤ q, so the expansion condition is vacuous.
    NoQualifyingSet,
}

impl Expansion {
    pub fn c(&self) -> Option<f64> {
        match self {
            Expansion::Measured(e) => Some(e.c),
            Expansion::NoQualifyingSet => None,
        }
    }

    /// The coefficient usable in a bound: the measured value capped at one,
    /// or one when no set qualifies.
    pub fn usable_c(&self) -> f64 {
        self.c().map_or(1.0, |c| c.min(1.0))
    }
}

fn check_sets(pop: &Population, a: &PointSet, b: &PointSet) -> Result<(f64, f64)> {
    let pa = pop.mass(a);
    let pb = pop.mass(b);
    if pa <= 0.0 || pb <= 0.0 {
        return Err(Error::UndefinedConditional);
    }
    Ok((pa, pb))
}

/// c = min over U ∈ M with P(U|B) > q of P(N(U)|A) / P(U|B).
///
/// At η = 0 the numerator is the plain neighborhood probability; for η > 0 it
/// is the robust neighborhood size and the mode carries its bracket.
pub fn exact_expansion(
    g: &ExampleGraph,
    pop: &Population,
    family: &SetFamily,
    a: &PointSet,
    b: &PointSet,
    q: f64,
    eta: f64,
) -> Result<Expansion> {
    expansion_impl(g, pop, family, a, b, q, eta, eta > 0.0)
}

/// Same as [`exact_expansion`] but always routes through the robust
/// neighborhood size, including at η = 0.
pub fn exact_robust_expansion(
    g: &ExampleGraph,
    pop: &Population,
    family: &SetFamily,
    a: &PointSet,
    b: &PointSet,
    q: f64,
    eta: f64,
) -> Result<Expansion> {
    expansion_impl(g, pop, family, a, b, q, eta, true)
}

#[allow(clippy::too_many_arguments)]
fn expansion_impl(
    g: &ExampleGraph,
    pop: &Population,
    family: &SetFamily,
    a: &PointSet,
    b: &PointSet,
    q: f64,
    eta: f64,
    robust: bool,
) -> Result<Expansion> {
    check_sets(pop, a, b)?;
    let mut best: Option<(f64, f64, usize)> = None;
    let mut best_hi = f64::INFINITY;
    for (k, u) in family.members.iter().enumerate() {
        let pu = pop.conditional_prob(u, b)?;
        if pu <= q {
            continue;
        }
        let (lo, hi) = if robust {
            let br = g.robust_neighborhood_size(pop, u, a, eta)?;
            (br.lower / pu, br.upper / pu)
        } else {
            let r = pop.conditional_prob(&g.neighborhood(u), a)? / pu;
            (r, r)
        };
        best_hi = best_hi.min(hi);
        if best.is_none_or(|(c, _, _)| lo < c) {
            best = Some((lo, hi, k));
        }
    }
    Ok(match best {
        None => Expansion::NoQualifyingSet,
        Some((c, _, k)) => Expansion::Measured(ExpansionEstimate {
            c,
            q_threshold: q,
            witness: family.members[k].clone(),
            witness_member: Some(k),
            mode: if robust {
                EstimateMode::RobustBracket { lo: c, hi: best_hi }
            } else {
                EstimateMode::Exact
            },
            eta,
        }),
    })
}

/// Samples from P(·|A) and P(·|B) plus the oracle target of each A-sample.
#[derive(Debug, Clone)]
pub struct OracleSample {
    pub sample_a: Vec<usize>,
    pub sample_b: Vec<usize>,
    /// `targets[i]` is the oracle neighbor n(x_i) of `sample_a[i]`.
    pub targets: Vec<usize>,
}

impl OracleSample {
    pub fn new(sample_a: Vec<usize>, sample_b: Vec<usize>, targets: Vec<usize>) -> Result<Self> {
        if sample_a.is_empty() || sample_b.is_empty() {
            return Err(Error::Unsupported("oracle samples must be nonempty".into()));
        }
        if targets.len() != sample_a.len() {
            return Err(Error::Unsupported(format!(
                "{} oracle targets for {} A-samples",
                targets.len(),
                sample_a.len()
            )));
        }
        Ok(OracleSample {
            sample_a,
            sample_b,
            targets,
        })
    }

    /// Resolves id lists and a source → target oracle map.
    pub fn from_ids(
        pop: &Population,
        sample_a: &[String],
        sample_b: &[String],
        pairs: &[(String, String)],
    ) -> Result<Self> {
        let map: HashMap<&str, &str> = pairs.iter().map(|(s, t)| (s.as_str(), t.as_str())).collect();
        let mut a = Vec::with_capacity(sample_a.len());
        let mut targets = Vec::with_capacity(sample_a.len());
        for id in sample_a {
            a.push(pop.index_of(id)?);
            let t = map
                .get(id.as_str())
                .ok_or_else(|| Error::Unsupported(format!("no oracle pair for `{id}`")))?;
            targets.push(pop.index_of(t)?);
        }
        let b = sample_b
            .iter()
            .map(|id| pop.index_of(id))
            .collect::<Result<Vec<_>>>()?;
        OracleSample::new(a, b, targets)
    }

    pub fn n_a(&self) -> usize {
        self.sample_a.len()
    }

    pub fn n_b(&self) -> usize {
        self.sample_b.len()
    }

    /// Checks every oracle target against the edge data.
    pub fn validate_against(&self, g: &ExampleGraph, pop: &Population) -> Result<()> {
        for (&s, &t) in self.sample_a.iter().zip(&self.targets) {
            if !g.are_neighbors(s, t) {
                return Err(Error::OracleNotNeighbor {
                    source_id: pop.id(s).to_string(),
                    target: pop.id(t).to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Reads "source<TAB>target" oracle pairs.
pub fn load_oracle_pairs<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    crate::graph::load_edges(reader)
}

/// Reads one id per line.
pub fn load_id_list<R: BufRead>(reader: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let id = line.trim_end_matches('\r');
        if !id.is_empty() && !id.starts_with('#') {
            out.push(id.to_string());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "status", content = "value")]
pub enum EmpiricalRatio {
    Ratio(f64),
    BelowThreshold,
}

/// ĉ(U) = (1/n_A) Σ 1[n(x_i) ∈ U] / (1/n_B) Σ 1[x_j ∈ U], subject to the
/// B-fraction being at least q − ε.
pub fn empirical_expansion(
    oracle: &OracleSample,
    set: &PointSet,
    q: f64,
    epsilon: f64,
) -> Result<EmpiricalRatio> {
    let hits_a = oracle.targets.iter().filter(|&&t| set.contains(t)).count();
    let hits_b = oracle.sample_b.iter().filter(|&&x| set.contains(x)).count();
    let num = hits_a as f64 / oracle.n_a() as f64;
    let den = hits_b as f64 / oracle.n_b() as f64;
    if hits_b == 0 {
        if hits_a > 0 && q - epsilon <= 0.0 {
            return Err(Error::ZeroDenominator);
        }
        return Ok(EmpiricalRatio::BelowThreshold);
    }
    if den < q - epsilon {
        return Ok(EmpiricalRatio::BelowThreshold);
    }
    Ok(EmpiricalRatio::Ratio(num / den))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum MemberStatus {
    Ratio { c: f64 },
    BelowThreshold,
    ZeroDenominator,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub index: usize,
    pub set_size: usize,
    #[serde(flatten)]
    pub status: MemberStatus,
}

#[derive(Debug, Clone)]
pub struct EmpiricalResult {
    pub estimate: Expansion,
    pub trace: Vec<TraceEntry>,
}

fn status_of(r: Result<EmpiricalRatio>) -> Result<MemberStatus> {
    match r {
        Ok(EmpiricalRatio::Ratio(c)) => Ok(MemberStatus::Ratio { c }),
        Ok(EmpiricalRatio::BelowThreshold) => Ok(MemberStatus::BelowThreshold),
        Err(Error::ZeroDenominator) => Ok(MemberStatus::ZeroDenominator),
        Err(e) => Err(e),
    }
}

fn reduce_trace(trace: &[TraceEntry], sets: &[PointSet], q: f64, eta: f64) -> Expansion {
    let best = trace
        .iter()
        .zip(sets)
        .filter_map(|(t, s)| match t.status {
            MemberStatus::Ratio { c } => Some((c, t.index, s)),
            _ => None,
        })
        .min_by(|a, b| a.0.total_cmp(&b.0));
    match best {
        None => Expansion::NoQualifyingSet,
        Some((c, index, s)) => Expansion::Measured(ExpansionEstimate {
            c,
            q_threshold: q,
            witness: s.clone(),
            witness_member: Some(index),
            mode: EstimateMode::Empirical,
            eta,
        }),
    }
}

/// Empirical expansion of every member, reduced to the minimum.
pub fn empirical_family_expansion(
    oracle: &OracleSample,
    family: &SetFamily,
    q: f64,
    epsilon: f64,
) -> Result<EmpiricalResult> {
    let trace = family
        .members
        .iter()
        .enumerate()
        .map(|(index, u)| {
            Ok(TraceEntry {
                index,
                set_size: u.len(),
                status: status_of(empirical_expansion(oracle, u, q, epsilon))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let eta = match family.provenance {
        Provenance::Classifiers { eta, .. } => eta,
        Provenance::Explicit => 0.0,
    };
    Ok(EmpiricalResult {
        estimate: reduce_trace(&trace, &family.members, q, eta),
        trace,
    })
}

/// One-sided Hoeffding radius sqrt(ln(2/δ) / (2 n_B)), the default ε.
pub fn default_epsilon(delta: f64, n_b: usize) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Parameter {
            name: "delta",
            value: delta,
            range: "(0, 1]",
        });
    }
    if n_b == 0 {
        return Err(Error::Parameter {
            name: "n_b",
            value: 0.0,
            range: "positive integer",
        });
    }
    Ok(((2.0 / delta).ln() / (2.0 * n_b as f64)).sqrt())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub resamples: usize,
    pub resample_fraction: f64,
    pub seed: u64,
    pub q: f64,
    pub epsilon: f64,
    pub kind: FamilyKind,
    pub eta: f64,
    /// Whether the learner is a deterministic function of its sample.
    pub deterministic_learner: bool,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            resamples: 5,
            resample_fraction: 0.8,
            seed: 0,
            q: 0.0,
            epsilon: 0.0,
            kind: FamilyKind::Mistakes,
            eta: 0.0,
            deterministic_learner: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DrawRecord {
    pub draw: usize,
    pub train_size: usize,
    pub set_size: usize,
    #[serde(flatten)]
    pub status: MemberStatus,
}

#[derive(Debug, Clone)]
pub struct HeuristicResult {
    pub estimate: Expansion,
    pub trace: Vec<DrawRecord>,
    /// Set when the learner may be stochastic; the finite-sample guarantee
    /// then holds only heuristically.
    pub stochastic_caveat: bool,
}

/// Randomized search for the worst-expanding set: retrain on random subsets
/// of the covered pool, take each model's (non-)mistake set inside `base`,
/// and keep the smallest empirical expansion.
///
/// The learner receives the draw index and the sampled point indices. When
/// a graph is supplied, sets are intersected with the η-robust set.
pub fn heuristic_min_expansion<L>(
    pop: &Population,
    graph: Option<&ExampleGraph>,
    train_pool: &[usize],
    mut learner: L,
    oracle: &OracleSample,
    base: &PointSet,
    cfg: &HeuristicConfig,
) -> Result<HeuristicResult>
where
    L: FnMut(usize, &[usize]) -> std::result::Result<LabelAssignment, String>,
{
    if cfg.resamples == 0 {
        return Err(Error::Parameter {
            name: "resamples",
            value: 0.0,
            range: ">= 1",
        });
    }
    if !(cfg.resample_fraction > 0.0 && cfg.resample_fraction <= 1.0) {
        return Err(Error::Parameter {
            name: "resample_fraction",
            value: cfg.resample_fraction,
            range: "(0, 1]",
        });
    }
    if train_pool.is_empty() {
        return Err(Error::Unsupported("empty training pool".into()));
    }
    let take = ((train_pool.len() as f64 * cfg.resample_fraction).round() as usize)
        .clamp(1, train_pool.len());
    let mut trace = Vec::with_capacity(cfg.resamples);
    let mut sets = Vec::with_capacity(cfg.resamples);
    for draw in 0..cfg.resamples {
        let mut rng = substream(cfg.seed, "heuristic-draw", draw as u64);
        let mut chosen: Vec<usize> = sample(&mut rng, train_pool.len(), take)
            .into_iter()
            .map(|k| train_pool[k])
            .collect();
        chosen.sort_unstable();
        let f = learner(draw, &chosen).map_err(|message| Error::Learner { draw, message })?;
        let robust = graph.map(|g| robust_set(g, pop, &f, cfg.eta));
        let u = classifier_set(pop, base, &f, robust.as_ref(), cfg.kind);
        let status = status_of(empirical_expansion(oracle, &u, cfg.q, cfg.epsilon))?;
        trace.push(TraceEntry {
            index: draw,
            set_size: u.len(),
            status,
        });
        sets.push(u);
    }
    let estimate = reduce_trace(&trace, &sets, cfg.q, cfg.eta);
    let trace = trace
        .into_iter()
        .map(|t| DrawRecord {
            draw: t.index,
            train_size: take,
            set_size: t.set_size,
            status: t.status,
        })
        .collect();
    Ok(HeuristicResult {
        estimate,
        trace,
        stochastic_caveat: !cfg.deterministic_learner,
    })
}

/// Population-level oracle expansion c(U) = P(n(x) ∈ U | A) / P(U | B) for an
/// oracle map defined on every point of A.
pub fn oracle_ratio(
    pop: &Population,
    oracle_map: &[Option<usize>],
    a: &PointSet,
    b: &PointSet,
    set: &PointSet,
) -> Result<f64> {
    let (pa, _) = check_sets(pop, a, b)?;
    let mut hit = 0.0;
    for x in a.iter() {
        let t = oracle_map[x].ok_or_else(|| {
            Error::Unsupported(format!("no oracle target for `{}`", pop.id(x)))
        })?;
        if set.contains(t) {
            hit += pop.mass_of(x);
        }
    }
    let pu = pop.conditional_prob(set, b)?;
    if pu <= 0.0 {
        return Err(Error::UndefinedConditional);
    }
    Ok(hit / pa / pu)
}

/// Finite-sample margin on sup_U ĉ(U) − c(U):
/// 4(4 + √γ) √((d ln(2em/d) + ln(8/δ)) / (n_A q̄²)) with γ = n_B q̄ / n_A and
/// m = n_A + n_B. Natural logarithms; not clamped.
pub fn generalization_margin(vc: u32, n_a: usize, n_b: usize, q_bar: f64, delta: f64) -> Result<f64> {
    if vc < 1 {
        return Err(Error::Parameter {
            name: "vc",
            value: f64::from(vc),
            range: ">= 1",
        });
    }
    if !(q_bar > 0.0 && q_bar <= 1.0) {
        return Err(Error::Parameter {
            name: "q_bar",
            value: q_bar,
            range: "(0, 1]",
        });
    }
    check_range("delta", delta, f64::MIN_POSITIVE, 1.0, "(0, 1]")?;
    if n_a == 0 || n_b == 0 {
        return Err(Error::Parameter {
            name: "n",
            value: 0.0,
            range: "positive sample sizes",
        });
    }
    let d = f64::from(vc);
    let (na, nb) = (n_a as f64, n_b as f64);
    let m = na + nb;
    let gamma = nb * q_bar / na;
    let complexity = d * (2.0 * std::f64::consts::E * m / d).ln() + (8.0 / delta).ln();
    Ok(4.0 * (4.0 + gamma.sqrt()) * (complexity / (na * q_bar * q_bar)).sqrt())
}

/// VC(M) ≤ VC(F) for mistake families of a binary hypothesis class.
pub fn vc_of_mistake_family(vc_of_hypotheses: u32, num_classes: usize) -> Result<u32> {
    if num_classes != 2 {
        return Err(Error::Unsupported(format!(
            "mistake-family VC bound holds for binary classes only (k = {num_classes})"
        )));
    }
    if vc_of_hypotheses < 1 {
        return Err(Error::Parameter {
            name: "vc",
            value: 0.0,
            range: ">= 1",
        });
    }
    Ok(vc_of_hypotheses)
}

/// The four (A, B) pairs bounds are stated on, with the family kind each uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SetPair {
    /// M'(S_good) on (S_bad, S_good).
    BadGood,
    /// M(T) on (S_good, T).
    GoodT,
    /// M'(T) on (S_bad, T).
    BadT,
    /// M(S_bad) on (S_good, S_bad).
    GoodBad,
}

impl SetPair {
    pub const ALL: [SetPair; 4] = [SetPair::BadGood, SetPair::GoodT, SetPair::BadT, SetPair::GoodBad];

    /// (A, B, kind) for one class.
    pub fn sets(self, cls: &ClassPartition) -> (&PointSet, &PointSet, FamilyKind) {
        match self {
            SetPair::BadGood => (&cls.bad, &cls.good, FamilyKind::NonMistakes),
            SetPair::GoodT => (&cls.good, &cls.uncovered, FamilyKind::Mistakes),
            SetPair::BadT => (&cls.bad, &cls.uncovered, FamilyKind::NonMistakes),
            SetPair::GoodBad => (&cls.good, &cls.bad, FamilyKind::Mistakes),
        }
    }
}

/// Exact expansion of the classifiers' family on one pair of a class, or
/// `None` when A or B has no mass.
pub fn pair_expansion(
    pop: &Population,
    g: &ExampleGraph,
    cls: &ClassPartition,
    classifiers: &[LabelAssignment],
    pair: SetPair,
    q: f64,
    eta: f64,
) -> Result<Option<Expansion>> {
    let (a, b, kind) = pair.sets(cls);
    if pop.mass(a) <= 0.0 || pop.mass(b) <= 0.0 {
        return Ok(None);
    }
    let fam = mistake_family(pop, b, classifiers, g, eta, kind);
    exact_expansion(g, pop, &fam, a, b, q, eta).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::toy::t1_graph;
    use crate::population::partition;
    use crate::population::toy::t1;
    use approx::assert_abs_diff_eq;

    fn ids(pop: &Population, s: &PointSet) -> Vec<String> {
        s.iter().map(|i| pop.id(i).to_string()).collect()
    }

    #[test]
    fn mistake_families_on_toy() {
        let pop = t1();
        let g = t1_graph(&pop);
        let part = partition(&pop);
        let s0 = &part.class(0).covered;
        let gold = LabelAssignment::gold(&pop);
        let fam = mistake_family(&pop, &pop.all(), &[gold], &g, 0.0, FamilyKind::Mistakes);
        assert!(fam.members[0].is_empty());

        let zero = LabelAssignment::constant(&pop, 0);
        let fam = mistake_family(&pop, s0, &[zero], &g, 0.0, FamilyKind::NonMistakes);
        assert_eq!(ids(&pop, &fam.members[0]), ["a", "b", "c"]);

        // Alternating labels around every edge: nothing is 0-robust.
        let alt = LabelAssignment::from_vec(vec![1, 1, 0, 0, 0]);
        for kind in [FamilyKind::Mistakes, FamilyKind::NonMistakes] {
            let fam = mistake_family(&pop, &pop.all(), std::slice::from_ref(&alt), &g, 0.0, kind);
            assert!(fam.members[0].is_empty());
        }
    }

    #[test]
    fn exact_expansion_on_toy() {
        let pop = t1();
        let g = t1_graph(&pop);
        let part = partition(&pop);
        let c0 = part.class(0);
        let fam = SetFamily::explicit("ab", c0.good.clone(), vec![c0.good.clone()]).unwrap();
        let e = exact_expansion(&g, &pop, &fam, &c0.bad, &c0.good, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(e.c().unwrap(), 1.0, epsilon = 1e-12);

        let e = exact_expansion(&g, &pop, &fam, &c0.bad, &c0.good, 1.0, 0.0).unwrap();
        assert_eq!(e, Expansion::NoQualifyingSet);
        assert_eq!(e.usable_c(), 1.0);

        assert!(exact_expansion(&g, &pop, &fam, &pop.empty_set(), &c0.good, 0.0, 0.0).is_err());
    }

    #[test]
    fn explicit_family_rejects_non_subsets() {
        let pop = t1();
        let base = pop.set_from_ids(["a"]).unwrap();
        let other = pop.set_from_ids(["b"]).unwrap();
        assert!(SetFamily::explicit("x", base, vec![other]).is_err());
    }

    #[test]
    fn empirical_ratios() {
        // Everything maps into U and U covers the B-sample.
        let o = OracleSample::new(vec![0, 1], vec![2, 3], vec![2, 3]).unwrap();
        let u = PointSet::from_indices(5, [2, 3]);
        assert_eq!(empirical_expansion(&o, &u, 0.0, 0.0).unwrap(), EmpiricalRatio::Ratio(1.0));

        // n_A = 4 with 2 hits; n_B = 4 with 2 members.
        let o = OracleSample::new(vec![0, 0, 1, 1], vec![2, 3, 4, 4], vec![2, 3, 4, 4]).unwrap();
        let u = PointSet::from_indices(5, [2, 3]);
        assert_eq!(empirical_expansion(&o, &u, 0.0, 0.0).unwrap(), EmpiricalRatio::Ratio(1.0));

        assert_eq!(
            empirical_expansion(&o, &u, 0.9, 0.1).unwrap(),
            EmpiricalRatio::BelowThreshold
        );
        let only_a = OracleSample::new(vec![0], vec![4], vec![2]).unwrap();
        let u = PointSet::from_indices(5, [2]);
        assert!(matches!(
            empirical_expansion(&only_a, &u, 0.0, 0.0),
            Err(Error::ZeroDenominator)
        ));
    }

    #[test]
    fn empirical_matches_population_on_uniform_full_sample() {
        let pop = t1();
        let g = t1_graph(&pop);
        let part = partition(&pop);
        let c0 = part.class(0);
        // A = S_0^good = {a, b}, B = T_0 = {d, e}; oracle a→d, b→e.
        let a = pop.index_of("a").unwrap();
        let b = pop.index_of("b").unwrap();
        let d = pop.index_of("d").unwrap();
        let e = pop.index_of("e").unwrap();
        let o = OracleSample::new(vec![a, b], vec![d, e], vec![d, e]).unwrap();
        o.validate_against(&g, &pop).unwrap();
        let mut map = vec![None; pop.len()];
        map[a] = Some(d);
        map[b] = Some(e);
        for u in [vec![d], vec![e], vec![d, e]] {
            let u = PointSet::from_indices(pop.len(), u);
            let pop_ratio = oracle_ratio(&pop, &map, &c0.good, &c0.uncovered, &u).unwrap();
            let EmpiricalRatio::Ratio(emp) = empirical_expansion(&o, &u, 0.0, 0.0).unwrap() else {
                panic!("expected a ratio")
            };
            assert_abs_diff_eq!(emp, pop_ratio, epsilon = 1e-12);
        }
        let bad = OracleSample::new(vec![a], vec![d], vec![e]).unwrap();
        assert!(bad.validate_against(&g, &pop).is_err());
    }

    #[test]
    fn heuristic_degenerate_cases() {
        let pop = t1();
        let o = OracleSample::new(vec![0, 1], vec![3, 4], vec![3, 4]).unwrap();
        let base = pop.set_from_ids(["d", "e"]).unwrap();
        let pool = [0, 1, 2];
        let gold = LabelAssignment::gold(&pop);
        let cfg = HeuristicConfig::default();
        let res =
            heuristic_min_expansion(&pop, None, &pool, |_, _| Ok(gold.clone()), &o, &base, &cfg).unwrap();
        assert_eq!(res.estimate, Expansion::NoQualifyingSet);
        assert_eq!(res.trace.len(), 5);
        assert!(res.trace.iter().all(|d| d.train_size == 2));

        // A fixed f reproduces the single-draw estimate.
        let f = LabelAssignment::from_vec(vec![0, 0, 0, 1, 0]);
        let res =
            heuristic_min_expansion(&pop, None, &pool, |_, _| Ok(f.clone()), &o, &base, &cfg).unwrap();
        let u = classifier_set(&pop, &base, &f, None, FamilyKind::Mistakes);
        let EmpiricalRatio::Ratio(single) = empirical_expansion(&o, &u, 0.0, 0.0).unwrap() else {
            panic!()
        };
        assert_eq!(res.estimate.c(), Some(single));

        let err = heuristic_min_expansion(&pop, None, &pool, |d, _| Err(format!("boom {d}")), &o, &base, &cfg)
            .unwrap_err();
        assert!(matches!(err, Error::Learner { draw: 0, .. }));
        let bad = HeuristicConfig {
            resamples: 0,
            ..HeuristicConfig::default()
        };
        assert!(heuristic_min_expansion(&pop, None, &pool, |_, _| Ok(f.clone()), &o, &base, &bad).is_err());
    }

    #[test]
    fn heuristic_draws_are_seeded() {
        let pop = t1();
        let o = OracleSample::new(vec![0, 1], vec![3, 4], vec![3, 4]).unwrap();
        let base = pop.set_from_ids(["d", "e"]).unwrap();
        let pool: Vec<usize> = (0..5).collect();
        let cfg = HeuristicConfig {
            seed: 11,
            ..HeuristicConfig::default()
        };
        let record = |cfg: &HeuristicConfig| {
            let mut seen = Vec::new();
            heuristic_min_expansion(
                &pop,
                None,
                &pool,
                |_, s| {
                    seen.push(s.to_vec());
                    Ok(LabelAssignment::constant(&pop, 1))
                },
                &o,
                &base,
                cfg,
            )
            .unwrap();
            seen
        };
        let first = record(&cfg);
        assert_eq!(first, record(&cfg));
        assert!(first.iter().all(|s| s.len() == 4));
        let more = record(&HeuristicConfig {
            resamples: 7,
            ..cfg.clone()
        });
        assert_eq!(&more[..5], &first[..]);
    }

    #[test]
    fn margin_values() {
        // Independent arithmetic: γ = 0.1, m = 2000.
        let inner: f64 = (2.0 * (2.0 * std::f64::consts::E * 1000.0).ln() + 160f64.ln()) / 10.0;
        let expected = 4.0 * (4.0 + 0.1f64.sqrt()) * inner.sqrt();
        let got = generalization_margin(2, 1000, 1000, 0.1, 0.05).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 25.77, epsilon = 0.005);

        assert!(generalization_margin(2, 1000, 1000, 0.1, 0.5).unwrap() < got);

        let big = generalization_margin(2, 100_000, 100_000, 0.1, 0.05).unwrap();
        // Same γ; after removing the log(m) factor the margin shrinks tenfold.
        let complexity = |m: f64| 2.0 * (2.0 * std::f64::consts::E * m / 2.0).ln() + 160f64.ln();
        let log_factor = (complexity(2000.0) / complexity(200_000.0)).sqrt();
        let ratio = got / big / log_factor;
        assert!((ratio / 10.0 - 1.0).abs() < 0.05, "ratio {ratio}");

        assert!(generalization_margin(2, 10, 10, 0.0, 0.1).is_err());
        assert!(generalization_margin(0, 10, 10, 0.1, 0.1).is_err());
    }

    #[test]
    fn vc_pass_through() {
        assert_eq!(vc_of_mistake_family(3, 2).unwrap(), 3);
        assert_eq!(vc_of_mistake_family(1, 2).unwrap(), 1);
        assert!(vc_of_mistake_family(3, 3).is_err());
    }

    #[test]
    fn epsilon_default() {
        let e = default_epsilon(0.1, 100).unwrap();
        assert_abs_diff_eq!(e, ((20.0f64).ln() / 200.0).sqrt(), epsilon = 1e-15);
        assert!(default_epsilon(0.0, 100).is_err());
    }
}
