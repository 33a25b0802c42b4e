//! Finite weakly labeled populations.
//!
//! A [`Population`] is a finite set of points, each carrying a probability
//! mass, a gold label and a weak label that may abstain. The [`Partition`]
//! derived from it splits every class into covered/uncovered and, within the
//! covered part, into correctly/incorrectly pseudolabeled points.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointset::PointSet;

/// Global comparison tolerance for probability masses.
pub const MASS_TOL: f64 = 1e-9;

/// Masses whose sum lies within this distance of one are renormalized on load.
pub const LOAD_MASS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeakLabel {
    Class(usize),
    Abstain,
}

impl WeakLabel {
    pub fn class(self) -> Option<usize> {
        match self {
            WeakLabel::Class(c) => Some(c),
            WeakLabel::Abstain => None,
        }
    }

    pub fn is_abstain(self) -> bool {
        matches!(self, WeakLabel::Abstain)
    }
}

impl From<Option<usize>> for WeakLabel {
    fn from(v: Option<usize>) -> Self {
        v.map_or(WeakLabel::Abstain, WeakLabel::Class)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub id: String,
    pub mass: f64,
    pub gold: usize,
    pub weak: WeakLabel,
}

#[derive(Debug, Clone)]
pub struct Population {
    points: Vec<Point>,
    num_classes: usize,
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct PointRecord {
    id: String,
    #[serde(default)]
    mass: Option<f64>,
    y: usize,
    #[serde(default)]
    weak: Option<usize>,
}

#[derive(Serialize)]
struct PointRecordOut<'a> {
    id: &'a str,
    mass: f64,
    y: usize,
    weak: Option<usize>,
}

impl Population {
    /// Validates and builds a population. Masses must already sum to one
    /// within [`MASS_TOL`].
    pub fn new(points: Vec<Point>, num_classes: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        if num_classes == 0 {
            return Err(Error::Parameter {
                name: "num_classes",
                value: 0.0,
                range: "positive integer",
            });
        }
        let mut index = HashMap::with_capacity(points.len());
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            if index.insert(p.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(p.id.clone()));
            }
            if !(p.mass.is_finite() && (0.0..=1.0 + MASS_TOL).contains(&p.mass)) {
                return Err(Error::InvalidMass {
                    id: p.id.clone(),
                    mass: p.mass,
                });
            }
            let labels = std::iter::once(p.gold).chain(p.weak.class());
            for label in labels {
                if label >= num_classes {
                    return Err(Error::LabelOutOfRange {
                        id: p.id.clone(),
                        label,
                        num_classes,
                    });
                }
            }
            total += p.mass;
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::MassSum(total));
        }
        Ok(Population {
            points,
            num_classes,
            index,
        })
    }

    /// Builds a population from unnormalized nonnegative weights.
    pub fn from_weights(points: Vec<Point>, num_classes: usize) -> Result<Self> {
        let total: f64 = points.iter().map(|p| p.mass).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::MassSum(total));
        }
        let points = points
            .into_iter()
            .map(|p| Point {
                mass: p.mass / total,
                ..p
            })
            .collect();
        Population::new(points, num_classes)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn mass_of(&self, i: usize) -> f64 {
        self.points[i].mass
    }

    pub fn gold(&self, i: usize) -> usize {
        self.points[i].gold
    }

    pub fn weak(&self, i: usize) -> WeakLabel {
        self.points[i].weak
    }

    pub fn id(&self, i: usize) -> &str {
        &self.points[i].id
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn set_from_ids<'a, I: IntoIterator<Item = &'a str>>(&self, ids: I) -> Result<PointSet> {
        let mut s = self.empty_set();
        for id in ids {
            s.insert(self.index_of(id)?);
        }
        Ok(s)
    }

    pub fn empty_set(&self) -> PointSet {
        PointSet::empty(self.len())
    }

    pub fn all(&self) -> PointSet {
        PointSet::full(self.len())
    }

    pub fn select(&self, mut pred: impl FnMut(&Point) -> bool) -> PointSet {
        PointSet::from_predicate(self.len(), |i| pred(&self.points[i]))
    }

    /// P(U).
    pub fn mass(&self, set: &PointSet) -> f64 {
        // Fold from +0.0: an empty f64 sum is -0.0.
        set.iter().map(|i| self.points[i].mass).fold(0.0, |a, b| a + b)
    }

    /// P(U | A) = P(U ∩ A) / P(A).
    pub fn conditional_prob(&self, set: &PointSet, given: &PointSet) -> Result<f64> {
        let denom = self.mass(given);
        if denom <= 0.0 {
            return Err(Error::UndefinedConditional);
        }
        Ok(self.mass(&set.intersection(given)) / denom)
    }

    /// Reads the JSON Lines population format. When every mass is omitted
    /// the population is uniform.
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        Self::load_with_classes(reader, None)
    }

    pub fn load_with_classes<R: BufRead>(reader: R, num_classes: Option<usize>) -> Result<Self> {
        let mut records = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PointRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            records.push(rec);
        }
        if records.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        let with_mass = records.iter().filter(|r| r.mass.is_some()).count();
        if with_mass != 0 && with_mass != records.len() {
            return Err(Error::MixedMasses);
        }
        let uniform = 1.0 / records.len() as f64;
        let mut total = 0.0;
        for r in &records {
            if let Some(m) = r.mass {
                if !(m.is_finite() && m >= 0.0) {
                    return Err(Error::InvalidMass {
                        id: r.id.clone(),
                        mass: m,
                    });
                }
                total += m;
            }
        }
        if with_mass > 0 && (total - 1.0).abs() > LOAD_MASS_TOL {
            return Err(Error::MassSum(total));
        }
        let inferred = records
            .iter()
            .flat_map(|r| std::iter::once(r.y).chain(r.weak))
            .max()
            .map_or(2, |m| (m + 1).max(2));
        let k = num_classes.unwrap_or(inferred);
        let points = records
            .into_iter()
            .map(|r| Point {
                mass: r.mass.map_or(uniform, |m| m / total),
                id: r.id,
                gold: r.y,
                weak: r.weak.into(),
            })
            .collect();
        Population::new(points, k)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.points {
            let rec = PointRecordOut {
                id: &p.id,
                mass: p.mass,
                y: p.gold,
                weak: p.weak.class(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// A classifier realized as a total label map over the population, indexed
/// by point index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelAssignment {
    labels: Vec<usize>,
}

#[derive(Deserialize)]
struct PredictionRecord {
    id: String,
    pred: usize,
}

impl LabelAssignment {
    pub fn new(pop: &Population, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != pop.len() {
            return Err(Error::AssignmentSize {
                expected: pop.len(),
                got: labels.len(),
            });
        }
        for (i, &l) in labels.iter().enumerate() {
            if l >= pop.num_classes() {
                return Err(Error::LabelOutOfRange {
                    id: pop.id(i).to_string(),
                    label: l,
                    num_classes: pop.num_classes(),
                });
            }
        }
        Ok(LabelAssignment { labels })
    }

    /// Builds an assignment without validating labels against a population.
    pub fn from_vec(labels: Vec<usize>) -> Self {
        LabelAssignment { labels }
    }

    pub fn gold(pop: &Population) -> Self {
        LabelAssignment {
            labels: pop.points().iter().map(|p| p.gold).collect(),
        }
    }

    pub fn constant(pop: &Population, label: usize) -> Self {
        LabelAssignment {
            labels: vec![label; pop.len()],
        }
    }

    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Reads one prediction file (`{"id", "pred"}` per line). Every point of
    /// the population must receive a prediction.
    pub fn load<R: BufRead>(reader: R, pop: &Population) -> Result<Self> {
        let mut labels: Vec<Option<usize>> = vec![None; pop.len()];
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PredictionRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            let i = pop.index_of(&rec.id)?;
            if labels[i].replace(rec.pred).is_some() {
                return Err(Error::DuplicateId(rec.id));
            }
        }
        let labels = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| l.ok_or_else(|| Error::MissingPrediction(pop.id(i).to_string())))
            .collect::<Result<Vec<_>>>()?;
        LabelAssignment::new(pop, labels)
    }

    pub fn write_jsonl<W: Write>(&self, pop: &Population, mut out: W) -> Result<()> {
        for (i, &l) in self.labels.iter().enumerate() {
            serde_json::to_writer(&mut out, &serde_json::json!({"id": pop.id(i), "pred": l}))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// err(f, g | U): mass-weighted disagreement of two classifiers on `U`.
pub fn disagreement(
    pop: &Population,
    f: &LabelAssignment,
    g: &LabelAssignment,
    within: &PointSet,
) -> Result<f64> {
    let denom = pop.mass(within);
    if denom <= 0.0 {
        return Err(Error::UndefinedConditional);
    }
    let num: f64 = within
        .iter()
        .filter(|&i| f.get(i) != g.get(i))
        .map(|i| pop.mass_of(i))
        .fold(0.0, |a, b| a + b);
    Ok(num / denom)
}

/// err(f, ỹ | U). Fails if `U` contains an abstaining point.
pub fn weak_disagreement(pop: &Population, f: &LabelAssignment, within: &PointSet) -> Result<f64> {
    let denom = pop.mass(within);
    if denom <= 0.0 {
        return Err(Error::UndefinedConditional);
    }
    let mut num = 0.0;
    for i in within.iter() {
        match pop.weak(i) {
            WeakLabel::Abstain => return Err(Error::AbstainInComparison(pop.id(i).to_string())),
            WeakLabel::Class(w) if w != f.get(i) => num += pop.mass_of(i),
            WeakLabel::Class(_) => {}
        }
    }
    Ok(num / denom)
}

/// err(f, y | U).
pub fn gold_error(pop: &Population, f: &LabelAssignment, within: &PointSet) -> Result<f64> {
    disagreement(pop, f, &LabelAssignment::gold(pop), within)
}

/// Why a class cannot enter bound evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "reason")]
pub enum ClassExclusion {
    /// P(S_i) = 0, so α_i is undefined.
    NoCoverage,
    /// α_i outside the open interval (0, 1/2).
    AlphaOutOfRange { alpha: f64 },
}

#[derive(Debug, Clone)]
pub struct ClassPartition {
    pub class: usize,
    /// X_i = {x : y(x) = i}.
    pub members: PointSet,
    /// S_i, covered points of class i.
    pub covered: PointSet,
    /// T_i, abstained points of class i.
    pub uncovered: PointSet,
    pub good: PointSet,
    pub bad: PointSet,
    /// α_i = P(S_i^bad | S_i); `None` when P(S_i) = 0.
    pub alpha: Option<f64>,
}

impl ClassPartition {
    /// `Ok(alpha)` when the class satisfies 0 < α_i < 1/2.
    pub fn eligibility(&self) -> std::result::Result<f64, ClassExclusion> {
        match self.alpha {
            None => Err(ClassExclusion::NoCoverage),
            Some(a) if a > 0.0 && a < 0.5 => Ok(a),
            Some(a) => Err(ClassExclusion::AlphaOutOfRange { alpha: a }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Partition {
    pub classes: Vec<ClassPartition>,
    /// S, all covered points.
    pub covered: PointSet,
    /// T, all abstained points.
    pub uncovered: PointSet,
}

impl Partition {
    pub fn class(&self, i: usize) -> &ClassPartition {
        &self.classes[i]
    }
}

pub fn partition(pop: &Population) -> Partition {
    let covered = pop.select(|p| !p.weak.is_abstain());
    let uncovered = covered.complement();
    let classes = (0..pop.num_classes())
        .map(|class| {
            let members = pop.select(|p| p.gold == class);
            let s = members.intersection(&covered);
            let t = members.intersection(&uncovered);
            let good = pop
                .select(|p| p.weak == WeakLabel::Class(class))
                .intersection(&s);
            let bad = s.difference(&good);
            let ps = pop.mass(&s);
            let alpha = (ps > 0.0).then(|| pop.mass(&bad) / ps);
            ClassPartition {
                class,
                members,
                covered: s,
                uncovered: t,
                good,
                bad,
                alpha,
            }
        })
        .collect();
    Partition {
        classes,
        covered,
        uncovered,
    }
}


#[cfg(test)]
mod tests {
    use super::toy::{t1, T1};
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ids(pop: &Population, s: &PointSet) -> Vec<String> {
        s.iter().map(|i| pop.id(i).to_string()).collect()
    }

    #[test]
    fn toy_loads_uniform_and_round_trips() {
        let pop = t1();
        assert_eq!(pop.len(), 5);
        assert!(pop.num_classes() >= 2);
        for p in pop.points() {
            assert_abs_diff_eq!(p.mass, 0.2, epsilon = 1e-12);
        }
        assert_eq!(pop.weak(3), WeakLabel::Abstain);
        let mut buf = Vec::new();
        pop.write_jsonl(&mut buf).unwrap();
        let again = Population::load(buf.as_slice()).unwrap();
        assert_eq!(again.points(), pop.points());
        assert_ne!(String::from_utf8(buf).unwrap(), T1);
    }

    #[test]
    fn singleton_population() {
        let pop = Population::load(r#"{"id":"x","mass":1.0,"y":0,"weak":0}"#.as_bytes()).unwrap();
        assert_eq!(pop.len(), 1);
        assert_eq!(pop.mass_of(0), 1.0);
    }

    #[test]
    fn load_errors() {
        let dup = "{\"id\":\"a\",\"y\":0,\"weak\":0}\n{\"id\":\"a\",\"y\":1,\"weak\":null}\n";
        assert!(matches!(Population::load(dup.as_bytes()), Err(Error::DuplicateId(_))));

        let range = "{\"id\":\"a\",\"y\":3,\"weak\":0}\n";
        assert!(matches!(
            Population::load_with_classes(range.as_bytes(), Some(2)),
            Err(Error::LabelOutOfRange { .. })
        ));

        let sum = "{\"id\":\"a\",\"mass\":0.5,\"y\":0,\"weak\":0}\n{\"id\":\"b\",\"mass\":0.4,\"y\":0,\"weak\":0}\n";
        assert!(matches!(Population::load(sum.as_bytes()), Err(Error::MassSum(_))));

        assert!(matches!(Population::load("".as_bytes()), Err(Error::EmptyPopulation)));

        let mixed = "{\"id\":\"a\",\"mass\":1.0,\"y\":0,\"weak\":0}\n{\"id\":\"b\",\"y\":0,\"weak\":0}\n";
        assert!(matches!(Population::load(mixed.as_bytes()), Err(Error::MixedMasses)));
    }

    #[test]
    fn near_unit_masses_are_renormalized() {
        let s = "{\"id\":\"a\",\"mass\":0.5000004,\"y\":0,\"weak\":0}\n{\"id\":\"b\",\"mass\":0.5,\"y\":1,\"weak\":1,\"extra\":\"ignored\"}\n";
        let pop = Population::load(s.as_bytes()).unwrap();
        assert_abs_diff_eq!(pop.mass(&pop.all()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn toy_partition() {
        let pop = t1();
        let part = partition(&pop);
        let c0 = part.class(0);
        assert_eq!(ids(&pop, &c0.covered), ["a", "b", "c"]);
        assert_eq!(ids(&pop, &c0.good), ["a", "b"]);
        assert_eq!(ids(&pop, &c0.bad), ["c"]);
        assert_eq!(ids(&pop, &c0.uncovered), ["d", "e"]);
        assert_abs_diff_eq!(c0.alpha.unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        assert!(part.class(1).alpha.is_none());
        assert_eq!(part.class(1).eligibility(), Err(ClassExclusion::NoCoverage));
    }

    #[test]
    fn full_abstain_and_perfect_teacher() {
        let abstain = "{\"id\":\"a\",\"y\":0}\n{\"id\":\"b\",\"y\":1,\"weak\":null}\n";
        let pop = Population::load(abstain.as_bytes()).unwrap();
        let part = partition(&pop);
        assert!(part.covered.is_empty());
        assert_eq!(part.uncovered.len(), 2);
        assert!(part.classes.iter().all(|c| c.alpha.is_none()));

        let perfect = "{\"id\":\"a\",\"y\":0,\"weak\":0}\n{\"id\":\"b\",\"y\":1,\"weak\":1}\n";
        let pop = Population::load(perfect.as_bytes()).unwrap();
        let part = partition(&pop);
        for c in &part.classes {
            assert!(c.bad.is_empty());
            assert_eq!(c.alpha, Some(0.0));
            assert!(matches!(c.eligibility(), Err(ClassExclusion::AlphaOutOfRange { .. })));
        }
    }

    #[test]
    fn conditional_probabilities() {
        let pop = t1();
        let part = partition(&pop);
        let s0 = &part.class(0).covered;
        let c = pop.set_from_ids(["c"]).unwrap();
        assert_abs_diff_eq!(pop.conditional_prob(&c, s0).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pop.conditional_prob(s0, s0).unwrap(), 1.0, epsilon = 1e-12);
        let d = pop.set_from_ids(["d"]).unwrap();
        assert_eq!(pop.conditional_prob(&d, s0).unwrap(), 0.0);
        assert!(matches!(
            pop.conditional_prob(&d, &pop.empty_set()),
            Err(Error::UndefinedConditional)
        ));
    }

    #[test]
    fn disagreement_rates() {
        let pop = t1();
        let part = partition(&pop);
        let c0 = part.class(0);
        let zero = LabelAssignment::constant(&pop, 0);
        assert_abs_diff_eq!(
            weak_disagreement(&pop, &zero, &c0.covered).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-12
        );
        assert_eq!(disagreement(&pop, &zero, &zero, &pop.all()).unwrap(), 0.0);
        let gold = LabelAssignment::gold(&pop);
        assert_eq!(weak_disagreement(&pop, &gold, &c0.bad).unwrap(), 1.0);
        assert!(matches!(
            weak_disagreement(&pop, &zero, &pop.all()),
            Err(Error::AbstainInComparison(_))
        ));
    }

    #[test]
    fn predictions_load_and_validate() {
        let pop = t1();
        let preds = "{\"id\":\"a\",\"pred\":1}\n{\"id\":\"b\",\"pred\":0}\n{\"id\":\"c\",\"pred\":0}\n{\"id\":\"d\",\"pred\":0}\n{\"id\":\"e\",\"pred\":0}\n";
        let f = LabelAssignment::load(preds.as_bytes(), &pop).unwrap();
        assert_eq!(f.labels(), &[1, 0, 0, 0, 0]);
        let missing = "{\"id\":\"a\",\"pred\":1}\n";
        assert!(matches!(
            LabelAssignment::load(missing.as_bytes(), &pop),
            Err(Error::MissingPrediction(_))
        ));
    }
}
