//! Pointwise robustness r(f, x), robust sets R_η(f) and average robustness.
//!
//! Isolated points (no neighbor mass) have undefined robustness. They are
//! members of every robust set and are left out of averages.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::ExampleGraph;
use crate::pointset::PointSet;
use crate::population::{LabelAssignment, Population};

#[derive(Debug, Clone, Serialize)]
pub struct RobustnessProfile {
    /// r(f, x) per point index; `None` for isolated points.
    pub values: Vec<Option<f64>>,
    pub isolated: usize,
}

fn robustness_at(g: &ExampleGraph, pop: &Population, f: &LabelAssignment, x: usize) -> Option<f64> {
    let fx = f.get(x);
    let (mut total, mut differ) = (0.0, 0.0);
    for &v in g.neighbors(x) {
        let m = pop.mass_of(v);
        total += m;
        if f.get(v) != fx {
            differ += m;
        }
    }
    (total > 0.0).then(|| differ / total)
}

/// r(f, x) = P(f(x') ≠ f(x) | x' ∈ N(x)).
pub fn pointwise_robustness(
    g: &ExampleGraph,
    pop: &Population,
    f: &LabelAssignment,
    x: usize,
) -> Result<f64> {
    robustness_at(g, pop, f, x).ok_or_else(|| Error::IsolatedPoint(pop.id(x).to_string()))
}

pub fn robustness_profile(g: &ExampleGraph, pop: &Population, f: &LabelAssignment) -> RobustnessProfile {
    let values: Vec<Option<f64>> = (0..pop.len()).map(|x| robustness_at(g, pop, f, x)).collect();
    let isolated = values.iter().filter(|v| v.is_none()).count();
    RobustnessProfile { values, isolated }
}

/// R_η(f) = {x : r(f, x) ≤ η}, isolated points included.
pub fn robust_set(g: &ExampleGraph, pop: &Population, f: &LabelAssignment, eta: f64) -> PointSet {
    PointSet::from_predicate(pop.len(), |x| {
        robustness_at(g, pop, f, x).is_none_or(|r| r <= eta)
    })
}

/// γ = E_{x ~ P(·|A)} r(f, x). Fails if a positive-mass point of `A` is isolated.
pub fn average_robustness(
    g: &ExampleGraph,
    pop: &Population,
    f: &LabelAssignment,
    within: &PointSet,
) -> Result<f64> {
    let denom = pop.mass(within);
    if denom <= 0.0 {
        return Err(Error::UndefinedConditional);
    }
    let mut acc = 0.0;
    for x in within.iter() {
        let m = pop.mass_of(x);
        if m == 0.0 {
            continue;
        }
        acc += m * pointwise_robustness(g, pop, f, x)?;
    }
    Ok(acc / denom)
}

/// Average robustness over the non-isolated points of `A`, with the number of
/// isolated points left out.
pub fn average_robustness_excluding_isolated(
    g: &ExampleGraph,
    pop: &Population,
    f: &LabelAssignment,
    within: &PointSet,
) -> Result<(f64, usize)> {
    let (mut acc, mut denom, mut isolated) = (0.0, 0.0, 0);
    for x in within.iter() {
        match robustness_at(g, pop, f, x) {
            Some(r) => {
                acc += pop.mass_of(x) * r;
                denom += pop.mass_of(x);
            }
            None => isolated += 1,
        }
    }
    if denom <= 0.0 {
        return Err(Error::UndefinedConditional);
    }
    Ok((acc / denom, isolated))
}

/// Markov bound P(not η-robust | A) ≤ γ/η, clamped to 1.
pub fn markov_robust_mass_bound(gamma: f64, eta: f64) -> Result<f64> {
    if eta.is_nan() || eta <= 0.0 {
        return Err(Error::Parameter {
            name: "eta",
            value: eta,
            range: "(0, 1]",
        });
    }
    Ok((gamma / eta).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::toy::t1_graph;
    use crate::population::toy::t1;
    use approx::assert_abs_diff_eq;

    fn ids(pop: &Population, s: &PointSet) -> Vec<String> {
        s.iter().map(|i| pop.id(i).to_string()).collect()
    }

    // f(a) = 1, everything else 0.
    fn flip_a() -> LabelAssignment {
        LabelAssignment::from_vec(vec![1, 0, 0, 0, 0])
    }

    #[test]
    fn constant_classifier_is_robust() {
        let pop = t1();
        let g = t1_graph(&pop);
        let zero = LabelAssignment::constant(&pop, 0);
        for x in 0..pop.len() {
            assert_eq!(pointwise_robustness(&g, &pop, &zero, x).unwrap(), 0.0);
        }
        assert_eq!(robust_set(&g, &pop, &zero, 0.0), pop.all());
        assert_eq!(average_robustness(&g, &pop, &zero, &pop.all()).unwrap(), 0.0);
    }

    #[test]
    fn toy_pointwise_values() {
        let pop = t1();
        let g = t1_graph(&pop);
        let f = flip_a();
        let c = pop.index_of("c").unwrap();
        let a = pop.index_of("a").unwrap();
        assert_abs_diff_eq!(pointwise_robustness(&g, &pop, &f, c).unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(pointwise_robustness(&g, &pop, &f, a).unwrap(), 1.0);
        assert_eq!(ids(&pop, &robust_set(&g, &pop, &f, 0.0)), ["b", "e"]);
        assert_eq!(robust_set(&g, &pop, &f, 1.0), pop.all());
        let cset = pop.set_from_ids(["c"]).unwrap();
        assert_abs_diff_eq!(average_robustness(&g, &pop, &f, &cset).unwrap(), 0.5, epsilon = 1e-12);
        let aset = pop.set_from_ids(["a"]).unwrap();
        assert_eq!(average_robustness(&g, &pop, &f, &aset).unwrap(), 1.0);
    }

    #[test]
    fn isolated_points() {
        let pop = t1();
        let g = ExampleGraph::build(&pop, &[("a", "b")]).unwrap();
        let f = flip_a();
        let c = pop.index_of("c").unwrap();
        assert!(matches!(pointwise_robustness(&g, &pop, &f, c), Err(Error::IsolatedPoint(_))));
        assert!(robust_set(&g, &pop, &f, 0.0).contains(c));
        assert!(average_robustness(&g, &pop, &f, &pop.all()).is_err());
        let (gamma, skipped) = average_robustness_excluding_isolated(&g, &pop, &f, &pop.all()).unwrap();
        assert_eq!(skipped, 3);
        assert_eq!(gamma, 1.0);
        assert_eq!(robustness_profile(&g, &pop, &f).isolated, 3);
    }

    #[test]
    fn markov_bound_values() {
        assert_eq!(markov_robust_mass_bound(0.0, 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(markov_robust_mass_bound(0.02, 0.1).unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(markov_robust_mass_bound(0.5, 0.1).unwrap(), 1.0);
        assert!(markov_robust_mass_bound(0.1, 0.0).is_err());
    }
}
