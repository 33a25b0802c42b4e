//! Random instance generators and brute-force oracles shared by the
//! integration tests.

#![allow(dead_code)]

use rand::Rng;
use w2s::population::{Point, WeakLabel};
use w2s::{ExampleGraph, LabelAssignment, PointSet, Population};

/// Random population with masses in [0.1, 1), random gold labels and teacher
/// labels that abstain with probability `abstain`.
pub fn random_population<R: Rng>(rng: &mut R, n: usize, k: usize, abstain: f64) -> Population {
    let points = (0..n)
        .map(|i| Point {
            id: format!("x{i:03}"),
            mass: rng.gen_range(0.1..1.0),
            gold: rng.gen_range(0..k),
            weak: if rng.gen_bool(abstain) {
                WeakLabel::Abstain
            } else {
                WeakLabel::Class(rng.gen_range(0..k))
            },
        })
        .collect();
    Population::from_weights(points, k).unwrap()
}

pub fn random_edges<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                edges.push((a, b));
            }
        }
    }
    edges
}

pub fn random_graph<R: Rng>(rng: &mut R, pop: &Population, density: f64) -> ExampleGraph {
    ExampleGraph::from_index_edges(pop, &random_edges(rng, pop.len(), density)).unwrap()
}

pub fn random_set<R: Rng>(rng: &mut R, n: usize, p: f64) -> PointSet {
    PointSet::from_predicate(n, |_| rng.gen_bool(p))
}

pub fn random_labels<R: Rng>(rng: &mut R, n: usize, k: usize) -> LabelAssignment {
    LabelAssignment::from_vec((0..n).map(|_| rng.gen_range(0..k)).collect())
}

/// P_{1-η}(U, A) by enumerating every subset of N(U). Points outside N(U)
/// carry no weight into U, so restricting V to N(U) loses nothing.
pub fn brute_robust_size(g: &ExampleGraph, pop: &Population, u: &PointSet, a: &PointSet, eta: f64) -> f64 {
    let nbrs: Vec<usize> = g.neighborhood(u).iter().collect();
    assert!(nbrs.len() <= 20, "enumeration too large");
    let total = g.cut_weight(&g.neighborhood(u), u);
    let target = (1.0 - eta) * total;
    let slack = 1e-12 * total;
    let pa = pop.mass(a);
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << nbrs.len()) {
        let v = PointSet::from_indices(
            pop.len(),
            nbrs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x),
        );
        if g.cut_weight(&v, u) >= target - slack {
            best = best.min(pop.mass(&v.intersection(a)) / pa);
        }
    }
    best
}

/// Minimum expansion ratio over every nonempty subset of `b` above `q`,
/// with the plain neighborhood in the numerator.
pub fn brute_all_subsets_expansion(g: &ExampleGraph, pop: &Population, a: &PointSet, b: &PointSet, q: f64) -> Option<f64> {
    let members: Vec<usize> = b.iter().collect();
    let (pa, pb) = (pop.mass(a), pop.mass(b));
    let mut best: Option<f64> = None;
    for mask in 1u32..(1 << members.len()) {
        let u = PointSet::from_indices(
            pop.len(),
            members.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x),
        );
        let pu = pop.mass(&u) / pb;
        if pu <= q {
            continue;
        }
        let r = pop.mass(&g.neighborhood(&u).intersection(a)) / pa / pu;
        best = Some(best.map_or(r, |c: f64| c.min(r)));
    }
    best
}

/// Every nonempty subset of `b`, as a family.
pub fn all_subsets(pop: &Population, b: &PointSet) -> Vec<PointSet> {
    let members: Vec<usize> = b.iter().collect();
    (1u32..(1 << members.len()))
        .map(|mask| {
            PointSet::from_indices(
                pop.len(),
                members.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x),
            )
        })
        .collect()
}

