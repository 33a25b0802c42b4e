//! The example graph: one node per point, an edge between neighbors, and
//! edge weight w(x, x') = P(x) P(x') on every neighbor pair.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::cover::{self, CoverItem};
use crate::error::{Error, Result};
use crate::pointset::PointSet;
use crate::population::{LabelAssignment, Population};

/// Largest candidate count solved exactly by branch and bound.
pub const EXACT_COVER_THRESHOLD: usize = 24;

#[derive(Debug, Clone)]
pub struct ExampleGraph {
    adjacency: Vec<Vec<usize>>,
    masses: Vec<f64>,
}

/// Size of the η-robust neighborhood, P_{1-η}(U, A). `exact` brackets are
/// degenerate (`lower == upper`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustSizeBracket {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
    /// Set attaining `upper`.
    #[serde(skip)]
    pub witness: PointSet,
}

impl ExampleGraph {
    /// Builds the graph from id pairs. Each pair is taken in both directions
    /// and repeated pairs collapse to one edge.
    pub fn build<S: AsRef<str>>(pop: &Population, edges: &[(S, S)]) -> Result<Self> {
        let mut idx = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let (a, b) = (a.as_ref(), b.as_ref());
            if a == b {
                return Err(Error::SelfLoop(a.to_string()));
            }
            idx.push((pop.index_of(a)?, pop.index_of(b)?));
        }
        Self::from_index_edges(pop, &idx)
    }

    pub fn from_index_edges(pop: &Population, edges: &[(usize, usize)]) -> Result<Self> {
        let n = pop.len();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n {
                return Err(Error::UnknownId(format!("#{a}")));
            }
            if b >= n {
                return Err(Error::UnknownId(format!("#{b}")));
            }
            if a == b {
                return Err(Error::SelfLoop(pop.id(a).to_string()));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        Ok(ExampleGraph {
            adjacency,
            masses: pop.points().iter().map(|p| p.mass).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adjacency[x]
    }

    pub fn are_neighbors(&self, x: usize, y: usize) -> bool {
        self.adjacency[x].binary_search(&y).is_ok()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Undirected edges with `a < b`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, nbrs)| nbrs.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        if self.are_neighbors(x, y) {
            self.masses[x] * self.masses[y]
        } else {
            0.0
        }
    }

    /// N(U): union of the neighborhoods of the points of `U`.
    pub fn neighborhood(&self, set: &PointSet) -> PointSet {
        let mut out = PointSet::empty(self.len());
        for x in set.iter() {
            for &y in &self.adjacency[x] {
                out.insert(y);
            }
        }
        out
    }

    /// w(V, U) = Σ_{x ∈ V, x' ∈ U} w(x, x').
    pub fn cut_weight(&self, from: &PointSet, to: &PointSet) -> f64 {
        let mut total = 0.0;
        for u in to.iter() {
            let mu = self.masses[u];
            for &v in &self.adjacency[u] {
                if from.contains(v) {
                    total += self.masses[v] * mu;
                }
            }
        }
        total
    }

    /// Weight each point of N(U) contributes to the cut into `U`.
    fn incident_weights(&self, set: &PointSet) -> Vec<(usize, f64)> {
        let mut acc = vec![0.0; self.len()];
        for u in set.iter() {
            let mu = self.masses[u];
            for &v in &self.adjacency[u] {
                acc[v] += self.masses[v] * mu;
            }
        }
        acc.into_iter()
            .enumerate()
            .filter(|&(_, w)| w > 0.0)
            .collect()
    }

    /// Ñ(U): neighbors of `U` reachable over an edge whose endpoints `f`
    /// labels equally.
    pub fn good_edge_neighborhood(&self, f: &LabelAssignment, set: &PointSet) -> PointSet {
        let mut out = PointSet::empty(self.len());
        for u in set.iter() {
            let fu = f.get(u);
            for &v in &self.adjacency[u] {
                if f.get(v) == fu {
                    out.insert(v);
                }
            }
        }
        out
    }

    /// P_{1-η}(U, A) with the default exactness threshold.
    pub fn robust_neighborhood_size(
        &self,
        pop: &Population,
        set: &PointSet,
        within: &PointSet,
        eta: f64,
    ) -> Result<RobustSizeBracket> {
        self.robust_neighborhood_size_with(pop, set, within, eta, EXACT_COVER_THRESHOLD)
    }

    /// P_{1-η}(U, A) = min { P(V | A) : w(V, U) ≥ (1-η) w(N(U), U) }.
    ///
    /// Candidates are the points with positive weight into `U`; candidates
    /// outside `A` cost nothing. Up to `threshold` priced candidates are
    /// solved exactly, beyond that a fractional/greedy bracket is returned.
    pub fn robust_neighborhood_size_with(
        &self,
        pop: &Population,
        set: &PointSet,
        within: &PointSet,
        eta: f64,
        threshold: usize,
    ) -> Result<RobustSizeBracket> {
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::Parameter {
                name: "eta",
                value: eta,
                range: "[0, 1)",
            });
        }
        let p_within = pop.mass(within);
        if p_within <= 0.0 {
            return Err(Error::UndefinedConditional);
        }
        // Ties broken by ascending point id.
        let mut candidates = self.incident_weights(set);
        candidates.sort_by(|a, b| pop.id(a.0).cmp(pop.id(b.0)));

        let exact_value = |witness: PointSet| -> RobustSizeBracket {
            let v = pop.mass(&witness.intersection(within)) / p_within;
            RobustSizeBracket {
                lower: v,
                upper: v,
                exact: true,
                witness,
            }
        };

        if eta == 0.0 {
            let all = PointSet::from_indices(self.len(), candidates.iter().map(|c| c.0));
            return Ok(exact_value(all));
        }

        let items: Vec<CoverItem> = candidates
            .iter()
            .map(|&(v, w)| CoverItem {
                cost: if within.contains(v) { self.masses[v] } else { 0.0 },
                weight: w,
            })
            .collect();
        let total: f64 = items.iter().map(|it| it.weight).sum();
        let target = (1.0 - eta) * total;
        let to_set = |chosen: &[usize]| {
            PointSet::from_indices(self.len(), chosen.iter().map(|&k| candidates[k].0))
        };

        let priced = items.iter().filter(|it| it.cost > 0.0).count();
        if priced <= threshold {
            let sol = cover::exact(&items, target).expect("target never exceeds total weight");
            return Ok(exact_value(to_set(&sol.chosen)));
        }
        let lower = cover::fractional_lower(&items, target) / p_within;
        let greedy = cover::greedy_upper(&items, target).expect("target never exceeds total weight");
        let witness = to_set(&greedy.chosen);
        let upper = pop.mass(&witness.intersection(within)) / p_within;
        Ok(RobustSizeBracket {
            lower: lower.min(upper),
            upper,
            exact: false,
            witness,
        })
    }
}

/// Reads the tab-separated edge list format.
pub fn load_edges<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                out.push((a.to_string(), b.to_string()))
            }
            _ => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: "expected two ids separated by a tab".into(),
                })
            }
        }
    }
    Ok(out)
}

pub fn write_edges<W: Write>(graph: &ExampleGraph, pop: &Population, mut out: W) -> Result<()> {
    for (a, b) in graph.edges() {
        writeln!(out, "{}\t{}", pop.id(a), pop.id(b))?;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod toy {
    use super::*;

    pub const T1_EDGES: &str = "# toy\na\tc\nb\tc\na\td\nb\te\n";

    pub fn t1_graph(pop: &Population) -> ExampleGraph {
        let edges = load_edges(T1_EDGES.as_bytes()).unwrap();
        ExampleGraph::build(pop, &edges).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::toy::t1_graph;
    use super::*;
    use crate::population::toy::t1;
    use approx::assert_abs_diff_eq;

    fn ids(pop: &Population, s: &PointSet) -> Vec<String> {
        s.iter().map(|i| pop.id(i).to_string()).collect()
    }

    #[test]
    fn toy_graph_structure() {
        let pop = t1();
        let g = t1_graph(&pop);
        let c = pop.index_of("c").unwrap();
        let a = pop.index_of("a").unwrap();
        assert_eq!(ids(&pop, &PointSet::from_indices(5, g.neighbors(c).iter().copied())), ["a", "b"]);
        assert_abs_diff_eq!(g.weight(a, c), 0.04, epsilon = 1e-15);
        assert_eq!(g.weight(a, c), g.weight(c, a));
        assert_eq!(g.num_edges(), 4);
    }

    #[test]
    fn empty_and_duplicate_edges() {
        let pop = t1();
        let none: Vec<(String, String)> = vec![];
        let g = ExampleGraph::build(&pop, &none).unwrap();
        assert!(g.neighborhood(&pop.all()).is_empty());
        let dup = [("a", "c"), ("c", "a"), ("a", "c")];
        let g = ExampleGraph::build(&pop, &dup).unwrap();
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn build_errors() {
        let pop = t1();
        assert!(matches!(ExampleGraph::build(&pop, &[("a", "a")]), Err(Error::SelfLoop(_))));
        assert!(matches!(ExampleGraph::build(&pop, &[("a", "zz")]), Err(Error::UnknownId(_))));
        assert!(load_edges("a b\n".as_bytes()).is_err());
    }

    #[test]
    fn neighborhoods() {
        let pop = t1();
        let g = t1_graph(&pop);
        let c = pop.set_from_ids(["c"]).unwrap();
        assert_eq!(ids(&pop, &g.neighborhood(&c)), ["a", "b"]);
        assert!(g.neighborhood(&pop.empty_set()).is_empty());
        let ab = pop.set_from_ids(["a", "b"]).unwrap();
        assert_eq!(ids(&pop, &g.neighborhood(&ab)), ["c", "d", "e"]);
    }

    #[test]
    fn cut_weights() {
        let pop = t1();
        let g = t1_graph(&pop);
        let a = pop.set_from_ids(["a"]).unwrap();
        let c = pop.set_from_ids(["c"]).unwrap();
        assert_abs_diff_eq!(g.cut_weight(&a, &c), 0.04, epsilon = 1e-15);
        assert_eq!(g.cut_weight(&pop.empty_set(), &c), 0.0);
        assert_abs_diff_eq!(g.cut_weight(&g.neighborhood(&c), &c), 0.08, epsilon = 1e-15);
    }

    #[test]
    fn robust_size_toy() {
        let pop = t1();
        let g = t1_graph(&pop);
        let c = pop.set_from_ids(["c"]).unwrap();
        let ab = pop.set_from_ids(["a", "b"]).unwrap();

        let r0 = g.robust_neighborhood_size(&pop, &c, &ab, 0.0).unwrap();
        assert!(r0.exact);
        assert_eq!((r0.lower, r0.upper), (1.0, 1.0));

        let r = g.robust_neighborhood_size(&pop, &c, &ab, 0.5).unwrap();
        assert!(r.exact);
        assert_abs_diff_eq!(r.upper, 0.5, epsilon = 1e-12);
        assert_eq!(ids(&pop, &r.witness), ["a"]);

        let d = pop.set_from_ids(["d"]).unwrap();
        let isolated = ExampleGraph::build(&pop, &[("a", "b")]).unwrap();
        let r = isolated.robust_neighborhood_size(&pop, &d, &ab, 0.3).unwrap();
        assert_eq!(r.upper, 0.0);
        assert!(r.witness.is_empty());
    }

    #[test]
    fn robust_size_errors() {
        let pop = t1();
        let g = t1_graph(&pop);
        let c = pop.set_from_ids(["c"]).unwrap();
        assert!(g.robust_neighborhood_size(&pop, &c, &pop.empty_set(), 0.1).is_err());
        assert!(g.robust_neighborhood_size(&pop, &c, &pop.all(), 1.0).is_err());
        assert!(g.robust_neighborhood_size(&pop, &c, &pop.all(), -0.1).is_err());
    }

    #[test]
    fn bracket_mode_when_over_threshold() {
        let pop = t1();
        let g = t1_graph(&pop);
        let ab = pop.set_from_ids(["a", "b"]).unwrap();
        let all = pop.all();
        let exact = g.robust_neighborhood_size(&pop, &ab, &all, 0.4).unwrap();
        let br = g.robust_neighborhood_size_with(&pop, &ab, &all, 0.4, 0).unwrap();
        assert!(!br.exact);
        assert!(br.lower <= exact.upper + 1e-12 && exact.upper <= br.upper + 1e-12);
    }

    #[test]
    fn good_edges() {
        let pop = t1();
        let g = t1_graph(&pop);
        let c = pop.set_from_ids(["c"]).unwrap();
        let zero = LabelAssignment::constant(&pop, 0);
        assert_eq!(g.good_edge_neighborhood(&zero, &c), g.neighborhood(&c));
        // f(c)=1, everything else 0: both edges at c are bad.
        let f = LabelAssignment::from_vec(vec![0, 0, 1, 0, 0]);
        assert!(g.good_edge_neighborhood(&f, &c).is_empty());
        let gold = LabelAssignment::gold(&pop);
        assert_eq!(ids(&pop, &g.good_edge_neighborhood(&gold, &c)), ["a", "b"]);
    }

    #[test]
    fn edge_file_round_trip() {
        let pop = t1();
        let g = t1_graph(&pop);
        let mut buf = Vec::new();
        write_edges(&g, &pop, &mut buf).unwrap();
        let again = ExampleGraph::build(&pop, &load_edges(buf.as_slice()).unwrap()).unwrap();
        assert_eq!(again.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }
}
