//! Two-view populations with views conditionally independent given the class.
//!
//! A point is a triple (class, v1, v2) with mass prior[y]·p1[y][v1]·p2[y][v2].
//! The teacher reads v1 only and neighbors are all points sharing v2, so any
//! hypothesis that depends on v2 alone is perfectly robust and every
//! view-2-measurable set expands with coefficient exactly one.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ExampleGraph;
use crate::population::{Point, Population, WeakLabel};
use crate::rng::substream;

const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoTrainingSpec {
    pub priors: Vec<f64>,
    /// `view1[y][v]` = P(x1 = v | y).
    pub view1: Vec<Vec<f64>>,
    /// `view2[y][v]` = P(x2 = v | y).
    pub view2: Vec<Vec<f64>>,
    /// Teacher output per view-1 value; `None` abstains.
    pub teacher: Vec<Option<usize>>,
}

impl CoTrainingSpec {
    pub fn num_classes(&self) -> usize {
        self.priors.len()
    }

    pub fn view1_size(&self) -> usize {
        self.teacher.len()
    }

    pub fn view2_size(&self) -> usize {
        self.view2.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.num_classes();
        if k < 2 {
            return Err(Error::Unsupported("co-training spec needs at least two classes".into()));
        }
        check_distribution("priors", &self.priors)?;
        if self.view1.len() != k || self.view2.len() != k {
            return Err(Error::Unsupported("one view distribution per class required".into()));
        }
        let (n1, n2) = (self.view1_size(), self.view2_size());
        if n1 == 0 || n2 == 0 {
            return Err(Error::Unsupported("views must be nonempty".into()));
        }
        for (y, (d1, d2)) in self.view1.iter().zip(&self.view2).enumerate() {
            if d1.len() != n1 || d2.len() != n2 {
                return Err(Error::Unsupported(format!("class {y}: view distribution has the wrong size")));
            }
            check_distribution("view1", d1)?;
            check_distribution("view2", d2)?;
        }
        if let Some(&bad) = self.teacher.iter().flatten().find(|&&t| t >= k) {
            return Err(Error::Unsupported(format!("teacher emits class {bad} of {k}")));
        }
        Ok(())
    }
}

fn check_distribution(name: &str, d: &[f64]) -> Result<()> {
    if d.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Unsupported(format!("{name}: entries must be nonnegative")));
    }
    let total: f64 = d.iter().sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::Unsupported(format!("{name}: sums to {total}, not 1")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CoTrainingInstance {
    pub population: Population,
    pub graph: ExampleGraph,
    /// (class, v1, v2) per point index.
    pub coords: Vec<(usize, usize, usize)>,
}

impl CoTrainingInstance {
    /// View-2 value per point, for view-2-measurable hypothesis classes.
    pub fn view2_of(&self) -> Vec<usize> {
        self.coords.iter().map(|c| c.2).collect()
    }

    pub fn edge_ids(&self) -> Vec<(String, String)> {
        let pop = &self.population;
        self.graph
            .edges()
            .map(|(a, b)| (pop.id(a).to_string(), pop.id(b).to_string()))
            .collect()
    }
}

/// Builds the product population. Zero-mass triples are left out.
pub fn cotraining_population(spec: &CoTrainingSpec) -> Result<CoTrainingInstance> {
    spec.validate()?;
    let mut points = Vec::new();
    let mut coords = Vec::new();
    for (y, prior) in spec.priors.iter().enumerate() {
        for (v1, p1) in spec.view1[y].iter().enumerate() {
            for (v2, p2) in spec.view2[y].iter().enumerate() {
                let mass = prior * p1 * p2;
                if mass <= 0.0 {
                    continue;
                }
                points.push(Point {
                    id: format!("y{y}-a{v1}-b{v2}"),
                    mass,
                    gold: y,
                    weak: WeakLabel::from(spec.teacher[v1]),
                });
                coords.push((y, v1, v2));
            }
        }
    }
    let population = Population::from_weights(points, spec.num_classes())?;
    let mut edges = Vec::new();
    for i in 0..coords.len() {
        for j in i + 1..coords.len() {
            if coords[i].2 == coords[j].2 {
                edges.push((i, j));
            }
        }
    }
    let graph = ExampleGraph::from_index_edges(&population, &edges)?;
    Ok(CoTrainingInstance {
        population,
        graph,
        coords,
    })
}

fn random_distribution<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Random binary spec with full-support views. View-1 value 0 abstains and
/// values 1 and 2 are labeled 0 and 1, so every class has good, bad and
/// uncovered mass; the remaining values get random teacher outputs.
pub fn random_cotraining_spec(seed: u64, view1_size: usize, view2_size: usize) -> Result<CoTrainingSpec> {
    if view1_size < 3 || view2_size == 0 {
        return Err(Error::Unsupported(
            "random co-training specs need view1_size >= 3 and view2_size >= 1".into(),
        ));
    }
    let mut rng = substream(seed, "cotraining-spec", 0);
    let prior0 = rng.gen_range(0.3..0.7);
    let priors = vec![prior0, 1.0 - prior0];
    let view1 = (0..2).map(|_| random_distribution(&mut rng, view1_size)).collect();
    let view2 = (0..2).map(|_| random_distribution(&mut rng, view2_size)).collect();
    let teacher = (0..view1_size)
        .map(|v| match v {
            0 => None,
            1 => Some(0),
            2 => Some(1),
            _ => match rng.gen_range(0..3) {
                0 => None,
                t => Some(t - 1),
            },
        })
        .collect();
    let spec = CoTrainingSpec {
        priors,
        view1,
        view2,
        teacher,
    };
    spec.validate()?;
    Ok(spec)
}

/// Two binary views with symmetric teacher noise `alpha`; view 2 reveals the
/// class and the teacher copies view 1.
pub fn symmetric_two_view_spec(alpha: f64) -> Result<CoTrainingSpec> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Parameter {
            name: "alpha",
            value: alpha,
            range: "(0, 1/2)",
        });
    }
    Ok(CoTrainingSpec {
        priors: vec![0.5, 0.5],
        view1: vec![vec![1.0 - alpha, alpha], vec![alpha, 1.0 - alpha]],
        view2: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        teacher: vec![Some(0), Some(1)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::partition;

    #[test]
    fn product_masses_and_edges() {
        let spec = random_cotraining_spec(3, 4, 3).unwrap();
        let inst = cotraining_population(&spec).unwrap();
        let pop = &inst.population;
        assert_eq!(pop.len(), 2 * 4 * 3);
        for (i, &(y, v1, v2)) in inst.coords.iter().enumerate() {
            let expect = spec.priors[y] * spec.view1[y][v1] * spec.view2[y][v2];
            assert!((pop.mass_of(i) - expect).abs() < 1e-12);
            assert_eq!(pop.weak(i), WeakLabel::from(spec.teacher[v1]));
        }
        for (a, b) in inst.graph.edges() {
            assert_eq!(inst.coords[a].2, inst.coords[b].2);
        }
        // Each view-2 value links 8 points: C(8, 2) = 28 edges, 3 values.
        assert_eq!(inst.graph.num_edges(), 3 * 28);
        let part = partition(pop);
        for i in 0..2 {
            let c = part.class(i);
            assert!(pop.mass(&c.good) > 0.0 && pop.mass(&c.bad) > 0.0 && pop.mass(&c.uncovered) > 0.0);
        }
    }

    #[test]
    fn rejects_unnormalized() {
        let mut spec = symmetric_two_view_spec(0.2).unwrap();
        spec.view1[0][0] = 0.5;
        assert!(cotraining_population(&spec).is_err());
        let mut spec = symmetric_two_view_spec(0.2).unwrap();
        spec.priors = vec![0.7, 0.7];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn symmetric_spec_prunes_zero_mass() {
        let inst = cotraining_population(&symmetric_two_view_spec(0.1).unwrap()).unwrap();
        assert_eq!(inst.population.len(), 4);
        let part = partition(&inst.population);
        for i in 0..2 {
            assert!((part.class(i).alpha.unwrap() - 0.1).abs() < 1e-12);
        }
    }
}
