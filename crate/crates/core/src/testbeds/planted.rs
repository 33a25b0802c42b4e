//! Random populations with planted coverage and pseudolabel noise.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ExampleGraph;
use crate::population::{Point, Population, WeakLabel};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub n_points: usize,
    pub num_classes: usize,
    /// Target α_i per class, each in [0, 1/2).
    pub alpha_targets: Vec<f64>,
    /// Target fraction of each class that the teacher labels.
    pub coverage_target: f64,
    /// Probability that each candidate pair is an edge.
    pub edge_density: f64,
    /// Allow edges between points of different classes.
    #[serde(default)]
    pub cross_class: bool,
    /// Draw point masses from [0.5, 1.5) before normalizing instead of
    /// using uniform masses.
    #[serde(default)]
    pub jitter_mass: bool,
    pub seed: u64,
}

impl PlantedConfig {
    pub fn new(n_points: usize, alpha: f64, coverage: f64, edge_density: f64, seed: u64) -> Self {
        PlantedConfig {
            n_points,
            num_classes: 2,
            alpha_targets: vec![alpha, alpha],
            coverage_target: coverage,
            edge_density,
            cross_class: false,
            jitter_mass: false,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::Parameter {
                name: "num_classes",
                value: self.num_classes as f64,
                range: ">= 2",
            });
        }
        if self.n_points < self.num_classes {
            return Err(Error::Infeasible(format!(
                "{} points cannot populate {} classes",
                self.n_points, self.num_classes
            )));
        }
        if self.alpha_targets.len() != self.num_classes {
            return Err(Error::Infeasible(format!(
                "{} alpha targets for {} classes",
                self.alpha_targets.len(),
                self.num_classes
            )));
        }
        for &a in &self.alpha_targets {
            if !(0.0..0.5).contains(&a) {
                return Err(Error::Parameter {
                    name: "alpha_target",
                    value: a,
                    range: "[0, 1/2)",
                });
            }
        }
        let unit: [(&'static str, f64); 2] = [
            ("coverage_target", self.coverage_target),
            ("edge_density", self.edge_density),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Parameter {
                    name,
                    value: v,
                    range: "[0, 1]",
                });
            }
        }
        if self.coverage_target == 0.0 && self.alpha_targets.iter().any(|&a| a > 0.0) {
            return Err(Error::Infeasible("nonzero alpha target with zero coverage".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub population: Population,
    pub graph: ExampleGraph,
    pub edges: Vec<(usize, usize)>,
}

/// Generates a planted instance. Every random choice comes from a named
/// substream of `config.seed`, so the output is a pure function of the config.
pub fn planted_population(config: &PlantedConfig) -> Result<PlantedInstance> {
    config.validate()?;
    let n = config.n_points;
    let k = config.num_classes;

    // Gold labels: one guaranteed point per class, the rest uniform.
    let mut rng = substream(config.seed, "planted-labels", 0);
    let mut gold: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.gen_range(0..k) }).collect();
    gold.shuffle(&mut rng);

    let mut rng = substream(config.seed, "planted-mass", 0);
    let weights: Vec<f64> = (0..n)
        .map(|_| if config.jitter_mass { rng.gen_range(0.5..1.5) } else { 1.0 })
        .collect();

    let mut weak = vec![WeakLabel::Abstain; n];
    let mut rng = substream(config.seed, "planted-weak", 0);
    for class in 0..k {
        let mut members: Vec<usize> = (0..n).filter(|&x| gold[x] == class).collect();
        members.shuffle(&mut rng);
        let n_cov = (config.coverage_target * members.len() as f64).round() as usize;
        let covered = &members[..n_cov];
        let cov_mass: f64 = covered.iter().map(|&x| weights[x]).sum();
        let target = config.alpha_targets[class];
        // Add bad points in shuffled order while that moves α toward the target.
        let mut bad_mass = 0.0;
        for &x in covered {
            let before = (bad_mass / cov_mass - target).abs();
            let after = ((bad_mass + weights[x]) / cov_mass - target).abs();
            if after < before {
                bad_mass += weights[x];
                let mut wrong = rng.gen_range(0..k - 1);
                if wrong >= class {
                    wrong += 1;
                }
                weak[x] = WeakLabel::Class(wrong);
            } else {
                weak[x] = WeakLabel::Class(class);
            }
        }
    }

    let points = (0..n)
        .map(|x| Point {
            id: format!("p{x:02}"),
            mass: weights[x],
            gold: gold[x],
            weak: weak[x],
        })
        .collect();
    let population = Population::from_weights(points, k)?;

    let mut rng = substream(config.seed, "planted-edges", 0);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if !config.cross_class && gold[a] != gold[b] {
                continue;
            }
            if rng.gen_bool(config.edge_density) {
                edges.push((a, b));
            }
        }
    }
    let graph = ExampleGraph::from_index_edges(&population, &edges)?;
    Ok(PlantedInstance {
        population,
        graph,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::partition;

    #[test]
    fn deterministic_under_seed() {
        let cfg = PlantedConfig {
            jitter_mass: true,
            ..PlantedConfig::new(14, 0.2, 0.7, 0.4, 5)
        };
        let a = planted_population(&cfg).unwrap();
        let b = planted_population(&cfg).unwrap();
        assert_eq!(a.edges, b.edges);
        assert_eq!(a.population.points(), b.population.points());
        let c = planted_population(&PlantedConfig { seed: 6, ..cfg }).unwrap();
        assert_ne!(a.population.points(), c.population.points());
    }

    #[test]
    fn zero_alpha_means_clean_pseudolabels() {
        let inst = planted_population(&PlantedConfig::new(20, 0.0, 0.6, 0.3, 1)).unwrap();
        let part = partition(&inst.population);
        for c in &part.classes {
            assert!(c.bad.is_empty());
        }
    }

    #[test]
    fn realized_alpha_near_target() {
        let cfg = PlantedConfig::new(200, 0.2, 0.8, 0.0, 2);
        let part = partition(&planted_population(&cfg).unwrap().population);
        for c in &part.classes {
            assert!((c.alpha.unwrap() - 0.2).abs() <= 0.05);
        }
    }

    #[test]
    fn within_class_edges_by_default() {
        let inst = planted_population(&PlantedConfig::new(16, 0.2, 0.7, 1.0, 3)).unwrap();
        for &(a, b) in &inst.edges {
            assert_eq!(inst.population.gold(a), inst.population.gold(b));
        }
    }

    #[test]
    fn infeasible_targets() {
        assert!(matches!(
            planted_population(&PlantedConfig::new(10, 0.2, 0.0, 0.3, 0)),
            Err(Error::Infeasible(_))
        ));
        assert!(planted_population(&PlantedConfig::new(10, 0.6, 0.5, 0.3, 0)).is_err());
        assert!(planted_population(&PlantedConfig::new(1, 0.1, 0.5, 0.3, 0)).is_err());
    }
}
