//! The randomized soundness suite: many small planted instances, all
//! dichotomies as the hypothesis class, one report per theorem.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::TheoremId;
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::testbeds::{
    enumerate_hypotheses, planted_population, verify_theorem, HypothesisClassSpec, PlantedConfig,
    VerificationReport, VerifyConfig, MAX_DICHOTOMY_POINTS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub instances: usize,
    pub seed: u64,
    /// Instance sizes are drawn from 4..=max_points.
    pub max_points: usize,
}

impl SuiteConfig {
    /// The planted configuration for instance `index`.
    pub fn instance(&self, index: usize) -> PlantedConfig {
        let mut rng = substream(self.seed, "suite-instance", index as u64);
        let n = rng.gen_range(4..=self.max_points.max(4));
        let alpha = [0.1, 0.2, 0.3, 0.4][rng.gen_range(0..4)];
        PlantedConfig {
            n_points: n,
            num_classes: 2,
            alpha_targets: vec![alpha, [0.1, 0.25, 0.4][rng.gen_range(0..3)]],
            coverage_target: rng.gen_range(0.4..0.9),
            edge_density: rng.gen_range(0.2..0.9),
            cross_class: rng.gen_bool(0.3),
            jitter_mass: rng.gen_bool(0.5),
            seed: rng.gen(),
        }
    }
}

/// Runs `theorem` on every suite instance and merges the reports.
pub fn run_suite(theorem: TheoremId, suite: &SuiteConfig, verify: &VerifyConfig) -> Result<VerificationReport> {
    if !(4..=MAX_DICHOTOMY_POINTS).contains(&suite.max_points) {
        return Err(Error::EnumerationBound {
            requested: 2f64.powi(suite.max_points as i32),
            cap: 1 << MAX_DICHOTOMY_POINTS,
        });
    }
    let mut total = VerificationReport::new(theorem);
    for i in 0..suite.instances {
        let inst = planted_population(&suite.instance(i))?;
        let hs = enumerate_hypotheses(&HypothesisClassSpec::AllDichotomies, &inst.population)?;
        total.merge(verify_theorem(&inst.population, &inst.graph, &hs, theorem, verify)?);
    }
    Ok(total)
}
