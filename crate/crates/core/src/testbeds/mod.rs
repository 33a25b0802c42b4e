//! Synthetic populations, enumerable hypothesis classes, ERM, and the
//! brute-force soundness harness.

mod cotraining;
mod hypotheses;
mod planted;
mod suite;
mod verify;

pub use cotraining::{
    cotraining_population, random_cotraining_spec, symmetric_two_view_spec, CoTrainingInstance, CoTrainingSpec,
};
pub use hypotheses::{
    enumerate_hypotheses, erm_population, erm_train, HypothesisClassSpec, ENUMERATION_CAP, MAX_DICHOTOMY_POINTS,
};
pub use planted::{planted_population, PlantedConfig, PlantedInstance};
pub use suite::{run_suite, SuiteConfig};
pub use verify::{verify_theorem, VerificationReport, VerifyConfig, Violation};
