use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("population is empty")]
    EmptyPopulation,

    #[error("duplicate point id `{0}`")]
    DuplicateId(String),

    #[error("unknown point id `{0}`")]
    UnknownId(String),

    #[error("point `{id}`: label {label} out of range for {num_classes} classes")]
    LabelOutOfRange {
        id: String,
        label: usize,
        num_classes: usize,
    },

    #[error("masses sum to {0}, outside [1-1e-6, 1+1e-6]")]
    MassSum(f64),

    #[error("point `{id}`: invalid mass {mass}")]
    InvalidMass { id: String, mass: f64 },

    #[error("masses must be given for every point or for none")]
    MixedMasses,

    #[error("conditioning set has zero probability")]
    UndefinedConditional,

    #[error("point `{0}` abstains but was compared against weak labels")]
    AbstainInComparison(String),

    #[error("label assignment covers {got} points, population has {expected}")]
    AssignmentSize { expected: usize, got: usize },

    #[error("prediction for `{0}` missing")]
    MissingPrediction(String),

    #[error("self-loop on `{0}`")]
    SelfLoop(String),

    #[error("point `{0}` has no neighbor mass; robustness undefined")]
    IsolatedPoint(String),

    #[error("parameter `{name}` = {value} outside {range}")]
    Parameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("zero empirical denominator with nonzero numerator for this set")]
    ZeroDenominator,

    #[error("learner failed on draw {draw}: {message}")]
    Learner { draw: usize, message: String },

    #[error("{0}")]
    Unsupported(String),

    #[error("enumeration of {requested} hypotheses exceeds the cap of {cap}")]
    EnumerationBound { requested: f64, cap: usize },

    #[error("infeasible generator targets: {0}")]
    Infeasible(String),

    #[error("oracle target `{target}` is not a neighbor of `{source_id}`")]
    OracleNotNeighbor { source_id: String, target: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    range: &'static str,
) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::Parameter { name, value, range })
    }
}
