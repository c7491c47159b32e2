use thiserror::Error;

/// Errors raised by geometric evaluation, model construction and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate metric: smallest eigenvalue {min_eigenvalue:e} is below the cutoff")]
    DegenerateMetric { min_eigenvalue: f64 },

    #[error("insufficient jet order: need {required}, have {available}")]
    InsufficientJetOrder { required: usize, available: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("critical point of the potential: |grad f| = {grad_norm:e}")]
    GradientCritical { grad_norm: f64 },

    #[error("mean curvature {mean_curvature:e} is below the cutoff")]
    MeanCurvatureDegenerate { mean_curvature: f64 },

    #[error("umbilical point: principal curvature gap {gap:e} is below the cutoff")]
    EigenvectorDegenerate { gap: f64 },

    #[error("lambda |grad f|^2 - 1 = {value:e} is too close to zero")]
    ThetaSingular { value: f64 },

    #[error("point lies outside the model domain: {0}")]
    OutsideDomain(String),

    #[error("chart is singular at this point: {0}")]
    ChartSingular(String),

    #[error("integration failed at r = {last_valid_r}: {reason}")]
    IntegrationFailure { last_valid_r: f64, reason: String },

    #[error("level-set re-projection failed: residual {residual:e}")]
    ProjectionFailed { residual: f64 },

    #[error("operation not supported for model {model}: {what}")]
    Unsupported { model: String, what: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
