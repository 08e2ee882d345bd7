use thiserror::Error;

/// Crate-wide error type. Variants carry enough context to name the offending
/// grid point, frequency or parameter in diagnostics.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("grid: {0}")]
    Grid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("field is in the wrong space: expected {expected}, got {got}")]
    Space { expected: &'static str, got: &'static str },

    #[error("symbol '{name}' is not real and finite at xi = {point:?}: value = {value}")]
    SymbolValue { name: String, point: Vec<f64>, value: f64 },

    #[error("multiplier is not finite at xi = {point:?}")]
    Multiplier { point: Vec<f64> },

    #[error("band split: {0}")]
    Band(String),

    #[error("empty frequency support: {0}")]
    EmptySupport(String),

    #[error("field has zero norm")]
    ZeroNorm,

    #[error("time coefficient: {0}")]
    TimeCoefficient(String),

    #[error("monotonicity violation: {0}")]
    Monotonicity(String),

    #[error("canonical transform: {0}")]
    Canonical(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
