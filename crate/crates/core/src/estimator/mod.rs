//! The estimate under study: `|| w(x) sigma(D) e^{i t a(D)} phi ||_{L^2(t,x)}
//! <= C ||phi||`, realized on the discrete torus.
//!
//! Submodules: configuration specs ([`WeightSpec`], [`SmootherSpec`],
//! [`EstimateSpec`]), the spacetime norm and per-field ratio, operator-norm
//! constant estimation (random ensembles and power iteration), refinement
//! and concentration studies, and the time-dependent-coefficient variant.

mod constant;
mod norms;
mod spec;
mod studies;
mod timedep;

pub use constant::{estimate_constant, ConstantEstimate, ConstantMethod, EnsembleParams};
pub use norms::{smoothing_ratio, spacetime_norm, window_norm};
pub use spec::{EstimateSpec, SmootherSpec, WeightSpec};
pub use studies::{
    concentration_study, log_slope, max_rel_deviation_from_last, refinement_study, CenterSpec,
    ConcentrationRow, RefinementRow,
};
pub use timedep::{timedep_norm, TimeCoefficient};
