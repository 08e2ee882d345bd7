//! Central numerical tolerances.
//!
//! Every tolerance that more than one module relies on lives here, with the
//! reasoning pinned next to the value. Tests assert against these constants
//! rather than re-deriving their own, so loosening one is a visible, reviewed
//! change.

/// Relative error allowed on round trips and Parseval checks of the unitary
/// DFT. An FFT of length `2^24` accumulates a few hundred ulps; `1e-12`
/// leaves two orders of margin over that while still catching any wrong
/// normalisation outright.
pub const UNITARY_REL: f64 = 1e-12;

/// Relative agreement required between analytic gradients and the
/// finite-difference fallback at generic points. Fourth-order central
/// differences with Richardson extrapolation deliver ~1e-10 on smooth
/// symbols; `1e-6` keeps the check meaningful without flaking near large
/// high-order derivatives.
pub const GRAD_CONSISTENCY_REL: f64 = 1e-6;

/// Absolute symmetry defect tolerated in Hessians. Mixed central differences
/// are symmetric by construction, so anything above roundoff indicates a
/// broken evaluator.
pub const HESSIAN_SYMMETRY: f64 = 1e-10;

/// A sphere-restricted minimum of `|grad a_m|` below this value counts as a
/// vanishing gradient (the symbol fails strict dispersiveness).
pub const SPHERE_MIN_GRAD: f64 = 1e-8;

/// Sampled lower constant `c` in `|grad a| >= c <xi>^(m-1)` below this
/// value counts as a failed lower bound.
pub const LADDER_MIN_C: f64 = 1e-8;

/// Newton iterations on `grad a = 0` accept a root once the gradient norm
/// drops below this.
pub const NEWTON_GRAD: f64 = 1e-12;

/// Distinct critical points closer than this are merged.
pub const CRITICAL_DEDUP: f64 = 1e-6;

/// Root coordinates below this magnitude (after polish) are reported as
/// exactly zero, so curvature is read at the true point rather than at a
/// residual offset.
pub const CRITICAL_SNAP: f64 = 1e-8;

/// Companion-matrix eigenvalues with imaginary part below this are accepted
/// as real roots of derivative slices.
pub const ROOT_IMAG: f64 = 1e-9;

/// Real roots of a derivative slice closer than this are merged.
pub const ROOT_DEDUP: f64 = 1e-8;

/// Relative cutoff (times the largest singular value) below which Hessian
/// eigenvalues count as zero for rank and signature decisions.
pub const EIGEN_RANK_REL: f64 = 1e-8;

/// Relative change of the Rayleigh quotient between power iterations at
/// which the iteration is declared converged.
pub const RAYLEIGH_REL: f64 = 1e-8;

/// Power iteration cap.
pub const POWER_MAX_ITER: usize = 200;

/// Multiplicative slack on exact pointwise inequalities (symbol-root
/// domination, combiner bounds): covers the last-ulp disagreements of two
/// evaluation orders of the same quantity.
pub const POINTWISE_SLACK: f64 = 1e-9;

/// A canonical-reduction quotient above this is flagged as effectively
/// unbounded (the reference multiplier nearly vanishes inside the cutoff).
pub const REDUCTION_FLAG: f64 = 1e6;
