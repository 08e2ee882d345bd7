//! Pseudospectral laboratory for weighted space-time smoothing estimates of
//! dispersive propagators `i du/dt + a(D) u = 0` on periodic boxes.
//!
//! The crate is organised around six layers:
//!
//! * [`grid`] / [`field`] / [`transform`]: periodic grids, complex fields,
//!   unitary FFT transforms, Fourier multipliers and the exact propagator
//!   `exp(i t a(D))`.
//! * [`symbol`]: real symbols `a(xi)` (polynomial, radial, closed-form,
//!   composed), derivatives, critical points and dispersiveness
//!   classification.
//! * [`estimator`]: weighted space-time norms, smoothing ratios, operator
//!   norm estimation, refinement / concentration studies and time-dependent
//!   coefficients.
//! * [`comparison`]: exact model identities, comparison-principle checks and
//!   monotone frequency decompositions of polynomial symbols.
//! * [`canonical`]: canonical transforms `I[u] = F^-1 [ gamma(xi) (F u)(psi(xi)) ]`,
//!   boundedness probes and equivalence checks.

pub mod canonical;
pub mod comparison;
pub mod error;
pub mod estimator;
pub mod field;
pub mod grid;
pub mod symbol;
pub mod tol;
pub mod transform;

pub use error::{LabError, Result};
pub use field::{ComplexField, Space};
pub use grid::GridSpec;

/// Stable hash mixing a master seed with a stream index.
///
/// Derives per-member RNG seeds for ensembles. Uses the splitmix64 finaliser
/// twice so the mapping is fixed by this source alone (no dependence on the
/// standard library hasher, which is allowed to change between releases).
pub fn stable_seed(master: u64, index: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(splitmix(master) ^ splitmix(index.wrapping_add(0x51_7c_c1_b7_27_22_0a_95)))
}
