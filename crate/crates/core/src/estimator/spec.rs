//! Weight, smoother and window specifications.
//!
//! A spacetime estimate is configured by three choices: a spatial weight
//! `w(x)`, a frequency-side smoother `sigma(xi)` and a time window. The
//! specs here evaluate to plain value tables on the grid so the norm and
//! operator-norm code never re-derives conventions.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::grid::GridSpec;
use crate::symbol::Symbol;

/// Spatial weight `w(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    /// `<x>^(-s) = (1+|x|^2)^(-s/2)`: bounded, radially decreasing.
    Bracket { s: f64 },
    /// `|x|^delta`: homogeneous of degree `delta`. Singular at the origin
    /// for `delta < 0`; the origin cell carries the cell average, which is
    /// finite exactly when `delta > -n`.
    Homogeneous { delta: f64 },
}

impl WeightSpec {
    pub fn bracket(s: f64) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(LabError::Param(format!(
                "bracket weight needs finite s >= 0, got {s}"
            )));
        }
        Ok(WeightSpec::Bracket { s })
    }

    pub fn homogeneous(delta: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(LabError::Param(format!(
                "homogeneous weight needs finite delta, got {delta}"
            )));
        }
        Ok(WeightSpec::Homogeneous { delta })
    }

    /// Whether the decay is strong enough for the global-in-time weighted
    /// estimate. Known threshold for bracket weights is `s > 1/2`; no
    /// threshold is recorded for homogeneous weights.
    pub fn global_in_time(&self) -> Option<bool> {
        match self {
            WeightSpec::Bracket { s } => Some(*s > 0.5),
            WeightSpec::Homogeneous { .. } => None,
        }
    }

    /// Smoothing order associated with a homogeneous weight `|x|^delta`
    /// against a symbol of order `m`: `alpha = delta + m/2`.
    pub fn associated_smoothing_order(&self, m: f64) -> Option<f64> {
        match self {
            WeightSpec::Bracket { .. } => None,
            WeightSpec::Homogeneous { delta } => Some(delta + m / 2.0),
        }
    }

    /// Weight values on the physical lattice.
    pub fn values(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        match self {
            WeightSpec::Bracket { s } => {
                Ok(grid.eval_on_x_lattice(|x| {
                    let r2: f64 = x.iter().map(|c| c * c).sum();
                    (1.0 + r2).powf(-s / 2.0)
                }))
            }
            WeightSpec::Homogeneous { delta } => {
                let n = grid.dim() as f64;
                if *delta <= -n {
                    return Err(LabError::Param(format!(
                        "|x|^{delta} is not cell-averageable in dimension {n}: need delta > -n"
                    )));
                }
                let halves: Vec<f64> =
                    (0..grid.dim()).map(|ax| grid.spacing(ax) / 2.0).collect();
                let origin = if *delta < 0.0 {
                    origin_cell_average(*delta, &halves)
                } else if *delta == 0.0 {
                    1.0
                } else {
                    0.0
                };
                Ok(grid.eval_on_x_lattice(|x| {
                    let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                    if r == 0.0 { origin } else { r.powf(*delta) }
                }))
            }
        }
    }
}

/// Average of `|x|^delta` over the origin cell `prod [-h_j/2, h_j/2]`,
/// finite for `delta > -n`.
///
/// The integrand is even in every coordinate, so the average equals the
/// average over the positive orthant box `B = prod [0, b_j]`. Splitting `B`
/// dyadically towards the corner at the origin, homogeneity gives the exact
/// scaling `int_{2^-(d+1) B .. 2^-d B} = 2^(-d(n+delta)) * shell_0`, so the
/// whole integral is `shell_0 / (1 - 2^-(n+delta))` with only the outermost
/// shell needing quadrature.
fn origin_cell_average(delta: f64, halves: &[f64]) -> f64 {
    let n = halves.len();
    let (nodes, weights) = gauss_legendre_16();
    let mut shell = 0.0;
    // The outermost shell is the orthant box minus its half-scaled copy:
    // 2^n - 1 sub-boxes indexed by which axes sit in the outer half.
    for mask in 1..(1usize << n) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for (j, &b) in halves.iter().enumerate() {
            if mask >> j & 1 == 1 {
                lo[j] = b / 2.0;
                hi[j] = b;
            } else {
                lo[j] = 0.0;
                hi[j] = b / 2.0;
            }
        }
        shell += tensor_quad(delta, &lo[..n], &hi[..n], &nodes, &weights);
    }
    let total = shell / (1.0 - 2f64.powf(-(n as f64 + delta)));
    let volume: f64 = halves.iter().product();
    total / volume
}

/// Tensor-product Gauss-Legendre integral of `|x|^delta` over a box that
/// excludes the origin.
fn tensor_quad(delta: f64, lo: &[f64], hi: &[f64], nodes: &[f64], weights: &[f64]) -> f64 {
    let n = lo.len();
    let q = nodes.len();
    let mut total = 0.0;
    let count = q.pow(n as u32);
    for flat in 0..count {
        let mut idx = flat;
        let mut r2 = 0.0;
        let mut w = 1.0;
        for j in 0..n {
            let k = idx % q;
            idx /= q;
            let half = (hi[j] - lo[j]) / 2.0;
            let x = lo[j] + half * (1.0 + nodes[k]);
            r2 += x * x;
            w *= weights[k] * half;
        }
        total += w * r2.sqrt().powf(delta);
    }
    total
}

/// 16-point Gauss-Legendre rule on [-1, 1], nodes by Newton iteration on the
/// Legendre recurrence (machine-precision, deterministic).
fn gauss_legendre_16() -> (Vec<f64>, Vec<f64>) {
    let n = 16usize;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Frequency-side smoother `sigma(xi)`.
///
/// Zero-base convention shared by all power-type kinds: `0^e` is `0` for
/// `e > 0`, `1` for `e = 0`, and `0` for `e < 0` (a negative power of a
/// vanishing multiplier drops the mode rather than blowing up; the
/// continuum estimate excludes that frequency anyway).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmootherSpec {
    /// `|xi|^eta`.
    Classical { eta: f64 },
    /// `<xi>^eta`.
    Bracket { eta: f64 },
    /// `|grad a(xi)|^eta`: vanishes exactly where dispersion fails.
    InvariantPower { eta: f64 },
    /// `<grad a(xi)>^eta = (1 + |grad a|^2)^(eta/2)`.
    InvariantBracket { eta: f64 },
    /// `<xi>^(-s) |a(xi)|^(1/2)`: trades weight decay for the square root
    /// of the symbol itself.
    SymbolRoot { s: f64 },
}

impl SmootherSpec {
    pub fn classical(eta: f64) -> Result<Self> {
        check_exponent(eta)?;
        Ok(SmootherSpec::Classical { eta })
    }

    pub fn bracket(eta: f64) -> Result<Self> {
        check_exponent(eta)?;
        Ok(SmootherSpec::Bracket { eta })
    }

    pub fn invariant_power(eta: f64) -> Result<Self> {
        check_exponent(eta)?;
        Ok(SmootherSpec::InvariantPower { eta })
    }

    pub fn invariant_bracket(eta: f64) -> Result<Self> {
        check_exponent(eta)?;
        Ok(SmootherSpec::InvariantBracket { eta })
    }

    pub fn symbol_root(s: f64) -> Result<Self> {
        check_exponent(s)?;
        Ok(SmootherSpec::SymbolRoot { s })
    }

    /// The invariant smoother of the estimate under study, `|grad a|^(1/2)`.
    pub fn invariant() -> Self {
        SmootherSpec::InvariantPower { eta: 0.5 }
    }

    /// The classical half-derivative smoother `|xi|^(1/2)`.
    pub fn classical_half() -> Self {
        SmootherSpec::Classical { eta: 0.5 }
    }

    pub fn needs_symbol(&self) -> bool {
        matches!(
            self,
            SmootherSpec::InvariantPower { .. }
                | SmootherSpec::InvariantBracket { .. }
                | SmootherSpec::SymbolRoot { .. }
        )
    }

    /// Multiplier values on the frequency lattice. Symbol-dependent kinds
    /// require `a`.
    pub fn values(&self, grid: &GridSpec, a: Option<&Symbol>) -> Result<Vec<f64>> {
        fn need<'a>(spec: &SmootherSpec, a: Option<&'a Symbol>) -> Result<&'a Symbol> {
            a.ok_or_else(|| {
                LabError::Param(format!("smoother {spec:?} needs a symbol, none given"))
            })
        }
        let vals = match self {
            SmootherSpec::Classical { eta } => grid.eval_on_freq_lattice(|xi| {
                zero_base_pow(xi.iter().map(|c| c * c).sum::<f64>().sqrt(), *eta)
            }),
            SmootherSpec::Bracket { eta } => grid.eval_on_freq_lattice(|xi| {
                let r2: f64 = xi.iter().map(|c| c * c).sum();
                (1.0 + r2).powf(eta / 2.0)
            }),
            SmootherSpec::InvariantPower { eta } => {
                let g = need(self, a)?.lattice_grad_norms(grid)?;
                g.into_iter().map(|v| zero_base_pow(v, *eta)).collect()
            }
            SmootherSpec::InvariantBracket { eta } => {
                let g = need(self, a)?.lattice_grad_norms(grid)?;
                g.into_iter().map(|v| (1.0 + v * v).powf(eta / 2.0)).collect()
            }
            SmootherSpec::SymbolRoot { s } => {
                let av = need(self, a)?.lattice_values(grid)?;
                let brackets = grid.eval_on_freq_lattice(|xi| {
                    let r2: f64 = xi.iter().map(|c| c * c).sum();
                    (1.0 + r2).powf(-s / 2.0)
                });
                av.into_iter()
                    .zip(brackets)
                    .map(|(v, b)| b * v.abs().sqrt())
                    .collect()
            }
        };
        if let Some(bad) = vals.iter().position(|v| !v.is_finite()) {
            let axes = grid.freq_axes();
            let mut xi = vec![0.0; grid.dim()];
            grid.freq_at(bad, &axes, &mut xi);
            return Err(LabError::Multiplier { point: xi });
        }
        Ok(vals)
    }
}

fn check_exponent(e: f64) -> Result<()> {
    if e.is_finite() {
        Ok(())
    } else {
        Err(LabError::Param(format!("smoother exponent must be finite, got {e}")))
    }
}

/// `base^e` for `base >= 0` under the zero-base convention documented on
/// `SmootherSpec`.
pub(crate) fn zero_base_pow(base: f64, e: f64) -> f64 {
    if base == 0.0 {
        if e == 0.0 { 1.0 } else { 0.0 }
    } else {
        base.powf(e)
    }
}

/// Full configuration of one spacetime estimate: weight, smoother and the
/// symmetric time window `[-T, T]` discretized by a trapezoid rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateSpec {
    pub weight: WeightSpec,
    pub smoother: SmootherSpec,
    /// Half-width `T` of the window `[-T, T]`.
    pub t_window: f64,
    /// Trapezoid interval count: the rule evaluates at `time_samples + 1`
    /// equispaced nodes with half-weight endpoints. Over a full period this
    /// is the exactly-integrating rule for trigonometric polynomials of
    /// degree < time_samples.
    pub time_samples: usize,
}

impl EstimateSpec {
    pub fn new(
        weight: WeightSpec,
        smoother: SmootherSpec,
        t_window: f64,
        time_samples: usize,
    ) -> Result<Self> {
        if !t_window.is_finite() || t_window <= 0.0 {
            return Err(LabError::Param(format!(
                "time window must be finite and positive, got {t_window}"
            )));
        }
        if time_samples < 16 {
            return Err(LabError::Param(format!(
                "need at least 16 time samples for a meaningful window, got {time_samples}"
            )));
        }
        Ok(EstimateSpec { weight, smoother, t_window, time_samples })
    }

    /// Default window half-width for a grid: a quarter of the shortest side,
    /// short enough that wrap-around recurrence stays away from the bulk of
    /// the window.
    pub fn default_window(grid: &GridSpec) -> f64 {
        grid.lens().iter().fold(f64::INFINITY, |acc, &l| acc.min(l)) / 4.0
    }
}
