pub mod catalog;
pub mod classify;
pub mod diff;
pub mod expr;
pub mod poly;
pub mod radial;

use crate::canonical::FrequencyMap;
use crate::error::{LabError, Result};
use crate::grid::GridSpec;
pub use poly::PolynomialSymbol;
pub use radial::RadialProfile;
use std::fmt;
use std::sync::Arc;

/// Scalar frequency function together with exact or numeric calculus.
type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum Repr {
    /// Real-coefficient polynomial; gradients are exact polynomials.
    Poly { p: PolynomialSymbol, grads: Vec<PolynomialSymbol> },
    /// `a(xi) = f(|xi|)` with analytic radial calculus.
    Radial { profile: RadialProfile },
    /// Black-box function, optionally with a supplied gradient; otherwise
    /// finite differences back every derivative.
    Closure { f: ScalarFn, grad: Option<VectorFn> },
    /// `a(xi) = outer(psi(xi))` built by a canonical change of variables.
    Composed { outer: Box<Symbol>, map: FrequencyMap },
}

/// A real symbol `a(xi)` on `R^n`: the dispersion relation of the evolution
/// `i u_t + a(D) u = 0`. Carries enough metadata (order, homogeneity,
/// polynomial/radial structure) for classification and estimate routing.
#[derive(Clone)]
pub struct Symbol {
    name: String,
    dim: usize,
    order: f64,
    homogeneous: Option<f64>,
    repr: Repr,
    /// Polynomial expansion when one exists, regardless of representation
    /// (radial symbols with even profiles are also polynomials).
    poly_form: Option<PolynomialSymbol>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("homogeneous", &self.homogeneous)
            .finish()
    }
}

impl Symbol {
    pub fn from_poly(name: impl Into<String>, p: PolynomialSymbol) -> Self {
        let dim = p.dim();
        let order = p.degree() as f64;
        let homogeneous = p.homogeneous_order().map(|m| m as f64);
        let grads = p.gradient();
        Symbol {
            name: name.into(),
            dim,
            order,
            homogeneous,
            poly_form: Some(p.clone()),
            repr: Repr::Poly { p, grads },
        }
    }

    /// Attach a polynomial expansion to a non-polynomial representation
    /// (e.g. a radial symbol with an even profile).
    pub fn with_polynomial_form(mut self, p: PolynomialSymbol) -> Self {
        self.poly_form = Some(p);
        self
    }

    pub fn from_radial(
        name: impl Into<String>,
        dim: usize,
        order: f64,
        homogeneous: Option<f64>,
        profile: RadialProfile,
    ) -> Self {
        Symbol {
            name: name.into(),
            dim,
            order,
            homogeneous,
            poly_form: None,
            repr: Repr::Radial { profile },
        }
    }

    pub fn from_closure(
        name: impl Into<String>,
        dim: usize,
        order: f64,
        homogeneous: Option<f64>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: Option<VectorFn>,
    ) -> Self {
        Symbol {
            name: name.into(),
            dim,
            order,
            homogeneous,
            poly_form: None,
            repr: Repr::Closure { f: Arc::new(f), grad },
        }
    }

    /// Pull `outer` back along the frequency map: `a(xi) = outer(psi(xi))`.
    pub fn composed(outer: Symbol, map: FrequencyMap) -> Result<Self> {
        let dim = outer.dim;
        match &map {
            FrequencyMap::Linear { matrix, .. } if matrix.len() != dim => {
                return Err(LabError::Param(format!(
                    "map dimension {} does not match symbol dimension {dim}",
                    matrix.len()
                )));
            }
            _ => {}
        }
        let homogeneous = if map.is_homogeneous() { outer.homogeneous } else { None };
        Ok(Symbol {
            name: format!("{} o psi", outer.name),
            dim,
            order: outer.order,
            homogeneous,
            poly_form: None,
            repr: Repr::Composed { outer: Box::new(outer), map },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Growth order `m`: `|a(xi)| = O(|xi|^m)` at infinity.
    pub fn order(&self) -> f64 {
        self.order
    }

    /// Declared positive homogeneity `a(t xi) = t^m a(xi)`, if any.
    pub fn homogeneous_order(&self) -> Option<f64> {
        self.homogeneous
    }

    pub fn poly(&self) -> Option<&PolynomialSymbol> {
        self.poly_form.as_ref()
    }

    pub fn radial(&self) -> Option<&RadialProfile> {
        match &self.repr {
            Repr::Radial { profile } => Some(profile),
            _ => None,
        }
    }

    pub fn composed_parts(&self) -> Option<(&Symbol, &FrequencyMap)> {
        match &self.repr {
            Repr::Composed { outer, map } => Some((outer, map)),
            _ => None,
        }
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.dim);
        match &self.repr {
            Repr::Poly { p, .. } => p.eval(xi),
            Repr::Radial { profile } => {
                profile.eval(xi.iter().map(|c| c * c).sum::<f64>().sqrt())
            }
            Repr::Closure { f, .. } => f(xi),
            Repr::Composed { outer, map } => outer.eval(&map.apply(xi)),
        }
    }

    pub fn gradient(&self, xi: &[f64]) -> Vec<f64> {
        debug_assert_eq!(xi.len(), self.dim);
        match &self.repr {
            Repr::Poly { grads, .. } => grads.iter().map(|g| g.eval(xi)).collect(),
            Repr::Radial { profile } => profile.gradient(xi),
            Repr::Closure { f, grad } => match grad {
                Some(g) => g(xi),
                None => {
                    let f = f.clone();
                    diff::fd_gradient(&move |y: &[f64]| f(y), xi)
                }
            },
            Repr::Composed { outer, map } => {
                // grad a = (D psi)^T grad outer(psi xi)
                let eta = map.apply(xi);
                let go = outer.gradient(&eta);
                let j = map.jacobian(xi);
                (0..self.dim)
                    .map(|col| (0..self.dim).map(|row| j[row][col] * go[row]).sum())
                    .collect()
            }
        }
    }

    /// `|grad a(xi)|`, with the radial short-cut `|f'(|xi|)|`.
    pub fn grad_norm(&self, xi: &[f64]) -> f64 {
        match &self.repr {
            Repr::Radial { profile } => {
                let rho = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
                profile.deriv(rho).abs()
            }
            _ => self.gradient(xi).iter().map(|g| g * g).sum::<f64>().sqrt(),
        }
    }

    /// Hessian matrix; exact for polynomials and linear compositions,
    /// analytic off the origin for radial symbols, finite differences
    /// otherwise. `None` where the representation cannot produce one
    /// (radial symbols at the origin with a kinked profile).
    pub fn hessian(&self, xi: &[f64]) -> Option<Vec<Vec<f64>>> {
        match &self.repr {
            Repr::Poly { grads, .. } => {
                let n = self.dim;
                let mut h = vec![vec![0.0; n]; n];
                for (i, gi) in grads.iter().enumerate() {
                    for (j, gj) in gi.gradient().iter().enumerate() {
                        h[i][j] = gj.eval(xi);
                    }
                }
                Some(h)
            }
            Repr::Radial { profile } => profile.hessian(xi),
            Repr::Closure { f, .. } => {
                let f = f.clone();
                Some(diff::fd_hessian(&move |y: &[f64]| f(y), xi))
            }
            Repr::Composed { outer, map } => match map {
                FrequencyMap::Linear { matrix, .. } => {
                    let eta = map.apply(xi);
                    let ho = outer.hessian(&eta)?;
                    let n = self.dim;
                    // H_a = M^T H_outer M for linear psi = M xi.
                    let mut h = vec![vec![0.0; n]; n];
                    for i in 0..n {
                        for j in 0..n {
                            let mut s = 0.0;
                            for r in 0..n {
                                for c in 0..n {
                                    s += matrix[r][i] * ho[r][c] * matrix[c][j];
                                }
                            }
                            h[i][j] = s;
                        }
                    }
                    Some(h)
                }
                FrequencyMap::RadialWarp { .. } => {
                    let me = self.clone();
                    Some(diff::fd_hessian(&move |y: &[f64]| me.eval(y), xi))
                }
            },
        }
    }

    /// Largest relative Euler defect `|xi . grad a - m a| / (|xi||grad a| + |a| + eps)`
    /// over deterministic sample points: zero (to rounding) iff the declared
    /// homogeneity is genuine.
    pub fn euler_defect(&self) -> Option<f64> {
        let m = self.homogeneous?;
        let mut worst = 0.0f64;
        for dir in sphere_directions(self.dim, 24) {
            for scale in [0.5, 1.0, 2.0, 3.7] {
                let xi: Vec<f64> = dir.iter().map(|d| d * scale).collect();
                let a = self.eval(&xi);
                let g = self.gradient(&xi);
                let dot: f64 = xi.iter().zip(&g).map(|(x, gi)| x * gi).sum();
                let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                let xin = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                let denom = xin * gn + a.abs() + 1e-30;
                worst = worst.max((dot - m * a).abs() / denom);
            }
        }
        Some(worst)
    }

    /// Symbol values on the frequency lattice of `grid`, rejecting
    /// non-finite values with the offending point named.
    pub fn lattice_values(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        if grid.dim() != self.dim {
            return Err(LabError::Shape(format!(
                "symbol on R^{} evaluated on a {}-dimensional grid",
                self.dim,
                grid.dim()
            )));
        }
        let axes = grid.freq_axes();
        let mut xi = vec![0.0; self.dim];
        let mut out = Vec::with_capacity(grid.total_points());
        for flat in 0..grid.total_points() {
            grid.freq_at(flat, &axes, &mut xi);
            let v = self.eval(&xi);
            if !v.is_finite() {
                return Err(LabError::SymbolValue {
                    name: self.name.clone(),
                    point: xi.clone(),
                    value: v,
                });
            }
            out.push(v);
        }
        Ok(out)
    }

    /// `|grad a|` on the frequency lattice, same rejection policy.
    pub fn lattice_grad_norms(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        if grid.dim() != self.dim {
            return Err(LabError::Shape(format!(
                "symbol on R^{} evaluated on a {}-dimensional grid",
                self.dim,
                grid.dim()
            )));
        }
        let axes = grid.freq_axes();
        let mut xi = vec![0.0; self.dim];
        let mut out = Vec::with_capacity(grid.total_points());
        for flat in 0..grid.total_points() {
            grid.freq_at(flat, &axes, &mut xi);
            let v = self.grad_norm(&xi);
            if !v.is_finite() {
                return Err(LabError::SymbolValue {
                    name: self.name.clone(),
                    point: xi.clone(),
                    value: v,
                });
            }
            out.push(v);
        }
        Ok(out)
    }
}

/// Deterministic unit directions: endpoints in 1-d, equispaced angles in
/// 2-d, a Fibonacci sphere in 3-d.
pub(crate) fn sphere_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let th = 2.0 * std::f64::consts::PI * (i as f64) / golden;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
        _ => unreachable!("grid construction caps dimension at 3"),
    }
}
