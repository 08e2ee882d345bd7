//! Finite-difference fallbacks for symbols without analytic derivatives.

/// Step for first derivatives: cube root of machine epsilon scaled by the
/// magnitude of the evaluation point.
fn grad_step(xi: &[f64]) -> f64 {
    let r = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
    f64::EPSILON.cbrt() * r.max(1.0)
}

/// Step for second derivatives.
fn hess_step(xi: &[f64]) -> f64 {
    f64::EPSILON.powf(0.25) * xi.iter().map(|c| c * c).sum::<f64>().sqrt().max(1.0)
}

fn central4(f: &dyn Fn(&[f64]) -> f64, xi: &[f64], axis: usize, h: f64) -> f64 {
    let mut p = xi.to_vec();
    let eval = |p: &mut [f64], delta: f64| {
        p[axis] = xi[axis] + delta;
        f(p)
    };
    let d = 8.0 * (eval(&mut p, h) - eval(&mut p, -h)) - (eval(&mut p, 2.0 * h) - eval(&mut p, -2.0 * h));
    d / (12.0 * h)
}

/// Fourth-order central difference with one Richardson extrapolation step
/// (`(16 D(h/2) - D(h)) / 15`), good to ~1e-10 relative on smooth symbols.
pub fn fd_partial(f: &dyn Fn(&[f64]) -> f64, xi: &[f64], axis: usize) -> f64 {
    let h = grad_step(xi);
    let coarse = central4(f, xi, axis, h);
    let fine = central4(f, xi, axis, 0.5 * h);
    (16.0 * fine - coarse) / 15.0
}

pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, xi: &[f64]) -> Vec<f64> {
    (0..xi.len()).map(|j| fd_partial(f, xi, j)).collect()
}

/// Second-order central Hessian; the mixed formula is symmetric by
/// construction and the result is symmetrised to kill roundoff skew.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, xi: &[f64]) -> Vec<Vec<f64>> {
    let n = xi.len();
    let h = hess_step(xi);
    let f0 = f(xi);
    let mut out = vec![vec![0.0; n]; n];
    let mut p = xi.to_vec();
    for i in 0..n {
        p.copy_from_slice(xi);
        p[i] = xi[i] + h;
        let fp = f(&p);
        p[i] = xi[i] - h;
        let fm = f(&p);
        out[i][i] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in (i + 1)..n {
            p.copy_from_slice(xi);
            p[i] = xi[i] + h;
            p[j] = xi[j] + h;
            let fpp = f(&p);
            p[j] = xi[j] - h;
            let fpm = f(&p);
            p[i] = xi[i] - h;
            let fmm = f(&p);
            p[j] = xi[j] + h;
            let fmp = f(&p);
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

/// First derivative of a scalar profile (used for radial second derivatives).
pub fn fd_scalar_derivative(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = f64::EPSILON.cbrt() * x.abs().max(1.0);
    let d = |h: f64| (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h);
    (16.0 * d(0.5 * h) - d(h)) / 15.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_analytic_to_spec_accuracy() {
        let f = |xi: &[f64]| (xi[0] * xi[0] + xi[1] * xi[1] - 1.0).powi(2);
        for point in [[1.3, -0.7], [0.2, 2.5], [-1.9, 0.4]] {
            let g = fd_gradient(&f, &point);
            let r2 = point[0] * point[0] + point[1] * point[1];
            let exact = [4.0 * (r2 - 1.0) * point[0], 4.0 * (r2 - 1.0) * point[1]];
            for j in 0..2 {
                let denom = exact[j].abs().max(1.0);
                assert!(
                    (g[j] - exact[j]).abs() / denom < crate::tol::GRAD_CONSISTENCY_REL,
                    "axis {j} at {point:?}: fd {} vs exact {}",
                    g[j],
                    exact[j]
                );
            }
        }
    }

    #[test]
    fn hessian_is_symmetric_and_accurate() {
        let f = |xi: &[f64]| xi[0].powi(3) + xi[0] * xi[1];
        let h = fd_hessian(&f, &[0.0, 0.0]);
        assert!((h[0][1] - h[1][0]).abs() < crate::tol::HESSIAN_SYMMETRY);
        assert!((h[0][0]).abs() < 1e-6 && (h[0][1] - 1.0).abs() < 1e-6, "hessian {h:?}");
    }
}
