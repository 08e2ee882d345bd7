use std::fmt;
use std::sync::Arc;

pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Radial symbol data: `a(xi) = f(|xi|)` described by the profile `f`, its
/// derivative and the finite list of zeros of `f'` on the scanned range.
/// `|grad a|(xi) = |f'(|xi|)|` pointwise, which is what the invariant
/// smoother consumes; the zero list tells the classifier where the smoothing
/// weight degenerates.
#[derive(Clone)]
pub struct RadialProfile {
    pub f: Profile,
    pub fp: Profile,
    pub fp_zeros: Vec<f64>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("RadialProfile").field("fp_zeros", &self.fp_zeros).finish()
    }
}

impl RadialProfile {
    pub fn new(f: Profile, fp: Profile, fp_zeros: Vec<f64>) -> Self {
        RadialProfile { f, fp, fp_zeros }
    }

    pub fn eval(&self, rho: f64) -> f64 {
        (self.f)(rho)
    }

    pub fn deriv(&self, rho: f64) -> f64 {
        (self.fp)(rho)
    }

    /// Gradient of `f(|xi|)`; at the origin the direction is ill-defined and
    /// the zero vector is returned (the magnitude `|f'(0)|` is still
    /// available through `deriv`).
    pub fn gradient(&self, xi: &[f64]) -> Vec<f64> {
        let rho = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
        if rho == 0.0 {
            return vec![0.0; xi.len()];
        }
        let s = self.deriv(rho) / rho;
        xi.iter().map(|&c| s * c).collect()
    }

    /// Exact Hessian formula away from the origin,
    /// `f''(r) P_par + (f'(r)/r) P_perp`, with `f''` from a high-order
    /// finite difference of the profile derivative.
    pub fn hessian(&self, xi: &[f64]) -> Option<Vec<Vec<f64>>> {
        let n = xi.len();
        let rho = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
        if rho < 1e-8 {
            return None;
        }
        let fp = self.deriv(rho);
        let fpp = super::diff::fd_scalar_derivative(&{
            let p = self.fp.clone();
            move |r| p(r)
        }, rho);
        let mut h = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let par = xi[i] * xi[j] / (rho * rho);
                let perp = if i == j { 1.0 - par } else { -par };
                h[i][j] = fpp * par + (fp / rho) * perp;
            }
        }
        Some(h)
    }

    /// Scan `[0, max]` for zeros of `f'`: the origin endpoint is tested
    /// directly, then coarse sampling plus bisection covers the interior.
    /// Returns sorted, deduplicated zeros. Zeros of even multiplicity are
    /// found when the coarse grid lands within `tol` of them.
    pub fn scan_fp_zeros(fp: &Profile, max: f64) -> Vec<f64> {
        let samples = 8192usize;
        let mut zeros: Vec<f64> = Vec::new();
        if fp(0.0).abs() < 1e-14 {
            zeros.push(0.0);
        }
        let dr = max / samples as f64;
        let mut prev_r = 0.5 * dr;
        let mut prev_v = fp(prev_r);
        for k in 1..samples {
            let r = (k as f64 + 0.5) * dr;
            let v = fp(r);
            if prev_v == 0.0 {
                zeros.push(prev_r);
            } else if prev_v.signum() != v.signum() && v != 0.0 {
                // Bisection on the bracketed sign change.
                let (mut lo, mut hi) = (prev_r, r);
                let (mut flo, _) = (prev_v, v);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = fp(mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if flo.signum() == fm.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                zeros.push(0.5 * (lo + hi));
            } else if v.abs() < 1e-14 {
                zeros.push(r);
            }
            prev_r = r;
            prev_v = v;
        }
        zeros.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * max.max(1.0));
        zeros
    }
}
