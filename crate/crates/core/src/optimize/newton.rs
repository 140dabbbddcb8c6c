use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::dense::{cholesky, cholesky_solve, norm, symmetric_eigenvalues};

/// Outcome of a convex minimization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptResult<T> {
    pub argmin: Vec<T>,
    pub value: T,
    pub grad_norm: T,
    /// Smallest Hessian eigenvalue at the argmin.
    pub hessian_min_eig: T,
    pub iterations: usize,
    pub converged: bool,
}

/// A smooth convex function with gradient and Hessian.
pub trait ConvexObjective<T> {
    fn value(&self, x: &[T]) -> Result<T>;
    fn gradient(&self, x: &[T]) -> Result<Vec<T>>;
    fn hessian(&self, x: &[T]) -> Result<Vec<Vec<T>>>;

    /// All three at once; override when they share work.
    fn eval_all(&self, x: &[T]) -> Result<(T, Vec<T>, Vec<Vec<T>>)> {
        Ok((self.value(x)?, self.gradient(x)?, self.hessian(x)?))
    }
}

/// Objective assembled from three closures.
pub struct FnObjective<V, G, H> {
    pub f: V,
    pub grad: G,
    pub hess: H,
}

impl<T, V, G, H> ConvexObjective<T> for FnObjective<V, G, H>
where
    V: Fn(&[T]) -> T,
    G: Fn(&[T]) -> Vec<T>,
    H: Fn(&[T]) -> Vec<Vec<T>>,
{
    fn value(&self, x: &[T]) -> Result<T> {
        Ok((self.f)(x))
    }
    fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        Ok((self.grad)(x))
    }
    fn hessian(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        Ok((self.hess)(x))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonConfig<T> {
    pub tol: T,
    pub max_iter: usize,
    pub armijo: T,
    pub backtrack: T,
    /// Hessians with a larger condition number are replaced by gradient steps.
    pub max_condition: T,
}

impl<T: Real> Default for NewtonConfig<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10),
            max_iter: 100,
            armijo: T::lit(1e-4),
            backtrack: T::lit(0.5),
            max_condition: T::lit(1e12),
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + *x * *y)
}

/// Damped Newton with Armijo backtracking. Converged iff the gradient norm
/// reaches `cfg.tol`; otherwise fails with `NonConvergence`.
pub fn newton_minimize<T: Real>(
    obj: &impl ConvexObjective<T>,
    x0: &[T],
    cfg: &NewtonConfig<T>,
) -> Result<OptResult<T>> {
    let mut x = x0.to_vec();
    let (mut f, mut g, mut h) = obj.eval_all(&x)?;
    let mut it = 0;
    loop {
        let gn = norm(&g);
        let ev = symmetric_eigenvalues(&h);
        let (lo, hi) = (
            ev.first().copied().unwrap_or(T::zero()),
            ev.last().copied().unwrap_or(T::zero()),
        );
        if gn <= cfg.tol {
            return Ok(OptResult {
                argmin: x,
                value: f,
                grad_norm: gn,
                hessian_min_eig: lo.max(T::zero()),
                iterations: it,
                converged: true,
            });
        }
        if it == cfg.max_iter || !gn.is_finite() {
            return Err(Error::NonConvergence {
                iterations: it,
                grad_norm: gn.to_f64().unwrap_or(f64::NAN),
            });
        }
        let newton = if lo > T::zero() && hi / lo <= cfg.max_condition {
            cholesky(&h).map(|l| cholesky_solve(&l, &g))
        } else {
            None
        };
        let d: Vec<T> = match newton {
            Some(step) => step.into_iter().map(|s| -s).collect(),
            None => {
                let scale = if hi > T::zero() { T::one() / hi } else { T::one() };
                g.iter().map(|gi| -*gi * scale).collect()
            }
        };
        let slope = dot(&g, &d);
        let mut t = T::one();
        let mut accepted = false;
        // below rounding of f the Armijo test is meaningless
        let resolvable = -slope * cfg.armijo > T::lit(4.0) * T::epsilon() * f.abs().max(T::one());
        for _ in 0..if resolvable { 60 } else { 0 } {
            let trial: Vec<T> = x.iter().zip(&d).map(|(xi, di)| *xi + t * *di).collect();
            if let Ok(ft) = obj.value(&trial) {
                if ft.is_finite() && ft <= f + cfg.armijo * t * slope {
                    x = trial;
                    accepted = true;
                    break;
                }
            }
            t = t * cfg.backtrack;
        }
        it += 1;
        if !accepted {
            // no representable decrease left; accept the full step only if it
            // does not increase the gradient norm
            let trial: Vec<T> = x.iter().zip(&d).map(|(xi, di)| *xi + *di).collect();
            let (ft, gt, ht) = obj.eval_all(&trial)?;
            if norm(&gt) < gn {
                x = trial;
                f = ft;
                g = gt;
                h = ht;
                continue;
            }
            return Err(Error::NonConvergence {
                iterations: it,
                grad_norm: gn.to_f64().unwrap_or(f64::NAN),
            });
        }
        let (fx, gx, hx) = obj.eval_all(&x)?;
        f = fx;
        g = gx;
        h = hx;
    }
}
