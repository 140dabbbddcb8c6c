//! Integrals of `e^{−ℓ}` (times polynomial weights) over simplices and over
//! the cells of piecewise-linear functions.
//!
//! On a simplex with vertex values `t_i = ℓ(v_i)`,
//!
//! ```text
//! ∫_s e^{−ℓ} dy = n!·vol(s) · E[t_0, …, t_n]
//! ```
//!
//! where `E` is the divided-difference kernel of [`kernel`]. Polynomial
//! weights are handled by differentiating in a deformation `ℓ + ε w`, which
//! turns each weight factor into a repeated node:
//!
//! ```text
//! ∫_s Π_q w_q e^{−ℓ} = n!·vol · Σ_{i_1..i_k} Π_q w_q(v_{i_q}) · Π_i m_i! · E[t with t_i repeated m_i + 1 times]
//! ```
//!
//! with `m_i` the multiplicity of vertex `i` in the tuple.

pub mod accumulate;
pub mod kernel;
mod pl;
pub mod quadrature;

use std::collections::BTreeMap;

use rayon::prelude::*;

pub use kernel::{KernelConfig, Method, Route};
pub use pl::{PlCell, PlConcaveFunction};

use crate::error::{Error, Result};
use crate::geometry::{halfspace_slice, AffineForm, Simplex};
use crate::scalar::{factorial, field_from_i64, to_real, Field, Real};
use accumulate::tree_sum;

/// Value of an exponential integral with a conservative relative error bound.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ExpIntegralResult<T> {
    pub value: T,
    pub est_rel_error: T,
    pub method: Method,
}

/// Highest polynomial weight order accepted by the moment integrals.
pub const MAX_WEIGHT_ORDER: usize = 4;

#[derive(Clone, Copy, Debug)]
struct Partial<T> {
    value: T,
    abs_err: T,
    magnitude: T,
    method: Method,
}

impl<T: Real> Partial<T> {
    fn rel(&self) -> T {
        let m = self.value.abs().max(self.magnitude);
        if m > T::zero() {
            self.abs_err / m
        } else {
            T::zero()
        }
    }

    fn finish(self) -> ExpIntegralResult<T> {
        let m = if self.value != T::zero() { self.value.abs() } else { self.magnitude };
        ExpIntegralResult {
            value: self.value,
            est_rel_error: if m > T::zero() { self.abs_err / m } else { T::zero() },
            method: self.method,
        }
    }

    fn combine(parts: &[Partial<T>]) -> Partial<T> {
        let values: Vec<T> = parts.iter().map(|p| p.value).collect();
        let errs: Vec<T> = parts.iter().map(|p| p.abs_err).collect();
        let mags: Vec<T> = parts.iter().map(|p| p.magnitude).collect();
        let value = tree_sum(&values);
        Partial {
            value,
            abs_err: tree_sum(&errs) + T::epsilon() * tree_sum(&mags),
            magnitude: tree_sum(&mags),
            method: parts.iter().map(|p| p.method).max().unwrap_or(Method::DividedDifference),
        }
    }
}

/// Integrator settings; [`Default`] targets a relative error of `1e-12`, or a
/// few ulps when the working precision cannot reach that.
#[derive(Clone, Copy, Debug)]
pub struct ExpIntegrator<T> {
    pub kernel: KernelConfig<T>,
    /// Exponential integrals whose error bound exceeds this are subdivided.
    pub target_rel_error: T,
    pub max_depth: usize,
}

impl<T: Real> Default for ExpIntegrator<T> {
    fn default() -> Self {
        Self {
            kernel: KernelConfig::default(),
            target_rel_error: T::lit(1e-12).max(T::epsilon() * T::lit(64.0)),
            max_depth: 12,
        }
    }
}

fn check_dim(expected: usize, found: usize, what: &str) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            expected,
            found,
            context: what.into(),
        });
    }
    Ok(())
}

fn split_longest<F: Field>(s: &Simplex<F>, vals: &[f64]) -> Result<(Simplex<F>, Simplex<F>)> {
    let mut best = (0, 1);
    let mut spread = -1.0;
    for i in 0..vals.len() {
        for j in i + 1..vals.len() {
            let d = (vals[i] - vals[j]).abs();
            if d > spread {
                spread = d;
                best = (i, j);
            }
        }
    }
    let (i, j) = best;
    let v = s.vertices();
    let two = field_from_i64::<F>(2);
    let mid: Vec<F> = v[i]
        .iter()
        .zip(&v[j])
        .map(|(a, b)| (a.clone() + b.clone()) / two.clone())
        .collect();
    let mut a = v.to_vec();
    a[i] = mid.clone();
    let mut b = v.to_vec();
    b[j] = mid;
    Ok((Simplex::new(a)?, Simplex::new(b)?))
}

impl<T: Real> ExpIntegrator<T> {
    fn simplex_partial<F: Field>(
        &self,
        s: &Simplex<F>,
        l: &AffineForm<T>,
        weights: &[&AffineForm<T>],
        depth: usize,
    ) -> Result<Partial<T>> {
        let n = s.dim();
        check_dim(n, l.dim(), "exponent form")?;
        for w in weights {
            check_dim(n, w.dim(), "weight form")?;
        }
        let t: Vec<T> = s.vertices().iter().map(|v| l.eval_at(v)).collect();
        let wv: Vec<Vec<T>> = weights
            .iter()
            .map(|w| s.vertices().iter().map(|v| w.eval_at(v)).collect())
            .collect();
        let vol: T = to_real(&s.normalized_volume());

        // coefficient of each vertex multiplicity pattern
        let k = weights.len();
        let mut coef: BTreeMap<Vec<usize>, T> = BTreeMap::new();
        let mut tuple = vec![0usize; k];
        loop {
            let mut c = T::one();
            let mut m = vec![0usize; n + 1];
            for (q, &i) in tuple.iter().enumerate() {
                c = c * wv[q][i];
                m[i] += 1;
            }
            if c != T::zero() {
                let e = coef.entry(m).or_insert_with(T::zero);
                *e = *e + c;
            }
            let mut q = 0;
            while q < k {
                tuple[q] += 1;
                if tuple[q] <= n {
                    break;
                }
                tuple[q] = 0;
                q += 1;
            }
            if q == k {
                break;
            }
        }

        let mut terms = Vec::with_capacity(coef.len());
        let mut errs = Vec::with_capacity(coef.len());
        let mut method = Method::DividedDifference;
        for (m, c) in &coef {
            let mut nodes = Vec::with_capacity(n + 1 + k);
            let mut mult = T::one();
            for (i, &mi) in m.iter().enumerate() {
                nodes.extend(std::iter::repeat(t[i]).take(mi + 1));
                mult = mult * factorial::<T>(mi);
            }
            let e = kernel::exp_divided_difference(&nodes, &self.kernel);
            terms.push(*c * mult * e.value * vol);
            errs.push((*c * mult).abs() * e.abs_err * vol);
            method = method.max(e.method);
        }
        let mags: Vec<T> = terms.iter().map(|x| x.abs()).collect();
        let magnitude = tree_sum(&mags);
        let part = Partial {
            value: tree_sum(&terms),
            abs_err: tree_sum(&errs) + T::epsilon() * magnitude * T::from_usize_lossy(coef.len()),
            magnitude,
            method,
        };
        if k == 0 && part.rel() > self.target_rel_error && depth < self.max_depth {
            let vals: Vec<f64> = t.iter().map(|x| x.to_f64().unwrap_or(0.0)).collect();
            let (a, b) = split_longest(s, &vals)?;
            let pa = self.simplex_partial(&a, l, weights, depth + 1)?;
            let pb = self.simplex_partial(&b, l, weights, depth + 1)?;
            let mut sum = Partial::combine(&[pa, pb]);
            sum.method = Method::Subdivision;
            if sum.rel() < part.rel() {
                return Ok(sum);
            }
        }
        Ok(part)
    }

    /// `∫_s e^{−ℓ(y)} dy`.
    pub fn simplex<F: Field>(&self, s: &Simplex<F>, l: &AffineForm<T>) -> Result<ExpIntegralResult<T>> {
        Ok(self.simplex_partial(s, l, &[], 0)?.finish())
    }

    /// `∫_s Π_q w_q(y) e^{−ℓ(y)} dy` for at most [`MAX_WEIGHT_ORDER`] factors.
    pub fn simplex_product<F: Field>(
        &self,
        s: &Simplex<F>,
        l: &AffineForm<T>,
        weights: &[&AffineForm<T>],
    ) -> Result<ExpIntegralResult<T>> {
        if weights.len() > MAX_WEIGHT_ORDER {
            return Err(Error::UnsupportedOrder(weights.len()));
        }
        Ok(self.simplex_partial(s, l, weights, 0)?.finish())
    }

    /// `∫_s w(y)^k e^{−ℓ(y)} dy`.
    pub fn simplex_weighted<F: Field>(
        &self,
        s: &Simplex<F>,
        l: &AffineForm<T>,
        w: &AffineForm<T>,
        k: usize,
    ) -> Result<ExpIntegralResult<T>> {
        if k > MAX_WEIGHT_ORDER {
            return Err(Error::UnsupportedOrder(k));
        }
        let ws = vec![w; k];
        self.simplex_product(s, l, &ws)
    }

    fn pl_partial<F: Field>(
        &self,
        g: &PlConcaveFunction<F>,
        shift: &AffineForm<T>,
        weights: &[&AffineForm<T>],
    ) -> Result<Partial<T>> {
        check_dim(g.dim(), shift.dim(), "shift form")?;
        if weights.len() > MAX_WEIGHT_ORDER {
            return Err(Error::UnsupportedOrder(weights.len()));
        }
        let parts = g
            .cells()
            .par_iter()
            .map(|c| {
                let form = c.affine.to_real::<T>().add(shift);
                self.simplex_partial(&c.simplex, &form, weights, 0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Partial::combine(&parts))
    }

    /// `∫_Δ e^{−G(y) − shift(y)} dy`, summed over the cells of `G`.
    pub fn pl<F: Field>(&self, g: &PlConcaveFunction<F>, shift: &AffineForm<T>) -> Result<ExpIntegralResult<T>> {
        Ok(self.pl_partial(g, shift, &[])?.finish())
    }

    /// `∫_Δ Π_q w_q(y) e^{−G(y) − shift(y)} dy`.
    pub fn pl_product<F: Field>(
        &self,
        g: &PlConcaveFunction<F>,
        shift: &AffineForm<T>,
        weights: &[&AffineForm<T>],
    ) -> Result<ExpIntegralResult<T>> {
        Ok(self.pl_partial(g, shift, weights)?.finish())
    }

    /// `∫_{G ≥ x} e^{−shift(y)} dy`.
    pub fn superlevel<F: Field>(
        &self,
        g: &PlConcaveFunction<F>,
        x: &F,
        shift: &AffineForm<T>,
    ) -> Result<ExpIntegralResult<T>> {
        check_dim(g.dim(), shift.dim(), "shift form")?;
        let parts = g
            .cells()
            .par_iter()
            .map(|c| {
                let pieces = halfspace_slice(&c.simplex, &c.affine, x);
                let ps = pieces
                    .iter()
                    .map(|s| self.simplex_partial(s, shift, &[], 0))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Partial::combine(&ps))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Partial::combine(&parts).finish())
    }
}

pub fn simplex_exp_integral<F: Field, T: Real>(s: &Simplex<F>, l: &AffineForm<T>) -> Result<ExpIntegralResult<T>> {
    ExpIntegrator::default().simplex(s, l)
}

pub fn simplex_weighted_exp_integral<F: Field, T: Real>(
    s: &Simplex<F>,
    l: &AffineForm<T>,
    w: &AffineForm<T>,
    k: usize,
) -> Result<ExpIntegralResult<T>> {
    ExpIntegrator::default().simplex_weighted(s, l, w, k)
}

pub fn simplex_product_exp_integral<F: Field, T: Real>(
    s: &Simplex<F>,
    l: &AffineForm<T>,
    weights: &[&AffineForm<T>],
) -> Result<ExpIntegralResult<T>> {
    ExpIntegrator::default().simplex_product(s, l, weights)
}

pub fn pl_exp_integral<F: Field, T: Real>(
    g: &PlConcaveFunction<F>,
    shift: &AffineForm<T>,
) -> Result<ExpIntegralResult<T>> {
    ExpIntegrator::default().pl(g, shift)
}

pub fn pl_product_exp_integral<F: Field, T: Real>(
    g: &PlConcaveFunction<F>,
    shift: &AffineForm<T>,
    weights: &[&AffineForm<T>],
) -> Result<ExpIntegralResult<T>> {
    ExpIntegrator::default().pl_product(g, shift, weights)
}

/// `n! · ∫_{G ≥ x} e^{−⟨y′, ξ⟩} dy`, pairing `ξ` with the leading coordinates.
pub fn superlevel_gvolume<F: Field, T: Real>(g: &PlConcaveFunction<F>, x: &F, xi: &[T]) -> Result<T> {
    let n = g.dim();
    if xi.len() > n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: xi.len(),
            context: "torus vector longer than the body dimension".into(),
        });
    }
    let shift = AffineForm::projected_pairing(n, xi);
    Ok(ExpIntegrator::default().superlevel(g, x, &shift)?.value * factorial::<T>(n))
}
