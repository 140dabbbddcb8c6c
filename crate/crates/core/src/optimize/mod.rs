//! Strictly convex minimization problems and derivative harnesses.

mod dense;
mod newton;

pub use dense::{cholesky, cholesky_solve, symmetric_eigenvalues};
pub use newton::{newton_minimize, ConvexObjective, FnObjective, NewtonConfig, OptResult};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expint::accumulate::tree_sum;
use crate::expint::quadrature::integrate;
use crate::expint::{ExpIntegrator, PlConcaveFunction};
use crate::filtration::GradedFiltration;
use crate::functionals::{LPolicy, TiltedBody};
use crate::geometry::{AffineForm, Polytope};
use crate::measure::DhMeasure;
use crate::scalar::{to_real, Field, Real};

/// Support below `−SUPPORT_TOL` counts as negative.
const SUPPORT_TOL: f64 = 1e-10;

struct SolitonObjective<'a, F> {
    body: &'a TiltedBody<F>,
}

impl<F: Field, T: Real> ConvexObjective<T> for SolitonObjective<'_, F> {
    fn value(&self, x: &[T]) -> Result<T> {
        self.body.log_partition(x)
    }
    fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.body.moments(x)?.mean.into_iter().map(|m| -m).collect())
    }
    fn hessian(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        Ok(self.body.moments(x)?.cov)
    }
    fn eval_all(&self, x: &[T]) -> Result<(T, Vec<T>, Vec<Vec<T>>)> {
        let m = self.body.moments(x)?;
        Ok((m.log_z, m.mean.into_iter().map(|v| -v).collect(), m.cov))
    }
}

/// Minimizer `ξ*` of `ξ ↦ log ∫_Δ e^{−⟨y′,ξ⟩} dy` over `ξ ∈ R^r`.
///
/// Requires the origin strictly inside the projection of `Δ` to its leading
/// `r` coordinates. The reported value is `H(wt_ξ*) = log((n!/V)∫_Δ e^{−⟨y′,ξ*⟩} dy)`.
pub fn soliton_vector<F: Field, T: Real>(p: &Polytope<F>, r: usize, cfg: &NewtonConfig<T>) -> Result<OptResult<T>> {
    let proj = p.project(r)?;
    if !proj.contains_in_interior(&vec![F::zero(); r]) {
        return Err(Error::OriginNotInterior(format!(
            "the origin is not strictly inside the rank-{r} projection of the polytope"
        )));
    }
    let body = TiltedBody::new(p, r)?;
    let mut res = newton_minimize(&SolitonObjective { body: &body }, &vec![T::zero(); r], cfg)?;
    let vol: T = to_real(body.volume());
    res.value = res.value - vol.ln();
    Ok(res)
}

/// `f(a) = aA + log((1/V)∫ e^{−ax} dμ)`.
pub fn rescale_objective<T: Real, F: Field>(a_v: T, mu: &DhMeasure<T, F>, a: T) -> T {
    a * a_v + mu.log_exp_moment(a)
}

/// `f′(a) = A − (tilted mean at a)`.
pub fn rescale_derivative<T: Real, F: Field>(a_v: T, mu: &DhMeasure<T, F>, a: T) -> T {
    a_v - mu.tilted_mean(a)
}

/// `f″(a) = tilted variance at a`.
pub fn rescale_second_derivative<T: Real, F: Field>(mu: &DhMeasure<T, F>, a: T) -> T {
    mu.tilted_variance(a)
}

/// Minimizer `a* ≥ 0` of `f(a) = aA + log((1/V)∫ e^{−ax} dμ)`.
pub fn rescale_opt<T: Real, F: Field>(a_v: T, mu: &DhMeasure<T, F>, tol: T) -> Result<OptResult<T>> {
    if !(a_v > T::zero()) {
        return Err(Error::InvalidArgument(format!("log discrepancy {a_v} must be positive")));
    }
    let supp = mu.support();
    if supp.lambda_min < -T::lit(SUPPORT_TOL) {
        return Err(Error::NegativeSupport(supp.lambda_min.to_f64().unwrap_or(f64::NAN)));
    }
    let beta = a_v - mu.moment(1)?;
    if beta >= T::zero() {
        // boundary minimum: f′(0) = β ≥ 0 and f is convex
        return Ok(OptResult {
            argmin: vec![T::zero()],
            value: T::zero(),
            grad_norm: T::zero(),
            hessian_min_eig: mu.tilted_variance(T::zero()),
            iterations: 0,
            converged: true,
        });
    }
    if mu.tilted_variance(T::one()) < T::lit(1e-14) {
        return Err(Error::DiracMeasure {
            slope: beta.to_f64().unwrap_or(f64::NAN),
        });
    }
    if supp.lambda_min >= a_v {
        return Err(Error::NoInteriorMinimum(format!(
            "f′(a) = A − mean_a stays negative since A = {a_v} ≤ λ_min = {}",
            supp.lambda_min
        )));
    }
    let fp = |a: T| rescale_derivative(a_v, mu, a);
    let (mut lo, mut hi) = (T::zero(), T::one());
    let mut it = 0;
    while fp(hi) < T::zero() {
        lo = hi;
        hi = hi * T::lit(2.0);
        it += 1;
        if it > 1100 || !hi.is_finite() {
            return Err(Error::NonConvergence {
                iterations: it,
                grad_norm: fp(hi).abs().to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let mut a = (lo + hi) * T::lit(0.5);
    for _ in 0..200 {
        let g = fp(a);
        if g.abs() <= tol {
            return Ok(OptResult {
                argmin: vec![a],
                value: rescale_objective(a_v, mu, a),
                grad_norm: g.abs(),
                hessian_min_eig: mu.tilted_variance(a),
                iterations: it,
                converged: true,
            });
        }
        if g < T::zero() {
            lo = a;
        } else {
            hi = a;
        }
        let h = mu.tilted_variance(a);
        let newton = a - g / h;
        a = if h > T::zero() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) * T::lit(0.5)
        };
        it += 1;
        if hi - lo <= T::epsilon() * hi {
            let g = fp(a);
            return Ok(OptResult {
                argmin: vec![a],
                value: rescale_objective(a_v, mu, a),
                grad_norm: g.abs(),
                hessian_min_eig: mu.tilted_variance(a),
                iterations: it,
                converged: g.abs() <= tol,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: it,
        grad_norm: fp(a).abs().to_f64().unwrap_or(f64::NAN),
    })
}

/// `ξ ↦ L + avg_m log((1/N_m) Σ_i e^{−λ_i/m − ⟨α_i/m, ξ⟩})`, i.e. `H(F_ξ)`
/// from the empirical measures at the chosen degrees.
pub struct TwistObjective<T> {
    levels: Vec<(Vec<T>, Vec<Vec<T>>)>,
    l: T,
    rank: usize,
}

impl<T: Real> TwistObjective<T> {
    pub fn new<F: Field>(f: &GradedFiltration<F>, m_list: &[u32], l: &LPolicy<T>) -> Result<Self> {
        if m_list.is_empty() {
            return Err(Error::InsufficientDegrees { have: 0, need: 1 });
        }
        let mut levels = Vec::with_capacity(m_list.len());
        let mut rank = None;
        for &m in m_list {
            let lv = f.level(m)?;
            let w = lv
                .weights()
                .ok_or_else(|| Error::MissingTorusWeights(format!("degree {m}")))?;
            let r = lv.weight_rank().unwrap_or(0);
            if r == 0 {
                return Err(Error::MissingTorusWeights(format!("degree {m} has rank-zero weights")));
            }
            if *rank.get_or_insert(r) != r {
                return Err(Error::DimensionMismatch {
                    expected: rank.unwrap_or(r),
                    found: r,
                    context: format!("torus weight rank at degree {m}"),
                });
            }
            let hull = Polytope::from_vertices(r, w.to_vec())?;
            if !hull.contains_in_interior(&vec![F::zero(); r]) {
                return Err(Error::OriginNotInterior(format!(
                    "the origin is not strictly inside the weight polytope at degree {m}"
                )));
            }
            let mm = F::from_u32(m).expect("degree");
            let c = lv.values().iter().map(|v| to_real(&(v.clone() / mm.clone()))).collect();
            let ws = w
                .iter()
                .map(|a| a.iter().map(|x| to_real(&(x.clone() / mm.clone()))).collect())
                .collect();
            levels.push((c, ws));
        }
        Ok(Self {
            levels,
            l: l.value(),
            rank: rank.unwrap_or(0),
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn stats(&self, xi: &[T]) -> Result<(T, Vec<T>, Vec<Vec<T>>)> {
        if xi.len() != self.rank {
            return Err(Error::DimensionMismatch {
                expected: self.rank,
                found: xi.len(),
                context: "twist vector against torus weight rank".into(),
            });
        }
        let r = self.rank;
        let k = T::from_usize_lossy(self.levels.len());
        let mut val = Vec::with_capacity(self.levels.len());
        let mut grad = vec![T::zero(); r];
        let mut hess = vec![vec![T::zero(); r]; r];
        for (c, w) in &self.levels {
            let e: Vec<T> = c
                .iter()
                .zip(w)
                .map(|(ci, wi)| -(*ci + wi.iter().zip(xi).fold(T::zero(), |s, (a, b)| s + *a * *b)))
                .collect();
            let top = e.iter().copied().fold(T::neg_infinity(), T::max);
            let p: Vec<T> = e.iter().map(|x| (*x - top).exp()).collect();
            let z = tree_sum(&p);
            val.push(top + z.ln() - T::from_usize_lossy(e.len()).ln());
            let mean: Vec<T> = (0..r)
                .map(|j| tree_sum(&p.iter().zip(w).map(|(pi, wi)| *pi * wi[j]).collect::<Vec<_>>()) / z)
                .collect();
            for j in 0..r {
                grad[j] = grad[j] - mean[j] / k;
                for l in 0..r {
                    let cv = tree_sum(
                        &p.iter()
                            .zip(w)
                            .map(|(pi, wi)| *pi * (wi[j] - mean[j]) * (wi[l] - mean[l]))
                            .collect::<Vec<_>>(),
                    ) / z;
                    hess[j][l] = hess[j][l] + cv / k;
                }
            }
        }
        Ok((self.l + tree_sum(&val) / k, grad, hess))
    }
}

impl<T: Real> ConvexObjective<T> for TwistObjective<T> {
    fn value(&self, x: &[T]) -> Result<T> {
        Ok(self.stats(x)?.0)
    }
    fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.stats(x)?.1)
    }
    fn hessian(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        Ok(self.stats(x)?.2)
    }
    fn eval_all(&self, x: &[T]) -> Result<(T, Vec<T>, Vec<Vec<T>>)> {
        self.stats(x)
    }
}

/// Minimizer of `ξ ↦ H(F_ξ)` from the empirical measures at `m_list`, started at `x0`.
pub fn twist_opt<F: Field, T: Real>(
    f: &GradedFiltration<F>,
    m_list: &[u32],
    l: &LPolicy<T>,
    x0: &[T],
    cfg: &NewtonConfig<T>,
) -> Result<OptResult<T>> {
    let obj = TwistObjective::new(f, m_list, l)?;
    newton_minimize(&obj, x0, cfg)
}

/// Analytic and finite-difference derivatives at `s = 0` of the
/// interpolation family `Ĥ(F_s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterpolationDerivative<T> {
    pub analytic: T,
    /// `(4Ĥ(h) − Ĥ(2h) − 3Ĥ(0)) / 2h`, from the family at `s ∈ {h, 2h}`.
    pub finite_difference: T,
    /// `(Ĥ(h) − Ĥ(−h)) / 2h`.
    pub central_difference: T,
    pub h: T,
}

impl<T: Real> InterpolationDerivative<T> {
    fn from_family(analytic: T, hh: impl Fn(T) -> Result<T>, h: T) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::InvalidArgument(format!("step {h} must be positive")));
        }
        let h0 = hh(T::zero())?;
        let h1 = hh(h)?;
        let h2 = hh(h * T::lit(2.0))?;
        let hm = hh(-h)?;
        Ok(Self {
            analytic,
            finite_difference: (T::lit(4.0) * h1 - h2 - T::lit(3.0) * h0) / (T::lit(2.0) * h),
            central_difference: (h1 - hm) / (T::lit(2.0) * h),
            h,
        })
    }
}

/// `Ĥ(F_s) = s·L̂ + log((n!/V)∫_Δ e^{−G(s,y)} dy)` with
/// `G(s,y) = (1 − s)⟨y′,ξ⟩ + s·G(y)`.
pub fn interpolation_value<F: Field, T: Real>(g: &PlConcaveFunction<F>, xi: &[T], l_hat: T, s: T) -> Result<T> {
    let n = g.dim();
    if xi.len() > n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: xi.len(),
            context: "torus vector longer than body dimension".into(),
        });
    }
    let lin = AffineForm::projected_pairing(n, xi);
    let it = ExpIntegrator::<T>::default();
    let forms: Vec<AffineForm<T>> = g
        .cells()
        .iter()
        .map(|c| c.affine.to_real::<T>().scale(s).add(&lin.scale(T::one() - s)))
        .collect();
    let lo = g
        .cells()
        .iter()
        .zip(&forms)
        .flat_map(|(c, f)| c.simplex.vertices().iter().map(move |v| f.eval_at(v)))
        .fold(T::infinity(), T::min);
    let parts = g
        .cells()
        .iter()
        .zip(&forms)
        .map(|(c, f)| Ok(it.simplex(&c.simplex, &f.shift(-lo))?.value))
        .collect::<Result<Vec<T>>>()?;
    let vol: T = to_real(&g.domain().volume());
    Ok(s * l_hat + tree_sum(&parts).ln() - lo - vol.ln())
}

/// `d/ds|₀ Ĥ(F_s) = L̂ − (1/Z_ξ)∫_Δ (G(y) − ⟨y′,ξ⟩) e^{−⟨y′,ξ⟩} dy`, next to
/// finite differences of the family.
pub fn interpolation_derivative<F: Field, T: Real>(
    g: &PlConcaveFunction<F>,
    xi: &[T],
    l_hat: T,
    h: T,
) -> Result<InterpolationDerivative<T>> {
    let n = g.dim();
    let lin = AffineForm::projected_pairing(n, xi);
    let it = ExpIntegrator::<T>::default();
    let mut num = Vec::new();
    let mut den = Vec::new();
    for c in g.cells() {
        let w = c.affine.to_real::<T>().sub(&lin);
        num.push(it.simplex_product(&c.simplex, &lin, &[&w])?.value);
        den.push(it.simplex(&c.simplex, &lin)?.value);
    }
    let analytic = l_hat - tree_sum(&num) / tree_sum(&den);
    InterpolationDerivative::from_family(analytic, |s| interpolation_value(g, xi, l_hat, s), h)
}

/// The same family built from the empirical measure at degree `m`:
/// atoms `λ_i/m` with torus weights `α_i/m`.
pub fn interpolation_derivative_atomic<F: Field, T: Real>(
    f: &GradedFiltration<F>,
    m: u32,
    xi: &[T],
    l_hat: T,
    h: T,
) -> Result<InterpolationDerivative<T>> {
    let lv = f.level(m)?;
    let w = lv
        .weights()
        .ok_or_else(|| Error::MissingTorusWeights(format!("degree {m}")))?;
    let r = lv.weight_rank().unwrap_or(0);
    if xi.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: xi.len(),
            context: "torus vector against torus weight rank".into(),
        });
    }
    let mm = F::from_u32(m).expect("degree");
    let c: Vec<T> = lv.values().iter().map(|v| to_real(&(v.clone() / mm.clone()))).collect();
    let t: Vec<T> = w
        .iter()
        .map(|a| {
            a.iter()
                .zip(xi)
                .fold(T::zero(), |s, (x, y)| s + to_real::<F, T>(&(x.clone() / mm.clone())) * *y)
        })
        .collect();
    let nn = T::from_usize_lossy(c.len()).ln();
    let family = |s: T| -> Result<T> {
        let e: Vec<T> = c.iter().zip(&t).map(|(ci, ti)| -((T::one() - s) * *ti + s * *ci)).collect();
        let top = e.iter().copied().fold(T::neg_infinity(), T::max);
        let z = tree_sum(&e.iter().map(|x| (*x - top).exp()).collect::<Vec<_>>());
        Ok(s * l_hat + top + z.ln() - nn)
    };
    let top = t.iter().map(|x| -*x).fold(T::neg_infinity(), T::max);
    let p: Vec<T> = t.iter().map(|x| (-*x - top).exp()).collect();
    let num = tree_sum(&p.iter().zip(c.iter().zip(&t)).map(|(pi, (ci, ti))| *pi * (*ci - *ti)).collect::<Vec<_>>());
    let analytic = l_hat - num / tree_sum(&p);
    InterpolationDerivative::from_family(analytic, family, h)
}

/// Samples of a one-parameter family with the analytic derivatives at the
/// first sample when known.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexScan<T> {
    pub s: Vec<T>,
    pub values: Vec<T>,
    pub derivative_at_start: Option<T>,
    pub second_derivative_at_start: Option<T>,
}

impl<T: Real> ConvexScan<T> {
    /// Each interior sample lies below the chord through its neighbours, up
    /// to `tol`. On an evenly spaced grid this is midpoint convexity.
    pub fn is_midpoint_convex(&self, tol: T) -> bool {
        (1..self.s.len().saturating_sub(1)).all(|i| {
            let (s0, s1, s2) = (self.s[i - 1], self.s[i], self.s[i + 1]);
            let chord = ((s2 - s1) * self.values[i - 1] + (s1 - s0) * self.values[i + 1]) / (s2 - s0);
            self.values[i] <= chord + tol
        })
    }
}

/// `{0, 0.05, …, 0.95}`.
pub fn default_s_grid<T: Real>() -> Vec<T> {
    (0..20).map(|i| T::from_usize_lossy(i) / T::lit(20.0)).collect()
}

/// `f(s) = A^{n+1}·(1/V_g)∫ dμ_g(x) / (s·x + (1 − s)·A)^{n+1}`.
pub fn cone_family_value<T: Real, F: Field>(a: T, mu_g: &DhMeasure<T, F>, n: usize, s: T) -> Result<T> {
    if !(a > T::zero()) {
        return Err(Error::InvalidArgument(format!("A = {a} must be positive")));
    }
    let supp = mu_g.support();
    for x in [supp.lambda_min, supp.lambda_max] {
        if !(s * x + (T::one() - s) * a > T::zero()) {
            return Err(Error::DenominatorVanishes {
                s: s.to_f64().unwrap_or(f64::NAN),
                x: x.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let p = (n + 1) as i32;
    Ok(mu_g.integrate_fn(|x| (a / (s * x + (T::one() - s) * a)).powi(p)))
}

/// `f` on `s_grid ⊂ [0, 1)` with `f′(0) = (n+1)·β_g/A` and
/// `f″(0) = (n+1)(n+2)·E_g[(x − A)^2]/A^2`.
pub fn cone_family<T: Real, F: Field>(a: T, mu_g: &DhMeasure<T, F>, n: usize, s_grid: &[T]) -> Result<ConvexScan<T>> {
    if let Some(s) = s_grid.iter().find(|s| !(**s >= T::zero() && **s < T::one())) {
        return Err(Error::InvalidArgument(format!("grid point {s} outside [0, 1)")));
    }
    let values = s_grid
        .iter()
        .map(|&s| cone_family_value(a, mu_g, n, s))
        .collect::<Result<Vec<T>>>()?;
    let np1 = T::from_usize_lossy(n + 1);
    let beta = a - mu_g.moment(1)?;
    let second = mu_g.central_moment(2, a)? * np1 * T::from_usize_lossy(n + 2) / (a * a);
    let starts_at_zero = s_grid.first().map_or(false, |s| *s == T::zero());
    Ok(ConvexScan {
        s: s_grid.to_vec(),
        values,
        derivative_at_start: starts_at_zero.then(|| np1 * beta / a),
        second_derivative_at_start: starts_at_zero.then_some(second),
    })
}

/// `vol_g(v̄_τ) = V_g/τ^{n+1} − (n+1)∫₀^∞ vol_g(x)/(x+τ)^{n+2} dx`, where
/// `vol_g` vanishes beyond `x_max` and may jump at `breakpoints`.
pub fn vol_g_tau<T: Real>(
    v_g: T,
    volg: impl Fn(T) -> T,
    x_max: T,
    breakpoints: &[T],
    tau: T,
    n: usize,
) -> Result<T> {
    if !(tau > T::zero()) {
        return Err(Error::InvalidArgument(format!("τ = {tau} must be positive")));
    }
    if !(v_g > T::zero()) {
        return Err(Error::InvalidVolumeFunction(format!("total g-volume {v_g} must be positive")));
    }
    if !(x_max >= T::zero()) {
        return Err(Error::InvalidVolumeFunction(format!("support end {x_max} is negative")));
    }
    const SAMPLES: usize = 256;
    let slack = T::lit(1e-12) * v_g;
    let mut prev = v_g;
    for i in 0..=SAMPLES {
        let x = x_max * T::from_usize_lossy(i) / T::from_usize_lossy(SAMPLES);
        let v = volg(x);
        if !(v >= -slack) || v > prev + slack {
            return Err(Error::InvalidVolumeFunction(format!(
                "vol_g is not non-increasing within [0, V_g] at x = {x}"
            )));
        }
        prev = v;
    }
    let mut cuts: Vec<T> = vec![T::zero()];
    cuts.extend(breakpoints.iter().copied().filter(|b| *b > T::zero() && *b < x_max));
    cuts.push(x_max);
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    cuts.dedup();
    let p = (n + 2) as i32;
    let parts: Vec<T> = cuts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| integrate(|x: T| volg(x) / (x + tau).powi(p), w[0], w[1], T::lit(1e-15), T::lit(1e-13)).value)
        .collect();
    Ok(v_g / tau.powi(n as i32 + 1) - T::from_usize_lossy(n + 1) * tree_sum(&parts))
}

/// `vol_g(v̄_τ)` with `vol_g(x) = μ_g([x, ∞))` for a g-weighted DH measure on `[0, ∞)`.
pub fn vol_g_tau_measure<T: Real, F: Field>(mu_g: &DhMeasure<T, F>, tau: T, n: usize) -> Result<T> {
    let supp = mu_g.support();
    if supp.lambda_min < -T::lit(SUPPORT_TOL) {
        return Err(Error::NegativeSupport(supp.lambda_min.to_f64().unwrap_or(f64::NAN)));
    }
    let bps = mu_g.breakpoints();
    let err = std::cell::RefCell::new(None);
    let v = vol_g_tau(
        mu_g.mass(),
        |x| match mu_g.tail_mass(x) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                T::zero()
            }
        },
        supp.lambda_max.max(T::zero()),
        &bps,
        tau,
        n,
    );
    match err.into_inner() {
        Some(e) => Err(e),
        None => v,
    }
}
