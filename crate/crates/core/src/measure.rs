//! Duistermaat–Heckman type measures on the real line.
//!
//! A measure is either a finite sum of atoms, or the pushforward of the
//! weighted Lebesgue measure `n!·e^{−⟨y′,ξ⟩} dy` on a body `Δ` under
//!
//! ```text
//! λ(y) = scale·G(y) + ⟨twist, y′⟩ + offset
//! ```
//!
//! with `G` piecewise linear and `y′` the leading `r` coordinates of `y`.
//! Pushforward queries integrate over `Δ` cell by cell; no density is formed.

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::expint::accumulate::tree_sum;
use crate::expint::quadrature::{integrate, simplex_quadrature};
use crate::expint::kernel::{exp_divided_difference, KernelConfig};
use crate::expint::{ExpIntegrator, PlConcaveFunction, MAX_WEIGHT_ORDER};
use crate::geometry::{halfspace_slice, AffineForm};
use crate::scalar::{factorial, to_real, Field, Real};

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Atom<T> {
    pub pos: T,
    pub mass: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<Vec<T>>,
}

/// Pushforward of `n!·g_ξ dy` on the domain of `transform`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pushforward<T, F> {
    pub transform: PlConcaveFunction<F>,
    /// Density `e^{−⟨y′, ξ⟩}`; its length is the projection rank `r`.
    pub xi: Vec<T>,
    pub scale: T,
    /// Twist added to `λ`, paired with `y′`; same length as `xi`.
    pub twist: Vec<T>,
    pub offset: T,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DhMeasure<T, F = BigRational> {
    Atomic { atoms: Vec<Atom<T>> },
    Pushforward(Pushforward<T, F>),
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SupportInfo<T> {
    pub lambda_min: T,
    pub lambda_max: T,
    pub atom_at_max: bool,
}

/// Quadrature points per axis for non-exponential pushforward integrands.
const QUAD_ORDER: usize = 24;

impl<T: Real, F: Field> DhMeasure<T, F> {
    pub fn atomic(atoms: Vec<Atom<T>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if let Some(a) = atoms.iter().find(|a| !(a.mass > T::zero()) || !a.pos.is_finite()) {
            return Err(Error::InvalidMeasure(format!(
                "atom at {} has mass {}",
                a.pos, a.mass
            )));
        }
        let r = atoms[0].weight.as_ref().map(|w| w.len());
        if atoms.iter().any(|a| a.weight.as_ref().map(|w| w.len()) != r) {
            return Err(Error::InvalidMeasure("atoms carry torus weights of unequal rank".into()));
        }
        Ok(Self::Atomic { atoms })
    }

    pub fn dirac(pos: T, mass: T) -> Result<Self> {
        Self::atomic(vec![Atom { pos, mass, weight: None }])
    }

    /// Pushforward of `n!·e^{−⟨y′,ξ⟩} dy` under `G`; the rank `r` is `xi.len()`.
    pub fn pushforward(transform: PlConcaveFunction<F>, xi: Vec<T>) -> Result<Self> {
        let n = transform.dim();
        if xi.len() > n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: xi.len(),
                context: "density vector longer than body dimension".into(),
            });
        }
        if !transform.domain().is_full_dimensional() {
            return Err(Error::InvalidMeasure("pushforward body has zero volume".into()));
        }
        let r = xi.len();
        Ok(Self::Pushforward(Pushforward {
            transform,
            xi,
            scale: T::one(),
            twist: vec![T::zero(); r],
            offset: T::zero(),
        }))
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Self::Atomic { .. })
    }

    pub fn atoms(&self) -> Option<&[Atom<T>]> {
        match self {
            Self::Atomic { atoms } => Some(atoms),
            Self::Pushforward(_) => None,
        }
    }

    // Real affine form giving λ on one cell.
    fn cell_form(p: &Pushforward<T, F>, piece: &AffineForm<F>) -> AffineForm<T> {
        let n = p.transform.dim();
        let mut f = piece.to_real::<T>().scale(p.scale).shift(p.offset);
        for (g, t) in f.gradient.iter_mut().zip(&p.twist) {
            *g = *g + *t;
        }
        debug_assert_eq!(f.dim(), n);
        f
    }

    fn density_form(p: &Pushforward<T, F>) -> AffineForm<T> {
        AffineForm::projected_pairing(p.transform.dim(), &p.xi)
    }

    /// `∫ (λ − c)^k e^{−a(λ − r)} dμ` with `r` the reference point.
    fn raw(&self, a: T, k: usize, c: T, r: T) -> Result<T> {
        if k > MAX_WEIGHT_ORDER {
            return Err(Error::UnsupportedOrder(k));
        }
        match self {
            Self::Atomic { atoms } => {
                let terms: Vec<T> = atoms
                    .iter()
                    .map(|at| at.mass * (at.pos - c).powi(k as i32) * (-(a * (at.pos - r))).exp())
                    .collect();
                Ok(tree_sum(&terms))
            }
            Self::Pushforward(p) => {
                let it = ExpIntegrator::<T>::default();
                let g = Self::density_form(p);
                let parts = p
                    .transform
                    .cells()
                    .iter()
                    .map(|cell| {
                        let lam = Self::cell_form(p, &cell.affine);
                        let expo = lam.scale(a).shift(-(a * r)).add(&g);
                        let w = lam.shift(-c);
                        let ws = vec![&w; k];
                        Ok(it.simplex_product(&cell.simplex, &expo, &ws)?.value)
                    })
                    .collect::<Result<Vec<T>>>()?;
                Ok(tree_sum(&parts) * factorial::<T>(p.transform.dim()))
            }
        }
    }

    fn reference(&self, a: T) -> T {
        let s = self.support();
        if a >= T::zero() {
            s.lambda_min
        } else {
            s.lambda_max
        }
    }

    /// Total mass: `Σ masses` or `n!·∫_Δ g dy`.
    pub fn mass(&self) -> T {
        self.raw(T::zero(), 0, T::zero(), T::zero()).expect("order zero")
    }

    /// `(1/mass)·∫ λ^k dμ` for `k ≤ 4`.
    pub fn moment(&self, k: usize) -> Result<T> {
        Ok(self.raw(T::zero(), k, T::zero(), T::zero())? / self.mass())
    }

    /// `(1/mass)·∫ (λ − c)^k dμ`.
    pub fn central_moment(&self, k: usize, c: T) -> Result<T> {
        Ok(self.raw(T::zero(), k, c, T::zero())? / self.mass())
    }

    /// `(1/mass)·∫ e^{−aλ} dμ`.
    pub fn exp_moment(&self, a: T) -> T {
        self.log_exp_moment(a).exp()
    }

    /// `log((1/mass)·∫ e^{−aλ} dμ)`, evaluated without overflow.
    pub fn log_exp_moment(&self, a: T) -> T {
        let r = self.reference(a);
        let v = self.raw(a, 0, T::zero(), r).expect("order zero");
        v.ln() - a * r - self.mass().ln()
    }

    /// Mean of the tilted probability measure `e^{−aλ}dμ / ∫e^{−aλ}dμ`.
    pub fn tilted_mean(&self, a: T) -> T {
        let r = self.reference(a);
        let z = self.raw(a, 0, T::zero(), r).expect("order zero");
        let c = self.raw(a, 1, r, r).expect("order one") / z;
        r + c
    }

    /// Variance of the tilted probability measure.
    pub fn tilted_variance(&self, a: T) -> T {
        let r = self.reference(a);
        let z = self.raw(a, 0, T::zero(), r).expect("order zero");
        let mean = self.tilted_mean(a);
        (self.raw(a, 2, mean, r).expect("order two") / z).max(T::zero())
    }

    /// `k`-th central moment of the tilted probability measure.
    pub fn tilted_central_moment(&self, a: T, k: usize) -> Result<T> {
        let r = self.reference(a);
        let z = self.raw(a, 0, T::zero(), r)?;
        let mean = self.tilted_mean(a);
        Ok(self.raw(a, k, mean, r)? / z)
    }

    /// `(1/mass)·∫ φ(λ) dμ` for a smooth `φ`.
    pub fn integrate_fn(&self, phi: impl Fn(T) -> T + Sync) -> T {
        match self {
            Self::Atomic { atoms } => {
                let terms: Vec<T> = atoms.iter().map(|a| a.mass * phi(a.pos)).collect();
                tree_sum(&terms) / self.mass()
            }
            Self::Pushforward(p) => {
                let g = Self::density_form(p);
                let parts: Vec<T> = p
                    .transform
                    .cells()
                    .iter()
                    .map(|cell| {
                        let lam = Self::cell_form(p, &cell.affine);
                        if p.transform.dim() == 1 {
                            let v = cell.simplex.vertices();
                            let (a, b): (T, T) = (to_real(&v[0][0]), to_real(&v[1][0]));
                            let (a, b) = if a < b { (a, b) } else { (b, a) };
                            return integrate(
                                |y: T| phi(lam.eval(&[y])) * (-g.eval(&[y])).exp(),
                                a,
                                b,
                                T::zero(),
                                T::lit(1e-14),
                            )
                            .value;
                        }
                        simplex_quadrature(&cell.simplex, QUAD_ORDER, |y: &[T]| {
                            phi(lam.eval(y)) * (-g.eval(y)).exp()
                        })
                    })
                    .collect();
                tree_sum(&parts) * factorial::<T>(p.transform.dim()) / self.mass()
            }
        }
    }

    /// `λ ↦ aλ + b` for `a > 0`.
    pub fn affine_transform(&self, a: T, b: T) -> Result<Self> {
        if !(a > T::zero()) {
            return Err(Error::NonpositiveScale(format!("{a}")));
        }
        Ok(match self {
            Self::Atomic { atoms } => Self::Atomic {
                atoms: atoms
                    .iter()
                    .map(|at| Atom {
                        pos: a * at.pos + b,
                        mass: at.mass,
                        weight: at.weight.clone(),
                    })
                    .collect(),
            },
            Self::Pushforward(p) => Self::Pushforward(Pushforward {
                transform: p.transform.clone(),
                xi: p.xi.clone(),
                scale: a * p.scale,
                twist: p.twist.iter().map(|t| a * *t).collect(),
                offset: a * p.offset + b,
            }),
        })
    }

    /// Moves each point by `⟨weight, ξ⟩`: atoms by their torus weight,
    /// pushforwards by `y′`.
    pub fn twist(&self, xi: &[T]) -> Result<Self> {
        match self {
            Self::Atomic { atoms } => {
                let atoms = atoms
                    .iter()
                    .map(|at| {
                        let w = at
                            .weight
                            .as_ref()
                            .ok_or_else(|| Error::MissingTorusWeights("atom without weight".into()))?;
                        check_rank(w.len(), xi.len())?;
                        Ok(Atom {
                            pos: at.pos + dot(w, xi),
                            mass: at.mass,
                            weight: at.weight.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::Atomic { atoms })
            }
            Self::Pushforward(p) => {
                check_rank(p.twist.len(), xi.len())?;
                let mut q = p.clone();
                for (t, x) in q.twist.iter_mut().zip(xi) {
                    *t = *t + *x;
                }
                Ok(Self::Pushforward(q))
            }
        }
    }

    /// Reweights by `g_ξ = e^{−⟨weight, ξ⟩}`.
    pub fn g_weighted(&self, xi: &[T]) -> Result<Self> {
        match self {
            Self::Atomic { atoms } => {
                let atoms = atoms
                    .iter()
                    .map(|at| {
                        let w = at
                            .weight
                            .as_ref()
                            .ok_or_else(|| Error::MissingTorusWeights("atom without weight".into()))?;
                        check_rank(w.len(), xi.len())?;
                        Ok(Atom {
                            pos: at.pos,
                            mass: at.mass * (-dot(w, xi)).exp(),
                            weight: at.weight.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::atomic(atoms)
            }
            Self::Pushforward(p) => {
                check_rank(p.xi.len(), xi.len())?;
                let mut q = p.clone();
                for (t, x) in q.xi.iter_mut().zip(xi) {
                    *t = *t + *x;
                }
                Ok(Self::Pushforward(q))
            }
        }
    }

    /// Same measure scaled to total mass one.
    pub fn normalized(&self) -> Self {
        match self {
            Self::Atomic { atoms } => {
                let m = self.mass();
                Self::Atomic {
                    atoms: atoms
                        .iter()
                        .map(|a| Atom {
                            pos: a.pos,
                            mass: a.mass / m,
                            weight: a.weight.clone(),
                        })
                        .collect(),
                }
            }
            // queries on pushforwards already divide by the mass where needed
            Self::Pushforward(_) => self.clone(),
        }
    }

    pub fn support(&self) -> SupportInfo<T> {
        match self {
            Self::Atomic { atoms } => {
                let lo = atoms.iter().fold(T::infinity(), |m, a| m.min(a.pos));
                let hi = atoms.iter().fold(T::neg_infinity(), |m, a| m.max(a.pos));
                SupportInfo {
                    lambda_min: lo,
                    lambda_max: hi,
                    atom_at_max: true,
                }
            }
            Self::Pushforward(p) => {
                let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
                let mut flat = T::neg_infinity();
                for cell in p.transform.cells() {
                    let f = Self::cell_form(p, &cell.affine);
                    for v in cell.simplex.vertices() {
                        let x = f.eval_at(v);
                        lo = lo.min(x);
                        hi = hi.max(x);
                    }
                    if f.gradient.iter().all(|g| *g == T::zero()) {
                        flat = flat.max(f.constant);
                    }
                }
                SupportInfo {
                    lambda_min: lo,
                    lambda_max: hi,
                    // only the top level of a concave function can be flat
                    atom_at_max: flat == hi,
                }
            }
        }
    }

    /// Raw mass of `{λ ≥ x}`.
    pub fn tail_mass(&self, x: T) -> Result<T> {
        match self {
            Self::Atomic { atoms } => {
                let t: Vec<T> = atoms.iter().filter(|a| a.pos >= x).map(|a| a.mass).collect();
                Ok(tree_sum(&t))
            }
            Self::Pushforward(p) => {
                let s = self.support();
                if x <= s.lambda_min {
                    return Ok(self.mass());
                }
                if x > s.lambda_max {
                    return Ok(T::zero());
                }
                let g = Self::density_form(p);
                if p.transform.dim() == 1 {
                    let parts: Vec<T> = p
                        .transform
                        .cells()
                        .iter()
                        .map(|cell| {
                            let v = cell.simplex.vertices();
                            let lam = Self::cell_form(p, &cell.affine);
                            interval_tail(to_real(&v[0][0]), to_real(&v[1][0]), &lam, &g, x)
                        })
                        .collect();
                    return Ok(tree_sum(&parts));
                }
                if p.transform.dim() == 2 {
                    let cfg = KernelConfig::default();
                    let parts: Vec<T> = p
                        .transform
                        .cells()
                        .iter()
                        .map(|cell| {
                            let v: Vec<[T; 2]> = cell
                                .simplex
                                .vertices()
                                .iter()
                                .map(|y| [to_real(&y[0]), to_real(&y[1])])
                                .collect();
                            let lam = Self::cell_form(p, &cell.affine);
                            triangle_tail(&v, &lam, &g, x, &cfg)
                        })
                        .collect();
                    return Ok(tree_sum(&parts) * factorial::<T>(2));
                }
                let it = ExpIntegrator::<T>::default();
                let level: F = F::from_f64(x.to_f64().unwrap_or(f64::NAN))
                    .ok_or_else(|| Error::InvalidArgument(format!("level {x} not representable")))?;
                let mut parts = Vec::new();
                for cell in p.transform.cells() {
                    let form = Self::cell_form(p, &cell.affine)
                        .to_field::<F>()
                        .ok_or_else(|| Error::InvalidArgument("transform not representable exactly".into()))?;
                    for s in halfspace_slice(&cell.simplex, &form, &level) {
                        parts.push(it.simplex(&s, &g)?.value);
                    }
                }
                Ok(tree_sum(&parts) * factorial::<T>(p.transform.dim()))
            }
        }
    }

    /// Cumulative distribution of the normalized measure.
    pub fn cdf(&self, x: T) -> Result<T> {
        match self {
            Self::Atomic { atoms } => {
                let t: Vec<T> = atoms.iter().filter(|a| a.pos <= x).map(|a| a.mass).collect();
                Ok(tree_sum(&t) / self.mass())
            }
            Self::Pushforward(_) => {
                // a flat top carries an atom at λ_max, which {λ ≥ x} would count
                if x >= self.support().lambda_max {
                    return Ok(T::one());
                }
                Ok((T::one() - self.tail_mass(x)? / self.mass()).max(T::zero()))
            }
        }
    }

    /// `(x, cdf(x))` at `k ≥ 2` equally spaced points across the support.
    pub fn cdf_samples(&self, k: usize) -> Result<Vec<(T, T)>> {
        let s = self.support();
        let k = k.max(2);
        (0..k)
            .map(|i| {
                let x = if i + 1 == k {
                    s.lambda_max
                } else {
                    s.lambda_min + (s.lambda_max - s.lambda_min) * T::from_usize_lossy(i) / T::from_usize_lossy(k - 1)
                };
                Ok((x, self.cdf(x)?))
            })
            .collect()
    }

    pub(crate) fn breakpoints(&self) -> Vec<T> {
        match self {
            Self::Atomic { atoms } => atoms.iter().map(|a| a.pos).collect(),
            Self::Pushforward(p) => p
                .transform
                .cells()
                .iter()
                .flat_map(|c| {
                    let f = Self::cell_form(p, &c.affine);
                    c.simplex.vertices().iter().map(move |v| f.eval_at(v)).collect::<Vec<_>>()
                })
                .collect(),
        }
    }
}

/// `∫ e^{−g(y)} dy` over the part of the segment between `y0` and `y1` where `λ ≥ x`.
fn interval_tail<T: Real>(y0: T, y1: T, lam: &AffineForm<T>, g: &AffineForm<T>, x: T) -> T {
    let (mut lo, mut hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
    let (l1, l0) = (lam.gradient[0], lam.constant);
    if l1 == T::zero() {
        if l0 < x {
            return T::zero();
        }
    } else {
        let cut = (x - l0) / l1;
        if l1 > T::zero() {
            lo = lo.max(cut);
        } else {
            hi = hi.min(cut);
        }
    }
    if hi <= lo {
        return T::zero();
    }
    let len = hi - lo;
    let z = g.gradient.first().copied().unwrap_or(T::zero()) * len;
    let start = (-g.eval(&[lo])).exp();
    // (1 − e^{−z})/z without cancellation
    let phi = if z == T::zero() { T::one() } else { -(-z).exp_m1() / z };
    start * len * phi
}

/// `∫ e^{−g(y)} dy` over the part of the triangle `v` where `λ ≥ x`.
fn triangle_tail<T: Real>(v: &[[T; 2]], lam: &AffineForm<T>, g: &AffineForm<T>, x: T, cfg: &KernelConfig<T>) -> T {
    let d: Vec<T> = v.iter().map(|p| lam.eval(p) - x).collect();
    // clip the triangle against d ≥ 0, keeping the vertex order
    let mut poly: Vec<[T; 2]> = Vec::with_capacity(4);
    for i in 0..3 {
        let j = (i + 1) % 3;
        if d[i] >= T::zero() {
            poly.push(v[i]);
        }
        if (d[i] >= T::zero()) != (d[j] >= T::zero()) {
            let t = d[i] / (d[i] - d[j]);
            poly.push([v[i][0] + t * (v[j][0] - v[i][0]), v[i][1] + t * (v[j][1] - v[i][1])]);
        }
    }
    if poly.len() < 3 {
        return T::zero();
    }
    let parts: Vec<T> = (1..poly.len() - 1)
        .map(|k| {
            let (a, b, c) = (poly[0], poly[k], poly[k + 1]);
            let det = ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
            let nodes = [g.eval(&a), g.eval(&b), g.eval(&c)];
            det * exp_divided_difference(&nodes, cfg).value
        })
        .collect();
    tree_sum(&parts)
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + *x * *y)
}

fn check_rank(have: usize, got: usize) -> Result<()> {
    if have != got {
        return Err(Error::DimensionMismatch {
            expected: have,
            found: got,
            context: "torus vector rank".into(),
        });
    }
    Ok(())
}

/// Absolute tolerance for integrating a difference of distribution functions
/// over an interval of length `len`: the functions themselves are only good
/// to a few ulps, so nothing below that is requested.
fn cdf_tol<T: Real>(tol: T, len: T) -> T {
    tol.max(T::epsilon() * T::lit(16.0) * len)
}

/// Wasserstein-1 distance between the normalized measures,
/// `∫ |F_μ(x) − F_ν(x)| dx`.
pub fn wasserstein1<T: Real, F: Field>(mu: &DhMeasure<T, F>, nu: &DhMeasure<T, F>) -> Result<T> {
    let mut pts = mu.breakpoints();
    pts.extend(nu.breakpoints());
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup();
    if mu.is_atomic() && nu.is_atomic() {
        // both CDFs are constant between consecutive breakpoints
        let mut terms = Vec::with_capacity(pts.len());
        for w in pts.windows(2) {
            terms.push((mu.cdf(w[0])? - nu.cdf(w[0])?).abs() * (w[1] - w[0]));
        }
        return Ok(tree_sum(&terms));
    }
    if mu.is_atomic() || nu.is_atomic() {
        let (atomic, smooth) = if mu.is_atomic() { (mu, nu) } else { (nu, mu) };
        return w1_mixed(atomic, smooth, &pts);
    }
    let mut terms = Vec::with_capacity(pts.len());
    let mut err = None;
    for w in pts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let r = integrate(
            |x: T| match (mu.cdf(x), nu.cdf(x)) {
                (Ok(a), Ok(b)) => (a - b).abs(),
                (Err(e), _) | (_, Err(e)) => {
                    err.get_or_insert(e);
                    T::zero()
                }
            },
            w[0],
            w[1],
            cdf_tol(T::lit(1e-13), w[1] - w[0]),
            T::lit(1e-11),
        );
        terms.push(r.value);
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(tree_sum(&terms))
}

/// `∫|F_a − F_s|` with `F_a` a step function and `F_s` continuous and
/// non-decreasing: on each piece the integrand has at most one kink, found by
/// false position, and is smooth on either side of it.
fn w1_mixed<T: Real, F: Field>(atomic: &DhMeasure<T, F>, smooth: &DhMeasure<T, F>, pts: &[T]) -> Result<T> {
    let mut terms = Vec::with_capacity(pts.len());
    let err = std::cell::RefCell::new(None);
    let fs = |x: T| match smooth.cdf(x) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            T::zero()
        }
    };
    let piece =
        |a: T, b: T, c: T| integrate(|x: T| (fs(x) - c).abs(), a, b, cdf_tol(T::lit(1e-15), b - a), T::lit(1e-12)).value;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let c = atomic.cdf(a)?;
        let (mut lo, mut hi) = (a, b);
        let (mut dlo, mut dhi) = (fs(lo) - c, fs(hi) - c);
        if dlo >= T::zero() || dhi <= T::zero() {
            terms.push(piece(a, b, c));
            continue;
        }
        // Illinois false position on the monotone difference
        let mut side = 0i8;
        for _ in 0..100 {
            let x = (lo * dhi - hi * dlo) / (dhi - dlo);
            let x = if x > lo && x < hi { x } else { (lo + hi) * T::lit(0.5) };
            let d = fs(x) - c;
            if d == T::zero() || hi - lo <= T::epsilon() * (T::one() + x.abs()) * T::lit(4.0) {
                lo = x;
                hi = x;
                break;
            }
            if d < T::zero() {
                lo = x;
                dlo = d;
                if side == -1 {
                    dhi = dhi * T::lit(0.5);
                }
                side = -1;
            } else {
                hi = x;
                dhi = d;
                if side == 1 {
                    dlo = dlo * T::lit(0.5);
                }
                side = 1;
            }
        }
        let x = (lo + hi) * T::lit(0.5);
        terms.push(piece(a, x, c) + piece(x, b, c));
    }
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(tree_sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polytope;
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    type Q = BigRational;

    /// DH measure of the projective line: uniform on [−1, 0].
    fn uniform_m1_0() -> DhMeasure<f64> {
        let dom = Polytope::interval(-Q::one(), Q::zero()).unwrap();
        let g = PlConcaveFunction::affine(dom, AffineForm::new(vec![Q::one()], Q::zero())).unwrap();
        DhMeasure::pushforward(g, vec![]).unwrap()
    }

    #[test]
    fn planar_tail_matches_exact_slicing() {
        let q = |n: i64, d: i64| Q::new(n.into(), d.into());
        let dom = Polytope::from_vertices(
            2,
            vec![vec![q(0, 1), q(0, 1)], vec![q(3, 1), q(0, 1)], vec![q(3, 1), q(2, 1)], vec![q(-1, 1), q(5, 2)]],
        )
        .unwrap();
        let pieces = [
            AffineForm::new(vec![q(1, 1), q(1, 2)], q(0, 1)),
            AffineForm::new(vec![q(-1, 1), q(1, 1)], q(2, 1)),
            AffineForm::new(vec![q(0, 1), q(-3, 2)], q(3, 1)),
        ];
        let g = PlConcaveFunction::from_min_of_affine(dom, &pieces).unwrap();
        let xi = vec![0.375, -0.5];
        let mu = DhMeasure::<f64>::pushforward(g.clone(), xi.clone()).unwrap();
        let shift = AffineForm::projected_pairing(2, &xi);
        for x in [q(-1, 1), q(1, 4), q(3, 4), q(5, 4), q(2, 1)] {
            let exact = ExpIntegrator::<f64>::default().superlevel(&g, &x, &shift).unwrap().value * 2.0;
            let fast = mu.tail_mass(to_real(&x)).unwrap();
            assert!((fast - exact).abs() <= 1e-13 * exact.max(1e-300), "{x}: {fast} vs {exact}");
        }
    }

    #[test]
    fn flat_top_atom_counts_in_the_cdf() {
        let dom = Polytope::interval(Q::zero(), Q::from_integer(2.into())).unwrap();
        // λ = min(y, 1): half the mass sits at λ = 1
        let g = PlConcaveFunction::from_min_of_affine(
            dom,
            &[AffineForm::new(vec![Q::one()], Q::zero()), AffineForm::constant(1, Q::one())],
        )
        .unwrap();
        let mu = DhMeasure::<f64>::pushforward(g, vec![]).unwrap();
        assert!(mu.support().atom_at_max);
        assert!((mu.cdf(0.999_999).unwrap() - 0.4999995).abs() < 1e-12);
        assert_eq!(mu.cdf(1.0).unwrap(), 1.0);
        assert_eq!(mu.cdf_samples(5).unwrap().last().unwrap().1, 1.0);
    }

    #[test]
    fn masses() {
        assert!((uniform_m1_0().mass() - 1.0).abs() < 1e-15);
        assert_eq!(DhMeasure::<f64>::dirac(0.0, 2.0).unwrap().mass(), 2.0);
        let dom = Polytope::interval(-Q::one(), Q::one()).unwrap();
        let g = PlConcaveFunction::affine(dom, AffineForm::new(vec![Q::from_integer(3.into())], Q::one())).unwrap();
        let mu: DhMeasure<f64> = DhMeasure::pushforward(g, vec![0.0]).unwrap();
        assert!((mu.mass() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn moments_of_the_uniform_measure() {
        let u = uniform_m1_0();
        assert_eq!(u.moment(0).unwrap(), 1.0);
        assert!((u.moment(1).unwrap() + 0.5).abs() < 1e-15);
        assert!((u.moment(2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((u.exp_moment(1.0) - (1f64.exp() - 1.0)).abs() < 1e-14);
        let d = DhMeasure::<f64>::dirac(1.5, 1.0).unwrap();
        assert!((d.moment(3).unwrap() - 3.375).abs() < 1e-15);
        assert_eq!(DhMeasure::<f64>::dirac(0.0, 1.0).unwrap().exp_moment(2.0), 1.0);
        assert!(matches!(u.moment(5), Err(Error::UnsupportedOrder(5))));
    }

    #[test]
    fn affine_pushforward_of_uniform() {
        let u = uniform_m1_0().affine_transform(2.0, 1.0).unwrap();
        let s = u.support();
        assert_eq!((s.lambda_min, s.lambda_max, s.atom_at_max), (-1.0, 1.0, false));
        assert!(u.moment(1).unwrap().abs() < 1e-15);
        let base = uniform_m1_0();
        let lhs = u.exp_moment(1.0);
        let rhs = base.exp_moment(2.0) * (-1f64).exp();
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
        assert!(uniform_m1_0().affine_transform(0.0, 1.0).is_err());
    }

    #[test]
    fn supports() {
        let s = uniform_m1_0().support();
        assert_eq!((s.lambda_min, s.lambda_max, s.atom_at_max), (-1.0, 0.0, false));
        let d = DhMeasure::<f64>::dirac(3.0, 1.0).unwrap().support();
        assert_eq!((d.lambda_min, d.lambda_max, d.atom_at_max), (3.0, 3.0, true));
    }

    #[test]
    fn tilted_statistics_of_uniform() {
        // on [0, 4] with weight e^{−λ}: mean 1 − 4e^{−4}/(1 − e^{−4})
        let u = uniform_m1_0().affine_transform(4.0, 4.0).unwrap();
        let e4 = (-4f64).exp();
        let mean = 1.0 - 4.0 * e4 / (1.0 - e4);
        assert!((u.tilted_mean(1.0) - mean).abs() < 1e-13);
        let var = 1.0 - 16.0 * e4 / (1.0 - e4).powi(2);
        assert!((u.tilted_variance(1.0) - var).abs() < 1e-13);
        assert!((u.log_exp_moment(1.0) - ((1.0 - e4) / 4.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn cdf_and_wasserstein() {
        let u = uniform_m1_0();
        assert!((u.cdf(-0.25).unwrap() - 0.75).abs() < 1e-15);
        let d = DhMeasure::<f64>::dirac(0.0, 1.0).unwrap();
        // W1(δ_0, U[−1,0]) = 1/2
        let w = wasserstein1(&d, &u).unwrap();
        assert!((w - 0.5).abs() < 1e-11);
        let a = DhMeasure::<f64>::dirac(1.0, 3.0).unwrap();
        assert!((wasserstein1(&d, &a).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(wasserstein1(&u, &u).unwrap(), 0.0);
    }

    #[test]
    fn twisting_and_reweighting_atoms() {
        let mu = DhMeasure::<f64>::atomic(vec![
            Atom { pos: 0.0, mass: 1.0, weight: Some(vec![1.0]) },
            Atom { pos: 1.0, mass: 1.0, weight: Some(vec![-1.0]) },
        ])
        .unwrap();
        let t = mu.twist(&[0.5]).unwrap();
        let s = t.support();
        assert_eq!((s.lambda_min, s.lambda_max), (0.5, 0.5));
        let g = mu.g_weighted(&[1.0]).unwrap();
        assert!((g.mass() - ((-1f64).exp() + 1f64.exp())).abs() < 1e-15);
        assert!(DhMeasure::<f64>::dirac(0.0, 1.0).unwrap().twist(&[1.0]).is_err());
    }

    #[test]
    fn integrate_fn_agrees_with_moments() {
        let u = uniform_m1_0().affine_transform(3.0, 1.0).unwrap();
        let m2 = u.integrate_fn(|x| x * x);
        assert!((m2 - u.moment(2).unwrap()).abs() < 1e-13);
        let inv = u.integrate_fn(|x| 1.0 / (x + 3.0));
        // λ uniform on [−2, 1]: (1/3)·log(4/1)
        assert!((inv - (4f64).ln() / 3.0).abs() < 1e-13);
        let _ = Q::zero();
    }
}
