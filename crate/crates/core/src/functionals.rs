//! Non-Archimedean functionals evaluated on DH measures, with the `L` term
//! supplied by the caller.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expint::ExpIntegrator;
use crate::filtration::GradedFiltration;
use crate::geometry::{AffineForm, Polytope, Simplex};
use crate::linalg;
use crate::measure::DhMeasure;
use crate::scalar::{factorial_field, to_real, Field, Real};

/// Absolute tolerance of the report's consistency flags.
pub const REPORT_TOL: f64 = 1e-10;

/// Where the `L` value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum LPolicy<T> {
    Supplied { value: T },
    /// Product test configurations from a torus weight have `L = 0`.
    WeightTwist,
    /// `L = A(v)` for the filtration of a special valuation.
    SpecialValuation { a: T },
}

impl<T: Real> LPolicy<T> {
    pub fn value(&self) -> T {
        match *self {
            Self::Supplied { value } => value,
            Self::WeightTwist => T::zero(),
            Self::SpecialValuation { a } => a,
        }
    }

    /// `L(aF(b)) = a·L(F) + b`.
    pub fn rescale_shift(&self, a: T, b: T) -> Self {
        Self::Supplied { value: a * self.value() + b }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NaReport<T> {
    /// Total mass.
    pub v: T,
    pub e: T,
    /// `(k, E_k)` for `k = 1..=4`.
    pub e_k: Vec<(usize, T)>,
    pub s_tilde: T,
    pub l: T,
    pub h: T,
    pub d: T,
    /// `(a, Q^(a))` for the requested `a`.
    pub q_a: Vec<(T, T)>,
    /// `|L| ≤ tol`.
    pub normalized: bool,
    /// `S̃ ≤ E + tol`.
    pub s_tilde_le_e: bool,
    pub tol: T,
}

pub fn na_report<T: Real, F: Field>(mu: &DhMeasure<T, F>, l: &LPolicy<T>, a_list: &[T]) -> Result<NaReport<T>> {
    let tol = T::lit(REPORT_TOL);
    let e = mu.moment(1)?;
    let e_k = (1..=4).map(|k| Ok((k, mu.moment(k)?))).collect::<Result<Vec<_>>>()?;
    let s_tilde = -mu.log_exp_moment(T::one());
    let lv = l.value();
    let q_a = a_list
        .iter()
        .map(|&a| {
            if !(a > T::zero()) {
                return Err(Error::InvalidArgument(format!("exponent a = {a} must be positive")));
            }
            Ok((a, mu.exp_moment(a)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NaReport {
        v: mu.mass(),
        e,
        e_k,
        s_tilde,
        l: lv,
        h: lv - s_tilde,
        d: lv - e,
        q_a,
        normalized: lv.abs() <= tol,
        s_tilde_le_e: s_tilde <= e + tol,
        tol,
    })
}

/// `S̃ = −log((1/V)∫ e^{−λ} dμ)`.
pub fn s_tilde<T: Real, F: Field>(mu: &DhMeasure<T, F>) -> T {
    -mu.log_exp_moment(T::one())
}

/// `β̃ = A − S̃`.
pub fn tilde_beta<T: Real, F: Field>(a: T, mu: &DhMeasure<T, F>) -> Result<T> {
    if !(a >= T::zero()) {
        return Err(Error::InvalidArgument(format!("log discrepancy {a} must be nonnegative")));
    }
    Ok(a - s_tilde(mu))
}

/// `β_g = A − E_g` for a g-weighted measure supported in `[0, ∞)`.
pub fn beta_g<T: Real, F: Field>(a: T, mu_g: &DhMeasure<T, F>) -> Result<T> {
    let lo = mu_g.support().lambda_min;
    if lo < -T::lit(REPORT_TOL) {
        return Err(Error::NegativeSupport(lo.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(a - mu_g.moment(1)?)
}

/// A body with the tilted density `e^{−⟨y′,ξ⟩}` on its leading `r` coordinates.
#[derive(Clone, Debug)]
pub struct TiltedBody<F> {
    simplices: Vec<Simplex<F>>,
    dim: usize,
    rank: usize,
    volume: F,
}

/// `log Z`, mean and covariance of `y′` under `e^{−⟨y′,ξ⟩} dy / Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct TiltedMoments<T> {
    pub log_z: T,
    pub mean: Vec<T>,
    pub cov: Vec<Vec<T>>,
}

impl<F: Field> TiltedBody<F> {
    pub fn new(p: &Polytope<F>, rank: usize) -> Result<Self> {
        if rank > p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                found: rank,
                context: "projection rank exceeds body dimension".into(),
            });
        }
        Ok(Self {
            simplices: p.triangulate()?,
            dim: p.dim(),
            rank,
            volume: p.volume(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn volume(&self) -> &F {
        &self.volume
    }

    /// `n!·vol(Δ)`.
    pub fn normalized_volume<T: Real>(&self) -> T {
        to_real(&(self.volume.clone() * factorial_field::<F>(self.dim)))
    }

    fn sum<T: Real>(&self, expo: &AffineForm<T>, weights: &[&AffineForm<T>]) -> Result<T> {
        let it = ExpIntegrator::<T>::default();
        let parts = self
            .simplices
            .iter()
            .map(|s| Ok(it.simplex_product(s, expo, weights)?.value))
            .collect::<Result<Vec<T>>>()?;
        Ok(crate::expint::accumulate::tree_sum(&parts))
    }

    fn exponent<T: Real>(&self, xi: &[T]) -> Result<(AffineForm<T>, T)> {
        if xi.len() != self.rank {
            return Err(Error::DimensionMismatch {
                expected: self.rank,
                found: xi.len(),
                context: "torus vector against projection rank".into(),
            });
        }
        let form = AffineForm::projected_pairing(self.dim, xi);
        // shift by the minimum so the integrand stays at most 1
        let lo = self
            .simplices
            .iter()
            .flat_map(|s| s.vertices().iter().map(|v| form.eval_at(v)))
            .fold(T::infinity(), T::min);
        Ok((form.shift(-lo), lo))
    }

    /// `log ∫_Δ e^{−⟨y′,ξ⟩} dy`.
    pub fn log_partition<T: Real>(&self, xi: &[T]) -> Result<T> {
        let (form, lo) = self.exponent(xi)?;
        Ok(self.sum(&form, &[])?.ln() - lo)
    }

    /// `(1/Z)∫_Δ w(y) e^{−⟨y′,ξ⟩} dy` for an affine `w`.
    pub fn tilted_average<T: Real>(&self, xi: &[T], w: &AffineForm<T>) -> Result<T> {
        let (form, _) = self.exponent(xi)?;
        let z = self.sum(&form, &[])?;
        Ok(self.sum(&form, &[w])? / z)
    }

    pub fn moments<T: Real>(&self, xi: &[T]) -> Result<TiltedMoments<T>> {
        let (form, lo) = self.exponent(xi)?;
        let z = self.sum(&form, &[])?;
        let coords: Vec<AffineForm<T>> = (0..self.rank).map(|j| AffineForm::coordinate(self.dim, j)).collect();
        let mean = coords
            .iter()
            .map(|c| Ok(self.sum(&form, &[c])? / z))
            .collect::<Result<Vec<T>>>()?;
        let centered: Vec<AffineForm<T>> = coords.iter().zip(&mean).map(|(c, m)| c.shift(-*m)).collect();
        let mut cov = vec![vec![T::zero(); self.rank]; self.rank];
        for i in 0..self.rank {
            for j in i..self.rank {
                let v = self.sum(&form, &[&centered[i], &centered[j]])? / z;
                cov[i][j] = v;
                cov[j][i] = v;
            }
        }
        Ok(TiltedMoments {
            log_z: z.ln() - lo,
            mean,
            cov,
        })
    }
}

/// `Fut_ξ(η) = −(n!/V_ξ)∫_Δ ⟨y′,η⟩ e^{−⟨y′,ξ⟩} dy`.
pub fn fut<T: Real, F: Field>(body: &TiltedBody<F>, xi: &[T], eta: &[T]) -> Result<T> {
    if eta.len() != body.rank() {
        return Err(Error::DimensionMismatch {
            expected: body.rank(),
            found: eta.len(),
            context: "direction against projection rank".into(),
        });
    }
    let w = AffineForm::projected_pairing(body.dim(), eta);
    Ok(-body.tilted_average(xi, &w)?)
}

/// `H(wt_ξ) = log((n!/V)∫_Δ e^{−⟨y′,ξ⟩} dy)`, with `V = n!·vol(Δ)`.
pub fn h_weight<T: Real, F: Field>(body: &TiltedBody<F>, xi: &[T]) -> Result<T> {
    let vol: T = to_real(body.volume());
    Ok(body.log_partition(xi)? - vol.ln())
}

/// `dS̃/dλ = a·Σ e_i Q_i / Q`.
pub fn ds_tilde_s<T: Real>(components: &[(T, T)], a: T, q_total: T) -> Result<T> {
    if let Some((_, q)) = components.iter().find(|(_, q)| !(*q > T::zero())) {
        return Err(Error::InvalidArgument(format!("component weight {q} must be positive")));
    }
    let sum: T = components.iter().map(|(_, q)| *q).sum();
    if (sum - q_total).abs() > T::lit(REPORT_TOL) * T::one().max(q_total.abs()) {
        return Err(Error::InconsistentDecomposition {
            sum: sum.to_f64().unwrap_or(f64::NAN),
            total: q_total.to_f64().unwrap_or(f64::NAN),
        });
    }
    let num: T = components.iter().map(|(e, q)| *e * *q).sum();
    Ok(a * num / q_total)
}

/// Exact least-squares fit of `m ↦ Σ_i (λ_i^{(m)})^k` by a polynomial of degree `n + k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EkFit<F> {
    /// Coefficients of `m^0, …, m^{n+k}`.
    pub coefficients: Vec<F>,
    /// Coefficient of `m^{n+k}`.
    pub leading: F,
    /// `leading · n!/V`.
    pub estimate: F,
}

pub fn ek_from_minima_polynomial<F: Field>(
    f: &GradedFiltration<F>,
    degrees: &[u32],
    k: u32,
    n: usize,
    v: &F,
) -> Result<EkFit<F>> {
    let deg = n + k as usize;
    let need = (deg + 1).max(3);
    let mut ds: Vec<u32> = degrees.to_vec();
    ds.sort_unstable();
    ds.dedup();
    if ds.len() < need {
        return Err(Error::InsufficientDegrees { have: ds.len(), need });
    }
    if !v.is_positive() {
        return Err(Error::InvalidArgument(format!("volume {v} must be positive")));
    }
    let rows: Vec<(Vec<F>, F)> = ds
        .iter()
        .map(|&m| {
            let lv = f.level(m)?;
            let y = lv
                .values()
                .iter()
                .fold(F::zero(), |acc, x| acc + num_traits::pow(x.clone(), k as usize));
            let mm = F::from_u32(m).expect("degree");
            let powers = (0..=deg).map(|j| num_traits::pow(mm.clone(), j)).collect();
            Ok((powers, y))
        })
        .collect::<Result<Vec<_>>>()?;
    // normal equations
    let gram: Vec<Vec<F>> = (0..=deg)
        .map(|i| {
            (0..=deg)
                .map(|j| rows.iter().fold(F::zero(), |acc, (p, _)| acc + p[i].clone() * p[j].clone()))
                .collect()
        })
        .collect();
    let rhs: Vec<F> = (0..=deg)
        .map(|i| rows.iter().fold(F::zero(), |acc, (p, y)| acc + p[i].clone() * y.clone()))
        .collect();
    let coefficients = linalg::solve(&gram, &rhs)
        .ok_or_else(|| Error::InvalidArgument("degenerate degree set".into()))?;
    let leading = coefficients[deg].clone();
    let estimate = leading.clone() * factorial_field::<F>(n) / v.clone();
    Ok(EkFit {
        coefficients,
        leading,
        estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expint::PlConcaveFunction;
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    fn uniform(lo: i64, hi: i64) -> DhMeasure<f64> {
        let dom = Polytope::interval(q(lo, 1), q(hi, 1)).unwrap();
        let g = PlConcaveFunction::affine(dom, AffineForm::new(vec![Q::one()], Q::zero())).unwrap();
        DhMeasure::pushforward(g, vec![]).unwrap()
    }

    #[test]
    fn report_on_the_projective_line() {
        let r = na_report(&uniform(-1, 0), &LPolicy::WeightTwist, &[1.0, 2.0]).unwrap();
        assert!((r.e + 0.5).abs() < 1e-15);
        let st = -(1f64.exp() - 1.0).ln();
        assert!((r.s_tilde - st).abs() < 1e-14);
        assert!((r.h + st).abs() < 1e-14);
        assert!(r.s_tilde_le_e && r.normalized);
        assert!((r.q_a[1].1 - ((2f64).exp() - 1.0) / 2.0).abs() < 1e-13);
        assert!((r.e_k[1].1 - 1.0 / 3.0).abs() < 1e-15);

        let d = DhMeasure::<f64>::dirac(0.0, 1.0).unwrap();
        let r = na_report(&d, &LPolicy::Supplied { value: 0.0 }, &[]).unwrap();
        assert_eq!((r.e, r.s_tilde, r.h, r.d), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn shift_moves_s_tilde() {
        let u = uniform(-1, 0);
        let s0 = s_tilde(&u);
        let s1 = s_tilde(&u.affine_transform(1.0, 0.75).unwrap());
        assert!((s1 - s0 - 0.75).abs() < 1e-14);
    }

    #[test]
    fn beta_values() {
        let u = uniform(0, 4);
        let tb = tilde_beta(1.0, &u).unwrap();
        let exact = 1.0 + ((1.0 - (-4f64).exp()) / 4.0).ln();
        assert!((tb - exact).abs() < 1e-14);
        assert!((beta_g(1.0, &u).unwrap() + 1.0).abs() < 1e-14);
        assert!(matches!(beta_g(1.0, &uniform(-1, 0)), Err(Error::NegativeSupport(_))));
        assert_eq!(tilde_beta(0.0, &DhMeasure::<f64>::dirac(0.0, 1.0).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn futaki_on_intervals() {
        let sym = TiltedBody::new(&Polytope::interval(q(-1, 1), Q::one()).unwrap(), 1).unwrap();
        assert!(fut(&sym, &[0.0f64], &[1.0]).unwrap().abs() < 1e-15);
        let p = TiltedBody::new(&Polytope::interval(q(-1, 1), q(2, 1)).unwrap(), 1).unwrap();
        assert!((fut(&p, &[0.0f64], &[1.0]).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn ds_tilde_cases() {
        assert_eq!(ds_tilde_s(&[(1.0, 0.5), (1.0, 1.5)], 3.0, 2.0).unwrap(), 3.0);
        assert_eq!(ds_tilde_s(&[(0.0, 1.0), (1.0, 1.0)], 2.0, 2.0).unwrap(), 1.0);
        assert!(matches!(
            ds_tilde_s(&[(0.0, 1.0)], 2.0, 2.0),
            Err(Error::InconsistentDecomposition { .. })
        ));
    }

    #[test]
    fn ek_fit_on_the_projective_line() {
        let degs: Vec<u32> = (10..=50).collect();
        let f = GradedFiltration::<Q>::projective_line(&degs).unwrap();
        let fit = ek_from_minima_polynomial(&f, &degs, 1, 1, &Q::one()).unwrap();
        assert_eq!(fit.leading, q(-1, 2));
        assert_eq!(fit.coefficients, vec![Q::zero(), q(-1, 2), q(-1, 2)]);
        let fit2 = ek_from_minima_polynomial(&f, &degs, 2, 1, &Q::one()).unwrap();
        assert_eq!(fit2.estimate, q(1, 3));
        let t = GradedFiltration::<Q>::trivial(&[(1, 2), (2, 3), (3, 4)]).unwrap();
        assert!(ek_from_minima_polynomial(&t, &[1, 2, 3], 1, 1, &Q::one()).unwrap().estimate.is_zero());
        assert!(matches!(
            ek_from_minima_polynomial(&f, &[10, 11], 1, 1, &Q::one()),
            Err(Error::InsufficientDegrees { .. })
        ));
    }
}
