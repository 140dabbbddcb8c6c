//! Finite-level filtrations of graded vector spaces.

mod degeneration;
mod distance;
mod level;

use std::collections::BTreeMap;

pub use degeneration::{initial_term_degeneration, weight_filtration, MonomialModel};
pub use distance::{
    common_adapted_basis, d2_squared_level, d_p_level, d_p_sequence, relative_minima, sqrt_triangle_holds,
    CommonBasis, DpSequence,
};
pub use level::FiltrationLevel;

use crate::error::{Error, Result};
use crate::expint::accumulate::tree_sum;
use crate::linalg::{self, Matrix};
use crate::measure::{Atom, DhMeasure};
use crate::scalar::{factorial, to_real, Field, Real};

/// A filtration known on finitely many degrees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedFiltration<F> {
    levels: BTreeMap<u32, FiltrationLevel<F>>,
    pub label: String,
}

impl<F: Field> GradedFiltration<F> {
    pub fn new(label: String, levels: Vec<FiltrationLevel<F>>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for lv in levels {
            let m = lv.degree();
            if map.insert(m, lv).is_some() {
                return Err(Error::InvalidFiltration(format!("degree {m} given twice")));
            }
        }
        Ok(Self { levels: map, label })
    }

    /// All values zero, with the given dimension at each degree.
    pub fn trivial(dims: &[(u32, usize)]) -> Result<Self> {
        let levels = dims
            .iter()
            .map(|&(m, n)| FiltrationLevel::diagonal(m, vec![F::zero(); n], None))
            .collect::<Result<Vec<_>>>()?;
        Self::new("trivial".into(), levels)
    }

    /// The filtration of the projective line by order of vanishing at a point:
    /// degree `m` has values `0, −1, …, −m` on `s_0, …, s_m`, and `s_i` has
    /// torus weight `i`.
    pub fn projective_line(degrees: &[u32]) -> Result<Self> {
        let levels = degrees
            .iter()
            .map(|&m| {
                let vals = (0..=m as i64).map(|i| F::from_i64(-i).expect("integer")).collect();
                let w = (0..=m as i64).map(|i| vec![F::from_i64(i).expect("integer")]).collect();
                FiltrationLevel::diagonal(m, vals, Some(w))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new("projective line".into(), levels)
    }

    pub fn level(&self, m: u32) -> Result<&FiltrationLevel<F>> {
        self.levels.get(&m).ok_or(Error::MissingLevel(m))
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.levels.keys().copied().collect()
    }

    pub fn levels(&self) -> impl Iterator<Item = &FiltrationLevel<F>> {
        self.levels.values()
    }

    pub fn has_torus_weights(&self) -> bool {
        self.levels.values().all(|l| l.weights().is_some())
    }

    fn map(&self, label: String, f: impl Fn(&FiltrationLevel<F>) -> Result<FiltrationLevel<F>>) -> Result<Self> {
        Ok(Self {
            levels: self
                .levels
                .iter()
                .map(|(m, l)| Ok((*m, f(l)?)))
                .collect::<Result<_>>()?,
            label,
        })
    }

    /// `aF(b)`: values `μ ↦ aμ + bm`.
    pub fn rescale_shift(&self, a: &F, b: &F) -> Result<Self> {
        self.map(self.label.clone(), |l| l.rescale_shift(a, b))
    }

    /// `F_ξ`: weight-`α` values shifted by `⟨α, ξ⟩`.
    pub fn twist(&self, xi: &[F]) -> Result<Self> {
        self.map(self.label.clone(), |l| l.twist(xi))
    }

    /// Pairs `(m1, m2)` of stored degrees with `m1 + m2` stored where the top
    /// value fails `λ_max(m1 + m2) ≥ λ_max(m1) + λ_max(m2)`. A multiplicative
    /// filtration has none.
    pub fn superadditivity_violations(&self) -> Vec<(u32, u32)> {
        let top = |m: u32| self.levels.get(&m).and_then(|l| l.values().first().cloned());
        let mut out = Vec::new();
        for &a in self.levels.keys() {
            for &b in self.levels.keys().filter(|&&b| b >= a) {
                if let (Some(x), Some(y), Some(z)) = (top(a), top(b), top(a + b)) {
                    if z < x + y {
                        out.push((a, b));
                    }
                }
            }
        }
        out
    }
}

pub fn successive_minima<F: Field>(lv: &FiltrationLevel<F>) -> Vec<F> {
    lv.successive_minima()
}

pub fn rescale_shift<F: Field>(f: &GradedFiltration<F>, a: &F, b: &F) -> Result<GradedFiltration<F>> {
    f.rescale_shift(a, b)
}

pub fn twist<F: Field>(f: &GradedFiltration<F>, xi: &[F]) -> Result<GradedFiltration<F>> {
    f.twist(xi)
}

/// `ν_m = (n!/m^n) Σ_i δ_{λ_i/m}`, atoms carrying the torus weights `α/m`.
pub fn empirical_dh<F: Field, T: Real>(f: &GradedFiltration<F>, m: u32, n: usize) -> Result<DhMeasure<T, F>> {
    let lv = f.level(m)?;
    let mm = F::from_u32(m).expect("degree representable");
    let mass = factorial::<T>(n) / T::from_u32(m).expect("degree").powi(n as i32);
    let atoms = lv
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| Atom {
            pos: to_real(&(v.clone() / mm.clone())),
            mass,
            weight: lv
                .weights()
                .map(|w| w[i].iter().map(|a| to_real(&(a.clone() / mm.clone()))).collect()),
        })
        .collect();
    DhMeasure::atomic(atoms)
}

/// `Q_m = (1/N) Σ e^{−λ_i/m}`.
pub fn q_m<F: Field, T: Real>(f: &GradedFiltration<F>, m: u32) -> Result<T> {
    let lv = f.level(m)?;
    Ok(mean_exp(lv.values(), m))
}

/// `Ψ_m = 1 − Q_m`.
pub fn psi_m<F: Field, T: Real>(f: &GradedFiltration<F>, m: u32) -> Result<T> {
    Ok(T::one() - q_m::<F, T>(f, m)?)
}

fn mean_exp<F: Field, T: Real>(values: &[F], m: u32) -> T {
    let mm = T::from_u32(m).expect("degree");
    let terms: Vec<T> = values.iter().map(|v| (-to_real::<F, T>(v) / mm).exp()).collect();
    tree_sum(&terms) / T::from_usize_lossy(values.len())
}

/// `(1/N) Σ_j e^{−v(s_j)/m}` for a basis `s_1, …, s_N` of the level-`m` space.
/// At least `q_m`, with equality on adapted bases.
pub fn q_of_basis<F: Field, T: Real>(f: &GradedFiltration<F>, m: u32, basis: &Matrix<F>) -> Result<T> {
    let lv = f.level(m)?;
    let n = lv.dim();
    if basis.len() != n || basis.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: basis.len(),
            context: "basis of the level space".into(),
        });
    }
    let r = linalg::rank(basis, n);
    if r != n {
        return Err(Error::NotABasis(r));
    }
    let vals = basis
        .iter()
        .map(|s| Ok(lv.value_of(s)?.expect("basis vectors are nonzero")))
        .collect::<Result<Vec<F>>>()?;
    Ok(mean_exp(&vals, m))
}
