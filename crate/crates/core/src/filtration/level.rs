use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::Field;

/// One degree of a filtration, stored through an adapted basis: `F^λ` is the
/// span of the basis rows whose value is at least `λ`.
///
/// Rows are kept in non-increasing value order (ties in input order), so the
/// value list is the successive-minima multiset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiltrationLevel<F> {
    degree: u32,
    basis: Matrix<F>,
    values: Vec<F>,
    weights: Option<Vec<Vec<F>>>,
}

/// Extends `base` by rows of `span` that are independent of it.
pub(crate) fn complement<F: Field>(base: &[Vec<F>], span: &[Vec<F>], ncols: usize) -> Matrix<F> {
    let mut cur = base.to_vec();
    let mut r = linalg::rank(&cur, ncols);
    let mut out = Vec::new();
    for v in span {
        cur.push(v.clone());
        let r2 = linalg::rank(&cur, ncols);
        if r2 > r {
            out.push(v.clone());
            r = r2;
        } else {
            cur.pop();
        }
    }
    out
}

impl<F: Field> FiltrationLevel<F> {
    fn sorted(degree: u32, basis: Matrix<F>, values: Vec<F>, weights: Option<Vec<Vec<F>>>) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[j].cmp(&values[i]));
        Self {
            degree,
            basis: order.iter().map(|&i| basis[i].clone()).collect(),
            values: order.iter().map(|&i| values[i].clone()).collect(),
            weights: weights.map(|w| order.iter().map(|&i| w[i].clone()).collect()),
        }
    }

    fn check_weights(n: usize, weights: &Option<Vec<Vec<F>>>) -> Result<()> {
        if let Some(w) = weights {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: w.len(),
                    context: "one torus weight per basis vector".into(),
                });
            }
            if let Some(r) = w.first().map(|a| a.len()) {
                if w.iter().any(|a| a.len() != r) {
                    return Err(Error::InvalidFiltration("torus weights of unequal rank".into()));
                }
            }
        }
        Ok(())
    }

    /// Values on the standard basis `e_1, …, e_N`.
    pub fn diagonal(degree: u32, values: Vec<F>, weights: Option<Vec<Vec<F>>>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidFiltration("degree must be at least 1".into()));
        }
        let n = values.len();
        Self::check_weights(n, &weights)?;
        Ok(Self::sorted(degree, linalg::identity(n), values, weights))
    }

    /// Values on an arbitrary basis of `F^N`.
    pub fn adapted(degree: u32, basis: Matrix<F>, values: Vec<F>, weights: Option<Vec<Vec<F>>>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidFiltration("degree must be at least 1".into()));
        }
        let n = values.len();
        if basis.len() != n || basis.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: basis.len(),
                context: "adapted basis must be N vectors of length N".into(),
            });
        }
        let r = linalg::rank(&basis, n);
        if r != n {
            return Err(Error::NotABasis(r));
        }
        Self::check_weights(n, &weights)?;
        Ok(Self::sorted(degree, basis, values, weights))
    }

    /// From a flag: for each jump value `λ`, rows spanning `F^λ`. The flag
    /// must be nested and end in the whole space.
    ///
    /// `coordinate_weights` gives a torus weight to each standard basis
    /// vector; every flag subspace must then be spanned by weight vectors, and
    /// the adapted basis is chosen inside the weight spaces.
    pub fn from_flags(
        degree: u32,
        dim: usize,
        flags: Vec<(F, Matrix<F>)>,
        coordinate_weights: Option<Vec<Vec<F>>>,
    ) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidFiltration("degree must be at least 1".into()));
        }
        Self::check_weights(dim, &coordinate_weights)?;
        let mut flags = flags;
        flags.sort_by(|a, b| b.0.cmp(&a.0));
        for w in flags.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidFiltration(format!("jump value {} repeated", w[0].0)));
            }
        }
        let mut spaces: Vec<(F, Matrix<F>)> = Vec::with_capacity(flags.len());
        for (lam, rows) in flags {
            if rows.iter().any(|r| r.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: rows.iter().map(|r| r.len()).find(|&l| l != dim).unwrap_or(0),
                    context: format!("flag rows at value {lam}"),
                });
            }
            let b = linalg::span_basis(&rows, dim);
            if let Some((plam, prev)) = spaces.last() {
                if linalg::sum_spaces(prev, &b, dim).len() != b.len() {
                    return Err(Error::InvalidFiltration(format!(
                        "F^{lam} does not contain F^{plam}"
                    )));
                }
                if b.len() == prev.len() {
                    return Err(Error::InvalidFiltration(format!("no jump at value {lam}")));
                }
            }
            spaces.push((lam, b));
        }
        match spaces.last() {
            Some((_, b)) if b.len() == dim => {}
            _ => {
                return Err(Error::InvalidFiltration(
                    "lowest flag subspace must be the whole space".into(),
                ))
            }
        }

        // weight classes of coordinates
        let mut classes: BTreeMap<Vec<F>, Matrix<F>> = BTreeMap::new();
        match &coordinate_weights {
            Some(ws) => {
                for (j, a) in ws.iter().enumerate() {
                    let mut e = vec![F::zero(); dim];
                    e[j] = F::one();
                    classes.entry(a.clone()).or_default().push(e);
                }
            }
            None => {
                classes.insert(Vec::new(), linalg::identity(dim));
            }
        }
        if coordinate_weights.is_some() {
            for (lam, u) in &spaces {
                let split: usize = classes
                    .values()
                    .map(|w| linalg::intersect(u, w, dim).len())
                    .sum();
                if split != u.len() {
                    return Err(Error::InvalidFiltration(format!(
                        "F^{lam} is not spanned by torus weight vectors"
                    )));
                }
            }
        }

        let mut basis = Vec::with_capacity(dim);
        let mut values = Vec::with_capacity(dim);
        let mut weights = Vec::with_capacity(dim);
        for (alpha, w) in &classes {
            let mut prev: Matrix<F> = Vec::new();
            for (lam, u) in &spaces {
                let s = linalg::intersect(u, w, dim);
                for v in complement(&prev, &s, dim) {
                    basis.push(v);
                    values.push(lam.clone());
                    weights.push(alpha.clone());
                }
                prev = s;
            }
        }
        debug_assert_eq!(basis.len(), dim);
        Ok(Self::sorted(
            degree,
            basis,
            values,
            coordinate_weights.map(|_| weights),
        ))
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn basis(&self) -> &[Vec<F>] {
        &self.basis
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn weights(&self) -> Option<&[Vec<F>]> {
        self.weights.as_deref()
    }

    pub fn weight_rank(&self) -> Option<usize> {
        self.weights.as_ref().map(|w| w.first().map_or(0, |a| a.len()))
    }

    /// Successive minima `λ_1 ≥ … ≥ λ_N`.
    pub fn successive_minima(&self) -> Vec<F> {
        self.values.clone()
    }

    /// Distinct values, descending.
    pub fn jumps(&self) -> Vec<F> {
        let mut j = self.values.clone();
        j.dedup();
        j
    }

    /// Basis rows of `F^λ`.
    pub fn subspace(&self, lambda: &F) -> Matrix<F> {
        self.basis
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| *v >= lambda)
            .map(|(b, _)| b.clone())
            .collect()
    }

    pub fn subspace_dim(&self, lambda: &F) -> usize {
        self.values.iter().filter(|v| *v >= lambda).count()
    }

    /// Flag `(λ, F^λ)` at every jump, largest value first.
    pub fn flag(&self) -> Vec<(F, Matrix<F>)> {
        self.jumps().into_iter().map(|l| {
            let s = self.subspace(&l);
            (l, s)
        }).collect()
    }

    /// `max{λ : v ∈ F^λ}`; `None` for the zero vector.
    pub fn value_of(&self, v: &[F]) -> Result<Option<F>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
                context: "vector in level space".into(),
            });
        }
        let c = linalg::coordinates(&self.basis, v).expect("adapted basis spans the space");
        Ok(c.iter()
            .zip(&self.values)
            .filter(|(ci, _)| !ci.is_zero())
            .map(|(_, mu)| mu.clone())
            .min())
    }

    /// `μ ↦ aμ + b·m`.
    pub fn rescale_shift(&self, a: &F, b: &F) -> Result<Self> {
        if !a.is_positive() {
            return Err(Error::NonpositiveScale(format!("{a}")));
        }
        let bm = b.clone() * F::from_u32(self.degree).expect("degree representable");
        Ok(Self {
            degree: self.degree,
            basis: self.basis.clone(),
            values: self.values.iter().map(|v| a.clone() * v.clone() + bm.clone()).collect(),
            weights: self.weights.clone(),
        })
    }

    /// `μ ↦ μ + ⟨α, ξ⟩` on each weight vector.
    pub fn twist(&self, xi: &[F]) -> Result<Self> {
        let w = self
            .weights
            .as_ref()
            .ok_or_else(|| Error::MissingTorusWeights(format!("degree {}", self.degree)))?;
        let r = self.weight_rank().unwrap_or(0);
        if xi.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: xi.len(),
                context: "twist vector against torus weight rank".into(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(w)
            .map(|(mu, a)| mu.clone() + linalg::dot(a, xi))
            .collect();
        Ok(Self::sorted(self.degree, self.basis.clone(), values, self.weights.clone()))
    }

    /// Whether `F^λ ⊆ G^λ` for every `λ`. Since `F^λ` is spanned by the
    /// adapted basis vectors of value `≥ λ`, this holds iff each of them has
    /// `G`-value at least its `F`-value.
    pub fn is_contained_in(&self, other: &Self) -> bool {
        let n = self.dim();
        if other.dim() != n {
            return false;
        }
        let Some(inv) = linalg::inverse(&other.basis) else {
            return false;
        };
        self.basis.iter().zip(&self.values).all(|(b, mu)| {
            let c = linalg::row_times(b, &inv, n);
            let g = c.iter().zip(&other.values).filter(|(x, _)| !x.is_zero()).map(|(_, v)| v).min();
            g.map_or(false, |g| g >= mu)
        })
    }

    /// Contained, and some `F^λ` is a proper subspace of `G^λ`. Given the
    /// containment this happens iff the successive minima differ.
    pub fn is_strictly_contained_in(&self, other: &Self) -> bool {
        self.is_contained_in(other) && self.values != other.values
    }
}
