//! Initial-term degeneration on a monomial model.
//!
//! `F0` is the weight filtration of a vector `w` on the monomials of degree
//! `m`: the value of a polynomial is the least weight `⟨w, e⟩` among the
//! monomials `x^e` in its support. The associated graded is identified with
//! the same monomial space, graded by weight, and the induced filtration is
//!
//! ```text
//! F′^λ = ⊕_c proj_c(F1^λ ∩ F0^{≥c})
//! ```
//!
//! where `proj_c` keeps the weight-`c` monomials.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::Field;

use super::level::FiltrationLevel;
use super::GradedFiltration;

/// Polynomial ring in `num_vars` variables with the monomials of each degree
/// enumerated in graded-lex order (`x_0^m` first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialModel {
    num_vars: usize,
}

impl MonomialModel {
    pub fn new(num_vars: usize) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::InvalidArgument("monomial model needs a variable".into()));
        }
        Ok(Self { num_vars })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Exponent vectors of degree `m`, lexicographically descending.
    pub fn monomials(&self, m: u32) -> Vec<Vec<u32>> {
        fn rec(k: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if k + 1 == cur.len() {
                cur[k] = left;
                out.push(cur.clone());
                return;
            }
            for e in (0..=left).rev() {
                cur[k] = e;
                rec(k + 1, left - e, cur, out);
            }
        }
        let mut out = Vec::new();
        rec(0, m, &mut vec![0; self.num_vars], &mut out);
        out
    }

    pub fn dim(&self, m: u32) -> usize {
        self.monomials(m).len()
    }

    fn monomial_weights<F: Field>(&self, w: &[F], m: u32) -> Result<Vec<F>> {
        if w.len() != self.num_vars {
            return Err(Error::InvalidWeightFiltration(format!(
                "weight vector has {} entries for {} variables",
                w.len(),
                self.num_vars
            )));
        }
        Ok(self
            .monomials(m)
            .iter()
            .map(|e| {
                e.iter().zip(w).fold(F::zero(), |acc, (k, wi)| {
                    acc + F::from_u32(*k).expect("exponent representable") * wi.clone()
                })
            })
            .collect())
    }

    /// The weight filtration of `w` at degree `m`, with each monomial carrying
    /// its weight as a rank-one torus weight.
    pub fn weight_filtration<F: Field>(&self, w: &[F], m: u32) -> Result<FiltrationLevel<F>> {
        let c = self.monomial_weights(w, m)?;
        let weights = c.iter().map(|x| vec![x.clone()]).collect();
        FiltrationLevel::diagonal(m, c, Some(weights))
    }
}

/// `F′_1` on the associated graded of the weight filtration of `w`, at degree `m`.
pub fn initial_term_degeneration<F: Field>(
    model: &MonomialModel,
    w: &[F],
    f1: &GradedFiltration<F>,
    m: u32,
) -> Result<GradedFiltration<F>> {
    let c = model.monomial_weights(w, m)?;
    let n = c.len();
    let lv = f1.level(m)?;
    if lv.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: lv.dim(),
            context: format!("degree {m} has {n} monomials"),
        });
    }
    let mut groups: BTreeMap<F, Vec<usize>> = BTreeMap::new();
    for (j, cj) in c.iter().enumerate() {
        groups.entry(cj.clone()).or_default().push(j);
    }
    let flags = lv
        .flag()
        .into_iter()
        .map(|(lam, u)| {
            let mut rows: Matrix<F> = Vec::new();
            for (cv, idx) in &groups {
                // F0^{≥c}: monomials of weight at least c
                let above: Matrix<F> = (0..n)
                    .filter(|&j| c[j] >= *cv)
                    .map(|j| {
                        let mut e = vec![F::zero(); n];
                        e[j] = F::one();
                        e
                    })
                    .collect();
                for v in linalg::intersect(&u, &above, n) {
                    let mut p = vec![F::zero(); n];
                    for &j in idx {
                        p[j] = v[j].clone();
                    }
                    rows.push(p);
                }
            }
            (lam, linalg::span_basis(&rows, n))
        })
        .collect();
    let weights = c.iter().map(|x| vec![x.clone()]).collect();
    let level = FiltrationLevel::from_flags(m, n, flags, Some(weights))?;
    GradedFiltration::new(format!("{} (initial terms)", f1.label), vec![level])
}

/// `F0` as a graded filtration at the requested degrees.
pub fn weight_filtration<F: Field>(model: &MonomialModel, w: &[F], degrees: &[u32]) -> Result<GradedFiltration<F>> {
    let levels = degrees
        .iter()
        .map(|&m| model.weight_filtration(w, m))
        .collect::<Result<Vec<_>>>()?;
    GradedFiltration::new("weight filtration".into(), levels)
}
