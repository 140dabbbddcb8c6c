use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{factorial_field, field_from_i64, Field};

use super::polytope::Halfspace;

/// Non-degenerate simplex in `F^n` given by its `n + 1` vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Simplex<F> {
    vertices: Vec<Vec<F>>,
}

impl<F: Field> Simplex<F> {
    pub fn new(vertices: Vec<Vec<F>>) -> Result<Self> {
        let s = Self { vertices };
        let n = s.dim();
        if n == 0 || s.vertices.len() != n + 1 || s.vertices.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                found: s.vertices.len(),
                context: "simplex in R^n needs n + 1 points of length n".into(),
            });
        }
        if s.signed_det().is_zero() {
            return Err(Error::DegenerateSimplex);
        }
        Ok(s)
    }

    /// Standard simplex `conv(0, e_1, …, e_n)`.
    pub fn standard(n: usize) -> Self {
        let mut vertices = vec![vec![F::zero(); n]];
        for i in 0..n {
            let mut v = vec![F::zero(); n];
            v[i] = F::one();
            vertices.push(v);
        }
        Self { vertices }
    }

    pub fn dim(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn vertices(&self) -> &[Vec<F>] {
        &self.vertices
    }

    fn edge_matrix(&self) -> Vec<Vec<F>> {
        let v0 = &self.vertices[0];
        self.vertices[1..]
            .iter()
            .map(|v| v.iter().zip(v0).map(|(a, b)| a.clone() - b.clone()).collect())
            .collect()
    }

    pub fn signed_det(&self) -> F {
        linalg::det(&self.edge_matrix())
    }

    /// `n! · vol`, i.e. `|det(v_1 − v_0, …, v_n − v_0)|`.
    pub fn normalized_volume(&self) -> F {
        self.signed_det().abs()
    }

    pub fn volume(&self) -> F {
        self.normalized_volume() / factorial_field::<F>(self.dim())
    }

    pub fn centroid(&self) -> Vec<F> {
        let n = self.dim();
        let k = field_from_i64::<F>(n as i64 + 1);
        (0..n)
            .map(|j| {
                self.vertices
                    .iter()
                    .fold(F::zero(), |acc, v| acc + v[j].clone())
                    / k.clone()
            })
            .collect()
    }

    /// Barycentric coordinates `(λ_0, …, λ_n)` of `y`.
    pub fn barycentric(&self, y: &[F]) -> Vec<F> {
        let e = self.edge_matrix();
        let v0 = &self.vertices[0];
        let rhs: Vec<F> = y.iter().zip(v0).map(|(a, b)| a.clone() - b.clone()).collect();
        // y − v0 = Σ_{i≥1} λ_i (v_i − v0)
        let lam = linalg::solve(&linalg::transpose(&e, self.dim()), &rhs)
            .expect("simplex is non-degenerate");
        let l0 = lam.iter().fold(F::one(), |acc, l| acc - l.clone());
        std::iter::once(l0).chain(lam).collect()
    }

    pub fn contains(&self, y: &[F]) -> bool {
        self.barycentric(y).iter().all(|l| !l.is_negative())
    }

    /// Facet halfspaces `⟨a, y⟩ ≤ b`, facet `i` opposite vertex `i`.
    pub fn halfspaces(&self) -> Vec<Halfspace<F>> {
        let n = self.dim();
        let e = self.edge_matrix();
        // rows of inv(E^T) give the barycentric coordinates λ_1..λ_n
        let et = linalg::transpose(&e, n);
        let mut inv_rows: Vec<Vec<F>> = vec![vec![F::zero(); n]; n];
        for j in 0..n {
            let mut unit = vec![F::zero(); n];
            unit[j] = F::one();
            let col = linalg::solve(&et, &unit).expect("non-degenerate");
            for i in 0..n {
                inv_rows[i][j] = col[i].clone();
            }
        }
        let v0 = &self.vertices[0];
        let mut hs = Vec::with_capacity(n + 1);
        // λ_0 = 1 − Σ λ_i ≥ 0  <=>  Σ_i ⟨r_i, y − v0⟩ ≤ 1
        let sum_row: Vec<F> = (0..n)
            .map(|j| inv_rows.iter().fold(F::zero(), |acc, r| acc + r[j].clone()))
            .collect();
        let off0 = F::one() + linalg::dot(&sum_row, v0);
        hs.push(Halfspace::new(sum_row, off0));
        // λ_i ≥ 0  <=>  −⟨r_i, y⟩ ≤ −⟨r_i, v0⟩
        for r in inv_rows {
            let off = -linalg::dot(&r, v0);
            hs.push(Halfspace::new(r.into_iter().map(|x| -x).collect(), off));
        }
        hs
    }
}
