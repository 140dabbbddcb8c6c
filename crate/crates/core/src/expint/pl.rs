use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{halfspace_slice, AffineForm, Polytope, Simplex};
use crate::scalar::Field;

/// One linearity cell of a piecewise-linear function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlCell<F> {
    pub simplex: Simplex<F>,
    pub affine: AffineForm<F>,
}

/// Continuous piecewise-linear function on a polytope, affine on each cell of
/// a simplicial subdivision.
///
/// When `concave` is set the function is certified to equal the minimum of its
/// affine pieces over the domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlConcaveFunction<F> {
    cells: Vec<PlCell<F>>,
    domain: Polytope<F>,
    concave: bool,
}

impl<F: Field> PlConcaveFunction<F> {
    /// Validates that the cells tile `domain`, that pieces agree on shared
    /// vertices and, if `concave` is requested, that each cell carries the
    /// smallest piece at every one of its vertices.
    pub fn new(domain: Polytope<F>, cells: Vec<PlCell<F>>, concave: bool) -> Result<Self> {
        let n = domain.dim();
        if cells.is_empty() {
            return Err(Error::InvalidPlFunction("no cells".into()));
        }
        let mut total = F::zero();
        let mut at_vertex: BTreeMap<&[F], F> = BTreeMap::new();
        for (c, cell) in cells.iter().enumerate() {
            if cell.simplex.dim() != n || cell.affine.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: cell.simplex.dim().max(cell.affine.dim()),
                    context: format!("cell {c}"),
                });
            }
            total = total + cell.simplex.volume();
            for v in cell.simplex.vertices() {
                if !domain.contains(v) {
                    return Err(Error::InvalidPlFunction(format!("cell {c} leaves the domain")));
                }
                let val = cell.affine.eval(v);
                match at_vertex.get(v.as_slice()) {
                    Some(prev) if *prev != val => {
                        return Err(Error::InvalidPlFunction(format!(
                            "pieces disagree at vertex {v:?}: {prev} vs {val}"
                        )))
                    }
                    Some(_) => {}
                    None => {
                        at_vertex.insert(v.as_slice(), val);
                    }
                }
            }
        }
        if total != domain.volume() {
            return Err(Error::InvalidPlFunction(format!(
                "cells cover volume {total}, domain has {}",
                domain.volume()
            )));
        }
        if concave {
            let mut pieces: Vec<&AffineForm<F>> = Vec::new();
            for cell in &cells {
                if !pieces.contains(&&cell.affine) {
                    pieces.push(&cell.affine);
                }
            }
            for (c, cell) in cells.iter().enumerate() {
                for v in cell.simplex.vertices() {
                    let own = cell.affine.eval(v);
                    if pieces.iter().any(|d| d.eval(v) < own) {
                        return Err(Error::InvalidPlFunction(format!(
                            "cell {c} is not the minimal piece at {v:?}"
                        )));
                    }
                }
            }
        }
        Ok(Self { cells, domain, concave })
    }

    /// Domain taken as the convex hull of all cell vertices.
    pub fn from_cells(cells: Vec<PlCell<F>>, concave: bool) -> Result<Self> {
        let n = cells
            .first()
            .map(|c| c.simplex.dim())
            .ok_or_else(|| Error::InvalidPlFunction("no cells".into()))?;
        let pts: Vec<Vec<F>> = cells
            .iter()
            .flat_map(|c| c.simplex.vertices().iter().cloned())
            .collect();
        Self::new(Polytope::from_vertices(n, pts)?, cells, concave)
    }

    /// A single affine function on `domain`.
    pub fn affine(domain: Polytope<F>, form: AffineForm<F>) -> Result<Self> {
        let cells = domain
            .triangulate()?
            .into_iter()
            .map(|simplex| PlCell {
                simplex,
                affine: form.clone(),
            })
            .collect();
        Self::new(domain, cells, true)
    }

    /// `y ↦ min_i pieces[i](y)` on `domain`, subdivided along the loci where
    /// two pieces coincide.
    pub fn from_min_of_affine(domain: Polytope<F>, pieces: &[AffineForm<F>]) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidPlFunction("no affine pieces".into()));
        }
        let mut cells = domain.triangulate()?;
        for i in 0..pieces.len() {
            for j in i + 1..pieces.len() {
                let diff = pieces[i].sub(&pieces[j]);
                if diff.gradient.iter().all(|g| g.is_zero()) {
                    continue;
                }
                let neg = diff.scale(-F::one());
                let zero = F::zero();
                cells = cells
                    .iter()
                    .flat_map(|s| {
                        let mut out = halfspace_slice(s, &diff, &zero);
                        out.extend(halfspace_slice(s, &neg, &zero));
                        out
                    })
                    .collect();
            }
        }
        let cells = cells
            .into_iter()
            .map(|simplex| {
                let c = simplex.centroid();
                let best = pieces
                    .iter()
                    .min_by(|a, b| a.eval(&c).cmp(&b.eval(&c)))
                    .expect("nonempty")
                    .clone();
                PlCell { simplex, affine: best }
            })
            .collect();
        Self::new(domain, cells, true)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn cells(&self) -> &[PlCell<F>] {
        &self.cells
    }

    pub fn domain(&self) -> &Polytope<F> {
        &self.domain
    }

    pub fn is_concave_certified(&self) -> bool {
        self.concave
    }

    pub fn eval(&self, y: &[F]) -> Option<F> {
        if self.concave {
            if !self.domain.contains(y) {
                return None;
            }
            return self.cells.iter().map(|c| c.affine.eval(y)).min();
        }
        self.cells
            .iter()
            .find(|c| c.simplex.contains(y))
            .map(|c| c.affine.eval(y))
    }

    fn vertex_values(&self) -> impl Iterator<Item = F> + '_ {
        self.cells
            .iter()
            .flat_map(|c| c.simplex.vertices().iter().map(move |v| c.affine.eval(v)))
    }

    pub fn min_value(&self) -> F {
        self.vertex_values().min().expect("nonempty")
    }

    pub fn max_value(&self) -> F {
        self.vertex_values().max().expect("nonempty")
    }

    /// `a·G + b` for `a > 0`.
    pub fn scale_shift(&self, a: &F, b: &F) -> Result<Self> {
        if !a.is_positive() {
            return Err(Error::NonpositiveScale(format!("{a}")));
        }
        Ok(self.map_pieces(|f| f.scale(a.clone()).shift(b.clone())))
    }

    /// `G + h` for an affine `h`; concavity is preserved.
    pub fn add_affine(&self, h: &AffineForm<F>) -> Self {
        self.map_pieces(|f| f.add(h))
    }

    fn map_pieces(&self, m: impl Fn(&AffineForm<F>) -> AffineForm<F>) -> Self {
        Self {
            cells: self
                .cells
                .iter()
                .map(|c| PlCell {
                    simplex: c.simplex.clone(),
                    affine: m(&c.affine),
                })
                .collect(),
            domain: self.domain.clone(),
            concave: self.concave,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    fn abs_on_interval() -> PlConcaveFunction<Q> {
        // |y| on [−1, 1] is convex, so no certificate
        let left = PlCell {
            simplex: Simplex::new(vec![point(&[-1]), point(&[0])]).unwrap(),
            affine: AffineForm::new(vec![-Q::one()], Q::zero()),
        };
        let right = PlCell {
            simplex: Simplex::new(vec![point(&[0]), point(&[1])]).unwrap(),
            affine: AffineForm::new(vec![Q::one()], Q::zero()),
        };
        PlConcaveFunction::from_cells(vec![left, right], false).unwrap()
    }

    #[test]
    fn piecewise_absolute_value() {
        let g = abs_on_interval();
        assert_eq!(g.eval(&[q(-1, 2)]), Some(q(1, 2)));
        assert_eq!(g.min_value(), Q::zero());
        assert_eq!(g.max_value(), Q::one());
        let cells = g.cells().to_vec();
        assert!(PlConcaveFunction::from_cells(cells, true).is_err());
    }

    #[test]
    fn discontinuous_pieces_are_rejected() {
        let left = PlCell {
            simplex: Simplex::new(vec![point(&[-1]), point(&[0])]).unwrap(),
            affine: AffineForm::new(vec![Q::zero()], Q::zero()),
        };
        let right = PlCell {
            simplex: Simplex::new(vec![point(&[0]), point(&[1])]).unwrap(),
            affine: AffineForm::new(vec![Q::zero()], Q::one()),
        };
        assert!(PlConcaveFunction::from_cells(vec![left, right], false).is_err());
    }

    #[test]
    fn tent_from_minimum_of_two_pieces() {
        let dom = Polytope::interval(q(-1, 1), q(1, 1)).unwrap();
        let pieces = [
            AffineForm::new(vec![Q::one()], Q::zero()),
            AffineForm::new(vec![-Q::one()], Q::zero()),
        ];
        let g = PlConcaveFunction::from_min_of_affine(dom, &pieces).unwrap();
        assert_eq!(g.cells().len(), 2);
        assert!(g.is_concave_certified());
        assert_eq!(g.eval(&[q(1, 2)]), Some(q(-1, 2)));
        assert_eq!(g.max_value(), Q::zero());
    }

    #[test]
    fn minimum_of_planes_on_a_square() {
        let dom = Polytope::cube(&point::<Q>(&[0, 0]), &point(&[1, 1])).unwrap();
        let pieces = [
            AffineForm::new(point(&[1, 0]), Q::zero()),
            AffineForm::new(point(&[0, 1]), Q::zero()),
            AffineForm::constant(2, q(1, 2)),
        ];
        let g = PlConcaveFunction::from_min_of_affine(dom, &pieces).unwrap();
        assert_eq!(g.eval(&[q(3, 4), q(9, 10)]), Some(q(1, 2)));
        assert_eq!(g.eval(&[q(1, 4), q(9, 10)]), Some(q(1, 4)));
        let total = g.cells().iter().fold(Q::zero(), |a, c| a + c.simplex.volume());
        assert_eq!(total, Q::one());
    }

    #[test]
    fn scaling_requires_positive_factor() {
        let g = abs_on_interval();
        assert!(g.scale_shift(&Q::zero(), &Q::one()).is_err());
        let h = g.scale_shift(&q(2, 1), &q(-1, 1)).unwrap();
        assert_eq!(h.eval(&[Q::one()]), Some(Q::one()));
    }
}
