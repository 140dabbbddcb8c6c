//! Exact rational convex geometry: polytopes in vertex and halfspace form,
//! fan triangulations, volumes, centroids and halfspace slicing of simplices.

mod affine;
mod polytope;
mod simplex;

pub use affine::AffineForm;
pub use polytope::{point, Halfspace, Polytope};
pub use simplex::Simplex;

use crate::error::Result;
use crate::scalar::Field;

pub fn triangulate<F: Field>(p: &Polytope<F>) -> Result<Vec<Simplex<F>>> {
    p.triangulate()
}

pub fn volume<F: Field>(p: &Polytope<F>) -> F {
    p.volume()
}

pub fn barycenter<F: Field>(p: &Polytope<F>) -> Result<Vec<F>> {
    p.barycenter()
}

/// Triangulation of `s ∩ {y : h(y) ≥ level}`. Empty when the intersection is
/// lower-dimensional.
pub fn halfspace_slice<F: Field>(s: &Simplex<F>, h: &AffineForm<F>, level: &F) -> Vec<Simplex<F>> {
    let verts = s.vertices();
    let vals: Vec<F> = verts.iter().map(|v| h.eval(v) - level.clone()).collect();
    if vals.iter().all(|v| !v.is_negative()) {
        return vec![s.clone()];
    }
    if !vals.iter().any(|v| v.is_positive()) {
        return Vec::new();
    }
    let mut pts: Vec<Vec<F>> = verts
        .iter()
        .zip(&vals)
        .filter(|(_, v)| !v.is_negative())
        .map(|(p, _)| p.clone())
        .collect();
    for i in 0..verts.len() {
        for j in 0..verts.len() {
            if vals[i].is_positive() && vals[j].is_negative() {
                let t = vals[i].clone() / (vals[i].clone() - vals[j].clone());
                pts.push(
                    verts[i]
                        .iter()
                        .zip(&verts[j])
                        .map(|(a, b)| a.clone() + t.clone() * (b.clone() - a.clone()))
                        .collect(),
                );
            }
        }
    }
    let n = s.dim();
    let mut hs = s.halfspaces();
    hs.push(Halfspace::new(
        h.gradient.iter().map(|g| -g.clone()).collect(),
        h.constant.clone() - level.clone(),
    ));
    let p = Polytope::from_parts(n, pts, hs);
    p.triangulate().unwrap_or_default()
}
