use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{field_from_i64, Field};

use super::simplex::Simplex;

/// Closed halfspace `⟨normal, y⟩ ≤ offset`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Halfspace<F> {
    pub normal: Vec<F>,
    pub offset: F,
}

impl<F: Field> Halfspace<F> {
    pub fn new(normal: Vec<F>, offset: F) -> Self {
        Self { normal, offset }
    }

    /// Slack `offset − ⟨normal, y⟩` (nonnegative inside).
    pub fn slack(&self, y: &[F]) -> F {
        self.offset.clone() - linalg::dot(&self.normal, y)
    }

    /// Positive rescaling making the first nonzero normal entry ±1.
    /// `None` for a zero normal.
    pub fn normalized(&self) -> Option<Self> {
        let lead = self.normal.iter().find(|x| !x.is_zero())?.abs();
        Some(Self {
            normal: self.normal.iter().map(|x| x.clone() / lead.clone()).collect(),
            offset: self.offset.clone() / lead,
        })
    }
}

/// Bounded convex polytope carrying both its vertex and halfspace descriptions.
///
/// Vertices are stored in lexicographic order and halfspaces in normalized,
/// sorted, deduplicated form, so two polytopes describing the same set compare
/// equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polytope<F> {
    dim: usize,
    vertices: Vec<Vec<F>>,
    halfspaces: Vec<Halfspace<F>>,
    full_dimensional: bool,
}

/// All `k`-subsets of `0..m` in lexicographic order.
pub(crate) fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + m - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub(crate) fn affine_rank<F: Field>(points: &[&Vec<F>]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let p0 = points[0];
    let diffs: Vec<Vec<F>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| a.clone() - b.clone()).collect())
        .collect();
    linalg::rank(&diffs, p0.len())
}

fn dedup_sorted<F: Field>(mut pts: Vec<Vec<F>>) -> Vec<Vec<F>> {
    pts.sort();
    pts.dedup();
    pts
}

/// Facets of the convex hull of a full-dimensional point set.
fn hull_facets<F: Field>(points: &[Vec<F>], dim: usize) -> Vec<Halfspace<F>> {
    let mut facets = BTreeSet::new();
    for combo in combinations(points.len(), dim) {
        let p0 = &points[combo[0]];
        let diffs: Vec<Vec<F>> = combo[1..]
            .iter()
            .map(|&i| points[i].iter().zip(p0).map(|(a, b)| a.clone() - b.clone()).collect())
            .collect();
        let ns = linalg::null_space(&diffs, dim);
        if ns.len() != 1 {
            continue;
        }
        let a = ns.into_iter().next().unwrap();
        let b = linalg::dot(&a, p0);
        let mut le = true;
        let mut ge = true;
        for p in points {
            let v = linalg::dot(&a, p);
            if v > b {
                le = false;
            }
            if v < b {
                ge = false;
            }
        }
        let h = if le {
            Halfspace::new(a, b)
        } else if ge {
            Halfspace::new(a.into_iter().map(|x| -x).collect(), -b)
        } else {
            continue;
        };
        facets.insert(h.normalized().expect("nonzero normal"));
    }
    facets.into_iter().collect()
}

impl<F: Field> Polytope<F> {
    /// Convex hull of a finite point set (`dim ≤ 6` is the supported range).
    pub fn from_vertices(dim: usize, points: Vec<Vec<F>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("polytope dimension must be >= 1".into()));
        }
        if points.is_empty() {
            return Err(Error::UnboundedPolytope("no vertices given".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
                context: "polytope vertex".into(),
            });
        }
        let points = dedup_sorted(points);
        let refs: Vec<&Vec<F>> = points.iter().collect();
        let k = affine_rank(&refs);
        if k == dim {
            let halfspaces = hull_facets(&points, dim);
            let vertices = extreme_points(&points, &halfspaces, dim);
            return Ok(Self {
                dim,
                vertices,
                halfspaces,
                full_dimensional: true,
            });
        }
        // Lower-dimensional: hull inside the affine span via an injective
        // coordinate projection, plus the equations of the span.
        let p0 = points[0].clone();
        let diffs: Vec<Vec<F>> = points
            .iter()
            .map(|p| p.iter().zip(&p0).map(|(a, b)| a.clone() - b.clone()).collect())
            .collect();
        let (_, coord_pivots) = linalg::rref(&diffs, dim);
        let mut halfspaces: BTreeSet<Halfspace<F>> = BTreeSet::new();
        for eq in linalg::null_space(&diffs, dim) {
            let b = linalg::dot(&eq, &p0);
            let h = Halfspace::new(eq.clone(), b.clone());
            let h2 = Halfspace::new(eq.into_iter().map(|x| -x).collect(), -b);
            halfspaces.insert(h.normalized().unwrap());
            halfspaces.insert(h2.normalized().unwrap());
        }
        let vertices = if k == 0 {
            vec![p0]
        } else {
            let proj: Vec<Vec<F>> = points
                .iter()
                .map(|p| coord_pivots.iter().map(|&c| p[c].clone()).collect())
                .collect();
            let sub = hull_facets(&proj, k);
            for h in &sub {
                let mut normal = vec![F::zero(); dim];
                for (c, a) in coord_pivots.iter().zip(&h.normal) {
                    normal[*c] = a.clone();
                }
                halfspaces.insert(Halfspace::new(normal, h.offset.clone()).normalized().unwrap());
            }
            let ext = extreme_points(&proj, &sub, k);
            points
                .iter()
                .zip(&proj)
                .filter(|(_, q)| ext.contains(q))
                .map(|(p, _)| p.clone())
                .collect()
        };
        Ok(Self {
            dim,
            vertices,
            halfspaces: halfspaces.into_iter().collect(),
            full_dimensional: false,
        })
    }

    /// Polytope `{y : ⟨a_i, y⟩ ≤ b_i}`; fails if empty or unbounded.
    pub fn from_halfspaces(dim: usize, halfspaces: Vec<Halfspace<F>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("polytope dimension must be >= 1".into()));
        }
        let mut hs = Vec::new();
        for h in halfspaces {
            if h.normal.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: h.normal.len(),
                    context: "halfspace normal".into(),
                });
            }
            match h.normalized() {
                Some(n) => hs.push(n),
                None if h.offset.is_negative() => {
                    return Err(Error::UnboundedPolytope("infeasible constraint 0 <= b < 0".into()))
                }
                None => {}
            }
        }
        hs.sort();
        hs.dedup();
        let normals: Vec<Vec<F>> = hs.iter().map(|h| h.normal.clone()).collect();
        if linalg::rank(&normals, dim) < dim {
            return Err(Error::UnboundedPolytope(
                "halfspace normals do not span R^n (polyhedron contains a line)".into(),
            ));
        }
        // A pointed cone {d : A d ≤ 0} is nontrivial iff it has an extreme ray,
        // spanned by the null direction of n − 1 independent rows.
        for combo in combinations(hs.len(), dim - 1) {
            let rows: Vec<Vec<F>> = combo.iter().map(|&i| hs[i].normal.clone()).collect();
            let ns = linalg::null_space(&rows, dim);
            if ns.len() != 1 {
                continue;
            }
            let d = &ns[0];
            for sign in [F::one(), -F::one()] {
                let ok = hs.iter().all(|h| {
                    !(linalg::dot(&h.normal, d) * sign.clone()).is_positive()
                });
                if ok {
                    return Err(Error::UnboundedPolytope(
                        "recession cone contains a nonzero ray".into(),
                    ));
                }
            }
        }
        let mut verts = BTreeSet::new();
        for combo in combinations(hs.len(), dim) {
            let a: Vec<Vec<F>> = combo.iter().map(|&i| hs[i].normal.clone()).collect();
            let b: Vec<F> = combo.iter().map(|&i| hs[i].offset.clone()).collect();
            if let Some(x) = linalg::solve(&a, &b) {
                if hs.iter().all(|h| !h.slack(&x).is_negative()) {
                    verts.insert(x);
                }
            }
        }
        if verts.is_empty() {
            return Err(Error::UnboundedPolytope("halfspace system is infeasible".into()));
        }
        let vertices: Vec<Vec<F>> = verts.into_iter().collect();
        let refs: Vec<&Vec<F>> = vertices.iter().collect();
        let full = affine_rank(&refs) == dim;
        if full {
            // keep only facet-defining inequalities
            let facets = hull_facets(&vertices, dim);
            return Ok(Self {
                dim,
                vertices,
                halfspaces: facets,
                full_dimensional: true,
            });
        }
        Self::from_vertices(dim, vertices)
    }

    /// Both descriptions given: each is converted and the results must agree.
    pub fn from_both(dim: usize, vertices: Vec<Vec<F>>, halfspaces: Vec<Halfspace<F>>) -> Result<Self> {
        let a = Self::from_vertices(dim, vertices)?;
        let b = Self::from_halfspaces(dim, halfspaces)?;
        if a.vertices != b.vertices {
            return Err(Error::InconsistentRepresentation(
                "vertex list and halfspace list describe different polytopes".into(),
            ));
        }
        Ok(a)
    }

    /// Assembles a polytope from a known vertex set and a valid (possibly
    /// redundant) halfspace description. Used for slices, where both are
    /// available by construction.
    pub(crate) fn from_parts(dim: usize, vertices: Vec<Vec<F>>, halfspaces: Vec<Halfspace<F>>) -> Self {
        let vertices = dedup_sorted(vertices);
        let refs: Vec<&Vec<F>> = vertices.iter().collect();
        let full_dimensional = affine_rank(&refs) == dim;
        let mut hs: Vec<Halfspace<F>> = halfspaces.iter().filter_map(|h| h.normalized()).collect();
        hs.sort();
        hs.dedup();
        Self {
            dim,
            vertices,
            halfspaces: hs,
            full_dimensional,
        }
    }

    /// Interval `[lo, hi]` in dimension one.
    pub fn interval(lo: F, hi: F) -> Result<Self> {
        Self::from_vertices(1, vec![vec![lo], vec![hi]])
    }

    /// Axis-aligned box `Π [lo_i, hi_i]`.
    pub fn cube(lo: &[F], hi: &[F]) -> Result<Self> {
        let n = lo.len();
        let mut hs = Vec::new();
        for i in 0..n {
            let mut e = vec![F::zero(); n];
            e[i] = F::one();
            hs.push(Halfspace::new(e.clone(), hi[i].clone()));
            hs.push(Halfspace::new(e.into_iter().map(|x| -x).collect(), -lo[i].clone()));
        }
        Self::from_halfspaces(n, hs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<F>] {
        &self.vertices
    }

    pub fn halfspaces(&self) -> &[Halfspace<F>] {
        &self.halfspaces
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.full_dimensional
    }

    pub fn contains(&self, y: &[F]) -> bool {
        self.halfspaces.iter().all(|h| !h.slack(y).is_negative())
    }

    /// Strict interior membership (only meaningful for full-dimensional polytopes).
    pub fn contains_in_interior(&self, y: &[F]) -> bool {
        self.full_dimensional && self.halfspaces.iter().all(|h| h.slack(y).is_positive())
    }

    fn tight_table(&self) -> Vec<Vec<bool>> {
        self.halfspaces
            .iter()
            .map(|h| self.vertices.iter().map(|v| h.slack(v).is_zero()).collect())
            .collect()
    }

    /// Fan triangulation from the lexicographically smallest vertex of each
    /// face, recursively over facets not containing it.
    pub fn triangulate(&self) -> Result<Vec<Simplex<F>>> {
        if !self.full_dimensional {
            return Err(Error::DegeneratePolytope(
                "polytope is not full-dimensional".into(),
            ));
        }
        let tight = self.tight_table();
        let ids: Vec<usize> = (0..self.vertices.len()).collect();
        let simplices = self.triangulate_face(&ids, self.dim, &tight);
        Ok(simplices
            .into_iter()
            .map(|s| {
                Simplex::new(s.into_iter().map(|i| self.vertices[i].clone()).collect())
                    .expect("fan triangulation produces non-degenerate simplices")
            })
            .collect())
    }

    fn triangulate_face(&self, ids: &[usize], k: usize, tight: &[Vec<bool>]) -> Vec<Vec<usize>> {
        let apex = ids[0];
        if k == 0 {
            return vec![vec![apex]];
        }
        let mut subfaces: BTreeSet<Vec<usize>> = BTreeSet::new();
        for row in tight {
            let sub: Vec<usize> = ids.iter().copied().filter(|&v| row[v]).collect();
            if sub.is_empty() || sub.contains(&apex) || subfaces.contains(&sub) {
                continue;
            }
            let pts: Vec<&Vec<F>> = sub.iter().map(|&i| &self.vertices[i]).collect();
            if affine_rank(&pts) == k - 1 {
                subfaces.insert(sub);
            }
        }
        let mut out = Vec::new();
        for sub in subfaces {
            for mut s in self.triangulate_face(&sub, k - 1, tight) {
                s.insert(0, apex);
                out.push(s);
            }
        }
        out
    }

    /// Exact Lebesgue volume; zero for lower-dimensional polytopes.
    pub fn volume(&self) -> F {
        match self.triangulate() {
            Ok(simplices) => simplices.iter().fold(F::zero(), |acc, s| acc + s.volume()),
            Err(_) => F::zero(),
        }
    }

    /// Exact centroid.
    pub fn barycenter(&self) -> Result<Vec<F>> {
        let simplices = self.triangulate()?;
        let mut total = F::zero();
        let mut acc = vec![F::zero(); self.dim];
        for s in &simplices {
            let v = s.volume();
            for (a, c) in acc.iter_mut().zip(s.centroid()) {
                *a = a.clone() + v.clone() * c;
            }
            total = total + v;
        }
        Ok(acc.into_iter().map(|a| a / total.clone()).collect())
    }

    /// Image under the projection onto the first `r` coordinates.
    pub fn project(&self, r: usize) -> Result<Self> {
        if r == 0 || r > self.dim {
            return Err(Error::InvalidArgument(format!(
                "projection rank {r} must lie in 1..={}",
                self.dim
            )));
        }
        if r == self.dim {
            return Ok(self.clone());
        }
        let pts = self.vertices.iter().map(|v| v[..r].to_vec()).collect();
        Self::from_vertices(r, pts)
    }

    pub fn translate(&self, t: &[F]) -> Self {
        let vertices = self
            .vertices
            .iter()
            .map(|v| v.iter().zip(t).map(|(a, b)| a.clone() + b.clone()).collect())
            .collect();
        let halfspaces = self
            .halfspaces
            .iter()
            .map(|h| Halfspace::new(h.normal.clone(), h.offset.clone() + linalg::dot(&h.normal, t)))
            .collect();
        Self::from_parts(self.dim, vertices, halfspaces)
    }

    /// Dilation `y ↦ c·y` for `c > 0`.
    pub fn dilate(&self, c: &F) -> Self {
        assert!(c.is_positive(), "dilation factor must be positive");
        let vertices = self
            .vertices
            .iter()
            .map(|v| v.iter().map(|a| a.clone() * c.clone()).collect())
            .collect();
        let halfspaces = self
            .halfspaces
            .iter()
            .map(|h| Halfspace::new(h.normal.clone(), h.offset.clone() * c.clone()))
            .collect();
        Self::from_parts(self.dim, vertices, halfspaces)
    }

    /// Whether the polytope is invariant under `y ↦ −y`.
    pub fn is_centrally_symmetric(&self) -> bool {
        let mut neg: Vec<Vec<F>> = self
            .vertices
            .iter()
            .map(|v| v.iter().map(|a| -a.clone()).collect())
            .collect();
        neg.sort();
        neg == self.vertices
    }
}

fn extreme_points<F: Field>(points: &[Vec<F>], facets: &[Halfspace<F>], dim: usize) -> Vec<Vec<F>> {
    points
        .iter()
        .filter(|p| {
            let normals: Vec<Vec<F>> = facets
                .iter()
                .filter(|h| h.slack(p).is_zero())
                .map(|h| h.normal.clone())
                .collect();
            linalg::rank(&normals, dim) == dim
        })
        .cloned()
        .collect()
}

/// Rational point from integers, convenient in tests and fixtures.
pub fn point<F: Field>(coords: &[i64]) -> Vec<F> {
    coords.iter().map(|&c| field_from_i64(c)).collect()
}
