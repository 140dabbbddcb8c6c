//! Exact dense linear algebra over a [`Field`].
//!
//! Row vectors throughout: a subspace is the row space of a list of vectors.
//! Pivots are chosen by column, then by lowest row index, so every routine is
//! deterministic in its input order.

use crate::scalar::Field;

pub type Matrix<F> = Vec<Vec<F>>;

/// Reduced row echelon form. Returns the nonzero rows and their pivot columns.
pub fn rref<F: Field>(rows: &[Vec<F>], ncols: usize) -> (Matrix<F>, Vec<usize>) {
    let mut m: Matrix<F> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = F::one() / m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..ncols {
                    let d = f.clone() * m[r][j].clone();
                    m[i][j] = m[i][j].clone() - d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    (m, pivots)
}

pub fn rank<F: Field>(rows: &[Vec<F>], ncols: usize) -> usize {
    rref(rows, ncols).1.len()
}

/// Canonical basis (RREF rows) of the row space.
pub fn span_basis<F: Field>(rows: &[Vec<F>], ncols: usize) -> Matrix<F> {
    rref(rows, ncols).0
}

/// Whether `v` lies in the row space spanned by `basis`.
pub fn in_span<F: Field>(basis: &[Vec<F>], v: &[F]) -> bool {
    let n = v.len();
    let r0 = rank(basis, n);
    let mut ext = basis.to_vec();
    ext.push(v.to_vec());
    rank(&ext, n) == r0
}

/// Right null space `{x : A x = 0}` as a list of basis vectors.
pub fn null_space<F: Field>(rows: &[Vec<F>], ncols: usize) -> Matrix<F> {
    let (r, pivots) = rref(rows, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![F::zero(); ncols];
            x[f] = F::one();
            for (row, &p) in r.iter().zip(&pivots) {
                x[p] = -row[f].clone();
            }
            x
        })
        .collect()
}

/// Solves the square system `A x = b`; `None` if `A` is singular.
pub fn solve<F: Field>(a: &[Vec<F>], b: &[F]) -> Option<Vec<F>> {
    let n = a.len();
    let aug: Matrix<F> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let (r, pivots) = rref(&aug, n + 1);
    if pivots.len() != n || pivots.iter().any(|&p| p == n) {
        return None;
    }
    Some(r.iter().map(|row| row[n].clone()).collect())
}

/// Inverse of a square matrix; `None` if it is singular.
pub fn inverse<F: Field>(a: &[Vec<F>]) -> Option<Matrix<F>> {
    let n = a.len();
    let aug: Matrix<F> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { F::one() } else { F::zero() }));
            r
        })
        .collect();
    let (r, pivots) = rref(&aug, 2 * n);
    if pivots.len() != n || pivots.iter().any(|&p| p >= n) {
        return None;
    }
    Some(r.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Row vector times matrix, `v·M`, skipping zero entries.
pub fn row_times<F: Field>(v: &[F], m: &[Vec<F>], ncols: usize) -> Vec<F> {
    let mut out = vec![F::zero(); ncols];
    for (x, row) in v.iter().zip(m) {
        if x.is_zero() {
            continue;
        }
        for (o, r) in out.iter_mut().zip(row) {
            if !r.is_zero() {
                *o = o.clone() + x.clone() * r.clone();
            }
        }
    }
    out
}

pub fn det<F: Field>(a: &[Vec<F>]) -> F {
    let n = a.len();
    let mut m = a.to_vec();
    let mut d = F::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return F::zero();
        };
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        let piv = m[c][c].clone();
        d = d * piv.clone();
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone() / piv.clone();
            for j in c..n {
                let t = f.clone() * m[c][j].clone();
                m[i][j] = m[i][j].clone() - t;
            }
        }
    }
    d
}

pub fn transpose<F: Field>(a: &[Vec<F>], ncols: usize) -> Matrix<F> {
    (0..ncols)
        .map(|j| a.iter().map(|row| row[j].clone()).collect())
        .collect()
}

/// Coordinates `c` with `Σ c_i basis_i = v`, if `v` is in the span and the
/// basis is independent.
pub fn coordinates<F: Field>(basis: &[Vec<F>], v: &[F]) -> Option<Vec<F>> {
    let n = v.len();
    let k = basis.len();
    // columns = basis vectors; augmented with v
    let mut aug: Matrix<F> = (0..n)
        .map(|j| {
            let mut row: Vec<F> = basis.iter().map(|b| b[j].clone()).collect();
            row.push(v[j].clone());
            row
        })
        .collect();
    let (r, pivots) = rref(&aug, k + 1);
    if pivots.len() != k || pivots.contains(&k) {
        return None;
    }
    aug = r;
    Some((0..k).map(|i| aug[i][k].clone()).collect())
}

/// Intersection of two row spaces.
pub fn intersect<F: Field>(a: &[Vec<F>], b: &[Vec<F>], ncols: usize) -> Matrix<F> {
    let a = span_basis(a, ncols);
    let b = span_basis(b, ncols);
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    // coefficients (c, d) with c A - d B = 0  <=>  null space of [A; B]^T
    let mut stacked = a.clone();
    stacked.extend(b.iter().cloned());
    let ns = null_space(&transpose(&stacked, ncols), stacked.len());
    let vecs: Matrix<F> = ns
        .iter()
        .map(|coef| {
            let mut v = vec![F::zero(); ncols];
            for (ci, row) in coef.iter().zip(&a) {
                if ci.is_zero() {
                    continue;
                }
                for (vj, rj) in v.iter_mut().zip(row) {
                    *vj = vj.clone() + ci.clone() * rj.clone();
                }
            }
            v
        })
        .collect();
    span_basis(&vecs, ncols)
}

/// Sum of two row spaces.
pub fn sum_spaces<F: Field>(a: &[Vec<F>], b: &[Vec<F>], ncols: usize) -> Matrix<F> {
    let mut all = a.to_vec();
    all.extend(b.iter().cloned());
    span_basis(&all, ncols)
}

pub fn dot<F: Field>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .fold(F::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn identity<F: Field>(n: usize) -> Matrix<F> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { F::one() } else { F::zero() }).collect())
        .collect()
}
