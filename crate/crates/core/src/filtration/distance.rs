//! Common adapted bases, relative successive minima and the level distances.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::{to_real, Field, Real};

use super::level::FiltrationLevel;
use super::GradedFiltration;

/// Basis adapted to two filtrations at once, with the value pair
/// `(μ_0, μ_1)` of every row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommonBasis<F> {
    pub rows: Matrix<F>,
    pub pairs: Vec<(F, F)>,
}

/// Writes the adapted basis of `lv1` in the adapted basis of `lv0` and
/// reduces each row against the earlier ones until every row has its own
/// last nonzero coordinate. Rows stay unit-triangular over the `lv1` basis,
/// so their `lv1` values are unchanged, and the last coordinate fixes the
/// `lv0` value.
pub fn common_adapted_basis<F: Field>(lv0: &FiltrationLevel<F>, lv1: &FiltrationLevel<F>) -> Result<CommonBasis<F>> {
    let n = lv0.dim();
    if lv1.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: lv1.dim(),
            context: "common adapted basis needs equal dimensions".into(),
        });
    }
    // both bases are stored with values in descending order
    let a = lv0.basis();
    let a_inv = linalg::inverse(a).ok_or(Error::NotABasis(linalg::rank(a, n)))?;
    let mut c: Matrix<F> = lv1
        .basis()
        .iter()
        .map(|b| linalg::row_times(b, &a_inv, n))
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut last = vec![0; n];
    for k in 0..n {
        loop {
            let p = (0..n)
                .rev()
                .find(|&j| !c[k][j].is_zero())
                .expect("rows of an invertible change of basis are nonzero");
            match owner[p] {
                None => {
                    owner[p] = Some(k);
                    last[k] = p;
                    break;
                }
                Some(k2) => {
                    let f = c[k][p].clone() / c[k2][p].clone();
                    for j in 0..=p {
                        if !c[k2][j].is_zero() {
                            let d = f.clone() * c[k2][j].clone();
                            c[k][j] = c[k][j].clone() - d;
                        }
                    }
                }
            }
        }
    }
    let rows = c
        .iter()
        .map(|ck| linalg::row_times(ck, a, n))
        .collect();
    let pairs = (0..n)
        .map(|k| (lv0.values()[last[k]].clone(), lv1.values()[k].clone()))
        .collect();
    Ok(CommonBasis { rows, pairs })
}

/// Relative successive minima `{μ_1 − μ_0}` at level `m`, descending.
pub fn relative_minima<F: Field>(f0: &GradedFiltration<F>, f1: &GradedFiltration<F>, m: u32) -> Result<Vec<F>> {
    let cb = common_adapted_basis(f0.level(m)?, f1.level(m)?)?;
    let mut d: Vec<F> = cb.pairs.into_iter().map(|(a, b)| b - a).collect();
    d.sort_by(|a, b| b.cmp(a));
    Ok(d)
}

/// `((1/N) Σ |Δμ_k/m|^p)^{1/p}`.
pub fn d_p_level<F: Field, T: Real>(f0: &GradedFiltration<F>, f1: &GradedFiltration<F>, m: u32, p: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(Error::InvalidArgument(format!("p = {p} must be at least 1")));
    }
    let d = relative_minima(f0, f1, m)?;
    let n = T::from_usize_lossy(d.len());
    let mm = T::from_u32(m).expect("degree representable");
    let terms: Vec<T> = d.iter().map(|x| (to_real::<F, T>(x) / mm).abs().powf(p)).collect();
    Ok((crate::expint::accumulate::tree_sum(&terms) / n).powf(T::one() / p))
}

/// Exact `d_2(m)^2 = (1/N) Σ (Δμ_k/m)^2`.
pub fn d2_squared_level<F: Field>(f0: &GradedFiltration<F>, f1: &GradedFiltration<F>, m: u32) -> Result<F> {
    let d = relative_minima(f0, f1, m)?;
    let n = F::from_usize(d.len()).expect("dimension representable");
    let mm = F::from_u32(m).expect("degree representable");
    let s = d.iter().fold(F::zero(), |acc, x| {
        let y = x.clone() / mm.clone();
        acc + y.clone() * y
    });
    Ok(s / n)
}

/// Exact test of `√a ≤ √b + √c` for nonnegative `a, b, c`.
pub fn sqrt_triangle_holds<F: Field>(a: &F, b: &F, c: &F) -> bool {
    let lhs = a.clone() - b.clone() - c.clone();
    if !lhs.is_positive() {
        return true;
    }
    let four = F::from_u32(4).expect("small integer");
    lhs.clone() * lhs <= four * b.clone() * c.clone()
}

/// Per-degree `d_p` values and a `c_0 + c_1/m` least-squares extrapolation.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DpSequence<T> {
    pub per_degree: Vec<(u32, T)>,
    pub extrapolated: T,
}

pub fn d_p_sequence<F: Field, T: Real>(
    f0: &GradedFiltration<F>,
    f1: &GradedFiltration<F>,
    p: T,
    degrees: &[u32],
) -> Result<DpSequence<T>> {
    let per_degree = degrees
        .iter()
        .map(|&m| Ok((m, d_p_level(f0, f1, m, p)?)))
        .collect::<Result<Vec<_>>>()?;
    let extrapolated = match per_degree.len() {
        0 => return Err(Error::InsufficientDegrees { have: 0, need: 1 }),
        1 => per_degree[0].1,
        k => {
            // normal equations for d ≈ c0 + c1·u, u = 1/m
            let kk = T::from_usize_lossy(k);
            let (mut su, mut sd, mut suu, mut sud) = (T::zero(), T::zero(), T::zero(), T::zero());
            for &(m, d) in &per_degree {
                let u = T::one() / T::from_u32(m).expect("degree");
                su = su + u;
                sd = sd + d;
                suu = suu + u * u;
                sud = sud + u * d;
            }
            let det = kk * suu - su * su;
            if det.abs() <= T::epsilon() * kk * suu {
                sd / kk
            } else {
                (suu * sd - su * sud) / det
            }
        }
    };
    Ok(DpSequence {
        per_degree,
        extrapolated,
    })
}
