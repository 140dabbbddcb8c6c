//! Quadrature for smooth non-exponential integrands: adaptive Gauss–Kronrod
//! on intervals and collapsed-coordinate Gauss–Legendre on simplices.

use crate::geometry::Simplex;
use crate::scalar::{to_real, Field, Real};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_err: T,
    pub intervals: usize,
}

fn gk15<T: Real>(f: &mut impl FnMut(T) -> T, a: T, b: T) -> (T, T) {
    let c = (a + b) * T::lit(0.5);
    let h = (b - a) * T::lit(0.5);
    let fc = f(c);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let x = h * T::lit(XGK[j]);
        let s = f(c - x) + f(c + x);
        k = k + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            g = g + s * T::lit(WG[j / 2]);
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive GK15 on `[a, b]`, bisecting the worst interval until the
/// summed error estimate meets `max(abs_tol, rel_tol·|I|)`. Relative
/// tolerances below a few ulps of the working precision are raised to it.
pub fn integrate<T: Real>(mut f: impl FnMut(T) -> T, a: T, b: T, abs_tol: T, rel_tol: T) -> QuadResult<T> {
    const MAX_INTERVALS: usize = 4000;
    let rel_tol = rel_tol.max(T::epsilon() * T::lit(16.0));
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let value: T = parts.iter().map(|p| p.2).sum();
        let err: T = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * value.abs()) || parts.len() >= MAX_INTERVALS {
            return QuadResult {
                value,
                abs_err: err,
                intervals: parts.len(),
            };
        }
        let worst = (0..parts.len())
            .max_by(|&i, &j| parts[i].3.partial_cmp(&parts[j].3).unwrap_or(std::cmp::Ordering::Equal))
            .expect("nonempty");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            // interval can no longer be split in this precision
            let value: T = parts.iter().map(|p| p.2).sum::<T>() + gk15(&mut f, lo, hi).0;
            return QuadResult {
                value,
                abs_err: err,
                intervals: parts.len() + 1,
            };
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre<T: Real>(m: usize) -> Vec<(T, T)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 0 { 1.0 } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((T::lit(0.5 * (1.0 - x)), T::lit(0.5 * w)));
    }
    out
}

/// `∫_s f(y) dy` by a tensor Gauss–Legendre rule of `order` points per axis
/// pulled back through the collapsed-coordinate map of the unit cube.
pub fn simplex_quadrature<F: Field, T: Real>(s: &Simplex<F>, order: usize, f: impl Fn(&[T]) -> T) -> T {
    let n = s.dim();
    let verts: Vec<Vec<T>> = s
        .vertices()
        .iter()
        .map(|v| v.iter().map(to_real::<F, T>).collect())
        .collect();
    let scale: T = to_real(&s.normalized_volume());
    let rule = gauss_legendre::<T>(order);
    let mut idx = vec![0usize; n];
    let mut terms = Vec::with_capacity(order.pow(n as u32));
    let mut y = vec![T::zero(); n];
    loop {
        // x_k = u_k · Π_{j<k} (1 − u_j)
        let mut rest = T::one();
        let mut w = T::one();
        y.clone_from(&verts[0]);
        for k in 0..n {
            let (u, wu) = rule[idx[k]];
            let x = rest * u;
            for (yj, (vj, v0j)) in y.iter_mut().zip(verts[k + 1].iter().zip(&verts[0])) {
                *yj = *yj + x * (*vj - *v0j);
            }
            // ∂x_k/∂u_k = rest
            w = w * wu * rest;
            rest = rest - x;
        }
        terms.push(w * f(&y));
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < order {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    super::accumulate::tree_sum(&terms) * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn gk_integrates_exponential() {
        let r = integrate(|x: f64| (-x).exp(), 0.0, 4.0, 1e-14, 1e-14);
        assert!((r.value - (1.0 - (-4.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn gk_handles_kinks() {
        let r = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, 1e-11, 1e-11);
        assert!((r.value - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let rule = gauss_legendre::<f64>(5);
        let s: f64 = rule.iter().map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 0.1).abs() < 1e-15);
    }

    #[test]
    fn simplex_rule_matches_monomial_moments() {
        // ∫_{Δ_2} y1^2 y2 dy = 2!·1!/5! = 1/60
        let s = Simplex::<BigRational>::standard(2);
        let v = simplex_quadrature(&s, 6, |y: &[f64]| y[0] * y[0] * y[1]);
        assert!((v - 1.0 / 60.0).abs() < 1e-15);
        let s3 = Simplex::<BigRational>::standard(3);
        let vol = simplex_quadrature(&s3, 3, |_: &[f64]| 1.0);
        assert!((vol - 1.0 / 6.0).abs() < 1e-15);
    }
}
