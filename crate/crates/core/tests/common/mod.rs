//! Shared generators and independent oracles for the integration tests and
//! the acceptance harness.
#![allow(dead_code)]

use dhkit::expint::quadrature::integrate;
use dhkit::expint::{PlCell, PlConcaveFunction};
use dhkit::filtration::{FiltrationLevel, GradedFiltration};
use dhkit::geometry::{AffineForm, Polytope, Simplex};
use dhkit::linalg;
use dhkit::measure::{Atom, DhMeasure};
use dhkit::scalar::to_real;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rational with denominator `den` in `[lo, hi]`.
pub fn rand_q(r: &mut ChaCha8Rng, lo: i64, hi: i64, den: i64) -> Q {
    q(r.gen_range(lo * den..=hi * den), den)
}

/// `(1 − e^{−z})/z`, stable near zero.
pub fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `∫_s e^{−ℓ}` by nested adaptive quadrature over the standard simplex,
/// with the innermost coordinate integrated in closed form.
pub fn simplex_exp_oracle(s: &Simplex<Q>, l: &AffineForm<f64>) -> f64 {
    let vals: Vec<f64> = s.vertices().iter().map(|v| l.eval_at(v)).collect();
    let n = s.dim();
    let vol: f64 = to_real(&s.volume());
    let base = vals[0];
    let d: Vec<f64> = vals[1..].iter().map(|v| v - base).collect();
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    fact * vol * (-base).exp() * nested(&d, 1.0)
}

// ∫_{u_1+…+u_k ≤ r} e^{−Σ d_i u_i} du
fn nested(d: &[f64], r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    match d.len() {
        0 => 1.0,
        1 => r * phi1(d[0] * r),
        _ => {
            integrate(
                |u: f64| (-d[0] * u).exp() * nested(&d[1..], r - u),
                0.0,
                r,
                0.0,
                1e-14,
            )
            .value
        }
    }
}

/// Random non-degenerate simplex with vertices in `[−2, 2]^n`.
pub fn random_simplex(r: &mut ChaCha8Rng, n: usize) -> Simplex<Q> {
    loop {
        let verts = (0..=n)
            .map(|_| (0..n).map(|_| rand_q(r, -2, 2, 4)).collect())
            .collect();
        if let Ok(s) = Simplex::new(verts) {
            let vol: f64 = to_real(&s.volume());
            if vol > 0.01 {
                return s;
            }
        }
    }
}

/// Affine form whose values at the vertices of `s` spread over exactly `spread`.
pub fn form_with_spread(r: &mut ChaCha8Rng, s: &Simplex<Q>, spread: f64) -> AffineForm<f64> {
    let n = s.dim();
    loop {
        let g: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let f = AffineForm::new(g.clone(), 0.0);
        let vals: Vec<f64> = s.vertices().iter().map(|v| f.eval_at(v)).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-3 {
            continue;
        }
        let c = spread / (hi - lo);
        return AffineForm::new(g.iter().map(|x| x * c).collect(), r.gen_range(-1.0..1.0) - lo * c);
    }
}

/// Polytope: convex hull of random points, retried until full-dimensional.
pub fn random_polytope(r: &mut ChaCha8Rng, n: usize, points: usize) -> Polytope<Q> {
    loop {
        let pts = (0..points)
            .map(|_| (0..n).map(|_| rand_q(r, -2, 2, 2)).collect())
            .collect();
        if let Ok(p) = Polytope::from_vertices(n, pts) {
            if p.is_full_dimensional() {
                return p;
            }
        }
    }
}

/// Random polytope whose projection to the first `rank` coordinates has the
/// origin in its interior.
pub fn random_proper_polytope(r: &mut ChaCha8Rng, n: usize, rank: usize) -> Polytope<Q> {
    loop {
        let p = random_polytope(r, n, n + 3);
        if let Ok(proj) = p.project(rank) {
            if proj.contains_in_interior(&vec![Q::zero(); rank]) {
                return p;
            }
        }
    }
}

/// A concave PL function on a random 1- or 2-dimensional body, as the
/// minimum of a few random affine pieces.
pub fn random_pl(r: &mut ChaCha8Rng, n: usize) -> PlConcaveFunction<Q> {
    let dom = if n == 1 {
        let a = rand_q(r, -2, 0, 2);
        Polytope::interval(a.clone(), a + rand_q(r, 1, 3, 2)).unwrap()
    } else {
        random_polytope(r, n, n + 2)
    };
    let k = r.gen_range(1..=3);
    let pieces: Vec<AffineForm<Q>> = (0..k)
        .map(|_| AffineForm::new((0..n).map(|_| rand_q(r, -2, 2, 2)).collect(), rand_q(r, -1, 1, 2)))
        .collect();
    PlConcaveFunction::from_min_of_affine(dom, &pieces).unwrap()
}

/// Non-Dirac random DH measure: atomic, or a pushforward in dimension 1 or 2.
pub fn random_measure(r: &mut ChaCha8Rng) -> DhMeasure<f64> {
    match r.gen_range(0..3) {
        0 => {
            let k = r.gen_range(2..12);
            let mut atoms: Vec<Atom<f64>> = (0..k)
                .map(|_| Atom {
                    pos: r.gen_range(-3.0..3.0),
                    mass: r.gen_range(0.1..2.0),
                    weight: None,
                })
                .collect();
            // keep the spread visible
            atoms[0].pos = atoms[1].pos + 0.5;
            DhMeasure::atomic(atoms).unwrap()
        }
        d => loop {
            let g = random_pl(r, d);
            if g.max_value() != g.min_value() {
                return DhMeasure::pushforward(g, vec![]).unwrap();
            }
        },
    }
}

/// Dirac fixtures in each representation.
pub fn dirac_fixtures() -> Vec<DhMeasure<f64>> {
    let seg = Polytope::interval(qi(-1), qi(2)).unwrap();
    let sq = Polytope::cube(&[qi(0), qi(0)], &[qi(1), qi(1)]).unwrap();
    vec![
        DhMeasure::dirac(0.0, 1.0).unwrap(),
        DhMeasure::dirac(-1.5, 3.0).unwrap(),
        DhMeasure::atomic(vec![
            Atom { pos: 2.0, mass: 1.0, weight: None },
            Atom { pos: 2.0, mass: 0.5, weight: None },
        ])
        .unwrap(),
        DhMeasure::pushforward(PlConcaveFunction::affine(seg, AffineForm::constant(1, q(3, 4))).unwrap(), vec![])
            .unwrap(),
        DhMeasure::pushforward(PlConcaveFunction::affine(sq, AffineForm::constant(2, qi(-2))).unwrap(), vec![])
            .unwrap(),
    ]
}

/// Random measure supported in `[0, hi]` with positive spread.
pub fn random_nonneg_measure(r: &mut ChaCha8Rng, hi: f64) -> DhMeasure<f64> {
    if r.gen_bool(0.5) {
        let k = r.gen_range(2..10);
        let mut atoms: Vec<Atom<f64>> = (0..k)
            .map(|_| Atom {
                pos: r.gen_range(0.0..hi),
                mass: r.gen_range(0.1..2.0),
                weight: None,
            })
            .collect();
        atoms[0].pos = 0.0;
        atoms[1].pos = hi;
        DhMeasure::atomic(atoms).unwrap()
    } else {
        let top = (hi * 4.0).floor().max(1.0) as i64;
        let b = q(r.gen_range(1..=top), 4);
        let dom = Polytope::interval(qi(0), b).unwrap();
        let g = PlConcaveFunction::affine(dom, AffineForm::new(vec![qi(1)], qi(0))).unwrap();
        let xi = vec![r.gen_range(-1.0..1.0)];
        DhMeasure::pushforward(g, xi).unwrap()
    }
}

/// Random invertible integer matrix of size `n`.
pub fn random_basis(r: &mut ChaCha8Rng, n: usize) -> Vec<Vec<Q>> {
    loop {
        let b: Vec<Vec<Q>> = (0..n).map(|_| (0..n).map(|_| qi(r.gen_range(-2..=2))).collect()).collect();
        if linalg::rank(&b, n) == n {
            return b;
        }
    }
}

/// Random level with integer values (ties likely) on a random basis.
pub fn random_level(r: &mut ChaCha8Rng, m: u32, n: usize) -> FiltrationLevel<Q> {
    let values = (0..n).map(|_| qi(r.gen_range(-3..=3))).collect();
    FiltrationLevel::adapted(m, random_basis(r, n), values, None).unwrap()
}

/// Filtration at degrees 1..=3 with rank 1 or 2 torus weights whose hull
/// has the origin inside.
pub fn random_weighted_filtration(r: &mut ChaCha8Rng) -> GradedFiltration<Q> {
    let rank = r.gen_range(1..=2);
    let levels = (1..=3u32)
        .map(|m| loop {
            let n = r.gen_range(rank + 2..=7);
            let ws: Vec<Vec<Q>> = (0..n).map(|_| (0..rank).map(|_| qi(r.gen_range(-2..=2) * m as i64)).collect()).collect();
            let Ok(hull) = Polytope::from_vertices(rank, ws.clone()) else { continue };
            if !hull.contains_in_interior(&vec![Q::zero(); rank]) {
                continue;
            }
            let vals = (0..n).map(|_| qi(r.gen_range(-3..=3) * m as i64)).collect();
            break FiltrationLevel::diagonal(m, vals, Some(ws)).unwrap();
        })
        .collect();
    GradedFiltration::new("random weighted".into(), levels).unwrap()
}

/// Same filtration on a different adapted basis: each row picks up multiples
/// of rows that sit at least as high in the filtration.
pub fn rebased(r: &mut ChaCha8Rng, lv: &FiltrationLevel<Q>) -> FiltrationLevel<Q> {
    let b = lv.basis();
    let v = lv.values();
    let rows = (0..b.len())
        .map(|i| {
            let mut row = b[i].clone();
            for j in 0..b.len() {
                if (v[j] > v[i] || (v[j] == v[i] && j < i)) && r.gen_bool(0.5) {
                    let c = qi(r.gen_range(-2..=2));
                    row = row.iter().zip(&b[j]).map(|(x, y)| x.clone() + c.clone() * y.clone()).collect();
                }
            }
            row
        })
        .collect();
    FiltrationLevel::adapted(lv.degree(), rows, v.to_vec(), None).unwrap()
}

pub fn single(lv: FiltrationLevel<Q>) -> GradedFiltration<Q> {
    GradedFiltration::new("random".into(), vec![lv]).unwrap()
}

/// `(f(x+h) − f(x−h)) / 2h`.
pub fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

pub fn one() -> Q {
    Q::one()
}

pub fn cell(verts: Vec<Vec<Q>>, grad: Vec<Q>, c: Q) -> PlCell<Q> {
    PlCell {
        simplex: Simplex::new(verts).unwrap(),
        affine: AffineForm::new(grad, c),
    }
}
