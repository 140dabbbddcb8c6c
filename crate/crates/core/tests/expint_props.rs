mod common;

use common::*;
use dhkit::expint::{pl_exp_integral, pl_product_exp_integral, ExpIntegrator, KernelConfig, PlConcaveFunction, Route};
use dhkit::geometry::{AffineForm, Simplex};
use proptest::prelude::*;
use rand::Rng;

fn cfg() -> ProptestConfig {
    ProptestConfig {
        cases: 32,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn with_route(route: Route) -> ExpIntegrator<f64> {
    ExpIntegrator {
        kernel: KernelConfig {
            route,
            ..KernelConfig::default()
        },
        ..ExpIntegrator::default()
    }
}

/// Splits `s` at the midpoint of its first edge.
fn halves(s: &Simplex<Q>) -> (Simplex<Q>, Simplex<Q>) {
    let v = s.vertices();
    let mid: Vec<Q> = v[0].iter().zip(&v[1]).map(|(a, b)| (a + b) * q(1, 2)).collect();
    let mut a = v.to_vec();
    let mut b = v.to_vec();
    a[1] = mid.clone();
    b[0] = mid;
    (Simplex::new(a).unwrap(), Simplex::new(b).unwrap())
}

fn pairing(n: usize, xi: &[f64]) -> AffineForm<f64> {
    AffineForm::projected_pairing(n, xi)
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn series_and_automatic_paths_match_the_oracle(seed in any::<u64>(), n in 1usize..=4, e in -8.0f64..=-3.0) {
        let mut r = rng(seed);
        let s = random_simplex(&mut r, n);
        let l = form_with_spread(&mut r, &s, 10f64.powf(e));
        let want = simplex_exp_oracle(&s, &l);
        for route in [Route::Series, Route::Auto] {
            let got = with_route(route).simplex(&s, &l).unwrap();
            prop_assert!(got.est_rel_error >= 0.0);
            prop_assert!(rel_err(got.value, want) <= 1e-10, "{:?}: {} vs {}", route, got.value, want);
        }
    }

    #[test]
    fn splitting_a_simplex_preserves_the_integral(seed in any::<u64>(), n in 1usize..=4, e in -6.0f64..=1.5) {
        let mut r = rng(seed);
        let s = random_simplex(&mut r, n);
        let l = form_with_spread(&mut r, &s, 10f64.powf(e));
        let it = ExpIntegrator::<f64>::default();
        let whole = it.simplex(&s, &l).unwrap().value;
        let (a, b) = halves(&s);
        let parts = it.simplex(&a, &l).unwrap().value + it.simplex(&b, &l).unwrap().value;
        prop_assert!(rel_err(whole, parts) <= 1e-12, "{} vs {}", whole, parts);
    }

    #[test]
    fn twist_derivative_is_minus_the_weighted_integral(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = rng(seed);
        let g = random_pl(&mut r, n);
        let xi: Vec<f64> = (0..n).map(|_| r.gen_range(-1.5..1.5)).collect();
        let z = pl_exp_integral(&g, &pairing(n, &xi)).unwrap().value;
        let h = 1e-4;
        for j in 0..n {
            let coord = AffineForm::<f64>::coordinate(n, j);
            let an = -pl_product_exp_integral(&g, &pairing(n, &xi), &[&coord]).unwrap().value;
            // relative error is only meaningful away from a vanishing derivative
            prop_assume!(an.abs() > 1e-2 * z);
            let fd = central(
                |t| {
                    let mut x = xi.clone();
                    x[j] = t;
                    pl_exp_integral(&g, &pairing(n, &x)).unwrap().value
                },
                xi[j],
                h,
            );
            prop_assert!(rel_err(an, fd) <= 1e-6, "coordinate {}: {} vs {}", j, an, fd);
        }
    }

    #[test]
    fn result_does_not_depend_on_thread_count(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dom = random_polytope(&mut r, 2, 12);
        let pieces: Vec<AffineForm<Q>> = (0..4)
            .map(|_| AffineForm::new(vec![rand_q(&mut r, -3, 3, 2), rand_q(&mut r, -3, 3, 2)], rand_q(&mut r, -1, 1, 2)))
            .collect();
        let g = PlConcaveFunction::from_min_of_affine(dom, &pieces).unwrap();
        let shift = pairing(2, &[r.gen_range(-1.0..1.0)]);
        let run = |k: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .unwrap()
                .install(|| pl_exp_integral(&g, &shift).unwrap())
        };
        let base = run(1);
        for k in [2, 3, 8] {
            let other = run(k);
            prop_assert_eq!(base.value.to_bits(), other.value.to_bits());
            prop_assert_eq!(base.est_rel_error.to_bits(), other.est_rel_error.to_bits());
        }
    }
}
