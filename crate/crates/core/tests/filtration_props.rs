mod common;

use common::*;
use dhkit::filtration::{
    d2_squared_level, d_p_level, empirical_dh, initial_term_degeneration, psi_m, q_m, q_of_basis, relative_minima,
    sqrt_triangle_holds, weight_filtration, FiltrationLevel, MonomialModel,
};
use dhkit::scalar::to_real;
use num_traits::Zero;
use proptest::prelude::*;
use rand::Rng;

fn cfg() -> ProptestConfig {
    ProptestConfig {
        cases: 32,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn psi_grows_with_the_filtration(seed in any::<u64>(), n in 1usize..=6, m in 1u32..=4) {
        let mut r = rng(seed);
        let lv = random_level(&mut r, m, n);
        let raise: Vec<i64> = (0..n).map(|_| if r.gen_bool(0.4) { r.gen_range(1..=3) } else { 0 }).collect();
        let vals = lv.values().iter().zip(&raise).map(|(v, d)| v + qi(*d)).collect();
        let hi = FiltrationLevel::adapted(m, lv.basis().to_vec(), vals, None).unwrap();
        let strict = raise.iter().any(|d| *d > 0);
        prop_assert!(lv.is_contained_in(&hi));
        prop_assert_eq!(lv.is_strictly_contained_in(&hi), strict);
        let (a, b) = (single(lv), single(hi));
        let (pa, pb): (f64, f64) = (psi_m(&a, m).unwrap(), psi_m(&b, m).unwrap());
        if strict {
            prop_assert!(pa < pb, "{} !< {}", pa, pb);
        } else {
            prop_assert_eq!(pa, pb);
        }
    }

    #[test]
    fn adapted_bases_minimize_q(seed in any::<u64>(), n in 1usize..=5, m in 1u32..=3) {
        let mut r = rng(seed);
        let f = single(random_level(&mut r, m, n));
        let lv = f.level(m).unwrap();
        let qm: f64 = q_m(&f, m).unwrap();
        let adapted: f64 = q_of_basis(&f, m, &lv.basis().to_vec()).unwrap();
        prop_assert!((adapted - qm).abs() <= 1e-15 * qm);
        let other = rebased(&mut r, lv);
        let again: f64 = q_of_basis(&f, m, &other.basis().to_vec()).unwrap();
        prop_assert!((again - qm).abs() <= 1e-15 * qm);

        let b = random_basis(&mut r, n);
        let mut vals: Vec<Q> = b.iter().map(|v| lv.value_of(v).unwrap().unwrap()).collect();
        vals.sort_by(|x, y| y.cmp(x));
        let qb: f64 = q_of_basis(&f, m, &b).unwrap();
        if vals == lv.successive_minima() {
            prop_assert!((qb - qm).abs() <= 1e-15 * qm);
        } else {
            prop_assert!(qb > qm, "{} vs {}", qb, qm);
        }
    }

    #[test]
    fn d_p_is_a_pseudometric(seed in any::<u64>(), n in 1usize..=5, m in 1u32..=3, p in 1.0f64..4.0) {
        let mut r = rng(seed);
        let a = single(random_level(&mut r, m, n));
        let b = single(random_level(&mut r, m, n));
        let c = single(random_level(&mut r, m, n));
        let a2 = single(rebased(&mut r, a.level(m).unwrap()));
        let d = |x, y| d_p_level::<Q, f64>(x, y, m, p).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &a2), 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-14 * d(&a, &b).max(1.0));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        let e = |x, y| d2_squared_level(x, y, m).unwrap();
        prop_assert!(sqrt_triangle_holds(&e(&a, &c), &e(&a, &b), &e(&b, &c)));
        prop_assert!(e(&a, &a2).is_zero());
    }

    #[test]
    fn twisting_moves_atoms_by_their_weights(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_weighted_filtration(&mut r);
        let m = r.gen_range(1..=3u32);
        let lv = f.level(m).unwrap();
        let rank = lv.weight_rank().unwrap();
        let xi: Vec<Q> = (0..rank).map(|_| rand_q(&mut r, -2, 2, 3)).collect();
        let before = empirical_dh::<Q, f64>(&f, m, 1).unwrap();
        let after = empirical_dh::<Q, f64>(&f.twist(&xi).unwrap(), m, 1).unwrap();
        let xf: Vec<f64> = xi.iter().map(to_real).collect();
        let want = sorted(
            before
                .atoms()
                .unwrap()
                .iter()
                .map(|a| a.pos + a.weight.as_ref().unwrap().iter().zip(&xf).map(|(w, x)| w * x).sum::<f64>())
                .collect(),
        );
        let got = sorted(after.atoms().unwrap().iter().map(|a| a.pos).collect());
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-13, "{} vs {}", g, w);
        }
        // the weights themselves are untouched
        prop_assert_eq!(after.mass(), before.mass());
    }

    #[test]
    fn rescale_shift_is_affine_on_atoms(seed in any::<u64>(), n in 1usize..=6, m in 1u32..=4) {
        let mut r = rng(seed);
        let f = single(random_level(&mut r, m, n));
        let (a, b) = (rand_q(&mut r, 1, 3, 4), rand_q(&mut r, -2, 2, 3));
        let g = f.rescale_shift(&a, &b).unwrap();
        let (af, bf): (f64, f64) = (to_real(&a), to_real(&b));
        let x = empirical_dh::<Q, f64>(&f, m, 1).unwrap();
        let y = empirical_dh::<Q, f64>(&g, m, 1).unwrap();
        for (u, v) in x.atoms().unwrap().iter().zip(y.atoms().unwrap()) {
            prop_assert!((af * u.pos + bf - v.pos).abs() <= 1e-13);
        }
        let mm = qi(m as i64);
        let want: Vec<Q> = f.level(m).unwrap().successive_minima().iter().map(|v| a.clone() * v + b.clone() * mm.clone()).collect();
        prop_assert_eq!(g.level(m).unwrap().successive_minima(), want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..cfg() })]

    #[test]
    fn degeneration_keeps_both_minima(seed in any::<u64>(), vars in 2usize..=3) {
        let mut r = rng(seed);
        let model = MonomialModel::new(vars).unwrap();
        let m = if vars == 2 { r.gen_range(1..=6) } else { r.gen_range(1..=2) };
        let n = model.dim(m);
        let w: Vec<Q> = (0..vars).map(|_| qi(r.gen_range(-2..=2))).collect();
        let f1 = single(random_level(&mut r, m, n));
        let f0 = weight_filtration(&model, &w, &[m]).unwrap();
        let fp = initial_term_degeneration(&model, &w, &f1, m).unwrap();
        prop_assert_eq!(fp.level(m).unwrap().successive_minima(), f1.level(m).unwrap().successive_minima());
        prop_assert_eq!(relative_minima(&f0, &fp, m).unwrap(), relative_minima(&f0, &f1, m).unwrap());
    }
}
