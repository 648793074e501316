use isomeric_core::bubbles::BubbleContext;
use isomeric_core::cartan::CartanDatum;
use isomeric_core::fields::FieldDescriptor;
use isomeric_core::poly::UPoly;
use isomeric_core::runner::{demazure_oracle, inverse_oracle, random_character};
use isomeric_core::series::{vars, TruncSeries, MAX_VARS};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn series_from(field: &std::sync::Arc<FieldDescriptor>, order: u32, coeffs: &[(u8, u8, i64)]) -> TruncSeries {
    let v = vars(&["x", "y"]);
    let mut s = TruncSeries::zero(field, &v, order);
    for &(a, b, c) in coeffs {
        let mut e = [0u8; MAX_VARS];
        e[0] = a;
        e[1] = b;
        s.add_term(e, field.from_i64(c));
    }
    s
}

fn tower() -> std::sync::Arc<FieldDescriptor> {
    let q = FieldDescriptor::rationals();
    q.adjoin_root(&q.from_i64(-1)).unwrap().adjoin_root(&q.from_i64(2)).unwrap().adjoin_root(&q.from_i64(6)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms_in_towers(seed in any::<u64>(), p in prop::sample::select(vec![0u64, 3, 5, 7, 101])) {
        let field = if p == 0 { tower() } else { FieldDescriptor::prime_square(p).unwrap() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (field.random_element(&mut rng), field.random_element(&mut rng), field.random_element(&mut rng));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        if !a.is_zero() {
            prop_assert!((&a * &a.inv().unwrap()).is_one());
        }
    }

    #[test]
    fn demazure_matches_antisymmetrization(terms in prop::collection::vec((0u8..6, 0u8..6, -9i64..9), 1..8)) {
        let f = FieldDescriptor::rationals();
        let s = series_from(&f, 13, &terms);
        prop_assert_eq!(s.demazure(0, 1).unwrap().truncate(12), demazure_oracle(&s).truncate(12));
    }

    #[test]
    fn inverse_matches_newton(c0 in prop::sample::select(vec![-3i64, -1, 1, 2, 5]),
                              terms in prop::collection::vec((0u8..4, 0u8..4, -5i64..5), 0..6)) {
        let f = FieldDescriptor::prime(7).unwrap();
        let mut s = series_from(&f, 7, &terms);
        s.add_term([0; MAX_VARS], -s.constant_term());
        s.add_term([0; MAX_VARS], f.from_i64(c0));
        prop_assert_eq!(s.inv().unwrap(), inverse_oracle(&s).unwrap());
    }

    #[test]
    fn substitution_is_functorial(a in prop::collection::vec((0u8..4, 0u8..4, -4i64..4), 1..5),
                                  b in prop::collection::vec((1u8..3, 0u8..2, -4i64..4), 1..4),
                                  c in prop::collection::vec((0u8..2, 1u8..3, -4i64..4), 1..4)) {
        let f = FieldDescriptor::rationals();
        let n = 6;
        let outer = series_from(&f, n, &a);
        let sx = series_from(&f, n, &b);
        let sy = series_from(&f, n, &c);
        let v = vars(&["x", "y"]);
        let x = TruncSeries::var(&f, &v, 0, n);
        let y = TruncSeries::var(&f, &v, 1, n);
        let tx = &x + &(&y * &y);
        let ty = &y - &(&x * &y);
        let step = outer.subst(&[sx.clone(), sy.clone()]).unwrap().subst(&[tx.clone(), ty.clone()]).unwrap();
        let composed = outer.subst(&[sx.subst(&[tx.clone(), ty.clone()]).unwrap(), sy.subst(&[tx, ty]).unwrap()]).unwrap();
        prop_assert_eq!(step, composed);
    }

    #[test]
    fn crunchy_shifts_by_simple_roots(seed in any::<u64>(), p in prop::sample::select(vec![0u64, 3, 5, 7])) {
        let datum = if p == 0 {
            let qs: Vec<_> = isomeric_core::kkt::default_window(0, 3);
            CartanDatum::with_colors(0, &qs, &[]).unwrap()
        } else {
            CartanDatum::with_colors(p, &[], &[]).unwrap()
        };
        let w = datum.default_window(3);
        let ctx = BubbleContext::new(&datum, &w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n, k) = random_character(&ctx, &mut rng);
        let ch = ctx.character_from_minpolys(&m, &n, k).unwrap();
        for i in &w {
            let up = ctx.crunchy_p(&ch, i).unwrap();
            prop_assert_eq!(up.weight().minus(&ch.weight()), datum.alpha_weight(i).unwrap());
            prop_assert_eq!(up.kappa(), ch.kappa());
            let back = ctx.crunchy_q(&up, i).unwrap();
            prop_assert_eq!(back.o(), ch.o());
        }
    }

    #[test]
    fn reflection_is_an_involution(coeffs in prop::collection::vec(-9i64..9, 0..8)) {
        let f = FieldDescriptor::prime(11).unwrap();
        let p = UPoly::new(&f, coeffs.iter().map(|c| f.from_i64(*c)).collect());
        prop_assert_eq!(p.reflect().reflect(), p);
    }
}

#[test]
fn b_is_injective_into_j_over_prime_fields() {
    for p in [3u64, 5, 7, 11] {
        let datum = CartanDatum::with_colors(p, &[], &[]).unwrap();
        let field = datum.field().clone();
        let elements = field.elements().unwrap();
        let in_i: Vec<_> = elements.iter().filter(|x| x.is_base() && datum.in_i(x)).cloned().collect();
        let mut images = Vec::new();
        for i in &in_i {
            let b = datum.b_map(i).unwrap();
            assert!(datum.in_j(&b), "p={p}: b({i}) = {b} not in J");
            assert_eq!(&datum.b_inv(&b).unwrap(), i);
            assert!(!images.contains(&b));
            images.push(b);
        }
        assert_eq!(images.len(), (p as usize + 1) / 2, "p={p}");
    }
}
