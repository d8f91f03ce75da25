mod common;

use cylnorm::boolfun::{fourier_transform, RealFunction};
use cylnorm::certify::Expr;
use cylnorm::cylinders::mu_star;
use cylnorm::lp::{solve, verify, LinearProgram, Relation, Sense};
use cylnorm::rational::{int, rat, to_f64, Rational};
use cylnorm::tensors::{RationalTensor, Shape};
use cylnorm::Limits;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn small_rat() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(p, q)| rat(p, q))
}

fn tensor(dims: Vec<usize>) -> impl Strategy<Value = RationalTensor> {
    let size: usize = dims.iter().product();
    prop::collection::vec(small_rat(), size)
        .prop_map(move |e| RationalTensor::new(Shape::new(dims.clone()).unwrap(), e).unwrap())
}

fn tiny_shape() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![Just(vec![2, 2]), Just(vec![2, 3]), Just(vec![3, 2]), Just(vec![2, 2, 2])]
}

fn tensor_pair() -> impl Strategy<Value = (RationalTensor, RationalTensor)> {
    tiny_shape().prop_flat_map(|d| (tensor(d.clone()), tensor(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inner_product_is_symmetric_and_hadamard_moves((a, b) in tensor_pair(), c in any::<u64>()) {
        let mut r = common::rng(c);
        let c = common::random_rational(&mut r, a.shape().dims());
        prop_assert_eq!(a.inner_product(&b).unwrap(), b.inner_product(&a).unwrap());
        let lhs = a.inner_product(&b.hadamard(&c).unwrap()).unwrap();
        let rhs = a.hadamard(&b).unwrap().inner_product(&c).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert!(a.hadamard(&b).unwrap().l1_norm() <= b.linf_norm() * a.l1_norm());
    }

    #[test]
    fn contraction_of_matrix_is_gram(b in tensor(vec![3, 3])) {
        let g = b.contraction_product(0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = Rational::zero();
                for x in 0..3 {
                    s += b.get(&[x, i]) * b.get(&[x, j]);
                }
                prop_assert_eq!(g.get(&[i, j]), &(s / int(3)));
            }
        }
    }

    #[test]
    fn fourier_round_trip(m in 0u32..=4, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let t = common::random_rational(&mut r, &[1usize << m]);
        let f = RealFunction::new(m, t.entries().to_vec()).unwrap();
        prop_assert_eq!(fourier_transform(&f).inverse(), f);
    }

    #[test]
    fn mu_star_matches_brute_force_and_l1(q in tiny_shape().prop_flat_map(tensor)) {
        let lim = Limits::default();
        let v = mu_star(&q, &lim).unwrap().value;
        prop_assert_eq!(&v, &common::brute_mu_star(&q));
        prop_assert!(v <= q.l1_norm());
    }

    #[test]
    fn mu_star_is_a_seminorm((a, b) in tensor_pair(), c in small_rat()) {
        let lim = Limits::default();
        let ms = |t: &RationalTensor| mu_star(t, &lim).unwrap().value;
        prop_assert_eq!(ms(&a.scale(&c)), c.abs() * ms(&a));
        prop_assert!(ms(&a.add(&b).unwrap()) <= ms(&a) + ms(&b));
    }

    #[test]
    fn lp_is_deterministic_and_verified(
        rows in prop::collection::vec(prop::collection::vec(small_rat(), 3), 1..4),
        obj in prop::collection::vec(small_rat(), 3),
    ) {
        // Box-bounded maximisation is always feasible at 0 and bounded.
        let mut lp = LinearProgram::new(3, Sense::Maximize);
        lp.set_objective(obj);
        for j in 0..3 {
            lp.set_bounds(j, Some(int(0)), Some(int(5)));
        }
        for row in rows {
            lp.add_constraint(row, Relation::Le, int(4));
        }
        let a = solve(&lp).unwrap();
        let b = solve(&lp).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(verify(&lp, &a).is_ok());
    }

    #[test]
    fn expr_ordering_agrees_with_floats(
        f1 in 1i64..50, e1 in -40i64..40, d1 in 1i64..4,
        f2 in 1i64..50, e2 in -40i64..40, d2 in 1i64..4,
    ) {
        let x = Expr::two_power(int(f1), rat(e1, d1));
        let y = Expr::two_power(int(f2), rat(e2, d2));
        let (a, b) = (x.to_f64(), y.to_f64());
        prop_assume!((a - b).abs() > 1e-9 * a.max(b));
        prop_assert_eq!(x.cmp_exact(&y).unwrap(), a.partial_cmp(&b).unwrap());
        prop_assert!((x.log2_f64() - a.log2()).abs() < 1e-9);
        if let Some(r) = x.as_rational() {
            prop_assert!((to_f64(&r) - a).abs() <= 1e-9 * a);
        }
    }
}
