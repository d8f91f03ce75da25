//! Small worked instances checked end to end through the public API.

mod common;

use cylnorm::approxdeg::{alpha_d, deg_alpha, dual_polynomial, verify_dual_polynomial, DualPolynomial};
use cylnorm::boolfun::{fourier_transform, BooleanFunction, RealFunction};
use cylnorm::cylinders::{enumerate_basis, mu_star, CylinderIntersection};
use cylnorm::lp::{solve, LinearProgram, LpStatus, Relation, Sense};
use cylnorm::norms::{Alpha, NormEngine};
use cylnorm::pattern::{degenerate_cube_stats, embed_into_disj, uniform_coverage_check, PatternSpec};
use cylnorm::rational::{int, rat};
use cylnorm::tensors::{RationalTensor, Shape, SignTensor};
use cylnorm::Limits;

fn shape(d: &[usize]) -> Shape {
    Shape::new(d.to_vec()).unwrap()
}

#[test]
fn lp_small_programs() {
    let mut p = LinearProgram::new(1, Sense::Maximize);
    p.set_objective(vec![int(1)]);
    p.add_constraint(vec![int(1)], Relation::Le, int(3));
    assert_eq!(solve(&p).unwrap().value, Some(int(3)));

    let mut p = LinearProgram::new(1, Sense::Maximize);
    p.set_bounds(0, None, None);
    p.add_constraint(vec![int(1)], Relation::Ge, int(1));
    p.add_constraint(vec![int(1)], Relation::Le, int(0));
    assert_eq!(solve(&p).unwrap().status, LpStatus::Infeasible);

    let mut p = LinearProgram::new(2, Sense::Minimize);
    p.set_objective(vec![int(1), int(1)]);
    p.add_constraint(vec![int(1), int(-1)], Relation::Eq, int(1));
    let s = solve(&p).unwrap();
    assert_eq!(s.value, Some(int(1)));
    assert_eq!(s.primal, vec![int(1), int(0)]);
}

#[test]
fn or2_spectrum_and_table() {
    let lim = Limits::default();
    let or2 = BooleanFunction::or(2, &lim).unwrap();
    assert_eq!(or2.table(), &[1, -1, -1, -1]);
    let s = fourier_transform(&or2.to_real());
    // mean of (1,-1,-1,-1) is -1/2; every other coefficient follows from the 4-point transform
    assert_eq!(s.coefficients(), &[rat(-1, 2), rat(1, 2), rat(1, 2), rat(1, 2)]);
    assert_eq!(or2.to_real().l1_norm(), int(4));
    for m in 1..=4 {
        let f = BooleanFunction::or(m, &lim).unwrap();
        assert_eq!(fourier_transform(&f.to_real()).degree(), Some(m));
    }
}

#[test]
fn basis_sizes_and_mu_star() {
    let lim = Limits::default();
    assert_eq!(enumerate_basis(&shape(&[2, 2]), &lim).unwrap().len(), 9);
    assert_eq!(enumerate_basis(&shape(&[2]), &lim).unwrap().len(), 1);
    // Regression value from the brute-force dedup oracle in the unit tests.
    let b3 = enumerate_basis(&shape(&[2, 2, 2]), &lim).unwrap();
    assert!(b3.len() > 9);

    let j = RationalTensor::ones(shape(&[2, 2]));
    let h = SignTensor::sylvester(1).unwrap().to_rational();
    let id = h.contraction_product(0).unwrap();
    assert_eq!(mu_star(&j, &lim).unwrap().value, int(4));
    assert_eq!(mu_star(&h, &lim).unwrap().value, int(2));
    assert_eq!(mu_star(&id, &lim).unwrap().value, int(2));
    assert_eq!(id.mean_abs(), rat(1, 2));

    let z = CylinderIntersection::new(shape(&[2, 2]), vec![vec![true, false], vec![true, true]]).unwrap();
    assert_eq!(z.characteristic_tensor(), RationalTensor::from_ints(shape(&[2, 2]), &[1, 0, 1, 0]).unwrap());
}

#[test]
fn hadamard_norms() {
    let eng = NormEngine::new(Limits::default());
    let h = SignTensor::sylvester(1).unwrap();
    let p = RationalTensor::ones(h.shape().clone()).scale(&rat(1, 4));
    assert_eq!(eng.disc_p(&h, &p).unwrap().value, rat(1, 2));

    let inf = eng.mu_alpha_primal(&h, &Alpha::Infinity).unwrap().value;
    assert!(&inf * &inf >= int(2));
    assert_eq!(eng.mu_alpha_dual(&h, &Alpha::Infinity).unwrap().value, inf);
    assert_eq!(eng.disc(&h).unwrap().value * &inf, int(1));
    assert!(eng.mu_pm(&h.to_rational()).unwrap().value <= eng.mu(&h.to_rational()).unwrap().value);

    let j = SignTensor::ones(shape(&[2, 2]));
    for a in [Alpha::int(1), Alpha::int(2), Alpha::Infinity] {
        assert_eq!(eng.mu_alpha_primal(&j, &a).unwrap().value, int(1));
    }
}

#[test]
fn approximate_degree_examples() {
    let lim = Limits::default();
    let or1 = BooleanFunction::or(1, &lim).unwrap();
    let or2 = BooleanFunction::or(2, &lim).unwrap();
    for a in [Alpha::int(1), Alpha::int(3), Alpha::Infinity] {
        assert_eq!(deg_alpha(&or1, &a, &lim).unwrap(), 1);
    }
    assert_eq!(deg_alpha(&or2, &Alpha::Infinity, &lim).unwrap(), 1);
    assert!(alpha_d(&or2, 0, &lim).unwrap().value.is_infinite());
    assert_eq!(alpha_d(&or2, 2, &lim).unwrap().value, Alpha::int(1));
    assert!(alpha_d(&or2, 1, &lim).unwrap().value.as_finite().is_some());

    // deg_3(OR_m)^2 >= m/6
    for m in 1..=4 {
        let f = BooleanFunction::or(m, &lim).unwrap();
        let d = deg_alpha(&f, &Alpha::int(3), &lim).unwrap();
        assert!(6 * d * d >= m);
        let v = dual_polynomial(&f, &Alpha::int(3), &lim).unwrap();
        assert!(verify_dual_polynomial(&v, &f, &Alpha::int(3)).passed());
    }
}

#[test]
fn hand_built_dual_polynomials() {
    let lim = Limits::default();
    let or2 = BooleanFunction::or(2, &lim).unwrap();
    let hand = |vals: [i64; 4], den: i64| DualPolynomial {
        values: RealFunction::new(2, vals.iter().map(|&v| rat(v, den)).collect()).unwrap(),
        vanishing_degree: 0,
        approx_degree: 1,
        alpha: Alpha::Infinity,
        correlation: int(1),
    };
    assert!(verify_dual_polynomial(&hand([1, 0, 0, -1], 2), &or2, &Alpha::Infinity).passed());
    assert!(!verify_dual_polynomial(&hand([1, 0, 0, -1], 1), &or2, &Alpha::Infinity).unit_l1);
    assert!(!verify_dual_polynomial(&hand([1, 0, 0, 0], 1), &or2, &Alpha::Infinity).vanishes);

    let xor2 = BooleanFunction::xor(2, &lim).unwrap();
    let mut v = hand([1, -1, -1, 1], 4);
    v.vanishing_degree = 1;
    v.approx_degree = 2;
    assert!(verify_dual_polynomial(&v, &xor2, &Alpha::Infinity).passed());
}

#[test]
fn pattern_examples() {
    let lim = Limits::default();
    let spec = |m, side| PatternSpec {
        k: 2,
        m,
        side,
        phi: BooleanFunction::or(m, &lim).unwrap().to_real(),
        scale: Some(int(1)),
    };
    assert_eq!(uniform_coverage_check(&spec(1, 2), &lim).unwrap().counts, vec![4, 4]);
    assert!(uniform_coverage_check(&spec(2, 2), &lim).unwrap().uniform);

    assert_eq!(degenerate_cube_stats(2, 2, 1, &lim).unwrap().p1, rat(1, 2));
    assert_eq!(degenerate_cube_stats(3, 2, 1, &lim).unwrap().p1, rat(3, 4));
    let s = degenerate_cube_stats(2, 4, 2, &lim).unwrap();
    assert_eq!(s.distribution[2], rat(1, 16));
    assert_eq!(s.enumerated.as_ref(), Some(&s.distribution));

    for (k, m) in [(2, 1), (2, 2), (3, 1)] {
        let r = embed_into_disj(k, m, 2, &lim).unwrap();
        assert!(r.matches_or && r.matches_disj);
    }
    assert_eq!(embed_into_disj(2, 2, 2, &lim).unwrap().n_prime, 4);
}
