//! The inequality chains: contraction, Hadamard, pattern tensors, degree to
//! norm, communication conversions, disjointness and proof size.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{e_upper, fmt_rat, BoundCertificate, Expr, Quantity, Rel};
use crate::approxdeg::{deg_alpha, dual_polynomial, verify_dual_polynomial};
use crate::boolfun::{BooleanFunction, RealFunction};
use crate::cylinders::{mu_star, CylinderIntersection, MAX_CELLS};
use crate::norms::Alpha;
use crate::pattern::{build_pattern_tensor, build_sign_pattern, size_formula, witness_scale, PatternSpec};
use crate::rational::{self, int, rat, Rational};
use crate::tensors::{RationalTensor, SignTensor};
use crate::{Error, Limits, Result};

const CONTRACTION: &str = "contraction lemma: (mu*(B)/size(B))^(2^(k-1)) <= mu*(B.B)/size(B.B) <= E|B.B|";
const DUALITY: &str = "dual characterisation of mu^alpha through mu*";
const MAIN_LEMMA: &str = "pattern tensor lemma: mu*(A) <= 2^(-d/2^(k-1)) when M >= 2e(k-1)2^(2^(k-1))m/d";
const DEGREE_THEOREM: &str = "degree-to-norm theorem for pattern tensors";
const NISAN_SZEGEDY: &str = "Nisan-Szegedy: deg_3(OR_n) >= sqrt(n/6)";
const ARITHMETIC: &str = "exact rational arithmetic";
const ENUMERATION: &str = "exhaustive enumeration";

/// Largest `k` accepted by the side-condition arithmetic (`2^{2^{k−1}}`).
const MAX_K: u32 = 8;

fn check_k(k: u32) -> Result<()> {
    if !(2..=MAX_K).contains(&k) {
        return Err(Error::Validation(format!("k must be in 2..={MAX_K}, got {k}")));
    }
    Ok(())
}

fn big(n: impl Into<BigInt>) -> Rational {
    Rational::from_integer(n.into())
}

fn two_pow_two_pow(k: u32) -> BigInt {
    BigInt::one() << (1u64 << (k - 1))
}

/// `2^{k−1}`, the exponent denominator of every pattern bound.
fn corner_count(k: u32) -> Rational {
    int(1i64 << (k - 1))
}

/// Whether all pairs of doubled indices differ.
fn all_pairs_differ(multi: &[usize]) -> bool {
    multi.chunks(2).all(|p| p[0] != p[1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HadamardCheck {
    pub is_hadamard: bool,
    pub side: usize,
    pub order: usize,
    /// `(N/(k−1))^{1/2^{k−1}}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<Expr>,
}

/// `H ∙₁ H` vanishes wherever every primed/unprimed pair differs.
pub fn is_hadamard(h: &SignTensor) -> Result<bool> {
    let dims = h.shape().dims();
    if dims.len() < 2 || dims.iter().any(|&n| n != dims[0]) {
        return Ok(false);
    }
    let c = h.to_rational().contraction_product(0)?;
    let ok = c.shape().multi_indices().zip(c.entries()).all(|(idx, v)| !all_pairs_differ(&idx) || v.is_zero());
    Ok(ok)
}

pub fn hadamard_check(h: &SignTensor) -> Result<HadamardCheck> {
    let is_h = is_hadamard(h)?;
    let dims = h.shape().dims();
    let (side, order) = (dims[0], dims.len());
    let bound = if is_h && order >= 2 {
        Some(Expr::new(Rational::one(), rat(side as i64, order as i64 - 1), Rational::new(1.into(), BigInt::one() << (order - 1)))?)
    } else {
        None
    };
    Ok(HadamardCheck { is_hadamard: is_h, side, order, bound })
}

/// `μ^∞(H) ≥ ⟨H,H⟩/μ*(H) ≥ (N/(k−1))^{1/2^{k−1}}` for a Hadamard tensor.
pub fn hadamard_bound(h: &SignTensor, limits: &Limits) -> Result<BoundCertificate> {
    let check = hadamard_check(h)?;
    if !check.is_hadamard {
        return Err(Error::Validation("input is not a Hadamard tensor (equal sides, vanishing contraction)".into()));
    }
    let (n, k) = (check.side, check.order as u32);
    let ford_gal = check.bound.clone().expect("set for Hadamard tensors");
    let hr = h.to_rational();
    let size = big(hr.size());
    let hh = hr.inner_product(&hr)?;
    let cp = hr.contraction_product(0)?;
    let mean = cp.mean_abs();
    let km1 = int(k as i64 - 1);
    let share = &km1 / int(n as i64);
    let root = Rational::new(1.into(), BigInt::one() << (k - 1));
    let upper = Expr::new(size.clone(), share.clone(), root.clone())?;

    let mut cert = BoundCertificate::new(format!("Hadamard bound for a {k}-tensor of side {n}"));
    cert.param("N", n).param("k", k);
    cert.verified(
        "<H,H> = N^k",
        Quantity::rational("<H,H>", hh.clone()),
        Rel::Eq,
        Quantity::rational("N^k", big(BigInt::from(n).pow(k))),
        ARITHMETIC,
    );
    cert.enumerated(
        "E|H.H| <= (k-1)/N for a Hadamard tensor",
        Quantity::rational("E|H.H|", mean.clone()),
        Rel::Le,
        Quantity::rational("(k-1)/N", share),
        ENUMERATION,
    );

    match mu_star(&hr, limits) {
        Ok(ms) => {
            let v = ms.value;
            let ratio = &hh / &v;
            cert.enumerated(
                "mu*(H) by enumeration is within the contraction bound",
                Quantity::rational("mu*(H)", v),
                Rel::Le,
                Quantity::valued("size(H)*((k-1)/N)^(1/2^(k-1))", upper),
                CONTRACTION,
            );
            cert.assume(
                "mu^inf(H) >= <H,H>/mu*(H)",
                Quantity::named("mu^inf(H)"),
                Rel::Ge,
                Quantity::rational("<H,H>/mu*(H)", ratio.clone()),
                DUALITY,
            );
            cert.verified(
                "<H,H>/mu*(H) >= (N/(k-1))^(1/2^(k-1))",
                Quantity::rational("<H,H>/mu*(H)", ratio.clone()),
                Rel::Ge,
                Quantity::valued("(N/(k-1))^(1/2^(k-1))", ford_gal),
                ARITHMETIC,
            );
            cert.conclude("mu^inf(H)", Rel::Ge, Quantity::rational("<H,H>/mu*(H)", ratio), Some(Alpha::Infinity), false);
        }
        Err(Error::Capacity { .. }) => {
            cert.assume(
                "mu*(H) <= size(H)*E|H.H|^(1/2^(k-1))",
                Quantity::named("mu*(H)"),
                Rel::Le,
                Quantity::named("size(H)*E|H.H|^(1/2^(k-1))"),
                CONTRACTION,
            );
            cert.verified(
                "size(H)*E|H.H|^(1/2^(k-1)) <= size(H)*((k-1)/N)^(1/2^(k-1))",
                Quantity::valued("size(H)*E|H.H|^(1/2^(k-1))", Expr::new(size, mean, root)?),
                Rel::Le,
                Quantity::valued("size(H)*((k-1)/N)^(1/2^(k-1))", upper),
                ARITHMETIC,
            );
            cert.assume(
                "mu^inf(H) >= <H,H>/mu*(H) >= N^k/(size(H)*((k-1)/N)^(1/2^(k-1)))",
                Quantity::named("mu^inf(H)"),
                Rel::Ge,
                Quantity::valued("(N/(k-1))^(1/2^(k-1))", ford_gal.clone()),
                DUALITY,
            );
            cert.note("mu*(H) exceeds the search cap; the contraction lemma is applied analytically");
            cert.conclude("mu^inf(H)", Rel::Ge, Quantity::valued("(N/(k-1))^(1/2^(k-1))", ford_gal), Some(Alpha::Infinity), false);
        }
        Err(e) => return Err(e),
    }
    Ok(cert)
}

/// Computes and checks both inequalities of the contraction chain for `B`.
pub fn contraction_chain_check(b: &RationalTensor, limits: &Limits) -> Result<BoundCertificate> {
    let k = b.shape().order();
    let cp = b.contraction_product(0)?;
    let mu_b = mu_star(b, limits)?.value;
    let mu_cp = mu_star(&cp, limits)?.value;
    let exponent = 1i64 << (k - 1);
    let left = rational::pow(&(&mu_b / big(b.size())), exponent)?;
    let middle = &mu_cp / big(cp.size());
    let right = cp.mean_abs();

    let mut cert = BoundCertificate::new(format!("contraction chain for a tensor of shape {:?}", b.shape().dims()));
    cert.param("k", k).param("mu*(B)", fmt_rat(&mu_b)).param("mu*(B.B)", fmt_rat(&mu_cp));
    let l = Quantity::rational("(mu*(B)/size(B))^(2^(k-1))", left);
    let m = Quantity::rational("mu*(B.B)/size(B.B)", middle);
    let r = Quantity::rational("E|B.B|", right);
    cert.enumerated("first contraction inequality", l, Rel::Le, m.clone(), CONTRACTION);
    cert.enumerated("second contraction inequality", m, Rel::Le, r.clone(), CONTRACTION);
    cert.conclude("(mu*(B)/size(B))^(2^(k-1))", Rel::Le, r, None, false);
    Ok(cert)
}

/// `2ê(k−1)2^{2^{k−1}}m`, the right side of `M·d ≥ …`.
pub fn side_condition_threshold(k: u32, m: u32) -> Result<Rational> {
    check_k(k)?;
    Ok(int(2) * e_upper() * int(k as i64 - 1) * big(two_pow_two_pow(k)) * int(m as i64))
}

/// `M·d ≥ 2ê(k−1)2^{2^{k−1}}m`, checked exactly.
pub fn lemma_side_condition(k: u32, m: u32, side: u32, d: u32) -> Result<bool> {
    Ok(int(side as i64) * int(d as i64) >= side_condition_threshold(k, m)?)
}

fn max_low_coefficient(phi: &RealFunction, d: u32) -> Rational {
    (0..(1usize << phi.arity()))
        .filter(|t| t.count_ones() <= d)
        .map(|t| phi.correlation_with_character(t).abs())
        .max()
        .unwrap_or_default()
}

fn lemma_bound(k: u32, d: u32) -> Expr {
    Expr::two_power(Rational::one(), -(int(d as i64) / corner_count(k)))
}

fn push_side_condition(cert: &mut BoundCertificate, k: u32, m: u32, side: u32, d: u32) -> Result<()> {
    cert.verified(
        "lemma side condition M*d >= 2e(k-1)2^(2^(k-1))m with e replaced by an upper bound",
        Quantity::rational("M*d", int(side as i64 * d as i64)),
        Rel::Ge,
        Quantity::rational("2e(k-1)2^(2^(k-1))m", side_condition_threshold(k, m)?),
        ARITHMETIC,
    );
    Ok(())
}

/// `μ*(Q) ≤ 2^{−d/2^{k−1}}` for `Q = A_{k,M,φ}` with the witness scale.
pub fn pattern_mu_star_bound(phi: &RealFunction, k: u32, side: u32, d: u32, limits: &Limits) -> Result<BoundCertificate> {
    check_k(k)?;
    let m = phi.arity();
    if m > limits.max_arity {
        return Err(Error::capacity("arity of phi", m, limits.max_arity));
    }
    if d == 0 || !lemma_side_condition(k, m, side, d)? {
        return Err(Error::ConditionViolated(format!(
            "M*d = {} is below 2e(k-1)2^(2^(k-1))m = {}",
            side as u64 * d as u64,
            fmt_rat(&side_condition_threshold(k, m)?)
        )));
    }
    let l1 = phi.l1_norm();
    if !l1.is_one() {
        return Err(Error::Validation(format!("phi must have l1 norm 1, got {}", fmt_rat(&l1))));
    }
    let low = max_low_coefficient(phi, d);
    if !low.is_zero() {
        return Err(Error::Validation(format!("phi has a nonzero Fourier coefficient of degree <= {d}")));
    }

    let mut cert = BoundCertificate::new(format!("pattern tensor mu* bound (k={k}, m={m}, M={side}, d={d})"));
    cert.param("k", k).param("m", m).param("M", side).param("d", d).param("e_upper", fmt_rat(&e_upper()));
    cert.verified("||phi||_1 = 1", Quantity::rational("||phi||_1", l1), Rel::Eq, Quantity::rational("1", int(1)), ENUMERATION);
    cert.verified(
        "phi is orthogonal to every character of degree <= d",
        Quantity::rational("max_{|T|<=d} |<phi,chi_T>|", low),
        Rel::Eq,
        Quantity::rational("0", int(0)),
        ENUMERATION,
    );
    push_side_condition(&mut cert, k, m, side, d)?;
    let bound = Quantity::valued("2^(-d/2^(k-1))", lemma_bound(k, d));
    cert.assume("mu*(Q) <= 2^(-d/2^(k-1))", Quantity::named("mu*(Q)"), Rel::Le, bound.clone(), MAIN_LEMMA);
    cert.conclude("mu*(Q)", Rel::Le, bound, None, false);
    Ok(cert)
}

/// Whether the pattern tensor can be built and searched exactly.
fn enumerable(k: u32, m: u32, side: u32, limits: &Limits) -> bool {
    let size = size_formula(k, m, side);
    size <= num_bigint::BigUint::from(MAX_CELLS.min(limits.max_tensor_size as usize))
}

/// `μ^α(A_{k,M,f}) ≥ (α₀−α)/(α₀+1) · 2^{d/2^{k−1}}` with `d = deg_{α₀}(f) − 1`.
///
/// Uses the pattern lemma when its side condition holds, or when `d = 0`
/// (then `μ*(Q) ≤ ‖Q‖₁ = 1`). Otherwise falls back to computing `μ*(Q)`
/// exactly if the tensor is small enough.
pub fn degree_to_mu_alpha(
    f: &BooleanFunction,
    k: u32,
    side: u32,
    alpha: &Alpha,
    alpha0: &Alpha,
    limits: &Limits,
) -> Result<BoundCertificate> {
    check_k(k)?;
    alpha.validate()?;
    alpha0.validate()?;
    let valid = match (alpha, alpha0) {
        (Alpha::Finite(a), Alpha::Finite(a0)) => a < a0,
        (Alpha::Infinity, Alpha::Infinity) => true,
        _ => false,
    };
    if !valid {
        return Err(Error::Validation(format!("need alpha < alpha0 < inf or alpha = alpha0 = inf, got {alpha} and {alpha0}")));
    }
    if side < 1 {
        return Err(Error::Validation("M must be at least 1".into()));
    }
    let m = f.arity();
    let deg = deg_alpha(f, alpha0, limits)?;
    let dp = dual_polynomial(f, alpha0, limits)?;
    let report = verify_dual_polynomial(&dp, f, alpha0);
    if !report.passed() {
        return Err(Error::Internal("dual polynomial failed verification".into()));
    }
    let d = dp.vanishing_degree;
    let beta = dp.correlation.clone();
    let one = Rational::one();

    let mut cert = BoundCertificate::new(format!("mu^{alpha} lower bound for the (k={k}, M={side}) pattern tensor of f"));
    cert.param("k", k).param("m", m).param("M", side).param("alpha", alpha).param("alpha0", alpha0);
    cert.param("f", f.to_compact()).param("deg_alpha0(f)", deg).param("d", d);

    let required = match alpha0 {
        Alpha::Finite(a0) => (a0 - &one) / (a0 + &one),
        Alpha::Infinity => one.clone(),
    };
    cert.verified(
        "dual polynomial correlation <f,v> reaches the required level",
        Quantity::rational("<f,v>", beta.clone()),
        Rel::Ge,
        Quantity::rational("required correlation", required),
        ENUMERATION,
    );
    cert.verified(
        "||v||_1 = 1",
        Quantity::rational("||v||_1", dp.values.l1_norm()),
        Rel::Eq,
        Quantity::rational("1", one.clone()),
        ENUMERATION,
    );
    cert.verified(
        "v is orthogonal to every character of degree <= d",
        Quantity::rational("max_{|T|<=d} |<v,chi_T>|", max_low_coefficient(&dp.values, d)),
        Rel::Eq,
        Quantity::rational("0", Rational::zero()),
        ENUMERATION,
    );
    if alpha0.is_infinite() {
        let worst = (0..(1usize << m)).map(|x| dp.values.eval(x) * int(f.eval(x) as i64)).min().unwrap_or_default();
        cert.verified(
            "v agrees in sign with f",
            Quantity::rational("min_x v(x)f(x)", worst),
            Rel::Ge,
            Quantity::rational("0", Rational::zero()),
            ENUMERATION,
        );
    }

    // Q = c·A_{k,M,v}; ⟨A,Q⟩ = ⟨f,v⟩ and ‖Q‖₁ = ‖v‖₁ under c = 2^m/size.
    let mut spec = PatternSpec::new(k, m, side, dp.values.clone(), None)?;
    spec.scale = Some(witness_scale(&spec));
    let small = enumerable(k, m, side, limits);
    let built = if small {
        let q = build_pattern_tensor(&spec, limits)?;
        let a = build_sign_pattern(k, side, f, limits)?;
        Some((a.to_rational().inner_product(&q)?, q))
    } else {
        None
    };
    let (aq, q_l1) = match &built {
        Some((aq, q)) => {
            cert.enumerated(
                "||Q||_1 = 1 for the pattern witness",
                Quantity::rational("||Q||_1", q.l1_norm()),
                Rel::Eq,
                Quantity::rational("1", one.clone()),
                ENUMERATION,
            );
            cert.enumerated(
                "<A,Q> = <f,v>",
                Quantity::rational("<A,Q>", aq.clone()),
                Rel::Eq,
                Quantity::rational("<f,v>", beta.clone()),
                ENUMERATION,
            );
            (aq.clone(), q.l1_norm())
        }
        None => {
            let size = size_formula(k, m, side);
            let c = spec.scale();
            let l1 = &c * Rational::new(BigInt::from(size), BigInt::one() << m) * dp.values.l1_norm();
            cert.verified(
                "||Q||_1 = c*(size/2^m)*||v||_1 = 1",
                Quantity::rational("||Q||_1", l1.clone()),
                Rel::Eq,
                Quantity::rational("1", one.clone()),
                ARITHMETIC,
            );
            cert.note("<A,Q> = <f,v> and ||Q||_1 follow from uniform coverage of the pattern construction");
            (beta.clone(), l1)
        }
    };

    let (numerator, factor) = match alpha {
        Alpha::Finite(a) => {
            let a0 = alpha0.as_finite().expect("finite when alpha is");
            let num = ((&one + a) * &aq + (&one - a) * &q_l1) / int(2);
            let factor = (a0 - a) / (a0 + &one);
            cert.verified(
                "((1+alpha)<A,Q> + (1-alpha)||Q||_1)/2 >= (alpha0-alpha)/(alpha0+1)",
                Quantity::rational("numerator", num.clone()),
                Rel::Ge,
                Quantity::rational("(alpha0-alpha)/(alpha0+1)", factor.clone()),
                ARITHMETIC,
            );
            (num, factor)
        }
        Alpha::Infinity => {
            cert.verified(
                "<A,Q> >= 1",
                Quantity::rational("numerator", aq.clone()),
                Rel::Ge,
                Quantity::rational("1", one.clone()),
                ARITHMETIC,
            );
            (aq.clone(), one.clone())
        }
    };

    let lemma_ok = d == 0 || lemma_side_condition(k, m, side, d)?;
    let (ratio, final_bound) = if lemma_ok {
        let u = lemma_bound(k, d);
        if d == 0 {
            cert.assume(
                "mu*(Q) <= ||Q||_1 = 1",
                Quantity::named("mu*(Q)"),
                Rel::Le,
                Quantity::valued("2^(-d/2^(k-1))", u.clone()),
                "mu*(X) <= ||X||_1 for every real tensor",
            );
        } else {
            push_side_condition(&mut cert, k, m, side, d)?;
            cert.assume("mu*(Q) <= 2^(-d/2^(k-1))", Quantity::named("mu*(Q)"), Rel::Le, Quantity::valued("2^(-d/2^(k-1))", u.clone()), MAIN_LEMMA);
        }
        let ratio = Expr::rational(numerator.clone()).div(&u).expect("nonzero bound");
        let fb = Expr::two_power(factor, int(d as i64) / corner_count(k));
        (ratio, fb)
    } else if let Some((_, q)) = &built {
        let ms = mu_star(q, limits)?.value;
        cert.enumerated(
            "mu*(Q) computed exactly",
            Quantity::rational("mu*(Q)", ms.clone()),
            Rel::Le,
            Quantity::rational("||Q||_1", q_l1.clone()),
            ENUMERATION,
        );
        cert.note("lemma side condition fails at this M; the witness is evaluated exactly instead");
        let r = Expr::rational(&numerator / &ms);
        (r.clone(), r)
    } else {
        return Err(Error::ConditionViolated(format!(
            "M*d = {} is below 2e(k-1)2^(2^(k-1))m = {} and the tensor is too large to search",
            side as u64 * d as u64,
            fmt_rat(&side_condition_threshold(k, m)?)
        )));
    };

    let subject = format!("mu^{alpha}(A)");
    cert.assume(
        format!("{subject} >= numerator/U where mu*(Q) <= U"),
        Quantity::named(subject.clone()),
        Rel::Ge,
        Quantity::valued("numerator/U", ratio.clone()),
        DUALITY,
    );
    if ratio != final_bound {
        cert.verified(
            "numerator/U >= final bound",
            Quantity::valued("numerator/U", ratio),
            Rel::Ge,
            Quantity::valued("final bound", final_bound.clone()),
            ARITHMETIC,
        );
        cert.conclude(&subject, Rel::Ge, Quantity::valued("final bound", final_bound), Some(alpha.clone()), false);
    } else {
        cert.conclude(&subject, Rel::Ge, Quantity::valued("numerator/U", final_bound), Some(alpha.clone()), false);
    }
    Ok(cert)
}

/// Conversion from a norm bound to a communication bound.
#[derive(Clone, Debug, PartialEq)]
pub enum Conversion {
    Deterministic,
    Randomized { epsilon: Rational },
    Nondeterministic,
}

/// `α_ε = 1/(1−2ε)`.
pub fn alpha_epsilon(epsilon: &Rational) -> Result<Rational> {
    if epsilon.is_negative() || *epsilon >= rat(1, 2) {
        return Err(Error::Validation(format!("epsilon must lie in [0, 1/2), got {}", fmt_rat(epsilon))));
    }
    Ok((Rational::one() - epsilon * int(2)).recip())
}

/// Appends a communication conversion to a norm lower-bound certificate.
pub fn cc_bounds(cert: &BoundCertificate, conversion: &Conversion) -> Result<BoundCertificate> {
    let c = cert.conclusion.as_ref().ok_or_else(|| Error::Validation("certificate has no conclusion".into()))?;
    let alpha = match (&c.norm_alpha, c.relation, c.in_bits) {
        (Some(a), Rel::Ge | Rel::Gt, false) => a.clone(),
        _ => return Err(Error::Validation("certificate does not conclude a lower bound on a mu-type norm".into())),
    };
    let v = c.bound.value.clone().ok_or_else(|| Error::Validation("conclusion has no value".into()))?;
    let mut out = cert.clone();
    let (subject, bound) = match conversion {
        Conversion::Deterministic => {
            out.assume(
                format!("2^D >= mu(A) >= {}", c.subject),
                Quantity::named("2^D"),
                Rel::Ge,
                c.bound.clone(),
                "deterministic cost is at least log mu(A); mu dominates mu^alpha",
            );
            ("2^D", c.bound.clone())
        }
        Conversion::Randomized { epsilon } => {
            let ae = alpha_epsilon(epsilon)?;
            if let Alpha::Finite(a) = &alpha {
                if *a < ae {
                    return Err(Error::Validation(format!(
                        "alpha = {} is below alpha_eps = {}",
                        fmt_rat(a),
                        fmt_rat(&ae)
                    )));
                }
                out.verified(
                    "alpha >= alpha_eps = 1/(1-2 eps)",
                    Quantity::rational("alpha", a.clone()),
                    Rel::Ge,
                    Quantity::rational("alpha_eps", ae.clone()),
                    ARITHMETIC,
                );
            }
            out.param("epsilon", fmt_rat(epsilon));
            let b = Quantity::valued("bound/alpha_eps", v.scale(&ae.recip()));
            out.assume(
                format!("2^R >= {}/alpha_eps", c.subject),
                Quantity::named("2^R"),
                Rel::Ge,
                b.clone(),
                "randomized cost is at least log mu^alpha(A) - log alpha_eps for alpha >= alpha_eps",
            );
            ("2^R", b)
        }
        Conversion::Nondeterministic => {
            if !alpha.is_infinite() {
                return Err(Error::Validation("the nondeterministic conversion needs a mu^inf bound".into()));
            }
            let r = v.lower_rational(64)?;
            if v.as_rational().is_none() {
                out.verified(
                    "rational lower approximation of the norm bound",
                    c.bound.clone(),
                    Rel::Ge,
                    Quantity::rational("bound (rational, rounded down)", r.clone()),
                    ARITHMETIC,
                );
            }
            let b = Quantity::rational("(bound-1)/2", (r - int(1)) / int(2));
            out.assume(
                format!("2^N >= ({}-1)/2", c.subject),
                Quantity::named("2^N"),
                Rel::Ge,
                b.clone(),
                "nondeterministic cost is at least log((mu^inf(A)-1)/2)",
            );
            ("2^N", b)
        }
    };
    out.title = format!("{} (communication)", cert.title);
    out.conclude(subject, Rel::Ge, bound, None, true);
    Ok(out)
}

/// Parameters of the disjointness pipeline: `m = 6d²+1`, `M` the least side
/// meeting the lemma condition, `n' = mM^{k−1} ≤ n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisjParams {
    pub m: u64,
    pub side: u64,
    /// Vanishing degree `d`; `deg₃(OR_m) ≥ d + 1`.
    pub d: u64,
    pub n_prime: BigInt,
}

fn disj_side(k: u32, m: u64, d: u64) -> Result<u64> {
    let t = side_condition_threshold(k, 1)? * int(m as i64) / int(d as i64);
    rational::ceil(&t).to_u64().ok_or_else(|| Error::capacity("side length M", "overflow", u64::MAX))
}

/// Largest feasible `d` for `n`, or `None` if even `d = 1` does not fit.
pub fn disj_parameters(n: &BigInt, k: u32) -> Result<Option<DisjParams>> {
    check_k(k)?;
    let mut best = None;
    let mut d = 1u64;
    loop {
        let m = 6 * d * d + 1;
        let side = disj_side(k, m, d)?;
        let n_prime = BigInt::from(m) * BigInt::from(side).pow(k - 1);
        if n_prime > *n {
            return Ok(best);
        }
        best = Some(DisjParams { m, side, d, n_prime });
        d += 1;
    }
}

fn trivial(cert: &mut BoundCertificate, subject: &str, reason: &str) {
    cert.note(reason.to_owned());
    cert.assume(
        format!("{subject} >= 1"),
        Quantity::named(subject),
        Rel::Ge,
        Quantity::rational("1", int(1)),
        "communication cost is nonnegative",
    );
    cert.conclude(subject, Rel::Ge, Quantity::rational("1", int(1)), None, true);
}

const DISJ_SUBJECT: &str = "2^R_1/4(DISJ_{k,n})";

/// Lower bound on `R_{1/4}(DISJ_{k,n})` through `μ²` of a pattern tensor.
pub fn disjointness_bound(n: &BigInt, k: u32) -> Result<BoundCertificate> {
    check_k(k)?;
    if !n.is_positive() {
        return Err(Error::Validation("n must be positive".into()));
    }
    let mut cert = BoundCertificate::new(format!("randomized lower bound for disjointness (k={k}, n={n})"));
    cert.param("n", n).param("k", k).param("epsilon", "1/4").param("alpha", 2).param("alpha0", 3);
    cert.param("e_upper", fmt_rat(&e_upper()));

    let ck = int(5) * e_upper() * int(k as i64 - 1) * big(two_pow_two_pow(k));
    let reference_m = rational::floor(&(big(n.clone()) / rational::pow(&(int(2) * &ck), k as i64 - 1)?));
    cert.param("c_k", fmt_rat(&ck));
    cert.note(format!("reference parameters: c_k = {}, m = floor(n/(2c_k)^(k-1)) = {reference_m}", fmt_rat(&ck)));
    if reference_m < BigInt::one() {
        trivial(&mut cert, DISJ_SUBJECT, "n is below (2c_k)^(k-1): trivial bound");
        return Ok(cert);
    }
    let Some(p) = disj_parameters(n, k)? else {
        trivial(&mut cert, DISJ_SUBJECT, "no m = 6d^2+1 with m*M^(k-1) <= n: trivial bound");
        return Ok(cert);
    };
    cert.param("m", p.m).param("M", p.side).param("d", p.d).param("n'", &p.n_prime);

    let m = big(p.m);
    let dd = p.d as i64;
    cert.verified(
        "n' = m*M^(k-1) fits in n",
        Quantity::rational("n'", big(p.n_prime.clone())),
        Rel::Le,
        Quantity::rational("n", big(n.clone())),
        ARITHMETIC,
    );
    let sqrt = Expr::new(Rational::one(), &m / int(6), rat(1, 2))?;
    cert.verified(
        "sqrt(m/6) > d",
        Quantity::valued("sqrt(m/6)", sqrt.clone()),
        Rel::Gt,
        Quantity::rational("d", int(dd)),
        ARITHMETIC,
    );
    cert.verified("m <= 6(d+1)^2", Quantity::rational("m", m.clone()), Rel::Le, Quantity::rational("6(d+1)^2", int(6 * (dd + 1) * (dd + 1))), ARITHMETIC);
    cert.assume(
        "deg_3(OR_m) >= sqrt(m/6), hence deg_3(OR_m) >= d+1 and a dual polynomial vanishes up to degree d",
        Quantity::named("deg_3(OR_m)"),
        Rel::Ge,
        Quantity::valued("sqrt(m/6)", sqrt),
        NISAN_SZEGEDY,
    );
    let side_u32 = u32::try_from(p.side).map_err(|_| Error::capacity("side length M", p.side, u32::MAX))?;
    let m_u32 = u32::try_from(p.m).map_err(|_| Error::capacity("m", p.m, u32::MAX))?;
    push_side_condition(&mut cert, k, m_u32, side_u32, p.d as u32)?;
    let u = lemma_bound(k, p.d as u32);
    cert.assume("mu*(Q) <= 2^(-d/2^(k-1))", Quantity::named("mu*(Q)"), Rel::Le, Quantity::valued("2^(-d/2^(k-1))", u), MAIN_LEMMA);
    let exponent = int(dd) / corner_count(k);
    let mu2 = Expr::two_power(rat(1, 4), exponent.clone());
    cert.assume(
        "mu^2(A_{k,M,OR_m}) >= (3-2)/(3+1) * 2^(d/2^(k-1))",
        Quantity::named("mu^2(A)"),
        Rel::Ge,
        Quantity::valued("(1/4)*2^(d/2^(k-1))", mu2.clone()),
        DEGREE_THEOREM,
    );
    let r_bound = mu2.scale(&rat(1, 2));
    cert.assume(
        "2^R_1/4(A) >= mu^2(A)/alpha_eps with alpha_eps = 2",
        Quantity::named("2^R_1/4(A)"),
        Rel::Ge,
        Quantity::valued("(1/8)*2^(d/2^(k-1))", r_bound.clone()),
        "randomized cost is at least log mu^alpha(A) - log alpha_eps",
    );
    cert.assume(
        "A_{k,M,OR_m} is a subtensor of -DISJ_{k,n'}, and n' <= n",
        Quantity::named(DISJ_SUBJECT),
        Rel::Ge,
        Quantity::named("2^R_1/4(A)"),
        "selector embedding of the pattern tensor into disjointness",
    );
    cert.note(format!("bits: R >= {} - 3", fmt_rat(&exponent)));
    cert.conclude(DISJ_SUBJECT, Rel::Ge, Quantity::valued("(1/8)*2^(d/2^(k-1))", r_bound), None, true);
    Ok(cert)
}

/// `log₂` of a bit-bound certificate's bound, exactly, when it is a power of two.
pub fn disjointness_bits(cert: &BoundCertificate) -> Option<Rational> {
    let c = cert.conclusion.as_ref()?;
    if !c.in_bits {
        return None;
    }
    let v = c.bound.value.as_ref()?;
    if !is_power_of_two(&v.factor) {
        return None;
    }
    if v.exponent.is_zero() {
        return Some(log2_exact(&v.factor));
    }
    (v.base == int(2)).then(|| &v.exponent + log2_exact(&v.factor))
}

fn is_power_of_two(r: &Rational) -> bool {
    let pow2 = |n: &BigInt| n.is_positive() && (n & (n - BigInt::one())).is_zero();
    pow2(r.numer()) && pow2(r.denom())
}

fn log2_exact(r: &Rational) -> Rational {
    int(r.numer().bits() as i64 - 1) - int(r.denom().bits() as i64 - 1)
}

/// `m(n) = max{m : (2mL)³ ≤ n²}` with `L = ⌈log₂ n⌉`.
pub fn proof_size_m(n: &BigInt) -> (u64, BigInt) {
    let l = ceil_log2(n);
    let n2 = n * n;
    let two_l = BigInt::from(2u64 * l);
    // (2mL)^3 <= n^2  <=>  2mL <= floor(cbrt(n^2))
    let c = n2.cbrt();
    let m = c.div_floor(&two_l);
    (l, m)
}

fn ceil_log2(n: &BigInt) -> u64 {
    if *n <= BigInt::one() {
        return 0;
    }
    (n - BigInt::one()).bits()
}

/// Arithmetic of the proof-size bound: the exponent `(R/log n)^{1/3}` with
/// `R` the disjointness bound at `m(n)`.
pub fn proof_size_bound(n: &BigInt, k: u32) -> Result<BoundCertificate> {
    check_k(k)?;
    if *n < BigInt::from(2) {
        return Err(Error::Validation("n must be at least 2".into()));
    }
    let (l, m) = proof_size_m(n);
    let subject = "(R_1/4(DISJ_{k,m})/log n)^(1/3)";
    let mut cert = BoundCertificate::new(format!("proof size exponent (k={k}, n={n})"));
    cert.param("n", n).param("k", k).param("log n", l).param("m", &m);
    cert.note("refutation size is exp(Omega(exponent)); the constant is not tracked");
    let zero = || Quantity::rational("0", Rational::zero());
    if m < BigInt::one() {
        cert.note("m(n) < 1: trivial bound");
        cert.assume(format!("{subject} >= 0"), Quantity::named(subject), Rel::Ge, zero(), "communication cost is nonnegative");
        cert.conclude(subject, Rel::Ge, zero(), None, false);
        return Ok(cert);
    }
    let lr = int(l as i64);
    let mr = big(m.clone());
    cert.verified(
        "(2mL)^3 <= n^2",
        Quantity::rational("(2mL)^3", rational::pow(&(int(2) * &mr * &lr), 3)?),
        Rel::Le,
        Quantity::rational("n^2", big(n * n)),
        ARITHMETIC,
    );
    cert.verified(
        "(2(m+1)L)^3 > n^2",
        Quantity::rational("(2(m+1)L)^3", rational::pow(&(int(2) * (&mr + int(1)) * &lr), 3)?),
        Rel::Gt,
        Quantity::rational("n^2", big(n * n)),
        ARITHMETIC,
    );
    let inner = disjointness_bound(&m, k)?;
    for s in &inner.steps {
        let mut s = s.clone();
        s.lhs.name = format!("disj.{}", s.lhs.name);
        s.rhs.name = format!("disj.{}", s.rhs.name);
        cert.push(s);
    }
    for note in &inner.notes {
        cert.note(format!("disj: {note}"));
    }
    let Some(bits) = disjointness_bits(&inner).filter(|b| b.is_positive()) else {
        cert.note("disjointness bound at m(n) is vacuous: trivial bound");
        cert.assume(format!("{subject} >= 0"), Quantity::named(subject), Rel::Ge, zero(), "communication cost is nonnegative");
        cert.conclude(subject, Rel::Ge, zero(), None, false);
        return Ok(cert);
    };
    cert.param("R bits", fmt_rat(&bits));
    let b_over_l = &bits / &lr;
    let bound = Quantity::valued("(b/L)^(1/3)", Expr::new(Rational::one(), b_over_l, rat(1, 3))?);
    cert.assume(
        format!("{subject} >= (b/L)^(1/3) with R >= b from the disjointness chain"),
        Quantity::named(subject),
        Rel::Ge,
        bound.clone(),
        "monotonicity of (x/L)^(1/3) applied to the disjointness bound",
    );
    cert.assume(
        "log size of a degree-k refutation >= Omega(exponent)",
        Quantity::named("log S / C"),
        Rel::Ge,
        Quantity::named(subject),
        "Beame-Pitassi-Segerlind reduction from disjointness to proof size",
    );
    cert.conclude(subject, Rel::Ge, bound, None, false);
    Ok(cert)
}

/// `μ(A) ≤ #leaves ≤ 2^c` from a signed partition of `A` into cylinder
/// intersections, as induced by a `c`-bit protocol.
pub fn partition_certificate(a: &SignTensor, leaves: &[(i8, CylinderIntersection)], c: u32) -> Result<BoundCertificate> {
    let ar = a.to_rational();
    let mut sum = RationalTensor::zeros(a.shape().clone());
    for (sign, z) in leaves {
        if *sign != 1 && *sign != -1 {
            return Err(Error::Validation(format!("leaf sign must be +1 or -1, got {sign}")));
        }
        if z.shape() != a.shape() {
            return Err(Error::Dimension("leaf shape differs from the tensor".into()));
        }
        sum = sum.add(&z.characteristic_tensor().scale(&int(*sign as i64)))?;
    }
    let gap = ar.add(&sum.scale(&int(-1)))?.linf_norm();
    if !gap.is_zero() {
        return Err(Error::Validation("signed leaves do not sum to the tensor".into()));
    }
    if c >= 64 {
        return Err(Error::capacity("protocol bits", c, 63));
    }
    let count = int(leaves.len() as i64);
    let mut cert = BoundCertificate::new(format!("partition bound from {} leaves", leaves.len()));
    cert.param("c", c).param("leaves", leaves.len());
    cert.enumerated(
        "sum of signed leaf characteristic tensors equals A",
        Quantity::rational("max_x |A - sum|", gap),
        Rel::Eq,
        Quantity::rational("0", Rational::zero()),
        ENUMERATION,
    );
    cert.assume(
        "mu(A) <= sum of |coefficients| of a decomposition",
        Quantity::named("mu(A)"),
        Rel::Le,
        Quantity::rational("#leaves", count.clone()),
        "definition of mu as a minimum decomposition weight",
    );
    cert.verified("#leaves <= 2^c", Quantity::rational("#leaves", count), Rel::Le, Quantity::rational("2^c", int(1i64 << c)), ARITHMETIC);
    cert.conclude("mu(A)", Rel::Le, Quantity::rational("2^c", int(1i64 << c)), Some(Alpha::int(1)), false);
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::check_certificate;
    use crate::norms::NormEngine;
    use crate::tensors::Shape;
    use std::cmp::Ordering;

    fn lim() -> Limits {
        Limits::default()
    }

    #[test]
    fn hadamard_predicate() {
        assert!(is_hadamard(&SignTensor::sylvester(1).unwrap()).unwrap());
        assert!(is_hadamard(&SignTensor::sylvester(2).unwrap()).unwrap());
        let j = SignTensor::ones(Shape::new(vec![2, 2]).unwrap());
        assert!(!is_hadamard(&j).unwrap());
        let rep = SignTensor::new(Shape::new(vec![2, 2]).unwrap(), vec![1, 1, -1, -1]).unwrap();
        assert!(!is_hadamard(&rep).unwrap());
        assert!(hadamard_bound(&j, &lim()).is_err());
    }

    #[test]
    fn hadamard_h2_h4() {
        let c2 = hadamard_bound(&SignTensor::sylvester(1).unwrap(), &lim()).unwrap();
        assert!(check_certificate(&c2).valid);
        assert_eq!(c2.final_bound().unwrap(), &Expr::int(2));
        let c4 = hadamard_bound(&SignTensor::sylvester(2).unwrap(), &lim()).unwrap();
        assert!(check_certificate(&c4).valid);
        // max over rectangles of the 4x4 Sylvester matrix is 5 (three columns, one row)
        assert_eq!(c4.final_bound().unwrap(), &Expr::rational(rat(16, 5)));
    }

    #[test]
    fn contraction_examples() {
        let h2 = SignTensor::sylvester(1).unwrap().to_rational();
        let c = contraction_chain_check(&h2, &lim()).unwrap();
        assert!(check_certificate(&c).valid);
        assert_eq!(c.steps[0].lhs.value, Some(Expr::rational(rat(1, 4))));
        assert_eq!(c.steps[0].rhs.value, Some(Expr::rational(rat(1, 2))));
        assert_eq!(c.steps[1].rhs.value, Some(Expr::rational(rat(1, 2))));
        let j = RationalTensor::ones(Shape::new(vec![2, 2, 2]).unwrap());
        let c = contraction_chain_check(&j, &lim()).unwrap();
        assert!(check_certificate(&c).valid);
        assert_eq!(c.final_bound().unwrap(), &Expr::int(1));
    }

    #[test]
    fn side_conditions() {
        assert!(lemma_side_condition(2, 1, 44, 1).unwrap());
        assert!(!lemma_side_condition(2, 1, 8, 1).unwrap());
        assert!(!lemma_side_condition(3, 1, 2, 1).unwrap());
        assert!(lemma_side_condition(3, 1, 174, 1).unwrap());
        assert!(!lemma_side_condition(3, 1, 173, 1).unwrap());
        assert!(!lemma_side_condition(2, 1, 21, 1).unwrap());
        assert!(lemma_side_condition(2, 1, 22, 1).unwrap());
    }

    #[test]
    fn pattern_bound() {
        let chi = RealFunction::new(2, vec![rat(1, 4), rat(-1, 4), rat(-1, 4), rat(1, 4)]).unwrap();
        let c = pattern_mu_star_bound(&chi, 2, 44, 1, &lim()).unwrap();
        assert!(check_certificate(&c).valid);
        assert_eq!(c.final_bound().unwrap().cmp_exact(&Expr::two_power(int(1), rat(-1, 2))).unwrap(), Ordering::Equal);
        assert!(matches!(pattern_mu_star_bound(&chi, 2, 43, 1, &lim()), Err(Error::ConditionViolated(_))));
        let bad = RealFunction::new(2, vec![rat(1, 2), int(0), int(0), rat(1, 2)]).unwrap();
        assert!(matches!(pattern_mu_star_bound(&bad, 2, 44, 1, &lim()), Err(Error::Validation(_))));
    }

    #[test]
    fn degree_chain() {
        let or1 = BooleanFunction::or(1, &lim()).unwrap();
        let c = degree_to_mu_alpha(&or1, 2, 22, &Alpha::int(2), &Alpha::int(3), &lim()).unwrap();
        assert!(check_certificate(&c).valid, "{:?}", check_certificate(&c).errors);
        assert_eq!(c.final_bound().unwrap(), &Expr::rational(rat(1, 4)));
        assert!(degree_to_mu_alpha(&or1, 2, 22, &Alpha::int(3), &Alpha::int(3), &lim()).is_err());
        assert!(degree_to_mu_alpha(&or1, 2, 22, &Alpha::Infinity, &Alpha::int(3), &lim()).is_err());
    }

    #[test]
    fn degree_chain_is_sound_on_small_tensors() {
        let engine = NormEngine::new(lim());
        for (f, alpha, alpha0) in [
            (BooleanFunction::or(2, &lim()).unwrap(), Alpha::int(2), Alpha::int(3)),
            (BooleanFunction::xor(2, &lim()).unwrap(), Alpha::int(2), Alpha::int(3)),
            (BooleanFunction::xor(2, &lim()).unwrap(), Alpha::Infinity, Alpha::Infinity),
            (BooleanFunction::or(1, &lim()).unwrap(), Alpha::int(2), Alpha::int(3)),
        ] {
            for side in [1, 2] {
                let Ok(a) = build_sign_pattern(2, side, &f, &lim()) else { continue };
                if a.shape().size() > 16 {
                    continue;
                }
                let c = degree_to_mu_alpha(&f, 2, side, &alpha, &alpha0, &lim()).unwrap();
                assert!(check_certificate(&c).valid, "{:?}", check_certificate(&c).errors);
                let exact = engine.mu_alpha_primal(&a, &alpha).unwrap().value;
                assert_ne!(c.final_bound().unwrap().cmp_exact(&Expr::rational(exact)).unwrap(), Ordering::Greater);
            }
        }
    }

    #[test]
    fn conversions() {
        let h2 = hadamard_bound(&SignTensor::sylvester(1).unwrap(), &lim()).unwrap();
        let n = cc_bounds(&h2, &Conversion::Nondeterministic).unwrap();
        assert!(check_certificate(&n).valid);
        assert!(n.conclusion.as_ref().unwrap().vacuous);
        let r = cc_bounds(&h2, &Conversion::Randomized { epsilon: rat(1, 4) }).unwrap();
        assert!(check_certificate(&r).valid);
        assert_eq!(r.final_bound().unwrap(), &Expr::int(1));
        assert!(cc_bounds(&h2, &Conversion::Randomized { epsilon: rat(1, 2) }).is_err());
        let d = cc_bounds(&h2, &Conversion::Deterministic).unwrap();
        assert!(check_certificate(&d).valid);
        assert!(cc_bounds(&d, &Conversion::Deterministic).is_err());
    }

    #[test]
    fn randomized_needs_large_alpha() {
        let or1 = BooleanFunction::or(1, &lim()).unwrap();
        let c = degree_to_mu_alpha(&or1, 2, 22, &Alpha::int(2), &Alpha::int(3), &lim()).unwrap();
        assert!(cc_bounds(&c, &Conversion::Randomized { epsilon: rat(1, 3) }).is_err());
        assert!(cc_bounds(&c, &Conversion::Randomized { epsilon: rat(1, 4) }).is_ok());
    }

    #[test]
    fn disjointness() {
        let small = disjointness_bound(&BigInt::from(100), 2).unwrap();
        assert!(small.conclusion.as_ref().unwrap().vacuous);
        assert!(check_certificate(&small).valid);
        let c = disjointness_bound(&BigInt::from(1_000_000), 2).unwrap();
        assert!(check_certificate(&c).valid, "{:?}", check_certificate(&c).errors);
        let p = disj_parameters(&BigInt::from(1_000_000), 2).unwrap().unwrap();
        assert!(p.n_prime <= BigInt::from(1_000_000));
        assert!(lemma_side_condition(2, p.m as u32, p.side as u32, p.d as u32).unwrap());
        assert_eq!(disjointness_bits(&c), Some(rat(p.d as i64, 2) - int(3)));
    }

    #[test]
    fn proof_size() {
        let (l, m) = proof_size_m(&BigInt::from(1u64 << 20));
        assert_eq!(l, 20);
        assert_eq!(m, BigInt::from(258));
        let c = proof_size_bound(&(BigInt::one() << 40), 2).unwrap();
        assert!(check_certificate(&c).valid, "{:?}", check_certificate(&c).errors);
        assert!(!c.conclusion.as_ref().unwrap().vacuous);
    }

    #[test]
    fn partition() {
        let h2 = SignTensor::sylvester(1).unwrap();
        let s = Shape::new(vec![2, 2]).unwrap();
        let cell = |i, j| CylinderIntersection::cell(s.clone(), &[i, j]).unwrap();
        let leaves = vec![(1, cell(0, 0)), (1, cell(0, 1)), (1, cell(1, 0)), (-1, cell(1, 1))];
        let c = partition_certificate(&h2, &leaves, 2).unwrap();
        assert!(check_certificate(&c).valid);
        let mu = NormEngine::new(lim()).mu(&h2.to_rational()).unwrap().value;
        assert!(mu <= int(4));
        assert!(partition_certificate(&h2, &leaves[..3], 2).is_err());
    }
}
