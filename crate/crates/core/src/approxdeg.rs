//! Approximate degree: the `α_d(f)` LP, `deg_α(f)`, threshold degree, and
//! dual polynomials extracted from the LP dual.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::boolfun::{character_unchecked, fourier_transform, BooleanFunction, RealFunction};
use crate::lp::{self, LinearProgram, LpStatus, Relation, Sense};
use crate::norms::Alpha;
use crate::rational::{self, Rational};
use crate::{Error, Limits, Result};

/// Monomials of degree at most `d` in `m` variables, as subset bitmasks,
/// ordered by degree and then lexicographically by their sorted indices.
pub fn monomials(m: u32, d: u32) -> Vec<usize> {
    let mut out = Vec::new();
    for deg in 0..=d.min(m) {
        let mut combo: Vec<u32> = (0..deg).collect();
        loop {
            out.push(combo.iter().fold(0usize, |s, &j| s | (1 << j)));
            // Next combination in lexicographic order.
            let mut i = deg as usize;
            while i > 0 && combo[i - 1] == m - deg + (i as u32 - 1) {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..deg as usize {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    out
}

/// `W(x, mono) = mono(x)` for all `x ∈ {−1,+1}^m` and monomials of degree ≤ `d`.
#[derive(Clone, Debug)]
pub struct MonomialMatrix {
    arity: u32,
    degree: u32,
    monomials: Vec<usize>,
}

impl MonomialMatrix {
    pub fn new(arity: u32, degree: u32) -> Result<Self> {
        if degree > arity {
            return Err(Error::Validation(format!("degree {degree} exceeds arity {arity}")));
        }
        Ok(MonomialMatrix { arity, degree, monomials: monomials(arity, degree) })
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn rows(&self) -> usize {
        1 << self.arity
    }

    pub fn columns(&self) -> usize {
        self.monomials.len()
    }

    pub fn monomials(&self) -> &[usize] {
        &self.monomials
    }

    pub fn entry(&self, x: usize, column: usize) -> i8 {
        character_unchecked(self.monomials[column], x)
    }

    /// `(Wy)(x)` for all `x`.
    pub fn apply(&self, y: &[Rational]) -> Vec<Rational> {
        (0..self.rows())
            .map(|x| {
                y.iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(j, c)| c * rational::int(self.entry(x, j) as i64))
                    .sum()
            })
            .collect()
    }
}

fn check_arity(f: &BooleanFunction, limits: &Limits) -> Result<()> {
    if f.arity() > limits.max_adeg_arity {
        return Err(Error::capacity("arity for approximate-degree LPs", f.arity(), limits.max_adeg_arity));
    }
    Ok(())
}

fn sign(f: &BooleanFunction, x: usize) -> Rational {
    rational::int(f.eval(x) as i64)
}

#[derive(Clone, Debug)]
pub struct AlphaD {
    pub degree: u32,
    pub value: Alpha,
    /// An optimal `g = Wy` when `value` is finite.
    pub approximant: Option<RealFunction>,
}

/// `α_d(f) = min{‖Wy‖∞ : 1 ≤ (Wy)∘f}`, or `∞` when no degree-`d` polynomial
/// sign-represents `f`.
pub fn alpha_d(f: &BooleanFunction, d: u32, limits: &Limits) -> Result<AlphaD> {
    check_arity(f, limits)?;
    let w = MonomialMatrix::new(f.arity(), d)?;
    let cols = w.columns();
    let t = cols;
    let mut program = LinearProgram::new(cols + 1, Sense::Minimize);
    for j in 0..cols {
        program.set_bounds(j, None, None);
    }
    let mut objective = vec![Rational::zero(); cols + 1];
    objective[t] = Rational::one();
    program.set_objective(objective);
    for x in 0..w.rows() {
        let fx = sign(f, x);
        let mut coeffs: Vec<Rational> = (0..cols).map(|j| &fx * rational::int(w.entry(x, j) as i64)).collect();
        coeffs.push(Rational::zero());
        program.add_constraint(coeffs.clone(), Relation::Ge, Rational::one());
        coeffs[t] = -Rational::one();
        program.add_constraint(coeffs, Relation::Le, Rational::zero());
    }
    let sol = lp::solve_with(&program, limits)?;
    match sol.status {
        LpStatus::Infeasible => Ok(AlphaD { degree: d, value: Alpha::Infinity, approximant: None }),
        LpStatus::Unbounded => Err(Error::Internal("approximation LP unbounded".into())),
        LpStatus::Optimal => {
            let value = sol.value.expect("optimal");
            let g = RealFunction::new(f.arity(), w.apply(&sol.primal[..cols]))?;
            check_approximant(f, &g, d, &Alpha::Finite(value.clone()))?;
            Ok(AlphaD { degree: d, value: Alpha::Finite(value), approximant: Some(g) })
        }
    }
}

fn check_approximant(f: &BooleanFunction, g: &RealFunction, d: u32, alpha: &Alpha) -> Result<()> {
    for x in 0..(1usize << f.arity()) {
        let v = g.eval(x) * sign(f, x);
        if v < Rational::one() || alpha.as_finite().is_some_and(|a| v > *a) {
            return Err(Error::Internal(format!("approximant fails 1 <= g∘f <= {alpha} at input {x}")));
        }
    }
    if fourier_transform(g).degree().unwrap_or(0) > d {
        return Err(Error::Internal("approximant degree exceeds the bound".into()));
    }
    Ok(())
}

/// Pure feasibility: a degree-`d` `g` with `g∘f ≥ 1`, if one exists.
pub fn sign_representation(f: &BooleanFunction, d: u32, limits: &Limits) -> Result<Option<RealFunction>> {
    check_arity(f, limits)?;
    let w = MonomialMatrix::new(f.arity(), d)?;
    let cols = w.columns();
    let mut program = LinearProgram::new(cols, Sense::Minimize);
    for j in 0..cols {
        program.set_bounds(j, None, None);
    }
    for x in 0..w.rows() {
        let fx = sign(f, x);
        let coeffs = (0..cols).map(|j| &fx * rational::int(w.entry(x, j) as i64)).collect();
        program.add_constraint(coeffs, Relation::Ge, Rational::one());
    }
    let sol = lp::solve_with(&program, limits)?;
    match sol.status {
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::Internal("feasibility LP unbounded".into())),
        LpStatus::Optimal => {
            let g = RealFunction::new(f.arity(), w.apply(&sol.primal))?;
            check_approximant(f, &g, d, &Alpha::Infinity)?;
            Ok(Some(g))
        }
    }
}

/// Smallest `d` with `α_d(f) ≤ α`; for `α = ∞`, the threshold degree.
pub fn deg_alpha(f: &BooleanFunction, alpha: &Alpha, limits: &Limits) -> Result<u32> {
    alpha.validate()?;
    check_arity(f, limits)?;
    for d in 0..=f.arity() {
        let ok = match alpha {
            Alpha::Infinity => sign_representation(f, d, limits)?.is_some(),
            Alpha::Finite(_) => alpha_d(f, d, limits)?.value.le(alpha),
        };
        if ok {
            return Ok(d);
        }
    }
    Err(Error::Internal("no approximation at full degree".into()))
}

#[derive(Clone, Debug)]
pub struct DualRoute {
    /// `max ⟨v,f⟩` over `‖v‖₁ = 1`, `v ⊥` degree-`d` monomials.
    pub correlation: Rational,
    /// `(1+c)/(1−c)`, or `∞` when `c = 1`.
    pub value: Alpha,
    pub witness: RealFunction,
}

/// The dual expression `max_v (1+⟨v,f⟩)/(1−⟨v,f⟩)` for `d < m`. At `d = m`
/// no `v` is orthogonal to every monomial and `None` is returned
/// (`α_m(f) = 1`).
pub fn alpha_d_dual(f: &BooleanFunction, d: u32, limits: &Limits) -> Result<Option<DualRoute>> {
    check_arity(f, limits)?;
    let w = MonomialMatrix::new(f.arity(), d)?;
    if d == f.arity() {
        return Ok(None);
    }
    let n = w.rows();
    // Variables v⁺ (0..n) and v⁻ (n..2n).
    let mut program = LinearProgram::new(2 * n, Sense::Maximize);
    let mut objective: Vec<Rational> = (0..n).map(|x| sign(f, x)).collect();
    objective.extend((0..n).map(|x| -sign(f, x)));
    program.set_objective(objective);
    program.add_constraint(vec![Rational::one(); 2 * n], Relation::Eq, Rational::one());
    for j in 0..w.columns() {
        let mut coeffs: Vec<Rational> = (0..n).map(|x| rational::int(w.entry(x, j) as i64)).collect();
        coeffs.extend((0..n).map(|x| rational::int(-w.entry(x, j) as i64)));
        program.add_constraint(coeffs, Relation::Eq, Rational::zero());
    }
    let sol = lp::solve_with(&program, limits)?;
    match sol.status {
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::Internal("dual-route LP unbounded".into())),
        LpStatus::Optimal => {
            let mut v: Vec<Rational> = (0..n).map(|x| &sol.primal[x] - &sol.primal[n + x]).collect();
            let l1: Rational = v.iter().map(|x| x.abs()).sum();
            if l1.is_zero() {
                return Err(Error::Internal("dual-route witness vanishes".into()));
            }
            if !l1.is_one() {
                v.iter_mut().for_each(|x| *x /= &l1);
            }
            let witness = RealFunction::new(f.arity(), v)?;
            let correlation = witness.inner_product_bool(f)?;
            if correlation < sol.value.expect("optimal") {
                return Err(Error::Internal("normalised witness lost correlation".into()));
            }
            let one = Rational::one();
            let value = if correlation >= one {
                Alpha::Infinity
            } else {
                Alpha::Finite((&one + &correlation) / (&one - &correlation))
            };
            Ok(Some(DualRoute { correlation, value, witness }))
        }
    }
}

/// A witness `v` with `‖v‖₁ = 1`, `⟨v,χ_T⟩ = 0` for `|T| ≤ vanishing_degree`,
/// and large correlation with `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPolynomial {
    pub values: RealFunction,
    pub vanishing_degree: u32,
    /// `deg_α(f)`, one more than the vanishing degree.
    pub approx_degree: u32,
    pub alpha: Alpha,
    pub correlation: Rational,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualPolynomialJson {
    pub arity: u32,
    pub values: Vec<String>,
    pub vanishing_degree: u32,
    pub approx_degree: u32,
    pub alpha: Alpha,
    pub correlation: String,
}

impl DualPolynomial {
    pub fn to_json(&self) -> DualPolynomialJson {
        DualPolynomialJson {
            arity: self.values.arity(),
            values: self.values.table().iter().map(rational::format).collect(),
            vanishing_degree: self.vanishing_degree,
            approx_degree: self.approx_degree,
            alpha: self.alpha.clone(),
            correlation: rational::format(&self.correlation),
        }
    }

    pub fn from_json(json: &DualPolynomialJson) -> Result<Self> {
        let table = json.values.iter().map(|s| rational::parse(s)).collect::<Result<Vec<_>>>()?;
        Ok(DualPolynomial {
            values: RealFunction::new(json.arity, table)?,
            vanishing_degree: json.vanishing_degree,
            approx_degree: json.approx_degree,
            alpha: json.alpha.clone(),
            correlation: rational::parse(&json.correlation)?,
        })
    }
}

/// Extract a dual polynomial for `f` at vanishing degree `deg_α(f) − 1`.
pub fn dual_polynomial(f: &BooleanFunction, alpha: &Alpha, limits: &Limits) -> Result<DualPolynomial> {
    alpha.validate()?;
    if f.is_constant() {
        return Err(Error::Validation("a constant function has degree 0 and no dual polynomial".into()));
    }
    let d = deg_alpha(f, alpha, limits)?;
    let vanishing = d - 1;
    let route = alpha_d_dual(f, vanishing, limits)?
        .ok_or_else(|| Error::Internal("dual LP infeasible below full degree".into()))?;
    let dp = DualPolynomial {
        correlation: route.correlation,
        values: route.witness,
        vanishing_degree: vanishing,
        approx_degree: d,
        alpha: alpha.clone(),
    };
    let report = verify_dual_polynomial(&dp, f, alpha);
    if !report.passed() {
        return Err(Error::Internal(format!("extracted dual polynomial fails verification: {report:?}")));
    }
    Ok(dp)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualVerification {
    /// `‖v‖₁ = 1`.
    pub unit_l1: bool,
    /// `⟨v,χ_T⟩ = 0` for all `|T| ≤ vanishing_degree`.
    pub vanishes: bool,
    /// `⟨v,f⟩ ≥ (α−1)/(α+1)` (`≥ 1` for `α = ∞`).
    pub correlation_bound: bool,
    /// `v(x)f(x) ≥ 0` everywhere; only checked for `α = ∞`.
    pub sign_agreement: Option<bool>,
    /// Whether `v` also vanishes up to `vanishing_degree + 1`, the indexing
    /// in which the witness degree equals `deg_α(f)` itself.
    pub vanishes_at_approx_degree: bool,
    pub correlation: String,
    pub required_correlation: String,
}

impl DualVerification {
    pub fn passed(&self) -> bool {
        self.unit_l1 && self.vanishes && self.correlation_bound && self.sign_agreement != Some(false)
    }
}

fn vanishes_up_to(v: &RealFunction, d: u32) -> bool {
    let m = v.arity();
    (0..(1usize << m))
        .filter(|t| t.count_ones() <= d)
        .all(|t| v.correlation_with_character(t).is_zero())
}

/// Checks the three dual-polynomial properties exactly.
pub fn verify_dual_polynomial(v: &DualPolynomial, f: &BooleanFunction, alpha: &Alpha) -> DualVerification {
    let values = &v.values;
    let arity_ok = values.arity() == f.arity();
    let one = Rational::one();
    let correlation = if arity_ok { values.inner_product_bool(f).unwrap_or_default() } else { Rational::zero() };
    let required = match alpha {
        Alpha::Infinity => one.clone(),
        Alpha::Finite(a) => (a - &one) / (a + &one),
    };
    let sign_agreement = match alpha {
        Alpha::Infinity => Some(arity_ok && (0..(1usize << f.arity())).all(|x| !(values.eval(x) * sign(f, x)).is_negative())),
        Alpha::Finite(_) => None,
    };
    DualVerification {
        unit_l1: values.l1_norm().is_one(),
        vanishes: arity_ok && vanishes_up_to(values, v.vanishing_degree),
        correlation_bound: arity_ok && correlation >= required,
        sign_agreement,
        vanishes_at_approx_degree: arity_ok && vanishes_up_to(values, v.vanishing_degree + 1),
        correlation: rational::format(&correlation),
        required_correlation: rational::format(&required),
    }
}
