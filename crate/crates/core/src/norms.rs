//! The norm `μ`, its `±1` variant, the approximate norms `μ^α`, and
//! discrepancy, all as exact LPs over the enumerated cylinder basis.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cylinders::{self, CylinderBasis, CylinderIntersection, CylinderIntersectionJson};
use crate::lp::{self, LinearProgram, LpStatus, Relation, Sense};
use crate::rational::{self, Rational};
use crate::tensors::{RationalTensor, Shape, SignTensor, TensorJson};
use crate::{Error, Limits, Result};

/// Approximation factor: a rational `α ≥ 1` or `∞`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Alpha {
    Finite(Rational),
    Infinity,
}

impl Alpha {
    pub fn finite(r: Rational) -> Self {
        Alpha::Finite(r)
    }

    pub fn int(n: i64) -> Self {
        Alpha::Finite(rational::int(n))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Alpha::Infinity)
    }

    pub fn as_finite(&self) -> Option<&Rational> {
        match self {
            Alpha::Finite(r) => Some(r),
            Alpha::Infinity => None,
        }
    }

    /// Reject `α < 1`.
    pub fn validate(&self) -> Result<()> {
        match self {
            Alpha::Finite(r) if *r < Rational::one() => {
                Err(Error::Validation(format!("alpha must be at least 1, got {}", rational::format(r))))
            }
            _ => Ok(()),
        }
    }

    /// `self ≤ other` in the extended order.
    pub fn le(&self, other: &Alpha) -> bool {
        match (self, other) {
            (_, Alpha::Infinity) => true,
            (Alpha::Infinity, Alpha::Finite(_)) => false,
            (Alpha::Finite(a), Alpha::Finite(b)) => a <= b,
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Finite(r) => write!(f, "{}", rational::format(r)),
            Alpha::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" | "Infinity" => Ok(Alpha::Infinity),
            other => Ok(Alpha::Finite(rational::parse(other)?)),
        }
    }
}

impl Serialize for Alpha {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Primal,
    Dual,
}

/// One term `coefficient · X_element` of a decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coefficient: Rational,
    pub element: usize,
}

#[derive(Clone, Debug)]
pub struct NormResult {
    pub value: Rational,
    pub method: Method,
    /// Nonzero terms of an optimal decomposition (primal only).
    pub decomposition: Vec<Term>,
    /// The re-summed decomposition `Σ αᵢXᵢ` (primal only).
    pub approximant: Option<RationalTensor>,
    /// Dual witness `Q` with `|⟨Xᵢ,Q⟩| ≤ 1` for every basis element.
    pub witness: Option<RationalTensor>,
    pub basis: Arc<CylinderBasis>,
    /// Whether basis elements enter as `2X − J` instead of `X`.
    pub signed_basis: bool,
}

impl NormResult {
    /// Basis element `i` as it enters the decomposition.
    pub fn element(&self, i: usize) -> RationalTensor {
        let x = self.basis.element(i);
        if self.signed_basis { to_signed(&x) } else { x }
    }

    pub fn to_json(&self) -> NormResultJson {
        NormResultJson {
            value: rational::format(&self.value),
            value_decimal: rational::to_f64(&self.value),
            method: self.method,
            basis_size: self.basis.len(),
            signed_basis: self.signed_basis,
            decomposition: self
                .decomposition
                .iter()
                .map(|t| TermJson {
                    coefficient: rational::format(&t.coefficient),
                    element: t.element,
                    cells: self.basis.cells(t.element).collect(),
                })
                .collect(),
            approximant: self.approximant.as_ref().map(|t| t.to_json()),
            witness: self.witness.as_ref().map(|t| t.to_json()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermJson {
    pub coefficient: String,
    pub element: usize,
    /// Row-major cells of the cylinder intersection.
    pub cells: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormResultJson {
    pub value: String,
    pub value_decimal: f64,
    pub method: Method,
    pub basis_size: usize,
    pub signed_basis: bool,
    pub decomposition: Vec<TermJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub approximant: Option<TensorJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<TensorJson>,
}

#[derive(Clone, Debug)]
pub struct DiscPResult {
    pub value: Rational,
    pub witness: CylinderIntersection,
}

#[derive(Clone, Debug)]
pub struct DiscResult {
    pub value: Rational,
    /// A minimising distribution.
    pub distribution: RationalTensor,
    /// `μ^∞(A)` from the primal LP; `value · mu_infinity = 1`.
    pub mu_infinity: Rational,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscResultJson {
    pub value: String,
    pub value_decimal: f64,
    pub mu_infinity: String,
    pub distribution: TensorJson,
}

impl DiscResult {
    pub fn to_json(&self) -> DiscResultJson {
        DiscResultJson {
            value: rational::format(&self.value),
            value_decimal: rational::to_f64(&self.value),
            mu_infinity: rational::format(&self.mu_infinity),
            distribution: self.distribution.to_json(),
        }
    }
}

impl DiscPResult {
    pub fn witness_json(&self) -> CylinderIntersectionJson {
        self.witness.to_json()
    }
}

fn to_signed(x: &RationalTensor) -> RationalTensor {
    let two = rational::int(2);
    let one = Rational::one();
    RationalTensor::new(x.shape().clone(), x.entries().iter().map(|v| &two * v - &one).collect())
        .expect("same shape")
}

/// Evaluates norms, caching the cylinder basis per shape.
pub struct NormEngine {
    limits: Limits,
    cache: Mutex<HashMap<Vec<usize>, Arc<CylinderBasis>>>,
}

impl Default for NormEngine {
    fn default() -> Self {
        NormEngine::new(Limits::default())
    }
}

impl NormEngine {
    pub fn new(limits: Limits) -> Self {
        NormEngine { limits, cache: Mutex::new(HashMap::new()) }
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn basis(&self, shape: &Shape) -> Result<Arc<CylinderBasis>> {
        if let Some(b) = self.cache.lock().expect("cache lock").get(shape.dims()) {
            return Ok(b.clone());
        }
        let b = Arc::new(cylinders::enumerate_basis(shape, &self.limits)?);
        self.cache.lock().expect("cache lock").insert(shape.dims().to_vec(), b.clone());
        Ok(b)
    }

    /// `μ(B) = min Σ|αᵢ|` over `B = Σ αᵢχ(Zᵢ)`.
    pub fn mu(&self, b: &RationalTensor) -> Result<NormResult> {
        self.decompose(b, false)
    }

    /// `μ` over the `±1` basis `{2χ(Z) − J}`.
    pub fn mu_pm(&self, b: &RationalTensor) -> Result<NormResult> {
        self.decompose(b, true)
    }

    fn element_value(basis: &CylinderBasis, signed: bool, i: usize, cell: usize) -> Rational {
        let inside = basis.contains(i, cell);
        match (signed, inside) {
            (false, true) => Rational::one(),
            (false, false) => Rational::zero(),
            (true, true) => Rational::one(),
            (true, false) => -Rational::one(),
        }
    }

    fn decompose(&self, b: &RationalTensor, signed: bool) -> Result<NormResult> {
        let basis = self.basis(b.shape())?;
        let n = basis.len();
        let size = b.size();
        // Variables p_0..p_{n-1}, q_0..q_{n-1}.
        let mut program = LinearProgram::new(2 * n, Sense::Minimize);
        program.set_objective(vec![Rational::one(); 2 * n]);
        for cell in 0..size {
            let mut coeffs = vec![Rational::zero(); 2 * n];
            for i in 0..n {
                let v = Self::element_value(&basis, signed, i, cell);
                if !v.is_zero() {
                    coeffs[n + i] = -&v;
                    coeffs[i] = v;
                }
            }
            program.add_constraint(coeffs, Relation::Eq, b.entries()[cell].clone());
        }
        let sol = lp::solve_with(&program, &self.limits)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Internal(format!("decomposition LP returned {:?}", sol.status)));
        }
        let value = sol.value.clone().expect("optimal");
        let decomposition = terms(&sol.primal, n);
        let approximant = resum(&basis, signed, &decomposition, b.shape());
        if &approximant != b {
            return Err(Error::Internal("decomposition does not reproduce the tensor".into()));
        }
        let witness = RationalTensor::new(b.shape().clone(), sol.dual.clone())?;
        check_witness(&basis, signed, &witness)?;
        if b.inner_product(&witness)? != value {
            return Err(Error::Internal("dual witness does not attain the norm".into()));
        }
        Ok(NormResult {
            value,
            method: Method::Primal,
            decomposition,
            approximant: Some(approximant),
            witness: Some(witness),
            basis,
            signed_basis: signed,
        })
    }

    /// `μ^α(A) = min{μ(B) : 1 ≤ A∘B ≤ α}`; the upper rows are omitted for `α = ∞`.
    pub fn mu_alpha_primal(&self, a: &SignTensor, alpha: &Alpha) -> Result<NormResult> {
        alpha.validate()?;
        let basis = self.basis(a.shape())?;
        let n = basis.len();
        let mut program = LinearProgram::new(2 * n, Sense::Minimize);
        program.set_objective(vec![Rational::one(); 2 * n]);
        for cell in 0..a.shape().size() {
            let sign = rational::int(a.entries()[cell] as i64);
            let mut coeffs = vec![Rational::zero(); 2 * n];
            for i in 0..n {
                if basis.contains(i, cell) {
                    coeffs[i] = sign.clone();
                    coeffs[n + i] = -&sign;
                }
            }
            if let Some(al) = alpha.as_finite() {
                program.add_constraint(coeffs.clone(), Relation::Le, al.clone());
            }
            program.add_constraint(coeffs, Relation::Ge, Rational::one());
        }
        let sol = lp::solve_with(&program, &self.limits)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Internal(format!("approximate-norm LP returned {:?}", sol.status)));
        }
        let value = sol.value.clone().expect("optimal");
        let decomposition = terms(&sol.primal, n);
        let approximant = resum(&basis, false, &decomposition, a.shape());
        for (cell, v) in approximant.entries().iter().enumerate() {
            let t = v * rational::int(a.entries()[cell] as i64);
            let above = alpha.as_finite().is_none_or(|al| t <= *al);
            if t < Rational::one() || !above {
                return Err(Error::Internal(format!("approximant violates 1 <= A∘B <= {alpha} at cell {cell}")));
            }
        }
        let total: Rational = decomposition.iter().map(|t| t.coefficient.abs()).sum();
        if total != value {
            return Err(Error::Internal("decomposition weight differs from LP value".into()));
        }
        Ok(NormResult {
            value,
            method: Method::Primal,
            decomposition,
            approximant: Some(approximant),
            witness: None,
            basis,
            signed_basis: false,
        })
    }

    /// Dual of the `μ^α` program: maximise `((1+α)⟨A,Q⟩ + (1−α)‖Q‖₁)/2` over
    /// `|⟨Xᵢ,Q⟩| ≤ 1`; for `α = ∞`, maximise `⟨A,Q⟩` over `A∘Q ≥ 0` with the
    /// same normalisation.
    pub fn mu_alpha_dual(&self, a: &SignTensor, alpha: &Alpha) -> Result<NormResult> {
        alpha.validate()?;
        let basis = self.basis(a.shape())?;
        let n = basis.len();
        let size = a.shape().size();
        let finite = alpha.as_finite().cloned();
        // Variables u_x (and w_x when α is finite); Q = A∘(u − w).
        let nvars = if finite.is_some() { 2 * size } else { size };
        let mut program = LinearProgram::new(nvars, Sense::Maximize);
        let mut objective = vec![Rational::one(); size];
        if let Some(al) = &finite {
            objective.extend(std::iter::repeat_n(-al, size));
        }
        program.set_objective(objective);
        for i in 0..n {
            let mut terms = Vec::new();
            for cell in basis.cells(i) {
                let sign = rational::int(a.entries()[cell] as i64);
                if finite.is_some() {
                    terms.push((size + cell, -&sign));
                }
                terms.push((cell, sign));
            }
            program.add_sparse(&terms, Relation::Le, Rational::one());
            let negated: Vec<(usize, Rational)> = terms.iter().map(|(j, c)| (*j, -c)).collect();
            program.add_sparse(&negated, Relation::Le, Rational::one());
        }
        let sol = lp::solve_with(&program, &self.limits)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Internal(format!("dual LP returned {:?}", sol.status)));
        }
        let value = sol.value.clone().expect("optimal");
        let q_entries: Vec<Rational> = (0..size)
            .map(|x| {
                let mut d = sol.primal[x].clone();
                if finite.is_some() {
                    d -= &sol.primal[size + x];
                }
                d * rational::int(a.entries()[x] as i64)
            })
            .collect();
        let q = RationalTensor::new(a.shape().clone(), q_entries)?;
        check_witness(&basis, false, &q)?;
        let a_rat = a.to_rational();
        let closed = dual_objective(&a_rat, &q, alpha)?;
        if closed != value {
            return Err(Error::Internal(format!(
                "dual witness objective {} differs from LP value {}",
                rational::format(&closed),
                rational::format(&value)
            )));
        }
        Ok(NormResult {
            value,
            method: Method::Dual,
            decomposition: Vec::new(),
            approximant: None,
            witness: Some(q),
            basis,
            signed_basis: false,
        })
    }

    /// `disc_P(A) = μ*(A∘P)` for a probability tensor `P`.
    pub fn disc_p(&self, a: &SignTensor, p: &RationalTensor) -> Result<DiscPResult> {
        validate_distribution(p)?;
        let q = a.hadamard(p)?;
        let r = cylinders::mu_star(&q, &self.limits)?;
        Ok(DiscPResult { value: r.value, witness: r.witness })
    }

    /// `disc(A) = min_P disc_P(A)` by LP, cross-checked against `1/μ^∞(A)`
    /// and against an independent `μ*` search at the optimal `P`.
    pub fn disc(&self, a: &SignTensor) -> Result<DiscResult> {
        let basis = self.basis(a.shape())?;
        let size = a.shape().size();
        let t = size;
        let mut program = LinearProgram::new(size + 1, Sense::Minimize);
        let mut objective = vec![Rational::zero(); size + 1];
        objective[t] = Rational::one();
        program.set_objective(objective);
        program.add_sparse(&(0..size).map(|x| (x, Rational::one())).collect::<Vec<_>>(), Relation::Eq, Rational::one());
        for i in 0..basis.len() {
            let mut terms: Vec<(usize, Rational)> =
                basis.cells(i).map(|c| (c, rational::int(a.entries()[c] as i64))).collect();
            terms.push((t, -Rational::one()));
            program.add_sparse(&terms, Relation::Le, Rational::zero());
            let negated: Vec<(usize, Rational)> =
                terms.iter().map(|(j, c)| if *j == t { (*j, c.clone()) } else { (*j, -c) }).collect();
            program.add_sparse(&negated, Relation::Le, Rational::zero());
        }
        let sol = lp::solve_with(&program, &self.limits)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Internal(format!("discrepancy LP returned {:?}", sol.status)));
        }
        let value = sol.value.clone().expect("optimal");
        let distribution = RationalTensor::new(a.shape().clone(), sol.primal[..size].to_vec())?;
        let searched = self.disc_p(a, &distribution)?;
        if searched.value != value {
            return Err(Error::Internal("discrepancy LP disagrees with the mu* search".into()));
        }
        let mu_inf = self.mu_alpha_primal(a, &Alpha::Infinity)?.value;
        if &value * &mu_inf != Rational::one() {
            return Err(Error::Internal(format!(
                "disc {} times mu^inf {} is not 1",
                rational::format(&value),
                rational::format(&mu_inf)
            )));
        }
        Ok(DiscResult { value, distribution, mu_infinity: mu_inf })
    }
}

/// `((1+α)⟨A,Q⟩ + (1−α)‖Q‖₁)/2`, or `⟨A,Q⟩` for `α = ∞`.
pub fn dual_objective(a: &RationalTensor, q: &RationalTensor, alpha: &Alpha) -> Result<Rational> {
    let corr = a.inner_product(q)?;
    Ok(match alpha {
        Alpha::Infinity => corr,
        Alpha::Finite(al) => {
            let one = Rational::one();
            ((&one + al) * corr + (&one - al) * q.l1_norm()) / rational::int(2)
        }
    })
}

/// `⟨B,Q⟩/μ*(Q)`, a lower bound on `μ(B)` for any nonzero `Q`.
pub fn dual_lower_bound(b: &RationalTensor, q: &RationalTensor, limits: &Limits) -> Result<Rational> {
    let ms = cylinders::mu_star(q, limits)?.value;
    if ms.is_zero() {
        return Err(Error::Validation("witness has mu* = 0".into()));
    }
    Ok(b.inner_product(q)? / ms)
}

/// Checks `Σ αᵢχ(Zᵢ) = A` for explicit intersections and returns `Σ|αᵢ|`,
/// an upper bound on `μ(A)`.
pub fn decomposition_upper_bound(a: &RationalTensor, terms: &[(Rational, CylinderIntersection)]) -> Result<Rational> {
    let mut sum = RationalTensor::zeros(a.shape().clone());
    for (c, z) in terms {
        sum = sum.add(&z.characteristic_tensor().scale(c))?;
    }
    if &sum != a {
        return Err(Error::Validation("the intersections do not sum to the tensor".into()));
    }
    Ok(terms.iter().map(|(c, _)| c.abs()).sum())
}

pub fn validate_distribution(p: &RationalTensor) -> Result<()> {
    if p.entries().iter().any(|v| v.is_negative()) {
        return Err(Error::Validation("distribution has a negative entry".into()));
    }
    let total: Rational = p.entries().iter().sum();
    if !total.is_one() {
        return Err(Error::Validation(format!("distribution sums to {}, not 1", rational::format(&total))));
    }
    Ok(())
}

fn terms(primal: &[Rational], n: usize) -> Vec<Term> {
    (0..n)
        .filter_map(|i| {
            let c = &primal[i] - &primal[n + i];
            (!c.is_zero()).then_some(Term { coefficient: c, element: i })
        })
        .collect()
}

fn resum(basis: &CylinderBasis, signed: bool, terms: &[Term], shape: &Shape) -> RationalTensor {
    let mut entries = vec![Rational::zero(); shape.size()];
    for t in terms {
        for (cell, e) in entries.iter_mut().enumerate() {
            let v = NormEngine::element_value(basis, signed, t.element, cell);
            if !v.is_zero() {
                *e += &t.coefficient * v;
            }
        }
    }
    RationalTensor::new(shape.clone(), entries).expect("shape")
}

fn check_witness(basis: &CylinderBasis, signed: bool, q: &RationalTensor) -> Result<()> {
    let one = Rational::one();
    for i in 0..basis.len() {
        let corr: Rational = (0..q.size())
            .map(|cell| NormEngine::element_value(basis, signed, i, cell) * &q.entries()[cell])
            .sum();
        if corr.abs() > one {
            return Err(Error::Internal(format!("witness has |<X_{i},Q>| = {} > 1", rational::format(&corr.abs()))));
        }
    }
    Ok(())
}
