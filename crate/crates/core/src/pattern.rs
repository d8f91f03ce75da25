//! Pattern tensors `A_{k,M,φ}` and the combinatorics around them.
//!
//! Layout: dimension 0 is the input `x` of `m·M^{k−1}` bits (bit set means
//! `−1`). Bits `i·M^{k−1} ..` form block `i`, a `(k−1)`-dimensional side-`M`
//! array stored row-major over `(t_1, …, t_{k−1})`. Dimensions `1..k` are the
//! index players `y_1..y_{k−1}`, each in `[M^m]` and read base `M` with block 0
//! as the most significant digit.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::boolfun::{BooleanFunction, FunctionJson, RealFunction};
use crate::rational::{self, Rational};
use crate::tensors::{RationalTensor, Shape, SignTensor};
use crate::{Error, Limits, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PatternSpec {
    pub k: u32,
    pub m: u32,
    pub side: u32,
    pub phi: RealFunction,
    /// Multiplier `c`; `None` means 1.
    pub scale: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternSpecJson {
    pub k: u32,
    pub m: u32,
    #[serde(rename = "M")]
    pub side: u32,
    pub phi: FunctionJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<String>,
}

impl PatternSpecJson {
    pub fn to_spec(&self, limits: &Limits) -> Result<PatternSpec> {
        let scale = self.scale.as_deref().map(rational::parse).transpose()?;
        PatternSpec::new(self.k, self.m, self.side, self.phi.to_real(limits)?, scale)
    }
}

impl PatternSpec {
    pub fn new(k: u32, m: u32, side: u32, phi: RealFunction, scale: Option<Rational>) -> Result<Self> {
        if k < 2 {
            return Err(Error::Validation(format!("pattern tensors need k >= 2, got {k}")));
        }
        if side < 1 {
            return Err(Error::Validation("side length M must be at least 1".into()));
        }
        Ok(PatternSpec { k, m, side, phi, scale })
    }

    pub fn to_json(&self) -> PatternSpecJson {
        PatternSpecJson {
            k: self.k,
            m: self.m,
            side: self.side,
            phi: FunctionJson::from_real(&self.phi),
            scale: self.scale.as_ref().map(rational::format),
        }
    }

    /// `M^{k−1}`, the number of bits per block.
    pub fn block_len(&self) -> Result<u64> {
        checked_pow(self.side as u64, self.k - 1)
    }

    /// `n' = m·M^{k−1}`.
    pub fn input_bits(&self) -> Result<u64> {
        self.block_len()?
            .checked_mul(self.m as u64)
            .ok_or_else(|| Error::capacity("input bits of the pattern tensor", "overflow", u64::MAX))
    }

    /// `M^m`, the range of each index player.
    pub fn index_range(&self) -> Result<u64> {
        checked_pow(self.side as u64, self.m)
    }

    pub fn shape(&self, limits: &Limits) -> Result<Shape> {
        let bits = self.input_bits()?;
        if bits >= 63 {
            return Err(Error::capacity("pattern tensor size", format!("2^{bits}"), limits.max_tensor_size));
        }
        let r = self.index_range()? as usize;
        let mut dims = vec![1usize << bits];
        dims.extend(std::iter::repeat_n(r, self.k as usize - 1));
        Shape::with_cap(dims, limits.max_tensor_size)
    }

    pub fn scale(&self) -> Rational {
        self.scale.clone().unwrap_or_else(Rational::one)
    }

    /// Digit `i` of `y` (block 0 most significant).
    fn digit(&self, y: usize, i: u32) -> usize {
        let m = self.side as usize;
        (y / m.pow(self.m - 1 - i)) % m
    }

    /// The point of `{−1,+1}^m` (encoded) fed to `φ` at `(x, y_1, …, y_{k−1})`.
    pub fn selected_input(&self, x: usize, ys: &[usize]) -> usize {
        let block = self.side.pow(self.k - 1) as usize;
        let mut z = 0usize;
        for i in 0..self.m {
            let offset = ys.iter().fold(0usize, |acc, &y| acc * self.side as usize + self.digit(y, i));
            let bit = i as usize * block + offset;
            if (x >> bit) & 1 == 1 {
                z |= 1 << i;
            }
        }
        z
    }

    /// Flags for the degenerate corners of the parameter space.
    pub fn flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if self.phi.arity() != self.m {
            flags.push(format!("phi has arity {} but m = {}", self.phi.arity(), self.m));
        }
        if self.side == 1 {
            flags.push("M = 1: every cube is degenerate".into());
        }
        flags
    }

    fn check_arity(&self) -> Result<()> {
        if self.phi.arity() != self.m {
            return Err(Error::Validation(format!("phi has arity {} but m = {}", self.phi.arity(), self.m)));
        }
        Ok(())
    }
}

fn checked_pow(base: u64, exp: u32) -> Result<u64> {
    base.checked_pow(exp).ok_or_else(|| Error::capacity("pattern parameter", format!("{base}^{exp}"), u64::MAX))
}

/// `2^{mM^{k−1}}·M^{m(k−1)}`, evaluated in big integers.
pub fn size_formula(k: u32, m: u32, side: u32) -> BigUint {
    let block = BigUint::from(side).pow(k - 1);
    let bits = (BigUint::from(m) * block).to_u32().expect("exponent fits in u32");
    (BigUint::one() << bits) * BigUint::from(side).pow(m * (k - 1))
}

/// `A[x,ȳ] = c·φ(x¹[y₁[1],…], …, x^m[y₁[m],…])`.
pub fn build_pattern_tensor(spec: &PatternSpec, limits: &Limits) -> Result<RationalTensor> {
    spec.check_arity()?;
    let shape = spec.shape(limits)?;
    let c = spec.scale();
    Ok(RationalTensor::from_fn(shape, |multi| &c * spec.phi.eval(spec.selected_input(multi[0], &multi[1..]))))
}

/// The pattern tensor of a Boolean `f` with `c = 1`.
pub fn build_sign_pattern(k: u32, side: u32, f: &BooleanFunction, limits: &Limits) -> Result<SignTensor> {
    let spec = PatternSpec::new(k, f.arity(), side, f.to_real(), None)?;
    let shape = spec.shape(limits)?;
    SignTensor::from_fn(shape, |multi| f.eval(spec.selected_input(multi[0], &multi[1..])))
}

/// `c = 2^m / size(A)`, the scale under which `‖A‖₁ = ‖φ‖₁`.
pub fn witness_scale(spec: &PatternSpec) -> Rational {
    let size = size_formula(spec.k, spec.m, spec.side);
    Rational::new((num_bigint::BigInt::one()) << spec.m, size.into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// How often each `z` (by encoding) is fed to `φ`.
    pub counts: Vec<u64>,
    pub expected: u64,
    pub uniform: bool,
    pub flags: Vec<String>,
}

/// Counts, over all `(x, ȳ)`, how often each `z ∈ {−1,+1}^m` is selected.
pub fn uniform_coverage_check(spec: &PatternSpec, limits: &Limits) -> Result<CoverageReport> {
    let shape = spec.shape(limits)?;
    let mut counts = vec![0u64; 1 << spec.m];
    for multi in shape.multi_indices() {
        counts[spec.selected_input(multi[0], &multi[1..])] += 1;
    }
    let expected = (shape.size() >> spec.m) as u64;
    let uniform = counts.iter().all(|&c| c == expected);
    Ok(CoverageReport { counts, expected, uniform, flags: spec.flags() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CubeStats {
    pub k: u32,
    pub side: u32,
    pub m: u32,
    /// `1 − (1 − 1/M)^{k−1}`.
    pub p1: Rational,
    /// `P[g = j]` for `j = 0..=m`, from `Binomial(m, p1)`.
    pub distribution: Vec<Rational>,
    /// `P[g = j]` by enumerating all pairs `(ȳ⁰, ȳ¹)`, when within the cap.
    pub enumerated: Option<Vec<Rational>>,
    /// `C(m,j)·((k−1)/M)^j`.
    pub union_bound: Vec<Rational>,
}

impl CubeStats {
    pub fn matches_enumeration(&self) -> Option<bool> {
        self.enumerated.as_ref().map(|e| e == &self.distribution)
    }

    /// `P[g ≥ j] ≤ C(m,j)((k−1)/M)^j` for every `j`.
    pub fn union_bound_holds(&self) -> bool {
        (0..=self.m as usize).all(|j| {
            let tail: Rational = self.distribution[j..].iter().sum();
            tail <= self.union_bound[j]
        })
    }
}

fn binomial(n: u32, r: u32) -> Rational {
    let mut b = Rational::one();
    for i in 0..r {
        b = b * rational::int((n - i) as i64) / rational::int((i + 1) as i64);
    }
    b
}

/// Distribution of the number `g` of degenerate positions in a random pair of
/// index tuples. Position `i` is degenerate when `y⁰_j[i] = y¹_j[i]` for some `j`.
pub fn degenerate_cube_stats(k: u32, side: u32, m: u32, limits: &Limits) -> Result<CubeStats> {
    if k < 2 || side < 1 {
        return Err(Error::Validation("need k >= 2 and M >= 1".into()));
    }
    let one = Rational::one();
    let q = &one - Rational::new(1.into(), side.into());
    let p1 = &one - rational::pow(&q, (k - 1) as i64)?;
    let distribution: Vec<Rational> = (0..=m)
        .map(|g| {
            binomial(m, g) * rational::pow(&p1, g as i64).expect("nonnegative power")
                * rational::pow(&(&one - &p1), (m - g) as i64).expect("nonnegative power")
        })
        .collect();
    let ratio = Rational::new((k - 1).into(), side.into());
    let union_bound = (0..=m)
        .map(|g| binomial(m, g) * rational::pow(&ratio, g as i64).expect("nonnegative power"))
        .collect();
    let range = (side as u64).checked_pow(m);
    let pairs = range.and_then(|r| r.checked_pow(2 * (k - 1)));
    let enumerated = match pairs {
        Some(total) if total <= limits.max_search => Some(enumerate_cubes(k, side, m, range.expect("checked"), total)),
        _ => None,
    };
    Ok(CubeStats { k, side, m, p1, distribution, enumerated, union_bound })
}

fn enumerate_cubes(k: u32, side: u32, m: u32, range: u64, total: u64) -> Vec<Rational> {
    let players = 2 * (k - 1) as usize;
    let mut counts = vec![0u64; m as usize + 1];
    let mut tuple = vec![0u64; players];
    for _ in 0..total {
        let mut g = 0;
        for i in 0..m {
            let div = (side as u64).pow(m - 1 - i);
            let degenerate = (0..(k - 1) as usize)
                .any(|j| (tuple[2 * j] / div) % side as u64 == (tuple[2 * j + 1] / div) % side as u64);
            if degenerate {
                g += 1;
            }
        }
        counts[g] += 1;
        for t in tuple.iter_mut() {
            *t += 1;
            if *t < range {
                break;
            }
            *t = 0;
        }
    }
    counts.iter().map(|&c| Rational::new(c.into(), total.into())).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub k: u32,
    pub m: u32,
    #[serde(rename = "M")]
    pub side: u32,
    /// `n' = m·M^{k−1}`.
    pub n_prime: u64,
    /// Per index tuple `ȳ` (row-major), the selector strings `z_1..z_{k−1}`
    /// as `n'`-character `+`/`-` strings.
    pub selectors: Vec<Vec<String>>,
    pub entries_checked: u64,
    /// `A[x,ȳ] = OR_{n'}(x ∧ z_1 ∧ … ∧ z_{k−1})` everywhere.
    pub matches_or: bool,
    /// `A[x,ȳ] = −DISJ_{k,n'}(x, z_1, …, z_{k−1})` everywhere.
    pub matches_disj: bool,
    pub flags: Vec<String>,
}

/// Selector masks (bit set means `−1`): `z_j^i[t] = −1` iff `t_j = y_j[i]`.
pub fn selectors(spec: &PatternSpec, ys: &[usize]) -> Vec<u64> {
    let block = spec.side.pow(spec.k - 1) as usize;
    let players = (spec.k - 1) as usize;
    let mut z = vec![0u64; players];
    for i in 0..spec.m {
        for t in 0..block {
            // Decode t row-major into (t_1..t_{k-1}).
            let mut rest = t;
            let mut coords = vec![0usize; players];
            for j in (0..players).rev() {
                coords[j] = rest % spec.side as usize;
                rest /= spec.side as usize;
            }
            for j in 0..players {
                if coords[j] == spec.digit(ys[j], i) {
                    z[j] |= 1 << (i as usize * block + t);
                }
            }
        }
    }
    z
}

fn sign_string(mask: u64, n: u64) -> String {
    (0..n).map(|b| if (mask >> b) & 1 == 1 { '-' } else { '+' }).collect()
}

/// Checks that `A_{k,M,OR_m}` is a subtensor of `−DISJ_{k,n'}` via the
/// selector strings, over every entry.
pub fn embed_into_disj(k: u32, m: u32, side: u32, limits: &Limits) -> Result<EmbeddingReport> {
    let or = BooleanFunction::or(m, limits)?;
    let spec = PatternSpec::new(k, m, side, or.to_real(), None)?;
    let a = build_sign_pattern(k, side, &or, limits)?;
    let n_prime = spec.input_bits()?;
    if n_prime > 63 {
        return Err(Error::capacity("selector length", n_prime, 63));
    }
    let disj = match (k as u64).checked_mul(n_prime) {
        Some(ar) if ar <= limits.max_arity as u64 => Some(BooleanFunction::disj(k, n_prime as u32, limits)?),
        _ => None,
    };
    let shape = a.shape().clone();
    let index_shape = Shape::new(shape.dims()[1..].to_vec())?;
    let mut selector_strings = Vec::new();
    let (mut matches_or, mut matches_disj) = (true, true);
    let mut checked = 0u64;
    let full = if n_prime == 64 { u64::MAX } else { (1u64 << n_prime) - 1 };
    for ys in index_shape.multi_indices() {
        let z = selectors(&spec, &ys);
        selector_strings.push(z.iter().map(|&s| sign_string(s, n_prime)).collect());
        for x in 0..shape.dims()[0] {
            let mut multi = vec![x];
            multi.extend_from_slice(&ys);
            let entry = a.get(&multi);
            let common = z.iter().fold(x as u64 & full, |acc, &s| acc & s);
            let or_value: i8 = if common != 0 { -1 } else { 1 };
            matches_or &= entry == or_value;
            let disj_value = match &disj {
                Some(f) => {
                    let idx = z
                        .iter()
                        .enumerate()
                        .fold(x, |acc, (j, &s)| acc | ((s as usize) << ((j + 1) as u64 * n_prime)));
                    f.eval(idx)
                }
                // Same identity evaluated directly when the truth table is too large.
                None => -or_value,
            };
            matches_disj &= entry == -disj_value;
            checked += 1;
        }
    }
    let mut flags = spec.flags();
    if disj.is_none() {
        flags.push("DISJ truth table above the arity cap; identity evaluated directly".into());
    }
    Ok(EmbeddingReport {
        k,
        m,
        side,
        n_prime,
        selectors: selector_strings,
        entries_checked: checked,
        matches_or,
        matches_disj,
        flags,
    })
}

/// The dual-polynomial witness `Q = A_{k,M,φ}` with `c = 2^m/size`, checking
/// `‖Q‖₁ = ‖φ‖₁` exactly.
pub fn pattern_witness(k: u32, side: u32, phi: &RealFunction, limits: &Limits) -> Result<RationalTensor> {
    let mut spec = PatternSpec::new(k, phi.arity(), side, phi.clone(), None)?;
    spec.scale = Some(witness_scale(&spec));
    let q = build_pattern_tensor(&spec, limits)?;
    if q.l1_norm() != phi.l1_norm() {
        return Err(Error::Internal("pattern witness lost its normalisation".into()));
    }
    Ok(q)
}

/// Whether `‖A‖₁ = ‖φ‖₁` under the witness scale, by direct summation.
pub fn normalisation_holds(spec: &PatternSpec, limits: &Limits) -> Result<bool> {
    let mut s = spec.clone();
    s.scale = Some(witness_scale(spec));
    let a = build_pattern_tensor(&s, limits)?;
    Ok(a.l1_norm() == spec.phi.l1_norm())
}
