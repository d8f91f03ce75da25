//! Boolean functions on {-1,+1}^m with -1 read as "true".
//!
//! Inputs are encoded as integers in `[0, 2^m)`: bit `j` of the index is set
//! exactly when `x_j = -1`. Subsets `S ⊆ [m]` are bit masks over the same bits.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};
use crate::{Error, Limits, Result};

fn check_arity(m: u32, limits: &Limits) -> Result<()> {
    if m > limits.max_arity {
        return Err(Error::capacity("truth table arity", m, limits.max_arity));
    }
    Ok(())
}

/// Value of coordinate `j` of the point with index `x`.
pub fn coordinate(x: usize, j: u32) -> i8 {
    if (x >> j) & 1 == 1 { -1 } else { 1 }
}

/// `χ_S(x) = ∏_{i∈S} x_i`.
pub fn character(m: u32, subset: usize, x: usize) -> Result<i8> {
    if subset >> m != 0 || x >> m != 0 {
        return Err(Error::Validation(format!("subset {subset:#b} or point {x:#b} outside {m} coordinates")));
    }
    Ok(character_unchecked(subset, x))
}

#[inline]
pub(crate) fn character_unchecked(subset: usize, x: usize) -> i8 {
    if (subset & x).count_ones().is_multiple_of(2) { 1 } else { -1 }
}

/// Point index for explicit coordinates.
pub fn encode_point(xs: &[i8]) -> usize {
    xs.iter().enumerate().fold(0, |acc, (j, &v)| if v < 0 { acc | (1 << j) } else { acc })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BooleanFunction {
    arity: u32,
    table: Vec<i8>,
}

impl BooleanFunction {
    pub fn new(arity: u32, table: Vec<i8>) -> Result<Self> {
        check_arity(arity, &Limits::default())?;
        if table.len() != 1usize << arity {
            return Err(Error::Dimension(format!(
                "arity {arity} needs {} table entries, got {}",
                1usize << arity,
                table.len()
            )));
        }
        if table.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::Validation("Boolean function values must be +-1".into()));
        }
        Ok(BooleanFunction { arity, table })
    }

    fn from_predicate(arity: u32, limits: &Limits, truth: impl Fn(usize) -> bool) -> Result<Self> {
        check_arity(arity, limits)?;
        let table = (0..1usize << arity).map(|x| if truth(x) { -1 } else { 1 }).collect();
        Ok(BooleanFunction { arity, table })
    }

    /// `OR_m`: true iff some input is true.
    pub fn or(m: u32, limits: &Limits) -> Result<Self> {
        Self::from_predicate(m, limits, |x| x != 0)
    }

    /// `AND_m`: true iff every input is true.
    pub fn and(m: u32, limits: &Limits) -> Result<Self> {
        Self::from_predicate(m, limits, |x| x == (1usize << m) - 1)
    }

    /// `XOR_m = ∏ x_i`: true iff an odd number of inputs is true.
    pub fn xor(m: u32, limits: &Limits) -> Result<Self> {
        Self::from_predicate(m, limits, |x| x.count_ones() % 2 == 1)
    }

    /// `MAJ_m`: true iff strictly more than half the inputs are true.
    pub fn maj(m: u32, limits: &Limits) -> Result<Self> {
        Self::from_predicate(m, limits, |x| 2 * x.count_ones() > m)
    }

    /// `DISJ_{k,n}(x_1..x_k) = -OR_n(x_1 ∧ … ∧ x_k)`, true iff the sets are
    /// disjoint. Player `p` owns input bits `p*n .. p*n + n`.
    pub fn disj(k: u32, n: u32, limits: &Limits) -> Result<Self> {
        let arity = k.checked_mul(n).ok_or_else(|| Error::capacity("DISJ arity", "overflow", limits.max_arity))?;
        let block = (1usize << n) - 1;
        Self::from_predicate(arity, limits, |x| {
            let common = (0..k).fold(block, |acc, p| acc & (x >> (p * n)));
            common & block == 0
        })
    }

    /// Built-in family by name (`OR`, `AND`, `XOR`, `MAJ`, `DISJ`).
    pub fn builtin(name: &str, m: u32, k: Option<u32>, limits: &Limits) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "OR" => Self::or(m, limits),
            "AND" => Self::and(m, limits),
            "XOR" | "PARITY" => Self::xor(m, limits),
            "MAJ" | "MAJORITY" => Self::maj(m, limits),
            "DISJ" => {
                let k = k.ok_or_else(|| Error::Validation("DISJ needs the number of players k".into()))?;
                Self::disj(k, m, limits)
            }
            other => Err(Error::Validation(format!("unknown function family {other:?}"))),
        }
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn table(&self) -> &[i8] {
        &self.table
    }

    pub fn eval(&self, x: usize) -> i8 {
        self.table[x]
    }

    pub fn eval_point(&self, xs: &[i8]) -> i8 {
        self.table[encode_point(xs)]
    }

    pub fn is_constant(&self) -> bool {
        self.table.iter().all(|&v| v == self.table[0])
    }

    pub fn to_real(&self) -> RealFunction {
        RealFunction { arity: self.arity, table: self.table.iter().map(|&v| rational::int(v as i64)).collect() }
    }

    pub fn to_compact(&self) -> String {
        self.table.iter().map(|&v| if v > 0 { '+' } else { '-' }).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RealFunction {
    arity: u32,
    table: Vec<Rational>,
}

impl RealFunction {
    pub fn new(arity: u32, table: Vec<Rational>) -> Result<Self> {
        check_arity(arity, &Limits::default())?;
        if table.len() != 1usize << arity {
            return Err(Error::Dimension(format!(
                "arity {arity} needs {} table entries, got {}",
                1usize << arity,
                table.len()
            )));
        }
        Ok(RealFunction { arity, table })
    }

    pub fn zero(arity: u32) -> Result<Self> {
        Self::new(arity, vec![Rational::zero(); 1usize << arity])
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn table(&self) -> &[Rational] {
        &self.table
    }

    pub fn eval(&self, x: usize) -> &Rational {
        &self.table[x]
    }

    pub fn scale(&self, c: &Rational) -> Self {
        RealFunction { arity: self.arity, table: self.table.iter().map(|v| v * c).collect() }
    }

    /// `⟨f, g⟩ = Σ_x f(x) g(x)`.
    pub fn inner_product(&self, other: &RealFunction) -> Result<Rational> {
        if self.arity != other.arity {
            return Err(Error::Dimension(format!("arity mismatch {} vs {}", self.arity, other.arity)));
        }
        Ok(self.table.iter().zip(&other.table).map(|(a, b)| a * b).sum())
    }

    pub fn inner_product_bool(&self, f: &BooleanFunction) -> Result<Rational> {
        if self.arity != f.arity {
            return Err(Error::Dimension(format!("arity mismatch {} vs {}", self.arity, f.arity)));
        }
        Ok(self.table.iter().zip(&f.table).map(|(a, &s)| if s > 0 { a.clone() } else { -a }).sum())
    }

    /// `⟨f, χ_S⟩`.
    pub fn correlation_with_character(&self, subset: usize) -> Rational {
        self.table
            .iter()
            .enumerate()
            .map(|(x, v)| if character_unchecked(subset, x) > 0 { v.clone() } else { -v })
            .sum()
    }

    /// `ℓ₁(φ) = Σ_z |φ(z)|`.
    pub fn l1_norm(&self) -> Rational {
        self.table.iter().map(Signed::abs).sum()
    }

    /// Values as a sign function, if every value is +-1.
    pub fn to_boolean(&self) -> Option<BooleanFunction> {
        let table = self
            .table
            .iter()
            .map(|v| {
                if *v == rational::int(1) {
                    Some(1)
                } else if *v == rational::int(-1) {
                    Some(-1)
                } else {
                    None
                }
            })
            .collect::<Option<Vec<i8>>>()?;
        Some(BooleanFunction { arity: self.arity, table })
    }
}

/// Exact Fourier coefficients, indexed by subset mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourierSpectrum {
    arity: u32,
    coefficients: Vec<Rational>,
}

impl FourierSpectrum {
    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn coefficient(&self, subset: usize) -> &Rational {
        &self.coefficients[subset]
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    /// Largest `|S|` with a nonzero coefficient; `None` for the zero function.
    pub fn degree(&self) -> Option<u32> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(s, _)| s.count_ones())
            .max()
    }

    /// `f(x) = Σ_S f̂(S) χ_S(x)`.
    pub fn inverse(&self) -> RealFunction {
        let table = walsh_hadamard(&self.coefficients);
        RealFunction { arity: self.arity, table }
    }
}

/// Unnormalised Walsh-Hadamard butterfly: `out[a] = Σ_b (-1)^{|a∧b|} v[b]`.
fn walsh_hadamard(values: &[Rational]) -> Vec<Rational> {
    let mut v = values.to_vec();
    let mut h = 1;
    while h < v.len() {
        for block in (0..v.len()).step_by(2 * h) {
            for i in block..block + h {
                let a = v[i].clone();
                let b = v[i + h].clone();
                v[i] = &a + &b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
    v
}

/// `f̂(S) = 2^{-m} ⟨f, χ_S⟩`.
pub fn fourier_transform(f: &RealFunction) -> FourierSpectrum {
    let scale = rational::int(1i64 << f.arity);
    let coefficients = walsh_hadamard(&f.table).into_iter().map(|c| c / &scale).collect();
    FourierSpectrum { arity: f.arity, coefficients }
}

/// On-disk function format: `{"name":"OR","m":3}`, `{"m":2,"table":"+---"}`
/// or `{"m":1,"table":["1/2","-1/2"]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TableJson {
    Compact(String),
    Values(Vec<String>),
}

impl FunctionJson {
    pub fn named(name: &str, m: u32) -> Self {
        FunctionJson { name: Some(name.to_owned()), m, k: None, table: None }
    }

    pub fn from_boolean(f: &BooleanFunction) -> Self {
        FunctionJson { name: None, m: f.arity, k: None, table: Some(TableJson::Compact(f.to_compact())) }
    }

    pub fn from_real(f: &RealFunction) -> Self {
        FunctionJson {
            name: None,
            m: f.arity,
            k: None,
            table: Some(TableJson::Values(f.table.iter().map(rational::format).collect())),
        }
    }

    pub fn to_real(&self, limits: &Limits) -> Result<RealFunction> {
        match (&self.name, &self.table) {
            (Some(name), None) => Ok(BooleanFunction::builtin(name, self.m, self.k, limits)?.to_real()),
            (None, Some(TableJson::Compact(s))) => {
                let table = s
                    .chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| match c {
                        '+' => Ok(rational::int(1)),
                        '-' => Ok(rational::int(-1)),
                        other => Err(Error::Parse(format!("unexpected table character {other:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                check_arity(self.m, limits)?;
                RealFunction::new(self.m, table)
            }
            (None, Some(TableJson::Values(vals))) => {
                check_arity(self.m, limits)?;
                RealFunction::new(self.m, vals.iter().map(|s| rational::parse(s)).collect::<Result<_>>()?)
            }
            (Some(_), Some(_)) => Err(Error::Validation("give either a name or a table, not both".into())),
            (None, None) => Err(Error::Validation("function needs a name or a table".into())),
        }
    }

    pub fn to_boolean(&self, limits: &Limits) -> Result<BooleanFunction> {
        self.to_real(limits)?
            .to_boolean()
            .ok_or_else(|| Error::Validation("function values are not all +-1".into()))
    }
}
