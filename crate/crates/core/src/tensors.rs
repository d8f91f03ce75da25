//! Dense k-tensors over exact rationals and over {-1,+1}.
//!
//! Storage is row-major: the last index varies fastest.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};
use crate::{Error, Limits, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    /// Shape capped at the default tensor size limit.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        Self::with_cap(dims, Limits::default().max_tensor_size)
    }

    pub fn with_cap(dims: Vec<usize>, cap: u64) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Dimension("a tensor needs at least one dimension".into()));
        }
        if let Some(pos) = dims.iter().position(|&n| n == 0) {
            return Err(Error::Dimension(format!("dimension {pos} has length 0")));
        }
        let mut size: u64 = 1;
        for &n in &dims {
            size = match size.checked_mul(n as u64) {
                Some(s) if s <= cap => s,
                _ => return Err(Error::capacity("tensor size", format!("{dims:?}"), cap)),
            };
        }
        Ok(Shape { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn size(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1];
        }
        strides
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dims.len());
        multi.iter().zip(&self.dims).fold(0, |acc, (&x, &n)| {
            debug_assert!(x < n);
            acc * n + x
        })
    }

    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &n) in out.iter_mut().zip(&self.dims).rev() {
            *slot = idx % n;
            idx /= n;
        }
        out
    }

    /// Iterate over all multi-indices in row-major order.
    pub fn multi_indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.size()).map(move |i| self.unravel(i))
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalTensor {
    shape: Shape,
    entries: Vec<Rational>,
}

impl RationalTensor {
    pub fn new(shape: Shape, entries: Vec<Rational>) -> Result<Self> {
        if entries.len() != shape.size() {
            return Err(Error::Dimension(format!(
                "shape {shape} needs {} entries, got {}",
                shape.size(),
                entries.len()
            )));
        }
        Ok(RationalTensor { shape, entries })
    }

    pub fn from_fn(shape: Shape, f: impl FnMut(&[usize]) -> Rational) -> Self {
        let mut f = f;
        let entries = shape.multi_indices().map(|m| f(&m)).collect();
        RationalTensor { shape, entries }
    }

    pub fn from_ints(shape: Shape, values: &[i64]) -> Result<Self> {
        Self::new(shape, values.iter().map(|&v| rational::int(v)).collect())
    }

    pub fn zeros(shape: Shape) -> Self {
        let entries = vec![Rational::zero(); shape.size()];
        RationalTensor { shape, entries }
    }

    /// The all-ones tensor J.
    pub fn ones(shape: Shape) -> Self {
        let entries = vec![Rational::one(); shape.size()];
        RationalTensor { shape, entries }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Rational> {
        self.entries
    }

    pub fn get(&self, multi: &[usize]) -> &Rational {
        &self.entries[self.shape.index(multi)]
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "shape mismatch: {} vs {}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn inner_product(&self, other: &Self) -> Result<Rational> {
        self.check_same_shape(other)?;
        Ok(self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).sum())
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).collect();
        Ok(RationalTensor { shape: self.shape.clone(), entries })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Ok(RationalTensor { shape: self.shape.clone(), entries })
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let entries = self.entries.iter().map(|a| a * c).collect();
        RationalTensor { shape: self.shape.clone(), entries }
    }

    pub fn l1_norm(&self) -> Rational {
        self.entries.iter().map(Signed::abs).sum()
    }

    pub fn linf_norm(&self) -> Rational {
        self.entries.iter().map(Signed::abs).max().unwrap_or_else(Rational::zero)
    }

    /// Average absolute entry, `l1_norm / size`.
    pub fn mean_abs(&self) -> Rational {
        self.l1_norm() / rational::int(self.size() as i64)
    }

    /// Contraction product `B •_axis B`.
    ///
    /// The result is a `2(k-1)`-tensor indexed by `(x_j, x_j')` pairs for every
    /// dimension `j != axis`, interleaved in the original dimension order. Each
    /// entry is the average over the contracted coordinate of the product of
    /// `B` over all `2^(k-1)` ways of picking `x_j` or `x_j'` per dimension.
    pub fn contraction_product(&self, axis: usize) -> Result<Self> {
        let k = self.shape.order();
        if k < 2 {
            return Err(Error::Dimension("contraction product needs k >= 2".into()));
        }
        if axis >= k {
            return Err(Error::Dimension(format!("axis {axis} out of range for a {k}-tensor")));
        }
        let others: Vec<usize> = (0..k).filter(|&j| j != axis).collect();
        let mut out_dims = Vec::with_capacity(2 * others.len());
        for &j in &others {
            out_dims.push(self.shape.dims[j]);
            out_dims.push(self.shape.dims[j]);
        }
        let out_shape = Shape::new(out_dims)?;
        let n_axis = self.shape.dims[axis];
        let corners = 1usize << others.len();
        let denom = rational::int(n_axis as i64);

        let mut point = vec![0usize; k];
        let entries = out_shape
            .multi_indices()
            .map(|pairs| {
                let mut total = Rational::zero();
                for xa in 0..n_axis {
                    point[axis] = xa;
                    let mut prod = Rational::one();
                    for corner in 0..corners {
                        for (slot, &j) in others.iter().enumerate() {
                            let primed = (corner >> slot) & 1;
                            point[j] = pairs[2 * slot + primed];
                        }
                        prod *= &self.entries[self.shape.index(&point)];
                        if prod.is_zero() {
                            break;
                        }
                    }
                    total += prod;
                }
                total / &denom
            })
            .collect();
        Ok(RationalTensor { shape: out_shape, entries })
    }

    /// Exact conversion to a sign tensor, if every entry is +1 or -1.
    pub fn to_sign(&self) -> Option<SignTensor> {
        let one = Rational::one();
        let entries = self
            .entries
            .iter()
            .map(|v| {
                if *v == one {
                    Some(1i8)
                } else if *v == -&one {
                    Some(-1i8)
                } else {
                    None
                }
            })
            .collect::<Option<Vec<_>>>()?;
        Some(SignTensor { shape: self.shape.clone(), entries })
    }

    pub fn to_json(&self) -> TensorJson {
        TensorJson {
            shape: self.shape.dims.clone(),
            entries: EntriesJson::List(self.entries.iter().map(|r| EntryJson::Text(rational::format(r))).collect()),
        }
    }

    pub fn from_json(json: &TensorJson, limits: &Limits) -> Result<Self> {
        let shape = Shape::with_cap(json.shape.clone(), limits.max_tensor_size)?;
        let entries = match &json.entries {
            EntriesJson::Compact(s) => parse_compact_signs(s)?.into_iter().map(|v| rational::int(v as i64)).collect(),
            EntriesJson::List(items) => items.iter().map(EntryJson::to_rational).collect::<Result<Vec<_>>>()?,
        };
        Self::new(shape, entries)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignTensor {
    shape: Shape,
    entries: Vec<i8>,
}

impl SignTensor {
    pub fn new(shape: Shape, entries: Vec<i8>) -> Result<Self> {
        if entries.len() != shape.size() {
            return Err(Error::Dimension(format!(
                "shape {shape} needs {} entries, got {}",
                shape.size(),
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::Validation(format!("sign tensor entry {bad} is not +-1")));
        }
        Ok(SignTensor { shape, entries })
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> i8) -> Result<Self> {
        let entries = shape.multi_indices().map(|m| f(&m)).collect();
        Self::new(shape, entries)
    }

    pub fn ones(shape: Shape) -> Self {
        let entries = vec![1; shape.size()];
        SignTensor { shape, entries }
    }

    /// Sylvester Hadamard matrix of side `2^log_side`.
    pub fn sylvester(log_side: u32) -> Result<Self> {
        let n = 1usize << log_side;
        let shape = Shape::new(vec![n, n])?;
        Self::from_fn(shape, |ix| if (ix[0] & ix[1]).count_ones() % 2 == 0 { 1 } else { -1 })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub fn get(&self, multi: &[usize]) -> i8 {
        self.entries[self.shape.index(multi)]
    }

    pub fn to_rational(&self) -> RationalTensor {
        RationalTensor {
            shape: self.shape.clone(),
            entries: self.entries.iter().map(|&v| rational::int(v as i64)).collect(),
        }
    }

    /// `A ∘ P` for a rational tensor `P` of the same shape.
    pub fn hadamard(&self, p: &RationalTensor) -> Result<RationalTensor> {
        if &self.shape != p.shape() {
            return Err(Error::Dimension(format!("shape mismatch: {} vs {}", self.shape, p.shape())));
        }
        let entries = self.entries.iter().zip(p.entries()).map(|(&s, v)| if s > 0 { v.clone() } else { -v }).collect();
        Ok(RationalTensor { shape: self.shape.clone(), entries })
    }

    pub fn to_compact(&self) -> String {
        self.entries.iter().map(|&v| if v > 0 { '+' } else { '-' }).collect()
    }

    pub fn to_json(&self) -> TensorJson {
        TensorJson { shape: self.shape.dims.clone(), entries: EntriesJson::Compact(self.to_compact()) }
    }

    pub fn from_json(json: &TensorJson, limits: &Limits) -> Result<Self> {
        let t = RationalTensor::from_json(json, limits)?;
        t.to_sign().ok_or_else(|| Error::Validation("tensor entries are not all +-1".into()))
    }
}

fn parse_compact_signs(s: &str) -> Result<Vec<i8>> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '+' => Ok(1),
            '-' => Ok(-1),
            other => Err(Error::Parse(format!("unexpected sign character {other:?}"))),
        })
        .collect()
}

/// On-disk tensor format: `{"shape":[..], "entries":["p/q",..]}` in row-major
/// order, or `"entries":"+-+-"` for sign tensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorJson {
    pub shape: Vec<usize>,
    pub entries: EntriesJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntriesJson {
    Compact(String),
    List(Vec<EntryJson>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntryJson {
    Int(i64),
    Text(String),
}

impl EntryJson {
    fn to_rational(&self) -> Result<Rational> {
        match self {
            EntryJson::Int(v) => Ok(rational::int(*v)),
            EntryJson::Text(s) => rational::parse(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn shape(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    fn h2() -> RationalTensor {
        RationalTensor::from_ints(shape(&[2, 2]), &[1, 1, 1, -1]).unwrap()
    }

    fn j22() -> RationalTensor {
        RationalTensor::ones(shape(&[2, 2]))
    }

    #[test]
    fn shape_rules() {
        assert!(Shape::new(vec![]).is_err());
        assert!(Shape::new(vec![2, 0]).is_err());
        assert!(matches!(Shape::with_cap(vec![1024, 1025], 1 << 20), Err(Error::Capacity { .. })));
        assert!(Shape::new(vec![usize::MAX, 4]).is_err());
        let s = shape(&[2, 3, 4]);
        assert_eq!(s.size(), 24);
        assert_eq!(s.strides(), vec![12, 4, 1]);
        for i in 0..24 {
            assert_eq!(s.index(&s.unravel(i)), i);
        }
    }

    #[test]
    fn inner_products() {
        assert_eq!(j22().inner_product(&j22()).unwrap(), int(4));
        assert_eq!(h2().inner_product(&h2()).unwrap(), int(4));
        assert_eq!(h2().inner_product(&j22()).unwrap(), int(2));
        let other = RationalTensor::ones(shape(&[4]));
        assert!(matches!(h2().inner_product(&other), Err(Error::Dimension(_))));
    }

    #[test]
    fn hadamard_products() {
        assert_eq!(h2().hadamard(&j22()).unwrap(), h2());
        assert_eq!(h2().hadamard(&h2()).unwrap(), j22());
        let a = RationalTensor::from_ints(shape(&[2, 2]), &[1, -1, -1, 1]).unwrap();
        let b = RationalTensor::from_ints(shape(&[2, 2]), &[2, 3, 5, 7]).unwrap();
        let want = RationalTensor::from_ints(shape(&[2, 2]), &[2, -3, -5, 7]).unwrap();
        assert_eq!(a.hadamard(&b).unwrap(), want);
    }

    #[test]
    fn norms() {
        assert_eq!(h2().l1_norm(), int(4));
        assert_eq!(h2().linf_norm(), int(1));
        assert_eq!(RationalTensor::zeros(shape(&[3])).l1_norm(), int(0));
        let t = RationalTensor::new(shape(&[2, 2]), vec![rat(1, 2), rat(-1, 3), int(0), rat(1, 6)]).unwrap();
        assert_eq!(t.l1_norm(), int(1));
        assert_eq!(t.linf_norm(), rat(1, 2));
        assert_eq!(t.mean_abs(), rat(1, 4));
    }

    #[test]
    fn contraction_of_matrices() {
        let c = h2().contraction_product(0).unwrap();
        assert_eq!(c, RationalTensor::from_ints(shape(&[2, 2]), &[1, 0, 0, 1]).unwrap());
        assert_eq!(c.mean_abs(), rat(1, 2));
        assert_eq!(j22().contraction_product(0).unwrap(), j22());
        assert_eq!(RationalTensor::ones(shape(&[3])).contraction_product(0).unwrap_err(), Error::Dimension("contraction product needs k >= 2".into()));
    }

    #[test]
    fn contraction_matches_gram_matrix() {
        // B •_0 B [j, j'] = (1/m) sum_i B[i,j] B[i,j'].
        let vals = [3, -1, 2, 0, 5, -4, 7, 1, -2];
        let b = RationalTensor::from_ints(shape(&[3, 3]), &vals).unwrap();
        let c = b.contraction_product(0).unwrap();
        for j in 0..3 {
            for jp in 0..3 {
                let gram: i64 = (0..3).map(|i| vals[3 * i + j] * vals[3 * i + jp]).sum();
                assert_eq!(*c.get(&[j, jp]), rat(gram, 3));
            }
        }
    }

    #[test]
    fn contraction_of_three_tensor_by_expansion() {
        // Entries of a 2x2x2 sign tensor, expanded by hand.
        let v = [1i64, -1, -1, -1, 1, 1, -1, 1];
        let b = RationalTensor::from_ints(shape(&[2, 2, 2]), &v).unwrap();
        let c = b.contraction_product(0).unwrap();
        assert_eq!(c.shape().dims(), &[2, 2, 2, 2]);
        let at = |x: usize, y: usize, z: usize| v[4 * x + 2 * y + z];
        for y in 0..2 {
            for yp in 0..2 {
                for z in 0..2 {
                    for zp in 0..2 {
                        let s: i64 = (0..2)
                            .map(|x| at(x, y, z) * at(x, y, zp) * at(x, yp, z) * at(x, yp, zp))
                            .sum();
                        assert_eq!(*c.get(&[y, yp, z, zp]), rat(s, 2));
                    }
                }
            }
        }
    }

    #[test]
    fn contraction_along_other_axes() {
        let b = RationalTensor::from_ints(shape(&[2, 3]), &[1, 2, 3, 4, 5, 6]).unwrap();
        let c = b.contraction_product(1).unwrap();
        assert_eq!(c.shape().dims(), &[2, 2]);
        // (1/3) * rows dot rows
        assert_eq!(*c.get(&[0, 1]), rat(4 + 10 + 18, 3));
        assert!(b.contraction_product(2).is_err());
    }

    #[test]
    fn sylvester_and_json() {
        let h4 = SignTensor::sylvester(2).unwrap();
        assert_eq!(h4.to_compact(), "++++" .to_owned() + "+-+-" + "++--" + "+--+");
        let json = serde_json::to_string(&h4.to_json()).unwrap();
        let back: TensorJson = serde_json::from_str(&json).unwrap();
        assert_eq!(SignTensor::from_json(&back, &Limits::default()).unwrap(), h4);

        let t = RationalTensor::new(shape(&[3]), vec![rat(1, 2), int(-3), int(0)]).unwrap();
        let json = serde_json::to_string(&t.to_json()).unwrap();
        assert_eq!(json, r#"{"shape":[3],"entries":["1/2","-3","0"]}"#);
        let back: TensorJson = serde_json::from_str(&json).unwrap();
        assert_eq!(RationalTensor::from_json(&back, &Limits::default()).unwrap(), t);

        let short: TensorJson = serde_json::from_str(r#"{"shape":[2,2],"entries":"+-+"}"#).unwrap();
        assert!(matches!(RationalTensor::from_json(&short, &Limits::default()), Err(Error::Dimension(_))));
        let mixed: TensorJson = serde_json::from_str(r#"{"shape":[2],"entries":[1,"-1/2"]}"#).unwrap();
        assert_eq!(RationalTensor::from_json(&mixed, &Limits::default()).unwrap().entries()[1], rat(-1, 2));
        assert!(SignTensor::from_json(&mixed, &Limits::default()).is_err());
    }
}
