//! Cylinders, cylinder intersections, their enumeration, and exact `μ*`.
//!
//! A cylinder in dimension `i` is a set of cells whose membership ignores
//! coordinate `i`, so it is described by a subset of the "projection space"
//! of the remaining coordinates. Cells are tracked as bits of a `u128`, which
//! caps exhaustive work at 128 cells.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};
use crate::tensors::{RationalTensor, Shape};
use crate::{Error, Limits, Result};

pub(crate) type CellMask = u128;
pub const MAX_CELLS: usize = 128;

/// Cell/projection bookkeeping for one shape.
#[derive(Debug, Clone)]
pub(crate) struct Geometry {
    pub size: usize,
    /// `proj[i][cell]`: index of the cell in the projection space of dimension `i`.
    pub proj: Vec<Vec<usize>>,
    pub proj_sizes: Vec<usize>,
    /// `fibers[i][p]`: cells whose projection along `i` is `p`.
    pub fibers: Vec<Vec<CellMask>>,
    pub fiber_cells: Vec<Vec<Vec<usize>>>,
}

impl Geometry {
    pub fn new(shape: &Shape) -> Result<Self> {
        let size = shape.size();
        if size > MAX_CELLS {
            return Err(Error::capacity("cells for exhaustive cylinder search", size, MAX_CELLS));
        }
        let k = shape.order();
        let dims = shape.dims();
        let mut proj = vec![vec![0usize; size]; k];
        let mut proj_sizes = vec![0usize; k];
        for i in 0..k {
            proj_sizes[i] = size / dims[i];
            for (cell, slot) in proj[i].iter_mut().enumerate() {
                let multi = shape.unravel(cell);
                *slot = multi
                    .iter()
                    .zip(dims)
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .fold(0, |acc, (_, (&x, &n))| acc * n + x);
            }
        }
        let mut fibers = Vec::with_capacity(k);
        let mut fiber_cells = Vec::with_capacity(k);
        for i in 0..k {
            let mut masks = vec![0 as CellMask; proj_sizes[i]];
            let mut cells = vec![Vec::new(); proj_sizes[i]];
            for cell in 0..size {
                masks[proj[i][cell]] |= 1 << cell;
                cells[proj[i][cell]].push(cell);
            }
            fibers.push(masks);
            fiber_cells.push(cells);
        }
        Ok(Geometry { size, proj, proj_sizes, fibers, fiber_cells })
    }

    pub fn full_mask(&self) -> CellMask {
        if self.size == MAX_CELLS { CellMask::MAX } else { (1 << self.size) - 1 }
    }

    fn cylinder_count(&self, dim: usize) -> Option<u64> {
        let p = self.proj_sizes[dim];
        if p >= 63 { None } else { Some(1u64 << p) }
    }

    /// Masks of all `2^P` cylinders in dimension `dim`, indexed by subset bits.
    fn cylinder_masks(&self, dim: usize) -> Vec<CellMask> {
        let p = self.proj_sizes[dim];
        let mut masks = vec![0 as CellMask; 1 << p];
        for s in 1..masks.len() {
            let low = s.trailing_zeros() as usize;
            masks[s] = masks[s & (s - 1)] | self.fibers[dim][low];
        }
        masks
    }

    fn mask_of(&self, z: &CylinderIntersection) -> CellMask {
        (0..self.size).filter(|&c| z.contains_cell(self, c)).fold(0, |m, c| m | (1 << c))
    }
}

/// `Z = Z_1 ∩ … ∩ Z_k`, each `Z_i` given by its members in the projection
/// space of dimension `i` (row-major over the other coordinates).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderIntersection {
    shape: Shape,
    cylinders: Vec<Vec<bool>>,
}

impl CylinderIntersection {
    pub fn new(shape: Shape, cylinders: Vec<Vec<bool>>) -> Result<Self> {
        if cylinders.len() != shape.order() {
            return Err(Error::Dimension(format!(
                "{} cylinders for a {}-tensor",
                cylinders.len(),
                shape.order()
            )));
        }
        for (i, c) in cylinders.iter().enumerate() {
            let want = shape.size() / shape.dims()[i];
            if c.len() != want {
                return Err(Error::Dimension(format!("cylinder {i} has {} slots, expected {want}", c.len())));
            }
        }
        Ok(CylinderIntersection { shape, cylinders })
    }

    /// Every cylinder full: the whole index space.
    pub fn full(shape: Shape) -> Self {
        let cylinders = (0..shape.order()).map(|i| vec![true; shape.size() / shape.dims()[i]]).collect();
        CylinderIntersection { shape, cylinders }
    }

    /// The single cell `multi`: each cylinder pins all coordinates but its own.
    pub fn cell(shape: Shape, multi: &[usize]) -> Result<Self> {
        if multi.len() != shape.order() || multi.iter().zip(shape.dims()).any(|(&x, &n)| x >= n) {
            return Err(Error::Dimension(format!("cell {multi:?} outside shape {shape}")));
        }
        let mut cylinders = Vec::new();
        for i in 0..shape.order() {
            let mut c = vec![false; shape.size() / shape.dims()[i]];
            c[projection_index(&shape, i, multi)] = true;
            cylinders.push(c);
        }
        Ok(CylinderIntersection { shape, cylinders })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn cylinders(&self) -> &[Vec<bool>] {
        &self.cylinders
    }

    pub fn contains(&self, multi: &[usize]) -> bool {
        (0..self.shape.order()).all(|i| self.cylinders[i][projection_index(&self.shape, i, multi)])
    }

    fn contains_cell(&self, geo: &Geometry, cell: usize) -> bool {
        (0..self.shape.order()).all(|i| self.cylinders[i][geo.proj[i][cell]])
    }

    /// `χ(Z)`: 1 on members, 0 elsewhere.
    pub fn characteristic_tensor(&self) -> RationalTensor {
        RationalTensor::from_fn(self.shape.clone(), |m| rational::int(self.contains(m) as i64))
    }

    pub fn to_json(&self) -> CylinderIntersectionJson {
        CylinderIntersectionJson {
            shape: self.shape.dims().to_vec(),
            members: self
                .cylinders
                .iter()
                .map(|c| c.iter().enumerate().filter(|(_, &b)| b).map(|(p, _)| p).collect())
                .collect(),
        }
    }

    pub fn from_json(json: &CylinderIntersectionJson) -> Result<Self> {
        let shape = Shape::new(json.shape.clone())?;
        let mut cylinders = Vec::new();
        for (i, members) in json.members.iter().enumerate() {
            let len = shape.size() / shape.dims().get(i).copied().unwrap_or(1);
            let mut c = vec![false; len];
            for &p in members {
                *c.get_mut(p).ok_or_else(|| Error::Dimension(format!("cylinder {i} member {p} out of range")))? = true;
            }
            cylinders.push(c);
        }
        Self::new(shape, cylinders)
    }
}

/// JSON form: per dimension, the member indices of its cylinder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderIntersectionJson {
    pub shape: Vec<usize>,
    pub members: Vec<Vec<usize>>,
}

/// Row-major index of `multi` with coordinate `dim` dropped.
pub fn projection_index(shape: &Shape, dim: usize, multi: &[usize]) -> usize {
    multi
        .iter()
        .zip(shape.dims())
        .enumerate()
        .filter(|(j, _)| *j != dim)
        .fold(0, |acc, (_, (&x, &n))| acc * n + x)
}

/// True iff the 0/1 tensor `t` is the characteristic tensor of a cylinder
/// intersection, i.e. it equals the intersection of its cylindrical closures.
pub fn is_cylinder_intersection(t: &RationalTensor) -> bool {
    let shape = t.shape();
    let one = rational::int(1);
    if t.entries().iter().any(|v| !v.is_zero() && *v != one) {
        return false;
    }
    let members: Vec<Vec<usize>> = shape.multi_indices().filter(|m| t.get(m) == &one).collect();
    let closures: Vec<std::collections::HashSet<usize>> = (0..shape.order())
        .map(|i| members.iter().map(|m| projection_index(shape, i, m)).collect())
        .collect();
    shape.multi_indices().all(|m| {
        let in_all = (0..shape.order()).all(|i| closures[i].contains(&projection_index(shape, i, &m)));
        in_all == (t.get(&m) == &one)
    })
}

/// Distinct nonzero characteristic tensors of all cylinder intersections of a
/// shape, in lexicographic order of their entry vectors.
#[derive(Clone, Debug)]
pub struct CylinderBasis {
    shape: Shape,
    masks: Vec<CellMask>,
    size: usize,
}

impl CylinderBasis {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn contains(&self, element: usize, cell: usize) -> bool {
        (self.masks[element] >> cell) & 1 == 1
    }

    /// Cells (row-major indices) of basis element `element`.
    pub fn cells(&self, element: usize) -> impl Iterator<Item = usize> + '_ {
        let m = self.masks[element];
        (0..self.size).filter(move |&c| (m >> c) & 1 == 1)
    }

    pub fn element(&self, element: usize) -> RationalTensor {
        let m = self.masks[element];
        let entries = (0..self.size).map(|c| rational::int(((m >> c) & 1) as i64)).collect();
        RationalTensor::new(self.shape.clone(), entries).expect("basis element matches its shape")
    }

    pub fn elements(&self) -> impl Iterator<Item = RationalTensor> + '_ {
        (0..self.len()).map(|i| self.element(i))
    }

    /// `⟨χ(Z_i), Q⟩` for every basis element.
    pub fn correlations(&self, q: &RationalTensor) -> Vec<Rational> {
        (0..self.len()).map(|i| self.cells(i).map(|c| &q.entries()[c]).sum()).collect()
    }
}

/// Enumerate the deduplicated cylinder-intersection basis of `shape`.
pub fn enumerate_basis(shape: &Shape, limits: &Limits) -> Result<CylinderBasis> {
    let geo = Geometry::new(shape)?;
    let k = shape.order();
    let mut current: Vec<CellMask> = vec![geo.full_mask()];
    let mut evaluated: u64 = 0;
    for dim in 0..k {
        let count = geo
            .cylinder_count(dim)
            .ok_or_else(|| Error::capacity("cylinders in one dimension", format!("2^{}", geo.proj_sizes[dim]), limits.max_search))?;
        evaluated = evaluated.saturating_add((current.len() as u64).saturating_mul(count));
        if evaluated > limits.max_search {
            return Err(Error::capacity("cylinder-intersection enumeration", evaluated, limits.max_search));
        }
        let cyl = geo.cylinder_masks(dim);
        let mut seen = std::collections::HashSet::with_capacity(current.len() * 4);
        let mut next = Vec::new();
        for &m in &current {
            for &c in &cyl {
                let mm = m & c;
                if mm != 0 && seen.insert(mm) {
                    next.push(mm);
                }
            }
        }
        current = next;
        if current.len() as u64 > limits.max_basis && dim + 1 == k {
            return Err(Error::capacity("distinct cylinder intersections", current.len(), limits.max_basis));
        }
    }
    // Lexicographic order on entry vectors: cell 0 is the most significant.
    current.sort_by_key(|m| m.reverse_bits());
    Ok(CylinderBasis { shape: shape.clone(), masks: current, size: geo.size })
}

#[derive(Clone, Debug)]
pub struct MuStarResult {
    pub value: Rational,
    /// A cylinder intersection attaining the maximum.
    pub witness: CylinderIntersection,
    /// Number of candidate intersections evaluated.
    pub evaluations: u64,
}

/// Integer-scaled copy of a rational tensor: `values[c] / denominator`.
struct Scaled {
    values: Vec<i128>,
    denominator: BigInt,
}

fn scale_to_integers(q: &RationalTensor) -> Result<Scaled> {
    let den = rational::common_denominator(q.entries());
    let ints: Vec<BigInt> = q.entries().iter().map(|v| v.numer() * (&den / v.denom())).collect();
    let total: BigInt = ints.iter().map(|v| v.abs()).sum();
    if total.bits() > 120 {
        return Err(Error::capacity("bits of scaled tensor entries", total.bits(), 120));
    }
    let values = ints.iter().map(|v| v.to_i128().expect("bounded by total")).collect();
    Ok(Scaled { values, denominator: den })
}

struct Level {
    /// (mask, parent index in previous level, chosen subset)
    entries: Vec<(CellMask, usize, usize)>,
}

/// `μ*(Q) = max_Z |⟨Q, χ(Z)⟩|` over all cylinder intersections.
///
/// Cylinders of all dimensions but one are enumerated, with partial
/// intersections deduplicated level by level. For the remaining dimension the
/// objective splits over its fibers, so the best cylinder takes every fiber
/// with positive (or every fiber with negative) partial sum.
pub fn mu_star(q: &RationalTensor, limits: &Limits) -> Result<MuStarResult> {
    let geo = Geometry::new(q.shape())?;
    let k = q.shape().order();
    let scaled = scale_to_integers(q)?;

    // The greedy dimension has the largest projection space (ties: last).
    let greedy = (0..k).rev().max_by_key(|&i| geo.proj_sizes[i]).expect("k >= 1");
    let mut order: Vec<usize> = (0..k).filter(|&i| i != greedy).collect();
    order.sort_by_key(|&i| geo.proj_sizes[i]);

    let mut levels = vec![Level { entries: vec![(geo.full_mask(), 0, 0)] }];
    let mut evaluated: u64 = 0;
    let mut last_masks: Vec<CellMask> = vec![0];
    for (pos, &dim) in order.iter().enumerate() {
        let count = geo
            .cylinder_count(dim)
            .ok_or_else(|| Error::capacity("cylinders in one dimension", format!("2^{}", geo.proj_sizes[dim]), limits.max_search))?;
        let prev = levels.last().expect("nonempty");
        evaluated = evaluated.saturating_add((prev.entries.len() as u64).saturating_mul(count));
        if evaluated > limits.max_search {
            return Err(Error::capacity("mu* candidate evaluations", evaluated, limits.max_search));
        }
        let cyl = geo.cylinder_masks(dim);
        if pos + 1 == order.len() {
            last_masks = cyl;
            break;
        }
        let mut seen: HashMap<CellMask, usize> = HashMap::new();
        let mut entries = Vec::new();
        for (pi, &(m, _, _)) in prev.entries.iter().enumerate() {
            for (s, &c) in cyl.iter().enumerate() {
                let mm = m & c;
                if mm != 0 && !seen.contains_key(&mm) {
                    seen.insert(mm, entries.len());
                    entries.push((mm, pi, s));
                }
            }
        }
        levels.push(Level { entries });
    }
    if order.is_empty() {
        evaluated = 1;
    }

    let greedy_cells = &geo.fiber_cells[greedy];
    let eval = |mask: CellMask| -> (i128, bool) {
        let (mut pos, mut neg) = (0i128, 0i128);
        for cells in greedy_cells {
            let s: i128 = cells.iter().filter(|&&c| (mask >> c) & 1 == 1).map(|&c| scaled.values[c]).sum();
            if s > 0 {
                pos += s;
            } else {
                neg -= s;
            }
        }
        if pos >= neg { (pos, true) } else { (neg, false) }
    };

    let base = &levels.last().expect("nonempty").entries;
    // Best candidate per base entry: (value, base index, last subset, positive side).
    let best = base
        .par_iter()
        .enumerate()
        .map(|(bi, &(m, _, _))| {
            let mut best = (i128::MIN, bi, 0usize, true);
            for (s, &c) in last_masks.iter().enumerate() {
                let mm = if order.is_empty() { m } else { m & c };
                let (v, side) = eval(mm);
                if v > best.0 {
                    best = (v, bi, s, side);
                }
            }
            best
        })
        .reduce(
            || (i128::MIN, usize::MAX, usize::MAX, true),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a }
            },
        );

    let (value_int, bi, last_subset, positive) = best;
    // Reconstruct the chosen cylinders.
    let mut chosen: Vec<Option<usize>> = vec![None; k];
    if let Some(&last_dim) = order.last() {
        chosen[last_dim] = Some(last_subset);
    }
    let mut idx = bi;
    for (lvl, &dim) in order.iter().enumerate().take(order.len().saturating_sub(1)).rev() {
        let (_, parent, s) = levels[lvl + 1].entries[idx];
        chosen[dim] = Some(s);
        idx = parent;
    }
    let mut mask = geo.full_mask();
    let mut cylinders: Vec<Vec<bool>> = vec![Vec::new(); k];
    for &dim in &order {
        let s = chosen[dim].expect("every enumerated dimension has a choice");
        cylinders[dim] = (0..geo.proj_sizes[dim]).map(|p| (s >> p) & 1 == 1).collect();
        mask &= geo.cylinder_masks_single(dim, s);
    }
    cylinders[greedy] = greedy_cells
        .iter()
        .map(|cells| {
            let s: i128 = cells.iter().filter(|&&c| (mask >> c) & 1 == 1).map(|&c| scaled.values[c]).sum();
            if positive { s > 0 } else { s < 0 }
        })
        .collect();
    let witness = CylinderIntersection { shape: q.shape().clone(), cylinders };

    let value = Rational::new(BigInt::from(value_int), scaled.denominator.clone());
    // Re-derive the objective from the witness as an internal consistency check.
    let check: Rational = (0..geo.size).filter(|&c| witness.contains_cell(&geo, c)).map(|c| &q.entries()[c]).sum();
    if check.abs() != value {
        return Err(Error::Internal(format!("mu* witness gives {check}, search gave {value}")));
    }
    Ok(MuStarResult { value, witness, evaluations: evaluated.max(1) })
}

impl Geometry {
    fn cylinder_masks_single(&self, dim: usize, subset: usize) -> CellMask {
        (0..self.proj_sizes[dim]).filter(|&p| (subset >> p) & 1 == 1).fold(0, |m, p| m | self.fibers[dim][p])
    }
}

/// `|⟨Q, χ(Z)⟩|` for an explicit cylinder intersection.
pub fn correlation(q: &RationalTensor, z: &CylinderIntersection) -> Result<Rational> {
    if q.shape() != z.shape() {
        return Err(Error::Dimension(format!("shape mismatch: {} vs {}", q.shape(), z.shape())));
    }
    let geo = Geometry::new(q.shape())?;
    let mask = geo.mask_of(z);
    Ok((0..geo.size).filter(|&c| (mask >> c) & 1 == 1).map(|c| &q.entries()[c]).sum::<Rational>().abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn shape(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    #[test]
    fn characteristic_tensors() {
        let s = shape(&[2, 2]);
        assert_eq!(CylinderIntersection::full(s.clone()).characteristic_tensor(), RationalTensor::ones(s.clone()));
        let cell = CylinderIntersection::cell(s.clone(), &[1, 0]).unwrap().characteristic_tensor();
        assert_eq!(cell, RationalTensor::from_ints(s.clone(), &[0, 0, 1, 0]).unwrap());
        // Z_1 ignores coordinate 0 and keeps column 0; Z_2 ignores coordinate 1 and keeps both rows.
        let z = CylinderIntersection::new(s.clone(), vec![vec![true, false], vec![true, true]]).unwrap();
        assert_eq!(z.characteristic_tensor(), RationalTensor::from_ints(s.clone(), &[1, 0, 1, 0]).unwrap());
        let empty = CylinderIntersection::new(s.clone(), vec![vec![false, false], vec![true, true]]).unwrap();
        assert!(empty.characteristic_tensor().is_zero());
        assert!(CylinderIntersection::new(s, vec![vec![true]]).is_err());
    }

    #[test]
    fn basis_of_a_two_by_two() {
        let basis = enumerate_basis(&shape(&[2, 2]), &Limits::default()).unwrap();
        assert_eq!(basis.len(), 9);
        let all: Vec<_> = basis.elements().collect();
        for w in all.windows(2) {
            assert!(w[0].entries() < w[1].entries());
        }
        assert!(all.iter().all(is_cylinder_intersection));
    }

    #[test]
    fn basis_of_a_vector_is_just_j() {
        let basis = enumerate_basis(&shape(&[2]), &Limits::default()).unwrap();
        assert_eq!(basis.len(), 1);
        assert_eq!(basis.element(0), RationalTensor::ones(shape(&[2])));
    }

    #[test]
    fn basis_cap() {
        let limits = Limits { max_search: 10, ..Limits::default() };
        assert!(matches!(enumerate_basis(&shape(&[2, 2]), &limits), Err(Error::Capacity { .. })));
    }

    #[test]
    fn cylinder_intersection_recognition() {
        let s = shape(&[2, 2]);
        assert!(!is_cylinder_intersection(&RationalTensor::from_ints(s.clone(), &[1, 0, 0, 1]).unwrap()));
        assert!(is_cylinder_intersection(&RationalTensor::from_ints(s.clone(), &[1, 1, 0, 0]).unwrap()));
        assert!(!is_cylinder_intersection(&RationalTensor::from_ints(s, &[2, 0, 0, 0]).unwrap()));
    }

    #[test]
    fn mu_star_examples() {
        let s = shape(&[2, 2]);
        let j = RationalTensor::ones(s.clone());
        assert_eq!(mu_star(&j, &Limits::default()).unwrap().value, int(4));
        let h = RationalTensor::from_ints(s.clone(), &[1, 1, 1, -1]).unwrap();
        let r = mu_star(&h, &Limits::default()).unwrap();
        assert_eq!(r.value, int(2));
        assert_eq!(correlation(&h, &r.witness).unwrap(), int(2));
        let id = h.contraction_product(0).unwrap();
        assert_eq!(mu_star(&id, &Limits::default()).unwrap().value, int(2));
        let v = RationalTensor::new(shape(&[3]), vec![rat(1, 2), rat(-1, 3), int(2)]).unwrap();
        assert_eq!(mu_star(&v, &Limits::default()).unwrap().value, rat(13, 6));
        assert_eq!(mu_star(&RationalTensor::zeros(s), &Limits::default()).unwrap().value, int(0));
    }

    #[test]
    fn mu_star_cap_and_cell_limit() {
        let h = RationalTensor::ones(shape(&[4, 4, 4]));
        let limits = Limits { max_search: 1000, ..Limits::default() };
        assert!(matches!(mu_star(&h, &limits), Err(Error::Capacity { .. })));
        assert!(matches!(mu_star(&RationalTensor::ones(shape(&[16, 16])), &Limits::default()), Err(Error::Capacity { .. })));
    }

    #[test]
    fn json_round_trip() {
        let z = CylinderIntersection::cell(shape(&[2, 3, 2]), &[1, 2, 0]).unwrap();
        let back = CylinderIntersection::from_json(&z.to_json()).unwrap();
        assert_eq!(back, z);
    }
}
