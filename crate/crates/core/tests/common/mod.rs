#![allow(dead_code)]

use cylnorm::rational::{int, Rational};
use cylnorm::tensors::{RationalTensor, Shape, SignTensor};
use num_traits::{Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sign(rng: &mut ChaCha8Rng, dims: &[usize]) -> SignTensor {
    let shape = Shape::new(dims.to_vec()).unwrap();
    let entries = (0..shape.size()).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
    SignTensor::new(shape, entries).unwrap()
}

/// Entries p/q with |p| <= 6, q in 1..=4.
pub fn random_rational(rng: &mut ChaCha8Rng, dims: &[usize]) -> RationalTensor {
    let shape = Shape::new(dims.to_vec()).unwrap();
    let entries = (0..shape.size())
        .map(|_| Rational::new(rng.gen_range(-6i64..=6).into(), rng.gen_range(1i64..=4).into()))
        .collect();
    RationalTensor::new(shape, entries).unwrap()
}

/// max_Z |<Q, chi(Z)>| by trying every choice of every cylinder.
pub fn brute_mu_star(q: &RationalTensor) -> Rational {
    let dims = q.shape().dims().to_vec();
    let k = dims.len();
    let size: usize = dims.iter().product();
    let proj: Vec<usize> = dims.iter().map(|&n| size / n).collect();
    let total_bits: usize = proj.iter().sum();
    assert!(total_bits <= 24, "oracle too slow for this shape");
    // Projection index of a point after dropping dimension j.
    let points: Vec<Vec<usize>> = q.shape().multi_indices().collect();
    let keys: Vec<Vec<usize>> = points
        .iter()
        .map(|p| {
            (0..k)
                .map(|j| {
                    let mut key = 0;
                    for (i, &x) in p.iter().enumerate() {
                        if i != j {
                            key = key * dims[i] + x;
                        }
                    }
                    key
                })
                .collect()
        })
        .collect();
    let mut best = Rational::zero();
    for choice in 0u64..(1u64 << total_bits) {
        let mut masks = Vec::with_capacity(k);
        let mut shift = 0;
        for &p in &proj {
            masks.push((choice >> shift) & ((1u64 << p) - 1));
            shift += p;
        }
        let mut s = Rational::zero();
        for (c, key) in keys.iter().enumerate() {
            if key.iter().enumerate().all(|(j, &kk)| (masks[j] >> kk) & 1 == 1) {
                s += &q.entries()[c];
            }
        }
        let s = s.abs();
        if s > best {
            best = s;
        }
    }
    best
}

pub fn two_pow(e: i64) -> Rational {
    if e >= 0 {
        int(1i64 << e)
    } else {
        Rational::new(1.into(), (1i64 << -e).into())
    }
}
