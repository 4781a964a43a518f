//! Dixon p-adic lifting for `Ax = b` over the rationals.
//!
//! One word prime `p` is used; `A⁻¹ mod p` is formed once and each lifting
//! step costs two matrix-vector products. The lifted `p`-adic expansion is
//! turned back into fractions by rational reconstruction against Cramer
//! bounds, and the result is checked by exact multiplication.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::bigmat::{ceil_sqrt, hadamard_bound, IntMatrix};
use crate::error::{Error, Result};
use crate::modfield::{inverse_mod_p, mat_vec_mod, PrimeSampler, WordImage};

/// Fresh primes tried before a matrix is declared singular.
pub const SINGULARITY_RETRIES: usize = 3;

/// Solution vector `x = numerators / denominator` with the denominator
/// `d(x)`, the lcm of the reduced entry denominators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RationalVector {
    pub numerators: Vec<BigInt>,
    pub denominator: BigInt,
}

impl RationalVector {
    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    /// Checks `A · numerators = denominator · b`.
    pub fn solves(&self, a: &IntMatrix, b: &[BigInt]) -> bool {
        match a.mul_vec(&self.numerators) {
            Ok(lhs) => lhs
                .iter()
                .zip(b)
                .all(|(l, r)| *l == r * &self.denominator),
            Err(_) => false,
        }
    }
}

/// Recovers `n/d` from `u ≡ n·d⁻¹ (mod m)` with `|n| ≤ num_bound`,
/// `0 < d ≤ den_bound`, by the half-extended Euclidean algorithm.
pub fn rational_reconstruct(
    u: &BigInt,
    m: &BigInt,
    num_bound: &BigInt,
    den_bound: &BigInt,
) -> Result<(BigInt, BigInt)> {
    let (mut r0, mut r1) = (m.clone(), u.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while &r1 > num_bound {
        let (q, r) = r0.div_rem(&r1);
        r0 = std::mem::replace(&mut r1, r);
        let t = &t0 - &q * &t1;
        t0 = std::mem::replace(&mut t1, t);
    }
    if t1.is_zero() || &t1.abs() > den_bound || !r1.gcd(&t1).is_one() {
        return Err(Error::ReconstructionFailed);
    }
    if t1.is_negative() {
        Ok((-r1, -t1))
    } else {
        Ok((r1, t1))
    }
}

/// Cramer bounds for the solution of `Ax = b`: `(N, D)` with every entry of
/// `x` expressible as `n/d`, `|n| ≤ N`, `0 < d ≤ D`.
pub fn cramer_bounds(a: &IntMatrix, b: &[BigInt]) -> Result<(BigInt, BigInt)> {
    let n = a.rows();
    let den = hadamard_bound(a)?;
    let norm_a = a.norm();
    let norm_b = b.iter().map(|v| v.abs()).max().unwrap_or_default();
    // N = ⌈(√n‖A‖)^(n−1) · √n · ‖b‖⌉ = ⌈√(nⁿ ‖A‖^(2n−2) ‖b‖²)⌉
    let sq = num_traits::pow(BigInt::from(n), n)
        * num_traits::pow(norm_a, 2 * (n.max(1) - 1))
        * &norm_b
        * &norm_b;
    Ok((ceil_sqrt(&sq), den))
}

/// Exact rational solution of `Ax = b`.
pub fn dixon_solve(a: &IntMatrix, b: &[BigInt], sampler: &mut PrimeSampler) -> Result<RationalVector> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if b.len() != n {
        return Err(Error::Dimension(format!("rhs of length {} for n = {n}", b.len())));
    }
    if n == 0 || b.iter().all(|v| v.is_zero()) {
        return Ok(RationalVector {
            numerators: vec![BigInt::zero(); n],
            denominator: BigInt::one(),
        });
    }
    let image = WordImage::of(a);
    let mut attempt = 0;
    let (p, inverse) = loop {
        if attempt == SINGULARITY_RETRIES {
            return Err(Error::Singular);
        }
        attempt += 1;
        let p = sampler.sample()?;
        if let Some(inv) = inverse_mod_p(&image, n, p) {
            break (p, inv);
        }
    };

    let (num_bound, den_bound) = cramer_bounds(a, b)?;
    let target = &num_bound * &den_bound * 2u32;
    let pb = BigInt::from(p);
    let mut steps = 0usize;
    let mut modulus = BigInt::one();
    while modulus <= target {
        modulus *= &pb;
        steps += 1;
    }

    let digits = match (&image, small_rhs(b)) {
        (WordImage::Small(words), Some(rhs)) if fits_fast_path(words, n, p) => {
            lift_small(words, &inverse, rhs, p, steps)
        }
        _ => lift_big(a, &inverse, b, p, steps),
    };

    // x_j = Σ_i digit[i][j] p^i, assembled by Horner from the top digit.
    let lifted: Vec<BigInt> = (0..n)
        .map(|j| {
            let mut acc = BigInt::zero();
            for step in (0..steps).rev() {
                acc = acc * p + digits[step * n + j];
            }
            acc
        })
        .collect();

    let solution = reconstruct_vector(&lifted, &modulus, &num_bound, &den_bound)?;
    if !solution.solves(a, b) {
        return Err(Error::ReconstructionFailed);
    }
    Ok(solution)
}

/// Reconstructs every entry, sharing the running denominator: an entry is
/// first tried as `(u·d mod m)/d`, and only fully reconstructed on failure.
fn reconstruct_vector(
    lifted: &[BigInt],
    modulus: &BigInt,
    num_bound: &BigInt,
    den_bound: &BigInt,
) -> Result<RationalVector> {
    let mut den = BigInt::one();
    let mut nums: Vec<BigInt> = Vec::with_capacity(lifted.len());
    let half = modulus / 2u32;
    for u in lifted {
        let mut v = (u * &den).mod_floor(modulus);
        if v > half {
            v -= modulus;
        }
        if &v.abs() <= num_bound {
            nums.push(v);
            continue;
        }
        let (a, e) = rational_reconstruct(u, modulus, num_bound, den_bound)?;
        let next = den.lcm(&e);
        let scale = &next / &den;
        for x in nums.iter_mut() {
            *x *= &scale;
        }
        nums.push(a * (&next / &e));
        den = next;
        if &den > den_bound {
            return Err(Error::ReconstructionFailed);
        }
    }
    Ok(RationalVector {
        numerators: nums,
        denominator: den,
    })
}

fn small_rhs(b: &[BigInt]) -> Option<Vec<i128>> {
    b.iter()
        .map(|v| v.to_i128().filter(|x| x.unsigned_abs() < 1u128 << 100))
        .collect()
}

// |A_ij·x_j| < 2^40·2^29 and n < 2^20 keep every product sum inside i128.
fn fits_fast_path(words: &[i64], n: usize, p: u64) -> bool {
    n < 1 << 20 && p < 1 << 29 && words.iter().all(|w| w.unsigned_abs() < 1u64 << 40)
}

fn lift_small(a: &[i64], inverse: &[u64], rhs: Vec<i128>, p: u64, steps: usize) -> Vec<u64> {
    let n = rhs.len();
    let pi = p as i128;
    let mut residual = rhs;
    let mut digits = Vec::with_capacity(steps * n);
    for _ in 0..steps {
        let r_mod: Vec<u64> = residual.iter().map(|r| r.rem_euclid(pi) as u64).collect();
        let x = mat_vec_mod(inverse, &r_mod, p);
        for (i, row) in a.chunks_exact(n).enumerate() {
            let ax: i128 = row
                .iter()
                .zip(&x)
                .map(|(&c, &xj)| c as i128 * xj as i128)
                .sum();
            let diff = residual[i] - ax;
            debug_assert_eq!(diff.rem_euclid(pi), 0);
            residual[i] = diff / pi;
        }
        digits.extend_from_slice(&x);
    }
    digits
}

fn lift_big(a: &IntMatrix, inverse: &[u64], b: &[BigInt], p: u64, steps: usize) -> Vec<u64> {
    let n = b.len();
    let pb = BigInt::from(p);
    let mut residual = b.to_vec();
    let mut digits = Vec::with_capacity(steps * n);
    for _ in 0..steps {
        let r_mod: Vec<u64> = residual
            .iter()
            .map(|r| r.mod_floor(&pb).to_u64().unwrap())
            .collect();
        let x = mat_vec_mod(inverse, &r_mod, p);
        for (i, r) in residual.iter_mut().enumerate() {
            let ax: BigInt = a
                .row(i)
                .iter()
                .zip(&x)
                .filter(|(_, &xj)| xj != 0)
                .map(|(c, &xj)| c * xj)
                .sum();
            let diff = &*r - ax;
            debug_assert!(diff.is_multiple_of(&pb));
            *r = diff / &pb;
        }
        digits.extend_from_slice(&x);
    }
    digits
}
