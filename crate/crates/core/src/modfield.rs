//! Word-sized prime fields: primality, random prime sampling without
//! replacement from a window `(l, upper)`, and Gaussian elimination modulo `p`
//! for determinants, ranks and inverses.
//!
//! Elimination keeps entries unreduced between pivot steps (delayed
//! reduction) and only reduces when the next update could overflow a `u64`.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bigmat::IntMatrix;
use crate::error::{Error, Result};

/// Default window exponent: primes are drawn from `(2^19, 2^20)`.
pub const DEFAULT_PRIME_BITS: u32 = 19;
/// Largest supported window exponent.
pub const MAX_PRIME_BITS: u32 = 28;

#[inline]
pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo prime `p`; `a` must be nonzero mod `p`.
pub fn inv_mod(a: u64, p: u64) -> u64 {
    let (mut r0, mut r1) = (p as i128, (a % p) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1, "{a} not invertible mod {p}");
    t0.rem_euclid(p as i128) as u64
}

/// Deterministic Miller–Rabin, exact for every `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n % w == 0 {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Visits the primes `p` with `lower < p < upper` in increasing order, using a
/// segmented sieve.
fn for_each_prime_in_window(lower: u64, upper: u64, mut visit: impl FnMut(u64)) {
    if upper <= lower + 1 {
        return;
    }
    let limit = (upper as f64).sqrt() as u64 + 1;
    let mut is_small_prime = vec![true; limit as usize + 1];
    let mut base = Vec::new();
    for i in 2..=limit {
        if is_small_prime[i as usize] {
            base.push(i);
            let mut j = i * i;
            while j <= limit {
                is_small_prime[j as usize] = false;
                j += i;
            }
        }
    }
    const SEGMENT: u64 = 1 << 16;
    let mut lo = (lower + 1).max(2);
    let mut composite = vec![false; SEGMENT as usize];
    while lo < upper {
        let hi = (lo + SEGMENT).min(upper);
        composite.iter_mut().for_each(|c| *c = false);
        for &q in &base {
            if q * q >= hi {
                break;
            }
            let mut m = (lo.div_ceil(q) * q).max(q * q);
            while m < hi {
                composite[(m - lo) as usize] = true;
                m += q;
            }
        }
        for v in lo..hi {
            if !composite[(v - lo) as usize] {
                visit(v);
            }
        }
        lo = hi;
    }
}

fn primes_in_window(lower: u64, upper: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for_each_prime_in_window(lower, upper, |p| out.push(p));
    out
}

fn count_primes_in_window(lower: u64, upper: u64) -> usize {
    let mut count = 0;
    for_each_prime_in_window(lower, upper, |_| count += 1);
    count
}

/// Draws distinct primes uniformly at random from the open window
/// `(lower, upper)`. Every issued prime is remembered and never issued again.
#[derive(Clone, Debug)]
pub struct PrimeSampler {
    lower: u64,
    upper: u64,
    population: usize,
    used: HashSet<u64>,
    issued: usize,
    rng: ChaCha8Rng,
}

impl PrimeSampler {
    pub fn new(lower: u64, upper: u64, seed: u64) -> Result<Self> {
        if upper <= lower + 2 || upper > (1u64 << (MAX_PRIME_BITS + 1)) {
            return Err(Error::InvalidArgument(format!(
                "prime window ({lower}, {upper}) unsupported"
            )));
        }
        let population = count_primes_in_window(lower, upper);
        if population == 0 {
            return Err(Error::WindowTooSmall(format!(
                "no primes in ({lower}, {upper})"
            )));
        }
        Ok(Self {
            lower,
            upper,
            population,
            used: HashSet::new(),
            issued: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Window `(2^bits, 2^(bits+1))`.
    pub fn with_bits(bits: u32, seed: u64) -> Result<Self> {
        if !(3..=MAX_PRIME_BITS).contains(&bits) {
            return Err(Error::InvalidArgument(format!(
                "prime bits must be in 3..={MAX_PRIME_BITS}, got {bits}"
            )));
        }
        Self::new(1u64 << bits, 1u64 << (bits + 1), seed)
    }

    pub fn default_window(seed: u64) -> Self {
        Self::with_bits(DEFAULT_PRIME_BITS, seed).expect("default window is valid")
    }

    /// The lower bound `l`; every issued prime exceeds it.
    pub fn lower(&self) -> u64 {
        self.lower
    }

    pub fn upper(&self) -> u64 {
        self.upper
    }

    /// `|P|`, the number of primes in the window.
    pub fn population(&self) -> usize {
        self.population
    }

    pub fn issued(&self) -> usize {
        self.issued
    }

    pub fn remaining(&self) -> usize {
        self.population - self.issued
    }

    fn exhausted(&self) -> Error {
        Error::PrimesExhausted {
            lower: self.lower,
            upper: self.upper,
            issued: self.issued,
        }
    }

    /// Issues a fresh prime, uniformly among the unused primes of the window.
    pub fn sample(&mut self) -> Result<u64> {
        if self.issued >= self.population {
            return Err(self.exhausted());
        }
        let p = if self.issued * 2 < self.population {
            loop {
                let c = self.rng.gen_range(self.lower + 1..self.upper);
                if !self.used.contains(&c) && is_prime_u64(c) {
                    break c;
                }
            }
        } else {
            // dense phase: pick directly among what is left
            let left: Vec<u64> = primes_in_window(self.lower, self.upper)
                .into_iter()
                .filter(|p| !self.used.contains(p))
                .collect();
            left[self.rng.gen_range(0..left.len())]
        };
        self.used.insert(p);
        self.issued += 1;
        Ok(p)
    }

    /// Issues a fresh prime not dividing `k`. Primes that divide `k` are
    /// consumed and skipped.
    pub fn sample_coprime_to(&mut self, k: &BigInt) -> Result<u64> {
        loop {
            let p = self.sample()?;
            if !k.is_multiple_of(&BigInt::from(p)) {
                return Ok(p);
            }
        }
    }
}

/// `x mod p` in `[0, p)` for a big integer.
pub fn reduce_big(x: &BigInt, p: u64) -> u64 {
    x.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits")
}

/// Entries of a matrix cached in the cheapest form for repeated reduction
/// modulo many primes.
#[derive(Clone, Debug)]
pub(crate) enum WordImage {
    Small(Vec<i64>),
    Big(Vec<BigInt>),
}

impl WordImage {
    pub(crate) fn of(a: &IntMatrix) -> Self {
        match a.to_i64_entries() {
            Some(v) => WordImage::Small(v),
            None => WordImage::Big(a.entries().to_vec()),
        }
    }

    pub(crate) fn reduce(&self, p: u64) -> Vec<u64> {
        match self {
            WordImage::Small(v) => v
                .iter()
                .map(|&x| x.rem_euclid(p as i64) as u64)
                .collect(),
            WordImage::Big(v) => v.iter().map(|x| reduce_big(x, p)).collect(),
        }
    }
}

/// Number of `(p-1)²` additions that fit on top of a reduced entry.
fn max_delay(p: u64) -> u64 {
    let sq = (p - 1) * (p - 1);
    if sq == 0 {
        u64::MAX
    } else {
        (u64::MAX - p) / sq
    }
}

/// In-place forward elimination modulo `p` on a `rows x cols` row-major block
/// with entries `< p`. Returns the rank and, for square input, the determinant.
pub(crate) fn eliminate(m: &mut [u64], rows: usize, cols: usize, p: u64) -> (usize, u64) {
    let delay = max_delay(p);
    let mut pending = 0u64;
    let mut rank = 0;
    let mut det = 1u64;
    let mut negate = false;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        if pending >= delay {
            for v in m[rank * cols..].iter_mut() {
                *v %= p;
            }
            pending = 0;
        }
        let mut pivot_row = None;
        for i in rank..rows {
            let v = m[i * cols + c] % p;
            m[i * cols + c] = v;
            if v != 0 && pivot_row.is_none() {
                pivot_row = Some(i);
            }
        }
        let Some(pr) = pivot_row else {
            det = 0;
            continue;
        };
        if pr != rank {
            for j in 0..cols {
                m.swap(pr * cols + j, rank * cols + j);
            }
            negate = !negate;
        }
        let (head, tail) = m.split_at_mut((rank + 1) * cols);
        let prow = &mut head[rank * cols..];
        for v in prow[c..].iter_mut() {
            *v %= p;
        }
        let piv = prow[c];
        det = mul_mod(det, piv, p);
        let inv = inv_mod(piv, p);
        for row in tail.chunks_exact_mut(cols) {
            let lead = row[c];
            if lead == 0 {
                continue;
            }
            let f = p - mul_mod(lead, inv, p);
            row[c] = 0;
            for (dst, &src) in row[c + 1..].iter_mut().zip(&prow[c + 1..]) {
                *dst += f * src;
            }
        }
        pending += 1;
        rank += 1;
    }
    if rows != cols || rank < rows {
        det = 0;
    } else if negate && det != 0 {
        det = p - det;
    }
    (rank, det)
}

/// `det(A) mod p` by LU-style elimination, in `[0, p)`.
pub fn lu_det_mod_p(a: &IntMatrix, p: u64) -> u64 {
    assert!(a.is_square(), "lu_det_mod_p needs a square matrix");
    let n = a.rows();
    let mut m = WordImage::of(a).reduce(p);
    eliminate(&mut m, n, n, p).1
}

pub(crate) fn det_mod_p_image(image: &WordImage, n: usize, p: u64) -> u64 {
    let mut m = image.reduce(p);
    eliminate(&mut m, n, n, p).1
}

/// Rank of `A` over `Z_p`.
pub fn rank_mod_p(a: &IntMatrix, p: u64) -> usize {
    let mut m = WordImage::of(a).reduce(p);
    eliminate(&mut m, a.rows(), a.cols(), p).0
}

/// Rank over `Z_p` of a block of small machine integers.
pub fn rank_mod_p_words(entries: &[i64], rows: usize, cols: usize, p: u64) -> usize {
    let mut m: Vec<u64> = entries
        .iter()
        .map(|&x| x.rem_euclid(p as i64) as u64)
        .collect();
    eliminate(&mut m, rows, cols, p).0
}

/// Inverse of a square matrix modulo `p` (Gauss–Jordan), or `None` when it is
/// singular mod `p`.
pub(crate) fn inverse_mod_p(image: &WordImage, n: usize, p: u64) -> Option<Vec<u64>> {
    let a = image.reduce(p);
    let w = 2 * n;
    let mut m = vec![0u64; n * w];
    for i in 0..n {
        m[i * w..i * w + n].copy_from_slice(&a[i * n..(i + 1) * n]);
        m[i * w + n + i] = 1;
    }
    for c in 0..n {
        let pr = (c..n).find(|&i| m[i * w + c] % p != 0)?;
        if pr != c {
            for j in 0..w {
                m.swap(pr * w + j, c * w + j);
            }
        }
        let inv = inv_mod(m[c * w + c] % p, p);
        for j in c..w {
            m[c * w + j] = mul_mod(m[c * w + j] % p, inv, p);
        }
        let pivot: Vec<u64> = m[c * w..(c + 1) * w].to_vec();
        for i in 0..n {
            if i == c {
                continue;
            }
            let lead = m[i * w + c] % p;
            if lead == 0 {
                continue;
            }
            let f = p - lead;
            let row = &mut m[i * w..(i + 1) * w];
            for j in c..w {
                row[j] = (row[j] + f * pivot[j]) % p;
            }
        }
    }
    let mut out = vec![0u64; n * n];
    for i in 0..n {
        out[i * n..(i + 1) * n].copy_from_slice(&m[i * w + n..(i + 1) * w]);
    }
    Some(out)
}

/// `M·v mod p` for an `n x n` block of residues.
pub(crate) fn mat_vec_mod(m: &[u64], v: &[u64], p: u64) -> Vec<u64> {
    let n = v.len();
    let delay = max_delay(p).max(1);
    m.chunks_exact(n)
        .map(|row| {
            let mut acc = 0u64;
            let mut pending = 0u64;
            for (&a, &b) in row.iter().zip(v) {
                if pending == delay {
                    acc %= p;
                    pending = 0;
                }
                acc += a * b;
                pending += 1;
            }
            acc % p
        })
        .collect()
}
