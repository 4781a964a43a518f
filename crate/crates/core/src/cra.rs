//! Chinese remaindering of `det(A)/K` in the symmetric range, with the
//! early-termination rules for a stabilised reconstruction.
//!
//! Raw residues `det(A) mod p` are kept, so a new divisor `K` is applied by
//! replaying them instead of recomputing any modular determinant.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::bigmat::IntMatrix;
use crate::error::{Error, Result};
use crate::modfield::{self, inv_mod, mul_mod, reduce_big, PrimeSampler, WordImage};
use crate::par;

/// Accumulated residues of `det(A)` and the reconstruction of `det(A)/K`.
#[derive(Clone, Debug)]
pub struct CraState {
    primes: Vec<u64>,
    raw: Vec<u64>,
    modulus: BigInt,
    current: BigInt,
    divisor: BigInt,
    stability: usize,
    run_start_modulus: BigInt,
    bound: BigInt,
    bound_eff: BigInt,
    evicted: Vec<u64>,
}

fn symmetric(x: BigInt, m: &BigInt) -> BigInt {
    let r = x.mod_floor(m);
    // representatives in [−⌊m/2⌋, ⌈m/2⌉)
    if &r + &r >= *m {
        r - m
    } else {
        r
    }
}

impl CraState {
    /// Empty state for a determinant bounded in absolute value by `bound`.
    pub fn new(bound: BigInt) -> Self {
        Self {
            primes: Vec::new(),
            raw: Vec::new(),
            modulus: BigInt::one(),
            current: BigInt::zero(),
            divisor: BigInt::one(),
            stability: 0,
            run_start_modulus: BigInt::one(),
            bound_eff: bound.clone(),
            bound,
            evicted: Vec::new(),
        }
    }

    pub fn modulus(&self) -> &BigInt {
        &self.modulus
    }

    /// Current symmetric-range reconstruction of `det(A)/K`.
    pub fn current(&self) -> &BigInt {
        &self.current
    }

    pub fn divisor(&self) -> &BigInt {
        &self.divisor
    }

    /// Number of consecutive updates that left the reconstruction unchanged.
    pub fn stability(&self) -> usize {
        self.stability
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn bound(&self) -> &BigInt {
        &self.bound
    }

    /// `⌈H/K⌉`, the bound on `|det(A)/K|` in effect.
    pub fn effective_bound(&self) -> &BigInt {
        &self.bound_eff
    }

    /// Primes dropped by [`set_divisor`](Self::set_divisor) because they
    /// divide `K`; their residues carry no information about `det(A)/K`.
    pub fn evicted(&self) -> &[u64] {
        &self.evicted
    }

    /// `det(A) = current · K`.
    pub fn value(&self) -> BigInt {
        &self.current * &self.divisor
    }

    /// Certified by size alone: `∏pᵢ ≥ 2⌈H/K⌉`.
    pub fn is_certified(&self) -> bool {
        self.modulus >= &self.bound_eff * 2u32
    }

    /// Adds `d = det(A) mod p`.
    pub fn update(&mut self, p: u64, d: u64) -> Result<()> {
        if self.primes.contains(&p) {
            return Err(Error::InvalidArgument(format!("prime {p} already used")));
        }
        if self.divisor.is_multiple_of(&BigInt::from(p)) {
            return Err(Error::InvalidArgument(format!("prime {p} divides K")));
        }
        self.primes.push(p);
        self.raw.push(d % p);
        self.absorb(p, d % p);
        Ok(())
    }

    fn absorb(&mut self, p: u64, d: u64) {
        let k_mod = reduce_big(&self.divisor, p);
        let scaled = mul_mod(d, inv_mod(k_mod, p), p);
        let first = self.modulus.is_one();
        let m_mod = reduce_big(&self.modulus, p);
        let r_mod = reduce_big(&self.current, p);
        let delta = (scaled + p - r_mod) % p;
        let t = mul_mod(delta, inv_mod(m_mod, p), p);
        let next_modulus = &self.modulus * p;
        let next = symmetric(&self.current + &self.modulus * t, &next_modulus);
        let unchanged = !first && next == self.current;
        self.modulus = next_modulus;
        self.current = next;
        if unchanged {
            self.stability += 1;
        } else {
            self.stability = 0;
            self.run_start_modulus = self.modulus.clone();
        }
        debug_assert!(self.in_symmetric_range());
    }

    fn in_symmetric_range(&self) -> bool {
        let half_floor = &self.modulus / 2u32;
        let half_ceil = &self.modulus - &half_floor;
        -&half_floor <= self.current && self.current < half_ceil
    }

    /// Switches to reconstructing `det(A)/K`. Stored residues are replayed
    /// in their original order, so the stability counter reflects the same
    /// prime sequence; pairs whose prime divides `K` are evicted.
    pub fn set_divisor(&mut self, k: BigInt) -> Result<()> {
        if !k.is_positive() {
            return Err(Error::InvalidArgument("K must be positive".into()));
        }
        let primes = std::mem::take(&mut self.primes);
        let raw = std::mem::take(&mut self.raw);
        self.divisor = k;
        self.bound_eff = Integer::div_ceil(&self.bound, &self.divisor).max(BigInt::one());
        self.modulus = BigInt::one();
        self.current = BigInt::zero();
        self.stability = 0;
        self.run_start_modulus = BigInt::one();
        for (p, d) in primes.into_iter().zip(raw) {
            if self.divisor.is_multiple_of(&BigInt::from(p)) {
                self.evicted.push(p);
                continue;
            }
            self.primes.push(p);
            self.raw.push(d);
            self.absorb(p, d);
        }
        Ok(())
    }

    /// `R' = ⌈log_l((H_eff + |r|)/M₀)⌉` where `M₀` is the modulus at the start
    /// of the current run of equal reconstructions; never negative.
    pub fn residual_prime_count(&self, l: u64) -> u64 {
        let target = &self.bound_eff + self.current.abs();
        let l = BigInt::from(l);
        let mut acc = self.run_start_modulus.clone();
        let mut count = 0;
        while acc < target {
            acc *= &l;
            count += 1;
        }
        count
    }

    /// Early-termination test: true when the modulus already certifies the
    /// value, or when
    /// `R'(R'−1)…(R'−k+1) / (P(P−1)…(P−k+1)) < ε`
    /// with `k` the stability count and `P = remaining` the number of unused
    /// primes when the run started. Evaluated exactly.
    pub fn et_probability_holds(&self, epsilon: f64, remaining: usize, l: u64) -> bool {
        if self.is_empty() {
            return false;
        }
        if self.is_certified() {
            return true;
        }
        let k = self.stability;
        if k == 0 {
            return false;
        }
        let r = self.residual_prime_count(l);
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for i in 0..k as u64 {
            if r <= i {
                return true;
            }
            if (remaining as u64) <= i {
                return false;
            }
            num *= r - i;
            den *= remaining as u64 - i;
        }
        let Some(eps) = BigRational::from_f64(epsilon) else {
            return false;
        };
        BigRational::new(num, den) < eps
    }
}

/// Stability count from the static rule
/// `k ≥ ⌈log(1/ε) / (log P′ − log(log_l H))⌉` with `P′ = |P| − ⌈log_l H⌉`.
pub fn et_static_count(bound: &BigInt, l: u64, population: usize, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} not in (0,1)")));
    }
    let log_l_h = log2_big(bound) / (l as f64).log2();
    let p_prime = population as f64 - log_l_h.ceil();
    if p_prime <= log_l_h || p_prime <= 1.0 {
        return Err(Error::WindowTooSmall(format!(
            "{population} primes above {l} cannot support log_l(H) = {log_l_h:.2}"
        )));
    }
    let k = (1.0 / epsilon).ln() / (p_prime.ln() - log_l_h.max(1.0).ln());
    Ok((k.ceil() as usize).max(1))
}

/// `log₂ x` for a positive big integer, accurate to double precision.
pub fn log2_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return x.to_f64().unwrap().abs().log2();
    }
    let shift = bits - 64;
    let top = (x.abs() >> shift).to_f64().unwrap();
    top.log2() + shift as f64
}

/// Runs the loop without early termination until `∏pᵢ ≥ 2⌈H/K⌉`, returning
/// the exact `det(A)/K`. Modular determinants are computed in batches on the
/// worker pool; updates are applied in sampling order.
pub fn cra_det_certified(a: &IntMatrix, k: &BigInt, sampler: &mut PrimeSampler) -> Result<BigInt> {
    let bound = crate::bigmat::hadamard_bound(a)?;
    let mut st = CraState::new(bound);
    if !k.is_one() {
        st.set_divisor(k.clone())?;
    }
    complete_certified(&mut st, &WordImage::of(a), a.rows(), sampler)?;
    Ok(st.current().clone())
}

/// Drives `st` to certification, reusing whatever residues it already holds.
pub(crate) fn complete_certified(
    st: &mut CraState,
    image: &WordImage,
    n: usize,
    sampler: &mut PrimeSampler,
) -> Result<()> {
    while !st.is_certified() {
        // primes exceed l, so this many more always suffices
        let missing = (&st.bound_eff * 2u32).div_ceil(&st.modulus);
        let log_u = (sampler.upper() as f64).log2();
        let batch = ((log2_big(&missing) / log_u).ceil() as usize).max(1);
        let mut primes = Vec::with_capacity(batch);
        for _ in 0..batch {
            primes.push(sampler.sample_coprime_to(&st.divisor)?);
        }
        let dets = par::map_slice(&primes, |&p| modfield::det_mod_p_image(image, n, p));
        for (p, d) in primes.into_iter().zip(dets) {
            st.update(p, d)?;
            if st.is_certified() {
                break;
            }
        }
    }
    Ok(())
}
