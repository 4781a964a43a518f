//! Largest invariant factor: `s̃ₙ` as the lcm of the solution denominators of
//! `r` random systems `Ax = b`, `b` drawn from `β` contiguous integers.

use num_bigint::{BigInt, RandBigInt};
use num_integer::Integer;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bigmat::{ceil_log2, IntMatrix};
use crate::cra::log2_big;
use crate::error::{Error, Result};
use crate::modfield::PrimeSampler;
use crate::padic::dixon_solve;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LifConfig {
    /// Number of solves.
    pub r: usize,
    /// Size of the contiguous set the right-hand sides are drawn from.
    pub beta: BigInt,
}

impl LifConfig {
    pub fn new(r: usize, beta: BigInt) -> Result<Self> {
        if r == 0 || beta < BigInt::from(2) {
            return Err(Error::InvalidArgument(format!(
                "LIF needs r ≥ 1 and β ≥ 2 (got r = {r}, β = {beta})"
            )));
        }
        Ok(Self { r, beta })
    }
}

/// Parameter regimes for the number of solves and the right-hand-side range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LifRegime {
    /// `r = 2`, `β = ⌈log H⌉`: expected bit gap `O(1)`.
    ExpectedConstantGap,
    /// `r = 2`, `β = 6 + ⌈2 log H⌉`: exact with probability at least 1/3.
    OneThird,
    /// `r = ⌈log log H + log 1/ε⌉`, even `β`: exact with probability `1 − ε`.
    Epsilon(f64),
}

pub fn lif_config_for(bound: &BigInt, regime: LifRegime) -> Result<LifConfig> {
    if *bound < BigInt::from(2) {
        return Err(Error::InvalidArgument("H must be at least 2".into()));
    }
    let log_h = BigInt::from(ceil_log2(bound));
    match regime {
        LifRegime::ExpectedConstantGap => LifConfig::new(2, log_h.max(BigInt::from(2))),
        LifRegime::OneThird => LifConfig::new(2, log_h * 2u32 + 6u32),
        LifRegime::Epsilon(eps) => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::InvalidArgument(format!("epsilon {eps} not in (0,1)")));
            }
            let r = (log2_big(bound).log2().max(0.0) + (1.0 / eps).log2()).ceil() as usize;
            let beta = if log_h.is_even() { log_h } else { log_h + 1u32 };
            LifConfig::new(r.max(1), beta.max(BigInt::from(2)))
        }
    }
}

/// Uniform vector on `{−⌊β/2⌋, …, ⌈β/2⌉ − 1}`, a set of `β` integers.
pub fn random_rhs(n: usize, beta: &BigInt, rng: &mut impl Rng) -> Vec<BigInt> {
    let lo = -(beta / 2u32);
    let hi = &lo + beta;
    (0..n).map(|_| rng.gen_bigint_range(&lo, &hi)).collect()
}

/// Running values of `s̃ₙ` after each of the `cfg.r` solves.
pub fn lif_trace(
    a: &IntMatrix,
    cfg: &LifConfig,
    rng: &mut impl Rng,
    sampler: &mut PrimeSampler,
) -> Result<Vec<BigInt>> {
    let mut s = BigInt::one();
    let mut trace = Vec::with_capacity(cfg.r);
    for _ in 0..cfg.r {
        let b = random_rhs(a.rows(), &cfg.beta, rng);
        let x = dixon_solve(a, &b, sampler)?;
        s = s.lcm(&x.denominator);
        trace.push(s.clone());
    }
    Ok(trace)
}

/// `s̃ₙ`, a divisor of the largest invariant factor `sₙ(A)`.
pub fn lif(a: &IntMatrix, cfg: &LifConfig, seed: u64) -> Result<BigInt> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampler = PrimeSampler::default_window(seed ^ 0x6c69_665f_7072_696d);
    let trace = lif_trace(a, cfg, &mut rng, &mut sampler)?;
    Ok(trace.last().cloned().unwrap_or_else(BigInt::one))
}
