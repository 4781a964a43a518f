//! Monte Carlo estimators for the probabilistic bounds the algorithm relies
//! on. Every trial draws from its own ChaCha stream, so results do not depend
//! on the number of worker threads.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bigmat::{bareiss_det, gen_engineered, gen_random_with, hadamard_bound, smith_form, IntMatrix};
use crate::bonus::{bonus_params, expected_factor_count, BonusState};
use crate::cra::log2_big;
use crate::error::{Error, Result};
use crate::lif::{lif, lif_config_for, LifRegime};
use crate::modfield::{rank_mod_p_words, PrimeSampler};
use crate::par;

/// Whether the bound caps the estimate from above or below.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Upper,
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McResult {
    pub name: String,
    pub trials: usize,
    /// Trials where the event occurred; for mean estimators, the number of
    /// samples.
    pub successes: usize,
    pub estimate: f64,
    pub bound: f64,
    /// Three standard errors of the estimate.
    pub slack: f64,
    pub kind: BoundKind,
    pub pass: bool,
}

impl McResult {
    fn finish(name: String, trials: usize, successes: usize, estimate: f64, bound: f64, slack: f64, kind: BoundKind) -> Self {
        let pass = match kind {
            BoundKind::Upper => estimate <= bound + slack,
            BoundKind::Lower => estimate >= bound - slack,
        };
        Self {
            name,
            trials,
            successes,
            estimate,
            bound,
            slack,
            kind,
            pass,
        }
    }

    /// Event frequency against a bound on its probability.
    pub fn proportion(name: impl Into<String>, trials: usize, successes: usize, bound: f64, kind: BoundKind) -> Self {
        let t = trials.max(1) as f64;
        let e = successes as f64 / t;
        let slack = 3.0 * (e * (1.0 - e) / t).sqrt();
        Self::finish(name.into(), trials, successes, e, bound, slack, kind)
    }

    /// Sample mean against a bound on the expectation.
    pub fn mean(name: impl Into<String>, samples: &[f64], bound: f64, kind: BoundKind) -> Self {
        let t = samples.len().max(1) as f64;
        let m = samples.iter().sum::<f64>() / t;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (t - 1.0)
        } else {
            0.0
        };
        let slack = 3.0 * (var / t).sqrt();
        Self::finish(name.into(), samples.len(), samples.len(), m, bound, slack, kind)
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(trial as u64)
}

/// Bound on the probability that a random `k × n` matrix with entries from
/// `S = λ+1` contiguous integers has rank `j` modulo `p`, with
/// `α = ⌊S/p⌋/S` and `β = ⌈S/p⌉/S`.
///
/// Evaluated through the column recursion
/// `B(J,K) = β^(n−J)·B(J,K−1) + (1−α^(n−J+1))·B(J−1,K−1)`,
/// `B(0,K) = β^(nK)`, `B(0,0) = 1`. For `j ≤ 1` or `j = k` this equals the
/// closed form `∏(1−α^(n−i))·β^((n−j)(k−j))·(1/(1−β))^max(k−j−1,0)·Σβ^t`;
/// otherwise the closed form drops terms and can fall below the true
/// probability, while the recursion stays below `β^((n−j)(k−j))/(1−β)^(k−j)`.
pub fn rank_bound(n: usize, k: usize, lambda: u64, p: u64, j: usize) -> f64 {
    let s = (lambda.max(1) + 1) as f64;
    let alpha = (s / p as f64).floor() / s;
    let beta = (s / p as f64).ceil() / s;
    let mut b = vec![0.0; k + 1];
    b[0] = 1.0;
    for kk in 1..=k {
        let mut next = vec![0.0; k + 1];
        for jj in 0..=kk.min(n) {
            let stay = if jj < kk { beta.powi((n - jj) as i32) * b[jj] } else { 0.0 };
            let grow = if jj > 0 {
                (1.0 - alpha.powi((n - jj + 1) as i32)) * b[jj - 1]
            } else {
                0.0
            };
            next[jj] = stay + grow;
        }
        b = next;
    }
    b[j]
}

/// `β^((n−j)(k−j)) · (1/(1−β))^(k−j)`, the simplified form of the rank bound.
pub fn rank_bound_simple(n: usize, k: usize, lambda: u64, p: u64, j: usize) -> f64 {
    let s = (lambda.max(1) + 1) as f64;
    let beta = (s / p as f64).ceil() / s;
    beta.powi(((n - j) * (k - j)) as i32) / (1.0 - beta).powi((k - j) as i32)
}

/// Frequency of `rank_p = j` over random `k × n` matrices with entries from
/// `λ+1` contiguous integers.
pub fn mc_rank_bound(n: usize, k: usize, lambda: u64, p: u64, j: usize, trials: usize, seed: u64) -> Result<McResult> {
    if j > k || k > n {
        return Err(Error::InvalidArgument(format!("need j ≤ k ≤ n (got j={j}, k={k}, n={n})")));
    }
    let hits = par::map_indexed(trials, |t| {
        let mut rng = trial_rng(seed, t);
        let m = gen_random_with(k, n, lambda, &mut rng);
        let words = m.to_i64_entries().expect("small entries");
        rank_mod_p_words(&words, k, n, p) == j
    });
    let successes = hits.into_iter().filter(|&h| h).count();
    Ok(McResult::proportion(
        format!("rank n={n} k={k} λ={lambda} p={p} j={j}"),
        trials,
        successes,
        rank_bound(n, k, lambda, p, j),
        BoundKind::Upper,
    ))
}

/// Mean number of nontrivial invariant factors of random `n × n` matrices,
/// or with `p` set, the mean number divisible by `p` (zero factors of a
/// singular draw included).
pub fn mc_factor_count(n: usize, lambda: u64, p: Option<u64>, trials: usize, seed: u64) -> McResult {
    let counts = par::map_indexed(trials, |t| {
        let mut rng = trial_rng(seed, t);
        let a = gen_random_with(n, n, lambda, &mut rng);
        let sf = smith_form(&a);
        let zeros = n - sf.rank();
        (match p {
            Some(p) => sf.count_divisible_by(p),
            None => sf.nontrivial_count(),
        } + zeros) as f64
    });
    match p {
        Some(p) => McResult::mean(
            format!("factors divisible by {p}, n={n} λ={lambda}"),
            &counts,
            4.0,
            BoundKind::Upper,
        ),
        None => McResult::mean(
            format!("nontrivial factors, n={n} λ={lambda}"),
            &counts,
            expected_factor_count(n, lambda) as f64,
            BoundKind::Upper,
        ),
    }
}

/// `V = [I_k | R]`, a `k × n` matrix whose Smith form is trivial.
pub fn bordered_identity(n: usize, k: usize, s: u64, rng: &mut ChaCha8Rng) -> IntMatrix {
    let tail = gen_random_with(k, n - k, s.saturating_sub(1), rng);
    let mut v = IntMatrix::zeros(k, n);
    for i in 0..k {
        v.set(i, i, BigInt::one());
        for j in 0..n - k {
            v.set(i, k + j, tail.get(i, j).clone());
        }
    }
    v
}

/// Frequency of `p^l | det(VM)` for a fixed trivial-Smith `V` and random
/// `n × k` matrices `M` with entries from `S` contiguous integers.
pub fn mc_perturbed_det(n: usize, k: usize, s: u64, p: u64, l: u32, trials: usize, seed: u64) -> Result<McResult> {
    let pl = p.checked_pow(l).filter(|&q| q < s).ok_or_else(|| {
        Error::InvalidArgument(format!("need p^l < S (p={p}, l={l}, S={s})"))
    })?;
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ n (got k={k}, n={n})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let v = loop {
        let v = bordered_identity(n, k, s, &mut rng);
        if smith_form(&v).factors.iter().all(|f| f.is_one()) {
            break v;
        }
    };
    let modulus = BigInt::from(pl);
    let hits = par::map_indexed(trials, |t| {
        let mut rng = trial_rng(seed, t);
        // S values centred on zero
        let m = gen_random_with(n, k, s - 1, &mut rng);
        let det = bareiss_det(&v.mul(&m).expect("shapes")).expect("square");
        det.is_multiple_of(&modulus)
    });
    let successes = hits.into_iter().filter(|&h| h).count();
    Ok(McResult::proportion(
        format!("p^l | det(VM), n={n} k={k} S={s} p={p} l={l}"),
        trials,
        successes,
        3.0 / pl as f64,
        BoundKind::Upper,
    ))
}

fn lif_trial(n: usize, regime: LifRegime, seed: u64, s_n: &BigInt) -> Result<BigInt> {
    let a = gen_engineered(n, seed);
    let cfg = lif_config_for(&hadamard_bound(&a)?, regime)?;
    let s = lif(&a, &cfg, seed)?;
    debug_assert!(s_n.is_multiple_of(&s));
    Ok(s)
}

/// Largest invariant factor of every engineered matrix of size `n`.
fn engineered_largest(n: usize) -> BigInt {
    let diag: Vec<BigInt> = (1..=n as u64).map(BigInt::from).collect();
    smith_form(&IntMatrix::diagonal(&diag)).largest()
}

fn bit_gap(full: &BigInt, part: &BigInt) -> f64 {
    if part.is_zero() {
        return f64::INFINITY;
    }
    log2_big(&(full / part))
}

/// Mean of `log₂(sₙ/s̃ₙ)` over engineered matrices; bound 8 bits.
pub fn mc_lif_gap(n: usize, regime: LifRegime, trials: usize, seed: u64) -> Result<McResult> {
    let s_n = engineered_largest(n);
    let gaps = par::map_indexed(trials, |t| {
        lif_trial(n, regime, trial_seed(seed, t), &s_n).map(|s| bit_gap(&s_n, &s))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(McResult::mean(format!("lif bit gap n={n} {regime:?}"), &gaps, 8.0, BoundKind::Upper))
}

/// Frequency of `s̃ₙ = sₙ` over engineered matrices; lower bound 1/3.
pub fn mc_lif_equality(n: usize, regime: LifRegime, trials: usize, seed: u64) -> Result<McResult> {
    let s_n = engineered_largest(n);
    let hits = par::map_indexed(trials, |t| {
        lif_trial(n, regime, trial_seed(seed, t), &s_n).map(|s| s == s_n)
    })
    .into_iter()
    .collect::<Result<Vec<bool>>>()?;
    let successes = hits.into_iter().filter(|&h| h).count();
    Ok(McResult::proportion(
        format!("lif s̃ₙ = sₙ n={n} {regime:?}"),
        trials,
        successes,
        1.0 / 3.0,
        BoundKind::Lower,
    ))
}

/// Mean of `log₂(πₖ/π̃ₖ)` over engineered matrices, where `π̃ₖ` combines two
/// independent estimates through lcm (a gcd on the perturbed minors). The
/// threshold is 12 bits.
pub fn mc_pi_gap(n: usize, k: usize, trials: usize, seed: u64) -> Result<McResult> {
    if k < 2 {
        return Err(Error::InvalidArgument("k must be at least 2".into()));
    }
    let diag: Vec<BigInt> = (1..=n as u64).map(BigInt::from).collect();
    let pi_k = smith_form(&IntMatrix::diagonal(&diag)).top_product(k);
    let gaps = par::map_indexed(trials, |t| -> Result<f64> {
        let ts = trial_seed(seed, t);
        let a = gen_engineered(n, ts);
        let lambda = a.norm().to_u64().unwrap_or(u64::MAX / 2).saturating_mul(2);
        let params = bonus_params(&a, lambda)?;
        let mut confirmed = BigInt::one();
        for run in 0..2u64 {
            let sampler = PrimeSampler::default_window(ts ^ (run + 1).wrapping_mul(0x51));
            let mut st = BonusState::new(n, sampler, ts.wrapping_add(run << 32));
            if let Some(p) = st.estimate_top(&a, k, &params.s)? {
                confirmed = confirmed.lcm(&p);
            }
        }
        debug_assert!(pi_k.is_multiple_of(&confirmed));
        Ok(bit_gap(&pi_k, &confirmed.abs()))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(McResult::mean(format!("π̃ bit gap n={n} k={k}"), &gaps, 12.0, BoundKind::Upper))
}
