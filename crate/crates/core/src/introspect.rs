//! The introspective controller: early-terminated CRA first, then bonus rounds
//! that grow a known divisor `K` of the determinant, each followed by a short
//! resumption of CRA on `det(A)/K` sized by measured timings.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;

use crate::bigmat::{bit_length, hadamard_bound, IntMatrix};
use crate::bonus::{bonus_params, BonusParams, BonusState, RoundOutcome};
use crate::cra::{complete_certified, et_static_count, log2_big, CraState};
use crate::error::{Error, Result};
use crate::lif::{lif_config_for, lif_trace, LifRegime};
use crate::modfield::{self, PrimeSampler, WordImage, DEFAULT_PRIME_BITS};

const LIFT_SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Debug, PartialEq)]
pub struct DetOptions {
    /// Failure probability bound; half goes to early termination.
    pub epsilon: f64,
    pub seed: u64,
    /// Primes are drawn from `(2^bits, 2^(bits+1))`.
    pub prime_bits: u32,
    /// Entry-range size used for the factor-count estimate; `2‖A‖` if unset.
    pub lambda: Option<u64>,
    pub i_min: Option<usize>,
    pub i_max: Option<usize>,
    /// Replace the equality test on `π̃ᵢ` by the timing-ratio condition.
    pub adaptive_switch: bool,
}

impl Default for DetOptions {
    fn default() -> Self {
        Self {
            epsilon: 2f64.powi(-20),
            seed: 0,
            prime_bits: DEFAULT_PRIME_BITS,
            lambda: None,
            i_min: None,
            i_max: None,
            adaptive_switch: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetPath {
    EarlyCra,
    BonusEt,
    FallbackCertified,
}

impl DetPath {
    pub fn as_str(self) -> &'static str {
        match self {
            DetPath::EarlyCra => "early-cra",
            DetPath::BonusEt => "bonus-et",
            DetPath::FallbackCertified => "fallback-certified",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub initial_cra: Duration,
    pub bonus: Duration,
    pub resumed_cra: Duration,
    pub fallback: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.initial_cra + self.bonus + self.resumed_cra + self.fallback
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetReport {
    pub det: BigInt,
    pub path: DetPath,
    pub solvings: usize,
    /// Primes drawn for the CRA on `det(A)` itself.
    pub primes_used: usize,
    /// Bits of the final known divisor `K`.
    pub k_bits: u64,
    /// Final `K`, a divisor of `det(A)`.
    pub k_factor: BigInt,
    /// Final `s̃ₙ`; 1 when no system was solved.
    pub s_tilde: BigInt,
    pub epsilon: f64,
    pub timings: PhaseTimings,
}

/// Running means of the two timed operations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stopwatch {
    solve_total: Duration,
    solves: u32,
    lu_total: Duration,
    lus: u32,
}

impl Stopwatch {
    pub fn with_means(solve: Duration, lu: Duration) -> Self {
        Self {
            solve_total: solve,
            solves: 1,
            lu_total: lu,
            lus: 1,
        }
    }

    pub fn record_solve(&mut self, d: Duration) {
        self.solve_total += d;
        self.solves += 1;
    }

    pub fn record_lu(&mut self, d: Duration) {
        self.lu_total += d;
        self.lus += 1;
    }

    pub fn solve(&self) -> Duration {
        self.solve_total.checked_div(self.solves).unwrap_or_default()
    }

    pub fn lu(&self) -> Duration {
        self.lu_total.checked_div(self.lus).unwrap_or_default()
    }

    /// `time(solving) / time(LU)`.
    pub fn ratio(&self) -> f64 {
        let lu = self.lu().as_secs_f64();
        if lu > 0.0 {
            self.solve().as_secs_f64() / lu
        } else {
            f64::INFINITY
        }
    }
}

/// True when `log(π̃ᵢ/π̃ᵢ₋₁) ≤ (time(solving)/time(LU))·log l`: the last
/// solving gained fewer bits than CRA iterations would have in the same time.
pub fn lu_switch_condition(pi_i: &BigInt, pi_prev: &BigInt, sw: &Stopwatch, l: u64) -> bool {
    if pi_i == pi_prev {
        return true;
    }
    let gained = log2_big(pi_i) - log2_big(pi_prev);
    gained <= sw.ratio() * (l as f64).log2()
}

/// CRA driver for one matrix: owns the state, the prime stream and the modular
/// image of `A`.
pub struct CraRunner {
    pub state: CraState,
    sampler: PrimeSampler,
    image: WordImage,
    n: usize,
    epsilon: f64,
}

impl CraRunner {
    pub fn new(a: &IntMatrix, bound: BigInt, sampler: PrimeSampler, epsilon: f64) -> Self {
        Self {
            state: CraState::new(bound),
            sampler,
            image: WordImage::of(a),
            n: a.rows(),
            epsilon,
        }
    }

    pub fn sampler(&self) -> &PrimeSampler {
        &self.sampler
    }

    pub fn terminated(&self) -> bool {
        self.state
            .et_probability_holds(self.epsilon, self.sampler.remaining(), self.sampler.lower())
    }

    /// One modular determinant folded into the state.
    pub fn step(&mut self, sw: &mut Stopwatch) -> Result<()> {
        let p = self.sampler.sample_coprime_to(self.state.divisor())?;
        let t = Instant::now();
        let d = modfield::det_mod_p_image(&self.image, self.n, p);
        sw.record_lu(t.elapsed());
        self.state.update(p, d)
    }

    /// Whole iterations until the next one would overrun `budget`, at least
    /// one. Returns whether early termination fired.
    pub fn cra_budget_run(&mut self, budget: Duration, sw: &mut Stopwatch) -> Result<bool> {
        if self.terminated() {
            return Ok(true);
        }
        let start = Instant::now();
        loop {
            self.step(sw)?;
            if self.terminated() {
                return Ok(true);
            }
            if start.elapsed() + sw.lu() > budget {
                return Ok(false);
            }
        }
    }

    /// Early-terminated loop with no time limit.
    pub fn run_to_termination(&mut self, sw: &mut Stopwatch) -> Result<()> {
        while !self.terminated() {
            self.step(sw)?;
        }
        Ok(())
    }

    pub fn set_divisor(&mut self, k: &BigInt) -> Result<()> {
        if k != self.state.divisor() {
            self.state.set_divisor(k.clone())?;
        }
        Ok(())
    }

    /// Completes the state to full certification, reusing stored residues.
    pub fn fallback_certified(&mut self) -> Result<BigInt> {
        complete_certified(&mut self.state, &self.image, self.n, &mut self.sampler)?;
        Ok(self.state.value())
    }
}

fn check_square(a: &IntMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    Ok(())
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} not in (0,1)")));
    }
    Ok(())
}

fn trivial_report(det: BigInt, epsilon: f64) -> DetReport {
    DetReport {
        det,
        path: DetPath::EarlyCra,
        solvings: 0,
        primes_used: 0,
        k_bits: 1,
        k_factor: BigInt::one(),
        s_tilde: BigInt::one(),
        epsilon,
        timings: PhaseTimings::default(),
    }
}

fn lambda_estimate(a: &IntMatrix, opts: &DetOptions) -> u64 {
    opts.lambda.unwrap_or_else(|| {
        let norm = a.norm();
        u64::try_from(&norm).map_or(u64::MAX, |v| v.saturating_mul(2))
    })
}

fn resolve_params(a: &IntMatrix, opts: &DetOptions) -> Result<BonusParams> {
    let base = bonus_params(a, lambda_estimate(a, opts))?;
    let i_max = opts.i_max.unwrap_or(base.i_max).max(1);
    let i_min = opts.i_min.unwrap_or(base.i_min).min(i_max);
    BonusParams::new(base.s, i_min, i_max)
}

/// Determinant of `A`, correct with probability at least `1 − ε` (exact on
/// the fallback path).
pub fn determinant(a: &IntMatrix, opts: &DetOptions) -> Result<DetReport> {
    check_square(a)?;
    check_epsilon(opts.epsilon)?;
    let n = a.rows();
    if n == 0 {
        return Ok(trivial_report(BigInt::one(), opts.epsilon));
    }
    if n == 1 {
        return Ok(trivial_report(a.get(0, 0).clone(), opts.epsilon));
    }
    let eps_et = opts.epsilon / 2.0;
    let bound = hadamard_bound(a)?;
    let sampler = PrimeSampler::with_bits(opts.prime_bits, opts.seed)?;
    let k = et_static_count(&bound, sampler.lower(), sampler.population(), eps_et)?;
    let mut cra = CraRunner::new(a, bound, sampler, eps_et);
    let mut sw = Stopwatch::default();
    let mut timings = PhaseTimings::default();

    // k + 1 primes give the reconstruction a chance to stay equal k times
    let t = Instant::now();
    for _ in 0..=k {
        cra.step(&mut sw)?;
        if cra.terminated() {
            timings.initial_cra = t.elapsed();
            return Ok(report(&cra, None, DetPath::EarlyCra, opts.epsilon, timings));
        }
    }
    timings.initial_cra = t.elapsed();

    let params = resolve_params(a, opts)?;
    let lift_sampler = PrimeSampler::with_bits(opts.prime_bits, opts.seed ^ LIFT_SEED_MIX)?;
    let mut bonus = BonusState::new(n, lift_sampler, opts.seed.wrapping_add(LIFT_SEED_MIX));
    let l = cra.sampler().lower();

    loop {
        let t = Instant::now();
        let before = bonus.solvings();
        let sw_now = sw;
        let adaptive = opts.adaptive_switch;
        let outcome = bonus.bonus_round(a, &params, |cur, prev| {
            if adaptive && sw_now.solves > 0 {
                lu_switch_condition(cur, prev, &sw_now, l)
            } else {
                cur == prev
            }
        });
        let outcome = match outcome {
            Ok(o) => o,
            // singular A: the certified CRA yields the zero determinant
            Err(Error::Singular) => break,
            Err(e) => return Err(e),
        };
        if bonus.solvings() == before {
            break;
        }
        let spent = t.elapsed();
        timings.bonus += spent;
        sw.record_solve(spent);
        cra.set_divisor(bonus.k())?;

        let t = Instant::now();
        let done = cra.cra_budget_run(sw.solve(), &mut sw)?;
        timings.resumed_cra += t.elapsed();
        if done {
            return Ok(report(&cra, Some(&bonus), DetPath::BonusEt, opts.epsilon, timings));
        }
        match outcome {
            RoundOutcome::Continue | RoundOutcome::PhaseSwitch => {}
            RoundOutcome::Confirmed => {
                let i = bonus.level() - 1;
                let t = Instant::now();
                let budget = sw.solve() * params.i_max.saturating_sub(i) as u32;
                let done = cra.cra_budget_run(budget, &mut sw)?;
                timings.resumed_cra += t.elapsed();
                if done {
                    return Ok(report(&cra, Some(&bonus), DetPath::BonusEt, opts.epsilon, timings));
                }
                if i >= params.i_max {
                    break;
                }
                bonus.jump_to_last(&params);
            }
            RoundOutcome::Exhausted => break,
        }
    }

    let t = Instant::now();
    cra.fallback_certified()?;
    timings.fallback = t.elapsed();
    Ok(report(&cra, Some(&bonus), DetPath::FallbackCertified, opts.epsilon, timings))
}

fn report(
    cra: &CraRunner,
    bonus: Option<&BonusState>,
    path: DetPath,
    epsilon: f64,
    timings: PhaseTimings,
) -> DetReport {
    let k_factor = cra.state.divisor().clone();
    DetReport {
        det: cra.state.value(),
        path,
        solvings: bonus.map_or(0, |b| b.solvings()),
        primes_used: cra.sampler().issued(),
        k_bits: bit_length(&k_factor),
        k_factor,
        s_tilde: bonus.map_or_else(BigInt::one, |b| b.s_tilde().clone()),
        epsilon,
        timings,
    }
}

/// Certified CRA from scratch: deterministic, no early termination.
pub fn certified_determinant(a: &IntMatrix, opts: &DetOptions) -> Result<DetReport> {
    check_square(a)?;
    if a.rows() == 0 {
        return Ok(trivial_report(BigInt::one(), opts.epsilon));
    }
    let bound = hadamard_bound(a)?;
    let sampler = PrimeSampler::with_bits(opts.prime_bits, opts.seed)?;
    let mut cra = CraRunner::new(a, bound, sampler, opts.epsilon);
    let t = Instant::now();
    cra.fallback_certified()?;
    let timings = PhaseTimings {
        fallback: t.elapsed(),
        ..Default::default()
    };
    Ok(report(&cra, None, DetPath::FallbackCertified, 0.0, timings))
}

/// Early-terminated CRA alone.
pub fn et_cra_determinant(a: &IntMatrix, opts: &DetOptions) -> Result<DetReport> {
    check_square(a)?;
    check_epsilon(opts.epsilon)?;
    if a.rows() == 0 {
        return Ok(trivial_report(BigInt::one(), opts.epsilon));
    }
    let bound = hadamard_bound(a)?;
    let sampler = PrimeSampler::with_bits(opts.prime_bits, opts.seed)?;
    let mut cra = CraRunner::new(a, bound, sampler, opts.epsilon);
    let mut sw = Stopwatch::default();
    let t = Instant::now();
    cra.run_to_termination(&mut sw)?;
    let timings = PhaseTimings {
        initial_cra: t.elapsed(),
        ..Default::default()
    };
    Ok(report(&cra, None, DetPath::EarlyCra, opts.epsilon, timings))
}

/// `s̃ₙ` from two solves, then early-terminated CRA on `det(A)/s̃ₙ`.
pub fn lif_only_determinant(a: &IntMatrix, opts: &DetOptions) -> Result<DetReport> {
    check_square(a)?;
    check_epsilon(opts.epsilon)?;
    if a.rows() == 0 {
        return Ok(trivial_report(BigInt::one(), opts.epsilon));
    }
    let eps_et = opts.epsilon / 2.0;
    let bound = hadamard_bound(a)?;
    let sampler = PrimeSampler::with_bits(opts.prime_bits, opts.seed)?;
    let mut cra = CraRunner::new(a, bound.clone(), sampler, eps_et);
    let mut sw = Stopwatch::default();
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let cfg = lif_config_for(&bound.max(BigInt::from(2)), LifRegime::ExpectedConstantGap)?;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(opts.seed);
    let mut lift = PrimeSampler::with_bits(opts.prime_bits, opts.seed ^ LIFT_SEED_MIX)?;
    let s_tilde = match lif_trace(a, &cfg, &mut rng, &mut lift) {
        Ok(trace) => trace.last().cloned().unwrap_or_else(BigInt::one),
        Err(Error::Singular) => BigInt::one(),
        Err(e) => return Err(e),
    };
    timings.bonus = t.elapsed();
    cra.set_divisor(&s_tilde)?;
    let t = Instant::now();
    cra.run_to_termination(&mut sw)?;
    timings.resumed_cra = t.elapsed();
    let mut rep = report(&cra, None, DetPath::BonusEt, opts.epsilon, timings);
    rep.solvings = cfg.r;
    rep.s_tilde = s_tilde;
    Ok(rep)
}
