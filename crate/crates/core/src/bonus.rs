//! Extended bonus: divisors `π̃ᵢ` of the product of the `i` largest invariant
//! factors, read off the numerator matrix of several solves under a random
//! left perturbation.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bigmat::{ceil_log2, hadamard_bound, IntMatrix};
use crate::cra::cra_det_certified;
use crate::error::{Error, Result};
use crate::lif::random_rhs;
use crate::modfield::PrimeSampler;
use crate::padic::{dixon_solve, RationalVector};

/// Redraws of `R` when `det(RN)` vanishes.
pub const PERTURBATION_RETRIES: usize = 3;

/// `⌈√(2 log_λ n)⌉ + 3`, the expected number of nontrivial invariant factors
/// of a random dense matrix. Evaluated exactly as `3 + min{m : λ^(m²) ≥ n²}`.
pub fn expected_factor_count(n: usize, lambda: u64) -> usize {
    let lambda = if lambda < 2 {
        log::warn!("λ = {lambda} below 2, using 2 for the factor-count bound");
        2
    } else {
        lambda
    };
    let target = BigUint::from(n.max(1)).pow(2);
    let base = BigUint::from(lambda);
    let mut m = 0u32;
    while base.pow(m * m) < target {
        m += 1;
    }
    m as usize + 3
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BonusParams {
    /// Size of the contiguous set for the entries of `B` and `R`.
    pub s: BigInt,
    pub i_min: usize,
    pub i_max: usize,
}

impl BonusParams {
    pub fn new(s: BigInt, i_min: usize, i_max: usize) -> Result<Self> {
        if s < BigInt::from(2) || i_max == 0 || i_min > i_max {
            return Err(Error::InvalidArgument(format!(
                "need S ≥ 2 and 1 ≤ i_max, i_min ≤ i_max (got S = {s}, i_min = {i_min}, i_max = {i_max})"
            )));
        }
        Ok(Self { s, i_min, i_max })
    }
}

/// `S = 13E³⌈log₂H⌉⁴`, `i_min = 2`, `i_max = max(i_min, E)` with
/// `E = expected_factor_count(n, λ)`.
pub fn bonus_params(a: &IntMatrix, lambda: u64) -> Result<BonusParams> {
    let h = hadamard_bound(a)?;
    let e = expected_factor_count(a.rows(), lambda);
    let log_h = BigInt::from(ceil_log2(&h).max(1));
    let s = BigInt::from(13u32) * num_traits::pow(BigInt::from(e), 3) * num_traits::pow(log_h, 4);
    let i_min = 2;
    BonusParams::new(s, i_min, i_min.max(e))
}

/// What the controller should do after a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundOutcome {
    /// Keep extending the current phase.
    Continue,
    /// A new level stabilised; phases were swapped to confirm it with fresh
    /// randomness.
    PhaseSwitch,
    /// A level at most `k_app` stabilised again: worth a longer CRA attempt.
    Confirmed,
    /// The phase ran past `i_max` without stabilising.
    Exhausted,
}

/// Bookkeeping of the bonus loop: solutions of the two phases, `s̃ₙ`, the
/// recorded `π̃ᵢ` and the accumulated divisor `K` of `det(A)`.
#[derive(Clone, Debug)]
pub struct BonusState {
    n: usize,
    s_tilde: BigInt,
    columns: [Vec<RationalVector>; 2],
    pi: Vec<BigInt>,
    k: BigInt,
    k_done: usize,
    k_app: usize,
    phase: usize,
    level: usize,
    solvings: usize,
    unconfirmed: usize,
    rng: ChaCha8Rng,
    sampler: PrimeSampler,
}

impl BonusState {
    pub fn new(n: usize, sampler: PrimeSampler, seed: u64) -> Self {
        Self {
            n,
            s_tilde: BigInt::one(),
            columns: [Vec::new(), Vec::new()],
            pi: vec![BigInt::one()],
            k: BigInt::one(),
            k_done: 0,
            k_app: 0,
            phase: 0,
            level: 1,
            solvings: 0,
            unconfirmed: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            sampler,
        }
    }

    pub fn s_tilde(&self) -> &BigInt {
        &self.s_tilde
    }

    /// Accumulated divisor `K` of `det(A)`.
    pub fn k(&self) -> &BigInt {
        &self.k
    }

    pub fn k_done(&self) -> usize {
        self.k_done
    }

    pub fn k_app(&self) -> usize {
        self.k_app
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    /// Level the next round works on.
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn solvings(&self) -> usize {
        self.solvings
    }

    /// Rounds whose `det(RN)` stayed zero after every redraw.
    pub fn unconfirmed(&self) -> usize {
        self.unconfirmed
    }

    /// Recorded `π̃ᵢ`, if level `i` has been reached.
    pub fn pi(&self, i: usize) -> Option<&BigInt> {
        self.pi.get(i)
    }

    /// Columns of the current phase.
    pub fn solutions(&self) -> &[RationalVector] {
        &self.columns[self.phase]
    }

    /// Solves `Ax = b` for a fresh `b` with entries from the `S`-sized set and
    /// stores it as column `level` of the current phase.
    pub fn extend_solution(&mut self, a: &IntMatrix, s: &BigInt) -> Result<()> {
        let b = random_rhs(self.n, s, &mut self.rng);
        let x = dixon_solve(a, &b, &mut self.sampler)?;
        self.solvings += 1;
        self.s_tilde = self.s_tilde.lcm(&x.denominator);
        let cols = &mut self.columns[self.phase];
        cols.truncate(self.level - 1);
        cols.push(x);
        Ok(())
    }

    /// `N = s̃ₙ · X` over the current phase, one column per solution.
    pub fn numerators(&self) -> IntMatrix {
        let cols = &self.columns[self.phase];
        let mut out = IntMatrix::zeros(self.n, cols.len());
        for (j, x) in cols.iter().enumerate() {
            let scale = &self.s_tilde / &x.denominator;
            for (i, v) in x.numerators.iter().enumerate() {
                out.set(i, j, v * &scale);
            }
        }
        out
    }

    /// `π̃ᵢ = s̃ₙⁱ / gcd(det(RN), s̃ₙⁱ)` for a random `i × n` matrix `R`, where
    /// `i` is the column count of `N`. `None` when every draw of `R` gave a
    /// singular `RN`.
    pub fn pi_estimate(&mut self, s: &BigInt) -> Result<Option<BigInt>> {
        let i = self.columns[self.phase].len();
        if i == 0 {
            return Err(Error::InvalidArgument("no solutions in the current phase".into()));
        }
        if i == 1 {
            return Ok(Some(self.s_tilde.clone()));
        }
        let n_mat = self.numerators();
        let power = num_traits::pow(self.s_tilde.clone(), i);
        for _ in 0..PERTURBATION_RETRIES {
            let mut entries = Vec::with_capacity(i * self.n);
            for _ in 0..i {
                entries.extend(random_rhs(self.n, s, &mut self.rng));
            }
            let r = IntMatrix::new(i, self.n, entries)?;
            let rn = r.mul(&n_mat)?;
            let det = cra_det_certified(&rn, &BigInt::one(), &mut self.sampler)?;
            if det.is_zero() {
                continue;
            }
            let g = det.gcd(&power);
            let (q, rem) = power.div_rem(&g);
            debug_assert!(rem.is_zero());
            return Ok(Some(q));
        }
        Ok(None)
    }

    /// Solves `k` fresh systems into the current phase and returns `π̃ₖ`
    /// from them.
    pub fn estimate_top(&mut self, a: &IntMatrix, k: usize, s: &BigInt) -> Result<Option<BigInt>> {
        for i in 1..=k {
            self.level = i;
            self.extend_solution(a, s)?;
        }
        self.level = k + 1;
        self.pi_estimate(s)
    }

    /// One pass of the inner loop: extend, estimate `π̃ᵢ`, fold it into `K`,
    /// then test for stabilisation beyond `i_min`. `stable(π̃ᵢ, π̃ᵢ₋₁)` is the
    /// stabilisation predicate, plain equality unless the timing switch is on.
    pub fn bonus_round(
        &mut self,
        a: &IntMatrix,
        params: &BonusParams,
        stable: impl Fn(&BigInt, &BigInt) -> bool,
    ) -> Result<RoundOutcome> {
        let i = self.level;
        if i > params.i_max {
            return Ok(RoundOutcome::Exhausted);
        }
        self.extend_solution(a, &params.s)?;
        match self.pi_estimate(&params.s)? {
            Some(p) => self.k = self.k.lcm(&p),
            None => self.unconfirmed += 1,
        }
        self.pi.truncate(i);
        self.pi.push(self.k.clone());

        if i > params.i_min && stable(&self.pi[i], &self.pi[i - 1]) {
            if i > self.k_app {
                self.k_done = self.k_app;
                self.k_app = i;
                self.phase ^= 1;
                self.level = self.k_done + 1;
                return Ok(RoundOutcome::PhaseSwitch);
            }
            self.level = i + 1;
            return Ok(RoundOutcome::Confirmed);
        }
        self.level = i + 1;
        Ok(if self.level > params.i_max {
            RoundOutcome::Exhausted
        } else {
            RoundOutcome::Continue
        })
    }

    /// Moves the current phase to its last level, as after a failed long CRA
    /// attempt on a confirmed level.
    pub fn jump_to_last(&mut self, params: &BonusParams) {
        self.level = params.i_max;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigmat::{bareiss_det, gen_engineered, gen_random, smith_form};
    use num_traits::Signed;

    fn state(n: usize, seed: u64) -> BonusState {
        BonusState::new(n, PrimeSampler::default_window(seed ^ 0xb0), seed)
    }

    #[test]
    fn factor_count_examples() {
        assert_eq!(expected_factor_count(200, 4), 6);
        assert_eq!(expected_factor_count(10000, 16), 6);
        assert_eq!(expected_factor_count(40, 4), 6);
        assert!(expected_factor_count(2, 2) >= 4);
        assert_eq!(expected_factor_count(100, 1), expected_factor_count(100, 2));
    }

    #[test]
    fn factor_count_matches_float_formula() {
        for n in [2usize, 3, 10, 40, 100, 1000, 5000] {
            for lambda in [2u64, 3, 4, 16, 200] {
                let f = (2.0 * (n as f64).ln() / (lambda as f64).ln()).sqrt().ceil() as usize + 3;
                assert_eq!(expected_factor_count(n, lambda), f, "n={n} λ={lambda}");
            }
        }
    }

    #[test]
    fn params_formula_chain() {
        let a = gen_random(100, 16, 3);
        let p = bonus_params(&a, 16).unwrap();
        let e = expected_factor_count(100, 16);
        let lh = ceil_log2(&hadamard_bound(&a).unwrap());
        let expect = BigInt::from(13u64 * (e as u64).pow(3)) * BigInt::from(lh).pow(4);
        assert_eq!(p.s, expect);
        assert_eq!(p.i_min, 2);
        assert_eq!(p.i_max, 2usize.max(e));
        assert!(BonusParams::new(BigInt::from(5), 3, 2).is_err());
    }

    #[test]
    fn first_extension() {
        let a = gen_engineered(8, 2);
        let params = bonus_params(&a, 8).unwrap();
        let mut st = state(8, 1);
        st.extend_solution(&a, &params.s).unwrap();
        assert_eq!(st.pi_estimate(&params.s).unwrap().unwrap(), *st.s_tilde());
        let n = st.numerators();
        let x = &st.solutions()[0];
        for i in 0..8 {
            assert_eq!(n.get(i, 0) * &x.denominator, &x.numerators[i] * st.s_tilde());
        }
    }

    #[test]
    fn identity_numerators_equal_rhs() {
        let a = IntMatrix::identity(5);
        let mut st = state(5, 7);
        let s = BigInt::from(1000);
        st.extend_solution(&a, &s).unwrap();
        st.extend_solution(&a, &s).unwrap();
        assert!(st.s_tilde().is_one());
        let n = st.numerators();
        assert_eq!(n.cols(), 1);
        assert_eq!(n.cols(), st.solutions().len());
    }

    #[test]
    fn pi_two_divides_top_product() {
        // Smith form (1, 1, 1, 4, 12): π₂ = 48
        let d = IntMatrix::diagonal(&[1, 1, 1, 4, 12].map(BigInt::from));
        assert_eq!(smith_form(&d).top_product(2), BigInt::from(48));
        let s = BigInt::from(1 << 20);
        for seed in 0..30 {
            let mut st = state(5, seed);
            st.extend_solution(&d, &s).unwrap();
            st.level = 2;
            st.extend_solution(&d, &s).unwrap();
            let pi = st.pi_estimate(&s).unwrap().unwrap();
            assert!(BigInt::from(48).is_multiple_of(&pi), "seed {seed}: {pi}");
        }
    }

    #[test]
    fn identity_round_flips_phase() {
        let a = IntMatrix::identity(6);
        let params = BonusParams::new(BigInt::from(1 << 16), 2, 4).unwrap();
        let mut st = state(6, 3);
        let eq = |x: &BigInt, y: &BigInt| x == y;
        assert_eq!(st.bonus_round(&a, &params, eq).unwrap(), RoundOutcome::Continue);
        assert_eq!(st.bonus_round(&a, &params, eq).unwrap(), RoundOutcome::Continue);
        assert_eq!(st.bonus_round(&a, &params, eq).unwrap(), RoundOutcome::PhaseSwitch);
        assert!(st.k().is_one());
        assert_eq!((st.phase(), st.k_done(), st.k_app(), st.level()), (1, 0, 3, 1));
        // the second phase confirms level 3
        for _ in 0..2 {
            assert_eq!(st.bonus_round(&a, &params, eq).unwrap(), RoundOutcome::Continue);
        }
        assert_eq!(st.bonus_round(&a, &params, eq).unwrap(), RoundOutcome::Confirmed);
        st.jump_to_last(&params);
        assert_eq!(st.bonus_round(&a, &params, eq).unwrap(), RoundOutcome::PhaseSwitch);
        assert_eq!((st.phase(), st.k_done(), st.k_app(), st.level()), (0, 3, 4, 4));
        assert_eq!(st.bonus_round(&a, &params, eq).unwrap(), RoundOutcome::Confirmed);
        assert_eq!(st.bonus_round(&a, &params, eq).unwrap(), RoundOutcome::Exhausted);
        assert_eq!(st.solvings(), 8);
    }

    #[test]
    fn k_divides_det_on_engineered() {
        for seed in 0..12u64 {
            let n = 10 + (seed as usize % 3) * 5;
            let a = gen_engineered(n, seed);
            let det = bareiss_det(&a).unwrap().abs();
            let params = bonus_params(&a, 4).unwrap();
            let mut st = state(n, seed);
            let mut last = BigInt::one();
            for _ in 0..6 {
                if st.bonus_round(&a, &params, |x, y| x == y).unwrap() == RoundOutcome::Exhausted {
                    break;
                }
                assert!(det.is_multiple_of(st.k()), "seed {seed}");
                assert!(st.k().is_multiple_of(&last));
                last = st.k().clone();
            }
            assert!(smith_form(&a).largest().is_multiple_of(st.s_tilde()));
        }
    }
}
