//! Dense arbitrary-precision integer matrices, a priori bounds, the exact
//! reference oracles (fraction-free elimination and Smith normal form) and the
//! seeded matrix generators used by tests, benchmarks and the CLI.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix over the integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {}x{} matrix",
                entries.len(),
                rows,
                cols
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn diagonal(diag: &[BigInt]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.entries[i * n + i] = d.clone();
        }
        m
    }

    /// Builds a matrix from machine integers given row by row.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut entries = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(Error::Dimension("ragged rows".into()));
            }
            entries.extend(r.iter().map(|&v| BigInt::from(v)));
        }
        Self::new(nrows, ncols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    /// Largest absolute entry, `‖A‖`.
    pub fn norm(&self) -> BigInt {
        self.entries
            .iter()
            .map(|e| e.abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    /// Entries as machine words when every entry fits in an `i64`.
    pub fn to_i64_entries(&self) -> Option<Vec<i64>> {
        self.entries.iter().map(|e| e.to_i64()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        out
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.entries[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Result<Vec<BigInt>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} for {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Parses the plain-text matrix format: a header line `rows cols`, then one
    /// line of space-separated decimal integers per row. Lines starting with
    /// `#` are comments.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "missing header line".into(),
        })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: hline,
                msg: format!("bad dimension: {e}"),
            })?;
        if dims.len() != 2 {
            return Err(Error::Parse {
                line: hline,
                msg: "header must be `rows cols`".into(),
            });
        }
        let (rows, cols) = (dims[0], dims[1]);
        let mut entries = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for (lno, line) in lines {
            if seen == rows {
                return Err(Error::Parse {
                    line: lno,
                    msg: format!("more than {rows} rows"),
                });
            }
            let before = entries.len();
            for tok in line.split_whitespace() {
                let v = BigInt::from_str(tok).map_err(|_| Error::Parse {
                    line: lno,
                    msg: format!("not an integer: {tok:?}"),
                })?;
                entries.push(v);
            }
            if entries.len() - before != cols {
                return Err(Error::Parse {
                    line: lno,
                    msg: format!("expected {cols} entries, found {}", entries.len() - before),
                });
            }
            seen += 1;
        }
        if seen != rows {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {rows} rows, found {seen}"),
            });
        }
        Self::new(rows, cols, entries)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|e| e.to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for IntMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_text(s)
    }
}

fn require_square(a: &IntMatrix) -> Result<usize> {
    if a.is_square() {
        Ok(a.rows)
    } else {
        Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        })
    }
}

/// Smallest integer `s` with `s*s >= x` for `x >= 0`.
pub(crate) fn ceil_sqrt(x: &BigInt) -> BigInt {
    let s = x.sqrt();
    if &(&s * &s) < x {
        s + 1
    } else {
        s
    }
}

/// Hadamard bound `⌈(√n·‖A‖)ⁿ⌉`, evaluated exactly as the ceiling square root
/// of `nⁿ·‖A‖²ⁿ`. A zero matrix gets the bound 1.
pub fn hadamard_bound(a: &IntMatrix) -> Result<BigInt> {
    let n = require_square(a)?;
    let norm = a.norm();
    if norm.is_zero() || n == 0 {
        return Ok(BigInt::one());
    }
    let sq = num_traits::pow(BigInt::from(n), n) * num_traits::pow(norm, 2 * n);
    Ok(ceil_sqrt(&sq))
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn bareiss_det(a: &IntMatrix) -> Result<BigInt> {
    let n = require_square(a)?;
    if n == 0 {
        return Ok(BigInt::one());
    }
    let mut m = a.to_rows();
    let mut prev = BigInt::one();
    let mut negate = false;
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    negate = !negate;
                }
                None => return Ok(BigInt::zero()),
            }
        }
        let (head, tail) = m.split_at_mut(k + 1);
        let pivot_row = &head[k];
        let pivot = &pivot_row[k];
        for row in tail.iter_mut() {
            for j in k + 1..n {
                let v = &row[j] * pivot - &row[k] * &pivot_row[j];
                debug_assert!((&v % &prev).is_zero());
                row[j] = v / &prev;
            }
            row[k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    Ok(if negate { -d } else { d })
}

/// Invariant factors `s₁ | s₂ | … | s_r` of an integer matrix of rank `r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmithForm {
    pub factors: Vec<BigInt>,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    /// `s_r`, the largest invariant factor (1 for the empty form).
    pub fn largest(&self) -> BigInt {
        self.factors.last().cloned().unwrap_or_else(BigInt::one)
    }

    /// Number of invariant factors greater than one.
    pub fn nontrivial_count(&self) -> usize {
        self.factors.iter().filter(|f| !f.is_one()).count()
    }

    /// Number of invariant factors divisible by `p`.
    pub fn count_divisible_by(&self, p: u64) -> usize {
        let p = BigInt::from(p);
        self.factors.iter().filter(|f| f.is_multiple_of(&p)).count()
    }

    /// Product of the `k` largest invariant factors, `π_k`.
    pub fn top_product(&self, k: usize) -> BigInt {
        self.factors.iter().rev().take(k).product()
    }

    pub fn product(&self) -> BigInt {
        self.factors.iter().product()
    }

    pub fn chain_holds(&self) -> bool {
        self.factors.iter().all(|f| f.is_positive())
            && self
                .factors
                .windows(2)
                .all(|w| w[1].is_multiple_of(&w[0]))
    }
}

fn sym_mod(x: &BigInt, m: &BigInt) -> BigInt {
    let r = x.mod_floor(m);
    if &r + &r > *m {
        r - m
    } else {
        r
    }
}

/// Smith normal form by repeated Euclidean row/column reduction on the entry
/// of smallest magnitude. For a nonsingular square input the work is carried
/// out modulo `|det A|`, which keeps intermediate entries bounded; the
/// resulting diagonal is mapped back through `gcd(·, |det A|)`.
pub fn smith_form(a: &IntMatrix) -> SmithForm {
    let modulus = if a.is_square() && a.rows > 0 {
        let d = bareiss_det(a).expect("square").abs();
        (!d.is_zero()).then_some(d)
    } else {
        None
    };
    let diag = smith_diagonal(a.to_rows(), a.cols, modulus.as_ref());
    let factors = match &modulus {
        Some(d) => diag
            .into_iter()
            .map(|v| if v.is_zero() { d.clone() } else { v.gcd(d) })
            .collect(),
        None => diag
            .into_iter()
            .filter(|v| !v.is_zero())
            .map(|v| v.abs())
            .collect(),
    };
    SmithForm { factors }
}

fn smith_diagonal(
    mut m: Vec<Vec<BigInt>>,
    cols: usize,
    modulus: Option<&BigInt>,
) -> Vec<BigInt> {
    let rows = m.len();
    let reduce = |v: BigInt| match modulus {
        Some(d) => sym_mod(&v, d),
        None => v,
    };
    for row in m.iter_mut() {
        for v in row.iter_mut() {
            *v = reduce(std::mem::take(v));
        }
    }
    let steps = rows.min(cols);
    let mut diag = Vec::with_capacity(steps);
    for t in 0..steps {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if m[i][j].is_zero() {
                        continue;
                    }
                    if best.map_or(true, |(bi, bj)| m[i][j].magnitude() < m[bi][bj].magnitude())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                diag.extend(std::iter::repeat(BigInt::zero()).take(steps - t));
                return diag;
            };
            m.swap(t, pi);
            if pj != t {
                for row in m.iter_mut() {
                    row.swap(t, pj);
                }
            }
            let pivot = m[t][t].clone();
            let mut clean = true;
            for i in t + 1..rows {
                if m[i][t].is_zero() {
                    continue;
                }
                let q = m[i][t].div_floor(&pivot);
                for j in t..cols {
                    let v = &m[i][j] - &q * &m[t][j];
                    m[i][j] = reduce(v);
                }
                clean &= m[i][t].is_zero();
            }
            for j in t + 1..cols {
                if m[t][j].is_zero() {
                    continue;
                }
                let q = m[t][j].div_floor(&pivot);
                for row in m.iter_mut().skip(t) {
                    let v = &row[j] - &q * &row[t];
                    row[j] = reduce(v);
                }
                clean &= m[t][j].is_zero();
            }
            if !clean {
                continue;
            }
            let offender = (t + 1..rows).find(|&i| {
                m[i][t + 1..cols]
                    .iter()
                    .any(|v| !v.is_multiple_of(&pivot))
            });
            match offender {
                Some(i) => {
                    for j in t..cols {
                        let v = &m[t][j] + &m[i][j];
                        m[t][j] = reduce(v);
                    }
                }
                None => break,
            }
        }
        diag.push(m[t][t].abs());
    }
    diag
}

fn uniform_entry(rng: &mut impl Rng, lambda: u64) -> i64 {
    let lo = -((lambda / 2) as i64);
    let hi = lambda.div_ceil(2) as i64;
    rng.gen_range(lo..=hi)
}

/// Random `rows x cols` matrix with entries uniform on
/// `{−⌊λ/2⌋, …, ⌈λ/2⌉}` (λ+1 values), drawn from `rng`.
pub fn gen_random_with(rows: usize, cols: usize, lambda: u64, rng: &mut impl Rng) -> IntMatrix {
    let lambda = lambda.max(1);
    let entries = (0..rows * cols)
        .map(|_| BigInt::from(uniform_entry(rng, lambda)))
        .collect();
    IntMatrix {
        rows,
        cols,
        entries,
    }
}

/// Seeded `n x n` random matrix with entries uniform on `{−⌊λ/2⌋, …, ⌈λ/2⌉}`.
pub fn gen_random(n: usize, lambda: u64, seed: u64) -> IntMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_random_with(n, n, lambda, &mut rng)
}

enum Side {
    Rows,
    Cols,
}

// row_i += c * row_j (or the column analogue) with c in {-2,-1,1,2}.
fn elementary_ops(m: &mut IntMatrix, count: usize, side: Side, rng: &mut impl Rng) {
    let n = m.rows;
    if n < 2 {
        return;
    }
    for _ in 0..count {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let c = match rng.gen_range(0..4) {
            0 => -2,
            1 => -1,
            2 => 1,
            _ => 2,
        };
        let c = BigInt::from(c);
        match side {
            Side::Rows => {
                for k in 0..m.cols {
                    let v = m.get(j, k) * &c;
                    if !v.is_zero() {
                        m.entries[i * m.cols + k] += v;
                    }
                }
            }
            Side::Cols => {
                for k in 0..m.rows {
                    let v = m.get(k, j) * &c;
                    if !v.is_zero() {
                        m.entries[k * m.cols + i] += v;
                    }
                }
            }
        }
    }
}

fn random_sign_flip(m: &mut IntMatrix, rng: &mut impl Rng) {
    if m.rows > 0 && rng.gen_bool(0.5) {
        let i = rng.gen_range(0..m.rows);
        for k in 0..m.cols {
            let v = -m.get(i, k).clone();
            m.set(i, k, v);
        }
    }
}

/// `U·diag(1, 2, …, n)·V` for seeded random unimodular `U`, `V`; the result
/// has the Smith form of `diag(1..n)` and `|det| = n!`.
pub fn gen_engineered(n: usize, seed: u64) -> IntMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag: Vec<BigInt> = (1..=n as u64).map(BigInt::from).collect();
    let mut m = IntMatrix::diagonal(&diag);
    elementary_ops(&mut m, 2 * n, Side::Rows, &mut rng);
    elementary_ops(&mut m, 2 * n, Side::Cols, &mut rng);
    random_sign_flip(&mut m, &mut rng);
    m
}

/// Product of `4n` elementary matrices with coefficients in `{−2..2}`, so the
/// determinant is `±1`.
pub fn gen_unimodular(n: usize, seed: u64) -> IntMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = IntMatrix::identity(n);
    elementary_ops(&mut m, 2 * n, Side::Rows, &mut rng);
    elementary_ops(&mut m, 2 * n, Side::Cols, &mut rng);
    random_sign_flip(&mut m, &mut rng);
    m
}

/// Bit length of `|x|` (0 for zero).
pub fn bit_length(x: &BigInt) -> u64 {
    x.bits()
}

/// `⌈log₂ x⌉` for `x ≥ 1`.
pub fn ceil_log2(x: &BigInt) -> u64 {
    debug_assert!(x.sign() == Sign::Plus);
    (x - 1u32).bits()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(rows).unwrap()
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    // Laplace expansion along the first row; only for tiny matrices.
    fn cofactor_det(a: &IntMatrix) -> BigInt {
        let n = a.rows();
        if n == 0 {
            return BigInt::one();
        }
        if n == 1 {
            return a.get(0, 0).clone();
        }
        let mut total = BigInt::zero();
        for c in 0..n {
            let mut minor = Vec::new();
            for i in 1..n {
                for j in 0..n {
                    if j != c {
                        minor.push(a.get(i, j).clone());
                    }
                }
            }
            let sub = IntMatrix::new(n - 1, n - 1, minor).unwrap();
            let term = a.get(0, c) * cofactor_det(&sub);
            if c % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
        total
    }

    #[test]
    fn hadamard_examples() {
        assert_eq!(hadamard_bound(&m(&[&[1, 0], &[1, 1]])).unwrap(), BigInt::from(2));
        assert_eq!(hadamard_bound(&IntMatrix::identity(3)).unwrap(), BigInt::from(6));
        assert_eq!(hadamard_bound(&IntMatrix::zeros(4, 4)).unwrap(), BigInt::one());
        assert!(matches!(
            hadamard_bound(&IntMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn bareiss_examples() {
        assert_eq!(bareiss_det(&m(&[&[1, 2], &[3, 4]])).unwrap(), BigInt::from(-2));
        assert_eq!(bareiss_det(&IntMatrix::identity(5)).unwrap(), BigInt::one());
        let a = gen_random(6, 16, 7);
        assert_eq!(bareiss_det(&a).unwrap(), cofactor_det(&a));
        assert_eq!(bareiss_det(&m(&[&[0, 1], &[1, 0]])).unwrap(), BigInt::from(-1));
        assert_eq!(bareiss_det(&m(&[&[1, 2], &[2, 4]])).unwrap(), BigInt::zero());
    }

    #[test]
    fn bareiss_matches_cofactor_on_small_random() {
        for seed in 0..60 {
            let n = 1 + (seed as usize % 6);
            let a = gen_random(n, [1, 4, 16][seed as usize % 3], seed);
            assert_eq!(bareiss_det(&a).unwrap(), cofactor_det(&a), "seed {seed}");
        }
    }

    #[test]
    fn smith_examples() {
        let d = |v: &[i64]| IntMatrix::diagonal(&big(v));
        assert_eq!(smith_form(&d(&[4, 6])).factors, big(&[2, 12]));
        assert_eq!(smith_form(&IntMatrix::identity(4)).factors, big(&[1, 1, 1, 1]));
        assert_eq!(smith_form(&d(&[1, 2, 3, 4])).factors, big(&[1, 1, 2, 12]));
        // rank-deficient and rectangular inputs use plain integer reduction
        assert_eq!(smith_form(&m(&[&[2, 4], &[4, 8]])).factors, big(&[2]));
        assert_eq!(smith_form(&m(&[&[2, 0, 0], &[0, 3, 0]])).factors, big(&[1, 6]));
    }

    #[test]
    fn smith_modular_agrees_with_plain_reduction() {
        for seed in 0..80 {
            let n = 2 + (seed as usize % 5);
            let a = gen_random(n, [1, 4, 16][seed as usize % 3], seed);
            let plain: Vec<BigInt> = smith_diagonal(a.to_rows(), n, None)
                .into_iter()
                .filter(|v| !v.is_zero())
                .collect();
            let sf = smith_form(&a);
            assert_eq!(plain, sf.factors, "seed {seed}");
        }
    }

    #[test]
    fn smith_product_matches_det_and_chain_holds() {
        for seed in 0..1000u64 {
            let n = 1 + (seed as usize % 10);
            let a = gen_random(n, [1, 4, 16][seed as usize % 3], seed);
            let sf = smith_form(&a);
            assert!(sf.chain_holds(), "seed {seed}");
            let det = bareiss_det(&a).unwrap();
            if !det.is_zero() {
                assert_eq!(sf.product(), det.abs(), "seed {seed}");
            }
        }
    }

    #[test]
    fn det_bounded_by_hadamard() {
        for seed in 0..200u64 {
            let n = 1 + (seed as usize % 12);
            let a = gen_random(n, 16, seed);
            assert!(bareiss_det(&a).unwrap().abs() <= hadamard_bound(&a).unwrap());
        }
    }

    #[test]
    fn generators() {
        let a = gen_random(12, 1, 3);
        assert!(a.entries().iter().all(|e| e.is_zero() || e.is_one()));
        let a = gen_random(12, 16, 3);
        assert!(a.entries().iter().all(|e| e.abs() <= BigInt::from(8)));
        assert!(a.entries().iter().any(|e| *e == BigInt::from(-8)));
        assert_eq!(gen_random(9, 16, 42), gen_random(9, 16, 42));
        assert_ne!(gen_random(9, 16, 42), gen_random(9, 16, 43));

        let e4 = gen_engineered(4, 11);
        assert_eq!(bareiss_det(&e4).unwrap().abs(), BigInt::from(24));
        assert_eq!(smith_form(&e4).factors, big(&[1, 1, 2, 12]));

        let diag6: Vec<BigInt> = (1..=6).map(BigInt::from).collect();
        let expected = smith_form(&IntMatrix::diagonal(&diag6));
        assert_eq!(
            smith_form(&gen_engineered(6, 5)).nontrivial_count(),
            expected.nontrivial_count()
        );

        for n in 1..12 {
            let u = gen_unimodular(n, n as u64);
            assert_eq!(bareiss_det(&u).unwrap().abs(), BigInt::one());
        }
        let u1 = gen_unimodular(1, 9);
        assert_eq!(u1.get(0, 0).abs(), BigInt::one());
        let sf = smith_form(&gen_unimodular(8, 1));
        assert!(sf.factors.iter().all(|f| f.is_one()));
    }

    #[test]
    fn engineered_smith_matches_diag_up_to_30() {
        for n in 1..=30usize {
            let diag: Vec<BigInt> = (1..=n as u64).map(BigInt::from).collect();
            let expected = smith_form(&IntMatrix::diagonal(&diag));
            assert_eq!(smith_form(&gen_engineered(n, 100 + n as u64)), expected, "n={n}");
        }
    }

    #[test]
    fn text_format() {
        let text = "# a comment\n2 3\n1 -2 3\n# another\n4 5 -6\n";
        let a = IntMatrix::parse_text(text).unwrap();
        assert_eq!(a, m(&[&[1, -2, 3], &[4, 5, -6]]));
        assert_eq!(a.to_text(), "2 3\n1 -2 3\n4 5 -6\n");
        assert_eq!(IntMatrix::parse_text(&a.to_text()).unwrap(), a);
        assert!(matches!(
            IntMatrix::parse_text("2 2\n1 2\n3\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(IntMatrix::parse_text("2 2\n1 x\n3 4\n"), Err(Error::Parse { .. })));
        assert!(matches!(IntMatrix::parse_text("2 2\n1 2\n"), Err(Error::Parse { .. })));
        assert!(IntMatrix::parse_text("").is_err());
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(&BigInt::one()), 0);
        assert_eq!(ceil_log2(&BigInt::from(2)), 1);
        assert_eq!(ceil_log2(&BigInt::from(5)), 3);
        assert_eq!(ceil_log2(&(BigInt::one() << 100)), 100);
    }
}
