//! Linear codes over `Z_{p^e}`.
//!
//! Generators follow the column convention: a generator has shape `n x k`
//! and the codeword of message `y` is `G y (mod p^e)`. Much of the coding
//! literature uses the transpose.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{advance, factorize, PrimePower};
use crate::error::{Error, Result};

/// Default bound on `(p^e)^k` for enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "CodeRepr", into = "CodeRepr")]
pub struct LinearCode {
    ring: PrimePower,
    modulus: u64,
    n: usize,
    k: usize,
    /// Row-major `n x k`.
    generator: Vec<u64>,
    codebook: OnceLock<Vec<Vec<u64>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodeRepr {
    modulus: u64,
    n: usize,
    k: usize,
    generator: Vec<u64>,
}

impl TryFrom<CodeRepr> for LinearCode {
    type Error = Error;

    fn try_from(r: CodeRepr) -> Result<Self> {
        LinearCode::new(r.modulus, r.n, r.k, r.generator)
    }
}

impl From<LinearCode> for CodeRepr {
    fn from(c: LinearCode) -> Self {
        CodeRepr {
            modulus: c.modulus,
            n: c.n,
            k: c.k,
            generator: c.generator,
        }
    }
}

impl PartialEq for LinearCode {
    fn eq(&self, other: &Self) -> bool {
        self.modulus == other.modulus && self.n == other.n && self.k == other.k && self.generator == other.generator
    }
}

impl Eq for LinearCode {}

impl LinearCode {
    /// Code over `Z_modulus` (a prime power) from a row-major `n x k` generator.
    pub fn new(modulus: u64, n: usize, k: usize, generator: Vec<u64>) -> Result<Self> {
        let factors = factorize(modulus);
        if modulus < 2 || factors.len() != 1 {
            return Err(Error::InvalidCode(format!("modulus {modulus} is not a prime power")));
        }
        if k > n {
            return Err(Error::InvalidCode(format!("k = {k} exceeds n = {n}")));
        }
        if generator.len() != n * k {
            return Err(Error::DimensionMismatch {
                expected: n * k,
                actual: generator.len(),
            });
        }
        if let Some(&bad) = generator.iter().find(|&&g| g >= modulus) {
            return Err(Error::OutOfRange {
                value: bad as i128,
                modulus,
            });
        }
        Ok(LinearCode {
            ring: factors[0],
            modulus,
            n,
            k,
            generator,
            codebook: OnceLock::new(),
        })
    }

    /// Code from generator rows (each of length `k`).
    pub fn from_rows(modulus: u64, rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: bad.len(),
            });
        }
        Self::new(modulus, n, k, rows.concat())
    }

    /// Generator with i.i.d. uniform entries, deterministic in `seed`.
    pub fn random(n: usize, k: usize, modulus: u64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(n, k, modulus, &mut rng)
    }

    pub fn random_with<R: Rng + ?Sized>(n: usize, k: usize, modulus: u64, rng: &mut R) -> Result<Self> {
        let generator = (0..n * k).map(|_| rng.random_range(0..modulus)).collect();
        Self::new(modulus, n, k, generator)
    }

    /// The whole space `Z_modulus^n` (identity generator).
    pub fn full(n: usize, modulus: u64) -> Result<Self> {
        let mut g = vec![0; n * n];
        for i in 0..n {
            g[i * n + i] = 1;
        }
        Self::new(modulus, n, n, g)
    }

    /// The zero code (`k = 0`).
    pub fn zero(n: usize, modulus: u64) -> Result<Self> {
        Self::new(modulus, n, 0, Vec::new())
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn prime(&self) -> u64 {
        self.ring.prime
    }

    pub fn exponent(&self) -> u32 {
        self.ring.exponent
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Row-major `n x k` generator.
    pub fn generator(&self) -> &[u64] {
        &self.generator
    }

    pub fn entry(&self, row: usize, col: usize) -> u64 {
        self.generator[row * self.k + col]
    }

    /// First `cols` columns as a new code.
    pub fn prefix_columns(&self, cols: usize) -> Result<Self> {
        if cols > self.k {
            return Err(Error::InvalidCode(format!(
                "{cols} columns requested from k = {}",
                self.k
            )));
        }
        let g = (0..self.n)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| self.entry(i, j))
            .collect();
        Self::new(self.modulus, self.n, cols, g)
    }

    /// Number of messages, `(p^e)^k`, if it fits in a `u64`.
    pub fn message_count(&self) -> Option<u64> {
        self.modulus.checked_pow(self.k as u32)
    }

    pub fn encode(&self, message: &[u64]) -> Result<Vec<u64>> {
        if message.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                actual: message.len(),
            });
        }
        if let Some(&bad) = message.iter().find(|&&m| m >= self.modulus) {
            return Err(Error::OutOfRange {
                value: bad as i128,
                modulus: self.modulus,
            });
        }
        Ok(self.encode_unchecked(message))
    }

    pub(crate) fn encode_unchecked(&self, message: &[u64]) -> Vec<u64> {
        let m = self.modulus as u128;
        (0..self.n)
            .map(|i| {
                let row = &self.generator[i * self.k..(i + 1) * self.k];
                (row.iter()
                    .zip(message)
                    .fold(0u128, |acc, (&g, &y)| (acc + g as u128 * y as u128) % m)) as u64
            })
            .collect()
    }

    /// Uniformly random message.
    pub fn random_message<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        (0..self.k).map(|_| rng.random_range(0..self.modulus)).collect()
    }

    /// All distinct codewords, sorted lexicographically. Cached after the
    /// first call.
    pub fn codewords(&self) -> Result<&[Vec<u64>]> {
        self.codewords_with_cap(DEFAULT_ENUMERATION_CAP)
    }

    pub fn codewords_with_cap(&self, cap: u64) -> Result<&[Vec<u64>]> {
        if let Some(words) = self.codebook.get() {
            return Ok(words);
        }
        let count = self
            .message_count()
            .ok_or_else(|| Error::cap("code message count", u128::MAX, cap))?;
        if count > cap {
            return Err(Error::cap("code message count", count, cap));
        }
        Ok(self.codebook.get_or_init(|| self.enumerate_all()))
    }

    fn enumerate_all(&self) -> Vec<Vec<u64>> {
        let radices = vec![self.modulus; self.k];
        let mut message = vec![0u64; self.k];
        let mut words = Vec::new();
        loop {
            words.push(self.encode_unchecked(&message));
            if !advance(&mut message, &radices) {
                break;
            }
        }
        words.sort_unstable();
        words.dedup();
        words
    }

    /// Number of distinct codewords.
    pub fn size(&self) -> Result<usize> {
        Ok(self.codewords()?.len())
    }

    /// The generator is injective on messages.
    pub fn is_full_rank(&self) -> Result<bool> {
        if self.ring.exponent == 1 {
            return Ok(self.rank_mod_p() == self.k);
        }
        Ok(self.size()? as u64 == self.message_count().unwrap_or(u64::MAX))
    }

    /// Rank of `G mod p` over `F_p`.
    pub fn rank_mod_p(&self) -> usize {
        let p = self.ring.prime;
        let mut rows: Vec<Vec<u64>> = (0..self.n)
            .map(|i| (0..self.k).map(|j| self.entry(i, j) % p).collect())
            .collect();
        row_reduce(&mut rows, p)
    }

    /// Membership test. Row reduction over `F_p` when `e = 1`, enumeration
    /// otherwise.
    pub fn contains(&self, word: &[u64]) -> bool {
        if word.len() != self.n || word.iter().any(|&w| w >= self.modulus) {
            return false;
        }
        if word.iter().all(|&w| w == 0) {
            return true;
        }
        if self.ring.exponent == 1 {
            let p = self.ring.prime;
            let rank = self.rank_mod_p();
            let mut augmented: Vec<Vec<u64>> = (0..self.n)
                .map(|i| {
                    let mut r: Vec<u64> = (0..self.k).map(|j| self.entry(i, j)).collect();
                    r.push(word[i]);
                    r
                })
                .collect();
            return row_reduce(&mut augmented, p) == rank;
        }
        match self.codewords() {
            Ok(words) => words.binary_search_by(|w| w.as_slice().cmp(word)).is_ok(),
            Err(_) => {
                let radices = vec![self.modulus; self.k];
                let mut message = vec![0u64; self.k];
                loop {
                    if self.encode_unchecked(&message) == word {
                        return true;
                    }
                    if !advance(&mut message, &radices) {
                        return false;
                    }
                }
            }
        }
    }
}

/// Gaussian elimination over `F_p` on a list of rows; returns the rank.
fn row_reduce(rows: &mut [Vec<u64>], p: u64) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_multiple_of(p)) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = crate::algebra::mod_inverse(rows[rank][col] as i128, p).expect("p is prime");
        for v in rows[rank].iter_mut() {
            *v = (*v % p) * inv % p;
        }
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_multiple_of(p) {
                let factor = rows[r][col] % p;
                let pivot = rows[rank].clone();
                for (v, &b) in rows[r].iter_mut().zip(&pivot).take(cols) {
                    *v = (*v % p + p - factor * b % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Fine/coarse code pair where the coarse generator is the first `m_c`
/// columns of the fine one, so `C_c` is a subcode of `C_f`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PairRepr", into = "PairRepr")]
pub struct NestedCodePair {
    coarse: LinearCode,
    fine: LinearCode,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairRepr {
    coarse_dim: usize,
    fine: LinearCode,
}

impl TryFrom<PairRepr> for NestedCodePair {
    type Error = Error;

    fn try_from(r: PairRepr) -> Result<Self> {
        NestedCodePair::from_fine(r.fine, r.coarse_dim)
    }
}

impl From<NestedCodePair> for PairRepr {
    fn from(p: NestedCodePair) -> Self {
        PairRepr {
            coarse_dim: p.coarse.k(),
            fine: p.fine,
        }
    }
}

impl NestedCodePair {
    pub fn new(coarse: LinearCode, fine: LinearCode) -> Result<Self> {
        if coarse.modulus() != fine.modulus() || coarse.n() != fine.n() {
            return Err(Error::InvalidCode(
                "coarse and fine codes differ in ring or length".into(),
            ));
        }
        if coarse.k() > fine.k() {
            return Err(Error::InvalidCode(format!(
                "m_c = {} exceeds m_f = {}",
                coarse.k(),
                fine.k()
            )));
        }
        if fine.prefix_columns(coarse.k())? != coarse {
            return Err(Error::InvalidCode(
                "coarse generator is not a prefix of the fine generator".into(),
            ));
        }
        Ok(NestedCodePair { coarse, fine })
    }

    /// Pair whose coarse code uses the first `coarse_dim` columns of `fine`.
    pub fn from_fine(fine: LinearCode, coarse_dim: usize) -> Result<Self> {
        let coarse = fine.prefix_columns(coarse_dim)?;
        Ok(NestedCodePair { coarse, fine })
    }

    /// Random fine generator `[G_c G~]`, `n x m_f`.
    pub fn random(n: usize, m_c: usize, m_f: usize, modulus: u64, seed: u64) -> Result<Self> {
        if m_c > m_f {
            return Err(Error::InvalidCode(format!("m_c = {m_c} exceeds m_f = {m_f}")));
        }
        Self::from_fine(LinearCode::random(n, m_f, modulus, seed)?, m_c)
    }

    pub fn coarse(&self) -> &LinearCode {
        &self.coarse
    }

    pub fn fine(&self) -> &LinearCode {
        &self.fine
    }

    /// Message length `m_f - m_c`.
    pub fn message_len(&self) -> usize {
        self.fine.k() - self.coarse.k()
    }

    /// Fine codeword `G_f [0_{m_c}; w]`.
    pub fn encode_message(&self, w: &[u64]) -> Result<Vec<u64>> {
        if w.len() != self.message_len() {
            return Err(Error::DimensionMismatch {
                expected: self.message_len(),
                actual: w.len(),
            });
        }
        let mut full = vec![0u64; self.coarse.k()];
        full.extend_from_slice(w);
        self.fine.encode(&full)
    }

    /// `|C_f| / |C_c|`.
    pub fn quotient_size(&self) -> Result<usize> {
        Ok(self.fine.size()? / self.coarse.size()?)
    }
}
