//! Exact modular arithmetic and the CRT isomorphisms between
//! `Z_{p_1^{e_1}} x ... x Z_{p_L^{e_L}}` and `Z/qZ`.
//!
//! Elements of `Z/qZ` are kept in the canonical range `[0, q)`; [`centered`]
//! gives the `(-q/2, q/2]` view used by channel-facing code.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on `q`.
pub const DEFAULT_MODULUS_CAP: u64 = 1 << 31;

/// Largest `q` for which an exhaustive homomorphism sweep is allowed.
pub const EXHAUSTIVE_CHECK_CAP: u64 = 10_000;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Extended Euclid: returns `(g, x, y)` with `a*x + b*y = g = gcd(a, b)`.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let quotient = old_r / r;
        (old_r, r) = (r, old_r - quotient * r);
        (old_s, s) = (s, old_s - quotient * s);
        (old_t, t) = (t, old_t - quotient * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Inverse of `a` modulo `m` in `[0, m)`, if it exists.
pub fn mod_inverse(a: i128, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let m = m as i128;
    let (g, x, _) = ext_gcd(a.rem_euclid(m), m);
    (g == 1).then(|| x.rem_euclid(m) as u64)
}

/// Canonical representative of `x` in `[0, q)`.
pub fn reduce(x: i128, q: u64) -> u64 {
    x.rem_euclid(q as i128) as u64
}

/// Centered representative of `x` in `(-q/2, q/2]`.
pub fn centered(x: i128, q: u64) -> i64 {
    let r = reduce(x, q) as i128;
    let q = q as i128;
    if 2 * r > q {
        (r - q) as i64
    } else {
        r as i64
    }
}

/// One factor `p^e` of the modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimePower {
    pub prime: u64,
    pub exponent: u32,
}

impl PrimePower {
    pub fn new(prime: u64, exponent: u32) -> Self {
        PrimePower { prime, exponent }
    }

    pub fn prime(prime: u64) -> Self {
        PrimePower { prime, exponent: 1 }
    }

    /// `p^e`; callers go through [`PrimeTower`], which has already checked
    /// that this fits.
    pub fn modulus(&self) -> u64 {
        self.prime.pow(self.exponent)
    }
}

/// Ordered list of distinct prime powers with `q = prod p_l^{e_l}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PrimePower>", into = "Vec<PrimePower>")]
pub struct PrimeTower {
    levels: Vec<PrimePower>,
    moduli: Vec<u64>,
    q: u64,
}

impl PrimeTower {
    pub fn new(levels: Vec<PrimePower>) -> Result<Self> {
        Self::with_cap(levels, DEFAULT_MODULUS_CAP)
    }

    pub fn with_cap(levels: Vec<PrimePower>, cap: u64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidTower("at least one level is required".into()));
        }
        let mut q: u64 = 1;
        let mut moduli = Vec::with_capacity(levels.len());
        for (i, level) in levels.iter().enumerate() {
            if !is_prime(level.prime) {
                return Err(Error::InvalidTower(format!("{} is not prime", level.prime)));
            }
            if level.exponent == 0 {
                return Err(Error::InvalidTower(format!(
                    "exponent of {} must be positive",
                    level.prime
                )));
            }
            if levels[..i].iter().any(|l| l.prime == level.prime) {
                return Err(Error::InvalidTower(format!("prime {} appears twice", level.prime)));
            }
            let m = level
                .prime
                .checked_pow(level.exponent)
                .ok_or_else(|| Error::Overflow(format!("{}^{}", level.prime, level.exponent)))?;
            q = q
                .checked_mul(m)
                .ok_or_else(|| Error::Overflow("product of prime powers".into()))?;
            if q > cap {
                return Err(Error::cap("modulus q", q, cap));
            }
            moduli.push(m);
        }
        Ok(PrimeTower { levels, moduli, q })
    }

    /// Tower of distinct primes, all with exponent one.
    pub fn square_free(primes: &[u64]) -> Result<Self> {
        Self::new(primes.iter().map(|&p| PrimePower::prime(p)).collect())
    }

    /// Tower from the prime factorization of `q`, primes ascending.
    pub fn factor(q: u64) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidTower(format!("cannot factor {q}")));
        }
        Self::new(factorize(q))
    }

    pub fn levels(&self) -> &[PrimePower] {
        &self.levels
    }

    /// `p_l^{e_l}` for every level.
    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// All exponents are one (a Construction pi_A tower).
    pub fn is_square_free(&self) -> bool {
        self.levels.iter().all(|l| l.exponent == 1)
    }
}

impl TryFrom<Vec<PrimePower>> for PrimeTower {
    type Error = Error;

    fn try_from(levels: Vec<PrimePower>) -> Result<Self> {
        PrimeTower::new(levels)
    }
}

impl From<PrimeTower> for Vec<PrimePower> {
    fn from(tower: PrimeTower) -> Self {
        tower.levels
    }
}

/// Prime factorization by trial division, primes ascending.
pub fn factorize(mut n: u64) -> Vec<PrimePower> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push(PrimePower::new(d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(PrimePower::prime(n));
    }
    out
}

pub fn is_square_free(n: u64) -> bool {
    n >= 2 && factorize(n).iter().all(|f| f.exponent == 1)
}

/// Bezout coefficients `a_l` with `sum a_l q_l = 1 (mod q)`, `q_l = q / p_l^{e_l}`,
/// each reduced into `(-m_l/2, m_l/2]`.
pub fn bezout_coefficients(tower: &PrimeTower) -> Vec<i64> {
    let q = tower.q();
    tower
        .moduli()
        .iter()
        .map(|&m| {
            let partial = q / m;
            let inv = mod_inverse(partial as i128, m).expect("partial products of a valid tower are units");
            centered(inv as i128, m)
        })
        .collect()
}

/// Which algebraic structure the map preserves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Ring isomorphism built from Bezout coefficients.
    RingIso,
    /// `M(v) = sum v_l q_l`; additive only.
    ZModuleIso,
}

/// How the exhaustive/randomized homomorphism check samples pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Exhaustive,
    Random { pairs: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HomomorphismReport {
    pub pairs_checked: u64,
    pub additive: bool,
    /// `false` when multiplicativity was not checked (Z-module maps).
    pub multiplicative: bool,
}

/// The isomorphism `M: x_l Z_{p_l^{e_l}} -> Z/qZ` and its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CrtMapRepr", into = "CrtMapRepr")]
pub struct CrtMap {
    tower: PrimeTower,
    kind: MapKind,
    coefficients: Vec<i64>,
    partial_products: Vec<u64>,
    /// `a_l q_l mod q`, the weight of level `l` in the forward map.
    weights: Vec<u64>,
    /// `(a_l q_l)^{-1} mod m_l`; all ones for a ring isomorphism.
    unit_inverses: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CrtMapRepr {
    tower: PrimeTower,
    kind: MapKind,
    coefficients: Vec<i64>,
}

impl TryFrom<CrtMapRepr> for CrtMap {
    type Error = Error;

    fn try_from(r: CrtMapRepr) -> Result<Self> {
        CrtMap::with_coefficients(r.tower, r.coefficients, r.kind)
    }
}

impl From<CrtMap> for CrtMapRepr {
    fn from(m: CrtMap) -> Self {
        CrtMapRepr {
            tower: m.tower,
            kind: m.kind,
            coefficients: m.coefficients,
        }
    }
}

impl CrtMap {
    /// Ring isomorphism from Bezout coefficients.
    pub fn ring_iso(tower: PrimeTower) -> Self {
        let coefficients = bezout_coefficients(&tower);
        Self::with_coefficients(tower, coefficients, MapKind::RingIso)
            .expect("Bezout coefficients always satisfy the identity")
    }

    /// Ring isomorphism obtained by labeling each `x in Z/qZ` with its
    /// residues `(x mod m_1, ..., x mod m_L)`.
    ///
    /// As a function this coincides with [`CrtMap::ring_iso`]; only the stored
    /// coefficients differ (canonical `[0, m_l)` instead of centered).
    pub fn natural_labeling(tower: PrimeTower) -> Self {
        let q = tower.q();
        let coefficients = tower
            .moduli()
            .iter()
            .map(|&m| mod_inverse((q / m) as i128, m).unwrap_or(0) as i64)
            .collect();
        Self::with_coefficients(tower, coefficients, MapKind::RingIso).expect("labeling inverse satisfies the identity")
    }

    /// Z-module isomorphism with all coefficients one.
    pub fn z_module_iso(tower: PrimeTower) -> Self {
        let coefficients = vec![1; tower.len()];
        Self::with_coefficients(tower, coefficients, MapKind::ZModuleIso)
            .expect("partial products are units modulo their level")
    }

    pub fn new(tower: PrimeTower, kind: MapKind) -> Self {
        match kind {
            MapKind::RingIso => Self::ring_iso(tower),
            MapKind::ZModuleIso => Self::z_module_iso(tower),
        }
    }

    /// Map with explicit coefficients. Every `a_l q_l` must be a unit modulo
    /// `m_l`; a ring isomorphism additionally needs `sum a_l q_l = 1 (mod q)`.
    pub fn with_coefficients(tower: PrimeTower, coefficients: Vec<i64>, kind: MapKind) -> Result<Self> {
        if coefficients.len() != tower.len() {
            return Err(Error::DimensionMismatch {
                expected: tower.len(),
                actual: coefficients.len(),
            });
        }
        let q = tower.q();
        let partial_products: Vec<u64> = tower.moduli().iter().map(|&m| q / m).collect();
        let mut weights = Vec::with_capacity(tower.len());
        let mut unit_inverses = Vec::with_capacity(tower.len());
        for ((&a, &ql), &m) in coefficients.iter().zip(&partial_products).zip(tower.moduli()) {
            let w = reduce(a as i128 * ql as i128, q);
            let inv = mod_inverse(w as i128, m)
                .ok_or_else(|| Error::InvalidMap(format!("a*q_l = {w} is not a unit modulo {m}")))?;
            weights.push(w);
            unit_inverses.push(inv);
        }
        if kind == MapKind::RingIso {
            let total = weights.iter().fold(0u128, |acc, &w| acc + w as u128) % q as u128;
            if total != 1 % q as u128 {
                return Err(Error::InvalidMap(format!(
                    "Bezout identity fails: sum a_l q_l = {total} (mod {q})"
                )));
            }
        }
        Ok(CrtMap {
            tower,
            kind,
            coefficients,
            partial_products,
            weights,
            unit_inverses,
        })
    }

    pub fn tower(&self) -> &PrimeTower {
        &self.tower
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.coefficients
    }

    pub fn partial_products(&self) -> &[u64] {
        &self.partial_products
    }

    /// `a_l q_l mod q` for each level.
    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    /// `a_l q_l mod m_l`: the unit by which `M(v) mod m_l` scales `v_l`.
    pub fn level_unit(&self, level: usize) -> u64 {
        self.weights[level] % self.tower.moduli()[level]
    }

    pub fn q(&self) -> u64 {
        self.tower.q()
    }

    pub fn levels(&self) -> usize {
        self.tower.len()
    }

    /// `M(v_1, ..., v_L)` in `[0, q)`.
    pub fn forward(&self, residues: &[u64]) -> Result<u64> {
        if residues.len() != self.levels() {
            return Err(Error::DimensionMismatch {
                expected: self.levels(),
                actual: residues.len(),
            });
        }
        for (&v, &m) in residues.iter().zip(self.tower.moduli()) {
            if v >= m {
                return Err(Error::OutOfRange {
                    value: v as i128,
                    modulus: m,
                });
            }
        }
        Ok(self.forward_unchecked(residues))
    }

    /// Forward map without range checks; residues may be any non-negative value.
    pub fn forward_unchecked(&self, residues: &[u64]) -> u64 {
        let q = self.q() as u128;
        let sum = residues
            .iter()
            .zip(&self.weights)
            .fold(0u128, |acc, (&v, &w)| (acc + v as u128 * w as u128) % q);
        sum as u64
    }

    /// `M^{-1}(x)` for `x` in `[0, q)`.
    pub fn inverse(&self, x: u64) -> Result<Vec<u64>> {
        if x >= self.q() {
            return Err(Error::OutOfRange {
                value: x as i128,
                modulus: self.q(),
            });
        }
        Ok(self.sigma(x as i64))
    }

    /// `sigma = M^{-1} o (mod q)`, defined on all integers.
    pub fn sigma(&self, x: i64) -> Vec<u64> {
        (0..self.levels()).map(|l| self.sigma_level(x, l)).collect()
    }

    /// Level-`l` component of `sigma(x)`.
    pub fn sigma_level(&self, x: i64, level: usize) -> u64 {
        let m = self.tower.moduli()[level];
        let r = reduce(x as i128, m);
        match self.kind {
            MapKind::RingIso => r,
            MapKind::ZModuleIso => ((r as u128 * self.unit_inverses[level] as u128) % m as u128) as u64,
        }
    }

    /// Componentwise forward map of a tuple of equal-length level words.
    pub fn forward_words(&self, words: &[&[u64]]) -> Vec<u64> {
        let n = words.first().map_or(0, |w| w.len());
        let mut out = vec![0u64; n];
        let q = self.q() as u128;
        for (word, &w) in words.iter().zip(&self.weights) {
            for (o, &v) in out.iter_mut().zip(word.iter()) {
                *o = ((*o as u128 + v as u128 * w as u128) % q) as u64;
            }
        }
        out
    }

    /// Checks that the forward map hits every element of `Z/qZ` exactly once.
    pub fn check_bijective(&self) -> Result<()> {
        let q = self.q();
        if q > EXHAUSTIVE_CHECK_CAP * 100 {
            return Err(Error::cap("q for bijectivity sweep", q, EXHAUSTIVE_CHECK_CAP * 100));
        }
        let moduli = self.tower.moduli();
        let mut seen = vec![false; q as usize];
        let mut residues = vec![0u64; moduli.len()];
        loop {
            let x = self.forward_unchecked(&residues) as usize;
            if seen[x] {
                return Err(Error::Invariant(format!("M is not injective: {x} hit twice")));
            }
            seen[x] = true;
            if !advance(&mut residues, moduli) {
                break;
            }
        }
        Ok(())
    }

    /// Verifies `sigma(a+b) = sigma(a) + sigma(b)` and, for ring isomorphisms,
    /// `sigma(ab) = sigma(a) sigma(b)`.
    pub fn check_homomorphism(&self, mode: CheckMode) -> Result<HomomorphismReport> {
        let q = self.q();
        let multiplicative = self.kind == MapKind::RingIso;
        match mode {
            CheckMode::Exhaustive => {
                if q > EXHAUSTIVE_CHECK_CAP {
                    return Err(Error::cap("q for exhaustive check", q, EXHAUSTIVE_CHECK_CAP));
                }
                let table = self.sigma_table();
                (0..q).into_par_iter().try_for_each(|a| {
                    for b in 0..q {
                        self.check_pair(&table, a, b, multiplicative)?;
                    }
                    Ok(())
                })?;
                Ok(HomomorphismReport {
                    pairs_checked: q * q,
                    additive: true,
                    multiplicative,
                })
            }
            CheckMode::Random { pairs, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..pairs {
                    let a = rng.random_range(0..q);
                    let b = rng.random_range(0..q);
                    self.check_pair_direct(a, b, multiplicative)?;
                }
                Ok(HomomorphismReport {
                    pairs_checked: pairs,
                    additive: true,
                    multiplicative,
                })
            }
        }
    }

    fn sigma_table(&self) -> Vec<u64> {
        let levels = self.levels();
        let mut table = Vec::with_capacity(self.q() as usize * levels);
        for x in 0..self.q() {
            for l in 0..levels {
                table.push(self.sigma_level(x as i64, l));
            }
        }
        table
    }

    fn check_pair(&self, table: &[u64], a: u64, b: u64, multiplicative: bool) -> Result<()> {
        let q = self.q();
        let levels = self.levels();
        let moduli = self.tower.moduli();
        let sa = &table[a as usize * levels..(a as usize + 1) * levels];
        let sb = &table[b as usize * levels..(b as usize + 1) * levels];
        let sum = (a + b) % q;
        let ss = &table[sum as usize * levels..(sum as usize + 1) * levels];
        for l in 0..levels {
            if ss[l] != (sa[l] + sb[l]) % moduli[l] {
                return Err(Error::HomomorphismViolation {
                    a,
                    b,
                    operation: "addition",
                });
            }
        }
        if multiplicative {
            let prod = ((a as u128 * b as u128) % q as u128) as usize;
            let sp = &table[prod * levels..(prod + 1) * levels];
            for l in 0..levels {
                if sp[l] as u128 != (sa[l] as u128 * sb[l] as u128) % moduli[l] as u128 {
                    return Err(Error::HomomorphismViolation {
                        a,
                        b,
                        operation: "multiplication",
                    });
                }
            }
        }
        Ok(())
    }

    fn check_pair_direct(&self, a: u64, b: u64, multiplicative: bool) -> Result<()> {
        let q = self.q() as u128;
        let moduli = self.tower.moduli();
        let sa = self.sigma(a as i64);
        let sb = self.sigma(b as i64);
        let ss = self.sigma(((a as u128 + b as u128) % q) as i64);
        for l in 0..self.levels() {
            if ss[l] != (sa[l] + sb[l]) % moduli[l] {
                return Err(Error::HomomorphismViolation {
                    a,
                    b,
                    operation: "addition",
                });
            }
        }
        if multiplicative {
            let sp = self.sigma(((a as u128 * b as u128) % q) as i64);
            for l in 0..self.levels() {
                if sp[l] as u128 != (sa[l] as u128 * sb[l] as u128) % moduli[l] as u128 {
                    return Err(Error::HomomorphismViolation {
                        a,
                        b,
                        operation: "multiplication",
                    });
                }
            }
        }
        Ok(())
    }
}

/// Odometer increment over the mixed-radix digits `digits[i] < radices[i]`.
/// Returns `false` after wrapping back to all zeros.
pub(crate) fn advance(digits: &mut [u64], radices: &[u64]) -> bool {
    for (d, &r) in digits.iter_mut().zip(radices) {
        *d += 1;
        if *d < r {
            return true;
        }
        *d = 0;
    }
    false
}
