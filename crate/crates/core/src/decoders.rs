//! Multistage (MSD), serial modulo (SMD) and parallel modulo (PMD) decoders
//! for multilevel lattices, plus successive digit decoding for levels over
//! chain rings `Z_{p^e}`.
//!
//! Decoders take `y` and `eta2` in the lattice's scaled coordinates and
//! work internally on the unscaled lattice.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{advance, mod_inverse, CrtMap};
use crate::codes::LinearCode;
use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, MultilevelLattice};

/// Noise variances below this are treated as this value.
pub const MIN_VARIANCE: f64 = 1e-12;
pub const DEFAULT_WRAPS: u32 = 3;
/// Bound on candidates times mixture terms per symbol.
pub const DEFAULT_DECODER_CAP: u64 = 1_000_000;

/// Gaussian density aliased onto `R / mZ`, truncated to `|k| <= wraps`
/// translates on each side of the centered argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrappedGaussian {
    variance: f64,
    period: f64,
    wraps: u32,
}

impl WrappedGaussian {
    pub fn new(variance: f64, period: f64, wraps: u32) -> Self {
        assert!(period > 0.0, "period must be positive");
        WrappedGaussian {
            variance: variance.max(MIN_VARIANCE),
            period,
            wraps,
        }
    }

    /// Raises the wrap count so that `wraps * period >= 8 sigma`.
    pub fn with_min_accuracy(variance: f64, period: f64, wraps: u32) -> Self {
        let sigma = variance.max(MIN_VARIANCE).sqrt();
        let needed = (8.0 * sigma / period).ceil() as u32;
        Self::new(variance, period, wraps.max(needed))
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn wraps(&self) -> u32 {
        self.wraps
    }

    pub fn logpdf(&self, z: f64) -> f64 {
        let m = self.period;
        let zc = (z - m * (z / m).round()).abs();
        let two_v = 2.0 * self.variance;
        let base = -zc * zc / two_v;
        // the k = 0 term dominates since |zc| <= m/2
        let mut tail = 1.0;
        for k in 1..=self.wraps as i32 {
            let km = k as f64 * m;
            tail += (-((zc + km).powi(2) - zc * zc) / two_v).exp();
            tail += (-((zc - km).powi(2) - zc * zc) / two_v).exp();
        }
        base + tail.ln() - 0.5 * (2.0 * PI * self.variance).ln()
    }

    pub fn pdf(&self, z: f64) -> f64 {
        self.logpdf(z).exp()
    }
}

/// `log(sum(exp(xs)))`.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Msd,
    Smd,
    Pmd,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 3] = [DecoderKind::Msd, DecoderKind::Smd, DecoderKind::Pmd];

    pub fn name(&self) -> &'static str {
        match self {
            DecoderKind::Msd => "msd",
            DecoderKind::Smd => "smd",
            DecoderKind::Pmd => "pmd",
        }
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "msd" => Ok(DecoderKind::Msd),
            "smd" => Ok(DecoderKind::Smd),
            "pmd" => Ok(DecoderKind::Pmd),
            other => Err(Error::InvalidParameter(format!("unknown decoder '{other}'"))),
        }
    }
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderOptions {
    /// Truncation `K` of every wrapped density.
    pub wraps: u32,
    pub cap: u64,
}

impl Default for DecoderOptions {
    fn default() -> Self {
        DecoderOptions {
            wraps: DEFAULT_WRAPS,
            cap: DEFAULT_DECODER_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// Decoded codeword of each level code.
    pub codewords: Vec<Vec<u64>>,
    /// Decoded integer level.
    pub integer_level: Vec<i64>,
    /// `M(c^1, ..., c^L) + q zeta`, unscaled.
    pub point: LatticePoint,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_level_success: Option<Vec<bool>>,
}

impl DecodeResult {
    /// Records which levels match the transmitted codewords.
    pub fn score_against(&mut self, truth: &[Vec<u64>]) -> &[bool] {
        let flags = self.codewords.iter().zip(truth).map(|(a, b)| a == b).collect();
        self.per_level_success.insert(flags)
    }
}

pub fn decode(
    kind: DecoderKind,
    lat: &MultilevelLattice,
    y: &[f64],
    eta2: f64,
    opts: &DecoderOptions,
) -> Result<DecodeResult> {
    match kind {
        DecoderKind::Msd => decode_msd(lat, y, eta2, opts),
        DecoderKind::Smd => decode_smd(lat, y, eta2, opts),
        DecoderKind::Pmd => decode_pmd(lat, y, eta2, opts),
    }
}

fn unscale(lat: &MultilevelLattice, y: &[f64], eta2: f64) -> Result<(Vec<f64>, f64)> {
    if y.len() != lat.n() {
        return Err(Error::DimensionMismatch {
            expected: lat.n(),
            actual: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) || eta2.is_nan() || eta2 < 0.0 {
        return Err(Error::InvalidParameter(
            "received word and variance must be finite".into(),
        ));
    }
    let s = lat.scale();
    Ok((y.iter().map(|v| v / s).collect(), eta2 / (s * s)))
}

fn finish(lat: &MultilevelLattice, y: &[f64], codewords: Vec<Vec<u64>>) -> DecodeResult {
    let words: Vec<&[u64]> = codewords.iter().map(|c| c.as_slice()).collect();
    let base = lat.map().forward_words(&words);
    let q = lat.q() as f64;
    let integer_level: Vec<i64> = y
        .iter()
        .zip(&base)
        .map(|(&yi, &b)| ((yi - b as f64) / q).round_ties_even() as i64)
        .collect();
    let point = base
        .iter()
        .zip(&integer_level)
        .map(|(&b, &z)| b as i64 + z * lat.q() as i64)
        .collect();
    DecodeResult {
        codewords,
        integer_level,
        point: LatticePoint(point),
        per_level_success: None,
    }
}

fn scale_word(word: &[u64], unit: u64, modulus: u64) -> Vec<u64> {
    word.iter()
        .map(|&c| ((c as u128 * unit as u128) % modulus as u128) as u64)
        .collect()
}

/// Parallel modulo decoder: every level sees `y mod p_s^{e_s}` with the
/// full noise variance.
pub fn decode_pmd(lat: &MultilevelLattice, y: &[f64], eta2: f64, opts: &DecoderOptions) -> Result<DecodeResult> {
    let (y, eta2) = unscale(lat, y, eta2)?;
    let map = lat.map();
    let mut codewords = Vec::with_capacity(map.levels());
    for (s, code) in lat.codes().iter().enumerate() {
        let m = code.modulus() as f64;
        let obs: Vec<f64> = y.iter().map(|v| v.rem_euclid(m)).collect();
        let scaled = decode_chainring_level(code, &obs, eta2, opts)?;
        let inv = mod_inverse(map.level_unit(s) as i128, code.modulus()).expect("level unit");
        codewords.push(scale_word(&scaled, inv, code.modulus()));
    }
    Ok(finish(lat, &y, codewords))
}

/// `d_s = (a_s q_s / prod_{l<s} m_l) mod m_s` for each level; the unit that
/// scales level `s` after the serial reductions.
pub fn smd_unit_factors(map: &CrtMap) -> Vec<u64> {
    let moduli = map.tower().moduli();
    let mut prefix: u64 = 1;
    let mut out = Vec::with_capacity(moduli.len());
    for (s, &m) in moduli.iter().enumerate() {
        // a_s q_s / P_s, with q_s / P_s an exact integer
        let a = map.coefficients()[s] as i128;
        let ratio = (map.partial_products()[s] / prefix) as i128;
        out.push((a * ratio).rem_euclid(m as i128) as u64);
        prefix *= m;
    }
    out
}

/// Serial modulo decoder: level `s` subtracts the decided levels, divides by
/// `prod_{l<s} m_l` and reduces modulo `m_s`.
pub fn decode_smd(lat: &MultilevelLattice, y: &[f64], eta2: f64, opts: &DecoderOptions) -> Result<DecodeResult> {
    let (y, eta2) = unscale(lat, y, eta2)?;
    let map = lat.map();
    let levels = map.levels();
    let units = smd_unit_factors(map);
    let mut codewords: Vec<Vec<u64>> = Vec::with_capacity(levels);
    let mut prefix: u64 = 1;
    for (s, code) in lat.codes().iter().enumerate() {
        let m = code.modulus();
        let mut partial: Vec<&[u64]> = codewords.iter().map(|c| c.as_slice()).collect();
        let zeros = vec![0u64; lat.n()];
        partial.resize(levels, &zeros);
        let sub = map.forward_words(&partial);
        let p = prefix as f64;
        let obs: Vec<f64> = y
            .iter()
            .zip(&sub)
            .map(|(&v, &c)| ((v - c as f64) / p).rem_euclid(m as f64))
            .collect();
        let scaled = decode_chainring_level(code, &obs, eta2 / (p * p), opts)?;
        let inv = mod_inverse(units[s] as i128, m)
            .ok_or_else(|| Error::Invariant(format!("d_{s} = {} is not a unit modulo {m}", units[s])))?;
        codewords.push(scale_word(&scaled, inv, m));
        prefix *= m;
    }
    Ok(finish(lat, &y, codewords))
}

/// Multistage decoder on `y mod q`: level `l` scores each codeword with a
/// per-symbol mixture over all residues of the undecoded levels, conditioned
/// on the decided ones.
pub fn decode_msd(lat: &MultilevelLattice, y: &[f64], eta2: f64, opts: &DecoderOptions) -> Result<DecodeResult> {
    let (y, eta2) = unscale(lat, y, eta2)?;
    let map = lat.map();
    let moduli = map.tower().moduli();
    let levels = moduli.len();
    let q = map.q();
    let wg = WrappedGaussian::new(eta2, q as f64, opts.wraps);
    let obs: Vec<f64> = y.iter().map(|v| v.rem_euclid(q as f64)).collect();
    let weights = map.weights();
    let mut codewords: Vec<Vec<u64>> = Vec::with_capacity(levels);
    for (l, code) in lat.codes().iter().enumerate() {
        let tail_moduli = &moduli[l + 1..];
        let tail_count: u64 = tail_moduli.iter().product();
        let m = moduli[l];
        let work = tail_count.saturating_mul(m);
        if work > opts.cap {
            return Err(Error::cap("multistage mixture size", work, opts.cap));
        }
        // tail offsets sum_{l'>l} v_{l'} w_{l'} mod q
        let mut offsets = Vec::with_capacity(tail_count as usize);
        let mut digits = vec![0u64; tail_moduli.len()];
        loop {
            let off = digits
                .iter()
                .zip(&weights[l + 1..])
                .fold(0u128, |acc, (&v, &w)| (acc + v as u128 * w as u128) % q as u128);
            offsets.push(off as u64);
            if !advance(&mut digits, tail_moduli) {
                break;
            }
        }
        let mut terms = vec![0.0; offsets.len()];
        let table: Vec<Vec<f64>> = obs
            .iter()
            .enumerate()
            .map(|(i, &o)| {
                let head = codewords
                    .iter()
                    .zip(weights)
                    .fold(0u128, |acc, (c, &w)| (acc + c[i] as u128 * w as u128) % q as u128);
                (0..m)
                    .map(|v| {
                        let centre = (head + v as u128 * weights[l] as u128) % q as u128;
                        for (t, &off) in terms.iter_mut().zip(&offsets) {
                            let c = ((centre + off as u128) % q as u128) as f64;
                            *t = wg.logpdf(o - c);
                        }
                        logsumexp(&terms)
                    })
                    .collect()
            })
            .collect();
        codewords.push(ml_codeword(code.codewords_with_cap(opts.cap)?, &table));
    }
    Ok(finish(lat, &y, codewords))
}

/// Maximum-likelihood word of `book` (sorted) under per-symbol
/// log-likelihood tables; ties go to the first, i.e. lexicographically
/// smallest, word.
fn ml_codeword(book: &[Vec<u64>], table: &[Vec<f64>]) -> Vec<u64> {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (idx, word) in book.iter().enumerate() {
        let score: f64 = word.iter().zip(table).map(|(&c, t)| t[c as usize]).sum();
        if score > best_score {
            best_score = score;
            best = idx;
        }
    }
    book[best].clone()
}

/// Successive decoding of a code over `Z_{p^e}` from `obs` (values taken
/// modulo `p^e`): stage `j` reduces `(obs - v_j) / p^j` modulo `p` with
/// variance `eta2 / p^{2j}` and keeps the codewords consistent with the
/// decided digit vector. For `e = 1` this is plain ML decoding.
pub fn decode_chainring_level(code: &LinearCode, obs: &[f64], eta2: f64, opts: &DecoderOptions) -> Result<Vec<u64>> {
    if obs.len() != code.n() {
        return Err(Error::DimensionMismatch {
            expected: code.n(),
            actual: obs.len(),
        });
    }
    let book = code.codewords_with_cap(opts.cap)?;
    let p = code.prime();
    let e = code.exponent();
    let mut alive: Vec<&Vec<u64>> = book.iter().collect();
    let mut known = vec![0u64; code.n()];
    let mut pj: u64 = 1;
    for _ in 0..e {
        let wg = WrappedGaussian::new(eta2 / (pj * pj) as f64, p as f64, opts.wraps);
        let table: Vec<Vec<f64>> = obs
            .iter()
            .zip(&known)
            .map(|(&o, &k)| {
                let r = (o - k as f64) / pj as f64;
                (0..p).map(|d| wg.logpdf(r - d as f64)).collect()
            })
            .collect();
        let mut digit_words: Vec<Vec<u64>> = alive
            .iter()
            .map(|c| c.iter().map(|&v| (v / pj) % p).collect())
            .collect();
        digit_words.sort_unstable();
        digit_words.dedup();
        let digits = ml_codeword(&digit_words, &table);
        alive.retain(|c| c.iter().zip(&digits).all(|(&v, &d)| (v / pj) % p == d));
        for (k, &d) in known.iter_mut().zip(&digits) {
            *k += d * pj;
        }
        pj *= p;
    }
    debug_assert_eq!(alive.len(), 1);
    Ok(known)
}
