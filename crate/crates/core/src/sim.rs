//! Monte Carlo experiments: decoder error rates, per-level achievable rates
//! of the three decoders, and the decoding cost model.
//!
//! Every sample owns an RNG stream derived from `(seed, snr_index, sample)`
//! and results are reduced in sample order, so outputs are bit-identical for
//! any thread count.

use std::fmt::Write as _;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{CrtMap, PrimeTower};
use crate::decoders::{
    decode, logsumexp, smd_unit_factors, DecoderKind, DecoderOptions, WrappedGaussian, MIN_VARIANCE,
};
use crate::error::{Error, Result};
use crate::lattice::{mean_and_se, MultilevelLattice};
use crate::rng::trial_rng;

pub const ERROR_RATE_HEADER: &str = "snr_db,decoder,wer,wer_lo,wer_hi,trials";
pub const RATE_CURVE_HEADER: &str = "snr_db,r_msd,r_msd_se,r_smd,r_smd_se,r_pmd,r_pmd_se";

/// Multiplier on combined standard errors for the statistical checks.
pub const CHECK_SIGMAS: f64 = 2.0;
/// Tolerance for comparing the direct and chain-rule mutual information.
pub const CHAIN_RULE_SIGMAS: f64 = 3.0;

/// Direct rate term, then per-level SMD, PMD and chain-rule terms of one sample.
type SampleTerms = (f64, Vec<f64>, Vec<f64>, Vec<f64>);

/// `y = x + z` with `z ~ N(0, eta2 I)`, deterministic in `seed`.
pub fn awgn_transmit(x: &[f64], eta2: f64, seed: u64) -> Result<Vec<f64>> {
    if !(eta2.is_finite() && eta2 >= 0.0) || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("AWGN needs finite input and eta^2 >= 0".into()));
    }
    Ok(add_noise(x, eta2, &mut ChaCha8Rng::seed_from_u64(seed)))
}

fn add_noise<R: Rng + ?Sized>(x: &[f64], eta2: f64, rng: &mut R) -> Vec<f64> {
    if eta2 == 0.0 {
        return x.to_vec();
    }
    let normal = Normal::new(0.0, eta2.sqrt()).expect("finite variance");
    x.iter().map(|&v| v + normal.sample(rng)).collect()
}

/// Per-dimension power of the centered uniform constellation `Z_q`.
pub fn constellation_power(q: u64) -> f64 {
    let q = q as f64;
    (q * q - 1.0) / 12.0
}

/// Noise variance for a target SNR (dB) on the `Z_q` constellation;
/// `+inf` gives zero.
pub fn noise_variance(q: u64, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        constellation_power(q) / 10f64.powf(snr_db / 10.0)
    }
}

/// Wilson score interval for `errors / trials` at normal quantile `z`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shaping {
    /// Transmit `M(c)` inside `[0, q)^n`.
    #[default]
    Hypercube,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub decoders: Vec<DecoderKind>,
    pub wraps: u32,
    #[serde(default)]
    pub shaping: Shaping,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.decoders.is_empty() {
            return Err(Error::InvalidParameter("no decoders selected".into()));
        }
        validate_grid(&self.snr_db)
    }
}

/// Grid must be non-empty, sorted ascending, and finite except for a
/// trailing `+inf`.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("SNR grid is empty".into()));
    }
    if grid.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
        return Err(Error::InvalidParameter("SNR grid contains NaN or -inf".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("SNR grid must be strictly increasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateRow {
    pub snr_db: f64,
    pub decoder: DecoderKind,
    pub errors: u64,
    pub trials: u64,
    pub wer: f64,
    pub wer_lo: f64,
    pub wer_hi: f64,
    /// Symbol error rate of each level.
    pub ser: Vec<f64>,
}

impl ErrorRateRow {
    pub fn se(&self) -> f64 {
        (self.wer * (1.0 - self.wer) / self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateTable {
    pub rows: Vec<ErrorRateRow>,
    /// Ordering and monotonicity checks that failed beyond tolerance.
    pub violations: Vec<String>,
}

impl ErrorRateTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(ERROR_RATE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.snr_db, r.decoder, r.wer, r.wer_lo, r.wer_hi, r.trials
            );
        }
        out
    }

    pub fn symbol_error_csv(&self) -> String {
        let mut out = String::from("snr_db,decoder,level,ser\n");
        for r in &self.rows {
            for (l, s) in r.ser.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{}", r.snr_db, r.decoder, l + 1, s);
            }
        }
        out
    }

    pub fn row(&self, snr_db: f64, decoder: DecoderKind) -> Option<&ErrorRateRow> {
        self.rows.iter().find(|r| r.snr_db == snr_db && r.decoder == decoder)
    }
}

fn exceeds(a: f64, a_se: f64, b: f64, b_se: f64, sigmas: f64) -> bool {
    a > b + sigmas * (a_se * a_se + b_se * b_se).sqrt()
}

/// Word- and symbol-error rates of the selected decoders. All decoders see
/// the same received words. Transmit points are uniform over `Lambda*`.
pub fn error_rate_sim(lat: &MultilevelLattice, cfg: &SimConfig) -> Result<ErrorRateTable> {
    cfg.validate()?;
    let opts = DecoderOptions {
        wraps: cfg.wraps,
        ..DecoderOptions::default()
    };
    for code in lat.codes() {
        code.codewords_with_cap(opts.cap)?;
    }
    let q = lat.q();
    let n = lat.n();
    let levels = lat.codes().len();
    let decoders = cfg.decoders.clone();
    let mut rows = Vec::new();
    for (si, &snr) in cfg.snr_db.iter().enumerate() {
        let eta2 = noise_variance(q, snr) * lat.scale() * lat.scale();
        // outcome[t][d] = (word error, symbol errors per level)
        let outcomes = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, si as u64, t);
                let words: Vec<Vec<u64>> = lat
                    .codes()
                    .iter()
                    .map(|c| c.encode(&c.random_message(&mut rng)))
                    .collect::<Result<_>>()?;
                let refs: Vec<&[u64]> = words.iter().map(|w| w.as_slice()).collect();
                let x: Vec<f64> = lat
                    .map()
                    .forward_words(&refs)
                    .into_iter()
                    .map(|v| v as f64 * lat.scale())
                    .collect();
                let y = add_noise(&x, eta2, &mut rng);
                decoders
                    .iter()
                    .map(|&kind| {
                        let r = decode(kind, lat, &y, eta2, &opts)?;
                        let sym: Vec<u64> = r
                            .codewords
                            .iter()
                            .zip(&words)
                            .map(|(a, b)| a.iter().zip(b).filter(|(u, v)| u != v).count() as u64)
                            .collect();
                        Ok((r.codewords != words, sym))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (di, &kind) in decoders.iter().enumerate() {
            let errors = outcomes.iter().filter(|o| o[di].0).count() as u64;
            let mut sym = vec![0u64; levels];
            for o in &outcomes {
                for (s, e) in sym.iter_mut().zip(&o[di].1) {
                    *s += e;
                }
            }
            let (lo, hi) = wilson_interval(errors, cfg.trials, 1.96);
            rows.push(ErrorRateRow {
                snr_db: snr,
                decoder: kind,
                errors,
                trials: cfg.trials,
                wer: errors as f64 / cfg.trials as f64,
                wer_lo: lo,
                wer_hi: hi,
                ser: sym.iter().map(|&s| s as f64 / (cfg.trials * n as u64) as f64).collect(),
            });
        }
    }
    let mut table = ErrorRateTable {
        rows,
        violations: Vec::new(),
    };
    table.violations = error_rate_violations(&table, &cfg.snr_db, &decoders);
    Ok(table)
}

fn error_rate_violations(table: &ErrorRateTable, grid: &[f64], decoders: &[DecoderKind]) -> Vec<String> {
    let mut out = Vec::new();
    for &kind in decoders {
        for w in grid.windows(2) {
            let (a, b) = (table.row(w[0], kind).unwrap(), table.row(w[1], kind).unwrap());
            if exceeds(b.wer, b.se(), a.wer, a.se(), CHECK_SIGMAS) {
                out.push(format!(
                    "{kind} WER rises from {} at {} dB to {} at {} dB",
                    a.wer, w[0], b.wer, w[1]
                ));
            }
        }
    }
    let order = [DecoderKind::Msd, DecoderKind::Smd, DecoderKind::Pmd];
    for &snr in grid {
        for pair in order.windows(2) {
            if let (Some(a), Some(b)) = (table.row(snr, pair[0]), table.row(snr, pair[1])) {
                if exceeds(a.wer, a.se(), b.wer, b.se(), CHECK_SIGMAS) {
                    out.push(format!(
                        "{} WER {} exceeds {} WER {} at {snr} dB",
                        pair[0], a.wer, pair[1], b.wer
                    ));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub snr_db: f64,
    pub r_msd: f64,
    pub r_msd_se: f64,
    pub r_smd: f64,
    pub r_smd_se: f64,
    pub r_pmd: f64,
    pub r_pmd_se: f64,
    /// `sum_l I(C^l; Y | C^{<l})` from an independent sample stream.
    pub chain_rule: f64,
    pub chain_rule_se: f64,
    pub msd_levels: Vec<f64>,
    pub smd_levels: Vec<f64>,
    pub pmd_levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub q: u64,
    pub samples: u64,
    pub points: Vec<RatePoint>,
}

impl RateCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(RATE_CURVE_HEADER);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.snr_db, p.r_msd, p.r_msd_se, p.r_smd, p.r_smd_se, p.r_pmd, p.r_pmd_se
            );
        }
        out
    }

    /// Bound, ordering and chain-rule checks that fail beyond tolerance.
    pub fn violations(&self) -> Vec<String> {
        // slack for summation rounding over many samples
        let cap = (self.q as f64).log2() + 1e-9;
        let mut out = Vec::new();
        for p in &self.points {
            for (name, r) in [("R_MSD", p.r_msd), ("R_SMD", p.r_smd), ("R_PMD", p.r_pmd)] {
                if !(-1e-9..=cap).contains(&r) {
                    out.push(format!("{name} = {r} outside [0, log2 q] at {} dB", p.snr_db));
                }
            }
            if exceeds(p.r_smd, p.r_smd_se, p.r_msd, p.r_msd_se, CHECK_SIGMAS) {
                out.push(format!(
                    "R_SMD {} exceeds R_MSD {} at {} dB",
                    p.r_smd, p.r_msd, p.snr_db
                ));
            }
            if exceeds(p.r_pmd, p.r_pmd_se, p.r_smd, p.r_smd_se, CHECK_SIGMAS) {
                out.push(format!(
                    "R_PMD {} exceeds R_SMD {} at {} dB",
                    p.r_pmd, p.r_smd, p.snr_db
                ));
            }
            let gap = (p.r_msd - p.chain_rule).abs();
            let se = (p.r_msd_se.powi(2) + p.chain_rule_se.powi(2)).sqrt();
            if gap > CHAIN_RULE_SIGMAS * se + 1e-12 {
                out.push(format!(
                    "chain rule sum {} differs from I(X;Y) {} at {} dB",
                    p.chain_rule, p.r_msd, p.snr_db
                ));
            }
        }
        out
    }
}

/// Entropy in bits of the distribution proportional to `exp(logw)`.
fn entropy_bits(logw: &[f64]) -> f64 {
    let z = logsumexp(logw);
    let h: f64 = logw
        .iter()
        .map(|&l| {
            let p = (l - z).exp();
            if p > 0.0 {
                -p * (l - z)
            } else {
                0.0
            }
        })
        .sum();
    (h / std::f64::consts::LN_2).max(0.0)
}

/// Scalar (n = 1) channel for the rate curve.
struct ScalarChannel<'a> {
    map: &'a CrtMap,
    eta2: f64,
    wraps: u32,
    /// `d_s` for the serial reductions.
    units: Vec<u64>,
}

impl ScalarChannel<'_> {
    fn q(&self) -> u64 {
        self.map.q()
    }

    fn var(&self) -> f64 {
        self.eta2.max(MIN_VARIANCE)
    }

    /// `log2 q - H(X | Y = y)` for the finite constellation `{0, ..., q-1}`.
    fn direct_term(&self, y: f64) -> f64 {
        let v = self.var();
        let logw: Vec<f64> = (0..self.q()).map(|x| -(y - x as f64).powi(2) / (2.0 * v)).collect();
        (self.q() as f64).log2() - entropy_bits(&logw)
    }

    /// `log2 m_l - H(C^l | Y = y, C^{<l} = prefix)` for each level.
    fn chain_terms(&self, y: f64, residues: &[u64]) -> Vec<f64> {
        let moduli = self.map.tower().moduli();
        let v = self.var();
        let mut out = Vec::with_capacity(moduli.len());
        for l in 0..moduli.len() {
            // group constellation points by their level-l residue, keeping
            // those that agree with the true prefix
            let mut groups: Vec<Vec<f64>> = vec![Vec::new(); moduli[l] as usize];
            for x in 0..self.q() {
                let s = self.map.sigma(x as i64);
                if s[..l] == residues[..l] {
                    groups[s[l] as usize].push(-(y - x as f64).powi(2) / (2.0 * v));
                }
            }
            let logw: Vec<f64> = groups.iter().map(|g| logsumexp(g)).collect();
            out.push((moduli[l] as f64).log2() - entropy_bits(&logw));
        }
        out
    }

    /// Per-level terms of the serial decoder: level `s` sees
    /// `((y - M(c^{<s}, 0)) / P_s) mod m_s` with variance `eta^2 / P_s^2`.
    fn smd_terms(&self, y: f64, residues: &[u64]) -> Vec<f64> {
        let moduli = self.map.tower().moduli();
        let mut out = Vec::with_capacity(moduli.len());
        let mut prefix: u64 = 1;
        for s in 0..moduli.len() {
            let m = moduli[s];
            let mut head = residues[..s].to_vec();
            head.resize(moduli.len(), 0);
            let sub = self.map.forward_unchecked(&head) as f64;
            let p = prefix as f64;
            let obs = ((y - sub) / p).rem_euclid(m as f64);
            let wg = WrappedGaussian::with_min_accuracy(self.eta2 / (p * p), m as f64, self.wraps);
            out.push(mod_channel_term(&wg, obs, m, self.units[s]));
            prefix *= m;
        }
        out
    }

    /// Per-level terms of the parallel decoder: level `s` sees `y mod m_s`
    /// with the full variance.
    fn pmd_terms(&self, y: f64) -> Vec<f64> {
        let moduli = self.map.tower().moduli();
        (0..moduli.len())
            .map(|s| {
                let m = moduli[s];
                let wg = WrappedGaussian::with_min_accuracy(self.eta2, m as f64, self.wraps);
                mod_channel_term(&wg, y.rem_euclid(m as f64), m, self.map.level_unit(s))
            })
            .collect()
    }
}

/// `log2 m - H(C | obs)` for the channel `obs = (unit * C + z) mod m`.
fn mod_channel_term(wg: &WrappedGaussian, obs: f64, m: u64, unit: u64) -> f64 {
    let logw: Vec<f64> = (0..m).map(|c| wg.logpdf(obs - ((c * unit) % m) as f64)).collect();
    (m as f64).log2() - entropy_bits(&logw)
}

/// Achievable rates of MSD, SMD and PMD for the scalar constellation
/// `X = M(c^1, ..., c^L)` uniform on `Z_q`, normalized to unit power so
/// that `SNR = 1 / eta'^2`.
///
/// Each estimate averages `H(input) - H(input | observation)` over samples,
/// with posteriors computed exactly. The chain-rule sum uses a separate
/// sample stream from the direct `I(X;Y)` estimate.
pub fn rate_curve(map: &CrtMap, snr_grid: &[f64], samples: u64, seed: u64, wraps: u32) -> Result<RateCurve> {
    validate_grid(snr_grid)?;
    if samples < 2 {
        return Err(Error::InvalidParameter("rate curve needs at least 2 samples".into()));
    }
    let q = map.q();
    if q > 1 << 16 {
        return Err(Error::cap("rate curve constellation size", q, 1u64 << 16));
    }
    let units = smd_unit_factors(map);
    let levels = map.levels();
    let mut points = Vec::with_capacity(snr_grid.len());
    for (si, &snr) in snr_grid.iter().enumerate() {
        let ch = ScalarChannel {
            map,
            eta2: noise_variance(q, snr),
            wraps,
            units: units.clone(),
        };
        let per_sample = (0..samples)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, 2 * si as u64, t);
                let x = rng.random_range(0..q);
                let y = add_noise(&[x as f64], ch.eta2, &mut rng)[0];
                let res = map.sigma(x as i64);
                let smd = ch.smd_terms(y, &res);
                let pmd = ch.pmd_terms(y);
                // independent stream for the chain-rule terms
                let mut rng2 = trial_rng(seed, 2 * si as u64 + 1, t);
                let x2 = rng2.random_range(0..q);
                let y2 = add_noise(&[x2 as f64], ch.eta2, &mut rng2)[0];
                let chain = ch.chain_terms(y2, &map.sigma(x2 as i64));
                (ch.direct_term(y), smd, pmd, chain)
            })
            .collect::<Vec<_>>();
        let direct: Vec<f64> = per_sample.iter().map(|s| s.0).collect();
        let smd_sum: Vec<f64> = per_sample.iter().map(|s| s.1.iter().sum()).collect();
        let pmd_sum: Vec<f64> = per_sample.iter().map(|s| s.2.iter().sum()).collect();
        let chain_sum: Vec<f64> = per_sample.iter().map(|s| s.3.iter().sum()).collect();
        let level_means = |pick: &dyn Fn(&SampleTerms) -> &Vec<f64>| -> Vec<f64> {
            (0..levels)
                .map(|l| per_sample.iter().map(|s| pick(s)[l]).sum::<f64>() / samples as f64)
                .collect()
        };
        let (r_msd, r_msd_se) = mean_and_se(&direct);
        let (r_smd, r_smd_se) = mean_and_se(&smd_sum);
        let (r_pmd, r_pmd_se) = mean_and_se(&pmd_sum);
        let (chain_rule, chain_rule_se) = mean_and_se(&chain_sum);
        points.push(RatePoint {
            snr_db: snr,
            r_msd,
            r_msd_se,
            r_smd,
            r_smd_se,
            r_pmd,
            r_pmd_se,
            chain_rule,
            chain_rule_se,
            msd_levels: level_means(&|s| &s.3),
            smd_levels: level_means(&|s| &s.1),
            pmd_levels: level_means(&|s| &s.2),
        });
    }
    Ok(RateCurve { q, samples, points })
}

/// Decoding cost model: Construction A over `Z_q` against per-level decoding
/// over the prime factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub q: u64,
    pub primes: Vec<u64>,
    /// `q log2 q`.
    pub construction_a: f64,
    /// `sum_l p_l log2 p_l`.
    pub multilevel: f64,
    /// `construction_a / multilevel`.
    pub ratio: f64,
    /// Exact comparison `sum p log p < q log q`, i.e. `prod p^p < q^q`.
    pub strictly_below: bool,
}

pub const COMPLEXITY_HEADER: &str = "q,primes,construction_a,multilevel,ratio,strictly_below";

pub fn complexity_estimate(tower: &PrimeTower) -> ComplexityRow {
    let q = tower.q();
    let primes: Vec<u64> = tower.levels().iter().map(|l| l.prime).collect();
    let cost = |v: u64| v as f64 * (v as f64).log2();
    let construction_a = cost(q);
    let multilevel: f64 = tower.moduli().iter().map(|&m| cost(m)).sum();
    let lhs = tower
        .moduli()
        .iter()
        .fold(BigUint::from(1u32), |acc, &m| acc * BigUint::from(m).pow(m as u32));
    let rhs = BigUint::from(q).pow(q as u32);
    ComplexityRow {
        q,
        primes,
        construction_a,
        multilevel,
        ratio: construction_a / multilevel,
        strictly_below: lhs < rhs,
    }
}

pub fn complexity_csv(rows: &[ComplexityRow]) -> String {
    let mut out = String::from(COMPLEXITY_HEADER);
    out.push('\n');
    for r in rows {
        let primes: Vec<String> = r.primes.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.q,
            primes.join("x"),
            r.construction_a,
            r.multilevel,
            r.ratio,
            r.strictly_below
        );
    }
    out
}
