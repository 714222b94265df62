//! Nested lattice codes `Lambda_c ⊆ Lambda_f` built level by level from
//! nested code pairs, with dithered encoding and an MMSE-scaled receiver.
//!
//! Both lattices are the scaled views `(gamma / q)(M(C^1, ..., C^L) + qZ^n)`
//! with `gamma = 2 sqrt(nP)`.

use std::collections::HashMap;
use std::f64::consts::{E, PI};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{advance, CrtMap, MapKind, PrimeTower};
use crate::codes::{LinearCode, NestedCodePair};
use crate::decoders::{decode, DecoderKind, DecoderOptions};
use crate::error::{Error, Result};
use crate::lattice::{mean_and_se, LatticePoint, MultilevelLattice, SecondMoment};
use crate::rng::trial_rng;

/// Bound on the number of messages for the leader table.
pub const DEFAULT_MESSAGE_CAP: u64 = 1_000_000;
const FULL_RANK_ATTEMPTS: usize = 1000;

/// Per-level messages `w^l`, each of length `m_f^l - m_c^l`.
pub type Message = Vec<Vec<u64>>;

type LeaderTable = (Vec<Message>, HashMap<Vec<i64>, usize>);

/// AWGN channel seen through the MMSE-scaled receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub power: f64,
    pub eta2: f64,
    pub alpha: f64,
    pub sigma_eq2: f64,
}

impl ChannelState {
    pub fn new(power: f64, eta2: f64) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) || !(eta2.is_finite() && eta2 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "channel needs P > 0 and eta^2 >= 0, got P = {power}, eta^2 = {eta2}"
            )));
        }
        Ok(ChannelState {
            power,
            eta2,
            alpha: power / (power + eta2),
            sigma_eq2: power * eta2 / (power + eta2),
        })
    }

    /// Channel with `SNR = P / eta^2` given in dB; `+inf` means no noise.
    pub fn from_snr_db(power: f64, snr_db: f64) -> Result<Self> {
        let eta2 = if snr_db == f64::INFINITY {
            0.0
        } else {
            power / 10f64.powf(snr_db / 10.0)
        };
        Self::new(power, eta2)
    }

    pub fn snr(&self) -> f64 {
        self.power / self.eta2
    }
}

/// Codebook description used by configs and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NestedConfig {
    pub tower: Vec<u64>,
    pub n: usize,
    pub m_c: Vec<usize>,
    pub m_f: Vec<usize>,
    #[serde(rename = "P")]
    pub power: f64,
    pub seed: u64,
    /// Redraw generators until every fine generator is full rank.
    #[serde(default = "default_true")]
    pub full_rank: bool,
}

fn default_true() -> bool {
    true
}

impl NestedConfig {
    pub fn build(&self) -> Result<NestedLatticeCode> {
        let tower = PrimeTower::square_free(&self.tower)?;
        let levels = tower.len();
        if self.m_c.len() != levels || self.m_f.len() != levels {
            return Err(Error::DimensionMismatch {
                expected: levels,
                actual: self.m_c.len().min(self.m_f.len()),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut pairs = Vec::with_capacity(levels);
        for l in 0..levels {
            let p = tower.moduli()[l];
            if self.m_c[l] > self.m_f[l] || self.m_f[l] > self.n {
                return Err(Error::InvalidCode(format!(
                    "level {l} needs m_c <= m_f <= n, got {} / {} / {}",
                    self.m_c[l], self.m_f[l], self.n
                )));
            }
            let mut attempt = 0;
            let fine = loop {
                let g = LinearCode::random_with(self.n, self.m_f[l], p, &mut rng)?;
                if !self.full_rank || g.rank_mod_p() == g.k() {
                    break g;
                }
                attempt += 1;
                if attempt >= FULL_RANK_ATTEMPTS {
                    return Err(Error::InvalidCode(format!("no full-rank generator found at level {l}")));
                }
            };
            pairs.push(NestedCodePair::from_fine(fine, self.m_c[l])?);
        }
        NestedLatticeCode::new(pairs, CrtMap::new(tower, MapKind::RingIso), self.power)
    }
}

#[derive(Debug)]
pub struct NestedLatticeCode {
    pairs: Vec<NestedCodePair>,
    map: CrtMap,
    n: usize,
    power: f64,
    gamma: f64,
    fine: MultilevelLattice,
    coarse: MultilevelLattice,
    /// Coset leader (unscaled) to index into `messages`.
    leaders: OnceLock<LeaderTable>,
}

/// Outcome of one simulated transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub success: bool,
    pub per_level_success: Vec<bool>,
    /// `(1/n) ||z_eq||^2` for this trial.
    pub eq_noise: f64,
}

/// Gaussian-approximation volume condition for the fine lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeDiagnostic {
    /// `Vol(Lambda_f)^{2/n}`.
    pub fine_volume_2n: f64,
    /// `2 pi e sigma_eq^2`.
    pub threshold: f64,
    pub satisfied: bool,
}

impl NestedLatticeCode {
    pub fn new(pairs: Vec<NestedCodePair>, map: CrtMap, power: f64) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::InvalidParameter(format!("power must be positive, got {power}")));
        }
        let n = pairs.first().map_or(0, |p| p.fine().n());
        let gamma = 2.0 * (n as f64 * power).sqrt();
        let scale = gamma / map.q() as f64;
        let fine = MultilevelLattice::with_scale(pairs.iter().map(|p| p.fine().clone()).collect(), map.clone(), scale)?;
        let coarse =
            MultilevelLattice::with_scale(pairs.iter().map(|p| p.coarse().clone()).collect(), map.clone(), scale)?;
        Ok(NestedLatticeCode {
            pairs,
            map,
            n,
            power,
            gamma,
            fine,
            coarse,
            leaders: OnceLock::new(),
        })
    }

    pub fn pairs(&self) -> &[NestedCodePair] {
        &self.pairs
    }

    pub fn map(&self) -> &CrtMap {
        &self.map
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn fine(&self) -> &MultilevelLattice {
        &self.fine
    }

    pub fn coarse(&self) -> &MultilevelLattice {
        &self.coarse
    }

    /// `sum_l (m_f^l - m_c^l) / n * log2 p_l`.
    pub fn design_rate(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.message_len() as f64 * (p.fine().modulus() as f64).log2())
            .sum::<f64>()
            / self.n as f64
    }

    /// `log2 |Lambda_f / Lambda_c| / n` from the enumerated coset leaders.
    pub fn actual_rate(&self) -> Result<f64> {
        Ok((self.leader_table()?.1.len() as f64).log2() / self.n as f64)
    }

    /// Number of distinct fine cosets modulo the coarse lattice.
    pub fn quotient_size(&self) -> Result<usize> {
        Ok(self.leader_table()?.1.len())
    }

    fn message_radices(&self) -> Vec<u64> {
        self.pairs
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.fine().modulus(), p.message_len()))
            .collect()
    }

    fn split_message(&self, flat: &[u64]) -> Message {
        let mut out = Vec::with_capacity(self.pairs.len());
        let mut at = 0;
        for p in &self.pairs {
            out.push(flat[at..at + p.message_len()].to_vec());
            at += p.message_len();
        }
        out
    }

    /// Every message tuple, in lexicographic order of the flattened digits
    /// (last level varies slowest).
    pub fn messages(&self) -> Result<&[Message]> {
        Ok(&self.leader_table()?.0)
    }

    fn leader_table(&self) -> Result<&LeaderTable> {
        if let Some(t) = self.leaders.get() {
            return Ok(t);
        }
        let radices = self.message_radices();
        let count = radices
            .iter()
            .try_fold(1u64, |acc, &r| acc.checked_mul(r))
            .unwrap_or(u64::MAX);
        if count > DEFAULT_MESSAGE_CAP {
            return Err(Error::cap("nested message count", count, DEFAULT_MESSAGE_CAP));
        }
        let mut messages = Vec::with_capacity(count as usize);
        let mut table = HashMap::new();
        let mut digits = vec![0u64; radices.len()];
        loop {
            let msg = self.split_message(&digits);
            let leader = self.coset_leader(&msg)?;
            table.entry(leader.0).or_insert(messages.len());
            messages.push(msg);
            if !advance(&mut digits, &radices) {
                break;
            }
        }
        Ok(self.leaders.get_or_init(|| (messages, table)))
    }

    /// Fine codewords `c^l = G_f^l [0; w^l]`.
    pub fn fine_codewords(&self, message: &[Vec<u64>]) -> Result<Vec<Vec<u64>>> {
        if message.len() != self.pairs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.pairs.len(),
                actual: message.len(),
            });
        }
        self.pairs
            .iter()
            .zip(message)
            .map(|(p, w)| p.encode_message(w))
            .collect()
    }

    /// Unscaled coset leader `t = M(c^1, ..., c^L) mod Lambda_c`.
    pub fn coset_leader(&self, message: &[Vec<u64>]) -> Result<LatticePoint> {
        let words = self.fine_codewords(message)?;
        let refs: Vec<&[u64]> = words.iter().map(|w| w.as_slice()).collect();
        let base: Vec<i64> = self.map.forward_words(&refs).into_iter().map(|v| v as i64).collect();
        Ok(LatticePoint(self.coarse.reduce_point(&base)?))
    }

    /// Uniform dither over the Voronoi region of `Lambda_c`.
    pub fn dither_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        self.coarse.sample_voronoi(rng)
    }

    pub fn dither_from_seed(&self, seed: u64) -> Result<Vec<f64>> {
        self.dither_sample(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// `x = (t - u) mod Lambda_c`.
    pub fn encode(&self, message: &[Vec<u64>], dither: &[f64]) -> Result<Vec<f64>> {
        if dither.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: dither.len(),
            });
        }
        let t = self.coset_leader(message)?.to_real(self.fine.scale());
        let d: Vec<f64> = t.iter().zip(dither).map(|(a, b)| a - b).collect();
        self.coarse.mod_lattice(&d)
    }

    /// `(alpha y + u) mod Lambda_c`.
    pub fn mmse_receive(&self, y: &[f64], channel: &ChannelState, dither: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n || dither.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: y.len().min(dither.len()),
            });
        }
        let v: Vec<f64> = y.iter().zip(dither).map(|(a, u)| channel.alpha * a + u).collect();
        self.coarse.mod_lattice(&v)
    }

    /// `(obs - t) mod Lambda_c`, the equivalent noise for a known leader.
    pub fn equivalent_noise(&self, obs: &[f64], leader: &LatticePoint) -> Result<Vec<f64>> {
        let t = leader.to_real(self.fine.scale());
        let d: Vec<f64> = obs.iter().zip(&t).map(|(a, b)| a - b).collect();
        self.coarse.mod_lattice(&d)
    }

    /// Decodes the fine lattice point level by level, reduces it modulo the
    /// coarse lattice and looks up the message of that coset.
    pub fn decode(
        &self,
        obs: &[f64],
        channel: &ChannelState,
        kind: DecoderKind,
        opts: &DecoderOptions,
    ) -> Result<Message> {
        let r = decode(kind, &self.fine, obs, channel.sigma_eq2, opts)?;
        let leader = self.coarse.reduce_point(&r.point.0)?;
        let (messages, table) = self.leader_table()?;
        let idx = table
            .get(&leader)
            .ok_or_else(|| Error::Invariant(format!("decoded fine point {:?} is not a known coset", r.point.0)))?;
        Ok(messages[*idx].clone())
    }

    /// `sigma^2(Lambda_c)`, the transmit power with a uniform dither.
    pub fn measured_power(&self, trials: u64, seed: u64) -> Result<SecondMoment> {
        self.coarse.second_moment_mc(trials, seed)
    }

    pub fn volume_diagnostic(&self, channel: &ChannelState) -> Result<VolumeDiagnostic> {
        let v = self.fine.volume()?.powf(2.0 / self.n as f64);
        let threshold = 2.0 * PI * E * channel.sigma_eq2;
        Ok(VolumeDiagnostic {
            fine_volume_2n: v,
            threshold,
            satisfied: v > threshold,
        })
    }

    /// One transmission with fresh message, dither and noise drawn from
    /// `rng`.
    pub fn run_trial<R: Rng + ?Sized>(
        &self,
        channel: &ChannelState,
        kind: DecoderKind,
        opts: &DecoderOptions,
        trial: u64,
        rng: &mut R,
    ) -> Result<TrialRecord> {
        let messages = self.messages()?;
        let sent = &messages[rng.random_range(0..messages.len())];
        let u = self.dither_sample(rng)?;
        let x = self.encode(sent, &u)?;
        let y = awgn(&x, channel.eta2, rng);
        let obs = self.mmse_receive(&y, channel, &u)?;
        let z = self.equivalent_noise(&obs, &self.coset_leader(sent)?)?;
        let got = self.decode(&obs, channel, kind, opts)?;
        let per_level_success: Vec<bool> = got.iter().zip(sent).map(|(a, b)| a == b).collect();
        Ok(TrialRecord {
            trial,
            success: per_level_success.iter().all(|&b| b),
            per_level_success,
            eq_noise: z.iter().map(|v| v * v).sum::<f64>() / self.n as f64,
        })
    }

    /// Independent trials, each with its own RNG stream; the output does not
    /// depend on the thread count.
    pub fn simulate(
        &self,
        channel: &ChannelState,
        kind: DecoderKind,
        opts: &DecoderOptions,
        trials: u64,
        seed: u64,
        group: u64,
    ) -> Result<Vec<TrialRecord>> {
        self.leader_table()?;
        (0..trials)
            .into_par_iter()
            .map(|t| self.run_trial(channel, kind, opts, t, &mut trial_rng(seed, group, t)))
            .collect()
    }
}

pub(crate) fn awgn<R: Rng + ?Sized>(x: &[f64], eta2: f64, rng: &mut R) -> Vec<f64> {
    if eta2 == 0.0 {
        return x.to_vec();
    }
    let normal = Normal::new(0.0, eta2.sqrt()).expect("finite variance");
    x.iter().map(|&v| v + normal.sample(rng)).collect()
}

/// Word-error rate and mean equivalent-noise power of a batch of trials.
pub fn summarize(records: &[TrialRecord]) -> (f64, f64, f64) {
    let errors = records.iter().filter(|r| !r.success).count();
    let eq: Vec<f64> = records.iter().map(|r| r.eq_noise).collect();
    let (mean, se) = mean_and_se(&eq);
    (errors as f64 / records.len() as f64, mean, se)
}
