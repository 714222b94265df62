//! TOML experiment configs. Every file carries `schema_version = 1`; unknown
//! keys are rejected.

use pilattice::algebra::{factorize, PrimeTower};
use pilattice::decoders::{DecoderKind, DEFAULT_WRAPS};
use pilattice::lattice::TowerRule;
use pilattice::{CrtMap, LinearCode, MapKind, MultilevelLattice, NestedConfig};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Construct,
    DecodeSim,
    RateCurve,
    NestedSim,
    Gquant,
    Complexity,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Construct => "construct",
            Command::DecodeSim => "decode-sim",
            Command::RateCurve => "rate-curve",
            Command::NestedSim => "nested-sim",
            Command::Gquant => "gquant",
            Command::Complexity => "complexity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Command::Construct,
            Command::DecodeSim,
            Command::RateCurve,
            Command::NestedSim,
            Command::Gquant,
            Command::Complexity,
        ]
        .into_iter()
        .find(|c| c.name() == name)
    }
}

fn default_wraps() -> u32 {
    DEFAULT_WRAPS
}

fn default_scale() -> f64 {
    1.0
}

fn default_ring() -> MapKind {
    MapKind::RingIso
}

/// One level code: explicit generator rows (`n x k`) or a random generator
/// of dimension `k` drawn from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Vec<Vec<u64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// Level moduli `p_l^{e_l}`.
    pub tower: Vec<u64>,
    #[serde(default = "default_ring")]
    pub map: MapKind,
    pub n: usize,
    #[serde(default = "default_scale")]
    pub scale: f64,
    pub codes: Vec<CodeSpec>,
}

pub fn tower_from_moduli(moduli: &[u64]) -> Result<PrimeTower, CliError> {
    let levels = moduli
        .iter()
        .map(|&m| match factorize(m).as_slice() {
            [pp] if m > 1 => Ok(*pp),
            _ => Err(CliError::Config(format!("tower entry {m} is not a prime power"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PrimeTower::new(levels)?)
}

impl LatticeConfig {
    pub fn build(&self) -> Result<MultilevelLattice, CliError> {
        let tower = tower_from_moduli(&self.tower)?;
        if self.codes.len() != tower.len() {
            return Err(CliError::Config(format!(
                "{} codes given for a {}-level tower",
                self.codes.len(),
                tower.len()
            )));
        }
        let codes = self
            .codes
            .iter()
            .zip(tower.moduli())
            .enumerate()
            .map(|(l, (spec, &m))| match (&spec.generator, spec.k, spec.seed) {
                (Some(rows), None, None) => {
                    if rows.len() != self.n {
                        return Err(CliError::Config(format!(
                            "level {} generator has {} rows, expected n = {}",
                            l + 1,
                            rows.len(),
                            self.n
                        )));
                    }
                    Ok(LinearCode::from_rows(m, rows)?)
                }
                (None, Some(k), Some(seed)) => Ok(LinearCode::random(self.n, k, m, seed)?),
                _ => Err(CliError::Config(format!(
                    "level {} code needs either `generator` or both `k` and `seed`",
                    l + 1
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MultilevelLattice::with_scale(
            codes,
            CrtMap::new(tower, self.map),
            self.scale,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructConfig {
    pub schema_version: u32,
    pub lattice: LatticeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeSimConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    #[serde(default = "default_decoders")]
    pub decoders: Vec<DecoderKind>,
    #[serde(default = "default_wraps")]
    pub wraps: u32,
    pub lattice: LatticeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateCurveConfig {
    pub schema_version: u32,
    pub seed: u64,
    /// Level moduli of the scalar constellation.
    pub tower: Vec<u64>,
    pub snr_db: Vec<f64>,
    pub samples: u64,
    #[serde(default = "default_wraps")]
    pub wraps: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrReference {
    /// Monte Carlo second moment of the coarse lattice.
    #[default]
    Measured,
    /// The code's power parameter `P`.
    Nominal,
}

fn default_decoders() -> Vec<DecoderKind> {
    DecoderKind::ALL.to_vec()
}

fn default_decoder() -> DecoderKind {
    DecoderKind::Msd
}

fn default_power_trials() -> u64 {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NestedSimConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    #[serde(default = "default_decoder")]
    pub decoder: DecoderKind,
    #[serde(default = "default_wraps")]
    pub wraps: u32,
    #[serde(default)]
    pub snr_reference: SnrReference,
    #[serde(default = "default_power_trials")]
    pub power_trials: u64,
    pub code: NestedConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GquantConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub n: Vec<usize>,
    pub ensemble: usize,
    pub trials: u64,
    pub rule: TowerRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexityConfig {
    pub schema_version: u32,
    pub q: Vec<u64>,
}

/// A parsed config for one command.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Construct(ConstructConfig),
    DecodeSim(DecodeSimConfig),
    RateCurve(RateCurveConfig),
    NestedSim(NestedSimConfig),
    Gquant(GquantConfig),
    Complexity(ComplexityConfig),
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
}

impl Experiment {
    pub fn parse(command: Command, text: &str) -> Result<Self, CliError> {
        let exp = match command {
            Command::Construct => Experiment::Construct(parse(text)?),
            Command::DecodeSim => Experiment::DecodeSim(parse(text)?),
            Command::RateCurve => Experiment::RateCurve(parse(text)?),
            Command::NestedSim => Experiment::NestedSim(parse(text)?),
            Command::Gquant => Experiment::Gquant(parse(text)?),
            Command::Complexity => Experiment::Complexity(parse(text)?),
        };
        let version = exp.schema_version();
        if version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {version} (expected {SCHEMA_VERSION})"
            )));
        }
        Ok(exp)
    }

    pub fn command(&self) -> Command {
        match self {
            Experiment::Construct(_) => Command::Construct,
            Experiment::DecodeSim(_) => Command::DecodeSim,
            Experiment::RateCurve(_) => Command::RateCurve,
            Experiment::NestedSim(_) => Command::NestedSim,
            Experiment::Gquant(_) => Command::Gquant,
            Experiment::Complexity(_) => Command::Complexity,
        }
    }

    fn schema_version(&self) -> u32 {
        match self {
            Experiment::Construct(c) => c.schema_version,
            Experiment::DecodeSim(c) => c.schema_version,
            Experiment::RateCurve(c) => c.schema_version,
            Experiment::NestedSim(c) => c.schema_version,
            Experiment::Gquant(c) => c.schema_version,
            Experiment::Complexity(c) => c.schema_version,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Experiment::DecodeSim(c) => Some(c.seed),
            Experiment::RateCurve(c) => Some(c.seed),
            Experiment::NestedSim(c) => Some(c.seed),
            Experiment::Gquant(c) => Some(c.seed),
            Experiment::Construct(_) | Experiment::Complexity(_) => None,
        }
    }

    /// Canonical TOML of the resolved config.
    pub fn to_toml(&self) -> Result<String, CliError> {
        let out = match self {
            Experiment::Construct(c) => toml::to_string(c),
            Experiment::DecodeSim(c) => toml::to_string(c),
            Experiment::RateCurve(c) => toml::to_string(c),
            Experiment::NestedSim(c) => toml::to_string(c),
            Experiment::Gquant(c) => toml::to_string(c),
            Experiment::Complexity(c) => toml::to_string(c),
        };
        out.map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
    }

    /// Applies command-line overrides; a flag the command does not use is a
    /// config error.
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        let cmd = self.command().name();
        let reject = |flag: &str| Err(CliError::Config(format!("{flag} does not apply to `{cmd}`")));
        if let Some(seed) = o.seed {
            match self {
                Experiment::DecodeSim(c) => c.seed = seed,
                Experiment::RateCurve(c) => c.seed = seed,
                Experiment::NestedSim(c) => c.seed = seed,
                Experiment::Gquant(c) => c.seed = seed,
                _ => return reject("--seed"),
            }
        }
        if let Some(trials) = o.trials {
            match self {
                Experiment::DecodeSim(c) => c.trials = trials,
                Experiment::RateCurve(c) => c.samples = trials,
                Experiment::NestedSim(c) => c.trials = trials,
                Experiment::Gquant(c) => c.trials = trials,
                _ => return reject("--trials"),
            }
        }
        if let Some(snr) = &o.snr {
            match self {
                Experiment::DecodeSim(c) => c.snr_db = snr.clone(),
                Experiment::RateCurve(c) => c.snr_db = snr.clone(),
                Experiment::NestedSim(c) => c.snr_db = snr.clone(),
                _ => return reject("--snr"),
            }
        }
        if let Some(decoders) = &o.decoders {
            match self {
                Experiment::DecodeSim(c) => c.decoders = decoders.clone(),
                Experiment::NestedSim(c) => match decoders.as_slice() {
                    [d] => c.decoder = *d,
                    _ => return Err(CliError::Config("nested-sim takes a single decoder".into())),
                },
                _ => return reject("--decoders"),
            }
        }
        if let Some(wraps) = o.wraps {
            match self {
                Experiment::DecodeSim(c) => c.wraps = wraps,
                Experiment::RateCurve(c) => c.wraps = wraps,
                Experiment::NestedSim(c) => c.wraps = wraps,
                _ => return reject("--wraps"),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub snr: Option<Vec<f64>>,
    pub decoders: Option<Vec<DecoderKind>>,
    pub wraps: Option<u32>,
}

/// Parses `0,5,10,inf`.
pub fn parse_snr_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            match t {
                "inf" | "+inf" => Ok(f64::INFINITY),
                _ => t.parse::<f64>().map_err(|_| format!("invalid SNR value '{t}'")),
            }
        })
        .collect()
}

pub fn parse_decoder_list(s: &str) -> Result<Vec<DecoderKind>, String> {
    s.split(',')
        .map(|t| t.parse::<DecoderKind>().map_err(|e| e.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z15_TWO_LEVEL: &str = r#"
schema_version = 1

[lattice]
tower = [3, 5]
n = 2

[[lattice.codes]]
generator = [[1], [2]]

[[lattice.codes]]
generator = [[1], [1]]
"#;

    #[test]
    fn parses_construct() {
        let exp = Experiment::parse(Command::Construct, Z15_TWO_LEVEL).unwrap();
        let Experiment::Construct(c) = &exp else { panic!() };
        let lat = c.lattice.build().unwrap();
        assert_eq!(lat.coset_representatives().unwrap().len(), 15);
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        let extra = Z15_TWO_LEVEL.replace("n = 2", "n = 2\ncolour = 1");
        assert!(matches!(
            Experiment::parse(Command::Construct, &extra),
            Err(CliError::Config(_))
        ));
        let v2 = Z15_TWO_LEVEL.replace("schema_version = 1", "schema_version = 2");
        assert!(matches!(
            Experiment::parse(Command::Construct, &v2),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn toml_round_trip_keeps_infinity() {
        let text = r#"
schema_version = 1
seed = 4
tower = [2, 3]
snr_db = [0.0, 10.0, inf]
samples = 100
"#;
        let exp = Experiment::parse(Command::RateCurve, text).unwrap();
        let again = Experiment::parse(Command::RateCurve, &exp.to_toml().unwrap()).unwrap();
        assert_eq!(exp, again);
    }

    #[test]
    fn overrides() {
        let mut exp = Experiment::parse(Command::Construct, Z15_TWO_LEVEL).unwrap();
        let o = Overrides {
            seed: Some(3),
            ..Overrides::default()
        };
        assert!(exp.apply(&o).is_err());
        assert_eq!(parse_snr_list("0, 2.5,inf").unwrap(), vec![0.0, 2.5, f64::INFINITY]);
        assert!(parse_snr_list("x").is_err());
        assert_eq!(
            parse_decoder_list("msd,pmd").unwrap(),
            vec![DecoderKind::Msd, DecoderKind::Pmd]
        );
    }

    #[test]
    fn tower_entries_must_be_prime_powers() {
        assert!(tower_from_moduli(&[4, 3]).is_ok());
        assert!(tower_from_moduli(&[6]).is_err());
        assert!(tower_from_moduli(&[1]).is_err());
    }
}
