//! Command runners. Each produces named artifacts as bytes plus any checks
//! that failed; writing files is left to the caller.

use std::fmt::Write as _;

use pilattice::decoders::DecoderOptions;
use pilattice::lattice::ensemble_quantization_sweep;
use pilattice::nested::summarize;
use pilattice::sim::{
    complexity_csv, complexity_estimate, error_rate_sim, rate_curve, wilson_interval, Shaping, SimConfig,
};
use pilattice::{ChannelState, CrtMap, MapKind, PrimeTower};
use serde_json::json;

use crate::config::{
    tower_from_moduli, ComplexityConfig, ConstructConfig, DecodeSimConfig, Experiment, GquantConfig, NestedSimConfig,
    RateCurveConfig, SnrReference,
};
use crate::error::CliError;

/// Keeps the power estimate's stream apart from the trial streams.
const POWER_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

pub struct Outcome {
    pub artifacts: Vec<(String, Vec<u8>)>,
    pub violations: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            artifacts: Vec::new(),
            violations: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.artifacts.push((name.to_string(), bytes.into()));
    }

    fn add_json(&mut self, name: &str, value: &impl serde::Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        self.add(name, text);
        Ok(())
    }
}

pub fn run(exp: &Experiment) -> Result<Outcome, CliError> {
    match exp {
        Experiment::Construct(c) => construct(c),
        Experiment::DecodeSim(c) => decode_sim(c),
        Experiment::RateCurve(c) => rate_curve_cmd(c),
        Experiment::NestedSim(c) => nested_sim(c),
        Experiment::Gquant(c) => gquant(c),
        Experiment::Complexity(c) => complexity(c),
    }
}

fn construct(cfg: &ConstructConfig) -> Result<Outcome, CliError> {
    let lat = cfg.lattice.build()?;
    let mut out = Outcome::new();
    let reps = lat.coset_representatives()?;
    for r in &reps {
        if !lat.contains(r.coords()) {
            out.violations
                .push(format!("representative {:?} fails membership", r.coords()));
        }
    }
    out.add_json("lattice.json", &lat)?;
    out.add("cosets.csv", lat.representatives_csv()?);
    out.add_json(
        "summary.json",
        &json!({
            "q": lat.q(),
            "n": lat.n(),
            "levels": lat.codes().len(),
            "code_sizes": lat.codes().iter().map(|c| c.size()).collect::<Result<Vec<_>, _>>()?,
            "representatives": reps.len(),
            "index": lat.index()?,
            "volume": lat.volume()?,
        }),
    )?;
    Ok(out)
}

fn decode_sim(cfg: &DecodeSimConfig) -> Result<Outcome, CliError> {
    let lat = cfg.lattice.build()?;
    let sim = SimConfig {
        snr_db: cfg.snr_db.clone(),
        trials: cfg.trials,
        seed: cfg.seed,
        decoders: cfg.decoders.clone(),
        wraps: cfg.wraps,
        shaping: Shaping::Hypercube,
    };
    let table = error_rate_sim(&lat, &sim)?;
    let mut out = Outcome::new();
    out.add("error_rate.csv", table.to_csv());
    out.add("symbol_error.csv", table.symbol_error_csv());
    out.violations = table.violations;
    Ok(out)
}

fn rate_curve_cmd(cfg: &RateCurveConfig) -> Result<Outcome, CliError> {
    let tower = tower_from_moduli(&cfg.tower)?;
    let map = CrtMap::new(tower, MapKind::RingIso);
    let curve = rate_curve(&map, &cfg.snr_db, cfg.samples, cfg.seed, cfg.wraps)?;
    let mut out = Outcome::new();
    out.add("rate_curve.csv", curve.to_csv());
    let mut levels = String::from("snr_db,level,msd,smd,pmd\n");
    for p in &curve.points {
        for l in 0..p.msd_levels.len() {
            let _ = writeln!(
                levels,
                "{},{},{},{},{}",
                p.snr_db,
                l + 1,
                p.msd_levels[l],
                p.smd_levels[l],
                p.pmd_levels[l]
            );
        }
    }
    out.add("rate_levels.csv", levels);
    let mut chain = String::from("snr_db,r_msd,chain_rule,chain_rule_se\n");
    for p in &curve.points {
        let _ = writeln!(chain, "{},{},{},{}", p.snr_db, p.r_msd, p.chain_rule, p.chain_rule_se);
    }
    out.add("chain_rule.csv", chain);
    out.violations = curve.violations();
    Ok(out)
}

fn nested_sim(cfg: &NestedSimConfig) -> Result<Outcome, CliError> {
    pilattice::sim::validate_grid(&cfg.snr_db)?;
    if cfg.trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    let code = cfg.code.build()?;
    let opts = DecoderOptions {
        wraps: cfg.wraps,
        ..DecoderOptions::default()
    };
    let measured = code.measured_power(cfg.power_trials, cfg.seed ^ POWER_SEED_SALT)?;
    let reference = match cfg.snr_reference {
        SnrReference::Measured => measured.sigma2,
        SnrReference::Nominal => code.power(),
    };
    let mut out = Outcome::new();
    let levels = code.pairs().len();
    let mut trials_csv = String::from("trial,snr_db,success");
    for l in 1..=levels {
        let _ = write!(trials_csv, ",level{l}_success");
    }
    trials_csv.push('\n');
    let mut summary =
        String::from("snr_db,reference_power,eta2,wer,wer_lo,wer_hi,trials,eq_noise,eq_noise_se,sigma_eq2\n");
    for (i, &snr) in cfg.snr_db.iter().enumerate() {
        let ch = ChannelState::from_snr_db(reference, snr)?;
        let records = code.simulate(&ch, cfg.decoder, &opts, cfg.trials, cfg.seed, i as u64)?;
        for r in &records {
            let _ = write!(trials_csv, "{},{},{}", r.trial, snr, r.success as u8);
            for &s in &r.per_level_success {
                let _ = write!(trials_csv, ",{}", s as u8);
            }
            trials_csv.push('\n');
        }
        let (wer, eq, eq_se) = summarize(&records);
        let errors = records.iter().filter(|r| !r.success).count() as u64;
        let (lo, hi) = wilson_interval(errors, cfg.trials, 1.96);
        let _ = writeln!(
            summary,
            "{snr},{reference},{},{wer},{lo},{hi},{},{eq},{eq_se},{}",
            ch.eta2, cfg.trials, ch.sigma_eq2
        );
        if eq > ch.sigma_eq2 + 3.0 * eq_se {
            out.violations.push(format!(
                "equivalent noise {eq} exceeds P eta^2 / (P + eta^2) = {} at {snr} dB",
                ch.sigma_eq2
            ));
        }
    }
    out.add("nested_trials.csv", trials_csv);
    out.add("nested_summary.csv", summary);
    out.add_json(
        "codebook.json",
        &json!({
            "code": cfg.code,
            "gamma": code.gamma(),
            "design_rate": code.design_rate(),
            "actual_rate": code.actual_rate()?,
            "measured_power": measured.sigma2,
            "measured_power_se": measured.sigma2_se,
            "coarse_g": measured.g,
            "fine_volume": code.fine().volume()?,
            "coarse_volume": code.coarse().volume()?,
            "generators": code.pairs().iter().map(|p| p.fine()).collect::<Vec<_>>(),
        }),
    )?;
    Ok(out)
}

fn gquant(cfg: &GquantConfig) -> Result<Outcome, CliError> {
    let rows = ensemble_quantization_sweep(&cfg.rule, &cfg.n, cfg.ensemble, cfg.trials, cfg.seed)?;
    let mut csv = String::from("n,q,primes,dims,ensemble,mean_g,g_se,sphere_bound\n");
    for r in &rows {
        let join = |v: &[String]| v.join("x");
        let primes: Vec<String> = r.primes.iter().map(|p| p.to_string()).collect();
        let dims: Vec<String> = r.dims.iter().map(|d| d.to_string()).collect();
        let q: u64 = if r.primes.is_empty() {
            1
        } else {
            r.primes.iter().product()
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.n,
            q,
            join(&primes),
            join(&dims),
            r.ensemble,
            r.mean_g,
            r.g_se,
            r.sphere_bound
        );
    }
    let mut out = Outcome::new();
    out.add("gquant.csv", csv);
    Ok(out)
}

fn complexity(cfg: &ComplexityConfig) -> Result<Outcome, CliError> {
    let rows = cfg
        .q
        .iter()
        .map(|&q| Ok(complexity_estimate(&PrimeTower::factor(q)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut out = Outcome::new();
    out.add("complexity.csv", complexity_csv(&rows));
    Ok(out)
}
