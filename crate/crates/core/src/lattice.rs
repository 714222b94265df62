//! Multilevel lattices `Lambda = M(C^1, ..., C^L) + qZ^n` and brute-force
//! quantization.
//!
//! All integer logic runs in unscaled coordinates. The `scale` field only
//! affects the real-valued views (`quantize`, `mod_lattice`, volumes and
//! moments).

use std::cmp::Ordering;
use std::f64::consts::{E, PI};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{advance, is_prime, CrtMap, MapKind, PrimeTower};
use crate::codes::LinearCode;
use crate::error::{Error, Result};
use crate::rng::trial_rng;

/// Default bound on the number of coset representatives to enumerate.
pub const DEFAULT_REPRESENTATIVE_CAP: u64 = 1_000_000;
/// Brute-force CVP is limited to this dimension.
pub const CVP_DIMENSION_CAP: usize = 8;
/// Brute-force CVP is limited to this many coset representatives.
pub const CVP_REPRESENTATIVE_CAP: u64 = 100_000;

/// Normalized second moment of a ball as the dimension grows.
pub const SPHERE_BOUND_G: f64 = 1.0 / (2.0 * PI * E);

/// Integer point in unscaled coordinates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(pub Vec<i64>);

impl LatticePoint {
    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_real(&self, scale: f64) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64 * scale).collect()
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(v: Vec<i64>) -> Self {
        LatticePoint(v)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct MultilevelLattice {
    map: CrtMap,
    codes: Vec<LinearCode>,
    n: usize,
    scale: f64,
    /// Sorted coset representatives, flat `count x n`.
    representatives: OnceLock<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeRepr {
    tower: PrimeTower,
    kind: MapKind,
    coefficients: Vec<i64>,
    scale: f64,
    codes: Vec<LinearCode>,
}

impl TryFrom<LatticeRepr> for MultilevelLattice {
    type Error = Error;

    fn try_from(r: LatticeRepr) -> Result<Self> {
        let map = CrtMap::with_coefficients(r.tower, r.coefficients, r.kind)?;
        MultilevelLattice::with_scale(r.codes, map, r.scale)
    }
}

impl From<MultilevelLattice> for LatticeRepr {
    fn from(l: MultilevelLattice) -> Self {
        LatticeRepr {
            tower: l.map.tower().clone(),
            kind: l.map.kind(),
            coefficients: l.map.coefficients().to_vec(),
            scale: l.scale,
            codes: l.codes,
        }
    }
}

impl PartialEq for MultilevelLattice {
    fn eq(&self, other: &Self) -> bool {
        self.map == other.map && self.codes == other.codes && self.scale == other.scale
    }
}

/// Monte Carlo estimate of the second moment of a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondMoment {
    /// `(1/n) E ||x mod Lambda||^2` for `x` uniform.
    pub sigma2: f64,
    pub sigma2_se: f64,
    /// Normalized second moment `sigma2 / Vol^{2/n}`.
    pub g: f64,
    pub g_se: f64,
    pub trials: u64,
}

impl MultilevelLattice {
    pub fn new(codes: Vec<LinearCode>, map: CrtMap) -> Result<Self> {
        Self::with_scale(codes, map, 1.0)
    }

    pub fn with_scale(codes: Vec<LinearCode>, map: CrtMap, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
        }
        if codes.len() != map.levels() {
            return Err(Error::DimensionMismatch {
                expected: map.levels(),
                actual: codes.len(),
            });
        }
        let n = codes.first().map_or(0, |c| c.n());
        if n == 0 {
            return Err(Error::InvalidCode("block length must be positive".into()));
        }
        for (l, (code, &m)) in codes.iter().zip(map.tower().moduli()).enumerate() {
            if code.modulus() != m {
                return Err(Error::InvalidCode(format!(
                    "level {l} code is over Z_{} but the tower expects Z_{m}",
                    code.modulus()
                )));
            }
            if code.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: code.n(),
                });
            }
        }
        Ok(MultilevelLattice {
            map,
            codes,
            n,
            scale,
            representatives: OnceLock::new(),
        })
    }

    /// `qZ^n` (zero codes at every level).
    pub fn cubic(map: CrtMap, n: usize) -> Result<Self> {
        let codes = map
            .tower()
            .moduli()
            .iter()
            .map(|&m| LinearCode::zero(n, m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(codes, map)
    }

    /// `Z^n` as a single-level lattice over `F_p` with the full code.
    pub fn integer(n: usize) -> Result<Self> {
        let map = CrtMap::ring_iso(PrimeTower::square_free(&[2])?);
        Self::new(vec![LinearCode::full(n, 2)?], map)
    }

    /// Same lattice with a different scale.
    pub fn rescaled(&self, scale: f64) -> Result<Self> {
        let out = Self::with_scale(self.codes.clone(), self.map.clone(), scale)?;
        if let Some(r) = self.representatives.get() {
            let _ = out.representatives.set(r.clone());
        }
        Ok(out)
    }

    pub fn map(&self) -> &CrtMap {
        &self.map
    }

    pub fn codes(&self) -> &[LinearCode] {
        &self.codes
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> u64 {
        self.map.q()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `prod |C^l|`, the number of coset representatives of `qZ^n` in
    /// `Lambda`.
    pub fn representative_count(&self) -> Result<u64> {
        let mut count: u64 = 1;
        for code in &self.codes {
            let size = code.size()? as u64;
            count = count
                .checked_mul(size)
                .ok_or_else(|| Error::cap("coset representative count", u128::MAX, DEFAULT_REPRESENTATIVE_CAP))?;
        }
        Ok(count)
    }

    /// `Lambda* = M(C^1, ..., C^L)` inside `[0, q)^n`, sorted
    /// lexicographically.
    pub fn coset_representatives(&self) -> Result<Vec<LatticePoint>> {
        let flat = self.representatives_flat()?;
        Ok(flat.chunks_exact(self.n).map(|c| LatticePoint(c.to_vec())).collect())
    }

    pub(crate) fn representatives_flat(&self) -> Result<&[i64]> {
        if let Some(r) = self.representatives.get() {
            return Ok(r);
        }
        let count = self.representative_count()?;
        if count > DEFAULT_REPRESENTATIVE_CAP {
            return Err(Error::cap(
                "coset representative count",
                count,
                DEFAULT_REPRESENTATIVE_CAP,
            ));
        }
        let books = self.codes.iter().map(|c| c.codewords()).collect::<Result<Vec<_>>>()?;
        let radices: Vec<u64> = books.iter().map(|b| b.len() as u64).collect();
        let mut idx = vec![0u64; books.len()];
        let mut points: Vec<Vec<i64>> = Vec::with_capacity(count as usize);
        loop {
            let words: Vec<&[u64]> = books.iter().zip(&idx).map(|(b, &i)| b[i as usize].as_slice()).collect();
            points.push(self.map.forward_words(&words).into_iter().map(|v| v as i64).collect());
            if !advance(&mut idx, &radices) {
                break;
            }
        }
        points.sort_unstable();
        Ok(self.representatives.get_or_init(|| points.concat()))
    }

    /// Membership of an integer point (unscaled): every level of
    /// `sigma(x)` is a codeword.
    pub fn contains(&self, point: &[i64]) -> bool {
        if point.len() != self.n {
            return false;
        }
        self.codes.iter().enumerate().all(|(l, code)| {
            let word: Vec<u64> = point.iter().map(|&x| self.map.sigma_level(x, l)).collect();
            code.contains(&word)
        })
    }

    /// Membership of a real point in the scaled lattice, up to `tol` per
    /// coordinate.
    pub fn contains_real(&self, x: &[f64], tol: f64) -> bool {
        let mut ints = Vec::with_capacity(x.len());
        for &v in x {
            let u = v / self.scale;
            let r = u.round();
            if (u - r).abs() > tol / self.scale {
                return false;
            }
            ints.push(r as i64);
        }
        self.contains(&ints)
    }

    /// `|Z^n / Lambda| = q^n / prod |C^l|`, before scaling.
    pub fn index(&self) -> Result<f64> {
        let count = self.representative_count()? as f64;
        Ok((self.q() as f64).powi(self.n as i32) / count)
    }

    /// Volume of a fundamental region of the scaled lattice.
    pub fn volume(&self) -> Result<f64> {
        Ok(self.index()? * self.scale.powi(self.n as i32))
    }

    fn check_cvp(&self) -> Result<&[i64]> {
        // a single representative (qZ^n) needs no search, so no dimension cap
        if self.n > CVP_DIMENSION_CAP && self.representative_count()? > 1 {
            return Err(Error::cap("CVP dimension", self.n as u64, CVP_DIMENSION_CAP as u64));
        }
        let count = self.representative_count()?;
        if count > CVP_REPRESENTATIVE_CAP {
            return Err(Error::cap("CVP representative count", count, CVP_REPRESENTATIVE_CAP));
        }
        self.representatives_flat()
    }

    /// Closest lattice point to `x` (scaled coordinates), returned in
    /// unscaled coordinates. Ties go to the lexicographically smallest
    /// point.
    pub fn nearest_point(&self, x: &[f64]) -> Result<LatticePoint> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite input to quantizer".into()));
        }
        let reps = self.check_cvp()?;
        let u: Vec<f64> = x.iter().map(|&v| v / self.scale).collect();
        Ok(LatticePoint(nearest_in_cosets(reps, self.n, self.q(), &u)))
    }

    /// `p mod Lambda` for an integer point, in unscaled coordinates.
    pub fn reduce_point(&self, p: &[i64]) -> Result<Vec<i64>> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: p.len(),
            });
        }
        let reps = self.check_cvp()?;
        let u: Vec<f64> = p.iter().map(|&v| v as f64).collect();
        let nearest = nearest_in_cosets(reps, self.n, self.q(), &u);
        Ok(p.iter().zip(&nearest).map(|(a, b)| a - b).collect())
    }

    /// `Q_Lambda(x)` in scaled coordinates.
    pub fn quantize(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.nearest_point(x)?.to_real(self.scale))
    }

    /// `x mod Lambda = x - Q_Lambda(x)`.
    pub fn mod_lattice(&self, x: &[f64]) -> Result<Vec<f64>> {
        let q = self.quantize(x)?;
        Ok(x.iter().zip(&q).map(|(a, b)| a - b).collect())
    }

    /// `(1/n) min ||x - lambda||^2`.
    pub fn mse_distortion(&self, x: &[f64]) -> Result<f64> {
        let e = self.mod_lattice(x)?;
        Ok(e.iter().map(|v| v * v).sum::<f64>() / self.n as f64)
    }

    /// Uniform point of the fundamental Voronoi region: uniform over the
    /// scaled cube `[0, q)^n`, then reduced.
    pub fn sample_voronoi<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let side = self.q() as f64 * self.scale;
        let x: Vec<f64> = (0..self.n).map(|_| rng.random::<f64>() * side).collect();
        self.mod_lattice(&x)
    }

    /// Monte Carlo second moment and normalized second moment. Result is
    /// independent of the rayon thread count.
    pub fn second_moment_mc(&self, trials: u64, seed: u64) -> Result<SecondMoment> {
        if trials < 2 {
            return Err(Error::InvalidParameter("second moment needs at least 2 trials".into()));
        }
        self.check_cvp()?;
        let samples = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, 0, t);
                let e = self.sample_voronoi(&mut rng)?;
                Ok(e.iter().map(|v| v * v).sum::<f64>() / self.n as f64)
            })
            .collect::<Result<Vec<f64>>>()?;
        let (mean, se) = mean_and_se(&samples);
        let norm = self.volume()?.powf(2.0 / self.n as f64);
        Ok(SecondMoment {
            sigma2: mean,
            sigma2_se: se,
            g: mean / norm,
            g_se: se / norm,
            trials,
        })
    }

    /// Coset representatives as CSV, one point per row, no header.
    pub fn representatives_csv(&self) -> Result<String> {
        let header: Vec<String> = (1..=self.n).map(|i| format!("x{i}")).collect();
        let mut out = header.join(",") + "\n";
        for p in self.representatives_flat()?.chunks_exact(self.n) {
            let row: Vec<String> = p.iter().map(|c| c.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Exact CVP over `reps + qZ^n`: within each coset the nearest point is
/// found coordinate by coordinate.
fn nearest_in_cosets(reps: &[i64], n: usize, q: u64, u: &[f64]) -> Vec<i64> {
    let qf = q as f64;
    let qi = q as i64;
    let mut best: Vec<i64> = Vec::new();
    let mut best_d = f64::INFINITY;
    let mut cand = vec![0i64; n];
    for rep in reps.chunks_exact(n) {
        let mut d = 0.0;
        for i in 0..n {
            // ceil(t - 1/2) picks the lower neighbour on an exact tie
            let t = (u[i] - rep[i] as f64) / qf;
            let k = (t - 0.5).ceil() as i64;
            cand[i] = rep[i] + k * qi;
            let diff = u[i] - cand[i] as f64;
            d += diff * diff;
            if d > best_d {
                break;
            }
        }
        if d < best_d || (d == best_d && cand.as_slice().cmp(&best) == Ordering::Less) {
            best_d = d;
            best.clone_from(&cand);
        }
    }
    best
}

pub(crate) fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    // V_n = 2 pi / n * V_{n-2}
    let mut v = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if n.is_multiple_of(2) { 2 } else { 3 };
    while k <= n {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

/// Parameter rule for the random-code quantization ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerRule {
    /// Number of distinct primes.
    pub levels: usize,
    /// Lower end of `q / n^{3/2}`.
    pub xi_min: f64,
    /// Rate slack added to the per-level rate rule.
    pub delta: f64,
}

impl Default for TowerRule {
    fn default() -> Self {
        TowerRule {
            levels: 2,
            xi_min: 0.5,
            delta: 0.0,
        }
    }
}

impl TowerRule {
    /// Square-free modulus for block length `n`: the largest product of
    /// `levels` distinct primes in `[xi_min n^{3/2}, n^{3/2})`, or the
    /// smallest such product at least `xi_min n^{3/2}` when the window is
    /// empty.
    pub fn primes_for(&self, n: usize) -> Result<Vec<u64>> {
        if self.levels == 0 {
            return Err(Error::InvalidParameter("tower rule needs at least one level".into()));
        }
        if !(self.xi_min > 0.0 && self.xi_min < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "xi_min must lie in (0, 1), got {}",
                self.xi_min
            )));
        }
        let hi = (n as f64).powf(1.5);
        let lo = self.xi_min * hi;
        let mut in_window: Option<Vec<u64>> = None;
        let mut above: Option<Vec<u64>> = None;
        let primes: Vec<u64> = (2..200).filter(|&p| is_prime(p)).collect();
        let mut choice = Vec::new();
        search_products(&primes, self.levels, 0, 1, &mut choice, &mut |set, q| {
            let qf = q as f64;
            if qf >= lo && qf < hi {
                if in_window.as_ref().is_none_or(|b| b.iter().product::<u64>() < q) {
                    in_window = Some(set.to_vec());
                }
            } else if qf >= lo && above.as_ref().is_none_or(|b| b.iter().product::<u64>() > q) {
                above = Some(set.to_vec());
            }
        });
        in_window
            .or(above)
            .ok_or_else(|| Error::InvalidParameter(format!("no {}-prime modulus found for n = {n}", self.levels)))
    }

    /// Code dimensions `m_l = round(n (log2(4 / V_n^{2/n}) / 2 + delta) / log2 p_l)`,
    /// clamped to `[0, n]`.
    pub fn dimensions_for(&self, n: usize, primes: &[u64]) -> Vec<usize> {
        let v = unit_ball_volume(n).powf(2.0 / n as f64);
        let per_dim = 0.5 * (4.0 / v).log2() + self.delta;
        primes
            .iter()
            .map(|&p| {
                let m = (n as f64 * per_dim / (p as f64).log2()).round();
                m.clamp(0.0, n as f64) as usize
            })
            .collect()
    }
}

const PRODUCT_SEARCH_LIMIT: u64 = 1 << 20;

fn search_products(
    primes: &[u64],
    remaining: usize,
    start: usize,
    product: u64,
    choice: &mut Vec<u64>,
    visit: &mut dyn FnMut(&[u64], u64),
) {
    if remaining == 0 {
        visit(choice, product);
        return;
    }
    for i in start..primes.len() {
        let Some(next) = product.checked_mul(primes[i]) else {
            return;
        };
        if next > PRODUCT_SEARCH_LIMIT {
            return;
        }
        choice.push(primes[i]);
        search_products(primes, remaining - 1, i + 1, next, choice, visit);
        choice.pop();
    }
}

/// One row of the quantization sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub primes: Vec<u64>,
    pub dims: Vec<usize>,
    pub ensemble: usize,
    pub mean_g: f64,
    pub g_se: f64,
    pub sphere_bound: f64,
}

/// Mean normalized second moment of random multilevel lattices, one row per
/// `n`, preceded by the `n = 1` cubic baseline.
pub fn ensemble_quantization_sweep(
    rule: &TowerRule,
    n_list: &[usize],
    ensemble: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if ensemble == 0 {
        return Err(Error::InvalidParameter("ensemble size must be positive".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len() + 1);
    let z1 = MultilevelLattice::integer(1)?.second_moment_mc(trials, seed)?;
    rows.push(SweepRow {
        n: 1,
        primes: vec![],
        dims: vec![],
        ensemble: 1,
        mean_g: z1.g,
        g_se: z1.g_se,
        sphere_bound: SPHERE_BOUND_G,
    });
    for (row_idx, &n) in n_list.iter().enumerate() {
        let primes = rule.primes_for(n)?;
        let dims = rule.dimensions_for(n, &primes);
        let map = CrtMap::ring_iso(PrimeTower::square_free(&primes)?);
        let mut gs = Vec::with_capacity(ensemble);
        let mut var_sum = 0.0;
        for member in 0..ensemble {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((row_idx as u64 + 1) << 32) ^ member as u64);
            let codes = primes
                .iter()
                .zip(&dims)
                .map(|(&p, &m)| LinearCode::random_with(n, m, p, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let lat = MultilevelLattice::new(codes, map.clone())?;
            let sm = lat.second_moment_mc(trials, rng.random())?;
            gs.push(sm.g);
            var_sum += sm.g_se * sm.g_se;
        }
        let k = ensemble as f64;
        let mean_g = gs.iter().sum::<f64>() / k;
        // within-member MC error plus code-to-code spread
        let spread = if ensemble > 1 {
            gs.iter().map(|g| (g - mean_g).powi(2)).sum::<f64>() / (k - 1.0) / k
        } else {
            0.0
        };
        rows.push(SweepRow {
            n,
            primes,
            dims,
            ensemble,
            mean_g,
            g_se: (var_sum / (k * k) + spread).sqrt(),
            sphere_bound: SPHERE_BOUND_G,
        });
    }
    Ok(rows)
}
