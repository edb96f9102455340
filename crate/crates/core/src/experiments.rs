//! Seeded Monte Carlo campaigns: BER curves, initial-phase sweeps, spectra
//! and orthogonality checks.
//!
//! Every random draw of trial `k` comes from stream `k` of the configured
//! seed, so results do not depend on the thread count and the same data,
//! fading and normalized noise are reused across SNR and phase grid points.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{block_gram, welch_psd, PsdEstimate, Window};
use crate::channel::{snr_to_n0, transmit, trial_rng, ChannelRealization};
use crate::cpm::{CpmParams, Pulse};
use crate::error::{Error, Result};
use crate::receiver::{bits_to_symbols, mlsd_detect, Trellis};
use crate::stc::{encode_continuous, Correction, StcCodeSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Trials evaluated between two early-stop checks.
const CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    BerSweep,
    PhaseSweep1d,
    PhaseSweep2d,
    PsdReport,
    OrthoCheck,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExperimentKind::BerSweep => "ber_sweep",
            ExperimentKind::PhaseSweep1d => "phase_sweep_1d",
            ExperimentKind::PhaseSweep2d => "phase_sweep_2d",
            ExperimentKind::PsdReport => "psd_report",
            ExperimentKind::OrthoCheck => "ortho_check",
        })
    }
}

fn default_phase_grid() -> f64 {
    0.05
}
fn default_burst_len() -> usize {
    120
}
fn default_max_errors() -> u64 {
    400
}
fn default_one() -> usize {
    1
}
fn default_oversampling() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: CpmParams,
    pub spec: StcCodeSpec,
    pub experiment: ExperimentKind,
    #[serde(rename = "snr_grid_dB", default)]
    pub snr_grid_db: Vec<f64>,
    /// Sweep resolution in cycles.
    #[serde(default = "default_phase_grid")]
    pub phase_grid: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_bits: Option<u64>,
    /// Trial volume in code blocks; used when `n_bits` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_blocks: Option<u64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    /// Symbols per Monte Carlo burst.
    #[serde(default = "default_burst_len")]
    pub burst_len: usize,
    /// Early stop for BER curves; sweeps always run the full volume.
    #[serde(default = "default_max_errors")]
    pub max_errors: u64,
    /// Fixed operating point of the phase sweeps.
    #[serde(rename = "sweep_snr_dB", default, skip_serializing_if = "Option::is_none")]
    pub sweep_snr_db: Option<f64>,
    #[serde(default = "default_one")]
    pub lr: usize,
    /// Fading coherence in code blocks.
    #[serde(default = "default_one")]
    pub block_len: usize,
    /// Samples-per-symbol multiplier for the orthogonality check.
    #[serde(default = "default_oversampling")]
    pub oversampling: usize,
    /// Suffix distinguishing the runs of a multi-curve preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ExperimentConfig {
    /// The benchmark modem (M=4, h=1/2, 2REC, 12 samples per symbol).
    pub fn benchmark(experiment: ExperimentKind, spec: StcCodeSpec) -> Self {
        ExperimentConfig {
            params: CpmParams::benchmark(),
            spec,
            experiment,
            snr_grid_db: Vec::new(),
            phase_grid: default_phase_grid(),
            n_bits: None,
            n_blocks: None,
            seed: 1,
            output_path: None,
            burst_len: default_burst_len(),
            max_errors: default_max_errors(),
            sweep_snr_db: None,
            lr: 1,
            block_len: 1,
            oversampling: default_oversampling(),
            label: None,
        }
    }

    pub fn bits_per_burst(&self) -> u64 {
        self.burst_len as u64 * self.params.bits_per_symbol() as u64
    }

    /// Requested volume in bits.
    pub fn trial_bits(&self) -> Result<u64> {
        match (self.n_bits, self.n_blocks) {
            (Some(b), _) => Ok(b),
            (None, Some(blocks)) => {
                Ok(blocks * self.spec.lt() as u64 * self.params.bits_per_symbol() as u64)
            }
            (None, None) => Err(Error::Config("either n_bits or n_blocks is required".into())),
        }
    }

    /// Bursts needed to reach the requested volume.
    pub fn n_trials(&self) -> Result<u64> {
        Ok(self.trial_bits()?.div_ceil(self.bits_per_burst()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        let lt = self.spec.lt();
        if self.trial_bits()? == 0 {
            return fail("trial volume must be positive".into());
        }
        if self.burst_len == 0 || !self.burst_len.is_multiple_of(lt) {
            return fail(format!("burst_len {} is not a positive multiple of Lt={lt}", self.burst_len));
        }
        if self.lr == 0 || self.block_len == 0 || self.oversampling == 0 {
            return fail("lr, block_len and oversampling must be positive".into());
        }
        let steps = 1.0 / self.phase_grid;
        if !(self.phase_grid > 0.0 && self.phase_grid <= 1.0) || (steps - steps.round()).abs() > 1e-9 {
            return fail(format!("phase_grid {} does not divide one cycle", self.phase_grid));
        }
        if self.spec.correction() == Correction::None
            && lt > 1
            && self.experiment != ExperimentKind::OrthoCheck
        {
            return fail("uncorrected multi-antenna codes are only accepted by ortho_check".into());
        }
        match self.experiment {
            ExperimentKind::BerSweep if self.snr_grid_db.is_empty() => {
                fail("snr_grid_dB must not be empty".into())
            }
            ExperimentKind::PhaseSweep1d if lt != 2 => fail(format!("phase_sweep_1d needs Lt=2, got {lt}")),
            ExperimentKind::PhaseSweep2d if lt != 3 => fail(format!("phase_sweep_2d needs Lt=3, got {lt}")),
            _ => Ok(()),
        }
    }

    pub fn sweep_snr(&self) -> f64 {
        self.sweep_snr_db.unwrap_or(match self.experiment {
            ExperimentKind::PhaseSweep2d => 13.0,
            _ => 12.5,
        })
    }

    fn phase_points(&self) -> Vec<f64> {
        let n = (1.0 / self.phase_grid).round() as usize;
        (0..n).map(|k| k as f64 / n as f64).collect()
    }
}

/// Wilson score interval at 95%.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    #[serde(rename = "snr_dB")]
    pub snr_db: f64,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    #[serde(skip)]
    pub wallclock: Duration,
}

impl BerRecord {
    fn new(snr_db: f64, bits_sent: u64, bit_errors: u64, wallclock: Duration) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(bit_errors, bits_sent);
        let ber = if bits_sent == 0 { 0.0 } else { bit_errors as f64 / bits_sent as f64 };
        BerRecord { snr_db, bits_sent, bit_errors, ber, ci_lo, ci_hi, wallclock }
    }
}

/// Everything that stays fixed over the trials of one grid point.
struct Link {
    params: CpmParams,
    spec: StcCodeSpec,
    trellis: Trellis,
    burst_len: usize,
    lr: usize,
    block_len: usize,
    seed: u64,
}

impl Link {
    fn new(cfg: &ExperimentConfig, spec: StcCodeSpec) -> Result<Self> {
        let trellis = Trellis::build(&cfg.params, &spec)?;
        Ok(Link {
            params: cfg.params.clone(),
            spec,
            trellis,
            burst_len: cfg.burst_len,
            lr: cfg.lr,
            block_len: cfg.block_len,
            seed: cfg.seed,
        })
    }

    /// One burst: returns `(bits, bit errors)`.
    fn trial(&self, n0: f64, trial: u64) -> Result<(u64, u64)> {
        let mut rng = trial_rng(self.seed, trial);
        let k = self.params.bits_per_symbol() as usize;
        let bits: Vec<u8> = (0..self.burst_len * k).map(|_| rng.random_range(0..2u8)).collect();
        let symbols = bits_to_symbols(&bits, self.params.alphabet_size())?;
        let tx = encode_continuous(&self.spec, &self.params, &symbols)?;
        let channel =
            ChannelRealization::draw(self.spec.lt(), self.lr, self.burst_len, self.block_len, n0, &mut rng);
        let rx = transmit(&tx, &channel, &self.params, &mut rng)?;
        let det = mlsd_detect(&rx, &channel, &self.trellis, &self.params, &self.spec)?;
        let errors = bits.iter().zip(&det.bits).filter(|(a, b)| a != b).count() as u64;
        Ok((bits.len() as u64, errors))
    }

    fn run(&self, n0: f64, trials: std::ops::Range<u64>) -> Result<(u64, u64)> {
        trials
            .into_par_iter()
            .map(|t| self.trial(n0, t))
            .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))
    }
}

/// BER versus `Eb/N0`, stopping each point at `max_errors` bit errors
/// (checked between fixed-size trial chunks, so the stop is deterministic).
pub fn run_ber_sweep(cfg: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let link = Link::new(cfg, cfg.spec.clone())?;
    let total = cfg.n_trials()?;
    let mut out = Vec::with_capacity(cfg.snr_grid_db.len());
    for &snr in &cfg.snr_grid_db {
        let started = Instant::now();
        let n0 = snr_to_n0(snr, &cfg.params);
        let (mut bits, mut errors) = (0, 0);
        let mut next = 0;
        while next < total && errors < cfg.max_errors {
            let end = (next + CHUNK as u64).min(total);
            let (b, e) = link.run(n0, next..end)?;
            bits += b;
            errors += e;
            next = end;
        }
        out.push(BerRecord::new(snr, bits, errors, started.elapsed()));
    }
    Ok(out)
}

/// `Eb/N0` at which the curve crosses `target`, interpolating `log10(BER)`
/// linearly between neighbouring grid points with nonzero errors.
pub fn snr_at_ber(records: &[BerRecord], target: f64) -> Option<f64> {
    let pts: Vec<&BerRecord> = records.iter().filter(|r| r.bit_errors > 0).collect();
    pts.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if a.ber >= target && b.ber <= target && a.ber > b.ber {
            let frac = (a.ber.log10() - target.log10()) / (a.ber.log10() - b.ber.log10());
            Some(a.snr_db + frac * (b.snr_db - a.snr_db))
        } else {
            None
        }
    })
}

/// High-SNR decay in dB per decade: least-squares line through
/// `log10(BER)` over the points within `decades` of the lowest BER among
/// points with at least `min_errors` errors.
pub fn decay_db_per_decade(records: &[BerRecord], decades: f64, min_errors: u64) -> Option<f64> {
    let measured: Vec<&BerRecord> =
        records.iter().filter(|r| r.bit_errors >= min_errors.max(1)).collect();
    let floor = measured.iter().map(|r| r.ber).fold(f64::INFINITY, f64::min);
    let pts: Vec<(f64, f64)> = measured
        .iter()
        .filter(|r| r.ber <= floor * 10f64.powf(decades) * (1.0 + 1e-12))
        .map(|r| (r.snr_db, r.ber.log10()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -1.0 / slope)
}

/// Record of `records` whose SNR is nearest to `snr`.
pub fn nearest_record(records: &[BerRecord], snr: f64) -> Option<&BerRecord> {
    records.iter().min_by(|a, b| (a.snr_db - snr).abs().total_cmp(&(b.snr_db - snr).abs()))
}

pub fn intervals_disjoint(a: &BerRecord, b: &BerRecord) -> bool {
    a.ci_hi < b.ci_lo || b.ci_hi < a.ci_lo
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub theta1: f64,
    pub theta2: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl SweepPoint {
    fn new(theta1: f64, theta2: f64, bits: u64, errors: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(errors, bits);
        SweepPoint { theta1, theta2, bits, errors, ber: errors as f64 / bits as f64, ci_lo, ci_hi }
    }
}

fn sweep(cfg: &ExperimentConfig, grid: Vec<(f64, f64, Vec<f64>)>) -> Result<Vec<SweepPoint>> {
    let n0 = snr_to_n0(cfg.sweep_snr(), &cfg.params);
    let trials = cfg.n_trials()?;
    grid.into_par_iter()
        .map(|(t1, t2, theta)| {
            let link = Link::new(cfg, cfg.spec.with_theta(theta)?)?;
            let (bits, errors) = (0..trials).try_fold((0, 0), |acc, t| {
                link.trial(n0, t).map(|(b, e)| (acc.0 + b, acc.1 + e))
            })?;
            Ok(SweepPoint::new(t1, t2, bits, errors))
        })
        .collect()
}

/// BER over `Δθ = θ2 - θ1` in `[0, 1)` with `θ1 = 0`; rows carry
/// `theta1 = 0, theta2 = Δθ`.
pub fn run_phase_sweep_1d(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let grid = cfg.phase_points().into_iter().map(|d| (0.0, d, vec![0.0, d])).collect();
    sweep(cfg, grid)
}

/// BER over `(θ1, θ2)` on the unit torus with `θ3 = 0`, row-major in `θ1`.
pub fn run_phase_sweep_2d(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let pts = cfg.phase_points();
    let grid = pts
        .iter()
        .flat_map(|&a| pts.iter().map(move |&b| (a, b, vec![a, b, 0.0])))
        .collect();
    sweep(cfg, grid)
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn lowest(points: &[&SweepPoint]) -> Option<usize> {
    (0..points.len()).min_by(|&a, &b| points[a].ber.total_cmp(&points[b].ber))
}

/// Global minimum and the best point at least a quarter cycle away from it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep1dSummary {
    pub argmin: f64,
    pub min_ber: f64,
    pub second_argmin: f64,
    pub second_ber: f64,
    /// Circular distance between the two minima.
    pub spacing: f64,
}

pub fn summarize_1d(points: &[SweepPoint]) -> Option<Sweep1dSummary> {
    let all: Vec<&SweepPoint> = points.iter().collect();
    let best = all[lowest(&all)?];
    let far: Vec<&SweepPoint> = points
        .iter()
        .filter(|p| circular_distance(p.theta2, best.theta2) >= 0.25 - 1e-12)
        .collect();
    let second = far[lowest(&far)?];
    Some(Sweep1dSummary {
        argmin: best.theta2,
        min_ber: best.ber,
        second_argmin: second.theta2,
        second_ber: second.ber,
        spacing: circular_distance(best.theta2, second.theta2),
    })
}

/// Points not exceeded by any of their eight torus neighbours, best first.
pub fn local_minima_2d(points: &[SweepPoint]) -> Vec<SweepPoint> {
    let n = (points.len() as f64).sqrt().round() as usize;
    if n * n != points.len() || n == 0 {
        return Vec::new();
    }
    let at = |i: usize, j: usize| &points[i * n + j];
    let mut minima = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let here = at(i, j).ber;
            let is_min = (-1i64..=1).all(|di| {
                (-1i64..=1).all(|dj| {
                    (di == 0 && dj == 0) || {
                        let ni = (i as i64 + di).rem_euclid(n as i64) as usize;
                        let nj = (j as i64 + dj).rem_euclid(n as i64) as usize;
                        here <= at(ni, nj).ber
                    }
                })
            });
            if is_min {
                minima.push(at(i, j).clone());
            }
        }
    }
    minima.sort_by(|a, b| a.ber.total_cmp(&b.ber).then(a.theta1.total_cmp(&b.theta1)).then(a.theta2.total_cmp(&b.theta2)));
    minima
}

/// True when a local minimum lies within `tol` (per coordinate, on the
/// torus) of `target`.
pub fn has_minimum_near(minima: &[SweepPoint], target: (f64, f64), tol: f64) -> bool {
    minima.iter().any(|p| {
        circular_distance(p.theta1, target.0) <= tol + 1e-9
            && circular_distance(p.theta2, target.1) <= tol + 1e-9
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PsdReport {
    #[serde(skip)]
    pub per_antenna: Vec<PsdEstimate>,
    #[serde(skip)]
    pub composite: PsdEstimate,
    pub n_symbols: usize,
    pub bin_width: f64,
    pub centroids: Vec<f64>,
    /// Centroid of antenna `m` minus that of antenna 1.
    pub measured_shifts: Vec<f64>,
    /// `(m - 1) / (Lt T)`.
    pub expected_shifts: Vec<f64>,
    pub level_db: f64,
    pub single_bandwidth: f64,
    pub composite_bandwidth: f64,
    /// `composite / single - 1` at `level_db`.
    pub expansion_ratio: f64,
}

/// Per-antenna Welch spectra of a long random burst (segment `256·sps`,
/// Hann, half overlap) and the bandwidth growth of their sum at -30 dB.
pub fn run_psd_report(cfg: &ExperimentConfig) -> Result<PsdReport> {
    cfg.validate()?;
    let p = &cfg.params;
    let n_symbols = (cfg.trial_bits()? / p.bits_per_symbol() as u64) as usize;
    let n_symbols = n_symbols - n_symbols % cfg.spec.lt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let alphabet = p.alphabet();
    let data: Vec<i32> = (0..n_symbols).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
    let tx = encode_continuous(&cfg.spec, p, &data)?;
    let per_antenna = tx
        .iter()
        .map(|w| welch_psd(w, 256 * p.sps(), 0.5, Window::Hann))
        .collect::<Result<Vec<_>>>()?;
    let composite = PsdEstimate::combine(&per_antenna)?;
    let level_db = -30.0;
    let centroids: Vec<f64> = per_antenna.iter().map(|e| e.centroid()).collect();
    let lt = cfg.spec.lt();
    let single_bandwidth = per_antenna[0].bandwidth(level_db);
    let composite_bandwidth = composite.bandwidth(level_db);
    Ok(PsdReport {
        n_symbols,
        bin_width: per_antenna[0].bin_width(),
        measured_shifts: centroids.iter().map(|c| c - centroids[0]).collect(),
        expected_shifts: (0..lt).map(|m| m as f64 / (lt as f64 * p.symbol_period())).collect(),
        centroids,
        level_db,
        single_bandwidth,
        composite_bandwidth,
        expansion_ratio: composite_bandwidth / single_bandwidth - 1.0,
        per_antenna,
        composite,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthoBlock {
    pub block: usize,
    pub max_off_diagonal: f64,
    pub max_diagonal_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthoReport {
    #[serde(skip)]
    pub blocks: Vec<OrthoBlock>,
    pub n_blocks: usize,
    pub sps: usize,
    pub max_off_diagonal: f64,
    pub max_diagonal_deviation: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Gram matrices of random code blocks at `oversampling × sps`, judged
/// against `1e-6 · Es`.
pub fn run_ortho_check(cfg: &ExperimentConfig) -> Result<OrthoReport> {
    cfg.validate()?;
    let p = cfg.params.with_sps(cfg.params.sps() * cfg.oversampling)?;
    let lt = cfg.spec.lt();
    let n_blocks = cfg.n_blocks.map(|b| b as usize).unwrap_or_else(|| {
        (cfg.n_bits.unwrap_or(0) / (lt as u64 * p.bits_per_symbol() as u64)) as usize
    });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let alphabet = p.alphabet();
    // One spare block supplies the closing sample of the last checked block.
    let data: Vec<i32> =
        (0..(n_blocks + 1) * lt).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
    let tx = encode_continuous(&cfg.spec, &p, &data)?;
    let es = p.es();
    let blocks = (0..n_blocks)
        .map(|l| {
            let g = block_gram(&tx, l, &p)?;
            Ok(OrthoBlock {
                block: l,
                max_off_diagonal: g.max_off_diagonal(),
                max_diagonal_deviation: g.max_diagonal_deviation(es),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_off_diagonal = blocks.iter().map(|b| b.max_off_diagonal).fold(0.0, f64::max);
    let max_diagonal_deviation = blocks.iter().map(|b| b.max_diagonal_deviation).fold(0.0, f64::max);
    let threshold = 1e-6 * es;
    Ok(OrthoReport {
        n_blocks,
        sps: p.sps(),
        pass: max_off_diagonal < threshold && max_diagonal_deviation < threshold,
        max_off_diagonal,
        max_diagonal_deviation,
        threshold,
        blocks,
    })
}

/// Result of any experiment kind.
#[derive(Debug, Clone)]
pub enum Outcome {
    Ber(Vec<BerRecord>),
    Sweep1d(Vec<SweepPoint>),
    Sweep2d(Vec<SweepPoint>),
    Psd(PsdReport),
    Ortho(OrthoReport),
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    Ok(match cfg.experiment {
        ExperimentKind::BerSweep => Outcome::Ber(run_ber_sweep(cfg)?),
        ExperimentKind::PhaseSweep1d => Outcome::Sweep1d(run_phase_sweep_1d(cfg)?),
        ExperimentKind::PhaseSweep2d => Outcome::Sweep2d(run_phase_sweep_2d(cfg)?),
        ExperimentKind::PsdReport => Outcome::Psd(run_psd_report(cfg)?),
        ExperimentKind::OrthoCheck => Outcome::Ortho(run_ortho_check(cfg)?),
    })
}

impl Outcome {
    /// Headline numbers for the sidecar.
    pub fn summary(&self) -> serde_json::Value {
        let json = |v: serde_json::Result<serde_json::Value>| v.unwrap_or(serde_json::Value::Null);
        match self {
            Outcome::Ber(r) => json(serde_json::to_value(r)),
            Outcome::Sweep1d(p) => json(serde_json::to_value(summarize_1d(p))),
            Outcome::Sweep2d(p) => json(serde_json::to_value(local_minima_2d(p))),
            Outcome::Psd(r) => json(serde_json::to_value(r)),
            Outcome::Ortho(r) => json(serde_json::to_value(r)),
        }
    }

    /// Table body with a column header, without the comment preamble.
    pub fn csv_body(&self) -> String {
        let mut s = String::new();
        match self {
            Outcome::Ber(records) => {
                s.push_str("snr_db,bits,errors,ber,ci_lo,ci_hi\n");
                for r in records {
                    let _ = writeln!(s, "{},{},{},{},{},{}", r.snr_db, r.bits_sent, r.bit_errors, r.ber, r.ci_lo, r.ci_hi);
                }
            }
            Outcome::Sweep1d(points) | Outcome::Sweep2d(points) => {
                s.push_str("theta1,theta2,ber,ci_lo,ci_hi\n");
                for p in points {
                    let _ = writeln!(s, "{},{},{},{},{}", p.theta1, p.theta2, p.ber, p.ci_lo, p.ci_hi);
                }
            }
            Outcome::Psd(r) => {
                s.push_str("freq");
                for m in 1..=r.per_antenna.len() {
                    let _ = write!(s, ",ant{m}_db");
                }
                s.push_str(",composite_db\n");
                for (k, f) in r.composite.freqs.iter().enumerate() {
                    let _ = write!(s, "{f}");
                    for e in &r.per_antenna {
                        let _ = write!(s, ",{}", e.power_db[k]);
                    }
                    let _ = writeln!(s, ",{}", r.composite.power_db[k]);
                }
            }
            Outcome::Ortho(r) => {
                s.push_str("block,max_off_diagonal,max_diagonal_deviation\n");
                for b in &r.blocks {
                    let _ = writeln!(s, "{},{},{}", b.block, b.max_off_diagonal, b.max_diagonal_deviation);
                }
            }
        }
        s
    }
}

/// CSV with a comment preamble recording version, seed and configuration.
pub fn render_csv(cfg: &ExperimentConfig, outcome: &Outcome) -> String {
    let config = serde_json::to_string(cfg).unwrap_or_default();
    format!(
        "# stccpm {VERSION}\n# experiment: {}\n# seed: {}\n# config: {config}\n{}",
        cfg.experiment,
        cfg.seed,
        outcome.csv_body()
    )
}

/// JSON sidecar carrying the same provenance plus the summary.
pub fn render_sidecar(cfg: &ExperimentConfig, outcome: &Outcome) -> String {
    let doc = serde_json::json!({
        "version": VERSION,
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "config": cfg,
        "summary": outcome.summary(),
    });
    serde_json::to_string_pretty(&doc).unwrap_or_default() + "\n"
}

pub const PRESETS: &[&str] = &[
    "fig2_psd",
    "fig3_sweep2tx",
    "fig4_sweep3tx",
    "fig4_sweep3tx_a",
    "fig4_sweep3tx_b",
    "fig4_sweep3tx_c",
    "fig5_ber",
    "table1_minima",
];

fn spec(lt: usize, c: Correction, theta: &[f64]) -> StcCodeSpec {
    StcCodeSpec::new(lt, c, theta.to_vec()).expect("preset code spec")
}

fn labelled(mut cfg: ExperimentConfig, label: &str) -> ExperimentConfig {
    cfg.label = Some(label.to_string());
    cfg
}

fn sweep_2d(c: Correction, pulse: Pulse, snr: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::benchmark(ExperimentKind::PhaseSweep2d, spec(3, c, &[0.0; 3]));
    cfg.params = cfg.params.with_pulse(pulse);
    cfg.sweep_snr_db = Some(snr);
    cfg.n_bits = Some(50_000);
    cfg
}

/// Named run sets; multi-run presets carry labels.
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    use Correction::{Linear, Offset};
    let runs = match name {
        // Three antennas show the widest spread of shifted spectra.
        "fig2_psd" => {
            let mut cfg = ExperimentConfig::benchmark(ExperimentKind::PsdReport, spec(3, Linear, &[0.0; 3]));
            cfg.n_bits = Some(40_000);
            vec![cfg]
        }
        "fig3_sweep2tx" => [(Linear, Pulse::Rec, "linpc_rec"), (Offset, Pulse::Rec, "offpc_rec"), (Linear, Pulse::Rc, "linpc_rc"), (Offset, Pulse::Rc, "offpc_rc")]
            .into_iter()
            .map(|(c, pulse, label)| {
                let mut cfg = ExperimentConfig::benchmark(ExperimentKind::PhaseSweep1d, spec(2, c, &[0.0; 2]));
                cfg.params = cfg.params.with_pulse(pulse);
                cfg.phase_grid = 0.01;
                cfg.n_bits = Some(200_000);
                labelled(cfg, label)
            })
            .collect(),
        // a/b differ in the pulse, a/c in the correction.
        "fig4_sweep3tx_a" => vec![labelled(sweep_2d(Offset, Pulse::Rec, 13.0), "a_offpc_rec")],
        "fig4_sweep3tx_b" => vec![labelled(sweep_2d(Offset, Pulse::Rc, 13.0), "b_offpc_rc")],
        "fig4_sweep3tx_c" => vec![labelled(sweep_2d(Linear, Pulse::Rec, 13.0), "c_linpc_rec")],
        "fig4_sweep3tx" => ["fig4_sweep3tx_a", "fig4_sweep3tx_b", "fig4_sweep3tx_c"]
            .iter()
            .map(|n| preset(n).map(|mut v| v.remove(0)))
            .collect::<Result<_>>()?,
        // Six curves: a single-antenna reference, 2 Tx linPC plain and
        // optimized, 2 Tx offPC optimized, 3 Tx linPC plain and optimized.
        // The Eb/N0 range is a guess covering the waterfall of all curves.
        "fig5_ber" => {
            let grid: Vec<f64> = (0..=10).map(|k| 2.0 * k as f64).collect();
            [
                (1, Correction::None, vec![0.0], "1tx"),
                (2, Linear, vec![0.0, 0.0], "2tx_linpc_plain"),
                (2, Linear, vec![0.0, 0.19], "2tx_linpc_opt"),
                (2, Offset, vec![0.0, 0.4], "2tx_offpc_opt"),
                (3, Linear, vec![0.0, 0.0, 0.0], "3tx_linpc_plain"),
                (3, Linear, vec![0.4, 0.15, 0.0], "3tx_linpc_opt"),
            ]
            .into_iter()
            .map(|(lt, c, theta, label)| {
                let mut cfg = ExperimentConfig::benchmark(ExperimentKind::BerSweep, spec(lt, c, &theta));
                cfg.snr_grid_db = grid.clone();
                cfg.n_bits = Some(10_000_000);
                labelled(cfg, label)
            })
            .collect()
        }
        // Minima survey at 12.5 dB rather than the 13 dB sweep default.
        "table1_minima" => vec![
            labelled(sweep_2d(Offset, Pulse::Rec, 12.5), "offpc_rec"),
            labelled(sweep_2d(Linear, Pulse::Rec, 12.5), "linpc_rec"),
        ],
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}', expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(runs)
}
