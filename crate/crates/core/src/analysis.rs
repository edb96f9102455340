//! Orthogonality, spectrum and pairwise-error analysis.
//!
//! All integrals are evaluated numerically on the waveform sampling grid.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use statrs::function::erf::erfc;

use crate::cpm::{CpmParams, Waveform};
use crate::error::{Error, Result};
use crate::stc::{correction_phase, encode_continuous, StcCodeSpec};

/// `∫_block s_m(t) s_{m'}^*(t) dt` for every antenna pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub values: DMatrix<Complex64>,
}

impl GramMatrix {
    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.values.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(self.values[(i, j)].norm());
                }
            }
        }
        worst
    }

    pub fn max_diagonal_deviation(&self, target: f64) -> f64 {
        (0..self.values.nrows())
            .map(|i| (self.values[(i, i)] - Complex64::new(target, 0.0)).norm())
            .fold(0.0, f64::max)
    }
}

/// Trapezoidal Gram matrix of code block `l`.
///
/// The closing sample at `(l+1) Lt T` must be present, so the last block of a
/// burst cannot be checked.
pub fn block_gram(waveforms: &[Waveform], l: usize, params: &CpmParams) -> Result<GramMatrix> {
    let lt = waveforms.len();
    let sps = params.sps();
    let start = l * lt * sps;
    let end = start + lt * sps;
    if waveforms.iter().any(|w| w.len() <= end) {
        return Err(Error::IncompleteBlock { block: l });
    }
    let dt = params.sample_interval();
    let values = DMatrix::from_fn(lt, lt, |i, j| {
        let a = &waveforms[i].samples;
        let b = &waveforms[j].samples;
        let mut acc = Complex64::new(0.0, 0.0);
        for idx in start..=end {
            let w = if idx == start || idx == end { 0.5 } else { 1.0 };
            acc += a[idx] * b[idx].conj() * w;
        }
        acc * dt
    });
    Ok(GramMatrix { values })
}

/// Taper applied to each Welch segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
}

impl Window {
    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            // Periodic Hann.
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

/// Two-sided power spectral density on a centered frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    /// Bin centers in Hz, ascending, zero included.
    pub freqs: Vec<f64>,
    /// Linear density (power per Hz).
    pub power: Vec<f64>,
    /// Density relative to the peak, in dB.
    pub power_db: Vec<f64>,
    pub segment_len: usize,
    pub overlap: f64,
    pub window: Window,
}

impl PsdEstimate {
    fn from_power(
        freqs: Vec<f64>,
        power: Vec<f64>,
        segment_len: usize,
        overlap: f64,
        window: Window,
    ) -> Self {
        let peak = power.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
        let power_db = power.iter().map(|p| 10.0 * (p.max(1e-300) / peak).log10()).collect();
        PsdEstimate { freqs, power, power_db, segment_len, overlap, window }
    }

    pub fn bin_width(&self) -> f64 {
        self.freqs[1] - self.freqs[0]
    }

    /// Power-weighted mean frequency.
    pub fn centroid(&self) -> f64 {
        let total: f64 = self.power.iter().sum();
        self.freqs.iter().zip(&self.power).map(|(f, p)| f * p).sum::<f64>() / total
    }

    pub fn peak_frequency(&self) -> f64 {
        let (idx, _) = self
            .power
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
        self.freqs[idx]
    }

    /// Distance between the outermost bins at or above `level_db` (negative,
    /// relative to the peak).
    pub fn bandwidth(&self, level_db: f64) -> f64 {
        let first = self.power_db.iter().position(|&p| p >= level_db);
        let last = self.power_db.iter().rposition(|&p| p >= level_db);
        match (first, last) {
            (Some(a), Some(b)) => self.freqs[b] - self.freqs[a],
            _ => 0.0,
        }
    }

    /// Sum of several spectra on the same grid (the total radiated spectrum
    /// of an antenna array).
    pub fn combine(parts: &[PsdEstimate]) -> Result<PsdEstimate> {
        let first = parts.first().ok_or_else(|| Error::Input("no spectra to combine".into()))?;
        if parts.iter().any(|p| p.freqs != first.freqs) {
            return Err(Error::Input("spectra use different frequency grids".into()));
        }
        let mut power = vec![0.0; first.power.len()];
        for p in parts {
            for (acc, v) in power.iter_mut().zip(&p.power) {
                *acc += v;
            }
        }
        Ok(Self::from_power(first.freqs.clone(), power, first.segment_len, first.overlap, first.window))
    }
}

/// Welch estimate: averaged windowed periodograms.
pub fn welch_psd(
    waveform: &Waveform,
    segment_len: usize,
    overlap: f64,
    window: Window,
) -> Result<PsdEstimate> {
    if segment_len < 2 {
        return Err(Error::Input(format!("segment length {segment_len} too short")));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Input(format!("overlap {overlap} outside [0, 1)")));
    }
    if waveform.len() < 2 * segment_len {
        return Err(Error::Input(format!(
            "waveform of {} samples is shorter than two segments of {segment_len}",
            waveform.len()
        )));
    }
    let step = (segment_len - (overlap * segment_len as f64).round() as usize).max(1);
    let taper = window.coefficients(segment_len);
    let norm = waveform.sample_rate * taper.iter().map(|w| w * w).sum::<f64>();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(segment_len);

    let mut acc = vec![0.0; segment_len];
    let mut count = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    let mut start = 0;
    while start + segment_len <= waveform.len() {
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = waveform.samples[start + i] * taper[i];
        }
        fft.process(&mut buf);
        for (a, x) in acc.iter_mut().zip(&buf) {
            *a += x.norm_sqr();
        }
        count += 1;
        start += step;
    }

    // Reorder so that frequencies ascend from -fs/2.
    let half = segment_len / 2;
    let shift = segment_len - half;
    let df = waveform.sample_rate / segment_len as f64;
    let mut freqs = Vec::with_capacity(segment_len);
    let mut power = Vec::with_capacity(segment_len);
    for i in 0..segment_len {
        let k = (i + half) % segment_len;
        let signed = if k >= shift { k as i64 - segment_len as i64 } else { k as i64 };
        freqs.push(signed as f64 * df);
        power.push(acc[k] / (count as f64 * norm));
    }
    Ok(PsdEstimate::from_power(freqs, power, segment_len, overlap, window))
}

/// `C_s = ∫ Δ(t) Δ(t)^H dt` for one error event, with its spectrum.
#[derive(Debug, Clone)]
pub struct SignalMatrix {
    pub cs: DMatrix<Complex64>,
    /// Descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// Total negative eigenvalue mass removed by the clamp.
    pub clamped: f64,
    pub d: Vec<i32>,
    pub d_hat: Vec<i32>,
    pub spec: StcCodeSpec,
    pub params: CpmParams,
}

impl SignalMatrix {
    pub fn trace(&self) -> f64 {
        (0..self.cs.nrows()).map(|i| self.cs[(i, i)].re).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Product of eigenvalues above `rel_tol` times the largest one.
    pub fn nonzero_eigen_product(&self, rel_tol: f64) -> f64 {
        let top = self.eigenvalues.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return 0.0;
        }
        self.eigenvalues.iter().filter(|&&l| l > rel_tol * top).product()
    }
}

fn hermitian_spectrum(m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, Vec<f64>, f64) {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym.clone());
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let clamped: f64 = values.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
    for v in &mut values {
        *v = v.max(0.0);
    }
    (sym, values, clamped)
}

/// Signal matrix of the pair `(d, d̂)` from the synthesized waveforms.
pub fn signal_matrix(
    spec: &StcCodeSpec,
    params: &CpmParams,
    d: &[i32],
    d_hat: &[i32],
) -> Result<SignalMatrix> {
    if d.len() != d_hat.len() {
        return Err(Error::LengthMismatch { expected: d.len(), actual: d_hat.len() });
    }
    let s = encode_continuous(spec, params, d)?;
    let s_hat = encode_continuous(spec, params, d_hat)?;
    let lt = spec.lt();
    let scale = (lt as f64 * params.symbol_period() / params.es()).sqrt();
    let deltas: Vec<Vec<Complex64>> = s
        .iter()
        .zip(&s_hat)
        .map(|(a, b)| a.samples.iter().zip(&b.samples).map(|(x, y)| (x - y) * scale).collect())
        .collect();
    let dt = params.sample_interval();
    let raw = DMatrix::from_fn(lt, lt, |i, j| {
        deltas[i].iter().zip(&deltas[j]).map(|(a, b)| a * b.conj()).sum::<Complex64>() * dt
    });
    let (cs, eigenvalues, clamped) = hermitian_spectrum(&raw);
    Ok(SignalMatrix {
        cs,
        eigenvalues,
        clamped,
        d: d.to_vec(),
        d_hat: d_hat.to_vec(),
        spec: spec.clone(),
        params: params.clone(),
    })
}

/// `∫_0^{Nc T} c(t) c^H(t) w(t) dt` with `c_m(t) = exp(j2π c_m(t))`.
pub fn correction_correlation(
    spec: &StcCodeSpec,
    params: &CpmParams,
    nc: usize,
    weight: Option<&dyn Fn(f64) -> f64>,
) -> Result<DMatrix<Complex64>> {
    let lt = spec.lt();
    let dt = params.sample_interval();
    let n = nc * params.sps();
    let mut out = DMatrix::from_element(lt, lt, Complex64::new(0.0, 0.0));
    let mut c = vec![Complex64::new(0.0, 0.0); lt];
    for idx in 0..n {
        let t = idx as f64 * dt;
        for (m, slot) in c.iter_mut().enumerate() {
            *slot = Complex64::from_polar(1.0, 2.0 * PI * correction_phase(spec, params, m + 1, t)?);
        }
        let w = weight.map_or(1.0, |f| f(t));
        for i in 0..lt {
            for j in 0..lt {
                out[(i, j)] += c[i] * c[j].conj() * w;
            }
        }
    }
    Ok(out * Complex64::new(dt, 0.0))
}

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Pairwise error probability for a known channel `A` (`Lr × Lt`).
///
/// `C_s` is normalized by `Lt T / Es`; the difference energy seen at the
/// receiver is restored before comparing it with `N0`.
pub fn pwep(cs: &SignalMatrix, a: &DMatrix<Complex64>, n0: f64) -> Result<f64> {
    if n0 <= 0.0 {
        return Err(Error::Input(format!("noise density must be positive, got {n0}")));
    }
    let lt = cs.cs.nrows();
    if a.ncols() != lt {
        return Err(Error::LengthMismatch { expected: lt, actual: a.ncols() });
    }
    let mut quad = 0.0;
    for n in 0..a.nrows() {
        for i in 0..lt {
            for j in 0..lt {
                quad += (a[(n, i)] * cs.cs[(i, j)] * a[(n, j)].conj()).re;
            }
        }
    }
    let energy = quad.max(0.0) * cs.params.es() / (lt as f64 * cs.params.symbol_period());
    Ok(q_function((energy / (2.0 * n0)).sqrt()))
}

/// Reference sequence and error events used to rank initial phases.
pub fn default_error_events(
    spec: &StcCodeSpec,
    params: &CpmParams,
    seed: u64,
) -> Vec<(Vec<i32>, Vec<i32>)> {
    let nc = 2 * spec.lt() * params.gamma();
    let alphabet = params.alphabet();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d: Vec<i32> = (0..nc).map(|_| *alphabet.choose(&mut rng).unwrap()).collect();
    let mut events = Vec::new();
    for pos in 0..nc {
        for &alt in alphabet.iter().filter(|&&a| a != d[pos]) {
            let mut e = d.clone();
            e[pos] = alt;
            events.push((d.clone(), e));
        }
    }
    for _ in 0..200 {
        let a = rng.random_range(0..nc);
        let mut b = rng.random_range(0..nc - 1);
        if b >= a {
            b += 1;
        }
        let mut e = d.clone();
        for pos in [a, b] {
            let others: Vec<i32> = alphabet.iter().copied().filter(|&x| x != d[pos]).collect();
            e[pos] = *others.choose(&mut rng).unwrap();
        }
        events.push((d.clone(), e));
    }
    events
}

/// Minimum over the events of the product of nonzero `C_s` eigenvalues.
pub fn coding_gain_metric(
    spec: &StcCodeSpec,
    params: &CpmParams,
    events: &[(Vec<i32>, Vec<i32>)],
) -> Result<f64> {
    if events.is_empty() {
        return Err(Error::Input("no error events".into()));
    }
    let mut worst = f64::INFINITY;
    for (d, d_hat) in events {
        if d == d_hat {
            continue;
        }
        let sm = signal_matrix(spec, params, d, d_hat)?;
        worst = worst.min(sm.nonzero_eigen_product(1e-9));
    }
    Ok(if worst.is_finite() { worst } else { 0.0 })
}
