//! Quasi-static Rayleigh block fading with complex AWGN.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cpm::{CpmParams, Waveform};
use crate::error::{Error, Result};

/// `Lr × Lt` matrix of fading coefficients.
pub type ChannelMatrix = DMatrix<Complex64>;

/// Independent random stream for one Monte Carlo trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// I.i.d. `CN(0, 1)` coefficients.
pub fn sample_fading<R: Rng + ?Sized>(lt: usize, lr: usize, rng: &mut R) -> ChannelMatrix {
    DMatrix::from_fn(lr, lt, |_, _| complex_normal(rng, 1.0))
}

/// Fading trace of one burst plus the noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// One matrix per coherence interval.
    pub per_block: Vec<ChannelMatrix>,
    /// Coherence length in code blocks.
    pub block_len: usize,
    /// Noise spectral density.
    pub n0: f64,
}

impl ChannelRealization {
    /// Draws a fresh matrix for every coherence interval covering `n_symbols`.
    pub fn draw<R: Rng + ?Sized>(
        lt: usize,
        lr: usize,
        n_symbols: usize,
        block_len: usize,
        n0: f64,
        rng: &mut R,
    ) -> Self {
        let span = lt * block_len.max(1);
        let count = n_symbols.div_ceil(span).max(1);
        let per_block = (0..count).map(|_| sample_fading(lt, lr, rng)).collect();
        ChannelRealization { per_block, block_len: block_len.max(1), n0 }
    }

    /// The same matrix for the whole burst.
    pub fn fixed(a: ChannelMatrix, n0: f64) -> Self {
        ChannelRealization { per_block: vec![a], block_len: usize::MAX, n0 }
    }

    pub fn lt(&self) -> usize {
        self.per_block[0].ncols()
    }

    pub fn lr(&self) -> usize {
        self.per_block[0].nrows()
    }

    /// Matrix in force during symbol slot `k` (zero based).
    pub fn at_slot(&self, k: usize) -> &ChannelMatrix {
        let span = self.lt().saturating_mul(self.block_len);
        let idx = (k / span).min(self.per_block.len() - 1);
        &self.per_block[idx]
    }
}

/// `r_n(t) = Σ_m a_{n,m} s_m(t) + w_n(t)`; each noise sample has variance
/// `N0 · sps / T`.
pub fn transmit<R: Rng + ?Sized>(
    waveforms: &[Waveform],
    channel: &ChannelRealization,
    params: &CpmParams,
    rng: &mut R,
) -> Result<Vec<Waveform>> {
    let lt = channel.lt();
    if waveforms.len() != lt {
        return Err(Error::LengthMismatch { expected: lt, actual: waveforms.len() });
    }
    let len = waveforms[0].len();
    if let Some(w) = waveforms.iter().find(|w| w.len() != len) {
        return Err(Error::LengthMismatch { expected: len, actual: w.len() });
    }
    let sps = params.sps();
    let sigma2 = channel.n0 * params.sample_rate();
    let mut out: Vec<Waveform> = (0..channel.lr())
        .map(|n| Waveform {
            samples: vec![Complex64::new(0.0, 0.0); len],
            sample_rate: waveforms[0].sample_rate,
            t0: waveforms[0].t0,
            antenna: n + 1,
        })
        .collect();
    for (idx, _) in waveforms[0].samples.iter().enumerate() {
        let a = channel.at_slot(idx / sps);
        for (n, rx) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, w) in waveforms.iter().enumerate() {
                acc += a[(n, m)] * w.samples[idx];
            }
            rx.samples[idx] = acc;
        }
    }
    // Noise is drawn after the signal so that the same stream yields the same
    // normalized noise at every noise level.
    for rx in &mut out {
        for s in &mut rx.samples {
            *s += complex_normal(rng, 1.0) * sigma2.sqrt();
        }
    }
    Ok(out)
}

/// Noise density for a given `Eb/N0` in dB, with `Eb = Es / log2(M)`.
pub fn snr_to_n0(ebn0_db: f64, params: &CpmParams) -> f64 {
    let eb = params.es() / (params.alphabet_size() as f64).log2();
    eb * 10f64.powf(-ebn0_db / 10.0)
}
