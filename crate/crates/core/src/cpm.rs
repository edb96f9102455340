//! Conventional CPM primitives.
//!
//! Phases are carried in cycles (1.0 == 2π rad). Trellis-facing phase values
//! use exact rationals so that states can be compared without float drift.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the phase smoothing function `q(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pulse {
    /// Rectangular frequency pulse (linear phase ramp).
    Rec,
    /// Raised-cosine frequency pulse.
    Rc,
}

impl FromStr for Pulse {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rec" => Ok(Pulse::Rec),
            "rc" => Ok(Pulse::Rc),
            other => Err(Error::Config(format!("unknown pulse shape `{other}`"))),
        }
    }
}

impl fmt::Display for Pulse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pulse::Rec => f.write_str("REC"),
            Pulse::Rc => f.write_str("RC"),
        }
    }
}

/// Phase smoothing function `q(t)` in cycles.
///
/// Zero for `t <= 0`, one half for `t >= gamma * period`, and the integrated
/// REC or RC frequency pulse in between. Both endpoints are returned exactly.
pub fn phase_pulse(pulse: Pulse, gamma: usize, t: f64, period: f64) -> f64 {
    let len = gamma as f64 * period;
    if t <= 0.0 {
        return 0.0;
    }
    if t >= len {
        return 0.5;
    }
    let x = t / len;
    match pulse {
        Pulse::Rec => 0.5 * x,
        Pulse::Rc => 0.5 * (x - (2.0 * PI * x).sin() / (2.0 * PI)),
    }
}

/// CPM modulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCpmParams", into = "RawCpmParams")]
pub struct CpmParams {
    alphabet_size: u32,
    h: Ratio<i64>,
    gamma: usize,
    pulse: Pulse,
    sps: usize,
    symbol_period: f64,
    es: f64,
}

impl CpmParams {
    pub fn new(
        alphabet_size: u32,
        h: Ratio<i64>,
        gamma: usize,
        pulse: Pulse,
        sps: usize,
    ) -> Result<Self> {
        Self::with_timing(alphabet_size, h, gamma, pulse, sps, 1.0, 1.0)
    }

    pub fn with_timing(
        alphabet_size: u32,
        h: Ratio<i64>,
        gamma: usize,
        pulse: Pulse,
        sps: usize,
        symbol_period: f64,
        es: f64,
    ) -> Result<Self> {
        if alphabet_size < 2 || !alphabet_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "alphabet size must be even and >= 2, got {alphabet_size}"
            )));
        }
        if h <= Ratio::zero() {
            return Err(Error::Config(format!("modulation index must be positive, got {h}")));
        }
        if gamma < 1 {
            return Err(Error::Config("memory length must be >= 1".into()));
        }
        if sps < 2 {
            return Err(Error::Config(format!("need at least 2 samples per symbol, got {sps}")));
        }
        if !(symbol_period > 0.0 && symbol_period.is_finite()) {
            return Err(Error::Config("symbol period must be positive".into()));
        }
        if !(es > 0.0 && es.is_finite()) {
            return Err(Error::Config("symbol energy must be positive".into()));
        }
        Ok(CpmParams {
            alphabet_size,
            // Ratio::new reduces to lowest terms.
            h: Ratio::new(*h.numer(), *h.denom()),
            gamma,
            pulse,
            sps,
            symbol_period,
            es,
        })
    }

    /// M=4, h=1/2, 2REC, 12 samples per symbol.
    pub fn benchmark() -> Self {
        Self::new(4, Ratio::new(1, 2), 2, Pulse::Rec, 12).expect("valid preset")
    }

    pub fn alphabet_size(&self) -> u32 {
        self.alphabet_size
    }

    pub fn h(&self) -> Ratio<i64> {
        self.h
    }

    pub fn h_f64(&self) -> f64 {
        self.h.to_f64().unwrap_or(f64::NAN)
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn pulse(&self) -> Pulse {
        self.pulse
    }

    pub fn sps(&self) -> usize {
        self.sps
    }

    pub fn symbol_period(&self) -> f64 {
        self.symbol_period
    }

    pub fn es(&self) -> f64 {
        self.es
    }

    pub fn sample_rate(&self) -> f64 {
        self.sps as f64 / self.symbol_period
    }

    pub fn sample_interval(&self) -> f64 {
        self.symbol_period / self.sps as f64
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.alphabet_size.ilog2()
    }

    /// Same parameters with a different sampling density.
    pub fn with_sps(&self, sps: usize) -> Result<Self> {
        let mut p = self.clone();
        if sps < 2 {
            return Err(Error::Config(format!("need at least 2 samples per symbol, got {sps}")));
        }
        p.sps = sps;
        Ok(p)
    }

    pub fn with_pulse(&self, pulse: Pulse) -> Self {
        let mut p = self.clone();
        p.pulse = pulse;
        p
    }

    /// `{-M+1, -M+3, ..., M-1}`.
    pub fn alphabet(&self) -> Vec<i32> {
        let m = self.alphabet_size as i32;
        (0..m).map(|k| -m + 1 + 2 * k).collect()
    }

    pub fn q(&self, t: f64) -> f64 {
        phase_pulse(self.pulse, self.gamma, t, self.symbol_period)
    }
}

#[derive(Serialize, Deserialize)]
struct RawCpmParams {
    #[serde(rename = "M")]
    alphabet_size: u32,
    h: String,
    gamma: usize,
    pulse: Pulse,
    sps: usize,
    #[serde(rename = "T", default = "one")]
    symbol_period: f64,
    #[serde(rename = "Es", default = "one")]
    es: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawCpmParams> for CpmParams {
    type Error = Error;

    fn try_from(raw: RawCpmParams) -> Result<Self> {
        let h = parse_ratio(&raw.h)?;
        CpmParams::with_timing(
            raw.alphabet_size,
            h,
            raw.gamma,
            raw.pulse,
            raw.sps,
            raw.symbol_period,
            raw.es,
        )
    }
}

impl From<CpmParams> for RawCpmParams {
    fn from(p: CpmParams) -> Self {
        RawCpmParams {
            alphabet_size: p.alphabet_size,
            h: p.h.to_string(),
            gamma: p.gamma,
            pulse: p.pulse,
            sps: p.sps,
            symbol_period: p.symbol_period,
            es: p.es,
        }
    }
}

/// Parses `"p/q"` or an integer into a reduced rational.
pub fn parse_ratio(s: &str) -> Result<Ratio<i64>> {
    let bad = || Error::Config(format!("modulation index `{s}` is not a rational p/q"));
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: i64 = n.parse().map_err(|_| bad())?;
    let d: i64 = d.parse().map_err(|_| bad())?;
    if d == 0 {
        return Err(bad());
    }
    Ok(Ratio::new(n, d))
}

/// Reduces a rational phase into `[0, 1)`.
pub fn reduce_cycles(x: Ratio<i64>) -> Ratio<i64> {
    let f = x - x.floor();
    debug_assert!(f >= Ratio::zero() && f < Ratio::from_integer(1));
    f
}

/// Phase states reachable from 0 by increments `(h/2)·d`, `d ∈ Ω_d`, mod 1.
pub fn phase_state_set(params: &CpmParams) -> Vec<Ratio<i64>> {
    let half_h = params.h / 2;
    let incs: Vec<Ratio<i64>> = params
        .alphabet()
        .into_iter()
        .map(|d| half_h * Ratio::from_integer(d as i64))
        .collect();
    let mut seen = BTreeSet::new();
    let mut frontier = vec![Ratio::zero()];
    seen.insert(Ratio::zero());
    while let Some(p) = frontier.pop() {
        for inc in &incs {
            let next = reduce_cycles(p + inc);
            if seen.insert(next) {
                frontier.push(next);
            }
        }
    }
    seen.into_iter().collect()
}

/// Finite set of admissible real-valued symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    values: Vec<f64>,
}

impl Alphabet {
    pub fn conventional(params: &CpmParams) -> Self {
        Self::shifted(params, 0.0)
    }

    /// `Ω_d + shift`.
    pub fn shifted(params: &CpmParams, shift: f64) -> Self {
        Alphabet {
            values: params.alphabet().into_iter().map(|d| d as f64 + shift).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, x: f64) -> bool {
        self.values.iter().any(|v| (v - x).abs() < 1e-9)
    }
}

/// Uniformly sampled complex baseband signal of one transmit or receive antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    pub t0: f64,
    pub antenna: usize,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_abs_diff(&self, other: &Waveform) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Per-call synthesis settings.
#[derive(Clone, Copy)]
pub struct Synthesis<'a> {
    /// Initial phase in cycles.
    pub theta0: f64,
    /// Constant envelope of the emitted samples.
    pub amplitude: f64,
    /// Symbol value assumed for the `gamma - 1` slots preceding the burst.
    pub prehistory: f64,
    /// Additional phase term in cycles as a function of absolute time.
    pub extra_phase: Option<&'a (dyn Fn(f64) -> f64 + Sync)>,
    pub antenna: usize,
}

impl Default for Synthesis<'_> {
    fn default() -> Self {
        Synthesis { theta0: 0.0, amplitude: 1.0, prehistory: 0.0, extra_phase: None, antenna: 1 }
    }
}

impl fmt::Debug for Synthesis<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Synthesis")
            .field("theta0", &self.theta0)
            .field("amplitude", &self.amplitude)
            .field("prehistory", &self.prehistory)
            .field("extra_phase", &self.extra_phase.is_some())
            .field("antenna", &self.antenna)
            .finish()
    }
}

/// Samples `A·exp(j2π[θ0 + h Σ d_i q(t - iT) + extra(t)])` for `t` in `[0, N T)`.
///
/// Symbol `i` (zero based) starts its phase pulse at `t = iT`. The slots
/// `-gamma+1 .. -1` carry `prehistory`, earlier slots contribute nothing.
pub fn synthesize_cpm(
    params: &CpmParams,
    symbols: &[f64],
    alphabet: &Alphabet,
    opts: &Synthesis<'_>,
) -> Result<Waveform> {
    if let Some((index, &value)) =
        symbols.iter().enumerate().find(|(_, &v)| !alphabet.contains(v))
    {
        return Err(Error::SymbolOutOfAlphabet { index, value });
    }
    let sps = params.sps();
    let period = params.symbol_period();
    let gamma = params.gamma() as isize;
    let h = params.h_f64();
    let dt = params.sample_interval();
    let sym = |i: isize| -> f64 {
        if i >= 0 {
            symbols[i as usize]
        } else if i > -gamma {
            opts.prehistory
        } else {
            0.0
        }
    };
    // Pulse values within a slot are shared by every slot.
    let pulse_table: Vec<Vec<f64>> = (0..sps)
        .map(|s| {
            let tau = s as f64 * dt;
            (0..gamma).map(|j| params.q(tau + j as f64 * period)).collect()
        })
        .collect();

    let n = symbols.len();
    let mut samples = Vec::with_capacity(n * sps);
    // Phase of all pulses that have reached q = 1/2.
    let mut settled = 0.0;
    for k in 0..n as isize {
        for (s, pulses) in pulse_table.iter().enumerate() {
            let t = k as f64 * period + s as f64 * dt;
            let mut phase = opts.theta0 + settled;
            for (j, qv) in pulses.iter().enumerate() {
                phase += h * sym(k - j as isize) * qv;
            }
            if let Some(extra) = opts.extra_phase {
                phase += extra(t);
            }
            samples.push(Complex64::from_polar(opts.amplitude, 2.0 * PI * phase));
        }
        settled = (settled + 0.5 * h * sym(k + 1 - gamma)).rem_euclid(1.0);
    }
    Ok(Waveform { samples, sample_rate: params.sample_rate(), t0: 0.0, antenna: opts.antenna })
}
