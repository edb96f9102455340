//! Parallel-mapped space-time encoder.
//!
//! Every antenna is modulated by the same data symbol in each slot and differs
//! only by its initial phase and a deterministic correction phase:
//!
//! * `linpc`: a linear ramp `c_m(t) = (m-1) t / (Lt T)`,
//! * `offpc`: `c_m(t) = (m-1)/Lt · Σ_i 2q(t - iT)`, which is the same as
//!   running antenna `m` on the offset alphabet `Ω_d + 2(m-1)/(Lt h)`.
//!
//! Two synthesis paths exist. [`encode_continuous`] evaluates the whole burst
//! as one CPM signal per antenna. [`encode_blockwise`] walks the code blocks
//! slot by slot with a per-slot phase memory. Both must emit the same samples.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::cpm::{synthesize_cpm, Alphabet, CpmParams, Synthesis, Waveform};
use crate::error::{Error, Result};

/// Correction-factor family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Correction {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "linpc")]
    Linear,
    #[serde(rename = "offpc")]
    Offset,
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Correction::None => "none",
            Correction::Linear => "linpc",
            Correction::Offset => "offpc",
        })
    }
}

impl std::str::FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Correction::None),
            "linpc" | "linear" => Ok(Correction::Linear),
            "offpc" | "offset" => Ok(Correction::Offset),
            other => Err(Error::Config(format!("unknown correction `{other}`"))),
        }
    }
}

/// Antenna count, correction family and initial phases `θ_m(1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct StcCodeSpec {
    lt: usize,
    correction: Correction,
    theta_init: Vec<f64>,
}

impl StcCodeSpec {
    pub fn new(lt: usize, correction: Correction, theta_init: Vec<f64>) -> Result<Self> {
        if lt > 1 && correction == Correction::None {
            return Err(Error::Config(format!(
                "{lt} antennas without a correction factor are not orthogonal"
            )));
        }
        Self::uncorrected_allowed(lt, correction, theta_init)
    }

    /// Builds a spec without the orthogonality guard, for diagnostics of
    /// uncorrected multi-antenna transmission.
    pub fn uncorrected_allowed(
        lt: usize,
        correction: Correction,
        theta_init: Vec<f64>,
    ) -> Result<Self> {
        if lt == 0 {
            return Err(Error::Config("need at least one transmit antenna".into()));
        }
        if theta_init.len() != lt {
            return Err(Error::Config(format!(
                "expected {lt} initial phases, got {}",
                theta_init.len()
            )));
        }
        if theta_init.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("initial phases must be finite".into()));
        }
        Ok(StcCodeSpec {
            lt,
            correction,
            theta_init: theta_init.into_iter().map(|t| t.rem_euclid(1.0)).collect(),
        })
    }

    /// All initial phases zero.
    pub fn zero_phase(lt: usize, correction: Correction) -> Result<Self> {
        Self::new(lt, correction, vec![0.0; lt])
    }

    pub fn lt(&self) -> usize {
        self.lt
    }

    pub fn correction(&self) -> Correction {
        self.correction
    }

    pub fn theta_init(&self) -> &[f64] {
        &self.theta_init
    }

    pub fn with_theta(&self, theta_init: Vec<f64>) -> Result<Self> {
        Self::uncorrected_allowed(self.lt, self.correction, theta_init)
    }

    /// Per-antenna amplitude `sqrt(Es / (Lt T))`.
    pub fn amplitude(&self, params: &CpmParams) -> f64 {
        (params.es() / (self.lt as f64 * params.symbol_period())).sqrt()
    }

    fn check_antenna(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.lt {
            return Err(Error::AntennaOutOfRange { m, lt: self.lt });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    #[serde(rename = "Lt")]
    lt: usize,
    correction: Correction,
    theta_init: Vec<f64>,
}

impl TryFrom<RawSpec> for StcCodeSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        StcCodeSpec::uncorrected_allowed(raw.lt, raw.correction, raw.theta_init)
    }
}

impl From<StcCodeSpec> for RawSpec {
    fn from(s: StcCodeSpec) -> Self {
        RawSpec { lt: s.lt, correction: s.correction, theta_init: s.theta_init }
    }
}

/// Data symbol `d_{Lt·l + r - i + 1}` used by slot `r` of block `l` for pulse
/// position `i` (`r` and `i` one based, `l` zero based). The same for every
/// antenna.
pub fn map_symbol(data: &[i32], lt: usize, l: usize, r: usize, i: usize) -> Result<i32> {
    if r == 0 || r > lt || i == 0 {
        return Err(Error::Input(format!("slot {r} / pulse {i} out of range for {lt} antennas")));
    }
    let j = (lt * l + r) as i64 - i as i64 + 1;
    if j < 1 {
        return Err(Error::NeedsInitialization(j));
    }
    data.get(j as usize - 1)
        .copied()
        .ok_or_else(|| Error::Input(format!("symbol index {j} beyond sequence of {}", data.len())))
}

/// Shift `2(m-1)/(Lt h)` applied to antenna `m`'s alphabet under offPC.
pub fn alphabet_offset(params: &CpmParams, lt: usize, m: usize) -> Ratio<i64> {
    Ratio::new(2 * (m as i64 - 1), lt as i64) / params.h()
}

/// The offPC alphabet `Ω_{d_m}` of one antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetAlphabet {
    pub m: usize,
    pub shift: f64,
    alphabet: Alphabet,
}

impl OffsetAlphabet {
    pub fn new(params: &CpmParams, lt: usize, m: usize) -> Result<Self> {
        if m == 0 || m > lt {
            return Err(Error::AntennaOutOfRange { m, lt });
        }
        let shift = alphabet_offset(params, lt, m).to_f64().unwrap_or(f64::NAN);
        Ok(OffsetAlphabet { m, shift, alphabet: Alphabet::shifted(params, shift) })
    }

    pub fn values(&self) -> &[f64] {
        self.alphabet.values()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }
}

/// Correction phase `c_m(t)` in cycles (antenna `m` one based).
pub fn correction_phase(spec: &StcCodeSpec, params: &CpmParams, m: usize, t: f64) -> Result<f64> {
    spec.check_antenna(m)?;
    if m == 1 {
        return Ok(0.0);
    }
    let weight = (m - 1) as f64 / spec.lt as f64;
    Ok(match spec.correction {
        Correction::None => 0.0,
        Correction::Linear => weight * t / params.symbol_period(),
        Correction::Offset => weight * offset_ramp(params, t),
    })
}

/// `Σ_{i >= 1-γ} 2q(t - iT)`: every pulse from the prehistory slots onward.
fn offset_ramp(params: &CpmParams, t: f64) -> f64 {
    let period = params.symbol_period();
    let first = 1 - params.gamma() as i64;
    let last = (t / period).floor() as i64;
    (first..=last).map(|i| 2.0 * params.q(t - i as f64 * period)).sum()
}

fn check_burst(spec: &StcCodeSpec, params: &CpmParams, data: &[i32]) -> Result<()> {
    if !data.len().is_multiple_of(spec.lt) {
        return Err(Error::PartialBlock { len: data.len(), lt: spec.lt });
    }
    let alphabet = params.alphabet();
    if let Some((index, &d)) = data.iter().enumerate().find(|(_, d)| !alphabet.contains(d)) {
        return Err(Error::SymbolOutOfAlphabet { index, value: d as f64 });
    }
    Ok(())
}

/// One waveform per transmit antenna from the continuous-time signal model.
pub fn encode_continuous(
    spec: &StcCodeSpec,
    params: &CpmParams,
    data: &[i32],
) -> Result<Vec<Waveform>> {
    check_burst(spec, params, data)?;
    let amplitude = spec.amplitude(params);
    let symbols: Vec<f64> = data.iter().map(|&d| d as f64).collect();
    let conventional = Alphabet::conventional(params);
    (1..=spec.lt)
        .map(|m| {
            let base = Synthesis {
                theta0: spec.theta_init[m - 1],
                amplitude,
                antenna: m,
                ..Default::default()
            };
            match spec.correction {
                Correction::Offset if m > 1 => {
                    let alphabet = OffsetAlphabet::new(params, spec.lt, m)?;
                    let shifted: Vec<f64> = symbols.iter().map(|d| d + alphabet.shift).collect();
                    // Prehistory slots carry zero data plus the offset.
                    let opts = Synthesis { prehistory: alphabet.shift, ..base };
                    synthesize_cpm(params, &shifted, alphabet.alphabet(), &opts)
                }
                Correction::Linear if m > 1 => {
                    let ramp = move |t: f64| (m - 1) as f64 * t / (spec.lt as f64 * params.symbol_period());
                    let opts = Synthesis { extra_phase: Some(&ramp), ..base };
                    synthesize_cpm(params, &symbols, &conventional, &opts)
                }
                _ => synthesize_cpm(params, &symbols, &conventional, &base),
            }
        })
        .collect()
}

/// Symbols and phase memory of one antenna in one slot of a code block.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotEntry {
    /// `d^{(l,i)}` for `i = 1..=γ`; zero before the burst start.
    pub symbols: Vec<i32>,
    /// Phase memory `θ_m(Lt·l + r)` in cycles.
    pub memory: f64,
    /// Phase advance `ξ` carried into the next slot.
    pub advance: f64,
}

/// One `Lt × Lt` code block; `entries[m-1][r-1]` covers antenna `m`, slot `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeBlock {
    pub l: usize,
    pub entries: Vec<Vec<SlotEntry>>,
}

impl CodeBlock {
    /// Sampled `S(t)` element for antenna `m`, slot `r` (both one based).
    pub fn element<'a>(&self, waveforms: &'a [Waveform], m: usize, r: usize, sps: usize) -> &'a [Complex64] {
        let lt = self.entries.len();
        let start = (lt * self.l + r - 1) * sps;
        &waveforms[m - 1].samples[start..start + sps]
    }
}

/// Slot-local phase (without memory): data pulses plus the slot-relative
/// correction term.
fn local_phase(
    spec: &StcCodeSpec,
    params: &CpmParams,
    m: usize,
    symbols: &[i32],
    tau: f64,
) -> f64 {
    let period = params.symbol_period();
    let h = params.h_f64();
    let pulses = |i: usize| params.q(tau + i as f64 * period);
    let data: f64 = symbols.iter().enumerate().map(|(i, &d)| h * d as f64 * pulses(i)).sum();
    let weight = (m - 1) as f64 / spec.lt as f64;
    let correction = match spec.correction {
        Correction::None => 0.0,
        // Ramp that reaches zero at the end of the slot.
        Correction::Linear => weight * (tau - period) / period,
        Correction::Offset => weight * (0..params.gamma()).map(|i| 2.0 * pulses(i)).sum::<f64>(),
    };
    data + correction
}

/// Block-structured synthesis with slot-wise phase memory.
pub fn encode_blockwise(
    spec: &StcCodeSpec,
    params: &CpmParams,
    data: &[i32],
) -> Result<(Vec<CodeBlock>, Vec<Waveform>)> {
    check_burst(spec, params, data)?;
    let lt = spec.lt;
    let sps = params.sps();
    let gamma = params.gamma();
    let dt = params.sample_interval();
    let period = params.symbol_period();
    let amplitude = spec.amplitude(params);
    let n_blocks = data.len() / lt;

    let slot_symbols = |l: usize, r: usize| -> Vec<i32> {
        (1..=gamma)
            .map(|i| match map_symbol(data, lt, l, r, i) {
                Ok(d) => d,
                Err(Error::NeedsInitialization(_)) => 0,
                // Past the burst end only matters for the final memory update.
                Err(_) => 0,
            })
            .collect()
    };

    let mut blocks: Vec<CodeBlock> = (0..n_blocks)
        .map(|l| CodeBlock { l, entries: vec![Vec::with_capacity(lt); lt] })
        .collect();
    let mut waveforms: Vec<Waveform> = (1..=lt)
        .map(|m| Waveform {
            samples: Vec::with_capacity(data.len() * sps),
            sample_rate: params.sample_rate(),
            t0: 0.0,
            antenna: m,
        })
        .collect();

    for m in 1..=lt {
        let first = slot_symbols(0, 1);
        // The phase at t = 0 is θ_m(1) plus the correction's value there.
        let start = correction_phase(spec, params, m, 0.0)?;
        let mut memory = (spec.theta_init[m - 1] + start
            - local_phase(spec, params, m, &first, 0.0))
        .rem_euclid(1.0);
        for (l, block) in blocks.iter_mut().enumerate() {
            for r in 1..=lt {
                let symbols = slot_symbols(l, r);
                let (nl, nr) = if r == lt { (l + 1, 1) } else { (l, r + 1) };
                let next = slot_symbols(nl, nr);
                for s in 0..sps {
                    let tau = s as f64 * dt;
                    let phase = memory + local_phase(spec, params, m, &symbols, tau);
                    waveforms[m - 1]
                        .samples
                        .push(Complex64::from_polar(amplitude, 2.0 * PI * phase));
                }
                // Continuity at the slot boundary fixes the memory update.
                let advance = (local_phase(spec, params, m, &symbols, period)
                    - local_phase(spec, params, m, &next, 0.0))
                .rem_euclid(1.0);
                block.entries[m - 1].push(SlotEntry { symbols, memory, advance });
                memory = (memory + advance).rem_euclid(1.0);
            }
        }
    }
    Ok((blocks, waveforms))
}
