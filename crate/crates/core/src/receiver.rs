//! Coherent MLSD over the joint phase/data trellis.
//!
//! With parallel mapping all antennas carry the same data phase, so a single
//! CPM trellis suffices. Each branch carries one segment per transmit antenna;
//! those segments differ only by the antenna's initial phase and correction,
//! which repeat with a period of `Lt` slots.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::ToPrimitive;

use crate::channel::ChannelRealization;
use crate::cpm::{phase_state_set, reduce_cycles, CpmParams, Waveform};
use crate::error::{Error, Result};
use crate::stc::{correction_phase, StcCodeSpec};

/// Accumulated phase plus the `γ - 1` most recent symbols (oldest first).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TrellisState {
    pub phase: Ratio<i64>,
    pub history: Vec<i32>,
}

#[derive(Debug, Clone)]
pub struct Trellis {
    params: CpmParams,
    lt: usize,
    alphabet: Vec<i32>,
    states: Vec<TrellisState>,
    next: Vec<usize>,
    /// Unit-modulus data phase per branch, `branch * sps + s`.
    data: Vec<Complex64>,
    /// Amplitude, initial phase and correction per `(r, m)`, `(r * lt + m) * sps + s`.
    antenna: Vec<Complex64>,
    /// Full per-antenna branch segments, `((r * branches + b) * lt + m) * sps + s`.
    segments: Vec<Complex64>,
}

/// Unit-modulus samples of `exp(j2π[θ + h Σ_j window_j q(τ + (γ-1-j)T)])`
/// over one slot; `window` lists the `γ` active symbols oldest first.
fn data_segment(params: &CpmParams, theta: f64, window: &[i32]) -> Vec<Complex64> {
    let gamma = window.len();
    let h = params.h_f64();
    let period = params.symbol_period();
    (0..params.sps())
        .map(|s| {
            let tau = s as f64 * params.sample_interval();
            let mut phase = theta;
            for (j, &d) in window.iter().enumerate() {
                let age = gamma - 1 - j;
                phase += h * d as f64 * params.q(tau + age as f64 * period);
            }
            Complex64::from_polar(1.0, 2.0 * PI * phase)
        })
        .collect()
}

impl Trellis {
    pub fn build(params: &CpmParams, spec: &StcCodeSpec) -> Result<Self> {
        let alphabet = params.alphabet();
        let m_size = alphabet.len();
        let gamma = params.gamma();
        let sps = params.sps();
        let lt = spec.lt();
        let phases = phase_state_set(params);
        let hist_count = m_size.pow(gamma as u32 - 1);

        let decode_history = |mut code: usize| -> Vec<i32> {
            let mut h = vec![0; gamma - 1];
            for slot in h.iter_mut().rev() {
                *slot = alphabet[code % m_size];
                code /= m_size;
            }
            h
        };
        let encode_history = |h: &[i32]| -> usize {
            h.iter().fold(0, |acc, d| acc * m_size + alphabet.iter().position(|a| a == d).unwrap())
        };

        let mut states = Vec::with_capacity(phases.len() * hist_count);
        for phase in &phases {
            for code in 0..hist_count {
                states.push(TrellisState { phase: *phase, history: decode_history(code) });
            }
        }
        let half_h = params.h() / 2;
        let mut next = Vec::with_capacity(states.len() * m_size);
        let mut data = Vec::with_capacity(states.len() * m_size * sps);
        for st in &states {
            for &d in &alphabet {
                let leaving = if gamma > 1 { st.history[0] } else { d };
                let phase = reduce_cycles(st.phase + half_h * Ratio::from_integer(leaving as i64));
                let mut history = st.history.clone();
                if gamma > 1 {
                    history.remove(0);
                    history.push(d);
                }
                let p_idx = phases.binary_search(&phase).map_err(|_| {
                    Error::Input(format!("phase {phase} escaped the state set"))
                })?;
                next.push(p_idx * hist_count + encode_history(&history));

                let mut window = st.history.clone();
                window.push(d);
                data.extend(data_segment(params, st.phase.to_f64().unwrap_or(0.0), &window));
            }
        }

        let amplitude = spec.amplitude(params);
        let mut antenna = Vec::with_capacity(lt * lt * sps);
        for r in 0..lt {
            for m in 1..=lt {
                for s in 0..sps {
                    let t = r as f64 * params.symbol_period() + s as f64 * params.sample_interval();
                    let phase = spec.theta_init()[m - 1] + correction_phase(spec, params, m, t)?;
                    antenna.push(Complex64::from_polar(amplitude, 2.0 * PI * phase));
                }
            }
        }

        let branches = states.len() * m_size;
        let mut segments = Vec::with_capacity(lt * branches * lt * sps);
        for r in 0..lt {
            for b in 0..branches {
                for m in 0..lt {
                    for s in 0..sps {
                        let v = antenna[(r * lt + m) * sps + s] * data[b * sps + s];
                        if (v.norm() - amplitude).abs() > 1e-12 * amplitude.max(1.0) {
                            return Err(Error::Input("branch segment lost constant envelope".into()));
                        }
                        segments.push(v);
                    }
                }
            }
        }

        Ok(Trellis { params: params.clone(), lt, alphabet, states, next, data, antenna, segments })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn branches_per_state(&self) -> usize {
        self.alphabet.len()
    }

    pub fn states(&self) -> &[TrellisState] {
        &self.states
    }

    /// Slot period of the time-varying branch labels.
    pub fn period(&self) -> usize {
        self.lt
    }

    pub fn next_state(&self, state: usize, input: usize) -> usize {
        self.next[state * self.alphabet.len() + input]
    }

    /// Samples transmitted by antenna `m` (one based) on a branch during a
    /// slot with position `r = k mod Lt` (zero based).
    pub fn segment(&self, r: usize, state: usize, input: usize, m: usize) -> &[Complex64] {
        let sps = self.params.sps();
        let b = state * self.alphabet.len() + input;
        let branches = self.states.len() * self.alphabet.len();
        let start = ((r % self.lt * branches + b) * self.lt + (m - 1)) * sps;
        &self.segments[start..start + sps]
    }
}

/// Detected symbols, their Gray-decoded bits and the path metric.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub symbols: Vec<i32>,
    pub bits: Vec<u8>,
    pub path_metric: f64,
}

/// Per-slot quantities shared by every branch.
struct SlotMetric {
    base: f64,
    corr: Vec<Complex64>,
}

fn slot_metric(
    trellis: &Trellis,
    received: &[Waveform],
    channel: &ChannelRealization,
    k: usize,
) -> SlotMetric {
    let sps = trellis.params.sps();
    let lt = trellis.lt;
    let r = k % lt;
    let a = channel.at_slot(k);
    let mut base = 0.0;
    let mut corr = vec![Complex64::new(0.0, 0.0); sps];
    for (n, rx) in received.iter().enumerate() {
        for s in 0..sps {
            let mut g = Complex64::new(0.0, 0.0);
            for m in 0..lt {
                g += a[(n, m)] * trellis.antenna[(r * lt + m) * sps + s];
            }
            let y = rx.samples[k * sps + s];
            base += y.norm_sqr() + g.norm_sqr();
            corr[s] += y.conj() * g;
        }
    }
    SlotMetric { base, corr }
}

impl SlotMetric {
    /// `Σ_n Σ_s |r_n - Σ_m a_{n,m} seg_m|²` for a unit-modulus data segment.
    fn branch(&self, data: &[Complex64]) -> f64 {
        let cross: f64 = self.corr.iter().zip(data).map(|(c, x)| (c * x).re).sum();
        self.base - 2.0 * cross
    }
}

/// Lexicographic order with smaller symbols first.
fn path_order(a: &[i32], b: &[i32]) -> Ordering {
    a.cmp(b)
}

/// Viterbi search with full traceback.
pub fn mlsd_detect(
    received: &[Waveform],
    channel: &ChannelRealization,
    trellis: &Trellis,
    params: &CpmParams,
    spec: &StcCodeSpec,
) -> Result<DetectionResult> {
    let sps = params.sps();
    if received.len() != channel.lr() {
        return Err(Error::LengthMismatch { expected: channel.lr(), actual: received.len() });
    }
    if channel.lt() != spec.lt() || trellis.lt != spec.lt() {
        return Err(Error::LengthMismatch { expected: spec.lt(), actual: channel.lt() });
    }
    let len = received[0].len();
    if !len.is_multiple_of(sps) || received.iter().any(|w| w.len() != len) {
        return Err(Error::LengthMismatch { expected: (len / sps) * sps, actual: len });
    }
    let n = len / sps;
    let dt = params.sample_interval();
    let m_size = trellis.alphabet.len();
    let gamma = params.gamma();
    let hist_count = m_size.pow(gamma as u32 - 1);

    // Slots before the first full history are enumerated directly with zero
    // prehistory.
    let prefix_len = (gamma - 1).min(n);
    let mut prefixes: Vec<(Vec<i32>, f64)> = Vec::with_capacity(m_size.pow(prefix_len as u32));
    for code in 0..m_size.pow(prefix_len as u32) {
        let mut seq = vec![0; prefix_len];
        let mut c = code;
        for slot in seq.iter_mut().rev() {
            *slot = trellis.alphabet[c % m_size];
            c /= m_size;
        }
        let mut metric = 0.0;
        for k in 0..prefix_len {
            let mut window = vec![0; gamma - 1 - k];
            window.extend_from_slice(&seq[..=k]);
            let sm = slot_metric(trellis, received, channel, k);
            metric += sm.branch(&data_segment(params, 0.0, &window)) * dt;
        }
        prefixes.push((seq, metric));
    }

    if prefix_len == n {
        let (symbols, metric) = prefixes
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| path_order(&a.0, &b.0)))
            .expect("at least one prefix");
        return finish(symbols, metric, params);
    }

    let n_states = trellis.num_states();
    let mut metrics = vec![f64::INFINITY; n_states];
    let mut initial: Vec<Option<Vec<i32>>> = vec![None; n_states];
    for (seq, metric) in prefixes {
        // Phase zero is index 0 of the sorted state set.
        let code = seq.iter().fold(0, |acc, d| {
            acc * m_size + trellis.alphabet.iter().position(|a| a == d).unwrap()
        });
        metrics[code] = metric;
        initial[code] = Some(seq);
    }
    debug_assert!(hist_count <= n_states);

    // back[k][state] = (previous state, input index)
    let mut back: Vec<Vec<(u32, u8)>> = Vec::with_capacity(n - prefix_len);
    let mut fresh = vec![f64::INFINITY; n_states];
    for k in prefix_len..n {
        let sm = slot_metric(trellis, received, channel, k);
        fresh.iter_mut().for_each(|x| *x = f64::INFINITY);
        let mut links = vec![(u32::MAX, 0u8); n_states];
        for s in 0..n_states {
            let base = metrics[s];
            if !base.is_finite() {
                continue;
            }
            for u in 0..m_size {
                let b = s * m_size + u;
                let cand = base + sm.branch(&trellis.data[b * sps..(b + 1) * sps]) * dt;
                let ns = trellis.next[b];
                let better = match cand.total_cmp(&fresh[ns]) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => {
                        let (ps, pu) = links[ns];
                        let mine = traceback(&back, &initial, trellis, s, Some(u));
                        let theirs = traceback(&back, &initial, trellis, ps as usize, Some(pu as usize));
                        path_order(&mine, &theirs) == Ordering::Less
                    }
                };
                if better {
                    fresh[ns] = cand;
                    links[ns] = (s as u32, u as u8);
                }
            }
        }
        back.push(links);
        std::mem::swap(&mut metrics, &mut fresh);
    }

    let mut best = None::<(usize, f64)>;
    for (s, &m) in metrics.iter().enumerate() {
        if !m.is_finite() {
            continue;
        }
        best = match best {
            None => Some((s, m)),
            Some((bs, bm)) => match m.total_cmp(&bm) {
                Ordering::Less => Some((s, m)),
                Ordering::Equal => {
                    let a = traceback(&back, &initial, trellis, s, None);
                    let b = traceback(&back, &initial, trellis, bs, None);
                    if path_order(&a, &b) == Ordering::Less {
                        Some((s, m))
                    } else {
                        Some((bs, bm))
                    }
                }
                Ordering::Greater => Some((bs, bm)),
            },
        };
    }
    let (state, metric) = best.ok_or_else(|| Error::Input("no surviving path".into()))?;
    let symbols = traceback(&back, &initial, trellis, state, None);
    finish(symbols, metric, params)
}

/// Symbol path ending in `state` after the slots recorded in `back`, with an
/// optional extra input appended.
fn traceback(
    back: &[Vec<(u32, u8)>],
    initial: &[Option<Vec<i32>>],
    trellis: &Trellis,
    mut state: usize,
    extra: Option<usize>,
) -> Vec<i32> {
    let mut rev = Vec::with_capacity(back.len() + 1);
    if let Some(u) = extra {
        rev.push(trellis.alphabet[u]);
    }
    for links in back.iter().rev() {
        let (prev, u) = links[state];
        rev.push(trellis.alphabet[u as usize]);
        state = prev as usize;
    }
    let mut path = initial[state].clone().unwrap_or_default();
    rev.reverse();
    path.extend(rev);
    path
}

fn finish(symbols: Vec<i32>, metric: f64, params: &CpmParams) -> Result<DetectionResult> {
    let bits = symbols_to_bits(&symbols, params.alphabet_size())?;
    Ok(DetectionResult { symbols, bits, path_metric: metric })
}

fn check_power_of_two(m: u32) -> Result<u32> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::Config(format!("Gray mapping needs a power-of-two alphabet, got {m}")));
    }
    Ok(m.ilog2())
}

/// Reflected Gray code over the ordered alphabet, most significant bit first.
pub fn symbols_to_bits(symbols: &[i32], m: u32) -> Result<Vec<u8>> {
    let k = check_power_of_two(m)?;
    let mut bits = Vec::with_capacity(symbols.len() * k as usize);
    for (index, &d) in symbols.iter().enumerate() {
        let level = d + m as i32 - 1;
        if level < 0 || level % 2 != 0 || level / 2 >= m as i32 {
            return Err(Error::SymbolOutOfAlphabet { index, value: d as f64 });
        }
        let i = (level / 2) as u32;
        let g = i ^ (i >> 1);
        bits.extend((0..k).rev().map(|b| ((g >> b) & 1) as u8));
    }
    Ok(bits)
}

/// Inverse of [`symbols_to_bits`].
pub fn bits_to_symbols(bits: &[u8], m: u32) -> Result<Vec<i32>> {
    let k = check_power_of_two(m)? as usize;
    if !bits.len().is_multiple_of(k) {
        return Err(Error::Input(format!("{} bits do not fill {k}-bit symbols", bits.len())));
    }
    bits.chunks(k)
        .map(|chunk| {
            let g = chunk.iter().try_fold(0u32, |acc, &b| match b {
                0 | 1 => Ok((acc << 1) | b as u32),
                _ => Err(Error::Input(format!("bit value {b}"))),
            })?;
            let mut i = g;
            let mut shift = g >> 1;
            while shift != 0 {
                i ^= shift;
                shift >>= 1;
            }
            Ok(2 * i as i32 - m as i32 + 1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_fading, transmit, trial_rng};
    use crate::cpm::Pulse;
    use crate::stc::{encode_continuous, Correction};
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn gray_examples() {
        assert_eq!(
            symbols_to_bits(&[-3, -1, 1, 3], 4).unwrap(),
            vec![0, 0, 0, 1, 1, 1, 1, 0]
        );
        assert!(symbols_to_bits(&[0], 4).is_err());
        assert!(symbols_to_bits(&[1], 6).is_err());
        assert!(bits_to_symbols(&[1, 0, 1], 4).is_err());
        for m in [2u32, 4, 8, 16] {
            let alphabet: Vec<i32> = (0..m as i32).map(|k| -(m as i32) + 1 + 2 * k).collect();
            let bits = symbols_to_bits(&alphabet, m).unwrap();
            assert_eq!(bits_to_symbols(&bits, m).unwrap(), alphabet);
            let k = m.ilog2() as usize;
            for pair in bits.chunks(k).collect::<Vec<_>>().windows(2) {
                let diff = pair[0].iter().zip(pair[1]).filter(|(a, b)| a != b).count();
                assert_eq!(diff, 1);
            }
        }
    }

    #[test]
    fn state_counts() {
        let p = CpmParams::benchmark();
        let t = Trellis::build(&p, &StcCodeSpec::zero_phase(2, Correction::Linear).unwrap()).unwrap();
        assert_eq!(t.num_states(), 16);
        assert_eq!(t.branches_per_state(), 4);
        let p = CpmParams::new(2, Ratio::new(1, 2), 1, Pulse::Rec, 8).unwrap();
        let t = Trellis::build(&p, &StcCodeSpec::zero_phase(1, Correction::None).unwrap()).unwrap();
        assert_eq!(t.num_states(), 4);
        assert_eq!(t.branches_per_state(), 2);
    }

    #[test]
    fn branch_labels_repeat_every_lt_slots() {
        let p = CpmParams::benchmark();
        for c in [Correction::Linear, Correction::Offset] {
            let spec = StcCodeSpec::new(3, c, vec![0.1, 0.2, 0.3]).unwrap();
            let t = Trellis::build(&p, &spec).unwrap();
            for r in 0..3 {
                for m in 1..=3 {
                    for s in 0..p.sps() {
                        let tau = s as f64 * p.sample_interval();
                        let a = correction_phase(&spec, &p, m, r as f64 + tau).unwrap();
                        let b = correction_phase(&spec, &p, m, (r + 3) as f64 + tau).unwrap();
                        let d = (b - a).rem_euclid(1.0);
                        assert!(!(1e-12..=1.0 - 1e-12).contains(&d));
                    }
                }
            }
            // Slot position r + Lt addresses the same segment as r.
            assert_eq!(t.segment(4, 5, 1, 2), t.segment(1, 5, 1, 2));
            assert_ne!(t.segment(0, 5, 1, 2), t.segment(1, 5, 1, 2));
        }
    }

    fn random_data<R: Rng>(p: &CpmParams, n: usize, rng: &mut R) -> Vec<i32> {
        let a = p.alphabet();
        (0..n).map(|_| a[rng.random_range(0..a.len())]).collect()
    }

    fn spec_for(lt: usize, c: Correction) -> StcCodeSpec {
        let c = if lt == 1 { Correction::None } else { c };
        StcCodeSpec::new(lt, c, (0..lt).map(|m| 0.13 * m as f64).collect()).unwrap()
    }

    #[test]
    fn noiseless_recovery() {
        let p = CpmParams::benchmark();
        for lt in 1..=3 {
            for c in [Correction::Linear, Correction::Offset] {
                let spec = spec_for(lt, c);
                let trellis = Trellis::build(&p, &spec).unwrap();
                let mut rng = trial_rng(9, lt as u64);
                let data = random_data(&p, 30, &mut rng);
                let w = encode_continuous(&spec, &p, &data).unwrap();
                let ch = ChannelRealization::draw(lt, 1, 30, 1, 0.0, &mut rng);
                let rx = transmit(&w, &ch, &p, &mut rng).unwrap();
                let det = mlsd_detect(&rx, &ch, &trellis, &p, &spec).unwrap();
                assert_eq!(det.symbols, data);
                assert_eq!(det.bits.len(), 60);
                assert!(det.path_metric.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let p = CpmParams::benchmark();
        let spec = spec_for(2, Correction::Linear);
        let trellis = Trellis::build(&p, &spec).unwrap();
        let ch = ChannelRealization::fixed(DMatrix::from_element(1, 2, Complex64::new(1.0, 0.0)), 0.0);
        let w = Waveform { samples: vec![Complex64::new(1.0, 0.0); 13], sample_rate: 12.0, t0: 0.0, antenna: 1 };
        assert!(mlsd_detect(&[w], &ch, &trellis, &p, &spec).is_err());
    }

    #[test]
    fn zero_channel_ties_pick_smallest_symbols() {
        let p = CpmParams::benchmark();
        let spec = spec_for(2, Correction::Linear);
        let trellis = Trellis::build(&p, &spec).unwrap();
        let ch = ChannelRealization::fixed(DMatrix::from_element(1, 2, Complex64::new(0.0, 0.0)), 0.0);
        let w = Waveform { samples: vec![Complex64::new(0.0, 0.0); 6 * 12], sample_rate: 12.0, t0: 0.0, antenna: 1 };
        let det = mlsd_detect(&[w], &ch, &trellis, &p, &spec).unwrap();
        assert_eq!(det.symbols, vec![-3; 6]);
    }

    /// Exhaustive minimum of the discrete squared distance, computed from the
    /// continuous-time encoder.
    fn brute_force(
        rx: &[Waveform],
        ch: &ChannelRealization,
        p: &CpmParams,
        spec: &StcCodeSpec,
        n: usize,
    ) -> (Vec<i32>, f64) {
        let alphabet = p.alphabet();
        let mut best: Option<(Vec<i32>, f64)> = None;
        for code in 0..alphabet.len().pow(n as u32) {
            let mut c = code;
            let mut seq = vec![0; n];
            for s in seq.iter_mut().rev() {
                *s = alphabet[c % alphabet.len()];
                c /= alphabet.len();
            }
            let tx = encode_continuous(spec, p, &seq).unwrap();
            let mut metric = 0.0;
            for (nr, r) in rx.iter().enumerate() {
                for (i, y) in r.samples.iter().enumerate() {
                    let a = ch.at_slot(i / p.sps());
                    let mut s = Complex64::new(0.0, 0.0);
                    for (m, w) in tx.iter().enumerate() {
                        s += a[(nr, m)] * w.samples[i];
                    }
                    metric += (y - s).norm_sqr();
                }
            }
            metric *= p.sample_interval();
            let replace = match &best {
                None => true,
                Some((bs, bm)) => metric < *bm || (metric == *bm && seq < *bs),
            };
            if replace {
                best = Some((seq, metric));
            }
        }
        best.unwrap()
    }

    #[test]
    fn matches_exhaustive_search() {
        let p = CpmParams::new(2, Ratio::new(1, 2), 2, Pulse::Rec, 12).unwrap();
        for (lt, n) in [(1, 4), (2, 4), (3, 6)] {
            for c in [Correction::Linear, Correction::Offset] {
                let spec = spec_for(lt, c);
                let trellis = Trellis::build(&p, &spec).unwrap();
                for trial in 0..10 {
                    let mut rng = trial_rng(21, trial);
                    let data = random_data(&p, n, &mut rng);
                    let tx = encode_continuous(&spec, &p, &data).unwrap();
                    let ch = ChannelRealization::draw(lt, 1, n, 1, 0.4, &mut rng);
                    let rx = transmit(&tx, &ch, &p, &mut rng).unwrap();
                    let det = mlsd_detect(&rx, &ch, &trellis, &p, &spec).unwrap();
                    let (seq, metric) = brute_force(&rx, &ch, &p, &spec, n);
                    assert_eq!(det.symbols, seq);
                    assert!((det.path_metric - metric).abs() <= 1e-9 * metric.max(1.0));
                }
            }
        }
    }

    #[test]
    fn single_antenna_initial_phase_neutral() {
        let p = CpmParams::benchmark();
        let a_spec = StcCodeSpec::new(1, Correction::None, vec![0.0]).unwrap();
        let b_spec = StcCodeSpec::new(1, Correction::None, vec![0.37]).unwrap();
        let ta = Trellis::build(&p, &a_spec).unwrap();
        let tb = Trellis::build(&p, &b_spec).unwrap();
        for trial in 0..20 {
            let mut rng = trial_rng(33, trial);
            let data = random_data(&p, 24, &mut rng);
            let tx = encode_continuous(&a_spec, &p, &data).unwrap();
            let a = sample_fading(1, 1, &mut rng);
            let ch_a = ChannelRealization::fixed(a.clone(), 0.3);
            let rx = transmit(&tx, &ch_a, &p, &mut rng).unwrap();
            // Same received signal explained by θ0' and a counter-rotated gain.
            let rot = Complex64::from_polar(1.0, -2.0 * PI * 0.37);
            let ch_b = ChannelRealization::fixed(a.map(|x| x * rot), 0.3);
            let da = mlsd_detect(&rx, &ch_a, &ta, &p, &a_spec).unwrap();
            let db = mlsd_detect(&rx, &ch_b, &tb, &p, &b_spec).unwrap();
            assert_eq!(da.symbols, db.symbols);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn gray_round_trip(levels in prop::collection::vec(0i32..8, 0..40)) {
            let symbols: Vec<i32> = levels.iter().map(|l| 2 * l - 7).collect();
            let bits = symbols_to_bits(&symbols, 8).unwrap();
            prop_assert_eq!(bits.len(), symbols.len() * 3);
            prop_assert_eq!(bits_to_symbols(&bits, 8).unwrap(), symbols);
        }
    }
}
