//! Seeded generator of labelled motion/speed streams.
//!
//! The traffic state follows a per-second Markov chain. Within a state the
//! motion channels are AR(1) noise around the flat rest pose (az at -1 g,
//! everything else at 0) scaled by the state's amplitude, with occasional
//! brake and turn bursts. Speed is the state mean plus a mean-reverting
//! deviation, clamped at zero.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{AlignedRecord, Dataset, DatasetMeta, TrafficState};
use crate::rng::SeededRng;

/// Target class shares of the reference field data (free, steady, congested).
pub const PAPERLIKE_CLASS_MIX: [f64; 3] = [0.4515, 0.3004, 0.2481];

/// Class shares for the interaction preset: free and steady, the two states
/// told apart only by the XOR, carry most of the mass.
pub const NONLINEAR_CLASS_MIX: [f64; 3] = [0.4, 0.4, 0.2];

const MOTION_AR: f64 = 0.6;
const SPEED_REVERSION: f64 = 0.2;
const BURST_SECONDS: f64 = 1.0;
const BURST_GAIN: f64 = 2.0;
// Per-axis scale applied to the regime amplitude.
const ACCEL_AXES: [f64; 3] = [1.0, 0.8, 1.0];
const GYRO_AXES: [f64; 3] = [1.0, 0.8, 0.6];
// Amplitude multipliers (low, middle, high) for the interaction preset.
const LEVELS: [f64; 3] = [0.4, 1.0, 2.5];

#[derive(Debug, Error, PartialEq)]
#[error("invalid generator config: `{field}` {reason}")]
pub struct InvalidConfig {
    pub field: String,
    pub reason: String,
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> InvalidConfig {
    InvalidConfig { field: field.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRegime {
    /// m/s
    pub speed_mean: f64,
    /// Stationary standard deviation of the speed deviation, m/s.
    pub speed_jitter: f64,
    /// Standard deviation of acceleration around the rest pose, g.
    pub accel_amplitude: f64,
    /// Standard deviation of angular rate, rad/s.
    pub gyro_amplitude: f64,
    /// Brake/turn bursts per second.
    pub event_rate: f64,
}

impl StateRegime {
    pub const QUIET: StateRegime =
        StateRegime { speed_mean: 0.0, speed_jitter: 0.0, accel_amplitude: 0.0, gyro_amplitude: 0.0, event_rate: 0.0 };
}

/// One value per traffic state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerState<T> {
    pub free: T,
    pub steady: T,
    pub congested: T,
}

impl<T> PerState<T> {
    pub fn get(&self, s: TrafficState) -> &T {
        match s {
            TrafficState::Free => &self.free,
            TrafficState::Steady => &self.steady,
            TrafficState::Congested => &self.congested,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    /// seconds
    pub duration: f64,
    /// Hz
    pub sample_rate: f64,
    pub regimes: PerState<StateRegime>,
    /// Row-stochastic per-second switching matrix, rows/cols in
    /// free, steady, congested order.
    pub transition: [[f64; 3]; 3],
    pub target_mix: Option<[f64; 3]>,
    /// Encode the class signal as an AX/GX amplitude interaction that no
    /// single channel reveals.
    pub nonlinear_preset: bool,
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(invalid("duration", "must be a positive number of seconds"));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(invalid("sample_rate", "must be positive"));
        }
        for s in TrafficState::ALL {
            let r = self.regimes.get(s);
            let fields = [
                ("speed_mean", r.speed_mean),
                ("speed_jitter", r.speed_jitter),
                ("accel_amplitude", r.accel_amplitude),
                ("gyro_amplitude", r.gyro_amplitude),
                ("event_rate", r.event_rate),
            ];
            for (name, x) in fields {
                if !(x.is_finite() && x >= 0.0) {
                    return Err(invalid(format!("regimes.{s}.{name}"), "must be finite and non-negative"));
                }
            }
        }
        for (i, row) in self.transition.iter().enumerate() {
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(invalid(format!("transition[{i}]"), "entries must lie in [0, 1]"));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("transition[{i}]"), "row must sum to 1"));
            }
        }
        if let Some(mix) = self.target_mix {
            if mix.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (mix.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(invalid("target_mix", "must be a probability vector"));
            }
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }
}

/// Birth-death switching matrix (free <-> steady <-> congested) whose
/// stationary distribution is `target`. `flux` is the per-second probability
/// mass flowing across each of the two boundaries.
pub fn birth_death_transition(target: [f64; 3], flux: f64) -> [[f64; 3]; 3] {
    let [pf, ps, pc] = target;
    let fs = flux / pf;
    let sf = flux / ps;
    let sc = flux / ps;
    let cs = flux / pc;
    [[1.0 - fs, fs, 0.0], [sf, 1.0 - sf - sc, sc], [0.0, cs, 1.0 - cs]]
}

/// Stationary distribution of a row-stochastic matrix by power iteration.
pub fn stationary_distribution(p: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut pi = [1.0 / 3.0; 3];
    for _ in 0..100_000 {
        let mut next = [0.0; 3];
        for (i, row) in p.iter().enumerate() {
            for (j, &pij) in row.iter().enumerate() {
                next[j] += pi[i] * pij;
            }
        }
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if delta < 1e-15 {
            break;
        }
    }
    pi
}

/// Boundary flux per second. Mean dwell is about 2 min free, 40 s steady
/// and 1 min congested.
const PAPERLIKE_FLUX: f64 = 1.0 / 250.0;
const NONLINEAR_FLUX: f64 = 1.0 / 150.0;

pub fn paperlike_config() -> GenConfig {
    GenConfig {
        seed: 42,
        duration: 3600.0,
        sample_rate: 50.0,
        regimes: PerState {
            free: StateRegime {
                speed_mean: 16.0,
                speed_jitter: 1.5,
                accel_amplitude: 0.45,
                gyro_amplitude: 0.35,
                event_rate: 0.05,
            },
            steady: StateRegime {
                speed_mean: 10.0,
                speed_jitter: 2.5,
                accel_amplitude: 0.32,
                gyro_amplitude: 0.25,
                event_rate: 0.08,
            },
            congested: StateRegime {
                speed_mean: 4.0,
                speed_jitter: 2.0,
                accel_amplitude: 0.17,
                gyro_amplitude: 0.1,
                event_rate: 0.1,
            },
        },
        transition: birth_death_transition(PAPERLIKE_CLASS_MIX, PAPERLIKE_FLUX),
        target_mix: Some(PAPERLIKE_CLASS_MIX),
        nonlinear_preset: false,
    }
}

pub fn nonlinear_config() -> GenConfig {
    let shared =
        StateRegime { speed_mean: 10.0, speed_jitter: 2.5, accel_amplitude: 0.2, gyro_amplitude: 0.17, event_rate: 0.05 };
    GenConfig {
        regimes: PerState { free: shared, steady: shared, congested: shared },
        transition: birth_death_transition(NONLINEAR_CLASS_MIX, NONLINEAR_FLUX),
        target_mix: Some(NONLINEAR_CLASS_MIX),
        nonlinear_preset: true,
        ..paperlike_config()
    }
}

pub fn default_presets() -> BTreeMap<String, GenConfig> {
    BTreeMap::from([("paperlike".to_string(), paperlike_config()), ("nonlinear".to_string(), nonlinear_config())])
}

fn draw_state(rng: &mut SeededRng, probs: &[f64; 3]) -> TrafficState {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return TrafficState::ALL[i];
        }
    }
    // Rounding left u above the cumulative sum; take the last state with mass.
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    TrafficState::ALL[last]
}

/// Amplitude multipliers (ax, gx) for the interaction preset. Each segment
/// picks one of two patterns per state: free has both channels high or both
/// low, steady has exactly one high, congested sits at the middle level on
/// both. Free and steady then differ only in the XOR of the two channels.
fn interaction_levels(state: TrafficState, mode: usize) -> (f64, f64) {
    let (ax, gx) = match (state, mode & 1) {
        (TrafficState::Free, 0) => (2, 2),
        (TrafficState::Free, _) => (0, 0),
        (TrafficState::Steady, 0) => (2, 0),
        (TrafficState::Steady, _) => (0, 2),
        (TrafficState::Congested, _) => (1, 1),
    };
    (LEVELS[ax], LEVELS[gx])
}

#[derive(Debug, Clone, Copy)]
struct Burst {
    start: usize,
    len: usize,
    /// true for brake (ax), false for turn (ay and gz)
    brake: bool,
    sign: f64,
}

pub fn generate(cfg: &GenConfig) -> Result<Dataset, InvalidConfig> {
    cfg.validate()?;
    let n = cfg.sample_count();
    if n == 0 {
        return Err(invalid("duration", "yields no samples at this sample rate"));
    }
    let seconds = (n as f64 / cfg.sample_rate).ceil() as usize + 1;

    let mut state_rng = SeededRng::keyed(cfg.seed, 1);
    let mut speed_rng = SeededRng::keyed(cfg.seed, 2);
    let mut motion_rng = SeededRng::keyed(cfg.seed, 3);
    let mut event_rng = SeededRng::keyed(cfg.seed, 4);

    // Per-second state path and, for the interaction preset, a hidden mode
    // per contiguous segment.
    let start_mix = cfg.target_mix.unwrap_or_else(|| stationary_distribution(&cfg.transition));
    let mut states = Vec::with_capacity(seconds);
    let mut modes = Vec::with_capacity(seconds);
    let mut state = draw_state(&mut state_rng, &start_mix);
    let mut mode: usize = state_rng.random_range(0..2);
    for k in 0..seconds {
        if k > 0 {
            let next = draw_state(&mut state_rng, &cfg.transition[state.index()]);
            if next != state {
                mode = state_rng.random_range(0..2);
            }
            state = next;
        }
        states.push(state);
        modes.push(mode);
    }

    let keep = 1.0 - SPEED_REVERSION;
    let innovation = (1.0 - keep * keep).sqrt();
    let mut deviation = 0.0;
    let mut speeds = Vec::with_capacity(seconds);
    for (k, &s) in states.iter().enumerate() {
        let r = cfg.regimes.get(s);
        let z: f64 = speed_rng.sample(StandardNormal);
        deviation = if k == 0 { r.speed_jitter * z } else { keep * deviation + r.speed_jitter * innovation * z };
        speeds.push((r.speed_mean + deviation).max(0.0));
    }

    let ar_innovation = (1.0 - MOTION_AR * MOTION_AR).sqrt();
    let mut noise = [0.0f64; 6];
    for x in noise.iter_mut() {
        *x = motion_rng.sample(StandardNormal);
    }
    let burst_len = ((BURST_SECONDS * cfg.sample_rate).round() as usize).max(1);
    let mut burst: Option<Burst> = None;

    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / cfg.sample_rate;
        let sec = (t.floor() as usize).min(seconds - 1);
        let s = states[sec];
        let r = cfg.regimes.get(s);

        if i > 0 {
            for x in noise.iter_mut() {
                let z: f64 = motion_rng.sample(StandardNormal);
                *x = MOTION_AR * *x + ar_innovation * z;
            }
        }

        let (ax_level, gx_level) = if cfg.nonlinear_preset { interaction_levels(s, modes[sec]) } else { (1.0, 1.0) };
        let a = r.accel_amplitude;
        let g = r.gyro_amplitude;
        let mut ax = a * ax_level * ACCEL_AXES[0] * noise[0];
        let mut ay = a * ACCEL_AXES[1] * noise[1];
        let az = -1.0 + a * ACCEL_AXES[2] * noise[2];
        let gx = g * gx_level * GYRO_AXES[0] * noise[3];
        let gy = g * GYRO_AXES[1] * noise[4];
        let mut gz = g * GYRO_AXES[2] * noise[5];

        if burst.is_some_and(|b| i >= b.start + b.len) {
            burst = None;
        }
        if burst.is_none() {
            let p = r.event_rate / cfg.sample_rate;
            if event_rng.random::<f64>() < p {
                burst = Some(Burst {
                    start: i,
                    len: burst_len,
                    brake: event_rng.random(),
                    sign: if event_rng.random() { 1.0 } else { -1.0 },
                });
            }
        }
        if let Some(b) = burst {
            let phase = (i - b.start) as f64 / b.len as f64;
            let shape = b.sign * BURST_GAIN * (PI * phase).sin();
            if b.brake {
                ax += shape * a;
            } else {
                ay += shape * a;
                gz += shape * g;
            }
        }

        records.push(AlignedRecord { t, ax, ay, az, gx, gy, gz, v: speeds[sec], state: s });
    }

    Dataset::new(records, DatasetMeta { source: format!("synthetic seed={}", cfg.seed), sample_rate_hz: Some(cfg.sample_rate) })
        .map_err(|e| invalid("sample_rate", e.to_string()))
}
