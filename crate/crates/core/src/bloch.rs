//! Exact piecewise propagation of two-level Bloch vectors and the ensemble
//! field they radiate.
//!
//! Pulses are rectangular, so every segment is a fixed-axis rotation that is
//! applied in closed form (Rodrigues). Relaxation acts only between pulses.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::conventions::{DETUNING_SIGN, EMISSION_SCALE, PHASE_SIGN};
use crate::ensemble::{sample_detunings, spurious_revival_time, DetuningGrid, EnsembleSpec};
use crate::error::{EchoError, Result};

/// Grid nodes handled per parallel work item. Partial sums are formed in node
/// order inside a chunk and then added chunk by chunk in grid order, so the
/// result does not depend on the number of threads.
pub const REDUCTION_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl BlochState {
    pub const GROUND: BlochState = BlochState { u: 0.0, v: 0.0, w: -1.0 };

    pub fn new(u: f64, v: f64, w: f64) -> Self {
        BlochState { u, v, w }
    }

    pub fn norm(&self) -> f64 {
        (self.u * self.u + self.v * self.v + self.w * self.w).sqrt()
    }

    /// `u + iv`.
    pub fn transverse(&self) -> Complex64 {
        Complex64::new(self.u, self.v)
    }
}

/// Rectangular excitation pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub t_start: f64,
    pub duration: f64,
    /// Rabi angular frequency, rad/ns.
    pub rabi: f64,
    pub phase: f64,
    pub label: String,
}

impl Pulse {
    /// Builds a pulse from its area (rad) rather than its Rabi frequency.
    pub fn with_area(
        label: impl Into<String>,
        t_start: f64,
        duration: f64,
        area: f64,
        phase: f64,
    ) -> Result<Self> {
        let pulse = Pulse {
            t_start,
            duration,
            rabi: area / duration,
            phase,
            label: label.into(),
        };
        pulse.validate()?;
        Ok(pulse)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EchoError::InvalidSequence(msg));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("pulse `{}`: duration must be positive", self.label));
        }
        if !(self.rabi >= 0.0) || !self.area().is_finite() {
            return bad(format!("pulse `{}`: Rabi frequency must be finite and ≥ 0", self.label));
        }
        if !self.t_start.is_finite() || !self.phase.is_finite() {
            return bad(format!("pulse `{}`: start time and phase must be finite", self.label));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.rabi * self.duration
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }

    /// Mid-point of the pulse; the effective interaction time used by the
    /// pathway oracle.
    pub fn center(&self) -> f64 {
        self.t_start + 0.5 * self.duration
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start && t <= self.t_end()
    }
}

/// Time-ordered, non-overlapping pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pulses: Vec<Pulse>,
}

impl PulseSequence {
    pub fn new(pulses: Vec<Pulse>) -> Result<Self> {
        for p in &pulses {
            p.validate()?;
        }
        for pair in pulses.windows(2) {
            if pair[0].t_end() > pair[1].t_start {
                return Err(EchoError::InvalidSequence(format!(
                    "pulse `{}` ends at {} ns, after `{}` starts at {} ns",
                    pair[0].label,
                    pair[0].t_end(),
                    pair[1].label,
                    pair[1].t_start
                )));
            }
        }
        Ok(PulseSequence { pulses })
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn find(&self, label: &str) -> Option<&Pulse> {
        self.pulses.iter().find(|p| p.label == label)
    }

    pub fn in_pulse(&self, t: f64) -> bool {
        self.pulses.iter().any(|p| p.contains(t))
    }

    /// Same pulses with every phase shifted by `delta`.
    pub fn with_phase_offset(&self, delta: f64) -> Self {
        let pulses = self
            .pulses
            .iter()
            .map(|p| Pulse { phase: p.phase + delta, ..p.clone() })
            .collect();
        PulseSequence { pulses }
    }
}

/// Uniformly sampled complex field radiated by the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub t0: f64,
    pub dt_samp: f64,
    pub samples: Vec<Complex64>,
    /// Samples taken while an excitation pulse was on.
    pub in_pulse: Vec<bool>,
}

impl Signal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt_samp
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn intensity(&self, i: usize) -> f64 {
        self.samples[i].norm_sqr()
    }

    /// Index range of samples with `from ≤ t ≤ to`.
    pub fn index_range(&self, from: f64, to: f64) -> std::ops::Range<usize> {
        let eps = 1e-9 * self.dt_samp;
        let lo = ((from - self.t0 - eps) / self.dt_samp).ceil().max(0.0) as usize;
        let hi = (((to - self.t0 + eps) / self.dt_samp).floor() + 1.0).max(0.0) as usize;
        lo.min(self.len())..hi.min(self.len())
    }

    /// Time and magnitude of the strongest sample within `center ± half_width`.
    pub fn peak_near(&self, center: f64, half_width: f64) -> Option<(f64, f64)> {
        self.index_range(center - half_width, center + half_width)
            .map(|i| (self.time(i), self.samples[i].norm()))
            .fold(None, |best: Option<(f64, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            })
    }

    /// CSV with header `time_ns,re,im,in_pulse`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "time_ns,re,im,in_pulse")?;
        for (i, (s, flag)) in self.samples.iter().zip(&self.in_pulse).enumerate() {
            writeln!(out, "{},{},{},{}", self.time(i), s.re, s.im, u8::from(*flag))?;
        }
        Ok(())
    }
}

/// Rotation about `axis` by `|axis|·tau` with `dr/dt = axis × r`.
fn rotate(state: BlochState, axis: [f64; 3], tau: f64) -> BlochState {
    let mag = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if mag == 0.0 || tau == 0.0 {
        return state;
    }
    let [nx, ny, nz] = [axis[0] / mag, axis[1] / mag, axis[2] / mag];
    let (s, c) = (mag * tau).sin_cos();
    let BlochState { u, v, w } = state;
    let dot = nx * u + ny * v + nz * w;
    let (cx, cy, cz) = (ny * w - nz * v, nz * u - nx * w, nx * v - ny * u);
    let k = dot * (1.0 - c);
    BlochState {
        u: u * c + cx * s + nx * k,
        v: v * c + cy * s + ny * k,
        w: w * c + cz * s + nz * k,
    }
}

fn pulse_axis(pulse: &Pulse, detuning: f64) -> [f64; 3] {
    let (s, c) = (PHASE_SIGN * pulse.phase).sin_cos();
    [pulse.rabi * c, pulse.rabi * s, DETUNING_SIGN * detuning]
}

/// Full rotation by `pulse` for an atom at `detuning`. No relaxation is
/// applied while the pulse is on.
pub fn apply_pulse(state: BlochState, pulse: &Pulse, detuning: f64) -> BlochState {
    rotate(state, pulse_axis(pulse, detuning), pulse.duration)
}

/// The first `elapsed` ns of `pulse`.
pub fn apply_partial_pulse(state: BlochState, pulse: &Pulse, detuning: f64, elapsed: f64) -> BlochState {
    rotate(state, pulse_axis(pulse, detuning), elapsed.clamp(0.0, pulse.duration))
}

/// Free precession at `detuning` for `tau` ns with transverse decay `t2` and
/// population return to the ground state with `t1`.
pub fn free_evolve(state: BlochState, tau: f64, detuning: f64, t1: f64, t2: f64) -> BlochState {
    if tau == 0.0 {
        return state;
    }
    let (s, c) = (DETUNING_SIGN * detuning * tau).sin_cos();
    let e2 = (-tau / t2).exp();
    let e1 = (-tau / t1).exp();
    BlochState {
        u: (state.u * c - state.v * s) * e2,
        v: (state.u * s + state.v * c) * e2,
        w: -1.0 + (state.w + 1.0) * e1,
    }
}

/// Final Bloch vector of one atom after the whole sequence, ending at the last
/// pulse's end.
pub fn propagate(seq: &PulseSequence, detuning: f64, t1: f64, t2: f64) -> BlochState {
    let mut state = BlochState::GROUND;
    let mut t_now = seq.pulses.first().map_or(0.0, |p| p.t_start);
    for p in &seq.pulses {
        state = free_evolve(state, p.t_start - t_now, detuning, t1, t2);
        state = apply_pulse(state, p, detuning);
        t_now = p.t_end();
    }
    state
}

/// Adds `weight·(u + iv)` of one atom at each of the ascending `times` into
/// `acc`.
fn accumulate_atom(
    pulses: &[Pulse],
    detuning: f64,
    weight: f64,
    t1: f64,
    t2: f64,
    times: &[f64],
    acc: &mut [Complex64],
) {
    let mut state = BlochState::GROUND;
    let mut t_now = match (pulses.first(), times.first()) {
        (Some(p), Some(&t)) => p.t_start.min(t),
        (Some(p), None) => p.t_start,
        (None, Some(&t)) => t,
        (None, None) => return,
    };
    let rate = Complex64::new(-1.0 / t2, DETUNING_SIGN * detuning);
    let mut k = 0;
    for p in pulses {
        let seg = FreeSegment { base: state.transverse(), t_from: t_now, rate };
        k = seg.sample(times, k, |t| t <= p.t_start, weight, acc);
        state = free_evolve(state, p.t_start - t_now, detuning, t1, t2);
        while k < times.len() && times[k] < p.t_end() {
            let partial = apply_partial_pulse(state, p, detuning, times[k] - p.t_start);
            acc[k] += partial.transverse() * weight;
            k += 1;
        }
        state = apply_pulse(state, p, detuning);
        t_now = p.t_end();
    }
    let seg = FreeSegment { base: state.transverse(), t_from: t_now, rate };
    seg.sample(times, k, |_| true, weight, acc);
}

/// Transverse component during one free-evolution interval:
/// `base·exp(rate·(t − t_from))`.
struct FreeSegment {
    base: Complex64,
    t_from: f64,
    rate: Complex64,
}

impl FreeSegment {
    /// Accumulates samples from index `k` while `inside(t)` holds; returns the
    /// first index not consumed. Equally spaced samples reuse one phasor step.
    fn sample(
        &self,
        times: &[f64],
        mut k: usize,
        inside: impl Fn(f64) -> bool,
        weight: f64,
        acc: &mut [Complex64],
    ) -> usize {
        let mut prev: Option<(f64, Complex64)> = None;
        let mut step: Option<(f64, Complex64)> = None;
        while k < times.len() && inside(times[k]) {
            let t = times[k];
            let value = match prev {
                None => self.base * (self.rate * (t - self.t_from)).exp(),
                Some((t_prev, v_prev)) => {
                    let gap = t - t_prev;
                    let factor = match step {
                        Some((g, f)) if g == gap => f,
                        _ => {
                            let f = (self.rate * gap).exp();
                            step = Some((gap, f));
                            f
                        }
                    };
                    v_prev * factor
                }
            };
            acc[k] += value * weight;
            prev = Some((t, value));
            k += 1;
        }
        k
    }
}

fn check_revival(grid: &DetuningGrid, seq: &PulseSequence, t_a: f64, t_b: f64) -> Result<()> {
    let revival = spurious_revival_time(grid);
    if revival.is_infinite() {
        return Ok(());
    }
    // Rephasing times lie in [first pulse, 2·last - first]; their images
    // shifted by ±revival must stay out of the window.
    let backward = match (seq.pulses.first(), seq.pulses.last()) {
        (Some(first), Some(last)) => 2.0 * last.t_end() - first.t_start - t_a,
        _ => f64::NEG_INFINITY,
    };
    if revival <= t_b || revival <= backward {
        return Err(EchoError::RevivalInWindow { revival_ns: revival, t_a, t_b });
    }
    Ok(())
}

/// Ensemble field `EMISSION_SCALE·Σ wᵢ (uᵢ + i vᵢ)` at ascending `times`.
pub fn ensemble_field(seq: &PulseSequence, spec: &EnsembleSpec, times: &[f64]) -> Result<Vec<Complex64>> {
    if times.windows(2).any(|p| !(p[0] <= p[1])) || times.iter().any(|t| !t.is_finite()) {
        return Err(EchoError::InvalidParameter("sample times must be finite and ascending".into()));
    }
    let grid = sample_detunings(spec)?;
    if let (Some(&t_a), Some(&t_b)) = (times.first(), times.last()) {
        check_revival(&grid, seq, t_a, t_b)?;
    }
    Ok(ensemble_field_on_grid(seq, &grid, spec.t1, spec.t2, times))
}

pub(crate) fn ensemble_field_on_grid(
    seq: &PulseSequence,
    grid: &DetuningGrid,
    t1: f64,
    t2: f64,
    times: &[f64],
) -> Vec<Complex64> {
    let partials: Vec<Vec<Complex64>> = grid
        .detunings
        .par_chunks(REDUCTION_CHUNK)
        .zip(grid.weights.par_chunks(REDUCTION_CHUNK))
        .map(|(dets, weights)| {
            let mut acc = vec![Complex64::new(0.0, 0.0); times.len()];
            for (&d, &w) in dets.iter().zip(weights) {
                accumulate_atom(&seq.pulses, d, w, t1, t2, times, &mut acc);
            }
            acc
        })
        .collect();
    let mut field = vec![Complex64::new(0.0, 0.0); times.len()];
    for part in &partials {
        for (f, p) in field.iter_mut().zip(part) {
            *f += p;
        }
    }
    for f in &mut field {
        *f *= EMISSION_SCALE;
    }
    field
}

/// Samples the ensemble field on `[window.0, window.1]` every `dt_samp` ns.
pub fn simulate_sequence(
    seq: &PulseSequence,
    spec: &EnsembleSpec,
    window: (f64, f64),
    dt_samp: f64,
) -> Result<Signal> {
    let (t_a, t_b) = window;
    if !(t_a >= 0.0 && t_b >= t_a && t_b.is_finite()) {
        return Err(EchoError::InvalidParameter(format!(
            "window [{t_a}, {t_b}] must satisfy 0 ≤ t_a ≤ t_b"
        )));
    }
    if !(dt_samp > 0.0) {
        return Err(EchoError::InvalidParameter(format!("dt_samp must be positive, got {dt_samp}")));
    }
    if let Some(shortest) = seq.pulses.iter().map(|p| p.duration).reduce(f64::min) {
        let limit = shortest / 10.0;
        if dt_samp > limit * (1.0 + 1e-12) {
            return Err(EchoError::SamplingTooCoarse { dt_samp, limit });
        }
    }
    let n = ((t_b - t_a) / dt_samp + 1e-9).floor() as usize + 1;
    let times: Vec<f64> = (0..n).map(|i| t_a + i as f64 * dt_samp).collect();
    let samples = ensemble_field(seq, spec, &times)?;
    let in_pulse = times.iter().map(|&t| seq.in_pulse(t)).collect();
    Ok(Signal { t0: t_a, dt_samp, samples, in_pulse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn pulse(t: f64, d: f64, area: f64, phase: f64) -> Pulse {
        Pulse::with_area("p", t, d, area, phase).unwrap()
    }

    /// Fine-step RK4 on dr/dt = axis × r, independent of the closed form.
    fn rk4_rotation(mut r: [f64; 3], axis: [f64; 3], tau: f64, steps: usize) -> [f64; 3] {
        let f = |r: [f64; 3]| {
            [
                axis[1] * r[2] - axis[2] * r[1],
                axis[2] * r[0] - axis[0] * r[2],
                axis[0] * r[1] - axis[1] * r[0],
            ]
        };
        let h = tau / steps as f64;
        for _ in 0..steps {
            let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
            let k1 = f(r);
            let k2 = f(add(r, k1, h / 2.0));
            let k3 = f(add(r, k2, h / 2.0));
            let k4 = f(add(r, k3, h));
            for i in 0..3 {
                r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        r
    }

    #[test]
    fn pi_pulse_inverts_ground_state() {
        let s = apply_pulse(BlochState::GROUND, &pulse(0.0, 15.0, PI, 0.0), 0.0);
        assert_abs_diff_eq!(s.u, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.v, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.w, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_rabi_on_resonance_is_identity() {
        let s0 = BlochState::new(0.3, -0.4, 0.5);
        assert_eq!(apply_pulse(s0, &pulse(0.0, 10.0, 0.0, 1.0), 0.0), s0);
    }

    #[test]
    fn far_detuned_atom_barely_excited() {
        let p = pulse(0.0, 15.0, FRAC_PI_2, 0.0);
        let s = apply_pulse(BlochState::GROUND, &p, 10.0 * p.rabi);
        assert!((s.w + 1.0).abs() < 0.02, "w = {}", s.w);
        let r = rk4_rotation([0.0, 0.0, -1.0], [p.rabi, 0.0, 10.0 * p.rabi], p.duration, 20_000);
        assert_abs_diff_eq!(s.u, r[0], epsilon = 1e-9);
        assert_abs_diff_eq!(s.v, r[1], epsilon = 1e-9);
        assert_abs_diff_eq!(s.w, r[2], epsilon = 1e-9);
    }

    #[test]
    fn rodrigues_matches_rk4_for_general_axis() {
        let p = pulse(0.0, 3.0, 2.1, 0.7);
        let det = -0.35;
        let s0 = BlochState::new(0.2, -0.5, 0.6);
        let s = apply_pulse(s0, &p, det);
        let axis = [p.rabi * 0.7f64.cos(), p.rabi * 0.7f64.sin(), det];
        let r = rk4_rotation([s0.u, s0.v, s0.w], axis, p.duration, 20_000);
        assert_abs_diff_eq!(s.u, r[0], epsilon = 1e-10);
        assert_abs_diff_eq!(s.v, r[1], epsilon = 1e-10);
        assert_abs_diff_eq!(s.w, r[2], epsilon = 1e-10);
    }

    #[test]
    fn free_evolution_zero_time_is_identity() {
        let s0 = BlochState::new(0.1, 0.2, -0.3);
        assert_eq!(free_evolve(s0, 0.0, 0.7, 100.0, 50.0), s0);
    }

    #[test]
    fn free_evolution_decay_law() {
        let (t1, t2) = (600_000.0, 6000.0);
        let s = free_evolve(BlochState::new(1.0, 0.0, 0.0), t2, 0.0, t1, t2);
        assert_abs_diff_eq!(s.u, (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.v, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.w, -1.0 + (-t2 / t1).exp(), epsilon = 1e-15);
    }

    #[test]
    fn free_precession_is_counter_clockwise() {
        let (tau, t2) = (10.0, 6000.0);
        let det = FRAC_PI_2 / tau;
        let s = free_evolve(BlochState::new(1.0, 0.0, -1.0), tau, det, f64::INFINITY, t2);
        assert_abs_diff_eq!(s.u, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.v, (-tau / t2).exp(), epsilon = 1e-15);
        assert_eq!(s.w, -1.0);
    }

    #[test]
    fn pulses_conserve_norm_without_relaxation() {
        let mut s = BlochState::new(0.6, 0.0, -0.8);
        for i in 0..200 {
            let p = pulse(0.0, 1.0 + i as f64 * 0.1, 0.3 * i as f64, 0.17 * i as f64);
            s = apply_pulse(s, &p, 0.05 * i as f64 - 3.0);
            s = free_evolve(s, 7.0, 0.3, f64::INFINITY, f64::INFINITY);
        }
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn overlapping_pulses_rejected() {
        let a = pulse(0.0, 15.0, 1.0, 0.0);
        let b = pulse(10.0, 15.0, 1.0, 0.0);
        assert!(matches!(PulseSequence::new(vec![a, b]), Err(EchoError::InvalidSequence(_))));
        assert!(Pulse::with_area("x", 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(Pulse::with_area("x", 0.0, 1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn sampled_field_matches_direct_propagation() {
        let seq = PulseSequence::new(vec![pulse(0.0, 2.0, 1.0, 0.3), pulse(40.0, 2.0, 0.7, -0.4)]).unwrap();
        let spec = EnsembleSpec { n_atoms: 7, ..EnsembleSpec::default() };
        let grid = sample_detunings(&spec).unwrap();
        let times = [1.0, 5.0, 5.2, 5.4, 5.6, 41.0, 42.0, 50.0, 50.5, 51.0, 51.5];
        let field = ensemble_field_on_grid(&seq, &grid, spec.t1, spec.t2, &times);
        for (k, &t) in times.iter().enumerate() {
            let mut expect = Complex64::new(0.0, 0.0);
            for (&d, &w) in grid.detunings.iter().zip(&grid.weights) {
                let mut s = BlochState::GROUND;
                let mut t_now = 0.0;
                for p in seq.pulses() {
                    if t <= p.t_start {
                        break;
                    }
                    s = free_evolve(s, p.t_start - t_now, d, spec.t1, spec.t2);
                    s = apply_partial_pulse(s, p, d, t - p.t_start);
                    t_now = p.t_end().min(t);
                }
                s = free_evolve(s, t - t_now, d, spec.t1, spec.t2);
                expect += s.transverse() * w;
            }
            expect *= EMISSION_SCALE;
            assert!((field[k] - expect).norm() < 1e-13, "t={t}: {} vs {}", field[k], expect);
        }
    }

    #[test]
    fn two_pulse_echo_at_twice_the_delay() {
        let tau = 100.0;
        let seq = PulseSequence::new(vec![
            pulse(0.0, 0.2, FRAC_PI_2, 0.0),
            pulse(tau, 0.2, PI, 0.0),
        ])
        .unwrap();
        let spec = EnsembleSpec::default();
        let sig = simulate_sequence(&seq, &spec, (150.0, 250.0), 0.02).unwrap();
        // Pulses act at their mid-points, 0.1 ns after their start.
        let expected = 2.0 * (tau + 0.1) - 0.1;
        let (t_peak, _) = sig.peak_near(expected, 20.0).unwrap();
        assert!((t_peak - expected).abs() <= 0.1 + sig.dt_samp, "peak at {t_peak}");
    }

    #[test]
    fn signal_flags_pulse_samples() {
        let seq = PulseSequence::new(vec![pulse(10.0, 15.0, 1.0, 0.0)]).unwrap();
        let spec = EnsembleSpec { n_atoms: 401, ..EnsembleSpec::default() };
        let sig = simulate_sequence(&seq, &spec, (0.0, 40.0), 1.0).unwrap();
        assert_eq!(sig.len(), 41);
        let flagged: Vec<usize> = (0..sig.len()).filter(|&i| sig.in_pulse[i]).collect();
        assert_eq!(flagged, (10..=25).collect::<Vec<_>>());
        let mut buf = Vec::new();
        sig.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("time_ns,re,im,in_pulse"));
        assert_eq!(lines.count(), 41);
        assert!(text.lines().nth(12).unwrap().ends_with(",1"));
    }

    #[test]
    fn coarse_sampling_rejected() {
        let seq = PulseSequence::new(vec![pulse(0.0, 15.0, 1.0, 0.0)]).unwrap();
        let spec = EnsembleSpec { n_atoms: 401, ..EnsembleSpec::default() };
        let err = simulate_sequence(&seq, &spec, (0.0, 100.0), 2.0).unwrap_err();
        assert!(matches!(err, EchoError::SamplingTooCoarse { .. }));
        assert!(simulate_sequence(&seq, &spec, (0.0, 100.0), 1.5).is_ok());
    }

    #[test]
    fn revival_inside_window_rejected() {
        let seq = PulseSequence::new(vec![pulse(0.0, 15.0, 1.0, 0.0)]).unwrap();
        let spec = EnsembleSpec { n_atoms: 101, ..EnsembleSpec::default() };
        let err = simulate_sequence(&seq, &spec, (0.0, 1000.0), 1.0).unwrap_err();
        assert!(matches!(err, EchoError::RevivalInWindow { .. }));
    }
}
