//! Coherence-order pathway oracle.
//!
//! Every atom starts in the ground population. Each pulse moves the density
//! matrix component a pathway follows from one coherence order to another
//! with an exact two-level transfer coefficient; between pulses a coherence
//! of order ±1 accumulates detuning phase ∓Δτ. A pathway ending in the
//! detected order −1 re-phases (emits an echo) when the accumulated phase
//! cancels. Pulses act at their mid-points.
//!
//! Transfer coefficients for a pulse of area θ and phase φ, written as
//! `base · exp(i·PHASE_SIGN·(q_in − q_out)·φ)` (c = cos²(θ/2),
//! s = sin²(θ/2), h = sin(θ)/2):
//!
//! | from \ to | −1   | +1   | 0g   | 0e   |
//! |-----------|------|------|------|------|
//! | −1        | c    | s    | +i h | −i h |
//! | +1        | s    | c    | −i h | +i h |
//! | 0g        | +i h | −i h | c    | s    |
//! | 0e        | −i h | +i h | s    | c    |

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;

use crate::bloch::PulseSequence;
use crate::conventions::{COINCIDENCE_TOL_NS, DETECTED_ORDER, PHASE_SIGN};
use crate::ensemble::EnsembleSpec;
use crate::error::{EchoError, Result};

pub const MAX_PULSES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    /// Coherence of order −1; the emitted component.
    Minus,
    /// Ground-state population.
    Ground,
    /// Excited-state population.
    Excited,
    /// Coherence of order +1.
    Plus,
}

impl Order {
    pub const ALL: [Order; 4] = [Order::Minus, Order::Ground, Order::Excited, Order::Plus];

    /// Coherence order as an integer; populations are 0.
    pub fn value(self) -> i32 {
        match self {
            Order::Minus => -1,
            Order::Plus => 1,
            Order::Ground | Order::Excited => 0,
        }
    }

    pub fn is_coherence(self) -> bool {
        self.value() != 0
    }

    pub fn label(self) -> &'static str {
        match self {
            Order::Minus => "-1",
            Order::Ground => "0g",
            Order::Excited => "0e",
            Order::Plus => "+1",
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Relaxation times used for the decay weights of a pathway.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relaxation {
    pub t1: f64,
    pub t2: f64,
}

impl Relaxation {
    pub const NONE: Relaxation = Relaxation { t1: f64::INFINITY, t2: f64::INFINITY };
}

impl From<&EnsembleSpec> for Relaxation {
    fn from(spec: &EnsembleSpec) -> Self {
        Relaxation { t1: spec.t1, t2: spec.t2 }
    }
}

/// One coherence-order history and the echo it produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Pathway {
    /// Order in each interval: before the first pulse, then after each pulse.
    pub orders: Vec<Order>,
    pub echo_time: f64,
    /// `Σ PHASE_SIGN·(q_in − q_out)·φ` over pulses, wrapped to (−π, π].
    pub phase: f64,
    /// Argument of the product of the φ-independent transfer factors; a
    /// multiple of π/2.
    pub intrinsic_phase: f64,
    pub amplitude: f64,
    /// Labels of pulses at which the order changes.
    pub participating_pulses: Vec<String>,
    /// Integers `c_k` with `echo_time = Σ c_k·t_k` over pulse mid-points.
    pub time_coefficients: Vec<i32>,
}

impl Pathway {
    /// `q_in − q_out` at pulse `k`; the factor multiplying that pulse's
    /// phase in [`Pathway::phase`].
    pub fn order_jump(&self, k: usize) -> i32 {
        self.orders[k].value() - self.orders[k + 1].value()
    }

    pub fn total_phase(&self) -> f64 {
        wrap_phase(self.phase + self.intrinsic_phase)
    }

    /// Predicted complex field contribution at the echo peak.
    pub fn complex_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase + self.intrinsic_phase)
    }

    /// Comma separated orders, e.g. `0g,+1,0e,-1`.
    pub fn orders_string(&self) -> String {
        self.orders.iter().map(|o| o.label()).collect::<Vec<_>>().join(",")
    }

    pub fn involves(&self, labels: &[&str]) -> bool {
        self.participating_pulses.len() == labels.len()
            && self.participating_pulses.iter().zip(labels).all(|(a, b)| a == b)
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

/// Time of the stimulated echo written by pulses at `t_write` and `t_data`
/// and read out by a pulse at `t_read` (pulse mid-points).
pub fn stimulated_echo_time(t_write: f64, t_data: f64, t_read: f64) -> f64 {
    t_read + t_data - t_write
}

/// φ-independent factor and drive multiplier `q_in − q_out` for one pulse.
pub fn transfer(from: Order, to: Order, area: f64) -> (Complex64, i32) {
    use Order::*;
    let half = 0.5 * area;
    let c = half.cos().powi(2);
    let s = half.sin().powi(2);
    let h = 0.5 * area.sin();
    let base = match (from, to) {
        (Minus, Minus) | (Plus, Plus) | (Ground, Ground) | (Excited, Excited) => Complex64::new(c, 0.0),
        (Minus, Plus) | (Plus, Minus) | (Ground, Excited) | (Excited, Ground) => Complex64::new(s, 0.0),
        (Ground, Minus) | (Excited, Plus) | (Minus, Ground) | (Plus, Excited) => Complex64::new(0.0, h),
        (Excited, Minus) | (Ground, Plus) | (Plus, Ground) | (Minus, Excited) => Complex64::new(0.0, -h),
    };
    (base, from.value() - to.value())
}

/// All pathways that end in the detected order and re-phase strictly after
/// the last pulse. Coincident pathways are listed separately.
pub fn enumerate_pathways(seq: &PulseSequence, relax: Relaxation) -> Result<Vec<Pathway>> {
    let n = seq.len();
    if n > MAX_PULSES {
        return Err(EchoError::TooManyPulses(n));
    }
    let mut out = Vec::new();
    if n == 0 {
        return Ok(out);
    }
    let mut orders = vec![Order::Ground];
    walk(seq, relax, &mut orders, Complex64::new(1.0, 0.0), &mut out);
    Ok(out)
}

fn walk(
    seq: &PulseSequence,
    relax: Relaxation,
    orders: &mut Vec<Order>,
    base: Complex64,
    out: &mut Vec<Pathway>,
) {
    let pulses = seq.pulses();
    let k = orders.len() - 1;
    if k == pulses.len() {
        if let Some(p) = finish(seq, relax, orders, base) {
            out.push(p);
        }
        return;
    }
    let from = orders[k];
    let last = k + 1 == pulses.len();
    for to in Order::ALL {
        if last && to != DETECTED_ORDER {
            continue;
        }
        let (factor, _) = transfer(from, to, pulses[k].area());
        if factor == Complex64::new(0.0, 0.0) {
            continue;
        }
        orders.push(to);
        walk(seq, relax, orders, base * factor, out);
        orders.pop();
    }
}

fn finish(seq: &PulseSequence, relax: Relaxation, orders: &[Order], base: Complex64) -> Option<Pathway> {
    let pulses = seq.pulses();
    let n = pulses.len();
    let t: Vec<f64> = pulses.iter().map(|p| p.center()).collect();

    // Order after pulse k is orders[k + 1]; its sign sets the direction in
    // which detuning phase accumulates.
    let mut echo_time = t[n - 1];
    for k in 0..n - 1 {
        echo_time += f64::from(orders[k + 1].value()) * (t[k + 1] - t[k]);
    }
    if echo_time <= pulses[n - 1].t_end() + COINCIDENCE_TOL_NS {
        return None;
    }

    let mut decay = 1.0;
    for k in 0..n - 1 {
        let tau = t[k + 1] - t[k];
        match orders[k + 1] {
            o if o.is_coherence() => decay *= (-tau / relax.t2).exp(),
            Order::Excited => decay *= (-tau / relax.t1).exp(),
            _ => {}
        }
    }
    decay *= (-(echo_time - t[n - 1]) / relax.t2).exp();

    let mut phase = 0.0;
    let mut participating = Vec::new();
    let mut coefficients = vec![0; n];
    for (k, p) in pulses.iter().enumerate() {
        let (from, to) = (orders[k], orders[k + 1]);
        phase += PHASE_SIGN * f64::from(from.value() - to.value()) * p.phase;
        if from != to {
            participating.push(p.label.clone());
        }
        coefficients[k] = if k + 1 == n {
            1 + from.value()
        } else if k == 0 {
            -to.value()
        } else {
            from.value() - to.value()
        };
    }

    Some(Pathway {
        orders: orders.to_vec(),
        echo_time,
        phase: wrap_phase(phase),
        intrinsic_phase: base.arg(),
        amplitude: base.norm() * decay,
        participating_pulses: participating,
        time_coefficients: coefficients,
    })
}

/// `p1.phase − p2.phase` (intrinsic factors included), wrapped to (−π, π].
pub fn interference_phase_difference(p1: &Pathway, p2: &Pathway) -> Result<f64> {
    if (p1.echo_time - p2.echo_time).abs() > COINCIDENCE_TOL_NS {
        return Err(EchoError::NonCoincidentPathways(p1.echo_time, p2.echo_time));
    }
    Ok(wrap_phase(p1.total_phase() - p2.total_phase()))
}

/// Sum of the complex amplitudes of all pathways re-phasing at `time`.
pub fn coincident_field(pathways: &[Pathway], time: f64) -> Complex64 {
    pathways
        .iter()
        .filter(|p| (p.echo_time - time).abs() <= COINCIDENCE_TOL_NS)
        .map(Pathway::complex_amplitude)
        .sum()
}

/// Distinct echo times (ascending), each with the summed complex amplitude of
/// its coincident pathways.
pub fn echo_families(pathways: &[Pathway]) -> Vec<(f64, Complex64)> {
    let mut times: Vec<f64> = pathways.iter().map(|p| p.echo_time).collect();
    times.sort_by(f64::total_cmp);
    let mut families: Vec<(f64, Complex64)> = Vec::new();
    for t in times {
        if families.last().is_some_and(|(t0, _)| (t - t0).abs() <= COINCIDENCE_TOL_NS) {
            continue;
        }
        families.push((t, coincident_field(pathways, t)));
    }
    families
}

/// Predicted fringe `mean·(1 + depth·cos(φ + phase_offset))` of one echo bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedFringe {
    pub echo_time: f64,
    pub mean: f64,
    pub depth: f64,
    pub phase_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidePeakPrediction {
    pub central: PredictedFringe,
    pub left: PredictedFringe,
    pub right: PredictedFringe,
}

/// Number of phase points used to extract the first fringe harmonic.
const SCAN_POINTS: usize = 64;

/// Peak-intensity fringes of the three echo bins of a write / 2-data /
/// 2-read sequence while the phase of the first data pulse is scanned.
///
/// The left bin holds (D1|R1), the central bin (D2|R1) and (D1|R2), the right
/// bin (D2|R2); higher-order pathways landing in the same bins are included.
pub fn predict_side_peak_modulation(seq: &PulseSequence, relax: Relaxation) -> Result<SidePeakPrediction> {
    let pulses = seq.pulses();
    if pulses.len() != 5 {
        return Err(EchoError::ShapeMismatch(format!("expected 5 pulses, found {}", pulses.len())));
    }
    let t: Vec<f64> = pulses.iter().map(|p| p.center()).collect();
    let data_gap = t[2] - t[1];
    let read_gap = t[4] - t[3];
    if (data_gap - read_gap).abs() > COINCIDENCE_TOL_NS {
        return Err(EchoError::ShapeMismatch(format!(
            "data spacing {data_gap} ns differs from read spacing {read_gap} ns"
        )));
    }
    let pathways = enumerate_pathways(seq, relax)?;
    let bin = |time: f64| fringe_in_bin(&pathways, time);
    Ok(SidePeakPrediction {
        left: bin(t[3] + t[1] - t[0]),
        central: bin(t[3] + t[2] - t[0]),
        right: bin(t[4] + t[2] - t[0]),
    })
}

fn fringe_in_bin(pathways: &[Pathway], time: f64) -> PredictedFringe {
    let members: Vec<&Pathway> = pathways
        .iter()
        .filter(|p| (p.echo_time - time).abs() <= COINCIDENCE_TOL_NS)
        .collect();
    let mut c0 = 0.0;
    let mut c1 = Complex64::new(0.0, 0.0);
    for j in 0..SCAN_POINTS {
        let phi = TAU * j as f64 / SCAN_POINTS as f64;
        let field: Complex64 = members
            .iter()
            .map(|p| {
                let shift = PHASE_SIGN * f64::from(p.order_jump(1)) * phi;
                p.complex_amplitude() * Complex64::from_polar(1.0, shift)
            })
            .sum();
        let intensity = field.norm_sqr();
        c0 += intensity;
        c1 += intensity * Complex64::from_polar(1.0, -phi);
    }
    c0 /= SCAN_POINTS as f64;
    c1 /= SCAN_POINTS as f64;
    if !(c0 > f64::MIN_POSITIVE) {
        return PredictedFringe { echo_time: time, mean: 0.0, depth: 0.0, phase_offset: 0.0 };
    }
    PredictedFringe {
        echo_time: time,
        mean: c0,
        depth: 2.0 * c1.norm() / c0,
        phase_offset: c1.arg(),
    }
}
