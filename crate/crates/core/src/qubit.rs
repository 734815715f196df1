//! Time-bin qubit, the storage channel and post-selected fidelity.
//!
//! Storage multiplies the early-bin amplitude by `exp(-2 t_d1 / t2)` and the
//! late-bin amplitude by `exp(-2 (t_d1 + dt) / t2)`, with the write pulse at
//! t = 0. The missing norm is the vacuum branch: it lowers the retrieval
//! probability but leaves the conditional (post-selected) state pure.

use num_complex::Complex64;

use crate::error::{EchoError, Result};

/// `c0|1,0⟩ + c1·e^{iφ}|0,1⟩` with bins `dt` ns apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBinQubit {
    pub c0: f64,
    pub c1: f64,
    pub phi: f64,
    pub dt: f64,
}

impl TimeBinQubit {
    pub fn new(c0: f64, c1: f64, phi: f64, dt: f64) -> Result<Self> {
        let q = TimeBinQubit { c0, c1, phi, dt };
        if !(c0 >= 0.0 && c1 >= 0.0) || ((c0 * c0 + c1 * c1) - 1.0).abs() > 1e-12 {
            return Err(EchoError::InvalidParameter(format!(
                "time-bin amplitudes ({c0}, {c1}) must be non-negative and normalised"
            )));
        }
        if !(dt > 0.0) {
            return Err(EchoError::InvalidParameter(format!("bin separation must be positive, got {dt}")));
        }
        Ok(q)
    }

    /// Intensity ratio `c0² / c1²`; infinite for a pure early-bin state.
    pub fn ratio(&self) -> f64 {
        (self.c0 * self.c0) / (self.c1 * self.c1)
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        [Complex64::new(self.c0, 0.0), Complex64::from_polar(self.c1, self.phi)]
    }
}

/// Post-selected output of the storage channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievedState {
    pub qubit: TimeBinQubit,
    /// Retrieval probability relative to a memory with `t2 → ∞`.
    pub retrieval_probability: f64,
}

/// Qubit with intensity ratio `ratio = c0²/c1²`. `f64::INFINITY` selects the
/// early bin only.
pub fn make_timebin(ratio: f64, phi: f64, dt: f64) -> Result<TimeBinQubit> {
    if ratio.is_nan() || ratio < 0.0 {
        return Err(EchoError::InvalidParameter(format!("ratio must be ≥ 0, got {ratio}")));
    }
    let (c0, c1) = if ratio.is_infinite() {
        (1.0, 0.0)
    } else {
        ((ratio / (1.0 + ratio)).sqrt(), (1.0 / (1.0 + ratio)).sqrt())
    };
    TimeBinQubit::new(c0, c1, phi, dt)
}

/// Fringe visibility `2√R / (1 + R)` of two interfering bins with intensity
/// ratio `R`.
pub fn expected_visibility(ratio: f64) -> f64 {
    if ratio.is_infinite() {
        return 0.0;
    }
    2.0 * ratio.sqrt() / (1.0 + ratio)
}

pub fn apply_memory_channel(q: &TimeBinQubit, t_d1: f64, t2: f64) -> Result<RetrievedState> {
    if !(t_d1 >= 0.0) {
        return Err(EchoError::InvalidParameter(format!("t_d1 must be ≥ 0, got {t_d1}")));
    }
    if !(t2 > 0.0) {
        return Err(EchoError::InvalidParameter(format!("t2 must be positive, got {t2}")));
    }
    let a0 = (-2.0 * t_d1 / t2).exp() * q.c0;
    let a1 = (-2.0 * (t_d1 + q.dt) / t2).exp() * q.c1;
    let p = a0 * a0 + a1 * a1;
    if !(p > 0.0) {
        // Everything decayed; the conditional state is undefined, keep the input.
        return Ok(RetrievedState { qubit: *q, retrieval_probability: 0.0 });
    }
    let norm = p.sqrt();
    let qubit = TimeBinQubit { c0: a0 / norm, c1: a1 / norm, phi: q.phi, dt: q.dt };
    Ok(RetrievedState { qubit, retrieval_probability: p })
}

/// `|⟨input|retrieved⟩|²`.
pub fn postselected_fidelity(input: &TimeBinQubit, retrieved: &RetrievedState) -> Result<f64> {
    if (input.dt - retrieved.qubit.dt).abs() > 1e-12 * input.dt.abs().max(1.0) {
        return Err(EchoError::InvalidParameter(format!(
            "bin separations differ: {} vs {} ns",
            input.dt, retrieved.qubit.dt
        )));
    }
    let a = input.amplitudes();
    let b = retrieved.qubit.amplitudes();
    let overlap = a[0].conj() * b[0] + a[1].conj() * b[1];
    Ok(overlap.norm_sqr().min(1.0))
}
