//! Sign and scale conventions shared by the Bloch integrator and the pathway
//! oracle. Both modules read these constants; neither hard-codes its own.
//!
//! * A pulse with optical phase `φ` drives rotations about the axis
//!   `(Ω cos(PHASE_SIGN·φ), Ω sin(PHASE_SIGN·φ), DETUNING_SIGN·Δ)`, with
//!   `dr/dt = axis × r`.
//! * During free evolution the transverse part `u + iv` advances as
//!   `exp(i·DETUNING_SIGN·Δ·t)`, i.e. counter-clockwise for `Δ > 0`, where
//!   `Δ = ω_atom − ω_laser`.
//! * The emitted field of one atom is `EMISSION_SCALE·(u + iv)`. This
//!   component carries coherence order [`DETECTED_ORDER`]; its conjugate
//!   carries the opposite order.
//! * A pulse that takes a pathway from order `q_in` to `q_out` contributes
//!   `PHASE_SIGN·(q_in − q_out)·φ` to the pathway phase.

use crate::pathways::Order;

pub const PHASE_SIGN: f64 = 1.0;

pub const DETUNING_SIGN: f64 = 1.0;

pub const EMISSION_SCALE: f64 = 0.5;

pub const DETECTED_ORDER: Order = Order::Minus;

/// Echo times closer than this are the same echo.
pub const COINCIDENCE_TOL_NS: f64 = 1e-9;
