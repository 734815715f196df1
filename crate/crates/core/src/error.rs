use thiserror::Error;

pub type Result<T> = std::result::Result<T, EchoError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EchoError {
    #[error("invalid ensemble: {0}")]
    InvalidSpec(String),

    #[error("invalid pulse sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "spurious grid revival at {revival_ns} ns falls inside the window [{t_a}, {t_b}] ns; \
         increase n_atoms or shorten the window"
    )]
    RevivalInWindow { revival_ns: f64, t_a: f64, t_b: f64 },

    #[error("sampling step {dt_samp} ns is coarser than a tenth of the shortest pulse ({limit} ns)")]
    SamplingTooCoarse { dt_samp: f64, limit: f64 },

    #[error("too many pulses for pathway enumeration: {0} (maximum {max})", max = crate::pathways::MAX_PULSES)]
    TooManyPulses(usize),

    #[error("pathways do not coincide: echo times {0} ns and {1} ns")]
    NonCoincidentPathways(f64, f64),

    #[error("sequence does not have the write/2-data/2-read shape: {0}")]
    ShapeMismatch(String),

    #[error("integration window [{from}, {to}] ns is outside the signal range [{start}, {end}] ns")]
    WindowOutOfRange { from: f64, to: f64, start: f64, end: f64 },

    #[error("integration window [{from}, {to}] ns overlaps an excitation pulse")]
    WindowOverlapsPulse { from: f64, to: f64 },

    #[error("degenerate fringe fit: {0}")]
    DegenerateFit(String),
}
