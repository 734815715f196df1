//! Benchmark fixtures shared by the criterion benches.

use echo_core::{EnsembleSpec, Fig1Params};

/// Default five-pulse parameters and ensemble. Smaller grids revive inside
/// the echo window, so the default node count is kept.
pub fn fixture() -> (Fig1Params, EnsembleSpec) {
    (Fig1Params::default(), EnsembleSpec::default())
}
