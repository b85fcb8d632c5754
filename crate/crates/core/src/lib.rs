//! Pulse-compression toolkit for smooth RF control envelopes.
//!
//! A pulse goes through two fitting stages: a floating-point piecewise-cubic
//! least-squares fit ([`spline`]), then a quantisation-aware refit ([`qafit`])
//! that searches the fixed-point coefficient grid to compensate the error the
//! recursive hardware decompressor accumulates. The [`fixedpoint`] module is
//! the bit-exact software model of that decompressor, including the
//! symmetric mode that replays the stored half of a mirror-symmetric pulse
//! backwards. [`metrics`] scores results in the time and frequency domains
//! and accounts for memory, and [`stirap`] measures the end effect of
//! envelope representation on a three-level population-transfer gate.

pub mod error;
pub mod fixedpoint;
pub mod io;
pub mod metrics;
pub mod pulse;
pub mod qafit;
pub mod spline;
pub mod stirap;

pub use error::{Error, Result};
pub use fixedpoint::{
    decompress, decompress_symmetric, emit, predict_error, quantize_segment,
    sweep_quantization_width, to_bowler, weights_of, BowlerCoeffs, CompressedPulse, Decompressed,
    FixedPointFormat, QuantizedSegment, SegmentErrorProfile,
};
pub use metrics::{
    dds_modulate, footprint, spectrum_error, time_domain_error, ErrorReport, FootprintReport,
    SpectrumReport,
};
pub use pulse::{
    detect_symmetry, gen_blackman, gen_gaussian, gen_piecewise_quadratic_chirp, gen_sigmoid,
    Pulse, DEFAULT_SAMPLE_RATE, DEFAULT_SCALE,
};
pub use qafit::{
    compress_naive, optimize_segment, quantisation_aware_fit, segment_cost, QaFitOptions,
    QaFitResult, QaSegmentResult, SymmetryMode,
};
pub use spline::{
    eval_spline, fit_float, optimize_knots_local, uniform_knots, CubicPoly, KnotPartition,
    SplineFit,
};
pub use stirap::{
    build_hamiltonian, dark_state, run_benchmark, simulate_transfer, simulate_transfer_detailed,
    BenchRow, StirapConfig, ThreeLevelState, TransferOutcome,
};

/// Tool version string surfaced in CLI manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
