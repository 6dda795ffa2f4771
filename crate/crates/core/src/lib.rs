//! Battle-Lemarié spline wavelet frames.
//!
//! The crate builds the orthonormal spline scaling function `Psi` and wavelet
//! `psi` of order `n` as exact piecewise polynomials, computes the
//! half-integer oversampled frame coefficients of concrete test functions,
//! and evaluates Besov, Triebel-Lizorkin and endpoint Sobolev norms built
//! from them. An independent Littlewood-Paley implementation provides
//! reference norms.

pub mod analysis;
pub mod blsystem;
pub mod bspline;
pub mod error;
pub mod lp_ref;
pub mod mra;
pub mod norms;
pub mod piecewise;
pub mod quadrature;

pub use analysis::{
    basis_coefficients, frame_coefficients, pair, FrameCoefficients, TestFunction,
};
pub use blsystem::{
    build_system, decay_fit, DecayFit, DyadicIndex, MemberKind, Sequence, SplineSystem, Which,
};
pub use bspline::{
    autocorr_symbol, bspline_eval, bspline_fourier, bspline_piecewise, spline_inner,
    AutocorrSymbol,
};
pub use error::{Error, Interval, Result};
pub use lp_ref::{lp_pieces, lp_reconstruct, reference_norm, DyadicPartition, GridSpec};
pub use mra::{crux_target, frame_least_squares, gram_matrix, projection_en};
pub use norms::{
    frame_norm, norm_from_coefficients, require_frame_range, seq_norm_besov, seq_norm_endpoint, seq_norm_triebel,
    sobolev_reference_norm, validate_range,
    CoefficientTable, Exponent, NormParams, NormReport, RangeClass, Space,
};
pub use piecewise::{PiecewisePoly, Side};
