//! Regulator pairings of Steinberg symbols `{p, q}` on the circle.
//!
//! Three independent evaluations of the same complex number are provided:
//! a contour integral of `log p d log q`, a closed form in the Fourier
//! coefficients of the continuous logarithms, and a Fredholm determinant of
//! truncated Toeplitz operators. The [`harness`] module cross-checks them.

pub mod circle;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod parse;
pub mod poly;
pub mod rational;
pub mod regulator;
pub mod toeplitz;

pub use circle::{continuous_log, winding_number, CircleFunction, LogDecomposition, Spectrum};
pub use error::{Error, Result};
pub use geometry::{compose, deform, reparameterize, Loop, Reparameterization, SteinbergSymbolInstance};
pub use harness::{evaluate_pair, selftest, PairingReport, RunConfig};
pub use linalg::CMatrix;
pub use parse::{parse_loop, parse_point, parse_rational, parse_symbol, ParseError};
pub use poly::Polynomial;
pub use rational::{order_at, tame_symbol, Divisor, Point, RationalFunction};
pub use regulator::{
    beilinson_pairing, closed_form, mahler_measure, real_regulator, regulator_fourier,
    regulator_integral, Method, RegulatorValue,
};
pub use toeplitz::{
    commutator_determinant, grothendieck_det, h_block, helton_howe_value, hs_commutator_norm_sq,
    steinberg_operator_determinant, toeplitz_matrix, DeterminantResult, HsRoute,
};
