//! Kirkwood-Dirac (KD) quasiprobability toolkit for the discrete-Fourier
//! base pair.
//!
//! The crate computes KD distributions of Hermitian operators over the pair
//! (standard basis, DFT basis) in dimension `d`, enumerates the pure states
//! whose KD distribution is a genuine probability distribution, organizes
//! them on the divisor lattice of `d` as a directed transfer graph, and
//! certifies membership in their convex hull by an explicit coefficient
//! sweep along any start-to-end path of that graph. An independent
//! linear-programming oracle double-checks every verdict.
//!
//! Modules:
//! - [`numtheory`]: prime profiles, CRT reconstruction, digit/index maps.
//! - [`hilbert`]: complex matrices, density operators, KD distributions.
//! - [`purestates`]: the KD-classical pure-state families and their checks.
//! - [`graph`]: the divisor transfer graph and its start-to-end paths.
//! - [`decompose`]: span projection, path sweep, LP membership oracle.
//! - [`sampling`]: seeded generators for states and test operators.
//! - [`suites`]: named verification suites used by the CLI.

#![forbid(unsafe_code)]

use thiserror::Error;

pub mod decompose;
pub mod graph;
pub mod hilbert;
pub mod numtheory;
pub mod purestates;
pub mod sampling;
pub mod suites;

pub use decompose::{CoefficientTable, DecomposeOptions, DecompositionCertificate, LpVerdict};
pub use graph::{DivisorGraph, GraphPath};
pub use hilbert::{DensityOperator, DftPair, HermitianOperator, KDDistribution};
pub use numtheory::{CrtBasis, DigitVector, DimensionProfile, DivisorSplit};
pub use purestates::{PureStateLabel, VertexStateSet};

/// Errors reported by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension {d} exceeds the configured ceiling {ceiling}")]
    DimensionCeiling { d: u64, ceiling: u64 },
    #[error("{value} does not divide {d}")]
    NotADivisor { value: u64, d: u64 },
    #[error("digit {digit} is not below its base {base}")]
    DigitOutOfRange { digit: u32, base: u64 },
    #[error("index {index} is not below the modulus {modulus}")]
    IndexOutOfRange { index: u64, modulus: u64 },
    #[error("residue list has length {found}, profile has {expected} primes")]
    ResidueArity { expected: usize, found: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NonSquareMatrix { rows: usize, cols: usize },
    #[error("row {row} has length {len}, expected {expected}")]
    RaggedMatrix {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("matrix entry ({row},{col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("matrix dimension {d} exceeds the dense-operator cap {cap}")]
    MatrixDimensionCap { d: u64, cap: u64 },
    #[error("operator dimension {found} does not match expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator is not Hermitian: deviation {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("operator trace {trace:.12} is not 1")]
    TraceNotOne { trace: f64 },
    #[error("operator is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("invalid pure-state label (x={x}, m={m}, s={s}) for dimension {d}")]
    InvalidLabel { x: u64, m: u64, s: u64, d: u64 },
    #[error("a-basis and b-basis state forms disagree by {deviation:.3e}")]
    DualFormMismatch { deviation: f64 },
    #[error("start vertex {x0} and end vertex {y0} must be coprime")]
    CoprimalityViolation { x0: u64, y0: u64 },
    #[error("path enumeration exceeded the cap of {cap} paths")]
    PathCapExceeded { cap: usize },
    #[error("invalid graph path: {detail}")]
    InvalidPath { detail: String },
    #[error("state is not KD-classical: worst entry {value:.3e} at ({row},{col})")]
    NotKdClassical { value: f64, row: usize, col: usize },
    #[error("state is not in the span of the path states: residual {residual:.3e}")]
    NotInSpan { residual: f64 },
    #[error(
        "sweep produced coefficient {coefficient:.3e} at (x={x}, m={m}, s={s}); \
         internal consistency breach"
    )]
    SweepInconsistency {
        coefficient: f64,
        x: u64,
        m: u64,
        s: u64,
    },
    #[error("certificate reconstruction residual {residual:.3e} exceeds tolerance")]
    CertificateResidual { residual: f64 },
    #[error("LP did not terminate within {iterations} iterations")]
    LpIndeterminate { iterations: usize },
    #[error("no convex combination exists: phase-1 objective {objective:.3e}")]
    LpInfeasible { objective: f64 },
    #[error("state list is empty")]
    EmptyStateList,
    #[error("dimension {d} is not a prime power")]
    NotPrimePower { d: u64 },
    #[error("gap search is defined for dimension 6 only, got {d}")]
    GapSearchDimension { d: u64 },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
