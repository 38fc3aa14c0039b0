//! Numerical toolkit for finite-dimensional GKLS (Lindblad) generators.
//!
//! The crate builds generators from a Hamiltonian and a Kossakowski matrix,
//! diagonalizes their superoperators, and checks the universal constraint
//! that every relaxation rate obeys `ΣΓ ≥ (d/√2) Γ_α`. Each step used to
//! establish that bound is also exposed as a numerical check, so a failure
//! anywhere points at a concrete identity.
//!
//! Modules, bottom-up:
//!
//! - [`matrix`], [`linalg`]: dense complex matrices, eigensolvers, `expm`.
//! - [`basis`]: the generalized Gell-Mann operator basis.
//! - [`generator`]: GKLS generators, superoperators, Lindblad conversion.
//! - [`spectrum`]: eigenvalues, zero mode, relaxation profiles.
//! - [`constraints`]: rate inequalities and the measured-times witness.
//! - [`proofcheck`]: the bound's derivation as per-mode numerical checks.
//! - [`ensemble`]: seeded random generators, statistics, saturation search.
//! - [`dynamics`]: semigroup evolution and expectation-value decompositions.

pub mod basis;
pub mod constraints;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod fixtures;
pub mod generator;
pub mod linalg;
pub mod matrix;
pub mod proofcheck;
pub mod random;
pub mod serde_ext;
pub mod spectrum;

pub use basis::{build_gellmann_basis, hs_inner, hs_norm, OperatorBasis};
pub use constraints::{
    check_corollary, check_main_theorem, check_qubit_relations, nearest_consistent_rates, witness_measured_times,
    ConstraintReport, RateSet, RateSource, Verdict, WitnessVerdict,
};
pub use dynamics::{evolve, expectation_series, physicality_report, DensityMatrix, TimeGrid, Trajectory};
pub use ensemble::{run_ensemble, sample_generator, saturation_search, EnsembleConfig, EnsembleStats, Execution};
pub use error::{Error, Result};
pub use generator::{
    GKLSGenerator, HermitianMatrix, KossakowskiMatrix, LindbladDecomposition, LindbladTerm, LinearMap, Superoperator,
};
pub use matrix::{ComplexMatrix, C64};
pub use spectrum::{
    compute_spectrum, relaxation_profile, verify_spectral_structure, GeneratorSpectrum, RelaxationProfile,
};
