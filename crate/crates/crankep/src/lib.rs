//! Cranked two-dimensional harmonic oscillator in the rotating frame:
//! closed-form spectrum, Bogoliubov diagonalization of the quadratic form,
//! classical time evolution, and a full numerical characterization of the
//! instability points as exceptional points (spectra, commutator breakdown,
//! scaling exponents and complex-plane monodromy).

pub mod bogoliubov;
pub mod cli;
pub mod dynamics;
pub mod ep_analysis;
pub mod linalg;
pub mod model;

#[cfg(test)]
pub(crate) mod test_util;

pub use bogoliubov::{
    build_transform, check_bosonic, commutator_matrix, left_from_right, quantum_form_matrix,
    verify_normalization, BogoliubovError, BosonCheck, CommutatorMatrix, ContinuationCase,
    QuantumFormMatrix, TransformPair,
};
pub use dynamics::{
    evolve, evolve_rk4, growth_rate, propagator, DynamicsError, GrowthReport, PhaseState,
    Trajectory,
};
pub use ep_analysis::{
    alignment_measure, coalescence_overlap, diabolic_check, encircle_ep, locate_eps,
    scaling_exponent, DegeneracyReport, EpError, EpKind, EpLocation, LoopDirection, LoopReport,
    ScalingFit, ScalingQuantity,
};

pub use linalg::{ComplexMatrix4, ComplexVector4, LinalgError};
pub use model::{
    build_dynamical_matrix, build_quadratic_form, eigenmodes, instability_interval,
    map_couplings, quadratic_form_from_couplings, routhian_energy, CouplingSet,
    DynamicalMatrix, EigenmodePair, ModelError, ModelParams, QuadraticForm,
};
