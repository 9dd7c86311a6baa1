//! Exact dynamics of N spin-1/2 systems coupled by uniform N-wise
//! interactions under time-dependent fields.
//!
//! The 2^N-dimensional problem splits into 2^{N−1} independent two-level
//! problems through a time-independent chain of controlled-flip unitaries
//! (a Gray-code basis permutation). This crate provides the symbolic Pauli
//! algebra, the chain transform, the per-subspace effective Hamiltonians,
//! the decomposed propagator, the GHZ-generation and selective-cooling
//! protocols, and a brute-force dense oracle for verification.

pub mod dynamics;
pub mod error;
pub mod model;
pub mod oracle;
pub mod pauli;
pub mod protocols;
pub mod scenario;
pub mod subspace;
pub mod transform;

pub use dynamics::{
    assemble_propagator, detuning, evolve_density, measure_and_project,
    propagate_two_level, rabi_probability, DensityMatrix, Method,
    PropagatorOptions, SparsePropagator, TwoLevelState,
};
pub use error::{Error, Result};
pub use model::{
    build_full_hamiltonian, evaluate_driver, CouplingSchedule, Driver,
    FieldSchedule, InitialState, MixtureTerm, ScenarioConfig, TimeGrid,
};
pub use oracle::{
    compare, dense_evolve, verify_block_structure, BlockResidualReport,
    CompareReport, DenseState, DenseTrajectory,
};
pub use pauli::{
    pauli_multiply, DenseOperator, OperatorSum, PauliLetter, PauliString,
    DENSE_SITE_CAP,
};
pub use protocols::{
    run_cooling, run_ghz, selectivity_map, CoolingReport, CoolingScenario,
    GhzReport, GhzScenario, GhzTarget, ParityMode,
};
pub use scenario::{
    emit_scenario, parse_scenario, parse_scenario_str, ParsedScenario, Protocol,
    ScenarioFile,
};
pub use subspace::{
    effective_field, embed, enumerate_labels, static_spectrum,
    subspace_basis_pair, EffectiveHamiltonian, SubspaceLabel,
};
pub use transform::{chain_unitary, pair_unitary, ChainUnitary};
