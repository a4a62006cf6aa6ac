//! Weak values postselected on position, standard-ordered / Kirkwood /
//! Margenau–Hill quasiprobabilities, and exact simulators for the quantum
//! von Neumann weak measurement and its classical Liouville counterpart.
//!
//! Units are dimensionless with ħ = ω = 1.

pub mod classical;
pub mod error;
pub mod grid;
pub mod io;
pub mod measurement;
pub mod observable;
pub mod quasiprob;
pub mod special;
pub mod state;
pub mod weak;

pub use classical::{
    apply_kick, classical_weak_value, conditional_mean_pointer, positivity_certificate,
    sample_product_state, Binning, ClassicalEnsemble, PhaseSpaceDensity, PhaseSpaceObservable,
};
pub use error::{Error, Result};
pub use grid::QuadratureGrid;
pub use measurement::{evolve_joint, shift_convergence_study, JointDistribution, PointerState};
pub use observable::{ObservableSpec, RealFn};
pub use quasiprob::{kirkwood, margenau_hill, standard_ordered, wigner, FieldKind, QuasiprobField};
pub use state::{
    coherent_state, fock_state, mix, vacuum, Basis, CoherentAmplitude, MixedState, WaveFunction,
};
pub use weak::{
    coherent_p2_closed_form, negativity_probability, negativity_probability_numeric,
    negativity_region, weak_energy_relation, weak_value, WeakValueProfile,
};
