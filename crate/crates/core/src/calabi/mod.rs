//! Calabi invariant by quadrature, Liouville scaling laws, the extended
//! invariant from commutator recovery and the homothety counterexample.

mod counterexample;
mod eq1;
mod extended;
mod liouville;

pub use counterexample::{
    counterexample_generator, counterexample_sequence, counterexample_study, iterate_count, CounterexampleRow,
};
pub use eq1::{calabi_eq1, homomorphism_check, CalabiMethod, CalabiOptions, CalabiResult, HomomorphismReport};
pub use extended::{
    alternate_liouville_invariance, extended_calabi, extended_calabi_limit, extended_calabi_of_field, richardson,
    ExtendedLimitReport, ExtendedOptions, InvarianceReport, DEFAULT_DELTAS,
};
pub use liouville::{
    commutator_calabi, commutator_calabi_directed, commutator_working_box, conjugation_flow_residual, liouville_conjugated_checked,
    liouville_conjugated_hamiltonian, CommutatorCalabiReport,
};
