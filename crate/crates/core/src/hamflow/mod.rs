//! Hamiltonian vector fields, flows, symplectic map representations and the
//! algebra of generating Hamiltonians.

mod algebra;
mod commutator;
mod field;
mod flow;
mod map;
mod recovery;

pub use algebra::{
    compose_hamiltonian, conjugate_hamiltonian, flow_match_residual, inverse_hamiltonian, iterated_hamiltonian,
    AlgebraVariant,
};
pub use commutator::{commutator_isotopy, commutator_map, commutator_support};
pub use field::{phase_variable_names, FieldSource, HamiltonianField, DEFAULT_FD_STEP};
pub(crate) use field::{FnSourceFallible, ValueOnly};
pub use flow::{flow, flow_checked, steps_for, DEFAULT_STEPS};
pub use map::{
    c0_distance, common_region, jacobian, symplectic_defect, IsotopyTrace, MapKind, PointMap, SymplecticMapRep,
    DEFAULT_ITERATE_BUDGET,
};
pub use recovery::{
    hamiltonian_from_isotopy, hamiltonian_from_isotopy_with_sign, max_loop_integral, recover_initial_slice,
    recover_initial_slice_with_sign, velocity_slice, PotentialSlice, RecoveredHamiltonian,
};
