//! Fibered rotations of the plane, their Liouville commutators and
//! commutator Hamiltonians, smoothing studies for singular profiles and the
//! angle-bound diagnostic.

mod hamiltonian;
mod map;
mod profile;
mod study;

pub use hamiltonian::{
    commutator_hamiltonian_literal, commutator_hamiltonian_recovered, literal_vs_recovered, rotation_calabi_smooth,
    rotation_generator, LiteralComparison, RadialRecoveryOptions, RecoveredRotationHamiltonian, RotationCalabi,
    ROTATION_CELLS, ROTATION_FLOW_TOLERANCE,
};
pub use map::{commutator_angle, max_area_defect, rotation_apply, rotation_commutator_map, FiberedRotation};
pub use profile::{smooth_step, AngularProfile, ProfileFlags};
pub use study::{
    angle_bound_diagnostic, rotation_distance, singular_profile_study, AngleBoundReport, SingularStudy, SmoothingRow,
};
