//! Generating functions in the global chart of `R^{2n} × R^{2n}`: the map
//! `Ψ(S)`, admissibility, mollification, Liouville conjugation,
//! Hamilton–Jacobi generators and generating functions of given maps.

mod admissibility;
mod chart;
mod function;
mod hj;
mod mollify;
mod psi;
mod section;

pub use admissibility::{admissibility_check, admissibility_from_slopes, sample_slopes, AdmissibilityReport};
pub use chart::WeinsteinChart;
pub use function::{
    base_variable_names, liouville_conjugated_genfun, DerivativeBounds, GenFunSource, GeneratingFunction,
    GENFUN_FD_STEP,
};
pub use hj::{
    hamilton_jacobi_field, hamilton_jacobi_value, hj_flow_residual, resolve_hj_sign, GenFunPath, SignResolution,
    HJ_SIGN,
};
pub use mollify::{mollify, GridSamples, Mollified, MollifierKernel};
pub use psi::{base_of_image, psi_apply, psi_inverse_apply, CONTRACTION_BOUND, SOLVE_BUDGET, SOLVE_TOLERANCE};
pub use section::{genfun_from_map, section_at, SectionResult};
