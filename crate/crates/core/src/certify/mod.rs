//! Numerical search for real 4-term decompositions of 2×2×2×2 tensors.
//!
//! A tensor with nonsingular unfolding `B` has real rank at most 4 exactly
//! when some nonsingular moment matrix `M(c, d)` makes every column of
//! `B M⁻¹` a rank-one 2×2 matrix. The objective measures how far the
//! columns are from rank one, scale-free.

mod minimize;
mod objective;
mod report;

pub use minimize::{
    descend, draw_start, local_search, minimize, minimize_with, quasi_newton, restart_rng,
    simplex_descent, LocalMinimum, LocalOptions, Method, MinimizeResult, INTERIOR_REL_TOL,
};
pub use objective::{
    condition_e_residuals, moment_conditioning, moment_matrix, moment_tol, objective_f,
    quad_from_unfolding, recovered_factors, synthetic_rank4, unit_params, CertificateParams,
    ConditionE, FactorMatrix, Objective, MOMENT_REL_TOL, UNFOLDING_REL_TOL,
};
pub use report::{
    conclude, extract_certificate, minima_histogram, report_from_run, typicality_report,
    Conclusion, EvidenceReport, Extraction, HistogramBin, TypicalityConfig, CERTIFICATE_REL_TOL,
    DEFAULT_FLOOR, DEFAULT_MIN_RESTARTS, EVIDENCE_NOTE,
};
