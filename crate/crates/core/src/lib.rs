//! Numerical laboratory for the distributional Jacobian determinant of the
//! nonlinear complex gradient `V_β(Du) = |Du|^β (u_{x₁}, −u_{x₂})` of planar
//! p-harmonic and infinity-harmonic functions.

pub mod analytic;
pub mod banded;
pub mod bump;
pub mod error;
pub mod estimates;
pub mod extremal;
pub mod field;
pub mod identities;
pub mod jacobian;
pub mod poly;
pub mod quadrature;
pub mod solver;

pub use analytic::{analytic_eval, AnalyticSolution};
pub use bump::{bump_derivatives, BumpJet, BumpProfile, TestBump};
pub use error::{Error, Result};
pub use estimates::{
    affine_fit, cone_comparison_bound, flatness_ratio, gradient_estimate_ratio, growth_exponent,
    jacobian_mass_bound, l4_bound_ratio, liouville_residual, Affine, EstimateId, EstimateReport,
    LiouvillePoint, Rescaled,
};
pub use extremal::{
    annulus_log_energy, derivatives_g, derivatives_h, distortion_sup, inverse_derivatives,
    inverse_f, k_constant, map_h, sharpness_constants, AnnulusEnergy, AnnulusSample,
    DistortionReport, ExtremalParams, Ray, Sharpness,
};
pub use field::{
    gradient, gradient4, hessian, integrate, integrate_nodes, GridSpec, Interpolant, Jet,
    PlanarFunction, Point, ScalarField, SecondOrder, VectorField,
};
pub use identities::{
    annulus_samples, check_div_structure, check_hessian_identity, check_log_gradient_identity,
    check_pharmonic_formula, check_structural_identity, check_u2_formula, check_weak_identity,
    uniform_samples, IdentityId, IdentityResidual,
};
pub use jacobian::{
    check_bounds, complex_gradient, pointwise_det, pointwise_pairing, weak_convergence_pairings,
    weak_det_pairing, BoundVerdict, ComplexGradientField, ConvergenceSequence, DetSource,
    PairingMode, PairingOptions, PairingReport, PointwiseDet,
};
pub use poly::PolyField;
pub use solver::{
    infinity_approx, solve_from, solve_pharmonic, solve_regularized, SolveConfig, SolveOutput,
    SolveReport, StopReason,
};
