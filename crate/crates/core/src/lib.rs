//! Numerical toolkit for the quasilinear Dirichlet problem
//! `−div(φ(|∇u|)∇u) = λ f(u)` on balls, with `f` a multi-bump nonlinearity and
//! `Φ(t) = ∫₀ᵗ sφ(s) ds` an arbitrary N-function (Δ₂ or not).
//!
//! * [`nfunction`]: `Φ`, `G = tφ(t)`, `G⁻¹`, the conjugate `Φ̃`, Luxemburg norms, Δ₂ checks.
//! * [`nonlinearity`]: validated bump families, truncations `f_k` and primitives `F_k`.
//! * [`grid`]: radial grids with exact `r^{N-1}` weights.
//! * [`energy`]: the discrete truncated energy, its gradient and a box-projected minimizer.
//! * [`radial`]: a shooting oracle on the radial flux identity.

// `!(x > 0.0)` is used deliberately so that NaN falls on the rejecting side
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod grid;
pub mod nfunction;
pub mod nonlinearity;
pub mod numerics;
pub mod radial;

pub use energy::{
    clip_monotonicity_check, energy_gradient, energy_value, minimize, minimize_multistart,
    plateau_guess, EnergyError, EnergyProblem, MinimizeOptions, MinimizeResult, MultistartResult,
    Preconditioner, StopReason,
};
pub use grid::{GridError, GridFunction, RadialGrid};
pub use nfunction::{
    delta2_index, delta2_index_with, luxemburg_norm, Delta2Options, Delta2Report, NFunctionError,
    NFunctionKind, NFunctionSpec, PhiHypotheses,
};
pub use nonlinearity::{
    default_bump_builder, validate, BumpNonlinearity, Forcing, NonlinearityError,
    PiecewisePolynomial, Polynomial, TruncatedF, Violation,
};
pub use radial::{
    find_branches, integral_identity_residual, scan_boundary, shoot, shoot_on, verify_claims,
    BranchScan, BranchSolution, Claims, RadialError, Root, RootScan, ShootOptions, ShootResult,
};
