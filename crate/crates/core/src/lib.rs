//! Spectral solver and a priori estimate laboratory for the complex
//! Monge-Ampère equation `(ω₀ + i∂∂̄φ)ⁿ = e^F ω₀ⁿ` on flat tori (n = 1, 2).
//!
//! Everything numerical is generic over [`Real`]; the aliases at the bottom
//! fix the scalar to `f64`, which is what the runner uses.

pub mod degenerate;
pub mod error;
pub mod estimate;
pub mod grid;
pub mod herm;
pub mod kahler;
pub mod par;
pub mod runner;
pub mod scalar;
pub mod solver;

pub use error::{Error, IterateDiagnostics, Result};
pub use grid::{
    complex_hessian, integrate, lp_norm, partial_z, partial_zbar, point_eval, ComplexField,
    ComplexMatrixField, GridSpec,
};
pub use kahler::{
    bisectional_lower_bound, covariant_hessian_holo, grad_norm_sq, hermitian_grad_pairing,
    laplacian, make_flat_background, make_perturbed_background, metric_of_potential, trace_w_w0,
    HermitianMetric,
};
pub use scalar::Real;

pub type Field = grid::ScalarField<f64>;
pub type Background = kahler::BackgroundMetric<f64>;
pub type Metric = kahler::MetricField<f64>;
