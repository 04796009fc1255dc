//! Birkhoff factorization of matrix loops on the unit circle and its
//! deformation by circle diffeomorphisms.
//!
//! The crate is organized bottom-up:
//!
//! - [`fourier_circle`]: band-limited matrix loops, Cauchy projectors, contour
//!   integrals and winding numbers.
//! - [`birkhoff_solver`]: the normalized factorization `Y+ = Y- G`,
//!   `Y-(inf) = I`, by a Fourier-Galerkin solve.
//! - [`jump_residue`]: the jump density `A`, its coefficients `B_n`, and the
//!   fields `𝒜(x)` and `Ω_m(x)` by series and by quadrature.
//! - [`circle_diffeo`]: circle diffeomorphisms, flows of the real fields that
//!   realize the Virasoro directions `L_m`, and finite-difference Lie
//!   derivatives.
//! - [`isomonodromy`]: the deformation `γ ↦ B(γ)` and residuals of the
//!   universal Schlesinger system and its integrability conditions.
//! - [`fuchsian_bridge`]: the finite-dimensional Schlesinger system and the
//!   moment variables `B_n = Σ t_i^n A_i`.
//!
//! Everything is generic over the real scalar type ([`Real`], implemented for
//! `f32` and `f64`); the `*64` aliases below are what the tests and the CLI use.

pub mod birkhoff_solver;
pub mod circle_diffeo;
pub mod error;
pub mod fourier_circle;
pub mod fuchsian_bridge;
pub mod isomonodromy;
pub mod jump_residue;
pub mod linalg;
pub mod scalar;

pub use birkhoff_solver::{factorize, BirkhoffPair, FactorizeOptions, ScalarReduction};
pub use circle_diffeo::{lie_derivative, Diffeo, TangentField, VirasoroDirection};
pub use error::{Error, Result};
pub use fourier_circle::{CauchySide, Loop, Route};
pub use fuchsian_bridge::{ExponentConvention, FuchsianData};
pub use isomonodromy::{DeformationContext, LieCache, RhsForm};
pub use jump_residue::{CoefficientTable, FieldSource};

pub use linalg::CMat;
pub use scalar::{Linear, Real};

pub use num_complex::Complex;

pub type Complex64 = Complex<f64>;
pub type CMat64 = CMat<f64>;
pub type Loop64 = Loop<f64>;
pub type Loop32 = Loop<f32>;
pub type BirkhoffPair64 = BirkhoffPair<f64>;
pub type CoefficientTable64 = CoefficientTable<f64>;
pub type Diffeo64 = Diffeo<f64>;
pub type DeformationContext64 = DeformationContext<f64>;
pub type FuchsianData64 = FuchsianData<f64>;
