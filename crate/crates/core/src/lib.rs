//! Closed moment equations for Gaussian generalized master equations.
//!
//! A generalized master equation (GME) that is quadratic in the canonical
//! operators maps a Gaussian operator `μ = e^{-ξ} ν` onto a Gaussian operator.
//! The state is carried by a complex symmetric covariance matrix `σ`, a complex
//! first-moment vector `d` and the complex log-normalization `ξ`; `σ` obeys a
//! matrix Riccati equation.
//!
//! On top of the moment engine this crate provides:
//!
//! * [`metrology`]: overlaps and fidelities of environment states, joint and
//!   environment-only quantum Fisher information, error-probability bounds;
//! * [`fcs`]: full counting statistics from tilted master equations
//!   (SCGF, cumulants, count distributions, thermodynamic uncertainty
//!   relations);
//! * [`replica`]: Bargmann invariants and the QFI approximant series for
//!   inefficiently monitored systems;
//! * [`oracle`]: a brute-force truncated Fock-space evolution used to validate
//!   everything above.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the command-line runner live in the companion `gaussgme` crate.
//!
//! Quadratures are ordered `(x₁, p₁, …, xₙ, pₙ)` and the vacuum covariance
//! matrix is the identity.

#![no_std]
#![warn(rust_2018_idioms, unused_qualifications)]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod fcs;
pub mod generator;
pub mod linalg;
pub mod metrology;
pub mod model;
pub mod oracle;
pub mod replica;

pub use dynamics::{
    evolve, evolve_to, rhs, steady_state, steady_state_from, GaussianMomentState, IntegratorConfig,
    SteadyState, SteadyStateOptions, Trajectory,
};
pub use error::{Error, Result};
pub use generator::{
    coefficients_from_generator, CountingSpec, DiffusiveSpec, GeneratorSpec, MomentCoefficients,
};
pub use fcs::{CountDistribution, CumulantReport, TurPoint, TurRow};
pub use metrology::{FdConfig, QfiSeries, Stencil};
pub use model::{opo_model, ModelPoint, QuadraticModel, SymplecticForm};
pub use replica::{ReplicaAssignment, ReplicaPlan, ReplicaSettings};

/// Complex double.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dense real matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;
/// Dense real vector.
pub type RVector = nalgebra::DVector<f64>;
