//! Non-Archimedean functionals of filtrations on Fano data and the convex
//! problems attached to them.
//!
//! Exact data (polytopes, piecewise-linear transforms, filtration values) is
//! generic over a [`scalar::Field`]; integrals, functionals and solvers are
//! generic over a [`scalar::Real`]. The aliases below fix the usual choice of
//! arbitrary-precision rationals and `f64`.

pub mod convergence;
pub mod error;
pub mod expint;
pub mod filtration;
pub mod functionals;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod measure;
pub mod optimize;
pub mod scalar;

pub use error::{Error, Result};
pub use expint::{ExpIntegralResult, ExpIntegrator, Method, PlConcaveFunction};
pub use filtration::{FiltrationLevel, GradedFiltration};
pub use functionals::{LPolicy, NaReport, TiltedBody};
pub use geometry::{AffineForm, Polytope, Simplex};
pub use measure::DhMeasure;
pub use optimize::{NewtonConfig, OptResult};
pub use scalar::{Field, Real};

pub type Rational = num_rational::BigRational;
pub type RationalPolytope = Polytope<Rational>;
pub type RationalSimplex = Simplex<Rational>;
pub type RationalAffineForm = AffineForm<Rational>;
pub type RationalPlFunction = PlConcaveFunction<Rational>;
pub type RationalFiltration = GradedFiltration<Rational>;
pub type DhMeasure64 = DhMeasure<f64, Rational>;
pub type NaReport64 = NaReport<f64>;
pub type OptResult64 = OptResult<f64>;
