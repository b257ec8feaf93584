//! Exact exterior calculus over polynomial coefficients, analysis of tangent
//! distributions (derived flags, Cauchy characteristics), verification of
//! generalized Engel structures, canonical constructions (Cartan prolongation,
//! normal forms), and numerical Moser-flow stability checks.
//!
//! All symbolic objects live on a named coordinate [`Chart`] and carry exact
//! rational polynomial coefficients, so algebraic verdicts are exact.
//! Floating point enters only in the flow-integration layer.

pub mod chart;
pub mod constructions;
pub mod distribution;
pub mod engel;
pub mod error;
pub mod exterior;
pub mod linalg;
pub mod moser;
pub mod numeric;
pub mod poly;
pub mod sample;

pub use chart::{Chart, ChartRef, RationalPoint};
pub use distribution::{Distribution, GrowthVector, PfaffianSystem};
pub use engel::{FlagReport, PfaffianReport, Verdict};
pub use error::{Error, Result};
pub use exterior::{
    exterior_derivative, interior_product, lie_bracket, wedge, wedge_all, wedge_power, ExtForm,
    VectorField,
};
pub use moser::{FlowVerification, MoserSolveResult, OneParamFamily};
pub use poly::PolyScalar;

pub type Rational = num_rational::BigRational;
