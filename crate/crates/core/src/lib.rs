//! Spectral enclosures for Schrödinger operators `−y″ + q y` whose potential is
//! a distribution `q = Q′ + τ` with `Q ∈ L²_unif` and `τ ∈ L¹_unif`.
//!
//! * [`grid_fn`]: sampled functions, Stepanov windows, mollifiers, CSV I/O.
//! * [`stepanov`]: representations `(Q, τ)`, uniform norms and the constant `K`.
//! * [`enclosure`]: parabolic eigenvalue regions and sector bounds.
//! * [`quasi_deriv`]: the quasi-derivative ODE system, shooting and the Lagrange identity.
//! * [`form_fem`]: P1 discretization of the sesquilinear form, eigenvalues,
//!   numerical range and resolvent differences.
//! * [`potentials`]: the built-in catalog and potential specifications.
//! * [`cli`]: configuration-driven runs behind the `singspec` binary.

pub mod cli;
pub mod enclosure;
pub mod error;
pub mod form_fem;
pub mod grid_fn;
pub mod potentials;
pub mod quasi_deriv;
pub mod stepanov;

pub use error::{Error, Result};
pub use grid_fn::{Extension, Grid, GridFn, MollifyScheme, C64};
pub use stepanov::{NormReport, Representation};
