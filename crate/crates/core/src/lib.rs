//! Quantitative analysis of nonsingular three-dimensional flows.
//!
//! The crate evaluates, for concrete flows on flat tori and boxed trapping
//! regions, the objects that organize dissipative dynamics in 3D:
//!
//! - trajectories, variational flow and Liouville determinants ([`flowcore`]);
//! - the linear Poincaré cocycle on normal planes ([`linpoincare`]);
//! - periodic-orbit location, Floquet multipliers and classification
//!   ([`periodic`]);
//! - dominated-splitting / contraction / angle / hyperbolicity certificates
//!   ([`splitting`]);
//! - dissipative-region assembly, Birkhoff averages, weak-basin and
//!   trapped-set Monte Carlo measure estimates ([`dissipative`]);
//! - exact cocycle perturbation constructions and their spectral identities
//!   ([`surgery`]).

pub mod dissipative;
pub mod error;
pub mod expr;
pub mod flowcore;
pub mod linalg;
pub mod linpoincare;
pub mod periodic;
pub mod region;
pub mod splitting;
pub mod surgery;

pub use error::{FlowError, Result};
pub use flowcore::{DomainSpec, VectorFieldSpec};
