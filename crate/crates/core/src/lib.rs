//! A symbolic tensor calculus engine for general relativity.
//!
//! Tensors are abstract objects: one registered object holds lazily
//! materialized component arrays per (index configuration, coordinate system)
//! pair, and every representation is derived from the others by metric
//! contraction and Jacobian transformation. On top of that sit a contraction
//! formula language, automatic curvature pipelines (Christoffel, Riemann,
//! Ricci, Einstein), geodesic equation derivation, and JSON session
//! persistence.

pub mod display;
pub mod error;
pub mod formula;
pub mod geodesic;
pub mod expr;
pub mod curvature;
pub mod persist;
pub mod session;
pub mod transform;

pub use error::{Error, Result};
pub use expr::{Assumptions, Expr, Predicate, Relation};
pub use session::{IndexConfig, Role, Session};
