//! Lagrange interpolation on arbitrary tetrahedra: shape classification,
//! quality measures, nodal interpolation, Sobolev seminorms, difference
//! quotients and the numerical experiments around them.

pub mod error;
pub mod expr;
pub mod field;
pub mod geom;
pub mod interp;
pub mod lattice;
pub mod poly;
pub mod quad;
pub mod verify;

pub use error::{Error, Result};
pub use nalgebra;
