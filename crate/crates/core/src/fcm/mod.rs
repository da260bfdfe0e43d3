//! Finite cell discretization.

pub mod assembly;
pub mod basis;
pub mod boundary;
pub mod gauss;
pub mod grid;
pub mod material;
pub mod quadrature;
pub mod surface;

pub use basis::{shape_1d, CellShape, MAX_DEGREE};
pub use grid::{FcmGrid, Physics};
pub use material::{von_mises, Material};
pub use quadrature::{alpha, alpha_of, integration_leaves, Quadrature, QuadratureLedger};
