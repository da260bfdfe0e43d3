//! Finite-cell simulation on flawed triangle-facet geometry.

pub mod bvh;
pub mod error;
pub mod fcm;
pub mod flaws;
pub mod geom;
pub mod mesh_io;
pub mod pmc;
pub mod post;
pub mod problem;
pub mod spacetree;
pub mod solver;
pub mod sparse;
pub mod studies;
pub mod vtk;

pub use error::{Error, Result};
pub use geom::{Aabb, Point, Triangle, Vector};
