//! Reproducible parameter studies and their fixtures.

pub mod cube;
pub mod fixtures;
pub mod plate;

pub use cube::{cube_gap_study, CubeRow, CubeStudy, CubeStudyConfig};
pub use plate::{plate_study, EnergyRow, PlateRow, PlateStudy, PlateStudyConfig};

use crate::error::{Error, Result};

fn check_nonempty(name: &str, len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::Config(format!("{name} must not be empty")));
    }
    Ok(())
}
