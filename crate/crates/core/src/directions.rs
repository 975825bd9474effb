//! The versioned set of sup-unit test directions used by the witness and
//! derivative suites.

use serde::Deserialize;

use crate::error::{RenormError, Result};
use crate::vectors::{sup_norm, SparseVector};

const DIRECTIONS_V1: &str = include_str!("../data/directions_v1.json");

#[derive(Deserialize)]
struct DirectionFile {
    version: u32,
    directions: Vec<SparseVector>,
}

pub const DIRECTION_SET_VERSION: u32 = 1;

/// The 32 directions: `e_1..e_8`, eight signed coordinate sums and sixteen
/// seeded random vectors on coordinates `0..16`, all with sup norm one.
pub fn direction_set() -> Result<Vec<SparseVector>> {
    let file: DirectionFile = serde_json::from_str(DIRECTIONS_V1)?;
    if file.version != DIRECTION_SET_VERSION {
        return Err(RenormError::Internal(format!(
            "direction set version {} does not match {}",
            file.version, DIRECTION_SET_VERSION
        )));
    }
    if let Some(bad) = file.directions.iter().find(|h| sup_norm(h) != 1.0) {
        return Err(RenormError::Internal(format!("direction {:?} is not sup-unit", bad)));
    }
    Ok(file.directions)
}
