//! Microstructure geometry: the conditioning-to-voxel generator, voxel grids
//! and the retrieval library.

mod grid;
mod gyroid;
mod seeds;

pub use grid::{VoxelGrid, MIN_RESOLUTION, VOXEL_MAGIC, VOXEL_VERSION};
pub use gyroid::{
    generate, ConditioningVector, GyroidParams, ANISOTROPY_RANGE, CONDITIONING_DIM,
    GENERATOR_VERSION, MAX_CELLS,
};
pub use seeds::{
    lattice_points, predicted_error, retrieve_seeds, SeedEntry, SeedLibrary, SeedProvenance,
    REFERENCE_POISSON,
};

pub fn volume_fraction(grid: &VoxelGrid) -> f64 {
    grid.volume_fraction()
}

pub fn connectivity_check(grid: &VoxelGrid) -> bool {
    grid.is_connected()
}
