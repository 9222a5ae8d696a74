use crate::geometry::VoxelGrid;

use super::hex8::{node_offset, NODES};

/// Periodic voxel mesh: one node per voxel corner, `n^3` nodes in total
/// because opposite faces share nodes.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub n: usize,
    pub elements: Vec<[u32; NODES]>,
}

impl Lattice {
    pub fn new(n: usize) -> Self {
        let idx = |x: usize, y: usize, z: usize| (x % n + n * (y % n + n * (z % n))) as u32;
        let mut elements = Vec::with_capacity(n * n * n);
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let mut nodes = [0u32; NODES];
                    for (a, node) in nodes.iter_mut().enumerate() {
                        let o = node_offset(a);
                        *node = idx(x + o[0], y + o[1], z + o[2]);
                    }
                    elements.push(nodes);
                }
            }
        }
        Self { n, elements }
    }

    pub fn nodes(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Per-element scale: 1 for solid voxels, `ersatz` for void ones.
    pub fn phase_scale(grid: &VoxelGrid, ersatz: f64) -> Vec<f64> {
        grid.occupancy()
            .iter()
            .map(|&s| if s { 1.0 } else { ersatz })
            .collect()
    }
}
