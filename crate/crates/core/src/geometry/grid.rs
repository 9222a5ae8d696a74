use std::collections::VecDeque;
use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const VOXEL_MAGIC: &[u8; 4] = b"VOXG";
pub const VOXEL_VERSION: u32 = 1;
pub const MIN_RESOLUTION: usize = 4;

/// Periodic n x n x n occupancy field; `true` is solid base material.
/// Linear index is `x + n * (y + n * z)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VoxelGrid {
    n: usize,
    occupancy: Vec<bool>,
}

impl std::fmt::Debug for VoxelGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VoxelGrid")
            .field("n", &self.n)
            .field("solid", &self.solid_count())
            .finish()
    }
}

impl VoxelGrid {
    pub fn from_fn(n: usize, mut solid: impl FnMut(usize, usize, usize) -> bool) -> Self {
        assert!(
            n >= MIN_RESOLUTION,
            "resolution must be at least {MIN_RESOLUTION}"
        );
        let mut occupancy = Vec::with_capacity(n * n * n);
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    occupancy.push(solid(x, y, z));
                }
            }
        }
        Self { n, occupancy }
    }

    pub fn from_occupancy(n: usize, occupancy: Vec<bool>) -> Result<Self> {
        if n < MIN_RESOLUTION {
            return Err(Error::VoxelFormat(format!(
                "resolution {n} < {MIN_RESOLUTION}"
            )));
        }
        if occupancy.len() != n * n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n * n,
                actual: occupancy.len(),
            });
        }
        Ok(Self { n, occupancy })
    }

    pub fn solid(n: usize) -> Self {
        Self::from_fn(n, |_, _, _| true)
    }

    pub fn void(n: usize) -> Self {
        Self::from_fn(n, |_, _, _| false)
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.n * (y + self.n * z)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.occupancy[self.index(x, y, z)]
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn solid_count(&self) -> usize {
        self.occupancy.iter().filter(|&&s| s).count()
    }

    pub fn volume_fraction(&self) -> f64 {
        self.solid_count() as f64 / self.occupancy.len() as f64
    }

    /// True iff the solid phase is one 6-connected component with periodic
    /// wraparound. A grid without solid voxels is not connected.
    pub fn is_connected(&self) -> bool {
        let total = self.solid_count();
        let Some(start) = self.occupancy.iter().position(|&s| s) else {
            return false;
        };
        let n = self.n;
        let mut seen = vec![false; self.occupancy.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut reached = 1;
        while let Some(idx) = queue.pop_front() {
            let (x, y, z) = (idx % n, (idx / n) % n, idx / (n * n));
            let neighbours = [
                self.index((x + 1) % n, y, z),
                self.index((x + n - 1) % n, y, z),
                self.index(x, (y + 1) % n, z),
                self.index(x, (y + n - 1) % n, z),
                self.index(x, y, (z + 1) % n),
                self.index(x, y, (z + n - 1) % n),
            ];
            for nb in neighbours {
                if self.occupancy[nb] && !seen[nb] {
                    seen[nb] = true;
                    reached += 1;
                    queue.push_back(nb);
                }
            }
        }
        reached == total
    }

    /// Writes the 16-byte header followed by the bit-packed occupancy.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut header = [0u8; 16];
        header[..4].copy_from_slice(VOXEL_MAGIC);
        header[4..8].copy_from_slice(&VOXEL_VERSION.to_le_bytes());
        header[8..12].copy_from_slice(&(self.n as u32).to_le_bytes());
        w.write_all(&header)?;
        let mut bytes = vec![0u8; self.occupancy.len().div_ceil(8)];
        for (i, _) in self.occupancy.iter().enumerate().filter(|(_, &s)| s) {
            bytes[i / 8] |= 1 << (i % 8);
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..4] != VOXEL_MAGIC {
            return Err(Error::VoxelFormat("bad magic".into()));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != VOXEL_VERSION {
            return Err(Error::VoxelFormat(format!("unsupported version {version}")));
        }
        let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        if !(MIN_RESOLUTION..=1024).contains(&n) {
            return Err(Error::VoxelFormat(format!("unsupported resolution {n}")));
        }
        let count = n * n * n;
        let mut bytes = vec![0u8; count.div_ceil(8)];
        r.read_exact(&mut bytes)?;
        let occupancy = (0..count)
            .map(|i| bytes[i / 8] >> (i % 8) & 1 == 1)
            .collect();
        Self::from_occupancy(n, occupancy)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.len().div_ceil(8));
        self.write_to(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volume_fractions() {
        assert_eq!(VoxelGrid::solid(4).volume_fraction(), 1.0);
        assert_eq!(VoxelGrid::void(4).volume_fraction(), 0.0);
        let half = VoxelGrid::from_fn(6, |x, _, _| x < 3);
        assert_eq!(half.volume_fraction(), 0.5);
    }

    #[test]
    fn connectivity_cases() {
        assert!(VoxelGrid::solid(4).is_connected());
        assert!(!VoxelGrid::void(4).is_connected());

        // two 2x2x2 cubes separated by a void gap in every direction
        let two = VoxelGrid::from_fn(8, |x, y, z| {
            let a = x < 2 && y < 2 && z < 2;
            let b = (4..6).contains(&x) && (4..6).contains(&y) && (4..6).contains(&z);
            a || b
        });
        assert!(!two.is_connected());

        // a single column along z through (1, 2): every voxel reaches the
        // next and z = 3 wraps to z = 0
        let column = VoxelGrid::from_fn(4, |x, y, _| x == 1 && y == 2);
        assert!(column.is_connected());

        // two cubes touching only across the periodic x face
        let wrap = VoxelGrid::from_fn(8, |x, y, z| (x == 0 || x == 7) && y < 2 && z < 2);
        assert!(wrap.is_connected());
    }

    #[test]
    fn file_round_trip() {
        let grid = VoxelGrid::from_fn(5, |x, y, z| (x * 7 + y * 3 + z) % 4 == 0);
        let bytes = grid.to_bytes();
        assert_eq!(&bytes[..4], b"VOXG");
        assert_eq!(bytes.len(), 16 + 125usize.div_ceil(8));
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 5);
        let back = VoxelGrid::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, grid);
    }

    #[test]
    fn bit_order_is_x_fastest_little_endian() {
        let grid = VoxelGrid::from_fn(4, |x, y, z| {
            (x, y, z) == (1, 0, 0) || (x, y, z) == (0, 2, 0)
        });
        let bytes = grid.to_bytes();
        assert_eq!(bytes[16], 0b0000_0010);
        assert_eq!(bytes[17], 0b0000_0001);
    }

    #[test]
    fn rejects_bad_header() {
        let mut bytes = VoxelGrid::solid(4).to_bytes();
        bytes[0] = b'X';
        assert!(VoxelGrid::read_from(bytes.as_slice()).is_err());
    }
}
