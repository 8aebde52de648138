use serde::{Deserialize, Serialize};

use super::DiscretizationError;

/// Uniform voxel lattice on the rescaled unit cube `[0,1]^n`.
///
/// Interior voxels carry multi-indices `{0..N-1}^n` (0-based), flattened with
/// axis 0 varying fastest. The ghost layer is implicit: it never stores state
/// and every lookup past the last interior voxel yields `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    dimension: usize,
    per_axis: usize,
    density: f64,
}

impl Lattice {
    /// `dimension` in 1..=3, `per_axis = N >= 1`, per-axis density scale `w > 0`.
    pub fn new(dimension: usize, per_axis: usize, density: f64) -> Result<Self, DiscretizationError> {
        if !(1..=3).contains(&dimension) {
            return Err(DiscretizationError::InvalidLattice(format!(
                "dimension must be 1, 2 or 3, got {dimension}"
            )));
        }
        if per_axis == 0 {
            return Err(DiscretizationError::InvalidLattice(
                "need at least one voxel per axis".into(),
            ));
        }
        if !(density > 0.0 && density.is_finite()) {
            return Err(DiscretizationError::InvalidLattice(format!(
                "density scale must be positive and finite, got {density}"
            )));
        }
        Ok(Self {
            dimension,
            per_axis,
            density,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Voxels per axis `N`.
    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    /// Per-axis density scale `w`.
    pub fn density(&self) -> f64 {
        self.density
    }

    /// Molecules per unit concentration in one voxel, `w^n`.
    pub fn molecules_per_unit(&self) -> f64 {
        self.density.powi(self.dimension as i32)
    }

    /// Voxel width `h = 1/N`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.per_axis as f64
    }

    /// Voxel volume `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }

    /// Number of interior voxels `N^n`.
    pub fn voxels(&self) -> usize {
        self.per_axis.pow(self.dimension as u32)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.per_axis.pow(axis as u32)
    }

    /// Coordinate of `voxel` along `axis`.
    #[inline]
    pub fn coordinate(&self, voxel: usize, axis: usize) -> usize {
        (voxel / self.stride(axis)) % self.per_axis
    }

    pub fn coordinates(&self, voxel: usize) -> Vec<usize> {
        (0..self.dimension).map(|a| self.coordinate(voxel, a)).collect()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.dimension);
        coords
            .iter()
            .enumerate()
            .map(|(a, &c)| c * self.stride(a))
            .sum()
    }

    /// Interior neighbour along `axis`, or `None` for a ghost voxel.
    #[inline]
    pub fn neighbor(&self, voxel: usize, axis: usize, forward: bool) -> Option<usize> {
        let stride = self.stride(axis);
        let c = (voxel / stride) % self.per_axis;
        if forward {
            (c + 1 < self.per_axis).then(|| voxel + stride)
        } else {
            (c > 0).then(|| voxel - stride)
        }
    }

    /// Lower and upper corner of the cell `prod_a [c_a h, (c_a + 1) h)`.
    pub fn cell_bounds(&self, voxel: usize) -> Vec<(f64, f64)> {
        let h = self.spacing();
        (0..self.dimension)
            .map(|a| {
                let c = self.coordinate(voxel, a) as f64;
                (c * h, (c + 1.0) * h)
            })
            .collect()
    }

    /// Same geometry (dimension and `N`); the density scale may differ.
    pub fn same_geometry(&self, other: &Lattice) -> bool {
        self.dimension == other.dimension && self.per_axis == other.per_axis
    }
}
