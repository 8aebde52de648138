use super::{DiscretizationError, Lattice};
use crate::Real;

/// Piecewise-constant concentration field, one value per species and interior voxel.
///
/// Values are stored voxel-major: `values[voxel * K + species]`. Ghost values
/// are zero and never stored. Operator outputs reuse this type, so entries
/// may be negative.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcField<T: Real = f64> {
    lattice: Lattice,
    species: usize,
    values: Vec<T>,
}

impl<T: Real> ConcField<T> {
    pub fn zeros(lattice: Lattice, species: usize) -> Self {
        Self {
            lattice,
            species,
            values: vec![T::zero(); lattice.voxels() * species],
        }
    }

    /// Wraps voxel-major values.
    pub fn from_values(lattice: Lattice, species: usize, values: Vec<T>) -> Result<Self, DiscretizationError> {
        if species == 0 || values.len() != lattice.voxels() * species {
            return Err(DiscretizationError::LatticeMismatch);
        }
        Ok(Self {
            lattice,
            species,
            values,
        })
    }

    /// Builds a field from per-species tables `per_species[l][voxel]`.
    pub fn from_species(lattice: Lattice, per_species: &[Vec<T>]) -> Result<Self, DiscretizationError> {
        let k = per_species.len();
        let v = lattice.voxels();
        if k == 0 || per_species.iter().any(|s| s.len() != v) {
            return Err(DiscretizationError::LatticeMismatch);
        }
        let mut values = Vec::with_capacity(k * v);
        for j in 0..v {
            for s in per_species {
                values.push(s[j]);
            }
        }
        Ok(Self {
            lattice,
            species: k,
            values,
        })
    }

    pub fn from_fn(lattice: Lattice, species: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(lattice.voxels() * species);
        for j in 0..lattice.voxels() {
            for l in 0..species {
                values.push(f(l, j));
            }
        }
        Self {
            lattice,
            species,
            values,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn species(&self) -> usize {
        self.species
    }

    #[inline]
    pub fn get(&self, species: usize, voxel: usize) -> T {
        self.values[voxel * self.species + species]
    }

    #[inline]
    pub fn set(&mut self, species: usize, voxel: usize, value: T) {
        self.values[voxel * self.species + species] = value;
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Values of one species in voxel order.
    pub fn species_values(&self, species: usize) -> Vec<T> {
        self.values.iter().skip(species).step_by(self.species).copied().collect()
    }

    /// Same geometry and species count; the density scale may differ.
    pub fn compatible(&self, other: &Self) -> bool {
        self.species == other.species && self.lattice.same_geometry(&other.lattice)
    }

    /// `self - other`.
    pub fn difference(&self, other: &Self) -> Result<Self, DiscretizationError> {
        if !self.compatible(other) {
            return Err(DiscretizationError::LatticeMismatch);
        }
        Ok(Self {
            lattice: self.lattice,
            species: self.species,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Integral of one species, `h^n sum_j u_j^l`.
    pub fn species_mass(&self, species: usize) -> T {
        let s: T = self.values.iter().skip(species).step_by(self.species).copied().sum();
        s * T::lit(self.lattice.cell_volume())
    }

    /// Integral summed over species.
    pub fn total_mass(&self) -> T {
        self.values.iter().copied().sum::<T>() * T::lit(self.lattice.cell_volume())
    }

    pub fn cast<U: Real>(&self) -> ConcField<U> {
        ConcField {
            lattice: self.lattice,
            species: self.species,
            values: self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    /// Same values on a lattice with the same geometry but another density scale.
    pub fn with_lattice(mut self, lattice: Lattice) -> Result<Self, DiscretizationError> {
        if !self.lattice.same_geometry(&lattice) {
            return Err(DiscretizationError::LatticeMismatch);
        }
        self.lattice = lattice;
        Ok(self)
    }
}
