use serde::{Deserialize, Serialize};

use super::quadrature;
use super::{DiscretizationError, Lattice};
use crate::network::{field_region_index, FieldShape, ReactionNetwork, SpatialField};
use crate::Real;

/// Coefficient used on faces between the last interior voxel and the ghost layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhostCoefficient {
    /// `D_{N+1} := D_N`.
    #[default]
    Clamp,
    /// `D_{N+1} := D_{N-1}` (reflection about the boundary voxel); falls back
    /// to `Clamp` when `N = 1`.
    Mirror,
}

/// Mean of `shape` over the axis-aligned box `bounds`.
pub(crate) fn box_average(shape: &FieldShape, bounds: &[(f64, f64)]) -> f64 {
    match shape {
        FieldShape::Constant { value } => *value,
        FieldShape::Piecewise {
            breakpoints,
            values,
        } => {
            // per axis: (region index, overlap fraction)
            let per_axis: Vec<Vec<(usize, f64)>> = breakpoints
                .iter()
                .zip(bounds)
                .map(|(cuts, &(lo, hi))| {
                    let width = hi - lo;
                    let first = field_region_index(cuts, lo);
                    let mut out = Vec::new();
                    let mut r = first;
                    loop {
                        let r_lo = if r == 0 { 0.0 } else { cuts[r - 1] };
                        let r_hi = if r == cuts.len() { 1.0 } else { cuts[r] };
                        let overlap = hi.min(r_hi) - lo.max(r_lo);
                        if overlap > 0.0 {
                            out.push((r, overlap / width));
                        }
                        if r == cuts.len() || r_hi >= hi {
                            break;
                        }
                        r += 1;
                    }
                    out
                })
                .collect();
            let mut total = 0.0;
            let mut pick = vec![0usize; per_axis.len()];
            'outer: loop {
                let mut flat = 0;
                let mut stride = 1;
                let mut weight = 1.0;
                for (a, choice) in pick.iter().enumerate() {
                    let (r, frac) = per_axis[a][*choice];
                    flat += r * stride;
                    stride *= breakpoints[a].len() + 1;
                    weight *= frac;
                }
                total += weight * values[flat];
                for a in 0..pick.len() {
                    pick[a] += 1;
                    if pick[a] < per_axis[a].len() {
                        continue 'outer;
                    }
                    pick[a] = 0;
                }
                break;
            }
            total
        }
        FieldShape::Polynomial { axis, coefficients } => {
            let (lo, hi) = bounds[*axis];
            quadrature::average(|x| crate::network::horner_eval(coefficients, x), lo, hi)
        }
        FieldShape::Sine {
            offset,
            amplitude,
            frequency,
            phase,
        } => {
            let mut prod = 1.0;
            for (a, &f) in frequency.iter().enumerate() {
                let p = phase.get(a).copied().unwrap_or(0.0);
                let (lo, hi) = bounds[a];
                prod *= quadrature::average(|x| (std::f64::consts::PI * f * x + p).sin(), lo, hi);
            }
            offset + amplitude * prod
        }
        FieldShape::Combination { terms } => terms
            .iter()
            .map(|t| t.weight * box_average(&t.shape, bounds))
            .sum(),
    }
}

/// Exact (or quadrature, for closed forms) mean of `field` over every interior cell.
pub fn cell_average(field: &SpatialField, lattice: &Lattice) -> Result<Vec<f64>, DiscretizationError> {
    if field.dimension() != lattice.dimension() {
        return Err(DiscretizationError::DimensionMismatch {
            expected: lattice.dimension(),
            found: field.dimension(),
        });
    }
    Ok((0..lattice.voxels())
        .map(|j| box_average(field.shape(), &lattice.cell_bounds(j)))
        .collect())
}

/// Per-voxel diffusion coefficients and reaction rates shared by both scales.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelCoefficients<T: Real = f64> {
    lattice: Lattice,
    species: usize,
    /// `diffusion[l * V + j]`
    diffusion: Vec<T>,
    /// `rates[(j * K + to) * K + from]`, zero on the diagonal.
    rates: Vec<T>,
    ghost: GhostCoefficient,
}

impl<T: Real> VoxelCoefficients<T> {
    /// Cell averages of every coefficient field of `net`.
    pub fn from_network(
        net: &ReactionNetwork,
        lattice: Lattice,
        ghost: GhostCoefficient,
    ) -> Result<Self, DiscretizationError> {
        let k = net.species();
        let v = lattice.voxels();
        let mut diffusion = Vec::with_capacity(k * v);
        for l in 0..k {
            diffusion.extend(cell_average(net.diffusion(l), &lattice)?.into_iter().map(T::lit));
        }
        let mut rates = vec![T::zero(); v * k * k];
        for to in 0..k {
            for from in 0..k {
                let f = net.rate(from, to);
                if to == from || f.is_identically_zero() {
                    continue;
                }
                for (j, value) in cell_average(f, &lattice)?.into_iter().enumerate() {
                    rates[(j * k + to) * k + from] = T::lit(value);
                }
            }
        }
        Ok(Self {
            lattice,
            species: k,
            diffusion,
            rates,
            ghost,
        })
    }

    /// Builds coefficients directly from tables. `diffusion[l][j]`,
    /// `rates[j][to][from]`. Only non-negativity and shapes are checked, so
    /// degenerate tables such as `D = 0` are allowed here.
    pub fn from_tables(
        lattice: Lattice,
        diffusion: Vec<Vec<T>>,
        rates: Vec<Vec<Vec<T>>>,
        ghost: GhostCoefficient,
    ) -> Result<Self, DiscretizationError> {
        let k = diffusion.len();
        let v = lattice.voxels();
        let bad = |msg: String| Err(DiscretizationError::InvalidCoefficients(msg));
        if k == 0 {
            return bad("no species".into());
        }
        if diffusion.iter().any(|d| d.len() != v) {
            return bad(format!("diffusion tables need {v} voxels"));
        }
        if rates.len() != v || rates.iter().any(|m| m.len() != k || m.iter().any(|r| r.len() != k)) {
            return bad(format!("rate tables need {v} voxels of {k}x{k} matrices"));
        }
        let mut flat_rates = vec![T::zero(); v * k * k];
        for (j, m) in rates.iter().enumerate() {
            for to in 0..k {
                for from in 0..k {
                    let r = m[to][from];
                    if !(r >= T::zero() && r.is_finite()) {
                        return bad(format!("rate {from}->{to} at voxel {j} is {r}"));
                    }
                    if to != from {
                        flat_rates[(j * k + to) * k + from] = r;
                    }
                }
            }
        }
        let flat_diff: Vec<T> = diffusion.into_iter().flatten().collect();
        if flat_diff.iter().any(|d| !(*d >= T::zero() && d.is_finite())) {
            return bad("diffusion coefficients must be finite and non-negative".into());
        }
        Ok(Self {
            lattice,
            species: k,
            diffusion: flat_diff,
            rates: flat_rates,
            ghost,
        })
    }

    /// Spatially constant coefficients: `diffusion[l]`, `rates[to][from]`.
    pub fn uniform(
        lattice: Lattice,
        diffusion: &[T],
        rates: &[Vec<T>],
        ghost: GhostCoefficient,
    ) -> Result<Self, DiscretizationError> {
        let v = lattice.voxels();
        Self::from_tables(
            lattice,
            diffusion.iter().map(|&d| vec![d; v]).collect(),
            vec![rates.to_vec(); v],
            ghost,
        )
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn species(&self) -> usize {
        self.species
    }

    pub fn ghost(&self) -> GhostCoefficient {
        self.ghost
    }

    #[inline]
    pub fn diffusion(&self, species: usize, voxel: usize) -> T {
        self.diffusion[species * self.lattice.voxels() + voxel]
    }

    /// Rate of `from -> to` inside `voxel` (`lambda_j^{to,from}`).
    #[inline]
    pub fn rate(&self, voxel: usize, from: usize, to: usize) -> T {
        self.rates[(voxel * self.species + to) * self.species + from]
    }

    /// Total conversion rate out of `from` inside `voxel`.
    pub fn outflow_rate(&self, voxel: usize, from: usize) -> T {
        (0..self.species).map(|to| self.rate(voxel, from, to)).sum()
    }

    /// Coefficient on the face between `voxel` and its neighbour along `axis`.
    ///
    /// The face between `j` and `j + e_axis` carries `D_{j + e_axis}`; past
    /// the last interior voxel the ghost extension applies.
    #[inline]
    pub fn face_coefficient(&self, species: usize, voxel: usize, axis: usize, forward: bool) -> T {
        if !forward {
            return self.diffusion(species, voxel);
        }
        match self.lattice.neighbor(voxel, axis, true) {
            Some(next) => self.diffusion(species, next),
            None => match self.ghost {
                GhostCoefficient::Clamp => self.diffusion(species, voxel),
                GhostCoefficient::Mirror => {
                    let back = self.lattice.neighbor(voxel, axis, false).unwrap_or(voxel);
                    self.diffusion(species, back)
                }
            },
        }
    }

    /// `max_{l,j} D_j^l`.
    pub fn diffusion_sup(&self) -> T {
        self.diffusion.iter().fold(T::zero(), |m, &d| m.max(d))
    }

    pub fn diffusion_inf(&self) -> T {
        self.diffusion.iter().fold(T::infinity(), |m, &d| m.min(d))
    }

    /// `max_{j, to != from} lambda_j^{to,from}`.
    pub fn rate_sup(&self) -> T {
        self.rates.iter().fold(T::zero(), |m, &r| m.max(r))
    }

    /// Same coefficients with every rate set to zero.
    pub fn without_reactions(&self) -> Self {
        Self {
            rates: vec![T::zero(); self.rates.len()],
            ..self.clone()
        }
    }

    /// Same coefficients with every diffusion coefficient set to zero.
    pub fn without_diffusion(&self) -> Self {
        Self {
            diffusion: vec![T::zero(); self.diffusion.len()],
            ..self.clone()
        }
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> VoxelCoefficients<U> {
        VoxelCoefficients {
            lattice: self.lattice,
            species: self.species,
            diffusion: self.diffusion.iter().map(|d| U::lit(d.as_f64())).collect(),
            rates: self.rates.iter().map(|d| U::lit(d.as_f64())).collect(),
            ghost: self.ghost,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{NetworkCandidate, Smoothness};

    fn lat(n: usize) -> Lattice {
        Lattice::new(1, n, 1.0).unwrap()
    }

    #[test]
    fn constant_field_average() {
        let f = SpatialField::constant(1, 0.5);
        assert_eq!(cell_average(&f, &lat(4)).unwrap(), vec![0.5; 4]);
    }

    #[test]
    fn aligned_step_average() {
        let f = SpatialField::steps_1d(vec![0.5], vec![1.0, 0.0]).unwrap();
        assert_eq!(cell_average(&f, &lat(4)).unwrap(), vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn misaligned_step_is_measure_weighted() {
        let f = SpatialField::steps_1d(vec![0.3], vec![1.0, 0.0]).unwrap();
        let avg = cell_average(&f, &lat(2)).unwrap();
        assert!((avg[0] - 0.6).abs() < 1e-15);
        assert_eq!(avg[1], 0.0);
    }

    #[test]
    fn linear_field_average_matches_integral() {
        // int_0^{1/2} x dx / (1/2) = 1/4, int_{1/2}^1 x dx / (1/2) = 3/4
        let f = SpatialField::new(
            1,
            FieldShape::Polynomial {
                axis: 0,
                coefficients: vec![0.0, 1.0],
            },
            Smoothness::C1,
        )
        .unwrap();
        let avg = cell_average(&f, &lat(2)).unwrap();
        assert!((avg[0] - 0.25).abs() < 1e-15);
        assert!((avg[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn separable_sine_2d_matches_closed_form() {
        let f = SpatialField::new(
            2,
            FieldShape::Sine {
                offset: 1.0,
                amplitude: 2.0,
                frequency: vec![1.0, 3.0],
                phase: vec![0.0, 0.5],
            },
            Smoothness::C1,
        )
        .unwrap();
        let lattice = Lattice::new(2, 5, 1.0).unwrap();
        let avg = cell_average(&f, &lattice).unwrap();
        let pi = std::f64::consts::PI;
        let mean_sin = |k: f64, p: f64, a: f64, b: f64| ((k * a + p).cos() - (k * b + p).cos()) / (k * (b - a));
        for j in 0..lattice.voxels() {
            let b = lattice.cell_bounds(j);
            let exact = 1.0 + 2.0 * mean_sin(pi, 0.0, b[0].0, b[0].1) * mean_sin(3.0 * pi, 0.5, b[1].0, b[1].1);
            assert!((avg[j] - exact).abs() <= 1e-10 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn piecewise_2d_partial_overlap() {
        let f = SpatialField::new(
            2,
            FieldShape::Piecewise {
                breakpoints: vec![vec![0.25], vec![]],
                values: vec![4.0, 0.0],
            },
            crate::network::Smoothness::LInfinity,
        )
        .unwrap();
        let lattice = Lattice::new(2, 2, 1.0).unwrap();
        let avg = cell_average(&f, &lattice).unwrap();
        assert_eq!(avg, vec![2.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let f = SpatialField::constant(2, 1.0);
        assert!(matches!(
            cell_average(&f, &lat(2)),
            Err(DiscretizationError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn voxel_coefficients_respect_field_bounds() {
        let d = SpatialField::new(
            1,
            FieldShape::Sine {
                offset: 0.5,
                amplitude: 0.25,
                frequency: vec![2.0],
                phase: vec![],
            },
            Smoothness::C1,
        )
        .unwrap();
        let net = NetworkCandidate::new(1, vec![d.clone(), d])
            .with_rate(0, 1, SpatialField::steps_1d(vec![0.37], vec![1.0, 0.2]).unwrap())
            .validate()
            .unwrap();
        for n in [1, 3, 8, 33] {
            let c: VoxelCoefficients = VoxelCoefficients::from_network(&net, lat(n), GhostCoefficient::Clamp).unwrap();
            for j in 0..n {
                for l in 0..2 {
                    let v = c.diffusion(l, j);
                    assert!(v >= net.d_star() - 1e-15 && v <= net.d_upper() + 1e-15);
                }
                let r = c.rate(j, 0, 1);
                assert!((0.2 - 1e-15..=1.0 + 1e-15).contains(&r));
                assert_eq!(c.rate(j, 1, 0), 0.0);
            }
        }
    }

    #[test]
    fn ghost_face_coefficients() {
        let lattice = lat(3);
        let d = vec![vec![1.0, 2.0, 3.0]];
        let rates = vec![vec![vec![0.0]]; 3];
        let clamp = VoxelCoefficients::from_tables(lattice, d.clone(), rates.clone(), GhostCoefficient::Clamp).unwrap();
        let mirror = VoxelCoefficients::from_tables(lattice, d, rates, GhostCoefficient::Mirror).unwrap();
        assert_eq!(clamp.face_coefficient(0, 0, 0, false), 1.0);
        assert_eq!(clamp.face_coefficient(0, 0, 0, true), 2.0);
        assert_eq!(clamp.face_coefficient(0, 2, 0, true), 3.0);
        assert_eq!(mirror.face_coefficient(0, 2, 0, true), 2.0);
    }

    #[test]
    fn tables_reject_negative_rates() {
        let lattice = lat(1);
        let r = VoxelCoefficients::<f64>::from_tables(
            lattice,
            vec![vec![1.0], vec![1.0]],
            vec![vec![vec![0.0, -1.0], vec![0.0, 0.0]]],
            GhostCoefficient::Clamp,
        );
        assert!(r.is_err());
    }
}
