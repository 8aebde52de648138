use super::{box_average, ConcField, DiscretizationError, Lattice, VoxelCoefficients};
use crate::linalg::CsrMatrix;
use crate::network::SpatialField;
use crate::Real;

fn check<T: Real>(coef: &VoxelCoefficients<T>, u: &ConcField<T>) -> Result<(), DiscretizationError> {
    if coef.species() != u.species() || !coef.lattice().same_geometry(u.lattice()) {
        return Err(DiscretizationError::LatticeMismatch);
    }
    Ok(())
}

#[inline]
fn diffusion_at<T: Real>(coef: &VoxelCoefficients<T>, u: &ConcField<T>, l: usize, j: usize, n2: T) -> T {
    let lat = coef.lattice();
    let uj = u.get(l, j);
    let mut acc = T::zero();
    for axis in 0..lat.dimension() {
        let d_up = coef.face_coefficient(l, j, axis, true);
        let d_down = coef.face_coefficient(l, j, axis, false);
        let up = lat.neighbor(j, axis, true).map_or(T::zero(), |k| u.get(l, k));
        let down = lat.neighbor(j, axis, false).map_or(T::zero(), |k| u.get(l, k));
        acc += d_up * up - (d_up + d_down) * uj + d_down * down;
    }
    n2 * acc
}

#[inline]
fn reaction_at<T: Real>(coef: &VoxelCoefficients<T>, u: &ConcField<T>, l: usize, j: usize) -> T {
    let mut gain = T::zero();
    let mut loss = T::zero();
    for m in 0..coef.species() {
        if m == l {
            continue;
        }
        gain += coef.rate(j, m, l) * u.get(m, j);
        loss += coef.rate(j, l, m);
    }
    gain - loss * u.get(l, j)
}

/// `L_N u` for every species, summing the three-point stencil over axes, with zero ghosts.
pub fn apply_discrete_diffusion<T: Real>(
    coef: &VoxelCoefficients<T>,
    u: &ConcField<T>,
) -> Result<ConcField<T>, DiscretizationError> {
    check(coef, u)?;
    let n = T::lit(coef.lattice().per_axis() as f64);
    let n2 = n * n;
    Ok(ConcField::from_fn(*u.lattice(), u.species(), |l, j| diffusion_at(coef, u, l, j, n2)))
}

/// `R_N u`: voxel-local conversion between species.
pub fn apply_discrete_reaction<T: Real>(
    coef: &VoxelCoefficients<T>,
    u: &ConcField<T>,
) -> Result<ConcField<T>, DiscretizationError> {
    check(coef, u)?;
    Ok(ConcField::from_fn(*u.lattice(), u.species(), |l, j| reaction_at(coef, u, l, j)))
}

/// `F(u) = L_N u + R_N u`, evaluated with the same arithmetic as the two parts.
pub fn drift<T: Real>(coef: &VoxelCoefficients<T>, u: &ConcField<T>) -> Result<ConcField<T>, DiscretizationError> {
    check(coef, u)?;
    let n = T::lit(coef.lattice().per_axis() as f64);
    let n2 = n * n;
    Ok(ConcField::from_fn(*u.lattice(), u.species(), |l, j| {
        diffusion_at(coef, u, l, j, n2) + reaction_at(coef, u, l, j)
    }))
}

/// `<u, v> = h^n sum_l sum_j u_j^l v_j^l`.
pub fn inner_product<T: Real>(u: &ConcField<T>, v: &ConcField<T>) -> Result<T, DiscretizationError> {
    if !u.compatible(v) {
        return Err(DiscretizationError::LatticeMismatch);
    }
    let s: T = u.values().iter().zip(v.values()).map(|(&a, &b)| a * b).sum();
    Ok(s * T::lit(u.lattice().cell_volume()))
}

pub fn norm<T: Real>(u: &ConcField<T>) -> T {
    let s: T = u.values().iter().map(|&a| a * a).sum();
    (s * T::lit(u.lattice().cell_volume())).sqrt()
}

/// Cell averages of one field per species.
pub fn project_fields<T: Real>(fields: &[SpatialField], lattice: Lattice) -> Result<ConcField<T>, DiscretizationError> {
    for f in fields {
        if f.dimension() != lattice.dimension() {
            return Err(DiscretizationError::DimensionMismatch {
                expected: lattice.dimension(),
                found: f.dimension(),
            });
        }
    }
    if fields.is_empty() {
        return Err(DiscretizationError::LatticeMismatch);
    }
    let bounds: Vec<_> = (0..lattice.voxels()).map(|j| lattice.cell_bounds(j)).collect();
    Ok(ConcField::from_fn(lattice, fields.len(), |l, j| {
        T::lit(box_average(fields[l].shape(), &bounds[j]))
    }))
}

/// Single-species convenience wrapper around [`project_fields`].
pub fn project_field<T: Real>(field: &SpatialField, lattice: Lattice) -> Result<ConcField<T>, DiscretizationError> {
    project_fields(std::slice::from_ref(field), lattice)
}

/// Block average of a field onto a coarser lattice whose `N` divides the source `N`.
pub fn restrict<T: Real>(u: &ConcField<T>, target: Lattice) -> Result<ConcField<T>, DiscretizationError> {
    let src = u.lattice();
    if src.dimension() != target.dimension() {
        return Err(DiscretizationError::DimensionMismatch {
            expected: target.dimension(),
            found: src.dimension(),
        });
    }
    let (fine, coarse) = (src.per_axis(), target.per_axis());
    if fine % coarse != 0 {
        return Err(DiscretizationError::IncompatibleLattices { from: fine, to: coarse });
    }
    let ratio = fine / coarse;
    let k = u.species();
    let mut out = ConcField::zeros(target, k);
    for j in 0..src.voxels() {
        let coarse_index: usize = (0..src.dimension())
            .map(|a| (src.coordinate(j, a) / ratio) * target.stride(a))
            .sum();
        for l in 0..k {
            let v = out.get(l, coarse_index) + u.get(l, j);
            out.set(l, coarse_index, v);
        }
    }
    let scale = T::lit((ratio as f64).powi(src.dimension() as i32)).recip();
    for v in out.values_mut() {
        *v *= scale;
    }
    Ok(out)
}

/// Sparse matrix of `F` acting on voxel-major vectors.
pub fn assemble_generator<T: Real>(coef: &VoxelCoefficients<T>) -> CsrMatrix<T> {
    let lat = coef.lattice();
    let k = coef.species();
    let dim = lat.voxels() * k;
    let n = T::lit(lat.per_axis() as f64);
    let n2 = n * n;
    let mut triplets = Vec::with_capacity(dim * (2 * lat.dimension() + k));
    for j in 0..lat.voxels() {
        for l in 0..k {
            let row = j * k + l;
            let mut diag = T::zero();
            for axis in 0..lat.dimension() {
                let d_up = coef.face_coefficient(l, j, axis, true);
                let d_down = coef.face_coefficient(l, j, axis, false);
                diag -= n2 * (d_up + d_down);
                if let Some(nb) = lat.neighbor(j, axis, true) {
                    triplets.push((row, nb * k + l, n2 * d_up));
                }
                if let Some(nb) = lat.neighbor(j, axis, false) {
                    triplets.push((row, nb * k + l, n2 * d_down));
                }
            }
            for m in 0..k {
                if m != l {
                    let gain = coef.rate(j, m, l);
                    if gain != T::zero() {
                        triplets.push((row, j * k + m, gain));
                    }
                    diag -= coef.rate(j, l, m);
                }
            }
            triplets.push((row, row, diag));
        }
    }
    CsrMatrix::from_triplets(dim, dim, triplets)
}

#[cfg(test)]
mod tests {
    use super::super::GhostCoefficient;
    use super::*;
    use proptest::prelude::*;

    fn lat(n: usize) -> Lattice {
        Lattice::new(1, n, 1.0).unwrap()
    }

    fn coef_1d(d: Vec<f64>, ghost: GhostCoefficient) -> VoxelCoefficients {
        let n = d.len();
        VoxelCoefficients::from_tables(lat(n), vec![d], vec![vec![vec![0.0]]; n], ghost).unwrap()
    }

    #[test]
    fn constant_field_has_zero_interior_diffusion() {
        let c = coef_1d(vec![0.7; 6], GhostCoefficient::Clamp);
        let u = ConcField::from_species(lat(6), &[vec![3.0; 6]]).unwrap();
        let lu = apply_discrete_diffusion(&c, &u).unwrap();
        for j in 1..5 {
            assert!(lu.get(0, j).abs() < 1e-12);
        }
    }

    #[test]
    fn two_voxel_stencil() {
        let c = coef_1d(vec![1.0, 1.0], GhostCoefficient::Clamp);
        let u = ConcField::from_species(lat(2), &[vec![1.0, 1.0]]).unwrap();
        let lu = apply_discrete_diffusion(&c, &u).unwrap();
        assert_eq!(lu.values(), &[-4.0, -4.0]);
    }

    #[test]
    fn heterogeneous_three_voxel_stencil() {
        let c = coef_1d(vec![1.0, 2.0, 3.0], GhostCoefficient::Clamp);
        let u = ConcField::from_species(lat(3), &[vec![1.0, 0.0, 1.0]]).unwrap();
        let lu = apply_discrete_diffusion(&c, &u).unwrap();
        assert_eq!(lu.get(0, 1), 45.0);
    }

    fn reaction_case() -> (VoxelCoefficients, ConcField) {
        // species 0 and 1; rate 1 -> 0 is 2, rate 0 -> 1 is 1
        let rates = vec![vec![0.0, 2.0], vec![1.0, 0.0]];
        let c = VoxelCoefficients::uniform(lat(1), &[0.0, 0.0], &rates, GhostCoefficient::Clamp).unwrap();
        let u = ConcField::from_species(lat(1), &[vec![3.0], vec![1.0]]).unwrap();
        (c, u)
    }

    #[test]
    fn two_species_reaction() {
        let (c, u) = reaction_case();
        let r = apply_discrete_reaction(&c, &u).unwrap();
        assert_eq!(r.values(), &[-1.0, 1.0]);
    }

    #[test]
    fn zero_rates_give_zero_reaction() {
        let c = coef_1d(vec![1.0, 2.0], GhostCoefficient::Clamp);
        let u = ConcField::from_species(lat(2), &[vec![5.0, 1.0]]).unwrap();
        assert_eq!(apply_discrete_reaction(&c, &u).unwrap().values(), &[0.0, 0.0]);
    }

    #[test]
    fn drift_recomposes_diffusion_and_reaction() {
        let n = 3;
        let rates = vec![vec![vec![0.0, 2.0], vec![1.0, 0.0]]; n];
        let c = VoxelCoefficients::from_tables(
            lat(n),
            vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]],
            rates,
            GhostCoefficient::Clamp,
        )
        .unwrap();
        let u = ConcField::from_species(lat(n), &[vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 1.0]]).unwrap();
        let d = apply_discrete_diffusion(&c, &u).unwrap();
        let r = apply_discrete_reaction(&c, &u).unwrap();
        let f = drift(&c, &u).unwrap();
        for i in 0..f.values().len() {
            assert_eq!(f.values()[i], d.values()[i] + r.values()[i]);
        }
        // middle voxel: species 0 has u = (1, 3, 1) -> 9 (3 - 5*3 + 2) = -90; reaction (-3 + 2) = -1
        assert_eq!(f.get(0, 1), -91.0);
        assert_eq!(drift(&c, &ConcField::zeros(lat(n), 2)).unwrap().values(), &[0.0; 6]);
    }

    #[test]
    fn inner_product_examples() {
        let u: ConcField = ConcField::from_species(lat(2), &[vec![1.0, 2.0]]).unwrap();
        let v = ConcField::from_species(lat(2), &[vec![3.0, 4.0]]).unwrap();
        assert_eq!(inner_product(&u, &v).unwrap(), 5.5);
        for n in [1, 5, 17] {
            let one: ConcField = ConcField::from_species(lat(n), &[vec![1.0; n]]).unwrap();
            assert!((inner_product(&one, &one).unwrap() - 1.0).abs() < 1e-14);
        }
        let a = ConcField::from_species(lat(3), &[vec![1.0, 0.0, 0.0]]).unwrap();
        let b = ConcField::from_species(lat(3), &[vec![0.0, 2.0, 5.0]]).unwrap();
        assert_eq!(inner_product(&a, &b).unwrap(), 0.0);
        assert!(matches!(inner_product(&a, &u), Err(DiscretizationError::LatticeMismatch)));
    }

    #[test]
    fn block_average() {
        let u = ConcField::from_species(lat(4), &[vec![1.0, 1.0, 0.0, 0.0]]).unwrap();
        let r = restrict(&u, lat(2)).unwrap();
        assert_eq!(r.values(), &[1.0, 0.0]);
        assert_eq!(restrict(&u, lat(4)).unwrap(), u);
        assert!(matches!(
            restrict(&u, lat(3)),
            Err(DiscretizationError::IncompatibleLattices { from: 4, to: 3 })
        ));
    }

    #[test]
    fn projection_of_constant_field() {
        let f = SpatialField::constant(2, 1.5);
        let lattice = Lattice::new(2, 3, 1.0).unwrap();
        let u: ConcField = project_field(&f, lattice).unwrap();
        assert!(u.values().iter().all(|&v| v == 1.5));
    }

    #[test]
    fn restriction_in_two_dimensions_preserves_mass() {
        let fine = Lattice::new(2, 6, 1.0).unwrap();
        let u = ConcField::from_fn(fine, 2, |l, j| ((j * 7 + l * 3) % 11) as f64);
        for coarse in [1, 2, 3, 6] {
            let r = restrict(&u, Lattice::new(2, coarse, 1.0).unwrap()).unwrap();
            for l in 0..2 {
                assert!((r.species_mass(l) - u.species_mass(l)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn assembled_matrix_matches_drift() {
        let lattice = Lattice::new(2, 4, 1.0).unwrap();
        let v = lattice.voxels();
        let d = (0..3).map(|l| (0..v).map(|j| 0.5 + ((j + l) % 5) as f64).collect()).collect();
        let rates = (0..v)
            .map(|j| {
                (0..3)
                    .map(|to| (0..3).map(|from| if to == from { 0.0 } else { ((j + to * 2 + from) % 4) as f64 }).collect())
                    .collect()
            })
            .collect();
        let c = VoxelCoefficients::from_tables(lattice, d, rates, GhostCoefficient::Mirror).unwrap();
        let u = ConcField::from_fn(lattice, 3, |l, j| ((j * 5 + l) % 7) as f64 - 2.0);
        let f = drift(&c, &u).unwrap();
        let m = assemble_generator(&c);
        let mut y = vec![0.0; u.values().len()];
        m.matvec(u.values(), &mut y);
        for (a, b) in f.values().iter().zip(&y) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    fn random_coefficients(n: usize, dim: usize, k: usize, seed: &[f64]) -> VoxelCoefficients {
        let lattice = Lattice::new(dim, n, 1.0).unwrap();
        let v = lattice.voxels();
        let pick = |i: usize| seed[i % seed.len()];
        let d = (0..k).map(|l| (0..v).map(|j| 0.1 + 10.0 * pick(j * 3 + l)).collect()).collect();
        let rates = (0..v)
            .map(|j| {
                (0..k)
                    .map(|to| (0..k).map(|from| if to == from { 0.0 } else { 3.0 * pick(j + 5 * to + 7 * from) }).collect())
                    .collect()
            })
            .collect();
        VoxelCoefficients::from_tables(lattice, d, rates, GhostCoefficient::Clamp).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn diffusion_is_self_adjoint_and_dissipative(
            n in prop::sample::select(vec![2usize, 4, 16, 64]),
            seed in prop::collection::vec(0.0f64..1.0, 1..40),
            a in prop::collection::vec(-1.0f64..1.0, 64),
            b in prop::collection::vec(-1.0f64..1.0, 64),
            jump in any::<bool>(),
        ) {
            let mut c = random_coefficients(n, 1, 1, &seed);
            if jump {
                let d: Vec<f64> = (0..n).map(|j| if 2 * j < n { 1.0 } else { 10.0 }).collect();
                c = VoxelCoefficients::from_tables(*c.lattice(), vec![d], vec![vec![vec![0.0]]; n], GhostCoefficient::Clamp).unwrap();
            }
            let u = ConcField::from_fn(*c.lattice(), 1, |_, j| a[j]);
            let v = ConcField::from_fn(*c.lattice(), 1, |_, j| b[j]);
            let lu = apply_discrete_diffusion(&c, &u).unwrap();
            let lv = apply_discrete_diffusion(&c, &v).unwrap();
            let asym = (inner_product(&lu, &v).unwrap() - inner_product(&u, &lv).unwrap()).abs();
            let scale = norm(&u) * norm(&v) * c.diffusion_sup() * (n * n) as f64;
            prop_assert!(asym <= 1e-12 * scale);
            prop_assert!(inner_product(&lu, &u).unwrap() <= 1e-12 * scale);
        }

        #[test]
        fn reaction_is_mass_neutral(
            k in 1usize..5,
            seed in prop::collection::vec(0.0f64..1.0, 1..40),
            a in prop::collection::vec(0.0f64..100.0, 64),
        ) {
            let c = random_coefficients(4, 2, k, &seed);
            let u = ConcField::from_fn(*c.lattice(), k, |l, j| a[(j * k + l) % 64]);
            let r = apply_discrete_reaction(&c, &u).unwrap();
            for j in 0..c.lattice().voxels() {
                let s: f64 = (0..k).map(|l| r.get(l, j)).sum();
                // total flux through voxel j bounds the rounding of every term
                let flux: f64 = (0..k)
                    .flat_map(|from| (0..k).map(move |to| (from, to)))
                    .map(|(from, to)| c.rate(j, from, to) * u.get(from, j))
                    .sum();
                prop_assert!(s.abs() <= 4.0 * (k as f64) * f64::EPSILON * flux);
            }
        }
    }
}
