use rand::Rng;

use super::{PdeError, EXPM_MAX_DIM};
use crate::discretization::{
    apply_discrete_diffusion, assemble_generator, inner_product, norm, ConcField, VoxelCoefficients,
};
use crate::linalg::{BandedLu, DenseMatrix};
use crate::Real;

fn random_field<R: Rng + ?Sized>(coef: &VoxelCoefficients<f64>, rng: &mut R) -> ConcField<f64> {
    ConcField::from_fn(*coef.lattice(), coef.species(), |_, _| rng.random::<f64>() * 2.0 - 1.0)
}

fn asymmetry_scale(coef: &VoxelCoefficients<f64>, u: &ConcField<f64>, v: &ConcField<f64>) -> f64 {
    let n = coef.lattice().per_axis() as f64;
    (norm(u) * norm(v) * coef.diffusion_sup() * n * n).max(f64::MIN_POSITIVE)
}

/// Largest normalised asymmetry `|<L u, v> - <u, L v>| / (|u| |v| |D| N^2)`
/// of the discrete diffusion operator over `trials` random field pairs.
pub fn check_self_adjoint<R: Rng + ?Sized>(coef: &VoxelCoefficients<f64>, trials: usize, rng: &mut R) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let u = random_field(coef, rng);
        let v = random_field(coef, rng);
        let lu = apply_discrete_diffusion(coef, &u).expect("field built on the coefficient lattice");
        let lv = apply_discrete_diffusion(coef, &v).expect("field built on the coefficient lattice");
        let gap = inner_product(&lu, &v).unwrap() - inner_product(&u, &lv).unwrap();
        worst = worst.max(gap.abs() / asymmetry_scale(coef, &u, &v));
    }
    worst
}

/// Diffusion stencil with reflective ghosts: the ghost value next to a
/// boundary voxel copies the interior neighbour on the other side
/// (`u_0 = u_2`, `u_{N+1} = u_{N-1}` in one-based terms). Control case only.
pub fn apply_neumann_control(coef: &VoxelCoefficients<f64>, u: &ConcField<f64>) -> ConcField<f64> {
    let lat = *coef.lattice();
    let n = lat.per_axis();
    let n2 = (n * n) as f64;
    ConcField::from_fn(lat, u.species(), |l, j| {
        let mut acc = 0.0;
        let here = u.get(l, j);
        for axis in 0..lat.dimension() {
            let step = lat.stride(axis);
            let up = match lat.neighbor(j, axis, true) {
                Some(t) => u.get(l, t),
                None if n > 1 => u.get(l, j - step),
                None => here,
            };
            let down = match lat.neighbor(j, axis, false) {
                Some(t) => u.get(l, t),
                None if n > 1 => u.get(l, j + step),
                None => here,
            };
            let d_up = coef.face_coefficient(l, j, axis, true);
            let d_down = coef.face_coefficient(l, j, axis, false);
            acc += d_up * up - (d_up + d_down) * here + d_down * down;
        }
        n2 * acc
    })
}

/// Same normalised asymmetry as [`check_self_adjoint`] for the reflective
/// control operator.
pub fn neumann_asymmetry<R: Rng + ?Sized>(coef: &VoxelCoefficients<f64>, trials: usize, rng: &mut R) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let u = random_field(coef, rng);
        let v = random_field(coef, rng);
        let lu = apply_neumann_control(coef, &u);
        let lv = apply_neumann_control(coef, &v);
        let gap = inner_product(&lu, &v).unwrap() - inner_product(&u, &lv).unwrap();
        worst = worst.max(gap.abs() / asymmetry_scale(coef, &u, &v));
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    /// Largest `|T(t) u| / |u|` per time.
    pub max_ratio: Vec<f64>,
    /// `max_t ln(ratio) / t` over positive times; `<= 0` for a contraction.
    pub omega: f64,
}

impl ContractionReport {
    pub fn overall_max(&self) -> f64 {
        self.max_ratio.iter().copied().fold(0.0, f64::max)
    }
}

/// Evaluates `exp(t A)` densely and records the largest norm ratio over
/// `trials` random inputs, where `A` is the generator of `coef`. Pass
/// [`VoxelCoefficients::without_reactions`] to test the pure-diffusion
/// semigroup.
pub fn check_contraction<R: Rng + ?Sized>(
    coef: &VoxelCoefficients<f64>,
    times: &[f64],
    trials: usize,
    rng: &mut R,
) -> Result<ContractionReport, PdeError> {
    let a = assemble_generator(coef);
    let dim = a.rows();
    if dim > EXPM_MAX_DIM {
        return Err(PdeError::TooLarge { dim, max: EXPM_MAX_DIM });
    }
    let dense = DenseMatrix::from_csr(&a);
    let inputs: Vec<ConcField<f64>> = (0..trials).map(|_| random_field(coef, rng)).collect();
    let mut max_ratio = Vec::with_capacity(times.len());
    let mut omega = f64::NEG_INFINITY;
    for &t in times {
        let e = dense.scale(t).expm()?;
        let mut worst = 0.0f64;
        for u in &inputs {
            let v = ConcField::from_values(*u.lattice(), u.species(), e.matvec(u.values()))?;
            worst = worst.max(norm(&v) / norm(u));
        }
        if t > 0.0 {
            omega = omega.max(worst.ln() / t);
        }
        max_ratio.push(worst);
    }
    Ok(ContractionReport {
        times: times.to_vec(),
        max_ratio,
        omega: if omega.is_finite() { omega } else { 0.0 },
    })
}

/// Smallest decay rate of the generator: the eigenvalue of `-A` nearest zero,
/// by inverse iteration. `-A` is a non-singular M-matrix whenever every
/// species can reach the absorbing boundary, so this eigenvalue is real and
/// its eigenvector positive.
pub fn smallest_decay_rate<T: Real>(coef: &VoxelCoefficients<T>) -> Result<(f64, ConcField<T>), PdeError> {
    let a = assemble_generator(coef);
    let minus_a = a.shifted(-T::one(), T::zero());
    let lu = BandedLu::factor(&minus_a)?;
    let dim = a.rows();
    let mut x = vec![T::one(); dim];
    let mut mu = 0.0f64;
    let eps = T::epsilon().as_f64();
    for _ in 0..20_000 {
        let norm_x = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        for v in x.iter_mut() {
            *v = *v / norm_x;
        }
        let prev = x.clone();
        lu.solve_in_place(&mut x);
        let num: T = prev.iter().zip(&x).map(|(p, y)| *p * *y).sum();
        let den: T = prev.iter().map(|p| *p * *p).sum();
        let next = (den / num).as_f64();
        let scale = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let shift = prev
            .iter()
            .zip(&x)
            .fold(T::zero(), |m, (p, y)| m.max((*y / scale - *p).abs()));
        let converged = (next - mu).abs() <= 64.0 * eps * next.abs() && shift.as_f64() <= 512.0 * eps;
        mu = next;
        if converged {
            break;
        }
    }
    let norm_x = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let vec = x.into_iter().map(|v| v / norm_x).collect();
    Ok((mu, ConcField::from_values(*coef.lattice(), coef.species(), vec)?))
}
