//! Scalar coefficient fields on the unit hypercube.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Functional form of a [`SpatialField`].
///
/// Closed forms are restricted to shapes whose cell averages can be computed
/// to round-off: piecewise constants on axis-aligned tensor grids, univariate
/// polynomials and separable sine products.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldShape {
    Constant {
        value: f64,
    },
    /// Tensor-product regions. `breakpoints[a]` lists the interior cut points
    /// along axis `a` (strictly increasing, inside `(0, 1)`); `values` is
    /// row-major with axis 0 varying fastest. A point on a cut belongs to
    /// the region on its right.
    Piecewise {
        breakpoints: Vec<Vec<f64>>,
        values: Vec<f64>,
    },
    /// `sum_k coefficients[k] * x_axis^k`.
    Polynomial {
        axis: usize,
        coefficients: Vec<f64>,
    },
    /// `offset + amplitude * prod_a sin(pi * frequency[a] * x_a + phase[a])`.
    Sine {
        offset: f64,
        amplitude: f64,
        frequency: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        phase: Vec<f64>,
    },
    /// Linear combination `sum_k weight_k * term_k`.
    Combination {
        terms: Vec<WeightedShape>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedShape {
    pub weight: f64,
    pub shape: FieldShape,
}

/// Declared regularity of a field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    #[default]
    LInfinity,
    C1,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("field has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("malformed field: {0}")]
    Malformed(String),
    #[error("field declared C1 but has jump discontinuities")]
    NotSmooth,
}

/// A scalar function on `[0,1]^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialField {
    dimension: usize,
    shape: FieldShape,
    smoothness: Smoothness,
}

impl SpatialField {
    pub fn new(
        dimension: usize,
        shape: FieldShape,
        smoothness: Smoothness,
    ) -> Result<Self, FieldError> {
        if dimension == 0 {
            return Err(FieldError::Malformed("dimension must be positive".into()));
        }
        check_shape(dimension, &shape)?;
        if smoothness == Smoothness::C1 && has_jumps(&shape) {
            return Err(FieldError::NotSmooth);
        }
        Ok(Self {
            dimension,
            shape,
            smoothness,
        })
    }

    pub fn constant(dimension: usize, value: f64) -> Self {
        Self::new(dimension, FieldShape::Constant { value }, Smoothness::C1)
            .expect("constant field is well formed")
    }

    pub fn zero(dimension: usize) -> Self {
        Self::constant(dimension, 0.0)
    }

    /// One-dimensional step function: `values[k]` on the k-th interval cut by `breakpoints`.
    pub fn steps_1d(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, FieldError> {
        Self::new(
            1,
            FieldShape::Piecewise {
                breakpoints: vec![breakpoints],
                values,
            },
            Smoothness::LInfinity,
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn shape(&self) -> &FieldShape {
        &self.shape
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    /// Evaluates the field at `x` (length `dimension`).
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        eval_shape(&self.shape, x)
    }

    /// Returns `c * self`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dimension: self.dimension,
            shape: scale_shape(&self.shape, c),
            smoothness: self.smoothness,
        }
    }

    /// Returns `sum_k w_k f_k`; all fields must share a dimension.
    pub fn linear_combination(dimension: usize, terms: &[(f64, &SpatialField)]) -> Self {
        let smooth = terms.iter().all(|(_, f)| f.smoothness == Smoothness::C1);
        let shapes = terms
            .iter()
            .filter(|(_, f)| !f.is_identically_zero())
            .map(|(w, f)| {
                debug_assert_eq!(f.dimension, dimension);
                WeightedShape {
                    weight: *w,
                    shape: f.shape.clone(),
                }
            })
            .collect::<Vec<_>>();
        let shape = match shapes.len() {
            0 => FieldShape::Constant { value: 0.0 },
            _ => FieldShape::Combination { terms: shapes },
        };
        Self {
            dimension,
            shape,
            smoothness: if smooth {
                Smoothness::C1
            } else {
                Smoothness::LInfinity
            },
        }
    }

    /// Structural test for the zero function.
    pub fn is_identically_zero(&self) -> bool {
        shape_is_zero(&self.shape)
    }

    /// Whether every value is finite (checked on the representation).
    pub fn is_finite(&self) -> bool {
        shape_is_finite(&self.shape)
    }

    /// Evaluates the field on the tensor grid `{0, 1/g, ..., 1}^n` and calls
    /// `visit(point, value)` for each node.
    pub fn scan_grid(&self, per_axis: usize, mut visit: impl FnMut(&[f64], f64)) {
        let g = per_axis.max(1);
        let n = self.dimension;
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        loop {
            for a in 0..n {
                x[a] = idx[a] as f64 / g as f64;
            }
            visit(&x, self.eval(&x));
            let mut a = 0;
            loop {
                if a == n {
                    return;
                }
                idx[a] += 1;
                if idx[a] <= g {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
    }
}

impl fmt::Display for SpatialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.shape)
    }
}

fn check_shape(dim: usize, shape: &FieldShape) -> Result<(), FieldError> {
    match shape {
        FieldShape::Constant { .. } => Ok(()),
        FieldShape::Piecewise {
            breakpoints,
            values,
        } => {
            if breakpoints.len() != dim {
                return Err(FieldError::DimensionMismatch {
                    expected: dim,
                    found: breakpoints.len(),
                });
            }
            for (a, cuts) in breakpoints.iter().enumerate() {
                let mut prev = 0.0;
                for &b in cuts {
                    if !(b > prev && b < 1.0) {
                        return Err(FieldError::Malformed(format!(
                            "breakpoints on axis {a} must be strictly increasing inside (0, 1)"
                        )));
                    }
                    prev = b;
                }
            }
            let regions: usize = breakpoints.iter().map(|c| c.len() + 1).product();
            if values.len() != regions {
                return Err(FieldError::Malformed(format!(
                    "piecewise field needs {regions} values, got {}",
                    values.len()
                )));
            }
            Ok(())
        }
        FieldShape::Polynomial { axis, coefficients } => {
            if *axis >= dim {
                return Err(FieldError::Malformed(format!(
                    "polynomial axis {axis} out of range for dimension {dim}"
                )));
            }
            if coefficients.is_empty() {
                return Err(FieldError::Malformed("polynomial without coefficients".into()));
            }
            Ok(())
        }
        FieldShape::Sine {
            frequency, phase, ..
        } => {
            if frequency.len() != dim {
                return Err(FieldError::DimensionMismatch {
                    expected: dim,
                    found: frequency.len(),
                });
            }
            if !phase.is_empty() && phase.len() != dim {
                return Err(FieldError::Malformed(
                    "phase must be empty or have one entry per axis".into(),
                ));
            }
            Ok(())
        }
        FieldShape::Combination { terms } => {
            terms.iter().try_for_each(|t| check_shape(dim, &t.shape))
        }
    }
}

fn has_jumps(shape: &FieldShape) -> bool {
    match shape {
        FieldShape::Piecewise { values, .. } => values.windows(2).any(|w| w[0] != w[1]),
        FieldShape::Combination { terms } => terms.iter().any(|t| has_jumps(&t.shape)),
        _ => false,
    }
}

pub(crate) fn region_index(cuts: &[f64], x: f64) -> usize {
    cuts.partition_point(|&b| b <= x)
}

fn eval_shape(shape: &FieldShape, x: &[f64]) -> f64 {
    match shape {
        FieldShape::Constant { value } => *value,
        FieldShape::Piecewise {
            breakpoints,
            values,
        } => {
            let mut flat = 0;
            let mut stride = 1;
            for (a, cuts) in breakpoints.iter().enumerate() {
                flat += region_index(cuts, x[a]) * stride;
                stride *= cuts.len() + 1;
            }
            values[flat]
        }
        FieldShape::Polynomial { axis, coefficients } => horner(coefficients, x[*axis]),
        FieldShape::Sine {
            offset,
            amplitude,
            frequency,
            phase,
        } => {
            let mut prod = 1.0;
            for (a, &f) in frequency.iter().enumerate() {
                let p = phase.get(a).copied().unwrap_or(0.0);
                prod *= (std::f64::consts::PI * f * x[a] + p).sin();
            }
            offset + amplitude * prod
        }
        FieldShape::Combination { terms } => terms
            .iter()
            .map(|t| t.weight * eval_shape(&t.shape, x))
            .sum(),
    }
}

pub(crate) fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn scale_shape(shape: &FieldShape, c: f64) -> FieldShape {
    match shape {
        FieldShape::Constant { value } => FieldShape::Constant { value: c * value },
        FieldShape::Piecewise {
            breakpoints,
            values,
        } => FieldShape::Piecewise {
            breakpoints: breakpoints.clone(),
            values: values.iter().map(|v| c * v).collect(),
        },
        FieldShape::Polynomial { axis, coefficients } => FieldShape::Polynomial {
            axis: *axis,
            coefficients: coefficients.iter().map(|v| c * v).collect(),
        },
        FieldShape::Sine {
            offset,
            amplitude,
            frequency,
            phase,
        } => FieldShape::Sine {
            offset: c * offset,
            amplitude: c * amplitude,
            frequency: frequency.clone(),
            phase: phase.clone(),
        },
        FieldShape::Combination { terms } => FieldShape::Combination {
            terms: terms
                .iter()
                .map(|t| WeightedShape {
                    weight: c * t.weight,
                    shape: t.shape.clone(),
                })
                .collect(),
        },
    }
}

fn shape_is_zero(shape: &FieldShape) -> bool {
    match shape {
        FieldShape::Constant { value } => *value == 0.0,
        FieldShape::Piecewise { values, .. } => values.iter().all(|v| *v == 0.0),
        FieldShape::Polynomial { coefficients, .. } => coefficients.iter().all(|v| *v == 0.0),
        FieldShape::Sine {
            offset,
            amplitude,
            frequency,
            ..
        } => *offset == 0.0 && (*amplitude == 0.0 || frequency.iter().any(|f| *f == 0.0)),
        FieldShape::Combination { terms } => terms
            .iter()
            .all(|t| t.weight == 0.0 || shape_is_zero(&t.shape)),
    }
}

fn shape_is_finite(shape: &FieldShape) -> bool {
    match shape {
        FieldShape::Constant { value } => value.is_finite(),
        FieldShape::Piecewise { values, .. } => values.iter().all(|v| v.is_finite()),
        FieldShape::Polynomial { coefficients, .. } => coefficients.iter().all(|v| v.is_finite()),
        FieldShape::Sine {
            offset,
            amplitude,
            frequency,
            phase,
        } => {
            offset.is_finite()
                && amplitude.is_finite()
                && frequency.iter().chain(phase.iter()).all(|v| v.is_finite())
        }
        FieldShape::Combination { terms } => terms
            .iter()
            .all(|t| t.weight.is_finite() && shape_is_finite(&t.shape)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_field_takes_right_value_on_cut() {
        let f = SpatialField::steps_1d(vec![0.5], vec![1.0, 0.0]).unwrap();
        assert_eq!(f.eval(&[0.25]), 1.0);
        assert_eq!(f.eval(&[0.5]), 0.0);
        assert_eq!(f.eval(&[1.0]), 0.0);
    }

    #[test]
    fn piecewise_2d_row_major_axis0_fastest() {
        let f = SpatialField::new(
            2,
            FieldShape::Piecewise {
                breakpoints: vec![vec![0.5], vec![0.25]],
                values: vec![1.0, 2.0, 3.0, 4.0],
            },
            Smoothness::LInfinity,
        )
        .unwrap();
        assert_eq!(f.eval(&[0.1, 0.1]), 1.0);
        assert_eq!(f.eval(&[0.9, 0.1]), 2.0);
        assert_eq!(f.eval(&[0.1, 0.9]), 3.0);
        assert_eq!(f.eval(&[0.9, 0.9]), 4.0);
    }

    #[test]
    fn malformed_shapes_rejected() {
        assert!(SpatialField::steps_1d(vec![0.5, 0.5], vec![1.0, 2.0, 3.0]).is_err());
        assert!(SpatialField::steps_1d(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(SpatialField::steps_1d(vec![0.3], vec![1.0]).is_err());
        let poly = FieldShape::Polynomial {
            axis: 1,
            coefficients: vec![1.0],
        };
        assert!(SpatialField::new(1, poly, Smoothness::C1).is_err());
        let jump = FieldShape::Piecewise {
            breakpoints: vec![vec![0.5]],
            values: vec![1.0, 2.0],
        };
        assert_eq!(
            SpatialField::new(1, jump, Smoothness::C1),
            Err(FieldError::NotSmooth)
        );
    }

    #[test]
    fn sine_and_polynomial_evaluate() {
        let s = SpatialField::new(
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
        assert!((s.eval(&[0.25]) - 0.75).abs() < 1e-15);
        let p = SpatialField::new(
            1,
            FieldShape::Polynomial {
                axis: 0,
                coefficients: vec![1.0, -2.0, 3.0],
            },
            Smoothness::C1,
        )
        .unwrap();
        assert!((p.eval(&[0.5]) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn combination_and_scaling() {
        let a = SpatialField::constant(1, 2.0);
        let b = SpatialField::steps_1d(vec![0.5], vec![1.0, 0.0]).unwrap();
        let c = SpatialField::linear_combination(1, &[(1.0, &a), (-3.0, &b)]);
        assert_eq!(c.eval(&[0.1]), -1.0);
        assert_eq!(c.eval(&[0.9]), 2.0);
        assert_eq!(c.smoothness(), Smoothness::LInfinity);
        assert_eq!(b.scaled(4.0).eval(&[0.2]), 4.0);
        assert!(SpatialField::linear_combination(1, &[]).is_identically_zero());
    }

    #[test]
    fn grid_scan_visits_all_nodes() {
        let f = SpatialField::constant(2, 1.0);
        let mut count = 0;
        f.scan_grid(4, |_, _| count += 1);
        assert_eq!(count, 25);
    }
}
