use serde::{Deserialize, Serialize};

use crate::discretization::{Lattice, VoxelCoefficients};

/// Which diffusion coefficient a hop uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateConvention {
    /// Crossing the face between `j` and `j + e_a` (either direction) uses
    /// `D_{j + e_a}`. The mean drift then equals `L_N + R_N` exactly.
    #[default]
    Interface,
    /// Every hop out of `j` uses `D_j` (literal rate table).
    SourceVoxel,
}

impl RateConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Interface => "interface",
            Self::SourceVoxel => "source-voxel",
        }
    }
}

/// One transition of the jump process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Event {
    /// A molecule of `from` converts into `to` inside `voxel`.
    Reaction { voxel: usize, from: usize, to: usize },
    /// A molecule of `species` leaves `voxel` along `axis`; past the last
    /// interior voxel it is absorbed by the ghost layer.
    Hop {
        voxel: usize,
        species: usize,
        axis: usize,
        forward: bool,
    },
}

/// Per-molecule rates of every transition, per voxel and species.
///
/// Slots `2a` and `2a + 1` hold the backward and forward hop along axis `a`,
/// slots `2n + to` hold the reaction into species `to` (zero for `to` equal
/// to the source species).
#[derive(Clone, Debug)]
pub struct RateKernel {
    coefficients: VoxelCoefficients<f64>,
    convention: RateConvention,
    stride: usize,
    per_molecule: Vec<f64>,
    totals: Vec<f64>,
}

impl RateKernel {
    pub fn new(coefficients: VoxelCoefficients<f64>, convention: RateConvention) -> Self {
        let lat = *coefficients.lattice();
        let k = coefficients.species();
        let n = lat.dimension();
        let stride = 2 * n + k;
        let n2 = (lat.per_axis() * lat.per_axis()) as f64;
        let mut per_molecule = vec![0.0; lat.voxels() * k * stride];
        let mut totals = vec![0.0; lat.voxels() * k];
        for j in 0..lat.voxels() {
            for l in 0..k {
                let base = (j * k + l) * stride;
                for axis in 0..n {
                    for forward in [false, true] {
                        let d = match convention {
                            RateConvention::Interface => coefficients.face_coefficient(l, j, axis, forward),
                            RateConvention::SourceVoxel => coefficients.diffusion(l, j),
                        };
                        per_molecule[base + 2 * axis + forward as usize] = d * n2;
                    }
                }
                for to in 0..k {
                    if to != l {
                        per_molecule[base + 2 * n + to] = coefficients.rate(j, l, to);
                    }
                }
                totals[j * k + l] = per_molecule[base..base + stride].iter().sum();
            }
        }
        Self {
            coefficients,
            convention,
            stride,
            per_molecule,
            totals,
        }
    }

    pub fn coefficients(&self) -> &VoxelCoefficients<f64> {
        &self.coefficients
    }

    pub fn lattice(&self) -> &Lattice {
        self.coefficients.lattice()
    }

    pub fn species(&self) -> usize {
        self.coefficients.species()
    }

    pub fn convention(&self) -> RateConvention {
        self.convention
    }

    /// Per-molecule rates of `species` in `voxel`, indexed by slot.
    #[inline]
    pub(crate) fn slots(&self, voxel: usize, species: usize) -> &[f64] {
        let base = (voxel * self.species() + species) * self.stride;
        &self.per_molecule[base..base + self.stride]
    }

    /// Total per-molecule rate of leaving state `(voxel, species)`.
    #[inline]
    pub fn exit_rate(&self, voxel: usize, species: usize) -> f64 {
        self.totals[voxel * self.species() + species]
    }

    pub(crate) fn event_for_slot(&self, voxel: usize, species: usize, slot: usize) -> Event {
        let n = self.lattice().dimension();
        if slot < 2 * n {
            Event::Hop {
                voxel,
                species,
                axis: slot / 2,
                forward: slot % 2 == 1,
            }
        } else {
            Event::Reaction {
                voxel,
                from: species,
                to: slot - 2 * n,
            }
        }
    }

    /// Per-molecule rate of `event`.
    pub fn rate_of(&self, event: Event) -> f64 {
        let n = self.lattice().dimension();
        match event {
            Event::Reaction { voxel, from, to } => self.slots(voxel, from)[2 * n + to],
            Event::Hop {
                voxel,
                species,
                axis,
                forward,
            } => self.slots(voxel, species)[2 * axis + forward as usize],
        }
    }

    /// Expected rate of change of a voxel-major field `x` under the jump rates,
    /// treating `x` as a (real-valued) state: `sum_e rate_e(x) * delta_e`.
    pub fn apply_mean_drift(&self, x: &[f64]) -> Vec<f64> {
        let lat = *self.lattice();
        let k = self.species();
        let n = lat.dimension();
        let mut out = vec![0.0; x.len()];
        for j in 0..lat.voxels() {
            for l in 0..k {
                let amount = x[j * k + l];
                if amount == 0.0 {
                    continue;
                }
                let slots = self.slots(j, l);
                for axis in 0..n {
                    for forward in [false, true] {
                        let flow = slots[2 * axis + forward as usize] * amount;
                        out[j * k + l] -= flow;
                        if let Some(t) = lat.neighbor(j, axis, forward) {
                            out[t * k + l] += flow;
                        }
                    }
                }
                for to in 0..k {
                    let flow = slots[2 * n + to] * amount;
                    out[j * k + l] -= flow;
                    out[j * k + to] += flow;
                }
            }
        }
        out
    }
}
