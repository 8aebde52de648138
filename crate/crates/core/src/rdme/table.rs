use rand::Rng;

use super::{CountState, Event, RateKernel, RdmeError};

/// Binary sum tree over per-voxel rates. Parents are always recomputed from
/// their children, so cached sums never drift from the leaves.
#[derive(Clone, Debug)]
struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    fn new(values: &[f64]) -> Self {
        let leaves = values.len().next_power_of_two();
        let mut nodes = vec![0.0; 2 * leaves];
        nodes[leaves..leaves + values.len()].copy_from_slice(values);
        for i in (1..leaves).rev() {
            nodes[i] = nodes[2 * i] + nodes[2 * i + 1];
        }
        Self { leaves, nodes }
    }

    #[inline]
    fn total(&self) -> f64 {
        self.nodes[1]
    }

    #[inline]
    fn leaf(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    #[inline]
    fn set(&mut self, i: usize, value: f64) {
        let mut node = self.leaves + i;
        self.nodes[node] = value;
        while node > 1 {
            node /= 2;
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
        }
    }

    /// Leaf whose cumulative interval contains `u`, and the offset inside it.
    fn find(&self, mut u: f64) -> (usize, f64) {
        let mut node = 1;
        while node < self.leaves {
            let left = self.nodes[2 * node];
            let right = self.nodes[2 * node + 1];
            if u < left || right <= 0.0 {
                node *= 2;
                u = u.min(left);
            } else {
                u -= left;
                node = 2 * node + 1;
            }
        }
        let leaf = node - self.leaves;
        (leaf, u.clamp(0.0, self.nodes[node]))
    }
}

/// Rates of every enabled transition for a given count state, with per-voxel
/// partial sums kept in a sum tree so that sampling and updates cost
/// `O(log V + K + n)`.
#[derive(Clone, Debug)]
pub struct EventTable<'k> {
    kernel: &'k RateKernel,
    counts: Vec<u64>,
    voxel_counts: Vec<u64>,
    tree: SumTree,
}

/// Builds the event table of `state` under `kernel`.
pub fn build_event_rates<'k>(state: &CountState, kernel: &'k RateKernel) -> Result<EventTable<'k>, RdmeError> {
    if state.species() != kernel.species() || !state.lattice().same_geometry(kernel.lattice()) {
        return Err(RdmeError::LatticeMismatch);
    }
    let k = kernel.species();
    let voxels = kernel.lattice().voxels();
    let counts = state.counts().to_vec();
    let voxel_counts = (0..voxels).map(|j| counts[j * k..(j + 1) * k].iter().sum()).collect();
    let mut table = EventTable {
        kernel,
        counts,
        voxel_counts,
        tree: SumTree::new(&vec![0.0; voxels]),
    };
    table.rebuild();
    Ok(table)
}

impl<'k> EventTable<'k> {
    #[inline]
    fn voxel_rate(&self, voxel: usize) -> f64 {
        let k = self.kernel.species();
        let mut a = 0.0;
        for l in 0..k {
            let c = self.counts[voxel * k + l];
            if c > 0 {
                a += c as f64 * self.kernel.exit_rate(voxel, l);
            }
        }
        a
    }

    /// Recomputes every per-voxel rate from the counts.
    pub fn rebuild(&mut self) {
        let rates: Vec<f64> = (0..self.kernel.lattice().voxels()).map(|j| self.voxel_rate(j)).collect();
        self.tree = SumTree::new(&rates);
    }

    pub fn kernel(&self) -> &RateKernel {
        self.kernel
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Molecules of every species in `voxel`.
    pub fn voxel_count(&self, voxel: usize) -> u64 {
        self.voxel_counts[voxel]
    }

    /// Waiting-time parameter: sum of all event rates.
    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    /// Cached rate of all events in `voxel`.
    pub fn voxel_partial_sum(&self, voxel: usize) -> f64 {
        self.tree.leaf(voxel)
    }

    /// Every enabled event with its rate, ordered by voxel, species and slot.
    pub fn events(&self) -> Vec<(Event, f64)> {
        let k = self.kernel.species();
        let mut out = Vec::new();
        for j in 0..self.kernel.lattice().voxels() {
            for l in 0..k {
                let c = self.counts[j * k + l];
                if c == 0 {
                    continue;
                }
                for (slot, &r) in self.kernel.slots(j, l).iter().enumerate() {
                    if r > 0.0 {
                        out.push((self.kernel.event_for_slot(j, l, slot), c as f64 * r));
                    }
                }
            }
        }
        out
    }

    /// Relative difference between the cached total and a fresh sum over events.
    pub fn revalidate(&self) -> f64 {
        let fresh: f64 = self.events().iter().map(|(_, r)| r).sum();
        let cached = self.total_rate();
        if fresh == 0.0 && cached == 0.0 {
            0.0
        } else {
            (fresh - cached).abs() / fresh.abs().max(cached.abs())
        }
    }

    /// Draws an event with probability proportional to its rate: a sum-tree
    /// descent over voxels, then a scan over species and slots.
    pub fn sample_event<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Event, RdmeError> {
        let total = self.total_rate();
        if !(total > 0.0) {
            return Err(RdmeError::NoEventEnabled);
        }
        let u = rng.random::<f64>() * total;
        let (voxel, mut r) = self.tree.find(u);
        let k = self.kernel.species();
        let mut last = None;
        for l in 0..k {
            let c = self.counts[voxel * k + l];
            if c == 0 {
                continue;
            }
            let w = c as f64 * self.kernel.exit_rate(voxel, l);
            if w <= 0.0 {
                continue;
            }
            last = Some(l);
            if r < w {
                return Ok(self.pick_slot(voxel, l, r / c as f64));
            }
            r -= w;
        }
        // rounding pushed r past the last species
        let l = last.ok_or(RdmeError::NoEventEnabled)?;
        Ok(self.pick_slot(voxel, l, f64::INFINITY))
    }

    fn pick_slot(&self, voxel: usize, species: usize, mut r: f64) -> Event {
        let slots = self.kernel.slots(voxel, species);
        let mut last = 0;
        for (slot, &rate) in slots.iter().enumerate() {
            if rate <= 0.0 {
                continue;
            }
            last = slot;
            if r < rate {
                return self.kernel.event_for_slot(voxel, species, slot);
            }
            r -= rate;
        }
        self.kernel.event_for_slot(voxel, species, last)
    }

    /// Applies `event` and refreshes the partial sums it touched. Returns the
    /// voxels whose counts changed (the second entry is `None` for absorption
    /// and reactions).
    pub fn apply(&mut self, event: Event) -> (usize, Option<usize>) {
        let k = self.kernel.species();
        match event {
            Event::Reaction { voxel, from, to } => {
                debug_assert!(self.counts[voxel * k + from] > 0);
                self.counts[voxel * k + from] -= 1;
                self.counts[voxel * k + to] += 1;
                let a = self.voxel_rate(voxel);
                self.tree.set(voxel, a);
                (voxel, None)
            }
            Event::Hop {
                voxel,
                species,
                axis,
                forward,
            } => {
                debug_assert!(self.counts[voxel * k + species] > 0);
                self.counts[voxel * k + species] -= 1;
                self.voxel_counts[voxel] -= 1;
                let a = self.voxel_rate(voxel);
                self.tree.set(voxel, a);
                let target = self.kernel.lattice().neighbor(voxel, axis, forward);
                if let Some(t) = target {
                    self.counts[t * k + species] += 1;
                    self.voxel_counts[t] += 1;
                    let a = self.voxel_rate(t);
                    self.tree.set(t, a);
                }
                (voxel, target)
            }
        }
    }
}
