//! Spatially homogeneous rate matrices and their equilibria.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("generator is not weakly reversible")]
    NotWeaklyReversible,
    #[error("generator null space is not one-dimensional")]
    SingularSystem,
    #[error("invalid generator: {0}")]
    InvalidRates(String),
}

/// `K x K` rate matrix with non-negative off-diagonal entries and zero column sums.
///
/// `gamma[to][from]` is the rate of `S_from -> S_to`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousGenerator {
    gamma: Vec<Vec<f64>>,
}

impl HomogeneousGenerator {
    /// Builds the generator from off-diagonal rates `rates[to][from]`.
    /// Diagonal inputs are ignored and replaced by negative column sums.
    pub fn new(rates: Vec<Vec<f64>>) -> Result<Self, EquilibriumError> {
        let k = rates.len();
        if k == 0 || rates.iter().any(|r| r.len() != k) {
            return Err(EquilibriumError::InvalidRates(format!(
                "expected a square matrix, got {k} rows"
            )));
        }
        let mut gamma = rates;
        for from in 0..k {
            let mut out = 0.0;
            for to in 0..k {
                if to == from {
                    continue;
                }
                let g = gamma[to][from];
                if !(g >= 0.0 && g.is_finite()) {
                    return Err(EquilibriumError::InvalidRates(format!(
                        "rate {from}->{to} = {g} must be finite and non-negative"
                    )));
                }
                out += g;
            }
            gamma[from][from] = -out;
        }
        Ok(Self { gamma })
    }

    pub fn species(&self) -> usize {
        self.gamma.len()
    }

    /// Rate of `S_from -> S_to`; for `from == to` the (negative) diagonal.
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.gamma[to][from]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.gamma
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.gamma
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.gamma
            .iter()
            .map(|row| row.iter().zip(u).map(|(g, x)| g * x).sum())
            .collect()
    }

    pub fn graph(&self) -> Vec<Vec<bool>> {
        let k = self.species();
        (0..k)
            .map(|from| (0..k).map(|to| from != to && self.gamma[to][from] > 0.0).collect())
            .collect()
    }

    pub fn is_weakly_reversible(&self) -> bool {
        is_strongly_connected(&self.graph())
    }

    /// Unique positive `u` with `gamma u = 0` and `sum u = 1`.
    ///
    /// Solved by replacing the last equation with the normalisation and
    /// eliminating with partial pivoting.
    pub fn equilibrium(&self) -> Result<Vec<f64>, EquilibriumError> {
        if !self.is_weakly_reversible() {
            return Err(EquilibriumError::NotWeaklyReversible);
        }
        let k = self.species();
        let mut a: Vec<Vec<f64>> = self.gamma.clone();
        a[k - 1] = vec![1.0; k];
        let mut b = vec![0.0; k];
        b[k - 1] = 1.0;
        let scale = self.norm_inf().max(1.0);

        for col in 0..k {
            let pivot = (col..k)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            if a[pivot][col].abs() <= 1e-13 * scale {
                return Err(EquilibriumError::SingularSystem);
            }
            a.swap(col, pivot);
            b.swap(col, pivot);
            for row in col + 1..k {
                let m = a[row][col] / a[col][col];
                if m != 0.0 {
                    for c in col..k {
                        a[row][c] -= m * a[col][c];
                    }
                    b[row] -= m * b[col];
                }
            }
        }
        let mut u = vec![0.0; k];
        for row in (0..k).rev() {
            let s: f64 = (row + 1..k).map(|c| a[row][c] * u[c]).sum();
            u[row] = (b[row] - s) / a[row][row];
        }
        if u.iter().any(|&x| !(x > 0.0)) {
            return Err(EquilibriumError::SingularSystem);
        }
        Ok(u)
    }
}

/// Whether the digraph `adj[from][to]` is strongly connected.
pub fn is_strongly_connected(adj: &[Vec<bool>]) -> bool {
    let k = adj.len();
    if k <= 1 {
        return true;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; k];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in 0..k {
                let edge = if forward { adj[v][w] } else { adj[w][v] };
                if edge && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gen(rates: &[(usize, usize, f64)], k: usize) -> HomogeneousGenerator {
        let mut m = vec![vec![0.0; k]; k];
        for &(from, to, r) in rates {
            m[to][from] = r;
        }
        HomogeneousGenerator::new(m).unwrap()
    }

    #[test]
    fn columns_sum_to_zero() {
        let g = gen(&[(0, 1, 2.0), (1, 0, 1.0), (2, 0, 0.5)], 3);
        for from in 0..3 {
            let s: f64 = (0..3).map(|to| g.rate(from, to)).sum();
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn weak_reversibility_examples() {
        assert!(gen(&[(0, 1, 1.0), (1, 0, 1.0)], 2).is_weakly_reversible());
        assert!(!gen(&[(0, 1, 1.0)], 2).is_weakly_reversible());
        assert!(gen(&[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)], 3).is_weakly_reversible());
        assert!(gen(&[], 1).is_weakly_reversible());
    }

    /// Exhaustive simple-path search on three nodes.
    fn has_path(adj: &[Vec<bool>], from: usize, to: usize) -> bool {
        if adj[from][to] {
            return true;
        }
        (0..adj.len()).any(|mid| mid != from && mid != to && adj[from][mid] && adj[mid][to])
    }

    #[test]
    fn three_node_graphs_match_path_enumeration() {
        for mask in 0u32..64 {
            let mut adj = vec![vec![false; 3]; 3];
            let mut bit = 0;
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        adj[i][j] = mask & (1 << bit) != 0;
                        bit += 1;
                    }
                }
            }
            let expected = (0..3).all(|i| (0..3).all(|j| i == j || has_path(&adj, i, j)));
            assert_eq!(is_strongly_connected(&adj), expected, "mask {mask:06b}");
        }
    }

    #[test]
    fn equilibrium_examples() {
        let u = gen(&[(0, 1, 1.0), (1, 0, 1.0)], 2).equilibrium().unwrap();
        assert!((u[0] - 0.5).abs() < 1e-15 && (u[1] - 0.5).abs() < 1e-15);

        // 2x2 null space by hand: -2 u1 + u2 = 0, u1 + u2 = 1 -> (1/3, 2/3).
        let u = gen(&[(0, 1, 2.0), (1, 0, 1.0)], 2).equilibrium().unwrap();
        assert!((u[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((u[1] - 2.0 / 3.0).abs() < 1e-15);

        let u = gen(&[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)], 3).equilibrium().unwrap();
        for x in u {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn equilibrium_requires_weak_reversibility() {
        assert_eq!(
            gen(&[(0, 1, 1.0)], 2).equilibrium(),
            Err(EquilibriumError::NotWeaklyReversible)
        );
    }

    #[test]
    fn negative_rates_rejected() {
        assert!(HomogeneousGenerator::new(vec![vec![0.0, -1.0], vec![1.0, 0.0]]).is_err());
    }

    fn strongly_connected_generator(k: usize) -> impl Strategy<Value = HomogeneousGenerator> {
        proptest::collection::vec(0.0f64..5.0, k * k).prop_map(move |raw| {
            let mut m = vec![vec![0.0; k]; k];
            for to in 0..k {
                for from in 0..k {
                    m[to][from] = raw[to * k + from];
                }
            }
            // a cycle with positive rates keeps the graph strongly connected
            for i in 0..k {
                m[(i + 1) % k][i] += 0.1;
            }
            HomogeneousGenerator::new(m).unwrap()
        })
    }

    proptest! {
        #[test]
        fn equilibrium_constraints_and_scale_invariance(
            g in (2usize..6).prop_flat_map(strongly_connected_generator),
            c in 0.01f64..100.0,
        ) {
            let u = g.equilibrium().unwrap();
            let residual = g.apply(&u);
            let tol = 1e-12 * g.norm_inf();
            prop_assert!(residual.iter().all(|r| r.abs() <= tol));
            prop_assert!((u.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(u.iter().all(|&x| x > 0.0));

            let scaled: Vec<Vec<f64>> = g.matrix().iter().map(|r| r.iter().map(|v| v * c).collect()).collect();
            let v = HomogeneousGenerator::new(scaled).unwrap().equilibrium().unwrap();
            for (a, b) in u.iter().zip(&v) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn weak_reversibility_invariant_under_relabeling(
            bits in proptest::collection::vec(any::<bool>(), 25),
            perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle(),
        ) {
            let adj: Vec<Vec<bool>> = (0..5).map(|i| (0..5).map(|j| i != j && bits[i * 5 + j]).collect()).collect();
            let relabeled: Vec<Vec<bool>> = (0..5)
                .map(|i| (0..5).map(|j| adj[perm[i]][perm[j]]).collect())
                .collect();
            prop_assert_eq!(is_strongly_connected(&adj), is_strongly_connected(&relabeled));
        }
    }
}
