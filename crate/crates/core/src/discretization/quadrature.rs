//! Gauss–Legendre rules for cell averages of closed-form fields.

use std::sync::OnceLock;

/// Node counts tried in order by [`average`].
const RULES: [usize; 4] = [8, 16, 32, 64];

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn rule(idx: usize) -> &'static Rule {
    static CACHE: [OnceLock<Rule>; 4] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    CACHE[idx].get_or_init(|| gauss_legendre(RULES[idx]))
}

/// Nodes and weights on `[-1, 1]` by Newton iteration on `P_m`.
fn gauss_legendre(m: usize) -> Rule {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    Rule { nodes, weights }
}

fn apply(idx: usize, f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let r = rule(idx);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    let mut abs = 0.0;
    for (x, w) in r.nodes.iter().zip(&r.weights) {
        let v = f(mid + half * x);
        sum += w * v;
        abs += w * v.abs();
    }
    // weights sum to 2
    (0.5 * sum, 0.5 * abs)
}

/// Mean of `f` over `[a, b]`: 8 nodes, doubled until the relative change is
/// below `1e-12` (relative to the mean of `|f|`), capped at 64 nodes.
pub fn average(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mut prev, _) = apply(0, &f, a, b);
    for idx in 1..RULES.len() {
        let (next, scale) = apply(idx, &f, a, b);
        if (next - prev).abs() <= 1e-12 * scale.max(next.abs()) {
            return next;
        }
        prev = next;
    }
    prev
}
