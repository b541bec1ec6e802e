//! Gauss–Legendre rules and composite integration on `[a, b]`.

use std::f64::consts::PI;

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are found by Newton iteration on the three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrate `f` over `[a, b]` with a single panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(mid + half * z))
            .sum::<f64>()
            * half
    }

    /// Integrate over consecutive panels given by `breaks`.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(&self, breaks: &[f64], mut f: F) -> f64 {
        breaks
            .windows(2)
            .map(|w| self.integrate(w[0], w[1], &mut f))
            .sum()
    }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Panel breaks on `[a, b]` that refine geometrically toward `a`.
///
/// The first `levels` panels shrink by `ratio` toward `a`; the rest of the
/// interval is split into `uniform` equal panels.
pub fn geometric_breaks(a: f64, b: f64, levels: usize, ratio: f64, uniform: usize) -> Vec<f64> {
    let len = b - a;
    let mut inner: Vec<f64> = (0..=levels).map(|l| a + len * ratio.powi((levels - l) as i32 + 1)).collect();
    inner.insert(0, a);
    let start = *inner.last().unwrap();
    let uniform = uniform.max(1);
    for i in 1..=uniform {
        inner.push(start + (b - start) * i as f64 / uniform as f64);
    }
    inner.dedup_by(|x, y| (*x - *y).abs() < f64::EPSILON * len);
    inner
}

/// Integrate over `[a, b]` with geometric refinement toward `a`, suited to
/// integrands with an integrable singularity or a boundary layer at `a`.
pub fn integrate_refined<F: FnMut(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let rule = GaussLegendre::new(16);
    let breaks = geometric_breaks(a, b, 40, 0.5, 32);
    rule.integrate_panels(&breaks, f)
}
