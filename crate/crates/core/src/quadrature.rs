//! Fixed-order Gauss–Legendre rules, applied panel-wise on finite intervals.

use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[-1, 1]`; nodes by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b f` using the rule on each of `panels` equal sub-intervals.
    pub fn integrate<T: Real, F: FnMut(T) -> T>(&self, a: T, b: T, panels: usize, mut f: F) -> T {
        let panels = panels.max(1);
        let h = (b - a) / T::from_usize_lossy(panels);
        let half = h * T::lit(0.5);
        let mut total = T::zero();
        for p in 0..panels {
            let mid = a + h * (T::from_usize_lossy(p) + T::lit(0.5));
            let mut s = T::zero();
            for (&x, &w) in self.nodes.iter().zip(&self.weights) {
                s += T::lit(w) * f(mid + half * T::lit(x));
            }
            total += s * half;
        }
        total
    }

    /// Absolute nodes and weights of the composite rule on `[a, b]`.
    pub fn composite<T: Real>(&self, a: T, b: T, panels: usize) -> (Vec<T>, Vec<T>) {
        let panels = panels.max(1);
        let h = (b - a) / T::from_usize_lossy(panels);
        let half = h * T::lit(0.5);
        let mut xs = Vec::with_capacity(panels * self.nodes.len());
        let mut ws = Vec::with_capacity(panels * self.nodes.len());
        for p in 0..panels {
            let mid = a + h * (T::from_usize_lossy(p) + T::lit(0.5));
            for (&x, &w) in self.nodes.iter().zip(&self.weights) {
                xs.push(mid + half * T::lit(x));
                ws.push(half * T::lit(w));
            }
        }
        (xs, ws)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
