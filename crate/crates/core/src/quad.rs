//! Composite Gauss-Legendre quadrature on real intervals with complex
//! integrands of the form `u^z * f(u)`.

use num_complex::Complex64;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Computed by Newton iteration on the Legendre polynomial from Chebyshev
/// initial guesses; accurate to machine precision for the node counts used
/// here (n <= 64).
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "rule order must be positive");
    let mut rule = Vec::with_capacity(n);
    let m = n.div_ceil(2);
    for k in 0..m {
        // Chebyshev guess for the k-th positive root.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let step = p / d;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
        if !(n % 2 == 1 && k == m - 1) {
            rule.push((-x, w));
        }
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed set of quadrature abscissae over a partitioned interval, with the
/// integrand's smooth factor pre-evaluated at every node.
///
/// The same node set is reused for many exponents `z`, so per-node state
/// (position, log-position, weight, cached factor value) is laid out once.
#[derive(Debug, Clone)]
pub struct CachedNodes {
    u: Vec<f64>,
    ln_u: Vec<f64>,
    weight: Vec<f64>,
    factor: Vec<f64>,
}

impl CachedNodes {
    /// Build composite Gauss-Legendre nodes over `[a, b]` split at the given
    /// breakpoints (which must start at a and end at b, strictly increasing),
    /// refined to at least `min_panels` panels of `nodes_per_panel` points,
    /// and evaluate `f` at each node.
    pub fn build(
        breakpoints: &[f64],
        min_panels: usize,
        nodes_per_panel: usize,
        f: impl Fn(f64) -> f64,
    ) -> Self {
        assert!(breakpoints.len() >= 2);
        let a = breakpoints[0];
        let b = *breakpoints.last().unwrap();
        assert!(b > a);
        let base = gauss_legendre(nodes_per_panel);

        // Distribute subdivisions proportionally to segment length so the
        // total panel count reaches min_panels.
        let nseg = breakpoints.len() - 1;
        let total = b - a;
        let mut panels: Vec<(f64, f64)> = Vec::new();
        for s in 0..nseg {
            let (lo, hi) = (breakpoints[s], breakpoints[s + 1]);
            let want = (((hi - lo) / total) * min_panels as f64).ceil() as usize;
            let sub = want.max(1);
            for k in 0..sub {
                let t0 = lo + (hi - lo) * k as f64 / sub as f64;
                let t1 = lo + (hi - lo) * (k + 1) as f64 / sub as f64;
                panels.push((t0, t1));
            }
        }

        let mut u = Vec::with_capacity(panels.len() * nodes_per_panel);
        let mut weight = Vec::with_capacity(panels.len() * nodes_per_panel);
        for &(lo, hi) in &panels {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            for &(x, w) in &base {
                u.push(mid + half * x);
                weight.push(half * w);
            }
        }
        let ln_u = u.iter().map(|&x| x.ln()).collect();
        let factor = u.iter().map(|&x| f(x)).collect();
        CachedNodes {
            u,
            ln_u,
            weight,
            factor,
        }
    }

    /// Evaluate `∫ u^z · factor(u) du` over the cached partition.
    pub fn integrate_power(&self, z: Complex64) -> Complex64 {
        // Complex Kahan summation; the integrand oscillates for large Im z
        // and the compensated sum keeps the cancellation benign.
        let mut sum = Complex64::new(0.0, 0.0);
        let mut comp = Complex64::new(0.0, 0.0);
        for i in 0..self.u.len() {
            let term = (z * self.ln_u[i]).exp() * (self.factor[i] * self.weight[i]);
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}
