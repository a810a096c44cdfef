//! Small quadrature toolkit: Gauss–Legendre rules and tanh–sinh for
//! integrands with endpoint singularities.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            // Initial guess (Tricomi) then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
        GaussLegendre { nodes, weights }
    }

    /// Shared 8-point rule.
    pub fn order8() -> &'static GaussLegendre {
        static G: OnceLock<GaussLegendre> = OnceLock::new();
        G.get_or_init(|| GaussLegendre::new(8))
    }

    /// Shared 16-point rule.
    pub fn order16() -> &'static GaussLegendre {
        static G: OnceLock<GaussLegendre> = OnceLock::new();
        G.get_or_init(|| GaussLegendre::new(16))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Composite rule over `panels` equal panels.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let lo = a + i as f64 * h;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
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
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

struct TanhSinhRule {
    // (offset from the nearer endpoint on [-1,1] scale, weight), symmetric.
    center_weight: f64,
    pairs: Vec<(f64, f64)>,
    step: f64,
}

fn tanh_sinh_rule() -> &'static TanhSinhRule {
    static R: OnceLock<TanhSinhRule> = OnceLock::new();
    R.get_or_init(|| {
        let step = 1.0 / 16.0;
        let mut pairs = Vec::new();
        let half_pi = 0.5 * PI;
        let mut k = 1;
        loop {
            let t = k as f64 * step;
            let s = half_pi * t.sinh();
            let c = half_pi * t.cosh();
            // 1 - tanh(s) computed without cancellation.
            let e = (-2.0 * s).exp();
            let one_minus_x = 2.0 * e / (1.0 + e);
            let w = c / (s.cosh() * s.cosh());
            if w < 1e-300 || one_minus_x < 1e-300 {
                break;
            }
            pairs.push((one_minus_x, w));
            k += 1;
        }
        TanhSinhRule {
            center_weight: half_pi,
            pairs,
            step,
        }
    })
}

/// Tanh–sinh quadrature of `f` over `[a, b]`.
///
/// Nodes never touch the endpoints; integrable endpoint singularities such
/// as `ln|y − a|` are handled to near machine precision.
pub fn tanh_sinh<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    if b <= a {
        return 0.0;
    }
    let rule = tanh_sinh_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = rule.center_weight * f(mid);
    for &(omx, w) in &rule.pairs {
        let d = half * omx;
        if d <= 0.0 {
            break;
        }
        let (lo, hi) = (a + d, b - d);
        // Nodes that round onto an endpoint carry negligible weight.
        if lo > a {
            acc += w * f(lo);
        }
        if hi < b {
            acc += w * f(hi);
        }
    }
    acc * half * rule.step
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let g = GaussLegendre::new(8);
        let v = g.integrate(0.0, 2.0, |x| x.powi(15) - 3.0 * x * x);
        let exact = 2f64.powi(16) / 16.0 - 8.0;
        assert!((v - exact).abs() < 1e-9 * exact.abs());
        let s: f64 = g.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_log_singularity() {
        // ∫_0^1 ln x dx = -1
        let v = tanh_sinh(0.0, 1.0, |x| x.ln());
        assert!((v + 1.0).abs() < 1e-12, "{v}");
        // ∫_0^1 x ln(1-x) dx = -3/4
        let v = tanh_sinh(0.0, 1.0, |x| x * (1.0 - x).ln());
        assert!((v + 0.75).abs() < 1e-12, "{v}");
    }
}
