//! The three energy terms, the H^{1/2} seminorm by three routes (truncated
//! mode sum, real-space double integral, exact corner-pair sum) and the
//! harmonic extension into the austenite.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{l2_distance_sq, Configuration, SawtoothProfile};
use crate::quad::GaussLegendre;
use crate::special::cl3_minus_zeta3;

/// Default spectral cutoff.
pub const DEFAULT_CUTOFF: usize = 4096;
/// Default number of kernel images kept explicitly in the real-space route.
pub const DEFAULT_IMAGES: usize = 64;

/// Energy split of a configuration. `total` is the sum of the other three.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub austenite: f64,
    pub strain: f64,
    pub surface: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(austenite: f64, strain: f64, surface: f64) -> Self {
        EnergyBreakdown {
            austenite,
            strain,
            surface,
            total: austenite + strain + surface,
        }
    }

    /// Multiplies every term by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        EnergyBreakdown::new(self.austenite * s, self.strain * s, self.surface * s)
    }
}

/// A truncated mode sum together with an estimate of the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSum {
    pub value: f64,
    pub tail_estimate: f64,
    pub cutoff: usize,
}

/// `S_k = Σ_j Δ_j e^{-2πik y_j/h}` for `k = 1..=cutoff`.
///
/// Phasors advance by multiplication and are re-anchored every 64 steps.
pub fn corner_sums(p: &SawtoothProfile, cutoff: usize) -> Vec<Complex64> {
    let h = p.period();
    let mut out = vec![Complex64::new(0.0, 0.0); cutoff];
    for (j, &y) in p.corners().iter().enumerate() {
        let d = p.jump(j);
        let x = y / h;
        let step = Complex64::from_polar(1.0, -2.0 * PI * x);
        let mut z = step;
        for k in 1..=cutoff {
            if k % 64 == 0 {
                let ph = k as f64 * x;
                z = Complex64::from_polar(1.0, -2.0 * PI * (ph - ph.floor()));
            }
            out[k - 1] += d * z;
            z *= step;
        }
    }
    out
}

/// Fourier coefficients `û(k)` for `k = 1..=cutoff`.
pub fn fourier_coefficients(p: &SawtoothProfile, cutoff: usize) -> Vec<Complex64> {
    let h = p.period();
    corner_sums(p, cutoff)
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let k = (i + 1) as f64;
            s * (-h / (4.0 * PI * PI * k * k))
        })
        .collect()
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < 1 {
        return Err(Error::param("cutoff", "must be >= 1"));
    }
    Ok(())
}

/// `‖u‖²_{H^{1/2}} = 4π² Σ_k |k||û(k)|²` truncated at `|k| ≤ cutoff`.
///
/// The tail estimate is `8π²C² Σ_{k>K} k^{-3}` with `C = max k²|û(k)|`.
pub fn h_half_sq_fourier(p: &SawtoothProfile, cutoff: usize) -> Result<ModeSum> {
    check_cutoff(cutoff)?;
    let h = p.period();
    let s = corner_sums(p, cutoff);
    let pre = h * h / (2.0 * PI * PI);
    let mut value = 0.0;
    let mut cmax: f64 = 0.0;
    // small terms first
    for (i, sk) in s.iter().enumerate().rev() {
        let k = (i + 1) as f64;
        value += pre * sk.norm_sqr() / (k * k * k);
        cmax = cmax.max(sk.norm());
    }
    let c = h * cmax / (4.0 * PI * PI);
    let kf = cutoff as f64;
    let tail = 8.0 * PI * PI * c * c / (2.0 * kf * kf);
    Ok(ModeSum {
        value,
        tail_estimate: tail,
        cutoff,
    })
}

/// The bilinear form `4π² Σ_k |k| conj(f̂(k)) ĝ(k)` truncated at `cutoff`.
pub fn h_half_inner(f: &SawtoothProfile, g: &SawtoothProfile, cutoff: usize) -> Result<f64> {
    check_cutoff(cutoff)?;
    if (f.period() - g.period()).abs() > 1e-12 * f.period() {
        return Err(Error::param("period", "inner product needs equal periods"));
    }
    let fs = corner_sums(f, cutoff);
    let gs = corner_sums(g, cutoff);
    let h = f.period();
    let pre = h * h / (2.0 * PI * PI);
    let mut acc = 0.0;
    for i in (0..cutoff).rev() {
        let k = (i + 1) as f64;
        acc += pre * (fs[i].conj() * gs[i]).re / (k * k * k);
    }
    Ok(acc)
}

/// Exact `‖u‖²_{H^{1/2}}` from the corner-pair sum
/// `h²/(2π²) Σ_{j,l} Δ_jΔ_l Σ_{k≥1} cos(2πk(y_j−y_l)/h)/k³`.
///
/// The ζ(3) part of each term cancels because `ΣΔ_j = 0`.
pub fn h_half_sq_exact(p: &SawtoothProfile) -> f64 {
    let h = p.period();
    let ys = p.corners();
    let m = ys.len();
    let mut acc = 0.0;
    for j in 0..m {
        let dj = p.jump(j);
        let mut row = 0.0;
        for l in (j + 1)..m {
            row += p.jump(l) * cl3_minus_zeta3(2.0 * PI * (ys[l] - ys[j]) / h);
        }
        acc += dj * row;
    }
    h * h / (2.0 * PI * PI) * 2.0 * acc
}

/// `D(t) = ‖u(·+t) − u‖²_{L²(0,h)}` tabulated as a piecewise cubic on
/// `[0, h/2]` (it is exactly cubic between the corner differences and
/// symmetric about `h/2`).
#[derive(Debug, Clone)]
pub struct ShiftGram {
    period: f64,
    panels: Vec<GramPanel>,
}

#[derive(Debug, Clone)]
struct GramPanel {
    a: f64,
    b: f64,
    // D at s = 0, ℓ/3, 2ℓ/3, ℓ, or for the first panel D/s² at ℓ/2 and ℓ
    v: [f64; 4],
    first: bool,
}

impl GramPanel {
    fn eval(&self, t: f64) -> f64 {
        let l = self.b - self.a;
        let s = t - self.a;
        let tau = s / l;
        if self.first {
            let g = self.v[0] + (self.v[1] - self.v[0]) * (tau - 0.5) * 2.0;
            return s * s * g;
        }
        // Lagrange basis on 0, 1/3, 2/3, 1
        let (x0, x1, x2, x3) = (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0);
        let l0 = (tau - x1) * (tau - x2) * (tau - x3) / ((x0 - x1) * (x0 - x2) * (x0 - x3));
        let l1 = (tau - x0) * (tau - x2) * (tau - x3) / ((x1 - x0) * (x1 - x2) * (x1 - x3));
        let l2 = (tau - x0) * (tau - x1) * (tau - x3) / ((x2 - x0) * (x2 - x1) * (x2 - x3));
        let l3 = (tau - x0) * (tau - x1) * (tau - x2) / ((x3 - x0) * (x3 - x1) * (x3 - x2));
        self.v[0] * l0 + self.v[1] * l1 + self.v[2] * l2 + self.v[3] * l3
    }
}

/// `‖u(·+t) − u‖²_{L²(0,h)}` by exact piecewise integration.
pub fn shift_difference(p: &SawtoothProfile, t: f64) -> f64 {
    l2_distance_sq(&p.shifted(t), p, 0.0, p.period())
}

impl ShiftGram {
    pub fn new(p: &SawtoothProfile) -> Self {
        let h = p.period();
        let half = 0.5 * h;
        let ys = p.corners();
        let mut bps = vec![0.0, half];
        for &yi in ys {
            for &yj in ys {
                let mut d = (yi - yj).rem_euclid(h);
                if d > half {
                    d = h - d;
                }
                if d > 0.0 && d < half {
                    bps.push(d);
                }
            }
        }
        bps.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let tol = 1e-13 * h;
        let mut knots: Vec<f64> = Vec::with_capacity(bps.len());
        for b in bps {
            if knots.last().map_or(true, |&l| b - l > tol) {
                knots.push(b);
            }
        }
        if knots.last() != Some(&half) {
            let n = knots.len();
            knots[n - 1] = half;
        }
        let panels = knots
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (a, b) = (w[0], w[1]);
                let l = b - a;
                if i == 0 {
                    let s1 = 0.5 * l;
                    GramPanel {
                        a,
                        b,
                        v: [
                            shift_difference(p, a + s1) / (s1 * s1),
                            shift_difference(p, b) / (l * l),
                            0.0,
                            0.0,
                        ],
                        first: true,
                    }
                } else {
                    GramPanel {
                        a,
                        b,
                        v: [
                            shift_difference(p, a),
                            shift_difference(p, a + l / 3.0),
                            shift_difference(p, a + 2.0 * l / 3.0),
                            shift_difference(p, b),
                        ],
                        first: false,
                    }
                }
            })
            .collect();
        ShiftGram { period: h, panels }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn eval(&self, t: f64) -> f64 {
        let h = self.period;
        let mut t = t.rem_euclid(h);
        if t > 0.5 * h {
            t = h - t;
        }
        let i = self
            .panels
            .partition_point(|pn| pn.b < t)
            .min(self.panels.len() - 1);
        self.panels[i].eval(t)
    }

    /// `∫_0^h D(t) K(t) dt` for a kernel symmetric about `h/2`.
    ///
    /// Each panel is split into subpanels no wider than `max_width` (and at
    /// least `min_sub` of them); panels where `skip(a, b)` holds are dropped.
    pub fn integrate<K, S>(&self, kernel: K, max_width: f64, min_sub: usize, skip: S) -> f64
    where
        K: Fn(f64) -> f64,
        S: Fn(f64, f64) -> bool,
    {
        let g = GaussLegendre::order8();
        let mut acc = 0.0;
        for pn in &self.panels {
            let l = pn.b - pn.a;
            let n = ((l / max_width).ceil() as usize).max(min_sub).max(1);
            let w = l / n as f64;
            for i in 0..n {
                let lo = pn.a + i as f64 * w;
                let hi = if i + 1 == n { pn.b } else { lo + w };
                if skip(lo, hi) {
                    continue;
                }
                acc += g.integrate(lo, hi, |t| pn.eval(t) * kernel(t));
            }
        }
        2.0 * acc
    }
}

/// Periodized inverse-square kernel `Σ_n 1/(t + nh)²` with `|n| ≤ images`
/// and a midpoint tail estimate. Errors when the integral-comparison bracket
/// of the omitted tail exceeds `1e-4` of the value.
pub fn periodized_kernel(t: f64, h: f64, images: usize) -> Result<f64> {
    let mut acc = 0.0;
    for n in (1..=images).rev() {
        let nf = n as f64 * h;
        acc += 1.0 / ((t + nf) * (t + nf)) + 1.0 / ((t - nf) * (t - nf));
    }
    acc += 1.0 / (t * t);
    let nf = images as f64;
    // Σ_{n>N} f(n) for f(n) = 1/(nh ± t)² lies between ∫_{N+1}^∞ f and ∫_N^∞ f.
    let upper = 1.0 / (h * (nf * h + t)) + 1.0 / (h * (nf * h - t));
    let lower = 1.0 / (h * ((nf + 1.0) * h + t)) + 1.0 / (h * ((nf + 1.0) * h - t));
    // midpoint integral plus the first Euler–Maclaurin correction
    let (xp, xm) = ((nf + 0.5) * h + t, (nf + 0.5) * h - t);
    let mid = 1.0 / (h * xp) + 1.0 / (h * xm) - h / (12.0 * xp.powi(3)) - h / (12.0 * xm.powi(3));
    let value = acc + mid;
    if !(upper - lower <= 1e-4 * value) {
        return Err(Error::no_conv(
            "periodized kernel",
            format!("tail bracket {} too wide at {} images", upper - lower, images),
        ));
    }
    Ok(value)
}

/// `∫_0^h∫_R |u(y) − u(y')|²/|y − y'|² dy'dy` evaluated as
/// `∫_0^h D(t) Σ_n (t+nh)^{-2} dt` with `D` exact, on about `quad_nodes`
/// Gauss nodes.
pub fn h_half_sq_realspace(p: &SawtoothProfile, quad_nodes: usize) -> Result<f64> {
    h_half_sq_realspace_with(p, quad_nodes, DEFAULT_IMAGES)
}

/// [`h_half_sq_realspace`] with an explicit image count.
pub fn h_half_sq_realspace_with(p: &SawtoothProfile, quad_nodes: usize, images: usize) -> Result<f64> {
    if quad_nodes < 64 {
        return Err(Error::param("quad_nodes", "must be >= 64"));
    }
    let h = p.period();
    periodized_kernel(0.25 * h, h, images)?;
    let gram = ShiftGram::new(p);
    let width = 0.5 * h / (quad_nodes as f64 / 8.0);
    let val = gram.integrate(
        |t| periodized_kernel(t, h, images).unwrap_or(f64::NAN),
        width,
        1,
        |_, _| false,
    );
    if !val.is_finite() {
        return Err(Error::no_conv("real-space seminorm", "kernel tail bound failed"));
    }
    Ok(val)
}

/// `Σ_j (x_{j+1} − x_j)^{-1} ‖p_{j+1} − p_j‖²_{L²(0,h)}`.
pub fn strain_energy(config: &Configuration) -> f64 {
    let h = config.params().height();
    strain_energy_window(config, 0.0, h)
}

/// Strain energy restricted to the y-window `[a, b]`.
pub fn strain_energy_window(config: &Configuration, a: f64, b: f64) -> f64 {
    let xs = config.stations();
    let ps = config.profiles();
    (0..xs.len() - 1)
        .map(|j| l2_distance_sq(&ps[j + 1], &ps[j], a, b) / (xs[j + 1] - xs[j]))
        .sum()
}

/// `ε Σ_j Δx_j max(N_j, N_{j+1})`.
pub fn surface_energy(config: &Configuration) -> f64 {
    let xs = config.stations();
    let ps = config.profiles();
    let eps = config.params().epsilon();
    eps * (0..xs.len() - 1)
        .map(|j| {
            let n = ps[j].interface_count().max(ps[j + 1].interface_count());
            (xs[j + 1] - xs[j]) * n as f64
        })
        .sum::<f64>()
}

/// Energy with the austenite term from the truncated mode sum.
pub fn total_energy(config: &Configuration, cutoff: usize) -> Result<EnergyBreakdown> {
    let beta = config.params().beta();
    let aus = beta * h_half_sq_fourier(config.u0(), cutoff)?.value;
    Ok(EnergyBreakdown::new(aus, strain_energy(config), surface_energy(config)))
}

/// Energy with the austenite term from the exact corner-pair sum.
pub fn total_energy_exact(config: &Configuration) -> EnergyBreakdown {
    let beta = config.params().beta();
    let aus = beta * h_half_sq_exact(config.u0());
    EnergyBreakdown::new(aus, strain_energy(config), surface_energy(config))
}

/// The harmonic extension `ψ` of the boundary trace into `x < 0`, truncated
/// at `|k| ≤ cutoff`.
#[derive(Debug, Clone)]
pub struct AusteniteField {
    boundary: SawtoothProfile,
    cutoff: usize,
    mean: f64,
    coeffs: Vec<Complex64>,
}

/// One `±k` mode pair: the Dirichlet integral `2π∫∫|∇ψ_k|²` and the
/// spectral form `4π²·2|k||û(k)|²` (both without β).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEnergy {
    pub k: usize,
    pub dirichlet: f64,
    pub spectral: f64,
}

impl AusteniteField {
    pub fn new(boundary: SawtoothProfile, cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        let coeffs = fourier_coefficients(&boundary, cutoff);
        let mean = boundary.mean();
        Ok(AusteniteField {
            boundary,
            cutoff,
            mean,
            coeffs,
        })
    }

    pub fn boundary(&self) -> &SawtoothProfile {
        &self.boundary
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// `ψ(x, y)` for `x ≤ 0`.
    pub fn psi(&self, x: f64, y: f64) -> f64 {
        let h = self.boundary.period();
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            let k = (i + 1) as f64;
            let decay = (2.0 * PI * k * x / h).exp();
            let ph = Complex64::from_polar(1.0, 2.0 * PI * k * y / h);
            acc += 2.0 * (c * ph).re * decay;
        }
        self.mean + acc
    }

    /// `∇ψ(x, y)` for `x ≤ 0`.
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let h = self.boundary.period();
        let (mut gx, mut gy) = (0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            let k = (i + 1) as f64;
            let w = 2.0 * PI * k / h;
            let decay = (w * x).exp();
            let z = c * Complex64::from_polar(1.0, w * y) * decay;
            gx += 2.0 * w * z.re;
            gy += 2.0 * (Complex64::new(0.0, w) * z).re;
        }
        (gx, gy)
    }

    /// Per-mode Dirichlet and spectral energies.
    pub fn mode_energies(&self) -> Vec<ModeEnergy> {
        let h = self.boundary.period();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = (i + 1) as f64;
                let kx = 2.0 * PI * k / h;
                let ky = 2.0 * PI * k / h;
                let a2 = c.norm_sqr();
                // ∫_0^h |∇ψ_{±k}|² dy = 2h|û|²(kx²+ky²)e^{2kx·x}; ∫_{-∞}^0 e^{2kx·x} = 1/(2kx)
                let dirichlet = 2.0 * PI * (2.0 * h * a2 * (kx * kx + ky * ky) / (2.0 * kx));
                let spectral = 4.0 * PI * PI * 2.0 * k * a2;
                ModeEnergy {
                    k: i + 1,
                    dirichlet,
                    spectral,
                }
            })
            .collect()
    }
}

/// `2πβ∫_{-∞}^0∫_0^h|∇ψ|²` by the mode-wise closed form.
pub fn austenite_energy(field: &AusteniteField, beta: f64) -> f64 {
    beta * field
        .mode_energies()
        .iter()
        .rev()
        .map(|m| m.dirichlet)
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{random_profile, ModelParams};
    use crate::special::c0;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(m: usize) -> SawtoothProfile {
        let cs: Vec<f64> = (0..m).map(|j| j as f64 / m as f64).collect();
        SawtoothProfile::new(1.0, 0.0, 1, cs).unwrap()
    }

    #[test]
    fn w2_half_norm_is_half_c0() {
        let v = h_half_sq_fourier(&w(2), 4096).unwrap();
        assert!((v.value - 0.5 * c0()).abs() < 1e-6);
        assert!((h_half_sq_exact(&w(2)) - 0.5 * c0()).abs() < 1e-13);
        assert!((h_half_sq_exact(&w(4)) - 0.25 * c0()).abs() < 1e-13);
    }

    #[test]
    fn amplitude_scaling_is_quadratic() {
        // λ-scaled corner data: û scales by λ when h scales by λ with λu(y/λ).
        let p = w(2);
        let q = SawtoothProfile::new(3.0, 0.0, 1, vec![0.0, 1.5]).unwrap();
        let a = h_half_sq_fourier(&p, 2048).unwrap().value;
        let b = h_half_sq_fourier(&q, 2048).unwrap().value;
        assert!((b / a - 9.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_w2_inner_is_negative() {
        let p = w(2);
        let q = p.translated(0.5);
        let v = h_half_inner(&p, &q, 4096).unwrap();
        let n = h_half_sq_fourier(&p, 4096).unwrap().value;
        assert!((v + n).abs() < 1e-12, "{v} {n}");
    }

    #[test]
    fn exact_matches_modes_on_random_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let p = random_profile(&mut rng, 1.0, 16);
            let f = h_half_sq_fourier(&p, 1 << 15).unwrap();
            let e = h_half_sq_exact(&p);
            assert!((f.value - e).abs() <= f.tail_estimate + 1e-12, "{} {}", f.value, e);
        }
    }

    #[test]
    fn realspace_translation_invariant() {
        let p = w(6);
        let a = h_half_sq_realspace(&p, 1024).unwrap();
        let b = h_half_sq_realspace(&p.translated(0.123), 1024).unwrap();
        assert!((a - b).abs() < 1e-10 * a);
        assert!((a - c0() / 6.0).abs() < 1e-8);
    }

    #[test]
    fn kernel_images_match_closed_form() {
        for &t in &[0.01, 0.3, 0.5, 0.77] {
            let k = periodized_kernel(t, 1.0, 64).unwrap();
            let exact = PI * PI / (PI * t).sin().powi(2);
            assert!((k - exact).abs() < 1e-9 * exact, "{t} {}", (k - exact) / exact);
        }
        assert!(periodized_kernel(0.3, 1.0, 4).unwrap_err().is_non_convergence());
    }

    #[test]
    fn shift_gram_reproduces_direct_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_profile(&mut rng, 1.0, 10);
        let g = ShiftGram::new(&p);
        for i in 1..50 {
            let t = i as f64 / 50.0;
            let d = shift_difference(&p, t);
            assert!((g.eval(t) - d).abs() < 1e-12, "{t}");
        }
    }

    #[test]
    fn energy_parts() {
        let params = ModelParams::new(0.0, 0.01, 1.0, 1.0).unwrap();
        let c = Configuration::uniform(params, w(2), 5).unwrap();
        let e = total_energy(&c, 4096).unwrap();
        assert_eq!(e.strain, 0.0);
        assert!((e.total - 0.02).abs() < 1e-15);
        let params = ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let c = Configuration::new(
            params,
            vec![0.0, 0.5, 1.0],
            vec![w(2), w(4), w(2)],
        )
        .unwrap();
        assert!((surface_energy(&c) - 4.0).abs() < 1e-15);
        let c = Configuration::new(params, vec![0.0, 1.0], vec![w(2), w(2).raised(0.3)]).unwrap();
        assert!((strain_energy(&c) - 0.09).abs() < 1e-15);
    }

    #[test]
    fn austenite_trace_and_dirichlet_integral() {
        let f = AusteniteField::new(w(2), 16).unwrap();
        // ψ(0, y) ≈ u(y) up to truncation
        for i in 0..10 {
            let y = 0.05 + i as f64 * 0.1;
            assert!((f.psi(0.0, y) - w(2).evaluate(y)).abs() < 2e-3);
        }
        // Numerical ∫∫|∇ψ|² over x ∈ [-2, 0] against the closed form.
        let g = GaussLegendre::new(24);
        let ny = 256;
        let num: f64 = (0..16)
            .map(|i| {
                let (a, b) = (-2.0 + i as f64 * 0.125, -2.0 + (i + 1) as f64 * 0.125);
                g.integrate(a, b, |x| {
                    (0..ny)
                        .map(|j| {
                            let y = (j as f64 + 0.5) / ny as f64;
                            let (gx, gy) = f.gradient(x, y);
                            gx * gx + gy * gy
                        })
                        .sum::<f64>()
                        / ny as f64
                })
            })
            .sum();
        let closed = austenite_energy(&f, 1.0);
        assert!((2.0 * PI * num - closed).abs() < 1e-6 * closed, "{} {}", 2.0 * PI * num, closed);
    }
}
