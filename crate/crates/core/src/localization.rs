//! Localized lower bound around a candidate striped state: the Hilbert
//! transform of slopes, a BMO estimate, the interval partition generated by
//! the trace at `x = L`, the two-corner comparison function, interval
//! classification and the resulting certificate.
//!
//! Everything except the spectral helpers works on the unit square
//! (`h = L = 1`); [`classify_intervals`] and [`certificate_check`] rescale
//! their input first.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::h_half_inner;
use crate::error::{Error, Result};
use crate::one_dim::e1d;
use crate::profile::{l2_distance, l2_distance_sq, reduce, Configuration, SawtoothProfile};
use crate::quad::{tanh_sinh, GaussLegendre};
use crate::special::c0;

/// Default η in the type-1 strain test `F̃⁽¹⁾ ≤ η/M³`.
pub const DEFAULT_ETA: f64 = 1e-3;
/// Default κ in the type-1 gap test `min h_j ≥ κ/M`.
pub const DEFAULT_KAPPA: f64 = 0.1;

/// Trigonometric polynomial `Σ_{|k|≤K} c_k e^{2πiky/h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSignal {
    period: f64,
    cutoff: usize,
    // index k + cutoff
    coeffs: Vec<Complex64>,
}

impl SpectralSignal {
    /// `coeffs[i]` is the coefficient of mode `i − K`; the length must be odd.
    pub fn from_coefficients(period: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::param("coeffs", "need an odd number of modes -K..=K"));
        }
        Ok(SpectralSignal {
            period,
            cutoff: coeffs.len() / 2,
            coeffs,
        })
    }

    /// Fourier coefficients of a profile up to `|k| ≤ cutoff`.
    pub fn from_profile(p: &SawtoothProfile, cutoff: usize) -> Self {
        let pos = crate::energy::fourier_coefficients(p, cutoff);
        let mut coeffs = Vec::with_capacity(2 * cutoff + 1);
        coeffs.extend(pos.iter().rev().map(|c| c.conj()));
        coeffs.push(Complex64::new(p.mean(), 0.0));
        coeffs.extend(pos);
        SpectralSignal {
            period: p.period(),
            cutoff,
            coeffs,
        }
    }

    /// Discrete Fourier coefficients of equispaced samples `f(jh/N)`.
    pub fn from_samples(period: f64, samples: &[f64], cutoff: usize) -> Result<Self> {
        let n = samples.len();
        if n < 2 * cutoff + 1 {
            return Err(Error::param("samples", "need at least 2K+1 samples"));
        }
        let coeffs = (-(cutoff as i64)..=cutoff as i64)
            .map(|k| {
                samples
                    .iter()
                    .enumerate()
                    .map(|(j, &f)| {
                        let ph = (k * j as i64).rem_euclid(n as i64) as f64 / n as f64;
                        f * Complex64::from_polar(1.0, -2.0 * PI * ph)
                    })
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect();
        Ok(SpectralSignal {
            period,
            cutoff,
            coeffs,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn coefficient(&self, k: i64) -> Complex64 {
        let i = k + self.cutoff as i64;
        if i < 0 || i as usize >= self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[i as usize]
        }
    }

    pub fn derivative(&self) -> SpectralSignal {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = i as f64 - self.cutoff as f64;
                c * Complex64::new(0.0, 2.0 * PI * k / self.period)
            })
            .collect();
        SpectralSignal { coeffs, ..*self }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let mut acc = self.coefficient(0).re;
        for k in (1..=self.cutoff as i64).rev() {
            let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * y / self.period);
            acc += 2.0 * (self.coefficient(k) * z).re;
        }
        acc
    }
}

/// Applies the multiplier `2π(−i sign k)`; the mean is dropped.
pub fn hilbert_transform(f: &SpectralSignal) -> SpectralSignal {
    let coeffs = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = i as i64 - f.cutoff as i64;
            c * Complex64::new(0.0, -2.0 * PI * k.signum() as f64)
        })
        .collect();
    SpectralSignal { coeffs, ..*f }
}

/// `(Hw')(y) = 2Σ_j Δ_j ln|sin(π(y − y_j)/h)|`, the closed form of the
/// Hilbert transform of the slope of a sawtooth.
pub fn hilbert_of_slope(w: &SawtoothProfile, y: f64) -> f64 {
    let h = w.period();
    2.0 * w
        .corners()
        .iter()
        .enumerate()
        .map(|(j, &c)| w.jump(j) * (PI * (y - c) / h).sin().abs().ln())
        .sum::<f64>()
}

// A node that lands exactly on a logarithmic singularity is a null set.
fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Both sides of `(w, g)_{H^{1/2}} = (Hw', g)_{L²}` for `g = u₀ − w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingCheck {
    pub spectral: f64,
    pub realspace: f64,
    pub rel_diff: f64,
}

fn breakpoints(window: (f64, f64), profiles: &[&SawtoothProfile]) -> Vec<f64> {
    let (a, b) = window;
    let mut pts = vec![a, b];
    for p in profiles {
        let h = p.period();
        for &c in p.corners() {
            let mut y = a + reduce(c - a, h);
            while y < b {
                if y > a {
                    pts.push(y);
                }
                y += h;
            }
        }
    }
    pts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    pts.dedup();
    pts
}

/// `∫_a^b (Hw')(u₀ − w)` by tanh–sinh between the corners of both profiles.
pub fn hilbert_pairing_window(w: &SawtoothProfile, u0: &SawtoothProfile, a: f64, b: f64) -> f64 {
    breakpoints((a, b), &[w, u0])
        .windows(2)
        .map(|c| tanh_sinh(c[0], c[1], |y| finite_or_zero(hilbert_of_slope(w, y) * (u0.evaluate(y) - w.evaluate(y)))))
        .sum()
}

/// Evaluates the pairing identity with `cutoff` modes on the spectral side.
pub fn hilbert_pairing(w: &SawtoothProfile, u0: &SawtoothProfile, cutoff: usize) -> Result<PairingCheck> {
    let spectral = h_half_inner(w, u0, cutoff)? - h_half_inner(w, w, cutoff)?;
    let realspace = hilbert_pairing_window(w, u0, 0.0, w.period());
    let scale = spectral.abs().max(realspace.abs()).max(1e-300);
    Ok(PairingCheck {
        spectral,
        realspace,
        rel_diff: (spectral - realspace).abs() / scale,
    })
}

/// Resolution of the subinterval family in [`bmo_seminorm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmoOptions {
    /// Dyadic levels; the finest width is `|window|/2^levels`.
    pub levels: usize,
    /// Sliding offsets per level.
    pub offsets: usize,
    /// Uniform quadrature cells across the window.
    pub cells: usize,
}

impl Default for BmoOptions {
    fn default() -> Self {
        BmoOptions {
            levels: 8,
            offsets: 64,
            cells: 2048,
        }
    }
}

/// Largest root-mean-square oscillation found, with the running maximum
/// after each level (nondecreasing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmoEstimate {
    pub value: f64,
    pub per_level: Vec<f64>,
    pub family_size: usize,
}

/// Lower estimate of `sup_{(a,b)⊂window} (mean of |g − mean g|² over (a,b))^{1/2}`.
///
/// Means are taken from exact-to-quadrature prefix integrals on a grid that
/// contains `singular` (integrable singularities of `g`); subinterval ends
/// snap to grid nodes. The full window is always part of the family.
pub fn bmo_seminorm<G: Fn(f64) -> f64 + Sync>(
    g: G,
    window: (f64, f64),
    singular: &[f64],
    opts: BmoOptions,
) -> BmoEstimate {
    let (a, b) = window;
    let n = opts.cells.max(1);
    let mut nodes: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    nodes[n] = b;
    let mut sing: Vec<f64> = singular.iter().cloned().filter(|&s| s > a && s < b).collect();
    nodes.extend(&sing);
    nodes.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    nodes.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (b - a));
    sing.push(a);
    sing.push(b);
    let g = |y: f64| finite_or_zero(g(y));
    let gl = GaussLegendre::order16();
    let cell_ints: Vec<(f64, f64)> = nodes
        .par_windows(2)
        .map(|c| {
            let touches = sing
                .iter()
                .any(|&s| (s - c[0]).abs() <= 1e-14 * (b - a) || (s - c[1]).abs() <= 1e-14 * (b - a));
            if touches {
                (tanh_sinh(c[0], c[1], &g), tanh_sinh(c[0], c[1], |y| g(y).powi(2)))
            } else {
                (gl.integrate(c[0], c[1], &g), gl.integrate(c[0], c[1], |y| g(y).powi(2)))
            }
        })
        .collect();
    let mut p1 = vec![0.0; nodes.len()];
    let mut p2 = vec![0.0; nodes.len()];
    for (i, (i1, i2)) in cell_ints.iter().enumerate() {
        p1[i + 1] = p1[i] + i1;
        p2[i + 1] = p2[i] + i2;
    }
    let snap = |y: f64| -> usize {
        let i = nodes.partition_point(|&x| x < y);
        if i == 0 {
            0
        } else if i >= nodes.len() {
            nodes.len() - 1
        } else if y - nodes[i - 1] < nodes[i] - y {
            i - 1
        } else {
            i
        }
    };
    let osc = |s: usize, e: usize| -> f64 {
        if e <= s {
            return 0.0;
        }
        let len = nodes[e] - nodes[s];
        let mean = (p1[e] - p1[s]) / len;
        ((p2[e] - p2[s]) / len - mean * mean).max(0.0)
    };
    let mut best = osc(0, nodes.len() - 1);
    let mut per_level = vec![best.sqrt()];
    let mut family = 1;
    for level in 1..=opts.levels {
        let width = (b - a) / (1u64 << level) as f64;
        for i in 0..(1usize << level) {
            let s = a + i as f64 * width;
            best = best.max(osc(snap(s), snap(s + width)));
            family += 1;
        }
        for j in 0..opts.offsets {
            let s = a + (b - a - width) * j as f64 / (opts.offsets.max(2) - 1) as f64;
            best = best.max(osc(snap(s), snap(s + width)));
            family += 1;
        }
        per_level.push(best.sqrt());
    }
    BmoEstimate {
        value: best.sqrt(),
        per_level,
        family_size: family,
    }
}

/// Intervals `I_k = [a_k, a_{k+1})` with `a_k` the midpoint of the k-th
/// `+1` segment `(z_{2k}, z_{2k+1})` of the generating profile.
///
/// Corner ordinates are unwrapped: `z_j` for any integer `j` is
/// `z_{j mod M} + h·⌊j/M⌋`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalPartition {
    period: f64,
    z: Vec<f64>,
    midpoints: Vec<f64>,
}

impl IntervalPartition {
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Corner count `M` of the generating profile.
    pub fn corner_count(&self) -> usize {
        self.z.len()
    }

    /// Number of intervals, `M/2`.
    pub fn len(&self) -> usize {
        self.z.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn corner(&self, j: i64) -> f64 {
        let m = self.z.len() as i64;
        self.z[j.rem_euclid(m) as usize] + self.period * j.div_euclid(m) as f64
    }

    /// `a_k` for any integer `k`.
    pub fn midpoint(&self, k: i64) -> f64 {
        0.5 * (self.corner(2 * k) + self.corner(2 * k + 1))
    }

    /// Midpoints `a_0 … a_{M/2−1}`.
    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    /// `(a_k, a_{k+1})`.
    pub fn interval(&self, k: i64) -> (f64, f64) {
        (self.midpoint(k), self.midpoint(k + 1))
    }

    /// `H_k`.
    pub fn width(&self, k: i64) -> f64 {
        let (a, b) = self.interval(k);
        b - a
    }

    pub fn widths(&self) -> Vec<f64> {
        (0..self.len() as i64).map(|k| self.width(k)).collect()
    }

    /// Gap `h_j = z_{j+1} − z_j` of the generating profile.
    pub fn gap(&self, j: i64) -> f64 {
        self.corner(j + 1) - self.corner(j)
    }

    /// `I*_k`: from the middle of `(z_{2k−1}, z_{2k})` to the middle of
    /// `(z_{2k+3}, z_{2k+4})`.
    pub fn star(&self, k: i64) -> (f64, f64) {
        let s = 0.5 * (self.corner(2 * k - 1) + self.corner(2 * k));
        let e = 0.5 * (self.corner(2 * k + 3) + self.corner(2 * k + 4));
        (s, e.min(s + self.period))
    }

    /// `I**_k = I_{k−1} ∪ I_k ∪ I_{k+1}`, at most one period long.
    pub fn double_star(&self, k: i64) -> (f64, f64) {
        let s = self.midpoint(k - 1);
        let e = self.midpoint(k + 2);
        (s, e.min(s + self.period))
    }

    /// The same partition for `y ↦ s·y`.
    pub fn rescaled(&self, s: f64) -> IntervalPartition {
        IntervalPartition {
            period: self.period * s,
            z: self.z.iter().map(|z| z * s).collect(),
            midpoints: self.midpoints.iter().map(|a| a * s).collect(),
        }
    }
}

/// Partition generated by `u1`; needs at least four corners.
pub fn build_partition(u1: &SawtoothProfile) -> Result<IntervalPartition> {
    let m = u1.interface_count();
    if m < 4 {
        return Err(Error::InvalidProfile(format!(
            "partition needs at least 4 corners, got {m}"
        )));
    }
    let h = u1.period();
    let i0 = if u1.slope_after(0) > 0.0 { 0 } else { 1 };
    let z: Vec<f64> = (0..m)
        .map(|j| {
            let i = i0 + j;
            u1.corners()[i % m] + h * (i / m) as f64
        })
        .collect();
    let mut part = IntervalPartition {
        period: h,
        z,
        midpoints: vec![],
    };
    part.midpoints = (0..part.len() as i64).map(|k| part.midpoint(k)).collect();
    Ok(part)
}

/// The sawtooth `w` with two corners `z̃_{2k+1} ≤ z̃_{2k+2}` in each `I_k`,
/// matching `u₀` in value and with slope `+1` at every `a_k` and with the
/// same integral over every `I_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonProfile {
    profile: SawtoothProfile,
    pairs: Vec<(f64, f64)>,
}

impl ComparisonProfile {
    pub fn profile(&self) -> &SawtoothProfile {
        &self.profile
    }

    /// `(z̃_{2k+1}, z̃_{2k+2})` per interval, unwrapped like the partition.
    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    /// `z̃_j` for any integer `j` (the pair of `I_k` is `j = 2k+1, 2k+2`).
    pub fn corner(&self, j: i64) -> f64 {
        let m = 2 * self.pairs.len() as i64;
        let i = (j - 1).rem_euclid(m) as usize;
        let base = if i % 2 == 0 { self.pairs[i / 2].0 } else { self.pairs[i / 2].1 };
        base + self.profile.period() * (j - 1).div_euclid(m) as f64
    }

    /// Virtual gaps `h̃_j = z̃_{j+1} − z̃_j`, `j = 0..M`; zero for a
    /// coincident pair.
    pub fn virtual_gaps(&self) -> Vec<f64> {
        (0..2 * self.pairs.len() as i64)
            .map(|j| self.corner(j + 1) - self.corner(j))
            .collect()
    }
}

/// Solves the area-matching condition on every interval. The area of the
/// two-corner candidate is linear in the position of its first corner.
pub fn build_comparison(u0: &SawtoothProfile, part: &IntervalPartition) -> Result<ComparisonProfile> {
    if (u0.period() - part.period()).abs() > 1e-12 * part.period() {
        return Err(Error::param("period", "profile and partition periods differ"));
    }
    let tol = 1e-10 * part.period();
    let mut pairs = Vec::with_capacity(part.len());
    for k in 0..part.len() as i64 {
        let (a, b) = part.interval(k);
        let hk = b - a;
        let (ua, ub) = (u0.evaluate(a), u0.evaluate(b));
        let d = 0.5 * (hk - (ub - ua));
        if d < -tol || d > hk + tol {
            return Err(Error::InvalidConfiguration(format!(
                "interval {k}: boundary values are not 1-Lipschitz"
            )));
        }
        let d = d.clamp(0.0, hk);
        if d <= 1e-14 * part.period() {
            let mid = 0.5 * (a + b);
            pairs.push((mid, mid));
            continue;
        }
        let area = u0.integral(a, b);
        let c0 = ua * hk + 0.5 * hk * hk - d * d - 2.0 * d * (b - d);
        let z1 = (area - c0) / (2.0 * d);
        if z1 < a - tol || z1 > b - d + tol {
            return Err(Error::InvalidConfiguration(format!(
                "interval {k}: area condition has no admissible solution"
            )));
        }
        let z1 = z1.clamp(a, b - d);
        pairs.push((z1, z1 + d));
    }
    let corners: Vec<f64> = pairs.iter().flat_map(|&(p, q)| [p, q]).collect();
    let a0 = part.midpoint(0);
    let profile = SawtoothProfile::from_anchor(part.period(), a0, u0.evaluate(a0), 1, &corners)?;
    Ok(ComparisonProfile { profile, pairs })
}

/// Per-interval residuals of the three defining conditions: value mismatch
/// at `a_k`, deviation of the boundary slopes from `+1`, and `∫_{I_k}(w−u₀)`.
pub fn comparison_residuals(
    u0: &SawtoothProfile,
    cmp: &ComparisonProfile,
    part: &IntervalPartition,
) -> Vec<[f64; 3]> {
    let w = cmp.profile();
    let h = part.period();
    (0..part.len() as i64)
        .map(|k| {
            let (a, b) = part.interval(k);
            let value = (w.evaluate(a) - u0.evaluate(a)).abs().max((w.evaluate(b) - u0.evaluate(b)).abs());
            let (z1, z2) = cmp.pairs()[k as usize];
            // slope +1 right after a and right before b unless a corner sits there
            let right = if z1 - a > 1e-12 * h { (w.slope_at(a) - 1.0).abs() } else { 2.0 };
            let left = if b - z2 > 1e-12 * h {
                (w.slope_at(0.5 * (z2 + b)) - 1.0).abs()
            } else {
                2.0
            };
            let area = (w.integral(a, b) - u0.integral(a, b)).abs();
            [value, right.max(left), area]
        })
        .collect()
}

/// Interval class: 1 is good, 2 has a short gap, 3 carries too much strain,
/// 4 is too wide (checked in the order 4, 3, 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalType {
    Type1,
    Type2,
    Type3,
    Type4,
}

/// Local share `F̃_k = F̃⁽⁰⁾ + F̃⁽¹⁾ + F̃⁽²⁾` of the excess energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTerms {
    pub k: usize,
    /// `(βc₀/7) Σ_{j=2k−2}^{2k+4} (h̃_j − 1/M)²`.
    pub f0: f64,
    /// `(1/3)∫∫_{I**_k} u_x²`.
    pub f1: f64,
    /// `(ε/2)∫(N|_{I*_k} − 4)dx`.
    pub f2: f64,
    pub total: f64,
    pub kind: IntervalType,
}

/// Number of corners of `p` in the arc `[s, e)`, `e − s ≤ h`.
fn corners_in_arc(p: &SawtoothProfile, s: f64, e: f64) -> usize {
    let h = p.period();
    let len = e - s;
    p.corners()
        .iter()
        .filter(|&&c| reduce(c - s, h) < len || len >= h)
        .count()
}

fn strain_in_window(c: &Configuration, a: f64, b: f64) -> f64 {
    let xs = c.stations();
    let ps = c.profiles();
    (0..xs.len() - 1)
        .map(|j| l2_distance_sq(&ps[j + 1], &ps[j], a, b) / (xs[j + 1] - xs[j]))
        .sum()
}

/// Local terms of a unit-square configuration (no classification applied).
fn raw_local_terms(c: &Configuration, part: &IntervalPartition, cmp: &ComparisonProfile) -> Vec<(f64, f64, f64)> {
    let (beta, eps) = (c.params().beta(), c.params().epsilon());
    let m = part.corner_count() as i64;
    let gaps = cmp.virtual_gaps();
    let gap = |j: i64| gaps[j.rem_euclid(m) as usize];
    let xs = c.stations();
    let ps = c.profiles();
    (0..part.len() as i64)
        .into_par_iter()
        .map(|k| {
            let f0 = beta * c0() / 7.0
                * ((2 * k - 2)..=(2 * k + 4))
                    .map(|j| (gap(j) - 1.0 / m as f64).powi(2))
                    .sum::<f64>();
            // I**_k interval by interval: with M = 4 it repeats I_{k+1}
            let f1 = ((k - 1)..=(k + 1))
                .map(|i| {
                    let (a, b) = part.interval(i);
                    strain_in_window(c, a, b)
                })
                .sum::<f64>()
                / 3.0;
            let (s1, e1) = part.star(k);
            let f2 = 0.5
                * eps
                * (0..xs.len() - 1)
                    .map(|j| {
                        let st = if ps[j + 1].interface_count() > ps[j].interface_count() { j + 1 } else { j };
                        (xs[j + 1] - xs[j]) * (corners_in_arc(&ps[st], s1, e1) as f64 - 4.0)
                    })
                    .sum::<f64>();
            (f0, f1, f2)
        })
        .collect()
}

fn classify_one(part: &IntervalPartition, k: i64, f1: f64, eta: f64, kappa: f64) -> IntervalType {
    let m = part.corner_count() as f64;
    let hmax = (k - 1..=k + 1).map(|i| part.width(i)).fold(0.0, f64::max);
    let gmin = (2 * k - 1..=2 * k + 3).map(|j| part.gap(j)).fold(f64::INFINITY, f64::min);
    if hmax > 6.0 / m {
        IntervalType::Type4
    } else if f1 > eta / m.powi(3) {
        IntervalType::Type3
    } else if gmin < kappa / m {
        IntervalType::Type2
    } else {
        IntervalType::Type1
    }
}

fn check_eta_kappa(eta: f64, kappa: f64) -> Result<()> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::param("eta", "must be finite and > 0"));
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::param("kappa", "must be finite and > 0"));
    }
    Ok(())
}

fn terms_and_types(
    c: &Configuration,
    part: &IntervalPartition,
    cmp: &ComparisonProfile,
    eta: f64,
    kappa: f64,
) -> Vec<LocalTerms> {
    raw_local_terms(c, part, cmp)
        .into_iter()
        .enumerate()
        .map(|(k, (f0, f1, f2))| LocalTerms {
            k,
            f0,
            f1,
            f2,
            total: f0 + f1 + f2,
            kind: classify_one(part, k as i64, f1, eta, kappa),
        })
        .collect()
}

/// Local terms and interval classes for `u`; `part` may be given in the
/// original units and is rescaled together with the configuration.
pub fn classify_intervals(
    u: &Configuration,
    part: &IntervalPartition,
    eta: f64,
    kappa: f64,
) -> Result<Vec<LocalTerms>> {
    check_eta_kappa(eta, kappa)?;
    let (c, _) = u.normalized()?;
    let part = part.rescaled(1.0 / part.period());
    let cmp = build_comparison(c.u0(), &part)?;
    Ok(terms_and_types(&c, &part, &cmp, eta, kappa))
}

/// The global quantities that the local terms redistribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalTerms {
    /// `βc₀Σ_j (h̃_j − 1/M)²`.
    pub gap_spread: f64,
    /// `(βc₀/7)Σ_j m_j (h̃_j − 1/M)²` with the multiplicity `m_j` of gap `j`
    /// among the local windows (4 for even, 3 for odd `j` once `M ≥ 8`).
    pub gap_spread_weighted: f64,
    /// `∫∫u_x²`.
    pub strain: f64,
    /// `ε∫(N − M)dx`.
    pub surface_excess: f64,
}

/// Global terms for a unit-square configuration and its comparison profile.
pub fn global_terms(c: &Configuration, part: &IntervalPartition, cmp: &ComparisonProfile) -> GlobalTerms {
    let beta = c.params().beta();
    let m = part.corner_count();
    let mut mult = vec![0usize; m];
    for k in 0..part.len() as i64 {
        for j in (2 * k - 2)..=(2 * k + 4) {
            mult[j.rem_euclid(m as i64) as usize] += 1;
        }
    }
    let dev: Vec<f64> = cmp.virtual_gaps().iter().map(|g| (g - 1.0 / m as f64).powi(2)).collect();
    let xs = c.stations();
    let ps = c.profiles();
    let surface_excess = c.params().epsilon()
        * (0..xs.len() - 1)
            .map(|j| {
                let n = ps[j].interface_count().max(ps[j + 1].interface_count());
                (xs[j + 1] - xs[j]) * (n as f64 - m as f64)
            })
            .sum::<f64>();
    GlobalTerms {
        gap_spread: beta * c0() * dev.iter().sum::<f64>(),
        gap_spread_weighted: beta * c0() / 7.0 * dev.iter().zip(&mult).map(|(d, &n)| d * n as f64).sum::<f64>(),
        strain: crate::energy::strain_energy(c),
        surface_excess,
    }
}

/// Error-term ingredients on one interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalError {
    pub k: usize,
    /// `‖u₀ − w‖_{L²(I_k)}`.
    pub l2: f64,
    /// `H_k^{1/2}‖u₀ − w‖_{L²(I_k)}`.
    pub weight: f64,
    /// Measured `‖Hw'‖_{BMO(I_k)}`.
    pub bmo: f64,
    /// `∫_{I_k} Hw'(u₀ − w)`.
    pub pairing: f64,
}

/// Per-interval error ingredients.
pub fn local_error_terms(
    u0: &SawtoothProfile,
    cmp: &ComparisonProfile,
    part: &IntervalPartition,
    opts: BmoOptions,
) -> Vec<LocalError> {
    let w = cmp.profile();
    (0..part.len())
        .map(|k| {
            let (a, b) = part.interval(k as i64);
            let l2 = l2_distance(u0, w, a, b);
            let sing = breakpoints((a, b), &[w]);
            let bmo = bmo_seminorm(|y| hilbert_of_slope(w, y), (a, b), &sing, opts).value;
            let pairing = if l2 == 0.0 { 0.0 } else { hilbert_pairing_window(w, u0, a, b) };
            LocalError {
                k,
                l2,
                weight: (b - a).sqrt() * l2,
                bmo,
                pairing,
            }
        })
        .collect()
}

/// Outcome of the certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// All local terms and error terms vanish: `u` is x-independent with
    /// equispaced corners.
    Striped,
    /// The localized excess is strictly positive.
    ExcessDetected,
    /// The error terms outweigh the local terms.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub k: usize,
    pub kind: IntervalType,
    pub width: f64,
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub error_weight: f64,
    pub bmo: f64,
    pub pairing: f64,
    /// `‖u₀−w‖_{L²(I_k)}/(H_k‖u₀−u₁‖^{1/3}_{L²(I_k)})`, absent when the
    /// denominator vanishes.
    pub l2_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeCounts {
    pub eta: f64,
    pub kappa: f64,
    /// Counts of types 1 to 4.
    pub counts: [usize; 4],
}

/// Certificate report, in unit-square units unless stated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub verdict: Verdict,
    /// `Σ_k (F̃_k − c̄βH_k^{1/2}‖u₀−w‖_{L²(I_k)})`.
    pub excess: f64,
    /// Measured `c̄ = 2 max_k ‖Hw'‖_{BMO(I_k)}`.
    pub c_bar: f64,
    pub beta: f64,
    pub epsilon: f64,
    /// Multiply unit-square energies by this to get physical ones.
    pub energy_factor: f64,
    pub corner_count: usize,
    pub local_sum: f64,
    pub error_sum: f64,
    /// `2β(Hw', u₀ − w)_{L²}`, the exact cross term.
    pub exact_cross_term: f64,
    pub l2_ratio_max: Option<f64>,
    pub tolerance: f64,
    pub types: TypeCounts,
    /// Counts at `η/2, 2η` and `κ/2, 2κ`.
    pub sensitivity: Vec<TypeCounts>,
    pub global: GlobalTerms,
    pub intervals: Vec<IntervalReport>,
}

fn count_types(terms: &[LocalTerms], eta: f64, kappa: f64) -> TypeCounts {
    let mut counts = [0; 4];
    for t in terms {
        let i = match t.kind {
            IntervalType::Type1 => 0,
            IntervalType::Type2 => 1,
            IntervalType::Type3 => 2,
            IntervalType::Type4 => 3,
        };
        counts[i] += 1;
    }
    TypeCounts { eta, kappa, counts }
}

/// Assembles the localized excess for a candidate minimizer.
pub fn certificate_check(u: &Configuration, eta: f64, kappa: f64) -> Result<CertificateReport> {
    certificate_check_with(u, eta, kappa, BmoOptions::default())
}

pub fn certificate_check_with(
    u: &Configuration,
    eta: f64,
    kappa: f64,
    opts: BmoOptions,
) -> Result<CertificateReport> {
    check_eta_kappa(eta, kappa)?;
    let (c, factor) = u.normalized()?;
    let part = build_partition(c.u1())?;
    let cmp = build_comparison(c.u0(), &part)?;
    let terms = terms_and_types(&c, &part, &cmp, eta, kappa);
    let errors = local_error_terms(c.u0(), &cmp, &part, opts);
    let beta = c.params().beta();
    let c_bar = 2.0 * errors.iter().map(|e| e.bmo).fold(0.0, f64::max);
    let local_sum: f64 = terms.iter().map(|t| t.total).sum();
    let error_sum: f64 = errors.iter().map(|e| c_bar * beta * e.weight).sum();
    let excess = local_sum - error_sum;
    let m = part.corner_count();
    let tolerance = 1e-12 * e1d(m, c.params())?;
    let verdict = if excess > tolerance {
        Verdict::ExcessDetected
    } else if excess.abs() <= tolerance && terms.iter().all(|t| t.total.abs() <= tolerance) {
        Verdict::Striped
    } else {
        Verdict::Inconclusive
    };
    let intervals: Vec<IntervalReport> = terms
        .iter()
        .zip(&errors)
        .map(|(t, e)| {
            let (a, b) = part.interval(t.k as i64);
            let d = l2_distance(c.u0(), c.u1(), a, b);
            let l2_ratio = if d > 0.0 { Some(e.l2 / ((b - a) * d.cbrt())) } else { None };
            IntervalReport {
                k: t.k,
                kind: t.kind,
                width: b - a,
                f0: t.f0,
                f1: t.f1,
                f2: t.f2,
                error_weight: e.weight,
                bmo: e.bmo,
                pairing: e.pairing,
                l2_ratio,
            }
        })
        .collect();
    let l2_ratio_max = intervals
        .iter()
        .filter_map(|r| r.l2_ratio)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    let sensitivity = [(0.5, 1.0), (2.0, 1.0), (1.0, 0.5), (1.0, 2.0)]
        .iter()
        .map(|&(se, sk)| {
            let t = terms_and_types(&c, &part, &cmp, eta * se, kappa * sk);
            count_types(&t, eta * se, kappa * sk)
        })
        .collect();
    Ok(CertificateReport {
        verdict,
        excess,
        c_bar,
        beta,
        epsilon: c.params().epsilon(),
        energy_factor: factor,
        corner_count: m,
        local_sum,
        error_sum,
        exact_cross_term: 2.0 * beta * errors.iter().map(|e| e.pairing).sum::<f64>(),
        l2_ratio_max,
        tolerance,
        types: count_types(&terms, eta, kappa),
        sensitivity,
        global: global_terms(&c, &part, &cmp),
        intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{jitter_corners, random_profile, ModelParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w_m(m: usize) -> SawtoothProfile {
        SawtoothProfile::new(1.0, 0.0, 1, (0..m).map(|j| j as f64 / m as f64).collect()).unwrap()
    }

    #[test]
    fn hilbert_of_sine() {
        let n = 64;
        let samples: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).sin()).collect();
        let s = SpectralSignal::from_samples(1.0, &samples, 8).unwrap();
        let hs = hilbert_transform(&s);
        for &y in &[0.0, 0.1, 0.37] {
            assert!((hs.eval(y) + 2.0 * PI * (2.0 * PI * y).cos()).abs() < 1e-12);
        }
        let c = SpectralSignal::from_samples(1.0, &vec![3.0; 16], 4).unwrap();
        assert!(hilbert_transform(&c).eval(0.2).abs() < 1e-14);
        // applying twice multiplies the zero-mean part by −4π²
        let hh = hilbert_transform(&hs);
        for k in -8..=8i64 {
            let expect = if k == 0 { 0.0.into() } else { s.coefficient(k) * (-4.0 * PI * PI) };
            assert!((hh.coefficient(k) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_spectral_slope_transform() {
        let p = SawtoothProfile::new(1.0, 0.0, 1, vec![0.1, 0.3, 0.55, 0.85]).unwrap();
        let s = hilbert_transform(&SpectralSignal::from_profile(&p, 1 << 16).derivative());
        for &y in &[0.2, 0.6, 0.95] {
            let d = s.eval(y) - hilbert_of_slope(&p, y);
            assert!(d.abs() < 1e-3, "{y} {d}");
        }
    }

    #[test]
    fn pairing_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let w = random_profile(&mut rng, 1.0, 12);
            let u0 = random_profile(&mut rng, 1.0, 12);
            let r = hilbert_pairing(&w, &u0, 1 << 16).unwrap();
            assert!(r.rel_diff < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn bmo_of_linear_and_constant() {
        let e = bmo_seminorm(|y| y, (0.0, 1.0), &[], BmoOptions::default());
        assert!((e.value.powi(2) - 1.0 / 12.0).abs() < 1e-14);
        assert!(e.per_level.windows(2).all(|p| p[1] >= p[0]));
        let z = bmo_seminorm(|_| 2.5, (0.0, 1.0), &[], BmoOptions::default());
        assert!(z.value < 1e-7);
    }

    #[test]
    fn partition_of_equispaced() {
        let part = build_partition(&w_m(8)).unwrap();
        assert_eq!(part.len(), 4);
        for h in part.widths() {
            assert!((h - 0.25).abs() < 1e-15);
        }
        assert!(build_partition(&w_m(2)).is_err());
        // slope −1 after the first corner
        let p = SawtoothProfile::new(1.0, 0.0, -1, vec![0.1, 0.3, 0.5, 0.8]).unwrap();
        let part = build_partition(&p).unwrap();
        assert!((part.widths().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for k in 0..part.len() as i64 {
            let (a, b) = part.interval(k);
            let inside = (0..16).filter(|&j| {
                let z = part.corner(j - 4);
                z >= a && z < b
            });
            assert_eq!(inside.count(), 2);
            let hk = part.gap(2 * k) / 2.0 + part.gap(2 * k + 1) + part.gap(2 * k + 2) / 2.0;
            assert!((hk - part.width(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn comparison_fixed_point_and_degenerate() {
        let u = w_m(6);
        let part = build_partition(&u).unwrap();
        let cmp = build_comparison(&u, &part).unwrap();
        assert!(l2_distance(&u, cmp.profile(), 0.0, 1.0) < 1e-14);
        // u0 rises through all of I_0, so its two corners coincide there
        let part = build_partition(&w_m(8)).unwrap();
        let u0 = SawtoothProfile::new(
            1.0,
            0.0,
            -1,
            vec![0.0625, 0.3125, 0.4, 0.45, 0.65, 0.75, 0.88, 0.98],
        )
        .unwrap();
        let cmp = build_comparison(&u0, &part).unwrap();
        let (a, b) = part.interval(0);
        let (z1, z2) = cmp.pairs()[0];
        assert_eq!(z1, z2);
        assert!((z1 - 0.5 * (a + b)).abs() < 1e-15);
        for r in comparison_residuals(&u0, &cmp, &part) {
            assert!(r.iter().all(|&x| x < 1e-10), "{r:?}");
        }
    }

    #[test]
    fn random_comparisons_meet_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..30 {
            let u1 = random_profile(&mut rng, 1.0, 16);
            if u1.interface_count() < 4 {
                continue;
            }
            let gmin = u1.gaps().into_iter().fold(f64::INFINITY, f64::min);
            let u0 = jitter_corners(&u1, 0.2 * gmin, &mut rng).unwrap();
            let part = build_partition(&u1).unwrap();
            let cmp = build_comparison(&u0, &part).unwrap();
            for r in comparison_residuals(&u0, &cmp, &part) {
                assert!(r.iter().all(|&x| x < 1e-10), "{r:?}");
            }
        }
    }

    #[test]
    fn striped_certificate() {
        let params = ModelParams::new(1e-3, 1e-5, 1.0, 1.0).unwrap();
        let c = Configuration::uniform(params, w_m(14), 9).unwrap();
        let r = certificate_check(&c, DEFAULT_ETA, DEFAULT_KAPPA).unwrap();
        assert_eq!(r.verdict, Verdict::Striped);
        assert_eq!(r.types.counts, [7, 0, 0, 0]);
        assert!(r.c_bar > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bumped = jitter_corners(&w_m(14), 0.005, &mut rng).unwrap();
        for j in [0, 4, 8] {
            let r = certificate_check(&c.with_profile(j, bumped.clone()).unwrap(), 1e-3, 0.1).unwrap();
            assert_eq!(r.verdict, Verdict::ExcessDetected, "{j}");
            assert!(r.excess > 0.0);
        }
    }

    #[test]
    fn recomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let params = ModelParams::new(0.01, 1e-4, 1.0, 1.0).unwrap();
        let base = w_m(10);
        let profiles: Vec<SawtoothProfile> =
            (0..5).map(|_| jitter_corners(&base, 0.01, &mut rng).unwrap()).collect();
        let c = Configuration::new(params, vec![0.0, 0.2, 0.5, 0.7, 1.0], profiles).unwrap();
        let part = build_partition(c.u1()).unwrap();
        let cmp = build_comparison(c.u0(), &part).unwrap();
        let terms = classify_intervals(&c, &part, DEFAULT_ETA, DEFAULT_KAPPA).unwrap();
        let g = global_terms(&c, &part, &cmp);
        let s0: f64 = terms.iter().map(|t| t.f0).sum();
        let s1: f64 = terms.iter().map(|t| t.f1).sum();
        let s2: f64 = terms.iter().map(|t| t.f2).sum();
        assert!((s0 - g.gap_spread_weighted).abs() < 1e-10);
        assert!(s0 <= g.gap_spread + 1e-15);
        assert!((s1 - g.strain).abs() < 1e-10);
        assert!((s2 - g.surface_excess).abs() < 1e-10);
    }
}
