//! Admissible microstructures: model parameters, sawtooth column profiles and
//! two-dimensional configurations built from an x-grid of profiles.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Corners closer than this fraction of the period are merged pairwise.
pub const MERGE_TOL: f64 = 1e-12;
/// Absolute tolerance (relative to the period) for the slope balance check.
pub const BALANCE_TOL: f64 = 1e-10;

/// Physical parameters β, ε, L, h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct ModelParams {
    beta: f64,
    epsilon: f64,
    length: f64,
    height: f64,
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    beta: f64,
    epsilon: f64,
    length: f64,
    height: f64,
}

impl TryFrom<ParamsRepr> for ModelParams {
    type Error = Error;
    fn try_from(r: ParamsRepr) -> Result<Self> {
        ModelParams::new(r.beta, r.epsilon, r.length, r.height)
    }
}

impl From<ModelParams> for ParamsRepr {
    fn from(p: ModelParams) -> Self {
        ParamsRepr {
            beta: p.beta,
            epsilon: p.epsilon,
            length: p.length,
            height: p.height,
        }
    }
}

impl ModelParams {
    pub fn new(beta: f64, epsilon: f64, length: f64, height: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::param("beta", format!("must be finite and >= 0, got {beta}")));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::param("epsilon", format!("must be finite and > 0, got {epsilon}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::param("length", format!("must be finite and > 0, got {length}")));
        }
        if !(height.is_finite() && height > 0.0) {
            return Err(Error::param("height", format!("must be finite and > 0, got {height}")));
        }
        Ok(ModelParams {
            beta,
            epsilon,
            length,
            height,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        self.beta = beta;
        ModelParams::new(self.beta, self.epsilon, self.length, self.height)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.epsilon = epsilon;
        ModelParams::new(self.beta, self.epsilon, self.length, self.height)
    }

    /// Regime parameter σ = β ε^{-1/3} L^{1/3}.
    pub fn sigma(&self) -> f64 {
        self.beta * self.epsilon.powf(-1.0 / 3.0) * self.length.powf(1.0 / 3.0)
    }

    /// Parameters of the same problem on the unit square, and the factor
    /// `h³/L` by which unit-square energies must be multiplied.
    ///
    /// Under `ũ(x̃, ỹ) = u(L x̃, h ỹ)/h` the energy becomes
    /// `(h³/L)·[β̃‖ũ₀‖² + ∫∫ũ_x² + ε̃∫N]` with `β̃ = βL/h`, `ε̃ = εL²/h³`.
    pub fn normalized(&self) -> (ModelParams, f64) {
        let (h, l) = (self.height, self.length);
        let unit = ModelParams {
            beta: self.beta * l / h,
            epsilon: self.epsilon * l * l / (h * h * h),
            length: 1.0,
            height: 1.0,
        };
        (unit, h * h * h / l)
    }
}

/// A y-periodic piecewise-linear function with slope ±1, stored by its
/// corner ordinates in `[0, period)`, the value at `y = 0` and the slope on
/// the segment starting at `y = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct SawtoothProfile {
    period: f64,
    offset: f64,
    initial_slope: f64,
    corners: Vec<f64>,
    // u at each corner
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProfileRepr {
    period: f64,
    offset: f64,
    initial_slope: i8,
    corners: Vec<f64>,
}

impl TryFrom<ProfileRepr> for SawtoothProfile {
    type Error = Error;
    fn try_from(r: ProfileRepr) -> Result<Self> {
        SawtoothProfile::new(r.period, r.offset, r.initial_slope, r.corners)
    }
}

impl From<SawtoothProfile> for ProfileRepr {
    fn from(p: SawtoothProfile) -> Self {
        ProfileRepr {
            period: p.period,
            offset: p.offset,
            initial_slope: p.initial_slope as i8,
            corners: p.corners,
        }
    }
}

/// One linear piece of a profile restricted to a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub value: f64,
    pub slope: f64,
}

impl Piece {
    pub fn end_value(&self) -> f64 {
        self.value + self.slope * (self.end - self.start)
    }
}

impl SawtoothProfile {
    /// Builds a profile from sorted corners in `[0, period)`.
    ///
    /// Corner pairs closer than `MERGE_TOL·period` are removed (the zero
    /// length segment between them disappears and parity is preserved).
    pub fn new(period: f64, offset: f64, initial_slope: i8, corners: Vec<f64>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidProfile(format!("period must be > 0, got {period}")));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidProfile("offset must be finite".into()));
        }
        if initial_slope != 1 && initial_slope != -1 {
            return Err(Error::InvalidProfile(format!(
                "initial_slope must be +1 or -1, got {initial_slope}"
            )));
        }
        for w in corners.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidProfile(format!(
                    "corners must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if let (Some(&first), Some(&last)) = (corners.first(), corners.last()) {
            if !(first >= 0.0 && last < period && first.is_finite() && last.is_finite()) {
                return Err(Error::InvalidProfile(format!(
                    "corners must lie in [0, {period})"
                )));
            }
        }
        if corners.is_empty() {
            return Err(Error::InvalidProfile(
                "a periodic profile with slope ±1 needs at least two corners".into(),
            ));
        }
        if corners.len() % 2 != 0 {
            return Err(Error::InvalidProfile(format!(
                "corner count must be even, got {}",
                corners.len()
            )));
        }
        let mut p = SawtoothProfile {
            period,
            offset,
            initial_slope: initial_slope as f64,
            corners,
            values: Vec::new(),
        };
        if has_close_pair(&p.corners, period) {
            // Re-anchor on the middle of the longest segment, which survives
            // the merge, so the slope and value at 0 are recomputed exactly.
            p.values = p.corner_values();
            let gaps = p.gaps();
            let (j, g) = gaps
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b });
            let anchor = p.corners[j] + 0.5 * g;
            let value = p.values[j] + p.slope_after(j) * 0.5 * g;
            let slope = p.slope_after(j) as i8;
            let mut merged = p.corners.clone();
            merge_close_pairs(&mut merged, period);
            if merged.is_empty() {
                return Err(Error::InvalidProfile(
                    "all corners merged away; a periodic profile needs at least two".into(),
                ));
            }
            return SawtoothProfile::from_anchor(period, anchor, value, slope, &merged);
        }
        p.check_balance()?;
        p.values = p.corner_values();
        Ok(p)
    }

    /// Builds a profile from corners given in any order (reduced modulo the
    /// period), fixing the value and the slope right after `anchor`.
    pub fn from_anchor(
        period: f64,
        anchor: f64,
        anchor_value: f64,
        slope_after_anchor: i8,
        corners: &[f64],
    ) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidProfile(format!("period must be > 0, got {period}")));
        }
        if slope_after_anchor != 1 && slope_after_anchor != -1 {
            return Err(Error::InvalidProfile("slope must be +1 or -1".into()));
        }
        let mut cs: Vec<f64> = corners.iter().map(|&c| reduce(c, period)).collect();
        cs.sort_by(|a, b| a.partial_cmp(b).expect("finite corners"));
        // Exact duplicates collapse pairwise.
        let mut dedup: Vec<f64> = Vec::with_capacity(cs.len());
        for c in cs {
            if dedup.last() == Some(&c) {
                dedup.pop();
            } else {
                dedup.push(c);
            }
        }
        let a = reduce(anchor, period);
        // Walk back from the anchor to 0 to recover slope and value at 0.
        let flips = dedup.iter().filter(|&&c| c > 0.0 && c <= a).count();
        let s0 = if flips % 2 == 0 {
            slope_after_anchor
        } else {
            -slope_after_anchor
        };
        let mut value = anchor_value;
        let mut slope = slope_after_anchor as f64;
        let mut pos = a;
        for &c in dedup.iter().rev().filter(|&&c| c > 0.0 && c <= a) {
            value -= slope * (pos - c);
            pos = c;
            slope = -slope;
        }
        value -= slope * pos;
        debug_assert_eq!(slope as i8, s0);
        SawtoothProfile::new(period, value, s0, dedup)
    }

    fn check_balance(&self) -> Result<()> {
        let up: f64 = self
            .segments()
            .filter(|s| s.slope > 0.0)
            .map(|s| s.end - s.start)
            .sum();
        let tol = BALANCE_TOL * self.period.max(1.0);
        if (up - 0.5 * self.period).abs() > tol {
            return Err(Error::InvalidProfile(format!(
                "slope +1 segments must cover half the period: {up} vs {}",
                0.5 * self.period
            )));
        }
        Ok(())
    }

    fn corner_values(&self) -> Vec<f64> {
        let mut vals = Vec::with_capacity(self.corners.len());
        let mut v = self.offset;
        let mut pos = 0.0;
        let mut s = self.initial_slope;
        for (j, &c) in self.corners.iter().enumerate() {
            if !(j == 0 && c == 0.0) {
                v += s * (c - pos);
            }
            vals.push(v);
            pos = c;
            s = self.slope_after(j);
        }
        vals
    }

    pub fn period(&self) -> f64 {
        self.period
    }
    pub fn offset(&self) -> f64 {
        self.offset
    }
    pub fn initial_slope(&self) -> i8 {
        self.initial_slope as i8
    }
    pub fn corners(&self) -> &[f64] {
        &self.corners
    }

    /// Number of corners M (the interface count N of the column).
    pub fn interface_count(&self) -> usize {
        self.corners.len()
    }

    /// Slope on the segment that starts at corner `j`.
    pub fn slope_after(&self, j: usize) -> f64 {
        let flip = if self.corners[0] == 0.0 { j } else { j + 1 };
        if flip % 2 == 0 {
            self.initial_slope
        } else {
            -self.initial_slope
        }
    }

    /// Slope jump `u'(y_j+) − u'(y_j−) = ±2` at corner `j`.
    pub fn jump(&self, j: usize) -> f64 {
        2.0 * self.slope_after(j)
    }

    /// Cyclic gaps `h_j = y_{j+1} − y_j`, the last one wrapping.
    pub fn gaps(&self) -> Vec<f64> {
        let m = self.corners.len();
        (0..m)
            .map(|j| {
                if j + 1 < m {
                    self.corners[j + 1] - self.corners[j]
                } else {
                    self.corners[0] + self.period - self.corners[j]
                }
            })
            .collect()
    }

    /// The linear segments over one period `[0, period)`, in order.
    pub fn segments(&self) -> impl Iterator<Item = Piece> + '_ {
        let m = self.corners.len();
        let lead = if self.corners.first().copied().unwrap_or(0.0) > 0.0 {
            Some(Piece {
                start: 0.0,
                end: self.corners[0],
                value: self.offset,
                slope: self.initial_slope,
            })
        } else {
            None
        };
        let values = &self.values;
        lead.into_iter().chain((0..m).map(move |j| {
            let start = self.corners[j];
            let end = if j + 1 < m { self.corners[j + 1] } else { self.period };
            let value = if values.is_empty() {
                f64::NAN
            } else {
                values[j]
            };
            Piece {
                start,
                end,
                value,
                slope: self.slope_after(j),
            }
        }))
    }

    /// Value at `y` (reduced modulo the period).
    pub fn evaluate(&self, y: f64) -> f64 {
        let y = reduce(y, self.period);
        let j = self.corners.partition_point(|&c| c <= y);
        if j == 0 {
            self.offset + self.initial_slope * y
        } else {
            self.values[j - 1] + self.slope_after(j - 1) * (y - self.corners[j - 1])
        }
    }

    /// Right-continuous slope at `y`.
    pub fn slope_at(&self, y: f64) -> f64 {
        let y = reduce(y, self.period);
        let j = self.corners.partition_point(|&c| c <= y);
        if j == 0 {
            self.initial_slope
        } else {
            self.slope_after(j - 1)
        }
    }

    /// Linear pieces covering `[a, b]` (any length), split at corners.
    pub fn pieces(&self, a: f64, b: f64) -> Vec<Piece> {
        let mut out = Vec::new();
        if !(b > a) {
            return out;
        }
        let p = self.period;
        let mut cycle = (a / p).floor();
        let mut y = a;
        let mut guard = 0usize;
        while y < b {
            let base = cycle * p;
            let local = y - base;
            // same arithmetic as `next` so that a step always advances
            let j = self.corners.partition_point(|&c| base + c <= y);
            let next_local = if j < self.corners.len() { self.corners[j] } else { p };
            let next = (base + next_local).min(b);
            if next > y {
                let (value, slope) = if j == 0 {
                    (self.offset + self.initial_slope * local, self.initial_slope)
                } else {
                    let s = self.slope_after(j - 1);
                    (self.values[j - 1] + s * (local - self.corners[j - 1]), s)
                };
                out.push(Piece {
                    start: y,
                    end: next,
                    value,
                    slope,
                });
            }
            y = next;
            if y >= base + p || (j >= self.corners.len() && y == next && next < b) {
                cycle += 1.0;
                y = y.max(cycle * p);
            }
            guard += 1;
            assert!(guard < 10_000_000, "piece iteration did not terminate");
        }
        out
    }

    /// `∫_a^b u(y) dy`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.pieces(a, b)
            .iter()
            .map(|pc| 0.5 * (pc.value + pc.end_value()) * (pc.end - pc.start))
            .sum()
    }

    /// Mean value over one period.
    pub fn mean(&self) -> f64 {
        self.integral(0.0, self.period) / self.period
    }

    /// Exact Fourier coefficient `h⁻¹∫u e^{-2πiky/h}`.
    ///
    /// Integrating by parts twice leaves only the slope jumps:
    /// `û(k) = −h/(4π²k²) Σ_j Δ_j e^{-2πik y_j/h}` for `k ≠ 0`.
    pub fn fourier_coefficient(&self, k: i64) -> Complex64 {
        if k == 0 {
            return Complex64::new(self.mean(), 0.0);
        }
        let kf = k as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &y) in self.corners.iter().enumerate() {
            let phase = -2.0 * PI * frac_mul(k, y / self.period);
            acc += self.jump(j) * Complex64::from_polar(1.0, phase);
        }
        acc * (-self.period / (4.0 * PI * PI * kf * kf))
    }

    /// Copy with a different additive constant (value at y = 0).
    pub fn with_offset(&self, offset: f64) -> SawtoothProfile {
        let shift = offset - self.offset;
        let mut p = self.clone();
        p.offset = offset;
        for v in &mut p.values {
            *v += shift;
        }
        p
    }

    /// Copy shifted vertically by `delta`.
    pub fn raised(&self, delta: f64) -> SawtoothProfile {
        self.with_offset(self.offset + delta)
    }

    /// The profile `y ↦ u(y + t)`.
    pub fn shifted(&self, t: f64) -> SawtoothProfile {
        let anchor_value = self.evaluate(t);
        let slope = self.slope_at(t) as i8;
        let corners: Vec<f64> = self.corners.iter().map(|&c| c - t).collect();
        SawtoothProfile::from_anchor(self.period, 0.0, anchor_value, slope, &corners)
            .expect("a rigid shift keeps the profile admissible")
    }

    /// The profile `y ↦ s·u(y/s)` of period `s·h`.
    pub fn rescaled(&self, s: f64) -> Result<SawtoothProfile> {
        SawtoothProfile::new(
            self.period * s,
            self.offset * s,
            self.initial_slope(),
            self.corners.iter().map(|c| c * s).collect(),
        )
    }

    /// The profile `y ↦ u(y − y0)`, i.e. translated to the right by `y0`.
    pub fn translated(&self, y0: f64) -> SawtoothProfile {
        self.shifted(-y0)
    }
}

/// `frac(k·x)` computed so that large `k` keeps full precision in the phase.
fn frac_mul(k: i64, x: f64) -> f64 {
    let prod = k as f64 * x;
    prod - prod.floor()
}

/// Reduces `y` into `[0, period)`.
pub fn reduce(y: f64, period: f64) -> f64 {
    let r = y.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

fn has_close_pair(corners: &[f64], period: f64) -> bool {
    let tol = MERGE_TOL * period;
    let m = corners.len();
    corners.windows(2).any(|w| w[1] - w[0] < tol)
        || (m >= 2 && corners[0] + period - corners[m - 1] < tol)
}

fn merge_close_pairs(corners: &mut Vec<f64>, period: f64) {
    let tol = MERGE_TOL * period;
    loop {
        let m = corners.len();
        if m < 2 {
            return;
        }
        let mut merged = false;
        for j in 0..m - 1 {
            if corners[j + 1] - corners[j] < tol {
                corners.drain(j..j + 2);
                merged = true;
                break;
            }
        }
        if !merged && m >= 2 && corners[0] + period - corners[m - 1] < tol {
            corners.pop();
            corners.remove(0);
            merged = true;
        }
        if !merged {
            return;
        }
    }
}

/// `‖p − q‖_{L²([a,b])}` computed exactly: the difference is piecewise
/// linear, and on each piece `∫d² = ℓ(d₀² + d₀d₁ + d₁²)/3`.
pub fn l2_distance(p: &SawtoothProfile, q: &SawtoothProfile, a: f64, b: f64) -> f64 {
    l2_distance_sq(p, q, a, b).sqrt()
}

/// Squared form of [`l2_distance`].
pub fn l2_distance_sq(p: &SawtoothProfile, q: &SawtoothProfile, a: f64, b: f64) -> f64 {
    let pp = p.pieces(a, b);
    let qp = q.pieces(a, b);
    let (mut i, mut j) = (0usize, 0usize);
    let mut y = a;
    let mut acc = 0.0;
    while i < pp.len() && j < qp.len() {
        let end = pp[i].end.min(qp[j].end);
        if end > y {
            let d0 = (pp[i].value + pp[i].slope * (y - pp[i].start))
                - (qp[j].value + qp[j].slope * (y - qp[j].start));
            let d1 = (pp[i].value + pp[i].slope * (end - pp[i].start))
                - (qp[j].value + qp[j].slope * (end - qp[j].start));
            acc += (end - y) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
            y = end;
        }
        if pp[i].end <= y {
            i += 1;
        }
        if j < qp.len() && qp[j].end <= y {
            j += 1;
        }
    }
    acc
}

/// A 2D admissible field: one column profile per x-station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigRepr", into = "ConfigRepr")]
pub struct Configuration {
    params: ModelParams,
    stations: Vec<f64>,
    profiles: Vec<SawtoothProfile>,
}

#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    params: ModelParams,
    stations: Vec<f64>,
    profiles: Vec<SawtoothProfile>,
}

impl TryFrom<ConfigRepr> for Configuration {
    type Error = Error;
    fn try_from(r: ConfigRepr) -> Result<Self> {
        Configuration::new(r.params, r.stations, r.profiles)
    }
}

impl From<Configuration> for ConfigRepr {
    fn from(c: Configuration) -> Self {
        ConfigRepr {
            params: c.params,
            stations: c.stations,
            profiles: c.profiles,
        }
    }
}

impl Configuration {
    pub fn new(params: ModelParams, stations: Vec<f64>, profiles: Vec<SawtoothProfile>) -> Result<Self> {
        if stations.len() < 2 {
            return Err(Error::InvalidConfiguration("at least two stations are required".into()));
        }
        if stations.len() != profiles.len() {
            return Err(Error::InvalidConfiguration(format!(
                "{} stations but {} profiles",
                stations.len(),
                profiles.len()
            )));
        }
        for w in stations.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidConfiguration("stations must be strictly increasing".into()));
            }
        }
        let l = params.length();
        let tol = 1e-10 * l.max(1.0);
        if stations[0].abs() > tol || (stations[stations.len() - 1] - l).abs() > tol {
            return Err(Error::InvalidConfiguration(format!(
                "stations must run from 0 to L = {l}"
            )));
        }
        let h = params.height();
        for (i, p) in profiles.iter().enumerate() {
            if (p.period() - h).abs() > 1e-12 * h {
                return Err(Error::InvalidConfiguration(format!(
                    "profile {i} has period {} but h = {h}",
                    p.period()
                )));
            }
        }
        Ok(Configuration {
            params,
            stations,
            profiles,
        })
    }

    /// Constant-in-x configuration on `stations` uniformly spaced stations.
    pub fn uniform(params: ModelParams, profile: SawtoothProfile, stations: usize) -> Result<Self> {
        let n = stations.max(2);
        let l = params.length();
        let xs = (0..n)
            .map(|i| if i + 1 == n { l } else { l * i as f64 / (n - 1) as f64 })
            .collect();
        Configuration::new(params, xs, vec![profile; n])
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn stations(&self) -> &[f64] {
        &self.stations
    }
    pub fn profiles(&self) -> &[SawtoothProfile] {
        &self.profiles
    }

    /// The trace u(0, ·).
    pub fn u0(&self) -> &SawtoothProfile {
        &self.profiles[0]
    }

    /// The trace u(L, ·).
    pub fn u1(&self) -> &SawtoothProfile {
        &self.profiles[self.profiles.len() - 1]
    }

    /// Replaces one profile, keeping all invariants.
    pub fn with_profile(&self, index: usize, profile: SawtoothProfile) -> Result<Self> {
        let mut profiles = self.profiles.clone();
        profiles[index] = profile;
        Configuration::new(self.params, self.stations.clone(), profiles)
    }

    /// The same configuration on the unit square (see
    /// [`ModelParams::normalized`]) and the energy factor `h³/L`.
    pub fn normalized(&self) -> Result<(Configuration, f64)> {
        let (unit, factor) = self.params.normalized();
        let (h, l) = (self.params.height(), self.params.length());
        let profiles = self
            .profiles
            .iter()
            .map(|p| p.rescaled(1.0 / h))
            .collect::<Result<Vec<_>>>()?;
        let mut stations: Vec<f64> = self.stations.iter().map(|x| x / l).collect();
        let last = stations.len() - 1;
        stations[last] = 1.0;
        Ok((Configuration::new(unit, stations, profiles)?, factor))
    }

    /// Same profiles under different parameters (h must be unchanged).
    pub fn with_params(&self, params: ModelParams) -> Result<Self> {
        let l = params.length();
        let l_old = self.params.length();
        let stations = self.stations.iter().map(|x| x * l / l_old).collect();
        Configuration::new(params, stations, self.profiles.clone())
    }
}

/// A random admissible profile with an even number of corners in
/// `[2, max_corners]`, random rotation and offset.
pub fn random_profile<R: Rng + ?Sized>(rng: &mut R, period: f64, max_corners: usize) -> SawtoothProfile {
    let pairs = rng.gen_range(1..=(max_corners / 2).max(1));
    let ups: Vec<f64> = (0..pairs).map(|_| rng.gen_range(0.2..1.0)).collect();
    let downs: Vec<f64> = (0..pairs).map(|_| rng.gen_range(0.2..1.0)).collect();
    let su: f64 = ups.iter().sum();
    let sd: f64 = downs.iter().sum();
    let mut corners = Vec::with_capacity(2 * pairs);
    let mut y = 0.0;
    for i in 0..pairs {
        corners.push(y);
        y += 0.5 * period * ups[i] / su;
        corners.push(y);
        y += 0.5 * period * downs[i] / sd;
    }
    let shift = rng.gen_range(0.0..period);
    let offset = rng.gen_range(-0.5..0.5) * period;
    let shifted: Vec<f64> = corners.iter().map(|c| c + shift).collect();
    SawtoothProfile::from_anchor(period, shift, offset, 1, &shifted)
        .expect("random construction is balanced")
}

/// Moves every corner by an independent uniform amount in `[-amp, amp]` and
/// then restores the slope balance by spreading the excess over the ends of
/// the +1 segments. `amp` must stay below half the smallest gap.
pub fn jitter_corners<R: Rng + ?Sized>(
    profile: &SawtoothProfile,
    amp: f64,
    rng: &mut R,
) -> Result<SawtoothProfile> {
    let p = profile.period();
    let m = profile.interface_count();
    let min_gap = profile.gaps().into_iter().fold(f64::INFINITY, f64::min);
    if !(amp < 0.5 * min_gap) {
        return Err(Error::param("amp", "jitter must stay below half the smallest gap"));
    }
    let mut zs: Vec<f64> = profile.corners().to_vec();
    for z in zs.iter_mut() {
        *z += rng.gen_range(-amp..=amp);
    }
    // +1 segments start at corners j with slope_after(j) = +1.
    let up_len = |zs: &[f64]| -> f64 {
        (0..m)
            .filter(|&j| profile.slope_after(j) > 0.0)
            .map(|j| {
                let next = if j + 1 < m { zs[j + 1] } else { zs[0] + p };
                next - zs[j]
            })
            .sum()
    };
    let excess = up_len(&zs) - 0.5 * p;
    let per = excess / (m / 2) as f64;
    for j in 0..m {
        if profile.slope_after(j) > 0.0 {
            let end = (j + 1) % m;
            zs[end] -= per;
        }
    }
    let anchor = zs[0];
    let anchor_value = profile.evaluate(profile.corners()[0]);
    let slope = profile.slope_after(0) as i8;
    SawtoothProfile::from_anchor(p, anchor, anchor_value, slope, &zs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w2() -> SawtoothProfile {
        SawtoothProfile::new(1.0, 0.0, 1, vec![0.0, 0.5]).unwrap()
    }

    fn w4() -> SawtoothProfile {
        SawtoothProfile::new(1.0, 0.0, 1, vec![0.0, 0.25, 0.5, 0.75]).unwrap()
    }

    #[test]
    fn evaluate_triangle_wave() {
        let p = w2();
        assert_eq!(p.evaluate(0.25), 0.25);
        assert_eq!(p.evaluate(0.75), 0.25);
        assert_eq!(w4().evaluate(1.0), 0.0);
        assert_eq!(p.evaluate(1.0), p.evaluate(0.0));
    }

    #[test]
    fn interface_count_examples() {
        assert_eq!(w2().interface_count(), 2);
        assert_eq!(w4().interface_count(), 4);
        let p = SawtoothProfile::new(1.0, 0.0, 1, vec![0.1, 0.3, 0.6, 0.9]).unwrap();
        // +1 on [0,0.1) ∪ [0.3,0.6) ∪ [0.9,1): 0.1 + 0.3 + 0.1 = 0.5
        assert_eq!(p.interface_count(), 4);
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(SawtoothProfile::new(1.0, 0.0, 1, vec![0.0, 0.3]).is_err());
        assert!(SawtoothProfile::new(1.0, 0.0, 1, vec![0.0, 0.25, 0.5]).is_err());
        assert!(SawtoothProfile::new(1.0, 0.0, 2, vec![0.0, 0.5]).is_err());
        assert!(SawtoothProfile::new(1.0, 0.0, 1, vec![0.5, 0.0]).is_err());
        assert!(SawtoothProfile::new(1.0, 0.0, 1, vec![]).is_err());
        assert!(SawtoothProfile::new(-1.0, 0.0, 1, vec![0.0, 0.5]).is_err());
    }

    #[test]
    fn close_corners_merge_pairwise() {
        let p = SawtoothProfile::new(1.0, 0.0, 1, vec![0.0, 0.2, 0.2 + 1e-14, 0.5]).unwrap();
        // 0.2 and 0.2+1e-14 vanish: slope +1 on [0,0.5)? No: after 0 the
        // slope is +1 until 0.5 once the pair is gone.
        assert_eq!(p.corners(), &[0.0, 0.5]);
    }

    #[test]
    fn from_anchor_recovers_offset() {
        let p = SawtoothProfile::from_anchor(1.0, 0.3, 2.0, 1, &[0.3, 0.8]).unwrap();
        assert_eq!(p.corners(), &[0.3, 0.8]);
        assert!((p.evaluate(0.3) - 2.0).abs() < 1e-15);
        assert!((p.evaluate(0.55) - 2.25).abs() < 1e-15);
        assert_eq!(p.initial_slope(), -1);
    }

    #[test]
    fn shifted_profile_matches_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = random_profile(&mut rng, 1.3, 12);
            let t = rng.gen_range(-2.0..2.0);
            let q = p.shifted(t);
            for i in 0..40 {
                let y = i as f64 * 0.0371;
                assert!((q.evaluate(y) - p.evaluate(y + t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fourier_triangle_wave_oracle() {
        // Trapezoid quadrature at 10^6 nodes as the oracle.
        let p = w2();
        let n = 1_000_000;
        let quad = |k: i64| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                let y = i as f64 / n as f64;
                acc += p.evaluate(y) * Complex64::from_polar(1.0, -2.0 * PI * k as f64 * y);
            }
            acc / n as f64
        };
        let c1 = p.fourier_coefficient(1);
        assert!((c1 - quad(1)).norm() < 1e-9);
        assert!((c1.norm() - 1.0 / (PI * PI)).abs() < 1e-15);
        assert!(p.fourier_coefficient(2).norm() < 1e-15);
        assert!(quad(2).norm() < 1e-9);
        assert!((p.fourier_coefficient(0).re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn l2_distance_examples() {
        let p = w2();
        assert_eq!(l2_distance(&p, &p, 0.0, 1.0), 0.0);
        let q = p.raised(0.3);
        assert!((l2_distance(&p, &q, 0.0, 1.0) - 0.3).abs() < 1e-14);
        let q = SawtoothProfile::new(2.0, 0.0, 1, vec![0.0, 1.0]).unwrap().raised(0.5);
        let r = SawtoothProfile::new(2.0, 0.0, 1, vec![0.0, 1.0]).unwrap();
        assert!((l2_distance(&q, &r, 0.0, 2.0) - 0.5 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn l2_w2_w4_against_quadrature() {
        let (p, q) = (w2(), w4());
        let n = 1_000_000;
        let mut acc = 0.0;
        for i in 0..n {
            let y = (i as f64 + 0.5) / n as f64;
            let d = p.evaluate(y) - q.evaluate(y);
            acc += d * d;
        }
        let quad = (acc / n as f64).sqrt();
        assert!((l2_distance(&p, &q, 0.0, 1.0) - quad).abs() < 1e-10);
    }

    #[test]
    fn windows_spanning_periods() {
        let p = w4();
        let q = w2();
        let full = l2_distance_sq(&p, &q, 0.0, 1.0);
        let twice = l2_distance_sq(&p, &q, -0.3, 1.7);
        assert!((twice - 2.0 * full).abs() < 1e-14);
        assert!((p.integral(-0.3, 0.7) - p.integral(0.0, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn jitter_keeps_admissible() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = SawtoothProfile::new(1.0, 0.0, 1, (0..14).map(|j| j as f64 / 14.0).collect()).unwrap();
        for _ in 0..20 {
            let j = jitter_corners(&w, 0.1 / 14.0, &mut rng).unwrap();
            assert_eq!(j.interface_count(), 14);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_profile(&mut rng, 0.7, 10);
        let s = serde_json::to_string(&p).unwrap();
        let back: SawtoothProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
        let bad = r#"{"period":1.0,"offset":0.0,"initial_slope":1,"corners":[0.0,0.3]}"#;
        assert!(serde_json::from_str::<SawtoothProfile>(bad).is_err());
    }

    #[test]
    fn normalization_preserves_e1d_form() {
        let p = ModelParams::new(0.3, 1e-3, 2.0, 0.5).unwrap();
        let (u, scale) = p.normalized();
        let m = 6.0;
        let e = |q: &ModelParams| q.beta() * q.height().powi(2) / m + q.epsilon() * q.length() * m;
        assert!((e(&p) - scale * e(&u)).abs() < 1e-15);
    }
}
