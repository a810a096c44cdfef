//! Segments, reflections and juxtapositions, the screened energy
//! `E^α_{a,b}(w) = −∫_a^b∫_a^b w(y)w(y')e^{−α|y−y'|}dy dy'` in closed form, and
//! numerical checks of the reflection-positivity and chessboard inequalities
//! together with the bump-wise lower bound for the H^{1/2} seminorm.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{h_half_sq_exact, ShiftGram};
use crate::error::{Error, Result};
use crate::profile::{random_profile, SawtoothProfile};
use crate::pwl::{Cell, PiecewiseLinear};
use crate::quad::GaussLegendre;
use crate::special::c0;

/// Default number of period doublings in [`e_infinity`].
pub const DEFAULT_DOUBLINGS: usize = 12;

/// A piecewise-linear function on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    shape: PiecewiseLinear,
}

impl Segment {
    /// Interpolant through `(knots[i], values[i])`; knots must start at 0.
    pub fn new(knots: &[f64], values: &[f64]) -> Result<Self> {
        let shape = PiecewiseLinear::from_knots(knots, values)?;
        Segment::from_shape(shape)
    }

    pub fn from_shape(shape: PiecewiseLinear) -> Result<Self> {
        if shape.start() != 0.0 {
            return Err(Error::InvalidProfile("segment must start at 0".into()));
        }
        Ok(Segment { shape })
    }

    /// The restriction of `p` to `[a, b]`, moved to start at 0.
    pub fn from_profile(p: &SawtoothProfile, a: f64, b: f64) -> Result<Self> {
        Ok(Segment {
            shape: PiecewiseLinear::from_profile(p, a, b)?.moved_to(0.0),
        })
    }

    pub fn length(&self) -> f64 {
        self.shape.end()
    }

    pub fn shape(&self) -> &PiecewiseLinear {
        &self.shape
    }
}

/// A nonempty ordered list of segments.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSequence {
    items: Vec<Segment>,
}

impl SegmentSequence {
    pub fn new(items: Vec<Segment>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidConfiguration("segment sequence is empty".into()));
        }
        Ok(SegmentSequence { items })
    }

    pub fn items(&self) -> &[Segment] {
        &self.items
    }

    pub fn total_length(&self) -> f64 {
        self.items.iter().map(Segment::length).sum()
    }

    /// Mirror image of the whole sequence: reversed order, each reflected.
    pub fn reflected(&self) -> SegmentSequence {
        SegmentSequence {
            items: reflect_all(&self.items),
        }
    }
}

fn reflect_all(items: &[Segment]) -> Vec<Segment> {
    items.iter().rev().map(reflect).collect()
}

/// `θf(y) = f(T − y)`.
pub fn reflect(seg: &Segment) -> Segment {
    Segment {
        shape: seg.shape.reflected(),
    }
}

/// `φ[F]` on `[0, ΣT_i]`; no continuity is imposed at the joins.
pub fn juxtapose(seq: &SegmentSequence) -> PiecewiseLinear {
    juxtapose_slice(&seq.items).expect("nonempty")
}

fn juxtapose_slice(items: &[Segment]) -> Option<PiecewiseLinear> {
    let mut it = items.iter();
    let first = it.next()?.shape.clone();
    Some(it.fold(first, |acc, s| acc.concat(&s.shape)))
}

const SERIES_SWITCH: f64 = 1.0;
const SERIES_TERMS: usize = 30;

// Σ_n (−x)^n/n! · m(n)
fn moment_series(x: f64, m: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut c = 1.0;
    let mut terms = [0.0; SERIES_TERMS];
    for (n, t) in terms.iter_mut().enumerate() {
        *t = c * m(n as f64);
        c *= -x / (n + 1) as f64;
    }
    for t in terms.iter().rev() {
        acc += t;
    }
    acc
}

/// `∫_0^1 (1−u) e^{−xu} du`.
pub fn w0(x: f64) -> f64 {
    if x < SERIES_SWITCH {
        moment_series(x, |n| 1.0 / ((n + 1.0) * (n + 2.0)))
    } else {
        (x - 1.0 + (-x).exp()) / (x * x)
    }
}

/// `∫_0^1 u e^{−xu} du`.
pub fn w1(x: f64) -> f64 {
    if x < SERIES_SWITCH {
        moment_series(x, |n| 1.0 / (n + 2.0))
    } else {
        (1.0 - (1.0 + x) * (-x).exp()) / (x * x)
    }
}

/// `∫_0^1∫_0^1 (1−s)(1−s') e^{−x|s−s'|}`.
pub fn g_aa(x: f64) -> f64 {
    if x < SERIES_SWITCH {
        moment_series(x, |n| 2.0 / ((n + 1.0) * (n + 2.0) * (n + 4.0)))
    } else {
        let e = (-x).exp();
        2.0 / (3.0 * x) - 1.0 / (x * x) + 2.0 * (1.0 - (1.0 + x) * e) / x.powi(4)
    }
}

/// `∫_0^1∫_0^1 (1−s) s' e^{−x|s−s'|}`.
pub fn g_ab(x: f64) -> f64 {
    if x < SERIES_SWITCH {
        moment_series(x, |n| 1.0 / ((n + 1.0) * (n + 4.0)))
    } else {
        let e = (-x).exp();
        1.0 / (3.0 * x) + ((x * x + 2.0 * x + 2.0) * e - 2.0) / x.powi(4)
    }
}

/// Everything needed to glue screened energies: the energy itself, the
/// moments `L = ∫w e^{−α(b−y)}`, `R = ∫w e^{−α(y−a)}` and the length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenedSummary {
    pub energy: f64,
    pub left: f64,
    pub right: f64,
    pub len: f64,
    alpha: f64,
}

impl ScreenedSummary {
    pub fn of_cell(c: &Cell, alpha: f64) -> Self {
        let l = c.len();
        let x = alpha * l;
        let (a, b) = (c.va, c.vb);
        let (gaa, gab, w0x, w1x) = (g_aa(x), g_ab(x), w0(x), w1(x));
        ScreenedSummary {
            energy: -l * l * (a * a * gaa + 2.0 * a * b * gab + b * b * gaa),
            left: l * (a * w1x + b * w0x),
            right: l * (a * w0x + b * w1x),
            len: l,
            alpha,
        }
    }

    pub fn of(w: &PiecewiseLinear, alpha: f64) -> Self {
        let mut cells = w.cells().iter();
        let first = ScreenedSummary::of_cell(cells.next().expect("nonempty"), alpha);
        cells.fold(first, |acc, c| acc.concat(&ScreenedSummary::of_cell(c, alpha)))
    }

    /// Summary of `self` followed by `other`.
    pub fn concat(&self, other: &ScreenedSummary) -> ScreenedSummary {
        let ea = (-self.alpha * self.len).exp();
        let eb = (-self.alpha * other.len).exp();
        ScreenedSummary {
            energy: self.energy + other.energy - 2.0 * self.left * other.right,
            left: self.left * eb + other.left,
            right: self.right + ea * other.right,
            len: self.len + other.len,
            alpha: self.alpha,
        }
    }

    /// Summary of the mirror image.
    pub fn reflected(&self) -> ScreenedSummary {
        ScreenedSummary {
            left: self.right,
            right: self.left,
            ..*self
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::param("alpha", format!("must be finite and > 0, got {alpha}")));
    }
    Ok(())
}

/// `−∫∫ w(y)w(y') e^{−α|y−y'|}` over the domain of `w`, in closed form.
pub fn screened_energy(w: &PiecewiseLinear, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(ScreenedSummary::of(w, alpha).energy)
}

/// `lim E^α_{0,nT}(φ[f, θf, f, …])/(nT)` by `doublings` period doublings
/// followed by Richardson extrapolation of the `1/length` boundary term.
pub fn e_infinity(seg: &Segment, alpha: f64, doublings: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if doublings < 4 {
        return Err(Error::param("doublings", "must be >= 4"));
    }
    let s = ScreenedSummary::of(&seg.shape, alpha);
    let mut block = s.concat(&s.reflected());
    let mut prev_val = block.energy / block.len;
    let mut prev_ext = f64::NAN;
    let mut ext = f64::NAN;
    for _ in 1..doublings {
        block = block.concat(&block);
        let val = block.energy / block.len;
        prev_ext = ext;
        ext = 2.0 * val - prev_val;
        prev_val = val;
    }
    let diff = (ext - prev_ext).abs();
    if !(diff <= 1e-8 * ext.abs()) && diff > 0.0 {
        return Err(Error::no_conv(
            "e_infinity",
            format!("extrapolants differ by {diff:e} after {doublings} doublings"),
        ));
    }
    Ok(ext)
}

/// Doubling count that makes the doubled window about `40/α` long.
pub fn auto_doublings(seg: &Segment, alpha: f64) -> usize {
    let need = (40.0 / (alpha * seg.length())).log2().ceil();
    let need = if need.is_finite() && need > 0.0 { need as usize + 2 } else { 2 };
    need.max(DEFAULT_DOUBLINGS)
}

/// [`e_infinity`] with [`auto_doublings`].
pub fn e_infinity_auto(seg: &Segment, alpha: f64) -> Result<f64> {
    e_infinity(seg, alpha, auto_doublings(seg, alpha))
}

/// Closed-form periodic value `[E(w) − 2LR/(1−e^{−αP})]/P` with `w = (f, θf)`
/// and `P = 2T`; used as an oracle for [`e_infinity`].
pub fn e_infinity_periodic(seg: &Segment, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let s = ScreenedSummary::of(&seg.shape, alpha);
    let w = s.concat(&s.reflected());
    let q = -(-alpha * w.len).exp_m1();
    Ok((w.energy - 2.0 * w.left * w.right / q) / w.len)
}

/// Outcome of one reflection-positivity comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`.
    pub slack: f64,
    /// `(L(F₋) − R(F₊))²`, which the slack equals exactly.
    pub predicted_slack: f64,
}

/// Compares `E(φ[F₋, F₊])` with `½E(φ[θF₊, F₊]) + ½E(φ[F₋, θF₋])`.
/// `minus` may be empty.
pub fn check_rp_inequality(minus: &[Segment], plus: &[Segment], alpha: f64) -> Result<RpReport> {
    check_alpha(alpha)?;
    if plus.is_empty() {
        return Err(Error::InvalidConfiguration("plus sequence must be nonempty".into()));
    }
    let joined: Vec<Segment> = minus.iter().chain(plus).cloned().collect();
    let lhs = screened_energy(&juxtapose_slice(&joined).expect("nonempty"), alpha)?;
    let mirrored_plus: Vec<Segment> = reflect_all(plus).into_iter().chain(plus.iter().cloned()).collect();
    let mut rhs = 0.5 * screened_energy(&juxtapose_slice(&mirrored_plus).expect("nonempty"), alpha)?;
    let pr = ScreenedSummary::of(&juxtapose_slice(plus).expect("nonempty"), alpha).right;
    let predicted_slack = if minus.is_empty() {
        // an empty F₋ contributes nothing on either side
        pr * pr
    } else {
        let mirrored_minus: Vec<Segment> = minus.iter().cloned().chain(reflect_all(minus)).collect();
        rhs += 0.5 * screened_energy(&juxtapose_slice(&mirrored_minus).expect("nonempty"), alpha)?;
        let ml = ScreenedSummary::of(&juxtapose_slice(minus).expect("nonempty"), alpha).left;
        (ml - pr).powi(2)
    };
    Ok(RpReport {
        lhs,
        rhs,
        slack: lhs - rhs,
        predicted_slack,
    })
}

/// Outcome of one chessboard comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChessboardReport {
    pub energy: f64,
    /// `Σ T_i e_∞(f_i)`.
    pub bound: f64,
    /// `energy − bound`.
    pub slack: f64,
}

/// Compares `E(φ[F])` with `Σ T_i e_∞(f_i)`.
pub fn check_chessboard_bound(seq: &SegmentSequence, alpha: f64) -> Result<ChessboardReport> {
    let energy = screened_energy(&juxtapose(seq), alpha)?;
    let mut bound = 0.0;
    for s in seq.items() {
        bound += s.length() * e_infinity_auto(s, alpha)?;
    }
    Ok(ChessboardReport {
        energy,
        bound,
        slack: energy - bound,
    })
}

/// `Φ(α) = ∫_0^P D(t) Σ_n e^{−α|t+nP|} dt`, which equals
/// `∫_0^P∫_R |u(y) − u(y')|² e^{−α|y−y'|} dy' dy`.
pub fn screened_difference(gram: &ShiftGram, alpha: f64) -> f64 {
    let p = gram.period();
    let q = -(-alpha * p).exp_m1();
    let kernel = |t: f64| ((-alpha * t).exp() + (-alpha * (p - t)).exp()) / q;
    // both exponentials underflow
    let skip = |a: f64, b: f64| alpha * a > 745.0 && alpha * (p - b) > 745.0;
    gram.integrate(kernel, 2.0 / alpha, 1, skip)
}

/// `∫_0^∞ α f(α) dα` on a log grid over `[1e−4/h, 1e4/h]` with power-law
/// tails fitted at both ends.
pub fn alpha_integrate<F: Fn(f64) -> f64 + Sync>(f: F, h: f64) -> f64 {
    let (lo, hi) = ((1e-4 / h).ln(), (1e4 / h).ln());
    let panels = 96;
    let g = GaussLegendre::order8();
    let width = (hi - lo) / panels as f64;
    let body: f64 = (0..panels)
        .into_par_iter()
        .map(|i| {
            let a = lo + i as f64 * width;
            g.integrate(a, a + width, |s| {
                let al = s.exp();
                al * al * f(al)
            })
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    // f ∝ α^p near each end; ∫_0^a α·f = a²f(a)/(2+p), ∫_b^∞ α·f = −b²f(b)/(2+p)
    let tail = |x: f64, dir: f64| {
        let fx = f(x);
        if fx == 0.0 {
            return 0.0;
        }
        let x2 = x * (0.05 * dir).exp();
        let p = (f(x2) / fx).ln() / (0.05 * dir);
        x * x * fx / (2.0 + p).abs()
    };
    body + tail(lo.exp(), 1.0) + tail(hi.exp(), -1.0)
}

/// `∫_0^∞ α e^{−αd} dα` through [`alpha_integrate`]; equals `1/d²`.
pub fn kernel_identity(d: f64) -> f64 {
    alpha_integrate(|a| (-a * d).exp(), 1.0)
}

/// Per-α comparison of the screened difference energy of a profile with the
/// sum over its bumps, each periodized by reflection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterReport {
    pub alphas: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `lhs − rhs`, one per α.
    pub slack: Vec<f64>,
    /// α-integrated left side (the H^{1/2} seminorm by quadrature).
    pub integrated_lhs: f64,
    /// α-integrated right side.
    pub integrated_rhs: f64,
    /// `‖u‖²_{H^{1/2}}` from the exact corner-pair sum.
    pub exact_norm: f64,
    /// `c₀Σh_i²`, the closed form of the integrated right side.
    pub bump_bound: f64,
}

fn tent(ell: f64) -> SawtoothProfile {
    SawtoothProfile::new(2.0 * ell, 0.0, 1, vec![0.0, ell]).expect("valid tent")
}

/// Checks `∫∫|u−ũ|²e^{−α|y−y'|} ≥ Σ_i (same for the reflected bump i)` at
/// each α, and the α-integrated version `‖u‖²_{H^{1/2}} ≥ c₀Σh_i²`.
pub fn check_master_inequality(profile: &SawtoothProfile, alphas: &[f64]) -> Result<MasterReport> {
    for &a in alphas {
        check_alpha(a)?;
    }
    let gram = ShiftGram::new(profile);
    let gaps = profile.gaps();
    // tents of equal width share their table
    let mut widths: Vec<(f64, usize)> = Vec::new();
    for g in &gaps {
        match widths.iter_mut().find(|(w, _)| (w - g).abs() <= 1e-15 * profile.period()) {
            Some(e) => e.1 += 1,
            None => widths.push((*g, 1)),
        }
    }
    let tents: Vec<(ShiftGram, f64)> = widths
        .iter()
        .map(|&(w, n)| (ShiftGram::new(&tent(w)), n as f64))
        .collect();
    let rhs_at = |a: f64| -> f64 {
        tents
            .iter()
            .map(|(g, n)| 0.5 * n * screened_difference(g, a))
            .sum()
    };
    let lhs: Vec<f64> = alphas.iter().map(|&a| screened_difference(&gram, a)).collect();
    let rhs: Vec<f64> = alphas.iter().map(|&a| rhs_at(a)).collect();
    let slack = lhs.iter().zip(&rhs).map(|(l, r)| l - r).collect();
    let h = profile.period();
    let integrated_lhs = alpha_integrate(|a| screened_difference(&gram, a), h);
    let integrated_rhs = alpha_integrate(rhs_at, h);
    Ok(MasterReport {
        alphas: alphas.to_vec(),
        lhs,
        rhs,
        slack,
        integrated_lhs,
        integrated_rhs,
        exact_norm: h_half_sq_exact(profile),
        bump_bound: c0() * gaps.iter().map(|g| g * g).sum::<f64>(),
    })
}

/// A random segment of length in `[0.05, 2]` with up to `max_cells` cells
/// and values in `[−1, 1]`.
pub fn random_segment<R: Rng>(rng: &mut R, max_cells: usize) -> Segment {
    let t = rng.gen_range(0.05..2.0);
    let n = rng.gen_range(1..=max_cells.max(1));
    let mut knots: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.0..t)).collect();
    knots.push(0.0);
    knots.push(t);
    knots.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    knots.dedup();
    let values: Vec<f64> = knots.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
    Segment::new(&knots, &values).expect("valid random segment")
}

/// Minimum, mean and count of slacks over a family of trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlackStats {
    pub trials: usize,
    pub min_slack: f64,
    pub mean_slack: f64,
    /// Trials with slack below the family's tolerance.
    pub violations: usize,
}

impl SlackStats {
    fn from(slacks: &[f64], tol: f64) -> Self {
        SlackStats {
            trials: slacks.len(),
            min_slack: slacks.iter().cloned().fold(f64::INFINITY, f64::min),
            mean_slack: slacks.iter().sum::<f64>() / slacks.len().max(1) as f64,
            violations: slacks.iter().filter(|&&s| s < tol).count(),
        }
    }
}

/// Randomized verification of all inequality families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub positive_definite: SlackStats,
    pub reflection_positivity: SlackStats,
    pub chessboard: SlackStats,
    pub master: SlackStats,
    pub master_integrated: SlackStats,
    /// Largest `|e_∞ − periodic closed form|/|closed form|` seen.
    pub e_infinity_max_rel_error: f64,
}

impl VerificationReport {
    pub fn all_hold(&self) -> bool {
        [
            &self.positive_definite,
            &self.reflection_positivity,
            &self.chessboard,
            &self.master,
            &self.master_integrated,
        ]
        .iter()
        .all(|s| s.violations == 0)
    }
}

/// Runs `trials` random sequence trials per α and `master_trials` random
/// profiles through the master inequality. Trial `i` uses seed `seed + i`.
pub fn run_trials(
    trials: usize,
    master_trials: usize,
    alphas: &[f64],
    seed: u64,
) -> Result<VerificationReport> {
    for &a in alphas {
        check_alpha(a)?;
    }
    struct Trial {
        pd: Vec<f64>,
        rp: Vec<f64>,
        cb: Vec<f64>,
        e_err: f64,
    }
    let results: Vec<Result<Trial>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let n_minus = rng.gen_range(0..=3);
            let n_plus = rng.gen_range(1..=3);
            let minus: Vec<Segment> = (0..n_minus).map(|_| random_segment(&mut rng, 5)).collect();
            let plus: Vec<Segment> = (0..n_plus).map(|_| random_segment(&mut rng, 5)).collect();
            let cb_len = rng.gen_range(1..=6);
            let cb_seq =
                SegmentSequence::new((0..cb_len).map(|_| random_segment(&mut rng, 5)).collect())?;
            let mut t = Trial {
                pd: vec![],
                rp: vec![],
                cb: vec![],
                e_err: 0.0,
            };
            for &a in alphas {
                let all: Vec<Segment> = minus.iter().chain(&plus).cloned().collect();
                let w = juxtapose_slice(&all).expect("nonempty");
                t.pd.push(-screened_energy(&w, a)?);
                t.rp.push(check_rp_inequality(&minus, &plus, a)?.slack);
                t.cb.push(check_chessboard_bound(&cb_seq, a)?.slack);
                for s in cb_seq.items() {
                    let exact = e_infinity_periodic(s, a)?;
                    let ext = e_infinity_auto(s, a)?;
                    if exact != 0.0 {
                        t.e_err = t.e_err.max(((ext - exact) / exact).abs());
                    }
                }
            }
            Ok(t)
        })
        .collect();
    let mut pd = vec![];
    let mut rp = vec![];
    let mut cb = vec![];
    let mut e_err: f64 = 0.0;
    for r in results {
        let t = r?;
        pd.extend(t.pd);
        rp.extend(t.rp);
        cb.extend(t.cb);
        e_err = e_err.max(t.e_err);
    }
    let masters: Vec<Result<MasterReport>> = (0..master_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1 << 32).wrapping_add(i as u64));
            let p = random_profile(&mut rng, 1.0, 16);
            check_master_inequality(&p, alphas)
        })
        .collect();
    let mut ms = vec![];
    let mut mi = vec![];
    for r in masters {
        let m = r?;
        ms.extend(m.slack.iter().zip(&m.lhs).map(|(s, l)| s / l.abs().max(1e-300)));
        mi.push((m.integrated_lhs - m.integrated_rhs) / m.integrated_lhs);
    }
    Ok(VerificationReport {
        seed,
        alphas: alphas.to_vec(),
        positive_definite: SlackStats::from(&pd, -1e-12),
        reflection_positivity: SlackStats::from(&rp, -1e-9),
        chessboard: SlackStats::from(&cb, -1e-9),
        master: SlackStats::from(&ms, -1e-9),
        master_integrated: SlackStats::from(&mi, -1e-6),
        e_infinity_max_rel_error: e_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::GaussLegendre;

    fn ramp() -> Segment {
        Segment::new(&[0.0, 1.0], &[0.0, 1.0]).unwrap()
    }

    // brute-force double integral, split at the diagonal
    fn brute(w: &PiecewiseLinear, alpha: f64) -> f64 {
        let g = GaussLegendre::new(20);
        let (a, b) = (w.start(), w.end());
        let n = 64;
        let inner = |y: f64| -> f64 {
            let f = |yp: f64| w.eval(yp) * (-alpha * (y - yp).abs()).exp();
            let mut s = 0.0;
            let mut knots: Vec<f64> = w.cells().iter().map(|c| c.a).collect();
            knots.push(b);
            knots.push(y);
            knots.sort_by(|p, q| p.partial_cmp(q).unwrap());
            for k in knots.windows(2) {
                if k[1] > k[0] {
                    s += g.integrate(k[0], k[1], f);
                }
            }
            s
        };
        let _ = (a, b);
        -w.cells()
            .iter()
            .map(|c| g.composite(c.a, c.b, n, |y| w.eval(y) * inner(y)))
            .sum::<f64>()
    }

    #[test]
    fn primitives_match_closed_forms_across_switch() {
        for &x in &[0.999_999, 1.0, 1.000_001] {
            let (a, b) = (w0(x), w0(x + 2e-6));
            assert!((a - b).abs() < 1e-6);
        }
        let x: f64 = 0.3;
        let e = (-x).exp();
        assert!((w0(x) - (x - 1.0 + e) / (x * x)).abs() < 1e-14);
        assert!((g_aa(x) - (2.0 / (3.0 * x) - 1.0 / (x * x) + 2.0 * (1.0 - (1.0 + x) * e) / x.powi(4))).abs() < 1e-11);
        assert!((g_aa(1e-9) - 0.25).abs() < 1e-9);
        assert!((g_ab(1e-9) - 0.25).abs() < 1e-9);
    }

    #[test]
    fn reflect_and_juxtapose() {
        let f = ramp();
        let r = reflect(&f);
        assert_eq!(r.shape().eval(0.0), 1.0);
        assert_eq!(reflect(&r), f);
        let seq = SegmentSequence::new(vec![f.clone(), r]).unwrap();
        let t = juxtapose(&seq);
        assert_eq!(t.length(), 2.0);
        assert_eq!(t.eval(1.5), 0.5);
    }

    #[test]
    fn constant_screened_energy() {
        let c = 0.7;
        let t = 1.3;
        let alpha = 2.0;
        let w = PiecewiseLinear::from_knots(&[0.0, 0.4, t], &[c, c, c]).unwrap();
        let expect = -c * c * (2.0 * t / alpha - 2.0 * (1.0 - (-alpha * t).exp()) / (alpha * alpha));
        assert!((screened_energy(&w, alpha).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn screened_energy_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &alpha in &[0.1, 1.0, 10.0] {
            let s = random_segment(&mut rng, 4);
            let w = s.shape();
            let e = screened_energy(w, alpha).unwrap();
            let b = brute(w, alpha);
            assert!((e - b).abs() < 1e-9 * b.abs().max(1.0), "{e} {b}");
            assert!(e <= 0.0);
        }
    }

    #[test]
    fn e_infinity_constant_and_oracle() {
        let c = Segment::new(&[0.0, 0.5], &[1.5, 1.5]).unwrap();
        for &alpha in &[0.5, 1.0, 4.0] {
            let v = e_infinity_auto(&c, alpha).unwrap();
            assert!((v + 2.0 * 1.5 * 1.5 / alpha).abs() < 1e-8 * v.abs(), "{v}");
            let p = e_infinity_periodic(&c, alpha).unwrap();
            assert!((p + 2.0 * 1.5 * 1.5 / alpha).abs() < 1e-12 * p.abs());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let s = random_segment(&mut rng, 5);
            let a = rng.gen_range(0.1..10.0);
            let x = e_infinity_auto(&s, a).unwrap();
            let p = e_infinity_periodic(&s, a).unwrap();
            assert!((x - p).abs() < 1e-8 * p.abs(), "{x} {p}");
            let r = e_infinity_auto(&reflect(&s), a).unwrap();
            assert!((x - r).abs() < 1e-10 * p.abs());
        }
        // too few doublings for the screening length
        let short = Segment::new(&[0.0, 0.01], &[1.0, 0.0]).unwrap();
        assert!(e_infinity(&short, 0.1, 6).unwrap_err().is_non_convergence());
        // zero-mean fast oscillation averages out
        let osc = Segment::new(&[0.0, 0.001], &[1.0, -1.0]).unwrap();
        let v = e_infinity_auto(&osc, 1.0).unwrap();
        assert!(v.abs() < 1e-6, "{v}");
    }

    #[test]
    fn rp_equality_and_slack_identity() {
        let f = random_segment(&mut ChaCha8Rng::seed_from_u64(3), 4);
        let plus = vec![f.clone()];
        let minus = vec![reflect(&f)];
        let r = check_rp_inequality(&minus, &plus, 1.0).unwrap();
        assert!(r.slack.abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let minus: Vec<Segment> = (0..2).map(|_| random_segment(&mut rng, 4)).collect();
            let plus: Vec<Segment> = (0..3).map(|_| random_segment(&mut rng, 4)).collect();
            let r = check_rp_inequality(&minus, &plus, 0.7).unwrap();
            assert!(r.slack >= -1e-12);
            assert!((r.slack - r.predicted_slack).abs() < 1e-10 * r.lhs.abs().max(1.0));
        }
        // empty F₋: E(f) ≥ ½E(θf, f), and by mirror symmetry E(f) ≥ ½E(f, θf)
        let r = check_rp_inequality(&[], &plus, 1.0).unwrap();
        let e = screened_energy(f.shape(), 1.0).unwrap();
        let fr = f.shape().reflected();
        let ef = screened_energy(&fr.concat(f.shape()), 1.0).unwrap();
        assert!((r.lhs - e).abs() < 1e-14 && (r.rhs - 0.5 * ef).abs() < 1e-14);
        assert!(r.slack >= 0.0);
        let mirrored = check_rp_inequality(&[], &[reflect(&f)], 1.0).unwrap();
        let ef2 = screened_energy(&f.shape().concat(&fr), 1.0).unwrap();
        assert!((mirrored.rhs - 0.5 * ef2).abs() < 1e-14);
        assert!(e >= 0.5 * ef2);
    }

    #[test]
    fn chessboard_symmetric_periodic_tends_to_equality() {
        let f = Segment::new(&[0.0, 0.25, 0.5], &[0.0, 1.0, 0.0]).unwrap();
        let mut prev = f64::INFINITY;
        for n in [2usize, 8, 32, 128, 512] {
            let seq = SegmentSequence::new(vec![f.clone(); n]).unwrap();
            let r = check_chessboard_bound(&seq, 1.0).unwrap();
            let rel = r.slack / r.energy.abs();
            assert!(r.slack >= -1e-9 && rel < prev);
            prev = rel;
        }
        // boundary defect decays like 1/n
        assert!(prev < 5e-3);
    }

    #[test]
    fn kernel_identity_values() {
        for &d in &[0.1, 1.0, 3.0] {
            let v = kernel_identity(d);
            assert!((v * d * d - 1.0).abs() < 1e-6, "{d} {v}");
        }
    }

    #[test]
    fn master_equality_for_equispaced() {
        let p = SawtoothProfile::new(1.0, 0.0, 1, vec![0.0, 0.25, 0.5, 0.75]).unwrap();
        let r = check_master_inequality(&p, &[0.1, 1.0, 10.0]).unwrap();
        for (s, l) in r.slack.iter().zip(&r.lhs) {
            assert!(s.abs() < 1e-12 * l, "{s}");
        }
        assert!((r.integrated_lhs - c0() / 4.0).abs() < 1e-5 * c0());
        assert!((r.integrated_rhs - r.bump_bound).abs() < 1e-5 * r.bump_bound);
    }

    #[test]
    fn single_bump_reproduces_c0() {
        let ell = 0.37;
        let g = ShiftGram::new(&tent(ell));
        let v = 0.5 * alpha_integrate(|a| screened_difference(&g, a), 2.0 * ell);
        assert!((v / (c0() * ell * ell) - 1.0).abs() < 1e-5, "{}", v / (c0() * ell * ell));
    }

    #[test]
    fn master_random_six_corner_has_slack() {
        let p = SawtoothProfile::new(1.0, 0.0, 1, vec![0.0, 0.1, 0.3, 0.45, 0.6, 0.85]).unwrap();
        let r = check_master_inequality(&p, &[1.0]).unwrap();
        assert!(r.slack[0] > 0.0);
        assert!(r.integrated_lhs > r.integrated_rhs);
        assert!((r.integrated_lhs - r.exact_norm).abs() < 1e-5 * r.exact_norm);
    }
}
