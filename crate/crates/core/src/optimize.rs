//! Numerical minimization: the striped state, a period-doubling branched
//! trial state, local relaxation by corner moves, and phase sweeps.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{h_half_sq_exact, strain_energy, surface_energy, total_energy_exact, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::one_dim::{make_w_m, optimal_even_m};
use crate::profile::{l2_distance_sq, Configuration, ModelParams, SawtoothProfile, MERGE_TOL};
use crate::special::c0;

/// Stations of the striped candidate.
pub const DEFAULT_STATIONS: usize = 64;
/// Ratio of successive band lengths in the branched construction.
pub const DEFAULT_THETA: f64 = 0.25;
/// Stations per refinement band.
pub const STATIONS_PER_BAND: usize = 8;
/// Cap on the corner count of the finest column of a branched candidate.
pub const MAX_FINE_CORNERS: usize = 1 << 16;

/// The constant-in-x state `w_{M*}` on [`DEFAULT_STATIONS`] stations.
pub fn striped_candidate(params: &ModelParams) -> Result<Configuration> {
    striped_with(params, optimal_even_m(params)?.m_star[0])
}

fn striped_with(params: &ModelParams, m: usize) -> Result<Configuration> {
    let w = make_w_m(m, params, 0.0, 0.0)?;
    Configuration::uniform(*params, w, DEFAULT_STATIONS)
}

/// A branched trial state and its energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchedCandidate {
    pub config: Configuration,
    pub energy: EnergyBreakdown,
    pub levels: usize,
    /// Cells of the coarsest period `h/n0`.
    pub n0: usize,
    /// Length of the coarsest refinement band.
    pub band0: f64,
    pub theta: f64,
}

/// Corners of one cell of period `p` at refinement stage `t ∈ [0, 1]`: one
/// tooth at `t = 0`, two half-size teeth at `t = 1`, with linear
/// trajectories in between.
fn cell_corners(p: f64, t: f64) -> [f64; 4] {
    [0.0, 0.5 * p - 0.25 * t * p, 0.625 * p - 0.125 * t * p, 0.625 * p + 0.125 * t * p]
}

fn refining_profile(h: f64, cells: usize, t: f64) -> Result<SawtoothProfile> {
    let p = h / cells as f64;
    let corners: Vec<f64> = (0..cells)
        .flat_map(|i| cell_corners(p, t).map(|c| c + i as f64 * p))
        .collect();
    SawtoothProfile::from_anchor(h, 0.0, 0.0, 1, &corners)
}

/// `K Σ_k ‖q(t_{k+1}) − q(t_k)‖²` over one unit cell, `t_k = k/K`; a band of
/// period `P` and length `ℓ` carries strain `hP²·σ̃/ℓ`.
fn unit_band_strain(k: usize) -> f64 {
    let qs: Vec<SawtoothProfile> = (0..=k)
        .map(|i| refining_profile(1.0, 1, i as f64 / k as f64).expect("unit cell"))
        .collect();
    k as f64 * qs.windows(2).map(|w| l2_distance_sq(&w[0], &w[1], 0.0, 1.0)).sum::<f64>()
}

/// Model energy of the construction with `n0` coarse cells; returns the
/// energy and the optimal first band length.
fn branched_model(params: &ModelParams, levels: usize, n0: usize, theta: f64, sigma: f64) -> (f64, f64) {
    let (beta, eps, l, h) = (params.beta(), params.epsilon(), params.length(), params.height());
    let p0 = h / n0 as f64;
    let m_fine = 2.0 * n0 as f64 * (1u64 << levels) as f64;
    let austenite = beta * c0() * h * h / m_fine;
    if levels == 0 {
        return (austenite + 2.0 * eps * l * h / p0, 0.0);
    }
    let mut a = 0.0;
    let mut b = 0.0;
    let mut geo = 0.0;
    for m in 0..levels {
        let p = p0 / (1u64 << m) as f64;
        let th = theta.powi(m as i32);
        a += h * sigma * p * p / th;
        b += eps * h * th * (4.0 / p - 2.0 / p0);
        geo += th;
    }
    let band0 = (a / b).sqrt().min(l / geo);
    (austenite + a / band0 + b * band0 + 2.0 * eps * l * h / p0, band0)
}

fn check_levels(levels: usize) -> Result<()> {
    // the finest period is at most h/2^levels; keep it well above the merge tolerance
    if (levels as f64) > (1.0 / (4.0 * MERGE_TOL)).log2() - 1.0 {
        return Err(Error::param("levels", format!("{levels} levels would reach the corner-merge tolerance")));
    }
    Ok(())
}

/// Period-doubling construction with `levels` refinement bands toward
/// `x = 0`. The coarse cell count and the band lengths minimize the energy
/// of the construction; `levels = 0` gives the striped candidate.
pub fn branched_candidate(params: &ModelParams, levels: usize) -> Result<BranchedCandidate> {
    branched_with_theta(params, levels, DEFAULT_THETA)
}

pub fn branched_with_theta(params: &ModelParams, levels: usize, theta: f64) -> Result<BranchedCandidate> {
    check_levels(levels)?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param("theta", "must lie in (0, 1)"));
    }
    if levels == 0 {
        let config = striped_candidate(params)?;
        let n0 = config.u0().interface_count() / 2;
        return Ok(BranchedCandidate {
            energy: total_energy_exact(&config),
            config,
            levels,
            n0,
            band0: 0.0,
            theta,
        });
    }
    let sigma = unit_band_strain(STATIONS_PER_BAND);
    let n_max = (MAX_FINE_CORNERS >> (levels + 1).min(63)).max(1);
    let (n0, band0) = (1..=n_max)
        .map(|n| (n, branched_model(params, levels, n, theta, sigma)))
        .fold((0, (f64::INFINITY, 0.0)), |best, cur| if cur.1 .0 < best.1 .0 { cur } else { best });
    let (n0, band0) = (n0, band0.1);
    let config = branched_config(params, levels, n0, band0, theta)?;
    // the finest column is the equispaced sawtooth, whose seminorm is c₀h²/M
    let m_fine = config.u0().interface_count();
    let h = params.height();
    let energy = EnergyBreakdown::new(
        params.beta() * c0() * h * h / m_fine as f64,
        strain_energy(&config),
        surface_energy(&config),
    );
    Ok(BranchedCandidate {
        config,
        energy,
        levels,
        n0,
        band0,
        theta,
    })
}

fn branched_config(params: &ModelParams, levels: usize, n0: usize, band0: f64, theta: f64) -> Result<Configuration> {
    let (l, h) = (params.length(), params.height());
    let k = STATIONS_PER_BAND;
    let lens: Vec<f64> = (0..levels).map(|m| band0 * theta.powi(m as i32)).collect();
    let mut xs = vec![0.0];
    let mut ps = vec![refining_profile(h, n0 << (levels - 1), 1.0)?];
    // band m (0 = coarsest) spans [start_m, start_m + ℓ_m], finer bands lie below
    let mut start = 0.0;
    for m in (0..levels).rev() {
        let cells = n0 << m;
        for i in 1..=k {
            let s = i as f64 / k as f64;
            xs.push(start + s * lens[m]);
            ps.push(refining_profile(h, cells, 1.0 - s)?);
        }
        start += lens[m];
    }
    let last = xs.len() - 1;
    if l - xs[last] > 1e-9 * l {
        xs.push(l);
        ps.push(ps[last].clone());
    } else {
        xs[last] = l;
    }
    Configuration::new(*params, xs, ps)
}

/// Best branched candidate over `1..=max_levels` (at least one level).
pub fn branched_best(params: &ModelParams, max_levels: usize) -> Result<BranchedCandidate> {
    let mut best: Option<BranchedCandidate> = None;
    for levels in 1..=max_levels.max(1) {
        let c = branched_candidate(params, levels)?;
        if best.as_ref().map_or(true, |b| c.energy.total < b.energy.total) {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one level"))
}

/// Default refinement depth searched by [`branched_best`] callers.
pub const DEFAULT_MAX_LEVELS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    /// Maximum number of sweeps.
    pub max_iters: usize,
    /// Stop once a full sweep lowers the energy by less than this.
    pub tol_energy: f64,
    /// Allow corner-pair creation and annihilation.
    pub topology_moves: bool,
    pub seed: u64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions {
            max_iters: 5000,
            tol_energy: 1e-14,
            topology_moves: true,
            seed: 0,
        }
    }
}

impl RelaxOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::param("max_iters", "must be >= 1"));
        }
        if !(self.tol_energy > 0.0 && self.tol_energy.is_finite()) {
            return Err(Error::param("tol_energy", "must be finite and > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxResult {
    pub config: Configuration,
    pub energy: EnergyBreakdown,
    /// Total energy at the start and after every accepted move.
    pub trace: Vec<f64>,
    pub accepted: usize,
    pub iterations: usize,
    /// The last sweep gained less than `tol_energy`.
    pub converged: bool,
}

struct Relaxer {
    xs: Vec<f64>,
    ps: Vec<SawtoothProfile>,
    beta: f64,
    eps: f64,
    h: f64,
    aus: f64,
    strain: Vec<f64>,
    surf: Vec<f64>,
    total: f64,
    trace: Vec<f64>,
}

impl Relaxer {
    fn new(c: &Configuration) -> Relaxer {
        let mut r = Relaxer {
            xs: c.stations().to_vec(),
            ps: c.profiles().to_vec(),
            beta: c.params().beta(),
            eps: c.params().epsilon(),
            h: c.params().height(),
            aus: 0.0,
            strain: vec![],
            surf: vec![],
            total: 0.0,
            trace: vec![],
        };
        r.aus = r.beta * h_half_sq_exact(&r.ps[0]);
        r.strain = (0..r.xs.len() - 1).map(|j| r.cell_strain(&r.ps[j], &r.ps[j + 1], j)).collect();
        r.surf = (0..r.xs.len() - 1).map(|j| r.cell_surf(&r.ps[j], &r.ps[j + 1], j)).collect();
        r.total = r.sum(r.aus, &r.strain, &r.surf);
        r.trace.push(r.total);
        r
    }

    fn cell_strain(&self, a: &SawtoothProfile, b: &SawtoothProfile, j: usize) -> f64 {
        if a == b {
            0.0
        } else {
            l2_distance_sq(a, b, 0.0, self.h) / (self.xs[j + 1] - self.xs[j])
        }
    }

    fn cell_surf(&self, a: &SawtoothProfile, b: &SawtoothProfile, j: usize) -> f64 {
        let n = a.interface_count().max(b.interface_count());
        self.eps * (self.xs[j + 1] - self.xs[j]) * n as f64
    }

    fn sum(&self, aus: f64, strain: &[f64], surf: &[f64]) -> f64 {
        aus + strain.iter().sum::<f64>() + surf.iter().sum::<f64>()
    }

    /// Replaces stations `j0..=j1` by `p` if that lowers the energy.
    fn try_block(&mut self, j0: usize, j1: usize, p: SawtoothProfile) -> bool {
        let n = self.xs.len();
        let aus = if j0 == 0 { self.beta * h_half_sq_exact(&p) } else { self.aus };
        let mut strain = self.strain.clone();
        let mut surf = self.surf.clone();
        for j in j0.saturating_sub(1)..(j1 + 1).min(n - 1) {
            let a = if j >= j0 { &p } else { &self.ps[j] };
            let b = if j < j1 { &p } else { &self.ps[j + 1] };
            strain[j] = self.cell_strain(a, b, j);
            surf[j] = self.cell_surf(a, b, j);
        }
        let total = self.sum(aus, &strain, &surf);
        if total < self.total {
            for q in &mut self.ps[j0..=j1] {
                *q = p.clone();
            }
            self.aus = aus;
            self.strain = strain;
            self.surf = surf;
            assert!(total < self.total, "accepted move must lower the energy");
            self.total = total;
            self.trace.push(total);
            true
        } else {
            false
        }
    }

    /// Maximal runs of identical consecutive profiles.
    fn blocks(&self) -> Vec<(usize, usize)> {
        let mut out = vec![];
        let mut s = 0;
        for j in 1..=self.ps.len() {
            if j == self.ps.len() || self.ps[j] != self.ps[s] {
                out.push((s, j - 1));
                s = j;
            }
        }
        out
    }
}

/// Rebuilds a profile from unwrapped corners `u` (increasing, spanning less
/// than a period), anchored at `u[0]` where value and slope are unchanged.
fn rebuild(p: &SawtoothProfile, u: &[f64], anchor_index: usize) -> Option<SawtoothProfile> {
    let h = p.period();
    let gap = 1e-9 * h;
    for w in u.windows(2) {
        if w[1] - w[0] <= gap {
            return None;
        }
    }
    if u[0] + h - u[u.len() - 1] <= gap {
        return None;
    }
    let c = p.corners()[anchor_index];
    let slope = p.slope_after(anchor_index) as i8;
    SawtoothProfile::from_anchor(h, u[0], p.evaluate(c), slope, u).ok()
}

/// Corners starting at index `k`, unwrapped to be increasing.
fn unwrapped_from(p: &SawtoothProfile, k: usize) -> Vec<f64> {
    let m = p.interface_count();
    let h = p.period();
    (0..m)
        .map(|j| {
            let i = k + j;
            p.corners()[i % m] + if i >= m { h } else { 0.0 }
        })
        .collect()
}

/// Rigid shift of the segment between corners `i` and `i+1`.
fn translate(p: &SawtoothProfile, i: usize, d: f64) -> Option<SawtoothProfile> {
    let m = p.interface_count();
    if m == 2 {
        return Some(p.shifted(d));
    }
    let k = (i + m - 1) % m;
    let mut u = unwrapped_from(p, k);
    u[1] += d;
    u[2] += d;
    rebuild(p, &u, k)
}

/// Moves corner `i` by `d` and corner `i+2` by `−d`.
fn breathe(p: &SawtoothProfile, i: usize, d: f64) -> Option<SawtoothProfile> {
    let m = p.interface_count();
    if m < 4 {
        return None;
    }
    let k = (i + m - 1) % m;
    let mut u = unwrapped_from(p, k);
    u[1] += d;
    u[3] -= d;
    rebuild(p, &u, k)
}

/// Inserts an opposite-slope piece of width `w` at fraction `r` of segment
/// `i` and pushes corner `i+1` by `w` to keep the slopes balanced.
fn create(p: &SawtoothProfile, i: usize, r: f64, w: f64) -> Option<SawtoothProfile> {
    let mut u = unwrapped_from(p, i);
    let y = u[0] + r * (u[1] - u[0]);
    u[1] += w;
    u.insert(1, y);
    u.insert(2, y + w);
    rebuild(p, &u, i)
}

/// Removes segment `i` and pulls corner `i+2` back by its length.
fn annihilate(p: &SawtoothProfile, i: usize) -> Option<SawtoothProfile> {
    let m = p.interface_count();
    if m < 4 {
        return None;
    }
    let k = (i + m - 1) % m;
    let mut u = unwrapped_from(p, k);
    let g = u[2] - u[1];
    u[3] -= g;
    u.drain(1..3);
    rebuild(p, &u, k)
}

struct Step {
    size: f64,
    min: f64,
    max: f64,
}

impl Step {
    fn update(&mut self, ok: bool) {
        self.size = if ok { self.size * 1.5 } else { self.size * 0.6 }.clamp(self.min, self.max);
    }
}

/// Descends by accepting only strictly improving moves: corner-segment
/// translations and breathing moves, offset shifts, corner-pair creation and
/// annihilation, copying a neighboring station, and copying one station to
/// the whole slab. Moves act on maximal
/// runs of identical stations, so a constant-in-x state stays constant.
pub fn relax(start: &Configuration, opts: &RelaxOptions) -> Result<RelaxResult> {
    opts.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut r = Relaxer::new(start);
    let h = r.h;
    let m0 = r.ps.iter().map(|p| p.interface_count()).max().unwrap_or(2) as f64;
    let step = |s: f64| Step {
        size: s,
        min: 1e-13 * h,
        max: 0.25 * h,
    };
    let mut st_translate = step(0.1 * h / m0);
    let mut st_breathe = step(0.1 * h / m0);
    let mut st_offset = step(0.01 * h);
    let mut st_create = step(0.1 * h / m0);
    let n = r.xs.len();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        iterations += 1;
        let before = r.total;
        for j in 0..n {
            if j > 0 && r.ps[j] != r.ps[j - 1] {
                let p = r.ps[j - 1].clone();
                r.try_block(j, j, p);
            }
            if j + 1 < n && r.ps[j] != r.ps[j + 1] {
                let p = r.ps[j + 1].clone();
                r.try_block(j, j, p);
            }
        }
        // flattening: the whole slab takes the profile of one station
        if r.blocks().len() > 1 {
            for j in [0, rng.gen_range(0..n)] {
                let p = r.ps[j].clone();
                r.try_block(0, n - 1, p);
            }
        }
        for (j0, j1) in r.blocks() {
            let m = r.ps[j0].interface_count();
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut rng);
            for &i in &order {
                for (mv, st) in [(0, &mut st_translate), (1, &mut st_breathe)] {
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    let mut ok = false;
                    for s in [sign, -sign] {
                        let d = s * st.size;
                        let p = if mv == 0 { translate(&r.ps[j0], i, d) } else { breathe(&r.ps[j0], i, d) };
                        if let Some(p) = p {
                            if r.try_block(j0, j1, p) {
                                ok = true;
                                break;
                            }
                        }
                    }
                    st.update(ok);
                }
            }
            let mut ok = false;
            for s in [1.0, -1.0] {
                let p = r.ps[j0].raised(s * st_offset.size);
                if r.try_block(j0, j1, p) {
                    ok = true;
                    break;
                }
            }
            st_offset.update(ok);
            if opts.topology_moves {
                let m = r.ps[j0].interface_count();
                let i = rng.gen_range(0..m);
                if let Some(p) = annihilate(&r.ps[j0], i) {
                    r.try_block(j0, j1, p);
                }
                let m = r.ps[j0].interface_count();
                let i = rng.gen_range(0..m);
                let frac: f64 = rng.gen_range(0.05..0.95);
                let ok = match create(&r.ps[j0], i, frac, st_create.size) {
                    Some(p) => r.try_block(j0, j1, p),
                    None => false,
                };
                st_create.update(ok);
            }
        }
        if before - r.total < opts.tol_energy {
            converged = true;
            break;
        }
    }
    let config = Configuration::new(*start.params(), r.xs.clone(), r.ps.clone())?;
    Ok(RelaxResult {
        energy: total_energy_exact(&config),
        accepted: r.trace.len() - 1,
        trace: r.trace,
        config,
        iterations,
        converged,
    })
}

/// Parameter grid of a phase sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub beta_values: Vec<f64>,
    pub epsilon_values: Vec<f64>,
    /// Also relax the better of the two candidates.
    pub relaxed: bool,
    pub max_levels: usize,
    pub relax: RelaxOptions,
}

impl SweepGrid {
    pub fn new(beta_values: Vec<f64>, epsilon_values: Vec<f64>) -> Self {
        SweepGrid {
            beta_values,
            epsilon_values,
            relaxed: false,
            max_levels: DEFAULT_MAX_LEVELS,
            relax: RelaxOptions::default(),
        }
    }

    /// Logarithmically spaced values `lo..=hi`.
    pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    Striped,
    Branched,
    /// Exact tie; never resolved silently.
    Degenerate,
}

impl Winner {
    pub fn as_str(&self) -> &'static str {
        match self {
            Winner::Striped => "striped",
            Winner::Branched => "branched",
            Winner::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub epsilon: f64,
    /// `βε^{−1/3}L^{1/3}`.
    pub sigma: f64,
    pub e_striped: f64,
    pub e_branched: f64,
    pub e_relaxed: Option<f64>,
    /// Comparison of the striped and branched families.
    pub winner: Winner,
    pub m_star: usize,
    pub branched_levels: usize,
}

/// Runs every grid point (in parallel) for the given `L, h`; rows come out
/// in β-major order.
pub fn phase_sweep(grid: &SweepGrid, template: &ModelParams) -> Result<Vec<SweepRow>> {
    if grid.beta_values.is_empty() || grid.epsilon_values.is_empty() {
        return Err(Error::param("grid", "needs at least one beta and one epsilon"));
    }
    let points: Vec<(f64, f64)> = grid
        .beta_values
        .iter()
        .flat_map(|&b| grid.epsilon_values.iter().map(move |&e| (b, e)))
        .collect();
    points
        .par_iter()
        .map(|&(beta, eps)| sweep_point(grid, template, beta, eps))
        .collect()
}

fn sweep_point(grid: &SweepGrid, template: &ModelParams, beta: f64, eps: f64) -> Result<SweepRow> {
    let params = ModelParams::new(beta, eps, template.length(), template.height())?;
    let opt = optimal_even_m(&params)?;
    let e_striped = opt.e_star;
    let branched = branched_best(&params, grid.max_levels)?;
    let e_branched = branched.energy.total;
    let winner = if e_striped < e_branched {
        Winner::Striped
    } else if e_branched < e_striped {
        Winner::Branched
    } else {
        Winner::Degenerate
    };
    let e_relaxed = if grid.relaxed {
        let start = if winner == Winner::Branched {
            branched.config.clone()
        } else {
            striped_candidate(&params)?
        };
        Some(relax(&start, &grid.relax)?.energy.total)
    } else {
        None
    };
    Ok(SweepRow {
        beta,
        epsilon: eps,
        sigma: params.sigma(),
        e_striped,
        e_branched,
        e_relaxed,
        winner,
        m_star: opt.m_star[0],
        branched_levels: branched.levels,
    })
}

/// CSV with header `beta,epsilon,sigma,E_striped,E_branched,E_relaxed,winner,m_star`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("beta,epsilon,sigma,E_striped,E_branched,E_relaxed,winner,m_star\n");
    for r in rows {
        let relaxed = r.e_relaxed.map(|e| format!("{e:e}")).unwrap_or_default();
        s.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{},{},{}\n",
            r.beta,
            r.epsilon,
            r.sigma,
            r.e_striped,
            r.e_branched,
            relaxed,
            r.winner.as_str(),
            r.m_star
        ));
    }
    s
}

/// Measured constants of the two-sided scaling bound over a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    /// `max E_striped/(hL√(εβ/L))`.
    pub c_striped: f64,
    /// `max E_branched/(hL(ε/L)^{2/3})`.
    pub c_branched: f64,
    /// `min min(E_striped, E_branched)/(hL·min{√(εβ/L), (ε/L)^{2/3}})`.
    pub c_lower: f64,
    /// Every row satisfies `min E ≤ min{C_s√(εβ/L), C_b(ε/L)^{2/3}}·hL`.
    pub upper_holds: bool,
}

pub fn scaling_constants(rows: &[SweepRow], template: &ModelParams) -> ScalingConstants {
    let (l, h) = (template.length(), template.height());
    let s_scale = |r: &SweepRow| h * l * (r.epsilon * r.beta / l).sqrt();
    let b_scale = |r: &SweepRow| h * l * (r.epsilon / l).powf(2.0 / 3.0);
    let c_striped = rows.iter().map(|r| r.e_striped / s_scale(r)).fold(0.0, f64::max);
    let c_branched = rows.iter().map(|r| r.e_branched / b_scale(r)).fold(0.0, f64::max);
    let c_lower = rows
        .iter()
        .map(|r| r.e_striped.min(r.e_branched) / s_scale(r).min(b_scale(r)))
        .fold(f64::INFINITY, f64::min);
    let upper_holds = rows.iter().all(|r| {
        let e = r.e_striped.min(r.e_branched);
        e <= (c_striped * s_scale(r)).min(c_branched * b_scale(r)) * (1.0 + 1e-12)
    });
    ScalingConstants {
        c_striped,
        c_branched,
        c_lower,
        upper_holds,
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
