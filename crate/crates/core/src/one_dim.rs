//! Exact theory of the one-dimensional (x-independent) problem: the striped
//! energy `E_1D(M) = βc₀h²/M + εLM`, its even minimizer, the equispaced
//! sawtooth and the gap-spread lower bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{ModelParams, SawtoothProfile};
use crate::special::{c0, cs};

/// Default factor in the regime test `β > factor·εL/h²`.
pub const DEFAULT_REGIME_FACTOR: f64 = 10.0;

/// Optimal even interface count of the striped state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneDimResult {
    /// One value, or two on an exact tie.
    pub m_star: Vec<usize>,
    pub e_star: f64,
    pub c0: f64,
    pub cs: f64,
}

fn check_even(m: usize) -> Result<()> {
    if m < 2 || m % 2 != 0 {
        return Err(Error::param("M", format!("must be an even integer >= 2, got {m}")));
    }
    Ok(())
}

/// `βc₀h²/M + εLM`.
pub fn e1d(m: usize, params: &ModelParams) -> Result<f64> {
    check_even(m)?;
    Ok(e1d_real(m as f64, params))
}

fn e1d_real(m: f64, params: &ModelParams) -> f64 {
    let h = params.height();
    params.beta() * c0() * h * h / m + params.epsilon() * params.length() * m
}

/// Real minimizer `√(βc₀h²/(εL))` of `E_1D` over `M > 0`.
pub fn real_minimizer(params: &ModelParams) -> f64 {
    let h = params.height();
    (params.beta() * c0() * h * h / (params.epsilon() * params.length())).sqrt()
}

/// Minimizes `E_1D` over even `M ≥ 2` by comparing the two even integers
/// bracketing the real minimizer. Needs `ε > 0`.
pub fn optimal_even_m(params: &ModelParams) -> Result<OneDimResult> {
    if !(params.epsilon() > 0.0) {
        return Err(Error::param("epsilon", "optimal M needs epsilon > 0"));
    }
    let r = real_minimizer(params);
    let lo = ((r / 2.0).floor() as usize * 2).max(2);
    let hi = lo + 2;
    let (el, eh) = (e1d_real(lo as f64, params), e1d_real(hi as f64, params));
    let (m_star, e_star) = if el < eh {
        (vec![lo], el)
    } else if eh < el {
        (vec![hi], eh)
    } else {
        (vec![lo, hi], el)
    };
    Ok(OneDimResult {
        m_star,
        e_star,
        c0: c0(),
        cs: cs(),
    })
}

/// The sawtooth with `M` equispaced corners `y0 + jh/M`, slope `+1` after
/// `y0` and value `a` there.
pub fn make_w_m(m: usize, params: &ModelParams, y0: f64, a: f64) -> Result<SawtoothProfile> {
    check_even(m)?;
    let h = params.height();
    let corners: Vec<f64> = (0..m).map(|j| j as f64 * h / m as f64).collect();
    SawtoothProfile::from_anchor(h, y0, a, 1, &corners.iter().map(|c| c + y0).collect::<Vec<_>>())
}

/// `(E_1D(M₀), βc₀Σ(h_i − h/M₀)²)` for a profile with `M₀` corners.
///
/// `β‖u‖²_{H^{1/2}} + εLM₀` is bounded below by the sum of the two parts.
pub fn lower_bound_decomposition(profile: &SawtoothProfile, params: &ModelParams) -> (f64, f64) {
    let m = profile.interface_count();
    let h = profile.period();
    let mean_gap = h / m as f64;
    let spread: f64 = profile.gaps().iter().map(|g| (g - mean_gap).powi(2)).sum();
    (e1d_real(m as f64, params), params.beta() * c0() * spread)
}

/// Comparison of the optimal striped energy with `hL·c_s√(βε/L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsReport {
    pub ratio: f64,
    /// `Lε/(h²β)`.
    pub small_parameter: f64,
    pub in_regime: bool,
    /// `|ratio − 1| ≤ factor·Lε/(h²β)`; only meaningful in the regime.
    pub within_bound: bool,
}

/// [`cs_asymptotic_check_with`] at the default regime factor.
pub fn cs_asymptotic_check(params: &ModelParams) -> Result<CsReport> {
    cs_asymptotic_check_with(params, DEFAULT_REGIME_FACTOR)
}

pub fn cs_asymptotic_check_with(params: &ModelParams, factor: f64) -> Result<CsReport> {
    let opt = optimal_even_m(params)?;
    let (h, l) = (params.height(), params.length());
    let scale = h * l * cs() * (params.beta() * params.epsilon() / l).sqrt();
    let ratio = opt.e_star / scale;
    let small = l * params.epsilon() / (h * h * params.beta());
    let in_regime = params.beta() > factor * params.epsilon() * l / (h * h);
    Ok(CsReport {
        ratio,
        small_parameter: small,
        in_regime,
        within_bound: (ratio - 1.0).abs() <= factor * small,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64, eps: f64) -> ModelParams {
        ModelParams::new(beta, eps, 1.0, 1.0).unwrap()
    }

    #[test]
    fn e1d_examples() {
        assert!((e1d(2, &params(0.0, 0.01)).unwrap() - 0.02).abs() < 1e-16);
        let v = e1d(130, &params(1.0, 1e-4)).unwrap();
        assert!((v - (c0() / 130.0 + 0.013)).abs() < 1e-15);
        assert!(e1d(3, &params(1.0, 1.0)).is_err());
        assert!(e1d(0, &params(1.0, 1.0)).is_err());
    }

    #[test]
    fn optimum_matches_brute_force() {
        for &(b, e) in &[(1.0, 1e-4), (0.0, 1.0), (1.0, 1e-2), (3.0, 1e-5), (1e-3, 1e-5), (1.0, 1.0)] {
            let p = params(b, e);
            let res = optimal_even_m(&p).unwrap();
            let bound = (10.0 * real_minimizer(&p) + 10.0) as usize;
            let best = (1..=bound / 2)
                .map(|k| e1d(2 * k, &p).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(res.e_star, best, "{b} {e}");
            assert_eq!(res.e_star, e1d(res.m_star[0], &p).unwrap());
        }
        assert_eq!(optimal_even_m(&params(0.0, 1.0)).unwrap().m_star, vec![2]);
        assert_eq!(optimal_even_m(&params(1e-3, 1e-5)).unwrap().m_star, vec![14]);
    }

    #[test]
    fn w_m_shape() {
        let p = params(1.0, 1.0);
        let w = make_w_m(2, &p, 0.0, 0.0).unwrap();
        assert_eq!(w.corners(), &[0.0, 0.5]);
        let w = make_w_m(8, &p, 0.3, 0.2).unwrap();
        assert!((w.evaluate(0.3 + 1.0 / 16.0) - (0.2 + 1.0 / 16.0)).abs() < 1e-14);
        for g in w.gaps() {
            assert!((g - 0.125).abs() < 1e-14);
        }
        let (_, s) = lower_bound_decomposition(&w, &p);
        assert!(s.abs() < 1e-25);
    }

    #[test]
    fn spread_example() {
        let u = SawtoothProfile::new(1.0, 0.0, 1, vec![0.0, 0.25, 0.375, 0.625]).unwrap();
        let (e, s) = lower_bound_decomposition(&u, &params(1.0, 1e-3));
        assert!((s - c0() * 0.03125).abs() < 1e-15);
        assert!((e - (c0() / 4.0 + 4e-3)).abs() < 1e-15);
    }

    #[test]
    fn cs_ratio_examples() {
        let r = cs_asymptotic_check(&params(1.0, 1e-6)).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-2 && r.in_regime && r.within_bound);
        let r = cs_asymptotic_check(&params(1.0, 1e-8)).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-3 && r.within_bound);
        assert!(!cs_asymptotic_check(&params(1.0, 1.0)).unwrap().in_regime);
    }
}
