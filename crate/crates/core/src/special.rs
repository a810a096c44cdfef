//! Special functions: Riemann zeta at real arguments and the Clausen-type
//! cosine series `Σ_{k≥1} cos(kθ)/k³`.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Riemann zeta function for real `s > 1`.
///
/// Direct summation of the first terms followed by an Euler–Maclaurin tail
/// (five correction terms). For `s ≥ 2` the result is accurate to a few ulps.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta(s) needs s > 1");
    const N: usize = 32;
    let n = N as f64;
    // Sum from the small terms upward.
    let mut head = 0.0;
    for m in (1..N).rev() {
        head += (m as f64).powf(-s);
    }
    let tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * n.powf(-s - 5.0) / 30240.0
        - s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * (s + 5.0) * (s + 6.0) * n.powf(-s - 7.0)
            / 1_209_600.0;
    head + tail
}

/// ζ(3), computed once.
pub fn zeta3() -> f64 {
    static Z3: OnceLock<f64> = OnceLock::new();
    *Z3.get_or_init(|| zeta(3.0))
}

/// The striped-state constant `c₀ = 14 ζ(3) / π²`.
pub fn c0() -> f64 {
    14.0 * zeta3() / (PI * PI)
}

/// The scaling constant `c_s = 2 √c₀`.
pub fn cs() -> f64 {
    2.0 * c0().sqrt()
}

const CL3_TERMS: usize = 30;

fn cl3_coefficients() -> &'static [f64; CL3_TERMS] {
    static COEF: OnceLock<[f64; CL3_TERMS]> = OnceLock::new();
    COEF.get_or_init(|| {
        let mut c = [0.0; CL3_TERMS];
        for (i, slot) in c.iter_mut().enumerate() {
            let n = (i + 1) as f64;
            *slot = zeta(2.0 * n) / (n * (2.0 * n + 1.0) * (2.0 * n + 2.0));
        }
        c
    })
}

/// `Σ_{k≥1} cos(kθ)/k³ − ζ(3)`, for any real θ.
///
/// Uses the small-argument expansion
/// `ζ(3) − ¾θ² + ½θ² ln θ − θ² Σ_n ζ(2n)/(n(2n+1)(2n+2)) (θ/2π)^{2n}`
/// on `θ ∈ (0, π]`, and evenness/periodicity elsewhere.
pub fn cl3_minus_zeta3(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta.rem_euclid(two_pi);
    if t > PI {
        t = two_pi - t;
    }
    if t == 0.0 {
        return 0.0;
    }
    let x = (t / two_pi).powi(2);
    let coef = cl3_coefficients();
    let mut series = 0.0;
    for c in coef.iter().rev() {
        series = series * x + c;
    }
    series *= x;
    let t2 = t * t;
    -0.75 * t2 + 0.5 * t2 * t.ln() - t2 * series
}

/// `Σ_{k≥1} cos(kθ)/k³`.
pub fn cl3(theta: f64) -> f64 {
    zeta3() + cl3_minus_zeta3(theta)
}
