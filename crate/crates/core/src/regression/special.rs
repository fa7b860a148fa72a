//! Normal and Student-t distribution functions.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::beta::beta_reg;

use statrs::function::gamma::ln_gamma;

use crate::error::{OmitError, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

pub fn ln_std_normal_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// Φ(z), computed through the complementary error function so that both
/// tails keep full relative precision.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// ln Φ(z), finite for every finite z.
pub fn ln_std_normal_cdf(z: f64) -> f64 {
    if z > -30.0 {
        return std_normal_cdf(z).ln();
    }
    // Asymptotic series of the Mills ratio; the truncation error is below
    // 1e-10 relative at z = -30.
    let z2 = z * z;
    let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    ln_std_normal_pdf(z) - (-z).ln() + series.ln()
}

/// φ(z) / Φ(z).
pub fn inverse_mills(z: f64) -> f64 {
    (ln_std_normal_pdf(z) - ln_std_normal_cdf(z)).exp()
}

/// Φ⁻¹(p): rational starting point refined by safeguarded Halley steps
/// against the erfc-based cdf.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(OmitError::ProbabilityDomain(p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut x = quantile_start(p);
    for _ in 0..4 {
        let err = std_normal_cdf(x) - p;
        let u = err / std_normal_pdf(x);
        let next = x - u / (1.0 + 0.5 * x * u);
        if !next.is_finite() {
            break;
        }
        let done = (next - x).abs() <= 1e-15 * x.abs().max(1.0);
        x = next;
        if done {
            break;
        }
    }
    Ok(x)
}

// Acklam's rational approximation, relative error about 1e-9.
fn quantile_start(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Degrees of freedom above which the t distribution is evaluated through a
/// Cornish-Fisher expansion around the normal.
const T_NORMAL_LIMIT: f64 = 1e7;

fn t_upper_tail(t: f64, nu: f64) -> f64 {
    // P(T > t) for t >= 0.
    0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + t * t))
}

fn t_pdf(t: f64, nu: f64) -> f64 {
    (ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln()
        - 0.5 * (nu + 1.0) * (t * t / nu).ln_1p())
    .exp()
}

/// Student-t cdf for real-valued degrees of freedom; `nu = inf` is the normal.
pub fn student_t_cdf(t: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(OmitError::InvalidInput(format!("degrees of freedom {nu} must be positive")));
    }
    if nu.is_infinite() {
        return Ok(std_normal_cdf(t));
    }
    let tail = t_upper_tail(t.abs(), nu);
    Ok(if t >= 0.0 { 1.0 - tail } else { tail })
}

/// Student-t quantile for real-valued degrees of freedom.
///
/// Solves the tail equation by Newton iteration kept inside a bisection
/// bracket. `nu = inf` returns the normal quantile.
pub fn student_t_quantile(p: f64, nu: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(OmitError::ProbabilityDomain(p));
    }
    if !(nu > 0.0) {
        return Err(OmitError::InvalidInput(format!("degrees of freedom {nu} must be positive")));
    }
    let z = std_normal_quantile(p)?;
    if nu.is_infinite() {
        return Ok(z);
    }
    if nu >= T_NORMAL_LIMIT {
        let z3 = z * z * z;
        let z5 = z3 * z * z;
        return Ok(z + (z3 + z) / (4.0 * nu) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * nu * nu));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let target = p.min(1.0 - p);
    let sign = if p > 0.5 { 1.0 } else { -1.0 };

    let mut lo = 0.0;
    let mut hi = z.abs().max(1.0);
    while t_upper_tail(hi, nu) > target {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(OmitError::InvalidInput(format!(
                "t quantile overflow at p = {p}, nu = {nu}"
            )));
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = t_upper_tail(s, nu) - target;
        if f > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s + f / t_pdf(s, nu);
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let done = (next - s).abs() <= 1e-14 * s.max(1.0) || hi - lo <= 1e-15 * hi;
        s = next;
        if done {
            break;
        }
    }
    Ok(sign * s)
}
