//! Scalar special functions shared by the models.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::{beta, gamma};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn ln_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// `log Φ(x)`, accurate far into the lower tail.
pub fn ln_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return normal_cdf(x).ln();
    }
    // Φ(x) = φ(x)/|x| · (1 − 1/x² + 3/x⁴ − 15/x⁶ + …)
    let r = 1.0 / (x * x);
    ln_normal_pdf(x) - (-x).ln() + (1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r))).ln()
}

/// Logistic map `e^v / (1 + e^v)`, evaluated without overflow.
pub fn logistic(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Log-ratio `log(w / (1 - w))`, the inverse of [`logistic`].
pub fn logit(w: f64) -> f64 {
    (w / (1.0 - w)).ln()
}

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

pub fn digamma(x: f64) -> f64 {
    gamma::digamma(x)
}

/// Trigamma function, the derivative of [`digamma`], for `x > 0`.
///
/// Shifts the argument above 10 with `ψ₁(x) = ψ₁(x + 1) + 1/x²` and sums the
/// asymptotic Bernoulli series there.
pub fn trigamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.0 {
        // reflection: ψ₁(1 - x) + ψ₁(x) = π² / sin²(πx)
        let s = (PI * x).sin();
        return -trigamma(1.0 - x) + PI * PI / (s * s);
    }
    let mut acc = 0.0;
    let mut z = x;
    while z < 10.0 {
        acc += 1.0 / (z * z);
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // Bernoulli terms B_{2k}/z^{2k+1}, k = 1..7, by Horner in 1/z²
    const B: [f64; 7] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
    ];
    let tail = B.iter().rev().fold(0.0, |acc, b| b + inv2 * acc);
    let series = inv + 0.5 * inv2 + inv * inv2 * tail;
    acc + series
}

/// Regularized incomplete beta `I_x(a, b)`: the Beta(a, b) CDF at `x`.
pub fn beta_cdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta::beta_reg(a, b, x)
    }
}

/// Beta(a, b) density at `x`.
pub fn beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let ln = (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - beta::ln_beta(a, b);
    ln.exp()
}
