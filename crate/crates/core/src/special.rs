//! Special functions for the Matérn family: `1/Γ` near 1 and `K_ν` for `|ν| ≤ 1/2`.
//!
//! Evaluated in `f64` regardless of the caller's scalar type.

use std::f64::consts::PI;

// Taylor coefficients of 1/Γ(z) = Σ c_k z^k, k = 1..=26 (Abramowitz & Stegun 6.1.34).
const RGAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

/// `1/Γ(1 + x)` for `|x| ≤ 1`.
pub fn rgamma1p(x: f64) -> f64 {
    RGAMMA.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `Γ(ν)` for `ν ∈ (0, 1]`.
pub fn gamma_small(nu: f64) -> f64 {
    1.0 / (nu * rgamma1p(nu))
}

// Temme's auxiliary functions: (1/Γ(1-μ) - 1/Γ(1+μ)) / 2μ and the mean of the two.
fn temme_gammas(mu: f64) -> (f64, f64) {
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    // Even k (1-based) terms carry odd powers in rgamma1p.
    for (idx, &c) in RGAMMA.iter().enumerate().rev() {
        let k = idx + 1;
        if k % 2 == 0 {
            gam1 = gam1 * mu * mu + c;
        } else {
            gam2 = gam2 * mu * mu + c;
        }
    }
    (-gam1, gam2)
}

/// Modified Bessel function of the second kind `K_ν(x)` for `|ν| ≤ 1/2`, `x > 0`.
///
/// Temme's series below `x = 2`, Steed's continued fraction above.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    assert!(nu.abs() <= 0.5 + 1e-15, "order {nu} outside [-1/2, 1/2]");
    assert!(x > 0.0, "argument {x} must be positive");
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 100_000;
    let mu = nu;
    if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS {
            1.0
        } else {
            pimu / pimu.sin()
        };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2) = temme_gammas(mu);
        let gampl = rgamma1p(mu);
        let gammi = rgamma1p(-mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        for i in 1..MAX_ITER {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu * mu);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        sum
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu * mu;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..MAX_ITER {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        (PI / (2.0 * x)).sqrt() * (-x).exp() / s
    }
}

/// Matérn correlation `2^{1-ν}/Γ(ν) · x^ν K_ν(x)` with its limit 1 at `x = 0`.
pub fn matern_correlation(nu: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x > 700.0 {
        return 0.0;
    }
    let v = 2f64.powf(1.0 - nu) / gamma_small(nu) * x.powf(nu) * bessel_k(nu, x);
    v.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    // K_ν(x) = ∫_0^∞ exp(-x cosh t) cosh(νt) dt; the trapezoid rule converges
    // geometrically for this analytic, doubly-exponentially decaying integrand.
    fn k_quadrature(nu: f64, x: f64) -> f64 {
        let h = 1e-3f64;
        let mut sum = 0.5 * (-x).exp();
        let mut t = h;
        loop {
            let term = (-x * t.cosh()).exp() * (nu * t).cosh();
            sum += term;
            if term < 1e-300 || t > 60.0 {
                break;
            }
            t += h;
        }
        sum * h
    }

    #[test]
    fn gamma_values() {
        assert!((gamma_small(1.0) - 1.0).abs() < 1e-15);
        assert!((gamma_small(0.5) - PI.sqrt()).abs() < 1e-14);
        // Γ(1/4) = 3.625609908221908...
        assert!((gamma_small(0.25) - 3.625_609_908_221_908).abs() < 1e-13);
    }

    #[test]
    fn half_order_closed_form() {
        for &x in &[1e-6, 0.01, 0.5, 1.9999, 2.0, 3.7, 10.0, 40.0] {
            let exact = (PI / (2.0 * x)).sqrt() * (-x).exp();
            let got = bessel_k(0.5, x);
            assert!(
                ((got - exact) / exact).abs() < 1e-12,
                "x = {x}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn against_integral_representation() {
        for &nu in &[0.0, 0.1, 0.25, 0.3333, 0.5] {
            for &x in &[1e-3, 0.05, 0.3, 1.0, 1.99, 2.01, 4.4, 12.0, 30.0] {
                let reference = k_quadrature(nu, x);
                let got = bessel_k(nu, x);
                let rel = ((got - reference) / reference).abs();
                assert!(rel < 1e-10, "nu={nu} x={x}: {got} vs {reference} ({rel:e})");
            }
        }
    }

    #[test]
    fn matern_limit_and_half_order() {
        assert_eq!(matern_correlation(0.25, 0.0), 1.0);
        assert!((matern_correlation(0.25, 1e-8) - 1.0).abs() < 1e-3);
        for &x in &[1e-8, 0.1, 1.0, 5.0, 40.0] {
            let got = matern_correlation(0.5, x);
            assert!(((got - (-x).exp()) / (-x).exp()).abs() < 1e-12);
        }
    }
}
