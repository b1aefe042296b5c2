//! Oracle checks for the special functions: exact rational arithmetic
//! for the binomial family, adaptive quadrature for the continuous
//! CDFs, and direct log-sum factorials for log-gamma.

use egl_core::special::{
    beta_pdf, binom_cdf, binom_pmf, log_gamma, reg_inc_beta, std_normal_cdf, Probability,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

fn big_ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn big_binom(n: u64, k: u64) -> BigInt {
    let mut c = BigInt::one();
    for j in 0..k.min(n - k) {
        c = c * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    c
}

/// C(n,i)·p^i·(1−p)^(n−i) in exact rational arithmetic.
fn exact_pmf(i: u64, n: u64, p: &BigRational) -> BigRational {
    let q = BigRational::one() - p;
    BigRational::from(big_binom(n, i)) * p.pow(i as i32) * q.pow((n - i) as i32)
}

#[test]
fn binomial_pmf_matches_exact_rational_arithmetic() {
    let ps = [
        (big_ratio(0, 1), 0.0),
        (big_ratio(1, 1), 1.0),
        (big_ratio(1, 2), 0.5),
        (big_ratio(3, 10), 0.3),
        (big_ratio(9, 10), 0.9),
    ];
    for n in [0u64, 1, 7, 50, 200] {
        for (pr, pf) in &ps {
            let p = Probability::new(*pf).unwrap();
            for i in 0..=n {
                let got = binom_pmf(i, n, p).get();
                let want = exact_pmf(i, n, pr);
                let diff = (BigRational::from_float(got).unwrap() - &want).abs();
                let abs = diff.to_f64().unwrap();
                assert!(
                    abs <= 1e-12,
                    "pmf({i}; {n}, {pf}) = {got}, exact {}",
                    want.to_f64().unwrap()
                );
                // Where the exact mass is representable and not
                // absurdly small, demand relative accuracy as well.
                let wf = want.to_f64().unwrap();
                if wf > 1e-200 {
                    assert!(
                        abs / wf <= 1e-10,
                        "pmf({i}; {n}, {pf}) relative error {}",
                        abs / wf
                    );
                }
            }
        }
    }
}

#[test]
fn binomial_cdf_is_the_partial_pmf_sum() {
    let n = 200u64;
    let p = Probability::new(0.37).unwrap();
    let mut acc = 0.0f64;
    for i in 0..=n {
        acc += binom_pmf(i, n, p).get();
        let got = binom_cdf(i as i64, n, p).get();
        assert!(
            (got - acc.min(1.0)).abs() <= 1e-12,
            "cdf({i}) = {got}, partial sum {acc}"
        );
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b))
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, whole: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let left = simpson(f, a, c);
    let right = simpson(f, c, b);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive(f, a, c, 0.5 * eps, left, depth - 1)
            + adaptive(f, c, b, 0.5 * eps, right, depth - 1)
    }
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    adaptive(f, a, b, eps, simpson(f, a, b), 40)
}

#[test]
fn regularized_incomplete_beta_matches_quadrature() {
    let shapes = [2.0, 3.5, 6.0, 10.0];
    for &a in &shapes {
        for &b in &shapes {
            // Divide out the mode height so the integrand is O(1) and
            // the absolute quadrature tolerance is a relative one; the
            // scale cancels in the normalized ratio. Raw x^9 (1-x)^9 is
            // O(1e-6) and an absolute 1e-13 would only buy 1e-7.
            let m: f64 = (a - 1.0) / (a + b - 2.0);
            let peak = m.powf(a - 1.0) * (1.0 - m).powf(b - 1.0);
            let integrand =
                move |t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0) / peak;
            let norm = integrate(&integrand, 0.0, 1.0, 1e-13);
            for i in 1..=9 {
                let x = i as f64 / 10.0;
                let want = integrate(&integrand, 0.0, x, 1e-13) / norm;
                let got = reg_inc_beta(a, b, x).unwrap().get();
                assert!(
                    (got - want).abs() <= 1e-8,
                    "I_{x}({a},{b}) = {got}, quadrature {want}"
                );
            }
        }
    }
}

#[test]
fn regularized_incomplete_beta_is_monotone_with_exact_endpoints() {
    for &(a, b) in &[(2.0, 2.0), (2.0, 10.0), (3.5, 3.5), (10.0, 2.0)] {
        assert_eq!(reg_inc_beta(a, b, 0.0).unwrap().get(), 0.0);
        assert_eq!(reg_inc_beta(a, b, 1.0).unwrap().get(), 1.0);
        let mut prev = 0.0;
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let v = reg_inc_beta(a, b, x).unwrap().get();
            assert!(v >= prev, "I_x({a},{b}) decreased at x = {x}");
            prev = v;
        }
    }
}

#[test]
fn normal_cdf_matches_quadrature() {
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    for &z in &[0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0] {
        let want = 0.5 + integrate(&phi, 0.0, z, 1e-14);
        let got = std_normal_cdf(z).get();
        assert!((got - want).abs() <= 1e-10, "Phi({z}) = {got}, quadrature {want}");
        let got_neg = std_normal_cdf(-z).get();
        assert!(
            (got_neg - (1.0 - want)).abs() <= 1e-10,
            "Phi({}) = {got_neg}",
            -z
        );
    }
}

#[test]
fn beta_density_integrates_to_one() {
    for &(a, b) in &[(2.0, 2.0), (2.0, 5.0), (3.5, 3.5), (10.0, 2.0)] {
        let f = move |x: f64| beta_pdf(a, b, x).unwrap();
        let total = integrate(&f, 0.0, 1.0, 1e-10);
        assert!(
            (total - 1.0).abs() <= 1e-6,
            "Beta({a},{b}) density integrates to {total}"
        );
    }
}

#[test]
fn log_gamma_matches_log_factorial_sums() {
    // ln Γ(k) = Σ_{j<k} ln j summed directly: an independent oracle
    // accurate to a few ulps across the whole f64 factorial range.
    let mut acc = 0.0f64;
    for k in 2..=170u32 {
        acc += (k as f64).ln();
        let got = log_gamma(k as f64 + 1.0).unwrap();
        assert!(
            (got - acc).abs() <= 1e-12 * acc.max(1.0),
            "lnGamma({}) = {got}, log-sum {acc}",
            k + 1
        );
    }
}
