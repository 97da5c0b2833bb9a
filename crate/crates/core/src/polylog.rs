//! Fermi functions `f_n(Z) = -Li_n(-Z)` and Bose functions `g_n(Z) = Li_n(Z)`
//! for real order `n >= 1/2`.
//!
//! `f_n` is evaluated by the alternating series for `Z <= 1/2`, by adaptive
//! quadrature of the Fermi-Dirac integral in the intermediate range and by
//! the Sommerfeld expansion (with its exponentially small reflection term)
//! deep in the degenerate regime. The crossover into the Sommerfeld regime
//! depends on the order so that the first neglected term stays below 1e-10.
//! Orders 1 and 2 have closed forms and skip all of that.

use core::f64::consts::{LN_2, PI};

use num_traits::Float;

use crate::numerics::{gamma, integrate, Tolerance};
use crate::{Error, Result};

/// Fugacity `Z = exp(beta mu)`, stored as its logarithm so that deeply
/// degenerate states do not overflow.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Fugacity {
    ln_z: f64,
}

impl Fugacity {
    pub fn new(z: f64) -> Result<Self> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::domain(alloc::format!(
                "fugacity must be positive and finite, got {z}"
            )));
        }
        Ok(Self { ln_z: z.ln() })
    }

    pub fn from_ln(ln_z: f64) -> Self {
        Self { ln_z }
    }

    pub fn value(self) -> f64 {
        self.ln_z.exp()
    }

    /// `ln Z = beta mu`.
    pub fn ln(self) -> f64 {
        self.ln_z
    }
}

const LN_HALF: f64 = -LN_2;
const ETA2: f64 = PI * PI / 12.0;
const ETA4: f64 = 7.0 * PI * PI * PI * PI / 720.0;
const ETA6: f64 = 31.0 * PI * PI * PI * PI * PI * PI / 30240.0;

fn check_order(n: f64) -> Result<()> {
    if n >= 0.5 && n.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(alloc::format!("order n must be >= 1/2, got {n}")))
    }
}

/// `f_n(Z)` for `Z > 0`.
pub fn fermi_fn(n: f64, z: f64) -> Result<f64> {
    let z = Fugacity::new(z)?;
    fermi_fn_ln(n, z.ln())
}

/// `f_n(exp(ln_z))`; the entry point used internally to avoid overflow.
pub fn fermi_fn_ln(n: f64, ln_z: f64) -> Result<f64> {
    check_order(n)?;
    if ln_z.is_nan() {
        return Err(Error::domain("ln Z is NaN"));
    }
    if ln_z == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if n == 1.0 {
        return Ok(ln_one_plus_exp(ln_z));
    }
    if n == 2.0 {
        return Ok(fermi2(ln_z));
    }
    fermi_general(n, ln_z)
}

fn fermi_general(n: f64, x: f64) -> Result<f64> {
    if x <= LN_HALF {
        Ok(alternating_series(n, x))
    } else if x >= sommerfeld_threshold(n) {
        Ok(sommerfeld(n, x))
    } else {
        fermi_quadrature(n, x)
    }
}

/// ln(1 + e^x) without overflow or cancellation.
pub(crate) fn ln_one_plus_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `Σ (-1)^{j+1} Z^j / j^n` for `Z <= 1/2`.
fn alternating_series(n: f64, x: f64) -> f64 {
    let z = x.exp();
    let mut sum = 0.0;
    let mut zj = 1.0;
    let mut sign = 1.0;
    for j in 1..400 {
        zj *= z;
        let term = sign * zj / (j as f64).powf(n);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || zj == 0.0 {
            break;
        }
        sign = -sign;
    }
    sum
}

/// ln Z above which the Sommerfeld form is used for order `n`.
pub fn sommerfeld_threshold(n: f64) -> f64 {
    let p6 = (0..6).map(|k| n - k as f64).product::<f64>().abs();
    let x = (2.0 * ETA6 * p6 / 1e-10).powf(1.0 / 6.0);
    x.max(15.0)
}

/// `x^n/Γ(n+1)·[1 + 2η(2)(n)_2/x² + 2η(4)(n)_4/x⁴] − cos(πn) f_n(e^{−x})`.
fn sommerfeld(n: f64, x: f64) -> f64 {
    let p2 = n * (n - 1.0);
    let p4 = p2 * (n - 2.0) * (n - 3.0);
    let x2 = x * x;
    let lead = (n * x.ln() - crate::numerics::ln_gamma(n + 1.0)).exp();
    let bracket = 1.0 + 2.0 * ETA2 * p2 / x2 + 2.0 * ETA4 * p4 / (x2 * x2);
    lead * bracket - (PI * n).cos() * alternating_series(n, -x)
}

/// Γ(n)·f_n(e^x) = ∫ 2 s^{2n−1} / (e^{s²−x} + 1) ds over s ≥ 0.
fn fermi_quadrature(n: f64, x: f64) -> Result<f64> {
    let tol = Tolerance::new(1e-14, 1e-13);
    let integrand = |s: f64| {
        let a = s * s;
        let w = 2.0 * s.powf(2.0 * n - 1.0);
        let e = a - x;
        if e > 0.0 {
            let q = (-e).exp();
            w * q / (1.0 + q)
        } else {
            w / (1.0 + e.exp())
        }
    };
    let s0 = x.max(0.0).sqrt();
    let s_max = (x.max(0.0) + 60.0).sqrt();
    let mut value = 0.0;
    if s0 > 0.0 {
        value += integrate(integrand, 0.0, s0, tol)?.value;
    }
    value += integrate(integrand, s0, s_max, tol)?.value;
    Ok(value / gamma(n))
}

/// Li_2(u) for 0 <= u <= 1/2 by its power series.
fn dilog_small(u: f64) -> f64 {
    let mut sum = 0.0;
    let mut uk = 1.0;
    for k in 1..200 {
        uk *= u;
        let term = uk / (k * k) as f64;
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

/// f_2 via the Landen identity for Z <= 1 and inversion for Z > 1.
fn fermi2(x: f64) -> f64 {
    if x <= 0.0 {
        let l = ln_one_plus_exp(x);
        // u = Z/(1+Z)
        let u = (x - l).exp();
        dilog_small(u) + 0.5 * l * l
    } else {
        PI * PI / 6.0 + 0.5 * x * x - fermi2(-x)
    }
}

/// `g_n(Z) = Li_n(Z)` for `0 < Z <= 1` (with `n > 1` at `Z = 1`).
pub fn bose_fn(n: f64, z: f64) -> Result<f64> {
    check_order(n)?;
    if !(z > 0.0) {
        return Err(Error::domain(alloc::format!("Bose fugacity must be positive, got {z}")));
    }
    if z > 1.0 {
        return Err(Error::domain(alloc::format!(
            "Bose functions are only defined for Z <= 1 here, got {z}"
        )));
    }
    if z == 1.0 {
        if n <= 1.0 {
            return Err(Error::domain("g_n(1) diverges for n <= 1"));
        }
        return zeta(n);
    }
    if z <= 0.5 {
        return Ok(bose_series(n, z));
    }
    bose_quadrature(n, z.ln())
}

fn bose_series(n: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    let mut zj = 1.0;
    for j in 1..2000 {
        zj *= z;
        let term = zj / (j as f64).powf(n);
        sum += term;
        // remaining terms are bounded by a geometric series
        if term * z / (1.0 - z) <= 1e-17 * sum {
            break;
        }
    }
    sum
}

fn bose_quadrature(n: f64, x: f64) -> Result<f64> {
    let tol = Tolerance::new(1e-14, 1e-13);
    let integrand = |s: f64| {
        if s == 0.0 {
            return if n == 0.5 { 2.0 / (-x).exp_m1() } else { 0.0 };
        }
        2.0 * s.powf(2.0 * n - 1.0) / (s * s - x).exp_m1()
    };
    let s0 = (-x).sqrt();
    let s_max = 60.0.sqrt();
    let value = integrate(integrand, 0.0, s0, tol)?.value + integrate(integrand, s0, s_max, tol)?.value;
    Ok(value / gamma(n))
}

/// Riemann zeta for real `n > 1`, via the Dirichlet eta function `f_n(1)`.
pub fn zeta(n: f64) -> Result<f64> {
    if !(n > 1.0) {
        return Err(Error::domain("zeta(n) requires n > 1"));
    }
    let eta = fermi_fn_ln(n.max(0.5), 0.0)?;
    Ok(eta / (1.0 - 2.0.powf(1.0 - n)))
}

/// Relative disagreement between adjacent evaluation branches of `f_n` at
/// the two seams: series vs quadrature at `ln Z = ln ½`, quadrature vs
/// Sommerfeld at [`sommerfeld_threshold`].
pub fn seam_mismatch(n: f64) -> Result<[f64; 2]> {
    check_order(n)?;
    let low = fermi_quadrature(n, LN_HALF)? / alternating_series(n, LN_HALF) - 1.0;
    let s = sommerfeld_threshold(n);
    let high = fermi_quadrature(n, s)? / sommerfeld(n, s) - 1.0;
    Ok([low.abs(), high.abs()])
}

/// Leading degenerate form `(beta mu)^n / Γ(n+1)`.
///
/// Relative accuracy is set by the first Sommerfeld correction,
/// about `2η(2) n(n−1)/(beta mu)²`; it is only useful for `beta mu >~ 10`.
pub fn fermi_fn_degenerate_limit(n: f64, beta_mu: f64) -> f64 {
    (n * beta_mu.ln() - crate::numerics::ln_gamma(n + 1.0)).exp()
}

/// Returns `(∫ f_n(C e^{−x²}) dx, √π f_{n+1/2}(C))` over the real line.
pub fn gaussian_reduction_check(n: f64, c: f64) -> Result<(f64, f64)> {
    check_order(n)?;
    let ln_c = Fugacity::new(c)?.ln();
    let x_max = (ln_c.max(0.0) + 50.0).sqrt();
    let mut failure = None;
    let integrand = |x: f64| match fermi_fn_ln(n, ln_c - x * x) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let mut tol = Tolerance::new(1e-300, 1e-11);
    tol.max_intervals = 2000;
    let half = integrate(integrand, 0.0, x_max, tol);
    if let Some(e) = failure {
        return Err(e);
    }
    let lhs = 2.0 * half?.value;
    let rhs = PI.sqrt() * fermi_fn_ln(n + 0.5, ln_c)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const ZETA_3_2: f64 = 2.612_375_348_685_488_3;
    const ZETA_3: f64 = 1.202_056_903_159_594_3;

    fn naive_alternating(n: f64, z: f64) -> f64 {
        (1..200)
            .map(|j| {
                let j = j as f64;
                let s = if j % 2.0 == 1.0 { 1.0 } else { -1.0 };
                s * z.powf(j) / j.powf(n)
            })
            .sum()
    }

    #[test]
    fn closed_forms_at_unit_fugacity() {
        assert_relative_eq!(fermi_fn(1.0, 1.0).unwrap(), LN_2, max_relative = 1e-15);
        assert_relative_eq!(fermi_fn(2.0, 1.0).unwrap(), PI * PI / 12.0, max_relative = 1e-14);
        assert_relative_eq!(fermi_fn(3.0, 1.0).unwrap(), 0.75 * ZETA_3, max_relative = 1e-11);
        assert_relative_eq!(fermi_fn(4.0, 1.0).unwrap(), ETA4, max_relative = 1e-11);
        let f32 = fermi_fn(1.5, 1.0).unwrap();
        assert_relative_eq!(f32, (1.0 - 2.0_f64.powf(-0.5)) * ZETA_3_2, max_relative = 1e-11);
        assert!((f32 - 0.765147).abs() < 1e-6);
    }

    #[test]
    fn reference_values() {
        // 30-digit values of -Re Li_n(-e^x).
        let cases = [
            (0.5, 3.0, 1.853_485_088_601_517_7),
            (1.5, 2.0, 2.823_721_277_401_584_1),
            (2.5, 5.0, 20.914_467_402_762_628),
            (3.0, 10.0, 183.116_052_734_821_05),
            (3.5, -0.3, 0.699_228_980_807_228_6),
            (4.0, 25.0, 16_791.977_628_215_718),
            (0.5, 40.0, 7.134_657_233_550_764_7),
            (1.5, 80.0, 538.372_045_051_229_85),
            (2.5, 100.0, 30_108.671_681_354_869),
            (3.0, 200.0, 1_333_662.320_146_703),
        ];
        for (n, x, want) in cases {
            let got = fermi_fn_ln(n, x).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-10);
        }
    }

    #[test]
    fn series_regime_matches_naive_sum() {
        for n in [0.5, 1.5, 2.5, 3.0, 4.5] {
            for z in [1e-6, 0.01, 0.2, 0.5] {
                assert_relative_eq!(fermi_fn(n, z).unwrap(), naive_alternating(n, z), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn seams_agree() {
        for n in [0.5, 1.5, 2.5, 3.0, 3.5, 4.0, 5.0, 5.5] {
            let s = sommerfeld_threshold(n);
            let q = fermi_quadrature(n, s).unwrap();
            let a = sommerfeld(n, s);
            assert!((q / a - 1.0).abs() < 1e-8, "n={n} x={s}: {q} vs {a}");
            let q = fermi_quadrature(n, LN_HALF).unwrap();
            let a = alternating_series(n, LN_HALF);
            assert!((q / a - 1.0).abs() < 1e-8, "n={n}: {q} vs {a}");
        }
    }

    #[test]
    fn closed_form_orders_match_general_path() {
        for x in [-30.0, -3.0, -0.5, 0.0, 0.4, 2.0, 10.0, 14.0, 40.0] {
            assert_relative_eq!(fermi2(x), fermi_general(2.0, x).unwrap(), max_relative = 1e-11);
            assert_relative_eq!(ln_one_plus_exp(x), fermi_general(1.0, x).unwrap(), max_relative = 1e-11);
        }
    }

    #[test]
    fn sommerfeld_exact_for_small_integer_orders() {
        for n in [1.0, 2.0, 3.0, 4.0] {
            for x in [1.0, 3.0, 8.0] {
                assert_relative_eq!(sommerfeld(n, x), fermi_quadrature(n, x).unwrap(), max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(fermi_fn(0.4, 1.0).is_err());
        assert!(fermi_fn(1.5, 0.0).is_err());
        assert!(fermi_fn(1.5, -1.0).is_err());
        assert!(bose_fn(1.5, 1.01).is_err());
        assert!(bose_fn(1.0, 1.0).is_err());
        assert!(bose_fn(1.5, 0.0).is_err());
    }

    #[test]
    fn bose_values() {
        assert_relative_eq!(bose_fn(1.5, 1.0).unwrap(), ZETA_3_2, max_relative = 1e-10);
        assert_relative_eq!(bose_fn(2.0, 1.0).unwrap(), PI * PI / 6.0, max_relative = 1e-12);
        assert_relative_eq!(zeta(3.0).unwrap(), ZETA_3, max_relative = 1e-11);
        let cases = [
            (1.5, 0.75, 1.122_647_440_792_095_7),
            (2.5, 0.9, 1.139_003_025_202_156_8),
            (0.5, 0.99, 16.221_830_753_428_103),
            (3.0, 0.6, 0.656_002_513_632_980_7),
        ];
        for (n, z, want) in cases {
            assert_relative_eq!(bose_fn(n, z).unwrap(), want, max_relative = 1e-10);
        }
        for n in [0.5, 1.5, 3.0] {
            let q = bose_quadrature(n, LN_HALF).unwrap();
            assert_relative_eq!(q, bose_series(n, 0.5), max_relative = 1e-10);
        }
    }

    #[test]
    fn boltzmann_limit() {
        let z = 1e-8;
        for n in [0.5, 1.0, 1.5, 2.0, 3.0, 4.0] {
            assert!((fermi_fn(n, z).unwrap() / z - 1.0).abs() < 1e-7);
            assert!((bose_fn(n, z).unwrap() / z - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn degenerate_limit() {
        assert_relative_eq!(fermi_fn_degenerate_limit(3.0, 30.0), 4500.0, max_relative = 1e-12);
        let full = fermi_fn_ln(3.0, 30.0).unwrap();
        let dev = (full / 4500.0 - 1.0).abs();
        assert!(dev < 3.3e-2 && dev > 1e-3);
        let exact = fermi_fn_ln(1.0, 20.0).unwrap();
        assert!((fermi_fn_degenerate_limit(1.0, 20.0) / exact - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gaussian_reduction() {
        for (n, c) in [(1.5, 1.0), (1.0, 5.0), (0.5, 0.3), (2.0, 50.0), (2.5, 1e4)] {
            let (lhs, rhs) = gaussian_reduction_check(n, c).unwrap();
            assert!((lhs / rhs - 1.0).abs() < 1e-6, "n={n} C={c}: {lhs} vs {rhs}");
        }
        let (lhs, rhs) = gaussian_reduction_check(1.5, 1.0).unwrap();
        assert_relative_eq!(rhs, PI.sqrt() * PI * PI / 12.0, max_relative = 1e-12);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-6);
        let c = 1e-9;
        let (lhs, rhs) = gaussian_reduction_check(1.0, c).unwrap();
        assert_relative_eq!(lhs, c * PI.sqrt(), max_relative = 1e-6);
        assert_relative_eq!(rhs, c * PI.sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn monotone_on_log_grid() {
        for n in [0.5, 1.5, 2.5, 3.0, 4.0] {
            let mut prev = 0.0;
            for k in 0..=240 {
                let ln_z = (1e-6_f64).ln() + k as f64 * (2e12_f64).ln() / 240.0;
                let v = fermi_fn_ln(n, ln_z).unwrap();
                assert!(v > prev, "n={n} lnZ={ln_z}");
                prev = v;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn derivative_identity(n in 1.5_f64..4.5, ln_z in -10.0_f64..40.0) {
            // Z d/dZ f_n = d f_n / d ln Z = f_{n-1}
            let h = 1e-4 * (1.0 + ln_z.abs());
            let d = (fermi_fn_ln(n, ln_z + h).unwrap() - fermi_fn_ln(n, ln_z - h).unwrap()) / (2.0 * h);
            let want = fermi_fn_ln(n - 1.0, ln_z).unwrap();
            prop_assert!((d / want - 1.0).abs() < 1e-5, "{} vs {}", d, want);
        }

        #[test]
        fn first_order_derivative_is_logistic(ln_z in -20.0_f64..40.0) {
            let h = 1e-5;
            let d = (fermi_fn_ln(1.0, ln_z + h).unwrap() - fermi_fn_ln(1.0, ln_z - h).unwrap()) / (2.0 * h);
            let want = 1.0 / (1.0 + (-ln_z).exp());
            prop_assert!((d / want - 1.0).abs() < 1e-5);
        }
    }
}
