//! Special functions behind the F and Student t distributions.

use std::f64::consts::PI;

use super::InferenceError;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7, 9 terms; reflection below 1/2).
pub fn log_gamma(x: f64) -> Result<f64, InferenceError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(InferenceError::Domain(format!("log_gamma needs a finite x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    HALF_LN_2PI + (x + 0.5) * t.ln() - t + sum.ln()
}

/// `ln Gamma(x) - [(x - 1/2) ln x - x + ln sqrt(2 pi)]` for large `x`.
fn stirling_correction(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

/// `ln B(a, b)`. For large arguments the Stirling form is used so the
/// leading terms cancel analytically instead of numerically.
fn ln_beta(a: f64, b: f64) -> f64 {
    if a.min(b) >= 10.0 {
        let s = a + b;
        HALF_LN_2PI - 0.5 * s.ln()
            + (a - 0.5) * (-b / s).ln_1p()
            + (b - 0.5) * (-a / s).ln_1p()
            + stirling_correction(a)
            + stirling_correction(b)
            - stirling_correction(s)
    } else {
        ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b)
    }
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn reg_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64, InferenceError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(InferenceError::Domain(format!("incomplete beta needs x in [0, 1], got {x}")));
    }
    check_shape(a, b)?;
    Ok(inc_beta(x, 1.0 - x, a, b))
}

fn check_shape(a: f64, b: f64) -> Result<(), InferenceError> {
    if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(InferenceError::Domain(format!("incomplete beta needs a, b > 0, got ({a}, {b})")))
    }
}

/// `I_x(a, b)` with `y = 1 - x` supplied by the caller, so tails computed
/// from a ratio keep their precision.
pub(crate) fn inc_beta(x: f64, y: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    // The continued fraction converges fastest for x < (a + 1)/(a + b + 2).
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - inc_beta(y, x, b, a);
    }
    let ln_front = a * x.ln() + b * y.ln() - ln_beta(a, b);
    ln_front.exp() * beta_continued_fraction(x, a, b) / a
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 100_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Upper tail `P(F > f)` of the F(df1, df2) distribution.
pub fn f_sf(f: f64, df1: f64, df2: f64) -> Result<f64, InferenceError> {
    if !(df1 > 0.0 && df2 > 0.0 && df1.is_finite() && df2.is_finite()) {
        return Err(InferenceError::Domain(format!("F distribution needs positive dfs, got ({df1}, {df2})")));
    }
    if f.is_nan() || f < 0.0 {
        return Err(InferenceError::Domain(format!("F statistic must be >= 0, got {f}")));
    }
    if f == 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    let denom = df2 + df1 * f;
    Ok(inc_beta(df2 / denom, df1 * f / denom, 0.5 * df2, 0.5 * df1))
}

/// Upper tail `P(T > t)` of Student's t with `df` degrees of freedom.
pub fn t_sf(t: f64, df: f64) -> Result<f64, InferenceError> {
    if !(df > 0.0) || !df.is_finite() || t.is_nan() {
        return Err(InferenceError::Domain(format!("t distribution needs df > 0 and finite t, got ({t}, {df})")));
    }
    let t2 = t * t;
    let half_tail = if t.is_infinite() { 0.0 } else { 0.5 * inc_beta(df / (df + t2), t2 / (df + t2), 0.5 * df, 0.5) };
    Ok(if t > 0.0 { half_tail } else { 1.0 - half_tail })
}

/// CDF of Student's t.
pub fn t_cdf(t: f64, df: f64) -> Result<f64, InferenceError> {
    Ok(1.0 - t_sf(t, df)?)
}

/// Inverse CDF of Student's t by bracketing and bisection on the tail.
pub fn t_quantile(prob: f64, df: f64) -> Result<f64, InferenceError> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(InferenceError::Domain(format!("quantile probability must be in (0, 1), got {prob}")));
    }
    if !(df > 0.0) || !df.is_finite() {
        return Err(InferenceError::Domain(format!("t distribution needs df > 0, got {df}")));
    }
    if prob == 0.5 {
        return Ok(0.0);
    }
    // Solve on the upper half; the lower half follows by symmetry.
    let (tail, sign) = if prob > 0.5 { (1.0 - prob, 1.0) } else { (prob, -1.0) };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while t_sf(hi, df)? > tail {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(InferenceError::Domain(format!("t quantile diverged for p = {prob}, df = {df}")));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if t_sf(mid, df)? > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(sign * 0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_gamma_examples() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        assert!((log_gamma(0.5).unwrap() - PI.sqrt().ln()).abs() < 1e-14);
        assert!((log_gamma(0.5).unwrap() - 0.572_364_942_9).abs() < 1e-10);
        assert!((log_gamma(6.0).unwrap() - 120f64.ln()).abs() < 1e-13 * 120f64.ln());
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
    }

    #[test]
    fn log_gamma_factorials() {
        let mut fact = 1.0f64;
        for n in 2..30 {
            fact *= n as f64;
            let got = log_gamma(n as f64 + 1.0).unwrap();
            assert!(((got - fact.ln()) / fact.ln()).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn ln_beta_branches_agree() {
        for &(a, b) in &[(10.0, 10.0), (12.5, 40.0), (300.0, 11.0)] {
            let direct = ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b);
            assert!((ln_beta(a, b) - direct).abs() < 1e-11 * direct.abs().max(1.0), "({a}, {b})");
        }
    }

    #[test]
    fn incomplete_beta_examples() {
        assert_eq!(reg_incomplete_beta(1.0, 2.0, 3.0).unwrap(), 1.0);
        assert_eq!(reg_incomplete_beta(0.0, 2.0, 3.0).unwrap(), 0.0);
        assert!((reg_incomplete_beta(0.5, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        // I_x(2, 5) = 1 - (1-x)^6 - 6x(1-x)^5 (binomial tail closed form)
        let x: f64 = 0.3;
        let closed = 1.0 - (1.0 - x).powi(6) - 6.0 * x * (1.0 - x).powi(5);
        assert!((reg_incomplete_beta(x, 2.0, 5.0).unwrap() - closed).abs() < 1e-14);
        assert!(reg_incomplete_beta(1.2, 1.0, 1.0).is_err());
        assert!(reg_incomplete_beta(0.2, 0.0, 1.0).is_err());
    }

    #[test]
    fn t_and_f_basics() {
        assert_eq!(f_sf(0.0, 3.0, 10.0).unwrap(), 1.0);
        assert_eq!(t_quantile(0.5, 4.0).unwrap(), 0.0);
        // t(1) is Cauchy: P(T > 1) = 1/4
        assert!((t_sf(1.0, 1.0).unwrap() - 0.25).abs() < 1e-14);
        // t(2): CDF(t) = 1/2 + t / (2 sqrt(2 + t^2))
        let t = 1.7;
        assert!((t_cdf(t, 2.0).unwrap() - (0.5 + t / (2.0 * (2.0f64 + t * t).sqrt()))).abs() < 1e-14);
        assert!((t_quantile(0.975, 1e6).unwrap() - 1.959_964).abs() < 1e-5);
        assert!(t_quantile(1.0, 3.0).is_err());
        assert!(f_sf(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn f_with_one_numerator_df_is_two_sided_t() {
        for &(f, df2) in &[(0.3, 5.0), (4.0, 12.0), (27.8, 18_000.0), (0.01, 1.0)] {
            let lhs = f_sf(f, 1.0, df2).unwrap();
            let rhs = 2.0 * t_sf(f64::sqrt(f), df2).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "F = {f}, df2 = {df2}");
        }
    }
}
