use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub df: usize,
}

/// Paired two-sided t-test on `a − b`.
///
/// When every difference is zero the statistic is defined as `t = 0, p = 1`.
/// A constant non-zero difference gives `t = ±∞, p = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::InvalidAnalysis(format!("paired samples differ in length: {} vs {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidAnalysis("paired t-test needs at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("paired t-test input".into()));
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let df = n - 1;
    if sd == 0.0 {
        return Ok(if mean == 0.0 {
            TTest { t: 0.0, p: 1.0, df }
        } else {
            TTest {
                t: mean.signum() * f64::INFINITY,
                p: 0.0,
                df,
            }
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    Ok(TTest {
        t,
        p: student_t_two_sided_p(t, df as f64),
        df,
    })
}

/// `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom,
/// via `I_{df/(df+t²)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `I_x(a, b)`, evaluated with the continued fraction (modified Lentz) on
/// whichever side of the symmetry `I_x(a,b) = 1 − I_{1−x}(b,a)` converges fast.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
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

#[cfg(test)]
mod tests {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    use statrs::function::{beta::beta_reg, gamma::ln_gamma as sr_ln_gamma};

    use super::*;

    #[test]
    fn identical_samples() {
        let a = [0.3, 0.5, 0.9];
        assert_eq!(paired_t_test(&a, &a).unwrap(), TTest { t: 0.0, p: 1.0, df: 2 });
    }

    #[test]
    fn zero_mean_two_pairs() {
        let r = paired_t_test(&[0.6, 0.4], &[0.5, 0.5]).unwrap();
        assert!(r.t.abs() < 1e-12);
        assert!((r.p - 1.0).abs() < 1e-12);
        assert_eq!(r.df, 1);
    }

    #[test]
    fn consistent_difference_is_significant() {
        let a = [1.0 + 1e-3, 1.0 - 2e-3, 1.0 + 1.5e-3, 1.0 - 0.5e-3];
        let b = [0.0; 4];
        let r = paired_t_test(&a, &b).unwrap();
        assert!(r.p < 0.01, "{r:?}");
        assert!(r.t > 100.0);
    }

    #[test]
    fn input_validation() {
        assert!(paired_t_test(&[1.0], &[0.0]).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[0.0]).is_err());
    }

    #[test]
    fn ln_gamma_matches_statrs() {
        for &x in &[0.1, 0.5, 1.0, 1.5, 2.0, 3.7, 10.0, 55.5, 170.2] {
            let (a, b) = (ln_gamma(x), sr_ln_gamma(x));
            assert!((a - b).abs() < 1e-12 * b.abs().max(1.0), "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn incomplete_beta_matches_statrs() {
        for &a in &[0.5, 1.0, 2.5, 10.0, 40.0] {
            for &b in &[0.5, 1.0, 3.0, 12.0] {
                for k in 1..20 {
                    let x = k as f64 / 20.0;
                    let (ours, theirs) = (regularized_incomplete_beta(x, a, b), beta_reg(a, b, x));
                    assert!((ours - theirs).abs() < 1e-12, "I_{x}({a},{b}): {ours} vs {theirs}");
                }
            }
        }
    }

    #[test]
    fn p_value_matches_student_t_cdf() {
        for &df in &[1.0, 2.0, 5.0, 19.0, 120.0] {
            let dist = StudentsT::new(0.0, 1.0, df).unwrap();
            for &t in &[0.0, 0.3, 1.0, 2.1, 4.5, -3.3] {
                let expected = 2.0 * (1.0 - dist.cdf(f64::abs(t)));
                let ours = student_t_two_sided_p(t, df);
                assert!((ours - expected).abs() < 1e-10, "df={df} t={t}: {ours} vs {expected}");
            }
        }
        // t-table: two-sided 0.05 critical value for df = 10 is 2.228
        assert!((student_t_two_sided_p(2.228_138_851_986_5, 10.0) - 0.05).abs() < 1e-9);
    }
}
