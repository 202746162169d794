//! Welch two-sample t-test with hand-rolled Student-t tail probabilities.
//!
//! The p-value comes from the identity `P(|T_v| > t) = I_x(v/2, 1/2)` with
//! `x = v / (v + t^2)`, where `I` is the regularized incomplete beta
//! function, computed here by Lentz's continued fraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which alternative the p-value covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tail {
    /// Means differ (the conservative default).
    #[default]
    TwoSided,
    /// First sample mean is greater.
    Greater,
    /// First sample mean is smaller.
    Less,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WelchResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub n_x: usize,
    pub n_y: usize,
    /// Set when both samples have zero variance, where t and df degenerate.
    pub degenerate: bool,
}

/// Two-sided Welch test; see [`welch_t_test_tailed`].
pub fn welch_t_test(xs: &[f64], ys: &[f64]) -> Result<WelchResult> {
    welch_t_test_tailed(xs, ys, Tail::TwoSided)
}

/// Unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
///
/// Zero variance in both samples degenerates: equal means report t = 0,
/// p = 1; unequal means report p = 0 with an infinite t, flagged.
pub fn welch_t_test_tailed(xs: &[f64], ys: &[f64], tail: Tail) -> Result<WelchResult> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(Error::Stats(format!(
            "need at least 2 observations per sample, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let mean_x = mean(xs);
    let mean_y = mean(ys);
    let var_x = sample_variance(xs, mean_x);
    let var_y = sample_variance(ys, mean_y);

    let base = WelchResult {
        t_statistic: 0.0,
        degrees_of_freedom: 0.0,
        p_value: 1.0,
        mean_x,
        mean_y,
        n_x: xs.len(),
        n_y: ys.len(),
        degenerate: false,
    };

    if var_x == 0.0 && var_y == 0.0 {
        if mean_x == mean_y {
            return Ok(WelchResult {
                degenerate: true,
                ..base
            });
        }
        return Ok(WelchResult {
            t_statistic: if mean_x > mean_y {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            p_value: 0.0,
            degenerate: true,
            ..base
        });
    }

    let se_x = var_x / n;
    let se_y = var_y / m;
    let se = (se_x + se_y).sqrt();
    let t = (mean_x - mean_y) / se;
    let df = (se_x + se_y).powi(2) / (se_x.powi(2) / (n - 1.0) + se_y.powi(2) / (m - 1.0));

    let p = match tail {
        Tail::TwoSided => student_t_two_sided_p(t, df),
        Tail::Greater => student_t_survival(t, df),
        Tail::Less => 1.0 - student_t_survival(t, df),
    };
    Ok(WelchResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: p,
        ..base
    })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_variance(values: &[f64], mean: f64) -> f64 {
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0)
}

/// P(|T_df| > |t|).
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(df / 2.0, 0.5, x)
}

/// P(T_df > t).
pub fn student_t_survival(t: f64, df: f64) -> f64 {
    let half = 0.5 * student_t_two_sided_p(t, df);
    if t >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction,
/// using the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) to stay in the rapidly
/// converging region.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "x must be in [0, 1]");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let front =
        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
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
        // even step
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
        // odd step
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

/// Lanczos approximation (g = 7, 9 coefficients) of ln |Gamma(x)| for
/// x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
