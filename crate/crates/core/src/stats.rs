//! Non-parametric significance machinery: two-proportion pooled z-test,
//! one-sample test against an expected share, and the 2x2 chi-square.
//!
//! All functions are stateless and pure. The two-sided significance flag is
//! fixed at |z| > 1.96 (alpha = 0.05).

use statrs::function::erf::erfc;

use crate::{Error, Result};

/// Two-sided 5% critical value of the standard normal.
pub const Z_CRITICAL_05: f64 = 1.96;

/// Inputs echoed back with a z statistic.
#[derive(Debug, Clone, PartialEq)]
pub enum ZTestInputs {
    TwoProportions { x1: f64, n1: f64, x2: f64, n2: f64 },
    OneSample { x: f64, n: f64, p0: f64 },
}

/// Result of a z-test, with the compared quantities and the fixed-level
/// significance call.
#[derive(Debug, Clone, PartialEq)]
pub struct ZTestResult {
    pub z: f64,
    pub left_label: String,
    pub right_label: String,
    pub inputs: ZTestInputs,
    pub significant_05: bool,
}

impl ZTestResult {
    pub fn with_labels(mut self, left: impl Into<String>, right: impl Into<String>) -> Self {
        self.left_label = left.into();
        self.right_label = right.into();
        self
    }

    /// Two-sided p-value from the standard normal tail.
    pub fn p_value(&self) -> f64 {
        erfc(self.z.abs() / std::f64::consts::SQRT_2)
    }
}

/// Pooled two-proportion z-test without continuity correction:
/// z = (x1/n1 - x2/n2) / sqrt(p(1-p)(1/n1 + 1/n2)) with p = (x1+x2)/(n1+n2).
/// Antisymmetric in argument order.
pub fn z_two_proportions(x1: u64, n1: u64, x2: u64, n2: u64) -> Result<ZTestResult> {
    z_two_proportions_real(x1 as f64, n1 as f64, x2 as f64, n2 as f64)
}

/// Real-valued variant of [`z_two_proportions`] for fractionally counted
/// observations.
pub fn z_two_proportions_real(x1: f64, n1: f64, x2: f64, n2: f64) -> Result<ZTestResult> {
    for (x, n) in [(x1, n1), (x2, n2)] {
        if n < 1.0 {
            return Err(Error::EmptySample);
        }
        if x < 0.0 || x > n {
            return Err(Error::CountExceedsSample { x, n });
        }
    }
    let pooled = (x1 + x2) / (n1 + n2);
    if pooled <= 0.0 || pooled >= 1.0 {
        return Err(Error::DegeneratePooledProportion);
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)).sqrt();
    let z = (x1 / n1 - x2 / n2) / se;
    Ok(ZTestResult {
        z,
        left_label: "left".to_string(),
        right_label: "right".to_string(),
        inputs: ZTestInputs::TwoProportions { x1, n1, x2, n2 },
        significant_05: z.abs() > Z_CRITICAL_05,
    })
}

/// One-sample z-test of an observed share against a null proportion:
/// z = (x/n - p0) / sqrt(p0(1-p0)/n).
pub fn z_one_sample(x: u64, n: u64, p0: f64) -> Result<ZTestResult> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if x > n {
        return Err(Error::CountExceedsSample {
            x: x as f64,
            n: n as f64,
        });
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::InvalidProportion(p0));
    }
    let n_f = n as f64;
    let z = (x as f64 / n_f - p0) / (p0 * (1.0 - p0) / n_f).sqrt();
    Ok(ZTestResult {
        z,
        left_label: "observed".to_string(),
        right_label: "expected".to_string(),
        inputs: ZTestInputs::OneSample {
            x: x as f64,
            n: n_f,
            p0,
        },
        significant_05: z.abs() > Z_CRITICAL_05,
    })
}

/// Pearson chi-square on the 2x2 table (in top / not in top) x (set 1 /
/// set 2), one degree of freedom, no continuity correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub chi2: f64,
    pub degrees_of_freedom: u32,
}

/// chi2 = N (ad - bc)^2 / ((a+b)(c+d)(a+c)(b+d)) over exact integer
/// products; equals z_two_proportions(..)^2 for the same inputs.
pub fn chi_square_2x2(x1: u64, n1: u64, x2: u64, n2: u64) -> Result<ChiSquareResult> {
    for (x, n) in [(x1, n1), (x2, n2)] {
        if x > n {
            return Err(Error::CountExceedsSample {
                x: x as f64,
                n: n as f64,
            });
        }
    }
    let (a, b) = (x1 as u128, x2 as u128);
    let (c, d) = ((n1 - x1) as u128, (n2 - x2) as u128);
    let top = a + b;
    let rest = c + d;
    let (col1, col2) = (n1 as u128, n2 as u128);
    if top == 0 || rest == 0 || col1 == 0 || col2 == 0 {
        return Err(Error::ZeroMargin);
    }
    let total = col1 + col2;
    let det = (a * d) as i128 - (b * c) as i128;
    let det_sq = (det as f64) * (det as f64);
    let numerator = total as f64 * det_sq;
    let denominator = top as f64 * rest as f64 * col1 as f64 * col2 as f64;
    Ok(ChiSquareResult {
        chi2: numerator / denominator,
        degrees_of_freedom: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn engineering_biomedical_row() {
        let r = z_two_proportions(54, 2_952, 61, 3_923).unwrap();
        assert_abs_diff_eq!(r.z, 0.878, epsilon = 0.005);
        assert!(!r.significant_05);
    }

    #[test]
    fn business_finance_row() {
        let r = z_two_proportions(15, 961, 16, 2_157).unwrap();
        assert_abs_diff_eq!(r.z, 2.129, epsilon = 0.001);
        assert!(r.significant_05);
    }

    #[test]
    fn equal_proportions_give_zero() {
        let r = z_two_proportions(5, 100, 10, 200).unwrap();
        assert_eq!(r.z, 0.0);
        assert!(!r.significant_05);
    }

    #[test]
    fn eu_with_and_without_uk() {
        // EU-27 vs EU+UK participation differs insignificantly.
        let r = z_two_proportions(6_074, 536_932, 7_337, 639_217).unwrap();
        assert_abs_diff_eq!(r.z, -0.84, epsilon = 0.01);
        assert!(r.z.abs() <= Z_CRITICAL_05);
        assert!(!r.significant_05);
    }

    #[test]
    fn antisymmetry_is_exact() {
        let a = z_two_proportions(13, 1_387, 41, 2_480).unwrap();
        let b = z_two_proportions(41, 2_480, 13, 1_387).unwrap();
        assert_eq!(a.z, -b.z);
    }

    #[test]
    fn degenerate_pooled_proportion() {
        let err = z_two_proportions(0, 50, 0, 80).unwrap_err();
        assert_eq!(err.to_string(), "degenerate pooled proportion");
        assert!(z_two_proportions(50, 50, 80, 80).is_err());
        assert!(z_two_proportions(51, 50, 0, 80).is_err());
    }

    #[test]
    fn one_sample_examples() {
        let r = z_one_sample(10, 1_000, 0.01).unwrap();
        assert_eq!(r.z, 0.0);

        let r = z_one_sample(8_422, 504_695, 0.01).unwrap();
        assert_abs_diff_eq!(r.z, 47.7, epsilon = 0.1);
        assert!(r.significant_05);

        let r = z_one_sample(0, 50, 0.01).unwrap();
        assert!(r.z < 0.0);

        assert!(z_one_sample(1, 10, 0.0).is_err());
        assert!(z_one_sample(1, 10, 1.0).is_err());
        assert!(z_one_sample(1, 0, 0.5).is_err());
    }

    #[test]
    fn chi_square_examples() {
        let virology = chi_square_2x2(13, 1_387, 41, 2_480).unwrap();
        let z = z_two_proportions(13, 1_387, 41, 2_480).unwrap().z;
        assert_abs_diff_eq!(virology.chi2, 3.311, epsilon = 0.002);
        assert_abs_diff_eq!(virology.chi2, z * z, epsilon = 1e-9);
        assert_abs_diff_eq!(z, -1.820, epsilon = 0.001);
        assert_eq!(virology.degrees_of_freedom, 1);

        let identical = chi_square_2x2(5, 100, 10, 200).unwrap();
        assert_eq!(identical.chi2, 0.0);

        let biomedical = chi_square_2x2(54, 2_952, 61, 3_923).unwrap();
        let z = z_two_proportions(54, 2_952, 61, 3_923).unwrap().z;
        assert_abs_diff_eq!(biomedical.chi2, 0.771, epsilon = 0.001);
        assert_abs_diff_eq!(biomedical.chi2, z * z, epsilon = 1e-9);
    }

    #[test]
    fn chi_square_zero_margin() {
        assert!(chi_square_2x2(0, 50, 0, 80).is_err());
        assert!(chi_square_2x2(50, 50, 80, 80).is_err());
    }

    #[test]
    fn label_swap_flips_sign_only() {
        // exchanging "top" and "non-top" labels: x -> n - x
        let a = z_two_proportions(13, 1_387, 41, 2_480).unwrap();
        let b = z_two_proportions(1_387 - 13, 1_387, 2_480 - 41, 2_480).unwrap();
        assert_abs_diff_eq!(a.z, -b.z, epsilon = 1e-12);
    }

    #[test]
    fn p_value_matches_tail() {
        let r = z_two_proportions(15, 961, 16, 2_157).unwrap();
        assert!(r.p_value() < 0.05);
        let r = z_two_proportions(54, 2_952, 61, 3_923).unwrap();
        assert!(r.p_value() > 0.05);
        // z = 1.96 corresponds to p ~ 0.05
        let z = ZTestResult {
            z: 1.959964,
            left_label: String::new(),
            right_label: String::new(),
            inputs: ZTestInputs::OneSample {
                x: 0.0,
                n: 1.0,
                p0: 0.5,
            },
            significant_05: false,
        };
        assert_abs_diff_eq!(z.p_value(), 0.05, epsilon = 1e-6);
    }
}
