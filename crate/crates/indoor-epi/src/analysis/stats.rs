//! Scalar statistics: moments, the standard normal, and a one-sided
//! rank-sum test.

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn stddev(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Abramowitz & Stegun 7.1.26 rational approximation, |error| < 1.5e-7.
pub fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Acklam's inverse normal CDF, relative error < 1.2e-9.
#[allow(clippy::excessive_precision)]
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0, 1), got {p}");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// One-sided Mann-Whitney rank-sum p-value for the alternative "samples in
/// `greater` are stochastically larger than those in `lesser`". Normal
/// approximation with tie correction and continuity correction.
pub fn rank_sum_greater(greater: &[f64], lesser: &[f64]) -> f64 {
    let n1 = greater.len() as f64;
    let n2 = lesser.len() as f64;
    assert!(n1 > 0.0 && n2 > 0.0, "rank test needs both samples");

    let mut pooled: Vec<(f64, bool)> = greater
        .iter()
        .map(|&v| (v, true))
        .chain(lesser.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Average ranks over tie groups; accumulate tie correction.
    let n = pooled.len();
    let mut rank_sum_greater = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let tied = (j - i) as f64;
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for item in &pooled[i..j] {
            if item.1 {
                rank_sum_greater += avg_rank;
            }
        }
        tie_term += tied * tied * tied - tied;
        i = j;
    }

    let u = rank_sum_greater - n1 * (n1 + 1.0) / 2.0;
    let mu = n1 * n2 / 2.0;
    let nn = n1 + n2;
    let sigma_sq = n1 * n2 / 12.0 * (nn + 1.0 - tie_term / (nn * (nn - 1.0)));
    if sigma_sq <= 0.0 {
        return 1.0;
    }
    let z = (u - mu - 0.5) / sigma_sq.sqrt();
    1.0 - normal_cdf(z)
}

/// Box-plot summary: quartiles plus Tukey whiskers (1.5 IQR, clamped to the
/// data range).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
}

pub fn five_number_summary(values: &[f64]) -> FiveNumberSummary {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    FiveNumberSummary {
        min: sorted[0],
        q1,
        median: quantile(&sorted, 0.5),
        q3,
        max: *sorted.last().unwrap(),
        whisker_low: sorted.iter().copied().find(|&v| v >= lo_fence).unwrap(),
        whisker_high: sorted.iter().rev().copied().find(|&v| v <= hi_fence).unwrap(),
    }
}

/// Empirical quantile with linear interpolation on the sorted values.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let q = q.clamp(0.0, 1.0);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_points() {
        // The rational erf approximation carries ~1.5e-7 absolute error.
        assert!((normal_cdf(0.0) - 0.5).abs() < 2e-7);
        assert!((normal_cdf(1.96) - 0.975_002).abs() < 1e-5);
        assert!((normal_cdf(-1.0) - 0.158_655).abs() < 1e-5);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[0.01, 0.025, 0.1, 0.5, 0.9, 0.975, 0.99] {
            let z = normal_quantile(p);
            assert!((normal_cdf(z) - p).abs() < 1e-6, "p={p}");
        }
        assert!((normal_quantile(0.975) - 1.959_964).abs() < 1e-5);
    }

    #[test]
    fn rank_test_detects_clear_shift() {
        let hi: Vec<f64> = (0..20).map(|i| 10.0 + i as f64 * 0.1).collect();
        let lo: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 * 0.1).collect();
        assert!(rank_sum_greater(&hi, &lo) < 1e-6);
        assert!(rank_sum_greater(&lo, &hi) > 0.99);
    }

    #[test]
    fn rank_test_on_identical_samples_is_insignificant() {
        let a = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let p = rank_sum_greater(&a, &a);
        assert!(p > 0.4, "p = {p}");
    }

    #[test]
    fn empirical_quantiles_interpolate() {
        let v = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn moments() {
        let v = vec![2.0, 4.0, 6.0];
        assert_eq!(mean(&v), 4.0);
        assert!((stddev(&v) - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
