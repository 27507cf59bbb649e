//! Small numerical utilities shared by the diagnostics.

/// Error function, Abramowitz-Stegun 7.1.26 rational approximation.
/// Absolute error below 1.5e-7, ample for the statistics done here.
pub fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// CDF of the standard normal distribution.
pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// One-sample Kolmogorov-Smirnov statistic sup |F_n - F| against a reference
/// CDF. Samples need not be sorted.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty());
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsLevel {
    FivePercent,
    OnePercent,
}

/// Asymptotic critical value c(α)/√n for the one-sample KS test.
pub fn ks_critical_value(n: usize, level: KsLevel) -> f64 {
    let c = match level {
        KsLevel::FivePercent => 1.35810,
        KsLevel::OnePercent => 1.62762,
    };
    c / (n as f64).sqrt()
}

/// Least-squares slope of ln(y) against ln(x). Inputs must be positive.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(ly.iter()) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Median and interquartile range of a sample (linear interpolation between
/// order statistics).
pub fn median_iqr(samples: &[f64]) -> (f64, f64) {
    assert!(!samples.is_empty());
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let q = |frac: f64| -> f64 {
        let pos = frac * (s.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let w = pos - lo as f64;
        s[lo] * (1.0 - w) + s[hi] * w
    };
    (q(0.5), q(0.75) - q(0.25))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_reference_points() {
        assert!(erf(0.0).abs() < 1e-8);
        assert!((erf(1.0) - 0.8427007929497149).abs() < 2e-7);
        assert!((erf(-1.0) + 0.8427007929497149).abs() < 2e-7);
        assert!((erf(3.0) - 0.9999779095030014).abs() < 2e-7);
    }

    #[test]
    fn ks_statistic_of_exact_uniform_grid() {
        // midpoints of n equal bins have D = 1/(2n) against U(0,1)
        let n = 100;
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn ks_critical_values() {
        assert!((ks_critical_value(10_000, KsLevel::FivePercent) - 0.0135810).abs() < 1e-7);
        assert!(
            ks_critical_value(10_000, KsLevel::OnePercent)
                > ks_critical_value(10_000, KsLevel::FivePercent)
        );
    }

    #[test]
    fn slope_of_pure_power_law() {
        let xs: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.5 * x * x).collect();
        assert!((log_log_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn median_iqr_simple() {
        let (m, iqr) = median_iqr(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(m, 3.0);
        assert_eq!(iqr, 2.0);
    }
}
