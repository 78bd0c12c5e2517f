//! Time-series statistics, distribution fitting, and batch summaries.
//!
//! Everything here is a pure function over slices: growth rates and
//! correlations, the trend filter in [`filters`], the distribution fits
//! and normality test in [`distributions`], the inequality, instability,
//! concentration, and bankruptcy indices, crisis flagging, least-squares
//! fits, and the cross-run summary statistics used in scenario tables.

pub mod distributions;
pub mod filters;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("series value at index {index} is not strictly positive ({value})")]
    NonPositive { index: usize, value: f64 },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("{0}")]
    Degenerate(String),
}

/// Arithmetic mean.
pub fn mean(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divisor n).
pub fn std_pop(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Standard error of the mean across runs: population std over sqrt(n).
pub fn standard_error(xs: &[f64]) -> f64 {
    std_pop(xs) / (xs.len() as f64).sqrt()
}

/// One-step log growth rates: `g_t = ln x_t - ln x_{t-1}`, length n-1.
pub fn growth_rate(series: &[f64]) -> Result<Vec<f64>, AnalyticsError> {
    rolling_log_diff(series, 1)
}

/// Rolling `span`-step log growth: `ln x_t - ln x_{t-span}`, length
/// n - span. Annual rates from quarterly data use span 4.
pub fn rolling_log_diff(series: &[f64], span: usize) -> Result<Vec<f64>, AnalyticsError> {
    debug_assert!(span >= 1);
    for (index, &value) in series.iter().enumerate() {
        if !(value > 0.0) {
            return Err(AnalyticsError::NonPositive { index, value });
        }
    }
    if series.len() <= span {
        return Ok(Vec::new());
    }
    Ok((span..series.len())
        .map(|t| (series[t] / series[t - span]).ln())
        .collect())
}

/// Sample autocorrelation with the standard biased normalization;
/// exactly 1 at lag 0.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>, AnalyticsError> {
    let n = series.len();
    if n < 2 {
        return Err(AnalyticsError::TooShort { needed: 2, got: n });
    }
    let m = mean(series);
    let dev: Vec<f64> = series.iter().map(|x| x - m).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom <= 0.0 {
        return Err(AnalyticsError::ZeroVariance);
    }
    Ok((0..=max_lag.min(n - 1))
        .map(|k| dev[k..].iter().zip(&dev).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect())
}

/// Cross-correlation over lags -max_lag..=+max_lag.
///
/// Entry for lag `l` is `corr(x_t, y_{t+l})`: a positive peak lag means
/// y repeats x's movements `l` steps later. Deviations are taken from
/// full-series means; the normalization makes `cross_correlation(x, x)`
/// exactly 1 at lag 0.
pub fn cross_correlation(
    x: &[f64],
    y: &[f64],
    max_lag: usize,
) -> Result<Vec<f64>, AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(AnalyticsError::TooShort { needed: 2, got: n });
    }
    let mx = mean(x);
    let my = mean(y);
    let dx: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let dy: Vec<f64> = y.iter().map(|v| v - my).collect();
    let sx: f64 = dx.iter().map(|d| d * d).sum();
    let sy: f64 = dy.iter().map(|d| d * d).sum();
    if sx <= 0.0 || sy <= 0.0 {
        return Err(AnalyticsError::ZeroVariance);
    }
    let norm = (sx * sy).sqrt();
    let lag = max_lag as isize;
    Ok((-lag..=lag)
        .map(|l| {
            let mut sum = 0.0;
            for t in 0..n as isize {
                let s = t + l;
                if s >= 0 && s < n as isize {
                    sum += dx[t as usize] * dy[s as usize];
                }
            }
            sum / norm
        })
        .collect())
}

/// Gini coefficient of a nonnegative wealth vector.
///
/// The vector is sorted ascending and scored as
/// `G = (N + 1 - 2 sum_h (N + 1 - h) w_h / sum w) / N` with 1-based
/// ranks h, which is 0 for perfect equality and approaches 1 as a single
/// agent holds everything.
pub fn gini(wealth: &[f64]) -> Result<f64, AnalyticsError> {
    if wealth.is_empty() {
        return Err(AnalyticsError::TooShort { needed: 1, got: 0 });
    }
    for (index, &value) in wealth.iter().enumerate() {
        if value < 0.0 {
            return Err(AnalyticsError::NonPositive { index, value });
        }
    }
    let total: f64 = wealth.iter().sum();
    if total <= 0.0 {
        return Err(AnalyticsError::Degenerate(
            "gini undefined for all-zero wealth".to_string(),
        ));
    }
    let mut sorted = wealth.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, w)| (n - i as f64) * w)
        .sum();
    Ok((n + 1.0 - 2.0 * weighted / total) / n)
}

/// Hymer-Pashigian instability index: the total absolute market-share
/// reallocation between two periods. Ranges over [0, 2]; 2 is a complete
/// monopoly handover.
pub fn hpi(current: &[f64], previous: &[f64]) -> Result<f64, AnalyticsError> {
    if current.len() != previous.len() {
        return Err(AnalyticsError::LengthMismatch {
            left: current.len(),
            right: previous.len(),
        });
    }
    Ok(current
        .iter()
        .zip(previous)
        .map(|(c, p)| (c - p).abs())
        .sum())
}

/// Normalized Herfindahl-Hirschman concentration index:
/// `(sum ms^2 - 1/N) / (1 - 1/N)`, 0 for equal shares, 1 for monopoly.
pub fn hhi_normalized(shares: &[f64]) -> Result<f64, AnalyticsError> {
    let n = shares.len();
    if n < 2 {
        return Err(AnalyticsError::TooShort { needed: 2, got: n });
    }
    let hhi: f64 = shares.iter().map(|s| s * s).sum();
    let floor = 1.0 / n as f64;
    Ok((hhi - floor) / (1.0 - floor))
}

/// Bankruptcy rate: trailing `steps_per_year` bankruptcy counts over the
/// population, one value per complete window (length n - span + 1).
pub fn bankruptcy_rate(counts: &[u32], population: usize, steps_per_year: usize) -> Vec<f64> {
    debug_assert!(population > 0 && steps_per_year > 0);
    if counts.len() < steps_per_year {
        return Vec::new();
    }
    let mut window: u32 = counts[..steps_per_year].iter().sum();
    let mut out = Vec::with_capacity(counts.len() - steps_per_year + 1);
    out.push(window as f64 / population as f64);
    for t in steps_per_year..counts.len() {
        window += counts[t] - counts[t - steps_per_year];
        out.push(window as f64 / population as f64);
    }
    out
}

/// Flag periods whose annualized growth falls below `threshold` (the
/// crisis definition uses -3%). Returns the flags and their count.
pub fn crisis_flags(growth: &[f64], threshold: f64) -> (Vec<bool>, usize) {
    let flags: Vec<bool> = growth.iter().map(|&g| g < threshold).collect();
    let count = flags.iter().filter(|&&f| f).count();
    (flags, count)
}

/// Contiguous index spans where growth is negative for at least
/// `min_run` consecutive observations (recession shading on plots).
pub fn negative_spans(growth: &[f64], min_run: usize) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (t, &g) in growth.iter().enumerate() {
        match (g < 0.0, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                if t - s >= min_run {
                    spans.push((s, t));
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if growth.len() - s >= min_run {
            spans.push((s, growth.len()));
        }
    }
    spans
}

/// Ordinary least squares y = intercept + slope x.
#[derive(Debug, Clone, Copy)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    /// Two-sided p-value of the slope under the Student-t null.
    pub p_value: f64,
    pub r_squared: f64,
}

pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<OlsFit, AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(AnalyticsError::TooShort { needed: 3, got: n });
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(AnalyticsError::Degenerate(
            "regressor has zero variance".to_string(),
        ));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let df = (n - 2) as f64;
    let se = (rss / df / sxx).sqrt();
    let p_value = if se == 0.0 {
        0.0
    } else {
        let t = (slope / se).abs();
        let dist = statrs::distribution::StudentsT::new(0.0, 1.0, df)
            .expect("valid Student-t parameters");
        use statrs::distribution::ContinuousCDF;
        2.0 * (1.0 - dist.cdf(t))
    };
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    Ok(OlsFit {
        slope,
        intercept,
        p_value,
        r_squared,
    })
}

/// Welch's unequal-variance two-sample t-test; returns the two-sided
/// p-value for a difference in means.
pub fn welch_p_value(a: &[f64], b: &[f64]) -> Result<f64, AnalyticsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(AnalyticsError::TooShort {
            needed: 2,
            got: a.len().min(b.len()),
        });
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / (na - 1.0);
    let vb = b.iter().map(|x| (x - mb).powi(2)).sum::<f64>() / (nb - 1.0);
    let se2 = va / na + vb / nb;
    if se2 <= 0.0 {
        return if ma == mb {
            Ok(1.0)
        } else {
            Ok(0.0)
        };
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist =
        statrs::distribution::StudentsT::new(0.0, 1.0, df).expect("valid Student-t parameters");
    use statrs::distribution::ContinuousCDF;
    Ok(2.0 * (1.0 - dist.cdf(t.abs())))
}

/// Cross-run summary of one variable: the run-level mean and dispersion
/// of its per-run statistics, as reported in scenario tables.
#[derive(Debug, Clone)]
pub struct VariableSummary {
    pub name: String,
    /// Mean over runs of the per-run time average.
    pub mean: f64,
    /// Standard error of that mean (population std over sqrt(runs)).
    pub se_mean: f64,
    /// Mean over runs of the per-run time standard deviation.
    pub std: f64,
    pub se_std: f64,
    pub n_runs: usize,
}

/// Summarize one variable across runs. Each run contributes its time
/// average and time standard deviation; the cross-run mean and standard
/// error of both are reported.
pub fn summarize_variable(name: &str, per_run: &[Vec<f64>]) -> Result<VariableSummary, AnalyticsError> {
    if per_run.len() < 2 {
        return Err(AnalyticsError::TooShort {
            needed: 2,
            got: per_run.len(),
        });
    }
    let mut means = Vec::with_capacity(per_run.len());
    let mut stds = Vec::with_capacity(per_run.len());
    for series in per_run {
        if series.is_empty() {
            return Err(AnalyticsError::TooShort { needed: 1, got: 0 });
        }
        means.push(mean(series));
        stds.push(std_pop(series));
    }
    Ok(VariableSummary {
        name: name.to_string(),
        mean: mean(&means),
        se_mean: standard_error(&means),
        std: mean(&stds),
        se_std: standard_error(&stds),
        n_runs: per_run.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::rng::{standard_normal, AgentKind, Purpose, RngPolicy};
    use approx::assert_relative_eq;

    fn noise(n: usize, tag: u32) -> Vec<f64> {
        let policy = RngPolicy::new(31415);
        let mut rng = policy.stream(AgentKind::Market, tag, 0, Purpose::Ordering);
        (0..n).map(|_| standard_normal(&mut rng)).collect()
    }

    #[test]
    fn growth_rate_matches_frozen_values() {
        let g = growth_rate(&[100.0, 102.0]).unwrap();
        assert_relative_eq!(g[0], 0.0198, max_relative = 1e-2);
        assert_relative_eq!(g[0], (102.0f64 / 100.0).ln(), max_relative = 1e-15);
        let g = growth_rate(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        let g = growth_rate(&[1.0, 2.0]).unwrap();
        assert_relative_eq!(g[0], std::f64::consts::LN_2, max_relative = 1e-12);
    }

    #[test]
    fn growth_rate_rejects_nonpositive_values_by_index() {
        let err = growth_rate(&[1.0, 0.0, 2.0]).unwrap_err();
        assert!(err.to_string().contains("index 1"), "got {err}");
    }

    #[test]
    fn rolling_log_diff_spans_multiple_steps() {
        // Constant per-step growth g: 4-step diff is exactly 4 g.
        let series: Vec<f64> = (0..10).map(|t| (0.01f64 * t as f64).exp()).collect();
        let annual = rolling_log_diff(&series, 4).unwrap();
        assert_eq!(annual.len(), 6);
        for g in annual {
            assert_relative_eq!(g, 0.04, max_relative = 1e-10);
        }
    }

    #[test]
    fn autocorrelation_is_one_at_lag_zero() {
        let x = noise(500, 1);
        let acf = autocorrelation(&x, 3).unwrap();
        assert_eq!(acf[0], 1.0);
    }

    #[test]
    fn white_noise_has_no_autocorrelation() {
        let x = noise(10_000, 2);
        let acf = autocorrelation(&x, 1).unwrap();
        assert!(acf[1].abs() < 0.03, "rho(1) = {}", acf[1]);
    }

    #[test]
    fn ar1_autocorrelation_matches_coefficient() {
        let e = noise(10_000, 3);
        let phi = 0.9;
        let mut x = vec![0.0; e.len()];
        for t in 1..e.len() {
            x[t] = phi * x[t - 1] + e[t];
        }
        let acf = autocorrelation(&x, 1).unwrap();
        assert!((acf[1] - phi).abs() < 0.03, "rho(1) = {}", acf[1]);
    }

    #[test]
    fn constant_series_has_no_defined_autocorrelation() {
        assert!(matches!(
            autocorrelation(&[2.0; 10], 1),
            Err(AnalyticsError::ZeroVariance)
        ));
    }

    #[test]
    fn cross_correlation_of_a_series_with_itself_peaks_at_zero() {
        let x = noise(300, 4);
        let ccf = cross_correlation(&x, &x, 3).unwrap();
        assert_eq!(ccf.len(), 7);
        assert_eq!(ccf[3], 1.0);
        for (i, &r) in ccf.iter().enumerate() {
            assert!(r <= 1.0 + 1e-12, "lag {} above 1: {r}", i as isize - 3);
        }
    }

    #[test]
    fn cross_correlation_finds_a_known_shift() {
        // y follows x two steps later.
        let e = noise(5_002, 5);
        let x = e[2..].to_vec();
        let y = e[..5_000].to_vec();
        let ccf = cross_correlation(&x, &y, 4).unwrap();
        let peak = ccf
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0 as isize
            - 4;
        assert_eq!(peak, 2);
        assert!(ccf[(4 + 2) as usize] > 0.95);
    }

    #[test]
    fn independent_noise_has_no_cross_correlation() {
        let x = noise(10_000, 6);
        let y = noise(10_000, 7);
        let ccf = cross_correlation(&x, &y, 3).unwrap();
        let band = 3.0 / (10_000f64).sqrt();
        for &r in &ccf {
            assert!(r.abs() < band, "{r} outside +-{band}");
        }
    }

    #[test]
    fn gini_matches_frozen_values() {
        assert_relative_eq!(gini(&[0.0, 0.0, 0.0, 7.0]).unwrap(), 0.75, max_relative = 1e-12);
        assert_relative_eq!(gini(&[3.0, 3.0, 3.0, 3.0]).unwrap(), 0.0, epsilon = 1e-15);
        // Single holder among many approaches 1.
        let mut w = vec![0.0; 10_000];
        w[17] = 5.0;
        assert!(gini(&w).unwrap() > 0.999);
    }

    #[test]
    fn gini_is_scale_invariant_and_order_free() {
        let w = [1.0, 5.0, 0.5, 2.0, 9.0];
        let base = gini(&w).unwrap();
        let scaled: Vec<f64> = w.iter().map(|x| x * 42.0).collect();
        assert_relative_eq!(gini(&scaled).unwrap(), base, max_relative = 1e-12);
        let mut reversed = w.to_vec();
        reversed.reverse();
        assert_relative_eq!(gini(&reversed).unwrap(), base, max_relative = 1e-12);
    }

    #[test]
    fn gini_rejects_degenerate_wealth() {
        assert!(gini(&[0.0, 0.0]).is_err());
        assert!(gini(&[1.0, -0.5]).is_err());
    }

    #[test]
    fn hpi_matches_frozen_values() {
        assert_relative_eq!(
            hpi(&[0.5, 0.5], &[0.6, 0.4]).unwrap(),
            0.2,
            max_relative = 1e-12
        );
        assert_eq!(hpi(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        // Complete monopoly handover reaches the upper bound 2.
        assert_relative_eq!(
            hpi(&[0.0, 1.0], &[1.0, 0.0]).unwrap(),
            2.0,
            max_relative = 1e-12
        );
        assert!(hpi(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn hhi_matches_frozen_values() {
        assert_relative_eq!(
            hhi_normalized(&[0.75, 0.25]).unwrap(),
            0.25,
            max_relative = 1e-12
        );
        assert_eq!(hhi_normalized(&[0.25; 4]).unwrap(), 0.0);
        assert_relative_eq!(
            hhi_normalized(&[1.0, 0.0, 0.0]).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        assert!(hhi_normalized(&[1.0]).is_err());
    }

    #[test]
    fn indices_are_permutation_invariant() {
        let a = [0.5, 0.3, 0.2];
        let b = [0.2, 0.5, 0.3];
        assert_relative_eq!(
            hhi_normalized(&a).unwrap(),
            hhi_normalized(&b).unwrap(),
            max_relative = 1e-12
        );
        // HPI pairs shares by agent, so the permutation must apply to
        // both periods.
        let prev_a = [0.4, 0.4, 0.2];
        let prev_b = [0.2, 0.4, 0.4];
        assert_relative_eq!(
            hpi(&a, &prev_a).unwrap(),
            hpi(&b, &prev_b).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn bankruptcy_rate_matches_frozen_value() {
        let rates = bankruptcy_rate(&[2, 1, 3, 2], 200, 4);
        assert_eq!(rates.len(), 1);
        assert_relative_eq!(rates[0], 0.04, max_relative = 1e-12);
        assert!(bankruptcy_rate(&[1, 2], 200, 4).is_empty());
        let zero = bankruptcy_rate(&[0; 8], 200, 4);
        assert!(zero.iter().all(|&r| r == 0.0));
        // Whole population failing once in a year rates 1.
        let all = bankruptcy_rate(&[50, 50, 50, 50], 200, 4);
        assert_relative_eq!(all[0], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn crisis_flags_apply_threshold() {
        let (flags, count) = crisis_flags(&[0.01, -0.04, 0.02], -0.03);
        assert_eq!(flags, vec![false, true, false]);
        assert_eq!(count, 1);
        let (_, none) = crisis_flags(&[0.0, 0.01, 0.5], -0.03);
        assert_eq!(none, 0);
    }

    #[test]
    fn negative_spans_require_min_run() {
        let g = [0.1, -0.1, -0.2, 0.1, -0.1, 0.2, -0.3, -0.1];
        let spans = negative_spans(&g, 2);
        assert_eq!(spans, vec![(1, 3), (6, 8)]);
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let fit = ols_fit(&x, &y).unwrap();
        assert_relative_eq!(fit.slope, 2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.intercept, 1.0, max_relative = 1e-9);
        assert!(fit.p_value < 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn ols_on_independent_noise_finds_nothing() {
        let x = noise(2_000, 8);
        let y = noise(2_000, 9);
        let fit = ols_fit(&x, &y).unwrap();
        assert!(fit.slope.abs() < 0.07, "slope {}", fit.slope);
        assert!(fit.p_value > 0.001);
    }

    #[test]
    fn ols_rejects_degenerate_regressor() {
        assert!(ols_fit(&[1.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
    }

    #[test]
    fn welch_test_separates_shifted_samples() {
        let a: Vec<f64> = noise(40, 10).iter().map(|x| x + 1.0).collect();
        let b = noise(40, 11);
        assert!(welch_p_value(&a, &b).unwrap() < 1e-3);
        let c = noise(40, 12);
        let d = noise(40, 13);
        assert!(welch_p_value(&c, &d).unwrap() > 0.01);
    }

    #[test]
    fn summary_matches_frozen_standard_error() {
        // Two runs whose time averages are 0.02 and 0.03.
        let runs = vec![vec![0.02; 10], vec![0.03; 10]];
        let s = summarize_variable("growth", &runs).unwrap();
        assert_relative_eq!(s.mean, 0.025, max_relative = 1e-12);
        assert_relative_eq!(s.se_mean, 0.0035355339, max_relative = 1e-6);
        assert!(s.std.abs() < 1e-12);
    }

    #[test]
    fn identical_runs_have_zero_standard_errors() {
        let series: Vec<f64> = (0..20).map(|i| (i as f64).sin() + 2.0).collect();
        let runs = vec![series.clone(), series.clone(), series];
        let s = summarize_variable("anything", &runs).unwrap();
        assert_eq!(s.se_mean, 0.0);
        assert_eq!(s.se_std, 0.0);
        assert!(s.std > 0.0);
    }

    #[test]
    fn summary_requires_two_runs() {
        assert!(summarize_variable("x", &[vec![1.0]]).is_err());
    }
}
