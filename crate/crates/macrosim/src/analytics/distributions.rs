//! Distribution fitting: exponential-power (Subbotin) maximum
//! likelihood, power-law versus log-normal tail comparison, and a
//! Kolmogorov-Smirnov normality test.

use super::{mean, std_pop, AnalyticsError};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

/// Maximum-likelihood fit of the exponential-power family
/// `f(x) = beta / (2 alpha Gamma(1/beta)) exp(-|(x-mu)/alpha|^beta)`.
/// Shape 1 is the Laplace distribution, shape 2 the normal (where
/// `alpha = sqrt(2) * std`); shapes below 1 have tails fatter than
/// Laplace.
#[derive(Debug, Clone, Copy)]
pub struct SubbotinFit {
    pub beta: f64,
    pub alpha: f64,
    pub mu: f64,
    pub log_likelihood: f64,
}

impl SubbotinFit {
    pub fn log_density(&self, x: f64) -> f64 {
        self.beta.ln()
            - (2.0 * self.alpha).ln()
            - ln_gamma(1.0 / self.beta)
            - ((x - self.mu) / self.alpha).abs().powf(self.beta)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }
}

/// Closed-form scale at the likelihood optimum for fixed shape and
/// location: `alpha = (beta/n sum |x-mu|^beta)^(1/beta)`.
fn scale_at(data: &[f64], mu: f64, beta: f64) -> f64 {
    let n = data.len() as f64;
    let s: f64 = data.iter().map(|x| (x - mu).abs().powf(beta)).sum();
    (beta * s / n).powf(1.0 / beta)
}

/// Log-likelihood profiled over the scale:
/// `n (ln beta - ln 2 - ln alpha - ln Gamma(1/beta)) - n/beta`.
fn profile_log_likelihood(data: &[f64], mu: f64, beta: f64) -> f64 {
    let n = data.len() as f64;
    let alpha = scale_at(data, mu, beta);
    if !(alpha > 0.0) {
        return f64::NEG_INFINITY;
    }
    n * (beta.ln() - 2f64.ln() - alpha.ln() - ln_gamma(1.0 / beta)) - n / beta
}

/// Golden-section maximum of a one-dimensional function.
fn golden_max(mut lo: f64, mut hi: f64, iters: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Best location for a fixed shape. A golden-section pass over the
/// central quantile range handles smooth shapes; because the likelihood
/// is non-smooth in the location (kinked at every observation, with the
/// optimum often exactly on one for shapes below 1), the result is then
/// refined over the sample points nearest the smooth optimum.
fn best_location(sorted: &[f64], beta: f64, snap: usize) -> (f64, f64) {
    let n = sorted.len();
    let mut lo = sorted[n / 10];
    let mut hi = sorted[n - 1 - n / 10];
    if !(hi > lo) {
        lo = sorted[0];
        hi = sorted[n - 1];
    }
    let (mut best_mu, mut best_ll) =
        golden_max(lo, hi, 80, |mu| profile_log_likelihood(sorted, mu, beta));

    let median = sorted[n / 2];
    let ll_med = profile_log_likelihood(sorted, median, beta);
    if ll_med > best_ll {
        best_mu = median;
        best_ll = ll_med;
    }

    // Candidate observations nearest the smooth optimum.
    let centre = sorted.partition_point(|&x| x < best_mu);
    let from = centre.saturating_sub(snap / 2);
    let to = (centre + snap / 2).min(n);
    for &x in &sorted[from..to] {
        let ll = profile_log_likelihood(sorted, x, beta);
        if ll > best_ll {
            best_mu = x;
            best_ll = ll;
        }
    }
    (best_mu, best_ll)
}

fn validated_sorted(data: &[f64]) -> Result<Vec<f64>, AnalyticsError> {
    if data.len() < 3 {
        return Err(AnalyticsError::TooShort {
            needed: 3,
            got: data.len(),
        });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(AnalyticsError::Degenerate(
            "non-finite observation".to_string(),
        ));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(AnalyticsError::ZeroVariance);
    }
    Ok(sorted)
}

/// Full maximum-likelihood Subbotin fit: bounded derivative-free search
/// over the shape in [0.2, 5] (coarse geometric scan, then golden
/// section in the best bracket), with the location found by the hybrid
/// 1-D search and the scale in closed form.
pub fn fit_subbotin(data: &[f64]) -> Result<SubbotinFit, AnalyticsError> {
    let sorted = validated_sorted(data)?;
    let snap = if sorted.len() > 5_000 { 32 } else { 64 };

    const LO: f64 = 0.2;
    const HI: f64 = 5.0;
    let n_grid: usize = 13;
    let ratio = (HI / LO).powf(1.0 / (n_grid - 1) as f64);
    let grid: Vec<f64> = (0..n_grid).map(|i| LO * ratio.powi(i as i32)).collect();
    let scores: Vec<f64> = grid
        .iter()
        .map(|&b| best_location(&sorted, b, snap).1)
        .collect();
    let best = scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    let blo = grid[best.saturating_sub(1)];
    let bhi = grid[(best + 1).min(n_grid - 1)];
    let (beta, _) = golden_max(blo, bhi, 28, |b| best_location(&sorted, b, snap).1);
    let (mu, log_likelihood) = best_location(&sorted, beta, snap.max(64));
    let alpha = scale_at(&sorted, mu, beta);
    Ok(SubbotinFit {
        beta,
        alpha,
        mu,
        log_likelihood,
    })
}

/// Subbotin fit with the shape held fixed (1 for Laplace, 2 for
/// normal); only location and scale are estimated.
pub fn fit_subbotin_fixed_shape(data: &[f64], beta: f64) -> Result<SubbotinFit, AnalyticsError> {
    if !(beta > 0.0) {
        return Err(AnalyticsError::Degenerate(format!(
            "shape must be positive, got {beta}"
        )));
    }
    let sorted = validated_sorted(data)?;
    let (mu, log_likelihood) = best_location(&sorted, beta, 64);
    let alpha = scale_at(&sorted, mu, beta);
    Ok(SubbotinFit {
        beta,
        alpha,
        mu,
        log_likelihood,
    })
}

/// Power-law versus log-normal comparison of an upper tail.
#[derive(Debug, Clone)]
pub struct TailFit {
    /// Power-law density exponent (density ~ x^-exponent above the
    /// cutoff); always > 1.
    pub exponent: f64,
    /// Tail cutoff chosen by minimizing the KS distance between the
    /// empirical tail and the fitted power law.
    pub x_min: f64,
    /// Observations at or above the cutoff.
    pub n_tail: usize,
    /// Log-normal parameters fitted on the logs of the full sample.
    pub lognormal_location: f64,
    pub lognormal_scale: f64,
    /// Log-likelihood of the tail observations under each model
    /// (log-normal conditioned on exceeding the cutoff).
    pub power_law_tail_ll: f64,
    pub lognormal_tail_ll: f64,
    /// Empirical complementary CDF points (x, P(X >= x)) thinned for
    /// log-log plotting.
    pub ccdf: Vec<(f64, f64)>,
}

/// Empirical complementary CDF (x, P(X >= x)) at up to `max_points`
/// sorted sample values.
pub fn ccdf_points(data: &[f64], max_points: usize) -> Vec<(f64, f64)> {
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let stride = n.div_ceil(max_points.max(1)).max(1);
    let mut pts: Vec<(f64, f64)> = sorted
        .iter()
        .enumerate()
        .step_by(stride)
        .map(|(i, &x)| (x, (n - i) as f64 / n as f64))
        .collect();
    if let Some(&last) = sorted.last() {
        if pts.last().map(|p| p.0) != Some(last) {
            pts.push((last, 1.0 / n as f64));
        }
    }
    pts
}

/// Fit the upper tail of positive data: continuous power-law maximum
/// likelihood with the cutoff chosen by KS minimization, compared
/// against a log-normal fitted on logs, both scored on the same tail.
/// Refused when fewer than 10 observations remain above every viable
/// cutoff or the data are degenerate.
pub fn fit_tail(data: &[f64]) -> Result<TailFit, AnalyticsError> {
    for (index, &value) in data.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(AnalyticsError::NonPositive { index, value });
        }
    }
    const MIN_TAIL: usize = 10;
    if data.len() < MIN_TAIL {
        return Err(AnalyticsError::TooShort {
            needed: MIN_TAIL,
            got: data.len(),
        });
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if sorted[0] == sorted[n - 1] {
        return Err(AnalyticsError::Degenerate(
            "tail fit refused: all observations equal".to_string(),
        ));
    }

    // Suffix sums of ln x make the tail MLE O(1) per candidate cutoff.
    let logs: Vec<f64> = sorted.iter().map(|x| x.ln()).collect();
    let mut suffix_log = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix_log[i] = suffix_log[i + 1] + logs[i];
    }

    // Candidate cutoffs: first index of each distinct value keeping at
    // least MIN_TAIL points above, thinned to bound the scan.
    let mut candidates: Vec<usize> = (0..=n - MIN_TAIL)
        .filter(|&i| i == 0 || sorted[i] > sorted[i - 1])
        .collect();
    if candidates.is_empty() {
        return Err(AnalyticsError::Degenerate(
            "tail fit refused: fewer than 10 tail points".to_string(),
        ));
    }
    const MAX_CANDIDATES: usize = 1024;
    if candidates.len() > MAX_CANDIDATES {
        let stride = candidates.len() / MAX_CANDIDATES + 1;
        candidates = candidates.into_iter().step_by(stride).collect();
    }

    let mut best: Option<(f64, usize, f64, f64)> = None; // (ks, start, x_min, exponent)
    for &start in &candidates {
        let x_min = sorted[start];
        let m = n - start;
        let sum_log_ratio = suffix_log[start] - m as f64 * x_min.ln();
        if sum_log_ratio <= 0.0 {
            continue;
        }
        let exponent = 1.0 + m as f64 / sum_log_ratio;
        let mut ks: f64 = 0.0;
        for (j, &x) in sorted[start..].iter().enumerate() {
            let model = 1.0 - (x_min / x).powf(exponent - 1.0);
            let lo = j as f64 / m as f64;
            let hi = (j + 1) as f64 / m as f64;
            ks = ks.max((model - lo).abs().max((hi - model).abs()));
        }
        if best.map_or(true, |(bks, ..)| ks < bks) {
            best = Some((ks, start, x_min, exponent));
        }
    }
    let (_, start, x_min, exponent) = best.ok_or_else(|| {
        AnalyticsError::Degenerate("tail fit refused: no viable cutoff".to_string())
    })?;
    let tail = &sorted[start..];
    let m = tail.len() as f64;

    let power_law_tail_ll = m * (exponent - 1.0).ln() - m * x_min.ln()
        - exponent * (suffix_log[start] - m * x_min.ln());

    // Log-normal on logs of the full sample, scored on the tail
    // conditional on exceeding the cutoff.
    let loc = mean(&logs);
    let scale = std_pop(&logs).max(1e-300);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let exceed = 1.0 - normal.cdf((x_min.ln() - loc) / scale);
    let lognormal_tail_ll = if exceed <= 0.0 {
        f64::NEG_INFINITY
    } else {
        tail.iter()
            .map(|&x| {
                let z = (x.ln() - loc) / scale;
                -x.ln() - scale.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * z * z
            })
            .sum::<f64>()
            - m * exceed.ln()
    };

    Ok(TailFit {
        exponent,
        x_min,
        n_tail: tail.len(),
        lognormal_location: loc,
        lognormal_scale: scale,
        power_law_tail_ll,
        lognormal_tail_ll,
        ccdf: ccdf_points(&sorted, 512),
    })
}

/// Kolmogorov-Smirnov test of normality against a normal with the
/// sample mean and standard deviation. Returns the KS statistic and
/// its asymptotic two-sided p-value `2 sum (-1)^(k-1) exp(-2 k^2 n D^2)`
/// (parameter estimation makes this conservative toward acceptance).
pub fn ks_normality(data: &[f64]) -> Result<(f64, f64), AnalyticsError> {
    let n = data.len();
    if n < 8 {
        return Err(AnalyticsError::TooShort { needed: 8, got: n });
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = mean(&sorted);
    let sd = {
        let ss: f64 = sorted.iter().map(|x| (x - m).powi(2)).sum();
        (ss / (n as f64 - 1.0)).sqrt()
    };
    if sd <= 0.0 {
        return Err(AnalyticsError::ZeroVariance);
    }
    let normal = Normal::new(m, sd).expect("valid normal parameters");
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal.cdf(x);
        let lo = i as f64 / n as f64;
        let hi = (i + 1) as f64 / n as f64;
        d = d.max((f - lo).max(hi - f));
    }
    let t = (n as f64).sqrt() * d;
    let mut p = 0.0;
    for k in 1..=200u32 {
        let term = (-2.0 * (k as f64).powi(2) * t * t).exp();
        p += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    Ok((d, (2.0 * p).clamp(0.0, 1.0)))
}
