//! Trend-cycle decomposition by the Hodrick-Prescott penalty filter.

use super::AnalyticsError;

/// Smooth trend and residual cycle; `trend + cycle` reconstructs the
/// input (up to floating-point rounding in the subtraction).
#[derive(Debug, Clone)]
pub struct CycleDecomposition {
    pub trend: Vec<f64>,
    pub cycle: Vec<f64>,
    pub lambda: f64,
}

/// Hodrick-Prescott filter: trend minimizes
/// `sum (x_t - tau_t)^2 + lambda sum (d2 tau_t)^2`, i.e. solves
/// `(I + lambda D'D) tau = x` with D the second-difference operator.
/// Quarterly data conventionally uses lambda = 1600. The system is
/// symmetric positive definite and pentadiagonal, so it is solved by a
/// banded Cholesky factorization in O(n). As lambda grows the trend
/// approaches the least-squares line; at lambda = 0 it equals the input.
pub fn hp_filter(series: &[f64], lambda: f64) -> Result<CycleDecomposition, AnalyticsError> {
    let n = series.len();
    if n < 4 {
        return Err(AnalyticsError::TooShort { needed: 4, got: n });
    }
    if !(lambda >= 0.0) {
        return Err(AnalyticsError::Degenerate(format!(
            "smoothing parameter must be nonnegative, got {lambda}"
        )));
    }

    // Assemble I + lambda D'D in symmetric banded form (main diagonal
    // plus two subdiagonals) by accumulating the (1, -2, 1) stencil of
    // each second difference.
    let mut d0 = vec![1.0; n];
    let mut d1 = vec![0.0; n.saturating_sub(1)];
    let mut d2 = vec![0.0; n.saturating_sub(2)];
    for j in 0..n - 2 {
        d0[j] += lambda;
        d0[j + 1] += 4.0 * lambda;
        d0[j + 2] += lambda;
        d1[j] += -2.0 * lambda;
        d1[j + 1] += -2.0 * lambda;
        d2[j] += lambda;
    }

    let trend = solve_banded_spd(&d0, &d1, &d2, series);
    let cycle = series
        .iter()
        .zip(&trend)
        .map(|(x, t)| x - t)
        .collect();
    Ok(CycleDecomposition {
        trend,
        cycle,
        lambda,
    })
}

/// Cholesky solve of a symmetric positive definite matrix with
/// bandwidth 2, given as the main diagonal and the two subdiagonals.
fn solve_banded_spd(d0: &[f64], d1: &[f64], d2: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = d0.len();
    let mut l0 = vec![0.0; n];
    let mut l1 = vec![0.0; n.saturating_sub(1)];
    let mut l2 = vec![0.0; n.saturating_sub(2)];
    for i in 0..n {
        let mut diag = d0[i];
        if i >= 1 {
            diag -= l1[i - 1] * l1[i - 1];
        }
        if i >= 2 {
            diag -= l2[i - 2] * l2[i - 2];
        }
        debug_assert!(diag > 0.0, "matrix not positive definite");
        l0[i] = diag.sqrt();
        if i + 1 < n {
            let mut v = d1[i];
            if i >= 1 {
                v -= l1[i - 1] * l2[i - 1];
            }
            l1[i] = v / l0[i];
        }
        if i + 2 < n {
            l2[i] = d2[i] / l0[i];
        }
    }

    // L y = rhs, then L' x = y.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut v = rhs[i];
        if i >= 1 {
            v -= l1[i - 1] * y[i - 1];
        }
        if i >= 2 {
            v -= l2[i - 2] * y[i - 2];
        }
        y[i] = v / l0[i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = y[i];
        if i + 1 < n {
            v -= l1[i] * x[i + 1];
        }
        if i + 2 < n {
            v -= l2[i] * x[i + 2];
        }
        x[i] = v / l0[i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::ols_fit;
    use crate::config::rng::{standard_normal, AgentKind, Purpose, RngPolicy};
    use approx::assert_relative_eq;

    /// Dense reference solve of (I + lambda D'D) tau = x by Gaussian
    /// elimination with partial pivoting.
    fn hp_dense(series: &[f64], lambda: f64) -> Vec<f64> {
        let n = series.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = 1.0;
        }
        for j in 0..n - 2 {
            let stencil = [(j, 1.0), (j + 1, -2.0), (j + 2, 1.0)];
            for &(r, cr) in &stencil {
                for &(c, cc) in &stencil {
                    a[r][c] += lambda * cr * cc;
                }
            }
        }
        let mut b = series.to_vec();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            b.swap(col, pivot);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let mut v = b[row];
            for c in row + 1..n {
                v -= a[row][c] * x[c];
            }
            x[row] = v / a[row][row];
        }
        x
    }

    fn sample_series(n: usize) -> Vec<f64> {
        let policy = RngPolicy::new(271828);
        let mut rng = policy.stream(AgentKind::Market, 90, 0, Purpose::Ordering);
        let mut level = 100.0f64;
        (0..n)
            .map(|t| {
                level *= 1.005 + 0.01 * standard_normal(&mut rng);
                level + 3.0 * (t as f64 / 7.0).sin()
            })
            .collect()
    }

    #[test]
    fn banded_solve_matches_dense_reference() {
        for &n in &[4usize, 5, 7, 40, 120] {
            let x = sample_series(n);
            let banded = hp_filter(&x, 1600.0).unwrap();
            let dense = hp_dense(&x, 1600.0);
            for (b, d) in banded.trend.iter().zip(&dense) {
                assert_relative_eq!(b, d, max_relative = 1e-8, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn trend_plus_cycle_reconstructs_input() {
        let x = sample_series(200);
        let dec = hp_filter(&x, 1600.0).unwrap();
        for i in 0..x.len() {
            assert_relative_eq!(dec.trend[i] + dec.cycle[i], x[i], max_relative = 1e-14);
        }
    }

    #[test]
    fn zero_smoothing_returns_the_input() {
        let x = sample_series(50);
        let dec = hp_filter(&x, 0.0).unwrap();
        for i in 0..x.len() {
            assert_relative_eq!(dec.trend[i], x[i], max_relative = 1e-12);
            assert!(dec.cycle[i].abs() < 1e-9);
        }
    }

    #[test]
    fn infinite_smoothing_approaches_least_squares_line() {
        let x = sample_series(150);
        let t: Vec<f64> = (0..x.len()).map(|i| i as f64).collect();
        let line = ols_fit(&t, &x).unwrap();
        let dec = hp_filter(&x, 1e12).unwrap();
        for i in 0..x.len() {
            let fitted = line.intercept + line.slope * t[i];
            assert_relative_eq!(dec.trend[i], fitted, max_relative = 1e-4, epsilon = 1e-3);
        }
    }

    #[test]
    fn linear_input_is_its_own_trend() {
        // A line has zero second differences, so the penalty leaves it
        // untouched at any smoothing level.
        let x: Vec<f64> = (0..60).map(|i| 5.0 + 0.25 * i as f64).collect();
        let dec = hp_filter(&x, 1600.0).unwrap();
        for i in 0..x.len() {
            assert_relative_eq!(dec.trend[i], x[i], max_relative = 1e-10);
        }
    }

    #[test]
    fn filter_rejects_short_series() {
        assert!(hp_filter(&[1.0, 2.0, 3.0], 1600.0).is_err());
    }
}
