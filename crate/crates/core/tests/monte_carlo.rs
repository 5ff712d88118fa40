//! Exact-path Monte Carlo against the closed-form oracles.

use heatvar::gaussian_sim::{build_temporal_covariance, sample_increment_moments, sample_path, SeedSpec};
use heatvar::kernel::increment_cov_matrix;
use heatvar::parallel::map_replicates;
use heatvar::stats::{ks_to_normal, mean_se, variance_se};
use heatvar::wick::linear_quartic_moments;
use heatvar::{cov_u0, quartic_variation, TimeGrid};

#[test]
fn empirical_path_covariance_matches_closed_form() {
    let n = 16;
    let m = 20_000;
    let cov = build_temporal_covariance(n, 1.3).unwrap();
    let paths = map_replicates(m, None, |r| sample_path(&cov, SeedSpec::new(21, r)).into_values());
    for i in 1..=n {
        for j in i..=n {
            let prods: Vec<f64> = paths.iter().map(|p| p[i] * p[j]).collect();
            let (est, err) = mean_se(&prods);
            let exact = cov_u0(i as f64 / n as f64, j as f64 / n as f64, 1.3).unwrap();
            assert!((est - exact).abs() < 4.5 * err, "({i},{j}): {est} ± {err} vs {exact}");
        }
    }
}

#[test]
fn standardized_increments_are_standard_normal() {
    let n = 64;
    let m = 10_000;
    let cov = build_temporal_covariance(n, 1.0).unwrap();
    let d = increment_cov_matrix(&TimeGrid::new(n).unwrap(), 1.0).unwrap();
    let paths = map_replicates(m, None, |r| sample_path(&cov, SeedSpec::new(8, r)).into_values());
    for &i in &[0usize, 1, 31, 63] {
        let sd = d.get(i, i).sqrt();
        let z: Vec<f64> = paths.iter().map(|p| (p[i + 1] - p[i]) / sd).collect();
        let ks = ks_to_normal(&z, 0.0, 1.0).unwrap();
        assert!(ks < 1.63 / (m as f64).sqrt(), "increment {i}: KS {ks}");
    }
}

#[test]
fn quartic_variation_moments_match_oracle() {
    let n = 64;
    let m = 40_000;
    let cov = build_temporal_covariance(n, 0.7).unwrap();
    let vs = map_replicates(m, None, |r| quartic_variation(&sample_path(&cov, SeedSpec::new(99, r))));
    let (e, v) = linear_quartic_moments(n, 0.7).unwrap();
    let (mean, mean_err) = mean_se(&vs);
    let (var, var_err) = variance_se(&vs);
    assert!((mean - e).abs() < 4.0 * mean_err, "{mean} vs {e}");
    assert!((var - v).abs() < 4.0 * var_err, "{var} vs {v}");
}

#[test]
fn increment_moments_match_diagonal() {
    let n = 32;
    let cov = build_temporal_covariance(n, 1.0).unwrap();
    let d = increment_cov_matrix(&TimeGrid::new(n).unwrap(), 1.0).unwrap();
    let mom = sample_increment_moments(&cov, 20_000, 4).unwrap();
    for i in 0..n {
        let a = d.get(i, i);
        assert!((mom.second[i] - a).abs() < 4.5 * mom.second_se[i], "second {i}");
        assert!((mom.fourth[i] - 3.0 * a * a).abs() < 4.5 * mom.fourth_se[i], "fourth {i}");
    }
}

#[test]
fn replicate_streams_are_independent_of_scheduling() {
    let cov = build_temporal_covariance(128, 1.0).unwrap();
    let one = map_replicates(64, Some(1), |r| sample_path(&cov, SeedSpec::new(1, r)).into_values());
    let many = map_replicates(64, Some(8), |r| sample_path(&cov, SeedSpec::new(1, r)).into_values());
    assert_eq!(one, many);
    assert_ne!(one[0], one[1]);
}
