//! Distribution distances and dependence diagnostics on empirical samples.

use std::cell::OnceCell;
use std::f64::consts::SQRT_2;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::wick::pairwise_sum;

/// `Φ(x)` through the complementary error function; absolute error well
/// below `1e-10` on the whole line (erfc is evaluated by rational
/// approximations accurate to about 1e-16 relative).
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `Φ⁻¹(p)` for `0 < p < 1`.
pub fn std_normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

pub fn normal_cdf(x: f64, mu: f64, sigma: f64) -> f64 {
    std_normal_cdf((x - mu) / sigma)
}

/// Finite real samples with a lazily cached sorted copy.
#[derive(Debug, Clone)]
pub struct SampleSet {
    values: Vec<f64>,
    sorted: OnceCell<Vec<f64>>,
}

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite sample at index {k}")));
        }
        Ok(Self {
            values,
            sorted: OnceCell::new(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        self.sorted.get_or_init(|| sorted_copy(&self.values))
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    pub fn ks_to_normal(&self, mu: f64, sigma: f64) -> Result<f64> {
        check_normal(self.len(), sigma)?;
        Ok(ks_sorted_to_normal(self.sorted(), mu, sigma))
    }

    pub fn wasserstein1_to_normal(&self, mu: f64, sigma: f64, k: usize) -> Result<f64> {
        check_w1(self.len(), sigma, k)?;
        Ok(w1_sorted_to_normal(self.sorted(), mu, sigma, k))
    }
}

fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn check_finite(xs: &[f64]) -> Result<()> {
    match xs.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::domain(format!("non-finite sample at index {k}"))),
        None => Ok(()),
    }
}

fn check_normal(len: usize, sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    if len < 2 {
        return Err(Error::domain("need at least two samples"));
    }
    Ok(())
}

fn check_w1(len: usize, sigma: f64, k: usize) -> Result<()> {
    check_normal(len, sigma)?;
    if k < 100 {
        return Err(Error::domain(format!("need at least 100 quantile levels, got {k}")));
    }
    Ok(())
}

/// One-sample Kolmogorov-Smirnov distance to `N(mu, sigma²)`, checking
/// both one-sided steps of the empirical CDF at every sample point.
pub fn ks_to_normal(samples: &[f64], mu: f64, sigma: f64) -> Result<f64> {
    check_normal(samples.len(), sigma)?;
    check_finite(samples)?;
    Ok(ks_sorted_to_normal(&sorted_copy(samples), mu, sigma))
}

fn ks_sorted_to_normal(sorted: &[f64], mu: f64, sigma: f64) -> f64 {
    let m = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |acc, (k, &x)| {
        let f = normal_cdf(x, mu, sigma);
        let below = (f - k as f64 / m).abs();
        let above = ((k + 1) as f64 / m - f).abs();
        acc.max(below).max(above)
    })
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("two-sample KS needs non-empty samples"));
    }
    check_finite(a)?;
    check_finite(b)?;
    let (a, b) = (sorted_copy(a), sorted_copy(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// 1-Wasserstein distance to `N(mu, sigma²)` as the mean absolute gap
/// between empirical and normal quantiles at the `K` mid-point levels
/// `(k + ½)/K`.
pub fn wasserstein1_to_normal(samples: &[f64], mu: f64, sigma: f64, k: usize) -> Result<f64> {
    check_w1(samples.len(), sigma, k)?;
    check_finite(samples)?;
    Ok(w1_sorted_to_normal(&sorted_copy(samples), mu, sigma, k))
}

fn w1_sorted_to_normal(sorted: &[f64], mu: f64, sigma: f64, k: usize) -> f64 {
    let m = sorted.len();
    let terms: Vec<f64> = (0..k)
        .map(|level| {
            let p = (level as f64 + 0.5) / k as f64;
            let idx = ((p * m as f64).ceil() as usize).clamp(1, m) - 1;
            (sorted[idx] - (mu + sigma * std_normal_quantile(p))).abs()
        })
        .collect();
    pairwise_sum(&terms) / k as f64
}

/// Empirical distance correlation (V-statistic with double-centered
/// distance matrices). `O(M²)` time, `O(M)` memory.
pub fn distance_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 10 {
        return Err(Error::domain("distance correlation needs at least 10 pairs"));
    }
    check_finite(xs)?;
    check_finite(ys)?;
    let m = xs.len();
    let row_means = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&a| pairwise_sum(&v.iter().map(|&b| (a - b).abs()).collect::<Vec<_>>()) / m as f64)
            .collect()
    };
    let ra = row_means(xs);
    let rb = row_means(ys);
    let ga = pairwise_sum(&ra) / m as f64;
    let gb = pairwise_sum(&rb) / m as f64;
    let mut cross_rows = Vec::with_capacity(m);
    let mut aa_rows = Vec::with_capacity(m);
    let mut bb_rows = Vec::with_capacity(m);
    for i in 0..m {
        let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
        for j in 0..m {
            let a = (xs[i] - xs[j]).abs() - ra[i] - ra[j] + ga;
            let b = (ys[i] - ys[j]).abs() - rb[i] - rb[j] + gb;
            ab += a * b;
            aa += a * a;
            bb += b * b;
        }
        cross_rows.push(ab);
        aa_rows.push(aa);
        bb_rows.push(bb);
    }
    let dcov2 = pairwise_sum(&cross_rows);
    let dvar_x = pairwise_sum(&aa_rows);
    let dvar_y = pairwise_sum(&bb_rows);
    if !(dvar_x > 0.0) || !(dvar_y > 0.0) {
        return Err(Error::domain("distance correlation of a constant sample"));
    }
    let r2 = dcov2 / (dvar_x * dvar_y).sqrt();
    Ok(r2.max(0.0).sqrt().min(1.0))
}

/// Largest dimension accepted by [`joint_kolmogorov_gap`].
pub const MAX_JOINT_DIM: usize = 3;

/// `sup |F_{X,Y}(t, t̄) − F_X(t) F_Y(t̄)|` with `F_X` analytic and the joint
/// and `Y` CDFs empirical, evaluated at every observed `t` (both one-sided
/// limits) and every observed `t̄`, plus `t̄ = +∞`.
///
/// `ys` holds one column per coordinate of the `Y` vector.
pub fn joint_kolmogorov_gap(
    xs: &[f64],
    ys: &[&[f64]],
    marginal_cdf_x: &dyn Fn(f64) -> f64,
) -> Result<f64> {
    let d = ys.len();
    if d == 0 || d > MAX_JOINT_DIM {
        return Err(Error::domain(format!(
            "joint gap supports 1..={MAX_JOINT_DIM} coordinates, got {d}"
        )));
    }
    let m = xs.len();
    if m < 2 {
        return Err(Error::domain("need at least two joint samples"));
    }
    for col in ys {
        if col.len() != m {
            return Err(Error::LengthMismatch {
                left: m,
                right: col.len(),
            });
        }
        check_finite(col)?;
    }
    check_finite(xs)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    // tie groups in x: [start, end) over `order`, with the analytic CDF value
    let mut groups = Vec::new();
    let mut s = 0;
    while s < m {
        let mut e = s + 1;
        while e < m && xs[order[e]] == xs[order[s]] {
            e += 1;
        }
        groups.push((s, e, marginal_cdf_x(xs[order[s]])));
        s = e;
    }
    let mf = m as f64;
    let mut member = vec![false; m];
    let mut gap: f64 = 0.0;
    for b in 0..=m {
        let count = if b == m {
            member.iter_mut().for_each(|x| *x = true);
            m
        } else {
            let mut count = 0;
            for k in 0..m {
                let inside = ys.iter().all(|col| col[k] <= col[b]);
                member[k] = inside;
                count += inside as usize;
            }
            count
        };
        let fy = count as f64 / mf;
        let mut cum = 0usize;
        for &(start, end, fx) in &groups {
            let before = cum as f64 / mf;
            for &k in &order[start..end] {
                cum += member[k] as usize;
            }
            let after = cum as f64 / mf;
            let prod = fx * fy;
            gap = gap.max((before - prod).abs()).max((after - prod).abs());
        }
    }
    Ok(gap.min(1.0))
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample mean with its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    let n = xs.len() as f64;
    let ss: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&ss) / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Unbiased sample variance with the standard error
/// `√((μ₄ − μ₂²)/M)` from the central moments.
pub fn variance_se(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    let n = xs.len() as f64;
    let c2: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let c4: Vec<f64> = c2.iter().map(|v| v * v).collect();
    let mu2 = pairwise_sum(&c2) / n;
    let mu4 = pairwise_sum(&c4) / n;
    (mu2 * n / (n - 1.0), ((mu4 - mu2 * mu2).max(0.0) / n).sqrt())
}

/// Sample skewness `μ₃ / μ₂^{3/2}`.
pub fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let c2: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
    let c3: Vec<f64> = xs.iter().map(|x| (x - m).powi(3)).collect();
    let mu2 = pairwise_sum(&c2) / n;
    let mu3 = pairwise_sum(&c3) / n;
    mu3 / mu2.powf(1.5)
}

/// Empirical CDF `#{x ≤ t}/M` on sorted data.
pub fn ecdf_sorted(sorted: &[f64], t: f64) -> f64 {
    sorted.partition_point(|&x| x <= t) as f64 / sorted.len() as f64
}

/// Bootstrap standard error of `stat` with `resamples` resamples drawn from
/// a fixed seed.
pub fn bootstrap_se(
    xs: &[f64],
    resamples: usize,
    seed: u64,
    stat: impl Fn(&[f64]) -> f64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; xs.len()];
    let values: Vec<f64> = (0..resamples)
        .map(|_| {
            for v in buf.iter_mut() {
                *v = xs[rng.random_range(0..xs.len())];
            }
            stat(&buf)
        })
        .collect();
    variance_se(&values).0.sqrt()
}
