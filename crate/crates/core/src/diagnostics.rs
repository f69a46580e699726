//! Output analysis: effective sample size, autocorrelation, Kolmogorov-Smirnov tests.

use rand::Rng;

use crate::rng::{stream, Purpose};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ess {
    pub value: f64,
    /// Set when the series is constant and the ESS is defined as its length.
    pub constant: bool,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation with the `n - 1` denominator.
pub fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < v.len() {
        v[i] * (1.0 - frac) + v[i + 1] * frac
    } else {
        v[i]
    }
}

fn autocov(xs: &[f64], m: f64, lag: usize) -> f64 {
    let n = xs.len();
    let mut s = 0.0;
    for i in 0..n - lag {
        s += (xs[i] - m) * (xs[i + lag] - m);
    }
    s / n as f64
}

/// Autocorrelations at lags `0..=max_lag` with the biased (1/N) normalisation.
pub fn acf(xs: &[f64], max_lag: usize) -> Vec<f64> {
    assert!(max_lag < xs.len(), "max_lag must be below the series length");
    let m = mean(xs);
    let g0 = autocov(xs, m, 0);
    if g0 == 0.0 {
        return (0..=max_lag).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
    }
    (0..=max_lag).map(|k| autocov(xs, m, k) / g0).collect()
}

/// Effective sample size with Geyer's initial positive sequence truncation.
pub fn ess(xs: &[f64]) -> Ess {
    let n = xs.len();
    assert!(n >= 10, "ESS needs at least 10 values");
    let m = mean(xs);
    let g0 = autocov(xs, m, 0);
    if xs.iter().all(|&x| x == xs[0]) {
        return Ess {
            value: n as f64,
            constant: true,
        };
    }
    let mut sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = autocov(xs, m, 2 * k) + autocov(xs, m, 2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        k += 1;
    }
    let tau = (-g0 + 2.0 * sum) / g0;
    Ess {
        value: n as f64 / tau.max(1.0 / n as f64),
        constant: false,
    }
}

/// Standard error of the mean from non-overlapping batch means.
pub fn batch_means_se(xs: &[f64], batches: usize) -> f64 {
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| mean(&xs[b * size..(b + 1) * size]))
        .collect();
    sd(&means) / (batches as f64).sqrt()
}

/// Asymptotic Kolmogorov tail probability `P(K > lambda)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_tail((s + 0.12 + 0.11 / s) * d)
}

/// One-sample KS statistic and asymptotic p-value against `cdf`.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    (d, ks_p(d, n))
}

fn ks_statistic_sorted(a: &[f64], b: &[f64]) -> f64 {
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
    d
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample KS statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    ks_statistic_sorted(&sorted(a), &sorted(b))
}

/// Two-sample KS statistic with its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d = ks_statistic(a, b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    (d, ks_p(d, na * nb / (na + nb)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
}

/// Two-sample KS test with a pooled-resampling bootstrap p-value.
pub fn ks_bootstrap(a: &[f64], b: &[f64], n_boot: usize, seed: u64) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "KS samples must be non-empty");
    assert!(n_boot > 0, "need at least one bootstrap replicate");
    let d = ks_statistic(a, b);
    let pool: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut rng = stream(seed, Purpose::Bootstrap, 0, 0);
    let mut ra = vec![0.0; a.len()];
    let mut rb = vec![0.0; b.len()];
    let mut exceed = 0usize;
    for _ in 0..n_boot {
        for x in ra.iter_mut() {
            *x = pool[rng.random_range(0..pool.len())];
        }
        for x in rb.iter_mut() {
            *x = pool[rng.random_range(0..pool.len())];
        }
        ra.sort_by(f64::total_cmp);
        rb.sort_by(f64::total_cmp);
        if ks_statistic_sorted(&ra, &rb) >= d {
            exceed += 1;
        }
    }
    KsResult {
        d,
        p: exceed as f64 / n_boot as f64,
    }
}

/// Keeps every `step`-th value so that roughly `target` values remain.
pub fn thin_to(xs: &[f64], target: usize) -> Vec<f64> {
    let step = (xs.len() / target.max(1)).max(1);
    xs.iter().step_by(step).copied().collect()
}
