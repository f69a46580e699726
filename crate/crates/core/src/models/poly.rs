//! Small dense-polynomial helpers. Coefficients are stored lowest degree first.

use nalgebra::DMatrix;

pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add_into(acc: &mut Vec<f64>, b: &[f64], scale: f64) {
    if acc.len() < b.len() {
        acc.resize(b.len(), 0.0);
    }
    for (a, &x) in acc.iter_mut().zip(b) {
        *a += scale * x;
    }
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect()
}

/// Real parts of all complex roots, via companion-matrix eigenvalues.
pub fn root_real_parts(c: &[f64]) -> Vec<f64> {
    let mut c = c.to_vec();
    while c.len() > 1 && c.last().is_some_and(|&a| a.abs() <= 1e-300) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    match n {
        0 => vec![],
        1 => vec![-c[0] / c[1]],
        _ => {
            let lead = c[n];
            let mut m = DMatrix::<f64>::zeros(n, n);
            for i in 1..n {
                m[(i, i - 1)] = 1.0;
            }
            for i in 0..n {
                m[(i, n - 1)] = -c[i] / lead;
            }
            m.complex_eigenvalues().iter().map(|z| z.re).collect()
        }
    }
}

/// Maximum of a polynomial over `[lo, hi]` from its endpoints and stationary points.
pub fn max_on_interval(c: &[f64], lo: f64, hi: f64) -> f64 {
    let mut best = eval(c, lo).max(eval(c, hi));
    for r in root_real_parts(&derivative(c)) {
        if r > lo && r < hi {
            best = best.max(eval(c, r));
        }
    }
    best
}

/// Minimises a univariate function by a uniform scan followed by golden-section refinement.
pub fn scan_minimise(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
    let h = (hi - lo) / steps as f64;
    let mut best_k = 0;
    let mut best = f(lo);
    for k in 1..=steps {
        let v = f(lo + k as f64 * h);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let mut a = lo + (best_k as f64 - 1.0).max(0.0) * h;
    let mut b = (lo + (best_k as f64 + 1.0) * h).min(hi);
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    for _ in 0..200 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - gr * (b - a);
        d = a + gr * (b - a);
    }
    best.min(f(0.5 * (a + b)))
}
