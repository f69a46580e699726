//! Double-well potential `dV = -rho V (V^2 - mu) ds + sigma dW`, `X = V / sigma`.

use crate::error::{Error, Result};
use crate::model::{Diffusion, EaClass, Region};

const NAMES: [&str; 3] = ["rho", "mu", "sigma"];
const POSITIVE: [bool; 3] = [true, true, true];
const DIFFUSION: [usize; 1] = [2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DwellParams {
    pub rho: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl DwellParams {
    pub fn from_slice(theta: &[f64]) -> Self {
        Self {
            rho: theta[0],
            mu: theta[1],
            sigma: theta[2],
        }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.rho, self.mu, self.sigma]
    }
}

/// `(|alpha|^2 + H'') / 2` at transformed state `u`.
pub fn psi_poly(p: DwellParams, u: f64) -> f64 {
    let DwellParams { rho, mu, sigma } = p;
    let s2 = sigma * sigma;
    let u2 = u * u;
    0.5 * rho * (((rho * s2 * s2 * u2 - 2.0 * rho * mu * s2) * u2 + (rho * mu * mu - 3.0 * s2)) * u2 + mu)
}

/// Squared location of the minimiser of `psi`.
pub fn minimiser_sq(p: DwellParams) -> f64 {
    let DwellParams { rho, mu, sigma } = p;
    (2.0 * rho * mu + (rho * (rho * mu * mu + 9.0 * sigma * sigma)).sqrt()) / (3.0 * rho * sigma * sigma)
}

pub fn lower(p: DwellParams) -> f64 {
    psi_poly(p, minimiser_sq(p).sqrt()).min(psi_poly(p, 0.0))
}

/// Even convex majorant of `psi`.
pub fn g(p: DwellParams, u: f64) -> f64 {
    let DwellParams { rho, mu, sigma } = p;
    let s2 = sigma * sigma;
    let u2 = u * u;
    0.5 * rho * (rho * s2 * s2 * u2 * u2 * u2 + rho * mu * mu * u2 + mu)
}

/// Numerical minimum of `psi` over `u >= 0`, independent of the closed form.
pub fn numeric_lower(p: DwellParams) -> f64 {
    let f = |w: f64| psi_poly(p, w.max(0.0).sqrt());
    let hi = 4.0 * (p.mu / (p.sigma * p.sigma)).max(1.0) + 10.0;
    super::poly::scan_minimise(f, 0.0, hi, 4000)
}

/// `log int exp(-a (v^2 - mu)^2) dv` with `a = rho / (2 sigma^2)`, by
/// composite Simpson over the half line where the integrand is not negligible.
pub fn log_stationary_norm(p: DwellParams) -> f64 {
    const N: usize = 4000;
    let a = p.rho / (2.0 * p.sigma * p.sigma);
    let f = |v: f64| (-a * (v * v - p.mu).powi(2)).exp();
    let reach = (p.mu.max(0.0) + (60.0 / a).sqrt()).sqrt();
    let h = reach / N as f64;
    let inner: f64 = (1..N)
        .map(|k| f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (2.0 * h / 3.0 * (f(0.0) + inner + f(reach))).ln()
}

#[derive(Debug, Default)]
pub struct Dwell;

impl Diffusion for Dwell {
    fn name(&self) -> &str {
        "dwell"
    }
    fn dim(&self) -> usize {
        1
    }
    fn param_names(&self) -> &[&'static str] {
        &NAMES
    }
    fn diffusion_indices(&self) -> &[usize] {
        &DIFFUSION
    }
    fn positive(&self) -> &[bool] {
        &POSITIVE
    }
    fn ea_class(&self) -> EaClass {
        EaClass::Ea3
    }

    fn eta(&self, v: &[f64], theta: &[f64], x: &mut [f64]) {
        x[0] = v[0] / theta[2];
    }
    fn eta_inv(&self, x: &[f64], theta: &[f64], v: &mut [f64]) {
        v[0] = x[0] * theta[2];
    }
    fn log_jac(&self, _v: &[f64], theta: &[f64]) -> f64 {
        -theta[2].ln()
    }

    fn alpha(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        let p = DwellParams::from_slice(theta);
        out[0] = -p.rho * x[0] * (p.sigma * p.sigma * x[0] * x[0] - p.mu);
    }

    fn potential(&self, x: &[f64], theta: &[f64]) -> f64 {
        let p = DwellParams::from_slice(theta);
        let x2 = x[0] * x[0];
        -p.rho * (p.sigma * p.sigma * x2 * x2 / 4.0 - p.mu * x2 / 2.0)
    }

    fn laplacian(&self, x: &[f64], theta: &[f64]) -> Option<f64> {
        let p = DwellParams::from_slice(theta);
        Some(-p.rho * (3.0 * p.sigma * p.sigma * x[0] * x[0] - p.mu))
    }

    fn lower_bound(&self, theta: &[f64]) -> f64 {
        lower(DwellParams::from_slice(theta))
    }

    fn rate(&self, region: Region<'_>, theta: &[f64]) -> Result<f64> {
        let Region::Box { lo, hi } = region else {
            return Err(Error::Precondition("dwell needs a layer box for its rate".into()));
        };
        let p = DwellParams::from_slice(theta);
        Ok(g(p, lo[0]).max(g(p, hi[0])) - lower(p))
    }

    fn sde_drift(&self, v: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = -theta[0] * v[0] * (v[0] * v[0] - theta[1]);
    }
    fn sde_diffusion(&self, _v: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = theta[2];
    }

    fn log_stationary(&self, v: &[f64], theta: &[f64]) -> Option<f64> {
        let p = DwellParams::from_slice(theta);
        let a = p.rho / (2.0 * p.sigma * p.sigma);
        Some(-a * (v[0] * v[0] - p.mu).powi(2) - log_stationary_norm(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::phi;

    const P: DwellParams = DwellParams {
        rho: 0.1,
        mu: 2.0,
        sigma: 0.5,
    };

    #[test]
    fn reference_values() {
        assert!((minimiser_sq(P) - 12.197087).abs() < 1e-6);
        assert!((lower(P) + 0.29024755).abs() < 1e-8);
        let h = 0.5f64.sqrt();
        let r = Dwell
            .rate(Region::Box { lo: &[-h], hi: &[h] }, &P.to_vec())
            .unwrap();
        assert!((r - 0.40028662).abs() < 1e-8);
    }

    #[test]
    fn phi_vanishes_at_minimiser() {
        let u = minimiser_sq(P).sqrt();
        assert!(phi(&Dwell, &[u], &P.to_vec()).unwrap().abs() < 1e-14);
    }

    #[test]
    fn closed_form_agrees_with_numeric_minimum() {
        for &(rho, mu, sigma) in &[(0.1, 2.0, 0.5), (1.3, 0.2, 2.0), (0.05, 5.0, 0.1)] {
            let p = DwellParams { rho, mu, sigma };
            assert!((lower(p) - numeric_lower(p)).abs() < 1e-8 * lower(p).abs().max(1.0));
        }
    }

    /// `exp(-rho (v^2 - mu)^2 / (2 sigma^2))`, the unnormalised stationary density.
    fn kernel(theta: &[f64], v: f64) -> f64 {
        (-theta[0] / (2.0 * theta[2] * theta[2]) * (v * v - theta[1]).powi(2)).exp()
    }

    #[test]
    fn stationary_density_is_normalised() {
        for &(rho, mu, sigma) in &[
            (0.1, 2.0, 0.5),
            (1.0, 1.0, 1.0),
            (0.08, 2.9, 0.25),
            (2.0, 0.1, 0.3),
        ] {
            let theta = [rho, mu, sigma];
            // Trapezoid on a finer grid over a wider range.
            let (lo, hi, n) = (-12.0, 12.0, 400_000);
            let h = (hi - lo) / n as f64;
            let total: f64 = (0..=n)
                .map(|k| {
                    let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                    w * kernel(&theta, lo + k as f64 * h)
                })
                .sum::<f64>()
                * h;
            let norm = log_stationary_norm(DwellParams::from_slice(&theta));
            assert!(
                (total.ln() - norm).abs() < 1e-8,
                "{theta:?}: {} vs {norm}",
                total.ln()
            );
            let at = Dwell.log_stationary(&[0.7], &theta).unwrap();
            assert!((at - (kernel(&theta, 0.7).ln() - norm)).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_density_matches_long_simulation() {
        use crate::diagnostics::ks_one_sample;
        use crate::models::InitialState;
        use crate::simulate::simulate_dataset;
        let theta = [1.0, 1.0, 1.0];
        let path = simulate_dataset(
            &Dwell,
            &theta,
            4000,
            3.0,
            3000,
            &InitialState::Fixed(vec![0.0]),
            11,
        )
        .unwrap();
        let sample: Vec<f64> = path.values.iter().skip(1).map(|v| v[0]).collect();
        let norm = log_stationary_norm(DwellParams::from_slice(&theta)).exp();
        // Cumulative trapezoid of the density on a fine grid.
        let (lo, n) = (-6.0, 120_000);
        let h = 12.0 / n as f64;
        let dens: Vec<f64> = (0..=n)
            .map(|k| kernel(&theta, lo + k as f64 * h) / norm)
            .collect();
        let mut cdf = vec![0.0; n + 1];
        for k in 1..=n {
            cdf[k] = cdf[k - 1] + 0.5 * h * (dens[k - 1] + dens[k]);
        }
        let (_, p) = ks_one_sample(&sample, |v| {
            cdf[(((v - lo) / h).round().max(0.0) as usize).min(n)]
        });
        assert!(p > 0.01, "p={p}");
    }

    #[test]
    fn psi_poly_matches_definition() {
        let theta = P.to_vec();
        for &u in &[-3.0, -0.2, 0.0, 1.1, 4.0] {
            let mut a = [0.0];
            Dwell.alpha(&[u], &theta, &mut a);
            let direct = 0.5 * (a[0] * a[0] + Dwell.laplacian(&[u], &theta).unwrap());
            assert!((direct - psi_poly(P, u)).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }
}
