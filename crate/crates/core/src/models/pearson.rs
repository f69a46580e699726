//! Pearson diffusion `dV = -rho (V - mu) ds + sigma sqrt(1 + V^2) dW`.
//!
//! Transformed by `X = asinh(V) / sigma`. Globally bounded `phi`, so EA1.

use crate::error::{Error, Result};
use crate::model::{Diffusion, EaClass, Region};

const NAMES: [&str; 3] = ["rho", "mu", "sigma"];
const POSITIVE: [bool; 3] = [true, false, true];
const DIFFUSION: [usize; 1] = [2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PearsonParams {
    pub rho: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl PearsonParams {
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

/// `ln cosh z` without overflow.
pub(crate) fn ln_cosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

#[derive(Debug, Default)]
pub struct Pearson;

pub fn lower(p: PearsonParams) -> f64 {
    -0.5 * (p.rho + 0.5 * p.sigma * p.sigma + 0.5 * p.rho * p.mu.abs())
}

/// Global bound of `phi`. `|mu|` keeps the bound valid for negative means.
pub fn global_rate(p: PearsonParams) -> f64 {
    let PearsonParams { rho, mu, sigma } = p;
    let m = mu.abs();
    let s2 = sigma * sigma;
    (rho * (6.0 * m + 8.0) + 3.0 * s2 + 4.0 * rho * rho / s2 * (mu * mu + m + 1.0)) / 8.0
}

impl Diffusion for Pearson {
    fn name(&self) -> &str {
        "pearson"
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
        EaClass::Ea1
    }

    fn eta(&self, v: &[f64], theta: &[f64], x: &mut [f64]) {
        x[0] = v[0].asinh() / theta[2];
    }

    fn eta_inv(&self, x: &[f64], theta: &[f64], v: &mut [f64]) {
        v[0] = (theta[2] * x[0]).sinh();
    }

    fn log_jac(&self, v: &[f64], theta: &[f64]) -> f64 {
        -theta[2].ln() - 0.5 * v[0].mul_add(v[0], 1.0).ln()
    }

    fn alpha(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        let p = PearsonParams::from_slice(theta);
        let z = p.sigma * x[0];
        out[0] = -(p.rho / p.sigma + 0.5 * p.sigma) * z.tanh() + p.rho * p.mu / (p.sigma * z.cosh());
    }

    fn potential(&self, x: &[f64], theta: &[f64]) -> f64 {
        let p = PearsonParams::from_slice(theta);
        let z = p.sigma * x[0];
        let s2 = p.sigma * p.sigma;
        -(p.rho / s2 + 0.5) * ln_cosh(z) + p.rho * p.mu / s2 * z.sinh().atan()
    }

    fn laplacian(&self, x: &[f64], theta: &[f64]) -> Option<f64> {
        let p = PearsonParams::from_slice(theta);
        let z = p.sigma * x[0];
        let sech = 1.0 / z.cosh();
        Some(-(p.rho + 0.5 * p.sigma * p.sigma) * sech * sech - p.rho * p.mu * z.tanh() * sech)
    }

    fn lower_bound(&self, theta: &[f64]) -> f64 {
        lower(PearsonParams::from_slice(theta))
    }

    fn rate(&self, _region: Region<'_>, theta: &[f64]) -> Result<f64> {
        let r = global_rate(PearsonParams::from_slice(theta));
        if r.is_finite() {
            Ok(r)
        } else {
            Err(Error::ModelEvaluation {
                what: "rate",
                u: vec![],
                theta: theta.to_vec(),
            })
        }
    }

    fn sde_drift(&self, v: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = -theta[0] * (v[0] - theta[1]);
    }

    fn sde_diffusion(&self, v: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = theta[2] * v[0].mul_add(v[0], 1.0).sqrt();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{phi, psi};

    const THETA: [f64; 3] = [0.5, 1.0, 0.5];

    #[test]
    fn reference_values() {
        let m = Pearson;
        assert!((m.lower_bound(&THETA) + 0.4375).abs() < 1e-15);
        assert!((m.rate(Region::Global, &THETA).unwrap() - 2.46875).abs() < 1e-14);
        assert!((phi(&m, &[0.0], &THETA).unwrap() - 0.625).abs() < 1e-14);
    }

    #[test]
    fn zero_mean_rate_simplifies() {
        let p = PearsonParams {
            rho: 0.7,
            mu: 0.0,
            sigma: 0.3,
        };
        let expect = (8.0 * 0.7 + 3.0 * 0.09 + 4.0 * 0.49 / 0.09) / 8.0;
        assert!((global_rate(p) - expect).abs() < 1e-13);
    }

    #[test]
    fn ln_cosh_is_stable() {
        assert!((ln_cosh(0.3) - 0.3f64.cosh().ln()).abs() < 1e-15);
        assert!((ln_cosh(800.0) - (800.0 - std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn transform_matches_ito() {
        // Ito on asinh(V)/sigma: drift b/(sigma s) - s'/2 with s = sigma sqrt(1+v^2).
        let m = Pearson;
        for &v in &[-3.0, -0.4, 0.0, 0.9, 5.0] {
            let (rho, mu, sigma) = (THETA[0], THETA[1], THETA[2]);
            let s = (1.0f64 + v * v).sqrt();
            let ito = -rho * (v - mu) / (sigma * sigma * s) * sigma - 0.5 * sigma * v / s;
            let mut x = [0.0];
            m.eta(&[v], &THETA, &mut x);
            let mut a = [0.0];
            m.alpha(&x, &THETA, &mut a);
            assert!((a[0] - ito).abs() < 1e-12, "v={v}: {} vs {}", a[0], ito);
        }
    }

    #[test]
    fn psi_at_origin() {
        let m = Pearson;
        let expect = 0.5 * ((0.5f64 * 1.0 / 0.5).powi(2) - (0.5 + 0.125));
        assert!((psi(&m, &[0.0], &THETA) - expect).abs() < 1e-15);
    }
}
