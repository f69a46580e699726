//! Models with known transition laws, used as test oracles.

use crate::error::{Error, Result};
use crate::model::{Diffusion, EaClass, Region};

/// Ornstein-Uhlenbeck `dV = -rho V ds + sigma dW`, `X = V / sigma`.
#[derive(Debug, Default)]
pub struct OrnsteinUhlenbeck;

const OU_NAMES: [&str; 2] = ["rho", "sigma"];
const OU_POSITIVE: [bool; 2] = [true, true];
const SIGMA_AT_1: [usize; 1] = [1];

impl OrnsteinUhlenbeck {
    /// Log transition density of the unit-diffusion process `dX = -rho X ds + dW`.
    pub fn log_transition(rho: f64, x: f64, y: f64, t: f64) -> f64 {
        let mean = x * (-rho * t).exp();
        let var = -(-2.0 * rho * t).exp_m1() / (2.0 * rho);
        -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (y - mean).powi(2) / (2.0 * var)
    }

    /// Mean and variance of the bridge from `(0, x)` to `(t, y)` at time `s`.
    pub fn bridge_moments(rho: f64, x: f64, y: f64, t: f64, s: f64) -> (f64, f64) {
        let sh = |z: f64| z.sinh();
        let denom = sh(rho * t);
        let mean = (x * sh(rho * (t - s)) + y * sh(rho * s)) / denom;
        let var = sh(rho * s) * sh(rho * (t - s)) / (rho * denom);
        (mean, var)
    }
}

impl Diffusion for OrnsteinUhlenbeck {
    fn name(&self) -> &str {
        "ou"
    }
    fn dim(&self) -> usize {
        1
    }
    fn param_names(&self) -> &[&'static str] {
        &OU_NAMES
    }
    fn diffusion_indices(&self) -> &[usize] {
        &SIGMA_AT_1
    }
    fn positive(&self) -> &[bool] {
        &OU_POSITIVE
    }
    fn ea_class(&self) -> EaClass {
        EaClass::Ea3
    }
    fn eta(&self, v: &[f64], theta: &[f64], x: &mut [f64]) {
        x[0] = v[0] / theta[1];
    }
    fn eta_inv(&self, x: &[f64], theta: &[f64], v: &mut [f64]) {
        v[0] = x[0] * theta[1];
    }
    fn log_jac(&self, _v: &[f64], theta: &[f64]) -> f64 {
        -theta[1].ln()
    }
    fn alpha(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = -theta[0] * x[0];
    }
    fn potential(&self, x: &[f64], theta: &[f64]) -> f64 {
        -0.5 * theta[0] * x[0] * x[0]
    }
    fn laplacian(&self, _x: &[f64], theta: &[f64]) -> Option<f64> {
        Some(-theta[0])
    }
    fn lower_bound(&self, theta: &[f64]) -> f64 {
        -0.5 * theta[0]
    }
    fn rate(&self, region: Region<'_>, theta: &[f64]) -> Result<f64> {
        let Region::Box { lo, hi } = region else {
            return Err(Error::Precondition("ou needs a layer box for its rate".into()));
        };
        let m = lo[0].abs().max(hi[0].abs());
        Ok(0.5 * theta[0] * theta[0] * m * m)
    }
    fn sde_drift(&self, v: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = -theta[0] * v[0];
    }
    fn sde_diffusion(&self, _v: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = theta[1];
    }
}

/// Scaled Brownian motion `dV = sigma dW`; `phi` vanishes identically.
#[derive(Debug, Default)]
pub struct ZeroDrift;

const SIGMA_ONLY: [&str; 1] = ["sigma"];
const ONE_POSITIVE: [bool; 1] = [true];
const SIGMA_AT_0: [usize; 1] = [0];

impl Diffusion for ZeroDrift {
    fn name(&self) -> &str {
        "zero-drift"
    }
    fn dim(&self) -> usize {
        1
    }
    fn param_names(&self) -> &[&'static str] {
        &SIGMA_ONLY
    }
    fn diffusion_indices(&self) -> &[usize] {
        &SIGMA_AT_0
    }
    fn positive(&self) -> &[bool] {
        &ONE_POSITIVE
    }
    fn ea_class(&self) -> EaClass {
        EaClass::Ea1
    }
    fn eta(&self, v: &[f64], theta: &[f64], x: &mut [f64]) {
        x[0] = v[0] / theta[0];
    }
    fn eta_inv(&self, x: &[f64], theta: &[f64], v: &mut [f64]) {
        v[0] = x[0] * theta[0];
    }
    fn log_jac(&self, _v: &[f64], theta: &[f64]) -> f64 {
        -theta[0].ln()
    }
    fn alpha(&self, _x: &[f64], _theta: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn potential(&self, _x: &[f64], _theta: &[f64]) -> f64 {
        0.0
    }
    fn laplacian(&self, _x: &[f64], _theta: &[f64]) -> Option<f64> {
        Some(0.0)
    }
    fn lower_bound(&self, _theta: &[f64]) -> f64 {
        0.0
    }
    fn rate(&self, _region: Region<'_>, _theta: &[f64]) -> Result<f64> {
        Ok(0.0)
    }
    fn sde_drift(&self, _v: &[f64], _theta: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn sde_diffusion(&self, _v: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = theta[0];
    }
}

/// Unit diffusion with constant drift `sqrt(2c)` and lower bound 0, so `phi = c`.
#[derive(Debug)]
pub struct ConstantPhi {
    pub c: f64,
}

impl Diffusion for ConstantPhi {
    fn name(&self) -> &str {
        "constant-phi"
    }
    fn dim(&self) -> usize {
        1
    }
    fn param_names(&self) -> &[&'static str] {
        &SIGMA_ONLY
    }
    fn diffusion_indices(&self) -> &[usize] {
        &SIGMA_AT_0
    }
    fn positive(&self) -> &[bool] {
        &ONE_POSITIVE
    }
    fn ea_class(&self) -> EaClass {
        EaClass::Ea1
    }
    fn eta(&self, v: &[f64], theta: &[f64], x: &mut [f64]) {
        x[0] = v[0] / theta[0];
    }
    fn eta_inv(&self, x: &[f64], theta: &[f64], v: &mut [f64]) {
        v[0] = x[0] * theta[0];
    }
    fn log_jac(&self, _v: &[f64], theta: &[f64]) -> f64 {
        -theta[0].ln()
    }
    fn alpha(&self, _x: &[f64], _theta: &[f64], out: &mut [f64]) {
        out[0] = (2.0 * self.c).sqrt();
    }
    fn potential(&self, x: &[f64], _theta: &[f64]) -> f64 {
        (2.0 * self.c).sqrt() * x[0]
    }
    fn laplacian(&self, _x: &[f64], _theta: &[f64]) -> Option<f64> {
        Some(0.0)
    }
    fn lower_bound(&self, _theta: &[f64]) -> f64 {
        0.0
    }
    fn rate(&self, _region: Region<'_>, _theta: &[f64]) -> Result<f64> {
        Ok(self.c)
    }
    fn sde_drift(&self, _v: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = theta[0] * (2.0 * self.c).sqrt();
    }
    fn sde_diffusion(&self, _v: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = theta[0];
    }
}
