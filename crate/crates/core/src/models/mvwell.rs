//! Bivariate double well `dV = -(sigma^2/2) grad G(V) ds + sigma dW` with
//! `G(v) = rho1 (v2^2 - mu1)^2 + rho2 (v2 - mu2 v1)^2` and `X = V / sigma`.
//!
//! `phi` is a convex quadratic in the first coordinate, so its supremum over a
//! box is attained on one of the two edges `x1 = lo1`, `x1 = hi1`. Along each
//! edge it is a degree-six polynomial in `x2`, maximised exactly from its
//! stationary points.

use super::poly;
use crate::error::{Error, Result};
use crate::model::{Diffusion, EaClass, Region};

const NAMES: [&str; 5] = ["rho1", "mu1", "rho2", "mu2", "sigma"];
const POSITIVE: [bool; 5] = [true; 5];
const DIFFUSION: [usize; 1] = [4];

/// Relative and absolute slack added to the exact box supremum to absorb root-finding error.
const RATE_SLACK: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MvwellParams {
    pub rho1: f64,
    pub mu1: f64,
    pub rho2: f64,
    pub mu2: f64,
    pub sigma: f64,
}

impl MvwellParams {
    pub fn from_slice(t: &[f64]) -> Self {
        Self {
            rho1: t[0],
            mu1: t[1],
            rho2: t[2],
            mu2: t[3],
            sigma: t[4],
        }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.rho1, self.mu1, self.rho2, self.mu2, self.sigma]
    }
}

pub fn potential_g(p: MvwellParams, v: [f64; 2]) -> f64 {
    let a = v[1] * v[1] - p.mu1;
    let b = v[1] - p.mu2 * v[0];
    p.rho1 * a * a + p.rho2 * b * b
}

/// Closed-form infimum of `psi`.
pub fn closed_form_lower(p: MvwellParams) -> f64 {
    let MvwellParams {
        rho1,
        mu1,
        rho2,
        mu2,
        sigma,
    } = p;
    let s2 = sigma * sigma;
    let m2 = mu2 * mu2;
    let p1 = 2.0 * mu2 * s2 * (2.0 * rho1).sqrt() * (9.0 + m2 * (9.0 + 2.0 * rho1 * mu1 * mu1)).powf(1.5);
    let p2 = m2
        * s2
        * (54.0 * rho1 * mu1 * (1.0 + m2) - 8.0 * rho1 * rho1 * mu1.powi(3) * m2
            + 27.0 * rho2 * (1.0 + m2) * (1.0 + m2));
    -(p1 + p2) / (54.0 * m2 * (1.0 + m2))
}

/// `psi` minimised over the first coordinate, as a function of `w = v2^2`.
fn profile(p: MvwellParams, w: f64) -> f64 {
    let MvwellParams {
        rho1,
        mu1,
        rho2,
        mu2,
        sigma,
    } = p;
    let k = 4.0 * rho1 * rho1 * mu2 * mu2 / (1.0 + mu2 * mu2);
    0.5 * sigma
        * sigma
        * (k * w * (w - mu1) * (w - mu1) - (rho2 * mu2 * mu2 + rho2 - 2.0 * rho1 * mu1) - 6.0 * rho1 * w)
}

pub fn lower(p: MvwellParams) -> f64 {
    closed_form_lower(p).min(profile(p, 0.0))
}

/// Numerical infimum of `psi`, independent of the closed form.
pub fn numeric_lower(p: MvwellParams) -> f64 {
    let hi = 4.0 * p.mu1 + 20.0;
    poly::scan_minimise(|w| profile(p, w.max(0.0)), 0.0, hi, 20000)
}

/// `psi` along the edge `v1 = c` as a polynomial in `v2` (original scale).
fn edge_poly(p: MvwellParams, c: f64) -> Vec<f64> {
    let MvwellParams {
        rho1,
        mu1,
        rho2,
        mu2,
        sigma,
    } = p;
    let a1 = [-sigma * rho2 * mu2 * mu2 * c, sigma * rho2 * mu2];
    let a2 = [
        sigma * rho2 * mu2 * c,
        sigma * (2.0 * rho1 * mu1 - rho2),
        0.0,
        -2.0 * sigma * rho1,
    ];
    let lap = [
        -sigma * sigma * (rho2 * mu2 * mu2 + rho2 - 2.0 * rho1 * mu1),
        0.0,
        -6.0 * sigma * sigma * rho1,
    ];
    let mut out = poly::mul(&a1, &a1);
    poly::add_into(&mut out, &poly::mul(&a2, &a2), 1.0);
    poly::add_into(&mut out, &lap, 1.0);
    out.iter_mut().for_each(|c| *c *= 0.5);
    out
}

/// Exact supremum of `psi` over a box in transformed coordinates.
pub fn box_sup_psi(p: MvwellParams, lo: &[f64], hi: &[f64]) -> f64 {
    let s = p.sigma;
    let (l2, h2) = (s * lo[1], s * hi[1]);
    let mut best = f64::NEG_INFINITY;
    for c in [s * lo[0], s * hi[0]] {
        best = best.max(poly::max_on_interval(&edge_poly(p, c), l2, h2));
    }
    best
}

#[derive(Debug, Default)]
pub struct Mvwell;

impl Diffusion for Mvwell {
    fn name(&self) -> &str {
        "mvwell"
    }
    fn dim(&self) -> usize {
        2
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
        x[0] = v[0] / theta[4];
        x[1] = v[1] / theta[4];
    }
    fn eta_inv(&self, x: &[f64], theta: &[f64], v: &mut [f64]) {
        v[0] = x[0] * theta[4];
        v[1] = x[1] * theta[4];
    }
    fn log_jac(&self, _v: &[f64], theta: &[f64]) -> f64 {
        -2.0 * theta[4].ln()
    }

    fn alpha(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        let p = MvwellParams::from_slice(theta);
        let (v1, v2) = (p.sigma * x[0], p.sigma * x[1]);
        let e = v2 - p.mu2 * v1;
        out[0] = p.sigma * p.rho2 * p.mu2 * e;
        out[1] = -p.sigma * (2.0 * p.rho1 * v2 * (v2 * v2 - p.mu1) + p.rho2 * e);
    }

    fn potential(&self, x: &[f64], theta: &[f64]) -> f64 {
        let p = MvwellParams::from_slice(theta);
        -0.5 * potential_g(p, [p.sigma * x[0], p.sigma * x[1]])
    }

    fn laplacian(&self, x: &[f64], theta: &[f64]) -> Option<f64> {
        let p = MvwellParams::from_slice(theta);
        let v2 = p.sigma * x[1];
        let lap_g = 2.0 * p.rho2 * p.mu2 * p.mu2 + 4.0 * p.rho1 * (3.0 * v2 * v2 - p.mu1) + 2.0 * p.rho2;
        Some(-0.5 * p.sigma * p.sigma * lap_g)
    }

    fn lower_bound(&self, theta: &[f64]) -> f64 {
        lower(MvwellParams::from_slice(theta))
    }

    fn rate(&self, region: Region<'_>, theta: &[f64]) -> Result<f64> {
        let Region::Box { lo, hi } = region else {
            return Err(Error::Precondition(
                "mvwell needs a layer box for its rate".into(),
            ));
        };
        let p = MvwellParams::from_slice(theta);
        let r = box_sup_psi(p, lo, hi) - lower(p);
        Ok(r.max(0.0) * (1.0 + RATE_SLACK) + RATE_SLACK)
    }

    fn sde_drift(&self, v: &[f64], theta: &[f64], out: &mut [f64]) {
        let p = MvwellParams::from_slice(theta);
        let e = v[1] - p.mu2 * v[0];
        let g1 = -2.0 * p.rho2 * p.mu2 * e;
        let g2 = 4.0 * p.rho1 * v[1] * (v[1] * v[1] - p.mu1) + 2.0 * p.rho2 * e;
        let k = -0.5 * p.sigma * p.sigma;
        out[0] = k * g1;
        out[1] = k * g2;
    }
    fn sde_diffusion(&self, _v: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = theta[4];
        out[1] = theta[4];
    }
}
