//! Priors and the Metropolis-Hastings random walk on transformed parameters.
//!
//! Positive parameters move on the log scale; the others move freely. The
//! walk adapts its covariance and global scale during burn-in only.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{precondition, Error, Result};
use crate::model::Diffusion;

#[derive(Clone, Debug, PartialEq)]
pub enum Prior {
    Flat,
    /// Density proportional to `1/x` on `x > 0`.
    Jeffreys,
    Exponential {
        rate: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Inverse gamma with the given shape and scale placed on `x^2`.
    InvGammaOnSquare {
        shape: f64,
        scale: f64,
    },
}

impl Prior {
    /// Log density up to an additive constant.
    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            Prior::Flat => 0.0,
            Prior::Jeffreys => {
                if x > 0.0 {
                    -x.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior::Exponential { rate } => {
                if x >= 0.0 {
                    -rate * x
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior::Normal { mean, sd } => -0.5 * ((x - mean) / sd).powi(2),
            Prior::InvGammaOnSquare { shape, scale } => {
                if x > 0.0 {
                    -(2.0 * shape + 1.0) * x.ln() - scale / (x * x)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Parses `flat`, `jeffreys`, `exp:RATE`, `normal:MEAN:SD`, `invgamma:SHAPE:SCALE`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::Config(format!("prior '{s}' is missing an argument")))?
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("prior '{s}' has a non-numeric argument")))
        };
        let prior = match parts[0] {
            "flat" => Prior::Flat,
            "jeffreys" => Prior::Jeffreys,
            "exp" => Prior::Exponential { rate: num(1)? },
            "normal" => Prior::Normal {
                mean: num(1)?,
                sd: num(2)?,
            },
            "invgamma" => Prior::InvGammaOnSquare {
                shape: num(1)?,
                scale: num(2)?,
            },
            other => return Err(Error::Config(format!("unknown prior '{other}'"))),
        };
        Ok(prior)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Priors(pub Vec<Prior>);

impl Priors {
    /// Flat on drift parameters, `1/x` on the diffusion parameters.
    pub fn default_for(model: &dyn Diffusion) -> Self {
        let p = model.param_names().len();
        Priors(
            (0..p)
                .map(|k| {
                    if model.diffusion_indices().contains(&k) && model.positive()[k] {
                        Prior::Jeffreys
                    } else {
                        Prior::Flat
                    }
                })
                .collect(),
        )
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        self.0.iter().zip(theta).map(|(p, &x)| p.log_density(x)).sum()
    }
}

/// Box the chain must stay inside; leaving it signals an improper posterior drift.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn wide(positive: &[bool]) -> Self {
        Self {
            lo: positive.iter().map(|&p| if p { 1e-8 } else { -1e8 }).collect(),
            hi: vec![1e8; positive.len()],
        }
    }

    pub fn check(&self, theta: &[f64]) -> Result<()> {
        for (k, &x) in theta.iter().enumerate() {
            if !(x >= self.lo[k] && x <= self.hi[k]) {
                return Err(Error::Improper(format!(
                    "parameter {k} = {x} left the admissible box [{}, {}]",
                    self.lo[k], self.hi[k]
                )));
            }
        }
        Ok(())
    }
}

pub const TARGET_ACCEPTANCE: f64 = 0.25;
const COV_START: usize = 500;
const COV_EVERY: usize = 250;

#[derive(Clone, Debug)]
pub struct RandomWalk {
    positive: Vec<bool>,
    free: Vec<bool>,
    chol: DMatrix<f64>,
    log_scale: f64,
    adapted: usize,
    history: Vec<DVector<f64>>,
}

impl RandomWalk {
    pub fn new(positive: &[bool], scales: &[f64]) -> Result<Self> {
        if positive.len() != scales.len() {
            return precondition("proposal scales do not match the parameter count");
        }
        if scales.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return precondition("proposal scales must be finite and non-negative");
        }
        Ok(Self {
            positive: positive.to_vec(),
            free: scales.iter().map(|&s| s > 0.0).collect(),
            chol: DMatrix::from_diagonal(&DVector::from_column_slice(scales)),
            log_scale: 0.0,
            adapted: 0,
            history: vec![],
        })
    }

    pub fn to_z(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            theta.len(),
            theta
                .iter()
                .zip(&self.positive)
                .map(|(&x, &p)| if p { x.ln() } else { x }),
        )
    }

    pub fn from_z(&self, z: &DVector<f64>) -> Vec<f64> {
        z.iter()
            .zip(&self.positive)
            .map(|(&x, &p)| if p { x.exp() } else { x })
            .collect()
    }

    /// Log Jacobian of the map from transformed to natural parameters.
    pub fn log_jacobian(&self, theta: &[f64]) -> f64 {
        theta
            .iter()
            .zip(&self.positive)
            .filter(|(_, &p)| p)
            .map(|(&x, _)| x.ln())
            .sum()
    }

    pub fn propose<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Vec<f64> {
        let p = theta.len();
        let e = DVector::from_iterator(p, (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let step = &self.chol * e * self.log_scale.exp();
        let mut z = self.to_z(theta);
        for k in 0..p {
            if self.free[k] {
                z[k] += step[k];
            }
        }
        let mut out = self.from_z(&z);
        for k in 0..p {
            if !self.free[k] {
                out[k] = theta[k];
            }
        }
        out
    }

    /// Burn-in adaptation after one MH step that ended at `theta`. The global
    /// scale always adapts; the proposal shape is re-estimated from the latter
    /// half of the history only while `covariance` is set.
    pub fn adapt(&mut self, accepted: bool, theta: &[f64], covariance: bool) {
        self.adapted += 1;
        let gain = (self.adapted as f64 + 1.0).powf(-0.6);
        let a = if accepted { 1.0 } else { 0.0 };
        self.log_scale += gain * (a - TARGET_ACCEPTANCE) * 2.0;
        self.log_scale = self.log_scale.clamp(-20.0, 10.0);
        self.history.push(self.to_z(theta));
        let seen = self.history.len();
        if covariance && seen >= COV_START && seen.is_multiple_of(COV_EVERY) {
            self.refresh_covariance();
        }
    }

    /// Whether burn-in iteration `it` of `burnin` may still reshape the proposal.
    pub fn shape_phase(it: usize, burnin: usize) -> bool {
        it < burnin * 3 / 4
    }

    fn refresh_covariance(&mut self) {
        let p = self.positive.len();
        let free: Vec<usize> = (0..p).filter(|&k| self.free[k]).collect();
        if free.is_empty() {
            return;
        }
        let window = &self.history[self.history.len() / 2..];
        let n = window.len() as f64;
        let m = window.iter().fold(DVector::zeros(p), |acc, z| acc + z) / n;
        let cov = window.iter().fold(DMatrix::zeros(p, p), |acc, z| {
            acc + (z - &m) * (z - &m).transpose()
        }) / n;
        let q = free.len();
        let mut sub = DMatrix::zeros(q, q);
        for (i, &a) in free.iter().enumerate() {
            for (j, &b) in free.iter().enumerate() {
                sub[(i, j)] = cov[(a, b)];
            }
            sub[(i, i)] += 1e-10 * cov[(a, a)].abs().max(1e-12);
        }
        let factor = 2.38 * 2.38 / q as f64;
        if let Some(ch) = (sub * factor).cholesky() {
            let l = ch.l();
            let mut chol = DMatrix::zeros(p, p);
            for (i, &a) in free.iter().enumerate() {
                for (j, &b) in free.iter().enumerate() {
                    chol[(a, b)] = l[(i, j)];
                }
            }
            if chol.iter().all(|x| x.is_finite()) {
                self.chol = chol;
                self.log_scale = 0.0;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MhResult {
    pub accepted: bool,
    /// Target at the state the step ended in.
    pub log_target: f64,
    /// The proposal's target was NaN or infinite and was rejected outright.
    pub nonfinite: bool,
}

/// One MH step on `theta` with a precomputed proposal; `current` is the target at `theta`.
/// The target is on natural parameters; the Jacobian of the transform is added here.
pub fn mh_accept<R: Rng + ?Sized>(
    walk: &RandomWalk,
    theta: &mut Vec<f64>,
    current: f64,
    proposal: Vec<f64>,
    proposed_target: f64,
    rng: &mut R,
) -> MhResult {
    if proposed_target.is_nan() || proposed_target == f64::INFINITY {
        return MhResult {
            accepted: false,
            log_target: current,
            nonfinite: true,
        };
    }
    let log_ratio = proposed_target + walk.log_jacobian(&proposal) - current - walk.log_jacobian(theta);
    let u: f64 = rng.random();
    if log_ratio >= 0.0 || u.ln() < log_ratio {
        *theta = proposal;
        MhResult {
            accepted: true,
            log_target: proposed_target,
            nonfinite: false,
        }
    } else {
        MhResult {
            accepted: false,
            log_target: current,
            nonfinite: false,
        }
    }
}
