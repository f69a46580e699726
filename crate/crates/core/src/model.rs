//! The unit-diffusion model abstraction consumed by every sampler.
//!
//! A model describes a diffusion `dV = b(V) ds + s(V) dW` together with a
//! transform `X = eta(V)` under which `dX = alpha(X) ds + dW` and
//! `alpha = grad H`. The Poisson thinning intensity is
//! `phi(u) = (|alpha(u)|^2 + lap H(u)) / 2 - l(theta) >= 0`.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};

/// Largest state dimension handled with stack buffers.
pub const MAX_STACK_DIM: usize = 8;

/// Finite-difference step used when a model has no analytic Laplacian.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EaClass {
    /// `phi` bounded above globally.
    Ea1,
    /// Rate depends on a layer box around the bridge.
    Ea3,
}

/// Region over which a Poisson rate must dominate `phi`.
#[derive(Clone, Copy, Debug)]
pub enum Region<'a> {
    Global,
    Box { lo: &'a [f64], hi: &'a [f64] },
}

pub trait Diffusion: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn param_names(&self) -> &[&'static str];

    /// Indices of the diffusion block of theta (the only entries eta may use).
    fn diffusion_indices(&self) -> &[usize];

    /// Which parameters are constrained positive.
    fn positive(&self) -> &[bool];

    fn ea_class(&self) -> EaClass;

    fn check_params(&self, theta: &[f64]) -> Result<()> {
        check_positive(self.param_names(), self.positive(), theta)
    }

    /// Admissible-domain predicate for original-scale states.
    fn admissible(&self, _v: &[f64]) -> bool {
        true
    }

    fn eta(&self, v: &[f64], theta: &[f64], x: &mut [f64]);
    fn eta_inv(&self, x: &[f64], theta: &[f64], v: &mut [f64]);

    /// `log D(v)` with `D = |det s(v)|^-1`.
    fn log_jac(&self, v: &[f64], theta: &[f64]) -> f64;

    fn alpha(&self, x: &[f64], theta: &[f64], out: &mut [f64]);
    fn potential(&self, x: &[f64], theta: &[f64]) -> f64;

    /// Analytic Laplacian of `H`, if available.
    fn laplacian(&self, _x: &[f64], _theta: &[f64]) -> Option<f64> {
        None
    }

    fn lower_bound(&self, theta: &[f64]) -> f64;

    /// Upper bound of `phi` over `region`.
    fn rate(&self, region: Region<'_>, theta: &[f64]) -> Result<f64>;

    /// Drift of the original-scale SDE.
    fn sde_drift(&self, v: &[f64], theta: &[f64], out: &mut [f64]);

    /// Diagonal of the original-scale diffusion coefficient.
    fn sde_diffusion(&self, v: &[f64], theta: &[f64], out: &mut [f64]);

    /// Normalised log density of the stationary law at original-scale `v`,
    /// for models that have one in closed form up to a computable constant.
    fn log_stationary(&self, _v: &[f64], _theta: &[f64]) -> Option<f64> {
        None
    }
}

pub type ModelSpec = Arc<dyn Diffusion>;

pub(crate) fn check_positive(names: &[&str], positive: &[bool], theta: &[f64]) -> Result<()> {
    if theta.len() != names.len() {
        return Err(Error::InvalidParams(format!(
            "expected {} parameters, got {}",
            names.len(),
            theta.len()
        )));
    }
    for ((name, &pos), &value) in names.iter().zip(positive).zip(theta) {
        if !value.is_finite() {
            return Err(Error::InvalidParams(format!("{name} is not finite")));
        }
        if pos && value <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "{name} must be positive, got {value}"
            )));
        }
    }
    Ok(())
}

pub fn lamperti_forward(model: &dyn Diffusion, v: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
    if v.len() != model.dim() {
        return Err(Error::Precondition(format!(
            "state has dimension {}, model expects {}",
            v.len(),
            model.dim()
        )));
    }
    if !model.admissible(v) || v.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain(format!(
            "state {v:?} not admissible for {}",
            model.name()
        )));
    }
    let mut x = vec![0.0; v.len()];
    model.eta(v, theta, &mut x);
    Ok(x)
}

pub fn lamperti_inverse(model: &dyn Diffusion, x: &[f64], theta: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; x.len()];
    model.eta_inv(x, theta, &mut v);
    v
}

fn laplacian_fd(model: &dyn Diffusion, x: &[f64], theta: &[f64]) -> f64 {
    let d = x.len();
    let mut buf = [0.0; MAX_STACK_DIM];
    let mut heap;
    let y: &mut [f64] = if d <= MAX_STACK_DIM {
        &mut buf[..d]
    } else {
        heap = vec![0.0; d];
        &mut heap
    };
    y.copy_from_slice(x);
    let mut a_plus = vec![0.0; d];
    let mut a_minus = vec![0.0; d];
    let mut total = 0.0;
    for c in 0..d {
        y[c] = x[c] + FD_STEP;
        model.alpha(y, theta, &mut a_plus);
        y[c] = x[c] - FD_STEP;
        model.alpha(y, theta, &mut a_minus);
        y[c] = x[c];
        total += (a_plus[c] - a_minus[c]) / (2.0 * FD_STEP);
    }
    total
}

/// `(|alpha|^2 + lap H) / 2`, before subtracting the lower bound.
pub fn psi(model: &dyn Diffusion, x: &[f64], theta: &[f64]) -> f64 {
    let d = x.len();
    let sq = if d <= MAX_STACK_DIM {
        let mut a = [0.0; MAX_STACK_DIM];
        model.alpha(x, theta, &mut a[..d]);
        a[..d].iter().map(|c| c * c).sum::<f64>()
    } else {
        let mut a = vec![0.0; d];
        model.alpha(x, theta, &mut a);
        a.iter().map(|c| c * c).sum::<f64>()
    };
    let lap = model
        .laplacian(x, theta)
        .unwrap_or_else(|| laplacian_fd(model, x, theta));
    0.5 * (sq + lap)
}

/// `phi` given a precomputed lower bound.
#[inline]
pub fn phi_with(model: &dyn Diffusion, x: &[f64], theta: &[f64], l: f64) -> f64 {
    psi(model, x, theta) - l
}

pub fn phi(model: &dyn Diffusion, x: &[f64], theta: &[f64]) -> Result<f64> {
    let value = phi_with(model, x, theta, model.lower_bound(theta));
    if !value.is_finite() {
        return Err(Error::ModelEvaluation {
            what: "phi",
            u: x.to_vec(),
            theta: theta.to_vec(),
        });
    }
    Ok(value)
}

pub fn lower_bound(model: &dyn Diffusion, theta: &[f64]) -> f64 {
    model.lower_bound(theta)
}

pub fn rate(model: &dyn Diffusion, region: Region<'_>, theta: &[f64]) -> Result<f64> {
    let r = model.rate(region, theta)?;
    if !r.is_finite() || r < 0.0 {
        return Err(Error::ModelEvaluation {
            what: "rate",
            u: match region {
                Region::Global => vec![],
                Region::Box { lo, hi } => lo.iter().chain(hi).copied().collect(),
            },
            theta: theta.to_vec(),
        });
    }
    Ok(r)
}

/// Per-theta outcome of [`validate_model`].
#[derive(Clone, Debug)]
pub struct ValidationEntry {
    pub theta: Vec<f64>,
    /// Largest relative discrepancy between `alpha` and a central difference of `H`.
    pub max_grad_discrepancy: f64,
    pub min_phi: f64,
    pub rate_violations: usize,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub model: String,
    pub entries: Vec<ValidationEntry>,
}

impl ValidationReport {
    pub fn passes(&self, grad_tol: f64) -> bool {
        self.entries
            .iter()
            .all(|e| e.rate_violations == 0 && e.min_phi >= -1e-12 && e.max_grad_discrepancy <= grad_tol)
    }
}

/// Relative gradient discrepancy with an absolute floor for near-zero components.
pub fn gradient_discrepancy(model: &dyn Diffusion, x: &[f64], theta: &[f64], step: f64) -> f64 {
    let d = x.len();
    let mut a = vec![0.0; d];
    model.alpha(x, theta, &mut a);
    let mut y = x.to_vec();
    let mut worst: f64 = 0.0;
    for c in 0..d {
        y[c] = x[c] + step;
        let hp = model.potential(&y, theta);
        y[c] = x[c] - step;
        let hm = model.potential(&y, theta);
        y[c] = x[c];
        let fd = (hp - hm) / (2.0 * step);
        let scale = a[c].abs().max(1.0);
        worst = worst.max((fd - a[c]).abs() / scale);
    }
    worst
}

/// Samples states, checks the model's internal consistency at each theta,
/// and reports rather than raises any violations.
///
/// Points are drawn from `sample_box` (per coordinate half-width around 0) in
/// transformed coordinates. For EA1 models the global rate is checked; for
/// EA3 models each point is checked against the rate of a random box that
/// contains it.
pub fn validate_model<R: Rng + ?Sized>(
    model: &dyn Diffusion,
    thetas: &[Vec<f64>],
    samples: usize,
    half_width: f64,
    rng: &mut R,
) -> Result<ValidationReport> {
    if thetas.is_empty() {
        return Err(Error::Precondition("theta grid is empty".into()));
    }
    if samples == 0 {
        return Err(Error::Precondition("sample count must be positive".into()));
    }
    let d = model.dim();
    let mut entries = Vec::with_capacity(thetas.len());
    for theta in thetas {
        let mut entry = ValidationEntry {
            theta: theta.clone(),
            max_grad_discrepancy: 0.0,
            min_phi: f64::INFINITY,
            rate_violations: 0,
            samples,
        };
        let l = model.lower_bound(theta);
        let global = match model.ea_class() {
            EaClass::Ea1 => model.rate(Region::Global, theta).ok(),
            EaClass::Ea3 => None,
        };
        let mut x = vec![0.0; d];
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for k in 0..samples {
            for c in 0..d {
                let a = rng.random_range(-half_width..half_width);
                let b = rng.random_range(-half_width..half_width);
                lo[c] = a.min(b);
                hi[c] = a.max(b);
                x[c] = rng.random_range(lo[c]..=hi[c]);
            }
            let value = phi_with(model, &x, theta, l);
            if !value.is_finite() {
                entry.rate_violations += 1;
                continue;
            }
            entry.min_phi = entry.min_phi.min(value);
            let bound = match model.ea_class() {
                EaClass::Ea1 => global,
                EaClass::Ea3 => model.rate(Region::Box { lo: &lo, hi: &hi }, theta).ok(),
            };
            match bound {
                Some(r) if r.is_finite() && value <= r * (1.0 + 1e-12) + 1e-12 => {}
                _ => entry.rate_violations += 1,
            }
            if k < 1000 {
                entry.max_grad_discrepancy = entry
                    .max_grad_discrepancy
                    .max(gradient_discrepancy(model, &x, theta, FD_STEP));
            }
        }
        entries.push(entry);
    }
    Ok(ValidationReport {
        model: model.name().to_string(),
        entries,
    })
}
