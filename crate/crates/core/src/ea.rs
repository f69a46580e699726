//! Exact rejection sampling of pinned diffusion bridges.
//!
//! A proposal is a Brownian bridge pinned at zero on `[0, t]` (with its layer
//! for EA3 models) plus a Poisson process of marked points. Shifted by the
//! linear interpolant between the transformed endpoints `x` and `y`, the
//! bridge is accepted when every point lies above the graph of `phi / R`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::bridge::{self, uniform, Layer, Skeleton, DEFAULT_BRIDGE_CAP};
use crate::error::{precondition, Error, Result};
use crate::model::{phi_with, Diffusion, EaClass, Region, MAX_STACK_DIM};

pub const DEFAULT_MAX_ATTEMPTS: u64 = 10_000_000;

/// Layer unit per unit square-root time: `delta = factor * sqrt(t)`.
pub const DEFAULT_DELTA_FACTOR: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EaConfig {
    pub delta_factor: f64,
    pub max_attempts: u64,
    pub bridge_cap: u64,
}

impl Default for EaConfig {
    fn default() -> Self {
        Self {
            delta_factor: DEFAULT_DELTA_FACTOR,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            bridge_cap: DEFAULT_BRIDGE_CAP,
        }
    }
}

impl EaConfig {
    pub fn delta(&self, t: f64) -> f64 {
        self.delta_factor * t.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_factor > (1.0f64 / 3.0).sqrt()) {
            return precondition(format!(
                "delta factor {} must exceed sqrt(1/3)",
                self.delta_factor
            ));
        }
        if self.max_attempts == 0 || self.bridge_cap == 0 {
            return precondition("attempt caps must be positive");
        }
        Ok(())
    }
}

/// Poisson points on `[0, t]` with uniform marks and, in the noncentred form,
/// heights uniform on `[0, xi_cap]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PoissonMarks {
    pub psi: Vec<f64>,
    pub u: Vec<f64>,
    pub xi: Option<Vec<f64>>,
    pub xi_cap: f64,
}

impl PoissonMarks {
    pub fn kappa(&self) -> usize {
        self.psi.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedInterval {
    pub layer: Option<Layer>,
    /// Pinned bridge revealed at `marks.psi`.
    pub skeleton: Skeleton,
    pub marks: PoissonMarks,
    pub attempts: u64,
}

/// Parameter value and its transformed endpoints that captured heights must cover.
#[derive(Clone, Copy, Debug)]
pub struct StarPoint<'a> {
    pub theta: &'a [f64],
    pub x: &'a [f64],
    pub y: &'a [f64],
}

#[derive(Clone, Copy, Debug)]
pub enum Heights<'a> {
    Off,
    On(Option<StarPoint<'a>>),
}

/// Dominating rate `r + lambda` for an interval with the given layer and endpoints.
pub fn interval_rate(
    model: &dyn Diffusion,
    layer: Option<&Layer>,
    x: &[f64],
    y: &[f64],
    theta: &[f64],
    lambda: f64,
) -> Result<f64> {
    let r = match (model.ea_class(), layer) {
        (EaClass::Ea1, _) => crate::model::rate(model, Region::Global, theta)?,
        (EaClass::Ea3, Some(layer)) => {
            let (lo, hi) = layer.region(x, y);
            crate::model::rate(model, Region::Box { lo: &lo, hi: &hi }, theta)?
        }
        (EaClass::Ea3, None) => {
            return Err(Error::Invariant("EA3 interval carries no layer".into()));
        }
    };
    Ok(r + lambda)
}

/// `tilde + (1 - s/t) x + (s/t) y`.
#[inline]
pub fn shift_point(tilde: &[f64], x: &[f64], y: &[f64], s: f64, t: f64, out: &mut [f64]) {
    let w = s / t;
    for c in 0..tilde.len() {
        out[c] = tilde[c] + (1.0 - w) * x[c] + w * y[c];
    }
}

fn bound_violation(value: f64, rate: f64, u: &[f64], theta: &[f64]) -> Error {
    Error::BoundViolation {
        phi: value,
        rate,
        u: u.to_vec(),
        theta: theta.to_vec(),
    }
}

/// `phi` at a shifted skeleton point, checked against the dominating rate.
#[inline]
fn checked_phi(model: &dyn Diffusion, point: &[f64], theta: &[f64], l: f64, rate: f64) -> Result<f64> {
    let value = phi_with(model, point, theta, l);
    if !value.is_finite() {
        return Err(Error::ModelEvaluation {
            what: "phi",
            u: point.to_vec(),
            theta: theta.to_vec(),
        });
    }
    if value > rate {
        return Err(bound_violation(value, rate, point, theta));
    }
    Ok(value)
}

/// Acceptance indicator of a proposal. Points whose heights exceed the rate
/// are thinned out and do not take part.
#[allow(clippy::too_many_arguments)]
pub fn ea_indicator(
    model: &dyn Diffusion,
    layer: Option<&Layer>,
    skeleton_values: &[f64],
    marks: &PoissonMarks,
    x: &[f64],
    y: &[f64],
    t: f64,
    theta: &[f64],
    lambda: f64,
) -> Result<bool> {
    let d = model.dim();
    if skeleton_values.len() != marks.kappa() * d || marks.u.len() != marks.kappa() {
        return precondition("skeleton and marks disagree in size");
    }
    if marks.kappa() == 0 {
        return Ok(true);
    }
    let rate = interval_rate(model, layer, x, y, theta, lambda)?;
    let l = model.lower_bound(theta);
    let mut buf = [0.0; MAX_STACK_DIM];
    let point = &mut buf[..d];
    for j in 0..marks.kappa() {
        if let Some(xi) = &marks.xi {
            if xi[j] >= rate {
                continue;
            }
        }
        shift_point(&skeleton_values[j * d..(j + 1) * d], x, y, marks.psi[j], t, point);
        let value = checked_phi(model, point, theta, l, rate)?;
        if value / rate >= marks.u[j] {
            return Ok(false);
        }
    }
    Ok(true)
}

fn draw_marks<R: Rng + ?Sized>(mean: f64, t: f64, cap: Option<f64>, rng: &mut R) -> Result<PoissonMarks> {
    let kappa = if mean > 0.0 {
        let pois = Poisson::new(mean).map_err(|e| Error::Numeric(format!("poisson mean {mean}: {e}")))?;
        pois.sample(rng) as usize
    } else {
        0
    };
    let mut psi: Vec<f64> = (0..kappa).map(|_| t * uniform(rng)).collect();
    psi.sort_by(f64::total_cmp);
    let u = (0..kappa).map(|_| uniform(rng)).collect();
    let xi = cap.map(|c| (0..kappa).map(|_| c * uniform(rng)).collect());
    Ok(PoissonMarks {
        psi,
        u,
        xi,
        xi_cap: cap.unwrap_or(0.0),
    })
}

/// Reveals the pinned EA1 proposal left to right, stopping at the first
/// rejecting point. Returns the values when the proposal is accepted.
#[allow(clippy::too_many_arguments)]
fn lazy_ea1<R: Rng + ?Sized>(
    model: &dyn Diffusion,
    marks: &PoissonMarks,
    x: &[f64],
    y: &[f64],
    t: f64,
    theta: &[f64],
    l: f64,
    rate: f64,
    rng: &mut R,
) -> Result<Option<Vec<f64>>> {
    let d = model.dim();
    let mut values = Vec::with_capacity(marks.kappa() * d);
    let mut prev = vec![0.0; d];
    let mut s0 = 0.0;
    let mut point = vec![0.0; d];
    for j in 0..marks.kappa() {
        let s = marks.psi[j];
        for p in prev.iter_mut() {
            *p = bridge::bridge_step(s0, *p, s, t, 0.0, rng);
        }
        s0 = s;
        values.extend_from_slice(&prev);
        let active = marks.xi.as_ref().is_none_or(|xi| xi[j] < rate);
        if active {
            shift_point(&prev, x, y, s, t, &mut point);
            let value = checked_phi(model, &point, theta, l, rate)?;
            if value / rate >= marks.u[j] {
                return Ok(None);
            }
        }
    }
    Ok(Some(values))
}

/// Pinned bridge values at sorted `times`, all coordinates, row-major.
fn reveal<R: Rng + ?Sized>(
    layer: Option<&Layer>,
    times: &[f64],
    d: usize,
    t: f64,
    cap: u64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let zeros = vec![0.0; d];
    match layer {
        Some(layer) => bridge::sample_bridge_given_layer(times, layer, &zeros, &zeros, t, cap, rng),
        None => {
            let mut out = vec![0.0; times.len() * d];
            for c in 0..d {
                let col = bridge::sample_brownian_bridge(times, t, rng)?;
                for (k, v) in col.into_iter().enumerate() {
                    out[k * d + c] = v;
                }
            }
            Ok(out)
        }
    }
}

/// Exact draw of the augmentation of one interval with transformed endpoints `x`, `y`.
#[allow(clippy::too_many_arguments)]
pub fn ea_sample_interval<R: Rng + ?Sized>(
    model: &dyn Diffusion,
    x: &[f64],
    y: &[f64],
    t: f64,
    theta: &[f64],
    lambda: f64,
    heights: Heights<'_>,
    cfg: &EaConfig,
    rng: &mut R,
) -> Result<AugmentedInterval> {
    ea_sample_interval_with(model, x, y, t, theta, lambda, heights, &[], cfg, rng).map(|(a, _)| a)
}

/// As [`ea_sample_interval`], additionally revealing the accepted pinned
/// bridge at `extra_times` (returned row-major, not stored in the skeleton).
#[allow(clippy::too_many_arguments)]
pub fn ea_sample_interval_with<R: Rng + ?Sized>(
    model: &dyn Diffusion,
    x: &[f64],
    y: &[f64],
    t: f64,
    theta: &[f64],
    lambda: f64,
    heights: Heights<'_>,
    extra_times: &[f64],
    cfg: &EaConfig,
    rng: &mut R,
) -> Result<(AugmentedInterval, Vec<f64>)> {
    let d = model.dim();
    if x.len() != d || y.len() != d {
        return precondition("endpoint dimension does not match the model");
    }
    if !(lambda >= 0.0) {
        return precondition(format!("lambda must be non-negative, got {lambda}"));
    }
    bridge::check_times(extra_times, t)?;
    let l = model.lower_bound(theta);
    let delta = cfg.delta(t);
    let zeros = vec![0.0; d];
    for attempt in 1..=cfg.max_attempts {
        let layer = match model.ea_class() {
            EaClass::Ea1 => None,
            EaClass::Ea3 => Some(bridge::sample_layer(&zeros, &zeros, t, delta, rng)?),
        };
        let rate = interval_rate(model, layer.as_ref(), x, y, theta, lambda)?;
        let cap = match heights {
            Heights::Off => None,
            Heights::On(None) => Some(rate),
            Heights::On(Some(star)) => Some(rate.max(interval_rate(
                model,
                layer.as_ref(),
                star.x,
                star.y,
                star.theta,
                lambda,
            )?)),
        };
        let marks = draw_marks(cap.unwrap_or(rate) * t, t, cap, rng)?;

        if layer.is_none() && extra_times.is_empty() {
            if let Some(values) = lazy_ea1(model, &marks, x, y, t, theta, l, rate, rng)? {
                let skeleton = Skeleton {
                    dim: d,
                    times: marks.psi.clone(),
                    values,
                };
                return Ok((
                    AugmentedInterval {
                        layer,
                        skeleton,
                        marks,
                        attempts: attempt,
                    },
                    vec![],
                ));
            }
            continue;
        }

        let (times, from_psi) = merge_times(&marks.psi, extra_times);
        let all = reveal(layer.as_ref(), &times, d, t, cfg.bridge_cap, rng)?;
        let mut values = Vec::with_capacity(marks.kappa() * d);
        let mut extra = Vec::with_capacity(extra_times.len() * d);
        for (k, &is_psi) in from_psi.iter().enumerate() {
            let row = &all[k * d..(k + 1) * d];
            if is_psi {
                values.extend_from_slice(row);
            } else {
                extra.extend_from_slice(row);
            }
        }
        if ea_indicator(model, layer.as_ref(), &values, &marks, x, y, t, theta, lambda)? {
            let skeleton = Skeleton {
                dim: d,
                times: marks.psi.clone(),
                values,
            };
            return Ok((
                AugmentedInterval {
                    layer,
                    skeleton,
                    marks,
                    attempts: attempt,
                },
                extra,
            ));
        }
    }
    Err(Error::ResourceLimit(format!(
        "exact algorithm exceeded {} attempts (acceptance below {:.3e}) for endpoints {x:?} -> {y:?}, t={t}, theta={theta:?}",
        cfg.max_attempts,
        1.0 / cfg.max_attempts as f64
    )))
}

/// Sorted union of two sorted time lists, with a flag marking entries from `a`.
fn merge_times(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut flag = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            flag.push(true);
            i += 1;
        } else {
            out.push(b[j]);
            flag.push(false);
            j += 1;
        }
    }
    (out, flag)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

fn path_integral_phi(
    model: &dyn Diffusion,
    path: &[f64],
    d: usize,
    h: f64,
    stride: usize,
    theta: &[f64],
    l: f64,
) -> f64 {
    let n = path.len() / d - 1;
    let mut total = 0.0;
    let mut k = 0;
    while k < n {
        let a = phi_with(model, &path[k * d..(k + 1) * d], theta, l);
        let b = phi_with(model, &path[(k + stride) * d..(k + stride + 1) * d], theta, l);
        total += 0.5 * (a + b) * h * stride as f64;
        k += stride;
    }
    total
}

fn bridge_grid<R: Rng + ?Sized>(x: &[f64], y: &[f64], t: f64, steps: usize, rng: &mut R) -> Result<Vec<f64>> {
    let d = x.len();
    let h = t / steps as f64;
    let times: Vec<f64> = (1..steps).map(|k| k as f64 * h).collect();
    let mut path = vec![0.0; (steps + 1) * d];
    for c in 0..d {
        path[c] = x[c];
        path[steps * d + c] = y[c];
        let col = bridge::sample_bridge_between(&times, x[c], y[c], t, rng)?;
        for (k, v) in col.into_iter().enumerate() {
            path[(k + 1) * d + c] = v;
        }
    }
    Ok(path)
}

/// Monte Carlo estimate of the EA acceptance probability
/// `E[exp(-int_0^t phi(B_s) ds)]` over bridges `B` from `x` to `y`, using the
/// trapezoidal rule on a uniform grid. Biased by the discretisation.
#[allow(clippy::too_many_arguments)]
pub fn acceptance_prob_mc<R: Rng + ?Sized>(
    model: &dyn Diffusion,
    x: &[f64],
    y: &[f64],
    t: f64,
    theta: &[f64],
    n_paths: usize,
    grid_steps: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    mc_core(model, x, y, t, theta, n_paths, grid_steps, false, rng)
}

/// As [`acceptance_prob_mc`] but cancels the leading discretisation error by
/// combining each path's fine-grid value with its half-resolution subsample.
#[allow(clippy::too_many_arguments)]
pub fn acceptance_prob_mc_extrapolated<R: Rng + ?Sized>(
    model: &dyn Diffusion,
    x: &[f64],
    y: &[f64],
    t: f64,
    theta: &[f64],
    n_paths: usize,
    grid_steps: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    mc_core(model, x, y, t, theta, n_paths, grid_steps, true, rng)
}

#[allow(clippy::too_many_arguments)]
fn mc_core<R: Rng + ?Sized>(
    model: &dyn Diffusion,
    x: &[f64],
    y: &[f64],
    t: f64,
    theta: &[f64],
    n_paths: usize,
    grid_steps: usize,
    extrapolate: bool,
    rng: &mut R,
) -> Result<McEstimate> {
    if n_paths == 0 || grid_steps < 2 || (extrapolate && grid_steps % 2 == 1) {
        return precondition("need at least one path and an even grid of at least two steps");
    }
    let d = model.dim();
    let l = model.lower_bound(theta);
    let h = t / grid_steps as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n_paths {
        let path = bridge_grid(x, y, t, grid_steps, rng)?;
        let fine = (-path_integral_phi(model, &path, d, h, 1, theta, l)).exp();
        let v = if extrapolate {
            let coarse = (-path_integral_phi(model, &path, d, h, 2, theta, l)).exp();
            2.0 * fine - coarse
        } else {
            fine
        };
        s1 += v;
        s2 += v * v;
    }
    let n = n_paths as f64;
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    Ok(McEstimate {
        mean,
        stderr: (var / n).sqrt(),
    })
}
