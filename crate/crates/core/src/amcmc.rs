//! Approximate data augmentation on a fixed grid.
//!
//! Each interval is imputed at `m` equally spaced interior points and the
//! continuous-time likelihood ratio is replaced by a discretised one. Paths are
//! stored on the pinned scale, zero at both ends, so that a parameter move
//! changes the endpoints of the imputed path without touching the stored values.

use rand::Rng;
use rayon::prelude::*;

use crate::bridge::sample_brownian_bridge;
use crate::chain::{ChainRecord, SamplerConfig, Stopwatch};
use crate::emcmc::{guarded, log_gauss, transform_all, ObservationSet};
use crate::error::{precondition, Result};
use crate::model::{phi_with, Diffusion, MAX_STACK_DIM};
use crate::proposal::{mh_accept, Priors, RandomWalk};
use crate::rng::{stream, Purpose};

/// Interior values of one pinned path, row-major `m x dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePath {
    pub dim: usize,
    pub m: usize,
    pub values: Vec<f64>,
}

impl DiscretePath {
    pub fn zeros(m: usize, dim: usize) -> Self {
        Self {
            dim,
            m,
            values: vec![0.0; m * dim],
        }
    }

    /// Independent pinned Brownian bridges on `[0, t]` at `m` interior grid points.
    pub fn sample<R: Rng + ?Sized>(m: usize, dim: usize, t: f64, rng: &mut R) -> Result<Self> {
        let h = t / (m + 1) as f64;
        let times: Vec<f64> = (1..=m).map(|j| j as f64 * h).collect();
        let mut values = vec![0.0; m * dim];
        for c in 0..dim {
            let col = sample_brownian_bridge(&times, t, rng)?;
            for (j, v) in col.into_iter().enumerate() {
                values[j * dim + c] = v;
            }
        }
        Ok(Self { dim, m, values })
    }

    /// Pinned value at grid index `j` in `0..=m+1`.
    #[inline]
    fn pinned(&self, j: usize, c: usize) -> f64 {
        if j == 0 || j == self.m + 1 {
            0.0
        } else {
            self.values[(j - 1) * self.dim + c]
        }
    }

    /// Calls `f(j, X_j)` for every grid point `j = 0..=m+1` with endpoints `x`, `y`.
    fn for_each_point(&self, x: &[f64], y: &[f64], mut f: impl FnMut(usize, &[f64])) {
        let d = self.dim;
        let n = self.m + 1;
        let mut buf = [0.0; MAX_STACK_DIM];
        for j in 0..=n {
            let w = j as f64 / n as f64;
            for c in 0..d {
                buf[c] = self.pinned(j, c) + (1.0 - w) * x[c] + w * y[c];
            }
            f(j, &buf[..d]);
        }
    }
}

/// `sum_j alpha(X_j) . (X_{j+1} - X_j) - 1/2 sum_j |alpha(X_j)|^2 h` over the grid.
pub fn log_girsanov_plain(
    model: &dyn Diffusion,
    path: &DiscretePath,
    x: &[f64],
    y: &[f64],
    t: f64,
    theta: &[f64],
) -> f64 {
    let d = path.dim;
    let h = t / (path.m + 1) as f64;
    let mut prev = [0.0; MAX_STACK_DIM];
    let mut drift = [0.0; MAX_STACK_DIM];
    let mut sum = 0.0;
    path.for_each_point(x, y, |j, point| {
        if j > 0 {
            for c in 0..d {
                sum += drift[c] * (point[c] - prev[c]);
            }
        }
        if j <= path.m {
            model.alpha(point, theta, &mut drift[..d]);
            sum -= 0.5 * h * drift[..d].iter().map(|a| a * a).sum::<f64>();
            prev[..d].copy_from_slice(point);
        }
    });
    sum
}

/// `-h sum_{j=0..m} phi(X_j)`, the left-point approximation of `-int phi`.
pub fn log_girsanov_ibp(
    model: &dyn Diffusion,
    path: &DiscretePath,
    x: &[f64],
    y: &[f64],
    t: f64,
    theta: &[f64],
    l: f64,
) -> f64 {
    let h = t / (path.m + 1) as f64;
    let mut sum = 0.0;
    path.for_each_point(x, y, |j, point| {
        if j <= path.m {
            sum += phi_with(model, point, theta, l);
        }
    });
    -h * sum
}

fn check_paths(paths: &[DiscretePath], obs: &ObservationSet, model: &dyn Diffusion) -> Result<()> {
    if paths.len() != obs.intervals() {
        return precondition("one imputed path per observation interval is required");
    }
    let m = paths.first().map_or(0, |p| p.m);
    if paths.iter().any(|p| p.m != m || p.dim != model.dim()) {
        return precondition("imputed paths differ in grid or dimension");
    }
    Ok(())
}

fn log_pi(
    theta: &[f64],
    paths: &[DiscretePath],
    obs: &ObservationSet,
    model: &dyn Diffusion,
    priors: &Priors,
    ibp: bool,
) -> Result<f64> {
    check_paths(paths, obs, model)?;
    if model.check_params(theta).is_err() {
        return Ok(f64::NEG_INFINITY);
    }
    let prior = priors.log_density(theta);
    if prior == f64::NEG_INFINITY {
        return Ok(prior);
    }
    let d = model.dim();
    let xs = transform_all(model, &obs.values, theta)?;
    let l = model.lower_bound(theta);
    let terms: Vec<f64> = paths
        .par_iter()
        .enumerate()
        .map(|(i, path)| {
            let x = &xs[i * d..(i + 1) * d];
            let y = &xs[(i + 1) * d..(i + 2) * d];
            let t = obs.dt(i);
            let g = if ibp {
                model.potential(y, theta) - model.potential(x, theta) - l * t
                    + log_girsanov_ibp(model, path, x, y, t, theta, l)
            } else {
                log_girsanov_plain(model, path, x, y, t, theta)
            };
            model.log_jac(&obs.values[i + 1], theta) + log_gauss(x.iter().zip(y).map(|(a, b)| b - a), t) + g
        })
        .collect();
    Ok(prior + terms.iter().sum::<f64>())
}

/// Discretised log posterior with the stochastic-integral form of the likelihood ratio.
pub fn log_pi_hfa(
    theta: &[f64],
    paths: &[DiscretePath],
    obs: &ObservationSet,
    model: &dyn Diffusion,
    priors: &Priors,
) -> Result<f64> {
    log_pi(theta, paths, obs, model, priors, false)
}

/// Discretised log posterior with the integrated-by-parts likelihood ratio.
pub fn log_pi_hfa_ibp(
    theta: &[f64],
    paths: &[DiscretePath],
    obs: &ObservationSet,
    model: &dyn Diffusion,
    priors: &Priors,
) -> Result<f64> {
    log_pi(theta, paths, obs, model, priors, true)
}

#[derive(Clone, Debug)]
pub struct AmcmcOptions {
    /// Interior grid points per interval.
    pub m: usize,
    pub ibp: bool,
}

impl Default for AmcmcOptions {
    fn default() -> Self {
        Self { m: 10, ibp: false }
    }
}

/// Independence update of every path with a fresh pinned Brownian bridge.
#[allow(clippy::too_many_arguments)]
fn update_paths(
    paths: &mut [DiscretePath],
    obs: &ObservationSet,
    model: &dyn Diffusion,
    theta: &[f64],
    ibp: bool,
    seed: u64,
    key: u64,
) -> Result<u64> {
    let d = model.dim();
    let xs = transform_all(model, &obs.values, theta)?;
    let l = model.lower_bound(theta);
    let accepted: Vec<bool> = paths
        .par_iter_mut()
        .enumerate()
        .map(|(i, path)| {
            let mut rng = stream(seed, Purpose::Path, key, i as u64);
            let x = &xs[i * d..(i + 1) * d];
            let y = &xs[(i + 1) * d..(i + 2) * d];
            let t = obs.dt(i);
            let fresh = DiscretePath::sample(path.m, d, t, &mut rng)?;
            let g = |p: &DiscretePath| {
                if ibp {
                    log_girsanov_ibp(model, p, x, y, t, theta, l)
                } else {
                    log_girsanov_plain(model, p, x, y, t, theta)
                }
            };
            let ratio = g(&fresh) - g(path);
            let u: f64 = rng.random();
            let accept = ratio.is_finite() && (ratio >= 0.0 || u.ln() < ratio);
            if accept {
                *path = fresh;
            }
            Ok(accept)
        })
        .collect::<Result<_>>()?;
    Ok(accepted.iter().filter(|&&a| a).count() as u64)
}

/// Runs the grid-based data augmentation chain.
pub fn run_amcmc(
    model: &dyn Diffusion,
    obs: &ObservationSet,
    cfg: &SamplerConfig,
    opts: &AmcmcOptions,
) -> Result<ChainRecord> {
    cfg.validate(model)?;
    if obs.len() < 2 {
        return precondition("need at least two observations");
    }
    if opts.m == 0 {
        return precondition("the imputation grid needs at least one interior point");
    }
    let clock = Stopwatch::start();
    let names = model.param_names().iter().map(|s| s.to_string()).collect();
    let mut rec = ChainRecord::new(names, obs.intervals(), cfg.seed);
    rec.config = vec![
        ("sampler".into(), "amcmc".into()),
        ("m".into(), opts.m.to_string()),
        ("ibp".into(), opts.ibp.to_string()),
    ];
    let d = model.dim();
    let mut rng = stream(cfg.seed, Purpose::Chain, 0, 0);
    let mut walk = RandomWalk::new(model.positive(), &cfg.proposal_scales)?;
    let mut theta = cfg.theta_init.clone();
    let mut paths: Vec<DiscretePath> = (0..obs.intervals())
        .map(|_| DiscretePath::zeros(opts.m, d))
        .collect();
    let target = |th: &[f64], p: &[DiscretePath]| log_pi(th, p, obs, model, &cfg.priors, opts.ibp);
    for it in 0..cfg.iterations {
        rec.start_iteration();
        let accepted = update_paths(&mut paths, obs, model, &theta, opts.ibp, cfg.seed, it as u64)?;
        rec.counters.path_proposed += paths.len() as u64;
        rec.counters.path_accepted += accepted;
        let current = target(&theta, &paths)?;
        let proposal = walk.propose(&theta, &mut rng);
        let proposed = guarded(target(&proposal, &paths))?;
        let r = mh_accept(&walk, &mut theta, current, proposal, proposed, &mut rng);
        rec.counters.theta_proposed += 1;
        rec.counters.theta_accepted += r.accepted as u64;
        rec.counters.nonfinite_rejections += r.nonfinite as u64;
        cfg.bounds.check(&theta)?;
        if it < cfg.burnin {
            walk.adapt(r.accepted, &theta, RandomWalk::shape_phase(it, cfg.burnin));
        }
        if cfg.keeps(it) {
            rec.push(it, &theta, r.log_target);
        }
    }
    rec.wall_clock_seconds = clock.seconds();
    Ok(rec)
}
