//! Exact data augmentation MCMC.
//!
//! The augmentation of each observation interval is an exact bridge draw:
//! its layer, its skeleton at the Poisson times and the Poisson times
//! themselves. Given that augmentation the joint density of parameters and
//! data is available in closed form, so parameter updates are plain
//! Metropolis-Hastings steps with no discretisation.
//!
//! Three sweeps are provided. The centred sweep keeps the Poisson times fixed
//! while `theta` moves. The noncentred sweep stores the Poisson process as a
//! unit-rate process on `[0, t] x [0, inf)` and lets `theta` decide which of
//! its points are active. The interweaved sweep runs the noncentred move and
//! then a centred move on the induced centred augmentation.
//!
//! All densities are up to additive constants that depend on neither `theta`
//! nor the augmentation.

use rand::Rng;
use rayon::prelude::*;

use crate::amcmc::DiscretePath;
use crate::chain::{ChainRecord, SamplerConfig, Stopwatch};
use crate::ea::{self, shift_point, AugmentedInterval, EaConfig, Heights, StarPoint};
use crate::error::{precondition, Error, Result};
use crate::model::{phi_with, Diffusion, MAX_STACK_DIM};
use crate::proposal::{mh_accept, MhResult, Priors, RandomWalk};
use crate::rng::{stream, Purpose};

/// Observation times and values on the original scale.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl ObservationSet {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != values.len() {
            return precondition("times and values differ in length");
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return precondition("observation times must be strictly increasing");
        }
        let d = values.first().map_or(0, Vec::len);
        if values
            .iter()
            .any(|v| v.len() != d || v.iter().any(|x| !x.is_finite()))
        {
            return precondition("observation values must be finite and of equal dimension");
        }
        Ok(Self { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn dt(&self, i: usize) -> f64 {
        self.times[i + 1] - self.times[i]
    }

    pub fn span(&self) -> f64 {
        self.times.last().unwrap_or(&0.0) - self.times.first().unwrap_or(&0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Centred,
    Noncentred,
    Interweaved,
}

impl Scheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "centred" | "centered" => Some(Scheme::Centred),
            "noncentred" | "noncentered" => Some(Scheme::Noncentred),
            "interweaved" => Some(Scheme::Interweaved),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Centred => "centred",
            Scheme::Noncentred => "noncentred",
            Scheme::Interweaved => "interweaved",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EmcmcOptions {
    pub scheme: Scheme,
    pub lambda: f64,
    pub ea: EaConfig,
}

impl Default for EmcmcOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Centred,
            lambda: 0.0,
            ea: EaConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AugmentedState {
    pub theta: Vec<f64>,
    pub intervals: Vec<AugmentedInterval>,
    pub noncentred: bool,
    pub lambda: f64,
}

/// Transformed observations, row-major.
pub fn transform_all(model: &dyn Diffusion, values: &[Vec<f64>], theta: &[f64]) -> Result<Vec<f64>> {
    let d = model.dim();
    let mut out = vec![0.0; values.len() * d];
    for (i, v) in values.iter().enumerate() {
        if v.len() != d {
            return precondition("observation dimension does not match the model");
        }
        if !model.admissible(v) {
            return Err(Error::Domain(format!("observation {v:?} not admissible")));
        }
        model.eta(v, theta, &mut out[i * d..(i + 1) * d]);
    }
    Ok(out)
}

/// Log density of `N(dx; 0, t I)`.
pub fn log_gauss(dx: impl Iterator<Item = f64>, t: f64) -> f64 {
    let c = -0.5 * (2.0 * std::f64::consts::PI * t).ln();
    dx.map(|z| c - z * z / (2.0 * t)).sum()
}

/// Log of `R^kappa exp(-R t) prod_j (1 - phi_j / R)` for a centred interval
/// augmentation, `R` the layer's rate plus `lambda`. Zero density gives `-inf`.
#[allow(clippy::too_many_arguments)]
pub fn centred_interval_factor(
    model: &dyn Diffusion,
    layer: Option<&crate::bridge::Layer>,
    psi: &[f64],
    tilde_values: &[f64],
    x: &[f64],
    y: &[f64],
    t: f64,
    theta: &[f64],
    l: f64,
    lambda: f64,
) -> Result<f64> {
    let d = x.len();
    let rate = ea::interval_rate(model, layer, x, y, theta, lambda)?;
    let kappa = psi.len();
    if kappa == 0 {
        return Ok(-rate * t);
    }
    if rate <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let mut sum = -rate * t + kappa as f64 * rate.ln();
    let mut buf = [0.0; MAX_STACK_DIM];
    let point = &mut buf[..d];
    for (j, &s) in psi.iter().enumerate() {
        shift_point(&tilde_values[j * d..(j + 1) * d], x, y, s, t, point);
        let value = phi_with(model, point, theta, l);
        if value.is_nan() {
            return Err(Error::ModelEvaluation {
                what: "phi",
                u: point.to_vec(),
                theta: theta.to_vec(),
            });
        }
        if value >= rate {
            return Ok(f64::NEG_INFINITY);
        }
        sum += (-value / rate).ln_1p();
    }
    Ok(sum)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn centred_factor(
    model: &dyn Diffusion,
    aug: &AugmentedInterval,
    x: &[f64],
    y: &[f64],
    t: f64,
    theta: &[f64],
    l: f64,
    lambda: f64,
) -> Result<f64> {
    if aug.marks.xi.is_some() {
        return Err(Error::Invariant(
            "centred density evaluated on a noncentred augmentation".into(),
        ));
    }
    centred_interval_factor(
        model,
        aug.layer.as_ref(),
        &aug.marks.psi,
        &aug.skeleton.values,
        x,
        y,
        t,
        theta,
        l,
        lambda,
    )
}

/// `sum_j 1[xi_j < R] log(1 - phi_j / R)` with `R` the rate at `theta`.
#[allow(clippy::too_many_arguments)]
fn noncentred_factor(
    model: &dyn Diffusion,
    aug: &AugmentedInterval,
    x: &[f64],
    y: &[f64],
    t: f64,
    theta: &[f64],
    l: f64,
    lambda: f64,
) -> Result<f64> {
    let Some(xi) = aug.marks.xi.as_ref() else {
        return Err(Error::Invariant(
            "noncentred density needs Poisson heights".into(),
        ));
    };
    let d = x.len();
    let rate = ea::interval_rate(model, aug.layer.as_ref(), x, y, theta, lambda)?;
    if rate > aug.marks.xi_cap * (1.0 + 1e-12) {
        return Err(Error::Invariant(format!(
            "rate {rate} exceeds the captured height range {}",
            aug.marks.xi_cap
        )));
    }
    let mut sum = 0.0;
    let mut buf = [0.0; MAX_STACK_DIM];
    let point = &mut buf[..d];
    for (j, &s) in aug.marks.psi.iter().enumerate() {
        if xi[j] >= rate {
            continue;
        }
        shift_point(aug.skeleton.point(j), x, y, s, t, point);
        let value = phi_with(model, point, theta, l);
        if value.is_nan() {
            return Err(Error::ModelEvaluation {
                what: "phi",
                u: point.to_vec(),
                theta: theta.to_vec(),
            });
        }
        if value >= rate {
            return Ok(f64::NEG_INFINITY);
        }
        sum += (-value / rate).ln_1p();
    }
    Ok(sum)
}

#[derive(Clone, Copy)]
enum Form {
    Centred,
    Noncentred,
}

fn log_density(
    theta: &[f64],
    intervals: &[AugmentedInterval],
    lambda: f64,
    obs: &ObservationSet,
    model: &dyn Diffusion,
    priors: &Priors,
    form: Form,
) -> Result<f64> {
    if intervals.len() != obs.intervals() {
        return precondition(format!(
            "{} augmented intervals for {} observation intervals",
            intervals.len(),
            obs.intervals()
        ));
    }
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
    let n = obs.intervals();
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = &xs[i * d..(i + 1) * d];
            let y = &xs[(i + 1) * d..(i + 2) * d];
            let t = obs.dt(i);
            let gauss = log_gauss(x.iter().zip(y).map(|(a, b)| b - a), t);
            let jac = model.log_jac(&obs.values[i + 1], theta);
            let f = match form {
                Form::Centred => centred_factor(model, &intervals[i], x, y, t, theta, l, lambda)?,
                Form::Noncentred => noncentred_factor(model, &intervals[i], x, y, t, theta, l, lambda)?,
            };
            Ok(jac + gauss + f)
        })
        .collect::<Result<Vec<f64>>>()?;
    let x0 = &xs[..d];
    let xn = &xs[n * d..(n + 1) * d];
    let shift = match form {
        Form::Centred => 1.0,
        Form::Noncentred => 0.0,
    };
    let boundary = model.potential(xn, theta) - model.potential(x0, theta) - (l - shift) * obs.span();
    Ok(prior + boundary + terms.iter().sum::<f64>())
}

/// Joint log density of `theta`, the data and a centred augmentation.
pub fn log_joint_eda(
    theta: &[f64],
    state: &AugmentedState,
    obs: &ObservationSet,
    model: &dyn Diffusion,
    priors: &Priors,
) -> Result<f64> {
    log_density(
        theta,
        &state.intervals,
        state.lambda,
        obs,
        model,
        priors,
        Form::Centred,
    )
}

/// Log conditional density of `theta` given a noncentred augmentation.
pub fn log_cond_theta_noncentred(
    theta: &[f64],
    state: &AugmentedState,
    obs: &ObservationSet,
    model: &dyn Diffusion,
    priors: &Priors,
) -> Result<f64> {
    log_density(
        theta,
        &state.intervals,
        state.lambda,
        obs,
        model,
        priors,
        Form::Noncentred,
    )
}

/// Points of a noncentred augmentation active at `rate`, as a centred augmentation.
pub fn to_centred(aug: &AugmentedInterval, rate: f64) -> AugmentedInterval {
    let Some(xi) = aug.marks.xi.as_ref() else {
        return aug.clone();
    };
    let d = aug.skeleton.dim;
    let mut out = aug.clone();
    out.marks.psi.clear();
    out.marks.u.clear();
    out.skeleton.times.clear();
    out.skeleton.values.clear();
    for (j, &h) in xi.iter().enumerate() {
        if h < rate {
            out.marks.psi.push(aug.marks.psi[j]);
            out.marks.u.push(aug.marks.u[j]);
            out.skeleton.times.push(aug.skeleton.times[j]);
            out.skeleton
                .values
                .extend_from_slice(&aug.skeleton.values[j * d..(j + 1) * d]);
        }
    }
    out.marks.xi = None;
    out.marks.xi_cap = 0.0;
    out
}

/// Converts every interval of a noncentred state to the centred form at `theta`.
pub fn centre_state(state: &mut AugmentedState, obs: &ObservationSet, model: &dyn Diffusion) -> Result<()> {
    let d = model.dim();
    let xs = transform_all(model, &obs.values, &state.theta)?;
    for (i, aug) in state.intervals.iter_mut().enumerate() {
        let x = &xs[i * d..(i + 1) * d];
        let y = &xs[(i + 1) * d..(i + 2) * d];
        let rate = ea::interval_rate(model, aug.layer.as_ref(), x, y, &state.theta, state.lambda)?;
        *aug = to_centred(aug, rate);
    }
    state.noncentred = false;
    Ok(())
}

/// How augmentations are redrawn.
#[derive(Clone, Copy, Debug)]
pub enum Refresh<'a> {
    Centred,
    /// Heights captured up to the rate at `theta` and, if given, at a proposal.
    Noncentred {
        star: Option<&'a [f64]>,
    },
}

fn with_interval(i: usize, e: Error) -> Error {
    match e {
        Error::ResourceLimit(m) => Error::ResourceLimit(format!("interval {i}: {m}")),
        Error::Numeric(m) => Error::Numeric(format!("interval {i}: {m}")),
        other => other,
    }
}

/// Draws one interval's augmentation with the given endpoints.
#[allow(clippy::too_many_arguments)]
pub fn refresh_interval(
    model: &dyn Diffusion,
    x: &[f64],
    y: &[f64],
    t: f64,
    theta: &[f64],
    lambda: f64,
    star: Option<(&[f64], &[f64], &[f64])>,
    noncentred: bool,
    cfg: &EaConfig,
    rng: &mut impl Rng,
) -> Result<AugmentedInterval> {
    let heights = if noncentred {
        Heights::On(star.map(|(theta, x, y)| StarPoint { theta, x, y }))
    } else {
        Heights::Off
    };
    ea::ea_sample_interval(model, x, y, t, theta, lambda, heights, cfg, rng)
}

/// Redraws every interval's augmentation independently, in parallel, each
/// from the substream keyed by `(key, interval)`.
#[allow(clippy::too_many_arguments)]
pub fn refresh_paths(
    model: &dyn Diffusion,
    obs: &ObservationSet,
    theta: &[f64],
    lambda: f64,
    mode: Refresh<'_>,
    cfg: &EaConfig,
    seed: u64,
    key: u64,
) -> Result<Vec<AugmentedInterval>> {
    let d = model.dim();
    let xs = transform_all(model, &obs.values, theta)?;
    let (noncentred, star) = match mode {
        Refresh::Centred => (false, None),
        Refresh::Noncentred { star } => (true, star),
    };
    let star_xs = match star {
        Some(s) => Some(transform_all(model, &obs.values, s)?),
        None => None,
    };
    (0..obs.intervals())
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, Purpose::Path, key, i as u64);
            let x = &xs[i * d..(i + 1) * d];
            let y = &xs[(i + 1) * d..(i + 2) * d];
            let st = star
                .zip(star_xs.as_ref())
                .map(|(s, sx)| (s, &sx[i * d..(i + 1) * d], &sx[(i + 1) * d..(i + 2) * d]));
            refresh_interval(
                model,
                x,
                y,
                obs.dt(i),
                theta,
                lambda,
                st,
                noncentred,
                cfg,
                &mut rng,
            )
            .map_err(|e| with_interval(i, e))
        })
        .collect()
}

/// Evaluates a proposal's density, mapping evaluation failures to NaN so the
/// MH step rejects and counts them.
pub(crate) fn guarded(r: Result<f64>) -> Result<f64> {
    match r {
        Ok(v) => Ok(v),
        Err(Error::ModelEvaluation { .. }) | Err(Error::Domain(_)) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

/// One MH move of `theta` against the state's current form. A proposal must
/// be supplied for noncentred states, since the captured heights must cover it.
#[allow(clippy::too_many_arguments)]
pub fn update_theta<R: Rng + ?Sized>(
    state: &mut AugmentedState,
    obs: &ObservationSet,
    model: &dyn Diffusion,
    priors: &Priors,
    walk: &RandomWalk,
    proposal: Option<Vec<f64>>,
    rng: &mut R,
) -> Result<MhResult> {
    update_theta_with(state, obs, model, priors, walk, proposal, &|_| 0.0, rng)
}

/// As [`update_theta`], with `extra(theta)` added to the log target.
#[allow(clippy::too_many_arguments)]
pub fn update_theta_with<R: Rng + ?Sized>(
    state: &mut AugmentedState,
    obs: &ObservationSet,
    model: &dyn Diffusion,
    priors: &Priors,
    walk: &RandomWalk,
    proposal: Option<Vec<f64>>,
    extra: &dyn Fn(&[f64]) -> f64,
    rng: &mut R,
) -> Result<MhResult> {
    let form = if state.noncentred {
        Form::Noncentred
    } else {
        Form::Centred
    };
    let proposal = match proposal {
        Some(p) => p,
        None if state.noncentred => {
            return precondition("noncentred updates need the proposal used for height capture");
        }
        None => walk.propose(&state.theta, rng),
    };
    let current = log_density(
        &state.theta,
        &state.intervals,
        state.lambda,
        obs,
        model,
        priors,
        form,
    )? + extra(&state.theta);
    let proposed = guarded(log_density(
        &proposal,
        &state.intervals,
        state.lambda,
        obs,
        model,
        priors,
        form,
    ))? + extra(&proposal);
    Ok(mh_accept(
        walk,
        &mut state.theta,
        current,
        proposal,
        proposed,
        rng,
    ))
}

/// Noncentred move with the pre-drawn `star`, the induced centred
/// augmentation at the new value, then a centred move with a fresh proposal.
#[allow(clippy::too_many_arguments)]
pub fn interweave_step<R: Rng + ?Sized>(
    state: &mut AugmentedState,
    obs: &ObservationSet,
    model: &dyn Diffusion,
    priors: &Priors,
    walk_nc: &RandomWalk,
    walk_c: &RandomWalk,
    star: Vec<f64>,
    rng: &mut R,
) -> Result<(MhResult, MhResult)> {
    if !state.noncentred {
        return precondition("interweaving starts from a noncentred augmentation");
    }
    let first = update_theta(state, obs, model, priors, walk_nc, Some(star), rng)?;
    centre_state(state, obs, model)?;
    let second = update_theta(state, obs, model, priors, walk_c, None, rng)?;
    Ok((first, second))
}

/// Adds one refresh's attempt counts and skeleton sizes to the record.
pub(crate) fn record_refresh(rec: &mut ChainRecord, intervals: &[AugmentedInterval]) {
    let per: Vec<(usize, u64)> = intervals
        .iter()
        .enumerate()
        .map(|(i, a)| (i, a.attempts))
        .collect();
    rec.record_ea(&per);
    rec.counters.skeleton_points += intervals.iter().map(|a| a.skeleton.len() as u64).sum::<u64>();
}

/// Runs an exact data augmentation chain.
pub fn run_emcmc(
    model: &dyn Diffusion,
    obs: &ObservationSet,
    cfg: &SamplerConfig,
    opts: &EmcmcOptions,
) -> Result<ChainRecord> {
    cfg.validate(model)?;
    opts.ea.validate()?;
    if obs.len() < 2 {
        return precondition("need at least two observations");
    }
    if !(opts.lambda >= 0.0) {
        return precondition("lambda must be non-negative");
    }
    let clock = Stopwatch::start();
    let names = model.param_names().iter().map(|s| s.to_string()).collect();
    let mut rec = ChainRecord::new(names, obs.intervals(), cfg.seed);
    rec.config = vec![
        ("sampler".into(), "emcmc".into()),
        ("scheme".into(), opts.scheme.name().into()),
        ("lambda".into(), opts.lambda.to_string()),
        ("delta_factor".into(), opts.ea.delta_factor.to_string()),
    ];
    let mut rng = stream(cfg.seed, Purpose::Chain, 0, 0);
    let mut walk = RandomWalk::new(model.positive(), &cfg.proposal_scales)?;
    let mut walk_c = walk.clone();
    let mut state = AugmentedState {
        theta: cfg.theta_init.clone(),
        intervals: vec![],
        noncentred: false,
        lambda: opts.lambda,
    };
    for it in 0..cfg.iterations {
        rec.start_iteration();
        let key = it as u64;
        let result = match opts.scheme {
            Scheme::Centred => {
                state.intervals = refresh_paths(
                    model,
                    obs,
                    &state.theta,
                    opts.lambda,
                    Refresh::Centred,
                    &opts.ea,
                    cfg.seed,
                    key,
                )?;
                state.noncentred = false;
                record_refresh(&mut rec, &state.intervals);
                update_theta(&mut state, obs, model, &cfg.priors, &walk, None, &mut rng)?
            }
            Scheme::Noncentred | Scheme::Interweaved => {
                let star = walk.propose(&state.theta, &mut rng);
                state.intervals = refresh_paths(
                    model,
                    obs,
                    &state.theta,
                    opts.lambda,
                    Refresh::Noncentred { star: Some(&star) },
                    &opts.ea,
                    cfg.seed,
                    key,
                )?;
                state.noncentred = true;
                record_refresh(&mut rec, &state.intervals);
                if opts.scheme == Scheme::Noncentred {
                    update_theta(&mut state, obs, model, &cfg.priors, &walk, Some(star), &mut rng)?
                } else {
                    let (first, second) = interweave_step(
                        &mut state,
                        obs,
                        model,
                        &cfg.priors,
                        &walk,
                        &walk_c,
                        star,
                        &mut rng,
                    )?;
                    rec.counters.theta_proposed += 1;
                    rec.counters.theta_accepted += first.accepted as u64;
                    rec.counters.nonfinite_rejections += first.nonfinite as u64;
                    rec.counters.centred_proposed += 1;
                    rec.counters.centred_accepted += second.accepted as u64;
                    rec.counters.nonfinite_rejections += second.nonfinite as u64;
                    if it < cfg.burnin {
                        walk.adapt(
                            first.accepted,
                            &state.theta,
                            RandomWalk::shape_phase(it, cfg.burnin),
                        );
                        walk_c.adapt(
                            second.accepted,
                            &state.theta,
                            RandomWalk::shape_phase(it, cfg.burnin),
                        );
                    }
                    cfg.bounds.check(&state.theta)?;
                    if cfg.keeps(it) {
                        rec.push(it, &state.theta, second.log_target);
                    }
                    continue;
                }
            }
        };
        rec.counters.theta_proposed += 1;
        rec.counters.theta_accepted += result.accepted as u64;
        rec.counters.nonfinite_rejections += result.nonfinite as u64;
        cfg.bounds.check(&state.theta)?;
        if it < cfg.burnin {
            walk.adapt(
                result.accepted,
                &state.theta,
                RandomWalk::shape_phase(it, cfg.burnin),
            );
        }
        if cfg.keeps(it) {
            rec.push(it, &state.theta, result.log_target);
        }
    }
    rec.wall_clock_seconds = clock.seconds();
    Ok(rec)
}

/// Path-augmentation log density in integration-by-parts form with a
/// left-point Riemann sum for `int phi`, on paths with `m` interior grid points.
///
/// Written independently of the high-frequency sampler's density so the two
/// can be checked against each other.
pub fn collapsed_pa_log_density(
    theta: &[f64],
    paths: &[DiscretePath],
    obs: &ObservationSet,
    model: &dyn Diffusion,
    priors: &Priors,
    m: usize,
) -> Result<f64> {
    if paths.len() != obs.intervals() || paths.iter().any(|p| p.m != m || p.dim != model.dim()) {
        return precondition("paths do not match the observation grid");
    }
    let mut total = priors.log_density(theta);
    let l = model.lower_bound(theta);
    let d = model.dim();
    let mut prev = crate::model::lamperti_forward(model, &obs.values[0], theta)?;
    let first = prev.clone();
    let mut point = vec![0.0; d];
    for (i, path) in paths.iter().enumerate() {
        let next = crate::model::lamperti_forward(model, &obs.values[i + 1], theta)?;
        let t = obs.dt(i);
        let h = t / (m + 1) as f64;
        total += model.log_jac(&obs.values[i + 1], theta);
        let sq: f64 = prev.iter().zip(&next).map(|(a, b)| (b - a) * (b - a)).sum();
        total += -0.5 * d as f64 * (2.0 * std::f64::consts::PI * t).ln() - sq / (2.0 * t);
        let mut riemann = 0.0;
        for j in 0..=m {
            let s = j as f64 * h;
            for c in 0..d {
                let tilde = if j == 0 { 0.0 } else { path.values[(j - 1) * d + c] };
                point[c] = tilde + prev[c] + (next[c] - prev[c]) * s / t;
            }
            riemann += phi_with(model, &point, theta, l);
        }
        total -= h * riemann;
        prev = next;
    }
    total += model.potential(&prev, theta) - model.potential(&first, theta) - l * obs.span();
    Ok(total)
}
