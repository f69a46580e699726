//! Inference when the diffusion is observed with Gaussian error.
//!
//! The latent values at the observation times join the augmentation. They move
//! one at a time by random-walk Metropolis against the centred density of the
//! adjacent intervals and the error density, and the error scale has a
//! conjugate update. The first latent value has either the model's stationary
//! law or a flat density as its prior.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::chain::{ChainRecord, SamplerConfig, Stopwatch};
use crate::ea::AugmentedInterval;
use crate::emcmc::{
    centre_state, centred_factor, log_gauss, log_joint_eda, record_refresh, refresh_paths, update_theta_with,
    AugmentedState, EmcmcOptions, ObservationSet, Refresh, Scheme,
};
use crate::error::{precondition, Error, Result};
use crate::model::{lamperti_forward, Diffusion};
use crate::proposal::{Priors, RandomWalk};
use crate::rng::{stream, Purpose};

/// Noisy observations `Z_i = V_i + tau * eps_i`.
pub type NoisyObservations = ObservationSet;

/// Prior density of the first latent value given `theta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialPrior {
    /// The model's stationary law.
    Stationary,
    /// Improper flat density.
    Flat,
}

impl InitialPrior {
    /// Stationary when the model has a stationary density, flat otherwise.
    pub fn default_for(model: &dyn Diffusion, theta: &[f64]) -> Self {
        let probe = vec![0.0; model.dim()];
        if model.log_stationary(&probe, theta).is_some() {
            InitialPrior::Stationary
        } else {
            InitialPrior::Flat
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "stationary" => Ok(InitialPrior::Stationary),
            "flat" => Ok(InitialPrior::Flat),
            other => Err(Error::Config(format!("unknown initial-value prior '{other}'"))),
        }
    }

    pub fn log_density(self, model: &dyn Diffusion, v: &[f64], theta: &[f64]) -> Result<f64> {
        match self {
            InitialPrior::Flat => Ok(0.0),
            InitialPrior::Stationary => model
                .log_stationary(v, theta)
                .ok_or_else(|| Error::Config(format!("model '{}' has no stationary density", model.name()))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TauPrior {
    /// Improper density proportional to `1/tau`.
    Reciprocal,
    /// Inverse gamma on `tau^2`.
    InvGamma { shape: f64, scale: f64 },
    /// `tau` is held at its initial value.
    Fixed,
}

impl TauPrior {
    pub fn log_density(&self, tau: f64) -> f64 {
        if !(tau > 0.0) {
            return f64::NEG_INFINITY;
        }
        match *self {
            TauPrior::Reciprocal => -tau.ln(),
            // Density of tau^2 times the Jacobian 2 tau.
            TauPrior::InvGamma { shape, scale } => -(2.0 * shape + 1.0) * tau.ln() - scale / (tau * tau),
            TauPrior::Fixed => 0.0,
        }
    }

    /// Parses `reciprocal`, `fixed` or `invgamma:SHAPE:SCALE`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["reciprocal"] => Ok(TauPrior::Reciprocal),
            ["fixed"] => Ok(TauPrior::Fixed),
            ["invgamma", a, b] => {
                let shape: f64 = a
                    .parse()
                    .map_err(|_| Error::Config(format!("bad shape in '{s}'")))?;
                let scale: f64 = b
                    .parse()
                    .map_err(|_| Error::Config(format!("bad scale in '{s}'")))?;
                if !(shape > 0.0 && scale > 0.0) {
                    return Err(Error::Config("inverse gamma arguments must be positive".into()));
                }
                Ok(TauPrior::InvGamma { shape, scale })
            }
            _ => Err(Error::Config(format!("unknown error-scale prior '{s}'"))),
        }
    }
}

/// Log density of the observation `z` given latent `v` and scale `tau`.
pub fn log_q(z: &[f64], v: &[f64], tau: f64) -> f64 {
    let c = -0.5 * (2.0 * std::f64::consts::PI).ln() - tau.ln();
    z.iter()
        .zip(v)
        .map(|(a, b)| c - 0.5 * ((a - b) / tau).powi(2))
        .sum()
}

/// Joint log density of `theta`, `tau`, the latent values, the augmentation
/// and the noisy data.
#[allow(clippy::too_many_arguments)]
pub fn log_joint_error(
    theta: &[f64],
    tau: f64,
    latent: &ObservationSet,
    state: &AugmentedState,
    z: &NoisyObservations,
    model: &dyn Diffusion,
    priors: &Priors,
    tau_prior: &TauPrior,
    initial: InitialPrior,
) -> Result<f64> {
    if latent.len() != z.len() {
        return precondition("latent and observed series differ in length");
    }
    let base = log_joint_eda(theta, state, latent, model, priors)?;
    let noise: f64 = z
        .values
        .iter()
        .zip(&latent.values)
        .map(|(a, b)| log_q(a, b, tau))
        .sum();
    let first = initial.log_density(model, &latent.values[0], theta)?;
    Ok(base + noise + first + tau_prior.log_density(tau))
}

/// Centred log density of one interval as a function of its endpoints:
/// `H(y) - H(x) + log N(y - x; t) + log factor`.
#[allow(clippy::too_many_arguments)]
fn interval_term(
    model: &dyn Diffusion,
    aug: &AugmentedInterval,
    x: &[f64],
    y: &[f64],
    t: f64,
    theta: &[f64],
    l: f64,
    lambda: f64,
) -> Result<f64> {
    let f = centred_factor(model, aug, x, y, t, theta, l, lambda)?;
    Ok(model.potential(y, theta) - model.potential(x, theta)
        + log_gauss(x.iter().zip(y).map(|(a, b)| b - a), t)
        + f)
}

/// Log target for latent value `v` at index `i` with everything else fixed.
#[allow(clippy::too_many_arguments)]
fn endpoint_target(
    i: usize,
    v: &[f64],
    latent: &ObservationSet,
    state: &AugmentedState,
    z: &NoisyObservations,
    model: &dyn Diffusion,
    tau: f64,
    initial: InitialPrior,
) -> Result<f64> {
    if v.iter().any(|c| !c.is_finite()) || !model.admissible(v) {
        return Ok(f64::NEG_INFINITY);
    }
    let theta = &state.theta;
    let l = model.lower_bound(theta);
    let x = lamperti_forward(model, v, theta)?;
    let n = latent.intervals();
    let mut total = log_q(&z.values[i], v, tau);
    if i == 0 {
        total += initial.log_density(model, v, theta)?;
    } else {
        let prev = lamperti_forward(model, &latent.values[i - 1], theta)?;
        total += model.log_jac(v, theta);
        total += interval_term(
            model,
            &state.intervals[i - 1],
            &prev,
            &x,
            latent.dt(i - 1),
            theta,
            l,
            state.lambda,
        )?;
    }
    if i < n {
        let next = lamperti_forward(model, &latent.values[i + 1], theta)?;
        total += interval_term(
            model,
            &state.intervals[i],
            &x,
            &next,
            latent.dt(i),
            theta,
            l,
            state.lambda,
        )?;
    }
    Ok(total)
}

/// One random-walk Metropolis update of latent value `i` against a centred
/// augmentation. Returns whether the move was accepted.
#[allow(clippy::too_many_arguments)]
pub fn update_endpoint<R: Rng + ?Sized>(
    i: usize,
    latent: &mut ObservationSet,
    state: &AugmentedState,
    z: &NoisyObservations,
    model: &dyn Diffusion,
    tau: f64,
    scale: f64,
    initial: InitialPrior,
    rng: &mut R,
) -> Result<bool> {
    if state.noncentred {
        return precondition("latent updates need a centred augmentation");
    }
    if i >= latent.len() {
        return precondition(format!("latent index {i} out of range"));
    }
    let current = endpoint_target(i, &latent.values[i], latent, state, z, model, tau, initial)?;
    let proposal: Vec<f64> = latent.values[i]
        .iter()
        .map(|c| {
            let e: f64 = StandardNormal.sample(rng);
            c + scale * e
        })
        .collect();
    let proposed = match endpoint_target(i, &proposal, latent, state, z, model, tau, initial) {
        Ok(v) => v,
        Err(Error::ModelEvaluation { .. }) | Err(Error::Domain(_)) => f64::NAN,
        Err(e) => return Err(e),
    };
    if !proposed.is_finite() && proposed != f64::NEG_INFINITY {
        return Ok(false);
    }
    let log_ratio = proposed - current;
    let u: f64 = rng.random();
    if log_ratio >= 0.0 || u.ln() < log_ratio {
        latent.values[i] = proposal;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Conjugate draw of `tau` given the latent values and the data; `current`
/// is returned unchanged under [`TauPrior::Fixed`].
pub fn update_tau<R: Rng + ?Sized>(
    current: f64,
    latent: &ObservationSet,
    z: &NoisyObservations,
    prior: &TauPrior,
    rng: &mut R,
) -> Result<f64> {
    if latent.len() != z.len() || latent.is_empty() {
        return precondition("latent and observed series must match and be non-empty");
    }
    let s: f64 = z
        .values
        .iter()
        .zip(&latent.values)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)))
        .sum();
    let count = (z.len() * z.dim()) as f64;
    let (shape, rate) = match *prior {
        TauPrior::Reciprocal => {
            if !(s > 0.0) {
                return Err(Error::Improper(
                    "error-scale posterior is improper when residuals vanish".into(),
                ));
            }
            (count / 2.0, s / 2.0)
        }
        TauPrior::InvGamma { shape, scale } => (shape + count / 2.0, scale + s / 2.0),
        TauPrior::Fixed => return Ok(current),
    };
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::Numeric(format!("gamma draw: {e}")))?;
    let precision: f64 = g.sample(rng);
    Ok((1.0 / precision).sqrt())
}

#[derive(Clone, Debug)]
pub struct ErrorOptions {
    pub tau_init: f64,
    pub tau_prior: TauPrior,
    /// Initial random-walk scale for latent values; adapted during burn-in.
    pub endpoint_scale: f64,
    /// Prior of the first latent value; `None` picks [`InitialPrior::default_for`].
    pub initial_prior: Option<InitialPrior>,
    pub record_latent: bool,
}

impl Default for ErrorOptions {
    fn default() -> Self {
        Self {
            tau_init: 0.1,
            tau_prior: TauPrior::Reciprocal,
            endpoint_scale: 0.1,
            initial_prior: None,
            record_latent: false,
        }
    }
}

/// Chain output of the error-model sampler. The record's last column is `tau`.
#[derive(Clone, Debug)]
pub struct ErrorChain {
    pub record: ChainRecord,
    /// Kept latent paths, if requested.
    pub latent: Vec<Vec<Vec<f64>>>,
}

const ENDPOINT_TARGET: f64 = 0.44;
/// Share of burn-in during which tau stays at its initial value.
const TAU_HOLD_FRACTION: f64 = 0.25;

/// Runs the exact augmentation sampler with latent values and error scale.
pub fn run_emcmc_error(
    model: &dyn Diffusion,
    z: &NoisyObservations,
    cfg: &SamplerConfig,
    opts: &EmcmcOptions,
    err: &ErrorOptions,
) -> Result<ErrorChain> {
    cfg.validate(model)?;
    opts.ea.validate()?;
    if z.len() < 2 {
        return precondition("need at least two observations");
    }
    if !(err.tau_init > 0.0 && err.endpoint_scale > 0.0) {
        return precondition("initial error scale and latent step must be positive");
    }
    if matches!(err.tau_prior, TauPrior::Reciprocal) && z.len() * z.dim() < 2 {
        return precondition("too few observations for the reciprocal error-scale prior");
    }
    let initial = err
        .initial_prior
        .unwrap_or_else(|| InitialPrior::default_for(model, &cfg.theta_init));
    initial.log_density(model, &z.values[0], &cfg.theta_init)?;
    let clock = Stopwatch::start();
    let mut names: Vec<String> = model.param_names().iter().map(|s| s.to_string()).collect();
    names.push("tau".into());
    let mut rec = ChainRecord::new(names, z.intervals(), cfg.seed);
    rec.config = vec![
        ("sampler".into(), "emcmc_error".into()),
        ("scheme".into(), opts.scheme.name().into()),
        ("lambda".into(), opts.lambda.to_string()),
        ("delta_factor".into(), opts.ea.delta_factor.to_string()),
        ("tau_prior".into(), format!("{:?}", err.tau_prior)),
        ("initial_prior".into(), format!("{initial:?}")),
    ];
    let mut latent = z.clone();
    let mut tau = err.tau_init;
    // Latent values start at the data, so tau is held until they spread out.
    let tau_hold = (cfg.burnin as f64 * TAU_HOLD_FRACTION) as usize;
    let mut log_step = err.endpoint_scale.ln();
    let mut rng = stream(cfg.seed, Purpose::Chain, 0, 0);
    let mut end_rng = stream(cfg.seed, Purpose::Endpoint, 0, 0);
    let mut walk = RandomWalk::new(model.positive(), &cfg.proposal_scales)?;
    let mut walk_c = walk.clone();
    let mut state = AugmentedState {
        theta: cfg.theta_init.clone(),
        intervals: vec![],
        noncentred: false,
        lambda: opts.lambda,
    };
    let centred = opts.scheme == Scheme::Centred;
    let mut kept_latent = vec![];
    // Non-centred sweeps start from a centred augmentation and refresh paths
    // right before their parameter move.
    if !centred {
        state.intervals = refresh_paths(
            model,
            &latent,
            &state.theta,
            opts.lambda,
            Refresh::Centred,
            &opts.ea,
            cfg.seed,
            u64::MAX,
        )?;
    }
    for it in 0..cfg.iterations {
        rec.start_iteration();
        let key = it as u64;
        if centred {
            state.intervals = refresh_paths(
                model,
                &latent,
                &state.theta,
                opts.lambda,
                Refresh::Centred,
                &opts.ea,
                cfg.seed,
                key,
            )?;
            record_refresh(&mut rec, &state.intervals);
        }
        let step = log_step.exp();
        for i in 0..latent.len() {
            let accepted =
                update_endpoint(i, &mut latent, &state, z, model, tau, step, initial, &mut end_rng)?;
            rec.counters.endpoint_proposed += 1;
            rec.counters.endpoint_accepted += accepted as u64;
            if it < cfg.burnin {
                let gain = (it as f64 + 1.0).powf(-0.6) / latent.len() as f64;
                log_step += gain * (accepted as u8 as f64 - ENDPOINT_TARGET);
            }
        }
        if it >= tau_hold {
            tau = update_tau(tau, &latent, z, &err.tau_prior, &mut end_rng)?;
        }
        let v0 = latent.values[0].clone();
        let first = |th: &[f64]| initial.log_density(model, &v0, th).unwrap_or(f64::NEG_INFINITY);
        let log_target = if centred {
            let r = update_theta_with(
                &mut state,
                &latent,
                model,
                &cfg.priors,
                &walk,
                None,
                &first,
                &mut rng,
            )?;
            rec.counters.theta_proposed += 1;
            rec.counters.theta_accepted += r.accepted as u64;
            rec.counters.nonfinite_rejections += r.nonfinite as u64;
            if it < cfg.burnin {
                walk.adapt(r.accepted, &state.theta, RandomWalk::shape_phase(it, cfg.burnin));
            }
            r.log_target
        } else {
            let star = walk.propose(&state.theta, &mut rng);
            state.intervals = refresh_paths(
                model,
                &latent,
                &state.theta,
                opts.lambda,
                Refresh::Noncentred { star: Some(&star) },
                &opts.ea,
                cfg.seed,
                key,
            )?;
            state.noncentred = true;
            record_refresh(&mut rec, &state.intervals);
            let r = update_theta_with(
                &mut state,
                &latent,
                model,
                &cfg.priors,
                &walk,
                Some(star),
                &first,
                &mut rng,
            )?;
            rec.counters.theta_proposed += 1;
            rec.counters.theta_accepted += r.accepted as u64;
            rec.counters.nonfinite_rejections += r.nonfinite as u64;
            if it < cfg.burnin {
                walk.adapt(r.accepted, &state.theta, RandomWalk::shape_phase(it, cfg.burnin));
            }
            centre_state(&mut state, &latent, model)?;
            if opts.scheme == Scheme::Interweaved {
                let r2 = update_theta_with(
                    &mut state,
                    &latent,
                    model,
                    &cfg.priors,
                    &walk_c,
                    None,
                    &first,
                    &mut rng,
                )?;
                rec.counters.centred_proposed += 1;
                rec.counters.centred_accepted += r2.accepted as u64;
                rec.counters.nonfinite_rejections += r2.nonfinite as u64;
                if it < cfg.burnin {
                    walk_c.adapt(r2.accepted, &state.theta, RandomWalk::shape_phase(it, cfg.burnin));
                }
                r2.log_target
            } else {
                r.log_target
            }
        };
        cfg.bounds.check(&state.theta)?;
        if cfg.keeps(it) {
            let mut row = state.theta.clone();
            row.push(tau);
            rec.push(it, &row, log_target);
            if err.record_latent {
                kept_latent.push(latent.values.clone());
            }
        }
    }
    rec.wall_clock_seconds = clock.seconds();
    Ok(ErrorChain {
        record: rec,
        latent: kept_latent,
    })
}
