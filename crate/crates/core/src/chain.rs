//! Chain bookkeeping shared by all samplers.

use std::time::Instant;

use crate::error::{precondition, Result};
use crate::model::Diffusion;
use crate::proposal::{Bounds, Priors};

/// Settings common to every sampler.
#[derive(Clone, Debug)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
    pub theta_init: Vec<f64>,
    pub proposal_scales: Vec<f64>,
    pub priors: Priors,
    pub bounds: Bounds,
}

impl SamplerConfig {
    /// Defaults for `model`, starting from `theta_init`.
    pub fn new(model: &dyn Diffusion, theta_init: Vec<f64>, iterations: usize, seed: u64) -> Self {
        let p = theta_init.len();
        Self {
            iterations,
            burnin: iterations / 10,
            thin: 1,
            seed,
            theta_init,
            proposal_scales: vec![0.05; p],
            priors: Priors::default_for(model),
            bounds: Bounds::wide(model.positive()),
        }
    }

    pub fn validate(&self, model: &dyn Diffusion) -> Result<()> {
        let p = model.param_names().len();
        if self.iterations == 0 || self.thin == 0 {
            return precondition("iterations and thin must be positive");
        }
        if self.burnin >= self.iterations {
            return precondition("burn-in must be shorter than the run");
        }
        if self.theta_init.len() != p || self.proposal_scales.len() != p || self.priors.0.len() != p {
            return precondition(format!("model {} has {p} parameters", model.name()));
        }
        if self.bounds.lo.len() != p || self.bounds.hi.len() != p {
            return precondition("admissible box has the wrong dimension");
        }
        model.check_params(&self.theta_init)?;
        self.bounds.check(&self.theta_init)
    }

    pub fn kept_rows(&self) -> usize {
        (self.iterations - self.burnin) / self.thin
    }

    /// Whether iteration `it` (0-based) is stored.
    pub fn keeps(&self, it: usize) -> bool {
        it >= self.burnin && (it - self.burnin + 1).is_multiple_of(self.thin)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub theta_proposed: u64,
    pub theta_accepted: u64,
    /// Second (centred) parameter move of an interweaved sweep.
    pub centred_proposed: u64,
    pub centred_accepted: u64,
    pub nonfinite_rejections: u64,
    pub path_proposed: u64,
    pub path_accepted: u64,
    pub endpoint_proposed: u64,
    pub endpoint_accepted: u64,
    /// Exact-algorithm draws and the proposals they consumed.
    pub ea_draws: u64,
    pub ea_attempts: u64,
    /// Skeleton points over all accepted exact-algorithm draws.
    pub skeleton_points: u64,
}

fn rate(a: u64, b: u64) -> f64 {
    if b == 0 {
        f64::NAN
    } else {
        a as f64 / b as f64
    }
}

impl Counters {
    pub fn theta_acceptance(&self) -> f64 {
        rate(self.theta_accepted, self.theta_proposed)
    }
    pub fn path_acceptance(&self) -> f64 {
        rate(self.path_accepted, self.path_proposed)
    }
    pub fn endpoint_acceptance(&self) -> f64 {
        rate(self.endpoint_accepted, self.endpoint_proposed)
    }
    /// Fraction of exact-algorithm proposals that were accepted.
    pub fn ea_acceptance(&self) -> f64 {
        rate(self.ea_draws, self.ea_attempts)
    }
    /// Average skeleton size per accepted draw.
    pub fn mean_skeleton(&self) -> f64 {
        rate(self.skeleton_points, self.ea_draws)
    }
}

#[derive(Clone, Debug)]
pub struct ChainRecord {
    pub param_names: Vec<String>,
    pub iters: Vec<u64>,
    /// Kept rows of natural-scale parameters.
    pub draws: Vec<Vec<f64>>,
    pub log_post: Vec<f64>,
    pub counters: Counters,
    /// Total exact-algorithm proposals per observation interval.
    pub ea_attempts_per_interval: Vec<u64>,
    /// Exact-algorithm proposals and accepted draws in each iteration.
    pub ea_attempts_per_iter: Vec<u64>,
    pub ea_draws_per_iter: Vec<u64>,
    pub wall_clock_seconds: f64,
    pub seed: u64,
    pub config: Vec<(String, String)>,
}

impl ChainRecord {
    pub fn new(param_names: Vec<String>, intervals: usize, seed: u64) -> Self {
        Self {
            param_names,
            iters: vec![],
            draws: vec![],
            log_post: vec![],
            counters: Counters::default(),
            ea_attempts_per_interval: vec![0; intervals],
            ea_attempts_per_iter: vec![],
            ea_draws_per_iter: vec![],
            wall_clock_seconds: 0.0,
            seed,
            config: vec![],
        }
    }

    pub fn push(&mut self, it: usize, theta: &[f64], log_post: f64) {
        self.iters.push(it as u64);
        self.draws.push(theta.to_vec());
        self.log_post.push(log_post);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.param_names.iter().position(|n| n == name)?;
        Some(self.draws.iter().map(|r| r[k]).collect())
    }

    pub fn column_at(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|r| r[k]).collect()
    }

    /// Adds the attempt counts of one sweep's exact-algorithm draws.
    pub fn record_ea(&mut self, per_interval: &[(usize, u64)]) {
        let mut attempts = 0;
        for &(i, a) in per_interval {
            self.ea_attempts_per_interval[i] += a;
            attempts += a;
        }
        self.counters.ea_attempts += attempts;
        self.counters.ea_draws += per_interval.len() as u64;
        if let Some(last) = self.ea_attempts_per_iter.last_mut() {
            *last += attempts;
            *self.ea_draws_per_iter.last_mut().unwrap() += per_interval.len() as u64;
        }
    }

    pub fn start_iteration(&mut self) {
        self.ea_attempts_per_iter.push(0);
        self.ea_draws_per_iter.push(0);
    }
}

/// Wall-clock timer for a run.
pub struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch(Instant::now())
    }
    pub fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
