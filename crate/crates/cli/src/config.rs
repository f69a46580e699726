//! Plain `key = value` run configuration with command-line overrides.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use exdiff_core::ea::DEFAULT_DELTA_FACTOR;
use exdiff_core::latent::{InitialPrior, TauPrior};
use exdiff_core::models;
use exdiff_core::proposal::Prior;
use exdiff_core::simulate::DEFAULT_FINE_STEPS;
use exdiff_core::{Error, Result, Scheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampler {
    Emcmc,
    Amcmc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub model: String,
    pub theta_true: Vec<f64>,
    pub n: usize,
    pub dt: f64,
    pub fine_steps: usize,
    pub sampler: Sampler,
    pub scheme: Scheme,
    pub lambda: f64,
    pub delta_factor: f64,
    pub m: usize,
    pub ibp: bool,
    pub iterations: usize,
    pub burnin: Option<usize>,
    pub thin: usize,
    pub seed: u64,
    pub theta_init: Option<Vec<f64>>,
    pub proposal_scales: Option<Vec<f64>>,
    pub priors: Option<Vec<Prior>>,
    pub error_model: bool,
    pub tau: f64,
    pub tau_prior: TauPrior,
    pub endpoint_scale: f64,
    pub initial_prior: Option<InitialPrior>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub m_ladder: Vec<usize>,
    pub ks_draws: usize,
    pub n_boot: usize,
}

/// Keys accepted in configuration files and `--set` overrides.
pub const KEYS: &[&str] = &[
    "model",
    "theta_true",
    "n",
    "dt",
    "fine_steps",
    "sampler",
    "scheme",
    "lambda",
    "delta_factor",
    "M",
    "ibp",
    "iterations",
    "burnin",
    "thin",
    "seed",
    "theta_init",
    "proposal_scales",
    "priors",
    "error_model",
    "tau",
    "tau_prior",
    "endpoint_scale",
    "initial_prior",
    "data",
    "out",
    "m_ladder",
    "ks_draws",
    "n_boot",
];

impl Default for Config {
    fn default() -> Self {
        Self {
            model: "pearson".into(),
            theta_true: models::default_theta("pearson").unwrap_or_default(),
            n: 1000,
            dt: 1.0,
            fine_steps: DEFAULT_FINE_STEPS,
            sampler: Sampler::Emcmc,
            scheme: Scheme::Centred,
            lambda: 0.0,
            delta_factor: DEFAULT_DELTA_FACTOR,
            m: 10,
            ibp: false,
            iterations: 10_000,
            burnin: None,
            thin: 1,
            seed: 1,
            theta_init: None,
            proposal_scales: None,
            priors: None,
            error_model: false,
            tau: 0.0,
            tau_prior: TauPrior::Reciprocal,
            endpoint_scale: 0.1,
            initial_prior: None,
            data: None,
            out: None,
            m_ladder: vec![5, 10, 20, 40],
            ks_draws: 500,
            n_boot: 1000,
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value '{value}' for key '{key}'"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(key, value))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value)),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl Config {
    /// Applies one `key`, `value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "model" => {
                if !models::KEYS.contains(&v) {
                    return Err(Error::Config(format!("unknown model '{v}'")));
                }
                if self.model != v {
                    self.theta_true = models::default_theta(v).unwrap_or_default();
                }
                self.model = v.into();
            }
            "theta_true" => self.theta_true = list(key, v)?,
            "n" => self.n = num(key, v)?,
            "dt" => self.dt = num(key, v)?,
            "fine_steps" => self.fine_steps = num(key, v)?,
            "sampler" => {
                self.sampler = match v {
                    "emcmc" => Sampler::Emcmc,
                    "amcmc" => Sampler::Amcmc,
                    _ => return Err(bad(key, v)),
                }
            }
            "scheme" => self.scheme = Scheme::parse(v).ok_or_else(|| bad(key, v))?,
            "lambda" => self.lambda = num(key, v)?,
            "delta_factor" => self.delta_factor = num(key, v)?,
            "M" | "m" => self.m = num(key, v)?,
            "ibp" => self.ibp = flag(key, v)?,
            "iterations" => self.iterations = num(key, v)?,
            "burnin" => self.burnin = Some(num(key, v)?),
            "thin" => self.thin = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "theta_init" => self.theta_init = Some(list(key, v)?),
            "proposal_scales" => self.proposal_scales = Some(list(key, v)?),
            "priors" => self.priors = Some(v.split(',').map(Prior::parse).collect::<Result<_>>()?),
            "error_model" => {
                self.error_model = match v {
                    "none" => false,
                    "gaussian" => true,
                    _ => return Err(bad(key, v)),
                }
            }
            "tau" => self.tau = num(key, v)?,
            "tau_prior" => self.tau_prior = TauPrior::parse(v)?,
            "endpoint_scale" => self.endpoint_scale = num(key, v)?,
            "initial_prior" => self.initial_prior = Some(InitialPrior::parse(v)?),
            "data" => self.data = Some(PathBuf::from(v)),
            "out" => self.out = Some(PathBuf::from(v)),
            "m_ladder" => self.m_ladder = list(key, v)?,
            "ks_draws" => self.ks_draws = num(key, v)?,
            "n_boot" => self.n_boot = num(key, v)?,
            other => return Err(Error::Config(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut c = Self::default();
        c.parse_text(&text)?;
        Ok(c)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{kv}' is not key=value")))?;
        self.set(k, v)
    }

    pub fn burnin(&self) -> usize {
        self.burnin.unwrap_or(self.iterations / 10)
    }

    /// Canonical text form; parsing it back reproduces the configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("model", self.model.clone());
        kv("theta_true", join(&self.theta_true));
        kv("n", self.n.to_string());
        kv("dt", self.dt.to_string());
        kv("fine_steps", self.fine_steps.to_string());
        kv(
            "sampler",
            match self.sampler {
                Sampler::Emcmc => "emcmc",
                Sampler::Amcmc => "amcmc",
            }
            .into(),
        );
        kv("scheme", self.scheme.name().into());
        kv("lambda", self.lambda.to_string());
        kv("delta_factor", self.delta_factor.to_string());
        kv("M", self.m.to_string());
        kv("ibp", self.ibp.to_string());
        kv("iterations", self.iterations.to_string());
        kv("burnin", self.burnin().to_string());
        kv("thin", self.thin.to_string());
        kv("seed", self.seed.to_string());
        if let Some(t) = &self.theta_init {
            kv("theta_init", join(t));
        }
        if let Some(p) = &self.proposal_scales {
            kv("proposal_scales", join(p));
        }
        if let Some(p) = &self.priors {
            kv("priors", p.iter().map(prior_text).collect::<Vec<_>>().join(","));
        }
        kv(
            "error_model",
            if self.error_model { "gaussian" } else { "none" }.into(),
        );
        kv("tau", self.tau.to_string());
        kv(
            "tau_prior",
            match self.tau_prior {
                TauPrior::Reciprocal => "reciprocal".into(),
                TauPrior::Fixed => "fixed".into(),
                TauPrior::InvGamma { shape, scale } => format!("invgamma:{shape}:{scale}"),
            },
        );
        kv("endpoint_scale", self.endpoint_scale.to_string());
        if let Some(p) = self.initial_prior {
            kv(
                "initial_prior",
                match p {
                    InitialPrior::Stationary => "stationary",
                    InitialPrior::Flat => "flat",
                }
                .into(),
            );
        }
        if let Some(d) = &self.data {
            kv("data", d.display().to_string());
        }
        kv("m_ladder", join(&self.m_ladder));
        kv("ks_draws", self.ks_draws.to_string());
        kv("n_boot", self.n_boot.to_string());
        s
    }
}

fn prior_text(p: &Prior) -> String {
    match *p {
        Prior::Flat => "flat".into(),
        Prior::Jeffreys => "jeffreys".into(),
        Prior::Exponential { rate } => format!("exp:{rate}"),
        Prior::Normal { mean, sd } => format!("normal:{mean}:{sd}"),
        Prior::InvGammaOnSquare { shape, scale } => format!("invgamma:{shape}:{scale}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = Config::default();
        c.parse_text("model = dwell\n# comment\nscheme = noncentred\nlambda = 2\nM = 40\nibp = true\npriors = flat,flat,jeffreys\n")
            .unwrap();
        assert_eq!(c.theta_true, vec![0.1, 2.0, 0.5]);
        let mut d = Config::default();
        d.parse_text(&c.to_text()).unwrap();
        assert_eq!(c.to_text(), d.to_text());
        assert_eq!(d.scheme, Scheme::Noncentred);
        assert_eq!(d.m, 40);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        let mut c = Config::default();
        assert!(c.set("colour", "red").unwrap_err().is_config());
        assert!(c.set("n", "many").unwrap_err().is_config());
        assert!(c.set("model", "lorenz").unwrap_err().is_config());
        assert!(c.apply_override("seed").unwrap_err().is_config());
        assert!(c.parse_text("seed 3").unwrap_err().is_config());
    }
}
