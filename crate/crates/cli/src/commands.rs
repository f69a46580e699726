//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use exdiff_core::diagnostics::{acf, ess, ks_bootstrap, mean, quantile, sd, thin_to};
use exdiff_core::ea::EaConfig;
use exdiff_core::models::{self, InitialState};
use exdiff_core::rng::child_seed;
use exdiff_core::{
    add_noise, run_amcmc, run_emcmc, run_emcmc_error, simulate_dataset, AmcmcOptions, ChainRecord, Diffusion,
    EmcmcOptions, Error, ErrorOptions, ModelSpec, ObservationSet, Result, SamplerConfig, Scheme,
};

use crate::config::{Config, Sampler};
use crate::io::{self, fmt_f64};

pub fn model_of(cfg: &Config) -> Result<ModelSpec> {
    models::by_key(&cfg.model, &cfg.theta_true)
}

pub fn sampler_config(cfg: &Config, model: &dyn Diffusion) -> Result<SamplerConfig> {
    let theta_init = cfg.theta_init.clone().unwrap_or_else(|| cfg.theta_true.clone());
    let mut sc = SamplerConfig::new(model, theta_init, cfg.iterations, cfg.seed);
    sc.burnin = cfg.burnin();
    sc.thin = cfg.thin;
    if let Some(p) = &cfg.proposal_scales {
        sc.proposal_scales = p.clone();
    } else {
        sc.proposal_scales = vec![0.1; sc.theta_init.len()];
    }
    if let Some(p) = &cfg.priors {
        sc.priors = exdiff_core::proposal::Priors(p.clone());
    }
    sc.validate(model).map_err(|e| Error::Config(e.to_string()))?;
    Ok(sc)
}

fn emcmc_options(cfg: &Config, scheme: Scheme) -> EmcmcOptions {
    EmcmcOptions {
        scheme,
        lambda: cfg.lambda,
        ea: EaConfig {
            delta_factor: cfg.delta_factor,
            ..EaConfig::default()
        },
    }
}

/// Simulated dataset and, under the error model, its noisy version.
pub struct Dataset {
    pub clean: ObservationSet,
    pub noisy: Option<ObservationSet>,
}

impl Dataset {
    /// The series the samplers condition on.
    pub fn observed(&self) -> &ObservationSet {
        self.noisy.as_ref().unwrap_or(&self.clean)
    }
}

pub fn simulate_from(cfg: &Config) -> Result<Dataset> {
    let model = model_of(cfg)?;
    let initial = models::default_initial(&cfg.model).unwrap_or(InitialState::Fixed(vec![0.0; model.dim()]));
    let clean = simulate_dataset(
        model.as_ref(),
        &cfg.theta_true,
        cfg.n,
        cfg.dt,
        cfg.fine_steps,
        &initial,
        cfg.seed,
    )?;
    let noisy = if cfg.error_model {
        Some(add_noise(&clean, cfg.tau, child_seed(cfg.seed, 1))?)
    } else {
        None
    };
    Ok(Dataset { clean, noisy })
}

/// The configured dataset file, or a fresh simulation if none is given.
pub fn observations(cfg: &Config) -> Result<ObservationSet> {
    match &cfg.data {
        Some(p) => io::read_dataset(p),
        None => Ok(simulate_from(cfg)?.observed().clone()),
    }
}

/// `data.csv` -> `data.clean.csv`
pub fn clean_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.clean.csv"))
}

fn meta_for(cfg: &Config) -> Vec<(String, String)> {
    let mut v = vec![("version".to_string(), env!("CARGO_PKG_VERSION").to_string())];
    for line in cfg.to_text().lines() {
        if let Some((k, val)) = line.split_once('=') {
            v.push((format!("config.{}", k.trim()), val.trim().to_string()));
        }
    }
    v
}

pub fn simulate(cfg: &Config) -> Result<PathBuf> {
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("data.csv"));
    let data = simulate_from(cfg)?;
    io::write_text(&out, &io::dataset_csv(data.observed()))?;
    if data.noisy.is_some() {
        io::write_text(&clean_path(&out), &io::dataset_csv(&data.clean))?;
    }
    io::write_meta(&io::meta_path(&out), &meta_for(cfg))?;
    Ok(out)
}

/// Runs the configured sampler on `obs`.
pub fn run_chain(
    cfg: &Config,
    obs: &ObservationSet,
    scheme: Scheme,
    sampler: Sampler,
    m: usize,
    ibp: bool,
    seed: u64,
) -> Result<ChainRecord> {
    let model = model_of(cfg)?;
    let mut sc = sampler_config(cfg, model.as_ref())?;
    sc.seed = seed;
    match (sampler, cfg.error_model) {
        (Sampler::Emcmc, false) => run_emcmc(model.as_ref(), obs, &sc, &emcmc_options(cfg, scheme)),
        (Sampler::Emcmc, true) => {
            let err = ErrorOptions {
                tau_init: if cfg.tau > 0.0 { cfg.tau } else { 0.1 },
                tau_prior: cfg.tau_prior,
                endpoint_scale: cfg.endpoint_scale,
                initial_prior: cfg.initial_prior,
                record_latent: false,
            };
            Ok(run_emcmc_error(model.as_ref(), obs, &sc, &emcmc_options(cfg, scheme), &err)?.record)
        }
        (Sampler::Amcmc, false) => run_amcmc(model.as_ref(), obs, &sc, &AmcmcOptions { m, ibp }),
        (Sampler::Amcmc, true) => Err(Error::Config(
            "the grid sampler has no observation-error model".into(),
        )),
    }
}

fn timing_text(rec: &ChainRecord) -> String {
    format!(
        "wall_clock_seconds = {}\nseconds_per_1000 = {}\n",
        rec.wall_clock_seconds,
        1000.0 * rec.wall_clock_seconds / rec.counters.theta_proposed.max(1) as f64
    )
}

/// `<path>.timing`
pub fn timing_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".timing");
    PathBuf::from(s)
}

fn write_chain(path: &Path, rec: &ChainRecord, cfg: &Config) -> Result<()> {
    io::write_text(path, &io::chain_csv(rec))?;
    io::write_meta(&io::meta_path(path), &io::chain_meta(rec, &cfg.to_text()))?;
    io::write_text(&timing_path(path), &timing_text(rec))
}

pub fn run(cfg: &Config) -> Result<(PathBuf, ChainRecord)> {
    let obs = observations(cfg)?;
    let rec = run_chain(cfg, &obs, cfg.scheme, cfg.sampler, cfg.m, cfg.ibp, cfg.seed)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("chain.csv"));
    write_chain(&out, &rec, cfg)?;
    Ok((out, rec))
}

/// Per-parameter summary of a chain file.
pub fn diagnose(input: &Path, out: Option<&Path>, max_lag: usize) -> Result<String> {
    let table = io::read_chain(input)?;
    if table.draws.len() < 10 {
        return Err(Error::Config(format!(
            "{} has fewer than 10 rows",
            input.display()
        )));
    }
    let lag = max_lag.min(table.draws.len() - 1);
    let mut summary = String::from("param,mean,sd,q025,q500,q975,ess,ess_constant\n");
    let mut acfs = vec![];
    for (k, name) in table.names.iter().enumerate() {
        let c = table.column(k);
        let e = ess(&c);
        let _ = writeln!(
            summary,
            "{name},{},{},{},{},{},{},{}",
            fmt_f64(mean(&c)),
            fmt_f64(sd(&c)),
            fmt_f64(quantile(&c, 0.025)),
            fmt_f64(quantile(&c, 0.5)),
            fmt_f64(quantile(&c, 0.975)),
            fmt_f64(e.value),
            e.constant
        );
        acfs.push(acf(&c, lag));
    }
    let mut acf_text = format!("lag,{}\n", table.names.join(","));
    for l in 0..=lag {
        acf_text.push_str(&l.to_string());
        for a in &acfs {
            acf_text.push(',');
            acf_text.push_str(&fmt_f64(a[l]));
        }
        acf_text.push('\n');
    }
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut s = input.as_os_str().to_owned();
        s.push(".diag.csv");
        PathBuf::from(s)
    });
    io::write_text(&out, &summary)?;
    let mut acf_path = out.as_os_str().to_owned();
    acf_path.push(".acf.csv");
    io::write_text(Path::new(&acf_path), &acf_text)?;
    Ok(summary)
}

/// One sampler in the comparison grid.
#[derive(Clone, Debug)]
pub struct Variant {
    pub label: String,
    pub sampler: Sampler,
    pub scheme: Scheme,
    pub m: usize,
    pub ibp: bool,
}

pub fn variants(cfg: &Config) -> Vec<Variant> {
    let mut v: Vec<Variant> = [Scheme::Centred, Scheme::Noncentred, Scheme::Interweaved]
        .into_iter()
        .map(|s| Variant {
            label: format!("emcmc-{}", s.name()),
            sampler: Sampler::Emcmc,
            scheme: s,
            m: 0,
            ibp: false,
        })
        .collect();
    for &m in &cfg.m_ladder {
        for ibp in [false, true] {
            v.push(Variant {
                label: format!("amcmc{}-{m}", if ibp { "-ibp" } else { "" }),
                sampler: Sampler::Amcmc,
                scheme: cfg.scheme,
                m,
                ibp,
            });
        }
    }
    v
}

#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub sampler: String,
    pub param: String,
    pub imputed: f64,
    pub mean: f64,
    pub sd: f64,
    pub ess_per_1000: f64,
    pub ks_p: Option<f64>,
    pub corr: Vec<f64>,
    pub seconds_per_1000: f64,
    pub ess_adj: f64,
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

/// Runs every sampler of the grid on one dataset and tabulates the results
/// against the exact sampler selected by `scheme`.
pub fn compare(cfg: &Config) -> Result<Vec<SummaryRow>> {
    if cfg.error_model {
        return Err(Error::Config("compare runs on fully observed data".into()));
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("compare"));
    let obs = observations(cfg)?;
    io::write_text(&dir.join("dataset.csv"), &io::dataset_csv(&obs))?;
    let grid = variants(cfg);
    let chains: Vec<ChainRecord> = grid
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            run_chain(
                cfg,
                &obs,
                v.scheme,
                v.sampler,
                v.m,
                v.ibp,
                child_seed(cfg.seed, i as u64),
            )
        })
        .collect::<Result<_>>()?;
    for (v, rec) in grid.iter().zip(&chains) {
        write_chain(&dir.join(format!("chain_{}.csv", v.label)), rec, cfg)?;
    }
    let reference = grid
        .iter()
        .position(|v| v.sampler == Sampler::Emcmc && v.scheme == cfg.scheme)
        .unwrap_or(0);
    let names = chains[0].param_names.clone();
    let mut rows = vec![];
    for (i, (v, rec)) in grid.iter().zip(&chains).enumerate() {
        if rec.draws.len() < 10 {
            return Err(Error::Config("too few kept draws to summarise".into()));
        }
        let iters = rec.counters.theta_proposed.max(1) as f64;
        let seconds_per_1000 = 1000.0 * rec.wall_clock_seconds / iters;
        let cols: Vec<Vec<f64>> = (0..names.len()).map(|k| rec.column_at(k)).collect();
        for (k, name) in names.iter().enumerate() {
            let c = &cols[k];
            let e = ess(c).value;
            let ks_p = (i != reference).then(|| {
                let a = thin_to(c, cfg.ks_draws);
                let b = thin_to(&chains[reference].column_at(k), cfg.ks_draws);
                ks_bootstrap(
                    &a,
                    &b,
                    cfg.n_boot,
                    child_seed(cfg.seed, 1000 + (i * names.len() + k) as u64),
                )
                .p
            });
            rows.push(SummaryRow {
                sampler: v.label.clone(),
                param: name.clone(),
                imputed: match v.sampler {
                    Sampler::Emcmc => rec.counters.mean_skeleton(),
                    Sampler::Amcmc => v.m as f64,
                },
                mean: mean(c),
                sd: sd(c),
                ess_per_1000: 1000.0 * e / c.len() as f64,
                ks_p,
                corr: cols.iter().map(|o| correlation(c, o)).collect(),
                seconds_per_1000,
                ess_adj: e / rec.wall_clock_seconds.max(f64::MIN_POSITIVE),
            });
        }
    }
    let mut summary = String::from("sampler,param,M,mean,sd,ess_per_1000,ks_p");
    for n in &names {
        let _ = write!(summary, ",corr_{n}");
    }
    summary.push('\n');
    let mut timing = String::from("sampler,param,seconds_per_1000,ess_adj\n");
    for r in &rows {
        let _ = write!(
            summary,
            "{},{},{},{},{},{},{}",
            r.sampler,
            r.param,
            fmt_f64(r.imputed),
            fmt_f64(r.mean),
            fmt_f64(r.sd),
            fmt_f64(r.ess_per_1000),
            r.ks_p.map_or("ref".to_string(), fmt_f64)
        );
        for c in &r.corr {
            let _ = write!(summary, ",{}", fmt_f64(*c));
        }
        summary.push('\n');
        let _ = writeln!(
            timing,
            "{},{},{},{}",
            r.sampler,
            r.param,
            fmt_f64(r.seconds_per_1000),
            fmt_f64(r.ess_adj)
        );
    }
    io::write_text(&dir.join("summary.csv"), &summary)?;
    io::write_text(&dir.join("timing.csv"), &timing)?;
    io::write_meta(&dir.join("compare.meta"), &meta_for(cfg))?;
    Ok(rows)
}
