//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its criterion
//! and fails when the criterion is not met.
//!
//! The long-running criteria (7, 8, 9) take tens of minutes on one core.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use exdiff_core::bridge::{band_probability, sample_bridge_given_layer, sample_layer, Layer};
use exdiff_core::diagnostics::{batch_means_se, ess, ks_bootstrap, ks_one_sample, mean, quantile};
use exdiff_core::ea::{acceptance_prob_mc, ea_sample_interval_with, interval_rate, Heights};
use exdiff_core::emcmc::centred_interval_factor;
use exdiff_core::model::{psi, validate_model, Region};
use exdiff_core::models::{default_initial, Dwell, Mvwell, OrnsteinUhlenbeck, Pearson};
use exdiff_core::rng::{child_seed, stream, Purpose};
use exdiff_core::{
    add_noise, run_amcmc, run_emcmc, run_emcmc_error, simulate_dataset, AmcmcOptions, ChainRecord, Diffusion,
    EaConfig, EmcmcOptions, ErrorOptions, InitialPrior, ObservationSet, SamplerConfig, Scheme, TauPrior,
};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

const PEARSON: [f64; 3] = [0.5, 1.0, 0.5];
const DWELL: [f64; 3] = [0.1, 2.0, 0.5];
const MVWELL: [f64; 5] = [0.5, 2.0, 0.5, 1.0, 0.5];

fn verdict(id: u32, name: &str, ok: bool, detail: &str) {
    let line = format!(
        "{} criterion {id:>2} ({name}): {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = writeln!(std::io::stderr().lock(), "{line}");
    assert!(ok, "{line}");
}

fn note(text: &str) {
    let _ = writeln!(std::io::stderr().lock(), "    {text}");
}

fn normal_cdf(mean: f64, var: f64) -> impl Fn(f64) -> f64 {
    let n = Normal::new(mean, var.sqrt()).unwrap();
    move |x| n.cdf(x)
}

/// Per-parameter draws thinned by the slowest-mixing parameter, keeping at least 500.
fn thinned(rec: &ChainRecord) -> (Vec<Vec<f64>>, f64) {
    let n = rec.draws.len();
    let p = rec.param_names.len();
    let min_ess = (0..p)
        .map(|k| ess(&rec.column_at(k)).value)
        .fold(f64::INFINITY, f64::min);
    let step = ((n as f64 / min_ess).ceil() as usize).clamp(1, (n / 500).max(1));
    let cols = (0..p)
        .map(|k| rec.column_at(k).into_iter().step_by(step).collect())
        .collect();
    (cols, min_ess)
}

/// Bootstrap KS p-values per parameter between two chains.
fn ks_chains(a: &ChainRecord, b: &ChainRecord, seed: u64) -> Vec<f64> {
    let (ta, _) = thinned(a);
    let (tb, _) = thinned(b);
    ta.iter()
        .zip(&tb)
        .enumerate()
        .map(|(k, (x, y))| ks_bootstrap(x, y, 1000, child_seed(seed, k as u64)).p)
        .collect()
}

fn fmt_ps(ps: &[f64]) -> String {
    ps.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join("/")
}

fn config(
    model: &dyn Diffusion,
    theta: &[f64],
    iterations: usize,
    scales: &[f64],
    seed: u64,
) -> SamplerConfig {
    let mut cfg = SamplerConfig::new(model, theta.to_vec(), iterations, seed);
    cfg.proposal_scales = scales.to_vec();
    cfg
}

fn emcmc(
    model: &dyn Diffusion,
    obs: &ObservationSet,
    cfg: &SamplerConfig,
    scheme: Scheme,
    lambda: f64,
) -> ChainRecord {
    run_emcmc(
        model,
        obs,
        cfg,
        &EmcmcOptions {
            scheme,
            lambda,
            ea: EaConfig::default(),
        },
    )
    .unwrap()
}

fn amcmc(
    model: &dyn Diffusion,
    obs: &ObservationSet,
    cfg: &SamplerConfig,
    m: usize,
    ibp: bool,
) -> ChainRecord {
    run_amcmc(model, obs, cfg, &AmcmcOptions { m, ibp }).unwrap()
}

/// Minimises `f` over a box by a coarse grid followed by repeated local zooming.
fn grid_minimise(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], coarse: usize) -> (f64, Vec<f64>) {
    let d = lo.len();
    let (lo0, hi0) = (lo, hi);
    let mut lo = lo.to_vec();
    let mut hi = hi.to_vec();
    let mut best = (f64::INFINITY, vec![0.0; d]);
    let mut n = coarse;
    for _round in 0..150 {
        let mut idx = vec![0usize; d];
        let mut point = vec![0.0; d];
        loop {
            for c in 0..d {
                point[c] = lo[c] + (hi[c] - lo[c]) * idx[c] as f64 / n as f64;
            }
            let v = f(&point);
            if v < best.0 {
                best = (v, point.clone());
            }
            let mut c = 0;
            while c < d {
                idx[c] += 1;
                if idx[c] <= n {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
            if c == d {
                break;
            }
        }
        for c in 0..d {
            let cell = (hi[c] - lo[c]) / n as f64;
            lo[c] = (best.1[c] - 4.0 * cell).max(lo0[c]);
            hi[c] = (best.1[c] + 4.0 * cell).min(hi0[c]);
        }
        n = 16;
    }
    best
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn criterion_01_model_validation() {
    let mut rng = stream(101, Purpose::Oracle, 0, 0);
    let cases: [(&dyn Diffusion, Vec<Vec<f64>>, f64); 3] = [
        (
            &Pearson,
            vec![PEARSON.to_vec(), vec![0.3, -0.5, 0.8], vec![1.2, 2.0, 0.3]],
            6.0,
        ),
        (
            &Dwell,
            vec![DWELL.to_vec(), vec![0.3, 1.0, 0.8], vec![0.05, 3.0, 0.3]],
            6.0,
        ),
        (&Mvwell, vec![MVWELL.to_vec(), vec![1.0, 1.0, 0.3, 2.0, 0.8]], 5.0),
    ];
    let mut ok = true;
    let mut parts = vec![];
    for (model, thetas, half_width) in cases {
        let report = validate_model(model, &thetas, 100_000, half_width, &mut rng).unwrap();
        let pass = report.passes(1e-6);
        ok &= pass;
        let violations: usize = report.entries.iter().map(|e| e.rate_violations).sum();
        let grad = report
            .entries
            .iter()
            .map(|e| e.max_grad_discrepancy)
            .fold(0.0, f64::max);
        parts.push(format!(
            "{} violations={violations} grad={grad:.1e}",
            report.model
        ));
    }
    verdict(1, "model validation", ok, &parts.join("; "));
}

#[test]
fn criterion_02_closed_form_bounds() {
    let mut lines = vec![];
    let mut ok = true;
    let mut check = |what: &str, value: f64, oracle: f64| {
        let r = rel(value, oracle);
        let pass = r <= 1e-6;
        ok &= pass;
        lines.push(format!(
            "{what}: closed {value:.8} oracle {oracle:.8} rel {r:.1e} {}",
            if pass { "ok" } else { "MISMATCH" }
        ));
    };

    // Pearson: global bounds; oracles are the infimum of psi and the supremum of phi.
    let pearson_psi = |x: &[f64]| psi(&Pearson, x, &PEARSON);
    let (inf_p, _) = grid_minimise(&pearson_psi, &[-80.0], &[80.0], 20_000);
    let (neg_sup_p, _) = grid_minimise(&|x: &[f64]| -pearson_psi(x), &[-80.0], &[80.0], 20_000);
    let l_p = Pearson.lower_bound(&PEARSON);
    check("pearson l", l_p, inf_p);
    check(
        "pearson r",
        Pearson.rate(Region::Global, &PEARSON).unwrap(),
        -neg_sup_p - inf_p,
    );
    let pearson_valid = l_p <= inf_p && Pearson.rate(Region::Global, &PEARSON).unwrap() >= -neg_sup_p - l_p;

    // Double well: l against the infimum of psi; the box rate against the
    // maximum of the convex majorant over the box, less the oracle infimum.
    let dwell_psi = |x: &[f64]| psi(&Dwell, x, &DWELL);
    let (inf_d, _) = grid_minimise(&dwell_psi, &[-10.0], &[10.0], 20_000);
    check("dwell l", Dwell.lower_bound(&DWELL), inf_d);
    let p = exdiff_core::models::DwellParams::from_slice(&DWELL);
    for (lo, hi) in [(-0.5f64.sqrt(), 0.5f64.sqrt()), (1.5, 4.2), (-3.0, 2.0)] {
        let (neg, _) = grid_minimise(
            &|u: &[f64]| -exdiff_core::models::dwell::g(p, u[0]),
            &[lo],
            &[hi],
            2000,
        );
        let rate = Dwell.rate(Region::Box { lo: &[lo], hi: &[hi] }, &DWELL).unwrap();
        check(&format!("dwell r[{lo:.2},{hi:.2}]"), rate, -neg - inf_d);
    }

    // Bivariate well: l against a 2-D minimisation; box rates against a 2-D maximisation.
    let mv_psi = |x: &[f64]| psi(&Mvwell, x, &MVWELL);
    let (inf_m, _) = grid_minimise(&mv_psi, &[-12.0, -12.0], &[12.0, 12.0], 600);
    check("mvwell l", Mvwell.lower_bound(&MVWELL), inf_m);
    for (lo, hi) in [
        ([-1.0, -1.0], [1.0, 1.0]),
        ([0.5, 2.0], [3.0, 4.0]),
        ([-4.0, -1.5], [-2.0, 3.5]),
    ] {
        let (neg, _) = grid_minimise(&|x: &[f64]| -mv_psi(x), &lo, &hi, 300);
        let rate = Mvwell.rate(Region::Box { lo: &lo, hi: &hi }, &MVWELL).unwrap();
        check(&format!("mvwell r{lo:?}x{hi:?}"), rate, -neg - inf_m);
    }
    for l in &lines {
        note(l);
    }
    let detail = format!(
        "{} of {} bound checks within 1e-6{}",
        lines.iter().filter(|l| l.ends_with("ok")).count(),
        lines.len(),
        if pearson_valid {
            "; pearson closed forms are valid but not tight bounds"
        } else {
            ""
        }
    );
    verdict(2, "closed-form bounds", ok, &detail);
}

/// Probability that a bridge stays in `(lo, hi)` by simulation on a grid, with
/// the exact per-step crossing probability of each barrier given the grid values.
#[allow(clippy::too_many_arguments)]
fn band_mc(lo: f64, hi: f64, x: f64, y: f64, t: f64, steps: usize, paths: usize, seed: u64) -> (f64, f64) {
    let mut rng = stream(seed, Purpose::Oracle, 3, 0);
    let h = t / steps as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..paths {
        let mut prev = x;
        let mut w = 1.0;
        for k in 1..=steps {
            let s = k as f64 * h;
            let next = if k == steps {
                y
            } else {
                let span = t - (s - h);
                let m = prev + h / span * (y - prev);
                let var = h * (t - s) / span;
                m + var.sqrt() * rng.sample::<f64, _>(StandardNormal)
            };
            if next <= lo || next >= hi {
                w = 0.0;
                break;
            }
            let cross_lo = (-2.0 * (prev - lo) * (next - lo) / h).exp();
            let cross_hi = (-2.0 * (hi - prev) * (hi - next) / h).exp();
            w *= (1.0 - cross_lo - cross_hi).max(0.0);
            prev = next;
        }
        s1 += w;
        s2 += w * w;
    }
    let n = paths as f64;
    let m = s1 / n;
    (m, ((s2 / n - m * m) / (n - 1.0)).sqrt())
}

#[test]
fn criterion_03_bridge_kernels() {
    let bands = [
        (-1.0, 1.0, 0.0, 0.0, 1.0),
        (-0.5, 0.5, 0.0, 0.0, 1.0),
        (-0.4, 1.3, 0.2, 0.9, 1.0),
        (-2.0, 0.3, -1.0, 0.0, 2.0),
        (0.0, 1.0, 0.5, 0.5, 0.3),
        (-0.8, 0.8, 0.7, -0.7, 0.5),
        (-1.5, 2.5, 0.0, 2.0, 3.0),
        (-0.3, 0.3, 0.1, -0.1, 0.1),
        (1.0, 4.0, 1.5, 3.5, 2.0),
        (-1.2, 0.4, 0.0, -0.5, 0.7),
    ];
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (k, &(lo, hi, x, y, t)) in bands.iter().enumerate() {
        let exact = band_probability(lo, hi, x, y, t, 1e-12).unwrap();
        let (coarse, _) = band_mc(lo, hi, x, y, t, 50, 20_000, 2 * k as u64);
        let (fine, se) = band_mc(lo, hi, x, y, t, 400, 100_000, 2 * k as u64 + 1);
        let z = (fine - exact).abs() / se.max(1e-12);
        worst = worst.max(z);
        ok &= z < 3.0;
        note(&format!("band ({lo},{hi}) x={x} y={y} t={t}: series {exact:.5} mc {fine:.5}±{se:.5} (coarse grid {coarse:.5})"));
    }

    // Drawing a layer then the bridge given the layer must reproduce the plain bridge marginal.
    let (x, y, t, s) = (0.3, -0.2, 1.0, 0.37);
    let delta = EaConfig::default().delta(t);
    let mut rng = stream(303, Purpose::Oracle, 0, 0);
    let draws: Vec<f64> = (0..5000)
        .map(|_| {
            let layer = sample_layer(&[x], &[y], t, delta, &mut rng).unwrap();
            sample_bridge_given_layer(&[s], &layer, &[x], &[y], t, 1_000_000, &mut rng).unwrap()[0]
        })
        .collect();
    let (_, p_mix) = ks_one_sample(&draws, normal_cdf(x + s / t * (y - x), s * (t - s) / t));
    ok &= p_mix > 0.01;
    verdict(
        3,
        "bridge kernels",
        ok,
        &format!("10 bands, worst |z|={worst:.2}; layer mixture KS p={p_mix:.3}"),
    );
}

/// Empirical acceptance rate from repeated exact draws, with its standard error.
fn empirical_acceptance(
    model: &dyn Diffusion,
    x: f64,
    y: f64,
    theta: &[f64],
    draws: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = stream(seed, Purpose::Oracle, 4, 0);
    let cfg = EaConfig::default();
    let attempts: u64 = (0..draws)
        .map(|_| {
            ea_sample_interval_with(
                model,
                &[x],
                &[y],
                1.0,
                theta,
                0.0,
                Heights::Off,
                &[],
                &cfg,
                &mut rng,
            )
            .unwrap()
            .0
            .attempts
        })
        .sum();
    let p = draws as f64 / attempts as f64;
    (p, p * ((1.0 - p) / draws as f64).sqrt())
}

#[test]
fn criterion_04_exact_algorithm_law() {
    let ou = OrnsteinUhlenbeck;
    let theta = [1.0, 1.0];
    let (x, y, t) = (0.8, -0.4, 1.0);
    let cfg = EaConfig::default();
    let mut rng = stream(404, Purpose::Oracle, 0, 0);
    let mids: Vec<f64> = (0..5000)
        .map(|_| {
            let (_, extra) = ea_sample_interval_with(
                &ou,
                &[x],
                &[y],
                t,
                &theta,
                0.0,
                Heights::Off,
                &[t / 2.0],
                &cfg,
                &mut rng,
            )
            .unwrap();
            extra[0] + 0.5 * (x + y)
        })
        .collect();
    let (m, v) = OrnsteinUhlenbeck::bridge_moments(theta[0], x, y, t, t / 2.0);
    let (_, p_ou) = ks_one_sample(&mids, normal_cdf(m, v));
    let mut ok = p_ou > 0.01;
    let mut detail = format!("OU midpoint KS p={p_ou:.3}");

    let dwell_x = 1.5 / DWELL[2];
    let cases: [(&str, &dyn Diffusion, &[f64], f64); 2] = [
        ("pearson", &Pearson, &PEARSON, 0.0),
        ("dwell", &Dwell, &DWELL, dwell_x),
    ];
    for (k, (name, model, th, x0)) in cases.into_iter().enumerate() {
        let (p_emp, se_emp) = empirical_acceptance(model, x0, x0, th, 20_000, k as u64);
        let mc = acceptance_prob_mc(model, &[x0], &[x0], 1.0, th, 100_000, 1000, &mut rng).unwrap();
        let z = (p_emp - mc.mean).abs() / (se_emp * se_emp + mc.stderr * mc.stderr).sqrt();
        ok &= z < 3.0;
        detail.push_str(&format!(
            "; {name} empirical {p_emp:.4}±{se_emp:.4} vs mc {:.4}±{:.4}",
            mc.mean, mc.stderr
        ));
    }
    verdict(4, "exact algorithm law", ok, &detail);
}

/// Value of a piecewise-linear path on a uniform grid.
fn interpolate(grid: &[f64], t: f64, s: f64) -> f64 {
    let steps = grid.len() - 1;
    let u = s / t * steps as f64;
    let k = (u.floor() as usize).min(steps - 1);
    let w = u - k as f64;
    grid[k] * (1.0 - w) + grid[k + 1] * w
}

#[test]
fn criterion_05_marginalisation_identity() {
    const STEPS: usize = 4000;
    const DRAWS: usize = 100_000;
    let mut rng = stream(505, Purpose::Oracle, 0, 0);
    let cfg = EaConfig::default();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for pair in 0..20 {
        let ea3 = pair % 2 == 1;
        let model: &dyn Diffusion = if ea3 { &Dwell } else { &Pearson };
        let theta: Vec<f64> = if ea3 {
            vec![
                rng.random_range(0.05..0.3),
                rng.random_range(1.0..3.0),
                rng.random_range(0.3..0.8),
            ]
        } else {
            vec![
                rng.random_range(0.3..0.8),
                rng.random_range(0.5..1.5),
                rng.random_range(0.3..0.8),
            ]
        };
        let t = rng.random_range(0.5..1.5);
        let (x, y) = if ea3 {
            (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0))
        } else {
            (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
        };
        let lambda = if pair % 4 < 2 { 0.0 } else { 1.0 };
        // Pinned Brownian path on a fine grid.
        let h = t / STEPS as f64;
        let mut tilde = vec![0.0; STEPS + 1];
        for k in 1..STEPS {
            let s = k as f64 * h;
            let span = t - (s - h);
            let m = tilde[k - 1] * (1.0 - h / span);
            tilde[k] = m + (h * (t - s) / span).sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
        let layer = ea3.then(|| {
            let delta = cfg.delta(t);
            let reach = tilde.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            Layer::new(
                vec![((reach / delta).ceil() as u32).max(1)],
                delta,
                &[0.0],
                &[0.0],
            )
        });
        let l = model.lower_bound(&theta);
        let phi_at = |s: f64| {
            let u = interpolate(&tilde, t, s) + x + s / t * (y - x);
            psi(model, &[u], &theta) - l
        };
        let integral: f64 = (0..STEPS)
            .map(|k| {
                let a = k as f64 * h;
                h / 6.0 * (phi_at(a) + 4.0 * phi_at(a + 0.5 * h) + phi_at(a + h))
            })
            .sum();
        let target = (-integral).exp();

        // Marks from a Poisson process at the dominating rate, reweighted to the unit-rate reference.
        let rate = interval_rate(model, layer.as_ref(), &[x], &[y], &theta, lambda).unwrap();
        let pois = Poisson::new(rate * t).unwrap();
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..DRAWS {
            let kappa = pois.sample(&mut rng) as usize;
            let mut psis: Vec<f64> = (0..kappa).map(|_| rng.random_range(0.0..t)).collect();
            psis.sort_by(f64::total_cmp);
            let values: Vec<f64> = psis.iter().map(|&s| interpolate(&tilde, t, s)).collect();
            let factor = centred_interval_factor(
                model,
                layer.as_ref(),
                &psis,
                &values,
                &[x],
                &[y],
                t,
                &theta,
                l,
                lambda,
            )
            .unwrap();
            let w = (t + factor + (rate - 1.0) * t - kappa as f64 * rate.ln()).exp();
            s1 += w;
            s2 += w * w;
        }
        let n = DRAWS as f64;
        let m = s1 / n;
        let se = ((s2 / n - m * m) / (n - 1.0)).sqrt();
        let z = (m - target).abs() / se.max(1e-15);
        worst = worst.max(z);
        ok &= z < 3.0;
    }
    verdict(
        5,
        "marginalisation identity",
        ok,
        &format!("20 pairs, worst |z|={worst:.2}"),
    );
}

fn pearson_data(n: usize, seed: u64) -> ObservationSet {
    simulate_dataset(
        &Pearson,
        &PEARSON,
        n,
        1.0,
        1024,
        &default_initial("pearson").unwrap(),
        seed,
    )
    .unwrap()
}

/// Ratio of accepted to proposed exact-algorithm draws with a batch-means standard error.
fn ea_rate(rec: &ChainRecord) -> (f64, f64) {
    let draws: u64 = rec.ea_draws_per_iter.iter().sum();
    let attempts: u64 = rec.ea_attempts_per_iter.iter().sum();
    let p = draws as f64 / attempts as f64;
    let batches = 50;
    let size = rec.ea_draws_per_iter.len() / batches;
    let ratios: Vec<f64> = (0..batches)
        .map(|b| {
            let r = b * size..(b + 1) * size;
            let d: u64 = rec.ea_draws_per_iter[r.clone()].iter().sum();
            let a: u64 = rec.ea_attempts_per_iter[r].iter().sum();
            d as f64 / a as f64
        })
        .collect();
    (p, batch_means_se(&ratios, batches))
}

#[test]
fn criterion_06_lambda_invariance() {
    let obs = pearson_data(200, 606);
    let cfg = config(&Pearson, &PEARSON, 50_000, &[0.1, 0.1, 0.1], 606);
    let a = emcmc(&Pearson, &obs, &cfg, Scheme::Centred, 0.0);
    let b = emcmc(&Pearson, &obs, &cfg, Scheme::Centred, 5.0);
    let ps = ks_chains(&a, &b, 606);
    let (pa, sa) = ea_rate(&a);
    let (pb, sb) = ea_rate(&b);
    let z = (pa - pb).abs() / (sa * sa + sb * sb).sqrt();
    let ok = ps.iter().all(|&p| p > 0.01) && z < 3.0;
    verdict(
        6,
        "lambda invariance",
        ok,
        &format!(
            "KS p={} ; EA acceptance {pa:.4}±{sa:.4} vs {pb:.4}±{sb:.4}",
            fmt_ps(&ps)
        ),
    );
}

#[test]
fn criterion_07_cross_sampler_agreement() {
    let obs = pearson_data(300, 707);
    let cfg = config(&Pearson, &PEARSON, 100_000, &[0.1, 0.1, 0.1], 707);
    let chains: Vec<(&str, ChainRecord)> = vec![
        ("centred", emcmc(&Pearson, &obs, &cfg, Scheme::Centred, 0.0)),
        ("noncentred", emcmc(&Pearson, &obs, &cfg, Scheme::Noncentred, 0.0)),
        (
            "interweaved",
            emcmc(&Pearson, &obs, &cfg, Scheme::Interweaved, 0.0),
        ),
        ("amcmc-ibp-40", amcmc(&Pearson, &obs, &cfg, 40, true)),
    ];
    let mut ok = true;
    let mut worst = 1.0f64;
    for (name, rec) in &chains {
        let (_, min_ess) = thinned(rec);
        note(&format!(
            "{name}: means {:.4}/{:.4}/{:.4}, min ESS {min_ess:.0}, {:.0}s",
            mean(&rec.column_at(0)),
            mean(&rec.column_at(1)),
            mean(&rec.column_at(2)),
            rec.wall_clock_seconds
        ));
        ok &= min_ess >= 500.0;
    }
    for i in 0..chains.len() {
        for j in i + 1..chains.len() {
            let ps = ks_chains(&chains[i].1, &chains[j].1, child_seed(707, (i * 10 + j) as u64));
            note(&format!(
                "{} vs {}: KS p={}",
                chains[i].0,
                chains[j].0,
                fmt_ps(&ps)
            ));
            worst = ps.iter().copied().fold(worst, f64::min);
        }
    }
    ok &= worst > 0.01;
    let plain = amcmc(&Pearson, &obs, &cfg, 5, false);
    let bias = ks_chains(&chains[0].1, &plain, 7070);
    let detected = bias.iter().any(|&p| p < 0.01);
    ok &= detected;
    verdict(
        7,
        "cross-sampler agreement",
        ok,
        &format!(
            "min pairwise KS p={worst:.3}; plain M=5 vs centred KS p={}",
            fmt_ps(&bias)
        ),
    );
}

fn covers(xs: &[f64], truth: f64) -> bool {
    quantile(xs, 0.025) <= truth && truth <= quantile(xs, 0.975)
}

#[test]
fn criterion_08_dwell_end_to_end() {
    let init = default_initial("dwell").unwrap();
    let scales = [0.1, 0.05, 0.05];
    let mut ok = true;
    let mut covered = 0usize;
    let mut total = 0usize;
    let mut replicate_ok = true;
    let mut ks = String::new();
    for rep in 0..10u64 {
        let seed = child_seed(808, rep);
        let obs = simulate_dataset(&Dwell, &DWELL, 200, 1.0, 1024, &init, seed).unwrap();
        let iterations = if rep == 0 { 100_000 } else { 20_000 };
        let cfg = config(&Dwell, &DWELL, iterations, &scales, seed);
        let exact = emcmc(&Dwell, &obs, &cfg, Scheme::Noncentred, 2.0);
        let hits = (0..3).filter(|&k| covers(&exact.column_at(k), DWELL[k])).count();
        covered += hits;
        total += 3;
        replicate_ok &= hits >= 2;
        note(&format!(
            "replicate {rep}: {hits}/3 covered, {:.0}s",
            exact.wall_clock_seconds
        ));
        if rep == 0 {
            let approx = amcmc(&Dwell, &obs, &cfg, 40, true);
            let ps = ks_chains(&exact, &approx, seed);
            ok &= ps.iter().all(|&p| p > 0.01);
            ks = fmt_ps(&ps);
        }
    }
    let share = covered as f64 / total as f64;
    ok &= replicate_ok && share >= 0.9;
    verdict(
        8,
        "double-well end to end",
        ok,
        &format!(
            "KS p={ks}; coverage {covered}/{total} ({:.0}%), every replicate >=2/3: {replicate_ok}",
            share * 100.0
        ),
    );
}

#[test]
fn criterion_09_error_model() {
    const TAU: f64 = 0.5;
    let init = default_initial("dwell").unwrap();
    let scales = [0.1, 0.05, 0.05];
    let opts = EmcmcOptions::default();
    let mut hits = 0;
    for rep in 0..10u64 {
        let seed = child_seed(909, rep);
        let clean = simulate_dataset(&Dwell, &DWELL, 200, 1.0, 1024, &init, seed).unwrap();
        let z = add_noise(&clean, TAU, child_seed(seed, 1)).unwrap();
        let cfg = config(&Dwell, &DWELL, 12_000, &scales, seed);
        let err = ErrorOptions {
            tau_init: TAU,
            ..Default::default()
        };
        let chain = run_emcmc_error(&Dwell, &z, &cfg, &opts, &err).unwrap();
        let tau = chain.record.column("tau").unwrap();
        let hit = covers(&tau, TAU);
        hits += usize::from(hit);
        note(&format!(
            "replicate {rep}: tau 95% interval [{:.3}, {:.3}], {:.0}s",
            quantile(&tau, 0.025),
            quantile(&tau, 0.975),
            chain.record.wall_clock_seconds
        ));
    }

    // Vanishing noise: the latent sampler with tau held tiny against the fully observed sampler.
    let seed = 9090;
    let clean = simulate_dataset(&Dwell, &DWELL, 200, 1.0, 1024, &init, seed).unwrap();
    let cfg = config(&Dwell, &DWELL, 40_000, &scales, seed);
    let full = emcmc(&Dwell, &clean, &cfg, Scheme::Centred, 0.0);
    let err = ErrorOptions {
        tau_init: 1e-4,
        tau_prior: TauPrior::Fixed,
        endpoint_scale: 1e-4,
        // The fully observed sampler puts no prior on the first value.
        initial_prior: Some(InitialPrior::Flat),
        record_latent: false,
    };
    let mut limit = run_emcmc_error(&Dwell, &clean, &cfg, &opts, &err).unwrap().record;
    limit.param_names.pop();
    limit.draws.iter_mut().for_each(|r| {
        r.pop();
    });
    let ps = ks_chains(&full, &limit, seed);
    let ok = hits >= 9 && ps.iter().all(|&p| p > 0.01);
    verdict(
        9,
        "error model",
        ok,
        &format!("tau covered in {hits}/10; tiny-noise limit KS p={}", fmt_ps(&ps)),
    );
}

fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, Purpose::Oracle, 10, 0);
    let innovation = (1.0 - phi * phi).sqrt();
    let mut x: f64 = rng.sample(StandardNormal);
    (0..n)
        .map(|_| {
            x = phi * x + innovation * rng.sample::<f64, _>(StandardNormal);
            x
        })
        .collect()
}

#[test]
fn criterion_10_diagnostics_calibration() {
    let n = 100_000;
    let phi = 0.9;
    let estimate = ess(&ar1(phi, n, 1)).value;
    let analytic = n as f64 * (1.0 - phi) / (1.0 + phi);
    let ess_ok = rel(estimate, analytic) <= 0.3;

    let mut rng = stream(1010, Purpose::Oracle, 0, 0);
    let mut draw = |shift: f64| -> Vec<f64> {
        (0..500)
            .map(|_| shift + rng.sample::<f64, _>(StandardNormal))
            .collect()
    };
    let mut above = 0;
    for rep in 0..100u64 {
        let (a, b) = (draw(0.0), draw(0.0));
        if ks_bootstrap(&a, &b, 200, rep).p > 0.05 {
            above += 1;
        }
    }
    let (a, b) = (draw(0.0), draw(3.0));
    let p_alt = ks_bootstrap(&a, &b, 1000, 7).p;
    let ok = ess_ok && above >= 90 && p_alt < 0.01;
    verdict(
        10,
        "diagnostics calibration",
        ok,
        &format!(
            "AR(1) ESS {estimate:.0} vs {analytic:.0}; null p>0.05 in {above}/100; separated p={p_alt:.3}"
        ),
    );
}

/// Snapshot of every file under `dir` except wall-clock timing files.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let name = p.strip_prefix(dir).unwrap().display().to_string();
            if name.ends_with(".timing") || name.ends_with("timing.csv") {
                continue;
            }
            out.insert(name, fs::read(&p).unwrap());
        }
    }
    out
}

fn run_all_subcommands(dir: &Path) {
    let p = |name: &str| dir.join(name).display().to_string();
    let cfg_path = p("run.cfg");
    fs::write(
        &cfg_path,
        "model = pearson\nn = 30\niterations = 300\nseed = 11\nm_ladder = 5\nks_draws = 50\nn_boot = 50\n",
    )
    .unwrap();
    let calls: Vec<Vec<String>> = vec![
        vec![
            "simulate".into(),
            "--config".into(),
            cfg_path.clone(),
            "--out".into(),
            p("data.csv"),
        ],
        vec![
            "run".into(),
            "--config".into(),
            cfg_path.clone(),
            "--data".into(),
            p("data.csv"),
            "--out".into(),
            p("chain.csv"),
        ],
        vec![
            "run".into(),
            "--config".into(),
            cfg_path.clone(),
            "--data".into(),
            p("data.csv"),
            "--set".into(),
            "sampler=amcmc".into(),
            "--out".into(),
            p("amcmc.csv"),
        ],
        vec![
            "run".into(),
            "--config".into(),
            cfg_path.clone(),
            "--set".into(),
            "model=dwell".into(),
            "--set".into(),
            "error_model=gaussian".into(),
            "--set".into(),
            "tau=0.3".into(),
            "--scheme".into(),
            "interweaved".into(),
            "--out".into(),
            p("noisy.csv"),
        ],
        vec!["diagnose".into(), "--input".into(), p("chain.csv")],
        vec![
            "compare".into(),
            "--config".into(),
            cfg_path.clone(),
            "--out".into(),
            p("compare"),
        ],
    ];
    for args in calls {
        let argv = std::iter::once("exdiff".to_string()).chain(args.iter().cloned());
        assert_eq!(
            exdiff::cli_main(argv),
            exdiff::EXIT_OK,
            "exdiff {}",
            args.join(" ")
        );
    }
}

#[test]
fn criterion_11_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    run_all_subcommands(dir.path());
    let first = snapshot(dir.path());
    for entry in fs::read_dir(dir.path()).unwrap() {
        let p = entry.unwrap().path();
        if p.file_name().unwrap() == "run.cfg" {
            continue;
        }
        if p.is_dir() {
            fs::remove_dir_all(&p).unwrap();
        } else {
            fs::remove_file(&p).unwrap();
        }
    }
    run_all_subcommands(dir.path());
    let second = snapshot(dir.path());
    let differing: Vec<&String> = first.keys().filter(|k| first.get(*k) != second.get(*k)).collect();
    let ok = differing.is_empty() && first.len() == second.len() && first.len() > 10;
    verdict(
        11,
        "reproducibility",
        ok,
        &format!("{} files compared, differing: {differing:?}", first.len()),
    );
}
