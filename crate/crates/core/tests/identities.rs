use exdiff_core::ea::{acceptance_prob_mc, ea_sample_interval, Heights};
use exdiff_core::models::{OrnsteinUhlenbeck, Pearson};
use exdiff_core::rng::{stream, Purpose};
use exdiff_core::{Diffusion, EaConfig};

const PEARSON: [f64; 3] = [0.5, 1.0, 0.5];

#[allow(clippy::too_many_arguments)]
fn acceptance(
    model: &dyn Diffusion,
    x: f64,
    y: f64,
    t: f64,
    theta: &[f64],
    lambda: f64,
    draws: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = stream(seed, Purpose::Oracle, 0, 0);
    let cfg = EaConfig::default();
    let attempts: u64 = (0..draws)
        .map(|_| {
            ea_sample_interval(model, &[x], &[y], t, theta, lambda, Heights::Off, &cfg, &mut rng)
                .unwrap()
                .attempts
        })
        .sum();
    let p = draws as f64 / attempts as f64;
    (p, p * ((1.0 - p) / draws as f64).sqrt())
}

#[test]
fn ou_transition_density_factorises_through_acceptance() {
    let ou = OrnsteinUhlenbeck;
    let theta = [0.8, 1.0];
    let mut rng = stream(1, Purpose::Oracle, 1, 0);
    for &(x, y, t) in &[(0.0, 0.5, 1.0), (1.2, -0.3, 0.5), (-0.7, -1.5, 2.0)] {
        let a = acceptance_prob_mc(&ou, &[x], &[y], t, &theta, 40_000, 400, &mut rng).unwrap();
        let gauss = -0.5 * (2.0 * std::f64::consts::PI * t).ln() - (y - x) * (y - x) / (2.0 * t);
        let l = ou.lower_bound(&theta);
        let log_front = gauss + ou.potential(&[y], &theta) - ou.potential(&[x], &theta) - l * t;
        let exact = OrnsteinUhlenbeck::log_transition(theta[0], x, y, t).exp();
        let estimate = log_front.exp() * a.mean;
        let se = log_front.exp() * a.stderr;
        assert!(
            (estimate - exact).abs() < 3.0 * se + 1e-4 * exact,
            "x={x} y={y} t={t}: {estimate} ± {se} vs {exact}"
        );
    }
}

#[test]
fn acceptance_decays_with_interval_length() {
    let (p1, _) = acceptance(&Pearson, 0.0, 0.0, 1.0, &PEARSON, 0.0, 10_000, 2);
    let (p2, _) = acceptance(&Pearson, 0.0, 0.0, 2.0, &PEARSON, 0.0, 10_000, 3);
    assert!(p2 < p1, "t=2 acceptance {p2} not below t=1 acceptance {p1}");
}

#[test]
fn auxiliary_rate_leaves_acceptance_unchanged() {
    let (a, sa) = acceptance(&Pearson, 0.3, -0.4, 1.0, &PEARSON, 0.0, 20_000, 4);
    let (b, sb) = acceptance(&Pearson, 0.3, -0.4, 1.0, &PEARSON, 5.0, 20_000, 5);
    assert!(
        (a - b).abs() < 3.0 * (sa * sa + sb * sb).sqrt(),
        "{a} ± {sa} vs {b} ± {sb}"
    );
}
