//! Synthetic datasets by fine-step Euler-Maruyama.

use rand_distr::{Distribution, StandardNormal};

use crate::emcmc::ObservationSet;
use crate::error::{precondition, Error, Result};
use crate::model::{Diffusion, MAX_STACK_DIM};
use crate::models::InitialState;
use crate::rng::{stream, Purpose};

pub const MIN_FINE_STEPS: usize = 64;
pub const DEFAULT_FINE_STEPS: usize = 4096;

/// Simulates `n + 1` equally spaced observations starting at time zero.
pub fn simulate_dataset(
    model: &dyn Diffusion,
    theta: &[f64],
    n: usize,
    dt: f64,
    fine_steps: usize,
    initial: &InitialState,
    seed: u64,
) -> Result<ObservationSet> {
    model.check_params(theta)?;
    let d = model.dim();
    if fine_steps < MIN_FINE_STEPS {
        return precondition(format!("fine_steps must be at least {MIN_FINE_STEPS}"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return precondition("dt must be positive");
    }
    let mut rng = stream(seed, Purpose::Simulation, 0, 0);
    let mut v: Vec<f64> = match initial {
        InitialState::Fixed(v0) => v0.clone(),
        InitialState::Normal { mean, sd } => {
            if mean.len() != sd.len() {
                return precondition("initial mean and sd differ in length");
            }
            mean.iter()
                .zip(sd)
                .map(|(m, s)| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    m + s * e
                })
                .collect()
        }
    };
    if v.len() != d {
        return precondition(format!("initial state must have dimension {d}"));
    }
    if !model.admissible(&v) {
        return Err(Error::Domain(format!("initial state {v:?} not admissible")));
    }
    let h = dt / fine_steps as f64;
    let sqrt_h = h.sqrt();
    let mut drift = [0.0; MAX_STACK_DIM];
    let mut diff = [0.0; MAX_STACK_DIM];
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    times.push(0.0);
    values.push(v.clone());
    for i in 1..=n {
        for k in 0..fine_steps {
            model.sde_drift(&v, theta, &mut drift[..d]);
            model.sde_diffusion(&v, theta, &mut diff[..d]);
            for c in 0..d {
                let e: f64 = StandardNormal.sample(&mut rng);
                v[c] += drift[c] * h + diff[c] * sqrt_h * e;
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numeric(format!(
                    "simulation exploded at observation {i}, fine step {k}"
                )));
            }
        }
        times.push(i as f64 * dt);
        values.push(v.clone());
    }
    ObservationSet::new(times, values)
}

/// Adds independent `N(0, tau^2)` error to every coordinate.
pub fn add_noise(obs: &ObservationSet, tau: f64, seed: u64) -> Result<ObservationSet> {
    if !(tau >= 0.0) {
        return precondition("tau must be non-negative");
    }
    let mut rng = stream(seed, Purpose::Noise, 0, 0);
    let values = obs
        .values
        .iter()
        .map(|v| {
            v.iter()
                .map(|x| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    x + tau * e
                })
                .collect()
        })
        .collect();
    ObservationSet::new(obs.times.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::ks_one_sample;
    use crate::models::{Pearson, ZeroDrift};
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn brownian_increments_are_gaussian() {
        let obs = simulate_dataset(
            &ZeroDrift,
            &[1.0],
            2000,
            0.5,
            64,
            &InitialState::Fixed(vec![0.0]),
            3,
        )
        .unwrap();
        let inc: Vec<f64> = obs.values.windows(2).map(|w| w[1][0] - w[0][0]).collect();
        let n = Normal::new(0.0, 0.5f64.sqrt()).unwrap();
        let (_, p) = ks_one_sample(&inc, |x| n.cdf(x));
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn pearson_dataset_has_expected_shape() {
        let obs = simulate_dataset(
            &Pearson,
            &[0.5, 1.0, 0.5],
            50,
            1.0,
            64,
            &InitialState::Fixed(vec![1.0]),
            7,
        )
        .unwrap();
        assert_eq!(obs.len(), 51);
        assert_eq!(obs.values[0], vec![1.0]);
        assert_eq!(obs.times[50], 50.0);
    }

    #[test]
    fn too_few_fine_steps_rejected() {
        assert!(
            simulate_dataset(&ZeroDrift, &[1.0], 5, 1.0, 10, &InitialState::Fixed(vec![0.0]), 1).is_err()
        );
    }

    #[test]
    fn noise_moments() {
        let obs = simulate_dataset(
            &ZeroDrift,
            &[1.0],
            20_000,
            1.0,
            64,
            &InitialState::Fixed(vec![0.0]),
            5,
        )
        .unwrap();
        assert_eq!(add_noise(&obs, 0.0, 1).unwrap(), obs);
        let z = add_noise(&obs, 0.5, 2).unwrap();
        let r: Vec<f64> = z
            .values
            .iter()
            .zip(&obs.values)
            .map(|(a, b)| a[0] - b[0])
            .collect();
        let var = r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64;
        // Standard error of the sample variance of N(0, s^2) is s^2 sqrt(2/n).
        let se = 0.25 * (2.0 / r.len() as f64).sqrt();
        assert!((var - 0.25).abs() < 3.0 * se, "{var}");
    }
}
