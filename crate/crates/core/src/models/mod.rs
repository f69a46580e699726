//! Built-in models and their registry.

pub mod dwell;
pub mod mvwell;
pub mod pearson;
pub(crate) mod poly;
pub mod reference;

use std::sync::Arc;

pub use dwell::{Dwell, DwellParams};
pub use mvwell::{Mvwell, MvwellParams};
pub use pearson::{Pearson, PearsonParams};
pub use reference::{ConstantPhi, OrnsteinUhlenbeck, ZeroDrift};

use crate::error::{Error, Result};
use crate::model::{Diffusion, ModelSpec};

/// Tolerance for the construction-time check of closed-form lower bounds.
const CROSS_CHECK_TOL: f64 = 1e-8;

pub fn make_pearson(params: PearsonParams) -> Result<ModelSpec> {
    Pearson.check_params(&params.to_vec())?;
    Ok(Arc::new(Pearson))
}

pub fn make_dwell(params: DwellParams) -> Result<ModelSpec> {
    Dwell.check_params(&params.to_vec())?;
    let closed = dwell::lower(params);
    let numeric = dwell::numeric_lower(params);
    if (closed - numeric).abs() > CROSS_CHECK_TOL * closed.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "dwell lower bound {closed} disagrees with numerical minimum {numeric}"
        )));
    }
    Ok(Arc::new(Dwell))
}

pub fn make_mvwell(params: MvwellParams) -> Result<ModelSpec> {
    Mvwell.check_params(&params.to_vec())?;
    let closed = mvwell::lower(params);
    let numeric = mvwell::numeric_lower(params);
    if (closed - numeric).abs() > CROSS_CHECK_TOL * closed.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "mvwell lower bound {closed} disagrees with numerical minimum {numeric}"
        )));
    }
    Ok(Arc::new(Mvwell))
}

/// Model keys accepted by [`by_key`].
pub const KEYS: [&str; 3] = ["pearson", "dwell", "mvwell"];

/// Builds a model from its key, checking it at `theta`.
pub fn by_key(key: &str, theta: &[f64]) -> Result<ModelSpec> {
    let wrong_len =
        |n: usize| Error::InvalidParams(format!("model {key} takes {n} parameters, got {}", theta.len()));
    match key {
        "pearson" => {
            if theta.len() != 3 {
                return Err(wrong_len(3));
            }
            make_pearson(PearsonParams::from_slice(theta))
        }
        "dwell" => {
            if theta.len() != 3 {
                return Err(wrong_len(3));
            }
            make_dwell(DwellParams::from_slice(theta))
        }
        "mvwell" => {
            if theta.len() != 5 {
                return Err(wrong_len(5));
            }
            make_mvwell(MvwellParams::from_slice(theta))
        }
        other => Err(Error::Config(format!(
            "unknown model '{other}', expected one of {}",
            KEYS.join(", ")
        ))),
    }
}

/// True parameters of the standard simulated benchmarks.
pub fn default_theta(key: &str) -> Option<Vec<f64>> {
    match key {
        "pearson" => Some(vec![0.5, 1.0, 0.5]),
        "dwell" => Some(vec![0.1, 2.0, 0.5]),
        "mvwell" => Some(vec![0.5, 2.0, 0.5, 1.0, 0.5]),
        _ => None,
    }
}

/// How the initial state of a simulated dataset is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Fixed(Vec<f64>),
    /// Independent normal coordinates with the given means and standard deviations.
    Normal {
        mean: Vec<f64>,
        sd: Vec<f64>,
    },
}

pub fn default_initial(key: &str) -> Option<InitialState> {
    match key {
        "pearson" => Some(InitialState::Fixed(vec![1.0])),
        "dwell" => Some(InitialState::Normal {
            mean: vec![2.0],
            sd: vec![0.5],
        }),
        "mvwell" => Some(InitialState::Fixed(vec![0.0, 0.0])),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_round_trip() {
        for key in KEYS {
            let theta = default_theta(key).unwrap();
            let m = by_key(key, &theta).unwrap();
            assert_eq!(m.name(), key);
            assert_eq!(m.param_names().len(), theta.len());
        }
        assert!(matches!(by_key("heston", &[1.0]), Err(Error::Config(_))));
        assert!(matches!(
            by_key("dwell", &[1.0, -2.0, 0.5]),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(by_key("pearson", &[1.0]), Err(Error::InvalidParams(_))));
    }
}
