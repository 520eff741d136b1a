//! Stochastic unravellings of the Newtonian-noise master equation.
//!
//! All updates use mean-one exponential noise factors, so ensemble averages
//! reproduce the deterministic decay of coherences step by step.

mod ensemble;
mod master;
mod noise;
mod quadratic;
mod wave;

use serde::Serialize;
use thiserror::Error;

use crate::deterministic::{EvolutionConfig, Sample, SolverError};
use crate::grid::WaveFunction;

pub use ensemble::{
    ensemble_mean_density, fit_line, run_ensemble, summarize, BranchCounts, DiffusionFit,
    EnsembleSummary,
};
pub use master::{evolve_stochastic_master, MasterRecord};
pub use noise::{sample_noise, trajectory_rng, NoiseModel, CLIP_TOLERANCE};
pub use quadratic::{
    evolve_quadratic_stochastic, evolve_quadratic_stochastic_driven, QuadraticNoise,
};
pub use wave::{evolve_stochastic_wave, evolve_stochastic_wave_driven};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StochasticError {
    #[error("noise covariance is not positive semidefinite (λ_min = {lambda_min:.3e}, λ_max = {lambda_max:.3e})")]
    NotPositiveSemidefinite { lambda_min: f64, lambda_max: f64 },
    #[error("noise model does not fit this solver: {0}")]
    WrongNoise(&'static str),
    #[error("kernel has no quadratic core frequency")]
    NoFrequency,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl From<crate::grid::StateError> for StochasticError {
    fn from(e: crate::grid::StateError) -> Self {
        Self::Solver(e.into())
    }
}

/// The constant subtracted from `V` in the deterministic damping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Compensator {
    /// `(U_G + U(0)) / 2`, which makes the update an unravelling of the
    /// master equation.
    #[default]
    Mean,
    /// `U_G`, the frictional equation's own shift.
    SelfEnergy,
}

/// Which half of the box a collapsed state ended up in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Left,
    Right,
}

/// Declares a trajectory collapsed once one side of `split` holds `threshold` of the norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapseCriterion {
    pub split: f64,
    pub threshold: f64,
}

impl CollapseCriterion {
    pub fn classify(&self, left: f64, right: f64) -> Option<Branch> {
        let total = left + right;
        if left >= self.threshold * total {
            Some(Branch::Left)
        } else if right >= self.threshold * total {
            Some(Branch::Right)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticConfig {
    pub evolution: EvolutionConfig,
    /// Multiplies every noise increment; zero switches the noise off.
    pub noise_scale: f64,
    pub compensator: Compensator,
    pub collapse: Option<CollapseCriterion>,
    /// End the trajectory at the first collapse.
    pub stop_at_collapse: bool,
    pub keep_final_state: bool,
}

impl StochasticConfig {
    pub fn new(evolution: EvolutionConfig) -> Self {
        Self {
            evolution,
            noise_scale: 1.0,
            compensator: Compensator::Mean,
            collapse: None,
            stop_at_collapse: false,
            keep_final_state: true,
        }
    }
}

/// One stochastic trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub index: u64,
    pub samples: Vec<Sample>,
    pub collapse_time: Option<f64>,
    pub branch: Option<Branch>,
    pub final_state: Option<WaveFunction>,
    /// Largest `|N - 1|` seen just before renormalisation.
    pub max_norm_drift: f64,
}

impl TrajectoryRecord {
    pub fn final_mean_x(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.mean_x)
    }
}
