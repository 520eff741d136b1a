//! Deterministic evolution: the Schrödinger–Newton equation, its frictional
//! variant, and the von Neumann–Newton master equation, all integrated with
//! Strang splitting around a spectral kinetic step.

mod analytic;
mod frsne;
mod ground;
mod radial;
mod sne;
mod vnne;

use serde::Serialize;
use thiserror::Error;

use crate::grid::{GridSpec, StateError};

pub use analytic::{
    conditional_pointer_exponent, frictional_pointer_exponent, harmonic_ground_exponent,
    GaussianMoments,
};
pub use frsne::{
    evolve_frsne, evolve_frsne_with, pointer_state_frsne, FrictionScheme, RelaxOptions,
};
pub use ground::{ground_state_sne, GroundStateOptions, PointerState};
pub use radial::{radial_ground_state, RadialOptions, RadialSoliton};
pub use sne::{energy, evolve_sne};
pub use vnne::{evolve_vnne, DensityTrajectory};

pub(crate) use sne::{check_grid, Propagator};
pub(crate) use vnne::{density_sample, sandwich};

/// Largest admissible `dt (max V - min V) / hbar`.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("dt·ΔV/ħ = {ratio:.3e} exceeds the stability limit {limit} at step {step}")]
    StabilityViolation { step: usize, ratio: f64, limit: f64 },
    #[error("norm drifted by {drift:.3e} by step {step}")]
    NormDrift { step: usize, drift: f64 },
    #[error("no convergence after {iterations} iterations (last change {change:.3e})")]
    NoConvergence { iterations: usize, change: f64 },
    #[error("state became non-finite at step {0}")]
    NonFinite(usize),
    #[error("invalid evolution config: {0}")]
    BadConfig(String),
    #[error("state lives on a different grid than the kernel")]
    GridMismatch,
    #[error(transparent)]
    State(#[from] StateError),
}

/// Time step, step count and the "standard" terms (kinetic plus optional
/// external potential).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionConfig {
    /// Negative values integrate backwards.
    pub dt: f64,
    pub steps: usize,
    pub external_potential: Option<Vec<f64>>,
    pub record_stride: usize,
    pub renormalize: bool,
    /// Drop the kinetic term (and the external potential).
    pub freeze_kinetic: bool,
}

impl EvolutionConfig {
    pub fn new(dt: f64, steps: usize) -> Self {
        Self {
            dt,
            steps,
            external_potential: None,
            record_stride: 1,
            renormalize: false,
            freeze_kinetic: false,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    pub fn with_renormalize(mut self, on: bool) -> Self {
        self.renormalize = on;
        self
    }

    pub fn with_frozen_kinetic(mut self, on: bool) -> Self {
        self.freeze_kinetic = on;
        self
    }

    pub fn with_external(mut self, v: Vec<f64>) -> Self {
        self.external_potential = Some(v);
        self
    }

    /// Same run integrated backwards in time.
    pub fn reversed(&self) -> Self {
        Self {
            dt: -self.dt,
            ..self.clone()
        }
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub(crate) fn validate(&self, grid: &GridSpec) -> Result<(), SolverError> {
        if !(self.dt.is_finite() && self.dt != 0.0) {
            return Err(SolverError::BadConfig(format!(
                "dt must be finite and non-zero, got {}",
                self.dt
            )));
        }
        if self.record_stride == 0 {
            return Err(SolverError::BadConfig("record_stride must be >= 1".into()));
        }
        if let Some(v) = &self.external_potential {
            if v.len() != grid.n() {
                return Err(SolverError::BadConfig(format!(
                    "external potential has {} samples, grid has {}",
                    v.len(),
                    grid.n()
                )));
            }
        }
        Ok(())
    }
}

/// One recorded point of a time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub norm: f64,
    pub mean_x: f64,
    pub var_x: f64,
    pub energy: f64,
    pub purity: Option<f64>,
}

/// Recorded series plus the final state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub final_state: crate::grid::WaveFunction,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn var_x(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.var_x).collect()
    }
}

/// Writes `t,norm,mean_x,var_x,energy,purity`.
pub fn write_series_csv<W: std::io::Write>(mut w: W, samples: &[Sample]) -> std::io::Result<()> {
    writeln!(w, "t,norm,mean_x,var_x,energy,purity")?;
    for s in samples {
        let purity = s.purity.map(|p| p.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.t, s.norm, s.mean_x, s.var_x, s.energy, purity
        )?;
    }
    Ok(())
}

pub(crate) fn check_stability(
    step: usize,
    dt: f64,
    hbar: f64,
    v: &[f64],
) -> Result<(), SolverError> {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let ratio = dt.abs() * (hi - lo) / hbar;
    if ratio >= STABILITY_LIMIT {
        return Err(SolverError::StabilityViolation {
            step,
            ratio,
            limit: STABILITY_LIMIT,
        });
    }
    Ok(())
}
