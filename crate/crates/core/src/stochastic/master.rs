use num_complex::Complex64;

use super::noise::trajectory_rng;
use super::{Branch, NoiseModel, StochasticConfig, StochasticError};
use crate::deterministic::{check_stability, density_sample, sandwich, Sample, SolverError};
use crate::grid::{Convolver, DensityMatrix, Spectral};
use crate::kernel::KernelTable;

#[derive(Debug, Clone)]
pub struct MasterRecord {
    pub seed: u64,
    pub index: u64,
    pub samples: Vec<Sample>,
    pub collapse_time: Option<f64>,
    pub branch: Option<Branch>,
    pub final_state: DensityMatrix,
    pub max_norm_drift: f64,
}

/// Stochastic density-matrix update.
///
/// Each step multiplies `ρ_ij` by `exp(-(U_ij - U(0)) dt / ħ)` times the
/// mean-one factor `exp(ξ_i + ξ_j - Var(ξ_i + ξ_j) / 2)`, between two half
/// kinetic steps, then renormalises the trace and re-Hermitises. The factor
/// splits into a product of a row and a column term, so pure states stay pure.
pub fn evolve_stochastic_master(
    rho0: &DensityMatrix,
    kernel: &KernelTable,
    noise: &NoiseModel,
    cfg: &StochasticConfig,
    seed: u64,
    index: u64,
) -> Result<MasterRecord, StochasticError> {
    if matches!(noise, NoiseModel::Scalar) {
        return Err(StochasticError::WrongNoise(
            "the master update needs field noise",
        ));
    }
    if rho0.grid() != kernel.grid() {
        return Err(SolverError::GridMismatch.into());
    }
    let grid = *kernel.grid();
    let ev = &cfg.evolution;
    ev.validate(&grid)?;
    if ev.external_potential.is_some() {
        return Err(
            SolverError::BadConfig("the master update has no external potential".into()).into(),
        );
    }
    let n = grid.n();
    let h = grid.spacing();
    let hbar = kernel.hbar();
    let u0 = kernel.u0();
    let dt = ev.dt;
    let scale2 = cfg.noise_scale * cfg.noise_scale;
    let mut rng = trajectory_rng(seed, index);
    let mut spec = Spectral::new(&grid);
    let mut conv = Convolver::new(kernel);
    let half = (!ev.freeze_kinetic).then(|| spec.kinetic_phase(0.5 * dt, hbar, kernel.mass()));

    let mut rho = rho0.clone();
    rho.scale(1.0 / rho.trace());
    let mut density = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut db = vec![0.0; n];
    let mut xi = vec![0.0; n];
    let mut z = Vec::new();
    let mut samples = vec![density_sample(0.0, &rho, kernel)];
    let mut collapse_time = None;
    let mut branch = None;
    let mut max_norm_drift: f64 = 0.0;

    for step in 1..=ev.steps {
        if let Some(k) = &half {
            sandwich(&mut spec, rho.entries_mut(), k);
        }
        for (d, p) in density.iter_mut().zip(rho.populations()) {
            *d = p / h;
        }
        let u_g = conv.potential_and_energy(&density, &mut v);
        check_stability(step, dt, hbar, &v)?;
        let mean_db = if cfg.noise_scale != 0.0 {
            noise.sample(&mut rng, dt, &mut db, &mut z);
            db.iter_mut().for_each(|b| *b *= cfg.noise_scale);
            db.iter().zip(&density).map(|(b, p)| b * p).sum::<f64>() * h
        } else {
            db.iter_mut().for_each(|b| *b = 0.0);
            0.0
        };
        for (x, b) in xi.iter_mut().zip(&db) {
            *x = (b - mean_db) / hbar;
        }
        let e = rho.entries_mut();
        for j in 0..n {
            for i in 0..n {
                let u_ij = kernel.value_between(i, j);
                let cov =
                    |a: usize, b: usize, u: f64| -(dt / hbar) * (u - v[a] - v[b] + u_g) * scale2;
                let var = cov(i, i, u0) + cov(j, j, u0) + 2.0 * cov(i, j, u_ij);
                let log_f = -(u_ij - u0) * dt / hbar + xi[i] + xi[j] - 0.5 * var;
                e[(i, j)] *= Complex64::new(log_f.exp(), 0.0);
            }
        }
        if let Some(k) = &half {
            sandwich(&mut spec, rho.entries_mut(), k);
        }
        let tr = rho.trace();
        max_norm_drift = max_norm_drift.max((tr - 1.0).abs());
        rho.scale(1.0 / tr);
        rho.hermitize();
        if rho
            .entries()
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(SolverError::NonFinite(step).into());
        }

        let t = step as f64 * dt;
        let mut stop = false;
        if let (Some(crit), None) = (cfg.collapse, branch) {
            let (l, r) = rho.window_norms(crit.split);
            if let Some(b) = crit.classify(l, r) {
                branch = Some(b);
                collapse_time = Some(t);
                stop = cfg.stop_at_collapse;
            }
        }
        if step % ev.record_stride == 0 || step == ev.steps || stop {
            samples.push(density_sample(t, &rho, kernel));
        }
        if stop {
            break;
        }
    }
    Ok(MasterRecord {
        seed,
        index,
        samples,
        collapse_time,
        branch,
        final_state: rho,
        max_norm_drift,
    })
}
