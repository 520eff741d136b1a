use super::noise::trajectory_rng;
use super::{Compensator, NoiseModel, StochasticConfig, StochasticError, TrajectoryRecord};
use crate::deterministic::{check_grid, check_stability, Propagator, SolverError};
use crate::grid::WaveFunction;
use crate::kernel::KernelTable;

/// Stochastic wave-function update whose ensemble average follows the
/// Newtonian-noise master equation.
///
/// Per step: half kinetic step; `V`, `U_G` and `p = |ψ|² h` frozen at that
/// state; damping `exp(-(V - c) dt / ħ)`; the mean-one noise factor
/// `exp(ξ_i - S_ii / 2)` with `ξ = (ΔB - Σ p ΔB) / ħ` and `S_ii` its variance;
/// renormalisation; half kinetic step.
pub fn evolve_stochastic_wave(
    psi0: &WaveFunction,
    kernel: &KernelTable,
    noise: &NoiseModel,
    cfg: &StochasticConfig,
    seed: u64,
    index: u64,
) -> Result<TrajectoryRecord, StochasticError> {
    if matches!(noise, NoiseModel::Scalar) {
        return Err(StochasticError::WrongNoise(
            "the wave-function update needs field noise",
        ));
    }
    let mut rng = trajectory_rng(seed, index);
    let mut z = Vec::new();
    let dt = cfg.evolution.dt;
    let mut rec = evolve_stochastic_wave_driven(psi0, kernel, cfg, |db| {
        noise.sample(&mut rng, dt, db, &mut z)
    })?;
    rec.seed = seed;
    rec.index = index;
    Ok(rec)
}

/// The same update with `ΔB` supplied by `increments`, called once per step
/// with a buffer of grid length. The record carries seed and index 0.
pub fn evolve_stochastic_wave_driven(
    psi0: &WaveFunction,
    kernel: &KernelTable,
    cfg: &StochasticConfig,
    mut increments: impl FnMut(&mut [f64]),
) -> Result<TrajectoryRecord, StochasticError> {
    check_grid(psi0, kernel)?;
    let ev = &cfg.evolution;
    ev.validate(kernel.grid())?;
    let n = kernel.grid().n();
    let h = kernel.grid().spacing();
    let hbar = kernel.hbar();
    let u0 = kernel.u0();
    let dt = ev.dt;
    let scale2 = cfg.noise_scale * cfg.noise_scale;
    let mut prop = Propagator::new(kernel, ev);
    let mut psi = psi0.clone();
    psi.normalize()?;

    let mut db = vec![0.0; n];
    let mut samples = vec![prop.sample(0.0, &psi)];
    let mut collapse_time = None;
    let mut branch = None;
    let mut max_norm_drift: f64 = 0.0;

    for step in 1..=ev.steps {
        prop.kinetic(psi.amplitudes_mut());
        let u_g = prop.mean_field(psi.amplitudes());
        check_stability(step, dt, hbar, &prop.v)?;
        let c = match cfg.compensator {
            Compensator::Mean => 0.5 * (u_g + u0),
            Compensator::SelfEnergy => u_g,
        };
        let mean_db = if cfg.noise_scale != 0.0 {
            increments(&mut db);
            db.iter_mut().for_each(|b| *b *= cfg.noise_scale);
            db.iter()
                .zip(&prop.density)
                .map(|(b, p)| b * p)
                .sum::<f64>()
                * h
        } else {
            db.iter_mut().for_each(|b| *b = 0.0);
            0.0
        };
        for ((a, b), v) in psi.amplitudes_mut().iter_mut().zip(&db).zip(&prop.v) {
            let xi = (b - mean_db) / hbar;
            let s_ii = -(dt / hbar) * (u0 - 2.0 * v + u_g) * scale2;
            let log_f = -(v - c) * dt / hbar + xi - 0.5 * s_ii;
            *a *= log_f.exp();
        }
        prop.external_phase(psi.amplitudes_mut());
        let pre = psi.normalize()?;
        max_norm_drift = max_norm_drift.max((pre - 1.0).abs());
        prop.kinetic(psi.amplitudes_mut());

        if !psi.is_finite() {
            return Err(SolverError::NonFinite(step).into());
        }
        let t = step as f64 * dt;
        let mut stop = false;
        if let (Some(crit), None) = (cfg.collapse, branch) {
            let (l, r) = psi.window_norms(crit.split);
            if let Some(b) = crit.classify(l, r) {
                branch = Some(b);
                collapse_time = Some(t);
                stop = cfg.stop_at_collapse;
            }
        }
        if step % ev.record_stride == 0 || step == ev.steps || stop {
            samples.push(prop.sample(t, &psi));
        }
        if stop {
            break;
        }
    }
    Ok(TrajectoryRecord {
        seed: 0,
        index: 0,
        samples,
        collapse_time,
        branch,
        final_state: cfg.keep_final_state.then_some(psi),
        max_norm_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deterministic::{evolve_frsne_with, EvolutionConfig, FrictionScheme};
    use crate::grid::{cat_state, make_grid};
    use crate::kernel::{build_grid_kernel, BallSpec, KernelModel};
    use crate::units::PhysicalConstants;

    fn setup() -> (KernelTable, WaveFunction) {
        let grid = make_grid(64, 12.0, 2).unwrap();
        let b = BallSpec::new(1.0, 1.0, PhysicalConstants::new(4.0, 1.0).unwrap()).unwrap();
        let k = build_grid_kernel(&b, &grid, KernelModel::Ball).unwrap();
        let psi = cat_state(&grid, 3.0, 0.6).unwrap();
        (k, psi)
    }

    #[test]
    fn zero_noise_with_self_energy_is_frictional_evolution() {
        let (k, psi) = setup();
        let noise = NoiseModel::from_kernel(&k).unwrap();
        let ev = EvolutionConfig::new(2e-3, 200).with_renormalize(true);
        let mut cfg = StochasticConfig::new(ev.clone());
        cfg.noise_scale = 0.0;
        cfg.compensator = Compensator::SelfEnergy;
        let a = evolve_stochastic_wave(&psi, &k, &noise, &cfg, 1, 0).unwrap();
        let b = evolve_frsne_with(&psi, &k, &ev, FrictionScheme::Frozen).unwrap();
        let d = a.final_state.unwrap().distance(&b.final_state);
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn same_seed_same_trajectory() {
        let (k, psi) = setup();
        let noise = NoiseModel::from_kernel(&k).unwrap();
        let cfg = StochasticConfig::new(EvolutionConfig::new(2e-3, 50));
        let a = evolve_stochastic_wave(&psi, &k, &noise, &cfg, 9, 2).unwrap();
        let b = evolve_stochastic_wave(&psi, &k, &noise, &cfg, 9, 2).unwrap();
        let c = evolve_stochastic_wave(&psi, &k, &noise, &cfg, 9, 3).unwrap();
        assert_eq!(a.final_state, b.final_state);
        assert_ne!(a.final_state, c.final_state);
        assert!(a.max_norm_drift < 0.1);
    }

    #[test]
    fn scalar_noise_rejected() {
        let (k, psi) = setup();
        let cfg = StochasticConfig::new(EvolutionConfig::new(2e-3, 5));
        assert!(matches!(
            evolve_stochastic_wave(&psi, &k, &NoiseModel::Scalar, &cfg, 0, 0),
            Err(StochasticError::WrongNoise(_))
        ));
    }
}
