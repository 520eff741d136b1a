use num_complex::Complex64;

use super::{check_stability, EvolutionConfig, Sample, SolverError, Trajectory};
use crate::grid::{Convolver, Spectral, WaveFunction};
use crate::kernel::KernelTable;

/// Reusable buffers and FFT plans for one run on one grid.
pub(crate) struct Propagator {
    pub spec: Spectral,
    pub conv: Convolver,
    pub half_kinetic: Option<Vec<Complex64>>,
    pub external: Option<Vec<f64>>,
    pub density: Vec<f64>,
    pub v: Vec<f64>,
    pub h: f64,
    pub hbar: f64,
    pub mass: f64,
    pub dt: f64,
    fft_buf: Vec<Complex64>,
}

impl Propagator {
    pub fn new(kernel: &KernelTable, cfg: &EvolutionConfig) -> Self {
        let grid = kernel.grid();
        let spec = Spectral::new(grid);
        let half_kinetic = (!cfg.freeze_kinetic)
            .then(|| spec.kinetic_phase(0.5 * cfg.dt, kernel.hbar(), kernel.mass()));
        let external = if cfg.freeze_kinetic {
            None
        } else {
            cfg.external_potential.clone()
        };
        Self {
            spec,
            conv: Convolver::new(kernel),
            half_kinetic,
            external,
            density: vec![0.0; grid.n()],
            v: vec![0.0; grid.n()],
            h: grid.spacing(),
            hbar: kernel.hbar(),
            mass: kernel.mass(),
            dt: cfg.dt,
            fft_buf: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn kinetic(&mut self, amps: &mut [Complex64]) {
        if let Some(k) = &self.half_kinetic {
            self.spec.apply_diagonal(amps, k);
        }
    }

    /// Fills `self.v` with the mean-field potential of `amps` and returns `U_G`.
    pub fn mean_field(&mut self, amps: &[Complex64]) -> f64 {
        for (d, a) in self.density.iter_mut().zip(amps) {
            *d = a.norm_sqr();
        }
        self.conv.potential_and_energy(&self.density, &mut self.v)
    }

    /// As [`Propagator::mean_field`] but for the normalised density of `amps`.
    pub fn mean_field_normalized(&mut self, amps: &[Complex64]) -> f64 {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.h;
        for (d, a) in self.density.iter_mut().zip(amps) {
            *d = a.norm_sqr() / norm;
        }
        self.conv.potential_and_energy(&self.density, &mut self.v)
    }

    /// Multiplies by `exp(-i V_ext dt / hbar)`.
    pub fn external_phase(&self, amps: &mut [Complex64]) {
        if let Some(ext) = &self.external {
            let c = self.dt / self.hbar;
            for (a, v) in amps.iter_mut().zip(ext) {
                *a *= Complex64::from_polar(1.0, -c * v);
            }
        }
    }

    /// `<T> + <V_ext> + U_G / 2` for the normalised state.
    pub fn energy(&mut self, amps: &[Complex64]) -> f64 {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.h;
        self.fft_buf.copy_from_slice(amps);
        self.spec.forward(&mut self.fft_buf);
        let (mut t, mut w) = (0.0, 0.0);
        for (c, k2) in self.fft_buf.iter().zip(self.spec.k2()) {
            t += c.norm_sqr() * k2;
            w += c.norm_sqr();
        }
        let kinetic = self.hbar * self.hbar / (2.0 * self.mass) * t / w;
        let u_g = self.mean_field(amps) / (norm * norm);
        let ext = self.external.as_ref().map_or(0.0, |e| {
            e.iter()
                .zip(amps)
                .map(|(v, a)| v * a.norm_sqr())
                .sum::<f64>()
                * self.h
                / norm
        });
        kinetic + ext + 0.5 * u_g
    }

    pub fn sample(&mut self, t: f64, psi: &WaveFunction) -> Sample {
        Sample {
            t,
            norm: psi.norm_sq(),
            mean_x: psi.mean_x(),
            var_x: psi.var_x(),
            energy: self.energy(psi.amplitudes()),
            purity: None,
        }
    }
}

pub(crate) fn check_grid(psi: &WaveFunction, kernel: &KernelTable) -> Result<(), SolverError> {
    if psi.grid() != kernel.grid() {
        return Err(SolverError::GridMismatch);
    }
    Ok(())
}

/// Energy of a state under the Schrödinger–Newton functional.
pub fn energy(psi: &WaveFunction, kernel: &KernelTable, external: Option<&[f64]>) -> f64 {
    let mut cfg = EvolutionConfig::new(1.0, 0);
    cfg.external_potential = external.map(|e| e.to_vec());
    Propagator::new(kernel, &cfg).energy(psi.amplitudes())
}

/// Unitary Schrödinger–Newton evolution.
///
/// Each step is a half kinetic step, a full potential phase with `V` evaluated
/// once at the intermediate state, and another half kinetic step. The potential
/// phase leaves `|ψ|` untouched, so the scheme is time-reversible.
pub fn evolve_sne(
    psi0: &WaveFunction,
    kernel: &KernelTable,
    cfg: &EvolutionConfig,
) -> Result<Trajectory, SolverError> {
    check_grid(psi0, kernel)?;
    cfg.validate(kernel.grid())?;
    let mut prop = Propagator::new(kernel, cfg);
    let mut psi = psi0.clone();
    let norm0 = psi.norm_sq();
    let mut samples = vec![prop.sample(0.0, &psi)];
    let c = cfg.dt / prop.hbar;

    for step in 1..=cfg.steps {
        prop.kinetic(psi.amplitudes_mut());
        prop.mean_field(psi.amplitudes());
        check_stability(step, cfg.dt, prop.hbar, &prop.v)?;
        for (a, v) in psi.amplitudes_mut().iter_mut().zip(&prop.v) {
            *a *= Complex64::from_polar(1.0, -c * v);
        }
        prop.external_phase(psi.amplitudes_mut());
        prop.kinetic(psi.amplitudes_mut());

        if !psi.is_finite() {
            return Err(SolverError::NonFinite(step));
        }
        if cfg.renormalize {
            psi.normalize()?;
        } else {
            let drift = (psi.norm_sq() - norm0).abs();
            if drift > 1e-6 {
                return Err(SolverError::NormDrift { step, drift });
            }
        }
        if step % cfg.record_stride == 0 || step == cfg.steps {
            samples.push(prop.sample(step as f64 * cfg.dt, &psi));
        }
    }
    Ok(Trajectory {
        samples,
        final_state: psi,
    })
}
