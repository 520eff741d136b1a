use super::{ScenarioConfig, ScenarioError, ScenarioKind, ScenarioReport};
use crate::decoherence::{decoherence_time, decoherence_time_softened};
use crate::deterministic::{
    evolve_frsne_with, evolve_sne, evolve_vnne, frictional_pointer_exponent, ground_state_sne,
    harmonic_ground_exponent, pointer_state_frsne, EvolutionConfig, GaussianMoments,
    GroundStateOptions, PointerState, RelaxOptions, Sample, SolverError,
};
use crate::grid::{cat_state, gaussian_packet, DensityMatrix, WaveFunction};
use crate::kernel::{BallSpec, KernelModel, KernelTable};
use crate::units::soliton_width;

/// Relative band inside which the width series counts as settled.
const SETTLE_BAND: f64 = 1e-2;
/// Largest relative spread of `var_x` over the last quarter of a converged run.
const CONVERGED_SPREAD: f64 = 1e-3;

pub(super) fn evolution(cfg: &ScenarioConfig) -> EvolutionConfig {
    EvolutionConfig::new(cfg.dt, cfg.steps)
        .with_stride(cfg.record_stride)
        .with_renormalize(cfg.renormalize)
        .with_frozen_kinetic(cfg.freeze_kinetic)
}

/// Position spread of the oscillator ground state, `sqrt(ħ / 2 M ω_G)`, or a
/// twentieth of the box for kernels without a quadratic core.
pub(super) fn ground_std(kernel: &KernelTable) -> f64 {
    match kernel.omega_g() {
        Some(w) if w > 0.0 => (kernel.hbar() / (2.0 * kernel.mass() * w)).sqrt(),
        _ => kernel.grid().length() / 20.0,
    }
}

pub(super) fn packet_width(cfg: &ScenarioConfig, kernel: &KernelTable) -> f64 {
    cfg.width.unwrap_or_else(|| ground_std(kernel))
}

/// A cat of two packets at `±separation / 2` when `separation > 0`, else one
/// packet at `center` with wavenumber `momentum / ħ`.
pub(super) fn initial_state(
    cfg: &ScenarioConfig,
    kernel: &KernelTable,
) -> Result<WaveFunction, ScenarioError> {
    let grid = kernel.grid();
    let w = packet_width(cfg, kernel);
    if cfg.separation > 0.0 {
        Ok(cat_state(grid, cfg.separation, w)?)
    } else {
        Ok(gaussian_packet(
            grid,
            cfg.center,
            w,
            cfg.momentum / kernel.hbar(),
        )?)
    }
}

/// `t_G(d)` for the interaction the solvers actually see.
pub(super) fn model_decoherence_time(ball: &BallSpec, kernel: &KernelTable, d: f64) -> f64 {
    match kernel.model() {
        KernelModel::Ball => decoherence_time(ball, d).t_g,
        KernelModel::Point { softening } => decoherence_time_softened(ball, d, softening).t_g,
        KernelModel::Quadratic => {
            let w = kernel.omega_g().unwrap_or(0.0);
            kernel.hbar() / (0.5 * kernel.mass() * w * w * d * d)
        }
        KernelModel::Zero => f64::INFINITY,
    }
}

/// Variance of the frictional pointer state of the quadratic core, `ħ / (√2 M ω_G)`.
pub(super) fn frictional_pointer_var(kernel: &KernelTable) -> Option<f64> {
    let w = kernel.omega_g().filter(|w| *w > 0.0)?;
    let a = frictional_pointer_exponent(kernel.mass(), w, kernel.hbar());
    Some(GaussianMoments::from_exponent(a, kernel.hbar()).var_x)
}

fn harmonic_ground_var(kernel: &KernelTable) -> Option<f64> {
    let w = kernel.omega_g().filter(|w| *w > 0.0)?;
    let a = harmonic_ground_exponent(kernel.mass(), w, kernel.hbar());
    Some(GaussianMoments::from_exponent(a, kernel.hbar()).var_x)
}

fn dx_g(ball: &BallSpec) -> Option<f64> {
    (!ball.pointlike()).then(|| soliton_width(ball))
}

fn relative_spread(xs: &[f64]) -> f64 {
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (hi - lo) / mean.abs()
}

/// First recorded time after which `var_x` stays within `SETTLE_BAND` of its final value.
fn settle_time(samples: &[Sample]) -> f64 {
    let last = samples.last().map_or(f64::NAN, |s| s.var_x);
    let mut t = samples.last().map_or(f64::NAN, |s| s.t);
    for s in samples.iter().rev() {
        if (s.var_x - last).abs() > SETTLE_BAND * last.abs() {
            break;
        }
        t = s.t;
    }
    t
}

fn pointer_metrics(rep: &mut ScenarioReport, p: &PointerState, ball: &BallSpec) {
    rep.metric("var_x", p.var_x);
    rep.metric("oscillator_length", p.oscillator_length());
    rep.metric("exponent_re", p.exponent.re);
    rep.metric("exponent_im", p.exponent.im);
    rep.metric("energy", p.energy);
    rep.metric("iterations", p.iterations);
    if let Some(dx) = dx_g(ball) {
        rep.metric("dx_g", dx);
        rep.metric("oscillator_length_over_dx_g", p.oscillator_length() / dx);
        rep.metric("var_x_over_dx_g_sq", p.var_x / (dx * dx));
    }
}

/// `sne-evolve`: Schrödinger–Newton evolution of the configured initial state.
pub fn run_sne_evolve(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let kernel = cfg.build_kernel()?;
    let psi = initial_state(cfg, &kernel)?;
    let tr = evolve_sne(&psi, &kernel, &evolution(cfg))?;
    let first = tr.samples[0];
    let last = *tr.samples.last().unwrap();
    let vars = tr.var_x();
    let mut rep = ScenarioReport::new(ScenarioKind::SneEvolve, cfg);
    rep.metric("final_time", last.t);
    rep.metric("final_var_x", last.var_x);
    rep.metric("final_mean_x", last.mean_x);
    rep.metric("norm_drift", (last.norm - first.norm).abs());
    rep.metric("energy_drift", (last.energy - first.energy).abs());
    rep.metric(
        "var_x_min",
        vars.iter().cloned().fold(f64::INFINITY, f64::min),
    );
    rep.metric(
        "var_x_max",
        vars.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    rep.attach_series("series.csv", &tr.samples);
    rep.attach_snapshot("final_state", &tr.final_state, last.t);
    Ok(rep)
}

/// `sne-ground`: imaginary-time Schrödinger–Newton ground state.
pub fn run_sne_ground(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let ball = cfg.resolve_ball()?.internal;
    let kernel = cfg.build_kernel()?;
    let d = GroundStateOptions::default();
    let opts = GroundStateOptions {
        dtau: cfg.dt,
        max_iter: cfg.max_iter.unwrap_or(d.max_iter),
        tol: cfg.tol.unwrap_or(d.tol),
        check_every: d.check_every,
        center: cfg.center,
        initial_width: cfg.width,
    };
    let p = ground_state_sne(&kernel, &opts)?;
    let mut rep = ScenarioReport::new(ScenarioKind::SneGround, cfg);
    pointer_metrics(&mut rep, &p, &ball);
    if let Some(v) = harmonic_ground_var(&kernel) {
        rep.metric("harmonic_ground_var_x", v);
    }
    rep.attach_snapshot("ground_state", &p.state, 0.0);
    Ok(rep)
}

/// `frsne-relax`: pointer state of the frictional equation.
pub fn run_frsne_relax(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let ball = cfg.resolve_ball()?.internal;
    let kernel = cfg.build_kernel()?;
    let d = RelaxOptions::default();
    let opts = RelaxOptions {
        dt: cfg.dt,
        check_interval: d.check_interval,
        tol: cfg.tol.unwrap_or(d.tol),
        max_time: cfg.max_time.unwrap_or(d.max_time),
        center: cfg.center,
        initial_width: cfg.width,
    };
    let p = pointer_state_frsne(&kernel, &opts)?;
    let mut rep = ScenarioReport::new(ScenarioKind::FrsneRelax, cfg);
    pointer_metrics(&mut rep, &p, &ball);
    if let Some(v) = frictional_pointer_var(&kernel) {
        rep.metric("quadratic_pointer_var_x", v);
        rep.metric("var_x_over_quadratic_pointer", p.var_x / v);
    }
    rep.attach_snapshot("pointer_state", &p.state, 0.0);
    Ok(rep)
}

/// `vnne`: deterministic master-equation evolution. For a cat state the
/// coherence between the packet centres is tracked against `exp(-t / t_G(d))`,
/// which it follows exactly when the kinetic term is frozen.
pub fn run_vnne(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let ball = cfg.resolve_ball()?.internal;
    let kernel = cfg.build_kernel()?;
    let psi = initial_state(cfg, &kernel)?;
    let rho0 = DensityMatrix::from_pure(&psi);
    let tr = evolve_vnne(&rho0, &kernel, &evolution(cfg))?;
    let last = *tr.samples.last().unwrap();
    let mut rep = ScenarioReport::new(ScenarioKind::Vnne, cfg);
    rep.metric("final_time", last.t);
    rep.metric("final_purity", last.purity);
    rep.metric("final_trace", tr.final_state.trace());
    rep.metric("final_var_x", last.var_x);
    rep.metric("positivity_warnings", tr.positivity_warnings);
    rep.metric("min_eigenvalue", tr.min_eigenvalue);
    if cfg.separation > 0.0 {
        let g = kernel.grid();
        let (i, j) = (
            g.index_of(-0.5 * cfg.separation),
            g.index_of(0.5 * cfg.separation),
        );
        let d = (g.x(j) - g.x(i)).abs();
        let t_g = model_decoherence_time(&ball, &kernel, d);
        let c0 = rho0.entries()[(i, j)].norm();
        let c1 = tr.final_state.entries()[(i, j)].norm();
        rep.metric("t_g", t_g);
        rep.metric("coherence_ratio", c1 / c0);
        rep.metric("predicted_coherence_ratio", (-last.t / t_g).exp());
    }
    rep.attach_series("series.csv", &tr.samples);
    Ok(rep)
}

/// `pointer-relax`: frictional evolution from the configured start, with an
/// SNE run from the same start for comparison.
///
/// Fails with `NoConvergence` when gravity is on and the frictional width has
/// not settled by the end of the run; a run without gravity reports
/// `converged = false` instead, since no pointer state exists.
pub fn run_pointer_relaxation(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let ball = cfg.resolve_ball()?.internal;
    let kernel = cfg.build_kernel()?;
    let psi = initial_state(cfg, &kernel)?;
    let ev = evolution(cfg);
    let fr = evolve_frsne_with(&psi, &kernel, &ev, cfg.friction)?;
    let sne = evolve_sne(&psi, &kernel, &ev)?;

    let var_fr = fr.var_x();
    let var_sne = sne.var_x();
    let tail = &var_fr[var_fr.len() - (var_fr.len() / 4).max(2).min(var_fr.len())..];
    let spread = relative_spread(tail);
    let converged = spread < CONVERGED_SPREAD;
    let gravity = !matches!(kernel.model(), KernelModel::Zero);
    if gravity && !converged {
        return Err(SolverError::NoConvergence {
            iterations: cfg.steps,
            change: spread,
        }
        .into());
    }

    let final_var = *var_fr.last().unwrap();
    let mut rep = ScenarioReport::new(ScenarioKind::PointerRelax, cfg);
    rep.metric("converged", converged);
    rep.metric("initial_var_x", var_fr[0]);
    rep.metric("final_var_x", final_var);
    rep.metric("tail_relative_spread", spread);
    rep.metric("settle_time", settle_time(&fr.samples));
    rep.metric("sne_var_x_relative_spread", relative_spread(&var_sne));
    rep.metric("sne_final_var_x", *var_sne.last().unwrap());
    if let Some(v) = frictional_pointer_var(&kernel) {
        rep.metric("quadratic_pointer_var_x", v);
        rep.metric("final_var_x_over_quadratic_pointer", final_var / v);
    }
    if let Some(v) = harmonic_ground_var(&kernel) {
        rep.metric("sne_ground_var_x", v);
        rep.metric("final_var_x_over_sne_ground", final_var / v);
    }
    if let Some(dx) = dx_g(&ball) {
        rep.metric("dx_g", dx);
        rep.metric("final_width_over_dx_g", (2.0 * final_var).sqrt() / dx);
    }
    let mut csv = String::from("t,var_x_frsne,var_x_sne\n");
    for (a, b) in fr.samples.iter().zip(&sne.samples) {
        csv.push_str(&format!("{},{},{}\n", a.t, a.var_x, b.var_x));
    }
    rep.attach("width_series.csv", csv.into_bytes());
    rep.attach_series("frsne_series.csv", &fr.samples);
    rep.attach_series("sne_series.csv", &sne.samples);
    rep.attach_snapshot(
        "pointer_state",
        &fr.final_state,
        fr.samples.last().unwrap().t,
    );
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{parse_config, KernelChoice};

    #[test]
    fn quadratic_pointer_relaxation_reaches_closed_form() {
        let cfg = ScenarioConfig {
            kernel: KernelChoice::Quadratic,
            n: 128,
            length: 16.0,
            dt: 2e-3,
            steps: 7500,
            record_stride: 50,
            width: Some(1.2),
            ..Default::default()
        };
        let rep = run_pointer_relaxation(&cfg).unwrap();
        let r = rep.number("final_var_x_over_quadratic_pointer").unwrap();
        assert!((r - 1.0).abs() < 1e-3, "{r}");
        // The reversible comparison run keeps breathing.
        assert!(rep.number("sne_var_x_relative_spread").unwrap() > 0.5);
    }

    #[test]
    fn no_gravity_means_free_spreading() {
        let cfg = parse_config(
            r#"{"kernel": "zero", "n": 256, "length": 60, "dt": 1e-2, "steps": 500, "width": 0.7}"#,
        )
        .unwrap();
        let rep = run_pointer_relaxation(&cfg).unwrap();
        assert_eq!(rep.metrics["converged"], serde_json::Value::Bool(false));
        let grow = rep.number("final_var_x").unwrap() / rep.number("initial_var_x").unwrap();
        // Free spreading: var(t) = w² + (ħ t / 2 M w)², t = 5.
        let w2: f64 = 0.49;
        let want = (w2 + (5.0f64 / 1.4).powi(2)) / w2;
        assert!((grow - want).abs() < 1e-6 * want, "{grow} vs {want}");
    }

    #[test]
    fn frozen_kinetic_vnne_coherence_follows_t_g() {
        let cfg = ScenarioConfig {
            n: 64,
            length: 16.0,
            separation: 4.0,
            width: Some(0.7),
            dt: 1e-2,
            steps: 100,
            freeze_kinetic: true,
            ..Default::default()
        };
        let rep = run_vnne(&cfg).unwrap();
        let got = rep.number("coherence_ratio").unwrap();
        let want = rep.number("predicted_coherence_ratio").unwrap();
        assert!((got / want - 1.0).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn ground_state_run_reports_width() {
        let cfg = ScenarioConfig {
            kernel: KernelChoice::Quadratic,
            n: 128,
            length: 16.0,
            dt: 1e-2,
            tol: Some(1e-9),
            ..Default::default()
        };
        let rep = run_sne_ground(&cfg).unwrap();
        let v = rep.number("var_x").unwrap();
        let want = rep.number("harmonic_ground_var_x").unwrap();
        assert!((v / want - 1.0).abs() < 1e-3, "{v} vs {want}");
        assert_eq!(rep.files, vec!["ground_state.csv", "ground_state.bin"]);
    }
}
