use serde::Serialize;

use super::deterministic_runs::{
    evolution, frictional_pointer_var, initial_state, model_decoherence_time, packet_width,
};
use super::{
    compare_with_reference, EntrywiseStats, ScenarioConfig, ScenarioError, ScenarioKind,
    ScenarioReport, UnravelMode,
};
use crate::deterministic::{
    conditional_pointer_exponent, evolve_vnne, write_series_csv, GaussianMoments,
};
use crate::grid::{cat_state, DensityMatrix, WaveFunction};
use crate::kernel::KernelTable;
use crate::stochastic::{
    evolve_quadratic_stochastic, evolve_stochastic_master, evolve_stochastic_wave, run_ensemble,
    summarize, Branch, BranchCounts, CollapseCriterion, DiffusionFit, NoiseModel, QuadraticNoise,
    StochasticConfig, TrajectoryRecord,
};

/// Largest grid for which the ensemble is checked entrywise against the
/// deterministic master equation.
pub const CONSISTENCY_MAX_N: usize = 128;

/// The ensemble summary document.
#[derive(Debug, Clone, Serialize)]
struct SummaryDoc<'a> {
    n_traj: usize,
    collapse_time_quantiles: &'a [(f64, f64)],
    branch_counts: BranchCounts,
    mean_var_x_series: &'a [(f64, f64)],
    centroid_var_series: &'a [(f64, f64)],
    diffusion_fit: Option<DiffusionFit>,
}

fn stochastic_config(cfg: &ScenarioConfig, collapse: bool) -> StochasticConfig {
    let mut s = StochasticConfig::new(evolution(cfg));
    s.noise_scale = cfg.noise_scale;
    s.compensator = cfg.compensator;
    s.stop_at_collapse = cfg.stop_at_collapse;
    s.collapse = collapse.then_some(CollapseCriterion {
        split: 0.0,
        threshold: cfg.collapse_threshold,
    });
    s
}

struct EnsembleRun {
    records: Vec<TrajectoryRecord>,
    /// Final density matrices (pure projectors for wave-function modes).
    finals: Vec<DensityMatrix>,
}

fn run_mode(
    cfg: &ScenarioConfig,
    mode: UnravelMode,
    kernel: &KernelTable,
    psi0: &WaveFunction,
    scfg: &StochasticConfig,
) -> Result<EnsembleRun, ScenarioError> {
    let n = cfg.ensemble_size as u64;
    let seed = cfg.seed;
    let records: Vec<TrajectoryRecord>;
    let finals: Vec<DensityMatrix>;
    match mode {
        UnravelMode::Wave => {
            let noise = NoiseModel::from_kernel(kernel)?;
            let mut recs = run_ensemble(n, |k| {
                evolve_stochastic_wave(psi0, kernel, &noise, scfg, seed, k)
            })?;
            finals = recs
                .iter_mut()
                .map(|r| {
                    DensityMatrix::from_pure(r.final_state.as_ref().expect("final state kept"))
                })
                .collect();
            records = recs;
        }
        UnravelMode::Master => {
            let noise = NoiseModel::from_kernel(kernel)?;
            let rho0 = DensityMatrix::from_pure(psi0);
            let recs = run_ensemble(n, |k| {
                evolve_stochastic_master(&rho0, kernel, &noise, scfg, seed, k)
            })?;
            let mut rs = Vec::with_capacity(recs.len());
            let mut fs = Vec::with_capacity(recs.len());
            for m in recs {
                rs.push(TrajectoryRecord {
                    seed: m.seed,
                    index: m.index,
                    samples: m.samples,
                    collapse_time: m.collapse_time,
                    branch: m.branch,
                    final_state: None,
                    max_norm_drift: m.max_norm_drift,
                });
                fs.push(m.final_state);
            }
            records = rs;
            finals = fs;
        }
        UnravelMode::Quadratic => {
            let noise = QuadraticNoise::from_kernel(kernel)?;
            let recs = run_ensemble(n, |k| {
                evolve_quadratic_stochastic(psi0, kernel, noise, scfg, seed, k)
            })?;
            finals = Vec::new();
            records = recs;
        }
    }
    Ok(EnsembleRun { records, finals })
}

fn attach_ensemble(rep: &mut ScenarioReport, cfg: &ScenarioConfig, records: &[TrajectoryRecord]) {
    let duration = cfg.dt * cfg.steps as f64;
    let window = cfg.fit_window.map_or((0.0, duration), |[a, b]| (a, b));
    let s = summarize(records, Some(window));
    rep.metric("n_traj", s.n_traj);
    rep.metric("branch_counts", s.branch_counts);
    rep.metric("collapse_time_quantiles", &s.collapse_time_quantiles);
    if let Some(f) = s.diffusion_fit {
        rep.metric("diffusion_slope", f.slope);
        rep.metric("diffusion_slope_se", f.slope_se);
    }
    if let Some(&(_, v)) = s.mean_var_x_series.last() {
        rep.metric("final_mean_var_x", v);
    }
    let drift = records.iter().map(|r| r.max_norm_drift).fold(0.0, f64::max);
    rep.metric("max_norm_drift", drift);
    rep.attach_json(
        "ensemble_summary.json",
        &SummaryDoc {
            n_traj: s.n_traj,
            collapse_time_quantiles: &s.collapse_time_quantiles,
            branch_counts: s.branch_counts,
            mean_var_x_series: &s.mean_var_x_series,
            centroid_var_series: &s.centroid_var_series,
            diffusion_fit: s.diffusion_fit,
        },
    );
    if cfg.trajectory_csv {
        for r in records {
            let mut buf = Vec::new();
            write_series_csv(&mut buf, &r.samples).expect("writing to memory");
            rep.attach(format!("trajectories/traj_{:05}.csv", r.index), buf);
        }
    }
}

/// `unravel`: an ensemble of stochastic trajectories from the configured state.
///
/// For field-noise modes on grids up to [`CONSISTENCY_MAX_N`] points, the
/// ensemble-mean final density matrix is compared entrywise with the
/// deterministic master equation run over the same steps.
pub fn run_unravel_ensemble(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let kernel = cfg.build_kernel()?;
    let psi0 = initial_state(cfg, &kernel)?;
    let scfg = stochastic_config(cfg, cfg.separation > 0.0);
    let run = run_mode(cfg, cfg.unravel, &kernel, &psi0, &scfg)?;

    let mut rep = ScenarioReport::new(ScenarioKind::UnravelEnsemble, cfg);
    attach_ensemble(&mut rep, cfg, &run.records);
    let comparable =
        !run.finals.is_empty() && !cfg.stop_at_collapse && kernel.grid().n() <= CONSISTENCY_MAX_N;
    if comparable {
        let mut ev = evolution(cfg);
        ev.record_stride = cfg.steps.max(1);
        let reference = evolve_vnne(&DensityMatrix::from_pure(&psi0), &kernel, &ev)?.final_state;
        let stats = EntrywiseStats::from_matrices(run.finals.iter().map(DensityMatrix::entries));
        let c = compare_with_reference(&stats, &reference);
        rep.metric("consistency", c);
    }
    Ok(rep)
}

/// `cat`: stochastic collapse of a balanced cat state.
///
/// Reports the collapse-time distribution against `t_G(d)`, the branch
/// frequencies, and the mean width reached after collapse compared with the
/// frictional and conditional pointer widths of the quadratic core.
pub fn run_cat_collapse(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let ball = cfg.resolve_ball()?.internal;
    let kernel = cfg.build_kernel()?;
    let d = cfg.separation;
    let w = packet_width(cfg, &kernel);
    if !(d >= 10.0 * w) {
        return Err(ScenarioError::UnresolvedCat(format!(
            "separation {d} is less than ten packet widths ({w})"
        )));
    }
    let psi0 =
        cat_state(kernel.grid(), d, w).map_err(|e| ScenarioError::UnresolvedCat(e.to_string()))?;
    let scfg = stochastic_config(cfg, true);
    let run = run_mode(cfg, UnravelMode::Wave, &kernel, &psi0, &scfg)?;
    let records = &run.records;

    let t_g = model_decoherence_time(&ball, &kernel, d);
    let mut times: Vec<f64> = records.iter().filter_map(|r| r.collapse_time).collect();
    times.sort_by(f64::total_cmp);
    let n = records.len();
    let collapsed = times.len();
    let median = if times.is_empty() {
        f64::NAN
    } else if collapsed % 2 == 1 {
        times[collapsed / 2]
    } else {
        0.5 * (times[collapsed / 2 - 1] + times[collapsed / 2])
    };
    let left = records
        .iter()
        .filter(|r| r.branch == Some(Branch::Left))
        .count();
    let right = records
        .iter()
        .filter(|r| r.branch == Some(Branch::Right))
        .count();
    let decided = (left + right) as f64;
    let ratio = median / t_g;

    let mut rep = ScenarioReport::new(ScenarioKind::CatCollapse, cfg);
    rep.metric("t_g", t_g);
    rep.metric("packet_width", w);
    rep.metric("collapsed_fraction", collapsed as f64 / n as f64);
    rep.metric("all_collapsed", collapsed == n);
    rep.metric("median_collapse_time", median);
    rep.metric("median_collapse_over_t_g", ratio);
    rep.metric(
        "within_band",
        ratio >= cfg.tg_band[0] && ratio <= cfg.tg_band[1],
    );
    rep.metric("branch_left", left);
    rep.metric("branch_right", right);
    rep.metric(
        "branch_z",
        (left as f64 - 0.5 * decided) / (0.25 * decided).sqrt(),
    );

    let finals: Vec<f64> = records
        .iter()
        .filter(|r| r.collapse_time.is_some())
        .filter_map(|r| r.samples.last().map(|s| s.var_x))
        .collect();
    if !finals.is_empty() {
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        rep.metric("post_collapse_var_x", mean);
        if let Some(v) = frictional_pointer_var(&kernel) {
            rep.metric("frsne_pointer_var_x", v);
            rep.metric("post_collapse_var_over_frsne_pointer", mean / v);
        }
        if let Some(om) = kernel.omega_g().filter(|w| *w > 0.0) {
            let a = conditional_pointer_exponent(kernel.mass(), om, kernel.hbar());
            let v = GaussianMoments::from_exponent(a, kernel.hbar()).var_x;
            rep.metric("conditional_pointer_var_x", v);
            rep.metric("post_collapse_var_over_conditional_pointer", mean / v);
        }
    }

    let mut csv = String::from("index,collapse_time,branch,final_mean_x,final_var_x\n");
    for r in records {
        let last = r.samples.last();
        let branch = match r.branch {
            Some(Branch::Left) => "left",
            Some(Branch::Right) => "right",
            None => "none",
        };
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.index,
            r.collapse_time.map_or(String::new(), |t| t.to_string()),
            branch,
            last.map_or(f64::NAN, |s| s.mean_x),
            last.map_or(f64::NAN, |s| s.var_x),
        ));
    }
    rep.attach("collapse.csv", csv.into_bytes());
    attach_ensemble(&mut rep, cfg, records);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::ScenarioError;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            n: 64,
            length: 12.0,
            g: Some(16.0),
            separation: 4.0,
            width: Some(0.5),
            dt: 4e-3,
            steps: 20,
            ensemble_size: 8,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn same_config_same_report() {
        let cfg = small();
        let a = run_unravel_ensemble(&cfg).unwrap();
        let b = run_unravel_ensemble(&cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.artifacts, b.artifacts);
        assert!(a.metrics.contains_key("consistency"));
    }

    #[test]
    fn master_and_wave_modes_agree() {
        let cfg = small();
        let m = run_unravel_ensemble(&ScenarioConfig {
            unravel: UnravelMode::Master,
            ..cfg.clone()
        })
        .unwrap();
        let w = run_unravel_ensemble(&cfg).unwrap();
        let dm = m.metrics["consistency"]["frobenius_error"]
            .as_f64()
            .unwrap();
        let dw = w.metrics["consistency"]["frobenius_error"]
            .as_f64()
            .unwrap();
        assert!((dm - dw).abs() < 1e-8 * dw.max(1e-300), "{dm} vs {dw}");
    }

    #[test]
    fn narrow_separation_is_rejected() {
        let cfg = ScenarioConfig {
            separation: 2.0,
            ..small()
        };
        assert!(matches!(
            run_cat_collapse(&cfg),
            Err(ScenarioError::UnresolvedCat(_))
        ));
    }

    #[test]
    fn packets_off_the_grid_are_rejected() {
        let cfg = ScenarioConfig {
            separation: 10.0,
            ..small()
        };
        assert!(matches!(
            run_cat_collapse(&cfg),
            Err(ScenarioError::UnresolvedCat(_))
        ));
    }
}
