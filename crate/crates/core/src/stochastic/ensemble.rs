use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{Branch, TrajectoryRecord};
use crate::grid::{DensityMatrix, WaveFunction};

/// Runs `n` trajectories in parallel; results come back in index order, so the
/// output does not depend on the thread count.
pub fn run_ensemble<T, E, F>(n: u64, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync,
{
    (0..n).into_par_iter().map(&f).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BranchCounts {
    pub left: usize,
    pub right: usize,
    pub undecided: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffusionFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub window: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub n_traj: usize,
    /// `(q, t)` pairs over the trajectories that collapsed.
    pub collapse_time_quantiles: Vec<(f64, f64)>,
    pub branch_counts: BranchCounts,
    /// `(t, mean over trajectories of var_x)`.
    pub mean_var_x_series: Vec<(f64, f64)>,
    /// `(t, variance over trajectories of <x>)`.
    pub centroid_var_series: Vec<(f64, f64)>,
    pub diffusion_fit: Option<DiffusionFit>,
}

/// Least-squares line `y = a x + b`; returns `(a, b, standard error of a)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let rss: f64 = x.iter().zip(y).map(|(x, y)| (y - a * x - b).powi(2)).sum();
    let se = if n > 2.0 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (a, b, se)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Summary statistics; `fit_window` selects the times for the linear fit of
/// the centroid variance.
pub fn summarize(records: &[TrajectoryRecord], fit_window: Option<(f64, f64)>) -> EnsembleSummary {
    let mut counts = BranchCounts::default();
    let mut times: Vec<f64> = Vec::new();
    for r in records {
        match r.branch {
            Some(Branch::Left) => counts.left += 1,
            Some(Branch::Right) => counts.right += 1,
            None => counts.undecided += 1,
        }
        if let Some(t) = r.collapse_time {
            times.push(t);
        }
    }
    times.sort_by(f64::total_cmp);
    let collapse_time_quantiles = if times.is_empty() {
        Vec::new()
    } else {
        [0.1, 0.25, 0.5, 0.75, 0.9]
            .iter()
            .map(|&q| (q, quantile(&times, q)))
            .collect()
    };

    let len = records.iter().map(|r| r.samples.len()).min().unwrap_or(0);
    let n = records.len() as f64;
    let mut mean_var_x_series = Vec::with_capacity(len);
    let mut centroid_var_series = Vec::with_capacity(len);
    for s in 0..len {
        let t = records[0].samples[s].t;
        let mv = records.iter().map(|r| r.samples[s].var_x).sum::<f64>() / n;
        let mean_c = records.iter().map(|r| r.samples[s].mean_x).sum::<f64>() / n;
        let var_c = records
            .iter()
            .map(|r| (r.samples[s].mean_x - mean_c).powi(2))
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        mean_var_x_series.push((t, mv));
        centroid_var_series.push((t, var_c));
    }

    let diffusion_fit = fit_window.and_then(|(t0, t1)| {
        let (x, y): (Vec<f64>, Vec<f64>) = centroid_var_series
            .iter()
            .filter(|(t, _)| *t >= t0 - 1e-12 && *t <= t1 + 1e-12)
            .cloned()
            .unzip();
        (x.len() >= 3).then(|| {
            let (slope, intercept, slope_se) = fit_line(&x, &y);
            DiffusionFit {
                slope,
                intercept,
                slope_se,
                window: (t0, t1),
            }
        })
    });

    EnsembleSummary {
        n_traj: records.len(),
        collapse_time_quantiles,
        branch_counts: counts,
        mean_var_x_series,
        centroid_var_series,
        diffusion_fit,
    }
}

/// Entrywise mean of `|ψ><ψ|` with standard errors of the real and imaginary parts.
pub fn ensemble_mean_density(
    states: &[WaveFunction],
) -> (DensityMatrix, DMatrix<f64>, DMatrix<f64>) {
    let grid = *states[0].grid();
    let n = grid.n();
    let mut sum = DMatrix::<Complex64>::zeros(n, n);
    let mut sq_re = DMatrix::<f64>::zeros(n, n);
    let mut sq_im = DMatrix::<f64>::zeros(n, n);
    for psi in states {
        let a = psi.amplitudes();
        for j in 0..n {
            for i in 0..n {
                let v = a[i] * a[j].conj();
                sum[(i, j)] += v;
                sq_re[(i, j)] += v.re * v.re;
                sq_im[(i, j)] += v.im * v.im;
            }
        }
    }
    let m = states.len() as f64;
    let mean = sum.map(|c| c / m);
    let se = |sq: &DMatrix<f64>, part: fn(Complex64) -> f64| {
        DMatrix::from_fn(n, n, |i, j| {
            let mu = part(mean[(i, j)]);
            let var = (sq[(i, j)] / m - mu * mu).max(0.0) * m / (m - 1.0);
            (var / m).sqrt()
        })
    };
    let se_re = se(&sq_re, |c| c.re);
    let se_im = se(&sq_im, |c| c.im);
    (DensityMatrix::from_entries(grid, mean), se_re, se_im)
}
