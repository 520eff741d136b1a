use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::grid::DensityMatrix;

/// Entrywise mean and standard errors of a set of density matrices.
#[derive(Debug, Clone)]
pub struct EntrywiseStats {
    pub mean: DMatrix<Complex64>,
    pub se_re: DMatrix<f64>,
    pub se_im: DMatrix<f64>,
    pub count: usize,
}

impl EntrywiseStats {
    pub fn from_matrices<'a>(mats: impl IntoIterator<Item = &'a DMatrix<Complex64>>) -> Self {
        let mut iter = mats.into_iter().peekable();
        let first = iter.peek().expect("at least one matrix");
        let (r, c) = first.shape();
        let mut sum = DMatrix::<Complex64>::zeros(r, c);
        let mut sq_re = DMatrix::<f64>::zeros(r, c);
        let mut sq_im = DMatrix::<f64>::zeros(r, c);
        let mut count = 0usize;
        for m in iter {
            sum += m;
            sq_re.zip_apply(m, |s, v| *s += v.re * v.re);
            sq_im.zip_apply(m, |s, v| *s += v.im * v.im);
            count += 1;
        }
        let k = count as f64;
        let mean = sum / Complex64::new(k, 0.0);
        let se = |sq: &DMatrix<f64>, part: fn(&Complex64) -> f64| {
            DMatrix::from_fn(r, c, |i, j| {
                let mu = part(&mean[(i, j)]);
                let var = (sq[(i, j)] / k - mu * mu).max(0.0) * k / (k - 1.0).max(1.0);
                (var / k).sqrt()
            })
        };
        let se_re = se(&sq_re, |c| c.re);
        let se_im = se(&sq_im, |c| c.im);
        Self {
            mean,
            se_re,
            se_im,
            count,
        }
    }
}

/// How well an ensemble average reproduces a reference density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnravelingConsistency {
    pub n_traj: usize,
    /// Largest entrywise `|mean - reference| / SE` over real and imaginary parts.
    pub max_z: f64,
    /// Fraction of real and imaginary entries with `|z| > 3`.
    pub frac_beyond_3se: f64,
    /// Frobenius norm of `mean - reference`.
    pub frobenius_error: f64,
    /// `frobenius_error` over the Frobenius norm of the reference.
    pub relative_error: f64,
}

/// Relative floor on the standard error, so that entries where every sample
/// vanishes (up to rounding) do not produce huge z-scores.
pub const SE_FLOOR: f64 = 1e-12;

pub fn compare_with_reference(
    stats: &EntrywiseStats,
    reference: &DensityMatrix,
) -> UnravelingConsistency {
    let r = reference.entries();
    let scale = r.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let floor = SE_FLOOR * scale;
    let mut max_z: f64 = 0.0;
    let mut beyond = 0usize;
    let mut total = 0usize;
    for ((d, re_se), im_se) in (&stats.mean - r)
        .iter()
        .zip(stats.se_re.iter())
        .zip(stats.se_im.iter())
    {
        for (err, se) in [(d.re, *re_se), (d.im, *im_se)] {
            let z = err.abs() / se.max(floor);
            max_z = max_z.max(z);
            beyond += usize::from(z > 3.0);
            total += 1;
        }
    }
    let frobenius_error = (&stats.mean - r).map(|c| c.norm_sqr()).sum().sqrt();
    let norm = r.map(|c| c.norm_sqr()).sum().sqrt();
    UnravelingConsistency {
        n_traj: stats.count,
        max_z,
        frac_beyond_3se: beyond as f64 / total as f64,
        frobenius_error,
        relative_error: frobenius_error / norm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn identical_samples_match_exactly() {
        let g = make_grid(16, 4.0, 2).unwrap();
        let m = DMatrix::from_fn(16, 16, |i, j| {
            Complex64::new((i + j) as f64, i as f64 - j as f64)
        });
        let stats = EntrywiseStats::from_matrices([&m, &m, &m]);
        let c = compare_with_reference(&stats, &DensityMatrix::from_entries(g, m.clone()));
        assert_eq!(c.frobenius_error, 0.0);
        assert_eq!(c.frac_beyond_3se, 0.0);
    }

    #[test]
    fn standard_errors_of_two_values() {
        let a = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        let b = DMatrix::from_element(1, 1, Complex64::new(3.0, 2.0));
        let s = EntrywiseStats::from_matrices([&a, &b]);
        assert_eq!(s.mean[(0, 0)], Complex64::new(2.0, 1.0));
        // Sample std of {1, 3} is sqrt(2); SE = sqrt(2) / sqrt(2) = 1.
        assert!((s.se_re[(0, 0)] - 1.0).abs() < 1e-14);
    }
}
