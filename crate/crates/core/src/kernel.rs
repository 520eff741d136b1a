//! Newtonian self-interaction of two interpenetrating copies of a homogeneous ball.
//!
//! For centres a distance `d` apart the interaction energy is
//!
//! ```text
//! U(d) = -G ∫∫ f(r|x) f(r'|x') / |r - r'| dr dr'
//! ```
//!
//! with `f` the uniform density of a ball of mass `M` and radius `R`. For `d < 2R`
//! the overlap integral evaluates to the quintic
//! `-(G M^2 / R) (6/5 - s^2/2 + 3 s^3/16 - s^5/160)`, `s = d / R`; beyond contact the
//! shell theorem gives `-G M^2 / d`. The quadratic term reproduces
//! `U(0) + M omega_G^2 d^2 / 2` with `omega_G^2 = G M / R^3`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridSpec;
use crate::units::PhysicalConstants;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("separation must be non-negative, got {0}")]
    NegativeSeparation(f64),
    #[error("operation needs a ball of finite radius")]
    ZeroRadius,
    #[error("point-mass kernel without softening is singular at zero separation")]
    UnsoftenedPointKernel,
    #[error("ball mass must be positive and radius non-negative (M = {mass}, R = {radius})")]
    BadBall { mass: f64, radius: f64 },
}

/// Mass, radius and the constants they are measured with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    mass: f64,
    radius: f64,
    constants: PhysicalConstants,
}

impl BallSpec {
    pub fn new(mass: f64, radius: f64, constants: PhysicalConstants) -> Result<Self, KernelError> {
        if !(mass > 0.0 && mass.is_finite() && radius >= 0.0 && radius.is_finite()) {
            return Err(KernelError::BadBall { mass, radius });
        }
        Ok(Self {
            mass,
            radius,
            constants,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants
    }

    pub fn pointlike(&self) -> bool {
        self.radius == 0.0
    }

    /// `G M^2`, the energy-times-length scale of every potential below.
    pub fn coupling(&self) -> f64 {
        self.constants.g() * self.mass * self.mass
    }

    /// Mass density at distance `r` from the centre.
    pub fn density(&self, r: f64) -> f64 {
        if r <= self.radius {
            3.0 * self.mass / (4.0 * std::f64::consts::PI * self.radius.powi(3))
        } else {
            0.0
        }
    }
}

/// Overlap polynomial `U(sR)·R/(G M^2)` for `0 <= s < 2`.
fn overlap_shape(s: f64) -> f64 {
    -(1.2 - 0.5 * s * s + 3.0 / 16.0 * s.powi(3) - s.powi(5) / 160.0)
}

/// `U(d)` for a finite ball.
pub fn pair_potential(ball: &BallSpec, d: f64) -> Result<f64, KernelError> {
    if d < 0.0 {
        return Err(KernelError::NegativeSeparation(d));
    }
    if ball.pointlike() {
        return Err(KernelError::ZeroRadius);
    }
    let r = ball.radius();
    let s = d / r;
    Ok(if s < 2.0 {
        ball.coupling() / r * overlap_shape(s)
    } else {
        -ball.coupling() / d
    })
}

/// `U(d) - U(0)`, evaluated without the cancellation of the two large terms.
pub fn pair_excess(ball: &BallSpec, d: f64) -> Result<f64, KernelError> {
    if d < 0.0 {
        return Err(KernelError::NegativeSeparation(d));
    }
    if ball.pointlike() {
        return Err(KernelError::ZeroRadius);
    }
    let r = ball.radius();
    let s = d / r;
    Ok(if s < 2.0 {
        ball.coupling() / r * (0.5 * s * s - 3.0 / 16.0 * s.powi(3) + s.powi(5) / 160.0)
    } else {
        ball.coupling() * (1.2 / r - 1.0 / d)
    })
}

/// `dU/dd`.
pub fn pair_potential_slope(ball: &BallSpec, d: f64) -> Result<f64, KernelError> {
    if d < 0.0 {
        return Err(KernelError::NegativeSeparation(d));
    }
    if ball.pointlike() {
        return Err(KernelError::ZeroRadius);
    }
    let r = ball.radius();
    let s = d / r;
    Ok(if s < 2.0 {
        ball.coupling() / (r * r) * (s - 9.0 / 16.0 * s * s + s.powi(4) / 32.0)
    } else {
        ball.coupling() / (d * d)
    })
}

/// Potential value with an explicit marker for the `d = 0`, `ε = 0` singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValue {
    pub value: f64,
    pub singular: bool,
}

/// Softened point-mass interaction `-G M^2 / sqrt(d^2 + ε^2)`.
pub fn point_potential(ball: &BallSpec, d: f64, softening: f64) -> PotentialValue {
    let r2 = d * d + softening * softening;
    if r2 == 0.0 {
        PotentialValue {
            value: f64::NEG_INFINITY,
            singular: true,
        }
    } else {
        PotentialValue {
            value: -ball.coupling() / r2.sqrt(),
            singular: false,
        }
    }
}

/// `omega_G = sqrt(G M / R^3)`.
pub fn gravitational_frequency(ball: &BallSpec) -> Result<f64, KernelError> {
    if ball.pointlike() {
        return Err(KernelError::ZeroRadius);
    }
    Ok((ball.constants().g() * ball.mass() / ball.radius().powi(3)).sqrt())
}

/// Which interaction the grid solvers see.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum KernelModel {
    /// Full overlapping-ball closed form.
    Ball,
    /// Harmonic truncation `U(0) + M omega_G^2 d^2 / 2`.
    Quadratic,
    /// Point mass, softened by `softening` (default the ball radius).
    Point { softening: f64 },
    /// No gravity.
    Zero,
}

/// Kernel sampled on every separation a grid can produce, with the zero-padded
/// spectrum used for aperiodic convolution.
#[derive(Debug, Clone)]
pub struct KernelTable {
    model: KernelModel,
    grid: GridSpec,
    mass: f64,
    hbar: f64,
    u0: f64,
    omega_g: Option<f64>,
    /// `U(m h) - U(0)` for `m = 0..n`.
    excess: Vec<f64>,
    /// Circular layout of the excess over the padded length; `padded[m] = padded[P - m]`.
    padded: Vec<f64>,
    spectrum: Vec<Complex64>,
}

impl KernelTable {
    pub fn model(&self) -> KernelModel {
        self.model
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `U(0)`.
    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn omega_g(&self) -> Option<f64> {
        self.omega_g
    }

    /// Separations `m h`, `m = 0..n`.
    pub fn separations(&self) -> Vec<f64> {
        (0..self.grid.n())
            .map(|m| m as f64 * self.grid.spacing())
            .collect()
    }

    /// `U(m h)` for `m = 0..n`.
    pub fn values(&self) -> Vec<f64> {
        self.excess.iter().map(|e| e + self.u0).collect()
    }

    /// `U(x_i - x_j) - U(0)`.
    pub fn excess_between(&self, i: usize, j: usize) -> f64 {
        self.excess[i.abs_diff(j)]
    }

    /// `U(x_i - x_j)`.
    pub fn value_between(&self, i: usize, j: usize) -> f64 {
        self.u0 + self.excess_between(i, j)
    }

    pub fn padded(&self) -> &[f64] {
        &self.padded
    }

    pub(crate) fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    /// Dense `U(x_i - x_j)`.
    pub fn dense_matrix(&self) -> nalgebra::DMatrix<f64> {
        let n = self.grid.n();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.value_between(i, j))
    }
}

/// Samples `model` for `ball` on all pairwise separations of `grid`.
pub fn build_grid_kernel(
    ball: &BallSpec,
    grid: &GridSpec,
    model: KernelModel,
) -> Result<KernelTable, KernelError> {
    let n = grid.n();
    let h = grid.spacing();
    let (u0, omega_g): (f64, Option<f64>) = match model {
        KernelModel::Ball | KernelModel::Quadratic => (
            pair_potential(ball, 0.0)?,
            Some(gravitational_frequency(ball)?),
        ),
        KernelModel::Point { softening } => {
            let v = point_potential(ball, 0.0, softening);
            if v.singular {
                return Err(KernelError::UnsoftenedPointKernel);
            }
            (v.value, None)
        }
        KernelModel::Zero => (0.0, None),
    };
    let excess: Vec<f64> = (0..n)
        .map(|m| {
            let d = m as f64 * h;
            Ok(match model {
                KernelModel::Ball => pair_excess(ball, d)?,
                KernelModel::Quadratic => {
                    let w = omega_g.unwrap_or(0.0);
                    0.5 * ball.mass() * w * w * d * d
                }
                KernelModel::Point { softening } => {
                    let e = softening;
                    // -GM²/sqrt(d²+ε²) + GM²/ε in a cancellation-free form.
                    let s = (d * d + e * e).sqrt();
                    ball.coupling() * d * d / (e * s * (s + e))
                }
                KernelModel::Zero => 0.0,
            })
        })
        .collect::<Result<_, KernelError>>()?;

    let p = grid.padded_len();
    let mut padded = vec![0.0; p];
    for m in 0..n {
        padded[m] = excess[m];
        if m > 0 {
            padded[p - m] = excess[m];
        }
    }
    let mut spectrum: Vec<Complex64> = padded.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(p).process(&mut spectrum);

    Ok(KernelTable {
        model,
        grid: *grid,
        mass: ball.mass(),
        hbar: ball.constants().hbar(),
        u0,
        omega_g,
        excess,
        padded,
        spectrum,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    ball: [u64; 4],
    grid: (usize, u64, usize),
    model: (u8, u64),
}

impl CacheKey {
    fn new(ball: &BallSpec, grid: &GridSpec, model: KernelModel) -> Self {
        let c = ball.constants();
        let model = match model {
            KernelModel::Ball => (0, 0),
            KernelModel::Quadratic => (1, 0),
            KernelModel::Point { softening } => (2, softening.to_bits()),
            KernelModel::Zero => (3, 0),
        };
        Self {
            ball: [
                ball.mass().to_bits(),
                ball.radius().to_bits(),
                c.g().to_bits(),
                c.hbar().to_bits(),
            ],
            grid: (grid.n(), grid.length().to_bits(), grid.padding()),
            model,
        }
    }
}

/// Memoises kernel tables per (ball, grid, model); any parameter change is a new key.
#[derive(Debug, Default)]
pub struct KernelCache {
    tables: Mutex<HashMap<CacheKey, Arc<KernelTable>>>,
}

impl KernelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(
        &self,
        ball: &BallSpec,
        grid: &GridSpec,
        model: KernelModel,
    ) -> Result<Arc<KernelTable>, KernelError> {
        let key = CacheKey::new(ball, grid, model);
        if let Some(t) = self.tables.lock().expect("kernel cache poisoned").get(&key) {
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(build_grid_kernel(ball, grid, model)?);
        self.tables
            .lock()
            .expect("kernel cache poisoned")
            .insert(key, Arc::clone(&table));
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.tables.lock().expect("kernel cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One row of the `kernel` CSV dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSample {
    pub d: f64,
    pub u: f64,
    pub u_far: f64,
    pub u_near: f64,
}

/// `U(d)` with both asymptotes on `count` evenly spaced separations in `[0, d_max]`.
pub fn sample_kernel(
    ball: &BallSpec,
    d_max: f64,
    count: usize,
) -> Result<Vec<KernelSample>, KernelError> {
    let omega = gravitational_frequency(ball)?;
    let u0 = pair_potential(ball, 0.0)?;
    let count = count.max(2);
    (0..count)
        .map(|i| {
            let d = d_max * i as f64 / (count - 1) as f64;
            Ok(KernelSample {
                d,
                u: pair_potential(ball, d)?,
                u_far: if d > 0.0 {
                    -ball.coupling() / d
                } else {
                    f64::NEG_INFINITY
                },
                u_near: u0 + 0.5 * ball.mass() * omega * omega * d * d,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn unit_ball() -> BallSpec {
        BallSpec::new(1.0, 1.0, PhysicalConstants::unit()).unwrap()
    }

    #[test]
    fn reference_values() {
        let b = unit_ball();
        assert!((pair_potential(&b, 0.0).unwrap() + 1.2).abs() < 1e-15);
        assert!((pair_potential(&b, 2.5).unwrap() + 0.4).abs() < 1e-15);
        assert!((pair_potential(&b, 10.0).unwrap() + 0.1).abs() < 1e-15);
        assert!((pair_potential(&b, 2.0).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn contact_is_c1() {
        let b = unit_ball();
        let below = 2.0 - 1e-12;
        let v_lo = pair_potential(&b, below).unwrap();
        let v_hi = pair_potential(&b, 2.0).unwrap();
        assert!((v_lo - v_hi).abs() < 1e-9);
        let s_lo = pair_potential_slope(&b, below).unwrap();
        let s_hi = pair_potential_slope(&b, 2.0).unwrap();
        assert!((s_lo - s_hi).abs() < 1e-9);
    }

    #[test]
    fn excess_matches_difference() {
        let b = BallSpec::new(3.0, 0.7, PhysicalConstants::new(2.0, 1.0).unwrap()).unwrap();
        for i in 0..40 {
            let d = 0.1 * i as f64;
            let direct = pair_potential(&b, d).unwrap() - pair_potential(&b, 0.0).unwrap();
            assert!((pair_excess(&b, d).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let b = unit_ball();
        assert_eq!(
            pair_potential(&b, -1.0),
            Err(KernelError::NegativeSeparation(-1.0))
        );
        let p = BallSpec::new(1.0, 0.0, PhysicalConstants::unit()).unwrap();
        assert!(p.pointlike());
        assert_eq!(pair_potential(&p, 1.0), Err(KernelError::ZeroRadius));
        assert_eq!(gravitational_frequency(&p), Err(KernelError::ZeroRadius));
        assert!(BallSpec::new(0.0, 1.0, PhysicalConstants::unit()).is_err());
        assert!(BallSpec::new(1.0, -1.0, PhysicalConstants::unit()).is_err());
    }

    #[test]
    fn point_potential_cases() {
        let b = unit_ball();
        assert_eq!(point_potential(&b, 1.0, 0.0).value, -1.0);
        let s = point_potential(&b, 0.0, 0.0);
        assert!(s.singular && s.value == f64::NEG_INFINITY);
        let soft = point_potential(&b, 0.0, b.radius());
        assert!(!soft.singular && soft.value == -1.0);
    }

    #[test]
    fn frequency_is_density_invariant() {
        let b = unit_ball();
        assert_eq!(gravitational_frequency(&b).unwrap(), 1.0);
        let big = BallSpec::new(8.0, 2.0, PhysicalConstants::unit()).unwrap();
        assert!((gravitational_frequency(&big).unwrap() - 1.0).abs() < 1e-15);
        // sqrt(4πGρ/3) for ρ = 1 g/cm³.
        let cgs = BallSpec::new(
            crate::units::ball_mass(1.0, 0.3),
            0.3,
            PhysicalConstants::cgs(),
        )
        .unwrap();
        let expected = (4.0 * std::f64::consts::PI * crate::units::G_CGS / 3.0).sqrt();
        let w = gravitational_frequency(&cgs).unwrap();
        assert!((w - expected).abs() / expected < 1e-12);
        assert!((w - 5.29e-4).abs() < 1e-6);
    }

    #[test]
    fn grid_kernel_far_entries_follow_shell_theorem() {
        let b = BallSpec::new(1.0, 0.5, PhysicalConstants::unit()).unwrap();
        let g = make_grid(64, 16.0, 2).unwrap();
        let k = build_grid_kernel(&b, &g, KernelModel::Ball).unwrap();
        for (d, u) in k.separations().into_iter().zip(k.values()) {
            if d >= 2.0 * b.radius() {
                assert!((u + 1.0 / d).abs() < 1e-12, "d = {d}");
            }
        }
        let p = k.padded();
        let len = p.len();
        for m in 1..len {
            assert_eq!(p[m], p[len - m]);
        }
    }

    #[test]
    fn grid_kernel_in_quadratic_regime() {
        let b = BallSpec::new(1.0, 1e3, PhysicalConstants::unit()).unwrap();
        let g = make_grid(16, 16.0, 2).unwrap();
        let k = build_grid_kernel(&b, &g, KernelModel::Ball).unwrap();
        let w2 = gravitational_frequency(&b).unwrap().powi(2);
        for (m, d) in k.separations().into_iter().enumerate() {
            let quad = 0.5 * w2 * d * d;
            let excess = k.excess_between(0, m);
            assert!((excess - quad).abs() <= 1e-2 * quad);
        }
    }

    #[test]
    fn unsoftened_point_kernel_is_rejected() {
        let b = BallSpec::new(1.0, 0.0, PhysicalConstants::unit()).unwrap();
        let g = make_grid(16, 16.0, 2).unwrap();
        assert_eq!(
            build_grid_kernel(&b, &g, KernelModel::Point { softening: 0.0 }).unwrap_err(),
            KernelError::UnsoftenedPointKernel
        );
        let k = build_grid_kernel(&b, &g, KernelModel::Point { softening: 0.5 }).unwrap();
        assert_eq!(k.u0(), -2.0);
        let d3 = 3.0;
        assert!((k.value_between(0, 3) + 1.0 / (d3 * d3 + 0.25f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn cache_reuses_tables() {
        let cache = KernelCache::new();
        let b = unit_ball();
        let g = make_grid(16, 8.0, 2).unwrap();
        let a = cache.get(&b, &g, KernelModel::Ball).unwrap();
        let a2 = cache.get(&b, &g, KernelModel::Ball).unwrap();
        assert!(Arc::ptr_eq(&a, &a2));
        let g2 = make_grid(16, 9.0, 2).unwrap();
        let c = cache.get(&b, &g2, KernelModel::Ball).unwrap();
        assert!(!Arc::ptr_eq(&a, &c));
        assert_eq!(cache.len(), 2);
    }
}
