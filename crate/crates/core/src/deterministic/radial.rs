//! Spherically symmetric ground state of the Schrödinger–Newton equation for a
//! point mass in three dimensions.
//!
//! Works in the natural units `ħ = M = G = 1` on `u(r) = sqrt(4π) r ψ(r)` with
//! `∫ u² dr = 1`, then rescales: lengths by `ħ² / (G M³)`, energies by
//! `G² M⁵ / ħ²`.

use super::SolverError;
use crate::units::PhysicalConstants;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOptions {
    /// Outer radius in natural units.
    pub r_max: f64,
    pub points: usize,
    pub dtau: f64,
    /// Relative change of the eigenvalue between iterations.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self {
            r_max: 40.0,
            points: 4000,
            dtau: 0.5,
            tol: 1e-12,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSoliton {
    /// Radii `r_i = i h`, `i = 1..=points`, in physical length.
    pub r: Vec<f64>,
    /// `u(r_i)` with `∫ u² dr = 1` in physical length.
    pub u: Vec<f64>,
    /// Single-particle eigenvalue of the mean-field Hamiltonian.
    pub eigenvalue: f64,
    /// Value of the energy functional `<T> + <V>/2`.
    pub energy: f64,
    pub rms_radius: f64,
    pub iterations: usize,
}

/// `V(r_i) = -[(1/r) ∫_0^r u² + ∫_r^∞ u²/r']` in natural units.
fn radial_potential(r: &[f64], u: &[f64], h: f64, out: &mut [f64]) {
    let n = r.len();
    let mut inner = 0.0;
    let mut outer: f64 = u.iter().zip(r).map(|(u, r)| u * u / r).sum::<f64>() * h;
    for i in 0..n {
        let w = u[i] * u[i] * h;
        // Split the own cell evenly between both integrals.
        inner += 0.5 * w;
        outer -= 0.5 * w / r[i];
        out[i] = -(inner / r[i] + outer);
        inner += 0.5 * w;
        outer -= 0.5 * w / r[i];
    }
}

/// Solves `(diag + off (shift_down + shift_up)) x = rhs`, tridiagonal with
/// constant off-diagonal, by the Thomas algorithm.
fn solve_tridiagonal(diag: &[f64], off: f64, rhs: &mut [f64], work: &mut [f64]) {
    let n = diag.len();
    work[0] = off / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let m = diag[i] - off * work[i - 1];
        work[i] = off / m;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= work[i] * rhs[i + 1];
    }
}

fn normalise(u: &mut [f64], h: f64) {
    let s = (u.iter().map(|x| x * x).sum::<f64>() * h).sqrt();
    u.iter_mut().for_each(|x| *x /= s);
}

/// Kinetic and potential expectation values, natural units.
fn expectations(u: &[f64], v: &[f64], h: f64) -> (f64, f64) {
    let n = u.len();
    let mut t = 0.0;
    for i in 0..n {
        let left = if i == 0 { 0.0 } else { u[i - 1] };
        let right = if i + 1 == n { 0.0 } else { u[i + 1] };
        t += -0.5 * u[i] * (left - 2.0 * u[i] + right) / (h * h);
    }
    let pot: f64 = u.iter().zip(v).map(|(u, v)| u * u * v).sum();
    (t * h, pot * h)
}

pub fn radial_ground_state(
    mass: f64,
    constants: PhysicalConstants,
    opts: &RadialOptions,
) -> Result<RadialSoliton, SolverError> {
    if opts.points < 16 || !(opts.r_max > 0.0) || !(opts.dtau > 0.0) {
        return Err(SolverError::BadConfig(format!(
            "radial solver needs points >= 16 and positive r_max, dtau; got {opts:?}"
        )));
    }
    let n = opts.points;
    let h = opts.r_max / (n as f64 + 1.0);
    let r: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
    let mut u: Vec<f64> = r.iter().map(|r| r * (-r * r / 8.0).exp()).collect();
    normalise(&mut u, h);

    let mut v = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut work = vec![0.0; n];
    let a = 0.5 * opts.dtau;
    // H = -½ d²/dr² + V; kinetic stencil entries.
    let kd = 1.0 / (h * h);
    let ko = -0.5 / (h * h);
    let mut last = f64::INFINITY;
    let mut change = f64::INFINITY;

    for it in 1..=opts.max_iter {
        radial_potential(&r, &u, h, &mut v);
        for i in 0..n {
            let left = if i == 0 { 0.0 } else { u[i - 1] };
            let right = if i + 1 == n { 0.0 } else { u[i + 1] };
            let hu = ko * (left + right) + (kd + v[i]) * u[i];
            rhs[i] = u[i] - a * hu;
            diag[i] = 1.0 + a * (kd + v[i]);
        }
        solve_tridiagonal(&diag, a * ko, &mut rhs, &mut work);
        u.copy_from_slice(&rhs);
        normalise(&mut u, h);
        if u.iter().any(|x| !x.is_finite()) {
            return Err(SolverError::NonFinite(it));
        }

        radial_potential(&r, &u, h, &mut v);
        let (t, p) = expectations(&u, &v, h);
        let eig = t + p;
        change = ((eig - last) / eig).abs();
        last = eig;
        if change < opts.tol {
            let length = constants.hbar().powi(2) / (constants.g() * mass.powi(3));
            let energy_unit = constants.g().powi(2) * mass.powi(5) / constants.hbar().powi(2);
            let rms = (u.iter().zip(&r).map(|(u, r)| u * u * r * r).sum::<f64>() * h).sqrt();
            let scale_u = length.powf(-0.5);
            return Ok(RadialSoliton {
                r: r.iter().map(|r| r * length).collect(),
                u: u.iter().map(|u| u * scale_u).collect(),
                eigenvalue: eig * energy_unit,
                energy: (t + 0.5 * p) * energy_unit,
                rms_radius: rms * length,
                iterations: it,
            });
        }
    }
    Err(SolverError::NoConvergence {
        iterations: opts.max_iter,
        change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_of_thin_shell() {
        // A narrow shell at r0 gives V ≈ -1/r0 inside and -1/r outside.
        let n = 4000;
        let h = 0.01;
        let r: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
        let mut u: Vec<f64> = r
            .iter()
            .map(|r| (-(r - 20.0).powi(2) / 0.02).exp())
            .collect();
        normalise(&mut u, h);
        let mut v = vec![0.0; n];
        radial_potential(&r, &u, h, &mut v);
        assert!((v[500] + 1.0 / 20.0).abs() < 1e-4);
        assert!((v[3500] + 1.0 / r[3500]).abs() < 1e-4);
    }

    #[test]
    fn tridiagonal_solver() {
        let diag = [4.0, 5.0, 6.0, 7.0];
        let off = 1.0;
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut rhs: Vec<f64> = (0..4)
            .map(|i| {
                diag[i] * x[i]
                    + if i > 0 { off * x[i - 1] } else { 0.0 }
                    + if i < 3 { off * x[i + 1] } else { 0.0 }
            })
            .collect();
        let mut work = vec![0.0; 4];
        solve_tridiagonal(&diag, off, &mut rhs, &mut work);
        for (a, b) in rhs.iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn virial_relation() {
        // For a 1/r interaction: 2<T> + <V>/2 ... with E = <T> + <V>/2 and
        // 2<T> = -<V>/2 at the stationary point, E = -<T> and eig = 3E.
        let s =
            radial_ground_state(1.0, PhysicalConstants::unit(), &RadialOptions::default()).unwrap();
        assert!(
            (s.eigenvalue / s.energy - 3.0).abs() < 1e-3,
            "{} {}",
            s.eigenvalue,
            s.energy
        );
    }
}
