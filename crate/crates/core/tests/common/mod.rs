//! Independent oracles shared by the integration suites.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Fourier transform of a unit-mass uniform ball, `3 (sin q - q cos q) / q³`.
pub fn ball_form_factor(q: f64) -> f64 {
    if q < 1e-3 {
        let q2 = q * q;
        1.0 - q2 / 10.0 + q2 * q2 / 280.0
    } else {
        3.0 * (q.sin() - q * q.cos()) / (q * q * q)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Interaction energy of two uniform balls at centre distance `d`, from its
/// Fourier representation
/// `U(d) = -(2 G M² / (π R)) ∫₀^∞ f(q)² sin(q d / R) / (q d / R) dq`,
/// integrated with 16-point Gauss–Legendre panels of width 1/2 out to
/// `q = 4000` (the neglected tail is below `3 / 4000³`).
pub fn fourier_pair_potential(g: f64, m: f64, r: f64, d: f64) -> f64 {
    let (nodes, weights) = gauss_legendre(16);
    let s = d / r;
    let panel = 0.5;
    let mut total = 0.0;
    for p in 0..8000 {
        let a = p as f64 * panel;
        let mid = a + 0.5 * panel;
        let half = 0.5 * panel;
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            let q = mid + half * x;
            let f = ball_form_factor(q);
            acc += w * f * f * sinc(q * s);
        }
        total += acc * half;
    }
    -2.0 * g * m * m / (PI * r) * total
}

/// Least squares for `y ≈ Σ_k c_k x^{p_k}` (no constant term).
pub fn fit_powers(x: &[f64], y: &[f64], powers: &[i32]) -> Vec<f64> {
    let k = powers.len();
    let a = nalgebra::DMatrix::from_fn(x.len(), k, |i, j| x[i].powi(powers[j]));
    let b = nalgebra::DVector::from_column_slice(y);
    let sol = a.svd(true, true).solve(&b, 1e-14).expect("least squares");
    sol.iter().cloned().collect()
}

/// Coefficient of determination of the line `y = a x + b`.
pub fn r_squared(x: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(x, y)| (y - a * x - b).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

/// Moment closure of the continuously monitored free Gaussian at rate `γ`
/// with unit coupling `sqrt(γ)`.
///
/// State: conditional moments `(V, C, Vp)` = (var x, sym. cov xp, var p) and
/// the ensemble moments of the centroid `(X, Y, P)` = (Var<x>, Cov(<x>,<p>),
/// Var<p>). The innovation of `<x>` is `2 sqrt(γ) V dW` and that of `<p>` is
/// `2 sqrt(γ) C dW`.
#[derive(Debug, Clone, Copy)]
pub struct MomentClosure {
    pub gamma: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl MomentClosure {
    fn rhs(&self, s: [f64; 6]) -> [f64; 6] {
        let [v, c, vp, _x, y, p] = s;
        let (g, m, hb) = (self.gamma, self.mass, self.hbar);
        let a = 2.0 * g.sqrt() * v;
        let b = 2.0 * g.sqrt() * c;
        [
            2.0 * c / m - 4.0 * g * v * v,
            vp / m - 4.0 * g * v * c,
            g * hb * hb - 4.0 * g * c * c,
            2.0 * y / m + a * a,
            p / m + a * b,
            b * b,
        ]
    }

    /// `Var<x>` at each time in `times` (increasing, starting at or after 0),
    /// starting from a deterministic centroid and conditional moments `(V, C, Vp)`.
    pub fn centroid_variance(&self, start: (f64, f64, f64), times: &[f64]) -> Vec<f64> {
        let mut s = [start.0, start.1, start.2, 0.0, 0.0, 0.0];
        let mut t = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &target in times {
            let span = target - t;
            let steps = ((span / 1e-5).ceil() as usize).max(1);
            let h = span / steps as f64;
            for _ in 0..steps {
                s = rk4(|u| self.rhs(u), s, h);
            }
            t = target;
            out.push(s[3]);
        }
        out
    }
}

fn rk4(f: impl Fn([f64; 6]) -> [f64; 6], s: [f64; 6], h: f64) -> [f64; 6] {
    let add = |a: [f64; 6], b: [f64; 6], k: f64| {
        let mut r = a;
        for i in 0..6 {
            r[i] += k * b[i];
        }
        r
    };
    let k1 = f(s);
    let k2 = f(add(s, k1, 0.5 * h));
    let k3 = f(add(s, k2, 0.5 * h));
    let k4 = f(add(s, k3, h));
    let mut r = s;
    for i in 0..6 {
        r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    r
}

/// Observed order `log2(e_h / e_{h/2})` from three successive refinements.
pub fn observed_order(coarse_diff: f64, fine_diff: f64) -> f64 {
    (coarse_diff / fine_diff).log2()
}
