//! Physical constants, the dimensionless unit systems used by the solvers, and
//! conversions back to CGS.
//!
//! Two internal conventions are supported. In harmonic mode `hbar = M = omega_G = 1`,
//! so the oscillator length `sqrt(hbar / (M omega_G))` is the unit of length. In ball
//! mode `hbar = M = R = 1` and the gravitational constant is carried explicitly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::BallSpec;

/// CODATA 2018 Newtonian constant of gravitation, cm^3 g^-1 s^-2.
pub const G_CGS: f64 = 6.674_30e-8;
/// CODATA 2018 reduced Planck constant, erg s.
pub const HBAR_CGS: f64 = 1.054_571_817e-27;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitsError {
    #[error("mass must be strictly positive, got {0}")]
    NonPositiveMass(f64),
    #[error("radius must be non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("harmonic scaling needs a finite omega_G, which is undefined at R = 0")]
    ZeroRadius,
    #[error("constants must be strictly positive and finite (G = {g}, hbar = {hbar})")]
    BadConstants { g: f64, hbar: f64 },
}

/// Newton's constant and the reduced Planck constant in a consistent unit system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    g: f64,
    hbar: f64,
}

impl PhysicalConstants {
    pub fn new(g: f64, hbar: f64) -> Result<Self, UnitsError> {
        if !(g.is_finite() && hbar.is_finite() && g > 0.0 && hbar > 0.0) {
            return Err(UnitsError::BadConstants { g, hbar });
        }
        Ok(Self { g, hbar })
    }

    /// CODATA values in CGS.
    pub fn cgs() -> Self {
        Self {
            g: G_CGS,
            hbar: HBAR_CGS,
        }
    }

    /// `G = hbar = 1`, handy for analytic checks.
    pub fn unit() -> Self {
        Self { g: 1.0, hbar: 1.0 }
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::cgs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingMode {
    /// `hbar = M = omega_G = 1`.
    Harmonic,
    /// `hbar = M = R = 1`, G explicit.
    Ball,
}

/// Conversion factors between an external (CGS) system and internal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub mode: ScalingMode,
    pub length_unit: f64,
    pub time_unit: f64,
    pub mass_unit: f64,
    pub energy_unit: f64,
    /// Ball as seen from inside the unit system: `M = hbar = 1`.
    internal: BallSpec,
}

impl UnitSystem {
    pub fn internal_ball(&self) -> BallSpec {
        self.internal
    }

    pub fn length_to_internal(&self, cm: f64) -> f64 {
        cm / self.length_unit
    }

    pub fn length_to_physical(&self, l: f64) -> f64 {
        l * self.length_unit
    }

    pub fn time_to_internal(&self, s: f64) -> f64 {
        s / self.time_unit
    }

    pub fn time_to_physical(&self, t: f64) -> f64 {
        t * self.time_unit
    }

    pub fn mass_to_internal(&self, g: f64) -> f64 {
        g / self.mass_unit
    }

    pub fn mass_to_physical(&self, m: f64) -> f64 {
        m * self.mass_unit
    }

    pub fn energy_to_internal(&self, erg: f64) -> f64 {
        erg / self.energy_unit
    }

    pub fn energy_to_physical(&self, e: f64) -> f64 {
        e * self.energy_unit
    }
}

/// Builds the unit system for `ball` under the requested convention.
pub fn make_unit_system(ball: &BallSpec, mode: ScalingMode) -> Result<UnitSystem, UnitsError> {
    let m = ball.mass();
    let r = ball.radius();
    let g = ball.constants().g();
    let hbar = ball.constants().hbar();
    if !(m > 0.0) {
        return Err(UnitsError::NonPositiveMass(m));
    }
    if r < 0.0 {
        return Err(UnitsError::NegativeRadius(r));
    }
    let (length_unit, time_unit) = match mode {
        ScalingMode::Harmonic => {
            if r == 0.0 {
                return Err(UnitsError::ZeroRadius);
            }
            let omega = (g * m / (r * r * r)).sqrt();
            ((hbar / (m * omega)).sqrt(), 1.0 / omega)
        }
        ScalingMode::Ball => {
            if r == 0.0 {
                return Err(UnitsError::ZeroRadius);
            }
            (r, m * r * r / hbar)
        }
    };
    let mass_unit = m;
    let energy_unit = hbar / time_unit;
    // G in internal units: [G] = L^3 M^-1 T^-2.
    let g_internal = g * mass_unit * time_unit * time_unit / length_unit.powi(3);
    let internal = BallSpec::new(
        1.0,
        r / length_unit,
        PhysicalConstants::new(g_internal, 1.0)?,
    )
    .map_err(|_| UnitsError::NegativeRadius(r))?;
    Ok(UnitSystem {
        mode,
        length_unit,
        time_unit,
        mass_unit,
        energy_unit,
        internal,
    })
}

/// Width of the quadratic-regime soliton, `(hbar^2 / (G M^3))^(1/4) R^(3/4)`,
/// i.e. the oscillator length `sqrt(hbar / (M omega_G))`.
pub fn soliton_width(ball: &BallSpec) -> f64 {
    let c = ball.constants();
    (c.hbar() * c.hbar() / (c.g() * ball.mass().powi(3))).powf(0.25) * ball.radius().powf(0.75)
}

/// Mass of a homogeneous ball of the given density and radius.
pub fn ball_mass(density: f64, radius: f64) -> f64 {
    4.0 * std::f64::consts::PI / 3.0 * density * radius.powi(3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cgs_ball(density: f64, radius: f64) -> BallSpec {
        BallSpec::new(ball_mass(density, radius), radius, PhysicalConstants::cgs()).unwrap()
    }

    #[test]
    fn ball_mode_identity_scaling() {
        let ball = BallSpec::new(1.0, 1.0, PhysicalConstants::cgs()).unwrap();
        let u = make_unit_system(&ball, ScalingMode::Ball).unwrap();
        assert_eq!(u.length_unit, 1.0);
        assert_eq!(u.internal_ball().mass(), 1.0);
        assert_eq!(u.internal_ball().constants().hbar(), 1.0);
        assert_eq!(u.internal_ball().radius(), 1.0);
    }

    #[test]
    fn harmonic_mode_makes_omega_unity() {
        let ball = cgs_ball(1.0, 1e-4);
        let u = make_unit_system(&ball, ScalingMode::Harmonic).unwrap();
        let inner = u.internal_ball();
        let omega = (inner.constants().g() * inner.mass() / inner.radius().powi(3)).sqrt();
        assert!((omega - 1.0).abs() < 1e-12);
        assert!((soliton_width(&inner) - 1.0).abs() < 1e-12);
        assert!((u.length_unit - soliton_width(&ball)).abs() / u.length_unit < 1e-12);
    }

    #[test]
    fn harmonic_mode_rejects_point_ball() {
        let ball = BallSpec::new(1.0, 0.0, PhysicalConstants::cgs()).unwrap();
        assert_eq!(
            make_unit_system(&ball, ScalingMode::Harmonic),
            Err(UnitsError::ZeroRadius)
        );
    }

    #[test]
    fn soliton_width_of_unit_density_micron_ball() {
        // Oracle: plain arithmetic on the CODATA constants.
        let m = 4.0 * std::f64::consts::PI / 3.0 * 1e-12;
        let expected = (HBAR_CGS * HBAR_CGS / (G_CGS * m * m * m)).powf(0.25) * 1e-3;
        let w = soliton_width(&cgs_ball(1.0, 1e-4));
        assert!((w - expected).abs() / expected < 1e-12);
        assert!((w - 6.9e-7).abs() / 6.9e-7 < 0.01, "width {w}");
    }

    #[test]
    fn delocalized_at_regime_boundary() {
        let ball = BallSpec::new(1e-15, 1e-5, PhysicalConstants::cgs()).unwrap();
        assert!(soliton_width(&ball) / ball.radius() > 1.0);
    }

    #[test]
    fn width_ratio_scales_as_r_to_minus_five_halves() {
        for &r in &[1e-6, 1e-5, 3e-4, 1e-2] {
            let a = soliton_width(&cgs_ball(1.0, r)) / r;
            let b = soliton_width(&cgs_ball(1.0, 2.0 * r)) / (2.0 * r);
            let expected = 2f64.powf(-2.5);
            assert!(((b / a) - expected).abs() / expected < 1e-10);
        }
    }

    #[test]
    fn round_trips_are_identity() {
        let ball = cgs_ball(2.5, 3e-4);
        for mode in [ScalingMode::Harmonic, ScalingMode::Ball] {
            let u = make_unit_system(&ball, mode).unwrap();
            for &v in &[1e-9, 3.3e-4, 1.0, 7.0e5] {
                let l = u.length_to_physical(u.length_to_internal(v));
                let t = u.time_to_physical(u.time_to_internal(v));
                let e = u.energy_to_physical(u.energy_to_internal(v));
                let m = u.mass_to_physical(u.mass_to_internal(v));
                for back in [l, t, e, m] {
                    assert!((back - v).abs() / v < 1e-12);
                }
            }
        }
    }

    #[test]
    fn constants_must_be_positive() {
        assert!(PhysicalConstants::new(0.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, -1.0).is_err());
        assert!(PhysicalConstants::new(f64::NAN, 1.0).is_err());
    }
}
