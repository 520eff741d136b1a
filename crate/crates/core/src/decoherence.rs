//! Gravity-related decoherence time `t_G = hbar / (U(d) - U(0))`.

use serde::Serialize;

use crate::kernel::{pair_excess, point_potential, BallSpec};

/// Informational label for how `t_G` (in seconds) compares with laboratory times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `t_G > 1 s`: decoherence irrelevant.
    Atomic,
    /// `1e-3 s <= t_G <= 1 s`: competes with environmental decoherence.
    Nano,
    /// `t_G < 1e-3 s`: no cat state survives.
    Macro,
}

impl Regime {
    pub fn classify(t_seconds: f64) -> Self {
        if t_seconds > 1.0 {
            Regime::Atomic
        } else if t_seconds >= 1e-3 {
            Regime::Nano
        } else {
            Regime::Macro
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecoherenceReport {
    pub separation: f64,
    pub t_g: f64,
    pub rate: f64,
    /// Label assuming the ball is given in CGS, so `t_g` is in seconds.
    pub regime: Regime,
    pub singular: bool,
}

impl DecoherenceReport {
    fn from_excess(separation: f64, hbar: f64, excess: f64, singular: bool) -> Self {
        let (t_g, rate) = if singular {
            (0.0, f64::INFINITY)
        } else if excess <= 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (hbar / excess, excess / hbar)
        };
        Self {
            separation,
            t_g,
            rate,
            regime: Regime::classify(t_g),
            singular,
        }
    }
}

/// `t_G` for a superposition of two copies of `ball` whose centres are `d` apart.
///
/// `d = 0` gives an infinite time. A point-like ball has `U(0) = -∞`; the report then
/// carries `t_g = 0` with `singular = true`.
pub fn decoherence_time(ball: &BallSpec, d: f64) -> DecoherenceReport {
    let d = d.max(0.0);
    let hbar = ball.constants().hbar();
    if ball.pointlike() {
        return DecoherenceReport::from_excess(d, hbar, 0.0, d > 0.0);
    }
    let excess = pair_excess(ball, d).expect("finite ball and d >= 0");
    DecoherenceReport::from_excess(d, hbar, excess, false)
}

/// `t_G` computed with the softened point-mass interaction.
pub fn decoherence_time_softened(ball: &BallSpec, d: f64, softening: f64) -> DecoherenceReport {
    let d = d.max(0.0);
    let hbar = ball.constants().hbar();
    let at_zero = point_potential(ball, 0.0, softening);
    if at_zero.singular {
        return DecoherenceReport::from_excess(d, hbar, 0.0, d > 0.0);
    }
    let excess = point_potential(ball, d, softening).value - at_zero.value;
    DecoherenceReport::from_excess(d, hbar, excess, false)
}

/// Far-separation limit `-hbar / U(0) = hbar R / (1.2 G M^2)`.
pub fn asymptotic_decoherence_time(ball: &BallSpec) -> f64 {
    if ball.pointlike() {
        return 0.0;
    }
    ball.constants().hbar() * ball.radius() / (1.2 * ball.coupling())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::PhysicalConstants;

    fn unit_ball() -> BallSpec {
        BallSpec::new(1.0, 1.0, PhysicalConstants::unit()).unwrap()
    }

    #[test]
    fn reference_values() {
        let b = unit_ball();
        let far = decoherence_time(&b, 1e6);
        assert!((far.t_g - 1.0 / 1.2).abs() < 1e-6);
        let zero = decoherence_time(&b, 0.0);
        assert!(zero.t_g.is_infinite() && !zero.singular && zero.rate == 0.0);
        let two = decoherence_time(&b, 2.0);
        assert!((two.t_g - 1.0 / 0.7).abs() < 1e-12);
        assert!((two.rate * two.t_g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_ball_is_flagged() {
        let p = BallSpec::new(1.0, 0.0, PhysicalConstants::unit()).unwrap();
        let r = decoherence_time(&p, 0.5);
        assert!(r.singular);
        assert_eq!(r.t_g, 0.0);
        let r = decoherence_time_softened(&p, 0.5, 0.0);
        assert!(r.singular);
        let soft = decoherence_time_softened(&p, 1.0, 1.0);
        assert!(!soft.singular);
        let expected = 1.0 / (1.0 - 1.0 / 2f64.sqrt());
        assert!((soft.t_g - expected).abs() < 1e-12);
    }

    #[test]
    fn monotone_and_asymptotic() {
        let b = BallSpec::new(2.0, 0.3, PhysicalConstants::new(0.5, 1.5).unwrap()).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..400 {
            let t = decoherence_time(&b, 0.01 * i as f64).t_g;
            assert!(t < prev);
            prev = t;
        }
        let lim = asymptotic_decoherence_time(&b);
        for k in [100.0, 300.0, 1e4] {
            let t = decoherence_time(&b, k * b.radius()).t_g;
            assert!((t / lim - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn regimes() {
        assert_eq!(Regime::classify(1e12), Regime::Atomic);
        assert_eq!(Regime::classify(0.01), Regime::Nano);
        assert_eq!(Regime::classify(1e-9), Regime::Macro);
    }
}
