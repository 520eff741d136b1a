use std::fmt::Write as _;

use super::{ScenarioConfig, ScenarioError, ScenarioKind, ScenarioReport};
use crate::decoherence::{asymptotic_decoherence_time, decoherence_time};
use crate::kernel::{gravitational_frequency, pair_potential, sample_kernel, BallSpec};
use crate::units::{ball_mass, make_unit_system, soliton_width, ScalingMode};

/// `kernel` subcommand: `U(d)` and both asymptotes for the configured ball, in
/// its input units, out to `kernel_range` radii.
pub fn run_kernel_dump(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let ball = cfg.input_ball()?;
    let rows = sample_kernel(&ball, cfg.kernel_range * ball.radius(), cfg.kernel_points)?;
    let mut csv = String::from("d,U,U_asymptotic_far,U_asymptotic_near\n");
    for r in &rows {
        writeln!(csv, "{},{},{},{}", r.d, r.u, r.u_far, r.u_near).unwrap();
    }
    let mut rep = ScenarioReport::new(ScenarioKind::KernelDump, cfg);
    rep.metric("u0", pair_potential(&ball, 0.0)?);
    rep.metric("omega_g", gravitational_frequency(&ball)?);
    rep.metric("t_g_asymptotic", asymptotic_decoherence_time(&ball));
    rep.metric("samples", rows.len());
    rep.attach("kernel.csv", csv.into_bytes());
    Ok(rep)
}

/// `units` subcommand: unit system and characteristic scales of the ball.
pub fn run_units(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let ball = cfg.input_ball()?;
    let mut rep = ScenarioReport::new(ScenarioKind::Units, cfg);
    rep.metric("mass", ball.mass());
    rep.metric("radius", ball.radius());
    rep.metric("g", ball.constants().g());
    rep.metric("hbar", ball.constants().hbar());
    rep.metric("t_g_asymptotic", asymptotic_decoherence_time(&ball));
    if !ball.pointlike() {
        let dx = soliton_width(&ball);
        rep.metric("omega_g", gravitational_frequency(&ball)?);
        rep.metric("dx_g", dx);
        rep.metric("dx_g_over_radius", dx / ball.radius());
        for mode in [ScalingMode::Harmonic, ScalingMode::Ball] {
            let u = make_unit_system(&ball, mode)?;
            let tag = match mode {
                ScalingMode::Harmonic => "harmonic",
                ScalingMode::Ball => "ball",
            };
            rep.metric(&format!("{tag}.length_unit"), u.length_unit);
            rep.metric(&format!("{tag}.time_unit"), u.time_unit);
            rep.metric(&format!("{tag}.mass_unit"), u.mass_unit);
            rep.metric(&format!("{tag}.energy_unit"), u.energy_unit);
            rep.metric(
                &format!("{tag}.internal_g"),
                u.internal_ball().constants().g(),
            );
            rep.metric(
                &format!("{tag}.internal_radius"),
                u.internal_ball().radius(),
            );
        }
    }
    Ok(rep)
}

/// One ball of a sweep.
fn sweep_balls(cfg: &ScenarioConfig) -> Result<Vec<BallSpec>, ScenarioError> {
    let c = cfg.constants()?;
    let radii = if cfg.sweep_radius.is_empty() {
        vec![cfg.radius]
    } else {
        cfg.sweep_radius.clone()
    };
    let mut balls = Vec::new();
    for &r in &radii {
        if let Some(rho) = cfg.density {
            balls.push(BallSpec::new(ball_mass(rho, r), r, c)?);
        } else if cfg.sweep_mass.is_empty() {
            balls.push(BallSpec::new(cfg.mass, r, c)?);
        } else {
            for &m in &cfg.sweep_mass {
                balls.push(BallSpec::new(m, r, c)?);
            }
        }
    }
    Ok(balls)
}

/// `tg` subcommand: `t_G` over the product of the configured balls and
/// separations. Radii come from `sweep_radius`, masses from `density` (fixed
/// density) or `sweep_mass`, separations from `sweep_separation` or
/// `separation`. Point-like rows carry `singular = true`.
pub fn run_tg_sweep(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let balls = sweep_balls(cfg)?;
    let seps = if cfg.sweep_separation.is_empty() {
        vec![cfg.separation]
    } else {
        cfg.sweep_separation.clone()
    };
    let mut csv = String::from(
        "d,t_G,rate,regime,singular,mass,radius,dx_g,dx_g_over_radius,t_g_asymptotic\n",
    );
    let mut singular = 0usize;
    let mut rows = 0usize;
    let mut t_max = 0.0f64;
    let mut ratios = Vec::new();
    for b in &balls {
        let (dx, ratio) = if b.pointlike() {
            (f64::NAN, f64::NAN)
        } else {
            let dx = soliton_width(b);
            (dx, dx / b.radius())
        };
        ratios.push((b.radius(), ratio));
        for &d in &seps {
            let rep = decoherence_time(b, d);
            let regime = serde_json::to_value(rep.regime).unwrap();
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{}",
                d,
                rep.t_g,
                rep.rate,
                regime.as_str().unwrap(),
                rep.singular,
                b.mass(),
                b.radius(),
                dx,
                ratio,
                asymptotic_decoherence_time(b)
            )
            .unwrap();
            singular += usize::from(rep.singular);
            rows += 1;
            if rep.t_g.is_finite() {
                t_max = t_max.max(rep.t_g);
            }
        }
    }
    let mut rep = ScenarioReport::new(ScenarioKind::TgSweep, cfg);
    rep.metric("rows", rows);
    rep.metric("singular_rows", singular);
    rep.metric("max_finite_t_g", t_max);
    if let Some(r) = width_crossing(&ratios) {
        rep.metric("dx_g_over_radius_crossing", r);
    }
    rep.attach("tg.csv", csv.into_bytes());
    Ok(rep)
}

/// Log-log interpolated radius at which `Δx_G / R` crosses one, for radii in
/// increasing order.
fn width_crossing(ratios: &[(f64, f64)]) -> Option<f64> {
    ratios.windows(2).find_map(|w| {
        let ((r0, q0), (r1, q1)) = (w[0], w[1]);
        if !(q0.is_finite() && q1.is_finite() && r0 > 0.0 && r1 > r0) {
            return None;
        }
        ((q0 - 1.0) * (q1 - 1.0) <= 0.0).then(|| {
            let f = q0.ln() / (q0.ln() - q1.ln());
            (r0.ln() + f * (r1.ln() - r0.ln())).exp()
        })
    })
}
