//! Width claims read literally, with `Δx_G = sqrt(ħ / (M ω))` taken as the
//! position variance scale of the Gaussians `exp(-x² / (4 Δx_G²))` and
//! `exp(-sqrt(-i) x² / (4 Δx_G²))`.
//!
//! These readings are off by a factor of two in the variance against the
//! actual stationary states, so every test here fails. They are ignored by
//! default and kept to document the discrepancy; run them with
//! `cargo test --test literal_claims -- --ignored`.

use gravicollapse::deterministic::{
    evolve_frsne, ground_state_sne, pointer_state_frsne, EvolutionConfig, GroundStateOptions,
    RelaxOptions,
};
use gravicollapse::grid::{gaussian_with_exponent, make_grid};
use gravicollapse::kernel::{build_grid_kernel, BallSpec, KernelModel};
use gravicollapse::units::{soliton_width, PhysicalConstants};
use num_complex::Complex64;

fn ball(g: f64) -> BallSpec {
    BallSpec::new(1.0, 1.0, PhysicalConstants::new(g, 1.0).unwrap()).unwrap()
}

#[test]
#[ignore = "literal reading; the ground-state variance is dx_G^2 / 2"]
fn ground_state_variance_is_dx_g_squared() {
    let b = ball(1e8);
    let dx = soliton_width(&b);
    let grid = make_grid(1024, 16.0 * dx, 2).unwrap();
    let k = build_grid_kernel(&b, &grid, KernelModel::Ball).unwrap();
    let opts = GroundStateOptions {
        dtau: 0.01 / 1e4,
        ..Default::default()
    };
    let gs = ground_state_sne(&k, &opts).unwrap();
    let err = (gs.var_x / (dx * dx) - 1.0).abs();
    assert!(err < 5e-3, "var_x / dx_G^2 = {}", gs.var_x / (dx * dx));
}

#[test]
#[ignore = "literal reading; the frictional pointer variance is dx_G^2 / sqrt(2)"]
fn relaxed_frictional_variance_is_sqrt2_dx_g_squared() {
    let b = ball(1.0);
    let grid = make_grid(128, 12.0, 2).unwrap();
    let k = build_grid_kernel(&b, &grid, KernelModel::Quadratic).unwrap();
    let relaxed = pointer_state_frsne(
        &k,
        &RelaxOptions {
            dt: 4e-3,
            center: 0.3,
            initial_width: Some(0.9),
            ..Default::default()
        },
    )
    .unwrap();
    let target = 2f64.sqrt() * soliton_width(&b).powi(2);
    let err = (relaxed.var_x / target - 1.0).abs();
    assert!(
        err < 0.05,
        "var_x / (sqrt(2) dx_G^2) = {}",
        relaxed.var_x / target
    );
}

#[test]
#[ignore = "literal reading; exp(-sqrt(-i) x^2 / (4 dx_G^2)) is not stationary"]
fn literal_frictional_gaussian_is_shape_invariant() {
    let b = ball(1.0);
    let dx = soliton_width(&b);
    let grid = make_grid(128, 12.0, 2).unwrap();
    let k = build_grid_kernel(&b, &grid, KernelModel::Quadratic).unwrap();
    let a = Complex64::new(1.0, -1.0) / 2f64.sqrt() / (4.0 * dx * dx);
    let psi0 = gaussian_with_exponent(&grid, 0.0, a, 0.0).unwrap();
    let dt = 4e-3;
    let steps = (10.0 * 2.0 * std::f64::consts::PI / dt).round() as usize;
    let run = evolve_frsne(
        &psi0,
        &k,
        &EvolutionConfig::new(dt, steps).with_stride(steps),
    )
    .unwrap();
    let moved = run.final_state.aligned_distance(&psi0);
    assert!(moved < 1e-3, "moved {moved:.3e} over 10 periods");
}
