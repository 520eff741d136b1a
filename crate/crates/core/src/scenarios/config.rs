use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ScenarioError;
use crate::deterministic::FrictionScheme;
use crate::grid::{make_grid, GridSpec};
use crate::kernel::{build_grid_kernel, BallSpec, KernelModel, KernelTable};
use crate::stochastic::Compensator;
use crate::units::{
    ball_mass, make_unit_system, PhysicalConstants, ScalingMode, UnitSystem, G_CGS, HBAR_CGS,
};

/// The experiment a configuration drives. CLI subcommand names are accepted
/// as aliases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    #[serde(alias = "kernel")]
    KernelDump,
    #[serde(alias = "tg")]
    TgSweep,
    SneEvolve,
    SneGround,
    FrsneRelax,
    Vnne,
    #[serde(alias = "unravel")]
    UnravelEnsemble,
    #[serde(alias = "cat")]
    CatCollapse,
    PointerRelax,
    Units,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::KernelDump => "kernel-dump",
            Self::TgSweep => "tg-sweep",
            Self::SneEvolve => "sne-evolve",
            Self::SneGround => "sne-ground",
            Self::FrsneRelax => "frsne-relax",
            Self::Vnne => "vnne",
            Self::UnravelEnsemble => "unravel-ensemble",
            Self::CatCollapse => "cat-collapse",
            Self::PointerRelax => "pointer-relax",
            Self::Units => "units",
        }
    }
}

/// Units of the ball entries (`mass`, `radius`, `density`, `g`, `hbar`).
/// Grid, time and state entries are always in solver units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputUnits {
    /// Used as given; `g` and `hbar` default to 1.
    #[default]
    Internal,
    /// Grams and centimetres, rescaled by `scaling`; `g` and `hbar` default
    /// to their CODATA values.
    Cgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    #[default]
    Ball,
    Quadratic,
    Point,
    Zero,
}

/// Which stochastic update an ensemble uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnravelMode {
    /// Field noise on the wave function.
    #[default]
    Wave,
    /// Field noise on a density matrix.
    Master,
    /// Scalar position monitoring of the quadratic core.
    Quadratic,
}

/// Flat experiment configuration. Every key is optional; missing keys take the
/// defaults below and the filled-in document is echoed into each report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scenario: Option<ScenarioKind>,

    pub units: InputUnits,
    pub scaling: ScalingMode,
    pub mass: f64,
    pub radius: f64,
    /// When set, the mass is derived from the density and the radius.
    pub density: Option<f64>,
    pub g: Option<f64>,
    pub hbar: Option<f64>,
    pub kernel: KernelChoice,
    /// Point-kernel softening length; defaults to the radius.
    pub softening: Option<f64>,

    pub n: usize,
    pub length: f64,
    pub padding: usize,

    pub dt: f64,
    pub steps: usize,
    pub record_stride: usize,
    pub renormalize: bool,
    pub freeze_kinetic: bool,
    pub friction: FrictionScheme,

    /// Packet separation; zero means a single packet.
    pub separation: f64,
    pub center: f64,
    /// Packet position standard deviation; defaults to the oscillator ground width.
    pub width: Option<f64>,
    pub momentum: f64,

    pub ensemble_size: usize,
    pub seed: u64,
    pub unravel: UnravelMode,
    pub noise_scale: f64,
    pub compensator: Compensator,
    pub collapse_threshold: f64,
    pub stop_at_collapse: bool,
    /// Accepted range of median collapse time over `t_G(d)`.
    pub tg_band: [f64; 2],
    /// Time window for the centroid-diffusion fit; defaults to the whole run.
    pub fit_window: Option<[f64; 2]>,
    pub trajectory_csv: bool,

    /// Convergence tolerance of the relaxation solvers; each has its own default.
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub max_time: Option<f64>,

    pub sweep_mass: Vec<f64>,
    pub sweep_radius: Vec<f64>,
    pub sweep_separation: Vec<f64>,

    pub kernel_points: usize,
    /// Largest dumped separation in units of the radius.
    pub kernel_range: f64,

    pub output_dir: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            units: InputUnits::Internal,
            scaling: ScalingMode::Ball,
            mass: 1.0,
            radius: 1.0,
            density: None,
            g: None,
            hbar: None,
            kernel: KernelChoice::Ball,
            softening: None,
            n: 256,
            length: 40.0,
            padding: 2,
            dt: 1e-3,
            steps: 1000,
            record_stride: 10,
            renormalize: false,
            freeze_kinetic: false,
            friction: FrictionScheme::Midpoint,
            separation: 0.0,
            center: 0.0,
            width: None,
            momentum: 0.0,
            ensemble_size: 100,
            seed: 0,
            unravel: UnravelMode::Wave,
            noise_scale: 1.0,
            compensator: Compensator::Mean,
            collapse_threshold: 0.99,
            stop_at_collapse: false,
            tg_band: [0.2, 5.0],
            fit_window: None,
            trajectory_csv: true,
            tol: None,
            max_iter: None,
            max_time: None,
            sweep_mass: Vec::new(),
            sweep_radius: Vec::new(),
            sweep_separation: Vec::new(),
            kernel_points: 201,
            kernel_range: 4.0,
            output_dir: "out".into(),
        }
    }
}

/// Rejected configuration text, with the position and key where known.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config line {line}, column {column}{}: {message}", key.as_ref().map(|k| format!(" (key `{k}`)")).unwrap_or_default())]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub key: Option<String>,
    pub message: String,
}

/// Strict parse: unknown keys and ill-typed values are errors.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ParseError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        let key = unknown_field_name(&message)
            .or_else(|| (path != "." && !path.is_empty()).then_some(path));
        ParseError {
            line: inner.line(),
            column: inner.column(),
            key,
            message,
        }
    })?;
    de.end().map_err(|e| ParseError {
        line: e.line(),
        column: e.column(),
        key: None,
        message: e.to_string(),
    })?;
    Ok(cfg)
}

fn unknown_field_name(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    rest.split('`').next().map(str::to_owned)
}

/// The ball three ways: as configured, and in solver units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedBall {
    pub input: BallSpec,
    pub internal: BallSpec,
    /// Present for CGS input.
    pub units: Option<UnitSystem>,
}

impl ScenarioConfig {
    /// Echo as pretty JSON; [`parse_config`] reads it back unchanged.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Hex SHA-256 of the compact JSON echo.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_vec(self).expect("config serialises"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Config(m));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be >= 1".into());
        }
        if self.ensemble_size == 0 {
            return bad("ensemble_size must be >= 1".into());
        }
        if !(self.collapse_threshold > 0.5 && self.collapse_threshold <= 1.0) {
            return bad(format!(
                "collapse_threshold must lie in (0.5, 1], got {}",
                self.collapse_threshold
            ));
        }
        if !(self.tg_band[0] > 0.0 && self.tg_band[0] < self.tg_band[1]) {
            return bad(format!(
                "tg_band must satisfy 0 < lo < hi, got {:?}",
                self.tg_band
            ));
        }
        if let Some([a, b]) = self.fit_window {
            if !(a < b) {
                return bad(format!("fit_window must satisfy lo < hi, got [{a}, {b}]"));
            }
        }
        if self.separation < 0.0 {
            return bad(format!(
                "separation must be non-negative, got {}",
                self.separation
            ));
        }
        if let Some(w) = self.width {
            if !(w > 0.0) {
                return bad(format!("width must be positive, got {w}"));
            }
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return bad(format!(
                "noise_scale must be non-negative, got {}",
                self.noise_scale
            ));
        }
        Ok(())
    }

    pub fn constants(&self) -> Result<PhysicalConstants, ScenarioError> {
        let (g0, h0) = match self.units {
            InputUnits::Internal => (1.0, 1.0),
            InputUnits::Cgs => (G_CGS, HBAR_CGS),
        };
        Ok(PhysicalConstants::new(
            self.g.unwrap_or(g0),
            self.hbar.unwrap_or(h0),
        )?)
    }

    fn ball_with(&self, mass: f64, radius: f64) -> Result<BallSpec, ScenarioError> {
        Ok(BallSpec::new(mass, radius, self.constants()?)?)
    }

    /// The configured ball, with the mass taken from `density` when it is set.
    pub fn input_ball(&self) -> Result<BallSpec, ScenarioError> {
        let mass = self
            .density
            .map_or(self.mass, |rho| ball_mass(rho, self.radius));
        self.ball_with(mass, self.radius)
    }

    pub fn resolve_ball(&self) -> Result<ResolvedBall, ScenarioError> {
        let input = self.input_ball()?;
        match self.units {
            InputUnits::Internal => Ok(ResolvedBall {
                input,
                internal: input,
                units: None,
            }),
            InputUnits::Cgs => {
                let units = make_unit_system(&input, self.scaling)?;
                Ok(ResolvedBall {
                    input,
                    internal: units.internal_ball(),
                    units: Some(units),
                })
            }
        }
    }

    pub fn grid(&self) -> Result<GridSpec, ScenarioError> {
        Ok(make_grid(self.n, self.length, self.padding)?)
    }

    pub fn kernel_model(&self, ball: &BallSpec) -> KernelModel {
        match self.kernel {
            KernelChoice::Ball => KernelModel::Ball,
            KernelChoice::Quadratic => KernelModel::Quadratic,
            KernelChoice::Point => KernelModel::Point {
                softening: self.softening.unwrap_or(ball.radius()),
            },
            KernelChoice::Zero => KernelModel::Zero,
        }
    }

    /// Grid kernel for the internal ball.
    pub fn build_kernel(&self) -> Result<KernelTable, ScenarioError> {
        let ball = self.resolve_ball()?.internal;
        let grid = self.grid()?;
        Ok(build_grid_kernel(&ball, &grid, self.kernel_model(&ball))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(r#"{"scenario": "cat"}"#).unwrap();
        assert_eq!(cfg.scenario, Some(ScenarioKind::CatCollapse));
        assert_eq!(cfg.n, 256);
        assert_eq!(cfg.collapse_threshold, 0.99);
    }

    #[test]
    fn misspelled_key_is_named() {
        let err = parse_config("{\n  \"n\": 64,\n  \"sepration\": 3.0\n}").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("sepration"));
        assert_eq!(err.line, 3);
    }

    #[test]
    fn ill_typed_value_names_its_key() {
        let err = parse_config(r#"{"steps": "many"}"#).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("steps"));
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = parse_config(
            r#"{"scenario": "tg-sweep", "sweep_radius": [1e-5, 1e-4], "units": "cgs"}"#,
        )
        .unwrap();
        cfg.width = Some(0.3);
        let back = parse_config(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ScenarioConfig::default();
        let b = ScenarioConfig {
            seed: 1,
            ..a.clone()
        };
        assert_eq!(a.hash().len(), 64);
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn cgs_ball_is_rescaled() {
        let cfg = ScenarioConfig {
            units: InputUnits::Cgs,
            density: Some(1.0),
            radius: 1e-4,
            scaling: ScalingMode::Ball,
            ..Default::default()
        };
        let r = cfg.resolve_ball().unwrap();
        assert_eq!(r.internal.mass(), 1.0);
        assert!((r.internal.radius() - 1.0).abs() < 1e-12);
        assert!((r.input.mass() - ball_mass(1.0, 1e-4)).abs() < 1e-20);
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        assert!(parse_config("{} x").is_err());
    }
}
