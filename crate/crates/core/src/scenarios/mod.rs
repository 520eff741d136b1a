//! End-to-end experiments driven by a flat JSON configuration.
//!
//! Each runner turns a [`ScenarioConfig`] into a [`ScenarioReport`]: a set of
//! headline metrics, the exact configuration echo with its hash, and the CSV,
//! JSON and binary artifacts that back every metric. [`emit_report`] writes
//! the lot to a directory.

mod config;
mod consistency;
mod deterministic_runs;
mod stochastic_runs;
mod sweeps;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::deterministic::{write_series_csv, Sample, SolverError};
use crate::grid::{write_snapshot_binary, write_snapshot_csv, GridError, StateError, WaveFunction};
use crate::kernel::KernelError;
use crate::stochastic::StochasticError;
use crate::units::UnitsError;

pub use config::{
    parse_config, InputUnits, KernelChoice, ParseError, ResolvedBall, ScenarioConfig, ScenarioKind,
    UnravelMode,
};
pub use consistency::{compare_with_reference, EntrywiseStats, UnravelingConsistency};
pub use deterministic_runs::{
    run_frsne_relax, run_pointer_relaxation, run_sne_evolve, run_sne_ground, run_vnne,
};
pub use stochastic_runs::{run_cat_collapse, run_unravel_ensemble};
pub use sweeps::{run_kernel_dump, run_tg_sweep, run_units};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cat state not resolved: {0}")]
    UnresolvedCat(String),
    #[error(transparent)]
    Units(#[from] UnitsError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ScenarioError {
    /// 2 for problems with the configuration, 3 for failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_)
            | Self::Config(_)
            | Self::UnresolvedCat(_)
            | Self::Units(_)
            | Self::Kernel(_)
            | Self::Grid(_)
            | Self::State(_) => 2,
            Self::Solver(SolverError::BadConfig(_) | SolverError::State(_)) => 2,
            Self::Solver(_) | Self::Stochastic(_) | Self::Io { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub crate_name: &'static str,
    pub crate_version: &'static str,
    pub report_format: u32,
}

/// A file produced alongside the report, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: ScenarioKind,
    pub metrics: BTreeMap<String, Value>,
    pub config: ScenarioConfig,
    pub provenance: Provenance,
    /// Names of the artifacts written next to the report.
    pub files: Vec<String>,
    #[serde(skip)]
    pub artifacts: Vec<Artifact>,
}

impl ScenarioReport {
    pub(crate) fn new(kind: ScenarioKind, cfg: &ScenarioConfig) -> Self {
        let mut config = cfg.clone();
        config.scenario = Some(kind);
        Self {
            scenario: kind,
            metrics: BTreeMap::new(),
            provenance: Provenance {
                config_hash: config.hash(),
                seed: config.seed,
                crate_name: env!("CARGO_PKG_NAME"),
                crate_version: env!("CARGO_PKG_VERSION"),
                report_format: 1,
            },
            config,
            files: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub(crate) fn metric(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("metric serialises");
        self.metrics.insert(key.to_owned(), v);
    }

    /// Numeric metric, `None` if absent or not a finite number.
    pub fn number(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).and_then(Value::as_f64)
    }

    pub(crate) fn attach(&mut self, path: impl Into<String>, bytes: Vec<u8>) {
        let path = path.into();
        self.files.push(path.clone());
        self.artifacts.push(Artifact { path, bytes });
    }

    pub(crate) fn attach_series(&mut self, path: &str, samples: &[Sample]) {
        let mut buf = Vec::new();
        write_series_csv(&mut buf, samples).expect("writing to memory");
        self.attach(path, buf);
    }

    /// Snapshot as `<stem>.csv` and `<stem>.bin`.
    pub(crate) fn attach_snapshot(&mut self, stem: &str, psi: &WaveFunction, t: f64) {
        let mut csv = Vec::new();
        write_snapshot_csv(&mut csv, psi).expect("writing to memory");
        self.attach(format!("{stem}.csv"), csv);
        let mut bin = Vec::new();
        write_snapshot_binary(&mut bin, psi, t).expect("writing to memory");
        self.attach(format!("{stem}.bin"), bin);
    }

    pub(crate) fn attach_json(&mut self, path: &str, value: &impl Serialize) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("document serialises");
        bytes.push(b'\n');
        self.attach(path, bytes);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Writes `report.json`, `config.json` (the echo) and every artifact under
/// `dir`, and returns the paths written.
pub fn emit_report(report: &ScenarioReport, dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ScenarioError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    let mut put = |rel: &str, bytes: &[u8]| -> Result<(), ScenarioError> {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io(parent))?;
        }
        std::fs::write(&path, bytes).map_err(io(&path))?;
        written.push(path);
        Ok(())
    };
    put("report.json", format!("{}\n", report.to_json()).as_bytes())?;
    put(
        "config.json",
        format!("{}\n", report.config.to_json()).as_bytes(),
    )?;
    for a in &report.artifacts {
        put(&a.path, &a.bytes)?;
    }
    Ok(written)
}

/// Runs the scenario named by `cfg.scenario`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let kind = cfg
        .scenario
        .ok_or_else(|| ScenarioError::Config("no scenario selected".into()))?;
    cfg.validate()?;
    match kind {
        ScenarioKind::KernelDump => run_kernel_dump(cfg),
        ScenarioKind::TgSweep => run_tg_sweep(cfg),
        ScenarioKind::Units => run_units(cfg),
        ScenarioKind::SneEvolve => run_sne_evolve(cfg),
        ScenarioKind::SneGround => run_sne_ground(cfg),
        ScenarioKind::FrsneRelax => run_frsne_relax(cfg),
        ScenarioKind::Vnne => run_vnne(cfg),
        ScenarioKind::PointerRelax => run_pointer_relaxation(cfg),
        ScenarioKind::UnravelEnsemble => run_unravel_ensemble(cfg),
        ScenarioKind::CatCollapse => run_cat_collapse(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_config_from_numerics() {
        assert_eq!(ScenarioError::Config("x".into()).exit_code(), 2);
        assert_eq!(
            ScenarioError::Solver(SolverError::NonFinite(3)).exit_code(),
            3
        );
    }

    #[test]
    fn missing_scenario_is_a_config_error() {
        let err = run_scenario(&ScenarioConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn report_embeds_echo_and_hash() {
        let cfg = ScenarioConfig::default();
        let r = ScenarioReport::new(ScenarioKind::Units, &cfg);
        assert_eq!(r.config.scenario, Some(ScenarioKind::Units));
        assert_eq!(r.provenance.config_hash, r.config.hash());
    }
}
