//! Command-line harness for the `kleindyn` scattering library: scenario
//! configs, snapshot import/export, pipeline orchestration, and report
//! output. The binary in this package is a thin wrapper over these modules
//! so that every behavior stays testable as a library call.

pub mod config;
pub mod output;
pub mod scenario;
pub mod snapshot;

pub use config::{ConfigError, EquationTag, FamilyTag, LoadedScenario, ScenarioConfig};
pub use output::{write_artifacts, OutputError, WrittenFiles};
pub use scenario::{
    run_scenario, ChargePoint, ComparisonReport, MethodRun, RunArtifacts, RunMethod, RunOptions,
    ScenarioError,
};
pub use snapshot::{
    compare, export_snapshot, import_snapshot, CompareMetrics, Provenance, Snapshot, SnapshotError,
};
