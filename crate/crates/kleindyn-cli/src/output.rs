//! Writes run artifacts to disk: snapshot CSVs with sidecars, the JSON
//! comparison report, and an optional gnuplot script. File names are
//! deterministic functions of the run content so repeated runs of the same
//! config produce byte-identical trees.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::scenario::{ComparisonReport, MethodRun, RunArtifacts};
use crate::snapshot::{export_snapshot, SnapshotError};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("could not create output directory {path}: {source}")]
    CreateDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("could not write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

/// Paths produced by [`write_artifacts`].
#[derive(Debug, Clone)]
pub struct WrittenFiles {
    pub snapshots: Vec<PathBuf>,
    pub report: PathBuf,
    pub plot: Option<PathBuf>,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    generator: String,
    scenario_sha256: &'a str,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    warnings: &'a [String],
    #[serde(flatten)]
    report: &'a ComparisonReport,
}

fn snapshot_name(tag: &str, index: usize, t: f64) -> String {
    format!("snap_{tag}_{index:02}_t{t:.4}.csv")
}

fn write_method_run(
    run: &MethodRun,
    requested_times: &[f64],
    flagged: &[[f64; 2]],
    dir: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<(), OutputError> {
    // Requested times map one-to-one onto snapshots unless the stepped run
    // merged duplicates; in that case the mapping is ambiguous and the
    // sidecars record only the achieved times.
    let aligned = run.snapshots.len() == requested_times.len();
    for (i, snap) in run.snapshots.iter().enumerate() {
        let path = dir.join(snapshot_name(run.provenance.tag(), i, snap.t));
        let requested = if aligned { Some(requested_times[i]) } else { None };
        export_snapshot(snap, &path, requested, flagged)?;
        written.push(path);
    }
    Ok(())
}

fn plot_script(files: &[PathBuf]) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key outside\n");
    s.push_str("set xlabel 'x'\n");
    s.push_str("set ylabel 'charge density'\n");
    s.push_str("plot \\\n");
    let lines: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().and_then(|n| n.to_str()))
        .map(|name| {
            let title = name.trim_end_matches(".csv");
            format!("  '{name}' using 1:6 with lines title '{title}'")
        })
        .collect();
    s.push_str(&lines.join(", \\\n"));
    s.push('\n');
    s
}

/// Writes every snapshot (with sidecar), the comparison report, and — when
/// `plot` is set and at least one snapshot exists — a gnuplot script
/// referencing the CSVs by relative name.
pub fn write_artifacts(
    artifacts: &RunArtifacts,
    requested_times: &[f64],
    scenario_sha256: &str,
    out_dir: &Path,
    plot: bool,
) -> Result<WrittenFiles, OutputError> {
    fs::create_dir_all(out_dir).map_err(|e| OutputError::CreateDir {
        path: out_dir.to_path_buf(),
        source: e,
    })?;

    let mut snapshots = Vec::new();
    // Sloped-edge ranges only qualify the semi-analytic representation.
    if let Some(run) = &artifacts.semi {
        write_method_run(
            run,
            requested_times,
            &artifacts.slope_flagged_ranges,
            out_dir,
            &mut snapshots,
        )?;
    }
    if let Some(run) = &artifacts.fd {
        write_method_run(run, requested_times, &[], out_dir, &mut snapshots)?;
    }

    let report_path = out_dir.join("report.json");
    let doc = ReportDoc {
        generator: crate::snapshot::generator_string(),
        scenario_sha256,
        warnings: &artifacts.warnings,
        report: &artifacts.report,
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("report serialization");
    json.push('\n');
    let mut f = fs::File::create(&report_path).map_err(|e| OutputError::Write {
        path: report_path.clone(),
        source: e,
    })?;
    f.write_all(json.as_bytes()).map_err(|e| OutputError::Write {
        path: report_path.clone(),
        source: e,
    })?;

    let plot_path = if plot && !snapshots.is_empty() {
        let path = out_dir.join("plot.gp");
        fs::write(&path, plot_script(&snapshots)).map_err(|e| OutputError::Write {
            path: path.clone(),
            source: e,
        })?;
        Some(path)
    } else {
        None
    };

    Ok(WrittenFiles {
        snapshots,
        report: report_path,
        plot: plot_path,
    })
}
