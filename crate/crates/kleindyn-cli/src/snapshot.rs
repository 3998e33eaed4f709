//! Snapshot records: a field at one instant as flat CSV columns, with a JSON
//! sidecar carrying provenance, plus the comparison metrics between two
//! snapshots of the same instant.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use kleindyn::SpinorField;

use crate::config::EquationTag;

pub const CSV_HEADER: &str = "x,re_phi,im_phi,re_chi,im_chi,rho";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("snapshots differ in time: {a} vs {b}")]
    TimeMismatch { a: f64, b: f64 },
    #[error("snapshot grids do not overlap enough to compare ({points} common points)")]
    GridMismatch { points: usize },
    #[error("cannot compare against an all-zero reference snapshot")]
    ZeroReference,
}

/// Which pipeline produced a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    SemiAnalytic,
    FiniteDifference,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::SemiAnalytic => "semi-analytic",
            Provenance::FiniteDifference => "finite-difference",
        }
    }

    /// Short tag used in file names.
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::SemiAnalytic => "semi",
            Provenance::FiniteDifference => "fd",
        }
    }
}

/// A field at one instant, flattened to real columns.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub equation: EquationTag,
    pub provenance: Provenance,
    pub scenario_sha256: String,
    pub x: Vec<f64>,
    pub re_phi: Vec<f64>,
    pub im_phi: Vec<f64>,
    pub re_chi: Vec<f64>,
    pub im_chi: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Sidecar metadata written next to each CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotMeta {
    /// Achieved snapshot time (for stepped evolution, the nearest step).
    pub t: f64,
    /// The originally requested time, when it differs from `t`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested_t: Option<f64>,
    pub equation: EquationTag,
    pub provenance: Provenance,
    pub scenario_sha256: String,
    /// Producing package and version.
    pub generator: String,
    /// Ranges of x where the piecewise plane-wave representation of smooth
    /// barriers is least trustworthy (within ~5/ε of an edge); empty for
    /// rectangular barriers and for finite-difference output.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slope_flagged_ranges: Vec<[f64; 2]>,
}

pub fn generator_string() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

impl Snapshot {
    pub fn from_field(
        field: &SpinorField,
        provenance: Provenance,
        scenario_sha256: &str,
    ) -> Self {
        let n = field.grid.n;
        let mut x = Vec::with_capacity(n);
        let mut re_phi = Vec::with_capacity(n);
        let mut im_phi = Vec::with_capacity(n);
        let mut re_chi = Vec::with_capacity(n);
        let mut im_chi = Vec::with_capacity(n);
        for i in 0..n {
            x.push(field.grid.x_at(i));
            re_phi.push(field.phi[i].re);
            im_phi.push(field.phi[i].im);
            re_chi.push(field.chi[i].re);
            im_chi.push(field.chi[i].im);
        }
        Self {
            t: field.t,
            equation: EquationTag::from_kind(field.equation),
            provenance,
            scenario_sha256: scenario_sha256.to_owned(),
            x,
            re_phi,
            im_phi,
            re_chi,
            im_chi,
            rho: field.charge_density(),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// The density implied by the component columns at point `i`.
    fn rho_from_components(&self, i: usize) -> f64 {
        let phi2 = self.re_phi[i] * self.re_phi[i] + self.im_phi[i] * self.im_phi[i];
        let chi2 = self.re_chi[i] * self.re_chi[i] + self.im_chi[i] * self.im_chi[i];
        match self.equation {
            EquationTag::KleinGordon => phi2 - chi2,
            EquationTag::Dirac => phi2 + chi2,
        }
    }
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut os = csv_path.as_os_str().to_owned();
    os.push(".meta.json");
    PathBuf::from(os)
}

/// Writes the CSV (17-significant-digit scientific notation, LF endings) and
/// its JSON sidecar. Returns the sidecar path.
pub fn export_snapshot(
    snapshot: &Snapshot,
    csv_path: &Path,
    requested_t: Option<f64>,
    slope_flagged_ranges: &[[f64; 2]],
) -> Result<PathBuf, SnapshotError> {
    let mut body = String::with_capacity(snapshot.len() * 160 + 64);
    body.push_str(CSV_HEADER);
    body.push('\n');
    for i in 0..snapshot.len() {
        let _ = writeln!(
            body,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            snapshot.x[i],
            snapshot.re_phi[i],
            snapshot.im_phi[i],
            snapshot.re_chi[i],
            snapshot.im_chi[i],
            snapshot.rho[i],
        );
    }
    fs::write(csv_path, body).map_err(|source| SnapshotError::Write {
        path: csv_path.to_owned(),
        source,
    })?;

    let meta = SnapshotMeta {
        t: snapshot.t,
        requested_t: requested_t.filter(|rt| *rt != snapshot.t),
        equation: snapshot.equation,
        provenance: snapshot.provenance,
        scenario_sha256: snapshot.scenario_sha256.clone(),
        generator: generator_string(),
        slope_flagged_ranges: slope_flagged_ranges.to_vec(),
    };
    let meta_path = sidecar_path(csv_path);
    let mut text = serde_json::to_string_pretty(&meta).expect("meta serialization cannot fail");
    text.push('\n');
    fs::write(&meta_path, text).map_err(|source| SnapshotError::Write {
        path: meta_path.clone(),
        source,
    })?;
    Ok(meta_path)
}

/// Reads a CSV + sidecar pair back into a snapshot, verifying the header and
/// that the density column is consistent with the components to 1e-14.
pub fn import_snapshot(csv_path: &Path) -> Result<Snapshot, SnapshotError> {
    let malformed = |reason: String| SnapshotError::Malformed {
        path: csv_path.to_owned(),
        reason,
    };
    let text = fs::read_to_string(csv_path).map_err(|source| SnapshotError::Read {
        path: csv_path.to_owned(),
        source,
    })?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        Some(h) => return Err(malformed(format!("unexpected header {h:?}"))),
        None => return Err(malformed("empty file".to_owned())),
    }

    let meta_path = sidecar_path(csv_path);
    let meta_text = fs::read_to_string(&meta_path).map_err(|source| SnapshotError::Read {
        path: meta_path.clone(),
        source,
    })?;
    let meta: SnapshotMeta = serde_json::from_str(&meta_text).map_err(|e| {
        SnapshotError::Malformed {
            path: meta_path.clone(),
            reason: e.to_string(),
        }
    })?;

    let mut snapshot = Snapshot {
        t: meta.t,
        equation: meta.equation,
        provenance: meta.provenance,
        scenario_sha256: meta.scenario_sha256,
        x: Vec::new(),
        re_phi: Vec::new(),
        im_phi: Vec::new(),
        re_chi: Vec::new(),
        im_chi: Vec::new(),
        rho: Vec::new(),
    };
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let mut next = |name: &str| -> Result<f64, SnapshotError> {
            cols.next()
                .ok_or_else(|| malformed(format!("row {}: missing {name}", lineno + 2)))?
                .parse::<f64>()
                .map_err(|e| malformed(format!("row {}: bad {name}: {e}", lineno + 2)))
        };
        snapshot.x.push(next("x")?);
        snapshot.re_phi.push(next("re_phi")?);
        snapshot.im_phi.push(next("im_phi")?);
        snapshot.re_chi.push(next("re_chi")?);
        snapshot.im_chi.push(next("im_chi")?);
        snapshot.rho.push(next("rho")?);
        if cols.next().is_some() {
            return Err(malformed(format!("row {}: too many columns", lineno + 2)));
        }
    }

    let scale = snapshot
        .rho
        .iter()
        .fold(1.0f64, |m, r| m.max(r.abs()));
    for i in 0..snapshot.len() {
        let implied = snapshot.rho_from_components(i);
        if (implied - snapshot.rho[i]).abs() > 1e-14 * scale {
            return Err(malformed(format!(
                "density column inconsistent with components at row {} \
                 ({} vs implied {})",
                i + 2,
                snapshot.rho[i],
                implied
            )));
        }
    }
    Ok(snapshot)
}

/// Density-difference metrics between two snapshots of the same instant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CompareMetrics {
    pub t: f64,
    /// ‖ρ_a − ρ_b‖₂ / ‖ρ_a‖₂ on the common grid.
    pub rel_l2: f64,
    /// max|ρ_a − ρ_b| / max|ρ_a|.
    pub sup: f64,
    /// Number of points the metrics were computed on.
    pub points: usize,
}

/// Compares densities, linearly interpolating the finer snapshot onto the
/// coarser grid when the point counts differ. The first snapshot is the
/// reference for the relative normalizations.
pub fn compare(a: &Snapshot, b: &Snapshot) -> Result<CompareMetrics, SnapshotError> {
    let t_scale = a.t.abs().max(1.0);
    if (a.t - b.t).abs() > 1e-9 * t_scale {
        return Err(SnapshotError::TimeMismatch { a: a.t, b: b.t });
    }

    let pairs: Vec<(f64, f64)> = if a.len() == b.len()
        && a.x
            .iter()
            .zip(&b.x)
            .all(|(xa, xb)| (xa - xb).abs() <= 1e-9 * xa.abs().max(1.0))
    {
        a.rho.iter().copied().zip(b.rho.iter().copied()).collect()
    } else {
        let (coarse, fine, coarse_is_a) = if a.len() <= b.len() {
            (a, b, true)
        } else {
            (b, a, false)
        };
        let mut out = Vec::with_capacity(coarse.len());
        for (i, &x) in coarse.x.iter().enumerate() {
            if let Some(f) = linear_sample(&fine.x, &fine.rho, x) {
                let (rho_a, rho_b) = if coarse_is_a {
                    (coarse.rho[i], f)
                } else {
                    (f, coarse.rho[i])
                };
                out.push((rho_a, rho_b));
            }
        }
        out
    };

    if pairs.len() < 2 {
        return Err(SnapshotError::GridMismatch {
            points: pairs.len(),
        });
    }
    let mut diff2 = 0.0f64;
    let mut ref2 = 0.0f64;
    let mut sup_diff = 0.0f64;
    let mut sup_ref = 0.0f64;
    for &(ra, rb) in &pairs {
        let d = ra - rb;
        diff2 += d * d;
        ref2 += ra * ra;
        sup_diff = sup_diff.max(d.abs());
        sup_ref = sup_ref.max(ra.abs());
    }
    if ref2 == 0.0 || sup_ref == 0.0 {
        return Err(SnapshotError::ZeroReference);
    }
    Ok(CompareMetrics {
        t: a.t,
        rel_l2: (diff2 / ref2).sqrt(),
        sup: sup_diff / sup_ref,
        points: pairs.len(),
    })
}

/// Linear interpolation of `(xs, ys)` (xs ascending) at `x`; None outside.
fn linear_sample(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let (first, last) = (*xs.first()?, *xs.last()?);
    if x < first || x > last {
        return None;
    }
    let j = match xs.binary_search_by(|probe| probe.partial_cmp(&x).unwrap()) {
        Ok(exact) => return Some(ys[exact]),
        Err(0) => return Some(ys[0]),
        Err(j) if j >= xs.len() => return Some(ys[xs.len() - 1]),
        Err(j) => j,
    };
    let (x0, x1) = (xs[j - 1], xs[j]);
    let w = (x - x0) / (x1 - x0);
    Some(ys[j - 1] * (1.0 - w) + ys[j] * w)
}
