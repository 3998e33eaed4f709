//! Scenario orchestration: runs the semi-analytic and finite-difference
//! pipelines from one config, aligns their snapshot times, and assembles the
//! comparison report.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use kleindyn::amplitudes::{amplitude_method, amplitude_table, AmplitudeRequest};
use kleindyn::fdtd::{build_propagator, evolve};
use kleindyn::physics::classify_regime;
use kleindyn::wavepacket::{
    dirac_spectrum, evaluate_dirac, evaluate_kg, initial_state, kg_spectrum, mse_terms_needed,
    region2_group_velocity, MomentumSpectrum,
};
use kleindyn::{EquationKind, SpatialGrid, SpinorField};

use crate::config::{ConfigError, LoadedScenario};
use crate::snapshot::{compare, CompareMetrics, Provenance, Snapshot, SnapshotError};

/// Cap on the number of charge samples kept in a report (the stepped
/// pipeline records one per step; the report keeps a uniform subsample plus
/// the final step).
const MAX_CHARGE_POINTS: usize = 2001;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("amplitude computation failed at p1 = {p1:.6}: {message}")]
    Amplitudes { p1: f64, message: String },
    #[error("semi-analytic pipeline: {0}")]
    Wavepacket(String),
    #[error("finite-difference pipeline: {0}")]
    Fdtd(String),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("refusing to run: {0}")]
    Refused(String),
}

/// Which pipelines to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMethod {
    Semi,
    Fd,
    Both,
}

impl RunMethod {
    pub fn wants_semi(self) -> bool {
        matches!(self, RunMethod::Semi | RunMethod::Both)
    }
    pub fn wants_fd(self) -> bool {
        matches!(self, RunMethod::Fd | RunMethod::Both)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub method: RunMethod,
    /// Overrides both the config `n_max` and the derived default.
    pub n_max_override: Option<u32>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            method: RunMethod::Both,
            n_max_override: None,
        }
    }
}

/// Region charges at one instant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChargePoint {
    pub t: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub qtotal: f64,
}

/// Everything one pipeline produced.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub provenance: Provenance,
    pub snapshots: Vec<Snapshot>,
    pub charges: Vec<ChargePoint>,
}

/// Cross-method metrics and the charge bookkeeping of both pipelines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Per-snapshot density differences (semi-analytic as reference);
    /// empty unless both pipelines ran.
    pub per_snapshot: Vec<CompareMetrics>,
    pub semi_charges: Vec<ChargePoint>,
    pub fd_charges: Vec<ChargePoint>,
    /// Q1(t_last) / Q1(0): the reflected-to-incident charge ratio, > 1 only
    /// for spin-0 supercritical scattering.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superradiance_ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub semi: Option<MethodRun>,
    pub fd: Option<MethodRun>,
    pub report: ComparisonReport,
    pub warnings: Vec<String>,
    /// Near-edge ranges flagged in semi-analytic sidecars (smooth barriers).
    pub slope_flagged_ranges: Vec<[f64; 2]>,
}

fn downsample_charges(charges: &[ChargePoint]) -> Vec<ChargePoint> {
    if charges.len() <= MAX_CHARGE_POINTS {
        return charges.to_vec();
    }
    let stride = charges.len().div_ceil(MAX_CHARGE_POINTS);
    let mut out: Vec<ChargePoint> = charges.iter().copied().step_by(stride).collect();
    let last = *charges.last().expect("non-empty");
    if out.last().map(|c| c.t) != Some(last.t) {
        out.push(last);
    }
    out
}

fn superradiance_ratio(charges: &[ChargePoint]) -> Option<f64> {
    let first = charges.first()?;
    let last = charges.last()?;
    if first.t.abs() > 1e-9 || first.q1.abs() <= 1e-12 {
        return None;
    }
    Some(last.q1 / first.q1)
}

/// Executes the configured pipelines and assembles the report. Pure
/// computation: no I/O, deterministic for a given config.
pub fn run_scenario(
    loaded: &LoadedScenario,
    opts: &RunOptions,
) -> Result<RunArtifacts, ScenarioError> {
    let cfg = &loaded.config;
    cfg.validate()?;
    let ps = cfg.particle();
    let barrier = cfg.barrier();
    let g = cfg.gaussian()?;
    let equation = cfg.equation.kind();
    let grid_spec = cfg.grid_spec(&ps);
    let momentum_grid = cfg.momentum_grid(&ps)?;
    let convention = cfg.smooth_convention()?;
    let method =
        amplitude_method(&cfg.method_amplitudes).map_err(|e| ScenarioError::Amplitudes {
            p1: cfg.p0,
            message: e.to_string(),
        })?;

    let t_last = cfg.t_last();
    let (steps, dt) = if t_last > 0.0 {
        let steps = (t_last / grid_spec.dt).ceil() as usize;
        (steps, grid_spec.dt)
    } else {
        (0, grid_spec.dt)
    };
    let t_end = if opts.method.wants_fd() {
        steps as f64 * dt
    } else {
        t_last
    };

    // Refuse runs whose light cone (from the ±6d support edges) would reach
    // the domain boundary before the last snapshot: beyond that point both
    // representations are invalid (the stepped run reflects off the
    // truncated boundary rows; the semi-analytic run assumes free regions).
    let half = 0.5 * cfg.domain_length;
    let reach_right = cfg.x0 + 6.0 * cfg.d + ps.c * t_end;
    let reach_left = cfg.x0 - 6.0 * cfg.d - ps.c * t_end;
    if reach_right > half || reach_left < -half {
        return Err(ScenarioError::Refused(format!(
            "wavefront would reach the domain edge before the last snapshot \
             (support [{:.3}, {:.3}] + c·t = {:.3} exceeds [{:.3}, {:.3}]); \
             enlarge domain_length or shorten snapshot_times",
            reach_left + ps.c * t_end,
            reach_right - ps.c * t_end,
            t_end,
            -half,
            half
        )));
    }

    let mut warnings = g.support_warnings(&barrier);
    let slope_flagged_ranges: Vec<[f64; 2]> = match cfg.epsilon {
        Some(eps) => {
            let w = 5.0 / eps;
            vec![[-w, w], [cfg.l_barrier - w, cfg.l_barrier + w]]
        }
        None => Vec::new(),
    };

    // Finite-difference pipeline.
    let fd = if opts.method.wants_fd() {
        // The cutoff guard needs the largest momentum present: the
        // quadrature window plus the scattered interior momenta (which can
        // exceed the incident ones in the supercritical regime).
        let mut p_max = momentum_grid.hi;
        for p in momentum_grid.samples() {
            if let Ok(kin) = classify_regime(&ps, barrier.v, p) {
                if kin.p2.im == 0.0 {
                    p_max = p_max.max(kin.p2.re.abs());
                }
            }
        }
        let prop = build_propagator(equation, &grid_spec, &barrier, &ps, Some(p_max))
            .map_err(|e| ScenarioError::Fdtd(e.to_string()))?;
        warnings.extend(prop.warnings.iter().cloned());

        let state0 = initial_state(equation, &g, &ps, grid_spec.spatial());
        let outcome = evolve(&state0, &prop, steps, &cfg.snapshot_times)
            .map_err(|e| ScenarioError::Fdtd(e.to_string()))?;
        let snapshots = outcome
            .fields
            .iter()
            .map(|f| Snapshot::from_field(f, Provenance::FiniteDifference, &loaded.sha256))
            .collect();
        let charges: Vec<ChargePoint> = outcome
            .charges
            .iter()
            .map(|c| ChargePoint {
                t: c.t,
                q1: c.q1,
                q2: c.q2,
                q3: c.q3,
                qtotal: c.qtotal,
            })
            .collect();
        Some(MethodRun {
            provenance: Provenance::FiniteDifference,
            snapshots,
            charges: downsample_charges(&charges),
        })
    } else {
        None
    };

    // Semi-analytic pipeline, evaluated at the achieved step times when the
    // stepped run exists (eliminating time-mismatch bias) and on the same
    // spatial grid.
    let semi = if opts.method.wants_semi() {
        let semi_times: Vec<f64> = match &fd {
            Some(run) => run.snapshots.iter().map(|s| s.t).collect(),
            None => cfg.snapshot_times.clone(),
        };
        let semi_grid = match &fd {
            Some(_) => grid_spec.spatial(),
            None => SpatialGrid::centered(cfg.domain_length, cfg.semi_nx),
        };

        let spectrum: MomentumSpectrum = match equation {
            EquationKind::KleinGordon => kg_spectrum(&g, &ps, &momentum_grid),
            EquationKind::Dirac => dirac_spectrum(&g, &ps, &momentum_grid),
        }
        .map_err(|e| ScenarioError::Wavepacket(e.to_string()))?;

        let t_semi_last = semi_times.last().copied().unwrap_or(0.0);
        let n_max = opts
            .n_max_override
            .or(cfg.n_max)
            .unwrap_or_else(|| {
                let v2 = region2_group_velocity(&ps, barrier.v, cfg.p0);
                mse_terms_needed(t_semi_last, barrier.l, v2, cfg.mse_terms_cap)
            });

        let requests: Vec<AmplitudeRequest> = spectrum
            .p
            .iter()
            .map(|&p| {
                let mut req = AmplitudeRequest::new(equation, ps, barrier, p).with_n_max(n_max);
                req.smooth_convention = convention;
                req
            })
            .collect();
        let amps = amplitude_table(method, &requests).map_err(|e| ScenarioError::Amplitudes {
            p1: cfg.p0,
            message: e.to_string(),
        })?;

        let eval = |t: f64| -> Result<SpinorField, ScenarioError> {
            match equation {
                EquationKind::KleinGordon => evaluate_kg(&barrier, &spectrum, &amps, t, semi_grid),
                EquationKind::Dirac => evaluate_dirac(&barrier, &spectrum, &amps, t, semi_grid),
            }
            .map_err(|e| ScenarioError::Wavepacket(e.to_string()))
        };

        let mut charges = Vec::with_capacity(semi_times.len() + 1);
        // The superradiance ratio needs the incident charge; measure it at
        // t = 0 even when no snapshot was requested there.
        if semi_times.first().map_or(true, |t| *t > 1e-12) {
            let rc = eval(0.0)?.region_charges(&barrier);
            charges.push(ChargePoint {
                t: 0.0,
                q1: rc.q1,
                q2: rc.q2,
                q3: rc.q3,
                qtotal: rc.qtotal,
            });
        }
        let mut snapshots = Vec::with_capacity(semi_times.len());
        for &t in &semi_times {
            let field = eval(t)?;
            let rc = field.region_charges(&barrier);
            charges.push(ChargePoint {
                t,
                q1: rc.q1,
                q2: rc.q2,
                q3: rc.q3,
                qtotal: rc.qtotal,
            });
            snapshots.push(Snapshot::from_field(
                &field,
                Provenance::SemiAnalytic,
                &loaded.sha256,
            ));
        }
        Some(MethodRun {
            provenance: Provenance::SemiAnalytic,
            snapshots,
            charges,
        })
    } else {
        None
    };

    let per_snapshot = match (&semi, &fd) {
        (Some(s), Some(f)) => {
            let mut metrics = Vec::with_capacity(s.snapshots.len());
            for (a, b) in s.snapshots.iter().zip(&f.snapshots) {
                metrics.push(compare(a, b)?);
            }
            metrics
        }
        _ => Vec::new(),
    };

    let charge_source = fd.as_ref().or(semi.as_ref());
    let report = ComparisonReport {
        per_snapshot,
        semi_charges: semi.as_ref().map(|r| r.charges.clone()).unwrap_or_default(),
        fd_charges: fd.as_ref().map(|r| r.charges.clone()).unwrap_or_default(),
        superradiance_ratio: charge_source.and_then(|r| superradiance_ratio(&r.charges)),
    };

    Ok(RunArtifacts {
        semi,
        fd,
        report,
        warnings,
        slope_flagged_ranges,
    })
}
