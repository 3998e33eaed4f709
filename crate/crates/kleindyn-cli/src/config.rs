//! Scenario configuration: one flat JSON object per file, hashed for
//! provenance. Every output produced from a config embeds the SHA-256 of the
//! exact bytes that were loaded, so results remain attributable and
//! diff-able.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use kleindyn::amplitudes::{amplitude_method, method_names, SmoothPhaseConvention};
use kleindyn::fdtd::GridSpec;
use kleindyn::wavepacket::{InitialGaussian, MomentumGrid};
use kleindyn::{BarrierSpec, EquationKind, ParticleSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config{}: {source}", path_suffix(.path))]
    Parse {
        path: Option<PathBuf>,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn path_suffix(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!(" {}", p.display()),
        None => String::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationTag {
    KleinGordon,
    Dirac,
}

impl EquationTag {
    pub fn kind(self) -> EquationKind {
        match self {
            EquationTag::KleinGordon => EquationKind::KleinGordon,
            EquationTag::Dirac => EquationKind::Dirac,
        }
    }

    pub fn from_kind(kind: EquationKind) -> Self {
        match kind {
            EquationKind::KleinGordon => EquationTag::KleinGordon,
            EquationKind::Dirac => EquationTag::Dirac,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EquationTag::KleinGordon => "klein-gordon",
            EquationTag::Dirac => "dirac",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    Rectangular,
    SmoothTanh,
}

fn one() -> f64 {
    1.0
}
fn default_taylor() -> u32 {
    12
}
fn default_p_samples() -> usize {
    2048
}
fn default_sigmas() -> f64 {
    6.0
}
fn default_semi_nx() -> usize {
    2048
}
fn default_method() -> String {
    "auto".to_owned()
}
fn default_cap() -> u32 {
    16
}

/// One scattering scenario: particle, barrier, initial packet, grids,
/// quadrature and method knobs. Unknown keys are rejected so that typos
/// cannot silently fall back to defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub equation: EquationTag,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "one")]
    pub hbar: f64,

    pub barrier_family: FamilyTag,
    pub v: f64,
    pub l_barrier: f64,
    /// Edge steepness; required for (and only meaningful for) smooth-tanh.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,

    pub x0: f64,
    pub p0: f64,
    pub d: f64,

    /// Finite-difference domain length (centered on 0) and point count.
    pub domain_length: f64,
    pub nx: usize,
    /// Time step; defaults to a quarter of the spin-1/2 stability bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_taylor")]
    pub taylor_n_max: u32,

    /// Momentum-quadrature sample count (rounded up to odd) and half-width
    /// of the window in units of the packet's momentum spread.
    #[serde(default = "default_p_samples")]
    pub p_samples: usize,
    #[serde(default = "default_sigmas")]
    pub p_window_sigmas: f64,
    /// Evaluation grid for semi-analytic-only runs (`packet`); comparisons
    /// always evaluate on the finite-difference grid instead.
    #[serde(default = "default_semi_nx")]
    pub semi_nx: usize,

    pub snapshot_times: Vec<f64>,

    /// Amplitude-assembly strategy; one of the registered method names.
    #[serde(default = "default_method")]
    pub method_amplitudes: String,
    /// Truncation order for partial multiple-scattering sums; when absent
    /// it is derived from the last snapshot time and the interior group
    /// velocity, clamped to `mse_terms_cap`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u32>,
    #[serde(default = "default_cap")]
    pub mse_terms_cap: u32,
    /// "momentum-difference" (default) or "mu-nu-quadratic".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smooth_phase_convention: Option<String>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// A parsed config together with the SHA-256 digest of the bytes it came
/// from (or of its canonical serialization when built in memory).
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub config: ScenarioConfig,
    pub sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

impl LoadedScenario {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let bytes = fs::read(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_bytes(&bytes, Some(path))
    }

    pub fn from_bytes(bytes: &[u8], origin: Option<&Path>) -> Result<Self, ConfigError> {
        let config: ScenarioConfig =
            serde_json::from_slice(bytes).map_err(|source| ConfigError::Parse {
                path: origin.map(Path::to_owned),
                source,
            })?;
        config.validate()?;
        Ok(Self {
            config,
            sha256: sha256_hex(bytes),
        })
    }

    /// Wraps an in-memory config, hashing its canonical JSON form.
    pub fn from_config(config: ScenarioConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let bytes = serde_json::to_vec(&config).expect("config serialization cannot fail");
        Ok(Self {
            config,
            sha256: sha256_hex(&bytes),
        })
    }
}

impl ScenarioConfig {
    pub fn particle(&self) -> ParticleSpec {
        ParticleSpec {
            m: self.mass,
            c: self.c,
            hbar: self.hbar,
        }
    }

    pub fn barrier(&self) -> BarrierSpec {
        match self.barrier_family {
            FamilyTag::Rectangular => BarrierSpec::rectangular(self.v, self.l_barrier),
            FamilyTag::SmoothTanh => {
                BarrierSpec::smooth_tanh(self.v, self.l_barrier, self.epsilon.unwrap_or(0.0))
            }
        }
    }

    pub fn gaussian(&self) -> Result<InitialGaussian, ConfigError> {
        InitialGaussian::new(self.x0, self.p0, self.d)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn grid_spec(&self, ps: &ParticleSpec) -> GridSpec {
        let dt = self
            .dt
            .unwrap_or_else(|| GridSpec::default_dt(self.domain_length, self.nx, ps));
        let mut spec = GridSpec::new(self.domain_length, self.nx, dt);
        spec.taylor_n_max = self.taylor_n_max as usize;
        spec
    }

    pub fn momentum_grid(&self, ps: &ParticleSpec) -> Result<MomentumGrid, ConfigError> {
        let g = self.gaussian()?;
        let sigma = g.sigma_p(ps);
        let lo = self.p0 - self.p_window_sigmas * sigma;
        let hi = self.p0 + self.p_window_sigmas * sigma;
        if lo <= 0.0 {
            return Err(ConfigError::Invalid(format!(
                "momentum window [{lo:.6}, {hi:.6}] extends to non-positive momenta; \
                 increase d or p0, or narrow p_window_sigmas"
            )));
        }
        MomentumGrid::new(lo, hi, self.p_samples).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn smooth_convention(&self) -> Result<SmoothPhaseConvention, ConfigError> {
        match self.smooth_phase_convention.as_deref() {
            None | Some("momentum-difference") => Ok(SmoothPhaseConvention::MomentumDifference),
            Some("mu-nu-quadratic") => Ok(SmoothPhaseConvention::MuNuQuadratic),
            Some(other) => Err(ConfigError::Invalid(format!(
                "unknown smooth_phase_convention {other:?}; \
                 expected \"momentum-difference\" or \"mu-nu-quadratic\""
            ))),
        }
    }

    /// The last requested snapshot time.
    pub fn t_last(&self) -> f64 {
        self.snapshot_times.last().copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));

        self.particle()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        match self.barrier_family {
            FamilyTag::SmoothTanh => match self.epsilon {
                Some(eps) if eps > 0.0 && eps.is_finite() => {}
                Some(eps) => return invalid(format!("epsilon must be positive, got {eps}")),
                None => return invalid("smooth-tanh barriers need an epsilon".to_owned()),
            },
            FamilyTag::Rectangular => {
                if self.epsilon.is_some() {
                    return invalid(
                        "epsilon is only meaningful for smooth-tanh barriers; remove it"
                            .to_owned(),
                    );
                }
            }
        }
        self.barrier()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        self.gaussian()?;
        if !(self.domain_length > 0.0) || !self.domain_length.is_finite() {
            return invalid(format!(
                "domain_length must be positive, got {}",
                self.domain_length
            ));
        }
        if self.nx < 5 {
            return invalid(format!("nx must be at least 5, got {}", self.nx));
        }
        if self.semi_nx < 5 {
            return invalid(format!("semi_nx must be at least 5, got {}", self.semi_nx));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return invalid(format!("dt must be positive, got {dt}"));
            }
        }
        if self.taylor_n_max == 0 {
            return invalid("taylor_n_max must be at least 1".to_owned());
        }
        if self.p_samples < 3 {
            return invalid(format!("p_samples must be at least 3, got {}", self.p_samples));
        }
        if !(self.p_window_sigmas >= 1.0) || !self.p_window_sigmas.is_finite() {
            return invalid(format!(
                "p_window_sigmas must be at least 1, got {}",
                self.p_window_sigmas
            ));
        }

        if self.snapshot_times.is_empty() {
            return invalid("snapshot_times must not be empty".to_owned());
        }
        for pair in self.snapshot_times.windows(2) {
            if !(pair[1] >= pair[0]) {
                return invalid(format!(
                    "snapshot_times must be non-decreasing ({} after {})",
                    pair[1], pair[0]
                ));
            }
        }
        if self
            .snapshot_times
            .iter()
            .any(|t| !t.is_finite() || *t < 0.0)
        {
            return invalid("snapshot_times must be finite and non-negative".to_owned());
        }

        // The packet's ±6d support must start inside the domain.
        let half = 0.5 * self.domain_length;
        if self.x0 - 6.0 * self.d < -half || self.x0 + 6.0 * self.d > half {
            return invalid(format!(
                "initial support [{}, {}] (±6d) exceeds the domain [{}, {}]",
                self.x0 - 6.0 * self.d,
                self.x0 + 6.0 * self.d,
                -half,
                half
            ));
        }

        let ps = self.particle();
        self.momentum_grid(&ps)?;
        self.smooth_convention()?;
        amplitude_method(&self.method_amplitudes).map_err(|_| {
            ConfigError::Invalid(format!(
                "unknown method_amplitudes {:?}; available: {}",
                self.method_amplitudes,
                method_names().join(", ")
            ))
        })?;
        Ok(())
    }
}
