//! Physical constants, potential profiles, relativistic kinematics and
//! scattering-regime classification shared by both wave equations.

use num_complex::Complex64;
use thiserror::Error;

/// Errors from kinematics and spinor-ratio construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysicsError {
    #[error("particle parameters must be strictly positive (m={m}, c={c}, hbar={hbar})")]
    NonPositiveParticle { m: f64, c: f64, hbar: f64 },
    #[error("incident momentum must be strictly positive (p1={p1})")]
    NonPositiveMomentum { p1: f64 },
    #[error("barrier width must be strictly positive (L={l})")]
    NonPositiveWidth { l: f64 },
    #[error("barrier height must be finite (V={v})")]
    NonFiniteHeight { v: f64 },
    #[error("smoothness parameter must be strictly positive (epsilon={epsilon})")]
    NonPositiveSmoothness { epsilon: f64 },
    #[error("spinor-ratio denominator vanished ({which} = {value:e})")]
    SpinorBranch { which: &'static str, value: f64 },
    #[error("spinor normalization singular (1 + alpha^2 = {value:e} for {which})")]
    SpinorNormalization { which: &'static str, value: f64 },
}

/// Particle parameters: mass, speed of light, reduced Planck constant.
///
/// Natural units (m = c = ħ = 1) by default; all quantities elsewhere in the
/// crate are interpreted in whatever consistent unit system these define.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleSpec {
    /// Mass, in energy/c² units.
    pub m: f64,
    /// Speed of light.
    pub c: f64,
    /// Reduced Planck constant.
    pub hbar: f64,
}

impl Default for ParticleSpec {
    fn default() -> Self {
        Self { m: 1.0, c: 1.0, hbar: 1.0 }
    }
}

impl ParticleSpec {
    /// Natural units m = c = ħ = 1.
    pub fn natural() -> Self {
        Self::default()
    }

    /// Checks that all three parameters are strictly positive and finite.
    pub fn validate(&self) -> Result<(), PhysicsError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.m) && ok(self.c) && ok(self.hbar) {
            Ok(())
        } else {
            Err(PhysicsError::NonPositiveParticle { m: self.m, c: self.c, hbar: self.hbar })
        }
    }

    /// Rest energy mc².
    pub fn rest_energy(&self) -> f64 {
        self.m * self.c * self.c
    }

    /// Relativistic energy E(p) = +√(m²c⁴ + p²c²) (positive branch).
    pub fn energy(&self, p: f64) -> f64 {
        let mc2 = self.rest_energy();
        (mc2 * mc2 + p * p * self.c * self.c).sqrt()
    }

    /// Group velocity dE/dp = pc²/E of a free positive-energy wave.
    pub fn group_velocity(&self, p: f64) -> f64 {
        p * self.c * self.c / self.energy(p)
    }
}

/// Shape of the external potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierFamily {
    /// V·θ(x)·θ(L−x): sharp edges at x = 0 and x = L.
    Rectangular,
    /// (V/2)[tanh(εx) − tanh(ε(x−L))]: smooth edges of slope width ~1/ε.
    SmoothTanh,
    /// V·θ(x): a single rising edge at x = 0.
    StepLeft,
    /// V·θ(L−x): a single falling edge at x = L.
    StepRight,
}

/// A barrier: family, height V, width L and (for smooth edges) slope ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec {
    pub family: BarrierFamily,
    /// Height V (energy). May be any real value; positive for a barrier.
    pub v: f64,
    /// Width L (length). Edge positions are x = 0 and x = L.
    pub l: f64,
    /// Smoothness ε (1/length); only meaningful for `SmoothTanh`.
    pub epsilon: f64,
}

impl BarrierSpec {
    pub fn rectangular(v: f64, l: f64) -> Self {
        Self { family: BarrierFamily::Rectangular, v, l, epsilon: 0.0 }
    }

    pub fn smooth_tanh(v: f64, l: f64, epsilon: f64) -> Self {
        Self { family: BarrierFamily::SmoothTanh, v, l, epsilon }
    }

    pub fn step_left(v: f64) -> Self {
        Self { family: BarrierFamily::StepLeft, v, l: 0.0, epsilon: 0.0 }
    }

    pub fn step_right(v: f64, l: f64) -> Self {
        Self { family: BarrierFamily::StepRight, v, l, epsilon: 0.0 }
    }

    /// Checks the family-dependent invariants (L > 0 for two-edge barriers,
    /// ε > 0 for smooth edges, finite height).
    pub fn validate(&self) -> Result<(), PhysicsError> {
        if !self.v.is_finite() {
            return Err(PhysicsError::NonFiniteHeight { v: self.v });
        }
        match self.family {
            BarrierFamily::Rectangular | BarrierFamily::SmoothTanh => {
                if !(self.l.is_finite() && self.l > 0.0) {
                    return Err(PhysicsError::NonPositiveWidth { l: self.l });
                }
            }
            BarrierFamily::StepLeft | BarrierFamily::StepRight => {}
        }
        if self.family == BarrierFamily::SmoothTanh && !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(PhysicsError::NonPositiveSmoothness { epsilon: self.epsilon });
        }
        Ok(())
    }

    /// Potential value at position x. Step edges use θ(0) = 1/2 (midpoint
    /// convention, which minimizes grid-alignment artifacts in lattice runs).
    pub fn potential_at(&self, x: f64) -> f64 {
        fn theta(x: f64) -> f64 {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                0.0
            } else {
                0.5
            }
        }
        match self.family {
            BarrierFamily::Rectangular => self.v * theta(x) * theta(self.l - x),
            BarrierFamily::SmoothTanh => {
                0.5 * self.v * ((self.epsilon * x).tanh() - (self.epsilon * (x - self.l)).tanh())
            }
            BarrierFamily::StepLeft => self.v * theta(x),
            BarrierFamily::StepRight => self.v * theta(self.l - x),
        }
    }
}

/// Scattering regime of a positive-energy wave against a step of height V.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// E − V > mc²: the wave propagates over the barrier (p₂ real > 0).
    PropagatingSub,
    /// |E − V| ≤ mc²: the wave decays inside (p₂ = +i·|p₂|).
    Evanescent,
    /// V − E > mc²: supercritical; the interior wave rides the negative-energy
    /// continuum and carries p₂ real < 0 (outgoing group velocity).
    KleinZone,
}

/// Kinematics of a plane wave of incident momentum p₁ against a step of
/// height V: energy, interior momentum p₂ (complex in general) and regime.
///
/// The momentum in the exit region always equals p₁ again (equal outer
/// potentials), so it is not stored separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    /// Incident momentum (> 0).
    pub p1: f64,
    /// Positive-branch energy E(p₁).
    pub energy: f64,
    /// Barrier height this kinematics was classified against.
    pub v: f64,
    /// Interior momentum p₂: negative real (KleinZone), positive real
    /// (PropagatingSub) or +i·decay (Evanescent).
    pub p2: Complex64,
    pub regime: Regime,
}

/// Classifies the scattering regime and selects the physical branch of p₂.
///
/// p₂²c² = (E − V)² − m²c⁴ = p₁²c² − 2VE + V². The branch is fixed by
/// boundary conditions: negative real in the Klein zone (group velocity must
/// point away from the edge inside the barrier), positive real when the wave
/// propagates over the barrier, and decaying (+i·|p₂|) in the gap. V = 0
/// returns p₂ = p₁ exactly.
pub fn classify_regime(ps: &ParticleSpec, v: f64, p1: f64) -> Result<Kinematics, PhysicsError> {
    ps.validate()?;
    if !(p1.is_finite() && p1 > 0.0) {
        return Err(PhysicsError::NonPositiveMomentum { p1 });
    }
    let energy = ps.energy(p1);
    if v == 0.0 {
        // Free case: return p2 = p1 bit-exactly rather than via the sqrt.
        return Ok(Kinematics {
            p1,
            energy,
            v,
            p2: Complex64::new(p1, 0.0),
            regime: Regime::PropagatingSub,
        });
    }
    let mc2 = ps.rest_energy();
    let p2sq_c2 = (energy - v) * (energy - v) - mc2 * mc2;
    let (p2, regime) = if v - energy > mc2 && p2sq_c2 > 0.0 {
        (Complex64::new(-p2sq_c2.sqrt() / ps.c, 0.0), Regime::KleinZone)
    } else if energy - v > mc2 && p2sq_c2 > 0.0 {
        (Complex64::new(p2sq_c2.sqrt() / ps.c, 0.0), Regime::PropagatingSub)
    } else {
        (Complex64::new(0.0, (-p2sq_c2).max(0.0).sqrt() / ps.c), Regime::Evanescent)
    };
    Ok(Kinematics { p1, energy, v, p2, regime })
}

/// Spinor component ratios α_j^± and normalizations n_j^± for the
/// two-component Dirac plane waves, at incident momentum p₁ against height V.
///
/// Region index j = 1 refers to the outer regions (V = 0), j = 2 to the
/// interior; the superscript is the energy branch. α₂ values may be complex
/// in the evanescent regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiracSpinorRatios {
    pub alpha1_plus: f64,
    pub alpha1_minus: f64,
    pub alpha2_plus: Complex64,
    pub alpha2_minus: f64,
    pub n1_plus: f64,
    pub n1_minus: f64,
    pub n2_plus: Complex64,
    pub n2_minus: f64,
}

/// Computes the four spinor ratios and their normalizations
/// n_j^± = (1 + (α_j^±)²)^(−1/2) (principal square root).
///
/// α₁^± = p₁c/(mc² ± E); inside the barrier α₂^+ = p₂c/(mc² + E − V) with the
/// regime-selected signed p₂, and
/// α₂^− = −√(p₁²c² + 2VE + V²)/(mc² − E − V) — the negative branch of the
/// interior momentum, which for V > 0 always lies in its own supercritical
/// zone and is therefore real.
pub fn dirac_alphas(ps: &ParticleSpec, v: f64, p1: f64) -> Result<DiracSpinorRatios, PhysicsError> {
    let kin = classify_regime(ps, v, p1)?;
    let mc2 = ps.rest_energy();
    let e = kin.energy;
    let c = ps.c;

    let d1p = mc2 + e;
    let d1m = mc2 - e;
    let d2p = mc2 + e - v;
    let d2m = mc2 - e - v;
    if d2p == 0.0 {
        return Err(PhysicsError::SpinorBranch { which: "mc^2 + E - V", value: d2p });
    }
    if d1m == 0.0 {
        return Err(PhysicsError::SpinorBranch { which: "mc^2 - E", value: d1m });
    }
    if d2m == 0.0 {
        return Err(PhysicsError::SpinorBranch { which: "mc^2 - E - V", value: d2m });
    }

    let alpha1_plus = p1 * c / d1p;
    let alpha1_minus = p1 * c / d1m;
    let alpha2_plus = kin.p2 * c / d2p;
    let alpha2_minus = -(p1 * p1 * c * c + 2.0 * v * e + v * v).sqrt() / d2m;

    let norm_real = |alpha: f64, which: &'static str| -> Result<f64, PhysicsError> {
        let s = 1.0 + alpha * alpha;
        if s <= 0.0 {
            return Err(PhysicsError::SpinorNormalization { which, value: s });
        }
        Ok(1.0 / s.sqrt())
    };
    let s2 = Complex64::new(1.0, 0.0) + alpha2_plus * alpha2_plus;
    if s2.norm() == 0.0 {
        return Err(PhysicsError::SpinorNormalization { which: "alpha2+", value: 0.0 });
    }

    Ok(DiracSpinorRatios {
        alpha1_plus,
        alpha1_minus,
        alpha2_plus,
        alpha2_minus,
        n1_plus: norm_real(alpha1_plus, "alpha1+")?,
        n1_minus: norm_real(alpha1_minus, "alpha1-")?,
        n2_plus: 1.0 / s2.sqrt(),
        n2_minus: norm_real(alpha2_minus, "alpha2-")?,
    })
}
