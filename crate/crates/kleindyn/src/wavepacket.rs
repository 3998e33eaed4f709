//! Semi-analytic wavepackets: Gaussian momentum spectra over the
//! positive- and negative-energy branches, and region-wise evaluation of the
//! time-dependent field as a quadrature over amplitude-weighted plane waves.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::amplitudes::{AmplitudeMode, BarrierAmplitudes};
use crate::field::{EquationKind, SpatialGrid, SpinorField};
use crate::physics::{
    classify_regime, dirac_alphas, BarrierFamily, BarrierSpec, ParticleSpec, PhysicsError, Regime,
};

/// Errors from spectrum construction and field evaluation.
#[derive(Debug, thiserror::Error)]
pub enum WavepacketError {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("momentum grid must contain strictly positive samples (got {0})")]
    NonPositiveMomentum(f64),
    #[error("momentum grid needs at least 3 samples (got {0})")]
    GridTooSmall(usize),
    #[error("momentum grid bounds must satisfy 0 < lo < hi (got [{lo}, {hi}])")]
    BadGridBounds { lo: f64, hi: f64 },
    #[error("amplitude table length {amps} does not match spectrum length {spectrum}")]
    LengthMismatch { amps: usize, spectrum: usize },
    #[error("equation mismatch: spectrum is for {spectrum:?}, evaluation for {requested:?}")]
    EquationMismatch {
        spectrum: EquationKind,
        requested: EquationKind,
    },
    #[error(
        "resummed amplitudes supplied for a supercritical spin-0 sample (p1 = {p1}); \
         the geometric series diverges there and only partial sums are meaningful"
    )]
    DivergentResummed { p1: f64 },
    #[error("barrier family {0:?} is not supported by the plane-wave evaluation")]
    UnsupportedBarrier(BarrierFamily),
    #[error("packet width must be strictly positive and finite (d = {0})")]
    NonPositivePacketWidth(f64),
}

/// A normalized Gaussian initial state centered at `x0` with mean momentum
/// `p0` and spatial width `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialGaussian {
    pub x0: f64,
    pub p0: f64,
    pub d: f64,
}

impl InitialGaussian {
    pub fn new(x0: f64, p0: f64, d: f64) -> Result<Self, WavepacketError> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(WavepacketError::NonPositivePacketWidth(d));
        }
        Ok(Self { x0, p0, d })
    }

    /// Standard deviation of the momentum distribution |c(p)|².
    pub fn sigma_p(&self, ps: &ParticleSpec) -> f64 {
        ps.hbar / (2.0 * self.d)
    }

    /// The normalized initial amplitude g(x) with ∫|g|² dx = 1.
    pub fn amplitude_at(&self, ps: &ParticleSpec, x: f64) -> Complex64 {
        let norm = (2.0 * std::f64::consts::PI).powf(-0.25) / self.d.sqrt();
        let gauss = (-((x - self.x0) * (x - self.x0)) / (4.0 * self.d * self.d)).exp();
        Complex64::from_polar(norm * gauss, self.p0 * x / ps.hbar)
    }

    /// Warnings about marginal parameter choices (not errors).
    pub fn support_warnings(&self, barrier: &BarrierSpec) -> Vec<String> {
        let mut w = Vec::new();
        if self.x0 > -3.0 * self.d {
            w.push(format!(
                "initial center x0 = {} is within 3d = {} of the barrier edge at 0; \
                 the packet overlaps the barrier at t = 0",
                self.x0,
                3.0 * self.d
            ));
        }
        if self.x0 > barrier.l {
            w.push("initial center lies beyond the far barrier edge".to_owned());
        }
        w
    }
}

/// A uniform momentum-quadrature grid with an odd number of samples
/// (composite Simpson rule).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl MomentumGrid {
    /// Builds a grid on [lo, hi]; `n` is rounded up to the next odd count.
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self, WavepacketError> {
        if !(lo > 0.0 && hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(WavepacketError::BadGridBounds { lo, hi });
        }
        if n < 3 {
            return Err(WavepacketError::GridTooSmall(n));
        }
        let n = if n % 2 == 0 { n + 1 } else { n };
        Ok(Self { lo, hi, n })
    }

    /// The default grid for a Gaussian spectrum: ±6σ_p around p0, clipped to
    /// positive momenta.
    pub fn auto(g: &InitialGaussian, ps: &ParticleSpec, n: usize) -> Result<Self, WavepacketError> {
        let sigma = g.sigma_p(ps);
        let hi = g.p0 + 6.0 * sigma;
        let lo = (g.p0 - 6.0 * sigma).max(1e-9 * hi);
        Self::new(lo, hi, n)
    }

    pub fn dp(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn samples(&self) -> Vec<f64> {
        let dp = self.dp();
        (0..self.n).map(|i| self.lo + dp * i as f64).collect()
    }

    /// Composite Simpson weights (the dp factor is folded in).
    pub fn weights(&self) -> Vec<f64> {
        let dp = self.dp();
        (0..self.n)
            .map(|i| {
                let base = if i == 0 || i == self.n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                base * dp / 3.0
            })
            .collect()
    }
}

/// Momentum-space description of an initial packet: quadrature nodes,
/// weights and per-node coefficients on the positive- and negative-energy
/// branches, globally normalized to unit conserved charge (spin-0) or unit
/// probability (spin-1/2) at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumSpectrum {
    pub equation: EquationKind,
    pub particle: ParticleSpec,
    pub p: Vec<f64>,
    pub weights: Vec<f64>,
    pub energies: Vec<f64>,
    pub c_plus: Vec<Complex64>,
    pub c_minus: Vec<Complex64>,
    /// The global normalization constant that was applied.
    pub norm_constant: f64,
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn gaussian_envelope(g: &InitialGaussian, ps: &ParticleSpec, p: f64) -> Complex64 {
    let dq = p - g.p0;
    let mag = (-(g.d * g.d) * dq * dq / (ps.hbar * ps.hbar)).exp();
    Complex64::from_polar(mag, -dq * g.x0 / ps.hbar)
}

/// Builds the spin-0 spectrum. The branch coefficients are
/// c± = ±(mc² ± E)/E · ĝ(p); with the branch spinors (mc² ± E, mc² ∓ E)
/// this reconstructs (g, 0) at t = 0 exactly, and the conserved charge per
/// node is 2πħ·4mc²E·(|c⁺|² − |c⁻|²).
pub fn kg_spectrum(
    g: &InitialGaussian,
    ps: &ParticleSpec,
    grid: &MomentumGrid,
) -> Result<MomentumSpectrum, WavepacketError> {
    build_spectrum(EquationKind::KleinGordon, g, ps, grid)
}

/// Builds the spin-1/2 spectrum, c± = n±(p)·ĝ(p), normalized to unit total
/// probability 2πħ∫(|c⁺|² + |c⁻|²) dp = 1.
pub fn dirac_spectrum(
    g: &InitialGaussian,
    ps: &ParticleSpec,
    grid: &MomentumGrid,
) -> Result<MomentumSpectrum, WavepacketError> {
    build_spectrum(EquationKind::Dirac, g, ps, grid)
}

fn build_spectrum(
    equation: EquationKind,
    g: &InitialGaussian,
    ps: &ParticleSpec,
    grid: &MomentumGrid,
) -> Result<MomentumSpectrum, WavepacketError> {
    ps.validate()?;
    InitialGaussian::new(g.x0, g.p0, g.d)?;
    let p = grid.samples();
    if let Some(&bad) = p.iter().find(|&&q| q <= 0.0) {
        return Err(WavepacketError::NonPositiveMomentum(bad));
    }
    let weights = grid.weights();
    let energies: Vec<f64> = p.iter().map(|&q| ps.energy(q)).collect();
    let mc2 = ps.rest_energy();

    let mut c_plus = Vec::with_capacity(p.len());
    let mut c_minus = Vec::with_capacity(p.len());
    for (&q, &e) in p.iter().zip(&energies) {
        let env = gaussian_envelope(g, ps, q);
        match equation {
            EquationKind::KleinGordon => {
                c_plus.push(env * ((mc2 + e) / e));
                c_minus.push(env * (-(mc2 - e) / e));
            }
            EquationKind::Dirac => {
                let r = dirac_alphas(ps, 0.0, q)?;
                c_plus.push(env * r.n1_plus);
                c_minus.push(env * r.n1_minus);
            }
        }
    }

    // One global constant makes the t = 0 charge/probability exactly one in
    // the quadrature sense.
    let raw: f64 = p
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let density = c_plus[i].norm_sqr() - branch_sign(equation) * c_minus[i].norm_sqr();
            weights[i] * node_measure(equation, mc2, ps, energies[i]) * density
        })
        .sum();
    let norm_constant = 1.0 / raw.sqrt();
    for c in c_plus.iter_mut().chain(c_minus.iter_mut()) {
        *c *= norm_constant;
    }

    Ok(MomentumSpectrum {
        equation,
        particle: *ps,
        p,
        weights,
        energies,
        c_plus,
        c_minus,
        norm_constant,
    })
}

/// Sign with which the negative branch enters the conserved density:
/// +1 for spin-0 (charge, c⁻ counts negatively), −1 for spin-1/2
/// (probability, both branches count positively).
fn branch_sign(equation: EquationKind) -> f64 {
    match equation {
        EquationKind::KleinGordon => 1.0,
        EquationKind::Dirac => -1.0,
    }
}

/// Per-node measure multiplying |c|² in the conserved integral.
fn node_measure(equation: EquationKind, mc2: f64, ps: &ParticleSpec, e: f64) -> f64 {
    match equation {
        EquationKind::KleinGordon => TWO_PI * ps.hbar * 4.0 * mc2 * e,
        EquationKind::Dirac => TWO_PI * ps.hbar,
    }
}

impl MomentumSpectrum {
    /// The conserved totals carried by each branch (their sum/difference is
    /// one by construction): (positive-branch share, negative-branch share).
    pub fn branch_split(&self) -> (f64, f64) {
        let mc2 = self.particle.rest_energy();
        let mut plus = 0.0;
        let mut minus = 0.0;
        for i in 0..self.p.len() {
            let m = self.weights[i] * node_measure(self.equation, mc2, &self.particle, self.energies[i]);
            plus += m * self.c_plus[i].norm_sqr();
            minus += m * self.c_minus[i].norm_sqr() * (-branch_sign(self.equation));
        }
        (plus, minus)
    }
}

/// Per-node data prepared for the x-sweep: wavenumbers and fused
/// coefficients for the two exponentials of each region and component.
struct PreparedNode {
    /// p1/ħ (outer regions).
    k1: f64,
    /// p2/ħ (inner region), complex in the evanescent regime.
    k2: Complex64,
    /// Coefficients of (e^{+ik1x}, e^{−ik1x}) in region 1, φ component.
    r1_phi: [Complex64; 2],
    r1_chi: [Complex64; 2],
    /// The freely propagating negative-branch term rides on e^{+ik1x}.
    neg_phi: Complex64,
    neg_chi: Complex64,
    /// Coefficients of (e^{+ik2x}, e^{−ik2x}) in region 2.
    r2_phi: [Complex64; 2],
    r2_chi: [Complex64; 2],
    /// Coefficient of e^{+ik1x} in region 3.
    r3_phi: Complex64,
    r3_chi: Complex64,
}

/// Evaluates the spin-0 wavepacket at time `t` on `grid`, given per-node
/// barrier coefficients (one entry of `amps` per spectrum node).
pub fn evaluate_kg(
    barrier: &BarrierSpec,
    spectrum: &MomentumSpectrum,
    amps: &[BarrierAmplitudes],
    t: f64,
    grid: SpatialGrid,
) -> Result<SpinorField, WavepacketError> {
    evaluate(EquationKind::KleinGordon, barrier, spectrum, amps, t, grid)
}

/// Evaluates the spin-1/2 wavepacket at time `t` on `grid`.
pub fn evaluate_dirac(
    barrier: &BarrierSpec,
    spectrum: &MomentumSpectrum,
    amps: &[BarrierAmplitudes],
    t: f64,
    grid: SpatialGrid,
) -> Result<SpinorField, WavepacketError> {
    evaluate(EquationKind::Dirac, barrier, spectrum, amps, t, grid)
}

fn evaluate(
    equation: EquationKind,
    barrier: &BarrierSpec,
    spectrum: &MomentumSpectrum,
    amps: &[BarrierAmplitudes],
    t: f64,
    grid: SpatialGrid,
) -> Result<SpinorField, WavepacketError> {
    if spectrum.equation != equation {
        return Err(WavepacketError::EquationMismatch {
            spectrum: spectrum.equation,
            requested: equation,
        });
    }
    if !matches!(
        barrier.family,
        BarrierFamily::Rectangular | BarrierFamily::SmoothTanh
    ) {
        return Err(WavepacketError::UnsupportedBarrier(barrier.family));
    }
    if amps.len() != spectrum.p.len() {
        return Err(WavepacketError::LengthMismatch {
            amps: amps.len(),
            spectrum: spectrum.p.len(),
        });
    }

    let ps = &spectrum.particle;
    let hbar = ps.hbar;
    let mc2 = ps.rest_energy();
    let nodes: Vec<PreparedNode> = spectrum
        .p
        .iter()
        .enumerate()
        .map(|(i, &p1)| -> Result<PreparedNode, WavepacketError> {
            let kin = classify_regime(ps, barrier.v, p1)?;
            let e = spectrum.energies[i];
            if equation == EquationKind::KleinGordon
                && kin.regime == Regime::KleinZone
                && amps[i].mode == AmplitudeMode::MseResummed
            {
                return Err(WavepacketError::DivergentResummed { p1 });
            }
            let w = spectrum.weights[i];
            let pt = Complex64::from_polar(1.0, -e * t / hbar); // e^{−iEt/ħ}
            let pn = Complex64::from_polar(1.0, e * t / hbar); // e^{+iEt/ħ}
            let cp = spectrum.c_plus[i] * w * pt;
            let cm = spectrum.c_minus[i] * w * pn;
            let a = &amps[i];

            let node = match equation {
                EquationKind::KleinGordon => {
                    let s2 = e - kin.v;
                    let (w1p_phi, w1p_chi) = (mc2 + e, mc2 - e);
                    let (w1m_phi, w1m_chi) = (mc2 - e, mc2 + e);
                    let (w2_phi, w2_chi) = (mc2 + s2, mc2 - s2);
                    PreparedNode {
                        k1: p1 / hbar,
                        k2: kin.p2 / hbar,
                        r1_phi: [cp * w1p_phi, cp * a.b1 * w1p_phi],
                        r1_chi: [cp * w1p_chi, cp * a.b1 * w1p_chi],
                        neg_phi: cm * w1m_phi,
                        neg_chi: cm * w1m_chi,
                        r2_phi: [cp * a.a2 * w2_phi, cp * a.b2 * w2_phi],
                        r2_chi: [cp * a.a2 * w2_chi, cp * a.b2 * w2_chi],
                        r3_phi: cp * a.a3 * w1p_phi,
                        r3_chi: cp * a.a3 * w1p_chi,
                    }
                }
                EquationKind::Dirac => {
                    let r = dirac_alphas(ps, barrier.v, p1)?;
                    let a1 = Complex64::new(r.alpha1_plus, 0.0);
                    let n1 = r.n1_plus;
                    let a2c = r.alpha2_plus;
                    let n2 = r.n2_plus;
                    PreparedNode {
                        k1: p1 / hbar,
                        k2: kin.p2 / hbar,
                        r1_phi: [cp * n1, cp * a.b1 * n1],
                        r1_chi: [cp * n1 * a1, -(cp * a.b1 * n1 * a1)],
                        neg_phi: cm * r.n1_minus,
                        neg_chi: cm * r.n1_minus * r.alpha1_minus,
                        r2_phi: [cp * a.a2 * n2, cp * a.b2 * n2],
                        r2_chi: [cp * a.a2 * n2 * a2c, -(cp * a.b2 * n2 * a2c)],
                        r3_phi: cp * a.a3 * n1,
                        r3_chi: cp * a.a3 * n1 * a1,
                    }
                }
            };
            Ok(node)
        })
        .collect::<Result<_, _>>()?;

    let l = barrier.l;
    let mut phi = vec![Complex64::new(0.0, 0.0); grid.n];
    let mut chi = vec![Complex64::new(0.0, 0.0); grid.n];
    const CHUNK: usize = 256;
    phi.par_chunks_mut(CHUNK)
        .zip(chi.par_chunks_mut(CHUNK))
        .enumerate()
        .for_each(|(ci, (phi_chunk, chi_chunk))| {
            for j in 0..phi_chunk.len() {
                let x = grid.x_at(ci * CHUNK + j);
                let mut fp = Complex64::new(0.0, 0.0);
                let mut fc = Complex64::new(0.0, 0.0);
                if x < 0.0 {
                    for nd in &nodes {
                        let e_plus = Complex64::from_polar(1.0, nd.k1 * x);
                        let e_minus = e_plus.conj();
                        fp += (nd.r1_phi[0] + nd.neg_phi) * e_plus + nd.r1_phi[1] * e_minus;
                        fc += (nd.r1_chi[0] + nd.neg_chi) * e_plus + nd.r1_chi[1] * e_minus;
                    }
                } else if x <= l {
                    for nd in &nodes {
                        let e_plus =
                            Complex64::from_polar((-nd.k2.im * x).exp(), nd.k2.re * x);
                        let e_minus =
                            Complex64::from_polar((nd.k2.im * x).exp(), -nd.k2.re * x);
                        fp += nd.r2_phi[0] * e_plus + nd.r2_phi[1] * e_minus;
                        fc += nd.r2_chi[0] * e_plus + nd.r2_chi[1] * e_minus;
                    }
                } else {
                    for nd in &nodes {
                        let e_plus = Complex64::from_polar(1.0, nd.k1 * x);
                        fp += nd.r3_phi * e_plus;
                        fc += nd.r3_chi * e_plus;
                    }
                }
                phi_chunk[j] = fp;
                chi_chunk[j] = fc;
            }
        });

    Ok(SpinorField {
        equation,
        grid,
        t,
        phi,
        chi,
    })
}

/// The t = 0 state (g(x), 0) sampled on a grid — both equations share it,
/// since the two-branch expansions reconstruct it exactly.
pub fn initial_state(
    equation: EquationKind,
    g: &InitialGaussian,
    ps: &ParticleSpec,
    grid: SpatialGrid,
) -> SpinorField {
    let mut f = SpinorField::zeros(equation, grid, 0.0);
    for i in 0..grid.n {
        f.phi[i] = g.amplitude_at(ps, grid.x_at(i));
    }
    f
}

/// Group velocity inside the barrier, |p2 c²/(E−V)|, when region 2 is
/// propagating; `None` in the evanescent regime.
pub fn region2_group_velocity(ps: &ParticleSpec, v: f64, p0: f64) -> Option<f64> {
    let kin = classify_regime(ps, v, p0).ok()?;
    match kin.regime {
        Regime::Evanescent => None,
        _ => {
            let denom = kin.energy - v;
            if denom == 0.0 {
                None
            } else {
                Some((kin.p2.re * ps.c * ps.c / denom).abs())
            }
        }
    }
}

/// Smallest truncation order n whose omitted reflections could not yet have
/// left the barrier: the (n+1)-th loop needs (n+1)·2L/|v₂| of traversal
/// time. `None` group velocity (evanescent interior) returns the clamp.
pub fn mse_terms_needed(t: f64, l: f64, v2: Option<f64>, clamp: u32) -> u32 {
    let Some(v2) = v2 else { return clamp };
    if !(v2 > 0.0) || !(l > 0.0) || t <= 0.0 {
        return if t <= 0.0 { 0 } else { clamp };
    }
    let loops = (t * v2 / (2.0 * l)).floor();
    if loops >= clamp as f64 {
        clamp
    } else {
        loops as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const SQRT5_HALF: f64 = 1.118033988749895;

    fn natural() -> ParticleSpec {
        ParticleSpec::natural()
    }

    fn fig_gaussian() -> InitialGaussian {
        InitialGaussian::new(-400.0 / 6.0, SQRT5_HALF, 50.0 / 6.0).unwrap()
    }

    #[test]
    fn simpson_weights_integrate_smooth_functions() {
        let grid = MomentumGrid::new(0.2, 1.8, 801).unwrap();
        let total: f64 = grid
            .samples()
            .iter()
            .zip(grid.weights())
            .map(|(&p, w)| w * (p * p))
            .sum();
        // ∫ p² dp on [0.2, 1.8] = (1.8³ − 0.2³)/3.
        assert_relative_eq!(total, (1.8f64.powi(3) - 0.2f64.powi(3)) / 3.0, epsilon = 1e-12);
        assert_eq!(MomentumGrid::new(0.1, 1.0, 10).unwrap().n, 11);
        assert!(MomentumGrid::new(-0.1, 1.0, 11).is_err());
    }

    #[test]
    fn kg_spectrum_is_normalized_and_split_matches_branch_weights() {
        let ps = natural();
        let g = fig_gaussian();
        let grid = MomentumGrid::auto(&g, &ps, 1024).unwrap();
        let sp = kg_spectrum(&g, &ps, &grid).unwrap();
        let (qp, qm) = sp.branch_split();
        assert_relative_eq!(qp + qm, 1.0, epsilon = 1e-12);
        // Narrow packet: the split approaches ±(mc² ± E₀)²/(4mc²E₀) at
        // E₀ = 1.5, i.e. +25/24 and −1/24.
        assert_relative_eq!(qp, 25.0 / 24.0, max_relative = 2e-3);
        assert_relative_eq!(qm, -1.0 / 24.0, max_relative = 2e-2);
    }

    #[test]
    fn kg_branch_coefficients_cancel_second_component() {
        let ps = natural();
        let g = fig_gaussian();
        let grid = MomentumGrid::auto(&g, &ps, 64).unwrap();
        let sp = kg_spectrum(&g, &ps, &grid).unwrap();
        let mc2 = ps.rest_energy();
        for i in 0..sp.p.len() {
            let chi_hat = sp.c_plus[i] * (mc2 - sp.energies[i]) + sp.c_minus[i] * (mc2 + sp.energies[i]);
            assert_abs_diff_eq!(chi_hat.norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn dirac_spectrum_split() {
        let ps = natural();
        let g = fig_gaussian();
        let grid = MomentumGrid::auto(&g, &ps, 1024).unwrap();
        let sp = dirac_spectrum(&g, &ps, &grid).unwrap();
        let (pp, pm) = sp.branch_split();
        assert_relative_eq!(pp + pm, 1.0, epsilon = 1e-12);
        // Narrow packet: n⁻(p₀)² = 1/6 of the probability rides the
        // negative branch at E₀ = 1.5.
        assert_relative_eq!(pm, 1.0 / 6.0, max_relative = 2e-3);
    }

    #[test]
    fn dirac_branch_coefficients_cancel_second_component() {
        let ps = natural();
        for &p in &[0.3, 1.0, SQRT5_HALF, 2.4] {
            let r = dirac_alphas(&ps, 0.0, p).unwrap();
            let residual = r.n1_plus * r.n1_plus * r.alpha1_plus
                + r.n1_minus * r.n1_minus * r.alpha1_minus;
            assert_abs_diff_eq!(residual, 0.0, epsilon = 1e-14);
            let completeness = r.n1_plus * r.n1_plus + r.n1_minus * r.n1_minus;
            assert_relative_eq!(completeness, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn spectrum_rejects_nonpositive_momenta() {
        let ps = natural();
        let g = InitialGaussian::new(-10.0, 0.05, 2.0).unwrap();
        // σ_p = 0.25, so p0 − 6σ < 0: auto must clip to positive momenta.
        let grid = MomentumGrid::auto(&g, &ps, 128).unwrap();
        assert!(grid.lo > 0.0);
        assert!(kg_spectrum(&g, &ps, &grid).is_ok());
    }

    #[test]
    fn initial_state_has_unit_charge_and_peaks_at_x0() {
        let ps = natural();
        let g = fig_gaussian();
        let grid = SpatialGrid::centered(400.0, 4096);
        for eq in [EquationKind::KleinGordon, EquationKind::Dirac] {
            let f = initial_state(eq, &g, &ps, grid);
            let rho = f.charge_density();
            let total: f64 = rho.windows(2).map(|w| 0.5 * (w[0] + w[1]) * grid.dx).sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-12);
            let peak_idx = rho
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_abs_diff_eq!(grid.x_at(peak_idx), g.x0, epsilon = grid.dx);
        }
    }

    #[test]
    fn terms_needed_follows_arrival_times() {
        assert_eq!(mse_terms_needed(0.0, 66.7, Some(0.85), 16), 0);
        // One traversal loop is 2L/v ≈ 156.9: by t = 200 one loop has run.
        assert_eq!(mse_terms_needed(200.0, 66.7, Some(0.85), 16), 1);
        assert_eq!(mse_terms_needed(1000.0, 66.7, Some(0.85), 16), 6);
        // Clamped when the interior is evanescent or times are huge.
        assert_eq!(mse_terms_needed(1e9, 66.7, Some(0.85), 16), 16);
        assert_eq!(mse_terms_needed(50.0, 66.7, None, 16), 16);
    }

    #[test]
    fn group_velocity_in_klein_zone() {
        let ps = natural();
        // E = 1.5, E − V = −1.9, p2 = −√(1.9² − 1): |v2| = |p2|/1.9.
        let v2 = region2_group_velocity(&ps, 3.4, SQRT5_HALF).unwrap();
        assert_relative_eq!(v2, (1.9f64 * 1.9 - 1.0).sqrt() / 1.9, epsilon = 1e-12);
        assert!(region2_group_velocity(&ps, 1.2, 0.4).is_none());
    }
}
