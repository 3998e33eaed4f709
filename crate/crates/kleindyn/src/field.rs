//! Two-component fields on uniform spatial grids, charge densities and
//! region-integrated charges — shared by the semi-analytic and
//! finite-difference pipelines.

use num_complex::Complex64;

use crate::physics::BarrierSpec;

/// Which wave equation a field belongs to. Decides the density formula and
/// how the components couple during evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationKind {
    KleinGordon,
    Dirac,
}

impl EquationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EquationKind::KleinGordon => "klein-gordon",
            EquationKind::Dirac => "dirac",
        }
    }
}

/// A uniform spatial grid: `n` points x_i = x_start + i·dx.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub x_start: f64,
    pub dx: f64,
    pub n: usize,
}

impl SpatialGrid {
    /// A grid of `n` points spanning a domain of length `l` centered at 0,
    /// x_i = −l/2 + i·δx with δx = l/n.
    pub fn centered(l: f64, n: usize) -> Self {
        let dx = l / n as f64;
        Self { x_start: -0.5 * l, dx, n }
    }

    pub fn x_at(&self, i: usize) -> f64 {
        self.x_start + self.dx * i as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x_at(i)).collect()
    }

    /// Index of the first point with x_i ≥ x (or `n` when none).
    pub fn first_index_at_or_after(&self, x: f64) -> usize {
        if self.dx <= 0.0 {
            return 0;
        }
        let raw = ((x - self.x_start) / self.dx).ceil();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.n)
        }
    }
}

/// A two-component complex field (φ, χ) sampled on a uniform grid at time t.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub equation: EquationKind,
    pub grid: SpatialGrid,
    pub t: f64,
    pub phi: Vec<Complex64>,
    pub chi: Vec<Complex64>,
}

impl SpinorField {
    /// An all-zero field.
    pub fn zeros(equation: EquationKind, grid: SpatialGrid, t: f64) -> Self {
        Self {
            equation,
            grid,
            t,
            phi: vec![Complex64::new(0.0, 0.0); grid.n],
            chi: vec![Complex64::new(0.0, 0.0); grid.n],
        }
    }

    /// Local charge density: |φ|² − |χ|² for Klein-Gordon (indefinite sign —
    /// this is a conserved charge, not a probability), |φ|² + |χ|² for Dirac.
    pub fn charge_density(&self) -> Vec<f64> {
        let sign = match self.equation {
            EquationKind::KleinGordon => -1.0,
            EquationKind::Dirac => 1.0,
        };
        self.phi
            .iter()
            .zip(&self.chi)
            .map(|(p, x)| p.norm_sqr() + sign * x.norm_sqr())
            .collect()
    }

    /// Largest |ρ| on the grid.
    pub fn density_peak(&self) -> f64 {
        self.charge_density().iter().fold(0.0f64, |m, &r| m.max(r.abs()))
    }

    /// Integrates ρ over the three barrier regions (x < 0, 0 ≤ x ≤ L, x > L)
    /// by the trapezoidal rule; each grid subinterval is assigned to the
    /// region containing its midpoint, so the three integrals sum to the
    /// whole-domain trapezoidal integral exactly.
    pub fn region_charges(&self, barrier: &BarrierSpec) -> RegionCharges {
        let rho = self.charge_density();
        let dx = self.grid.dx;
        let l = barrier.l;
        let mut q = [0.0f64; 3];
        for i in 0..self.grid.n.saturating_sub(1) {
            let mid = self.grid.x_at(i) + 0.5 * dx;
            let region = if mid < 0.0 {
                0
            } else if mid <= l {
                1
            } else {
                2
            };
            q[region] += 0.5 * (rho[i] + rho[i + 1]) * dx;
        }
        // Support check: density at the domain edges should be negligible
        // compared to the peak, otherwise charge is leaking past the grid.
        let peak = rho.iter().fold(0.0f64, |m, &r| m.max(r.abs()));
        let edge = rho.first().map(|r| r.abs()).unwrap_or(0.0).max(rho.last().map(|r| r.abs()).unwrap_or(0.0));
        let boundary_support_ok = peak == 0.0 || edge <= 1e-10 * peak;
        RegionCharges { q1: q[0], q2: q[1], q3: q[2], qtotal: q[0] + q[1] + q[2], boundary_support_ok }
    }
}

/// Charges integrated over the regions left of, inside and right of the
/// barrier. `qtotal` is their sum by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCharges {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub qtotal: f64,
    /// False when the density at the domain edges exceeds 1e-10 of the peak
    /// (the region integrals are then missing support).
    pub boundary_support_ok: bool,
}
