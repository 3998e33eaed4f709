//! One-dimensional relativistic quantum scattering at supercritical potential
//! barriers, for spin-0 (Klein-Gordon in two-component Hamiltonian form) and
//! spin-1/2 (Dirac, reduced to two components) particles.
//!
//! The crate computes barrier dynamics two independent ways so results can be
//! cross-validated:
//!
//! * **Semi-analytic wavepackets** ([`wavepacket`]): Gaussian packets are
//!   expanded over plane waves; each plane wave scatters off the barrier with
//!   coefficients assembled from single-edge amplitudes through a Multiple
//!   Scattering Expansion (MSE) — a geometric series over internal
//!   reflections — or, where it converges, its closed-form resummation
//!   ([`amplitudes`]).
//! * **Finite-difference time evolution** ([`fdtd`]): the wave equations are
//!   integrated directly on a spatial lattice with fourth-order stencils and
//!   a truncated-Taylor evolution operator that is (pseudo-)unitary up to the
//!   truncation order.
//!
//! Supporting layers: relativistic kinematics and regime classification
//! ([`physics`]), complex log-Gamma for the smooth-edge amplitudes
//! ([`gamma`]), and shared field/grid containers ([`field`]).
//!
//! Everything is expressed in the caller's unit system through
//! [`physics::ParticleSpec`]; the defaults are natural units m = c = ħ = 1.

pub mod amplitudes;
pub mod field;
pub mod fdtd;
pub mod gamma;
pub mod physics;
pub mod wavepacket;

pub use field::{EquationKind, RegionCharges, SpatialGrid, SpinorField};
pub use physics::{BarrierFamily, BarrierSpec, Kinematics, ParticleSpec, Regime};
