//! Fundamental solutions of the Oseen and rotating-Oseen systems in an
//! exterior domain, the asymptotic-expansion coefficients and remainder
//! fields of the far-field profile, and numerical verification of the
//! kernel identities, Fourier symbols and decay rates at desk scale.
//!
//! The library is organised around the kernels themselves:
//!
//! - [`geometry`]: points, rotation about the stream axis, the wake weight.
//! - [`scalar_kernels`]: N, the scalar Oseen kernel and resolvent, the heat
//!   kernel, psi/Phi, and the heat-Newton convolution.
//! - [`oseen_tensor`]: the Oseen fundamental solution (velocity + pressure).
//! - [`stokes_rotating`]: the time-dependent Stokes tensor, the rotating
//!   frame kernel, and the steady kernel Z with its singular/oscillatory
//!   time quadrature.
//! - [`fourier`]: closed-form symbols and distributional pairing checks.
//! - [`expansion`]: sphere/volume quadratures, expansion coefficients,
//!   remainder fields, manufactured flows, decay fits.
//! - [`verify`]: the named verification suites driven by the CLI and the
//!   acceptance tests.

pub mod error;
pub mod expansion;
pub mod fourier;
pub mod geometry;
pub mod oseen_tensor;
pub mod quadrature;
pub mod scalar_kernels;
pub mod stokes_rotating;
pub mod verify;

pub use error::{KernelError, Result};
pub use geometry::{Mat3, MultiIndex, PhysParams, Point3};
