//! Closed-form Fourier symbols of the kernels and distributional pairing
//! checks int G phi-hat dx = int symbol phi dxi against a Gaussian test
//! family.
//!
//! Convention, fixed crate-wide: g-hat(xi) = (2 pi)^{-3/2} int e^{-i xi.x} g(x) dx.
//! Every symbol formula depends on it.

use crate::error::{KernelError, Result};
use crate::geometry::{PhysParams, Point3};
use crate::quadrature::{adaptive_panels, integrate_scalar, sphere_product_rule};
use num_complex::Complex64;

const TWO_PI: f64 = std::f64::consts::TAU;

/// Which kernel's symbol to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolKind {
    Newton,
    Oseen,
    Resolvent(f64),
    Heat(f64),
    Stokes(f64),
    GammaCol1(f64),
    ZCol1,
    OseenTensor,
}

/// Closed-form symbol value at xi. Indices j, k are 0-based and only read
/// by the tensor kinds.
pub fn symbol(kind: SymbolKind, xi: &Point3, j: usize, k: usize, p: &PhysParams) -> Result<Complex64> {
    let norm = (TWO_PI).powf(-1.5);
    let q = xi.norm_sq();
    let tau = p.tau();
    let osc = Complex64::new(q, tau * xi.x1()); // |xi|^2 + i tau xi_1
    let singular = q == 0.0;
    let proj = |j: usize, k: usize| -> f64 {
        let d = if j == k { 1.0 } else { 0.0 };
        d - xi[j] * xi[k] / q
    };
    match kind {
        SymbolKind::Newton => {
            if singular {
                return Err(KernelError::SingularFrequency);
            }
            Ok(Complex64::new(norm / q, 0.0))
        }
        SymbolKind::Oseen => {
            if singular {
                return Err(KernelError::SingularFrequency);
            }
            Ok(norm / osc)
        }
        SymbolKind::Resolvent(lambda) => {
            if !(lambda > 0.0) {
                return Err(KernelError::InvalidParameter(format!(
                    "resolvent symbol needs lambda > 0, got {lambda}"
                )));
            }
            Ok(norm / (osc + lambda))
        }
        SymbolKind::Heat(t) => {
            check_time(t)?;
            Ok(Complex64::new(norm * (-t * q).exp(), 0.0))
        }
        SymbolKind::Stokes(t) => {
            check_time(t)?;
            if singular {
                return Err(KernelError::SingularFrequency);
            }
            Ok(Complex64::new(norm * proj(j, k) * (-t * q).exp(), 0.0))
        }
        SymbolKind::GammaCol1(t) => {
            check_time(t)?;
            if singular {
                return Err(KernelError::SingularFrequency);
            }
            let phase = Complex64::new(-t * q, -t * tau * xi.x1());
            Ok(norm * proj(j, 0) * phase.exp())
        }
        SymbolKind::ZCol1 => {
            if singular {
                return Err(KernelError::SingularFrequency);
            }
            Ok(norm * proj(j, 0) / osc)
        }
        SymbolKind::OseenTensor => {
            if singular {
                return Err(KernelError::SingularFrequency);
            }
            Ok(norm * proj(j, k) / osc)
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(KernelError::InvalidParameter(format!(
            "symbol needs t > 0, got {t}"
        )));
    }
    Ok(())
}

/// Frequency-space Gaussian test function phi(xi) = exp(-a |xi - b|^2).
#[derive(Debug, Clone, Copy)]
pub struct GaussianTestFn {
    pub a: f64,
    pub b: Point3,
}

impl GaussianTestFn {
    pub fn new(a: f64, b: Point3) -> Result<Self> {
        if !(a > 0.0) {
            return Err(KernelError::InvalidParameter(format!(
                "Gaussian width must be positive, got {a}"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn eval(&self, xi: &Point3) -> f64 {
        (-self.a * (*xi - self.b).norm_sq()).exp()
    }
}

/// Analytic transform of the Gaussian family under the crate convention:
/// phi-hat(x) = (2a)^{-3/2} exp(-|x|^2/(4a)) exp(-i b.x).
pub fn gaussian_fourier(phi: &GaussianTestFn, x: &Point3) -> Complex64 {
    let amp = (2.0 * phi.a).powf(-1.5) * (-x.norm_sq() / (4.0 * phi.a)).exp();
    let phase = -phi.b.dot(x);
    Complex64::new(amp * phase.cos(), amp * phase.sin())
}

/// Distributional pairing result.
#[derive(Debug, Clone, Copy)]
pub struct PairingReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_err: f64,
    pub rel_err: f64,
}

/// Quadrature orders and tolerances for the pairing integrals.
#[derive(Debug, Clone, Copy)]
pub struct PairingQuadSpec {
    pub n_theta: usize,
    pub n_phi: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for PairingQuadSpec {
    fn default() -> Self {
        Self { n_theta: 20, n_phi: 40, rel_tol: 1e-8, abs_tol: 1e-12, max_subdivisions: 60 }
    }
}

/// Both sides of the pairing int G(x) phi-hat(x) dx = int symbol(xi) phi(xi) dxi.
///
/// Each side is integrated in spherical shells about its own singular
/// point (the kernel singularity at x = 0, the |xi|^{-2} symbol pole at
/// xi = 0); the r^2 Jacobian cancels singularities up to |.|^{-2}, and the
/// Gaussian factor truncates the radial range explicitly.
pub fn pairing_check<G>(
    kernel: G,
    kind: SymbolKind,
    j: usize,
    k: usize,
    phi: &GaussianTestFn,
    p: &PhysParams,
    quad: &PairingQuadSpec,
) -> Result<PairingReport>
where
    G: Fn(&Point3) -> f64,
{
    let sphere = sphere_product_rule(quad.n_theta, quad.n_phi);

    // real-space side against the transform of the test function
    let lhs_radial = |r: f64| -> [f64; 2] {
        if r <= 0.0 {
            return [0.0, 0.0];
        }
        let mut acc = Complex64::ZERO;
        for (dir, w) in &sphere {
            let x = Point3::new(r * dir[0], r * dir[1], r * dir[2]);
            acc += gaussian_fourier(phi, &x) * (*w * kernel(&x));
        }
        [r * r * acc.re, r * r * acc.im]
    };
    let r_max = (4.0 * phi.a * 46.0).sqrt();
    let lhs = integrate_complex(&lhs_radial, r_max, quad)?;

    // Frequency-space side against the symbol. The Oseen-type factor
    // (i tau xi_1 + |xi|^2)^{-1} concentrates in a polar layer of width
    // ~ r/tau about the xi_1 = 0 plane as r -> 0, so the polar integral is
    // adaptive with layer-scaled pre-splits; the azimuthal structure is
    // smooth and a trapezoid handles it.
    let dphi = TWO_PI / quad.n_phi as f64;
    let rhs_radial = |r: f64| -> [f64; 2] {
        if r <= 0.0 {
            return [0.0, 0.0];
        }
        let polar = |c: f64| -> [f64; 2] {
            let s = (1.0 - c * c).max(0.0).sqrt();
            let mut acc = Complex64::ZERO;
            for iphi in 0..quad.n_phi {
                let az = dphi * iphi as f64;
                let xi = Point3::new(r * c, r * s * az.cos(), r * s * az.sin());
                let sv = symbol(kind, &xi, j, k, p).expect("xi != 0 on shell");
                acc += sv * phi.eval(&xi);
            }
            [acc.re * dphi, acc.im * dphi]
        };
        let mut edges = vec![-1.0, 0.0, 1.0];
        let layer = (r / p.tau()).min(0.25);
        let mut w = layer;
        while w < 1.0 {
            edges.push(w);
            edges.push(-w);
            w *= 4.0;
        }
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let inner = adaptive_panels(
            &polar,
            &edges,
            quad.abs_tol / (1.0 + r * r),
            0.3 * quad.rel_tol,
            quad.max_subdivisions,
        );
        [r * r * inner.value[0], r * r * inner.value[1]]
    };
    let xi_max = phi.b.norm() + (46.0 / phi.a).sqrt();
    let rhs = integrate_complex(&rhs_radial, xi_max, quad)?;

    let abs_err = (lhs - rhs).norm();
    let rel_err = abs_err / lhs.norm().max(rhs.norm()).max(f64::MIN_POSITIVE);
    Ok(PairingReport { lhs, rhs, abs_err, rel_err })
}

fn integrate_complex<F>(f: &F, r_max: f64, quad: &PairingQuadSpec) -> Result<Complex64>
where
    F: Fn(f64) -> [f64; 2],
{
    let mut edges = vec![0.0, 0.25, 0.5, 1.0];
    let mut r = 2.0;
    while r < r_max {
        edges.push(r);
        r += 1.5;
    }
    edges.push(r_max);
    edges.retain(|e| *e <= r_max);
    edges.dedup();
    let out = adaptive_panels(f, &edges, quad.abs_tol, quad.rel_tol, quad.max_subdivisions);
    if !out.converged {
        let scale = out.value[0].abs().max(out.value[1].abs());
        let tolerance = quad.abs_tol.max(quad.rel_tol * scale);
        if out.error > 100.0 * tolerance {
            return Err(KernelError::NonConvergence { estimate: out.error, tolerance });
        }
    }
    Ok(Complex64::new(out.value[0], out.value[1]))
}

/// Quadrature check of Parseval for the Gaussian family:
/// int |phi|^2 dxi and int |phi-hat|^2 dx, both as radial integrals.
pub fn parseval_pair(phi: &GaussianTestFn) -> Result<(f64, f64)> {
    let a = phi.a;
    let freq = integrate_scalar(
        |r: f64| 2.0 * TWO_PI * r * r * (-2.0 * a * r * r).exp(),
        0.0,
        (24.0 / a).sqrt(),
        1e-12,
        1e-12,
    )?
    .0;
    let amp2 = (2.0 * a).powf(-3.0);
    let space = integrate_scalar(
        |r: f64| 2.0 * TWO_PI * r * r * amp2 * (-r * r / (2.0 * a)).exp(),
        0.0,
        (48.0 * a).sqrt(),
        1e-12,
        1e-12,
    )?
    .0;
    Ok((freq, space))
}
