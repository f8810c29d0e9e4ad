//! Asymptotic-expansion machinery: coefficients beta_k and the flux, the
//! remainder fields F and G, manufactured linearized flows driven by a
//! mollified point force, and log-log decay-slope fits.
//!
//! Coefficient and remainder integrals follow the sphere formulation: the
//! body is replaced by the ball B_S0 enclosing the force support, n(x) =
//! x/S0, and the volume integrals run over the exterior of the sphere
//! (where the manufactured force vanishes identically; the nonlinear terms
//! keep their quadrature hooks for annulus samples).

use crate::error::{KernelError, Result};
use crate::geometry::{omega_cross, wake_weight, Mat3, PhysParams, Point3};
use crate::oseen_tensor::{oseen_e, oseen_pressure};
use crate::quadrature::gauss_legendre;
use crate::stokes_rotating::{z_tensor, TimeQuadratureConfig};
use rayon::prelude::*;

/// One node of a sphere-surface product rule.
#[derive(Debug, Clone, Copy)]
pub struct SphereNode {
    pub point: Point3,
    pub normal: Point3,
    pub weight: f64,
}

/// Product quadrature on a sphere of radius S0: Gauss-Legendre in
/// cos(theta) about the x1-axis, uniform trapezoid in azimuth. Exact for
/// spherical harmonics up to combined order min(2 n_theta - 1, n_phi - 1).
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub radius: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    pub nodes: Vec<SphereNode>,
}

pub fn sphere_quadrature(s0: f64, n_theta: usize, n_phi: usize) -> Result<SphereQuadrature> {
    if !(s0 > 0.0) {
        return Err(KernelError::InvalidParameter(format!(
            "sphere radius must be positive, got {s0}"
        )));
    }
    if n_theta < 4 || n_phi < 8 {
        return Err(KernelError::InvalidParameter(format!(
            "sphere quadrature needs n_theta >= 4 and n_phi >= 8, got ({n_theta}, {n_phi})"
        )));
    }
    let (cos_nodes, cos_weights) = gauss_legendre(n_theta);
    let dphi = std::f64::consts::TAU / n_phi as f64;
    let mut nodes = Vec::with_capacity(n_theta * n_phi);
    for (c, wc) in cos_nodes.iter().zip(&cos_weights) {
        let s = (1.0 - c * c).max(0.0).sqrt();
        for iphi in 0..n_phi {
            let az = dphi * iphi as f64;
            let normal = Point3::new(*c, s * az.cos(), s * az.sin());
            nodes.push(SphereNode {
                point: normal.scale(s0),
                normal,
                weight: wc * dphi * s0 * s0,
            });
        }
    }
    Ok(SphereQuadrature { radius: s0, n_theta, n_phi, nodes })
}

/// Volume quadrature node carrying the force density and, for nonlinear
/// runs, the velocity and its gradient at the node.
#[derive(Debug, Clone, Copy)]
pub struct VolumeNode {
    pub point: Point3,
    pub weight: f64,
    pub force: Point3,
    /// (u, grad u) at the node; required by the convective terms when the
    /// flow is not linearized.
    pub convective: Option<(Point3, Mat3)>,
}

/// Discrete flow data on the coefficient sphere and the force support.
///
/// `velocity_gradient[(l,k)]` stores d_l u_k. `linearized` switches the
/// quadratic terms of the coefficient and remainder formulas off.
#[derive(Debug, Clone)]
pub struct FlowSample {
    pub sphere: SphereQuadrature,
    pub velocity: Vec<Point3>,
    pub velocity_gradient: Vec<Mat3>,
    pub pressure: Vec<f64>,
    pub volume: Vec<VolumeNode>,
    pub linearized: bool,
}

impl FlowSample {
    fn validate(&self) -> Result<()> {
        let n = self.sphere.nodes.len();
        if self.velocity.len() != n || self.velocity_gradient.len() != n || self.pressure.len() != n
        {
            return Err(KernelError::IncompleteSample(format!(
                "surface arrays must match the {n} sphere nodes (got {}, {}, {})",
                self.velocity.len(),
                self.velocity_gradient.len(),
                self.pressure.len()
            )));
        }
        let finite = self.velocity.iter().all(|v| v.is_finite())
            && self.velocity_gradient.iter().all(|g| g.is_finite())
            && self.pressure.iter().all(|p| p.is_finite())
            && self.volume.iter().all(|v| v.point.is_finite() && v.force.is_finite());
        if !finite {
            return Err(KernelError::IncompleteSample("non-finite sample value".into()));
        }
        Ok(())
    }
}

/// Expansion coefficients beta and the boundary flux.
#[derive(Debug, Clone, Copy)]
pub struct ExpansionCoefficients {
    pub beta: [f64; 3],
    pub flux: f64,
}

/// beta_k = int_{exterior} f_k dy
///        + oint sum_l (-d_l u_k + delta_kl pi + (tau e1 - omega x y)_l u_k
///                      - tau u_l u_k) n_l do_y,
/// with the quadratic term dropped for linearized flows, plus the flux
/// oint u.n do.
pub fn beta_coefficients(flow: &FlowSample, p: &PhysParams) -> Result<ExpansionCoefficients> {
    flow.validate()?;
    let s0 = flow.sphere.radius;
    let mut beta = [0.0; 3];
    // exterior force integral: manufactured supports sit inside the
    // sphere, so only nodes outside contribute (normally none)
    for node in &flow.volume {
        if node.point.norm() > s0 {
            for k in 0..3 {
                beta[k] += node.weight * node.force[k];
            }
        }
    }
    let mut flux = 0.0;
    for (i, node) in flow.sphere.nodes.iter().enumerate() {
        let u = flow.velocity[i];
        let g = flow.velocity_gradient[i];
        let pi = flow.pressure[i];
        let n = node.normal;
        flux += node.weight * u.dot(&n);
        let drift = Point3::new(p.tau(), 0.0, 0.0) - omega_cross(&node.point, p);
        for k in 0..3 {
            let mut s = 0.0;
            for l in 0..3 {
                let d = if k == l { 1.0 } else { 0.0 };
                let mut stress = -g.0[l][k] + d * pi + drift[l] * u[k];
                if !flow.linearized {
                    stress -= p.tau() * u[l] * u[k];
                }
                s += stress * n[l];
            }
            beta[k] += node.weight * s;
        }
    }
    Ok(ExpansionCoefficients { beta, flux })
}

fn check_exterior(x: &Point3, s0: f64) -> Result<()> {
    let r = x.norm();
    if r <= s0 {
        return Err(KernelError::PointInsideSphere { radius: r, s0 });
    }
    Ok(())
}

fn remainder_f_inner(
    x: &Point3,
    flow: &FlowSample,
    p: &PhysParams,
    cfg: &TimeQuadratureConfig,
    z0: &Mat3,
) -> Result<Point3> {
    let s0 = flow.sphere.radius;

    // volume terms over the sphere exterior
    let mut vol = [0.0; 3];
    for node in &flow.volume {
        if node.point.norm() <= s0 {
            continue;
        }
        let z = z_tensor(x, &node.point, p, cfg, false, false)?.value;
        for j in 0..3 {
            let mut s = 0.0;
            for k in 0..3 {
                s += (z.0[j][k] - z0.0[j][k]) * node.force[k];
            }
            if !flow.linearized {
                let (u, g) = node.convective.ok_or_else(|| {
                    KernelError::IncompleteSample(
                        "nonlinear volume term needs (u, grad u) at volume nodes".into(),
                    )
                })?;
                for k in 0..3 {
                    let advect: f64 = (0..3).map(|l| u[l] * g.0[l][k]).sum();
                    s -= p.tau() * z.0[j][k] * advect;
                }
            }
            vol[j] += node.weight * s;
        }
    }

    // surface terms, one Z(x, y) with y-gradient per node
    let e4x = oseen_pressure(x)?;
    let per_node: Result<Vec<[f64; 3]>> = flow
        .sphere
        .nodes
        .par_iter()
        .enumerate()
        .map(|(i, node)| -> Result<[f64; 3]> {
            let y = node.point;
            let n = node.normal;
            let u = flow.velocity[i];
            let g = flow.velocity_gradient[i];
            let pi = flow.pressure[i];
            let z = z_tensor(x, &y, p, cfg, false, true)?;
            let zy = z.y_gradient.unwrap();
            let drift = Point3::new(p.tau(), 0.0, 0.0) - omega_cross(&y, p);
            let mut stress = [0.0; 3];
            for k in 0..3 {
                for l in 0..3 {
                    let d = if k == l { 1.0 } else { 0.0 };
                    stress[k] += (-g.0[l][k] + d * pi + drift[l] * u[k]) * n[l];
                }
            }
            let un = u.dot(&n);
            let e4d = oseen_pressure(&(*x - y))?;
            let mut out = [0.0; 3];
            for j in 0..3 {
                let mut s = (e4d[j] - e4x[j]) * un;
                for k in 0..3 {
                    s += (z.value.0[j][k] - z0.0[j][k]) * stress[k];
                    for l in 0..3 {
                        s += zy[l].0[j][k] * u[k] * n[l];
                    }
                }
                if !flow.linearized {
                    for k in 0..3 {
                        for l in 0..3 {
                            s += p.tau() * z0.0[j][k] * u[l] * u[k] * n[l];
                        }
                    }
                }
                out[j] = node.weight * s;
            }
            Ok(out)
        })
        .collect();
    let per_node = per_node?;
    let mut total = Point3(vol);
    for v in per_node {
        total = total + Point3(v);
    }
    Ok(total)
}

/// Remainder field F_j(x) of the expansion around Z(x, 0).
pub fn remainder_f(
    x: &Point3,
    flow: &FlowSample,
    p: &PhysParams,
    cfg: &TimeQuadratureConfig,
) -> Result<Point3> {
    flow.validate()?;
    check_exterior(x, flow.sphere.radius)?;
    let z0 = z_tensor(x, &Point3::ZERO, p, cfg, false, false)?.value;
    remainder_f_inner(x, flow, p, cfg, &z0)
}

/// Remainder field G_j(x) = beta_2 Z_j2(x,0) + beta_3 Z_j3(x,0) + F_j(x)
/// of the expansion around the Oseen tensor column.
pub fn remainder_g(
    x: &Point3,
    flow: &FlowSample,
    p: &PhysParams,
    cfg: &TimeQuadratureConfig,
) -> Result<Point3> {
    flow.validate()?;
    check_exterior(x, flow.sphere.radius)?;
    let coeff = beta_coefficients(flow, p)?;
    let z0 = z_tensor(x, &Point3::ZERO, p, cfg, false, false)?.value;
    let f = remainder_f_inner(x, flow, p, cfg, &z0)?;
    let mut out = f;
    for j in 0..3 {
        out[j] += coeff.beta[1] * z0.0[j][1] + coeff.beta[2] * z0.0[j][2];
    }
    Ok(out)
}

/// Quadrature orders for manufactured flows: sphere surface rule and
/// per-axis Gauss-Legendre order over the mollifier bounding box.
#[derive(Debug, Clone, Copy)]
pub struct FlowOrders {
    pub n_theta: usize,
    pub n_phi: usize,
    pub n_vol: usize,
}

impl Default for FlowOrders {
    fn default() -> Self {
        Self { n_theta: 12, n_phi: 24, n_vol: 12 }
    }
}

/// Velocity induced by the volume force sample: u_j(x) = sum_k int Z_jk(x,y) f_k(y) dy.
pub fn induced_velocity(
    x: &Point3,
    volume: &[VolumeNode],
    p: &PhysParams,
    cfg: &TimeQuadratureConfig,
) -> Result<Point3> {
    let mut u = Point3::ZERO;
    for node in volume {
        if node.force == Point3::ZERO {
            continue;
        }
        let z = z_tensor(x, &node.point, p, cfg, false, false)?.value;
        for j in 0..3 {
            u[j] += node.weight * (0..3).map(|k| z.0[j][k] * node.force[k]).sum::<f64>();
        }
    }
    Ok(u)
}

/// Velocity and gradient in one pass (shared kernel evaluations).
/// Gradient layout: [(l,j)] = d_l u_j.
pub fn induced_velocity_and_gradient(
    x: &Point3,
    volume: &[VolumeNode],
    p: &PhysParams,
    cfg: &TimeQuadratureConfig,
) -> Result<(Point3, Mat3)> {
    let mut u = Point3::ZERO;
    let mut grad = Mat3::ZERO;
    for node in volume {
        if node.force == Point3::ZERO {
            continue;
        }
        let z = z_tensor(x, &node.point, p, cfg, true, false)?;
        let zg = z.x_gradient.unwrap();
        for j in 0..3 {
            let fz: f64 = (0..3).map(|k| z.value.0[j][k] * node.force[k]).sum();
            u[j] += node.weight * fz;
            for l in 0..3 {
                let fg: f64 = (0..3).map(|k| zg[l].0[j][k] * node.force[k]).sum();
                grad.0[l][j] += node.weight * fg;
            }
        }
    }
    Ok((u, grad))
}

/// Pressure of the manufactured flow: pi(x) = sum_k int E_4k(x-y) f_k(y) dy.
pub fn induced_pressure(x: &Point3, volume: &[VolumeNode]) -> Result<f64> {
    let mut pi = 0.0;
    for node in volume {
        if node.force == Point3::ZERO {
            continue;
        }
        let e4 = oseen_pressure(&(*x - node.point))?;
        pi += node.weight * e4.dot(&node.force);
    }
    Ok(pi)
}

/// Manufactured linearized flow: a mollified point force
/// f = c eta_eps(. - y0) strictly inside the coefficient sphere, with
/// u = Z * f, grad u = dZ * f and pi = E4 * f sampled on the sphere.
pub fn manufactured_flow(
    y0: &Point3,
    c: &Point3,
    eps: f64,
    s0: f64,
    p: &PhysParams,
    cfg: &TimeQuadratureConfig,
    orders: &FlowOrders,
) -> Result<FlowSample> {
    if !(eps > 0.0) {
        return Err(KernelError::InvalidParameter(format!(
            "mollifier radius must be positive, got {eps}"
        )));
    }
    let lhs = y0.norm() + eps;
    if lhs >= s0 {
        return Err(KernelError::SupportViolation { lhs, s0 });
    }

    // volume grid over the bounding box of the eps-ball, bump normalized
    // by its own quadrature so the discrete force integrates to c exactly
    let (gl_nodes, gl_weights) = gauss_legendre(orders.n_vol);
    let mut points = Vec::with_capacity(orders.n_vol.pow(3));
    for (i1, w1) in gl_weights.iter().enumerate() {
        for (i2, w2) in gl_weights.iter().enumerate() {
            for (i3, w3) in gl_weights.iter().enumerate() {
                let y = Point3::new(
                    y0.x1() + eps * gl_nodes[i1],
                    y0.x2() + eps * gl_nodes[i2],
                    y0.x3() + eps * gl_nodes[i3],
                );
                let w = w1 * w2 * w3 * eps * eps * eps;
                let rho2 = (y - *y0).norm_sq() / (eps * eps);
                let eta = if rho2 < 1.0 { (-1.0 / (1.0 - rho2)).exp() } else { 0.0 };
                points.push((y, w, eta));
            }
        }
    }
    let mass: f64 = points.iter().map(|(_, w, eta)| w * eta).sum();
    let volume: Vec<VolumeNode> = points
        .into_iter()
        .map(|(y, w, eta)| VolumeNode {
            point: y,
            weight: w,
            force: c.scale(eta / mass),
            convective: None,
        })
        .collect();

    let sphere = sphere_quadrature(s0, orders.n_theta, orders.n_phi)?;
    let fields: Result<Vec<(Point3, Mat3, f64)>> = sphere
        .nodes
        .par_iter()
        .map(|node| {
            let (u, g) = induced_velocity_and_gradient(&node.point, &volume, p, cfg)?;
            let pi = induced_pressure(&node.point, &volume)?;
            Ok((u, g, pi))
        })
        .collect();
    let fields = fields?;
    let mut velocity = Vec::with_capacity(fields.len());
    let mut velocity_gradient = Vec::with_capacity(fields.len());
    let mut pressure = Vec::with_capacity(fields.len());
    for (u, g, pi) in fields {
        velocity.push(u);
        velocity_gradient.push(g);
        pressure.push(pi);
    }
    Ok(FlowSample { sphere, velocity, velocity_gradient, pressure, volume, linearized: true })
}

/// Abscissa of a decay fit: log(|x| s(x)) or plain log |x|.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbscissaKind {
    WakeWeighted,
    Radial,
}

/// Least-squares line of log(value) against the chosen abscissa.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub abscissa: AbscissaKind,
}

pub fn decay_fit(samples: &[(Point3, f64)], abscissa: AbscissaKind) -> Result<DecayFit> {
    if samples.len() < 4 {
        return Err(KernelError::InvalidParameter(format!(
            "decay fit needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    let mut pts = Vec::with_capacity(samples.len());
    for (x, v) in samples {
        if !(*v > 0.0) {
            return Err(KernelError::NonpositiveValue(*v));
        }
        let t = match abscissa {
            AbscissaKind::WakeWeighted => (x.norm() * wake_weight(x)).ln(),
            AbscissaKind::Radial => x.norm().ln(),
        };
        pts.push((t, v.ln()));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(KernelError::InvalidParameter(
            "decay fit abscissae are degenerate".into(),
        ));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let max_residual = pts
        .iter()
        .map(|(t, y)| (y - intercept - slope * t).abs())
        .fold(0.0f64, f64::max);
    Ok(DecayFit { slope, intercept, max_residual, abscissa })
}

/// Closure of the far-field profile at one point: velocity against
/// beta_1 E_.1(x) + flux x/(4 pi |x|^3) + G(x).
#[derive(Debug, Clone, Copy)]
pub struct ClosureReport {
    pub velocity: Point3,
    pub leading: Point3,
    pub flux_term: Point3,
    pub remainder: Point3,
    pub rel_err: f64,
}

pub fn expansion_closure(
    x: &Point3,
    flow: &FlowSample,
    p: &PhysParams,
    cfg: &TimeQuadratureConfig,
) -> Result<ClosureReport> {
    flow.validate()?;
    check_exterior(x, flow.sphere.radius)?;
    let coeff = beta_coefficients(flow, p)?;
    let velocity = induced_velocity(x, &flow.volume, p, cfg)?;
    let e = oseen_e(x, p, false)?;
    let leading = e.velocity.column(0).scale(coeff.beta[0]);
    let flux_term = oseen_pressure(x)?.scale(coeff.flux);
    let remainder = remainder_g(x, flow, p, cfg)?;
    let recon = leading + flux_term + remainder;
    let err = (velocity - recon).norm();
    let rel_err = err / velocity.norm().max(f64::MIN_POSITIVE);
    Ok(ClosureReport { velocity, leading, flux_term, remainder, rel_err })
}
