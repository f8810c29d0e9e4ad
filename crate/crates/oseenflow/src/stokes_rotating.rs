//! Solonnikov's time-dependent Stokes tensor T, the rotating-frame kernel
//! Gamma(x,y,t) = T(x - tau t e1 - e^{-t Omega} y, t) e^{-t Omega}, and the
//! steady kernel Z(x,y) = int_0^inf Gamma dt with its x- and y-gradients.
//!
//! The time integral has three regimes: a near field on (0, t0] handled
//! with the substitution t = u^2, an oscillatory mid range integrated in
//! half-period panels combined into full-period blocks, and a far tail
//! where the envelope decays like t^-3. The tail is summed block by block
//! until the block sequence follows a clean inverse-power law, then closed
//! with a fitted t^{-q} expansion evaluated through Hurwitz zeta sums. The
//! non-oscillatory first column at y = 0 instead uses geometric panels up
//! to an explicit cutoff with an analytic envelope bound on the rest.

use crate::error::{KernelError, Result};
use crate::geometry::{rotation_matrix, Mat3, MultiIndex, PhysParams, Point3};
use crate::quadrature::{adaptive_panels, gk15, hurwitz_zeta, solve_dense};
use crate::scalar_kernels::{heat_newton_jet, FOUR_PI};

/// Controls for the time quadrature behind Z.
///
/// The split point between the substituted near field and the periodic
/// blocks is t0 = max(1, |x-y|^2). `max_subdivisions` is a per-panel
/// budget: pre-split panel lists (oscillation half-periods, singularity
/// scales) multiply it.
#[derive(Debug, Clone, Copy)]
pub struct TimeQuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub tail_safety: f64,
}

impl Default for TimeQuadratureConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 1e-12, max_subdivisions: 60, tail_safety: 10.0 }
    }
}

impl TimeQuadratureConfig {
    /// A loosened config for bulk kernel sums (flow construction), where
    /// per-evaluation accuracy far beyond the target tolerance is wasted.
    pub fn loosened(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    /// Near-field/tail split point t0 = max(1, |x-y|^2).
    pub fn split_point(&self, x: &Point3, y: &Point3) -> f64 {
        (*x - *y).norm_sq().max(1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(KernelError::InvalidParameter(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions < 10 {
            return Err(KernelError::InvalidParameter(
                "max_subdivisions must be at least 10".into(),
            ));
        }
        if !(self.tail_safety >= 1.0) {
            return Err(KernelError::InvalidParameter(
                "tail_safety must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Z value with optional gradients and the aggregated error estimate
/// (adaptive panel estimates plus the tail fit/bound residual). The
/// estimate tracks the guaranteed order of the quadrature; it is not a
/// rigorous bound.
#[derive(Debug, Clone, Copy)]
pub struct KernelMatrixValue {
    pub value: Mat3,
    /// x_gradient[l][(j,k)] = d/dx_l Z_jk
    pub x_gradient: Option<[Mat3; 3]>,
    /// y_gradient[m][(j,k)] = d/dy_m Z_jk
    pub y_gradient: Option<[Mat3; 3]>,
    pub estimated_error: f64,
}

const COINCIDENCE_EPS: f64 = 1e-12;
// Envelope constants for the analytic tail bounds of the smooth column-1
// path: |T| <= C_T (|x|^2+t)^{-3/2}, |grad T| <= C_G (|x|^2+t)^{-2}.
const C_T: f64 = 2.0;
const C_G: f64 = 4.0;

/// T value and spatial gradient at one (x, t).
#[derive(Debug, Clone, Copy)]
pub struct StokesJet {
    pub value: Mat3,
    pub grad: Option<[Mat3; 3]>,
}

/// T_jk(x,t) = delta_jk K(x,t) + d_j d_k (N * K(.,t))(x) and, on request,
/// its spatial gradient from the third derivatives of the convolution.
pub fn stokes_t_jet(x: &Point3, t: f64, want_grad: bool) -> Result<StokesJet> {
    if !(t > 0.0) {
        return Err(KernelError::InvalidParameter(format!(
            "Stokes tensor needs t > 0, got {t}"
        )));
    }
    let hn = heat_newton_jet(x, t)?;
    let q = x.norm_sq() / (4.0 * t);
    let tp = FOUR_PI * t;
    let k = if q > 745.0 { 0.0 } else { (-q).exp() / (tp * tp.sqrt()) };
    let mut value = Mat3::ZERO;
    for j in 0..3 {
        for kk in 0..3 {
            let d = if j == kk { 1.0 } else { 0.0 };
            value.0[j][kk] = d * k + hn.hess[j][kk];
        }
    }
    let grad = if want_grad {
        let mut g = [Mat3::ZERO; 3];
        for (l, gl) in g.iter_mut().enumerate() {
            let kg = -k * x[l] / (2.0 * t);
            for j in 0..3 {
                for kk in 0..3 {
                    let d = if j == kk { 1.0 } else { 0.0 };
                    gl.0[j][kk] = d * kg + hn.third[l][j][kk];
                }
            }
        }
        Some(g)
    } else {
        None
    };
    Ok(StokesJet { value, grad })
}

/// d_t^l d_x^alpha T with alpha.order + l <= 1.
///
/// The time derivative uses d_t (N*K) = -K, so
/// d_t T_jk = delta_jk d_t K - d_j d_k K.
pub fn stokes_t(x: &Point3, t: f64, alpha: MultiIndex, l: u8) -> Result<Mat3> {
    if alpha.order() as u32 + l as u32 > 1 {
        return Err(KernelError::InvalidParameter(
            "stokes_t supports value plus one derivative (|alpha| + l <= 1)".into(),
        ));
    }
    if l == 1 {
        if !(t > 0.0) {
            return Err(KernelError::InvalidParameter(format!(
                "Stokes tensor needs t > 0, got {t}"
            )));
        }
        let q = x.norm_sq() / (4.0 * t);
        let tp = FOUR_PI * t;
        let k = if q > 745.0 { 0.0 } else { (-q).exp() / (tp * tp.sqrt()) };
        let kt = k * (q / t - 1.5 / t);
        let mut out = Mat3::ZERO;
        for j in 0..3 {
            for kk in 0..3 {
                let d = if j == kk { 1.0 } else { 0.0 };
                let hess_k = k * ((x[j] * x[kk]) / (4.0 * t * t) - d / (2.0 * t));
                out.0[j][kk] = d * kt - hess_k;
            }
        }
        return Ok(out);
    }
    let jet = stokes_t_jet(x, t, alpha.order() == 1)?;
    match alpha.axes().as_slice() {
        [] => Ok(jet.value),
        [ax] => Ok(jet.grad.unwrap()[*ax]),
        _ => unreachable!(),
    }
}

/// Gamma_jk(x,y,t) and its x-derivatives (alpha.order <= 1): T evaluated at
/// the drifted-rotated argument, right-multiplied by the rotation.
pub fn gamma(x: &Point3, y: &Point3, t: f64, p: &PhysParams, alpha: MultiIndex) -> Result<Mat3> {
    if alpha.order() > 1 {
        return Err(KernelError::InvalidParameter(
            "gamma supports x-derivatives of order <= 1".into(),
        ));
    }
    let rot = rotation_matrix(-t, p);
    let w = *x - Point3::new(p.tau() * t, 0.0, 0.0) - rot.mat_vec(y);
    let jet = stokes_t_jet(&w, t, alpha.order() == 1)?;
    match alpha.axes().as_slice() {
        [] => Ok(jet.value.mat_mul(&rot)),
        [ax] => Ok(jet.grad.unwrap()[*ax].mat_mul(&rot)),
        _ => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// Z integration machinery

/// Running block store with an inverse-power tail fit.
///
/// Blocks are full rotation periods, so their values at integer indices
/// carry a fixed oscillation phase and settle onto a smooth expansion
/// sum_q c_q t^{-q} once the drift dominates. Four samples determine the
/// coefficients; the remainder past the last summed block is a Hurwitz
/// zeta sum. The difference against a three-term fit is the (doubled)
/// tail error estimate.
struct BlockTail<const N: usize> {
    t0: f64,
    period: f64,
    q0: u32,
    blocks: Vec<[f64; N]>,
}

impl<const N: usize> BlockTail<N> {
    fn new(t0: f64, period: f64, q0: u32) -> Self {
        Self { t0, period, q0, blocks: Vec::new() }
    }

    fn t_center(&self, m: usize) -> f64 {
        self.t0 + (m as f64 + 0.5) * self.period
    }

    fn try_fit(&self, t_sat: f64) -> Option<([f64; N], f64)> {
        let n = self.blocks.len();
        if n < 12 {
            return None;
        }
        let w0 = n - 10;
        if self.t_center(w0) < t_sat {
            return None;
        }
        let a_h = self.t0 / self.period + n as f64 + 0.5;
        let r4 = self.fit_remainder(&[w0, w0 + 3, w0 + 6, w0 + 9], a_h)?;
        let r3 = self.fit_remainder(&[w0, w0 + 5, w0 + 9], a_h)?;
        let mut err = 0.0f64;
        for i in 0..N {
            err = err.max((r4[i] - r3[i]).abs());
        }
        Some((r4, err))
    }

    fn fit_remainder(&self, idx: &[usize], a_h: f64) -> Option<[f64; N]> {
        let nq = idx.len();
        let t_ref = self.t_center(idx[nq - 1]);
        let mut zf = vec![0.0; nq];
        for (c, z) in zf.iter_mut().enumerate() {
            let q = self.q0 + c as u32;
            *z = (t_ref / self.period).powi(q as i32) * hurwitz_zeta(q, a_h);
        }
        let mut rem = [0.0; N];
        for i in 0..N {
            let mut a: Vec<Vec<f64>> = idx
                .iter()
                .map(|&m| {
                    let ratio = t_ref / self.t_center(m);
                    (0..nq).map(|c| ratio.powi((self.q0 + c as u32) as i32)).collect()
                })
                .collect();
            let mut b: Vec<f64> = idx.iter().map(|&m| self.blocks[m][i]).collect();
            let coeff = solve_dense(&mut a, &mut b)?;
            rem[i] = coeff.iter().zip(&zf).map(|(c, z)| c * z).sum();
        }
        Some(rem)
    }
}

/// Time past which the integrand is pure drift: heat-kernel and erf
/// corrections negligible, envelope on a clean inverse-power expansion.
/// Requires (tau t - A)^2 >= 72 t with A = |x| + |y|, plus a margin.
fn saturation_time(a: f64, tau: f64) -> f64 {
    let b = 2.0 * a * tau + 72.0;
    let disc = (b * b - 4.0 * tau * tau * a * a).max(0.0).sqrt();
    ((b + disc) / (2.0 * tau * tau)).max(2.5 * a / tau + 15.0)
}

/// Edges in u = sqrt(t) for the near field (0, t0]: oscillation phase
/// steps of half a period, separation scales when x and y are close, and
/// the wake passage t = (x1-y1)/tau when it falls inside.
fn near_edges(t0: f64, half_period: f64, d: f64, t_peak: f64) -> Vec<f64> {
    let u_max = t0.sqrt();
    let mut edges = vec![0.0, u_max];
    if half_period.is_finite() {
        let mut k = 1usize;
        while (k as f64) * half_period < t0 && k < 200_000 {
            edges.push(((k as f64) * half_period).sqrt());
            k += 1;
        }
    }
    if d < 1.0 {
        let mut s = 0.25 * d;
        while s < u_max {
            edges.push(s);
            s *= 2.0;
        }
    }
    if t_peak > 0.0 && t_peak < t0 {
        for f in [0.5, 1.0, 1.5] {
            let u = (f * t_peak).sqrt();
            if u < u_max {
                edges.push(u);
            }
        }
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * u_max.max(1.0));
    edges
}

/// Shared near-field + periodic-block + fitted-tail driver. Returns the
/// integral over (0, inf) and the aggregated error estimate.
fn z_integrate<const N: usize, F>(
    pack: &F,
    t0: f64,
    period: f64,
    t_sat: f64,
    t_peak: f64,
    d: f64,
    cfg: &TimeQuadratureConfig,
    q0: u32,
) -> Result<([f64; N], f64)>
where
    F: Fn(f64) -> [f64; N],
{
    // near field, t = u^2
    let near_f = |u: f64| {
        if u <= 0.0 {
            return [0.0; N];
        }
        let mut v = pack(u * u);
        for vi in v.iter_mut() {
            *vi *= 2.0 * u;
        }
        v
    };
    let edges = near_edges(t0, 0.5 * period, d, t_peak);
    let near = adaptive_panels(
        &near_f,
        &edges,
        0.25 * cfg.abs_tol,
        0.25 * cfg.rel_tol,
        cfg.max_subdivisions,
    );
    let mut total = near.value;
    let mut err = near.error;
    let mut scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !near.converged {
        let tolerance = (0.25 * cfg.abs_tol).max(0.25 * cfg.rel_tol * scale);
        if near.error > 20.0 * tolerance {
            return Err(KernelError::NonConvergence { estimate: near.error, tolerance });
        }
    }

    // periodic blocks with running tail fit
    let mut tail = BlockTail::<N>::new(t0, period, q0);
    let block_cap = 40 * cfg.max_subdivisions.max(60);
    for m in 0..block_cap {
        let s = t0 + m as f64 * period;
        let budget = cfg.abs_tol.max(cfg.rel_tol * scale) / ((m + 1) * (m + 2)) as f64;
        let b = adaptive_panels(
            pack,
            &[s, s + 0.5 * period, s + period],
            budget,
            0.25 * cfg.rel_tol,
            cfg.max_subdivisions,
        );
        for (ti, bi) in total.iter_mut().zip(b.value.iter()) {
            *ti += bi;
        }
        err += b.error;
        tail.blocks.push(b.value);
        scale = total.iter().fold(scale, |mx, v| mx.max(v.abs()));

        if m % 2 == 1 {
            if let Some((rem, fit_err)) = tail.try_fit(t_sat) {
                let threshold = (cfg.abs_tol / cfg.tail_safety).max(0.1 * cfg.rel_tol * scale);
                if 2.0 * fit_err <= threshold {
                    for (ti, ri) in total.iter_mut().zip(rem.iter()) {
                        *ti += ri;
                    }
                    err += 2.0 * fit_err;
                    return Ok((total, err));
                }
            }
        }
    }
    Err(KernelError::NonConvergence {
        estimate: err,
        tolerance: cfg.abs_tol.max(cfg.rel_tol * scale),
    })
}

/// Gamma and requested gradients at one t, packed row-major:
/// [0..9) value, then the x-gradient (l-major), then the y-gradient.
fn gamma_pack(
    x: &Point3,
    y: &Point3,
    t: f64,
    p: &PhysParams,
    want_xg: bool,
    want_yg: bool,
    out: &mut [f64],
) {
    let rot = rotation_matrix(-t, p);
    let w = *x - Point3::new(p.tau() * t, 0.0, 0.0) - rot.mat_vec(y);
    let jet = stokes_t_jet(&w, t, want_xg || want_yg).expect("t > 0 inside quadrature");
    let val = jet.value.mat_mul(&rot);
    for j in 0..3 {
        for k in 0..3 {
            out[3 * j + k] = val.0[j][k];
        }
    }
    if want_xg || want_yg {
        let g = jet.grad.unwrap();
        let gxr = [g[0].mat_mul(&rot), g[1].mat_mul(&rot), g[2].mat_mul(&rot)];
        if want_xg {
            for (l, gl) in gxr.iter().enumerate() {
                for j in 0..3 {
                    for k in 0..3 {
                        out[9 + 9 * l + 3 * j + k] = gl.0[j][k];
                    }
                }
            }
        }
        if want_yg {
            let base = if want_xg { 36 } else { 9 };
            for m in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let mut s = 0.0;
                        for (l, gl) in gxr.iter().enumerate() {
                            s -= rot.0[l][m] * gl.0[j][k];
                        }
                        out[base + 9 * m + 3 * j + k] = s;
                    }
                }
            }
        }
    }
}

fn unpack_mat(v: &[f64]) -> Mat3 {
    let mut m = Mat3::ZERO;
    for j in 0..3 {
        for k in 0..3 {
            m.0[j][k] = v[3 * j + k];
        }
    }
    m
}

fn unpack_grads(v: &[f64]) -> [Mat3; 3] {
    [unpack_mat(&v[0..9]), unpack_mat(&v[9..18]), unpack_mat(&v[18..27])]
}

/// Z_jk(x,y) = int_0^inf Gamma_jk(x,y,t) dt, with gradients on request:
/// the x-gradient by differentiation under the integral, the y-gradient by
/// the chain rule through T's spatial gradient and the rotation.
pub fn z_tensor(
    x: &Point3,
    y: &Point3,
    p: &PhysParams,
    cfg: &TimeQuadratureConfig,
    want_x_grad: bool,
    want_y_grad: bool,
) -> Result<KernelMatrixValue> {
    cfg.validate()?;
    let d = (*x - *y).norm();
    if d < COINCIDENCE_EPS {
        return Err(KernelError::CoincidentPoints(COINCIDENCE_EPS));
    }
    let t0 = cfg.split_point(x, y);
    let period = p.period();
    let t_sat = saturation_time(x.norm() + y.norm(), p.tau());
    let t_peak = (x.x1() - y.x1()) / p.tau();

    match (want_x_grad, want_y_grad) {
        (false, false) => {
            let pack = |t: f64| {
                let mut out = [0.0; 9];
                gamma_pack(x, y, t, p, false, false, &mut out);
                out
            };
            let (v, err) = z_integrate(&pack, t0, period, t_sat, t_peak, d, cfg, 3)?;
            Ok(KernelMatrixValue {
                value: unpack_mat(&v),
                x_gradient: None,
                y_gradient: None,
                estimated_error: err,
            })
        }
        (true, false) => {
            let pack = |t: f64| {
                let mut out = [0.0; 36];
                gamma_pack(x, y, t, p, true, false, &mut out);
                out
            };
            let (v, err) = z_integrate(&pack, t0, period, t_sat, t_peak, d, cfg, 3)?;
            Ok(KernelMatrixValue {
                value: unpack_mat(&v[0..9]),
                x_gradient: Some(unpack_grads(&v[9..36])),
                y_gradient: None,
                estimated_error: err,
            })
        }
        (false, true) => {
            let pack = |t: f64| {
                let mut out = [0.0; 36];
                gamma_pack(x, y, t, p, false, true, &mut out);
                out
            };
            let (v, err) = z_integrate(&pack, t0, period, t_sat, t_peak, d, cfg, 3)?;
            Ok(KernelMatrixValue {
                value: unpack_mat(&v[0..9]),
                x_gradient: None,
                y_gradient: Some(unpack_grads(&v[9..36])),
                estimated_error: err,
            })
        }
        (true, true) => {
            let pack = |t: f64| {
                let mut out = [0.0; 63];
                gamma_pack(x, y, t, p, true, true, &mut out);
                out
            };
            let (v, err) = z_integrate(&pack, t0, period, t_sat, t_peak, d, cfg, 3)?;
            Ok(KernelMatrixValue {
                value: unpack_mat(&v[0..9]),
                x_gradient: Some(unpack_grads(&v[9..36])),
                y_gradient: Some(unpack_grads(&v[36..63])),
                estimated_error: err,
            })
        }
    }
}

/// First column of d^alpha Z(., 0): Gamma_j1(x,0,t) = T_j1(x - tau t e1, t)
/// carries no rotation factor, so the integrand is smooth in t. The near
/// field is followed by geometric doubling panels up to the explicit
/// cutoff where the analytic envelope bound
/// int C (tau t - |x|)^{-3-|alpha|} dt drops below the tail budget; the
/// bound joins the error estimate.
pub fn z_first_column_deriv(
    x: &Point3,
    p: &PhysParams,
    cfg: &TimeQuadratureConfig,
    alpha: MultiIndex,
) -> Result<([f64; 3], f64)> {
    cfg.validate()?;
    if alpha.order() > 1 {
        return Err(KernelError::InvalidParameter(
            "z_at_origin supports |alpha| <= 1".into(),
        ));
    }
    let r = x.norm();
    if r < COINCIDENCE_EPS {
        return Err(KernelError::CoincidentPoints(COINCIDENCE_EPS));
    }
    let tau = p.tau();
    let grad_axis = alpha.axes().first().copied();
    let pack = |t: f64| -> [f64; 3] {
        let w = Point3::new(x.x1() - tau * t, x.x2(), x.x3());
        let jet = stokes_t_jet(&w, t, grad_axis.is_some()).expect("t > 0 inside quadrature");
        let m = match grad_axis {
            None => jet.value,
            Some(ax) => jet.grad.unwrap()[ax],
        };
        [m.0[0][0], m.0[1][0], m.0[2][0]]
    };

    let t0 = (r * r).max(1.0);
    let t_peak = x.x1() / tau;
    let near_f = |u: f64| {
        if u <= 0.0 {
            return [0.0; 3];
        }
        let mut v = pack(u * u);
        for vi in v.iter_mut() {
            *vi *= 2.0 * u;
        }
        v
    };
    let edges = near_edges(t0, f64::INFINITY, r, t_peak);
    let near = adaptive_panels(
        &near_f,
        &edges,
        0.25 * cfg.abs_tol,
        0.25 * cfg.rel_tol,
        cfg.max_subdivisions,
    );
    let mut total = near.value;
    let mut err = near.error;
    let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    // geometric panels out to the analytic-bound cutoff
    let budget = cfg.abs_tol.max(0.5 * cfg.rel_tol * scale) / cfg.tail_safety;
    let t_cut = match alpha.order() {
        0 => (r + (C_T / (2.0 * tau * budget)).sqrt()) / tau,
        _ => (r + (C_G / (3.0 * tau * budget)).cbrt()) / tau,
    };
    let mut t_a = t0;
    while t_a < t_cut {
        let t_b = (2.0 * t_a).min(t_cut);
        let (v, e) = gk15(&pack, t_a, t_b);
        for (ti, vi) in total.iter_mut().zip(v.iter()) {
            *ti += vi;
        }
        err += e;
        t_a = t_b;
    }
    let bound = match alpha.order() {
        0 => C_T * (tau * t_cut - r).powi(-2) / (2.0 * tau),
        _ => C_G * (tau * t_cut - r).powi(-3) / (3.0 * tau),
    };
    err += bound.max(0.0);
    Ok((total, err))
}

/// Z(x, 0) first column only (the Fourier pairings and the Oseen identity
/// need nothing else).
pub fn z_first_column(x: &Point3, p: &PhysParams, cfg: &TimeQuadratureConfig) -> Result<[f64; 3]> {
    Ok(z_first_column_deriv(x, p, cfg, MultiIndex::ZERO)?.0)
}

/// Specialized evaluation of d^alpha Z(x, 0).
///
/// Column 1 integrates T_j1(x - tau t e1, t) directly (the rotation fixes
/// e1, so the result is independent of rho). Columns 2 and 3 are the
/// cos/sin combinations of T columns 2 and 3; their panels align to
/// half-periods pi/|rho| and are summed in full-period pairs so the
/// oscillatory cancellation behind the faster decay is captured block by
/// block, with the same fitted tail closing the sum.
pub fn z_at_origin(
    x: &Point3,
    p: &PhysParams,
    cfg: &TimeQuadratureConfig,
    alpha: MultiIndex,
) -> Result<Mat3> {
    let (col1, _err1) = z_first_column_deriv(x, p, cfg, alpha)?;
    let r = x.norm();
    let tau = p.tau();
    let rho = p.rho();
    let grad_axis = alpha.axes().first().copied();
    let pack = |t: f64| -> [f64; 6] {
        let w = Point3::new(x.x1() - tau * t, x.x2(), x.x3());
        let jet = stokes_t_jet(&w, t, grad_axis.is_some()).expect("t > 0 inside quadrature");
        let m = match grad_axis {
            None => jet.value,
            Some(ax) => jet.grad.unwrap()[ax],
        };
        let (s, c) = (rho * t).sin_cos();
        let mut out = [0.0; 6];
        for j in 0..3 {
            out[j] = m.0[j][1] * c - m.0[j][2] * s;
            out[3 + j] = m.0[j][1] * s + m.0[j][2] * c;
        }
        out
    };
    let t0 = (r * r).max(1.0);
    let t_sat = saturation_time(r, tau);
    let t_peak = x.x1() / tau;
    let q0 = 4 + alpha.order() as u32;
    let (cols, _err23) = z_integrate(&pack, t0, p.period(), t_sat, t_peak, r, cfg, q0)?;
    let mut out = Mat3::ZERO;
    for j in 0..3 {
        out.0[j][0] = col1[j];
        out.0[j][1] = cols[j];
        out.0[j][2] = cols[3 + j];
    }
    Ok(out)
}
