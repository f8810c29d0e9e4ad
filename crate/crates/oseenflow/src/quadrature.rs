//! One-dimensional quadrature machinery: Gauss-Legendre rules of arbitrary
//! order, the 15-point Gauss-Kronrod pair, and a panel-based adaptive
//! integrator for array-valued integrands.

use crate::error::{KernelError, Result};

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence. Accurate to ~1e-15 for n up to a few hundred.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK dqk15).
const XGK15: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK15: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG7: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Accumulating array arithmetic for vector-valued integrands.
#[inline]
fn axpy<const N: usize>(acc: &mut [f64; N], a: f64, v: &[f64; N]) {
    for i in 0..N {
        acc[i] += a * v[i];
    }
}

#[inline]
fn norm_inf<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// One Gauss-Kronrod 15 panel: returns (kronrod value, error estimate).
pub fn gk15<const N: usize, F>(f: &F, a: f64, b: f64) -> ([f64; N], f64)
where
    F: Fn(f64) -> [f64; N],
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = [0.0; N];
    let mut gauss = [0.0; N];
    axpy(&mut kronrod, WGK15[7], &fc);
    axpy(&mut gauss, WG7[3], &fc);
    let mut resabs = WGK15[7] * norm_inf(&fc);
    for (i, &xi) in XGK15.iter().enumerate().take(7) {
        let f1 = f(c - h * xi);
        let f2 = f(c + h * xi);
        axpy(&mut kronrod, WGK15[i], &f1);
        axpy(&mut kronrod, WGK15[i], &f2);
        resabs += WGK15[i] * (norm_inf(&f1) + norm_inf(&f2));
        if i % 2 == 1 {
            // odd Kronrod nodes are the embedded Gauss-7 nodes
            axpy(&mut gauss, WG7[i / 2], &f1);
            axpy(&mut gauss, WG7[i / 2], &f2);
        }
    }
    let mut diff = 0.0f64;
    for i in 0..N {
        kronrod[i] *= h;
        diff = diff.max((kronrod[i] - gauss[i] * h).abs());
    }
    // QUADPACK-style rescaling keeps the estimate meaningful when the
    // Gauss/Kronrod difference is far below the integrand scale.
    let err = if diff > 0.0 && resabs > 0.0 {
        let scaled = (200.0 * diff / (resabs * h.abs())).powf(1.5);
        if scaled < 1.0 {
            resabs * h.abs() * scaled
        } else {
            diff
        }
        .max(50.0 * f64::EPSILON * resabs * h.abs())
    } else {
        diff
    };
    (kronrod, err)
}

/// Plain fixed-order Gauss-Legendre panel over [a, b].
pub fn gl_panel<const N: usize, F>(f: &F, a: f64, b: f64, nodes: &[f64], weights: &[f64]) -> [f64; N]
where
    F: Fn(f64) -> [f64; N],
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = [0.0; N];
    for (x, w) in nodes.iter().zip(weights) {
        let v = f(c + h * x);
        axpy(&mut acc, w * h, &v);
    }
    acc
}

#[derive(Debug, Clone, Copy)]
pub struct PanelOutcome<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Globally adaptive Gauss-Kronrod integration over a pre-split panel list.
///
/// The subdivision budget is `max_subdivisions` per initial panel; the
/// initial split is the caller's job (singularity scales, oscillation
/// half-periods). Worst panel first, stop when the summed error estimate
/// drops under `max(abs_tol, rel_tol * |value|_inf)`.
pub fn adaptive_panels<const N: usize, F>(
    f: &F,
    edges: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> PanelOutcome<N>
where
    F: Fn(f64) -> [f64; N],
{
    assert!(edges.len() >= 2);
    struct Panel<const N: usize> {
        a: f64,
        b: f64,
        value: [f64; N],
        error: f64,
    }

    let mut panels: Vec<Panel<N>> = Vec::with_capacity(edges.len() + 32);
    let mut evaluations = 0;
    for w in edges.windows(2) {
        let (value, error) = gk15(f, w[0], w[1]);
        evaluations += 15;
        panels.push(Panel { a: w[0], b: w[1], value, error });
    }

    let budget = max_subdivisions.saturating_mul(edges.len() - 1);
    let mut splits = 0;
    loop {
        let mut total = [0.0; N];
        let mut total_err = 0.0;
        for p in &panels {
            axpy(&mut total, 1.0, &p.value);
            total_err += p.error;
        }
        let target = abs_tol.max(rel_tol * norm_inf(&total));
        if total_err <= target {
            return PanelOutcome { value: total, error: total_err, converged: true, evaluations };
        }
        if splits >= budget {
            return PanelOutcome { value: total, error: total_err, converged: false, evaluations };
        }
        // split the worst panel
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .unwrap();
        let Panel { a, b, .. } = panels[worst];
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // interval exhausted at f64 resolution
            return PanelOutcome {
                value: {
                    let mut total = [0.0; N];
                    for p in &panels {
                        axpy(&mut total, 1.0, &p.value);
                    }
                    total
                },
                error: panels.iter().map(|p| p.error).sum(),
                converged: false,
                evaluations,
            };
        }
        let (v1, e1) = gk15(f, a, mid);
        let (v2, e2) = gk15(f, mid, b);
        evaluations += 30;
        panels[worst] = Panel { a, b: mid, value: v1, error: e1 };
        panels.push(Panel { a: mid, b, value: v2, error: e2 });
        splits += 1;
    }
}

/// Convenience scalar adaptive integral over [a, b] with automatic bisection.
/// Reversed bounds integrate [b, a] and negate.
pub fn integrate_scalar<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let g = |t: f64| [f(t)];
    let out = adaptive_panels(&g, &[lo, hi], abs_tol, rel_tol, 400);
    if !out.converged {
        return Err(KernelError::NonConvergence {
            estimate: out.error,
            tolerance: abs_tol.max(rel_tol * out.value[0].abs()),
        });
    }
    Ok((sign * out.value[0], out.error))
}

/// Product quadrature on the unit sphere: Gauss-Legendre in cos(theta)
/// about the x1-axis, uniform trapezoid in azimuth. Returns directions and
/// solid-angle weights summing to 4 pi; exact for spherical harmonics up to
/// combined order min(2 n_theta - 1, n_phi - 1).
pub fn sphere_product_rule(n_theta: usize, n_phi: usize) -> Vec<([f64; 3], f64)> {
    let (cos_nodes, cos_weights) = gauss_legendre(n_theta);
    let dphi = std::f64::consts::TAU / n_phi as f64;
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for (c, wc) in cos_nodes.iter().zip(&cos_weights) {
        let s = (1.0 - c * c).max(0.0).sqrt();
        for iphi in 0..n_phi {
            let phi = dphi * iphi as f64;
            out.push(([*c, s * phi.cos(), s * phi.sin()], wc * dphi));
        }
    }
    out
}

/// Solve a small dense linear system in place (partial pivoting).
/// Used by the tail extrapolation fits; sizes are 3 or 4.
pub(crate) fn solve_dense(a: &mut Vec<Vec<f64>>, b: &mut Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let m = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= m * a[col][c];
            }
            b[r] -= m * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for c in col + 1..n {
            s -= a[col][c] * x[c];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

/// Hurwitz zeta sum_{n>=0} (a+n)^{-q} for integer q >= 2, via Euler-Maclaurin.
pub(crate) fn hurwitz_zeta(q: u32, a: f64) -> f64 {
    debug_assert!(q >= 2 && a > 0.0);
    let qf = q as f64;
    let cut = 24usize;
    let mut s = 0.0;
    for n in 0..cut {
        s += (a + n as f64).powi(-(q as i32));
    }
    let m = a + cut as f64;
    let inv = 1.0 / m;
    let head = m.powi(1 - q as i32) / (qf - 1.0) + 0.5 * m.powi(-(q as i32));
    let c1 = qf / 12.0 * m.powi(-(q as i32) - 1);
    let c2 = qf * (qf + 1.0) * (qf + 2.0) / 720.0 * m.powi(-(q as i32) - 3);
    let c3 = qf * (qf + 1.0) * (qf + 2.0) * (qf + 3.0) * (qf + 4.0) / 30240.0
        * m.powi(-(q as i32) - 5);
    let _ = inv;
    s + head + c1 - c2 + c3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // degree 2n-1 exactness
        for n in [2usize, 5, 12, 24] {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 1;
            let quad: f64 = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| wi * xi.powi(deg as i32 - 1))
                .sum();
            // integral of x^(deg-1) over [-1,1]
            let exact = if (deg - 1) % 2 == 0 {
                2.0 / deg as f64
            } else {
                0.0
            };
            assert!(
                (quad - exact).abs() < 1e-13,
                "n={n} deg={} quad={quad} exact={exact}",
                deg - 1
            );
        }
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in [1usize, 3, 7, 15, 40] {
            let (_, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn gk15_matches_known_integral() {
        let f = |t: f64| [t.exp()];
        let (v, err) = gk15(&f, 0.0, 1.0);
        assert!((v[0] - (std::f64::consts::E - 1.0)).abs() < 1e-14);
        assert!(err < 1e-12);
    }

    #[test]
    fn adaptive_handles_integrable_singularity() {
        // int_0^1 t^(-1/2) dt = 2, sqrt-singularity at the left edge
        let f = |t: f64| [if t > 0.0 { t.powf(-0.5) } else { 0.0 }];
        let out = adaptive_panels(&f, &[0.0, 0.25, 1.0], 1e-10, 1e-10, 200);
        assert!(out.converged);
        assert!((out.value[0] - 2.0).abs() < 1e-7, "got {}", out.value[0]);
    }

    #[test]
    fn adaptive_oscillatory() {
        // int_0^{20 pi} cos(t)/(1+t) dt, compare against a brute-force fine rule
        let f = |t: f64| [t.cos() / (1.0 + t)];
        let hi = 20.0 * std::f64::consts::PI;
        let edges: Vec<f64> = (0..=40).map(|k| hi * k as f64 / 40.0).collect();
        let out = adaptive_panels(&f, &edges, 1e-12, 1e-12, 100);
        assert!(out.converged);
        let (nodes, weights) = gauss_legendre(60);
        let mut brute = 0.0;
        let nseg = 200;
        for s in 0..nseg {
            let a = hi * s as f64 / nseg as f64;
            let b = hi * (s + 1) as f64 / nseg as f64;
            brute += gl_panel(&f, a, b, &nodes, &weights)[0];
        }
        assert!((out.value[0] - brute).abs() < 1e-11);
    }

    #[test]
    fn nonconvergence_reported() {
        // genuinely divergent integral: error stays large, budget exhausts
        let f = |t: f64| [if t > 0.0 { 1.0 / t } else { 0.0 }];
        let out = adaptive_panels(&f, &[0.0, 1.0], 1e-12, 1e-12, 20);
        assert!(!out.converged);
    }

    #[test]
    fn hurwitz_zeta_against_direct_sum() {
        for q in [3u32, 4, 5, 6, 7] {
            for a in [2.5, 10.0, 31.25] {
                let n_terms = 400_000usize;
                let mut direct: f64 = (0..n_terms)
                    .rev()
                    .map(|n| (a + n as f64).powi(-(q as i32)))
                    .sum();
                // analytic tail of the truncated oracle sum
                direct += (a + n_terms as f64).powi(1 - q as i32) / (q as f64 - 1.0);
                let z = hurwitz_zeta(q, a);
                assert!(
                    (z - direct).abs() <= 1e-12 * direct.abs() + 1e-16,
                    "q={q} a={a} z={z} direct={direct}"
                );
            }
        }
    }

    #[test]
    fn solve_dense_4x4() {
        let mut a = vec![
            vec![2.0, 1.0, 0.0, 0.5],
            vec![1.0, 3.0, 1.0, 0.0],
            vec![0.0, 1.0, 4.0, 1.0],
            vec![0.5, 0.0, 1.0, 5.0],
        ];
        let xs = [1.0, -2.0, 3.0, 0.25];
        let mut b: Vec<f64> = (0..4)
            .map(|r| (0..4).map(|c| a[r][c] * xs[c]).sum())
            .collect();
        let sol = solve_dense(&mut a, &mut b).unwrap();
        for (s, x) in sol.iter().zip(xs.iter()) {
            assert!((s - x).abs() < 1e-12);
        }
    }
}
