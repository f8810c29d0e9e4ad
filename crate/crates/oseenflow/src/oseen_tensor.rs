//! The Oseen fundamental solution: velocity part E_jk, pressure part E_4k,
//! first derivatives, and the far-field decay envelope.

use crate::error::{KernelError, Result};
use crate::geometry::{wake_weight, Mat3, MultiIndex, PhysParams, Point3};
use crate::scalar_kernels::{oseen_scalar, phi_jet, FOUR_PI};

/// Velocity tensor, pressure vector, and (on request) the 27 entries of the
/// velocity gradient, stored as one Mat3 per derivative direction.
#[derive(Debug, Clone)]
pub struct OseenTensorValue {
    pub velocity: Mat3,
    pub pressure: Point3,
    /// velocity_gradient[l][(j,k)] = d_l E_jk
    pub velocity_gradient: Option<[Mat3; 3]>,
}

/// E_jk(x) = (delta_jk Laplace - d_j d_k) Phi(x), E_4k(x) = x_k (4 pi |x|^3)^-1.
///
/// The Laplacian of Phi collapses to the scalar Oseen kernel
/// (w psi''(w) + psi'(w) = e^-w), so the diagonal carries the wake factor
/// explicitly. Gradients come from the hand-derived third derivatives of
/// Phi, gated by finite-difference tests.
pub fn oseen_e(x: &Point3, p: &PhysParams, with_gradient: bool) -> Result<OseenTensorValue> {
    let jet = phi_jet(x, p)?;
    let lap = oseen_scalar(x, p)?; // Laplace Phi = scalar Oseen kernel
    let mut velocity = Mat3::ZERO;
    for j in 0..3 {
        for k in 0..3 {
            let d = if j == k { 1.0 } else { 0.0 };
            velocity.0[j][k] = d * lap - jet.hess[j][k];
        }
    }
    let pressure = oseen_pressure(x)?;
    let velocity_gradient = if with_gradient {
        // d_l (Laplace Phi) = d_l (scalar Oseen kernel)
        let grad_lap = oseen_scalar_gradient(x, p)?;
        let mut grads = [Mat3::ZERO; 3];
        for (l, g) in grads.iter_mut().enumerate() {
            for j in 0..3 {
                for k in 0..3 {
                    let d = if j == k { 1.0 } else { 0.0 };
                    g.0[j][k] = d * grad_lap[l] - jet.third[l][j][k];
                }
            }
        }
        Some(grads)
    } else {
        None
    };
    Ok(OseenTensorValue { velocity, pressure, velocity_gradient })
}

/// Gradient of the scalar Oseen kernel: d_l O = -O ((tau/2)(n_l - delta_l1) + n_l/|x|).
pub fn oseen_scalar_gradient(x: &Point3, p: &PhysParams) -> Result<Point3> {
    let r = x.norm();
    if r == 0.0 {
        return Err(KernelError::SingularPoint);
    }
    let o = oseen_scalar(x, p)?;
    let n = x.scale(1.0 / r);
    let ht = 0.5 * p.tau();
    Ok(Point3([
        -o * (ht * (n[0] - 1.0) + n[0] / r),
        -o * (ht * n[1] + n[1] / r),
        -o * (ht * n[2] + n[2] / r),
    ]))
}

/// Oseen pressure part E_4k(x) = x_k (4 pi |x|^3)^-1, homogeneous of degree -2.
pub fn oseen_pressure(x: &Point3) -> Result<Point3> {
    let r = x.norm();
    if r == 0.0 {
        return Err(KernelError::SingularPoint);
    }
    Ok(x.scale(1.0 / (FOUR_PI * r * r * r)))
}

/// d_j E_4k(x) = (delta_jk - 3 n_j n_k) (4 pi |x|^3)^-1.
pub fn oseen_pressure_gradient(x: &Point3) -> Result<Mat3> {
    let r = x.norm();
    if r == 0.0 {
        return Err(KernelError::SingularPoint);
    }
    let n = x.scale(1.0 / r);
    let mut out = Mat3::ZERO;
    for j in 0..3 {
        for k in 0..3 {
            let d = if j == k { 1.0 } else { 0.0 };
            out.0[j][k] = (d - 3.0 * n[j] * n[k]) / (FOUR_PI * r * r * r);
        }
    }
    Ok(out)
}

/// The envelope shape (|x| s(x))^{-1-|alpha|/2} max(1, |x|^{-|alpha|/2}) of
/// the far-field bound, without the unknown constant. Slope diagnostics fit
/// the constant; it is never asserted.
pub fn oseen_decay_envelope(x: &Point3, alpha: MultiIndex) -> Result<f64> {
    if alpha.order() > 1 {
        return Err(KernelError::InvalidParameter(
            "decay envelope supports |alpha| <= 1".into(),
        ));
    }
    let r = x.norm();
    if r == 0.0 {
        return Err(KernelError::SingularPoint);
    }
    let s = wake_weight(x);
    let half = alpha.order() as f64 / 2.0;
    Ok((r * s).powf(-1.0 - half) * 1.0f64.max(r.powf(-half)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MultiIndex;
    use crate::scalar_kernels::{newton, phi};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn params(tau: f64, rho: f64) -> PhysParams {
        PhysParams::new(tau, rho).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Point3 {
        loop {
            let x = Point3::new(
                rng.random_range(-hi..hi),
                rng.random_range(-hi..hi),
                rng.random_range(-hi..hi),
            );
            let r = x.norm();
            if r >= lo && r <= hi {
                return x;
            }
        }
    }

    #[test]
    fn velocity_is_symmetric_exactly() {
        let p = params(1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x = random_point(&mut rng, 0.3, 15.0);
            let e = oseen_e(&x, &p, false).unwrap().velocity;
            for j in 0..3 {
                for k in 0..3 {
                    assert_eq!(e.0[j][k], e.0[k][j]);
                }
            }
        }
    }

    #[test]
    fn matches_finite_differences_of_phi() {
        // E_jk = (delta_jk Laplace - d_j d_k) Phi at x = (-2, 1, 0), tau = 1
        let p = params(1.0, 1.0);
        let x = Point3::new(-2.0, 1.0, 0.0);
        let e = oseen_e(&x, &p, false).unwrap().velocity;
        let h = 1e-4;
        let phi0 = |y: &Point3| phi(y, &p, MultiIndex::ZERO).unwrap();
        let second = |j: usize, k: usize| {
            let mut xpp = x;
            let mut xpm = x;
            let mut xmp = x;
            let mut xmm = x;
            if j == k {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                (phi0(&xp) - 2.0 * phi0(&x) + phi0(&xm)) / (h * h)
            } else {
                xpp[j] += h;
                xpp[k] += h;
                xpm[j] += h;
                xpm[k] -= h;
                xmp[j] -= h;
                xmp[k] += h;
                xmm[j] -= h;
                xmm[k] -= h;
                (phi0(&xpp) - phi0(&xpm) - phi0(&xmp) + phi0(&xmm)) / (4.0 * h * h)
            }
        };
        let lap_fd = second(0, 0) + second(1, 1) + second(2, 2);
        for j in 0..3 {
            for k in 0..3 {
                let d = if j == k { 1.0 } else { 0.0 };
                let fd = d * lap_fd - second(j, k);
                assert!(
                    (e.0[j][k] - fd).abs() < 1e-5,
                    "E_{j}{k}: analytic {} vs fd {}",
                    e.0[j][k],
                    fd
                );
            }
        }
    }

    #[test]
    fn pressure_examples() {
        let e4 = oseen_pressure(&Point3::new(1.0, 0.0, 0.0)).unwrap();
        assert!((e4[0] - 1.0 / FOUR_PI).abs() < 1e-16);
        assert_eq!(e4[1], 0.0);
        assert_eq!(e4[2], 0.0);

        // homogeneity of degree -2
        let x = Point3::new(0.4, -1.2, 2.0);
        let a = oseen_pressure(&x).unwrap();
        let b = oseen_pressure(&x.scale(2.0)).unwrap();
        for k in 0..3 {
            assert!((b[k] - a[k] / 4.0).abs() < 1e-15);
        }

        // sum_k x_k E_4k = (4 pi |x|)^-1
        let dot = x.dot(&a);
        assert!((dot - newton(&x).unwrap()).abs() < 1e-15);

        assert_eq!(oseen_pressure(&Point3::ZERO), Err(KernelError::SingularPoint));
    }

    #[test]
    fn envelope_examples() {
        let r = 3.0;
        let down = Point3::new(r, 0.0, 0.0);
        let up = Point3::new(-r, 0.0, 0.0);
        let a0 = MultiIndex::ZERO;
        assert!((oseen_decay_envelope(&down, a0).unwrap() - 1.0 / r).abs() < 1e-14);
        assert!(
            (oseen_decay_envelope(&up, a0).unwrap() - 1.0 / (r * (1.0 + 2.0 * r))).abs() < 1e-14
        );
        // |alpha| = 1, |x| >= 1: the max factor is 1
        let a1 = MultiIndex::unit(0);
        let x = Point3::new(0.0, 2.0, 0.0);
        let s = wake_weight(&x);
        assert!(
            (oseen_decay_envelope(&x, a1).unwrap() - (2.0 * s).powf(-1.5)).abs() < 1e-14
        );
    }

    #[test]
    fn divergence_free_via_analytic_gradient() {
        let p = params(1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x = random_point(&mut rng, 0.5, 20.0);
            let e = oseen_e(&x, &p, true).unwrap();
            let g = e.velocity_gradient.unwrap();
            for k in 0..3 {
                let div: f64 = (0..3).map(|j| g[j].0[j][k]).sum();
                assert!(div.abs() < 1e-10, "div column {k} = {div} at {x:?}");
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = params(1.3, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let x = random_point(&mut rng, 0.7, 12.0);
            let e = oseen_e(&x, &p, true).unwrap();
            let g = e.velocity_gradient.unwrap();
            let h = 1e-4 * x.norm().max(1.0);
            let scale = e.velocity.norm_inf().max(1e-12);
            for l in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[l] += h;
                xm[l] -= h;
                let ep = oseen_e(&xp, &p, false).unwrap().velocity;
                let em = oseen_e(&xm, &p, false).unwrap().velocity;
                for j in 0..3 {
                    for k in 0..3 {
                        let fd = (ep.0[j][k] - em.0[j][k]) / (2.0 * h);
                        let err = (g[l].0[j][k] - fd).abs();
                        assert!(
                            err < 1e-5 * scale.max(fd.abs()),
                            "d_{l} E_{j}{k} at {x:?}: {} vs {}",
                            g[l].0[j][k],
                            fd
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn oseen_pde_residual_by_finite_differences() {
        // -Laplace E_.k + tau d_1 E_.k + grad E_4k = 0 away from the origin
        let p = params(1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = 1e-3;
        for _ in 0..30 {
            let x = random_point(&mut rng, 1.0, 8.0);
            let ev = |y: &Point3| oseen_e(y, &p, false).unwrap().velocity;
            let pv = |y: &Point3| oseen_pressure(y).unwrap();
            let e0 = ev(&x);
            for k in 0..3 {
                for j in 0..3 {
                    let mut lap = 0.0;
                    for ax in 0..3 {
                        let mut xp = x;
                        let mut xm = x;
                        xp[ax] += h;
                        xm[ax] -= h;
                        lap += (ev(&xp).0[j][k] - 2.0 * e0.0[j][k] + ev(&xm).0[j][k]) / (h * h);
                    }
                    let mut xp = x;
                    let mut xm = x;
                    xp[0] += h;
                    xm[0] -= h;
                    let d1 = (ev(&xp).0[j][k] - ev(&xm).0[j][k]) / (2.0 * h);
                    let mut yp = x;
                    let mut ym = x;
                    yp[j] += h;
                    ym[j] -= h;
                    let dp = (pv(&yp)[k] - pv(&ym)[k]) / (2.0 * h);
                    let resid = -lap + p.tau() * d1 + dp;
                    let scale = lap.abs().max(d1.abs()).max(dp.abs()).max(1e-10);
                    assert!(
                        resid.abs() <= 1e-3 * scale,
                        "residual {resid} vs scale {scale} at {x:?} (j={j}, k={k})"
                    );
                }
            }
        }
    }

    #[test]
    fn downstream_upstream_anisotropy() {
        let p = params(1.0, 1.0);
        let mut prev = f64::INFINITY;
        for r in [5.0, 10.0, 20.0, 40.0] {
            let down = oseen_e(&Point3::new(r, 0.0, 0.0), &p, false).unwrap().velocity.0[0][0];
            let up = oseen_e(&Point3::new(-r, 0.0, 0.0), &p, false).unwrap().velocity.0[0][0];
            let ratio = up.abs() / down.abs();
            assert!(ratio < prev, "ratio {ratio} not decreasing at r={r}");
            prev = ratio;
        }
    }

    #[test]
    fn singular_at_origin() {
        let p = params(1.0, 1.0);
        assert!(matches!(
            oseen_e(&Point3::ZERO, &p, false),
            Err(KernelError::SingularPoint)
        ));
        assert!(matches!(
            oseen_decay_envelope(&Point3::ZERO, MultiIndex::ZERO),
            Err(KernelError::SingularPoint)
        ));
    }
}
