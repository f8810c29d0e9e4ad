//! Scalar fundamental solutions: the Newton potential N, the scalar Oseen
//! kernel and its resolvent, the heat kernel K, the Oseen potential Phi
//! built from psi, and the heat-Newton convolution used inside the
//! time-dependent Stokes tensor.

use crate::error::{KernelError, Result};
use crate::geometry::{Mat3, MultiIndex, PhysParams, Point3};

pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Scalar kernel value with derivatives filled on request.
#[derive(Debug, Clone, Copy)]
pub struct ScalarKernelValue {
    pub value: f64,
    pub gradient: Option<Point3>,
    pub hessian: Option<Mat3>,
}

/// Newton potential N(x) = (4 pi |x|)^-1.
pub fn newton(x: &Point3) -> Result<f64> {
    let r = x.norm();
    if r == 0.0 {
        return Err(KernelError::SingularPoint);
    }
    Ok(1.0 / (FOUR_PI * r))
}

/// Derivative of N of order <= 2.
pub fn newton_deriv(x: &Point3, alpha: MultiIndex) -> Result<f64> {
    let r = x.norm();
    if r == 0.0 {
        return Err(KernelError::SingularPoint);
    }
    let n = x.scale(1.0 / r);
    match alpha.axes().as_slice() {
        [] => Ok(1.0 / (FOUR_PI * r)),
        [j] => Ok(-n[*j] / (FOUR_PI * r * r)),
        [j, k] => {
            let d = if j == k { 1.0 } else { 0.0 };
            Ok((3.0 * n[*j] * n[*k] - d) / (FOUR_PI * r * r * r))
        }
        _ => unreachable!("multi-index order capped at 2"),
    }
}

/// Scalar Oseen kernel (4 pi |x|)^-1 exp(-tau (|x| - x1) / 2).
pub fn oseen_scalar(x: &Point3, p: &PhysParams) -> Result<f64> {
    let r = x.norm();
    if r == 0.0 {
        return Err(KernelError::SingularPoint);
    }
    let w = 0.5 * p.tau() * (r - x.x1());
    Ok((-w).exp() / (FOUR_PI * r))
}

/// Scalar Oseen resolvent kernel (4 pi |x|)^-1 exp(-sqrt(lambda + tau^2/4) |x| + tau x1 / 2).
pub fn oseen_resolvent_scalar(x: &Point3, lambda: f64, p: &PhysParams) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(KernelError::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let r = x.norm();
    if r == 0.0 {
        return Err(KernelError::SingularPoint);
    }
    let mu = (lambda + 0.25 * p.tau() * p.tau()).sqrt();
    Ok((-mu * r + 0.5 * p.tau() * x.x1()).exp() / (FOUR_PI * r))
}

/// Heat kernel derivative d_t^l d_x^alpha K(x,t), |alpha| <= 2, l <= 1.
///
/// K(x,t) = (4 pi t)^{-3/2} exp(-|x|^2/(4t)); derivatives are polynomial
/// prefactors of the Gaussian.
pub fn heat_kernel(x: &Point3, t: f64, alpha: MultiIndex, l: u8) -> Result<f64> {
    if !(t > 0.0) {
        return Err(KernelError::InvalidParameter(format!(
            "heat kernel needs t > 0, got {t}"
        )));
    }
    if l > 1 {
        return Err(KernelError::InvalidParameter(format!(
            "time-derivative order {l} exceeds the supported maximum 1"
        )));
    }
    let q = x.norm_sq() / (4.0 * t);
    if q > 745.0 {
        return Ok(0.0); // exp underflows; all polynomial prefactors stay finite
    }
    let k = (FOUR_PI * t).powf(-1.5) * (-q).exp();
    let (poly, poly_t) = match alpha.axes().as_slice() {
        [] => (1.0, 0.0),
        [j] => (-x[*j] / (2.0 * t), x[*j] / (2.0 * t * t)),
        [j, k_ax] if j != k_ax => (
            x[*j] * x[*k_ax] / (4.0 * t * t),
            -x[*j] * x[*k_ax] / (2.0 * t * t * t),
        ),
        [j, _] => (
            x[*j] * x[*j] / (4.0 * t * t) - 1.0 / (2.0 * t),
            -x[*j] * x[*j] / (2.0 * t * t * t) + 1.0 / (2.0 * t * t),
        ),
        _ => unreachable!(),
    };
    if l == 0 {
        Ok(k * poly)
    } else {
        // d_t (K poly) = K ((q/t - 3/(2t)) poly + d_t poly)
        Ok(k * ((q / t - 1.5 / t) * poly + poly_t))
    }
}

/// psi and its first three derivatives at one argument.
#[derive(Debug, Clone, Copy)]
pub struct PsiJet {
    pub psi: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// psi(r) = int_0^r (1 - e^-t)/t dt, entire in r.
///
/// Series for |r| <= 1.5; for r > 1.5 the exponential-integral identity
/// psi(r) = ln r + gamma_E + E1(r); for r < -1.5 the same-sign power series
/// of -sum r^n/(n n!) (no cancellation on the negative axis).
pub fn psi(r: f64) -> f64 {
    psi_jet(r).psi
}

/// psi'(r) = (1 - e^-r)/r with the removable singularity psi'(0) = 1.
pub fn psi_prime(r: f64) -> f64 {
    psi_jet(r).d1
}

pub fn psi_jet(r: f64) -> PsiJet {
    if r.abs() <= 1.5 {
        return psi_jet_series(r);
    }
    if r > 0.0 {
        let e = (-r).exp();
        PsiJet {
            psi: r.ln() + EULER_GAMMA + exp_integral_e1(r),
            d1: (1.0 - e) / r,
            d2: ((1.0 + r) * e - 1.0) / (r * r),
            d3: (2.0 - (r * r + 2.0 * r + 2.0) * e) / (r * r * r),
        }
    } else {
        // r < -1.5: psi(r) = -sum_{n>=1} (-r)^n / (n n!)
        let s = -r;
        let mut term = s;
        let mut sum = s;
        for n in 2..400 {
            term *= s / n as f64;
            sum += term / n as f64;
            if term < 1e-17 * sum.abs() && n as f64 > s {
                break;
            }
        }
        let e = (-r).exp();
        PsiJet {
            psi: -sum,
            d1: (1.0 - e) / r,
            d2: ((1.0 + r) * e - 1.0) / (r * r),
            d3: (2.0 - (r * r + 2.0 * r + 2.0) * e) / (r * r * r),
        }
    }
}

fn psi_jet_series(r: f64) -> PsiJet {
    // psi    = sum_{n>=1} (-1)^{n+1} r^n / (n n!)
    // psi'   = sum_{m>=0} (-1)^m r^m / (m+1)!
    // psi''  = sum_{m>=1} (-1)^m m r^{m-1} / (m+1)!
    // psi''' = sum_{m>=2} (-1)^m m (m-1) r^{m-2} / (m+1)!
    let mut psi = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    let mut d3 = 0.0;
    let mut pow_m = 1.0; // r^m
    let mut pow_m1 = 0.0; // r^{m-1}
    let mut pow_m2 = 0.0; // r^{m-2}
    let mut fact = 1.0; // (m+1)!
    for m in 0..40u32 {
        fact *= (m + 1) as f64;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let mf = m as f64;
        d1 += sign * pow_m / fact;
        d2 += sign * mf * pow_m1 / fact;
        d3 += sign * mf * (mf - 1.0) * pow_m2 / fact;
        // psi term n = m+1: (-1)^m r^{m+1} / ((m+1) (m+1)!)
        psi += sign * pow_m * r / ((m + 1) as f64 * fact);
        pow_m2 = pow_m1;
        pow_m1 = pow_m;
        pow_m *= r;
        if pow_m.abs() / fact < 1e-19 && m > 4 {
            break;
        }
    }
    PsiJet { psi, d1, d2, d3 }
}

/// E1(x) for x > 1 via the continued fraction (modified Lentz).
pub fn exp_integral_e1(x: f64) -> f64 {
    debug_assert!(x > 1.0);
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..200 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x).exp()
}

/// Phi and its derivatives through third order, as needed by the Oseen
/// tensor and its gradient.
#[derive(Debug, Clone, Copy)]
pub struct PhiJet {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
    pub third: [[[f64; 3]; 3]; 3],
}

/// All derivatives of Phi(x) = (4 pi tau)^-1 psi(tau (|x| - x1)/2) up to
/// third order, by the chain rule through the psi jet. Singular at x = 0.
pub fn phi_jet(x: &Point3, p: &PhysParams) -> Result<PhiJet> {
    let r = x.norm();
    if r == 0.0 {
        return Err(KernelError::SingularPoint);
    }
    let tau = p.tau();
    let w = 0.5 * tau * (r - x.x1());
    let pj = psi_jet(w);
    let c = 1.0 / (FOUR_PI * tau);
    let ht = 0.5 * tau;

    let n = x.scale(1.0 / r);
    // g_j = d_j w / (tau/2), m_jk = d_j d_k (r) = (delta_jk - n_j n_k)/r
    let g = [n[0] - 1.0, n[1], n[2]];
    let mut m = [[0.0; 3]; 3];
    for j in 0..3 {
        for k in 0..3 {
            let d = if j == k { 1.0 } else { 0.0 };
            m[j][k] = (d - n[j] * n[k]) / r;
        }
    }

    let mut grad = [0.0; 3];
    for j in 0..3 {
        grad[j] = c * pj.d1 * ht * g[j];
    }
    let mut hess = [[0.0; 3]; 3];
    for j in 0..3 {
        for k in 0..3 {
            // (g[j] * g[k]) grouped so E_jk == E_kj holds bitwise
            hess[j][k] = c * (ht * ht * pj.d2 * (g[j] * g[k]) + ht * pj.d1 * m[j][k]);
        }
    }
    let mut third = [[[0.0; 3]; 3]; 3];
    for l in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let dm = third_r_term(&n, r, l, j, k);
                third[l][j][k] = c
                    * (ht * ht * ht * pj.d3 * g[j] * g[k] * g[l]
                        + ht * ht * pj.d2 * (m[j][l] * g[k] + m[k][l] * g[j] + m[j][k] * g[l])
                        + ht * pj.d1 * dm);
            }
        }
    }
    Ok(PhiJet { value: c * pj.psi, grad, hess, third })
}

// d_l m_jk = (3 n_j n_k n_l - delta_jk n_l - delta_jl n_k - delta_kl n_j)/r^2
#[inline]
fn third_r_term(n: &Point3, r: f64, l: usize, j: usize, k: usize) -> f64 {
    let d_jk = if j == k { 1.0 } else { 0.0 };
    let d_jl = if j == l { 1.0 } else { 0.0 };
    let d_kl = if k == l { 1.0 } else { 0.0 };
    (3.0 * n[j] * n[k] * n[l] - d_jk * n[l] - d_jl * n[k] - d_kl * n[j]) / (r * r)
}

/// Phi derivative of requested order. Order >= 1 is singular at x = 0;
/// the value itself extends by psi(0) = 0 along the positive axis.
pub fn phi(x: &Point3, p: &PhysParams, alpha: MultiIndex) -> Result<f64> {
    if alpha.order() == 0 {
        let r = x.norm();
        let w = 0.5 * p.tau() * (r - x.x1());
        return Ok(psi(w) / (FOUR_PI * p.tau()));
    }
    let jet = phi_jet(x, p)?;
    match alpha.axes().as_slice() {
        [j] => Ok(jet.grad[*j]),
        [j, k] => Ok(jet.hess[*j][*k]),
        _ => unreachable!(),
    }
}

/// Phi with gradient/Hessian filled up to `order`.
pub fn phi_eval(x: &Point3, p: &PhysParams, order: u8) -> Result<ScalarKernelValue> {
    if order == 0 {
        let r = x.norm();
        let w = 0.5 * p.tau() * (r - x.x1());
        return Ok(ScalarKernelValue {
            value: psi(w) / (FOUR_PI * p.tau()),
            gradient: None,
            hessian: None,
        });
    }
    let jet = phi_jet(x, p)?;
    Ok(ScalarKernelValue {
        value: jet.value,
        gradient: Some(Point3(jet.grad)),
        hessian: if order >= 2 { Some(Mat3(jet.hess)) } else { None },
    })
}

/// Radial derivatives of the heat-Newton convolution
/// H(x,t) = (N * K(.,t))(x) = erf(|x|/(2 sqrt t)) / (4 pi |x|),
/// assembled into Cartesian tensors up to third order.
#[derive(Debug, Clone, Copy)]
pub struct HeatNewtonJet {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
    pub third: [[[f64; 3]; 3]; 3],
}

// erf(z)/z Taylor coefficients: (2/sqrt(pi)) (-1)^n / (n! (2n+1)) as q^n, q = z^2.
const ERFZ_COEFF: [f64; 9] = [
    1.0,
    -1.0 / 3.0,
    1.0 / 10.0,
    -1.0 / 42.0,
    1.0 / 216.0,
    -1.0 / 1320.0,
    1.0 / 9360.0,
    -1.0 / 75600.0,
    1.0 / 685440.0,
];

pub fn heat_newton_jet(x: &Point3, t: f64) -> Result<HeatNewtonJet> {
    if !(t > 0.0) {
        return Err(KernelError::InvalidParameter(format!(
            "heat-Newton convolution needs t > 0, got {t}"
        )));
    }
    let a = 0.5 / t.sqrt();
    let r = x.norm();
    let z = a * r;

    if z < 1e-2 {
        // Series branch in q = (a r)^2; regular at x = 0 and free of the
        // erf/r cancellation that degrades the closed form for small z.
        let q = z * z;
        let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
        let mut qp = 1.0; // q^n
        let mut qp1 = 0.0; // q^{n-1}
        let mut qp2 = 0.0; // q^{n-2}
        let mut qp3 = 0.0; // q^{n-3}
        for (n, &cn) in ERFZ_COEFF.iter().enumerate() {
            let nf = n as f64;
            s0 += cn * qp;
            s1 += cn * nf * qp1;
            s2 += cn * nf * (nf - 1.0) * qp2;
            s3 += cn * nf * (nf - 1.0) * (nf - 2.0) * qp3;
            qp3 = qp2;
            qp2 = qp1;
            qp1 = qp;
            qp *= q;
        }
        let kappa = a / (2.0 * std::f64::consts::PI.powf(1.5));
        let a2 = a * a;
        let mut jet = HeatNewtonJet {
            value: kappa * s0,
            grad: [0.0; 3],
            hess: [[0.0; 3]; 3],
            third: [[[0.0; 3]; 3]; 3],
        };
        for j in 0..3 {
            jet.grad[j] = kappa * s1 * 2.0 * a2 * x[j];
        }
        for j in 0..3 {
            for k in 0..3 {
                let d = if j == k { 1.0 } else { 0.0 };
                jet.hess[j][k] =
                    kappa * (s2 * 4.0 * a2 * a2 * (x[j] * x[k]) + s1 * 2.0 * a2 * d);
            }
        }
        for l in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let d_jk = if j == k { 1.0 } else { 0.0 };
                    let d_jl = if j == l { 1.0 } else { 0.0 };
                    let d_kl = if k == l { 1.0 } else { 0.0 };
                    jet.third[l][j][k] = kappa
                        * (s3 * 8.0 * a2 * a2 * a2 * x[j] * x[k] * x[l]
                            + s2 * 4.0 * a2 * a2 * (d_jk * x[l] + d_jl * x[k] + d_kl * x[j]));
                }
            }
        }
        return Ok(jet);
    }

    // Radial closed form. For z >= 27 the Gaussian underflows and erf
    // saturates: the convolution equals the Newton potential in f64.
    let (e, d) = if z >= 27.0 {
        (1.0, 0.0)
    } else {
        (libm::erf(z), 2.0 * a / std::f64::consts::PI.sqrt() * (-z * z).exp())
    };
    let g0 = e / (FOUR_PI * r);
    let g1 = (d - e / r) / (FOUR_PI * r);
    let g2 = (-2.0 * a * a * d - 2.0 * d / (r * r) + 2.0 * e / (r * r * r)) / FOUR_PI;
    let g3 = (4.0 * a * a * a * a * r * d + 4.0 * a * a * d / r + 6.0 * d / (r * r * r)
        - 6.0 * e / (r * r * r * r))
        / FOUR_PI;
    Ok(radial_to_cartesian(x, r, g0, g1, g2, g3))
}

fn radial_to_cartesian(x: &Point3, r: f64, g0: f64, g1: f64, g2: f64, g3: f64) -> HeatNewtonJet {
    let n = x.scale(1.0 / r);
    let mut jet = HeatNewtonJet {
        value: g0,
        grad: [0.0; 3],
        hess: [[0.0; 3]; 3],
        third: [[[0.0; 3]; 3]; 3],
    };
    for j in 0..3 {
        jet.grad[j] = g1 * n[j];
    }
    for j in 0..3 {
        for k in 0..3 {
            let d = if j == k { 1.0 } else { 0.0 };
            jet.hess[j][k] = g2 * (n[j] * n[k]) + g1 / r * (d - n[j] * n[k]);
        }
    }
    let c = g2 / r - g1 / (r * r);
    for l in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let d_jk = if j == k { 1.0 } else { 0.0 };
                let d_jl = if j == l { 1.0 } else { 0.0 };
                let d_kl = if k == l { 1.0 } else { 0.0 };
                let sym = d_jl * n[k] + d_kl * n[j] + d_jk * n[l];
                jet.third[l][j][k] =
                    g3 * n[j] * n[k] * n[l] + c * (sym - 3.0 * n[j] * n[k] * n[l]);
            }
        }
    }
    jet
}

/// Heat-Newton convolution derivative of order <= 2.
pub fn heat_newton(x: &Point3, t: f64, alpha: MultiIndex) -> Result<f64> {
    let jet = heat_newton_jet(x, t)?;
    match alpha.axes().as_slice() {
        [] => Ok(jet.value),
        [j] => Ok(jet.grad[*j]),
        [j, k] => Ok(jet.hess[*j][*k]),
        _ => unreachable!(),
    }
}

/// Heat-Newton convolution with gradient/Hessian filled up to `order`.
pub fn heat_newton_eval(x: &Point3, t: f64, order: u8) -> Result<ScalarKernelValue> {
    let jet = heat_newton_jet(x, t)?;
    Ok(ScalarKernelValue {
        value: jet.value,
        gradient: if order >= 1 { Some(Point3(jet.grad)) } else { None },
        hessian: if order >= 2 { Some(Mat3(jet.hess)) } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_scalar, sphere_product_rule};
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn params(tau: f64, rho: f64) -> PhysParams {
        PhysParams::new(tau, rho).unwrap()
    }

    #[test]
    fn newton_value_and_scaling() {
        let x = Point3::new(1.0, 0.0, 0.0);
        assert!((newton(&x).unwrap() - 1.0 / FOUR_PI).abs() < 1e-17);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let y = Point3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(0.1..5.0),
            );
            let n1 = newton(&y).unwrap();
            let n2 = newton(&y.scale(2.0)).unwrap();
            assert!((n2 - 0.5 * n1).abs() <= 1e-15 * n1);
        }
        assert_eq!(newton(&Point3::ZERO), Err(KernelError::SingularPoint));
    }

    #[test]
    fn newton_derivatives_match_finite_differences() {
        let x = Point3::new(0.7, -1.1, 0.4);
        let h = 1e-5;
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fd = (newton(&xp).unwrap() - newton(&xm).unwrap()) / (2.0 * h);
            let an = newton_deriv(&x, MultiIndex::unit(j)).unwrap();
            assert!((an - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn oseen_scalar_examples() {
        let p = params(2.0, 1.0);
        // downstream axis: the exponential factor is 1
        for r in [0.5, 1.0, 7.0] {
            let x = Point3::new(r, 0.0, 0.0);
            assert_eq!(oseen_scalar(&x, &p).unwrap(), newton(&x).unwrap());
        }
        // tau = 2, x = (0,1,0): exponent -tau(|x|-x1)/2 = -1
        let x = Point3::new(0.0, 1.0, 0.0);
        let expect = (-1.0f64).exp() / FOUR_PI;
        assert!((oseen_scalar(&x, &p).unwrap() - expect).abs() < 1e-16);

        // 0 < O(x) <= N(x) everywhere
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let y = Point3::new(
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
            );
            if y.norm() < 1e-3 {
                continue;
            }
            let o = oseen_scalar(&y, &p).unwrap();
            assert!(o > 0.0 && o <= newton(&y).unwrap() * (1.0 + 1e-15));
        }
    }

    #[test]
    fn oseen_resolvent_examples() {
        let p = params(1.0, 1.0);
        // lambda = 3/4: sqrt(3/4 + 1/4) = 1, x = (0,0,1) has x1 = 0
        let x = Point3::new(0.0, 0.0, 1.0);
        let expect = (-1.0f64).exp() / FOUR_PI;
        assert!((oseen_resolvent_scalar(&x, 0.75, &p).unwrap() - expect).abs() < 1e-16);

        // lambda -> 0 limit recovers the scalar Oseen kernel
        let y = Point3::new(-1.0, 2.0, 0.5);
        let lim = oseen_resolvent_scalar(&y, 1e-13, &p).unwrap();
        assert!((lim - oseen_scalar(&y, &p).unwrap()).abs() < 1e-10);

        // monotone nonincreasing in lambda
        let mut prev = f64::INFINITY;
        for lam in [0.1, 0.5, 1.0, 4.0, 20.0] {
            let v = oseen_resolvent_scalar(&y, lam, &p).unwrap();
            assert!(v <= prev);
            prev = v;
        }

        // downstream value dominates upstream at mirrored points
        for lam in [0.2, 1.0, 5.0] {
            let d = oseen_resolvent_scalar(&Point3::new(1.0, 0.0, 0.0), lam, &p).unwrap();
            let u = oseen_resolvent_scalar(&Point3::new(-1.0, 0.0, 0.0), lam, &p).unwrap();
            assert!(d >= u);
        }

        assert!(oseen_resolvent_scalar(&y, 0.0, &p).is_err());
        assert!(oseen_resolvent_scalar(&y, -1.0, &p).is_err());
    }

    #[test]
    fn heat_kernel_examples() {
        let a0 = MultiIndex::ZERO;
        // (4 pi t)^{-3/2} = 1 at t = 1/(4 pi)
        let t = 1.0 / FOUR_PI;
        assert!((heat_kernel(&Point3::ZERO, t, a0, 0).unwrap() - 1.0).abs() < 1e-14);

        // normalization: int K dx = int_0^inf K(r) 4 pi r^2 dr = 1
        for t in [0.1, 1.0, 10.0] {
            let f = |r: f64| {
                heat_kernel(&Point3::new(r, 0.0, 0.0), t, a0, 0).unwrap() * FOUR_PI * r * r
            };
            let hi = 40.0 * t.sqrt();
            let (mass, _) = integrate_scalar(f, 0.0, hi, 1e-12, 1e-12).unwrap();
            assert!((mass - 1.0).abs() < 1e-8, "t={t} mass={mass}");
        }

        // d_1 K vs finite differences at (1,0,0), t = 1
        let x = Point3::new(1.0, 0.0, 0.0);
        let h = 1e-5;
        let fd = (heat_kernel(&Point3::new(1.0 + h, 0.0, 0.0), 1.0, a0, 0).unwrap()
            - heat_kernel(&Point3::new(1.0 - h, 0.0, 0.0), 1.0, a0, 0).unwrap())
            / (2.0 * h);
        let an = heat_kernel(&x, 1.0, MultiIndex::unit(0), 0).unwrap();
        assert!((an - fd).abs() < 1e-6);

        assert!(heat_kernel(&x, 0.0, a0, 0).is_err());
        assert!(heat_kernel(&x, -1.0, a0, 0).is_err());
        assert!(heat_kernel(&x, 1.0, a0, 2).is_err());
    }

    #[test]
    fn heat_kernel_second_and_time_derivatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a0 = MultiIndex::ZERO;
        for _ in 0..20 {
            let x = Point3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            let t = rng.random_range(0.2..3.0);
            let h = 1e-4;

            // heat equation: d_t K = Laplace K
            let dt = heat_kernel(&x, t, a0, 1).unwrap();
            let mut lap = 0.0;
            for j in 0..3 {
                let mut a2 = [0u8; 3];
                a2[j] = 2;
                lap += heat_kernel(&x, t, MultiIndex::new(a2[0], a2[1], a2[2]).unwrap(), 0).unwrap();
            }
            assert!((dt - lap).abs() < 1e-12 * dt.abs().max(lap.abs()).max(1e-6));

            // mixed second derivative vs finite differences
            let mixed = heat_kernel(&x, t, MultiIndex::new(1, 1, 0).unwrap(), 0).unwrap();
            let mut xpp = x;
            xpp[0] += h;
            xpp[1] += h;
            let mut xpm = x;
            xpm[0] += h;
            xpm[1] -= h;
            let mut xmp = x;
            xmp[0] -= h;
            xmp[1] += h;
            let mut xmm = x;
            xmm[0] -= h;
            xmm[1] -= h;
            let fd = (heat_kernel(&xpp, t, a0, 0).unwrap() - heat_kernel(&xpm, t, a0, 0).unwrap()
                - heat_kernel(&xmp, t, a0, 0).unwrap()
                + heat_kernel(&xmm, t, a0, 0).unwrap())
                / (4.0 * h * h);
            assert!((mixed - fd).abs() < 1e-5);

            // d_t of gradient vs finite differences in t
            let dtg = heat_kernel(&x, t, MultiIndex::unit(1), 1).unwrap();
            let fdt = (heat_kernel(&x, t + h, MultiIndex::unit(1), 0).unwrap()
                - heat_kernel(&x, t - h, MultiIndex::unit(1), 0).unwrap())
                / (2.0 * h);
            assert!((dtg - fdt).abs() < 1e-5);
        }
    }

    #[test]
    fn heat_kernel_envelope_slopes() {
        // along x = (0,r,0), t = r^2 the derivative bound gives
        // log |d^alpha K| ~ -(3 + |alpha|) log r
        for (alpha, want) in [(MultiIndex::ZERO, -3.0), (MultiIndex::unit(1), -4.0)] {
            let mut pts = Vec::new();
            for r in [2.0f64, 4.0, 8.0, 16.0, 32.0] {
                let v = heat_kernel(&Point3::new(0.0, r, 0.0), r * r, alpha, 0)
                    .unwrap()
                    .abs();
                pts.push((r.ln(), v.ln()));
            }
            let slope = fit_slope(&pts);
            assert!(
                slope <= want + 0.1,
                "alpha order {} slope {slope} vs bound {want}",
                alpha.order()
            );
        }
    }

    fn fit_slope(pts: &[(f64, f64)]) -> f64 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }

    #[test]
    fn psi_against_quadrature_oracle() {
        // defining integral, evaluated independently with the adaptive rule
        assert_eq!(psi(0.0), 0.0);
        let oracle = |r: f64| {
            integrate_scalar(
                |t| if t.abs() < 1e-14 { 1.0 } else { (1.0 - (-t).exp()) / t },
                0.0,
                r,
                1e-13,
                1e-13,
            )
            .unwrap()
            .0
        };
        // frozen from the oracle; Ein(1)
        let psi1 = psi(1.0);
        assert!((psi1 - 0.7965995992970531).abs() < 1e-13);
        assert!((psi1 - oracle(1.0)).abs() < 1e-12);

        // the exponential-integral branch is gated against the oracle on [1, 50]
        for r in [1.2, 1.5001, 2.0, 5.0, 10.0, 25.0, 50.0] {
            let o = oracle(r);
            assert!(
                (psi(r) - o).abs() < 1e-11 * o.abs().max(1.0),
                "psi({r}) = {} vs oracle {o}",
                psi(r)
            );
        }

        // negative branch against the oracle too
        for r in [-0.7, -2.0, -8.0] {
            let o = oracle(r);
            assert!((psi(r) - o).abs() < 1e-11 * o.abs().max(1.0));
        }

        assert_eq!(psi_prime(0.0), 1.0);
        // psi'(r) = (1 - e^-r)/r tested across the branch cut
        for r in [-2.0, -0.3, 0.4, 1.4999, 1.5001, 9.0] {
            let direct = (1.0 - (-r as f64).exp()) / r;
            assert!((psi_prime(r) - direct).abs() < 1e-14 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn psi_jet_internal_consistency() {
        // series vs closed forms across the branch boundary, and
        // derivatives vs finite differences of psi itself
        for r in [-1.6, -1.4, 0.0, 0.5, 1.49, 1.51, 3.0] {
            let jet = psi_jet(r);
            let h = 1e-4;
            let d1 = (psi(r + h) - psi(r - h)) / (2.0 * h);
            let d2 = (psi(r + h) - 2.0 * psi(r) + psi(r - h)) / (h * h);
            let d3 = (psi_jet(r + h).d2 - psi_jet(r - h).d2) / (2.0 * h);
            assert!((jet.d1 - d1).abs() < 1e-8, "r={r}");
            assert!((jet.d2 - d2).abs() < 1e-6, "r={r}");
            assert!((jet.d3 - d3).abs() < 1e-7, "r={r}");
        }
    }

    proptest! {
        #[test]
        fn psi_monotone_and_below_identity(a in 0.0..80.0f64, b in 0.0..80.0f64) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(psi(lo) >= 0.0);
            prop_assert!(psi(lo) <= lo + 1e-12);
            if hi > lo + 1e-9 {
                prop_assert!(psi(hi) > psi(lo));
            }
        }
    }

    #[test]
    fn phi_examples() {
        let p = params(1.0, 1.0);
        // Phi vanishes on the positive x1-axis (psi(0) = 0)
        for r in [0.3, 1.0, 12.0] {
            let v = phi(&Point3::new(r, 0.0, 0.0), &p, MultiIndex::ZERO).unwrap();
            assert_eq!(v, 0.0);
        }

        // d_1 Phi = tau^-1 (O - N) at 20 random points
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for tau in [1.0, 2.5] {
            let pp = params(tau, 1.0);
            for _ in 0..20 {
                let x = Point3::new(
                    rng.random_range(-4.0..4.0),
                    rng.random_range(-4.0..4.0),
                    rng.random_range(-4.0..4.0),
                );
                if x.norm() < 0.05 {
                    continue;
                }
                let lhs = phi(&x, &pp, MultiIndex::unit(0)).unwrap();
                let rhs = (oseen_scalar(&x, &pp).unwrap() - newton(&x).unwrap()) / tau;
                assert!(
                    (lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0),
                    "at {x:?}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn phi_derivatives_match_finite_differences() {
        let p = params(1.0, 1.0);
        let x = Point3::new(-2.0, 1.0, 1.0);
        let h = 1e-4;
        let f = |y: &Point3| phi(y, &p, MultiIndex::ZERO).unwrap();

        // gradient
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fd = (f(&xp) - f(&xm)) / (2.0 * h);
            let an = phi(&x, &p, MultiIndex::unit(j)).unwrap();
            assert!((an - fd).abs() < 1e-6);
        }

        // Hessian entries
        for j in 0..3 {
            for k in 0..3 {
                let mut idx = [0u8; 3];
                idx[j] += 1;
                idx[k] += 1;
                let an = phi(&x, &p, MultiIndex::new(idx[0], idx[1], idx[2]).unwrap()).unwrap();
                let fd = if j == k {
                    let mut xp = x;
                    let mut xm = x;
                    xp[j] += h;
                    xm[j] -= h;
                    (f(&xp) - 2.0 * f(&x) + f(&xm)) / (h * h)
                } else {
                    let (mut a, mut b, mut c, mut d) = (x, x, x, x);
                    a[j] += h;
                    a[k] += h;
                    b[j] += h;
                    b[k] -= h;
                    c[j] -= h;
                    c[k] += h;
                    d[j] -= h;
                    d[k] -= h;
                    (f(&a) - f(&b) - f(&c) + f(&d)) / (4.0 * h * h)
                };
                assert!((an - fd).abs() < 1e-6, "d_{j} d_{k} Phi: {an} vs {fd}");
            }
        }

        // derivatives at the origin are singular
        assert!(phi(&Point3::ZERO, &p, MultiIndex::unit(0)).is_err());
    }

    #[test]
    fn phi_third_derivatives_match_finite_differences() {
        let p = params(1.4, 1.0);
        let x = Point3::new(1.1, -0.7, 0.9);
        let jet = phi_jet(&x, &p).unwrap();
        let h = 1e-4;
        for l in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[l] += h;
            xm[l] -= h;
            let jp = phi_jet(&xp, &p).unwrap();
            let jm = phi_jet(&xm, &p).unwrap();
            for j in 0..3 {
                for k in 0..3 {
                    let fd = (jp.hess[j][k] - jm.hess[j][k]) / (2.0 * h);
                    assert!(
                        (jet.third[l][j][k] - fd).abs() < 1e-6,
                        "third[{l}][{j}][{k}]: {} vs {fd}",
                        jet.third[l][j][k]
                    );
                }
            }
        }
    }

    #[test]
    fn heat_newton_closed_form_against_convolution_oracle() {
        // H((1,0,0), 1) = erf(0.5)/(4 pi), independently checked by direct
        // 3D quadrature of int N(x-y) K(y,1) dy in spherical coordinates
        // around the N singularity at y = x.
        let x = Point3::new(1.0, 0.0, 0.0);
        let t = 1.0;
        let closed = heat_newton(&x, t, MultiIndex::ZERO).unwrap();
        assert!((closed - libm::erf(0.5) / FOUR_PI).abs() < 1e-16);

        let sphere = sphere_product_rule(24, 48);
        let radial = |r: f64| {
            let mut s = 0.0;
            for (dir, w) in &sphere {
                let y = Point3::new(x[0] - r * dir[0], x[1] - r * dir[1], x[2] - r * dir[2]);
                s += w * heat_kernel(&y, t, MultiIndex::ZERO, 0).unwrap();
            }
            s * r / FOUR_PI // r^2 Jacobian times N = (4 pi r)^-1
        };
        let (oracle, _) = integrate_scalar(radial, 0.0, 16.0, 1e-9, 1e-9).unwrap();
        assert!(
            (closed - oracle).abs() < 1e-6,
            "closed {closed} vs oracle {oracle}"
        );
    }

    #[test]
    fn heat_newton_limits_and_laplacian() {
        // t -> 0+ at fixed x: erf -> 1 so H -> N(x)
        let x = Point3::new(0.8, -0.4, 0.2);
        let h = heat_newton(&x, 1e-12, MultiIndex::ZERO).unwrap();
        assert!((h - newton(&x).unwrap()).abs() < 1e-14);

        // Laplace H = -K at 20 random (x, t)
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let y = Point3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let t = rng.random_range(0.05..4.0);
            let jet = heat_newton_jet(&y, t).unwrap();
            let lap = jet.hess[0][0] + jet.hess[1][1] + jet.hess[2][2];
            let k = heat_kernel(&y, t, MultiIndex::ZERO, 0).unwrap();
            assert!((lap + k).abs() < 1e-8, "Laplace H = {lap}, -K = {}", -k);
        }
    }

    #[test]
    fn heat_newton_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let x = Point3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let t = rng.random_range(0.1..4.0);
            if x.norm() < 0.05 {
                continue;
            }
            let jet = heat_newton_jet(&x, t).unwrap();
            let h = 1e-4;
            for j in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let fd = (heat_newton(&xp, t, MultiIndex::ZERO).unwrap()
                    - heat_newton(&xm, t, MultiIndex::ZERO).unwrap())
                    / (2.0 * h);
                assert!((jet.grad[j] - fd).abs() < 1e-6);
                let jp = heat_newton_jet(&xp, t).unwrap();
                let jm = heat_newton_jet(&xm, t).unwrap();
                for k in 0..3 {
                    let fd2 = (jp.grad[k] - jm.grad[k]) / (2.0 * h);
                    assert!((jet.hess[j][k] - fd2).abs() < 1e-6);
                    for l in 0..3 {
                        let fd3 = (jp.hess[k][l] - jm.hess[k][l]) / (2.0 * h);
                        assert!(
                            (jet.third[j][k][l] - fd3).abs() < 1e-5 * fd3.abs().max(1.0),
                            "third at {x:?}, t={t}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn heat_newton_series_branch_agrees_with_closed_form() {
        // straddle the z = 1e-2 branch threshold; the closed form is still
        // accurate to ~1e-12 relative there
        let t = 1.0;
        for r in [0.0195, 0.0201] {
            let x = Point3::new(r / 3.0f64.sqrt(), r / 3.0f64.sqrt(), r / 3.0f64.sqrt());
            let jet = heat_newton_jet(&x, t).unwrap();
            // reference: evaluate erf-based formulas directly
            let a = 0.5 / t.sqrt();
            let rr = x.norm();
            let e = libm::erf(a * rr);
            let direct = e / (FOUR_PI * rr);
            assert!(
                (jet.value - direct).abs() < 1e-11 * direct,
                "r={r}: {} vs {direct}",
                jet.value
            );
        }
    }

    #[test]
    fn heat_newton_rejects_bad_time() {
        let x = Point3::new(1.0, 0.0, 0.0);
        assert!(heat_newton(&x, 0.0, MultiIndex::ZERO).is_err());
        assert!(heat_newton(&x, -2.0, MultiIndex::ZERO).is_err());
    }
}
