//! Lax pair of the xy system and its compatibility residual.
//!
//! With `Ψ(z/q, t) = M(z, t) Ψ(z, t)` and `Ψ(z, t/q) = B(z, t) Ψ(z, t)`, computing
//! `Ψ(z/q, t/q)` both ways gives `M(z, t/q) B(z, t) = B(z/q, t) M(z, t)`; the
//! residual below is the difference of the two sides.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{Params, XYFrame};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaxMatrices {
    pub m: Matrix,
    pub b: Matrix,
    pub z: Scalar,
    pub t: Scalar,
}

/// `phi_0..phi_{2n+1}`: `phi_{2i-2} = x_{i-1} - x_i`, `phi_{2i-1} = y_{i-1} - y_i`.
pub fn phi(frame: &XYFrame, p: &Params) -> Vec<Scalar> {
    let n = p.n();
    let mut out = Vec::with_capacity(2 * n + 2);
    for i in 1..=n + 1 {
        out.push(frame.x_at(i - 1, p) - frame.x_at(i, p));
        out.push(frame.y_at(i - 1, p) - frame.y_at(i, p));
    }
    out
}

/// The spectral matrix `M(z, t)`.
pub fn build_m(frame: &XYFrame, p: &Params, z: &Scalar) -> Matrix {
    let size = 2 * p.n() + 2;
    let phi = phi(frame, p);
    let mut m = Matrix::zeros(size, size);
    for r in 0..size {
        m[(r, r)] = if r % 2 == 0 { p.a(r / 2 + 1).clone() } else { p.b(r / 2 + 1) };
        if r + 1 < size {
            m[(r, r + 1)] = phi[r + 1].clone();
        }
        if r + 2 < size {
            m[(r, r + 2)] = -Scalar::one();
        }
    }
    m[(size - 2, 0)] = -(p.t() * z);
    m[(size - 1, 0)] = &phi[0] * z;
    m[(size - 1, 1)] = -z.clone();
    m
}

/// The deformation matrix `B(z, t)`; the second superdiagonal is `-1` on even
/// rows only.
pub fn build_b(frame: &XYFrame, p: &Params, z: &Scalar) -> Result<Matrix> {
    let n = p.n();
    let size = 2 * n + 2;
    // u_1..u_{2n+2} and v_0..v_{2n+1}, stored 0-based as u[k-1], v[k].
    let mut u = Vec::with_capacity(size);
    let mut v = vec![Scalar::zero(); size];
    v[0] = p.t() * &frame.xprev[n];
    for i in 1..=n + 1 {
        let xl = &frame.xprev[i - 1];
        let den = Scalar::one() + xl * frame.y_at(i - 1, p);
        u.push(p.a(i).checked_div(&den).map_err(|_| Error::DegenerateFrame {
            quantity: format!("1 + x̲_{i} y_{}", i - 1),
        })?);
        u.push(Scalar::one() + xl * frame.y_at(i, p));
        v[2 * i - 1] = -frame.y_at(i, p);
        if i <= n {
            v[2 * i] = xl.clone();
        }
    }
    let mut b = Matrix::zeros(size, size);
    for r in 0..size {
        b[(r, r)] = u[r].clone();
        if r + 1 < size {
            b[(r, r + 1)] = v[r + 1].clone();
        }
        if r + 2 < size && r % 2 == 0 {
            b[(r, r + 2)] = -Scalar::one();
        }
    }
    b[(size - 2, 0)] = -(p.t() * z);
    b[(size - 1, 0)] = &v[0] * z;
    Ok(b)
}

pub fn build_lax(frame: &XYFrame, p: &Params, z: &Scalar) -> Result<LaxMatrices> {
    Ok(LaxMatrices {
        m: build_m(frame, p, z),
        b: build_b(frame, p, z)?,
        z: z.clone(),
        t: p.t().clone(),
    })
}

/// `M(z, t/q) B(z, t) - B(z/q, t) M(z, t)`, where `frame_prev` is the frame
/// at `t/q` and `p` carries the time `t` of `frame_t`.
pub fn lax_residual(frame_t: &XYFrame, frame_prev: &XYFrame, p: &Params, z: &Scalar) -> Result<Matrix> {
    let prev = p.with_t(p.t() / p.q());
    let lhs = build_m(frame_prev, &prev, z).mul(&build_b(frame_t, p, z)?);
    let rhs = build_b(frame_t, p, &(z / p.q()))?.mul(&build_m(frame_t, p, z));
    Ok(lhs.sub(&rhs))
}

/// `det M(z) = c_0 + c_1 z + c_2 z^2`, fitted at `z = 0, 1, -1` and
/// confirmed at `z = 2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetProfile {
    pub coeffs: [Scalar; 3],
    pub degree_at_most_two: bool,
}

pub fn det_m_profile(frame: &XYFrame, p: &Params) -> DetProfile {
    let det_at = |z: i64| build_m(frame, p, &Scalar::from_int(z)).det();
    let (d0, d1, dm1, d2) = (det_at(0), det_at(1), det_at(-1), det_at(2));
    let two = Scalar::from_int(2);
    let c2 = (&d1 + &dm1 - &two * &d0) / &two;
    let c1 = (&d1 - &dm1) / &two;
    let fitted = &d0 + &two * &c1 + Scalar::from_int(4) * &c2;
    DetProfile {
        degree_at_most_two: fitted == d2,
        coeffs: [d0, c1, c2],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::xy_to_fg;
    use crate::dynamics::Snapshot;
    use crate::model::{rng_for, sample_frame, sample_params, DEFAULT_SAMPLE_BOUND};
    use crate::scalar::sc;

    fn orbit_pair(n: usize, seed: u64) -> (Snapshot, Snapshot) {
        let p = sample_params(n, seed).unwrap();
        let mut rng = rng_for(seed, 1);
        let fr = sample_frame(&p, &mut rng, DEFAULT_SAMPLE_BOUND).unwrap();
        let s = Snapshot::new(p.clone(), xy_to_fg(&fr, &p).unwrap());
        let next = s.forward().unwrap();
        (s, next)
    }

    #[test]
    fn corner_entries_n1() {
        let (s, _) = orbit_pair(1, 0);
        let fr = s.frame().unwrap();
        let z = sc(3, 7);
        let lax = build_lax(&fr, &s.params, &z).unwrap();
        let ph = phi(&fr, &s.params);
        assert_eq!(lax.m.rows(), 4);
        assert_eq!(lax.m[(2, 0)], -(s.params.t() * &z));
        assert_eq!(lax.m[(3, 0)], &ph[0] * &z);
        assert_eq!(lax.m[(3, 1)], -z.clone());
        assert_eq!(lax.b[(1, 3)], Scalar::zero());
        assert_eq!(lax.b[(0, 2)], -Scalar::one());
        assert_eq!(lax.b[(1, 1)], Scalar::one() + &fr.xprev[0] * &fr.y[0]);
    }

    #[test]
    fn determinant_at_zero() {
        for n in 1..=3 {
            let (s, _) = orbit_pair(n, 2);
            let fr = s.frame().unwrap();
            let prod: Scalar = (1..=n + 1).map(|i| s.params.a(i) * s.params.b(i)).product();
            assert_eq!(build_m(&fr, &s.params, &Scalar::zero()).det(), prod);
            let profile = det_m_profile(&fr, &s.params);
            assert!(profile.degree_at_most_two);
            assert_eq!(profile.coeffs[0], prod);
        }
    }

    #[test]
    fn compatibility_on_orbit() {
        for n in 1..=3 {
            let (s, next) = orbit_pair(n, 5);
            let (prev, cur) = (s.frame().unwrap(), next.frame().unwrap());
            assert_eq!(prev.x, cur.xprev);
            for z in [sc(3, 7), sc(-2, 1), sc(5, 3)] {
                assert!(lax_residual(&cur, &prev, &next.params, &z).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn perturbation_and_ordering_detected() {
        let (s, next) = orbit_pair(1, 6);
        let (prev, mut cur) = (s.frame().unwrap(), next.frame().unwrap());
        let z = sc(2, 5);
        let p = &next.params;
        let swapped = build_b(&cur, p, &z)
            .unwrap()
            .mul(&build_m(&cur, p, &z))
            .sub(&build_m(&prev, &s.params, &z).mul(&build_b(&cur, p, &(&z / p.q())).unwrap()));
        assert!(!swapped.is_zero());
        cur.y[0] += Scalar::one();
        assert!(!lax_residual(&cur, &prev, p, &z).unwrap().is_zero());
    }
}
