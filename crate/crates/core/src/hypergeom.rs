//! q-Pochhammer symbols, the `{n+1}φ{n}` series and the hypergeometric
//! particular solution of the linear system
//! `x(qt) = (A_0 + A_1/(1 - qt)) x(t)`.
//!
//! The solution has the form `x = t^{λ} φ(t)` with `q^{λ} = a_1` and `φ` a
//! vector of power series. Since `(qt)^{λ} = a_1 t^{λ}`, the system becomes
//! the rational identity `a_1 φ(qt) = (A_0 + A_1/(1 - qt)) φ(t)`, which is
//! checked coefficientwise. The exponent `λ = -log_q a_1` does not work: at
//! degree 0 it would need `1/a_1` to be an eigenvalue of `A_0 + A_1`, whose
//! eigenvalues are `a_1..a_{n+1}`. [`ExponentSign`] keeps both variants so
//! that the second can be demonstrated to fail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::Params;
use crate::scalar::Scalar;
use crate::series::TruncSeries;

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperParams {
    pub upper: Vec<Scalar>,
    pub lower: Vec<Scalar>,
    pub q: Scalar,
    /// Factor multiplying `t` in the argument.
    pub scale: Scalar,
}

/// `(α; q)_k = prod_{j<k} (1 - q^j α)`.
pub fn qpochhammer(alpha: &Scalar, q: &Scalar, k: usize) -> Scalar {
    let mut acc = Scalar::one();
    let mut qj = Scalar::one();
    for _ in 0..k {
        acc *= Scalar::one() - &qj * alpha;
        qj *= q;
    }
    acc
}

impl HyperParams {
    /// Rejects lower parameters `q^{-k}` with `k <= order`, and `q` a root of
    /// unity of small order (both make a Pochhammer denominator vanish).
    pub fn validate(&self, order: usize) -> Result<()> {
        let mut qk = Scalar::one();
        for k in 0..order {
            for (i, b) in self.lower.iter().enumerate() {
                if (&qk * b).is_one() {
                    return Err(Error::VanishingDenominator {
                        what: format!("lower parameter {} equals q^-{k}", i + 1),
                    });
                }
            }
            qk *= &self.q;
            if qk.is_one() {
                return Err(Error::VanishingDenominator {
                    what: format!("(q; q)_{}", k + 1),
                });
            }
        }
        Ok(())
    }
}

/// Coefficients `c_0..c_N` of the `{n+1}φ{n}` series in `t`, built with the
/// ratio `c_k / c_{k-1}`.
pub fn phi_series(hp: &HyperParams, order: usize) -> Result<TruncSeries> {
    hp.validate(order)?;
    let one = Scalar::one();
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut c = Scalar::one();
    coeffs.push(c.clone());
    let mut qk1 = Scalar::one();
    for _ in 1..=order {
        let qk = &qk1 * &hp.q;
        let num: Scalar = hp.upper.iter().map(|a| &one - &qk1 * a).product();
        let den: Scalar = hp.lower.iter().map(|b| &one - &qk1 * b).product::<Scalar>() * (&one - &qk);
        c = c * num / den * &hp.scale;
        coeffs.push(c.clone());
        qk1 = qk;
    }
    Ok(TruncSeries::from_coeffs(coeffs, order))
}

/// The matrices `A_0` (upper triangular, diagonal `b_i`, entries `b_j - a_j`
/// above it) and `A_1` (every row `(a_j - b_j)`).
pub fn build_qhge(p: &Params) -> (Matrix, Matrix) {
    let m = p.n() + 1;
    let mut a0 = Matrix::zeros(m, m);
    let mut a1 = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if j == i {
                a0[(i, j)] = p.b(j + 1);
            } else if j > i {
                a0[(i, j)] = p.b(j + 1) - p.a(j + 1);
            }
            a1[(i, j)] = p.a(j + 1) - p.b(j + 1);
        }
    }
    (a0, a1)
}

/// Which power of `t` multiplies the series vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentSign {
    /// `t^{log_q a_1}`: `a_1 φ(qt) = (A_0 + A_1/(1 - qt)) φ(t)`.
    Plus,
    /// `t^{-log_q a_1}`: `a_1^{-1} φ(qt) = (A_0 + A_1/(1 - qt)) φ(t)`.
    Minus,
}

impl ExponentSign {
    fn multiplier(self, a1: &Scalar) -> Scalar {
        match self {
            ExponentSign::Plus => a1.clone(),
            ExponentSign::Minus => a1.inv().expect("a_1 is nonzero"),
        }
    }
}

/// Series parameters of component `j` (1-based).
pub fn component_params(p: &Params, j: usize) -> HyperParams {
    let n = p.n();
    let (q, a1) = (p.q(), p.a(1));
    let qa1 = q * a1;
    let mut upper: Vec<Scalar> = (1..j).map(|i| &qa1 / p.b(i)).collect();
    upper.extend((j..=n + 1).map(|i| a1 / p.b(i)));
    let mut lower: Vec<Scalar> = (2..=j).map(|i| &qa1 / p.a(i)).collect();
    lower.extend((j + 1..=n + 1).map(|i| a1 / p.a(i)));
    let scale = p.q_half_pow(n as i64 + 2) * p.b_values().iter().product::<Scalar>();
    HyperParams {
        upper,
        lower,
        q: q.clone(),
        scale,
    }
}

/// `prod_{i<j} (b_i - a_1)/(a_{i+1} - a_1)`.
pub fn component_prefactor(p: &Params, j: usize) -> Result<Scalar> {
    let a1 = p.a(1);
    let mut acc = Scalar::one();
    for i in 1..j {
        let den = p.a(i + 1) - a1;
        acc = (acc * (p.b(i) - a1)).checked_div(&den).map_err(|_| Error::VanishingDenominator {
            what: format!("a_{} - a_1", i + 1),
        })?;
    }
    Ok(acc)
}

fn require_constraint(p: &Params) -> Result<()> {
    let prod: Scalar = p.a_values().iter().product();
    let target = p.q_half_pow(-(p.n() as i64));
    if prod != target {
        return Err(Error::ConstraintViolated(format!(
            "prod a_i = {prod}, expected q^(-n/2) = {target}"
        )));
    }
    Ok(())
}

/// The series vector `φ_1..φ_{n+1}` to order `order`.
pub fn particular_solution(p: &Params, order: usize) -> Result<Vec<TruncSeries>> {
    require_constraint(p)?;
    (1..=p.n() + 1)
        .map(|j| {
            let pre = component_prefactor(p, j)?;
            Ok(phi_series(&component_params(p, j), order)?.scale(&pre))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentReport {
    /// 1-based component index.
    pub component: usize,
    /// Pass/fail of the identity at each degree `0..=order`.
    pub degrees: Vec<bool>,
    pub first_failure: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperReport {
    pub n: usize,
    pub order: usize,
    pub exponent: ExponentSign,
    pub components: Vec<ComponentReport>,
    pub passed: bool,
}

/// Componentwise residuals `λ φ(qt) - (A_0 + A_1/(1 - qt)) φ(t)`.
pub fn qhge_residuals(p: &Params, phi: &[TruncSeries], sign: ExponentSign) -> Result<Vec<TruncSeries>> {
    let m = p.n() + 1;
    let order = phi[0].order();
    let (a0, a1) = build_qhge(p);
    let geom = TruncSeries::geometric(p.q(), order);
    let lambda = sign.multiplier(p.a(1));
    let damped = phi.iter().map(|c| geom.mul(c)).collect::<Result<Vec<_>>>()?;
    (0..m)
        .map(|i| {
            let mut rhs = TruncSeries::zero(order);
            for j in 0..m {
                rhs = rhs.add(&phi[j].scale(&a0[(i, j)]))?.add(&damped[j].scale(&a1[(i, j)]))?;
            }
            phi[i].dilate_q(p.q()).scale(&lambda).sub(&rhs)
        })
        .collect()
}

pub fn verify_particular_solution_with(p: &Params, order: usize, sign: ExponentSign) -> Result<HyperReport> {
    let phi = particular_solution(p, order)?;
    let residuals = qhge_residuals(p, &phi, sign)?;
    let components: Vec<ComponentReport> = residuals
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let degrees: Vec<bool> = r.coeffs().iter().map(Scalar::is_zero).collect();
            ComponentReport {
                component: i + 1,
                first_failure: degrees.iter().position(|ok| !ok),
                degrees,
            }
        })
        .collect();
    Ok(HyperReport {
        n: p.n(),
        order,
        exponent: sign,
        passed: components.iter().all(|c| c.first_failure.is_none()),
        components,
    })
}

/// Checks the particular solution with the working exponent `t^{log_q a_1}`.
pub fn verify_particular_solution(p: &Params, order: usize) -> Result<HyperReport> {
    verify_particular_solution_with(p, order, ExponentSign::Plus)
}

/// Independent check: with `y = 0` and `x = t^{log_q a_1} φ`, the first
/// q-P equation `x̄_{i-1} - x̄_i = b_{i-1} x_{i-1} - a_i x_i` (with
/// `x_0 = t x_{n+1}`) must hold coefficientwise. Returns the residual series.
pub fn first_equation_residuals(p: &Params, phi: &[TruncSeries]) -> Result<Vec<TruncSeries>> {
    let n = p.n();
    let order = phi[0].order();
    let a1 = p.a(1);
    let q = p.q();
    let shift = |s: &TruncSeries| {
        // multiplication by t
        let mut c = vec![Scalar::zero()];
        c.extend_from_slice(&s.coeffs()[..order]);
        TruncSeries::from_coeffs(c, order)
    };
    let sig: Vec<TruncSeries> = phi.iter().map(|c| c.dilate_q(q).scale(a1)).collect();
    let mut out = Vec::with_capacity(n + 1);
    for i in 1..=n + 1 {
        let (lhs_prev, rhs_prev) = if i == 1 {
            (shift(&sig[n]).scale(q), shift(&phi[n]).scale(&(q * p.b(n + 1))))
        } else {
            (sig[i - 2].clone(), phi[i - 2].scale(&p.b(i - 1)))
        };
        let lhs = lhs_prev.sub(&sig[i - 1])?;
        let rhs = rhs_prev.sub(&phi[i - 1].scale(p.a(i)))?;
        out.push(lhs.sub(&rhs)?);
    }
    Ok(out)
}
