//! Truncated formal power series in `t` with exact coefficients.
//!
//! A [`TruncSeries`] of order `N` stores `c_0..=c_N` and all arithmetic is
//! performed modulo `t^{N+1}`. Orders are never promoted implicitly: mixing
//! two orders is an [`Error::OrderMismatch`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncSeries {
    coeffs: Vec<Scalar>,
}

impl TruncSeries {
    pub fn zero(order: usize) -> Self {
        TruncSeries {
            coeffs: vec![Scalar::zero(); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = Scalar::one();
        s
    }

    pub fn constant(c: Scalar, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// Builds a series from explicit coefficients; missing tail entries are
    /// zero and entries beyond the order are dropped.
    pub fn from_coeffs(mut coeffs: Vec<Scalar>, order: usize) -> Self {
        coeffs.resize(order + 1, Scalar::zero());
        TruncSeries { coeffs }
    }

    /// Expansion of `1/(1 - r t)`.
    pub fn geometric(ratio: &Scalar, order: usize) -> Self {
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut c = Scalar::one();
        for _ in 0..=order {
            coeffs.push(c.clone());
            c *= ratio;
        }
        TruncSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &Scalar {
        &self.coeffs[k]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_zero)
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order() != other.order() {
            return Err(Error::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(TruncSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(TruncSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let n = self.order();
        let mut out = vec![Scalar::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs[..=n - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(TruncSeries { coeffs: out })
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        TruncSeries {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Multiplicative inverse modulo `t^{N+1}`; requires `c_0 != 0`.
    pub fn recip(&self) -> Result<Self> {
        let c0_inv = self.coeffs[0].inv().map_err(|_| Error::NonInvertibleSeries)?;
        let n = self.order();
        let mut out: Vec<Scalar> = Vec::with_capacity(n + 1);
        out.push(c0_inv.clone());
        for k in 1..=n {
            let acc: Scalar = (1..=k).map(|j| &self.coeffs[j] * &out[k - j]).sum();
            out.push(-(acc * &c0_inv));
        }
        Ok(TruncSeries { coeffs: out })
    }

    /// The q-dilation `t -> q t`: `c_k -> q^k c_k`.
    pub fn dilate_q(&self, q: &Scalar) -> Self {
        let mut pow = Scalar::one();
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let v = c * &pow;
                pow *= q;
                v
            })
            .collect();
        TruncSeries { coeffs }
    }

    /// Index of the first coefficient where the two series differ.
    pub fn first_difference(&self, other: &Self) -> Result<Option<usize>> {
        self.check_order(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).position(|(a, b)| a != b))
    }
}

/// Operations exposed through [`series_arith`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeriesOp {
    Add,
    Mul,
    /// Reciprocal of the first argument; the second is ignored.
    Recip,
    /// q-dilation of the first argument.
    DilateQ(Scalar),
}

pub fn series_arith(a: &TruncSeries, b: &TruncSeries, op: SeriesOp) -> Result<TruncSeries> {
    match op {
        SeriesOp::Add => a.add(b),
        SeriesOp::Mul => a.mul(b),
        SeriesOp::Recip => {
            a.check_order(b)?;
            a.recip()
        }
        SeriesOp::DilateQ(q) => {
            a.check_order(b)?;
            Ok(a.dilate_q(&q))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::sc;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<Scalar> {
        v.iter().map(|&x| Scalar::from_int(x)).collect()
    }

    #[test]
    fn reciprocal_of_one_minus_qt_is_geometric() {
        let q = sc(3, 5);
        let a = TruncSeries::from_coeffs(vec![Scalar::one(), -q.clone()], 6);
        let r = series_arith(&a, &TruncSeries::zero(6), SeriesOp::Recip).unwrap();
        assert_eq!(r, TruncSeries::geometric(&q, 6));
        for k in 0..=6 {
            assert_eq!(r.coeff(k), &q.powu(k as u32));
        }
    }

    #[test]
    fn dilation_definition() {
        let a = TruncSeries::from_coeffs(ints(&[7, -2, 5]), 2);
        let d = series_arith(&a, &a, SeriesOp::DilateQ(Scalar::from_int(4))).unwrap();
        assert_eq!(d.coeffs(), ints(&[7, -8, 80]).as_slice());
    }

    #[test]
    fn difference_of_squares() {
        let a = TruncSeries::from_coeffs(ints(&[1, 1, 0]), 2);
        let b = TruncSeries::from_coeffs(ints(&[1, -1, 0]), 2);
        let p = series_arith(&a, &b, SeriesOp::Mul).unwrap();
        assert_eq!(p.coeffs(), ints(&[1, 0, -1]).as_slice());
    }

    #[test]
    fn order_mismatch_is_an_error() {
        let a = TruncSeries::one(3);
        let b = TruncSeries::one(4);
        assert_eq!(a.add(&b), Err(Error::OrderMismatch { left: 3, right: 4 }));
        assert!(a.mul(&b).is_err());
        assert!(series_arith(&a, &b, SeriesOp::Recip).is_err());
    }

    #[test]
    fn zero_constant_term_not_invertible() {
        let a = TruncSeries::from_coeffs(ints(&[0, 1]), 3);
        assert_eq!(a.recip(), Err(Error::NonInvertibleSeries));
    }

    fn arb_series(order: usize) -> impl Strategy<Value = TruncSeries> {
        prop::collection::vec((-20i64..20, 1i64..20), order + 1).prop_map(move |v| {
            TruncSeries::from_coeffs(v.into_iter().map(|(p, q)| sc(p, q)).collect(), order)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reciprocal_is_inverse(a in arb_series(8)) {
            prop_assume!(!a.coeff(0).is_zero());
            let r = a.recip().unwrap();
            prop_assert_eq!(a.mul(&r).unwrap(), TruncSeries::one(8));
        }

        #[test]
        fn dilation_is_multiplicative(a in arb_series(8), b in arb_series(8), p in -9i64..9, d in 1i64..9) {
            let q = sc(p, d);
            let lhs = a.mul(&b).unwrap().dilate_q(&q);
            let rhs = a.dilate_q(&q).mul(&b.dilate_q(&q)).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
