//! Exact rational scalars.
//!
//! [`Scalar`] is an arbitrary-precision rational kept in lowest terms with a
//! positive denominator, so structural equality is mathematical equality.
//! Every quantity in the crate (q, t, the parameters, the dependent
//! variables) lives here.

use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use malachite_base::num::arithmetic::traits::{Abs, CheckedSqrt, Pow, Reciprocal};
use malachite_base::num::basic::traits::{One, Zero};
use malachite_base::num::logic::traits::SignificantBits;
use malachite_nz::integer::Integer;
use malachite_nz::natural::Natural;
use malachite_q::Rational;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scalar(Rational);

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar(Rational::ZERO)
    }

    pub fn one() -> Self {
        Scalar(Rational::ONE)
    }

    pub fn from_int(n: i64) -> Self {
        Scalar(Rational::from(n))
    }

    /// `num/den`, reduced. Fails on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(Scalar(Rational::from_signeds(num, den)))
    }

    pub fn from_integers(num: Integer, den: Integer) -> Result<Self> {
        if den == 0u32 {
            return Err(Error::DivisionByZero);
        }
        Ok(Scalar(Rational::from_integers(num, den)))
    }

    /// Signed numerator.
    pub fn numer(&self) -> Integer {
        let n = Integer::from(self.0.numerator_ref());
        if self.is_negative() {
            -n
        } else {
            n
        }
    }

    /// Denominator, always positive.
    pub fn denom(&self) -> &Natural {
        self.0.denominator_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.0 == 0u32
    }

    pub fn is_one(&self) -> bool {
        self.0 == 1u32
    }

    pub fn is_negative(&self) -> bool {
        self.0 < 0u32
    }

    pub fn is_integer(&self) -> bool {
        *self.denom() == 1u32
    }

    pub fn abs(&self) -> Self {
        Scalar((&self.0).abs())
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Scalar((&self.0).reciprocal()))
    }

    pub fn checked_div(&self, rhs: &Scalar) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Scalar(&self.0 / &rhs.0))
    }

    /// Integer power; negative exponents need a nonzero base.
    pub fn pow_int(&self, exp: i64) -> Result<Self> {
        if exp < 0 && self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Scalar((&self.0).pow(exp)))
    }

    /// Power with a nonnegative exponent; never fails.
    pub fn powu(&self, exp: u32) -> Self {
        Scalar((&self.0).pow(u64::from(exp)))
    }

    /// Exact square root when both numerator and denominator are perfect squares.
    pub fn sqrt_exact(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let rn = self.0.numerator_ref().checked_sqrt()?;
        let rd = self.0.denominator_ref().checked_sqrt()?;
        Some(Scalar(Rational::from_naturals(rn, rd)))
    }

    /// Bit size of the larger of numerator and denominator.
    pub fn bits(&self) -> u64 {
        self.0
            .numerator_ref()
            .significant_bits()
            .max(self.0.denominator_ref().significant_bits())
    }

    pub fn as_rational(&self) -> &Rational {
        &self.0
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar(r)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::from_int(n)
    }
}

impl From<i32> for Scalar {
    fn from(n: i32) -> Self {
        Scalar::from_int(n as i64)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Scalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |part: &str| {
            Integer::from_str(part.trim()).map_err(|_| Error::Parse(format!("{s:?}: not an integer")))
        };
        match s.split_once('/') {
            Some((p, q)) => Scalar::from_integers(parse(p)?, parse(q)?),
            None => Ok(Scalar(Rational::from(parse(s)?))),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $assign_trait:ident, $assign_method:ident) => {
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                Scalar(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                Scalar(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $trait<Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                Scalar((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'b Scalar) -> Scalar {
                Scalar((&self.0).$method(&rhs.0))
            }
        }
        impl $assign_trait<Scalar> for Scalar {
            fn $assign_method(&mut self, rhs: Scalar) {
                self.0.$assign_method(rhs.0);
            }
        }
        impl<'a> $assign_trait<&'a Scalar> for Scalar {
            fn $assign_method(&mut self, rhs: &'a Scalar) {
                self.0.$assign_method(&rhs.0);
            }
        }
    };
}

forward_binop!(Add, add, AddAssign, add_assign);
forward_binop!(Sub, sub, SubAssign, sub_assign);
forward_binop!(Mul, mul, MulAssign, mul_assign);
// Division panics on a zero divisor. Fallible call sites
// use `checked_div` / `inv`.
forward_binop!(Div, div, DivAssign, div_assign);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-&self.0)
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Scalar> for Scalar {
    fn sum<I: Iterator<Item = &'a Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

impl Product for Scalar {
    fn product<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::one(), |acc, x| acc * x)
    }
}

impl<'a> Product<&'a Scalar> for Scalar {
    fn product<I: Iterator<Item = &'a Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::one(), |acc, x| acc * x)
    }
}

/// Binary operations exposed through [`scalar_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Raise `x` to the integer value of `y`; `y` must be an integer.
    PowInt,
}

pub fn scalar_arith(x: &Scalar, y: &Scalar, op: ScalarOp) -> Result<Scalar> {
    match op {
        ScalarOp::Add => Ok(x + y),
        ScalarOp::Sub => Ok(x - y),
        ScalarOp::Mul => Ok(x * y),
        ScalarOp::Div => x.checked_div(y),
        ScalarOp::PowInt => {
            if !y.is_integer() {
                return Err(Error::InvalidParams(format!("non-integer exponent {y}")));
            }
            let e = i64::try_from(&y.numer())
                .map_err(|_| Error::InvalidParams(format!("exponent {y} out of range")))?;
            x.pow_int(e)
        }
    }
}

/// Shorthand for building literal scalars in code and tests.
pub fn sc(num: i64, den: i64) -> Scalar {
    Scalar::ratio(num, den).expect("nonzero denominator")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_fraction_addition() {
        assert_eq!(scalar_arith(&sc(1, 2), &sc(1, 3), ScalarOp::Add).unwrap(), sc(5, 6));
    }

    #[test]
    fn multiplicative_identity() {
        let x = sc(-17, 23);
        assert_eq!(scalar_arith(&x, &Scalar::one(), ScalarOp::Mul).unwrap(), x);
    }

    #[test]
    fn inverse_square() {
        let r = scalar_arith(&sc(2, 3), &Scalar::from_int(-2), ScalarOp::PowInt).unwrap();
        assert_eq!(r, sc(9, 4));
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert_eq!(
            scalar_arith(&sc(1, 2), &Scalar::zero(), ScalarOp::Div),
            Err(Error::DivisionByZero)
        );
        assert_eq!(Scalar::zero().pow_int(-1), Err(Error::DivisionByZero));
        assert_eq!(Scalar::ratio(1, 0), Err(Error::DivisionByZero));
    }

    #[test]
    fn canonical_form() {
        let x = sc(6, -4);
        assert_eq!(x.numer(), Integer::from(-3));
        assert_eq!(*x.denom(), 2u32);
        assert_eq!(sc(0, -5), Scalar::zero());
        assert_eq!(*Scalar::zero().denom(), 1u32);
    }

    #[test]
    fn string_round_trip() {
        assert_eq!(sc(-3, 7).to_string(), "-3/7");
        assert_eq!("-3/7".parse::<Scalar>().unwrap(), sc(-3, 7));
        assert_eq!("12".parse::<Scalar>().unwrap(), Scalar::from_int(12));
        assert_eq!(" 4 / -6 ".parse::<Scalar>().unwrap(), sc(-2, 3));
        assert!("1/0".parse::<Scalar>().is_err());
        assert!("x/2".parse::<Scalar>().is_err());
        let json = serde_json::to_string(&sc(5, 1)).unwrap();
        assert_eq!(json, "\"5/1\"");
    }

    #[test]
    fn exact_square_roots() {
        assert_eq!(sc(49, 16).sqrt_exact(), Some(sc(7, 4)));
        assert_eq!(sc(2, 1).sqrt_exact(), None);
        assert_eq!(sc(-4, 1).sqrt_exact(), None);
    }

    fn arb_scalar() -> impl Strategy<Value = Scalar> {
        (-1000i64..1000, 1i64..1000).prop_map(|(p, q)| sc(p, q))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn field_axioms(x in arb_scalar(), y in arb_scalar(), z in arb_scalar()) {
            prop_assert_eq!((&x + &y) + &z, &x + (&y + &z));
            prop_assert_eq!(&x * (&y + &z), &x * &y + &x * &z);
            prop_assert_eq!(&x * &y, &y * &x);
            if !y.is_zero() {
                prop_assert_eq!((&x / &y) * &y, x.clone());
            }
        }

        #[test]
        fn serde_round_trip(x in arb_scalar()) {
            let s = serde_json::to_string(&x).unwrap();
            prop_assert_eq!(serde_json::from_str::<Scalar>(&s).unwrap(), x);
        }
    }
}
