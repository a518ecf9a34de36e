//! Scalars in the two arithmetic modes shared by every container type.
//!
//! `Rational` wraps an arbitrary-precision [`BigRational`] and is exact;
//! `Float` is plain `f64`. Arithmetic that mixes the two promotes to float,
//! so a result is exact precisely when every input on the way was rational.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Float,
}

impl Mode {
    /// Mode of a result combining values of modes `self` and `other`.
    pub fn join(self, other: Mode) -> Mode {
        if self == Mode::Rational && other == Mode::Rational {
            Mode::Rational
        } else {
            Mode::Float
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Rational => write!(f, "rational"),
            Mode::Float => write!(f, "float"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Scalar {
    Rational(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Rational(_) => Mode::Rational,
            Scalar::Float(_) => Mode::Float,
        }
    }

    pub fn zero(mode: Mode) -> Scalar {
        match mode {
            Mode::Rational => Scalar::Rational(BigRational::zero()),
            Mode::Float => Scalar::Float(0.0),
        }
    }

    pub fn one(mode: Mode) -> Scalar {
        match mode {
            Mode::Rational => Scalar::Rational(BigRational::one()),
            Mode::Float => Scalar::Float(1.0),
        }
    }

    pub fn from_int(v: i64, mode: Mode) -> Scalar {
        match mode {
            Mode::Rational => Scalar::Rational(BigRational::from_integer(BigInt::from(v))),
            Mode::Float => Scalar::Float(v as f64),
        }
    }

    pub fn from_bigint(v: &BigInt, mode: Mode) -> Scalar {
        match mode {
            Mode::Rational => Scalar::Rational(BigRational::from_integer(v.clone())),
            Mode::Float => Scalar::Float(v.to_f64().unwrap_or(f64::INFINITY)),
        }
    }

    /// Exact rational p/q. Panics if q == 0.
    pub fn ratio(p: i64, q: i64) -> Scalar {
        Scalar::Rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Float(x) => *x,
        }
    }

    /// Reinterpret in the requested mode (rational → float is lossy;
    /// float → rational is rejected since there is no canonical preimage).
    pub fn into_mode(self, mode: Mode) -> Result<Scalar> {
        match (self, mode) {
            (s @ Scalar::Rational(_), Mode::Rational) => Ok(s),
            (s @ Scalar::Float(_), Mode::Float) => Ok(s),
            (s, Mode::Float) => Ok(Scalar::Float(s.to_f64())),
            (Scalar::Float(x), Mode::Rational) => Err(Error::ModeMismatch(format!(
                "cannot reinterpret float {x} as exact rational"
            ))),
        }
    }

    pub fn as_rational(&self) -> Result<&BigRational> {
        match self {
            Scalar::Rational(r) => Ok(r),
            Scalar::Float(x) => Err(Error::ModeMismatch(format!(
                "expected rational value, found float {x}"
            ))),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Float(x) => *x == 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_negative(),
            Scalar::Float(x) => *x < 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_positive(),
            Scalar::Float(x) => *x > 0.0,
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(r.abs()),
            Scalar::Float(x) => Scalar::Float(x.abs()),
        }
    }

    /// Integer power, exact in rational mode. `0^0 = 1`.
    pub fn pow(&self, k: u32) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(BigRational::new_raw(
                r.numer().pow(k),
                r.denom().pow(k),
            )),
            Scalar::Float(x) => Scalar::Float(x.powi(k as i32)),
        }
    }

    /// e^self, always float.
    pub fn exp(&self) -> Scalar {
        Scalar::Float(self.to_f64().exp())
    }

    /// Natural log, always float. Errors on nonpositive input.
    pub fn ln(&self) -> Result<Scalar> {
        if !self.is_positive() {
            return Err(Error::NonpositiveEntry(format!(
                "ln requires a positive argument, got {self}"
            )));
        }
        Ok(Scalar::Float(self.to_f64().ln()))
    }

    /// Total order within a single mode (float uses IEEE total order).
    pub fn cmp_same_mode(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a.cmp(b),
            (a, b) => a.to_f64().total_cmp(&b.to_f64()),
        }
    }

    /// |self − other| ≤ tol, with tol applied in f64. Exact when both rational.
    pub fn close_to(&self, other: &Scalar, tol: f64) -> bool {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => {
                if tol == 0.0 {
                    a == b
                } else {
                    (a - b).abs().to_f64().map(|d| d <= tol).unwrap_or(false)
                }
            }
            (a, b) => (a.to_f64() - b.to_f64()).abs() <= tol,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Float(x) => write!(f, "{x}"),
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a == b,
            (a, b) => a.to_f64() == b.to_f64(),
        }
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a $op b),
                    (a, b) => Scalar::Float(a.to_f64() $op b.to_f64()),
                }
            }
        }
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a $op b),
                    (a, b) => Scalar::Float(a.to_f64() $op b.to_f64()),
                }
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                $trait::$method(&self, rhs)
            }
        }
        impl $trait<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                $trait::$method(self, &rhs)
            }
        }
    };
}

scalar_binop!(Add, add, +);
scalar_binop!(Sub, sub, -);
scalar_binop!(Mul, mul, *);
scalar_binop!(Div, div, /);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r),
            Scalar::Float(x) => Scalar::Float(-x),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}
