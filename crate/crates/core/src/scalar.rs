//! Scalar arithmetic shared by the solvers.
//!
//! Every computation runs either in exact rational arithmetic (`BigRational`)
//! or in double precision. The [`Scalar`] trait is the common surface; float
//! sums go through a Neumaier accumulator.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};

/// Exact transition probability. Denominators never exceed the product of the
/// collection sizes, which the state limit keeps well inside `u64`.
pub type Prob = Ratio<u64>;

/// Arithmetic used for a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarMode {
    Rational,
    Float,
}

impl ScalarMode {
    /// Largest N for which closed forms default to rational mode.
    pub const RATIONAL_SINGLE_MAX: u64 = 1_000;

    /// Default mode for the single-collection closed forms.
    pub fn default_for_single(n: u64) -> Self {
        if n <= Self::RATIONAL_SINGLE_MAX {
            ScalarMode::Rational
        } else {
            ScalarMode::Float
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScalarMode::Rational => "rational",
            ScalarMode::Float => "float",
        }
    }
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScalarMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rational" => Ok(ScalarMode::Rational),
            "float" => Ok(ScalarMode::Float),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

/// Field operations needed by the closed forms and the triangular solves.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    const MODE: ScalarMode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(n: u64) -> Self;
    fn from_prob(p: &Prob) -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
    fn into_value(self) -> Value;

    /// Sum of the items. Exact for rationals, compensated for floats.
    fn sum_all<I: IntoIterator<Item = Self>>(items: I) -> Self;

    fn ratio(num: u64, den: u64) -> Self {
        Self::from_u64(num) / Self::from_u64(den)
    }

    /// `self · p`.
    fn mul_prob(&self, p: &Prob) -> Self {
        self.clone() * Self::from_prob(p)
    }
}

impl Scalar for f64 {
    const MODE: ScalarMode = ScalarMode::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_u64(n: u64) -> Self {
        n as f64
    }
    fn from_prob(p: &Prob) -> Self {
        *p.numer() as f64 / *p.denom() as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn into_value(self) -> Value {
        Value::Float(self)
    }
    fn sum_all<I: IntoIterator<Item = Self>>(items: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in items {
            acc.add(x);
        }
        acc.value()
    }
}

impl Scalar for BigRational {
    const MODE: ScalarMode = ScalarMode::Rational;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_u64(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn from_prob(p: &Prob) -> Self {
        BigRational::new(BigInt::from(*p.numer()), BigInt::from(*p.denom()))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn into_value(self) -> Value {
        Value::Rational(self)
    }
    fn sum_all<I: IntoIterator<Item = Self>>(items: I) -> Self {
        // `Ratio` arithmetic reduces after every operation.
        items.into_iter().fold(Zero::zero(), |acc, x| acc + x)
    }

    fn mul_prob(&self, p: &Prob) -> Self {
        // Cancel against the small factors first so the product is already
        // reduced; avoids a gcd on the big operands.
        let (a, b) = (*p.numer(), *p.denom());
        if a == 0 || Zero::is_zero(self) {
            return Zero::zero();
        }
        let g1 = a.gcd(&small_residue(self.denom(), a));
        let g2 = b.gcd(&small_residue(self.numer(), b));
        let numer = self.numer() / BigInt::from(g2) * BigInt::from(a / g1);
        let denom = self.denom() / BigInt::from(g1) * BigInt::from(b / g2);
        BigRational::new_raw(numer, denom)
    }
}

/// `|x| mod m` for a small modulus.
fn small_residue(x: &BigInt, m: u64) -> u64 {
    (x.magnitude() % m).to_u64().expect("residue below modulus")
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// A computed scalar that remembers which arithmetic produced it.
///
/// Rationals serialize as `"p/q"` strings (denominator always present),
/// floats as shortest round-trip JSON numbers.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Rational(BigRational),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Rational(r) => Scalar::to_f64(r),
            Value::Float(x) => *x,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Value::Rational(r) => Some(r),
            Value::Float(_) => None,
        }
    }

    pub fn mode(&self) -> ScalarMode {
        match self {
            Value::Rational(_) => ScalarMode::Rational,
            Value::Float(_) => ScalarMode::Float,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Value::Float(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Rational(_) => serializer.serialize_str(&self.to_string()),
            Value::Float(x) => serializer.serialize_f64(*x),
        }
    }
}
