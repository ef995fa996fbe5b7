//! Exact scalar fields.
//!
//! Everything in the crate is generic over [`Field`]. Two fields ship with it:
//! arbitrary-precision rationals ([`Rational`]), which are authoritative, and
//! the Mersenne prime field [`Fp61`] (p = 2^61 - 1), which is only meant as a
//! fast probabilistic filter for randomized trials.

use std::fmt;
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use num_rational::BigRational as Rational;

/// Which field a scalar lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldTag {
    Rationals,
    PrimeField(u64),
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldTag::Rationals => write!(f, "Q"),
            FieldTag::PrimeField(p) => write!(f, "F_{p}"),
        }
    }
}

/// A commutative field with exact arithmetic.
///
/// Division by zero is reported through `inv` returning `None`; there is no
/// NaN-like value.
pub trait Field: Clone + PartialEq + Eq + Hash + fmt::Debug + fmt::Display + Send + Sync + 'static {
    const TAG: FieldTag;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn is_one(&self) -> bool;

    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Option<Self>;

    fn div(&self, rhs: &Self) -> Option<Self> {
        rhs.inv().map(|r| self.mul(&r))
    }

    fn from_i64(v: i64) -> Self;

    /// Image of a rational number, `None` when the denominator vanishes in
    /// the field.
    fn from_rational(q: &Rational) -> Option<Self>;

    /// A nonzero factor that makes every entry of `row` integral, for fields
    /// where fraction-free elimination benefits from it.
    fn integral_row_scale(_row: &[Self]) -> Option<Self> {
        None
    }
}

impl Field for Rational {
    const TAG: FieldTag = FieldTag::Rationals;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_one(&self) -> bool {
        One::is_one(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
    fn from_rational(q: &Rational) -> Option<Self> {
        Some(q.clone())
    }
    fn integral_row_scale(row: &[Self]) -> Option<Self> {
        let lcm = row
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        Some(Rational::from_integer(lcm))
    }
}

/// The prime 2^61 - 1.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Element of the prime field of order 2^61 - 1, kept reduced in `[0, p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fp61(u64);

impl Fp61 {
    pub fn new(v: u64) -> Self {
        Fp61(v % MERSENNE_61)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    fn reduce128(x: u128) -> u64 {
        let p = MERSENNE_61 as u128;
        let folded = (x & p) + (x >> 61);
        let folded = (folded & p) + (folded >> 61);
        let r = folded as u64;
        if r >= MERSENNE_61 {
            r - MERSENNE_61
        } else {
            r
        }
    }

    fn pow(self, mut e: u64) -> Self {
        let mut base = self;
        let mut acc = Fp61(1);
        while e > 0 {
            if e & 1 == 1 {
                acc = Field::mul(&acc, &base);
            }
            base = Field::mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    fn from_bigint(v: &BigInt) -> Self {
        let m = BigInt::from(MERSENNE_61);
        let r = v.mod_floor(&m);
        Fp61(r.to_u64().expect("reduced residue fits in u64"))
    }
}

impl fmt::Display for Fp61 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Field for Fp61 {
    const TAG: FieldTag = FieldTag::PrimeField(MERSENNE_61);

    fn zero() -> Self {
        Fp61(0)
    }
    fn one() -> Self {
        Fp61(1)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
    fn is_one(&self) -> bool {
        self.0 == 1
    }
    fn add(&self, rhs: &Self) -> Self {
        let s = self.0 + rhs.0;
        Fp61(if s >= MERSENNE_61 { s - MERSENNE_61 } else { s })
    }
    fn sub(&self, rhs: &Self) -> Self {
        if self.0 >= rhs.0 {
            Fp61(self.0 - rhs.0)
        } else {
            Fp61(self.0 + MERSENNE_61 - rhs.0)
        }
    }
    fn mul(&self, rhs: &Self) -> Self {
        Fp61(Self::reduce128(self.0 as u128 * rhs.0 as u128))
    }
    fn neg(&self) -> Self {
        if self.0 == 0 {
            *self
        } else {
            Fp61(MERSENNE_61 - self.0)
        }
    }
    fn inv(&self) -> Option<Self> {
        if self.0 == 0 {
            None
        } else {
            Some(self.pow(MERSENNE_61 - 2))
        }
    }
    fn from_i64(v: i64) -> Self {
        if v >= 0 {
            Fp61::new(v as u64)
        } else {
            Fp61::new(v.unsigned_abs()).neg()
        }
    }
    fn from_rational(q: &Rational) -> Option<Self> {
        let num = Self::from_bigint(q.numer());
        let den = Self::from_bigint(q.denom());
        num.div(&den)
    }
}

/// Parses `"p/q"`, `"-p/q"` or an integer into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (text, None),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = match den {
        Some(d) => d.parse().ok()?,
        None => BigInt::one(),
    };
    if den.is_zero() || (den.is_negative()) {
        return None;
    }
    Some(Rational::new(num, den))
}
