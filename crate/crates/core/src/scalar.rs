//! Scalar types.
//!
//! Geometry is carried in exact arithmetic: [`Dyadic`] numbers for Whitney
//! cubes and domain cells, [`Rational`] for anything that needs a general
//! denominator (the `m^n` cube partition). Quadrature runs in any [`Real`].

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::Sum;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};

use crate::error::FracError;

/// Floating point scalar used by quadrature and constant evaluation.
pub trait Real:
    num_traits::Float + FromPrimitive + Sum + fmt::Debug + fmt::Display + Default + Send + Sync + 'static
{
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Exact rational with 128-bit components.
pub type Rational = Ratio<i128>;

/// Exact ordered field-like scalar used for box coordinates.
pub trait ExactScalar:
    Copy
    + Ord
    + Hash
    + fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_dyadic(d: Dyadic) -> Self;
    fn from_int(v: i64) -> Self;
    fn to_f64(self) -> f64;
    fn to_rational(self) -> Rational;
    fn halve(self) -> Self;
}

/// A number of the form `mantissa * 2^exponent`, kept normalized
/// (odd mantissa, or zero with exponent 0).
#[derive(Clone, Copy)]
pub struct Dyadic {
    mant: i128,
    exp: i32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { mant: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { mant: 1, exp: 0 };

    pub fn new(mant: i128, exp: i32) -> Self {
        if mant == 0 {
            return Self::ZERO;
        }
        let tz = mant.trailing_zeros() as i32;
        Dyadic {
            mant: mant >> tz,
            exp: exp + tz,
        }
    }

    pub fn from_i64(v: i64) -> Self {
        Self::new(v as i128, 0)
    }

    /// `2^k`.
    pub fn pow2(k: i32) -> Self {
        Dyadic { mant: 1, exp: k }
    }

    pub fn mantissa(&self) -> i128 {
        self.mant
    }

    pub fn exponent(&self) -> i32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant == 0
    }

    pub fn is_positive(&self) -> bool {
        self.mant > 0
    }

    pub fn is_negative(&self) -> bool {
        self.mant < 0
    }

    pub fn abs(self) -> Self {
        Dyadic {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    /// Multiply by `2^k`.
    pub fn shl(self, k: i32) -> Self {
        if self.mant == 0 {
            self
        } else {
            Dyadic {
                mant: self.mant,
                exp: self.exp + k,
            }
        }
    }

    /// Exact quotient when the divisor is a signed power of two.
    pub fn div_pow2(self, divisor: Dyadic) -> Option<Self> {
        if divisor.mant.abs() != 1 {
            return None;
        }
        Some(Dyadic::new(self.mant * divisor.mant, self.exp - divisor.exp))
    }

    /// Whether the value is `2^k` for some integer `k`.
    pub fn is_power_of_two(&self) -> bool {
        self.mant == 1
    }

    /// `log2` of a power of two.
    pub fn log2_exact(&self) -> Option<i32> {
        self.is_power_of_two().then_some(self.exp)
    }

    /// Floor of the value as an integer.
    pub fn floor(self) -> i128 {
        if self.exp >= 0 {
            self.mant << self.exp
        } else {
            self.mant >> (-self.exp)
        }
    }

    pub fn is_integer(&self) -> bool {
        self.exp >= 0 || self.mant == 0
    }

    pub fn to_f64(self) -> f64 {
        (self.mant as f64) * 2f64.powi(self.exp)
    }

    fn aligned(a: Dyadic, b: Dyadic) -> (i128, i128, i32) {
        if a.mant == 0 {
            return (0, b.mant, b.exp);
        }
        if b.mant == 0 {
            return (a.mant, 0, a.exp);
        }
        let e = a.exp.min(b.exp);
        let sa = (a.exp - e) as u32;
        let sb = (b.exp - e) as u32;
        let ma = a.mant.checked_shl(sa).filter(|v| v >> sa == a.mant);
        let mb = b.mant.checked_shl(sb).filter(|v| v >> sb == b.mant);
        match (ma, mb) {
            (Some(x), Some(y)) => (x, y, e),
            _ => panic!("dyadic overflow aligning {a} and {b}"),
        }
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        self.mant == other.mant && self.exp == other.exp
    }
}
impl Eq for Dyadic {}

impl Hash for Dyadic {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.mant.hash(state);
        self.exp.hash(state);
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = Dyadic::aligned(*self, *other);
        a.cmp(&b)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let (a, b, e) = Dyadic::aligned(self, rhs);
        Dyadic::new(a.checked_add(b).expect("dyadic overflow"), e)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        self + (-rhs)
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        Dyadic::new(
            self.mant.checked_mul(rhs.mant).expect("dyadic overflow"),
            self.exp + rhs.exp,
        )
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

impl Zero for Dyadic {
    fn zero() -> Self {
        Self::ZERO
    }
    fn is_zero(&self) -> bool {
        self.mant == 0
    }
}

impl One for Dyadic {
    fn one() -> Self {
        Self::ONE
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp >= 0 {
            write!(f, "{}", self.mant << self.exp)
        } else {
            write!(f, "{}/2^{}", self.mant, -self.exp)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Dyadic {
    type Err = FracError;

    /// Accepts `p`, `p/q` with `q` a power of two, `p/2^k`, or a finite
    /// decimal that is exactly dyadic (`0.25`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FracError::Parse(format!("not a dyadic rational: {s:?}"));
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: i128 = num.trim().parse().map_err(|_| bad())?;
            let den = den.trim();
            let k: i32 = if let Some(k) = den.strip_prefix("2^") {
                k.parse().map_err(|_| bad())?
            } else {
                let q: i128 = den.parse().map_err(|_| bad())?;
                if q <= 0 || q.count_ones() != 1 {
                    return Err(bad());
                }
                q.trailing_zeros() as i32
            };
            return Ok(Dyadic::new(num, -k));
        }
        if let Ok(v) = s.parse::<i128>() {
            return Ok(Dyadic::new(v, 0));
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        // decimals such as 0.1 round to a dyadic but are not one
        Dyadic::from_f64_exact(v)
            .filter(|d| d.exp >= -30)
            .ok_or_else(bad)
    }
}

impl Dyadic {
    /// Exact conversion of a finite float (every finite f64 is dyadic).
    pub fn from_f64_exact(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            return Some(Self::ZERO);
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i128 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = (bits & ((1u64 << 52) - 1)) as i128;
        let (mant, exp) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1i128 << 52), raw_exp - 1075)
        };
        Some(Dyadic::new(sign * mant, exp))
    }
}

impl ExactScalar for Dyadic {
    fn from_dyadic(d: Dyadic) -> Self {
        d
    }
    fn from_int(v: i64) -> Self {
        Dyadic::from_i64(v)
    }
    fn to_f64(self) -> f64 {
        Dyadic::to_f64(self)
    }
    fn to_rational(self) -> Rational {
        if self.exp >= 0 {
            Rational::from_integer(self.mant << self.exp)
        } else {
            Rational::new(self.mant, 1i128 << (-self.exp))
        }
    }
    fn halve(self) -> Self {
        self.shl(-1)
    }
}

impl ExactScalar for Rational {
    fn from_dyadic(d: Dyadic) -> Self {
        d.to_rational()
    }
    fn from_int(v: i64) -> Self {
        Rational::from_integer(v as i128)
    }
    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or_else(|| {
            *self.numer() as f64 / *self.denom() as f64
        })
    }
    fn to_rational(self) -> Rational {
        self
    }
    fn halve(self) -> Self {
        self / Rational::from_integer(2)
    }
}

/// Sign-aware absolute value on any exact scalar.
pub fn exact_abs<S: ExactScalar>(v: S) -> S {
    if v < S::zero() {
        -v
    } else {
        v
    }
}

/// Rational exactness helper used by tests and the JSON layer.
pub fn rational_is_dyadic(r: &Rational) -> bool {
    r.denom().count_ones() == 1
}

/// Neumaier-compensated sum in a fixed, input-determined order.
pub fn compensated_sum<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

/// Pairwise (tree) summation: the reduction order depends only on the
/// slice length, so results are bit-reproducible across thread counts.
pub fn pairwise_sum<T: Real>(values: &[T]) -> T {
    const LEAF: usize = 64;
    if values.len() <= LEAF {
        return values.iter().fold(T::zero(), |a, &b| a + b);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
