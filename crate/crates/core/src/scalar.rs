//! Arithmetic abstraction shared by the fast `f64` path and the
//! multi-precision re-evaluation path used to confirm counterexamples.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, RoundingMode};

pub trait Scalar:
    Clone
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    /// `self^e` for `self >= 0`; `0^e = 0` for every positive `e`.
    fn powf(&self, e: f64) -> Self;
    fn sqrt(&self) -> Self;
    fn is_zero(&self) -> bool;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn signum(&self) -> Self {
        match self.partial_cmp(&Self::zero()) {
            Some(Ordering::Greater) => Self::one(),
            Some(Ordering::Less) => -Self::one(),
            _ => Self::zero(),
        }
    }
    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(&self) -> f64 {
        *self
    }
    #[inline]
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    #[inline]
    fn powf(&self, e: f64) -> Self {
        if *self == 0.0 {
            0.0
        } else {
            f64::powf(*self, e)
        }
    }
    #[inline]
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    #[inline]
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    #[inline]
    fn signum(&self) -> Self {
        if *self > 0.0 {
            1.0
        } else if *self < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

/// Working precision of [`Precise`], in bits.
pub const PRECISE_BITS: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

/// 256-bit binary floating point.
#[derive(Clone, Debug)]
pub struct Precise(BigFloat);

impl Precise {
    fn lift(v: BigFloat) -> Self {
        Precise(v)
    }
}

impl PartialEq for Precise {
    fn eq(&self, other: &Self) -> bool {
        self.0.cmp(&other.0) == Some(0)
    }
}

impl PartialOrd for Precise {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|c| c.cmp(&0))
    }
}

impl Add for Precise {
    type Output = Precise;
    fn add(self, rhs: Self) -> Self {
        Precise::lift(self.0.add(&rhs.0, PRECISE_BITS, RM))
    }
}

impl Sub for Precise {
    type Output = Precise;
    fn sub(self, rhs: Self) -> Self {
        Precise::lift(self.0.sub(&rhs.0, PRECISE_BITS, RM))
    }
}

impl Mul for Precise {
    type Output = Precise;
    fn mul(self, rhs: Self) -> Self {
        Precise::lift(self.0.mul(&rhs.0, PRECISE_BITS, RM))
    }
}

impl Div for Precise {
    type Output = Precise;
    fn div(self, rhs: Self) -> Self {
        Precise::lift(self.0.div(&rhs.0, PRECISE_BITS, RM))
    }
}

impl Neg for Precise {
    type Output = Precise;
    fn neg(self) -> Self {
        Precise::lift(self.0.neg())
    }
}

impl Scalar for Precise {
    fn from_f64(v: f64) -> Self {
        // Every finite f64 is exactly representable at 256 bits.
        Precise(BigFloat::from_f64(v, PRECISE_BITS))
    }

    fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        let text = format!("{}", self.0);
        text.parse::<f64>().unwrap_or(f64::NAN)
    }

    fn abs(&self) -> Self {
        Precise(self.0.abs())
    }

    fn powf(&self, e: f64) -> Self {
        if self.0.is_zero() {
            return Precise::zero();
        }
        let exponent = BigFloat::from_f64(e, PRECISE_BITS);
        CONSTS.with(|cc| Precise(self.0.pow(&exponent, PRECISE_BITS, RM, &mut cc.borrow_mut())))
    }

    fn sqrt(&self) -> Self {
        if self.0.is_zero() {
            return Precise::zero();
        }
        Precise(self.0.sqrt(PRECISE_BITS, RM))
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}
