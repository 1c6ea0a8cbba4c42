//! Exact rational angles: values in Q/Z kept as reduced fractions in [0, 1).
//!
//! Every root-of-unity quantity in this crate (quadratic form values, twists,
//! Gauss-sum arguments, central-charge exponents) is stored as its exponent,
//! i.e. as a [`RationalMod1`].

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_integer::Integer;

/// A rational number mod 1, canonically reduced: `0 <= num < den`, `gcd(num, den) = 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalMod1 {
    num: u64,
    den: u64,
}

impl RationalMod1 {
    pub const ZERO: RationalMod1 = RationalMod1 { num: 0, den: 1 };
    pub const HALF: RationalMod1 = RationalMod1 { num: 1, den: 2 };

    /// Builds `num/den` reduced mod 1. Accepts any sign of numerator.
    ///
    /// Panics if `den == 0`; fraction input from untrusted sources goes
    /// through the parser, which rejects zero denominators first.
    pub fn new(num: i128, den: i128) -> RationalMod1 {
        assert!(den != 0, "zero denominator");
        let (mut num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        num = num.rem_euclid(den);
        let g = num.gcd(&den);
        let (num, den) = if g > 1 { (num / g, den / g) } else { (num, den) };
        debug_assert!(num >= 0 && den > 0 && num < den);
        RationalMod1 {
            num: num as u64,
            den: den as u64,
        }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// Multiplies by an integer (the scaling `q(x) -> n*q(x)`).
    pub fn scaled(&self, n: i128) -> RationalMod1 {
        let prod = (self.num as i128)
            .checked_mul(n)
            .expect("rational overflow in scaling");
        RationalMod1::new(prod, self.den as i128)
    }

    /// Numerator rescaled to an explicit common denominator.
    ///
    /// Panics if `den` is not a multiple of `self.den()`.
    pub fn numerator_for_denominator(&self, den: u64) -> u64 {
        assert!(den % self.den == 0, "not a common denominator");
        self.num * (den / self.den)
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Add for RationalMod1 {
    type Output = RationalMod1;

    fn add(self, rhs: RationalMod1) -> RationalMod1 {
        let (an, ad) = (self.num as i128, self.den as i128);
        let (bn, bd) = (rhs.num as i128, rhs.den as i128);
        let num = an
            .checked_mul(bd)
            .and_then(|x| x.checked_add(bn.checked_mul(ad).expect("rational overflow")))
            .expect("rational overflow");
        RationalMod1::new(num, ad.checked_mul(bd).expect("rational overflow"))
    }
}

impl Sub for RationalMod1 {
    type Output = RationalMod1;

    fn sub(self, rhs: RationalMod1) -> RationalMod1 {
        self + (-rhs)
    }
}

impl Neg for RationalMod1 {
    type Output = RationalMod1;

    fn neg(self) -> RationalMod1 {
        RationalMod1::new(-(self.num as i128), self.den as i128)
    }
}

impl fmt::Display for RationalMod1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "0")
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for RationalMod1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// A plain non-negative rational (not reduced mod 1). Used for quantities
/// like additive central charges that live in Q rather than Q/Z.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Rational {
    num: u64,
    den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Rational {
        assert!(den != 0, "zero denominator");
        let g = num.gcd(&den);
        Rational {
            num: num / g,
            den: den / g,
        }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    /// The class of `self / k` in Q/Z.
    pub fn div_mod1(&self, k: u64) -> RationalMod1 {
        RationalMod1::new(self.num as i128, (self.den as i128) * (k as i128))
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_range() {
        assert_eq!(RationalMod1::new(5, 4), RationalMod1::new(1, 4));
        assert_eq!(RationalMod1::new(-1, 4), RationalMod1::new(3, 4));
        assert_eq!(RationalMod1::new(6, 4), RationalMod1::new(1, 2));
        assert_eq!(RationalMod1::new(4, 4), RationalMod1::ZERO);
        assert_eq!(RationalMod1::new(3, -4), RationalMod1::new(1, 4));
    }

    #[test]
    fn negation_and_scaling() {
        let q = RationalMod1::new(1, 4);
        assert_eq!(-q, RationalMod1::new(3, 4));
        assert_eq!(q.scaled(4), RationalMod1::ZERO);
        assert_eq!(q.scaled(-1), RationalMod1::new(3, 4));
        assert_eq!(RationalMod1::ZERO, -RationalMod1::ZERO);
    }

    #[test]
    fn display_forms() {
        assert_eq!(RationalMod1::new(3, 16).to_string(), "3/16");
        assert_eq!(RationalMod1::ZERO.to_string(), "0");
        assert_eq!(Rational::new(3, 2).to_string(), "3/2");
        assert_eq!(Rational::new(4, 4).to_string(), "1");
    }

    fn arb_rational() -> impl Strategy<Value = RationalMod1> {
        (0i128..600, 1i128..60).prop_map(|(n, d)| RationalMod1::new(n, d))
    }

    proptest! {
        #[test]
        fn addition_commutes(a in arb_rational(), b in arb_rational()) {
            prop_assert_eq!(a + b, b + a);
        }

        #[test]
        fn addition_associates(a in arb_rational(), b in arb_rational(), c in arb_rational()) {
            prop_assert_eq!((a + b) + c, a + (b + c));
        }

        #[test]
        fn negation_cancels(a in arb_rational()) {
            prop_assert_eq!(a + (-a), RationalMod1::ZERO);
        }

        #[test]
        fn scaling_is_repeated_addition(a in arb_rational(), n in 0i128..20) {
            let mut acc = RationalMod1::ZERO;
            for _ in 0..n {
                acc = acc + a;
            }
            prop_assert_eq!(a.scaled(n), acc);
        }

        #[test]
        fn closed_and_canonical(a in arb_rational(), b in arb_rational()) {
            let s = a + b;
            prop_assert!(s.num() < s.den());
            prop_assert_eq!(num_integer::gcd(s.num(), s.den()), 1);
        }
    }
}
