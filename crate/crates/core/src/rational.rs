//! Exact rational helpers shared by the combinatorial engine.
//!
//! All exact quantities are [`BigRational`]s. They are rendered as `p/q`
//! strings (or a bare integer when `q = 1`) and only converted to `f64` at
//! reporting boundaries.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Lossless `p/q` rendering, with integers printed bare.
pub fn format(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Parses `p/q`, an integer, or a finite decimal such as `0.25` into an exact
/// rational. Decimals are taken at face value (`0.1` is `1/10`).
pub fn parse(input: &str) -> Result<BigRational> {
    let err = || Error::Parse {
        kind: "rational",
        input: input.to_string(),
    };
    let s = input.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err())?;
        let den: BigInt = den.trim().parse().map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let num: BigInt = digits.parse().map_err(|_| err())?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let q = BigRational::new(num, den);
        return Ok(if negative { -q } else { q });
    }
    let num: BigInt = s.parse().map_err(|_| err())?;
    Ok(BigRational::from_integer(num))
}

/// Checks `0 <= c <= 1`.
pub fn check_unit_interval(c: &BigRational) -> Result<()> {
    if c.is_negative() || *c > BigRational::one() {
        return Err(Error::CorrelationOutOfRange(format(c)));
    }
    Ok(())
}

/// `base^exp` with the convention `0^0 = 1`.
pub fn pow(base: &BigRational, exp: usize) -> BigRational {
    num_traits::pow(base.clone(), exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse("5/12").unwrap(), ratio(5, 12));
        assert_eq!(parse("3").unwrap(), int(3));
        assert_eq!(parse("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse("-0.5").unwrap(), ratio(-1, 2));
        assert_eq!(parse(" 2/4 ").unwrap(), ratio(1, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse("").is_err());
        assert!(parse("1.2.3").is_err());
    }

    #[test]
    fn format_round_trips() {
        for s in ["5/12", "29/12", "0", "-7/3", "14"] {
            assert_eq!(format(&parse(s).unwrap()), s);
        }
    }

    #[test]
    fn zero_to_the_zero_is_one() {
        assert_eq!(pow(&int(0), 0), int(1));
        assert_eq!(pow(&int(0), 2), int(0));
    }

    #[test]
    fn unit_interval() {
        assert!(check_unit_interval(&ratio(1, 2)).is_ok());
        assert!(check_unit_interval(&int(0)).is_ok());
        assert!(check_unit_interval(&int(1)).is_ok());
        assert!(check_unit_interval(&ratio(3, 2)).is_err());
        assert!(check_unit_interval(&ratio(-1, 2)).is_err());
    }
}
