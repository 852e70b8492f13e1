use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::DesError;

/// Significant decimal digits kept after rounding.
pub const DEFAULT_PRECISION: u32 = 24;

/// Exact decimal timestamp in seconds: `mantissa · 10^exponent`.
///
/// Values are kept normalized (no trailing zeros in the mantissa, zero has
/// exponent 0) so equality is structural. Addition and subtraction are exact
/// whenever the result fits in the configured precision; otherwise the result
/// is rounded half-to-even.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SimTime {
    mantissa: i128,
    exponent: i32,
}

fn pow10(k: u32) -> BigInt {
    num_traits::pow(BigInt::from(10u8), k as usize)
}

fn digit_count(v: &BigInt) -> u32 {
    if v.is_zero() {
        1
    } else {
        v.abs().to_string().len() as u32
    }
}

/// Rounds `num / den` to the nearest integer, ties to even. `den > 0`.
fn div_round_half_even(num: &BigInt, den: &BigInt) -> BigInt {
    let q = num / den;
    let r = num - &q * den;
    let twice = r.abs() * 2u8;
    match twice.cmp(den) {
        Ordering::Less => q,
        Ordering::Greater => q + if num.is_negative() { -1 } else { 1 },
        Ordering::Equal => {
            if (&q % 2u8).is_zero() {
                q
            } else {
                q + if num.is_negative() { -1 } else { 1 }
            }
        }
    }
}

impl SimTime {
    pub const ZERO: SimTime = SimTime { mantissa: 0, exponent: 0 };

    pub fn new(mantissa: i128, exponent: i32) -> Self {
        Self::normalize(mantissa, exponent)
    }

    fn normalize(mut mantissa: i128, mut exponent: i32) -> Self {
        if mantissa == 0 {
            return Self::ZERO;
        }
        while mantissa % 10 == 0 {
            mantissa /= 10;
            exponent += 1;
        }
        Self { mantissa, exponent }
    }

    /// Builds from an arbitrary-size mantissa, rounding to `precision` digits.
    fn from_big(mantissa: BigInt, exponent: i32, precision: u32) -> Result<Self, DesError> {
        let digits = digit_count(&mantissa);
        let (m, e) = if digits > precision {
            let drop = digits - precision;
            (div_round_half_even(&mantissa, &pow10(drop)), exponent + drop as i32)
        } else {
            (mantissa, exponent)
        };
        let m = m.to_i128().ok_or_else(|| DesError::Time("mantissa overflow".into()))?;
        Ok(Self::normalize(m, e))
    }

    pub fn mantissa(&self) -> i128 {
        self.mantissa
    }

    pub fn exponent(&self) -> i32 {
        self.exponent
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa < 0
    }

    /// Nearest `f64` (for plotting and envelope arithmetic, never for ordering).
    pub fn to_f64(&self) -> f64 {
        // Going through the decimal string gives correct rounding.
        format!("{}e{}", self.mantissa, self.exponent).parse().unwrap_or(f64::NAN)
    }

    /// Exact decimal value of the shortest round-trip representation of `v`.
    pub fn from_f64(v: f64) -> Result<Self, DesError> {
        if !v.is_finite() {
            return Err(DesError::Time(format!("non-finite time {v}")));
        }
        format!("{v:e}").parse()
    }

    fn aligned(&self, other: &Self) -> (BigInt, BigInt, i32) {
        let e = self.exponent.min(other.exponent);
        let a = BigInt::from(self.mantissa) * pow10((self.exponent - e) as u32);
        let b = BigInt::from(other.mantissa) * pow10((other.exponent - e) as u32);
        (a, b, e)
    }

    pub fn add_with_precision(&self, other: &Self, precision: u32) -> Result<Self, DesError> {
        let (a, b, e) = self.aligned(other);
        Self::from_big(a + b, e, precision)
    }

    pub fn sub_with_precision(&self, other: &Self, precision: u32) -> Result<Self, DesError> {
        let (a, b, e) = self.aligned(other);
        Self::from_big(a - b, e, precision)
    }

    pub fn mul_with_precision(&self, other: &Self, precision: u32) -> Result<Self, DesError> {
        let m = BigInt::from(self.mantissa) * BigInt::from(other.mantissa);
        Self::from_big(m, self.exponent + other.exponent, precision)
    }

    /// Quotient rounded to `precision` significant digits.
    pub fn div_with_precision(&self, other: &Self, precision: u32) -> Result<Self, DesError> {
        if other.mantissa == 0 {
            return Err(DesError::Time("division by zero".into()));
        }
        let num = BigInt::from(self.mantissa);
        let mut den = BigInt::from(other.mantissa);
        let mut num_scaled = num;
        if den.is_negative() {
            den = -den;
            num_scaled = -num_scaled;
        }
        // Enough extra digits that the rounded quotient has `precision` digits.
        let shift = precision + digit_count(&den) + 1;
        num_scaled *= pow10(shift);
        let q = div_round_half_even(&num_scaled, &den);
        Self::from_big(q, self.exponent - other.exponent - shift as i32, precision)
    }

    /// Integer part, rounded toward zero.
    pub fn trunc(&self) -> Self {
        if self.exponent >= 0 {
            return *self;
        }
        let scale = pow10((-self.exponent) as u32);
        let q = BigInt::from(self.mantissa) / scale;
        Self::normalize(q.to_i128().expect("quotient is smaller than the mantissa"), 0)
    }

    /// Parses a decimal string keeping `precision` significant digits.
    pub fn parse_with_precision(s: &str, precision: u32) -> Result<Self, DesError> {
        let (m, e) = parse_decimal(s)?;
        Self::from_big(m, e, precision)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, DesError> {
        self.add_with_precision(other, DEFAULT_PRECISION)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, DesError> {
        self.sub_with_precision(other, DEFAULT_PRECISION)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, DesError> {
        self.mul_with_precision(other, DEFAULT_PRECISION)
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, DesError> {
        self.div_with_precision(other, DEFAULT_PRECISION)
    }
}

impl Default for SimTime {
    fn default() -> Self {
        Self::ZERO
    }
}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.exponent == other.exponent {
            return self.mantissa.cmp(&other.mantissa);
        }
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromStr for SimTime {
    type Err = DesError;

    /// Accepts `[-]digits[.digits][e[+-]digits]`.
    fn from_str(s: &str) -> Result<Self, DesError> {
        Self::parse_with_precision(s, DEFAULT_PRECISION)
    }
}

fn parse_decimal(s: &str) -> Result<(BigInt, i32), DesError> {
    let bad = || DesError::Time(format!("invalid decimal time {s:?}"));
    let t = s.trim();
    let (body, exp) = match t.find(['e', 'E']) {
        Some(k) => (&t[..k], t[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, body) = match body.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, body.strip_prefix('+').unwrap_or(body)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let mut m: BigInt = digits.parse().map_err(|_| bad())?;
    if neg {
        m = -m;
    }
    Ok((m, exp - frac.len() as i32))
}

impl fmt::Display for SimTime {
    /// Plain positional decimal, e.g. `0.000000001` or `12.5`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.mantissa < 0 { "-" } else { "" };
        let digits = self.mantissa.unsigned_abs().to_string();
        if self.exponent >= 0 {
            return write!(f, "{sign}{digits}{}", "0".repeat(self.exponent as usize));
        }
        let frac_len = (-self.exponent) as usize;
        if digits.len() > frac_len {
            let (i, d) = digits.split_at(digits.len() - frac_len);
            write!(f, "{sign}{i}.{d}")
        } else {
            write!(f, "{sign}0.{}{digits}", "0".repeat(frac_len - digits.len()))
        }
    }
}

impl fmt::Debug for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SimTime({self})")
    }
}

impl Serialize for SimTime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SimTime {
    /// Accepts a decimal string or a JSON number.
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(serde_json::Number),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(s) => s,
            Raw::Number(n) => n.to_string(),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> SimTime {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(t("1e-9").to_string(), "0.000000001");
        assert_eq!(t("12.50").to_string(), "12.5");
        assert_eq!(t("-0.25").to_string(), "-0.25");
        assert_eq!(t("3e2").to_string(), "300");
        assert_eq!(t("0.0"), SimTime::ZERO);
        assert_eq!(t(".5"), t("0.5"));
        for bad in ["", "e3", "1.2.3", "abc", "1e"] {
            assert!(bad.parse::<SimTime>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn addition_has_no_binary_drift() {
        let tenth = t("0.1");
        let mut acc = SimTime::ZERO;
        for _ in 0..10 {
            acc = acc.checked_add(&tenth).unwrap();
        }
        assert_eq!(acc, t("1"));
        assert_ne!((0..10).fold(0.0, |a: f64, _| a + 0.1), 1.0);
    }

    #[test]
    fn attosecond_resolution_at_nanosecond_scale() {
        let a = t("1e-9");
        let b = a.checked_add(&t("1e-18")).unwrap();
        assert!(b > a);
        assert_eq!(b.checked_sub(&a).unwrap(), t("1e-18"));
    }

    #[test]
    fn ordering_across_exponents() {
        let mut v = vec![t("2e-9"), t("1e-9"), t("0.0000000015"), t("-1"), SimTime::ZERO];
        v.sort();
        assert_eq!(v, vec![t("-1"), SimTime::ZERO, t("1e-9"), t("1.5e-9"), t("2e-9")]);
    }

    #[test]
    fn division_rounds_to_precision() {
        let third = t("1").checked_div(&t("3")).unwrap();
        assert_eq!(third.to_string(), format!("0.{}", "3".repeat(24)));
        let two_thirds = t("2").checked_div(&t("3")).unwrap();
        assert_eq!(two_thirds.to_string(), format!("0.{}7", "6".repeat(23)));
        assert!(t("1").checked_div(&SimTime::ZERO).is_err());
    }

    #[test]
    fn rounding_is_half_even() {
        let x = t("1.5").add_with_precision(&SimTime::ZERO, 1).unwrap();
        let y = t("2.5").add_with_precision(&SimTime::ZERO, 1).unwrap();
        assert_eq!((x, y), (t("2"), t("2")));
    }

    #[test]
    fn truncation_and_wide_parsing() {
        assert_eq!(t("-2.75").trunc(), t("-2"));
        assert_eq!(t("3e2").trunc(), t("300"));
        assert_eq!(t("0.5").trunc(), SimTime::ZERO);
        let pi = SimTime::parse_with_precision("3.14159265358979323846264338327950288", 36).unwrap();
        assert_eq!(pi.to_string().len(), 37);
    }

    #[test]
    fn f64_round_trip() {
        for v in [1e-9, 4.8e-9, 0.3, 123.456] {
            assert_eq!(SimTime::from_f64(v).unwrap().to_f64(), v);
        }
        assert!(SimTime::from_f64(f64::NAN).is_err());
    }

    #[test]
    fn serde_accepts_strings_and_numbers() {
        let a: SimTime = serde_json::from_str("\"1.5e-9\"").unwrap();
        let b: SimTime = serde_json::from_str("1.5e-9").unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), "\"0.0000000015\"");
    }
}
