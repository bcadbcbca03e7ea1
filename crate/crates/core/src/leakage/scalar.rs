use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Numeric type the estimator and bounds are computed in. `Ratio<i64>`
/// gives exact results; the float types trade exactness for range.
pub trait Scalar:
    Num + FromPrimitive + ToPrimitive + Copy + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Smallest integer `>= self`, if representable.
    fn ceil_u64(self) -> Option<u64>;

    /// Parses a decimal literal such as `0.05` or `3`.
    fn parse_decimal(s: &str) -> Option<Self>;
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn ceil_u64(self) -> Option<u64> {
                let c = self.ceil();
                (c.is_finite() && c >= 0.0 && c <= u64::MAX as $t).then(|| c as u64)
            }

            fn parse_decimal(s: &str) -> Option<Self> {
                <$t>::from_str(s.trim()).ok().filter(|v| v.is_finite())
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for Ratio<i64> {
    fn ceil_u64(self) -> Option<u64> {
        self.ceil().to_integer().to_u64()
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let (num, den) = (num.trim().parse::<i64>().ok()?, den.trim().parse::<i64>().ok()?);
            return (den != 0).then(|| Ratio::new(num, den));
        }
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return None;
        }
        let den = 10i64.checked_pow(frac.len() as u32)?;
        let int_part = if int.is_empty() { 0 } else { int.parse::<i64>().ok()? };
        let frac_part = if frac.is_empty() { 0 } else { frac.parse::<i64>().ok()? };
        let num = int_part.checked_mul(den)?.checked_add(frac_part)?;
        Some(Ratio::new(if neg { -num } else { num }, den))
    }
}
