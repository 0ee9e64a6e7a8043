//! Arithmetic backends and the tolerance policy.
//!
//! Two backends implement [`Scalar`]: exact rationals ([`rug::Rational`]) and
//! arbitrary-precision binary floating point ([`rug::Float`]) whose precision is
//! derived from a number of decimal digits. Moment matrices are exponentially
//! ill-conditioned, so machine doubles are never used on the main path.
//!
//! The backend is a type parameter, so values of different modes cannot be
//! mixed in one computation. A [`PrecisionContext`] carries the working
//! precision and the comparison tolerances; its mode must agree with the
//! scalar type it is used with (see [`PrecisionContext::require`]).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

pub const DEFAULT_DIGITS: u32 = 64;
pub const MIN_DIGITS: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    BigFloat,
    Rational,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::BigFloat => f.write_str("bigfloat"),
            Mode::Rational => f.write_str("rational"),
        }
    }
}

/// Arithmetic mode, working precision and comparison tolerances.
///
/// Tolerances are stored as exact rationals and converted to the scalar type
/// on demand. In rational mode both tolerances are zero, so every comparison
/// is exact.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionContext {
    mode: Mode,
    digits: u32,
    residual_tol: Rational,
    pivot_tol: Rational,
}

fn pow10_neg(k: u32) -> Rational {
    Rational::from((Integer::from(1), Integer::from(Integer::u_pow_u(10, k))))
}

impl PrecisionContext {
    /// Floating-point context with `digits` decimal digits.
    ///
    /// Defaults: `residual_tol = 10^-(digits/2)`, `pivot_tol = 10^-(digits-10)`.
    pub fn bigfloat(digits: u32) -> Result<Self> {
        if digits < MIN_DIGITS {
            return Err(Error::InvalidPrecision(format!(
                "bigfloat mode needs at least {MIN_DIGITS} digits, got {digits}"
            )));
        }
        Ok(PrecisionContext {
            mode: Mode::BigFloat,
            digits,
            residual_tol: pow10_neg(digits / 2),
            pivot_tol: pow10_neg(digits - 10),
        })
    }

    pub fn rational() -> Self {
        PrecisionContext {
            mode: Mode::Rational,
            digits: 0,
            residual_tol: Rational::new(),
            pivot_tol: Rational::new(),
        }
    }

    pub fn for_mode(mode: Mode, digits: u32) -> Result<Self> {
        match mode {
            Mode::BigFloat => Self::bigfloat(digits),
            Mode::Rational => Ok(Self::rational()),
        }
    }

    pub fn with_residual_tol(mut self, tol: Rational) -> Result<Self> {
        if tol < 0 || (self.mode == Mode::Rational && tol != 0) {
            return Err(Error::InvalidPrecision(format!(
                "residual tolerance {tol} not allowed in {} mode",
                self.mode
            )));
        }
        self.residual_tol = tol;
        Ok(self)
    }

    pub fn with_pivot_tol(mut self, tol: Rational) -> Result<Self> {
        if tol < 0 || (self.mode == Mode::Rational && tol != 0) {
            return Err(Error::InvalidPrecision(format!(
                "pivot tolerance {tol} not allowed in {} mode",
                self.mode
            )));
        }
        self.pivot_tol = tol;
        Ok(self)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Decimal digits of working precision; zero in rational mode.
    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Binary precision used for `rug::Float` values.
    pub fn bits(&self) -> u32 {
        (f64::from(self.digits) * std::f64::consts::LOG2_10).ceil() as u32
    }

    pub fn residual_tol_exact(&self) -> &Rational {
        &self.residual_tol
    }

    pub fn pivot_tol_exact(&self) -> &Rational {
        &self.pivot_tol
    }

    pub fn residual_tol<S: Scalar>(&self) -> S {
        S::from_rational(&self.residual_tol, self)
    }

    pub fn pivot_tol<S: Scalar>(&self) -> S {
        S::from_rational(&self.pivot_tol, self)
    }

    /// Same mode at twice the digits, tolerances rescaled accordingly.
    /// Rational contexts are returned unchanged.
    pub fn doubled(&self) -> Self {
        match self.mode {
            Mode::Rational => self.clone(),
            Mode::BigFloat => Self::bigfloat(self.digits * 2).expect("doubling keeps digits valid"),
        }
    }

    /// Fails unless the context mode matches the scalar backend `S`.
    pub fn require<S: Scalar>(&self) -> Result<()> {
        if self.mode == S::MODE {
            Ok(())
        } else {
            Err(Error::ModeMismatch {
                context: self.mode,
                values: S::MODE,
            })
        }
    }

    /// True when `value` is within the residual tolerance of zero.
    pub fn accepts<S: Scalar>(&self, value: &S) -> bool {
        value.abs_value() <= self.residual_tol::<S>()
    }
}

/// A field element in one of the two arithmetic backends.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + for<'a> DivAssign<&'a Self>
{
    const MODE: Mode;

    fn from_rational(value: &Rational, ctx: &PrecisionContext) -> Self;

    fn zero_like(&self) -> Self;

    fn one_like(&self) -> Self;

    fn is_zero(&self) -> bool;

    fn abs_value(&self) -> Self;

    fn to_f64(&self) -> f64;

    /// Canonical string form: `p/q` in lowest terms for rationals, a decimal
    /// with an explicit exponent for floats.
    fn to_text(&self) -> String;

    fn gamma(a: &Rational, ctx: &PrecisionContext) -> Result<Self>;

    fn zero(ctx: &PrecisionContext) -> Self {
        Self::from_rational(&Rational::new(), ctx)
    }

    fn one(ctx: &PrecisionContext) -> Self {
        Self::from_rational(&Rational::from(1), ctx)
    }

    fn from_int(value: i64, ctx: &PrecisionContext) -> Self {
        Self::from_rational(&Rational::from(value), ctx)
    }

    /// Parses `p/q`, plain integers and decimals with optional exponent.
    /// The text is read exactly and then converted into the backend.
    fn from_text(text: &str, ctx: &PrecisionContext) -> Result<Self> {
        Ok(Self::from_rational(&parse_rational(text)?, ctx))
    }

    fn beta(a: &Rational, b: &Rational, ctx: &PrecisionContext) -> Result<Self> {
        let ga = Self::gamma(a, ctx)?;
        let gb = Self::gamma(b, ctx)?;
        let sum = Rational::from(a + b);
        let gab = Self::gamma(&sum, ctx)?;
        Ok(ga * &gb / &gab)
    }

    fn powi(&self, exp: usize) -> Self {
        let mut result = self.one_like();
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                result *= &base;
            }
            let sq = base.clone();
            base *= &sq;
            e >>= 1;
        }
        result
    }
}

impl Scalar for Rational {
    const MODE: Mode = Mode::Rational;

    fn from_rational(value: &Rational, _ctx: &PrecisionContext) -> Self {
        value.clone()
    }

    fn zero_like(&self) -> Self {
        Rational::new()
    }

    fn one_like(&self) -> Self {
        Rational::from(1)
    }

    fn is_zero(&self) -> bool {
        self.cmp0() == Ordering::Equal
    }

    fn abs_value(&self) -> Self {
        self.clone().abs()
    }

    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }

    fn to_text(&self) -> String {
        self.to_string()
    }

    fn gamma(a: &Rational, _ctx: &PrecisionContext) -> Result<Self> {
        let n = positive_integer(a)?;
        Ok(Rational::from(Integer::from(Integer::factorial(n - 1))))
    }

    fn beta(a: &Rational, b: &Rational, _ctx: &PrecisionContext) -> Result<Self> {
        let m = positive_integer(a)?;
        let n = positive_integer(b)?;
        let num = Integer::from(Integer::factorial(m - 1)) * Integer::from(Integer::factorial(n - 1));
        let den = Integer::from(Integer::factorial(m + n - 1));
        Ok(Rational::from((num, den)))
    }
}

fn positive_integer(a: &Rational) -> Result<u32> {
    if *a <= 0 {
        return Err(Error::NonPositiveArgument(a.to_string()));
    }
    if *a.denom() != 1 {
        return Err(Error::RationalModeNonInteger(a.to_string()));
    }
    a.numer()
        .to_u32()
        .ok_or_else(|| Error::InvalidPrecision(format!("factorial argument {a} too large")))
}

impl Scalar for Float {
    const MODE: Mode = Mode::BigFloat;

    fn from_rational(value: &Rational, ctx: &PrecisionContext) -> Self {
        Float::with_val(ctx.bits(), value)
    }

    fn zero_like(&self) -> Self {
        Float::new(self.prec())
    }

    fn one_like(&self) -> Self {
        Float::with_val(self.prec(), 1)
    }

    fn is_zero(&self) -> bool {
        Float::is_zero(self)
    }

    fn abs_value(&self) -> Self {
        self.clone().abs()
    }

    fn to_f64(&self) -> f64 {
        Float::to_f64(self)
    }

    fn to_text(&self) -> String {
        float_to_text(self)
    }

    fn gamma(a: &Rational, ctx: &PrecisionContext) -> Result<Self> {
        if *a <= 0 {
            return Err(Error::NonPositiveArgument(a.to_string()));
        }
        Ok(Float::with_val(ctx.bits(), a).gamma())
    }
}

/// Renders a float as `d.ddd…e±x`, trimming trailing zeros of the mantissa.
fn float_to_text(x: &Float) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let (negative, digits, exp) = x.to_sign_string_exp(10, None);
    let Some(exp) = exp else {
        return if negative { format!("-{digits}") } else { digits };
    };
    let digits = digits.trim_end_matches('0');
    let (head, tail) = digits.split_at(1);
    let sign = if negative { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}e{}", exp - 1)
    } else {
        format!("{sign}{head}.{tail}e{}", exp - 1)
    }
}

/// Parses an exact rational from `p/q`, an integer, or a decimal such as
/// `-0.125`, `4e-3` or `1.5E2`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let err = || Error::Parse(text.to_string());
    if t.contains('/') {
        let r = Rational::from_str(t).map_err(|_| err())?;
        return Ok(r);
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (negative, mantissa) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from(Integer::from_str(&digits).map_err(|_| err())?);
    let scale = i64::from(exponent) - frac_part.len() as i64;
    let power = u32::try_from(scale.unsigned_abs()).map_err(|_| err())?;
    let ten = Integer::from(Integer::u_pow_u(10, power));
    if scale >= 0 {
        value *= ten;
    } else {
        value /= ten;
    }
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Largest absolute value of the sequence, or zero when it is empty.
pub fn max_abs<S: Scalar>(ctx: &PrecisionContext, values: impl IntoIterator<Item = S>) -> S {
    values
        .into_iter()
        .map(|v| v.abs_value())
        .fold(S::zero(ctx), |acc, v| if v > acc { v } else { acc })
}

/// `|a - b| / max(1, |a|)`: absolute near zero, relative for large values.
pub fn scaled_diff<S: Scalar>(a: &S, b: &S) -> S {
    let diff = (a.clone() - b).abs_value();
    let mag = a.abs_value();
    if mag > a.one_like() {
        diff / &mag
    } else {
        diff
    }
}

/// Larger of two scalars.
pub fn max_of<S: Scalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big() -> PrecisionContext {
        PrecisionContext::bigfloat(DEFAULT_DIGITS).unwrap()
    }

    #[test]
    fn default_tolerances() {
        let ctx = big();
        assert_eq!(ctx.bits(), 213);
        assert_eq!(*ctx.residual_tol_exact(), pow10_neg(32));
        assert_eq!(*ctx.pivot_tol_exact(), pow10_neg(54));
        let r = PrecisionContext::rational();
        assert_eq!(*r.residual_tol_exact(), 0);
        assert_eq!(*r.pivot_tol_exact(), 0);
    }

    #[test]
    fn precision_floor() {
        assert!(matches!(PrecisionContext::bigfloat(15), Err(Error::InvalidPrecision(_))));
        assert!(PrecisionContext::bigfloat(16).is_ok());
        assert!(PrecisionContext::rational()
            .with_residual_tol(Rational::from((1, 10)))
            .is_err());
    }

    #[test]
    fn beta_integer_values() {
        let r = PrecisionContext::rational();
        let one = Rational::from(1);
        assert_eq!(Rational::beta(&one, &one, &r).unwrap(), 1);
        let b = Rational::beta(&Rational::from(2), &Rational::from(3), &r).unwrap();
        assert_eq!(b, Rational::from((1, 12)));
        let ctx = big();
        let f = Float::beta(&Rational::from(2), &Rational::from(3), &ctx).unwrap();
        let diff = (f - &Float::with_val(ctx.bits(), Rational::from((1, 12)))).abs();
        assert!(diff < 1e-60);
    }

    #[test]
    fn gamma_integer_values() {
        let r = PrecisionContext::rational();
        assert_eq!(Rational::gamma(&Rational::from(1), &r).unwrap(), 1);
        assert_eq!(Rational::gamma(&Rational::from(5), &r).unwrap(), 24);
        let f = <Float as Scalar>::gamma(&Rational::from(5), &big()).unwrap();
        assert_eq!(f, 24);
    }

    #[test]
    fn gamma_errors() {
        let r = PrecisionContext::rational();
        assert!(matches!(
            Rational::gamma(&Rational::from((1, 2)), &r),
            Err(Error::RationalModeNonInteger(_))
        ));
        assert!(matches!(
            Rational::gamma(&Rational::from(0), &r),
            Err(Error::NonPositiveArgument(_))
        ));
        assert!(matches!(
            <Float as Scalar>::gamma(&Rational::from(-1), &big()),
            Err(Error::NonPositiveArgument(_))
        ));
        assert!(matches!(
            Rational::beta(&Rational::from(1), &Rational::from((3, 2)), &r),
            Err(Error::RationalModeNonInteger(_))
        ));
    }

    #[test]
    fn text_forms() {
        let r = PrecisionContext::rational();
        assert_eq!(Rational::from((-6, 4)).to_text(), "-3/2");
        assert_eq!(Rational::from(6).to_text(), "6");
        let f = Float::from_rational(&Rational::from((1, 12)), &PrecisionContext::bigfloat(16).unwrap());
        let text = f.to_text();
        assert!(text.starts_with("8.33333333333333") && text.ends_with("e-2"), "{text}");
        assert_eq!(Float::from_int(1, &big()).to_text(), "1e0");
        assert_eq!(Float::from_int(-250, &big()).to_text(), "-2.5e2");
        assert_eq!(Float::zero(&big()).to_text(), "0");
        let back = Rational::from_text("-3/2", &r).unwrap();
        assert_eq!(back, Rational::from((-3, 2)));
    }

    #[test]
    fn float_text_round_trips() {
        let ctx = big();
        let x = <Float as Scalar>::gamma(&Rational::from((1, 3)), &ctx).unwrap();
        let y = Float::from_text(&x.to_text(), &ctx).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(parse_rational("0.5").unwrap(), Rational::from((1, 2)));
        assert_eq!(parse_rational("-0.125").unwrap(), Rational::from((-1, 8)));
        assert_eq!(parse_rational("4e-3").unwrap(), Rational::from((1, 250)));
        assert_eq!(parse_rational("1.5E2").unwrap(), Rational::from(150));
        assert_eq!(parse_rational(" 7 ").unwrap(), Rational::from(7));
        assert_eq!(parse_rational("4/5").unwrap(), Rational::from((4, 5)));
        assert_eq!(parse_rational(".25").unwrap(), Rational::from((1, 4)));
        for bad in ["", "abc", "1.2.3", "e5", "1/0x", "--1"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn mode_requirement() {
        assert!(PrecisionContext::rational().require::<Rational>().is_ok());
        assert!(matches!(
            PrecisionContext::rational().require::<Float>(),
            Err(Error::ModeMismatch { .. })
        ));
    }

    #[test]
    fn integer_powers() {
        let x = Rational::from((2, 3));
        assert_eq!(x.powi(0), 1);
        assert_eq!(x.powi(5), Rational::from((32, 243)));
    }
}
