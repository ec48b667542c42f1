//! Exact decimal parsing and paper-style rounding for display.
//!
//! All headline arithmetic in this crate is exact (big integers and
//! rationals); floating point appears only at the display boundary. The
//! helpers here convert decimal strings to exact rationals and round exact
//! values the way the figures are conventionally quoted.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecimalParseError {
    #[error("empty decimal string")]
    Empty,
    #[error("invalid decimal literal {0:?}")]
    Invalid(String),
}

/// Parse a non-negative decimal literal like `"2.6"` or `"0.003"` into an
/// exact rational (13/5, 3/1000). Avoids the binary-float detour entirely.
pub fn decimal_ratio(s: &str) -> Result<BigRational, DecimalParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(DecimalParseError::Empty);
    }
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(DecimalParseError::Invalid(s.to_string()));
    }
    let digits_ok = |d: &str| d.chars().all(|c| c.is_ascii_digit());
    if !digits_ok(int_part) || !digits_ok(frac_part) {
        return Err(DecimalParseError::Invalid(s.to_string()));
    }
    let mut numer: BigUint = if int_part.is_empty() {
        BigUint::zero()
    } else {
        int_part
            .parse()
            .map_err(|_| DecimalParseError::Invalid(s.to_string()))?
    };
    let mut denom = BigUint::from(1u8);
    for c in frac_part.chars() {
        numer = numer * 10u8 + (c as u8 - b'0');
        denom *= 10u8;
    }
    Ok(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
}

/// Round a non-negative rational to the nearest integer, half away from zero.
pub fn round_ratio(r: &BigRational) -> BigUint {
    let two = BigInt::from(2);
    let rounded = (r.numer() * &two + r.denom()) / (r.denom() * &two);
    rounded.to_biguint().unwrap_or_default()
}

/// Lossy conversion for display and tolerance checks.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SigMode {
    Nearest,
    Ceil,
}

fn sci_digits(n: &BigUint, figs: usize, mode: SigMode) -> (u64, i64) {
    assert!((1..=17).contains(&figs));
    let s = n.to_string();
    let mut exp = s.len() as i64 - 1;
    let (head, tail) = if s.len() <= figs {
        (s.as_str(), "")
    } else {
        s.split_at(figs)
    };
    let mut mantissa: u64 = head.parse().expect("digits");
    // Normalize short numbers up to `figs` digits.
    for _ in head.len()..figs {
        mantissa *= 10;
    }
    let round_up = match mode {
        SigMode::Ceil => tail.bytes().any(|b| b != b'0'),
        SigMode::Nearest => tail.bytes().next().map(|b| b >= b'5').unwrap_or(false),
    };
    if round_up {
        mantissa += 1;
        if mantissa == 10u64.pow(figs as u32) {
            mantissa /= 10;
            exp += 1;
        }
    }
    (mantissa, exp)
}

fn sci_string(mantissa: u64, exp: i64, figs: usize) -> String {
    let digits = mantissa.to_string();
    debug_assert_eq!(digits.len(), figs);
    if figs == 1 {
        format!("{digits}e{exp}")
    } else {
        format!("{}.{}e{}", &digits[..1], &digits[1..], exp)
    }
}

/// Two-significant-figure scientific display, rounded *up*. Used for token
/// space sizes, where the convention is to never understate the space.
pub fn sci2_ceil(n: &BigUint) -> String {
    let (m, e) = sci_digits(n, 2, SigMode::Ceil);
    sci_string(m, e, 2)
}

/// Scientific display with `figs` significant figures, rounded to nearest.
pub fn sci_round(n: &BigUint, figs: usize) -> String {
    let (m, e) = sci_digits(n, figs, SigMode::Nearest);
    sci_string(m, e, figs)
}

/// Round a float to `figs` significant figures.
pub fn round_sig_f64(x: f64, figs: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = figs as i32 - 1 - magnitude;
    // Keep the scale an exact integer power so the final multiply/divide
    // does not reintroduce noise below the rounded digits.
    if decimals >= 0 {
        let scale = 10f64.powi(decimals);
        (x * scale).round() / scale
    } else {
        let scale = 10f64.powi(-decimals);
        (x / scale).round() * scale
    }
}

/// Thousands-grouped rendering of a float rounded to `figs` significant
/// figures: `12,200,000`, `510,000`, `2.38`.
pub fn fmt_sig(x: f64, figs: u32) -> String {
    let rounded = round_sig_f64(x, figs);
    if rounded == 0.0 {
        return "0".to_string();
    }
    let magnitude = rounded.abs().log10().floor() as i32;
    let decimals = (figs as i32 - 1 - magnitude).max(0) as usize;
    let raw = format!("{rounded:.decimals$}");
    let (int_part, frac_part) = match raw.split_once('.') {
        Some((i, f)) => (i.to_string(), Some(f.to_string())),
        None => (raw, None),
    };
    let grouped = group_thousands(&int_part);
    match frac_part {
        Some(f) => format!("{grouped}.{f}"),
        None => grouped,
    }
}

/// Insert `,` separators into a (possibly signed) integer string.
pub fn group_thousands(digits: &str) -> String {
    let (sign, body) = match digits.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", digits),
    };
    let mut out = String::with_capacity(body.len() + body.len() / 3 + 1);
    let offset = body.len() % 3;
    for (i, c) in body.chars().enumerate() {
        if i != 0 && (i + 3 - offset) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    format!("{sign}{out}")
}

/// `|actual - expected| / expected <= tolerance`, for tolerance checks on
/// display-rounded figures.
pub fn within_relative(actual: f64, expected: f64, tolerance: f64) -> bool {
    if expected == 0.0 {
        return actual == 0.0;
    }
    ((actual - expected) / expected).abs() <= tolerance
}

/// Exact relative comparison on rationals: `|actual/expected - 1| <= tol`.
pub fn ratio_within(actual: &BigRational, expected: &BigRational, tolerance: &BigRational) -> bool {
    if expected.is_zero() {
        return actual.is_zero();
    }
    let rel = (actual / expected - BigRational::from(BigInt::from(1))).abs();
    rel <= *tolerance
}

/// Serde helpers rendering big integers as decimal strings in JSON.
pub mod biguint_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
