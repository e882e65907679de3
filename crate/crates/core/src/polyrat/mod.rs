//! Exact arithmetic over sparse multivariate polynomials and their quotients.

mod gcd;
mod poly;
mod rational;
mod sign;
mod text;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

pub use gcd::gcd;
pub use poly::{Monomial, Point, Polynomial};
pub use rational::RationalFunction;
pub use sign::{polynomial_sign, rational_sign, Domain, SignCheck};
pub use text::{parse_rational_function, to_decimal};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("division by the zero function")]
    DivisionByZero,
    #[error("denominator vanishes at the evaluation point")]
    Pole,
    #[error("no value assigned to parameter `{0}`")]
    MissingAssignment(String),
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

/// Nearest `f64` to an exact rational, robust to huge numerators/denominators.
pub fn to_f64(x: &BigRational) -> f64 {
    if let Some(v) = x.to_f64().filter(|v| v.is_finite()) {
        return v;
    }
    let n = x.numer().to_f64().unwrap_or(f64::NAN);
    let d = x.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        return n / d;
    }
    // Shift both to a representable range.
    let shift = x.numer().bits().max(x.denom().bits()).saturating_sub(1000);
    let n = (x.numer() >> shift).to_f64().unwrap_or(0.0);
    let d = (x.denom() >> shift).to_f64().unwrap_or(1.0);
    n / d
}

/// Parses an exact rational from `3`, `-0.04`, `2/24` or `1e-7`.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    use num_bigint::BigInt;
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if num_traits::Zero::is_zero(&d) {
            return None;
        }
        return Some(n / d);
    }
    let (mantissa, exp) = match t.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse::<BigInt>().ok()? / 10;
    let scale = frac_part.len() as i32 - exp;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::new(all, num_traits::pow(ten, scale as usize))
    } else {
        BigRational::from_integer(all * num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        value = -value;
    }
    Some(value)
}
