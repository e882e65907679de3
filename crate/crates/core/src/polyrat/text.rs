//! Parser for the infix text form produced by `Display`, e.g. `(pc*pn)/(1)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::rational::RationalFunction;
use super::PolyError;

struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, msg: &str) -> PolyError {
        PolyError::Syntax {
            offset: self.pos,
            message: msg.to_string(),
        }
    }

    fn expr(&mut self) -> Result<RationalFunction, PolyError> {
        let mut acc = if self.eat(b'-') {
            self.term()?.neg()
        } else {
            self.term()?
        };
        loop {
            if self.eat(b'+') {
                acc = acc.add(&self.term()?);
            } else if self.eat(b'-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<RationalFunction, PolyError> {
        let mut acc = self.power()?;
        loop {
            if self.eat(b'*') {
                acc = acc.mul(&self.power()?);
            } else if self.eat(b'/') {
                let rhs = self.power()?;
                acc = acc.div(&rhs)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<RationalFunction, PolyError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let start = self.pos;
            self.skip_ws();
            let digits = self.take_while(|c| c.is_ascii_digit());
            let exp: u32 = digits.parse().map_err(|_| PolyError::Syntax {
                offset: start,
                message: "expected exponent".into(),
            })?;
            return Ok(base.pow(exp));
        }
        Ok(base)
    }

    fn take_while(&mut self, f: impl Fn(u8) -> bool) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && f(self.src[self.pos]) {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn atom(&mut self) -> Result<RationalFunction, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(self.atom()?.neg())
            }
            Some(c) if c.is_ascii_digit() => {
                let int = self.take_while(|c| c.is_ascii_digit());
                let mut value = BigRational::from_integer(int.parse::<BigInt>().expect("digits"));
                if self.src.get(self.pos) == Some(&b'.') {
                    self.pos += 1;
                    let frac = self.take_while(|c| c.is_ascii_digit());
                    if frac.is_empty() {
                        return Err(self.err("expected digits after '.'"));
                    }
                    let scale = num_traits::pow(BigInt::from(10), frac.len());
                    value += BigRational::new(frac.parse::<BigInt>().expect("digits"), scale);
                }
                Ok(RationalFunction::constant(value))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let name = self.take_while(|c| c.is_ascii_alphanumeric() || c == b'_');
                Ok(RationalFunction::var(&name))
            }
            _ => Err(self.err("expected number, variable or '('")),
        }
    }
}

/// Parses an infix rational-function expression over named variables.
pub fn parse_rational_function(text: &str) -> Result<RationalFunction, PolyError> {
    let mut cur = Cursor {
        src: text.as_bytes(),
        pos: 0,
    };
    if cur.peek().is_none() {
        return Err(cur.err("empty input"));
    }
    let f = cur.expr()?;
    if cur.peek().is_some() {
        return Err(cur.err("trailing input"));
    }
    Ok(f)
}

/// Renders an exact rational as a decimal with `digits` significant digits.
/// Moderate magnitudes print in plain form, others in `1.6e-10` form.
pub fn to_decimal(value: &BigRational, digits: usize) -> String {
    if value.is_zero() {
        return "0".to_string();
    }
    let v = super::to_f64(value);
    let sci = format!("{:.*e}", digits.saturating_sub(1), v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..=6).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_round_trip() {
        let pn = RationalFunction::var("pn");
        let pc = RationalFunction::var("pc");
        let f = pn
            .mul(&pc)
            .sub(&RationalFunction::constant(BigRational::new(1.into(), 3.into())))
            .div(&RationalFunction::from_integer(2).add(&pn))
            .unwrap();
        let text = f.to_string();
        assert_eq!(parse_rational_function(&text).unwrap(), f);
    }

    #[test]
    fn parses_decimals_and_powers() {
        let f = parse_rational_function("0.04*x^2 - 1/4").unwrap();
        assert_eq!(f.to_string(), "(4*x^2 - 25)/(100)");
    }

    #[test]
    fn rejects_trailing_garbage() {
        assert!(parse_rational_function("(x)/(1))").is_err());
        assert!(parse_rational_function("").is_err());
        assert!(parse_rational_function("x/0").is_err());
    }

    #[test]
    fn decimal_rendering() {
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(to_decimal(&q(16, 10000), 12), "0.0016");
        assert_eq!(to_decimal(&q(1, 2929687500), 12), "3.41333333333e-10");
        assert_eq!(to_decimal(&q(1, 1), 12), "1");
        assert_eq!(to_decimal(&q(0, 1), 12), "0");
    }
}
