use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use super::gcd::gcd;
use super::poly::{Point, Polynomial};
use super::PolyError;

/// Quotient of two polynomials, kept in canonical form: numerator and
/// denominator coprime, jointly integer with content 1, denominator leading
/// coefficient positive, and `0` represented as `0/1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

/// Divides both polynomials by their gcd.
fn cancel(p: &Polynomial, q: &Polynomial) -> (Polynomial, Polynomial) {
    if p.is_constant() || q.is_constant() {
        return (p.clone(), q.clone());
    }
    let g = gcd(p, q);
    if g.is_one() {
        return (p.clone(), q.clone());
    }
    (
        p.div_exact(&g).expect("gcd divides polynomial"),
        q.div_exact(&g).expect("gcd divides polynomial"),
    )
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, PolyError> {
        if den.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        Ok(Self::normalized(num, den))
    }

    pub fn zero() -> Self {
        RationalFunction {
            num: Polynomial::zero(),
            den: Polynomial::one(),
        }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_polynomial(Polynomial::constant(c))
    }

    pub fn from_integer(n: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn var(name: &str) -> Self {
        Self::from_polynomial(Polynomial::var(name))
    }

    pub fn from_polynomial(p: Polynomial) -> Self {
        Self::normalized(p, Polynomial::one())
    }

    fn normalized(num: Polynomial, den: Polynomial) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let (num, den) = if num.is_constant() || den.is_constant() {
            (num, den)
        } else {
            let g = gcd(&num, &den);
            if g.is_one() {
                (num, den)
            } else {
                (
                    num.div_exact(&g).expect("gcd divides numerator"),
                    den.div_exact(&g).expect("gcd divides denominator"),
                )
            }
        };
        Self::coprime(num, den)
    }

    /// Canonical scaling of a numerator and denominator already known to be coprime.
    fn coprime(mut num: Polynomial, mut den: Polynomial) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        // Joint content: scale so all coefficients are integers sharing no factor.
        let (g, l) = num
            .terms()
            .chain(den.terms())
            .fold((BigInt::zero(), BigInt::one()), |(g, l), (_, c)| {
                (g.gcd(c.numer()), l.lcm(c.denom()))
            });
        let mut factor = BigRational::new(l, g);
        if den.leading_coefficient().is_negative() {
            factor = -factor;
        }
        if !factor.is_one() {
            num = num.scale(&factor);
            den = den.scale(&factor);
        }
        RationalFunction { num, den }
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        Some(self.num.as_constant()? / self.den.as_constant()?)
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    /// Sorted union of the variables of numerator and denominator.
    pub fn vars(&self) -> Vec<String> {
        let mut v: Vec<String> = self.num.vars().iter().chain(self.den.vars()).cloned().collect();
        v.sort();
        v.dedup();
        v
    }

    /// Size measure used for pivot selection: total degree of the denominator.
    pub fn denominator_degree(&self) -> u32 {
        self.den.total_degree()
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return Self::normalized(self.num.add(&other.num), self.den.clone());
        }
        // a/b + c/d with g = gcd(b, d): only g can share factors with the sum.
        let g = gcd(&self.den, &other.den);
        if g.is_one() {
            return Self::coprime(
                self.num.mul(&other.den).add(&other.num.mul(&self.den)),
                self.den.mul(&other.den),
            );
        }
        let b = self.den.div_exact(&g).expect("gcd divides denominator");
        let d = other.den.div_exact(&g).expect("gcd divides denominator");
        let t = self.num.mul(&d).add(&other.num.mul(&b));
        if t.is_zero() {
            return Self::zero();
        }
        let h = gcd(&t, &g);
        if h.is_one() {
            return Self::coprime(t, b.mul(&other.den));
        }
        let t = t.div_exact(&h).expect("gcd divides sum");
        let g = g.div_exact(&h).expect("gcd divides gcd");
        Self::coprime(t, b.mul(&d).mul(&g))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        RationalFunction {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        if self.is_one() {
            return other.clone();
        }
        if other.is_one() {
            return self.clone();
        }
        // Cross-cancel a/b · c/d before multiplying; the factors stay coprime.
        let (a, d) = cancel(&self.num, &other.den);
        let (c, b) = cancel(&other.num, &self.den);
        Self::coprime(a.mul(&c), b.mul(&d))
    }

    pub fn div(&self, other: &Self) -> Result<Self, PolyError> {
        if other.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        Ok(self.mul(&other.recip_unchecked()))
    }

    pub fn recip(&self) -> Result<Self, PolyError> {
        if self.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        Ok(self.recip_unchecked())
    }

    fn recip_unchecked(&self) -> Self {
        Self::normalized(self.den.clone(), self.num.clone())
    }

    pub fn pow(&self, exp: u32) -> Self {
        Self::normalized(self.num.pow(exp), self.den.pow(exp))
    }

    pub fn evaluate(&self, point: &Point) -> Result<BigRational, PolyError> {
        let d = self.den.evaluate(point)?;
        if d.is_zero() {
            return Err(PolyError::Pole);
        }
        Ok(self.num.evaluate(point)? / d)
    }

    /// Substitutes the parameters present in `point`; others stay symbolic.
    pub fn substitute(&self, point: &Point) -> Result<Self, PolyError> {
        let den = self.den.substitute(point);
        if den.is_zero() {
            return Err(PolyError::Pole);
        }
        Ok(Self::normalized(self.num.substitute(point), den))
    }

    /// Removes common factors. Arithmetic already keeps values in lowest
    /// terms, so this only matters for values assembled from raw parts.
    pub fn reduce(&self) -> Self {
        Self::normalized(self.num.clone(), self.den.clone())
    }

    /// Decides `self - other ≡ 0` by exact cross-multiplication. A few random
    /// evaluations run first and can only short-circuit to `false`.
    pub fn equivalent(&self, other: &Self) -> bool {
        let mut rng = rand::thread_rng();
        let mut vars = self.vars();
        vars.extend(other.vars());
        vars.sort();
        vars.dedup();
        for _ in 0..3 {
            let point: Point = vars
                .iter()
                .map(|v| {
                    let n: i64 = rng.gen_range(-1000..=1000);
                    let d: i64 = rng.gen_range(1..=997);
                    (v.clone(), BigRational::new(n.into(), d.into()))
                })
                .collect();
            if let (Ok(a), Ok(b)) = (self.evaluate(&point), other.evaluate(&point)) {
                if a != b {
                    return false;
                }
            }
        }
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

impl fmt::Display for RationalFunction {
    /// `(numerator)/(denominator)`, parse-able by [`super::parse_rational_function`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})/({})", self.num, self.den)
    }
}

impl From<Polynomial> for RationalFunction {
    fn from(p: Polynomial) -> Self {
        Self::from_polynomial(p)
    }
}

impl From<BigRational> for RationalFunction {
    fn from(c: BigRational) -> Self {
        Self::constant(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> RationalFunction {
        RationalFunction::var(name)
    }
    fn k(n: i64) -> RationalFunction {
        RationalFunction::from_integer(n)
    }
    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn complement_sums_to_one() {
        let x = v("x");
        assert!(x.add(&k(1).sub(&x)).is_one());
    }

    #[test]
    fn product_of_misclassification_parameters() {
        let p = v("pn").mul(&v("pc"));
        assert_eq!(p.to_string(), "(pc*pn)/(1)");
    }

    #[test]
    fn self_division_is_one() {
        let a = v("a");
        let f = a.div(&a.add(&v("b"))).unwrap();
        assert!(f.div(&f).unwrap().is_one());
    }

    #[test]
    fn division_by_zero_function() {
        assert_eq!(v("a").div(&k(0)), Err(PolyError::DivisionByZero));
        assert!(RationalFunction::new(Polynomial::one(), Polynomial::zero()).is_err());
    }

    #[test]
    fn evaluate_paper_point() {
        let p = v("pn").mul(&v("pc"));
        let point: Point = [("pn".into(), q(4, 100)), ("pc".into(), q(4, 100))].into();
        assert_eq!(p.evaluate(&point).unwrap(), q(16, 10000));
    }

    #[test]
    fn evaluate_constant_and_race() {
        let point: Point = [("a".into(), q(1, 1)), ("b".into(), q(3, 1))].into();
        assert_eq!(k(1).evaluate(&point).unwrap(), q(1, 1));
        let race = v("a").div(&v("a").add(&v("b"))).unwrap();
        assert_eq!(race.evaluate(&point).unwrap(), q(1, 4));
    }

    #[test]
    fn pole_is_reported() {
        let f = k(1).div(&v("a")).unwrap();
        let point: Point = [("a".into(), q(0, 1))].into();
        assert_eq!(f.evaluate(&point), Err(PolyError::Pole));
    }

    #[test]
    fn equivalence_examples() {
        assert!(v("pn").mul(&v("pc")).equivalent(&v("pc").mul(&v("pn"))));
        let sum = v("a").add(&v("b"));
        let fa = v("a").div(&sum).unwrap();
        let fb = v("b").div(&sum).unwrap();
        assert!(!fa.equivalent(&fb));
        let pn = v("pn");
        let pc = v("pc");
        let num = pn.pow(2).mul(&pc).sub(&pn.mul(&pc).mul(&pn));
        let f = num.div(&k(1).add(&pn)).unwrap();
        assert!(f.equivalent(&RationalFunction::zero()));
    }

    #[test]
    fn reduce_examples() {
        let pn = Polynomial::var("pn");
        let pc = Polynomial::var("pc");
        let two = Polynomial::from_integer(2);
        let f = RationalFunction::new(pn.mul(&two), two.clone()).unwrap().reduce();
        assert_eq!(f, v("pn"));
        let f = RationalFunction::new(pn.mul(&pc), pn.clone()).unwrap().reduce();
        assert_eq!(f, v("pc"));
        let one = Polynomial::one();
        let f = RationalFunction::new(one.sub(&pn).mul(&one.sub(&pc)), one.sub(&pn))
            .unwrap()
            .reduce();
        assert_eq!(f, k(1).sub(&v("pc")));
    }

    #[test]
    fn sign_normalization() {
        let f = RationalFunction::new(Polynomial::var("x"), Polynomial::from_integer(-2)).unwrap();
        assert_eq!(f.to_string(), "(-x)/(2)");
    }
}
