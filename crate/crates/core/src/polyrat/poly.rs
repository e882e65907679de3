use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::PolyError;

/// Exponent vector, ordered by total degree and then lexicographically
/// (graded lexicographic order).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse multivariate polynomial with exact rational coefficients.
///
/// The variable list is sorted and contains exactly the variables that occur
/// with a nonzero exponent, so structurally equal polynomials compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    vars: Vec<String>,
    terms: BTreeMap<Monomial, BigRational>,
}

pub type Point = BTreeMap<String, BigRational>;

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial {
            vars: Vec::new(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial(Vec::new()), c);
        }
        Polynomial {
            vars: Vec::new(),
            terms,
        }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn var(name: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial(vec![1]), BigRational::one());
        Polynomial {
            vars: vec![name.to_string()],
            terms,
        }
    }

    /// Builds a polynomial from arbitrary terms over `vars`; duplicate
    /// variables are not allowed, zero coefficients are dropped.
    pub fn from_terms(vars: Vec<String>, terms: impl IntoIterator<Item = (Vec<u32>, BigRational)>) -> Self {
        let mut order: Vec<usize> = (0..vars.len()).collect();
        order.sort_by(|&a, &b| vars[a].cmp(&vars[b]));
        let sorted_vars: Vec<String> = order.iter().map(|&i| vars[i].clone()).collect();
        let mut map: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (exps, c) in terms {
            let mono = Monomial(order.iter().map(|&i| exps[i]).collect());
            *map.entry(mono).or_insert_with(BigRational::zero) += c;
        }
        Self::canonical(sorted_vars, map)
    }

    fn canonical(vars: Vec<String>, mut terms: BTreeMap<Monomial, BigRational>) -> Self {
        terms.retain(|_, c| !c.is_zero());
        let used: Vec<bool> = (0..vars.len()).map(|i| terms.keys().any(|m| m.0[i] > 0)).collect();
        if used.iter().all(|&u| u) {
            return Polynomial { vars, terms };
        }
        let vars = vars
            .into_iter()
            .zip(&used)
            .filter(|(_, &u)| u)
            .map(|(v, _)| v)
            .collect();
        let terms = terms
            .into_iter()
            .map(|(m, c)| {
                let exps = m.0.into_iter().zip(&used).filter(|(_, &u)| u).map(|(e, _)| e).collect();
                (Monomial(exps), c)
            })
            .collect();
        Polynomial { vars, terms }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// The value of a polynomial without variables.
    pub fn as_constant(&self) -> Option<BigRational> {
        if !self.vars.is_empty() {
            return None;
        }
        Some(self.terms.values().next().cloned().unwrap_or_else(BigRational::zero))
    }

    pub fn is_constant(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: &str) -> u32 {
        match self.var_index(var) {
            Some(i) => self.terms.keys().map(|m| m.0[i]).max().unwrap_or(0),
            None => 0,
        }
    }

    fn var_index(&self, var: &str) -> Option<usize> {
        self.vars.binary_search_by(|v| v.as_str().cmp(var)).ok()
    }

    /// Leading term in graded lexicographic order.
    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coefficient(&self) -> BigRational {
        self.leading().map(|(_, c)| c.clone()).unwrap_or_else(BigRational::zero)
    }

    /// Re-expresses the terms over a superset `vars` of this polynomial's variables.
    fn embed(&self, vars: &[String]) -> BTreeMap<Monomial, BigRational> {
        let positions: Vec<usize> = self
            .vars
            .iter()
            .map(|v| vars.binary_search(v).expect("variable missing from universe"))
            .collect();
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut exps = vec![0; vars.len()];
                for (e, &p) in m.0.iter().zip(&positions) {
                    exps[p] = *e;
                }
                (Monomial(exps), c.clone())
            })
            .collect()
    }

    fn universe(a: &Polynomial, b: &Polynomial) -> Vec<String> {
        if a.vars == b.vars {
            return a.vars.clone();
        }
        let mut vars: Vec<String> = a.vars.iter().chain(&b.vars).cloned().collect();
        vars.sort();
        vars.dedup();
        vars
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.combine(other, true)
    }

    fn combine(&self, other: &Polynomial, negate: bool) -> Polynomial {
        let vars = Self::universe(self, other);
        let mut terms = self.embed(&vars);
        for (m, c) in other.embed(&vars) {
            let entry = terms.entry(m).or_insert_with(BigRational::zero);
            if negate {
                *entry -= c;
            } else {
                *entry += c;
            }
        }
        Self::canonical(vars, terms)
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        let vars = Self::universe(self, other);
        let lhs = self.embed(&vars);
        let rhs = other.embed(&vars);
        let mut terms: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (ma, ca) in &lhs {
            for (mb, cb) in &rhs {
                let exps = ma.0.iter().zip(&mb.0).map(|(a, b)| a + b).collect();
                *terms.entry(Monomial(exps)).or_insert_with(BigRational::zero) += ca * cb;
            }
        }
        Self::canonical(vars, terms)
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn pow(&self, mut exp: u32) -> Polynomial {
        let mut base = self.clone();
        let mut acc = Polynomial::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Multiplies by `var^k`.
    pub fn mul_var_pow(&self, var: &str, k: u32) -> Polynomial {
        if k == 0 || self.is_zero() {
            return self.clone();
        }
        self.mul(&Polynomial::var(var).pow(k))
    }

    /// Coefficient of `var^k`, as a polynomial in the remaining variables.
    pub fn coeff_in(&self, var: &str, k: u32) -> Polynomial {
        let Some(i) = self.var_index(var) else {
            return if k == 0 { self.clone() } else { Polynomial::zero() };
        };
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.0[i] == k)
            .map(|(m, c)| {
                let mut exps = m.0.clone();
                exps[i] = 0;
                (Monomial(exps), c.clone())
            })
            .collect();
        Self::canonical(self.vars.clone(), terms)
    }

    /// Exact division; `None` when `divisor` does not divide `self`.
    pub fn div_exact(&self, divisor: &Polynomial) -> Option<Polynomial> {
        if divisor.is_zero() {
            return None;
        }
        if let Some(c) = divisor.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        if self.is_zero() {
            return Some(Polynomial::zero());
        }
        let vars = Self::universe(self, divisor);
        let mut rem = self.embed(&vars);
        let div = divisor.embed(&vars);
        let (lm_d, lc_d) = div.iter().next_back().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut quot: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        while let Some((lm_r, lc_r)) = rem.iter().next_back().map(|(m, c)| (m.clone(), c.clone())) {
            if !lm_d.divides(&lm_r) {
                return None;
            }
            let shift: Vec<u32> = lm_r.0.iter().zip(&lm_d.0).map(|(a, b)| a - b).collect();
            let factor = lc_r / &lc_d;
            for (m, c) in &div {
                let exps = m.0.iter().zip(&shift).map(|(a, b)| a + b).collect();
                let key = Monomial(exps);
                let entry = rem.entry(key.clone()).or_insert_with(BigRational::zero);
                *entry -= c * &factor;
                if entry.is_zero() {
                    rem.remove(&key);
                }
            }
            quot.insert(Monomial(shift), factor);
        }
        Some(Self::canonical(vars, quot))
    }

    /// Rational content: the positive-or-negative scalar `c` such that
    /// `self / c` has coprime integer coefficients and a positive leading
    /// coefficient. Zero for the zero polynomial.
    pub fn content(&self) -> BigRational {
        if self.is_zero() {
            return BigRational::zero();
        }
        let (num_gcd, den_lcm) = self.terms.values().fold((BigInt::zero(), BigInt::one()), |(g, l), c| {
            (g.gcd(c.numer()), l.lcm(c.denom()))
        });
        let c = BigRational::new(num_gcd, den_lcm);
        if self.leading_coefficient().is_negative() {
            -c
        } else {
            c
        }
    }

    /// Integer-coefficient primitive part with positive leading coefficient.
    pub fn primitive(&self) -> Polynomial {
        if self.is_zero() {
            return Polynomial::zero();
        }
        self.scale(&self.content().recip())
    }

    /// Largest monomial dividing every term.
    pub fn monomial_content(&self) -> Vec<u32> {
        let mut exps: Option<Vec<u32>> = None;
        for m in self.terms.keys() {
            exps = Some(match exps {
                None => m.0.clone(),
                Some(e) => e.iter().zip(&m.0).map(|(a, b)| *a.min(b)).collect(),
            });
        }
        exps.unwrap_or_default()
    }

    pub fn evaluate(&self, point: &Point) -> Result<BigRational, PolyError> {
        let values: Vec<&BigRational> = self
            .vars
            .iter()
            .map(|v| point.get(v).ok_or_else(|| PolyError::MissingAssignment(v.clone())))
            .collect::<Result<_, _>>()?;
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (e, v) in m.0.iter().zip(&values) {
                if *e > 0 {
                    t *= num_traits::pow((*v).clone(), *e as usize);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Substitutes the variables present in `point`, keeping the others symbolic.
    pub fn substitute(&self, point: &Point) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(c.clone());
            for (e, v) in m.0.iter().zip(&self.vars) {
                if *e == 0 {
                    continue;
                }
                let factor = match point.get(v) {
                    Some(x) => Polynomial::constant(num_traits::pow(x.clone(), *e as usize)),
                    None => Polynomial::var(v).pow(*e),
                };
                term = term.mul(&factor);
            }
            out = out.add(&term);
        }
        out
    }

    /// Replaces each variable `x` by `lo + (hi - lo) * x`.
    pub fn affine_substitute(&self, domain: &BTreeMap<String, (BigRational, BigRational)>) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(c.clone());
            for (e, v) in m.0.iter().zip(&self.vars) {
                if *e == 0 {
                    continue;
                }
                let base = match domain.get(v) {
                    Some((lo, hi)) => Polynomial::constant(lo.clone()).add(&Polynomial::var(v).scale(&(hi - lo))),
                    None => Polynomial::var(v),
                };
                term = term.mul(&base.pow(*e));
            }
            out = out.add(&term);
        }
        out
    }
}

fn write_coefficient(f: &mut fmt::Formatter<'_>, c: &BigRational) -> fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Polynomial {
    /// Terms in descending graded lexicographic order, e.g. `pc*pn - 2*pn + 1/3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let magnitude = c.abs();
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let factors: Vec<String> =
                m.0.iter()
                    .zip(&self.vars)
                    .filter(|(e, _)| **e > 0)
                    .map(|(e, v)| if *e == 1 { v.clone() } else { format!("{v}^{e}") })
                    .collect();
            if factors.is_empty() {
                write_coefficient(f, &magnitude)?;
            } else {
                if !magnitude.is_one() {
                    write_coefficient(f, &magnitude)?;
                    write!(f, "*")?;
                }
                write!(f, "{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn zero_coefficients_are_not_stored() {
        let x = Polynomial::var("x");
        let p = x.sub(&x);
        assert!(p.is_zero());
        assert!(p.vars().is_empty());
    }

    #[test]
    fn graded_lex_leading_term() {
        let x = Polynomial::var("x");
        let y = Polynomial::var("y");
        let p = x.pow(2).add(&x.mul(&y).mul(&y)).add(&Polynomial::one());
        let (lm, _) = p.leading().unwrap();
        assert_eq!(lm.exponents(), &[1, 2]);
    }

    #[test]
    fn exact_division() {
        let x = Polynomial::var("x");
        let y = Polynomial::var("y");
        let a = x.add(&y);
        let b = x.sub(&Polynomial::one());
        let prod = a.mul(&b);
        assert_eq!(prod.div_exact(&b).unwrap(), a);
        assert!(prod.div_exact(&x).is_none());
    }

    #[test]
    fn content_and_primitive_part() {
        let x = Polynomial::var("x");
        let p = x.scale(&q(-4, 3)).add(&Polynomial::constant(q(2, 9)));
        assert_eq!(p.content(), q(-2, 9));
        assert_eq!(p.primitive().to_string(), "6*x - 1");
    }

    #[test]
    fn coefficient_extraction() {
        let x = Polynomial::var("x");
        let y = Polynomial::var("y");
        let p = x.pow(2).mul(&y).add(&x.pow(2)).add(&y);
        assert_eq!(p.coeff_in("x", 2), y.add(&Polynomial::one()));
        assert_eq!(p.coeff_in("x", 0), y);
        assert_eq!(p.degree_in("x"), 2);
    }

    #[test]
    fn display_orders_terms() {
        let pn = Polynomial::var("pn");
        let pc = Polynomial::var("pc");
        let p = pn.mul(&pc).sub(&pn.scale(&q(2, 1))).add(&Polynomial::constant(q(1, 3)));
        assert_eq!(p.to_string(), "pc*pn - 2*pn + 1/3");
    }

    #[test]
    fn missing_assignment_is_reported() {
        let p = Polynomial::var("pn");
        assert!(matches!(
            p.evaluate(&Point::new()),
            Err(PolyError::MissingAssignment(v)) if v == "pn"
        ));
    }
}
