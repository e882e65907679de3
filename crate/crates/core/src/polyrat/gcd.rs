//! Multivariate polynomial GCD. The heuristic evaluation/interpolation GCD
//! handles almost every input; recursive primitive pseudo-remainder
//! sequences are the fallback.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::Polynomial;

/// Greatest common divisor, normalized to integer coefficients with content 1
/// and a positive leading coefficient. `gcd(0, 0) = 0`.
pub fn gcd(a: &Polynomial, b: &Polynomial) -> Polynomial {
    if a.is_zero() {
        return b.primitive();
    }
    if b.is_zero() {
        return a.primitive();
    }
    if a.is_constant() || b.is_constant() {
        return Polynomial::one();
    }
    if a == b {
        return a.primitive();
    }
    if !a.vars().iter().any(|v| b.vars().contains(v)) {
        return Polynomial::one();
    }
    if let Some(g) = heuristic_gcd(&a.primitive(), &b.primitive()) {
        return g.primitive();
    }
    let var = main_variable(a, b);
    let content_a = content_in(a, &var);
    let content_b = content_in(b, &var);
    let common_content = gcd(&content_a, &content_b);
    let pa = a.div_exact(&content_a).expect("content divides polynomial");
    let pb = b.div_exact(&content_b).expect("content divides polynomial");
    let g = primitive_prs(pa, pb, &var);
    common_content.mul(&g).primitive()
}

const HEURISTIC_TRIES: usize = 6;

fn integer(c: &BigRational) -> &BigInt {
    debug_assert!(c.is_integer());
    c.numer()
}

fn max_norm(p: &Polynomial) -> BigInt {
    p.terms()
        .map(|(_, c)| integer(c).abs())
        .max()
        .unwrap_or_else(BigInt::zero)
}

fn integer_content(p: &Polynomial) -> BigInt {
    p.terms().fold(BigInt::zero(), |g, (_, c)| g.gcd(integer(c)))
}

/// GCD of integer-coefficient polynomials by evaluating the main variable at
/// a large integer, recursing, and reading the result back in base `xi`.
/// A candidate is accepted only if it divides both inputs. `None` when no
/// evaluation point succeeds.
fn heuristic_gcd(f: &Polynomial, g: &Polynomial) -> Option<Polynomial> {
    if f.is_zero() {
        return Some(g.clone());
    }
    if g.is_zero() {
        return Some(f.clone());
    }
    let cf = integer_content(f);
    let cg = integer_content(g);
    let common = Polynomial::constant(BigRational::from_integer(cf.gcd(&cg)));
    if f.is_constant() || g.is_constant() {
        return Some(common);
    }
    let f = f.scale(&BigRational::from_integer(cf).recip());
    let g = g.scale(&BigRational::from_integer(cg).recip());
    let var = main_variable(&f, &g);
    let (nf, ng) = (max_norm(&f), max_norm(&g));
    let bound: BigInt = BigInt::from(2) * nf.clone().min(ng.clone()) + 29;
    let lead = |n: &BigInt, p: &Polynomial| n / integer(&p.leading_coefficient()).abs();
    let mut xi = bound
        .clone()
        .min(BigInt::from(99) * bound.sqrt())
        .max(BigInt::from(2) * lead(&nf, &f).min(lead(&ng, &g)) + 2);
    for _ in 0..HEURISTIC_TRIES {
        let at: BTreeMap<String, BigRational> = [(var.clone(), BigRational::from_integer(xi.clone()))].into();
        let ff = f.substitute(&at);
        let gg = g.substitute(&at);
        if !ff.is_zero() && !gg.is_zero() {
            let h = heuristic_gcd(&ff, &gg)?;
            let candidate = interpolate(h, &var, &xi);
            if !candidate.is_zero() {
                let candidate = candidate.primitive();
                if f.div_exact(&candidate).is_some() && g.div_exact(&candidate).is_some() {
                    return Some(common.mul(&candidate));
                }
            }
        }
        xi = &xi * BigInt::from(73794) * xi.sqrt().sqrt() / BigInt::from(27011);
    }
    None
}

/// Reads the coefficients of `var` from `h` as symmetric base-`xi` digits.
fn interpolate(mut h: Polynomial, var: &str, xi: &BigInt) -> Polynomial {
    let half = xi / 2;
    let inv = BigRational::from_integer(xi.clone()).recip();
    let mut out = Polynomial::zero();
    let mut k = 0;
    while !h.is_zero() {
        let vars = h.vars().to_vec();
        let digit = Polynomial::from_terms(
            vars,
            h.terms().map(|(m, c)| {
                let mut r = integer(c).mod_floor(xi);
                if r > half {
                    r -= xi;
                }
                (m.exponents().to_vec(), BigRational::from_integer(r))
            }),
        );
        out = out.add(&digit.mul_var_pow(var, k));
        h = h.sub(&digit).scale(&inv);
        k += 1;
    }
    out
}

fn main_variable(a: &Polynomial, b: &Polynomial) -> String {
    // Prefer a variable both share; otherwise any variable of either.
    a.vars()
        .iter()
        .find(|v| b.vars().contains(v))
        .or_else(|| a.vars().first())
        .or_else(|| b.vars().first())
        .cloned()
        .expect("non-constant polynomial has a variable")
}

/// Content of `p` viewed as a univariate polynomial in `var` over the ring of
/// polynomials in the remaining variables.
pub fn content_in(p: &Polynomial, var: &str) -> Polynomial {
    let mut g = Polynomial::zero();
    for k in (0..=p.degree_in(var)).rev() {
        let c = p.coeff_in(var, k);
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, &c);
        if g.is_constant() {
            return Polynomial::one();
        }
    }
    g
}

fn primitive_part_in(p: &Polynomial, var: &str) -> Polynomial {
    if p.is_zero() {
        return Polynomial::zero();
    }
    let c = content_in(p, var);
    p.div_exact(&c).expect("content divides polynomial").primitive()
}

fn pseudo_remainder(a: &Polynomial, b: &Polynomial, var: &str) -> Polynomial {
    let db = b.degree_in(var);
    let lc_b = b.coeff_in(var, db);
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(var) >= db {
        let dr = r.degree_in(var);
        let lc_r = r.coeff_in(var, dr);
        r = r.mul(&lc_b).sub(&lc_r.mul(&b.mul_var_pow(var, dr - db)));
    }
    r
}

fn primitive_prs(a: Polynomial, b: Polynomial, var: &str) -> Polynomial {
    let (mut a, mut b) = if a.degree_in(var) >= b.degree_in(var) {
        (a, b)
    } else {
        (b, a)
    };
    loop {
        if b.is_zero() {
            return primitive_part_in(&a, var);
        }
        if b.degree_in(var) == 0 {
            return Polynomial::one();
        }
        let r = pseudo_remainder(&a, &b, var);
        a = b;
        b = primitive_part_in(&r, var);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Polynomial {
        Polynomial::var("x")
    }
    fn y() -> Polynomial {
        Polynomial::var("y")
    }
    fn c(n: i64) -> Polynomial {
        Polynomial::from_integer(n)
    }

    #[test]
    fn univariate_common_factor() {
        let f = x().sub(&c(1));
        let a = f.mul(&x().add(&c(2)));
        let b = f.mul(&x().add(&c(3)));
        assert_eq!(gcd(&a, &b), f);
    }

    #[test]
    fn bivariate_common_factor() {
        let f = x().mul(&y()).add(&c(1));
        let a = f
            .mul(&x().add(&y()))
            .scale(&num_rational::BigRational::new(3.into(), 2.into()));
        let b = f.mul(&f).mul(&y());
        assert_eq!(gcd(&a, &b), f);
    }

    #[test]
    fn coprime_polynomials() {
        let a = x().add(&y());
        let b = x().sub(&y());
        assert!(gcd(&a, &b).is_one());
    }

    #[test]
    fn content_factor_in_other_variable() {
        // (y+1)*x and (y+1)*(x+1) share y+1
        let yp1 = y().add(&c(1));
        let a = yp1.mul(&x());
        let b = yp1.mul(&x().add(&c(1)));
        assert_eq!(gcd(&a, &b), yp1);
    }

    #[test]
    fn one_minus_factors() {
        let one = c(1);
        let a = one.sub(&x()).mul(&one.sub(&y()));
        let b = one.sub(&x());
        assert_eq!(gcd(&a, &b), x().sub(&one));
    }
}
