use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::poly::{Point, Polynomial};
use super::rational::RationalFunction;

/// Outcome of a conservative sign check over a parameter box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SignCheck {
    /// Certified nonnegative everywhere on the box.
    Nonnegative,
    /// Negative at the witness point.
    Negative(Point),
    /// Neither certified nor refuted.
    Unknown,
}

/// Per-variable closed interval; variables not listed default to `[0, 1]`.
pub type Domain = BTreeMap<String, (BigRational, BigRational)>;

const MAX_BERNSTEIN_BOX: usize = 200_000;

fn binomial(n: u32, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn full_domain(vars: &[String], domain: &Domain) -> Domain {
    vars.iter()
        .map(|v| {
            let range = domain
                .get(v)
                .cloned()
                .unwrap_or_else(|| (BigRational::zero(), BigRational::one()));
            (v.clone(), range)
        })
        .collect()
}

/// Checks `p >= 0` on the box via Bernstein coefficients: all coefficients
/// nonnegative certifies the sign; a negative vertex value refutes it.
pub fn polynomial_sign(p: &Polynomial, domain: &Domain) -> SignCheck {
    if let Some(c) = p.as_constant() {
        return if c.is_negative() {
            SignCheck::Negative(Point::new())
        } else {
            SignCheck::Nonnegative
        };
    }
    let vars = p.vars().to_vec();
    let dom = full_domain(&vars, domain);
    let unit = p.affine_substitute(&dom);
    // `unit` may have dropped variables whose interval is degenerate.
    let degrees: Vec<u32> = vars.iter().map(|v| unit.degree_in(v)).collect();
    let box_size = degrees
        .iter()
        .try_fold(1usize, |acc, d| acc.checked_mul(*d as usize + 1));
    let vertex_witness = |corner: &[u32]| -> Point {
        vars.iter()
            .zip(corner)
            .map(|(v, &c)| {
                let (lo, hi) = &dom[v];
                (v.clone(), if c == 0 { lo.clone() } else { hi.clone() })
            })
            .collect()
    };
    let Some(box_size) = box_size.filter(|&b| b <= MAX_BERNSTEIN_BOX) else {
        return vertex_check(p, &vars, &dom);
    };
    let coeffs: Vec<(Vec<u32>, BigRational)> = unit
        .terms()
        .map(|(m, c)| {
            let exps = vars
                .iter()
                .map(|v| match unit.vars().iter().position(|u| u == v) {
                    Some(i) => m.exponents()[i],
                    None => 0,
                })
                .collect();
            (exps, c.clone())
        })
        .collect();
    let mut all_nonneg = true;
    let mut index = vec![0u32; vars.len()];
    for _ in 0..box_size {
        let mut b = BigRational::zero();
        for (j, a) in &coeffs {
            if j.iter().zip(&index).all(|(jj, ii)| jj <= ii) {
                let mut w = a.clone();
                for ((&jj, &ii), &n) in j.iter().zip(&index).zip(&degrees) {
                    w *= BigRational::new(binomial(ii, jj), binomial(n, jj));
                }
                b += w;
            }
        }
        if b.is_negative() {
            all_nonneg = false;
            let at_vertex = index.iter().zip(&degrees).all(|(i, n)| *i == 0 || i == n);
            if at_vertex {
                let corner: Vec<u32> = index.iter().map(|&i| u32::from(i > 0)).collect();
                return SignCheck::Negative(vertex_witness(&corner));
            }
        }
        for (slot, &n) in index.iter_mut().zip(&degrees) {
            if *slot < n {
                *slot += 1;
                break;
            }
            *slot = 0;
        }
    }
    if all_nonneg {
        SignCheck::Nonnegative
    } else {
        SignCheck::Unknown
    }
}

fn vertex_check(p: &Polynomial, vars: &[String], dom: &Domain) -> SignCheck {
    for mask in 0..(1u64 << vars.len().min(20)) {
        let point: Point = vars
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let (lo, hi) = &dom[v];
                (v.clone(), if mask >> i & 1 == 0 { lo.clone() } else { hi.clone() })
            })
            .collect();
        if p.evaluate(&point).is_ok_and(|x| x.is_negative()) {
            return SignCheck::Negative(point);
        }
    }
    SignCheck::Unknown
}

/// Sign check for a rational function: nonnegative when numerator and
/// denominator are each certified, or both certified nonpositive.
pub fn rational_sign(f: &RationalFunction, domain: &Domain) -> SignCheck {
    if let Some(c) = f.as_constant() {
        return if c.is_negative() {
            SignCheck::Negative(Point::new())
        } else {
            SignCheck::Nonnegative
        };
    }
    let num = polynomial_sign(f.numerator(), domain);
    let den = polynomial_sign(f.denominator(), domain);
    match (&num, &den) {
        (SignCheck::Nonnegative, SignCheck::Nonnegative) => SignCheck::Nonnegative,
        _ => {
            let neg_num = polynomial_sign(&f.numerator().neg(), domain);
            let neg_den = polynomial_sign(&f.denominator().neg(), domain);
            if neg_num == SignCheck::Nonnegative && neg_den == SignCheck::Nonnegative {
                return SignCheck::Nonnegative;
            }
            // Look for a definite witness where the value is negative.
            for witness in [&num, &den, &neg_num, &neg_den] {
                if let SignCheck::Negative(pt) = witness {
                    if f.evaluate(pt).is_ok_and(|x| x.is_negative()) {
                        return SignCheck::Negative(pt.clone());
                    }
                }
            }
            SignCheck::Unknown
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Polynomial {
        Polynomial::var("x")
    }

    #[test]
    fn complement_is_nonnegative_on_unit_interval() {
        let p = Polynomial::one().sub(&x());
        assert_eq!(polynomial_sign(&p, &Domain::new()), SignCheck::Nonnegative);
    }

    #[test]
    fn negative_vertex_is_refuted() {
        let p = x().sub(&Polynomial::from_integer(2));
        assert!(matches!(polynomial_sign(&p, &Domain::new()), SignCheck::Negative(_)));
    }

    #[test]
    fn interior_dip_is_unknown_or_negative() {
        // (2x-1)^2 - 1/10 dips below zero at x = 1/2 but is positive at the vertices.
        let t = x().scale(&BigRational::from_integer(2.into())).sub(&Polynomial::one());
        let p = t
            .mul(&t)
            .sub(&Polynomial::constant(BigRational::new(1.into(), 10.into())));
        assert_eq!(polynomial_sign(&p, &Domain::new()), SignCheck::Unknown);
    }

    #[test]
    fn square_is_certified() {
        // (x - 1/2)^2 has a nonnegative Bernstein form after degree elevation only;
        // the direct form gives coefficients 1/4, -1/4, 1/4 and stays unknown.
        let t = x().sub(&Polynomial::constant(BigRational::new(1.into(), 2.into())));
        let p = t.mul(&t);
        assert_ne!(polynomial_sign(&p, &Domain::new()), SignCheck::Nonnegative);
        let q = x().mul(&Polynomial::var("y"));
        assert_eq!(polynomial_sign(&q, &Domain::new()), SignCheck::Nonnegative);
    }

    #[test]
    fn custom_domain() {
        let p = x().sub(&Polynomial::constant(BigRational::new(1.into(), 2.into())));
        let mut dom = Domain::new();
        dom.insert("x".into(), (BigRational::new(1.into(), 2.into()), BigRational::one()));
        assert_eq!(polynomial_sign(&p, &dom), SignCheck::Nonnegative);
    }
}
