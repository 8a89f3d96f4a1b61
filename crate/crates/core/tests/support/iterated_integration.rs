//! Symbolic iterated-integration oracle for unit-cube cross-section volumes.
//!
//! Integrates the indicator of `{ y in [0,1]^d : 0 <= L_j(y) <= 1 }` one
//! variable at a time. For the innermost variable, every choice of active
//! lower bound `ℓ` and active upper bound `u` defines a region (where `ℓ` is
//! the largest lower bound, `u` the smallest upper bound, and `ℓ <= u`); on
//! that region the integral is `F(u) - F(ℓ)` for the antiderivative `F`, a
//! polynomial in the remaining variables. Regions overlap only on sets of
//! measure zero. Everything is exact rational arithmetic and shares no code
//! with the vertex-enumeration path in the library.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

type Q = BigRational;

fn q(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

/// Affine form `coeffs · y + constant`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Linear {
    coeffs: Vec<Q>,
    constant: Q,
}

impl Linear {
    fn sub(&self, other: &Linear) -> Linear {
        Linear {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
            constant: &self.constant - &other.constant,
        }
    }

    fn scale(&self, s: &Q) -> Linear {
        Linear {
            coeffs: self.coeffs.iter().map(|a| a * s).collect(),
            constant: &self.constant * s,
        }
    }

    fn is_constant(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }
}

/// Multivariate polynomial: exponent vector -> coefficient.
#[derive(Clone, Debug, PartialEq)]
struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Q>,
}

impl Poly {
    fn constant(nvars: usize, c: Q) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![0; nvars], c);
        }
        Poly { nvars, terms }
    }

    fn from_linear(l: &Linear) -> Poly {
        let n = l.coeffs.len();
        let mut p = Poly::constant(n, l.constant.clone());
        for (i, c) in l.coeffs.iter().enumerate() {
            if !c.is_zero() {
                let mut e = vec![0; n];
                e[i] = 1;
                p.terms.insert(e, c.clone());
            }
        }
        p
    }

    fn add(&self, other: &Poly) -> Poly {
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            let entry = terms.entry(e.clone()).or_insert_with(Q::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(e);
            }
        }
        Poly { nvars: self.nvars, terms }
    }

    fn neg(&self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::constant(self.nvars, Q::zero());
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                let entry = out.terms.entry(e.clone()).or_insert_with(Q::zero);
                *entry += c1 * c2;
                if entry.is_zero() {
                    out.terms.remove(&e);
                }
            }
        }
        out
    }

    fn pow(&self, k: u32) -> Poly {
        (0..k).fold(Poly::constant(self.nvars, Q::one()), |acc, _| acc.mul(self))
    }

    /// Antiderivative in variable `v`.
    fn antiderivative(&self, v: usize) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut e = e.clone();
                    e[v] += 1;
                    let div = q(e[v] as i64);
                    (e, c / div)
                })
                .collect(),
        }
    }

    /// Substitutes `y_v := l` where `l` does not involve `y_v`.
    fn substitute(&self, v: usize, l: &Linear) -> Poly {
        let lp = Poly::from_linear(l);
        let mut out = Poly::constant(self.nvars, Q::zero());
        for (e, c) in &self.terms {
            let mut rest = e.clone();
            let k = rest[v];
            rest[v] = 0;
            let mut mono = Poly::constant(self.nvars, c.clone());
            mono.terms = BTreeMap::from([(rest, c.clone())]);
            out = out.add(&mono.mul(&lp.pow(k)));
        }
        out
    }

    fn constant_term(&self) -> Q {
        self.terms.get(&vec![0; self.nvars]).cloned().unwrap_or_else(Q::zero)
    }
}

/// Integral of `integrand` over `{ y in R^nvars : g(y) >= 0 for g in constraints }`,
/// eliminating variables from the last one down.
fn integrate(integrand: Poly, constraints: Vec<Linear>, nvars: usize) -> Q {
    let mut kept = Vec::new();
    for g in constraints {
        if g.is_constant() {
            if g.constant.is_negative() {
                return Q::zero();
            }
        } else if !kept.contains(&g) {
            kept.push(g);
        }
    }
    if nvars == 0 {
        return integrand.constant_term();
    }
    if integrand.terms.is_empty() {
        return Q::zero();
    }
    let v = nvars - 1;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut others = Vec::new();
    for g in kept {
        let a = g.coeffs[v].clone();
        if a.is_zero() {
            others.push(g);
            continue;
        }
        // a y_v + rest >= 0  <=>  y_v >= -rest/a (a > 0) or y_v <= rest/(-a) (a < 0)
        let mut rest = g.clone();
        rest.coeffs[v] = Q::zero();
        if a.is_positive() {
            let b = rest.scale(&(-Q::one() / &a));
            if !lower.contains(&b) {
                lower.push(b);
            }
        } else {
            let b = rest.scale(&(-Q::one() / &a));
            if !upper.contains(&b) {
                upper.push(b);
            }
        }
    }
    assert!(!lower.is_empty() && !upper.is_empty(), "region must be bounded");
    let anti = integrand.antiderivative(v);
    let mut total = Q::zero();
    for (i, lo) in lower.iter().enumerate() {
        for (j, hi) in upper.iter().enumerate() {
            let mut cons = others.clone();
            for (i2, lo2) in lower.iter().enumerate() {
                if i2 != i {
                    cons.push(lo.sub(lo2));
                }
            }
            for (j2, hi2) in upper.iter().enumerate() {
                if j2 != j {
                    cons.push(hi2.sub(hi));
                }
            }
            cons.push(hi.sub(lo));
            let piece = anti.substitute(v, hi).add(&anti.substitute(v, lo).neg());
            total += integrate(piece, cons, nvars - 1);
        }
    }
    total
}

/// Volume of `{ y in [0,1]^d : 0 <= Σ_t coeffs[t] y_t + constant <= 1 }` for
/// each `(coeffs, constant)`.
pub fn cube_section_volume(dim: usize, forms: &[(Vec<i64>, i64)]) -> BigRational {
    let mut constraints = Vec::new();
    for t in 0..dim {
        let mut coeffs = vec![Q::zero(); dim];
        coeffs[t] = Q::one();
        let y = Linear {
            coeffs,
            constant: Q::zero(),
        };
        constraints.push(y.clone());
        constraints.push(Linear {
            coeffs: vec![Q::zero(); dim],
            constant: Q::one(),
        }
        .sub(&y));
    }
    for (coeffs, constant) in forms {
        let f = Linear {
            coeffs: coeffs.iter().map(|&c| q(c)).collect(),
            constant: q(*constant),
        };
        constraints.push(f.clone());
        constraints.push(Linear {
            coeffs: vec![Q::zero(); dim],
            constant: Q::one(),
        }
        .sub(&f));
    }
    integrate(Poly::constant(dim, Q::one()), constraints, dim)
}
