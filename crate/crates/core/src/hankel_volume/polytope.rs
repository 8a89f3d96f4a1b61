//! Exact volume of unit-cube cross-sections
//! `{ y in [0,1]^d : 0 <= f(y) <= 1 for each integer affine form f }`.
//!
//! Vertices are enumerated by solving every nonsingular choice of `d` tight
//! functionals, kept as primitive homogeneous integer vectors `(D, N)` with
//! `y = N / D`. The polytope is then cut into simplices by a pulling
//! triangulation over the face lattice, and simplex volumes are summed as
//! exact rationals.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};

use super::AffineForm;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Functional {
    coeffs: Vec<i64>,
    constant: i64,
}

impl Functional {
    /// Numerator of `f(N / D)` scaled by `D`.
    fn scaled_value(&self, v: &Vertex) -> i128 {
        let dot: i128 = self
            .coeffs
            .iter()
            .zip(&v.num)
            .map(|(&c, &x)| c as i128 * x as i128)
            .sum();
        dot + self.constant as i128 * v.den as i128
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Vertex {
    den: i64,
    num: Vec<i64>,
}

impl Vertex {
    fn normalized(den: i128, num: Vec<i128>) -> Self {
        let (den, num) = if den < 0 {
            (-den, num.into_iter().map(|x| -x).collect())
        } else {
            (den, num)
        };
        let g = num.iter().fold(den, |g, &x| g.gcd(&x));
        let g = if g == 0 { 1 } else { g };
        Vertex {
            den: i64::try_from(den / g).expect("vertex denominator fits in i64"),
            num: num
                .into_iter()
                .map(|x| i64::try_from(x / g).expect("vertex numerator fits in i64"))
                .collect(),
        }
    }
}

/// Exact Lebesgue measure of the cross-section cut out of `[0,1]^dim` by
/// `0 <= form <= 1` for every form.
pub(crate) fn cube_section_volume(dim: usize, forms: &[AffineForm]) -> BigRational {
    let Some(functionals) = functionals(dim, forms) else {
        return BigRational::zero();
    };
    if dim == 0 {
        return BigRational::one();
    }
    let vertices = enumerate_vertices(dim, &functionals);
    if vertices.len() < dim + 1 || affine_rank(&vertices) < dim {
        return BigRational::zero();
    }

    // tight[v] has bit 2t set when functional t is 0 at v, bit 2t+1 when it is 1
    let tight: Vec<u64> = vertices
        .iter()
        .map(|v| {
            functionals.iter().enumerate().fold(0u64, |mask, (t, f)| {
                let val = f.scaled_value(v);
                let mut m = mask;
                if val == 0 {
                    m |= 1 << (2 * t);
                }
                if val == v.den as i128 {
                    m |= 1 << (2 * t + 1);
                }
                m
            })
        })
        .collect();

    let mut ctx = Triangulation {
        vertices: &vertices,
        tight: &tight,
        hyperplanes: 2 * functionals.len(),
        dim,
        chain: Vec::with_capacity(dim + 1),
        sum: BigRational::zero(),
    };
    let all: Vec<u32> = (0..vertices.len() as u32).collect();
    ctx.pull(&all, dim);

    let factorial: BigInt = (1..=dim as u64).map(BigInt::from).product();
    ctx.sum / BigRational::from_integer(factorial)
}

/// Unit coordinates plus the deduplicated non-constant forms; `None` when a
/// constant form already violates its bounds.
fn functionals(dim: usize, forms: &[AffineForm]) -> Option<Vec<Functional>> {
    let mut out: Vec<Functional> = (0..dim)
        .map(|i| {
            let mut coeffs = vec![0; dim];
            coeffs[i] = 1;
            Functional { coeffs, constant: 0 }
        })
        .collect();
    for f in forms {
        assert_eq!(f.coeffs.len(), dim, "form dimension mismatch");
        if f.coeffs.iter().all(|&c| c == 0) {
            if !(0..=1).contains(&f.constant) {
                return None;
            }
            continue;
        }
        let g = Functional {
            coeffs: f.coeffs.clone(),
            constant: f.constant,
        };
        if !out.contains(&g) {
            out.push(g);
        }
    }
    assert!(2 * out.len() <= 64, "too many functionals for the tight-set mask");
    Some(out)
}

fn enumerate_vertices(dim: usize, functionals: &[Functional]) -> Vec<Vertex> {
    let mut seen: HashMap<Vertex, ()> = HashMap::new();
    let mut ordered = Vec::new();
    for subset in combinations(functionals.len(), dim) {
        let rows: Vec<&Functional> = subset.iter().map(|&t| &functionals[t]).collect();
        let Some((den, adj)) = scaled_inverse(&rows) else {
            continue;
        };
        for bits in 0u32..(1 << dim) {
            // rhs_t = bound_t - constant_t
            let rhs: Vec<i128> = rows
                .iter()
                .enumerate()
                .map(|(t, f)| ((bits >> t) & 1) as i128 - f.constant as i128)
                .collect();
            let num: Vec<i128> = adj
                .iter()
                .map(|row| row.iter().zip(&rhs).map(|(a, b)| a * b).sum())
                .collect();
            let v = Vertex::normalized(den, num);
            let feasible = functionals.iter().all(|f| {
                let val = f.scaled_value(&v);
                0 <= val && val <= v.den as i128
            });
            if feasible && seen.insert(v.clone(), ()).is_none() {
                ordered.push(v);
            }
        }
    }
    ordered
}

/// `(D, M)` with `A^{-1} = M / D`, all integers, or `None` if singular.
fn scaled_inverse(rows: &[&Functional]) -> Option<(i128, Vec<Vec<i128>>)> {
    let d = rows.len();
    let mut a: Vec<Vec<Ratio<i128>>> = rows
        .iter()
        .enumerate()
        .map(|(r, f)| {
            let mut row: Vec<Ratio<i128>> = f.coeffs.iter().map(|&c| Ratio::from_integer(c as i128)).collect();
            row.extend((0..d).map(|c| Ratio::from_integer((c == r) as i128)));
            row
        })
        .collect();
    for col in 0..d {
        let pivot = (col..d).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let p = a[col][col];
        for x in a[col].iter_mut() {
            *x /= p;
        }
        for r in 0..d {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col];
                for c in 0..2 * d {
                    let delta = factor * a[col][c];
                    a[r][c] -= delta;
                }
            }
        }
    }
    let den = a
        .iter()
        .flat_map(|row| row[d..].iter())
        .fold(1i128, |l, x| l.lcm(x.denom()));
    let inv = a
        .iter()
        .map(|row| {
            row[d..]
                .iter()
                .map(|x| x.numer() * (den / x.denom()))
                .collect()
        })
        .collect();
    Some((den, inv))
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    go(0, n, r, &mut cur, &mut out);
    out
}

struct Triangulation<'a> {
    vertices: &'a [Vertex],
    tight: &'a [u64],
    hyperplanes: usize,
    dim: usize,
    chain: Vec<u32>,
    sum: BigRational,
}

impl Triangulation<'_> {
    /// Pulling triangulation of the face spanned by `face` (sorted vertex
    /// indices, of dimension `dim`): cone from its first vertex over every
    /// facet not containing it.
    fn pull(&mut self, face: &[u32], dim: usize) {
        let apex = face[0];
        self.chain.push(apex);
        if dim == 0 {
            self.add_simplex();
        } else {
            for facet in self.facets(face) {
                if facet[0] != apex {
                    self.pull(&facet, dim - 1);
                }
            }
        }
        self.chain.pop();
    }

    /// Facets of a face are its inclusion-maximal proper subsets of the form
    /// `face ∩ {f = bound}`.
    fn facets(&self, face: &[u32]) -> Vec<Vec<u32>> {
        let mut candidates: Vec<Vec<u32>> = Vec::new();
        for h in 0..self.hyperplanes {
            let bit = 1u64 << h;
            let sub: Vec<u32> = face
                .iter()
                .copied()
                .filter(|&v| self.tight[v as usize] & bit != 0)
                .collect();
            if !sub.is_empty() && sub.len() < face.len() && !candidates.contains(&sub) {
                candidates.push(sub);
            }
        }
        let maximal: Vec<Vec<u32>> = candidates
            .iter()
            .filter(|c| {
                !candidates
                    .iter()
                    .any(|other| other.len() > c.len() && is_subset(c, other))
            })
            .cloned()
            .collect();
        maximal
    }

    fn add_simplex(&mut self) {
        debug_assert_eq!(self.chain.len(), self.dim + 1);
        // rows (D_i, N_i); det = prod(D_i) * det([1, y_i]) = ± prod(D_i) * d! * vol
        let rows: Vec<Vec<i128>> = self
            .chain
            .iter()
            .map(|&v| {
                let v = &self.vertices[v as usize];
                std::iter::once(v.den as i128)
                    .chain(v.num.iter().map(|&x| x as i128))
                    .collect()
            })
            .collect();
        let det = determinant(rows).abs();
        let denom: BigInt = self
            .chain
            .iter()
            .map(|&v| BigInt::from(self.vertices[v as usize].den))
            .product();
        self.sum += BigRational::new(det, denom);
    }
}

fn is_subset(small: &[u32], big: &[u32]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

/// Fraction-free (Bareiss) determinant, in `i128` with a `BigInt` fallback on
/// overflow.
fn determinant(rows: Vec<Vec<i128>>) -> BigInt {
    match bareiss_i128(rows.clone()) {
        Some(d) => BigInt::from(d),
        None => bareiss_big(
            rows.into_iter()
                .map(|r| r.into_iter().map(BigInt::from).collect())
                .collect(),
        ),
    }
}

fn bareiss_i128(mut m: Vec<Vec<i128>>) -> Option<i128> {
    let n = m.len();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            let swap = (k + 1..n).find(|&r| m[r][k] != 0);
            match swap {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return Some(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let a = m[i][j].checked_mul(m[k][k])?;
                let b = m[i][k].checked_mul(m[k][j])?;
                m[i][j] = a.checked_sub(b)? / prev;
            }
        }
        prev = m[k][k];
    }
    Some(sign * m[n - 1][n - 1])
}

fn bareiss_big(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// Affine rank of a vertex set.
fn affine_rank(vertices: &[Vertex]) -> usize {
    let base = &vertices[0];
    let mut rows: Vec<Vec<BigRational>> = vertices[1..]
        .iter()
        .map(|v| {
            v.num
                .iter()
                .zip(&base.num)
                .map(|(&x, &b)| {
                    BigRational::new(BigInt::from(x), BigInt::from(v.den))
                        - BigRational::new(BigInt::from(b), BigInt::from(base.den))
                })
                .collect()
        })
        .collect();
    let cols = base.num.len();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let p = rows[rank][col].clone();
        for r in rank + 1..rows.len() {
            if !rows[r][col].is_zero() {
                let factor = &rows[r][col] / &p;
                for c in col..cols {
                    let delta = &factor * &rows[rank][c];
                    rows[r][c] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn form(coeffs: &[i64], constant: i64) -> AffineForm {
        AffineForm {
            coeffs: coeffs.to_vec(),
            constant,
        }
    }

    #[test]
    fn plain_cube_has_unit_volume() {
        for d in 1..=5 {
            assert_eq!(cube_section_volume(d, &[]), ratio(1, 1));
        }
    }

    #[test]
    fn half_space_simplices() {
        // y1 + y2 <= 1 inside the unit square
        assert_eq!(cube_section_volume(2, &[form(&[1, 1], 0)]), ratio(1, 2));
        // y1 + y2 + y3 <= 1: standard simplex
        assert_eq!(cube_section_volume(3, &[form(&[1, 1, 1], 0)]), ratio(1, 6));
        // 0 <= y1 - y2 + 1/2... integer forms only: y1 - y2 in [0, 1] halves the square
        assert_eq!(cube_section_volume(2, &[form(&[1, -1], 0)]), ratio(1, 2));
    }

    #[test]
    fn slab_of_doubled_coordinate() {
        // 0 <= 2 y1 <= 1 cuts the square in half
        assert_eq!(cube_section_volume(2, &[form(&[2, 0], 0)]), ratio(1, 2));
        // 0 <= 2 y1 - y2 <= 1 inside the unit square: area 1/2
        assert_eq!(cube_section_volume(2, &[form(&[2, -1], 0)]), ratio(1, 2));
    }

    #[test]
    fn constant_forms() {
        assert_eq!(cube_section_volume(2, &[form(&[0, 0], 1)]), ratio(1, 1));
        assert_eq!(cube_section_volume(2, &[form(&[0, 0], 2)]), ratio(0, 1));
    }

    #[test]
    fn degenerate_section_has_zero_volume() {
        // y1 + y2 in [0,1] and y1 + y2 - 1 in [0,1] meet only on a line
        let v = cube_section_volume(2, &[form(&[1, 1], 0), form(&[1, 1], -1)]);
        assert_eq!(v, ratio(0, 1));
    }

    #[test]
    fn determinant_fallback_agrees() {
        let m = vec![vec![2, 0, 1], vec![1, 3, 2], vec![1, 1, 1]];
        assert_eq!(determinant(m.clone()), BigInt::from(bareiss_i128(m).unwrap()));
        let big = vec![vec![i128::MAX / 2, 1], vec![3, i128::MAX / 3]];
        assert!(bareiss_i128(big.clone()).is_none());
        let expected = BigInt::from(i128::MAX / 2) * BigInt::from(i128::MAX / 3) - BigInt::from(3);
        assert_eq!(determinant(big), expected);
    }
}
