//! Exact rational arithmetic and trivariate polynomials.
//!
//! Polynomials are stored as a sorted map from exponent triples to
//! coefficients with no explicit zeros. The same container is used with
//! [`Rational`] coefficients (lemma checks, oracle integration) and with
//! `f64` coefficients (cubic lifts).

use std::collections::BTreeMap;
use std::fmt::{self, Debug};
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Exponents `(a, b, c)` of `x^a y^b z^c`.
pub type Exponent = [u32; 3];

/// Four vertices of a tetrahedron with exact coordinates.
pub type RationalTet = [[Rational; 3]; 4];

pub trait Coefficient:
    Clone + Debug + PartialEq + Num + Neg<Output = Self> + FromPrimitive
{
}

impl<T> Coefficient for T where
    T: Clone + Debug + PartialEq + Num + Neg<Output = T> + FromPrimitive
{
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Always `num/den`, including integers (`0/1`, `3/1`).
pub fn fraction_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses the `num/den` (or bare integer) form produced by [`fraction_string`].
pub fn parse_fraction(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rational::new(n, d))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

#[derive(Clone, PartialEq)]
pub struct Poly<T> {
    terms: BTreeMap<Exponent, T>,
}

pub type MultiPoly = Poly<Rational>;

impl<T: Coefficient> Default for Poly<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Coefficient> Poly<T> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::monomial([0, 0, 0], c)
    }

    pub fn monomial(exp: Exponent, c: T) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        Self { terms }
    }

    /// The coordinate function `x`, `y` or `z` for `axis` 0, 1, 2.
    pub fn var(axis: usize) -> Self {
        let mut exp = [0; 3];
        exp[axis] = 1;
        Self::monomial(exp, T::one())
    }

    pub fn from_terms<I: IntoIterator<Item = (Exponent, T)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, exp: Exponent, c: T) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exp).or_insert_with(T::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.remove(&exp);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial reports 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e[0] + e[1] + e[2]).max().unwrap_or(0)
    }

    pub fn coeff(&self, exp: Exponent) -> T {
        self.terms.get(&exp).cloned().unwrap_or_else(T::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &T)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::from_terms(self.terms.iter().map(|(e, c)| (*e, c.clone() * s.clone())))
    }

    pub fn partial_derivative(&self, axis: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e[axis] == 0 {
                continue;
            }
            let mut d = *e;
            d[axis] -= 1;
            let k = T::from_u32(e[axis]).expect("exponent fits the coefficient type");
            out.add_term(d, c.clone() * k);
        }
        out
    }

    pub fn gradient(&self) -> [Self; 3] {
        [
            self.partial_derivative(0),
            self.partial_derivative(1),
            self.partial_derivative(2),
        ]
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(T::one());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn eval(&self, point: &[T; 3]) -> T {
        let max = self.max_exponents();
        let powers: Vec<Vec<T>> = (0..3).map(|d| power_table(&point[d], max[d])).collect();
        let mut acc = T::zero();
        for (e, c) in &self.terms {
            acc = acc
                + c.clone()
                    * powers[0][e[0] as usize].clone()
                    * powers[1][e[1] as usize].clone()
                    * powers[2][e[2] as usize].clone();
        }
        acc
    }

    /// `p(B ξ + t)` as a polynomial in `ξ`.
    pub fn affine_substitute(&self, b: &[[T; 3]; 3], t: &[T; 3]) -> Self {
        let images: Vec<Self> = (0..3)
            .map(|i| {
                let mut q = Self::constant(t[i].clone());
                for j in 0..3 {
                    q.add_term(unit(j), b[i][j].clone());
                }
                q
            })
            .collect();
        let max = self.max_exponents();
        let powers: Vec<Vec<Self>> = (0..3)
            .map(|d| {
                let mut table = vec![Self::constant(T::one())];
                for k in 1..=max[d] as usize {
                    let next = &table[k - 1] * &images[d];
                    table.push(next);
                }
                table
            })
            .collect();
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let prod = &(&powers[0][e[0] as usize] * &powers[1][e[1] as usize])
                * &powers[2][e[2] as usize];
            out = &out + &prod.scale(c);
        }
        out
    }

    pub fn map_coeffs<U: Coefficient>(&self, f: impl Fn(&T) -> U) -> Poly<U> {
        Poly::from_terms(self.terms.iter().map(|(e, c)| (*e, f(c))))
    }

    fn max_exponents(&self) -> [u32; 3] {
        let mut m = [0; 3];
        for e in self.terms.keys() {
            for d in 0..3 {
                m[d] = m[d].max(e[d]);
            }
        }
        m
    }
}

impl MultiPoly {
    pub fn to_f64(&self) -> Poly<f64> {
        self.map_coeffs(|c| c.to_f64().unwrap_or(f64::NAN))
    }
}

fn unit(axis: usize) -> Exponent {
    let mut e = [0; 3];
    e[axis] = 1;
    e
}

fn power_table<T: Coefficient>(x: &T, max: u32) -> Vec<T> {
    let mut v = Vec::with_capacity(max as usize + 1);
    v.push(T::one());
    for k in 1..=max as usize {
        let next = v[k - 1].clone() * x.clone();
        v.push(next);
    }
    v
}

impl<T: Coefficient> Add for &Poly<T> {
    type Output = Poly<T>;
    fn add(self, rhs: &Poly<T>) -> Poly<T> {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl<T: Coefficient> Sub for &Poly<T> {
    type Output = Poly<T>;
    fn sub(self, rhs: &Poly<T>) -> Poly<T> {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl<T: Coefficient> Mul for &Poly<T> {
    type Output = Poly<T>;
    fn mul(self, rhs: &Poly<T>) -> Poly<T> {
        let mut out = Poly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                out.add_term(
                    [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]],
                    ca.clone() * cb.clone(),
                );
            }
        }
        out
    }
}

impl<T: Coefficient> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        self.map_coeffs(|c| -c.clone())
    }
}

macro_rules! forward_owned_binop {
    ($tr:ident, $m:ident) => {
        impl<T: Coefficient> $tr for Poly<T> {
            type Output = Poly<T>;
            fn $m(self, rhs: Poly<T>) -> Poly<T> {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);

impl<T: Coefficient + fmt::Display> fmt::Display for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            if *e != [0, 0, 0] {
                write!(f, "*{}", monomial_name(*e))?;
            }
        }
        Ok(())
    }
}

impl<T: Coefficient + fmt::Display> Debug for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `x^2*y`, `x*y*z`, `1`.
pub fn monomial_name(e: Exponent) -> String {
    let parts: Vec<String> = ["x", "y", "z"]
        .iter()
        .zip(e)
        .filter(|(_, k)| *k > 0)
        .map(|(v, k)| if k == 1 { v.to_string() } else { format!("{v}^{k}") })
        .collect();
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join("*")
    }
}

/// All exponents of total degree `<= degree`, graded, then by descending
/// powers of x and y. For `degree = 3` this is the 20-element cubic basis.
pub fn monomials_up_to(degree: u32) -> Vec<Exponent> {
    let mut out = Vec::new();
    for d in 0..=degree {
        for a in (0..=d).rev() {
            for b in (0..=d - a).rev() {
                out.push([a, b, d - a - b]);
            }
        }
    }
    out
}

fn factorial(k: u32) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `∫ x^a y^b z^c` over the reference simplex `{x, y, z >= 0, x + y + z <= 1}`:
/// `a! b! c! / (a + b + c + 3)!`.
pub fn reference_monomial_integral(e: Exponent) -> Rational {
    Rational::new(
        factorial(e[0]) * factorial(e[1]) * factorial(e[2]),
        factorial(e[0] + e[1] + e[2] + 3),
    )
}

/// Edge matrix `B` (columns `v_k - v_0`) and its determinant.
fn edge_matrix(tet: &RationalTet) -> ([[Rational; 3]; 3], Rational) {
    let b: [[Rational; 3]; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|j| &tet[j + 1][i] - &tet[0][i])
    });
    let det = det3(&b);
    (b, det)
}

pub fn det3(m: &[[Rational; 3]; 3]) -> Rational {
    &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
        - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
        + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
}

/// Signed volume `det(B) / 6`.
pub fn signed_volume(tet: &RationalTet) -> Rational {
    edge_matrix(tet).1 / int(6)
}

/// Exact `∫_tet p` by affine pullback to the reference simplex.
pub fn integrate_over_tet(p: &MultiPoly, tet: &RationalTet) -> Result<Rational> {
    let (b, det) = edge_matrix(tet);
    if det.is_zero() {
        return Err(Error::DegenerateTetrahedron);
    }
    let pulled = p.affine_substitute(&b, &tet[0]);
    let mut acc = Rational::zero();
    for (e, c) in pulled.terms() {
        acc += c * reference_monomial_integral(*e);
    }
    Ok(acc * det.abs())
}

/// Barycentric coordinates `λ_0..λ_3` of `tet` as affine polynomials.
pub fn barycentric(tet: &RationalTet) -> Result<[MultiPoly; 4]> {
    let (b, det) = edge_matrix(tet);
    if det.is_zero() {
        return Err(Error::DegenerateTetrahedron);
    }
    // ξ = B⁻¹ (x − v0), B⁻¹ = adj(B) / det
    let cof = |r: usize, c: usize| -> Rational {
        let rows: Vec<usize> = (0..3).filter(|&i| i != r).collect();
        let cols: Vec<usize> = (0..3).filter(|&j| j != c).collect();
        let minor = &b[rows[0]][cols[0]] * &b[rows[1]][cols[1]]
            - &b[rows[0]][cols[1]] * &b[rows[1]][cols[0]];
        if (r + c).is_multiple_of(2) {
            minor
        } else {
            -minor
        }
    };
    let mut lambdas: [MultiPoly; 4] = Default::default();
    for k in 0..3 {
        // row k of B⁻¹ is column k of the cofactor matrix, over det
        let row: [Rational; 3] = std::array::from_fn(|j| cof(j, k) / &det);
        let mut l = MultiPoly::zero();
        let mut shift = Rational::zero();
        for j in 0..3 {
            l.add_term(unit(j), row[j].clone());
            shift -= &row[j] * &tet[0][j];
        }
        l.add_term([0, 0, 0], shift);
        lambdas[k + 1] = l;
    }
    let mut l0 = MultiPoly::constant(int(1));
    for l in &lambdas[1..] {
        l0 = &l0 - l;
    }
    lambdas[0] = l0;
    Ok(lambdas)
}

/// Local P2 node ordering: the four vertices, then midpoints of edges
/// (0,1), (0,2), (0,3), (1,2), (1,3), (2,3).
pub const P2_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub fn p2_nodes(tet: &RationalTet) -> [[Rational; 3]; 10] {
    std::array::from_fn(|i| {
        if i < 4 {
            tet[i].clone()
        } else {
            let (a, b) = P2_EDGES[i - 4];
            std::array::from_fn(|d| (&tet[a][d] + &tet[b][d]) / int(2))
        }
    })
}

/// The ten P2 Lagrange basis functions of `tet`, in physical coordinates.
pub fn p2_basis(tet: &RationalTet) -> Result<[MultiPoly; 10]> {
    let l = barycentric(tet)?;
    let one = MultiPoly::constant(int(1));
    let four = int(4);
    Ok(std::array::from_fn(|i| {
        if i < 4 {
            &l[i] * &(&l[i].scale(&int(2)) - &one)
        } else {
            let (a, b) = P2_EDGES[i - 4];
            (&l[a] * &l[b]).scale(&four)
        }
    }))
}

/// The P2 nodal interpolant `I_2 p` on `tet`.
pub fn p2_interpolate(p: &MultiPoly, tet: &RationalTet) -> Result<MultiPoly> {
    let basis = p2_basis(tet)?;
    let nodes = p2_nodes(tet);
    let mut out = MultiPoly::zero();
    for (phi, x) in basis.iter().zip(nodes.iter()) {
        out = &out + &phi.scale(&p.eval(x));
    }
    Ok(out)
}

/// `∫_tet ∇a · ∇b`, exact.
pub fn integrate_grad_dot(a: &MultiPoly, b: &MultiPoly, tet: &RationalTet) -> Result<Rational> {
    let ga = a.gradient();
    let gb = b.gradient();
    let mut integrand = MultiPoly::zero();
    for d in 0..3 {
        integrand = &integrand + &(&ga[d] * &gb[d]);
    }
    integrate_over_tet(&integrand, tet)
}

/// Converts integer lattice coordinates to an exact tetrahedron.
pub fn tet_from_ints(v: [[i64; 3]; 4]) -> RationalTet {
    v.map(|p| p.map(int))
}

/// Parses a compact polynomial description used in tests and the Python
/// bindings: a list of `(exponent, "num/den")` pairs.
pub fn poly_from_fractions(terms: &[(Exponent, &str)]) -> Option<MultiPoly> {
    let mut p = MultiPoly::zero();
    for (e, s) in terms {
        p.add_term(*e, parse_fraction(s)?);
    }
    Some(p)
}

/// Solves `m x = rhs` exactly by Gauss–Jordan elimination; `None` if singular.
pub fn solve_rational(mut m: Vec<Vec<Rational>>, mut rhs: Vec<Vec<Rational>>) -> Option<Vec<Vec<Rational>>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = m[col][col].recip();
        for v in m[col].iter_mut() {
            *v *= &inv;
        }
        for v in rhs[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            for c in 0..n {
                let delta = &factor * &m[col][c];
                m[r][c] -= delta;
            }
            for c in 0..rhs[r].len() {
                let delta = &factor * &rhs[col][c];
                rhs[r][c] -= delta;
            }
        }
    }
    Some(rhs)
}
