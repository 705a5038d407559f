//! Sparse multivariate polynomials, multi-indices and monomial bases.
//!
//! Monomials are ordered graded-lexicographically everywhere: first by total
//! degree, then lexicographically with `x1 > x2 > ... > xd`. With `d = 2` the
//! order starts `1, x1, x2, x1^2, x1 x2, x2^2, ...`. Every matrix row/column
//! index in the crate follows this order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exponent vector `α ∈ ℕᵈ` of a monomial `x^α`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zeros(dimension: usize) -> Self {
        MultiIndex(vec![0; dimension])
    }

    /// The exponent of the single variable `x_i` (zero-based `i`).
    pub fn unit(dimension: usize, i: usize) -> Self {
        let mut e = vec![0; dimension];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|α|`.
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// `x^α` evaluated at `x`.
    pub fn eval_monomial<T: Scalar>(&self, x: &[T]) -> T {
        self.0
            .iter()
            .zip(x)
            .fold(T::one(), |acc, (&e, &xi)| acc * xi.powi(e as i32))
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;

    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.0.len(), rhs.0.len());
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            // higher power of an earlier variable comes first
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// Number of monomials of degree at most `n` in `d` variables, `C(d+n, n)`.
pub fn basis_size(d: usize, n: usize) -> usize {
    // incremental product stays integral: C(d+k, k) = C(d+k-1, k-1) (d+k) / k
    (1..=n).fold(1usize, |acc, k| acc * (d + k) / k)
}

/// All multi-indices with `|α| ≤ n`, in graded-lexicographic order.
pub fn monomial_basis(d: usize, n: usize) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(basis_size(d, n));
    let mut current = vec![0u32; d];
    for degree in 0..=n {
        push_compositions(&mut out, &mut current, 0, degree as u32);
    }
    out
}

fn push_compositions(out: &mut Vec<MultiIndex>, current: &mut [u32], pos: usize, remaining: u32) {
    let d = current.len();
    if d == 0 {
        if remaining == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos == d - 1 {
        current[pos] = remaining;
        out.push(MultiIndex(current.to_vec()));
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        push_compositions(out, current, pos + 1, remaining - e);
    }
    current[pos] = 0;
}

/// A monomial basis together with its reverse lookup table.
///
/// Because the order is graded, the basis of degree `k` is a prefix of the
/// basis of any degree `n ≥ k`, so positions are stable across truncations.
#[derive(Debug, Clone)]
pub struct MonomialIndex {
    dimension: usize,
    max_degree: usize,
    basis: Vec<MultiIndex>,
    positions: HashMap<MultiIndex, usize>,
}

impl MonomialIndex {
    pub fn new(dimension: usize, max_degree: usize) -> Self {
        let basis = monomial_basis(dimension, max_degree);
        let positions = basis
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        MonomialIndex {
            dimension,
            max_degree,
            basis,
            positions,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn basis(&self) -> &[MultiIndex] {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Position of `alpha`, or `None` when `|α|` exceeds the indexed degree.
    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.positions.get(alpha).copied()
    }

    /// Number of basis elements of degree at most `k` (a prefix length).
    pub fn prefix_len(&self, k: usize) -> usize {
        basis_size(self.dimension, k.min(self.max_degree))
    }
}

/// Sparse polynomial `Σ_α c_α x^α` in a fixed number of variables.
///
/// No stored coefficient is zero: after every arithmetic operation terms with
/// magnitude below [`Scalar::cleanup_threshold`] are removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T: Scalar> {
    dimension: usize,
    terms: BTreeMap<MultiIndex, T>,
}

impl<T: Scalar> Poly<T> {
    pub fn zero(dimension: usize) -> Self {
        Poly {
            dimension,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dimension: usize, c: T) -> Self {
        let mut p = Self::zero(dimension);
        p.add_term(MultiIndex::zeros(dimension), c);
        p
    }

    /// The coordinate polynomial `x_i` (zero-based).
    pub fn variable(dimension: usize, i: usize) -> Self {
        let mut p = Self::zero(dimension);
        p.add_term(MultiIndex::unit(dimension, i), T::one());
        p
    }

    pub fn monomial(alpha: MultiIndex, c: T) -> Self {
        let mut p = Self::zero(alpha.dimension());
        p.add_term(alpha, c);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs. Repeated
    /// exponents are summed.
    pub fn from_terms<I>(dimension: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, T)>,
    {
        let mut p = Self::zero(dimension);
        for (alpha, c) in terms {
            if alpha.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: alpha.dimension(),
                });
            }
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite coefficient {c} for {:?}",
                    alpha.exponents()
                )));
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    /// `1 − ‖x‖²`.
    pub fn unit_ball(dimension: usize) -> Self {
        let mut p = Self::constant(dimension, T::one());
        for i in 0..dimension {
            let mut e = vec![0; dimension];
            e[i] = 2;
            p.add_term(MultiIndex(e), -T::one());
        }
        p
    }

    fn add_term(&mut self, alpha: MultiIndex, c: T) {
        let entry = self.terms.entry(alpha);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                if c.abs() >= T::cleanup_threshold() {
                    v.insert(c);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = *o.get() + c;
                if sum.abs() < T::cleanup_threshold() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Total degree, or `None` for the zero polynomial (which sorts below
    /// every finite degree).
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    /// `⌈deg/2⌉`, with the zero polynomial mapped to 0.
    pub fn half_degree(&self) -> usize {
        self.degree().map_or(0, |d| d.div_ceil(2))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in graded-lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, T)> + '_ {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> T {
        self.terms.get(alpha).copied().unwrap_or_else(T::zero)
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: x.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .fold(T::zero(), |acc, (alpha, &c)| acc + c * alpha.eval_monomial(x)))
    }

    /// `∂p/∂x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dimension);
        for (alpha, &c) in &self.terms {
            let e = alpha.0[i];
            if e == 0 {
                continue;
            }
            let mut beta = alpha.clone();
            beta.0[i] -= 1;
            out.add_term(beta, c * T::from_usize_lossy(e as usize));
        }
        out
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.dimension).map(|i| self.derivative(i)).collect()
    }

    /// Matrix of second partials. Entry `(i, j)` uses the integer factor
    /// `α_i (α_j − δ_ij)` so both triangles receive bitwise-identical values.
    pub fn hessian(&self) -> PolyMat<T> {
        let d = self.dimension;
        let mut h = PolyMat::zeros(d, d, d);
        for i in 0..d {
            for j in i..d {
                let mut entry = Self::zero(d);
                for (alpha, &c) in &self.terms {
                    let ai = alpha.0[i] as usize;
                    let aj = alpha.0[j] as usize;
                    let factor = if i == j {
                        ai * ai.saturating_sub(1)
                    } else {
                        ai * aj
                    };
                    if factor == 0 {
                        continue;
                    }
                    let mut beta = alpha.clone();
                    beta.0[i] -= 1;
                    beta.0[j] -= 1;
                    entry.add_term(beta, c * T::from_usize_lossy(factor));
                }
                h.set(j, i, entry.clone());
                h.set(i, j, entry);
            }
        }
        h
    }

    /// The polynomial `x' ↦ p(R x')`: each `c_α` becomes `c_α R^{|α|}`.
    pub fn scale_substitute(&self, radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "scaling radius must be positive and finite, got {radius}"
            )));
        }
        let mut out = Self::zero(self.dimension);
        for (alpha, &c) in &self.terms {
            out.add_term(alpha.clone(), c * radius.powi(alpha.degree() as i32));
        }
        Ok(out)
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = Self::zero(self.dimension);
        for (alpha, &c) in &self.terms {
            out.add_term(alpha.clone(), c * s);
        }
        out
    }

    pub fn map_coefficients<F: FnMut(&MultiIndex, T) -> T>(&self, mut f: F) -> Self {
        let mut out = Self::zero(self.dimension);
        for (alpha, &c) in &self.terms {
            out.add_term(alpha.clone(), f(alpha, c));
        }
        out
    }

    /// Largest coefficient difference `max_α |p_α − q_α|`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for (alpha, &c) in &self.terms {
            worst = worst.max((c - other.coefficient(alpha)).abs());
        }
        for (alpha, &c) in &other.terms {
            if !self.terms.contains_key(alpha) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }

    pub fn max_abs_coefficient(&self) -> T {
        self.terms.values().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    fn check_dims(&self, other: &Self) {
        assert_eq!(
            self.dimension, other.dimension,
            "polynomial dimension mismatch"
        );
    }
}

impl<T: Scalar> Add for &Poly<T> {
    type Output = Poly<T>;

    fn add(self, rhs: &Poly<T>) -> Poly<T> {
        self.check_dims(rhs);
        let mut out = self.clone();
        for (alpha, &c) in &rhs.terms {
            out.add_term(alpha.clone(), c);
        }
        out
    }
}

impl<T: Scalar> Sub for &Poly<T> {
    type Output = Poly<T>;

    fn sub(self, rhs: &Poly<T>) -> Poly<T> {
        self.check_dims(rhs);
        let mut out = self.clone();
        for (alpha, &c) in &rhs.terms {
            out.add_term(alpha.clone(), -c);
        }
        out
    }
}

impl<T: Scalar> Mul for &Poly<T> {
    type Output = Poly<T>;

    fn mul(self, rhs: &Poly<T>) -> Poly<T> {
        self.check_dims(rhs);
        let mut out = Poly::zero(self.dimension);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &rhs.terms {
                out.add_term(a + b, ca * cb);
            }
        }
        out
    }
}

impl<T: Scalar> Neg for &Poly<T> {
    type Output = Poly<T>;

    fn neg(self) -> Poly<T> {
        self.scale(-T::one())
    }
}

impl<T: Scalar> fmt::Display for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (alpha, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (i, &e) in alpha.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

/// Dense matrix with polynomial entries (Hessians, certificate factors).
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMat<T: Scalar> {
    rows: usize,
    cols: usize,
    dimension: usize,
    entries: Vec<Poly<T>>,
}

impl<T: Scalar> PolyMat<T> {
    pub fn zeros(rows: usize, cols: usize, dimension: usize) -> Self {
        PolyMat {
            rows,
            cols,
            dimension,
            entries: vec![Poly::zero(dimension); rows * cols],
        }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Poly<T>>(
        rows: usize,
        cols: usize,
        dimension: usize,
        mut f: F,
    ) -> Self {
        let mut m = Self::zeros(rows, cols, dimension);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, i: usize, j: usize) -> &Poly<T> {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: Poly<T>) {
        assert_eq!(p.dimension(), self.dimension);
        self.entries[i * self.cols + j] = p;
    }

    pub fn entries(&self) -> impl Iterator<Item = &Poly<T>> {
        self.entries.iter()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, self.dimension, |i, j| {
            self.get(j, i).clone()
        })
    }

    /// Coefficientwise symmetry (exact equality).
    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Largest entry degree, `None` when every entry is zero.
    pub fn degree(&self) -> Option<usize> {
        self.entries.iter().filter_map(Poly::degree).max()
    }

    pub fn scale_by(&self, p: &Poly<T>) -> Self {
        Self::from_fn(self.rows, self.cols, self.dimension, |i, j| self.get(i, j) * p)
    }

    pub fn eval(&self, x: &[T]) -> Result<DMatrix<T>> {
        let mut out = DMatrix::from_element(self.rows, self.cols, T::zero());
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self.get(i, j).eval(x)?;
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(T::zero(), |m, (a, b)| m.max(a.max_abs_diff(b)))
    }
}

impl<T: Scalar> Add for &PolyMat<T> {
    type Output = PolyMat<T>;

    fn add(self, rhs: &PolyMat<T>) -> PolyMat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        PolyMat::from_fn(self.rows, self.cols, self.dimension, |i, j| {
            self.get(i, j) + rhs.get(i, j)
        })
    }
}

impl<T: Scalar> Mul for &PolyMat<T> {
    type Output = PolyMat<T>;

    fn mul(self, rhs: &PolyMat<T>) -> PolyMat<T> {
        assert_eq!(self.cols, rhs.rows);
        PolyMat::from_fn(self.rows, rhs.cols, self.dimension, |i, j| {
            (0..self.cols).fold(Poly::zero(self.dimension), |acc, k| {
                &acc + &(self.get(i, k) * rhs.get(k, j))
            })
        })
    }
}
