//! Truncated moment sequences and the matrices built from them.
//!
//! A sequence `φ = (φ_α)` of order `n` stores one value for every `|α| ≤ 2n`,
//! laid out in the graded monomial order. Reading a moment outside that range
//! is an error; nothing is ever zero-filled.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::poly::{basis_size, MonomialIndex, MultiIndex, Poly};
use crate::scalar::Scalar;

/// Truncated moment sequence `(φ_α)_{|α| ≤ 2n}`.
#[derive(Debug, Clone)]
pub struct Moments<T: Scalar> {
    order: usize,
    index: Arc<MonomialIndex>,
    values: Vec<T>,
}

impl<T: Scalar> Moments<T> {
    /// Wraps `values`, which must follow `monomial_basis(d, 2·order)`.
    pub fn new(dimension: usize, order: usize, values: Vec<T>) -> Result<Self> {
        let index = Arc::new(MonomialIndex::new(dimension, 2 * order));
        Self::with_index(index, order, values)
    }

    pub fn with_index(index: Arc<MonomialIndex>, order: usize, values: Vec<T>) -> Result<Self> {
        let expected = basis_size(index.dimension(), 2 * order);
        if index.max_degree() < 2 * order {
            return Err(Error::DegreeOverflow {
                what: "moment index",
                needed: 2 * order,
                available: index.max_degree(),
            });
        }
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(Moments {
            order,
            index,
            values,
        })
    }

    pub fn from_fn<F: FnMut(&MultiIndex) -> T>(dimension: usize, order: usize, f: F) -> Self {
        let index = Arc::new(MonomialIndex::new(dimension, 2 * order));
        let values = index.basis().iter().map(f).collect();
        Moments {
            order,
            index,
            values,
        }
    }

    pub fn dimension(&self) -> usize {
        self.index.dimension()
    }

    /// Truncation half-degree `n`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn index(&self) -> &Arc<MonomialIndex> {
        &self.index
    }

    pub fn get(&self, alpha: &MultiIndex) -> Result<T> {
        if alpha.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: alpha.dimension(),
            });
        }
        if alpha.degree() > 2 * self.order {
            return Err(Error::DegreeOverflow {
                what: "moment access",
                needed: alpha.degree(),
                available: 2 * self.order,
            });
        }
        let pos = self
            .index
            .position(alpha)
            .expect("index covers every |α| ≤ 2n");
        Ok(self.values[pos])
    }

    /// `φ(1)`.
    pub fn mass(&self) -> T {
        self.values[0]
    }

    /// `φ(x) = (φ(x_1), …, φ(x_d))`.
    pub fn first_moments(&self) -> Vec<T> {
        let d = self.dimension();
        if self.order == 0 {
            // degree-1 moments are outside an order-0 truncation
            return vec![T::nan(); d];
        }
        (0..d)
            .map(|i| self.values[self.index.position(&MultiIndex::unit(d, i)).unwrap()])
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Dense symmetric matrix; writes mirror across the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat<T: Scalar> {
    side: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMat<T> {
    pub fn zeros(side: usize) -> Self {
        SymMat {
            side,
            data: vec![T::zero(); side * side],
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.side + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.side + j] = v;
        self.data[j * self.side + i] = v;
    }

    /// `cᵀ M c`.
    pub fn quad_form(&self, c: &[T]) -> T {
        assert_eq!(c.len(), self.side);
        let mut acc = T::zero();
        for i in 0..self.side {
            for j in 0..self.side {
                acc = acc + c[i] * self.get(i, j) * c[j];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.side, self.side, |i, j| self.get(i, j).to_f64_lossy())
    }

    /// Smallest eigenvalue, computed in `f64`. Empty matrices report `+∞`.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.side == 0 {
            return f64::INFINITY;
        }
        SymmetricEigen::new(self.to_dmatrix())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// PSD up to `min eig ≥ −tol·(1 + ‖M‖₂)`.
    pub fn is_psd(&self, tol: f64) -> bool {
        if self.side == 0 {
            return true;
        }
        let eig = SymmetricEigen::new(self.to_dmatrix()).eigenvalues;
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let norm = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        min >= -tol * (1.0 + norm)
    }
}

/// Positions `(α, β) ↦ index of α+β` for the order-`k` moment matrix.
///
/// Positions refer to the graded basis, so they are valid for any sequence
/// whose truncation is at least `k`.
#[derive(Debug, Clone)]
pub struct HankelMap {
    side: usize,
    positions: Vec<usize>,
}

impl HankelMap {
    pub fn new(dimension: usize, k: usize) -> Self {
        let rows = MonomialIndex::new(dimension, k);
        let sums = MonomialIndex::new(dimension, 2 * k);
        let side = rows.len();
        let mut positions = Vec::with_capacity(side * side);
        for a in rows.basis() {
            for b in rows.basis() {
                positions.push(sums.position(&(a + b)).expect("|α+β| ≤ 2k"));
            }
        }
        HankelMap { side, positions }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Moment position feeding entry `(i, j)`.
    pub fn position(&self, i: usize, j: usize) -> usize {
        self.positions[i * self.side + j]
    }
}

/// Riesz functional `φ(p) = Σ_α p_α φ_α`.
pub fn riesz_apply<T: Scalar>(phi: &Moments<T>, p: &Poly<T>) -> Result<T> {
    if p.dimension() != phi.dimension() {
        return Err(Error::DimensionMismatch {
            expected: phi.dimension(),
            found: p.dimension(),
        });
    }
    let mut acc = T::zero();
    for (alpha, c) in p.terms() {
        acc = acc + c * phi.get(alpha)?;
    }
    Ok(acc)
}

/// Shifted sequence `(g·φ)_α = Σ_γ g_γ φ_{α+γ}`, truncated at order
/// `n − ⌈deg g / 2⌉`.
pub fn shift_sequence<T: Scalar>(phi: &Moments<T>, g: &Poly<T>) -> Result<Moments<T>> {
    if g.dimension() != phi.dimension() {
        return Err(Error::DimensionMismatch {
            expected: phi.dimension(),
            found: g.dimension(),
        });
    }
    let half = g.half_degree();
    if half > phi.order() {
        return Err(Error::DegreeOverflow {
            what: "shift polynomial",
            needed: g.degree().unwrap_or(0),
            available: 2 * phi.order(),
        });
    }
    let order = phi.order() - half;
    let len = basis_size(phi.dimension(), 2 * order);
    let mut values = Vec::with_capacity(len);
    for alpha in &phi.index().basis()[..len] {
        let mut acc = T::zero();
        for (gamma, c) in g.terms() {
            acc = acc + c * phi.get(&(alpha + gamma))?;
        }
        values.push(acc);
    }
    let index = if order == phi.order() {
        phi.index().clone()
    } else {
        Arc::new(MonomialIndex::new(phi.dimension(), 2 * order))
    };
    Moments::with_index(index, order, values)
}

/// Moment matrix `M_k(φ)` with entry `(α, β) = φ_{α+β}`.
pub fn moment_matrix<T: Scalar>(phi: &Moments<T>, k: usize) -> Result<SymMat<T>> {
    if k > phi.order() {
        return Err(Error::DegreeOverflow {
            what: "moment matrix",
            needed: 2 * k,
            available: 2 * phi.order(),
        });
    }
    let map = HankelMap::new(phi.dimension(), k);
    Ok(moment_matrix_with(phi, &map))
}

/// Builds `M_k(φ)` from a precomputed index map.
pub fn moment_matrix_with<T: Scalar>(phi: &Moments<T>, map: &HankelMap) -> SymMat<T> {
    let mut m = SymMat::zeros(map.side());
    for i in 0..map.side() {
        for j in 0..=i {
            m.set(i, j, phi.values()[map.position(i, j)]);
        }
    }
    m
}

/// Localizing matrix `M_k(g·φ)`, entry `(α, β) = Σ_γ g_γ φ_{α+β+γ}`.
pub fn localizing_matrix<T: Scalar>(phi: &Moments<T>, g: &Poly<T>, k: usize) -> Result<SymMat<T>> {
    let needed = 2 * k + g.degree().unwrap_or(0);
    if needed > 2 * phi.order() {
        return Err(Error::DegreeOverflow {
            what: "localizing matrix",
            needed,
            available: 2 * phi.order(),
        });
    }
    moment_matrix(&shift_sequence(phi, g)?, k)
}

/// Moments `φ_α = Σ_i w_i z_iᵅ` of a finitely supported probability measure.
pub fn atomic_moments<T: Scalar>(points: &[Vec<T>], weights: &[T], order: usize) -> Result<Moments<T>> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("atomic measure needs at least one point".into()));
    }
    if points.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: weights.len(),
        });
    }
    let d = points[0].len();
    if let Some(bad) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    if weights.iter().any(|&w| !(w > T::zero())) {
        return Err(Error::InvalidArgument("atomic weights must be positive".into()));
    }
    let total: T = weights.iter().copied().sum();
    if (total - T::one()).abs().to_f64_lossy() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "atomic weights must sum to 1, got {total}"
        )));
    }
    Ok(Moments::from_fn(d, order, |alpha| {
        points
            .iter()
            .zip(weights)
            .fold(T::zero(), |acc, (z, &w)| acc + w * alpha.eval_monomial(z))
    }))
}
