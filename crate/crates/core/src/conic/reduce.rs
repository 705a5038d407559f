//! Elimination of zero-cone rows.
//!
//! Equalities `E x = e` are solved once through a pivoted QR factorization of
//! `Eᵀ`: `x = x₀ + N w` with `N` an orthonormal null-space basis. What remains is a pure linear matrix
//! inequality in `w`, which is what the interior-point core consumes.

use nalgebra::{DMatrix, DVector};

use super::{ConeKind, ConicProblem};

/// `min cᵀw` subject to `C_k + Σ_j w_j B_kj ⪰ 0` for every block.
pub(super) struct Lmi {
    pub constants: Vec<DMatrix<f64>>,
    /// `coefs[k][j]` is `B_kj`.
    pub coefs: Vec<Vec<DMatrix<f64>>>,
    pub c: DVector<f64>,
}

impl Lmi {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }
}

pub(super) enum Reduction {
    Infeasible { residual: f64 },
    Reduced {
        x0: DVector<f64>,
        /// `None` stands for the identity (no equalities).
        basis: Option<DMatrix<f64>>,
        lmi: Lmi,
    },
}

impl Reduction {
    pub fn lift(x0: &DVector<f64>, basis: &Option<DMatrix<f64>>, w: &DVector<f64>) -> DVector<f64> {
        match basis {
            Some(n) => x0 + n * w,
            None => x0 + w,
        }
    }
}

const RANK_TOL: f64 = 1e-10;
const CONSISTENCY_TOL: f64 = 1e-9;

pub(super) fn reduce(problem: &ConicProblem) -> Reduction {
    let n = problem.num_vars;

    // equality rows: E x = rhs
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for b in problem.blocks.iter().filter(|b| b.kind == ConeKind::Zero) {
        let mut local: Vec<(Vec<(usize, f64)>, f64)> = vec![(Vec::new(), 0.0); b.size];
        for e in &b.entries {
            match e.var {
                Some(v) => local[e.row].0.push((v, e.coef)),
                None => local[e.row].1 -= e.coef,
            }
        }
        rows.extend(local);
    }

    let (x0, basis) = if rows.is_empty() {
        (DVector::zeros(n), None)
    } else {
        let p = rows.len();
        let mut e = DMatrix::zeros(p, n);
        let mut rhs = DVector::zeros(p);
        for (i, (terms, r)) in rows.iter().enumerate() {
            for &(v, c) in terms {
                e[(i, v)] += c;
            }
            rhs[i] = *r;
        }
        if n == 0 {
            let residual = rhs.amax();
            if residual > CONSISTENCY_TOL {
                return Reduction::Infeasible { residual };
            }
            (DVector::zeros(0), Some(DMatrix::zeros(0, 0)))
        } else {
            // pivoted QR of Eᵀ (padded square): leading columns of Q span the row space
            let mut et = DMatrix::<f64>::zeros(n, p.max(n));
            et.view_mut((0, 0), (n, p)).copy_from(&e.transpose());
            let qr = et.col_piv_qr();
            let q = qr.q();
            let r = qr.r();
            let rmax = r[(0, 0)].abs();
            let cutoff = RANK_TOL * rmax.max(1.0);
            let rank = (0..n).take_while(|&i| r[(i, i)].abs() > cutoff).count();
            let range = q.columns(0, rank).into_owned();
            let x0 = if rank == 0 {
                DVector::zeros(n)
            } else {
                // least squares in the row space: E Q₁ y ≈ rhs
                let eq = (&e * &range).qr();
                let y = eq
                    .r()
                    .solve_upper_triangular(&(eq.q().transpose() * &rhs))
                    .expect("full column rank");
                &range * y
            };
            let residual = (&e * &x0 - &rhs).amax();
            if residual > CONSISTENCY_TOL * (1.0 + rhs.amax()) {
                return Reduction::Infeasible { residual };
            }
            (x0, Some(q.columns(rank, n - rank).into_owned()))
        }
    };

    let reduced_vars = basis.as_ref().map_or(n, |b| b.ncols());
    let c_full = DVector::from_column_slice(&problem.objective);
    let c = match &basis {
        Some(b) => b.transpose() * &c_full,
        None => c_full.clone(),
    };

    let mut constants = Vec::new();
    let mut coefs = Vec::new();
    for b in problem
        .blocks
        .iter()
        .filter(|b| b.kind == ConeKind::Psd && b.size > 0)
    {
        let m = b.size;
        let mut constant = DMatrix::zeros(m, m);
        let mut reduced = vec![DMatrix::zeros(m, m); reduced_vars];
        for e in &b.entries {
            let put = |target: &mut DMatrix<f64>, v: f64| {
                target[(e.row, e.col)] += v;
                if e.row != e.col {
                    target[(e.col, e.row)] += v;
                }
            };
            match (e.var, &basis) {
                (None, _) => put(&mut constant, e.coef),
                (Some(v), None) => put(&mut reduced[v], e.coef),
                (Some(v), Some(nb)) => {
                    put(&mut constant, e.coef * x0[v]);
                    for (j, target) in reduced.iter_mut().enumerate() {
                        let w = nb[(v, j)];
                        if w != 0.0 {
                            put(target, e.coef * w);
                        }
                    }
                }
            }
        }
        constants.push(constant);
        coefs.push(reduced);
    }

    Reduction::Reduced {
        x0,
        basis,
        lmi: Lmi {
            constants,
            coefs,
            c,
        },
    }
}
