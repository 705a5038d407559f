//! Solver-agnostic conic problems and the bundled interior-point backend.
//!
//! A problem is a linear objective over a decision vector `x` and a list of
//! cone blocks, each an affine image `F(x) = C + Σ_i x_i A_i` constrained to
//! either the zero cone (`F(x) = 0`) or the PSD cone (`F(x) ⪰ 0`). Blocks are
//! stored as sparse triplets so the same encoding serves moment relaxations
//! and Gram-matrix feasibility problems.

mod ipm;
mod reduce;

use std::fmt;
use std::io::{self, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ipm::solve;

/// Cone a block is constrained to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    /// `F(x) = 0`; the block is a column vector.
    Zero,
    /// `F(x) ⪰ 0`; the block is a symmetric matrix.
    Psd,
}

/// One nonzero of an affine block map. `var = None` marks the constant part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineEntry {
    pub row: usize,
    pub col: usize,
    pub var: Option<usize>,
    pub coef: f64,
}

/// Affine map from the decision vector into one cone.
///
/// PSD entries are given on the lower triangle (`row ≥ col`); an off-diagonal
/// entry stands for both symmetric positions. Repeated positions add up.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeBlock {
    pub kind: ConeKind,
    /// Side length for PSD blocks, number of rows for zero blocks.
    pub size: usize,
    pub entries: Vec<AffineEntry>,
}

impl ConeBlock {
    pub fn new(kind: ConeKind, size: usize) -> Self {
        ConeBlock {
            kind,
            size,
            entries: Vec::new(),
        }
    }

    pub fn push_constant(&mut self, row: usize, col: usize, coef: f64) {
        if coef != 0.0 {
            let (row, col) = lower(row, col);
            self.entries.push(AffineEntry {
                row,
                col,
                var: None,
                coef,
            });
        }
    }

    pub fn push_linear(&mut self, row: usize, col: usize, var: usize, coef: f64) {
        if coef != 0.0 {
            let (row, col) = lower(row, col);
            self.entries.push(AffineEntry {
                row,
                col,
                var: Some(var),
                coef,
            });
        }
    }

    /// Evaluates `F(x)`; zero blocks come back as a `size × 1` column.
    pub fn evaluate(&self, x: &[f64]) -> DMatrix<f64> {
        let cols = match self.kind {
            ConeKind::Zero => 1,
            ConeKind::Psd => self.size,
        };
        let mut m = DMatrix::zeros(self.size, cols);
        for e in &self.entries {
            let v = e.coef * e.var.map_or(1.0, |i| x[i]);
            m[(e.row, e.col)] += v;
            if self.kind == ConeKind::Psd && e.row != e.col {
                m[(e.col, e.row)] += v;
            }
        }
        m
    }
}

fn lower(row: usize, col: usize) -> (usize, usize) {
    if row >= col {
        (row, col)
    } else {
        (col, row)
    }
}

/// `min cᵀx + offset` subject to every block lying in its cone.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub blocks: Vec<ConeBlock>,
}

impl ConicProblem {
    pub fn new(num_vars: usize) -> Self {
        ConicProblem {
            num_vars,
            objective: vec![0.0; num_vars],
            objective_offset: 0.0,
            blocks: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::MalformedProblem(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                self.num_vars
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) || !self.objective_offset.is_finite() {
            return Err(Error::MalformedProblem("non-finite objective".into()));
        }
        for (k, b) in self.blocks.iter().enumerate() {
            for e in &b.entries {
                let col_ok = match b.kind {
                    ConeKind::Zero => e.col == 0,
                    ConeKind::Psd => e.col <= e.row,
                };
                if e.row >= b.size || !col_ok {
                    return Err(Error::MalformedProblem(format!(
                        "block {k}: entry ({}, {}) outside a {:?} block of size {}",
                        e.row, e.col, b.kind, b.size
                    )));
                }
                if e.var.is_some_and(|v| v >= self.num_vars) {
                    return Err(Error::MalformedProblem(format!(
                        "block {k}: variable {:?} out of range",
                        e.var
                    )));
                }
                if !e.coef.is_finite() {
                    return Err(Error::MalformedProblem(format!(
                        "block {k}: non-finite coefficient"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .sum::<f64>()
            + self.objective_offset
    }

    /// Smallest eigenvalue over all PSD blocks at `x` (`+∞` without PSD blocks).
    pub fn min_psd_eigenvalue(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.kind == ConeKind::Psd && b.size > 0)
            .map(|b| {
                SymmetricEigen::new(b.evaluate(x))
                    .eigenvalues
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest absolute violation over all zero blocks at `x`.
    pub fn max_equality_violation(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.kind == ConeKind::Zero)
            .map(|b| b.evaluate(x).amax())
            .fold(0.0, f64::max)
    }

    /// Writes the problem as sparse text, one nonzero per line:
    /// `block row col var coef`.
    ///
    /// `var` is 1-based for decision variables and 0 for the constant term.
    /// The objective is written as block `-1` with `row = col = 0` (offset as
    /// `var = 0`). Lines starting with `#` are comments; the header records
    /// the number of variables and the kind and size of every block.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# momsos sparse conic problem")?;
        writeln!(out, "# vars {}", self.num_vars)?;
        for (k, b) in self.blocks.iter().enumerate() {
            let kind = match b.kind {
                ConeKind::Zero => "zero",
                ConeKind::Psd => "psd",
            };
            writeln!(out, "# block {k} {kind} {}", b.size)?;
        }
        if self.objective_offset != 0.0 {
            writeln!(out, "-1 0 0 0 {:e}", self.objective_offset)?;
        }
        for (i, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                writeln!(out, "-1 0 0 {} {:e}", i + 1, c)?;
            }
        }
        for (k, b) in self.blocks.iter().enumerate() {
            for e in &b.entries {
                writeln!(
                    out,
                    "{k} {} {} {} {:e}",
                    e.row,
                    e.col,
                    e.var.map_or(0, |v| v + 1),
                    e.coef
                )?;
            }
        }
        Ok(())
    }
}

/// Outcome reported by the backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NumericalFailure => "numerical-failure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative primal/dual residual and duality gap target.
    pub tolerance: f64,
    /// Certificate accuracy required to declare infeasibility.
    pub infeasibility_tolerance: f64,
    pub max_iterations: usize,
    /// Print one line per iteration to stderr.
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tolerance: 1e-8,
            infeasibility_tolerance: 1e-8,
            max_iterations: 200,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveMetrics {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `|p − d| / (1 + |p| + |d|)`.
    pub duality_gap: f64,
    /// Smallest PSD-block eigenvalue recomputed from the returned `x`.
    pub min_block_eigenvalue: f64,
    /// Largest zero-block violation recomputed from the returned `x`.
    pub equality_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Primal decision vector (meaningful when optimal).
    pub x: Vec<f64>,
    pub objective: f64,
    pub metrics: SolveMetrics,
}
