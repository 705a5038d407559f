//! Problem instances and the moment relaxation of a given order.

use std::sync::Arc;

use crate::conic::{self, ConeBlock, ConeKind, ConicProblem, ConicSolution, SolveMetrics, SolveStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::moment::{localizing_matrix, Moments};
use crate::poly::{basis_size, MonomialIndex, Poly};

/// Coefficient tolerance for recognising an existing unit-ball constraint.
const BALL_MATCH_TOL: f64 = 1e-12;
/// PSD tolerance used when re-checking decoded moments.
const DECODE_PSD_TOL: f64 = 1e-6;

/// `min f(x)` over `Ω = {x : g_j(x) ≥ 0}` with `Ω ⊂ B(0, R)`.
///
/// After [`Instance::preprocess`] every polynomial is expressed in the scaled
/// variable `x′ = x / R` and the last-or-matching constraint is `1 − ‖x′‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    dimension: usize,
    objective: Poly<f64>,
    constraints: Vec<Poly<f64>>,
    radius: f64,
    preprocessed: bool,
    ball_index: Option<usize>,
}

impl Instance {
    pub fn new(objective: Poly<f64>, constraints: Vec<Poly<f64>>, radius: f64) -> Result<Self> {
        let dimension = objective.dimension();
        if dimension == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if let Some(g) = constraints.iter().find(|g| g.dimension() != dimension) {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                found: g.dimension(),
            });
        }
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "radius must be finite and positive, got {radius}"
            )));
        }
        Ok(Instance {
            dimension,
            objective,
            constraints,
            radius,
            preprocessed: false,
            ball_index: None,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn objective(&self) -> &Poly<f64> {
        &self.objective
    }

    /// `g_1, …` (the implicit `g_0 = 1` is never stored).
    pub fn constraints(&self) -> &[Poly<f64>] {
        &self.constraints
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_preprocessed(&self) -> bool {
        self.preprocessed
    }

    /// Position of `1 − ‖x′‖²` among the constraints once preprocessed.
    pub fn ball_index(&self) -> Option<usize> {
        self.ball_index
    }

    /// Rescales into the unit ball and makes sure the ball constraint is present.
    pub fn preprocess(&self) -> Result<Instance> {
        if self.preprocessed {
            return Ok(self.clone());
        }
        let r = self.radius;
        let objective = self.objective.scale_substitute(r)?;
        let mut constraints = self
            .constraints
            .iter()
            .map(|g| g.scale_substitute(r))
            .collect::<Result<Vec<_>>>()?;
        let ball = Poly::unit_ball(self.dimension);
        let ball_index = match constraints
            .iter()
            .position(|g| g.max_abs_diff(&ball) <= BALL_MATCH_TOL)
        {
            Some(i) => i,
            None => {
                constraints.push(ball);
                constraints.len() - 1
            }
        };
        Ok(Instance {
            dimension: self.dimension,
            objective,
            constraints,
            radius: r,
            preprocessed: true,
            ball_index: Some(ball_index),
        })
    }

    /// `max(⌈deg f/2⌉, max_j ⌈deg g_j/2⌉)`.
    pub fn n_min(&self) -> Result<usize> {
        if !self.preprocessed {
            return Err(Error::NotPreprocessed);
        }
        Ok(self
            .constraints
            .iter()
            .map(Poly::half_degree)
            .fold(self.objective.half_degree(), usize::max))
    }

    /// Original coordinates of a point given in the working variable.
    pub fn to_original(&self, x: &[f64]) -> Vec<f64> {
        if self.preprocessed {
            x.iter().map(|v| v * self.radius).collect()
        } else {
            x.to_vec()
        }
    }

    /// Working-variable coordinates of a point given in original coordinates.
    pub fn to_working(&self, x: &[f64]) -> Vec<f64> {
        if self.preprocessed {
            x.iter().map(|v| v / self.radius).collect()
        } else {
            x.to_vec()
        }
    }

    /// `min_j g_j(x)` in working coordinates (`+∞` without constraints).
    pub fn min_constraint_value(&self, x: &[f64]) -> Result<f64> {
        self.constraints
            .iter()
            .try_fold(f64::INFINITY, |m, g| Ok(m.min(g.eval(x)?)))
    }
}

/// The order-`n` moment SDP together with its moment bookkeeping.
///
/// Decision variable `i` is the moment at graded position `i + 1`; `φ_0` is
/// substituted by 1.
#[derive(Debug, Clone)]
pub struct MomentRelaxation {
    order: usize,
    index: Arc<MonomialIndex>,
    objective: Poly<f64>,
    /// `g_0 = 1` first, then the instance constraints.
    localizers: Vec<Poly<f64>>,
    block_orders: Vec<usize>,
    problem: ConicProblem,
}

/// Solved relaxation decoded back into moments.
#[derive(Debug, Clone)]
pub struct RelaxationSolution {
    pub order: usize,
    /// `ρ_n`.
    pub bound: f64,
    /// Optimal `φ⁽ⁿ⁾` in working coordinates.
    pub moments: Moments<f64>,
    pub status: SolveStatus,
    pub metrics: SolveMetrics,
    /// Smallest eigenvalue over the blocks rebuilt from `moments`.
    pub min_block_eigenvalue: f64,
}

/// Assembles the order-`n` relaxation of a preprocessed instance.
pub fn build_relaxation(instance: &Instance, n: usize) -> Result<MomentRelaxation> {
    let n_min = instance.n_min()?;
    if n < n_min {
        return Err(Error::OrderTooLow { order: n, n_min });
    }
    let d = instance.dimension();
    let index = Arc::new(MonomialIndex::new(d, 2 * n));
    let num_vars = index.len() - 1;
    let mut problem = ConicProblem::new(num_vars);

    for (alpha, c) in instance.objective().terms() {
        let pos = index.position(alpha).expect("deg f ≤ 2n");
        match pos {
            0 => problem.objective_offset += c,
            p => problem.objective[p - 1] += c,
        }
    }

    let mut localizers = vec![Poly::constant(d, 1.0)];
    localizers.extend(instance.constraints().iter().cloned());
    let mut block_orders = Vec::with_capacity(localizers.len());
    for g in &localizers {
        let k = n - g.half_degree();
        let rows = &index.basis()[..basis_size(d, k)];
        let mut block = ConeBlock::new(ConeKind::Psd, rows.len());
        for (i, a) in rows.iter().enumerate() {
            for (j, b) in rows.iter().enumerate().take(i + 1) {
                let ab = a + b;
                for (gamma, c) in g.terms() {
                    let pos = index.position(&(&ab + gamma)).expect("2k + deg g ≤ 2n");
                    match pos {
                        0 => block.push_constant(i, j, c),
                        p => block.push_linear(i, j, p - 1, c),
                    }
                }
            }
        }
        problem.blocks.push(block);
        block_orders.push(k);
    }

    Ok(MomentRelaxation {
        order: n,
        index,
        objective: instance.objective().clone(),
        localizers,
        block_orders,
        problem,
    })
}

impl MomentRelaxation {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn problem(&self) -> &ConicProblem {
        &self.problem
    }

    /// Side of every PSD block, moment matrix first.
    pub fn block_sides(&self) -> Vec<usize> {
        self.problem.blocks.iter().map(|b| b.size).collect()
    }

    /// Truncation order `n − d_j` of every block.
    pub fn block_orders(&self) -> &[usize] {
        &self.block_orders
    }

    /// Decision vector of a full moment sequence (drops `φ_0`).
    pub fn encode(&self, phi: &Moments<f64>) -> Result<Vec<f64>> {
        if phi.order() != self.order || phi.dimension() != self.index.dimension() {
            return Err(Error::InvalidArgument(format!(
                "moment sequence of order {} in dimension {} does not match relaxation of order {} in dimension {}",
                phi.order(),
                phi.dimension(),
                self.order,
                self.index.dimension()
            )));
        }
        Ok(phi.values()[1..].to_vec())
    }

    /// Solves with the bundled backend and decodes an optimal result.
    pub fn solve(&self, settings: &SolverSettings) -> Result<(ConicSolution, Option<RelaxationSolution>)> {
        let raw = conic::solve(&self.problem, settings)?;
        let decoded = if raw.status == SolveStatus::Optimal {
            Some(self.decode(&raw)?)
        } else {
            None
        };
        Ok((raw, decoded))
    }

    /// Rebuilds `φ` from an optimal backend result and re-checks every block.
    pub fn decode(&self, raw: &ConicSolution) -> Result<RelaxationSolution> {
        if raw.status != SolveStatus::Optimal {
            return Err(Error::SolverStatus(raw.status.to_string()));
        }
        if raw.x.len() != self.problem.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.problem.num_vars,
                found: raw.x.len(),
            });
        }
        let mut values = Vec::with_capacity(raw.x.len() + 1);
        values.push(1.0);
        values.extend_from_slice(&raw.x);
        let moments = Moments::with_index(self.index.clone(), self.order, values)?;

        // independent of the triplet encoding: rebuilt from the moment algebra
        let mut status = SolveStatus::Optimal;
        let mut min_eig = f64::INFINITY;
        for (g, &k) in self.localizers.iter().zip(&self.block_orders) {
            let m = localizing_matrix(&moments, g, k)?;
            min_eig = min_eig.min(m.min_eigenvalue());
            if !m.is_psd(DECODE_PSD_TOL) {
                status = SolveStatus::NumericalFailure;
            }
        }
        let bound = crate::moment::riesz_apply(&moments, &self.objective)?;
        Ok(RelaxationSolution {
            order: self.order,
            bound,
            moments,
            status,
            metrics: raw.metrics,
            min_block_eigenvalue: min_eig,
        })
    }
}

/// Builds, solves and decodes the order-`n` relaxation.
pub fn solve_relaxation(
    instance: &Instance,
    n: usize,
    settings: &SolverSettings,
) -> Result<RelaxationSolution> {
    let relaxation = build_relaxation(instance, n)?;
    match relaxation.solve(settings)? {
        (_, Some(sol)) => Ok(sol),
        (raw, None) => Err(Error::SolverStatus(raw.status.to_string())),
    }
}
