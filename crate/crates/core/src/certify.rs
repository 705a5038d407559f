//! Convexity certificates, the order bound they imply, and the hierarchy loop
//! with its exactness test.
//!
//! A certificate for `f` on `Ω` is a family of Gram matrices `G_j ⪰ 0` over the
//! tensor bases `b_j = {x^α y_k : |α| ≤ ā_j}` such that
//! `yᵀ∇²f(x)y = Σ_j b_jᵀ G_j b_j · g_j(x)` holds as a polynomial identity in
//! `(x, y)`, with `g_0 = 1`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::conic::{self, ConeBlock, ConeKind, ConicProblem, SolveStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::moment::atomic_moments;
use crate::poly::{monomial_basis, MultiIndex, Poly, PolyMat};
use crate::relax::{build_relaxation, Instance, RelaxationSolution};

/// Eigenvalues of a Gram matrix below this are treated as zero.
pub const EIGEN_CLIP: f64 = 1e-9;
/// Factor coefficients below this do not count towards a degree.
pub const DEGREE_CLIP: f64 = 1e-7;
/// Largest admissible reconstruction mismatch.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Optimal shifts above this mean no PSD Gram matrices exist.
pub const SHIFT_TOL: f64 = 1e-7;
/// Default number of `+1` escalations of the search degrees.
pub const DEFAULT_ESCALATION: usize = 2;

/// Witness of `∇²f = Σ_j L_j L_jᵀ g_j`.
#[derive(Debug, Clone)]
pub struct CertificateBundle {
    /// Search degrees `ā_j`, `j = 0` first.
    pub bounds: Vec<usize>,
    pub gram_blocks: Vec<DMatrix<f64>>,
    /// `L_j`, of size `d × r_j`.
    pub factors: Vec<PolyMat<f64>>,
    /// `a_j`; `None` when `L_j` vanishes.
    pub degrees: Vec<Option<usize>>,
    /// Degrees of `g_1, …` as passed in.
    pub constraint_degrees: Vec<Option<usize>>,
    /// Coefficient mismatch of `Σ_j L_j L_jᵀ g_j` against `∇²f`.
    pub residual: f64,
    pub min_gram_eigenvalue: f64,
    /// `g_0 = 1, g_1, …` used by the identity.
    multipliers: Vec<Poly<f64>>,
}

impl CertificateBundle {
    /// `Σ_j L_j L_jᵀ g_j`.
    pub fn reconstruct(&self) -> PolyMat<f64> {
        let d = self.multipliers[0].dimension();
        self.factors
            .iter()
            .zip(&self.multipliers)
            .fold(PolyMat::zeros(d, d, d), |acc, (l, g)| {
                &acc + &(l * &l.transpose()).scale_by(g)
            })
    }

    /// Ranks `r_j`.
    pub fn ranks(&self) -> Vec<usize> {
        self.factors.iter().map(PolyMat::cols).collect()
    }
}

/// Degree-matching start `ā_j = max(0, ⌈(deg f − 2 − deg g_j)/2⌉)`, `j = 0` first.
pub fn default_bounds(f: &Poly<f64>, constraints: &[Poly<f64>]) -> Vec<usize> {
    let df = f.degree().unwrap_or(0) as i64;
    std::iter::once(0i64)
        .chain(constraints.iter().map(|g| g.degree().unwrap_or(0) as i64))
        .map(|dg| {
            let num = df - 2 - dg;
            if num <= 0 {
                0
            } else {
                ((num + 1) / 2) as usize
            }
        })
        .collect()
}

struct GramSystem {
    dimension: usize,
    bases: Vec<Vec<MultiIndex>>,
    shift: usize,
    problem: ConicProblem,
}

impl GramSystem {
    fn side(&self, j: usize) -> usize {
        self.bases[j].len() * self.dimension
    }

    fn gram(&self, x: &[f64], j: usize) -> DMatrix<f64> {
        let side = self.side(j);
        self.problem.blocks[j].evaluate(x) - DMatrix::identity(side, side) * x[self.shift]
    }
}

/// Coefficient key of `x^β y_k y_l` with `k ≤ l`.
type Key = (MultiIndex, usize, usize);

fn gram_system(hessian: &PolyMat<f64>, multipliers: &[Poly<f64>], bounds: &[usize]) -> GramSystem {
    let d = hessian.rows();
    let bases: Vec<Vec<MultiIndex>> = bounds.iter().map(|&a| monomial_basis(d, a)).collect();
    let mut offsets = Vec::with_capacity(bases.len());
    let mut num_vars = 0;
    for b in &bases {
        offsets.push(num_vars);
        let s = b.len() * d;
        num_vars += s * (s + 1) / 2;
    }
    // last variable is the shift t in G_j + t·I ⪰ 0
    let shift = num_vars;

    let mut problem = ConicProblem::new(num_vars + 1);
    problem.objective[shift] = 1.0;
    let mut rows: BTreeMap<Key, (Vec<(usize, f64)>, f64)> = BTreeMap::new();

    for k in 0..d {
        for l in k..d {
            let weight = if k == l { 1.0 } else { 2.0 };
            for (beta, c) in hessian.get(k, l).terms() {
                rows.entry((beta.clone(), k, l)).or_default().1 += weight * c;
            }
        }
    }

    for (j, (basis, g)) in bases.iter().zip(multipliers).enumerate() {
        let side = basis.len() * d;
        let mut block = ConeBlock::new(ConeKind::Psd, side);
        let mut var = offsets[j];
        for p in 0..side {
            for q in 0..=p {
                block.push_linear(p, q, var, 1.0);
                if p == q {
                    block.push_linear(p, p, shift, 1.0);
                }
                let (ap, kp) = (&basis[p / d], p % d);
                let (aq, kq) = (&basis[q / d], q % d);
                let weight = if p == q { 1.0 } else { 2.0 };
                let ab = ap + aq;
                for (gamma, c) in g.terms() {
                    let key = (&ab + gamma, kp.min(kq), kp.max(kq));
                    rows.entry(key).or_default().0.push((var, weight * c));
                }
                var += 1;
            }
        }
        problem.blocks.push(block);
    }

    let mut eq = ConeBlock::new(ConeKind::Zero, rows.len());
    for (r, (terms, target)) in rows.values().enumerate() {
        for &(v, c) in terms {
            eq.push_linear(r, 0, v, c);
        }
        eq.push_constant(r, 0, -target);
    }
    problem.blocks.push(eq);

    GramSystem {
        dimension: d,
        bases,
        shift,
        problem,
    }
}

/// `L` with `G = Σ_i λ_i v_i v_iᵀ` turned into columns `√λ_i Σ_{α,k} v_i[(α,k)] x^α e_k`.
fn factor_gram(gram: &DMatrix<f64>, basis: &[MultiIndex], d: usize) -> PolyMat<f64> {
    if gram.nrows() == 0 {
        return PolyMat::zeros(d, 0, d);
    }
    let eig = SymmetricEigen::new(gram.clone());
    let kept: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > EIGEN_CLIP)
        .collect();
    PolyMat::from_fn(d, kept.len(), d, |k, r| {
        let i = kept[r];
        let s = eig.eigenvalues[i].sqrt();
        let terms = basis
            .iter()
            .enumerate()
            .map(|(a, alpha)| (alpha.clone(), s * eig.eigenvectors[(a * d + k, i)]));
        Poly::from_terms(d, terms).expect("finite eigenvectors")
    })
}

fn factor_degree(l: &PolyMat<f64>) -> Option<usize> {
    l.entries()
        .filter_map(|p| {
            p.map_coefficients(|_, c| if c.abs() < DEGREE_CLIP { 0.0 } else { c })
                .degree()
        })
        .max()
}

/// Searches for `∇²f = Σ_j L_j L_jᵀ g_j` with `deg L_j ≤ ā_j`.
///
/// Solved as `min t` subject to the coefficient identity and `G_j + t·I ⪰ 0`,
/// which is strictly feasible even when every certificate is singular; a
/// certificate exists exactly when the optimal shift is not positive.
///
/// `constraints` are `g_1, …` (normally a preprocessed instance's list);
/// `bounds` has one entry per `j = 0, 1, …`. `Ok(None)` means no certificate
/// exists at these degrees, which says nothing about convexity itself.
pub fn check_sos_convex_on_omega(
    f: &Poly<f64>,
    constraints: &[Poly<f64>],
    bounds: &[usize],
    settings: &SolverSettings,
) -> Result<Option<CertificateBundle>> {
    let d = f.dimension();
    if bounds.len() != constraints.len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: constraints.len() + 1,
            found: bounds.len(),
        });
    }
    if let Some(g) = constraints.iter().find(|g| g.dimension() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: g.dimension(),
        });
    }
    let mut multipliers = vec![Poly::constant(d, 1.0)];
    multipliers.extend(constraints.iter().cloned());
    let hessian = f.hessian();

    let system = gram_system(&hessian, &multipliers, bounds);
    let sol = conic::solve(&system.problem, settings)?;
    match sol.status {
        SolveStatus::Optimal => {}
        // the coefficient identity itself has no solution
        SolveStatus::Infeasible => return Ok(None),
        other => {
            return Err(Error::NumericalFailure(format!(
                "certificate search ended with status {other}"
            )))
        }
    }
    if sol.x[system.shift] > SHIFT_TOL {
        return Ok(None);
    }

    let mut gram_blocks = Vec::with_capacity(multipliers.len());
    let mut factors = Vec::with_capacity(multipliers.len());
    let mut min_eig = f64::INFINITY;
    for j in 0..multipliers.len() {
        let g = system.gram(&sol.x, j);
        debug_assert_eq!(g.nrows(), system.side(j));
        if g.nrows() > 0 {
            min_eig = min_eig.min(SymmetricEigen::new(g.clone()).eigenvalues.min());
        }
        factors.push(factor_gram(&g, &system.bases[j], d));
        gram_blocks.push(g);
    }
    let degrees = factors.iter().map(factor_degree).collect();

    let mut bundle = CertificateBundle {
        bounds: bounds.to_vec(),
        gram_blocks,
        factors,
        degrees,
        constraint_degrees: constraints.iter().map(Poly::degree).collect(),
        residual: 0.0,
        min_gram_eigenvalue: min_eig,
        multipliers,
    };
    bundle.residual = bundle.reconstruct().max_abs_diff(&hessian);
    if bundle.residual > RESIDUAL_TOL {
        return Err(Error::NumericalFailure(format!(
            "certificate reconstruction residual {:.3e} exceeds {RESIDUAL_TOL:e}",
            bundle.residual
        )));
    }
    Ok(Some(bundle))
}

/// Searches for `−∇²g = L Lᵀ` with `deg L ≤ degree_bound`.
pub fn check_sos_concave(
    g: &Poly<f64>,
    degree_bound: usize,
    settings: &SolverSettings,
) -> Result<Option<PolyMat<f64>>> {
    let d = g.dimension();
    if g.degree().map_or(true, |deg| deg < 2) {
        return Ok(Some(PolyMat::zeros(d, 0, d)));
    }
    let neg = -g;
    Ok(check_sos_convex_on_omega(&neg, &[], &[degree_bound], settings)?
        .map(|b| b.factors.into_iter().next().expect("one block")))
}

/// `1 + max(max_{j≥1}(a_j + 1), a_0)`, valid when every constraint has degree ≤ 2.
///
/// A vanishing factor counts as degree 0.
pub fn exact_order_bound(bundle: &CertificateBundle) -> Result<usize> {
    if let Some((index, degree)) = bundle
        .constraint_degrees
        .iter()
        .enumerate()
        .find_map(|(i, d)| d.filter(|&d| d > 2).map(|d| (i + 1, d)))
    {
        return Err(Error::ConstraintDegreeTooHigh { index, degree });
    }
    Ok(order_bound_from_degrees(&bundle.degrees))
}

/// The order-bound formula applied to `a_0, a_1, …`.
pub fn order_bound_from_degrees(degrees: &[Option<usize>]) -> usize {
    let a = |j: usize| degrees.get(j).copied().flatten().unwrap_or(0);
    let tail = (1..degrees.len()).map(|j| a(j) + 1).max().unwrap_or(0);
    1 + tail.max(a(0))
}

/// Result of the exactness test at one order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    /// `R·φ(x)`, original coordinates.
    pub minimizer: Vec<f64>,
    /// `f(x̂)`.
    pub value: f64,
    /// `f(x̂) − ρ_n`.
    pub gap: f64,
    /// `min_j g_j(x̂)`.
    pub min_constraint: f64,
    pub exact: bool,
}

/// Reads `x̂ = R·φ(x)` off the moments and checks `x̂ ∈ Ω`, `f(x̂) ≤ ρ_n + tol`.
pub fn extract_and_test(solution: &RelaxationSolution, instance: &Instance, tol: f64) -> Result<Extraction> {
    let x = solution.moments.first_moments();
    let value = instance.objective().eval(&x)?;
    let min_constraint = instance.min_constraint_value(&x)?;
    let gap = value - solution.bound;
    let exact = solution.status == SolveStatus::Optimal
        && x.iter().all(|v| v.is_finite())
        && min_constraint >= -tol
        && gap <= tol;
    Ok(Extraction {
        minimizer: instance.to_original(&x),
        value,
        gap,
        min_constraint,
        exact,
    })
}

/// One attempted relaxation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub order: usize,
    pub status: SolveStatus,
    /// `ρ_n` (present when the solve succeeded).
    pub bound: Option<f64>,
    /// `φ⁽ⁿ⁾(x)` in original coordinates.
    pub point: Option<Vec<f64>>,
    /// `f(φ⁽ⁿ⁾(x))`.
    pub value_at_point: Option<f64>,
    /// `f(φ⁽ⁿ⁾(x)) − ρ_n`.
    pub gap: Option<f64>,
    pub min_constraint: Option<f64>,
    pub exact: bool,
    /// `max_α |φ_α|` in working coordinates.
    pub max_abs_moment: Option<f64>,
    pub min_block_eigenvalue: Option<f64>,
    pub iterations: usize,
    pub block_sides: Vec<usize>,
    pub seconds: f64,
}

/// Outcome of one certificate search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateAttempt {
    pub bounds: Vec<usize>,
    /// `found`, `not-found` or an error message.
    pub outcome: String,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct HierarchyReport {
    pub n_min: usize,
    pub orders: Vec<OrderRecord>,
    pub certified: bool,
    pub certified_order: Option<usize>,
    /// Certified minimizer, or the best feasible moment point otherwise.
    pub minimizer: Option<Vec<f64>>,
    /// `f` at `minimizer`.
    pub value: Option<f64>,
    /// Largest `ρ_n` obtained.
    pub best_bound: Option<f64>,
    pub certificate: Option<CertificateBundle>,
    pub certificate_attempts: Vec<CertificateAttempt>,
    pub predicted_order: Option<usize>,
    /// Set when a certificate search was requested but not applicable.
    pub certificate_note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyOptions {
    /// Largest order to solve.
    pub max_order: usize,
    /// Smallest order to solve (raised to `n_min` when lower).
    pub min_order: usize,
    /// Exactness tolerance.
    pub tol: f64,
    pub certify_first: bool,
    /// Skip the orders below the certificate's predicted order.
    pub start_at_prediction: bool,
    pub escalation: usize,
    /// Settings for the relaxations.
    pub solver: SolverSettings,
    /// Settings for the certificate search.
    pub certificate_solver: SolverSettings,
}

impl HierarchyOptions {
    pub fn new(max_order: usize) -> Self {
        HierarchyOptions {
            max_order,
            min_order: 0,
            tol: 1e-6,
            certify_first: false,
            start_at_prediction: true,
            escalation: DEFAULT_ESCALATION,
            solver: SolverSettings::default(),
            certificate_solver: SolverSettings::default(),
        }
    }
}

/// Certificate search over the escalating bound schedule.
pub fn search_certificate(
    instance: &Instance,
    escalation: usize,
    settings: &SolverSettings,
) -> Result<(Option<CertificateBundle>, Vec<CertificateAttempt>)> {
    if !instance.is_preprocessed() {
        return Err(Error::NotPreprocessed);
    }
    let base = default_bounds(instance.objective(), instance.constraints());
    let mut attempts = Vec::new();
    for bump in 0..=escalation {
        let bounds: Vec<usize> = base.iter().map(|a| a + bump).collect();
        let start = std::time::Instant::now();
        let res = check_sos_convex_on_omega(instance.objective(), instance.constraints(), &bounds, settings);
        let seconds = start.elapsed().as_secs_f64();
        match res {
            Ok(Some(bundle)) => {
                attempts.push(CertificateAttempt {
                    bounds,
                    outcome: "found".into(),
                    seconds,
                });
                return Ok((Some(bundle), attempts));
            }
            Ok(None) => attempts.push(CertificateAttempt {
                bounds,
                outcome: "not-found".into(),
                seconds,
            }),
            Err(e @ Error::NumericalFailure(_)) | Err(e @ Error::SolverStatus(_)) => {
                attempts.push(CertificateAttempt {
                    bounds,
                    outcome: e.to_string(),
                    seconds,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok((None, attempts))
}

/// Solves orders upward until the exactness test fires or `max_order` is passed.
pub fn run_hierarchy(instance: &Instance, options: &HierarchyOptions) -> Result<HierarchyReport> {
    if !instance.is_preprocessed() {
        return Err(Error::NotPreprocessed);
    }
    let n_min = instance.n_min()?;
    let mut report = HierarchyReport {
        n_min,
        orders: Vec::new(),
        certified: false,
        certified_order: None,
        minimizer: None,
        value: None,
        best_bound: None,
        certificate: None,
        certificate_attempts: Vec::new(),
        predicted_order: None,
        certificate_note: None,
    };

    let mut start = n_min.max(options.min_order);
    if options.certify_first {
        match instance
            .constraints()
            .iter()
            .enumerate()
            .find(|(_, g)| g.degree().unwrap_or(0) > 2)
        {
            Some((i, g)) => {
                report.certificate_note = Some(format!(
                    "constraint {} has degree {}; certificate search skipped",
                    i + 1,
                    g.degree().unwrap_or(0)
                ));
            }
            None => {
                let (bundle, attempts) = search_certificate(instance, options.escalation, &options.certificate_solver)?;
                report.certificate_attempts = attempts;
                if let Some(b) = bundle {
                    let predicted = exact_order_bound(&b)?;
                    report.predicted_order = Some(predicted);
                    if options.start_at_prediction {
                        start = start.max(predicted);
                    }
                    report.certificate = Some(b);
                } else {
                    report.certificate_note = Some("no certificate found at the searched degrees".into());
                }
            }
        }
    }

    let mut best_feasible: Option<(f64, Vec<f64>)> = None;
    for n in start..=options.max_order {
        let t0 = std::time::Instant::now();
        let relaxation = build_relaxation(instance, n)?;
        let block_sides = relaxation.block_sides();
        let (raw, decoded) = relaxation.solve(&options.solver)?;
        let mut record = OrderRecord {
            order: n,
            status: raw.status,
            bound: None,
            point: None,
            value_at_point: None,
            gap: None,
            min_constraint: None,
            exact: false,
            max_abs_moment: None,
            min_block_eigenvalue: None,
            iterations: raw.metrics.iterations,
            block_sides,
            seconds: 0.0,
        };
        if let Some(sol) = decoded {
            let ext = extract_and_test(&sol, instance, options.tol)?;
            record.status = sol.status;
            record.bound = Some(sol.bound);
            record.point = Some(ext.minimizer.clone());
            record.value_at_point = Some(ext.value);
            record.gap = Some(ext.gap);
            record.min_constraint = Some(ext.min_constraint);
            record.exact = ext.exact;
            record.max_abs_moment = Some(sol.moments.max_abs());
            record.min_block_eigenvalue = Some(sol.min_block_eigenvalue);
            if sol.status == SolveStatus::Optimal {
                report.best_bound = Some(report.best_bound.map_or(sol.bound, |b: f64| b.max(sol.bound)));
            }
            if ext.min_constraint >= -options.tol
                && best_feasible.as_ref().map_or(true, |(v, _)| ext.value < *v)
            {
                best_feasible = Some((ext.value, ext.minimizer.clone()));
            }
        }
        record.seconds = t0.elapsed().as_secs_f64();
        let exact = record.exact;
        report.orders.push(record);
        if exact {
            report.certified = true;
            report.certified_order = Some(n);
            break;
        }
    }

    if let Some((v, x)) = best_feasible {
        report.value = Some(v);
        report.minimizer = Some(x);
    }
    if report.certified {
        let last = report.orders.last().expect("certified order recorded");
        report.minimizer = last.point.clone();
        report.value = last.value_at_point;
    }
    Ok(report)
}

/// Moments of the Dirac measure at an original-coordinate point, in working
/// coordinates, at order `n`.
pub fn dirac_moments(instance: &Instance, x: &[f64], n: usize) -> Result<crate::moment::Moments<f64>> {
    atomic_moments(&[instance.to_working(x)], &[1.0], n)
}
