//! Homogeneous self-dual interior-point method for linear matrix inequalities.
//!
//! After equality elimination the problem is
//!
//! ```text
//! min cᵀx   s.t.   s = b − A x ∈ K,   K = S₊^{m_1} × … × S₊^{m_p}
//! ```
//!
//! with `s` in scaled-vectorized (`svec`) form. The embedding
//!
//! ```text
//! 0 =  Aᵀz + c τ,   s = −A x + b τ,   κ = −cᵀx − bᵀz
//! ```
//!
//! yields either an optimal pair (`τ > 0`) or an infeasibility certificate
//! (`κ > 0`). Each iteration uses Nesterov–Todd scaling and a Mehrotra
//! predictor–corrector step. The Newton system is reduced to a least-squares
//! problem in the scaled matrix `Ã = W⁻ᵀA`, solved through a QR factorization
//! rather than the squared normal matrix, and polished by iterative refinement.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::reduce::{reduce, Lmi, Reduction};
use super::{ConicProblem, ConicSolution, SolveMetrics, SolveStatus, SolverSettings};
use crate::error::Result;

const STEP_FRACTION: f64 = 0.99;
const MIN_STEP: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 2;

/// Solves `problem`. Only a malformed problem is an `Err`; every solver
/// outcome, including failure, is reported through [`SolveStatus`].
pub fn solve(problem: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution> {
    problem.validate()?;
    let n = problem.num_vars;
    let (status, x, metrics) = match reduce(problem) {
        Reduction::Infeasible { residual } => (
            SolveStatus::Infeasible,
            vec![f64::NAN; n],
            SolveMetrics {
                primal_residual: residual,
                ..SolveMetrics::default()
            },
        ),
        Reduction::Reduced { x0, basis, lmi } => {
            let out = solve_lmi(&lmi, settings);
            let x = Reduction::lift(&x0, &basis, &out.w);
            let metrics = SolveMetrics {
                iterations: out.iterations,
                primal_residual: out.primal_residual,
                dual_residual: out.dual_residual,
                duality_gap: out.gap,
                ..SolveMetrics::default()
            };
            (out.status, x.as_slice().to_vec(), metrics)
        }
    };

    let objective = match status {
        SolveStatus::Optimal => problem.objective_value(&x),
        SolveStatus::Infeasible => f64::INFINITY,
        SolveStatus::Unbounded => f64::NEG_INFINITY,
        SolveStatus::NumericalFailure => f64::NAN,
    };
    let metrics = if status == SolveStatus::Optimal {
        SolveMetrics {
            min_block_eigenvalue: problem.min_psd_eigenvalue(&x),
            equality_violation: problem.max_equality_violation(&x),
            ..metrics
        }
    } else {
        SolveMetrics {
            min_block_eigenvalue: f64::NAN,
            equality_violation: f64::NAN,
            ..metrics
        }
    };
    Ok(ConicSolution {
        status,
        x,
        objective,
        metrics,
    })
}

struct LmiOutcome {
    status: SolveStatus,
    w: DVector<f64>,
    iterations: usize,
    primal_residual: f64,
    dual_residual: f64,
    gap: f64,
}

impl LmiOutcome {
    fn trivial(status: SolveStatus, w: DVector<f64>) -> Self {
        LmiOutcome {
            status,
            w,
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            gap: 0.0,
        }
    }
}

fn solve_lmi(lmi: &Lmi, settings: &SolverSettings) -> LmiOutcome {
    let n = lmi.num_vars();
    if lmi.constants.is_empty() {
        // no cone left: bounded only when the objective vanishes
        let status = if lmi.c.amax() <= settings.tolerance {
            SolveStatus::Optimal
        } else {
            SolveStatus::Unbounded
        };
        return LmiOutcome::trivial(status, DVector::zeros(n));
    }
    if n == 0 {
        let feasible = lmi.constants.iter().all(|c| {
            let eig = SymmetricEigen::new(c.clone()).eigenvalues;
            let min = eig.min();
            min >= -settings.tolerance * (1.0 + eig.amax())
        });
        let status = if feasible {
            SolveStatus::Optimal
        } else {
            SolveStatus::Infeasible
        };
        return LmiOutcome::trivial(status, DVector::zeros(0));
    }
    Hsde::new(lmi).run(settings)
}

fn svec_len(m: usize) -> usize {
    m * (m + 1) / 2
}

fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let side = m.nrows();
    let mut k = 0;
    for j in 0..side {
        for i in j..side {
            out[k] = if i == j {
                m[(i, j)]
            } else {
                std::f64::consts::SQRT_2 * m[(i, j)]
            };
            k += 1;
        }
    }
}

fn smat(v: &[f64], side: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(side, side);
    let mut k = 0;
    for j in 0..side {
        for i in j..side {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let x = v[k] / std::f64::consts::SQRT_2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            k += 1;
        }
    }
    m
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Nesterov–Todd scaling of one block: `Rᵀ Z R = R⁻¹ S R⁻ᵀ = diag(λ)`.
struct BlockScaling {
    r: DMatrix<f64>,
    rinv: DMatrix<f64>,
    lambda: DVector<f64>,
}

impl BlockScaling {
    fn new(s: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Self> {
        let ls = s.clone().cholesky()?.l();
        let lz = z.clone().cholesky()?.l();
        let svd = (lz.transpose() * &ls).svd(true, true);
        let u = svd.u?;
        let v = svd.v_t?.transpose();
        let lambda = svd.singular_values;
        if lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return None;
        }
        let inv_sqrt = lambda.map(|l| 1.0 / l.sqrt());
        let r = ls * &v * DMatrix::from_diagonal(&inv_sqrt);
        let rinv = DMatrix::from_diagonal(&inv_sqrt) * u.transpose() * lz.transpose();
        Some(BlockScaling { r, rinv, lambda })
    }

    /// `W z = Rᵀ Z R`.
    fn scale_dual(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(self.r.transpose() * z * &self.r))
    }

    /// `W⁻ᵀ s = R⁻¹ S R⁻ᵀ`.
    fn scale_primal(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(&self.rinv * s * self.rinv.transpose()))
    }

    /// `W⁻¹ u = R⁻ᵀ U R⁻¹`.
    fn unscale_dual(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(self.rinv.transpose() * u * &self.rinv))
    }

    /// Solves `λ ∘ X = U` for the Jordan product `X ∘ Y = (XY + YX)/2`.
    fn lambda_solve(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.lambda.len();
        DMatrix::from_fn(m, m, |i, j| 2.0 * u[(i, j)] / (self.lambda[i] + self.lambda[j]))
    }
}

fn jordan(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    (a * b + b * a) * 0.5
}

/// Largest `α` with `X + α dX ⪰ 0` (`+∞` when unbounded).
fn psd_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(chol) = x.clone().cholesky() else {
        return 0.0;
    };
    let l = chol.l();
    let Some(linv) = l.try_inverse() else {
        return 0.0;
    };
    let m = symmetrize(&(&linv * dx * linv.transpose()));
    let min = SymmetricEigen::new(m).eigenvalues.min();
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

fn scalar_step(v: f64, dv: f64) -> f64 {
    if dv < 0.0 {
        -v / dv
    } else {
        f64::INFINITY
    }
}

struct Direction {
    dx: DVector<f64>,
    dz: DVector<f64>,
    ds: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

impl Direction {
    fn add(&self, other: &Direction) -> Direction {
        Direction {
            dx: &self.dx + &other.dx,
            dz: &self.dz + &other.dz,
            ds: &self.ds + &other.ds,
            dtau: self.dtau + other.dtau,
            dkappa: self.dkappa + other.dkappa,
        }
    }
}

/// Right-hand side of the linearized system (also used for its residual).
struct Rhs {
    qx: DVector<f64>,
    qzz: DVector<f64>,
    qt: f64,
    rc: Vec<DMatrix<f64>>,
    rk: f64,
}

impl Rhs {
    fn norm(&self) -> f64 {
        self.rc
            .iter()
            .fold(self.qx.amax().max(self.qzz.amax()), |m, r| m.max(r.amax()))
            .max(self.qt.abs())
            .max(self.rk.abs())
    }
}

struct Hsde<'a> {
    lmi: &'a Lmi,
    sides: Vec<usize>,
    offsets: Vec<usize>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    degree: f64,
}

impl<'a> Hsde<'a> {
    fn new(lmi: &'a Lmi) -> Self {
        let sides: Vec<usize> = lmi.constants.iter().map(|c| c.nrows()).collect();
        let mut offsets = Vec::with_capacity(sides.len() + 1);
        let mut total = 0;
        for &m in &sides {
            offsets.push(total);
            total += svec_len(m);
        }
        offsets.push(total);
        let n = lmi.num_vars();
        let mut a = DMatrix::zeros(total, n);
        let mut b = DVector::zeros(total);
        let mut buf = vec![0.0; total];
        for (k, &m) in sides.iter().enumerate() {
            let range = offsets[k]..offsets[k + 1];
            svec_into(&lmi.constants[k], &mut buf[range.clone()]);
            b.rows_mut(offsets[k], svec_len(m))
                .copy_from_slice(&buf[range.clone()]);
            for j in 0..n {
                svec_into(&lmi.coefs[k][j], &mut buf[range.clone()]);
                for (r, v) in range.clone().zip(&buf[range.clone()]) {
                    a[(r, j)] = -v;
                }
            }
        }
        Hsde {
            lmi,
            degree: sides.iter().sum::<usize>() as f64,
            sides,
            offsets,
            a,
            b,
            c: lmi.c.clone(),
        }
    }

    fn block<'v>(&self, v: &'v DVector<f64>, k: usize) -> &'v [f64] {
        &v.as_slice()[self.offsets[k]..self.offsets[k + 1]]
    }

    fn block_mat(&self, v: &DVector<f64>, k: usize) -> DMatrix<f64> {
        smat(self.block(v, k), self.sides[k])
    }

    fn assemble<F: FnMut(usize) -> DMatrix<f64>>(&self, mut f: F) -> DVector<f64> {
        let mut out = DVector::zeros(self.b.len());
        for k in 0..self.sides.len() {
            let m = f(k);
            svec_into(&m, &mut out.as_mut_slice()[self.offsets[k]..self.offsets[k + 1]]);
        }
        out
    }

    fn shift_into_cone(&self, v: &DVector<f64>) -> DVector<f64> {
        self.assemble(|k| {
            let mut m = self.block_mat(v, k);
            let min = SymmetricEigen::new(m.clone()).eigenvalues.min();
            if min < 1e-8 {
                for i in 0..self.sides[k] {
                    m[(i, i)] += 1.0 - min;
                }
            }
            m
        })
    }

    fn run(&self, settings: &SolverSettings) -> LmiOutcome {
        let n = self.lmi.num_vars();
        let at = self.a.transpose();
        let ata = &at * &self.a;
        let Some(ata_factor) = cholesky_regularized(&ata) else {
            return self.failure(DVector::zeros(n), 0);
        };

        let mut x = ata_factor.solve(&(&at * &self.b));
        let mut s = self.shift_into_cone(&(&self.b - &self.a * &x));
        let y = ata_factor.solve(&(-&self.c));
        let mut z = self.shift_into_cone(&(&self.a * y));
        let mut tau = 1.0;
        let mut kappa = 1.0;

        let b_norm = self.b.amax();
        let c_norm = self.c.amax();

        let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for iter in 0..settings.max_iterations {
            let rx = &at * &z + &self.c * tau;
            let rz = &self.a * &x + &s - &self.b * tau;
            let rtau = kappa + self.c.dot(&x) + self.b.dot(&z);
            let mu = (s.dot(&z) + tau * kappa) / (self.degree + 1.0);

            let pcost = self.c.dot(&x) / tau;
            let dcost = -self.b.dot(&z) / tau;
            let pres = rz.amax() / tau / (1.0 + b_norm);
            let dres = rx.amax() / tau / (1.0 + c_norm);
            let gap = (pcost - dcost).abs();
            let rel_gap = gap / (1.0 + pcost.abs() + dcost.abs());
            last = (pres, dres, rel_gap);
            if settings.verbose {
                eprintln!(
                    "iter {iter:3} pcost {pcost:+.6e} dcost {dcost:+.6e} pres {pres:.2e} dres {dres:.2e} gap {gap:.2e} tau {tau:.2e} kappa {kappa:.2e} mu {mu:.2e}"
                );
            }

            if pres <= settings.tolerance
                && dres <= settings.tolerance
                && rel_gap <= settings.tolerance
            {
                return LmiOutcome {
                    status: SolveStatus::Optimal,
                    w: &x / tau,
                    iterations: iter,
                    primal_residual: pres,
                    dual_residual: dres,
                    gap: rel_gap,
                };
            }

            let btz = self.b.dot(&z);
            if btz < 0.0 && kappa > tau {
                let ratio = (&at * &z).amax() / (-btz);
                if ratio <= settings.infeasibility_tolerance {
                    return LmiOutcome {
                        status: SolveStatus::Infeasible,
                        w: DVector::from_element(n, f64::NAN),
                        iterations: iter,
                        primal_residual: pres,
                        dual_residual: dres,
                        gap: rel_gap,
                    };
                }
            }
            let ctx = self.c.dot(&x);
            if ctx < 0.0 && kappa > tau {
                let ratio = (&self.a * &x + &s).amax() / (-ctx);
                if ratio <= settings.infeasibility_tolerance {
                    return LmiOutcome {
                        status: SolveStatus::Unbounded,
                        w: DVector::from_element(n, f64::NAN),
                        iterations: iter,
                        primal_residual: pres,
                        dual_residual: dres,
                        gap: rel_gap,
                    };
                }
            }

            // scaling
            let mut scalings = Vec::with_capacity(self.sides.len());
            for k in 0..self.sides.len() {
                match BlockScaling::new(&self.block_mat(&s, k), &self.block_mat(&z, k)) {
                    Some(sc) => scalings.push(sc),
                    None => return self.failure_with(&x, tau, iter, last),
                }
            }

            // scaled constraint matrix Ã = W⁻ᵀA (columns R⁻¹ A_j R⁻ᵀ) and its QR factors
            let mut a_sc = DMatrix::zeros(self.b.len(), n);
            let mut buf = vec![0.0; self.b.len()];
            for j in 0..n {
                for (k, sc) in scalings.iter().enumerate() {
                    let m = sc.scale_primal(&self.lmi.coefs[k][j]);
                    svec_into(&m, &mut buf[self.offsets[k]..self.offsets[k + 1]]);
                }
                for (r, v) in buf.iter().enumerate() {
                    a_sc[(r, j)] = -v;
                }
            }
            let scale_primal = |v: &DVector<f64>| {
                self.assemble(|k| scalings[k].scale_primal(&self.block_mat(v, k)))
            };
            let b_sc = scale_primal(&self.b);
            let qr = a_sc.clone().qr();
            let q = qr.q();
            let r = qr.r();
            let r_diag = r.diagonal().amin();
            if !(r_diag > 1e-14 * r.diagonal().amax()) {
                return self.failure_with(&x, tau, iter, last);
            }
            // (ÃᵀÃ)⁻¹ (Ãᵀ v + u) without forming ÃᵀÃ
            let ls_solve = |v: &DVector<f64>, u: &DVector<f64>| -> DVector<f64> {
                let w = r
                    .transpose()
                    .solve_lower_triangular(u)
                    .expect("nonzero diagonal");
                r.solve_upper_triangular(&(q.transpose() * v + w))
                    .expect("nonzero diagonal")
            };
            let x2 = ls_solve(&b_sc, &(-&self.c));
            let z2_sc = &a_sc * &x2 - &b_sc;
            let denom = -z2_sc.norm_squared() - kappa / tau;

            let solve_raw = |qx: &DVector<f64>,
                             qzz: &DVector<f64>,
                             qt: f64,
                             rc: &[DMatrix<f64>],
                             rk: f64|
             -> Direction {
                let r_sc = self.assemble(|k| scalings[k].lambda_solve(&rc[k]));
                let q_sc = scale_primal(qzz) - &r_sc;
                let x1 = ls_solve(&q_sc, qx);
                let z1_sc = &a_sc * &x1 - &q_sc;
                let dtau = (qt - rk / tau - self.c.dot(&x1) - b_sc.dot(&z1_sc)) / denom;
                let dx = &x1 + &x2 * dtau;
                let dz_sc = &z1_sc + &z2_sc * dtau;
                let dz = self.assemble(|k| scalings[k].unscale_dual(&self.block_mat(&dz_sc, k)));
                // primal linear equation taken literally: keeps A x + s − bτ on track
                let ds = qzz + &self.b * dtau - &self.a * &dx;
                let dkappa = (rk - kappa * dtau) / tau;
                Direction {
                    dx,
                    dz,
                    ds,
                    dtau,
                    dkappa,
                }
            };

            // residual of the full linearized system, complementarity rows in scaled space
            let residual = |d: &Direction,
                            qx: &DVector<f64>,
                            qzz: &DVector<f64>,
                            qt: f64,
                            rc: &[DMatrix<f64>],
                            rk: f64|
             -> Rhs {
                let comp = scalings
                    .iter()
                    .enumerate()
                    .map(|(k, sc)| {
                        let sum = sc.scale_dual(&self.block_mat(&d.dz, k))
                            + sc.scale_primal(&self.block_mat(&d.ds, k));
                        let m = sc.lambda.len();
                        &rc[k]
                            - DMatrix::from_fn(m, m, |i, j| {
                                0.5 * (sc.lambda[i] + sc.lambda[j]) * sum[(i, j)]
                            })
                    })
                    .collect();
                Rhs {
                    qx: qx - (&at * &d.dz + &self.c * d.dtau),
                    qzz: qzz - (&self.a * &d.dx + &d.ds - &self.b * d.dtau),
                    qt: qt - (self.c.dot(&d.dx) + self.b.dot(&d.dz) + d.dkappa),
                    rc: comp,
                    rk: rk - (kappa * d.dtau + tau * d.dkappa),
                }
            };

            let solve_dir = |qx: &DVector<f64>,
                             qzz: &DVector<f64>,
                             qt: f64,
                             rc: &[DMatrix<f64>],
                             rk: f64|
             -> Direction {
                let mut d = solve_raw(qx, qzz, qt, rc, rk);
                let mut err = residual(&d, qx, qzz, qt, rc, rk);
                for _ in 0..REFINEMENT_STEPS {
                    let corr = solve_raw(&err.qx, &err.qzz, err.qt, &err.rc, err.rk);
                    let candidate = d.add(&corr);
                    let cand_err = residual(&candidate, qx, qzz, qt, rc, rk);
                    if cand_err.norm() >= err.norm() {
                        break;
                    }
                    d = candidate;
                    err = cand_err;
                }
                d
            };

            let max_step = |d: &Direction| -> f64 {
                let mut alpha = scalar_step(tau, d.dtau).min(scalar_step(kappa, d.dkappa));
                for k in 0..self.sides.len() {
                    alpha = alpha
                        .min(psd_step(&self.block_mat(&s, k), &self.block_mat(&d.ds, k)))
                        .min(psd_step(&self.block_mat(&z, k), &self.block_mat(&d.dz, k)));
                }
                alpha
            };

            // predictor
            let lambda_sq: Vec<DMatrix<f64>> = scalings
                .iter()
                .map(|sc| DMatrix::from_diagonal(&sc.lambda.map(|l| -l * l)))
                .collect();
            let affine = solve_dir(&(-&rx), &(-&rz), -rtau, &lambda_sq, -tau * kappa);
            let alpha_aff = max_step(&affine).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3);
            let eta = 1.0 - sigma;

            // corrector
            let rc: Vec<DMatrix<f64>> = scalings
                .iter()
                .enumerate()
                .map(|(k, sc)| {
                    let ds_s = sc.scale_primal(&self.block_mat(&affine.ds, k));
                    let dz_s = sc.scale_dual(&self.block_mat(&affine.dz, k));
                    let mut m = &lambda_sq[k] - jordan(&ds_s, &dz_s);
                    for i in 0..self.sides[k] {
                        m[(i, i)] += sigma * mu;
                    }
                    m
                })
                .collect();
            let rk = -tau * kappa - affine.dtau * affine.dkappa + sigma * mu;
            let dir = solve_dir(&(-&rx * eta), &(-&rz * eta), -rtau * eta, &rc, rk);
            let alpha = (STEP_FRACTION * max_step(&dir)).min(1.0);
            if !(alpha > MIN_STEP) {
                return self.failure_with(&x, tau, iter, last);
            }

            x += &dir.dx * alpha;
            s += &dir.ds * alpha;
            z += &dir.dz * alpha;
            tau += alpha * dir.dtau;
            kappa += alpha * dir.dkappa;

            if !(tau > 0.0 && kappa > 0.0) || x.iter().any(|v| !v.is_finite()) {
                return self.failure_with(&x, tau.max(f64::MIN_POSITIVE), iter, last);
            }
        }
        self.failure_with(&x, tau, settings.max_iterations, last)
    }

    fn failure(&self, w: DVector<f64>, iterations: usize) -> LmiOutcome {
        LmiOutcome {
            status: SolveStatus::NumericalFailure,
            w,
            iterations,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            gap: f64::NAN,
        }
    }

    fn failure_with(
        &self,
        x: &DVector<f64>,
        tau: f64,
        iterations: usize,
        (pres, dres, gap): (f64, f64, f64),
    ) -> LmiOutcome {
        LmiOutcome {
            status: SolveStatus::NumericalFailure,
            w: x / tau,
            iterations,
            primal_residual: pres,
            dual_residual: dres,
            gap,
        }
    }
}

/// Cholesky factor, retrying with a growing diagonal shift.
fn cholesky_regularized(m: &DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = m.clone().cholesky() {
        return Some(c);
    }
    let scale = m.diagonal().amax().max(1.0);
    let mut delta = 1e-14 * scale;
    for _ in 0..8 {
        let shifted = m + DMatrix::identity(m.nrows(), m.ncols()) * delta;
        if let Some(c) = shifted.cholesky() {
            return Some(c);
        }
        delta *= 100.0;
    }
    None
}
