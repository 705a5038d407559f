//! Brute-force reference minimizer: quasi-random sampling plus projected
//! gradient polish. It shares no code with the relaxations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::relax::Instance;

pub const MAX_DIMENSION: usize = 4;
pub const MIN_SAMPLES: usize = 1000;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_POLISH_STEPS: usize = 500;
pub const DEFAULT_SEED: u64 = 1;

const CANDIDATES: usize = 10;
const ARMIJO: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;
const PRIMES: [u64; MAX_DIMENSION] = [2, 3, 5, 7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// `f(argmin)`.
    pub value: f64,
    /// Original coordinates.
    pub argmin: Vec<f64>,
    /// Points drawn inside the ball.
    pub samples_used: usize,
    /// Points of those satisfying every constraint.
    pub feasible_samples: usize,
    /// Whether the polish of the winning candidate stalled before its step budget.
    pub polish_converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub samples: usize,
    pub polish_steps: usize,
    /// Offset into the Halton sequence.
    pub seed: u64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            samples: DEFAULT_SAMPLES,
            polish_steps: DEFAULT_POLISH_STEPS,
            seed: DEFAULT_SEED,
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * scale;
        i /= base;
        scale *= inv;
    }
    out
}

/// First `count` Halton points of `[−1, 1]^d` that fall in the unit ball.
fn ball_samples(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut i = seed;
    while out.len() < count {
        let p: Vec<f64> = PRIMES[..d]
            .iter()
            .map(|&b| 2.0 * radical_inverse(i, b) - 1.0)
            .collect();
        if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            out.push(p);
        }
        i += 1;
    }
    out
}

fn project_ball(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 1.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

struct Polisher<'a> {
    f: &'a Poly<f64>,
    gradient: Vec<Poly<f64>>,
    constraints: &'a [Poly<f64>],
}

impl Polisher<'_> {
    fn feasible(&self, x: &[f64]) -> bool {
        self.constraints
            .iter()
            .all(|g| g.eval(x).map_or(false, |v| v >= 0.0))
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.f.eval(x).expect("dimension checked")
    }

    /// Projected gradient with Armijo backtracking; returns the point, its value
    /// and whether it stalled before the step budget ran out.
    fn run(&self, start: &[f64], steps: usize) -> (Vec<f64>, f64, bool) {
        let mut x = start.to_vec();
        let mut fx = self.value(&x);
        let mut eta = 1.0;
        for _ in 0..steps {
            let grad: Vec<f64> = self
                .gradient
                .iter()
                .map(|g| g.eval(&x).expect("dimension checked"))
                .collect();
            let mut t = eta;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let mut y: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - t * gi).collect();
                project_ball(&mut y);
                let decrease: f64 = grad.iter().zip(y.iter().zip(&x)).map(|(g, (yi, xi))| g * (yi - xi)).sum();
                if decrease < 0.0 && self.feasible(&y) {
                    let fy = self.value(&y);
                    if fy <= fx + ARMIJO * decrease {
                        accepted = Some((y, fy));
                        break;
                    }
                }
                t *= SHRINK;
            }
            match accepted {
                Some((y, fy)) => {
                    x = y;
                    fx = fy;
                    eta = (t / SHRINK).min(1e6);
                }
                None => return (x, fx, true),
            }
        }
        (x, fx, false)
    }
}

/// Global minimum estimate over a preprocessed instance.
///
/// The best 10 samples of every halving prefix (`N, N/2, N/4, … ≥ 1000`) are
/// polished, so doubling the sample count can only improve the answer.
pub fn brute_force_min(instance: &Instance, settings: &OracleSettings) -> Result<OracleResult> {
    if !instance.is_preprocessed() {
        return Err(Error::NotPreprocessed);
    }
    let d = instance.dimension();
    if d > MAX_DIMENSION {
        return Err(Error::InvalidArgument(format!(
            "oracle supports at most {MAX_DIMENSION} variables, got {d}"
        )));
    }
    if settings.samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "oracle needs at least {MIN_SAMPLES} samples, got {}",
            settings.samples
        )));
    }

    let polisher = Polisher {
        f: instance.objective(),
        gradient: instance.objective().gradient(),
        constraints: instance.constraints(),
    };
    let points = ball_samples(d, settings.samples, settings.seed);
    let scored: Vec<(usize, f64)> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| polisher.feasible(p))
        .map(|(i, p)| (i, polisher.value(p)))
        .collect();
    if scored.is_empty() {
        return Err(Error::NoFeasibleSample {
            samples: settings.samples,
        });
    }

    let mut chosen: Vec<usize> = Vec::new();
    let mut prefix = settings.samples;
    while prefix >= MIN_SAMPLES {
        let mut within: Vec<(usize, f64)> = scored.iter().copied().filter(|&(i, _)| i < prefix).collect();
        within.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        chosen.extend(within.iter().take(CANDIDATES).map(|&(i, _)| i));
        prefix /= 2;
    }
    chosen.sort_unstable();
    chosen.dedup();

    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    for i in chosen {
        // polish only ever decreases f, so the raw sample need not be kept
        let cand = polisher.run(&points[i], settings.polish_steps);
        if best.as_ref().map_or(true, |b| cand.1 < b.1) {
            best = Some(cand);
        }
    }
    let (x, value, converged) = best.expect("at least one feasible sample");
    Ok(OracleResult {
        value,
        argmin: instance.to_original(&x),
        samples_used: settings.samples,
        feasible_samples: scored.len(),
        polish_converged: converged,
    })
}
