#![allow(dead_code)]

use momsos::poly::{MultiIndex, Poly};
use momsos::relax::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn poly(d: usize, terms: &[(&[u32], f64)]) -> Poly<f64> {
    Poly::from_terms(d, terms.iter().map(|(e, c)| (MultiIndex::new(e.to_vec()), *c))).unwrap()
}

pub fn cubic_disk_objective() -> Poly<f64> {
    poly(2, &[(&[3, 0], 1.0 / 6.0), (&[2, 0], 0.5), (&[1, 0], 1.0), (&[0, 2], 0.5)])
}

pub fn cubic_disk() -> Instance {
    Instance::new(cubic_disk_objective(), vec![Poly::unit_ball(2)], 1.0).unwrap()
}

/// `x³` on `{x(1 − x) ≥ 0}`.
pub fn cubic_interval() -> Instance {
    let f = poly(1, &[(&[3], 1.0)]);
    let g = poly(1, &[(&[1], 1.0), (&[2], -1.0)]);
    Instance::new(f, vec![g], 1.0).unwrap()
}

/// `(c/6)x₁³ + ½x₁² + x₁ + ½Σ_{i≥2} xᵢ²` on the unit ball.
pub fn family(c: f64, d: usize) -> Instance {
    let e = |i: usize, k: u32| {
        let mut v = vec![0u32; d];
        v[i] = k;
        MultiIndex::new(v)
    };
    let mut terms = vec![(e(0, 3), c / 6.0), (e(0, 2), 0.5), (e(0, 1), 1.0)];
    for i in 1..d {
        terms.push((e(i, 2), 0.5));
    }
    let f = Poly::from_terms(d, terms).unwrap();
    Instance::new(f, vec![], 1.0).unwrap()
}

/// Value of `family(c, d)` at its minimizer `(−1, 0, …)`.
pub fn family_optimum(c: f64) -> f64 {
    -c / 6.0 + 0.5 - 1.0
}

/// Strictly convex quadratic on the unit ball with an interior minimizer.
pub fn convex_quadratic() -> Instance {
    let f = poly(2, &[(&[2, 0], 1.0), (&[1, 1], 1.0), (&[0, 2], 2.0), (&[1, 0], -1.0), (&[0, 1], 0.5)]);
    Instance::new(f, vec![], 1.0).unwrap()
}

/// `(x₁² − ¼)² + x₂²` on the unit ball: two minimizers at `(±½, 0)`.
pub fn two_basin() -> Instance {
    let f = poly(2, &[(&[4, 0], 1.0), (&[2, 0], -0.5), (&[0, 0], 0.0625), (&[0, 2], 1.0)]);
    Instance::new(f, vec![], 1.0).unwrap()
}

/// Motzkin polynomial on the ball of radius 2; minimum 0 at `(±1, ±1)`.
pub fn motzkin() -> Instance {
    let f = poly(2, &[(&[4, 2], 1.0), (&[2, 4], 1.0), (&[2, 2], -3.0), (&[0, 0], 1.0)]);
    Instance::new(f, vec![], 2.0).unwrap()
}

/// Cubic disk objective cut by the half-plane `x₁ + x₂ ≥ −1`.
pub fn cubic_disk_halfplane() -> Instance {
    let g = poly(2, &[(&[1, 0], 1.0), (&[0, 1], 1.0), (&[0, 0], 1.0)]);
    Instance::new(cubic_disk_objective(), vec![g], 1.0).unwrap()
}

/// Everything above; names are used in failure messages.
pub fn regression_suite() -> Vec<(String, Instance)> {
    let mut out = vec![
        ("cubic_disk".to_string(), cubic_disk()),
        ("cubic_interval".to_string(), cubic_interval()),
        ("convex_quadratic".to_string(), convex_quadratic()),
        ("two_basin".to_string(), two_basin()),
        ("cubic_disk_halfplane".to_string(), cubic_disk_halfplane()),
    ];
    for c in [0.25, 0.5, 1.0] {
        for d in [2, 3] {
            out.push((format!("family c={c} d={d}"), family(c, d)));
        }
    }
    out
}

/// Random dense polynomial of degree ≤ `deg` with coefficients in `[−1, 1]`.
pub fn random_poly(rng: &mut ChaCha8Rng, d: usize, deg: usize) -> Poly<f64> {
    let basis = momsos::poly::monomial_basis(d, deg);
    Poly::from_terms(d, basis.into_iter().map(|a| (a, rng.gen_range(-1.0..1.0)))).unwrap()
}

/// Random quartic objective on the unit ball, optionally cut by a half-plane through
/// a point near the origin.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_poly(&mut rng, 2, 4);
    let mut gs = Vec::new();
    if rng.gen_bool(0.5) {
        let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let c = rng.gen_range(0.1..0.5);
        gs.push(poly(2, &[(&[1, 0], a), (&[0, 1], b), (&[0, 0], c)]));
    }
    Instance::new(f, gs, 1.0).unwrap()
}

/// Uniform random point of the ball of radius `r` in dimension `d`.
pub fn ball_point(rng: &mut ChaCha8Rng, d: usize, r: f64) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-r..r)).collect();
        if p.iter().map(|v| v * v).sum::<f64>() <= r * r {
            return p;
        }
    }
}
