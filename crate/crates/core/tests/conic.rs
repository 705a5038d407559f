use momsos::conic::*;
use momsos::Error;

/// `min x s.t. [[1, x], [x, 1]] ⪰ 0`.
fn disk_problem() -> ConicProblem {
    let mut p = ConicProblem::new(1);
    p.objective[0] = 1.0;
    let mut b = ConeBlock::new(ConeKind::Psd, 2);
    b.push_constant(0, 0, 1.0);
    b.push_constant(1, 1, 1.0);
    b.push_linear(1, 0, 0, 1.0);
    p.blocks.push(b);
    p
}

#[test]
fn two_by_two_psd() {
    let sol = solve(&disk_problem(), &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.x[0] + 1.0).abs() < 1e-6, "{:?}", sol);
    assert!((sol.objective + 1.0).abs() < 1e-7);
    assert!(sol.metrics.min_block_eigenvalue >= -1e-7);
}

#[test]
fn pinned_negative_eigenvalue_is_infeasible() {
    let mut p = ConicProblem::new(1);
    let mut b = ConeBlock::new(ConeKind::Psd, 2);
    b.push_constant(0, 0, 1.0);
    b.push_constant(1, 1, -1.0);
    b.push_linear(1, 0, 0, 1.0);
    p.blocks.push(b);
    let sol = solve(&p, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn no_variables_pinned_block() {
    let mut p = ConicProblem::new(0);
    let mut b = ConeBlock::new(ConeKind::Psd, 2);
    b.push_constant(0, 0, 1.0);
    b.push_constant(1, 1, -0.5);
    p.blocks.push(b.clone());
    assert_eq!(
        solve(&p, &SolverSettings::default()).unwrap().status,
        SolveStatus::Infeasible
    );
    p.blocks[0].entries[1].coef = 0.5;
    assert_eq!(
        solve(&p, &SolverSettings::default()).unwrap().status,
        SolveStatus::Optimal
    );
}

#[test]
fn unbounded_direction_detected() {
    // min x s.t. [[1 + y, x], [x, 1 + y]] ⪰ 0 lets x → −∞ as y → ∞
    let mut p = ConicProblem::new(2);
    p.objective[0] = 1.0;
    let mut b = ConeBlock::new(ConeKind::Psd, 2);
    b.push_constant(0, 0, 1.0);
    b.push_constant(1, 1, 1.0);
    b.push_linear(0, 0, 1, 1.0);
    b.push_linear(1, 1, 1, 1.0);
    b.push_linear(1, 0, 0, 1.0);
    p.blocks.push(b);
    let sol = solve(&p, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Unbounded);
}

#[test]
fn equality_block_is_honoured() {
    // min x0 + x1 s.t. x0 - 2 x1 = 0.5 and [[1, x0], [x0, 1]] ⪰ 0, [[1, x1],[x1, 1]] ⪰ 0
    let mut p = disk_problem();
    p.num_vars = 2;
    p.objective = vec![1.0, 1.0];
    let mut b = ConeBlock::new(ConeKind::Psd, 2);
    b.push_constant(0, 0, 1.0);
    b.push_constant(1, 1, 1.0);
    b.push_linear(1, 0, 1, 1.0);
    p.blocks.push(b);
    let mut eq = ConeBlock::new(ConeKind::Zero, 1);
    eq.push_linear(0, 0, 0, 1.0);
    eq.push_linear(0, 0, 1, -2.0);
    eq.push_constant(0, 0, -0.5);
    p.blocks.push(eq);
    let sol = solve(&p, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    // x1 = (x0 - 0.5)/2, objective 1.5 x0 - 0.25 minimized at x0 = -1
    assert!((sol.x[0] + 1.0).abs() < 1e-6);
    assert!((sol.x[1] + 0.75).abs() < 1e-6);
    assert!(sol.metrics.equality_violation < 1e-9);
}

#[test]
fn inconsistent_equalities_are_infeasible() {
    let mut p = ConicProblem::new(1);
    let mut eq = ConeBlock::new(ConeKind::Zero, 2);
    eq.push_linear(0, 0, 0, 1.0);
    eq.push_linear(1, 0, 0, 1.0);
    eq.push_constant(1, 0, -1.0);
    p.blocks.push(eq);
    assert_eq!(
        solve(&p, &SolverSettings::default()).unwrap().status,
        SolveStatus::Infeasible
    );
}

#[test]
fn malformed_problem_rejected() {
    let mut p = disk_problem();
    p.blocks[0].entries.push(AffineEntry {
        row: 0,
        col: 0,
        var: Some(5),
        coef: 1.0,
    });
    assert!(matches!(
        solve(&p, &SolverSettings::default()),
        Err(Error::MalformedProblem(_))
    ));
}

#[test]
fn deterministic_runs() {
    let p = disk_problem();
    let a = solve(&p, &SolverSettings::default()).unwrap();
    let b = solve(&p, &SolverSettings::default()).unwrap();
    assert_eq!(a.status, b.status);
    assert!((a.objective - b.objective).abs() <= 1e-9);
    assert_eq!(a.metrics.iterations, b.metrics.iterations);
}

#[test]
fn triplet_dump_format() {
    let mut buf = Vec::new();
    disk_problem().write_triplets(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines, vec!["-1 0 0 1 1e0", "0 0 0 0 1e0", "0 1 1 0 1e0", "0 1 0 1 1e0"]);
    assert!(text.contains("# block 0 psd 2"));
}

#[test]
fn tridiagonal_block_reaches_boundary() {
    // max x s.t. [[1, x, 0], [x, 1, x], [0, x, 1]] ⪰ 0, eigenvalues 1 and 1 ± √2 x
    let mut p = ConicProblem::new(1);
    p.objective[0] = -1.0;
    let mut b = ConeBlock::new(ConeKind::Psd, 3);
    for i in 0..3 {
        b.push_constant(i, i, 1.0);
    }
    b.push_linear(1, 0, 0, 1.0);
    b.push_linear(2, 1, 0, 1.0);
    p.blocks.push(b);
    let sol = solve(&p, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.x[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    assert!(p.min_psd_eigenvalue(&sol.x) > -1e-7);
}
