mod common;

use common::*;
use hzreach::milp::{encode_emptiness, solve_lp, solve_milp, to_lp_format, MilpProblem, SolverStatus};
use hzreach::oracle::{enumeration_emptiness_optimum, leaf_minimum, lp_duality_gap, vertex_enumeration_lp};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random boxed problem with `n` variables and `rows` equalities whose first
/// `bins` variables are binary. Feasible by construction when `feasible`.
fn random_problem(r: &mut ChaCha8Rng, n: usize, rows: usize, bins: usize, feasible: bool) -> MilpProblem {
    let a = DMatrix::from_fn(rows, n, |_, _| {
        if r.random_bool(0.7) {
            r.random_range(-2.0..2.0)
        } else {
            0.0
        }
    });
    let lower: Vec<f64> = (0..n)
        .map(|j| if j < bins { 0.0 } else { r.random_range(-2.0..0.0) })
        .collect();
    let upper: Vec<f64> = (0..n)
        .map(|j| if j < bins { 1.0 } else { r.random_range(0.0..2.0) })
        .collect();
    let x0: Vec<f64> = (0..n)
        .map(|j| {
            if j < bins {
                r.random_range(0..2) as f64
            } else {
                r.random_range(lower[j]..upper[j])
            }
        })
        .collect();
    let mut rhs: Vec<f64> = (0..rows).map(|i| (0..n).map(|j| a[(i, j)] * x0[j]).sum()).collect();
    if !feasible {
        for v in &mut rhs {
            *v += r.random_range(-3.0..3.0);
        }
    }
    let mut p = MilpProblem::new(a, rhs);
    p.objective = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    p.lower = lower;
    p.upper = upper;
    for j in 0..bins {
        p.set_binary(j);
    }
    p
}

#[test]
fn lower_bounded_minimum() {
    // min x with x - s = 3, s >= 0
    let mut p = MilpProblem::new(m(1, 2, &[1.0, -1.0]), vec![3.0]);
    p.objective = vec![1.0, 0.0];
    p.lower[1] = 0.0;
    let sol = solve_lp(&p);
    assert_eq!(sol.status, SolverStatus::Optimal);
    assert!((sol.value - 3.0).abs() < 1e-12);
}

#[test]
fn two_leaf_branching() {
    // variables (t, xi, s1, s2, beta): xi - t + s1 = 0, -xi - t + s2 = 0, xi + 4 beta = 3
    let mut p = MilpProblem::new(
        m(
            3,
            5,
            &[
                -1.0, 1.0, 1.0, 0.0, 0.0, //
                -1.0, -1.0, 0.0, 1.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, 4.0,
            ],
        ),
        vec![0.0, 0.0, 3.0],
    );
    p.objective[0] = 1.0;
    p.lower = vec![0.0, f64::NEG_INFINITY, 0.0, 0.0, 0.0];
    p.upper[4] = 1.0;
    p.set_binary(4);
    let sol = solve_milp(&p);
    assert_eq!(sol.status, SolverStatus::Optimal);
    assert!((sol.value - 1.0).abs() < 1e-9);
    assert!((sol.assignment[1] + 1.0).abs() < 1e-9);
}

#[test]
fn binaries_fixed_by_rows_match_the_substituted_lp() {
    let mut r = rng(5);
    let base = random_problem(&mut r, 5, 2, 0, true);
    // append two binaries pinned to 1 and 0 by their own rows
    let (rows, n) = base.eq_matrix.shape();
    let mut a = DMatrix::zeros(rows + 2, n + 2);
    a.view_mut((0, 0), (rows, n)).copy_from(&base.eq_matrix);
    a[(rows, n)] = 1.0;
    a[(rows + 1, n + 1)] = 1.0;
    let mut rhs = base.eq_rhs.clone();
    rhs.extend([1.0, 0.0]);
    let mut p = MilpProblem::new(a, rhs);
    p.objective = base.objective.iter().copied().chain([0.0, 0.0]).collect();
    p.lower = base.lower.iter().copied().chain([0.0, 0.0]).collect();
    p.upper = base.upper.iter().copied().chain([1.0, 1.0]).collect();
    p.set_binary(n);
    p.set_binary(n + 1);
    let milp = solve_milp(&p);
    let lp = solve_lp(&base);
    assert!((milp.value - lp.value).abs() < 1e-9);
}

#[test]
fn lp_matches_vertex_enumeration() {
    let mut r = rng(31);
    let mut optimal = 0;
    for k in 0..200 {
        let n = r.random_range(2..=8);
        let rows = r.random_range(1..=n.min(4));
        let feasible = r.random_bool(0.8);
        let p = random_problem(&mut r, n, rows, 0, feasible);
        let sol = solve_lp(&p);
        let reference = vertex_enumeration_lp(&p).unwrap();
        match reference {
            Some(v) => {
                assert_eq!(sol.status, SolverStatus::Optimal, "instance {k}");
                assert!((sol.value - v).abs() < 1e-6, "instance {k}: {} vs {v}", sol.value);
                assert!(p.max_violation(&sol.assignment) < 1e-7);
                let gap = lp_duality_gap(&p, &sol).unwrap();
                assert!(gap <= 1e-7, "instance {k}: duality gap {gap}");
                optimal += 1;
            }
            None => assert_eq!(sol.status, SolverStatus::Infeasible, "instance {k}"),
        }
    }
    assert!(optimal > 100);
}

#[test]
fn milp_matches_leaf_enumeration() {
    let mut r = rng(97);
    for k in 0..100 {
        let bins = r.random_range(1..=10);
        let n = bins + r.random_range(1..=6);
        let rows = r.random_range(1..=5);
        let feasible = r.random_bool(0.85);
        let p = random_problem(&mut r, n, rows, bins, feasible);
        let sol = solve_milp(&p);
        match leaf_minimum(&p).unwrap() {
            Some(v) => {
                assert_eq!(sol.status, SolverStatus::Optimal, "instance {k}");
                assert!((sol.value - v).abs() < 1e-7, "instance {k}: {} vs {v}", sol.value);
                assert!(p.max_violation(&sol.assignment) < 1e-7);
                for j in 0..bins {
                    let b = sol.assignment[j];
                    assert!(b == 0.0 || b == 1.0, "binary {j} = {b}");
                }
            }
            None => assert_eq!(sol.status, SolverStatus::Infeasible, "instance {k}"),
        }
    }
}

#[test]
fn emptiness_optimum_matches_enumeration() {
    let mut r = rng(4242);
    for k in 0..100 {
        let z = random_hz(&mut r, 2, 6, 4, 3);
        let (p, _) = encode_emptiness(&z);
        let sol = solve_milp(&p);
        match enumeration_emptiness_optimum(&z).unwrap() {
            Some(v) => {
                assert_eq!(sol.status, SolverStatus::Optimal, "instance {k}");
                assert!((sol.value - v).abs() < 1e-6, "instance {k}: {} vs {v}", sol.value);
            }
            None => assert_eq!(sol.status, SolverStatus::Infeasible, "instance {k}"),
        }
    }
}

#[test]
fn zonotope_emptiness_optimum_is_zero() {
    let z = double_integrator_x0();
    let (p, _) = encode_emptiness(&z);
    assert!(solve_milp(&p).value.abs() < 1e-12);
}

#[test]
fn solves_are_deterministic() {
    let mut r = rng(8);
    let p = random_problem(&mut r, 12, 4, 6, true);
    let a = solve_milp(&p);
    let b = solve_milp(&p);
    assert_eq!(a.assignment, b.assignment);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.nodes, b.nodes);
}

#[test]
fn lp_dump_lists_every_section() {
    let mut r = rng(9);
    let p = random_problem(&mut r, 4, 2, 2, true);
    let text = to_lp_format(&p);
    for section in ["Minimize", "Subject To", "Bounds", "Binary", "End"] {
        assert!(text.contains(section), "missing {section}:\n{text}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn milp_never_beats_its_leaves(seed in any::<u64>()) {
        let mut r = rng(seed);
        let bins = r.random_range(1..=6);
        let n = bins + r.random_range(1..=4);
        let rows = r.random_range(1..=4);
        let p = random_problem(&mut r, n, rows, bins, true);
        let sol = solve_milp(&p);
        let leaf = leaf_minimum(&p).unwrap().unwrap();
        prop_assert_eq!(sol.status, SolverStatus::Optimal);
        prop_assert!((sol.value - leaf).abs() < 1e-7);
    }
}
