mod common;

use common::*;
use hzreach::oracle::{
    circle_directions, enumeration_avoidance_optimum, enumeration_emptiness_optimum, enumeration_is_empty,
    grid_inclusion_check, grid_points, sampled_hull_support, simulate,
};
use hzreach::reach::{reach_horizon, ReachOptions};
use hzreach::HybridZonotope;

#[test]
fn grid_covers_a_box_and_skips_the_gap() {
    let unit = HybridZonotope::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
    assert_eq!(grid_points(&unit, 5).unwrap().len(), 25);
    // the two-branch set leaves part of its enclosing box uncovered
    let pts = grid_points(&two_branch_set(), 20).unwrap();
    assert!(!pts.is_empty() && pts.len() < 400);
    assert_members(&two_branch_set(), &pts, "grid");
}

#[test]
fn inclusion_check_reports_a_wrong_reach_set() {
    let sys = double_integrator();
    let net = double_integrator_net();
    let x0 = double_integrator_x0();
    let mut result = reach_horizon(&x0, &sys, &net, 1, &ReachOptions::default()).unwrap();
    result.sets[1] = x0.clone();
    let report = grid_inclusion_check(&x0, &sys, &net, &result, 8, &[], 1e-6).unwrap();
    assert!(report.violations > 0);
    assert!(report.first_violation.is_some());
    assert!(report.max_residual.is_infinite());
}

#[test]
fn simulation_follows_the_dynamics() {
    let sys = double_integrator();
    let net = double_integrator_net();
    let x = v(&[2.4, 0.1]);
    let traj = simulate(&sys, &net, &x, 3);
    assert_eq!(traj.states.len(), 4);
    for t in 0..3 {
        let s = &traj.states[t];
        let next = &sys.a * s + &sys.b * net.evaluate(s);
        assert_eq!(traj.states[t + 1], next);
    }
}

#[test]
fn enumeration_on_known_sets() {
    assert_eq!(enumeration_emptiness_optimum(&two_branch_set()).unwrap(), Some(1.0));
    assert!(!enumeration_is_empty(&two_branch_set()).unwrap());
    assert!(enumeration_is_empty(&HybridZonotope::empty(2)).unwrap());
    let a = HybridZonotope::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
    let far = HybridZonotope::from_box(&[3.0, 0.0], &[4.0, 1.0]).unwrap();
    let opt = enumeration_avoidance_optimum(&a, &far).unwrap().unwrap();
    // centers 3 apart, half-widths 0.5: the factors meet at +-3
    assert!((opt - 3.0).abs() < 1e-9, "{opt}");
    assert!(enumeration_avoidance_optimum(&a, &HybridZonotope::from_box(&[0.0], &[1.0]).unwrap()).is_err());
}

#[test]
fn hull_supports_of_a_square() {
    let corners = [v(&[1.0, 1.0]), v(&[-1.0, 1.0]), v(&[-1.0, -1.0]), v(&[1.0, -1.0])];
    let dirs = circle_directions(8);
    let h = sampled_hull_support(&corners, &dirs).unwrap();
    assert!((h[0] - 1.0).abs() < 1e-12);
    assert!((h[1] - 2f64.sqrt()).abs() < 1e-12);
    assert!(dirs.iter().all(|d| (d.norm() - 1.0).abs() < 1e-12));
}
