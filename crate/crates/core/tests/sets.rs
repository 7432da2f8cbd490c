mod common;

use common::*;
use hzreach::milp::Sense;
use hzreach::oracle::{enumeration_emptiness_optimum, enumeration_is_empty};
use hzreach::{HybridZonotope, HzError};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn unit_square() -> HybridZonotope {
    HybridZonotope::zonotope(v(&[0.0, 0.0]), DMatrix::identity(2, 2)).unwrap()
}

fn interval(lo: f64, hi: f64) -> HybridZonotope {
    HybridZonotope::from_box(&[lo], &[hi]).unwrap()
}

#[test]
fn identity_map_keeps_matrices() {
    let z = two_branch_set();
    let out = z.affine_map(&DMatrix::identity(2, 2), &DVector::zeros(2)).unwrap();
    assert_eq!(out, z);
}

#[test]
fn axis_scaling_of_the_unit_square() {
    let out = unit_square()
        .affine_map(&m(2, 2, &[2.0, 0.0, 0.0, 1.0]), &DVector::zeros(2))
        .unwrap();
    assert_eq!(out.gc(), &m(2, 2, &[2.0, 0.0, 0.0, 1.0]));
    assert!(out.contains_point(&v(&[2.0, 1.0]), 1e-9).unwrap());
    assert!(!out.contains_point(&v(&[2.1, 0.0]), 1e-9).unwrap());
}

#[test]
fn projection_bounds_cover_projected_samples() {
    let z = two_branch_set();
    let proj = z.affine_map(&m(1, 2, &[1.0, 0.0]), &DVector::zeros(1)).unwrap();
    let hull = proj.interval_hull().unwrap()[0];
    for p in z.sample_points(10_000, 11).unwrap() {
        assert!(hull.contains(p[0], 1e-9), "{} outside {:?}", p[0], hull);
    }
}

#[test]
fn affine_map_shape_error() {
    let err = unit_square().affine_map(&DMatrix::identity(3, 3), &DVector::zeros(3));
    assert!(matches!(err, Err(HzError::Shape { .. })));
}

#[test]
fn self_intersection_is_the_same_set() {
    let z = two_branch_set();
    let both = z.intersect(&z).unwrap();
    assert_eq!((both.n_g(), both.n_b(), both.n_c()), (16, 2, 10));
    assert_same_set(&z, &both, 200, 3);
}

#[test]
fn box_intersection() {
    let a = HybridZonotope::from_box(&[0.0, 0.0], &[2.0, 2.0]).unwrap();
    let b = HybridZonotope::from_box(&[1.0, 1.0], &[3.0, 3.0]).unwrap();
    let c = a.intersect(&b).unwrap();
    for p in [[1.0, 1.0], [1.0, 2.0], [2.0, 1.0], [2.0, 2.0]] {
        assert!(c.contains_point(&v(&p), 1e-9).unwrap(), "{p:?}");
    }
    for p in [[0.9, 1.5], [2.1, 1.5], [1.5, 0.9], [1.5, 2.1]] {
        assert!(!c.contains_point(&v(&p), 1e-9).unwrap(), "{p:?}");
    }
}

#[test]
fn intersection_with_a_box_lies_in_both() {
    let z = two_branch_set();
    let bx = HybridZonotope::from_box(&[0.0, 0.0], &[2.0, 4.0]).unwrap();
    let c = z.intersect(&bx).unwrap();
    let pts = c.sample_points(300, 5).unwrap();
    assert_members(&z, &pts, "set");
    assert_members(&bx, &pts, "box");
}

#[test]
fn half_interval() {
    let z = interval(-1.0, 1.0).intersect_halfspace(&v(&[1.0]), 0.0).unwrap();
    let b = z.bounds(&v(&[1.0])).unwrap();
    assert!((b.lo + 1.0).abs() < 1e-7 && b.hi.abs() < 1e-7, "{b:?}");
}

#[test]
fn redundant_halfspace_keeps_the_set() {
    let z = interval(-1.0, 1.0);
    let cut = z.intersect_halfspace(&v(&[1.0]), 2.0).unwrap();
    assert_same_set(&z, &cut, 200, 9);
}

#[test]
fn halfspace_cut_of_the_two_branch_set() {
    let z = two_branch_set();
    let cut = z.intersect_halfspace(&v(&[0.0, 1.0]), 2.0).unwrap();
    let pts = cut.sample_points(500, 21).unwrap();
    assert!(pts.iter().all(|p| p[1] <= 2.0 + 1e-9));
    assert_members(&z, &pts, "original");
}

#[test]
fn zero_normal_is_degenerate() {
    let err = interval(-1.0, 1.0).intersect_halfspace(&v(&[0.0]), 1.0);
    assert!(matches!(err, Err(HzError::Degenerate(_))));
}

#[test]
fn union_binary_counts() {
    let a = interval(-2.0, -1.0);
    let b = interval(1.0, 2.0);
    assert_eq!(a.union(&b).unwrap().n_b(), 1);
    let one = a.union(&b).unwrap();
    let two = one.union(&a).unwrap();
    assert_eq!(two.n_b(), 2);
    assert_eq!(one.union(&two).unwrap().n_b(), 4);
}

#[test]
fn disjoint_interval_union() {
    let u = interval(-2.0, -1.0).union(&interval(1.0, 2.0)).unwrap();
    assert!(u.contains_point(&v(&[-1.5]), 1e-9).unwrap());
    assert!(u.contains_point(&v(&[1.5]), 1e-9).unwrap());
    assert!(!u.contains_point(&v(&[0.0]), 1e-9).unwrap());
}

#[test]
fn self_union_is_the_same_set() {
    let z = two_branch_set();
    assert_same_set(&z, &z.union(&z).unwrap(), 200, 4);
}

#[test]
fn infeasible_box_constraint_is_empty() {
    let z = HybridZonotope::new(
        v(&[0.0]),
        m(1, 1, &[1.0]),
        DMatrix::zeros(1, 0),
        m(1, 1, &[1.0]),
        DMatrix::zeros(1, 0),
        v(&[2.0]),
    )
    .unwrap();
    assert!(z.is_empty().unwrap());
    assert!((z.emptiness_optimum().unwrap().unwrap().0 - 2.0).abs() < 1e-9);
}

#[test]
fn two_branch_set_is_nonempty_at_the_threshold() {
    let z = two_branch_set();
    assert!(!z.is_empty().unwrap());
    // every member pins some factor at the box boundary
    let (opt, _) = z.emptiness_optimum().unwrap().unwrap();
    assert!((opt - 1.0).abs() < 1e-9, "{opt}");
    assert!((enumeration_emptiness_optimum(&z).unwrap().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn emptiness_matches_enumeration_on_random_sets() {
    let mut r = rng(2024);
    let mut empties = 0;
    for k in 0..100 {
        let z = random_hz(&mut r, 2, 6, 4, 3);
        let fast = z.is_empty().unwrap();
        assert_eq!(fast, enumeration_is_empty(&z).unwrap(), "instance {k}");
        empties += fast as usize;
    }
    // the generator should produce both outcomes
    assert!(empties > 5 && empties < 95, "{empties}");
}

#[test]
fn membership_basics() {
    let z = HybridZonotope::zonotope(v(&[1.0, -1.0]), m(2, 1, &[1.0, 1.0])).unwrap();
    let a = z.membership_assignment(&v(&[1.0, -1.0]), 0.0).unwrap().unwrap();
    assert!(a.xi_c.amax() < 1e-12);
    let hull = two_branch_set().interval_hull().unwrap();
    assert!(!two_branch_set()
        .contains_point(&v(&[hull[0].hi + 0.1, 0.0]), 1e-9)
        .unwrap());
}

#[test]
fn center_of_the_two_branch_set_is_not_a_member() {
    // per-branch minimum factor norms for the center are 1.0385 and 1.125
    let z = two_branch_set();
    assert!(!z.contains_point(&v(&[0.25, 2.25]), 1e-6).unwrap());
}

#[test]
fn unit_box_bounds() {
    let b = unit_square().bounds(&v(&[1.0, 0.0])).unwrap();
    assert!((b.lo + 1.0).abs() < 1e-12 && (b.hi - 1.0).abs() < 1e-12);
    let b = unit_square().bounds(&v(&[1.0, 1.0])).unwrap();
    assert!((b.lo + 2.0).abs() < 1e-12 && (b.hi - 2.0).abs() < 1e-12);
}

#[test]
fn bounds_agree_with_sampled_extremes() {
    let z = two_branch_set();
    let pts = z.sample_points(100_000, 17).unwrap();
    for d in [v(&[0.0, 1.0]), v(&[1.0, 0.0])] {
        let b = z.bounds(&d).unwrap();
        let (lo, hi) = pts
            .iter()
            .map(|p| d.dot(p))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
        assert!(lo >= b.lo - 1e-9 && hi <= b.hi + 1e-9);
        assert!(
            (lo - b.lo).abs() < 1e-4 && (hi - b.hi).abs() < 1e-4,
            "{b:?} vs [{lo}, {hi}]"
        );
    }
}

#[test]
fn support_point_attains_its_value() {
    let z = two_branch_set();
    let d = v(&[0.3, -0.7]);
    for sense in [Sense::Minimize, Sense::Maximize] {
        let (val, x, a) = z.support_point(&d, sense).unwrap();
        assert!((d.dot(&x) - val).abs() < 1e-7);
        assert!(z.assignment_residual(&a) < 1e-7);
    }
}

#[test]
fn bounds_of_empty_set_fail() {
    let z = HybridZonotope::empty(2);
    assert!(matches!(z.bounds(&v(&[1.0, 0.0])), Err(HzError::Empty(_))));
}

#[test]
fn enumeration_without_binaries_is_the_set_itself() {
    let z = unit_square();
    let list = z.enumerate_cz(1).unwrap();
    assert_eq!(list.len(), 1);
    assert_eq!(HybridZonotope::from(list[0].clone()), z);
}

#[test]
fn enumeration_of_the_two_branch_set() {
    let z = two_branch_set();
    let list = z.enumerate_cz(16).unwrap();
    assert_eq!(list.len(), 2);
    for (k, cz) in list.into_iter().enumerate() {
        let part = HybridZonotope::from(cz);
        assert_members(&z, &part.sample_points(200, k as u64).unwrap(), "branch");
    }
}

#[test]
fn enumeration_of_disjoint_intervals() {
    let u = interval(-2.0, -1.0).union(&interval(1.0, 2.0)).unwrap();
    let list = u.enumerate_cz(16).unwrap();
    assert_eq!(list.len(), 2);
    let mut hulls: Vec<(f64, f64)> = list
        .into_iter()
        .map(|cz| {
            let h = HybridZonotope::from(cz).interval_hull().unwrap()[0];
            (h.lo, h.hi)
        })
        .collect();
    hulls.sort_by(|a, b| a.0.total_cmp(&b.0));
    for ((lo, hi), (elo, ehi)) in hulls.into_iter().zip([(-2.0, -1.0), (1.0, 2.0)]) {
        assert!((lo - elo).abs() < 1e-7 && (hi - ehi).abs() < 1e-7);
    }
}

#[test]
fn enumeration_union_matches_the_set() {
    let mut r = rng(77);
    for _ in 0..10 {
        let z = random_hz(&mut r, 2, 5, 3, 2);
        if z.is_empty().unwrap() {
            continue;
        }
        let list = z.enumerate_cz(64).unwrap();
        let mut rebuilt = HybridZonotope::from(list[0].clone());
        for cz in &list[1..] {
            rebuilt = rebuilt.union(&HybridZonotope::from(cz.clone())).unwrap();
        }
        assert_same_set(&z, &rebuilt, 60, 1);
    }
}

#[test]
fn sampling_covers_every_branch() {
    let z = two_branch_set();
    let samples = z.sample_assignments(1000, 8).unwrap();
    assert_members(&z, &samples.iter().map(|a| z.point_of(a)).collect::<Vec<_>>(), "sample");
    for s in [-1.0, 1.0] {
        assert!(samples.iter().any(|a| a.xi_b[0] == s), "no sample with binary {s}");
    }
}

#[test]
fn empty_set_cannot_be_sampled() {
    let z = HybridZonotope::empty(1);
    assert!(matches!(z.sample_points(3, 0), Err(HzError::Empty(_))));
}

#[test]
fn minkowski_identities() {
    let z = two_branch_set();
    let zero = HybridZonotope::point(DVector::zeros(2)).unwrap();
    assert_same_set(&z, &z.minkowski_sum(&zero).unwrap(), 200, 12);
    let sum = interval(-1.0, 1.0).minkowski_sum(&interval(-1.0, 1.0)).unwrap();
    let b = sum.bounds(&v(&[1.0])).unwrap();
    assert!((b.lo + 2.0).abs() < 1e-9 && (b.hi - 2.0).abs() < 1e-9);
}

#[test]
fn json_round_trip_is_exact() {
    let z = two_branch_set()
        .affine_map(&m(2, 2, &[0.1, 1.0 / 3.0, 2.0f64.sqrt(), -7.0]), &v(&[1e-17, 3.0]))
        .unwrap();
    assert_eq!(HybridZonotope::from_json(&z.to_json()).unwrap(), z);
}

fn arb_set() -> impl Strategy<Value = HybridZonotope> {
    (1usize..4, 0usize..4, 0usize..3, 0usize..3, any::<u64>()).prop_map(|(n, g, b, c, seed)| {
        let mut r = rng(seed);
        use rand::Rng;
        let mut mat = |rows: usize, cols: usize| DMatrix::from_fn(rows, cols, |_, _| r.random_range(-2.0..2.0));
        let (gc, gb, ac, ab) = (mat(n, g), mat(n, b), mat(c, g), mat(c, b));
        let cvec = DVector::from_fn(n, |i, _| i as f64 * 0.5);
        let bvec = DVector::from_fn(c, |i, _| i as f64 * 0.25);
        HybridZonotope::new(cvec, gc, gb, ac, ab, bvec).unwrap()
    })
}

fn assert_shape(z: &HybridZonotope) {
    assert_eq!(z.gc().shape(), (z.dim(), z.n_g()));
    assert_eq!(z.gb().shape(), (z.dim(), z.n_b()));
    assert_eq!(z.ac().shape(), (z.n_c(), z.n_g()));
    assert_eq!(z.ab().shape(), (z.n_c(), z.n_b()));
    assert_eq!(z.b().len(), z.n_c());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn operations_keep_consistent_shapes(z in arb_set(), w in arb_set()) {
        let n = z.dim();
        assert_shape(&z.affine_map(&DMatrix::from_element(2, n, 0.5), &DVector::zeros(2)).unwrap());
        assert_shape(&z.intersect_halfspace(&DVector::from_element(n, 1.0), 0.3).unwrap());
        assert_shape(&z.cartesian(&w));
        if w.dim() == n {
            let i = z.intersect(&w).unwrap();
            assert_shape(&i);
            prop_assert_eq!(i.n_c(), z.n_c() + w.n_c() + n);
            let u = z.union(&w).unwrap();
            assert_shape(&u);
            prop_assert_eq!(u.n_b(), z.n_b() + w.n_b() + 1);
            assert_shape(&z.minkowski_sum(&w).unwrap());
        }
        let c = z.complexity();
        prop_assert!((c.order - (c.n_g as f64 + c.n_b as f64 - c.n_c as f64) / n as f64).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip(z in arb_set()) {
        prop_assert_eq!(HybridZonotope::from_json(&z.to_json()).unwrap(), z);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn membership_semantics_of_intersection_and_union(seed in any::<u64>()) {
        let mut r = rng(seed);
        let z = random_hz(&mut r, 2, 4, 2, 2);
        let w = random_hz(&mut r, 2, 4, 2, 2);
        prop_assume!(!z.is_empty().unwrap() && !w.is_empty().unwrap());
        let inter = z.intersect(&w).unwrap();
        let uni = z.union(&w).unwrap();
        // probe points from both sets and from a box around them
        let mut probes = z.sample_points(30, seed).unwrap();
        probes.extend(w.sample_points(30, seed + 1).unwrap());
        use rand::Rng;
        probes.extend((0..40).map(|_| DVector::from_fn(2, |_, _| r.random_range(-4.0..4.0))));
        for x in &probes {
            let in_z = z.contains_point(x, MEMBER_TOL).unwrap();
            let in_w = w.contains_point(x, MEMBER_TOL).unwrap();
            // strict tolerance on the composite avoids boundary flip-flops
            if inter.contains_point(x, 1e-9).unwrap() {
                prop_assert!(in_z && in_w);
            }
            if uni.contains_point(x, 1e-9).unwrap() {
                prop_assert!(in_z || in_w);
            }
            if z.contains_point(x, 1e-9).unwrap() && w.contains_point(x, 1e-9).unwrap() {
                prop_assert!(inter.contains_point(x, MEMBER_TOL).unwrap());
            }
            if z.contains_point(x, 1e-9).unwrap() || w.contains_point(x, 1e-9).unwrap() {
                prop_assert!(uni.contains_point(x, MEMBER_TOL).unwrap());
            }
        }
    }

    #[test]
    fn affine_images_contain_mapped_samples(seed in any::<u64>()) {
        let mut r = rng(seed);
        let z = random_hz(&mut r, 2, 4, 2, 2);
        prop_assume!(!z.is_empty().unwrap());
        use rand::Rng;
        let rm = DMatrix::from_fn(3, 2, |_, _| r.random_range(-1.0..1.0));
        let t = DVector::from_fn(3, |_, _| r.random_range(-1.0..1.0));
        let img = z.affine_map(&rm, &t).unwrap();
        let pts: Vec<_> = z.sample_points(50, seed).unwrap().iter().map(|x| &rm * x + &t).collect();
        assert_members(&img, &pts, "image");
    }

    #[test]
    fn bounds_are_sound_and_attained(seed in any::<u64>()) {
        let mut r = rng(seed);
        let z = random_hz(&mut r, 2, 5, 2, 2);
        prop_assume!(!z.is_empty().unwrap());
        let d = v(&[0.6, -0.8]);
        let b = z.bounds(&d).unwrap();
        for p in z.sample_points(200, seed).unwrap() {
            prop_assert!(b.contains(d.dot(&p), 1e-7));
        }
        let (hi, x, _) = z.support_point(&d, Sense::Maximize).unwrap();
        prop_assert!((hi - b.hi).abs() < 1e-7);
        prop_assert!(z.contains_point(&x, MEMBER_TOL).unwrap());
    }
}
