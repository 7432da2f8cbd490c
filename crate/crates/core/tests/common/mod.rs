//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use hzreach::nn::NeuralNetwork;
use hzreach::reach::LinearSystem;
use hzreach::{ConstrainedZonotope, HybridZonotope, Point};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MEMBER_TOL: f64 = 1e-6;

pub fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

pub fn m(rows: usize, cols: usize, xs: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, xs)
}

/// The two-branch nonconvex set used throughout: two parallelograms glued
/// by one binary factor.
pub fn two_branch_set() -> HybridZonotope {
    HybridZonotope::new(
        v(&[0.25, 2.25]),
        m(
            2,
            8,
            &[
                -1.0, 1.0, 0.0, 0.0, -0.5, 1.0, 0.0, 0.0, //
                -1.0, -1.0, 0.0, 0.0, -1.0, -0.5, 0.0, 0.0,
            ],
        ),
        m(2, 1, &[-0.75, -0.75]),
        m(
            4,
            8,
            &[
                1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0,
            ],
        ),
        m(4, 1, &[1.0, 1.0, -1.0, -1.0]),
        v(&[1.0, 1.0, 1.0, 1.0]),
    )
    .unwrap()
}

pub fn double_integrator() -> LinearSystem {
    LinearSystem::new(m(2, 2, &[1.0, 1.0, 0.0, 1.0]), m(2, 1, &[0.5, 1.0])).unwrap()
}

/// Two boxes of half-width 0.2 centered at (2.25, 0) and (2.75, 0).
pub fn double_integrator_x0() -> HybridZonotope {
    HybridZonotope::new(
        v(&[2.5, 0.0]),
        m(2, 2, &[0.2, 0.0, 0.0, 0.2]),
        m(2, 1, &[0.25, 0.0]),
        DMatrix::zeros(0, 2),
        DMatrix::zeros(0, 1),
        DVector::zeros(0),
    )
    .unwrap()
}

/// 2-5-5-1 controller with one crossing neuron per step on the
/// double-integrator initial set.
pub fn double_integrator_net() -> NeuralNetwork {
    NeuralNetwork::seeded(&[2, 5, 5, 1], 1).unwrap()
}

pub fn lateral_system() -> LinearSystem {
    LinearSystem::new(
        m(
            4,
            4,
            &[
                0.0, 1.0, 5.0, 0.0, //
                0.0, -5.0, 0.0, -9.5, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.05, 0.0, -2.8,
            ],
        ),
        m(4, 1, &[0.0, 25.0, 0.0, 50.0]),
    )
    .unwrap()
}

pub fn lateral_x0() -> HybridZonotope {
    HybridZonotope::from_box(&[0.1, -0.9, 0.05, 0.05], &[0.9, -0.1, 0.15, 0.15]).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random hybrid zonotope whose right-hand side is produced by factors in
/// `[-1.4, 1.4]`, so roughly half of the draws are nonempty.
pub fn random_hz(rng: &mut ChaCha8Rng, n: usize, max_g: usize, max_b: usize, max_c: usize) -> HybridZonotope {
    let n_g = rng.random_range(1..=max_g);
    let n_b = rng.random_range(0..=max_b);
    let n_c = rng.random_range(0..=max_c);
    let ac = uniform_matrix(rng, n_c, n_g);
    let ab = uniform_matrix(rng, n_c, n_b);
    let xi_c = DVector::from_fn(n_g, |_, _| rng.random_range(-1.4..1.4));
    let xi_b = DVector::from_fn(n_b, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    let b = &ac * xi_c + &ab * xi_b;
    HybridZonotope::new(
        DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
        uniform_matrix(rng, n, n_g),
        uniform_matrix(rng, n, n_b),
        ac,
        ab,
        b,
    )
    .unwrap()
}

/// Random nonempty constrained zonotope: the right-hand side comes from
/// factors strictly inside the box.
pub fn random_cz(rng: &mut ChaCha8Rng, n: usize, max_g: usize, max_c: usize) -> ConstrainedZonotope {
    let n_g = rng.random_range(1..=max_g);
    let n_c = rng.random_range(0..=max_c.min(n_g - 1));
    let a = uniform_matrix(rng, n_c, n_g);
    let xi = DVector::from_fn(n_g, |_, _| rng.random_range(-0.8..0.8));
    let b = &a * xi;
    ConstrainedZonotope::new(
        DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)),
        uniform_matrix(rng, n, n_g),
        a,
        b,
    )
    .unwrap()
}

/// Asserts every point is a member of `z` at `MEMBER_TOL`.
pub fn assert_members(z: &HybridZonotope, points: &[Point], what: &str) {
    for (k, p) in points.iter().enumerate() {
        assert!(
            z.contains_point(p, MEMBER_TOL).unwrap(),
            "{what}: point {k} = {:?} is not a member",
            p.as_slice()
        );
    }
}

/// Mutual sampled containment of two sets.
pub fn assert_same_set(a: &HybridZonotope, b: &HybridZonotope, count: usize, seed: u64) {
    assert_members(b, &a.sample_points(count, seed).unwrap(), "first in second");
    assert_members(a, &b.sample_points(count, seed + 1).unwrap(), "second in first");
}

/// Star-shaped region: `arms` thin boxes of half-length `length` and
/// half-width `width`, rotated evenly about `center` and joined by union.
pub fn star_region(center: [f64; 2], arms: usize, length: f64, width: f64) -> HybridZonotope {
    let arm = |k: usize| {
        let theta = std::f64::consts::PI * k as f64 / arms as f64;
        let (s, c) = theta.sin_cos();
        HybridZonotope::zonotope(v(&center), m(2, 2, &[length * c, -width * s, length * s, width * c])).unwrap()
    };
    (1..arms).fold(arm(0), |acc, k| acc.union(&arm(k)).unwrap())
}
