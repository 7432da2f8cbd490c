//! Artifacts: one JSON file per reach set, a manifest, and polygon vertices
//! of every branch projected onto two coordinates.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hzreach::milp::Sense;
use hzreach::reach::ReachResult;
use hzreach::{Complexity, ConstrainedZonotope, HybridZonotope, HzError, Point};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{CliError, Result};

/// Support directions per traced polygon.
pub const POLYGON_DIRECTIONS: usize = 64;

/// Consecutive support points closer than this are one vertex.
const VERTEX_TOL: f64 = 1e-9;

#[derive(Debug, Serialize)]
pub struct StepEntry {
    pub t: usize,
    pub file: String,
    pub n_g: usize,
    pub n_b: usize,
    pub n_c: usize,
    pub order: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unreduced: Option<Complexity>,
    pub splits: usize,
    pub single_branches: usize,
    /// Branches traced in the polygon file; `None` when the step exceeded
    /// the enumeration cap.
    pub polygons: Option<usize>,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub horizon: usize,
    pub mode: hzreach::nn::BoundsMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub projection: [usize; 2],
    pub steps: Vec<StepEntry>,
    pub polygon_file: String,
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn set_file_name(t: usize) -> String {
    format!("R_{t}.json")
}

/// Selection matrix keeping coordinates `pair`.
fn projection_matrix(n: usize, pair: [usize; 2]) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(2, n);
    p[(0, pair[0])] = 1.0;
    p[(1, pair[1])] = 1.0;
    p
}

/// Vertices of a planar constrained zonotope from support points in evenly
/// spaced directions, counterclockwise.
pub fn trace_polygon(cz: &ConstrainedZonotope) -> Result<Vec<Point>> {
    let z = HybridZonotope::from(cz.clone()).prune_zero_columns();
    let mut vertices: Vec<Point> = Vec::with_capacity(POLYGON_DIRECTIONS);
    for k in 0..POLYGON_DIRECTIONS {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / POLYGON_DIRECTIONS as f64;
        let d = DVector::from_vec(vec![theta.cos(), theta.sin()]);
        let (_, x, _) = z.support_point(&d, Sense::Maximize)?;
        if vertices.last().is_none_or(|p| (p - &x).amax() > VERTEX_TOL) {
            vertices.push(x);
        }
    }
    while vertices.len() > 1 && (&vertices[0] - vertices.last().unwrap()).amax() <= VERTEX_TOL {
        vertices.pop();
    }
    Ok(vertices)
}

/// Polygon rows `t,branch,vertex,x,y` for one set; `None` when the set has
/// more binary patterns than `cap`.
pub fn polygon_rows(
    t: usize,
    z: &HybridZonotope,
    pair: [usize; 2],
    cap: usize,
    out: &mut String,
) -> Result<Option<usize>> {
    let planar = z.linear_map(&projection_matrix(z.dim(), pair))?;
    let branches = match planar.enumerate_cz(cap) {
        Ok(b) => b,
        Err(HzError::Capacity { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    for (k, cz) in branches.iter().enumerate() {
        for (j, p) in trace_polygon(cz)?.iter().enumerate() {
            let _ = writeln!(out, "{t},{k},{j},{},{}", p[0], p[1]);
        }
    }
    Ok(Some(branches.len()))
}

/// Writes `R_t.json`, `polygons.csv` and `manifest.json` into `dir`.
pub fn write_reach(
    dir: &Path,
    result: &ReachResult,
    pair: [usize; 2],
    cap: usize,
    mut manifest: Manifest,
) -> Result<(PathBuf, Vec<String>)> {
    create_dir(dir)?;
    let mut csv = String::from("t,branch,vertex,x,y\n");
    let mut skipped = Vec::new();
    for (t, z) in result.sets.iter().enumerate() {
        let file = set_file_name(t);
        write_file(&dir.join(&file), &z.to_json())?;
        let polygons = polygon_rows(t, z, pair, cap, &mut csv)?;
        if polygons.is_none() {
            skipped.push(format!(
                "R_{t}: {} binaries exceed the enumeration cap {cap}; polygons skipped",
                z.n_b()
            ));
        }
        let log = &result.log[t];
        let c = z.complexity();
        manifest.steps.push(StepEntry {
            t,
            file,
            n_g: c.n_g,
            n_b: c.n_b,
            n_c: c.n_c,
            order: z.order(),
            unreduced: log.unreduced,
            splits: log.splits,
            single_branches: log.single_branches,
            polygons,
            seconds: log.seconds,
        });
    }
    write_file(&dir.join(&manifest.polygon_file), &csv)?;
    let manifest_path = dir.join("manifest.json");
    write_file(
        &manifest_path,
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok((manifest_path, skipped))
}
