//! Scenario documents: one JSON file naming the system, controller, sets and
//! horizon. Relative paths inside it resolve against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use hzreach::nn::{BoundsMode, NeuralNetwork};
use hzreach::reach::{LinearSystem, ReachOptions};
use hzreach::reduce::ReductionPolicy;
use hzreach::HybridZonotope;
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const DEFAULT_ENUMERATION_CAP: usize = 1024;

#[derive(Debug, Deserialize)]
#[allow(non_snake_case)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub A: Vec<Vec<f64>>,
    pub B: Vec<Vec<f64>>,
}

/// A network file, or a seeded random network of the given layer sizes.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum NetworkSource {
    File(String),
    Seeded { sizes: Vec<usize>, seed: u64 },
}

/// A set file, or the set written inline.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SetSource {
    File(String),
    Inline(HybridZonotope),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub system: SystemDocument,
    pub network: NetworkSource,
    pub initial_set: SetSource,
    #[serde(default)]
    pub unsafe_set: Option<SetSource>,
    pub horizon: usize,
    pub mode: BoundsMode,
    #[serde(default)]
    pub reduction: Option<ReductionPolicy>,
    #[serde(default)]
    pub binary_budget: Option<usize>,
    /// Seed of a seeded network; `--seed` overrides it.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<String>,
    /// State coordinates traced in the polygon export.
    #[serde(default = "default_projection")]
    pub projection: [usize; 2],
    /// Largest binary-pattern count expanded for the polygon export.
    #[serde(default = "default_cap")]
    pub enumeration_cap: usize,
}

fn default_projection() -> [usize; 2] {
    [0, 1]
}

fn default_cap() -> usize {
    DEFAULT_ENUMERATION_CAP
}

#[derive(Debug)]
pub struct Scenario {
    pub path: PathBuf,
    pub system: LinearSystem,
    pub network: NeuralNetwork,
    pub initial_set: HybridZonotope,
    pub unsafe_set: Option<HybridZonotope>,
    pub horizon: usize,
    pub options: ReachOptions,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub projection: [usize; 2],
    pub enumeration_cap: usize,
}

/// Command-line settings that take precedence over the document.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub mode: Option<BoundsMode>,
    pub seed: Option<u64>,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_set(path: &Path) -> Result<HybridZonotope> {
    HybridZonotope::from_json(&read_text(path)?).map_err(|e| CliError::invalid("set", path, e))
}

pub fn load_network(path: &Path) -> Result<NeuralNetwork> {
    NeuralNetwork::from_json(&read_text(path)?).map_err(|e| CliError::invalid("network", path, e))
}

fn matrix(rows: &[Vec<f64>], name: &str) -> std::result::Result<DMatrix<f64>, String> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(format!("{name} is ragged"));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

impl Scenario {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Scenario> {
        let text = read_text(path)?;
        let doc: ScenarioDocument = serde_json::from_str(&text).map_err(|e| CliError::invalid("scenario", path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let invalid = |reason: String| CliError::invalid("scenario", path, reason);

        let a = matrix(&doc.system.A, "A").map_err(invalid)?;
        let b = matrix(&doc.system.B, "B").map_err(invalid)?;
        let system = LinearSystem::new(a, b).map_err(|e| invalid(e.to_string()))?;

        let seed = overrides.seed.or(doc.seed);
        let network = match &doc.network {
            NetworkSource::File(file) => load_network(&base.join(file))?,
            NetworkSource::Seeded { sizes, seed: own } => {
                NeuralNetwork::seeded(sizes, seed.unwrap_or(*own)).map_err(|e| invalid(e.to_string()))?
            }
        };
        let set = |source: &SetSource| match source {
            SetSource::File(file) => load_set(&base.join(file)),
            SetSource::Inline(z) => Ok(z.clone()),
        };
        let initial_set = set(&doc.initial_set)?;
        let unsafe_set = doc.unsafe_set.as_ref().map(set).transpose()?;

        let n = system.state_dim();
        if doc.horizon == 0 {
            return Err(invalid("horizon must be at least 1".into()));
        }
        if network.input_dim() != n || network.output_dim() != system.input_dim() {
            return Err(invalid(format!(
                "network maps {} -> {}, system needs {} -> {}",
                network.input_dim(),
                network.output_dim(),
                n,
                system.input_dim()
            )));
        }
        if initial_set.dim() != n || unsafe_set.as_ref().is_some_and(|o| o.dim() != n) {
            return Err(invalid(format!("sets must have the state dimension {n}")));
        }
        if doc.projection.iter().any(|&i| i >= n) || doc.projection[0] == doc.projection[1] {
            return Err(invalid(format!(
                "projection {:?} is not a pair of distinct coordinates below {n}",
                doc.projection
            )));
        }

        Ok(Scenario {
            path: path.to_path_buf(),
            system,
            network,
            initial_set,
            unsafe_set,
            horizon: doc.horizon,
            options: ReachOptions {
                mode: overrides.mode.unwrap_or(doc.mode),
                reduction: doc.reduction,
                binary_budget: doc.binary_budget,
            },
            seed,
            output: doc.output.map(|o| base.join(o)),
            projection: doc.projection,
            enumeration_cap: doc.enumeration_cap,
        })
    }
}
