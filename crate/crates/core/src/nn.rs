//! ReLU feed-forward networks and their exact image over hybrid zonotopes.
//!
//! A layer maps the set affinely, bounds every pre-activation coordinate,
//! and then applies ReLU one coordinate at a time. A coordinate whose range
//! straddles zero is split into its nonnegative part and the zeroed image
//! of its nonpositive part, joined by a union; this adds one binary factor
//! per split. Propagation can carry extra trailing coordinates that the
//! network never touches, which is how the closed-loop image keeps track of
//! the state that produced each output.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{HzError, Result};
use crate::hz::{Complexity, HybridZonotope, Interval};
use crate::linalg::{all_finite_mat, all_finite_vec, block_diag, from_rows, to_rows};

/// Bounds below which a pre-activation counts as nonnegative, and above
/// which it counts as nonpositive.
pub const BOUND_TOL: f64 = 1e-9;

/// Margin a bound must clear for its optimizer point to certify that the
/// corresponding split branch is nonempty.
const CERTIFY_MARGIN: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

/// Affine layers with ReLU after every layer except the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDocument", into = "NetworkDocument")]
pub struct NeuralNetwork {
    layers: Vec<Layer>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub layers: Vec<LayerDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct LayerDocument {
    pub W: Vec<Vec<f64>>,
    pub v: Vec<f64>,
}

impl NeuralNetwork {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(HzError::Contract("a network needs at least one layer".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.weights.nrows() != l.bias.len() {
                return Err(HzError::shape(
                    "NeuralNetwork::new",
                    format!(
                        "layer {k}: {} weight rows but bias length {}",
                        l.weights.nrows(),
                        l.bias.len()
                    ),
                ));
            }
            if k > 0 && l.weights.ncols() != layers[k - 1].weights.nrows() {
                return Err(HzError::shape(
                    "NeuralNetwork::new",
                    format!(
                        "layer {k} expects {} inputs, previous layer has {} outputs",
                        l.weights.ncols(),
                        layers[k - 1].weights.nrows()
                    ),
                ));
            }
            if !all_finite_mat(&l.weights) || !all_finite_vec(&l.bias) {
                return Err(HzError::NonFinite("network weights"));
            }
        }
        Ok(NeuralNetwork { layers })
    }

    /// Gaussian weights scaled by `1/sqrt(fan_in)` and small Gaussian biases.
    pub fn seeded(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(HzError::Contract("need input and output sizes".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let layers = sizes
            .windows(2)
            .map(|w| {
                let scale = 1.0 / (w[0] as f64).sqrt();
                Layer {
                    weights: DMatrix::from_fn(w[1], w[0], |_, _| scale * unit.sample(&mut rng)),
                    bias: DVector::from_fn(w[1], |_, _| 0.1 * unit.sample(&mut rng)),
                }
            })
            .collect();
        NeuralNetwork::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weights.nrows()
    }

    pub fn neuron_count(&self) -> usize {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.bias.len()).sum()
    }

    /// Pointwise forward pass.
    pub fn evaluate(&self, x: &DVector<f64>) -> DVector<f64> {
        let last = self.layers.len() - 1;
        let mut h = x.clone();
        for (k, l) in self.layers.iter().enumerate() {
            h = &l.weights * h + &l.bias;
            if k < last {
                h.apply(|v| *v = v.max(0.0));
            }
        }
        h
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| HzError::Document(e.to_string()))
    }
}

impl TryFrom<NetworkDocument> for NeuralNetwork {
    type Error = HzError;

    fn try_from(doc: NetworkDocument) -> Result<Self> {
        let layers = doc
            .layers
            .into_iter()
            .enumerate()
            .map(|(k, l)| {
                let weights = from_rows(&l.W, 0).ok_or_else(|| HzError::Document(format!("layer {k}: W is ragged")))?;
                Ok(Layer {
                    weights,
                    bias: DVector::from_vec(l.v),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        NeuralNetwork::new(layers)
    }
}

impl From<NeuralNetwork> for NetworkDocument {
    fn from(net: NeuralNetwork) -> Self {
        NetworkDocument {
            layers: net
                .layers
                .iter()
                .map(|l| LayerDocument {
                    W: to_rows(&l.weights),
                    v: l.bias.iter().copied().collect(),
                })
                .collect(),
        }
    }
}

/// How pre-activation bounds are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundsMode {
    /// Two support MILPs per neuron; tight.
    #[default]
    Exact,
    /// Center plus or minus the absolute generator row sums; ignores constraints.
    Fast,
}

/// Pre-activation bounds of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Per neuron: points of the set attain `lower < 0` and `upper > 0`, so
    /// both split branches are known to be nonempty.
    pub straddle_witnessed: Vec<bool>,
}

impl NeuronBounds {
    /// Bounds of coordinates `rows` of `r`.
    pub fn of(r: &HybridZonotope, rows: Range<usize>, mode: BoundsMode) -> Result<Self> {
        let hull: Vec<Interval> = match mode {
            BoundsMode::Exact => rows
                .clone()
                .map(|i| {
                    let mut e = DVector::zeros(r.dim());
                    e[i] = 1.0;
                    r.bounds(&e)
                })
                .collect::<Result<_>>()?,
            BoundsMode::Fast => r.generator_bounds()[rows.clone()].to_vec(),
        };
        let witnessed = hull
            .iter()
            .map(|iv| mode == BoundsMode::Exact && iv.lo < -CERTIFY_MARGIN && iv.hi > CERTIFY_MARGIN)
            .collect();
        Ok(NeuronBounds {
            lower: hull.iter().map(|iv| iv.lo).collect(),
            upper: hull.iter().map(|iv| iv.hi).collect(),
            straddle_witnessed: witnessed,
        })
    }
}

/// What happened to one neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeuronCase {
    /// `lb >= 0`: identity, skipped.
    Active,
    /// `ub <= 0`: coordinate zeroed.
    Inactive,
    /// Split into two nonempty branches joined by a union.
    Split,
    /// Split requested but one branch was empty; the other is returned.
    SingleBranch,
}

/// Counts for one propagated ReLU layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub cases: Vec<NeuronCase>,
    pub n_b_in: usize,
    pub n_b_out: usize,
    pub complexity: Complexity,
}

impl LayerReport {
    pub fn count(&self, case: NeuronCase) -> usize {
        self.cases.iter().filter(|c| **c == case).count()
    }

    /// Neurons whose bounds straddled zero, whether or not both branches survived.
    pub fn crossings(&self) -> usize {
        self.count(NeuronCase::Split) + self.count(NeuronCase::SingleBranch)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub layers: Vec<LayerReport>,
}

impl PropagationReport {
    pub fn splits(&self) -> usize {
        self.layers.iter().map(|l| l.count(NeuronCase::Split)).sum()
    }

    pub fn single_branches(&self) -> usize {
        self.layers.iter().map(|l| l.count(NeuronCase::SingleBranch)).sum()
    }
}

/// Identity with row `i` zeroed.
pub fn zeroing_map(n: usize, i: usize) -> DMatrix<f64> {
    let mut e = DMatrix::identity(n, n);
    e[(i, i)] = 0.0;
    e
}

fn unit(n: usize, i: usize, sign: f64) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = sign;
    e
}

/// ReLU applied to coordinate `i` of `r`, given valid bounds of that coordinate.
pub fn step_relu(r: &HybridZonotope, i: usize, lb: f64, ub: f64) -> Result<HybridZonotope> {
    Ok(step_relu_case(r, i, lb, ub, false)?.0)
}

fn step_relu_case(
    r: &HybridZonotope,
    i: usize,
    lb: f64,
    ub: f64,
    branches_known_nonempty: bool,
) -> Result<(HybridZonotope, NeuronCase)> {
    let n = r.dim();
    if i >= n {
        return Err(HzError::shape(
            "step_relu",
            format!("coordinate {i} of a {n}-dimensional set"),
        ));
    }
    if lb.is_nan() || ub.is_nan() || lb > ub {
        return Err(HzError::Contract(format!("invalid bounds [{lb}, {ub}] for neuron {i}")));
    }
    if lb >= -BOUND_TOL {
        return Ok((r.clone(), NeuronCase::Active));
    }
    let zero = zeroing_map(n, i);
    if ub <= BOUND_TOL {
        return Ok((r.linear_map(&zero)?, NeuronCase::Inactive));
    }
    let plus = r.intersect_halfspace(&unit(n, i, -1.0), 0.0)?;
    let minus = r.intersect_halfspace(&unit(n, i, 1.0), 0.0)?;
    if !branches_known_nonempty {
        let plus_empty = plus.is_empty()?;
        let minus_empty = minus.is_empty()?;
        match (plus_empty, minus_empty) {
            (false, false) => {}
            (false, true) => return Ok((plus, NeuronCase::SingleBranch)),
            (true, false) => return Ok((minus.linear_map(&zero)?, NeuronCase::SingleBranch)),
            // only possible when r itself is empty
            (true, true) => return Ok((r.linear_map(&zero)?, NeuronCase::SingleBranch)),
        }
    }
    Ok((plus.union(&minus.linear_map(&zero)?)?, NeuronCase::Split))
}

/// Propagates through every layer while leaving `carry` trailing
/// coordinates untouched. The input set has `net.input_dim() + carry`
/// coordinates; the output has `net.output_dim() + carry`.
pub fn propagate_with_carry(
    z: &HybridZonotope,
    net: &NeuralNetwork,
    carry: usize,
    mode: BoundsMode,
) -> Result<(HybridZonotope, PropagationReport)> {
    if z.dim() != net.input_dim() + carry {
        return Err(HzError::shape(
            "network_reach",
            format!(
                "set dimension {} but network expects {}",
                z.dim() - carry.min(z.dim()),
                net.input_dim()
            ),
        ));
    }
    let last = net.layers().len() - 1;
    let mut r = z.clone();
    let mut report = PropagationReport::default();
    for (k, layer) in net.layers().iter().enumerate() {
        let m = layer.bias.len();
        let map = block_diag(&layer.weights, &DMatrix::identity(carry, carry));
        let mut shift = DVector::zeros(m + carry);
        shift.rows_mut(0, m).copy_from(&layer.bias);
        r = r.affine_map(&map, &shift)?;
        if k == last {
            break;
        }
        let n_b_in = r.n_b();
        let bounds = NeuronBounds::of(&r, 0..m, mode)?;
        let mut cases = Vec::with_capacity(m);
        for i in 0..m {
            let (next, case) = step_relu_case(&r, i, bounds.lower[i], bounds.upper[i], bounds.straddle_witnessed[i])?;
            r = next;
            cases.push(case);
        }
        report.layers.push(LayerReport {
            cases,
            n_b_in,
            n_b_out: r.n_b(),
            complexity: r.complexity(),
        });
    }
    Ok((r, report))
}

/// Exact image of one ReLU layer `max(0, W z + v)`.
pub fn layer_reach(z: &HybridZonotope, w: &DMatrix<f64>, v: &DVector<f64>, mode: BoundsMode) -> Result<HybridZonotope> {
    let relu = NeuralNetwork::new(vec![
        Layer {
            weights: w.clone(),
            bias: v.clone(),
        },
        Layer {
            weights: DMatrix::identity(w.nrows(), w.nrows()),
            bias: DVector::zeros(w.nrows()),
        },
    ])?;
    Ok(propagate_with_carry(z, &relu, 0, mode)?.0)
}

/// Exact image `net(Z)`.
pub fn network_reach(z: &HybridZonotope, net: &NeuralNetwork, mode: BoundsMode) -> Result<HybridZonotope> {
    Ok(network_reach_report(z, net, mode)?.0)
}

pub fn network_reach_report(
    z: &HybridZonotope,
    net: &NeuralNetwork,
    mode: BoundsMode,
) -> Result<(HybridZonotope, PropagationReport)> {
    propagate_with_carry(z, net, 0, mode)
}
