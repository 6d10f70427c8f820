//! RVFL network construction, training and evaluation.
//!
//! A network computes
//!
//! ```text
//! f(x) = β₀ + Σ_j β_j x_j + Σ_i β_{n+i} σ(a_iᵀx + b_i)
//! ```
//!
//! where the bias term and the direct links (`Σ_j β_j x_j`) are optional and
//! the hidden parameters `a_i`, `b_i` are random and fixed. Training solves
//! for `β` in closed form over the design `[1 X H]`.

mod persist;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use persist::SavedModel;

use crate::error::{Error, Result};
use crate::numkernel::{dot, solve_least_squares, Matrix};
use crate::synthdata::Dataset;

/// Presence of direct links (`dl`) and output bias (`b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Configuration {
    WithLinksWithBias,
    WithLinksNoBias,
    NoLinksWithBias,
    NoLinksNoBias,
}

impl Configuration {
    pub const ALL: [Configuration; 4] = [
        Configuration::WithLinksWithBias,
        Configuration::WithLinksNoBias,
        Configuration::NoLinksWithBias,
        Configuration::NoLinksNoBias,
    ];

    /// The reference configuration other variants are compared against.
    pub const BASELINE: Configuration = Configuration::NoLinksNoBias;

    pub fn direct_links(self) -> bool {
        matches!(self, Configuration::WithLinksWithBias | Configuration::WithLinksNoBias)
    }

    pub fn output_bias(self) -> bool {
        matches!(self, Configuration::WithLinksWithBias | Configuration::NoLinksWithBias)
    }

    pub fn from_flags(direct_links: bool, output_bias: bool) -> Self {
        match (direct_links, output_bias) {
            (true, true) => Configuration::WithLinksWithBias,
            (true, false) => Configuration::WithLinksNoBias,
            (false, true) => Configuration::NoLinksWithBias,
            (false, false) => Configuration::NoLinksNoBias,
        }
    }

    pub fn index(self) -> u64 {
        self as u64
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Configuration::WithLinksWithBias => "+dl+b",
            Configuration::WithLinksNoBias => "+dl-b",
            Configuration::NoLinksWithBias => "-dl+b",
            Configuration::NoLinksNoBias => "-dl-b",
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        // Accept typographic minus signs and dashes as written in tables.
        let norm: String = s
            .trim()
            .chars()
            .map(|c| match c {
                '\u{2212}' | '\u{2013}' | '\u{2014}' => '-',
                c => c.to_ascii_lowercase(),
            })
            .collect();
        let norm = norm.replace("--", "-");
        Configuration::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .ok_or_else(|| Error::param(format!("unknown configuration {s:?}")))
    }
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Structural description of a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Topology {
    /// Number of inputs `n`.
    pub inputs: usize,
    /// Number of hidden nodes `m`.
    pub hidden: usize,
    pub direct_links: bool,
    pub output_bias: bool,
}

impl Topology {
    pub fn new(inputs: usize, hidden: usize, direct_links: bool, output_bias: bool) -> Result<Self> {
        if inputs == 0 || hidden == 0 {
            return Err(Error::param(format!(
                "topology needs n >= 1 and m >= 1, got n = {inputs}, m = {hidden}"
            )));
        }
        Ok(Topology { inputs, hidden, direct_links, output_bias })
    }

    pub fn from_configuration(inputs: usize, hidden: usize, config: Configuration) -> Result<Self> {
        Topology::new(inputs, hidden, config.direct_links(), config.output_bias())
    }

    pub fn configuration(&self) -> Configuration {
        Configuration::from_flags(self.direct_links, self.output_bias)
    }

    /// Width `p` of the design matrix `[1 X H]`.
    pub fn design_width(&self) -> usize {
        self.output_bias as usize + if self.direct_links { self.inputs } else { 0 } + self.hidden
    }

    pub fn with_hidden(&self, hidden: usize) -> Result<Self> {
        Topology::new(self.inputs, hidden, self.direct_links, self.output_bias)
    }

    fn linear_offset(&self) -> usize {
        self.output_bias as usize
    }

    fn hidden_offset(&self) -> usize {
        self.linear_offset() + if self.direct_links { self.inputs } else { 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Gs,
    Gu,
    GAlpha,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [StrategyKind::Gs, StrategyKind::Gu, StrategyKind::GAlpha];

    pub fn index(self) -> u64 {
        self as u64
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Gs => "Gs",
            StrategyKind::Gu => "Gu",
            StrategyKind::GAlpha => "Galpha",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "gs" => Ok(StrategyKind::Gs),
            "gu" => Ok(StrategyKind::Gu),
            "galpha" | "gα" | "ga" => Ok(StrategyKind::GAlpha),
            other => Err(Error::param(format!("unknown strategy {other:?}"))),
        }
    }
}

impl Serialize for StrategyKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for StrategyKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How hidden weights and biases are generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum InitStrategy {
    /// Weights and biases from `U(−u, u)`.
    Gs { u: f64 },
    /// Weights from `U(−u, u)`, biases anchoring each node at a training point.
    Gu { u: f64 },
    /// Weights `±4·tan|α|` with `|α| ~ U(alpha_min, alpha_max)` in degrees,
    /// biases anchored as in `Gu`.
    #[serde(rename = "Galpha")]
    GAlpha { alpha_min: f64, alpha_max: f64 },
}

impl InitStrategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            InitStrategy::Gs { .. } => StrategyKind::Gs,
            InitStrategy::Gu { .. } => StrategyKind::Gu,
            InitStrategy::GAlpha { .. } => StrategyKind::GAlpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InitStrategy::Gs { u } | InitStrategy::Gu { u } => check_bound(u),
            InitStrategy::GAlpha { alpha_min, alpha_max } => check_angles(alpha_min, alpha_max),
        }
    }
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitStrategy::Gs { u } => write!(f, "Gs(u={u})"),
            InitStrategy::Gu { u } => write!(f, "Gu(u={u})"),
            InitStrategy::GAlpha { alpha_min, alpha_max } => {
                write!(f, "Galpha({alpha_min}..{alpha_max} deg)")
            }
        }
    }
}

fn check_bound(u: f64) -> Result<()> {
    if u > 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("interval bound u must be positive, got {u}")))
    }
}

fn check_angles(alpha_min: f64, alpha_max: f64) -> Result<()> {
    if (0.0..90.0).contains(&alpha_min) && alpha_max > alpha_min && alpha_max <= 90.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "angle range must satisfy 0 <= min < max <= 90 degrees, got [{alpha_min}, {alpha_max}]"
        )))
    }
}

/// The random, untrained part of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    /// `m × n`; row `i` is node `i`'s weight vector.
    pub weights: Matrix,
    pub biases: Vec<f64>,
    /// Training-row index each node was anchored at (`Gu`, `Gα` only).
    pub anchors: Option<Vec<usize>>,
}

impl HiddenLayer {
    pub fn nodes(&self) -> usize {
        self.weights.rows()
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    /// The first `m` nodes. Generators draw node by node, so this equals the
    /// layer the same stream would produce for `m` nodes.
    pub fn truncated(&self, m: usize) -> Result<HiddenLayer> {
        if m == 0 || m > self.nodes() {
            return Err(Error::param(format!("cannot keep {m} of {} nodes", self.nodes())));
        }
        let n = self.inputs();
        Ok(HiddenLayer {
            weights: Matrix::new(m, n, self.weights.as_slice()[..m * n].to_vec())?,
            biases: self.biases[..m].to_vec(),
            anchors: self.anchors.as_ref().map(|a| a[..m].to_vec()),
        })
    }
}

/// Bias placing node `a`'s sigmoid midpoint at `anchor`.
#[inline]
pub(crate) fn anchor_bias(weights: &[f64], anchor: &[f64]) -> f64 {
    -dot(weights, anchor)
}

/// Weight for a slope angle given in degrees.
#[inline]
pub(crate) fn angle_to_weight(degrees: f64, sign: f64) -> f64 {
    sign * 4.0 * degrees.to_radians().tan()
}

pub fn init_hidden_gs<R: Rng + ?Sized>(topology: &Topology, u: f64, rng: &mut R) -> Result<HiddenLayer> {
    check_bound(u)?;
    let (m, n) = (topology.hidden, topology.inputs);
    let mut weights = Vec::with_capacity(m * n);
    let mut biases = Vec::with_capacity(m);
    for _ in 0..m {
        for _ in 0..n {
            weights.push(rng.random_range(-u..=u));
        }
        biases.push(rng.random_range(-u..=u));
    }
    Ok(HiddenLayer { weights: Matrix::new(m, n, weights)?, biases, anchors: None })
}

fn check_anchor_source(topology: &Topology, x: &Matrix) -> Result<()> {
    if x.cols() != topology.inputs {
        return Err(Error::input(format!(
            "anchor data has {} columns, topology expects {}",
            x.cols(),
            topology.inputs
        )));
    }
    Ok(())
}

fn anchored<R: Rng + ?Sized>(
    topology: &Topology,
    x: &Matrix,
    rng: &mut R,
    mut weight: impl FnMut(&mut R) -> f64,
) -> Result<HiddenLayer> {
    let (m, n) = (topology.hidden, topology.inputs);
    let mut weights = Vec::with_capacity(m * n);
    let mut biases = Vec::with_capacity(m);
    let mut anchors = Vec::with_capacity(m);
    for _ in 0..m {
        let start = weights.len();
        for _ in 0..n {
            weights.push(weight(rng));
        }
        let anchor = rng.random_range(0..x.rows());
        biases.push(anchor_bias(&weights[start..], x.row(anchor)));
        anchors.push(anchor);
    }
    Ok(HiddenLayer { weights: Matrix::new(m, n, weights)?, biases, anchors: Some(anchors) })
}

pub fn init_hidden_gu<R: Rng + ?Sized>(
    topology: &Topology,
    u: f64,
    x: &Matrix,
    rng: &mut R,
) -> Result<HiddenLayer> {
    check_bound(u)?;
    check_anchor_source(topology, x)?;
    anchored(topology, x, rng, |r| r.random_range(-u..=u))
}

pub fn init_hidden_galpha<R: Rng + ?Sized>(
    topology: &Topology,
    alpha_min: f64,
    alpha_max: f64,
    x: &Matrix,
    rng: &mut R,
) -> Result<HiddenLayer> {
    check_angles(alpha_min, alpha_max)?;
    check_anchor_source(topology, x)?;
    let span = alpha_max - alpha_min;
    anchored(topology, x, rng, |r| {
        // A draw of exactly 90 degrees would give an infinite weight.
        let angle = loop {
            let a = alpha_min + span * r.random::<f64>();
            if a < 90.0 {
                break a;
            }
        };
        let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
        angle_to_weight(angle, sign)
    })
}

/// Draws a hidden layer with the given strategy. `x` supplies anchor points
/// for `Gu` and `Gα` and is ignored by `Gs`.
pub fn init_hidden<R: Rng + ?Sized>(
    topology: &Topology,
    strategy: &InitStrategy,
    x: &Matrix,
    rng: &mut R,
) -> Result<HiddenLayer> {
    match *strategy {
        InitStrategy::Gs { u } => init_hidden_gs(topology, u, rng),
        InitStrategy::Gu { u } => init_hidden_gu(topology, u, x, rng),
        InitStrategy::GAlpha { alpha_min, alpha_max } => {
            init_hidden_galpha(topology, alpha_min, alpha_max, x, rng)
        }
    }
}

/// Logistic sigmoid, branching on the sign so `exp` never overflows.
#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `H[l, i] = σ(a_iᵀ x_l + b_i)`.
pub fn hidden_output(hidden: &HiddenLayer, x: &Matrix) -> Result<Matrix> {
    if x.cols() != hidden.inputs() {
        return Err(Error::input(format!(
            "input has {} columns, hidden layer expects {}",
            x.cols(),
            hidden.inputs()
        )));
    }
    let m = hidden.nodes();
    let mut out = Matrix::zeros(x.rows(), m);
    for (l, xl) in x.row_iter().enumerate() {
        let dst = out.row_mut(l);
        for (i, (a, &b)) in hidden.weights.row_iter().zip(&hidden.biases).enumerate() {
            dst[i] = sigmoid(dot(a, xl) + b);
        }
    }
    Ok(out)
}

/// `[1 X H]` with the ones column and `X` present only when the topology says so.
pub fn assemble_design(topology: &Topology, x: &Matrix, h: &Matrix) -> Result<Matrix> {
    if x.rows() != h.rows() {
        return Err(Error::input(format!(
            "input has {} rows but hidden output has {}",
            x.rows(),
            h.rows()
        )));
    }
    if topology.direct_links && x.cols() != topology.inputs {
        return Err(Error::input(format!(
            "input has {} columns, topology expects {}",
            x.cols(),
            topology.inputs
        )));
    }
    if h.cols() != topology.hidden {
        return Err(Error::input(format!(
            "hidden output has {} columns, topology expects {}",
            h.cols(),
            topology.hidden
        )));
    }
    let p = topology.design_width();
    let mut data = Vec::with_capacity(x.rows() * p);
    for l in 0..x.rows() {
        if topology.output_bias {
            data.push(1.0);
        }
        if topology.direct_links {
            data.extend_from_slice(x.row(l));
        }
        data.extend_from_slice(h.row(l));
    }
    Matrix::new(x.rows(), p, data)
}

/// A network with fitted output weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub topology: Topology,
    pub strategy: InitStrategy,
    pub hidden: HiddenLayer,
    /// `[β₀ | β₁..β_n | β_{n+1}..β_{n+m}]`, each block present per topology.
    pub beta: Vec<f64>,
}

impl TrainedModel {
    pub fn new(
        topology: Topology,
        strategy: InitStrategy,
        hidden: HiddenLayer,
        beta: Vec<f64>,
    ) -> Result<Self> {
        if hidden.nodes() != topology.hidden || hidden.inputs() != topology.inputs {
            return Err(Error::input(format!(
                "hidden layer is {}x{}, topology expects {}x{}",
                hidden.nodes(),
                hidden.inputs(),
                topology.hidden,
                topology.inputs
            )));
        }
        if hidden.biases.len() != topology.hidden {
            return Err(Error::input("bias count does not match hidden node count"));
        }
        if beta.len() != topology.design_width() {
            return Err(Error::input(format!(
                "beta has length {}, design width is {}",
                beta.len(),
                topology.design_width()
            )));
        }
        Ok(TrainedModel { topology, strategy, hidden, beta })
    }

    pub fn bias_weight(&self) -> Option<f64> {
        self.topology.output_bias.then(|| self.beta[0])
    }

    pub fn linear_weights(&self) -> Option<&[f64]> {
        let start = self.topology.linear_offset();
        self.topology
            .direct_links
            .then(|| &self.beta[start..start + self.topology.inputs])
    }

    pub fn hidden_weights(&self) -> &[f64] {
        &self.beta[self.topology.hidden_offset()..]
    }
}

/// Draws hidden parameters, then fits `β` by minimum-norm least squares.
pub fn train<R: Rng + ?Sized>(
    topology: &Topology,
    strategy: &InitStrategy,
    data: &Dataset,
    rng: &mut R,
) -> Result<TrainedModel> {
    if data.x.cols() != topology.inputs {
        return Err(Error::input(format!(
            "dataset has {} inputs, topology expects {}",
            data.x.cols(),
            topology.inputs
        )));
    }
    let hidden = init_hidden(topology, strategy, &data.x, rng)?;
    let h = hidden_output(&hidden, &data.x)?;
    let design = assemble_design(topology, &data.x, &h)?;
    let beta = solve_least_squares(&design, &data.y)?;
    TrainedModel::new(*topology, *strategy, hidden, beta)
}

pub fn predict(model: &TrainedModel, x: &Matrix) -> Result<Vec<f64>> {
    let parts = decompose(model, x)?;
    Ok(parts.total())
}

/// The three additive components of a network's output.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub linear: Vec<f64>,
    pub nonlinear: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Decomposition {
    pub fn total(&self) -> Vec<f64> {
        self.linear
            .iter()
            .zip(&self.nonlinear)
            .zip(&self.bias)
            .map(|((l, n), b)| b + l + n)
            .collect()
    }
}

pub fn decompose(model: &TrainedModel, x: &Matrix) -> Result<Decomposition> {
    let topo = &model.topology;
    if x.cols() != topo.inputs {
        return Err(Error::input(format!(
            "input has {} columns, model expects {}",
            x.cols(),
            topo.inputs
        )));
    }
    let h = hidden_output(&model.hidden, x)?;
    let beta_h = model.hidden_weights();
    let nonlinear = h.row_iter().map(|row| dot(row, beta_h)).collect();
    let linear = match model.linear_weights() {
        Some(w) => x.row_iter().map(|row| dot(row, w)).collect(),
        None => vec![0.0; x.rows()],
    };
    let bias = vec![model.bias_weight().unwrap_or(0.0); x.rows()];
    Ok(Decomposition { linear, nonlinear, bias })
}
