//! Concept encoders: one small MLP per feature group, each producing a single
//! scalar concept value.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CatError, Result};
use crate::params::{ParamMut, ParamRef, Parameterized};
use crate::tensor::Matrix;

pub const DEFAULT_HIDDEN: [usize; 3] = [64, 64, 32];
pub const DEFAULT_NEGATIVE_SLOPE: f64 = 0.01;

/// Architecture shared by every encoder in a bank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub hidden: Vec<usize>,
    pub negative_slope: f64,
    /// Inverted-dropout rate after each hidden activation.
    pub dropout: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            hidden: DEFAULT_HIDDEN.to_vec(),
            negative_slope: DEFAULT_NEGATIVE_SLOPE,
            dropout: 0.0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(CatError::Config(format!("encoder dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.negative_slope > 0.0) {
            return Err(CatError::Config(format!("negative slope {} must be positive", self.negative_slope)));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(CatError::Config("hidden layer widths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out × in`
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Matrix::zeros(outputs, inputs),
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, input: &Matrix) -> Result<Matrix> {
        let mut out = input.matmul(&self.weight.transpose())?;
        for r in 0..out.rows() {
            for (v, b) in out.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(out)
    }
}

/// MLP `group_size → hidden... → 1` with LeakyReLU hidden activations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpEncoder {
    pub layers: Vec<DenseLayer>,
    pub negative_slope: f64,
    pub dropout: f64,
}

impl MlpEncoder {
    pub fn zeros(inputs: usize, config: &EncoderConfig) -> Self {
        let mut widths = vec![inputs];
        widths.extend(&config.hidden);
        widths.push(1);
        Self {
            layers: widths.windows(2).map(|w| DenseLayer::zeros(w[0], w[1])).collect(),
            negative_slope: config.negative_slope,
            dropout: config.dropout,
        }
    }

    /// Weights uniform in `[-a, a]`, `a = sqrt(1 / fan_in)`; biases zero.
    pub fn init<R: Rng>(inputs: usize, config: &EncoderConfig, rng: &mut R) -> Self {
        let mut enc = Self::zeros(inputs, config);
        for layer in &mut enc.layers {
            let a = (1.0 / layer.weight.cols() as f64).sqrt();
            for w in layer.weight.as_mut_slice() {
                *w = rng.random_range(-a..=a);
            }
        }
        enc
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weight.cols()
    }

    fn check(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(CatError::Shape("encoder has no layers".into()));
        }
        for pair in self.layers.windows(2) {
            if pair[0].weight.rows() != pair[1].weight.cols() {
                return Err(CatError::Shape("encoder layer widths do not chain".into()));
            }
        }
        for l in &self.layers {
            if l.bias.len() != l.weight.rows() {
                return Err(CatError::Shape("encoder bias length differs from layer width".into()));
            }
        }
        if self.layers.last().unwrap().weight.rows() != 1 {
            return Err(CatError::Shape("encoder output must be scalar".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) || !(self.negative_slope > 0.0) {
            return Err(CatError::Config("encoder dropout or slope out of range".into()));
        }
        Ok(())
    }

    fn forward<R: Rng>(&self, input: Matrix, mut rng: Option<&mut R>) -> Result<(Vec<f64>, Vec<LayerCache>)> {
        let mut cache = Vec::with_capacity(self.layers.len());
        let mut current = input;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let pre = layer.forward(&current)?;
            if i == last {
                let out = pre.as_slice().to_vec();
                cache.push(LayerCache {
                    input: current,
                    pre,
                    mask: None,
                });
                return Ok((out, cache));
            }
            let mut act = pre.clone();
            let slope = self.negative_slope;
            act.as_mut_slice().iter_mut().for_each(|v| {
                if *v < 0.0 {
                    *v *= slope
                }
            });
            let mask = match rng.as_deref_mut() {
                Some(rng) if self.dropout > 0.0 => {
                    let keep = 1.0 - self.dropout;
                    let scale = 1.0 / keep;
                    let mut m = Matrix::zeros(act.rows(), act.cols());
                    for (mv, av) in m.as_mut_slice().iter_mut().zip(act.as_mut_slice()) {
                        *mv = if rng.random::<f64>() < keep { scale } else { 0.0 };
                        *av *= *mv;
                    }
                    Some(m)
                }
                _ => None,
            };
            cache.push(LayerCache {
                input: std::mem::replace(&mut current, act),
                pre,
                mask,
            });
        }
        unreachable!("loop returns at the output layer")
    }

    fn backward(&self, upstream: &[f64], cache: &[LayerCache]) -> Result<Vec<DenseLayer>> {
        let mut grads: Vec<DenseLayer> = self
            .layers
            .iter()
            .map(|l| DenseLayer::zeros(l.weight.cols(), l.weight.rows()))
            .collect();
        let mut d_pre = Matrix::column(upstream);
        for i in (0..self.layers.len()).rev() {
            let c = &cache[i];
            grads[i].weight = d_pre.transpose().matmul(&c.input)?;
            for r in 0..d_pre.rows() {
                for (b, g) in grads[i].bias.iter_mut().zip(d_pre.row(r)) {
                    *b += g;
                }
            }
            if i == 0 {
                break;
            }
            let mut d_act = d_pre.matmul(&self.layers[i].weight)?;
            let below = &cache[i - 1];
            if let Some(mask) = &below.mask {
                for (d, m) in d_act.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                    *d *= m;
                }
            }
            for (d, p) in d_act.as_mut_slice().iter_mut().zip(below.pre.as_slice()) {
                if *p < 0.0 {
                    *d *= self.negative_slope;
                }
            }
            d_pre = d_act;
        }
        Ok(grads)
    }
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Matrix,
    pre: Matrix,
    mask: Option<Matrix>,
}

/// A named feature group and its encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub name: String,
    /// Indices into the encoded feature matrix.
    pub columns: Vec<usize>,
    pub encoder: MlpEncoder,
}

/// Ordered set of concept encoders.
///
/// In bypass mode there are no encoders and the feature matrix is passed
/// through unchanged, one concept per feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptBank {
    input_width: usize,
    concepts: Vec<Concept>,
    bypass: bool,
    /// Concept names used in bypass mode (the feature column names).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    feature_names: Vec<String>,
}

/// Activations saved by [`ConceptBank::encode`] for the backward pass.
#[derive(Debug, Clone)]
pub struct EncodeCache {
    rows: usize,
    per_concept: Vec<Vec<LayerCache>>,
}

/// Gradients mirroring a [`ConceptBank`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BankGrads {
    pub encoders: Vec<Vec<DenseLayer>>,
}

pub enum EncodeMode<'a, R: Rng> {
    Train(&'a mut R),
    Eval,
}

impl ConceptBank {
    /// Builds encoders for the given groups of feature columns.
    pub fn new<R: Rng>(
        input_width: usize,
        groups: Vec<(String, Vec<usize>)>,
        config: &EncoderConfig,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let concepts = groups
            .into_iter()
            .map(|(name, columns)| {
                let encoder = MlpEncoder::init(columns.len(), config, rng);
                Concept { name, columns, encoder }
            })
            .collect();
        let bank = Self {
            input_width,
            concepts,
            bypass: false,
            feature_names: Vec::new(),
        };
        bank.validate()?;
        Ok(bank)
    }

    pub fn bypass(feature_names: Vec<String>) -> Self {
        Self {
            input_width: feature_names.len(),
            concepts: Vec::new(),
            bypass: true,
            feature_names,
        }
    }

    pub fn is_bypass(&self) -> bool {
        self.bypass
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn concepts_mut(&mut self) -> &mut [Concept] {
        &mut self.concepts
    }

    /// Width of the concept vector.
    pub fn output_dim(&self) -> usize {
        if self.bypass {
            self.input_width
        } else {
            self.concepts.len()
        }
    }

    pub fn concept_names(&self) -> Vec<String> {
        if self.bypass {
            self.feature_names.clone()
        } else {
            self.concepts.iter().map(|c| c.name.clone()).collect()
        }
    }

    pub fn set_dropout(&mut self, rate: f64) {
        for c in &mut self.concepts {
            c.encoder.dropout = rate;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bypass {
            return Ok(());
        }
        if self.concepts.is_empty() {
            return Err(CatError::Config("concept bank has no concepts".into()));
        }
        let mut seen = vec![false; self.input_width];
        let mut names = std::collections::HashSet::new();
        for c in &self.concepts {
            if !names.insert(c.name.as_str()) {
                return Err(CatError::Config(format!("duplicate concept name {:?}", c.name)));
            }
            if c.columns.is_empty() {
                return Err(CatError::Config(format!("concept {:?} has no columns", c.name)));
            }
            for &col in &c.columns {
                if col >= self.input_width {
                    return Err(CatError::Shape(format!(
                        "concept {:?} references column {col}, input width is {}",
                        c.name, self.input_width
                    )));
                }
                if std::mem::replace(&mut seen[col], true) {
                    return Err(CatError::Config(format!("column {col} belongs to more than one concept")));
                }
            }
            if c.encoder.input_width() != c.columns.len() {
                return Err(CatError::Shape(format!("encoder of {:?} has the wrong input width", c.name)));
            }
            c.encoder.check()?;
        }
        Ok(())
    }

    /// Maps feature rows to concept vectors.
    pub fn encode<R: Rng>(&self, x: &Matrix, mode: EncodeMode<'_, R>) -> Result<(Matrix, EncodeCache)> {
        if x.cols() != self.input_width {
            return Err(CatError::Shape(format!(
                "feature rows have width {}, concept bank expects {}",
                x.cols(),
                self.input_width
            )));
        }
        if !x.is_finite() {
            return Err(CatError::NonFinite("feature matrix".into()));
        }
        let n = x.rows();
        if self.bypass {
            return Ok((
                x.clone(),
                EncodeCache {
                    rows: n,
                    per_concept: Vec::new(),
                },
            ));
        }
        let mut rng = match mode {
            EncodeMode::Train(rng) => Some(rng),
            EncodeMode::Eval => None,
        };
        let mut z = Matrix::zeros(n, self.concepts.len());
        let mut per_concept = Vec::with_capacity(self.concepts.len());
        for (m, concept) in self.concepts.iter().enumerate() {
            let mut group = Matrix::zeros(n, concept.columns.len());
            for r in 0..n {
                let src = x.row(r);
                for (dst, &c) in group.row_mut(r).iter_mut().zip(&concept.columns) {
                    *dst = src[c];
                }
            }
            let (values, cache) = concept.encoder.forward(group, rng.as_deref_mut())?;
            for (r, v) in values.into_iter().enumerate() {
                z.set(r, m, v);
            }
            per_concept.push(cache);
        }
        Ok((z, EncodeCache { rows: n, per_concept }))
    }

    /// Gradients of `⟨upstream, z⟩` with respect to all encoder parameters.
    pub fn backward(&self, upstream: &Matrix, cache: &EncodeCache) -> Result<BankGrads> {
        if upstream.shape() != (cache.rows, self.output_dim()) {
            return Err(CatError::Shape(format!(
                "upstream is {:?}, expected ({}, {})",
                upstream.shape(),
                cache.rows,
                self.output_dim()
            )));
        }
        if !self.bypass && cache.per_concept.len() != self.concepts.len() {
            return Err(CatError::Shape("encode cache does not match the concept bank".into()));
        }
        let mut encoders = Vec::with_capacity(self.concepts.len());
        for (m, concept) in self.concepts.iter().enumerate() {
            let column: Vec<f64> = (0..cache.rows).map(|r| upstream.get(r, m)).collect();
            encoders.push(concept.encoder.backward(&column, &cache.per_concept[m])?);
        }
        Ok(BankGrads { encoders })
    }

    pub fn zero_grads(&self) -> BankGrads {
        BankGrads {
            encoders: self
                .concepts
                .iter()
                .map(|c| {
                    c.encoder
                        .layers
                        .iter()
                        .map(|l| DenseLayer::zeros(l.weight.cols(), l.weight.rows()))
                        .collect()
                })
                .collect(),
        }
    }
}

fn layer_params<'a>(prefix: &str, layers: &'a [DenseLayer], out: &mut Vec<ParamRef<'a>>) {
    for (i, l) in layers.iter().enumerate() {
        out.push(ParamRef {
            name: format!("{prefix}.layer{i}.weight"),
            values: l.weight.as_slice(),
        });
        out.push(ParamRef {
            name: format!("{prefix}.layer{i}.bias"),
            values: &l.bias,
        });
    }
}

fn layer_params_mut<'a>(prefix: &str, layers: &'a mut [DenseLayer], out: &mut Vec<ParamMut<'a>>) {
    for (i, l) in layers.iter_mut().enumerate() {
        out.push(ParamMut {
            name: format!("{prefix}.layer{i}.weight"),
            values: l.weight.as_mut_slice(),
            decay: true,
        });
        out.push(ParamMut {
            name: format!("{prefix}.layer{i}.bias"),
            values: &mut l.bias,
            decay: false,
        });
    }
}

impl Parameterized for ConceptBank {
    fn params(&self) -> Vec<ParamRef<'_>> {
        let mut out = Vec::new();
        for c in &self.concepts {
            layer_params(&format!("encoder.{}", c.name), &c.encoder.layers, &mut out);
        }
        out
    }

    fn params_mut(&mut self) -> Vec<ParamMut<'_>> {
        let mut out = Vec::new();
        for c in &mut self.concepts {
            layer_params_mut(&format!("encoder.{}", c.name), &mut c.encoder.layers, &mut out);
        }
        out
    }
}

impl BankGrads {
    pub fn params(&self) -> Vec<ParamRef<'_>> {
        let mut out = Vec::new();
        for (m, layers) in self.encoders.iter().enumerate() {
            layer_params(&format!("encoder.{m}"), layers, &mut out);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<ParamMut<'_>> {
        let mut out = Vec::new();
        for (m, layers) in self.encoders.iter_mut().enumerate() {
            layer_params_mut(&format!("encoder.{m}"), layers, &mut out);
        }
        out
    }
}

/// Number of parameters of one encoder for a group of `inputs` features.
pub fn encoder_param_count(inputs: usize, hidden: &[usize]) -> usize {
    let mut widths = vec![inputs];
    widths.extend(hidden);
    widths.push(1);
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}
