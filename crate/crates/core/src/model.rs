//! Concept encoders and a Taylor network trained as one model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Task;
use crate::encoder::{BankGrads, ConceptBank, EncodeCache, EncodeMode, EncoderConfig};
use crate::error::{CatError, Result};
use crate::params::{ParamMut, ParamRef, Parameterized};
use crate::taylornet::{RankConfig, TaylorGrads, TaylorNet};
use crate::tensor::Matrix;

/// Architecture of a [`CatModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub task: Task,
    /// Width of the encoded feature matrix.
    pub input_width: usize,
    /// Concept name and feature columns per group.
    pub groups: Vec<(String, Vec<usize>)>,
    /// One name per feature column (concept names in bypass mode).
    pub feature_names: Vec<String>,
    pub output_dim: usize,
    pub ranks: RankConfig,
    pub encoder: EncoderConfig,
    pub bypass_encoders: bool,
    pub taylor_dropout: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatModel {
    pub task: Task,
    pub bank: ConceptBank,
    pub net: TaylorNet,
    /// Inverted-dropout rate on the concept vector during training.
    pub taylor_dropout: f64,
}

/// Intermediate values of a training forward pass.
pub struct ForwardCache {
    encode: EncodeCache,
    /// Concept vector after dropout, as seen by the Taylor network.
    z: Matrix,
    /// Dropout multipliers on the concept vector, if dropout was applied.
    mask: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatGrads {
    pub bank: BankGrads,
    pub net: TaylorGrads,
}

impl CatModel {
    pub fn new(task: Task, bank: ConceptBank, net: TaylorNet, taylor_dropout: f64) -> Result<Self> {
        let model = Self {
            task,
            bank,
            net,
            taylor_dropout,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn init<R: Rng>(spec: &ModelSpec, rng: &mut R) -> Result<Self> {
        let bank = if spec.bypass_encoders {
            if spec.feature_names.len() != spec.input_width {
                return Err(CatError::Config(format!(
                    "{} feature names for {} columns",
                    spec.feature_names.len(),
                    spec.input_width
                )));
            }
            ConceptBank::bypass(spec.feature_names.clone())
        } else {
            ConceptBank::new(spec.input_width, spec.groups.clone(), &spec.encoder, rng)?
        };
        let net = TaylorNet::init(bank.output_dim(), spec.output_dim, &spec.ranks, rng)?;
        Self::new(spec.task, bank, net, spec.taylor_dropout)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.taylor_dropout) {
            return Err(CatError::Config(format!("taylor dropout {} outside [0, 1)", self.taylor_dropout)));
        }
        self.bank.validate()?;
        self.net.validate()?;
        if self.bank.output_dim() != self.net.input_dim() {
            return Err(CatError::Shape(format!(
                "concept bank produces {} concepts, network expects {}",
                self.bank.output_dim(),
                self.net.input_dim()
            )));
        }
        if self.task == Task::Regression && self.net.output_dim() != 1 {
            return Err(CatError::Config("regression models have exactly one output".into()));
        }
        Ok(())
    }

    pub fn concept_names(&self) -> Vec<String> {
        self.bank.concept_names()
    }

    /// Concept values of each row (evaluation mode).
    pub fn concepts(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.bank.encode::<rand_chacha::ChaCha8Rng>(x, EncodeMode::Eval)?.0)
    }

    /// Raw outputs: the regression value or class logits.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        self.net.forward(&self.concepts(x)?)
    }

    /// Predicted class index per row (largest logit, first on ties).
    pub fn predict_labels(&self, x: &Matrix) -> Result<Vec<usize>> {
        let out = self.predict(x)?;
        Ok((0..out.rows()).map(|r| argmax(out.row(r))).collect())
    }

    /// Training-mode forward pass with dropout drawn from `rng`.
    pub fn forward_train<R: Rng>(&self, x: &Matrix, rng: &mut R) -> Result<(Matrix, ForwardCache)> {
        let (mut z, encode) = self.bank.encode(x, EncodeMode::Train(&mut *rng))?;
        let mask = if self.taylor_dropout > 0.0 {
            let keep = 1.0 - self.taylor_dropout;
            let mut m = Matrix::zeros(z.rows(), z.cols());
            for (mv, zv) in m.as_mut_slice().iter_mut().zip(z.as_mut_slice()) {
                if rng.random::<f64>() < keep {
                    *mv = 1.0 / keep;
                }
                *zv *= *mv;
            }
            Some(m)
        } else {
            None
        };
        let out = self.net.forward(&z)?;
        Ok((out, ForwardCache { encode, z, mask }))
    }

    /// Gradients of `⟨upstream, output⟩` for the pass that produced `cache`.
    pub fn backward(&self, upstream: &Matrix, cache: &ForwardCache) -> Result<CatGrads> {
        let (net, mut dz) = self.net.backward(&cache.z, upstream)?;
        if let Some(mask) = &cache.mask {
            for (g, m) in dz.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                *g *= m;
            }
        }
        let bank = self.bank.backward(&dz, &cache.encode)?;
        Ok(CatGrads { bank, net })
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

impl Parameterized for CatModel {
    fn params(&self) -> Vec<ParamRef<'_>> {
        let mut out = self.bank.params();
        out.extend(self.net.params());
        out
    }

    fn params_mut(&mut self) -> Vec<ParamMut<'_>> {
        let mut out = self.bank.params_mut();
        out.extend(self.net.params_mut());
        out
    }
}

impl Parameterized for CatGrads {
    fn params(&self) -> Vec<ParamRef<'_>> {
        let mut out = self.bank.params();
        out.extend(self.net.params());
        out
    }

    fn params_mut(&mut self) -> Vec<ParamMut<'_>> {
        let mut out = self.bank.params_mut();
        out.extend(self.net.params_mut());
        out
    }
}
