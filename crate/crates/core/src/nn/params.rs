use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GflError, Result};
use crate::graph::{FeatureMode, GraphDataset};
use crate::vectorize::{VectorizationParams, ELEMENTS_PER_CHANNEL};

use super::layers::{BatchNorm, Embedding, Linear};

/// Graph-level readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// Learned filter, persistence, vectorization, classifier.
    Gfl,
    /// Persistence of the normalized degree filter; the filter is not learned.
    PhOnly,
    /// One GIN-ε layer summed over vertices.
    Sum,
    /// Per-vertex MLP summed over vertices, no message passing.
    Baseline,
}

impl Readout {
    pub fn uses_persistence(self) -> bool {
        matches!(self, Readout::Gfl | Readout::PhOnly)
    }
}

impl std::str::FromStr for Readout {
    type Err = GflError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gfl" => Ok(Readout::Gfl),
            "ph_only" => Ok(Readout::PhOnly),
            "sum" => Ok(Readout::Sum),
            "baseline" => Ok(Readout::Baseline),
            other => Err(GflError::Config(format!("unknown readout `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub readout: Readout,
    pub num_classes: usize,
    /// Rows of the degree embedding table: `max_degree + 1`, or 1 for
    /// uninformative features.
    pub degree_vocab: usize,
    /// Rows of the label embedding table, when labels are used.
    pub label_vocab: Option<usize>,
    pub hidden: usize,
    pub classifier_hidden: usize,
    pub elements: usize,
}

impl ModelConfig {
    pub fn for_dataset(d: &GraphDataset, readout: Readout, features: FeatureMode) -> Result<Self> {
        if features == FeatureMode::DegreeAndLabel && !d.has_node_labels() {
            return Err(GflError::Config(format!(
                "dataset {} has no node labels",
                d.name
            )));
        }
        Ok(ModelConfig {
            readout,
            num_classes: d.num_classes().max(2),
            // the degree filter of PhOnly needs the true maximum degree
            degree_vocab: match features {
                FeatureMode::Uninformative if readout != Readout::PhOnly => 1,
                _ => d.max_degree() + 1,
            },
            label_vocab: (features == FeatureMode::DegreeAndLabel)
                .then(|| d.num_node_labels().max(1)),
            hidden: 64,
            classifier_hidden: 64,
            elements: ELEMENTS_PER_CHANNEL,
        })
    }

    /// Largest degree the degree filter of [`Readout::PhOnly`] normalizes by.
    pub fn max_degree(&self) -> usize {
        self.degree_vocab.saturating_sub(1)
    }

    pub fn classifier_inputs(&self) -> usize {
        if self.readout.uses_persistence() {
            3 * self.elements
        } else {
            self.hidden
        }
    }
}

/// Every weight of the model plus batch-norm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub degree_embedding: Embedding,
    pub label_embedding: Option<Embedding>,
    /// GIN-ε self weight `ε`, stored as a length-1 array.
    pub gin_eps: Array1<f64>,
    pub gin_fc1: Linear,
    pub gin_bn: BatchNorm,
    pub gin_fc2: Linear,
    pub filter_fc1: Linear,
    pub filter_bn: BatchNorm,
    pub filter_fc2: Linear,
    pub vectorization: VectorizationParams,
    pub cls_fc1: Linear,
    pub cls_fc2: Linear,
}

/// A named flat view of one tensor.
pub struct TensorMut<'a> {
    pub name: &'static str,
    pub data: &'a mut [f64],
    pub trainable: bool,
}

impl ModelParams {
    /// All weights zero, batch-norm scales zero, running variance one.
    pub fn zeros(config: ModelConfig) -> Self {
        let h = config.hidden;
        ModelParams {
            config,
            degree_embedding: Embedding::zeros(config.degree_vocab, h),
            label_embedding: config.label_vocab.map(|v| Embedding::zeros(v, h)),
            gin_eps: Array1::zeros(1),
            gin_fc1: Linear::zeros(h, h),
            gin_bn: BatchNorm::zeros(h),
            gin_fc2: Linear::zeros(h, h),
            filter_fc1: Linear::zeros(h, h),
            filter_bn: BatchNorm::zeros(h),
            filter_fc2: Linear::zeros(h, 1),
            vectorization: VectorizationParams::zeros(config.elements),
            cls_fc1: Linear::zeros(config.classifier_inputs(), config.classifier_hidden),
            cls_fc2: Linear::zeros(config.classifier_hidden, config.num_classes),
        }
    }

    /// Random initialization from a single seed.
    pub fn init(config: ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden;
        ModelParams {
            config,
            degree_embedding: Embedding::init(config.degree_vocab, h, &mut rng),
            label_embedding: config.label_vocab.map(|v| Embedding::init(v, h, &mut rng)),
            gin_eps: Array1::zeros(1),
            gin_fc1: Linear::init(h, h, &mut rng),
            gin_bn: BatchNorm::new(h),
            gin_fc2: Linear::init(h, h, &mut rng),
            filter_fc1: Linear::init(h, h, &mut rng),
            filter_bn: BatchNorm::new(h),
            filter_fc2: Linear::init(h, 1, &mut rng),
            vectorization: VectorizationParams::init(config.elements, &mut rng),
            cls_fc1: Linear::init(
                config.classifier_inputs(),
                config.classifier_hidden,
                &mut rng,
            ),
            cls_fc2: Linear::init(config.classifier_hidden, config.num_classes, &mut rng),
        }
    }

    /// A zero-filled container with the same shapes, used for gradients.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config)
    }

    /// Every tensor, trainable or not, in checkpoint order.
    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        fn t<'a, D: ndarray::Dimension>(
            name: &'static str,
            a: &'a mut ndarray::Array<f64, D>,
            trainable: bool,
        ) -> TensorMut<'a> {
            TensorMut {
                name,
                data: a.as_slice_mut().expect("standard layout"),
                trainable,
            }
        }
        let mut out = vec![t(
            "embedding.degree",
            &mut self.degree_embedding.table,
            true,
        )];
        if let Some(e) = &mut self.label_embedding {
            out.push(t("embedding.label", &mut e.table, true));
        }
        let [fin, ess0, ess1] = &mut self.vectorization.channels;
        out.extend([
            t("gin.eps", &mut self.gin_eps, true),
            t("gin.fc1.weight", &mut self.gin_fc1.weight, true),
            t("gin.fc1.bias", &mut self.gin_fc1.bias, true),
            t("gin.bn.gamma", &mut self.gin_bn.gamma, true),
            t("gin.bn.beta", &mut self.gin_bn.beta, true),
            t("gin.bn.running_mean", &mut self.gin_bn.running_mean, false),
            t("gin.bn.running_var", &mut self.gin_bn.running_var, false),
            t("gin.fc2.weight", &mut self.gin_fc2.weight, true),
            t("gin.fc2.bias", &mut self.gin_fc2.bias, true),
            t("filter.fc1.weight", &mut self.filter_fc1.weight, true),
            t("filter.fc1.bias", &mut self.filter_fc1.bias, true),
            t("filter.bn.gamma", &mut self.filter_bn.gamma, true),
            t("filter.bn.beta", &mut self.filter_bn.beta, true),
            t(
                "filter.bn.running_mean",
                &mut self.filter_bn.running_mean,
                false,
            ),
            t(
                "filter.bn.running_var",
                &mut self.filter_bn.running_var,
                false,
            ),
            t("filter.fc2.weight", &mut self.filter_fc2.weight, true),
            t("filter.fc2.bias", &mut self.filter_fc2.bias, true),
            t("vectorization.finite0.centers", &mut fin.centers, true),
            t("vectorization.finite0.radii", &mut fin.radii, true),
            t("vectorization.essential0.centers", &mut ess0.centers, true),
            t("vectorization.essential0.radii", &mut ess0.radii, true),
            t("vectorization.essential1.centers", &mut ess1.centers, true),
            t("vectorization.essential1.radii", &mut ess1.radii, true),
            t("classifier.fc1.weight", &mut self.cls_fc1.weight, true),
            t("classifier.fc1.bias", &mut self.cls_fc1.bias, true),
            t("classifier.fc2.weight", &mut self.cls_fc2.weight, true),
            t("classifier.fc2.bias", &mut self.cls_fc2.bias, true),
        ]);
        out
    }

    /// Trainable tensors only, in checkpoint order.
    pub fn trainable_mut(&mut self) -> Vec<TensorMut<'_>> {
        self.tensors_mut()
            .into_iter()
            .filter(|t| t.trainable)
            .collect()
    }

    /// Flat copy of all trainable values.
    pub fn trainable_values(&mut self) -> Vec<f64> {
        self.trainable_mut()
            .into_iter()
            .flat_map(|t| t.data.to_vec())
            .collect()
    }

    pub fn num_trainable(&mut self) -> usize {
        self.trainable_mut().iter().map(|t| t.data.len()).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.trainable_mut() {
            t.data.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn all_finite(&mut self) -> bool {
        self.tensors_mut()
            .iter()
            .all(|t| t.data.iter().all(|x| x.is_finite()))
    }
}
