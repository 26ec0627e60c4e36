//! Cross-validated training.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::KeyValues;
use crate::error::{GflError, Result};
use crate::graph::{initial_features, stratified_folds, FeatureMode, GraphDataset, NodeFeatures};
use crate::nn::optim::{learning_rate, Adam, AdamConfig};
use crate::nn::{
    forward_batch, loss_and_gradients, GraphInput, Mode, ModelConfig, ModelParams, Readout,
};
use crate::persistence::write_barcode_text;
use crate::synth::{generate_synthetic, SynthSpec};
use crate::tu::load_tu_dir;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    /// Directory in TU format.
    Tu(PathBuf),
    Synthetic(SynthSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub source: DataSource,
    pub readout: Readout,
    pub features: FeatureMode,
    pub epochs: usize,
    pub lr: f64,
    pub lr_halving_period: usize,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub folds: usize,
    pub seed: u64,
    pub hidden: usize,
    pub classifier_hidden: usize,
    pub elements: usize,
    /// Run on one thread. Results do not depend on it; it only rules out
    /// scheduling effects when timing or debugging.
    pub deterministic: bool,
}

const KEYS: &[&str] = &[
    "dataset",
    "readout",
    "features",
    "epochs",
    "lr",
    "lr_halving_period",
    "weight_decay",
    "batch_size",
    "folds",
    "seed",
    "hidden",
    "classifier_hidden",
    "elements",
    "deterministic",
];

impl TrainConfig {
    /// 1-GIN(GFL) with degree features and the standard schedule.
    pub fn new(source: DataSource) -> Self {
        TrainConfig {
            source,
            readout: Readout::Gfl,
            features: FeatureMode::Degree,
            epochs: 100,
            lr: 0.01,
            lr_halving_period: 20,
            weight_decay: 1e-6,
            batch_size: 64,
            folds: 10,
            seed: 0,
            hidden: 64,
            classifier_hidden: 64,
            elements: crate::vectorize::ELEMENTS_PER_CHANNEL,
            deterministic: false,
        }
    }

    /// Either `dataset = <dir>` (relative to `base_dir`) or `synth.<key>`
    /// entries describing a synthetic dataset.
    pub fn from_kv(kv: &KeyValues, base_dir: &Path) -> Result<Self> {
        let synth = kv.with_prefix("synth.");
        let unknown = kv
            .keys()
            .find(|k| !k.starts_with("synth.") && !KEYS.contains(k));
        if let Some(k) = unknown {
            return Err(GflError::Config(format!("unknown key `{k}`")));
        }
        let source = match (kv.get_str("dataset"), synth.keys().next()) {
            (Some(_), Some(_)) => {
                return Err(GflError::Config(
                    "give either `dataset` or `synth.*`, not both".into(),
                ))
            }
            (Some(d), None) => DataSource::Tu(base_dir.join(d)),
            (None, Some(_)) => DataSource::Synthetic(SynthSpec::from_kv(&synth)?),
            (None, None) => return Err(GflError::Config("no dataset given".into())),
        };
        let d = TrainConfig::new(source);
        let cfg = TrainConfig {
            readout: kv.get_or("readout", d.readout)?,
            features: kv.get_or("features", d.features)?,
            epochs: kv.get_or("epochs", d.epochs)?,
            lr: kv.get_or("lr", d.lr)?,
            lr_halving_period: kv.get_or("lr_halving_period", d.lr_halving_period)?,
            weight_decay: kv.get_or("weight_decay", d.weight_decay)?,
            batch_size: kv.get_or("batch_size", d.batch_size)?,
            folds: kv.get_or("folds", d.folds)?,
            seed: kv.get_or("seed", d.seed)?,
            hidden: kv.get_or("hidden", d.hidden)?,
            classifier_hidden: kv.get_or("classifier_hidden", d.classifier_hidden)?,
            elements: kv.get_or("elements", d.elements)?,
            deterministic: kv.get_or("deterministic", d.deterministic)?,
            ..d
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GflError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_kv(&KeyValues::parse(&text)?, base)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(GflError::Config(msg.into()));
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.batch_size < 1 || self.hidden < 1 || self.classifier_hidden < 1 || self.elements < 1
        {
            return bad("batch_size and layer sizes must be positive");
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be non-negative");
        }
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<GraphDataset> {
        match &self.source {
            DataSource::Tu(dir) => load_tu_dir(dir),
            DataSource::Synthetic(spec) => generate_synthetic(spec),
        }
    }

    pub fn model_config(&self, d: &GraphDataset) -> Result<ModelConfig> {
        Ok(ModelConfig {
            hidden: self.hidden,
            classifier_hidden: self.classifier_hidden,
            elements: self.elements,
            ..ModelConfig::for_dataset(d, self.readout, self.features)?
        })
    }
}

/// A dataset with its node features, ready for training.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: GraphDataset,
    pub features: Vec<NodeFeatures>,
}

impl Prepared {
    pub fn new(dataset: GraphDataset, mode: FeatureMode) -> Result<Self> {
        let features = dataset
            .graphs()
            .iter()
            .map(|g| initial_features(g, mode))
            .collect::<Result<_>>()?;
        Ok(Prepared { dataset, features })
    }

    pub fn inputs(&self, indices: &[usize]) -> Vec<GraphInput<'_>> {
        indices
            .iter()
            .map(|&i| GraphInput {
                graph: &self.dataset.graphs()[i],
                features: &self.features[i],
            })
            .collect()
    }

    pub fn labels(&self, indices: &[usize]) -> Vec<usize> {
        indices
            .iter()
            .map(|&i| self.dataset.graphs()[i].label())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: usize,
    /// Test accuracy of the final-epoch model.
    pub accuracy: f64,
    /// Mean training loss of every epoch.
    pub loss_curve: Vec<f64>,
    pub seconds: f64,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub dataset: String,
    pub readout: Readout,
    pub seed: u64,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Population standard deviation over folds.
    pub std_accuracy: f64,
    pub loss_curves: Vec<Vec<f64>>,
    pub fold_seconds: Vec<f64>,
    pub total_seconds: f64,
}

impl RunMetrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

fn fold_rng(seed: u64, fold: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * fold as u64 + stream);
    rng
}

/// Fraction of `indices` whose argmax logit equals the label.
pub fn evaluate(
    params: &ModelParams,
    data: &Prepared,
    indices: &[usize],
    batch_size: usize,
) -> Result<f64> {
    if indices.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for chunk in indices.chunks(batch_size.max(1)) {
        let out = forward_batch(&data.inputs(chunk), params, Mode::Eval)?;
        for (row, label) in out.logits.rows().into_iter().zip(data.labels(chunk)) {
            let pred = row
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, &x)| {
                    if x > best.1 {
                        (k, x)
                    } else {
                        best
                    }
                })
                .0;
            correct += usize::from(pred == label);
        }
    }
    Ok(correct as f64 / indices.len() as f64)
}

/// Trains on every fold except `fold` and evaluates on `fold`.
pub fn train_fold(
    cfg: &TrainConfig,
    data: &Prepared,
    folds: &[Vec<usize>],
    fold: usize,
) -> Result<FoldOutcome> {
    let start = Instant::now();
    let test = folds
        .get(fold)
        .ok_or_else(|| GflError::Index(format!("fold {fold} of {}", folds.len())))?;
    let mut train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != fold)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    train.sort_unstable();

    let model_config = cfg.model_config(&data.dataset)?;
    let mut params = ModelParams::init(model_config, fold_rng(cfg.seed, fold, 0).random());
    let mut adam = Adam::new(
        AdamConfig {
            weight_decay: cfg.weight_decay,
            ..AdamConfig::default()
        },
        &mut params,
    );
    let mut rng = fold_rng(cfg.seed, fold, 1);
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = learning_rate(cfg.lr, cfg.lr_halving_period, epoch);
        train.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in train.chunks(cfg.batch_size) {
            let labels = data.labels(batch);
            let (loss, mut grads, bn) =
                loss_and_gradients(&data.inputs(batch), &labels, &params, Mode::Train)?;
            if !loss.is_finite() {
                return Err(GflError::Divergence { fold, epoch, loss });
            }
            total += loss * batch.len() as f64;
            params.apply_bn_updates(&bn);
            adam.step(&mut params, &mut grads, lr);
        }
        loss_curve.push(total / train.len().max(1) as f64);
    }
    let accuracy = evaluate(&params, data, test, cfg.batch_size)?;
    Ok(FoldOutcome {
        fold,
        accuracy,
        loss_curve,
        seconds: start.elapsed().as_secs_f64(),
        params,
    })
}

/// Cross-validation on an already loaded dataset. `on_fold` sees each
/// fold's outcome and test indices, in fold order.
pub fn run_cv_on(
    cfg: &TrainConfig,
    data: &Prepared,
    mut on_fold: impl FnMut(&FoldOutcome, &[usize]) -> Result<()>,
) -> Result<RunMetrics> {
    cfg.validate()?;
    let start = Instant::now();
    let folds = stratified_folds(&data.dataset, cfg.folds, cfg.seed)?;
    let run = || -> Result<Vec<FoldOutcome>> {
        (0..cfg.folds)
            .into_par_iter()
            .map(|k| train_fold(cfg, data, &folds, k))
            .collect()
    };
    let outcomes = if cfg.deterministic {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| GflError::Config(e.to_string()))?
            .install(run)?
    } else {
        run()?
    };
    for (o, test) in outcomes.iter().zip(&folds) {
        on_fold(o, test)?;
    }
    let accs: Vec<f64> = outcomes.iter().map(|o| o.accuracy).collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / accs.len() as f64;
    Ok(RunMetrics {
        dataset: data.dataset.name.clone(),
        readout: cfg.readout,
        seed: cfg.seed,
        fold_accuracies: accs,
        mean_accuracy: mean,
        std_accuracy: var.sqrt(),
        loss_curves: outcomes.iter().map(|o| o.loss_curve.clone()).collect(),
        fold_seconds: outcomes.iter().map(|o| o.seconds).collect(),
        total_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_cv(cfg: &TrainConfig) -> Result<RunMetrics> {
    let data = Prepared::new(cfg.load_dataset()?, cfg.features)?;
    run_cv_on(cfg, &data, |_, _| Ok(()))
}

/// Writes `graph_<index>.txt` with the processed barcodes of each listed
/// graph under `params`.
pub fn dump_barcodes(
    params: &ModelParams,
    data: &Prepared,
    indices: &[usize],
    dir: &Path,
) -> Result<()> {
    if !params.config.readout.uses_persistence() {
        return Err(GflError::Config(format!(
            "readout {:?} computes no barcodes",
            params.config.readout
        )));
    }
    std::fs::create_dir_all(dir).map_err(|e| GflError::io(dir, e))?;
    for chunk in indices.chunks(64) {
        let out = forward_batch(&data.inputs(chunk), params, Mode::Eval)?;
        for (&i, bs) in chunk.iter().zip(out.tape.barcodes()) {
            let path = dir.join(format!("graph_{i}.txt"));
            std::fs::write(&path, write_barcode_text(bs)).map_err(|e| GflError::io(&path, e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(readout: Readout) -> TrainConfig {
        TrainConfig {
            readout,
            epochs: 2,
            folds: 3,
            hidden: 8,
            classifier_hidden: 8,
            elements: 6,
            batch_size: 16,
            ..TrainConfig::new(DataSource::Synthetic(SynthSpec::trees_vs_cycles(2, 12, 1)))
        }
    }

    #[test]
    fn config_from_key_values() {
        let kv = KeyValues::parse(
            "synth.families = tree, cycles:2\nsynth.n_per_class = 20\nreadout = sum\nepochs = 3\nfeatures = uninformative",
        )
        .unwrap();
        let cfg = TrainConfig::from_kv(&kv, Path::new(".")).unwrap();
        assert_eq!(cfg.readout, Readout::Sum);
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.features, FeatureMode::Uninformative);
        assert_eq!(
            (cfg.lr, cfg.lr_halving_period, cfg.batch_size, cfg.folds),
            (0.01, 20, 64, 10)
        );
        match cfg.source {
            DataSource::Synthetic(s) => assert_eq!(s.n_per_class, 20),
            other => panic!("{other:?}"),
        }
        let tu = KeyValues::parse("dataset = data/IMDB-BINARY").unwrap();
        let cfg = TrainConfig::from_kv(&tu, Path::new("/cfg")).unwrap();
        assert_eq!(
            cfg.source,
            DataSource::Tu(PathBuf::from("/cfg/data/IMDB-BINARY"))
        );
    }

    #[test]
    fn config_validation() {
        let parse = |s: &str| TrainConfig::from_kv(&KeyValues::parse(s).unwrap(), Path::new("."));
        assert!(parse("dataset = x\nepochs = 0").is_err());
        assert!(parse("dataset = x\nlr = 0").is_err());
        assert!(parse("dataset = x\nfolds = 1").is_err());
        assert!(parse("dataset = x\nbogus = 1").is_err());
        assert!(parse("epochs = 3").is_err());
        assert!(parse("dataset = x\nsynth.families = tree").is_err());
    }

    #[test]
    fn one_epoch_is_one_pass_over_the_batches() {
        let cfg = TrainConfig {
            epochs: 1,
            ..quick(Readout::Gfl)
        };
        let data = Prepared::new(cfg.load_dataset().unwrap(), cfg.features).unwrap();
        let folds = stratified_folds(&data.dataset, 3, 0).unwrap();
        let o = train_fold(&cfg, &data, &folds, 0).unwrap();
        assert_eq!(o.loss_curve.len(), 1);
        assert!((0.0..=1.0).contains(&o.accuracy));
    }

    #[test]
    fn same_seed_same_metrics() {
        let cfg = quick(Readout::Gfl);
        let strip = |mut m: RunMetrics| {
            m.fold_seconds.clear();
            m.total_seconds = 0.0;
            m
        };
        let a = strip(run_cv(&cfg).unwrap());
        let b = strip(
            run_cv(&TrainConfig {
                deterministic: true,
                ..cfg.clone()
            })
            .unwrap(),
        );
        assert_eq!(a, b);
        assert_eq!(a.fold_accuracies.len(), 3);
        let json: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(json["fold_accuracies"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn divergence_is_reported() {
        let cfg = TrainConfig {
            lr: 1e300,
            epochs: 5,
            ..quick(Readout::Sum)
        };
        let data = Prepared::new(cfg.load_dataset().unwrap(), cfg.features).unwrap();
        let folds = stratified_folds(&data.dataset, 3, 0).unwrap();
        match train_fold(&cfg, &data, &folds, 0) {
            Err(GflError::Divergence { fold: 0, .. }) => {}
            other => panic!("{:?}", other.map(|o| o.loss_curve)),
        }
    }
}
