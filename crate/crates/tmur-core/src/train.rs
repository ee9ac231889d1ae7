//! Deterministic training: stratified splitting, Adam with cosine decay,
//! and the batch loop tying the model to its objective.
//!
//! Every random choice (split membership, weight init, epoch shuffles) comes
//! from a purpose-labeled stream forked off the run seed, so runs with the
//! same seed, config, and data reproduce bit for bit on one platform.

use std::time::Instant;

use rand::seq::SliceRandom;

use crate::array::DenseArray;
use crate::autodiff::{ParamStore, Tape};
use crate::data::{MultiViewDataset, Scaler};
use crate::error::{Result, TmurError};
use crate::loss::{total_loss, LossBreakdown, LossWeights};
use crate::metrics::{self, MetricsReport, PredictionSet};
use crate::model::{ModelConfig, PredictionBatch, SavedModel, TmurModel};
use crate::seeding;

/// The five-seed evaluation protocol.
pub const PROTOCOL_SEEDS: [u64; 5] = [3407, 7, 601, 101, 503];

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub seed: u64,
    pub weights: LossWeights,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        TrainConfig {
            epochs: 300,
            batch_size: 128,
            base_lr: 1e-3,
            seed,
            weights: LossWeights::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(TmurError::config("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(TmurError::config("batch size must be at least 1"));
        }
        if !self.base_lr.is_finite() || self.base_lr <= 0.0 {
            return Err(TmurError::config(format!(
                "learning rate must be finite and positive, got {}",
                self.base_lr
            )));
        }
        Ok(())
    }
}

/// Cosine decay from `base_lr` at step 0 to 0 at `total_steps`.
pub fn cosine_lr(step: usize, total_steps: usize, base_lr: f64) -> f64 {
    let frac = step as f64 / total_steps as f64;
    base_lr * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos())
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates, one pair per parameter, plus the
/// shared step counter for bias correction.
pub struct AdamState {
    m: Vec<DenseArray>,
    v: Vec<DenseArray>,
    step: u64,
}

impl AdamState {
    pub fn new(store: &ParamStore) -> Self {
        let m = store
            .iter()
            .map(|(_, p)| DenseArray::zeros(p.value.rows(), p.value.cols()))
            .collect::<Vec<_>>();
        let v = m.clone();
        AdamState { m, v, step: 0 }
    }

    /// Standard bias-corrected update from the gradients currently
    /// accumulated in the store.
    pub fn step(&mut self, store: &mut ParamStore, lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let m_corr = 1.0 - ADAM_BETA1.powi(t);
        let v_corr = 1.0 - ADAM_BETA2.powi(t);
        let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
        for id in ids {
            let i = id.index();
            let p = store.get_mut(id);
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            let grads = p.grad.data().to_vec();
            for ((theta, &g), (m, v)) in p
                .value
                .data_mut()
                .iter_mut()
                .zip(&grads)
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                let m_hat = *m / m_corr;
                let v_hat = *v / v_corr;
                *theta -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        }
    }
}

/// Class-stratified split. Each class contributes `floor(ratio * n_k)`
/// training samples; the remainder up to `round(ratio * N)` goes to the
/// classes with the largest fractional parts (ties toward lower class
/// index). Both sides keep at least one sample of every class.
pub fn stratified_split(
    ds: &MultiViewDataset,
    ratio: f64,
    seed: u64,
) -> Result<(MultiViewDataset, MultiViewDataset)> {
    if !(0.0..1.0).contains(&ratio) || ratio <= 0.0 {
        return Err(TmurError::domain(format!(
            "split ratio must lie strictly between 0 and 1, got {ratio}"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.num_classes];
    for (i, &y) in ds.labels.iter().enumerate() {
        by_class[y].push(i);
    }
    for (k, members) in by_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(TmurError::data(format!(
                "class {k} has {} samples; need at least 2 to split",
                members.len()
            )));
        }
    }

    let target: usize = (ratio * ds.num_samples() as f64).round() as usize;
    let mut take: Vec<usize> = by_class
        .iter()
        .map(|m| (ratio * m.len() as f64).floor() as usize)
        .collect();
    let mut remainder = target.saturating_sub(take.iter().sum::<usize>());
    // Largest fractional part first; ties by class index.
    let mut order: Vec<usize> = (0..ds.num_classes).collect();
    order.sort_by(|&a, &b| {
        let fa = ratio * by_class[a].len() as f64 - take[a] as f64;
        let fb = ratio * by_class[b].len() as f64 - take[b] as f64;
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &k in order.iter().cycle().take(order.len() * 2) {
        if remainder == 0 {
            break;
        }
        if take[k] + 1 < by_class[k].len() {
            take[k] += 1;
            remainder -= 1;
        }
    }
    for (k, take) in take.iter_mut().enumerate() {
        // Never starve either side of a class.
        *take = (*take).clamp(1, by_class[k].len() - 1);
    }

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (k, members) in by_class.iter().enumerate() {
        let mut members = members.clone();
        members.shuffle(&mut seeding::stream(seed, &format!("split/class{k}")));
        train_idx.extend_from_slice(&members[..take[k]]);
        test_idx.extend_from_slice(&members[take[k]..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((ds.subset(&train_idx)?, ds.subset(&test_idx)?))
}

#[derive(Clone, Debug)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    /// Batch-size-weighted mean of the loss components over the epoch.
    pub loss: LossBreakdown,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub trace: Vec<EpochStats>,
    pub final_train_accuracy: f64,
    pub final_test_accuracy: f64,
    pub best_test_accuracy: f64,
    pub best_epoch: usize,
    /// Test-set metrics of the final model.
    pub metrics: MetricsReport,
    /// Wall-clock seconds; informational only, never written to artifacts.
    pub wall_seconds: f64,
}

const PREDICT_CHUNK: usize = 512;

/// Run the model over a whole dataset in chunks (bounded tape memory).
pub fn predict_dataset(
    model: &TmurModel,
    store: &ParamStore,
    ds: &MultiViewDataset,
) -> Result<PredictionBatch> {
    let n = ds.num_samples();
    let k = model.config().num_classes;
    let mut labels = Vec::with_capacity(n);
    let mut probabilities = DenseArray::zeros(n, k);
    let mut uncertainty = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let end = (start + PREDICT_CHUNK).min(n);
        let indices: Vec<usize> = (start..end).collect();
        let chunk = ds.subset(&indices)?;
        let batch = model.predict(store, &chunk.views)?;
        for (r, row) in (start..end).enumerate() {
            for c in 0..k {
                probabilities.set(row, c, batch.probabilities.get(r, c));
            }
        }
        labels.extend_from_slice(&batch.labels);
        uncertainty.extend_from_slice(&batch.uncertainty);
        start = end;
    }
    Ok(PredictionBatch {
        labels,
        probabilities,
        uncertainty,
    })
}

fn dataset_accuracy(model: &TmurModel, store: &ParamStore, ds: &MultiViewDataset) -> Result<f64> {
    let batch = predict_dataset(model, store, ds)?;
    let set = PredictionSet::from_batch(&batch, &ds.labels, ds.num_classes)?;
    metrics::accuracy(&set)
}

/// Train `model` in place on `train`, tracking accuracy on both splits each
/// epoch. Both datasets must already be standardized consistently.
pub fn fit(
    model: &TmurModel,
    store: &mut ParamStore,
    train: &MultiViewDataset,
    test: &MultiViewDataset,
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if train.num_classes != model.config().num_classes {
        return Err(TmurError::config(format!(
            "dataset has {} classes, model expects {}",
            train.num_classes,
            model.config().num_classes
        )));
    }
    let start = Instant::now();
    let n = train.num_samples();
    let mut adam = AdamState::new(store);
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lr = cosine_lr(epoch, config.epochs, config.base_lr);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seeding::stream(
            config.seed,
            &format!("shuffle/epoch{epoch}"),
        ));

        let mut sums = [0.0f64; 5];
        for batch_indices in order.chunks(config.batch_size) {
            let batch = train.subset(batch_indices)?;
            let mut tape = Tape::new();
            let out = model.forward(&mut tape, store, &batch.views)?;
            let terms = total_loss(
                &mut tape,
                out.fused_evidence,
                &out.expert_evidence,
                &out.normalized_private,
                out.routing,
                &batch.labels,
                &config.weights,
            )?;
            let breakdown = terms.breakdown(&tape);
            if !breakdown.is_finite() {
                let component = [
                    ("fused", breakdown.fused),
                    ("view", breakdown.view),
                    ("balance", breakdown.balance),
                    ("diversity", breakdown.diversity),
                    ("total", breakdown.total),
                ]
                .iter()
                .find(|(_, v)| !v.is_finite())
                .map(|(name, _)| *name)
                .unwrap_or("total");
                return Err(TmurError::state(format!(
                    "non-finite loss at epoch {epoch}, batch starting at sample {}: component '{component}'",
                    batch_indices[0]
                )));
            }
            store.zero_grads();
            tape.backward_scalar(terms.total, store)?;
            adam.step(store, lr);

            let w = batch_indices.len() as f64;
            sums[0] += w * breakdown.fused;
            sums[1] += w * breakdown.view;
            sums[2] += w * breakdown.balance;
            sums[3] += w * breakdown.diversity;
            sums[4] += w * breakdown.total;
        }

        let loss = LossBreakdown {
            fused: sums[0] / n as f64,
            view: sums[1] / n as f64,
            balance: sums[2] / n as f64,
            diversity: sums[3] / n as f64,
            total: sums[4] / n as f64,
        };
        trace.push(EpochStats {
            epoch,
            lr,
            loss,
            train_accuracy: dataset_accuracy(model, store, train)?,
            test_accuracy: dataset_accuracy(model, store, test)?,
        });
    }

    let (best_epoch, best) = trace
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.test_accuracy
                .partial_cmp(&b.test_accuracy)
                .unwrap()
                // Prefer the earliest epoch on ties.
                .then(ib.cmp(ia))
        })
        .map(|(i, s)| (i, s.test_accuracy))
        .expect("at least one epoch");

    let final_batch = predict_dataset(model, store, test)?;
    let set = PredictionSet::from_batch(&final_batch, &test.labels, test.num_classes)?;
    let report = metrics::evaluate(&set, metrics::DEFAULT_BINS)?;

    Ok(TrainReport {
        final_train_accuracy: trace.last().expect("nonempty").train_accuracy,
        final_test_accuracy: trace.last().expect("nonempty").test_accuracy,
        best_test_accuracy: best,
        best_epoch,
        metrics: report,
        wall_seconds: start.elapsed().as_secs_f64(),
        trace,
    })
}

/// Evaluate a saved model on a dataset: the stored scaler standardizes the
/// raw features, then fused predictions are scored against the labels.
pub fn evaluate_model(
    saved: &SavedModel,
    ds: &MultiViewDataset,
    bins: usize,
) -> Result<MetricsReport> {
    let model = TmurModel::attach(saved.config.clone(), &saved.params)?;
    let scaled = saved.scaler.apply(ds)?;
    let batch = predict_dataset(&model, &saved.params, &scaled)?;
    let set = PredictionSet::from_batch(&batch, &ds.labels, ds.num_classes)?;
    metrics::evaluate(&set, bins)
}

/// A completed run: the reloadable model plus its training history.
pub struct TrainOutcome {
    pub saved: SavedModel,
    pub report: TrainReport,
}

/// Full pipeline on one dataset: stratified 80/20 split, standardization
/// fitted on the training side, seeded initialization, training.
pub fn run_training(
    ds: &MultiViewDataset,
    model_config: ModelConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if model_config.view_dims != ds.view_dims() {
        return Err(TmurError::config(format!(
            "model view dims {:?} do not match dataset {:?}",
            model_config.view_dims,
            ds.view_dims()
        )));
    }
    let (train, test) = stratified_split(ds, 0.8, config.seed)?;
    let scaler = Scaler::fit(&train);
    let train = scaler.apply(&train)?;
    let test = scaler.apply(&test)?;
    let (model, mut store) = TmurModel::new(model_config, config.seed)?;
    let report = fit(&model, &mut store, &train, &test, config)?;
    Ok(TrainOutcome {
        saved: SavedModel {
            config: model.config().clone(),
            params: store,
            scaler,
            seed: config.seed,
        },
        report,
    })
}
