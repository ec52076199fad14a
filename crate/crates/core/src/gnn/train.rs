use serde::{Deserialize, Serialize};
use tensorcore::{ops, Activation, Adam, AdamConfig, LossKind, ParamSet, Rng, Tape, Tensor, Var};

use super::metric::acc;
use super::model::{GnnArch, GnnModel, PreparedGraph};
use crate::error::{P2gError, Result};
use crate::graphrep::WeightGraph;

pub const MLP_HIDDEN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 300, lr: 1e-3, batch_size: 8, seed: 0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epoch_losses: Vec<f64>,
    pub val_acc: Vec<f64>,
    /// Epoch (0-based) whose parameters were kept; the last one without
    /// validation data.
    pub best_epoch: usize,
    pub best_val_acc: Option<f64>,
}

/// Adam on the batch-mean l1 loss, shuffling with `cfg.seed` every epoch and
/// keeping the parameters with the best validation ACC (earliest on ties).
fn train_loop<F, P>(
    params: &mut ParamSet<f64>,
    train_labels: &[[f64; 5]],
    val_labels: &[[f64; 5]],
    cfg: &TrainConfig,
    forward: F,
    predict_val: P,
) -> Result<TrainLog>
where
    F: for<'t> Fn(&'t Tape<f64>, &[Var<'t, f64>], usize) -> Result<Var<'t, f64>>,
    P: Fn(&ParamSet<f64>) -> Result<Vec<[f64; 5]>>,
{
    if train_labels.is_empty() {
        return Err(P2gError::Invalid("no training samples".into()));
    }
    if cfg.batch_size == 0 {
        return Err(P2gError::Invalid("batch size must be positive".into()));
    }
    let mut opt = Adam::new(AdamConfig::with_lr(cfg.lr), params)?;
    let mut rng = Rng::new(cfg.seed);
    let mut order: Vec<usize> = (0..train_labels.len()).collect();
    let mut log = TrainLog::default();
    let mut best = params.clone();
    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let tape = Tape::new();
            let p = params.bind(&tape);
            let mut loss: Option<Var<'_, f64>> = None;
            for &i in batch {
                let target = tape.leaf(Tensor::new(vec![5], train_labels[i].to_vec())?);
                let l = forward(&tape, &p, i)?.loss(target, LossKind::L1)?;
                loss = Some(match loss {
                    Some(acc) => acc.add(l)?,
                    None => l,
                });
            }
            let loss = loss.expect("non-empty batch").scale(1.0 / batch.len() as f64);
            let value = loss.item();
            if !value.is_finite() {
                return Err(P2gError::Divergence(format!("epoch {epoch}: training loss became {value}")));
            }
            total += value * batch.len() as f64;
            let grads = tape.backward(loss)?;
            params.zero_grad();
            params.accumulate(&grads, &p)?;
            opt.step(params)?;
        }
        log.epoch_losses.push(total / train_labels.len() as f64);
        if val_labels.is_empty() {
            log.best_epoch = epoch;
            best.clone_from(params);
        } else {
            let score = acc(&predict_val(params)?, val_labels)?.avg;
            log.val_acc.push(score);
            if log.best_val_acc.is_none_or(|b| score > b) {
                log.best_val_acc = Some(score);
                log.best_epoch = epoch;
                best.clone_from(params);
            }
        }
    }
    if cfg.epochs > 0 {
        *params = best;
    }
    params.zero_grad();
    Ok(log)
}

fn check_counts<X>(xs: &[X], labels: &[[f64; 5]], what: &str) -> Result<()> {
    if xs.len() != labels.len() {
        return Err(P2gError::Mismatch(format!("{} {what} inputs but {} labels", xs.len(), labels.len())));
    }
    Ok(())
}

/// Trains ERN, message-passing layers and readout jointly.
pub fn train_gnn(
    arch: GnnArch,
    train: &[WeightGraph],
    train_labels: &[[f64; 5]],
    val: &[WeightGraph],
    val_labels: &[[f64; 5]],
    cfg: &TrainConfig,
) -> Result<(GnnModel<f64>, TrainLog)> {
    check_counts(train, train_labels, "training")?;
    check_counts(val, val_labels, "validation")?;
    let k = train.first().map(|g| g.k).ok_or_else(|| P2gError::Invalid("no training graphs".into()))?;
    if let Some(g) = train.iter().chain(val).find(|g| g.k != k) {
        return Err(P2gError::Mismatch(format!("graph {} has K = {}, expected {k}", g.subject_id, g.k)));
    }
    let prep_train = train.iter().map(PreparedGraph::new).collect::<Result<Vec<_>>>()?;
    let prep_val = val.iter().map(PreparedGraph::new).collect::<Result<Vec<_>>>()?;
    let mut model = GnnModel::<f64>::new(arch, k, cfg.seed)?;
    let shape = model.clone();
    let log = train_loop(
        &mut model.params,
        train_labels,
        val_labels,
        cfg,
        |tape, p, i| shape.forward(tape, p, &prep_train[i], None),
        |params| {
            let m = GnnModel { arch, k, params: params.clone() };
            prep_val.iter().map(|g| m.predict_prepared(g)).collect()
        },
    )?;
    Ok((model, log))
}

/// Dense baseline on concatenated decoder weights: `D -> 64 -> relu -> 5 -> sigmoid`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub input_dim: usize,
    pub params: ParamSet<f64>,
}

impl MlpModel {
    pub fn new(input_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return Err(P2gError::Invalid("MLP input dimension must be positive".into()));
        }
        let mut rng = Rng::new(seed);
        let mut params = ParamSet::new();
        params.add("mlp.fc1.weight", rng.he_uniform(&[MLP_HIDDEN, input_dim], input_dim));
        params.add("mlp.fc1.bias", Tensor::zeros(&[MLP_HIDDEN]));
        params.add("mlp.fc2.weight", rng.he_uniform(&[5, MLP_HIDDEN], MLP_HIDDEN));
        params.add("mlp.fc2.bias", Tensor::zeros(&[5]));
        Ok(Self { input_dim, params })
    }

    pub fn forward<'t>(&self, tape: &'t Tape<f64>, p: &[Var<'t, f64>], x: &Tensor<f64>) -> Result<Var<'t, f64>> {
        if x.shape() != [self.input_dim] {
            return Err(P2gError::Mismatch(format!("MLP expects [{}] input, got {:?}", self.input_dim, x.shape())));
        }
        let h = tape.leaf(x.clone()).linear(p[0], Some(p[1]))?.relu();
        Ok(h.linear(p[2], Some(p[3]))?.sigmoid())
    }

    pub fn predict(&self, x: &Tensor<f64>) -> Result<[f64; 5]> {
        mlp_predict(self.input_dim, &self.params, x)
    }
}

/// Tape-free forward pass; binding would copy the large first layer.
fn mlp_predict(input_dim: usize, params: &ParamSet<f64>, x: &Tensor<f64>) -> Result<[f64; 5]> {
    if x.shape() != [input_dim] {
        return Err(P2gError::Mismatch(format!("MLP expects [{input_dim}] input, got {:?}", x.shape())));
    }
    let h = ops::linear(x, params.value(0), Some(params.value(1)))?;
    let h = ops::activation(&h, Activation::Relu);
    let out = ops::activation(&ops::linear(&h, params.value(2), Some(params.value(3)))?, Activation::Sigmoid);
    Ok(std::array::from_fn(|i| out.data()[i]))
}

fn to_tensor(v: &[f32]) -> Tensor<f64> {
    Tensor::from_vec(v.iter().map(|&x| x as f64).collect())
}

pub fn mlp_baseline_train(
    train: &[Vec<f32>],
    train_labels: &[[f64; 5]],
    val: &[Vec<f32>],
    val_labels: &[[f64; 5]],
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainLog)> {
    check_counts(train, train_labels, "training")?;
    check_counts(val, val_labels, "validation")?;
    let d = train.first().map(Vec::len).ok_or_else(|| P2gError::Invalid("no training vectors".into()))?;
    let xs: Vec<Tensor<f64>> = train.iter().map(|v| to_tensor(v)).collect();
    let vs: Vec<Tensor<f64>> = val.iter().map(|v| to_tensor(v)).collect();
    let mut model = MlpModel::new(d, cfg.seed)?;
    let shape = MlpModel { input_dim: d, params: ParamSet::new() };
    let log = train_loop(
        &mut model.params,
        train_labels,
        val_labels,
        cfg,
        |tape, p, i| shape.forward(tape, p, &xs[i]),
        |params| vs.iter().map(|x| mlp_predict(d, params, x)).collect(),
    )?;
    Ok((model, log))
}
