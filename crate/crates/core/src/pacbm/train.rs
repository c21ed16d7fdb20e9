use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::LabeledSet;
use super::encoder::{EncoderCache, Normalization, FEATURE_WIDTH, SUMMARY_LEN};
use super::loss::{bce_with_logits, cross_entropy};
use super::model::{to_grid, ModelConfig, PaCBMModel, Strategy, Trainable};
use crate::concepts::{ClassConceptTable, CONCEPT_COUNT};
use crate::kan::{sigmoid, KanNetwork, NetworkCache};
use crate::optim::{Adam, AdamConfig, Parameters};
use crate::par::Exec;
use crate::rng::{stream, Domain};
use crate::{Error, Result};

/// Samples per gradient work unit. Fixed so the reduction order does not
/// depend on the execution policy.
const CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub strategy: Strategy,
    pub epochs: usize,
    pub batch: usize,
    pub adam: AdamConfig,
    pub lambda: f64,
    pub seed: u64,
    /// Stops gradients of the concept branch from reaching the encoder.
    #[serde(default)]
    pub detach_concepts: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Joint,
            epochs: 100,
            batch: 256,
            adam: AdamConfig::default(),
            lambda: 0.7,
            seed: 0,
            detach_concepts: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if self.epochs == 0 || self.batch == 0 {
            return Err(Error::InvalidConfig("epochs and batch must be at least 1".into()));
        }
        if !(self.adam.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Loss functional over the encoder-fed parts of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// `CE(direct) + CE(concept path) + λ·BCE(concepts)` over all parameters.
    Joint { lambda: f64, detach: bool },
    /// `CE(direct) + λ·BCE(concepts)` over encoder, direct head and the
    /// feature-to-concept network.
    StageOne { lambda: f64 },
    /// `CE(direct)` over encoder and direct head.
    Baseline,
}

/// Batch-mean loss terms. `total` is the optimised quantity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub direct_ce: f64,
    pub concept_ce: f64,
    pub bce: f64,
}

impl LossParts {
    fn add_scaled(&mut self, o: &LossParts, s: f64) {
        self.total += s * o.total;
        self.direct_ce += s * o.direct_ce;
        self.concept_ce += s * o.concept_ce;
        self.bce += s * o.bce;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub stage: u8,
    pub epoch: usize,
    pub loss: LossParts,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PaCBMModel,
    pub log: Vec<EpochLog>,
    /// Parameters at the end of stage one for two-stage strategies.
    pub stage_one: Option<Trainable>,
}

#[derive(Debug, Clone, Copy)]
struct Parts {
    encoder: bool,
    head: bool,
    f2c: bool,
    c2t: bool,
}

impl Parts {
    fn of(objective: Objective) -> Self {
        match objective {
            Objective::Joint { .. } => Parts {
                encoder: true,
                head: true,
                f2c: true,
                c2t: true,
            },
            Objective::StageOne { .. } => Parts {
                encoder: true,
                head: true,
                f2c: true,
                c2t: false,
            },
            Objective::Baseline => Parts {
                encoder: true,
                head: true,
                f2c: false,
                c2t: false,
            },
        }
    }

    fn groups<'a>(&self, t: &'a Trainable) -> Vec<&'a [f64]> {
        let mut g = Vec::new();
        if self.encoder {
            g.extend(t.encoder.groups());
        }
        if self.head {
            g.extend(t.direct_head.groups());
        }
        if self.f2c {
            g.extend(t.kan_f2c.groups());
        }
        if self.c2t {
            g.extend(t.kan_c2t.groups());
        }
        g
    }

    fn groups_mut<'a>(&self, t: &'a mut Trainable) -> Vec<&'a mut [f64]> {
        let mut g = Vec::new();
        if self.encoder {
            g.extend(t.encoder.groups_mut());
        }
        if self.head {
            g.extend(t.direct_head.groups_mut());
        }
        if self.f2c {
            g.extend(t.kan_f2c.groups_mut());
        }
        if self.c2t {
            g.extend(t.kan_c2t.groups_mut());
        }
        g
    }
}

/// Precomputed encoder inputs and targets.
struct Batchable<'a> {
    summaries: Vec<[f64; SUMMARY_LEN]>,
    labels: &'a [usize],
    targets: Vec<Vec<f64>>,
}

impl<'a> Batchable<'a> {
    fn new(set: &'a LabeledSet, normalization: &Normalization, table: &ClassConceptTable) -> Result<Self> {
        let targets = (0..table.len())
            .map(|y| table.concepts_for_class(y).map(|c| c.values().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        if let Some(&y) = set.labels.iter().find(|&&y| y >= table.len()) {
            return Err(Error::UnknownClass(y));
        }
        Ok(Self {
            summaries: set.stats.iter().map(|s| normalization.summary(s)).collect(),
            labels: &set.labels,
            targets,
        })
    }
}

#[derive(Default)]
struct Workspace {
    encoder: EncoderCache,
    f2c: NetworkCache,
    c2t: NetworkCache,
    direct: Vec<f64>,
    grad_u: Vec<f64>,
    grad_z: Vec<f64>,
    grad_f_kan: Vec<f64>,
}

/// Adds the gradient of `scale · loss(sample)` into `grads` and returns the
/// unscaled loss terms.
#[allow(clippy::too_many_arguments)]
fn sample_gradient(
    params: &Trainable,
    objective: Objective,
    summary: &[f64; SUMMARY_LEN],
    y: usize,
    target: &[f64],
    scale: f64,
    grads: &mut Trainable,
    ws: &mut Workspace,
) -> Result<LossParts> {
    params.encoder.forward(summary, &mut ws.encoder);
    let enc = &ws.encoder;
    let features = enc.features;
    ws.direct.resize(params.direct_head.n_out, 0.0);
    params.direct_head.forward(&features, &mut ws.direct);
    let (direct_ce, g_direct) = cross_entropy(&ws.direct, y);
    let mut parts = LossParts {
        direct_ce,
        ..Default::default()
    };
    let mut grad_f = [0.0; FEATURE_WIDTH];
    let g_direct: Vec<f64> = g_direct.iter().map(|g| g * scale).collect();
    params
        .direct_head
        .backward(&features, &g_direct, &mut grads.direct_head, Some(&mut grad_f));

    let (lambda, with_path, detach) = match objective {
        Objective::Baseline => {
            parts.total = direct_ce;
            params.encoder.backward(enc, &grad_f, &mut grads.encoder);
            return Ok(parts);
        }
        Objective::StageOne { lambda } => (lambda, false, false),
        Objective::Joint { lambda, detach } => (lambda, true, detach),
    };

    params.kan_f2c.forward_cached(&features, &mut ws.f2c)?;
    let z = ws.f2c.output();
    let (bce, g_bce) = bce_with_logits(z, target);
    parts.bce = bce;
    ws.grad_z.clear();
    ws.grad_z.extend(g_bce.iter().map(|g| lambda * g * scale));
    if with_path {
        let probs: Vec<f64> = z.iter().map(|&v| sigmoid(v)).collect();
        let u: Vec<f64> = probs.iter().map(|&p| to_grid(p)).collect();
        params.kan_c2t.forward_cached(&u, &mut ws.c2t)?;
        let (concept_ce, g_path) = cross_entropy(ws.c2t.output(), y);
        parts.concept_ce = concept_ce;
        let g_path: Vec<f64> = g_path.iter().map(|g| g * scale).collect();
        ws.grad_u.clear();
        ws.grad_u.resize(CONCEPT_COUNT, 0.0);
        params
            .kan_c2t
            .backward(&mut ws.c2t, &g_path, &mut grads.kan_c2t, Some(&mut ws.grad_u));
        for (k, gz) in ws.grad_z.iter_mut().enumerate() {
            let p = probs[k];
            *gz += 2.0 * ws.grad_u[k] * p * (1.0 - p);
        }
    }
    parts.total = parts.direct_ce + parts.concept_ce + lambda * parts.bce;

    if detach {
        params.kan_f2c.backward(&mut ws.f2c, &ws.grad_z, &mut grads.kan_f2c, None);
    } else {
        ws.grad_f_kan.clear();
        ws.grad_f_kan.resize(FEATURE_WIDTH, 0.0);
        params
            .kan_f2c
            .backward(&mut ws.f2c, &ws.grad_z, &mut grads.kan_f2c, Some(&mut ws.grad_f_kan));
        for (a, b) in grad_f.iter_mut().zip(&ws.grad_f_kan) {
            *a += b;
        }
    }
    params.encoder.backward(&ws.encoder, &grad_f, &mut grads.encoder);
    Ok(parts)
}

/// Mean loss and gradient over `idx`, reduced chunk by chunk in order.
fn batch_gradient(
    params: &Trainable,
    objective: Objective,
    data: &Batchable,
    idx: &[usize],
    exec: Exec,
) -> Result<(LossParts, Trainable)> {
    let scale = 1.0 / idx.len() as f64;
    let chunks = exec.map_chunks(idx, CHUNK, |chunk| -> Result<(LossParts, Trainable)> {
        let mut grads = params.zeros_like();
        let mut ws = Workspace::default();
        let mut parts = LossParts::default();
        for &i in chunk {
            let y = data.labels[i];
            let p = sample_gradient(params, objective, &data.summaries[i], y, &data.targets[y], scale, &mut grads, &mut ws)?;
            parts.add_scaled(&p, scale);
        }
        Ok((parts, grads))
    });
    let mut iter = chunks.into_iter();
    let (mut parts, mut grads) = iter.next().ok_or(Error::EmptyData)??;
    for c in iter {
        let (p, g) = c?;
        parts.add_scaled(&p, 1.0);
        grads.accumulate(&g);
    }
    Ok((parts, grads))
}

/// Mean loss over `set` and its gradient with respect to every trainable
/// parameter (zero for parameters outside the objective).
pub fn loss_and_gradient(model: &PaCBMModel, objective: Objective, set: &LabeledSet, exec: Exec) -> Result<(LossParts, Trainable)> {
    if set.is_empty() {
        return Err(Error::EmptyData);
    }
    let data = Batchable::new(set, &model.normalization, &model.class_table)?;
    let idx: Vec<usize> = (0..set.len()).collect();
    batch_gradient(&model.params, objective, &data, &idx, exec)
}

/// Runs `epochs` passes over shuffled mini-batches and logs mean losses.
fn run_epochs<F>(n: usize, cfg: &TrainConfig, stage: u8, domain: Domain, mut step: F) -> Result<Vec<EpochLog>>
where
    F: FnMut(&[usize]) -> Result<LossParts>,
{
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut stream(cfg.seed, domain, epoch as u64));
        let mut loss = LossParts::default();
        for batch in order.chunks(cfg.batch) {
            let parts = step(batch)?;
            loss.add_scaled(&parts, batch.len() as f64 / n as f64);
        }
        log.push(EpochLog { stage, epoch, loss });
    }
    Ok(log)
}

fn train_encoder_stage(
    model: &mut PaCBMModel,
    objective: Objective,
    data: &Batchable,
    cfg: &TrainConfig,
    exec: Exec,
) -> Result<Vec<EpochLog>> {
    let parts = Parts::of(objective);
    let mut adam = Adam::new(cfg.adam);
    run_epochs(data.labels.len(), cfg, 1, Domain::Shuffle, |batch| {
        let (loss, grads) = batch_gradient(&model.params, objective, data, batch, exec)?;
        adam.step_groups(parts.groups_mut(&mut model.params), parts.groups(&grads));
        Ok(loss)
    })
}

/// Trains only the concept-to-label network on fixed concept inputs.
fn train_concept_to_label(
    net: &mut KanNetwork,
    inputs: &[Vec<f64>],
    labels: &[usize],
    cfg: &TrainConfig,
    exec: Exec,
) -> Result<Vec<EpochLog>> {
    let grid_inputs: Vec<Vec<f64>> = inputs.iter().map(|v| v.iter().map(|&p| to_grid(p)).collect()).collect();
    let mut adam = Adam::new(cfg.adam);
    run_epochs(labels.len(), cfg, 2, Domain::StageTwoShuffle, |batch| {
        let scale = 1.0 / batch.len() as f64;
        let snapshot = &*net;
        let chunks = exec.map_chunks(batch, CHUNK, |chunk| -> Result<(f64, KanNetwork)> {
            let mut grads = snapshot.zeros_like();
            let mut cache = NetworkCache::default();
            let mut loss = 0.0;
            for &i in chunk {
                snapshot.forward_cached(&grid_inputs[i], &mut cache)?;
                let (ce, g) = cross_entropy(cache.output(), labels[i]);
                let g: Vec<f64> = g.iter().map(|v| v * scale).collect();
                snapshot.backward(&mut cache, &g, &mut grads, None);
                loss += scale * ce;
            }
            Ok((loss, grads))
        });
        let mut iter = chunks.into_iter();
        let (mut loss, mut grads) = iter.next().ok_or(Error::EmptyData)??;
        for c in iter {
            let (l, g) = c?;
            loss += l;
            grads.accumulate(&g);
        }
        adam.step(net, &grads);
        Ok(LossParts {
            total: loss,
            concept_ce: loss,
            ..Default::default()
        })
    })
}

/// Fits the input normalization on `set`, initialises a model from
/// `cfg.seed` and trains it with `cfg.strategy`.
pub fn train(set: &LabeledSet, table: ClassConceptTable, cfg: &TrainConfig, exec: Exec) -> Result<TrainOutcome> {
    cfg.validate()?;
    if set.is_empty() {
        return Err(Error::EmptyData);
    }
    let normalization = Normalization::fit(&set.stats)?;
    let mut model = PaCBMModel::new(table, normalization, ModelConfig::new(cfg.strategy, cfg.lambda, cfg.seed))?;
    let data = Batchable::new(set, &model.normalization, &model.class_table)?;
    let lambda = cfg.lambda;
    match cfg.strategy {
        Strategy::Baseline => {
            let log = train_encoder_stage(&mut model, Objective::Baseline, &data, cfg, exec)?;
            Ok(TrainOutcome {
                model,
                log,
                stage_one: None,
            })
        }
        Strategy::Joint => {
            let objective = Objective::Joint {
                lambda,
                detach: cfg.detach_concepts,
            };
            let log = train_encoder_stage(&mut model, objective, &data, cfg, exec)?;
            Ok(TrainOutcome {
                model,
                log,
                stage_one: None,
            })
        }
        Strategy::Sequential | Strategy::Independent => {
            let mut log = train_encoder_stage(&mut model, Objective::StageOne { lambda }, &data, cfg, exec)?;
            let stage_one = model.params.clone();
            let inputs: Vec<Vec<f64>> = if cfg.strategy == Strategy::Sequential {
                exec.map(&set.stats, |s| model.forward_stats(s).map(|o| o.concept_probs))
                    .into_iter()
                    .collect::<Result<_>>()?
            } else {
                set.labels.iter().map(|&y| data.targets[y].clone()).collect()
            };
            log.extend(train_concept_to_label(&mut model.params.kan_c2t, &inputs, &set.labels, cfg, exec)?);
            Ok(TrainOutcome {
                model,
                log,
                stage_one: Some(stage_one),
            })
        }
    }
}
