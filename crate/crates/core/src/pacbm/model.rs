use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::encoder::{Dense, Encoder, EncoderCache, Normalization, PatchStats, FEATURE_WIDTH};
use crate::concepts::{vocabulary, ClassConceptTable, ConceptInfo, CONCEPT_COUNT};
use crate::kan::{sigmoid, BSplineGrid, KanNetwork, NetworkCache};
use crate::optim::Parameters;
use crate::polsar::Patch;
use crate::rng::{stream, Domain};
use crate::{Error, Result};

/// Width of the hidden layer of the concept-to-label network.
pub const C2T_HIDDEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Independent,
    Sequential,
    Joint,
    /// Encoder and direct head only.
    Baseline,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(Strategy::Independent),
            "sequential" => Ok(Strategy::Sequential),
            "joint" => Ok(Strategy::Joint),
            "baseline" => Ok(Strategy::Baseline),
            other => Err(Error::InvalidConfig(format!("unknown strategy {other}"))),
        }
    }
}

/// Architecture and provenance settings stored with a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub strategy: Strategy,
    pub lambda: f64,
    pub seed: u64,
    pub grid: BSplineGrid,
}

impl ModelConfig {
    pub fn new(strategy: Strategy, lambda: f64, seed: u64) -> Self {
        Self {
            strategy,
            lambda,
            seed,
            grid: BSplineGrid::default(),
        }
    }
}

/// All trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Trainable {
    pub encoder: Encoder,
    pub direct_head: Dense,
    pub kan_f2c: KanNetwork,
    pub kan_c2t: KanNetwork,
}

impl Trainable {
    pub fn zeros_like(&self) -> Self {
        Self {
            encoder: Encoder::zeros(),
            direct_head: self.direct_head.zeros_like(),
            kan_f2c: self.kan_f2c.zeros_like(),
            kan_c2t: self.kan_c2t.zeros_like(),
        }
    }
}

impl Parameters for Trainable {
    fn groups(&self) -> Vec<&[f64]> {
        let mut g = self.encoder.groups();
        g.extend(self.direct_head.groups());
        g.extend(self.kan_f2c.groups());
        g.extend(self.kan_c2t.groups());
        g
    }

    fn groups_mut(&mut self) -> Vec<&mut [f64]> {
        let mut g = self.encoder.groups_mut();
        g.extend(self.direct_head.groups_mut());
        g.extend(self.kan_f2c.groups_mut());
        g.extend(self.kan_c2t.groups_mut());
        g
    }
}

/// Everything one forward pass produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOutput {
    pub features: Vec<f64>,
    pub concept_logits: Vec<f64>,
    pub concept_probs: Vec<f64>,
    pub concept_path_logits: Vec<f64>,
    pub direct_logits: Vec<f64>,
    /// Decision of the concept path.
    pub label: usize,
    pub direct_label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intervention {
    pub concepts: Vec<f64>,
    pub logits: Vec<f64>,
    pub label: usize,
}

/// Parallel concept bottleneck model.
#[derive(Debug, Clone, PartialEq)]
pub struct PaCBMModel {
    pub params: Trainable,
    pub normalization: Normalization,
    pub vocabulary: Vec<ConceptInfo>,
    pub class_table: ClassConceptTable,
    pub config: ModelConfig,
}

/// Index of the first maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Affine map of concept probabilities onto the spline grid range.
pub(crate) fn to_grid(p: f64) -> f64 {
    2.0 * p - 1.0
}

impl PaCBMModel {
    /// Freshly initialised model. Encoder and direct head draw from one seeded
    /// stream and the two KANs from another, so models that differ only in
    /// their concept branches share the same encoder initialisation.
    pub fn new(class_table: ClassConceptTable, normalization: Normalization, config: ModelConfig) -> Result<Self> {
        normalization.validate()?;
        if !(config.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("lambda must be non-negative, got {}", config.lambda)));
        }
        let classes = class_table.len();
        let mut enc_rng = stream(config.seed, Domain::EncoderInit, 0);
        let encoder = Encoder::init(&mut enc_rng);
        let direct_head = Dense::init(FEATURE_WIDTH, classes, &mut enc_rng);
        let mut kan_rng = stream(config.seed, Domain::KanInit, 0);
        let kan_f2c = KanNetwork::new(&[FEATURE_WIDTH, CONCEPT_COUNT], &config.grid, &mut kan_rng)?;
        let kan_c2t = KanNetwork::new(&[CONCEPT_COUNT, C2T_HIDDEN, classes], &config.grid, &mut kan_rng)?;
        Ok(Self {
            params: Trainable {
                encoder,
                direct_head,
                kan_f2c,
                kan_c2t,
            },
            normalization,
            vocabulary: vocabulary(),
            class_table,
            config,
        })
    }

    /// Checks that all shapes agree with each other and with the class table.
    pub fn validate(&self) -> Result<()> {
        let classes = self.class_table.len();
        self.params.encoder.validate()?;
        self.normalization.validate()?;
        let p = &self.params;
        if p.direct_head.n_in != FEATURE_WIDTH || p.direct_head.n_out != classes {
            return Err(Error::InvalidConfig("direct head shape".into()));
        }
        if p.kan_f2c.widths() != [FEATURE_WIDTH, CONCEPT_COUNT] {
            return Err(Error::InvalidConfig("feature-to-concept network shape".into()));
        }
        if p.kan_c2t.widths() != [CONCEPT_COUNT, C2T_HIDDEN, classes] {
            return Err(Error::InvalidConfig("concept-to-label network shape".into()));
        }
        if self.vocabulary != vocabulary() {
            return Err(Error::InvalidConfig("concept vocabulary differs".into()));
        }
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        self.class_table.len()
    }

    pub fn forward_patch(&self, patch: &Patch) -> Result<ModelOutput> {
        self.forward_stats(&PatchStats::from_patch(patch))
    }

    pub fn forward_stats(&self, stats: &PatchStats) -> Result<ModelOutput> {
        let summary = self.normalization.summary(stats);
        let mut cache = EncoderCache::default();
        self.params.encoder.forward(&summary, &mut cache);
        let features = cache.features.to_vec();
        let mut direct_logits = vec![0.0; self.class_count()];
        self.params.direct_head.forward(&features, &mut direct_logits);
        let mut net_cache = NetworkCache::default();
        self.params.kan_f2c.forward_cached(&features, &mut net_cache)?;
        let concept_logits = net_cache.output().to_vec();
        let concept_probs: Vec<f64> = concept_logits.iter().map(|&z| sigmoid(z)).collect();
        let concept_path_logits = self.concept_path(&concept_probs)?;
        Ok(ModelOutput {
            label: argmax(&concept_path_logits),
            direct_label: argmax(&direct_logits),
            features,
            concept_logits,
            concept_probs,
            concept_path_logits,
            direct_logits,
        })
    }

    /// Label logits from concept values in `[0, 1]`.
    pub fn concept_path(&self, probs: &[f64]) -> Result<Vec<f64>> {
        if probs.len() != CONCEPT_COUNT {
            return Err(Error::WidthMismatch {
                expected: CONCEPT_COUNT,
                got: probs.len(),
            });
        }
        let u: Vec<f64> = probs.iter().map(|&p| to_grid(p)).collect();
        self.params.kan_c2t.forward(&u)
    }

    /// Applies `edits` to the concept vector and re-runs only the
    /// concept-to-label network.
    pub fn intervene(&self, probs: &[f64], edits: &BTreeMap<usize, f64>) -> Result<Intervention> {
        if probs.len() != CONCEPT_COUNT {
            return Err(Error::WidthMismatch {
                expected: CONCEPT_COUNT,
                got: probs.len(),
            });
        }
        let mut concepts = probs.to_vec();
        for (&i, &v) in edits {
            if i >= CONCEPT_COUNT {
                return Err(Error::InvalidEdit(format!("concept index {i} out of range")));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidEdit(format!("concept value {v} outside [0, 1]")));
            }
            concepts[i] = v;
        }
        if let Some(v) = concepts.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidEdit(format!("concept value {v} outside [0, 1]")));
        }
        let logits = self.concept_path(&concepts)?;
        Ok(Intervention {
            label: argmax(&logits),
            concepts,
            logits,
        })
    }
}
