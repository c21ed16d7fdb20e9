use std::path::Path;

use serde::{Deserialize, Serialize};

use super::encoder::{Dense, Encoder, Normalization};
use super::model::{ModelConfig, PaCBMModel, Trainable};
use crate::concepts::{ClassConceptTable, ConceptInfo};
use crate::kan::{BSplineGrid, KanLayer, KanNetwork};
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "PACBM";
pub const CHECKPOINT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DenseDto {
    n_in: usize,
    n_out: usize,
    /// `weight[out][in]`.
    weight: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl DenseDto {
    fn from_dense(d: &Dense) -> Self {
        Self {
            n_in: d.n_in,
            n_out: d.n_out,
            weight: d.weight.chunks(d.n_in.max(1)).map(<[f64]>::to_vec).collect(),
            bias: d.bias.clone(),
        }
    }

    fn into_dense(self) -> Result<Dense> {
        if self.weight.len() != self.n_out || self.weight.iter().any(|r| r.len() != self.n_in) {
            return Err(Error::Format("dense weight shape".into()));
        }
        Dense::from_parts(self.n_in, self.n_out, self.weight.concat(), self.bias)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct KanLayerDto {
    n_in: usize,
    n_out: usize,
    grid: BSplineGrid,
    /// `coef[out][in][basis]`.
    coef: Vec<Vec<Vec<f64>>>,
    /// `w_base[out][in]`.
    w_base: Vec<Vec<f64>>,
    w_spline: Vec<Vec<f64>>,
}

impl KanLayerDto {
    fn from_layer(l: &KanLayer) -> Self {
        let nb = l.grid().basis_count();
        let rows = |v: &[f64]| v.chunks(l.n_in()).map(<[f64]>::to_vec).collect::<Vec<_>>();
        Self {
            n_in: l.n_in(),
            n_out: l.n_out(),
            grid: l.grid().clone(),
            coef: l
                .coef()
                .chunks(l.n_in() * nb)
                .map(|row| row.chunks(nb).map(<[f64]>::to_vec).collect())
                .collect(),
            w_base: rows(l.w_base()),
            w_spline: rows(l.w_spline()),
        }
    }

    fn into_layer(self) -> Result<KanLayer> {
        let nb = self.grid.basis_count();
        let shape_ok = self.coef.len() == self.n_out
            && self.coef.iter().all(|r| r.len() == self.n_in && r.iter().all(|c| c.len() == nb))
            && [&self.w_base, &self.w_spline]
                .iter()
                .all(|m| m.len() == self.n_out && m.iter().all(|r| r.len() == self.n_in));
        if !shape_ok {
            return Err(Error::Format("KAN layer shape".into()));
        }
        let coef = self.coef.into_iter().flatten().flatten().collect();
        KanLayer::from_parts(
            self.n_in,
            self.n_out,
            self.grid,
            coef,
            self.w_base.concat(),
            self.w_spline.concat(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ParametersDto {
    encoder: [DenseDto; 2],
    direct_head: DenseDto,
    kan_f2c: Vec<KanLayerDto>,
    kan_c2t: Vec<KanLayerDto>,
}

/// Serialized form of a model. Field order is fixed and floats are written
/// with round-trip precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: String,
    pub config: ModelConfig,
    pub vocabulary: Vec<ConceptInfo>,
    pub class_table: ClassConceptTable,
    pub normalization: Normalization,
    parameters: ParametersDto,
}

fn network_dto(n: &KanNetwork) -> Vec<KanLayerDto> {
    n.layers().iter().map(KanLayerDto::from_layer).collect()
}

fn network_from(layers: Vec<KanLayerDto>) -> Result<KanNetwork> {
    KanNetwork::from_layers(layers.into_iter().map(KanLayerDto::into_layer).collect::<Result<_>>()?)
}

impl Checkpoint {
    pub fn from_model(m: &PaCBMModel) -> Self {
        let p = &m.params;
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION.into(),
            config: m.config.clone(),
            vocabulary: m.vocabulary.clone(),
            class_table: m.class_table.clone(),
            normalization: m.normalization,
            parameters: ParametersDto {
                encoder: [
                    DenseDto::from_dense(&p.encoder.layer1),
                    DenseDto::from_dense(&p.encoder.layer2),
                ],
                direct_head: DenseDto::from_dense(&p.direct_head),
                kan_f2c: network_dto(&p.kan_f2c),
                kan_c2t: network_dto(&p.kan_c2t),
            },
        }
    }

    pub fn into_model(self) -> Result<PaCBMModel> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let [l1, l2] = self.parameters.encoder;
        let model = PaCBMModel {
            params: Trainable {
                encoder: Encoder {
                    layer1: l1.into_dense()?,
                    layer2: l2.into_dense()?,
                },
                direct_head: self.parameters.direct_head.into_dense()?,
                kan_f2c: network_from(self.parameters.kan_f2c)?,
                kan_c2t: network_from(self.parameters.kan_c2t)?,
            },
            normalization: self.normalization,
            vocabulary: self.vocabulary,
            class_table: self.class_table,
            config: self.config,
        };
        model.validate().map_err(|e| Error::Format(e.to_string()))?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn write_checkpoint(path: &Path, model: &PaCBMModel) -> Result<()> {
    let mut json = Checkpoint::from_model(model).to_json()?;
    json.push('\n');
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<PaCBMModel> {
    Checkpoint::from_json(&std::fs::read_to_string(path)?)?.into_model()
}
