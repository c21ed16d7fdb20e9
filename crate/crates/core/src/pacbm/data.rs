use rand::seq::SliceRandom;

use super::encoder::PatchStats;
use crate::par::Exec;
use crate::polsar::Scene;
use crate::rng::{stream, Domain};
use crate::{Error, Result};

/// Labeled patches, reduced to their summary statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSet {
    pub stats: Vec<PatchStats>,
    pub labels: Vec<usize>,
    pub anchors: Vec<(usize, usize)>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Patches at the given anchors with their scene labels.
    pub fn from_anchors(scene: &Scene, anchors: Vec<(usize, usize)>, exec: Exec) -> Result<Self> {
        let rows = exec.map(&anchors, |&(r, c)| -> Result<(PatchStats, usize)> {
            let patch = scene.patch(r, c)?;
            let label = patch.label.ok_or_else(|| Error::InvalidLayout(format!("unlabeled anchor ({r}, {c})")))?;
            Ok((PatchStats::from_patch(&patch), label as usize))
        });
        let mut set = LabeledSet {
            anchors,
            ..Default::default()
        };
        for row in rows {
            let (s, y) = row?;
            set.stats.push(s);
            set.labels.push(y);
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: LabeledSet,
    pub val: LabeledSet,
}

/// Samples `train_per_class + val_per_class` distinct interior anchors per
/// class without replacement. Samples are ordered by class.
pub fn sample_split(scene: &Scene, train_per_class: usize, val_per_class: usize, seed: u64, exec: Exec) -> Result<Split> {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (class, mut anchors) in scene.anchors_by_class().into_iter().enumerate() {
        let need = train_per_class + val_per_class;
        if anchors.len() < need {
            return Err(Error::InvalidConfig(format!(
                "class {class} has {} interior pixels, {need} requested",
                anchors.len()
            )));
        }
        let mut rng = stream(seed, Domain::Split, class as u64);
        anchors.shuffle(&mut rng);
        train.extend_from_slice(&anchors[..train_per_class]);
        val.extend_from_slice(&anchors[train_per_class..need]);
    }
    Ok(Split {
        train: LabeledSet::from_anchors(scene, train, exec)?,
        val: LabeledSet::from_anchors(scene, val, exec)?,
    })
}
