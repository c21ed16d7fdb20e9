use super::{CoherencyMatrix, SceneMeta, FEATURE_COUNT};
use crate::{Error, Result};

/// Label value for pixels without ground truth.
pub const UNLABELED: u8 = 255;
/// Side length of a classification patch.
pub const PATCH_SIZE: usize = 15;
/// Distance from a patch anchor to the patch edge.
pub const PATCH_HALF: usize = PATCH_SIZE / 2;

/// A labeled raster of per-pixel coherency features.
///
/// Features are kept in the 32-bit form they are stored in on disk and are
/// widened to `f64` on access.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub meta: SceneMeta,
    features: Vec<f32>,
    labels: Vec<u8>,
}

impl Scene {
    pub fn new(meta: SceneMeta, features: Vec<f32>, labels: Vec<u8>) -> Result<Self> {
        let n = meta.width * meta.height;
        if meta.width == 0 || meta.height == 0 {
            return Err(Error::InvalidLayout("empty scene".into()));
        }
        if features.len() != n * FEATURE_COUNT {
            return Err(Error::WidthMismatch {
                expected: n * FEATURE_COUNT,
                got: features.len(),
            });
        }
        if labels.len() != n {
            return Err(Error::WidthMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        let classes = meta.class_names.len();
        if let Some(&bad) = labels.iter().find(|&&l| l != UNLABELED && l as usize >= classes) {
            return Err(Error::UnknownClass(bad as usize));
        }
        Ok(Self {
            meta,
            features,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.meta.width
    }

    pub fn height(&self) -> usize {
        self.meta.height
    }

    pub fn class_count(&self) -> usize {
        self.meta.class_names.len()
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    fn check_bounds(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.height() || col >= self.width() {
            return Err(Error::InvalidLayout(format!(
                "pixel ({row}, {col}) outside {}x{} scene",
                self.height(),
                self.width()
            )));
        }
        Ok(())
    }

    pub fn pixel_features(&self, row: usize, col: usize) -> Result<&[f32]> {
        self.check_bounds(row, col)?;
        let i = (row * self.width() + col) * FEATURE_COUNT;
        Ok(&self.features[i..i + FEATURE_COUNT])
    }

    pub fn coherency(&self, row: usize, col: usize) -> Result<CoherencyMatrix> {
        let f = self.pixel_features(row, col)?;
        let wide: Vec<f64> = f.iter().map(|&v| v as f64).collect();
        CoherencyMatrix::from_features(&wide)
    }

    /// Ground-truth label, `None` when unlabeled.
    pub fn label(&self, row: usize, col: usize) -> Result<Option<u8>> {
        self.check_bounds(row, col)?;
        let l = self.labels[row * self.width() + col];
        Ok((l != UNLABELED).then_some(l))
    }

    /// Whether a full patch fits around `(row, col)`.
    pub fn is_interior(&self, row: usize, col: usize) -> bool {
        row >= PATCH_HALF
            && col >= PATCH_HALF
            && row + PATCH_HALF < self.height()
            && col + PATCH_HALF < self.width()
    }

    /// Interior, labeled anchors grouped by class, each list in row-major order.
    pub fn anchors_by_class(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); self.class_count()];
        for row in PATCH_HALF..self.height().saturating_sub(PATCH_HALF) {
            for col in PATCH_HALF..self.width().saturating_sub(PATCH_HALF) {
                let l = self.labels[row * self.width() + col];
                if l != UNLABELED {
                    out[l as usize].push((row, col));
                }
            }
        }
        out
    }

    /// Extracts the 15×15×9 patch centred on `(row, col)`.
    pub fn patch(&self, row: usize, col: usize) -> Result<Patch> {
        self.check_bounds(row, col)?;
        if !self.is_interior(row, col) {
            return Err(Error::BorderAnchor { row, col });
        }
        let w = self.width();
        let mut values = Vec::with_capacity(PATCH_SIZE * PATCH_SIZE * FEATURE_COUNT);
        for r in row - PATCH_HALF..=row + PATCH_HALF {
            let start = (r * w + col - PATCH_HALF) * FEATURE_COUNT;
            let end = start + PATCH_SIZE * FEATURE_COUNT;
            values.extend(self.features[start..end].iter().map(|&v| v as f64));
        }
        Ok(Patch {
            values,
            anchor: Some((row, col)),
            label: self.label(row, col)?,
        })
    }
}

/// A 15×15×9 feature block, row-major with channels innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    values: Vec<f64>,
    pub anchor: Option<(usize, usize)>,
    pub label: Option<u8>,
}

impl Patch {
    pub const LEN: usize = PATCH_SIZE * PATCH_SIZE * FEATURE_COUNT;

    /// Builds a free-standing patch, checking its shape.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() != Self::LEN {
            return Err(Error::WidthMismatch {
                expected: Self::LEN,
                got: values.len(),
            });
        }
        Ok(Self {
            values,
            anchor: None,
            label: None,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pixel(&self, r: usize, c: usize) -> &[f64] {
        let i = (r * PATCH_SIZE + c) * FEATURE_COUNT;
        &self.values[i..i + FEATURE_COUNT]
    }

    pub fn center(&self) -> &[f64] {
        self.pixel(PATCH_HALF, PATCH_HALF)
    }

    /// Average coherency over all patch pixels.
    pub fn mean_coherency(&self) -> CoherencyMatrix {
        let mut acc = [0.0; FEATURE_COUNT];
        for px in self.values.chunks_exact(FEATURE_COUNT) {
            for (a, v) in acc.iter_mut().zip(px) {
                *a += v;
            }
        }
        let n = (PATCH_SIZE * PATCH_SIZE) as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        CoherencyMatrix::from_features(&acc).expect("fixed width")
    }
}
