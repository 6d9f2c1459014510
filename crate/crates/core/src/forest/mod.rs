//! Regression random forest: bootstrap-aggregated CART trees with axis-aligned
//! threshold splits chosen by variance reduction.
//!
//! Split search is exact: every midpoint between consecutive distinct values
//! of a feature is a candidate. Ties go to the lowest feature index, then the
//! lowest threshold. Feature importance is the mean decrease in impurity.

mod io;
mod tree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, PortableRng};

pub use io::{FOREST_MAGIC, FOREST_VERSION, LEAF_SENTINEL};
pub use tree::{Node, Tree};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    #[default]
    All,
    /// Features drawn without replacement at every node.
    Count(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 150,
            max_depth: 15,
            min_samples_split: 10_000,
            max_features: MaxFeatures::All,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidConfig(
                "min_samples_split must be at least 2".into(),
            ));
        }
        if self.max_features == MaxFeatures::Count(0) {
            return Err(Error::InvalidConfig(
                "max_features must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Dense row-major `rows × cols` sample matrix with named columns.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
    layout: Vec<String>,
}

impl FeatureMatrix {
    /// Matrix with generic column names `f0`, `f1`, ...
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        let layout = (0..cols).map(|i| format!("f{i}")).collect();
        FeatureMatrix::with_layout(rows, data, layout)
    }

    pub fn with_layout(rows: usize, data: Vec<f32>, layout: Vec<String>) -> Result<Self> {
        let cols = layout.len();
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(FeatureMatrix {
            rows,
            cols,
            data,
            layout,
        })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        FeatureMatrix::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn layout(&self) -> &[String] {
        &self.layout
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionForest {
    pub trees: Vec<Tree>,
    /// Normalised mean decrease in impurity per feature.
    pub importances: Vec<f64>,
    pub config: ForestConfig,
    pub layout: Vec<String>,
}

/// Trains a forest on `x` against targets `y`.
pub fn train(x: &FeatureMatrix, y: &[f64], cfg: &ForestConfig) -> Result<RegressionForest> {
    cfg.validate()?;
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::EmptyInput);
    }
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} targets for {} samples",
            y.len(),
            x.rows()
        )));
    }
    if x.rows() > u32::MAX as usize {
        return Err(Error::InvalidCount("more than 2^32 - 1 samples".into()));
    }
    if !x.as_slice().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteData("feature matrix"));
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteData("targets"));
    }

    let presorted = tree::Presorted::new(x);
    let n = x.rows();
    let grown: Vec<(Tree, Vec<f64>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = PortableRng::new(derive_seed(cfg.seed, t as u64));
            let weights = if cfg.bootstrap {
                let mut w = vec![0u32; n];
                for _ in 0..n {
                    w[rng.below(n as u64) as usize] += 1;
                }
                w
            } else {
                vec![1u32; n]
            };
            tree::grow(x, y, &presorted, &weights, cfg, &mut rng)
        })
        .collect();

    let f = x.cols();
    let mut importances = vec![0.0; f];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, raw) in grown {
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            for (acc, v) in importances.iter_mut().zip(&raw) {
                *acc += v / total;
            }
        }
        trees.push(tree);
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    } else {
        importances = vec![1.0 / f as f64; f];
    }

    Ok(RegressionForest {
        trees,
        importances,
        config: cfg.clone(),
        layout: x.layout().to_vec(),
    })
}

impl RegressionForest {
    /// A forest of `n_trees` single-leaf trees predicting `value` everywhere.
    pub fn constant(n_trees: usize, value: f64, layout: Vec<String>) -> Self {
        let f = layout.len().max(1);
        RegressionForest {
            trees: vec![Tree::leaf(value); n_trees.max(1)],
            importances: vec![1.0 / f as f64; layout.len()],
            config: ForestConfig {
                n_trees: n_trees.max(1),
                ..ForestConfig::default()
            },
            layout,
        }
    }

    pub fn n_features(&self) -> usize {
        self.layout.len()
    }

    /// Fails with [`Error::DimensionMismatch`] unless `layout` is the layout
    /// the forest was trained against.
    pub fn check_layout(&self, layout: &[String]) -> Result<()> {
        if layout != self.layout.as_slice() {
            return Err(Error::DimensionMismatch(format!(
                "forest expects {} features {:?}..., got {} features {:?}...",
                self.layout.len(),
                self.layout.first(),
                layout.len(),
                layout.first()
            )));
        }
        Ok(())
    }

    pub fn predict_row(&self, row: &[f32]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        sum / self.trees.len() as f64
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_layout(x.layout())?;
        Ok(self.predict_rows(x.as_slice()))
    }

    /// Predicts for a flat row-major buffer already known to match the layout.
    pub fn predict_rows(&self, data: &[f32]) -> Vec<f64> {
        let f = self.n_features();
        data.par_chunks(f * 1024)
            .flat_map_iter(|block| block.chunks_exact(f).map(|row| self.predict_row(row)))
            .collect()
    }

    pub fn feature_importance(&self) -> &[f64] {
        &self.importances
    }

    /// `(name, importance)` sorted by decreasing importance.
    pub fn ranked_importances(&self) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = self
            .layout
            .iter()
            .cloned()
            .zip(self.importances.iter().copied())
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1));
        v
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }
}

/// Upper estimate of the bytes [`train`] holds at once for a dataset of
/// `rows × cols` trained with `concurrent_trees` trees in flight: the feature
/// matrix, targets, the shared presorted column orders, and per tree the
/// bootstrap counts, the in-bag column orders and partition scratch.
pub fn training_memory_estimate(rows: usize, cols: usize, concurrent_trees: usize) -> usize {
    let shared = rows * cols * 4 + rows * 8 + rows * cols * 4;
    let per_tree = rows * 4 + rows + rows * cols * 4 + rows * 4;
    shared + per_tree * concurrent_trees
}
