//! Binary model files.
//!
//! Layout (little endian): magic `TFOR`, `u32` version, `u32` header length,
//! a JSON header with the training config, feature layout and importances,
//! `u32` tree count, then per tree a `u32` node count followed by its nodes in
//! pre-order. A node is `u32` feature (or [`LEAF_SENTINEL`]), `f64` threshold
//! or leaf value, `u32` left child, `u32` right child.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ForestConfig, Node, RegressionForest, Tree};
use crate::error::{Error, Result};
use crate::raster::ByteReader;

pub const FOREST_MAGIC: [u8; 4] = *b"TFOR";
pub const FOREST_VERSION: u32 = 1;
pub const LEAF_SENTINEL: u32 = u32::MAX;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ForestConfig,
    layout: Vec<String>,
    importances: Vec<f64>,
}

impl RegressionForest {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&Header {
            config: self.config.clone(),
            layout: self.layout.clone(),
            importances: self.importances.clone(),
        })?;
        let nodes: usize = self.trees.iter().map(|t| t.nodes.len()).sum();
        let mut out = Vec::with_capacity(16 + header.len() + 4 * self.trees.len() + 20 * nodes);
        out.extend_from_slice(&FOREST_MAGIC);
        out.extend_from_slice(&FOREST_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.trees.len() as u32).to_le_bytes());
        for tree in &self.trees {
            out.extend_from_slice(&(tree.nodes.len() as u32).to_le_bytes());
            for node in &tree.nodes {
                let (feature, value, left, right) = match *node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => (feature, threshold, left, right),
                    Node::Leaf { value } => (LEAF_SENTINEL, value, 0, 0),
                };
                out.extend_from_slice(&feature.to_le_bytes());
                out.extend_from_slice(&value.to_le_bytes());
                out.extend_from_slice(&left.to_le_bytes());
                out.extend_from_slice(&right.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.magic(FOREST_MAGIC)?;
        let version = r.u32()?;
        if version != FOREST_VERSION {
            return Err(Error::VersionMismatch {
                expected: FOREST_VERSION,
                found: version,
            });
        }
        let header_len = r.u32()? as usize;
        let header: Header = serde_json::from_slice(r.take(header_len)?)
            .map_err(|e| Error::Corrupt(format!("model header: {e}")))?;
        let n_features = header.layout.len();
        if header.importances.len() != n_features {
            return Err(Error::Corrupt(
                "importance count differs from layout".into(),
            ));
        }
        let n_trees = r.u32()? as usize;
        if n_trees == 0 {
            return Err(Error::Corrupt("model has no trees".into()));
        }
        let mut trees = Vec::with_capacity(n_trees.min(r.remaining() / 4));
        for _ in 0..n_trees {
            let count = r.u32()? as usize;
            if count == 0 || count > r.remaining() / 20 {
                return Err(if count == 0 {
                    Error::Corrupt("empty tree".into())
                } else {
                    Error::TruncatedFile
                });
            }
            let mut nodes = Vec::with_capacity(count);
            for i in 0..count {
                let feature = r.u32()?;
                let value = r.f64()?;
                let left = r.u32()?;
                let right = r.u32()?;
                if feature == LEAF_SENTINEL {
                    nodes.push(Node::Leaf { value });
                    continue;
                }
                // Children after their parent rules out cycles.
                let child_ok = |c: u32| (c as usize) > i && (c as usize) < count;
                if feature as usize >= n_features || !child_ok(left) || !child_ok(right) {
                    return Err(Error::Corrupt(format!("invalid node {i}")));
                }
                nodes.push(Node::Split {
                    feature,
                    threshold: value,
                    left,
                    right,
                });
            }
            trees.push(Tree { nodes });
        }
        r.finish()?;
        Ok(RegressionForest {
            trees,
            importances: header.importances,
            config: header.config,
            layout: header.layout,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        RegressionForest::from_bytes(&bytes)
    }
}
