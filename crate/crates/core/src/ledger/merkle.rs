//! Binary SHA-256 Merkle tree with inclusion proofs. Levels with an odd
//! node count pair their last node with itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::{sha256, sha256_concat, Hash32};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MerkleProof {
    pub leaf_index: usize,
    /// Sibling hashes from the leaf level upwards, with the side the
    /// sibling sits on.
    pub path: Vec<(Hash32, Side)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MerkleTree {
    levels: Vec<Vec<Hash32>>,
}

fn parent(left: &Hash32, right: &Hash32) -> Hash32 {
    sha256_concat(&[left, right])
}

impl MerkleTree {
    pub fn build<T: AsRef<[u8]>>(items: &[T]) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::invalid("Merkle tree over an empty list"));
        }
        let mut levels = vec![items.iter().map(|d| sha256(d.as_ref())).collect::<Vec<_>>()];
        while levels.last().expect("non-empty").len() > 1 {
            let cur = levels.last().expect("non-empty");
            let next = cur
                .chunks(2)
                .map(|pair| parent(&pair[0], pair.get(1).unwrap_or(&pair[0])))
                .collect();
            levels.push(next);
        }
        Ok(MerkleTree { levels })
    }

    pub fn root(&self) -> Hash32 {
        self.levels.last().expect("non-empty")[0]
    }

    pub fn leaf_count(&self) -> usize {
        self.levels[0].len()
    }

    /// Number of levels above the leaves, i.e. the proof length.
    pub fn height(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn levels(&self) -> &[Vec<Hash32>] {
        &self.levels
    }

    pub fn prove(&self, index: usize) -> Result<MerkleProof> {
        if index >= self.leaf_count() {
            return Err(Error::invalid(format!(
                "leaf index {index} out of range for {} leaves",
                self.leaf_count()
            )));
        }
        let mut path = Vec::with_capacity(self.height());
        let mut i = index;
        for level in &self.levels[..self.height()] {
            let entry = if i % 2 == 0 {
                (*level.get(i + 1).unwrap_or(&level[i]), Side::Right)
            } else {
                (level[i - 1], Side::Left)
            };
            path.push(entry);
            i /= 2;
        }
        Ok(MerkleProof {
            leaf_index: index,
            path,
        })
    }
}

pub fn merkle_root<T: AsRef<[u8]>>(items: &[T]) -> Result<Hash32> {
    Ok(MerkleTree::build(items)?.root())
}

/// Recomputes the root from `leaf_data` along `proof`.
pub fn verify_proof(root: &Hash32, leaf_data: &[u8], proof: &MerkleProof) -> bool {
    let mut h = sha256(leaf_data);
    for (sibling, side) in &proof.path {
        h = match side {
            Side::Left => parent(sibling, &h),
            Side::Right => parent(&h, sibling),
        };
    }
    &h == root
}
