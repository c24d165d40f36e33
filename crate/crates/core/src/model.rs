//! Support sets: which columns of the design are active.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// A support set `S`: strictly increasing column indices into the design.
///
/// Serializes as a plain JSON array of indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ModelIndex {
    indices: Vec<usize>,
}

impl ModelIndex {
    /// Builds a support from arbitrary indices; sorts them and rejects
    /// duplicates.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidData(format!(
                "duplicate index in support {:?}",
                indices
            )));
        }
        Ok(ModelIndex { indices })
    }

    /// The empty support.
    pub fn empty() -> Self {
        ModelIndex {
            indices: Vec::new(),
        }
    }

    /// Support size `s = |S|`.
    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    /// Checks every index is `< p` and the size is `<= r`.
    pub fn validate_for(&self, p: usize, r: usize) -> Result<()> {
        if let Some(&j) = self.indices.last() {
            if j >= p {
                return Err(Error::DimensionMismatch(format!(
                    "support index {j} out of range for p={p}"
                )));
            }
        }
        if self.size() > r {
            return Err(Error::InvalidConfig(format!(
                "support size {} exceeds cap R={r}",
                self.size()
            )));
        }
        Ok(())
    }

    /// Support with `j` inserted; returns the insertion position.
    /// Panics if `j` is already present (callers check first).
    pub fn with_added(&self, j: usize) -> (Self, usize) {
        let pos = self.indices.binary_search(&j).unwrap_err();
        let mut v = self.indices.clone();
        v.insert(pos, j);
        (ModelIndex { indices: v }, pos)
    }

    /// Support with `j` removed; returns the removal position.
    /// Panics if `j` is absent.
    pub fn with_removed(&self, j: usize) -> (Self, usize) {
        let pos = self.indices.binary_search(&j).unwrap();
        let mut v = self.indices.clone();
        v.remove(pos);
        (ModelIndex { indices: v }, pos)
    }

    /// Union with another support.
    pub fn union(&self, other: &ModelIndex) -> ModelIndex {
        let mut v: Vec<usize> = self
            .indices
            .iter()
            .chain(other.indices.iter())
            .cloned()
            .collect();
        v.sort_unstable();
        v.dedup();
        ModelIndex { indices: v }
    }
}

impl TryFrom<Vec<usize>> for ModelIndex {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        ModelIndex::new(v)
    }
}

impl From<ModelIndex> for Vec<usize> {
    fn from(m: ModelIndex) -> Vec<usize> {
        m.indices
    }
}

impl fmt::Display for ModelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, j) in self.indices.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_sorts_and_rejects_duplicates() {
        let m = ModelIndex::new(vec![4, 1, 2]).unwrap();
        assert_eq!(m.indices(), &[1, 2, 4]);
        assert!(ModelIndex::new(vec![3, 3]).is_err());
    }

    #[test]
    fn add_remove_roundtrip() {
        let m = ModelIndex::new(vec![1, 5]).unwrap();
        let (m2, pos) = m.with_added(3);
        assert_eq!(pos, 1);
        assert_eq!(m2.indices(), &[1, 3, 5]);
        let (m3, pos) = m2.with_removed(3);
        assert_eq!(pos, 1);
        assert_eq!(m3, m);
    }

    #[test]
    fn validate_bounds() {
        let m = ModelIndex::new(vec![0, 7]).unwrap();
        assert!(m.validate_for(8, 2).is_ok());
        assert!(m.validate_for(7, 2).is_err());
        assert!(m.validate_for(8, 1).is_err());
    }

    #[test]
    fn serde_is_a_plain_array() {
        let m = ModelIndex::new(vec![0, 2]).unwrap();
        assert_eq!(serde_json::to_string(&m).unwrap(), "[0,2]");
        let back: ModelIndex = serde_json::from_str("[2,0]").unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ModelIndex>("[1,1]").is_err());
    }
}
