use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A collection of (possibly overlapping) groups covering the index set `0..n`.
///
/// Indices are zero-based in memory; the groups file format on disk is one-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupStructure {
    groups: Vec<Vec<usize>>,
    universe: usize,
    overlapping: bool,
}

impl GroupStructure {
    /// Builds a group structure over `0..universe`. Indices inside each group are
    /// sorted and deduplicated; group order is kept as declared.
    pub fn new(groups: Vec<Vec<usize>>, universe: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidGroups("at least one group is required".into()));
        }
        let mut counts = vec![0usize; universe];
        let mut cleaned = Vec::with_capacity(groups.len());
        for (gi, group) in groups.into_iter().enumerate() {
            if group.is_empty() {
                return Err(Error::InvalidGroups(format!("group {} is empty", gi + 1)));
            }
            let set: BTreeSet<usize> = group.into_iter().collect();
            for &i in &set {
                if i >= universe {
                    return Err(Error::InvalidGroups(format!(
                        "group {} contains index {} outside 1..={}",
                        gi + 1,
                        i + 1,
                        universe
                    )));
                }
                counts[i] += 1;
            }
            cleaned.push(set.into_iter().collect::<Vec<_>>());
        }
        if let Some(missing) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidGroups(format!(
                "index {} is not covered by any group",
                missing + 1
            )));
        }
        let overlapping = counts.iter().any(|&c| c > 1);
        Ok(Self {
            groups: cleaned,
            universe,
            overlapping,
        })
    }

    /// Same as [`GroupStructure::new`] but with one-based indices.
    pub fn from_one_based(groups: Vec<Vec<usize>>, universe: usize) -> Result<Self> {
        let mut zero = Vec::with_capacity(groups.len());
        for (gi, g) in groups.into_iter().enumerate() {
            let mut v = Vec::with_capacity(g.len());
            for i in g {
                if i == 0 {
                    return Err(Error::InvalidGroups(format!(
                        "group {} contains index 0; indices are one-based",
                        gi + 1
                    )));
                }
                v.push(i - 1);
            }
            zero.push(v);
        }
        Self::new(zero, universe)
    }

    /// One group per index; the group norm reduces to the l1 norm.
    pub fn singletons(universe: usize) -> Result<Self> {
        Self::new((0..universe).map(|i| vec![i]).collect(), universe)
    }

    /// A single group holding every index; the group norm reduces to the l2 norm.
    pub fn all(universe: usize) -> Result<Self> {
        Self::new(vec![(0..universe).collect()], universe)
    }

    /// Contiguous partition of `0..universe` into `g` blocks whose sizes differ by
    /// at most one (earlier blocks get the extra element).
    pub fn contiguous(universe: usize, g: usize) -> Result<Self> {
        if g == 0 || g > universe {
            return Err(Error::InvalidGroups(format!(
                "cannot split {universe} indices into {g} non-empty blocks"
            )));
        }
        let base = universe / g;
        let extra = universe % g;
        let mut groups = Vec::with_capacity(g);
        let mut start = 0;
        for b in 0..g {
            let len = base + usize::from(b < extra);
            groups.push((start..start + len).collect());
            start += len;
        }
        Self::new(groups, universe)
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Size of the index universe (the number of tasks when grouping tasks).
    pub fn universe(&self) -> usize {
        self.universe
    }

    /// True iff some index belongs to two or more groups.
    pub fn is_overlapping(&self) -> bool {
        self.overlapping
    }

    /// Group of each index, for disjoint structures.
    pub fn membership(&self) -> Option<Vec<usize>> {
        if self.overlapping {
            return None;
        }
        let mut out = vec![0; self.universe];
        for (gi, g) in self.groups.iter().enumerate() {
            for &i in g {
                out[i] = gi;
            }
        }
        Some(out)
    }

    /// Relabels indices: old index `i` becomes `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.universe {
            return Err(Error::dims("permutation", self.universe, perm.len()));
        }
        let groups = self
            .groups
            .iter()
            .map(|g| g.iter().map(|&i| perm[i]).collect())
            .collect();
        Self::new(groups, self.universe)
    }

    /// Groups with one-based indices, as written to groups files.
    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.groups
            .iter()
            .map(|g| g.iter().map(|i| i + 1).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_uncovered_and_empty() {
        assert!(GroupStructure::new(vec![vec![0]], 2).is_err());
        assert!(GroupStructure::new(vec![vec![0, 1], vec![]], 2).is_err());
        assert!(GroupStructure::new(vec![], 0).is_err());
        assert!(GroupStructure::new(vec![vec![0, 5]], 2).is_err());
    }

    #[test]
    fn overlap_flag() {
        let g = GroupStructure::new(vec![vec![0, 1], vec![1, 2]], 3).unwrap();
        assert!(g.is_overlapping());
        assert!(g.membership().is_none());
        let g = GroupStructure::new(vec![vec![0, 1], vec![2]], 3).unwrap();
        assert!(!g.is_overlapping());
        assert_eq!(g.membership().unwrap(), vec![0, 0, 1]);
    }

    #[test]
    fn contiguous_blocks() {
        let g = GroupStructure::contiguous(29, 2).unwrap();
        assert_eq!(g.groups()[0].len(), 15);
        assert_eq!(g.groups()[1].len(), 14);
        assert!(GroupStructure::contiguous(2, 3).is_err());
    }

    #[test]
    fn one_based_round_trip() {
        let g = GroupStructure::from_one_based(vec![vec![1, 2], vec![2, 3]], 3).unwrap();
        assert_eq!(g.groups(), &[vec![0, 1], vec![1, 2]]);
        assert_eq!(g.to_one_based(), vec![vec![1, 2], vec![2, 3]]);
        assert!(GroupStructure::from_one_based(vec![vec![0]], 1).is_err());
    }
}
