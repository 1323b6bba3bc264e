use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irrep_matrices::{fock_basis, symmetric_matrix};
use crate::CMatrix;

/// Direct sum of photon-number sectors of an m-mode Fock space.
///
/// Basis order: sectors in the listed order, each in canonical GT order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SectorsRepr", into = "SectorsRepr")]
pub struct FockSpace {
    modes: usize,
    sectors: Vec<u32>,
    states: Vec<Vec<u32>>,
    offsets: Vec<usize>,
    index: HashMap<Vec<u32>, usize>,
}

#[derive(Serialize, Deserialize)]
struct SectorsRepr {
    modes: usize,
    sectors: Vec<u32>,
}

impl TryFrom<SectorsRepr> for FockSpace {
    type Error = Error;
    fn try_from(r: SectorsRepr) -> Result<Self> {
        FockSpace::new(r.modes, r.sectors)
    }
}

impl From<FockSpace> for SectorsRepr {
    fn from(s: FockSpace) -> Self {
        SectorsRepr {
            modes: s.modes,
            sectors: s.sectors,
        }
    }
}

impl FockSpace {
    pub fn new(modes: usize, sectors: Vec<u32>) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Simulator("mode count must be positive".into()));
        }
        if sectors.is_empty() {
            return Err(Error::Simulator("at least one photon-number sector is required".into()));
        }
        let mut sorted = sectors.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != sectors.len() {
            return Err(Error::Simulator(format!("duplicate sectors in {sectors:?}")));
        }
        let mut states = Vec::new();
        let mut offsets = Vec::new();
        for &n in &sectors {
            offsets.push(states.len());
            states.extend(fock_basis(n, modes)?);
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(FockSpace {
            modes,
            sectors,
            states,
            offsets,
            index,
        })
    }

    /// Fixed photon number `n`.
    pub fn single(modes: usize, n: u32) -> Result<Self> {
        Self::new(modes, vec![n])
    }

    /// Sectors `0, 1, …, truncation`.
    pub fn truncated(modes: usize, truncation: u32) -> Result<Self> {
        Self::new(modes, (0..=truncation).collect())
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn sectors(&self) -> &[u32] {
        &self.sectors
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn index_of(&self, occ: &[u32]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Basis index range of the sector at position `k`.
    pub fn sector_range(&self, k: usize) -> std::ops::Range<usize> {
        let end = self.offsets.get(k + 1).copied().unwrap_or(self.dim());
        self.offsets[k]..end
    }

    pub fn max_photons(&self) -> u32 {
        self.sectors.iter().copied().max().unwrap_or(0)
    }

    /// Whether the sectors are exactly `0..=N`, as photon loss and gain need.
    pub fn is_contiguous_from_vacuum(&self) -> bool {
        let mut s = self.sectors.clone();
        s.sort_unstable();
        s.iter().enumerate().all(|(i, &n)| n as usize == i)
    }

    /// Block-diagonal action of a passive unitary on all sectors.
    pub fn passive(&self, u: &CMatrix) -> Result<CMatrix> {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for (k, &n) in self.sectors.iter().enumerate() {
            let block = symmetric_matrix(n, self.modes, u)?;
            let r = self.sector_range(k);
            out.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(&block);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_space_layout() {
        let s = FockSpace::truncated(2, 1).unwrap();
        assert_eq!(s.dim(), 3);
        assert_eq!(s.states(), &[vec![0, 0], vec![1, 0], vec![0, 1]]);
        assert_eq!(s.sector_range(1), 1..3);
        assert!(s.is_contiguous_from_vacuum());
        assert!(!FockSpace::single(2, 1).unwrap().is_contiguous_from_vacuum());
        assert!(FockSpace::new(2, vec![1, 1]).is_err());
    }

    #[test]
    fn serde_roundtrip() {
        let s = FockSpace::truncated(3, 2).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: FockSpace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
