//! Gelfand–Tsetlin patterns: enumeration, occupations, weights, zero-weight
//! subsets and the Fock-state correspondence.
//!
//! A pattern for an SU(m) label `μ` is a triangle of `m` rows; the top row is
//! `μ` and row `i+1` interlaces row `i`. The row with `l` entries belongs to
//! the `U(l)` acting on the first `l` modes, so occupations are read from the
//! bottom up: the single bottom entry is `n_1`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rep_theory::Partition;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GtPattern {
    /// `rows[0]` is the irrep label (m entries), `rows[m-1]` the single bottom entry.
    pub rows: Vec<Vec<u32>>,
}

impl GtPattern {
    pub fn new(rows: Vec<Vec<u32>>) -> Result<Self> {
        let p = GtPattern { rows };
        p.validate()?;
        Ok(p)
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn top(&self) -> &[u32] {
        &self.rows[0]
    }

    /// Row with `l` entries (`1 ≤ l ≤ m`).
    pub fn row_with_len(&self, l: usize) -> &[u32] {
        &self.rows[self.rank() - l]
    }

    pub fn flattened(&self) -> Vec<u32> {
        self.rows.iter().flatten().copied().collect()
    }

    fn validate(&self) -> Result<()> {
        let m = self.rows.len();
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != m - i {
                return Err(Error::GtBasis(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    m - i
                )));
            }
        }
        for i in 0..m.saturating_sub(1) {
            let (upper, lower) = (&self.rows[i], &self.rows[i + 1]);
            for j in 0..lower.len() {
                if !(upper[j] >= lower[j] && lower[j] >= upper[j + 1]) {
                    return Err(Error::GtBasis(format!(
                        "betweenness violated at row {} entry {j}",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for GtPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "[{}]", rows.join(" | "))
    }
}

/// Occupation numbers `(n_1, …, n_m)`: `n_k` is the sum of the row with `k`
/// entries minus the sum of the row with `k − 1` entries.
pub fn occupation(pattern: &GtPattern) -> Vec<i64> {
    let m = pattern.rank();
    let sum = |l: usize| -> i64 {
        if l == 0 {
            0
        } else {
            pattern.row_with_len(l).iter().map(|&x| i64::from(x)).sum()
        }
    };
    (1..=m).map(|k| sum(k) - sum(k - 1)).collect()
}

/// SU(m) weight: consecutive occupation differences `(n_1 − n_2, …, n_{m−1} − n_m)`.
pub fn weight(pattern: &GtPattern) -> Vec<i64> {
    occupation(pattern).windows(2).map(|w| w[0] - w[1]).collect()
}

pub fn is_zero_weight(pattern: &GtPattern) -> bool {
    weight(pattern).iter().all(|&w| w == 0)
}

/// Pattern attached to the Fock state `|n_1, …, n_m⟩`: the row with `l`
/// entries is `(n_1 + … + n_l, 0, …, 0)`.
pub fn fock_to_gt(n: &[u32]) -> GtPattern {
    let m = n.len();
    let rows = (0..m)
        .map(|i| {
            let l = m - i;
            let mut row = vec![0; l];
            row[0] = n[..l].iter().sum();
            row
        })
        .collect();
    GtPattern { rows }
}

/// Ordered basis of an irrep.
///
/// Canonical order is decreasing lexicographic order of the flattened rows,
/// which puts the highest-weight state first and lists the fundamental
/// representation as `e_1, …, e_m`.
#[derive(Debug, Clone)]
pub struct GtBasis {
    pub mu: Partition,
    pub patterns: Vec<GtPattern>,
    index: HashMap<GtPattern, usize>,
}

impl GtBasis {
    pub fn new(mu: &Partition) -> Result<Self> {
        if mu.rank() == 0 {
            return Err(Error::GtBasis("empty irrep label".into()));
        }
        let mut patterns = Vec::new();
        let mut rows = vec![mu.parts().to_vec()];
        extend(&mut rows, &mut patterns);
        patterns.sort_by(|a, b| b.flattened().cmp(&a.flattened()));
        let index = patterns.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        Ok(GtBasis {
            mu: mu.clone(),
            patterns,
            index,
        })
    }

    /// Shared basis for `μ`, built on first use.
    pub fn cached(mu: &Partition) -> Result<Arc<GtBasis>> {
        static CACHE: OnceLock<Mutex<HashMap<Partition, Arc<GtBasis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(b) = cache.lock().expect("poisoned").get(mu) {
            return Ok(b.clone());
        }
        let basis = Arc::new(GtBasis::new(mu)?);
        cache.lock().expect("poisoned").insert(mu.clone(), basis.clone());
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn index_of(&self, p: &GtPattern) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Indices of the zero-weight patterns, in basis order.
    pub fn zero_weight_indices(&self) -> Vec<usize> {
        self.patterns
            .iter()
            .enumerate()
            .filter(|(_, p)| is_zero_weight(p))
            .map(|(i, _)| i)
            .collect()
    }
}

fn extend(rows: &mut Vec<Vec<u32>>, out: &mut Vec<GtPattern>) {
    let last = rows.last().expect("non-empty").clone();
    if last.len() == 1 {
        out.push(GtPattern { rows: rows.clone() });
        return;
    }
    let mut next = vec![0u32; last.len() - 1];
    fn fill(j: usize, upper: &[u32], next: &mut Vec<u32>, rows: &mut Vec<Vec<u32>>, out: &mut Vec<GtPattern>) {
        if j == next.len() {
            rows.push(next.clone());
            extend(rows, out);
            rows.pop();
            return;
        }
        for v in upper[j + 1]..=upper[j] {
            next[j] = v;
            fill(j + 1, upper, next, rows, out);
        }
    }
    fill(0, &last, &mut next, rows, out);
}

/// All patterns with top row `μ`, in canonical order.
pub fn enumerate_patterns(mu: &Partition) -> Result<Vec<GtPattern>> {
    Ok(GtBasis::cached(mu)?.patterns.clone())
}

/// Zero-weight subset `𝒵_μ` in canonical order (empty unless `m` divides `|μ|`).
pub fn zero_weight_states(mu: &Partition) -> Result<Vec<GtPattern>> {
    Ok(enumerate_patterns(mu)?.into_iter().filter(is_zero_weight).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rep_theory::{dim, pieri_decompose, symmetric_label};

    fn p(v: &[u32]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    fn pat(rows: &[&[u32]]) -> GtPattern {
        GtPattern::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    // counts interlacing triangles without the recursive generator
    fn brute_count(mu: &[u32]) -> usize {
        if mu.len() == 1 {
            return 1;
        }
        let ranges: Vec<std::ops::RangeInclusive<u32>> = (0..mu.len() - 1).map(|j| mu[j + 1]..=mu[j]).collect();
        let mut total = 0;
        let mut idx: Vec<u32> = ranges.iter().map(|r| *r.start()).collect();
        loop {
            total += brute_count(&idx);
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return total;
                }
                if idx[k] < *ranges[k].end() {
                    idx[k] += 1;
                    break;
                }
                idx[k] = *ranges[k].start();
                k += 1;
            }
        }
    }

    #[test]
    fn pattern_counts() {
        assert_eq!(enumerate_patterns(&p(&[1, 0])).unwrap().len(), 2);
        assert_eq!(enumerate_patterns(&p(&[2, 1, 0])).unwrap().len(), 8);
        assert_eq!(brute_count(&[2, 1, 0]), 8);
        let zero = enumerate_patterns(&p(&[0, 0, 0])).unwrap();
        assert_eq!(zero, vec![pat(&[&[0, 0, 0], &[0, 0], &[0]])]);
    }

    #[test]
    fn counts_match_weyl_dimension() {
        for n in 0..=3 {
            for m in 1..=4 {
                for mu in pieri_decompose(&symmetric_label(n, m)).unwrap().irreps {
                    let c = enumerate_patterns(&mu).unwrap().len();
                    assert_eq!(c as u64, dim(&mu), "{mu}");
                    assert_eq!(c, brute_count(mu.parts()), "{mu}");
                }
            }
        }
    }

    #[test]
    fn occupations() {
        assert_eq!(occupation(&pat(&[&[1, 0], &[1]])), vec![1, 0]);
        assert_eq!(occupation(&pat(&[&[0, 0], &[0]])), vec![0, 0]);
        assert_eq!(occupation(&pat(&[&[2, 1, 0], &[1, 1], &[1]])), vec![1, 1, 1]);
    }

    #[test]
    fn weights() {
        assert_eq!(weight(&pat(&[&[2, 1, 0], &[1, 1], &[1]])), vec![0, 0]);
        assert_eq!(weight(&pat(&[&[1, 0], &[1]])), vec![1]);
        assert_eq!(weight(&pat(&[&[1, 0], &[0]])), vec![-1]);
    }

    #[test]
    fn zero_weight_sets() {
        let z = zero_weight_states(&p(&[2, 1, 0])).unwrap();
        assert_eq!(
            z,
            vec![pat(&[&[2, 1, 0], &[2, 0], &[1]]), pat(&[&[2, 1, 0], &[1, 1], &[1]]),]
        );
        assert!(zero_weight_states(&p(&[1, 0])).unwrap().is_empty());
        assert_eq!(zero_weight_states(&p(&[2, 0])).unwrap(), vec![pat(&[&[2, 0], &[1]])]);
        assert_eq!(zero_weight_states(&p(&[4, 2, 0])).unwrap().len(), 3);
        assert!(zero_weight_states(&p(&[2, 0, 0])).unwrap().is_empty());
    }

    #[test]
    fn fock_patterns() {
        assert_eq!(fock_to_gt(&[1, 0]), pat(&[&[1, 0], &[1]]));
        assert_eq!(fock_to_gt(&[0, 0]), pat(&[&[0, 0], &[0]]));
        for m in 1..=3usize {
            for total in 0..=3u32 {
                let basis = GtBasis::new(&symmetric_label(total, m)).unwrap();
                for pattern in &basis.patterns {
                    let occ: Vec<u32> = occupation(pattern).iter().map(|&x| x as u32).collect();
                    assert_eq!(&fock_to_gt(&occ), pattern);
                    assert_eq!(occupation(&fock_to_gt(&occ)), occupation(pattern));
                }
            }
        }
    }

    #[test]
    fn fundamental_order_is_mode_order() {
        let basis = GtBasis::new(&p(&[1, 0, 0])).unwrap();
        let occ: Vec<Vec<i64>> = basis.patterns.iter().map(occupation).collect();
        assert_eq!(occ, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn weight_diagrams_are_symmetric_and_traceless() {
        for mu in [
            p(&[1, 0]),
            p(&[2, 0]),
            p(&[3, 0]),
            p(&[2, 1, 0]),
            p(&[4, 2, 0]),
            p(&[2, 0, 0]),
        ] {
            let ws: Vec<Vec<i64>> = enumerate_patterns(&mu).unwrap().iter().map(weight).collect();
            let mut pos = ws.clone();
            let mut neg: Vec<Vec<i64>> = ws.iter().map(|w| w.iter().map(|x| -x).collect()).collect();
            pos.sort();
            neg.sort();
            // negation symmetry holds for self-conjugate irreps and for SU(2)
            if mu.rank() == 2
                || crate::rep_theory::reduce_label(&crate::rep_theory::dual_irrep(&mu))
                    == crate::rep_theory::reduce_label(&mu)
            {
                assert_eq!(pos, neg, "{mu}");
            }
            for k in 0..mu.rank() - 1 {
                assert_eq!(ws.iter().map(|w| w[k]).sum::<i64>(), 0, "{mu}");
            }
        }
    }

    #[test]
    fn invalid_patterns_rejected() {
        assert!(GtPattern::new(vec![vec![1, 0], vec![2]]).is_err());
        assert!(GtPattern::new(vec![vec![1, 0], vec![1, 0]]).is_err());
    }
}
