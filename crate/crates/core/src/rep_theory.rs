//! Partitions as SU(m) irrep labels, duals, the Pieri decomposition of
//! `λ ⊗ λ*` for symmetric `λ`, and Weyl dimensions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weakly decreasing tuple of non-negative integers.
///
/// When used as an SU(m) label the tuple is padded with zeros to length `m`,
/// so `rank()` is the group rank.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::RepTheory(format!("parts {parts:?} are not weakly decreasing")));
        }
        Ok(Partition(parts))
    }

    /// Validates `parts` and pads with zeros to exactly `m` entries.
    pub fn with_rank(parts: Vec<u32>, m: usize) -> Result<Self> {
        let p = Self::new(parts)?;
        p.padded(m)
    }

    pub fn padded(&self, m: usize) -> Result<Self> {
        let nonzero = self.0.iter().filter(|&&x| x > 0).count();
        if nonzero > m {
            return Err(Error::RepTheory(format!("{self} has more than {m} nonzero rows")));
        }
        let mut parts: Vec<u32> = self.0.iter().copied().take(m).collect();
        parts.resize(m, 0);
        Ok(Partition(parts))
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    /// Number of boxes.
    pub fn size(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn first(&self) -> u32 {
        self.0.first().copied().unwrap_or(0)
    }

    /// Nonzero parts only.
    pub fn trimmed(&self) -> Vec<u32> {
        self.0.iter().copied().filter(|&x| x > 0).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// `(n, 0, …, 0)`.
    pub fn is_symmetric(&self) -> bool {
        self.0.iter().skip(1).all(|&x| x == 0)
    }
}

impl TryFrom<Vec<u32>> for Partition {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        Partition::new(v)
    }
}

impl From<Partition> for Vec<u32> {
    fn from(p: Partition) -> Self {
        p.0
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Parses `2,1,0`, `(2,1,0)` or `2 1 0`.
impl FromStr for Partition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts = inner
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| Error::RepTheory(format!("bad partition entry '{t}' in '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if parts.is_empty() {
            return Err(Error::RepTheory(format!("empty partition '{s}'")));
        }
        Partition::new(parts)
    }
}

/// Label `(n, 0, …, 0)` of the n-photon space on `m` modes.
pub fn symmetric_label(n: u32, m: usize) -> Partition {
    assert!(m >= 1, "mode count must be positive");
    let mut parts = vec![0; m];
    parts[0] = n;
    Partition(parts)
}

/// Complement of `λ` in the `m × λ₁` rectangle: `λ*_i = λ₁ − λ_{m+1−i}`.
pub fn dual_irrep(lambda: &Partition) -> Partition {
    let p = lambda.parts();
    let m = p.len();
    let top = lambda.first();
    Partition((0..m).map(|i| top - p[m - 1 - i]).collect())
}

/// Subtracts the last part from every row (full columns are trivial in SU(m)).
pub fn reduce_label(mu: &Partition) -> Partition {
    let last = mu.parts().last().copied().unwrap_or(0);
    Partition(mu.parts().iter().map(|&x| x - last).collect())
}

/// Weyl dimension `∏_{i<j} (μ_i − μ_j + j − i)/(j − i)`.
pub fn dim(mu: &Partition) -> u64 {
    let p = mu.parts();
    let m = p.len();
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..m {
        for j in (i + 1)..m {
            num *= u128::from(p[i] - p[j]) + (j - i) as u128;
            den *= (j - i) as u128;
        }
    }
    debug_assert_eq!(num % den, 0);
    (num / den) as u64
}

/// Eigenvalue of the quadratic Casimir `Σ_ij E_ij E_ji` restricted to su(m),
/// i.e. with the u(1) charge removed: `Σ μ_i(μ_i + m + 1 − 2i) − |μ|²/m`.
pub fn casimir_eigenvalue(mu: &Partition) -> f64 {
    let m = mu.rank();
    let mut c = 0.0;
    for (idx, &x) in mu.parts().iter().enumerate() {
        let i = (idx + 1) as f64;
        let x = f64::from(x);
        c += x * (x + m as f64 + 1.0 - 2.0 * i);
    }
    let size = f64::from(mu.size());
    c - size * size / m as f64
}

/// All partitions with at most `m` rows obtained from `base` by adding `boxes`
/// boxes, no two in the same column (horizontal strips). Sorted by first row.
pub fn add_horizontal_strip(base: &Partition, boxes: u32, m: usize) -> Vec<Partition> {
    let base = base.padded(m).expect("base partition exceeds rank");
    let b = base.parts();
    let mut out = Vec::new();
    let mut cur = vec![0u32; m];
    fn rec(i: usize, left: u32, b: &[u32], cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
        let m = b.len();
        if i == m {
            if left == 0 {
                out.push(Partition(cur.clone()));
            }
            return;
        }
        // row i may grow up to the previous row of the base shape
        let cap = if i == 0 { b[0] + left } else { b[i - 1] };
        let hi = cap.min(b[i] + left);
        for v in b[i]..=hi {
            cur[i] = v;
            rec(i + 1, left - (v - b[i]), b, cur, out);
        }
    }
    rec(0, boxes, b, &mut cur, &mut out);
    out.sort();
    out
}

/// Multiplicity-free list of irreps in `λ ⊗ λ*`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub lambda: Partition,
    pub irreps: Vec<Partition>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.irreps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.irreps.is_empty()
    }

    /// Index of the irrep whose reduced label is `label` (reduced or not).
    pub fn position(&self, label: &Partition) -> Option<usize> {
        let target = reduce_label(label);
        self.irreps.iter().position(|mu| reduce_label(mu) == target)
    }
}

/// Pieri decomposition of `λ ⊗ λ*` for a symmetric label `λ = (n, 0, …, 0)`:
/// the horizontal `n`-strips added to `λ*`, i.e.
/// `μ_k = (n + k, n, …, n, n − k)` for `k = 0..=n`.
pub fn pieri_decompose(lambda: &Partition) -> Result<Decomposition> {
    if !lambda.is_symmetric() {
        return Err(Error::RepTheory(format!(
            "pieri_decompose needs a symmetric label (n,0,…,0), got {lambda}"
        )));
    }
    let m = lambda.rank();
    if m == 0 {
        return Err(Error::RepTheory("rank must be positive".into()));
    }
    let n = lambda.first();
    let irreps = add_horizontal_strip(&dual_irrep(lambda), n, m);
    Ok(Decomposition {
        lambda: lambda.clone(),
        irreps,
    })
}

/// Filter cost comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostCounts {
    /// Immanants needed by the immanant filter: `♯_λ − 1`.
    pub immanants: u64,
    /// Lower bound on permanents needed by the projector-based filter: `♯_λ − 1 + d_λ`.
    pub permanents_original: u64,
}

pub fn cost_counts(lambda: &Partition) -> Result<CostCounts> {
    let dec = pieri_decompose(lambda)?;
    let sharp = dec.len() as u64;
    Ok(CostCounts {
        immanants: sharp - 1,
        permanents_original: sharp - 1 + dim(lambda),
    })
}
