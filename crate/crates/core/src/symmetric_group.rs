//! Permutations, cycle types and irreducible characters of `S_d`.
//!
//! Characters are computed exactly with the Murnaghan–Nakayama rule on
//! beta-sets (first-column hook lengths).

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rep_theory::Partition;

/// Largest degree for which the group is enumerated element by element.
pub const MAX_DEGREE: usize = 8;

/// Cycle lengths of a permutation, weakly decreasing, summing to the degree.
pub type CycleType = Partition;

/// Permutation of `0..d` stored as its image vector: `i ↦ perm[i]`.
pub type Permutation = Vec<usize>;

pub fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

pub fn cycle_type(perm: &[usize]) -> Result<CycleType> {
    if !is_permutation(perm) {
        return Err(Error::SymmetricGroup(format!("{perm:?} is not a bijection")));
    }
    let mut seen = vec![false; perm.len()];
    let mut cycles = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        cycles.push(len as u32);
    }
    cycles.sort_unstable_by(|a, b| b.cmp(a));
    Partition::new(cycles)
}

/// All partitions of `d` in decreasing lexicographic order, each padded to `d` parts.
pub fn partitions_of(d: usize) -> Vec<Partition> {
    fn rec(left: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=max.min(left)).rev() {
            cur.push(part);
            rec(left - part, part, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(d as u32, d as u32, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|v| Partition::with_rank(v, d.max(1)).expect("generated partition"))
        .collect()
}

/// Number of permutations with the given cycle type: `d! / z_c`.
pub fn class_size(c: &CycleType) -> u64 {
    let d: u32 = c.size();
    let mut z: u64 = 1;
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for &k in c.trimmed().iter() {
        *counts.entry(k).or_default() += 1;
    }
    for (k, a) in counts {
        z *= u64::from(k).pow(a as u32) * factorial(a);
    }
    factorial(u64::from(d)) / z
}

pub(crate) fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

fn beta_set(parts: &[u32]) -> Vec<u32> {
    let l = parts.len() as u32;
    parts.iter().enumerate().map(|(i, &p)| p + l - 1 - i as u32).collect()
}

fn from_beta(mut beta: Vec<u32>) -> Vec<u32> {
    beta.sort_unstable_by(|a, b| b.cmp(a));
    let l = beta.len() as u32;
    let mut parts: Vec<u32> = beta.iter().enumerate().map(|(i, &b)| b - (l - 1 - i as u32)).collect();
    while parts.last() == Some(&0) {
        parts.pop();
    }
    parts
}

fn mn(shape: Vec<u32>, cycles: &[u32], memo: &mut HashMap<(Vec<u32>, usize), i64>) -> i64 {
    if cycles.is_empty() {
        return i64::from(shape.is_empty());
    }
    let key = (shape.clone(), cycles.len());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let r = cycles[0];
    let beta = beta_set(&shape);
    let mut total = 0;
    for (idx, &b) in beta.iter().enumerate() {
        if b < r {
            continue;
        }
        let target = b - r;
        if beta.contains(&target) {
            continue;
        }
        let crossed = beta.iter().filter(|&&x| x > target && x < b).count();
        let sign = if crossed % 2 == 0 { 1 } else { -1 };
        let mut next = beta.clone();
        next[idx] = target;
        total += sign * mn(from_beta(next), &cycles[1..], memo);
    }
    memo.insert(key, total);
    total
}

/// Irreducible character `χ_κ(c)` of `S_d`.
pub fn character(kappa: &Partition, class: &CycleType) -> Result<i64> {
    if kappa.size() != class.size() {
        return Err(Error::SymmetricGroup(format!(
            "partition {kappa} and cycle type {class} have different sizes"
        )));
    }
    let cycles = class.trimmed();
    let mut memo = HashMap::new();
    Ok(mn(kappa.trimmed(), &cycles, &mut memo))
}

/// Character table of `S_d`, rows indexed by partitions, columns by classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterTable {
    pub degree: usize,
    pub irreps: Vec<Partition>,
    pub classes: Vec<CycleType>,
    pub class_sizes: Vec<u64>,
    pub values: Vec<Vec<i64>>,
}

impl CharacterTable {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::SymmetricGroup("degree must be positive".into()));
        }
        let irreps = partitions_of(d);
        let classes: Vec<CycleType> = partitions_of(d)
            .into_iter()
            .rev()
            .map(|p| Partition::new(p.trimmed()).expect("valid"))
            .collect();
        let class_sizes = classes.iter().map(class_size).collect();
        let values = irreps
            .iter()
            .map(|k| classes.iter().map(|c| character(k, c)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(CharacterTable {
            degree: d,
            irreps,
            classes,
            class_sizes,
            values,
        })
    }

    /// Shared, lazily built table for degree `d`.
    pub fn cached(d: usize) -> Result<Arc<CharacterTable>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<CharacterTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(t) = cache.lock().expect("poisoned").get(&d) {
            return Ok(t.clone());
        }
        let table = Arc::new(CharacterTable::new(d)?);
        cache.lock().expect("poisoned").insert(d, table.clone());
        Ok(table)
    }

    pub fn irrep_index(&self, kappa: &Partition) -> Option<usize> {
        let t = kappa.trimmed();
        self.irreps.iter().position(|k| k.trimmed() == t)
    }

    pub fn class_index(&self, class: &CycleType) -> Option<usize> {
        let t = class.trimmed();
        self.classes.iter().position(|c| c.trimmed() == t)
    }

    pub fn get(&self, kappa: &Partition, class: &CycleType) -> Option<i64> {
        Some(self.values[self.irrep_index(kappa)?][self.class_index(class)?])
    }
}

impl fmt::Display for CharacterTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label_w = self
            .irreps
            .iter()
            .map(|p| p.to_string().len())
            .max()
            .unwrap_or(1)
            .max(6);
        let heads: Vec<String> = self.classes.iter().map(|c| c.to_string()).collect();
        let col_w: Vec<usize> = heads
            .iter()
            .enumerate()
            .map(|(j, h)| {
                let vals = self.values.iter().map(|r| r[j].to_string().len()).max().unwrap_or(1);
                h.len().max(vals).max(self.class_sizes[j].to_string().len())
            })
            .collect();
        write!(f, "{:<label_w$} |", "class")?;
        for (h, w) in heads.iter().zip(&col_w) {
            write!(f, " {h:>w$}")?;
        }
        writeln!(f)?;
        write!(f, "{:<label_w$} |", "size")?;
        for (s, w) in self.class_sizes.iter().zip(&col_w) {
            write!(f, " {s:>w$}")?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "{}",
            "-".repeat(label_w + 2 + col_w.iter().map(|w| w + 1).sum::<usize>())
        )?;
        for (k, row) in self.irreps.iter().zip(&self.values) {
            write!(f, "{:<label_w$} |", k.to_string())?;
            for (v, w) in row.iter().zip(&col_w) {
                write!(f, " {v:>w$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Every element of `S_d` with its class index into the character table.
#[derive(Debug)]
pub struct SymmetricGroup {
    pub degree: usize,
    pub elements: Vec<Permutation>,
    pub class_of: Vec<usize>,
    pub table: Arc<CharacterTable>,
}

impl SymmetricGroup {
    pub fn iter(&self) -> impl Iterator<Item = (&Permutation, &CycleType)> + '_ {
        self.elements
            .iter()
            .zip(&self.class_of)
            .map(move |(p, &c)| (p, &self.table.classes[c]))
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Enumerates `S_d` in lexicographic order of image vectors, with cycle types
/// resolved once. Built once per degree and shared.
pub fn enumerate_group(d: usize) -> Result<Arc<SymmetricGroup>> {
    enumerate_group_capped(d, MAX_DEGREE)
}

pub fn enumerate_group_capped(d: usize, cap: usize) -> Result<Arc<SymmetricGroup>> {
    if d > cap {
        return Err(Error::SymmetricGroup(format!(
            "S_{d} has {} elements; enumeration is capped at degree {cap}",
            factorial(d as u64)
        )));
    }
    if d == 0 {
        return Err(Error::SymmetricGroup("degree must be positive".into()));
    }
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SymmetricGroup>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(g) = cache.lock().expect("poisoned").get(&d) {
        return Ok(g.clone());
    }
    let table = CharacterTable::cached(d)?;
    let mut elements = Vec::with_capacity(factorial(d as u64) as usize);
    let mut perm: Vec<usize> = (0..d).collect();
    loop {
        elements.push(perm.clone());
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let class_of = elements
        .iter()
        .map(|p| {
            let c = cycle_type(p).expect("generated permutation");
            table.class_index(&c).expect("class present")
        })
        .collect();
    let group = Arc::new(SymmetricGroup {
        degree: d,
        elements,
        class_of,
        table,
    });
    cache.lock().expect("poisoned").insert(d, group.clone());
    Ok(group)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
