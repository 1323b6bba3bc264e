//! Built-in identity suite: character tables, immanant expansions, the
//! zero-weight trace identity, Pieri decompositions, cost counts and the
//! Casimir projectors.

use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::immanant::{determinant, immanant, permanent};
use crate::irrep_matrices::{casimir_projectors, gamma_unitary};
use crate::kostant_check::{su3_adjoint_example, verify_kostant};
use crate::rep_theory::{cost_counts, dim, pieri_decompose, symmetric_label, Partition};
use crate::simulator::{haar_su_matrix, stream_rng};
use crate::symmetric_group::{character, cycle_type};
use crate::{CMatrix, C64};

/// Deliberate corruption of one computed quantity, used to show that the
/// suite reports the failing item by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    CharacterTable,
    Immanant,
    Kostant,
    Pieri,
    Projector,
}

impl FromStr for Fault {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "character-table" => Ok(Fault::CharacterTable),
            "immanant" => Ok(Fault::Immanant),
            "kostant" => Ok(Fault::Kostant),
            "pieri" => Ok(Fault::Pieri),
            "projector" => Ok(Fault::Projector),
            _ => Err(Error::Config(format!(
                "unknown fault '{s}' (character-table, immanant, kostant, pieri, projector)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheckReport {
    pub items: Vec<CheckItem>,
    pub passed: usize,
    pub failed: usize,
}

impl SelfCheckReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckItem> {
        self.items.iter().filter(|i| !i.pass)
    }
}

fn p(v: &[u32]) -> Partition {
    Partition::new(v.to_vec()).expect("valid literal")
}

/// Columns e, (12), (13), (23), (123), (132) as image vectors.
const S3_ELEMENTS: [[usize; 3]; 6] = [[0, 1, 2], [1, 0, 2], [2, 1, 0], [0, 2, 1], [1, 2, 0], [2, 0, 1]];
const S3_TABLE: [(&[u32], [i64; 6]); 3] = [
    (&[3, 0, 0], [1, 1, 1, 1, 1, 1]),
    (&[2, 1, 0], [2, 0, 0, 0, -1, -1]),
    (&[1, 1, 1], [1, -1, -1, -1, 1, 1]),
];
const S2_ELEMENTS: [[usize; 2]; 2] = [[0, 1], [1, 0]];
const S2_TABLE: [(&[u32], [i64; 2]); 2] = [(&[2, 0], [1, 1]), (&[1, 1], [1, -1])];

fn check_table<const D: usize, const C: usize>(
    elements: &[[usize; D]; C],
    table: &[(&[u32], [i64; C])],
    fault: bool,
) -> Result<(bool, String)> {
    let mut mismatches = Vec::new();
    for (r, (label, want)) in table.iter().enumerate() {
        let kappa = p(label);
        for (c, perm) in elements.iter().enumerate() {
            let mut got = character(&kappa, &cycle_type(perm)?)?;
            if fault && r == 1 && c == 0 {
                got = -got;
            }
            if got != want[c] {
                mismatches.push(format!("chi_{kappa}({perm:?}) = {got}, expected {}", want[c]));
            }
        }
    }
    let n = table.len() * C;
    Ok(if mismatches.is_empty() {
        (true, format!("{n} entries match"))
    } else {
        (false, mismatches.join("; "))
    })
}

fn random_matrix(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| {
        C64::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
    })
}

/// `|a − b|` over the sum of the absolute values of the expansion's terms.
fn rel_err(a: C64, b: C64, scale: f64) -> f64 {
    (a - b).norm() / scale.max(f64::MIN_POSITIVE)
}

fn check_immanants(trials: usize, seed: u64, fault: bool) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let u = random_matrix(3, &mut rng);
        let e = |i: usize, j: usize| u[(i - 1, j - 1)];
        let even = [
            e(1, 1) * e(2, 2) * e(3, 3),
            e(1, 2) * e(2, 3) * e(3, 1),
            e(1, 3) * e(2, 1) * e(3, 2),
        ];
        let odd = [
            e(1, 2) * e(2, 1) * e(3, 3),
            e(1, 3) * e(2, 2) * e(3, 1),
            e(1, 1) * e(2, 3) * e(3, 2),
        ];
        let scale: f64 = even.iter().chain(&odd).map(|z| z.norm()).sum();
        let se: C64 = even.iter().sum();
        let so: C64 = odd.iter().sum();
        let expansions = [
            (p(&[3, 0, 0]), se + so),
            (p(&[1, 1, 1]), se - so),
            (p(&[2, 1, 0]), even[0] * 2.0 - even[1] - even[2]),
        ];
        for (kappa, want) in expansions {
            let mut got = immanant(&kappa, &u)?;
            if fault {
                got *= 1.0 + 1e-6;
            }
            worst = worst.max(rel_err(got, want, scale));
        }
        let u2 = random_matrix(2, &mut rng);
        let a = u2[(0, 0)] * u2[(1, 1)];
        let b = u2[(0, 1)] * u2[(1, 0)];
        let scale2 = a.norm() + b.norm();
        for (kappa, want) in [(p(&[2, 0]), a + b), (p(&[1, 1]), a - b)] {
            worst = worst.max(rel_err(immanant(&kappa, &u2)?, want, scale2));
        }
        worst = worst.max(rel_err(permanent(&u2)?, a + b, scale2));
        worst = worst.max(rel_err(determinant(&u2)?, a - b, scale2));
    }
    Ok((
        worst < 1e-12,
        format!("{trials} matrices, max relative error {worst:.2e}"),
    ))
}

fn check_kostant(fault: bool) -> Result<Vec<(String, bool, String)>> {
    let mut out = Vec::new();
    for (label, tol, seed) in [(p(&[2, 1, 0]), 1e-9, 11), (p(&[2, 0]), 1e-10, 12)] {
        let r = verify_kostant(&label, 100, seed, tol)?;
        let residual = if fault { r.max_residual + 1e-6 } else { r.max_residual };
        out.push((
            format!("kostant.{label}"),
            residual < tol,
            format!("100 Haar samples, max |zero-weight trace - immanant| = {residual:.2e} (tol {tol:.0e})"),
        ));
    }
    let ex = su3_adjoint_example(100, 13)?;
    out.push((
        "kostant.su3_worked_example".into(),
        ex.pass,
        format!(
            "identity diagonals {:?} sum to {} = imm {}; sum residual {:.2e}; single diagonals deviate up to {:.2e}",
            ex.identity_diagonals, ex.identity_sum, ex.identity_immanant, ex.max_sum_residual, ex.max_single_deviation
        ),
    ));
    Ok(out)
}

fn check_pieri(fault: bool) -> Result<Vec<(String, bool, String)>> {
    let mut out = Vec::new();
    let examples = [
        (p(&[1, 0]), vec![p(&[1, 1]), p(&[2, 0])]),
        (p(&[2, 0, 0]), vec![p(&[2, 2, 2]), p(&[3, 2, 1]), p(&[4, 2, 0])]),
    ];
    for (lambda, want) in examples {
        let mut got = pieri_decompose(&lambda)?.irreps;
        if fault {
            got.pop();
        }
        let ok = got == want;
        out.push((
            format!("pieri.{lambda}"),
            ok,
            format!(
                "got {}",
                got.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" ")
            ),
        ));
    }
    let mut bad = Vec::new();
    for (n, m) in [(1, 2), (2, 2), (3, 2), (1, 3), (2, 3)] {
        let lambda = symmetric_label(n, m);
        let total: u64 = pieri_decompose(&lambda)?.irreps.iter().map(dim).sum();
        let dl = dim(&lambda);
        if total != dl * dl {
            bad.push(format!("{lambda}: sum d_mu = {total} != {}", dl * dl));
        }
    }
    out.push((
        "pieri.dimension_sum".into(),
        bad.is_empty(),
        if bad.is_empty() {
            "sum d_mu = d_lambda^2 for all five cases".into()
        } else {
            bad.join("; ")
        },
    ));
    // (λ, ♯_λ − 1, ♯_λ − 1 + d_λ)
    let mut bad = Vec::new();
    for (n, m, imm, perms) in [(1, 2, 1, 3), (2, 2, 2, 5), (1, 3, 1, 4), (2, 3, 2, 8)] {
        let c = cost_counts(&symmetric_label(n, m))?;
        if c.immanants != imm || c.permanents_original != perms {
            bad.push(format!("(n,m)=({n},{m}): {c:?}"));
        }
    }
    out.push((
        "cost_counts".into(),
        bad.is_empty(),
        if bad.is_empty() {
            "immanant and permanent counts as expected".into()
        } else {
            bad.join("; ")
        },
    ));
    Ok(out)
}

/// Completeness, orthogonality, traces and commutation with `Γ(U)`.
pub fn projector_defects(n: u32, m: usize, samples: usize, seed: u64, fault: bool) -> Result<f64> {
    let lambda = symmetric_label(n, m);
    let sr = casimir_projectors(&lambda)?;
    let mut ps = sr.projectors.clone();
    if fault {
        ps[0] *= C64::new(1.001, 0.0);
    }
    let d2 = sr.d_lambda() * sr.d_lambda();
    let id = CMatrix::identity(d2, d2);
    let mut worst = (ps.iter().fold(CMatrix::zeros(d2, d2), |a, b| a + b) - &id).norm();
    for (i, a) in ps.iter().enumerate() {
        worst = worst.max((a.trace() - C64::new(sr.dims[i] as f64, 0.0)).norm());
        for (j, b) in ps.iter().enumerate() {
            let target = if i == j { a.clone() } else { CMatrix::zeros(d2, d2) };
            worst = worst.max((a * b - target).norm());
        }
    }
    for s in 0..samples {
        let u = haar_su_matrix(m, &mut stream_rng(seed, s as u64));
        let g = gamma_unitary(n, m, &u)?;
        for a in &ps {
            worst = worst.max((&g * a - a * &g).norm());
        }
    }
    Ok(worst)
}

fn timed<F>(items: &mut Vec<CheckItem>, f: F)
where
    F: FnOnce() -> Result<Vec<(String, bool, String)>>,
{
    let start = Instant::now();
    let res = f();
    let millis = start.elapsed().as_secs_f64() * 1e3;
    match res {
        Ok(list) => {
            let each = millis / list.len().max(1) as f64;
            for (name, pass, detail) in list {
                items.push(CheckItem {
                    name,
                    pass,
                    detail,
                    millis: each,
                });
            }
        }
        Err(e) => items.push(CheckItem {
            name: "error".into(),
            pass: false,
            detail: e.to_string(),
            millis,
        }),
    }
}

/// Runs the whole suite. `fault` corrupts one computed quantity.
pub fn run_selfcheck(fault: Option<Fault>) -> SelfCheckReport {
    let is = |f: Fault| fault == Some(f);
    let mut items = Vec::new();
    timed(&mut items, || {
        let (a, da) = check_table(&S2_ELEMENTS, &S2_TABLE, false)?;
        let (b, db) = check_table(&S3_ELEMENTS, &S3_TABLE, is(Fault::CharacterTable))?;
        Ok(vec![("characters.S2".into(), a, da), ("characters.S3".into(), b, db)])
    });
    timed(&mut items, || {
        let (ok, d) = check_immanants(100, 2024, is(Fault::Immanant))?;
        Ok(vec![("immanant.expansions".into(), ok, d)])
    });
    timed(&mut items, || check_kostant(is(Fault::Kostant)));
    timed(&mut items, || check_pieri(is(Fault::Pieri)));
    for (n, m) in [(1, 2), (2, 3)] {
        timed(&mut items, || {
            let worst = projector_defects(n, m, 20, 77, is(Fault::Projector))?;
            Ok(vec![(
                format!("projectors.n{n}_m{m}"),
                worst < 1e-9,
                format!("largest defect {worst:.2e} over 20 random unitaries"),
            )])
        });
    }
    let failed = items.iter().filter(|i| !i.pass).count();
    SelfCheckReport {
        passed: items.len() - failed,
        failed,
        items,
    }
}
