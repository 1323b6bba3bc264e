//! Matrix realisations of SU(m) irreps.
//!
//! * [`symmetric_matrix`]: the n-photon (symmetric) irrep from permanents of
//!   submatrices of `U`.
//! * [`generators`] / [`lift`]: any irrep in the Gelfand–Tsetlin basis from the
//!   explicit matrix elements of the raising operators `E_{l,l+1}`.
//! * [`gamma_unitary`]: `Γ(U) = 𝒰 ⊗ conj(𝒰)` acting on row-stacked density matrices.
//! * [`casimir_projectors`]: isotypic projectors of `Γ` from its quadratic Casimir.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::gt_basis::{occupation, weight, GtBasis, GtPattern};
use crate::immanant::permanent;
use crate::linalg::{conj, exp_i_hermitian, hermiticity_defect, kron, su_log, unitarity_defect};
use crate::rep_theory::{casimir_eigenvalue, dim, pieri_decompose, symmetric_label, Decomposition, Partition};
use crate::{CMatrix, C64};

/// Tolerance on unitarity / hermiticity of inputs.
pub const INPUT_TOL: f64 = 1e-10;

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn factorial(k: i64) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

fn check_unitary(u: &CMatrix) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(Error::IrrepMatrices(format!(
            "expected a square matrix, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    let defect = unitarity_defect(u);
    if defect > INPUT_TOL * (u.nrows() as f64).sqrt().max(1.0) {
        return Err(Error::IrrepMatrices(format!(
            "input is not unitary (‖U†U − I‖ = {defect:.3e})"
        )));
    }
    Ok(())
}

/// Occupation vectors of the n-photon basis, in canonical GT order.
pub fn fock_basis(n: u32, m: usize) -> Result<Vec<Vec<u32>>> {
    let basis = GtBasis::cached(&symmetric_label(n, m))?;
    Ok(basis
        .patterns
        .iter()
        .map(|p| occupation(p).into_iter().map(|x| x as u32).collect())
        .collect())
}

/// `⟨k|𝒰|l⟩ = per(U[k|l]) / √(∏ k_i! ∏ l_j!)` on the n-photon space.
pub fn symmetric_matrix(n: u32, m: usize, u: &CMatrix) -> Result<CMatrix> {
    check_unitary(u)?;
    if u.nrows() != m {
        return Err(Error::IrrepMatrices(format!(
            "matrix is {}x{}, expected {m}x{m}",
            u.nrows(),
            u.ncols()
        )));
    }
    let basis = fock_basis(n, m)?;
    let d = basis.len();
    let expand = |occ: &[u32]| -> Vec<usize> {
        occ.iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize))
            .collect()
    };
    let norm = |occ: &[u32]| -> f64 { occ.iter().map(|&c| factorial(i64::from(c))).product() };
    let idx: Vec<Vec<usize>> = basis.iter().map(|o| expand(o)).collect();
    let norms: Vec<f64> = basis.iter().map(|o| norm(o)).collect();
    let nn = n as usize;
    let mut out = CMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let sub = CMatrix::from_fn(nn, nn, |i, j| u[(idx[a][i], idx[b][j])]);
            out[(a, b)] = permanent(&sub)? / (norms[a] * norms[b]).sqrt();
        }
    }
    Ok(out)
}

/// Generator matrices of one irrep in its GT basis.
#[derive(Debug, Clone)]
pub struct IrrepMatrixSet {
    pub mu: Partition,
    pub basis: Arc<GtBasis>,
    /// `E_i = E_{i,i+1}`, `i = 1..m−1` (stored 0-based).
    pub raising: Vec<CMatrix>,
    /// `F_i = E_{i+1,i} = E_iᵀ`.
    pub lowering: Vec<CMatrix>,
    /// `H_i = E_{ii} − E_{i+1,i+1}`, diagonal with the weight components.
    pub cartan: Vec<CMatrix>,
    /// All `E_{ij}` of gl(m): `units[i][j]`.
    units: Vec<Vec<CMatrix>>,
}

impl IrrepMatrixSet {
    pub fn rank(&self) -> usize {
        self.mu.rank()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Representation matrix of the gl(m) unit `E_{ij}` (0-based).
    pub fn unit(&self, i: usize, j: usize) -> &CMatrix {
        &self.units[i][j]
    }

    /// `dΓ(A) = Σ_ij A_ij E_ij`.
    pub fn algebra_element(&self, a: &CMatrix) -> Result<CMatrix> {
        let m = self.rank();
        if a.nrows() != m || a.ncols() != m {
            return Err(Error::IrrepMatrices(format!(
                "algebra element is {}x{}, expected {m}x{m}",
                a.nrows(),
                a.ncols()
            )));
        }
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for i in 0..m {
            for j in 0..m {
                let c = a[(i, j)];
                if c != C64::new(0.0, 0.0) {
                    out += &self.units[i][j] * c;
                }
            }
        }
        Ok(out)
    }

    /// Quadratic Casimir `Σ_ij E_ij E_ji − N²/m` (N the total occupation).
    pub fn casimir(&self) -> CMatrix {
        let m = self.rank();
        let d = self.dim();
        let mut c = CMatrix::zeros(d, d);
        for i in 0..m {
            for j in 0..m {
                c += &self.units[i][j] * &self.units[j][i];
            }
        }
        let size = f64::from(self.mu.size());
        c - CMatrix::identity(d, d) * real(size * size / m as f64)
    }
}

/// Matrix element `⟨M + δ_{k,l}|E_{l,l+1}|M⟩` from the Gelfand–Tsetlin formula,
/// with `p_{k,l} = m_{k,l} − k` (1-based `k`).
fn raising_element(pattern: &GtPattern, l: usize, k: usize) -> f64 {
    let p = |row: &[u32], k1: usize| -> f64 { f64::from(row[k1 - 1]) - k1 as f64 };
    let row_l = pattern.row_with_len(l);
    let row_up = pattern.row_with_len(l + 1);
    let pkl = p(row_l, k);
    let mut num = -1.0;
    for k1 in 1..=l + 1 {
        num *= p(row_up, k1) - pkl;
    }
    if l >= 2 {
        let row_down = pattern.row_with_len(l - 1);
        for k1 in 1..l {
            num *= p(row_down, k1) - pkl - 1.0;
        }
    }
    let mut den = 1.0;
    for k1 in (1..=l).filter(|&k1| k1 != k) {
        let diff = p(row_l, k1) - pkl;
        den *= diff * (diff - 1.0);
    }
    let ratio = num / den;
    debug_assert!(ratio > -1e-9, "negative GT matrix element squared {ratio}");
    ratio.max(0.0).sqrt()
}

impl IrrepMatrixSet {
    pub fn new(mu: &Partition) -> Result<Self> {
        let basis = GtBasis::cached(mu)?;
        let m = mu.rank();
        let d = basis.len();
        let mut raising = Vec::with_capacity(m.saturating_sub(1));
        for l in 1..m {
            let mut e = CMatrix::zeros(d, d);
            for (col, pattern) in basis.patterns.iter().enumerate() {
                for k in 1..=l {
                    let mut rows = pattern.rows.clone();
                    rows[m - l][k - 1] += 1;
                    let Some(row) = basis.index_of(&GtPattern { rows }) else {
                        continue;
                    };
                    e[(row, col)] = real(raising_element(pattern, l, k));
                }
            }
            raising.push(e);
        }
        let lowering: Vec<CMatrix> = raising.iter().map(|e| e.transpose()).collect();
        let occupations: Vec<Vec<i64>> = basis.patterns.iter().map(occupation).collect();
        let diag = |i: usize| {
            CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                d,
                occupations.iter().map(|o| real(o[i] as f64)),
            ))
        };
        let cartan = (0..m.saturating_sub(1))
            .map(|i| {
                CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    d,
                    basis.patterns.iter().map(|p| real(weight(p)[i] as f64)),
                ))
            })
            .collect();

        let mut units = vec![vec![CMatrix::zeros(d, d); m]; m];
        for (i, row) in units.iter_mut().enumerate() {
            row[i] = diag(i);
        }
        for i in 0..m.saturating_sub(1) {
            units[i][i + 1] = raising[i].clone();
            units[i + 1][i] = lowering[i].clone();
        }
        // E_ij = [E_{i,i+1}, E_{i+1,j}] for j > i + 1
        for gap in 2..m {
            for i in 0..m - gap {
                let j = i + gap;
                let a = &units[i][i + 1];
                let b = &units[i + 1][j];
                let c = a * b - b * a;
                units[j][i] = c.transpose();
                units[i][j] = c;
            }
        }
        Ok(IrrepMatrixSet {
            mu: mu.clone(),
            basis,
            raising,
            lowering,
            cartan,
            units,
        })
    }
}

/// Shared generator set for `μ`, built on first use.
pub fn generators(mu: &Partition) -> Result<Arc<IrrepMatrixSet>> {
    static CACHE: OnceLock<Mutex<HashMap<Partition, Arc<IrrepMatrixSet>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(g) = cache.lock().expect("poisoned").get(mu) {
        return Ok(g.clone());
    }
    let set = Arc::new(IrrepMatrixSet::new(mu)?);
    cache.lock().expect("poisoned").insert(mu.clone(), set.clone());
    Ok(set)
}

/// `Γ_μ(exp(iA))` for traceless Hermitian `A`.
pub fn lift(mu: &Partition, a: &CMatrix) -> Result<CMatrix> {
    let scale = a.norm().max(1.0);
    if hermiticity_defect(a) > INPUT_TOL * scale {
        return Err(Error::IrrepMatrices("algebra element is not Hermitian".into()));
    }
    if a.trace().norm() > INPUT_TOL * scale {
        return Err(Error::IrrepMatrices("algebra element is not traceless".into()));
    }
    let set = generators(mu)?;
    let h = set.algebra_element(a)?;
    Ok(exp_i_hermitian(&h))
}

/// `Γ_μ(U)` for `U ∈ SU(m)`, through a logarithm of `U`.
pub fn lift_unitary(mu: &Partition, u: &CMatrix) -> Result<CMatrix> {
    check_unitary(u)?;
    lift(mu, &su_log(u)?)
}

/// `Γ(U) = 𝒰 ⊗ conj(𝒰)` on the n-photon space, with `vec` stacking rows.
pub fn gamma_unitary(n: u32, m: usize, u: &CMatrix) -> Result<CMatrix> {
    let s = symmetric_matrix(n, m, u)?;
    Ok(kron(&s, &conj(&s)))
}

/// Superoperator `Σ_k K_k ⊗ conj(K_k)` of a Kraus family.
pub fn superoperator(kraus: &[CMatrix]) -> Result<CMatrix> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::IrrepMatrices("empty Kraus family".into()))?;
    let (r, c) = first.shape();
    let mut out = CMatrix::zeros(r * r, c * c);
    for k in kraus {
        if k.shape() != (r, c) {
            return Err(Error::IrrepMatrices("Kraus operators differ in shape".into()));
        }
        out += kron(k, &conj(k));
    }
    Ok(out)
}

/// Row-stacked `vec(ρ)`.
pub fn vectorize(rho: &CMatrix) -> nalgebra::DVector<C64> {
    let (r, c) = rho.shape();
    nalgebra::DVector::from_iterator(r * c, (0..r).flat_map(|i| (0..c).map(move |j| rho[(i, j)])))
}

/// Inverse of [`vectorize`] for square matrices.
pub fn unvectorize(v: &nalgebra::DVector<C64>) -> CMatrix {
    let d = (v.len() as f64).sqrt().round() as usize;
    CMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

/// `Γ` of a symmetric irrep together with its isotypic projectors.
#[derive(Debug, Clone)]
pub struct Superrep {
    pub lambda: Partition,
    pub decomposition: Decomposition,
    pub dims: Vec<u64>,
    pub casimir_values: Vec<f64>,
    /// `P_μ` in decomposition order, each `d_λ² × d_λ²`.
    pub projectors: Vec<CMatrix>,
}

impl Superrep {
    pub fn d_lambda(&self) -> usize {
        dim(&self.lambda) as usize
    }

    pub fn projector(&self, mu: &Partition) -> Result<&CMatrix> {
        let k = self
            .decomposition
            .position(mu)
            .ok_or_else(|| Error::IrrepMatrices(format!("{mu} does not occur in {}⊗{}*", self.lambda, self.lambda)))?;
        Ok(&self.projectors[k])
    }
}

/// Projectors onto the irreps `μ_k` of `λ ⊗ λ*` by Lagrange interpolation in
/// the Casimir of `Γ`.
pub fn casimir_projectors(lambda: &Partition) -> Result<Arc<Superrep>> {
    static CACHE: OnceLock<Mutex<HashMap<Partition, Arc<Superrep>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(s) = cache.lock().expect("poisoned").get(lambda) {
        return Ok(s.clone());
    }
    let built = Arc::new(build_projectors(lambda)?);
    cache.lock().expect("poisoned").insert(lambda.clone(), built.clone());
    Ok(built)
}

fn build_projectors(lambda: &Partition) -> Result<Superrep> {
    let decomposition = pieri_decompose(lambda).map_err(|e| Error::IrrepMatrices(e.to_string()))?;
    let set = generators(lambda)?;
    let m = lambda.rank();
    let d = set.dim();
    let id = CMatrix::identity(d, d);
    // 𝔊_ij = G_ij ⊗ I − I ⊗ G_ji
    let big = |i: usize, j: usize| kron(set.unit(i, j), &id) - kron(&id, set.unit(j, i));
    let dd = d * d;
    let mut casimir = CMatrix::zeros(dd, dd);
    for i in 0..m {
        for j in 0..m {
            casimir += big(i, j) * big(j, i);
        }
    }
    let values: Vec<f64> = decomposition.irreps.iter().map(casimir_eigenvalue).collect();
    for (a, &x) in values.iter().enumerate() {
        for &y in &values[a + 1..] {
            if (x - y).abs() < 1e-9 {
                return Err(Error::IrrepMatrices(format!(
                    "degenerate Casimir spectrum in {lambda}⊗{lambda}*"
                )));
            }
        }
    }
    let big_id = CMatrix::identity(dd, dd);
    let mut projectors = Vec::with_capacity(values.len());
    let mut dims = Vec::with_capacity(values.len());
    for (k, mu) in decomposition.irreps.iter().enumerate() {
        let mut p = big_id.clone();
        for (j, &cj) in values.iter().enumerate() {
            if j != k {
                p = p * (&casimir - &big_id * real(cj)) * real(1.0 / (values[k] - cj));
            }
        }
        let dmu = dim(mu);
        let tr = p.trace();
        if (tr.re - dmu as f64).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::IrrepMatrices(format!(
                "projector for {mu} has trace {tr}, expected {dmu}"
            )));
        }
        let idem = (&p * &p - &p).norm();
        if idem > 1e-8 {
            return Err(Error::IrrepMatrices(format!(
                "projector for {mu} is not idempotent (defect {idem:.3e})"
            )));
        }
        projectors.push(p);
        dims.push(dmu);
    }
    Ok(Superrep {
        lambda: lambda.clone(),
        decomposition,
        dims,
        casimir_values: values,
        projectors,
    })
}
