//! Numerical checks of the zero-weight trace identity: for a label `μ` whose
//! reduced form partitions `m`, the trace of `Γ_μ(U)` over the zero-weight
//! subspace equals `imm_μ(U)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gt_basis::GtBasis;
use crate::immanant::immanant_fast;
use crate::irrep_matrices::{lift, lift_unitary};
use crate::rep_theory::{reduce_label, Partition};
use crate::simulator::{haar_su, stream_rng};
use crate::{CMatrix, C64};

fn zero_indices(mu: &Partition) -> Result<Vec<usize>> {
    let idx = GtBasis::cached(mu)?.zero_weight_indices();
    if idx.is_empty() {
        return Err(Error::Kostant(format!("{mu} has no zero-weight space")));
    }
    Ok(idx)
}

/// `Σ_{ζ∈𝒵_μ} ⟨ζ|M|ζ⟩` for an already lifted matrix `M = Γ_μ(U)`.
pub fn zero_weight_trace_of_lift(mu: &Partition, lifted: &CMatrix) -> Result<C64> {
    Ok(zero_indices(mu)?.into_iter().map(|i| lifted[(i, i)]).sum())
}

/// Zero-weight diagonal entries `⟨ζ|Γ_μ(U)|ζ⟩` in canonical order.
pub fn zero_weight_diagonal(mu: &Partition, u: &CMatrix) -> Result<Vec<C64>> {
    let idx = zero_indices(mu)?;
    let lifted = lift_unitary(mu, u)?;
    Ok(idx.into_iter().map(|i| lifted[(i, i)]).collect())
}

/// Zero-weight trace of `Γ_μ(U)` for `U ∈ SU(m)`.
pub fn zero_weight_trace(mu: &Partition, u: &CMatrix) -> Result<C64> {
    Ok(zero_weight_diagonal(mu, u)?.into_iter().sum())
}

/// Zero-weight trace of `Γ_μ(exp(iA))`.
pub fn zero_weight_trace_algebra(mu: &Partition, a: &CMatrix) -> Result<C64> {
    zero_weight_trace_of_lift(mu, &lift(mu, a)?)
}

/// The partition of `m` equivalent to `μ` modulo full columns, if any: the
/// reduced label itself, or `(1, …, 1)` (the determinant) for trivial labels.
pub fn immanant_label(mu: &Partition) -> Option<Partition> {
    let m = mu.rank();
    let reduced = reduce_label(mu);
    match reduced.size() as usize {
        0 => Partition::new(vec![1; m]).ok(),
        s if s == m => Some(reduced),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KostantReport {
    pub mu: Partition,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_residual: f64,
    pub pass: bool,
}

/// Compares both sides on `trials` Haar-random elements of SU(m).
pub fn verify_kostant(mu: &Partition, trials: usize, seed: u64, tol: f64) -> Result<KostantReport> {
    let label = immanant_label(mu).ok_or_else(|| {
        Error::Kostant(format!(
            "{mu} has no immanant counterpart: its reduced label does not partition {}",
            mu.rank()
        ))
    })?;
    let m = mu.rank();
    let residuals = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (u, a) = haar_su(m, &mut stream_rng(seed, t as u64))?;
            let lhs = zero_weight_trace_algebra(mu, &a)?;
            let rhs = immanant_fast(&label, &u)?;
            Ok((lhs - rhs).norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_residual = residuals.into_iter().fold(0.0, f64::max);
    Ok(KostantReport {
        mu: mu.clone(),
        trials,
        seed,
        tol,
        max_residual,
        pass: max_residual < tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuThreeExample {
    /// Both zero-weight diagonals of `Γ_(2,1,0)` at the identity.
    pub identity_diagonals: Vec<f64>,
    pub identity_sum: f64,
    pub identity_immanant: f64,
    pub trials: usize,
    /// Largest `|Σ_ζ ⟨ζ|Γ(U)|ζ⟩ − imm(U)|` over the trials.
    pub max_sum_residual: f64,
    /// Largest `|⟨ζ|Γ(U)|ζ⟩ − imm(U)|` for single diagonals: they are not invariants.
    pub max_single_deviation: f64,
    pub pass: bool,
}

/// The SU(3) adjoint worked example: two zero-weight states whose diagonal
/// entries add up to `imm_(2,1,0)`.
pub fn su3_adjoint_example(trials: usize, seed: u64) -> Result<SuThreeExample> {
    let mu = Partition::new(vec![2, 1, 0])?;
    let id = CMatrix::identity(3, 3);
    let diag_id = zero_weight_diagonal(&mu, &id)?;
    let identity_immanant = immanant_fast(&mu, &id)?.re;
    let mut max_sum_residual: f64 = 0.0;
    let mut max_single_deviation: f64 = 0.0;
    for t in 0..trials {
        let (u, a) = haar_su(3, &mut stream_rng(seed, t as u64))?;
        let lifted = lift(&mu, &a)?;
        let idx = zero_indices(&mu)?;
        let imm = immanant_fast(&mu, &u)?;
        let sum: C64 = idx.iter().map(|&i| lifted[(i, i)]).sum();
        max_sum_residual = max_sum_residual.max((sum - imm).norm());
        for &i in &idx {
            max_single_deviation = max_single_deviation.max((lifted[(i, i)] - imm).norm());
        }
    }
    let identity_diagonals: Vec<f64> = diag_id.iter().map(|z| z.re).collect();
    let identity_sum: f64 = identity_diagonals.iter().sum();
    let pass = identity_diagonals.iter().all(|&x| (x - 1.0).abs() < 1e-12)
        && (identity_sum - identity_immanant).abs() < 1e-12
        && max_sum_residual < 1e-9
        && (trials == 0 || max_single_deviation > 1e-3);
    Ok(SuThreeExample {
        identity_diagonals,
        identity_sum,
        identity_immanant,
        trials,
        max_sum_residual,
        max_single_deviation,
        pass,
    })
}
