//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn conj(a: &CMatrix) -> CMatrix {
    a.map(|z| z.conj())
}

/// `‖U†U − I‖_F`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}

pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

pub fn trace(a: &CMatrix) -> C64 {
    a.trace()
}

/// `exp(iH)` for Hermitian `H`, through its eigendecomposition.
pub fn exp_i_hermitian(h: &CMatrix) -> CMatrix {
    let n = h.nrows();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let v = &eig.eigenvectors;
    let phases = CMatrix::from_diagonal(&eig.eigenvalues.map(|x| C64::from_polar(1.0, x)));
    v * phases * v.adjoint()
}

/// Traceless Hermitian `A` with `exp(iA) = U` for `U ∈ SU(m)`.
///
/// Any branch works for lifting: SU(m) is simply connected, so the irrep of
/// `exp(iA)` does not depend on which logarithm is chosen.
pub fn su_log(u: &CMatrix) -> Result<CMatrix> {
    let n = u.nrows();
    if n != u.ncols() || n == 0 {
        return Err(Error::IrrepMatrices("su_log needs a non-empty square matrix".into()));
    }
    let scale = 1.0 + u.norm();
    if unitarity_defect(u) > 1e-8 * scale {
        return Err(Error::IrrepMatrices(format!(
            "matrix is not unitary (defect {:.3e})",
            unitarity_defect(u)
        )));
    }
    let schur = Schur::try_new(u.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::IrrepMatrices("Schur decomposition did not converge".into()))?;
    let (q, t) = schur.unpack();
    let mut theta: Vec<f64> = (0..n).map(|i| t[(i, i)].arg()).collect();
    let total: f64 = theta.iter().sum();
    let winding = (total / (2.0 * std::f64::consts::PI)).round() as i64;
    if (total - winding as f64 * 2.0 * std::f64::consts::PI).abs() > 1e-6 {
        return Err(Error::IrrepMatrices(format!(
            "determinant is not 1 (phase sum {total:.6})"
        )));
    }
    // shift whole turns off the extreme angles until the trace vanishes
    for _ in 0..winding.unsigned_abs() {
        let idx = if winding > 0 {
            (0..n).max_by(|&a, &b| theta[a].total_cmp(&theta[b]))
        } else {
            (0..n).min_by(|&a, &b| theta[a].total_cmp(&theta[b]))
        }
        .expect("n > 0");
        theta[idx] -= winding.signum() as f64 * 2.0 * std::f64::consts::PI;
    }
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        theta.iter().map(|&x| C64::new(x, 0.0)),
    ));
    let a = &q * d * q.adjoint();
    let mut a = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    let tr = a.trace() / C64::new(n as f64, 0.0);
    for i in 0..n {
        a[(i, i)] -= tr;
    }
    let back = exp_i_hermitian(&a);
    let err = (&back - u).norm();
    if err > 1e-8 * scale {
        return Err(Error::IrrepMatrices(format!(
            "logarithm failed to reproduce the matrix (error {err:.3e})"
        )));
    }
    Ok(a)
}

/// Moore–Penrose pseudo-inverse dropping singular values below `rel_cutoff · σ_max`.
pub fn pseudo_inverse(a: &CMatrix, rel_cutoff: f64) -> (CMatrix, usize) {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rel_cutoff * smax;
    let u = svd.u.expect("requested u");
    let vt = svd.v_t.expect("requested v_t");
    let mut kept = 0;
    let mut inv = CMatrix::zeros(a.ncols(), a.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            kept += 1;
            let uk = u.column(k);
            let vk = vt.row(k).adjoint();
            inv += vk * uk.adjoint() * C64::new(1.0 / s, 0.0);
        }
    }
    (inv, kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = CMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        (&g + g.adjoint()) * C64::new(0.5, 0.0)
    }

    #[test]
    fn exponential_is_unitary_and_matches_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_hermitian(4, &mut rng) * C64::new(0.3, 0.0);
        let u = exp_i_hermitian(&h);
        assert!(unitarity_defect(&u) < 1e-13);
        let mut series = CMatrix::identity(4, 4);
        let mut term = CMatrix::identity(4, 4);
        for k in 1..40 {
            term = &term * &h * C64::new(0.0, 1.0 / k as f64);
            series += &term;
        }
        assert!((u - series).norm() < 1e-12);
    }

    #[test]
    fn log_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..=4 {
            for _ in 0..20 {
                let mut h = random_hermitian(n, &mut rng) * C64::new(3.0, 0.0);
                let tr = h.trace() / C64::new(n as f64, 0.0);
                for i in 0..n {
                    h[(i, i)] -= tr;
                }
                let u = exp_i_hermitian(&h);
                let a = su_log(&u).unwrap();
                assert!(hermiticity_defect(&a) < 1e-12);
                assert!(a.trace().norm() < 1e-12);
                assert!((exp_i_hermitian(&a) - &u).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn log_rejects_non_special() {
        let u = CMatrix::identity(2, 2) * C64::from_polar(1.0, 0.3);
        assert!(su_log(&u).is_err());
        let mut v = CMatrix::identity(2, 2);
        v[(0, 1)] = C64::new(0.5, 0.0);
        assert!(su_log(&v).is_err());
    }

    #[test]
    fn pseudo_inverse_of_projector_is_itself() {
        let mut p = CMatrix::zeros(3, 3);
        p[(0, 0)] = C64::new(1.0, 0.0);
        p[(1, 1)] = C64::new(1.0, 0.0);
        let (pinv, kept) = pseudo_inverse(&p, 1e-6);
        assert_eq!(kept, 2);
        assert!((pinv - p).norm() < 1e-14);
    }
}
