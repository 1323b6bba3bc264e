//! Immanants, permanents and determinants.
//!
//! `immanant` is the reference character-weighted permutation sum and works
//! over any [`Ring`] (integers, rationals, real or complex floats). The
//! single-row and single-column cases have classical fast routines: Ryser's
//! formula for the permanent and LU for the determinant.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};
use crate::rep_theory::Partition;
use crate::scalar::Ring;
use crate::symmetric_group::enumerate_group;
use crate::{CMatrix, C64};

/// Largest size accepted by [`permanent`].
pub const MAX_PERMANENT_SIZE: usize = 20;

fn check_square<T: nalgebra::Scalar>(a: &DMatrix<T>) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Immanant(format!(
            "matrix is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// `Σ_{σ∈S_d} χ_κ(σ) ∏_i A_{i,σ(i)}` by direct summation.
///
/// Products are accumulated per conjugacy class before the character weights
/// are applied, so the result does not depend on how elements are chunked.
pub fn immanant<T: Ring>(kappa: &Partition, a: &DMatrix<T>) -> Result<T> {
    let d = check_square(a)?;
    if kappa.size() as usize != d {
        return Err(Error::Immanant(format!(
            "partition {kappa} has {} boxes but the matrix is {d}x{d}",
            kappa.size()
        )));
    }
    let group = enumerate_group(d).map_err(|e| Error::Immanant(e.to_string()))?;
    let table = &group.table;
    let row = table
        .irrep_index(kappa)
        .ok_or_else(|| Error::Immanant(format!("{kappa} is not a partition of {d}")))?;
    let mut class_sums = vec![T::zero(); table.classes.len()];
    for (perm, &class) in group.elements.iter().zip(&group.class_of) {
        let mut prod = T::one();
        for (i, &j) in perm.iter().enumerate() {
            prod = prod * a[(i, j)].clone();
        }
        class_sums[class] = class_sums[class].clone() + prod;
    }
    Ok(class_sums
        .into_iter()
        .zip(&table.values[row])
        .fold(T::zero(), |acc, (s, &chi)| acc + T::from_int(chi) * s))
}

/// Permanent via Ryser's inclusion–exclusion formula with Gray-code updates
/// of the row sums, `O(2^d d)`.
pub fn permanent<T: Ring>(a: &DMatrix<T>) -> Result<T> {
    let d = check_square(a)?;
    if d > MAX_PERMANENT_SIZE {
        return Err(Error::Immanant(format!(
            "permanent of a {d}x{d} matrix exceeds the size cap {MAX_PERMANENT_SIZE}"
        )));
    }
    if d == 0 {
        return Ok(T::one());
    }
    let mut row_sums = vec![T::zero(); d];
    let mut in_set = vec![false; d];
    let mut total = T::zero();
    let mut set_size = 0usize;
    for k in 1u64..(1u64 << d) {
        let j = k.trailing_zeros() as usize;
        if in_set[j] {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s = s.clone() - a[(i, j)].clone();
            }
            set_size -= 1;
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s = s.clone() + a[(i, j)].clone();
            }
            set_size += 1;
        }
        in_set[j] = !in_set[j];
        let prod = row_sums.iter().fold(T::one(), |p, s| p * s.clone());
        if (d - set_size).is_multiple_of(2) {
            total = total + prod;
        } else {
            total = total - prod;
        }
    }
    Ok(total)
}

/// Determinant by LU factorisation with partial pivoting.
pub fn determinant<T: ComplexField>(a: &DMatrix<T>) -> Result<T> {
    check_square(a)?;
    Ok(a.clone().lu().determinant())
}

/// Complex immanant using the Ryser/LU fast paths for one-row and one-column
/// partitions and the direct sum otherwise.
pub fn immanant_fast(kappa: &Partition, a: &CMatrix) -> Result<C64> {
    let d = check_square(a)?;
    if kappa.size() as usize != d {
        return Err(Error::Immanant(format!(
            "partition {kappa} has {} boxes but the matrix is {d}x{d}",
            kappa.size()
        )));
    }
    let rows = kappa.trimmed();
    if rows.len() <= 1 {
        permanent(a)
    } else if rows.iter().all(|&r| r == 1) {
        determinant(a)
    } else {
        immanant(kappa, a)
    }
}

/// Ordered product of a gate sequence given in application order, so the
/// last-applied gate ends up leftmost.
pub fn sequence_product(seq: &[CMatrix]) -> Result<CMatrix> {
    let first = seq
        .first()
        .ok_or_else(|| Error::Immanant("empty gate sequence".into()))?;
    let m = first.nrows();
    let mut prod = CMatrix::identity(m, m);
    for (k, g) in seq.iter().enumerate() {
        if g.nrows() != m || g.ncols() != m {
            return Err(Error::Immanant(format!(
                "gate {k} is {}x{}, expected {m}x{m}",
                g.nrows(),
                g.ncols()
            )));
        }
        prod = g * prod;
    }
    Ok(prod)
}

/// Immanant of the product of a gate sequence.
pub fn sequence_immanant(kappa: &Partition, seq: &[CMatrix]) -> Result<C64> {
    immanant_fast(kappa, &sequence_product(seq)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(v: &[u32]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    fn random_matrix(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(d, d, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn close(a: C64, b: C64, rel: f64) -> bool {
        (a - b).norm() <= rel * (1.0 + a.norm().max(b.norm()))
    }

    // brute force permutation sum, independent of the character machinery
    fn brute_permanent(a: &CMatrix, sign: bool) -> C64 {
        let d = a.nrows();
        let mut perm: Vec<usize> = (0..d).collect();
        let mut total = C64::new(0.0, 0.0);
        fn heap(k: usize, perm: &mut Vec<usize>, a: &CMatrix, sign: bool, total: &mut C64) {
            if k == 1 {
                let mut prod = C64::new(1.0, 0.0);
                for (i, &j) in perm.iter().enumerate() {
                    prod *= a[(i, j)];
                }
                let inv = (0..perm.len())
                    .flat_map(|i| (i + 1..perm.len()).map(move |j| (i, j)))
                    .filter(|&(i, j)| perm[i] > perm[j])
                    .count();
                if sign && inv % 2 == 1 {
                    *total -= prod;
                } else {
                    *total += prod;
                }
                return;
            }
            for i in 0..k {
                heap(k - 1, perm, a, sign, total);
                if k.is_multiple_of(2) {
                    perm.swap(i, k - 1);
                } else {
                    perm.swap(0, k - 1);
                }
            }
        }
        heap(d, &mut perm, a, sign, &mut total);
        total
    }

    #[test]
    fn two_by_two_identities() {
        let a = DMatrix::from_row_slice(2, 2, &[2i64, 3, 5, 7]);
        assert_eq!(immanant(&p(&[1, 1]), &a).unwrap(), 2 * 7 - 3 * 5);
        assert_eq!(immanant(&p(&[2, 0]), &a).unwrap(), 2 * 7 + 3 * 5);
    }

    #[test]
    fn mixed_immanant_of_identity() {
        let id = DMatrix::<i64>::identity(3, 3);
        assert_eq!(immanant(&p(&[2, 1, 0]), &id).unwrap(), 2);
    }

    #[test]
    fn mixed_immanant_explicit_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let u = random_matrix(3, &mut rng);
            let explicit = u[(0, 0)] * u[(1, 1)] * u[(2, 2)] * 2.0
                - u[(0, 1)] * u[(1, 2)] * u[(2, 0)]
                - u[(0, 2)] * u[(1, 0)] * u[(2, 1)];
            assert!(close(immanant(&p(&[2, 1, 0]), &u).unwrap(), explicit, 1e-12));
        }
    }

    #[test]
    fn exact_rational_immanant() {
        let a = DMatrix::from_fn(3, 3, |i, j| Ratio::new((i * 3 + j) as i64 + 1, (j + 2) as i64));
        let imm = immanant(&p(&[2, 1, 0]), &a).unwrap();
        let expect = a[(0, 0)] * a[(1, 1)] * a[(2, 2)] * Ratio::from_integer(2)
            - a[(0, 1)] * a[(1, 2)] * a[(2, 0)]
            - a[(0, 2)] * a[(1, 0)] * a[(2, 1)];
        assert_eq!(imm, expect);
    }

    #[test]
    fn permanent_small_cases() {
        let id = CMatrix::identity(5, 5);
        assert!(close(permanent(&id).unwrap(), C64::new(1.0, 0.0), 1e-15));
        let ones = DMatrix::from_element(2, 2, 1i64);
        assert_eq!(permanent(&ones).unwrap(), 2);
        let ones = DMatrix::from_element(4, 4, 1i64);
        assert_eq!(permanent(&ones).unwrap(), 24);
    }

    #[test]
    fn permanent_and_determinant_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..=5 {
            let a = random_matrix(d, &mut rng);
            assert!(close(permanent(&a).unwrap(), brute_permanent(&a, false), 1e-12));
            assert!(close(determinant(&a).unwrap(), brute_permanent(&a, true), 1e-12));
        }
    }

    #[test]
    fn fast_paths_agree_with_character_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 1..=4usize {
            for _ in 0..5 {
                let a = random_matrix(d, &mut rng);
                let row = Partition::with_rank(vec![d as u32], d).unwrap();
                let col = Partition::new(vec![1; d]).unwrap();
                assert!(close(immanant(&row, &a).unwrap(), permanent(&a).unwrap(), 1e-12));
                assert!(close(immanant(&col, &a).unwrap(), determinant(&a).unwrap(), 1e-12));
                assert!(close(
                    immanant_fast(&row, &a).unwrap(),
                    immanant(&row, &a).unwrap(),
                    1e-12
                ));
            }
        }
    }

    #[test]
    fn size_errors() {
        let a = CMatrix::identity(3, 3);
        assert!(immanant(&p(&[1, 1]), &a).is_err());
        let rect = CMatrix::zeros(2, 3);
        assert!(permanent(&rect).is_err());
        let big = CMatrix::identity(21, 21);
        assert!(permanent(&big).is_err());
        let nine = CMatrix::identity(9, 9);
        assert!(immanant(&p(&[5, 4]), &nine).is_err());
    }

    #[test]
    fn sequence_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_matrix(2, &mut rng);
        let v = random_matrix(2, &mut rng);
        let prod = sequence_product(&[u.clone(), v.clone()]).unwrap();
        assert!((prod - &v * &u).norm() < 1e-14);
        let k = p(&[2, 0]);
        assert!(close(
            sequence_immanant(&k, std::slice::from_ref(&u)).unwrap(),
            immanant(&k, &u).unwrap(),
            1e-14
        ));
        let ui = u.clone().try_inverse().unwrap();
        assert!(close(
            sequence_immanant(&k, &[u.clone(), ui]).unwrap(),
            C64::new(1.0, 0.0),
            1e-12
        ));
        assert!(sequence_product(&[u, CMatrix::identity(3, 3)]).is_err());
        assert!(sequence_product(&[]).is_err());
    }
}
