use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::su_log;
use crate::{CMatrix, C64};

/// Haar-random element of SU(m) together with a traceless Hermitian `A`
/// satisfying `U = exp(iA)`.
///
/// Ginibre matrix, QR, phases of `R`'s diagonal moved into `Q`, then the
/// determinant divided out by an m-th root.
pub fn haar_su<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<(CMatrix, CMatrix)> {
    let u = haar_su_matrix(m, rng);
    let a = su_log(&u)?;
    Ok((u, a))
}

/// As [`haar_su`] without the logarithm.
pub fn haar_su_matrix<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CMatrix {
    assert!(m >= 1, "mode count must be positive");
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = CMatrix::from_fn(m, m, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..m {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    let det = q.determinant();
    let root = C64::from_polar(1.0, -det.arg() / m as f64);
    q * root
}

/// Generator for an independent stream: `(seed, stream)` fully determines it.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id of sequence cell `(g, s)`.
pub fn cell_stream(g: u32, s: u32) -> u64 {
    (u64::from(g) << 32) | u64::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{exp_i_hermitian, unitarity_defect};

    #[test]
    fn samples_are_special_unitary() {
        let mut rng = stream_rng(1, 0);
        for m in 2..=4 {
            for _ in 0..50 {
                let (u, a) = haar_su(m, &mut rng).unwrap();
                assert!(unitarity_defect(&u) < 1e-10);
                assert!((u.determinant() - C64::new(1.0, 0.0)).norm() < 1e-10);
                assert!((exp_i_hermitian(&a) - &u).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn second_moment() {
        let mut rng = stream_rng(2, 0);
        let n = 20_000;
        let mean: f64 = (0..n)
            .map(|_| haar_su_matrix(2, &mut rng)[(0, 0)].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
        let mut rng = stream_rng(3, 0);
        let mean3: f64 = (0..n)
            .map(|_| haar_su_matrix(3, &mut rng)[(1, 2)].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean3 - 1.0 / 3.0).abs() < 0.02, "{mean3}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = haar_su_matrix(3, &mut stream_rng(9, cell_stream(2, 1)));
        let b = haar_su_matrix(3, &mut stream_rng(9, cell_stream(2, 1)));
        let c = haar_su_matrix(3, &mut stream_rng(9, cell_stream(1, 2)));
        assert_eq!(a, b);
        assert!((a - c).norm() > 1e-3);
    }
}
