use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::haar::{haar_su_matrix, stream_rng};
use super::space::FockSpace;
use crate::error::{Error, Result};
use crate::irrep_matrices::{superoperator, unvectorize, vectorize};
use crate::{CMatrix, C64};

/// Noise family and parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    #[default]
    Ideal,
    /// `(1 − q)·id + q·V(·)V†` with a fixed Haar-random passive `V` drawn from `v_seed`.
    Mixing { q: f64, v_seed: u64 },
    /// Per sector: `(1 − q)ρ + q·tr(Π_n ρ)Π_n/d_n`.
    Depolarizing { q: f64 },
    /// Each photon is lost independently with probability `eta`.
    Loss { eta: f64 },
    /// One photon is added to a uniformly random mode with probability `epsilon`
    /// (below the truncation).
    Gain { epsilon: f64 },
}

impl NoiseSpec {
    pub fn label(&self) -> String {
        match self {
            NoiseSpec::Ideal => "ideal".into(),
            NoiseSpec::Mixing { q, v_seed } => format!("mixing(q={q}, v_seed={v_seed})"),
            NoiseSpec::Depolarizing { q } => format!("depolarizing(q={q})"),
            NoiseSpec::Loss { eta } => format!("loss(eta={eta})"),
            NoiseSpec::Gain { epsilon } => format!("gain(epsilon={epsilon})"),
        }
    }
}

/// CPTP map on a (possibly sector-extended) Fock space, stored as its
/// superoperator on row-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Channel {
    pub label: String,
    pub space: FockSpace,
    superop: CMatrix,
    identity: bool,
}

const CPTP_TOL: f64 = 1e-10;

impl Channel {
    pub fn identity(space: &FockSpace) -> Self {
        let dd = space.dim() * space.dim();
        Channel {
            label: "ideal".into(),
            space: space.clone(),
            superop: CMatrix::identity(dd, dd),
            identity: true,
        }
    }

    /// Channel from a superoperator, rejected unless CPTP.
    pub fn from_superop(label: impl Into<String>, space: &FockSpace, superop: CMatrix) -> Result<Self> {
        let dd = space.dim() * space.dim();
        if superop.shape() != (dd, dd) {
            return Err(Error::Simulator(format!(
                "superoperator is {}x{}, expected {dd}x{dd}",
                superop.nrows(),
                superop.ncols()
            )));
        }
        let ch = Channel {
            label: label.into(),
            space: space.clone(),
            superop,
            identity: false,
        };
        let tp = ch.trace_defect();
        if tp > CPTP_TOL {
            return Err(Error::Simulator(format!(
                "channel '{}' is not trace preserving (defect {tp:.3e})",
                ch.label
            )));
        }
        let cp = ch.choi_min_eigenvalue();
        if cp < -CPTP_TOL {
            return Err(Error::Simulator(format!(
                "channel '{}' is not completely positive (Choi eigenvalue {cp:.3e})",
                ch.label
            )));
        }
        Ok(ch)
    }

    pub fn from_kraus(label: impl Into<String>, space: &FockSpace, kraus: &[CMatrix]) -> Result<Self> {
        Self::from_superop(label, space, superoperator(kraus)?)
    }

    pub fn superop(&self) -> &CMatrix {
        &self.superop
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        if self.identity {
            return rho.clone();
        }
        unvectorize(&(&self.superop * vectorize(rho)))
    }

    /// Heisenberg-picture action on an observable.
    pub fn apply_dual(&self, e: &CMatrix) -> CMatrix {
        if self.identity {
            return e.clone();
        }
        unvectorize(&(self.superop.adjoint() * vectorize(e)))
    }

    /// `self` after `first`.
    pub fn after(&self, first: &Channel) -> Result<Channel> {
        if self.space != first.space {
            return Err(Error::Simulator("composed channels act on different spaces".into()));
        }
        if self.identity {
            return Ok(first.clone());
        }
        if first.identity {
            return Ok(self.clone());
        }
        Channel::from_superop(
            format!("{} ∘ {}", self.label, first.label),
            &self.space,
            &self.superop * &first.superop,
        )
    }

    /// `‖ℰ†(I) − I‖_F`.
    pub fn trace_defect(&self) -> f64 {
        let d = self.space.dim();
        let id = CMatrix::identity(d, d);
        (self.apply_dual(&id) - id).norm()
    }

    /// Smallest eigenvalue of the Choi matrix `Σ_ij |i⟩⟨j| ⊗ ℰ(|i⟩⟨j|)`, up to reshuffling.
    pub fn choi_min_eigenvalue(&self) -> f64 {
        let d = self.space.dim();
        let choi = CMatrix::from_fn(d * d, d * d, |r, c| {
            let (i, k) = (r / d, r % d);
            let (j, l) = (c / d, c % d);
            self.superop[(i * d + j, k * d + l)]
        });
        let choi = (&choi + choi.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(choi)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Compression `Π_n ℰ(Π_n · Π_n) Π_n` to a single photon-number sector.
    pub fn restrict_to_sector(&self, n: u32) -> Result<CMatrix> {
        let k = self
            .space
            .sectors()
            .iter()
            .position(|&x| x == n)
            .ok_or_else(|| Error::Simulator(format!("sector {n} is not part of the space")))?;
        let r = self.space.sector_range(k);
        let d = self.space.dim();
        let dn = r.len();
        Ok(CMatrix::from_fn(dn * dn, dn * dn, |a, b| {
            let (i, j) = (r.start + a / dn, r.start + a % dn);
            let (k, l) = (r.start + b / dn, r.start + b % dn);
            self.superop[(i * d + j, k * d + l)]
        }))
    }
}

fn check_probability(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) || !x.is_finite() {
        return Err(Error::Simulator(format!("{name} = {x} is outside [0, 1]")));
    }
    Ok(())
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Builds the channel described by `spec` on `space`.
pub fn make_channel(spec: &NoiseSpec, space: &FockSpace) -> Result<Channel> {
    let d = space.dim();
    let id = CMatrix::identity(d, d);
    let label = spec.label();
    match *spec {
        NoiseSpec::Ideal => Ok(Channel::identity(space)),
        NoiseSpec::Mixing { q, v_seed } => {
            check_probability("q", q)?;
            let v = haar_su_matrix(space.modes(), &mut stream_rng(v_seed, u64::MAX));
            let big_v = space.passive(&v)?;
            let kraus = [&id * C64::new((1.0 - q).sqrt(), 0.0), big_v * C64::new(q.sqrt(), 0.0)];
            Channel::from_kraus(label, space, &kraus)
        }
        NoiseSpec::Depolarizing { q } => {
            check_probability("q", q)?;
            let dd = d * d;
            let mut s = CMatrix::identity(dd, dd) * C64::new(1.0 - q, 0.0);
            for k in 0..space.sectors().len() {
                let r = space.sector_range(k);
                let mut proj = CMatrix::zeros(d, d);
                for i in r.clone() {
                    proj[(i, i)] = C64::new(1.0, 0.0);
                }
                let v = vectorize(&proj);
                s += &v * v.adjoint() * C64::new(q / r.len() as f64, 0.0);
            }
            Channel::from_superop(label, space, s)
        }
        NoiseSpec::Loss { eta } => {
            check_probability("eta", eta)?;
            if !space.is_contiguous_from_vacuum() {
                return Err(Error::Simulator(
                    "loss needs the sectors 0..=N so that lost photons stay in the space".into(),
                ));
            }
            let m = space.modes();
            let mut kraus = Vec::new();
            for pattern in space.states() {
                // a loss pattern `k` is any occupation with |k| ≤ N
                let mut op = CMatrix::zeros(d, d);
                let mut nonzero = false;
                for (col, n) in space.states().iter().enumerate() {
                    if (0..m).any(|i| n[i] < pattern[i]) {
                        continue;
                    }
                    let mut amp = 1.0;
                    for i in 0..m {
                        let (ni, ki) = (n[i], pattern[i]);
                        amp *= (binomial(ni, ki) * (1.0 - eta).powi((ni - ki) as i32) * eta.powi(ki as i32)).sqrt();
                    }
                    if amp == 0.0 {
                        continue;
                    }
                    let out: Vec<u32> = (0..m).map(|i| n[i] - pattern[i]).collect();
                    let row = space.index_of(&out).expect("contiguous sectors contain the image");
                    op[(row, col)] = C64::new(amp, 0.0);
                    nonzero = true;
                }
                if nonzero {
                    kraus.push(op);
                }
            }
            Channel::from_kraus(label, space, &kraus)
        }
        NoiseSpec::Gain { epsilon } => {
            check_probability("epsilon", epsilon)?;
            if !space.is_contiguous_from_vacuum() {
                return Err(Error::Simulator("gain needs the sectors 0..=N".into()));
            }
            let m = space.modes();
            let top = space.max_photons();
            let mut k0 = CMatrix::zeros(d, d);
            for (i, n) in space.states().iter().enumerate() {
                let below = n.iter().sum::<u32>() < top;
                k0[(i, i)] = C64::new(if below { (1.0 - epsilon).sqrt() } else { 1.0 }, 0.0);
            }
            let mut kraus = vec![k0];
            let amp = (epsilon / m as f64).sqrt();
            for mode in 0..m {
                let mut op = CMatrix::zeros(d, d);
                for (col, n) in space.states().iter().enumerate() {
                    if n.iter().sum::<u32>() < top {
                        let mut out = n.clone();
                        out[mode] += 1;
                        let row = space.index_of(&out).expect("contiguous sectors contain the image");
                        op[(row, col)] = C64::new(amp, 0.0);
                    }
                }
                kraus.push(op);
            }
            Channel::from_kraus(label, space, &kraus)
        }
    }
}
