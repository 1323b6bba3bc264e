//! Synthetic benchmarking experiments: Haar-random gate sequences, CPTP noise
//! on (sector-extended) Fock spaces and the resulting survival data.

mod channel;
mod haar;
mod space;

pub use channel::{make_channel, Channel, NoiseSpec};
pub use haar::{cell_stream, haar_su, haar_su_matrix, stream_rng};
pub use space::FockSpace;

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::immanant::sequence_product;
use crate::{CMatrix, C64};

/// How gates of different cells relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceDesign {
    /// All cells of sequence index `s` share the overall product `W_s`: the
    /// first `g − 1` gates are free Haar draws and the last one closes the
    /// product. Marginally every cell is still `g` i.i.d. Haar gates.
    #[default]
    SharedTarget,
    /// Every cell is drawn independently.
    Independent,
}

/// Input state and measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    /// Fixed photon number; `ρ = |input⟩⟨input|`, `E = |output⟩⟨output|`.
    /// Both default to all photons in the first mode.
    Fock {
        #[serde(default)]
        input: Option<Vec<u32>>,
        #[serde(default)]
        output: Option<Vec<u32>>,
    },
    /// Truncated weak coherent state in mode 1 with an intensity readout on
    /// `mode` (0-based), rescaled by the truncation to lie in `[0, 1]`.
    Coherent {
        alpha: f64,
        #[serde(default = "one")]
        truncation: u32,
        #[serde(default)]
        mode: usize,
    },
}

fn one() -> u32 {
    1
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::Fock {
            input: None,
            output: None,
        }
    }
}

/// SPAM channels applied once to the state and (dually) to the measurement.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpamSpec {
    #[serde(default)]
    pub prep: NoiseSpec,
    #[serde(default)]
    pub meas: NoiseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub photons: u32,
    pub modes: usize,
    /// Sequence lengths `g`, distinct and positive.
    pub depths: Vec<u32>,
    /// Sequences per depth (`K`).
    pub sequences: u32,
    /// Shots per cell; 0 records exact expectation values.
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub design: SequenceDesign,
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub spam: SpamSpec,
}

impl ExperimentConfig {
    /// Fock-scenario config with depths `1..=max_depth` and no noise.
    pub fn new(photons: u32, modes: usize, max_depth: u32, sequences: u32) -> Self {
        ExperimentConfig {
            photons,
            modes,
            depths: (1..=max_depth).collect(),
            sequences,
            shots: 0,
            seed: 0,
            design: SequenceDesign::default(),
            scenario: Scenario::default(),
            noise: NoiseSpec::Ideal,
            spam: SpamSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes < 2 {
            return Err(Error::Config(format!(
                "modes = {} but at least 2 are needed",
                self.modes
            )));
        }
        if self.sequences == 0 {
            return Err(Error::Config("sequences (K) must be at least 1".into()));
        }
        if self.depths.len() < 2 {
            return Err(Error::Config("at least two depths are needed".into()));
        }
        let mut d = self.depths.clone();
        d.sort_unstable();
        d.dedup();
        if d.len() != self.depths.len() || d[0] == 0 || d.last() == Some(&u32::MAX) {
            return Err(Error::Config(format!(
                "depths must be distinct and positive, got {:?}",
                self.depths
            )));
        }
        match &self.scenario {
            Scenario::Fock { input, output } => {
                for occ in [input, output].into_iter().flatten() {
                    if occ.len() != self.modes || occ.iter().sum::<u32>() != self.photons {
                        return Err(Error::Config(format!(
                            "occupation {occ:?} is not a {}-photon state on {} modes",
                            self.photons, self.modes
                        )));
                    }
                }
            }
            Scenario::Coherent {
                alpha,
                truncation,
                mode,
            } => {
                if !(alpha.abs() <= 0.3) {
                    return Err(Error::Config(format!("|alpha| = {alpha} exceeds the weak regime 0.3")));
                }
                if *truncation < 1 {
                    return Err(Error::Config("truncation must be at least 1 photon".into()));
                }
                if *mode >= self.modes {
                    return Err(Error::Config(format!("measured mode {mode} out of range")));
                }
                if self.photons == 0 || self.photons > *truncation {
                    return Err(Error::Config(format!(
                        "analysed sector {} must lie in 1..={truncation}",
                        self.photons
                    )));
                }
            }
        }
        Ok(())
    }
}

/// State, measurement and channels of one experiment.
#[derive(Debug, Clone)]
pub struct Setup {
    pub space: FockSpace,
    pub rho: CMatrix,
    pub e: CMatrix,
    pub noise: Channel,
    pub prep: Channel,
    pub meas: Channel,
    /// `ρ̃ = prep(ρ)`.
    pub rho_tilde: CMatrix,
    /// `Ẽ = meas†(E)`.
    pub e_tilde: CMatrix,
    /// Human-readable notes on the state and observable.
    pub description: String,
}

/// `ρ`, `E` and the space for the weak-coherent-state scenario.
pub fn coherent_scenario(
    alpha: f64,
    truncation: u32,
    mode: usize,
    modes: usize,
) -> Result<(CMatrix, CMatrix, FockSpace)> {
    if truncation < 1 {
        return Err(Error::Simulator("truncation must be at least 1".into()));
    }
    if mode >= modes {
        return Err(Error::Simulator(format!("mode {mode} out of range for {modes} modes")));
    }
    let space = FockSpace::truncated(modes, truncation)?;
    let d = space.dim();
    let mut psi = nalgebra::DVector::<C64>::zeros(d);
    let mut amp = 1.0;
    for k in 0..=truncation {
        if k > 0 {
            amp *= alpha / f64::from(k).sqrt();
        }
        let mut occ = vec![0; modes];
        occ[0] = k;
        psi[space.index_of(&occ).expect("sector present")] = C64::new(amp, 0.0);
    }
    let psi = &psi / C64::new(psi.norm(), 0.0);
    let rho = &psi * psi.adjoint();
    let e = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        space
            .states()
            .iter()
            .map(|s| C64::new(f64::from(s[mode]) / f64::from(truncation), 0.0)),
    ));
    Ok((rho, e, space))
}

fn fock_projector(space: &FockSpace, occ: &[u32]) -> Result<CMatrix> {
    let i = space
        .index_of(occ)
        .ok_or_else(|| Error::Simulator(format!("occupation {occ:?} not in the space")))?;
    let mut p = CMatrix::zeros(space.dim(), space.dim());
    p[(i, i)] = C64::new(1.0, 0.0);
    Ok(p)
}

pub fn prepare(config: &ExperimentConfig) -> Result<Setup> {
    config.validate()?;
    let (rho, e, space, description) = match &config.scenario {
        Scenario::Fock { input, output } => {
            let space = FockSpace::single(config.modes, config.photons)?;
            let mut default = vec![0; config.modes];
            default[0] = config.photons;
            let input = input.clone().unwrap_or_else(|| default.clone());
            let output = output.clone().unwrap_or_else(|| input.clone());
            let rho = fock_projector(&space, &input)?;
            let e = fock_projector(&space, &output)?;
            (
                rho,
                e,
                space,
                format!("fock: rho = |{input:?}>, E = |{output:?}><{output:?}|"),
            )
        }
        Scenario::Coherent {
            alpha,
            truncation,
            mode,
        } => {
            let (rho, e, space) = coherent_scenario(*alpha, *truncation, *mode, config.modes)?;
            (
                rho,
                e,
                space,
                format!("coherent: alpha = {alpha}, sectors 0..={truncation}, E = n_{mode}/{truncation}"),
            )
        }
    };
    let noise = make_channel(&config.noise, &space)?;
    let prep = make_channel(&config.spam.prep, &space)?;
    let meas = make_channel(&config.spam.meas, &space)?;
    let rho_tilde = prep.apply(&rho);
    let e_tilde = meas.apply_dual(&e);
    Ok(Setup {
        space,
        rho,
        e,
        noise,
        prep,
        meas,
        rho_tilde,
        e_tilde,
        description,
    })
}

/// One cell `(g, s)` of the sequence grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Gates in application order.
    pub gates: Vec<CMatrix>,
    /// Last-applied gate leftmost.
    pub product: CMatrix,
}

/// K × L grid of gate sequences, indexed `[depth index][s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceTable {
    pub modes: usize,
    pub depths: Vec<u32>,
    pub sequences: u32,
    pub cells: Vec<Vec<Cell>>,
}

impl SequenceTable {
    pub fn cell(&self, depth_index: usize, s: usize) -> &Cell {
        &self.cells[depth_index][s]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.depths.len(), self.sequences as usize)
    }

    /// Table whose every gate is the identity (useful for kernel checks).
    pub fn identity(modes: usize, depths: Vec<u32>, sequences: u32) -> Self {
        let id = CMatrix::identity(modes, modes);
        let cells = depths
            .iter()
            .map(|&g| {
                (0..sequences)
                    .map(|_| Cell {
                        gates: vec![id.clone(); g as usize],
                        product: id.clone(),
                    })
                    .collect()
            })
            .collect();
        SequenceTable {
            modes,
            depths,
            sequences,
            cells,
        }
    }

    /// Rebuilds from gate lists, recomputing products.
    pub fn from_gates(modes: usize, depths: Vec<u32>, gates: Vec<Vec<Vec<CMatrix>>>) -> Result<Self> {
        if gates.len() != depths.len() {
            return Err(Error::Simulator("gate grid does not match the depth list".into()));
        }
        let sequences = gates.first().map(|r| r.len()).unwrap_or(0);
        let mut cells = Vec::with_capacity(depths.len());
        for (row, &g) in gates.into_iter().zip(&depths) {
            if row.len() != sequences {
                return Err(Error::Simulator("ragged gate grid".into()));
            }
            let mut out = Vec::with_capacity(sequences);
            for seq in row {
                if seq.len() != g as usize {
                    return Err(Error::Simulator(format!("cell at depth {g} holds {} gates", seq.len())));
                }
                let product = sequence_product(&seq).map_err(|e| Error::Simulator(e.to_string()))?;
                if product.nrows() != modes {
                    return Err(Error::Simulator(format!("gates are not {modes}x{modes}")));
                }
                out.push(Cell { gates: seq, product });
            }
            cells.push(out);
        }
        Ok(SequenceTable {
            modes,
            depths,
            sequences: sequences as u32,
            cells,
        })
    }
}

fn target_stream(s: u32) -> u64 {
    cell_stream(u32::MAX, s)
}

/// Samples the full sequence grid; every cell draws from its own stream keyed
/// by `(seed, g, s)`.
pub fn build_sequences(config: &ExperimentConfig) -> Result<SequenceTable> {
    config.validate()?;
    let m = config.modes;
    let k = config.sequences;
    let build_cell = |g: u32, s: u32| -> Cell {
        let mut rng = stream_rng(config.seed, cell_stream(g, s));
        let mut gates = Vec::with_capacity(g as usize);
        let mut product = CMatrix::identity(m, m);
        match config.design {
            SequenceDesign::Independent => {
                for _ in 0..g {
                    let u = haar_su_matrix(m, &mut rng);
                    product = &u * &product;
                    gates.push(u);
                }
            }
            SequenceDesign::SharedTarget => {
                for _ in 1..g {
                    let u = haar_su_matrix(m, &mut rng);
                    product = &u * &product;
                    gates.push(u);
                }
                let target = haar_su_matrix(m, &mut stream_rng(config.seed, target_stream(s)));
                let last = &target * product.adjoint();
                gates.push(last);
                product = target;
            }
        }
        Cell { gates, product }
    };
    let cells = config
        .depths
        .par_iter()
        .map(|&g| (0..k).into_par_iter().map(|s| build_cell(g, s)).collect())
        .collect();
    Ok(SequenceTable {
        modes: m,
        depths: config.depths.clone(),
        sequences: k,
        cells,
    })
}

/// Measured values `d^{(g,s)}`, indexed `[depth index][s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix {
    pub depths: Vec<u32>,
    pub values: Vec<Vec<f64>>,
    pub shots: u64,
}

impl DataMatrix {
    pub fn shape(&self) -> (usize, usize) {
        (self.depths.len(), self.values.first().map_or(0, |r| r.len()))
    }
}

const PROB_TOL: f64 = 1e-10;

/// Exact expectation `tr[Ẽ (ℰ∘𝒰_g ∘ … ∘ ℰ∘𝒰_1)(ρ̃)]` of one gate sequence.
pub fn survival(setup: &Setup, gates: &[CMatrix]) -> Result<f64> {
    let mut rho = setup.rho_tilde.clone();
    for u in gates {
        let v = setup.space.passive(u)?;
        rho = &v * rho * v.adjoint();
        rho = setup.noise.apply(&rho);
    }
    let val = (&setup.e_tilde * rho).trace();
    if val.im.abs() > 1e-9 {
        return Err(Error::Simulator(format!(
            "expectation value has imaginary part {:.3e}",
            val.im
        )));
    }
    if val.re < -PROB_TOL || val.re > 1.0 + PROB_TOL {
        return Err(Error::Simulator(format!(
            "expectation value {} outside [0, 1]: numerical inconsistency",
            val.re
        )));
    }
    Ok(val.re)
}

/// Simulates every cell of `table`.
pub fn simulate(config: &ExperimentConfig, setup: &Setup, table: &SequenceTable) -> Result<DataMatrix> {
    let (l, k) = table.shape();
    if table.modes != setup.space.modes() {
        return Err(Error::Simulator(
            "sequence table and setup disagree on the mode count".into(),
        ));
    }
    let values = (0..l)
        .into_par_iter()
        .map(|gi| {
            (0..k)
                .into_par_iter()
                .map(|s| {
                    let exact = survival(setup, &table.cell(gi, s).gates)?;
                    if config.shots == 0 {
                        return Ok(exact);
                    }
                    let p = exact.clamp(0.0, 1.0);
                    let stream = cell_stream(table.depths[gi], s as u32) | (1 << 63);
                    let mut rng = stream_rng(config.seed, stream);
                    let dist = Binomial::new(config.shots, p)
                        .map_err(|e| Error::Simulator(format!("binomial sampling: {e}")))?;
                    Ok(dist.sample(&mut rng) as f64 / config.shots as f64)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DataMatrix {
        depths: table.depths.clone(),
        values,
        shots: config.shots,
    })
}

/// Builds the setup and simulates `table`.
pub fn run_experiment(config: &ExperimentConfig, table: &SequenceTable) -> Result<DataMatrix> {
    let setup = prepare(config)?;
    simulate(config, &setup, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irrep_matrices::{casimir_projectors, gamma_unitary, vectorize};
    use crate::rep_theory::symmetric_label;

    fn cfg(n: u32, m: usize, l: u32, k: u32) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(n, m, l, k);
        c.seed = 17;
        c
    }

    #[test]
    fn table_shape_and_cells() {
        for design in [SequenceDesign::SharedTarget, SequenceDesign::Independent] {
            let mut c = cfg(1, 2, 4, 3);
            c.design = design;
            let t = build_sequences(&c).unwrap();
            assert_eq!(t.shape(), (4, 3));
            assert_eq!(t.cell(1, 1).gates.len(), 2);
            for row in &t.cells {
                for cell in row {
                    let p = sequence_product(&cell.gates).unwrap();
                    assert!((p - &cell.product).norm() < 1e-12);
                }
            }
            assert_eq!(build_sequences(&c).unwrap(), t);
        }
    }

    #[test]
    fn shared_target_products_agree_across_depths() {
        let t = build_sequences(&cfg(1, 3, 5, 4)).unwrap();
        for s in 0..4 {
            for gi in 1..5 {
                assert!((&t.cell(gi, s).product - &t.cell(0, s).product).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cells_are_reproducible_in_isolation() {
        let mut c = cfg(1, 2, 3, 2);
        c.design = SequenceDesign::Independent;
        let t = build_sequences(&c).unwrap();
        let mut rng = stream_rng(17, cell_stream(2, 1));
        let first = haar_su_matrix(2, &mut rng);
        assert_eq!(t.cell(1, 1).gates[0], first);
    }

    #[test]
    fn single_gate_ideal_survival() {
        let c = cfg(1, 2, 2, 1);
        let setup = prepare(&c).unwrap();
        let u = haar_su_matrix(2, &mut stream_rng(3, 0));
        let d = survival(&setup, std::slice::from_ref(&u)).unwrap();
        assert!((d - u[(0, 0)].norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn full_measurement_gives_one() {
        let mut c = cfg(2, 3, 3, 2);
        c.noise = NoiseSpec::Depolarizing { q: 0.2 };
        let mut setup = prepare(&c).unwrap();
        setup.e_tilde = CMatrix::identity(6, 6);
        let t = build_sequences(&c).unwrap();
        let data = simulate(&c, &setup, &t).unwrap();
        for row in &data.values {
            for &v in row {
                assert!((v - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shot_noise_is_consistent() {
        let mut c = cfg(1, 2, 2, 1);
        c.shots = 200_000;
        let setup = prepare(&c).unwrap();
        let t = build_sequences(&c).unwrap();
        let exact = survival(&setup, &t.cell(0, 0).gates).unwrap();
        let data = simulate(&c, &setup, &t).unwrap();
        let sigma = (exact * (1.0 - exact) / c.shots as f64).sqrt();
        assert!((data.values[0][0] - exact).abs() <= 3.0 * sigma + 1e-12);
    }

    #[test]
    fn coherent_state_layout() {
        let (rho, e, space) = coherent_scenario(0.1, 1, 0, 2).unwrap();
        let norm = 1.0 + 0.01;
        assert!((rho[(0, 0)].re - 1.0 / norm).abs() < 1e-14);
        assert!((rho[(1, 1)].re - 0.01 / norm).abs() < 1e-14);
        assert!((rho[(0, 1)].re - 0.1 / norm).abs() < 1e-14);
        assert_eq!(e[(1, 1)], C64::new(1.0, 0.0));
        assert_eq!(e[(2, 2)], C64::new(0.0, 0.0));
        assert_eq!(space.dim(), 3);
        let (vac, _, _) = coherent_scenario(0.0, 1, 0, 2).unwrap();
        assert_eq!(vac[(0, 0)], C64::new(1.0, 0.0));
        assert!((vac.trace() - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn passive_evolution_preserves_sectors() {
        let space = FockSpace::truncated(2, 2).unwrap();
        let u = haar_su_matrix(2, &mut stream_rng(8, 0));
        let v = space.passive(&u).unwrap();
        for k in 0..3 {
            let r = space.sector_range(k);
            for i in r.clone() {
                for j in 0..space.dim() {
                    if !r.contains(&j) {
                        assert_eq!(v[(i, j)], C64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn twirl_converges_to_block_scalars() {
        let lambda = symmetric_label(1, 2);
        let sr = casimir_projectors(&lambda).unwrap();
        let mut rng = stream_rng(21, 0);
        let mut mmat = CMatrix::zeros(4, 4);
        mmat[(0, 1)] = C64::new(1.0, 0.0);
        mmat[(2, 3)] = C64::new(0.5, 0.5);
        let n = 5000;
        let mut acc = CMatrix::zeros(4, 4);
        for _ in 0..n {
            let g = gamma_unitary(1, 2, &haar_su_matrix(2, &mut rng)).unwrap();
            acc += g.adjoint() * &mmat * g;
        }
        acc /= C64::new(n as f64, 0.0);
        let mut expect = CMatrix::zeros(4, 4);
        for (p, &d) in sr.projectors.iter().zip(&sr.dims) {
            expect += p * (p * &mmat).trace() / C64::new(d as f64, 0.0);
        }
        assert!((acc - expect).norm() < 0.05);
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(1, 2, 3, 2);
        c.depths = vec![1, 1, 2];
        assert!(c.validate().is_err());
        let mut c = cfg(1, 2, 1, 2);
        assert!(c.validate().is_err());
        c = cfg(1, 2, 3, 0);
        assert!(c.validate().is_err());
        c = cfg(1, 2, 3, 2);
        c.scenario = Scenario::Coherent {
            alpha: 0.5,
            truncation: 1,
            mode: 0,
        };
        assert!(c.validate().is_err());
        c.scenario = Scenario::Fock {
            input: Some(vec![1, 1]),
            output: None,
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn prep_spam_changes_the_state() {
        let mut c = cfg(1, 2, 2, 1);
        c.spam.prep = NoiseSpec::Depolarizing { q: 0.2 };
        let s = prepare(&c).unwrap();
        assert!((s.rho_tilde[(0, 0)].re - 0.9).abs() < 1e-12);
        let v = vectorize(&s.rho_tilde);
        assert!((v.norm() - (0.81f64 + 0.01).sqrt()).abs() < 1e-12);
    }
}
