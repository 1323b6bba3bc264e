//! Filtering, correlation and decay fitting, plus the ground-truth oracle,
//! the figure of merit and the projector-based baseline filter.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{Matrix2, Vector2, U2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::immanant::immanant_fast;
use crate::irrep_matrices::lift_unitary;
use crate::irrep_matrices::{casimir_projectors, gamma_unitary, vectorize, Superrep};
use crate::kostant_check::{immanant_label, zero_weight_trace_of_lift};
use crate::linalg::pseudo_inverse;
use crate::rep_theory::{dim, reduce_label, Partition};
use crate::scalar::Ring;
use crate::simulator::{haar_su_matrix, stream_rng, DataMatrix, SequenceTable, Setup};
use crate::{CMatrix, C64};

/// Function of the sequence product used as filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `imm_κ(U)` for the partition of `m` equivalent to `μ`.
    Immanant,
    /// Trace of `Γ_μ(U)` over the zero-weight subspace.
    ZeroWeightTrace,
}

/// Kernel requested by the user; `Auto` picks the immanant when it exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    #[default]
    Auto,
    Immanant,
    ZeroWeightTrace,
}

/// How `Φ_g` is formed from the filter and data columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// `(1/K) Σ_s f_s d_s`.
    Mean,
    /// `(1/(K−1)) Σ_s f_s (d_s − d̄)`. Same expectation as `Mean` whenever
    /// the filter averages to zero over Haar, i.e. for every non-trivial μ,
    /// but insensitive to the constant trivial-block part of the data.
    #[default]
    Covariance,
}

pub fn is_trivial(mu: &Partition) -> bool {
    reduce_label(mu).is_zero()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterMatrix {
    pub mu: Partition,
    pub kernel: Kernel,
    pub conjugated: bool,
    pub depths: Vec<u32>,
    /// `[depth index][s]`.
    pub values: Vec<Vec<C64>>,
}

fn kernel_value(mu: &Partition, kernel: Kernel, u: &CMatrix) -> Result<C64> {
    if is_trivial(mu) {
        return Ok(C64::new(1.0, 0.0));
    }
    match kernel {
        Kernel::Immanant => {
            let label = immanant_label(mu)
                .ok_or_else(|| Error::Analysis(format!("{mu} has no immanant kernel; use the zero-weight trace")))?;
            immanant_fast(&label, u).map_err(|e| Error::Analysis(e.to_string()))
        }
        Kernel::ZeroWeightTrace => {
            let lifted = lift_unitary(mu, u).map_err(|e| Error::Analysis(e.to_string()))?;
            zero_weight_trace_of_lift(mu, &lifted).map_err(|e| Error::Analysis(e.to_string()))
        }
    }
}

pub fn resolve_kernel(mu: &Partition, choice: KernelChoice) -> Result<Kernel> {
    match choice {
        KernelChoice::Auto => Ok(if immanant_label(mu).is_some() {
            Kernel::Immanant
        } else {
            Kernel::ZeroWeightTrace
        }),
        KernelChoice::Immanant => {
            if immanant_label(mu).is_none() && !is_trivial(mu) {
                return Err(Error::Analysis(format!(
                    "{mu} has no immanant kernel; its reduced label does not partition {}",
                    mu.rank()
                )));
            }
            Ok(Kernel::Immanant)
        }
        KernelChoice::ZeroWeightTrace => Ok(Kernel::ZeroWeightTrace),
    }
}

/// Filter values `f^{(g,s)}` from the sequence products; conjugated by default.
pub fn filter_matrix(
    mu: &Partition,
    table: &SequenceTable,
    choice: KernelChoice,
    conjugate: bool,
) -> Result<FilterMatrix> {
    if mu.rank() != table.modes {
        return Err(Error::Analysis(format!(
            "{mu} is an SU({}) label but the gates are {}x{}",
            mu.rank(),
            table.modes,
            table.modes
        )));
    }
    let kernel = resolve_kernel(mu, choice)?;
    let values = table
        .cells
        .par_iter()
        .map(|row| {
            row.par_iter()
                .map(|cell| {
                    let v = kernel_value(mu, kernel, &cell.product)?;
                    Ok(if conjugate { v.conj() } else { v })
                })
                .collect::<Result<Vec<C64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterMatrix {
        mu: mu.clone(),
        kernel,
        conjugated: conjugate,
        depths: table.depths.clone(),
        values,
    })
}

/// Largest entrywise difference between the two kernels on `table`, when
/// both exist for `μ`.
pub fn kernel_agreement(mu: &Partition, table: &SequenceTable) -> Result<Option<f64>> {
    if immanant_label(mu).is_none() || is_trivial(mu) {
        return Ok(None);
    }
    let a = filter_matrix(mu, table, KernelChoice::Immanant, true)?;
    let b = filter_matrix(mu, table, KernelChoice::ZeroWeightTrace, true)?;
    let worst = a
        .values
        .iter()
        .flatten()
        .zip(b.values.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    Ok(Some(worst))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiPoint {
    pub g: u32,
    pub phi: C64,
    /// Standard error of `Re Φ_g` over sequences.
    pub stderr: f64,
}

fn correlate_rows(
    depths: &[u32],
    f: &[Vec<C64>],
    d: &[Vec<f64>],
    estimator: Estimator,
    idx: &[usize],
) -> Vec<PhiPoint> {
    let k = idx.len() as f64;
    depths
        .iter()
        .enumerate()
        .map(|(gi, &g)| {
            let mean_d = match estimator {
                Estimator::Mean => 0.0,
                Estimator::Covariance => idx.iter().map(|&s| d[gi][s]).sum::<f64>() / k,
            };
            let terms: Vec<C64> = idx.iter().map(|&s| f[gi][s] * (d[gi][s] - mean_d)).collect();
            let norm = match estimator {
                Estimator::Mean => k,
                Estimator::Covariance => (k - 1.0).max(1.0),
            };
            let phi = terms.iter().sum::<C64>() / norm;
            let mean_re = terms.iter().map(|t| t.re).sum::<f64>() / k;
            let var = terms.iter().map(|t| (t.re - mean_re).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
            PhiPoint {
                g,
                phi,
                stderr: (var / k).sqrt(),
            }
        })
        .collect()
}

/// Hadamard correlation `Φ_g` of filter and data, one point per depth.
pub fn correlate(f: &FilterMatrix, d: &DataMatrix, estimator: Estimator) -> Result<Vec<PhiPoint>> {
    let k = check_shapes(f, d)?;
    let idx: Vec<usize> = (0..k).collect();
    Ok(correlate_rows(&f.depths, &f.values, &d.values, estimator, &idx))
}

fn check_shapes(f: &FilterMatrix, d: &DataMatrix) -> Result<usize> {
    let fk = f.values.first().map_or(0, |r| r.len());
    if f.depths != d.depths || d.shape() != (f.depths.len(), fk) || f.values.iter().any(|r| r.len() != fk) {
        return Err(Error::Analysis(format!(
            "filter grid {}x{} does not match data grid {}x{}",
            f.depths.len(),
            fk,
            d.shape().0,
            d.shape().1
        )));
    }
    if fk == 0 {
        return Err(Error::Analysis("no sequences to correlate".into()));
    }
    Ok(fk)
}

/// Fit options for [`fit_decay`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Inclusive `[g_min, g_max]`; all depths when absent.
    pub window: Option<(u32, u32)>,
    /// Abort when `Σ|Im Φ| / Σ|Φ|` exceeds this.
    pub max_imag_ratio: f64,
    /// Lower bound on reported standard errors (exact data fits perfectly).
    pub stderr_floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            window: None,
            max_imag_ratio: 0.05,
            stderr_floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    pub p_hat: f64,
    pub p_stderr: f64,
    pub kappa_hat: C64,
    pub kappa_stderr: f64,
    /// `sqrt(Σ_g r_g²)` of the real-part residuals.
    pub residual_norm: f64,
    /// `residual_norm / |Φ|` at the first fitted depth.
    pub relative_residual: f64,
    pub imag_ratio: f64,
    pub window: (u32, u32),
    pub points: Vec<PhiPoint>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

struct ExpModel<'a> {
    g: &'a [f64],
    y: &'a [f64],
    params: Vector2<f64>,
}

impl LeastSquaresProblem<f64, nalgebra::Dyn, U2> for ExpModel<'_> {
    type ResidualStorage = Owned<f64, nalgebra::Dyn>;
    type JacobianStorage = Owned<f64, nalgebra::Dyn, U2>;
    type ParameterStorage = Owned<f64, U2>;

    fn set_params(&mut self, x: &Vector2<f64>) {
        self.params = *x;
    }

    fn params(&self) -> Vector2<f64> {
        self.params
    }

    fn residuals(&self) -> Option<nalgebra::DVector<f64>> {
        let (kappa, p) = (self.params[0], self.params[1]);
        Some(nalgebra::DVector::from_iterator(
            self.g.len(),
            self.g.iter().zip(self.y).map(|(&g, &y)| kappa * p.powf(g - 1.0) - y),
        ))
    }

    fn jacobian(&self) -> Option<nalgebra::OMatrix<f64, nalgebra::Dyn, U2>> {
        let (kappa, p) = (self.params[0], self.params[1]);
        let mut j = nalgebra::OMatrix::<f64, nalgebra::Dyn, U2>::zeros(self.g.len());
        for (i, &g) in self.g.iter().enumerate() {
            j[(i, 0)] = p.powf(g - 1.0);
            j[(i, 1)] = if g == 1.0 {
                0.0
            } else {
                kappa * (g - 1.0) * p.powf(g - 2.0)
            };
        }
        Some(j)
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Fits `Re Φ_g ≈ κ p^{g−1}` by nonlinear least squares, started from the
/// median of consecutive ratios.
pub fn fit_decay(points: &[PhiPoint], opts: &FitOptions) -> Result<DecayEstimate> {
    let mut pts: Vec<PhiPoint> = points
        .iter()
        .copied()
        .filter(|p| opts.window.is_none_or(|(lo, hi)| p.g >= lo && p.g <= hi))
        .collect();
    pts.sort_by_key(|p| p.g);
    if pts.len() < 3 {
        return Err(Error::Analysis(format!(
            "need at least 3 depths to fit, got {}",
            pts.len()
        )));
    }
    if pts.iter().any(|p| !p.phi.re.is_finite() || !p.phi.im.is_finite()) {
        return Err(Error::Analysis("non-finite Φ values".into()));
    }
    let total: f64 = pts.iter().map(|p| p.phi.norm()).sum();
    if total == 0.0 {
        return Err(Error::Analysis("filtered signal vanishes at every depth".into()));
    }
    let imag_ratio = pts.iter().map(|p| p.phi.im.abs()).sum::<f64>() / total;
    if imag_ratio > opts.max_imag_ratio {
        return Err(Error::Analysis(format!(
            "imaginary part of Φ is {:.1}% of its magnitude (threshold {:.1}%): the block is not self-dual or the inputs are not CPTP",
            100.0 * imag_ratio,
            100.0 * opts.max_imag_ratio
        )));
    }
    let g: Vec<f64> = pts.iter().map(|p| f64::from(p.g)).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.phi.re).collect();
    let mut warnings = Vec::new();
    if y.windows(2).any(|w| w[0] * w[1] < 0.0) {
        warnings.push("Φ changes sign between depths; a single decay may not describe the data".into());
    }

    let ratios: Vec<f64> = pts
        .windows(2)
        .zip(y.windows(2))
        .filter(|(_, w)| w[0] != 0.0 && w[1] / w[0] > 0.0)
        .map(|(p, w)| (w[1] / w[0]).powf(1.0 / f64::from(p[1].g - p[0].g)))
        .collect();
    let p0 = median(ratios).unwrap_or(1.0);
    let x: Vec<f64> = g.iter().map(|&gi| p0.powf(gi - 1.0)).collect();
    let kappa0 = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();

    let model = ExpModel {
        g: &g,
        y: &y,
        params: Vector2::new(kappa0, p0),
    };
    let (model, report) = LevenbergMarquardt::new().with_patience(200).minimize(model);
    let converged = report.termination.was_successful();
    if !converged {
        warnings.push(format!("least squares stopped early: {:?}", report.termination));
    }
    let (kappa, p) = (model.params[0], model.params[1]);
    let res = model.residuals().expect("finite residuals");
    let rss = res.norm_squared();
    let residual_norm = rss.sqrt();
    let n = g.len() as f64;
    let sigma2 = rss / (n - 2.0);
    let jac = model.jacobian().expect("finite jacobian");
    let jtj: Matrix2<f64> = jac.transpose() * &jac;
    let (kappa_se, p_se) = match jtj.try_inverse() {
        Some(inv) => ((sigma2 * inv[(0, 0)]).sqrt(), (sigma2 * inv[(1, 1)]).sqrt()),
        None => {
            warnings.push("singular fit Jacobian".into());
            (f64::NAN, f64::NAN)
        }
    };
    if p > 1.0 + 1e-6 {
        warnings.push(format!("fitted p = {p} exceeds 1"));
    }
    if p < 0.0 {
        warnings.push(format!("fitted p = {p} is negative"));
    }
    let kappa_im = pts
        .iter()
        .zip(&g)
        .map(|(pt, &gi)| pt.phi.im / p.powf(gi - 1.0))
        .sum::<f64>()
        / n;
    Ok(DecayEstimate {
        p_hat: p,
        p_stderr: p_se.max(opts.stderr_floor),
        kappa_hat: C64::new(kappa, kappa_im),
        kappa_stderr: kappa_se.max(opts.stderr_floor),
        residual_norm,
        relative_residual: residual_norm / y[0].abs().max(f64::MIN_POSITIVE),
        imag_ratio,
        window: (pts[0].g, pts[pts.len() - 1].g),
        points: pts,
        converged,
        warnings,
    })
}

/// Options for [`analyze`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub kernel: KernelChoice,
    pub conjugate: bool,
    pub estimator: Estimator,
    pub fit: FitOptions,
    /// Bootstrap resamples over sequences (0 disables).
    pub bootstrap: usize,
    pub bootstrap_seed: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            kernel: KernelChoice::Auto,
            conjugate: true,
            estimator: Estimator::Covariance,
            fit: FitOptions::default(),
            bootstrap: 0,
            bootstrap_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub resamples: usize,
    pub failed: usize,
    pub p_std: f64,
    /// 2.5% and 97.5% percentiles.
    pub p_interval: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrepAnalysis {
    pub mu: Partition,
    pub reduced: Partition,
    pub dim: u64,
    pub kernel: Kernel,
    pub conjugated: bool,
    pub estimator: Estimator,
    pub fit: DecayEstimate,
    pub bootstrap: Option<Bootstrap>,
}

/// Resamples sequences with replacement and refits.
pub fn bootstrap(
    f: &FilterMatrix,
    d: &DataMatrix,
    estimator: Estimator,
    fit: &FitOptions,
    resamples: usize,
    seed: u64,
) -> Result<Bootstrap> {
    let k = check_shapes(f, d)?;
    let fits: Vec<Option<f64>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let idx: Vec<usize> = (0..k).map(|_| rng.random_range(0..k)).collect();
            let pts = correlate_rows(&f.depths, &f.values, &d.values, estimator, &idx);
            fit_decay(&pts, fit).ok().map(|e| e.p_hat)
        })
        .collect();
    let ok: Vec<f64> = fits.iter().flatten().copied().collect();
    if ok.len() < 2 {
        return Err(Error::Analysis("bootstrap: too few successful refits".into()));
    }
    let mean = ok.iter().sum::<f64>() / ok.len() as f64;
    let std = (ok.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (ok.len() - 1) as f64).sqrt();
    let mut sorted = ok.clone();
    sorted.sort_by(f64::total_cmp);
    let q = |a: f64| sorted[((a * (sorted.len() - 1) as f64).round() as usize).min(sorted.len() - 1)];
    Ok(Bootstrap {
        resamples,
        failed: resamples - ok.len(),
        p_std: std,
        p_interval: (q(0.025), q(0.975)),
    })
}

/// Filter, correlate and fit one irrep.
pub fn analyze(mu: &Partition, table: &SequenceTable, d: &DataMatrix, opts: &AnalysisOptions) -> Result<IrrepAnalysis> {
    let f = filter_matrix(mu, table, opts.kernel, opts.conjugate)?;
    // the trivial filter is constant, so only the plain mean carries signal
    let estimator = if is_trivial(mu) {
        Estimator::Mean
    } else {
        opts.estimator
    };
    let points = correlate(&f, d, estimator)?;
    let fit = fit_decay(&points, &opts.fit)?;
    let boot = if opts.bootstrap > 0 {
        Some(bootstrap(
            &f,
            d,
            estimator,
            &opts.fit,
            opts.bootstrap,
            opts.bootstrap_seed,
        )?)
    } else {
        None
    };
    Ok(IrrepAnalysis {
        mu: mu.clone(),
        reduced: reduce_label(mu),
        dim: dim(mu),
        kernel: f.kernel,
        conjugated: f.conjugated,
        estimator,
        fit,
        bootstrap: boot,
    })
}

/// `tr(P_μ S)/d_μ` for a superoperator `S` on the `λ` sector.
pub fn ground_truth_p(mu: &Partition, superrep: &Superrep, superop: &CMatrix) -> Result<f64> {
    let p = superrep.projector(mu).map_err(|e| Error::Analysis(e.to_string()))?;
    if p.shape() != superop.shape() {
        return Err(Error::Analysis(format!(
            "channel superoperator is {}x{}, projector is {}x{}",
            superop.nrows(),
            superop.ncols(),
            p.nrows(),
            p.ncols()
        )));
    }
    let tr: C64 = p.iter().zip(superop.transpose().iter()).map(|(a, b)| a * b).sum();
    let val = tr / dim(mu) as f64;
    if val.im.abs() > 1e-10 {
        return Err(Error::Analysis(format!(
            "ground-truth p for {mu} has imaginary part {:.3e}",
            val.im
        )));
    }
    Ok(val.re)
}

/// Ground truth for every irrep of the analysed sector `n` of a setup.
pub fn ground_truth_all(setup: &Setup, n: u32) -> Result<Vec<(Partition, f64)>> {
    let lambda = crate::rep_theory::symmetric_label(n, setup.space.modes());
    let sr = casimir_projectors(&lambda).map_err(|e| Error::Analysis(e.to_string()))?;
    let block = setup
        .noise
        .restrict_to_sector(n)
        .map_err(|e| Error::Analysis(e.to_string()))?;
    sr.decomposition
        .irreps
        .iter()
        .map(|mu| Ok((mu.clone(), ground_truth_p(mu, &sr, &block)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureOfMerit<T> {
    pub f: T,
    pub d_lambda: u64,
    /// `(μ, d_μ p_μ)`.
    pub contributions: Vec<(Partition, T)>,
}

/// `F = d_λ^{−2} Σ_μ d_μ p_μ` over the decomposition of `λ`.
pub fn figure_of_merit<T: Ring>(p: &[(Partition, T)], lambda: &Partition) -> Result<FigureOfMerit<T>> {
    let dec = crate::rep_theory::pieri_decompose(lambda).map_err(|e| Error::Analysis(e.to_string()))?;
    let d_lambda = dim(lambda);
    let mut contributions = Vec::with_capacity(dec.len());
    let mut total = T::zero();
    for mu in &dec.irreps {
        let target = reduce_label(mu);
        let val = p
            .iter()
            .find(|(nu, _)| reduce_label(nu) == target)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::Analysis(format!("no p value for {mu}")))?;
        let c = T::from_int(dim(mu) as i64) * val;
        total = total + c.clone();
        contributions.push((mu.clone(), c));
    }
    let dl = T::from_int(d_lambda as i64);
    Ok(FigureOfMerit {
        f: total / (dl.clone() * dl),
        d_lambda,
        contributions,
    })
}

/// Options of the projector-based reference filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineOptions {
    /// Haar samples in the Monte Carlo estimate of `S`.
    pub samples: usize,
    pub seed: u64,
    /// Relative singular-value cutoff of `S⁺`.
    pub cutoff: f64,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        BaselineOptions {
            samples: 5000,
            seed: 0,
            cutoff: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineIrrep {
    pub mu: Partition,
    pub fit: DecayEstimate,
    /// `⟨ρ|P_μ|ρ̃⟩`, the value the prefactor should approach.
    pub c_mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub samples: usize,
    pub s_rank: usize,
    pub irreps: Vec<BaselineIrrep>,
}

/// Reference estimator `f = ⟨ρ|P_μ S⁺ Γ(U)†|E⟩` with
/// `S ≈ (1/N) Σ_i Γ(U_i)†|E⟩⟨Ẽ|Γ(U_i)`.
pub fn original_filter_baseline(
    setup: &Setup,
    table: &SequenceTable,
    d: &DataMatrix,
    mus: &[Partition],
    estimator: Estimator,
    fit: &FitOptions,
    opts: &BaselineOptions,
) -> Result<Baseline> {
    let sectors = setup.space.sectors();
    if sectors.len() != 1 {
        return Err(Error::Analysis(
            "the baseline filter needs a fixed photon number".into(),
        ));
    }
    let n = sectors[0];
    let m = setup.space.modes();
    let lambda = crate::rep_theory::symmetric_label(n, m);
    let sr = casimir_projectors(&lambda).map_err(|e| Error::Analysis(e.to_string()))?;
    let vec_e = vectorize(&setup.e);
    // effective measurement seen after the last gate: noise, then readout SPAM
    let e_eff = setup.noise.apply_dual(&setup.e_tilde);
    let vec_e_eff = vectorize(&e_eff);
    let dd = vec_e.len();
    // fixed chunks summed in order keep the result independent of the thread count
    const CHUNK: usize = 64;
    let chunks = (0..opts.samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| -> Result<CMatrix> {
            let mut acc = CMatrix::zeros(dd, dd);
            for i in c * CHUNK..((c + 1) * CHUNK).min(opts.samples) {
                let u = haar_su_matrix(m, &mut stream_rng(opts.seed, i as u64));
                let g = gamma_unitary(n, m, &u)?;
                let left = g.adjoint() * &vec_e;
                let right = g.adjoint() * &vec_e_eff;
                acc += left * right.adjoint();
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let s = chunks.into_iter().fold(CMatrix::zeros(dd, dd), |a, b| a + b) / C64::new(opts.samples as f64, 0.0);
    let (s_pinv, s_rank) = pseudo_inverse(&s, opts.cutoff);
    let vec_rho = vectorize(&setup.rho);
    let vec_rho_tilde = vectorize(&setup.rho_tilde);
    let mut irreps = Vec::with_capacity(mus.len());
    for mu in mus {
        let p = sr.projector(mu).map_err(|e| Error::Analysis(e.to_string()))?;
        let support = (p * &s_pinv * &s * p - p).norm() / p.norm();
        if support > 1e-3 {
            return Err(Error::Analysis(format!(
                "S⁺ cutoff removes part of the {mu} block (defect {support:.2e}); S is ill-conditioned"
            )));
        }
        // row vector ⟨ρ|P_μ S⁺
        let left = vec_rho.adjoint() * p * &s_pinv;
        let values = table
            .cells
            .par_iter()
            .map(|row| {
                row.iter()
                    .map(|cell| {
                        let g = gamma_unitary(n, m, &cell.product)?;
                        Ok((&left * g.adjoint() * &vec_e)[(0, 0)])
                    })
                    .collect::<Result<Vec<C64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let f = FilterMatrix {
            mu: mu.clone(),
            kernel: Kernel::Immanant,
            conjugated: false,
            depths: table.depths.clone(),
            values,
        };
        let estimator = if is_trivial(mu) { Estimator::Mean } else { estimator };
        let points = correlate(&f, d, estimator)?;
        let fit = fit_decay(&points, fit)?;
        let c_mu = (vec_rho.adjoint() * p * &vec_rho_tilde)[(0, 0)].re;
        irreps.push(BaselineIrrep {
            mu: mu.clone(),
            fit,
            c_mu,
        });
    }
    Ok(Baseline {
        samples: opts.samples,
        s_rank,
        irreps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immanant::permanent;
    use crate::simulator::{build_sequences, prepare, simulate, ExperimentConfig, NoiseSpec};
    use num_rational::Ratio;

    fn p(v: &[u32]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    fn synthetic(kappa: f64, rate: f64, depths: std::ops::RangeInclusive<u32>) -> Vec<PhiPoint> {
        depths
            .map(|g| PhiPoint {
                g,
                phi: C64::new(kappa * rate.powi(g as i32 - 1), 0.0),
                stderr: 0.0,
            })
            .collect()
    }

    #[test]
    fn exact_fit_recovery() {
        let e = fit_decay(&synthetic(0.5, 0.9, 1..=10), &FitOptions::default()).unwrap();
        assert!((e.p_hat - 0.9).abs() < 1e-9);
        assert!((e.kappa_hat.re - 0.5).abs() < 1e-9);
        assert!(e.residual_norm < 1e-10);
        let e = fit_decay(&synthetic(0.3, 1.0, 1..=10), &FitOptions::default()).unwrap();
        assert!((e.p_hat - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fit_window_and_errors() {
        let pts = synthetic(0.5, 0.8, 1..=10);
        let opts = FitOptions {
            window: Some((3, 7)),
            ..FitOptions::default()
        };
        let e = fit_decay(&pts, &opts).unwrap();
        assert_eq!(e.window, (3, 7));
        assert_eq!(e.points.len(), 5);
        assert!(fit_decay(&pts[..2], &FitOptions::default()).is_err());
        let mut imag = pts.clone();
        for q in &mut imag {
            q.phi = C64::new(q.phi.re, q.phi.re);
        }
        assert!(fit_decay(&imag, &FitOptions::default()).is_err());
    }

    #[test]
    fn alternating_data_warns() {
        let pts: Vec<PhiPoint> = (1..=6)
            .map(|g| PhiPoint {
                g,
                phi: C64::new(if g % 2 == 0 { 0.5 } else { -0.5 }, 0.0),
                stderr: 0.0,
            })
            .collect();
        let e = fit_decay(&pts, &FitOptions::default()).unwrap();
        assert!(!e.warnings.is_empty());
    }

    #[test]
    fn mean_correlation_of_ones() {
        let f = FilterMatrix {
            mu: p(&[2, 0]),
            kernel: Kernel::Immanant,
            conjugated: true,
            depths: vec![1, 2],
            values: vec![vec![C64::new(1.0, 0.0); 5]; 2],
        };
        let d = DataMatrix {
            depths: vec![1, 2],
            values: vec![vec![1.0; 5]; 2],
            shots: 0,
        };
        let pts = correlate(&f, &d, Estimator::Mean).unwrap();
        assert!(pts.iter().all(|q| q.phi == C64::new(1.0, 0.0)));
        let bad = DataMatrix {
            depths: vec![1, 2],
            values: vec![vec![1.0; 4]; 2],
            shots: 0,
        };
        assert!(correlate(&f, &bad, Estimator::Mean).is_err());
    }

    #[test]
    fn filter_of_depth_one_cells_is_conjugate_permanent() {
        let mut c = ExperimentConfig::new(1, 2, 3, 4);
        c.design = crate::simulator::SequenceDesign::Independent;
        let t = build_sequences(&c).unwrap();
        let f = filter_matrix(&p(&[2, 0]), &t, KernelChoice::Auto, true).unwrap();
        for s in 0..4 {
            let expect = permanent(&t.cell(0, s).gates[0]).unwrap().conj();
            assert!((f.values[0][s] - expect).norm() < 1e-12);
        }
        let id = SequenceTable::identity(3, vec![1, 2], 3);
        let f = filter_matrix(&p(&[3, 2, 1]), &id, KernelChoice::Auto, true).unwrap();
        assert!(f
            .values
            .iter()
            .flatten()
            .all(|v| (v - C64::new(2.0, 0.0)).norm() < 1e-12));
        let f = filter_matrix(&p(&[4, 2, 0]), &id, KernelChoice::Auto, true).unwrap();
        assert_eq!(f.kernel, Kernel::ZeroWeightTrace);
        assert!(f
            .values
            .iter()
            .flatten()
            .all(|v| (v - C64::new(3.0, 0.0)).norm() < 1e-9));
        assert!(filter_matrix(&p(&[4, 2, 0]), &id, KernelChoice::Immanant, true).is_err());
    }

    #[test]
    fn kernels_agree() {
        let t = build_sequences(&ExperimentConfig::new(2, 3, 3, 5)).unwrap();
        let worst = kernel_agreement(&p(&[3, 2, 1]), &t).unwrap().unwrap();
        assert!(worst < 1e-9);
        assert_eq!(kernel_agreement(&p(&[4, 2, 0]), &t).unwrap(), None);
    }

    #[test]
    fn ground_truth_values() {
        let lambda = p(&[1, 0]);
        let sr = casimir_projectors(&lambda).unwrap();
        let space = crate::simulator::FockSpace::single(2, 1).unwrap();
        let ideal = crate::simulator::make_channel(&NoiseSpec::Ideal, &space).unwrap();
        for mu in &sr.decomposition.irreps {
            assert!((ground_truth_p(mu, &sr, ideal.superop()).unwrap() - 1.0).abs() < 1e-12);
        }
        let dep = crate::simulator::make_channel(&NoiseSpec::Depolarizing { q: 0.05 }, &space).unwrap();
        assert!((ground_truth_p(&p(&[2, 0]), &sr, dep.superop()).unwrap() - 0.95).abs() < 1e-12);
        assert!((ground_truth_p(&p(&[1, 1]), &sr, dep.superop()).unwrap() - 1.0).abs() < 1e-12);
        let q = 0.3;
        let mix = crate::simulator::make_channel(&NoiseSpec::Mixing { q, v_seed: 3 }, &space).unwrap();
        let v = haar_su_matrix(2, &mut stream_rng(3, u64::MAX));
        let gv = gamma_unitary(1, 2, &v).unwrap();
        let mu = p(&[2, 0]);
        let pv = ground_truth_p(&mu, &sr, &gv).unwrap();
        let expect = 1.0 - q + q * pv;
        assert!((ground_truth_p(&mu, &sr, mix.superop()).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn figure_of_merit_values() {
        let lambda = p(&[1, 0]);
        let f = figure_of_merit(&[(p(&[1, 1]), 1.0f64), (p(&[2, 0]), 0.95)], &lambda).unwrap();
        assert!((f.f - 0.9625).abs() < 1e-15);
        let lambda = p(&[2, 0, 0]);
        let ones: Vec<(Partition, Ratio<i64>)> = crate::rep_theory::pieri_decompose(&lambda)
            .unwrap()
            .irreps
            .into_iter()
            .map(|mu| (mu, Ratio::from_integer(1)))
            .collect();
        assert_eq!(figure_of_merit(&ones, &lambda).unwrap().f, Ratio::from_integer(1));
        assert!(figure_of_merit(&ones[..2], &lambda).is_err());
    }

    #[test]
    fn depolarizing_end_to_end() {
        let mut c = ExperimentConfig::new(1, 2, 20, 200);
        c.noise = NoiseSpec::Depolarizing { q: 0.05 };
        c.seed = 11;
        let t = build_sequences(&c).unwrap();
        let setup = prepare(&c).unwrap();
        let d = simulate(&c, &setup, &t).unwrap();
        let a = analyze(&p(&[2, 0]), &t, &d, &AnalysisOptions::default()).unwrap();
        assert!((a.fit.p_hat - 0.95).abs() < 1e-9, "{}", a.fit.p_hat);
        assert!(a.fit.relative_residual < 1e-6);
        let triv = analyze(&p(&[1, 1]), &t, &d, &AnalysisOptions::default()).unwrap();
        // finite-K leakage of the decaying block into the plain mean
        assert!((triv.fit.p_hat - 1.0).abs() < 5e-3, "{}", triv.fit.p_hat);
        let base = original_filter_baseline(
            &setup,
            &t,
            &d,
            &[p(&[2, 0])],
            Estimator::Covariance,
            &FitOptions::default(),
            &BaselineOptions::default(),
        )
        .unwrap();
        let b = &base.irreps[0];
        assert!((b.fit.p_hat - 0.95).abs() < 1e-9);
        assert!(
            (b.fit.kappa_hat.re - b.c_mu).abs() < 0.25 * b.c_mu.abs(),
            "{} vs {}",
            b.fit.kappa_hat,
            b.c_mu
        );
    }

    #[test]
    fn mixing_noise_decays_to_oracle() {
        let mut c = ExperimentConfig::new(1, 2, 12, 400);
        c.noise = NoiseSpec::Mixing { q: 0.1, v_seed: 5 };
        c.seed = 12;
        let t = build_sequences(&c).unwrap();
        let setup = prepare(&c).unwrap();
        let d = simulate(&c, &setup, &t).unwrap();
        let truth = ground_truth_all(&setup, 1).unwrap();
        let a = analyze(&p(&[2, 0]), &t, &d, &AnalysisOptions::default()).unwrap();
        let oracle = truth.iter().find(|(mu, _)| *mu == p(&[2, 0])).unwrap().1;
        assert!((a.fit.p_hat - oracle).abs() < 0.02, "{} vs {oracle}", a.fit.p_hat);
    }

    #[test]
    fn bootstrap_brackets_estimate() {
        let mut c = ExperimentConfig::new(1, 2, 10, 100);
        c.noise = NoiseSpec::Depolarizing { q: 0.1 };
        c.shots = 500;
        c.seed = 3;
        let t = build_sequences(&c).unwrap();
        let d = simulate(&c, &prepare(&c).unwrap(), &t).unwrap();
        let opts = AnalysisOptions {
            bootstrap: 100,
            bootstrap_seed: 4,
            ..AnalysisOptions::default()
        };
        let a = analyze(&p(&[2, 0]), &t, &d, &opts).unwrap();
        let b = a.bootstrap.unwrap();
        assert!(b.p_std > 0.0);
        assert!(b.p_interval.0 <= a.fit.p_hat && a.fit.p_hat <= b.p_interval.1);
    }
}
