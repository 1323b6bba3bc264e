//! End-to-end runs: sequences → simulation → filters → fits → figure of merit.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    analyze, figure_of_merit, ground_truth_all, kernel_agreement, original_filter_baseline, Baseline, FigureOfMerit,
    IrrepAnalysis,
};
use crate::config::{IrrepSelection, PipelineConfig};
use crate::error::{Error, Result};
use crate::io::{self, Provenance};
use crate::rep_theory::{pieri_decompose, reduce_label, symmetric_label, Partition};
use crate::simulator::{build_sequences, prepare, simulate, DataMatrix, SequenceTable, Setup};

pub const SEQUENCES_FILE: &str = "sequences.json";
pub const DATA_FILE: &str = "data.csv";
pub const REPORT_FILE: &str = "report.json";

/// Per-irrep results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrepReport {
    #[serde(flatten)]
    pub analysis: IrrepAnalysis,
    /// `tr(P_μ Γ(ℰ))/d_μ`, when the noise is known.
    pub ground_truth_p: Option<f64>,
    /// Largest entrywise gap between the two kernels, when both exist.
    pub kernel_agreement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureOfMeritReport {
    pub fitted: Option<FigureOfMerit<f64>>,
    pub oracle: Option<FigureOfMerit<f64>>,
    pub relative_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub config: Option<PipelineConfig>,
    pub photons: u32,
    pub modes: usize,
    pub lambda: Partition,
    pub depths: Vec<u32>,
    pub sequences: u32,
    pub shots: u64,
    pub setup: Option<String>,
    pub irreps: Vec<IrrepReport>,
    pub figure_of_merit: FigureOfMeritReport,
    pub baseline: Option<Baseline>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn irrep(&self, mu: &Partition) -> Option<&IrrepReport> {
        let target = reduce_label(mu);
        self.irreps.iter().find(|r| reduce_label(&r.analysis.mu) == target)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(format!("report json: {e}")))
    }
}

/// Inputs of an analysis pass, independent of where the data came from.
pub struct AnalysisInputs<'a> {
    pub photons: u32,
    pub table: &'a SequenceTable,
    pub data: &'a DataMatrix,
    pub config: &'a PipelineConfig,
    /// Known state, measurement and noise, if any.
    pub setup: Option<&'a Setup>,
    pub provenance: Provenance,
}

/// Labels selected for analysis, padded to the mode count.
pub fn selected_irreps(selection: &IrrepSelection, photons: u32, modes: usize) -> Result<Vec<Partition>> {
    let lambda = symmetric_label(photons, modes);
    let dec = pieri_decompose(&lambda)?;
    match selection {
        IrrepSelection::All => Ok(dec.irreps),
        IrrepSelection::Labels(labels) => labels
            .iter()
            .map(|l| {
                let mu = l.padded(modes)?;
                let target = reduce_label(&mu);
                dec.irreps
                    .iter()
                    .find(|nu| reduce_label(nu) == target)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("{l} does not occur in the decomposition for {lambda}")))
            })
            .collect(),
    }
}

pub fn analyze_data(inputs: &AnalysisInputs<'_>) -> Result<Report> {
    let cfg = inputs.config;
    let modes = inputs.table.modes;
    let n = inputs.photons;
    let lambda = symmetric_label(n, modes);
    if inputs.data.depths != inputs.table.depths {
        return Err(Error::Analysis("data and sequences have different depth lists".into()));
    }
    let mus = selected_irreps(&cfg.analysis.irreps, n, modes)?;
    let opts = cfg.analysis_options();
    let mut notes = Vec::new();

    let truth = match inputs.setup {
        Some(setup) => Some(ground_truth_all(setup, n)?),
        None => None,
    };
    let lookup = |table: &Option<Vec<(Partition, f64)>>, mu: &Partition| {
        table
            .as_ref()
            .and_then(|t| t.iter().find(|(nu, _)| nu == mu).map(|(_, p)| *p))
    };

    let irreps = mus
        .par_iter()
        .map(|mu| {
            let analysis = analyze(mu, inputs.table, inputs.data, &opts)?;
            Ok(IrrepReport {
                ground_truth_p: lookup(&truth, mu),
                kernel_agreement: kernel_agreement(mu, inputs.table)?,
                analysis,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let all = pieri_decompose(&lambda)?;
    let covered = all.irreps.iter().all(|mu| irreps.iter().any(|r| &r.analysis.mu == mu));
    let fitted = if covered {
        let p: Vec<_> = irreps
            .iter()
            .map(|r| (r.analysis.mu.clone(), r.analysis.fit.p_hat))
            .collect();
        Some(figure_of_merit(&p, &lambda)?)
    } else {
        notes.push("F from fitted values needs every irrep of the decomposition".into());
        None
    };
    let oracle = match &truth {
        Some(t) => Some(figure_of_merit(t, &lambda)?),
        None => None,
    };
    let relative_difference = match (&fitted, &oracle) {
        (Some(a), Some(b)) => Some(((a.f - b.f) / b.f).abs()),
        _ => None,
    };

    let baseline = match (cfg.analysis.baseline, inputs.setup) {
        (false, _) => None,
        (true, None) => {
            notes.push("baseline skipped: needs the state and measurement from a config".into());
            None
        }
        (true, Some(setup)) if setup.space.sectors().len() != 1 => {
            notes.push("baseline skipped: only defined for a fixed photon number".into());
            None
        }
        (true, Some(setup)) => Some(original_filter_baseline(
            setup,
            inputs.table,
            inputs.data,
            &mus,
            opts.estimator,
            &opts.fit,
            &cfg.baseline_options(),
        )?),
    };

    for r in &irreps {
        for w in &r.analysis.fit.warnings {
            notes.push(format!("{}: {w}", r.analysis.mu));
        }
    }

    Ok(Report {
        provenance: inputs.provenance.clone(),
        config: Some(cfg.clone()),
        photons: n,
        modes,
        lambda,
        depths: inputs.table.depths.clone(),
        sequences: inputs.table.sequences,
        shots: inputs.data.shots,
        setup: inputs.setup.map(|s| s.description.clone()),
        irreps,
        figure_of_merit: FigureOfMeritReport {
            fitted,
            oracle,
            relative_difference,
        },
        baseline,
        notes,
    })
}

/// Everything one run produces.
pub struct Artifacts {
    pub config_sha256: String,
    pub table: SequenceTable,
    pub data: DataMatrix,
    pub report: Report,
}

/// Sequences and data for a config, without analysis.
pub fn simulate_config(config: &PipelineConfig) -> Result<(Setup, SequenceTable, DataMatrix)> {
    let exp = config.resolved()?.experiment();
    let setup = prepare(&exp)?;
    let table = build_sequences(&exp)?;
    let data = simulate(&exp, &setup, &table)?;
    Ok((setup, table, data))
}

/// Full run. Writes `sequences.json`, `data.csv` and `report.json` into
/// `out_dir` when one is given.
pub fn run_pipeline(config: &PipelineConfig, out_dir: Option<&Path>) -> Result<Artifacts> {
    let config = config.resolved()?;
    let sha = config.sha256()?;
    let prov = Provenance::current(Some(sha.clone()));
    let (setup, table, data) = simulate_config(&config)?;
    let report = analyze_data(&AnalysisInputs {
        photons: config.photons,
        table: &table,
        data: &data,
        config: &config,
        setup: Some(&setup),
        provenance: prov.clone(),
    })?;
    if let Some(dir) = out_dir {
        io::write_sequences_json(&dir.join(SEQUENCES_FILE), &table, &prov)?;
        io::write_data_csv(&dir.join(DATA_FILE), &data, &prov)?;
        io::write(&dir.join(REPORT_FILE), &report.to_json()?)?;
    }
    Ok(Artifacts {
        config_sha256: sha,
        table,
        data,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::NoiseSpec;

    fn p(v: &[u32]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    fn small() -> PipelineConfig {
        let mut c = PipelineConfig::demo();
        c.depths = Some((1..=8).collect());
        c.sequences = 40;
        c
    }

    #[test]
    fn demo_shape() {
        let a = run_pipeline(&small(), None).unwrap();
        let r = &a.report;
        assert_eq!(r.irreps.len(), 2);
        let adj = r.irrep(&p(&[2, 0])).unwrap();
        assert!((adj.ground_truth_p.unwrap() - 0.95).abs() < 1e-12);
        assert!((adj.analysis.fit.p_hat - 0.95).abs() < 0.02);
        assert!(adj.kernel_agreement.unwrap() < 1e-9);
        let fm = &r.figure_of_merit;
        assert!((fm.oracle.as_ref().unwrap().f - 0.9625).abs() < 1e-12);
        assert!(fm.relative_difference.unwrap() < 0.01);
        assert_eq!(r.provenance.config_sha256.as_deref(), Some(a.config_sha256.as_str()));
    }

    #[test]
    fn deterministic_report() {
        let a = run_pipeline(&small(), None).unwrap().report.to_json().unwrap();
        let b = run_pipeline(&small(), None).unwrap().report.to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn label_selection() {
        let got = selected_irreps(&IrrepSelection::Labels(vec![p(&[2])]), 1, 2).unwrap();
        assert_eq!(got, vec![p(&[2, 0])]);
        let got = selected_irreps(&IrrepSelection::Labels(vec![p(&[3, 1])]), 1, 2).unwrap();
        assert_eq!(got, vec![p(&[2, 0])]);
        assert!(selected_irreps(&IrrepSelection::Labels(vec![p(&[4, 0])]), 1, 2).is_err());
        let mut c = small();
        c.analysis.irreps = IrrepSelection::Labels(vec![p(&[2, 0])]);
        let r = run_pipeline(&c, None).unwrap().report;
        assert!(r.figure_of_merit.fitted.is_none());
        assert!(!r.notes.is_empty());
    }

    #[test]
    fn writes_artifacts() {
        let dir = std::env::temp_dir().join(format!("immrb-pipeline-{}", std::process::id()));
        let mut c = small();
        c.noise = NoiseSpec::Ideal;
        let a = run_pipeline(&c, Some(&dir)).unwrap();
        let (data, prov) = io::read_data_csv(&dir.join(DATA_FILE)).unwrap();
        assert_eq!(data, a.data);
        assert_eq!(prov.config_sha256, Some(a.config_sha256.clone()));
        let (table, _) = io::read_sequences_json(&dir.join(SEQUENCES_FILE)).unwrap();
        assert_eq!(table, a.table);
        let report: Report = serde_json::from_str(&io::read(&dir.join(REPORT_FILE)).unwrap()).unwrap();
        assert_eq!(report, a.report);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
