mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use immrb::analysis::{Estimator, KernelChoice};
use immrb::config::{AnalysisConfig, IrrepSelection, PipelineConfig};
use immrb::gt_basis::{is_zero_weight, occupation, weight, GtBasis};
use immrb::immanant::immanant;
use immrb::io::{self, fmt_complex, Provenance};
use immrb::irrep_matrices::generators;
use immrb::kostant_check::{immanant_label, verify_kostant};
use immrb::pipeline::{self, analyze_data, AnalysisInputs, Report};
use immrb::rep_theory::{casimir_eigenvalue, cost_counts, dim, pieri_decompose, reduce_label, symmetric_label};
use immrb::selfcheck::{run_selfcheck, Fault};
use immrb::simulator::prepare;
use immrb::symmetric_group::CharacterTable;
use immrb::Partition;

#[derive(Parser)]
#[command(
    name = "immrb",
    version,
    about = "Immanant-filtered randomized benchmarking for linear optics"
)]
struct Cli {
    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (`simulate`, `run`) or report file (`filter`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Irreps of λ ⊗ λ* for n photons in m modes, with filter cost counts.
    Decompose {
        #[arg(long)]
        photons: u32,
        #[arg(long)]
        modes: usize,
    },
    /// Character table of the symmetric group S_d.
    Characters {
        #[arg(long)]
        degree: usize,
    },
    /// Immanant of a complex matrix read from CSV (`re+imj` entries).
    Immanant {
        #[arg(long)]
        partition: Partition,
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Gelfand–Tsetlin basis of an irrep.
    Gt {
        #[arg(long)]
        irrep: Partition,
        #[arg(long)]
        modes: Option<usize>,
        /// Only zero-weight patterns.
        #[arg(long)]
        zero_weight: bool,
        /// Write the generator matrices E_ij as CSV files into this directory.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Checks that the zero-weight trace equals the immanant on Haar samples.
    KostantVerify {
        #[arg(long)]
        irrep: Partition,
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Generates sequences and simulated data (sequences.json, data.csv).
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Filters, correlates and fits existing data.
    Filter {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        sequences: PathBuf,
        /// `all` or a label such as `2,0`.
        #[arg(long, default_value = "all")]
        irrep: String,
        /// Config with photons, state, measurement and noise (enables ground truth).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Photon number when no config is given.
        #[arg(long)]
        photons: Option<u32>,
        #[arg(long)]
        plot: Option<PathBuf>,
        /// `original` also runs the projector-based reference filter.
        #[arg(long)]
        baseline: Option<String>,
        #[arg(long, value_parser = parse_kernel)]
        kernel: Option<KernelChoice>,
        #[arg(long, value_parser = parse_estimator)]
        estimator: Option<Estimator>,
        /// Use imm(U) instead of its complex conjugate.
        #[arg(long)]
        no_conjugate: bool,
        /// Inclusive depth window `gmin,gmax`.
        #[arg(long, value_parser = parse_window)]
        fit_window: Option<(u32, u32)>,
        #[arg(long)]
        bootstrap: Option<usize>,
    },
    /// Full pipeline: sequences, simulation, filtering, fits and F.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use the built-in demo configuration.
        #[arg(long, conflicts_with = "config")]
        demo: bool,
        /// Also write decay.svg.
        #[arg(long)]
        plot: bool,
    },
    /// Runs the built-in identity suite.
    Selfcheck {
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
    },
}

fn parse_kernel(s: &str) -> Result<KernelChoice, String> {
    match s {
        "auto" => Ok(KernelChoice::Auto),
        "immanant" => Ok(KernelChoice::Immanant),
        "zero-weight-trace" | "zero_weight_trace" => Ok(KernelChoice::ZeroWeightTrace),
        _ => Err(format!("unknown kernel '{s}' (auto, immanant, zero-weight-trace)")),
    }
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    match s {
        "mean" => Ok(Estimator::Mean),
        "covariance" => Ok(Estimator::Covariance),
        _ => Err(format!("unknown estimator '{s}' (mean, covariance)")),
    }
}

fn parse_window(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once(',').ok_or("expected gmin,gmax")?;
    let a = a.trim().parse().map_err(|_| format!("bad depth '{a}'"))?;
    let b = b.trim().parse().map_err(|_| format!("bad depth '{b}'"))?;
    if a >= b {
        return Err("gmin must be below gmax".into());
    }
    Ok((a, b))
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn padded(mu: &Partition, modes: Option<usize>) -> Result<Partition> {
    Ok(match modes {
        Some(m) => mu.padded(m)?,
        None => mu.clone(),
    })
}

fn decompose(photons: u32, modes: usize) -> Result<()> {
    let lambda = symmetric_label(photons, modes);
    let dec = pieri_decompose(&lambda)?;
    let irreps: Vec<_> = dec
        .irreps
        .iter()
        .map(|mu| {
            json!({
                "mu": mu,
                "dim": dim(mu),
                "reduced": reduce_label(mu),
                "casimir": casimir_eigenvalue(mu),
                "immanant_label": immanant_label(mu),
            })
        })
        .collect();
    let total: u64 = dec.irreps.iter().map(dim).sum();
    print_json(&json!({
        "lambda": lambda,
        "d_lambda": dim(&lambda),
        "irreps": irreps,
        "sum_dims": total,
        "cost_counts": cost_counts(&lambda)?,
    }))
}

fn characters(degree: usize, as_json: bool) -> Result<()> {
    let t = CharacterTable::new(degree)?;
    if as_json {
        return print_json(&t);
    }
    let head: Vec<String> = t.classes.iter().map(|c| c.to_string()).collect();
    let rows: Vec<String> = t.irreps.iter().map(|k| k.to_string()).collect();
    let w0 = rows.iter().map(String::len).max().unwrap_or(0).max(5);
    let w = head
        .iter()
        .map(String::len)
        .chain(t.values.iter().flatten().map(|v| v.to_string().len()))
        .max()
        .unwrap_or(1);
    print!("{:<w0$}", "class");
    for h in &head {
        print!("  {h:>w$}");
    }
    println!();
    print!("{:<w0$}", "size");
    for s in &t.class_sizes {
        print!("  {s:>w$}");
    }
    println!();
    for (r, vals) in rows.iter().zip(&t.values) {
        print!("{r:<w0$}");
        for v in vals {
            print!("  {v:>w$}");
        }
        println!();
    }
    Ok(())
}

fn gt(mu: &Partition, zero_weight: bool, dump: Option<&Path>) -> Result<()> {
    let basis = GtBasis::new(mu)?;
    let patterns: Vec<_> = basis
        .patterns
        .iter()
        .enumerate()
        .filter(|(_, p)| !zero_weight || is_zero_weight(p))
        .map(|(i, p)| {
            json!({
                "index": i,
                "rows": p.rows,
                "occupation": occupation(p),
                "weight": weight(p),
                "zero_weight": is_zero_weight(p),
            })
        })
        .collect();
    if let Some(dir) = dump {
        let set = generators(mu)?;
        let m = mu.rank();
        for i in 0..m {
            for j in 0..m {
                let file = dir.join(format!("E_{}{}.csv", i + 1, j + 1));
                io::write(&file, &io::complex_matrix_csv(set.unit(i, j)))?;
            }
        }
    }
    print_json(&json!({
        "mu": mu,
        "dim": basis.len(),
        "zero_weight_count": basis.zero_weight_indices().len(),
        "patterns": patterns,
    }))
}

fn summary(report: &Report) {
    println!(
        "λ = {}  (n = {}, m = {}), K = {}, depths {}..{}",
        report.lambda,
        report.photons,
        report.modes,
        report.sequences,
        report.depths.first().unwrap_or(&0),
        report.depths.last().unwrap_or(&0)
    );
    if let Some(s) = &report.setup {
        println!("{s}");
    }
    println!(
        "{:<12} {:>4} {:>18} {:>12} {:>12} {:>10} {:>10}",
        "mu", "dim", "kernel", "p_hat", "stderr", "truth", "kappa"
    );
    for r in &report.irreps {
        let a = &r.analysis;
        let truth = r.ground_truth_p.map_or("-".into(), |t| format!("{t:.6}"));
        let kernel = match a.kernel {
            immrb::analysis::Kernel::Immanant => "immanant",
            immrb::analysis::Kernel::ZeroWeightTrace => "zero-weight-trace",
        };
        println!(
            "{:<12} {:>4} {:>18} {:>12.6} {:>12.2e} {:>10} {:>10.4}",
            a.mu.to_string(),
            a.dim,
            kernel,
            a.fit.p_hat,
            a.fit.p_stderr,
            truth,
            a.fit.kappa_hat.re
        );
    }
    let fm = &report.figure_of_merit;
    if let Some(f) = &fm.fitted {
        print!("F (fitted) = {:.6}", f.f);
        if let Some(o) = &fm.oracle {
            print!("   F (oracle) = {:.6}", o.f);
        }
        println!();
    }
    if let Some(b) = &report.baseline {
        for r in &b.irreps {
            println!(
                "baseline {}: p_hat = {:.6} ± {:.2e}, c_mu = {:.4}",
                r.mu, r.fit.p_hat, r.fit.p_stderr, r.c_mu
            );
        }
    }
    for n in &report.notes {
        println!("note: {n}");
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

#[allow(clippy::too_many_arguments)]
fn filter(
    cli: &Cli,
    data: &Path,
    sequences: &Path,
    irrep: &str,
    config: Option<&Path>,
    photons: Option<u32>,
    plot_path: Option<&Path>,
    baseline: Option<&str>,
    kernel: Option<KernelChoice>,
    estimator: Option<Estimator>,
    no_conjugate: bool,
    fit_window: Option<(u32, u32)>,
    bootstrap: Option<usize>,
) -> Result<()> {
    let (data, data_prov) = io::read_data_csv(data)?;
    let (table, seq_prov) = io::read_sequences_json(sequences)?;
    if data_prov.config_sha256 != seq_prov.config_sha256 {
        eprintln!("warning: data and sequences were produced from different configs");
    }
    let mut cfg = match config {
        Some(p) => load_config(p, cli.seed)?,
        None => {
            let Some(n) = photons else {
                bail!("filter needs --config or --photons");
            };
            PipelineConfig {
                photons: n,
                modes: table.modes,
                max_depth: None,
                depths: Some(table.depths.clone()),
                sequences: table.sequences,
                shots: data.shots,
                seed: cli.seed.unwrap_or(0),
                design: Default::default(),
                scenario: Default::default(),
                noise: Default::default(),
                spam: Default::default(),
                analysis: AnalysisConfig::default(),
            }
        }
    };
    if cfg.modes != table.modes {
        bail!(
            "config has {} modes but the sequences act on {}",
            cfg.modes,
            table.modes
        );
    }
    let a = &mut cfg.analysis;
    a.irreps = if irrep == "all" {
        IrrepSelection::All
    } else {
        IrrepSelection::Labels(vec![irrep.parse()?])
    };
    match baseline {
        None => {}
        Some("original") => a.baseline = true,
        Some(other) => bail!("unknown baseline '{other}' (only 'original')"),
    }
    if let Some(k) = kernel {
        a.kernel = k;
    }
    if let Some(e) = estimator {
        a.estimator = e;
    }
    if no_conjugate {
        a.conjugate = false;
    }
    if fit_window.is_some() {
        a.fit_window = fit_window;
    }
    if let Some(b) = bootstrap {
        a.bootstrap = b;
    }
    let setup = match config {
        Some(_) => Some(prepare(&cfg.experiment())?),
        None => None,
    };
    let report = analyze_data(&AnalysisInputs {
        photons: cfg.photons,
        table: &table,
        data: &data,
        config: &cfg,
        setup: setup.as_ref(),
        provenance: Provenance::current(data_prov.config_sha256.clone()),
    })?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(pipeline::REPORT_FILE));
    io::write(&out, &report.to_json()?)?;
    if let Some(p) = plot_path {
        plot::decay_svg(&report, p)?;
    }
    if cli.json {
        println!("{}", report.to_json()?);
    } else {
        summary(&report);
        println!("report written to {}", out.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Decompose { photons, modes } => decompose(*photons, *modes)?,
        Command::Characters { degree } => characters(*degree, cli.json)?,
        Command::Immanant { partition, matrix } => {
            let u = io::read_complex_matrix(matrix)?;
            let v = immanant(partition, &u)?;
            if cli.json {
                print_json(&json!({ "partition": partition, "re": v.re, "im": v.im }))?;
            } else {
                println!("{}", fmt_complex(v));
            }
        }
        Command::Gt {
            irrep,
            modes,
            zero_weight,
            dump,
        } => gt(&padded(irrep, *modes)?, *zero_weight, dump.as_deref())?,
        Command::KostantVerify {
            irrep,
            modes,
            trials,
            tol,
        } => {
            let r = verify_kostant(&padded(irrep, *modes)?, *trials, cli.seed.unwrap_or(0), *tol)?;
            print_json(&r)?;
            if !r.pass {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Simulate { config } => {
            let cfg = load_config(config, cli.seed)?.resolved()?;
            let prov = Provenance::current(Some(cfg.sha256()?));
            let (_, table, data) = pipeline::simulate_config(&cfg)?;
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let seq = dir.join(pipeline::SEQUENCES_FILE);
            let csv = dir.join(pipeline::DATA_FILE);
            io::write_sequences_json(&seq, &table, &prov)?;
            io::write_data_csv(&csv, &data, &prov)?;
            if cli.json {
                print_json(&json!({ "sequences": seq, "data": csv, "provenance": prov }))?;
            } else {
                println!("wrote {} and {}", seq.display(), csv.display());
            }
        }
        Command::Filter {
            data,
            sequences,
            irrep,
            config,
            photons,
            plot,
            baseline,
            kernel,
            estimator,
            no_conjugate,
            fit_window,
            bootstrap,
        } => filter(
            cli,
            data,
            sequences,
            irrep,
            config.as_deref(),
            *photons,
            plot.as_deref(),
            baseline.as_deref(),
            *kernel,
            *estimator,
            *no_conjugate,
            *fit_window,
            *bootstrap,
        )?,
        Command::Run { config, demo, plot } => {
            let mut cfg = match (config, demo) {
                (Some(p), _) => PipelineConfig::load(p)?,
                (None, true) => PipelineConfig::demo(),
                (None, false) => bail!("run needs --config or --demo"),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let art = pipeline::run_pipeline(&cfg, Some(&dir))?;
            if *plot {
                plot::decay_svg(&art.report, &dir.join("decay.svg"))?;
            }
            if cli.json {
                println!("{}", art.report.to_json()?);
            } else {
                summary(&art.report);
                println!("artifacts written to {}", dir.display());
            }
        }
        Command::Selfcheck { inject_fault } => {
            let r = run_selfcheck(*inject_fault);
            if cli.json {
                print_json(&r)?;
            } else {
                for i in &r.items {
                    let tag = if i.pass { "PASS" } else { "FAIL" };
                    println!("{tag}  {:<28} {:>9.1} ms  {}", i.name, i.millis, i.detail);
                }
                println!("{} passed, {} failed", r.passed, r.failed);
            }
            if !r.all_passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // exit quietly when piped into `head` and the like
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
