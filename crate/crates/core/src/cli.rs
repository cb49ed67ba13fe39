//! Command-line front end. Every command prints one report; JSON output is a
//! pure function of the arguments.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::compat::{
    random_survey, shared_metric_feasibility, CompatibilityProblem, FeasibilityJson,
    FeasibilityStatus, SurveyConfig, SurveyKind,
};
use crate::linalg::json::{from_json_str, serde_matrix, Exact};
use crate::linalg::{hermitian_defect, ComplexMatrix, RealVector, ToleranceSet};
use crate::perturb::{
    assemble_joint_system, perturbative_vs_full_check, solve_first_order, two_level_from_problem,
    PerturbativeProblem, PerturbedObservable, PerturbativeSolution, ScalingReport, TwoLevelReport,
    VectorizedSystem,
};
use crate::qdeform::{
    a24_crosscheck, build_model_with, hermitization_defect, qcommutator_check, x_metric_residual,
    A24Report, HermitizationReport, InteriorProjector, MetricForm, QCommutatorReport,
    XMetricReport, DEFAULT_BUFFER,
};
use crate::spectral::{
    biorthogonalize, diagnose_spectrum, metric_from_kappa, MetricCandidate, SpectrumReport,
};

#[derive(Debug, Parser)]
#[command(name = "qhmetric", version, about = "Shared metrics for quasi-Hermitian observables")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_real: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_degen: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_resid: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol_pos: f64,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reality and degeneracy of a spectrum.
    Spectrum {
        #[arg(long)]
        a: PathBuf,
    },
    /// Biorthogonal system and the metric Θ(κ) of one observable.
    MetricFamily {
        #[arg(long)]
        a: PathBuf,
        /// Comma-separated κ; defaults to all ones.
        #[arg(long, value_delimiter = ',')]
        kappa: Option<Vec<f64>>,
    },
    /// Decide whether the observables share a positive-definite metric.
    SharedMetric {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: Option<PathBuf>,
        #[arg(long, num_args = 1..)]
        obs: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// First-order metric correction for A₀ + εA₁ (and B₀ + εB₁).
    Perturb {
        #[command(flatten)]
        input: PerturbInput,
        /// Also emit the packed block system.
        #[arg(long)]
        dump: bool,
        /// Compare with the full solver at these ε.
        #[arg(long, value_delimiter = ',')]
        epsilon: Option<Vec<f64>>,
    },
    /// Closed-form 2×2 two-observable analysis.
    TwoLevel {
        #[command(flatten)]
        input: PerturbInput,
    },
    /// Truncated q-deformed oscillator checks.
    Qdeform {
        #[arg(long = "N", default_value_t = 40)]
        n: usize,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, default_value_t = DEFAULT_BUFFER)]
        buffer: usize,
        /// Compare on a fixed leading block instead of `N − buffer`.
        #[arg(long)]
        interior_size: Option<usize>,
        /// Use e^{εf}, e^{εg} instead of 1 + εf, 1 + εg.
        #[arg(long)]
        exponential: bool,
    },
    /// Seeded Monte-Carlo feasibility survey of random pairs.
    Survey {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SurveyKind::Independent)]
        kind: SurveyKind,
    },
}

#[derive(Debug, Args)]
pub struct PerturbInput {
    #[arg(long)]
    pub a0: PathBuf,
    #[arg(long)]
    pub a1: PathBuf,
    #[arg(long, requires = "b1")]
    pub b0: Option<PathBuf>,
    #[arg(long, requires = "b0")]
    pub b1: Option<PathBuf>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    tolerances: ToleranceSet,
    report: T,
}

#[derive(Serialize)]
struct MetricFamilyReport {
    eigenvalues: Vec<Exact>,
    #[serde(with = "serde_matrix")]
    right_kets: ComplexMatrix,
    #[serde(with = "serde_matrix")]
    left_ketkets: ComplexMatrix,
    biorthonormality_residual: f64,
    metric: MetricCandidate,
    certified: bool,
}

#[derive(Serialize)]
struct PackedDump {
    system: VectorizedSystem,
    rank: usize,
    kernel_basis: Vec<Vec<Exact>>,
}

#[derive(Serialize)]
struct PerturbReport {
    solution: PerturbativeSolution,
    #[serde(skip_serializing_if = "Option::is_none")]
    packed: Option<PackedDump>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scaling: Option<ScalingReport>,
}

#[derive(Serialize)]
struct QDeformReport {
    #[serde(rename = "N")]
    n: usize,
    epsilon: f64,
    buffer: usize,
    interior_size: usize,
    metric_form: MetricForm,
    qcommutator: QCommutatorReport,
    x_metric: XMetricReport,
    hermitization: HermitizationReport,
    a24: A24Report,
}

fn read_matrix(path: &Path, flag: &str) -> anyhow::Result<ComplexMatrix> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {flag} {}", path.display()))?;
    from_json_str(&text).with_context(|| format!("parsing {flag} {}", path.display()))
}

fn emit<T: Serialize>(command: &str, tol: ToleranceSet, report: T, format: OutputFormat) -> anyhow::Result<String> {
    let envelope = Envelope {
        command,
        tolerances: tol,
        report,
    };
    Ok(match format {
        OutputFormat::Json => serde_json::to_string(&envelope)?,
        OutputFormat::Text => {
            let mut out = String::new();
            render_text(&serde_json::to_value(&envelope)?, "", &mut out);
            out.pop();
            out
        }
    })
}

/// Flattens a JSON tree into `path = value` lines; matrices stay compact.
fn render_text(value: &Value, prefix: &str, out: &mut String) {
    match value {
        Value::Object(map) if !is_matrix(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                render_text(v, &key, out);
            }
        }
        other => {
            out.push_str(&format!("{prefix} = {other}\n"));
        }
    }
}

fn is_matrix(map: &serde_json::Map<String, Value>) -> bool {
    map.len() == 2 && map.contains_key("n") && map.contains_key("entries")
}

/// Re-checks a witness from scratch; anything that fails is not printed.
fn verify_witness(report: &mut FeasibilityJson, observables: &[ComplexMatrix], tol: &ToleranceSet) -> anyhow::Result<()> {
    if let Some(theta) = report.witness.clone() {
        let candidate = MetricCandidate::new(theta, None, tol)?.with_residuals(observables)?;
        let hermitian = hermitian_defect(&candidate.theta) <= tol.tol_resid;
        if !(hermitian && candidate.is_certified(tol)) {
            report.witness = None;
            report.lambda_min = None;
            report.residuals.clear();
            report.status = FeasibilityStatus::Marginal;
        }
    }
    Ok(())
}

fn perturbative_problem(input: &PerturbInput, tol: &ToleranceSet) -> anyhow::Result<PerturbativeProblem> {
    let mut observables = vec![PerturbedObservable {
        h0: read_matrix(&input.a0, "--a0")?,
        h1: read_matrix(&input.a1, "--a1")?,
    }];
    if let (Some(b0), Some(b1)) = (&input.b0, &input.b1) {
        observables.push(PerturbedObservable {
            h0: read_matrix(b0, "--b0")?,
            h1: read_matrix(b1, "--b1")?,
        });
    }
    Ok(PerturbativeProblem::new(observables, tol)?)
}

fn packed(v: &RealVector) -> Vec<Exact> {
    v.iter().map(|&x| Exact(x)).collect()
}

/// Runs one command and returns the rendered report.
pub fn run(cli: &Cli) -> anyhow::Result<String> {
    let c = &cli.common;
    let tol = ToleranceSet::new(c.tol_real, c.tol_degen, c.tol_resid, c.tol_pos)?;
    let format = c.format;
    match &cli.command {
        Command::Spectrum { a } => {
            let report: SpectrumReport = diagnose_spectrum(&read_matrix(a, "--a")?, &tol)?;
            emit("spectrum", tol, report, format)
        }
        Command::MetricFamily { a, kappa } => {
            let a = read_matrix(a, "--a")?;
            let sys = biorthogonalize(&a, &tol)?;
            let kappa = kappa.clone().unwrap_or_else(|| vec![1.0; sys.n]);
            let metric = metric_from_kappa(&sys, &kappa, &tol)?.with_residuals(std::slice::from_ref(&a))?;
            let certified = hermitian_defect(&metric.theta) <= tol.tol_resid && metric.is_certified(&tol);
            let report = MetricFamilyReport {
                eigenvalues: sys.eigenvalues.iter().map(|&e| Exact(e)).collect(),
                right_kets: sys.right_kets.clone(),
                left_ketkets: sys.left_ketkets.clone(),
                biorthonormality_residual: sys.residuals(&a).biorthonormality,
                metric,
                certified,
            };
            emit("metric-family", tol, report, format)
        }
        Command::SharedMetric { a, b, obs, seed } => {
            let mut observables = vec![read_matrix(a, "--a")?];
            if let Some(b) = b {
                observables.push(read_matrix(b, "--b")?);
            }
            for path in obs {
                observables.push(read_matrix(path, "--obs")?);
            }
            if observables.len() < 2 {
                bail!("shared-metric needs at least two observables (--b or --obs)");
            }
            let mut problem = CompatibilityProblem::new(observables.clone(), tol)?;
            problem.search.seed = *seed;
            let mut report = shared_metric_feasibility(&problem)?.to_json();
            verify_witness(&mut report, &observables, &tol)?;
            emit("shared-metric", tol, report, format)
        }
        Command::Perturb { input, dump, epsilon } => {
            let problem = perturbative_problem(input, &tol)?;
            let solution = solve_first_order(&problem, &tol)?;
            let packed_dump = if *dump {
                let system = assemble_joint_system(&problem, &tol)?;
                Some(PackedDump {
                    system,
                    rank: solution.rank,
                    kernel_basis: solution.kernel_basis.iter().map(packed).collect(),
                })
            } else {
                None
            };
            let scaling = match epsilon {
                Some(eps) => Some(perturbative_vs_full_check(&problem, eps, &tol)?),
                None => None,
            };
            let report = PerturbReport {
                solution,
                packed: packed_dump,
                scaling,
            };
            emit("perturb", tol, report, format)
        }
        Command::TwoLevel { input } => {
            let problem = perturbative_problem(input, &tol)?;
            let report: TwoLevelReport = two_level_from_problem(&problem, &tol)?;
            emit("two-level", tol, report, format)
        }
        Command::Qdeform {
            n,
            epsilon,
            buffer,
            interior_size,
            exponential,
        } => {
            let form = if *exponential { MetricForm::Exponential } else { MetricForm::Linear };
            let model = build_model_with(*n, *epsilon, *buffer, form, &tol)?;
            let proj = match interior_size {
                Some(k) => InteriorProjector::with_size(*n, *k)?,
                None => InteriorProjector::new(*n, *buffer)?,
            };
            let report = QDeformReport {
                n: *n,
                epsilon: *epsilon,
                buffer: proj.buffer,
                interior_size: proj.size,
                metric_form: form,
                qcommutator: qcommutator_check(*n, *epsilon, &proj)?,
                x_metric: x_metric_residual(&model, &proj, &tol)?,
                hermitization: hermitization_defect(&model, &proj, &tol)?,
                a24: a24_crosscheck(&model, &proj),
            };
            emit("qdeform", tol, report, format)
        }
        Command::Survey { n, trials, seed, kind } => {
            if *n < 1 {
                bail!("survey needs --n >= 1");
            }
            let report = random_survey(&SurveyConfig {
                n: *n,
                trials: *trials,
                seed: *seed,
                kind: *kind,
                tol,
            });
            emit("survey", tol, report, format)
        }
    }
}
