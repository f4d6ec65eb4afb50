use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use boundcut::bounds::{cut_objective, pairwise_bound, pairwise_sum, similarity, KernelKind, SumConvention};
use boundcut::classifiers::Classifier;
use boundcut::data::{derive_seed, Dataset, Labeling, MixtureModel};
use boundcut::density::{BandwidthSpec, ScaleChoice};
use boundcut::evaluation::circle::circle_diffusion;
use boundcut::evaluation::convergence::{
    boundary_cut_convergence, nn_gap_convergence, plugin_ceiling_convergence, ConventionFit, ConvergenceRecord,
    ConvergenceReport,
};
use boundcut::evaluation::{classifier_risk_monte_carlo, classifier_risk_quadrature, RiskMethod};
use boundcut::io::{
    format_f64, read_labels_csv, read_points_path, ser_f64, ser_opt_f64, write_labels_csv, write_matrix_csv, PointTable,
};
use boundcut::spectral::{adjusted_rand_index, normalized_cut, spectral_cluster};
use serde::Serialize;

use crate::config::{self, ClassifierKind, Experiment, RiskMethodArg};
use crate::error::CliError;

pub const DEFAULT_N_EVAL: usize = 100_000;
pub const DEFAULT_AMPLITUDE: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KernelArg {
    /// K(1/f̂(x) + 1/f̂(y)), the nearest-neighbour bound kernel.
    #[value(alias = "nn")]
    H,
    /// K/(f̂(x)^α f̂(y)^(1-α)); α = ½ unless --alpha is given.
    G,
    /// K/(f̂(x) f̂(y)).
    V,
    /// The bare Gaussian kernel.
    Gauss,
}

impl KernelArg {
    pub fn resolve(self, alpha: Option<f64>) -> Result<KernelKind, CliError> {
        match (self, alpha) {
            (KernelArg::G, Some(a)) => {
                if !(0.0..=1.0).contains(&a) {
                    return Err(CliError::Usage(format!("--alpha must lie in [0, 1], got {a}")));
                }
                Ok(KernelKind::plugin(a, 1.0 - a)?)
            }
            (KernelArg::G, None) => Ok(KernelKind::HALF),
            (other, Some(_)) => Err(CliError::Usage(format!(
                "--alpha only applies to --kernel g; the {other:?} kernel fixes its own exponents"
            ))),
            (KernelArg::H, None) => Ok(KernelKind::Nn),
            (KernelArg::V, None) => Ok(KernelKind::V),
            (KernelArg::Gauss, None) => Ok(KernelKind::GAUSS),
        }
    }
}

/// Bandwidth options shared by `cluster` and `bounds`.
#[derive(Debug, Clone, clap::Args)]
pub struct BandwidthArgs {
    /// Fixed bandwidth h; overrides the schedule.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Schedule exponent β in h = c·n^-β.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Schedule scale c; the mean per-axis standard deviation by default.
    #[arg(long)]
    pub scale: Option<f64>,
}

impl BandwidthArgs {
    fn resolve(&self, data: &Dataset) -> Result<f64, CliError> {
        if let Some(h) = self.bandwidth {
            if self.beta.is_some() || self.scale.is_some() {
                return Err(CliError::Usage("--bandwidth conflicts with --beta and --scale".into()));
            }
            if !(h > 0.0 && h.is_finite()) {
                return Err(CliError::Usage(format!("--bandwidth must be positive, got {h}")));
            }
            return Ok(h);
        }
        let spec = BandwidthSpec {
            beta: self.beta,
            c: self.scale.map_or(ScaleChoice::Auto, ScaleChoice::Fixed),
            gamma: None,
        };
        Ok(spec.resolve(data)?.bandwidth_at(data.len()))
    }

    fn describe(&self) -> String {
        format!(
            "bandwidth={:?};beta={:?};scale={:?}",
            self.bandwidth, self.beta, self.scale
        )
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        })
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Write {
        path: path.display().to_string(),
        source,
    }
}

/// Hash of the input bytes and every option that shapes the output.
fn invocation_hash(input: &Path, options: &str) -> Result<String, CliError> {
    let bytes = std::fs::read(input).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", input.display())))?;
    let mut all = config::sha256_hex(&bytes).into_bytes();
    all.extend_from_slice(options.as_bytes());
    Ok(config::sha256_hex(&all))
}

fn read_table(input: &Path) -> Result<PointTable, CliError> {
    let table = read_points_path(input)?;
    if table.rows.is_empty() {
        return Err(CliError::Usage(format!("{} holds no points", input.display())));
    }
    Ok(table)
}

#[derive(Serialize)]
struct ClusterSummary {
    config_sha256: String,
    seed: u64,
    n: usize,
    q: usize,
    kernel: String,
    #[serde(serialize_with = "ser_f64")]
    h: f64,
    #[serde(serialize_with = "ser_f64")]
    cut: f64,
    #[serde(serialize_with = "ser_f64")]
    ncut: f64,
    #[serde(serialize_with = "ser_f64")]
    bound_unordered: f64,
    #[serde(serialize_with = "ser_f64")]
    bound_ordered: f64,
    #[serde(serialize_with = "ser_opt_f64", skip_serializing_if = "Option::is_none")]
    ari: Option<f64>,
}

pub struct ClusterArgs<'a> {
    pub input: &'a Path,
    pub q: usize,
    pub kernel: KernelArg,
    pub alpha: Option<f64>,
    pub bandwidth: &'a BandwidthArgs,
    pub seed: u64,
    pub out: Option<&'a Path>,
}

/// Spectral clustering of a CSV point set. Labels go to `out`, the summary
/// to standard output.
pub fn cluster(args: ClusterArgs) -> Result<(), CliError> {
    let kind = args.kernel.resolve(args.alpha)?;
    let out = args
        .out
        .ok_or_else(|| CliError::Usage("cluster needs --out for the label file".into()))?;
    if args.q < 2 {
        return Err(CliError::Usage(format!("--q must be at least 2, got {}", args.q)));
    }
    let table = read_table(args.input)?;
    let data = table.dataset()?;
    let truth = table.labeling()?;
    let n = data.len();
    let options = format!(
        "cluster;q={};kernel={};{}",
        args.q,
        kind.label(),
        args.bandwidth.describe()
    );
    let hash = invocation_hash(args.input, &options)?;

    let (labeling, h, cut, ncut, bounds) = if n == 1 {
        (Labeling::new(vec![0], args.q)?, 0.0, 0.0, 0.0, (0.0, 0.0))
    } else {
        let h = args.bandwidth.resolve(&data)?;
        let sim = similarity(&data, h, kind)?;
        let result = spectral_cluster(&sim, args.q, args.seed)?;
        let labeling = result.labeling;
        (
            labeling.clone(),
            h,
            cut_objective(&sim, &labeling)?,
            normalized_cut(&sim, &labeling)?,
            (
                pairwise_bound(&sim, &labeling, SumConvention::Unordered)?,
                pairwise_bound(&sim, &labeling, SumConvention::Ordered)?,
            ),
        )
    };
    let ari = truth.map(|t| adjusted_rand_index(&t, &labeling)).transpose()?;

    let mut w = create(out)?;
    writeln!(w, "# config_sha256={hash} seed={}", args.seed).map_err(write_err(out))?;
    write_labels_csv(&mut w, &labeling)?;
    w.flush().map_err(write_err(out))?;

    write_json(
        &ClusterSummary {
            config_sha256: hash,
            seed: args.seed,
            n,
            q: args.q,
            kernel: kind.label(),
            h,
            cut,
            ncut,
            bound_unordered: bounds.0,
            bound_ordered: bounds.1,
            ari,
        },
        None,
    )
}

#[derive(Serialize)]
struct BoundEntry {
    kernel: String,
    #[serde(serialize_with = "ser_f64")]
    h: f64,
    convention: SumConvention,
    #[serde(serialize_with = "ser_f64")]
    bound: f64,
    clamped_entries: usize,
    #[serde(serialize_with = "ser_f64")]
    cut: f64,
    #[serde(serialize_with = "ser_f64")]
    bound_unordered: f64,
    #[serde(serialize_with = "ser_f64")]
    bound_ordered: f64,
}

#[derive(Serialize)]
struct BoundsReport {
    config_sha256: String,
    seed: u64,
    n: usize,
    q: usize,
    #[serde(serialize_with = "ser_f64")]
    h: f64,
    bounds: Vec<BoundEntry>,
}

pub struct BoundsArgs<'a> {
    pub input: &'a Path,
    pub labels: Option<&'a Path>,
    pub kernels: &'a [KernelArg],
    pub alpha: Option<f64>,
    pub bandwidth: &'a BandwidthArgs,
    pub emit_matrix: Option<&'a Path>,
    pub seed: u64,
    pub out: Option<&'a Path>,
}

/// Pairwise error bounds of a labelled point set under each kernel.
pub fn bounds(args: BoundsArgs) -> Result<(), CliError> {
    let table = read_table(args.input)?;
    let data = table.dataset()?;
    let labeling = match args.labels {
        Some(path) => {
            let file = File::open(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            Labeling::from_one_based(&read_labels_csv(file)?, None)?
        }
        None => table
            .labeling()?
            .ok_or_else(|| CliError::Usage("no labels: add a label column or pass --labels".into()))?,
    };
    labeling.ensure_len(data.len())?;
    let kernels: Vec<KernelArg> = if args.kernels.is_empty() {
        vec![KernelArg::H, KernelArg::G, KernelArg::V]
    } else {
        args.kernels.to_vec()
    };
    let kinds = kernels
        .iter()
        .map(|k| k.resolve(if *k == KernelArg::G { args.alpha } else { None }))
        .collect::<Result<Vec<_>, _>>()?;
    if args.alpha.is_some() && !kernels.contains(&KernelArg::G) {
        return Err(CliError::Usage("--alpha only applies to --kernel g".into()));
    }
    if args.emit_matrix.is_some() && kinds.len() != 1 {
        return Err(CliError::Usage("--emit-matrix needs exactly one --kernel".into()));
    }
    let h = args.bandwidth.resolve(&data)?;
    if let Some(path) = args.emit_matrix {
        let sim = similarity(&data, h, kinds[0])?;
        let mut w = create(path)?;
        write_matrix_csv(&mut w, sim.values())?;
        w.flush().map_err(write_err(path))?;
    }
    let labels_hash = match args.labels {
        Some(p) => config::sha256_hex(&std::fs::read(p).map_err(|e| CliError::Usage(e.to_string()))?),
        None => String::new(),
    };
    let names: Vec<String> = kinds.iter().map(|k| k.label()).collect();
    let options = format!(
        "bounds;labels={labels_hash};kernels={};{}",
        names.join(","),
        args.bandwidth.describe()
    );
    let mut entries = Vec::new();
    for kind in kinds {
        let sum = pairwise_sum(&data, &labeling, h, kind)?;
        entries.push(BoundEntry {
            kernel: kind.label(),
            h,
            convention: SumConvention::Unordered,
            bound: sum.bound(SumConvention::Unordered),
            clamped_entries: sum.clamped_points,
            cut: sum.cut,
            bound_unordered: sum.bound(SumConvention::Unordered),
            bound_ordered: sum.bound(SumConvention::Ordered),
        });
    }
    write_json(
        &BoundsReport {
            config_sha256: invocation_hash(args.input, &options)?,
            seed: args.seed,
            n: data.len(),
            q: labeling.q(),
            h,
            bounds: entries,
        },
        args.out,
    )
}

#[derive(Serialize)]
struct RiskArtifact {
    experiment: &'static str,
    config_sha256: String,
    seed: u64,
    classifier: &'static str,
    n: usize,
    #[serde(serialize_with = "ser_opt_f64")]
    h: Option<f64>,
    #[serde(serialize_with = "ser_f64")]
    risk: f64,
    method: RiskMethod,
    #[serde(serialize_with = "ser_opt_f64")]
    stderr: Option<f64>,
    n_eval: usize,
}

/// Trains a classifier on a sample from the configured model and measures
/// its risk against the model.
pub fn risk(config_path: &Path, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let loaded = config::load(config_path)?;
    let cfg = &loaded.config;
    let model = MixtureModel::from_spec(cfg.model()?)?;
    let kind = cfg
        .classifier
        .ok_or_else(|| CliError::Usage("risk config needs a classifier".into()))?;
    cfg.bandwidth.validate(model.dim())?;
    let n = cfg.n.unwrap_or(0);
    let sample_seed = cfg.seeds_or(seed)[0];
    let trained = if kind == ClassifierKind::Bayes {
        None
    } else {
        if n == 0 {
            return Err(CliError::Usage("risk config needs a training size n".into()));
        }
        Some(model.sample(n, sample_seed)?)
    };
    let h = match &trained {
        Some((data, _)) => Some(cfg.bandwidth.resolve(data)?.bandwidth_at(n)),
        None => None,
    };
    let classifier = match (&trained, kind) {
        (_, ClassifierKind::Bayes) => Classifier::Bayes(&model),
        (Some((d, l)), ClassifierKind::SoftNn) => Classifier::soft_nn(d, l, h.unwrap_or(1.0))?,
        (Some((d, l)), ClassifierKind::NearestNeighbor) => Classifier::nearest_neighbor(d, l)?,
        (Some((d, l)), ClassifierKind::PlugIn) => Classifier::plug_in(d, l, h.unwrap_or(1.0))?,
        (Some((d, l)), ClassifierKind::PlugInSoft) => Classifier::plug_in_soft(d, l, h.unwrap_or(1.0))?,
        (None, _) => unreachable!("non-Bayes classifiers are trained above"),
    };
    let report = match cfg.method {
        RiskMethodArg::Quadrature => classifier_risk_quadrature(&model, &classifier, cfg.resolution)?,
        RiskMethodArg::MonteCarlo => classifier_risk_monte_carlo(
            &model,
            &classifier,
            cfg.n_eval.unwrap_or(DEFAULT_N_EVAL),
            derive_seed(sample_seed, 1),
        )?,
    };
    let out = out.map(Path::to_path_buf).or_else(|| cfg.output.report.clone());
    write_json(
        &RiskArtifact {
            experiment: "risk",
            config_sha256: loaded.sha256.clone(),
            seed: sample_seed,
            classifier: classifier.name(),
            n,
            h,
            risk: report.risk,
            method: report.method,
            stderr: report.stderr,
            n_eval: report.n_eval,
        },
        out.as_deref(),
    )
}

#[derive(Serialize)]
struct ConvergeArtifact<'a> {
    experiment: &'a str,
    config_sha256: &'a str,
    seed: u64,
    seeds: &'a [u64],
    records: &'a [ConvergenceRecord],
    #[serde(serialize_with = "ser_opt_f64")]
    fitted_constant: Option<f64>,
    convention: Option<SumConvention>,
    #[serde(skip_serializing_if = "<[ConventionFit]>::is_empty")]
    conventions: &'a [ConventionFit],
}

fn write_trace(path: &Path, records: &[ConvergenceRecord]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let err = write_err(path);
    writeln!(w, "n,h,seed,value,reference").map_err(&err)?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.n,
            format_f64(r.h),
            r.seed,
            format_f64(r.value),
            format_f64(r.reference)
        )
        .map_err(&err)?;
    }
    w.flush().map_err(&err)
}

/// Runs a convergence experiment from a config file.
pub fn converge(
    experiment: Option<Experiment>,
    config_path: &Path,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let loaded = config::load(config_path)?;
    let cfg = &loaded.config;
    let experiment = match (experiment, cfg.experiment) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Usage(format!(
                "--experiment {} disagrees with the config's {}",
                a.name(),
                b.name()
            )))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(CliError::Usage("no experiment given in flags or config".into())),
    };
    if cfg.n_list.is_empty() {
        return Err(CliError::Usage("config needs a non-empty n_list".into()));
    }
    let seeds = cfg.seeds_or(seed);
    let report: ConvergenceReport = match experiment {
        Experiment::Diffusion => circle_diffusion(
            cfg.amplitude.unwrap_or(DEFAULT_AMPLITUDE),
            cfg.alphas.as_deref().unwrap_or(&[0.0, 1.0]),
            &cfg.bandwidth,
            &cfg.n_list,
            &seeds,
        )?,
        _ => {
            let model = MixtureModel::from_spec(cfg.model()?)?;
            match experiment {
                Experiment::NnGap => nn_gap_convergence(
                    &model,
                    &cfg.bandwidth,
                    &cfg.n_list,
                    &seeds,
                    cfg.n_eval.unwrap_or(DEFAULT_N_EVAL),
                )?,
                Experiment::BoundaryCut => boundary_cut_convergence(&model, &cfg.bandwidth, &cfg.n_list, &seeds)?,
                _ => plugin_ceiling_convergence(&model, &cfg.bandwidth, &cfg.n_list, &seeds)?,
            }
        }
    };
    let out: Option<PathBuf> = out.map(Path::to_path_buf).or_else(|| cfg.output.report.clone());
    if let Some(trace) = &cfg.output.trace_csv {
        write_trace(trace, &report.records)?;
    }
    write_json(
        &ConvergeArtifact {
            experiment: &report.experiment,
            config_sha256: &loaded.sha256,
            seed,
            seeds: &seeds,
            records: &report.records,
            fitted_constant: report.fitted_constant,
            convention: report.convention,
            conventions: &report.conventions,
        },
        out.as_deref(),
    )
}
