use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use flowae::config::{Overrides, PipelineConfig};
use flowae::pipeline;
use flowae::{csvio, report, ModelArtifact, SyntheticSpec};
use flowae_core::threat::{self, BruteForceParams, DosParams, ReconParams};
use flowae_core::trainer::SweepGrid;
use flowae_core::{FreezeSpec, ModelMode};

#[derive(Parser)]
#[command(name = "flowae", version, about = "Autoencoder anomaly detection for network flows")]
struct Cli {
    /// TOML pipeline config; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Tuning {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sequence_length: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    noise_scale: Option<f64>,
    /// Enables SMOTE with target = multiplier × benign training flows.
    #[arg(long)]
    smote_multiplier: Option<f64>,
    #[arg(long)]
    lambda_rec: Option<f64>,
    #[arg(long)]
    lambda_tml: Option<f64>,
    #[arg(long)]
    lambda_kl: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    variational: bool,
    /// Detection percentile, in [90, 100].
    #[arg(long)]
    percentile: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic labeled flow corpus.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5000)]
        flows: usize,
        #[arg(long, default_value_t = 6)]
        features: usize,
        #[arg(long, default_value_t = 0.0)]
        attack_fraction: f64,
        /// Attack mean shift in benign standard deviations.
        #[arg(long, default_value_t = 5.0)]
        shift: f64,
        #[arg(long, default_value_t = 0.05)]
        noise_sd: f64,
        #[arg(long, value_delimiter = ',', default_value = "dos,recon,bruteforce")]
        categories: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train on the benign flows of a CSV and calibrate the threshold.
    Train {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output artifact path.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Recompute a model's threshold at a new percentile.
    Calibrate {
        #[arg(long)]
        model: PathBuf,
        /// Rescore the training split of this CSV instead of reusing the stored errors.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Where to write the updated artifact (defaults to overwriting --model).
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Classify every window of a flow CSV.
    Detect {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Verdict CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score held-out benign and attack windows and write reports.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the benign test latent means.
        #[arg(long)]
        dump_latents: bool,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Train one model per (lambda_rec, lambda_tml) cell.
    Sweep {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        grid_rec: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        grid_tml: Vec<f64>,
        /// The 11 × 11 grid over {0, 0.1, ..., 1}.
        #[arg(long, conflicts_with_all = ["grid_rec", "grid_tml"])]
        full: bool,
        /// Save the best cell's model here.
        #[arg(long)]
        save_best: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Fine-tune a pretrained model on a new corpus with frozen groups.
    Transfer {
        /// Pretrained artifact.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        freeze: FreezeArg,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Analytical threat-model calculators.
    #[command(subcommand)]
    Threat(Threat),
}

#[derive(Clone, Copy, ValueEnum)]
enum FreezeArg {
    Encoder,
    AllButIo,
}

#[derive(Subcommand)]
enum Threat {
    BruteForce {
        #[arg(long)]
        alphabet: u64,
        #[arg(long)]
        length: u32,
        #[arg(long)]
        guess_time: f64,
        #[arg(long)]
        procs: u64,
        /// Elapsed time for the success probability.
        #[arg(long, default_value_t = 0.0)]
        elapsed: f64,
    },
    Dos {
        #[arg(long)]
        capacity: f64,
        #[arg(long)]
        legit_rate: f64,
        #[arg(long)]
        attack_rate: f64,
        #[arg(long)]
        legit_arrival: f64,
        #[arg(long)]
        attack_arrival: f64,
        #[arg(long)]
        service_rate: f64,
    },
    Recon {
        #[arg(long)]
        ips: u64,
        #[arg(long)]
        ports: u64,
        #[arg(long)]
        services: u64,
        #[arg(long)]
        scan_rate: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        time: f64,
        #[arg(long)]
        vulns: u64,
        #[arg(long)]
        exploitable: u64,
        #[arg(long)]
        detection_threshold: Option<f64>,
    },
}

impl Tuning {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            sequence_length: self.sequence_length,
            stride: self.stride,
            noise_scale: self.noise_scale,
            percentile: self.percentile,
            smote_multiplier: self.smote_multiplier,
            lambda_rec: self.lambda_rec,
            lambda_tml: self.lambda_tml,
            lambda_kl: self.lambda_kl,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            hidden_dim: self.hidden_dim,
            latent_dim: self.latent_dim,
            variational: self.variational,
            ..Overrides::default()
        }
    }
}

fn load_config(path: Option<&Path>, tuning: &Tuning, input: Option<&PathBuf>) -> Result<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    let mut o = tuning.overrides();
    o.input = input.cloned();
    cfg.apply(&o)?;
    Ok(cfg)
}

fn input_path(cfg: &PipelineConfig) -> Result<PathBuf> {
    match &cfg.paths.input {
        Some(p) => Ok(p.clone()),
        None => bail!("no input CSV: pass --input or set paths.input"),
    }
}

fn out_dir(cli: Option<&PathBuf>, cfg: &PipelineConfig) -> PathBuf {
    cli.cloned().or_else(|| cfg.paths.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."))
}

/// Resolves the CSV's feature columns the same way training did and checks
/// them against the model.
fn load_for_artifact(path: &Path, artifact: &ModelArtifact, cfg: &PipelineConfig) -> Result<flowae_core::FlowTable> {
    let header = csvio::read_header(path, cfg.delimiter())?;
    let schema = cfg.schema_for_header(&header);
    let expected = artifact.model.config().input_dim;
    if schema.num_features() != expected {
        return Err(flowae_core::Error::DimensionMismatch { expected, actual: schema.num_features() }.into());
    }
    let stored = &artifact.meta.feature_columns;
    if !stored.is_empty() && *stored != schema.feature_columns {
        return Err(flowae::Error::SchemaMismatch(format!(
            "model was trained on columns {stored:?}, input provides {:?}",
            schema.feature_columns
        ))
        .into());
    }
    Ok(csvio::load_flows(path, &schema, cfg.delimiter())?)
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Generate { out, flows, features, attack_fraction, shift, noise_sd, categories, seed } => {
            let spec = SyntheticSpec {
                flows,
                features,
                noise_sd,
                attack_fraction,
                shift_sigmas: shift,
                categories,
                seed,
                ..SyntheticSpec::default()
            };
            let table = spec.generate()?;
            let file = std::fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            csvio::write_flows(std::io::BufWriter::new(file), &table, &spec.schema(), "ATTACK")?;
            println!("{}", out.display());
        }
        Command::Train { input, model, out, tuning } => {
            let cfg = load_config(config, &tuning, input.as_ref())?;
            let (schema, table) = pipeline::load_dataset(&input_path(&cfg)?, &cfg)?;
            let trained = pipeline::train(&table, &schema, &cfg)?;
            let model_path = model.or_else(|| cfg.paths.model.clone()).unwrap_or_else(|| PathBuf::from("model.flae"));
            trained.artifact.save(&model_path)?;
            let report_path = out_dir(out.as_ref(), &cfg).join("train_report.csv");
            let variational = trained.artifact.model.config().mode == ModelMode::Variational;
            report::write_train_csv(&report_path, &trained.epochs, variational)?;
            println!("{}", report_path.display());
        }
        Command::Calibrate { model, input, output, tuning } => {
            let cfg = load_config(config, &tuning, input.as_ref())?;
            let mut artifact = ModelArtifact::load(&model)?;
            let table = match &input {
                Some(p) => Some(load_for_artifact(p, &artifact, &cfg)?),
                None => None,
            };
            let th = pipeline::recalibrate(&mut artifact, table.as_ref(), &cfg, cfg.detect.percentile)?;
            artifact.save(output.as_ref().unwrap_or(&model))?;
            println!("threshold = {:?}\npercentile = {:?}", th.threshold, th.percentile);
        }
        Command::Detect { model, input, out } => {
            let cfg = match config {
                Some(p) => PipelineConfig::load(p)?,
                None => PipelineConfig::default(),
            };
            let artifact = ModelArtifact::load(&model)?;
            let table = match load_for_artifact(&input, &artifact, &cfg) {
                Err(e) if matches!(e.downcast_ref::<flowae::Error>(), Some(flowae::Error::EmptyFile(_))) => {
                    flowae_core::FlowTable::empty(artifact.model.config().input_dim)
                }
                other => other?,
            };
            let rows = pipeline::detect(&artifact, &table)?;
            report::write_verdicts(&out, &rows)?;
            println!("{}", out.display());
        }
        Command::Eval { model, input, out, dump_latents, tuning } => {
            let cfg = load_config(config, &tuning, input.as_ref())?;
            let artifact = ModelArtifact::load(&model)?;
            let table = load_for_artifact(&input_path(&cfg)?, &artifact, &cfg)?;
            let ev = pipeline::evaluate(&artifact, &table, &cfg, tuning.percentile)?;
            let dir = out_dir(out.as_ref(), &cfg);
            report::write_summary(&dir.join("summary.toml"), &ev.report)?;
            report::write_pr_csv(&dir.join("pr_curve.csv"), &ev.report.pr_curve)?;
            report::write_per_category_csv(&dir.join("per_category.csv"), &ev.report.per_category)?;
            if dump_latents {
                report::write_latents_csv(&dir.join("latents.csv"), &ev.benign_latents)?;
            }
            println!("{}", dir.join("summary.toml").display());
        }
        Command::Sweep { input, out, grid_rec, grid_tml, full, save_best, tuning } => {
            let cfg = load_config(config, &tuning, input.as_ref())?;
            let grid = if full {
                SweepGrid::full()
            } else {
                let pick = |v: Vec<f64>, dflt: f64| if v.is_empty() { vec![dflt] } else { v };
                SweepGrid { lambda_rec: pick(grid_rec, cfg.train.lambda_rec), lambda_tml: pick(grid_tml, cfg.train.lambda_tml) }
            };
            let (schema, table) = pipeline::load_dataset(&input_path(&cfg)?, &cfg)?;
            let outcome = pipeline::sweep(&table, &cfg, &grid)?;
            let dir = out_dir(out.as_ref(), &cfg);
            let path = dir.join("sweep.csv");
            report::write_sweep_csv(&path, &outcome)?;
            report::write_sweep_average_csv(&dir.join("sweep_average.csv"), &outcome)?;
            if let Some(best_path) = save_best {
                let prepared = pipeline::prepare(&table, &cfg, None)?;
                let errors = flowae_core::detector::score_all(&outcome.best_cell().model, &prepared.train)?;
                pipeline::sweep_cell_artifact(&outcome, outcome.best, errors, &schema, &cfg).save(&best_path)?;
            }
            println!("{}", path.display());
        }
        Command::Transfer { model, input, freeze, output, out, tuning } => {
            let cfg = load_config(config, &tuning, input.as_ref())?;
            let pretrained = ModelArtifact::load(&model)?;
            let (schema, table) = pipeline::load_dataset(&input_path(&cfg)?, &cfg)?;
            let freeze = match freeze {
                FreezeArg::Encoder => FreezeSpec::encoder(),
                FreezeArg::AllButIo => FreezeSpec::all_but_io(),
            };
            let trained = pipeline::transfer(&pretrained, &table, &schema, &cfg, &freeze)?;
            trained.artifact.save(&output)?;
            let report_path = out_dir(out.as_ref(), &cfg).join("transfer_report.csv");
            let variational = trained.artifact.model.config().mode == ModelMode::Variational;
            report::write_train_csv(&report_path, &trained.epochs, variational)?;
            println!("{}", report_path.display());
        }
        Command::Threat(t) => run_threat(t)?,
    }
    Ok(())
}

fn run_threat(t: Threat) -> Result<()> {
    match t {
        Threat::BruteForce { alphabet, length, guess_time, procs, elapsed } => {
            let p = BruteForceParams { alphabet_size: alphabet, password_length: length, guess_time, processors: procs, elapsed };
            let expected = threat::brute_force_expected_time(&p)?;
            println!("search_space = {}", p.search_space());
            println!("expected_time = {expected:?}");
            if elapsed > 0.0 {
                println!("success_probability = {:?}", threat::brute_force_success_prob(&p)?);
            }
        }
        Threat::Dos { capacity, legit_rate, attack_rate, legit_arrival, attack_arrival, service_rate } => {
            let p = DosParams { capacity, legit_rate, attack_rate, legit_arrival, attack_arrival, service_rate };
            let o = threat::dos_overload(&p)?;
            println!("overloaded = {}", o.overloaded);
            println!("utilization = {:?}", o.utilization);
            println!("overload_probability = {:?}", o.overload_probability);
        }
        Threat::Recon { ips, ports, services, scan_rate, beta, time, vulns, exploitable, detection_threshold } => {
            let p = ReconParams {
                ip_count: ips,
                port_count: ports,
                service_count: services,
                scan_rate,
                detection_scale: beta,
                time,
                vulnerabilities: vulns,
                exploitable,
                detection_threshold,
            };
            println!("search_space = {}", threat::recon_search_space(&p)?);
            println!("detection_probability = {:?}", threat::recon_detect_prob(&p)?);
            println!("success_probability = {:?}", threat::recon_success_prob(&p)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
