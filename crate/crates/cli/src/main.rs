use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use anonaug_core::anonymize::Algorithm;
use anonaug_core::harness::{parse_k_grid, run_experiment, ExperimentPlan};
use anonaug_core::pipeline::{augment_and_merge, default_count, write_run_dir, AugmentOptions, PolicyMode, ValidationPolicy};
use anonaug_core::{
    anonymize, audit, from_config, load_dataset, load_generalized, sample_records, serialize_csv, BackendConfig,
    Dataset, Profile, Provenance, Scalar, SchemaConfig,
};

#[derive(Parser)]
#[command(name = "anonaug", version, about = "k-anonymize, audit and augment tabular datasets")]
struct Cli {
    /// Floating-point precision of numeric attributes.
    #[arg(long, global = true, value_enum, default_value = "64")]
    precision: Precision,

    /// Log verbosity (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Precision {
    #[value(name = "32")]
    F32,
    #[value(name = "64")]
    F64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendChoice {
    Synth,
    Llm,
}

#[derive(Subcommand)]
enum Command {
    /// Print k, distinct l and the class-size histogram as JSON.
    Audit(AuditArgs),
    /// k-anonymize a dataset; writes the CSV and a `.json` metadata sidecar.
    Anonymize(AnonymizeArgs),
    /// Add generated records to an anonymized dataset and re-audit it.
    Augment(AugmentArgs),
    /// Draw a seeded sample without replacement.
    Sample(SampleArgs),
    /// Run the k grid over algorithms and backends.
    Experiment(ExperimentArgs),
    /// Write a synthetic dataset and its schema files for a bundled profile.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    io: Input,
    /// Quasi-identifier cells are raw values only.
    #[arg(long)]
    original: bool,
}

#[derive(Args)]
struct AnonymizeArgs {
    #[command(flatten)]
    io: Input,
    #[arg(long)]
    alg: Algorithm,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "synth")]
    backend: BackendChoice,
    /// JSON backend config; required for `llm`.
    #[arg(long)]
    backend_config: Option<PathBuf>,
    #[arg(long, default_value = "strict")]
    policy: PolicyMode,
    #[arg(long, default_value_t = 3)]
    max_attempts: u32,
    /// Records requested per attempt; defaults to ceil(n / 10).
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    io: Input,
    /// k the input was anonymized for.
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    io: Input,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    io: Input,
    /// `default` or a comma-separated list.
    #[arg(long, default_value = "default")]
    k_grid: String,
    #[arg(long, value_delimiter = ',', default_value = "bm,tdga,cba")]
    algs: Vec<Algorithm>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "synth")]
    backends: Vec<BackendChoice>,
    /// JSON config for the `llm` backend.
    #[arg(long)]
    llm_config: Option<PathBuf>,
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid cells run concurrently; 0 means one per core.
    #[arg(long, default_value_t = 0)]
    parallel: usize,
    #[arg(long, default_value = "strict")]
    policy: PolicyMode,
    #[arg(long, default_value_t = 3)]
    max_attempts: u32,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    profile: Profile,
    /// Defaults to the profile's reference size.
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Receives `data.csv`, `config.json` and the hierarchy files.
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.precision {
        Precision::F32 => run::<f32>(cli.command),
        Precision::F64 => run::<f64>(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run<T: Scalar>(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Audit(a) => {
            let config = SchemaConfig::load(&a.io.config)?;
            let file = open(&a.io.input)?;
            let d: Dataset<T> = if a.original {
                load_dataset(file, &config)?
            } else {
                load_generalized(file, &config, Provenance::Original)?
            };
            println!("{}", serde_json::to_string_pretty(&audit(&d)?)?);
        }
        Command::Anonymize(a) => {
            let d: Dataset<T> = load_original(&a.io)?;
            let run = anonymize(&d, a.alg, a.k, a.seed)?;
            let meta = run.metadata()?;
            write_file(&a.output, &serialize_csv(&run.output))?;
            let json = serde_json::to_string_pretty(&meta)?;
            write_file(&a.output.with_extension("json"), json.as_bytes())?;
            println!("{json}");
        }
        Command::Augment(a) => {
            let config = SchemaConfig::load(&a.io.config)?;
            let provenance = Provenance::Anonymized {
                algorithm: None,
                requested_k: a.k,
            };
            let d: Dataset<T> = load_generalized(open(&a.io.input)?, &config, provenance)?;
            let mut cfg = backend_config(a.backend.backend, a.backend.backend_config.as_deref())?;
            cfg.seed = a.seed;
            let generator = from_config::<T>(&cfg)?;
            let policy = ValidationPolicy::new(a.backend.policy, a.backend.max_attempts)?;
            let options = AugmentOptions {
                count: a.backend.count.unwrap_or_else(|| default_count(d.len())),
                seed: a.seed,
            };
            let run = augment_and_merge(&d, a.k, generator.as_ref(), &policy, options)?;
            write_run_dir(&run, &a.out_dir)?;
            println!("{}", serde_json::to_string_pretty(&run.outcome.summary())?);
        }
        Command::Sample(a) => {
            let d: Dataset<T> = load_original(&a.io)?;
            let s = sample_records(&d, a.count, a.seed)?;
            write_file(&a.output, &serialize_csv(&s))?;
        }
        Command::Experiment(a) => {
            let mut backends = Vec::new();
            for choice in &a.backends {
                let path = if *choice == BackendChoice::Llm { a.llm_config.as_deref() } else { None };
                let mut cfg = backend_config(*choice, path)?;
                if *choice == BackendChoice::Synth {
                    cfg.seed = a.seed;
                }
                backends.push(cfg);
            }
            let plan = ExperimentPlan {
                dataset_path: a.io.input,
                config_path: a.io.config,
                k_values: parse_k_grid(&a.k_grid)?,
                algorithms: a.algs,
                backends,
                augment_count: a.count,
                sample_count: a.sample,
                seed: a.seed,
                output_dir: a.out_dir,
                policy: ValidationPolicy::new(a.policy, a.max_attempts)?,
                parallelism: a.parallel,
            };
            let report = run_experiment::<T>(&plan)?;
            print!("{}\n{}", report.anonymize_table.to_text(), report.augmented_table.to_text());
        }
        Command::Generate(a) => {
            let config = a.profile.write_files(&a.out_dir)?;
            let d: Dataset<T> = a.profile.generate(a.rows.unwrap_or(a.profile.default_rows()), a.seed)?;
            let data = a.out_dir.join("data.csv");
            write_file(&data, &serialize_csv(&d))?;
            println!("{}\n{}", data.display(), config.display());
        }
    }
    Ok(())
}

fn open(path: &Path) -> anyhow::Result<fs::File> {
    fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))
}

fn load_original<T: Scalar>(io: &Input) -> anyhow::Result<Dataset<T>> {
    let config = SchemaConfig::load(&io.config)?;
    Ok(load_dataset(open(&io.input)?, &config)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn backend_config(choice: BackendChoice, path: Option<&Path>) -> anyhow::Result<BackendConfig> {
    match (choice, path) {
        (BackendChoice::Synth, None) => Ok(BackendConfig::synth(0, 1)),
        (_, Some(p)) => {
            let cfg: BackendConfig = serde_json::from_str(&fs::read_to_string(p)?)
                .with_context(|| format!("invalid backend config {}", p.display()))?;
            cfg.validate()?;
            Ok(cfg)
        }
        (BackendChoice::Llm, None) => bail!("the llm backend needs a JSON backend config"),
    }
}
