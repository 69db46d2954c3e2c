//! Command-line front end: `audit`, `metrics`, `ensemble` and `simulate`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use landmark_audit::data::{read_predictions, write_labels, write_records, DataError, EnsembleTaxonomies};
use landmark_audit::report::{emit_metrics, render_tables, run_audit, AuditConfig, ErrorCategory, Format, ReportError};
use landmark_audit::synth::{generate, preset, SynthError, SyntheticSpec, PRESET_NAMES};

#[derive(Parser)]
#[command(name = "landmark-audit", version, about = "Confounder-controlled demographic bias audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full audit described by a TOML config.
    Audit {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's input path.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output directory; without one the plain report goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Comma-separated list of plain, markdown, delimited, json.
        #[arg(long)]
        format: Option<String>,
    },
    /// Emit per-row NME and head-pose deviation.
    Metrics {
        #[arg(long)]
        input: PathBuf,
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "sample_id")]
        id_column: String,
        #[arg(long, default_value_t = ',')]
        delimiter: char,
    },
    /// Aggregate three-model demographic predictions into one label set.
    Ensemble {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = ',')]
        delimiter: char,
    },
    /// Generate a synthetic dataset and its ground-truth sidecar.
    Simulate {
        /// TOML synthetic spec; alternatively use --preset.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory receiving data.csv and truth.json.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ReportError>() {
            return match e.category() {
                ErrorCategory::Config => 3,
                ErrorCategory::Data => 4,
                ErrorCategory::Numeric => 5,
                ErrorCategory::Other => 1,
            };
        }
        if cause.is::<DataError>() {
            return 4;
        }
        if cause.is::<SynthError>() {
            return 3;
        }
    }
    1
}

fn ascii_byte(c: char) -> Result<u8> {
    if !c.is_ascii() {
        bail!(ReportError::Config(format!("delimiter {c:?} is not a single ASCII character")));
    }
    Ok(c as u8)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Audit { config, input, out, alpha, format } => audit(&config, input, out, alpha, format),
        Command::Metrics { input, out, id_column, delimiter } => {
            let reader = BufReader::new(File::open(&input).with_context(|| format!("opening {}", input.display()))?);
            let mut writer = open_out(out.as_deref())?;
            let n = emit_metrics(reader, &mut writer, ascii_byte(delimiter)?, &id_column)?;
            writer.flush()?;
            log::info!("wrote metrics for {n} rows");
            Ok(())
        }
        Command::Ensemble { input, out, delimiter } => {
            let delimiter = ascii_byte(delimiter)?;
            let reader = BufReader::new(File::open(&input).with_context(|| format!("opening {}", input.display()))?);
            let predictions = read_predictions(reader, delimiter)?;
            let mut writer = open_out(out.as_deref())?;
            write_labels(&mut writer, &predictions, &EnsembleTaxonomies::default(), delimiter)?;
            writer.flush()?;
            Ok(())
        }
        Command::Simulate { config, preset: name, n, seed, out } => simulate(config, name, n, seed, &out),
    }
}

fn audit(
    config_path: &Path,
    input: Option<PathBuf>,
    out: Option<PathBuf>,
    alpha: Option<f64>,
    format: Option<String>,
) -> Result<()> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| ReportError::Io { path: config_path.display().to_string(), message: e.to_string() })?;
    let mut config = AuditConfig::from_toml(&text)?;
    // A command-line input path is relative to the working directory, a
    // configured one to the config file.
    let base_dir = match input {
        Some(input) => {
            config.input.path = Some(input);
            Path::new(".")
        }
        None => config_path.parent().unwrap_or(Path::new(".")),
    };
    if let Some(a) = alpha {
        config.alpha = a;
    }
    if let Some(list) = format {
        config.output.formats = list.split(',').map(|s| s.trim().parse::<Format>()).collect::<Result<_, _>>()?;
    }
    if let Some(dir) = out {
        config.output.dir = Some(dir);
    }
    config.validate()?;

    let report = run_audit(&config, base_dir)?;
    let delimiter = ascii_byte(config.output.delimiter)?;

    match &config.output.dir {
        None => {
            let docs = render_tables(&report, Format::Plain, delimiter)?;
            let mut stdout = io::stdout().lock();
            stdout.write_all(docs[0].content.as_bytes())?;
        }
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for format in &config.output.formats {
                for doc in render_tables(&report, *format, delimiter)? {
                    let path = dir.join(&doc.name);
                    std::fs::write(&path, doc.content).with_context(|| format!("writing {}", path.display()))?;
                }
            }
        }
    }
    Ok(())
}

fn simulate(
    config: Option<PathBuf>,
    name: Option<String>,
    n: Option<usize>,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let mut spec: SyntheticSpec = match (config, name) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).map_err(|e| ReportError::Config(format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => preset(&name, n.unwrap_or(1000), seed.unwrap_or(0))?,
        _ => bail!(ReportError::Config(format!("give --config or --preset (one of {})", PRESET_NAMES.join(", ")))),
    };
    if let Some(n) = n {
        spec.n = n;
    }
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let data = generate(&spec)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let data_path = out.join("data.csv");
    let writer = BufWriter::new(File::create(&data_path).with_context(|| format!("creating {}", data_path.display()))?);
    write_records(writer, &data.dataset, &data.schema())?;
    let truth = serde_json::to_string_pretty(&data.truth)? + "\n";
    std::fs::write(out.join("truth.json"), truth)?;
    Ok(())
}
