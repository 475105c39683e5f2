//! `rope-scaling` command line: frequency tables, scheme comparisons,
//! entropy diagnostics and the invariant suite.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error, 3 I/O error.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rope_scaling::io::{
    compare_tables, write_comparison, write_entropy, write_freqs, EntropyRecord, IoError,
    OutputFormat,
};
use rope_scaling::validate::{run_validation, Fault, ValidationOptions};
use rope_scaling::{
    attention_diagnostics, build_table, BlendDomain, DynamicScaler, FrequencyTable, RopeError,
    RopeParams, SchemeConfig, SchemeKind,
};

#[derive(Parser)]
#[command(
    name = "rope-scaling",
    version,
    about = "RoPE context-extension frequency tables and diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the per-dimension frequency table of a scheme.
    Freqs(CommonArgs),
    /// Compare the scaled frequencies of two schemes.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Scheme B (scheme A comes from --scheme).
        #[arg(long)]
        scheme_b: Option<String>,
        /// Scale for scheme B; defaults to scheme A's scale.
        #[arg(long)]
        scale_b: Option<f64>,
    },
    /// Mean causal attention entropy over synthetic queries and keys.
    Entropy {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated context lengths.
        #[arg(long, value_delimiter = ',')]
        lengths: Option<Vec<usize>>,
    },
    /// Run every invariant check; exit 1 if any fails.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Flat `key = value` file mirroring the long flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// none | pi | ntk-aware | ntk-by-parts | yarn
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    base: Option<f64>,
    /// Head dimension |D|.
    #[arg(long)]
    dim: Option<usize>,
    /// Trained context length L.
    #[arg(long)]
    trained_len: Option<usize>,
    /// Target context length L'; sets the scale to L'/L unless --scale is given.
    #[arg(long)]
    target_len: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// frequency | wavelength
    #[arg(long)]
    blend: Option<String>,
    /// Derive the scale from the sequence length at evaluation time.
    #[arg(long)]
    dynamic: bool,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

enum CliError {
    Usage(String),
    Io(String),
    Validation,
}

impl From<RopeError> for CliError {
    fn from(e: RopeError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Rope(e) => CliError::Usage(e.to_string()),
            other => CliError::Io(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Fully resolved settings for one invocation.
struct RunConfig {
    params: RopeParams,
    scheme: SchemeConfig,
    dynamic: bool,
    format: OutputFormat,
    out: Option<PathBuf>,
    seed: u64,
    file: HashMap<String, String>,
}

fn read_config_file(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    i + 1
                ))
            })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::Usage(format!("invalid value `{raw}` for {key}")))
}

impl CommonArgs {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => read_config_file(path)?,
            None => HashMap::new(),
        };
        fn pick<T: std::str::FromStr>(
            flag: Option<T>,
            file: &HashMap<String, String>,
            key: &str,
        ) -> Result<Option<T>, CliError> {
            match flag {
                Some(v) => Ok(Some(v)),
                None => file.get(key).map(|raw| parse_value(key, raw)).transpose(),
            }
        }

        let base = pick(self.base, &file, "base")?.unwrap_or(RopeParams::DEFAULT_BASE);
        let dim = pick(self.dim, &file, "dim")?.unwrap_or(RopeParams::DEFAULT_HEAD_DIM);
        let trained = pick(self.trained_len, &file, "trained-len")?
            .unwrap_or(RopeParams::DEFAULT_TRAINED_CONTEXT);
        let params = RopeParams::new(base, dim, trained)?;

        let kind: SchemeKind = pick(self.scheme, &file, "scheme")?
            .map(|s: String| s.parse())
            .transpose()?
            .unwrap_or(SchemeKind::None);
        let scale = pick(self.scale, &file, "scale")?;
        let target = pick(self.target_len, &file, "target-len")?;
        let mut scheme = match (scale, target) {
            (Some(s), Some(t)) => {
                eprintln!("warning: both scale ({s}) and target length ({t}) given; using scale");
                SchemeConfig::new(kind, s)
            }
            (Some(s), None) => SchemeConfig::new(kind, s),
            (None, Some(t)) => SchemeConfig::for_target(kind, &params, t),
            (None, None) => SchemeConfig::new(kind, 1.0),
        };
        if let Some(alpha) = pick(self.alpha, &file, "alpha")? {
            scheme.alpha = alpha;
        }
        if let Some(beta) = pick(self.beta, &file, "beta")? {
            scheme.beta = beta;
        }
        if let Some(blend) = pick(self.blend, &file, "blend")? {
            scheme.blend = match blend.to_ascii_lowercase().as_str() {
                "frequency" => BlendDomain::Frequency,
                "wavelength" => BlendDomain::Wavelength,
                other => return Err(CliError::Usage(format!("unknown blend domain `{other}`"))),
            };
        }
        scheme.validate(&params)?;

        let dynamic = self.dynamic || pick(None, &file, "dynamic")?.unwrap_or(false);
        let format = pick(self.format, &file, "format")?
            .map(|f: String| f.parse())
            .transpose()?
            .unwrap_or_default();
        let out = pick(self.out, &file, "out")?;
        let seed = pick(self.seed, &file, "seed")?.unwrap_or(0);
        Ok(RunConfig {
            params,
            scheme,
            dynamic,
            format,
            out,
            seed,
            file,
        })
    }
}

impl RunConfig {
    /// Table for the configured scheme; under `--dynamic` the scale comes
    /// from the target length (or `s * L` when only a scale was given).
    fn table(&self, scheme: &SchemeConfig) -> Result<FrequencyTable, CliError> {
        if !self.dynamic {
            return Ok(build_table(&self.params, scheme)?);
        }
        let len = scheme.target_context.unwrap_or_else(|| {
            (scheme.scale * self.params.trained_context() as f64).round() as usize
        });
        let mut scaler = DynamicScaler::new(self.params, *scheme)?;
        Ok((*scaler.table_for_length(len)?).clone())
    }

    fn with_output<F>(&self, emit: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), IoError>,
    {
        match &self.out {
            Some(path) => {
                let file = File::create(path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                let mut w = BufWriter::new(file);
                emit(&mut w)?;
                w.flush()?;
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                emit(&mut w)?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

fn cmd_freqs(args: CommonArgs) -> Result<(), CliError> {
    let run = args.resolve()?;
    let table = run.table(&run.scheme)?;
    run.with_output(|w| write_freqs(&table, run.format, w))
}

fn cmd_compare(
    args: CommonArgs,
    scheme_b: Option<String>,
    scale_b: Option<f64>,
) -> Result<(), CliError> {
    let run = args.resolve()?;
    let kind_b: SchemeKind = match scheme_b.or_else(|| run.file.get("scheme-b").cloned()) {
        Some(s) => s.parse()?,
        None => SchemeKind::None,
    };
    let scale_b = match scale_b {
        Some(s) => Some(s),
        None => run
            .file
            .get("scale-b")
            .map(|raw| parse_value("scale-b", raw))
            .transpose()?,
    };
    let mut config_b = SchemeConfig {
        kind: kind_b,
        ..run.scheme
    };
    if let Some(s) = scale_b {
        config_b = config_b.with_scale(s);
    }
    config_b.validate(&run.params)?;
    let cmp = compare_tables(&run.table(&run.scheme)?, &run.table(&config_b)?)?;
    run.with_output(|w| write_comparison(&cmp, run.format, w))
}

fn cmd_entropy(args: CommonArgs, lengths: Option<Vec<usize>>) -> Result<(), CliError> {
    let run = args.resolve()?;
    let lengths = match lengths {
        Some(l) => l,
        None => match run.file.get("lengths") {
            Some(raw) => raw
                .split(',')
                .map(|v| parse_value("lengths", v.trim()))
                .collect::<Result<_, _>>()?,
            None => vec![1, 64, 256, 1024],
        },
    };
    if lengths.is_empty() {
        return Err(CliError::Usage("at least one length is required".into()));
    }
    let mut scaler = DynamicScaler::new(run.params, run.scheme)?;
    let fixed = build_table(&run.params, &run.scheme)?;
    let mut records = Vec::with_capacity(lengths.len());
    for &len in &lengths {
        let diag = if run.dynamic {
            attention_diagnostics(&*scaler.table_for_length(len)?, len, run.seed)?
        } else {
            attention_diagnostics(&fixed, len, run.seed)?
        };
        records.push(EntropyRecord::from(&diag));
    }
    run.with_output(|w| write_entropy(&records, run.format, w))
}

fn cmd_validate(args: CommonArgs, inject_fault: bool) -> Result<(), CliError> {
    let run = args.resolve()?;
    let opts = ValidationOptions {
        seed: run.seed,
        fault: inject_fault.then_some(Fault::RampSignFlip),
    };
    let report = run_validation(&run.params, &run.scheme, opts)?;
    run.with_output(|w| report.write_to(w).map_err(IoError::from))?;
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::Validation)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Freqs(args) => cmd_freqs(args),
        Command::Compare {
            common,
            scheme_b,
            scale_b,
        } => cmd_compare(common, scheme_b, scale_b),
        Command::Entropy { common, lengths } => cmd_entropy(common, lengths),
        Command::Validate {
            common,
            inject_fault,
        } => cmd_validate(common, inject_fault),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
