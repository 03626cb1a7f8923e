use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use floquet_cavity_harness::config::{ExperimentConfig, LoadError, RunMode};
use floquet_cavity_harness::output::{Format, WriteOptions};
use floquet_cavity_harness::presets::{reproduce, PRESETS};
use floquet_cavity_harness::runs::{run_phonon_suite, run_quasienergy, run_scan, run_single, Output, RunContext, RunError};

/// Default output directory when `--out` is absent.
const OUT_DIR_VAR: &str = "FLOQCAV_OUT_DIR";

#[derive(Parser)]
#[command(name = "floqcav", version, about = "Floquet phase-preserving control of a cavity-coupled two-level system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for scans (default: available processors).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output grid step in ns, overriding the config.
    #[arg(long, global = true)]
    step: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Omit the timestamp header line.
    #[arg(long, global = true)]
    seedless: bool,
    /// Output directory (default: $FLOQCAV_OUT_DIR, else the working directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// One trajectory (closed, or open when decay or phonons are configured).
    Evolve { config: PathBuf },
    /// Parameter scan from `[run.scan]`.
    Scan { config: PathBuf },
    /// Quasi-energies over the amplitude ratio.
    Quasienergy { config: PathBuf },
    /// Bath tables, modulated/unmodulated runs and a temperature sweep.
    Phonon { config: PathBuf },
    /// Regenerate a figure preset.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        preset: String,
    },
    /// Parse and check a configuration without running it.
    Validate { config: PathBuf },
}

fn load(path: &Path) -> Result<ExperimentConfig, RunError> {
    ExperimentConfig::load(path).map_err(|e| match e {
        LoadError::Io(m) => RunError::Io(m),
        LoadError::Config(c) => RunError::Config(format!("{}: {c}", path.display())),
    })
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_all(outputs: &[Output], dir: &Path, prefix: Option<&str>, opts: WriteOptions) -> Result<(), RunError> {
    for o in outputs {
        let stem = match prefix {
            Some(p) if outputs.len() == 1 => p.to_string(),
            Some(p) => format!("{p}_{}", o.name),
            None => o.name.clone(),
        };
        let path = dir.join(format!("{stem}.{}", opts.format.extension()));
        o.table
            .write_to(&path, opts)
            .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        println!("{}", path.display());
    }
    Ok(())
}

/// `run.output` when set, else `<config stem>`.
fn prefix_for(cfg: &ExperimentConfig, path: &Path) -> String {
    cfg.run.output.clone().unwrap_or_else(|| {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
    })
}

fn execute(cli: &Cli) -> Result<(), RunError> {
    let ctx = RunContext { workers: cli.workers, step: cli.step };
    if matches!(cli.step, Some(h) if !(h > 0.0 && h.is_finite())) {
        return Err(RunError::Config("--step must be a positive number".into()));
    }
    ctx.pool()?;
    let opts = WriteOptions {
        format: match cli.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        },
        seedless: cli.seedless,
    };
    let dir = out_dir(cli);
    let (path, run): (&PathBuf, fn(&ExperimentConfig, &RunContext) -> Result<Vec<Output>, RunError>) = match &cli.command {
        Command::Reproduce { preset } => {
            let outs = reproduce(preset, &ctx)?;
            return write_all(&outs, &dir, None, opts);
        }
        Command::Validate { config } => {
            let cfg = load(config)?;
            let open = floquet_cavity_harness::runs::is_open(&cfg);
            println!(
                "{}: ok ({:?} mode, {} window(s), {} system, t_end {:.6} ns)",
                config.display(),
                cfg.run.mode,
                cfg.protocol.windows.len(),
                if open { "open" } else { "closed" },
                cfg.t_end()
            );
            return Ok(());
        }
        Command::Evolve { config } => (config, run_single),
        Command::Scan { config } => (config, run_scan),
        Command::Quasienergy { config } => (config, run_quasienergy),
        Command::Phonon { config } => (config, run_phonon_suite),
    };
    let cfg = load(path)?;
    let prefix = prefix_for(&cfg, path);
    if cfg.run.mode == RunMode::Preset {
        let name = cfg.run.preset.as_deref().expect("validated preset mode");
        let outs = reproduce(name, &ctx)?;
        return write_all(&outs, &dir, Some(&prefix), opts);
    }
    match (&cli.command, cfg.run.mode) {
        (Command::Evolve { .. }, RunMode::Scan) => {
            return Err(RunError::Config("evolve needs mode = \"single\"; use `scan` for this config".into()));
        }
        (Command::Scan { .. }, RunMode::Single) => {
            return Err(RunError::Config("scan needs mode = \"scan\" with a [run.scan] table".into()));
        }
        _ => {}
    }
    let outs = run(&cfg, &ctx)?;
    write_all(&outs, &dir, Some(&prefix), opts)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("floqcav: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
