use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use moc_cli::config::{CurveGrid, ReportFormat, SwitchModeConfig};
use moc_cli::error::CliError;
use moc_cli::report::curves_table;
use moc_cli::runner::{load_traces, reactive_only, replay_config, run_with_traces};
use moc_cli::trace_csv::{parse_trace_csv, write_trace_csv};
use moc_cli::{emit_report, Result, ScenarioConfig, Table};
use moc_core::redundancy_curves;

#[derive(Parser)]
#[command(
    name = "moc",
    version,
    about = "Multi-operator cellular reliability and switching simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or ingest the configured traces and write a full report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Analyse a recorded trace file.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        /// Analysis settings; its providers are replaced by the trace's.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the n-way redundancy reliability and MTTF curves.
    Curves {
        #[arg(long, default_value_t = 0.02)]
        lambda_min: f64,
        #[arg(long, default_value_t = 0.21)]
        lambda_max: f64,
        #[arg(long, default_value_t = 0.01)]
        lambda_step: f64,
        #[arg(long, default_value_t = 4)]
        n_max: u32,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// File to write instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the reactive switching table with its hindsight oracle row.
    Oracle {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config or trace file without running anything.
    Validate {
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Args)]
#[group(required = true, multiple = true)]
struct Source {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    /// Reactive switching window in seconds; repeatable.
    #[arg(long = "window")]
    windows: Vec<f64>,
    #[arg(long)]
    switch_delay_ms: Option<u64>,
    #[arg(long, value_enum)]
    switch_mode: Option<Mode>,
}

#[derive(Args)]
struct OutputArgs {
    /// Report directory; without one the JSON report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Outage,
    Continuity,
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) -> Result<()> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if !self.windows.is_empty() {
            cfg.reactive.windows_s = self.windows.clone();
        }
        if let Some(d) = self.switch_delay_ms {
            cfg.switch_delay_ms = d;
        }
        if let Some(m) = self.switch_mode {
            cfg.switch_mode = match m {
                Mode::Outage => SwitchModeConfig::Outage,
                Mode::Continuity => SwitchModeConfig::Continuity,
            };
        }
        cfg.validate()
    }
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn load_source(source: &Source) -> Result<(ScenarioConfig, PathBuf)> {
    match (&source.config, &source.trace) {
        (Some(c), None) => Ok((ScenarioConfig::load(c)?, config_dir(c))),
        (c, Some(t)) => {
            let template = c.as_deref().map(ScenarioConfig::load).transpose()?;
            Ok((replay_config(t, template)?, PathBuf::new()))
        }
        (None, None) => Err(CliError::Config("either --config or --trace is required".into())),
    }
}

fn write_out(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io {
            path: "<stdout>".into(),
            source: e,
        }),
    }
}

fn render_table(t: &Table, format: Format) -> String {
    match format {
        Format::Csv => t.to_csv(),
        Format::Json => serde_json::to_string_pretty(t).expect("table serializes") + "\n",
    }
}

fn report(mut cfg: ScenarioConfig, base_dir: &Path, overrides: &Overrides, output: &OutputArgs) -> Result<()> {
    overrides.apply(&mut cfg)?;
    let format = output.format.map_or(cfg.output.format, ReportFormat::from);
    let dir = output.out.clone().or_else(|| {
        cfg.output
            .dir
            .as_ref()
            .map(|d| if d.is_absolute() { d.clone() } else { base_dir.join(d) })
    });
    let traces = load_traces(&cfg, base_dir)?;
    let out = run_with_traces(&cfg, traces)?;
    match dir {
        Some(dir) => {
            emit_report(&out.report, format, &dir)?;
            write_trace_csv(&dir.join("traces.csv"), &out.traces)
        }
        None if format == ReportFormat::Json => write_out(&out.report.to_json(), None),
        None => Err(CliError::Config("csv reports need an output directory (--out)".into())),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            overrides,
            output,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            report(cfg, &config_dir(&config), &overrides, &output)
        }
        Command::Replay {
            trace,
            config,
            overrides,
            output,
        } => {
            let template = config.as_deref().map(ScenarioConfig::load).transpose()?;
            let cfg = replay_config(&trace, template)?;
            report(cfg, Path::new(""), &overrides, &output)
        }
        Command::Curves {
            lambda_min,
            lambda_max,
            lambda_step,
            n_max,
            format,
            out,
        } => {
            let grid = CurveGrid {
                lambda_min,
                lambda_max,
                lambda_step,
                n_max,
            };
            let table =
                curves_table(&redundancy_curves(&grid.lambdas()?, n_max).map_err(|e| CliError::Config(e.to_string()))?);
            write_out(&render_table(&table, format), out.as_deref())
        }
        Command::Oracle {
            source,
            overrides,
            format,
            out,
        } => {
            let (mut cfg, base) = load_source(&source)?;
            overrides.apply(&mut cfg)?;
            let traces = load_traces(&cfg, &base)?;
            write_out(&render_table(&reactive_only(&cfg, &traces)?, format), out.as_deref())
        }
        Command::Validate { source } => {
            let (cfg, base) = load_source(&source)?;
            if let Some(t) = &source.trace {
                parse_trace_csv(t, cfg.tick_ms)?;
            }
            let traces = load_traces(&cfg, &base)?;
            let samples: usize = traces.iter().map(|t| t.len()).sum();
            write_out(
                &format!(
                    "ok: {} providers, {samples} samples, config {}\n",
                    traces.len(),
                    cfg.hash()
                ),
                None,
            )
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
