use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand};

use chirpmem::cli::{
    fmt_num, run_design, run_scenario, run_sweep, CliError, KvDoc, RunConfig, Spacing, SweepAxis,
    SweepSpec, PRESETS,
};

#[derive(Debug, Parser)]
#[command(
    name = "chirpmem",
    version,
    about = "Chirped-control Raman memory simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Store and retrieve one pulse.
    Simulate(RunArgs),
    /// Repeat a run over a range of one parameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// chirp (beta L dt), coupling (|g|^2 N L dt), angle (rad) or time_shift (units of T).
        #[arg(long)]
        axis: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        points: usize,
        /// linear or log
        #[arg(long, default_value = "linear")]
        spacing: String,
    },
    /// Feasibility report for a control-beam design.
    Design {
        #[arg(long)]
        config: PathBuf,
        /// Directory for design.txt; the report goes to stdout either way.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Named parameter sets.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Debug, Subcommand)]
enum PresetAction {
    List,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// forward or backward
    #[arg(long)]
    readout: Option<String>,
    /// Readout time shift t' in units of T.
    #[arg(long, allow_negative_numbers = true)]
    time_shift: Option<f64>,
    /// Extra key=value settings, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn load_doc(path: &Path) -> anyhow::Result<KvDoc> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(KvDoc::parse(&path.display().to_string(), &text)?)
}

fn run_config(args: &RunArgs) -> anyhow::Result<RunConfig> {
    let mut doc = match &args.config {
        Some(path) => load_doc(path)?,
        None => KvDoc::default(),
    };
    if let Some(name) = &args.preset {
        if doc.contains("preset") {
            return Err(CliError::Usage(
                "preset given both in the config and on the command line".into(),
            )
            .into());
        }
        doc.set(&format!("preset={name}"))?;
    }
    if !doc.contains("preset") && args.config.is_none() {
        return Err(CliError::Usage("give --config or --preset".into()).into());
    }
    if let Some(mode) = &args.readout {
        doc.set(&format!("readout.mode={mode}"))?;
    }
    if let Some(t) = args.time_shift {
        doc.set(&format!("readout.time_shift={t}"))?;
    }
    for s in &args.set {
        doc.set(s)?;
    }
    Ok(RunConfig::from_doc(doc)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = run_config(&args)?;
            let m = run_scenario(&cfg, &args.out)?;
            println!("eta = {}", fmt_num(m.eta));
            println!("f_prime = {}", fmt_num(m.f_prime));
            println!("out_dir = {}", args.out.display());
        }
        Command::Sweep {
            run,
            axis,
            from,
            to,
            points,
            spacing,
        } => {
            let cfg = run_config(&run)?;
            let spec = SweepSpec {
                axis: SweepAxis::parse(&axis)?,
                from,
                to,
                points,
                spacing: Spacing::parse(&spacing)?,
            };
            let rows = run_sweep(&cfg, &spec, &run.out)?;
            println!("rows = {}", rows.len());
            println!("sweep_csv = {}", run.out.join("sweep.csv").display());
        }
        Command::Design { config, out } => {
            let (_, summary) = run_design(load_doc(&config)?)?;
            let text = summary.render();
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("design.txt"), &text)?;
            }
            print!("{text}");
        }
        Command::Preset {
            action: PresetAction::List,
        } => {
            for (name, about) in PRESETS {
                println!("{name}\t{about}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<CliError>()
                .map_or(2, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
