use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ills::datagen::{init_params, ExperimentPreset, InitScheme, PresetName};
use ills::harness::{
    self, emit_csv, emit_svg, read_aggregates_csv, run_cell, run_experiment, Algo, CellId,
    CellTrace, CurveKey, ExperimentConfig, PLOT_FILE,
};
use ills::{Activation, Error, MlpParams};

#[derive(Parser)]
#[command(
    name = "ills",
    version,
    about = "Iterative linear least squares vs Adam experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a preset's training data as CSV.
    GenData {
        #[arg(long)]
        preset: PresetName,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the ground-truth parameters as JSON.
        #[arg(long)]
        params_out: Option<PathBuf>,
    },
    /// Train a single cell and write its loss trace.
    Train {
        #[arg(long)]
        preset: PresetName,
        #[arg(long)]
        algo: Algo,
        #[arg(long)]
        lr: f64,
        #[arg(long, default_value = "custom")]
        init: InitScheme,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        data_seed: u64,
        /// Start from these parameters instead of drawing them.
        #[arg(long)]
        init_params: Option<PathBuf>,
        /// Write the trained parameters as JSON.
        #[arg(long)]
        save_params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a grid sweep described by a TOML config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Render an aggregates CSV as an SVG loss plot.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(String),
    Io(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match &e {
            Error::Io { .. } => Failure::Io(e.to_string()),
            Error::Csv(inner) if inner.is_io_error() => Failure::Io(e.to_string()),
            Error::Json(inner) if inner.is_io() => Failure::Io(e.to_string()),
            Error::NonFiniteInput(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn read_params(path: &Path) -> Result<MlpParams, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(MlpParams::from_json(&text)?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::from(Error::io(path, e)))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, Failure> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::from(Error::io(path, e)))
}

fn gen_data(
    preset: PresetName,
    seed: u64,
    out: &Path,
    params_out: Option<&Path>,
) -> Result<(), Failure> {
    let preset = ExperimentPreset::by_name(preset);
    let data = preset.dataset(seed)?;
    let mut w = csv::Writer::from_writer(create(out)?);
    let mut header: Vec<String> = (1..=data.num_features()).map(|i| format!("x{i}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(Error::from)?;
    for (row, y) in data.inputs.iter_rows().zip(&data.targets) {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        rec.push(format!("{y:?}"));
        w.write_record(&rec).map_err(Error::from)?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    if let Some(path) = params_out {
        let truth = preset.true_params.as_ref().ok_or_else(|| {
            Failure::Config(format!(
                "preset {} has no ground-truth parameters",
                preset.name
            ))
        })?;
        write_file(path, &truth.to_json()?)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train(
    preset: PresetName,
    algo: Algo,
    lr: f64,
    init: InitScheme,
    seed: u64,
    epochs: usize,
    data_seed: u64,
    init_path: Option<&Path>,
    save_path: Option<&Path>,
    out: &Path,
) -> Result<(), Failure> {
    let preset = ExperimentPreset::by_name(preset);
    let data = preset.dataset(data_seed)?;
    data.check_targets(&Activation::tanh())?;
    let start = match init_path {
        Some(p) => read_params(p)?,
        None => init_params(&preset.topology, init, seed)?,
    };
    let truth = preset
        .true_params
        .as_ref()
        .filter(|t| t.topology() == start.topology());
    let (trained, trace) = run_cell(&start, &data, algo, lr, epochs, seed, truth)?;
    let cell = CellTrace {
        cell: CellId {
            key: CurveKey {
                preset: preset.name,
                algo,
                init,
                lr,
            },
            seed,
        },
        trace,
    };
    harness::write_traces_csv(std::slice::from_ref(&cell), create(out)?)?;
    if let Some(path) = save_path {
        write_file(path, &trained.to_json()?)?;
    }
    if let Some(epoch) = cell.trace.diverged_at {
        return Err(Failure::Numerical(format!(
            "training became non-finite at epoch {epoch}"
        )));
    }
    eprintln!(
        "{} {} lr={} seed={}: loss {} -> {}",
        algo,
        init,
        lr,
        seed,
        cell.trace.initial_loss(),
        cell.trace.final_loss()
    );
    Ok(())
}

fn experiment(config: &Path, out_dir: &Path, workers: Option<usize>) -> Result<(), Failure> {
    let cfg = ExperimentConfig::load(config)?;
    let workers = workers
        .or(cfg.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let result = run_experiment(&cfg, workers)?;
    emit_csv(&result.traces, &result.aggregates, out_dir)?;
    emit_svg(&result.aggregates, out_dir.join(PLOT_FILE))?;
    let diverged = result.traces.iter().filter(|t| t.diverged()).count();
    eprintln!(
        "{} traces, {} curves, {} diverged -> {}",
        result.traces.len(),
        result.aggregates.len(),
        diverged,
        out_dir.display()
    );
    Ok(())
}

fn plot(input: &Path, out: &Path) -> Result<(), Failure> {
    let file = fs::File::open(input).map_err(|e| Error::io(input, e))?;
    let curves = read_aggregates_csv(file)?;
    emit_svg(&curves, out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::GenData {
            preset,
            seed,
            out,
            params_out,
        } => gen_data(*preset, *seed, out, params_out.as_deref()),
        Command::Train {
            preset,
            algo,
            lr,
            init,
            seed,
            epochs,
            data_seed,
            init_params,
            save_params,
            out,
        } => train(
            *preset,
            *algo,
            *lr,
            *init,
            *seed,
            *epochs,
            *data_seed,
            init_params.as_deref(),
            save_params.as_deref(),
            out,
        ),
        Command::Experiment {
            config,
            out_dir,
            workers,
        } => experiment(config, out_dir, *workers),
        Command::Plot { input, out } => plot(input, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
