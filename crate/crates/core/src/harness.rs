//! Experiment grid runner: shared initialisation across algorithms, seed
//! aggregation, parameter-recovery metric, and CSV / SVG output.

use std::cmp::Ordering;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use crate::baseline::train_adam_tracked;
use crate::datagen::{init_params, ExperimentPreset, InitScheme, PresetName};
use crate::ills::{train_ills_tracked, IllsConfig};
use crate::network::{Activation, Dataset, MlpParams};
use crate::{Error, Result, TrainTrace};

/// A trace counts as diverged once its loss exceeds this multiple of the
/// epoch-0 loss, or becomes non-finite.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

pub const TRACES_FILE: &str = "traces.csv";
pub const AGGREGATES_FILE: &str = "aggregates.csv";
pub const PLOT_FILE: &str = "losses.svg";

/// Euclidean norm of `|estimated| - |truth|` over all parameters in
/// [`MlpParams::flatten`] order. Insensitive to the tanh sign symmetry.
pub fn param_abs_error(estimated: &MlpParams, truth: &MlpParams) -> Result<f64> {
    if estimated.topology() != truth.topology() {
        return Err(Error::TopologyMismatch(format!(
            "estimated {:?} vs truth {:?}",
            estimated.topology(),
            truth.topology()
        )));
    }
    Ok(estimated
        .flatten()
        .iter()
        .zip(truth.flatten())
        .map(|(e, t)| (e.abs() - t.abs()).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Whether a loss trace has blown up relative to its starting point.
pub fn is_diverged(trace: &TrainTrace) -> bool {
    if trace.diverged_at.is_some() {
        return true;
    }
    let initial = trace.initial_loss();
    trace
        .losses
        .iter()
        .any(|l| !l.is_finite() || *l > DIVERGENCE_FACTOR * initial)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    Ills,
    Adam,
}

impl Algo {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algo::Ills => "ills",
            Algo::Adam => "adam",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ills" => Ok(Algo::Ills),
            "adam" => Ok(Algo::Adam),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm '{other}' (expected ills or adam)"
            ))),
        }
    }
}

/// Identifies a curve: everything about a cell except its seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveKey {
    pub preset: PresetName,
    pub algo: Algo,
    pub init: InitScheme,
    pub lr: f64,
}

impl CurveKey {
    fn cmp_key(&self, other: &Self) -> Ordering {
        (self.preset, self.algo, self.init)
            .cmp(&(other.preset, other.algo, other.init))
            .then(self.lr.total_cmp(&other.lr))
    }

    pub fn label(&self) -> String {
        format!("{} {} lr={}", self.algo, self.init, self.lr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellId {
    pub key: CurveKey,
    pub seed: u64,
}

impl CellId {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.key
            .cmp_key(&other.key)
            .then(self.seed.cmp(&other.seed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellTrace {
    pub cell: CellId,
    pub trace: TrainTrace,
}

impl CellTrace {
    pub fn diverged(&self) -> bool {
        is_diverged(&self.trace)
    }
}

/// Pointwise mean and population standard deviation over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    pub key: CurveKey,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n_seeds: usize,
}

fn default_epochs() -> usize {
    10_000
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_inits() -> Vec<String> {
    vec!["default".into(), "custom".into()]
}

fn default_ills_rates() -> Vec<f64> {
    vec![0.01, 0.05, 0.1]
}

fn default_adam_rates() -> Vec<f64> {
    vec![1e-4, 5e-4, 1e-3, 1e-2]
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateGrid {
    #[serde(default = "default_ills_rates")]
    pub ills: Vec<f64>,
    #[serde(default = "default_adam_rates")]
    pub adam: Vec<f64>,
}

impl Default for RateGrid {
    fn default() -> Self {
        Self {
            ills: default_ills_rates(),
            adam: default_adam_rates(),
        }
    }
}

/// Experiment grid, as read from TOML:
///
/// ```toml
/// preset = "set2-one-layer"
/// epochs = 2000
/// seeds = [0, 1, 2]
/// inits = ["default", "custom"]
/// data_seed = 0
/// track_param_error = true
///
/// [rates]
/// ills = [0.01, 0.05, 0.1]
/// adam = [1e-4, 5e-4, 1e-3, 1e-2]
/// ```
///
/// An algorithm with an empty rate list is skipped.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: String,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_inits")]
    pub inits: Vec<String>,
    #[serde(default)]
    pub rates: RateGrid,
    /// Seed of the synthetic dataset, shared by every cell.
    #[serde(default)]
    pub data_seed: u64,
    #[serde(default = "default_true")]
    pub track_param_error: bool,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(preset: PresetName) -> Self {
        Self {
            preset: preset.as_str().to_owned(),
            epochs: default_epochs(),
            seeds: default_seeds(),
            inits: default_inits(),
            rates: RateGrid::default(),
            data_seed: 0,
            track_param_error: true,
            workers: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn preset_name(&self) -> Result<PresetName> {
        self.preset.parse()
    }

    pub fn init_schemes(&self) -> Result<Vec<InitScheme>> {
        self.inits.iter().map(|s| s.parse()).collect()
    }

    /// `(algo, lr)` pairs in grid order.
    pub fn algo_rates(&self) -> Vec<(Algo, f64)> {
        let ills = self.rates.ills.iter().map(|&r| (Algo::Ills, r));
        let adam = self.rates.adam.iter().map(|&r| (Algo::Adam, r));
        ills.chain(adam).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.preset_name()?;
        let inits = self.init_schemes()?;
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.seeds.is_empty() || inits.is_empty() || self.algo_rates().is_empty() {
            return Err(Error::InvalidConfig(
                "seeds, inits and at least one rate list must be non-empty".into(),
            ));
        }
        for &(algo, lr) in &self.algo_rates() {
            match algo {
                Algo::Ills => IllsConfig::new(lr, self.epochs).validate()?,
                Algo::Adam if !(lr.is_finite() && lr > 0.0) => {
                    return Err(Error::InvalidConfig(format!(
                        "adam learning rate must be positive, got {lr}"
                    )))
                }
                Algo::Adam => {}
            }
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        Ok(())
    }
}

/// Trains one cell from the given starting parameters.
#[allow(clippy::too_many_arguments)]
pub fn run_cell(
    net: &MlpParams,
    data: &Dataset,
    algo: Algo,
    lr: f64,
    epochs: usize,
    seed: u64,
    truth: Option<&MlpParams>,
) -> Result<(MlpParams, TrainTrace)> {
    let act = Activation::tanh();
    match algo {
        Algo::Ills => train_ills_tracked(net, &act, data, &IllsConfig::new(lr, epochs), truth),
        Algo::Adam => train_adam_tracked(net, &act, data, lr, epochs, seed, truth),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub traces: Vec<CellTrace>,
    pub aggregates: Vec<AggregateCurve>,
}

/// Runs every `(init, seed, algo, lr)` cell. Each `(init, seed)` pair draws
/// its starting parameters once and every algorithm/rate starts from that
/// same point. Cells run on up to `workers` threads; output is sorted by
/// cell id.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentResult> {
    cfg.validate()?;
    let preset = ExperimentPreset::by_name(cfg.preset_name()?);
    let data = preset.dataset(cfg.data_seed)?;
    data.check_targets(&Activation::tanh())?;
    let truth = if cfg.track_param_error {
        preset.true_params.as_ref()
    } else {
        None
    };

    let mut jobs = Vec::new();
    for init in cfg.init_schemes()? {
        for &seed in &cfg.seeds {
            let start = init_params(&preset.topology, init, seed)?;
            for (algo, lr) in cfg.algo_rates() {
                let cell = CellId {
                    key: CurveKey {
                        preset: preset.name,
                        algo,
                        init,
                        lr,
                    },
                    seed,
                };
                jobs.push((cell, start.clone()));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let mut traces = pool.install(|| {
        jobs.par_iter()
            .map(|(cell, start)| {
                let (_, trace) = run_cell(
                    start,
                    &data,
                    cell.key.algo,
                    cell.key.lr,
                    cfg.epochs,
                    cell.seed,
                    truth,
                )?;
                Ok(CellTrace { cell: *cell, trace })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    traces.sort_by(|a, b| a.cell.cmp_key(&b.cell));
    let aggregates = aggregate(&traces);
    Ok(ExperimentResult { traces, aggregates })
}

/// Groups traces by curve and averages them epoch by epoch.
pub fn aggregate(traces: &[CellTrace]) -> Vec<AggregateCurve> {
    let mut groups: Vec<(CurveKey, Vec<&TrainTrace>)> = Vec::new();
    for t in traces {
        match groups.iter_mut().find(|(k, _)| *k == t.cell.key) {
            Some((_, members)) => members.push(&t.trace),
            None => groups.push((t.cell.key, vec![&t.trace])),
        }
    }
    groups.sort_by(|a, b| a.0.cmp_key(&b.0));
    groups
        .into_iter()
        .map(|(key, members)| {
            let len = members.iter().map(|t| t.losses.len()).max().unwrap_or(0);
            let n = members.len() as f64;
            let mut mean = Vec::with_capacity(len);
            let mut std = Vec::with_capacity(len);
            for e in 0..len {
                let at = |t: &&TrainTrace| t.losses.get(e).copied().unwrap_or(f64::NAN);
                let m = members.iter().map(at).sum::<f64>() / n;
                let var = members.iter().map(|t| (at(t) - m).powi(2)).sum::<f64>() / n;
                mean.push(m);
                std.push(var.sqrt());
            }
            AggregateCurve {
                key,
                mean,
                std,
                n_seeds: members.len(),
            }
        })
        .collect()
}

/// Shortest round-trip form, switching to exponent notation for very large
/// or small magnitudes.
fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Writes the per-seed traces as
/// `preset,algo,init,lr,seed,epoch,loss[,param_abs_error]`.
pub fn write_traces_csv(traces: &[CellTrace], out: impl Write) -> Result<()> {
    let with_params = traces.iter().any(|t| t.trace.param_abs_errors.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["preset", "algo", "init", "lr", "seed", "epoch", "loss"];
    if with_params {
        header.push("param_abs_error");
    }
    w.write_record(&header)?;
    for t in traces {
        let k = &t.cell.key;
        for (e, loss) in t.trace.losses.iter().enumerate() {
            let mut row = vec![
                k.preset.to_string(),
                k.algo.to_string(),
                k.init.to_string(),
                num(k.lr),
                t.cell.seed.to_string(),
                e.to_string(),
                num(*loss),
            ];
            if with_params {
                let p = t
                    .trace
                    .param_abs_errors
                    .as_ref()
                    .and_then(|errs| errs.get(e))
                    .map(|v| num(*v))
                    .unwrap_or_default();
                row.push(p);
            }
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io("<traces>", e))?;
    Ok(())
}

/// Writes aggregates as `preset,algo,init,lr,epoch,mean_loss,std_loss,n_seeds`.
pub fn write_aggregates_csv(aggregates: &[AggregateCurve], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "preset",
        "algo",
        "init",
        "lr",
        "epoch",
        "mean_loss",
        "std_loss",
        "n_seeds",
    ])?;
    for a in aggregates {
        for (e, (m, s)) in a.mean.iter().zip(&a.std).enumerate() {
            w.write_record([
                a.key.preset.to_string(),
                a.key.algo.to_string(),
                a.key.init.to_string(),
                num(a.key.lr),
                e.to_string(),
                num(*m),
                num(*s),
                a.n_seeds.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<aggregates>", e))?;
    Ok(())
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

/// Writes `traces.csv` and `aggregates.csv` into `out_dir`.
pub fn emit_csv(
    traces: &[CellTrace],
    aggregates: &[AggregateCurve],
    out_dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = out_dir.as_ref();
    if traces.is_empty() || aggregates.is_empty() {
        return Err(Error::InvalidConfig("nothing to write".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(TRACES_FILE);
    write_traces_csv(traces, std::io::BufWriter::new(create(&path)?))?;
    let path = dir.join(AGGREGATES_FILE);
    write_aggregates_csv(aggregates, std::io::BufWriter::new(create(&path)?))?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct AggregateRow {
    preset: String,
    algo: String,
    init: String,
    lr: f64,
    epoch: usize,
    mean_loss: f64,
    std_loss: f64,
    n_seeds: usize,
}

/// Reads an aggregates CSV back into curves, in file order.
pub fn read_aggregates_csv(input: impl std::io::Read) -> Result<Vec<AggregateCurve>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut curves: Vec<AggregateCurve> = Vec::new();
    for (i, row) in rdr.deserialize::<AggregateRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            row: i + 2,
            message: e.to_string(),
        })?;
        let key = CurveKey {
            preset: row.preset.parse()?,
            algo: row.algo.parse()?,
            init: row.init.parse()?,
            lr: row.lr,
        };
        let curve = match curves.iter_mut().find(|c| c.key == key) {
            Some(c) => c,
            None => {
                curves.push(AggregateCurve {
                    key,
                    mean: Vec::new(),
                    std: Vec::new(),
                    n_seeds: row.n_seeds,
                });
                curves.last_mut().expect("just pushed")
            }
        };
        if row.epoch != curve.mean.len() {
            return Err(Error::Parse {
                row: i + 2,
                message: format!(
                    "epoch {} out of order (expected {})",
                    row.epoch,
                    curve.mean.len()
                ),
            });
        }
        curve.mean.push(row.mean_loss);
        curve.std.push(row.std_loss);
    }
    if curves.is_empty() {
        return Err(Error::InvalidConfig("aggregates file has no rows".into()));
    }
    Ok(curves)
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 260.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const LOSS_FLOOR: f64 = 1e-12;

struct Axes {
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Axes {
    fn x(&self, epoch: usize) -> f64 {
        let t = ((epoch + 1) as f64).log10() / self.x_max.max(f64::MIN_POSITIVE);
        LEFT + t * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, loss: f64) -> f64 {
        let v = loss.max(LOSS_FLOOR).log10();
        let t = (v - self.y_min) / (self.y_max - self.y_min);
        HEIGHT - BOTTOM - t * (HEIGHT - TOP - BOTTOM)
    }
}

fn fmt_pt(x: f64, y: f64) -> String {
    format!("{x:.2},{y:.2}")
}

/// Renders loss curves: log-scaled epoch axis (epoch + 1), log-scaled loss,
/// one polyline per curve with a translucent +-1 std band and a legend.
pub fn render_svg(aggregates: &[AggregateCurve]) -> String {
    let epochs = aggregates
        .iter()
        .map(|a| a.mean.len())
        .max()
        .unwrap_or(1)
        .max(2);
    let logs: Vec<f64> = aggregates
        .iter()
        .flat_map(|a| a.mean.iter().zip(&a.std))
        .filter(|(m, _)| m.is_finite())
        .flat_map(|(m, s)| {
            let lo = if s.is_finite() {
                (m - s).max(*m * 0.1)
            } else {
                *m
            };
            let hi = if s.is_finite() { m + s } else { *m };
            [lo.max(LOSS_FLOOR).log10(), hi.max(LOSS_FLOOR).log10()]
        })
        .collect();
    let mut y_min = logs.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let mut y_max = logs
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .ceil();
    if !y_min.is_finite() || !y_max.is_finite() {
        (y_min, y_max) = (-1.0, 0.0);
    }
    if y_max <= y_min {
        y_max = y_min + 1.0;
    }
    let axes = Axes {
        x_max: (epochs as f64).log10(),
        y_min,
        y_max,
    };

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // axes and ticks
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    s.push_str(&format!(
        "<g class=\"axes\" stroke=\"black\" fill=\"none\"><line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\"/>\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\"/></g>\n"
    ));
    let mut decade = 1usize;
    while decade <= epochs {
        let x = axes.x(decade - 1);
        s.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{y0}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\
             <text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{decade}</text>\n",
            y0 + 5.0,
            y0 + 20.0
        ));
        decade *= 10;
    }
    for p in (y_min as i32)..=(y_max as i32) {
        let y = axes.y(10f64.powi(p));
        s.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{x0}\" y2=\"{y:.2}\" stroke=\"black\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">1e{p}</text>\n",
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">epoch + 1 (log scale)</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    ));
    s.push_str(&format!(
        "<text x=\"20\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">training MSE (log scale)</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));

    for (i, a) in aggregates.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let finite: Vec<usize> = (0..a.mean.len())
            .filter(|&e| a.mean[e].is_finite())
            .collect();
        if !finite.is_empty() {
            let upper = finite
                .iter()
                .map(|&e| fmt_pt(axes.x(e), axes.y(a.mean[e] + a.std[e])));
            let lower = finite.iter().rev().map(|&e| {
                fmt_pt(
                    axes.x(e),
                    axes.y((a.mean[e] - a.std[e]).max(a.mean[e] * 0.1)),
                )
            });
            let band: Vec<String> = upper.chain(lower).collect();
            s.push_str(&format!(
                "<polygon class=\"band\" fill=\"{color}\" fill-opacity=\"0.2\" stroke=\"none\" points=\"{}\"/>\n",
                band.join(" ")
            ));
            let line: Vec<String> = finite
                .iter()
                .map(|&e| fmt_pt(axes.x(e), axes.y(a.mean[e])))
                .collect();
            s.push_str(&format!(
                "<polyline class=\"curve\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                line.join(" ")
            ));
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 20.0;
        s.push_str(&format!(
            "<g class=\"legend\"><line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"3\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\">{}</text></g>\n",
            lx + 25.0,
            lx + 32.0,
            ly + 4.0,
            a.key.label()
        ));
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_svg(aggregates: &[AggregateCurve], out_path: impl AsRef<Path>) -> Result<()> {
    if aggregates.is_empty() {
        return Err(Error::InvalidConfig("no curves to plot".into()));
    }
    let path = out_path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, render_svg(aggregates)).map_err(|e| Error::io(path, e))
}
