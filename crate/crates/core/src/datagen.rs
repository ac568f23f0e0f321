//! Parameter initialisation, synthetic datasets from known networks, and the
//! airline passenger series.
//!
//! All randomness comes from `ChaCha8Rng` seeded with `seed_from_u64`, which
//! is portable across platforms. Parameter draws, data draws and shuffling
//! each use their own ChaCha stream so the same seed never correlates them.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Matrix;
use crate::network::{predict, Activation, Dataset, Layer, MlpParams};
use crate::{Error, Result};

/// The 1949-1960 monthly airline passenger counts, `month,passengers`.
pub const AIRLINE_CSV: &str = include_str!("../data/airline_passengers.csv");

pub(crate) const INIT_STREAM: u64 = 0;
pub(crate) const DATA_STREAM: u64 = 1;

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InitScheme {
    /// Weights and biases uniform on `+-1/sqrt(fan_in)`.
    DefaultFanIn,
    /// Weight magnitudes uniform on `[0.25, 0.75]` with a random sign;
    /// biases uniform on `[-0.1, 0.1]`.
    Custom,
}

impl InitScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitScheme::DefaultFanIn => "default",
            InitScheme::Custom => "custom",
        }
    }
}

impl fmt::Display for InitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(InitScheme::DefaultFanIn),
            "custom" => Ok(InitScheme::Custom),
            other => Err(Error::InvalidConfig(format!(
                "unknown init scheme '{other}' (expected default or custom)"
            ))),
        }
    }
}

/// Draws parameters for `topology` (`[inputs, hidden..., 1]`). Values are
/// drawn layer by layer, weights in fan-in-major order before biases.
pub fn init_params(topology: &[usize], scheme: InitScheme, seed: u64) -> Result<MlpParams> {
    let shape = MlpParams::zeros(topology)?;
    let mut rng = rng_for(seed, INIT_STREAM);
    let layers = shape
        .layers()
        .iter()
        .map(|l| {
            let (fan_in, fan_out) = (l.fan_in(), l.fan_out());
            let mut layer = Layer::zeros(fan_in, fan_out);
            match scheme {
                InitScheme::DefaultFanIn => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    for w in layer.weights.as_mut_slice() {
                        *w = rng.gen_range(-bound..=bound);
                    }
                    for b in &mut layer.biases {
                        *b = rng.gen_range(-bound..=bound);
                    }
                }
                InitScheme::Custom => {
                    for w in layer.weights.as_mut_slice() {
                        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                        *w = sign * rng.gen_range(0.25..=0.75);
                    }
                    for b in &mut layer.biases {
                        *b = rng.gen_range(-0.1..=0.1);
                    }
                }
            }
            layer
        })
        .collect();
    MlpParams::new(layers)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PresetName {
    Set1TwoLayer,
    Set2OneLayer,
    Set3OneLayer,
    Airline,
}

impl PresetName {
    pub const ALL: [PresetName; 4] = [
        PresetName::Set1TwoLayer,
        PresetName::Set2OneLayer,
        PresetName::Set3OneLayer,
        PresetName::Airline,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PresetName::Set1TwoLayer => "set1-two-layer",
            PresetName::Set2OneLayer => "set2-one-layer",
            PresetName::Set3OneLayer => "set3-one-layer",
            PresetName::Airline => "airline",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset '{s}'")))
    }
}

/// One of the four benchmark problems.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: PresetName,
    pub topology: Vec<usize>,
    pub true_params: Option<MlpParams>,
    pub n_samples: usize,
}

/// Builds a network from per-layer `(weights, biases)` with weights indexed
/// `[source][destination]`.
fn params_from(layers: &[(&[&[f64]], &[f64])]) -> MlpParams {
    MlpParams::new(
        layers
            .iter()
            .map(|(w, b)| Layer {
                weights: Matrix::from_rows(w).expect("rectangular preset weights"),
                biases: b.to_vec(),
            })
            .collect(),
    )
    .expect("preset parameters are consistent")
}

impl ExperimentPreset {
    /// 2-2-2-1 network.
    pub fn set1() -> Self {
        let truth = params_from(&[
            (&[&[-0.5, -1.0], &[0.0, 1.0]], &[1.0, -1.0]),
            (&[&[2.0, -0.5], &[0.5, 2.0]], &[0.0, 2.0]),
            (&[&[1.0], &[-1.0]], &[-1.0]),
        ]);
        Self {
            name: PresetName::Set1TwoLayer,
            topology: vec![2, 2, 2, 1],
            true_params: Some(truth),
            n_samples: 100,
        }
    }

    /// 3-2-1 network, first parameter set.
    pub fn set2() -> Self {
        let truth = params_from(&[
            (&[&[1.0, 0.0], &[2.0, 3.0], &[-1.0, -2.0]], &[1.0, -2.0]),
            (&[&[3.0], &[-2.0]], &[0.0]),
        ]);
        Self {
            name: PresetName::Set2OneLayer,
            topology: vec![3, 2, 1],
            true_params: Some(truth),
            n_samples: 100,
        }
    }

    /// 3-2-1 network, second parameter set.
    pub fn set3() -> Self {
        let truth = params_from(&[
            (&[&[-2.0, 4.0], &[0.0, -1.0], &[3.0, 2.0]], &[0.0, 2.0]),
            (&[&[-3.0], &[-1.0]], &[-1.0]),
        ]);
        Self {
            name: PresetName::Set3OneLayer,
            topology: vec![3, 2, 1],
            true_params: Some(truth),
            n_samples: 100,
        }
    }

    /// 3-2-1 network on windows of the normalised airline series.
    pub fn airline() -> Self {
        Self {
            name: PresetName::Airline,
            topology: vec![3, 2, 1],
            true_params: None,
            n_samples: 141,
        }
    }

    pub fn by_name(name: PresetName) -> Self {
        match name {
            PresetName::Set1TwoLayer => Self::set1(),
            PresetName::Set2OneLayer => Self::set2(),
            PresetName::Set3OneLayer => Self::set3(),
            PresetName::Airline => Self::airline(),
        }
    }

    /// Training data for this preset: synthetic presets draw from `seed`,
    /// the airline preset ignores it.
    pub fn dataset(&self, seed: u64) -> Result<Dataset> {
        match self.name {
            PresetName::Airline => airline_dataset(),
            _ => gen_synthetic(self, seed),
        }
    }
}

/// Inputs uniform on `[-1, 1]^d`, targets from the preset's true network.
pub fn gen_synthetic(preset: &ExperimentPreset, seed: u64) -> Result<Dataset> {
    let truth = preset.true_params.as_ref().ok_or_else(|| {
        Error::InvalidConfig(format!(
            "preset {} has no ground-truth parameters",
            preset.name
        ))
    })?;
    let d = truth.num_inputs();
    let mut rng = rng_for(seed, DATA_STREAM);
    let inputs = Matrix::from_fn(preset.n_samples, d, |_, _| rng.gen_range(-1.0..=1.0));
    let targets = predict(truth, &Activation::tanh(), &inputs)?;
    Dataset::new(inputs, targets)
}

/// Parses a `month,passengers` CSV with a header line.
pub fn parse_series_csv(reader: impl Read) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut series = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // line 1 is the header
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let field = record.get(1).ok_or_else(|| Error::Parse {
            row,
            message: "missing count column".into(),
        })?;
        let value: f64 = field.parse().map_err(|_| Error::Parse {
            row,
            message: format!("invalid count '{field}'"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                row,
                message: format!("non-finite count '{field}'"),
            });
        }
        series.push(value);
    }
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(series)
}

pub fn load_series_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_series_csv(file)
}

/// Affine map between a series' `[min, max]` and `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTransform {
    pub min: f64,
    pub max: f64,
    pub lo: f64,
    pub hi: f64,
}

impl SeriesTransform {
    pub fn apply(&self, v: f64) -> f64 {
        self.lo + (v - self.min) * (self.hi - self.lo) / (self.max - self.min)
    }

    pub fn invert(&self, v: f64) -> f64 {
        self.min + (v - self.lo) * (self.max - self.min) / (self.hi - self.lo)
    }
}

/// Maps the series onto `[-0.8, 0.8]`.
pub fn normalize_series(series: &[f64]) -> Result<(Vec<f64>, SeriesTransform)> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("series"));
    }
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Err(Error::DegenerateSeries(min));
    }
    let t = SeriesTransform {
        min,
        max,
        lo: -0.8,
        hi: 0.8,
    };
    Ok((series.iter().map(|&v| t.apply(v)).collect(), t))
}

pub fn denormalize_series(normalized: &[f64], t: &SeriesTransform) -> Vec<f64> {
    normalized.iter().map(|&v| t.invert(v)).collect()
}

/// Sliding windows: `input_len` consecutive values predict the next one.
pub fn make_windows(series: &[f64], input_len: usize) -> Result<Dataset> {
    if input_len == 0 || series.len() <= input_len {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            input_len,
        });
    }
    let n = series.len() - input_len;
    let inputs = Matrix::from_fn(n, input_len, |t, j| series[t + j]);
    let targets = series[input_len..].to_vec();
    Dataset::new(inputs, targets)
}

/// The normalised airline series cut into 3-in / 1-out windows.
pub fn airline_dataset() -> Result<Dataset> {
    let series = parse_series_csv(AIRLINE_CSV.as_bytes())?;
    let (normalized, _) = normalize_series(&series)?;
    make_windows(&normalized, 3)
}
