//! Synthetic regression problems on the unit hypercube.
//!
//! Four target functions are provided:
//!
//! | name    | definition                                         |
//! |---------|----------------------------------------------------|
//! | `NL`    | `exp(−Σ (x_j − 0.5)²)`                             |
//! | `NLF`   | `Σ sin(20·e^{x_j}) · x_j²`                         |
//! | `NLF+L` | `Σ sin(20·e^{x_j}) · x_j² + 3 Σ x_j`               |
//! | `L`     | `3 Σ x_j`                                          |
//!
//! All randomness flows through [`RngStream`]s, which are derived from a master
//! seed and a labelled path. Streams are plain values, so a worker thread can
//! rebuild exactly the generator it needs without shared state.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numkernel::Matrix;

/// Generator handed out by [`RngStream::rng`].
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TargetFunction {
    #[serde(rename = "NL")]
    Nl,
    #[serde(rename = "NLF")]
    Nlf,
    #[serde(rename = "NLF+L", alias = "NLF_L")]
    NlfL,
    #[serde(rename = "L")]
    L,
}

impl TargetFunction {
    pub const ALL: [TargetFunction; 4] =
        [TargetFunction::Nl, TargetFunction::Nlf, TargetFunction::NlfL, TargetFunction::L];

    /// `(α, δ)` weights of the fluctuating and linear terms; `None` for `NL`.
    pub fn flags(self) -> Option<(f64, f64)> {
        match self {
            TargetFunction::Nl => None,
            TargetFunction::Nlf => Some((1.0, 0.0)),
            TargetFunction::NlfL => Some((1.0, 1.0)),
            TargetFunction::L => Some((0.0, 1.0)),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TargetFunction::Nl => "NL",
            TargetFunction::Nlf => "NLF",
            TargetFunction::NlfL => "NLF+L",
            TargetFunction::L => "L",
        }
    }
}

impl fmt::Display for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NL" => Ok(TargetFunction::Nl),
            "NLF" => Ok(TargetFunction::Nlf),
            "NLF+L" | "NLF_L" => Ok(TargetFunction::NlfL),
            "L" => Ok(TargetFunction::L),
            other => Err(Error::param(format!("unknown target function {other:?}"))),
        }
    }
}

/// Evaluates the target at `x`. Points outside the unit hypercube are
/// evaluated as-is.
pub fn eval_target(tf: TargetFunction, x: &[f64]) -> f64 {
    match tf.flags() {
        None => (-x.iter().map(|&v| (v - 0.5) * (v - 0.5)).sum::<f64>()).exp(),
        Some((alpha, delta)) => {
            let mut out = 0.0;
            if alpha != 0.0 {
                out += alpha * x.iter().map(|&v| (20.0 * v.exp()).sin() * v * v).sum::<f64>();
            }
            if delta != 0.0 {
                out += delta * 3.0 * x.iter().sum::<f64>();
            }
            out
        }
    }
}

/// Master seed plus a labelled path. Equal values yield identical generators;
/// distinct paths yield independent ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub path: Vec<(String, u64)>,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        RngStream { master_seed, path: Vec::new() }
    }

    /// Extends the path by one `(label, index)` component.
    pub fn child(&self, label: &str, index: u64) -> RngStream {
        let mut path = self.path.clone();
        path.push((label.to_owned(), index));
        RngStream { master_seed: self.master_seed, path }
    }

    /// 256-bit seed: SHA-256 over the master seed and the length-prefixed path.
    pub fn seed(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"rvfl-stream-v1");
        h.update(self.master_seed.to_le_bytes());
        for (label, index) in &self.path {
            h.update((label.len() as u64).to_le_bytes());
            h.update(label.as_bytes());
            h.update(index.to_le_bytes());
        }
        h.finalize().into()
    }

    pub fn rng(&self) -> StreamRng {
        ChaCha8Rng::from_seed(self.seed())
    }
}

impl fmt::Display for RngStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.master_seed)?;
        for (label, index) in &self.path {
            write!(f, "/{label}:{index}")?;
        }
        Ok(())
    }
}

pub fn derive_stream(master_seed: u64, labels: &[(&str, u64)]) -> RngStream {
    RngStream {
        master_seed,
        path: labels.iter().map(|(l, i)| ((*l).to_owned(), *i)).collect(),
    }
}

/// Inputs in `[0, 1]^n` with (optionally noisy) targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    /// Standard deviation of the additive noise on `y`. Zero for evaluation
    /// sets and for datasets loaded from CSV, where it is unknown.
    pub noise_sigma: f64,
    pub provenance: Option<RngStream>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>, noise_sigma: f64) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::input(format!(
                "{} input rows but {} targets",
                x.rows(),
                y.len()
            )));
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::param(format!("noise sigma must be >= 0, got {noise_sigma}")));
        }
        if let Some(v) = x.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::input(format!("input {v} lies outside [0, 1]")));
        }
        Ok(Dataset { x, y, noise_sigma, provenance: None })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn inputs(&self) -> usize {
        self.x.cols()
    }

    /// Writes `x1,…,xn,y` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.inputs()).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (row, y) in self.x.row_iter().zip(&self.y) {
            w.write_record(row.iter().chain(std::iter::once(y)).map(|v| format!("{v:.16e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let cols = header.len();
        let n = cols.checked_sub(1).filter(|&n| n > 0).ok_or_else(|| {
            Error::input("CSV needs at least one input column and a y column")
        })?;
        for (j, name) in header.iter().enumerate() {
            let want = if j < n { format!("x{}", j + 1) } else { "y".to_owned() };
            if name.trim() != want {
                return Err(Error::input(format!("CSV column {j} is {name:?}, expected {want:?}")));
            }
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| {
                    Error::input(format!("CSV record {}: {s:?}: {e}", line + 1))
                })
            };
            for field in record.iter().take(n) {
                xs.push(parse(field)?);
            }
            ys.push(parse(&record[n])?);
        }
        let x = Matrix::new(ys.len(), n, xs)?;
        Dataset::new(x, ys, 0.0)
    }
}

/// Draws `rows` i.i.d. uniform points in `[0, 1]^n` and evaluates the target
/// with additive `N(0, σ²)` noise. Inputs are drawn before any noise, so the
/// same stream gives the same inputs for every noise level.
pub fn sample_dataset(
    tf: TargetFunction,
    n: usize,
    rows: usize,
    noise_sigma: f64,
    stream: &RngStream,
) -> Result<Dataset> {
    if n == 0 || rows == 0 {
        return Err(Error::param(format!("dataset size must be positive, got {rows}x{n}")));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::param(format!("noise sigma must be >= 0, got {noise_sigma}")));
    }
    let mut rng = stream.rng();
    let x = Matrix::from_fn(rows, n, |_, _| rng.random::<f64>());
    let mut y: Vec<f64> = x.row_iter().map(|row| eval_target(tf, row)).collect();
    if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma).expect("sigma checked above");
        for v in &mut y {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(Dataset { x, y, noise_sigma, provenance: Some(stream.clone()) })
}

/// Noise-free evaluation set.
pub fn make_test_set(
    tf: TargetFunction,
    n: usize,
    rows: usize,
    stream: &RngStream,
) -> Result<Dataset> {
    sample_dataset(tf, n, rows, 0.0, stream)
}
