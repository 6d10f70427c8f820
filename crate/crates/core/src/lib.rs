//! Random vector functional link (RVFL) networks for regression.
//!
//! An RVFL network is a single-hidden-layer network whose hidden weights and
//! biases are drawn at random and never trained. Only the output layer is
//! learned, in closed form, as the minimum-norm least-squares solution over the
//! design matrix `[1 X H]`: an optional ones column (output bias), optional raw
//! inputs (direct links) and the sigmoid hidden-layer outputs.
//!
//! The crate is organised as:
//!
//! - [`numkernel`]: dense matrices, the Moore–Penrose pseudoinverse and the
//!   minimum-norm least-squares solver.
//! - [`model`]: topologies, the three hidden-parameter generators (`Gs`, `Gu`,
//!   `Gα`), training, prediction and the linear/nonlinear/bias decomposition.
//! - [`synthdata`]: synthetic target functions, datasets and deterministic
//!   random streams.
//! - [`stats`]: RMSE, aggregation and the Wilcoxon signed-rank test.
//! - [`harness`]: the ablation study runner (grid search, trials, tables).
//!
//! # Quick start
//!
//! ```
//! use rvfl_core::{derive_stream, sample_dataset, train, predict, rmse};
//! use rvfl_core::{Configuration, InitStrategy, TargetFunction, Topology};
//!
//! # fn main() -> rvfl_core::Result<()> {
//! let data = sample_dataset(TargetFunction::Nl, 2, 500, 0.0, &derive_stream(7, &[("train", 0)]))?;
//! let topology = Topology::from_configuration(2, 20, Configuration::WithLinksWithBias)?;
//! let mut rng = derive_stream(7, &[("init", 0)]).rng();
//! let model = train(&topology, &InitStrategy::Gu { u: 5.0 }, &data, &mut rng)?;
//! let fitted = predict(&model, &data.x)?;
//! assert!(rmse(&fitted, &data.y)? < 1e-2);
//! # Ok(())
//! # }
//! ```

pub mod error;
pub mod harness;
pub mod model;
pub mod numkernel;
pub mod stats;
pub mod synthdata;

pub use error::{Error, Result};
pub use harness::{
    emit_table, grid_search, run_experiment, run_trial, CellResult, ExperimentConfig,
    ExperimentResults, GridChoice, GridSpec, RunOptions, TableFormat, TrialResult, TrialStreams,
};
pub use model::{
    assemble_design, decompose, hidden_output, init_hidden, init_hidden_galpha, init_hidden_gs,
    init_hidden_gu, predict, train, Configuration, Decomposition, HiddenLayer, InitStrategy,
    StrategyKind, Topology, TrainedModel,
};
pub use numkernel::{pseudoinverse, solve_least_squares, Matrix, PrefixLeastSquares};
pub use stats::{
    aggregate, rmse, significance_flags, wilcoxon_signed_rank, AggregateResult, WilcoxonMethod,
    WilcoxonResult,
};
pub use synthdata::{
    derive_stream, eval_target, make_test_set, sample_dataset, Dataset, RngStream, StreamRng,
    TargetFunction,
};
