//! Shared fixtures for the benchmarks.

use rvfl_core::{
    assemble_design, derive_stream, hidden_output, init_hidden, sample_dataset, Configuration, Dataset,
    HiddenLayer, InitStrategy, Matrix, TargetFunction, Topology,
};

pub const SEED: u64 = 7;

pub fn dataset(n: usize, rows: usize) -> Dataset {
    sample_dataset(TargetFunction::Nl, n, rows, 0.05, &derive_stream(SEED, &[("bench-data", rows as u64)]))
        .expect("valid sizes")
}

pub fn hidden_layer(data: &Dataset, m: usize, strategy: &InitStrategy) -> HiddenLayer {
    let topo = Topology::from_configuration(data.inputs(), m, Configuration::WithLinksWithBias).expect("valid topology");
    let mut rng = derive_stream(SEED, &[("bench-init", m as u64)]).rng();
    init_hidden(&topo, strategy, &data.x, &mut rng).expect("valid strategy")
}

/// Full `[1 X H]` design for `m` Gu nodes.
pub fn design(data: &Dataset, m: usize) -> Matrix {
    let layer = hidden_layer(data, m, &InitStrategy::Gu { u: 5.0 });
    let topo = Topology::from_configuration(data.inputs(), m, Configuration::WithLinksWithBias).expect("valid topology");
    let h = hidden_output(&layer, &data.x).expect("conformant");
    assemble_design(&topo, &data.x, &h).expect("conformant")
}
