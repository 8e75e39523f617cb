//! Shared workloads for the benchmarks in `benches/`.

use sgt_core::{corpus, MultiGraph};

/// Graphs benchmarked by every group: the named corpus plus a larger rose.
pub fn workloads() -> Vec<(&'static str, MultiGraph)> {
    let mut graphs = corpus::named();
    graphs.push(("rose5", corpus::rose(5)));
    graphs
}
