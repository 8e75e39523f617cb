use sgt_core::graph::SpanningTree;
use sgt_core::*;

/// Carries a presentation of `graph` across the relabeling
/// `graph.permuted(vertex_perm, edge_perm, flips)`, so that both name the
/// same oriented generator edges.
pub fn transport(
    presentation: &Presentation,
    vertex_perm: &[usize],
    edge_perm: &[usize],
    flips: &[bool],
) -> (MultiGraph, Presentation) {
    let graph = presentation.graph();
    let image = graph.permuted(vertex_perm, edge_perm, flips);
    let tree = presentation.tree();
    let mut parent = vec![None; graph.vertex_count()];
    for (v, d) in tree.parent.iter().enumerate() {
        parent[vertex_perm[v]] = d.map(|d| MultiGraph::permuted_dart(d, edge_perm, flips));
    }
    let tree = SpanningTree {
        origin: VertexId(vertex_perm[tree.origin.0]),
        parent,
    };
    let tree_edges = tree.edge_set();
    let base: Vec<usize> = (0..image.edge_count())
        .filter(|e| !tree_edges.contains(e))
        .collect();
    let mut order = Vec::new();
    let mut mask = 0u64;
    for j in 0..presentation.genus() {
        let d = MultiGraph::permuted_dart(presentation.generator_dart(j), edge_perm, flips);
        order.push(
            base.iter()
                .position(|&e| e == d.edge())
                .expect("non-tree edge"),
        );
        if d.0 % 2 == 1 {
            mask |= 1 << j;
        }
    }
    let arrangement = Arrangement { order, flips: mask };
    let transported = Presentation::new(&image, tree, arrangement).expect("valid transport");
    (image, transported)
}

/// A fixed, non-trivial relabeling for a graph with `n` vertices and `e`
/// edges.
pub fn shuffle(n: usize, e: usize) -> (Vec<usize>, Vec<usize>, Vec<bool>) {
    let vp: Vec<usize> = (0..n).map(|v| (v + 1) % n).collect();
    let ep: Vec<usize> = (0..e).rev().collect();
    let flips: Vec<bool> = (0..e).map(|k| k % 2 == 0).collect();
    (vp, ep, flips)
}
