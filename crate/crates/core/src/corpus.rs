//! Named test graphs and the exhaustive small-multigraph corpus.

use crate::compare::iso_oracle;
use crate::graph::{validate, MultiGraph};

/// One vertex with `g` loops.
pub fn rose(g: usize) -> MultiGraph {
    MultiGraph::from_edges(1, &vec![(0, 0); g]).expect("valid rose")
}

/// Two vertices joined by three parallel edges.
pub fn theta() -> MultiGraph {
    MultiGraph::from_edges(2, &[(0, 1), (0, 1), (0, 1)]).expect("valid theta")
}

/// Two loops joined by a bridge.
pub fn dumbbell() -> MultiGraph {
    MultiGraph::from_edges(2, &[(0, 0), (0, 1), (1, 1)]).expect("valid dumbbell")
}

/// Complete graph on four vertices (3-regular, genus 3).
pub fn k4() -> MultiGraph {
    MultiGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).expect("valid K4")
}

/// Cycle on `n` vertices (fails validation: valency 2, genus 1).
pub fn cycle(n: usize) -> MultiGraph {
    let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    MultiGraph::from_edges(n, &edges).expect("valid cycle")
}

/// The named validation corpus: rose F2, rose F3, theta, dumbbell, K4.
pub fn named() -> Vec<(&'static str, MultiGraph)> {
    vec![
        ("rose2", rose(2)),
        ("rose3", rose(3)),
        ("theta", theta()),
        ("dumbbell", dumbbell()),
        ("k4", k4()),
    ]
}

/// One representative per isomorphism class of validated multigraphs with
/// at most `max_vertices` vertices, at most `max_edges` edges and genus in
/// `genus_range`.
pub fn small_multigraphs(
    max_vertices: usize,
    max_edges: usize,
    genus_range: std::ops::RangeInclusive<usize>,
) -> Vec<MultiGraph> {
    let mut reps: Vec<MultiGraph> = Vec::new();
    for n in 1..=max_vertices {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        for g in genus_range.clone() {
            let e = g + n - 1;
            if e > max_edges || 2 * e < 3 * n {
                continue;
            }
            for multiset in multisets(pairs.len(), e) {
                let edges: Vec<(usize, usize)> = multiset.iter().map(|&i| pairs[i]).collect();
                let graph = MultiGraph::from_edges(n, &edges).expect("indices in range");
                if !validate(&graph).passed() {
                    continue;
                }
                if reps
                    .iter()
                    .any(|r| iso_oracle(r, &graph).expect("corpus within oracle cap"))
                {
                    continue;
                }
                reps.push(graph);
            }
        }
    }
    reps
}

/// Non-decreasing index sequences of length `k` over `0..n`.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i, cur, out);
            cur.pop();
        }
    }
    rec(n, k, 0, &mut cur, &mut out);
    out
}
