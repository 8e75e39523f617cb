//! Exploration of the universal covering tree: sphere growth, the
//! non-backtracking (Hashimoto) operator and its Perron data, Poincare sums
//! over the deck group, and the Patterson-Sullivan measure on tree
//! cylinders.
//!
//! A vertex of the covering tree is a non-backtracking dart path from the
//! lift of the origin; a tree cylinder `U_P` is the set of boundary rays
//! that start with the path `P`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{reduce_darts, Dart, Letter, MultiGraph, Presentation, ReducedWord, VertexId};
use crate::measure::{close_under_prefixes, path_key, CylinderMeasure, Side};

/// A non-backtracking dart path starting at a fixed vertex.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TreePath {
    pub start: VertexId,
    pub darts: Vec<Dart>,
}

impl TreePath {
    pub fn root(start: VertexId) -> Self {
        Self {
            start,
            darts: Vec::new(),
        }
    }

    pub fn new(graph: &MultiGraph, start: VertexId, darts: Vec<Dart>) -> Result<Self> {
        let mut at = start;
        let mut prev: Option<Dart> = None;
        for &d in &darts {
            if d.0 >= graph.dart_count() || graph.tail(d) != at {
                return Err(Error::InvalidArgument(format!(
                    "dart {d} does not continue the path at vertex {}",
                    graph.name(at)
                )));
            }
            if prev == Some(d.reverse()) {
                return Err(Error::InvalidArgument(format!(
                    "path backtracks at dart {d}"
                )));
            }
            prev = Some(d);
            at = graph.head(d);
        }
        Ok(Self { start, darts })
    }

    pub fn len(&self) -> usize {
        self.darts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.darts.is_empty()
    }

    pub fn end(&self, graph: &MultiGraph) -> VertexId {
        self.darts.last().map_or(self.start, |&d| graph.head(d))
    }

    pub fn prefix(&self, n: usize) -> TreePath {
        TreePath {
            start: self.start,
            darts: self.darts[..n.min(self.darts.len())].to_vec(),
        }
    }

    pub fn extended(&self, d: Dart) -> TreePath {
        let mut darts = self.darts.clone();
        darts.push(d);
        TreePath {
            start: self.start,
            darts,
        }
    }

    /// Length of the longest common prefix (the Gromov product at the start).
    pub fn common_prefix(&self, other: &TreePath) -> usize {
        self.darts
            .iter()
            .zip(&other.darts)
            .take_while(|(a, b)| a == b)
            .count()
    }

    /// Tree distance between the two endpoints, both read as vertices of
    /// the covering tree hanging from the same start.
    pub fn distance(&self, other: &TreePath) -> usize {
        self.len() + other.len() - 2 * self.common_prefix(other)
    }

    pub fn key(&self) -> Vec<i64> {
        path_key(&self.darts)
    }

    /// Darts that may extend the path without backtracking.
    pub fn continuations(&self, graph: &MultiGraph) -> Vec<Dart> {
        match self.darts.last() {
            Some(&d) => graph.successors(d).collect(),
            None => graph.darts_at(self.start).to_vec(),
        }
    }
}

/// All non-backtracking paths of length exactly `n` from `origin`, in dart
/// order.
pub fn paths_of_length(graph: &MultiGraph, origin: VertexId, n: usize) -> Vec<TreePath> {
    let mut level = vec![TreePath::root(origin)];
    for _ in 0..n {
        level = level
            .iter()
            .flat_map(|p| {
                p.continuations(graph)
                    .into_iter()
                    .map(move |d| p.extended(d))
            })
            .collect();
    }
    level
}

/// Paths of length `<= n`, shortest first.
pub fn ball(graph: &MultiGraph, origin: VertexId, n: usize) -> Vec<TreePath> {
    let mut out = Vec::new();
    let mut level = vec![TreePath::root(origin)];
    for k in 0..=n {
        out.extend(level.iter().cloned());
        if k < n {
            level = level
                .iter()
                .flat_map(|p| {
                    p.continuations(graph)
                        .into_iter()
                        .map(move |d| p.extended(d))
                })
                .collect();
        }
    }
    out
}

/// Non-backtracking dart transition operator: `B(d, d') = 1` iff
/// `head(d) = tail(d')` and `d' != reverse(d)`.
#[derive(Debug, Clone)]
pub struct HashimotoMatrix {
    successors: Vec<Vec<Dart>>,
}

impl HashimotoMatrix {
    pub fn new(graph: &MultiGraph) -> Self {
        Self {
            successors: graph
                .darts()
                .map(|d| graph.successors(d).collect())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.successors.len()
    }

    pub fn entry(&self, from: Dart, to: Dart) -> u8 {
        u8::from(self.successors[from.0].contains(&to))
    }

    pub fn row_sum(&self, d: Dart) -> usize {
        self.successors[d.0].len()
    }

    pub fn successors(&self, d: Dart) -> &[Dart] {
        &self.successors[d.0]
    }

    /// `y = B x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, succ) in y.iter_mut().zip(&self.successors) {
            *yi = succ.iter().map(|e| x[e.0]).sum();
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.entry(Dart(i), Dart(j))).collect())
            .collect()
    }
}

/// Perron value and right Perron vector (l1-normalized) of the Hashimoto
/// matrix.
#[derive(Debug, Clone)]
pub struct PerronData {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

pub const PERRON_REL_TOL: f64 = 1e-12;
pub const PERRON_MAX_ITER: usize = 100_000;

/// Power iteration on `B + I` from the all-ones vector, stopped when the
/// Collatz-Wielandt bounds on the Perron value agree to `PERRON_REL_TOL`.
/// The shift makes the Perron value strictly dominant even when `B` is
/// periodic (bipartite graphs).
pub fn perron(matrix: &HashimotoMatrix) -> Result<PerronData> {
    let n = matrix.dim();
    if n == 0 {
        return Err(Error::NonConvergence { iterations: 0 });
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut bx = vec![0.0; n];
    for it in 1..=PERRON_MAX_ITER {
        matrix.apply(&x, &mut bx);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (b, xi) in bx.iter().zip(&x) {
            let r = b / xi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if hi - lo <= PERRON_REL_TOL * hi {
            return Ok(PerronData {
                value: 0.5 * (lo + hi),
                vector: x,
                iterations: it,
            });
        }
        let mut norm = 0.0;
        for (xi, b) in x.iter_mut().zip(&bx) {
            *xi += b;
            norm += *xi;
        }
        if !(norm.is_finite() && norm > 0.0) {
            break;
        }
        x.iter_mut().for_each(|xi| *xi /= norm);
    }
    Err(Error::NonConvergence {
        iterations: PERRON_MAX_ITER,
    })
}

pub fn perron_value(graph: &MultiGraph) -> Result<f64> {
    Ok(perron(&HashimotoMatrix::new(graph))?.value)
}

/// Critical exponent `ln(rho) / L` of the deck group acting on the cover.
pub fn critical_exponent(graph: &MultiGraph) -> Result<f64> {
    Ok(perron_value(graph)?.ln() / graph.edge_length())
}

/// Number of non-backtracking paths of each length `0..=n` from `origin`.
pub fn sphere_sizes(graph: &MultiGraph, origin: VertexId, n: usize) -> Vec<u128> {
    let mut sizes = vec![1u128];
    let mut counts = vec![0u128; graph.dart_count()];
    for &d in graph.darts_at(origin) {
        counts[d.0] += 1;
    }
    for _ in 1..=n {
        sizes.push(counts.iter().sum());
        let mut next = vec![0u128; counts.len()];
        for d in graph.darts() {
            if counts[d.0] == 0 {
                continue;
            }
            for e in graph.successors(d) {
                next[e.0] += counts[d.0];
            }
        }
        counts = next;
    }
    sizes
}

/// Displacement `d(O, gamma O) / L` of the deck transformation named by `w`:
/// the length of the reduced concatenation of the generator loops.
pub fn displacement(presentation: &Presentation, w: &ReducedWord) -> usize {
    presentation.word_walk(w).len()
}

/// Truncated Poincare series, split by the depth-`depth` tree cylinder the
/// geodesic `[O, gamma O]` starts with.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincarePartial {
    pub depth: usize,
    pub by_cylinder: BTreeMap<Vec<Dart>, f64>,
    pub total: f64,
}

/// Sums `exp(-s L d(O, gamma O) / L)` over all `gamma` of word length `<= cutoff`
/// by direct enumeration of reduced words. Elements whose displacement is
/// shorter than `depth` contribute to the total only.
pub fn poincare_partial(
    presentation: &Presentation,
    s: f64,
    cutoff: usize,
    depth: usize,
) -> Result<PoincarePartial> {
    let graph = presentation.graph();
    let delta = critical_exponent(graph)?;
    if s <= delta {
        return Err(Error::Divergent { s, delta });
    }
    let g = presentation.genus();
    let step = (-s * graph.edge_length()).exp();
    let blocks: Vec<(f64, BTreeMap<Vec<Dart>, f64>)> = Letter::alphabet(g)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|first| {
            let mut enumerator = WordEnumerator {
                presentation,
                step,
                cutoff,
                depth,
                open: Vec::new(),
                total: 0.0,
                groups: BTreeMap::new(),
            };
            if cutoff > 0 {
                enumerator.descend(first, 1);
            }
            (enumerator.total, enumerator.groups)
        })
        .collect();
    let mut total = 1.0;
    let mut by_cylinder: BTreeMap<Vec<Dart>, f64> = BTreeMap::new();
    for (t, groups) in blocks {
        total += t;
        for (k, v) in groups {
            *by_cylinder.entry(k).or_insert(0.0) += v;
        }
    }
    Ok(PoincarePartial {
        depth,
        by_cylinder,
        total,
    })
}

struct WordEnumerator<'a> {
    presentation: &'a Presentation,
    step: f64,
    cutoff: usize,
    depth: usize,
    /// Reduced walk of the current word without its return to the origin;
    /// it ends with the last generator dart.
    open: Vec<Dart>,
    total: f64,
    groups: BTreeMap<Vec<Dart>, f64>,
}

impl WordEnumerator<'_> {
    fn descend(&mut self, letter: Letter, len: usize) {
        let p = self.presentation;
        let graph = p.graph();
        let d = p.dart_of_letter(letter);
        let from = self.open.last().map_or(p.origin(), |&e| graph.head(e));
        let mark = self.open.len();
        self.open.extend(p.tree_path(from, graph.tail(d)));
        self.open.push(d);
        let back = p.root_path(graph.head(d));
        let disp = self.open.len() + back.len();
        let weight = self.step.powi(disp as i32);
        self.total += weight;
        if disp >= self.depth {
            let mut key: Vec<Dart> = self.open.iter().take(self.depth).copied().collect();
            if key.len() < self.depth {
                key.extend(crate::graph::reverse_walk(back));
                key.truncate(self.depth);
            }
            *self.groups.entry(key).or_insert(0.0) += weight;
        }
        if len < self.cutoff {
            for next in Letter::alphabet(p.genus()) {
                if next != letter.inverse() {
                    self.descend(next, len + 1);
                }
            }
        }
        self.open.truncate(mark);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeMethod {
    /// Limit of normalized Poincare sums as `s` decreases to the critical
    /// exponent, with Richardson extrapolation.
    Poincare,
    /// Markov measure built from the Perron vector of the Hashimoto matrix.
    Perron,
}

/// Schedule and gates of the `s -> delta` extrapolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtrapolationConfig {
    /// `s_k = delta (1 + 2^-k)` for `k = 1..=steps`.
    pub steps: u32,
    /// Omitted series tail relative to the partial sum.
    pub tail_tolerance: f64,
    pub min_cutoff: usize,
    /// Largest spread tolerated among the last extrapolation estimates.
    pub cauchy_gate: f64,
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        Self {
            steps: 12,
            tail_tolerance: 1e-3,
            min_cutoff: 64,
            cauchy_gate: 1e-4,
        }
    }
}

impl ExtrapolationConfig {
    pub fn schedule(&self, delta: f64) -> Vec<f64> {
        (1..=self.steps)
            .map(|k| delta * (1.0 + (-(k as f64)).exp2()))
            .collect()
    }

    /// Length cutoff after which the geometric tail, decaying at least like
    /// `exp(-(s - delta) L)` per unit, is below the tail tolerance.
    pub fn cutoff(&self, s: f64, delta: f64, edge_length: f64) -> usize {
        let rate = (s - delta) * edge_length;
        let n = ((1.0 + 1.0 / self.tail_tolerance).ln() / rate).ceil();
        (n as usize).max(self.min_cutoff)
    }
}

/// Richardson extrapolation of values sampled at `h, h/2, h/4` (error
/// expansion in powers of `h`). Returns the estimate and the spread of the
/// two first-order estimates it combines.
pub(crate) fn richardson(r0: f64, r1: f64, r2: f64) -> (f64, f64) {
    let a1 = 2.0 * r1 - r0;
    let a2 = 2.0 * r2 - r1;
    ((4.0 * a2 - a1) / 3.0, (a2 - a1).abs())
}

/// Applies [`richardson`] entrywise to the last three iterates and enforces
/// the Cauchy gate.
pub(crate) fn extrapolate_last_three(
    iterates: &[BTreeMap<Vec<i64>, f64>],
    gate: f64,
) -> Result<BTreeMap<Vec<i64>, f64>> {
    let n = iterates.len();
    assert!(n >= 3, "need three iterates");
    let (r0, r1, r2) = (&iterates[n - 3], &iterates[n - 2], &iterates[n - 1]);
    let mut out = BTreeMap::new();
    for (key, &v2) in r2 {
        let (est, spread) = richardson(r0[key], r1[key], v2);
        if spread.is_nan() || spread > gate {
            return Err(Error::NotExtrapolable {
                cylinder: key.clone(),
                spread,
                gate,
            });
        }
        out.insert(key.clone(), est);
    }
    Ok(out)
}

/// Patterson-Sullivan measure of every tree cylinder `U_P`, `|P| <= depth`,
/// seen from the lift of `origin`.
pub fn ps_measure_tree(
    graph: &MultiGraph,
    origin: VertexId,
    depth: usize,
    method: TreeMethod,
) -> Result<CylinderMeasure> {
    ps_measure_tree_with(
        graph,
        origin,
        depth,
        method,
        &ExtrapolationConfig::default(),
    )
}

pub fn ps_measure_tree_with(
    graph: &MultiGraph,
    origin: VertexId,
    depth: usize,
    method: TreeMethod,
    config: &ExtrapolationConfig,
) -> Result<CylinderMeasure> {
    if origin.0 >= graph.vertex_count() {
        return Err(Error::UnknownOrigin(origin.0.to_string()));
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    crate::graph::validate(graph).into_result()?;
    let matrix = HashimotoMatrix::new(graph);
    let perron_data = perron(&matrix)?;
    let delta = perron_data.value.ln() / graph.edge_length();
    let masses = match method {
        TreeMethod::Perron => perron_masses(graph, origin, depth, &matrix, &perron_data.vector),
        TreeMethod::Poincare => {
            let iterates: Vec<BTreeMap<Vec<i64>, f64>> = config
                .schedule(delta)
                .into_iter()
                .map(|s| {
                    let cutoff = config.cutoff(s, delta, graph.edge_length());
                    poincare_tree_ratios(graph, origin, depth, s, cutoff, &matrix)
                })
                .collect();
            close_under_prefixes(&extrapolate_last_three(&iterates, config.cauchy_gate)?)
        }
    };
    Ok(CylinderMeasure {
        side: Side::Tree,
        depth,
        edge_length: graph.edge_length(),
        delta,
        masses,
    })
}

/// Markov measure: initial law proportional to the Perron vector on the
/// darts at the origin, transitions `v(d') / sum_{d -> d''} v(d'')`.
fn perron_masses(
    graph: &MultiGraph,
    origin: VertexId,
    depth: usize,
    matrix: &HashimotoMatrix,
    v: &[f64],
) -> BTreeMap<Vec<i64>, f64> {
    let mut masses = BTreeMap::new();
    masses.insert(Vec::new(), 1.0);
    let z: f64 = graph.darts_at(origin).iter().map(|d| v[d.0]).sum();
    let mut level: Vec<(Vec<Dart>, f64)> = graph
        .darts_at(origin)
        .iter()
        .map(|&d| (vec![d], v[d.0] / z))
        .collect();
    for n in 1..=depth {
        for (p, m) in &level {
            masses.insert(path_key(p), *m);
        }
        if n == depth {
            break;
        }
        level = level
            .iter()
            .flat_map(|(p, m)| {
                let last = *p.last().expect("non-empty");
                let succ = matrix.successors(last);
                let row: f64 = succ.iter().map(|e| v[e.0]).sum();
                succ.iter().map(move |&e| {
                    let mut q = p.clone();
                    q.push(e);
                    (q, m * v[e.0] / row)
                })
            })
            .collect();
    }
    masses
}

/// Sum over deck transformations of `exp(-s d(O, gamma O))`, displacement
/// `<= cutoff`, restricted to each cylinder and divided by the unrestricted
/// sum. Computed by propagating weighted counts of non-backtracking walks
/// that end at the origin (these are the orbit points).
fn poincare_tree_ratios(
    graph: &MultiGraph,
    origin: VertexId,
    depth: usize,
    s: f64,
    cutoff: usize,
    matrix: &HashimotoMatrix,
) -> BTreeMap<Vec<i64>, f64> {
    let sums = poincare_tree_sums(graph, origin, depth, s, cutoff, matrix);
    let total = sums[&Vec::new()];
    sums.into_iter()
        .filter(|(k, _)| k.len() == depth)
        .map(|(k, v)| (k, v / total))
        .collect()
}

pub(crate) fn poincare_tree_sums(
    graph: &MultiGraph,
    origin: VertexId,
    depth: usize,
    s: f64,
    cutoff: usize,
    matrix: &HashimotoMatrix,
) -> BTreeMap<Vec<i64>, f64> {
    let step = (-s * graph.edge_length()).exp();
    let n = graph.dart_count();
    // h[d]: weighted number of walks of the current length starting with d
    // and ending at the origin; partial[j] holds cumulative sums at length
    // cutoff - j for j < depth
    let mut h: Vec<f64> = graph
        .darts()
        .map(|d| if graph.head(d) == origin { step } else { 0.0 })
        .collect();
    let mut cumulative = h.clone();
    let mut partial: Vec<Vec<f64>> = vec![Vec::new(); depth];
    let mut next = vec![0.0; n];
    for m in 1..=cutoff {
        if m > 1 {
            matrix.apply(&h, &mut next);
            for (hi, ni) in h.iter_mut().zip(&next) {
                *hi = ni * step;
            }
            for (c, hi) in cumulative.iter_mut().zip(&h) {
                *c += hi;
            }
        }
        if cutoff - m < depth {
            partial[cutoff - m] = cumulative.clone();
        }
    }
    let mut sums = BTreeMap::new();
    let total = 1.0
        + graph
            .darts_at(origin)
            .iter()
            .map(|d| partial[0].get(d.0).copied().unwrap_or(0.0))
            .sum::<f64>();
    sums.insert(Vec::new(), total);
    for len in 1..=depth {
        let prefix_weight = step.powi(len as i32 - 1);
        for p in paths_of_length(graph, origin, len) {
            let last = *p.darts.last().expect("non-empty");
            let tail = partial[len - 1].get(last.0).copied().unwrap_or(0.0);
            sums.insert(p.key(), prefix_weight * tail);
        }
    }
    sums
}

/// Stabilized Busemann difference `d(O', x_k) - d(O, x_k)` along `prefix`,
/// where `other` is the cover vertex `O'` given as a path from `O`.
pub fn busemann(other: &TreePath, prefix: &TreePath) -> Result<i64> {
    if other.start != prefix.start {
        return Err(Error::InvalidArgument(
            "paths start at different vertices".into(),
        ));
    }
    let value_at = |k: usize| -> i64 {
        let lcp = other.common_prefix(prefix).min(k);
        other.len() as i64 - 2 * lcp as i64
    };
    let n = prefix.len();
    if n == 0 || value_at(n) != value_at(n - 1) {
        return Err(Error::ExtendPrefix(format!(
            "Busemann difference not yet constant along a prefix of length {n}"
        )));
    }
    Ok(value_at(n))
}

/// Endpoint of the geodesic `[O, gamma O]` as a tree path, for a word.
pub fn orbit_point(presentation: &Presentation, w: &ReducedWord) -> TreePath {
    TreePath {
        start: presentation.origin(),
        darts: presentation.word_walk(w),
    }
}

/// Reduced walk from the endpoint of `base` to the endpoint of `target`,
/// both given as walks from the origin lift.
pub fn relative_walk(base: &[Dart], target: &[Dart]) -> Vec<Dart> {
    reduce_darts(
        crate::graph::reverse_walk(base)
            .into_iter()
            .chain(target.iter().copied()),
    )
}
