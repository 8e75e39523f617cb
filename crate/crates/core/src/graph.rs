//! Finite multigraphs in dart (half-edge) form and the free-group
//! presentation of their fundamental group.
//!
//! Edge `k` of a graph owns darts `2k` (first endpoint to second) and `2k + 1`
//! (the reverse), so reversal is `d ^ 1`. Loops and parallel edges are
//! ordinary edges here.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Dart(pub usize);

impl Dart {
    #[inline]
    pub fn reverse(self) -> Dart {
        Dart(self.0 ^ 1)
    }

    #[inline]
    pub fn edge(self) -> usize {
        self.0 / 2
    }
}

impl fmt::Display for Dart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite multigraph with a single global edge length.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiGraph {
    names: Vec<String>,
    tails: Vec<VertexId>,
    darts_at: Vec<Vec<Dart>>,
    edge_length: f64,
}

impl MultiGraph {
    /// Builds a graph from vertex names and endpoint pairs (indices into `names`).
    pub fn new(names: Vec<String>, edges: &[(usize, usize)], edge_length: f64) -> Result<Self> {
        if !(edge_length.is_finite() && edge_length > 0.0) {
            return Err(Error::NonPositiveLength {
                line: 0,
                value: edge_length.to_string(),
            });
        }
        let mut tails = Vec::with_capacity(2 * edges.len());
        let mut darts_at = vec![Vec::new(); names.len()];
        for (k, &(u, v)) in edges.iter().enumerate() {
            for (end, vertex) in [(0, u), (1, v)] {
                if vertex >= names.len() {
                    return Err(Error::InvalidArgument(format!(
                        "edge {k} references vertex index {vertex}"
                    )));
                }
                tails.push(VertexId(vertex));
                darts_at[vertex].push(Dart(2 * k + end));
            }
        }
        Ok(Self {
            names,
            tails,
            darts_at,
            edge_length,
        })
    }

    /// Graph with vertices named `0..n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()).collect(), edges, 1.0)
    }

    /// Parses the line-oriented graph format (`#`, `L`, `v`, `e` lines).
    pub fn parse(text: &str) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut edges = Vec::new();
        let mut edge_length: Option<f64> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let mut fields = content.split_whitespace();
            let keyword = fields.next().unwrap_or_default();
            let args: Vec<&str> = fields.collect();
            let parse_err = |message: String| Error::Parse { line, message };
            match keyword {
                "L" => {
                    if args.len() != 1 {
                        return Err(parse_err("expected `L <positive-real>`".into()));
                    }
                    if edge_length.is_some() {
                        return Err(parse_err("edge length given twice".into()));
                    }
                    let value: f64 = args[0]
                        .parse()
                        .map_err(|_| parse_err(format!("invalid edge length `{}`", args[0])))?;
                    if !(value.is_finite() && value > 0.0) {
                        return Err(Error::NonPositiveLength {
                            line,
                            value: args[0].to_string(),
                        });
                    }
                    edge_length = Some(value);
                }
                "v" => {
                    if args.len() != 1 {
                        return Err(parse_err("expected `v <id>`".into()));
                    }
                    if names.iter().any(|n| n == args[0]) {
                        return Err(parse_err(format!("duplicate vertex `{}`", args[0])));
                    }
                    names.push(args[0].to_string());
                }
                "e" => {
                    if args.len() != 2 {
                        return Err(parse_err(
                            "expected `e <id-u> <id-v>` (per-edge lengths are not supported)"
                                .into(),
                        ));
                    }
                    let mut ends = [0usize; 2];
                    for (slot, name) in ends.iter_mut().zip(&args) {
                        *slot = names.iter().position(|n| n == name).ok_or_else(|| {
                            Error::UnknownVertex {
                                line,
                                name: name.to_string(),
                            }
                        })?;
                    }
                    edges.push((ends[0], ends[1]));
                }
                other => return Err(parse_err(format!("unknown directive `{other}`"))),
            }
        }
        Self::new(names, &edges, edge_length.unwrap_or(1.0))
    }

    /// Serializes back to the graph file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.edge_length != 1.0 {
            out.push_str(&format!("L {}\n", self.edge_length));
        }
        for name in &self.names {
            out.push_str(&format!("v {name}\n"));
        }
        for (u, v) in self.edges() {
            out.push_str(&format!("e {} {}\n", self.names[u.0], self.names[v.0]));
        }
        out
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.tails.len() / 2
    }

    pub fn dart_count(&self) -> usize {
        self.tails.len()
    }

    pub fn edge_length(&self) -> f64 {
        self.edge_length
    }

    pub fn with_edge_length(&self, edge_length: f64) -> Result<Self> {
        if !(edge_length.is_finite() && edge_length > 0.0) {
            return Err(Error::NonPositiveLength {
                line: 0,
                value: edge_length.to_string(),
            });
        }
        let mut g = self.clone();
        g.edge_length = edge_length;
        Ok(g)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.names.len()).map(VertexId)
    }

    pub fn darts(&self) -> impl Iterator<Item = Dart> {
        (0..self.tails.len()).map(Dart)
    }

    /// Endpoint pairs in file order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        (0..self.edge_count()).map(|k| (self.tails[2 * k], self.tails[2 * k + 1]))
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v.0]
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.names.iter().position(|n| n == name).map(VertexId)
    }

    #[inline]
    pub fn tail(&self, d: Dart) -> VertexId {
        self.tails[d.0]
    }

    #[inline]
    pub fn head(&self, d: Dart) -> VertexId {
        self.tails[d.reverse().0]
    }

    /// Darts with tail `v`, in dart-id order.
    #[inline]
    pub fn darts_at(&self, v: VertexId) -> &[Dart] {
        &self.darts_at[v.0]
    }

    pub fn valency(&self, v: VertexId) -> usize {
        self.darts_at[v.0].len()
    }

    /// Darts that may follow `d` in a non-backtracking walk.
    pub fn successors(&self, d: Dart) -> impl Iterator<Item = Dart> + '_ {
        let back = d.reverse();
        self.darts_at(self.head(d))
            .iter()
            .copied()
            .filter(move |&e| e != back)
    }

    /// First vertex not reachable from vertex 0, if any.
    pub fn unreachable_vertex(&self) -> Option<VertexId> {
        if self.names.is_empty() {
            return None;
        }
        let mut seen = vec![false; self.names.len()];
        let mut queue = VecDeque::from([VertexId(0)]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &d in self.darts_at(u) {
                let w = self.head(d);
                if !seen[w.0] {
                    seen[w.0] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.iter().position(|s| !s).map(VertexId)
    }

    pub fn is_connected(&self) -> bool {
        !self.names.is_empty() && self.unreachable_vertex().is_none()
    }

    /// Relabels the graph: vertex `v` becomes `vertex_perm[v]`, edge `k` is
    /// written at position `edge_perm[k]`, and edges whose bit is set in
    /// `flips` swap their endpoints. Names follow their vertices.
    pub fn permuted(&self, vertex_perm: &[usize], edge_perm: &[usize], flips: &[bool]) -> Self {
        let n = self.vertex_count();
        let mut names = vec![String::new(); n];
        for v in 0..n {
            names[vertex_perm[v]] = self.names[v].clone();
        }
        let mut edges = vec![(0, 0); self.edge_count()];
        for (k, (u, v)) in self.edges().enumerate() {
            let (a, b) = (vertex_perm[u.0], vertex_perm[v.0]);
            edges[edge_perm[k]] = if flips.get(k).copied().unwrap_or(false) {
                (b, a)
            } else {
                (a, b)
            };
        }
        Self::new(names, &edges, self.edge_length).expect("permutation of a valid graph")
    }

    /// Dart correspondence for [`MultiGraph::permuted`].
    pub fn permuted_dart(d: Dart, edge_perm: &[usize], flips: &[bool]) -> Dart {
        let k = d.edge();
        let side = (d.0 & 1) ^ usize::from(flips.get(k).copied().unwrap_or(false));
        Dart(2 * edge_perm[k] + side)
    }
}

/// First Betti number `#edges - #vertices + 1`.
pub fn betti(graph: &MultiGraph) -> Result<usize> {
    if let Some(v) = graph.unreachable_vertex() {
        return Err(Error::Disconnected {
            vertex: graph.name(v).to_string(),
        });
    }
    if graph.vertex_count() == 0 {
        return Err(Error::InvalidArgument("graph has no vertices".into()));
    }
    Ok(graph.edge_count() + 1 - graph.vertex_count())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Disconnected { vertex: String },
    LowValency { vertex: String, valency: usize },
    LowGenus { genus: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Disconnected { vertex } => write!(f, "disconnected at {vertex}"),
            Violation::LowValency { vertex, valency } => {
                write!(f, "valency {valency} at {vertex}")
            }
            Violation::LowGenus { genus } => write!(f, "genus {genus}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub genus: Option<usize>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
            Err(Error::Hypothesis(msgs.join("; ")))
        }
    }
}

/// Checks connectivity, valency >= 3 everywhere and genus >= 2.
pub fn validate(graph: &MultiGraph) -> ValidationReport {
    let mut violations = Vec::new();
    if graph.vertex_count() == 0 {
        violations.push(Violation::LowGenus { genus: 0 });
        return ValidationReport {
            genus: None,
            violations,
        };
    }
    if let Some(v) = graph.unreachable_vertex() {
        violations.push(Violation::Disconnected {
            vertex: graph.name(v).to_string(),
        });
    }
    for v in graph.vertices() {
        let valency = graph.valency(v);
        if valency < 3 {
            violations.push(Violation::LowValency {
                vertex: graph.name(v).to_string(),
                valency,
            });
        }
    }
    let genus = betti(graph).ok();
    if let Some(g) = genus {
        if g < 2 {
            violations.push(Violation::LowGenus { genus: g });
        }
    }
    ValidationReport { genus, violations }
}

/// A generator letter: `+i` is the i-th generator (1-based), `-i` its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Letter(pub i32);

impl Letter {
    pub fn generator(index: usize, inverse: bool) -> Self {
        let i = index as i32 + 1;
        Letter(if inverse { -i } else { i })
    }

    pub fn inverse(self) -> Self {
        Letter(-self.0)
    }

    /// Zero-based generator index.
    pub fn index(self) -> usize {
        (self.0.unsigned_abs() - 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 < 0
    }

    /// Position in the alphabet `x1, x1^-1, x2, x2^-1, ...`.
    pub fn rank(self) -> usize {
        2 * self.index() + usize::from(self.is_inverse())
    }

    pub fn from_rank(rank: usize) -> Self {
        Self::generator(rank / 2, rank % 2 == 1)
    }

    /// All `2g` letters in rank order.
    pub fn alphabet(g: usize) -> impl Iterator<Item = Letter> {
        (0..2 * g).map(Letter::from_rank)
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank().cmp(&other.rank())
    }
}

/// A freely reduced word in the generators.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReducedWord(Vec<Letter>);

impl ReducedWord {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Wraps letters that are already reduced; `None` otherwise.
    pub fn new(letters: Vec<Letter>) -> Option<Self> {
        let ok =
            letters.iter().all(|l| l.0 != 0) && letters.windows(2).all(|w| w[1] != w[0].inverse());
        ok.then_some(Self(letters))
    }

    pub fn from_signed(letters: &[i32]) -> Option<Self> {
        Self::new(letters.iter().map(|&l| Letter(l)).collect())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn prefix(&self, n: usize) -> ReducedWord {
        ReducedWord(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn starts_with(&self, other: &ReducedWord) -> bool {
        self.0.starts_with(&other.0)
    }

    /// Appends a letter; `None` if it cancels the last one.
    pub fn extended(&self, letter: Letter) -> Option<ReducedWord> {
        if self.last() == Some(letter.inverse()) {
            return None;
        }
        let mut letters = self.0.clone();
        letters.push(letter);
        Some(ReducedWord(letters))
    }

    pub fn inverse(&self) -> ReducedWord {
        ReducedWord(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    /// Group product: concatenate, then reduce.
    pub fn mul(&self, other: &ReducedWord) -> ReducedWord {
        free_reduce(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn to_signed(&self) -> Vec<i64> {
        self.0.iter().map(|l| i64::from(l.0)).collect()
    }

    /// Letters after `relabel`, which must map letters to letters and commute
    /// with inversion.
    pub fn map_letters(&self, relabel: impl Fn(Letter) -> Letter) -> ReducedWord {
        ReducedWord(self.0.iter().map(|&l| relabel(l)).collect())
    }

    /// All reduced words of length exactly `n` over `g` generators, in
    /// lexicographic rank order.
    pub fn all_of_length(g: usize, n: usize) -> Vec<ReducedWord> {
        let mut level = vec![ReducedWord::empty()];
        for _ in 0..n {
            level = level
                .iter()
                .flat_map(|w| Letter::alphabet(g).filter_map(move |l| w.extended(l)))
                .collect();
        }
        level
    }

    /// All reduced words of length `<= n`, shortest first.
    pub fn all_up_to(g: usize, n: usize) -> Vec<ReducedWord> {
        (0..=n).flat_map(|k| Self::all_of_length(g, k)).collect()
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            if l.is_inverse() {
                write!(f, "x{}^-1", l.index() + 1)?;
            } else {
                write!(f, "x{}", l.index() + 1)?;
            }
        }
        Ok(())
    }
}

/// Cancels adjacent inverse pairs until none remain.
pub fn free_reduce(letters: impl IntoIterator<Item = Letter>) -> ReducedWord {
    let mut stack: Vec<Letter> = Vec::new();
    for l in letters {
        if stack.last() == Some(&l.inverse()) {
            stack.pop();
        } else {
            stack.push(l);
        }
    }
    ReducedWord(stack)
}

/// Cancels every dart immediately followed by its reverse.
pub fn reduce_darts(darts: impl IntoIterator<Item = Dart>) -> Vec<Dart> {
    let mut stack: Vec<Dart> = Vec::new();
    for d in darts {
        if stack.last() == Some(&d.reverse()) {
            stack.pop();
        } else {
            stack.push(d);
        }
    }
    stack
}

/// The walk traversed backwards.
pub fn reverse_walk(darts: &[Dart]) -> Vec<Dart> {
    darts.iter().rev().map(|d| d.reverse()).collect()
}

/// A rooted spanning tree, stored as the parent dart (parent -> child) of
/// every non-root vertex.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpanningTree {
    pub origin: VertexId,
    pub parent: Vec<Option<Dart>>,
}

impl SpanningTree {
    pub fn contains_edge(&self, edge: usize) -> bool {
        self.parent.iter().flatten().any(|d| d.edge() == edge)
    }

    pub fn edge_set(&self) -> BTreeSet<usize> {
        self.parent.iter().flatten().map(|d| d.edge()).collect()
    }
}

fn check_origin(graph: &MultiGraph, origin: VertexId) -> Result<()> {
    if origin.0 >= graph.vertex_count() {
        return Err(Error::UnknownOrigin(origin.0.to_string()));
    }
    Ok(())
}

/// BFS tree from `origin` scanning darts in file order.
pub fn canonical_bfs_tree(graph: &MultiGraph, origin: VertexId) -> Result<SpanningTree> {
    check_origin(graph, origin)?;
    let mut parent = vec![None; graph.vertex_count()];
    let mut seen = vec![false; graph.vertex_count()];
    seen[origin.0] = true;
    let mut queue = VecDeque::from([origin]);
    while let Some(u) = queue.pop_front() {
        for &d in graph.darts_at(u) {
            let w = graph.head(d);
            if !seen[w.0] {
                seen[w.0] = true;
                parent[w.0] = Some(d);
                queue.push_back(w);
            }
        }
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(Error::Disconnected {
            vertex: graph.name(VertexId(v)).to_string(),
        });
    }
    Ok(SpanningTree { origin, parent })
}

/// Result of enumerating BFS trees.
#[derive(Debug, Clone)]
pub struct TreeEnumeration {
    pub trees: Vec<SpanningTree>,
    pub truncated: bool,
}

const TREE_SEARCH_NODE_CAP: usize = 2_000_000;

/// Every spanning tree that BFS from `origin` produces under some ordering
/// of the darts, canonical tree first, at most `limit` of them.
pub fn enumerate_bfs_trees(
    graph: &MultiGraph,
    origin: VertexId,
    limit: usize,
) -> Result<TreeEnumeration> {
    let canonical = canonical_bfs_tree(graph, origin)?;
    let mut search = TreeSearch {
        graph,
        limit,
        found: BTreeSet::new(),
        order: Vec::new(),
        nodes: 0,
        truncated: false,
    };
    if limit == 0 {
        return Ok(TreeEnumeration {
            trees: Vec::new(),
            truncated: true,
        });
    }
    search.found.insert(canonical.parent.clone());
    search.order.push(canonical.parent.clone());
    let mut seen = vec![false; graph.vertex_count()];
    seen[origin.0] = true;
    let mut parent = vec![None; graph.vertex_count()];
    search.explore(&mut seen, &mut parent, &mut VecDeque::from([origin]));
    Ok(TreeEnumeration {
        trees: search
            .order
            .into_iter()
            .map(|parent| SpanningTree { origin, parent })
            .collect(),
        truncated: search.truncated,
    })
}

struct TreeSearch<'a> {
    graph: &'a MultiGraph,
    limit: usize,
    found: BTreeSet<Vec<Option<Dart>>>,
    order: Vec<Vec<Option<Dart>>>,
    nodes: usize,
    truncated: bool,
}

impl TreeSearch<'_> {
    fn done(&self) -> bool {
        self.truncated
    }

    fn explore(
        &mut self,
        seen: &mut Vec<bool>,
        parent: &mut Vec<Option<Dart>>,
        queue: &mut VecDeque<VertexId>,
    ) {
        if self.done() {
            return;
        }
        self.nodes += 1;
        if self.nodes > TREE_SEARCH_NODE_CAP {
            self.truncated = true;
            return;
        }
        let Some(u) = queue.pop_front() else {
            if !self.found.contains(parent) {
                if self.found.len() >= self.limit {
                    self.truncated = true;
                    return;
                }
                self.found.insert(parent.clone());
                self.order.push(parent.clone());
            }
            return;
        };
        // unvisited neighbours, each with its candidate tree darts
        let mut children: Vec<(VertexId, Vec<Dart>)> = Vec::new();
        for &d in self.graph.darts_at(u) {
            let w = self.graph.head(d);
            if seen[w.0] {
                continue;
            }
            match children.iter_mut().find(|(v, _)| *v == w) {
                Some((_, darts)) => darts.push(d),
                None => children.push((w, vec![d])),
            }
        }
        let mut perm: Vec<usize> = (0..children.len()).collect();
        loop {
            let mut picks = vec![0usize; children.len()];
            loop {
                for &i in &perm {
                    let (w, darts) = &children[i];
                    seen[w.0] = true;
                    parent[w.0] = Some(darts[picks[i]]);
                    queue.push_back(*w);
                }
                self.explore(seen, parent, queue);
                for _ in &perm {
                    let w = queue.pop_back().expect("pushed above");
                    seen[w.0] = false;
                    parent[w.0] = None;
                }
                if self.done() || !advance_mixed_radix(&mut picks, &children) {
                    break;
                }
            }
            if self.done() || !next_permutation(&mut perm) {
                break;
            }
        }
        queue.push_front(u);
    }
}

fn advance_mixed_radix(picks: &mut [usize], children: &[(VertexId, Vec<Dart>)]) -> bool {
    for (slot, (_, darts)) in picks.iter_mut().zip(children) {
        *slot += 1;
        if *slot < darts.len() {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Advances to the next lexicographic permutation; `false` after the last.
pub fn next_permutation(perm: &mut [usize]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let mut i = perm.len() - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = perm.len() - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Generator ordering and orientation: generator `j` of the presentation is
/// base generator `order[j]`, reversed when bit `j` of `flips` is set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Arrangement {
    pub order: Vec<usize>,
    pub flips: u64,
}

impl Arrangement {
    pub fn identity(g: usize) -> Self {
        Self {
            order: (0..g).collect(),
            flips: 0,
        }
    }

    pub fn count(g: usize) -> usize {
        factorial(g) << g
    }

    /// The `index`-th arrangement: permutation rank (lexicographic) times
    /// `2^g` plus the flip mask.
    pub fn from_index(g: usize, index: usize) -> Result<Self> {
        let available = Self::count(g);
        if index >= available {
            return Err(Error::ChoiceOutOfRange { index, available });
        }
        let flips = (index & ((1 << g) - 1)) as u64;
        let mut rank = index >> g;
        let mut pool: Vec<usize> = (0..g).collect();
        let mut order = Vec::with_capacity(g);
        for k in (0..g).rev() {
            let f = factorial(k);
            order.push(pool.remove(rank / f));
            rank %= f;
        }
        Ok(Self { order, flips })
    }

    pub fn index(&self) -> usize {
        let g = self.order.len();
        let mut pool: Vec<usize> = (0..g).collect();
        let mut rank = 0;
        for (k, &o) in self.order.iter().enumerate() {
            let pos = pool
                .iter()
                .position(|&p| p == o)
                .expect("valid permutation");
            rank += pos * factorial(g - 1 - k);
            pool.remove(pos);
        }
        (rank << g) | self.flips as usize
    }

    pub fn all(g: usize) -> impl Iterator<Item = Arrangement> {
        (0..Self::count(g)).map(move |i| Self::from_index(g, i).expect("in range"))
    }

    pub fn is_flipped(&self, j: usize) -> bool {
        self.flips >> j & 1 == 1
    }
}

/// A free-group presentation of the fundamental group: origin, spanning
/// tree, and one oriented generator dart per non-tree edge.
#[derive(Debug, Clone)]
pub struct Presentation {
    graph: MultiGraph,
    tree: SpanningTree,
    arrangement: Arrangement,
    generators: Vec<Dart>,
    letter_of_dart: Vec<Option<Letter>>,
    root_paths: Vec<Vec<Dart>>,
    loop_reps: Vec<Vec<Dart>>,
}

impl Presentation {
    pub fn new(graph: &MultiGraph, tree: SpanningTree, arrangement: Arrangement) -> Result<Self> {
        check_origin(graph, tree.origin)?;
        let tree_edges = tree.edge_set();
        let base: Vec<usize> = (0..graph.edge_count())
            .filter(|e| !tree_edges.contains(e))
            .collect();
        let g = base.len();
        if arrangement.order.len() != g {
            return Err(Error::InvalidArgument(format!(
                "arrangement has {} generators, graph has genus {g}",
                arrangement.order.len()
            )));
        }
        let mut sorted = arrangement.order.clone();
        sorted.sort_unstable();
        if sorted != (0..g).collect::<Vec<_>>() {
            return Err(Error::InvalidArgument(
                "arrangement order is not a permutation".into(),
            ));
        }
        let generators: Vec<Dart> = arrangement
            .order
            .iter()
            .enumerate()
            .map(|(j, &b)| {
                let d = Dart(2 * base[b]);
                if arrangement.is_flipped(j) {
                    d.reverse()
                } else {
                    d
                }
            })
            .collect();
        let mut letter_of_dart = vec![None; graph.dart_count()];
        for (j, &d) in generators.iter().enumerate() {
            letter_of_dart[d.0] = Some(Letter::generator(j, false));
            letter_of_dart[d.reverse().0] = Some(Letter::generator(j, true));
        }
        let root_paths = root_paths(graph, &tree);
        let loop_reps = generators
            .iter()
            .map(|&d| {
                let mut walk = root_paths[graph.tail(d).0].clone();
                walk.push(d);
                walk.extend(reverse_walk(&root_paths[graph.head(d).0]));
                reduce_darts(walk)
            })
            .collect();
        Ok(Self {
            graph: graph.clone(),
            tree,
            arrangement,
            generators,
            letter_of_dart,
            root_paths,
            loop_reps,
        })
    }

    pub fn graph(&self) -> &MultiGraph {
        &self.graph
    }

    pub fn origin(&self) -> VertexId {
        self.tree.origin
    }

    pub fn tree(&self) -> &SpanningTree {
        &self.tree
    }

    pub fn arrangement(&self) -> &Arrangement {
        &self.arrangement
    }

    pub fn genus(&self) -> usize {
        self.generators.len()
    }

    /// Oriented dart of generator `j` (zero-based).
    pub fn generator_dart(&self, j: usize) -> Dart {
        self.generators[j]
    }

    pub fn dart_of_letter(&self, l: Letter) -> Dart {
        let d = self.generators[l.index()];
        if l.is_inverse() {
            d.reverse()
        } else {
            d
        }
    }

    /// The letter read when crossing `d`, or `None` for tree darts.
    #[inline]
    pub fn letter_of_dart(&self, d: Dart) -> Option<Letter> {
        self.letter_of_dart[d.0]
    }

    pub fn is_tree_dart(&self, d: Dart) -> bool {
        self.letter_of_dart[d.0].is_none()
    }

    /// Tree darts from the origin to `v`.
    pub fn root_path(&self, v: VertexId) -> &[Dart] {
        &self.root_paths[v.0]
    }

    /// Tree geodesic from `a` to `b`.
    pub fn tree_path(&self, a: VertexId, b: VertexId) -> Vec<Dart> {
        let pa = &self.root_paths[a.0];
        let pb = &self.root_paths[b.0];
        let common = pa.iter().zip(pb).take_while(|(x, y)| x == y).count();
        let mut walk = reverse_walk(&pa[common..]);
        walk.extend_from_slice(&pb[common..]);
        walk
    }

    pub fn tree_distance(&self, a: VertexId, b: VertexId) -> usize {
        let pa = &self.root_paths[a.0];
        let pb = &self.root_paths[b.0];
        let common = pa.iter().zip(pb).take_while(|(x, y)| x == y).count();
        pa.len() + pb.len() - 2 * common
    }

    /// Closed reduced dart walk at the origin representing a letter.
    pub fn loop_rep(&self, l: Letter) -> Vec<Dart> {
        let rep = &self.loop_reps[l.index()];
        if l.is_inverse() {
            reverse_walk(rep)
        } else {
            rep.clone()
        }
    }

    /// Reduced dart walk of the deck transformation named by `w`, i.e. the
    /// tree geodesic from the origin lift to its image.
    pub fn word_walk(&self, w: &ReducedWord) -> Vec<Dart> {
        reduce_darts(w.letters().iter().flat_map(|&l| self.loop_rep(l)))
    }

    /// Letters crossed by a non-backtracking dart walk from the origin.
    pub fn read_letters(&self, walk: &[Dart]) -> ReducedWord {
        ReducedWord(
            walk.iter()
                .filter_map(|&d| self.letter_of_dart(d))
                .collect(),
        )
    }
}

fn root_paths(graph: &MultiGraph, tree: &SpanningTree) -> Vec<Vec<Dart>> {
    let n = graph.vertex_count();
    let mut paths: Vec<Option<Vec<Dart>>> = vec![None; n];
    paths[tree.origin.0] = Some(Vec::new());
    // parents always precede children along BFS depth, but resolve lazily
    // to avoid depending on that
    let mut remaining = n - 1;
    while remaining > 0 {
        let before = remaining;
        for v in 0..n {
            if paths[v].is_some() {
                continue;
            }
            let Some(d) = tree.parent[v] else { continue };
            if let Some(p) = &paths[graph.tail(d).0] {
                let mut path = p.clone();
                path.push(d);
                paths[v] = Some(path);
                remaining -= 1;
            }
        }
        assert!(
            remaining < before,
            "spanning tree parent pointers form a cycle"
        );
    }
    paths.into_iter().map(|p| p.expect("spanning")).collect()
}

/// Presentation over the canonical BFS tree from `origin`.
pub fn spanning_presentation(
    graph: &MultiGraph,
    origin: VertexId,
    arrangement: &Arrangement,
) -> Result<Presentation> {
    let tree = canonical_bfs_tree(graph, origin)?;
    Presentation::new(graph, tree, arrangement.clone())
}

/// Presentation with the canonical tree from vertex 0 and identity arrangement.
pub fn canonical_presentation(graph: &MultiGraph) -> Result<Presentation> {
    let g = betti(graph)?;
    spanning_presentation(graph, VertexId(0), &Arrangement::identity(g))
}
