//! Zeta fingerprints over origin and presentation choices, the
//! intersection test between two graphs, and a brute-force multigraph
//! isomorphism oracle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{pullback_measure, BoundaryMethod};
use crate::error::{Error, Result};
use crate::graph::{
    betti, canonical_bfs_tree, enumerate_bfs_trees, validate, Arrangement, Letter, MultiGraph,
    Presentation, ReducedWord, SpanningTree, VertexId,
};
use crate::measure::PulledBackMeasure;

/// Identifies one presentation of a graph: origin, index of the BFS tree in
/// enumeration order, and arrangement index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChoiceId {
    pub origin: usize,
    pub tree: usize,
    pub arrangement: usize,
}

#[derive(Debug, Clone)]
pub struct Choice {
    pub id: ChoiceId,
    pub tree: SpanningTree,
    pub arrangement: Arrangement,
}

impl Choice {
    pub fn presentation(&self, graph: &MultiGraph) -> Result<Presentation> {
        Presentation::new(graph, self.tree.clone(), self.arrangement.clone())
    }
}

#[derive(Debug, Clone)]
pub struct ChoiceEnumeration {
    pub choices: Vec<Choice>,
    pub truncated: bool,
}

/// Budget `0` selects the single canonical presentation; otherwise up to
/// `budget` BFS trees are taken per origin, each with every arrangement.
pub fn enumerate_choices(graph: &MultiGraph, budget: usize) -> Result<ChoiceEnumeration> {
    let g = betti(graph)?;
    if budget == 0 {
        return Ok(ChoiceEnumeration {
            choices: vec![Choice {
                id: ChoiceId {
                    origin: 0,
                    tree: 0,
                    arrangement: 0,
                },
                tree: canonical_bfs_tree(graph, VertexId(0))?,
                arrangement: Arrangement::identity(g),
            }],
            truncated: Arrangement::count(g) * graph.vertex_count() > 1,
        });
    }
    let mut choices = Vec::new();
    let mut truncated = false;
    for origin in graph.vertices() {
        let trees = enumerate_bfs_trees(graph, origin, budget)?;
        truncated |= trees.truncated;
        for (t, tree) in trees.trees.into_iter().enumerate() {
            for (a, arrangement) in Arrangement::all(g).enumerate() {
                choices.push(Choice {
                    id: ChoiceId {
                        origin: origin.0,
                        tree: t,
                        arrangement: a,
                    },
                    tree: tree.clone(),
                    arrangement,
                });
            }
        }
    }
    Ok(ChoiceEnumeration { choices, truncated })
}

/// Genus and the pulled-back masses of every word cylinder up to `depth`,
/// shortest words first, lexicographic by letter rank within a length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub g: usize,
    pub depth: usize,
    pub vector: Vec<f64>,
    pub provenance: ChoiceId,
}

impl Fingerprint {
    pub fn from_measure(g: usize, nu: &PulledBackMeasure, provenance: ChoiceId) -> Result<Self> {
        let depth = nu.depth();
        let vector = ReducedWord::all_up_to(g, depth)
            .iter()
            .map(|w| {
                nu.mass(w)
                    .ok_or_else(|| Error::InvalidArgument(format!("measure lacks {w}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            g,
            depth,
            vector,
            provenance,
        })
    }

    /// Largest entrywise difference.
    pub fn deviation(&self, other: &Fingerprint) -> f64 {
        max_deviation(&self.vector, &other.vector, f64::INFINITY)
    }
}

/// Entrywise max difference, abandoned (returning a value `> bound`) as
/// soon as it exceeds `bound`.
fn max_deviation(a: &[f64], b: &[f64], bound: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        worst = worst.max((x - y).abs());
        if worst > bound {
            break;
        }
    }
    worst
}

/// Vector length `1 + sum_{1 <= n <= N} 2g (2g-1)^(n-1)`.
pub fn fingerprint_len(g: usize, depth: usize) -> usize {
    (0..=depth)
        .map(|n| crate::spectral::filtration_dim(g, n) as usize)
        .sum()
}

pub fn fingerprint(
    presentation: &Presentation,
    depth: usize,
    provenance: ChoiceId,
) -> Result<Fingerprint> {
    let nu = pullback_measure(presentation, depth, BoundaryMethod::GeodesicClassify)?;
    Fingerprint::from_measure(presentation.genus(), &nu, provenance)
}

/// Letter of the identity-arrangement presentation that names the same
/// oriented edge as `l` does under `arrangement`.
fn base_letter(arrangement: &Arrangement, l: Letter) -> Letter {
    let j = l.index();
    Letter::generator(
        arrangement.order[j],
        l.is_inverse() ^ arrangement.is_flipped(j),
    )
}

#[derive(Debug, Clone)]
pub struct FingerprintSet {
    pub g: usize,
    pub fingerprints: Vec<Fingerprint>,
    pub truncated: bool,
}

/// Fingerprints of every enumerated choice. The measure depends on the
/// origin and tree only; arrangements relabel its words.
pub fn fingerprint_set(graph: &MultiGraph, depth: usize, budget: usize) -> Result<FingerprintSet> {
    validate(graph).into_result()?;
    let g = betti(graph)?;
    let enumeration = enumerate_choices(graph, budget)?;
    let words = ReducedWord::all_up_to(g, depth);
    // group consecutive choices sharing (origin, tree)
    let mut groups: Vec<(ChoiceId, &SpanningTree, Vec<&Choice>)> = Vec::new();
    for c in &enumeration.choices {
        match groups.last_mut() {
            Some((id, _, members)) if id.origin == c.id.origin && id.tree == c.id.tree => {
                members.push(c)
            }
            _ => groups.push((c.id, &c.tree, vec![c])),
        }
    }
    let per_group: Vec<Vec<Fingerprint>> = groups
        .par_iter()
        .map(|(_, tree, members)| {
            let base = Presentation::new(graph, (*tree).clone(), Arrangement::identity(g))?;
            let nu = pullback_measure(&base, depth, BoundaryMethod::GeodesicClassify)?;
            members
                .iter()
                .map(|c| {
                    let vector = words
                        .iter()
                        .map(|w| {
                            let mapped = w.map_letters(|l| base_letter(&c.arrangement, l));
                            nu.mass(&mapped).expect("measure covers all words")
                        })
                        .collect();
                    Ok(Fingerprint {
                        g,
                        depth,
                        vector,
                        provenance: c.id,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(FingerprintSet {
        g,
        fingerprints: per_group.into_iter().flatten().collect(),
        truncated: enumeration.truncated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Equal,
    Disjoint,
    /// No match among the enumerated choices, but the enumeration was cut
    /// short by the budget.
    DisjointAtBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Genus,
    Fingerprint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub first: ChoiceId,
    pub second: ChoiceId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareVerdict {
    pub outcome: Outcome,
    pub genus_pair: (usize, usize),
    pub depth: usize,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Witness>,
    /// Deviation of the witness pair, or the closest approach between the
    /// two fingerprint sets; absent when the genus gate decides.
    pub max_deviation: Option<f64>,
    pub budget_truncated: bool,
    pub decided_at: Stage,
}

impl CompareVerdict {
    pub fn is_equal(&self) -> bool {
        self.outcome == Outcome::Equal
    }
}

pub fn compare(
    g1: &MultiGraph,
    g2: &MultiGraph,
    depth: usize,
    tol: f64,
    budget: usize,
) -> Result<CompareVerdict> {
    validate(g1).into_result()?;
    validate(g2).into_result()?;
    let genus_pair = (betti(g1)?, betti(g2)?);
    if genus_pair.0 != genus_pair.1 {
        return Ok(CompareVerdict {
            outcome: Outcome::Disjoint,
            genus_pair,
            depth,
            tol,
            witness: None,
            max_deviation: None,
            budget_truncated: false,
            decided_at: Stage::Genus,
        });
    }
    let a = fingerprint_set(g1, depth, budget)?;
    let b = fingerprint_set(g2, depth, budget)?;
    Ok(compare_sets(&a, &b, depth, tol))
}

/// Step two of [`compare`] on precomputed fingerprint sets of equal genus.
/// The witness is the lexicographically smallest matching index pair.
pub fn compare_sets(
    a: &FingerprintSet,
    b: &FingerprintSet,
    depth: usize,
    tol: f64,
) -> CompareVerdict {
    let truncated = a.truncated || b.truncated;
    let genus_pair = (a.g, b.g);
    if a.g != b.g {
        return CompareVerdict {
            outcome: Outcome::Disjoint,
            genus_pair,
            depth,
            tol,
            witness: None,
            max_deviation: None,
            budget_truncated: truncated,
            decided_at: Stage::Genus,
        };
    }
    let index = SortedIndex::new(&b.fingerprints);
    let found = a
        .fingerprints
        .par_iter()
        .enumerate()
        .find_map_first(|(i, f)| {
            index
                .window(f.vector[1], tol)
                .filter_map(|j| {
                    let dev = max_deviation(&f.vector, &b.fingerprints[j].vector, tol);
                    (dev <= tol).then_some((j, dev))
                })
                .min_by_key(|&(j, _)| j)
                .map(|(j, dev)| (i, j, dev))
        });
    match found {
        Some((i, j, dev)) => CompareVerdict {
            outcome: Outcome::Equal,
            genus_pair,
            depth,
            tol,
            witness: Some(Witness {
                first: a.fingerprints[i].provenance,
                second: b.fingerprints[j].provenance,
            }),
            max_deviation: Some(dev),
            budget_truncated: truncated,
            decided_at: Stage::Fingerprint,
        },
        None => CompareVerdict {
            outcome: if truncated {
                Outcome::DisjointAtBudget
            } else {
                Outcome::Disjoint
            },
            genus_pair,
            depth,
            tol,
            witness: None,
            max_deviation: Some(closest_approach(a, b, &index)),
            budget_truncated: truncated,
            decided_at: Stage::Fingerprint,
        },
    }
}

/// Fingerprints ordered by their first-letter mass, the coordinate used to
/// prune candidate pairs.
struct SortedIndex {
    keys: Vec<(f64, usize)>,
}

impl SortedIndex {
    fn new(fingerprints: &[Fingerprint]) -> Self {
        let mut keys: Vec<(f64, usize)> = fingerprints
            .iter()
            .enumerate()
            .map(|(j, f)| (f.vector[1], j))
            .collect();
        keys.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        Self { keys }
    }

    fn window(&self, center: f64, radius: f64) -> impl Iterator<Item = usize> + '_ {
        let lo = self.keys.partition_point(|k| k.0 < center - radius);
        self.keys[lo..]
            .iter()
            .take_while(move |k| k.0 <= center + radius)
            .map(|k| k.1)
    }
}

/// Smallest deviation over all pairs, by branch and bound on the first
/// coordinate.
fn closest_approach(a: &FingerprintSet, b: &FingerprintSet, index: &SortedIndex) -> f64 {
    let best_for = |f: &Fingerprint, mut best: f64| -> f64 {
        let x = f.vector[1];
        let start = index.keys.partition_point(|k| k.0 < x);
        // walk outwards from the insertion point in both directions
        let (mut lo, mut hi) = (start, start);
        loop {
            let down = lo.checked_sub(1).map(|i| (x - index.keys[i].0, i));
            let up = index.keys.get(hi).map(|k| (k.0 - x, hi));
            let next = match (down, up) {
                (Some(d), Some(u)) => {
                    if d.0 <= u.0 {
                        lo -= 1;
                        d
                    } else {
                        hi += 1;
                        u
                    }
                }
                (Some(d), None) => {
                    lo -= 1;
                    d
                }
                (None, Some(u)) => {
                    hi += 1;
                    u
                }
                (None, None) => break,
            };
            if next.0 >= best {
                break;
            }
            let j = index.keys[next.1].1;
            best = best.min(max_deviation(&f.vector, &b.fingerprints[j].vector, best));
        }
        best
    };
    a.fingerprints
        .par_iter()
        .map(|f| best_for(f, f64::INFINITY))
        .reduce(|| f64::INFINITY, f64::min)
}

pub const ISO_MAX_VERTICES: usize = 12;
pub const ISO_MAX_EDGES: usize = 20;

/// Exact multigraph isomorphism (edge lengths ignored) by backtracking over
/// vertex bijections that respect valency, loop counts and edge
/// multiplicities.
pub fn iso_oracle(g1: &MultiGraph, g2: &MultiGraph) -> Result<bool> {
    for g in [g1, g2] {
        if g.vertex_count() > ISO_MAX_VERTICES || g.edge_count() > ISO_MAX_EDGES {
            return Err(Error::SizeCap {
                vertices: g.vertex_count(),
                edges: g.edge_count(),
            });
        }
    }
    let n = g1.vertex_count();
    if n != g2.vertex_count() || g1.edge_count() != g2.edge_count() {
        return Ok(false);
    }
    let m1 = multiplicities(g1);
    let m2 = multiplicities(g2);
    let profile = |m: &Vec<Vec<usize>>, v: usize| -> (usize, usize) {
        (m[v].iter().sum::<usize>() + m[v][v], m[v][v])
    };
    let mut p1: Vec<_> = (0..n).map(|v| profile(&m1, v)).collect();
    let mut p2: Vec<_> = (0..n).map(|v| profile(&m2, v)).collect();
    let (q1, q2) = (p1.clone(), p2.clone());
    p1.sort_unstable();
    p2.sort_unstable();
    if p1 != p2 {
        return Ok(false);
    }
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    Ok(extend_iso(0, &m1, &m2, &q1, &q2, &mut map, &mut used))
}

fn multiplicities(g: &MultiGraph) -> Vec<Vec<usize>> {
    let n = g.vertex_count();
    let mut m = vec![vec![0; n]; n];
    for (u, v) in g.edges() {
        m[u.0][v.0] += 1;
        if u != v {
            m[v.0][u.0] += 1;
        }
    }
    m
}

fn extend_iso(
    v: usize,
    m1: &[Vec<usize>],
    m2: &[Vec<usize>],
    p1: &[(usize, usize)],
    p2: &[(usize, usize)],
    map: &mut [usize],
    used: &mut [bool],
) -> bool {
    let n = m1.len();
    if v == n {
        return true;
    }
    for w in 0..n {
        if used[w] || p1[v] != p2[w] {
            continue;
        }
        if (0..v).any(|u| m1[v][u] != m2[w][map[u]]) {
            continue;
        }
        map[v] = w;
        used[w] = true;
        if extend_iso(v + 1, m1, m2, p1, p2, map, used) {
            return true;
        }
        used[w] = false;
    }
    map[v] = usize::MAX;
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn rose_choice_count() {
        let e = enumerate_choices(&corpus::rose(2), 100).unwrap();
        assert_eq!(e.choices.len(), 8);
        assert!(!e.truncated);
        let single = enumerate_choices(&corpus::theta(), 0).unwrap();
        assert_eq!(single.choices.len(), 1);
        assert!(single.truncated);
        // theta: 2 origins x 3 trees x 8 arrangements
        assert_eq!(
            enumerate_choices(&corpus::theta(), 100)
                .unwrap()
                .choices
                .len(),
            48
        );
    }

    #[test]
    fn rose_fingerprint() {
        let p = crate::graph::canonical_presentation(&corpus::rose(2)).unwrap();
        let f = fingerprint(
            &p,
            2,
            ChoiceId {
                origin: 0,
                tree: 0,
                arrangement: 0,
            },
        )
        .unwrap();
        assert_eq!(f.vector.len(), fingerprint_len(2, 2));
        assert_eq!(f.vector[0], 1.0);
        for &x in &f.vector[1..5] {
            assert!((x - 0.25).abs() < 1e-14);
        }
        for &x in &f.vector[5..] {
            assert!((x - 1.0 / 12.0).abs() < 1e-14);
        }
    }

    #[test]
    fn relabeled_set_matches_direct_fingerprints() {
        let g = corpus::dumbbell();
        let set = fingerprint_set(&g, 3, 100).unwrap();
        let e = enumerate_choices(&g, 100).unwrap();
        for (c, f) in e.choices.iter().zip(&set.fingerprints) {
            let direct = fingerprint(&c.presentation(&g).unwrap(), 3, c.id).unwrap();
            assert!(direct.deviation(f) < 1e-12, "{:?}", c.id);
        }
    }

    #[test]
    fn oracle_examples() {
        let theta = corpus::theta();
        assert!(iso_oracle(&theta, &theta).unwrap());
        assert!(!iso_oracle(&theta, &corpus::dumbbell()).unwrap());
        let k4 = corpus::k4();
        let relabeled = k4.permuted(&[2, 0, 3, 1], &[5, 4, 3, 2, 1, 0], &[true; 6]);
        assert!(iso_oracle(&k4, &relabeled).unwrap());
        let big = corpus::rose(21);
        assert!(matches!(iso_oracle(&big, &big), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn verdict_examples() {
        let theta = corpus::theta();
        let relabeled = theta.permuted(&[1, 0], &[2, 0, 1], &[false, true, false]);
        let v = compare(&theta, &relabeled, 3, 1e-4, 100).unwrap();
        assert_eq!(v.outcome, Outcome::Equal);
        let v = compare(&theta, &corpus::dumbbell(), 3, 1e-4, 100).unwrap();
        assert_eq!(v.outcome, Outcome::Disjoint);
        assert!(v.max_deviation.unwrap() > 1e-4);
        let v = compare(&theta, &corpus::rose(3), 3, 1e-4, 100).unwrap();
        assert_eq!(v.decided_at, Stage::Genus);
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["outcome"], "disjoint");
        assert!(json.get("witness").is_none());
    }
}
