//! The boundary identification between reduced words and rays of the
//! covering tree, the pulled-back measure on word cylinders, and finite
//! boundary geometry: visual metric, cross-ratio, tripod centers and
//! reconstruction of tree balls from a boundary map.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::covering::{
    extrapolate_last_three, perron, ExtrapolationConfig, HashimotoMatrix, TreePath,
};
use crate::error::{Error, Result};
use crate::graph::{validate, Dart, Letter, Presentation, ReducedWord};
use crate::measure::{close_under_prefixes, CylinderMeasure, PulledBackMeasure, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMethod {
    /// Poincare sums over group elements whose reduced word has the given
    /// prefix, extrapolated to the critical exponent.
    RestrictedPoincare,
    /// Tree-side Markov measure pushed through the ray-to-word map.
    GeodesicClassify,
}

/// `nu(cyl(w))` for every reduced word with `|w| <= depth`.
pub fn pullback_measure(
    presentation: &Presentation,
    depth: usize,
    method: BoundaryMethod,
) -> Result<PulledBackMeasure> {
    pullback_measure_with(presentation, depth, method, &ExtrapolationConfig::default())
}

pub fn pullback_measure_with(
    presentation: &Presentation,
    depth: usize,
    method: BoundaryMethod,
    config: &ExtrapolationConfig,
) -> Result<PulledBackMeasure> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let graph = presentation.graph();
    validate(graph).into_result()?;
    let matrix = HashimotoMatrix::new(graph);
    let perron_data = perron(&matrix)?;
    let delta = perron_data.value.ln() / graph.edge_length();
    let masses = match method {
        BoundaryMethod::GeodesicClassify => {
            geodesic_classify(presentation, depth, &matrix, &perron_data.vector)?
        }
        BoundaryMethod::RestrictedPoincare => {
            let iterates: Vec<BTreeMap<Vec<i64>, f64>> = config
                .schedule(delta)
                .into_iter()
                .map(|s| {
                    let cutoff = config.cutoff(s, delta, graph.edge_length());
                    restricted_poincare_leaves(presentation, depth, s, cutoff)
                })
                .collect();
            close_under_prefixes(&extrapolate_last_three(&iterates, config.cauchy_gate)?)
        }
    };
    Ok(PulledBackMeasure(CylinderMeasure {
        side: Side::FreeGroup,
        depth,
        edge_length: graph.edge_length(),
        delta,
        masses,
    }))
}

/// Exact push-forward of the Perron Markov measure on rays to word
/// cylinders. A ray reads a letter each time it crosses a non-tree dart, so
/// the state is (letters read so far, current dart); runs inside the
/// spanning tree are bounded, so every state resolves in finitely many
/// steps.
fn geodesic_classify(
    presentation: &Presentation,
    depth: usize,
    matrix: &HashimotoMatrix,
    v: &[f64],
) -> Result<BTreeMap<Vec<i64>, f64>> {
    let graph = presentation.graph();
    let origin = presentation.origin();
    let mut leaves: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let mut states: BTreeMap<(Vec<i64>, Dart), f64> = BTreeMap::new();
    let arrive = |prefix: &[i64],
                  d: Dart,
                  mass: f64,
                  states: &mut BTreeMap<(Vec<i64>, Dart), f64>,
                  leaves: &mut BTreeMap<Vec<i64>, f64>| {
        let mut key = prefix.to_vec();
        if let Some(l) = presentation.letter_of_dart(d) {
            key.push(l.0 as i64);
        }
        if key.len() == depth {
            *leaves.entry(key).or_insert(0.0) += mass;
        } else {
            *states.entry((key, d)).or_insert(0.0) += mass;
        }
    };
    let z: f64 = graph.darts_at(origin).iter().map(|d| v[d.0]).sum();
    for &d in graph.darts_at(origin) {
        arrive(&[], d, v[d.0] / z, &mut states, &mut leaves);
    }
    let cap = depth * graph.vertex_count() + 1;
    for _ in 0..cap {
        if states.is_empty() {
            break;
        }
        let current = std::mem::take(&mut states);
        for ((prefix, d), mass) in current {
            let succ = matrix.successors(d);
            let row: f64 = succ.iter().map(|e| v[e.0]).sum();
            for &e in succ {
                arrive(&prefix, e, mass * v[e.0] / row, &mut states, &mut leaves);
            }
        }
    }
    if !states.is_empty() {
        return Err(Error::Unstable {
            mass: states.values().sum(),
        });
    }
    // words that no ray reads still have a (zero) entry
    for w in ReducedWord::all_of_length(presentation.genus(), depth) {
        leaves.entry(w.to_signed()).or_insert(0.0);
    }
    Ok(close_under_prefixes(&leaves))
}

/// Letter-level transfer data at exponent `s`. A reduced word
/// `a_1 .. a_n` has displacement
/// `d(O, u_1) + 1 + sum_i (d(v_{i-1}, u_i) + 1) + d(v_n, O)` where `u_a -> v_a` is the generator dart of `a` and `d` is
/// the spanning-tree distance.
struct LetterTransfer {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    step: Vec<Vec<f64>>,
}

impl LetterTransfer {
    fn new(presentation: &Presentation, s: f64) -> Self {
        let graph = presentation.graph();
        let w = |n: usize| (-s * graph.edge_length() * n as f64).exp();
        let letters: Vec<Letter> = Letter::alphabet(presentation.genus()).collect();
        let ends: Vec<_> = letters
            .iter()
            .map(|&l| {
                let d = presentation.dart_of_letter(l);
                (graph.tail(d), graph.head(d))
            })
            .collect();
        let o = presentation.origin();
        let alpha = ends
            .iter()
            .map(|&(u, _)| w(presentation.tree_distance(o, u) + 1))
            .collect();
        let beta = ends
            .iter()
            .map(|&(_, v)| w(presentation.tree_distance(v, o)))
            .collect();
        let step = letters
            .iter()
            .zip(&ends)
            .map(|(&a, &(_, va))| {
                letters
                    .iter()
                    .zip(&ends)
                    .map(|(&b, &(ub, _))| {
                        if b == a.inverse() {
                            0.0
                        } else {
                            w(presentation.tree_distance(va, ub) + 1)
                        }
                    })
                    .collect()
            })
            .collect();
        Self { alpha, beta, step }
    }
}

/// Poincare sums over words of length `<= cutoff` restricted to each
/// depth-`depth` word cylinder, divided by the unrestricted sum.
fn restricted_poincare_leaves(
    presentation: &Presentation,
    depth: usize,
    s: f64,
    cutoff: usize,
) -> BTreeMap<Vec<i64>, f64> {
    let t = LetterTransfer::new(presentation, s);
    let k = t.alpha.len();
    // continuation sums: tails[j][a] = sum over reduced continuations of
    // length <= j after a final letter a
    let mut g = t.beta.clone();
    let mut at_depth = vec![0.0; k];
    let mut at_one = vec![0.0; k];
    let keep_depth = cutoff.saturating_sub(depth);
    let keep_one = cutoff.saturating_sub(1);
    for j in 0..=keep_one {
        if j > 0 {
            g = (0..k)
                .map(|a| t.beta[a] + (0..k).map(|b| t.step[a][b] * g[b]).sum::<f64>())
                .collect();
        }
        if j == keep_depth {
            at_depth = g.clone();
        }
        if j == keep_one {
            at_one = g.clone();
        }
    }
    let total = 1.0 + (0..k).map(|a| t.alpha[a] * at_one[a]).sum::<f64>();
    ReducedWord::all_of_length(presentation.genus(), depth)
        .into_iter()
        .map(|w| {
            let ranks: Vec<usize> = w.letters().iter().map(|l| l.rank()).collect();
            let mut weight = t.alpha[ranks[0]];
            for pair in ranks.windows(2) {
                weight *= t.step[pair[0]][pair[1]];
            }
            let last = *ranks.last().expect("depth >= 1");
            let mass = if cutoff >= depth {
                weight * at_depth[last] / total
            } else {
                0.0
            };
            (w.to_signed(), mass)
        })
        .collect()
}

/// Word-side prefix of the tree ray that reads `letters`: the non-backtracking
/// walk `T(O, u_1) e_1 T(v_1, u_2) e_2 ... e_k`.
pub fn ray_prefix(presentation: &Presentation, letters: &[Letter]) -> Vec<Dart> {
    let graph = presentation.graph();
    let mut at = presentation.origin();
    let mut walk = Vec::new();
    for &l in letters {
        let d = presentation.dart_of_letter(l);
        walk.extend(presentation.tree_path(at, graph.tail(d)));
        walk.push(d);
        at = graph.head(d);
    }
    walk
}

/// A finite approximation of a boundary point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "side", content = "prefix", rename_all = "lowercase")]
pub enum BoundaryWordApprox {
    Tree(TreePath),
    #[serde(rename = "freegroup")]
    FreeGroup(ReducedWord),
}

impl BoundaryWordApprox {
    pub fn side(&self) -> Side {
        match self {
            Self::Tree(_) => Side::Tree,
            Self::FreeGroup(_) => Side::FreeGroup,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Tree(p) => p.len(),
            Self::FreeGroup(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Length of the common prefix; errors when one approximation extends
    /// the other, since the two points are then not yet separated.
    pub fn separation(&self, other: &Self) -> Result<usize> {
        let n = match (self, other) {
            (Self::Tree(a), Self::Tree(b)) => {
                if a.start != b.start {
                    return Err(Error::InvalidArgument("rays from different origins".into()));
                }
                a.common_prefix(b)
            }
            (Self::FreeGroup(a), Self::FreeGroup(b)) => a
                .letters()
                .iter()
                .zip(b.letters())
                .take_while(|(x, y)| x == y)
                .count(),
            _ => {
                return Err(Error::InvalidArgument(
                    "boundary points on different sides".into(),
                ))
            }
        };
        if n == self.len() || n == other.len() {
            return Err(Error::ExtendPrefix(format!(
                "prefixes of length {} and {} agree on their first {n} steps",
                self.len(),
                other.len()
            )));
        }
        Ok(n)
    }
}

/// Visual distance `2^-n`, `n` the length of the common prefix.
pub fn boundary_distance(a: &BoundaryWordApprox, b: &BoundaryWordApprox) -> Result<f64> {
    Ok((-(a.separation(b)? as f64)).exp2())
}

/// Base-2 logarithm of the cross-ratio
/// `[d(x3,x1) / d(x3,x2)] * [d(x4,x2) / d(x4,x1)]`.
pub fn cross_ratio_log2(
    x1: &BoundaryWordApprox,
    x2: &BoundaryWordApprox,
    x3: &BoundaryWordApprox,
    x4: &BoundaryWordApprox,
) -> Result<i64> {
    let n = |a: &BoundaryWordApprox, b: &BoundaryWordApprox| a.separation(b).map(|n| n as i64);
    // every pair must be determinate, including the two unused ones
    n(x1, x2)?;
    n(x3, x4)?;
    Ok(n(x3, x2)? + n(x4, x1)? - n(x3, x1)? - n(x4, x2)?)
}

pub fn cross_ratio(
    x1: &BoundaryWordApprox,
    x2: &BoundaryWordApprox,
    x3: &BoundaryWordApprox,
    x4: &BoundaryWordApprox,
) -> Result<f64> {
    Ok((cross_ratio_log2(x1, x2, x3, x4)? as f64).exp2())
}

/// The cover vertex where the geodesics between three boundary points meet:
/// the branch point of the pair with the longest common prefix.
pub fn tripod_center(x1: &TreePath, x2: &TreePath, x3: &TreePath) -> Result<TreePath> {
    let pts = [
        BoundaryWordApprox::Tree(x1.clone()),
        BoundaryWordApprox::Tree(x2.clone()),
        BoundaryWordApprox::Tree(x3.clone()),
    ];
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut best = (0, 0);
    for (i, j) in pairs {
        let n = pts[i].separation(&pts[j])?;
        if n >= best.0 {
            best = (n, i);
        }
    }
    let source = [x1, x2, x3][best.1];
    Ok(source.prefix(best.0))
}

/// Outcome of rebuilding a ball of the source tree from a boundary map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum Reconstruction {
    Success {
        map: Vec<(TreePath, TreePath)>,
    },
    Failure {
        witnesses: Vec<ReconstructionWitness>,
    },
}

impl Reconstruction {
    pub fn is_success(&self) -> bool {
        matches!(self, Self::Success { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReconstructionWitness {
    /// Two witness triples through one vertex give different centers.
    InconsistentCenter {
        vertex: TreePath,
        first: TreePath,
        second: TreePath,
    },
    /// Adjacent vertices whose images are not adjacent.
    AdjacencyBroken {
        a: TreePath,
        b: TreePath,
        image_a: TreePath,
        image_b: TreePath,
    },
    /// Distinct vertices with the same image.
    NotInjective {
        a: TreePath,
        b: TreePath,
        image: TreePath,
    },
}

const RAY_EXTENSION_CAP: usize = 256;
const WITNESS_CAP: usize = 16;

/// Maps every vertex of the radius-`radius` ball of the source tree to the
/// tripod center of the images of boundary rays through it, where rays are
/// carried across by reading their letters in `source` and replaying them
/// in `target`. Succeeds iff the map is well defined, injective and
/// preserves adjacency.
pub fn reconstruct_ball(
    source: &Presentation,
    target: &Presentation,
    radius: usize,
) -> Result<Reconstruction> {
    if source.genus() != target.genus() {
        return Err(Error::InvalidArgument(format!(
            "genus {} and {} differ",
            source.genus(),
            target.genus()
        )));
    }
    let sg = source.graph();
    let ball = crate::covering::ball(sg, source.origin(), radius);
    let mut witnesses = Vec::new();
    let mut map: Vec<(TreePath, TreePath)> = Vec::with_capacity(ball.len());
    for x in &ball {
        let rays = rays_through(source, x);
        let mut center: Option<TreePath> = None;
        'triples: for (i, j, k) in witness_triples(&rays) {
            let c = image_center(source, target, [&rays[i], &rays[j], &rays[k]])?;
            match &center {
                None => center = Some(c),
                Some(first) if *first != c => {
                    witnesses.push(ReconstructionWitness::InconsistentCenter {
                        vertex: x.clone(),
                        first: first.clone(),
                        second: c,
                    });
                    break 'triples;
                }
                Some(_) => {}
            }
        }
        map.push((
            x.clone(),
            center.expect("every vertex has a witness triple"),
        ));
        if witnesses.len() >= WITNESS_CAP {
            return Ok(Reconstruction::Failure { witnesses });
        }
    }
    let image: BTreeMap<&TreePath, &TreePath> = map.iter().map(|(a, b)| (a, b)).collect();
    for (x, fx) in &map {
        if x.is_empty() {
            continue;
        }
        let parent = x.prefix(x.len() - 1);
        let fp = image[&parent];
        if fx.distance(fp) != 1 {
            witnesses.push(ReconstructionWitness::AdjacencyBroken {
                a: parent,
                b: x.clone(),
                image_a: fp.clone(),
                image_b: fx.clone(),
            });
        }
    }
    let mut seen: BTreeMap<&TreePath, &TreePath> = BTreeMap::new();
    for (x, fx) in &map {
        if let Some(prev) = seen.insert(fx, x) {
            witnesses.push(ReconstructionWitness::NotInjective {
                a: prev.clone(),
                b: x.clone(),
                image: fx.clone(),
            });
        }
    }
    witnesses.truncate(WITNESS_CAP);
    if witnesses.is_empty() {
        Ok(Reconstruction::Success { map })
    } else {
        Ok(Reconstruction::Failure { witnesses })
    }
}

/// One ray per direction at the end of `x`: forward through each
/// continuation, and backward through each sibling branch at the parent.
/// Forward rays come first; `RayDirection` tells them apart.
fn rays_through(presentation: &Presentation, x: &TreePath) -> Vec<(RayDirection, TreePath)> {
    let graph = presentation.graph();
    let mut rays = Vec::new();
    for d in x.continuations(graph) {
        rays.push((RayDirection::Forward, x.extended(d)));
    }
    if let Some(&last) = x.darts.last() {
        let parent = x.prefix(x.len() - 1);
        for d in parent.continuations(graph) {
            if d != last {
                rays.push((RayDirection::Backward, parent.extended(d)));
            }
        }
    }
    rays
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RayDirection {
    Forward,
    Backward,
}

/// Index triples of rays in three distinct directions at the vertex: all
/// rays that branch off behind it share the backward direction.
fn witness_triples(rays: &[(RayDirection, TreePath)]) -> Vec<(usize, usize, usize)> {
    let n = rays.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let backward = [i, j, k]
                    .iter()
                    .filter(|&&t| rays[t].0 == RayDirection::Backward)
                    .count();
                if backward <= 1 {
                    out.push((i, j, k));
                }
            }
        }
    }
    out
}

/// Extends the three source rays (first continuation each step) until their
/// target images are pairwise separated, then takes the tripod center.
fn image_center(
    source: &Presentation,
    target: &Presentation,
    rays: [&(RayDirection, TreePath); 3],
) -> Result<TreePath> {
    let sg = source.graph();
    let mut paths: Vec<TreePath> = rays.iter().map(|(_, p)| p.clone()).collect();
    for _ in 0..RAY_EXTENSION_CAP {
        let images: Vec<TreePath> = paths
            .iter()
            .map(|p| {
                let letters = source.read_letters(&p.darts);
                TreePath {
                    start: target.origin(),
                    darts: ray_prefix(target, letters.letters()),
                }
            })
            .collect();
        match tripod_center(&images[0], &images[1], &images[2]) {
            Ok(c) => return Ok(c),
            Err(Error::ExtendPrefix(_)) => {
                for p in &mut paths {
                    let next = p.continuations(sg)[0];
                    p.darts.push(next);
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::ExtendPrefix(format!(
        "images not separated after {RAY_EXTENSION_CAP} extensions"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::graph::{canonical_presentation, spanning_presentation, Arrangement, VertexId};

    fn word(letters: &[i32]) -> BoundaryWordApprox {
        BoundaryWordApprox::FreeGroup(ReducedWord::from_signed(letters).unwrap())
    }

    #[test]
    fn rose_pullback_is_uniform() {
        for g in 2..=3 {
            let p = canonical_presentation(&corpus::rose(g)).unwrap();
            for method in [
                BoundaryMethod::GeodesicClassify,
                BoundaryMethod::RestrictedPoincare,
            ] {
                let nu = pullback_measure(&p, 3, method).unwrap();
                for w in ReducedWord::all_up_to(g, 3) {
                    let expected = if w.is_empty() {
                        1.0
                    } else {
                        1.0 / (2.0 * g as f64 * ((2 * g - 1) as f64).powi(w.len() as i32 - 1))
                    };
                    assert!(
                        (nu.mass(&w).unwrap() - expected).abs() < 1e-9,
                        "{method:?} {w}"
                    );
                }
            }
        }
    }

    #[test]
    fn theta_methods_agree() {
        let p = canonical_presentation(&corpus::theta()).unwrap();
        let a = pullback_measure(&p, 2, BoundaryMethod::GeodesicClassify).unwrap();
        let b = pullback_measure(&p, 2, BoundaryMethod::RestrictedPoincare).unwrap();
        let diff = a
            .as_cylinder_measure()
            .max_difference(b.as_cylinder_measure())
            .unwrap();
        assert!(diff < 1e-3, "{diff}");
        let level1: f64 = a.as_cylinder_measure().level(1).map(|(_, m)| m).sum();
        assert!((level1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            boundary_distance(&word(&[1, 2]), &word(&[2, 1])).unwrap(),
            1.0
        );
        assert_eq!(
            boundary_distance(&word(&[1, 2, 1, 1]), &word(&[1, 2, 1, -2])).unwrap(),
            0.125
        );
        assert!(matches!(
            boundary_distance(&word(&[1, 2]), &word(&[1, 2])),
            Err(Error::ExtendPrefix(_))
        ));
        assert!(matches!(
            boundary_distance(&word(&[1]), &word(&[1, 2])),
            Err(Error::ExtendPrefix(_))
        ));
    }

    #[test]
    fn cross_ratio_on_rose() {
        let (a, b, c, d) = (
            word(&[1, 1]),
            word(&[2, 2]),
            word(&[-1, -1]),
            word(&[-2, -2]),
        );
        // all pairs separate at the origin
        assert_eq!(cross_ratio(&a, &b, &c, &d).unwrap(), 1.0);
        let (a, b, c, d) = (
            word(&[1, 1, 1]),
            word(&[1, 2, 2]),
            word(&[1, 1, 2]),
            word(&[2, 2, 2]),
        );
        // n31 = 2, n32 = 1, n41 = 0, n42 = 0
        assert_eq!(cross_ratio_log2(&a, &b, &c, &d).unwrap(), -1);
        assert_eq!(cross_ratio_log2(&b, &a, &c, &d).unwrap(), 1);
    }

    #[test]
    fn tripod_examples() {
        let g = corpus::rose(2);
        let o = VertexId(0);
        let path =
            |d: &[usize]| TreePath::new(&g, o, d.iter().map(|&i| Dart(i)).collect()).unwrap();
        let (a, b, c) = (path(&[0, 0]), path(&[2, 2]), path(&[1, 1]));
        assert_eq!(tripod_center(&a, &b, &c).unwrap(), TreePath::root(o));
        let (a, b, c) = (path(&[0, 0, 2]), path(&[0, 0, 3]), path(&[2]));
        assert_eq!(tripod_center(&a, &b, &c).unwrap(), path(&[0, 0]));
        assert_eq!(tripod_center(&c, &a, &b).unwrap(), path(&[0, 0]));
    }

    #[test]
    fn reconstruct_identity_is_identity() {
        for (name, g) in corpus::named() {
            let p = canonical_presentation(&g).unwrap();
            match reconstruct_ball(&p, &p, 2).unwrap() {
                Reconstruction::Success { map } => {
                    assert!(map.iter().all(|(a, b)| a == b), "{name}");
                }
                other => panic!("{name}: {other:?}"),
            }
        }
    }

    #[test]
    fn reconstruct_rose_swap_is_relabeling() {
        let g = corpus::rose(2);
        let id = canonical_presentation(&g).unwrap();
        let swap = spanning_presentation(
            &g,
            VertexId(0),
            &Arrangement {
                order: vec![1, 0],
                flips: 0,
            },
        )
        .unwrap();
        let Reconstruction::Success { map } = reconstruct_ball(&id, &swap, 3).unwrap() else {
            panic!("swap should reconstruct");
        };
        // loop 0 (darts 0, 1) and loop 1 (darts 2, 3) trade places
        for (a, b) in map {
            let relabeled: Vec<Dart> = a.darts.iter().map(|d| Dart(d.0 ^ 2)).collect();
            assert_eq!(b.darts, relabeled);
        }
    }

    #[test]
    fn theta_and_dumbbell_do_not_reconstruct() {
        let t = canonical_presentation(&corpus::theta()).unwrap();
        let d = canonical_presentation(&corpus::dumbbell()).unwrap();
        let r = reconstruct_ball(&t, &d, 3).unwrap();
        let Reconstruction::Failure { witnesses } = r else {
            panic!("expected failure");
        };
        assert!(!witnesses.is_empty());
    }
}
