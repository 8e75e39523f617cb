//! Checks against independent brute-force computations.

use std::collections::{BTreeMap, HashMap, VecDeque};

use sgt_core::covering::{ball, paths_of_length, HashimotoMatrix, TreePath};
use sgt_core::graph::{reduce_darts, reverse_walk};
use sgt_core::spectral::{spectral_tail, GramSchmidtBasis, Symbol, ZetaSeries};
use sgt_core::*;

fn genus_two() -> Vec<MultiGraph> {
    corpus::small_multigraphs(4, 7, 2..=2)
}

/// Vertex of the covering tree reached by following `walk` step by step,
/// cancelling a step that undoes the previous one.
fn walk_in_cover(walk: &[Dart]) -> Vec<Dart> {
    let mut at: Vec<Dart> = Vec::new();
    for &d in walk {
        if at.last() == Some(&d.reverse()) {
            at.pop();
        } else {
            at.push(d);
        }
    }
    at
}

/// BFS distance from the root inside an explicit ball of the covering tree.
fn ball_distance(
    graph: &MultiGraph,
    origin: VertexId,
    radius: usize,
    target: &[Dart],
) -> Option<usize> {
    let vertices = ball(graph, origin, radius);
    let index: HashMap<Vec<Dart>, usize> = vertices
        .iter()
        .enumerate()
        .map(|(i, p)| (p.darts.clone(), i))
        .collect();
    let mut adjacency = vec![Vec::new(); vertices.len()];
    for (i, p) in vertices.iter().enumerate() {
        if let Some(j) = p.darts.split_last().map(|(_, rest)| index[rest]) {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
    }
    let mut dist = vec![usize::MAX; vertices.len()];
    dist[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    index.get(target).map(|&i| dist[i])
}

#[test]
fn displacement_matches_cover_distance() {
    let theta = corpus::theta();
    let p = canonical_presentation(&theta).unwrap();
    let w = ReducedWord::from_signed(&[1, -2]).unwrap();
    let raw: Vec<Dart> = w.letters().iter().flat_map(|&l| p.loop_rep(l)).collect();
    let target = walk_in_cover(&raw);
    assert_eq!(ball_distance(&theta, VertexId(0), 6, &target), Some(2));
    assert_eq!(displacement(&p, &w), 2);
    for g in genus_two() {
        let p = canonical_presentation(&g).unwrap();
        for w in ReducedWord::all_up_to(2, 3) {
            let raw: Vec<Dart> = w.letters().iter().flat_map(|&l| p.loop_rep(l)).collect();
            let target = walk_in_cover(&raw);
            if let Some(d) = ball_distance(&g, VertexId(0), 6, &target) {
                assert_eq!(displacement(&p, &w), d, "{w}");
            }
        }
    }
}

#[test]
fn loop_reps_compose_to_closed_non_backtracking_walks() {
    for g in genus_two() {
        for o in g.vertices() {
            let p = spanning_presentation(&g, o, &Arrangement::identity(2)).unwrap();
            for w in ReducedWord::all_up_to(2, 4) {
                let walk = p.word_walk(&w);
                assert!(walk.windows(2).all(|x| x[1] != x[0].reverse()));
                let end = walk.last().map_or(o, |&d| g.head(d));
                assert_eq!(end, o);
                if let Some(&first) = walk.first() {
                    assert_eq!(g.tail(first), o);
                }
                assert_eq!(walk.is_empty(), w.is_empty());
            }
        }
    }
}

#[test]
fn sphere_sizes_match_hashimoto_powers() {
    for g in corpus::small_multigraphs(4, 7, 2..=3) {
        let b = HashimotoMatrix::new(&g).to_dense();
        for o in g.vertices() {
            let sizes = sphere_sizes(&g, o, 6);
            let mut row: Vec<u128> = vec![0; g.dart_count()];
            for &d in g.darts_at(o) {
                row[d.0] = 1;
            }
            assert_eq!(sizes[0], 1);
            for &size in &sizes[1..=6] {
                assert_eq!(size, row.iter().sum::<u128>());
                row = (0..row.len())
                    .map(|j| (0..row.len()).map(|i| row[i] * b[i][j] as u128).sum())
                    .collect();
            }
            for (k, &size) in sizes.iter().enumerate().take(5) {
                assert_eq!(size, paths_of_length(&g, o, k).len() as u128);
            }
        }
    }
}

#[test]
fn growth_rate_matches_critical_exponent() {
    for g in genus_two() {
        let delta = critical_exponent(&g).unwrap();
        let s = sphere_sizes(&g, VertexId(0), 20);
        let slope = (s[20] as f64).ln() / 20.0;
        assert!(
            (slope - delta * g.edge_length()).abs() <= 0.05,
            "{slope} {delta}"
        );
    }
}

#[test]
fn regular_graph_exponents_and_scaling() {
    for g in 2..=6 {
        let rose = corpus::rose(g);
        assert!((critical_exponent(&rose).unwrap() - ((2 * g - 1) as f64).ln()).abs() < 1e-10);
        let scaled = rose.with_edge_length(2.0).unwrap();
        assert!(
            (critical_exponent(&scaled).unwrap() - ((2 * g - 1) as f64).ln() / 2.0).abs() < 1e-10
        );
    }
}

#[test]
fn poincare_partial_totals_grow_toward_the_critical_exponent() {
    let rose = canonical_presentation(&corpus::rose(2)).unwrap();
    let delta = 3f64.ln();
    let mut last = 0.0;
    for k in 1..=4 {
        let s = delta * (1.0 + 0.5f64.powi(k));
        let total = poincare_partial(&rose, s, 10, 1).unwrap().total;
        assert!(total > last);
        last = total;
    }
    // restricted sums add up to the total minus the identity
    let part = poincare_partial(&rose, delta + 0.2, 8, 1).unwrap();
    let restricted: f64 = part.by_cylinder.values().sum();
    assert!((restricted + 1.0 - part.total).abs() < 1e-9 * part.total);
}

#[test]
fn dual_method_tree_measures_agree() {
    for g in corpus::small_multigraphs(4, 7, 2..=3) {
        for o in g.vertices() {
            let a = ps_measure_tree(&g, o, 3, TreeMethod::Perron).unwrap();
            let b = ps_measure_tree(&g, o, 3, TreeMethod::Poincare).unwrap();
            assert!(a.max_difference(&b).unwrap() < 1e-4);
            assert!(a.additivity_defect() <= 1e-10);
            assert!(b.additivity_defect() <= 1e-10);
            assert!((a.mass(&[]).unwrap() - 1.0).abs() < 1e-12);
            assert!(a.min_mass() > 0.0);
        }
    }
}

#[test]
fn dual_method_word_measures_agree() {
    for g in corpus::small_multigraphs(4, 7, 2..=3) {
        let p = canonical_presentation(&g).unwrap();
        let a = pullback_measure(&p, 3, BoundaryMethod::GeodesicClassify).unwrap();
        let b = pullback_measure(&p, 3, BoundaryMethod::RestrictedPoincare).unwrap();
        let (a, b) = (a.as_cylinder_measure(), b.as_cylinder_measure());
        assert!(a.max_difference(b).unwrap() < 1e-3);
        assert!(a.additivity_defect() <= 1e-10);
        assert!(b.additivity_defect() <= 1e-10);
    }
}

/// Normalized orbit sums `exp(-s d(x, gamma O))` split by the first `depth`
/// darts of the geodesic from `x`, with `x = base O` and words of length
/// `<= cutoff`.
fn orbit_distribution(
    p: &Presentation,
    base: &ReducedWord,
    s: f64,
    cutoff: usize,
    depth: usize,
) -> BTreeMap<Vec<Dart>, f64> {
    let from = reverse_walk(&p.word_walk(base));
    let mut sums: BTreeMap<Vec<Dart>, f64> = BTreeMap::new();
    let mut total = 0.0;
    for w in ReducedWord::all_up_to(p.genus(), cutoff) {
        let rel = reduce_darts(from.iter().copied().chain(p.word_walk(&w)));
        let weight = (-s * rel.len() as f64).exp();
        total += weight;
        if rel.len() >= depth {
            *sums.entry(rel[..depth].to_vec()).or_insert(0.0) += weight;
        }
    }
    sums.values_mut().for_each(|v| *v /= total);
    sums
}

#[test]
fn orbit_measures_are_deck_invariant() {
    // seen from gamma O, the orbit is the same set of points; cylinders at
    // gamma O are the gamma-translates of those at O and project to the
    // same dart paths
    for g in [corpus::theta(), corpus::dumbbell(), corpus::rose(2)] {
        let p = canonical_presentation(&g).unwrap();
        let s = critical_exponent(&g).unwrap() + 1.5;
        let at_o = orbit_distribution(&p, &ReducedWord::empty(), s, 11, 2);
        for gamma in [[1], [2], [-1]] {
            let gamma = ReducedWord::from_signed(&gamma).unwrap();
            let at_gamma = orbit_distribution(&p, &gamma, s, 11, 2);
            for (k, v) in &at_o {
                assert!((v - at_gamma[k]).abs() < 1e-6, "{k:?}");
            }
        }
    }
}

#[test]
fn conformality_under_origin_change() {
    for g in corpus::small_multigraphs(4, 7, 2..=2) {
        let o = VertexId(0);
        for method in [TreeMethod::Perron, TreeMethod::Poincare] {
            let mu = ps_measure_tree(&g, o, 4, method).unwrap();
            let delta = mu.delta;
            for &d0 in g.darts_at(o) {
                let other = TreePath::new(&g, o, vec![d0]).unwrap();
                let mu_other = ps_measure_tree(&g, g.head(d0), 5, method).unwrap();
                let leaves = paths_of_length(&g, o, 4);
                let weights: Vec<f64> = leaves
                    .iter()
                    .map(|p| {
                        let b = busemann(&other, p).unwrap();
                        mu.tree_mass(&p.darts).unwrap()
                            * (-delta * g.edge_length() * b as f64).exp()
                    })
                    .collect();
                let z: f64 = weights.iter().sum();
                for (p, w) in leaves.iter().zip(&weights) {
                    // the same ray seen from the neighbouring vertex
                    let from_other =
                        reduce_darts([d0.reverse()].into_iter().chain(p.darts.iter().copied()));
                    let m = mu_other.tree_mass(&from_other).unwrap();
                    assert!((m - w / z).abs() <= 1e-3 * m, "{method:?} {:?}", p.darts);
                }
            }
        }
    }
}

#[test]
fn tripod_center_minimizes_distance_to_geodesics() {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for (name, g) in corpus::named() {
        let o = VertexId(0);
        let leaves = paths_of_length(&g, o, 4);
        let vertices = ball(&g, o, 4);
        let mut triples = Vec::new();
        for i in 0..leaves.len() {
            for j in i + 1..leaves.len() {
                for k in j + 1..leaves.len() {
                    triples.push((i, j, k));
                }
            }
        }
        triples.shuffle(&mut rng);
        triples.truncate(1500);
        for (i, j, k) in triples {
            let (a, b, c) = (&leaves[i], &leaves[j], &leaves[k]);
            let to_geodesic = |x: &TreePath, p: &TreePath, q: &TreePath| {
                (x.distance(p) + x.distance(q) - p.distance(q)) / 2
            };
            let score =
                |x: &TreePath| to_geodesic(x, a, b) + to_geodesic(x, a, c) + to_geodesic(x, b, c);
            let best = vertices.iter().min_by_key(|x| score(x)).unwrap();
            assert_eq!(score(best), 0);
            assert_eq!(vertices.iter().filter(|x| score(x) == 0).count(), 1);
            let center = tripod_center(a, b, c).unwrap();
            assert_eq!(&center, best, "{name}");
            assert_eq!(tripod_center(c, a, b).unwrap(), center);
            assert_eq!(tripod_center(b, c, a).unwrap(), center);
        }
    }
}

#[test]
fn basis_independence_of_detail_coefficients() {
    for g in corpus::small_multigraphs(4, 7, 2..=3) {
        let genus = betti(&g).unwrap();
        let nu = pullback_measure(
            &canonical_presentation(&g).unwrap(),
            3,
            BoundaryMethod::GeodesicClassify,
        )
        .unwrap();
        let basis = GramSchmidtBasis::new(&nu, 3).unwrap();
        for w in ReducedWord::all_up_to(genus, 3) {
            let a = Symbol::indicator(w.clone());
            let x = detail_coefficients(&a, &nu, 3).unwrap();
            let y = basis.coefficients(&a).unwrap();
            for (u, v) in x.iter().zip(&y) {
                assert!((u - v).abs() <= 1e-9, "{w}: {x:?} {y:?}");
            }
        }
    }
}

#[test]
fn unit_series_matches_closed_form_on_grid() {
    for g in 2..=4 {
        let series = ZetaSeries::one(g, 25);
        for k in 0..=25 {
            let s = -3.0 + 0.1 * k as f64;
            let v = series.eval(s).unwrap();
            let closed = zeta_one_closed(g, s).unwrap();
            assert!((v.value - closed).abs() <= v.tail_bound + 1e-15 * closed);
            assert!((v.tail_bound - spectral_tail(g, s, 25)).abs() == 0.0);
        }
    }
}

#[test]
fn zeta_far_left_recovers_cylinder_masses() {
    for (_, g) in corpus::named() {
        let genus = betti(&g).unwrap();
        let nu = pullback_measure(
            &canonical_presentation(&g).unwrap(),
            2,
            BoundaryMethod::GeodesicClassify,
        )
        .unwrap();
        for w in ReducedWord::all_up_to(genus, 2) {
            let v = zeta_eval(&Symbol::indicator(w.clone()), &nu, -30.0, 25).unwrap();
            assert!((v.value - nu.mass(&w).unwrap()).abs() < 1e-8);
        }
    }
}

#[test]
fn compare_is_symmetric_and_reflexive() {
    let graphs = corpus::small_multigraphs(3, 5, 2..=3);
    for a in &graphs {
        let v = compare(a, a, 3, 1e-4, usize::MAX).unwrap();
        assert!(v.is_equal());
        let w = v.witness.unwrap();
        assert_eq!(w.first, w.second);
        for b in &graphs {
            let x = compare(a, b, 3, 1e-4, usize::MAX).unwrap();
            let y = compare(b, a, 3, 1e-4, usize::MAX).unwrap();
            assert_eq!(x.outcome, y.outcome);
            if x.genus_pair.0 != x.genus_pair.1 {
                assert_eq!(x.decided_at, compare::Stage::Genus);
            }
        }
    }
}

#[test]
fn fingerprints_are_scale_invariant() {
    for g in corpus::small_multigraphs(4, 7, 2..=3) {
        let p1 = canonical_presentation(&g).unwrap();
        let p2 = canonical_presentation(&g.with_edge_length(2.0).unwrap()).unwrap();
        let id = ChoiceId {
            origin: 0,
            tree: 0,
            arrangement: 0,
        };
        let a = fingerprint(&p1, 3, id).unwrap();
        let b = fingerprint(&p2, 3, id).unwrap();
        assert!(a.deviation(&b) <= 1e-9);
    }
}

mod common;

#[test]
fn transported_presentations_share_fingerprints() {
    for g in corpus::small_multigraphs(4, 7, 2..=3) {
        let (vp, ep, flips) = common::shuffle(g.vertex_count(), g.edge_count());
        let p = canonical_presentation(&g).unwrap();
        let (_, q) = common::transport(&p, &vp, &ep, &flips);
        let id = ChoiceId {
            origin: 0,
            tree: 0,
            arrangement: 0,
        };
        let a = fingerprint(&p, 3, id).unwrap();
        let b = fingerprint(&q, 3, id).unwrap();
        assert!(a.deviation(&b) <= 1e-9);
        let r = reconstruct_ball(&p, &q, 2).unwrap();
        assert!(r.is_success());
    }
}
