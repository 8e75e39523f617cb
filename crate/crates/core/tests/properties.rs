//! Randomized invariants across the pipeline.

use proptest::prelude::*;
use sgt_core::boundary::BoundaryWordApprox;
use sgt_core::spectral::{cylinder_average_sum, Symbol};
use sgt_core::*;

fn corpus() -> Vec<MultiGraph> {
    corpus::small_multigraphs(4, 7, 2..=3)
}

fn letters(g: i32, max_len: usize) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec((1..=g, any::<bool>()), 0..max_len).prop_map(|v| {
        v.into_iter()
            .map(|(i, neg)| Letter(if neg { -i } else { i }))
            .collect()
    })
}

fn reduced(g: i32, max_len: usize) -> impl Strategy<Value = ReducedWord> {
    letters(g, max_len).prop_map(free_reduce)
}

/// A word that is long enough to separate from others with high
/// probability, extended to at least `min_len` letters.
fn boundary_word(min_len: usize) -> impl Strategy<Value = BoundaryWordApprox> {
    reduced(2, 8).prop_map(move |w| {
        let mut w = w;
        while w.len() < min_len {
            let next = [Letter(1), Letter(2)]
                .into_iter()
                .find_map(|l| w.extended(l))
                .expect("one of two letters extends");
            w = next;
        }
        BoundaryWordApprox::FreeGroup(w)
    })
}

fn relabeled_graph() -> impl Strategy<Value = (MultiGraph, MultiGraph)> {
    let graphs = corpus();
    (0..graphs.len()).prop_flat_map(move |i| {
        let g = graphs[i].clone();
        let n = g.vertex_count();
        let e = g.edge_count();
        (
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            Just((0..e).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(any::<bool>(), e),
        )
            .prop_map(move |(vp, ep, flips)| (g.clone(), g.permuted(&vp, &ep, &flips)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn valency_sum_counts_darts((g, _) in relabeled_graph()) {
        let total: usize = g.vertices().map(|v| g.valency(v)).sum();
        prop_assert_eq!(total, g.dart_count());
        prop_assert_eq!(total, 2 * g.edge_count());
    }

    #[test]
    fn betti_is_relabeling_invariant((g, h) in relabeled_graph()) {
        prop_assert_eq!(betti(&g).unwrap(), betti(&h).unwrap());
        prop_assert!(iso_oracle(&g, &h).unwrap());
    }

    #[test]
    fn free_reduce_is_idempotent(w in letters(3, 16)) {
        let r = free_reduce(w.iter().copied());
        prop_assert!(r.len() <= w.len());
        prop_assert_eq!(free_reduce(r.letters().iter().copied()), r);
    }

    #[test]
    fn free_group_is_associative(a in reduced(3, 8), b in reduced(3, 8), c in reduced(3, 8)) {
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&a.inverse()), ReducedWord::empty());
    }

    #[test]
    fn ultrametric_inequality(a in boundary_word(10), b in boundary_word(10), c in boundary_word(10)) {
        if let (Ok(ab), Ok(bc), Ok(ac)) = (
            boundary_distance(&a, &b),
            boundary_distance(&b, &c),
            boundary_distance(&a, &c),
        ) {
            prop_assert!(ac <= ab.max(bc));
        }
    }

    #[test]
    fn cross_ratio_swaps(
        a in boundary_word(10),
        b in boundary_word(10),
        c in boundary_word(10),
        d in boundary_word(10),
    ) {
        if let Ok(x) = cross_ratio_log2(&a, &b, &c, &d) {
            prop_assert_eq!(cross_ratio_log2(&b, &a, &d, &c).unwrap(), x);
            prop_assert_eq!(cross_ratio_log2(&b, &a, &c, &d).unwrap(), -x);
            prop_assert_eq!(cross_ratio(&a, &b, &c, &d).unwrap(), (x as f64).exp2());
        }
    }

    #[test]
    fn measure_is_relabeling_invariant((g, h) in relabeled_graph()) {
        // the same abstract graph yields the same multiset of first-level
        // masses at matched origins
        let mut a: Vec<f64> = ps_measure_tree(&g, VertexId(0), 1, TreeMethod::Perron)
            .unwrap().level(1).map(|(_, m)| m).collect();
        a.sort_by(f64::total_cmp);
        let found = h.vertices().any(|o| {
            let mut b: Vec<f64> = ps_measure_tree(&h, o, 1, TreeMethod::Perron)
                .unwrap().level(1).map(|(_, m)| m).collect();
            b.sort_by(f64::total_cmp);
            a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12)
        });
        prop_assert!(found);
    }

    #[test]
    fn detail_coefficients_are_linear(
        i in 0usize..18,
        u in reduced(2, 3),
        v in reduced(2, 3),
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
    ) {
        let graphs: Vec<MultiGraph> = corpus().into_iter().filter(|g| betti(g).unwrap() == 2).collect();
        let g = &graphs[i % graphs.len()];
        let nu = pullback_measure(&canonical_presentation(g).unwrap(), 3, BoundaryMethod::GeodesicClassify).unwrap();
        let a = Symbol::indicator(u);
        let b = Symbol::indicator(v);
        let combined = a.scaled(alpha).plus(&b.scaled(beta));
        let ca = detail_coefficients(&a, &nu, 5).unwrap();
        let cb = detail_coefficients(&b, &nu, 5).unwrap();
        let cc = detail_coefficients(&combined, &nu, 5).unwrap();
        for n in 0..=5 {
            let expected = alpha * ca[n] + beta * cb[n];
            prop_assert!((cc[n] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
        // telescoping and positivity
        let total: f64 = ca.iter().sum();
        let t5 = cylinder_average_sum(&a, &nu, 5).unwrap();
        prop_assert!((total - t5).abs() <= 1e-12 * t5.abs().max(1.0));
        for n in 0..=5 {
            prop_assert!(cylinder_average_sum(&a, &nu, n).unwrap() >= 0.0);
        }
    }
}
