//! Property tests over randomly generated inputs.

use proptest::prelude::*;

use ssge_core::augment::{edge_drop, feature_mask};
use ssge_core::dense::DenseMatrix;
use ssge_core::encoder::batch_norm;
use ssge_core::eval::{ari, nmi, Partition};
use ssge_core::graph::{CsrGraph, EdgeList};
use ssge_core::objective::{gaussian_sphere_sample, uniformity_eval};
use ssge_core::rng::RngStream;

fn arb_edges(max_nodes: usize) -> impl Strategy<Value = (Vec<(usize, usize)>, usize)> {
    (2..max_nodes).prop_flat_map(|n| {
        let all_pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
        let cap = all_pairs.len().min(12);
        proptest::sample::subsequence(all_pairs, 0..=cap).prop_map(move |pairs| (pairs, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn built_graphs_are_canonical_and_symmetric((pairs, n) in arb_edges(24)) {
        let g = CsrGraph::<f64>::from_edges(&EdgeList::new(pairs.clone()), n).unwrap();
        prop_assert_eq!(g.nnz(), 2 * pairs.len());
        prop_assert!(g.is_symmetric());
        prop_assert!(!g.has_self_loop());
        // Strictly increasing columns per row.
        for u in 0..n {
            let (cols, _) = g.row(u);
            prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
        // Normalized graph: symmetric, self-loops everywhere.
        let norm = g.sym_normalize();
        prop_assert!(norm.is_symmetric());
        prop_assert_eq!(norm.nnz(), g.nnz() + n);
        prop_assert!(norm.has_self_loop());
    }

    #[test]
    fn augmentation_preserves_sizes_and_symmetry(
        (pairs, n) in arb_edges(20),
        p in 0.0f64..=1.0,
        seed in 0u64..1000,
    ) {
        let g = CsrGraph::<f64>::from_edges(&EdgeList::new(pairs), n).unwrap();
        let mut ds = RngStream::derive(seed, "edge-drop-view1", 0);
        let dropped = edge_drop(&g, p, &mut ds).unwrap();
        prop_assert_eq!(dropped.num_nodes(), g.num_nodes());
        prop_assert!(dropped.is_symmetric());
        prop_assert!(dropped.nnz() <= g.nnz());

        let x = DenseMatrix::<f64>::from_vec(n, 5, (0..n * 5).map(|v| v as f64).collect()).unwrap();
        let mut ms = RngStream::derive(seed, "feat-mask-view1", 0);
        let masked = feature_mask(&x, p, &mut ms).unwrap();
        prop_assert_eq!((masked.rows(), masked.cols()), (x.rows(), x.cols()));
    }

    #[test]
    fn batch_norm_output_is_standardized(
        rows in 4usize..32,
        cols in 1usize..6,
        seed in 0u64..500,
    ) {
        let mut s = RngStream::derive(seed, "bn-prop", 0);
        let mut h = DenseMatrix::<f64>::zeros(rows, cols);
        for v in h.data_mut() {
            *v = s.next_f64() * 10.0 - 5.0;
        }
        let (z, _) = batch_norm(&h);
        for j in 0..cols {
            let mean: f64 = (0..rows).map(|i| z.get(i, j)).sum::<f64>() / rows as f64;
            let var: f64 = (0..rows).map(|i| z.get(i, j).powi(2)).sum::<f64>() / (rows - 1) as f64;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!(var <= 1.0 + 1e-9); // v/(v+eps) never exceeds one
        }
    }

    #[test]
    fn uniformity_nonnegative_and_zero_only_at_identity(
        rows in 6usize..24,
        cols in 2usize..5,
        seed in 0u64..500,
    ) {
        let mut s = RngStream::derive(seed, "uni-prop", 0);
        let mut h = DenseMatrix::<f64>::zeros(rows, cols);
        for v in h.data_mut() {
            *v = s.next_f64() * 4.0 - 2.0;
        }
        let (z, _) = batch_norm(&h);
        let eval = uniformity_eval(&z, 1e-8, false).unwrap();
        prop_assert!(eval.value >= -1e-12);
        let eig_form: f64 = eval.eigenvalues.iter().map(|&l| (l.max(0.0).sqrt() - 1.0).powi(2)).sum();
        prop_assert!((eval.value - eig_form).abs() < 1e-9);
    }

    #[test]
    fn nmi_ari_relabel_invariance(labels in proptest::collection::vec(0usize..4, 2..40)) {
        let k = 4;
        let a = Partition::new(labels.clone(), k).unwrap();
        // Relabel by a fixed permutation of cluster ids.
        let perm = [2usize, 0, 3, 1];
        let b = Partition::new(labels.iter().map(|&l| perm[l]).collect(), k).unwrap();
        prop_assert!((nmi(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((ari(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_samples_have_unit_rows(count in 1usize..50, dim in 2usize..6, seed in 0u64..100) {
        let mut s = RngStream::derive(seed, "sphere-prop", 0);
        let z = gaussian_sphere_sample::<f64>(&mut s, count, dim).unwrap();
        for i in 0..count {
            let norm: f64 = z.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
        }
    }
}
