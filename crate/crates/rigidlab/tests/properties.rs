//! Property-based invariants spanning the whole stack: Laplacian
//! structure, eigensolver contracts, Kronecker spectra, stiffness
//! invariances, and the headline inequality on arbitrary frameworks.

use ndarray::{Array1, Array2};
use proptest::prelude::*;

use rigidlab::bounds;
use rigidlab::graph::Graph;
use rigidlab::linalg::{self, SymMatrix};
use rigidlab::rigidity::{Configuration, Framework};

/// All unordered pairs on `n` vertices, in lexicographic order.
fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    pairs
}

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs = all_pairs(n);
        let len = pairs.len();
        prop::collection::vec(any::<bool>(), len).prop_map(move |mask| {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .zip(&mask)
                .filter(|&(_, &keep)| keep)
                .map(|(&e, _)| e)
                .collect();
            Graph::new(n, &edges).unwrap()
        })
    })
}

fn framework_strategy(max_n: usize, max_d: usize) -> impl Strategy<Value = Framework> {
    (graph_strategy(max_n), 1..=max_d).prop_flat_map(|(g, d)| {
        let n = g.vertex_count();
        prop::collection::vec(-5.0f64..5.0, n * d).prop_map(move |coords| {
            let config =
                Configuration::new(Array2::from_shape_fn((n, d), |(i, k)| coords[i * d + k]))
                    .unwrap();
            Framework::new(g.clone(), config).unwrap()
        })
    })
}

fn symmetric_strategy(max_n: usize) -> impl Strategy<Value = SymMatrix> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(-10.0f64..10.0, n * n).prop_map(move |vals| {
            SymMatrix::new(Array2::from_shape_fn((n, n), |(i, j)| vals[i * n + j])).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_zero_eigenvalues_count_components(g in graph_strategy(8)) {
        let spec = linalg::eigh(&g.laplacian()).unwrap();
        prop_assert!(spec.value(0) >= -1e-9);
        let zeros = spec.values().iter().filter(|&&v| v.abs() <= 1e-8).count();
        prop_assert_eq!(zeros, g.connected_components());
    }

    #[test]
    fn connectivity_positive_iff_connected(g in graph_strategy(8)) {
        let (a1, fiedler) = g.algebraic_connectivity().unwrap();
        prop_assert_eq!(a1 > 1e-8, g.is_connected());
        prop_assert!((fiedler.dot(&fiedler) - 1.0).abs() <= 1e-9);
        prop_assert!(fiedler.sum().abs() <= 1e-7);
    }

    #[test]
    fn eigh_reconstructs_and_is_orthonormal(a in symmetric_strategy(12)) {
        let n = a.order();
        let spec = linalg::eigh(&a).unwrap();
        let v = spec.vectors();

        let vtv = v.t().dot(v);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((vtv[[i, j]] - expect).abs() <= 1e-10);
            }
        }
        let recon = v.dot(&Array2::from_diag(spec.values())).dot(&v.t());
        let bound = 1e-9 * (1.0 + a.max_abs());
        for (x, y) in recon.iter().zip(a.as_array().iter()) {
            prop_assert!((x - y).abs() <= bound);
        }
        for k in 1..n {
            prop_assert!(spec.value(k) >= spec.value(k - 1));
        }
    }

    #[test]
    fn kron_spectrum_is_pairwise_products(
        a in symmetric_strategy(4),
        b in symmetric_strategy(4),
    ) {
        let k = SymMatrix::new(linalg::kron(a.as_array(), b.as_array())).unwrap();
        let mut products: Vec<f64> = Vec::new();
        for la in linalg::eigh(&a).unwrap().values() {
            for lb in linalg::eigh(&b).unwrap().values() {
                products.push(la * lb);
            }
        }
        products.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let spec = linalg::eigh(&k).unwrap();
        let scale = 1.0 + a.max_abs() * b.max_abs();
        for (got, want) in spec.values().iter().zip(&products) {
            prop_assert!((got - want).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn orthonormalize_output_is_orthonormal(
        vecs in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 5), 1..7),
    ) {
        let inputs: Vec<Array1<f64>> = vecs.into_iter().map(Array1::from).collect();
        let basis = linalg::orthonormalize(&inputs, linalg::DROP_TOL);
        for (i, u) in basis.iter().enumerate() {
            prop_assert!((u.dot(u) - 1.0).abs() <= 1e-12);
            for w in &basis[i + 1..] {
                prop_assert!(u.dot(w).abs() <= 1e-10);
            }
        }
        // Every input lies in the span of the output.
        for v in &inputs {
            let r = linalg::project_out(v, &basis);
            prop_assert!(r.dot(&r).sqrt() <= 1e-8 * (1.0 + v.dot(v).sqrt()));
        }
    }

    #[test]
    fn stiffness_spectrum_invariant_under_gauge(fw in framework_strategy(6, 3)) {
        let base = linalg::eigh(&fw.stiffness_matrix()).unwrap();
        let d = fw.dimension();
        let t = Array1::from_elem(d, 1.75);
        let translated = Framework::new(
            fw.graph().clone(),
            fw.config().translated(&t).unwrap(),
        )
        .unwrap();
        let scaled = Framework::new(fw.graph().clone(), fw.config().scaled(3.0).unwrap()).unwrap();
        for variant in [translated, scaled] {
            let spec = linalg::eigh(&variant.stiffness_matrix()).unwrap();
            for k in 0..spec.len() {
                prop_assert!((spec.value(k) - base.value(k)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn stiffness_kernel_contains_trivial_basis(fw in framework_strategy(6, 3)) {
        let r = fw.rigidity_matrix();
        let basis = fw.trivial_basis().unwrap();
        prop_assert_eq!(basis.len(), fw.trivial_dim());
        for b in basis.vectors() {
            let residual = r.dot(b);
            prop_assert!(residual.iter().all(|&x| x.abs() <= 1e-9));
        }
    }

    #[test]
    fn rigidity_never_beats_connectivity(fw in framework_strategy(6, 4)) {
        let report = bounds::theorem_check(&fw).unwrap();
        prop_assert!(report.margin >= -1e-9, "{:?}", report);
    }

    #[test]
    fn interlacing_bound_holds(fw in framework_strategy(5, 3)) {
        for report in bounds::jordan_bound_check(&fw).unwrap() {
            prop_assert!(report.margin >= -1e-9, "{:?}", report);
        }
    }

    #[test]
    fn graph_text_roundtrip(g in graph_strategy(9)) {
        let parsed = Graph::from_text(&g.to_text()).unwrap();
        prop_assert_eq!(g, parsed);
    }

    #[test]
    fn configuration_csv_roundtrip_is_exact(
        coords in prop::collection::vec(-1e6f64..1e6, 2..12),
        d in 1usize..4,
    ) {
        prop_assume!(coords.len() % d == 0 && coords.len() / d >= 1);
        let config = Configuration::from_stacked(d, &Array1::from(coords)).unwrap();
        let parsed = Configuration::from_csv(&config.to_csv()).unwrap();
        prop_assert_eq!(&config, &parsed);
    }
}
