use molmip::camd::{check_structure, is_feasible, DesignSpace};
use molmip::enumerator::{brute_optimize, collect_feasible, ConstraintLevel, EnumOptions};
use molmip::gnn::random_model;
use molmip::graph::{Permutation, UndirectedGraph};
use molmip::indexing::{check_s1, check_s3, index_graph};
use molmip::milp::{build, check_assignment, embed_solution, BuildOptions, Variant};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random connected graph: a random tree plus extra edges.
fn connected_graph() -> impl Strategy<Value = UndirectedGraph> {
    (7usize..=8).prop_flat_map(|n| {
        let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|v| (0..v).boxed()).collect();
        let extra = proptest::collection::vec((0..n, 0..n), 0..=2 * n);
        let perm = Just((0..n).collect::<Vec<_>>()).prop_shuffle();
        (Just(n), parents, extra, perm).prop_map(|(n, parents, extra, perm)| {
            let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, &p)| (perm[i + 1], perm[p])).collect();
            edges.extend(extra.into_iter().filter(|(u, v)| u != v));
            edges.sort_unstable();
            edges.dedup();
            let mut g = UndirectedGraph::empty(n);
            for (u, v) in edges {
                g.set_edge(u, v, true);
            }
            g
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn indexing_satisfies_s1_and_s3_on_larger_graphs(g in connected_graph(), root in 0usize..8) {
        let root = root % g.n();
        let (idx, _) = index_graph(&g, root).unwrap();
        prop_assert_eq!(idx.index(root), 0);
        prop_assert!(check_s3(&g, &idx));
        prop_assert!(check_s1(&g, &idx));
    }
}

#[test]
fn symmetry_breaking_preserves_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for space in [DesignSpace::qm7(4).unwrap(), DesignSpace::qm9(4).unwrap()] {
        for _ in 0..3 {
            let model = random_model(&mut rng, space.num_features(), &[4, 3], &[3]);
            let (m1, y1) = brute_optimize(&space, &model, &EnumOptions::new(ConstraintLevel::S1)).unwrap();
            let (m3, y3) = brute_optimize(&space, &model, &EnumOptions::new(ConstraintLevel::S3)).unwrap();
            assert_eq!(y1, y3);
            assert!(check_structure(&space, &m1).unwrap().is_empty());
            assert!(is_feasible(&space, &m3, true).unwrap());
        }
    }
}

#[test]
fn variants_agree_on_every_feasible_molecule() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for n in 2..=3 {
        let space = DesignSpace::qm9(n).unwrap();
        let model = random_model(&mut rng, space.num_features(), &[3], &[]);
        let bigm = build(&space, &model, BuildOptions { variant: Variant::Bigm, symmetry: false }).unwrap();
        let bil = build(&space, &model, BuildOptions { variant: Variant::Bilinear, symmetry: false }).unwrap();
        for mol in collect_feasible(&space, &EnumOptions::new(ConstraintLevel::S1)).unwrap() {
            let rb = check_assignment(&bigm, &embed_solution(&bigm, &space, &mol, &model).unwrap()).unwrap();
            let rl = check_assignment(&bil, &embed_solution(&bil, &space, &mol, &model).unwrap()).unwrap();
            assert!(rb.passed() && rl.passed());
            assert_eq!(rb.objective, rl.objective);
        }
    }
}

#[test]
fn relabeled_molecules_keep_structure_feasibility() {
    let space = DesignSpace::qm7(4).unwrap();
    let mols = collect_feasible(&space, &EnumOptions::new(ConstraintLevel::S3)).unwrap();
    let p = Permutation::new(vec![3, 1, 0, 2]).unwrap();
    for mol in mols.iter().take(50) {
        // C1 and C5 refer to index order; everything else is label-free
        let v = check_structure(&space, &mol.permute(&p).unwrap()).unwrap();
        assert!(v.iter().all(|x| matches!(x.to_string().split('[').next(), Some("C1" | "C5"))), "{v:?}");
    }
}
